//! The residual-weighted update `R -> R^{1/2}(I - |u><u|)R^{1/2}` and the
//! chains it generates.
//!
//! A step is computed as the rank-one subtraction `R - |E><E|` with
//! `E = R^{1/2} u`; the two forms agree algebraically and the subtraction is
//! exactly Hermitian in floating point. The chain runner carries the
//! eigendecomposition of the current residual from one step to the next, so
//! each step costs one Hermitian eigendecomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::cvec;
use crate::psd::{eig_hermitian, CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig};

/// Maximum deviation of `|u|` from 1 accepted by [`phi_update`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Relative trace below which a residual counts as exactly zero.
pub const ZERO_TRACE_REL: f64 = 1e-12;

/// Lower bound on the relative eigenvalue floor used inside a chain.
pub const NOISE_FLOOR_REL: f64 = 1e-13;

/// Eigenvalue floor for a chain started from a matrix of norm `scale`.
///
/// Residual entries carry roundoff of order `eps * |R0|` from the
/// subtractions that produced them, so eigenvalues below this floor are
/// treated as zero for the whole chain. Taking square roots of them would
/// amplify roundoff to `sqrt(eps)` size.
pub fn noise_floor(tol: &ToleranceConfig, dim: usize, scale: f64) -> f64 {
    tol.rank_tol_for(dim).max(NOISE_FLOOR_REL) * scale.max(0.0)
}

/// One application of the update inside a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiStep {
    pub index: usize,
    #[serde(with = "cvec")]
    pub direction: CVector,
    /// `E_n = R_n^{1/2} u_n`.
    #[serde(with = "cvec")]
    pub residual_vector: CVector,
    /// `|E_n|^2`, equal to `<u_n, R_n u_n>`.
    pub step_energy: f64,
    pub residual_trace_after: f64,
    pub residual_opnorm_after: f64,
    /// Negative eigenvalue mass clamped to zero after this step.
    pub clamp_magnitude: f64,
    /// The direction was (numerically) in the kernel of `R_n`.
    pub zero_step: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxSteps,
    TraceBelowTol,
    OpNormBelowTol,
    Stagnation,
    ExactZero,
    /// The direction source reported nothing left to remove.
    SourceExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stagnation {
    /// Number of consecutive low-energy steps that triggers the stop.
    pub window: usize,
    pub energy_threshold: f64,
}

/// Finite stand-in for `n -> infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_steps: usize,
    /// Absolute trace threshold. `ExactZero` always fires at
    /// `ZERO_TRACE_REL * tr(R0)`; this adds a coarser stop on top.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opnorm_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stagnation: Option<Stagnation>,
}

impl StopRule {
    pub fn max_steps(max_steps: usize) -> Self {
        Self {
            max_steps,
            trace_tol: None,
            opnorm_tol: None,
            stagnation: None,
        }
    }

    pub fn with_trace_tol(mut self, t: f64) -> Self {
        self.trace_tol = Some(t);
        self
    }

    pub fn with_opnorm_tol(mut self, t: f64) -> Self {
        self.opnorm_tol = Some(t);
        self
    }

    pub fn with_stagnation(mut self, window: usize, energy_threshold: f64) -> Self {
        self.stagnation = Some(Stagnation {
            window,
            energy_threshold,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        for (name, v) in [("trace_tol", self.trace_tol), ("opnorm_tol", self.opnorm_tol)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
                }
            }
        }
        if let Some(s) = self.stagnation {
            if s.window == 0 || !(s.energy_threshold >= 0.0) {
                return Err(Error::InvalidConfig(
                    "stagnation window must be >= 1 and threshold >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// What a direction source sees when asked for the next direction.
pub struct ResidualState<'a> {
    pub step: usize,
    pub residual: &'a HermitianMatrix,
    pub spectrum: &'a PsdSpectrum,
    pub tol: &'a ToleranceConfig,
}

/// Supplies unit directions to [`run_chain`]. `Ok(None)` means exhausted.
pub trait DirectionSource {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>>;

    /// Whether every direction this source could offer is numerically in
    /// the kernel of the current residual. Checked after the stop rules and
    /// before `max_steps`.
    fn exhausted(&mut self, _state: &ResidualState<'_>) -> Result<bool> {
        Ok(false)
    }
}

impl<S: DirectionSource + ?Sized> DirectionSource for Box<S> {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>> {
        (**self).next_direction(state)
    }

    fn exhausted(&mut self, state: &ResidualState<'_>) -> Result<bool> {
        (**self).exhausted(state)
    }
}

/// Full record of a chain run. `r_final` is the finite surrogate for the
/// strong limit of the residuals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualChain {
    pub r0: HermitianMatrix,
    pub steps: Vec<PhiStep>,
    pub r_final: HermitianMatrix,
    pub stop_reason: StopReason,
    pub tolerances: ToleranceConfig,
}

pub(crate) struct Advance {
    pub next: HermitianMatrix,
    pub next_spectrum: PsdSpectrum,
    pub e: CVector,
    pub clamp: f64,
}

fn check_unit(u: &CVector) -> Result<()> {
    let norm = u.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL || !norm.is_finite() {
        return Err(Error::NotUnitVector { norm });
    }
    Ok(())
}

/// `R^{1/2} u` restricted to the numerical support of `R`; eigenvalues at or
/// below the rank cutoff contribute nothing.
pub(crate) fn support_sqrt_apply(
    spectrum: &PsdSpectrum,
    tol: &ToleranceConfig,
    u: &CVector,
) -> Result<CVector> {
    let cutoff = spectrum.rank_cutoff(tol);
    spectrum.map_apply(|l| if l > cutoff { l.sqrt() } else { 0.0 }, u)
}

pub(crate) fn advance(
    r: &HermitianMatrix,
    spectrum: &PsdSpectrum,
    u: &CVector,
    tol: &ToleranceConfig,
) -> Result<Advance> {
    if u.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: u.len(),
        });
    }
    check_unit(u)?;
    let e = support_sqrt_apply(spectrum, tol, u)?;
    let diff = r.minus_outer(&e)?;
    let (next, next_spectrum, clamp) = certify(diff, tol, spectrum.lambda_max(), spectrum.floor())?;

    #[cfg(debug_assertions)]
    {
        let triple = triple_product_with(spectrum, tol, u);
        let gap = (triple.as_matrix() - next.as_matrix()).norm();
        debug_assert!(
            gap <= 1e-10 * (1.0 + r.frobenius_norm()),
            "rank-one and congruence forms disagree by {gap:e}"
        );
    }

    Ok(Advance {
        next,
        next_spectrum,
        e,
        clamp,
    })
}

/// Certifies `a` as PSD against `-psd_tol * scale`. Negative eigenvalues
/// within tolerance are removed by adding back `sum |l_k| v_k v_k*` over the
/// negative part only, which perturbs `a` by exactly the clamped amount. The
/// returned spectrum is always that of the returned matrix.
fn certify(
    a: HermitianMatrix,
    tol: &ToleranceConfig,
    scale: f64,
    floor: f64,
) -> Result<(HermitianMatrix, PsdSpectrum, f64)> {
    let eigen = eig_hermitian(&a)?;
    let mut lift = None;
    for (k, &l) in eigen.values.iter().enumerate() {
        if l < 0.0 {
            let v = eigen.vector(k);
            let term = &v * v.adjoint() * crate::psd::C64::new(-l, 0.0);
            lift = Some(match lift {
                None => term,
                Some(acc) => acc + term,
            });
        }
    }
    let spectrum = PsdSpectrum::from_eigen(eigen, tol, scale)?;
    let clamp = spectrum.clamped_mass();
    match lift {
        None => Ok((a, spectrum.with_floor(floor), clamp)),
        Some(lift) => {
            let lifted = HermitianMatrix::symmetrized(a.into_matrix() + lift);
            let spectrum = PsdSpectrum::with_scale(&lifted, tol, scale)?.with_floor(floor);
            Ok((lifted, spectrum, clamp))
        }
    }
}

fn triple_product_with(spectrum: &PsdSpectrum, tol: &ToleranceConfig, u: &CVector) -> HermitianMatrix {
    let cutoff = spectrum.rank_cutoff(tol);
    let half = spectrum.map(|l| if l > cutoff { l.sqrt() } else { 0.0 });
    let h = half.as_matrix();
    let n = h.nrows();
    let proj = crate::psd::CMatrix::identity(n, n) - u * u.adjoint();
    HermitianMatrix::symmetrized(h * proj * h)
}

/// One residual-weighted update. Returns `(R_next, E)` with `E = R^{1/2} u`.
pub fn phi_update(
    r: &HermitianMatrix,
    u: &CVector,
    tol: &ToleranceConfig,
) -> Result<(HermitianMatrix, CVector)> {
    let spectrum = PsdSpectrum::new(r, tol)?;
    let step = advance(r, &spectrum, u, tol)?;
    Ok((step.next, step.e))
}

/// The congruence form `R^{1/2}(I - |u><u|)R^{1/2}`, for cross-checking.
pub fn phi_update_congruence(
    r: &HermitianMatrix,
    u: &CVector,
    tol: &ToleranceConfig,
) -> Result<HermitianMatrix> {
    if u.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: u.len(),
        });
    }
    check_unit(u)?;
    let spectrum = PsdSpectrum::new(r, tol)?;
    Ok(triple_product_with(&spectrum, tol, u))
}

fn stop_reason(
    r: &HermitianMatrix,
    spectrum: &PsdSpectrum,
    steps: &[PhiStep],
    stop: &StopRule,
    zero_trace: f64,
) -> Option<StopReason> {
    let tr = r.trace();
    let top = spectrum.lambda_max();
    if tr <= zero_trace || top <= 0.0 || top <= spectrum.floor() {
        return Some(StopReason::ExactZero);
    }
    if stop.trace_tol.is_some_and(|t| tr <= t) {
        return Some(StopReason::TraceBelowTol);
    }
    if stop.opnorm_tol.is_some_and(|t| spectrum.lambda_max() <= t) {
        return Some(StopReason::OpNormBelowTol);
    }
    if let Some(s) = stop.stagnation {
        if steps.len() >= s.window
            && steps[steps.len() - s.window..]
                .iter()
                .all(|st| st.step_energy < s.energy_threshold)
        {
            return Some(StopReason::Stagnation);
        }
    }
    if steps.len() >= stop.max_steps {
        return Some(StopReason::MaxSteps);
    }
    None
}

/// Starting residual and its spectrum. A slightly indefinite `R0` is lifted
/// as in [`certify`], and the spectrum is always that of the stored matrix so
/// replays and inverse verification see the same decomposition.
fn initial_state(r0: &HermitianMatrix, tol: &ToleranceConfig) -> Result<(HermitianMatrix, PsdSpectrum)> {
    let scale = eig_hermitian(r0)?.lambda_max();
    let (r, spectrum, _) = certify(r0.clone(), tol, scale, 0.0)?;
    let floor = noise_floor(tol, r.dim(), r.opnorm()?);
    Ok((r, spectrum.with_floor(floor)))
}

/// Iterates the update from `r0` until a stop rule fires.
pub fn run_chain<S: DirectionSource + ?Sized>(
    r0: &HermitianMatrix,
    directions: &mut S,
    stop: &StopRule,
    tol: &ToleranceConfig,
) -> Result<ResidualChain> {
    tol.validate()?;
    stop.validate()?;
    let (mut r, mut spectrum) = initial_state(r0, tol)?;
    let zero_trace = ZERO_TRACE_REL * r0.trace().max(0.0);
    let mut steps: Vec<PhiStep> = Vec::new();

    let stop_reason = loop {
        let n = steps.len();
        let state = ResidualState {
            step: n,
            residual: &r,
            spectrum: &spectrum,
            tol,
        };
        match stop_reason(&r, &spectrum, &steps, stop, zero_trace) {
            None | Some(StopReason::MaxSteps) if directions.exhausted(&state)? => {
                break StopReason::SourceExhausted
            }
            Some(reason) => break reason,
            None => {}
        }
        let u = directions
            .next_direction(&state)?
            .ok_or(Error::EmptyDirectionSource { step: n })?;
        let adv = advance(&r, &spectrum, &u, tol)?;
        let step_energy = adv.e.norm_squared();
        let zero_step = step_energy <= spectrum.rank_cutoff(tol);
        steps.push(PhiStep {
            index: n,
            direction: u,
            residual_vector: adv.e,
            step_energy,
            residual_trace_after: adv.next.trace(),
            residual_opnorm_after: adv.next_spectrum.lambda_max(),
            clamp_magnitude: adv.clamp,
            zero_step,
        });
        r = adv.next;
        spectrum = adv.next_spectrum;
    };

    Ok(ResidualChain {
        r0: r0.clone(),
        steps,
        r_final: r,
        stop_reason,
        tolerances: *tol,
    })
}

impl ResidualChain {
    pub fn dim(&self) -> usize {
        self.r0.dim()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn residual_vectors(&self) -> Vec<CVector> {
        self.steps.iter().map(|s| s.residual_vector.clone()).collect()
    }

    pub fn directions(&self) -> Vec<CVector> {
        self.steps.iter().map(|s| s.direction.clone()).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.step_energy).collect()
    }

    /// Replays the recorded directions and returns `R_0, ..., R_N`.
    /// The replay is bit-identical to the original run.
    pub fn residuals(&self) -> Result<Vec<HermitianMatrix>> {
        let tol = &self.tolerances;
        let (mut r, mut spectrum) = initial_state(&self.r0, tol)?;
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(r.clone());
        for step in &self.steps {
            let adv = advance(&r, &spectrum, &step.direction, tol)?;
            r = adv.next;
            spectrum = adv.next_spectrum;
            out.push(r.clone());
        }
        Ok(out)
    }
}

fn telescoping_gap(
    r0: &HermitianMatrix,
    rn: &HermitianMatrix,
    partial: &crate::psd::CMatrix,
) -> f64 {
    let lhs = r0.as_matrix() - rn.as_matrix();
    (lhs - partial).norm() / (1.0 + r0.frobenius_norm())
}

/// `||(R_0 - R_N) - sum_{n<N} E_n E_n*||_F / (1 + ||R_0||_F)`, with `R_N`
/// obtained by replaying the chain.
pub fn telescoping_defect(chain: &ResidualChain, n: usize) -> Result<f64> {
    if n > chain.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: chain.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let rn = if n == chain.len() {
        chain.r_final.clone()
    } else {
        chain.residuals()?.swap_remove(n)
    };
    let dim = chain.dim();
    let mut partial = crate::psd::CMatrix::zeros(dim, dim);
    for step in &chain.steps[..n] {
        let e = &step.residual_vector;
        partial += e * e.adjoint();
    }
    Ok(telescoping_gap(&chain.r0, &rn, &partial))
}

/// Telescoping defect for every prefix `N = 0..=len`, from a single replay.
pub fn telescoping_profile(chain: &ResidualChain) -> Result<Vec<f64>> {
    let residuals = chain.residuals()?;
    let dim = chain.dim();
    let mut partial = crate::psd::CMatrix::zeros(dim, dim);
    let mut out = Vec::with_capacity(residuals.len());
    out.push(0.0);
    for (step, rn) in chain.steps.iter().zip(&residuals[1..]) {
        let e = &step.residual_vector;
        partial += e * e.adjoint();
        out.push(telescoping_gap(&chain.r0, rn, &partial));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energies: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `|tr(R0) - tr(R_final) - sum |E_n|^2| / (1 + tr(R0))`.
    pub trace_identity_gap: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

pub fn energy_report(chain: &ResidualChain) -> EnergyReport {
    let energies = chain.energies();
    let partial_sums: Vec<f64> = energies
        .iter()
        .scan(0.0, |acc, &e| {
            *acc += e;
            Some(*acc)
        })
        .collect();
    let total = partial_sums.last().copied().unwrap_or(0.0);
    let tr0 = chain.r0.trace();
    let gap = (tr0 - chain.r_final.trace() - total).abs() / (1.0 + tr0);
    EnergyReport {
        energies,
        partial_sums,
        trace_identity_gap: gap,
    }
}

/// `(<x, (R_0 - R_final) x>, sum_n |<E_n, x>|^2)`.
pub fn quadratic_defect(chain: &ResidualChain, x: &CVector) -> Result<(f64, f64)> {
    let lhs = chain.r0.quadratic_form(x)? - chain.r_final.quadratic_form(x)?;
    let rhs = chain
        .steps
        .iter()
        .map(|s| s.residual_vector.dotc(x).norm_sqr())
        .sum();
    Ok((lhs, rhs))
}
