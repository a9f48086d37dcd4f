//! Direction-selection policies.
//!
//! * greedy: top eigenvector of the current residual, `<u,Ru> = ||R||`;
//! * weak greedy: first pool candidate with `<u,Ru> >= c ||R||`;
//! * cyclic: `e_1, ..., e_d, e_1, ...`;
//! * random: i.i.d. uniform points on the complex unit sphere;
//! * explicit: a user-supplied list, consumed once.
//!
//! The random stream is ChaCha8 seeded with `seed_from_u64(seed)`; each
//! direction draws `2 * dim` standard normals (real part then imaginary part
//! per coordinate, coordinates in order) and normalizes. A seeded stream is
//! dense in the sphere almost surely, which is as far as a finite run can
//! honor a density hypothesis. No convergence rate is claimed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DirectionSource, ResidualState};
use crate::error::{Error, Result};
use crate::io::opt_cvec_list;
use crate::psd::{CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig, C64};

/// Unit-norm tolerance for user-supplied direction lists.
pub const LIST_UNIT_TOL: f64 = 1e-12;

/// Absolute slack (relative to `||R||`) when certifying `<u,Ru> >= c||R||`.
const CERTIFY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Greedy,
    WeakGreedy,
    #[serde(rename = "cyclic")]
    CyclicBasis,
    #[serde(rename = "random")]
    RandomSphere,
    #[serde(rename = "explicit")]
    ExplicitList,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, with = "opt_cvec_list", skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<CVector>>,
    #[serde(default, with = "opt_cvec_list", skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<CVector>>,
    /// Weak greedy only: use the exact greedy direction when no pool
    /// candidate qualifies instead of failing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback_to_greedy: bool,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            c: None,
            seed: None,
            pool: None,
            explicit: None,
            fallback_to_greedy: false,
        }
    }

    pub fn greedy() -> Self {
        Self::new(StrategyKind::Greedy)
    }

    pub fn weak_greedy(c: f64, pool: Vec<CVector>) -> Self {
        Self {
            c: Some(c),
            pool: Some(pool),
            ..Self::new(StrategyKind::WeakGreedy)
        }
    }

    pub fn cyclic() -> Self {
        Self::new(StrategyKind::CyclicBasis)
    }

    pub fn random(seed: u64) -> Self {
        Self {
            seed: Some(seed),
            ..Self::new(StrategyKind::RandomSphere)
        }
    }

    pub fn explicit(list: Vec<CVector>) -> Self {
        Self {
            explicit: Some(list),
            ..Self::new(StrategyKind::ExplicitList)
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.kind {
            StrategyKind::WeakGreedy => {
                let c = self
                    .c
                    .ok_or_else(|| Error::InvalidConfig("weak greedy needs c".into()))?;
                check_c(c)?;
                let pool = self.pool.as_deref().unwrap_or(&[]);
                if pool.is_empty() {
                    return Err(Error::InvalidConfig("weak greedy needs a candidate pool".into()));
                }
                check_unit_list(pool, dim)
            }
            StrategyKind::ExplicitList => {
                let list = self.explicit.as_deref().unwrap_or(&[]);
                if list.is_empty() {
                    return Err(Error::InvalidConfig("explicit strategy needs directions".into()));
                }
                check_unit_list(list, dim)
            }
            _ => Ok(()),
        }
    }

    /// Builds the direction source for a residual of dimension `dim`.
    pub fn build(&self, dim: usize) -> Result<Box<dyn DirectionSource>> {
        self.validate(dim)?;
        Ok(match self.kind {
            StrategyKind::Greedy => Box::new(Greedy),
            StrategyKind::WeakGreedy => {
                let mut src = WeakGreedy::new(
                    self.c.expect("validated"),
                    self.pool.clone().expect("validated"),
                )?;
                src.fallback_to_greedy = self.fallback_to_greedy;
                Box::new(src)
            }
            StrategyKind::CyclicBasis => Box::new(cyclic_basis_directions(dim)?),
            StrategyKind::RandomSphere => {
                Box::new(random_sphere_directions(dim, self.seed.unwrap_or(0))?)
            }
            StrategyKind::ExplicitList => {
                Box::new(ExplicitList::new(self.explicit.clone().expect("validated")))
            }
        })
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("c = {c} must lie in (0, 1]")))
    }
}

fn check_unit_list(list: &[CVector], dim: usize) -> Result<()> {
    for v in list {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if (v.norm() - 1.0).abs() > LIST_UNIT_TOL {
            return Err(Error::NotUnitVector { norm: v.norm() });
        }
    }
    Ok(())
}

fn greedy_from_spectrum(spectrum: &PsdSpectrum) -> Result<CVector> {
    let lmax = spectrum.lambda_max();
    if !(lmax > 0.0) {
        return Err(Error::ZeroOperator { opnorm: lmax.max(0.0) });
    }
    // Ties: lowest column index among eigenvalues within dim*eps of the top.
    let window = spectrum.dim() as f64 * f64::EPSILON * lmax;
    let k = spectrum
        .eigenvalues()
        .iter()
        .position(|&l| l >= lmax - window)
        .expect("top eigenvalue present");
    Ok(spectrum.eigen().vector(k))
}

/// Phase-normalized eigenvector of the largest eigenvalue.
pub fn greedy_direction(r: &HermitianMatrix, tol: &ToleranceConfig) -> Result<CVector> {
    greedy_from_spectrum(&PsdSpectrum::new(r, tol)?)
}

/// A weak-greedy selection together with the inequality it certifies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakGreedyPick {
    #[serde(with = "crate::io::cvec")]
    pub direction: CVector,
    /// Index into the pool, `None` when the greedy fallback was used.
    pub pool_index: Option<usize>,
    /// `<u, R u>`.
    pub rayleigh: f64,
    /// `||R||_2` at selection time.
    pub opnorm: f64,
}

impl WeakGreedyPick {
    pub fn ratio(&self) -> f64 {
        if self.opnorm > 0.0 {
            self.rayleigh / self.opnorm
        } else {
            1.0
        }
    }
}

fn screen_pool(
    r: &HermitianMatrix,
    opnorm: f64,
    c: f64,
    pool: &[CVector],
) -> Result<std::result::Result<WeakGreedyPick, f64>> {
    let mut best = 0.0_f64;
    for (i, u) in pool.iter().enumerate() {
        let rayleigh = r.quadratic_form(u)?;
        if rayleigh >= c * opnorm - CERTIFY_SLACK * opnorm {
            return Ok(Ok(WeakGreedyPick {
                direction: u.clone(),
                pool_index: Some(i),
                rayleigh,
                opnorm,
            }));
        }
        if opnorm > 0.0 {
            best = best.max(rayleigh / opnorm);
        }
    }
    Ok(Err(best))
}

/// First pool candidate with `<u,Ru> >= c ||R||`.
pub fn weak_greedy_direction(
    r: &HermitianMatrix,
    cfg: &StrategyConfig,
    tol: &ToleranceConfig,
) -> Result<WeakGreedyPick> {
    if cfg.kind != StrategyKind::WeakGreedy {
        return Err(Error::InvalidConfig("strategy kind is not weak-greedy".into()));
    }
    cfg.validate(r.dim())?;
    let c = cfg.c.expect("validated");
    let spectrum = PsdSpectrum::new(r, tol)?;
    screen_pool(r, spectrum.lambda_max(), c, cfg.pool.as_deref().expect("validated"))?
        .map_err(|best_ratio| Error::NoCandidateSatisfiesC { c, best_ratio })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy;

impl DirectionSource for Greedy {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>> {
        greedy_from_spectrum(state.spectrum).map(Some)
    }
}

/// Pool-screening weak greedy source. Keeps every certificate it issued.
#[derive(Clone, Debug)]
pub struct WeakGreedy {
    c: f64,
    pool: Vec<CVector>,
    pub fallback_to_greedy: bool,
    picks: Vec<WeakGreedyPick>,
}

impl WeakGreedy {
    pub fn new(c: f64, pool: Vec<CVector>) -> Result<Self> {
        check_c(c)?;
        if pool.is_empty() {
            return Err(Error::InvalidConfig("weak greedy needs a candidate pool".into()));
        }
        Ok(Self {
            c,
            pool,
            fallback_to_greedy: false,
            picks: Vec::new(),
        })
    }

    pub fn picks(&self) -> &[WeakGreedyPick] {
        &self.picks
    }
}

impl DirectionSource for WeakGreedy {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>> {
        let opnorm = state.spectrum.lambda_max();
        let pick = match screen_pool(state.residual, opnorm, self.c, &self.pool)? {
            Ok(pick) => pick,
            Err(_) if self.fallback_to_greedy => {
                let u = greedy_from_spectrum(state.spectrum)?;
                let rayleigh = state.residual.quadratic_form(&u)?;
                WeakGreedyPick {
                    direction: u,
                    pool_index: None,
                    rayleigh,
                    opnorm,
                }
            }
            Err(best_ratio) => {
                return Err(Error::NoCandidateSatisfiesC {
                    c: self.c,
                    best_ratio,
                })
            }
        };
        let u = pick.direction.clone();
        self.picks.push(pick);
        Ok(Some(u))
    }
}

fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// `e_1, ..., e_dim` repeated forever.
#[derive(Clone, Debug)]
pub struct CyclicBasis {
    dim: usize,
    next: usize,
}

pub fn cyclic_basis_directions(dim: usize) -> Result<CyclicBasis> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dim must be >= 1".into()));
    }
    Ok(CyclicBasis { dim, next: 0 })
}

impl Iterator for CyclicBasis {
    type Item = CVector;

    fn next(&mut self) -> Option<CVector> {
        let v = basis_vector(self.dim, self.next);
        self.next = (self.next + 1) % self.dim;
        Some(v)
    }
}

impl DirectionSource for CyclicBasis {
    fn next_direction(&mut self, _: &ResidualState<'_>) -> Result<Option<CVector>> {
        Ok(self.next())
    }
}

/// Uniform directions on the complex unit sphere from a seeded ChaCha8 stream.
#[derive(Clone, Debug)]
pub struct RandomSphere {
    dim: usize,
    rng: ChaCha8Rng,
}

pub fn random_sphere_directions(dim: usize, seed: u64) -> Result<RandomSphere> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dim must be >= 1".into()));
    }
    Ok(RandomSphere {
        dim,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl RandomSphere {
    /// A complex Gaussian vector (not normalized).
    pub fn gaussian(&mut self) -> CVector {
        let rng = &mut self.rng;
        CVector::from_iterator(
            self.dim,
            (0..self.dim).map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            }),
        )
    }
}

impl Iterator for RandomSphere {
    type Item = CVector;

    fn next(&mut self) -> Option<CVector> {
        loop {
            let g = self.gaussian();
            let n = g.norm();
            if n > 0.0 {
                return Some(g.unscale(n));
            }
        }
    }
}

impl DirectionSource for RandomSphere {
    fn next_direction(&mut self, _: &ResidualState<'_>) -> Result<Option<CVector>> {
        Ok(self.next())
    }
}

/// The first `size` directions of the seeded random stream, for use as a
/// weak-greedy candidate pool.
pub fn random_pool(dim: usize, size: usize, seed: u64) -> Result<Vec<CVector>> {
    Ok(random_sphere_directions(dim, seed)?.take(size).collect())
}

/// A fixed list of directions, consumed once.
#[derive(Clone, Debug)]
pub struct ExplicitList {
    list: std::vec::IntoIter<CVector>,
}

impl ExplicitList {
    pub fn new(list: Vec<CVector>) -> Self {
        Self {
            list: list.into_iter(),
        }
    }
}

impl DirectionSource for ExplicitList {
    fn next_direction(&mut self, _: &ResidualState<'_>) -> Result<Option<CVector>> {
        Ok(self.list.next())
    }
}

/// Test mode for the weaker exhaustion hypothesis: `enforced` supplies the
/// direction on every `period`-th step (starting with step 0) and `filler`
/// on the rest. Makes no stopping guarantee of its own.
pub struct Subsequence<A, B> {
    pub enforced: A,
    pub filler: B,
    pub period: usize,
}

impl<A: DirectionSource, B: DirectionSource> DirectionSource for Subsequence<A, B> {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>> {
        if self.period <= 1 || state.step.is_multiple_of(self.period) {
            self.enforced.next_direction(state)
        } else {
            self.filler.next_direction(state)
        }
    }
}
