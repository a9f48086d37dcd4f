//! Iterative kernel feature maps at sample level.
//!
//! For sample points `x_1..x_m` with Gram matrix `G`, the kernel sections are
//! modeled in `C^m` by `kappa_i = G^{1/2} e_i`, which reproduces every
//! pairwise inner product: `<kappa_i, kappa_j> = G[i][j]`. The residual chain
//! runs from `R0 = I_m` with directions `kappa_i / |kappa_i|`, and the
//! features `F[i][n] = <kappa_i, E_n>` satisfy
//!
//! ```text
//! G - F F* = (<kappa_i, R_final kappa_j>)_ij
//! ```
//!
//! exactly, because `sum E_n E_n* = I - R_final`. Exhaustion here certifies
//! the decomposition on the sample subspace only.
//!
//! Gaussian convention: `K(x, y) = exp(-|x - y|^2 / (2 sigma^2))`.
//! Polynomial: `K(x, y) = (<x, y> + offset)^degree`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_chain, DirectionSource, ResidualChain, ResidualState, StopRule};
use crate::error::{Error, Result};
use crate::psd::{CMatrix, CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Gaussian {
        sigma: f64,
    },
    #[serde(rename = "poly")]
    Polynomial {
        degree: u32,
        #[serde(default)]
        offset: f64,
    },
    Linear,
    #[serde(rename = "explicit")]
    ExplicitGram { gram: HermitianMatrix },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Gaussian { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidKernelParams(format!("gaussian bandwidth {sigma} must be > 0")),
            ),
            Kernel::Polynomial { degree, offset } if *degree < 1 || !(*offset >= 0.0) => {
                Err(Error::InvalidKernelParams(format!(
                    "polynomial kernel needs degree >= 1 and offset >= 0 (got {degree}, {offset})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Evaluates a built-in kernel. Not defined for explicit Gram matrices.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let dot = || x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        match self {
            Kernel::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-d2 / (2.0 * sigma * sigma)).exp())
            }
            Kernel::Polynomial { degree, offset } => Ok((dot() + offset).powi(*degree as i32)),
            Kernel::Linear => Ok(dot()),
            Kernel::ExplicitGram { .. } => Err(Error::InvalidKernelParams(
                "explicit Gram matrices cannot be evaluated pointwise".into(),
            )),
        }
    }
}

/// `G[i][j] = K(x_i, x_j)`, certified PSD within `psd_tol`.
pub fn gram_matrix(
    kernel: &Kernel,
    points: &[Vec<f64>],
    tol: &ToleranceConfig,
) -> Result<HermitianMatrix> {
    kernel.validate()?;
    let g = match kernel {
        Kernel::ExplicitGram { gram } => {
            if !points.is_empty() && points.len() != gram.dim() {
                return Err(Error::DimensionMismatch {
                    expected: gram.dim(),
                    found: points.len(),
                });
            }
            gram.clone()
        }
        _ => {
            let m = points.len();
            if m == 0 {
                return Err(Error::InvalidConfig("need at least one sample point".into()));
            }
            let d = points[0].len();
            if let Some(p) = points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            let mut g = CMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let k = C64::new(kernel.eval(&points[i], &points[j])?, 0.0);
                    g[(i, j)] = k;
                    g[(j, i)] = k;
                }
            }
            HermitianMatrix::new(g)?
        }
    };
    PsdSpectrum::new(&g, tol)?;
    Ok(g)
}

/// `kappa_i = G^{1/2} e_i`, the columns of the PSD square root.
pub fn embed_sections(g: &HermitianMatrix, tol: &ToleranceConfig) -> Result<Vec<CVector>> {
    let root = PsdSpectrum::new(g, tol)?.sqrt();
    Ok(root
        .as_matrix()
        .column_iter()
        .map(|c| c.into_owned())
        .collect())
}

#[derive(Clone, Debug)]
pub struct KernelModel {
    pub points: Vec<Vec<f64>>,
    pub kernel: Kernel,
    pub gram: HermitianMatrix,
    pub sections: Vec<CVector>,
}

impl KernelModel {
    pub fn new(kernel: Kernel, points: Vec<Vec<f64>>, tol: &ToleranceConfig) -> Result<Self> {
        let gram = gram_matrix(&kernel, &points, tol)?;
        let sections = embed_sections(&gram, tol)?;
        Ok(Self {
            points,
            kernel,
            gram,
            sections,
        })
    }

    pub fn len(&self) -> usize {
        self.gram.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The matrix whose columns are the sections, i.e. `G^{1/2}`.
    pub fn section_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.sections)
    }
}

/// Order in which sample points are visited.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Active indices in order, repeated.
    Cyclic,
    /// Index maximizing `<kappa_i, R_n kappa_i> / |kappa_i|^2`.
    Greedy,
    /// A fixed index list, consumed once.
    Explicit(Vec<usize>),
}

struct SectionSource {
    units: Vec<Option<CVector>>,
    active: Vec<usize>,
    schedule: Schedule,
    cursor: usize,
    visited: Vec<usize>,
    ratios: Vec<f64>,
    /// Rayleigh quotients of the active sections against the current residual.
    scores: Option<(usize, Vec<f64>)>,
}

impl SectionSource {
    fn scores(&mut self, state: &ResidualState<'_>) -> Result<&[f64]> {
        if self.scores.as_ref().is_none_or(|(step, _)| *step != state.step) {
            let s = self
                .active
                .iter()
                .map(|&i| state.residual.quadratic_form(self.units[i].as_ref().expect("active")))
                .collect::<Result<Vec<_>>>()?;
            self.scores = Some((state.step, s));
        }
        Ok(&self.scores.as_ref().expect("filled").1)
    }

    fn pick(&mut self, state: &ResidualState<'_>) -> Result<Option<usize>> {
        match &self.schedule {
            Schedule::Cyclic => {
                let i = self.active[self.cursor % self.active.len()];
                self.cursor += 1;
                Ok(Some(i))
            }
            Schedule::Greedy => {
                let mut best: Option<(usize, f64)> = None;
                let scores = self.scores(state)?.to_vec();
                for (&i, score) in self.active.iter().zip(scores) {
                    if best.is_none_or(|(_, b)| score > b) {
                        best = Some((i, score));
                    }
                }
                Ok(best.map(|(i, _)| i))
            }
            Schedule::Explicit(list) => {
                while self.cursor < list.len() {
                    let i = list[self.cursor];
                    self.cursor += 1;
                    if self.units[i].is_some() {
                        return Ok(Some(i));
                    }
                }
                Ok(None)
            }
        }
    }
}

impl DirectionSource for SectionSource {
    fn next_direction(&mut self, state: &ResidualState<'_>) -> Result<Option<CVector>> {
        let Some(i) = self.pick(state)? else {
            return Ok(None);
        };
        let u = self.units[i].clone().expect("active");
        let opnorm = state.spectrum.lambda_max();
        let rayleigh = state.residual.quadratic_form(&u)?;
        self.visited.push(i);
        self.ratios.push(if opnorm > 0.0 { rayleigh / opnorm } else { 0.0 });
        Ok(Some(u))
    }

    /// All sections lie numerically in the kernel of `R_n`, so the defect
    /// `<kappa_i, R_n kappa_j>` vanishes. Explicit schedules run to the end
    /// of their list instead.
    fn exhausted(&mut self, state: &ResidualState<'_>) -> Result<bool> {
        if matches!(self.schedule, Schedule::Explicit(_)) {
            return Ok(false);
        }
        let floor = state.spectrum.floor();
        Ok(self.scores(state)?.iter().all(|&s| s <= floor))
    }
}

/// Extracted features `F[i][n] = E_n(x_i)`.
#[derive(Clone, Debug)]
pub struct FeatureTable {
    /// `m x N`.
    pub values: CMatrix,
    /// `|G - F F*|_F / (1 + |G|_F)`.
    pub residual_gram_defect: f64,
    /// `max_ij |G - F F*|`.
    pub sup_defect: f64,
    /// Sample index used at each step.
    pub visited: Vec<usize>,
    /// Achieved weak-greedy ratio `<u_n, R_n u_n> / |R_n|` at each step.
    pub ratios: Vec<f64>,
    /// Indices whose sections are numerically zero and were never used.
    pub skipped: Vec<usize>,
    pub chain: Option<ResidualChain>,
}

impl FeatureTable {
    /// Table with no features for a sample of size `m`.
    pub fn empty(g: &HermitianMatrix) -> Self {
        Self {
            values: CMatrix::zeros(g.dim(), 0),
            residual_gram_defect: g.frobenius_norm() / (1.0 + g.frobenius_norm()),
            sup_defect: g.max_abs(),
            visited: Vec::new(),
            ratios: Vec::new(),
            skipped: Vec::new(),
            chain: None,
        }
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    fn gram_residual(g: &HermitianMatrix, f: &CMatrix) -> CMatrix {
        g.as_matrix() - f * f.adjoint()
    }

    /// Frobenius Gram defect using only the first `n` features.
    pub fn gram_defect_prefix(&self, g: &HermitianMatrix, n: usize) -> f64 {
        let f = self.values.columns(0, n.min(self.num_features())).into_owned();
        Self::gram_residual(g, &f).norm() / (1.0 + g.frobenius_norm())
    }
}

pub fn kernel_feature_chain(
    model: &KernelModel,
    schedule: &Schedule,
    stop: &StopRule,
    tol: &ToleranceConfig,
) -> Result<FeatureTable> {
    let m = model.len();
    let g_spec = PsdSpectrum::new(&model.gram, tol)?;
    let cutoff = g_spec.rank_cutoff(tol);
    let mut skipped = Vec::new();
    let units: Vec<Option<CVector>> = model
        .sections
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let diag = model.gram.as_matrix()[(i, i)].re;
            if diag <= cutoff || k.norm() == 0.0 {
                skipped.push(i);
                None
            } else {
                Some(k.unscale(k.norm()))
            }
        })
        .collect();
    let active: Vec<usize> = (0..m).filter(|&i| units[i].is_some()).collect();

    if let Schedule::Explicit(list) = schedule {
        if let Some(&bad) = list.iter().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index: bad, len: m });
        }
        if !list.iter().any(|&i| units[i].is_some()) {
            return Err(Error::EmptySchedule);
        }
    }
    if active.is_empty() {
        return Err(Error::EmptySchedule);
    }

    let mut source = SectionSource {
        units,
        active,
        schedule: schedule.clone(),
        cursor: 0,
        visited: Vec::new(),
        ratios: Vec::new(),
        scores: None,
    };
    let mut rule = *stop;
    if let Schedule::Explicit(list) = schedule {
        let usable = list.iter().filter(|&&i| source.units[i].is_some()).count();
        rule.max_steps = rule.max_steps.min(usable);
    }
    let chain = run_chain(&HermitianMatrix::identity(m), &mut source, &rule, tol)?;

    let kmat = model.section_matrix();
    let n = chain.len();
    let mut values = CMatrix::zeros(m, n);
    for (col, step) in chain.steps.iter().enumerate() {
        // F[i][n] = <kappa_i, E_n>
        let f = kmat.adjoint() * &step.residual_vector;
        values.set_column(col, &f);
    }
    let resid = FeatureTable::gram_residual(&model.gram, &values);
    let residual_gram_defect = resid.norm() / (1.0 + model.gram.frobenius_norm());
    let sup_defect = resid.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    Ok(FeatureTable {
        values,
        residual_gram_defect,
        sup_defect,
        visited: source.visited,
        ratios: source.ratios,
        skipped,
        chain: Some(chain),
    })
}

/// `max_ij |G[i][j] - sum_n F[i][n] conj(F[j][n])|`.
pub fn kernel_reconstruction_error(model: &KernelModel, table: &FeatureTable) -> Result<f64> {
    crate::psd::check_dim(model.len(), table.values.nrows())?;
    let resid = FeatureTable::gram_residual(&model.gram, &table.values);
    Ok(resid.iter().fold(0.0_f64, |a, z| a.max(z.norm())))
}

/// `|(G - F F*) - (<kappa_i, R_final kappa_j>)|_F / (1 + |G|_F)`.
pub fn kernel_defect_identity_gap(model: &KernelModel, table: &FeatureTable) -> Result<f64> {
    crate::psd::check_dim(model.len(), table.values.nrows())?;
    let chain = table
        .chain
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("feature table carries no chain".into()))?;
    let k = model.section_matrix();
    let via_residual = k.adjoint() * chain.r_final.as_matrix() * &k;
    let resid = FeatureTable::gram_residual(&model.gram, &table.values);
    Ok((resid - via_residual).norm() / (1.0 + model.gram.frobenius_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StopReason;

    fn close(a: &CMatrix, b: &CMatrix, eps: f64) -> bool {
        (a - b).norm() <= eps
    }

    #[test]
    fn gram_examples() {
        let tol = ToleranceConfig::default();
        let g = gram_matrix(&Kernel::Linear, &[vec![1.0, 0.0], vec![0.0, 1.0]], &tol).unwrap();
        assert_eq!(g, HermitianMatrix::identity(2));

        let g = gram_matrix(&Kernel::Gaussian { sigma: 0.3 }, &[vec![4.2]], &tol).unwrap();
        assert_eq!(g, HermitianMatrix::identity(1));

        let g = gram_matrix(&Kernel::Gaussian { sigma: 1.0 }, &[vec![0.0], vec![1.0]], &tol)
            .unwrap();
        let off = (-0.5_f64).exp();
        assert_eq!(g, HermitianMatrix::from_real(2, &[1.0, off, off, 1.0]).unwrap());

        let g = gram_matrix(
            &Kernel::Polynomial { degree: 2, offset: 1.0 },
            &[vec![1.0, 2.0], vec![0.5, -1.0]],
            &tol,
        )
        .unwrap();
        // (1*0.5 + 2*(-1) + 1)^2 = 0.25
        assert!((g.as_matrix()[(0, 1)].re - 0.25).abs() < 1e-15);
        assert!((g.as_matrix()[(0, 0)].re - 36.0).abs() < 1e-12);
    }

    #[test]
    fn gram_errors() {
        let tol = ToleranceConfig::default();
        assert!(matches!(
            gram_matrix(&Kernel::Gaussian { sigma: 0.0 }, &[vec![0.0]], &tol),
            Err(Error::InvalidKernelParams(_))
        ));
        assert!(matches!(
            gram_matrix(&Kernel::Polynomial { degree: 0, offset: 1.0 }, &[vec![0.0]], &tol),
            Err(Error::InvalidKernelParams(_))
        ));
        let bad = HermitianMatrix::from_real(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            gram_matrix(&Kernel::ExplicitGram { gram: bad }, &[], &tol),
            Err(Error::NotPsd { .. })
        ));
        assert!(gram_matrix(&Kernel::Linear, &[vec![0.0], vec![0.0, 1.0]], &tol).is_err());
        assert!(gram_matrix(&Kernel::Linear, &[], &tol).is_err());
    }

    #[test]
    fn section_examples() {
        let tol = ToleranceConfig::default();
        let s = embed_sections(&HermitianMatrix::identity(3), &tol).unwrap();
        for (i, k) in s.iter().enumerate() {
            assert_eq!(k.iter().position(|z| z.re == 1.0), Some(i));
        }
        let s = embed_sections(&HermitianMatrix::from_diagonal(&[4.0, 1.0]), &tol).unwrap();
        assert!((s[0][0].re - 2.0).abs() < 1e-15 && (s[1][1].re - 1.0).abs() < 1e-15);

        let g = HermitianMatrix::from_real(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let s = embed_sections(&g, &tol).unwrap();
        let d = (1.5_f64.sqrt() + 0.5_f64.sqrt()) / 2.0;
        let o = (1.5_f64.sqrt() - 0.5_f64.sqrt()) / 2.0;
        assert!((s[0][0].re - d).abs() < 1e-14 && (s[0][1].re - o).abs() < 1e-14);
        assert!((s[0].dotc(&s[1]).re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn duplicate_points_stop_when_sections_are_exhausted() {
        let tol = ToleranceConfig::default();
        let pts = vec![vec![0.0], vec![0.0], vec![1.0]];
        let model = KernelModel::new(Kernel::Gaussian { sigma: 1.0 }, pts, &tol).unwrap();
        let table =
            kernel_feature_chain(&model, &Schedule::Greedy, &StopRule::max_steps(10_000), &tol)
                .unwrap();
        let chain = table.chain.as_ref().unwrap();
        assert_eq!(chain.stop_reason, StopReason::SourceExhausted);
        assert!(table.num_features() < 1000);
        assert!(table.residual_gram_defect <= 1e-12);
        // R stays the identity on ker G.
        assert!(chain.r_final.trace() >= 1.0 - 1e-12);
        let f = &table.values;
        assert!((f.row(0) - f.row(1)).norm() <= 1e-12);
    }

    #[test]
    fn orthonormal_sections_cyclic() {
        let tol = ToleranceConfig::default();
        let model = KernelModel::new(Kernel::Linear, vec![vec![1.0, 0.0], vec![0.0, 1.0]], &tol)
            .unwrap();
        let t = kernel_feature_chain(&model, &Schedule::Cyclic, &StopRule::max_steps(10), &tol)
            .unwrap();
        assert_eq!(t.num_features(), 2);
        assert!(close(&t.values, &CMatrix::identity(2, 2), 1e-15));
        assert_eq!(t.residual_gram_defect, 0.0);
    }

    #[test]
    fn scalar_case() {
        let tol = ToleranceConfig::default();
        let gram = HermitianMatrix::from_diagonal(&[2.5]);
        let model = KernelModel::new(Kernel::ExplicitGram { gram }, vec![], &tol).unwrap();
        let t = kernel_feature_chain(&model, &Schedule::Greedy, &StopRule::max_steps(10), &tol)
            .unwrap();
        assert_eq!(t.num_features(), 1);
        assert!((t.values[(0, 0)].re - 2.5_f64.sqrt()).abs() < 1e-15);
        assert!(t.residual_gram_defect <= 1e-12);
        assert!(kernel_reconstruction_error(&model, &t).unwrap() <= 1e-12);
    }

    #[test]
    fn reconstruction_error_of_empty_table() {
        let tol = ToleranceConfig::default();
        let gram = HermitianMatrix::zeros(2);
        let model = KernelModel::new(Kernel::ExplicitGram { gram: gram.clone() }, vec![], &tol)
            .unwrap();
        assert_eq!(kernel_reconstruction_error(&model, &FeatureTable::empty(&gram)).unwrap(), 0.0);
        assert!(matches!(
            kernel_feature_chain(&model, &Schedule::Greedy, &StopRule::max_steps(3), &tol),
            Err(Error::EmptySchedule)
        ));

        let gram = HermitianMatrix::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let model = KernelModel::new(Kernel::ExplicitGram { gram: gram.clone() }, vec![], &tol)
            .unwrap();
        assert_eq!(kernel_reconstruction_error(&model, &FeatureTable::empty(&gram)).unwrap(), 2.0);

        let one = HermitianMatrix::identity(1);
        let model = KernelModel::new(Kernel::ExplicitGram { gram: one }, vec![], &tol).unwrap();
        let t = kernel_feature_chain(&model, &Schedule::Cyclic, &StopRule::max_steps(3), &tol)
            .unwrap();
        assert_eq!(kernel_reconstruction_error(&model, &t).unwrap(), 0.0);
    }

    #[test]
    fn zero_sections_are_skipped() {
        let tol = ToleranceConfig::default();
        let gram = HermitianMatrix::from_diagonal(&[1.0, 0.0, 2.0]);
        let model = KernelModel::new(Kernel::ExplicitGram { gram }, vec![], &tol).unwrap();
        let t = kernel_feature_chain(&model, &Schedule::Cyclic, &StopRule::max_steps(2), &tol)
            .unwrap();
        assert_eq!(t.skipped, vec![1]);
        assert_eq!(t.visited, vec![0, 2]);
        assert!(t.residual_gram_defect < 1e-15);
    }

    #[test]
    fn explicit_schedule() {
        let tol = ToleranceConfig::default();
        let model = KernelModel::new(
            Kernel::Gaussian { sigma: 0.5 },
            vec![vec![0.0], vec![0.4], vec![1.0]],
            &tol,
        )
        .unwrap();
        let t = kernel_feature_chain(
            &model,
            &Schedule::Explicit(vec![2, 0]),
            &StopRule::max_steps(10),
            &tol,
        )
        .unwrap();
        assert_eq!(t.visited, vec![2, 0]);
        assert!(kernel_defect_identity_gap(&model, &t).unwrap() <= 1e-12);
        assert!(matches!(
            kernel_feature_chain(&model, &Schedule::Explicit(vec![5]), &StopRule::max_steps(3), &tol),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            kernel_feature_chain(&model, &Schedule::Explicit(vec![]), &StopRule::max_steps(3), &tol),
            Err(Error::EmptySchedule)
        ));
    }

    #[test]
    fn kernel_config_json() {
        let k: Kernel = serde_json::from_str(r#"{"kind": "gaussian", "sigma": 0.7}"#).unwrap();
        assert_eq!(k, Kernel::Gaussian { sigma: 0.7 });
        let k: Kernel = serde_json::from_str(r#"{"kind": "poly", "degree": 3}"#).unwrap();
        assert_eq!(k, Kernel::Polynomial { degree: 3, offset: 0.0 });
        let k: Kernel = serde_json::from_str(
            r#"{"kind": "explicit", "gram": {"dim": 1, "real": [3]}}"#,
        )
        .unwrap();
        assert!(matches!(k, Kernel::ExplicitGram { .. }));
    }
}
