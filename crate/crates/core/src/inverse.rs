//! Deciding whether a decreasing rank-one chain
//! `R_{n+1} = R_n - |E_n><E_n|` was produced by residual-weighted updates,
//! and recovering the unit directions that produced it.
//!
//! A step is realizable iff `E_n` lies in `ran(R_n^{1/2})` and
//! `<E_n, R_n^+ E_n> = 1`. The generating direction is then
//! `u_n = (R_n^+)^{1/2} E_n`, whose norm squared is exactly that
//! normalization value.
//!
//! Steps with `E_n = 0` satisfy the range condition vacuously but can never
//! satisfy the normalization. They are recorded as excluded and skipped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::ResidualChain;
use crate::error::{Error, Result};
use crate::io::{cvec_list, opt_cvec};
use crate::psd::{range_membership, CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig};

/// Relative tolerance for `R_{n+1} = R_n - E_n E_n*`.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvalidReason {
    /// `R_n` failed PSD certification.
    NotPsd { min_eigenvalue: f64 },
    /// `E_n` has a component outside the support of `R_n`.
    NotInRange { residual: f64 },
    /// `<E_n, R_n^+ E_n>` differs from 1.
    Normalization { value: f64 },
    /// Nonzero `E_n` removed from a numerically zero residual.
    ZeroResidual { energy: f64 },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::NotPsd { min_eigenvalue } => {
                write!(f, "residual not PSD (min eigenvalue {min_eigenvalue:.3e})")
            }
            InvalidReason::NotInRange { residual } => {
                write!(f, "E_n outside ran(R_n^(1/2)) (off-support norm {residual:.3e})")
            }
            InvalidReason::Normalization { value } => {
                write!(f, "<E_n, R_n^+ E_n> = {value:.12} != 1")
            }
            InvalidReason::ZeroResidual { energy } => {
                write!(f, "nonzero E_n (|E_n|^2 = {energy:.3e}) removed from zero residual")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    ValidChain,
    Invalid { step: usize, reason: InvalidReason },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepWitness {
    pub n: usize,
    pub range_membership: bool,
    pub range_residual: f64,
    /// `<E_n, R_n^+ E_n>`; absent for excluded steps.
    pub normalization_value: Option<f64>,
    #[serde(with = "opt_cvec")]
    pub recovered_u: Option<CVector>,
    pub excluded_zero_step: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainWitness {
    /// Per-step records up to and including the first failing step.
    pub steps: Vec<StepWitness>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl ChainWitness {
    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::ValidChain
    }
}

/// Chain-input file: `{"R": [matrix...], "E": [vector...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInput {
    #[serde(rename = "R")]
    pub residuals: Vec<HermitianMatrix>,
    #[serde(rename = "E", with = "cvec_list")]
    pub vectors: Vec<CVector>,
}

impl ChainInput {
    pub fn from_chain(chain: &ResidualChain) -> Result<Self> {
        Ok(Self {
            residuals: chain.residuals()?,
            vectors: chain.residual_vectors(),
        })
    }
}

fn check_shape(rs: &[HermitianMatrix], es: &[CVector]) -> Result<usize> {
    let dim = rs
        .first()
        .ok_or_else(|| Error::Format("chain needs at least R_0".into()))?
        .dim();
    if rs.len() != es.len() + 1 {
        return Err(Error::Format(format!(
            "chain with {} residual vectors needs {} matrices, found {}",
            es.len(),
            es.len() + 1,
            rs.len()
        )));
    }
    for r in rs {
        crate::psd::check_dim(dim, r.dim())?;
    }
    for e in es {
        crate::psd::check_dim(dim, e.len())?;
    }
    Ok(dim)
}

/// Checks `R_{n+1} = R_n - E_n E_n*` for every step.
pub fn check_consistency(rs: &[HermitianMatrix], es: &[CVector]) -> Result<()> {
    check_shape(rs, es)?;
    for (n, e) in es.iter().enumerate() {
        let expected = rs[n].minus_outer(e)?;
        let defect = (rs[n + 1].as_matrix() - expected.as_matrix()).norm();
        if defect > CONSISTENCY_TOL * (1.0 + rs[n].frobenius_norm()) {
            return Err(Error::InconsistentChain { step: n, defect });
        }
    }
    Ok(())
}

pub fn verify_chain(
    rs: &[HermitianMatrix],
    es: &[CVector],
    tol: &ToleranceConfig,
) -> Result<ChainWitness> {
    tol.validate()?;
    let dim = check_shape(rs, es)?;
    check_consistency(rs, es)?;

    let scale = rs[0].opnorm()?;
    let zero_cutoff = crate::dynamics::noise_floor(tol, dim, scale);
    let mut steps = Vec::with_capacity(es.len());

    for (n, e) in es.iter().enumerate() {
        let energy = e.norm_squared();
        let mut record = StepWitness {
            n,
            range_membership: false,
            range_residual: 0.0,
            normalization_value: None,
            recovered_u: None,
            excluded_zero_step: false,
        };
        let fail = |mut steps: Vec<StepWitness>, record: StepWitness, reason| {
            steps.push(record);
            Ok(ChainWitness {
                steps,
                verdict: Verdict::Invalid { step: n, reason },
            })
        };

        let spectrum = match PsdSpectrum::with_scale(&rs[n], tol, scale) {
            Ok(s) => s.with_floor(zero_cutoff),
            Err(Error::NotPsd { min_eigenvalue, .. }) => {
                return fail(steps, record, InvalidReason::NotPsd { min_eigenvalue })
            }
            Err(e) => return Err(e),
        };

        if spectrum.lambda_max() <= zero_cutoff {
            if energy <= zero_cutoff {
                record.range_membership = true;
                record.excluded_zero_step = true;
                steps.push(record);
                continue;
            }
            return fail(steps, record, InvalidReason::ZeroResidual { energy });
        }
        if energy <= spectrum.rank_cutoff(tol) {
            record.range_membership = true;
            record.excluded_zero_step = true;
            steps.push(record);
            continue;
        }

        let (inside, residual) = range_membership(&spectrum, e, tol)?;
        record.range_membership = inside;
        record.range_residual = residual;
        if !inside {
            return fail(steps, record, InvalidReason::NotInRange { residual });
        }

        let value = e.dotc(&spectrum.pinv_apply(tol, e)?).re;
        record.normalization_value = Some(value);
        record.recovered_u = Some(spectrum.pinv_sqrt_apply(tol, e)?);
        if (value - 1.0).abs() > tol.norm_tol {
            return fail(steps, record, InvalidReason::Normalization { value });
        }
        steps.push(record);
    }

    Ok(ChainWitness {
        steps,
        verdict: Verdict::ValidChain,
    })
}

/// `u_n = (R_n^+)^{1/2} E_n` for every step; `None` marks excluded zero
/// steps, where the direction is not determined.
pub fn recover_directions(
    rs: &[HermitianMatrix],
    es: &[CVector],
    tol: &ToleranceConfig,
) -> Result<Vec<Option<CVector>>> {
    let witness = verify_chain(rs, es, tol)?;
    match witness.verdict {
        Verdict::ValidChain => Ok(witness.steps.into_iter().map(|s| s.recovered_u).collect()),
        Verdict::Invalid { step, reason } => Err(Error::InvalidChain { step, reason }),
    }
}
