//! Machine-readable summaries of chains, frames and feature tables.

use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_report, telescoping_profile, ResidualChain, StopReason, StopRule};
use crate::error::Result;
use crate::frames::ParsevalFrame;
use crate::io::opt_cvec_list;
use crate::kernels::FeatureTable;
use crate::psd::{CMatrix, CVector, HermitianMatrix, ToleranceConfig};

/// Audit thresholds a report must meet to count as sound.
pub const AUDIT_TELESCOPING_MAX: f64 = 1e-9;
pub const AUDIT_TRACE_GAP_MAX: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub dim: usize,
    pub trace: f64,
    pub opnorm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub energy: f64,
    pub trace_after: f64,
    pub opnorm_after: f64,
    pub clamp: f64,
    pub zero_step: bool,
}

/// Recomputed identity checks embedded in every chain report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    /// Largest telescoping defect over all prefixes.
    pub telescoping_defect: f64,
    pub trace_identity_gap: f64,
    pub passed: bool,
}

impl Audit {
    pub fn of(chain: &ResidualChain) -> Result<Self> {
        let telescoping_defect = telescoping_profile(chain)?
            .into_iter()
            .fold(0.0_f64, f64::max);
        let trace_identity_gap = energy_report(chain).trace_identity_gap;
        Ok(Self {
            telescoping_defect,
            trace_identity_gap,
            passed: telescoping_defect <= AUDIT_TELESCOPING_MAX
                && trace_identity_gap <= AUDIT_TRACE_GAP_MAX,
        })
    }
}

impl Audit {
    /// Audit of an explicit list `R_0..R_N`, `E_0..E_{N-1}` taken at face
    /// value, without replaying any update.
    pub fn of_listed(rs: &[HermitianMatrix], es: &[CVector]) -> Result<Self> {
        let r0 = rs
            .first()
            .ok_or_else(|| crate::Error::Format("chain has no residuals".into()))?;
        if rs.len() != es.len() + 1 {
            return Err(crate::Error::Format(format!(
                "expected {} residuals for {} vectors, found {}",
                es.len() + 1,
                es.len(),
                rs.len()
            )));
        }
        let dim = r0.dim();
        let mut partial = CMatrix::zeros(dim, dim);
        let mut energy = 0.0;
        let mut telescoping_defect = 0.0_f64;
        for (e, rn) in es.iter().zip(&rs[1..]) {
            crate::psd::check_dim(dim, e.len())?;
            crate::psd::check_dim(dim, rn.dim())?;
            partial += e * e.adjoint();
            energy += e.norm_squared();
            let gap = (r0.as_matrix() - rn.as_matrix() - &partial).norm();
            telescoping_defect = telescoping_defect.max(gap / (1.0 + r0.frobenius_norm()));
        }
        let last = rs.last().expect("nonempty");
        let tr0 = r0.trace();
        let trace_identity_gap = (tr0 - last.trace() - energy).abs() / (1.0 + tr0);
        Ok(Self {
            telescoping_defect,
            trace_identity_gap,
            passed: telescoping_defect <= AUDIT_TELESCOPING_MAX
                && trace_identity_gap <= AUDIT_TRACE_GAP_MAX,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub r0: MatrixSummary,
    pub steps: Vec<StepRecord>,
    pub stop_reason: StopReason,
    pub total_energy: f64,
    pub final_trace: f64,
    pub stop_rule: StopRule,
    pub tolerances: ToleranceConfig,
    pub audit: Audit,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_cvec_list")]
    pub vectors: Option<Vec<CVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_cvec_list")]
    pub directions: Option<Vec<CVector>>,
}

impl ChainReport {
    pub fn new(chain: &ResidualChain, stop_rule: &StopRule, emit_vectors: bool) -> Result<Self> {
        let energies = energy_report(chain);
        Ok(Self {
            r0: MatrixSummary {
                dim: chain.dim(),
                trace: chain.r0.trace(),
                opnorm: chain.r0.opnorm()?,
            },
            steps: chain
                .steps
                .iter()
                .map(|s| StepRecord {
                    n: s.index,
                    energy: s.step_energy,
                    trace_after: s.residual_trace_after,
                    opnorm_after: s.residual_opnorm_after,
                    clamp: s.clamp_magnitude,
                    zero_step: s.zero_step,
                })
                .collect(),
            stop_reason: chain.stop_reason,
            total_energy: energies.total(),
            final_trace: chain.r_final.trace(),
            stop_rule: *stop_rule,
            tolerances: chain.tolerances,
            audit: Audit::of(chain)?,
            vectors: emit_vectors.then(|| chain.residual_vectors()),
            directions: emit_vectors.then(|| chain.directions()),
        })
    }
}

/// One row of the energy series export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub n: usize,
    pub energy: f64,
    pub partial_sum: f64,
    pub trace_after: f64,
}

pub fn energy_rows(chain: &ResidualChain) -> Vec<EnergyRow> {
    let report = energy_report(chain);
    chain
        .steps
        .iter()
        .zip(&report.partial_sums)
        .map(|(s, &partial_sum)| EnergyRow {
            n: s.index,
            energy: s.step_energy,
            partial_sum,
            trace_after: s.residual_trace_after,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub dim: usize,
    pub len: usize,
    pub certified: bool,
    pub parseval_defect: f64,
    pub stop_reason: StopReason,
    pub tolerances: ToleranceConfig,
    pub audit: Audit,
    #[serde(with = "crate::io::cvec_list")]
    pub vectors: Vec<CVector>,
}

impl FrameReport {
    pub fn new(p: &ParsevalFrame) -> Result<Self> {
        Ok(Self {
            dim: p.frame.dim,
            len: p.frame.len(),
            certified: p.certified,
            parseval_defect: p.parseval_defect,
            stop_reason: p.chain.stop_reason,
            tolerances: p.chain.tolerances,
            audit: Audit::of(&p.chain)?,
            vectors: p.frame.vectors.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub residual_gram_defect: f64,
    pub sup_defect: f64,
    pub visited: Vec<usize>,
    pub ratios: Vec<f64>,
    pub min_ratio: Option<f64>,
    pub skipped: Vec<usize>,
    pub stop_reason: Option<StopReason>,
    pub final_trace: Option<f64>,
    pub tolerances: ToleranceConfig,
}

impl FeatureSummary {
    pub fn new(t: &FeatureTable, tol: &ToleranceConfig) -> Self {
        Self {
            m: t.values.nrows(),
            n: t.num_features(),
            residual_gram_defect: t.residual_gram_defect,
            sup_defect: t.sup_defect,
            visited: t.visited.clone(),
            ratios: t.ratios.clone(),
            min_ratio: t.ratios.iter().copied().reduce(f64::min),
            skipped: t.skipped.clone(),
            stop_reason: t.chain.as_ref().map(|c| c.stop_reason),
            final_trace: t.chain.as_ref().map(|c| c.r_final.trace()),
            tolerances: *tol,
        }
    }
}
