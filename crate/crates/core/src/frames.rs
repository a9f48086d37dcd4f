//! Frame-theoretic view of extracted residual vectors.
//!
//! For a family `{E_n}` the analysis operator is `x -> (<E_n, x>)_n` and the
//! frame operator is `S = sum |E_n><E_n|`. When the family comes from a chain
//! started at `R0`, `S = R0 - R_final`; the chain exhausts `R0` exactly when
//! `S = R0`, which at finite dimension is an operator identity that can be
//! measured directly (see [`parseval_defect`]).

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_chain, DirectionSource, ResidualChain, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::io::cvec_list;
use crate::psd::{check_dim, CMatrix, CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig, C64};

/// Parseval defect at or below which a frame is certified.
pub const PARSEVAL_CERT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSystem {
    pub dim: usize,
    #[serde(with = "cvec_list")]
    pub vectors: Vec<CVector>,
    pub source: String,
}

impl FrameSystem {
    pub fn new(dim: usize, vectors: Vec<CVector>, source: impl Into<String>) -> Result<Self> {
        for v in &vectors {
            check_dim(dim, v.len())?;
        }
        Ok(Self {
            dim,
            vectors,
            source: source.into(),
        })
    }

    pub fn from_chain(chain: &ResidualChain, source: impl Into<String>) -> Self {
        Self {
            dim: chain.dim(),
            vectors: chain.residual_vectors(),
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// First `n` vectors.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            dim: self.dim,
            vectors: self.vectors[..n.min(self.len())].to_vec(),
            source: self.source.clone(),
        }
    }

    /// Indices of (numerically) zero vectors. They are kept in the family so
    /// indices stay aligned with the chain, and contribute nothing to `S`.
    pub fn zero_indices(&self, tol: &ToleranceConfig) -> Vec<usize> {
        let top = self
            .vectors
            .iter()
            .map(|v| v.norm_squared())
            .fold(0.0, f64::max);
        let cutoff = tol.rank_tol_for(self.dim) * top;
        self.vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_squared() <= cutoff)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `(<E_n, x>)_n`.
pub fn analysis_apply(f: &FrameSystem, x: &CVector) -> Result<Vec<C64>> {
    check_dim(f.dim, x.len())?;
    Ok(f.vectors.iter().map(|e| e.dotc(x)).collect())
}

/// `S = sum_n |E_n><E_n|`; the zero matrix for an empty family.
pub fn frame_operator(f: &FrameSystem) -> Result<HermitianMatrix> {
    let mut s = CMatrix::zeros(f.dim, f.dim);
    for e in &f.vectors {
        check_dim(f.dim, e.len())?;
        s += e * e.adjoint();
    }
    Ok(HermitianMatrix::symmetrized(s))
}

/// `||S - R0||_F / (1 + ||R0||_F)`.
pub fn parseval_defect(f: &FrameSystem, r0: &HermitianMatrix) -> Result<f64> {
    check_dim(f.dim, r0.dim())?;
    let s = frame_operator(f)?;
    Ok((s.as_matrix() - r0.as_matrix()).norm() / (1.0 + r0.frobenius_norm()))
}

/// Whether `span{E_n}` contains the support subspace of `R0`, by comparing the
/// numerical rank of `P S P` (with `P` the support projection of `R0`)
/// against the numerical rank of `R0`.
pub fn completeness_check(
    f: &FrameSystem,
    r0: &HermitianMatrix,
    tol: &ToleranceConfig,
) -> Result<bool> {
    check_dim(f.dim, r0.dim())?;
    let r0_spec = PsdSpectrum::new(r0, tol)?;
    let target = r0_spec.rank(tol);
    if target == 0 {
        return Ok(true);
    }
    let p = r0_spec.support(tol);
    let s = frame_operator(f)?;
    let psp = HermitianMatrix::symmetrized(p.as_matrix() * s.as_matrix() * p.as_matrix());
    let spec = PsdSpectrum::new(&psp, tol)?;
    let cutoff = tol.range_tol_for(f.dim) * spec.lambda_max();
    let rank = spec.eigenvalues().iter().filter(|&&l| l > cutoff).count();
    Ok(rank >= target)
}

/// `sum_n <E_n, x> E_n`.
pub fn reconstruct(f: &FrameSystem, x: &CVector) -> Result<CVector> {
    check_dim(f.dim, x.len())?;
    let mut out = CVector::zeros(f.dim);
    for e in &f.vectors {
        out += e * e.dotc(x);
    }
    Ok(out)
}

/// A frame built from the identity, with its certification status.
#[derive(Clone, Debug)]
pub struct ParsevalFrame {
    pub frame: FrameSystem,
    pub chain: ResidualChain,
    pub parseval_defect: f64,
    pub certified: bool,
}

/// Runs the chain from `R0 = I` and certifies the extracted family as a
/// Parseval frame for `C^dim`. An uncertified result is returned inside
/// [`Error::NotExhausted`].
pub fn parsevalize<S: DirectionSource + ?Sized>(
    dim: usize,
    directions: &mut S,
    stop: &StopRule,
    tol: &ToleranceConfig,
) -> Result<ParsevalFrame> {
    let out = parsevalize_unchecked(dim, directions, stop, tol)?;
    if out.certified {
        Ok(out)
    } else {
        Err(Error::NotExhausted {
            defect: out.parseval_defect,
            frame: Box::new(out.frame),
        })
    }
}

/// Like [`parsevalize`] but returns uncertified frames as `Ok`.
pub fn parsevalize_unchecked<S: DirectionSource + ?Sized>(
    dim: usize,
    directions: &mut S,
    stop: &StopRule,
    tol: &ToleranceConfig,
) -> Result<ParsevalFrame> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dim must be >= 1".into()));
    }
    let identity = HermitianMatrix::identity(dim);
    let chain = run_chain(&identity, directions, stop, tol)?;
    let frame = FrameSystem::from_chain(&chain, "parsevalize");
    let defect = parseval_defect(&frame, &identity)?;
    let certified = chain.stop_reason == StopReason::ExactZero || defect <= PARSEVAL_CERT_TOL;
    Ok(ParsevalFrame {
        frame,
        chain,
        parseval_defect: defect,
        certified,
    })
}
