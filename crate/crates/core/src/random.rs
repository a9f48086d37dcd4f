//! Seeded random instances for tests, benchmarks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::psd::{CMatrix, CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig, C64};

/// Vector of i.i.d. standard complex Gaussians (real part drawn first).
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Uniform point on the complex unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let g = gaussian_vector(dim, rng);
        let n = g.norm();
        if n > 0.0 {
            return g.unscale(n);
        }
    }
}

/// `B B*` for a `dim x rank` Gaussian `B`, scaled to unit trace.
pub fn random_psd<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let cols: Vec<CVector> = (0..rank).map(|_| gaussian_vector(dim, rng)).collect();
    let b = if cols.is_empty() {
        CMatrix::zeros(dim, 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    let a = HermitianMatrix::symmetrized(&b * b.adjoint());
    let tr = a.trace();
    if tr > 0.0 {
        a.scaled(1.0 / tr)
    } else {
        a
    }
}

/// Unit direction drawn inside the numerical support of `R`, or `None` when
/// `R` is numerically zero.
pub fn unit_in_support<R: Rng + ?Sized>(
    spectrum: &PsdSpectrum,
    tol: &ToleranceConfig,
    rng: &mut R,
) -> Result<Option<CVector>> {
    let cutoff = spectrum.rank_cutoff(tol);
    let eig = spectrum.eigen();
    let mut v = CVector::zeros(spectrum.dim());
    for (k, &l) in eig.values.iter().enumerate() {
        if l > cutoff {
            let c: f64 = rng.sample(StandardNormal);
            let d: f64 = rng.sample(StandardNormal);
            v += eig.vector(k) * C64::new(c, d);
        }
    }
    let n = v.norm();
    Ok((n > 0.0).then(|| v.unscale(n)))
}
