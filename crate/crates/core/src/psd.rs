//! Dense Hermitian and positive semidefinite primitives.
//!
//! Everything here is backed by a single Hermitian eigendecomposition. The
//! square root, Moore–Penrose pseudoinverse and support projection of a PSD
//! matrix are spectral functions of that decomposition, so [`PsdSpectrum`]
//! computes it once and hands out whichever function the caller needs.
//!
//! Inner products are conjugate-linear in the first argument and linear in
//! the second: `<a, b> = sum conj(a_i) b_i`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixJson;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance policy shared by every numerical predicate in the crate.
///
/// All values are relative. `rank_tol` defaults to `dim * f64::EPSILON` and
/// is multiplied by the largest eigenvalue of the matrix at hand to obtain
/// the null-space cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub psd_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    pub hermit_tol: f64,
    /// Tolerance on `<E_n, R_n^+ E_n> = 1` in chain verification.
    pub norm_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            psd_tol: 1e-10,
            rank_tol: None,
            hermit_tol: 1e-12,
            norm_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let mut fields = vec![
            ("psd_tol", self.psd_tol),
            ("hermit_tol", self.hermit_tol),
            ("norm_tol", self.norm_tol),
        ];
        if let Some(r) = self.rank_tol {
            fields.push(("rank_tol", r));
        }
        for (name, v) in fields {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {v} must lie in (0, 1e-2)"
                )));
            }
        }
        Ok(())
    }

    /// Relative rank tolerance for a matrix of dimension `dim`.
    pub fn rank_tol_for(&self, dim: usize) -> f64 {
        self.rank_tol
            .unwrap_or(dim.max(1) as f64 * f64::EPSILON)
    }

    /// Absolute eigenvalue cutoff: eigenvalues at or below it count as null.
    pub fn rank_cutoff(&self, dim: usize, lambda_max: f64) -> f64 {
        self.rank_tol_for(dim) * lambda_max.max(0.0)
    }

    /// Relative threshold used when testing vector membership in a support
    /// subspace. The default rank tolerance sits below the roundoff carried
    /// by computed vectors, so this never drops under `psd_tol`.
    pub fn range_tol_for(&self, dim: usize) -> f64 {
        self.rank_tol_for(dim).max(self.psd_tol)
    }
}

/// Dense complex Hermitian matrix.
///
/// Construction checks the Hermitian property against `hermit_tol` and then
/// stores the exactly symmetrized matrix `(A + A*)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tol(m, ToleranceConfig::default().hermit_tol)
    }

    pub fn with_tol(m: CMatrix, hermit_tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidConfig("matrix dimension must be positive".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        let maxabs = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let mut deviation = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        let threshold = hermit_tol * (1.0 + maxabs);
        if deviation > threshold {
            return Err(Error::NotHermitian {
                deviation,
                threshold,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from a real row-major array.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        let mut inner = (m + adj) * C64::new(0.5, 0.0);
        for i in 0..inner.nrows() {
            inner[(i, i)].im = 0.0;
        }
        Self { inner }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            inner: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// The rank-one operator `|v><v|`.
    pub fn outer(v: &CVector) -> Self {
        Self {
            inner: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        check_dim(self.dim(), v.len())?;
        Ok(&self.inner * v)
    }

    /// `<x, A x>`, real for Hermitian `A`.
    pub fn quadratic_form(&self, x: &CVector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(x.dotc(&(&self.inner * x)).re)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            inner: &self.inner - &other.inner,
        })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            inner: &self.inner + &other.inner,
        })
    }

    /// `A - |e><e|`. Exactly Hermitian in floating point.
    pub fn minus_outer(&self, e: &CVector) -> Result<Self> {
        check_dim(self.dim(), e.len())?;
        Ok(Self {
            inner: &self.inner - e * e.adjoint(),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            inner: &self.inner * C64::new(s, 0.0),
        }
    }

    /// Spectral norm; for Hermitian matrices the largest |eigenvalue|.
    pub fn opnorm(&self) -> Result<f64> {
        let eig = eig_hermitian(self)?;
        Ok(eig
            .values
            .iter()
            .fold(0.0_f64, |acc, &l| acc.max(l.abs())))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(self)?.values[0])
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Eigendecomposition `A = V diag(values) V*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Unitary; column `k` belongs to `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }
}

/// Hermitian eigendecomposition with a fixed eigenvector phase.
///
/// Eigenvalues are ascending; ties keep the solver's column order. Each
/// eigenvector is rotated so that its first component of (near-)largest
/// modulus is real and nonnegative.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    let m = &a.inner;
    let fm = faer::Mat::<faer::complex_native::c64>::from_fn(n, n, |i, j| {
        let z = m[(i, j)];
        faer::complex_native::c64::new(z.re, z.im)
    });
    let eig = fm.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();

    let raw: Vec<f64> = (0..n).map(|k| s.read(k).re).collect();
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));

    let values: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = CVector::from_fn(n, |i, _| {
            let z = u.read(i, src);
            C64::new(z.re, z.im)
        });
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Rotates `v` so its first component of largest modulus is real, >= 0.
pub(crate) fn fix_phase(v: &mut CVector) {
    let max = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= (1.0 - 1e-10) * max)
        .expect("max attained");
    let z = v[pivot];
    let rot = z.conj() / z.norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

/// Certified PSD spectrum: eigendecomposition with small negative eigenvalues
/// clamped to zero.
#[derive(Clone, Debug)]
pub struct PsdSpectrum {
    eigen: HermitianEigen,
    clamped_mass: f64,
    floor: f64,
}

impl PsdSpectrum {
    /// Certifies `a` against `-psd_tol * lambda_max(a)`.
    pub fn new(a: &HermitianMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let eigen = eig_hermitian(a)?;
        let scale = eigen.lambda_max().max(0.0);
        Self::from_eigen(eigen, tol, scale)
    }

    /// Certifies `a` against `-psd_tol * scale`. Used when `a` came out of a
    /// subtraction and its own spectrum no longer reflects the working scale.
    pub fn with_scale(a: &HermitianMatrix, tol: &ToleranceConfig, scale: f64) -> Result<Self> {
        let eigen = eig_hermitian(a)?;
        Self::from_eigen(eigen, tol, scale)
    }

    pub(crate) fn from_eigen(
        mut eigen: HermitianEigen,
        tol: &ToleranceConfig,
        scale: f64,
    ) -> Result<Self> {
        let threshold = -tol.psd_tol * scale.max(0.0);
        let min = eigen.lambda_min();
        if min < threshold {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                threshold,
            });
        }
        let mut clamped_mass = 0.0;
        for l in eigen.values.iter_mut() {
            if *l < 0.0 {
                clamped_mass += -*l;
                *l = 0.0;
            }
        }
        Ok(Self {
            eigen,
            clamped_mass,
            floor: 0.0,
        })
    }

    /// Raises the rank cutoff to at least `floor`. Inside a chain the floor
    /// is `rank_tol * lambda_max(R0)`: eigenvalues that small are roundoff
    /// inherited from `R0` and must not be treated as support once the
    /// residual itself has shrunk.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor.max(0.0);
        self
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn dim(&self) -> usize {
        self.eigen.values.len()
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen.lambda_max()
    }

    /// Total magnitude of the negative eigenvalues that were set to zero.
    pub fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }

    pub fn rank_cutoff(&self, tol: &ToleranceConfig) -> f64 {
        tol.rank_cutoff(self.dim(), self.lambda_max()).max(self.floor)
    }

    pub fn rank(&self, tol: &ToleranceConfig) -> usize {
        let cutoff = self.rank_cutoff(tol);
        self.eigen.values.iter().filter(|&&l| l > cutoff).count()
    }

    /// `V f(diag) V*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let v = &self.eigen.vectors;
        let mut scaled = v.clone();
        for (k, &l) in self.eigen.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(f(l));
        }
        HermitianMatrix::symmetrized(scaled * v.adjoint())
    }

    /// `V f(diag) V* x` without forming the matrix.
    pub fn map_apply<F: Fn(f64) -> f64>(&self, f: F, x: &CVector) -> Result<CVector> {
        check_dim(self.dim(), x.len())?;
        let v = &self.eigen.vectors;
        let mut coeffs = v.adjoint() * x;
        for (k, &l) in self.eigen.values.iter().enumerate() {
            coeffs[k] *= f(l);
        }
        Ok(v * coeffs)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }

    pub fn sqrt(&self) -> HermitianMatrix {
        self.map(f64::sqrt)
    }

    pub fn sqrt_apply(&self, x: &CVector) -> Result<CVector> {
        self.map_apply(f64::sqrt, x)
    }

    pub fn pinv(&self, tol: &ToleranceConfig) -> HermitianMatrix {
        let cutoff = self.rank_cutoff(tol);
        self.map(|l| if l > cutoff { 1.0 / l } else { 0.0 })
    }

    pub fn pinv_apply(&self, tol: &ToleranceConfig, x: &CVector) -> Result<CVector> {
        let cutoff = self.rank_cutoff(tol);
        self.map_apply(|l| if l > cutoff { 1.0 / l } else { 0.0 }, x)
    }

    /// `(A^+)^{1/2} x`.
    pub fn pinv_sqrt_apply(&self, tol: &ToleranceConfig, x: &CVector) -> Result<CVector> {
        let cutoff = self.rank_cutoff(tol);
        self.map_apply(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 }, x)
    }

    pub fn support(&self, tol: &ToleranceConfig) -> HermitianMatrix {
        let cutoff = self.rank_cutoff(tol);
        self.map(|l| if l > cutoff { 1.0 } else { 0.0 })
    }

    /// Component of `x` orthogonal to the support subspace.
    pub fn off_support_apply(&self, tol: &ToleranceConfig, x: &CVector) -> Result<CVector> {
        let cutoff = self.rank_cutoff(tol);
        self.map_apply(|l| if l > cutoff { 0.0 } else { 1.0 }, x)
    }
}

/// The unique PSD square root.
pub fn sqrt_psd(a: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    Ok(PsdSpectrum::new(a, tol)?.sqrt())
}

/// Moore–Penrose pseudoinverse: spectral reciprocal on the numerical support.
pub fn pinv_psd(a: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    Ok(PsdSpectrum::new(a, tol)?.pinv(tol))
}

/// Orthogonal projection onto the span of eigenvectors above the rank cutoff.
pub fn support_projection(a: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    Ok(PsdSpectrum::new(a, tol)?.support(tol))
}

/// Whether `v` lies in `ran(A^{1/2})`, which at finite dimension is the
/// support subspace of `A`.
pub fn in_range_of_sqrt(a: &HermitianMatrix, v: &CVector, tol: &ToleranceConfig) -> Result<bool> {
    let spectrum = PsdSpectrum::new(a, tol)?;
    range_membership(&spectrum, v, tol).map(|(inside, _)| inside)
}

pub(crate) fn range_membership(
    spectrum: &PsdSpectrum,
    v: &CVector,
    tol: &ToleranceConfig,
) -> Result<(bool, f64)> {
    let residual = spectrum.off_support_apply(tol, v)?.norm();
    let threshold = tol.range_tol_for(spectrum.dim()) * (1.0 + v.norm());
    Ok((residual <= threshold, residual))
}

/// Löwner order test `A <= B`.
pub fn loewner_leq(a: &HermitianMatrix, b: &HermitianMatrix, tol: &ToleranceConfig) -> Result<bool> {
    let diff = b.checked_sub(a)?;
    let min = diff.min_eigenvalue()?;
    Ok(min >= -tol.psd_tol * (1.0 + b.opnorm()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn real_vec(xs: &[f64]) -> CVector {
        CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x)))
    }

    fn mat_close(a: &HermitianMatrix, b: &HermitianMatrix, eps: f64) -> bool {
        (a.as_matrix() - b.as_matrix()).norm() <= eps
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_square() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn eig_diagonal() {
        let a = HermitianMatrix::from_diagonal(&[2.0, 1.0]);
        let e = eig_hermitian(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert!((e.vector(0) - real_vec(&[0.0, 1.0])).norm() < 1e-15);
        assert!((e.vector(1) - real_vec(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn eig_two_by_two_hand_oracle() {
        // det([[1-l, .5], [.5, 1-l]]) = (1-l)^2 - 1/4 => l = 1/2, 3/2
        let a = HermitianMatrix::from_real(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-14);
        assert!((e.values[1] - 1.5).abs() < 1e-14);
        let s = 0.5_f64.sqrt();
        // phase rule: first component of largest modulus is real and >= 0
        assert!((e.vector(0) - real_vec(&[s, -s])).norm() < 1e-12);
        assert!((e.vector(1) - real_vec(&[s, s])).norm() < 1e-12);
    }

    #[test]
    fn eig_zero_matrix() {
        let e = eig_hermitian(&HermitianMatrix::zeros(3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert!((&e.vectors - CMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn eig_reconstructs_complex_matrix() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                C64::new(0.3, 0.4),
                C64::new(-0.1, 0.2),
                C64::new(0.3, -0.4),
                c(1.0),
                C64::new(0.0, -0.7),
                C64::new(-0.1, -0.2),
                C64::new(0.0, 0.7),
                c(-0.5),
            ],
        );
        let a = HermitianMatrix::new(m).unwrap();
        let e = eig_hermitian(&a).unwrap();
        let d = CMatrix::from_diagonal(&CVector::from_iterator(3, e.values.iter().map(|&l| c(l))));
        let rec = &e.vectors * d * e.vectors.adjoint();
        assert!((rec - a.as_matrix()).norm() < 1e-12);
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!((gram - CMatrix::identity(3, 3)).norm() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..3 {
            let v = e.vector(k);
            let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = v.iter().find(|z| z.norm() >= (1.0 - 1e-10) * max).unwrap();
            assert_eq!(pivot.im, 0.0);
            assert!(pivot.re >= 0.0);
        }
    }

    #[test]
    fn sqrt_examples() {
        let tol = ToleranceConfig::default();
        let r = sqrt_psd(&HermitianMatrix::from_diagonal(&[4.0, 1.0]), &tol).unwrap();
        assert!(mat_close(&r, &HermitianMatrix::from_diagonal(&[2.0, 1.0]), 1e-14));

        let r = sqrt_psd(&HermitianMatrix::identity(4), &tol).unwrap();
        assert!(mat_close(&r, &HermitianMatrix::identity(4), 1e-14));

        // spectral synthesis from eigenpairs (0.5, (1,-1)/sqrt2), (1.5, (1,1)/sqrt2)
        let a = HermitianMatrix::from_real(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let r = sqrt_psd(&a, &tol).unwrap();
        let d = (1.5_f64.sqrt() + 0.5_f64.sqrt()) / 2.0;
        let o = (1.5_f64.sqrt() - 0.5_f64.sqrt()) / 2.0;
        let expected = HermitianMatrix::from_real(2, &[d, o, o, d]).unwrap();
        assert!(mat_close(&r, &expected, 1e-14));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_and_rejects_large() {
        let tol = ToleranceConfig::default();
        let a = HermitianMatrix::from_diagonal(&[1.0, -1e-12]);
        let s = PsdSpectrum::new(&a, &tol).unwrap();
        assert_eq!(s.eigenvalues()[0], 0.0);
        assert!((s.clamped_mass() - 1e-12).abs() < 1e-15);

        let a = HermitianMatrix::from_diagonal(&[1.0, -1e-6]);
        assert!(matches!(sqrt_psd(&a, &tol), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn pinv_examples() {
        let tol = ToleranceConfig::default();
        let p = pinv_psd(&HermitianMatrix::from_diagonal(&[2.0, 0.0]), &tol).unwrap();
        assert!(mat_close(&p, &HermitianMatrix::from_diagonal(&[0.5, 0.0]), 1e-15));

        let p = pinv_psd(&HermitianMatrix::identity(3), &tol).unwrap();
        assert!(mat_close(&p, &HermitianMatrix::identity(3), 1e-14));

        // rank one: (vv*)^+ = vv*/|v|^4, checked through the Penrose identities
        let v = real_vec(&[1.0, 1.0]);
        let a = HermitianMatrix::outer(&v);
        let p = pinv_psd(&a, &tol).unwrap();
        assert!(mat_close(&p, &a.scaled(0.25), 1e-14));
        let (am, pm) = (a.as_matrix(), p.as_matrix());
        assert!((am * pm * am - am).norm() < 1e-13);
        assert!((pm * am * pm - pm).norm() < 1e-13);
    }

    #[test]
    fn support_examples() {
        let tol = ToleranceConfig::default();
        let s = support_projection(&HermitianMatrix::from_diagonal(&[2.0, 0.0]), &tol).unwrap();
        assert!(mat_close(&s, &HermitianMatrix::from_diagonal(&[1.0, 0.0]), 1e-15));

        let a = HermitianMatrix::from_real(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        let s = support_projection(&a, &tol).unwrap();
        assert!(mat_close(&s, &HermitianMatrix::identity(2), 1e-14));

        let p = HermitianMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let s = support_projection(&p, &tol).unwrap();
        assert!(mat_close(&s, &p, 1e-14));
    }

    #[test]
    fn range_examples() {
        let tol = ToleranceConfig::default();
        let a = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(in_range_of_sqrt(&a, &real_vec(&[1.0, 0.0]), &tol).unwrap());
        assert!(!in_range_of_sqrt(&a, &real_vec(&[0.0, 1.0]), &tol).unwrap());
        let v = CVector::from_vec(vec![C64::new(0.3, -2.0), C64::new(1.5, 0.1)]);
        assert!(in_range_of_sqrt(&HermitianMatrix::identity(2), &v, &tol).unwrap());
    }

    #[test]
    fn loewner_examples() {
        let tol = ToleranceConfig::default();
        let z = HermitianMatrix::zeros(2);
        let i = HermitianMatrix::identity(2);
        assert!(loewner_leq(&z, &i, &tol).unwrap());
        assert!(!loewner_leq(&i, &z, &tol).unwrap());
        let a = HermitianMatrix::from_diagonal(&[1.0, 1.0]);
        let b = HermitianMatrix::from_diagonal(&[2.0, 0.5]);
        assert!(!loewner_leq(&a, &b, &tol).unwrap());
        assert!(matches!(
            loewner_leq(&a, &HermitianMatrix::identity(3), &tol),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        let bad = ToleranceConfig {
            psd_tol: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ToleranceConfig {
            rank_tol: Some(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
