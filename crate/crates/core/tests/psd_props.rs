mod common;

use common::{instance, rel_frob, rng};
use conedeflate::random::gaussian_vector;
use conedeflate::{
    loewner_leq, pinv_psd, sqrt_psd, support_projection, CMatrix, HermitianMatrix,
    ToleranceConfig,
};
use proptest::prelude::*;

fn dim_rank() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=16)
        .prop_flat_map(|d| (Just(d), 0..=d, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sqrt_squares_back((dim, rank, seed) in dim_rank()) {
        let a = instance(dim, rank, seed);
        let s = sqrt_psd(&a, &ToleranceConfig::default()).unwrap();
        let sq = s.as_matrix() * s.as_matrix();
        prop_assert!(rel_frob(&sq, a.as_matrix()) <= 1e-9);
    }

    #[test]
    fn pinv_penrose((dim, rank, seed) in dim_rank()) {
        let a = instance(dim, rank, seed);
        let p = pinv_psd(&a, &ToleranceConfig::default()).unwrap();
        let (a, p) = (a.as_matrix(), p.as_matrix());
        let ap = a * p;
        let pa = p * a;
        prop_assert!(rel_frob(&(&ap * a), a) <= 1e-8);
        prop_assert!(rel_frob(&(&pa * p), p) <= 1e-8);
        prop_assert!(rel_frob(&ap.adjoint(), &ap) <= 1e-8);
        prop_assert!(rel_frob(&pa.adjoint(), &pa) <= 1e-8);
    }

    #[test]
    fn support_fixes_matrix((dim, rank, seed) in dim_rank()) {
        let a = instance(dim, rank, seed);
        let p = support_projection(&a, &ToleranceConfig::default()).unwrap();
        prop_assert!(rel_frob(&(p.as_matrix() * a.as_matrix()), a.as_matrix()) <= 1e-9);
    }

    #[test]
    fn loewner_reflexive_and_antisymmetric(
        (dim, rank, seed) in dim_rank(),
        log_eps in -16.0f64..-6.0,
    ) {
        let tol = ToleranceConfig::default();
        let a = instance(dim, rank, seed);
        prop_assert!(loewner_leq(&a, &a, &tol).unwrap());

        let mut r = rng(seed ^ 0x5eed);
        let g = gaussian_vector(dim * dim, &mut r);
        let h = CMatrix::from_iterator(dim, dim, g.iter().copied());
        let h = (&h + h.adjoint()) * conedeflate::C64::new(0.5 * 10f64.powf(log_eps), 0.0);
        let b = HermitianMatrix::new(a.as_matrix() + h).unwrap();
        if loewner_leq(&a, &b, &tol).unwrap() && loewner_leq(&b, &a, &tol).unwrap() {
            let bound = 10.0 * tol.psd_tol * dim as f64 * (1.0 + a.opnorm().unwrap());
            prop_assert!((a.as_matrix() - b.as_matrix()).norm() <= bound);
        }
    }
}
