mod common;

use common::{chain, instance, rel_frob, MODES};
use conedeflate::{
    eig_hermitian, frame_operator, parseval_defect, support_projection, FrameSystem,
    ToleranceConfig,
};
use proptest::prelude::*;

fn case() -> impl Strategy<Value = (usize, usize, u64, usize, usize)> {
    (1usize..=16).prop_flat_map(|d| (Just(d), 0..=d, any::<u64>(), 0usize..3, 1usize..60))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frame_operator_is_removed_mass((dim, rank, seed, m, steps) in case()) {
        let r0 = instance(dim, rank, seed);
        let c = chain(&r0, MODES[m], seed, steps);
        let f = FrameSystem::from_chain(&c, "prop");
        let s = frame_operator(&f).unwrap();
        let removed = r0.checked_sub(&c.r_final).unwrap();
        prop_assert!(rel_frob(s.as_matrix(), removed.as_matrix()) <= 1e-9);

        // Bessel bound
        let top = eig_hermitian(&s).unwrap().lambda_max();
        prop_assert!(top <= r0.opnorm().unwrap() + 1e-9);

        // each E_n lies in the support of R0
        let p = support_projection(&r0, &ToleranceConfig::default()).unwrap();
        for e in &f.vectors {
            let off = e - p.apply(e).unwrap();
            prop_assert!(off.norm() <= 1e-9 * (1.0 + e.norm()));
        }
    }

    #[test]
    fn parseval_defect_tracks_residual_trace((dim, rank, seed, m, steps) in case()) {
        let r0 = instance(dim, rank, seed);
        let c = chain(&r0, MODES[m], seed, steps);
        let f = FrameSystem::from_chain(&c, "prop");
        let defect = parseval_defect(&f, &r0).unwrap();
        let tr = c.r_final.trace();
        let scale = 1.0 + r0.frobenius_norm();
        // |R|_F <= tr(R) <= sqrt(dim) |R|_F for PSD R, and S - R0 = -R_final
        prop_assert!(defect * scale <= tr + 1e-9 * scale);
        prop_assert!(tr <= (dim as f64).sqrt() * defect * scale + 1e-9 * scale);
    }
}
