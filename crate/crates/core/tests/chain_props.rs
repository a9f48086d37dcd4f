mod common;

use common::{chain, instance, rng, Mode, MODES};
use conedeflate::dynamics::energy_report;
use conedeflate::random::{unit_in_support, unit_vector};
use conedeflate::strategies::{greedy_direction, WeakGreedy};
use conedeflate::{
    eig_hermitian, loewner_leq, phi_update, run_chain, telescoping_profile,
    PsdSpectrum, StopRule, ToleranceConfig,
};
use proptest::prelude::*;

fn case() -> impl Strategy<Value = (usize, usize, u64, usize)> {
    (1usize..=16).prop_flat_map(|d| (Just(d), 0..=d, any::<u64>(), 0usize..3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steps_are_monotone_and_rank_one((dim, rank, seed, m) in case()) {
        let tol = ToleranceConfig::default();
        let r0 = instance(dim, rank, seed);
        let c = chain(&r0, MODES[m], seed, 40);
        let rs = c.residuals().unwrap();
        for w in rs.windows(2) {
            let norm = w[0].opnorm().unwrap();
            prop_assert!(loewner_leq(&w[1], &w[0], &tol).unwrap());
            let diff = w[0].checked_sub(&w[1]).unwrap();
            let eig = eig_hermitian(&diff).unwrap();
            prop_assert!(eig.lambda_min() >= -tol.psd_tol * norm);
            let big = eig.values.iter().filter(|&&l| l > tol.rank_tol_for(dim) * norm).count();
            prop_assert!(big <= 1, "step removed rank {big}");
        }
    }

    #[test]
    fn telescoping_and_trace_identities((dim, rank, seed, m) in case()) {
        let r0 = instance(dim, rank, seed);
        let c = chain(&r0, MODES[m], seed, 60);
        for d in telescoping_profile(&c).unwrap() {
            prop_assert!(d <= 1e-9);
        }
        let rep = energy_report(&c);
        prop_assert!(rep.trace_identity_gap <= 1e-9);
        prop_assert!(rep.total() <= r0.trace() * (1.0 + 1e-9));
    }

    #[test]
    fn kernel_directions_change_nothing((dim, seed) in (2usize..=16, any::<u64>())) {
        let tol = ToleranceConfig::default();
        let r = instance(dim, dim - 1, seed);
        let spec = PsdSpectrum::new(&r, &tol).unwrap();
        let u = spec.eigen().vector(0);
        let (next, e) = phi_update(&r, &u, &tol).unwrap();
        prop_assert!((next.as_matrix() - r.as_matrix()).norm() <= 1e-10 * (1.0 + r.frobenius_norm()));
        prop_assert!(e.norm() <= 1e-8);
    }

    #[test]
    fn chains_are_reproducible((dim, rank, seed, m) in case()) {
        let r0 = instance(dim, rank, seed);
        let a = chain(&r0, MODES[m], seed, 30);
        let b = chain(&r0, MODES[m], seed, 30);
        prop_assert_eq!(a.energies(), b.energies());
        prop_assert_eq!(
            a.steps.iter().map(|s| s.residual_trace_after).collect::<Vec<_>>(),
            b.steps.iter().map(|s| s.residual_trace_after).collect::<Vec<_>>()
        );
        prop_assert_eq!(a.r_final, b.r_final);
    }

    #[test]
    fn greedy_removes_top_eigenvalue((dim, rank, seed) in (1usize..=16).prop_flat_map(|d| (Just(d), 1..=d, any::<u64>()))) {
        let tol = ToleranceConfig::default();
        let r = instance(dim, rank, seed);
        let u = greedy_direction(&r, &tol).unwrap();
        let (next, _) = phi_update(&r, &u, &tol).unwrap();
        let before = eig_hermitian(&r).unwrap().values;
        let after = eig_hermitian(&next).unwrap().lambda_max();
        let second = if dim > 1 { before[dim - 2] } else { 0.0 };
        prop_assert!((after - second).abs() <= 1e-9 * before[dim - 1]);
    }

    #[test]
    fn greedy_exhausts_in_rank_steps((dim, rank, seed) in (1usize..=16).prop_flat_map(|d| (Just(d), 0..=d, any::<u64>()))) {
        let r0 = instance(dim, rank, seed);
        let c = chain(&r0, Mode::Greedy, seed, 100);
        prop_assert_eq!(c.len(), rank);
        prop_assert!(c.r_final.trace() <= 1e-9 * r0.trace());
        let mut prev = r0.opnorm().unwrap();
        for s in &c.steps {
            prop_assert!(s.residual_opnorm_after <= prev);
            prev = s.residual_opnorm_after;
        }
    }

    #[test]
    fn weak_greedy_certificates(
        (dim, rank, seed) in (1usize..=12).prop_flat_map(|d| (Just(d), 1..=d, any::<u64>())),
        c in 0.05f64..=1.0,
    ) {
        let tol = ToleranceConfig::default();
        let r0 = instance(dim, rank, seed);
        let mut g = rng(seed ^ 0xbeef);
        let pool = (0..4 * dim).map(|_| unit_vector(dim, &mut g)).collect();
        let mut src = WeakGreedy::new(c, pool).unwrap();
        src.fallback_to_greedy = true;
        let chain = run_chain(&r0, &mut src, &StopRule::max_steps(40), &tol).unwrap();
        let mut prev = r0.opnorm().unwrap();
        for (pick, step) in src.picks().iter().zip(&chain.steps) {
            prop_assert!(pick.rayleigh >= c * pick.opnorm - 1e-10);
            prop_assert!(step.residual_opnorm_after <= prev * (1.0 + 1e-12));
            prop_assert!(pick.opnorm <= step.step_energy / c + 1e-10);
            prev = step.residual_opnorm_after;
        }
    }
}

#[test]
fn support_directions_stay_in_cone() {
    let tol = ToleranceConfig::default();
    for seed in 0..20u64 {
        let r0 = instance(6, 3, seed);
        let mut g = rng(seed);
        let mut r = r0.clone();
        for _ in 0..10 {
            let spec = PsdSpectrum::new(&r, &tol).unwrap();
            let Some(u) = unit_in_support(&spec, &tol, &mut g).unwrap() else { break };
            let (next, e) = phi_update(&r, &u, &tol).unwrap();
            let expected = r.as_matrix() - &e * e.adjoint();
            assert!((next.as_matrix() - expected).norm() <= 1e-12 * (1.0 + r.frobenius_norm()));
            r = next;
        }
    }
}
