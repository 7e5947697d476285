//! Property tests over randomized states and couplings.

use acoherence::detector::{pn_exact, DetectorCoupling, Method};
use acoherence::fock::normal_ordered_moment;
use acoherence::states::FieldState;
use acoherence::stats;
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_state() -> impl Strategy<Value = FieldState> {
    prop_oneof![
        (-2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(re, im)| FieldState::coherent(Complex64::new(re, im)).unwrap()),
        (0u32..8).prop_map(FieldState::fock),
        (0.0..4.0f64).prop_map(|n| FieldState::thermal(n).unwrap()),
        (0.0..1.3f64).prop_map(|r| FieldState::squeezed_vacuum(r).unwrap()),
        (
            -2.5..2.5f64,
            0.0..0.9f64,
            0.0..std::f64::consts::TAU,
            0.0..1.5f64
        )
            .prop_map(|(x0, r, phi, n)| FieldState::gaussian(x0, r, phi, n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Oracle distributions are genuine probability distributions: every
    /// entry in [0, 1] and total mass plus tail equal to one.
    #[test]
    fn oracle_distribution_is_normalized(state in arb_state(), kappa in 0.0..1.2f64) {
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        let dist = acoherence::fock::detector_pn_oracle(&state, &coupling, 4).unwrap();
        let mut total = dist.tail_mass();
        for n in 0..=4 {
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(&dist.prob(n)));
            total += dist.prob(n);
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "total mass {total}");
    }

    /// The analytic moments agree with the truncated-Fock evaluation.
    #[test]
    fn analytic_moments_match_oracle(state in arb_state(), j in 1u32..=4) {
        let analytic = state.analytic_moment(j).unwrap();
        let oracle = normal_ordered_moment(&state, j).unwrap();
        let scale = analytic.abs().max(1e-9);
        prop_assert!(
            (analytic - oracle).abs() / scale < 1e-8,
            "j={j}: analytic {analytic} vs oracle {oracle}"
        );
    }

    /// A Gaussian state with no displacement and no squeezing is a thermal
    /// state in every downstream quantity.
    #[test]
    fn gaussian_reduction_chain(n_th in 0.0..4.0f64, phi in 0.0..std::f64::consts::TAU, kappa in 0.01..1.0f64) {
        let gauss = FieldState::gaussian(0.0, 0.0, phi, n_th).unwrap();
        let thermal = FieldState::thermal(n_th).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        for j in 1..=4 {
            let a = gauss.analytic_moment(j).unwrap();
            let b = thermal.analytic_moment(j).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "j={j}: {a} vs {b}");
        }
        let a = acoherence::fock::detector_pn_oracle(&gauss, &coupling, 3).unwrap();
        let b = acoherence::fock::detector_pn_oracle(&thermal, &coupling, 3).unwrap();
        for n in 0..=3 {
            prop_assert!((a.prob(n) - b.prob(n)).abs() < 1e-12);
        }
        if n_th > 0.0 {
            let ra = stats::ratios(&gauss, &coupling, Method::Oracle).unwrap();
            prop_assert!((ra.r.unwrap() - 2.0).abs() < 1e-7);
        }
    }

    /// Efficiency folds into the coupling for P-representable states.
    #[test]
    fn efficiency_identity(eta in 0.05..1.0f64, kappa in 0.01..1.5f64, n_th in 0.1..3.0f64) {
        let folded = DetectorCoupling::from_kappa((eta.sqrt() * kappa.sin().abs()).asin()).unwrap();
        let with_eta = DetectorCoupling::from_kappa(kappa).unwrap().with_efficiency(eta).unwrap();
        let state = FieldState::thermal(n_th).unwrap();
        for n in 0..=3 {
            let lhs = pn_exact(&state, &with_eta, n).unwrap();
            let rhs = pn_exact(&state, &folded, n).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    /// Phase-space forms always satisfy the uncertainty bound.
    #[test]
    fn covariance_respects_uncertainty(x0 in -3.0..3.0f64, r in 0.0..1.5f64,
                                       phi in 0.0..std::f64::consts::TAU, n_th in 0.0..3.0f64) {
        let gauss = FieldState::gaussian(x0, r, phi, n_th).unwrap().to_gaussian().unwrap();
        prop_assert!(gauss.det() >= 0.25 * (1.0 - 1e-12));
    }
}
