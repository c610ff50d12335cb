use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use qndm_core::analysis::match_shots_dm;
use qndm_core::ansatz::random_ansatz;
use qndm_core::estimators::{DmProbe, QndmProbe};
use qndm_core::pauli::random_observable;
use qndm_core::seed::rng_for;
use qndm_core::{
    cost, exact_cost, exact_derivative_oracle, qndm_detector_p0, qndm_exact_g, Method, Order, ParamVector, Partial,
    Problem, QndmSettings,
};

fn problem(seed: u64, n: usize, m: usize, j: usize) -> Problem {
    let mut rng = rng_for(seed, &[0]);
    let (ansatz, theta) = random_ansatz(n, m, &mut rng).unwrap();
    let j = j.min((1 << (2 * n)) - 1);
    let observable = random_observable(n, j, 1.0, &mut rng).unwrap();
    Problem::new(ansatz, theta, observable).unwrap()
}

fn cost_at(p: &Problem, theta: Vec<f64>) -> f64 {
    exact_cost(&p.ansatz, &ParamVector::new(theta).unwrap(), &p.observable).unwrap()
}

fn arb_problem() -> impl Strategy<Value = Problem> {
    (any::<u64>(), 1usize..=3, 1usize..=3, 1usize..=6).prop_map(|(s, n, m, j)| problem(s, n, m, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parameter_shift_matches_finite_difference(p in arb_problem(), pick in any::<prop::sample::Index>(), s in 0.3f64..1.5) {
        let l = pick.index(p.ansatz.dim());
        let h = 1e-5;
        let mut plus = p.theta.as_slice().to_vec();
        let mut minus = plus.clone();
        plus[l] += h;
        minus[l] -= h;
        let fd = (cost_at(&p, plus) - cost_at(&p, minus)) / (2.0 * h);
        let dm = DmProbe::prepare(&p, Partial::First(l), s).unwrap().exact_value();
        prop_assert!((dm - fd).abs() < 1e-6, "dm {dm} fd {fd}");
    }

    #[test]
    fn dm_exact_equals_oracle(p in arb_problem(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (w, l) = (a.index(p.ansatz.dim()), b.index(p.ansatz.dim()));
        for partial in [Partial::First(l), Partial::Second { w, l }] {
            let dm = DmProbe::prepare(&p, partial, FRAC_PI_2).unwrap().exact_value();
            let oracle = exact_derivative_oracle(&p, partial, FRAC_PI_2).unwrap();
            prop_assert!((dm - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_is_symmetric(p in arb_problem(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (w, l) = (a.index(p.ansatz.dim()), b.index(p.ansatz.dim()));
        let wl = DmProbe::prepare(&p, Partial::Second { w, l }, FRAC_PI_2).unwrap().exact_value();
        let lw = DmProbe::prepare(&p, Partial::Second { w: l, l: w }, FRAC_PI_2).unwrap().exact_value();
        prop_assert!((wl - lw).abs() < 1e-8);
    }

    #[test]
    fn qndm_bias_is_quadratic_in_lambda(p in arb_problem(), pick in any::<prop::sample::Index>()) {
        let partial = Partial::First(pick.index(p.ansatz.dim()));
        let oracle = exact_derivative_oracle(&p, partial, FRAC_PI_2).unwrap();
        let err = |lam: f64| {
            let probe = QndmProbe::prepare(&p, partial, &QndmSettings::new(lam)).unwrap();
            (probe.exact_value() - oracle).abs()
        };
        let (e1, e2) = (err(0.0025), err(0.00125));
        prop_assume!(e1 > 1e-10);
        let ratio = e1 / e2;
        prop_assert!(ratio >= 3.5, "ratio {ratio}");
        // An identically vanishing derivative leaves only higher-order terms.
        if oracle.abs() > 1e-9 {
            prop_assert!(ratio <= 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn zero_coupling_leaves_detector_balanced(p in arb_problem(), pick in any::<prop::sample::Index>()) {
        let l = pick.index(p.ansatz.dim());
        for partial in [Partial::First(l), Partial::Second { w: 0, l }] {
            let p0 = qndm_detector_p0(&p, partial, FRAC_PI_2, 0.0, None).unwrap();
            prop_assert!((p0 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn readout_population_is_imaginary_part_of_g(p in arb_problem(), pick in any::<prop::sample::Index>(), lam in 0.001f64..0.3) {
        let partial = Partial::First(pick.index(p.ansatz.dim()));
        let g = qndm_exact_g(&p, partial, FRAC_PI_2, lam, None).unwrap();
        let p0 = qndm_detector_p0(&p, partial, FRAC_PI_2, lam, None).unwrap();
        prop_assert!((p0 - (1.0 - g.im) / 2.0).abs() < 1e-12);
        prop_assert!(g.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn term_order_effect_is_second_order_in_lambda(p in arb_problem(), pick in any::<prop::sample::Index>()) {
        let partial = Partial::First(pick.index(p.ansatz.dim()));
        let reversed: Vec<usize> = (0..p.num_terms()).rev().collect();
        let gap = |lam: f64| {
            let settings = QndmSettings::new(lam);
            let a = QndmProbe::prepare(&p, partial, &settings).unwrap().exact_value();
            let b = QndmProbe::prepare(&p, partial, &settings.with_term_order(reversed.clone())).unwrap().exact_value();
            (a - b).abs()
        };
        let (g1, g2) = (gap(0.0025), gap(0.00125));
        prop_assume!(g1 > 1e-9);
        prop_assert!(g1 / g2 >= 3.5, "gap ratio {}", g1 / g2);
    }

    #[test]
    fn measured_costs_equal_closed_forms(p in arb_problem(), pick in any::<prop::sample::Index>(), shots in 1u64..2000) {
        let l = pick.index(p.ansatz.dim());
        let (j, k, n) = (p.num_terms() as u64, p.gate_count(), p.num_qubits() as u64);
        for (order, partial) in [(Order::First, Partial::First(l)), (Order::Second, Partial::Second { w: 0, l })] {
            let q = QndmProbe::prepare(&p, partial, &QndmSettings::new(0.1)).unwrap();
            let d = DmProbe::prepare(&p, partial, FRAC_PI_2).unwrap();
            prop_assert_eq!(q.measured_cost(shots), cost(Method::Qndm, order, shots, j, k, n).formula_cost);
            prop_assert_eq!(d.measured_cost(shots), cost(Method::Dm, order, shots, j, k, n).formula_cost);
        }
    }

    #[test]
    fn matched_dm_shots_meet_the_target(coeffs in prop::collection::vec(-5.0f64..5.0, 1..8), target in 1e-4f64..10.0) {
        let sigma = vec![1.0; coeffs.len()];
        let n = match_shots_dm(target, &coeffs, &sigma, FRAC_PI_2, Order::First).unwrap();
        prop_assert!(n >= 1);
        let mse = coeffs.iter().map(|h| h * h).sum::<f64>() / (2.0 * n as f64);
        prop_assert!(mse <= target * (1.0 + 1e-12));
    }
}

#[test]
fn dm_sampling_is_unbiased() {
    let p = problem(11, 3, 2, 5);
    let partial = Partial::First(2);
    let probe = DmProbe::prepare(&p, partial, FRAC_PI_2).unwrap();
    let exact = probe.exact_value();
    let reps = 2000;
    let mut rng = rng_for(3, &[]);
    let values: Vec<f64> = (0..reps).map(|_| probe.sample(200, &mut rng).unwrap().value).collect();
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    assert!((mean - exact).abs() < 5.0 * (var / reps as f64).sqrt(), "mean {mean} exact {exact}");
}

#[test]
fn qndm_uses_one_detector_readout_per_shot() {
    let p = problem(5, 2, 2, 4);
    let probe = QndmProbe::prepare(&p, Partial::First(1), &QndmSettings::new(0.05)).unwrap();
    let est = probe.sample(300, &mut rng_for(1, &[])).unwrap();
    let stats = est.detector.unwrap();
    assert_eq!(stats.shots, 300);
    assert!(stats.count0 <= 300);
}
