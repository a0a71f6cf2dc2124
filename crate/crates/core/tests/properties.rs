use eepareto::linalg::{CVector, C64};
use eepareto::model::{
    achievable_rate, dominates, ee_point, generate_channels, link_ee, Beamformer, Covariance, EEPoint, Scenario,
    ScenarioSkeleton,
};
use eepareto::solver::{
    dinkelbach_bisection, ellipsoid_solve, parametric_value, primal_value, DualPoint, ItVector, SolverOptions,
};
use proptest::prelude::*;

fn unit_scenario(seed: u64, antennas: usize, circuit_power: f64) -> Scenario {
    let sk = ScenarioSkeleton::uniform(2, antennas, 1.0, 4.0, circuit_power, 0.38, 1.0);
    generate_channels(seed, &sk, 0.5).unwrap()
}

fn beam(re: &[f64], im: &[f64]) -> Beamformer {
    Beamformer::new(CVector::from_iterator(
        re.len(),
        re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)),
    ))
}

fn levels(a: f64, b: f64) -> ItVector {
    ItVector::from_entries(2, &[((0, 1), a), ((1, 0), b)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_falls_with_interference(seed in 0u64..1000, scale in 1.0f64..50.0,
                                   re in prop::collection::vec(-1.0f64..1.0, 2),
                                   im in prop::collection::vec(-1.0f64..1.0, 2)) {
        let sc = unit_scenario(seed, 2, 1.0);
        let own = beam(&re, &im).covariance();
        let other = beam(&im, &re);
        let weak = other.covariance();
        let strong = Beamformer::new(other.weights() * C64::new(scale.sqrt(), 0.0)).covariance();
        let r_weak = achievable_rate(&sc, &[own.clone(), weak], 0).unwrap();
        let r_strong = achievable_rate(&sc, &[own, strong], 0).unwrap();
        prop_assert!(r_strong <= r_weak * (1.0 + 1e-14));
    }

    #[test]
    fn common_phase_rotation_leaves_ee_unchanged(seed in 0u64..1000, theta in 0.0f64..std::f64::consts::TAU,
                                                 re in prop::collection::vec(-1.0f64..1.0, 2),
                                                 im in prop::collection::vec(-1.0f64..1.0, 2)) {
        let sc = unit_scenario(seed, 2, 1.0);
        let a = beam(&re, &im);
        let b = beam(&im, &re);
        let rot = C64::from_polar(1.0, theta);
        let base = ee_point(&sc, &[a.covariance(), b.covariance()]).unwrap();
        let turned = ee_point(
            &sc,
            &[Beamformer::new(a.weights() * rot).covariance(), b.covariance()],
        ).unwrap();
        for k in 0..2 {
            prop_assert!((base.0[k] - turned.0[k]).abs() <= 1e-12 * base.0[k].abs().max(1e-300));
        }
    }

    #[test]
    fn dominance_is_irreflexive_and_transitive(a in prop::collection::vec(0.0f64..10.0, 3),
                                               da in prop::collection::vec(0.0f64..1.0, 3),
                                               db in prop::collection::vec(0.0f64..1.0, 3),
                                               tol in 0.0f64..0.1) {
        let c = EEPoint(a.clone());
        let b = EEPoint(a.iter().zip(&db).map(|(x, d)| x + d).collect());
        let top = EEPoint(b.0.iter().zip(&da).map(|(x, d)| x + d).collect());
        prop_assert!(!dominates(&c, &c, tol));
        if dominates(&top, &b, tol) && dominates(&b, &c, tol) {
            prop_assert!(dominates(&top, &c, tol));
        }
    }

    #[test]
    fn parametric_value_is_strictly_decreasing(seed in 0u64..1000, g1 in 0.01f64..1.0, ratio in 1.05f64..3.0,
                                               level in 0.01f64..1.0) {
        let sc = unit_scenario(seed, 2, 1.0);
        let it = levels(level, level);
        let f1 = ellipsoid_solve(g1, &sc, &it, 0, 1e-14, 20_000).unwrap();
        let f2 = ellipsoid_solve(g1 * ratio, &sc, &it, 0, 1e-14, 20_000).unwrap();
        prop_assert!(f1.f_lower() > f2.f_value);
    }

    #[test]
    fn dual_bounds_every_feasible_primal(seed in 0u64..1000, gamma in 0.01f64..1.0,
                                         l01 in 0.0f64..5.0, lp in 0.0f64..5.0,
                                         re in prop::collection::vec(-1.0f64..1.0, 2),
                                         im in prop::collection::vec(-1.0f64..1.0, 2)) {
        let sc = unit_scenario(seed, 2, 1.0);
        let it = levels(0.2, 0.3);
        let mut w = beam(&re, &im);
        // Shrink until feasible.
        let leak = w.covariance().quad_form(sc.channel(0, 1));
        let p = w.power();
        let shrink = 1.0f64.min(0.2 / leak.max(1e-300)).min(4.0 / p.max(1e-300));
        w = Beamformer::new(w.weights() * C64::new(shrink.sqrt(), 0.0));
        let duals = DualPoint::new(0, vec![lp, l01]).unwrap();
        let g = parametric_value(&duals, gamma, &sc, &it, 0).unwrap();
        let f = primal_value(&sc, &it, 0, &w.covariance(), gamma).unwrap();
        prop_assert!(g >= f - 1e-12 * (1.0 + f.abs()));
    }

    #[test]
    fn ee_grows_with_own_and_falls_with_received_level(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0,
                                                       up in 1.1f64..4.0) {
        let sc = unit_scenario(seed, 2, 1.0);
        let opts = SolverOptions::default();
        let tol = 1e-10;
        let base = dinkelbach_bisection(&sc, &levels(a, b), 0, &opts).unwrap().gamma_star;
        let own_up = dinkelbach_bisection(&sc, &levels(a * up + 1e-3, b), 0, &opts).unwrap().gamma_star;
        let recv_up = dinkelbach_bisection(&sc, &levels(a, b * up + 1e-3), 0, &opts).unwrap().gamma_star;
        prop_assert!(own_up >= base * (1.0 - tol));
        prop_assert!(recv_up <= base * (1.0 + tol));
    }

    #[test]
    fn bracket_choice_does_not_move_the_optimum(seed in 0u64..1000, level in 0.0f64..1.0, lo_exp in -9.0f64..-2.0) {
        let sc = unit_scenario(seed, 3, 1.0);
        let it = levels(level, level);
        let base = SolverOptions::default();
        let shifted = SolverOptions { gamma_lo: 10f64.powf(lo_exp), ..base.clone() };
        let a = dinkelbach_bisection(&sc, &it, 1, &base).unwrap().gamma_star;
        let b = dinkelbach_bisection(&sc, &it, 1, &shifted).unwrap().gamma_star;
        prop_assert!((a - b).abs() <= 2.0 * base.eps * a.max(b) + 1e-12 * a, "{a} vs {b}");
    }

    #[test]
    fn ee_falls_with_circuit_power(seed in 0u64..1000, level in 0.0f64..1.0, pc in 0.1f64..10.0, up in 1.05f64..5.0) {
        let sc = unit_scenario(seed, 2, pc);
        let hi = sc.with_circuit_power(pc * up).unwrap();
        let it = levels(level, level);
        let opts = SolverOptions::default();
        let e_lo = dinkelbach_bisection(&sc, &it, 0, &opts).unwrap().gamma_star;
        let e_hi = dinkelbach_bisection(&hi, &it, 0, &opts).unwrap().gamma_star;
        prop_assert!(e_hi < e_lo);
    }

    #[test]
    fn solutions_are_feasible_rank_one(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0, m in 1usize..4) {
        let sc = unit_scenario(seed, m, 1.0);
        let it = levels(a, b);
        for k in 0..2 {
            let sol = dinkelbach_bisection(&sc, &it, k, &SolverOptions::default()).unwrap();
            let s: &Covariance = &sol.covariance;
            let eig = s.eigenvalues();
            let top = eig.iter().cloned().fold(0.0, f64::max);
            prop_assert!(eig.iter().all(|&e| e >= -1e-12 * top.max(1e-300)));
            prop_assert!(s.rank_one_residual() <= 1e-8);
            prop_assert!(s.trace() <= sc.power_cap(k) * (1.0 + 1e-8));
            let j = 1 - k;
            prop_assert!(s.quad_form(sc.channel(k, j)) <= it.get(k, j) * (1.0 + 1e-8) + 1e-300);
            let mut covs = vec![Covariance::zeros(m), Covariance::zeros(m)];
            covs[k] = sol.covariance.clone();
            let ee = link_ee(&sc, &covs, k).unwrap();
            // Without the received IT budget the same S is at least as efficient.
            prop_assert!(ee >= sol.gamma_star * (1.0 - 1e-9));
        }
    }
}
