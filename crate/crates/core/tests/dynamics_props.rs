mod common;

use common::builtin_models;
use proptest::prelude::*;
use pullin::dynamics::{
    check_energy_identity, classify_orbit, dissipation_profile, integrate, ClassifyOptions, Gamma,
    IntegrationOptions, Problem, Termination,
};
use pullin::energy::EnergyContext;
use pullin::stationary::StationaryProfile;
use pullin::{FModel, GModel};

fn energies(prob: &Problem, states: &[(f64, f64)]) -> Vec<f64> {
    states
        .iter()
        .map(|&(u, v)| prob.energy(u, v).unwrap())
        .collect()
}

#[test]
fn conservative_orbits_keep_their_energy() {
    for (name, g) in builtin_models() {
        let lb = StationaryProfile::compute(&g).unwrap().lambda_bar;
        for frac in [0.2, 0.5, 0.9, 0.99] {
            let prob = Problem::new(g.clone(), FModel::linear(), 0.0, frac * lb, 0.0, 0.0).unwrap();
            let tr = integrate(&prob, 100.0, &IntegrationOptions::default()).unwrap();
            assert_eq!(tr.t_end, 100.0, "{name}");
            let e0 = prob.energy(0.0, 0.0).unwrap();
            let drift = energies(&prob, &tr.states)
                .iter()
                .map(|e| (e - e0).abs())
                .fold(0.0, f64::max);
            assert!(
                drift <= 1e-8 * (1.0 + e0.abs()),
                "{name} at {frac}: drift {drift:e}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn damped_energy_decreases(i in 0usize..4, frac in 0.05f64..0.95, alpha in 0.05f64..5.0, cubic in any::<bool>()) {
        let g = builtin_models().swap_remove(i).1;
        let ls = StationaryProfile::compute(&g).unwrap().lambda_star;
        let f = if cubic { FModel::odd_power(2.0, 1.0).unwrap() } else { FModel::linear() };
        let prob = Problem::new(g, f, alpha, frac * ls, 0.0, 0.0).unwrap();
        let opts = IntegrationOptions { stop_on_entrapment: false, ..Default::default() };
        let tr = integrate(&prob, 50.0, &opts).unwrap();
        let e = energies(&prob, &tr.states);
        for w in e.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8, "{} -> {}", w[0], w[1]);
        }
        let q = dissipation_profile(&prob, &tr);
        prop_assert!(q.iter().all(|&x| x >= -1e-12));
        for w in q.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(check_energy_identity(&prob, &tr) <= 1e-6);
    }
}

#[test]
fn conservative_flip_sits_at_lambda_bar() {
    let g = GModel::flores();
    let lb = StationaryProfile::compute(&g).unwrap().lambda_bar;
    let classify = |lambda: f64| {
        let prob = Problem::new(g.clone(), FModel::linear(), 0.0, lambda, 0.0, 0.0).unwrap();
        classify_orbit(&prob, &ClassifyOptions::default())
            .unwrap()
            .gamma
    };
    for k in 1..=12 {
        let eps = 0.5f64.powi(k);
        assert_eq!(classify(lb * (1.0 - eps)), Gamma::Periodic, "k = {k}");
        assert_eq!(classify(lb * (1.0 + eps)), Gamma::Gamma3, "k = {k}");
    }
    let (mut lo, mut hi) = (0.1, 0.14);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if classify(mid) == Gamma::Periodic {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((0.5 * (lo + hi) - lb).abs() < 1e-4);
}

#[test]
fn quench_reaches_the_wall_with_large_speed() {
    for lambda in [0.15, 0.2, 0.5] {
        for alpha in [0.0, 0.5] {
            let prob = Problem::flores(alpha, lambda).unwrap();
            let tr = integrate(&prob, 200.0, &IntegrationOptions::default()).unwrap();
            assert_eq!(
                tr.termination,
                Termination::Quench,
                "lambda = {lambda}, alpha = {alpha}"
            );
            assert!(tr.t_end < 200.0);
            assert!(tr.last().1 > 1e3);
        }
    }
}

#[test]
fn start_beyond_saddle_escapes() {
    for (name, g) in builtin_models() {
        let ls = StationaryProfile::compute(&g).unwrap().lambda_star;
        for frac in [0.3, 0.8] {
            let ctx = EnergyContext::new(&g, frac * ls).unwrap();
            let top = if g.is_bounded() {
                g.b()
            } else {
                ctx.phi2() + 2.0
            };
            for s in [0.1, 0.5, 0.9] {
                let u0 = ctx.phi2() + s * (top - ctx.phi2());
                for alpha in [0.0, 1.0] {
                    let prob = Problem::new(g.clone(), FModel::linear(), alpha, frac * ls, u0, 0.0)
                        .unwrap();
                    let c = classify_orbit(&prob, &ClassifyOptions::default()).unwrap();
                    assert_eq!(c.gamma, Gamma::Gamma3, "{name}: u0 = {u0}, alpha = {alpha}");
                }
            }
        }
    }
}

/// Fixed-step RK4 on `(u, v, Q)`, independent of the library integrator.
fn rk4_dissipation(alpha: f64, lambda: f64, t_end: f64, n: usize) -> (f64, f64, f64) {
    let rhs = |y: [f64; 3]| {
        let g = 1.0 / ((1.0 - y[0]) * (1.0 - y[0]));
        [y[1], -alpha * y[1] - y[0] + lambda * g, y[1] * y[1]]
    };
    let h = t_end / n as f64;
    let mut y = [0.0; 3];
    for _ in 0..n {
        let add =
            |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, 0.5 * h));
        let k3 = rhs(add(y, k2, 0.5 * h));
        let k4 = rhs(add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (y[0], y[1], y[2])
}

#[test]
fn damped_flores_identity_against_reintegration() {
    let prob = Problem::flores(1.0, 0.1).unwrap();
    let opts = IntegrationOptions {
        stop_on_entrapment: false,
        ..Default::default()
    };
    let tr = integrate(&prob, 50.0, &opts).unwrap();
    assert!(check_energy_identity(&prob, &tr) <= 1e-6);
    let q = *dissipation_profile(&prob, &tr).last().unwrap();
    let (u, v, q_ref) = rk4_dissipation(1.0, 0.1, 50.0, 200_000);
    let (u_end, v_end) = tr.last();
    assert!((u - u_end).abs() < 1e-9 && (v - v_end).abs() < 1e-9);
    assert!((q - q_ref).abs() < 1e-9, "{q} vs {q_ref}");
}
