mod common;

use common::{builtin_models, rng, simpson};
use pullin::FModel;
use rand::Rng;

fn sample_u(g: &pullin::GModel, r: &mut impl Rng, gap: f64) -> f64 {
    let hi = if g.is_bounded() { g.b() - gap } else { 8.0 };
    r.gen_range(-0.9..hi)
}

#[test]
fn antiderivative_matches_quadrature() {
    let mut r = rng(11);
    for (name, g) in builtin_models() {
        for _ in 0..1000 {
            let u = sample_u(&g, &mut r, 1e-2);
            let big_g = g.big_g(u).unwrap();
            let quad = simpson(&|s| g.g(s).unwrap(), 0.0, u, 1e-13 * (1.0 + big_g.abs()));
            assert!(
                (big_g - quad).abs() <= 1e-9 * (1.0 + big_g.abs()),
                "{name} u={u}: {big_g} vs {quad}"
            );
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let mut r = rng(12);
    let h = 1e-5;
    for (name, g) in builtin_models() {
        for _ in 0..1000 {
            // Keep the difference stencil well away from the singularity.
            let u = sample_u(&g, &mut r, 0.05);
            let b = g.bundle(u).unwrap();
            let (gp, gm) = (g.g(u + h).unwrap(), g.g(u - h).unwrap());
            let d1 = (gp - gm) / (2.0 * h);
            // A second difference of g loses ~eps*g/h^2 to rounding, so g'' is
            // checked against a central difference of g'.
            let d2 = (g.g1(u + h).unwrap() - g.g1(u - h).unwrap()) / (2.0 * h);
            assert!(
                (b.g1 - d1).abs() <= 1e-6 * b.g1.abs().max(1.0),
                "{name} g' at {u}"
            );
            assert!(
                (b.g2 - d2).abs() <= 1e-6 * b.g2.abs().max(1.0),
                "{name} g'' at {u}: {} vs {d2}",
                b.g2
            );
        }
    }
}

#[test]
fn damping_derivative_matches_finite_differences() {
    let mut r = rng(13);
    let h = 1e-5;
    for f in [
        FModel::linear(),
        FModel::odd_power(1.0, 1.0).unwrap(),
        FModel::odd_power(0.5, 2.0).unwrap(),
    ] {
        for _ in 0..1000 {
            let mut v: f64 = r.gen_range(-5.0..5.0);
            if v.abs() < 0.1 {
                v += 0.2f64.copysign(v);
            }
            let (_, d) = f.bundle(v);
            let fd = (f.f(v + h) - f.f(v - h)) / (2.0 * h);
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{f:?} at {v}");
        }
    }
}
