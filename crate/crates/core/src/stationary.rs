//! The stationary problem `βφ = λ g(φ)`: fold point, thresholds and the two
//! solution branches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GModel;
use crate::output::fmt17;
use crate::roots::bisect_newton;

/// Scan cap for unbounded domains.
const SCAN_CAP: f64 = 1e6;
/// Closest approach to `b` used when bracketing on bounded domains.
const B_CLAMP: f64 = 1e-14;
/// Relative slack accepted at `λ = λ*`.
const LAMBDA_STAR_SLACK: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    /// Fold abscissa, root of `g(u) - u g'(u)`.
    pub p: f64,
    pub lambda_star: f64,
    pub lambda_bar: f64,
    pub phi2_bar: f64,
    pub beta: f64,
}

impl StationaryProfile {
    pub fn compute(g: &GModel) -> Result<Self> {
        let p = find_p(g)?;
        let lambda_star = g.beta() * p / g.g(p)?;
        let (lambda_bar, phi2_bar) = lambda_bar_from_p(g, p)?;
        Ok(Self {
            p,
            lambda_star,
            lambda_bar,
            phi2_bar,
            beta: g.beta(),
        })
    }
}

/// One row of the bifurcation diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    /// Lower (stable) branch.
    pub phi1: f64,
    /// Upper (saddle) branch.
    pub phi2: f64,
    /// Maximum of `H_λ`, where `β = λ g'(q)`.
    pub q: f64,
}

/// `(H_λ(u), H_λ'(u))` with `H_λ(u) = βu - λ g(u)`.
pub fn h_eval(g: &GModel, lambda: f64, u: f64) -> Result<(f64, f64)> {
    let bd = g.bundle(u)?;
    Ok((g.beta() * u - lambda * bd.g, g.beta() - lambda * bd.g1))
}

/// `H_λ` evaluation for bracketing: overflow close to `b` is mapped to a
/// huge negative value, which is the known sign of `H` there.
fn h_signed(g: &GModel, lambda: f64, u: f64) -> Result<(f64, f64)> {
    match h_eval(g, lambda, u) {
        Err(Error::NonFinite { .. }) => Ok((-f64::MAX, f64::NAN)),
        other => other,
    }
}

/// Points marching from `start` towards `b` (geometrically), used to find
/// the first sign change of a function that is eventually negative.
fn march_towards_b(g: &GModel, start: f64, seed: f64) -> impl Iterator<Item = f64> + '_ {
    let b = g.b();
    let bounded = g.is_bounded();
    let limit = if bounded {
        b - B_CLAMP * b.abs().max(1.0)
    } else {
        SCAN_CAP
    };
    let mut j = 0i32;
    std::iter::from_fn(move || {
        if j > 200 || j == i32::MAX {
            return None;
        }
        j += 1;
        let u = if bounded {
            b - (b - start) * 2f64.powi(-j)
        } else {
            start.max(0.0) + seed * 2f64.powi(j - 1)
        };
        if u > limit {
            j = i32::MAX;
            return bounded.then_some(limit);
        }
        Some(u)
    })
}

/// Unique root of `g(u) - u g'(u)` in `(0, b)`.
pub fn find_p(g: &GModel) -> Result<f64> {
    let g_fn = |u: f64| -> Result<(f64, f64)> {
        match g.bundle(u) {
            Ok(bd) => Ok((bd.g - u * bd.g1, -u * bd.g2)),
            Err(Error::NonFinite { .. }) => Ok((-f64::MAX, f64::NAN)),
            Err(e) => Err(e),
        }
    };
    let mut lo = 0.0;
    for u in march_towards_b(g, 0.0, 1e-3) {
        let (val, _) = g_fn(u)?;
        if val < 0.0 {
            let p = bisect_newton(g_fn, lo, u)?;
            return Ok(p);
        }
        lo = u;
    }
    Err(Error::Bracket(
        "g(u) - u g'(u) never changed sign; model violates the convexity assumptions".into(),
    ))
}

/// `λ* = β p / g(p)`.
pub fn lambda_star(g: &GModel) -> Result<f64> {
    let p = find_p(g)?;
    Ok(g.beta() * p / g.g(p)?)
}

/// Both stationary solutions and the turning point `q` of `H_λ` for `0 < λ ≤ λ*`.
pub fn solve_branches(g: &GModel, lambda: f64) -> Result<BranchPoint> {
    let p = find_p(g)?;
    let ls = g.beta() * p / g.g(p)?;
    solve_branches_with(g, lambda, p, ls)
}

pub(crate) fn solve_branches_with(g: &GModel, lambda: f64, p: f64, ls: f64) -> Result<BranchPoint> {
    if !(lambda > 0.0) {
        return Err(Error::Range(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if lambda > ls * (1.0 + LAMBDA_STAR_SLACK) {
        return Err(Error::Range(format!(
            "no stationary solutions: lambda = {lambda} exceeds lambda* = {ls}"
        )));
    }
    if (lambda - ls).abs() <= LAMBDA_STAR_SLACK * ls {
        return Ok(BranchPoint {
            lambda,
            phi1: p,
            phi2: p,
            q: p,
        });
    }
    let h = |u: f64| h_signed(g, lambda, u);
    let phi1 = bisect_newton(h, 0.0, p)?;

    let mut lo = p;
    let mut phi2 = None;
    for u in march_towards_b(g, p, p.max(1e-3)) {
        if h(u)?.0 < 0.0 {
            phi2 = Some(bisect_newton(h, lo, u)?);
            break;
        }
        lo = u;
    }
    let phi2 = phi2.ok_or_else(|| Error::Bracket(format!("upper branch at lambda = {lambda}")))?;

    let hp = |u: f64| -> Result<(f64, f64)> {
        match g.bundle(u) {
            Ok(bd) => Ok((g.beta() - lambda * bd.g1, -lambda * bd.g2)),
            Err(e) => Err(e),
        }
    };
    let q = bisect_newton(hp, phi1, phi2)?;
    Ok(BranchPoint {
        lambda,
        phi1,
        phi2,
        q,
    })
}

/// `(λ̄, φ̄2)`: the root of `2G(u) - u g(u)` beyond `p` and the parameter
/// whose upper branch sits there.
pub fn find_lambda_bar(g: &GModel) -> Result<(f64, f64)> {
    let p = find_p(g)?;
    lambda_bar_from_p(g, p)
}

fn lambda_bar_from_p(g: &GModel, p: f64) -> Result<(f64, f64)> {
    let i_fn = |u: f64| -> Result<(f64, f64)> {
        match g.bundle(u) {
            Ok(bd) => Ok((2.0 * bd.big_g - u * bd.g, bd.g - u * bd.g1)),
            Err(Error::NonFinite { .. }) => Ok((-f64::MAX, f64::NAN)),
            Err(e) => Err(e),
        }
    };
    let mut lo = p;
    let mut root = None;
    for u in march_towards_b(g, p, p.max(1e-3)) {
        if i_fn(u)?.0 < 0.0 {
            root = Some(bisect_newton(i_fn, lo, u)?);
            break;
        }
        lo = u;
    }
    let phi2_bar = root.ok_or_else(|| {
        Error::Bracket(
            "2G(u) - u g(u) never became negative; model violates the growth assumption near b"
                .into(),
        )
    })?;
    let bd = g.bundle(phi2_bar)?;
    let lambda_bar = g.beta() * phi2_bar / bd.g;
    let alt = 0.5 * g.beta() * phi2_bar * phi2_bar / bd.big_g;
    if (lambda_bar - alt).abs() > 1e-10 * lambda_bar.abs() {
        return Err(Error::Numerical(format!(
            "lambda_bar cross-check failed: {lambda_bar} vs {alt}"
        )));
    }
    Ok((lambda_bar, phi2_bar))
}

/// Branch table over a strictly increasing `λ` grid inside `(0, λ*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationTable {
    pub rows: Vec<BranchPoint>,
}

impl BifurcationTable {
    /// CSV with header `lambda,phi1,phi2,q`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,phi1,phi2,q\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(r.lambda),
                fmt17(r.phi1),
                fmt17(r.phi2),
                fmt17(r.q)
            ));
        }
        s
    }

    /// Loose small-`λ` trend: at the smallest grid point `φ1 < 0.05 p` and
    /// `φ2 > φ̄2`. Only meaningful when the grid reaches down towards zero.
    pub fn small_lambda_trend(&self, profile: &StationaryProfile) -> bool {
        match self.rows.first() {
            Some(r) => r.phi1 < 0.05 * profile.p && r.phi2 > profile.phi2_bar,
            None => false,
        }
    }
}

pub fn bifurcation_sweep(g: &GModel, lambdas: &[f64]) -> Result<BifurcationTable> {
    let p = find_p(g)?;
    let ls = g.beta() * p / g.g(p)?;
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range(
            "lambda grid must be strictly increasing".into(),
        ));
    }
    if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l < ls)) {
        return Err(Error::Range(format!(
            "grid value {bad} outside (0, lambda*) = (0, {ls})"
        )));
    }
    let rows = lambdas
        .par_iter()
        .map(|&l| solve_branches_with(g, l, p, ls))
        .collect::<Result<Vec<_>>>()?;
    for w in rows.windows(2) {
        if !(w[1].phi1 > w[0].phi1 && w[1].phi2 < w[0].phi2) {
            return Err(Error::Numerical(format!(
                "branch monotonicity violated between lambda = {} and {}",
                w[0].lambda, w[1].lambda
            )));
        }
    }
    Ok(BifurcationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn h_eval_examples() {
        let g = GModel::flores();
        let (h, _) = h_eval(&g, 0.125, 0.3).unwrap();
        assert!((h - (0.3 - 0.125 / 0.49)).abs() < 1e-15);
        assert!((h - 0.044_898_0).abs() < 1e-7);
        assert!(h_eval(&g, 0.125, 0.5).unwrap().0.abs() < 1e-15);
        assert_eq!(h_eval(&g, 0.37, 0.0).unwrap().0, -0.37);
        assert!(h_eval(&g, 0.1, 1.0).is_err());
    }

    #[test]
    fn fold_points() {
        assert!(rel(find_p(&GModel::power_even(1, 1.0).unwrap()).unwrap(), 1.0) < 1e-13);
        assert!(rel(find_p(&GModel::flores()).unwrap(), 1.0 / 3.0) < 1e-13);
        assert!(rel(find_p(&GModel::exponential(1.0).unwrap()).unwrap(), 1.0) < 1e-13);
        let g = GModel::exponential(1.0).unwrap();
        let p = find_p(&g).unwrap();
        let bd = g.bundle(p).unwrap();
        assert!((bd.g - p * bd.g1).abs() <= 1e-12 * bd.g);
    }

    #[test]
    fn thresholds() {
        assert!(
            rel(
                lambda_star(&GModel::power_even(1, 1.0).unwrap()).unwrap(),
                0.25
            ) < 1e-13
        );
        assert!(
            rel(
                lambda_star(&GModel::poly_even(1, 1.0).unwrap()).unwrap(),
                0.5
            ) < 1e-13
        );
        assert!(rel(lambda_star(&GModel::flores()).unwrap(), 4.0 / 27.0) < 1e-13);
        // λ* scales with β.
        let g2 = GModel::flores().with_beta(3.0).unwrap();
        assert!(rel(lambda_star(&g2).unwrap(), 3.0 * 4.0 / 27.0) < 1e-13);
    }

    #[test]
    fn branches_flores() {
        let g = GModel::flores();
        let bp = solve_branches(&g, 0.125).unwrap();
        assert!((bp.phi1 - (3.0 - 5f64.sqrt()) / 4.0).abs() < 1e-13);
        assert!((bp.phi2 - 0.5).abs() < 1e-13);
        assert!((bp.q - (1.0 - 4f64.powf(-1.0 / 3.0))).abs() < 1e-13);
        assert!((bp.q - 0.370_039_5).abs() < 1e-7);

        let at = solve_branches(&g, 4.0 / 27.0).unwrap();
        assert!(rel(at.phi1, 1.0 / 3.0) < 1e-13 && at.phi1 == at.phi2 && at.q == at.phi1);

        assert!(matches!(solve_branches(&g, 0.2), Err(Error::Range(_))));
        assert!(matches!(
            solve_branches(&g, 4.0 / 27.0 * (1.0 + 1e-12)),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn lambda_bar_examples() {
        let (lb, pb) = find_lambda_bar(&GModel::power_even(1, 1.0).unwrap()).unwrap();
        assert!(rel(lb, 3f64.sqrt() - 1.5) < 1e-12 && rel(pb, 3f64.sqrt()) < 1e-13);
        let (lb, pb) = find_lambda_bar(&GModel::flores()).unwrap();
        assert!(rel(lb, 0.125) < 1e-13 && rel(pb, 0.5) < 1e-13);
        let (lb, pb) = find_lambda_bar(&GModel::exponential(1.0).unwrap()).unwrap();
        assert!(pb > 1.0 && pb < 2.0 && (pb - 1.5936).abs() < 1e-4);
        assert!(rel(lb, pb * (-pb).exp()) < 1e-13);
        let (lb, pb) = find_lambda_bar(&GModel::poly_even(1, 1.0).unwrap()).unwrap();
        assert!(rel(lb, 3f64.sqrt() / 4.0) < 1e-12 && rel(pb, 3f64.sqrt()) < 1e-13);
    }

    #[test]
    fn sweep_monotone_and_csv() {
        let g = GModel::flores();
        let t = bifurcation_sweep(&g, &[0.05, 0.1, 0.14]).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows[0].phi1 < t.rows[1].phi1 && t.rows[1].phi1 < t.rows[2].phi1);
        assert!(t.rows[0].phi2 > t.rows[1].phi2 && t.rows[1].phi2 > t.rows[2].phi2);
        let csv = t.to_csv();
        assert!(csv.starts_with("lambda,phi1,phi2,q\n"));
        assert_eq!(csv.lines().count(), 4);

        let one = bifurcation_sweep(&g, &[0.125]).unwrap();
        assert!((one.rows[0].phi2 - 0.5).abs() < 1e-13);

        assert!(bifurcation_sweep(&g, &[0.1, 0.05]).is_err());
        assert!(bifurcation_sweep(&g, &[0.1, 0.2]).is_err());

        let prof = StationaryProfile::compute(&g).unwrap();
        let tiny = bifurcation_sweep(&g, &[1e-4, 0.01]).unwrap();
        assert!(tiny.small_lambda_trend(&prof));
    }

    #[test]
    fn power_even_branch_straddles_fold() {
        let bp = solve_branches(&GModel::power_even(1, 1.0).unwrap(), 0.2).unwrap();
        assert!(bp.phi1 < 1.0 && 1.0 < bp.phi2);
        // (1+u)^2 λ = u with λ = 0.2: u^2 - 3u + 1 = 0.
        assert!((bp.phi1 - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-13);
        assert!((bp.phi2 - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }
}
