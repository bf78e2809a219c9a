//! Potential `J_λ(u) = (β/2)u² - λG(u)`, energy `E_λ = J_λ + v²/2`, the left
//! barrier point `l(λ)` and the admissible initial set `D0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GModel;
use crate::roots::{bisect, bisect_newton};
use crate::stationary::{find_p, solve_branches_with, BranchPoint};

/// Energy landscape at one `λ < λ*`.
#[derive(Clone, Debug)]
pub struct EnergyContext {
    g: GModel,
    lambda: f64,
    lambda_star: f64,
    branch: BranchPoint,
    j_phi1: f64,
    j_phi2: f64,
    l: f64,
}

/// Serializable summary of an [`EnergyContext`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub lambda: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub q: f64,
    pub j_phi1: f64,
    pub j_phi2: f64,
    pub l: f64,
}

/// `(β/2)u² - λ G(u)`.
pub fn potential(g: &GModel, lambda: f64, u: f64) -> Result<f64> {
    Ok(0.5 * g.beta() * u * u - lambda * g.big_g(u)?)
}

impl EnergyContext {
    pub fn new(g: &GModel, lambda: f64) -> Result<Self> {
        let p = find_p(g)?;
        let lambda_star = g.beta() * p / g.g(p)?;
        if !(lambda < lambda_star) {
            return Err(Error::Range(format!(
                "energy landscape needs lambda < lambda* = {lambda_star}, got {lambda}"
            )));
        }
        let branch = solve_branches_with(g, lambda, p, lambda_star)?;
        let j_phi1 = potential(g, lambda, branch.phi1)?;
        let j_phi2 = potential(g, lambda, branch.phi2)?;
        let mut ctx = Self {
            g: g.clone(),
            lambda,
            lambda_star,
            branch,
            j_phi1,
            j_phi2,
            l: f64::NAN,
        };
        ctx.l = ctx.find_l()?;
        Ok(ctx)
    }

    pub fn model(&self) -> &GModel {
        &self.g
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn branch(&self) -> &BranchPoint {
        &self.branch
    }

    pub fn phi1(&self) -> f64 {
        self.branch.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.branch.phi2
    }

    pub fn j_phi1(&self) -> f64 {
        self.j_phi1
    }

    /// Height of the barrier at the saddle.
    pub fn j_phi2(&self) -> f64 {
        self.j_phi2
    }

    /// Left point on the barrier level, `J_λ(l) = J_λ(φ2)` with `l < φ1`.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn summary(&self) -> EnergySummary {
        EnergySummary {
            lambda: self.lambda,
            phi1: self.branch.phi1,
            phi2: self.branch.phi2,
            q: self.branch.q,
            j_phi1: self.j_phi1,
            j_phi2: self.j_phi2,
            l: self.l,
        }
    }

    pub fn potential_j(&self, u: f64) -> Result<f64> {
        potential(&self.g, self.lambda, u)
    }

    pub fn energy_e(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.potential_j(u)? + 0.5 * v * v)
    }

    /// Root of `J_λ(u) - J_λ(φ2)` left of `φ1`. `J_λ` decreases there since
    /// `H_λ < 0`, so the root is unique.
    pub fn find_l(&self) -> Result<f64> {
        let target = self.j_phi2;
        let f = |u: f64| -> Result<(f64, f64)> {
            let bd = self.g.bundle(u)?;
            let j = 0.5 * self.g.beta() * u * u - self.lambda * bd.big_g;
            Ok((j - target, self.g.beta() * u - self.lambda * bd.g))
        };
        let right = self.branch.phi1;
        let mut dist = 1.0;
        let anchor = right.min(0.0);
        let mut left = anchor - dist;
        while f(left)?.0 <= 0.0 {
            dist *= 2.0;
            left = anchor - dist;
            if dist > 1e12 {
                return Err(Error::Bracket("barrier point l(lambda)".into()));
            }
        }
        bisect_newton(f, left, right)
    }

    /// Literal membership test: `l < u0 < φ2` and `v0² < J_λ(φ2) - J_λ(u0)`.
    pub fn in_d0(&self, u0: f64, v0: f64) -> bool {
        if !(self.l < u0 && u0 < self.branch.phi2) {
            return false;
        }
        match self.potential_j(u0) {
            Ok(j) => v0 * v0 < self.j_phi2 - j,
            Err(_) => false,
        }
    }

    /// The energy well: `l < u0 < φ2` and `E_λ(u0, v0) < J_λ(φ2)`.
    ///
    /// This sublevel set is positively invariant for every `α ≥ 0`.
    pub fn in_d0_sharp(&self, u0: f64, v0: f64) -> bool {
        if !(self.l < u0 && u0 < self.branch.phi2) {
            return false;
        }
        match self.energy_e(u0, v0) {
            Ok(e) => e < self.j_phi2,
            Err(_) => false,
        }
    }

    /// Inverse of `J_λ` restricted to `[φ1, φ2]`, where it is increasing.
    pub fn j_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= self.j_phi1 && y <= self.j_phi2) {
            return Err(Error::Range(format!(
                "{y} outside [J(phi1), J(phi2)] = [{}, {}]",
                self.j_phi1, self.j_phi2
            )));
        }
        if y == self.j_phi1 {
            return Ok(self.branch.phi1);
        }
        if y == self.j_phi2 {
            return Ok(self.branch.phi2);
        }
        bisect(
            |u| Ok(self.potential_j(u)? - y),
            self.branch.phi1,
            self.branch.phi2,
            1e-13,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{find_lambda_bar, h_eval};

    #[test]
    fn potential_examples() {
        let ctx = EnergyContext::new(&GModel::flores(), 0.125).unwrap();
        assert!(ctx.potential_j(0.5).unwrap().abs() < 1e-15);
        assert_eq!(ctx.potential_j(0.0).unwrap(), 0.0);
        let u = (3.0 - 5f64.sqrt()) / 4.0;
        let oracle = u * u / 2.0 - 0.125 * u / (1.0 - u);
        assert!((ctx.potential_j(u).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle + 0.011_271_243).abs() < 1e-9);
        assert!(ctx.j_phi1() < 0.0);
    }

    #[test]
    fn energy_examples() {
        let ctx = EnergyContext::new(&GModel::flores(), 0.125).unwrap();
        assert_eq!(ctx.energy_e(0.0, 0.0).unwrap(), 0.0);
        assert!(ctx.energy_e(0.5, 0.0).unwrap().abs() < 1e-15);
        assert_eq!(ctx.energy_e(0.0, 1.0).unwrap(), 0.5);
        assert!(ctx.energy_e(1.0, 0.0).is_err());
    }

    #[test]
    fn barrier_point() {
        let g = GModel::flores();
        assert!(EnergyContext::new(&g, 0.125).unwrap().l().abs() < 1e-12);
        let ctx = EnergyContext::new(&g, 0.1).unwrap();
        assert!(
            (ctx.l() + 0.174_788_855_490_6).abs() < 1e-11,
            "l = {}",
            ctx.l()
        );
        assert!((ctx.potential_j(ctx.l()).unwrap() - ctx.j_phi2()).abs() < 1e-12);
        assert!(EnergyContext::new(&g, 0.14).unwrap().l() > 0.0);
    }

    #[test]
    fn d0_membership() {
        let g = GModel::flores();
        let ctx = EnergyContext::new(&g, 0.1).unwrap();
        assert!(ctx.in_d0(0.0, 0.0));
        assert!(!EnergyContext::new(&g, 0.13).unwrap().in_d0(0.0, 0.0));
        for i in 1..50 {
            let u = ctx.phi1() + (ctx.phi2() - ctx.phi1()) * i as f64 / 50.0;
            assert!(ctx.in_d0(u, 0.0) && ctx.in_d0_sharp(u, 0.0));
        }
        // The literal set is smaller than the energy well.
        let u0 = 0.0;
        let vmax = (ctx.j_phi2() - ctx.potential_j(u0).unwrap()).sqrt();
        let v = 1.2 * vmax;
        assert!(!ctx.in_d0(u0, v) && ctx.in_d0_sharp(u0, v));
    }

    #[test]
    fn inverse() {
        let ctx = EnergyContext::new(&GModel::flores(), 0.125).unwrap();
        assert_eq!(ctx.j_inverse(ctx.j_phi1()).unwrap(), ctx.phi1());
        assert_eq!(ctx.j_inverse(ctx.j_phi2()).unwrap(), ctx.phi2());
        assert!((ctx.j_inverse(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(ctx.j_inverse(1.0).is_err());
        assert!(ctx.j_inverse(ctx.j_phi1() - 1e-3).is_err());
    }

    #[test]
    fn rejects_supercritical() {
        assert!(matches!(
            EnergyContext::new(&GModel::flores(), 0.15),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn derivative_is_h() {
        let g = GModel::exponential(1.0).unwrap();
        let lambda = 0.3;
        let h = 1e-5;
        for i in 0..100 {
            let u = -2.0 + 4.0 * i as f64 / 99.0;
            let d = (potential(&g, lambda, u + h).unwrap() - potential(&g, lambda, u - h).unwrap())
                / (2.0 * h);
            assert!((d - h_eval(&g, lambda, u).unwrap().0).abs() < 1e-6);
        }
    }

    #[test]
    fn barrier_sign_tracks_lambda_bar() {
        for g in [
            GModel::flores(),
            GModel::power_even(1, 1.0).unwrap(),
            GModel::exponential(1.0).unwrap(),
        ] {
            let (lb, _) = find_lambda_bar(&g).unwrap();
            let ls = crate::stationary::lambda_star(&g).unwrap();
            for lam in [
                0.5 * lb,
                0.9 * lb,
                lb + 0.3 * (ls - lb),
                lb + 0.9 * (ls - lb),
            ] {
                let ctx = EnergyContext::new(&g, lam).unwrap();
                let expect = (lb - lam).signum();
                assert_eq!(ctx.j_phi2().signum(), expect);
                assert_eq!(ctx.l().signum(), -expect);
                assert!(ctx.l() < ctx.phi1());
            }
        }
    }
}
