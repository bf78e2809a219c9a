//! Nonlinearity (`g`) and damping (`f`) families.
//!
//! Every built-in family carries closed forms for the function, its first
//! two derivatives and its antiderivative `G(u) = ∫₀ᵘ g(s) ds`, so energy
//! bookkeeping downstream is exact up to round-off.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar callback used by tabulated models.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied `g` with all four evaluations provided explicitly.
#[derive(Clone)]
pub struct TabulatedG {
    pub g: ScalarFn,
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub antiderivative: ScalarFn,
}

impl fmt::Debug for TabulatedG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TabulatedG { .. }")
    }
}

#[derive(Clone, Debug)]
pub enum GFamily {
    /// `(1+u)^{2k}`
    PowerEven {
        k: u32,
    },
    /// `e^u`
    Exponential,
    /// `1+u^{2k}`
    PolyEven {
        k: u32,
    },
    /// `(1-u)^{-p}`, singular at `u = 1`
    InversePower {
        p: f64,
    },
    Tabulated(TabulatedG),
}

/// `g` together with its domain bound `b` and the stiffness `β`.
#[derive(Clone, Debug)]
pub struct GModel {
    family: GFamily,
    b: f64,
    beta: f64,
}

/// `(g, g', g'', G)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GBundle {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub big_g: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidModel(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

impl GModel {
    pub fn power_even(k: u32, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if k == 0 {
            return Err(Error::InvalidModel("power_even requires k >= 1".into()));
        }
        Ok(Self {
            family: GFamily::PowerEven { k },
            b: f64::INFINITY,
            beta,
        })
    }

    pub fn exponential(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            family: GFamily::Exponential,
            b: f64::INFINITY,
            beta,
        })
    }

    pub fn poly_even(k: u32, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if k == 0 {
            return Err(Error::InvalidModel("poly_even requires k >= 1".into()));
        }
        Ok(Self {
            family: GFamily::PolyEven { k },
            b: f64::INFINITY,
            beta,
        })
    }

    pub fn inverse_power(p: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidModel(format!(
                "inverse_power requires p > 1, got {p}"
            )));
        }
        Ok(Self {
            family: GFamily::InversePower { p },
            b: 1.0,
            beta,
        })
    }

    /// The MEMS model `g(u) = (1-u)^{-2}` with `β = 1`.
    pub fn flores() -> Self {
        Self::inverse_power(2.0, 1.0).expect("p = 2 is a valid exponent")
    }

    pub fn tabulated(tab: TabulatedG, b: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(b > 0.0) || b.is_nan() {
            return Err(Error::InvalidModel(format!(
                "domain bound b must be positive, got {b}"
            )));
        }
        Ok(Self {
            family: GFamily::Tabulated(tab),
            b,
            beta,
        })
    }

    pub fn family(&self) -> &GFamily {
        &self.family
    }

    /// Upper end of the domain `(-∞, b)`; `+∞` when unbounded.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_bounded(&self) -> bool {
        self.b.is_finite()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            ..self.clone()
        })
    }

    /// Evaluates `g, g', g'', G` at `u < b`.
    pub fn bundle(&self, u: f64) -> Result<GBundle> {
        if !(u < self.b) {
            return Err(Error::Domain { u, b: self.b });
        }
        let out = match &self.family {
            GFamily::PowerEven { k } => {
                let n = 2 * *k as i32;
                let w = 1.0 + u;
                let nf = n as f64;
                GBundle {
                    g: w.powi(n),
                    g1: nf * w.powi(n - 1),
                    g2: nf * (nf - 1.0) * w.powi(n - 2),
                    big_g: (w.powi(n + 1) - 1.0) / (nf + 1.0),
                }
            }
            GFamily::Exponential => {
                let e = u.exp();
                GBundle {
                    g: e,
                    g1: e,
                    g2: e,
                    big_g: u.exp_m1(),
                }
            }
            GFamily::PolyEven { k } => {
                let n = 2 * *k as i32;
                let nf = n as f64;
                GBundle {
                    g: 1.0 + u.powi(n),
                    g1: nf * u.powi(n - 1),
                    g2: nf * (nf - 1.0) * u.powi(n - 2),
                    big_g: u + u.powi(n + 1) / (nf + 1.0),
                }
            }
            GFamily::InversePower { p } => {
                let w = 1.0 - u;
                let g = w.powf(-p);
                GBundle {
                    g,
                    g1: p * g / w,
                    g2: p * (p + 1.0) * g / (w * w),
                    big_g: (w.powf(1.0 - p) - 1.0) / (p - 1.0),
                }
            }
            GFamily::Tabulated(t) => GBundle {
                g: (t.g)(u),
                g1: (t.g1)(u),
                g2: (t.g2)(u),
                big_g: (t.antiderivative)(u),
            },
        };
        if !(out.g.is_finite() && out.g1.is_finite() && out.g2.is_finite() && out.big_g.is_finite())
        {
            return Err(Error::NonFinite { u });
        }
        Ok(out)
    }

    pub fn g(&self, u: f64) -> Result<f64> {
        self.bundle(u).map(|b| b.g)
    }

    pub fn g1(&self, u: f64) -> Result<f64> {
        self.bundle(u).map(|b| b.g1)
    }

    pub fn big_g(&self, u: f64) -> Result<f64> {
        self.bundle(u).map(|b| b.big_g)
    }
}

/// Free function form of [`GModel::bundle`].
pub fn g_bundle(model: &GModel, u: f64) -> Result<GBundle> {
    model.bundle(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FFamily {
    /// `f(v) = v`
    Linear,
    /// `f(v) = c·|v|^θ·v`
    OddPower { theta: f64, c: f64 },
}

/// Damping law together with the growth constants `η`, `θ` that bound it:
/// `|f(v)| ≤ η|v|^{θ+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FModel {
    family: FFamily,
    eta: f64,
    theta: f64,
    f_prime_0: f64,
}

impl FModel {
    pub fn linear() -> Self {
        Self {
            family: FFamily::Linear,
            eta: 1.0,
            theta: 0.0,
            f_prime_0: 1.0,
        }
    }

    pub fn odd_power(theta: f64, c: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "odd_power requires theta > 0, got {theta}"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidModel(format!(
                "odd_power requires c > 0, got {c}"
            )));
        }
        Ok(Self {
            family: FFamily::OddPower { theta, c },
            eta: c,
            theta,
            f_prime_0: 0.0,
        })
    }

    pub fn family(&self) -> FFamily {
        self.family
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn f_prime_0(&self) -> f64 {
        self.f_prime_0
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, FFamily::Linear)
    }

    /// `f(v)`
    #[inline]
    pub fn f(&self, v: f64) -> f64 {
        match self.family {
            FFamily::Linear => v,
            FFamily::OddPower { theta, c } => c * v.abs().powf(theta) * v,
        }
    }

    /// `(f(v), f'(v))`
    pub fn bundle(&self, v: f64) -> (f64, f64) {
        match self.family {
            FFamily::Linear => (v, 1.0),
            FFamily::OddPower { theta, c } => {
                let a = v.abs().powf(theta);
                (c * a * v, c * (theta + 1.0) * a)
            }
        }
    }
}

pub fn f_bundle(model: &FModel, v: f64) -> (f64, f64) {
    model.bundle(v)
}

// ---------------------------------------------------------------------------
// JSON model documents

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    PowerEven { k: u32 },
    Exponential {},
    PolyEven { k: u32 },
    InversePower { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Linear {},
    OddPower { theta: f64, c: f64 },
}

impl Default for FSpec {
    fn default() -> Self {
        FSpec::Linear {}
    }
}

/// `{"g": {"family": "inverse_power", "p": 2.0}, "beta": 1.0, "f": {"family": "linear"}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub g: GSpec,
    pub beta: f64,
    #[serde(default)]
    pub f: FSpec,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<(GModel, FModel)> {
        let g = match self.g {
            GSpec::PowerEven { k } => GModel::power_even(k, self.beta)?,
            GSpec::Exponential {} => GModel::exponential(self.beta)?,
            GSpec::PolyEven { k } => GModel::poly_even(k, self.beta)?,
            GSpec::InversePower { p } => GModel::inverse_power(p, self.beta)?,
        };
        let f = match self.f {
            FSpec::Linear {} => FModel::linear(),
            FSpec::OddPower { theta, c } => FModel::odd_power(theta, c)?,
        };
        Ok((g, f))
    }
}

// ---------------------------------------------------------------------------
// Assumption checks

/// Sampling window for [`validate_assumptions`].
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    /// Lower end of the `g` grid.
    pub u_min: f64,
    /// Upper end of the `g` grid when `b = ∞`.
    pub u_max_unbounded: f64,
    /// Relative gap kept from `b` when `b < ∞`.
    pub b_margin: f64,
    /// The `f` grid covers `(-v_max, v_max)`.
    pub v_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        // PowerEven vanishes at u = -1, so the window stays to its right.
        Self {
            u_min: -0.9,
            u_max_unbounded: 20.0,
            b_margin: 1e-6,
            v_max: 10.0,
            points: 2001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Point at which the check was closest to failing (or failed worst).
    pub witness: Option<f64>,
    /// Value of the checked quantity at the witness.
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Running record of the tightest margin seen by one check.
struct Worst {
    at: Option<f64>,
    margin: f64,
    value: f64,
    failed: bool,
}

impl Worst {
    fn new() -> Self {
        Self {
            at: None,
            margin: f64::INFINITY,
            value: f64::NAN,
            failed: false,
        }
    }

    /// `margin` is how far the check clears its bound at `x` (negative on failure).
    fn push(&mut self, x: f64, margin: f64, value: f64) {
        self.record(x, margin, value, false);
    }

    /// As `push`, but a zero margin also fails.
    fn push_strict(&mut self, x: f64, margin: f64, value: f64) {
        self.record(x, margin, value, true);
    }

    fn record(&mut self, x: f64, margin: f64, value: f64, strict: bool) {
        let margin = if margin.is_nan() {
            f64::NEG_INFINITY
        } else {
            margin
        };
        self.failed |= margin < 0.0 || (strict && margin == 0.0);
        if self.at.is_none() || margin < self.margin {
            self.at = Some(x);
            self.margin = margin;
            self.value = value;
        }
    }

    fn entry(self, name: &str, detail: &str) -> CheckEntry {
        CheckEntry {
            name: name.to_string(),
            passed: !self.failed && self.at.is_some(),
            witness: self.at,
            value: Some(self.value),
            detail: detail.to_string(),
        }
    }
}

/// Samples the structural assumptions on `g` (g1–g5) and `f` (f2–f4) and
/// reports each one with its tightest witness. Failures are report entries,
/// never errors.
pub fn validate_assumptions(g: &GModel, f: &FModel, grid: &GridSpec) -> ValidationReport {
    let mut entries = Vec::new();
    let n = grid.points.max(1000);
    let b = g.b();
    let u_hi = if g.is_bounded() {
        b - grid.b_margin * b.abs().max(1.0)
    } else {
        grid.u_max_unbounded
    };
    let us: Vec<f64> = linspace(grid.u_min, u_hi, n)
        .chain(std::iter::once(0.0))
        .collect();

    let mut g1_smooth = Worst::new();
    let mut g2_pos = Worst::new();
    let mut g4_convex = Worst::new();
    for &u in &us {
        match g.bundle(u) {
            Ok(bd) => {
                g1_smooth.push(u, 1.0, bd.g);
                g2_pos.push_strict(u, bd.g, bd.g);
                g4_convex.push_strict(u, bd.g2, bd.g2);
            }
            Err(_) => {
                g1_smooth.push(u, -1.0, f64::NAN);
            }
        }
    }
    entries.push(g1_smooth.entry("g1", "g, g', g'' finite on the sampled domain"));
    entries.push(g2_pos.entry("g2", "g(u) > 0"));

    let mut norm = Worst::new();
    match g.bundle(0.0) {
        Ok(bd) => norm.push(0.0, 1e-12 - (bd.g - 1.0).abs(), bd.g),
        Err(_) => norm.push(0.0, -1.0, f64::NAN),
    }
    entries.push(norm.entry("g2_normalization", "g(0) = 1"));

    let mut g3 = Worst::new();
    match g.bundle(0.0) {
        Ok(bd) => g3.push(0.0, bd.g1 + 1e-12, bd.g1),
        Err(_) => g3.push(0.0, -1.0, f64::NAN),
    }
    entries.push(g3.entry("g3", "g'(0) >= 0"));
    entries.push(g4_convex.entry("g4", "g''(u) > 0"));
    entries.push(check_g5(g));

    let vs: Vec<f64> = linspace(-grid.v_max, grid.v_max, n).collect();
    let mut f2 = Worst::new();
    let f0 = f.f(0.0);
    f2.push(0.0, -f0.abs(), f0);
    entries.push(f2.entry("f2", "f(0) = 0"));

    let mut f3 = Worst::new();
    let mut f4 = Worst::new();
    for &v in &vs {
        let fv = f.f(v);
        if v != 0.0 {
            f3.push_strict(v, fv * v, fv * v);
        }
        let bound = f.eta() * v.abs().powf(f.theta() + 1.0);
        let slack = 1e-12 * bound.max(1.0);
        f4.push(v, bound + slack - fv.abs(), fv.abs());
    }
    entries.push(f3.entry("f3", "f(v) v > 0 for v != 0"));
    entries.push(f4.entry("f4", "|f(v)| <= eta |v|^(theta+1)"));

    let mut fp = Worst::new();
    fp.push(0.0, f.f_prime_0(), f.f_prime_0());
    entries.push(fp.entry("f_prime_0", "f'(0) >= 0"));

    ValidationReport { entries }
}

fn check_g5(g: &GModel) -> CheckEntry {
    let mut w = Worst::new();
    if !g.is_bounded() {
        // g'' bounded below on [R, 10R] by tau = g''(R).
        let r = 10.0;
        let tau = match g.bundle(r) {
            Ok(bd) => bd.g2,
            Err(_) => f64::NAN,
        };
        if !(tau > 0.0) {
            w.push(r, -1.0, tau);
        }
        for u in linspace(r, 10.0 * r, 1000) {
            match g.bundle(u) {
                Ok(bd) => w.push(u, bd.g2 - tau * (1.0 - 1e-12), bd.g2),
                // Overflow far out means g'' is huge, which satisfies the bound.
                Err(Error::NonFinite { .. }) => w.push(u, f64::MAX, f64::INFINITY),
                Err(_) => w.push(u, -1.0, f64::NAN),
            }
        }
        return w.entry("g5", "g'' >= tau > 0 on [R, 10R], R = 10");
    }

    // Approach b along u_j = b(1 - 2^-j); large values and a negative
    // terminal trend of G - (u/2) g are required.
    let b = g.b();
    let mut last = None;
    let mut tail = Vec::new();
    for j in 1..=45 {
        let u = b * (1.0 - 2f64.powi(-j));
        match g.bundle(u) {
            Ok(bd) => {
                last = Some((u, bd));
                tail.push((u, bd.big_g - 0.5 * u * bd.g));
            }
            Err(_) => break,
        }
    }
    let Some((u_last, bd)) = last else {
        w.push(b, -1.0, f64::NAN);
        return w.entry("g5", "no evaluable points approaching b");
    };
    const BIG: f64 = 1e6;
    w.push(u_last, bd.g - BIG, bd.g);
    w.push(u_last, bd.g1 - BIG, bd.g1);
    w.push(u_last, bd.g2 - BIG, bd.g2);
    w.push(u_last, bd.big_g - BIG, bd.big_g);
    let k = tail.len();
    let start = k.saturating_sub(10);
    for &(u, val) in &tail[start..] {
        w.push(u, -val, val);
    }
    if k >= 2 {
        let (u, v) = tail[k - 1];
        w.push(u, tail[start].1 - v, v);
    }
    w.entry("g5", "g, g', g'', G -> +inf and G - (u/2) g < 0 as u -> b-")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn bundle_closed_forms() {
        let pe = GModel::power_even(1, 1.0).unwrap().bundle(0.0).unwrap();
        assert_eq!((pe.g, pe.g1, pe.g2, pe.big_g), (1.0, 2.0, 2.0, 0.0));

        let ip = GModel::flores().bundle(0.5).unwrap();
        assert!(close(ip.g, 4.0, 1e-15) && close(ip.g1, 16.0, 1e-15));
        assert!(close(ip.g2, 96.0, 1e-15) && close(ip.big_g, 1.0, 1e-15));

        let e = std::f64::consts::E;
        let ex = GModel::exponential(1.0).unwrap().bundle(1.0).unwrap();
        assert!(close(ex.g, e, 1e-15) && close(ex.g1, e, 1e-15) && close(ex.g2, e, 1e-15));
        assert!(close(ex.big_g, e - 1.0, 1e-15));
    }

    #[test]
    fn domain_errors() {
        let m = GModel::flores();
        assert!(matches!(m.bundle(1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.bundle(2.0), Err(Error::Domain { .. })));
        assert!(matches!(
            m.bundle(1.0 - 1e-300),
            Err(Error::Domain { .. } | Error::NonFinite { .. })
        ));
        assert!(GModel::exponential(1.0).unwrap().bundle(1e3).is_err());
    }

    #[test]
    fn f_bundle_examples() {
        assert_eq!(FModel::linear().bundle(2.0), (2.0, 1.0));
        assert_eq!(
            FModel::odd_power(1.0, 1.0).unwrap().bundle(-2.0),
            (-4.0, 4.0)
        );
        assert_eq!(FModel::linear().bundle(0.0), (0.0, 1.0));
    }

    #[test]
    fn builtin_models_validate() {
        let grid = GridSpec::default();
        for g in [
            GModel::flores(),
            GModel::poly_even(1, 1.0).unwrap(),
            GModel::power_even(1, 1.0).unwrap(),
            GModel::exponential(1.0).unwrap(),
            GModel::inverse_power(1.5, 2.0).unwrap(),
        ] {
            let rep = validate_assumptions(&g, &FModel::linear(), &grid);
            assert!(rep.all_passed(), "{g:?}: {rep:#?}");
        }
        let rep = validate_assumptions(
            &GModel::flores(),
            &FModel::odd_power(1.0, 2.0).unwrap(),
            &grid,
        );
        assert!(rep.all_passed(), "{rep:#?}");
    }

    #[test]
    fn linear_g_fails_convexity() {
        let tab = TabulatedG {
            g: Arc::new(|u| 1.0 - u),
            g1: Arc::new(|_| -1.0),
            g2: Arc::new(|_| 0.0),
            antiderivative: Arc::new(|u| u - 0.5 * u * u),
        };
        let g = GModel::tabulated(tab, 1.0, 1.0).unwrap();
        let rep = validate_assumptions(&g, &FModel::linear(), &GridSpec::default());
        let g4 = rep.entry("g4").unwrap();
        assert!(!g4.passed);
        assert_eq!(g4.value, Some(0.0));
        assert!(!rep.entry("g3").unwrap().passed);
    }

    #[test]
    fn json_spec_strict() {
        let spec = ModelSpec::from_json(
            r#"{"g": {"family": "inverse_power", "p": 2.0}, "beta": 1.0, "f": {"family": "linear"}}"#,
        )
        .unwrap();
        let (g, f) = spec.build().unwrap();
        assert_eq!(g.b(), 1.0);
        assert!(f.is_linear());
        assert!(
            ModelSpec::from_json(r#"{"g": {"family": "exponential"}, "beta": 1.0, "x": 1}"#)
                .is_err()
        );
        assert!(
            ModelSpec::from_json(r#"{"g": {"family": "exponential", "p": 3}, "beta": 1.0}"#)
                .is_err()
        );
        assert!(ModelSpec::from_json(
            r#"{"g": {"family": "inverse_power", "p": 0.5}, "beta": 1.0}"#
        )
        .unwrap()
        .build()
        .is_err());
    }
}
