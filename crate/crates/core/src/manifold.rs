//! Linearisation at the equilibria, shooting along the saddle's stable
//! manifold, and the dynamical threshold built from it.
//!
//! The stable manifold of `(φ2, 0)` is traced in reversed time through the
//! change of variables `U = φ2 - u`, `V = v`, `s = -t`:
//!
//! ```text
//! U' = V,    V' = α V + H_λ(φ2 - U)
//! ```
//!
//! starting on the unstable eigenvector `(1, η⁺)` of the origin. The branch
//! with `V > 0` is the graph `V = Φ(U)`; where it returns to `V = 0` at
//! `U = P_α`, the manifold meets the `u`-axis at `x_α = φ2 - P_α`. The origin
//! lies in the basin of the sink exactly when `x_α < 0`.
//!
//! Only linear damping `f(v) = v` is supported here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, IntegrationOptions, Problem, Trajectory};
use crate::energy::EnergyContext;
use crate::error::{Error, Result};
use crate::model::{FModel, GModel};
use crate::ode::{Dopri5, Rhs, Step, StepFailure, StepOptions};
use crate::output::fmt17;
use crate::stationary::{h_eval, StationaryProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equilibrium {
    Phi1,
    Phi2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    StableFocus,
    StableNode,
    Centre,
    Saddle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenData {
    pub equilibrium: Equilibrium,
    pub mu_minus: Complex64,
    pub mu_plus: Complex64,
    pub kind: EquilibriumKind,
    /// `H_λ'` at the equilibrium.
    pub h_prime: f64,
}

/// Eigenvalues of the linearisation `[[0, 1], [-H_λ'(φ_i), -α f'(0)]]`.
pub fn equilibrium_eigenvalues(
    g: &GModel,
    f: &FModel,
    lambda: f64,
    alpha: f64,
    which: Equilibrium,
) -> Result<EigenData> {
    let ctx = EnergyContext::new(g, lambda)?;
    let phi = match which {
        Equilibrium::Phi1 => ctx.phi1(),
        Equilibrium::Phi2 => ctx.phi2(),
    };
    let (_, hp) = h_eval(g, lambda, phi)?;
    let a = alpha * f.f_prime_0();
    let root = Complex64::new(a * a - 4.0 * hp, 0.0).sqrt();
    let mu_minus = (-a - root) / 2.0;
    let mu_plus = (-a + root) / 2.0;
    let kind = if hp < 0.0 {
        EquilibriumKind::Saddle
    } else if a == 0.0 {
        EquilibriumKind::Centre
    } else if a < 2.0 * hp.sqrt() {
        EquilibriumKind::StableFocus
    } else {
        EquilibriumKind::StableNode
    };
    Ok(EigenData {
        equilibrium: which,
        mu_minus,
        mu_plus,
        kind,
        h_prime: hp,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShootOutcome {
    HitAxis,
    EscapedCap,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub lambda: f64,
    pub alpha: f64,
    /// Where the graph `V = Φ(U)` returns to `V = 0`.
    pub p_alpha: Option<f64>,
    /// `φ2 - P_α`.
    pub x_alpha: Option<f64>,
    pub eta_plus: f64,
    pub outcome: ShootOutcome,
}

impl ShootResult {
    /// Sign of `x_α` for bisection: an escape past the cap counts as negative.
    pub fn x_sign(&self) -> Option<f64> {
        match self.outcome {
            ShootOutcome::HitAxis => self.x_alpha,
            ShootOutcome::EscapedCap => Some(f64::NEG_INFINITY),
            ShootOutcome::Inconclusive => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    /// Distance of the seed from the saddle; defaults to `1e-8 max(1, φ2)`.
    pub seed_offset: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub event_tol: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            seed_offset: None,
            rtol: 1e-12,
            atol: 1e-15,
            event_tol: 1e-13,
            max_steps: 1_000_000,
        }
    }
}

struct Reversed<'a> {
    g: &'a GModel,
    lambda: f64,
    alpha: f64,
    phi2: f64,
}

impl Rhs<2> for Reversed<'_> {
    fn eval(&self, _s: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        let (h, _) = h_eval(self.g, self.lambda, self.phi2 - y[0]).ok()?;
        Some([y[1], self.alpha * y[1] + h])
    }
}

/// The traced branch `V = Φ(U)` with its dense output.
pub struct ManifoldBranch {
    pub result: ShootResult,
    pub phi2: f64,
    pub seed: [f64; 2],
    steps: Vec<Step<2>>,
}

impl ManifoldBranch {
    /// `Φ(U)` on the traced part of the graph.
    pub fn phi_at(&self, u: f64) -> Option<f64> {
        let idx = self.steps.partition_point(|s| s.y1[0] < u);
        let step = self.steps.get(idx)?;
        if !(u >= step.y0[0] && u <= step.y1[0]) {
            return None;
        }
        let (mut a, mut b) = (step.t0, step.t1);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if step.eval(m)[0] < u {
                a = m;
            } else {
                b = m;
            }
        }
        Some(step.eval(0.5 * (a + b))[1])
    }

    /// Largest `U` covered by the graph.
    pub fn u_extent(&self) -> f64 {
        self.steps.last().map(|s| s.y1[0]).unwrap_or(self.seed[0])
    }
}

fn check_window(profile: &StationaryProfile, lambda: f64) -> Result<()> {
    if !(lambda > profile.lambda_bar && lambda < profile.lambda_star) {
        return Err(Error::Precondition(format!(
            "shooting needs lambda in (lambda_bar, lambda*) = ({}, {}), got {lambda}",
            profile.lambda_bar, profile.lambda_star
        )));
    }
    Ok(())
}

/// Traces the manifold branch and keeps the steps for dense evaluation.
pub fn trace_manifold(
    g: &GModel,
    lambda: f64,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<ManifoldBranch> {
    let profile = StationaryProfile::compute(g)?;
    check_window(&profile, lambda)?;
    trace_in_window(g, lambda, alpha, opts)
}

fn trace_in_window(
    g: &GModel,
    lambda: f64,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<ManifoldBranch> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Precondition(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let ctx = EnergyContext::new(g, lambda)?;
    let phi2 = ctx.phi2();
    let (_, hp2) = h_eval(g, lambda, phi2)?;
    let eta_plus = 0.5 * (alpha + (alpha * alpha - 4.0 * hp2).sqrt());
    let delta = opts.seed_offset.unwrap_or(1e-8 * phi2.abs().max(1.0));
    let cap = if g.is_bounded() {
        phi2 - (ctx.l() - 1.0)
    } else {
        10.0 * phi2
    };
    let seed = [delta, delta * eta_plus];

    let mut result = ShootResult {
        lambda,
        alpha,
        p_alpha: None,
        x_alpha: None,
        eta_plus,
        outcome: ShootOutcome::Inconclusive,
    };
    let rhs = Reversed {
        g,
        lambda,
        alpha,
        phi2,
    };
    let step_opts = StepOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: f64::INFINITY,
        h_init: None,
    };
    let mut stepper = Dopri5::new(rhs, 0.0, seed, step_opts)
        .map_err(|_| Error::Numerical("seed outside the domain".into()))?;
    let mut steps = Vec::new();

    for _ in 0..opts.max_steps {
        let step = match stepper.step(f64::INFINITY) {
            Ok(s) => s,
            Err(StepFailure::Underflow { .. } | StepFailure::Undefined { .. }) => break,
        };
        if step.y1[1] <= 0.0 {
            if let Some((se, ye)) = step.locate(|y| y[1], opts.event_tol) {
                let mut y =
                    Dopri5::raw_step(stepper.rhs(), step.t0, &step.y0, se - step.t0).unwrap_or(ye);
                // One Newton correction onto V = 0 along the flow.
                if let Some([du, dv]) = stepper.rhs().eval(se, &y) {
                    if dv != 0.0 {
                        let ds = -y[1] / dv;
                        y = [y[0] + du * ds, 0.0];
                    }
                }
                if y[0] > 0.0 {
                    let p = y[0];
                    result.p_alpha = Some(p);
                    result.x_alpha = Some(phi2 - p);
                    result.outcome = if p > cap {
                        ShootOutcome::EscapedCap
                    } else {
                        ShootOutcome::HitAxis
                    };
                }
            }
            steps.push(step);
            break;
        }
        steps.push(step);
        if step.y1[0] > cap {
            result.outcome = ShootOutcome::EscapedCap;
            break;
        }
    }
    Ok(ManifoldBranch {
        result,
        phi2,
        seed,
        steps,
    })
}

/// Intersection of the saddle's stable manifold with the `u`-axis.
pub fn shoot_stable_manifold(
    g: &GModel,
    lambda: f64,
    alpha: f64,
    opts: &ShootOptions,
) -> Result<ShootResult> {
    trace_manifold(g, lambda, alpha, opts).map(|b| b.result)
}

/// Sign of `x_α(λ)`, retrying with halved seed offsets when inconclusive.
fn x_sign(g: &GModel, lambda: f64, alpha: f64, opts: &ShootOptions) -> Result<f64> {
    let mut o = *opts;
    for _ in 0..4 {
        let branch = trace_in_window(g, lambda, alpha, &o)?;
        if let Some(x) = branch.result.x_sign() {
            return Ok(x);
        }
        let d = o.seed_offset.unwrap_or(1e-8 * branch.phi2.abs().max(1.0));
        o.seed_offset = Some(0.5 * d);
    }
    Err(Error::Numerical(format!(
        "shooting inconclusive at lambda = {lambda}, alpha = {alpha}"
    )))
}

/// `α*(λ)`: the damping at which the manifold passes through the origin.
/// Below it the orbit from rest escapes, above it it settles on `φ1`.
pub fn alpha_star(g: &GModel, lambda: f64, tol: f64) -> Result<f64> {
    alpha_star_with(g, lambda, tol, &ShootOptions::default())
}

pub fn alpha_star_with(g: &GModel, lambda: f64, tol: f64, opts: &ShootOptions) -> Result<f64> {
    let profile = StationaryProfile::compute(g)?;
    check_window(&profile, lambda)?;
    let x0 = x_sign(g, lambda, 0.0, opts)?;
    if !(x0 > 0.0) {
        return Err(Error::Bracket(format!(
            "x_0 = {x0} <= 0 at lambda = {lambda}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while x_sign(g, lambda, hi, opts)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket(format!(
                "x_alpha stayed positive up to alpha = {hi}"
            )));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if x_sign(g, lambda, mid, opts)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dynamical threshold `λ(0,0)(α)`: the largest `λ` for which the orbit
/// from rest at the origin stays bounded.
///
/// `α*(λ)` levels off at a finite value as `λ → λ*` (about 0.7918 for the
/// `flores` model), so for damping above that limit the orbit is bounded for
/// every `λ < λ*` and `λ*` is returned.
pub fn lambda_threshold(g: &GModel, alpha: f64, tol: f64) -> Result<f64> {
    lambda_threshold_with(g, alpha, tol, &ShootOptions::default())
}

pub fn lambda_threshold_with(g: &GModel, alpha: f64, tol: f64, opts: &ShootOptions) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Precondition(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let profile = StationaryProfile::compute(g)?;
    if alpha == 0.0 {
        return Ok(profile.lambda_bar);
    }
    let (lb, ls) = (profile.lambda_bar, profile.lambda_star);
    let mut lo = lb + 1e-12;
    if x_sign(g, lo, alpha, opts)? > 0.0 {
        return Ok(lo);
    }
    // Walk the upper end towards λ* until the orbit from rest escapes.
    let mut gap = 1e-1 * (ls - lb);
    let mut hi = ls - gap;
    loop {
        if x_sign(g, hi, alpha, opts)? > 0.0 {
            break;
        }
        lo = hi;
        gap *= 0.1;
        if gap < 1e-12 {
            // Bounded for every probed λ < λ*: the threshold is λ* itself.
            return Ok(ls);
        }
        hi = ls - gap;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if x_sign(g, mid, alpha, opts)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `alpha,lambda_threshold` rows.
pub fn threshold_curve_csv(
    rows: &[(f64, f64)],
    header: &str,
    profile: &StationaryProfile,
) -> String {
    let mut s = format!(
        "# lambda_bar={}\n# lambda_star={}\n{header}\n",
        fmt17(profile.lambda_bar),
        fmt17(profile.lambda_star)
    );
    for (a, b) in rows {
        s.push_str(&format!("{},{}\n", fmt17(*a), fmt17(*b)));
    }
    s
}

/// Outcome of [`heteroclinic_check`].
#[derive(Clone, Debug)]
pub struct Heteroclinic {
    pub connects: bool,
    /// Slope of the triangle's lower edge `v = m (u - φ1)`.
    pub slope: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub trajectory: Trajectory,
}

impl Heteroclinic {
    /// Whether `(u, v)` lies in the triangle with vertices `(φ1,0)`, `(φ2,0)`,
    /// `(φ2, m(φ2-φ1))`, up to `tol`.
    pub fn in_triangle(&self, u: f64, v: f64, tol: f64) -> bool {
        u >= self.phi1 - tol
            && u <= self.phi2 + tol
            && v <= tol
            && v >= self.slope * (u - self.phi1) - tol
    }
}

/// Follows the saddle's unstable branch into `{u < φ2, v < 0}` and checks
/// that it stays in the trapping triangle and lands on `(φ1, 0)`.
pub fn heteroclinic_check(g: &GModel, lambda: f64, alpha: f64) -> Result<Heteroclinic> {
    let f = FModel::linear();
    let sink = equilibrium_eigenvalues(g, &f, lambda, alpha, Equilibrium::Phi1)?;
    let limit = 2.0 * sink.h_prime.sqrt();
    if !(alpha > limit) {
        return Err(Error::Precondition(format!(
            "needs alpha > 2 sqrt(H'(phi1)) = {limit}, got {alpha}"
        )));
    }
    let saddle = equilibrium_eigenvalues(g, &f, lambda, alpha, Equilibrium::Phi2)?;
    let ctx = EnergyContext::new(g, lambda)?;
    let (phi1, phi2) = (ctx.phi1(), ctx.phi2());
    let mu = saddle.mu_plus.re;
    let slope = 0.5 * (sink.mu_minus.re + sink.mu_plus.re);
    let delta = 1e-8 * phi2.abs().max(1.0);
    let prob = Problem::new(g.clone(), f, alpha, lambda, phi2 - delta, -delta * mu)?;
    let opts = IntegrationOptions {
        stop_on_entrapment: false,
        ..Default::default()
    };
    let t_max = 100.0 + 40.0 / mu + 40.0 / sink.mu_plus.re.abs();
    let trajectory = integrate(&prob, t_max, &opts)?;
    let mut out = Heteroclinic {
        connects: false,
        slope,
        phi1,
        phi2,
        trajectory,
    };
    // Absolute slack at the integrator's tolerance level.
    let tol = 1e-10 * phi2.abs().max(1.0);
    let inside = out
        .trajectory
        .states
        .iter()
        .all(|&(u, v)| out.in_triangle(u, v, tol));
    let monotone = out
        .trajectory
        .states
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + tol);
    let (u_end, v_end) = out.trajectory.last();
    let r_sink = 1e-3 * (phi2 - phi1);
    out.connects = inside && monotone && (u_end - phi1).hypot(v_end) < r_sink;
    Ok(out)
}
