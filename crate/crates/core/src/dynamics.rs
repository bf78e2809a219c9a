//! Time integration of `u' = v, v' = -α f(v) - H_λ(u)` with event detection,
//! escape guards and orbit classification.

use serde::{Deserialize, Serialize};

use crate::energy::{potential, EnergyContext};
use crate::error::{Error, Result};
use crate::model::{FModel, GModel};
use crate::ode::{Dopri5, Rhs, Step, StepFailure, StepOptions};
use crate::output::fmt17;
use crate::stationary::{h_eval, lambda_star};

const V_CAP: f64 = 1e8;
const QUENCH_REL: f64 = 1e-9;
/// Distance from `b` below which a step-size underflow counts as a quench.
const QUENCH_UNDERFLOW: f64 = 1e-6;

/// One simulation instance of the damped oscillator.
#[derive(Clone, Debug)]
pub struct Problem {
    pub g: GModel,
    pub f: FModel,
    pub alpha: f64,
    pub lambda: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Problem {
    pub fn new(g: GModel, f: FModel, alpha: f64, lambda: f64, u0: f64, v0: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Precondition(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if !(u0.is_finite() && v0.is_finite()) {
            return Err(Error::Precondition("initial state must be finite".into()));
        }
        if !(u0 < g.b()) {
            return Err(Error::Domain { u: u0, b: g.b() });
        }
        Ok(Self {
            g,
            f,
            alpha,
            lambda,
            u0,
            v0,
        })
    }

    /// The MEMS reference model `g = (1-u)^{-2}`, `f(v) = v`, started at rest at the origin.
    pub fn flores(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(GModel::flores(), FModel::linear(), alpha, lambda, 0.0, 0.0)
    }

    pub fn with_start(&self, u0: f64, v0: f64) -> Result<Self> {
        Self::new(self.g.clone(), self.f, self.alpha, self.lambda, u0, v0)
    }

    pub fn energy(&self, u: f64, v: f64) -> Result<f64> {
        Ok(potential(&self.g, self.lambda, u)? + 0.5 * v * v)
    }

    /// Vector field; `None` outside the domain of `g`.
    pub fn field(&self, u: f64, v: f64) -> Option<[f64; 2]> {
        let (h, _) = h_eval(&self.g, self.lambda, u).ok()?;
        Some([v, -self.alpha * self.f.f(v) - h])
    }
}

struct Field<'a>(&'a Problem);

impl Rhs<2> for Field<'_> {
    fn eval(&self, _t: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        self.0.field(y[0], y[1])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Time tolerance for event location.
    pub event_tol: f64,
    /// Stop once the sink has been reached (α > 0).
    pub stop_on_entrapment: bool,
    /// Sink radius; defaults to `1e-3 (φ2 - φ1)`.
    pub sink_radius: Option<f64>,
    /// Consecutive accepted steps required inside the sink radius.
    pub dwell: usize,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            event_tol: 1e-12,
            stop_on_entrapment: true,
            sink_radius: None,
            dwell: 3,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TimeLimit,
    ConvergedToSink,
    TrappedPeriodic,
    BlowUp,
    Quench,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// `v` changes sign from + to - (a local maximum of `u`).
    AxisCrossingDown,
    /// `v` changes sign from - to + (a local minimum of `u`).
    AxisCrossingUp,
    /// Entered the energy well `{E_λ < J_λ(φ2), l < u < φ2}`.
    WellEntered,
    /// Stayed within the sink radius of `(φ1, 0)` for the dwell count.
    SinkReached,
    /// `u > φ2 + margin` with `v ≥ 0`: escape is certain from here on.
    EscapeCertificate,
    BlowUpGuard,
    QuenchGuard,
    StepSizeUnderflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<(f64, f64)>,
    pub termination: Termination,
    pub t_end: f64,
    pub events: Vec<Event>,
    /// Period of a conservative orbit, when two matching turning points were seen.
    pub period: Option<f64>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * self.times.len() + 8);
        s.push_str("t,u,v\n");
        for (t, (u, v)) in self.times.iter().zip(&self.states) {
            s.push_str(&fmt17(*t));
            s.push(',');
            s.push_str(&fmt17(*u));
            s.push(',');
            s.push_str(&fmt17(*v));
            s.push('\n');
        }
        s
    }

    /// One JSON object per line: `{"t":..,"kind":..,"u":..,"v":..}`.
    pub fn events_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
            .collect()
    }

    pub fn last(&self) -> (f64, f64) {
        *self
            .states
            .last()
            .expect("trajectory has at least the initial state")
    }

    pub fn max_u(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }
}

/// Thresholds derived from the stationary structure at the problem's `λ`.
struct Landscape {
    ctx: Option<EnergyContext>,
    b: f64,
    u_cap: f64,
    eps_q: f64,
    escape_margin: f64,
    sink_radius: f64,
}

impl Landscape {
    fn new(prob: &Problem, opts: &IntegrationOptions) -> Self {
        let ctx = EnergyContext::new(&prob.g, prob.lambda).ok();
        let phi2 = ctx.as_ref().map(|c| c.phi2()).unwrap_or(1.0);
        let b = prob.g.b();
        let u_cap = if prob.g.is_bounded() {
            f64::INFINITY
        } else {
            1e6f64.max(1e3 * phi2.max(1.0))
        };
        let eps_q = if prob.g.is_bounded() {
            QUENCH_REL * b
        } else {
            0.0
        };
        let escape_margin = 1e-6 * phi2.abs().max(1.0);
        let sink_radius = match (opts.sink_radius, &ctx) {
            (Some(r), _) => r,
            (None, Some(c)) => 1e-3 * (c.phi2() - c.phi1()),
            (None, None) => 0.0,
        };
        Self {
            ctx,
            b,
            u_cap,
            eps_q,
            escape_margin,
            sink_radius,
        }
    }
}

/// Tracks `v = 0` crossings to estimate the period of a conservative orbit.
#[derive(Default)]
struct PeriodTracker {
    downs: Vec<(f64, f64)>,
}

impl PeriodTracker {
    fn push_down(&mut self, t: f64, u: f64) {
        self.downs.push((t, u));
    }

    fn period(&self) -> Option<f64> {
        let (t0, u0) = *self.downs.first()?;
        self.downs[1..]
            .iter()
            .find(|(_, u)| (u - u0).abs() <= 1e-6)
            .map(|(t, _)| t - t0)
    }
}

/// Integrates the problem on `[0, t_max]` (or until a guard fires).
pub fn integrate(prob: &Problem, t_max: f64, opts: &IntegrationOptions) -> Result<Trajectory> {
    if !(prob.u0 < prob.g.b()) {
        return Err(Error::Domain {
            u: prob.u0,
            b: prob.g.b(),
        });
    }
    if !(t_max > 0.0) {
        return Err(Error::Precondition(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let land = Landscape::new(prob, opts);
    let b = prob.g.b();
    let bounded = prob.g.is_bounded();
    let alpha = prob.alpha;

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![(prob.u0, prob.v0)],
        termination: Termination::TimeLimit,
        t_end: 0.0,
        events: Vec::new(),
        period: None,
    };
    let mut periods = PeriodTracker::default();
    if prob.v0 == 0.0 {
        if let Some([_, a]) = prob.field(prob.u0, prob.v0) {
            if a < 0.0 {
                periods.push_down(0.0, prob.u0);
            }
        }
    }

    let field = Field(prob);
    let step_opts = StepOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        ..Default::default()
    };
    let mut stepper = match Dopri5::new(field, 0.0, [prob.u0, prob.v0], step_opts) {
        Ok(s) => s,
        Err(_) => return Err(Error::Domain { u: prob.u0, b }),
    };

    let mut in_well = false;
    let mut escaped = false;
    let mut sink_reached = false;
    let mut dwell = 0usize;
    let mut termination = None;

    if let Some(ctx) = &land.ctx {
        if alpha > 0.0 && ctx.in_d0_sharp(prob.u0, prob.v0) {
            in_well = true;
            traj.events.push(Event {
                t: 0.0,
                kind: EventKind::WellEntered,
                u: prob.u0,
                v: prob.v0,
            });
        }
    }

    for _ in 0..opts.max_steps {
        let t = stepper.t();
        if t >= t_max {
            break;
        }
        let [u, v] = stepper.y();
        let mut h_cap = t_max - t;
        if bounded && b - u < 1e3 * land.eps_q {
            h_cap = h_cap.min(0.1 * (b - u) / v.abs().max(1.0));
        }
        let step = match stepper.step(h_cap) {
            Ok(s) => s,
            Err(StepFailure::Underflow { t } | StepFailure::Undefined { t }) => {
                let [u, v] = stepper.y();
                traj.events.push(Event {
                    t,
                    kind: EventKind::StepSizeUnderflow,
                    u,
                    v,
                });
                termination = Some(if bounded && b - u < QUENCH_UNDERFLOW * b.max(1.0) {
                    traj.events.push(Event {
                        t,
                        kind: EventKind::QuenchGuard,
                        u,
                        v,
                    });
                    Termination::Quench
                } else {
                    Termination::Undetermined
                });
                break;
            }
        };

        let refine = |te: f64, approx: [f64; 2]| -> [f64; 2] {
            let dt = te - step.t0;
            if dt <= 0.0 {
                return step.y0;
            }
            Dopri5::raw_step(stepper.rhs(), step.t0, &step.y0, dt).unwrap_or(approx)
        };

        // Guards first: they end the trajectory inside this step.
        if let Some((te, ye)) = guard_crossing(&step, &land, bounded, opts.event_tol) {
            let ye = refine(te, ye);
            let kind = if bounded {
                EventKind::QuenchGuard
            } else {
                EventKind::BlowUpGuard
            };
            push_axis_event(&mut traj, &mut periods, &step, opts.event_tol, te, &refine);
            traj.times.push(te);
            traj.states.push((ye[0], ye[1]));
            traj.events.push(Event {
                t: te,
                kind,
                u: ye[0],
                v: ye[1],
            });
            termination = Some(if bounded {
                Termination::Quench
            } else {
                Termination::BlowUp
            });
            break;
        }

        push_axis_event(
            &mut traj,
            &mut periods,
            &step,
            opts.event_tol,
            step.t1,
            &refine,
        );
        let [u1, v1] = step.y1;
        traj.times.push(step.t1);
        traj.states.push((u1, v1));

        if let Some(ctx) = &land.ctx {
            if !escaped && u1 > ctx.phi2() + land.escape_margin && v1 >= 0.0 {
                escaped = true;
                traj.events.push(Event {
                    t: step.t1,
                    kind: EventKind::EscapeCertificate,
                    u: u1,
                    v: v1,
                });
            }
            if alpha > 0.0 {
                if !in_well && ctx.in_d0_sharp(u1, v1) {
                    in_well = true;
                    traj.events.push(Event {
                        t: step.t1,
                        kind: EventKind::WellEntered,
                        u: u1,
                        v: v1,
                    });
                }
                let dist = (u1 - ctx.phi1()).hypot(v1);
                if in_well && dist < land.sink_radius {
                    dwell += 1;
                } else {
                    dwell = 0;
                }
                if !sink_reached && dwell >= opts.dwell {
                    sink_reached = true;
                    traj.events.push(Event {
                        t: step.t1,
                        kind: EventKind::SinkReached,
                        u: u1,
                        v: v1,
                    });
                    if opts.stop_on_entrapment {
                        termination = Some(Termination::ConvergedToSink);
                        break;
                    }
                }
            }
        }
    }

    let (u_end, v_end) = traj.last();
    traj.t_end = *traj.times.last().expect("nonempty");
    traj.termination = match termination {
        Some(t) => t,
        None if traj.t_end < t_max => Termination::Undetermined,
        None if sink_reached => Termination::ConvergedToSink,
        None => match &land.ctx {
            Some(ctx)
                if alpha == 0.0
                    && ctx.in_d0_sharp(prob.u0, prob.v0)
                    && ctx.in_d0_sharp(u_end, v_end) =>
            {
                Termination::TrappedPeriodic
            }
            _ => Termination::TimeLimit,
        },
    };
    if alpha == 0.0 {
        traj.period = periods.period();
    }
    Ok(traj)
}

fn guard_crossing(
    step: &Step<2>,
    land: &Landscape,
    bounded: bool,
    tol: f64,
) -> Option<(f64, [f64; 2])> {
    if bounded {
        let level = land.b - land.eps_q;
        if step.y1[0] >= level {
            return step
                .locate(|y| y[0] - level, tol)
                .or(Some((step.t1, step.y1)));
        }
        return None;
    }
    let ev = |y: &[f64; 2]| ((y[0] - land.u_cap) / land.u_cap).max((y[1].abs() - V_CAP) / V_CAP);
    if ev(&step.y1) >= 0.0 {
        return step.locate(ev, tol).or(Some((step.t1, step.y1)));
    }
    None
}

fn push_axis_event<F>(
    traj: &mut Trajectory,
    periods: &mut PeriodTracker,
    step: &Step<2>,
    tol: f64,
    t_limit: f64,
    refine: &F,
) where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    if let Some((te, ye)) = step.locate(|y| y[1], tol) {
        if te > t_limit || te <= step.t0 {
            return;
        }
        let ye = refine(te, ye);
        let kind = if step.y0[1] > 0.0 {
            EventKind::AxisCrossingDown
        } else {
            EventKind::AxisCrossingUp
        };
        if kind == EventKind::AxisCrossingDown {
            periods.push_down(te, ye[0]);
        }
        traj.times.push(te);
        traj.states.push((ye[0], ye[1]));
        traj.events.push(Event {
            t: te,
            kind,
            u: ye[0],
            v: ye[1],
        });
    }
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gamma {
    /// Converges to the sink `(φ1, 0)`.
    Gamma1,
    /// On the saddle's stable manifold; only produced by shooting.
    Gamma2Boundary,
    /// Becomes unbounded (blow-up or quench).
    Gamma3,
    /// Closed conservative orbit (`α = 0`).
    Periodic,
    /// No certificate fired before the time limit.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult {
    pub gamma: Gamma,
    pub termination: Termination,
    pub certificate: String,
    pub evidence: Vec<Event>,
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub t_max: f64,
    pub integration: IntegrationOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            integration: IntegrationOptions::default(),
        }
    }
}

pub fn classify_orbit(prob: &Problem, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    let traj = integrate(prob, opts.t_max, &opts.integration)?;
    Ok(classify_trajectory(prob, &traj))
}

/// Reads the certificates off an already integrated trajectory.
pub fn classify_trajectory(prob: &Problem, traj: &Trajectory) -> ClassificationResult {
    let done = |gamma, certificate: String| ClassificationResult {
        gamma,
        termination: traj.termination,
        certificate,
        evidence: traj.events.clone(),
    };
    match traj.termination {
        Termination::BlowUp => return done(Gamma::Gamma3, "blow-up guard crossed".into()),
        Termination::Quench => return done(Gamma::Gamma3, "quench guard: u reached b".into()),
        _ => {}
    }
    if let Some(e) = traj
        .events
        .iter()
        .find(|e| e.kind == EventKind::EscapeCertificate)
    {
        return done(
            Gamma::Gamma3,
            format!(
                "u = {} beyond phi2 with v = {} >= 0 at t = {}",
                e.u, e.v, e.t
            ),
        );
    }
    let ctx = match EnergyContext::new(&prob.g, prob.lambda) {
        Ok(c) => c,
        Err(_) => {
            return done(
                Gamma::Undetermined,
                "lambda >= lambda* and no guard fired".into(),
            )
        }
    };
    if prob.alpha > 0.0 {
        if let Some(e) = traj
            .events
            .iter()
            .find(|e| e.kind == EventKind::SinkReached)
        {
            return done(
                Gamma::Gamma1,
                format!(
                    "inside the energy well and within the sink radius of phi1 at t = {}",
                    e.t
                ),
            );
        }
        return done(Gamma::Undetermined, "no certificate before t_max".into());
    }
    let e0 = match prob.energy(prob.u0, prob.v0) {
        Ok(e) => e,
        Err(_) => return done(Gamma::Undetermined, "initial energy undefined".into()),
    };
    let tol = 1e-8 * (1.0 + e0.abs());
    for e in traj
        .events
        .iter()
        .filter(|e| e.kind == EventKind::AxisCrossingDown)
    {
        if e.u > ctx.phi1() && e.u < ctx.phi2() {
            if let Ok(j) = ctx.potential_j(e.u) {
                if (j - e0).abs() <= tol {
                    return done(
                        Gamma::Periodic,
                        format!("turning point u1 = {} in (phi1, phi2) with J(u1) = E0", e.u),
                    );
                }
            }
        }
    }
    done(
        Gamma::Undetermined,
        "no turning point in (phi1, phi2) before t_max".into(),
    )
}

// ---------------------------------------------------------------------------
// Energy identity and blow-up bound

/// `Q_i = ∫_0^{t_i} f(v) v dt` at every sample. Each sample interval is
/// covered by one Dormand–Prince step of the system with `Q` appended. The
/// Hermite-corrected trapezoid is the fallback when that step leaves the
/// domain.
pub fn dissipation_profile(prob: &Problem, traj: &Trajectory) -> Vec<f64> {
    let augmented = |_t: f64, y: &[f64; 3]| -> Option<[f64; 3]> {
        let [du, dv] = prob.field(y[0], y[1])?;
        Some([du, dv, prob.f.f(y[1]) * y[1]])
    };
    let dy = |u: f64, v: f64| -> f64 {
        let (fv, f1) = prob.f.bundle(v);
        let vdot = match prob.field(u, v) {
            Some([_, a]) => a,
            None => 0.0,
        };
        (f1 * v + fv) * vdot
    };
    let mut q = Vec::with_capacity(traj.times.len());
    let mut acc = 0.0;
    q.push(0.0);
    for i in 1..traj.times.len() {
        let (ta, tb) = (traj.times[i - 1], traj.times[i]);
        let h = tb - ta;
        let (ua, va) = traj.states[i - 1];
        let (ub, vb) = traj.states[i];
        let inc = Dopri5::raw_step(&augmented, ta, &[ua, va, 0.0], h)
            .map(|y| y[2])
            .unwrap_or_else(|| {
                let ya = prob.f.f(va) * va;
                let yb = prob.f.f(vb) * vb;
                0.5 * h * (ya + yb) + h * h / 12.0 * (dy(ua, va) - dy(ub, vb))
            });
        acc += inc;
        q.push(acc);
    }
    q
}

/// `max_i |E_λ(u_i, v_i) + α Q_i - E_λ(u0, v0)|`.
pub fn check_energy_identity(prob: &Problem, traj: &Trajectory) -> f64 {
    let e0 = match prob.energy(prob.u0, prob.v0) {
        Ok(e) => e,
        Err(_) => return f64::INFINITY,
    };
    let q = dissipation_profile(prob, traj);
    traj.states
        .iter()
        .zip(&q)
        .map(|(&(u, v), qi)| match prob.energy(u, v) {
            Ok(e) => (e + prob.alpha * qi - e0).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Checks `u(t) ≥ u0 + v0 t + (ξ/2) t²`, `ξ = λ - λ*`, on every sample.
pub fn blowup_bound_check(prob: &Problem, traj: &Trajectory) -> Result<bool> {
    if prob.alpha != 0.0 {
        return Err(Error::Precondition(
            "the quadratic lower bound needs alpha = 0".into(),
        ));
    }
    let ls = lambda_star(&prob.g)?;
    if !(prob.lambda > ls) {
        return Err(Error::Precondition(format!(
            "needs lambda > lambda* = {ls}"
        )));
    }
    if prob.u0 < 0.0 || prob.v0 < 0.0 {
        return Err(Error::Precondition("needs u0 >= 0 and v0 >= 0".into()));
    }
    let xi = prob.lambda - ls;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .all(|(&t, &(u, _))| u >= prob.u0 + prob.v0 * t + 0.5 * xi * t * t - 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservative_orbit_is_trapped() {
        let prob = Problem::flores(0.0, 0.1).unwrap();
        let tr = integrate(&prob, 50.0, &IntegrationOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::TrappedPeriodic);
        let turning = (1.0 - 0.2f64.sqrt()) / 2.0;
        assert!((tr.max_u() - turning).abs() < 1e-9, "max u {}", tr.max_u());
        assert!(tr.period.is_some());
        assert!(check_energy_identity(&prob, &tr) < 1e-8);
    }

    #[test]
    fn supercritical_flores_quenches() {
        let prob = Problem::flores(0.0, 0.2).unwrap();
        let tr = integrate(&prob, 50.0, &IntegrationOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::Quench);
        let (u, v) = tr.last();
        assert!(1.0 - u < 1e-6 && v > 1e3, "u = {u}, v = {v}");
        assert!(tr.t_end < 50.0);
        assert!(blowup_bound_check(&prob, &tr).unwrap());
    }

    #[test]
    fn supercritical_power_blows_up() {
        let g = GModel::power_even(1, 1.0).unwrap();
        let prob = Problem::new(g, FModel::linear(), 0.0, 0.3, 0.0, 0.0).unwrap();
        let tr = integrate(&prob, 100.0, &IntegrationOptions::default()).unwrap();
        assert_eq!(tr.termination, Termination::BlowUp);
        assert!(blowup_bound_check(&prob, &tr).unwrap());
        assert!(tr.last().0 > 1e5);
    }

    #[test]
    fn classification_examples() {
        let opts = ClassifyOptions::default();
        let c = classify_orbit(&Problem::flores(1.0, 0.1).unwrap(), &opts).unwrap();
        assert_eq!(c.gamma, Gamma::Gamma1, "{}", c.certificate);
        let c = classify_orbit(&Problem::flores(0.0, 0.1).unwrap(), &opts).unwrap();
        assert_eq!(c.gamma, Gamma::Periodic, "{}", c.certificate);
        let c = classify_orbit(&Problem::flores(0.0, 0.13).unwrap(), &opts).unwrap();
        assert_eq!(c.gamma, Gamma::Gamma3, "{}", c.certificate);
    }

    #[test]
    fn equilibrium_start_is_constant() {
        let ctx = EnergyContext::new(&GModel::flores(), 0.1).unwrap();
        let prob = Problem::flores(1.0, 0.1)
            .unwrap()
            .with_start(ctx.phi1(), 0.0)
            .unwrap();
        let opts = IntegrationOptions {
            stop_on_entrapment: false,
            ..Default::default()
        };
        let tr = integrate(&prob, 20.0, &opts).unwrap();
        assert!(check_energy_identity(&prob, &tr) < 1e-10);
        assert!(tr
            .states
            .iter()
            .all(|&(u, v)| (u - ctx.phi1()).abs() < 1e-12 && v.abs() < 1e-12));

        // α = 0 grazing start gives no certificate.
        let c = classify_orbit(
            &prob.clone_with_alpha(0.0),
            &ClassifyOptions {
                t_max: 10.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.gamma, Gamma::Undetermined);
    }

    #[test]
    fn bound_check_preconditions() {
        let prob = Problem::flores(1.0, 0.2).unwrap();
        let tr = integrate(&prob, 1.0, &IntegrationOptions::default()).unwrap();
        assert!(matches!(
            blowup_bound_check(&prob, &tr),
            Err(Error::Precondition(_))
        ));
        let prob = Problem::flores(0.0, 0.1).unwrap();
        assert!(matches!(
            blowup_bound_check(&prob, &tr),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn start_outside_domain() {
        assert!(matches!(
            Problem::new(GModel::flores(), FModel::linear(), 0.0, 0.1, 1.0, 0.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn csv_and_jsonl() {
        let tr = integrate(
            &Problem::flores(0.0, 0.2).unwrap(),
            50.0,
            &IntegrationOptions::default(),
        )
        .unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,u,v\n"));
        assert_eq!(csv.lines().count(), tr.times.len() + 1);
        for line in tr.events_jsonl().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(
                v.get("t").is_some()
                    && v.get("kind").is_some()
                    && v.get("u").is_some()
                    && v.get("v").is_some()
            );
        }
    }

    impl Problem {
        fn clone_with_alpha(&self, alpha: f64) -> Self {
            Problem {
                alpha,
                ..self.clone()
            }
        }
    }
}
