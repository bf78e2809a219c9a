//! Dormand–Prince 5(4) with the 4th-order continuous extension.
//!
//! The stepper only advances the state; event handling lives with the
//! callers, which inspect each accepted [`Step`] and use its interpolant.

/// Right-hand side. `None` marks a state outside the model's domain and
/// forces the step to be retried with a smaller size.
pub trait Rhs<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]>;
}

impl<F, const N: usize> Rhs<N> for F
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    fn eval(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]> {
        self(t, y)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
        }
    }
}

/// An accepted step with its dense-output coefficients.
#[derive(Clone, Copy, Debug)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 4],
}

impl<const N: usize> Step<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Interpolated state at `t ∈ [t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.h();
        if h == 0.0 {
            return self.y0;
        }
        let th = (t - self.t0) / h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let [r2, r3, r4, r5] = [
                self.cont[0][i],
                self.cont[1][i],
                self.cont[2][i],
                self.cont[3][i],
            ];
            out[i] = self.y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
        out
    }

    /// First zero of `event` inside the step, given a sign change between
    /// the endpoints. Bisection on the interpolant to `t_tol`.
    pub fn locate<G>(&self, event: G, t_tol: f64) -> Option<(f64, [f64; N])>
    where
        G: Fn(&[f64; N]) -> f64,
    {
        let g0 = event(&self.y0);
        let g1 = event(&self.y1);
        if g0 == 0.0 || g0.signum() == g1.signum() && g1 != 0.0 {
            return None;
        }
        let (mut a, mut b) = (self.t0, self.t1);
        let neg0 = g0 < 0.0;
        while b - a > t_tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let gm = event(&self.eval(m));
            if gm == 0.0 {
                return Some((m, self.eval(m)));
            }
            if (gm < 0.0) == neg0 {
                a = m;
            } else {
                b = m;
            }
        }
        let t = 0.5 * (a + b);
        Some((t, self.eval(t)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepFailure {
    /// Step size fell below round-off at time `t`.
    Underflow { t: f64 },
    /// The right-hand side was undefined at the current state itself.
    Undefined { t: f64 },
}

pub struct Dopri5<R, const N: usize> {
    rhs: R,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    opts: StepOptions,
    last_rejected: bool,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

struct Trial<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: f64,
    stages: [[f64; N]; 7],
}

impl<R: Rhs<N>, const N: usize> Dopri5<R, N> {
    pub fn new(rhs: R, t0: f64, y0: [f64; N], opts: StepOptions) -> Result<Self, StepFailure> {
        let k1 = rhs.eval(t0, &y0).ok_or(StepFailure::Undefined { t: t0 })?;
        let mut s = Self {
            rhs,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            opts,
            last_rejected: false,
            accepted: 0,
            rejected: 0,
        };
        s.h = match opts.h_init {
            Some(h) => h,
            None => s.initial_step(),
        }
        .min(opts.h_max);
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    /// Derivative at the current state.
    pub fn dy(&self) -> [f64; N] {
        self.k1
    }

    pub fn rhs(&self) -> &R {
        &self.rhs
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N], i: usize) -> f64 {
        self.opts.atol + self.opts.rtol * a[i].abs().max(b[i].abs())
    }

    fn initial_step(&self) -> f64 {
        let sc: Vec<f64> = (0..N)
            .map(|i| self.opts.atol + self.opts.rtol * self.y[i].abs())
            .collect();
        let norm = |v: &[f64; N]| -> f64 {
            ((0..N).map(|i| (v[i] / sc[i]).powi(2)).sum::<f64>() / N as f64).sqrt()
        };
        let d0 = norm(&self.y);
        let d1 = norm(&self.k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let d2 = match self.rhs.eval(self.t + h0, &y1) {
            Some(f1) => {
                let mut diff = [0.0; N];
                for i in 0..N {
                    diff[i] = f1[i] - self.k1[i];
                }
                norm(&diff) / h0
            }
            None => return h0,
        };
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / m).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    fn trial(&self, h: f64) -> Option<Trial<N>> {
        let (t, y, k1) = (self.t, &self.y, &self.k1);
        let f = |tt: f64, yy: [f64; N]| -> Option<[f64; N]> {
            let k = self.rhs.eval(tt, &yy)?;
            k.iter().all(|x| x.is_finite()).then_some(k)
        };
        let k2 = f(t + C2 * h, axpy(y, h, &[(A21, k1)]))?;
        let k3 = f(t + C3 * h, axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(
            t + C5 * h,
            axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = f(
            t + h,
            axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y1 = axpy(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, y1)?;
        let mut acc = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let r = e / self.scale(y, &y1, i);
            acc += r * r;
        }
        let err = (acc / N as f64).sqrt();
        if !err.is_finite() {
            return None;
        }
        Some(Trial {
            y1,
            k7,
            err,
            stages: [*k1, k2, k3, k4, k5, k6, k7],
        })
    }

    /// One explicit RK step of size `h` from the current state, without
    /// error control. Used to land exactly on an event time inside an
    /// already accepted step.
    pub fn raw_step(rhs: &R, t0: f64, y0: &[f64; N], h: f64) -> Option<[f64; N]> {
        let k1 = rhs.eval(t0, y0)?;
        let k2 = rhs.eval(t0 + C2 * h, &axpy(y0, h, &[(A21, &k1)]))?;
        let k3 = rhs.eval(t0 + C3 * h, &axpy(y0, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs.eval(
            t0 + C4 * h,
            &axpy(y0, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs.eval(
            t0 + C5 * h,
            &axpy(y0, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs.eval(
            t0 + h,
            &axpy(
                y0,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        Some(axpy(
            y0,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        ))
    }

    /// Advances by one accepted step no longer than `h_cap` (and the
    /// configured `h_max`).
    pub fn step(&mut self, h_cap: f64) -> Result<Step<N>, StepFailure> {
        let cap = h_cap.min(self.opts.h_max);
        let mut h = self.h.min(cap);
        loop {
            let h_min = 1e-15 * self.t.abs().max(1.0);
            if !(h >= h_min) {
                return Err(StepFailure::Underflow { t: self.t });
            }
            match self.trial(h) {
                Some(tr) if tr.err <= 1.0 => {
                    let fac = if tr.err == 0.0 {
                        5.0
                    } else {
                        (0.9 * tr.err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    let fac = if self.last_rejected {
                        fac.min(1.0)
                    } else {
                        fac
                    };
                    self.last_rejected = false;
                    self.accepted += 1;

                    let [k1, _k2, k3, k4, k5, k6, k7] = tr.stages;
                    let mut cont = [[0.0; N]; 4];
                    for i in 0..N {
                        let ydiff = tr.y1[i] - self.y[i];
                        let bspl = h * k1[i] - ydiff;
                        cont[0][i] = ydiff;
                        cont[1][i] = bspl;
                        cont[2][i] = ydiff - h * k7[i] - bspl;
                        cont[3][i] = h
                            * (D1 * k1[i]
                                + D3 * k3[i]
                                + D4 * k4[i]
                                + D5 * k5[i]
                                + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    let step = Step {
                        t0: self.t,
                        t1: self.t + h,
                        y0: self.y,
                        y1: tr.y1,
                        cont,
                    };
                    self.t += h;
                    self.y = tr.y1;
                    self.k1 = tr.k7;
                    self.h = (h * fac).min(self.opts.h_max);
                    return Ok(step);
                }
                Some(tr) => {
                    self.rejected += 1;
                    self.last_rejected = true;
                    h *= (0.9 * tr.err.powf(-0.2)).clamp(0.2, 1.0);
                }
                None => {
                    self.rejected += 1;
                    self.last_rejected = true;
                    h *= 0.25;
                }
            }
        }
    }
}
