//! Adaptive Dormand–Prince 5(4) integrator for complex linear-algebra ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on the step size (`f64::INFINITY` for none).
    pub h_max: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-8, h_max: f64::INFINITY, h_init: None }
    }
}

impl OdeOptions {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        Self { atol, rtol, ..Self::default() }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state: current time, solution and a step-size guess. The
/// right-hand side is passed to each call so that callers may keep borrowing
/// their own data.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    opts: OdeOptions,
    t: f64,
    y: Vec<C>,
    h: f64,
    k: [Vec<C>; 7],
    ytmp: Vec<C>,
    ynew: Vec<C>,
    fsal_valid: bool,
    /// Accepted and rejected step counters.
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: Vec<C>, opts: OdeOptions) -> Self {
        let n = y0.len();
        let z = || vec![C::new(0.0, 0.0); n];
        Self {
            opts,
            t: t0,
            h: opts.h_init.unwrap_or(0.0),
            y: y0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            fsal_valid: false,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C] {
        &self.y
    }

    /// Replaces the state (e.g. after a quantum jump). The step-size guess is kept.
    pub fn reset(&mut self, t: f64, y: &[C]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal_valid = false;
    }

    fn initial_step<F: FnMut(f64, &[C], &mut [C])>(&mut self, f: &mut F) -> f64 {
        // Hairer-Norsett-Wanner starting step heuristic.
        f(self.t, &self.y, &mut self.k[0]);
        self.fsal_valid = true;
        let sc = |y: C| self.opts.atol + self.opts.rtol * y.norm();
        let n = self.y.len().max(1) as f64;
        let d0 = (self.y.iter().map(|&y| (y.norm() / sc(y)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.y.iter().zip(&self.k[0]).map(|(&y, k)| (k.norm() / sc(y)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(self.opts.h_max)
    }

    /// Takes one trial step of size `h` from the current state without
    /// accepting it; returns the weighted error norm. Result left in `ynew`,
    /// derivative at the end in `k[6]`.
    fn trial<F: FnMut(f64, &[C], &mut [C])>(&mut self, f: &mut F, h: f64) -> f64 {
        let n = self.y.len();
        let t = self.t;
        if !self.fsal_valid {
            f(t, &self.y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        macro_rules! stage {
            ($dst:expr, $c:expr, [$($idx:expr => $a:expr),*]) => {{
                for i in 0..n {
                    self.ytmp[i] = self.y[i] $(+ self.k[$idx][i] * (h * $a))*;
                }
                let (ytmp, k) = (&self.ytmp, &mut self.k);
                f(t + $c * h, ytmp, &mut k[$dst]);
            }};
        }
        stage!(1, C2, [0 => A21]);
        stage!(2, C3, [0 => A31, 1 => A32]);
        stage!(3, C4, [0 => A41, 1 => A42, 2 => A43]);
        stage!(4, C5, [0 => A51, 1 => A52, 2 => A53, 3 => A54]);
        stage!(5, 1.0, [0 => A61, 1 => A62, 2 => A63, 3 => A64, 4 => A65]);
        for i in 0..n {
            self.ynew[i] = self.y[i]
                + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6) * h;
        }
        {
            let (ynew, k) = (&self.ynew, &mut self.k);
            f(t + h, ynew, &mut k[6]);
        }
        let mut acc = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = self.opts.atol + self.opts.rtol * self.y[i].norm().max(self.ynew[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }

    /// Advances by one accepted adaptive step, never beyond `t_limit`.
    pub fn step<F: FnMut(f64, &[C], &mut [C])>(&mut self, f: &mut F, t_limit: f64) -> Result<()> {
        if self.t >= t_limit {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f);
        }
        loop {
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h < 1e-14 * self.t.abs().max(1.0) && !clipped {
                return Err(Error::Stiffness { t: self.t, h });
            }
            let err = self.trial(f, h);
            if !err.is_finite() {
                self.h = h * 0.2;
                self.rejected += 1;
                self.fsal_valid = true;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t = if clipped { t_limit } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6);
                self.accepted += 1;
                if !clipped || factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.rejected += 1;
            self.h = h * factor.min(1.0);
        }
    }

    /// Integrates up to exactly `t_target`.
    pub fn advance_to<F: FnMut(f64, &[C], &mut [C])>(&mut self, f: &mut F, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step(f, t_target)?;
        }
        Ok(())
    }

    /// Fifth-order solution of a single non-adaptive step of size `h` from
    /// the current state, leaving the integrator untouched. Used to localize
    /// events inside an accepted step (which already met the tolerance for a
    /// larger `h`).
    pub fn probe<F: FnMut(f64, &[C], &mut [C])>(&mut self, f: &mut F, h: f64) -> Vec<C> {
        // `trial` leaves `t`, `y` and the derivative at `t` intact.
        self.trial(f, h);
        self.ynew.clone()
    }
}

/// Integrates from `t0` and records the solution at each of `times`
/// (non-decreasing, all `>= t0`).
pub fn solve_at<F: FnMut(f64, &[C], &mut [C])>(
    mut f: F,
    t0: f64,
    y0: Vec<C>,
    times: &[f64],
    opts: OdeOptions,
) -> Result<Vec<Vec<C>>> {
    let mut ode = Dopri5::new(t0, y0, opts);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        ode.advance_to(&mut f, t)?;
        out.push(ode.y().to_vec());
    }
    Ok(out)
}
