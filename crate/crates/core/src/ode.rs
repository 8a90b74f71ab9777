//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.
//!
//! Three drivers share one stepper: integrate to a point, integrate while
//! hitting a sorted list of output abscissae exactly, and integrate until an
//! event function changes sign. Event locations are refined by re-stepping
//! from the last accepted point with a shortened step, so the root is found
//! to integrator accuracy rather than to interpolation accuracy.

use crate::error::{HenonError, Result};

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
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_init: 1e-4, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

/// Result of [`Dopri5::until_event`].
#[derive(Debug, Clone, Copy)]
pub enum EventOutcome<const D: usize> {
    Event { t: f64, y: [f64; D] },
    Horizon { t: f64, y: [f64; D] },
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])], h: f64) -> [f64; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    /// One Dormand-Prince step. Returns the fifth-order solution and the
    /// scaled error norm (accept when <= 1).
    pub fn step<const D: usize, F>(&self, f: &F, t: f64, y: &[f64; D], h: f64) -> ([f64; D], f64)
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let k1 = f(t, y);
        let k2 = f(t + C2 * h, &axpy(y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + C4 * h, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(t + C5 * h, &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(
            t + h,
            &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        (y_new, err)
    }

    fn next_h(h: f64, err: f64) -> f64 {
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h * fac
    }

    /// Integrates from `t0` to `t1` (either direction).
    pub fn integrate<const D: usize, F>(&self, f: &F, t0: f64, y0: [f64; D], t1: f64) -> Result<[f64; D]>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let out = self.outputs(f, t0, y0, &[t1])?;
        Ok(out[0])
    }

    /// Integrates through the monotone list `ts`, stopping exactly at each
    /// entry, and returns the state there.
    pub fn outputs<const D: usize, F>(&self, f: &F, t0: f64, y0: [f64; D], ts: &[f64]) -> Result<Vec<[f64; D]>>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let mut out = Vec::with_capacity(ts.len());
        let mut t = t0;
        let mut y = y0;
        let dir = match ts.last() {
            Some(&last) if last < t0 => -1.0,
            _ => 1.0,
        };
        let mut h = self.h_init;
        let mut steps = 0usize;
        for &target in ts {
            while dir * (target - t) > 0.0 {
                let remaining = (target - t).abs();
                let hit = h >= remaining * (1.0 - 1e-12);
                let hs = if hit { remaining } else { h };
                let (y_new, err) = self.step(f, t, &y, dir * hs);
                steps += 1;
                if steps > self.max_steps {
                    return Err(HenonError::StepFailure { r: t, h: hs });
                }
                if err <= 1.0 {
                    t = if hit { target } else { t + dir * hs };
                    y = y_new;
                    if !hit {
                        h = Self::next_h(hs, err);
                    } else {
                        h = h.max(Self::next_h(hs, err).min(h));
                    }
                } else {
                    h = Self::next_h(hs, err);
                    if h < self.h_min * t.abs().max(1.0) {
                        return Err(HenonError::StepFailure { r: t, h });
                    }
                }
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Integrates forward from `t0` until `event(t, y)` changes sign, or until
    /// `t_max` / `stop(t, y)` is reached. `stop` sees every accepted step and
    /// may record it. A zero of the event at an accepted step end counts as
    /// an event.
    pub fn until_event<const D: usize, F, G, S>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; D],
        t_max: f64,
        event: G,
        mut stop: S,
    ) -> Result<EventOutcome<D>>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        G: Fn(f64, &[f64; D]) -> f64,
        S: FnMut(f64, &[f64; D]) -> bool,
    {
        let mut t = t0;
        let mut y = y0;
        let mut g = event(t, &y);
        let mut h = self.h_init;
        let mut steps = 0usize;
        while t < t_max {
            let hs = h.min(t_max - t);
            let (y_new, err) = self.step(f, t, &y, hs);
            steps += 1;
            if steps > self.max_steps {
                return Err(HenonError::StepFailure { r: t, h: hs });
            }
            if err > 1.0 {
                h = Self::next_h(hs, err);
                if h < self.h_min * t.abs().max(1.0) {
                    return Err(HenonError::StepFailure { r: t, h });
                }
                continue;
            }
            let g_new = event(t + hs, &y_new);
            if g_new == 0.0 {
                return Ok(EventOutcome::Event { t: t + hs, y: y_new });
            }
            if g_new.signum() != g.signum() {
                return self.refine_event(f, t, &y, g, hs, g_new, &event);
            }
            t += hs;
            y = y_new;
            g = g_new;
            if stop(t, &y) {
                break;
            }
            h = Self::next_h(hs, err);
        }
        Ok(EventOutcome::Horizon { t, y })
    }

    // Illinois false position on the step length from the last accepted point.
    #[allow(clippy::too_many_arguments)]
    fn refine_event<const D: usize, F, G>(
        &self,
        f: &F,
        t: f64,
        y: &[f64; D],
        g0: f64,
        h1: f64,
        g1: f64,
        event: &G,
    ) -> Result<EventOutcome<D>>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        G: Fn(f64, &[f64; D]) -> f64,
    {
        let (mut a, mut ga) = (0.0, g0);
        let (mut b, mut gb) = (h1, g1);
        let mut best = (h1, self.step(f, t, y, h1).0);
        let mut side = 0i8;
        for _ in 0..200 {
            let c = (a * gb - b * ga) / (gb - ga);
            let c = if c.is_finite() && c > a && c < b { c } else { 0.5 * (a + b) };
            let yc = self.step(f, t, y, c).0;
            let gc = event(t + c, &yc);
            best = (c, yc);
            if gc == 0.0 || (b - a) <= 4.0 * f64::EPSILON * (t + b).abs() {
                break;
            }
            if gc.signum() == gb.signum() {
                b = c;
                gb = gc;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            } else {
                a = c;
                ga = gc;
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            }
        }
        Ok(EventOutcome::Event { t: t + best.0, y: best.1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ode = Dopri5::new(1e-12);
        let f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let y = ode.integrate(&f, 0.0, [1.0], 3.0).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn outputs_hit_requested_points() {
        let ode = Dopri5::new(1e-11);
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let ts: Vec<f64> = (1..=50).map(|i| i as f64 * 0.1).collect();
        let ys = ode.outputs(&f, 0.0, [0.0, 1.0], &ts).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn backward_integration() {
        let ode = Dopri5::new(1e-11);
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let y = ode.integrate(&f, 1.0, [1.0f64.exp()], 0.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn event_locates_first_zero_of_cosine() {
        let ode = Dopri5::new(1e-12);
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let out = ode
            .until_event(&f, 0.0, [1.0, 0.0], 10.0, |_, y| y[0], |_, _| false)
            .unwrap();
        match out {
            EventOutcome::Event { t, .. } => {
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10)
            }
            _ => panic!("no event"),
        }
    }
}
