//! Adaptive Dormand–Prince 5(4) integration with terminal event detection.

use crate::{Error, Result};

/// Sign-change condition `g(t, y) = 0` that stops the integration.
pub struct Event<'a, const N: usize> {
    pub condition: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// `+1`: only rising crossings, `−1`: only falling, `0`: both.
    pub direction: i8,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(direction: i8, condition: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self {
            condition: Box::new(condition),
            direction,
        }
    }

    fn triggered(&self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self.direction {
            1 => rising,
            -1 => falling,
            _ => rising || falling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

/// Accepted steps with derivatives, allowing cubic Hermite dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    /// Index of the event that terminated the integration, if any.
    pub event: Option<usize>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().expect("non-empty"), *self.y.last().expect("non-empty"))
    }

    /// Dense output at `t` (clamped to the integrated range).
    pub fn sample(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let k = self.t.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        hermite(
            self.t[k],
            &self.y[k],
            &self.dy[k],
            self.t[k + 1],
            &self.y[k + 1],
            &self.dy[k + 1],
            t,
        )
    }
}

fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    f1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y′ = f(t, y)` from `t0` to `t_end` (which may lie below `t0`),
/// stopping at the first triggered event.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerances,
    events: &[Event<'_, N>],
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut fy = f(t, &y);
    let mut traj = Trajectory {
        t: vec![t],
        y: vec![y],
        dy: vec![fy],
        event: None,
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.condition)(t, &y)).collect();
    let mut h = (span * 1e-3).max(1e-10).min(span);
    let mut steps = 0usize;
    while (t_end - t) * dir > 0.0 {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::ToleranceUnreachable(tol.rtol));
        }
        h = h.min((t_end - t).abs());
        let mut k = [[0.0; N]; 7];
        k[0] = fy;
        for s in 1..7 {
            let ys: [f64; N] =
                std::array::from_fn(|i| y[i] + dir * h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
            k[s] = f(t + dir * C[s] * h, &ys);
        }
        // FSAL: stage 7 is evaluated at the 5th-order solution.
        let y_new: [f64; N] =
            std::array::from_fn(|i| y[i] + dir * h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>());
        let err = (0..N)
            .map(|i| {
                let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / N as f64;
        let err = err.sqrt();
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::ToleranceUnreachable(tol.rtol));
            }
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::ToleranceUnreachable(tol.rtol));
            }
            continue;
        }
        let t_new = t + dir * h;
        let f_new = k[6];
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.condition)(t_new, &y_new);
            if ev.triggered(g_prev[idx], g_new) {
                // Locate the crossing on the Hermite interpolant by bisection.
                let (mut a, mut b) = (t, t_new);
                let ga = g_prev[idx];
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    let ym = hermite(t, &y, &fy, t_new, &y_new, &f_new, m);
                    let gm = (ev.condition)(m, &ym);
                    if (gm < 0.0) == (ga < 0.0) && gm != 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                    if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
                        break;
                    }
                }
                let ye = hermite(t, &y, &fy, t_new, &y_new, &f_new, b);
                let fe = f(b, &ye);
                traj.t.push(b);
                traj.y.push(ye);
                traj.dy.push(fe);
                traj.event = Some(idx);
                return Ok(traj);
            }
            g_prev[idx] = g_new;
        }
        t = t_new;
        y = y_new;
        fy = f_new;
        traj.t.push(t);
        traj.y.push(y);
        traj.dy.push(fy);
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(traj)
}
