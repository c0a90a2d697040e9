//! Dormand–Prince 5(4) adaptive integrator for real state vectors.
//!
//! The local error estimate is controlled componentwise (max norm) against
//! `atol + rtol |y|`.

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
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
// error = 5th order - embedded 4th order
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
///
/// `f(t, y, dy)` writes the derivative. After every accepted step `on_step(t, y)`
/// may modify the state in place (projection, symmetrization) and sample it.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut on_step: G,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &mut [f64]),
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return domain("integrator tolerances must be positive");
    }
    if !(t1 >= t0) {
        return domain(format!("final time {t1} precedes start {t0}"));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok((y, stats));
    }

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    f(t0, &y, &mut k[0]);
    stats.evaluations += 1;

    let span = t1 - t0;
    let mut h = opts.h_init.unwrap_or_else(|| {
        let scale = |i: usize| opts.atol + opts.rtol * y[i].abs();
        let d0 = rms((0..n).map(|i| y[i] / scale(i)));
        let d1 = rms((0..n).map(|i| k[0][i] / scale(i)));
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span)
    });
    h = h.min(opts.h_max);

    let mut t = t0;
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { t });
        }
        steps += 1;
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        stage(&mut tmp, &y, h, &k, &[(0, A21)]);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&mut tmp, &y, h, &k, &[(0, A31), (1, A32)]);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &y, h, &k, &[(0, A41), (1, A42), (2, A43)]);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &y, h, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &y, h, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        f(t + h, &tmp, &mut k[5]);
        stage(&mut y_new, &y, h, &k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
        f(t + h, &y_new, &mut k[6]);
        stats.evaluations += 6;

        let err = max_abs((0..n).map(|i| {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            e / (opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs()))
        }));

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            on_step(t, &mut y);
            // FSAL: k7 is the derivative at the new point, unless on_step moved it
            f(t, &y, &mut k[0]);
            stats.evaluations += 1;
            stats.accepted += 1;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(opts.h_max);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if !err.is_finite() {
            return Err(Error::StepUnderflow { t });
        }
        if h < opts.h_min * t.abs().max(1.0) && t < t1 {
            return Err(Error::StepUnderflow { t });
        }
    }
    Ok((y, stats))
}

fn stage(out: &mut [f64], y: &[f64], h: f64, k: &[Vec<f64>], coeffs: &[(usize, f64)]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = y[i] + h * coeffs.iter().map(|&(j, a)| a * k[j][i]).sum::<f64>();
    }
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| m.max(x.abs()))
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), x| (s + x * x, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}
