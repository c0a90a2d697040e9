#![allow(dead_code)]

use dlmg::{build_liouvillian, build_spin_operators, expectations, steady_state, EffectiveParams, MomentSet, SteadyState};
use rayon::prelude::*;

pub fn solve(h: f64, gamma_a: f64, gamma_b: f64, n: u64) -> (SteadyState, MomentSet) {
    let p = EffectiveParams::dimensionless(h, gamma_a, gamma_b, n).unwrap();
    let ss = steady_state(&build_liouvillian(&p, n).unwrap()).unwrap_or_else(|e| panic!("h={h} N={n}: {e}"));
    let m = expectations(&ss.rho, &build_spin_operators(n).unwrap()).unwrap();
    (ss, m)
}

/// Steady-state moments along `h_grid`, in grid order.
pub fn moments_along(h_grid: &[f64], gamma_a: f64, gamma_b: f64, n: u64) -> Vec<MomentSet> {
    h_grid.par_iter().map(|&h| solve(h, gamma_a, gamma_b, n).1).collect()
}

/// `(4/N²)⟨JaJb⟩_sym` as `[xx, yy, zz, xy, xz, yz]`.
pub fn scaled_moments(m: &MomentSet) -> [f64; 6] {
    let s = 4.0 / (m.n_atoms * m.n_atoms) as f64;
    [m.jx2, m.jy2, m.jz2, m.jxjy_sym, m.jxjz_sym, m.jyjz_sym].map(|v| v * s)
}

/// Quadratic extrapolation in 1/N to N → ∞ from values at N, 2N, 4N.
pub fn richardson(y: [f64; 3]) -> f64 {
    let fine = 2.0 * y[2] - y[1];
    let coarse = 2.0 * y[1] - y[0];
    (4.0 * fine - coarse) / 3.0
}

/// Deterministic uniform numbers in [0, 1).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn uniform(start: f64, stop: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
