//! Planar spin-squeezing measure C_R across the transition, and the
//! two-spin concurrence check at small N.

use dlmg::entanglement::PlanarMoments;
use dlmg::{build_liouvillian, build_spin_operators, concurrence_oracle, expectations, steady_state, EffectiveParams};

fn main() -> dlmg::Result<()> {
    let n = 100;
    let ops = build_spin_operators(n)?;
    println!("N = {n}, Γa/λ = 0.01, Γb/λ = 0.2");
    println!("{:>6} {:>9} {:>8}", "h", "C_R", "φ*");
    for k in 0..=20 {
        let h = -0.2 + 0.07 * k as f64;
        let p = EffectiveParams::dimensionless(h, 0.01, 0.2, n)?;
        let m = expectations(&steady_state(&build_liouvillian(&p, n)?)?.rho, &ops)?;
        let r = PlanarMoments::from(&m).c_r();
        println!("{h:>6.2} {:>9.5} {:>8.4}", r.c_r, r.phi_star);
    }

    println!("\nsmall N at h = 0.98: (N−1)·C against C_R");
    for n in [2u64, 3, 4] {
        let p = EffectiveParams::dimensionless(0.98, 0.01, 0.2, n)?;
        let rho = steady_state(&build_liouvillian(&p, n)?)?.rho;
        let c_r = PlanarMoments::from(&expectations(&rho, &build_spin_operators(n)?)?).c_r().c_r;
        let c = concurrence_oracle(&rho, n)?;
        println!("  N = {n}: (N−1)C = {:.6}  C_R = {c_r:.6}", (n - 1) as f64 * c);
    }
    Ok(())
}
