//! Relaxation of a coherent spin state towards the finite-N steady state.

use dlmg::master::evolve_sampled;
use dlmg::{build_liouvillian, build_spin_operators, coherent_spin_state, expectations, steady_state, DensityMatrix, EffectiveParams};

fn main() -> dlmg::Result<()> {
    let n = 25;
    let params = EffectiveParams::dimensionless(0.5, 0.01, 0.2, n)?;
    let liou = build_liouvillian(&params, n)?;
    let ops = build_spin_operators(n)?;
    let target = steady_state(&liou)?.rho;
    let rho0 = DensityMatrix::from_pure(&coherent_spin_state(0.0, 0.0, n));

    let times: Vec<f64> = (0..=10).map(|k| 5.0 * k as f64).collect();
    println!("{:>6} {:>10} {:>12} {:>10} {:>14}", "λt", "<Jz>/j", "4<Jx²>/N²", "purity", "‖ρ − ρss‖₁/2");
    for (t, ev) in evolve_sampled(&liou, &rho0, &times, 1e-10)? {
        let m = expectations(&ev.rho, &ops)?;
        println!(
            "{t:>6.1} {:>10.6} {:>12.6} {:>10.6} {:>14.3e}",
            m.jz_mean / m.j(),
            4.0 * m.jx2 / (n * n) as f64,
            ev.rho.purity(),
            ev.rho.trace_distance(&target)?
        );
    }
    Ok(())
}
