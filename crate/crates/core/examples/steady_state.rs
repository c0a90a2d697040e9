//! Finite-N steady states approaching the mean-field branch as N grows.

use std::time::Instant;

use dlmg::entanglement::PlanarMoments;
use dlmg::semiclassical::physical_branch;
use dlmg::{build_liouvillian, build_spin_operators, expectations, steady_state, EffectiveParams};

fn main() -> dlmg::Result<()> {
    let h = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let params = EffectiveParams::dimensionless(h, 0.01, 0.2, 100)?;
    let mf = physical_branch(h, params.lambda, params.gamma_b)?.state;
    println!("h/λ = {h}  mean field: X = {:.5}  Z = {:.5}", mf.x, mf.z);
    println!("{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>8}", "N", "<Jz>/j", "4<Jx²>/N²", "purity", "C_R", "residual", "null dim", "time");
    for n in [25, 50, 100] {
        let start = Instant::now();
        let liou = build_liouvillian(&params, n)?;
        let ss = steady_state(&liou)?;
        let m = expectations(&ss.rho, &build_spin_operators(n)?)?;
        let nf = n as f64;
        println!(
            "{n:>5} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.2e} {:>9} {:>7.2}s",
            m.jz_mean / m.j(),
            4.0 * m.jx2 / (nf * nf),
            ss.rho.purity(),
            PlanarMoments::from(&m).c_r().c_r,
            ss.residual,
            ss.null_space_dim,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
