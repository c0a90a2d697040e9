//! Probe transmission spectra across the phase diagram, with the atomic
//! resonances located on a refined grid.

use dlmg::fluctuations::spectrum::{atomic_features, default_branch, default_grid, refined_spectrum};
use dlmg::params::{critical_fields, CavityRatios};

fn main() -> dlmg::Result<()> {
    let ratios = CavityRatios::default();
    let probe = ratios.to_cavity(0.0, 1000);
    let cf = critical_fields(probe.lambda(), probe.gamma_b())?;
    println!("Γa/λ = {:.5}  Γb/λ = {:.5}  h± = {:.6}, {:.6}", probe.gamma_a(), probe.gamma_b(), cf.h_minus, cf.h_plus);

    let hs = [-0.6, -0.1, -0.01, cf.h_minus, 0.05, 0.3, 0.5, 0.95, 0.995, cf.h_plus * (1.0 - 1e-4), 1.1, 1.3];
    for h in hs {
        let cavity = ratios.to_cavity(h, 1000);
        let branch = default_branch(&cavity)?;
        let spec = refined_spectrum(&cavity, &branch, 1e-3, &default_grid(1.0), 3)?;
        println!("h/λ = {h:+.6} [{}]  T(0) = {:.4e}  points = {}", branch.branch_id, spec.at(0.0), spec.probe_frequencies.len());
        for f in atomic_features(&spec, 1e-3) {
            println!(
                "    {:?} at ν/λ = {:+.5}  T/T_empty = {:.4e}  width = {}",
                f.kind,
                f.center,
                f.value,
                f.width.map_or("-".to_string(), |w| format!("{w:.5}"))
            );
        }
    }
    Ok(())
}
