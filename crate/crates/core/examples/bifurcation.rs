//! Mean-field fixed points, their stability, and the two critical fields.

use dlmg::params::critical_fields;
use dlmg::semiclassical::{fixed_points, integrate, stability_changes, BlochState};

fn main() -> dlmg::Result<()> {
    let (lambda, gamma_b) = (1.0, 0.2);
    let cf = critical_fields(lambda, gamma_b)?;
    println!("closed form: h₋ = {:.10}  h₊ = {:.10}", cf.h_minus, cf.h_plus);
    for c in stability_changes(-0.6, 1.4, 201, lambda, gamma_b, 1e-12)? {
        println!("scan:        {} → {} stable branches at h = {:.10}", c.count_below, c.count_above, c.h);
    }

    println!("\n{:>6}  {:<12} {:>9} {:>9} {:>9}  {:>22}", "h", "branch", "X", "Y", "Z", "eigenvalues");
    for h in [-0.3, 0.005, 0.5, 0.98, 1.2] {
        for b in fixed_points(h, lambda, gamma_b)?.iter().filter(|b| b.stable) {
            let e = b.jacobian_eigenvalues;
            println!(
                "{h:>6.3}  {:<12} {:>9.5} {:>9.5} {:>9.5}  {:>+.4}{:+.4}i, {:+.4}{:+.4}i",
                b.branch_id.as_str(),
                b.state.x,
                b.state.y,
                b.state.z,
                e[0].re,
                e[0].im,
                e[1].re,
                e[1].im
            );
        }
    }

    let start = BlochState::from_angles(1.2, 0.4);
    let tr = integrate(&start, 0.5, lambda, gamma_b, 100.0, 1e-10)?;
    let end = tr.last();
    println!("\nflow from θ=1.2, φ=0.4 at h=0.5 settles at ({:.5}, {:.5}, {:.5})", end.x, end.y, end.z);
    Ok(())
}
