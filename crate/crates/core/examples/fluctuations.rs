//! Gaussian fluctuations: drift eigenvalues across the phase diagram and
//! stationary moments compared with finite N.

use dlmg::fluctuations::{fluctuation_eigenvalues, linearize_physical, steady_covariance};
use dlmg::{build_liouvillian, build_spin_operators, expectations, steady_state, EffectiveParams};

fn main() -> dlmg::Result<()> {
    let params = EffectiveParams::dimensionless(0.0, 0.01, 0.2, 100)?;
    let cf = params.critical_fields();
    let grid = [-0.4, 0.0, cf.h_minus, 0.3, 0.8, cf.h_plus, 1.2, 1.5];
    println!("{:>8}  {:<12} {:>22} {:>22}  status", "h", "branch", "eig1", "eig2");
    for row in fluctuation_eigenvalues(&params, &grid) {
        let [a, b] = row.eigenvalues;
        println!("{:>8.5}  {:<12} {:>+10.5}{:>+10.5}i {:>+10.5}{:>+10.5}i  {}", row.h, row.branch_id.as_str(), a.re, a.im, b.re, b.im, row.status);
    }

    println!("\nN·(4/N²)⟨Jx²⟩ at h = 1.2: linearized vs finite N");
    let p = params.with_h(1.2);
    let cov = steady_covariance(&linearize_physical(&p)?)?;
    println!("  linearized: {:.5}   (n_c = {:.5}, m_c = {:.5})", cov.lab_second_order[(0, 0)], cov.n_c, cov.m_c);
    for n in [25u64, 50, 100] {
        let rho = steady_state(&build_liouvillian(&p.with_n(n), n)?)?.rho;
        let m = expectations(&rho, &build_spin_operators(n)?)?;
        println!("  N = {n:>3}:    {:.5}", 4.0 * m.jx2 / n as f64);
    }
    Ok(())
}
