//! From microscopic ring-cavity estimates to the effective model.

use dlmg::params::{CavityRatios, ParameterFile, ParamsReport, DEFAULT_VALIDITY_THRESHOLD};

fn main() -> dlmg::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/li6_ring_cavity.json");
    let report = ParamsReport::from_file(&ParameterFile::load(path)?, DEFAULT_VALIDITY_THRESHOLD)?;
    let e = &report.effective;
    println!("bundled estimates ({}):", report.units);
    println!("  h = {:.3}  λ = {:.3}  Γa = {:.4}  Γb = {:.4}", e.h, e.lambda, e.gamma_a, e.gamma_b);
    println!("  h/λ = {:.4}  Γa/λ = {:.5}  Γb/λ = {:.5}", report.h_over_lambda, report.gamma_a_over_lambda, report.gamma_b_over_lambda);
    if let (Some(lo), Some(hi)) = (report.critical_fields.h_minus, report.critical_fields.h_plus) {
        println!("  critical fields h₋ = {lo:.4}, h₊ = {hi:.4}");
    }
    for c in &report.validity {
        println!("  {:<24} ratio {:>12.3e}  {}", c.name, c.ratio, if c.pass { "ok" } else { "FAILS" });
    }

    let cavity = CavityRatios::default().to_cavity(0.0, 1000);
    println!("\nprobe-spectrum cavity ratios:");
    println!("  λ = {:.6}  Γa/λ = {:.6}  Γb/λ = {:.6}", cavity.lambda(), cavity.gamma_a() / cavity.lambda(), cavity.gamma_b() / cavity.lambda());
    Ok(())
}
