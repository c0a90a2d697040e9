use std::fs;

use dlmg::critical_fields;
use dlmg::params::CavityRatios;
use dlmg::scan::{run_scan, Outputs, Range, ScanConfig};

fn outputs(list: &str) -> Outputs {
    list.parse().unwrap()
}

#[test]
fn moments_and_semiclassical_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScanConfig {
        h_over_lambda: Range::new(-0.6, 1.4, 21).unwrap(),
        outputs: outputs("moments,semiclassical"),
        output_dir: dir.path().to_path_buf(),
        ..ScanConfig::default()
    };
    let summary = run_scan(&config).unwrap();
    assert_eq!(summary.files.len(), 4);
    assert!(dir.path().join("manifest.json").exists());
    for n in [25, 50, 100] {
        let text = fs::read_to_string(dir.path().join(format!("steady_state_N{n}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 22);
        assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")), "N={n}");
    }
}

#[test]
fn spectrum_recipe() {
    let ratios = CavityRatios::default();
    let c = ratios.to_cavity(0.0, 1000);
    let cf = critical_fields(c.lambda(), c.gamma_b()).unwrap();
    let fields = vec![-0.6, -0.1, -0.01, cf.h_minus, 0.05, 0.3, 0.5, 0.95, 0.995, cf.h_plus, 1.1, 1.3];
    let dir = tempfile::tempdir().unwrap();
    let config = ScanConfig {
        outputs: outputs("spectrum"),
        spectrum_h_values: fields,
        cavity: ratios,
        nu_over_lambda: Range::new(-3.0, 3.0, 401).unwrap(),
        refine_levels: 1,
        output_dir: dir.path().to_path_buf(),
        ..ScanConfig::default()
    };
    let summary = run_scan(&config).unwrap();
    assert_eq!(summary.files.len(), 12);
    for f in &summary.files {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.starts_with("nu_over_lambda,transmission,status"));
        assert!(text.lines().count() > 400);
    }
    // at the critical fields the ν = 0 response diverges
    assert!(summary.flagged_rows >= 1);
}
