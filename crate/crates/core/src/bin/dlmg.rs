use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dlmg::params::{critical_fields, CavityRatios, DEFAULT_VALIDITY_THRESHOLD};
use dlmg::scan::{self, Format, Outputs, Range, ScanConfig, Table};
use dlmg::semiclassical::{stability_changes, BlochState};
use dlmg::{EffectiveParams, Error};

#[derive(Parser)]
#[command(name = "dlmg", version, about = "Dissipative LMG model: steady states, bifurcations, fluctuations, probe spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Γa/λ
    #[arg(long, default_value_t = 0.01)]
    gamma_a: f64,
    /// Γb/λ
    #[arg(long, default_value_t = 0.2)]
    gamma_b: f64,
    /// Atom numbers, comma separated
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    n: Vec<u64>,
    /// h/λ grid as start:stop:count
    #[arg(long, default_value = "-0.6:1.4:201", allow_hyphen_values = true)]
    h_range: Range,
    /// Output directory (stdout when omitted, for single-table commands)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct CavityArgs {
    #[arg(long, default_value_t = 0.02)]
    kappa_a_over_delta_a: f64,
    #[arg(long, default_value_t = 0.32)]
    lambda_b_over_lambda_a: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_b_over_delta_a: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_b_over_lambda: f64,
    #[arg(long, default_value_t = 100.0)]
    delta_a_over_lambda: f64,
}

impl From<&CavityArgs> for CavityRatios {
    fn from(a: &CavityArgs) -> Self {
        CavityRatios {
            kappa_a_over_delta_a: a.kappa_a_over_delta_a,
            lambda_b_over_lambda_a: a.lambda_b_over_lambda_a,
            kappa_b_over_delta_a: a.kappa_b_over_delta_a,
            delta_b_over_lambda: a.delta_b_over_lambda,
            delta_a_over_lambda: a.delta_a_over_lambda,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Derived parameters, critical fields and validity checks from a parameter file
    Params {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VALIDITY_THRESHOLD)]
        threshold: f64,
    },
    /// Sweep h/λ and write the selected tables plus manifest.json
    Scan {
        #[command(flatten)]
        common: Common,
        /// moments, entanglement, eigenvalues, semiclassical, spectrum, all or none
        #[arg(long, default_value = "moments,semiclassical")]
        outputs: Outputs,
        /// Fields for probe spectra (numbers, hc- or hc+)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        spectrum_h: Vec<String>,
        #[command(flatten)]
        cavity: CavityArgs,
    },
    /// Probe transmission spectra of the two-mode cavity model
    Spectrum {
        /// Fields h/λ (numbers, hc- or hc+)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        h: Vec<String>,
        /// ν/λ grid as start:stop:count
        #[arg(long, default_value = "-3:3:2001", allow_hyphen_values = true)]
        nu_range: Range,
        #[arg(long, default_value_t = 3)]
        refine: usize,
        #[arg(long, default_value_t = 1e-3)]
        probe: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        cavity: CavityArgs,
    },
    /// Mean-field fixed points along h/λ, or a trajectory with --start
    Semiclassical {
        #[command(flatten)]
        common: Common,
        /// Initial Bloch angles θ,φ for a trajectory at --h
        #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Finite-N time evolution from a coherent spin state
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn emit(table: &Table, out: Option<&Path>, name: &str, format: Format) -> dlmg::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{}", format.extension()));
            table.write(&path, format)?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().lock().write_all(table.render(format).as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> dlmg::Result<()> {
    match cli.command {
        Command::Params { file, threshold } => {
            let report = scan::run_params(&file, threshold)?;
            let text = serde_json::to_string_pretty(&report).expect("report is valid JSON");
            writeln!(std::io::stdout().lock(), "{text}")?;
        }
        Command::Scan { common, outputs, spectrum_h, cavity } => {
            let ratios = CavityRatios::from(&cavity);
            let probe = ratios.to_cavity(0.0, 1000);
            let cf = critical_fields(probe.lambda(), probe.gamma_b())?;
            let spectrum_h_values = spectrum_h.iter().map(|t| scan::parse_field(t, &cf)).collect::<dlmg::Result<_>>()?;
            let config = ScanConfig {
                h_over_lambda: common.h_range,
                n_atoms: common.n,
                gamma_a_over_lambda: common.gamma_a,
                gamma_b_over_lambda: common.gamma_b,
                outputs,
                spectrum_h_values,
                cavity: ratios,
                output_dir: common.out.unwrap_or_else(|| PathBuf::from(".")),
                format: common.format,
                jobs: common.jobs,
                ..ScanConfig::default()
            };
            let summary = scan::run_scan(&config)?;
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            eprintln!("wrote {} ({} flagged rows)", summary.manifest.display(), summary.flagged_rows);
        }
        Command::Spectrum { h, nu_range, refine, probe, out, format, cavity } => {
            let ratios = CavityRatios::from(&cavity);
            let base = ratios.to_cavity(0.0, 1000);
            let cf = critical_fields(base.lambda(), base.gamma_b())?;
            let grid = nu_range.values();
            for token in &h {
                let hv = scan::parse_field(token, &cf)?;
                let result = scan::probe_spectrum(&ratios, hv, 1000, probe, &grid, refine)?;
                let name = format!("spectrum_h{}", format!("{hv:+.6}").replace('+', "p").replace('-', "m"));
                emit(&scan::spectrum_table(&result), out.as_deref(), &name, format)?;
            }
        }
        Command::Semiclassical { common, start, h, t_final, tol } => {
            let p = EffectiveParams::dimensionless(h, common.gamma_a, common.gamma_b, 1)?;
            match start {
                Some(angles) => {
                    let s0 = BlochState::from_angles(angles[0], angles[1]);
                    emit(&scan::trajectory_table(&s0, &p, t_final, tol)?, common.out.as_deref(), "trajectory", common.format)?;
                }
                None => {
                    let r = common.h_range;
                    let grid = r.values();
                    emit(&scan::bifurcation_table(&grid, p.lambda, p.gamma_b), common.out.as_deref(), "bifurcation", common.format)?;
                    let lo = r.start.min(r.stop);
                    let hi = r.start.max(r.stop);
                    for c in stability_changes(lo, hi, r.count, p.lambda, p.gamma_b, 1e-12)? {
                        eprintln!("stable branches {} -> {} at h/λ = {:.12}", c.count_below, c.count_above, c.h);
                    }
                }
            }
        }
        Command::Evolve { common, h, theta, phi, t_final, samples, tol } => {
            let n = *common.n.first().ok_or_else(|| Error::Domain("--n is required".into()))?;
            let p = EffectiveParams::dimensionless(h, common.gamma_a, common.gamma_b, n)?;
            let times = if samples < 2 { vec![t_final] } else { Range::new(0.0, t_final, samples)?.values() };
            emit(&scan::evolution_table(&p, n, theta, phi, &times, tol)?, common.out.as_deref(), &format!("evolution_N{n}"), common.format)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
