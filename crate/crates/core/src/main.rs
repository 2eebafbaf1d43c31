use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use optomech::config::Config;
use optomech::model::{evaluate, Evaluation};
use optomech::params::ParamName;
use optomech::plot;
use optomech::sweep::{find_threshold, preset, run_sweep, SweepResult, ThresholdKind};
use optomech::validate::run_validation;
use optomech::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

/// Steady-state mirror–mirror entanglement of two coupled optomechanical
/// cavities. Temperatures are in mK and λ, α, β in multiples of Γ.
#[derive(Debug, Parser)]
#[command(name = "optomech", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file, merged over the defaults or preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `params.T=0.05` or `sweep.axes.0.points=11`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output file (CSV for sweeps). Defaults to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also write an SVG plot next to the CSV output.
    #[arg(long, global = true)]
    plot: bool,

    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a single parameter point.
    Point,
    /// Run the sweep described by the `[sweep]` section.
    Sweep,
    /// Run a figure preset (fig2, fig3, fig4, fig5).
    Preset { name: String },
    /// Locate an entanglement death or birth threshold along the sweep axis.
    Threshold {
        /// Start from a figure preset instead of the defaults.
        #[arg(long)]
        preset: Option<String>,
        /// death | birth (default from config).
        #[arg(long)]
        kind: Option<ThresholdKind>,
        /// Bracket width in axis units (default from config).
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Run the built-in invariant suite.
    Validate {
        /// Random parameter draws checked against the time-integration oracle.
        #[arg(long, default_value_t = 10)]
        draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let line = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() || matches!(e, Error::Io(_)) {
        EXIT_CONFIG
    } else {
        EXIT_DOMAIN
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let base_preset = match &cli.command {
        Command::Preset { name } => Some(name.as_str()),
        Command::Threshold { preset, .. } => preset.as_deref(),
        _ => None,
    };
    let mut config = match base_preset {
        Some(name) => Config::from_spec(&preset(name)?),
        None => Config::default(),
    };
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
        config = config.merge_toml(&text)?;
    }
    config.apply_overrides(&cli.overrides)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(cli)?;
    if cli.dump_config {
        emit(cli.out.as_deref(), config.to_toml()?.as_bytes())?;
        return Ok(0);
    }
    if cli.plot && cli.out.is_none() {
        return Err(Error::ConfigParse("--plot needs --out".into()));
    }
    let jobs = cli.jobs.or(config.numerics.jobs);
    if jobs == Some(0) {
        return Err(Error::ConfigParse("--jobs must be at least 1".into()));
    }

    match &cli.command {
        Command::Point => {
            let ev = evaluate(&config.params.to_physical(), &config.model_options())?;
            emit(cli.out.as_deref(), point_report(&ev).as_bytes())?;
            Ok(0)
        }
        Command::Sweep | Command::Preset { .. } => {
            let spec = config.to_spec();
            spec.validate()?;
            // Fail on an unwritable destination before doing the work.
            let sink = open_output(cli.out.as_deref())?;
            let result = run_sweep(&spec, jobs)?;
            report_point_errors(&result);
            result.write_csv(sink)?;
            if let (true, Some(out)) = (cli.plot, &cli.out) {
                fs::write(out.with_extension("svg"), plot::render(&result))?;
            }
            Ok(0)
        }
        Command::Threshold {
            kind, resolution, ..
        } => {
            let kind = kind.unwrap_or(config.sweep.threshold.kind);
            let resolution = resolution.unwrap_or(config.sweep.threshold.resolution);
            let spec = config.to_spec();
            spec.validate()?;
            let family = spec.family.clone();
            let mut text = String::new();
            for (i, member) in spec.family_members().iter().enumerate() {
                if let Some(f) = &family {
                    text.push_str(&format!(
                        "{} = {} {}: ",
                        f.name,
                        f.values[i],
                        f.name.display_unit()
                    ));
                }
                let report = find_threshold(member, kind, resolution)?;
                text.push_str(&format!("{report}\n"));
            }
            emit(cli.out.as_deref(), text.as_bytes())?;
            Ok(0)
        }
        Command::Validate { draws, seed } => {
            let report = run_validation(*seed, *draws);
            emit(cli.out.as_deref(), format!("{report}\n").as_bytes())?;
            if report.failed() > 0 {
                let line = json!({
                    "error": "ValidationFailed",
                    "message": format!("{} of {} checks failed", report.failed(), report.checks.len()),
                });
                eprintln!("{line}");
                return Ok(EXIT_DOMAIN);
            }
            Ok(0)
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                Error::Io(format!("cannot write {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    let mut w = open_output(path)?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// One machine-readable stderr line per grid point that failed.
fn report_point_errors(result: &SweepResult) {
    let names: Vec<ParamName> = result.spec.axes.iter().map(|a| a.name).collect();
    for r in &result.records {
        let Some(e) = &r.error else { continue };
        let mut point = serde_json::Map::new();
        if let (Some(f), Some(v)) = (&result.spec.family, r.point.family) {
            point.insert(f.name.to_string(), json!(v));
        }
        for (n, v) in names.iter().zip(&r.point.coords) {
            point.insert(n.to_string(), json!(v));
        }
        let line = json!({
            "warning": e.kind(),
            "message": e.to_string(),
            "index": r.point.index,
            "point": point,
        });
        eprintln!("{line}");
    }
}

fn point_report(ev: &Evaluation) -> String {
    let d = &ev.derived;
    let g = ev.params.cavity_damping;
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22} {v}\n"));
    for w in &ev.warnings {
        line("warning", w.to_string());
    }
    line("n_th", format!("{}", d.n_th));
    line("J [rad/s]", format!("{:e}", d.coupling));
    line("J [Gamma]", format!("{}", d.coupling / g));
    line("phi [rad]", format!("{}", d.phase));
    line("R", format!("{}", d.r_corr));
    line("V", format!("{}", d.v_corr));
    line("gamma' [rad/s]", format!("{:e}", d.gamma_prime));
    line("Gamma' [rad/s]", format!("{:e}", d.cavity_gamma_prime));
    line("Delta' [rad/s]", format!("{:e}", d.delta_eff));
    line("stable", ev.stability.stable.to_string());
    line(
        "max Re(lambda) [Gamma]",
        format!("{}", ev.stability.max_real_part / g),
    );
    let eig: Vec<String> = ev
        .stability
        .eigenvalues
        .iter()
        .map(|(re, im)| format!("{:.6}{:+.6}i", re / g, im / g))
        .collect();
    line("eigenvalues [Gamma]", eig.join(" "));
    match &ev.steady {
        Some(st) => {
            line("residual", format!("{:e}", st.solution.residual));
            line("condition", format!("{:e}", st.solution.condition));
            if st.solution.ill_conditioned {
                line("warning", "Lyapunov system is ill-conditioned".into());
            }
            line("min symplectic", format!("{}", st.min_symplectic));
            line("det Z", format!("{}", st.entanglement.det_z));
            line("nu_minus", format!("{}", st.entanglement.nu_minus));
            line("E_N", format!("{}", st.entanglement.log_negativity));
        }
        None => line("E_N", "nan (unstable)".into()),
    }
    s
}
