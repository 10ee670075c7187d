use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinpulse::harness::{
    self, presets, EnergiesDocument, ExperimentConfig, ExperimentKind, OutputFormat, RunOptions,
    RunReport, RunStatus, SweepDocument,
};
use spinpulse::{Error, ShorMode};

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spinpulse",
    version,
    about = "Pulse-level NMR quantum computing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON). Without it the built-in preset runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for result files; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit per-path amplitude traces where supported.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Instantaneous,
    BareDelay,
    NaturalPhase,
}

impl From<Mode> for ShorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Instantaneous => ShorMode::Instantaneous,
            Mode::BareDelay => ShorMode::BareDelay,
            Mode::NaturalPhase => ShorMode::NaturalPhase,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Cn,
    Ensemble,
    Shor,
    Design,
    Sweep,
}

#[derive(Subcommand)]
enum Command {
    /// Single-pulse CN on a pure state.
    RunCn(Common),
    /// CN on the deviation density matrix of a four-spin ensemble.
    RunEnsemble(Common),
    /// Four-qubit Shor pipeline.
    RunShor {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        /// JSON file with 16 energies, or `derive` to use the config's system.
        #[arg(long)]
        energies: Option<String>,
    },
    /// 2πk pulse design.
    DesignPulse {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        delta_omega: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Δω/Ω × J/Ω threshold sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        delta_omega_over_rabi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        j_over_rabi: Option<Vec<f64>>,
        #[arg(long)]
        max_deviation: Option<f64>,
    },
    /// Print a built-in config.
    Preset {
        #[arg(value_enum)]
        name: Preset,
    },
}

fn load(
    common: &Common,
    kind: ExperimentKind,
    preset: impl FnOnce() -> ExperimentConfig,
) -> Result<ExperimentConfig, Error> {
    let config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => preset(),
    };
    if config.kind != kind {
        return Err(Error::Validation(vec![format!(
            "kind: expected \"{kind}\", found \"{}\"",
            config.kind
        )]));
    }
    Ok(config)
}

fn run(common: &Common, config: ExperimentConfig) -> Result<RunReport, Error> {
    let options = RunOptions {
        format: common.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
        seed: common.seed,
        trace: common.trace,
    };
    let report = harness::run_config(&config, &options)?;
    let out = common.out.clone().or_else(|| config.output.path.clone());
    emit(&report, out.as_deref())?;
    Ok(report)
}

fn emit(report: &RunReport, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(dir) => {
            for path in report.write_to(dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            for a in &report.artifacts {
                if report.artifacts.len() > 1 {
                    println!("# {}", a.name);
                }
                print!("{}", a.content);
            }
        }
    }
    eprint!("{}", report.summary());
    Ok(())
}

fn read_energies(arg: &str) -> Result<EnergiesDocument, Error> {
    if arg == "derive" {
        return Ok(EnergiesDocument::Source(arg.into()));
    }
    let text = std::fs::read_to_string(arg)?;
    let values: Vec<f64> = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(vec![format!("energies: {arg}: {e}")]))?;
    Ok(EnergiesDocument::Values(values))
}

fn dispatch(command: Command) -> Result<RunReport, Error> {
    match command {
        Command::RunCn(common) => {
            let config = load(&common, ExperimentKind::Cn, presets::cn)?;
            run(&common, config)
        }
        Command::RunEnsemble(common) => {
            let config = load(&common, ExperimentKind::Ensemble, presets::ensemble)?;
            run(&common, config)
        }
        Command::RunShor {
            common,
            mode,
            tau1,
            tau2,
            energies,
        } => {
            let default_mode = mode.map(ShorMode::from).unwrap_or(ShorMode::Instantaneous);
            let mut config = load(&common, ExperimentKind::Shor, || {
                presets::shor(default_mode)
            })?;
            if let Some(s) = config.shor.as_mut() {
                if let Some(m) = mode {
                    s.mode = m.into();
                }
                if let Some(t) = tau1 {
                    s.tau1 = t;
                }
                if let Some(t) = tau2 {
                    s.tau2 = t;
                }
                if let Some(e) = &energies {
                    s.energies = Some(read_energies(e)?);
                }
            }
            run(&common, config)
        }
        Command::DesignPulse {
            common,
            delta_omega,
            k,
            n,
        } => {
            let mut config = load(&common, ExperimentKind::Design, presets::design)?;
            if let Some(d) = config.design.as_mut() {
                if let Some(v) = delta_omega {
                    d.delta_omega = v;
                }
                if let Some(v) = k {
                    d.k = v;
                }
                if let Some(v) = n {
                    d.n = v;
                }
            }
            run(&common, config)
        }
        Command::Sweep {
            common,
            delta_omega_over_rabi,
            j_over_rabi,
            max_deviation,
        } => {
            let mut config = load(&common, ExperimentKind::Sweep, presets::sweep)?;
            let s = config.sweep.get_or_insert_with(|| SweepDocument {
                delta_omega_over_rabi: Vec::new(),
                j_over_rabi: Vec::new(),
                rabi: 0.1,
                target_larmor: 100.0,
                max_deviation: None,
            });
            if let Some(v) = delta_omega_over_rabi {
                s.delta_omega_over_rabi = v;
            }
            if let Some(v) = j_over_rabi {
                s.j_over_rabi = v;
            }
            if max_deviation.is_some() {
                s.max_deviation = max_deviation;
            }
            run(&common, config)
        }
        Command::Preset { name } => {
            let config = match name {
                Preset::Cn => presets::cn(),
                Preset::Ensemble => presets::ensemble(),
                Preset::Shor => presets::shor(ShorMode::Instantaneous),
                Preset::Design => presets::design(),
                Preset::Sweep => presets::sweep(),
            };
            println!("{}", config.to_json());
            std::process::exit(0);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) if report.status == RunStatus::ToleranceFailure => {
            ExitCode::from(EXIT_TOLERANCE)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Config(_) | Error::Json(_) => {
                    ExitCode::from(EXIT_VALIDATION)
                }
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
