//! Experiment driver for selective sampling runs.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 failed self-check.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod experiment;

use experiment::ExperimentSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::SelfCheck(_) => 3,
        }
    }
}

impl From<selsample::Error> for CliError {
    fn from(e: selsample::Error) -> Self {
        match e {
            selsample::Error::Image(_) | selsample::Error::Csv(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "selsample", version, about = "Selective sampling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampling process; writes trace.csv and curve.csv
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run, then rasterize the final predictor; writes prediction.ppm
    Render {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        width: Option<String>,
        #[arg(long)]
        height: Option<String>,
        #[arg(long)]
        overlay_samples: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Final error and Q measure of several specs over a range of seeds;
    /// writes compare.csv
    Compare {
        #[arg(long = "spec", required = true)]
        specs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Adversarial 1D demonstration; writes failure.csv
    FailureDemo {
        #[arg(long, default_value_t = 20)]
        i_max: u32,
        #[arg(long, default_value_t = 10)]
        n_steps: usize,
        #[arg(long, default_value_t = 100_000)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Experiment flags. Values are parsed by [`ExperimentSpec::set`] so that
/// flags and spec files share one grammar; flags override the file.
#[derive(Debug, Default, Args)]
pub struct ExperimentArgs {
    /// key = value file with the same settings as the flags
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// disk:cx,cy,r | checker:k | image:<path> | adv1d[:i_max]
    #[arg(long)]
    pub truth: Option<String>,
    /// dist | nmc-knn:K | nmc-vor
    #[arg(long)]
    pub heuristic: Option<String>,
    /// const:k | hlog | iid
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// N or p:P
    #[arg(long)]
    pub seed_initial: Option<String>,
    #[arg(long)]
    pub probes: Option<String>,
    #[arg(long)]
    pub probe_seed: Option<String>,
    #[arg(long)]
    pub stride: Option<String>,
}

impl ExperimentArgs {
    pub fn resolve(&self, extra: &[(&str, &Option<String>)]) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::from_spec_file(path)?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("truth", &self.truth),
            ("heuristic", &self.heuristic),
            ("kappa", &self.kappa),
            ("n", &self.n),
            ("seed", &self.seed),
            ("seed-initial", &self.seed_initial),
            ("probes", &self.probes),
            ("probe-seed", &self.probe_seed),
            ("stride", &self.stride),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        Ok(spec)
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in `dir`.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { exp, out } => {
            let spec = exp.resolve(&[])?;
            let res = commands::run(&spec)?;
            write_atomic(&out, "trace.csv", res.trace_csv().as_bytes())?;
            write_atomic(&out, "curve.csv", res.curve_csv().as_bytes())?;
            println!("final error: {}", res.final_error);
        }
        Command::Render {
            exp,
            width,
            height,
            overlay_samples,
            out,
        } => {
            let spec = exp.resolve(&[("width", &width), ("height", &height)])?;
            let res = commands::render(&spec, overlay_samples)?;
            write_atomic(&out, "prediction.ppm", &res.ppm)?;
            println!("probe error: {}", res.probe_error);
        }
        Command::Compare { specs, seeds, out } => {
            let loaded = specs
                .iter()
                .map(|p| Ok((p.display().to_string(), ExperimentSpec::from_spec_file(p)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let table = commands::compare(&loaded, seeds)?;
            write_atomic(&out, "compare.csv", table.to_csv().as_bytes())?;
            for m in table.medians() {
                let q = m
                    .q_measure
                    .map(|q| q.to_string())
                    .unwrap_or_else(|| "-".into());
                println!("{}: median error {} median q {}", m.spec, m.final_error, q);
            }
        }
        Command::FailureDemo {
            i_max,
            n_steps,
            probes,
            seed,
            out,
        } => {
            let demo = commands::failure(i_max, n_steps, probes, seed)?;
            write_atomic(&out, "failure.csv", demo.to_csv().as_bytes())?;
            println!("{:>4}  {:>14}  {:>14}", "n", "analytic_error", "mc_error");
            for r in &demo.rows {
                println!(
                    "{:>4}  {:>14.9}  {:>14.9}",
                    r.n, r.analytic_error, r.mc_error
                );
            }
            if !demo.analytic_strictly_increasing() {
                return Err(CliError::SelfCheck(
                    "analytic error is not strictly increasing".into(),
                ));
            }
        }
    }
    Ok(())
}
