//! Command-line front end: one subcommand per pipeline stage, all driven by
//! a single TOML/JSON config.

pub mod config;
pub mod error;
pub mod stages;

use std::fmt::Write as _;
use std::path::PathBuf;

use beatdesign_core::mip::{ClosedForm, CountReport, MipMode, Reconciliation};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::stages::{MipArgs, Pipeline};

#[derive(Debug, Parser)]
#[command(name = "beatdesign", version, about = "Balanced, contiguous police beat design")]
pub struct Cli {
    /// Pipeline config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides paths.out_dir.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid the city boundary into atoms.
    Atomize,
    /// Overlay census blocks on the atoms and build the factor tensor.
    Interpolate,
    /// Count calls per atom-month and convert them to hours.
    Workload,
    /// Fit the spatial-lag rate model.
    Fit,
    /// Forecast rates and workload over the horizon.
    Predict,
    /// Split the heaviest beat until the target beat count is reached.
    Greedy,
    /// Refine the greedy design by simulated annealing.
    Anneal,
    /// Write the districting MIP as an LP file, or only its size.
    ExportMip(ExportMipArgs),
    /// Beat workload table, elbow curve, maps and a Markdown summary.
    Report,
    /// Generate a synthetic city with a ready-to-run config.
    Synth(SynthArgs),
    /// Every stage from atomize to report.
    RunAll,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Dense,
    Sparse,
}

impl From<ModeArg> for MipMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dense => MipMode::Dense,
            ModeArg::Sparse => MipMode::Sparse,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportMipArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Count variables and constraints without writing the LP.
    #[arg(long)]
    pub count_only: bool,
    /// Number of beats; defaults to design.k_target.
    #[arg(long)]
    pub k: Option<usize>,
    /// Size a dense model of this many atoms from closed forms, without a
    /// config or grid.
    #[arg(long, conflicts_with = "replica")]
    pub atoms: Option<u64>,
    /// Use the built-in 1187-atom city replica grid.
    #[arg(long)]
    pub replica: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic spec (JSON); the bundled 20×20 spec when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::new("config", "missing_config", "--config is required for this command"))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(d) = &cli.out_dir {
        cfg.paths.out_dir = Some(d.clone());
    }
    Ok(cfg)
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render_closed_form(i: u64, k: u64, cf: &ClosedForm, rec: &Reconciliation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode: dense (closed form), atoms I = {i}, beats K = {k}");
    let _ = writeln!(s, "binary variables (d, h): {}", thousands(cf.binary_dh));
    let _ = writeln!(s, "continuous variables (f): {}", thousands(cf.continuous_f));
    let _ = writeln!(s, "total variables: {}", thousands(cf.total_variables));
    let _ = writeln!(s, "constraint identity 3I^2K + IK: {}", thousands(cf.constraint_identity));
    if (i, k) == (rec.i, rec.k) {
        let _ = writeln!(
            s,
            "published totals match: variables {}, constraints {}",
            yes_no(rec.variables_match),
            yes_no(rec.constraints_match)
        );
    }
    s
}

pub fn render_count_report(c: &CountReport) -> String {
    let mut s = String::new();
    let mode = match c.mode {
        MipMode::Dense => "dense",
        MipMode::Sparse => "sparse",
    };
    let _ = writeln!(s, "mode: {mode}, atoms I = {}, beats K = {}, capacity q = {}", c.n_atoms, c.k, c.q);
    for v in &c.variables {
        let _ = writeln!(s, "  variables {}[{}]: {}", v.family, v.quantifier, thousands(v.count));
    }
    for r in &c.constraints {
        let _ = writeln!(s, "  constraints {} ({}): {}", r.family, r.quantifier, thousands(r.count));
    }
    let _ = writeln!(s, "binary variables: {}", thousands(c.binary_variables));
    let _ = writeln!(s, "continuous variables: {}", thousands(c.continuous_variables));
    let _ = writeln!(s, "total variables: {}", thousands(c.total_variables));
    let _ = writeln!(s, "total constraints: {}", thousands(c.total_constraints));
    let _ = writeln!(
        s,
        "constraint identity 3I^2K + IK: {}",
        thousands(c.closed_form.constraint_identity)
    );
    let rec = &c.reference;
    if (c.n_atoms as u64, c.k as u64) == (rec.i, rec.k) && c.mode == MipMode::Dense {
        let _ = writeln!(
            s,
            "published totals match: variables {}, constraints {}",
            yes_no(rec.variables_match && c.total_variables == rec.published_variables),
            yes_no(rec.constraints_match)
        );
    }
    s
}

/// Runs one command and returns what it prints on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let listing = |files: Vec<PathBuf>| files.iter().map(|p| format!("wrote {}\n", p.display())).collect::<String>();
    match &cli.command {
        Command::Synth(a) => {
            let out = cli
                .out_dir
                .as_ref()
                .ok_or_else(|| CliError::new("synth", "missing_path", "--out-dir is required"))?;
            let text = match &a.spec {
                Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
                    CliError::new("synth", "io", format!("{}: {e}", p.display())).with("path", p.as_path())
                })?),
                None => None,
            };
            Ok(listing(stages::synth(text.as_deref(), cli.seed, out)?))
        }
        Command::ExportMip(a) if a.atoms.is_some() || a.replica => {
            let mode = a.mode.map_or(MipMode::Dense, MipMode::from);
            let k = a.k.unwrap_or(15);
            if let Some(i) = a.atoms {
                if mode != MipMode::Dense || !a.count_only {
                    return Err(CliError::new(
                        "export-mip",
                        "invalid_args",
                        "--atoms only sizes a dense model; pass --mode dense --count-only",
                    ));
                }
                let (cf, rec) = stages::closed_form_report(i, k as u64);
                return Ok(render_closed_form(i, k as u64, &cf, &rec));
            }
            if !a.count_only {
                return Err(CliError::new("export-mip", "invalid_args", "--replica requires --count-only"));
            }
            Ok(render_count_report(&stages::replica_report(mode, k)?))
        }
        cmd => {
            let p = Pipeline::new(load_config(cli)?)?;
            let files = match cmd {
                Command::Atomize => p.atomize()?,
                Command::Interpolate => p.interpolate()?,
                Command::Workload => p.workload()?,
                Command::Fit => p.fit()?,
                Command::Predict => p.predict()?,
                Command::Greedy => p.greedy()?,
                Command::Anneal => p.anneal()?,
                Command::Report => p.report()?,
                Command::RunAll => p.run_all()?,
                Command::ExportMip(a) => {
                    let args = MipArgs {
                        mode: a.mode.map(MipMode::from),
                        k: a.k,
                        count_only: a.count_only,
                    };
                    let (files, report) = p.export_mip(&args)?;
                    return Ok(format!("{}{}", render_count_report(&report), listing(files)));
                }
                Command::Synth(_) => unreachable!("handled above"),
            };
            Ok(listing(files))
        }
    }
}
