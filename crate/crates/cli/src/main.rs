//! `extmix`: config-driven runner for the pressure, spectrum, accessibility,
//! correlation and lemma experiments.
//!
//! Exit status: 0 on success, 1 on a failed numerical check or runtime error,
//! 2 on a config or usage error.

mod config;
mod output;
mod run;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, SchemaError};
use output::{sha256_hex, Manifest, Outputs, Versions};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const DEFAULT_SEED: u64 = 20_261_016;

#[derive(Parser)]
#[command(name = "extmix", version, about = "Exponential mixing experiments for compact group extensions")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML (or `.json`) experiment config; defaults apply when omitted.
    #[arg(long, global = true, env = "EXTMIX_CONFIG")]
    config: Option<PathBuf>,
    /// Directory for outputs and the manifest.
    #[arg(long, global = true, env = "EXTMIX_OUT_DIR", default_value = "extmix-out")]
    out_dir: PathBuf,
    /// Seed for every random draw; overrides the config value.
    #[arg(long, global = true, env = "EXTMIX_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "EXTMIX_THREADS", default_value_t = 0)]
    threads: usize,
    /// Leave timing out of the manifest so reruns are byte-identical.
    #[arg(long, global = true, env = "EXTMIX_DETERMINISTIC")]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Pressure, eigenfunction and invariant measure of the configured potential.
    Pressure {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Norms of iterates of the twisted operator.
    Spectrum {
        /// Character `n` (SO(2)) or spin `j` (SU(2)).
        #[arg(long)]
        irrep: Option<String>,
        /// Comma separated imaginary parts of z.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        im_z: Option<Vec<f64>>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Transitivity group dimensions and the non-local integrability constant.
    Access {
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        pasts: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte-Carlo correlation function on the suspension flow.
    Correlate {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the lemma inequality checks; exit 1 if any fails.
    VerifyLemmas {
        #[arg(long)]
        out: Option<String>,
    },
}

/// Why a run stopped.
pub enum Failure {
    Schema(SchemaError),
    Numeric(String),
    Io(String),
    /// Checks ran and some failed; carries the witness rows.
    Checks(Vec<verify::CheckRow>),
}

impl Failure {
    pub fn numeric(e: extmix::Error) -> Self {
        Failure::Numeric(e.to_string())
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Schema(e)
    }
}

fn apply_flags(cfg: &mut ExperimentConfig, cmd: &Command) {
    fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
        if let Some(v) = v {
            *slot = v.clone();
        }
    }
    match cmd {
        Command::Pressure { grid, out } => {
            set(&mut cfg.thermo.grid, grid);
            set(&mut cfg.thermo.out, out);
        }
        Command::Spectrum { irrep, im_z, iters, out } => {
            set(&mut cfg.spectrum.irrep, irrep);
            set(&mut cfg.spectrum.im_z, im_z);
            set(&mut cfg.spectrum.iters, iters);
            set(&mut cfg.spectrum.out, out);
        }
        Command::Access { depth, pasts, grid, out } => {
            set(&mut cfg.access.depth, depth);
            set(&mut cfg.access.pasts, pasts);
            set(&mut cfg.access.grid, grid);
            set(&mut cfg.access.out, out);
        }
        Command::Correlate { k, tmax, samples, out } => {
            set(&mut cfg.correlate.k, k);
            set(&mut cfg.correlate.tmax, tmax);
            set(&mut cfg.correlate.samples, samples);
            set(&mut cfg.correlate.out, out);
        }
        Command::VerifyLemmas { out } => set(&mut cfg.verify.out, out),
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Pressure { .. } => "pressure",
        Command::Spectrum { .. } => "spectrum",
        Command::Access { .. } => "access",
        Command::Correlate { .. } => "correlate",
        Command::VerifyLemmas { .. } => "verify-lemmas",
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let g = &cli.global;
    let loaded = config::load(g.config.as_deref())?;
    let mut cfg = loaded.config;
    apply_flags(&mut cfg, &cli.command);
    cfg.validate()?;
    let seed = g.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    // results do not depend on the thread count: shards and their merge order are fixed
    rayon::ThreadPoolBuilder::new().num_threads(g.threads).build_global().map_err(Failure::io)?;
    let mut out = Outputs::new(&g.out_dir)?;
    let mut failed = None;
    match &cli.command {
        Command::Pressure { .. } => run::pressure(&cfg, &mut out)?,
        Command::Spectrum { .. } => run::spectrum(&cfg, seed, &mut out)?,
        Command::Access { .. } => run::access(&cfg, &mut out)?,
        Command::Correlate { .. } => run::correlate_run(&cfg, seed, &mut out)?,
        Command::VerifyLemmas { .. } => {
            let rows = verify::verify_lemmas(&cfg, seed, &mut out)?;
            let bad: Vec<_> = rows.into_iter().filter(|r| !r.pass).collect();
            if !bad.is_empty() {
                failed = Some(bad);
            }
        }
    }
    let artifacts = std::mem::take(&mut out.written);
    let manifest = Manifest {
        subcommand: name(&cli.command),
        config_path: g.config.as_ref().map(|p| p.display().to_string()),
        config_sha256: sha256_hex(&loaded.bytes),
        seed,
        threads: rayon::current_num_threads(),
        deterministic: g.deterministic,
        versions: Versions::current(),
        outputs: &artifacts,
        elapsed_seconds: (!g.deterministic).then(|| start.elapsed().as_secs_f64()),
    };
    let mut data = serde_json::to_vec_pretty(&manifest).map_err(Failure::io)?;
    data.push(b'\n');
    std::fs::write(out.dir().join("manifest.json"), data).map_err(Failure::io)?;
    match failed {
        Some(bad) => Err(Failure::Checks(bad)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Schema(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Checks(rows)) => {
            eprintln!("{} check(s) failed:", rows.len());
            eprintln!("{}", serde_json::to_string_pretty(&rows).unwrap_or_default());
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) | Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
