//! `kgcn`: train, evaluate and check kernel graph convolutional networks.

mod commands;
mod config;
mod data;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use config::RunConfig;

const OVERRIDE_HELP: &str = "\
Any other `--section.key value` pair overrides the config file, e.g.
  --seed 1 --kernel.kind laplacian --model.K 10 --train.epochs 300
`--seed` is mandatory unless the config file sets it.
Outputs go to --out, else $KGCN_OUT/<subcommand>, else ./runs/<subcommand>.";

#[derive(Parser)]
#[command(name = "kgcn", version, about, after_help = OVERRIDE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network; writes checkpoint.json and metrics.csv.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from this checkpoint up to train.epochs.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train once per ablation mode from the same initialization.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Compare closed-form and neural kernel evaluation.
    Kernelcheck {
        #[command(flatten)]
        common: Common,
    },
    /// Compare backpropagated gradients with finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
    },
    /// Fit a kernel PCA projector on the training nodes.
    Kpca {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic skeleton dataset.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train every kernel with K in {1, 5, 10} and N in {1, 4, 8}.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Train { common, .. } => ("train", common),
            Command::Eval { common, .. } => ("eval", common),
            Command::Ablate { common } => ("ablate", common),
            Command::Kernelcheck { common } => ("kernelcheck", common),
            Command::Gradcheck { common } => ("gradcheck", common),
            Command::Kpca { common } => ("kpca", common),
            Command::Synth { common } => ("synth", common),
            Command::Sweep { common } => ("sweep", common),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io { path: PathBuf, source: std::io::Error },
    Core(kgcn::Error),
    /// A self-check ran but its result is outside tolerance.
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "cli/usage",
            CliError::Data(_) => "cli/data",
            CliError::Io { .. } => "io/error",
            CliError::Core(e) => e.code(),
            CliError::CheckFailed(_) => "cli/check-failed",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e.class() {
                kgcn::ErrorClass::Data => 2,
                kgcn::ErrorClass::Numerical => 3,
            },
            CliError::CheckFailed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::CheckFailed(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<kgcn::Error> for CliError {
    fn from(e: kgcn::Error) -> Self {
        CliError::Core(e)
    }
}

type Split = (Vec<String>, Vec<(String, String)>);

/// Splits `--dotted.key value` and `--seed value` overrides from the
/// arguments clap understands.
fn split_overrides(args: Vec<String>) -> Result<Split, CliError> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if key != "seed" && !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| CliError::Usage(format!("--{key} needs a value")))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn out_dir(common: &Common, sub: &str) -> Result<PathBuf, CliError> {
    let dir = match (&common.out, std::env::var_os("KGCN_OUT")) {
        (Some(out), _) => out.clone(),
        (None, Some(root)) => PathBuf::from(root).join(sub),
        (None, None) => PathBuf::from("runs").join(sub),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    let (sub, common) = cli.command.parts();
    let base = match (&common.config, &cli.command) {
        (Some(path), _) => Some(path.clone()),
        // eval defaults to the configuration saved next to the checkpoint
        (None, Command::Eval { checkpoint, .. }) => checkpoint
            .parent()
            .map(|d| d.join("config.json"))
            .filter(|p| p.is_file()),
        _ => None,
    };
    if let Some(p) = &base {
        if !p.is_file() {
            return Err(CliError::Usage(format!("config file {} not found", p.display())));
        }
    }
    let cfg = RunConfig::resolve(base.as_deref(), overrides)?;
    let out = out_dir(common, sub)?;
    commands::write_config(&cfg, &out)?;
    match &cli.command {
        Command::Train { resume, .. } => commands::train(&cfg, &out, resume.as_deref()),
        Command::Eval { checkpoint, .. } => commands::eval(&cfg, &out, checkpoint),
        Command::Ablate { .. } => commands::ablate(&cfg, &out),
        Command::Kernelcheck { .. } => commands::kernelcheck(&cfg, &out),
        Command::Gradcheck { .. } => commands::gradcheck(&cfg, &out),
        Command::Kpca { .. } => commands::kpca(&cfg, &out),
        Command::Synth { .. } => commands::synth(&cfg, &out),
        Command::Sweep { .. } => commands::sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let usage = || Cli::command().render_usage();
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error[{}]: {e}\n\n{}", e.code(), usage());
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\n{}", usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
