//! Flag parsing. Flags are turned into a [`RunConfig`]; `qig run --config`
//! reads one from a file instead.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::execute;
use crate::config::{
    Command, Format, ModelRef, ModelSpec, ObjectiveName, RunConfig, SolverSpec, WeightName,
    WeightSpec,
};
use crate::error::{CliError, CliResult, EXIT_COMPUTE};
use crate::report::Report;

#[derive(Parser, Debug)]
#[command(
    name = "qig",
    version,
    about = "Fisher information and p-local measurement bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Model registry.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Quantum Fisher information matrix, F_Im and commutator diagnostics.
    Qfim(RunArgs),
    /// Classical Fisher information of a POVM (computational basis by default).
    Cfim(RunArgs),
    /// Every analytic Γ_p bound for each p, with the covariance conversion.
    Bounds(RunArgs),
    /// Holevo bound for a weight matrix.
    Holevo(RunArgs),
    /// Nagaoka bound (two-parameter models).
    Nagaoka(RunArgs),
    /// Numerical search for the best p-local POVM.
    Optimize(RunArgs),
    /// Monte-Carlo MLE experiment.
    Simulate(RunArgs),
    /// Invariant and dominance checks at one point.
    Verify(RunArgs),
    /// Run a JSON run config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Subcommand, Debug)]
enum ModelAction {
    List {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ObjectiveArg {
    Gamma,
    WeightedCrb,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Registry name, or a model-spec JSON file.
    #[arg(long)]
    model: String,
    /// Parameter point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Copy counts, comma separated.
    #[arg(long, default_value = "1")]
    p: String,
    /// `identity`, `f_q`, or rows such as `1,0.2;0.2,0.6`.
    #[arg(long, default_value = "identity")]
    weight: String,
    #[arg(long)]
    outcomes: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// POVM JSON file.
    #[arg(long)]
    povm: Option<PathBuf>,
    /// Where `optimize` writes the best POVM of the largest p.
    #[arg(long)]
    povm_out: Option<PathBuf>,
    /// Convex-solver config JSON file.
    #[arg(long)]
    solver: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--{flag}: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_weight(s: &str) -> CliResult<WeightSpec> {
    match s {
        "identity" => Ok(WeightSpec::Named(WeightName::Identity)),
        "f_q" | "fq" => Ok(WeightSpec::Named(WeightName::Fq)),
        rows => Ok(WeightSpec::Matrix(
            rows.split(';')
                .map(|r| parse_list("weight", r))
                .collect::<CliResult<_>>()?,
        )),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: invalid {what}: {e}", path.display())))
}

fn model_ref(s: &str) -> CliResult<ModelRef> {
    let path = Path::new(s);
    if s.ends_with(".json") || path.is_file() {
        Ok(ModelRef::Spec(read_json::<ModelSpec>(path, "model spec")?))
    } else {
        Ok(ModelRef::Name(s.to_string()))
    }
}

fn run_config(command: Command, a: RunArgs) -> CliResult<RunConfig> {
    let mut c = RunConfig::new(command);
    c.model = Some(model_ref(&a.model)?);
    c.x = Some(parse_list("x", &a.x)?);
    c.p = parse_list("p", &a.p)?;
    c.weight = parse_weight(&a.weight)?;
    c.optimizer.outcomes = a.outcomes;
    c.optimizer.restarts = a.restarts;
    c.optimizer.iters = a.iters;
    c.optimizer.objective = match a.objective {
        Some(ObjectiveArg::WeightedCrb) => ObjectiveName::WeightedCrb,
        _ => ObjectiveName::Gamma,
    };
    c.shots = a.shots;
    c.trials = a.trials;
    c.seed = a.seed;
    c.povm = a.povm;
    c.povm_out = a.povm_out;
    if let Some(path) = a.solver {
        c.solver = read_json::<SolverSpec>(&path, "solver config")?;
    }
    c.out = a.out;
    c.format = a.format.into();
    Ok(c)
}

fn to_config(cmd: Cmd) -> CliResult<RunConfig> {
    Ok(match cmd {
        Cmd::Model {
            action: ModelAction::List { out, format },
        } => {
            let mut c = RunConfig::new(Command::ModelList);
            c.out = out;
            c.format = format.into();
            c
        }
        Cmd::Qfim(a) => run_config(Command::Qfim, a)?,
        Cmd::Cfim(a) => run_config(Command::Cfim, a)?,
        Cmd::Bounds(a) => run_config(Command::Bounds, a)?,
        Cmd::Holevo(a) => run_config(Command::Holevo, a)?,
        Cmd::Nagaoka(a) => run_config(Command::Nagaoka, a)?,
        Cmd::Optimize(a) => run_config(Command::Optimize, a)?,
        Cmd::Simulate(a) => run_config(Command::Simulate, a)?,
        Cmd::Verify(a) => run_config(Command::Verify, a)?,
        Cmd::Run {
            config,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            let mut c = RunConfig::from_json(&text)?;
            if out.is_some() {
                c.out = out;
            }
            if let Some(f) = format {
                c.format = f.into();
            }
            c
        }
    })
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> CliResult<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                crate::error::EXIT_CONFIG
            } else {
                0
            };
        }
    };
    let result = to_config(cli.command).and_then(|cfg| {
        let report = execute(&cfg)?;
        emit(&cfg, &render(&report, cfg.format))?;
        Ok(report)
    });
    match result {
        Ok(Report::Verify(v)) if !v.pass => {
            let failed: Vec<&str> = v
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            eprintln!("qig: verification failed: {}", failed.join(", "));
            EXIT_COMPUTE
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("qig: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_flag_forms() {
        assert_eq!(
            parse_weight("f_q").unwrap(),
            WeightSpec::Named(WeightName::Fq)
        );
        assert_eq!(
            parse_weight("1,0.2;0.2,0.6").unwrap(),
            WeightSpec::Matrix(vec![vec![1.0, 0.2], vec![0.2, 0.6]])
        );
        assert!(parse_weight("1,a").is_err());
    }

    #[test]
    fn flags_become_a_run_config() {
        let cli = Cli::try_parse_from([
            "qig",
            "bounds",
            "--model",
            "noisy_qubit",
            "--x",
            "0.7,-0.3",
            "--p",
            "1,2",
            "--seed",
            "9",
        ])
        .unwrap();
        let c = to_config(cli.command).unwrap();
        assert_eq!(c.command, Command::Bounds);
        assert_eq!(c.x, Some(vec![0.7, -0.3]));
        assert_eq!(c.p, vec![1, 2]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.model, Some(ModelRef::Name("noisy_qubit".into())));
    }

    #[test]
    fn bad_flags_exit_with_config_code() {
        assert_eq!(run(["qig", "bounds", "--model", "noisy_qubit"]), 2);
        assert_eq!(
            run(["qig", "bounds", "--model", "noisy_qubit", "--x", "0.7,zz"]),
            2
        );
    }
}
