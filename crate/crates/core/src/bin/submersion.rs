use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use submersion_core::catalog;
use submersion_core::chen::{chen_lemma_gap, LemmaInstance, TheoremId};
use submersion_core::config::{load_config, RunConfig};
use submersion_core::report::{render, to_json_string, ReportFormat, Verdict};
use submersion_core::run::{run_verify, RunOptions};
use submersion_core::tolerances::Tolerances;

#[derive(Parser)]
#[command(name = "submersion", version, about = "Curvature inequalities for Riemannian submersions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configured theorems at the configured points.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Built-in examples.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Solve b from the lemma constraint and report 2a₁a₂ − b.
    Lemma {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Run {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the JSON source of an entry.
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Only this point (0-based index into `points`).
    #[arg(long)]
    point: Option<usize>,
    /// Theorem id; repeat to check several. Overrides the config list.
    #[arg(long = "theorem")]
    theorems: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
}

fn verify(cfg: RunConfig, args: RunArgs) -> anyhow::Result<ExitCode> {
    let theorems = if args.theorems.is_empty() {
        None
    } else {
        Some(
            args.theorems
                .iter()
                .map(|t| t.parse::<TheoremId>())
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let opts = RunOptions {
        point: args.point,
        theorems,
    };
    let report = run_verify(&cfg, &opts)?;
    let spec = cfg.file.output.clone();
    let format = args
        .format
        .or_else(|| spec.as_ref().map(|o| o.format))
        .unwrap_or_default();
    let out = args.out.or_else(|| spec.and_then(|o| o.path).map(PathBuf::from));
    let text = render(&report, format)?;
    match out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    for e in &report.entries {
        if let Some(err) = &e.error {
            eprintln!("point {} {}: {err}", e.point_index, e.theorem);
        }
    }
    Ok(match report.verdict() {
        Verdict::AllHold => ExitCode::SUCCESS,
        Verdict::Violated => ExitCode::from(2),
        Verdict::Errors => ExitCode::from(1),
    })
}

fn lemma(k: usize, a: Vec<f64>) -> anyhow::Result<ExitCode> {
    if a.len() != k {
        anyhow::bail!("--a has {} values but --k is {k}", a.len());
    }
    let inst = LemmaInstance::solved(a)?;
    let res = chen_lemma_gap(&inst, Tolerances::default().lemma_tol)?;
    let out = serde_json::json!({ "k": k, "a": inst.a, "b": inst.b, "result": res });
    println!("{}", to_json_string(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { config, run } => load_config(&config)
            .with_context(|| format!("loading {}", config.display()))
            .and_then(|cfg| verify(cfg, run)),
        Command::Catalog { action } => match action {
            CatalogAction::List => {
                for name in catalog::names() {
                    println!("{name}");
                }
                Ok(ExitCode::SUCCESS)
            }
            CatalogAction::Show { name } => catalog::source(&name)
                .map(|s| {
                    print!("{s}");
                    ExitCode::SUCCESS
                })
                .map_err(Into::into),
            CatalogAction::Run { name, run } => catalog::load(&name)
                .map_err(anyhow::Error::from)
                .and_then(|cfg| verify(cfg, run)),
        },
        Command::Lemma { k, a } => lemma(k, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
