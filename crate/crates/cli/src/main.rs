//! `netctl`: design and evaluate controllers for diffusions on graphs with
//! randomly failing edges.

mod args;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use netctl::experiment::{evaluate_plan, to_csv, to_json, Streams};
use netctl::{
    build_shift, eigendecompose, run, synthesize_bandlimited, target_spectrum, write_edge_list,
    BandPlacement, ControlPlan, DesignProblem, ExperimentConfig, Graph, OutputFormat, Strategy,
};
use serde::{Deserialize, Serialize};

use args::{serde_enum, ConfigArgs};

#[derive(Debug, Parser)]
#[command(name = "netctl", version, about = "Mean controllability of diffusions on random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw graphs from the configured source and write them as edge lists.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of graphs; defaults to `n-graphs` for random sources.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Print the target spectrum and its node-domain signal.
    Spectrum {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        graph_index: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Choose driving nodes only.
    Select {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        graph_index: usize,
        /// Defaults to the first configured strategy.
        #[arg(long, value_parser = serde_enum::<Strategy>)]
        strategy: Option<Strategy>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Design a full plan (nodes and inputs) and write it as JSON.
    Control {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        graph_index: usize,
        #[arg(long, value_parser = serde_enum::<Strategy>)]
        strategy: Option<Strategy>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Monte Carlo error of a plan written by `control`.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
        /// Draws; defaults to the plan's `n-res`.
        #[arg(long)]
        n_res: Option<usize>,
        /// Seed of the evaluation draws; defaults to the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the full experiment over every sweep cell.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// csv or json; defaults to the extension of `--out`, then csv.
        #[arg(long, value_parser = serde_enum::<OutputFormat>)]
        format: Option<OutputFormat>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// Everything `evaluate` needs to replay a designed plan.
#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    config: ExperimentConfig,
    graph_index: usize,
    strategy: Strategy,
    graph: Graph,
    plan: ControlPlan,
}

/// Failure classes that map to distinct exit codes.
enum Outcome {
    Done,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Generate {
            config,
            count,
            out_dir,
        } => generate(&config.resolve()?, count, &out_dir),
        Command::Spectrum {
            config,
            graph_index,
            out,
        } => spectrum(&config.resolve()?, graph_index, out.as_deref()),
        Command::Select {
            config,
            graph_index,
            strategy,
            out,
        } => {
            let file = design(&config.resolve()?, graph_index, strategy)?;
            let report = serde_json::json!({
                "strategy": file.strategy,
                "graph_index": graph_index,
                "selection": file.plan.selection.indices(),
            });
            write_out(&serde_json::to_string_pretty(&report)?, out.as_deref())
        }
        Command::Control {
            config,
            graph_index,
            strategy,
            out,
        } => {
            let file = design(&config.resolve()?, graph_index, strategy)?;
            write_out(&serde_json::to_string_pretty(&file)?, out.as_deref())
        }
        Command::Evaluate {
            plan,
            n_res,
            seed,
            out,
        } => evaluate(&plan, n_res, seed, out.as_deref()),
        Command::Sweep {
            config,
            format,
            out,
        } => {
            if config.seed.is_none() {
                bail!("sweep needs an explicit --seed");
            }
            sweep(&config.resolve()?, format, out.as_deref())
        }
    }
}

fn graph_at(config: &ExperimentConfig, index: usize) -> Result<Graph> {
    let stream = Streams::new(config.seed).graph(if config.graph.is_random() { index } else { 0 });
    Ok(config.graph.build(&stream)?)
}

fn generate(config: &ExperimentConfig, count: Option<usize>, dir: &Path) -> Result<Outcome> {
    let count = count.unwrap_or(if config.graph.is_random() {
        config.n_graphs
    } else {
        1
    });
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for i in 0..count {
        let path = dir.join(format!("graph-{i:03}.txt"));
        write_edge_list(&graph_at(config, i)?, &path)?;
        println!("{}", path.display());
    }
    Ok(Outcome::Done)
}

fn spectrum(config: &ExperimentConfig, index: usize, out: Option<&Path>) -> Result<Outcome> {
    let g = graph_at(config, index)?;
    let band = target_spectrum(config.spectrum, config.bandwidth)?;
    let model = config.model.resolve(&g);
    let basis = eigendecompose(&build_shift(&g, model.shift_kind()))?;
    let signal = synthesize_bandlimited(&basis, &band)?;
    let report = serde_json::json!({
        "spectrum": config.spectrum,
        "bandwidth": band.k(),
        "placement": match band.band().placement {
            BandPlacement::Low => "low",
            BandPlacement::High => "high",
        },
        "coefficients": band.coefficients.as_slice(),
        "target": signal.values().as_slice(),
    });
    write_out(&serde_json::to_string_pretty(&report)?, out)
}

fn design(config: &ExperimentConfig, index: usize, strategy: Option<Strategy>) -> Result<PlanFile> {
    let strategy = strategy.unwrap_or(config.strategies[0]);
    let graph = graph_at(config, index)?;
    let problem: DesignProblem = config.problem(&graph)?;
    let plan = strategy
        .design(&problem, config.budget, &Streams::new(config.seed).design(index))
        .with_context(|| format!("designing with {}", strategy.name()))?;
    Ok(PlanFile {
        config: config.clone(),
        graph_index: index,
        strategy,
        graph,
        plan,
    })
}

fn evaluate(path: &Path, n_res: Option<usize>, seed: Option<u64>, out: Option<&Path>) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: PlanFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let draws = n_res.unwrap_or(file.config.n_res);
    if draws == 0 {
        bail!("--n-res must be >= 1");
    }
    let problem = file.config.problem(&file.graph)?;
    let stream = Streams::new(seed.unwrap_or(file.config.seed)).evaluation(file.graph_index);
    let est = evaluate_plan(&problem, &file.plan, draws, &stream)?;
    let report = serde_json::json!({
        "strategy": file.strategy,
        "predicted_mse": file.plan.predicted_mse / problem.floor(),
        "mean_mse": est.mean,
        "stderr_res": est.stderr,
        "n_res": draws,
    });
    write_out(&serde_json::to_string_pretty(&report)?, out)
}

fn sweep(config: &ExperimentConfig, format: Option<OutputFormat>, out: Option<&Path>) -> Result<Outcome> {
    let format = format.unwrap_or_else(|| match out.and_then(Path::extension) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    });
    let output = run(config)?;
    let text = match format {
        OutputFormat::Csv => to_csv(&output.records)?,
        OutputFormat::Json => to_json(&output)?,
    };
    write_out(&text, out)?;
    for r in output.records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: {} at {} = {}: {}",
            r.strategy.name(),
            r.sweep_var,
            r.value,
            r.error.as_deref().unwrap_or_default()
        );
    }
    if output.infeasible_everywhere() {
        eprintln!("error: no strategy was feasible in any cell");
        return Ok(Outcome::Infeasible);
    }
    Ok(Outcome::Done)
}

fn write_out(text: &str, out: Option<&Path>) -> Result<Outcome> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(e).context("writing to stdout")
                }
                _ => {}
            }
        }
    }
    Ok(Outcome::Done)
}
