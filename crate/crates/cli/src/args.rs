use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use netctl::{
    ExperimentConfig, GraphSource, ModelChoice, SpectrumShape, Strategy, Sweep, SweepVariable,
};
use serde::de::DeserializeOwned;

/// Parses a kebab- or snake-case name into one of the library's serde enums.
pub fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown value `{s}`"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    ErdosRenyi,
    Geometric,
    EdgeList,
    Zachary,
    Florentine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    LaplacianHeat,
    AdjacencyShift,
}

/// Experiment settings. Flags override the values read from `--config`, which
/// in turn override the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML or JSON experiment file (`.json` is read as JSON).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub graph: Option<GraphKind>,
    /// Node count of generated graphs.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p_er: Option<f64>,
    #[arg(long)]
    pub k_nn: Option<usize>,
    /// Edge-list file, implies `--graph edge-list`.
    #[arg(long, value_name = "PATH")]
    pub edge_list: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Heat step; defaults to 1/‖L‖₂ of each graph.
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long)]
    pub p_res: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// step-low-pass, step-high-pass, linear-decay or exponential-decay.
    #[arg(long, value_parser = serde_enum::<SpectrumShape>)]
    pub spectrum: Option<SpectrumShape>,
    /// Comma-separated strategies, e.g. `biased-greedy,random`.
    #[arg(long = "strategies", value_delimiter = ',', value_parser = serde_enum::<Strategy>)]
    pub strategies: Vec<Strategy>,
    #[arg(long)]
    pub n_graphs: Option<usize>,
    #[arg(long)]
    pub n_res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// p-res, horizon, budget, bandwidth, k-nn or p-er.
    #[arg(long, value_parser = serde_enum::<SweepVariable>, requires = "sweep_values")]
    pub sweep_variable: Option<SweepVariable>,
    /// Comma-separated grid for `--sweep-variable`.
    #[arg(long, value_delimiter = ',', requires = "sweep_variable")]
    pub sweep_values: Vec<f64>,
}

impl ConfigArgs {
    /// The merged, validated configuration.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        c.graph = self.graph_source(c.graph)?;
        match (self.model, self.epsilon) {
            (Some(ModelKind::AdjacencyShift), Some(_)) => {
                bail!("--epsilon only applies to the laplacian-heat model")
            }
            (Some(ModelKind::AdjacencyShift), None) => c.model = ModelChoice::AdjacencyShift,
            (Some(ModelKind::LaplacianHeat), eps) => {
                c.model = ModelChoice::LaplacianHeat { epsilon: eps }
            }
            (None, Some(eps)) => match c.model {
                ModelChoice::LaplacianHeat { .. } => {
                    c.model = ModelChoice::LaplacianHeat { epsilon: Some(eps) }
                }
                ModelChoice::AdjacencyShift => {
                    bail!("--epsilon only applies to the laplacian-heat model")
                }
            },
            (None, None) => {}
        }
        set(&mut c.p_res, self.p_res);
        set(&mut c.horizon, self.horizon);
        set(&mut c.budget, self.budget);
        set(&mut c.bandwidth, self.bandwidth);
        set(&mut c.spectrum, self.spectrum);
        set(&mut c.n_graphs, self.n_graphs);
        set(&mut c.n_res, self.n_res);
        set(&mut c.seed, self.seed);
        if !self.strategies.is_empty() {
            c.strategies = self.strategies.clone();
        }
        if let Some(variable) = self.sweep_variable {
            c.sweep = Some(Sweep {
                variable,
                values: self.sweep_values.clone(),
            });
        }
        c.validate()?;
        Ok(c)
    }

    fn graph_source(&self, current: GraphSource) -> Result<GraphSource> {
        let kind = match (self.graph, &self.edge_list) {
            (Some(k), _) => Some(k),
            (None, Some(_)) => Some(GraphKind::EdgeList),
            (None, None) => None,
        };
        let (cur_n, cur_p, cur_k) = match current {
            GraphSource::ErdosRenyi { n, p_er } => (Some(n), Some(p_er), None),
            GraphSource::Geometric { n, k_nn } => (Some(n), None, Some(k_nn)),
            _ => (None, None, None),
        };
        let n = self.n.or(cur_n).unwrap_or(100);
        let source = match kind {
            None => {
                let mut s = current;
                match &mut s {
                    GraphSource::ErdosRenyi { n: sn, p_er } => {
                        *sn = n;
                        set(p_er, self.p_er);
                    }
                    GraphSource::Geometric { n: sn, k_nn } => {
                        *sn = n;
                        set(k_nn, self.k_nn);
                    }
                    _ => {}
                }
                s
            }
            Some(GraphKind::ErdosRenyi) => GraphSource::ErdosRenyi {
                n,
                p_er: self.p_er.or(cur_p).unwrap_or(0.5),
            },
            Some(GraphKind::Geometric) => GraphSource::Geometric {
                n,
                k_nn: self.k_nn.or(cur_k).unwrap_or(5),
            },
            Some(GraphKind::EdgeList) => match (&self.edge_list, current) {
                (Some(path), _) => GraphSource::EdgeList { path: path.clone() },
                (None, GraphSource::EdgeList { path }) => GraphSource::EdgeList { path },
                (None, _) => bail!("--graph edge-list needs --edge-list PATH"),
            },
            Some(GraphKind::Zachary) => GraphSource::Zachary,
            Some(GraphKind::Florentine) => GraphSource::Florentine,
        };
        let misplaced = match &source {
            GraphSource::ErdosRenyi { .. } => self.k_nn.map(|_| "--k-nn"),
            GraphSource::Geometric { .. } => self.p_er.map(|_| "--p-er"),
            _ => [
                self.n.map(|_| "--n"),
                self.p_er.map(|_| "--p-er"),
                self.k_nn.map(|_| "--k-nn"),
            ]
            .into_iter()
            .flatten()
            .next(),
        };
        if let Some(flag) = misplaced {
            bail!("{flag} does not apply to this graph source");
        }
        Ok(source)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_names_accept_either_case() {
        assert_eq!(serde_enum::<Strategy>("biased-greedy"), Ok(Strategy::BiasedGreedy));
        assert_eq!(serde_enum::<Strategy>("zero_control"), Ok(Strategy::ZeroControl));
        assert!(serde_enum::<Strategy>("fastest").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = ConfigArgs {
            graph: Some(GraphKind::ErdosRenyi),
            n: Some(30),
            p_res: Some(0.8),
            seed: Some(9),
            ..ConfigArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.graph, GraphSource::ErdosRenyi { n: 30, p_er: 0.5 });
        assert_eq!((c.p_res, c.seed, c.horizon), (0.8, 9, 8));
    }

    #[test]
    fn misplaced_generator_flags_are_rejected() {
        let args = ConfigArgs {
            graph: Some(GraphKind::Zachary),
            k_nn: Some(3),
            ..ConfigArgs::default()
        };
        assert!(args.resolve().is_err());
        let args = ConfigArgs {
            model: Some(ModelKind::AdjacencyShift),
            epsilon: Some(0.1),
            ..ConfigArgs::default()
        };
        assert!(args.resolve().is_err());
    }
}
