//! Parameter sweeps: generate graphs, design a plan on the expected graph,
//! score it on fresh RES draws, and aggregate.
//!
//! All randomness comes from one seed. Graph `g` of every cell uses the same
//! stream, and so do its evaluation draws, so cells and strategies are compared
//! on common random numbers. Output is byte-identical for identical configs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlPlan, DesignProblem};
use crate::dynamics::{ControlSequence, DiffusionModel, NodeSelection};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::gsp::{BandPlacement, BandSpec, Graph};
use crate::mse::{empirical_mse, Estimate};
use crate::random_graph::{generate_er, generate_geometric, load_edge_list, ResModel, RngStream};

/// Where the underlying graphs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    ErdosRenyi { n: usize, p_er: f64 },
    Geometric { n: usize, k_nn: usize },
    EdgeList { path: PathBuf },
    Zachary,
    Florentine,
}

impl GraphSource {
    /// True when every draw gives a different graph.
    pub fn is_random(&self) -> bool {
        matches!(self, GraphSource::ErdosRenyi { .. } | GraphSource::Geometric { .. })
    }

    /// A connected graph; random sources draw from `stream`.
    pub fn build(&self, stream: &RngStream) -> Result<Graph> {
        match self {
            GraphSource::ErdosRenyi { n, p_er } => generate_er(*n, *p_er, stream, true),
            GraphSource::Geometric { n, k_nn } => generate_geometric(*n, *k_nn, stream, true),
            GraphSource::EdgeList { path } => load_edge_list(path),
            GraphSource::Zachary => Ok(fixtures::zachary_karate_club()),
            GraphSource::Florentine => Ok(fixtures::florentine_families()),
        }
    }
}

/// Diffusion model as configured; the heat step defaults to `1/‖L‖₂` of each
/// underlying graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelChoice {
    LaplacianHeat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    AdjacencyShift,
}

impl ModelChoice {
    pub fn resolve(&self, g: &Graph) -> DiffusionModel {
        match *self {
            ModelChoice::LaplacianHeat { epsilon: Some(epsilon) } => {
                DiffusionModel::LaplacianHeat { epsilon }
            }
            ModelChoice::LaplacianHeat { epsilon: None } => DiffusionModel::heat_for(g),
            ModelChoice::AdjacencyShift => DiffusionModel::AdjacencyShift,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumShape {
    StepLowPass,
    StepHighPass,
    LinearDecay,
    ExponentialDecay,
}

/// Target coefficients for a shape, scaled to unit energy. The high-pass step
/// sits on the last `k` frequencies, the other shapes on the first `k`.
pub fn target_spectrum(shape: SpectrumShape, k: usize) -> Result<BandSpec> {
    if k == 0 {
        return Err(Error::InvalidParameter("bandwidth must be >= 1".into()));
    }
    let raw = DVector::from_fn(k, |i, _| match shape {
        SpectrumShape::StepLowPass | SpectrumShape::StepHighPass => 1.0,
        SpectrumShape::LinearDecay => 1.0 - i as f64 / k as f64,
        SpectrumShape::ExponentialDecay => (-(i as f64)).exp(),
    });
    let placement = match shape {
        SpectrumShape::StepHighPass => BandPlacement::High,
        _ => BandPlacement::Low,
    };
    let norm = raw.norm();
    BandSpec::new(placement, raw / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    UnbiasedGreedy,
    BiasedGreedy,
    /// Best selection for the biased controller over all subsets.
    Exhaustive,
    /// Best selection for the unbiased controller over all subsets.
    ExhaustiveUnbiased,
    /// Uniform selection, biased controller.
    Random,
    /// Unbiased greedy designed for `p = 1`.
    DeterministicBaseline,
    /// No input at all.
    ZeroControl,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UnbiasedGreedy => "unbiased_greedy",
            Strategy::BiasedGreedy => "biased_greedy",
            Strategy::Exhaustive => "exhaustive",
            Strategy::ExhaustiveUnbiased => "exhaustive_unbiased",
            Strategy::Random => "random",
            Strategy::DeterministicBaseline => "deterministic_baseline",
            Strategy::ZeroControl => "zero_control",
        }
    }

    fn needs_controllability(&self) -> bool {
        matches!(
            self,
            Strategy::UnbiasedGreedy | Strategy::ExhaustiveUnbiased | Strategy::DeterministicBaseline
        )
    }

    /// Designs a plan from `(G, p)` alone.
    pub fn design(
        &self,
        problem: &DesignProblem,
        budget: usize,
        stream: &RngStream,
    ) -> Result<ControlPlan> {
        match self {
            Strategy::UnbiasedGreedy => problem.greedy_unbiased(budget),
            Strategy::BiasedGreedy => problem.greedy_biased(budget),
            Strategy::Exhaustive => problem.exhaustive(budget, true),
            Strategy::ExhaustiveUnbiased => problem.exhaustive(budget, false),
            Strategy::Random => problem.random(budget, &mut stream.rng()),
            Strategy::DeterministicBaseline => problem.deterministic_baseline(budget),
            Strategy::ZeroControl => {
                let selection = NodeSelection::new(vec![0], problem.nodes())?;
                Ok(ControlPlan {
                    selection,
                    controls: ControlSequence::zeros(problem.horizon, 1),
                    predicted_mse: problem.floor(),
                    biased: false,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PRes,
    Horizon,
    Budget,
    Bandwidth,
    KNn,
    PEr,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::PRes => "p_res",
            SweepVariable::Horizon => "horizon",
            SweepVariable::Budget => "budget",
            SweepVariable::Bandwidth => "bandwidth",
            SweepVariable::KNn => "k_nn",
            SweepVariable::PEr => "p_er",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub model: ModelChoice,
    pub p_res: f64,
    pub horizon: usize,
    pub budget: usize,
    pub bandwidth: usize,
    pub spectrum: SpectrumShape,
    pub strategies: Vec<Strategy>,
    /// Underlying graphs per cell.
    pub n_graphs: usize,
    /// RES trajectories per graph when scoring a plan.
    pub n_res: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphSource::Geometric { n: 100, k_nn: 5 },
            model: ModelChoice::LaplacianHeat { epsilon: None },
            p_res: 0.95,
            horizon: 8,
            budget: 8,
            bandwidth: 10,
            spectrum: SpectrumShape::LinearDecay,
            strategies: vec![Strategy::BiasedGreedy],
            n_graphs: 20,
            n_res: 500,
            seed: 0,
            sweep: None,
        }
    }
}

fn integral(var: SweepVariable, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{} must be a positive integer, got {v}",
            var.name()
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        ResModel::new(self.p_res)?;
        for (name, v) in [
            ("horizon", self.horizon),
            ("budget", self.budget),
            ("bandwidth", self.bandwidth),
            ("n_graphs", self.n_graphs),
            ("n_res", self.n_res),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
            }
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParameter("no strategy given".into()));
        }
        let need = self.bandwidth.div_ceil(self.horizon);
        if self.budget < need && self.strategies.iter().any(Strategy::needs_controllability) {
            return Err(Error::InvalidParameter(format!(
                "budget {} is below the {need} driving nodes a {}-band needs in {} steps",
                self.budget, self.bandwidth, self.horizon
            )));
        }
        if let ModelChoice::LaplacianHeat { epsilon: Some(e) } = self.model {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("step {e} must be positive")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::InvalidParameter("empty sweep grid".into()));
            }
            for &v in &sweep.values {
                self.with(sweep.variable, v)?;
            }
        }
        Ok(())
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, var: SweepVariable, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match var {
            SweepVariable::PRes => {
                ResModel::new(value)?;
                c.p_res = value;
            }
            SweepVariable::Horizon => c.horizon = integral(var, value)?,
            SweepVariable::Budget => c.budget = integral(var, value)?,
            SweepVariable::Bandwidth => c.bandwidth = integral(var, value)?,
            SweepVariable::KNn => match &mut c.graph {
                GraphSource::Geometric { k_nn, .. } => *k_nn = integral(var, value)?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "k_nn sweeps need a geometric graph source".into(),
                    ))
                }
            },
            SweepVariable::PEr => match &mut c.graph {
                GraphSource::ErdosRenyi { p_er, .. } => {
                    if !(value > 0.0 && value <= 1.0) {
                        return Err(Error::InvalidParameter(format!("p_er {value} not in (0, 1]")));
                    }
                    *p_er = value
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "p_er sweeps need an Erdős–Rényi graph source".into(),
                    ))
                }
            },
        }
        Ok(c)
    }

    /// `(variable, value, config)` for every cell; a config without a sweep is a
    /// single `p_res` cell.
    pub fn cells(&self) -> Result<Vec<(SweepVariable, f64, ExperimentConfig)>> {
        match &self.sweep {
            None => Ok(vec![(SweepVariable::PRes, self.p_res, self.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((s.variable, v, self.with(s.variable, v)?)))
                .collect(),
        }
    }

    /// The design problem on graph `g` for this configuration.
    pub fn problem(&self, g: &Graph) -> Result<DesignProblem> {
        let band = target_spectrum(self.spectrum, self.bandwidth)?;
        DesignProblem::new(
            g,
            self.model.resolve(g),
            ResModel::new(self.p_res)?,
            band,
            self.horizon,
        )
    }
}

/// Independent streams derived from the experiment seed.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    root: RngStream,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams {
            root: RngStream::new(seed, 0),
        }
    }

    pub fn graph(&self, g: usize) -> RngStream {
        self.root.derive(1).derive(g as u64)
    }

    pub fn evaluation(&self, g: usize) -> RngStream {
        self.root.derive(2).derive(g as u64)
    }

    pub fn design(&self, g: usize) -> RngStream {
        self.root.derive(3).derive(g as u64)
    }
}

/// Empirical normalized error `‖H x_T − x*‖² / ‖x*‖²` of a plan over `draws`
/// fresh trajectories.
pub fn evaluate_plan(
    problem: &DesignProblem,
    plan: &ControlPlan,
    draws: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    let e = empirical_mse(
        &problem.model,
        &problem.graph,
        problem.p,
        &problem.filter,
        &problem.target,
        &plan.selection,
        &plan.controls,
        draws,
        &mut stream.rng(),
    )?;
    let floor = problem.floor();
    Ok(Estimate {
        mean: e.mean / floor,
        stderr: e.stderr / floor,
    })
}

/// One `(cell, strategy)` aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub sweep_var: String,
    pub value: f64,
    pub strategy: Strategy,
    /// Mean normalized error across graphs; absent when no graph was feasible.
    pub mean_mse: Option<f64>,
    pub std_graphs: Option<f64>,
    pub stderr_res: Option<f64>,
    /// Graphs that produced a plan.
    pub n_graphs: usize,
    pub n_res: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRecord {
    fn aggregate(
        var: SweepVariable,
        value: f64,
        strategy: Strategy,
        cfg: &ExperimentConfig,
        per_graph: Vec<std::result::Result<Estimate, String>>,
    ) -> Self {
        let mut ok = Vec::new();
        let mut first_err = None;
        for r in per_graph {
            match r {
                Ok(e) => ok.push(e),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        let n = ok.len();
        let (mean_mse, std_graphs, stderr_res) = if n == 0 {
            (None, None, None)
        } else {
            let means: Vec<f64> = ok.iter().map(|e| e.mean).collect();
            let agg = Estimate::from_samples(&means);
            let std = agg.stderr * (n as f64).sqrt();
            let se = ok.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / n as f64;
            (Some(agg.mean), Some(std), Some(se))
        };
        ResultRecord {
            sweep_var: var.name().to_string(),
            value,
            strategy,
            mean_mse,
            std_graphs,
            stderr_res,
            n_graphs: n,
            n_res: cfg.n_res,
            seed: cfg.seed,
            error: if n == 0 { first_err } else { None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    pub records: Vec<ResultRecord>,
}

impl ExperimentOutput {
    /// True when every cell of every strategy failed.
    pub fn infeasible_everywhere(&self) -> bool {
        self.records.iter().all(|r| r.n_graphs == 0)
    }
}

/// Runs every cell of the sweep for every strategy.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let start = Instant::now();
    let streams = Streams::new(config.seed);
    let mut records = Vec::new();
    for (var, value, cfg) in config.cells()? {
        // fixed graphs only need to be designed once per cell
        let shared = if cfg.graph.is_random() {
            None
        } else {
            Some(cfg.graph.build(&streams.graph(0)).and_then(|g| cfg.problem(&g)))
        };
        let per_graph: Vec<Vec<std::result::Result<Estimate, String>>> = (0..cfg.n_graphs)
            .into_par_iter()
            .map(|gi| {
                let owned;
                let problem = match &shared {
                    Some(Ok(p)) => p,
                    Some(Err(e)) => {
                        return cfg.strategies.iter().map(|_| Err(e.to_string())).collect()
                    }
                    None => match cfg.graph.build(&streams.graph(gi)).and_then(|g| cfg.problem(&g))
                    {
                        Ok(p) => {
                            owned = p;
                            &owned
                        }
                        Err(e) => {
                            return cfg.strategies.iter().map(|_| Err(e.to_string())).collect()
                        }
                    },
                };
                cfg.strategies
                    .iter()
                    .map(|s| {
                        let plan = s.design(problem, cfg.budget, &streams.design(gi))?;
                        evaluate_plan(problem, &plan, cfg.n_res, &streams.evaluation(gi))
                    })
                    .map(|r| r.map_err(|e| e.to_string()))
                    .collect()
            })
            .collect();
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            let column = per_graph.iter().map(|row| row[si].clone()).collect();
            records.push(ResultRecord::aggregate(var, value, strategy, &cfg, column));
        }
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sweep_var: &'a str,
    value: f64,
    strategy: &'static str,
    mean_mse: Option<f64>,
    std_graphs: Option<f64>,
    stderr_res: Option<f64>,
    n_graphs: usize,
    n_res: usize,
    seed: u64,
}

/// CSV text with one row per record.
pub fn to_csv(records: &[ResultRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            sweep_var: &r.sweep_var,
            value: r.value,
            strategy: r.strategy.name(),
            mean_mse: r.mean_mse,
            std_graphs: r.std_graphs,
            stderr_res: r.stderr_res,
            n_graphs: r.n_graphs,
            n_res: r.n_res,
            seed: r.seed,
        })
        .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn to_json(output: &ExperimentOutput) -> Result<String> {
    serde_json::to_string_pretty(output).map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes the results to `path`.
pub fn emit(output: &ExperimentOutput, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    if output.records.is_empty() {
        return Err(Error::InvalidParameter("no results to write".into()));
    }
    let text = match format {
        OutputFormat::Csv => to_csv(&output.records)?,
        OutputFormat::Json => to_json(output)?,
    };
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSource::ErdosRenyi { n: 12, p_er: 0.4 },
            horizon: 3,
            budget: 2,
            bandwidth: 3,
            n_graphs: 3,
            n_res: 50,
            seed: 17,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn spectrum_shapes() {
        let s = target_spectrum(SpectrumShape::LinearDecay, 10).unwrap();
        let scale = 1.0 / s.coefficients[0];
        for (i, c) in s.coefficients.iter().enumerate() {
            assert!((c * scale - (1.0 - i as f64 / 10.0)).abs() < 1e-12);
        }
        let s = target_spectrum(SpectrumShape::StepLowPass, 3).unwrap();
        for c in s.coefficients.iter() {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        let s = target_spectrum(SpectrumShape::ExponentialDecay, 3).unwrap();
        assert!((s.coefficients[1] / s.coefficients[0] - (-1f64).exp()).abs() < 1e-15);
        assert!((s.coefficients[2] / s.coefficients[0] - (-2f64).exp()).abs() < 1e-15);
        let s = target_spectrum(SpectrumShape::StepHighPass, 4).unwrap();
        assert_eq!(s.placement, BandPlacement::High);
        for shape in [
            SpectrumShape::StepLowPass,
            SpectrumShape::StepHighPass,
            SpectrumShape::LinearDecay,
            SpectrumShape::ExponentialDecay,
        ] {
            assert!((target_spectrum(shape, 7).unwrap().coefficients.norm() - 1.0).abs() < 1e-14);
        }
        assert!(target_spectrum(SpectrumShape::LinearDecay, 0).is_err());
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            p_res = 0.9
            strategies = ["biased_greedy", "zero_control"]
            seed = 3
            [graph]
            kind = "zachary"
            [sweep]
            variable = "bandwidth"
            values = [3, 5]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.graph, GraphSource::Zachary);
        assert_eq!(cfg.horizon, 8);
        assert_eq!(cfg.cells().unwrap().len(), 2);
        let back = ExperimentConfig::from_json_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        let bad = ExperimentConfig {
            p_res: 0.0,
            ..small()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            budget: 1,
            bandwidth: 4,
            strategies: vec![Strategy::UnbiasedGreedy],
            ..small()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            sweep: Some(Sweep {
                variable: SweepVariable::KNn,
                values: vec![3.0],
            }),
            ..small()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            sweep: Some(Sweep {
                variable: SweepVariable::Horizon,
                values: vec![2.5],
            }),
            ..small()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_control_is_exactly_one() {
        let cfg = ExperimentConfig {
            strategies: vec![Strategy::ZeroControl],
            ..small()
        };
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].mean_mse, Some(1.0));
        assert_eq!(out.records[0].std_graphs, Some(0.0));
    }

    #[test]
    fn p_one_unbiased_is_exact() {
        let cfg = ExperimentConfig {
            p_res: 1.0,
            strategies: vec![Strategy::UnbiasedGreedy],
            ..small()
        };
        let out = run(&cfg).unwrap();
        assert!(out.records[0].mean_mse.unwrap() <= 1e-10);
        assert_eq!(out.records[0].n_graphs, 3);
    }

    #[test]
    fn csv_layout_and_reproducibility() {
        let cfg = ExperimentConfig {
            strategies: vec![Strategy::BiasedGreedy, Strategy::Random],
            sweep: Some(Sweep {
                variable: SweepVariable::PRes,
                values: vec![0.5, 0.8, 1.0],
            }),
            ..small()
        };
        let a = to_csv(&run(&cfg).unwrap().records).unwrap();
        let b = to_csv(&run(&cfg).unwrap().records).unwrap();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(
            lines[0],
            "sweep_var,value,strategy,mean_mse,std_graphs,stderr_res,n_graphs,n_res,seed"
        );
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("p_res,0.5,biased_greedy,"));
    }

    #[test]
    fn infeasible_cells_are_recorded() {
        let cfg = ExperimentConfig {
            strategies: vec![Strategy::BiasedGreedy],
            sweep: Some(Sweep {
                variable: SweepVariable::Budget,
                values: vec![2.0, 40.0],
            }),
            ..small()
        };
        let out = run(&cfg).unwrap();
        assert!(out.records[0].mean_mse.is_some());
        assert_eq!(out.records[1].n_graphs, 0);
        assert!(out.records[1].mean_mse.is_none());
        assert!(out.records[1].error.is_some());
        assert!(!out.infeasible_everywhere());
        let csv = to_csv(&out.records).unwrap();
        assert!(csv.lines().nth(2).unwrap().starts_with("budget,40.0,biased_greedy,,,,0,"));
    }

    #[test]
    fn json_round_trip() {
        let out = run(&ExperimentConfig {
            strategies: vec![Strategy::BiasedGreedy],
            ..small()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        emit(&out, OutputFormat::Json, &path).unwrap();
        let back: ExperimentOutput =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, out);
        let missing = dir.path().join("nope").join("out.csv");
        assert!(matches!(emit(&out, OutputFormat::Csv, &missing), Err(Error::Io { .. })));
    }
}
