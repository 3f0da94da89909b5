//! Controllability of the in-band mean system, the two controllers and
//! driving-node selection.
//!
//! The *unbiased* controller drives `E[V_Kᵀ x_T]` exactly onto the target with
//! minimum input energy. The *biased* controller minimizes the full expected
//! error and trades some bias for lower variance.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSequence, DiffusionModel, NodeSelection};
use crate::error::{Error, Result};
use crate::gsp::{
    bandlimiting_filter, build_shift, eigendecompose, synthesize_bandlimited, BandSpec, Graph,
    GraphSignal, SpectralBasis,
};
use crate::linalg::{
    lstsq_with_rank, numerical_rank, psd_factor, symmetric_condition,
};
use crate::mse::{stack, MseCoefficients, RestrictedSystem, StackedSystem};
use crate::random_graph::ResModel;

/// Largest number of selections [`exhaustive_select`] evaluates.
pub const EXHAUSTIVE_LIMIT: f64 = 1e6;

const TIE_TOL: f64 = 1e-10;

/// Condition number above which [`BiasedSolve::StrictInverse`] refuses to solve.
pub const MAX_CONDITION: f64 = 1e12;

/// The mean system seen through the band: `x̃_{t+1} = Ǎ_K x̃_t + V_Kᵀ Cᵀ u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct InbandSystem {
    /// In-band eigenvalues of `Ā`.
    pub a_k: DVector<f64>,
    /// `N × K` eigenvector block.
    pub v_k: DMatrix<f64>,
    /// Target coefficients `x̃*_K`.
    pub target: DVector<f64>,
}

impl InbandSystem {
    /// `mean_spectrum` holds the eigenvalues of `Ā` in the order of `basis`.
    pub fn new(basis: &SpectralBasis, mean_spectrum: &DVector<f64>, band: &BandSpec) -> Result<Self> {
        if mean_spectrum.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: mean_spectrum.len(),
            });
        }
        let idx = band.band().indices(basis.dim())?;
        Ok(InbandSystem {
            a_k: DVector::from_iterator(idx.len(), idx.iter().map(|&i| mean_spectrum[i])),
            v_k: basis.band_block(band.band())?,
            target: band.coefficients.clone(),
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.a_k.len()
    }

    pub fn nodes(&self) -> usize {
        self.v_k.nrows()
    }
}

/// `Ω̃ = [V_KᵀCᵀ, Ǎ_K V_KᵀCᵀ, …, Ǎ_K^{T−1} V_KᵀCᵀ]`, matching the stacked input
/// `[u_{T−1}; …; u_0]`.
pub fn inband_controllability_matrix(
    sys: &InbandSystem,
    sel: &NodeSelection,
    horizon: usize,
) -> DMatrix<f64> {
    let k = sys.bandwidth();
    let m = sel.len();
    let mut omega = DMatrix::zeros(k, horizon * m);
    let mut scale = DVector::from_element(k, 1.0);
    for b in 0..horizon {
        for (c, &i) in sel.indices().iter().enumerate() {
            for r in 0..k {
                omega[(r, b * m + c)] = scale[r] * sys.v_k[(i, r)];
            }
        }
        scale.component_mul_assign(&sys.a_k);
    }
    omega
}

/// Fewest driving nodes that can control a `K`-band in `T` steps: `⌈K/T⌉`.
pub fn necessary_nodes(bandwidth: usize, horizon: usize) -> usize {
    bandwidth.div_ceil(horizon.max(1))
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().min()
}

/// `M ≥ K` nodes whose rows of `V_K` have rank `K`, grown greedily by the
/// smallest singular value of the selected row block.
pub fn sufficient_selection(v_k: &DMatrix<f64>, budget: usize) -> Result<NodeSelection> {
    let (n, k) = v_k.shape();
    if budget < k || budget > n {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} must lie between the bandwidth {k} and the node count {n}"
        )));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for c in (0..n).filter(|c| !chosen.contains(c)) {
            let mut rows = chosen.clone();
            rows.push(c);
            let s = smallest_singular_value(&v_k.select_rows(&rows));
            // rounding-level differences count as ties
            if best.is_none_or(|(b, _)| s > b + TIE_TOL * b.abs()) {
                best = Some((s, c));
            }
        }
        chosen.push(best.expect("budget <= n").1);
    }
    if numerical_rank(&v_k.select_rows(&chosen)) < k {
        return Err(Error::Uncontrollable(format!(
            "no {budget} rows of the band span all {k} frequencies"
        )));
    }
    NodeSelection::new(chosen, n)
}

/// Minimum-norm solution of `Ω̃ u = x̃*_K`, or the least-squares solution when
/// `Ω̃` has full column rank instead.
pub fn min_energy_control(omega: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let (u, rank) = lstsq_with_rank(omega, target)?;
    if rank < omega.nrows() && rank < omega.ncols() {
        return Err(Error::Uncontrollable(format!(
            "controllability matrix has rank {rank}, below both {} and {}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    Ok(u)
}

/// How [`biased_control`] solves `Γ_C u = β_C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasedSolve {
    /// Minimum-norm global minimizer; also defined when `Γ_C` is singular.
    #[default]
    Pseudoinverse,
    /// Plain inverse; fails when `cond(Γ_C) > 1e12`.
    StrictInverse,
}

/// Stacked input minimizing the expected error under the given selection.
pub fn biased_control(
    stacked: &StackedSystem,
    sel: &NodeSelection,
    solve: BiasedSolve,
) -> Result<DVector<f64>> {
    let r = stacked.restrict(sel)?;
    match solve {
        BiasedSolve::Pseudoinverse => Ok(biased_min_norm(&r)?.0),
        BiasedSolve::StrictInverse => {
            let cond = symmetric_condition(&r.gamma_c);
            if cond.is_nan() || cond > MAX_CONDITION {
                return Err(Error::IllConditioned(format!(
                    "condition number {cond:e} of the restricted quadratic form"
                )));
            }
            r.gamma_c
                .clone()
                .lu()
                .solve(&r.beta_c)
                .ok_or_else(|| Error::IllConditioned("singular quadratic form".into()))
        }
    }
}

/// Minimizes `‖G_C u − x*‖² + uᵀ Γ_var,C u` as one least-squares problem, so the
/// conditioning of `Γ_C = G_CᵀG_C + Γ_var,C` is never squared. Returns `u` and
/// the rank of the stacked system, which equals `rank(Γ_C)`.
fn biased_min_norm(r: &RestrictedSystem) -> Result<(DVector<f64>, usize)> {
    let f = &r.gain_c;
    let v = psd_factor(&r.gamma_var_c);
    let (n, cols) = f.shape();
    let mut a = DMatrix::zeros(n + v.nrows(), cols);
    a.rows_mut(0, n).copy_from(f);
    a.rows_mut(n, v.nrows()).copy_from(&v);
    let mut b = DVector::zeros(n + v.nrows());
    b.rows_mut(0, n).copy_from(&r.target);
    lstsq_with_rank(&a, &b)
}

/// Outcome of a design: where to inject, what to inject and the predicted error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub selection: NodeSelection,
    pub controls: ControlSequence,
    /// Expected `‖H x_T − x*‖²` under the design's RES model.
    pub predicted_mse: f64,
    pub biased: bool,
}

/// Acceptance rule for candidates of the biased greedy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasedGate {
    /// Every candidate is admissible; the minimizer always exists.
    #[default]
    Consistent,
    /// Require `rank(Γ_C) ≥ mT`.
    FullRank,
}

/// A per-selection controller and its predicted error.
pub trait SelectionObjective {
    fn nodes(&self) -> usize;
    fn horizon(&self) -> usize;
    fn biased(&self) -> bool;
    /// `None` when the selection is not admissible; otherwise the stacked input
    /// and its predicted error.
    fn evaluate(&self, sel: &NodeSelection) -> Result<Option<(DVector<f64>, f64)>>;
}

/// Minimum-energy unbiased controller; admissible while
/// `rank(Ω̃) = min{K, T·min{K, m}}`.
pub struct UnbiasedObjective<'a> {
    pub system: &'a InbandSystem,
    pub stacked: &'a StackedSystem,
}

impl SelectionObjective for UnbiasedObjective<'_> {
    fn nodes(&self) -> usize {
        self.stacked.nodes
    }

    fn horizon(&self) -> usize {
        self.stacked.horizon
    }

    fn biased(&self) -> bool {
        false
    }

    fn evaluate(&self, sel: &NodeSelection) -> Result<Option<(DVector<f64>, f64)>> {
        let t = self.horizon();
        let k = self.system.bandwidth();
        let omega = inband_controllability_matrix(self.system, sel, t);
        let (u, rank) = lstsq_with_rank(&omega, &self.system.target)?;
        if rank != k.min(t * k.min(sel.len())) {
            return Ok(None);
        }
        let mse = self.stacked.restrict(sel)?.mse(&u);
        Ok(Some((u, mse)))
    }
}

/// MSE-optimal controller.
pub struct BiasedObjective<'a> {
    pub stacked: &'a StackedSystem,
    pub gate: BiasedGate,
}

impl SelectionObjective for BiasedObjective<'_> {
    fn nodes(&self) -> usize {
        self.stacked.nodes
    }

    fn horizon(&self) -> usize {
        self.stacked.horizon
    }

    fn biased(&self) -> bool {
        true
    }

    fn evaluate(&self, sel: &NodeSelection) -> Result<Option<(DVector<f64>, f64)>> {
        let r = self.stacked.restrict(sel)?;
        let (u, rank) = biased_min_norm(&r)?;
        if self.gate == BiasedGate::FullRank && rank < sel.len() * self.horizon() {
            return Ok(None);
        }
        let mse = r.mse(&u);
        Ok(Some((u, mse)))
    }
}

fn plan_from(
    obj: &dyn SelectionObjective,
    sel: NodeSelection,
    u: &DVector<f64>,
    mse: f64,
) -> Result<ControlPlan> {
    let controls = ControlSequence::from_stacked(u, obj.horizon(), sel.len())?;
    Ok(ControlPlan {
        selection: sel,
        controls,
        predicted_mse: mse,
        biased: obj.biased(),
    })
}

fn check_budget(budget: usize, n: usize) -> Result<()> {
    if budget == 0 || budget > n {
        return Err(Error::InvalidParameter(format!(
            "budget {budget} not in 1..={n}"
        )));
    }
    Ok(())
}

/// Adds one node per round, keeping the admissible candidate of lowest
/// predicted error (lowest index on ties).
pub fn greedy_select(obj: &dyn SelectionObjective, budget: usize) -> Result<ControlPlan> {
    let n = obj.nodes();
    check_budget(budget, n)?;
    let mut chosen: Vec<usize> = Vec::with_capacity(budget);
    let mut last = None;
    for round in 1..=budget {
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for c in (0..n).filter(|c| !chosen.contains(c)) {
            let mut trial = chosen.clone();
            trial.push(c);
            let sel = NodeSelection::new(trial, n)?;
            if let Some((u, mse)) = obj.evaluate(&sel)? {
                if best.as_ref().is_none_or(|(b, _, _)| mse < *b) {
                    best = Some((mse, c, u));
                }
            }
        }
        let (mse, c, u) = best.ok_or(Error::NoFeasibleCandidate { round })?;
        chosen.push(c);
        last = Some((mse, u));
    }
    let (mse, u) = last.expect("budget >= 1");
    plan_from(obj, NodeSelection::new(chosen, n)?, &u, mse)
}

/// Unbiased greedy; needs `budget ≥ ⌈K/T⌉`.
pub fn greedy_select_unbiased(
    budget: usize,
    system: &InbandSystem,
    stacked: &StackedSystem,
) -> Result<ControlPlan> {
    let need = necessary_nodes(system.bandwidth(), stacked.horizon);
    if budget < need {
        return Err(Error::Uncontrollable(format!(
            "{budget} driving nodes cannot steer {} frequencies in {} steps; need {need}",
            system.bandwidth(),
            stacked.horizon
        )));
    }
    greedy_select(&UnbiasedObjective { system, stacked }, budget)
}

pub fn greedy_select_biased(
    budget: usize,
    stacked: &StackedSystem,
    gate: BiasedGate,
) -> Result<ControlPlan> {
    greedy_select(&BiasedObjective { stacked, gate }, budget)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Best admissible selection of size `budget` over all `C(N, budget)` subsets,
/// each paired with the objective's own controller.
pub fn exhaustive_select(obj: &dyn SelectionObjective, budget: usize) -> Result<ControlPlan> {
    let n = obj.nodes();
    check_budget(budget, n)?;
    let count = binomial(n, budget);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(format!("{count:e} selections of {budget} out of {n}")));
    }
    let mut combo: Vec<usize> = (0..budget).collect();
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    loop {
        let sel = NodeSelection::new(combo.clone(), n)?;
        if let Some((u, mse)) = obj.evaluate(&sel)? {
            if best.as_ref().is_none_or(|(b, _, _)| mse < *b) {
                best = Some((mse, combo.clone(), u));
            }
        }
        // next combination in lexicographic order
        let Some(i) = (0..budget).rev().find(|&i| combo[i] != i + n - budget) else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..budget {
            combo[j] = combo[j - 1] + 1;
        }
    }
    let (mse, combo, u) = best.ok_or(Error::NoFeasibleCandidate { round: budget })?;
    plan_from(obj, NodeSelection::new(combo, n)?, &u, mse)
}

/// `budget` distinct nodes drawn uniformly, in ascending order.
pub fn random_select<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Result<NodeSelection> {
    check_budget(budget, n)?;
    let mut idx = index::sample(rng, n, budget).into_vec();
    idx.sort_unstable();
    NodeSelection::new(idx, n)
}

/// Everything a design needs for one `(G, model, p, target band, T)`.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub graph: Graph,
    pub model: DiffusionModel,
    pub p: ResModel,
    pub band: BandSpec,
    pub horizon: usize,
    pub basis: SpectralBasis,
    pub system: InbandSystem,
    pub filter: DMatrix<f64>,
    pub target: GraphSignal,
    pub coefficients: MseCoefficients,
    pub stacked: StackedSystem,
}

impl DesignProblem {
    pub fn new(
        graph: &Graph,
        model: DiffusionModel,
        p: ResModel,
        band: BandSpec,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        model.validate_for(graph)?;
        let basis = eigendecompose(&build_shift(graph, model.shift_kind()))?;
        let spectrum = model.mean_spectrum(basis.eigenvalues(), p.p());
        let system = InbandSystem::new(&basis, &spectrum, &band)?;
        let filter = bandlimiting_filter(&basis, band.band())?;
        let target = synthesize_bandlimited(&basis, &band)?;
        let coefficients = MseCoefficients::compute(&model, graph, p, &filter, &target, horizon)?;
        let stacked = stack(&coefficients);
        Ok(DesignProblem {
            graph: graph.clone(),
            model,
            p,
            band,
            horizon,
            basis,
            system,
            filter,
            target,
            coefficients,
            stacked,
        })
    }

    pub fn nodes(&self) -> usize {
        self.graph.node_count()
    }

    pub fn greedy_unbiased(&self, budget: usize) -> Result<ControlPlan> {
        greedy_select_unbiased(budget, &self.system, &self.stacked)
    }

    pub fn greedy_biased(&self, budget: usize) -> Result<ControlPlan> {
        greedy_select_biased(budget, &self.stacked, BiasedGate::default())
    }

    pub fn exhaustive(&self, budget: usize, biased: bool) -> Result<ControlPlan> {
        if biased {
            exhaustive_select(
                &BiasedObjective {
                    stacked: &self.stacked,
                    gate: BiasedGate::default(),
                },
                budget,
            )
        } else {
            exhaustive_select(
                &UnbiasedObjective {
                    system: &self.system,
                    stacked: &self.stacked,
                },
                budget,
            )
        }
    }

    /// Biased controller on the given selection.
    pub fn biased_plan(&self, sel: NodeSelection) -> Result<ControlPlan> {
        let obj = BiasedObjective {
            stacked: &self.stacked,
            gate: BiasedGate::default(),
        };
        let (u, mse) = obj.evaluate(&sel)?.expect("consistent gate admits all");
        plan_from(&obj, sel, &u, mse)
    }

    /// Unbiased controller on the given selection.
    pub fn unbiased_plan(&self, sel: NodeSelection) -> Result<ControlPlan> {
        let omega = inband_controllability_matrix(&self.system, &sel, self.horizon);
        let u = min_energy_control(&omega, &self.system.target)?;
        let mse = self.stacked.restrict(&sel)?.mse(&u);
        let obj = UnbiasedObjective {
            system: &self.system,
            stacked: &self.stacked,
        };
        plan_from(&obj, sel, &u, mse)
    }

    /// Biased controller on a uniformly random selection.
    pub fn random<R: Rng + ?Sized>(&self, budget: usize, rng: &mut R) -> Result<ControlPlan> {
        let sel = random_select(self.nodes(), budget, rng)?;
        self.biased_plan(sel)
    }

    /// Unbiased greedy designed as if no edge ever failed, with its error
    /// predicted under this problem's `p`.
    pub fn deterministic_baseline(&self, budget: usize) -> Result<ControlPlan> {
        let ideal = DesignProblem::new(
            &self.graph,
            self.model,
            ResModel::new(1.0)?,
            self.band.clone(),
            self.horizon,
        )?;
        let mut plan = ideal.greedy_unbiased(budget)?;
        plan.predicted_mse = self.predict(&plan)?;
        Ok(plan)
    }

    /// Expected error of a plan under this problem's `p`.
    pub fn predict(&self, plan: &ControlPlan) -> Result<f64> {
        crate::mse::mse(&self.coefficients, &plan.selection, &plan.controls)
    }

    /// `‖x*‖²`, the error with no control.
    pub fn floor(&self) -> f64 {
        self.coefficients.alpha
    }
}
