//! Expected squared error `E‖H x_T − x*‖²` of the controlled system started at
//! zero, as a quadratic function of the inputs.
//!
//! With `Φ_{b,a} = A_b ⋯ A_a` (identity when `a > b`) the error expands into
//!
//! ```text
//! MSE = α − 2 Σ_τ β_τᵀ Cᵀ u_τ + Σ_τ Σ_τ' u_τᵀ C Γ_{τ,τ'} Cᵀ u_τ'
//! α = ‖x*‖²,  β_τ = (Ā^{T−τ−1})ᵀ Hᵀ x*,  Γ_{τ,τ'} = E[Φ_{T−1,τ+1}ᵀ HᵀH Φ_{T−1,τ'+1}]
//! ```
//!
//! For `τ ≤ τ'`, `Γ_{τ,τ'} = (Ā^{τ'−τ})ᵀ Q_{T−τ'−1}` with `Q_0 = HᵀH` and
//! `Q_a = E[A_tᵀ Q_{a−1} A_t]`, computed in closed form by [`q_step_adjacency`]
//! and [`q_step_laplacian`].
//!
//! `Γ` splits into the part explained by the mean dynamics and a variance part
//! `P_{T−τ'−1}` that follows `P_a = Ā P_{a−1} Ā + V(Q_{a−1})`. Evaluating the
//! error as `‖H μ_T − x*‖² + uᵀ Γ_var u` ([`mse`]) avoids the cancellation the
//! expanded form suffers when the inputs are large.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    mean_evolution, mean_transition, simulate_final, transition_matrix, ControlSequence,
    DiffusionModel, NodeSelection,
};
use crate::error::{Error, Result};
use crate::gsp::{Graph, GraphSignal};
use crate::linalg::symmetrize;
use crate::random_graph::ResModel;

/// Largest number of joint edge configurations [`gamma_brute_force`] enumerates.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Default realization count of [`gamma_monte_carlo`].
pub const DEFAULT_MC_DRAWS: usize = 10_000;

/// Edges `(i, j, w)` with `i < j` read off the upper triangle of `w`.
fn edges_of(w: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let n = w.nrows();
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if w[(i, j)] != 0.0 {
                out.push((i, j, w[(i, j)]));
            }
        }
    }
    out
}

/// `E[W_t Q W_t] − p² W Q W` for RES(p).
fn adjacency_variance(q: &DMatrix<f64>, w: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let s = p * (1.0 - p);
    let mut v = DMatrix::zeros(n, n);
    if s == 0.0 {
        return v;
    }
    for j in 0..n {
        for i in 0..n {
            if i != j {
                v[(i, j)] = s * w[(i, j)] * q[(i, j)] * w[(i, j)];
            }
        }
    }
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += w[(i, k)] * q[(k, k)] * w[(k, i)];
        }
        v[(i, i)] = s * acc;
    }
    v
}

/// `E[(I − εL_t) Q (I − εL_t)] − Ā Q Ā` for RES(p); one rank-one term per edge.
fn laplacian_variance(q: &DMatrix<f64>, w: &DMatrix<f64>, epsilon: f64, p: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let s = epsilon * epsilon * p * (1.0 - p);
    let mut v = DMatrix::zeros(n, n);
    if s == 0.0 {
        return v;
    }
    for (i, j, we) in edges_of(w) {
        // b = e_i − e_j
        let c = s * we * we * (q[(i, i)] + q[(j, j)] - q[(i, j)] - q[(j, i)]);
        v[(i, i)] += c;
        v[(j, j)] += c;
        v[(i, j)] -= c;
        v[(j, i)] -= c;
    }
    v
}

/// One step of `Q_a = E[W_tᵀ Q_{a−1} W_t]` under RES(p):
/// `p² WQW + p(1−p)(W∘Q∘W − diag(W∘Q∘W)) + p(1−p) diag(W diag(Q) W)`.
pub fn q_step_adjacency(q_prev: &DMatrix<f64>, w: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let mut q = w * q_prev * w * (p * p) + adjacency_variance(q_prev, w, p);
    symmetrize(&mut q);
    q
}

/// One step of `Q_a = E[(I − εL_t)ᵀ Q_{a−1} (I − εL_t)]` under RES(p), with
/// `L = d − w`:
/// `Q − εp(LQ + QL) + ε²(p² LQL + p(1−p) Σ_e w_e² (b_eᵀQb_e) b_e b_eᵀ)`,
/// where `b_e = e_i − e_j` for edge `e = {i, j}`.
pub fn q_step_laplacian(
    q_prev: &DMatrix<f64>,
    w: &DMatrix<f64>,
    d: &DMatrix<f64>,
    epsilon: f64,
    p: f64,
) -> DMatrix<f64> {
    let n = q_prev.nrows();
    let abar = DMatrix::identity(n, n) - (d - w) * (epsilon * p);
    let mut q = &abar * q_prev * &abar + laplacian_variance(q_prev, w, epsilon, p);
    symmetrize(&mut q);
    q
}

/// Closed-form second-moment step and its variance part for one model.
struct MomentStep {
    model: DiffusionModel,
    w: DMatrix<f64>,
    d: DMatrix<f64>,
    p: f64,
}

impl MomentStep {
    fn new(model: &DiffusionModel, g: &Graph, p: ResModel) -> Self {
        MomentStep {
            model: *model,
            w: g.adjacency(),
            d: DMatrix::from_diagonal(&g.degrees()),
            p: p.p(),
        }
    }

    fn full(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        match self.model {
            DiffusionModel::LaplacianHeat { epsilon } => {
                q_step_laplacian(q, &self.w, &self.d, epsilon, self.p)
            }
            DiffusionModel::AdjacencyShift => q_step_adjacency(q, &self.w, self.p),
        }
    }

    fn variance(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        match self.model {
            DiffusionModel::LaplacianHeat { epsilon } => {
                laplacian_variance(q, &self.w, epsilon, self.p)
            }
            DiffusionModel::AdjacencyShift => adjacency_variance(q, &self.w, self.p),
        }
    }
}

fn check_filter(h: &DMatrix<f64>, n: usize) -> Result<()> {
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: h.nrows(),
        });
    }
    Ok(())
}

fn check_indices(horizon: usize, tau: usize, tau_p: usize) -> Result<()> {
    if horizon == 0 || tau >= horizon || tau_p >= horizon {
        return Err(Error::InvalidParameter(format!(
            "time indices ({tau}, {tau_p}) out of range for horizon {horizon}"
        )));
    }
    Ok(())
}

fn powers(a: &DMatrix<f64>, count: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(count.max(1));
    out.push(DMatrix::identity(n, n));
    for k in 1..count {
        out.push(a * &out[k - 1]);
    }
    out
}

/// `Γ_{τ,τ'}` from the closed-form second-moment recursion.
pub fn gamma_exact(
    model: &DiffusionModel,
    g: &Graph,
    p: ResModel,
    h: &DMatrix<f64>,
    horizon: usize,
    tau: usize,
    tau_p: usize,
) -> Result<DMatrix<f64>> {
    check_filter(h, g.node_count())?;
    check_indices(horizon, tau, tau_p)?;
    if tau > tau_p {
        return Ok(gamma_exact(model, g, p, h, horizon, tau_p, tau)?.transpose());
    }
    let abar = mean_transition(model, g, p)?;
    let step = MomentStep::new(model, g, p);
    let mut q = h.transpose() * h;
    for _ in 0..(horizon - tau_p - 1) {
        q = step.full(&q);
    }
    let lag = powers(&abar, tau_p - tau + 1).pop().expect("non-empty");
    Ok(lag.transpose() * q)
}

/// `Γ_{τ,τ'}` by enumerating every edge subset at every step involved, each
/// weighted by its RES probability.
pub fn gamma_brute_force(
    model: &DiffusionModel,
    g: &Graph,
    p: ResModel,
    h: &DMatrix<f64>,
    horizon: usize,
    tau: usize,
    tau_p: usize,
) -> Result<DMatrix<f64>> {
    check_filter(h, g.node_count())?;
    check_indices(horizon, tau, tau_p)?;
    model.validate_for(g)?;
    let steps = horizon - 1 - tau.min(tau_p);
    let edges = g.edge_count();
    let total = (edges as f64 * steps as f64).exp2();
    if total > BRUTE_FORCE_LIMIT || edges >= 63 {
        return Err(Error::TooLarge(format!(
            "{edges} edges over {steps} steps give {total:e} configurations"
        )));
    }

    let mut outcomes = Vec::with_capacity(1 << edges);
    for mask in 0u64..(1u64 << edges) {
        let mut k = 0;
        let sub = g.filter_edges(|_| {
            let on = mask >> k & 1 == 1;
            k += 1;
            on
        });
        let ones = mask.count_ones() as i32;
        let prob = p.p().powi(ones) * (1.0 - p.p()).powi(edges as i32 - ones);
        if prob > 0.0 {
            outcomes.push((prob, transition_matrix(model, &sub)?));
        }
    }

    let n = g.node_count();
    let q0 = h.transpose() * h;
    let mut acc = DMatrix::zeros(n, n);
    let id = DMatrix::identity(n, n);
    enumerate(
        &outcomes,
        horizon - 1,
        tau,
        tau_p,
        1.0,
        id.clone(),
        id,
        &q0,
        &mut acc,
    );
    Ok(acc)
}

/// Depth-first walk over the step `t` realization, building
/// `Φ_{T−1,τ+1}` (left) and `Φ_{T−1,τ'+1}` (right) from the latest step down.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    outcomes: &[(f64, DMatrix<f64>)],
    t: usize,
    tau: usize,
    tau_p: usize,
    prob: f64,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    q0: &DMatrix<f64>,
    acc: &mut DMatrix<f64>,
) {
    if t <= tau.min(tau_p) {
        *acc += left.transpose() * q0 * right * prob;
        return;
    }
    for (pr, a) in outcomes {
        let l = if t > tau { &left * a } else { left.clone() };
        let r = if t > tau_p { &right * a } else { right.clone() };
        enumerate(outcomes, t - 1, tau, tau_p, prob * pr, l, r, q0, acc);
    }
}

/// Monte Carlo estimate of `Γ_{τ,τ'}` for an arbitrary random transition rule.
/// `sample` draws one transition matrix `A_t`; each draw of `Γ` uses
/// `T − 1 − min(τ, τ')` independent matrices.
pub fn gamma_monte_carlo<R, F>(
    mut sample: F,
    h: &DMatrix<f64>,
    horizon: usize,
    tau: usize,
    tau_p: usize,
    draws: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> DMatrix<f64>,
{
    check_indices(horizon, tau, tau_p)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let n = h.nrows();
    let q0 = h.transpose() * h;
    let mut acc = DMatrix::zeros(n, n);
    for _ in 0..draws {
        let mut left = DMatrix::identity(n, n);
        let mut right = DMatrix::identity(n, n);
        for t in (tau.min(tau_p) + 1..horizon).rev() {
            let a = sample(rng);
            if t > tau {
                left *= &a;
            }
            if t > tau_p {
                right *= &a;
            }
        }
        acc += left.transpose() * &q0 * right;
    }
    Ok(acc / draws as f64)
}

/// Every coefficient of the quadratic MSE for one `(model, G, p, H, x*, T)`.
#[derive(Debug, Clone)]
pub struct MseCoefficients {
    /// `‖x*‖²`
    pub alpha: f64,
    /// `β_τ`, indexed by `τ`
    pub beta: Vec<DVector<f64>>,
    /// `Γ_{τ,τ'}`, indexed `[τ][τ']`
    pub gamma: Vec<Vec<DMatrix<f64>>>,
    /// Variance part of `Γ_{τ,τ'}`, exactly zero when `p = 1`.
    pub gamma_var: Vec<Vec<DMatrix<f64>>>,
    pub abar: DMatrix<f64>,
    pub filter: DMatrix<f64>,
    pub target: DVector<f64>,
    pub horizon: usize,
}

impl MseCoefficients {
    pub fn compute(
        model: &DiffusionModel,
        g: &Graph,
        p: ResModel,
        h: &DMatrix<f64>,
        target: &GraphSignal,
        horizon: usize,
    ) -> Result<Self> {
        let n = g.node_count();
        check_filter(h, n)?;
        if target.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: target.len(),
            });
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        let abar = mean_transition(model, g, p)?;
        let step = MomentStep::new(model, g, p);
        let apow = powers(&abar, horizon);

        // q[a] = Q_a, var[a] = P_a
        let mut q = vec![h.transpose() * h];
        let mut var = vec![DMatrix::zeros(n, n)];
        for a in 1..horizon {
            let next_var = &abar * &var[a - 1] * &abar + step.variance(&q[a - 1]);
            let mut next_var = next_var;
            symmetrize(&mut next_var);
            var.push(next_var);
            q.push(step.full(&q[a - 1]));
        }

        let x = target.values();
        let htx = h.transpose() * x;
        let beta = (0..horizon)
            .map(|tau| apow[horizon - tau - 1].transpose() * &htx)
            .collect();

        let table = |m: &[DMatrix<f64>]| {
            let mut out = vec![vec![DMatrix::zeros(0, 0); horizon]; horizon];
            for tau in 0..horizon {
                for tau_p in tau..horizon {
                    let blk = apow[tau_p - tau].transpose() * &m[horizon - tau_p - 1];
                    if tau != tau_p {
                        out[tau_p][tau] = blk.transpose();
                    }
                    out[tau][tau_p] = blk;
                }
            }
            out
        };

        Ok(MseCoefficients {
            alpha: x.norm_squared(),
            beta,
            gamma: table(&q),
            gamma_var: table(&var),
            abar,
            filter: h.clone(),
            target: x.clone(),
            horizon,
        })
    }

    fn check(&self, sel: &NodeSelection, ctrl: &ControlSequence) -> Result<()> {
        if ctrl.horizon() != self.horizon {
            return Err(Error::DimensionMismatch {
                expected: self.horizon,
                actual: ctrl.horizon(),
            });
        }
        if sel.len() != ctrl.width() {
            return Err(Error::DimensionMismatch {
                expected: sel.len(),
                actual: ctrl.width(),
            });
        }
        let n = self.target.len();
        if sel.indices().iter().any(|&i| i >= n) {
            return Err(Error::InvalidParameter("selected node not in graph".into()));
        }
        Ok(())
    }
}

/// `Σ_τ Σ_τ' u_τᵀ C M_{τ,τ'} Cᵀ u_τ'` for a table `M`.
fn selected_quadratic(
    table: &[Vec<DMatrix<f64>>],
    sel: &NodeSelection,
    ctrl: &ControlSequence,
) -> f64 {
    let idx = sel.indices();
    let mut total = 0.0;
    for (tau, u) in ctrl.inputs().iter().enumerate() {
        for (tau_p, v) in ctrl.inputs().iter().enumerate() {
            let m = &table[tau][tau_p];
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    total += u[r] * m[(i, j)] * v[c];
                }
            }
        }
    }
    total
}

/// The expanded quadratic form `α − 2 Σ β_τᵀCᵀu_τ + Σ Σ u_τᵀCΓ_{τ,τ'}Cᵀu_τ'`.
pub fn mse_closed_form(
    coeffs: &MseCoefficients,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
) -> Result<f64> {
    coeffs.check(sel, ctrl)?;
    let mut linear = 0.0;
    for (tau, u) in ctrl.inputs().iter().enumerate() {
        for (r, &i) in sel.indices().iter().enumerate() {
            linear += coeffs.beta[tau][i] * u[r];
        }
    }
    Ok(coeffs.alpha - 2.0 * linear + selected_quadratic(&coeffs.gamma, sel, ctrl))
}

/// Same value as [`mse_closed_form`], computed as squared bias of the mean
/// trajectory plus the variance term.
pub fn mse(coeffs: &MseCoefficients, sel: &NodeSelection, ctrl: &ControlSequence) -> Result<f64> {
    coeffs.check(sel, ctrl)?;
    let mu = mean_evolution(&coeffs.abar, sel, ctrl)?;
    let bias = (&coeffs.filter * mu - &coeffs.target).norm_squared();
    Ok(bias + selected_quadratic(&coeffs.gamma_var, sel, ctrl))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        // identical samples (deterministic runs) keep their exact value
        if samples.windows(2).all(|w| w[0] == w[1]) {
            return Estimate {
                mean: samples.first().copied().unwrap_or(f64::NAN),
                stderr: 0.0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

/// Empirical `‖H x_T − x*‖²` over `draws` simulated trajectories.
#[allow(clippy::too_many_arguments)]
pub fn empirical_mse<R: Rng + ?Sized>(
    model: &DiffusionModel,
    g: &Graph,
    p: ResModel,
    h: &DMatrix<f64>,
    target: &GraphSignal,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
    draws: usize,
    rng: &mut R,
) -> Result<Estimate> {
    model.validate_for(g)?;
    check_filter(h, g.node_count())?;
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    if sel.len() != ctrl.width() {
        return Err(Error::DimensionMismatch {
            expected: sel.len(),
            actual: ctrl.width(),
        });
    }
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            let x = simulate_final(model, g, p, sel, ctrl, rng);
            (h * x - target.values()).norm_squared()
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Exponent used on `ϱ` in the cross terms of [`mse_upper_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// `ϱ^{(T−τ−1)+(T−τ'−1)} ⟨u_τ, u_τ'⟩`
    #[default]
    Derivation,
    /// `ϱ^{2(T−τ'+1)} ⟨u_τ, u_τ'⟩`
    Printed,
    /// `(Σ_τ ϱ^{T−τ−1} ‖u_τ‖)²`, valid whenever `‖A_t‖ ≤ ϱ` and `‖H‖ ≤ 1`.
    Triangle,
}

/// `‖x*‖² − 2 Σ_τ x*ᵀ H Ā^{T−τ−1} Cᵀ u_τ` plus a norm-based term selected by
/// `variant`.
pub fn mse_upper_bound(
    rho: f64,
    abar: &DMatrix<f64>,
    h: &DMatrix<f64>,
    target: &GraphSignal,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
    variant: BoundVariant,
) -> Result<f64> {
    check_filter(h, abar.nrows())?;
    let x = target.values();
    let mu = mean_evolution(abar, sel, ctrl)?;
    let cross = x.dot(&(h * mu));
    let t_len = ctrl.horizon() as i32;
    let u = ctrl.inputs();
    let quad = match variant {
        BoundVariant::Triangle => {
            let s: f64 = u
                .iter()
                .enumerate()
                .map(|(tau, ut)| rho.powi(t_len - tau as i32 - 1) * ut.norm())
                .sum();
            s * s
        }
        BoundVariant::Derivation | BoundVariant::Printed => {
            let mut acc = 0.0;
            for (tau, ut) in u.iter().enumerate() {
                for (tau_p, up) in u.iter().enumerate() {
                    let (a, b) = (tau as i32, tau_p as i32);
                    let e = match variant {
                        BoundVariant::Printed => 2 * (t_len - b + 1),
                        _ => (t_len - a - 1) + (t_len - b - 1),
                    };
                    acc += rho.powi(e) * ut.dot(up);
                }
            }
            acc
        }
    };
    Ok(x.norm_squared() - 2.0 * cross + quad)
}

/// Coefficients laid out for the stacked input `u = [u_{T−1}; …; u_0]` over all
/// `N` nodes.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub alpha: f64,
    /// Block `(r, c)` is `Γ_{T−1−r, T−1−c}`.
    pub gamma_big: DMatrix<f64>,
    /// Variance part of `gamma_big`.
    pub gamma_var_big: DMatrix<f64>,
    /// `[β_{T−1}; …; β_0]`
    pub beta_big: DVector<f64>,
    /// `H [I, Ā, …, Ā^{T−1}]`, so that `H μ_T = filtered_gain · u`.
    pub filtered_gain: DMatrix<f64>,
    pub target: DVector<f64>,
    pub horizon: usize,
    pub nodes: usize,
}

pub fn stack(coeffs: &MseCoefficients) -> StackedSystem {
    let t_len = coeffs.horizon;
    let n = coeffs.target.len();
    let mut gamma_big = DMatrix::zeros(n * t_len, n * t_len);
    let mut gamma_var_big = DMatrix::zeros(n * t_len, n * t_len);
    let mut beta_big = DVector::zeros(n * t_len);
    let mut filtered_gain = DMatrix::zeros(n, n * t_len);
    let mut apow = coeffs.filter.clone();
    for r in 0..t_len {
        let tau = t_len - 1 - r;
        beta_big.rows_mut(r * n, n).copy_from(&coeffs.beta[tau]);
        filtered_gain.columns_mut(r * n, n).copy_from(&apow);
        apow = &apow * &coeffs.abar;
        for c in 0..t_len {
            let tau_p = t_len - 1 - c;
            gamma_big
                .view_mut((r * n, c * n), (n, n))
                .copy_from(&coeffs.gamma[tau][tau_p]);
            gamma_var_big
                .view_mut((r * n, c * n), (n, n))
                .copy_from(&coeffs.gamma_var[tau][tau_p]);
        }
    }
    StackedSystem {
        alpha: coeffs.alpha,
        gamma_big,
        gamma_var_big,
        beta_big,
        filtered_gain,
        target: coeffs.target.clone(),
        horizon: t_len,
        nodes: n,
    }
}

/// A [`StackedSystem`] restricted to the inputs of one node selection:
/// `Γ_C = (I_T ⊗ C) Γ (I_T ⊗ Cᵀ)` and `β_C = (I_T ⊗ C) β`.
#[derive(Debug, Clone)]
pub struct RestrictedSystem {
    pub alpha: f64,
    pub gamma_c: DMatrix<f64>,
    pub gamma_var_c: DMatrix<f64>,
    pub beta_c: DVector<f64>,
    pub gain_c: DMatrix<f64>,
    pub target: DVector<f64>,
}

impl StackedSystem {
    /// Stacked indices kept by the selection, block by block.
    fn kept(&self, sel: &NodeSelection) -> Vec<usize> {
        (0..self.horizon)
            .flat_map(|b| sel.indices().iter().map(move |&i| b * self.nodes + i))
            .collect()
    }

    pub fn restrict(&self, sel: &NodeSelection) -> Result<RestrictedSystem> {
        if let Some(&bad) = sel.indices().iter().find(|&&i| i >= self.nodes) {
            return Err(Error::InvalidParameter(format!("selected node {bad} not in graph")));
        }
        let idx = self.kept(sel);
        Ok(RestrictedSystem {
            alpha: self.alpha,
            gamma_c: self.gamma_big.select_rows(&idx).select_columns(&idx),
            gamma_var_c: self.gamma_var_big.select_rows(&idx).select_columns(&idx),
            beta_c: self.beta_big.select_rows(&idx),
            gain_c: self.filtered_gain.select_columns(&idx),
            target: self.target.clone(),
        })
    }
}

impl RestrictedSystem {
    /// `α − 2 β_Cᵀ u + uᵀ Γ_C u` for a stacked input.
    pub fn mse_closed_form(&self, u: &DVector<f64>) -> f64 {
        self.alpha - 2.0 * self.beta_c.dot(u) + u.dot(&(&self.gamma_c * u))
    }

    /// `‖G_C u − x*‖² + uᵀ Γ_var,C u`, the same value without cancellation.
    pub fn mse(&self, u: &DVector<f64>) -> f64 {
        (&self.gain_c * u - &self.target).norm_squared() + u.dot(&(&self.gamma_var_c * u))
    }
}
