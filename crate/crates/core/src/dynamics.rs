//! Diffusion transition rules on RES graph realizations and the controlled
//! linear system `x_t = A_{t-1} x_{t-1} + Cᵀ u_{t-1}`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsp::{symmetric_spectral_norm, Edge, Graph, GraphSignal, ShiftKind};
use crate::random_graph::ResModel;

/// Relative slack when comparing a step size against `1/‖L‖₂`.
const STEP_SLACK: f64 = 1e-12;

/// How a graph realization is turned into a transition matrix `A_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionModel {
    /// `A_t = I - ε L_t`.
    LaplacianHeat { epsilon: f64 },
    /// `A_t = W_t`.
    AdjacencyShift,
}

impl DiffusionModel {
    /// Heat diffusion with the largest stable step `ε = 1/‖L‖₂`.
    pub fn heat_for(g: &Graph) -> Self {
        let norm = symmetric_spectral_norm(&g.laplacian());
        let epsilon = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        DiffusionModel::LaplacianHeat { epsilon }
    }

    pub fn shift_kind(&self) -> ShiftKind {
        match self {
            DiffusionModel::LaplacianHeat { .. } => ShiftKind::Laplacian,
            DiffusionModel::AdjacencyShift => ShiftKind::Adjacency,
        }
    }

    /// Checks the step size against the underlying graph.
    pub fn validate_for(&self, g: &Graph) -> Result<()> {
        if let DiffusionModel::LaplacianHeat { epsilon } = *self {
            check_step(epsilon, symmetric_spectral_norm(&g.laplacian()))?;
        }
        Ok(())
    }

    /// Uniform bound `ϱ` on `‖A_t‖₂` over all realizations of `g`.
    pub fn norm_bound(&self, g: &Graph) -> f64 {
        match self {
            DiffusionModel::LaplacianHeat { .. } => 1.0,
            DiffusionModel::AdjacencyShift => symmetric_spectral_norm(&g.adjacency()),
        }
    }

    /// Eigenvalues of `E[A_t]` given the shift-operator eigenvalues, in the same
    /// order: `1 - εpλ` or `pλ`.
    pub fn mean_spectrum(&self, shift_eigenvalues: &DVector<f64>, p: f64) -> DVector<f64> {
        match *self {
            DiffusionModel::LaplacianHeat { epsilon } => {
                shift_eigenvalues.map(|l| 1.0 - epsilon * p * l)
            }
            DiffusionModel::AdjacencyShift => shift_eigenvalues * p,
        }
    }
}

fn check_step(epsilon: f64, laplacian_norm: f64) -> Result<()> {
    let max = if laplacian_norm > 0.0 {
        1.0 / laplacian_norm
    } else {
        f64::INFINITY
    };
    if !(epsilon > 0.0 && epsilon.is_finite() && epsilon <= max * (1.0 + STEP_SLACK)) {
        return Err(Error::UnstableStep { epsilon, max });
    }
    Ok(())
}

/// `A_t` for one realization: `I - εL_t` or `W_t`.
pub fn transition_matrix(model: &DiffusionModel, realization: &Graph) -> Result<DMatrix<f64>> {
    match *model {
        DiffusionModel::LaplacianHeat { epsilon } => {
            let l = realization.laplacian();
            check_step(epsilon, symmetric_spectral_norm(&l))?;
            Ok(DMatrix::identity(realization.node_count(), realization.node_count()) - l * epsilon)
        }
        DiffusionModel::AdjacencyShift => Ok(realization.adjacency()),
    }
}

/// `Ā = E[A_t] = I - εpL` or `pW`.
pub fn mean_transition(model: &DiffusionModel, g: &Graph, p: ResModel) -> Result<DMatrix<f64>> {
    model.validate_for(g)?;
    let n = g.node_count();
    Ok(match *model {
        DiffusionModel::LaplacianHeat { epsilon } => {
            DMatrix::identity(n, n) - g.laplacian() * (epsilon * p.p())
        }
        DiffusionModel::AdjacencyShift => g.adjacency() * p.p(),
    })
}

/// Applies `A_t` for the realization given by `active` edges to `x`, without
/// forming the matrix.
pub(crate) fn apply_on_edges<'a>(
    model: &DiffusionModel,
    active: impl Iterator<Item = &'a Edge>,
    x: &DVector<f64>,
) -> DVector<f64> {
    match *model {
        DiffusionModel::LaplacianHeat { epsilon } => {
            let mut y = x.clone();
            for e in active {
                let flow = epsilon * e.w * (x[e.i] - x[e.j]);
                y[e.i] -= flow;
                y[e.j] += flow;
            }
            y
        }
        DiffusionModel::AdjacencyShift => {
            let mut y = DVector::zeros(x.len());
            for e in active {
                y[e.i] += e.w * x[e.j];
                y[e.j] += e.w * x[e.i];
            }
            y
        }
    }
}

/// The driving nodes, i.e. the rows of the identity selected by `C`, in the
/// order the inputs are attached to them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeSelection(Vec<usize>);

impl NodeSelection {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty node selection".into()));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::InvalidParameter(format!(
                    "selected node {i} out of range for {n} nodes"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!("node {i} selected twice")));
            }
        }
        Ok(NodeSelection(indices))
    }

    pub fn all(n: usize) -> Self {
        NodeSelection((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `M × N` selection matrix `C`.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.0.len(), n);
        for (r, &i) in self.0.iter().enumerate() {
            c[(r, i)] = 1.0;
        }
        c
    }

    /// `x += Cᵀ u`.
    pub fn inject(&self, u: &DVector<f64>, x: &mut DVector<f64>) {
        for (r, &i) in self.0.iter().enumerate() {
            x[i] += u[r];
        }
    }
}

/// Inputs `u_0, …, u_{T-1}`, one length-`M` vector per step.
///
/// The stacked form used by the controllers is `[u_{T-1}; …; u_0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    inputs: Vec<DVector<f64>>,
}

impl ControlSequence {
    pub fn new(inputs: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = inputs.first() else {
            return Err(Error::InvalidParameter("control horizon must be >= 1".into()));
        };
        let m = first.len();
        if let Some(bad) = inputs.iter().find(|u| u.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: bad.len(),
            });
        }
        Ok(ControlSequence { inputs })
    }

    pub fn zeros(horizon: usize, width: usize) -> Self {
        ControlSequence {
            inputs: vec![DVector::zeros(width); horizon.max(1)],
        }
    }

    /// Splits a stacked vector `[u_{T-1}; …; u_0]`.
    pub fn from_stacked(u: &DVector<f64>, horizon: usize, width: usize) -> Result<Self> {
        if horizon == 0 || u.len() != horizon * width {
            return Err(Error::DimensionMismatch {
                expected: horizon * width,
                actual: u.len(),
            });
        }
        let inputs = (0..horizon)
            .map(|t| u.rows((horizon - 1 - t) * width, width).into_owned())
            .collect();
        Ok(ControlSequence { inputs })
    }

    pub fn to_stacked(&self) -> DVector<f64> {
        let (t_len, m) = (self.horizon(), self.width());
        let mut u = DVector::zeros(t_len * m);
        for (t, ut) in self.inputs.iter().enumerate() {
            u.rows_mut((t_len - 1 - t) * m, m).copy_from(ut);
        }
        u
    }

    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn width(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn input(&self, t: usize) -> &DVector<f64> {
        &self.inputs[t]
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn energy(&self) -> f64 {
        self.inputs.iter().map(|u| u.norm_squared()).sum()
    }
}

/// States `x_0, …, x_T` of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<GraphSignal>,
}

impl Trajectory {
    pub fn final_state(&self) -> &GraphSignal {
        self.states.last().expect("trajectory holds x_0")
    }
}

fn check_dims(g: &Graph, sel: &NodeSelection, ctrl: &ControlSequence) -> Result<()> {
    if sel.len() != ctrl.width() {
        return Err(Error::DimensionMismatch {
            expected: sel.len(),
            actual: ctrl.width(),
        });
    }
    if let Some(&bad) = sel.indices().iter().find(|&&i| i >= g.node_count()) {
        return Err(Error::InvalidParameter(format!("selected node {bad} not in graph")));
    }
    Ok(())
}

/// Runs the controlled system on fresh, independent RES realizations, one per
/// step. `x0` defaults to the zero signal. Each step consumes one uniform draw
/// per underlying edge, the same as [`crate::random_graph::sample_res`].
pub fn simulate<R: Rng + ?Sized>(
    model: &DiffusionModel,
    g: &Graph,
    p: ResModel,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
    rng: &mut R,
    x0: Option<&GraphSignal>,
) -> Result<Trajectory> {
    model.validate_for(g)?;
    check_dims(g, sel, ctrl)?;
    let n = g.node_count();
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
            })
        }
        Some(x0) => x0.values().clone(),
        None => DVector::zeros(n),
    };
    let mut states = Vec::with_capacity(ctrl.horizon() + 1);
    states.push(GraphSignal::new(x.clone()));
    for u in ctrl.inputs() {
        x = step(model, g, p.p(), rng, &x);
        sel.inject(u, &mut x);
        states.push(GraphSignal::new(x.clone()));
    }
    Ok(Trajectory { states })
}

/// Final state `x_T` only; same random draws as [`simulate`].
pub fn simulate_final<R: Rng + ?Sized>(
    model: &DiffusionModel,
    g: &Graph,
    p: ResModel,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
    rng: &mut R,
) -> DVector<f64> {
    let mut x = DVector::zeros(g.node_count());
    for u in ctrl.inputs() {
        x = step(model, g, p.p(), rng, &x);
        sel.inject(u, &mut x);
    }
    x
}

fn step<R: Rng + ?Sized>(
    model: &DiffusionModel,
    g: &Graph,
    p: f64,
    rng: &mut R,
    x: &DVector<f64>,
) -> DVector<f64> {
    let mut keep = Vec::with_capacity(g.edge_count());
    keep.extend(g.edges().iter().filter(|_| rng.random::<f64>() < p));
    apply_on_edges(model, keep.into_iter(), x)
}

/// `μ_T = Σ_τ Ā^{T-τ-1} Cᵀ u_τ`, evaluated by Horner's rule.
pub fn mean_evolution(
    abar: &DMatrix<f64>,
    sel: &NodeSelection,
    ctrl: &ControlSequence,
) -> Result<DVector<f64>> {
    if sel.len() != ctrl.width() {
        return Err(Error::DimensionMismatch {
            expected: sel.len(),
            actual: ctrl.width(),
        });
    }
    let mut mu = DVector::zeros(abar.nrows());
    for u in ctrl.inputs() {
        mu = abar * mu;
        sel.inject(u, &mut mu);
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_graph::{generate_er, sample_res, RngStream};

    fn k2() -> Graph {
        Graph::unweighted(2, [(0, 1)]).unwrap()
    }

    fn res(p: f64) -> ResModel {
        ResModel::new(p).unwrap()
    }

    #[test]
    fn transition_examples() {
        let heat = DiffusionModel::LaplacianHeat { epsilon: 0.5 };
        assert_eq!(transition_matrix(&heat, &Graph::empty(3)).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(
            transition_matrix(&heat, &k2()).unwrap(),
            DMatrix::from_element(2, 2, 0.5)
        );
        assert_eq!(
            transition_matrix(&DiffusionModel::AdjacencyShift, &k2()).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        let too_big = DiffusionModel::LaplacianHeat { epsilon: 0.6 };
        assert!(matches!(
            transition_matrix(&too_big, &k2()),
            Err(Error::UnstableStep { .. })
        ));
        assert!(DiffusionModel::LaplacianHeat { epsilon: 0.0 }.validate_for(&k2()).is_err());
    }

    #[test]
    fn mean_transition_examples() {
        let heat = DiffusionModel::LaplacianHeat { epsilon: 0.5 };
        let abar = mean_transition(&heat, &k2(), res(0.5)).unwrap();
        assert!((abar - DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75])).amax() < 1e-15);
        let abar = mean_transition(&DiffusionModel::AdjacencyShift, &k2(), res(0.5)).unwrap();
        assert_eq!(abar, k2().adjacency() * 0.5);
        let g = generate_er(9, 0.5, &RngStream::new(1, 0), true).unwrap();
        let heat = DiffusionModel::heat_for(&g);
        assert_eq!(
            mean_transition(&heat, &g, res(1.0)).unwrap(),
            transition_matrix(&heat, &g).unwrap()
        );
    }

    #[test]
    fn transition_norm_bounds_hold_on_realizations() {
        let g = generate_er(10, 0.6, &RngStream::new(4, 0), true).unwrap();
        let heat = DiffusionModel::heat_for(&g);
        let adj = DiffusionModel::AdjacencyShift;
        let rho = adj.norm_bound(&g);
        let mut rng = RngStream::new(4, 1).rng();
        for _ in 0..50 {
            let r = sample_res(&g, res(0.7), &mut rng);
            let a = transition_matrix(&heat, &r).unwrap();
            assert!(symmetric_spectral_norm(&a) <= 1.0 + 1e-10);
            let w = transition_matrix(&adj, &r).unwrap();
            assert!(symmetric_spectral_norm(&w) <= rho + 1e-10);
        }
    }

    #[test]
    fn edge_application_matches_matrix() {
        let g = generate_er(7, 0.5, &RngStream::new(8, 0), true).unwrap();
        let x = DVector::from_fn(7, |i, _| (i as f64 * 0.7).sin());
        for model in [DiffusionModel::heat_for(&g), DiffusionModel::AdjacencyShift] {
            let dense = transition_matrix(&model, &g).unwrap() * &x;
            let sparse = apply_on_edges(&model, g.edges().iter(), &x);
            assert!((dense - sparse).amax() < 1e-14);
        }
    }

    #[test]
    fn selection_and_sequence_validation() {
        assert!(NodeSelection::new(vec![], 3).is_err());
        assert!(NodeSelection::new(vec![0, 0], 3).is_err());
        assert!(NodeSelection::new(vec![3], 3).is_err());
        let c = NodeSelection::new(vec![2, 0], 3).unwrap().matrix(3);
        assert_eq!(c, DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]));
        assert!(ControlSequence::new(vec![]).is_err());
        assert!(ControlSequence::new(vec![DVector::zeros(2), DVector::zeros(3)]).is_err());
    }

    #[test]
    fn stacked_order_is_latest_first() {
        let seq = ControlSequence::new(vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
            DVector::from_vec(vec![5.0, 6.0]),
        ])
        .unwrap();
        let u = seq.to_stacked();
        assert_eq!(u.as_slice(), &[5.0, 6.0, 3.0, 4.0, 1.0, 2.0]);
        assert_eq!(ControlSequence::from_stacked(&u, 3, 2).unwrap(), seq);
    }

    #[test]
    fn simulate_examples() {
        let g = generate_er(8, 0.5, &RngStream::new(2, 0), true).unwrap();
        let heat = DiffusionModel::heat_for(&g);
        let sel = NodeSelection::new(vec![1, 4], 8).unwrap();
        let ctrl = ControlSequence::new(
            (0..4)
                .map(|t| DVector::from_vec(vec![t as f64, 1.0 - t as f64]))
                .collect(),
        )
        .unwrap();

        // p = 1 is the deterministic recursion
        let abar = mean_transition(&heat, &g, res(1.0)).unwrap();
        let mut rng = RngStream::new(2, 1).rng();
        let traj = simulate(&heat, &g, res(1.0), &sel, &ctrl, &mut rng, None).unwrap();
        let mu = mean_evolution(&abar, &sel, &ctrl).unwrap();
        assert!((traj.final_state().values() - mu).amax() < 1e-12);
        assert_eq!(traj.states.len(), 5);

        // zero control stays at zero
        let zero = ControlSequence::zeros(4, 2);
        let traj = simulate(&heat, &g, res(0.5), &sel, &zero, &mut rng, None).unwrap();
        assert!(traj.states.iter().all(|x| x.values().amax() == 0.0));

        // first step from x0 = 0 is deterministic
        let k = k2();
        let one = ControlSequence::new(vec![DVector::from_vec(vec![1.0])]).unwrap();
        let s0 = NodeSelection::new(vec![0], 2).unwrap();
        for _ in 0..20 {
            let t = simulate(&DiffusionModel::AdjacencyShift, &k, res(0.5), &s0, &one, &mut rng, None)
                .unwrap();
            assert_eq!(t.final_state().values().as_slice(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn simulate_uses_same_draws_as_sample_res() {
        let g = generate_er(9, 0.5, &RngStream::new(12, 0), true).unwrap();
        let model = DiffusionModel::AdjacencyShift;
        let sel = NodeSelection::new(vec![0, 5], 9).unwrap();
        let ctrl = ControlSequence::new(vec![DVector::from_vec(vec![1.0, -1.0]); 3]).unwrap();
        let stream = RngStream::new(12, 3);
        let traj = simulate(&model, &g, res(0.4), &sel, &ctrl, &mut stream.rng(), None).unwrap();

        let mut rng = stream.rng();
        let mut x = DVector::zeros(9);
        for u in ctrl.inputs() {
            let r = sample_res(&g, res(0.4), &mut rng);
            x = transition_matrix(&model, &r).unwrap() * x;
            sel.inject(u, &mut x);
        }
        assert!((traj.final_state().values() - x).amax() < 1e-14);
    }

    #[test]
    fn mean_evolution_examples() {
        let k = k2();
        let abar = mean_transition(&DiffusionModel::AdjacencyShift, &k, res(0.5)).unwrap();
        let s0 = NodeSelection::new(vec![0], 2).unwrap();
        let one = ControlSequence::new(vec![DVector::from_vec(vec![1.0])]).unwrap();
        assert_eq!(mean_evolution(&abar, &s0, &one).unwrap().as_slice(), &[1.0, 0.0]);
        let two = ControlSequence::new(vec![DVector::from_vec(vec![1.0]), DVector::zeros(1)]).unwrap();
        assert_eq!(mean_evolution(&abar, &s0, &two).unwrap().as_slice(), &[0.0, 0.5]);
        let zero = ControlSequence::zeros(3, 1);
        assert_eq!(mean_evolution(&abar, &s0, &zero).unwrap(), DVector::zeros(2));
    }
}
