//! Mean controllability of linear diffusions on graphs whose edges fail at
//! random.
//!
//! The crate covers the graph Fourier transform on a fixed support graph, random
//! edge sampling (RES) realizations of it, the resulting stochastic linear
//! system, closed forms for the expected squared error of a bandlimited target,
//! and driving-node selection with the matching controllers.

pub use nalgebra;

pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod gsp;
pub mod linalg;
pub mod mse;
pub mod random_graph;

pub use control::{
    biased_control, exhaustive_select, greedy_select, greedy_select_biased, greedy_select_unbiased,
    inband_controllability_matrix, min_energy_control, necessary_nodes, random_select,
    sufficient_selection, BiasedGate, BiasedObjective, BiasedSolve, ControlPlan, DesignProblem,
    InbandSystem, SelectionObjective, UnbiasedObjective,
};
pub use dynamics::{
    mean_evolution, mean_transition, simulate, simulate_final, transition_matrix, ControlSequence,
    DiffusionModel, NodeSelection, Trajectory,
};
pub use error::{Error, Result};
pub use experiment::{
    emit, run, target_spectrum, ExperimentConfig, ExperimentOutput, GraphSource, ModelChoice,
    OutputFormat, ResultRecord, SpectrumShape, Strategy, Sweep, SweepVariable,
};
pub use gsp::{
    bandlimiting_filter, build_shift, eigendecompose, spectral_norm, synthesize_bandlimited, Band,
    BandPlacement, BandSpec, Edge, FrequencyOrdering, Graph, GraphSignal, ShiftKind,
    ShiftOperator, SpectralBasis,
};
pub use mse::{
    empirical_mse, gamma_brute_force, gamma_exact, gamma_monte_carlo, mse, mse_closed_form,
    mse_upper_bound, q_step_adjacency, q_step_laplacian, stack, BoundVariant, Estimate,
    MseCoefficients, RestrictedSystem, StackedSystem,
};
pub use random_graph::{
    format_edge_list, generate_er, generate_geometric, geometric_from_points, load_edge_list,
    parse_edge_list, sample_res, write_edge_list, ResModel, RngStream,
};
