//! Compiles the guide's code listings as doctests, one module per chapter.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/graph-fourier.md")]
pub mod graph_fourier {}
#[doc = include_str!("../../../book/src/random-graphs.md")]
pub mod random_graphs {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/error.md")]
pub mod error {}
#[doc = include_str!("../../../book/src/controllers.md")]
pub mod controllers {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
