//! Fractional graph Laplacian regression on random samples of the flat torus.
//!
//! Given points on `[0,1)^d` and a few labeled nodes, [`ssl::solve_constrained`]
//! finds the node function minimizing the fractional energy
//! `Σ_k λ_k^s ⟨u, ψ_k⟩²` of the rescaled ε-graph Laplacian subject to the labels.
//! [`continuum`] computes the matching continuum minimizer on a periodic grid,
//! and [`experiments`] compares the two across `(n, ε)`.

pub mod continuum;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod harness;
pub mod spectral;
pub mod ssl;
pub mod tlp;
pub mod torus;

pub use error::{Error, Result};
pub use graph::{Kernel, WeightedGraph};
pub use spectral::SpectralDecomposition;
pub use ssl::{ConstraintSet, LabelFunction};
pub use torus::{SampleSet, TorusPoint};
