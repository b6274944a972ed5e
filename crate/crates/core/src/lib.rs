//! Decide how a finite-state gambling strategy behaves against normal
//! sequences, and simulate it on concrete symbol streams.
//!
//! A strategy is a family of non-negative square matrices, one per alphabet
//! symbol, with the *superfair* property: from any basis state, the average
//! one-step capital over a uniformly random next symbol never increases.
//! Against any normal sequence (all blocks equidistributed, Champernowne
//! being the canonical example) exactly one of three things happens:
//!
//! - **Case 0 — sudden death**: the capital vector hits exactly zero.
//! - **Case 1 — ruin**: the capital stays positive but decays to zero
//!   exponentially fast.
//! - **Case 2 — stabilization**: the capital converges exponentially fast
//!   to a positive constant.
//!
//! [`classify::classify_star`] decides the trichotomy for families whose
//! index graph is strongly connected; [`classify::classify_general`] covers
//! everything else component by component. [`betting::BettingAutomaton`]
//! models the equivalent probabilistic gambler and converts into matrix
//! form. [`trajectory::evolve`] runs a capital vector along a stream from
//! [`sequences::SequenceSource`] and [`trajectory::rate_fit`] measures the
//! empirical convergence rates.
//!
//! All decision paths run in exact rational arithmetic by default
//! ([`scalar::Mode::Exact`]); a float mode with explicit tolerances exists
//! for speed and for data that is only known approximately.

pub mod error;
pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

pub mod scalar;
pub mod linalg;
pub mod betting;
pub mod classify;
pub mod family;
pub mod generate;
pub mod geometry;
pub mod presets;
pub mod rng;
pub mod sequences;
pub mod simplex;
pub mod support;
pub mod trajectory;

pub use betting::{BettingAutomaton, CapitalEstimate};
pub use classify::{
    betting_subspace, classify_general, classify_star, fixed_direction, live,
    live_contraction_probe, BettingSubspace, Case, Classification, FixedDirection, GeneralReport,
    ProbeParams, ProbeReport,
};
pub use family::{FairnessKind, FairnessVerdict, MatrixFamily, Word};
pub use geometry::{birkhoff_tau, hilbert_distance};
pub use linalg::{IndexSet, NonNegMatrix, NonNegVector, SignedVec};
pub use scalar::{Mode, Scalar};
pub use sequences::SequenceSource;
pub use support::{build_support_automaton, bscc_structure, SupportAutomaton};
pub use trajectory::{evolve, rate_fit, EvolveOptions, FitTarget, RateFit, TrajectoryRecord};
