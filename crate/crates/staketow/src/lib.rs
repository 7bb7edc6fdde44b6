//! staketow: solver, simulator and equilibrium analyzer for stake-governed
//! tug-of-war on boundary-payment graphs.
//!
//! Two players move a counter along a graph by winning randomly-decided
//! turns, where each turn's win probability is the ratio of the stakes the
//! players commit from limited budgets. On root-reward trees the game value
//! is the λ-biased infinity-harmonic extension of the boundary payment, and
//! the equilibrium stake is a fixed proportion of each player's reserves.
//! This crate computes the value and the stake proportion by several
//! independent routes, checks the saddle structure of first-turn-constrained
//! games on stake grids, and simulates gameplay under pluggable strategies.
//!
//! The numeric core is generic over the scalar type through [`num::Real`];
//! the aliases below fix `f64` for everyday use.

pub mod cli;
pub mod fixtures;
pub mod game;
pub mod harmonic;
pub mod linalg;
pub mod num;
pub mod stake;
pub mod tree;
pub mod walk;

/// Default scalar for solvers and the command line.
pub type Scalar = f64;

/// A boundary-payment graph over the default scalar.
pub type Graph = tree::BoundaryPaymentGraph<Scalar>;

/// A solved harmonic field over the default scalar.
pub type Field = harmonic::HarmonicField<Scalar>;

/// A path decomposition over the default scalar.
pub type Decomposition = harmonic::Decomposition<Scalar>;

/// A stake computation over the default scalar.
pub type Stake = stake::StakeResult<Scalar>;

pub use tree::RootRewardTree;
