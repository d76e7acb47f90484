//! Exact combinatorial solver for Nash bargaining over the goods of a linear
//! exchange economy.
//!
//! The game is reduced to a market in which each buyer's budget is
//! `1 + c_i / gamma_i`. A first stage either finds prices at which every
//! buyer keeps less than one unit of unspent money, or proves that no
//! outcome beats the disagreement point. A second stage then raises prices
//! until all money is spent. Everything is computed in exact rationals.

pub mod adnb;
pub mod balanced;
pub mod batch;
pub mod certify;
pub mod engine;
pub mod error;
pub mod fisher;
pub mod flownet;
pub mod instance;
pub mod json;
pub mod oracle;
pub mod par;
pub mod rational;

pub use adnb::{solve, solve_with, Outcome, Solution, SolveReport, SolverOptions};
pub use error::{AdnbError, Result};
pub use instance::{parse_instance, preprocess, BargainingInstance};
pub use rational::Q;
