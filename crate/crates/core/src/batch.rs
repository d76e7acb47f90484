//! Many independent solves, one per instance.

use crate::adnb::{solve_with, SolveReport, SolverOptions};
use crate::error::Result;
use crate::instance::BargainingInstance;
use crate::par;

/// Solves every instance; runs share nothing, so they go to the thread pool
/// when the `parallel` feature is on.
pub fn solve_many(insts: &[BargainingInstance], opts: SolverOptions) -> Vec<Result<SolveReport>> {
    par::map(insts, |inst| solve_with(inst, opts))
}

pub fn solve_many_sequential(insts: &[BargainingInstance], opts: SolverOptions) -> Vec<Result<SolveReport>> {
    par::map_sequential(insts, |inst| solve_with(inst, opts))
}
