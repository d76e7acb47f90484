//! Slow, independent reference answers used to test the solver.

mod limit;
mod simplex;
mod support;

pub use limit::{default_eps, limit_algorithm, LimitRun, LimitStep};
pub use simplex::{maximize, LpResult};
pub use support::{candidate_supports, solve_linear, try_support, SupportGuess};

use num_traits::Zero;

use crate::certify::utilities;
use crate::error::{AdnbError, Result};
use crate::instance::{preprocess, BargainingInstance};
use crate::par;
use crate::rational::{q, Q};

pub const DEFAULT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    Infeasible,
    Feasible { p: Vec<Q>, x: Vec<Vec<Q>>, v: Vec<Q> },
}

pub fn oracle_solve(inst: &BargainingInstance) -> Result<OracleResult> {
    oracle_solve_capped(inst, DEFAULT_CAP)
}

/// Support enumeration, limited to `n * g <= cap`. Goods nobody wants are
/// priced at zero.
pub fn oracle_solve_capped(inst: &BargainingInstance, cap: usize) -> Result<OracleResult> {
    inst.validate()?;
    if inst.n() * inst.g() > cap {
        return Err(AdnbError::OracleCap(inst.n() * inst.g(), cap));
    }
    let (reduced, report) = preprocess(inst)?;
    if report.is_infeasible() {
        return Ok(OracleResult::Infeasible);
    }
    let guesses = candidate_supports(&reduced);
    let found = par::find_first(&guesses, |guess| try_support(&reduced, guess));
    Ok(match found {
        None => OracleResult::Infeasible,
        Some((p, x)) => {
            let v = utilities(&reduced, &x);
            let g0 = inst.g();
            OracleResult::Feasible {
                p: report.expand_goods(g0, &p, Q::zero()),
                x: x.iter().map(|r| report.expand_goods(g0, r, Q::zero())).collect(),
                v,
            }
        }
    })
}

/// Optimum `t*` of `max t` s.t. `sum_j u_ij x_ij >= c_i + t`,
/// `sum_i x_ij <= 1`, `x >= 0`. The game is feasible iff `t* > 0`.
pub fn feasibility_lp(inst: &BargainingInstance) -> Result<Q> {
    inst.validate()?;
    let (n, g) = (inst.n(), inst.g());
    // t = s - C with s >= 0, C = max c, so the origin is feasible
    let big_c = inst.c.iter().max().cloned().unwrap_or_else(Q::zero);
    let vars = n * g + 1;
    let s = n * g;
    let mut a = Vec::with_capacity(n + g);
    let mut b = Vec::with_capacity(n + g);
    for i in 0..n {
        let mut row = vec![Q::zero(); vars];
        for j in 0..g {
            row[i * g + j] = -Q::from_integer(inst.u[i][j].into());
        }
        row[s] = q(1);
        a.push(row);
        b.push(&big_c - &inst.c[i]);
    }
    for j in 0..g {
        let mut row = vec![Q::zero(); vars];
        for i in 0..n {
            row[i * g + j] = q(1);
        }
        a.push(row);
        b.push(q(1));
    }
    let mut obj = vec![Q::zero(); vars];
    obj[s] = q(1);
    match maximize(&a, &b, &obj) {
        LpResult::Optimal { value, .. } => Ok(value - big_c),
        LpResult::Unbounded => Err(AdnbError::Invariant("feasibility LP is unbounded".into())),
    }
}
