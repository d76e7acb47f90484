//! The two-stage bargaining solver: unit-money Fisher initialization,
//! Stage I (feasibility) and Stage II (equilibrium of the flexible-budget
//! market), with certificates for both verdicts.

mod relaxed;
mod stage1;
mod stage2;
mod state;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

pub use relaxed::{relaxed_kkt_gap, BuyerGap, RelaxedKkt};
pub use stage1::{stage1_event_x, stage1_potential, Verdict};
pub use stage2::Equilibrium;
pub use state::{FrozenBlock, SolverState};

use crate::certify::{
    check_equilibrium, check_feasibility_witness, check_kkt, utilities, verify_convex_dual,
    verify_lp_dual, ConvexDualCertificate, EquilibriumCheck, LpDualCertificate,
};
use crate::engine::{
    check_level_from_env, Counters, Instrument, PhaseRecord, Stage, TightEvent, TraceRecord,
};
use crate::error::{AdnbError, Result};
use crate::instance::{preprocess, BargainingInstance, PreprocessReport};
use crate::rational::{self, log2_ceil_bits, q, qu, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub trace: bool,
    /// 0 = off, 1 = per phase, 2 = per event.
    pub check: u8,
    /// Audit every result with the independent checkers before returning.
    pub verify: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            trace: false,
            check: check_level_from_env(),
            verify: true,
        }
    }
}

/// Iteration bounds derived from the instance size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// `n^4 g (L(n) + n L(U) + L(C) + g L(mu))`, `L` the bit length.
    pub maxflow_budget: u128,
    /// Four times `n^2 g (2n L(U) + 2g L(mu))`.
    pub stage1_phase_cap: usize,
    /// Four times `n^2 (4 L(delta) + L(n))`.
    pub stage2_phase_cap: usize,
    /// `n max(C, 1) U^n`, the claimed denominator bound for tight-set prices.
    #[serde(with = "rational::text")]
    pub delta: Q,
}

impl Bounds {
    pub fn of(inst: &BargainingInstance, mu: &BigInt) -> Self {
        let (n, g) = (inst.n() as u128, inst.g() as u128);
        let u_max = inst.u.iter().flatten().copied().max().unwrap_or(1);
        let c_max = inst.c.iter().max().cloned().unwrap_or_else(Q::zero);
        let big_c = if c_max < q(1) { q(1) } else { c_max };
        let delta = Q::from_integer(BigInt::from(n))
            * &big_c
            * Q::from_integer(num_traits::Pow::pow(BigInt::from(u_max), inst.n()));
        let l = |x: &Q| log2_ceil_bits(x) as u128;
        let (ln, lu, lc, lmu) = (l(&qu(n as u64)), l(&qu(u_max)), l(&big_c), l(&Q::from_integer(mu.clone())));
        let maxflow_budget = n.pow(4) * g * (ln + n * lu + lc + g * lmu);
        let s1 = 4 * n * n * g * (2 * n * lu + 2 * g * lmu);
        let s2 = 4 * n * n * (4 * l(&delta) + ln);
        Bounds {
            maxflow_budget,
            stage1_phase_cap: s1 as usize,
            stage2_phase_cap: s2 as usize,
            delta,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveStats {
    #[serde(flatten)]
    pub counters: Counters,
    pub bounds: Option<Bounds>,
    /// Largest iteration count in one phase for Stage I and Stage II.
    pub max_iterations_stage1: usize,
    pub max_iterations_stage2: usize,
    pub stage1_exits: Vec<String>,
    /// Measured bounds that did not hold.
    pub violations: Vec<String>,
    /// Stage II tight-set prices whose denominator exceeds `delta`.
    pub delta_violations: usize,
    #[serde(skip)]
    pub phases: Vec<PhaseRecord>,
    #[serde(skip)]
    pub tight: Vec<TightEvent>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SolveStats {
    fn from_instrument(ins: Instrument, bounds: Option<Bounds>) -> Self {
        let mut violations = ins.violations;
        if let Some(b) = &bounds {
            if ins.counters.maxflows as u128 > 4 * b.maxflow_budget {
                violations.push(format!(
                    "{} max-flows exceed four times the budget {}",
                    ins.counters.maxflows, b.maxflow_budget
                ));
            }
        }
        let delta_violations = match &bounds {
            Some(b) => ins
                .tight
                .iter()
                .filter(|ev| ev.stage == Stage::Two)
                .flat_map(|ev| &ev.prices)
                .filter(|p| Q::from_integer(p.denom().clone()) > b.delta)
                .count(),
            None => 0,
        };
        SolveStats {
            delta_violations,
            counters: ins.counters,
            bounds,
            max_iterations_stage1: ins.max_iterations[1],
            max_iterations_stage2: ins.max_iterations[2],
            stage1_exits: ins.stage1_exits,
            violations,
            phases: ins.phases,
            tight: ins.tight,
            trace: ins.trace,
        }
    }

    pub fn within_budget(&self) -> bool {
        self.bounds
            .as_ref()
            .is_none_or(|b| self.counters.maxflows as u128 <= 4 * b.maxflow_budget)
    }
}

/// Equilibrium of a feasible game, in the original good indexing. Goods no
/// buyer wants are priced at zero and not allocated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub p: Vec<Q>,
    pub x: Vec<Vec<Q>>,
    pub v: Vec<Q>,
    /// Prices found by Stage I; every surplus is below one there.
    pub feasible_prices: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasibility {
    pub lp_dual: LpDualCertificate,
    pub convex_dual: ConvexDualCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Feasible(Solution),
    Infeasible(Infeasibility),
}

impl Outcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Feasible(s) => Some(s),
            Outcome::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub stats: SolveStats,
}

pub fn solve(inst: &BargainingInstance) -> Result<SolveReport> {
    solve_with(inst, SolverOptions::default())
}

pub fn solve_with(inst: &BargainingInstance, opts: SolverOptions) -> Result<SolveReport> {
    let (reduced, report) = preprocess(inst)?;
    let g0 = inst.g();
    let ins = Instrument::new(opts.trace, opts.check);
    if report.is_infeasible() {
        let outcome = Outcome::Infeasible(zero_buyer_certificates(inst, report.zero_buyers[0]));
        if opts.verify {
            audit(inst, &outcome)?;
        }
        return Ok(SolveReport {
            outcome,
            stats: SolveStats::from_instrument(ins, None),
        });
    }
    let mut st = SolverState::initialize(&reduced, ins)?;
    let bounds = Bounds::of(&reduced, &st.mu);
    let outcome = match st.stage1(bounds.stage1_phase_cap)? {
        Verdict::Infeasible => {
            let cert = st.certificates();
            Outcome::Infeasible(expand_certificates(cert, &report, g0))
        }
        Verdict::Feasible => {
            st.restore()?;
            let feasible = st.p.clone();
            let eq = st.stage2(bounds.stage2_phase_cap)?;
            if !check_kkt(&reduced, &eq.p, &eq.x) {
                return Err(AdnbError::Invariant("final prices fail the KKT conditions".into()));
            }
            let v = utilities(&reduced, &eq.x);
            let x = eq
                .x
                .iter()
                .map(|row| report.expand_goods(g0, row, Q::zero()))
                .collect();
            Outcome::Feasible(Solution {
                p: report.expand_goods(g0, &eq.p, Q::zero()),
                x,
                v,
                feasible_prices: report.expand_goods(g0, &feasible, Q::zero()),
            })
        }
    };
    if opts.verify {
        audit(inst, &outcome)?;
    }
    Ok(SolveReport {
        outcome,
        stats: SolveStats::from_instrument(st.ins, Some(bounds)),
    })
}

impl SolverState<'_> {
    /// Both certificates at the end of an infeasible Stage I, over the
    /// preprocessed instance.
    pub fn certificates(&self) -> Infeasibility {
        let (n, g) = (self.inst.n(), self.inst.g());
        let bpb = self.bang_per_buck();
        let active = self.active_buyers_list();
        let mu: Q = active.iter().map(|&i| Q::one() / &bpb.gamma[i]).sum();
        let mut y = vec![Q::zero(); n];
        for &i in &active {
            y[i] = Q::one() / (&mu * &bpb.gamma[i]);
        }
        let z = (0..g)
            .map(|j| {
                if self.active_goods[j] {
                    &self.p[j] / &mu
                } else {
                    Q::zero()
                }
            })
            .collect();
        let convex_dual = ConvexDualCertificate {
            buyers: (0..n).filter(|&i| !self.active_buyers[i]).collect(),
            goods: (0..g).filter(|&j| !self.active_goods[j]).collect(),
            p: self.p.clone(),
        };
        Infeasibility {
            lp_dual: LpDualCertificate { y, z },
            convex_dual,
        }
    }
}

/// A buyer who wants nothing can never beat the disagreement point.
fn zero_buyer_certificates(inst: &BargainingInstance, k: usize) -> Infeasibility {
    let (n, g) = (inst.n(), inst.g());
    let mut y = vec![Q::zero(); n];
    y[k] = Q::one();
    Infeasibility {
        lp_dual: LpDualCertificate {
            y,
            z: vec![Q::zero(); g],
        },
        convex_dual: ConvexDualCertificate {
            buyers: (0..n).filter(|&i| i != k).collect(),
            goods: (0..g).collect(),
            p: vec![Q::one(); g],
        },
    }
}

/// Maps certificates over the preprocessed goods back to the original ones.
/// Removed goods get `z = 0` and join the frozen side at price one.
fn expand_certificates(cert: Infeasibility, report: &PreprocessReport, g0: usize) -> Infeasibility {
    let mut goods: Vec<usize> = cert
        .convex_dual
        .goods
        .iter()
        .map(|&k| report.kept_goods[k])
        .chain(report.removed_goods.iter().copied())
        .collect();
    goods.sort_unstable();
    Infeasibility {
        lp_dual: LpDualCertificate {
            y: cert.lp_dual.y,
            z: report.expand_goods(g0, &cert.lp_dual.z, Q::zero()),
        },
        convex_dual: ConvexDualCertificate {
            buyers: cert.convex_dual.buyers,
            goods,
            p: report.expand_goods(g0, &cert.convex_dual.p, Q::one()),
        },
    }
}

/// Re-verifies an outcome against the original instance with the
/// independent checkers.
pub fn audit(inst: &BargainingInstance, outcome: &Outcome) -> Result<()> {
    match outcome {
        Outcome::Infeasible(cert) => {
            if !verify_lp_dual(inst, &cert.lp_dual) {
                return Err(AdnbError::Invariant("LP dual certificate fails".into()));
            }
            if !verify_convex_dual(inst, &cert.convex_dual) {
                return Err(AdnbError::Invariant("convex dual certificate fails".into()));
            }
        }
        Outcome::Feasible(sol) => {
            if !check_kkt(inst, &sol.p, &sol.x) {
                return Err(AdnbError::Invariant("solution fails the KKT conditions".into()));
            }
            if utilities(inst, &sol.x) != sol.v {
                return Err(AdnbError::Invariant("reported utilities do not match x".into()));
            }
            let (reduced, report) = preprocess(inst)?;
            let pick = |v: &[Q]| -> Vec<Q> { report.kept_goods.iter().map(|&j| v[j].clone()).collect() };
            if !matches!(check_equilibrium(&reduced, &pick(&sol.p)), EquilibriumCheck::Yes(_)) {
                return Err(AdnbError::Invariant("prices are not an equilibrium".into()));
            }
            if !check_feasibility_witness(&reduced, &pick(&sol.feasible_prices)) {
                return Err(AdnbError::Invariant("Stage I prices are not feasible".into()));
            }
        }
    }
    Ok(())
}
