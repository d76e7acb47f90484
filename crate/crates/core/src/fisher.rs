//! Linear Fisher markets with fixed budgets.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::engine::{
    Counters, Instrument, MoneyModel, PhaseEnd, PhaseRecord, RaiseEngine, Stage, TraceRecord,
};
use crate::error::{AdnbError, Result};
use crate::flownet::{BangPerBuck, Flow, EqNetwork};
use crate::instance::{BargainingInstance, L1Config};
use crate::rational::{self, lcm_of_denominators, log2_ceil_bits, q, qu, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FisherMarket {
    pub u: Vec<Vec<u64>>,
    pub m: Vec<Q>,
}

impl FisherMarket {
    pub fn new(u: Vec<Vec<u64>>, m: Vec<Q>) -> Result<Self> {
        let inst = BargainingInstance::new(u.clone(), vec![Q::zero(); m.len()])?;
        if inst.u.iter().any(|r| r.iter().all(|&x| x == 0))
            || (0..inst.g()).any(|j| inst.u.iter().all(|r| r[j] == 0))
        {
            return Err(AdnbError::InvalidArgument(
                "every buyer and every good needs a positive utility".into(),
            ));
        }
        if m.iter().any(|x| !x.is_positive()) {
            return Err(AdnbError::InvalidArgument("budgets must be positive".into()));
        }
        Ok(FisherMarket { u, m })
    }

    pub fn unit_money(u: Vec<Vec<u64>>) -> Result<Self> {
        let n = u.len();
        FisherMarket::new(u, vec![q(1); n])
    }

    fn as_instance(&self) -> BargainingInstance {
        BargainingInstance {
            u: self.u.clone(),
            c: vec![Q::zero(); self.m.len()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FisherOutcome {
    pub p: Vec<Q>,
    /// `x[i][j]`: amount of good `j` bought by buyer `i`.
    pub x: Vec<Vec<Q>>,
    pub initial_p: Vec<Q>,
    pub instrument: Instrument,
}

impl FisherOutcome {
    pub fn counters(&self) -> Counters {
        self.instrument.counters
    }

    pub fn phases(&self) -> &[PhaseRecord] {
        &self.instrument.phases
    }
}

/// Start prices: `min_i m_i / g` everywhere, then each good that is nobody's
/// maximum bang-per-buck good is lowered until it is.
pub fn initial_prices(market: &FisherMarket) -> Vec<Q> {
    let g = market.u.first().map_or(0, Vec::len);
    let start = market.m.iter().min().cloned().unwrap_or_else(Q::zero) / q(g as i64);
    let mut p = vec![start; g];
    let goods: Vec<usize> = (0..g).collect();
    let inst = market.as_instance();
    let bpb = BangPerBuck::compute(&inst, &p, &goods);
    for (j, pj) in p.iter_mut().enumerate() {
        if bpb.sets.iter().any(|s| s.contains(&j)) {
            continue;
        }
        let best = (0..market.m.len())
            .filter(|&i| market.u[i][j] > 0)
            .map(|i| qu(market.u[i][j]) / &bpb.gamma[i])
            .max()
            .expect("good has an interested buyer");
        *pj = best;
    }
    p
}

/// Safety cap on phases: four times a DPSV-style bound
/// `n^2 g (log n + n log U + log M + log den(m))`.
pub fn phase_cap(market: &FisherMarket) -> usize {
    let n = market.m.len() as u64;
    let g = market.u.first().map_or(0, Vec::len) as u64;
    let u_max = market.u.iter().flatten().copied().max().unwrap_or(1);
    let m_max = market.m.iter().max().cloned().unwrap_or_else(|| q(1));
    let den = Q::from_integer(lcm_of_denominators(&market.m));
    let logs = log2_ceil_bits(&q(n as i64))
        + n * log2_ceil_bits(&qu(u_max))
        + log2_ceil_bits(&m_max)
        + log2_ceil_bits(&den);
    (4 * n * n * g.max(1) * logs) as usize
}

pub fn fisher_equilibrium(market: &FisherMarket) -> Result<FisherOutcome> {
    fisher_equilibrium_with(market, Instrument::new(false, 0))
}

pub fn fisher_equilibrium_with(market: &FisherMarket, ins: Instrument) -> Result<FisherOutcome> {
    fisher_equilibrium_from(market, initial_prices(market), ins)
}

/// Runs from `p0`, which must leave every good sellable in full (for
/// example an equilibrium for budgets no larger than `market.m`).
pub fn fisher_equilibrium_from(market: &FisherMarket, p0: Vec<Q>, mut ins: Instrument) -> Result<FisherOutcome> {
    let inst = market.as_instance();
    let mut engine = RaiseEngine::new(&inst, p0.clone(), MoneyModel::Fixed(market.m.clone()), Stage::Fisher);
    let cap = phase_cap(market);
    let g = inst.g();
    let start_phases = ins.counters.phases;
    loop {
        if ins.counters.phases - start_phases > cap {
            return Err(AdnbError::BoundExceeded(format!("Fisher solver exceeded {cap} phases")));
        }
        match engine.phase(&mut ins, 4 * g.max(1))? {
            PhaseEnd::Done => break,
            PhaseEnd::Tight(_) => {}
        }
    }
    for rec in ins.phases.iter().filter(|r| r.stage == Stage::Fisher) {
        if rec.iterations > g {
            ins.violations.push(format!(
                "Fisher phase {} used {} iterations (> g = {g})",
                rec.phase, rec.iterations
            ));
        }
    }
    let (net, bal) = engine.final_flow(&mut ins);
    let x = allocation(&net, &bal.flow, inst.n(), g, &engine.p);
    Ok(FisherOutcome {
        p: engine.p,
        x,
        initial_p: p0,
        instrument: ins,
    })
}

/// `x_ij = f(j, i) / p_j` over a network spanning all goods and buyers.
pub fn allocation(net: &EqNetwork, flow: &Flow, n: usize, g: usize, p: &[Q]) -> Vec<Vec<Q>> {
    let mut x = vec![vec![Q::zero(); g]; n];
    for (f, &(k, l)) in flow.edge.iter().zip(&net.edges) {
        let (j, i) = (net.goods[k], net.buyers[l]);
        x[i][j] += f / &p[j];
    }
    x
}

#[derive(Debug, Clone, Serialize)]
pub struct L1Report {
    /// Decrease of the total surplus over the phase.
    #[serde(with = "rational::text")]
    pub l1_drop: Q,
    /// `phi_end / phi_start` for the sum of squared surpluses.
    #[serde(with = "rational::text")]
    pub l2_ratio: Q,
    #[serde(with = "rational::text")]
    pub l1_start: Q,
    #[serde(with = "rational::text")]
    pub l2_start: Q,
    pub events: Vec<TraceRecord>,
    pub iterations: usize,
    /// For each iteration that added edges, the `(good, buyer)` pairs added.
    pub edge_order: Vec<Vec<(usize, usize)>>,
    pub tight_set: Vec<usize>,
}

/// Runs exactly one raising phase from the configuration's state.
pub fn measure_l1_vs_l2(cfg: &L1Config) -> Result<L1Report> {
    let inst = BargainingInstance {
        u: cfg.u.clone(),
        c: vec![Q::zero(); cfg.m.len()],
    };
    let engine = RaiseEngine::new(&inst, cfg.p.clone(), MoneyModel::Fixed(cfg.m.clone()), Stage::Fisher);
    if !engine.invariant_holds() {
        return Err(AdnbError::Invariant(
            "configuration prices violate the min-cut invariant".into(),
        ));
    }
    let mut engine = engine;
    let mut ins = Instrument::new(true, 1);
    let g = inst.g();
    let end = engine.phase(&mut ins, 4 * g)?;
    let tight_set = match end {
        PhaseEnd::Tight(s) => s,
        PhaseEnd::Done => Vec::new(),
    };
    let rec = ins
        .phases
        .last()
        .cloned()
        .ok_or_else(|| AdnbError::InvalidArgument("configuration has no surplus".into()))?;
    let edge_order = ins
        .trace
        .iter()
        .filter(|t| t.event.starts_with("edges"))
        .map(|t| parse_pairs(&t.event))
        .collect();
    Ok(L1Report {
        l1_drop: &rec.l1_start - &rec.l1_end,
        l2_ratio: rec.ratio().unwrap_or_else(Q::zero),
        l1_start: rec.l1_start,
        l2_start: rec.phi_start,
        iterations: rec.iterations,
        events: ins.trace,
        edge_order,
        tight_set,
    })
}

fn parse_pairs(event: &str) -> Vec<(usize, usize)> {
    let digits: Vec<usize> = event
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().expect("digits"))
        .collect();
    digits.chunks(2).map(|c| (c[0], c[1])).collect()
}

/// Largest denominator among the given prices.
pub fn max_denominator<'a>(prices: impl IntoIterator<Item = &'a Q>) -> BigInt {
    prices
        .into_iter()
        .map(|p| p.denom().clone())
        .max()
        .unwrap_or_else(|| BigInt::from(1))
}
