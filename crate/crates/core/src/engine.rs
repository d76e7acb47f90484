//! Price-raising phases shared by the fixed-money Fisher solver and the
//! second stage of the bargaining solver.
//!
//! A phase takes the buyers of largest surplus `I` and the goods they want
//! `J`, then multiplies the prices in `J` by a factor `x > 1` until either a
//! good outside `J` becomes maximum bang-per-buck for some buyer in `I` (an
//! iteration ends, `I` and `J` grow) or a subset of `J` goes tight (the phase
//! ends).

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::balanced::{balanced_flow, verify_property1, Balanced, Surplus};
use crate::error::{AdnbError, Result};
use crate::flownet::{
    max_flow, residual_reaching, BangPerBuck, EqNetwork, Flow, Mode,
};
use crate::instance::BargainingInstance;
use crate::rational::{self, q, qu, sum_q, Q};

/// Debug check level from `ADNB_CHECK` (0 = off, 1 = per phase, 2 = per event).
pub fn check_level_from_env() -> u8 {
    std::env::var("ADNB_CHECK")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub phases: usize,
    pub iterations: usize,
    pub maxflows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    One,
    Two,
    Fisher,
}

/// One line of the event trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub stage: Stage,
    pub phase: usize,
    pub iteration: usize,
    #[serde(with = "rational::text")]
    pub x: Q,
    pub event: String,
    #[serde(with = "rational::text")]
    pub l1: Q,
    #[serde(with = "rational::text")]
    pub l2: Q,
    /// Prices right after the event.
    #[serde(with = "rational::text_vec")]
    pub p: Vec<Q>,
}

/// Potential before and after one phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseRecord {
    pub stage: Stage,
    pub phase: usize,
    pub iterations: usize,
    #[serde(with = "rational::text")]
    pub phi_start: Q,
    #[serde(with = "rational::text")]
    pub phi_end: Q,
    #[serde(with = "rational::text")]
    pub l1_start: Q,
    #[serde(with = "rational::text")]
    pub l1_end: Q,
    pub end: String,
}

impl PhaseRecord {
    /// `phi_end / phi_start`, or `None` when the phase started at zero.
    pub fn ratio(&self) -> Option<Q> {
        (!self.phi_start.is_zero()).then(|| &self.phi_end / &self.phi_start)
    }
}

/// A tight set found at the end of a raising phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TightEvent {
    pub stage: Stage,
    pub phase: usize,
    pub goods: Vec<usize>,
    #[serde(with = "rational::text_vec")]
    pub prices: Vec<Q>,
}

/// Counters, phase records, events and optional trace shared by all stages.
#[derive(Debug, Clone, Default)]
pub struct Instrument {
    pub counters: Counters,
    pub phases: Vec<PhaseRecord>,
    pub tight: Vec<TightEvent>,
    pub trace: Vec<TraceRecord>,
    pub keep_trace: bool,
    pub check: u8,
    /// Predicates that fired to end Stage I iterations, in order.
    pub stage1_exits: Vec<String>,
    /// Largest number of iterations seen in one phase, per stage.
    pub max_iterations: [usize; 4],
    /// Checks that failed during the run (bounds that are measured, not
    /// enforced).
    pub violations: Vec<String>,
}

impl Instrument {
    pub fn new(keep_trace: bool, check: u8) -> Self {
        Instrument {
            keep_trace,
            check,
            ..Default::default()
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn event(
        &mut self,
        stage: Stage,
        phase: usize,
        iteration: usize,
        x: &Q,
        event: String,
        s: &Surplus,
        p: &[Q],
    ) {
        if self.keep_trace {
            self.trace.push(TraceRecord {
                stage,
                phase,
                iteration,
                x: x.clone(),
                event,
                l1: s.l1(),
                l2: s.l2(),
                p: p.to_vec(),
            });
        }
    }

    pub fn note_iterations(&mut self, stage: Stage, count: usize) {
        let slot = &mut self.max_iterations[stage as usize];
        *slot = (*slot).max(count);
    }

    pub fn balanced(&mut self, net: &EqNetwork) -> Balanced {
        let b = balanced_flow(net);
        self.counters.maxflows += b.maxflows;
        b
    }
}

/// Buyer budgets: fixed, or `1 + alpha_i` with `alpha_i = c_i / gamma_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoneyModel {
    Fixed(Vec<Q>),
    Flexible { c: Vec<Q>, alpha: Vec<Q> },
}

impl MoneyModel {
    pub fn money(&self) -> Vec<Q> {
        match self {
            MoneyModel::Fixed(m) => m.clone(),
            MoneyModel::Flexible { alpha, .. } => alpha.iter().map(|a| a + q(1)).collect(),
        }
    }

    fn scale(&mut self, buyers: &[bool], x: &Q) {
        if let MoneyModel::Flexible { alpha, .. } = self {
            for (a, _) in alpha.iter_mut().zip(buyers).filter(|(_, &b)| b) {
                *a *= x;
            }
        }
    }

    fn mode(&self) -> Mode {
        match self {
            MoneyModel::Fixed(_) => Mode::Fixed,
            MoneyModel::Flexible { .. } => Mode::Flexible,
        }
    }
}

/// How a raising phase ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseEnd {
    /// Every buyer has zero surplus; nothing to do.
    Done,
    Tight(Vec<usize>),
}

/// Edges present in the pruned network, `(good, buyer)`.
pub type EdgeSet = BTreeSet<(usize, usize)>;

pub fn full_edges(bpb: &BangPerBuck) -> EdgeSet {
    bpb.sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&j| (j, i)))
        .collect()
}

pub struct RaiseEngine<'a> {
    pub inst: &'a BargainingInstance,
    pub p: Vec<Q>,
    pub money: MoneyModel,
    pub edges: EdgeSet,
    pub stage: Stage,
}

impl<'a> RaiseEngine<'a> {
    pub fn new(inst: &'a BargainingInstance, p: Vec<Q>, money: MoneyModel, stage: Stage) -> Self {
        let goods: Vec<usize> = (0..inst.g()).collect();
        let bpb = BangPerBuck::compute(inst, &p, &goods);
        RaiseEngine {
            inst,
            edges: full_edges(&bpb),
            p,
            money,
            stage,
        }
    }

    pub fn network(&self) -> EqNetwork {
        let (n, g) = (self.inst.n(), self.inst.g());
        EqNetwork::new(
            (0..g).collect(),
            (0..n).collect(),
            self.p.clone(),
            self.money.money(),
            self.edges.iter().copied().collect(),
            self.money.mode(),
        )
    }

    /// Restores the full maximum bang-per-buck edge set at current prices.
    pub fn resync(&mut self) -> Result<()> {
        let goods: Vec<usize> = (0..self.inst.g()).collect();
        let bpb = BangPerBuck::compute(self.inst, &self.p, &goods);
        if let MoneyModel::Flexible { c, alpha } = &self.money {
            let expect: Vec<Q> = c.iter().zip(&bpb.gamma).map(|(c, g)| c / g).collect();
            if &expect != alpha {
                return Err(AdnbError::Invariant("alpha_i != c_i / gamma_i".into()));
            }
        }
        self.edges = full_edges(&bpb);
        Ok(())
    }

    /// The source cut is a minimum cut (all goods can be sold in full).
    pub fn invariant_holds(&self) -> bool {
        let net = self.network();
        max_flow(&net).flow.value == net.total_supply()
    }

    fn scale(&mut self, goods: &[bool], buyers: &[bool], x: &Q) {
        for (p, _) in self.p.iter_mut().zip(goods).filter(|(_, &j)| j) {
            *p *= x;
        }
        self.money.scale(buyers, x);
    }

    fn goods_of(&self, buyers: &[bool]) -> Vec<bool> {
        let mut j = vec![false; self.inst.g()];
        for &(good, buyer) in &self.edges {
            if buyers[buyer] {
                j[good] = true;
            }
        }
        j
    }

    /// Removes edges from goods in `goods` to buyers outside `buyers`. They
    /// must carry no flow. Returns the smaller network and the same flow on it.
    fn prune(&mut self, goods: &[bool], buyers: &[bool], net: &EqNetwork, flow: &Flow) -> Result<(EqNetwork, Flow)> {
        let mut kept = Vec::new();
        for (e, &(j, i)) in net.edges.iter().enumerate() {
            if goods[j] && !buyers[i] && self.edges.contains(&(j, i)) {
                if flow.edge[e].is_positive() {
                    return Err(AdnbError::Invariant(format!(
                        "pruned edge ({j},{i}) carries flow"
                    )));
                }
                self.edges.remove(&(j, i));
            } else {
                kept.push(flow.edge[e].clone());
            }
        }
        let pruned = self.network();
        debug_assert_eq!(pruned.edges.len(), kept.len());
        let flow = Flow {
            edge: kept,
            value: flow.value.clone(),
        };
        Ok((pruned, flow))
    }

    /// Smallest factor above 1 at which some good outside `J` becomes maximum
    /// bang-per-buck for a buyer in `I`, with all pairs attaining it.
    fn edge_event(&self, goods: &[bool], buyers: &[bool]) -> Option<(Q, Vec<(usize, usize)>)> {
        let all: Vec<usize> = (0..self.inst.g()).collect();
        let gamma = BangPerBuck::compute(self.inst, &self.p, &all).gamma;
        let mut best: Option<(Q, Vec<(usize, usize)>)> = None;
        for i in (0..self.inst.n()).filter(|&i| buyers[i]) {
            for j in (0..self.inst.g()).filter(|&j| !goods[j]) {
                let u = self.inst.u[i][j];
                if u == 0 {
                    continue;
                }
                let x = &gamma[i] * &self.p[j] / qu(u);
                match &mut best {
                    Some((bx, pairs)) if x == *bx => pairs.push((j, i)),
                    Some((bx, _)) if x > *bx => {}
                    _ => best = Some((x, vec![(j, i)])),
                }
            }
        }
        best
    }

    /// Smallest factor at which a subset of `J` goes tight, and that subset.
    fn tight_event(
        &self,
        goods: &[bool],
        buyers: &[bool],
        bal: &Balanced,
        net: &EqNetwork,
        ins: &mut Instrument,
    ) -> Result<(Q, Vec<usize>)> {
        match &self.money {
            MoneyModel::Flexible { .. } => {
                let mut b: Option<Q> = None;
                for i in (0..self.inst.n()).filter(|&i| buyers[i]) {
                    let beta = &bal.surplus.beta[i];
                    if !beta.is_negative() {
                        return Err(AdnbError::Invariant(format!(
                            "buyer {i} in I has nonnegative 1-surplus"
                        )));
                    }
                    let r = -q(1) / beta;
                    if b.as_ref().is_none_or(|v| r < *v) {
                        b = Some(r);
                    }
                }
                let b = b.expect("I is nonempty");
                let t: Vec<bool> = (0..self.inst.n())
                    .map(|i| buyers[i] && -q(1) / &bal.surplus.beta[i] == b)
                    .collect();
                let mut s = vec![false; self.inst.g()];
                for (e, &(j, i)) in net.edges.iter().enumerate() {
                    if t[i] && goods[j] && bal.flow.edge[e].is_positive() {
                        s[j] = true;
                    }
                }
                Ok((b, (0..self.inst.g()).filter(|&j| s[j]).collect()))
            }
            MoneyModel::Fixed(m) => {
                let js: Vec<usize> = (0..self.inst.g()).filter(|&j| goods[j]).collect();
                let is: Vec<usize> = (0..self.inst.n()).filter(|&i| buyers[i]).collect();
                let mut edges = Vec::new();
                for &(j, i) in &self.edges {
                    if goods[j] && buyers[i] {
                        let k = js.binary_search(&j).expect("good in J");
                        let l = is.binary_search(&i).expect("buyer in I");
                        edges.push((k, l));
                    }
                }
                let demand: Vec<Q> = is.iter().map(|&i| m[i].clone()).collect();
                let base: Vec<Q> = js.iter().map(|&j| self.p[j].clone()).collect();
                let mut x = sum_q(&demand) / sum_q(&base);
                loop {
                    let supply = base.iter().map(|p| p * &x).collect();
                    let sub = EqNetwork::new(js.clone(), is.clone(), supply, demand.clone(), edges.clone(), Mode::Fixed);
                    let mf = max_flow(&sub);
                    ins.counters.maxflows += 1;
                    if mf.flow.value == sub.total_supply() {
                        let set = (0..js.len())
                            .filter(|&k| mf.max_source_side.goods[k])
                            .map(|k| js[k])
                            .collect();
                        return Ok((x, set));
                    }
                    let side = &mf.min_source_side;
                    let mut nbrs = vec![false; is.len()];
                    for &(k, l) in &sub.edges {
                        if side.goods[k] {
                            nbrs[l] = true;
                        }
                    }
                    let price: Q = (0..js.len()).filter(|&k| side.goods[k]).map(|k| &base[k]).sum();
                    let money: Q = (0..is.len()).filter(|&l| nbrs[l]).map(|l| &demand[l]).sum();
                    let next = money / price;
                    if next >= x {
                        return Err(AdnbError::Invariant("tight-set search did not decrease".into()));
                    }
                    x = next;
                }
            }
        }
    }

    fn check_event(&self, bal: &Balanced, net: &EqNetwork, ins: &Instrument) -> Result<()> {
        if ins.check >= 2 {
            if max_flow(net).flow.value != net.total_supply() {
                return Err(AdnbError::Invariant("source cut is not a minimum cut".into()));
            }
            if !verify_property1(net, &bal.flow)? {
                return Err(AdnbError::Invariant("balanced flow lets surplus reach a richer buyer".into()));
            }
        }
        Ok(())
    }

    /// Runs one phase. Returns `Done` without counting a phase when every
    /// surplus is already zero.
    pub fn phase(&mut self, ins: &mut Instrument, iteration_cap: usize) -> Result<PhaseEnd> {
        self.resync()?;
        let net = self.network();
        let bal = ins.balanced(&net);
        if bal.surplus.theta.iter().all(Zero::is_zero) {
            return Ok(PhaseEnd::Done);
        }
        if ins.check >= 1 && !self.invariant_holds() {
            return Err(AdnbError::Invariant("source cut is not a minimum cut".into()));
        }
        self.check_event(&bal, &net, ins)?;
        ins.counters.phases += 1;
        let phase = ins.counters.phases;
        let phi_start = bal.surplus.l2();
        let l1_start = bal.surplus.l1();
        let top = bal.surplus.max_theta().cloned().expect("buyers exist");
        let mut buyers: Vec<bool> = bal.surplus.theta.iter().map(|t| *t == top).collect();
        let mut goods = self.goods_of(&buyers);
        let (mut net, flow) = self.prune(&goods, &buyers, &net, &bal.flow)?;
        ins.event(self.stage, phase, 0, &Q::one(), "phase_start".into(), &bal.surplus, &self.p);

        let mut bal = Balanced { flow, ..bal };
        let mut iteration = 0usize;
        loop {
            iteration += 1;
            ins.counters.iterations += 1;
            if iteration > iteration_cap {
                return Err(AdnbError::BoundExceeded(format!(
                    "{:?} phase {phase} exceeded {iteration_cap} iterations",
                    self.stage
                )));
            }
            if ins.check >= 1 && self.money.mode() == Mode::Flexible {
                self.check_outside_edges(&goods, &buyers, &net)?;
            }
            let edge = self.edge_event(&goods, &buyers);
            let (x_tight, set) = self.tight_event(&goods, &buyers, &bal, &net, ins)?;
            let tight_first = edge.as_ref().is_none_or(|(x, _)| x_tight <= *x);
            if tight_first {
                self.scale(&goods, &buyers, &x_tight);
                let net_end = self.network();
                let end = ins.balanced(&net_end);
                for &j in &set {
                    let zero = net_end
                        .edges
                        .iter()
                        .filter(|&&(k, _)| k == j)
                        .all(|&(_, i)| end.surplus.theta[i].is_zero());
                    if !zero {
                        return Err(AdnbError::Invariant(format!(
                            "good {j} reported tight but a neighbour keeps surplus"
                        )));
                    }
                }
                ins.event(self.stage, phase, iteration, &x_tight, format!("tight {set:?}"), &end.surplus, &self.p);
                ins.tight.push(TightEvent {
                    stage: self.stage,
                    phase,
                    prices: set.iter().map(|&j| self.p[j].clone()).collect(),
                    goods: set.clone(),
                });
                ins.note_iterations(self.stage, iteration);
                ins.phases.push(PhaseRecord {
                    stage: self.stage,
                    phase,
                    iterations: iteration,
                    phi_start,
                    phi_end: end.surplus.l2(),
                    l1_start,
                    l1_end: end.surplus.l1(),
                    end: "tight".into(),
                });
                return Ok(PhaseEnd::Tight(set));
            }
            let (x, pairs) = edge.expect("edge event chosen");
            self.scale(&goods, &buyers, &x);
            for &(j, i) in &pairs {
                self.edges.insert((j, i));
            }
            net = self.network();
            bal = ins.balanced(&net);
            self.check_event(&bal, &net, ins)?;
            ins.event(self.stage, phase, iteration, &x, format!("edges {pairs:?}"), &bal.surplus, &self.p);
            let reach = residual_reaching(&net, &bal.flow, &buyers);
            buyers = reach;
            goods = self.goods_of(&buyers);
            (net, bal.flow) = self.prune(&goods, &buyers, &net, &bal.flow)?;
        }
    }

    /// Every buyer outside `I` still has an edge from a good outside `J`.
    fn check_outside_edges(&self, goods: &[bool], buyers: &[bool], net: &EqNetwork) -> Result<()> {
        for i in (0..self.inst.n()).filter(|&i| !buyers[i]) {
            if !net.edges.iter().any(|&(j, b)| b == i && !goods[j]) {
                return Err(AdnbError::Invariant(format!(
                    "buyer {i} outside I has no edge from outside J"
                )));
            }
        }
        Ok(())
    }

    /// Balanced flow in the current network and the resulting allocation.
    pub fn final_flow(&self, ins: &mut Instrument) -> (EqNetwork, Balanced) {
        let net = self.network();
        let bal = ins.balanced(&net);
        (net, bal)
    }
}
