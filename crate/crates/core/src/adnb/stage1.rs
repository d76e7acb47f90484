//! Stage I: lower prices of goods wanted only by the buyers of smallest
//! 1-surplus until every buyer's surplus is below one, or until the total
//! 1-surplus of the active buyers shows that no outcome beats the
//! disagreement point.

use num_traits::{Signed, Zero};

use super::state::{FrozenBlock, SolverState};
use crate::balanced::Surplus;
use crate::engine::{PhaseRecord, Stage};
use crate::error::{AdnbError, Result};
use crate::flownet::{residual_reachable, BangPerBuck};
use crate::instance::BargainingInstance;
use crate::rational::{qu, sum_q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

/// `sum of beta_i^2` over buyers with negative 1-surplus.
pub fn stage1_potential(s: &Surplus) -> Q {
    s.beta.iter().filter(|b| b.is_negative()).map(|b| b * b).sum()
}

fn flags(len: usize, members: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut out = vec![false; len];
    members.into_iter().for_each(|i| out[i] = true);
    out
}

/// Largest factor at which a good in `goods` becomes maximum bang-per-buck
/// for one of the `outside` buyers when the prices of `goods` are multiplied
/// by it, with every `(good, buyer)` pair attaining it.
pub fn stage1_event_x(
    inst: &BargainingInstance,
    p: &[Q],
    gamma: &[Q],
    outside: &[usize],
    goods: &[usize],
) -> Option<(Q, Vec<(usize, usize)>)> {
    let mut best: Option<(Q, Vec<(usize, usize)>)> = None;
    for &i in outside {
        for &j in goods.iter().filter(|&&j| inst.u[i][j] > 0) {
            let x = qu(inst.u[i][j]) / (&p[j] * &gamma[i]);
            match &mut best {
                Some((bx, pairs)) if x == *bx => pairs.push((j, i)),
                Some((bx, _)) if x < *bx => {}
                _ => best = Some((x, vec![(j, i)])),
            }
        }
    }
    best
}

impl SolverState<'_> {
    /// Goods adjacent to `buyers` and to no other active buyer.
    fn exclusive_goods(&self, buyers: &[bool]) -> Vec<bool> {
        let g = self.inst.g();
        let mut mine = vec![false; g];
        let mut theirs = vec![false; g];
        for &(j, i) in &self.edges {
            if !self.active_goods[j] || !self.active_buyers[i] {
                continue;
            }
            if buyers[i] {
                mine[j] = true;
            } else {
                theirs[j] = true;
            }
        }
        (0..g).map(|j| mine[j] && !theirs[j]).collect()
    }

    fn desire(&self, buyers: &[bool], goods: &[bool]) -> bool {
        self.active_buyers_list().into_iter().filter(|&i| !buyers[i]).any(|i| {
            (0..self.inst.g()).any(|j| goods[j] && self.inst.u[i][j] > 0)
        })
    }

    fn stage1_event(&self, buyers: &[bool], goods: &[bool], bpb: &BangPerBuck) -> Result<(Q, Vec<(usize, usize)>)> {
        let outside: Vec<usize> = self.active_buyers_list().into_iter().filter(|&i| !buyers[i]).collect();
        let inside: Vec<usize> = (0..self.inst.g()).filter(|&j| goods[j]).collect();
        let (x, pairs) = stage1_event_x(self.inst, &self.p, &bpb.gamma, &outside, &inside)
            .ok_or_else(|| AdnbError::Invariant("no edge can enter".into()))?;
        if x >= Q::from_integer(1.into()) || !x.is_positive() {
            return Err(AdnbError::Invariant(format!("stage I factor {x} outside (0, 1)")));
        }
        Ok((x, pairs))
    }

    pub(crate) fn stage1_iteration_bound(&self) -> usize {
        self.inst.n() * self.inst.g()
    }

    /// Runs Stage I to its verdict. On `Feasible` the frozen blocks are still
    /// set aside; [`SolverState::restore`] brings them back.
    pub fn stage1(&mut self, phase_cap: usize) -> Result<Verdict> {
        let (n, g) = (self.inst.n(), self.inst.g());
        let bound = self.stage1_iteration_bound();
        let mut pending: Option<PhaseRecord> = None;
        let mut phases = 0usize;
        loop {
            self.resync()?;
            let (net, bal) = self.balance()?;
            // Surplus by original buyer id; inactive buyers stay at zero.
            let mut beta = vec![Q::zero(); n];
            for (l, &i) in net.buyers.iter().enumerate() {
                beta[i] = bal.surplus.beta[l].clone();
            }
            if let Some(mut rec) = pending.take() {
                rec.phi_end = stage1_potential(&bal.surplus);
                rec.l1_end = bal.surplus.l1();
                self.ins.phases.push(rec);
            }
            if net.buyers.is_empty() || bal.surplus.beta.iter().all(Signed::is_negative) {
                return Ok(Verdict::Feasible);
            }
            if !sum_q(&bal.surplus.beta).is_negative() {
                return Ok(Verdict::Infeasible);
            }
            phases += 1;
            self.ins.counters.phases += 1;
            if phases > phase_cap {
                return Err(AdnbError::BoundExceeded(format!(
                    "stage I exceeded {phase_cap} phases"
                )));
            }
            let phase = self.ins.counters.phases;
            let phi_start = stage1_potential(&bal.surplus);
            let l1_start = bal.surplus.l1();
            self.ins.event(Stage::One, phase, 0, &Q::from_integer(1.into()), "phase_start".into(), &bal.surplus, &self.p);

            let low = net.buyers.iter().map(|&i| &beta[i]).min().cloned().expect("buyers exist");
            let mut buyers = flags(n, net.buyers.iter().copied().filter(|&i| beta[i] == low));
            let mut goods = self.exclusive_goods(&buyers);
            let (mut net, _) = {
                let (b, gd) = (buyers.clone(), goods.clone());
                self.prune(&net, &bal.flow, |j, i| !(b[i] && !gd[j]))?
            };
            let mut iteration = 0usize;
            let frozen = loop {
                let cond_a = self.desire(&buyers, &goods);
                let cond_b = (0..n).all(|i| !buyers[i] || beta[i].is_negative());
                if !(cond_a && cond_b) {
                    let why = match (cond_a, cond_b) {
                        (false, false) => "no_desire+surplus",
                        (false, true) => "no_desire",
                        _ => "surplus",
                    };
                    self.ins.stage1_exits.push(why.into());
                    break !cond_a && cond_b;
                }
                iteration += 1;
                self.ins.counters.iterations += 1;
                if iteration > 4 * bound {
                    return Err(AdnbError::BoundExceeded(format!(
                        "stage I phase {phase} exceeded {} iterations",
                        4 * bound
                    )));
                }
                if self.ins.check >= 1 {
                    self.check_neighbours(&net, &buyers, &goods)?;
                }
                let bpb = self.bang_per_buck();
                let (x, pairs) = self.stage1_event(&buyers, &goods, &bpb)?;
                for j in (0..g).filter(|&j| goods[j]) {
                    self.p[j] *= &x;
                }
                for i in (0..n).filter(|&i| buyers[i]) {
                    self.alpha[i] *= &x;
                }
                self.edges.extend(pairs.iter().copied());
                let (full, bal) = self.balance()?;
                if self.ins.check >= 2 && !crate::balanced::verify_property1(&full, &bal.flow)? {
                    return Err(AdnbError::Invariant("balanced flow lets surplus reach a richer buyer".into()));
                }
                for (l, &i) in full.buyers.iter().enumerate() {
                    beta[i] = bal.surplus.beta[l].clone();
                }
                self.ins.event(Stage::One, phase, iteration, &x, format!("edges {pairs:?}"), &bal.surplus, &self.p);
                let local: Vec<bool> = full.buyers.iter().map(|&i| buyers[i]).collect();
                let (_, reached) = residual_reachable(&full, &bal.flow, &local);
                for (l, &i) in full.buyers.iter().enumerate() {
                    buyers[i] |= reached[l];
                }
                goods = self.exclusive_goods(&buyers);
                let (b, gd) = (buyers.clone(), goods.clone());
                (net, _) = self.prune(&full, &bal.flow, |j, i| !(b[i] && !gd[j]))?;
            };
            self.ins.note_iterations(Stage::One, iteration);
            if iteration > bound {
                self.ins.violations.push(format!(
                    "stage I phase {phase} used {iteration} iterations (> ng = {bound})"
                ));
            }
            if frozen {
                let block = FrozenBlock {
                    buyers: (0..n).filter(|&i| buyers[i]).collect(),
                    goods: (0..g).filter(|&j| goods[j]).collect(),
                };
                for &i in &block.buyers {
                    self.active_buyers[i] = false;
                }
                for &j in &block.goods {
                    self.active_goods[j] = false;
                }
                self.blocks.push(block);
            }
            pending = Some(PhaseRecord {
                stage: Stage::One,
                phase,
                iterations: iteration,
                phi_start,
                phi_end: Q::zero(),
                l1_start,
                l1_end: Q::zero(),
                end: if frozen { "frozen".into() } else { "surplus".into() },
            });
        }
    }

    /// Every buyer in `I` has an edge from a good in `J`.
    fn check_neighbours(&self, net: &crate::flownet::EqNetwork, buyers: &[bool], goods: &[bool]) -> Result<()> {
        for (l, &i) in net.buyers.iter().enumerate() {
            if buyers[i] && !net.edges.iter().any(|&(k, b)| b == l && goods[net.goods[k]]) {
                return Err(AdnbError::Invariant(format!("buyer {i} in I has no edge from J")));
            }
        }
        Ok(())
    }

    /// Brings the frozen blocks back, latest first. A block whose buyers
    /// would now prefer an outside good is scaled down (prices and `alpha`
    /// together) until they no longer do; its 1-surpluses stay negative.
    pub fn restore(&mut self) -> Result<()> {
        let g = self.inst.g();
        for block in self.blocks.clone().iter().rev() {
            let own = flags(g, block.goods.iter().copied());
            let bpb = BangPerBuck::compute(self.inst, &self.p, &block.goods);
            let mut ratio: Option<Q> = None;
            for &i in &block.buyers {
                for j in (0..g).filter(|&j| !own[j] && self.inst.u[i][j] > 0) {
                    let r = &bpb.gamma[i] * &self.p[j] / qu(self.inst.u[i][j]);
                    if ratio.as_ref().is_none_or(|v| r < *v) {
                        ratio = Some(r);
                    }
                }
            }
            if let Some(r) = ratio.filter(|r| *r <= Q::from_integer(1.into())) {
                let y = r / Q::from_integer(2.into());
                for &j in &block.goods {
                    self.p[j] *= &y;
                }
                for &i in &block.buyers {
                    self.alpha[i] *= &y;
                }
            }
        }
        self.active_buyers.iter_mut().for_each(|b| *b = true);
        self.active_goods.iter_mut().for_each(|b| *b = true);
        self.resync()?;
        let (_, bal) = self.balance()?;
        if !bal.surplus.beta.iter().all(Signed::is_negative) {
            return Err(AdnbError::Invariant("restored prices are not feasible".into()));
        }
        Ok(())
    }
}
