use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::balanced::Balanced;
use crate::engine::{EdgeSet, Instrument};
use crate::error::{AdnbError, Result};
use crate::fisher::{fisher_equilibrium_with, FisherMarket};
use crate::flownet::{BangPerBuck, EqNetwork, Flow, Mode};
use crate::instance::BargainingInstance;
use crate::rational::{lcm_of_denominators, q, Q};

/// Buyers and goods set aside during Stage I, with the goods' prices frozen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenBlock {
    pub buyers: Vec<usize>,
    pub goods: Vec<usize>,
}

/// Mutable state of one solver run over a preprocessed instance.
pub struct SolverState<'a> {
    pub inst: &'a BargainingInstance,
    pub p: Vec<Q>,
    /// `alpha_i = c_i / gamma_i`; buyer `i` holds `1 + alpha_i`.
    pub alpha: Vec<Q>,
    pub active_buyers: Vec<bool>,
    pub active_goods: Vec<bool>,
    pub blocks: Vec<FrozenBlock>,
    pub edges: EdgeSet,
    pub mu: BigInt,
    pub ins: Instrument,
}

impl<'a> SolverState<'a> {
    /// Unit-money Fisher equilibrium, then switch to flexible budgets.
    pub fn initialize(inst: &'a BargainingInstance, ins: Instrument) -> Result<Self> {
        let market = FisherMarket::unit_money(inst.u.clone())?;
        let out = fisher_equilibrium_with(&market, ins)?;
        let p = out.p;
        let mu = lcm_of_denominators(&p);
        let mut st = SolverState {
            inst,
            alpha: vec![Q::zero(); inst.n()],
            active_buyers: vec![true; inst.n()],
            active_goods: vec![true; inst.g()],
            blocks: Vec::new(),
            edges: EdgeSet::new(),
            mu,
            ins: out.instrument,
            p,
        };
        let bpb = st.bang_per_buck();
        st.alpha = inst.c.iter().zip(&bpb.gamma).map(|(c, g)| c / g).collect();
        st.resync()?;
        Ok(st)
    }

    pub fn active_goods_list(&self) -> Vec<usize> {
        (0..self.inst.g()).filter(|&j| self.active_goods[j]).collect()
    }

    pub fn active_buyers_list(&self) -> Vec<usize> {
        (0..self.inst.n()).filter(|&i| self.active_buyers[i]).collect()
    }

    /// Bang-per-buck over the active goods.
    pub fn bang_per_buck(&self) -> BangPerBuck {
        BangPerBuck::compute(self.inst, &self.p, &self.active_goods_list())
    }

    pub fn money(&self, i: usize) -> Q {
        &self.alpha[i] + q(1)
    }

    /// Resets the edges to all maximum bang-per-buck pairs among active nodes
    /// and checks that every active budget matches the current prices.
    pub fn resync(&mut self) -> Result<()> {
        let bpb = self.bang_per_buck();
        let mut edges = EdgeSet::new();
        for i in self.active_buyers_list() {
            if self.alpha[i] != &self.inst.c[i] / &bpb.gamma[i] {
                return Err(AdnbError::Invariant(format!("alpha_{i} != c_{i} / gamma_{i}")));
            }
            edges.extend(bpb.sets[i].iter().map(|&j| (j, i)));
        }
        self.edges = edges;
        Ok(())
    }

    /// Network over the active goods and buyers. Node indices are local;
    /// `net.goods` and `net.buyers` hold the original ids.
    pub fn network(&self) -> EqNetwork {
        let goods = self.active_goods_list();
        let buyers = self.active_buyers_list();
        let mut gpos = vec![usize::MAX; self.inst.g()];
        let mut bpos = vec![usize::MAX; self.inst.n()];
        goods.iter().enumerate().for_each(|(k, &j)| gpos[j] = k);
        buyers.iter().enumerate().for_each(|(l, &i)| bpos[i] = l);
        let edges = self
            .edges
            .iter()
            .filter(|&&(j, i)| self.active_goods[j] && self.active_buyers[i])
            .map(|&(j, i)| (gpos[j], bpos[i]))
            .collect();
        EqNetwork::new(
            goods.clone(),
            buyers.clone(),
            goods.iter().map(|&j| self.p[j].clone()).collect(),
            buyers.iter().map(|&i| self.money(i)).collect(),
            edges,
            Mode::Flexible,
        )
    }

    /// Balanced flow in the active network; the source cut must be minimum.
    pub fn balance(&mut self) -> Result<(EqNetwork, Balanced)> {
        let net = self.network();
        let bal = self.ins.balanced(&net);
        if bal.flow.value != net.total_supply() {
            return Err(AdnbError::Invariant("source cut is not a minimum cut".into()));
        }
        Ok((net, bal))
    }

    /// Drops the edges rejected by `keep`, which must carry no flow, and
    /// returns the smaller network with the flow carried over.
    pub fn prune(
        &mut self,
        net: &EqNetwork,
        flow: &Flow,
        keep: impl Fn(usize, usize) -> bool,
    ) -> Result<(EqNetwork, Flow)> {
        let mut edges = Vec::new();
        let mut values = Vec::new();
        for (e, &(k, l)) in net.edges.iter().enumerate() {
            let (j, i) = (net.goods[k], net.buyers[l]);
            if keep(j, i) {
                edges.push((k, l));
                values.push(flow.edge[e].clone());
                continue;
            }
            if flow.edge[e].is_positive() {
                return Err(AdnbError::Invariant(format!("pruned edge ({j},{i}) carries flow")));
            }
            self.edges.remove(&(j, i));
        }
        let pruned = EqNetwork {
            edges,
            ..net.clone()
        };
        let flow = Flow {
            edge: values,
            value: flow.value.clone(),
        };
        Ok((pruned, flow))
    }
}
