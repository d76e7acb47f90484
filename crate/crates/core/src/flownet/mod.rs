//! The equilibrium network: source to goods (capacity = price), goods to the
//! buyers for whom they are maximum bang-per-buck (unbounded), buyers to sink
//! (capacity = money).

mod maxflow;

pub use maxflow::IntNetwork;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{AdnbError, Result};
use crate::instance::BargainingInstance;
use crate::rational::{lcm_of_denominators, qu, sum_q, Q};

pub type PriceVector = Vec<Q>;
pub type MoneyVector = Vec<Q>;

/// Maximum bang-per-buck `gamma[i]` of each buyer over a set of goods, and
/// the goods attaining it. A buyer with no desired good gets `gamma = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BangPerBuck {
    pub gamma: Vec<Q>,
    pub sets: Vec<Vec<usize>>,
}

impl BangPerBuck {
    pub fn compute(inst: &BargainingInstance, p: &[Q], goods: &[usize]) -> Self {
        let n = inst.n();
        let mut gamma = vec![Q::zero(); n];
        let mut sets = vec![Vec::new(); n];
        for i in 0..n {
            for &j in goods {
                if inst.u[i][j] == 0 {
                    continue;
                }
                let r = qu(inst.u[i][j]) / &p[j];
                if sets[i].is_empty() || r > gamma[i] {
                    gamma[i] = r;
                    sets[i] = vec![j];
                } else if r == gamma[i] {
                    sets[i].push(j);
                }
            }
        }
        BangPerBuck { gamma, sets }
    }

    /// `1 + c_i / gamma_i`.
    pub fn flexible_money(&self, c: &[Q]) -> MoneyVector {
        self.gamma
            .iter()
            .zip(c)
            .map(|(g, c)| {
                if g.is_zero() {
                    Q::one()
                } else {
                    Q::one() + c / g
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Flexible,
    Fixed,
}

/// A network over a subset of goods and buyers. Nodes are addressed by local
/// index; `goods[k]` and `buyers[l]` give the instance index of each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqNetwork {
    pub goods: Vec<usize>,
    pub buyers: Vec<usize>,
    pub supply: Vec<Q>,
    pub demand: Vec<Q>,
    /// `(good, buyer)` in local indices, sorted and without duplicates.
    pub edges: Vec<(usize, usize)>,
    pub mode: Mode,
}

impl EqNetwork {
    pub fn new(
        goods: Vec<usize>,
        buyers: Vec<usize>,
        supply: Vec<Q>,
        demand: Vec<Q>,
        mut edges: Vec<(usize, usize)>,
        mode: Mode,
    ) -> Self {
        assert_eq!(goods.len(), supply.len());
        assert_eq!(buyers.len(), demand.len());
        edges.sort_unstable();
        edges.dedup();
        assert!(edges
            .iter()
            .all(|&(k, l)| k < goods.len() && l < buyers.len()));
        EqNetwork {
            goods,
            buyers,
            supply,
            demand,
            edges,
            mode,
        }
    }

    pub fn num_goods(&self) -> usize {
        self.goods.len()
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn total_supply(&self) -> Q {
        sum_q(&self.supply)
    }

    /// Local buyers adjacent to each local good.
    pub fn good_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.goods.len()];
        for &(k, l) in &self.edges {
            adj[k].push(l);
        }
        adj
    }

    /// Local goods adjacent to each local buyer.
    pub fn buyer_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.buyers.len()];
        for &(k, l) in &self.edges {
            adj[l].push(k);
        }
        adj
    }

    /// Same network with different buyer capacities.
    pub fn with_demand(&self, demand: Vec<Q>) -> Self {
        assert_eq!(demand.len(), self.buyers.len());
        EqNetwork {
            demand,
            ..self.clone()
        }
    }

    /// Induced subnetwork on the given local goods and buyers.
    pub fn restrict(&self, goods: &[usize], buyers: &[usize]) -> (Self, Vec<usize>) {
        let mut gmap = vec![usize::MAX; self.goods.len()];
        let mut bmap = vec![usize::MAX; self.buyers.len()];
        for (new, &k) in goods.iter().enumerate() {
            gmap[k] = new;
        }
        for (new, &l) in buyers.iter().enumerate() {
            bmap[l] = new;
        }
        let mut pairs: Vec<((usize, usize), usize)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, &(k, l))| gmap[k] != usize::MAX && bmap[l] != usize::MAX)
            .map(|(e, &(k, l))| ((gmap[k], bmap[l]), e))
            .collect();
        pairs.sort_unstable();
        let net = EqNetwork {
            goods: goods.iter().map(|&k| self.goods[k]).collect(),
            buyers: buyers.iter().map(|&l| self.buyers[l]).collect(),
            supply: goods.iter().map(|&k| self.supply[k].clone()).collect(),
            demand: buyers.iter().map(|&l| self.demand[l].clone()).collect(),
            edges: pairs.iter().map(|p| p.0).collect(),
            mode: self.mode,
        };
        (net, pairs.into_iter().map(|p| p.1).collect())
    }
}

/// Flow values on the good-to-buyer edges (same order as `EqNetwork::edges`).
/// Source and sink edge flows follow by conservation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub edge: Vec<Q>,
    pub value: Q,
}

impl Flow {
    pub fn zero(net: &EqNetwork) -> Self {
        Flow {
            edge: vec![Q::zero(); net.edges.len()],
            value: Q::zero(),
        }
    }

    pub fn buyer_inflow(&self, net: &EqNetwork) -> Vec<Q> {
        let mut out = vec![Q::zero(); net.num_buyers()];
        for (f, &(_, l)) in self.edge.iter().zip(&net.edges) {
            out[l] += f;
        }
        out
    }

    pub fn good_outflow(&self, net: &EqNetwork) -> Vec<Q> {
        let mut out = vec![Q::zero(); net.num_goods()];
        for (f, &(k, _)) in self.edge.iter().zip(&net.edges) {
            out[k] += f;
        }
        out
    }

    /// Checks capacity and nonnegativity constraints exactly.
    pub fn is_feasible(&self, net: &EqNetwork) -> bool {
        self.edge.len() == net.edges.len()
            && self.edge.iter().all(|f| !f.is_negative())
            && self
                .good_outflow(net)
                .iter()
                .zip(&net.supply)
                .all(|(f, c)| f <= c)
            && self
                .buyer_inflow(net)
                .iter()
                .zip(&net.demand)
                .all(|(f, c)| f <= c)
            && sum_q(&self.edge) == self.value
    }

    pub fn scaled(&self, x: &Q) -> Flow {
        Flow {
            edge: self.edge.iter().map(|f| f * x).collect(),
            value: &self.value * x,
        }
    }
}

/// A cut, described by which goods and buyers lie on the source side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub goods: Vec<bool>,
    pub buyers: Vec<bool>,
}

impl Cut {
    pub fn capacity(&self, net: &EqNetwork) -> Q {
        let goods: Q = net
            .supply
            .iter()
            .zip(&self.goods)
            .filter(|(_, &src)| !src)
            .map(|(c, _)| c)
            .sum();
        let buyers: Q = net
            .demand
            .iter()
            .zip(&self.buyers)
            .filter(|(_, &src)| src)
            .map(|(c, _)| c)
            .sum();
        goods + buyers
    }

    pub fn is_source_cut(&self) -> bool {
        self.goods.iter().chain(&self.buyers).all(|&b| !b)
    }
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub flow: Flow,
    /// Nodes reachable from the source in the residual graph.
    pub min_source_side: Cut,
    /// Complement of the nodes that can reach the sink.
    pub max_source_side: Cut,
}

/// Exact maximum flow. Capacities are scaled to integers by the common
/// denominator; good-to-buyer edges get a capacity larger than any flow.
pub fn max_flow(net: &EqNetwork) -> MaxFlow {
    let (ng, nb) = (net.num_goods(), net.num_buyers());
    let scale = lcm_of_denominators(net.supply.iter().chain(&net.demand));
    let scale_q = Q::from_integer(scale.clone());
    let to_int = |x: &Q| -> BigInt {
        let y = x * &scale_q;
        debug_assert!(y.is_integer());
        if y.is_negative() {
            BigInt::zero()
        } else {
            y.to_integer()
        }
    };
    let supply: Vec<BigInt> = net.supply.iter().map(to_int).collect();
    let infinite: BigInt = supply.iter().sum::<BigInt>() + BigInt::one();
    let (s, t) = (0, 1);
    let good = |k: usize| 2 + k;
    let buyer = |l: usize| 2 + ng + l;
    let mut g = IntNetwork::new(2 + ng + nb);
    for (k, cap) in supply.into_iter().enumerate() {
        g.add_edge(s, good(k), cap);
    }
    let first_mid = ng;
    for &(k, l) in &net.edges {
        g.add_edge(good(k), buyer(l), infinite.clone());
    }
    for (l, d) in net.demand.iter().enumerate() {
        g.add_edge(buyer(l), t, to_int(d));
    }
    let value = g.max_flow(s, t, &infinite);
    let edge = (0..net.edges.len())
        .map(|e| Q::new(g.flow(first_mid + e), scale.clone()))
        .collect();
    let reach = g.reachable_from(s);
    let reaching = g.reaching(t);
    MaxFlow {
        flow: Flow {
            edge,
            value: Q::new(value, scale),
        },
        min_source_side: Cut {
            goods: (0..ng).map(|k| reach[good(k)]).collect(),
            buyers: (0..nb).map(|l| reach[buyer(l)]).collect(),
        },
        max_source_side: Cut {
            goods: (0..ng).map(|k| !reaching[good(k)]).collect(),
            buyers: (0..nb).map(|l| !reaching[buyer(l)]).collect(),
        },
    }
}

/// Nodes reachable from `from` (local buyer flags) inside the residual graph
/// with source and sink removed. Good-to-buyer edges are always residual;
/// buyer-to-good arcs exist where the edge carries flow.
pub fn residual_reachable(net: &EqNetwork, flow: &Flow, from: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let (ng, nb) = (net.num_goods(), net.num_buyers());
    let mut goods_adj = vec![Vec::new(); ng];
    let mut buyers_adj = vec![Vec::new(); nb];
    for (e, &(k, l)) in net.edges.iter().enumerate() {
        goods_adj[k].push(l);
        if flow.edge[e].is_positive() {
            buyers_adj[l].push(k);
        }
    }
    let mut seen_g = vec![false; ng];
    let mut seen_b = from.to_vec();
    let mut stack: Vec<usize> = (0..nb).filter(|&l| from[l]).collect();
    while let Some(l) = stack.pop() {
        for &k in &buyers_adj[l] {
            if !seen_g[k] {
                seen_g[k] = true;
                for &l2 in &goods_adj[k] {
                    if !seen_b[l2] {
                        seen_b[l2] = true;
                        stack.push(l2);
                    }
                }
            }
        }
    }
    (seen_g, seen_b)
}

/// Buyers that have a residual path (source and sink removed) into `to`.
pub fn residual_reaching(net: &EqNetwork, flow: &Flow, to: &[bool]) -> Vec<bool> {
    let (ng, nb) = (net.num_goods(), net.num_buyers());
    // reverse arcs: buyer l <- good k (always), good k <- buyer l (flow > 0)
    let mut into_buyer = vec![Vec::new(); nb];
    let mut into_good = vec![Vec::new(); ng];
    for (e, &(k, l)) in net.edges.iter().enumerate() {
        into_buyer[l].push(k);
        if flow.edge[e].is_positive() {
            into_good[k].push(l);
        }
    }
    let mut seen_b = to.to_vec();
    let mut seen_g = vec![false; ng];
    let mut stack: Vec<usize> = (0..nb).filter(|&l| to[l]).collect();
    while let Some(l) = stack.pop() {
        for &k in &into_buyer[l] {
            if !seen_g[k] {
                seen_g[k] = true;
                for &l2 in &into_good[k] {
                    if !seen_b[l2] {
                        seen_b[l2] = true;
                        stack.push(l2);
                    }
                }
            }
        }
    }
    seen_b
}

/// Where the buyer capacities come from.
#[derive(Debug, Clone, Copy)]
pub enum Money<'a> {
    /// `m_i = 1 + c_i / gamma_i`.
    Flexible,
    Fixed(&'a [Q]),
}

#[derive(Debug, Clone)]
pub struct Built {
    pub net: EqNetwork,
    pub bpb: BangPerBuck,
    pub money: MoneyVector,
}

/// The network over all goods and buyers at prices `p`. Without an override
/// the edges are exactly the maximum bang-per-buck pairs.
pub fn build_network(
    inst: &BargainingInstance,
    p: &[Q],
    money: Money<'_>,
    edge_override: Option<&[(usize, usize)]>,
) -> Result<Built> {
    let (n, g) = (inst.n(), inst.g());
    if p.len() != g {
        return Err(AdnbError::Dimension(format!("{} prices for {g} goods", p.len())));
    }
    if p.iter().any(|x| !x.is_positive()) {
        return Err(AdnbError::InvalidArgument("prices must be positive".into()));
    }
    let goods: Vec<usize> = (0..g).collect();
    let bpb = BangPerBuck::compute(inst, p, &goods);
    let (m, mode) = match money {
        Money::Flexible => (bpb.flexible_money(&inst.c), Mode::Flexible),
        Money::Fixed(m) => {
            if m.len() != n {
                return Err(AdnbError::Dimension(format!("{} budgets for {n} buyers", m.len())));
            }
            (m.to_vec(), Mode::Fixed)
        }
    };
    let edges = match edge_override {
        Some(e) => {
            if let Some(&(j, i)) = e.iter().find(|&&(j, i)| j >= g || i >= n || inst.u[i][j] == 0) {
                return Err(AdnbError::InvalidArgument(format!(
                    "edge ({j},{i}) has no utility"
                )));
            }
            e.to_vec()
        }
        None => bpb
            .sets
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (j, i)))
            .collect(),
    };
    let net = EqNetwork::new(goods, (0..n).collect(), p.to_vec(), m.clone(), edges, mode);
    Ok(Built {
        net,
        bpb,
        money: m,
    })
}

/// Positive prices at which every good can be sold in full: the source cut is
/// a minimum cut of the flexible-money network.
pub fn is_small(inst: &BargainingInstance, p: &[Q]) -> bool {
    match build_network(inst, p, Money::Flexible, None) {
        Ok(b) => max_flow(&b.net).flow.value == sum_q(p),
        Err(_) => false,
    }
}
