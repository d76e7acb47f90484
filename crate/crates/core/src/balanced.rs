//! Balanced flows: the maximum flow whose buyer surplus vector has minimum
//! Euclidean norm.
//!
//! The surplus vector is built top-down. For the buyers still unassigned, the
//! highest surplus level `lambda` is the smallest value for which the sink
//! capacities `(m_i - lambda)^+` can all be saturated. It is found by
//! Dinkelbach steps: each infeasible `lambda` yields a violated buyer set `A`
//! from a minimum cut, and the next candidate solves the linear cut equation
//! `sum_A (m_i - lambda) = p(Gamma(A))` exactly. The buyers on the sink side
//! of the final cut form the top level; they and their goods are removed and
//! the rest is solved the same way.

use num_traits::{Signed, Zero};

use crate::error::{AdnbError, Result};
use crate::flownet::{max_flow, residual_reachable, EqNetwork, Flow};
use crate::rational::{q, sum_q, Show, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surplus {
    pub theta: Vec<Q>,
    pub beta: Vec<Q>,
}

impl Surplus {
    pub fn from_theta(theta: Vec<Q>) -> Self {
        let one = q(1);
        let beta = theta.iter().map(|t| t - &one).collect();
        Surplus { theta, beta }
    }

    pub fn l1(&self) -> Q {
        sum_q(&self.theta)
    }

    pub fn l2(&self) -> Q {
        self.theta.iter().map(|t| t * t).sum()
    }

    pub fn max_theta(&self) -> Option<&Q> {
        self.theta.iter().max()
    }
}

#[derive(Debug, Clone)]
pub struct Balanced {
    pub flow: Flow,
    pub surplus: Surplus,
    /// Maximum-flow computations spent.
    pub maxflows: usize,
}

pub fn surplus_of(net: &EqNetwork, flow: &Flow) -> Surplus {
    let inflow = flow.buyer_inflow(net);
    Surplus::from_theta(net.demand.iter().zip(inflow).map(|(m, f)| m - f).collect())
}

pub fn balanced_flow(net: &EqNetwork) -> Balanced {
    let (ng, nb) = (net.num_goods(), net.num_buyers());
    let mut live_goods = vec![true; ng];
    let mut live_buyers = vec![true; nb];
    let mut edge_flow = vec![Q::zero(); net.edges.len()];
    let mut maxflows = 0usize;

    while live_buyers.iter().any(|&b| b) {
        let gs: Vec<usize> = (0..ng).filter(|&k| live_goods[k]).collect();
        let bs: Vec<usize> = (0..nb).filter(|&l| live_buyers[l]).collect();
        let (sub, edge_ids) = net.restrict(&gs, &bs);
        let adj = sub.buyer_adjacency();

        let everyone: Vec<usize> = (0..bs.len()).collect();
        let mut lambda = level_of(&sub, &adj, &everyone).max(Q::zero());
        let (mf, caps) = loop {
            let caps: Vec<Q> = sub
                .demand
                .iter()
                .map(|m| (m - &lambda).max(Q::zero()))
                .collect();
            let mf = max_flow(&sub.with_demand(caps.clone()));
            maxflows += 1;
            if mf.flow.value == sum_q(&caps) {
                break (mf, caps);
            }
            let violated: Vec<usize> = (0..bs.len())
                .filter(|&l| !mf.min_source_side.buyers[l] && sub.demand[l] > lambda)
                .collect();
            assert!(!violated.is_empty(), "positive deficit without a violated set");
            let next = level_of(&sub, &adj, &violated);
            assert!(next > lambda, "Dinkelbach step must increase the level");
            lambda = next;
        };
        debug_assert_eq!(caps.len(), bs.len());

        let top: Vec<bool> = mf.min_source_side.buyers.iter().map(|&s| !s).collect();
        let all_done = !top.iter().any(|&b| b);
        for (e_sub, &(_, l)) in sub.edges.iter().enumerate() {
            if all_done || top[l] {
                edge_flow[edge_ids[e_sub]] = mf.flow.edge[e_sub].clone();
            }
        }
        if all_done {
            break;
        }
        for (l, &b) in bs.iter().enumerate() {
            if top[l] {
                live_buyers[b] = false;
            }
        }
        for (k, &g) in gs.iter().enumerate() {
            if !mf.min_source_side.goods[k] {
                live_goods[g] = false;
            }
        }
    }

    let flow = Flow {
        value: sum_q(&edge_flow),
        edge: edge_flow,
    };
    let surplus = surplus_of(net, &flow);
    Balanced {
        flow,
        surplus,
        maxflows,
    }
}

/// Root of `sum_{l in set} (m_l - lambda) = p(Gamma(set))`.
fn level_of(sub: &EqNetwork, adj: &[Vec<usize>], set: &[usize]) -> Q {
    let mut touched = vec![false; sub.num_goods()];
    for &l in set {
        for &k in &adj[l] {
            touched[k] = true;
        }
    }
    let price: Q = sub
        .supply
        .iter()
        .zip(&touched)
        .filter(|(_, &t)| t)
        .map(|(p, _)| p)
        .sum();
    let money: Q = set.iter().map(|&l| &sub.demand[l]).sum();
    (money - price) / q(set.len() as i64)
}

/// True iff no buyer can reach a buyer of strictly larger surplus through the
/// residual graph with source and sink removed. Errors if `flow` is not a
/// feasible maximum flow.
pub fn verify_property1(net: &EqNetwork, flow: &Flow) -> Result<bool> {
    if !flow.is_feasible(net) || max_flow(net).flow.value != flow.value {
        return Err(AdnbError::NotMaximum);
    }
    let theta = surplus_of(net, flow).theta;
    let nb = net.num_buyers();
    for l in 0..nb {
        let mut from = vec![false; nb];
        from[l] = true;
        let (_, reach) = residual_reachable(net, flow, &from);
        if (0..nb).any(|l2| reach[l2] && theta[l] < theta[l2]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Upper end of the valid scaling range: `min_{beta_i < 0} -1/beta_i`, or
/// `None` when no buyer has negative 1-surplus.
pub fn scale_limit(surplus: &Surplus) -> Option<Q> {
    surplus
        .beta
        .iter()
        .filter(|b| b.is_negative())
        .map(|b| -q(1) / b)
        .min()
}

/// Scales a balanced flow of the flexible-money network by `x`, giving the
/// balanced flow of the network with prices and every `alpha` scaled by `x`.
/// Then `beta(x) = x * beta`.
pub fn scale_flow(flow: &Flow, surplus: &Surplus, x: &Q) -> Result<(Flow, Surplus)> {
    let limit = scale_limit(surplus);
    let ok = x.is_positive() && limit.as_ref().is_none_or(|b| x <= b);
    if !ok {
        return Err(AdnbError::ScaleRange(
            Show(x).to_string(),
            limit.map_or_else(|| "inf".to_string(), |b| Show(&b).to_string()),
        ));
    }
    let beta: Vec<Q> = surplus.beta.iter().map(|b| b * x).collect();
    let theta = beta.iter().map(|b| b + q(1)).collect();
    Ok((flow.scaled(x), Surplus { theta, beta }))
}
