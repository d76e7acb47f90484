//! Independent audits of solver output. Everything here is re-derived from
//! the instance and the claimed numbers; nothing is taken from solver state.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::balanced::balanced_flow;
use crate::error::{AdnbError, Result};
use crate::flownet::{build_network, is_small, max_flow, BangPerBuck, EqNetwork, Mode, Money};
use crate::instance::BargainingInstance;
use crate::rational::{self, qu, sum_q, Q};

/// Dual solution of the feasibility LP: `u_ij y_i <= z_j`, `sum y = 1`,
/// `y, z >= 0`, objective `sum c_i y_i - sum z_j >= 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpDualCertificate {
    #[serde(with = "rational::text_vec")]
    pub y: Vec<Q>,
    #[serde(with = "rational::text_vec")]
    pub z: Vec<Q>,
}

/// Partition `(buyers, goods)` such that nobody outside `buyers` wants any
/// good in `goods`, with positive prices at which the remaining buyers have
/// nonnegative total 1-surplus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexDualCertificate {
    pub buyers: Vec<usize>,
    pub goods: Vec<usize>,
    #[serde(with = "rational::text_vec")]
    pub p: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquilibriumCheck {
    Yes(Vec<Vec<Q>>),
    No(String),
}

/// One max-flow in the flexible-money network: `p` is an equilibrium iff the
/// flow saturates both the source and the sink edges.
pub fn check_equilibrium(inst: &BargainingInstance, p: &[Q]) -> EquilibriumCheck {
    let built = match build_network(inst, p, Money::Flexible, None) {
        Ok(b) => b,
        Err(e) => return EquilibriumCheck::No(e.to_string()),
    };
    let net = &built.net;
    let mf = max_flow(net);
    if mf.flow.value != net.total_supply() {
        return EquilibriumCheck::No("source cut is not a minimum cut".into());
    }
    if mf.flow.value != sum_q(&net.demand) {
        return EquilibriumCheck::No("sink cut is not a minimum cut".into());
    }
    let mut x = vec![vec![Q::zero(); inst.g()]; inst.n()];
    for (f, &(j, i)) in mf.flow.edge.iter().zip(&net.edges) {
        x[i][j] = f / &p[j];
    }
    EquilibriumCheck::Yes(x)
}

pub fn utilities(inst: &BargainingInstance, x: &[Vec<Q>]) -> Vec<Q> {
    (0..inst.n())
        .map(|i| (0..inst.g()).map(|j| qu(inst.u[i][j]) * &x[i][j]).sum())
        .collect()
}

/// The four optimality conditions of the bargaining program, checked exactly,
/// together with primal feasibility of `x` and `v_i > c_i`.
pub fn check_kkt(inst: &BargainingInstance, p: &[Q], x: &[Vec<Q>]) -> bool {
    let (n, g) = (inst.n(), inst.g());
    if p.len() != g || x.len() != n || x.iter().any(|r| r.len() != g) {
        return false;
    }
    if x.iter().flatten().any(Signed::is_negative) {
        return false;
    }
    let sold: Vec<Q> = (0..g).map(|j| (0..n).map(|i| &x[i][j]).sum()).collect();
    if sold.iter().any(|s| *s > Q::one()) {
        return false;
    }
    // (1) and (2)
    for j in 0..g {
        if p[j].is_negative() || (p[j].is_positive() && !sold[j].is_one()) {
            return false;
        }
    }
    let v = utilities(inst, x);
    for i in 0..n {
        let gap = &v[i] - &inst.c[i];
        if !gap.is_positive() {
            return false;
        }
        for j in 0..g {
            let rhs = qu(inst.u[i][j]) / &gap;
            // (3)
            if p[j] < rhs {
                return false;
            }
            // (4)
            if x[i][j].is_positive() && p[j] != rhs {
                return false;
            }
        }
    }
    true
}

/// Small prices at which every buyer's balanced surplus is below one.
pub fn check_feasibility_witness(inst: &BargainingInstance, p: &[Q]) -> bool {
    if !is_small(inst, p) {
        return false;
    }
    let built = match build_network(inst, p, Money::Flexible, None) {
        Ok(b) => b,
        Err(_) => return false,
    };
    let bal = balanced_flow(&built.net);
    bal.surplus.theta.iter().all(|t| *t < Q::one())
}

pub fn verify_lp_dual(inst: &BargainingInstance, cert: &LpDualCertificate) -> bool {
    let (n, g) = (inst.n(), inst.g());
    if cert.y.len() != n || cert.z.len() != g {
        return false;
    }
    if cert.y.iter().chain(&cert.z).any(Signed::is_negative) {
        return false;
    }
    if !sum_q(&cert.y).is_one() {
        return false;
    }
    for i in 0..n {
        for j in 0..g {
            if qu(inst.u[i][j]) * &cert.y[i] > cert.z[j] {
                return false;
            }
        }
    }
    let gain: Q = inst.c.iter().zip(&cert.y).map(|(c, y)| c * y).sum();
    gain - sum_q(&cert.z) >= Q::zero()
}

/// Checks the finite conditions that make the dual of the bargaining program
/// unbounded: the zero-utility block, and at the certificate prices the
/// buyers outside `buyers` can be served exactly the goods outside `goods`
/// (prices small there) while their total 1-surplus is nonnegative.
pub fn verify_convex_dual(inst: &BargainingInstance, cert: &ConvexDualCertificate) -> bool {
    let (n, g) = (inst.n(), inst.g());
    if cert.p.len() != g || cert.p.iter().any(|x| !x.is_positive()) {
        return false;
    }
    if cert.buyers.iter().any(|&i| i >= n) || cert.goods.iter().any(|&j| j >= g) {
        return false;
    }
    let mut in_b = vec![false; n];
    let mut in_g = vec![false; g];
    cert.buyers.iter().for_each(|&i| in_b[i] = true);
    cert.goods.iter().for_each(|&j| in_g[j] = true);
    let rest_b: Vec<usize> = (0..n).filter(|&i| !in_b[i]).collect();
    let rest_g: Vec<usize> = (0..g).filter(|&j| !in_g[j]).collect();
    if rest_b.is_empty() {
        return false;
    }
    for &i in &rest_b {
        if cert.goods.iter().any(|&j| inst.u[i][j] > 0) {
            return false;
        }
    }
    let bpb = BangPerBuck::compute(inst, &cert.p, &rest_g);
    // A remaining buyer who wants nothing available has unbounded 1-surplus.
    if rest_b.iter().any(|&i| bpb.gamma[i].is_zero()) {
        return true;
    }
    let money = bpb.flexible_money(&inst.c);
    let mut local = vec![usize::MAX; g];
    for (k, &j) in rest_g.iter().enumerate() {
        local[j] = k;
    }
    let mut edges = Vec::new();
    for (l, &i) in rest_b.iter().enumerate() {
        for &j in &bpb.sets[i] {
            edges.push((local[j], l));
        }
    }
    let net = EqNetwork::new(
        rest_g.clone(),
        rest_b.clone(),
        rest_g.iter().map(|&j| cert.p[j].clone()).collect(),
        rest_b.iter().map(|&i| money[i].clone()).collect(),
        edges,
        Mode::Flexible,
    );
    let bal = balanced_flow(&net);
    if bal.flow.value != net.total_supply() {
        return false;
    }
    sum_q(&bal.surplus.beta) >= Q::zero()
}

/// Recovers equilibrium prices from the support of an equilibrium
/// allocation. Along support edges a buyer's bang-per-buck is equal, which
/// fixes every price of a component up to one factor `t`; the factor then
/// solves the component's money-equals-price equation, which is linear in
/// `t`.
pub fn recover_prices_from_support(
    inst: &BargainingInstance,
    support: &[(usize, usize)],
) -> Result<Vec<Q>> {
    let (n, g) = (inst.n(), inst.g());
    let mut buyer_goods = vec![Vec::new(); n];
    let mut good_buyers = vec![Vec::new(); g];
    for &(i, j) in support {
        if i >= n || j >= g || inst.u[i][j] == 0 {
            return Err(AdnbError::Recovery(format!("pair ({i},{j}) has no utility")));
        }
        buyer_goods[i].push(j);
        good_buyers[j].push(i);
    }
    if let Some(j) = (0..g).find(|&j| good_buyers[j].is_empty()) {
        return Err(AdnbError::Recovery(format!("good {j} is not in the support")));
    }
    if let Some(i) = (0..n).find(|&i| buyer_goods[i].is_empty()) {
        return Err(AdnbError::Recovery(format!("buyer {i} is not in the support")));
    }
    let mut coef: Vec<Option<Q>> = vec![None; g];
    let mut seen_b = vec![false; n];
    let mut prices = vec![Q::zero(); g];
    for root in 0..g {
        if coef[root].is_some() {
            continue;
        }
        coef[root] = Some(Q::one());
        let mut comp_goods = vec![root];
        let mut comp_buyers = Vec::new();
        let mut stack = vec![root];
        while let Some(j) = stack.pop() {
            for &i in &good_buyers[j] {
                if seen_b[i] {
                    continue;
                }
                seen_b[i] = true;
                comp_buyers.push(i);
                let base = coef[j].clone().expect("visited");
                for &j2 in &buyer_goods[i] {
                    // u_ij / p_j = u_ij2 / p_j2
                    let want = &base * qu(inst.u[i][j2]) / qu(inst.u[i][j]);
                    match &coef[j2] {
                        Some(have) if *have != want => {
                            return Err(AdnbError::Recovery(format!(
                                "support is inconsistent at good {j2}"
                            )))
                        }
                        Some(_) => {}
                        None => {
                            coef[j2] = Some(want);
                            comp_goods.push(j2);
                            stack.push(j2);
                        }
                    }
                }
            }
        }
        // |B_c| + t * sum_i c_i a_j / u_ij = t * sum_j a_j
        let price_mass: Q = comp_goods.iter().map(|&j| coef[j].clone().expect("set")).sum();
        let money_slope: Q = comp_buyers
            .iter()
            .map(|&i| {
                let j = buyer_goods[i][0];
                &inst.c[i] * coef[j].as_ref().expect("set") / qu(inst.u[i][j])
            })
            .sum();
        let denom = price_mass - money_slope;
        if !denom.is_positive() {
            return Err(AdnbError::Recovery(
                "component equation has no positive root".into(),
            ));
        }
        let t = Q::from_integer((comp_buyers.len() as i64).into()) / denom;
        for &j in &comp_goods {
            prices[j] = &t * coef[j].as_ref().expect("set");
        }
    }
    Ok(prices)
}

/// Support of an allocation as `(buyer, good)` pairs.
pub fn support_of(x: &[Vec<Q>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in x.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.is_positive() {
                out.push((i, j));
            }
        }
    }
    out
}
