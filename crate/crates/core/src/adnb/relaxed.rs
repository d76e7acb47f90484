use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::balanced::balanced_flow;
use crate::error::Result;
use crate::flownet::{build_network, Money};
use crate::instance::BargainingInstance;
use crate::rational::{self, qu, Q};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuyerGap {
    #[serde(with = "rational::text")]
    pub neg_beta: Q,
    /// `min_j (p_j / -beta_i - u_ij / (v_i - c_i))`; never negative.
    #[serde(with = "rational::text")]
    pub residual: Q,
    /// Equality holds on every good the buyer is allocated.
    pub support_tight: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelaxedKkt {
    /// False when some buyer has `beta_i >= 0`; the gaps are then empty.
    pub meaningful: bool,
    pub buyers: Vec<BuyerGap>,
}

impl RelaxedKkt {
    /// All relaxed conditions hold with `-beta_i = 1`, i.e. the exact ones.
    pub fn is_terminal(&self) -> bool {
        self.meaningful
            && self
                .buyers
                .iter()
                .all(|b| b.neg_beta.is_one() && b.support_tight && !b.residual.is_negative())
    }
}

/// Relaxed complementary slackness at prices `p`, from a balanced flow of
/// the flexible-budget network.
pub fn relaxed_kkt_gap(inst: &BargainingInstance, p: &[Q]) -> Result<RelaxedKkt> {
    let built = build_network(inst, p, Money::Flexible, None)?;
    let net = &built.net;
    let bal = balanced_flow(net);
    if bal.surplus.beta.iter().any(|b| !b.is_negative()) {
        return Ok(RelaxedKkt {
            meaningful: false,
            buyers: Vec::new(),
        });
    }
    let (n, g) = (inst.n(), inst.g());
    let mut x = vec![vec![Q::zero(); g]; n];
    for (f, &(j, i)) in bal.flow.edge.iter().zip(&net.edges) {
        x[i][j] = f / &p[j];
    }
    let buyers = (0..n)
        .map(|i| {
            let neg_beta = -&bal.surplus.beta[i];
            let v: Q = (0..g).map(|j| qu(inst.u[i][j]) * &x[i][j]).sum();
            let gap = v - &inst.c[i];
            let terms: Vec<Q> = (0..g)
                .map(|j| &p[j] / &neg_beta - qu(inst.u[i][j]) / &gap)
                .collect();
            BuyerGap {
                residual: terms.iter().min().cloned().unwrap_or_else(Q::zero),
                support_tight: (0..g).all(|j| !x[i][j].is_positive() || terms[j].is_zero()),
                neg_beta,
            }
        })
        .collect();
    Ok(RelaxedKkt {
        meaningful: true,
        buyers,
    })
}
