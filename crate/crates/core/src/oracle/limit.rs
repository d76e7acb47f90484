//! Fixed-point iteration on budgets: solve the Fisher market for budgets
//! `m`, then reset `m_i = 1 + c_i / gamma_i` at the new prices. Each Fisher
//! solve starts from the previous prices, which stay sellable since budgets
//! only grow.

use num_traits::{Signed, Zero};

use serde::Serialize;

use crate::engine::Instrument;
use crate::error::{AdnbError, Result};
use crate::fisher::{fisher_equilibrium_from, fisher_equilibrium_with, FisherMarket};
use crate::flownet::BangPerBuck;
use crate::instance::{preprocess, BargainingInstance};
use crate::rational::{self, q, qr, Q};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitStep {
    #[serde(with = "rational::text_vec")]
    pub p: Vec<Q>,
    #[serde(with = "rational::text_vec")]
    pub m: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitRun {
    #[serde(with = "rational::text_vec")]
    pub p: Vec<Q>,
    #[serde(with = "rational::text_vec")]
    pub m: Vec<Q>,
    pub iterations: usize,
    /// Stopped on the tolerance or an exact fixed point.
    pub converged: bool,
    /// Stopped because `m' = m` exactly.
    pub exact: bool,
    /// Prices and the budgets they were computed for, per iteration.
    pub history: Vec<LimitStep>,
}

pub fn default_eps() -> Q {
    qr(1, 1_000_000)
}

/// Runs on the preprocessed instance; prices are over the surviving goods.
pub fn limit_algorithm(inst: &BargainingInstance, max_iter: usize, eps: &Q) -> Result<LimitRun> {
    if max_iter == 0 {
        return Err(AdnbError::InvalidArgument("max_iter must be positive".into()));
    }
    let (inst, _) = preprocess(inst)?;
    let goods: Vec<usize> = (0..inst.g()).collect();
    let mut m = vec![q(1); inst.n()];
    let mut p: Option<Vec<Q>> = None;
    let mut history = Vec::new();
    for k in 1..=max_iter {
        let market = FisherMarket::new(inst.u.clone(), m.clone())?;
        let ins = Instrument::new(false, 0);
        let out = match p.take() {
            Some(prev) => fisher_equilibrium_from(&market, prev, ins)?,
            None => fisher_equilibrium_with(&market, ins)?,
        };
        let bpb = BangPerBuck::compute(&inst, &out.p, &goods);
        let next = bpb.flexible_money(&inst.c);
        history.push(LimitStep {
            p: out.p.clone(),
            m: m.clone(),
        });
        let gap = next
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Q::zero);
        let exact = gap.is_zero();
        if exact || gap < *eps {
            return Ok(LimitRun {
                p: out.p,
                m: if exact { m } else { next },
                iterations: k,
                converged: true,
                exact,
                history,
            });
        }
        p = Some(out.p);
        m = next;
    }
    let last = history.last().cloned().expect("max_iter >= 1");
    Ok(LimitRun {
        p: last.p,
        m,
        iterations: history.len(),
        converged: false,
        exact: false,
        history,
    })
}
