use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::BargainingInstance;
use crate::error::{AdnbError, Result};
use crate::rational::{self, lcm_of_denominators, Q};

/// Channel states with probabilities `pi`, per-state rates for each user and
/// the users' disagreement throughputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirelessScenario {
    #[serde(with = "rational::text_vec")]
    pub pi: Vec<Q>,
    pub rates: Vec<Vec<u64>>,
    #[serde(with = "rational::text_vec")]
    pub c: Vec<Q>,
}

/// A unit-supply bargaining instance equivalent to a wireless scenario, plus
/// what is needed to map its solution back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WirelessAdapted {
    pub instance: BargainingInstance,
    pub pi: Vec<Q>,
    /// Common multiplier clearing all denominators of `pi`.
    pub scale: BigInt,
}

impl WirelessAdapted {
    /// Time share of state `j` given to user `i`: `pi_j * y_ij`.
    pub fn map_allocation(&self, y: &[Vec<Q>]) -> Vec<Vec<Q>> {
        y.iter()
            .map(|row| row.iter().zip(&self.pi).map(|(y, pi)| y * pi).collect())
            .collect()
    }

    pub fn map_utility(&self, v: &[Q]) -> Vec<Q> {
        let m = Q::from_integer(self.scale.clone());
        v.iter().map(|x| x / &m).collect()
    }
}

pub fn wireless_adapter(pi: &[Q], rates: &[Vec<u64>], c: &[Q]) -> Result<WirelessAdapted> {
    if pi.iter().any(|x| !x.is_positive()) {
        return Err(AdnbError::InvalidArgument(
            "every channel state needs positive probability".into(),
        ));
    }
    if rates.len() != c.len() || rates.iter().any(|r| r.len() != pi.len()) {
        return Err(AdnbError::Dimension("rates must be users x states".into()));
    }
    let scale = lcm_of_denominators(pi);
    let m = Q::from_integer(scale.clone());
    let mut u = Vec::with_capacity(rates.len());
    for row in rates {
        let mut out = Vec::with_capacity(row.len());
        for (r, p) in row.iter().zip(pi) {
            let v = Q::from_integer(BigInt::from(*r)) * p * &m;
            debug_assert!(v.is_integer());
            let v = u64::try_from(v.to_integer())
                .map_err(|_| AdnbError::InvalidArgument("scaled rate overflows u64".into()))?;
            out.push(v);
        }
        u.push(out);
    }
    let c = c.iter().map(|x| x * &m).collect();
    debug_assert!(!m.is_zero());
    Ok(WirelessAdapted {
        instance: BargainingInstance::new(u, c)?,
        pi: pi.to_vec(),
        scale,
    })
}
