//! Bargaining instances: parsing, validation, preprocessing and derived
//! parameters.

mod generate;
mod wireless;

pub use generate::{gen_l1_adversarial, gen_random, L1Config};
pub use wireless::{wireless_adapter, WirelessAdapted, WirelessScenario};

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AdnbError, Result};
use crate::rational::{self, parse_q, qu, Q};

/// Utilities `u[i][j]` of buyer `i` for one unit of good `j`, and
/// disagreement utilities `c[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BargainingInstance {
    pub u: Vec<Vec<u64>>,
    #[serde(with = "rational::text_vec")]
    pub c: Vec<Q>,
}

impl BargainingInstance {
    pub fn new(u: Vec<Vec<u64>>, c: Vec<Q>) -> Result<Self> {
        let inst = BargainingInstance { u, c };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn g(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.len() != self.u.len() {
            return Err(AdnbError::Dimension(format!(
                "{} utility rows but {} disagreement values",
                self.u.len(),
                self.c.len()
            )));
        }
        let g = self.g();
        if let Some(i) = self.u.iter().position(|row| row.len() != g) {
            return Err(AdnbError::Dimension(format!(
                "row {i} has {} entries, expected {g}",
                self.u[i].len()
            )));
        }
        if self.c.iter().any(Signed::is_negative) {
            return Err(AdnbError::Negative("disagreement utility"));
        }
        Ok(())
    }

    pub fn u_q(&self, i: usize, j: usize) -> Q {
        qu(self.u[i][j])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }
}

/// Parses an instance document `{"u": [[int,...],...], "c": ["num/den",...]}`.
/// Unknown top-level fields are ignored.
pub fn parse_instance(text: &str) -> Result<BargainingInstance> {
    let doc: Value = serde_json::from_str(text)?;
    instance_from_value(&doc)
}

pub fn instance_from_value(doc: &Value) -> Result<BargainingInstance> {
    let obj = doc
        .as_object()
        .ok_or_else(|| AdnbError::Malformed("expected a JSON object".into()))?;
    let rows = obj
        .get("u")
        .and_then(Value::as_array)
        .ok_or_else(|| AdnbError::Malformed("missing array \"u\"".into()))?;
    let mut u = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| AdnbError::Malformed("\"u\" rows must be arrays".into()))?;
        let mut out = Vec::with_capacity(row.len());
        for entry in row {
            out.push(parse_utility(entry)?);
        }
        u.push(out);
    }
    let cs = obj
        .get("c")
        .and_then(Value::as_array)
        .ok_or_else(|| AdnbError::Malformed("missing array \"c\"".into()))?;
    let c = cs.iter().map(value_to_q).collect::<Result<Vec<_>>>()?;
    BargainingInstance::new(u, c)
}

fn parse_utility(v: &Value) -> Result<u64> {
    if let Some(k) = v.as_u64() {
        return Ok(k);
    }
    if v.as_i64().is_some_and(|k| k < 0) {
        return Err(AdnbError::Negative("utility"));
    }
    if let Some(s) = v.as_str() {
        let r = parse_q(s)?;
        if r.is_negative() {
            return Err(AdnbError::Negative("utility"));
        }
        if !r.is_integer() {
            return Err(AdnbError::Malformed(format!("utility {s:?} is not an integer")));
        }
        return u64::try_from(r.to_integer())
            .map_err(|_| AdnbError::Malformed(format!("utility {s:?} out of range")));
    }
    if let Some(f) = v.as_f64() {
        if f < 0.0 {
            return Err(AdnbError::Negative("utility"));
        }
        return Err(AdnbError::Malformed(format!("utility {f} is not an integer")));
    }
    Err(AdnbError::Malformed(format!("utility {v} is not an integer")))
}

pub(crate) fn value_to_q(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => Ok(parse_q(s)?),
        Value::Number(num) => {
            if let Some(k) = num.as_i64() {
                Ok(rational::q(k))
            } else if let Some(k) = num.as_u64() {
                Ok(qu(k))
            } else {
                Err(AdnbError::Malformed(format!(
                    "decimal {num} not accepted, write rationals as \"num/den\""
                )))
            }
        }
        other => Err(AdnbError::Malformed(format!("expected a rational, got {other}"))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    /// Original indices of goods nobody wants. They are reported at price 0.
    pub removed_goods: Vec<usize>,
    /// Buyers that want nothing. Their presence makes the game infeasible.
    pub zero_buyers: Vec<usize>,
    /// Original index of every surviving good, in order.
    pub kept_goods: Vec<usize>,
}

impl PreprocessReport {
    pub fn is_infeasible(&self) -> bool {
        !self.zero_buyers.is_empty()
    }

    /// Expands a vector over the surviving goods back to the original good
    /// count, filling removed goods with `fill`.
    pub fn expand_goods<T: Clone>(&self, original_g: usize, values: &[T], fill: T) -> Vec<T> {
        let mut out = vec![fill; original_g];
        for (k, &j) in self.kept_goods.iter().enumerate() {
            out[j] = values[k].clone();
        }
        out
    }
}

/// Drops all-zero good columns and reports all-zero buyer rows.
pub fn preprocess(inst: &BargainingInstance) -> Result<(BargainingInstance, PreprocessReport)> {
    inst.validate()?;
    let (n, g) = (inst.n(), inst.g());
    let mut report = PreprocessReport::default();
    for j in 0..g {
        if (0..n).any(|i| inst.u[i][j] > 0) {
            report.kept_goods.push(j);
        } else {
            report.removed_goods.push(j);
        }
    }
    let u: Vec<Vec<u64>> = inst
        .u
        .iter()
        .map(|row| report.kept_goods.iter().map(|&j| row[j]).collect())
        .collect();
    if n == 0 || report.kept_goods.is_empty() {
        return Err(AdnbError::Empty);
    }
    report.zero_buyers = (0..n).filter(|&i| u[i].iter().all(|&x| x == 0)).collect();
    Ok((
        BargainingInstance {
            u,
            c: inst.c.clone(),
        },
        report,
    ))
}

/// Size parameters of an instance that drive the iteration bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceParams {
    pub u_max: u64,
    pub c_max: Q,
    /// `n * C * U^n`, the denominator bound for tight-set prices.
    pub delta: Q,
    pub mu: BigInt,
}

impl InstanceParams {
    pub fn of(inst: &BargainingInstance) -> Self {
        let u_max = inst.u.iter().flatten().copied().max().unwrap_or(0);
        let c_max = inst.c.iter().max().cloned().unwrap_or_else(Q::zero);
        let n = inst.n();
        let u_pow: BigInt = Pow::pow(BigInt::from(u_max), n);
        let delta = Q::from_integer(BigInt::from(n)) * &c_max * Q::from_integer(u_pow);
        InstanceParams {
            u_max,
            c_max,
            delta,
            mu: BigInt::one(),
        }
    }

    pub fn with_mu(mut self, mu: BigInt) -> Self {
        self.mu = mu;
        self
    }
}
