//! Solution documents: what `solve` writes and `check` reads back.

use serde::{Deserialize, Serialize};

use crate::adnb::{audit, Infeasibility, Outcome, Solution, SolveReport};
use crate::certify::{ConvexDualCertificate, LpDualCertificate};
use crate::error::{AdnbError, Result};
use crate::instance::BargainingInstance;
use crate::rational::{self, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictDoc {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_prices")]
    pub feasible_prices: Option<Vec<Q>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_dual: Option<LpDualCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex_dual: Option<ConvexDualCertificate>,
}

mod opt_prices {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "rational::text_vec")] Vec<Q>);

    pub fn serialize<S: Serializer>(v: &Option<Vec<Q>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.clone().map(Wrapped).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Q>>, D::Error> {
        Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub phases: usize,
    pub iterations: usize,
    pub maxflows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxflow_budget: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub verdict: VerdictDoc,
    #[serde(default, with = "rational::text_vec")]
    pub p: Vec<Q>,
    #[serde(default, with = "rational::text_matrix")]
    pub x: Vec<Vec<Q>>,
    #[serde(default, with = "rational::text_vec")]
    pub v: Vec<Q>,
    pub certificate: CertificateDoc,
    #[serde(default)]
    pub stats: StatsDoc,
}

impl SolutionDoc {
    pub fn from_report(report: &SolveReport) -> Self {
        let s = &report.stats;
        let stats = StatsDoc {
            phases: s.counters.phases,
            iterations: s.counters.iterations,
            maxflows: s.counters.maxflows,
            maxflow_budget: s.bounds.as_ref().map(|b| b.maxflow_budget.to_string()),
            violations: s.violations.clone(),
        };
        match &report.outcome {
            Outcome::Feasible(sol) => SolutionDoc {
                verdict: VerdictDoc::Feasible,
                p: sol.p.clone(),
                x: sol.x.clone(),
                v: sol.v.clone(),
                certificate: CertificateDoc {
                    feasible_prices: Some(sol.feasible_prices.clone()),
                    ..Default::default()
                },
                stats,
            },
            Outcome::Infeasible(cert) => SolutionDoc {
                verdict: VerdictDoc::Infeasible,
                p: Vec::new(),
                x: Vec::new(),
                v: Vec::new(),
                certificate: CertificateDoc {
                    feasible_prices: None,
                    lp_dual: Some(cert.lp_dual.clone()),
                    convex_dual: Some(cert.convex_dual.clone()),
                },
                stats,
            },
        }
    }

    pub fn to_outcome(&self) -> Result<Outcome> {
        let missing = |what: &str| AdnbError::Malformed(format!("solution lacks {what}"));
        Ok(match self.verdict {
            VerdictDoc::Feasible => Outcome::Feasible(Solution {
                p: self.p.clone(),
                x: self.x.clone(),
                v: self.v.clone(),
                feasible_prices: self
                    .certificate
                    .feasible_prices
                    .clone()
                    .ok_or_else(|| missing("certificate.feasible_prices"))?,
            }),
            VerdictDoc::Infeasible => Outcome::Infeasible(Infeasibility {
                lp_dual: self.certificate.lp_dual.clone().ok_or_else(|| missing("certificate.lp_dual"))?,
                convex_dual: self
                    .certificate
                    .convex_dual
                    .clone()
                    .ok_or_else(|| missing("certificate.convex_dual"))?,
            }),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution documents always serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Re-verifies a stored solution against its instance. Dimension mismatches
/// count as a failed check, not an error.
pub fn check_document(inst: &BargainingInstance, doc: &SolutionDoc) -> Result<bool> {
    let outcome = doc.to_outcome()?;
    let shaped = match &outcome {
        Outcome::Feasible(s) => {
            s.p.len() == inst.g()
                && s.feasible_prices.len() == inst.g()
                && s.v.len() == inst.n()
                && s.x.len() == inst.n()
                && s.x.iter().all(|r| r.len() == inst.g())
        }
        Outcome::Infeasible(c) => {
            c.lp_dual.y.len() == inst.n() && c.lp_dual.z.len() == inst.g() && c.convex_dual.p.len() == inst.g()
        }
    };
    Ok(shaped && audit(inst, &outcome).is_ok())
}
