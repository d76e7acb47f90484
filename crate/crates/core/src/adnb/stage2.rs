//! Stage II: from feasible prices, raise prices of the goods wanted by the
//! buyers of largest surplus until every budget is spent.

use super::state::SolverState;
use crate::engine::{MoneyModel, PhaseEnd, RaiseEngine, Stage};
use crate::error::{AdnbError, Result};
use crate::fisher::allocation;
use crate::rational::Q;

pub struct Equilibrium {
    pub p: Vec<Q>,
    pub x: Vec<Vec<Q>>,
}

impl SolverState<'_> {
    pub fn stage2(&mut self, phase_cap: usize) -> Result<Equilibrium> {
        let g = self.inst.g();
        let money = MoneyModel::Flexible {
            c: self.inst.c.clone(),
            alpha: self.alpha.clone(),
        };
        let mut engine = RaiseEngine::new(self.inst, self.p.clone(), money, Stage::Two);
        let start = self.ins.counters.phases;
        loop {
            if self.ins.counters.phases - start > phase_cap {
                return Err(AdnbError::BoundExceeded(format!(
                    "stage II exceeded {phase_cap} phases"
                )));
            }
            match engine.phase(&mut self.ins, 4 * g)? {
                PhaseEnd::Done => break,
                PhaseEnd::Tight(_) => {}
            }
        }
        for rec in self.ins.phases.iter().filter(|r| r.stage == Stage::Two) {
            if rec.iterations > g {
                self.ins.violations.push(format!(
                    "stage II phase {} used {} iterations (> g = {g})",
                    rec.phase, rec.iterations
                ));
            }
        }
        let (net, bal) = engine.final_flow(&mut self.ins);
        if bal.flow.value != net.total_supply() {
            return Err(AdnbError::Invariant("final flow does not sell every good".into()));
        }
        let x = allocation(&net, &bal.flow, self.inst.n(), g, &engine.p);
        self.p = engine.p.clone();
        if let MoneyModel::Flexible { alpha, .. } = engine.money {
            self.alpha = alpha;
        }
        Ok(Equilibrium { p: self.p.clone(), x })
    }
}
