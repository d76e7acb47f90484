use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adnb::adnb::{solve_with, Outcome, SolveReport, SolverOptions};
use adnb::batch::solve_many;
use adnb::engine::check_level_from_env;
use adnb::instance::{gen_l1_adversarial, gen_random, parse_instance, wireless_adapter, BargainingInstance, WirelessScenario};
use adnb::json::{check_document, SolutionDoc};
use adnb::oracle::{feasibility_lp, limit_algorithm, oracle_solve_capped, OracleResult, DEFAULT_CAP};
use adnb::rational::{fmt_q, parse_q, Q};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "adnb", version, about = "Exact Nash bargaining over linear exchange economies")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve an instance; exit 0 if feasible, 2 if infeasible.
    Solve {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write one JSON line per solver event.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Internal consistency checks: 0 off, 1 per phase, 2 per event.
        #[arg(long)]
        check: Option<u8>,
        /// Also run the oracles and require agreement.
        #[arg(long)]
        cross_check: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        oracle_cap: usize,
        #[arg(long, default_value = "1/1000000")]
        eps: String,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },
    /// Re-verify a stored solution; exit 0 if it holds, 1 otherwise.
    Check { instance: PathBuf, solution: PathBuf },
    /// Support-enumeration answer and the feasibility LP value.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Write a generated instance.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        g: usize,
        #[arg(long, default_value_t = 10)]
        u_max: u64,
        #[arg(long, default_value_t = 10)]
        c_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1")]
        delta: String,
        /// Defaults to n.
        #[arg(long)]
        h: Option<String>,
        /// Scenario file for `wireless`.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Budget fixed-point iteration through repeated Fisher solves.
    Limit {
        instance: PathBuf,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value = "1/1000000")]
        eps: String,
    },
    /// Solve a batch of random instances and print counters against the budget.
    Bench {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        g: usize,
        #[arg(long, default_value_t = 10)]
        u_max: u64,
        #[arg(long, default_value_t = 10)]
        c_max: u64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Random,
    L1adv,
    Wireless,
}

fn read_instance(path: &Path) -> Result<BargainingInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn rational_arg(text: &str) -> Result<Q> {
    parse_q(text).map_err(|e| anyhow!("{e}"))
}

fn strings(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_q).collect()
}

fn cross_check(inst: &BargainingInstance, report: &SolveReport, cap: usize, eps: &Q, max_iter: usize) -> Result<()> {
    let t = feasibility_lp(inst)?;
    if (t > Q::from_integer(0.into())) != report.outcome.is_feasible() {
        bail!("feasibility LP value {} disagrees with the solver verdict", fmt_q(&t));
    }
    if inst.n() * inst.g() <= cap {
        match (oracle_solve_capped(inst, cap)?, &report.outcome) {
            (OracleResult::Infeasible, Outcome::Infeasible(_)) => {}
            (OracleResult::Feasible { p, v, .. }, Outcome::Feasible(s)) if p == s.p && v == s.v => {}
            _ => bail!("support-enumeration oracle disagrees with the solver"),
        }
    }
    if let Outcome::Feasible(s) = &report.outcome {
        let run = limit_algorithm(inst, max_iter, eps)?;
        let (_, pre) = adnb::preprocess(inst)?;
        let kept: Vec<Q> = pre.kept_goods.iter().map(|&j| s.p[j].clone()).collect();
        if run.history.iter().any(|st| st.p.iter().zip(&kept).any(|(a, b)| a > b)) {
            bail!("limit iteration exceeded the equilibrium prices");
        }
        if run.converged {
            let gap = run.p.iter().zip(&kept).map(|(a, b)| b - a).max().unwrap_or_default();
            eprintln!("limit: {} iterations, largest price gap {}", run.iterations, fmt_q(&gap));
        } else {
            eprintln!("limit: no convergence within {max_iter} iterations");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.verb {
        Verb::Solve {
            instance,
            output,
            trace,
            check,
            cross_check: cross,
            oracle_cap,
            eps,
            max_iter,
        } => {
            let inst = read_instance(&instance)?;
            let opts = SolverOptions {
                trace: trace.is_some(),
                check: check.unwrap_or_else(check_level_from_env),
                verify: true,
            };
            let report = solve_with(&inst, opts)?;
            if let Some(path) = trace {
                let mut f = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                for rec in &report.stats.trace {
                    writeln!(f, "{}", serde_json::to_string(rec)?)?;
                }
            }
            if cross {
                cross_check(&inst, &report, oracle_cap, &rational_arg(&eps)?, max_iter)?;
            }
            for v in &report.stats.violations {
                eprintln!("warning: {v}");
            }
            emit(output.as_deref(), &SolutionDoc::from_report(&report).to_json())?;
            Ok(if report.outcome.is_feasible() { 0 } else { EXIT_INFEASIBLE })
        }
        Verb::Check { instance, solution } => {
            let inst = read_instance(&instance)?;
            let text = fs::read_to_string(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let doc = SolutionDoc::parse(&text)?;
            if check_document(&inst, &doc)? {
                println!("ok");
                Ok(0)
            } else {
                println!("failed");
                Ok(1)
            }
        }
        Verb::Oracle { instance, cap } => {
            let inst = read_instance(&instance)?;
            let t = feasibility_lp(&inst)?;
            let out = match oracle_solve_capped(&inst, cap)? {
                OracleResult::Infeasible => json!({"verdict": "infeasible", "t_star": fmt_q(&t)}),
                OracleResult::Feasible { p, v, .. } => json!({
                    "verdict": "feasible", "t_star": fmt_q(&t), "p": strings(&p), "v": strings(&v)
                }),
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(if out["verdict"] == "feasible" { 0 } else { EXIT_INFEASIBLE })
        }
        Verb::Gen {
            kind,
            output,
            n,
            g,
            u_max,
            c_max,
            seed,
            delta,
            h,
            scenario,
        } => {
            let text = match kind {
                GenKind::Random => gen_random(n, g, u_max, c_max, seed)?.to_json(),
                GenKind::L1adv => {
                    let h = match h {
                        Some(h) => rational_arg(&h)?,
                        None => Q::from_integer((n as i64).into()),
                    };
                    serde_json::to_string(&gen_l1_adversarial(n, &rational_arg(&delta)?, &h)?)?
                }
                GenKind::Wireless => {
                    let path = scenario.ok_or_else(|| anyhow!("wireless needs --scenario"))?;
                    let sc: WirelessScenario = serde_json::from_str(&fs::read_to_string(&path)?)?;
                    wireless_adapter(&sc.pi, &sc.rates, &sc.c)?.instance.to_json()
                }
            };
            emit(output.as_deref(), &text)?;
            Ok(0)
        }
        Verb::Limit { instance, max_iter, eps } => {
            let inst = read_instance(&instance)?;
            let run = limit_algorithm(&inst, max_iter, &rational_arg(&eps)?)?;
            let out = json!({
                "converged": run.converged,
                "exact": run.exact,
                "iterations": run.iterations,
                "p": strings(&run.p),
                "m": strings(&run.m),
                "stopping_rule": "exact fixed point, max |m' - m| < eps, or max_iter",
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Verb::Bench {
            n,
            g,
            u_max,
            c_max,
            seeds,
            first_seed,
        } => {
            let insts = (first_seed..first_seed + seeds)
                .map(|s| gen_random(n, g, u_max, c_max, s))
                .collect::<adnb::Result<Vec<_>>>()?;
            let opts = SolverOptions {
                trace: false,
                check: 0,
                verify: true,
            };
            println!("seed,n,g,verdict,phases,iterations,maxflows,budget,within_4x");
            for (k, res) in solve_many(&insts, opts).into_iter().enumerate() {
                let r = res?;
                let budget = r.stats.bounds.as_ref().map_or(0, |b| b.maxflow_budget);
                println!(
                    "{},{n},{g},{},{},{},{},{},{}",
                    first_seed + k as u64,
                    if r.outcome.is_feasible() { "feasible" } else { "infeasible" },
                    r.stats.counters.phases,
                    r.stats.counters.iterations,
                    r.stats.counters.maxflows,
                    budget,
                    r.stats.within_budget(),
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
