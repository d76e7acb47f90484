mod common;

use adnb::adnb::{relaxed_kkt_gap, stage1_event_x, SolverState, Verdict};
use adnb::balanced::{balanced_flow, scale_flow, verify_property1};
use adnb::certify::{
    check_equilibrium, check_feasibility_witness, check_kkt, recover_prices_from_support, verify_convex_dual,
    verify_lp_dual, ConvexDualCertificate, EquilibriumCheck, LpDualCertificate,
};
use adnb::engine::Instrument;
use adnb::fisher::{fisher_equilibrium, FisherMarket};
use adnb::flownet::{build_network, is_small, max_flow, residual_reachable, EqNetwork, Flow, Mode, Money};
use adnb::instance::{gen_random, wireless_adapter};
use adnb::oracle::{feasibility_lp, limit_algorithm, oracle_solve, OracleResult};
use adnb::rational::{q, qr, Q};
use adnb::{parse_instance, preprocess, solve, Outcome};
use common::inst;

fn unit() -> adnb::BargainingInstance {
    inst(vec![vec![1]], vec![q(0)])
}

fn doubled() -> adnb::BargainingInstance {
    inst(vec![vec![2]], vec![q(1)])
}

fn diagonal() -> adnb::BargainingInstance {
    inst(vec![vec![2, 1], vec![1, 2]], vec![q(0), q(0)])
}

#[test]
fn parse_accepts_valid_and_rejects_negative() {
    let a = parse_instance(r#"{"u":[[1]],"c":["0"]}"#).unwrap();
    assert_eq!((a.n(), a.g()), (1, 1));
    assert_eq!(parse_instance(r#"{"u":[[2,1],[1,2]],"c":["0","0"]}"#).unwrap(), diagonal());
    assert!(parse_instance(r#"{"u":[[1]],"c":["-1"]}"#).is_err());
}

#[test]
fn preprocess_removes_undesired_goods_and_flags_idle_buyers() {
    let (reduced, report) = preprocess(&inst(vec![vec![1, 0]], vec![q(0)])).unwrap();
    assert_eq!(reduced.u, vec![vec![1]]);
    assert_eq!(report.removed_goods, vec![1]);
    let r = solve(&inst(vec![vec![1, 0]], vec![q(0)])).unwrap();
    assert_eq!(r.outcome.solution().unwrap().p, vec![q(1), q(0)]);

    let (_, report) = preprocess(&inst(vec![vec![0], vec![1]], vec![q(0), q(0)])).unwrap();
    assert_eq!(report.zero_buyers, vec![0]);
    assert!(report.is_infeasible());

    let (same, report) = preprocess(&unit()).unwrap();
    assert_eq!(same, unit());
    assert!(report.removed_goods.is_empty() && report.zero_buyers.is_empty());
}

#[test]
fn generator_is_deterministic_with_positive_rows_and_columns() {
    assert_eq!(gen_random(1, 1, 1, 0, 3).unwrap(), unit());
    for seed in 0..20 {
        let a = gen_random(2, 2, 3, 1, seed).unwrap();
        assert_eq!(a, gen_random(2, 2, 3, 1, seed).unwrap());
        assert!(a.u.iter().all(|r| r.iter().any(|&x| x > 0)));
        assert!((0..2).all(|j| a.u.iter().any(|r| r[j] > 0)));
    }
}

#[test]
fn wireless_scenarios_map_to_unit_supply_instances() {
    let a = wireless_adapter(&[q(1)], &[vec![3]], &[q(0)]).unwrap();
    assert_eq!(a.instance.u, vec![vec![3]]);
    assert_eq!(a.map_utility(&[q(3)]), vec![q(3)]);

    let b = wireless_adapter(&[qr(1, 2), qr(1, 2)], &[vec![2, 2]], &[q(0)]).unwrap();
    assert_eq!(b.instance.u, vec![vec![2, 2]]);
    assert_eq!(b.scale, 2.into());
    // the single user gets every state: expected rate 2
    match oracle_solve(&b.instance).unwrap() {
        OracleResult::Feasible { v, .. } => assert_eq!(b.map_utility(&v), vec![q(2)]),
        OracleResult::Infeasible => panic!("feasible scenario"),
    }

    let c = wireless_adapter(&[qr(1, 3)], &[vec![1]], &[q(0)]).unwrap();
    assert_eq!(c.scale, 3.into());
    assert_eq!(c.instance.u, vec![vec![1]]);
}

#[test]
fn network_money_and_edges() {
    let b = build_network(&unit(), &[q(1)], Money::Flexible, None).unwrap();
    assert_eq!(b.bpb.gamma, vec![q(1)]);
    assert_eq!(b.money, vec![q(1)]);
    assert_eq!(b.net.edges, vec![(0, 0)]);

    let b = build_network(&doubled(), &[q(2)], Money::Flexible, None).unwrap();
    assert_eq!(b.bpb.gamma, vec![q(1)]);
    assert_eq!(b.money, vec![q(2)]);

    let b = build_network(&diagonal(), &[q(1), q(1)], Money::Flexible, None).unwrap();
    assert_eq!(b.bpb.sets, vec![vec![0], vec![1]]);
    assert_eq!(b.money, vec![q(1), q(1)]);
}

fn single(supply: Q, demand: Q) -> EqNetwork {
    EqNetwork::new(vec![0], vec![0], vec![supply], vec![demand], vec![(0, 0)], Mode::Fixed)
}

#[test]
fn max_flow_values_and_cuts() {
    let mf = max_flow(&single(q(1), q(1)));
    assert_eq!(mf.flow.value, q(1));
    assert!(mf.min_source_side.is_source_cut());

    let net = single(q(1), qr(1, 2));
    let mf = max_flow(&net);
    assert_eq!(mf.flow.value, qr(1, 2));
    assert!(!mf.min_source_side.is_source_cut());
    assert!(mf.max_source_side.goods.iter().chain(&mf.max_source_side.buyers).all(|&s| s));
    assert_eq!(mf.max_source_side.capacity(&net), qr(1, 2));

    let diag_net = build_network(&diagonal(), &[q(1), q(1)], Money::Flexible, None).unwrap().net;
    assert_eq!(max_flow(&diag_net).flow.value, q(2));
}

#[test]
fn residual_reachability() {
    // a buyer reaches a good only back along an edge carrying flow
    let net = single(q(1), q(1));
    let (goods, _) = residual_reachable(&net, &Flow::zero(&net), &[true]);
    assert_eq!(goods, vec![false]);
    let (goods, _) = residual_reachable(&net, &max_flow(&net).flow, &[true]);
    assert_eq!(goods, vec![true]);

    let diag_net = build_network(&diagonal(), &[q(1), q(1)], Money::Flexible, None).unwrap().net;
    let bal = balanced_flow(&diag_net);
    let (_, reach) = residual_reachable(&diag_net, &bal.flow, &[true, false]);
    assert_eq!(reach, vec![true, false]);
    assert!(verify_property1(&diag_net, &bal.flow).unwrap());
}

#[test]
fn small_prices() {
    assert!(is_small(&unit(), &[qr(1, 2)]));
    assert!(!is_small(&unit(), &[q(2)]));
    assert!(is_small(&inst(vec![vec![1]], vec![q(1)]), &[q(1)]));
}

#[test]
fn balanced_flow_examples() {
    assert_eq!(balanced_flow(&single(q(1), q(1))).surplus.theta, vec![q(0)]);

    let shared = EqNetwork::new(vec![0], vec![0, 1], vec![q(1)], vec![q(1), q(1)], vec![(0, 0), (0, 1)], Mode::Fixed);
    assert_eq!(balanced_flow(&shared).surplus.theta, vec![qr(1, 2), qr(1, 2)]);
    assert_eq!(common::brute_force_l2(&shared), vec![qr(1, 2), qr(1, 2)]);

    let apart = EqNetwork::new(
        vec![0, 1],
        vec![0, 1],
        vec![q(1), q(1)],
        vec![q(1), qr(1, 4)],
        vec![(0, 0), (1, 1)],
        Mode::Fixed,
    );
    let b = balanced_flow(&apart);
    assert_eq!(b.surplus.theta, vec![q(0), q(0)]);
    assert_eq!(b.flow.value, qr(5, 4));
}

#[test]
fn unbalanced_max_flow_fails_property1() {
    let shared = EqNetwork::new(vec![0], vec![0, 1], vec![q(1)], vec![q(1), q(1)], vec![(0, 0), (0, 1)], Mode::Fixed);
    let skewed = Flow {
        edge: vec![q(0), q(1)],
        value: q(1),
    };
    assert!(!verify_property1(&shared, &skewed).unwrap());
    assert!(verify_property1(&single(q(1), q(2)), &max_flow(&single(q(1), q(2))).flow).unwrap());
}

#[test]
fn scaling_matches_recomputation() {
    let inst = doubled();
    let built = build_network(&inst, &[q(1)], Money::Flexible, None).unwrap();
    let bal = balanced_flow(&built.net);
    assert_eq!(bal.surplus.beta, vec![qr(-1, 2)]);
    let (_, same) = scale_flow(&bal.flow, &bal.surplus, &q(1)).unwrap();
    assert_eq!(same, bal.surplus);
    for (x, expect) in [(q(2), q(-1)), (qr(1, 2), qr(-1, 4))] {
        let (_, scaled) = scale_flow(&bal.flow, &bal.surplus, &x).unwrap();
        assert_eq!(scaled.beta, vec![expect]);
        let direct = build_network(&inst, std::slice::from_ref(&x), Money::Flexible, None).unwrap();
        assert_eq!(balanced_flow(&direct.net).surplus.beta, scaled.beta);
    }
}

#[test]
fn fisher_examples() {
    let one = fisher_equilibrium(&FisherMarket::new(vec![vec![1]], vec![q(1)]).unwrap()).unwrap();
    assert_eq!((one.p, one.x), (vec![q(1)], vec![vec![q(1)]]));
    let two = fisher_equilibrium(&FisherMarket::new(vec![vec![1], vec![1]], vec![q(1), q(1)]).unwrap()).unwrap();
    assert_eq!(two.p, vec![q(2)]);
    assert_eq!(two.x, vec![vec![qr(1, 2)], vec![qr(1, 2)]]);
    let diag = fisher_equilibrium(&FisherMarket::unit_money(diagonal().u).unwrap()).unwrap();
    assert_eq!(diag.p, vec![q(1), q(1)]);
    assert_eq!(diag.x, vec![vec![q(1), q(0)], vec![q(0), q(1)]]);
}

fn initial_theta(inst: &adnb::BargainingInstance) -> (Vec<Q>, Vec<Q>, Vec<Q>) {
    let mut st = SolverState::initialize(inst, Instrument::new(false, 2)).unwrap();
    let (_, bal) = st.balance().unwrap();
    let m = (0..inst.n()).map(|i| st.money(i)).collect();
    (st.p.clone(), m, bal.surplus.theta)
}

#[test]
fn initialization_examples() {
    assert_eq!(initial_theta(&unit()), (vec![q(1)], vec![q(1)], vec![q(0)]));
    assert_eq!(initial_theta(&inst(vec![vec![1]], vec![q(1)])), (vec![q(1)], vec![q(2)], vec![q(1)]));
    assert_eq!(initial_theta(&doubled()), (vec![q(1)], vec![qr(3, 2)], vec![qr(1, 2)]));
}

#[test]
fn stage1_verdicts() {
    let run = |inst: &adnb::BargainingInstance| {
        let mut st = SolverState::initialize(inst, Instrument::new(false, 2)).unwrap();
        st.stage1(1000).unwrap()
    };
    assert_eq!(run(&inst(vec![vec![1]], vec![q(1)])), Verdict::Infeasible);
    assert_eq!(run(&doubled()), Verdict::Feasible);
    let split = inst(vec![vec![1, 0], vec![0, 1]], vec![q(2), q(0)]);
    assert_eq!(run(&split), Verdict::Infeasible);
    assert!(feasibility_lp(&split).unwrap() <= q(0));
}

#[test]
fn stage1_event_rule() {
    let one = inst(vec![vec![1]], vec![q(0)]);
    let (x, pairs) = stage1_event_x(&one, &[q(1)], &[q(2)], &[0], &[0]).unwrap();
    assert_eq!((x, pairs), (qr(1, 2), vec![(0, 0)]));

    // buyer 0 would enter at 1/2, buyer 1 at 1/3: the larger factor is met first
    let two = inst(vec![vec![1], vec![1]], vec![q(0), q(0)]);
    let (x, pairs) = stage1_event_x(&two, &[q(1)], &[q(2), q(3)], &[0, 1], &[0]).unwrap();
    assert_eq!((x, pairs), (qr(1, 2), vec![(0, 0)]));

    let (x, pairs) = stage1_event_x(&two, &[q(1)], &[q(2), q(2)], &[0, 1], &[0]).unwrap();
    assert_eq!((x, pairs), (qr(1, 2), vec![(0, 0), (0, 1)]));
}

#[test]
fn end_to_end_examples() {
    let r = solve(&inst(vec![vec![1]], vec![q(1)])).unwrap();
    match &r.outcome {
        Outcome::Infeasible(cert) => {
            let i = inst(vec![vec![1]], vec![q(1)]);
            assert!(verify_lp_dual(&i, &cert.lp_dual));
            assert!(verify_convex_dual(&i, &cert.convex_dual));
        }
        Outcome::Feasible(_) => panic!("v <= 1 = c"),
    }
    let s = solve(&doubled()).unwrap().outcome.solution().cloned().unwrap();
    assert_eq!((s.p, s.v, s.x), (vec![q(2)], vec![q(2)], vec![vec![q(1)]]));
    assert_eq!(solve(&unit()).unwrap().stats.counters.phases, 0);

    let sym = inst(vec![vec![2, 1], vec![1, 2]], vec![qr(1, 2), qr(1, 2)]);
    let s = solve(&sym).unwrap().outcome.solution().cloned().unwrap();
    match oracle_solve(&sym).unwrap() {
        OracleResult::Feasible { p, v, .. } => assert_eq!((s.p, s.v), (p, v)),
        OracleResult::Infeasible => panic!("feasible"),
    }
}

#[test]
fn relaxed_conditions() {
    assert!(relaxed_kkt_gap(&doubled(), &[q(2)]).unwrap().is_terminal());
    let mid = relaxed_kkt_gap(&doubled(), &[q(1)]).unwrap();
    assert!(mid.meaningful && !mid.is_terminal());
    assert_eq!(mid.buyers[0].neg_beta, qr(1, 2));
    assert!(mid.buyers[0].support_tight);
    assert!(!relaxed_kkt_gap(&inst(vec![vec![1]], vec![q(1)]), &[q(1)]).unwrap().meaningful);
}

#[test]
fn equilibrium_and_kkt_checks() {
    assert_eq!(check_equilibrium(&doubled(), &[q(2)]), EquilibriumCheck::Yes(vec![vec![q(1)]]));
    assert!(matches!(check_equilibrium(&doubled(), &[q(1)]), EquilibriumCheck::No(_)));
    assert!(matches!(check_equilibrium(&unit(), &[q(1)]), EquilibriumCheck::Yes(_)));

    assert!(check_kkt(&doubled(), &[q(2)], &[vec![q(1)]]));
    assert!(!check_kkt(&doubled(), &[q(2)], &[vec![qr(1, 2)]]));
    assert!(check_kkt(&unit(), &[q(1)], &[vec![q(1)]]));

    assert!(check_feasibility_witness(&doubled(), &[q(1)]));
    assert!(!check_feasibility_witness(&inst(vec![vec![1]], vec![q(1)]), &[q(1)]));
    assert!(check_feasibility_witness(&unit(), &[qr(1, 2)]));
}

#[test]
fn dual_certificate_checks() {
    let tight = inst(vec![vec![1]], vec![q(1)]);
    assert!(verify_lp_dual(&tight, &LpDualCertificate { y: vec![q(1)], z: vec![q(1)] }));
    assert!(!verify_lp_dual(&doubled(), &LpDualCertificate { y: vec![qr(1, 2)], z: vec![q(1)] }));
    assert!(!verify_lp_dual(&tight, &LpDualCertificate { y: vec![q(2)], z: vec![q(1)] }));

    let split = inst(vec![vec![1, 0], vec![0, 1]], vec![q(2), q(0)]);
    let cert = ConvexDualCertificate {
        buyers: vec![1],
        goods: vec![1],
        p: vec![q(1), q(1)],
    };
    assert!(verify_convex_dual(&split, &cert));
    let leaky = inst(vec![vec![1, 1], vec![0, 1]], vec![q(2), q(0)]);
    assert!(!verify_convex_dual(&leaky, &cert));
    let none = ConvexDualCertificate {
        buyers: vec![],
        goods: vec![],
        p: vec![q(1)],
    };
    assert!(!verify_convex_dual(&doubled(), &none));
}

#[test]
fn price_recovery_from_support() {
    assert_eq!(recover_prices_from_support(&unit(), &[(0, 0)]).unwrap(), vec![q(1)]);
    assert_eq!(recover_prices_from_support(&doubled(), &[(0, 0)]).unwrap(), vec![q(2)]);
    assert_eq!(recover_prices_from_support(&diagonal(), &[(0, 0), (1, 1)]).unwrap(), vec![q(1), q(1)]);
}

#[test]
fn oracle_and_lp_examples() {
    assert!(matches!(oracle_solve(&inst(vec![vec![1]], vec![q(1)])).unwrap(), OracleResult::Infeasible));
    assert_eq!(feasibility_lp(&inst(vec![vec![1]], vec![q(1)])).unwrap(), q(0));
    assert_eq!(feasibility_lp(&doubled()).unwrap(), q(1));
    assert_eq!(feasibility_lp(&inst(vec![vec![1], vec![1]], vec![q(0), q(0)])).unwrap(), qr(1, 2));
}

#[test]
fn limit_iteration_examples() {
    let run = limit_algorithm(&diagonal(), 10, &qr(1, 1000)).unwrap();
    assert!(run.exact && run.iterations == 1);
    assert_eq!(run.p, vec![q(1), q(1)]);

    let run = limit_algorithm(&doubled(), 40, &qr(1, 1_000_000)).unwrap();
    let ms: Vec<Q> = run.history.iter().map(|s| s.m[0].clone()).collect();
    assert_eq!(&ms[..3], &[q(1), qr(3, 2), qr(7, 4)]);
    assert!(run.converged && ms.windows(2).all(|w| w[0] < w[1]));
}
