#![allow(dead_code)]

use adnb::flownet::{max_flow, EqNetwork, Mode};
use adnb::rational::{q, qr, Q};
use adnb::BargainingInstance;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn inst(u: Vec<Vec<u64>>, c: Vec<Q>) -> BargainingInstance {
    BargainingInstance::new(u, c).unwrap()
}

/// Every instance with `n, g <= 2`, utilities in `0..=3` with no zero row or
/// column, and disagreement values in `{0, 1/2, 1, 2}`.
pub fn exhaustive_small() -> Vec<BargainingInstance> {
    let cs = [q(0), qr(1, 2), q(1), q(2)];
    let mut out = Vec::new();
    for n in 1..=2usize {
        for g in 1..=2usize {
            let cells = n * g;
            for code in 0..4usize.pow(cells as u32) {
                let u: Vec<Vec<u64>> = (0..n)
                    .map(|i| (0..g).map(|j| ((code / 4usize.pow((i * g + j) as u32)) % 4) as u64).collect())
                    .collect();
                let rows = u.iter().all(|r| r.iter().any(|&x| x > 0));
                let cols = (0..g).all(|j| u.iter().any(|r| r[j] > 0));
                if !rows || !cols {
                    continue;
                }
                for cc in 0..4usize.pow(n as u32) {
                    let c = (0..n).map(|i| cs[(cc / 4usize.pow(i as u32)) % 4].clone()).collect();
                    out.push(inst(u.clone(), c));
                }
            }
        }
    }
    out
}

fn rand_q(rng: &mut ChaCha8Rng, max_num: i64) -> Q {
    let den = rng.gen_range(1..=6);
    qr(rng.gen_range(0..=max_num * den), den)
}

/// Small fixed-money network with positive supplies and nonnegative demands.
pub fn random_network(seed: u64, max_goods: usize, max_buyers: usize) -> EqNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ng = rng.gen_range(1..=max_goods);
    let nb = rng.gen_range(1..=max_buyers);
    let supply = (0..ng).map(|_| rand_q(&mut rng, 3) + qr(1, 7)).collect();
    let demand = (0..nb).map(|_| rand_q(&mut rng, 3)).collect();
    let mut edges = Vec::new();
    for k in 0..ng {
        for l in 0..nb {
            if rng.gen_bool(0.5) {
                edges.push((k, l));
            }
        }
    }
    EqNetwork::new((0..ng).collect(), (0..nb).collect(), supply, demand, edges, Mode::Fixed)
}

/// The same network with goods and buyers listed in reverse order. Returns
/// the permuted network; buyer `l` of the original is buyer `nb - 1 - l`.
pub fn reversed(net: &EqNetwork) -> EqNetwork {
    let (ng, nb) = (net.num_goods(), net.num_buyers());
    let mut supply = net.supply.clone();
    supply.reverse();
    let mut demand = net.demand.clone();
    demand.reverse();
    let edges = net.edges.iter().map(|&(k, l)| (ng - 1 - k, nb - 1 - l)).collect();
    EqNetwork::new((0..ng).collect(), (0..nb).collect(), supply, demand, edges, net.mode)
}

/// Most flow that can reach the buyers in `set` (a bitmask).
fn rho(net: &EqNetwork, set: usize) -> Q {
    let adj = net.buyer_adjacency();
    let mut best: Option<Q> = None;
    // min over sub-masks b of m(set - b) + p(goods adjacent to b)
    let mut b = set;
    loop {
        let mut goods = vec![false; net.num_goods()];
        let mut value = Q::zero();
        for (l, m) in net.demand.iter().enumerate() {
            if set >> l & 1 == 1 {
                if b >> l & 1 == 1 {
                    adj[l].iter().for_each(|&k| goods[k] = true);
                } else {
                    value += m;
                }
            }
        }
        for (k, p) in net.supply.iter().enumerate() {
            if goods[k] {
                value += p;
            }
        }
        if best.as_ref().is_none_or(|v| value < *v) {
            best = Some(value);
        }
        if b == 0 {
            break;
        }
        b = (b - 1) & set;
    }
    best.unwrap_or_else(Q::zero)
}

fn ordered_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let n = items.len();
    for mask in 1..(1usize << n) {
        let first: Vec<usize> = (0..n).filter(|&t| mask >> t & 1 == 1).map(|t| items[t]).collect();
        let rest: Vec<usize> = (0..n).filter(|&t| mask >> t & 1 == 0).map(|t| items[t]).collect();
        for mut tail in ordered_partitions(&rest) {
            tail.insert(0, first.clone());
            out.push(tail);
        }
    }
    out
}

/// Surplus vector of the maximum flow minimizing the sum of squared
/// surpluses, by enumerating every chain of tight buyer sets. Buyer inflows
/// of maximum flows form the bases of the polymatroid `rho`; within a block
/// of a chain the optimal surpluses are equal.
pub fn brute_force_l2(net: &EqNetwork) -> Vec<Q> {
    let nb = net.num_buyers();
    assert!(nb <= 4, "brute force limited to four buyers");
    let rhos: Vec<Q> = (0..1usize << nb).map(|s| rho(net, s)).collect();
    debug_assert_eq!(rhos[(1 << nb) - 1], max_flow(net).flow.value);
    let buyers: Vec<usize> = (0..nb).collect();
    let mut best: Option<(Q, Vec<Q>)> = None;
    for chain in ordered_partitions(&buyers) {
        let mut theta = vec![Q::zero(); nb];
        let mut prefix = 0usize;
        for block in &chain {
            let next = block.iter().fold(prefix, |acc, &l| acc | 1 << l);
            let money: Q = block.iter().map(|&l| &net.demand[l]).sum();
            let level = (money - (&rhos[next] - &rhos[prefix])) / q(block.len() as i64);
            block.iter().for_each(|&l| theta[l] = level.clone());
            prefix = next;
        }
        let inflow: Vec<Q> = (0..nb).map(|l| &net.demand[l] - &theta[l]).collect();
        let feasible = (1..1usize << nb).all(|s| {
            let f: Q = (0..nb).filter(|&l| s >> l & 1 == 1).map(|l| &inflow[l]).sum();
            f <= rhos[s]
        });
        if !feasible {
            continue;
        }
        let norm: Q = theta.iter().map(|t| t * t).sum();
        if best.as_ref().is_none_or(|(b, _)| norm < *b) {
            best = Some((norm, theta));
        }
    }
    best.expect("the chain of level sets of the optimum is always found").1
}
