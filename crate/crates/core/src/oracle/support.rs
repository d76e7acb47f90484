//! Equilibrium by guessing the support of the allocation. For a fixed
//! support the optimality conditions become linear in the allocation and the
//! inverse prices `q_j = 1 / p_j`:
//!
//! * every good is sold in full: `sum_i x_ij = 1`;
//! * on every support pair: `sum_k u_ik x_ik - u_ij q_j = c_i`.

use num_traits::{One, Signed, Zero};

use crate::certify::check_kkt;
use crate::instance::BargainingInstance;
use crate::rational::{qu, Q};

/// A guessed set of `(buyer, good)` pairs with positive allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGuess {
    pub pairs: Vec<(usize, usize)>,
}

impl SupportGuess {
    pub fn covers(&self, n: usize, g: usize) -> bool {
        let mut b = vec![false; n];
        let mut c = vec![false; g];
        for &(i, j) in &self.pairs {
            b[i] = true;
            c[j] = true;
        }
        b.into_iter().all(|x| x) && c.into_iter().all(|x| x)
    }
}

/// Solves `a x = rhs` exactly; free variables are set to zero. `None` if
/// the system is inconsistent.
pub fn solve_linear(mut a: Vec<Vec<Q>>, mut rhs: Vec<Q>, vars: usize) -> Option<Vec<Q>> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..vars {
        let Some(p) = (r..rows).find(|&k| !a[k][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        rhs.swap(r, p);
        let inv = Q::one() / &a[r][col];
        a[r].iter_mut().for_each(|v| *v *= &inv);
        rhs[r] *= &inv;
        for k in 0..rows {
            if k != r && !a[k][col].is_zero() {
                let f = a[k][col].clone();
                let (src, dst) = if k < r {
                    let (lo, hi) = a.split_at_mut(r);
                    (&hi[0], &mut lo[k])
                } else {
                    let (lo, hi) = a.split_at_mut(k);
                    (&lo[r], &mut hi[0])
                };
                dst.iter_mut().zip(src).for_each(|(d, s)| *d -= &f * s);
                let sub = &f * &rhs[r];
                rhs[k] -= sub;
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows {
            break;
        }
    }
    if rhs[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); vars];
    for (k, &col) in pivots.iter().enumerate() {
        x[col] = rhs[k].clone();
    }
    Some(x)
}

/// Prices and allocation for one guess, if they satisfy every optimality
/// condition exactly.
pub fn try_support(inst: &BargainingInstance, guess: &SupportGuess) -> Option<(Vec<Q>, Vec<Vec<Q>>)> {
    let (n, g) = (inst.n(), inst.g());
    let s = guess.pairs.len();
    let vars = s + g;
    let mut a = Vec::with_capacity(g + s);
    let mut rhs = Vec::with_capacity(g + s);
    for j in 0..g {
        let mut row = vec![Q::zero(); vars];
        for (e, &(_, jj)) in guess.pairs.iter().enumerate() {
            if jj == j {
                row[e] = Q::one();
            }
        }
        a.push(row);
        rhs.push(Q::one());
    }
    for &(i, j) in &guess.pairs {
        let mut row = vec![Q::zero(); vars];
        for (e, &(ii, k)) in guess.pairs.iter().enumerate() {
            if ii == i {
                row[e] = qu(inst.u[i][k]);
            }
        }
        row[s + j] = -qu(inst.u[i][j]);
        a.push(row);
        rhs.push(inst.c[i].clone());
    }
    let sol = solve_linear(a, rhs, vars)?;
    if sol[..s].iter().any(Signed::is_negative) || sol[s..].iter().any(|q| !q.is_positive()) {
        return None;
    }
    let p: Vec<Q> = sol[s..].iter().map(|q| Q::one() / q).collect();
    let mut x = vec![vec![Q::zero(); g]; n];
    for (e, &(i, j)) in guess.pairs.iter().enumerate() {
        x[i][j] = sol[e].clone();
    }
    check_kkt(inst, &p, &x).then_some((p, x))
}

/// All covering supports over the positive-utility pairs, smallest first.
pub fn candidate_supports(inst: &BargainingInstance) -> Vec<SupportGuess> {
    let (n, g) = (inst.n(), inst.g());
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..g).map(move |j| (i, j)))
        .filter(|&(i, j)| inst.u[i][j] > 0)
        .collect();
    let mut masks: Vec<u64> = (1..(1u64 << pairs.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(|m| SupportGuess {
            pairs: (0..pairs.len()).filter(|&k| m >> k & 1 == 1).map(|k| pairs[k]).collect(),
        })
        .filter(|s| s.covers(n, g))
        .collect()
}
