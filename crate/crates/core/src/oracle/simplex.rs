//! Dense exact simplex for `max c.x` subject to `A x <= b`, `x >= 0`,
//! `b >= 0`, using Bland's rule so it cannot cycle.

use num_traits::{Signed, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult {
    Optimal { value: Q, x: Vec<Q> },
    Unbounded,
}

pub fn maximize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpResult {
    let (m, n) = (a.len(), c.len());
    assert!(b.iter().all(|v| !v.is_negative()), "origin must be feasible");
    // columns: n structural, m slack, then the right-hand side
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = (0..m)
        .map(|r| {
            let mut row = vec![Q::zero(); width];
            row[..n].clone_from_slice(&a[r]);
            row[n + r] = Q::from_integer(1.into());
            row[width - 1] = b[r].clone();
            row
        })
        .collect();
    // reduced costs, z - c
    let mut obj: Vec<Q> = (0..width).map(|k| if k < n { -&c[k] } else { Q::zero() }).collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    while let Some(enter) = (0..n + m).find(|&k| obj[k].is_negative()) {
        let mut leave: Option<(Q, usize, usize)> = None;
        for r in 0..m {
            if t[r][enter].is_positive() {
                let ratio = &t[r][width - 1] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((best, _, var)) => ratio < *best || (ratio == *best && basis[r] < *var),
                };
                if better {
                    leave = Some((ratio, r, basis[r]));
                }
            }
        }
        let Some((_, r, _)) = leave else {
            return LpResult::Unbounded;
        };
        let piv = t[r][enter].clone();
        t[r].iter_mut().for_each(|v| *v /= &piv);
        let prow = t[r].clone();
        for (k, row) in t.iter_mut().enumerate() {
            if k != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                row.iter_mut().zip(&prow).for_each(|(v, p)| *v -= &f * p);
            }
        }
        let f = obj[enter].clone();
        obj.iter_mut().zip(&prow).for_each(|(v, p)| *v -= &f * p);
        basis[r] = enter;
    }
    let mut x = vec![Q::zero(); n];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[r][width - 1].clone();
        }
    }
    LpResult::Optimal {
        value: obj[width - 1].clone(),
        x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn small_lp() {
        // max x + y, x + 2y <= 4, 3x + y <= 6
        let a = vec![vec![q(1), q(2)], vec![q(3), q(1)]];
        match maximize(&a, &[q(4), q(6)], &[q(1), q(1)]) {
            LpResult::Optimal { value, x } => {
                assert_eq!(value, qr(14, 5));
                assert_eq!(x, vec![qr(8, 5), qr(6, 5)]);
            }
            LpResult::Unbounded => panic!(),
        }
        assert_eq!(maximize(&[vec![q(-1)]], &[q(1)], &[q(1)]), LpResult::Unbounded);
    }
}
