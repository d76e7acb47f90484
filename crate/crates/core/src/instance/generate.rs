use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::BargainingInstance;
use crate::error::{AdnbError, Result};
use crate::rational::{self, q, Q};

const MAX_DENOMINATOR: u64 = 16;

/// Uniform utilities in `[0, u_max]`, redrawn until every row and column has a
/// positive entry, and disagreement utilities `num/den` in `[0, c_max]` with
/// `den <= 16`.
pub fn gen_random(n: usize, g: usize, u_max: u64, c_max: u64, seed: u64) -> Result<BargainingInstance> {
    if n == 0 || g == 0 || u_max == 0 {
        return Err(AdnbError::InvalidArgument(
            "gen_random needs n, g, U >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = loop {
        let u: Vec<Vec<u64>> = (0..n)
            .map(|_| (0..g).map(|_| rng.gen_range(0..=u_max)).collect())
            .collect();
        let rows_ok = u.iter().all(|row| row.iter().any(|&x| x > 0));
        let cols_ok = (0..g).all(|j| u.iter().any(|row| row[j] > 0));
        if rows_ok && cols_ok {
            break u;
        }
    };
    let c = (0..n)
        .map(|_| {
            let den = rng.gen_range(1..=MAX_DENOMINATOR);
            let num = rng.gen_range(0..=c_max * den);
            Q::new(BigInt::from(num), BigInt::from(den))
        })
        .collect();
    BargainingInstance::new(u, c)
}

/// A fixed-money market state at the start of a phase, built so that one
/// phase makes only exponentially small progress in total surplus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct L1Config {
    pub u: Vec<Vec<u64>>,
    #[serde(with = "rational::text_vec")]
    pub m: Vec<Q>,
    #[serde(with = "rational::text_vec")]
    pub p: Vec<Q>,
    /// Price multiplier at which each scheduled edge enters.
    #[serde(with = "rational::text")]
    pub step: Q,
}

/// Buyers and goods are indexed `0..=n`. Buyer `k < n` desires goods `k` and
/// `k+1`; buyer `n` desires only good `n`. The two utilities of buyer `i-1`
/// are set so that good `i` becomes a maximum bang-per-buck good exactly when
/// the price of good `i-1` has been raised by the factor `step = (K+1)/K`.
pub fn gen_l1_adversarial(n: usize, delta: &Q, h: &Q) -> Result<L1Config> {
    if n < 2 || !delta.is_positive() || !h.is_positive() {
        return Err(AdnbError::InvalidArgument(
            "l1 family needs n >= 2, delta > 0, H > 0".into(),
        ));
    }
    let two = q(2);
    let mut m = Vec::with_capacity(n + 1);
    let mut p = Vec::with_capacity(n + 1);
    m.push(q(1) + delta);
    p.push(q(1));
    for i in 1..n {
        let share = delta / Pow::pow(&two, i);
        m.push(share.clone());
        p.push(share);
    }
    let last = h + delta / q(n as i64);
    m.push(last.clone());
    p.push(last);

    let inv_delta = (q(1) / delta).ceil().max(q(1));
    let k = Q::from_integer(BigInt::from(n) * (BigInt::one() << (n + 3))) * inv_delta;
    let step = (&k + q(1)) / &k;

    let mut u = vec![vec![0u64; n + 1]; n + 1];
    for i in 1..=n {
        let ratio = &step * &p[i - 1] / &p[i];
        u[i - 1][i - 1] = to_u64(ratio.numer())?;
        u[i - 1][i] = to_u64(ratio.denom())?;
    }
    u[n][n] = 1;
    debug_assert!(u.iter().all(|row| !row.iter().all(Zero::is_zero)));
    Ok(L1Config { u, m, p, step })
}

fn to_u64(x: &BigInt) -> Result<u64> {
    u64::try_from(x.clone())
        .map_err(|_| AdnbError::InvalidArgument("l1 family utilities overflow u64".into()))
}
