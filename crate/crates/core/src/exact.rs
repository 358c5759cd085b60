//! Exact integer and rational quantities: binomials, Bernoulli numbers, the
//! sine-sum coefficients C_{n,m} and the normalization alpha_m.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::sync::Mutex;

pub fn binomial_i64(n: u64, k: u64) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r as i64
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << e as usize
}

fn rat(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

/// Bernoulli numbers B_0..=B_n (B_1 = -1/2).
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binomial(m as u64 + 1, k as u64)) * bk;
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// B_{2m}(1/2) = (2^{1-2m} - 1) B_{2m}. Memoized: the series that use it
/// ask for the same orders many times.
pub fn bernoulli_half(m: usize) -> BigRational {
    static CACHE: Mutex<Vec<BigRational>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if cache.len() <= 2 * m {
        *cache = bernoulli_numbers(2 * m.max(20));
    }
    let factor = rat(BigInt::one(), pow2(2 * m as u64 - 1)) - BigRational::one();
    factor * &cache[2 * m]
}

/// C_{n,m} = 2^{2-2n} sum_{k=0}^{n-1} C(2n-1, k) (-1)^{n-k-1} (2(n-k)-1)^{2m-1}.
pub fn coeff_c(n: usize, m: usize) -> BigRational {
    assert!(n >= 1 && m >= 1);
    static CACHE: Mutex<BTreeMap<(usize, usize), BigRational>> = Mutex::new(BTreeMap::new());
    if let Some(c) = CACHE.lock().unwrap_or_else(|e| e.into_inner()).get(&(n, m)) {
        return c.clone();
    }
    let c = coeff_c_uncached(n, m);
    CACHE.lock().unwrap_or_else(|e| e.into_inner()).insert((n, m), c.clone());
    c
}

fn coeff_c_uncached(n: usize, m: usize) -> BigRational {
    let mut acc = BigInt::zero();
    for k in 0..n {
        let sign = if (n - k - 1).is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
        let base = BigInt::from(2 * (n - k) - 1);
        acc += binomial(2 * n as u64 - 1, k as u64) * sign * num_traits::pow(base, 2 * m - 1);
    }
    rat(acc, pow2(2 * n as u64 - 2))
}

/// alpha_n = -sqrt(pi) n (2n-1) 3^n Gamma(4n-1) / (2^{2n-2} n! Gamma(3n-1/2)),
/// exact: with k = 3n-1, Gamma(k+1/2) = (2k)! sqrt(pi) / (4^k k!).
pub fn alpha(n: usize) -> BigRational {
    assert!(n >= 1);
    let n64 = n as u64;
    let k = 3 * n64 - 1;
    let num = BigInt::from(n64 * (2 * n64 - 1))
        * num_traits::pow(BigInt::from(3), n)
        * factorial(4 * n64 - 2)
        * pow2(2 * k)
        * factorial(k);
    let den = pow2(2 * n64 - 2) * factorial(n64) * factorial(2 * k);
    -rat(num, den)
}

/// alpha_m I_{2m-1}(P) = 4m sum_{k in P} (k - 1/2)^{2m-1} + B_{2m}(1/2).
pub fn alpha_times_iom(members: &[usize], m: usize) -> BigRational {
    let mut sum = BigRational::zero();
    for &k in members {
        // (k - 1/2)^{2m-1} = (2k-1)^{2m-1} / 2^{2m-1}
        sum += rat(num_traits::pow(BigInt::from(2 * k as i64 - 1), 2 * m - 1), pow2(2 * m as u64 - 1));
    }
    sum * BigRational::from_integer(BigInt::from(4 * m)) + bernoulli_half(m)
}

/// Coefficients of P_{2m-1}(z) = sum_{n=1}^m C_{n,m} z^{2n-1} / (2n-1), as
/// (power, coefficient) pairs.
pub fn p_polynomial(m: usize) -> Vec<(usize, BigRational)> {
    (1..=m)
        .map(|n| (2 * n - 1, coeff_c(n, m) / BigRational::from_integer(BigInt::from(2 * n - 1))))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_i64(14, 7), 3432);
        assert_eq!(binomial_i64(3, 5), 0);
        assert_eq!(binomial(40, 20), BigInt::from(137846528820u64));
        assert_eq!(factorial(5), BigInt::from(120));
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(8);
        assert_eq!(b[2], r(1, 6));
        assert_eq!(b[4], r(-1, 30));
        assert_eq!(b[8], r(-1, 30));
        assert_eq!(bernoulli_half(1), r(-1, 12));
        assert_eq!(bernoulli_half(2), r(7, 240));
    }

    #[test]
    fn c_coefficients() {
        assert_eq!(coeff_c(1, 1), r(1, 1));
        assert_eq!(coeff_c(2, 1), r(0, 1));
        assert_eq!(coeff_c(2, 2), r(-6, 1));
        for n in 2..=8 {
            for m in 1..n {
                assert!(coeff_c(n, m).is_zero(), "C_({n},{m})");
            }
        }
    }

    #[test]
    fn alpha_values() {
        use statrs::function::gamma::gamma;
        assert_eq!(alpha(1), r(-8, 1));
        for n in 2..=4 {
            let nf = n as f64;
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let direct = -std::f64::consts::PI.sqrt() * nf * (2.0 * nf - 1.0) * 3f64.powf(nf) * gamma(4.0 * nf - 1.0)
                / (2f64.powf(2.0 * nf - 2.0) * fact * gamma(3.0 * nf - 0.5));
            let exact = crate::scalar::ratio_to_f64(&alpha(n));
            assert!((exact / direct - 1.0).abs() < 1e-12, "{exact} {direct}");
        }
    }

    #[test]
    fn cft_normalization_examples() {
        // vacuum and P = {1} at m = 1
        assert_eq!(alpha_times_iom(&[], 1) / alpha(1), r(1, 96));
        assert_eq!(alpha_times_iom(&[1], 1) / alpha(1), r(-23, 96));
    }

    #[test]
    fn p_polynomials() {
        assert_eq!(p_polynomial(1), vec![(1, r(1, 1))]);
        assert_eq!(p_polynomial(2), vec![(1, r(1, 1)), (3, r(-2, 1))]);
    }
}
