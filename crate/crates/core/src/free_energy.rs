//! Bulk and boundary free energies, the resummation of the scalar and
//! divergent parts of the charge eigenvalues, and the 1/x expansion of
//! log lambda_P.
//!
//! Two boundary free energies are kept apart. [`f_bou_printed`] is the
//! closed form log(1-1/x^2) + 1/4 log((1+1/x)/(1-1/x)); [`f_bou`] is what
//! the resummed series actually produce, 1/2 log(1+1/x). They differ by
//! 3/4 log(1-1/x^2), which traces back to the coefficient of log(1-1/x^2)
//! in the closed form of the even sum.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{alpha_times_iom, factorial, p_polynomial};
use crate::scalar::Scalar;
use crate::spectrum::{divergent_part, lattice_eigenvalue, printed_even_charge_closed, Partition};

pub const DEFAULT_HYP_TERMS: usize = 40;
pub const DEFAULT_M_MAX: usize = 10;

/// A truncated 3F2((1/2,1,1);(3/2,3/2); z) together with a bound on the
/// neglected tail.
#[derive(Debug, Clone)]
pub struct Hyp3f2<S> {
    pub value: S,
    pub terms: usize,
    pub tail_bound: f64,
}

fn check_z<S: Scalar>(z: &S) -> Result<()> {
    if !(z.abs() < S::one(z.ctx())) {
        return Err(Error::Domain(format!("3F2 series diverges at z = {}", z.to_f64())));
    }
    Ok(())
}

/// Sum of the first `terms` terms. The k-th term is
/// (2k)!!/((2k+1)!! (2k+1)) z^k; successive ratios stay below |z|, so the
/// tail after the last kept term t is at most |t z| / (1 - |z|).
pub fn hyp3f2_truncated<S: Scalar>(z: &S, terms: usize) -> Result<Hyp3f2<S>> {
    check_z(z)?;
    let ctx = z.ctx();
    let mut term = S::one(ctx);
    let mut value = S::zero(ctx);
    for k in 0..terms {
        value += term.clone();
        let kk = k as i64;
        term = term * z * S::from_i64(ctx, (2 * kk + 2) * (2 * kk + 1)) / S::from_i64(ctx, (2 * kk + 3) * (2 * kk + 3));
    }
    let za = z.abs().to_f64();
    let tail_bound = term.abs().to_f64() / (1.0 - za);
    Ok(Hyp3f2 { value, terms, tail_bound })
}

/// Sums until the tail bound drops below `tol` relative to the value.
pub fn hyp3f2<S: Scalar>(z: &S, tol: f64) -> Result<Hyp3f2<S>> {
    check_z(z)?;
    let ctx = z.ctx();
    let za = z.abs().to_f64();
    let mut term = S::one(ctx);
    let mut value = S::zero(ctx);
    let mut k: i64 = 0;
    loop {
        value += term.clone();
        term = term * z * S::from_i64(ctx, (2 * k + 2) * (2 * k + 1)) / S::from_i64(ctx, (2 * k + 3) * (2 * k + 3));
        k += 1;
        let tail_bound = term.abs().to_f64() / (1.0 - za);
        if tail_bound <= tol * value.abs().to_f64() || term.is_zero() {
            return Ok(Hyp3f2 { value, terms: k as usize, tail_bound });
        }
        if k > 1_000_000 {
            return Err(Error::Domain(format!("3F2 series did not converge at z = {za}")));
        }
    }
}

fn check_x<S: Scalar>(x: &S) -> Result<()> {
    if !(*x > S::one(x.ctx())) {
        return Err(Error::Domain(format!("free energies need x > 1, got {}", x.to_f64())));
    }
    Ok(())
}

fn hyp_at<S: Scalar>(x: &S) -> Result<S> {
    let z = (x.clone() * x).recip();
    Ok(hyp3f2(&z, S::epsilon(x.ctx()))?.value)
}

/// log(1/2 (1 + sqrt(1 - 1/x^2))).
fn log_half_one_plus_root<S: Scalar>(x: &S) -> S {
    let ctx = x.ctx();
    let one = S::one(ctx);
    let root = (one.clone() - (x.clone() * x).recip()).sqrt();
    ((one + root) / S::from_i64(ctx, 2)).ln()
}

/// f_bulk = -1/4 log(1/2 (1 + sqrt(1 - 1/x^2))) - 3F2(1/x^2) / (2 pi x).
pub fn f_bulk<S: Scalar>(x: &S) -> Result<S> {
    check_x(x)?;
    let ctx = x.ctx();
    let quarter = S::from_f64(ctx, 0.25);
    Ok(-(quarter * log_half_one_plus_root(x)) - hyp_at(x)? / (S::pi(ctx) * S::from_i64(ctx, 2) * x))
}

/// Closed form as printed: log(1 - 1/x^2) + 1/4 log((1 + 1/x)/(1 - 1/x)).
pub fn f_bou_printed<S: Scalar>(x: &S) -> Result<S> {
    check_x(x)?;
    let ctx = x.ctx();
    let one = S::one(ctx);
    let v = x.recip();
    let quarter = S::from_f64(ctx, 0.25);
    Ok((one.clone() - v.clone() * &v).ln() + quarter * ((one.clone() + &v) / (one - v)).ln())
}

/// Boundary free energy produced by the resummed series: 1/2 log(1 + 1/x).
pub fn f_bou<S: Scalar>(x: &S) -> Result<S> {
    check_x(x)?;
    let ctx = x.ctx();
    Ok((S::one(ctx) + x.recip()).ln() / S::from_i64(ctx, 2))
}

/// The amount by which the printed boundary free energy exceeds the
/// resummed one, 3/4 log(1 - 1/x^2).
pub fn f_bou_discrepancy<S: Scalar>(x: &S) -> S {
    let ctx = x.ctx();
    S::from_f64(ctx, 0.75) * (S::one(ctx) - (x.clone() * x).recip()).ln()
}

/// Which boundary free energy to use in an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Boundary {
    Printed,
    Resummed,
}

impl Boundary {
    pub fn f<S: Scalar>(self, x: &S) -> Result<S> {
        match self {
            Boundary::Printed => f_bou_printed(x),
            Boundary::Resummed => f_bou(x),
        }
    }
}

/// Partial sums against closed forms, all as absolute deviations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResummationResult {
    /// Even scalar sum vs the printed right side (coefficient 1 on
    /// log(1 - 1/x^2)).
    pub even_printed: f64,
    /// Even scalar sum vs the right side with coefficient 1/4.
    pub even_corrected: f64,
    /// Divergent odd sum vs its closed form.
    pub odd: f64,
    /// |even_printed deviation - 3/4 |log(1-1/x^2)||, small when the
    /// printed mismatch is exactly the coefficient error.
    pub printed_gap_explained: f64,
}

/// Sum_{n=1}^N A_{2n}/((2x)^{2n} (2n)!) with the closed scalar charges.
pub fn even_partial_sum<S: Scalar>(l: usize, x: &S, n_max: usize) -> S {
    let ctx = x.ctx();
    let two_x = x.clone() * S::from_i64(ctx, 2);
    let mut acc = S::zero(ctx);
    for n in 1..=n_max {
        let c = BigRational::new(printed_even_charge_closed(l, n), factorial(2 * n as u64));
        acc += S::from_ratio(ctx, &c) / two_x.powi(2 * n as u32);
    }
    acc
}

/// Sum_{n=1}^N A^div_{2n-1}/((2x)^{2n-1} (2n-1)!).
pub fn odd_divergent_partial_sum<S: Scalar>(l: usize, x: &S, n_max: usize) -> S {
    let ctx = x.ctx();
    let two_x = x.clone() * S::from_i64(ctx, 2);
    let mut acc = S::zero(ctx);
    for n in 1..=n_max {
        let f = S::from_bigint(ctx, &factorial(2 * n as u64 - 1));
        acc += divergent_part::<S>(l, n, ctx) / (f * two_x.powi(2 * n as u32 - 1));
    }
    acc
}

/// (2L+3)/2 log(1/2 (1 + sqrt(1-1/x^2))) - c log(1 - 1/x^2).
pub fn even_closed<S: Scalar>(l: usize, x: &S, log_coefficient: f64) -> S {
    let ctx = x.ctx();
    let one = S::one(ctx);
    S::from_i64(ctx, 2 * l as i64 + 3) / S::from_i64(ctx, 2) * log_half_one_plus_root(x)
        - S::from_f64(ctx, log_coefficient) * (one - (x.clone() * x).recip()).ln()
}

/// (2L+3)/(pi x) 3F2(1/x^2) - 1/4 log((1 + 1/x)/(1 - 1/x)).
pub fn odd_closed<S: Scalar>(l: usize, x: &S) -> Result<S> {
    let ctx = x.ctx();
    let one = S::one(ctx);
    let v = x.recip();
    Ok(S::from_i64(ctx, 2 * l as i64 + 3) / (S::pi(ctx) * x) * hyp_at(x)?
        - S::from_f64(ctx, 0.25) * ((one.clone() + &v) / (one - v)).ln())
}

pub fn resummation_check<S: Scalar>(l: usize, x: &S, n_max: usize) -> Result<ResummationResult> {
    check_x(x)?;
    let even = even_partial_sum(l, x, n_max);
    let odd = odd_divergent_partial_sum(l, x, n_max);
    let even_printed = (even.clone() - even_closed(l, x, 1.0)).abs().to_f64();
    let even_corrected = (even - even_closed(l, x, 0.25)).abs().to_f64();
    let odd = (odd - odd_closed(l, x)?).abs().to_f64();
    let gap = f_bou_discrepancy(x).abs().to_f64();
    Ok(ResummationResult { even_printed, even_corrected, odd, printed_gap_explained: (even_printed - gap).abs() })
}

/// Integral of log(1/sin t + 1/x) over (0, pi/2), with t = s^2 and a
/// geometrically graded panel mesh towards s = 0.
pub fn bulk_integral(x: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("integral needs finite x > 1, got {x}")));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(24).expect("nonzero"));
    let top = std::f64::consts::FRAC_PI_2.sqrt();
    let f = |s: f64| {
        let t = s * s;
        2.0 * s * (1.0 / t.sin() + 1.0 / x).ln()
    };
    let levels = 40;
    let mut total = 0.0;
    let mut hi = top;
    for _ in 0..levels {
        let lo = hi * 0.5;
        total += rule.integrate(lo, hi, f);
        hi = lo;
    }
    // the remaining (0, hi) piece is O(hi^2 log hi)
    total += rule.integrate(0.0, hi, f);
    if !total.is_finite() {
        return Err(Error::Domain(format!("quadrature failed at x = {x}")));
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegralIdentity {
    pub quadrature: f64,
    pub closed: f64,
    pub residual: f64,
}

/// Quadrature of the bulk integral against
/// 3F2(1/x^2)/x + pi/2 log(1 + sqrt(1 - 1/x^2)).
pub fn integral_identity_check(x: f64) -> Result<IntegralIdentity> {
    let quadrature = bulk_integral(x)?;
    let closed = hyp_at(&x)? / x + std::f64::consts::FRAC_PI_2 * (1.0 + (1.0 - 1.0 / (x * x)).sqrt()).ln();
    Ok(IntegralIdentity { quadrature, closed, residual: (quadrature - closed).abs() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BulkComparison {
    pub x: f64,
    /// f_bulk from the hypergeometric closed form.
    pub hypergeometric: f64,
    /// -1/2 (integral + log sqrt 2).
    pub integral_form: f64,
    pub difference: f64,
}

pub fn f_bulk_integral_comparison(x: f64) -> Result<BulkComparison> {
    let hypergeometric = f_bulk(&x)?;
    let integral_form = -0.5 * (bulk_integral(x)? + 0.5 * 2f64.ln());
    Ok(BulkComparison { x, hypergeometric, integral_form, difference: integral_form - hypergeometric })
}

/// Sum_{m=1}^{M} (-1)^m/(2m)! (pi/(2L+3))^{2m-1} alpha_m I_{2m-1}(P) P_{2m-1}(1/x).
pub fn cft_series<S: Scalar>(p: &Partition, x: &S, m_max: usize) -> S {
    let ctx = x.ctx();
    let l = p.l();
    let ratio = S::pi(ctx) / S::from_i64(ctx, 2 * l as i64 + 3);
    let v = x.recip();
    let mut acc = S::zero(ctx);
    for m in 1..=m_max {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let weight = alpha_times_iom(p.members(), m) / BigRational::from_integer(factorial(2 * m as u64))
            * BigRational::from_integer(BigInt::from(sign));
        let poly = p_polynomial(m)
            .into_iter()
            .fold(S::zero(ctx), |a, (power, c)| a + S::from_ratio(ctx, &c) * v.powi(power as u32));
        acc += S::from_ratio(ctx, &weight) * ratio.powi(2 * m as u32 - 1) * poly;
    }
    acc
}

/// -2(2L+3) f_bulk - f_bou + the truncated series.
pub fn log_eigen_expansion<S: Scalar>(p: &Partition, x: &S, m_max: usize, boundary: Boundary) -> Result<S> {
    let ctx = x.ctx();
    let l = p.l();
    let bulk = S::from_i64(ctx, -2 * (2 * l as i64 + 3)) * f_bulk(x)?;
    Ok(bulk - boundary.f(x)? + cft_series(p, x, m_max))
}

/// |log lambda_P(x) - expansion| with lambda_P the lattice eigenvalue.
pub fn log_t_expansion_check<S: Scalar>(p: &Partition, x: &S, m_max: usize, boundary: Boundary) -> Result<f64> {
    check_x(x)?;
    let exact = lattice_eigenvalue(p, x)?.ln();
    Ok((exact - log_eigen_expansion(p, x, m_max, boundary)?).abs().to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spin;
    use crate::spectrum::enumerate_sector;

    #[test]
    fn hyp3f2_basics() {
        assert_eq!(hyp3f2(&0.0, 1e-16).unwrap().value, 1.0);
        assert!(hyp3f2(&1.0, 1e-16).is_err());
        let h = hyp3f2_truncated(&0.25, 40).unwrap();
        assert!(h.tail_bound < 1e-20);
        // 3F2 = z^{-1/2} int_0^{asin sqrt z} t / sin t dt
        let z: f64 = 0.25;
        let top = z.sqrt().asin();
        let rule = GaussLegendre::new(NonZeroUsize::new(30).unwrap());
        let direct = rule.integrate(0.0, top, |t| if t == 0.0 { 1.0 } else { t / t.sin() }) / z.sqrt();
        assert!((h.value - direct).abs() < 1e-13, "{} {}", h.value, direct);
    }

    #[test]
    fn free_energies_vanish_at_infinity() {
        let x = 1e8;
        assert!(f_bulk(&x).unwrap().abs() < 1e-8);
        assert!(f_bou(&x).unwrap().abs() < 1e-8);
        assert!(f_bou_printed(&x).unwrap().abs() < 1e-8);
        assert!(f_bulk(&0.5).is_err());
    }

    #[test]
    fn even_sum_uses_quarter_coefficient() {
        for l in 0..5 {
            let r = resummation_check(l, &2.0, 30).unwrap();
            assert!(r.even_corrected < 1e-12, "L={l} {}", r.even_corrected);
            assert!(r.odd < 1e-12, "L={l} {}", r.odd);
            assert!(r.even_printed > 0.2);
            assert!(r.printed_gap_explained < 1e-12);
        }
    }

    #[test]
    fn even_sum_converges_geometrically() {
        use crate::scalar::{Bits, Extended};
        let ctx = Bits::for_digits(60);
        let x = Extended::from_i64(ctx, 4);
        let exact = even_closed(0, &x, 0.25);
        let r10 = (even_partial_sum(0, &x, 10) - &exact).abs().to_f64();
        let r20 = (even_partial_sum(0, &x, 20) - &exact).abs().to_f64();
        let ratio = r20 / r10;
        let expected = 16f64.powi(-10);
        assert!(ratio < 10.0 * expected && ratio > 0.1 * expected, "{ratio}");
    }

    #[test]
    fn first_even_charge() {
        for l in 0..6 {
            assert_eq!(printed_even_charge_closed(l, 1), BigInt::from(-(2 * l as i64 + 1)));
        }
    }

    #[test]
    fn integral_identity() {
        for x in [1.1, 1.5, 2.0, 10.0, 100.0] {
            let r = integral_identity_check(x).unwrap();
            assert!(r.residual < 1e-10, "x={x} {}", r.residual);
        }
        let far = bulk_integral(1e12).unwrap();
        assert!((far - std::f64::consts::FRAC_PI_2 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bulk_comparison_is_not_a_constant_shift() {
        let d: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&x| f_bulk_integral_comparison(x).unwrap().difference).collect();
        assert!((d[0] - d[1]).abs() > 1e-3 && (d[1] - d[2]).abs() > 1e-3);
        let far = f_bulk_integral_comparison(1e9).unwrap();
        assert!((far.integral_form + 0.5 * (std::f64::consts::FRAC_PI_2 * 2f64.ln() + 0.5 * 2f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn vacuum_expansion() {
        let p = Partition::empty(4);
        let r8 = log_t_expansion_check(&p, &3.0, 8, Boundary::Resummed).unwrap();
        let r4 = log_t_expansion_check(&p, &3.0, 4, Boundary::Resummed).unwrap();
        assert!(r8 < 1e-10, "{r8}");
        assert!(r4 > r8);
        let printed = log_t_expansion_check(&p, &3.0, 8, Boundary::Printed).unwrap();
        assert!((printed - f_bou_discrepancy(&3.0).abs()).abs() < 1e-10);
    }

    #[test]
    fn expansion_over_a_sector() {
        for b in [Spin::Plus, Spin::Minus] {
            for p in enumerate_sector(3, b) {
                let r = log_t_expansion_check(&p, &4.0, 12, Boundary::Resummed).unwrap();
                assert!(r < 1e-5, "{} {r}", p.label());
            }
        }
    }
}
