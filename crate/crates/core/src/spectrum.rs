//! Analytic eigenvalues labelled by partitions, the inversion identity, and
//! the closed forms for the eigenvalues of the lattice charges.
//!
//! Two orientations of the eigenvalue formula appear below. The *printed*
//! one is lambda_P(x) = prod_{k in P} (x + s_k)/(x - s_k) prod_k (1 - s_k/x)
//! with s_k = sin t_k. The *lattice* one, lambda_P(-x), is what the
//! normalized transfer matrix T(x) actually has in sector b when P has the
//! parity prescribed for b. For odd L the two sets coincide (P maps to its
//! complement, which keeps the parity); for even L they do not.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{alpha_times_iom, binomial, coeff_c, factorial};
use crate::lattice::Spin;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// t_k = (2k-1) pi / (4L+6), k in 1..=L+1.
pub fn t_k<S: Scalar>(l: usize, k: usize, ctx: S::Ctx) -> Result<S> {
    if k == 0 || k > l + 1 {
        return Err(Error::IndexOutOfRange { index: k, max: l + 1 });
    }
    Ok(S::pi(ctx) * S::from_i64(ctx, 2 * k as i64 - 1) / S::from_i64(ctx, 4 * l as i64 + 6))
}

/// sin t_k for k = 1..=L+1.
pub fn sines<S: Scalar>(l: usize, ctx: S::Ctx) -> Vec<S> {
    (1..=l + 1).map(|k| t_k::<S>(l, k, ctx).expect("k in range").sin()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    l: usize,
    members: Vec<usize>,
}

impl Partition {
    pub fn new(l: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("repeated partition member".into()));
        }
        if let Some(&k) = members.iter().find(|&&k| k == 0 || k > l + 1) {
            return Err(Error::IndexOutOfRange { index: k, max: l + 1 });
        }
        Ok(Partition { l, members })
    }

    pub fn empty(l: usize) -> Self {
        Partition { l, members: Vec::new() }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    /// b = +1 for even size, -1 for odd.
    pub fn sector(&self) -> Spin {
        if self.size().is_multiple_of(2) {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }

    /// mu_k = -1 on P, +1 elsewhere.
    pub fn mu(&self, k: usize) -> i64 {
        if self.contains(k) {
            -1
        } else {
            1
        }
    }

    pub fn label(&self) -> String {
        let inner: Vec<String> = self.members.iter().map(|k| k.to_string()).collect();
        format!("{{{}}}", inner.join(","))
    }
}

/// All subsets of {1..L+1} whose size has the parity of sector b.
pub fn enumerate_sector(l: usize, b: Spin) -> Vec<Partition> {
    let n = l + 1;
    let want_even = b == Spin::Plus;
    let mut out: Vec<Partition> = (0u64..(1u64 << n))
        .filter(|mask| (mask.count_ones() % 2 == 0) == want_even)
        .map(|mask| Partition { l, members: (1..=n).filter(|k| mask >> (k - 1) & 1 == 1).collect() })
        .collect();
    out.sort_by(|a, b| a.members.len().cmp(&b.members.len()).then_with(|| a.members.cmp(&b.members)));
    out
}

fn pole_guard<S: Scalar>(x: &S, s: &S) -> Result<()> {
    let d = (x.clone() - s).abs().to_f64();
    if d < 1e3 * S::epsilon(x.ctx()) {
        return Err(Error::PoleProximity { distance: d });
    }
    Ok(())
}

/// Printed form prod_{k in P} (x+s_k)/(x-s_k) prod_{k=1}^{L+1} (1 - s_k/x).
pub fn analytic_eigenvalue<S: Scalar>(p: &Partition, x: &S) -> Result<S> {
    let ctx = x.ctx();
    if x.is_zero() {
        return Err(Error::Domain("x = 0".into()));
    }
    let s = sines::<S>(p.l, ctx);
    let one = S::one(ctx);
    let mut v = one.clone();
    for (i, sk) in s.iter().enumerate() {
        if p.contains(i + 1) {
            pole_guard(x, sk)?;
            v = v * (x.clone() + sk) / (x.clone() - sk);
        }
        v *= one.clone() - sk.clone() / x;
    }
    Ok(v)
}

/// The mu form x^{-(L+1)} prod_k (x - mu_k s_k), identical to
/// [`analytic_eigenvalue`] away from its poles.
pub fn analytic_eigenvalue_mu<S: Scalar>(p: &Partition, x: &S) -> Result<S> {
    let ctx = x.ctx();
    if x.is_zero() {
        return Err(Error::Domain("x = 0".into()));
    }
    let s = sines::<S>(p.l, ctx);
    let mut v = S::one(ctx);
    for (i, sk) in s.iter().enumerate() {
        let term = if p.mu(i + 1) < 0 { x.clone() + sk } else { x.clone() - sk };
        v = v * term / x;
    }
    Ok(v)
}

/// Eigenvalue of the normalized transfer matrix: the printed form at -x,
/// prod_{k in P} (1 - s_k/x) prod_{k not in P} (1 + s_k/x).
pub fn lattice_eigenvalue<S: Scalar>(p: &Partition, x: &S) -> Result<S> {
    analytic_eigenvalue_mu(p, &(-x.clone()))
}

/// Which analytic formula to pair with the lattice spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Orientation {
    Printed,
    Lattice,
}

pub fn sector_eigenvalues<S: Scalar>(l: usize, b: Spin, x: &S, orientation: Orientation) -> Result<Vec<S>> {
    enumerate_sector(l, b)
        .iter()
        .map(|p| match orientation {
            Orientation::Printed => analytic_eigenvalue(p, x),
            Orientation::Lattice => lattice_eigenvalue(p, x),
        })
        .collect()
}

/// U_n(x) by the three-term recurrence.
pub fn chebyshev_u<S: Scalar>(n: usize, x: &S) -> S {
    let ctx = x.ctx();
    let two_x = x.clone() * S::from_i64(ctx, 2);
    let (mut prev, mut cur) = (S::one(ctx), two_x.clone());
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = two_x.clone() * &cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// 2^{2L+2} prod_{k=1}^{L+1} (x^2 - sin^2 t_k), the factorized U_{2L+2}.
pub fn chebyshev_u_product<S: Scalar>(l: usize, x: &S) -> S {
    let ctx = x.ctx();
    let x2 = x.clone() * x;
    sines::<S>(l, ctx)
        .into_iter()
        .fold(S::from_i64(ctx, 2).powi(2 * l as u32 + 2), |acc, s| acc * (x2.clone() - s.clone() * &s))
}

/// (-1)^{L+1} 2^{2L+4} U_{2L+2}(x).
pub fn inversion_scalar<S: Scalar>(l: usize, x: &S) -> S {
    let ctx = x.ctx();
    let v = S::from_i64(ctx, 2).powi(2 * l as u32 + 4) * chebyshev_u(2 * l + 2, x);
    if l.is_multiple_of(2) {
        -v
    } else {
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionResult {
    /// max |D(x)D(-x) - c 1| / |c|
    pub residual: f64,
    /// |U_{2L+2}(x) - product form| / |U_{2L+2}(x)|
    pub factorization_residual: f64,
}

/// D(x) D(-x) against the Chebyshev scalar, given D(x) and D(-x).
pub fn inversion_check<S: Scalar>(l: usize, x: &S, d_plus: &SquareMatrix<S>, d_minus: &SquareMatrix<S>) -> InversionResult {
    let c = inversion_scalar(l, x);
    let prod = d_plus.matmul(d_minus);
    let residual = prod.max_abs_diff(&SquareMatrix::scaled_identity(prod.dim(), c.clone())) / c.abs().to_f64();
    let u = chebyshev_u(2 * l + 2, x);
    let factorization_residual = (u.clone() - chebyshev_u_product(l, x)).abs().to_f64() / u.abs().to_f64();
    InversionResult { residual, factorization_residual }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumMatch {
    /// Largest relative deviation of det(lambda - T) from the product over
    /// the analytic eigenvalues at the probes.
    pub probe_residual: f64,
    /// Relative deviation of Tr T^m from sum lambda^m, m = 1, 2, 3.
    pub trace_residuals: [f64; 3],
    pub probes: usize,
}

impl SpectrumMatch {
    pub fn worst(&self) -> f64 {
        self.trace_residuals.iter().copied().fold(self.probe_residual, f64::max)
    }
}

/// Characteristic-polynomial probing: compares det(lambda 1 - T) with
/// prod_P (lambda - lambda_P) at `probes` random lambda, plus trace moments.
pub fn spectrum_match<S: Scalar, R: Rng>(
    t: &SquareMatrix<S>,
    eigen: &[S],
    probes: usize,
    rng: &mut R,
) -> Result<SpectrumMatch> {
    let ctx = t.ctx();
    let n = t.dim();
    if eigen.len() != n {
        return Err(Error::Domain(format!("{} eigenvalues for dimension {n}", eigen.len())));
    }
    let ev: Vec<f64> = eigen.iter().map(|e| e.to_f64()).collect();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo).max(1e-3 * hi.abs().max(1.0));
    let margin = 0.25 * spread;
    let collision = 1e-6 * spread;
    let mut worst = 0.0f64;
    let mut attempts = 0;
    let mut done = 0;
    while done < probes {
        attempts += 1;
        if attempts > 100 * probes.max(1) {
            return Err(Error::CollisionResampling { attempts });
        }
        let lambda_f = rng.gen_range((lo - margin)..(hi + margin));
        if ev.iter().any(|e| (e - lambda_f).abs() < collision) {
            continue;
        }
        let lambda = S::from_f64(ctx, lambda_f);
        let shifted = (-t.clone()).add_identity(&lambda);
        let det = shifted.determinant();
        let prod = eigen.iter().fold(S::one(ctx), |acc, e| acc * (lambda.clone() - e));
        let r = (det - &prod).abs().to_f64() / prod.abs().to_f64();
        worst = worst.max(r);
        done += 1;
    }
    let mut trace_residuals = [0.0; 3];
    let mut power = t.clone();
    for (m, slot) in trace_residuals.iter_mut().enumerate() {
        if m > 0 {
            power = power.matmul(t);
        }
        let tr = power.trace();
        let sum = eigen.iter().fold(S::zero(ctx), |acc, e| acc + e.powi(m as u32 + 1));
        *slot = (tr - &sum).abs().to_f64() / sum.abs().to_f64();
    }
    Ok(SpectrumMatch { probe_residual: worst, trace_residuals, probes })
}

/// sum_{k=1}^{L+1} sin^r(t_k), by direct summation.
pub fn sine_power_sum<S: Scalar>(l: usize, r: u32, ctx: S::Ctx) -> S {
    sines::<S>(l, ctx).iter().fold(S::zero(ctx), |acc, s| acc + s.powi(r))
}

/// Printed closed form of sum sin^{2n-1}(t_k).
pub fn printed_odd_sine_sum<S: Scalar>(l: usize, n: usize, ctx: S::Ctx) -> S {
    let pi = S::pi(ctx);
    let den = S::from_i64(ctx, 4 * l as i64 + 6);
    let mut acc = S::zero(ctx);
    for k in 0..n {
        let j = (n - k) as i64;
        let sign = if (n - k - 1).is_multiple_of(2) { 1 } else { -1 };
        let c = S::from_bigint(ctx, &binomial(2 * n as u64 - 1, k as u64)) * S::from_i64(ctx, sign);
        let csc = (pi.clone() * S::from_i64(ctx, 2 * j - 1) / &den).sin().recip();
        let arg = pi.clone() * S::from_i64(ctx, 4 * j * l as i64 + 4 * j + 1) / &den;
        acc += c * csc * (S::one(ctx) - arg.sin());
    }
    acc / S::from_i64(ctx, 2).powi(2 * n as u32 - 1)
}

/// (2n)!/n!^2 (L+1) - 2^{2n-1} + C(2n-1, n), the bracket shared by the
/// printed even sine sum and the printed even charge.
fn even_bracket(l: usize, n: usize) -> BigInt {
    let n64 = n as u64;
    factorial(2 * n64) / (factorial(n64) * factorial(n64)) * BigInt::from(l + 1) - (BigInt::from(1) << (2 * n - 1))
        + binomial(2 * n64 - 1, n64)
}

/// Printed closed form of sum sin^{2n}(t_k).
pub fn printed_even_sine_sum<S: Scalar>(l: usize, n: usize, ctx: S::Ctx) -> S {
    -S::from_bigint(ctx, &even_bracket(l, n)) / S::from_i64(ctx, 2).powi(2 * n as u32)
}

/// Printed closed form A_{2n} = -(2n-1)! (bracket), exact.
pub fn printed_even_charge_closed(l: usize, n: usize) -> BigInt {
    -factorial(2 * n as u64 - 1) * even_bracket(l, n)
}

/// Overall sign relating a printed value to an oracle value, if either
/// sign makes them agree to `tol` relative to the larger magnitude.
pub fn fitted_sign(printed: f64, oracle: f64, tol: f64) -> Option<i32> {
    let scale = printed.abs().max(oracle.abs()).max(f64::MIN_POSITIVE);
    if (printed - oracle).abs() <= tol * scale {
        Some(1)
    } else if (printed + oracle).abs() <= tol * scale {
        Some(-1)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignConvention {
    Oracle,
    Printed,
}

/// A_1(P)..A_N(P) for one partition.
#[derive(Debug, Clone)]
pub struct IomEigenTable<S: Scalar> {
    pub partition: Partition,
    pub values: Vec<S>,
    pub convention: SignConvention,
}

/// Coefficients of log prod_k (1 + nu_k s_k / x) in 1/(k! (2x)^k):
/// A_j = (-1)^{j+1} 2^j (j-1)! sum_k (nu_k s_k)^j.
fn log_expansion<S: Scalar>(l: usize, nu: impl Fn(usize) -> i64, order: usize, ctx: S::Ctx) -> Vec<S> {
    let s = sines::<S>(l, ctx);
    (1..=order)
        .map(|j| {
            let sum = s
                .iter()
                .enumerate()
                .fold(S::zero(ctx), |acc, (i, sk)| acc + (sk.clone() * S::from_i64(ctx, nu(i + 1))).powi(j as u32));
            let sign = if j % 2 == 1 { 1 } else { -1 };
            let pre = S::from_bigint(ctx, &(factorial(j as u64 - 1) * (BigInt::from(1) << j))) * S::from_i64(ctx, sign);
            pre * sum
        })
        .collect()
}

/// Charge eigenvalues from the log-expansion of the lattice eigenvalue
/// (factor 1 - s_k/x on P, 1 + s_k/x off P).
pub fn iom_eigen<S: Scalar>(p: &Partition, order: usize, ctx: S::Ctx) -> IomEigenTable<S> {
    IomEigenTable { partition: p.clone(), values: log_expansion(p.l, |k| p.mu(k), order, ctx), convention: SignConvention::Oracle }
}

/// Charge eigenvalues from the log-expansion of the printed eigenvalue form
/// (factor 1 + s_k/x on P, 1 - s_k/x off P).
pub fn iom_eigen_printed_orientation<S: Scalar>(p: &Partition, order: usize, ctx: S::Ctx) -> IomEigenTable<S> {
    IomEigenTable {
        partition: p.clone(),
        values: log_expansion(p.l, |k| -p.mu(k), order, ctx),
        convention: SignConvention::Oracle,
    }
}

/// Printed A_{2n} = 2^{2n} (2n-1)! sum sin^{2n}(t_k).
pub fn printed_even_eigen<S: Scalar>(l: usize, n: usize, ctx: S::Ctx) -> S {
    S::from_bigint(ctx, &(factorial(2 * n as u64 - 1) << (2 * n))) * sine_power_sum::<S>(l, 2 * n as u32, ctx)
}

/// Printed A_{2n-1} = 2^{2n-1} (2n-2)! (-2 sum_P s^{2n-1} + sum_all s^{2n-1}).
pub fn printed_odd_eigen<S: Scalar>(p: &Partition, n: usize, ctx: S::Ctx) -> S {
    let s = sines::<S>(p.l, ctx);
    let r = 2 * n as u32 - 1;
    let mut acc = S::zero(ctx);
    for (i, sk) in s.iter().enumerate() {
        let v = sk.powi(r);
        acc += if p.contains(i + 1) { -v } else { v };
    }
    S::from_bigint(ctx, &(factorial(2 * n as u64 - 2) << (2 * n - 1))) * acc
}

/// Printed divergent part 2^{4(n-1)} (n-1)!^2/(2n-1) (4L+6)/pi - 2^{2(n-1)} (2n-2)!.
pub fn divergent_part<S: Scalar>(l: usize, n: usize, ctx: S::Ctx) -> S {
    let n64 = n as u64;
    let f = factorial(n64 - 1);
    let lead = S::from_ratio(ctx, &BigRational::new((f.clone() * f) << (4 * (n - 1)), BigInt::from(2 * n - 1)))
        * S::from_i64(ctx, 4 * l as i64 + 6)
        / S::pi(ctx);
    lead - S::from_bigint(ctx, &(factorial(2 * n64 - 2) << (2 * (n - 1))))
}

/// Printed A_{2n-1} split into divergent part plus the series over m of
/// C_{n,m} (-1)^m/(2m)! (pi/(2L+3))^{2m-1} alpha_m I_{2m-1}(P), truncated at
/// m = m_max.
pub fn printed_odd_eigen_split<S: Scalar>(p: &Partition, n: usize, m_max: usize, ctx: S::Ctx) -> S {
    let l = p.l;
    let ratio = S::pi(ctx) / S::from_i64(ctx, 2 * l as i64 + 3);
    let mut series = S::zero(ctx);
    for m in n..=m_max {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let exact = coeff_c(n, m) * alpha_times_iom(p.members(), m)
            / BigRational::from_integer(factorial(2 * m as u64))
            * BigRational::from_integer(BigInt::from(sign));
        series += S::from_ratio(ctx, &exact) * ratio.powi(2 * m as u32 - 1);
    }
    let pre = S::from_bigint(ctx, &(factorial(2 * n as u64 - 2) << (2 * n - 1)));
    divergent_part::<S>(l, n, ctx) + pre * series
}

/// Truncated expansion of sum sin^{2n-1}(t_k) in powers of pi/(4L+6): the
/// leading (4L+6)/pi term, -1/2, and the Bernoulli series up to m_max.
pub fn odd_sine_sum_expansion<S: Scalar>(l: usize, n: usize, m_max: usize, ctx: S::Ctx) -> S {
    let n64 = n as u64;
    let f = factorial(n64 - 1);
    // (4L+6)/pi * (n-1)!^2 2^{2n} / (8 (2n-1)!)
    let lead = S::from_ratio(ctx, &BigRational::new((f.clone() * f) << (2 * n), factorial(2 * n64 - 1) * BigInt::from(8)))
        * S::from_i64(ctx, 4 * l as i64 + 6)
        / S::pi(ctx);
    let ratio = S::pi(ctx) / S::from_i64(ctx, 4 * l as i64 + 6);
    let mut acc = lead - S::from_f64(ctx, 0.5);
    for m in n..=m_max {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let exact = coeff_c(n, m) * crate::exact::bernoulli_half(m) * BigRational::from_integer(BigInt::from(1) << (2 * m - 1))
            / BigRational::from_integer(factorial(2 * m as u64))
            * BigRational::from_integer(BigInt::from(sign));
        acc += S::from_ratio(ctx, &exact) * ratio.powi(2 * m as u32 - 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn t_k_values() {
        assert!((t_k::<f64>(0, 1, ()).unwrap() - PI / 6.0).abs() < 1e-15);
        assert!((t_k::<f64>(1, 1, ()).unwrap() - PI / 10.0).abs() < 1e-15);
        assert!((t_k::<f64>(2, 2, ()).unwrap() - 3.0 * PI / 14.0).abs() < 1e-15);
        assert!(t_k::<f64>(2, 4, ()).is_err());
    }

    #[test]
    fn sectors() {
        let plus: Vec<Vec<usize>> = enumerate_sector(2, Spin::Plus).iter().map(|p| p.members().to_vec()).collect();
        assert_eq!(plus, vec![vec![], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let minus: Vec<Vec<usize>> = enumerate_sector(2, Spin::Minus).iter().map(|p| p.members().to_vec()).collect();
        assert_eq!(minus, vec![vec![1], vec![2], vec![3], vec![1, 2, 3]]);
        for l in 0..6 {
            assert_eq!(enumerate_sector(l, Spin::Plus).len() + enumerate_sector(l, Spin::Minus).len(), 1 << (l + 1));
        }
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(2, vec![4]).is_err());
        assert!(Partition::new(2, vec![1, 1]).is_err());
        assert_eq!(Partition::new(2, vec![3, 1]).unwrap().members(), &[1, 3]);
    }

    #[test]
    fn eigenvalue_forms_agree() {
        let p0 = Partition::empty(0);
        assert!((analytic_eigenvalue(&p0, &3.0).unwrap() - (1.0 - 0.5 / 3.0)).abs() < 1e-15);
        assert!((analytic_eigenvalue(&Partition::empty(4), &1e12).unwrap() - 1.0).abs() < 1e-10);
        for l in 0..=5 {
            for b in [Spin::Plus, Spin::Minus] {
                for p in enumerate_sector(l, b) {
                    for x in [1.7, -2.3, 5.0] {
                        let a = analytic_eigenvalue(&p, &x).unwrap();
                        let m = analytic_eigenvalue_mu(&p, &x).unwrap();
                        assert!((a - m).abs() < 1e-12 * a.abs().max(1.0));
                    }
                }
            }
        }
        let p = Partition::new(0, vec![1]).unwrap();
        assert!(matches!(analytic_eigenvalue(&p, &0.5), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn chebyshev() {
        assert_eq!(chebyshev_u(4, &1.0), 5.0);
        assert_eq!(inversion_scalar(1, &1.0), 320.0);
        for x in [0.3, 1.0, 2.5] {
            let u4 = 16.0 * x.powi(4) - 12.0 * x * x + 1.0;
            assert!((chebyshev_u(4, &x) - u4).abs() < 1e-12);
            assert!((chebyshev_u_product(1, &x) - u4).abs() < 1e-12);
        }
        for l in 0..8 {
            let x = 1.37;
            assert!((chebyshev_u(2 * l + 2, &x) / chebyshev_u_product(l, &x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_on_known_spectrum() {
        let t = SquareMatrix::from_rows((), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let good = spectrum_match(&t, &[1.0, 3.0], 5, &mut rng).unwrap();
        assert!(good.worst() < 1e-12);
        let bad = spectrum_match(&t, &[1.0, 2.9], 5, &mut rng).unwrap();
        assert!(bad.worst() > 1e-3);
    }

    #[test]
    fn sine_sums_against_printed() {
        assert!((sine_power_sum::<f64>(0, 1, ()) - 0.5).abs() < 1e-15);
        assert!((printed_odd_sine_sum::<f64>(0, 1, ()) - 0.5).abs() < 1e-15);
        assert!((sine_power_sum::<f64>(0, 2, ()) - 0.25).abs() < 1e-15);
        assert!((printed_even_sine_sum::<f64>(0, 1, ()) + 0.25).abs() < 1e-15);
        // the closed forms hold while 2n stays below the node count 2L+3
        for l in 0..6 {
            for n in (1..5).filter(|&n| n < 2 * l + 3) {
                let direct = sine_power_sum::<f64>(l, 2 * n as u32 - 1, ());
                assert_eq!(fitted_sign(printed_odd_sine_sum::<f64>(l, n, ()), direct, 1e-12), Some(1));
                let direct = sine_power_sum::<f64>(l, 2 * n as u32, ());
                assert_eq!(fitted_sign(printed_even_sine_sum::<f64>(l, n, ()), direct, 1e-12), Some(-1));
            }
        }
    }

    #[test]
    fn even_charge_closed_form_matches_scalar_table() {
        for l in 1..7 {
            for n in 1..=7 {
                let closed = printed_even_charge_closed(l, n);
                let table = crate::iom::printed_even_charge(2 * n, l).unwrap();
                assert_eq!(closed, BigInt::from(table), "L={l} n={n}");
            }
        }
    }

    #[test]
    fn oracle_signs() {
        let l = 3;
        let empty = Partition::empty(l);
        let lat = iom_eigen::<f64>(&empty, 2, ());
        let printed = iom_eigen_printed_orientation::<f64>(&empty, 2, ());
        let s1 = sine_power_sum::<f64>(l, 1, ());
        assert!((lat.values[0] - 2.0 * s1).abs() < 1e-12);
        assert!((printed.values[0] + 2.0 * s1).abs() < 1e-12);
        assert!((lat.values[1] + 7.0).abs() < 1e-12);
        assert!((printed.values[1] + 7.0).abs() < 1e-12);
        assert_eq!(fitted_sign(printed_odd_eigen::<f64>(&empty, 1, ()), lat.values[0], 1e-12), Some(1));
        assert_eq!(fitted_sign(printed_even_eigen::<f64>(l, 1, ()), lat.values[1], 1e-12), Some(-1));
    }

    #[test]
    fn expansion_converges() {
        let l = 4;
        for n in 1..=3 {
            let direct = sine_power_sum::<f64>(l, 2 * n as u32 - 1, ());
            let coarse = (odd_sine_sum_expansion::<f64>(l, n, n + 1, ()) - direct).abs();
            let fine = (odd_sine_sum_expansion::<f64>(l, n, n + 6, ()) - direct).abs();
            assert!(fine < coarse, "n={n} {fine} {coarse}");
            assert!(fine < 1e-8, "n={n} {fine}");
        }
    }

    #[test]
    fn split_form_matches_lattice_oracle() {
        let l = 4;
        for p in enumerate_sector(l, Spin::Plus).into_iter().take(6) {
            let oracle = iom_eigen::<f64>(&p, 5, ());
            for n in 1..=3 {
                let split = printed_odd_eigen_split::<f64>(&p, n, 40, ());
                let r = (split - oracle.values[2 * n - 2]).abs() / oracle.values[2 * n - 2].abs().max(1.0);
                assert!(r < 1e-9, "{} n={n} {r}", p.label());
            }
        }
    }
}
