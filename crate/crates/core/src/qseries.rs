//! Truncated series in q^{1/2} with exact integer coefficients, the
//! finitized characters in partition, fermionic and bosonic form, and the
//! finite-size check of the partition function.
//!
//! Exponents are stored doubled: index d holds the coefficient of q^{d/2}.
//! The "+" sector collects partitions of even size (boundary spin b = +1),
//! the "-" sector those of odd size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_energy::{f_bou, f_bou_printed, f_bulk};
use crate::lattice::{normalized_transfer, SpectralPoint, Spin, SpinBasis};
use crate::matrix::SquareMatrix;

pub const DEFAULT_MAX_CHARACTER_L: usize = 20;

/// Coefficients of the L = infinity characters as printed: q^0..q^13 for
/// "+", q^{1/2}..q^{23/2} for "-".
pub const PRINTED_PLUS: [i128; 14] = [1, 0, 1, 1, 2, 2, 3, 3, 5, 5, 7, 8, 11, 12];
pub const PRINTED_MINUS: [i128; 12] = [1, 1, 1, 1, 2, 2, 3, 4, 5, 6, 8, 9];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<i128>,
    truncation: usize,
}

impl QSeries {
    /// Zero series keeping doubled exponents up to `truncation`.
    pub fn zero(truncation: usize) -> Self {
        QSeries { coeffs: vec![0; truncation + 1], truncation }
    }

    pub fn monomial(doubled_exponent: usize, coeff: i128, truncation: usize) -> Self {
        let mut s = Self::zero(truncation);
        if doubled_exponent <= truncation {
            s.coeffs[doubled_exponent] = coeff;
        }
        s
    }

    pub fn one(truncation: usize) -> Self {
        Self::monomial(0, 1, truncation)
    }

    /// Doubled truncation corresponding to keeping q^0..=q^order.
    pub fn doubled(order: usize) -> usize {
        2 * order
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Coefficient of q^{d/2}; zero beyond the truncation.
    pub fn coeff(&self, doubled_exponent: usize) -> i128 {
        self.coeffs.get(doubled_exponent).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let t = self.truncation.min(other.truncation);
        QSeries { coeffs: (0..=t).map(|d| self.coeff(d) + other.coeff(d)).collect(), truncation: t }
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        let t = self.truncation.min(other.truncation);
        QSeries { coeffs: (0..=t).map(|d| self.coeff(d) - other.coeff(d)).collect(), truncation: t }
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let t = self.truncation.min(other.truncation);
        let mut out = vec![0i128; t + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(t + 1) {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(t + 1 - i) {
                out[i + j] += a * b;
            }
        }
        QSeries { coeffs: out, truncation: t }
    }

    /// Multiplies by q^{d/2}.
    pub fn shift(&self, doubled_exponent: usize) -> QSeries {
        let mut out = Self::zero(self.truncation);
        for d in 0..=self.truncation {
            if d + doubled_exponent > self.truncation {
                break;
            }
            out.coeffs[d + doubled_exponent] = self.coeffs[d];
        }
        out
    }

    pub fn truncated(&self, truncation: usize) -> QSeries {
        let t = truncation.min(self.truncation);
        QSeries { coeffs: self.coeffs[..=t].to_vec(), truncation: t }
    }

    /// Exact division by an integer; fails if any coefficient is not a
    /// multiple.
    pub fn div_exact(&self, k: i128) -> Result<QSeries> {
        if self.coeffs.iter().any(|c| c % k != 0) {
            return Err(Error::NonExactDivision);
        }
        Ok(QSeries { coeffs: self.coeffs.iter().map(|c| c / k).collect(), truncation: self.truncation })
    }

    /// Nonzero (doubled exponent, coefficient) pairs in increasing order.
    pub fn pairs(&self) -> Vec<(usize, i128)> {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0).map(|(d, &c)| (d, c)).collect()
    }

    pub fn min_exponent(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    pub fn coefficient_sum(&self) -> i128 {
        self.coeffs.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0)
    }

    /// Value at a real q in [0, 1), summing the retained terms.
    pub fn evaluate(&self, q: f64) -> f64 {
        let h = q.sqrt();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * h + c as f64)
    }
}

impl Serialize for QSeries {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.pairs().serialize(s)
    }
}

/// Ordinary polynomial in q with integer coefficients, used for the
/// q-binomial.
fn poly_mul(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_div_exact(num: &[i128], den: &[i128]) -> Result<Vec<i128>> {
    let lead = *den.last().ok_or(Error::NonExactDivision)?;
    if num.len() < den.len() {
        return if num.iter().all(|&c| c == 0) { Ok(vec![0]) } else { Err(Error::NonExactDivision) };
    }
    let mut rem = num.to_vec();
    let mut quot = vec![0i128; num.len() - den.len() + 1];
    for i in (0..quot.len()).rev() {
        let top = rem[i + den.len() - 1];
        if top % lead != 0 {
            return Err(Error::NonExactDivision);
        }
        let c = top / lead;
        quot[i] = c;
        for (j, &d) in den.iter().enumerate() {
            rem[i + j] -= c * d;
        }
    }
    if rem.iter().any(|&c| c != 0) {
        return Err(Error::NonExactDivision);
    }
    Ok(quot)
}

/// 1 - q^k as a coefficient vector.
fn one_minus_q_pow(k: usize) -> Vec<i128> {
    let mut v = vec![0; k + 1];
    v[0] = 1;
    v[k] -= 1;
    v
}

/// Gaussian binomial prod_{i<m} (1 - q^{n-i})/(1 - q^{i+1}) as a
/// polynomial in q (integer exponents).
pub fn qbinom_poly(n: usize, m: usize) -> Result<Vec<i128>> {
    if m > n {
        return Ok(vec![0]);
    }
    let mut num = vec![1i128];
    let mut den = vec![1i128];
    for i in 0..m {
        num = poly_mul(&num, &one_minus_q_pow(n - i));
        den = poly_mul(&den, &one_minus_q_pow(i + 1));
    }
    poly_div_exact(&num, &den)
}

/// The q-binomial as a full-length QSeries (truncation 2 m (n - m)).
pub fn qbinom(n: usize, m: usize) -> Result<QSeries> {
    let p = qbinom_poly(n, m)?;
    let truncation = 2 * (p.len() - 1);
    let mut s = QSeries::zero(truncation);
    for (k, &c) in p.iter().enumerate() {
        s.coeffs[2 * k] = c;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sector {
    pub fn from_boundary(b: Spin) -> Sector {
        match b {
            Spin::Plus => Sector::Plus,
            Spin::Minus => Sector::Minus,
        }
    }

    /// Parity of |P| collected by this sector.
    pub fn parity(self) -> usize {
        match self {
            Sector::Plus => 0,
            Sector::Minus => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Plus => "+",
            Sector::Minus => "-",
        }
    }
}

/// Largest doubled exponent of a width-L character, (L+1)^2.
pub fn full_truncation(l: usize) -> usize {
    (l + 1) * (l + 1)
}

fn subset_sum(l: usize, parity: usize, truncation: usize, max_l: usize) -> Result<QSeries> {
    if l > max_l {
        return Err(Error::DimensionOverflow { l, max: max_l });
    }
    let mut s = QSeries::zero(truncation);
    for mask in 0usize..1 << (l + 1) {
        if mask.count_ones() as usize % 2 != parity {
            continue;
        }
        // sum over j in P of (2j - 1), j = bit + 1
        let d: usize = (0..=l).filter(|b| mask >> b & 1 == 1).map(|b| 2 * b + 1).sum();
        if d <= truncation {
            s.coeffs[d] += 1;
        }
    }
    Ok(s)
}

/// Sum over subsets P of {1..L+1} with |P| of the sector's parity of
/// q^{sum_{j in P} (j - 1/2)}.
pub fn char_partition(l: usize, sector: Sector, truncation: usize) -> Result<QSeries> {
    subset_sum(l, sector.parity(), truncation, DEFAULT_MAX_CHARACTER_L)
}

/// The same sum with the parity labels as they appear next to the subset
/// form: odd |P| for "+", even |P| for "-".
pub fn char_partition_printed_labels(l: usize, sector: Sector, truncation: usize) -> Result<QSeries> {
    subset_sum(l, 1 - sector.parity(), truncation, DEFAULT_MAX_CHARACTER_L)
}

/// q^{d/2} times a full polynomial, kept up to `truncation`.
fn shifted(poly: &QSeries, d: usize, truncation: usize) -> QSeries {
    poly.extend(poly.truncation + d).shift(d).extend(truncation)
}

/// "+": sum_m q^{2m^2} [L+1, 2m]_q; "-": sum_m q^{2m^2-2m+1/2} [L+1, 2m-1]_q.
pub fn char_fermionic(l: usize, sector: Sector, truncation: usize) -> Result<QSeries> {
    let n = l + 1;
    let mut s = QSeries::zero(truncation);
    match sector {
        Sector::Plus => {
            for m in 0..=n / 2 {
                let b = qbinom(n, 2 * m)?;
                s = s.add(&shifted(&b, 4 * m * m, truncation));
            }
        }
        Sector::Minus => {
            for m in 1..=n / 2 + 1 {
                if 2 * m - 1 > n {
                    break;
                }
                let b = qbinom(n, 2 * m - 1)?;
                s = s.add(&shifted(&b, 4 * m * m - 4 * m + 1, truncation));
            }
        }
    }
    Ok(s)
}

impl QSeries {
    /// Re-expresses the series at another truncation, dropping or
    /// zero-padding. Dropping is exact; padding is exact only for
    /// polynomials whose full support was retained.
    fn extend(&self, truncation: usize) -> QSeries {
        let mut s = QSeries::zero(truncation);
        let shifted_top = self.truncation.min(truncation);
        s.coeffs[..=shifted_top].copy_from_slice(&self.coeffs[..=shifted_top]);
        s
    }
}

/// 1/2 (prod (1 + q^{k-1/2}) +/- prod (1 - q^{k-1/2})).
pub fn char_bosonic(l: usize, sector: Sector, truncation: usize) -> Result<QSeries> {
    let mut plus = QSeries::one(truncation);
    let mut minus = QSeries::one(truncation);
    for k in 1..=l + 1 {
        let d = 2 * k - 1;
        plus = plus.mul(&QSeries::one(truncation).add(&QSeries::monomial(d, 1, truncation)));
        minus = minus.mul(&QSeries::one(truncation).sub(&QSeries::monomial(d, 1, truncation)));
    }
    let combined = match sector {
        Sector::Plus => plus.add(&minus),
        Sector::Minus => plus.sub(&minus),
    };
    combined.div_exact(2)
}

/// Outcome of comparing the three forms at one (L, sector).
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CharacterComparison {
    pub l: usize,
    pub sector: Sector,
    pub truncation: usize,
    pub partition_eq_fermionic: bool,
    pub partition_eq_bosonic: bool,
    /// Whether the subset sum with the swapped parity labels also agrees.
    pub printed_labels_agree: bool,
    pub nonnegative: bool,
    /// Coefficient sum of the full polynomial (2^L expected).
    pub dimension: i128,
    pub min_exponent: Option<usize>,
    /// Number of doubled exponents at which any two forms differ.
    pub mismatches: usize,
}

impl CharacterComparison {
    pub fn all_equal(&self) -> bool {
        self.partition_eq_fermionic && self.partition_eq_bosonic
    }
}

pub fn compare_forms(l: usize, sector: Sector, truncation: usize) -> Result<CharacterComparison> {
    let p = char_partition(l, sector, truncation)?;
    let f = char_fermionic(l, sector, truncation)?;
    let b = char_bosonic(l, sector, truncation)?;
    let printed = char_partition_printed_labels(l, sector, truncation)?;
    let full = char_partition(l, sector, full_truncation(l))?;
    let mismatches = (0..=truncation).filter(|&d| p.coeff(d) != f.coeff(d) || p.coeff(d) != b.coeff(d)).count();
    Ok(CharacterComparison {
        l,
        sector,
        truncation,
        partition_eq_fermionic: p == f,
        partition_eq_bosonic: p == b,
        printed_labels_agree: printed == f,
        nonnegative: p.is_nonnegative() && f.is_nonnegative() && b.is_nonnegative(),
        dimension: full.coefficient_sum(),
        min_exponent: p.min_exponent(),
        mismatches,
    })
}

/// The bosonic character at L = 2 * order, which is stable below q^order.
pub fn virasoro_limit(sector: Sector, order: usize) -> Result<QSeries> {
    let truncation = QSeries::doubled(order);
    char_bosonic(2 * order.max(1), sector, truncation)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VirasoroComparison {
    pub sector: Sector,
    pub computed: Vec<i128>,
    pub printed: Vec<i128>,
    pub matches: bool,
    /// L and L+1 agree below the compared order.
    pub stable: bool,
}

/// Compares the large-L character with the printed expansion.
pub fn compare_virasoro(sector: Sector) -> Result<VirasoroComparison> {
    let (printed, offset): (&[i128], usize) = match sector {
        Sector::Plus => (&PRINTED_PLUS, 0),
        Sector::Minus => (&PRINTED_MINUS, 1),
    };
    let order = printed.len();
    let limit = virasoro_limit(sector, order)?;
    let computed: Vec<i128> = (0..printed.len()).map(|i| limit.coeff(2 * i + offset)).collect();
    let truncation = QSeries::doubled(order);
    let next = char_bosonic(2 * order + 1, sector, truncation)?;
    Ok(VirasoroComparison {
        sector,
        matches: computed == printed,
        printed: printed.to_vec(),
        computed,
        stable: next == limit,
    })
}

/// log Tr m^k by binary powering with renormalization after every product.
pub fn log_trace_power(m: &SquareMatrix<f64>, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok((m.dim() as f64).ln());
    }
    let normalize = |a: SquareMatrix<f64>| -> Result<(SquareMatrix<f64>, f64)> {
        let s = a.max_abs();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain("matrix power vanished or overflowed".into()));
        }
        Ok((a.scale(&s.recip()), s.ln()))
    };
    let (mut base, mut base_log) = normalize(m.clone())?;
    let mut acc: Option<(SquareMatrix<f64>, f64)> = None;
    let mut e = k;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => (base.clone(), base_log),
                Some((a, l)) => {
                    let (n, s) = normalize(a.matmul(&base))?;
                    (n, l + base_log + s)
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        let (n, s) = normalize(base.matmul(&base))?;
        base = n;
        base_log = 2.0 * base_log + s;
    }
    let (a, l) = acc.expect("k > 0");
    let tr = a.trace();
    if !(tr > 0.0) {
        return Err(Error::Domain(format!("non-positive trace {tr}")));
    }
    Ok(l + tr.ln())
}

/// Finite-size comparison of log Tr T^M with the bulk, boundary and
/// character prediction, in the printed normalization and in the one
/// implied by the resummed expansion.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionFunctionPoint {
    pub l: usize,
    pub m: u32,
    pub b: i32,
    pub u: f64,
    pub x: f64,
    pub log_z: f64,
    /// |log Z - prediction| with the printed f_bou and q = exp(-pi M/((2L+3)x)).
    pub printed_deviation: f64,
    /// Same with f_bou = 1/2 log(1+1/x) and q = exp(-2 pi M/((2L+3)x)).
    pub corrected_deviation: f64,
}

fn prediction(l: usize, m: u32, x: f64, f_b: f64, q: f64, chi: &QSeries) -> Result<f64> {
    let mf = m as f64;
    let log_div = -2.0 * mf * (2 * l + 3) as f64 * f_bulk(&x)? - mf * f_b;
    Ok(log_div - q.ln() / 48.0 + chi.evaluate(q).ln())
}

pub fn partition_function_check(l: usize, m: u32, b: Spin, u: f64) -> Result<PartitionFunctionPoint> {
    if m == 0 {
        return Err(Error::Domain("M must be at least 1".into()));
    }
    let point = SpectralPoint::new(u)?;
    if !point.in_series_regime() {
        return Err(Error::Domain(format!("u = {u} outside (0, pi/8)")));
    }
    let x = point.x;
    let basis = SpinBasis::new(l, b)?;
    let t = normalized_transfer(&basis, &point)?;
    let log_z = log_trace_power(&t, m)?;
    let chi = char_partition(l, Sector::from_boundary(b), full_truncation(l))?;
    let width = (2 * l + 3) as f64 * x;
    let q_printed = (-std::f64::consts::PI * m as f64 / width).exp();
    let q_corrected = (-2.0 * std::f64::consts::PI * m as f64 / width).exp();
    let printed = prediction(l, m, x, f_bou_printed(&x)?, q_printed, &chi)?;
    let corrected = prediction(l, m, x, f_bou(&x)?, q_corrected, &chi)?;
    Ok(PartitionFunctionPoint {
        l,
        m,
        b: b.sign(),
        u,
        x,
        log_z,
        printed_deviation: (log_z - printed).abs(),
        corrected_deviation: (log_z - corrected).abs(),
    })
}

/// Deviations along a sequence of (L, M) and whether each decreases
/// strictly along it.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionTrend {
    pub points: Vec<PartitionFunctionPoint>,
    pub printed_decreasing: bool,
    pub corrected_decreasing: bool,
}

pub fn partition_trend(steps: &[(usize, u32)], b: Spin, u: f64) -> Result<PartitionTrend> {
    let points: Vec<PartitionFunctionPoint> =
        steps.iter().map(|&(l, m)| partition_function_check(l, m, b, u)).collect::<Result<_>>()?;
    let decreasing = |f: fn(&PartitionFunctionPoint) -> f64| points.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    Ok(PartitionTrend {
        printed_decreasing: decreasing(|p| p.printed_deviation),
        corrected_decreasing: decreasing(|p| p.corrected_deviation),
        points,
    })
}

/// (L, 2L) for L = L0, 2 L0, 4 L0, 8 L0.
pub fn doubling_steps(l0: usize, ratio: u32) -> Vec<(usize, u32)> {
    (0..4).map(|i| (l0 << i, ratio * (l0 << i) as u32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(pairs: &[(usize, i128)], t: usize) -> QSeries {
        let mut s = QSeries::zero(t);
        for &(d, c) in pairs {
            s.coeffs[d] = c;
        }
        s
    }

    #[test]
    fn qbinomials() {
        assert_eq!(qbinom_poly(5, 0).unwrap(), vec![1]);
        assert_eq!(qbinom_poly(2, 1).unwrap(), vec![1, 1]);
        assert_eq!(qbinom_poly(4, 2).unwrap(), vec![1, 1, 2, 1, 1]);
        assert_eq!(qbinom_poly(2, 3).unwrap(), vec![0]);
        // at q = 1 the Gaussian binomial is the ordinary one
        for n in 0..12 {
            for m in 0..=n {
                let s: i128 = qbinom_poly(n, m).unwrap().iter().sum();
                assert_eq!(s, crate::exact::binomial_i64(n as u64, m as u64) as i128);
            }
        }
    }

    #[test]
    fn non_exact_division_is_reported() {
        assert!(matches!(poly_div_exact(&[1, 0, 1], &[1, 1]), Err(Error::NonExactDivision)));
        assert!(QSeries::one(4).div_exact(2).is_err());
    }

    #[test]
    fn width_one_characters() {
        let t = full_truncation(1);
        assert_eq!(char_partition(1, Sector::Plus, t).unwrap(), series(&[(0, 1), (4, 1)], t));
        assert_eq!(char_partition(1, Sector::Minus, t).unwrap(), series(&[(1, 1), (3, 1)], t));
        assert_eq!(char_fermionic(1, Sector::Plus, t).unwrap(), series(&[(0, 1), (4, 1)], t));
        assert_eq!(char_bosonic(1, Sector::Minus, t).unwrap(), series(&[(1, 1), (3, 1)], t));
    }

    #[test]
    fn sectors_sum_to_the_full_product() {
        for l in 0..8 {
            let t = full_truncation(l);
            let plus = char_bosonic(l, Sector::Plus, t).unwrap();
            let minus = char_bosonic(l, Sector::Minus, t).unwrap();
            assert_eq!(plus.add(&minus).coefficient_sum(), 1 << (l + 1));
            assert_eq!(plus.coefficient_sum(), 1 << l);
        }
    }

    #[test]
    fn printed_labels_disagree() {
        let c = compare_forms(3, Sector::Plus, 20).unwrap();
        assert!(c.all_equal());
        assert!(!c.printed_labels_agree);
        assert_eq!(c.min_exponent, Some(0));
        assert_eq!(compare_forms(3, Sector::Minus, 20).unwrap().min_exponent, Some(1));
    }

    #[test]
    fn virasoro_lists() {
        for s in [Sector::Plus, Sector::Minus] {
            let v = compare_virasoro(s).unwrap();
            assert!(v.matches, "{:?} {:?}", v.computed, v.printed);
            assert!(v.stable);
        }
    }

    #[test]
    fn evaluate_and_serialize() {
        let s = series(&[(0, 1), (1, 2), (4, 3)], 6);
        assert!((s.evaluate(0.25) - (1.0 + 2.0 * 0.5 + 3.0 * 0.0625)).abs() < 1e-15);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0,1],[1,2],[4,3]]");
    }

    #[test]
    fn log_trace_of_powers() {
        let m = SquareMatrix::<f64>::from_rows((), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        // eigenvalues 3 and 1
        for k in [1u32, 2, 5, 40] {
            let expected = (3f64.powi(k as i32) + 1.0).ln();
            assert!((log_trace_power(&m, k).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_function_is_finite() {
        let p = partition_function_check(2, 4, Spin::Plus, 0.1).unwrap();
        assert!(p.log_z.is_finite() && p.printed_deviation.is_finite() && p.corrected_deviation.is_finite());
        assert!(partition_function_check(2, 4, Spin::Plus, 0.5).is_err());
    }
}
