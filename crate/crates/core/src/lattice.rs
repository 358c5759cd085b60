//! Spin bookkeeping, Boltzmann weights and the strip transfer matrix.
//!
//! Lattice sites are numbered 1..=L+2. Site 1 carries spin +1 and site L+2
//! carries the boundary spin `b`; only the L free sites 2..=L+1 are stored.
//! Free site `j` lives in bit `j - 2` of a state index, bit value 0 meaning
//! spin +1.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_MAX_L: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn from_sign(s: i32) -> Option<Spin> {
        match s {
            1 => Some(Spin::Plus),
            -1 => Some(Spin::Minus),
            _ => None,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Spin::Plus => 1,
            Spin::Minus => -1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    fn bit(self) -> usize {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    fn from_bit(bit: usize) -> Spin {
        if bit == 0 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Spin::Plus => "+1",
            Spin::Minus => "-1",
        })
    }
}

/// The 2^L spin configurations of a strip of width L with boundary spins
/// (+1, b).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    l: usize,
    b: Spin,
}

impl SpinBasis {
    pub fn new(l: usize, b: Spin) -> Result<Self> {
        Self::with_max(l, b, DEFAULT_MAX_L)
    }

    pub fn with_max(l: usize, b: Spin, max_l: usize) -> Result<Self> {
        if l > max_l {
            return Err(Error::DimensionOverflow { l, max: max_l });
        }
        Ok(SpinBasis { l, b })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn b(&self) -> Spin {
        self.b
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    /// True for L = 0, where the strip has no free site.
    pub fn is_degenerate(&self) -> bool {
        self.l == 0
    }

    /// Spin on lattice site `site` (1..=L+2) in state `state`.
    pub fn spin(&self, state: usize, site: usize) -> Spin {
        debug_assert!((1..=self.l + 2).contains(&site));
        if site == 1 {
            Spin::Plus
        } else if site == self.l + 2 {
            self.b
        } else {
            Spin::from_bit((state >> (site - 2)) & 1)
        }
    }

    /// Flips free site `site`; boundary sites are never flipped.
    pub fn flip(&self, state: usize, site: usize) -> Option<usize> {
        if site >= 2 && site <= self.l + 1 {
            Some(state ^ (1 << (site - 2)))
        } else {
            None
        }
    }

    /// Free-site spins, site 2 first.
    pub fn decode(&self, state: usize) -> Vec<Spin> {
        (2..=self.l + 1).map(|site| self.spin(state, site)).collect()
    }

    pub fn encode(&self, spins: &[Spin]) -> Result<usize> {
        if spins.len() != self.l {
            return Err(Error::Domain(format!("expected {} free spins, got {}", self.l, spins.len())));
        }
        Ok(spins.iter().enumerate().fold(0, |acc, (i, s)| acc | (s.bit() << i)))
    }
}

/// A spectral parameter u together with x = csc(4u).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint<S: Scalar> {
    pub u: S,
    pub x: S,
}

impl<S: Scalar> SpectralPoint<S> {
    /// Accepts u in (0, pi/4) away from pi/8, where x diverges.
    pub fn new(u: S) -> Result<Self> {
        let ctx = u.ctx();
        let quarter = S::pi(ctx) / S::from_i64(ctx, 4);
        let eighth = S::pi(ctx) / S::from_i64(ctx, 8);
        let zero = S::zero(ctx);
        let gap = (u.clone() - &eighth).abs().to_f64();
        if u <= zero || u >= quarter || gap < 1e3 * S::epsilon(ctx) {
            return Err(Error::InvalidSpectralPoint { u: u.to_f64() });
        }
        let x = (u.clone() * S::from_i64(ctx, 4)).sin().recip();
        Ok(SpectralPoint { u, x })
    }

    /// The point with w = 1/(2x) = sin(4u)/2 and |u| < pi/8. Negative w
    /// (x < -1) continues the weights analytically to u < 0, where T is the
    /// same polynomial in 1/x.
    pub fn from_w(w: S) -> Result<Self> {
        let ctx = w.ctx();
        let half = S::from_f64(ctx, 0.5);
        if w.is_zero() || w.abs() >= half {
            return Err(Error::Domain(format!("w = {} outside (-1/2, 1/2) or zero", w.to_f64())));
        }
        let u = (w.clone() * S::from_i64(ctx, 2)).asin() / S::from_i64(ctx, 4);
        let x = (w * S::from_i64(ctx, 2)).recip();
        Ok(SpectralPoint { u, x })
    }

    pub fn w(&self) -> S {
        (self.x.clone() * S::from_i64(self.x.ctx(), 2)).recip()
    }

    /// u in (0, pi/8), the branch on which the 1/x series are expanded.
    /// (x > 1 holds on both sides of pi/8; only this branch is continuous
    /// with x = infinity at u = 0.)
    pub fn in_series_regime(&self) -> bool {
        let ctx = self.u.ctx();
        self.u.abs() < S::pi(ctx) / S::from_i64(ctx, 8)
    }
}

fn check_u<S: Scalar>(u: &S) -> Result<()> {
    let ctx = u.ctx();
    let quarter = S::pi(ctx) / S::from_i64(ctx, 4);
    // u < 0 is the analytic continuation used for x < -1
    if !(u.is_finite() && !u.is_zero() && u.abs() < quarter) {
        return Err(Error::SingularWeight { u: u.to_f64() });
    }
    Ok(())
}

fn delta(a: Spin, b: Spin) -> bool {
    a == b
}

fn weight_from<S: Scalar>(rho: Spin, tau: Spin, sigma: Spin, small: &S, large: &S) -> S {
    let ctx = small.ctx();
    // (small d_{s,r} + d_{s,-r}) d_{s,-t} + (large d_{s,r} + d_{s,-r}) d_{s,t}
    let same = delta(sigma, rho);
    if delta(sigma, tau) {
        if same {
            large.clone()
        } else {
            S::one(ctx)
        }
    } else if same {
        small.clone()
    } else {
        S::one(ctx)
    }
}

/// Right weight W_R(rho, tau, sigma | u).
pub fn weight_right<S: Scalar>(rho: Spin, tau: Spin, sigma: Spin, u: &S) -> Result<S> {
    check_u(u)?;
    let ctx = u.ctx();
    let t = (S::pi(ctx) / S::from_i64(ctx, 4) - u).tan();
    if t.is_zero() || !t.is_finite() {
        return Err(Error::SingularWeight { u: u.to_f64() });
    }
    Ok(weight_from(rho, tau, sigma, &t, &t.recip()))
}

/// Left weight W_L(rho, tau, sigma | u), the crossing image of W_R.
pub fn weight_left<S: Scalar>(rho: Spin, tau: Spin, sigma: Spin, u: &S) -> Result<S> {
    check_u(u)?;
    let t = u.tan();
    if t.is_zero() || !t.is_finite() {
        return Err(Error::SingularWeight { u: u.to_f64() });
    }
    Ok(weight_from(rho, tau, sigma, &t, &t.recip()))
}

/// Both weights tabulated over spin triples, index [rho][tau][sigma].
struct WeightTable<S> {
    right: [[[S; 2]; 2]; 2],
    left: [[[S; 2]; 2]; 2],
}

impl<S: Scalar> WeightTable<S> {
    fn new(u: &S) -> Result<Self> {
        let spins = [Spin::Plus, Spin::Minus];
        let mut right: Vec<S> = Vec::with_capacity(8);
        let mut left: Vec<S> = Vec::with_capacity(8);
        for r in spins {
            for t in spins {
                for s in spins {
                    right.push(weight_right(r, t, s, u)?);
                    left.push(weight_left(r, t, s, u)?);
                }
            }
        }
        let pick = |v: &[S], r: usize, t: usize, s: usize| v[r * 4 + t * 2 + s].clone();
        let table = |v: &[S]| {
            [0, 1].map(|r| [0, 1].map(|t| [0, 1].map(|s| pick(v, r, t, s))))
        };
        Ok(WeightTable { right: table(&right), left: table(&left) })
    }

    fn r(&self, rho: Spin, tau: Spin, sigma: Spin) -> &S {
        &self.right[rho.bit()][tau.bit()][sigma.bit()]
    }

    fn l(&self, rho: Spin, tau: Spin, sigma: Spin) -> &S {
        &self.left[rho.bit()][tau.bit()][sigma.bit()]
    }
}

fn contract_entry<S: Scalar>(basis: &SpinBasis, w: &WeightTable<S>, sigma: usize, rho: usize) -> S {
    let l = basis.l();
    let spins = [Spin::Plus, Spin::Minus];
    // v[tau_1] = W_R(1, tau_1, 1)
    let mut v = spins.map(|t| w.r(Spin::Plus, t, Spin::Plus).clone());
    for n in 2..=l + 1 {
        let rn = basis.spin(rho, n);
        let sn = basis.spin(sigma, n);
        let s = v[0].clone() * w.l(rn, Spin::Plus, sn) + v[1].clone() * w.l(rn, Spin::Minus, sn);
        v = spins.map(|t| s.clone() * w.r(rn, t, sn));
    }
    let b = basis.b();
    v[0].clone() * w.l(b, Spin::Plus, b) + v[1].clone() * w.l(b, Spin::Minus, b)
}

/// Transfer matrix T(u) of the strip, entry [sigma][rho], built by
/// contracting the tau chain left to right (cost O(L 4^L)).
pub fn build_transfer<S: Scalar>(basis: &SpinBasis, u: &S) -> Result<SquareMatrix<S>> {
    let w = WeightTable::new(u)?;
    let n = basis.dim();
    let ctx = u.ctx();
    let row = |sigma: usize| -> Vec<S> { (0..n).map(|rho| contract_entry(basis, &w, sigma, rho)).collect() };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<S>> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<S>> = (0..n).map(row).collect();
    let m = SquareMatrix::from_rows(ctx, rows);
    if !m.is_finite() {
        return Err(Error::SingularWeight { u: u.to_f64() });
    }
    Ok(m)
}

/// T(x) = T(u) / (4x)^(L+1): the normalization whose leading coefficient in
/// 1/x is the identity.
pub fn normalized_transfer<S: Scalar>(basis: &SpinBasis, point: &SpectralPoint<S>) -> Result<SquareMatrix<S>> {
    let t = build_transfer(basis, &point.u)?;
    let ctx = point.x.ctx();
    let factor = (point.x.clone() * S::from_i64(ctx, 4)).powi(basis.l() as u32 + 1).recip();
    Ok(t.scale(&factor))
}

/// D(x) = 2^(2L+3) x^(L+1) T(x).
pub fn rescale_to_d<S: Scalar>(t: &SquareMatrix<S>, x: &S, l: usize) -> Result<SquareMatrix<S>> {
    let ctx = x.ctx();
    let factor = S::from_i64(ctx, 2).powi(2 * l as u32 + 3) * x.powi(l as u32 + 1);
    let d = t.scale(&factor);
    if !d.is_finite() {
        return Err(Error::Domain("non-finite entry in D(x)".into()));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SPINS: [Spin; 2] = [Spin::Plus, Spin::Minus];

    #[test]
    fn basis_round_trip() {
        let basis = SpinBasis::new(5, Spin::Minus).unwrap();
        assert_eq!(basis.dim(), 32);
        for s in 0..basis.dim() {
            assert_eq!(basis.encode(&basis.decode(s)).unwrap(), s);
        }
        assert_eq!(basis.spin(0b10, 3), Spin::Minus);
        assert_eq!(basis.spin(7, 1), Spin::Plus);
        assert_eq!(basis.spin(7, 7), Spin::Minus);
        assert_eq!(basis.flip(0, 1), None);
        assert_eq!(basis.flip(0, 7), None);
        assert_eq!(basis.flip(0, 4), Some(0b100));
    }

    #[test]
    fn basis_guard() {
        assert!(matches!(SpinBasis::new(13, Spin::Plus), Err(Error::DimensionOverflow { l: 13, max: 12 })));
        assert!(SpinBasis::with_max(13, Spin::Plus, 14).is_ok());
        assert!(SpinBasis::new(0, Spin::Plus).unwrap().is_degenerate());
    }

    #[test]
    fn weight_examples() {
        let u = 0.13;
        let cot = 1.0 / (PI / 4.0 - u).tan();
        assert!((weight_right(Spin::Plus, Spin::Plus, Spin::Plus, &u).unwrap() - cot).abs() < 1e-15);
        for t in SPINS {
            assert_eq!(weight_right(Spin::Minus, t, Spin::Plus, &u).unwrap(), 1.0);
        }
        let v = weight_right(Spin::Plus, Spin::Minus, Spin::Plus, &(PI / 8.0)).unwrap();
        assert!((v - 0.41421356237309503).abs() < 1e-15);
        assert!((weight_left(Spin::Plus, Spin::Plus, Spin::Plus, &u).unwrap() - 1.0 / u.tan()).abs() < 1e-14);
        assert_eq!(weight_left(Spin::Plus, Spin::Minus, Spin::Minus, &u).unwrap(), 1.0);
    }

    #[test]
    fn crossing() {
        let u = 0.1f64;
        for r in SPINS {
            for t in SPINS {
                for s in SPINS {
                    let l = weight_left(r, t, s, &u).unwrap();
                    let rr = weight_right(r, t, s, &(PI / 4.0 - u)).unwrap();
                    assert!((l - rr).abs() < 1e-14 * l.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn weights_reject_endpoints() {
        assert!(weight_right(Spin::Plus, Spin::Plus, Spin::Plus, &(PI / 4.0)).is_err());
        assert!(weight_left(Spin::Plus, Spin::Plus, Spin::Plus, &0.0).is_err());
        assert!(weight_left(Spin::Plus, Spin::Plus, Spin::Plus, &(-PI / 4.0)).is_err());
        // continuation to u < 0
        assert!(weight_left(Spin::Plus, Spin::Plus, Spin::Plus, &-0.1).is_ok());
        let p = SpectralPoint::from_w(-0.25).unwrap();
        assert!((p.x + 2.0).abs() < 1e-14 && p.u < 0.0 && p.in_series_regime());
        assert!(SpectralPoint::from_w(0.0).is_err());
    }

    #[test]
    fn spectral_point() {
        assert!(SpectralPoint::new(PI / 8.0).is_err());
        assert!(SpectralPoint::new(0.0).is_err());
        let p = SpectralPoint::new(0.1).unwrap();
        assert!((p.x * (0.4f64).sin() - 1.0).abs() < 1e-15);
        assert!(p.in_series_regime());
        assert!(!SpectralPoint::new(0.5).unwrap().in_series_regime());
        let q = SpectralPoint::from_w(0.25).unwrap();
        assert!((q.x - 2.0).abs() < 1e-15);
        assert!((q.u - (0.5f64).asin() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_dimension_and_symmetry() {
        let basis = SpinBasis::new(3, Spin::Plus).unwrap();
        let t = build_transfer(&basis, &0.07).unwrap();
        assert_eq!(t.dim(), 8);
        assert!(t.asymmetry() < 1e-12 * t.max_abs());
    }

    #[test]
    fn l0_transfer_is_scalar() {
        let basis = SpinBasis::new(0, Spin::Plus).unwrap();
        let p = SpectralPoint::new(0.1).unwrap();
        let t = normalized_transfer(&basis, &p).unwrap();
        // single eigenvalue 1 + sin(pi/6)/x
        assert!((t.get(0, 0) - (1.0 + 0.5 / p.x)).abs() < 1e-14);
    }

    #[test]
    fn rescale_example() {
        let t = SquareMatrix::identity(2, ());
        let d = rescale_to_d(&t, &2.0, 1).unwrap();
        assert_eq!(*d.get(0, 0), 128.0);
    }
}
