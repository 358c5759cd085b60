//! Polynomial structure of the normalized transfer matrix and the lattice
//! integrals of motion.
//!
//! T(x) = sum_{k=0}^{L+1} D_k / (k! (2x)^k) is recovered from values at real
//! nodes by an entrywise Vandermonde solve, with extra nodes held out to
//! measure how well the polynomial reproduces the lattice. The charges A_k
//! are the coefficients of log T(x) = sum_k A_k / (k! (2x)^k), obtained by
//! inverting the Bell-polynomial relation between the two series.

use crate::error::{Error, Result};
use crate::exact::binomial_i64;
use crate::lattice::{normalized_transfer, SpectralPoint, SpinBasis};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct NodeOptions {
    /// Smallest allowed separation of two nodes in w = 1/(2x).
    pub min_gap: f64,
    /// Largest accepted infinity-norm condition estimate of the Vandermonde
    /// system; `None` derives it from the working precision.
    pub condition_bound: Option<f64>,
}

impl Default for NodeOptions {
    fn default() -> Self {
        NodeOptions { min_gap: 1e-4, condition_bound: None }
    }
}

/// Fit nodes (exactly L+2) plus held-out nodes.
#[derive(Debug, Clone)]
pub struct NodeSet<S: Scalar> {
    pub fit: Vec<SpectralPoint<S>>,
    pub held_out: Vec<SpectralPoint<S>>,
    pub condition: f64,
}

impl<S: Scalar> NodeSet<S> {
    pub fn len(&self) -> usize {
        self.fit.len() + self.held_out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Half-width of the node interval in w; |x| >= 1/(2 W) stays clear of the
/// branch point at |x| = 1.
const NODE_HALF_WIDTH: f64 = 0.49;

fn default_condition_bound<S: Scalar>(ctx: S::Ctx) -> f64 {
    1e-4 / S::epsilon(ctx)
}

/// Vandermonde matrix in v = 1/x = 2w.
fn vandermonde<S: Scalar>(points: &[SpectralPoint<S>]) -> SquareMatrix<S> {
    let ctx = points[0].x.ctx();
    let n = points.len();
    SquareMatrix::from_fn(n, ctx, |j, k| points[j].x.recip().powi(k as u32))
}

/// `count` nodes for a strip of width L: L+2 Chebyshev nodes in w over
/// (-W, W), W just below 1/2, for the fit and, for the remainder, midpoints
/// between neighbouring fit nodes. Nodes on both signs of w keep the
/// monomial Vandermonde system far better conditioned than a one-sided
/// layout. w = 0 is excluded; for odd L+2 the zeros of the next Chebyshev
/// polynomial are used with the leftmost dropped.
pub fn choose_nodes<S: Scalar>(l: usize, count: usize, ctx: S::Ctx, opts: &NodeOptions) -> Result<NodeSet<S>> {
    let n = l + 2;
    if count < n {
        return Err(Error::InfeasibleNodes(format!("{count} nodes requested, at least {n} needed")));
    }
    if count - n > n - 2 {
        return Err(Error::InfeasibleNodes(format!("at most {} held-out nodes available, {} requested", n - 2, count - n)));
    }
    let pi = S::pi(ctx);
    let half_width = S::from_f64(ctx, NODE_HALF_WIDTH);
    let m = if n.is_multiple_of(2) { n } else { n + 1 };
    // zeros of T_m in increasing order
    let mut fit_w: Vec<S> = (0..m as i64)
        .rev()
        .map(|j| half_width.clone() * (pi.clone() * S::from_i64(ctx, 2 * j + 1) / S::from_i64(ctx, 2 * m as i64)).cos())
        .collect();
    if m > n {
        fit_w.remove(0);
    }
    // midpoints, outermost first, skipping the one that straddles w = 0
    let mut mids: Vec<S> = fit_w
        .windows(2)
        .filter(|p| (p[0].clone() * &p[1]).to_f64() > 0.0)
        .map(|p| (p[0].clone() + &p[1]) * S::from_f64(ctx, 0.5))
        .collect();
    mids.sort_by(|a, b| b.abs().to_f64().total_cmp(&a.abs().to_f64()));
    let held_w: Vec<S> = mids.into_iter().take(count - n).collect();
    let mut all: Vec<f64> = fit_w.iter().chain(&held_w).map(|w| w.to_f64()).collect();
    all.sort_by(f64::total_cmp);
    let gap = all.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let origin = all.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
    if gap < opts.min_gap || origin < opts.min_gap {
        return Err(Error::InfeasibleNodes(format!("node gap {gap:e} below {:e}", opts.min_gap)));
    }
    let fit: Vec<SpectralPoint<S>> = fit_w.into_iter().map(SpectralPoint::from_w).collect::<Result<_>>()?;
    let held_out = held_w.into_iter().map(SpectralPoint::from_w).collect::<Result<_>>()?;
    let v = vandermonde(&fit);
    let condition = v.norm_inf() * v.inverse()?.norm_inf();
    let bound = opts.condition_bound.unwrap_or_else(|| default_condition_bound::<S>(ctx));
    if condition > bound {
        return Err(Error::IllConditioned { estimate: condition, bound });
    }
    Ok(NodeSet { fit, held_out, condition })
}

/// Coefficients D_0..D_{L+1} of T(x) in w = 1/(2x).
#[derive(Debug, Clone)]
pub struct MatrixPolynomial<S: Scalar> {
    pub basis: SpinBasis,
    pub coeffs: Vec<SquareMatrix<S>>,
    /// Largest entrywise deviation at held-out nodes, relative to the
    /// largest entry of T there.
    pub fit_residual: f64,
    pub condition: f64,
}

impl<S: Scalar> MatrixPolynomial<S> {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// sum_k D_k w^k / k!
    pub fn evaluate(&self, w: &S) -> SquareMatrix<S> {
        let ctx = w.ctx();
        let dim = self.basis.dim();
        let mut out = SquareMatrix::zeros(dim, ctx);
        let mut factor = S::one(ctx);
        for (k, d) in self.coeffs.iter().enumerate() {
            if k > 0 {
                factor = factor * w / S::from_i64(ctx, k as i64);
            }
            out.axpy_in_place(&factor, d);
        }
        out
    }

    pub fn evaluate_at_x(&self, x: &S) -> SquareMatrix<S> {
        let w = (x.clone() * S::from_i64(x.ctx(), 2)).recip();
        self.evaluate(&w)
    }
}

#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct ExtractOptions {
    /// Rejection threshold for the held-out residual; `None` derives it from
    /// the working precision.
    pub residual_threshold: Option<f64>,
}


pub fn default_fit_threshold<S: Scalar>(ctx: S::Ctx) -> f64 {
    (S::epsilon(ctx) * 1e7).max(1e-60)
}

/// Solves T(x_j) = sum_k D_k / (k! (2x_j)^k) entrywise at the fit nodes.
pub fn extract_d<S: Scalar>(basis: &SpinBasis, nodes: &NodeSet<S>, opts: &ExtractOptions) -> Result<MatrixPolynomial<S>> {
    let n = basis.l() + 2;
    if nodes.fit.len() != n {
        return Err(Error::InfeasibleNodes(format!("{} fit nodes for degree {}", nodes.fit.len(), n - 1)));
    }
    let ctx = nodes.fit[0].x.ctx();
    let vinv = vandermonde(&nodes.fit).inverse()?;
    let values: Vec<SquareMatrix<S>> = nodes.fit.iter().map(|p| normalized_transfer(basis, p)).collect::<Result<_>>()?;
    let dim = basis.dim();
    let mut coeffs = Vec::with_capacity(n);
    let mut scale = S::one(ctx);
    for k in 0..n {
        if k > 0 {
            // coefficient of v^k is D_k / (k! 2^k)
            scale *= S::from_i64(ctx, 2 * k as i64);
        }
        let mut c = SquareMatrix::zeros(dim, ctx);
        for (j, t) in values.iter().enumerate() {
            c.axpy_in_place(vinv.get(k, j), t);
        }
        coeffs.push(c.scale(&scale));
    }
    let mut poly = MatrixPolynomial { basis: *basis, coeffs, fit_residual: 0.0, condition: nodes.condition };
    let threshold = opts.residual_threshold.unwrap_or_else(|| default_fit_threshold::<S>(ctx));
    for p in &nodes.held_out {
        let t = normalized_transfer(basis, p)?;
        let r = t.max_abs_diff(&poly.evaluate_at_x(&p.x)) / t.max_abs().max(f64::MIN_POSITIVE);
        poly.fit_residual = poly.fit_residual.max(r);
    }
    if poly.fit_residual > threshold {
        return Err(Error::FitResidual { residual: poly.fit_residual, threshold });
    }
    let deviation = poly.coeffs[0].max_abs_diff(&SquareMatrix::identity(dim, ctx));
    if deviation > threshold.max(S::epsilon(ctx) * nodes.condition * 1e3) {
        return Err(Error::LeadingCoefficient { deviation });
    }
    Ok(poly)
}

/// The lattice charges A_1..A_N of one sector.
#[derive(Debug, Clone)]
pub struct IomFamily<S: Scalar> {
    pub basis: SpinBasis,
    pub charges: Vec<SquareMatrix<S>>,
    pub digits: u32,
}

impl<S: Scalar> IomFamily<S> {
    /// A_k, k >= 1.
    pub fn charge(&self, k: usize) -> Option<&SquareMatrix<S>> {
        k.checked_sub(1).and_then(|i| self.charges.get(i))
    }

    pub fn order(&self) -> usize {
        self.charges.len()
    }
}

/// Largest ‖[D_i, D_j] v‖ / (‖D_i‖ ‖D_j‖ ‖v‖) over coefficient pairs, with
/// a fixed probe vector v. A nonzero commutator is detected with
/// probability one; the probe keeps the check at O(dim^2) per pair.
pub fn commutation_defect<S: Scalar>(mats: &[SquareMatrix<S>]) -> f64 {
    if mats.is_empty() {
        return 0.0;
    }
    let ctx = mats[0].ctx();
    let dim = mats[0].dim();
    let v: Vec<S> = (0..dim).map(|i| S::from_f64(ctx, 1.0 + ((i * 7919) % 101) as f64 / 97.0)).collect();
    let vnorm = v.iter().map(|s| s.to_f64().abs()).fold(0.0, f64::max);
    let apply = |m: &SquareMatrix<S>, x: &[S]| -> Vec<S> {
        (0..dim)
            .map(|r| {
                let mut acc = S::zero(ctx);
                for (a, b) in m.row(r).iter().zip(x) {
                    if !a.is_zero() {
                        acc += a.mul_ref(b);
                    }
                }
                acc
            })
            .collect()
    };
    let images: Vec<Vec<S>> = mats.iter().map(|m| apply(m, &v)).collect();
    let norms: Vec<f64> = mats.iter().map(|m| m.norm_inf()).collect();
    let mut worst = 0.0f64;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let scale = norms[i] * norms[j] * vnorm;
            if scale == 0.0 {
                continue;
            }
            let ij = apply(&mats[i], &images[j]);
            let ji = apply(&mats[j], &images[i]);
            let d = ij.iter().zip(&ji).map(|(a, b)| (a.clone() - b).abs().to_f64()).fold(0.0, f64::max);
            worst = worst.max(d / scale);
        }
    }
    worst
}

/// Formal logarithm of sum_k D_k w^k / k!, returning A_1..A_N. Treats the
/// coefficients as commuting after checking that they do to `commute_tol`.
pub fn matrix_log<S: Scalar>(poly: &MatrixPolynomial<S>, order: usize, commute_tol: f64) -> Result<IomFamily<S>> {
    let defect = commutation_defect(&poly.coeffs[1..]);
    if defect > commute_tol {
        return Err(Error::NonCommuting { residual: defect });
    }
    let ctx = poly.coeffs[0].ctx();
    let dim = poly.basis.dim();
    let d = |m: usize| poly.coeffs.get(m);
    let mut charges: Vec<SquareMatrix<S>> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut a = d(n).cloned().unwrap_or_else(|| SquareMatrix::zeros(dim, ctx));
        for k in 1..n {
            let Some(dm) = d(n - k) else { continue };
            let c = S::from_i64(ctx, binomial_i64(n as u64 - 1, k as u64 - 1));
            let term = charges[k - 1].matmul(dm);
            a.axpy_in_place(&(-c), &term);
        }
        charges.push(a);
    }
    Ok(IomFamily { basis: poly.basis, charges, digits: S::digits(ctx) })
}

/// D_0..D_N from A_1..A_N through the Bell recurrence
/// D_n = sum_{k=1}^n C(n-1, k-1) A_k D_{n-k}.
pub fn bell_compose<S: Scalar>(charges: &[SquareMatrix<S>], order: usize) -> Result<Vec<SquareMatrix<S>>> {
    if charges.len() < order {
        return Err(Error::MissingIngredient(format!("{} charges for order {order}", charges.len())));
    }
    let Some(first) = charges.first() else {
        return Err(Error::MissingIngredient("empty charge list".into()));
    };
    let ctx = first.ctx();
    let dim = first.dim();
    let mut out = vec![SquareMatrix::identity(dim, ctx)];
    for n in 1..=order {
        let mut acc = SquareMatrix::zeros(dim, ctx);
        for k in 1..=n {
            let c = S::from_i64(ctx, binomial_i64(n as u64 - 1, k as u64 - 1));
            acc.axpy_in_place(&c, &charges[k - 1].matmul(&out[n - k]));
        }
        out.push(acc);
    }
    Ok(out)
}

/// Printed closed form of the even charge A_{2n} as a multiple of the
/// identity, for 2n in 2..=14.
pub fn printed_even_charge(order: usize, l: usize) -> Option<i64> {
    let l = l as i64;
    Some(match order {
        2 => -(2 * l + 1),
        4 => -6 * (6 * l + 1),
        6 => -60 * (40 * l - 4),
        8 => -(352800 * l - 115920),
        10 => -(91445760 * l - 48625920),
        12 => -(36883123200 * l - 26424921600),
        14 => -(21371135385600 * l - 18955051315200),
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct ScalarChargeCheck {
    pub order: usize,
    pub expected: i64,
    /// max |A - c 1| / |c|
    pub residual: f64,
}

/// Compares every extracted even charge up to order 14 with its printed
/// multiple of the identity.
pub fn verify_scalar_charges<S: Scalar>(family: &IomFamily<S>) -> Vec<ScalarChargeCheck> {
    let l = family.basis.l();
    let dim = family.basis.dim();
    (2..=family.order().min(14))
        .step_by(2)
        .filter_map(|order| {
            let expected = printed_even_charge(order, l)?;
            let a = family.charge(order)?;
            let ctx = a.ctx();
            let target = SquareMatrix::scaled_identity(dim, S::from_i64(ctx, expected));
            let residual = a.max_abs_diff(&target) / (expected as f64).abs();
            Some(ScalarChargeCheck { order, expected, residual })
        })
        .collect()
}
