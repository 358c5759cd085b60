//! Verification suites. Each suite turns a [`Config`] into check records;
//! [`run`] dispatches a command in the configured precision and assembles
//! the report.
//!
//! Independent (L, b) jobs run concurrently when the `parallel` feature is
//! on; their records are concatenated in job order, so the report does not
//! depend on scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::free_energy::{
    even_closed, f_bou, f_bou_discrepancy, f_bulk, f_bulk_integral_comparison, integral_identity_check,
    log_t_expansion_check, odd_closed, resummation_check, Boundary,
};
use crate::iom::{
    bell_compose, choose_nodes, commutation_defect, default_fit_threshold, extract_d, matrix_log, verify_scalar_charges,
    ExtractOptions, IomFamily, MatrixPolynomial, NodeOptions,
};
use crate::lattice::{normalized_transfer, rescale_to_d, weight_left, weight_right, SpectralPoint, Spin, SpinBasis};
use crate::matrix::SquareMatrix;
use crate::qseries::{compare_forms, compare_virasoro, doubling_steps, partition_trend, QSeries, Sector};
use crate::report::{CheckRecord, Status, VerificationReport};
use crate::scalar::{Bits, Extended, PrecisionMode, Scalar};
use crate::spectrum::{
    analytic_eigenvalue, analytic_eigenvalue_mu, enumerate_sector, fitted_sign, inversion_check, iom_eigen,
    lattice_eigenvalue, printed_even_charge_closed, printed_even_eigen, printed_even_sine_sum, printed_odd_eigen,
    printed_odd_eigen_split, printed_odd_sine_sum, sector_eigenvalues, sine_power_sum, spectrum_match, Orientation,
};
use crate::tl::{nested_hamiltonian, verify_tl_relations, Decomposer, RelationKind, RelationStatus, TlGenerators};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Inversion,
    Spectrum,
    Tl,
    Iom,
    Characters,
    FreeEnergy,
    PartitionFunction,
    ExtractIom,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Inversion => "inversion",
            Command::Spectrum => "spectrum",
            Command::Tl => "tl",
            Command::Iom => "iom",
            Command::Characters => "characters",
            Command::FreeEnergy => "free-energy",
            Command::PartitionFunction => "partition-function",
            Command::ExtractIom => "extract-iom",
            Command::All => "all",
        }
    }
}

/// Per-check tolerances for one precision mode.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub inversion: f64,
    pub spectrum: f64,
    pub scalar_charges: f64,
    pub iom: f64,
    pub pairing: f64,
    pub resummation: f64,
    pub integral: f64,
    pub expansion: f64,
}

impl Tolerances {
    pub fn for_mode(mode: PrecisionMode) -> Tolerances {
        let (inversion, scalar_charges, iom) = match mode {
            PrecisionMode::Double => (1e-9, 1e-9, 1e-9),
            PrecisionMode::Extended => (1e-35, 1e-30, 1e-35),
        };
        Tolerances {
            inversion,
            spectrum: 1e-8,
            scalar_charges,
            iom,
            pairing: 1e-8,
            resummation: 1e-12,
            integral: 1e-8,
            expansion: 1e-10,
        }
    }

    /// Every tolerance replaced by `t`.
    pub fn uniform(t: f64) -> Tolerances {
        Tolerances {
            inversion: t,
            spectrum: t,
            scalar_charges: t,
            iom: t,
            pairing: t,
            resummation: t,
            integral: t,
            expansion: t,
        }
    }

    pub fn from_config(cfg: &Config) -> Tolerances {
        match cfg.tolerance {
            Some(t) => Tolerances::uniform(t),
            None => Tolerances::for_mode(cfg.precision),
        }
    }
}

/// Highest charge order computed when none is requested.
pub fn default_orders(mode: PrecisionMode) -> usize {
    match mode {
        PrecisionMode::Double => 7,
        PrecisionMode::Extended => 15,
    }
}

/// A generator seeded from the run seed and the job identity, so each job
/// draws the same values however jobs are scheduled.
pub fn job_rng(seed: u64, tag: &str, l: usize, b: i32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update((l as u64).to_le_bytes());
    h.update(b.to_le_bytes());
    let d = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&d);
    ChaCha8Rng::from_seed(bytes)
}

/// Outcome of a command: the report and, if a computation aborted, the
/// error (the report then holds the records produced before it).
pub struct Outcome {
    pub report: VerificationReport,
    pub error: Option<Error>,
}

pub fn run(command: Command, cfg: &Config) -> Outcome {
    let mut report = VerificationReport::new(cfg.to_json(), cfg.seed);
    let mut records = Vec::new();
    let error = match cfg.validate() {
        Err(e) => Some(e),
        Ok(()) => {
            let result = match cfg.precision {
                PrecisionMode::Double => dispatch::<f64>(command, cfg, (), &mut records),
                PrecisionMode::Extended => dispatch::<Extended>(command, cfg, Bits::for_digits(cfg.digits), &mut records),
            };
            result.err()
        }
    };
    report.extend(records);
    Outcome { report, error }
}

fn dispatch<S: Scalar>(command: Command, cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    match command {
        Command::Inversion => inversion_suite::<S>(cfg, ctx, out),
        Command::Spectrum => spectrum_suite::<S>(cfg, ctx, out),
        Command::Tl => tl_suite::<S>(cfg, ctx, out),
        Command::Iom => iom_suite::<S>(cfg, ctx, out),
        Command::Characters => characters_suite(cfg, out),
        Command::FreeEnergy => free_energy_suite::<S>(cfg, ctx, out),
        Command::PartitionFunction => partition_function_suite(cfg, out),
        Command::ExtractIom => extract_iom_suite::<S>(cfg, ctx, out),
        Command::All => {
            inversion_suite::<S>(cfg, ctx, out)?;
            spectrum_suite::<S>(cfg, ctx, out)?;
            tl_suite::<S>(cfg, ctx, out)?;
            iom_suite::<S>(cfg, ctx, out)?;
            characters_suite(cfg, out)?;
            free_energy_suite::<S>(cfg, ctx, out)?;
            partition_function_suite(cfg, out)
        }
    }
}

/// Runs `f` over the jobs (concurrently with the `parallel` feature) and
/// appends the records in job order. On error, the records of the jobs
/// before the failing one are kept.
fn run_jobs<J, F>(cfg: &Config, jobs: Vec<J>, f: F, out: &mut Vec<CheckRecord>) -> Result<()>
where
    J: Send,
    F: Fn(J) -> Result<Vec<CheckRecord>> + Sync + Send,
{
    let timed = |j: J| -> Result<Vec<CheckRecord>> {
        let start = Instant::now();
        let mut recs = f(j)?;
        if cfg.timings {
            let t = start.elapsed().as_secs_f64();
            for r in &mut recs {
                r.wall_time = Some(t);
            }
        }
        Ok(recs)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<CheckRecord>>> = jobs.into_par_iter().map(timed).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<CheckRecord>>> = jobs.into_iter().map(timed).collect();
    for r in results {
        out.extend(r?);
    }
    Ok(())
}

fn grid(cfg: &Config, lo: usize, hi: usize) -> Vec<(usize, Spin)> {
    let mut jobs = Vec::new();
    for l in cfg.widths(lo, hi) {
        for b in cfg.b.spins() {
            jobs.push((l, b));
        }
    }
    jobs
}

/// Residual threshold for quantities exact up to rounding.
fn rounding_tol<S: Scalar>(ctx: S::Ctx) -> f64 {
    (S::epsilon(ctx) * 1e6).max(1e-300)
}

fn relative_diff<S: Scalar>(a: &SquareMatrix<S>, b: &SquareMatrix<S>) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(a.max_abs()).max(1.0)
}

/// |x| drawn from (1.1, 6), in the series regime.
fn sample_x<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(1.1..6.0)
}

fn point_at<S: Scalar>(x: f64, ctx: S::Ctx) -> Result<SpectralPoint<S>> {
    let xs = S::from_f64(ctx, x.abs());
    SpectralPoint::from_w((xs * S::from_i64(ctx, 2)).recip())
}

fn extract<S: Scalar>(basis: &SpinBasis, ctx: S::Ctx) -> Result<MatrixPolynomial<S>> {
    let l = basis.l();
    let held = l.min(3);
    let nodes = choose_nodes::<S>(l, l + 2 + held, ctx, &NodeOptions::default())?;
    extract_d(basis, &nodes, &ExtractOptions::default())
}

fn fit_record<S: Scalar>(poly: &MatrixPolynomial<S>, ctx: S::Ctx, l: usize, b: Spin) -> CheckRecord {
    CheckRecord::measured("polynomial_fit", poly.fit_residual, default_fit_threshold::<S>(ctx))
        .l(l)
        .b(b.sign())
        .metric("condition", poly.condition)
        .metric("degree", poly.degree())
}

pub fn inversion_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let tol = Tolerances::from_config(cfg);
    run_jobs(
        cfg,
        grid(cfg, 1, 6),
        |(l, b)| {
            let basis = SpinBasis::new(l, b)?;
            let poly = extract::<S>(&basis, ctx)?;
            let mut recs = vec![fit_record(&poly, ctx, l, b)];
            let mut rng = job_rng(cfg.seed, "inversion", l, b.sign());
            let xs: Vec<f64> = match cfg.requested_x() {
                Some(x) => vec![x],
                None => (0..5).map(|_| if rng.gen_bool(0.5) { sample_x(&mut rng) } else { -sample_x(&mut rng) }).collect(),
            };
            for x in xs {
                let point = point_at::<S>(x, ctx)?;
                let xa = point.x.clone();
                let d_plus = rescale_to_d(&normalized_transfer(&basis, &point)?, &xa, l)?;
                let mirror = SpectralPoint::from_w(-point.w())?;
                let d_minus = rescale_to_d(&normalized_transfer(&basis, &mirror)?, &mirror.x, l)?;
                let r = inversion_check(l, &xa, &d_plus, &d_minus);
                recs.push(CheckRecord::measured("inversion", r.residual, tol.inversion).l(l).b(b.sign()).x(x));
                recs.push(
                    CheckRecord::measured("chebyshev_factorization", r.factorization_residual, tol.inversion)
                        .l(l)
                        .b(b.sign())
                        .x(x),
                );
            }
            Ok(recs)
        },
        out,
    )
}

pub fn spectrum_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let tol = Tolerances::from_config(cfg);
    let exact_tol = rounding_tol::<S>(ctx);
    run_jobs(
        cfg,
        grid(cfg, 1, 6),
        |(l, b)| {
            let basis = SpinBasis::new(l, b)?;
            let mut rng = job_rng(cfg.seed, "spectrum", l, b.sign());
            let x = cfg.requested_x().map(f64::abs).unwrap_or_else(|| sample_x(&mut rng));
            let point = point_at::<S>(x, ctx)?;
            let t = normalized_transfer(&basis, &point)?;
            let mut recs = Vec::new();

            let sector = enumerate_sector(l, b);
            let status = if sector.len() == basis.dim() { Status::Pass } else { Status::Fail };
            recs.push(
                CheckRecord::new("sector_size", status)
                    .l(l)
                    .b(b.sign())
                    .metric("partitions", sector.len())
                    .metric("dimension", basis.dim()),
            );

            let probes = basis.dim() + 1;
            let eigen = sector_eigenvalues(l, b, &point.x, Orientation::Lattice)?;
            let m = spectrum_match(&t, &eigen, probes, &mut rng)?;
            recs.push(
                CheckRecord::measured("spectrum", m.worst(), tol.spectrum)
                    .l(l)
                    .b(b.sign())
                    .x(x)
                    .metric("probeResidual", m.probe_residual)
                    .metric("traceResiduals", m.trace_residuals)
                    .metric("probes", m.probes),
            );

            let printed = sector_eigenvalues(l, b, &point.x, Orientation::Printed)?;
            let pm = spectrum_match(&t, &printed, probes, &mut rng)?;
            let rec = CheckRecord::measured("eigenvalue_orientation", pm.worst(), tol.spectrum).l(l).b(b.sign()).x(x);
            recs.push(if rec.status == Status::Fail && m.worst() <= tol.spectrum {
                rec.with_status(Status::ErratumRecorded)
                    .note("the sector spectrum is the printed eigenvalue formula at -x; at +x it differs for even L")
            } else {
                rec
            });

            let mut forms = 0.0f64;
            for p in &sector {
                let a = analytic_eigenvalue(p, &point.x)?;
                let c = analytic_eigenvalue_mu(p, &point.x)?;
                forms = forms.max((a.clone() - &c).abs().to_f64() / a.abs().to_f64());
            }
            recs.push(CheckRecord::measured("eigenvalue_forms", forms, exact_tol).l(l).b(b.sign()).x(x));

            let u1 = S::from_f64(ctx, 0.05);
            let u2 = S::from_f64(ctx, 0.11);
            let t1 = normalized_transfer(&basis, &SpectralPoint::new(u1)?)?;
            let t2 = normalized_transfer(&basis, &SpectralPoint::new(u2)?)?;
            let c = t1.commutator(&t2).max_abs() / (t1.max_abs() * t2.max_abs());
            recs.push(CheckRecord::measured("transfer_commutation", c, exact_tol).l(l).b(b.sign()));

            if l == cfg.widths(1, 6)[0] && b == cfg.b.spins()[0] {
                recs.push(crossing_record::<S>(ctx, exact_tol)?);
            }
            Ok(recs)
        },
        out,
    )
}

fn crossing_record<S: Scalar>(ctx: S::Ctx, tol: f64) -> Result<CheckRecord> {
    let spins = [Spin::Plus, Spin::Minus];
    let quarter = S::pi(ctx) / S::from_i64(ctx, 4);
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let u = quarter.clone() * S::from_i64(ctx, i) / S::from_i64(ctx, 21);
        for r in spins {
            for t in spins {
                for s in spins {
                    let left = weight_left(r, t, s, &u)?;
                    let right = weight_right(r, t, s, &(quarter.clone() - &u))?;
                    worst = worst.max((left.clone() - &right).abs().to_f64() / left.abs().to_f64());
                }
            }
        }
    }
    Ok(CheckRecord::measured("crossing", worst, tol))
}

pub fn tl_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let tol = rounding_tol::<S>(ctx);
    run_jobs(
        cfg,
        grid(cfg, 2, 6),
        |(l, b)| {
            let basis = SpinBasis::new(l, b)?;
            let gens = TlGenerators::<S>::new(basis, ctx);
            let report = verify_tl_relations(&gens, tol)?;
            let mut recs = vec![CheckRecord::measured("tl_bulk_relations", report.bulk_residual(), tol)
                .l(l)
                .b(b.sign())
                .metric("relations", report.checks.len())];
            for c in report.boundary_exceptions() {
                let name = match c.kind {
                    RelationKind::Squared => "e1_squared",
                    RelationKind::Braid => "e1_e2_e1",
                    RelationKind::Far => "e1_far",
                };
                recs.push(
                    CheckRecord::new(name, Status::KnownBoundaryException)
                        .l(l)
                        .b(b.sign())
                        .note("e_1 is the identity over sqrt 2 on the fixed-boundary space"),
                );
                let last = recs.last_mut().expect("just pushed");
                last.residual = Some(c.residual);
                last.tolerance = Some(tol);
            }
            for c in report.failures() {
                recs.push(
                    CheckRecord::measured("tl_relation", c.residual, tol)
                        .l(l)
                        .b(b.sign())
                        .note(format!("{:?} relation e_{} e_{}", c.kind, c.i, c.j)),
                );
            }
            debug_assert!(report.checks.iter().all(|c| c.status != RelationStatus::Fail || c.i != 1));
            let asym = (1..=gens.count()).map(|i| gens.matrix(i).map(|m| m.asymmetry())).collect::<Result<Vec<_>>>()?;
            recs.push(CheckRecord::measured("generator_symmetry", asym.into_iter().fold(0.0, f64::max), tol).l(l).b(b.sign()));
            for n in 1..=3 {
                let (h, _) = nested_hamiltonian(&gens, n)?;
                let scale = h.max_abs().max(1.0);
                recs.push(
                    CheckRecord::measured("hamiltonian_symmetry", h.asymmetry() / scale, tol)
                        .l(l)
                        .b(b.sign())
                        .orders(2 * n + 1),
                );
                recs.push(
                    CheckRecord::measured("hamiltonian_traceless", h.trace().abs().to_f64() / scale, tol)
                        .l(l)
                        .b(b.sign())
                        .orders(2 * n + 1),
                );
            }
            Ok(recs)
        },
        out,
    )
}

fn orders(cfg: &Config) -> usize {
    cfg.orders.unwrap_or_else(|| default_orders(cfg.precision))
}

/// Extraction, logarithm and the checks on the family itself.
fn family_records<S: Scalar>(
    cfg: &Config,
    ctx: S::Ctx,
    basis: &SpinBasis,
    n: usize,
    recs: &mut Vec<CheckRecord>,
) -> Result<(MatrixPolynomial<S>, IomFamily<S>)> {
    let tol = Tolerances::from_config(cfg);
    let (l, b) = (basis.l(), basis.b().sign());
    let poly = extract::<S>(basis, ctx)?;
    recs.push(fit_record(&poly, ctx, l, basis.b()));
    let defect = commutation_defect(&poly.coeffs[1..]);
    recs.push(CheckRecord::measured("coefficient_commutation", defect, tol.iom).l(l).b(b));
    let family = matrix_log(&poly, n, tol.iom.max(defect))?;
    let composed = bell_compose(&family.charges, poly.degree())?;
    let round_trip = composed.iter().zip(&poly.coeffs).map(|(a, d)| relative_diff(a, d)).fold(0.0, f64::max);
    recs.push(CheckRecord::measured("bell_round_trip", round_trip, tol.iom).l(l).b(b).orders(poly.degree()));
    Ok((poly, family))
}

pub fn iom_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let tol = Tolerances::from_config(cfg);
    let n = orders(cfg);
    run_jobs(
        cfg,
        grid(cfg, 1, 6),
        |(l, b)| {
            let basis = SpinBasis::new(l, b)?;
            let mut recs = Vec::new();
            let (poly, family) = family_records::<S>(cfg, ctx, &basis, n, &mut recs)?;
            let bs = b.sign();

            for c in verify_scalar_charges(&family) {
                let r = CheckRecord::measured("scalar_charge", c.residual, tol.scalar_charges)
                    .l(l)
                    .b(bs)
                    .orders(c.order)
                    .metric("expected", c.expected);
                recs.push(if c.order >= closed_form_limit(l) {
                    r.note("the printed polynomial in L assumes the sine sums do not alias, which needs order < 4L+6")
                } else {
                    r
                });
            }
            for k in (2..=n).step_by(2) {
                let a = family.charge(k).expect("order within family");
                recs.push(CheckRecord::measured("even_charge_scalar", scalar_spread(a), tol.iom).l(l).b(bs).orders(k));
            }
            let asym = family.charges.iter().map(|a| a.asymmetry() / a.max_abs().max(1.0)).fold(0.0, f64::max);
            recs.push(CheckRecord::measured("charge_symmetry", asym, tol.iom).l(l).b(bs).orders(n));

            let gens = TlGenerators::<S>::new(basis, ctx);
            let mut dec = Decomposer::new(&gens);
            let a1 = dec.iom_rhs(1, &family.charges)?;
            recs.push(
                CheckRecord::measured("decomposition", relative_diff(&a1.matrix, &poly.coeffs[1]), tol.iom)
                    .l(l)
                    .b(bs)
                    .orders(1)
                    .note("A_1 against the linear coefficient D_1"),
            );
            if l >= 3 {
                for k in (3..=n).step_by(2) {
                    let a = family.charge(k).expect("order within family");
                    recs.push(match dec.iom_rhs(k, &family.charges) {
                        Ok(rhs) => {
                            let r = CheckRecord::measured("decomposition", relative_diff(&rhs.matrix, a), tol.iom)
                                .l(l)
                                .b(bs)
                                .orders(k);
                            if rhs.extrapolated {
                                let s = r.status.extrapolated();
                                r.with_status(s).note("uses H or B beyond the printed range")
                            } else {
                                r
                            }
                        }
                        Err(Error::PatternCollision { j, l }) => CheckRecord::new("decomposition", Status::ExtrapolatedFail)
                            .l(l)
                            .b(bs)
                            .orders(k)
                            .note(format!("needs B_{j}, which does not exist for L = {l}")),
                        Err(e) => return Err(e),
                    });
                }
            }

            let mut worst = 0.0f64;
            for i in 0..family.charges.len() {
                for j in (i + 1)..family.charges.len() {
                    let (a, c) = (&family.charges[i], &family.charges[j]);
                    let scale = (a.max_abs() * c.max_abs()).max(f64::MIN_POSITIVE);
                    worst = worst.max(a.commutator(c).max_abs() / scale);
                }
            }
            recs.push(CheckRecord::measured("charge_commutation", worst, tol.iom).l(l).b(bs).orders(n));
            let mut rng = job_rng(cfg.seed, "iom", l, bs);
            let x = cfg.requested_x().map(f64::abs).unwrap_or_else(|| sample_x(&mut rng));
            let point = point_at::<S>(x, ctx)?;
            let t = normalized_transfer(&basis, &point)?;
            let worst_t = family
                .charges
                .iter()
                .map(|a| a.commutator(&t).max_abs() / (a.max_abs() * t.max_abs()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            recs.push(CheckRecord::measured("charge_transfer_commutation", worst_t, tol.iom).l(l).b(bs).x(x).orders(n));

            if l <= 5 {
                recs.extend(pairing_records(&family, &t, &point.x, n.min(10), tol.pairing, x)?);
            }
            // the sign fits compare at 1e-9, so double precision suffices
            recs.extend(sign_records::<f64>(l, b, n, ())?);
            if b == Spin::Plus || !cfg.b.spins().contains(&Spin::Plus) {
                recs.extend(sine_sum_records::<S>(l, ctx));
            }
            Ok(recs)
        },
        out,
    )
}

/// sum_P A_k(P) lambda_P^m against Tr(A_k T^m), m = 0, 1, 2.
fn pairing_records<S: Scalar>(
    family: &IomFamily<S>,
    t: &SquareMatrix<S>,
    x: &S,
    kmax: usize,
    tol: f64,
    xf: f64,
) -> Result<Vec<CheckRecord>> {
    let ctx = x.ctx();
    let basis = family.basis;
    let sector = enumerate_sector(basis.l(), basis.b());
    let lambdas: Vec<S> = sector.iter().map(|p| lattice_eigenvalue(p, x)).collect::<Result<_>>()?;
    let tables: Vec<Vec<S>> = sector.iter().map(|p| iom_eigen::<S>(p, kmax, ctx).values).collect();
    let powers = [SquareMatrix::identity(basis.dim(), ctx), t.clone(), t.matmul(t)];
    let mut recs = Vec::new();
    for k in 1..=kmax {
        let a = family.charge(k).expect("order within family");
        let mut worst = 0.0f64;
        for (m, tm) in powers.iter().enumerate() {
            let trace = a.matmul(tm).trace();
            let mut sum = S::zero(ctx);
            let mut size = 0.0f64;
            for (table, lambda) in tables.iter().zip(&lambdas) {
                let term = table[k - 1].clone() * lambda.powi(m as u32);
                size += term.abs().to_f64();
                sum += term;
            }
            worst = worst.max((sum - &trace).abs().to_f64() / size.max(f64::MIN_POSITIVE));
        }
        recs.push(
            CheckRecord::measured("trace_pairing", worst, tol)
                .l(basis.l())
                .b(basis.b().sign())
                .x(xf)
                .orders(k),
        );
    }
    Ok(recs)
}

/// Orders from which the closed forms in L stop holding at width L: the
/// sine power sums behind them alias once the order reaches 4L+6.
pub fn closed_form_limit(l: usize) -> usize {
    4 * l + 6
}

/// Off-diagonal size plus diagonal spread, relative to the mean diagonal.
fn scalar_spread<S: Scalar>(a: &SquareMatrix<S>) -> f64 {
    let mean = a.trace() / S::from_i64(a.ctx(), a.dim() as i64);
    let spread = (0..a.dim()).map(|i| (a.get(i, i).clone() - &mean).abs().to_f64()).fold(0.0, f64::max);
    (a.max_off_diagonal() + spread) / mean.abs().to_f64().max(f64::MIN_POSITIVE)
}

/// One sign across all values, or `None` when any value fits neither sign
/// or two values disagree.
fn common_sign(signs: &[Option<i32>]) -> Option<i32> {
    let first = (*signs.first()?)?;
    signs.iter().all(|s| *s == Some(first)).then_some(first)
}

fn sign_record(name: &str, signs: &[Option<i32>], mismatch: f64, tol: f64, expected_sign: i32) -> CheckRecord {
    let fitted = common_sign(signs);
    let status = match fitted {
        Some(1) if expected_sign == 1 => Status::Pass,
        Some(s) if s == expected_sign => Status::ErratumRecorded,
        _ => Status::Fail,
    };
    let mut r = CheckRecord::new(name, status).sign(fitted).metric("comparisons", signs.len());
    r.residual = Some(mismatch);
    r.tolerance = Some(tol);
    r
}

/// Fitted signs of the printed charge eigenvalue formulas against the
/// log-expansion of the lattice eigenvalues.
fn sign_records<S: Scalar>(l: usize, b: Spin, n: usize, ctx: S::Ctx) -> Result<Vec<CheckRecord>> {
    let tol = 1e-9;
    let (mut even, mut odd, mut split) = (Vec::new(), Vec::new(), Vec::new());
    let (mut even_r, mut odd_r, mut split_r) = (0.0f64, 0.0f64, 0.0f64);
    let fit = |printed: f64, oracle: f64, signs: &mut Vec<Option<i32>>, worst: &mut f64| {
        let s = fitted_sign(printed, oracle, tol);
        let sf = s.unwrap_or(1) as f64;
        *worst = worst.max((printed - sf * oracle).abs() / printed.abs().max(oracle.abs()).max(1.0));
        signs.push(s);
    };
    for p in enumerate_sector(l, b) {
        let oracle: Vec<f64> = iom_eigen::<S>(&p, n, ctx).values.iter().map(|v| v.to_f64()).collect();
        for k in 1..=n {
            let m = k.div_ceil(2);
            if k % 2 == 0 {
                fit(printed_even_eigen::<S>(l, m, ctx).to_f64(), oracle[k - 1], &mut even, &mut even_r);
            } else {
                fit(printed_odd_eigen::<S>(&p, m, ctx).to_f64(), oracle[k - 1], &mut odd, &mut odd_r);
                // the split series converges geometrically with ratio k/(4L+6);
                // below 2L+3 forty terms are ample
                if k < 2 * l + 3 {
                    fit(printed_odd_eigen_split::<S>(&p, m, 40, ctx).to_f64(), oracle[k - 1], &mut split, &mut split_r);
                }
            }
        }
    }
    let tag = |r: CheckRecord| r.l(l).b(b.sign()).orders(n);
    Ok(vec![
        tag(sign_record("even_charge_sign", &even, even_r, tol, -1)),
        tag(sign_record("odd_charge_sign", &odd, odd_r, tol, 1)),
        tag(sign_record("odd_charge_split_sign", &split, split_r, tol, 1)),
    ])
}

/// The closed forms of the sine power sums and of the even charges.
fn sine_sum_records<S: Scalar>(l: usize, ctx: S::Ctx) -> Vec<CheckRecord> {
    let tol = 1e-12;
    let nmax = 7usize.min(2 * l + 2);
    let (mut odd, mut even) = (Vec::new(), Vec::new());
    let (mut odd_r, mut even_r) = (0.0f64, 0.0f64);
    for n in 1..=nmax {
        let direct = sine_power_sum::<S>(l, 2 * n as u32 - 1, ctx).to_f64();
        let printed = printed_odd_sine_sum::<S>(l, n, ctx).to_f64();
        let s = fitted_sign(printed, direct, tol);
        odd_r = odd_r.max((printed - s.unwrap_or(1) as f64 * direct).abs() / direct.abs());
        odd.push(s);
        let direct = sine_power_sum::<S>(l, 2 * n as u32, ctx).to_f64();
        let printed = printed_even_sine_sum::<S>(l, n, ctx).to_f64();
        let s = fitted_sign(printed, direct, tol);
        even_r = even_r.max((printed - s.unwrap_or(1) as f64 * direct).abs() / direct.abs());
        even.push(s);
    }
    let closed_ok = (1..=7).all(|n| {
        crate::iom::printed_even_charge(2 * n, l).map(num_bigint::BigInt::from) == Some(printed_even_charge_closed(l, n))
    });
    vec![
        sign_record("odd_sine_sum_sign", &odd, odd_r, tol, 1).l(l),
        sign_record("even_sine_sum_sign", &even, even_r, tol, -1).l(l),
        CheckRecord::new("even_charge_closed_form", if closed_ok { Status::Pass } else { Status::Fail }).l(l).orders(14),
    ]
}

pub fn characters_suite(cfg: &Config, out: &mut Vec<CheckRecord>) -> Result<()> {
    let truncation = QSeries::doubled(cfg.truncation);
    let widths: Vec<usize> = match cfg.l {
        Some(l) => vec![l],
        None => (0..=12).collect(),
    };
    let sectors: Vec<Sector> = cfg.b.spins().into_iter().map(Sector::from_boundary).collect();
    let mut jobs = Vec::new();
    for &l in &widths {
        for &s in &sectors {
            jobs.push((l, s));
        }
    }
    let mut labels_disagree = Vec::new();
    let mut recs = Vec::new();
    run_jobs(
        cfg,
        jobs,
        |(l, s)| {
            let c = compare_forms(l, s, truncation)?;
            let min_ok = c.min_exponent == Some(s.parity());
            let ok = c.all_equal() && c.nonnegative && c.dimension == 1i128 << l && min_ok;
            let b = if s == Sector::Plus { 1 } else { -1 };
            let mut r = CheckRecord::new("characters_three_forms", if ok { Status::Pass } else { Status::Fail })
                .l(l)
                .b(b)
                .orders(cfg.truncation)
                .metric("dimension", c.dimension)
                .metric("nonnegative", c.nonnegative)
                .metric("minDoubledExponent", c.min_exponent)
                .metric("printedLabelsAgree", c.printed_labels_agree);
            r.residual = Some(c.mismatches as f64);
            r.tolerance = Some(0.0);
            Ok(vec![r])
        },
        &mut recs,
    )?;
    for r in &recs {
        if r.metrics.get("printedLabelsAgree") == Some(&serde_json::Value::Bool(false)) {
            labels_disagree.push(r.params.l.unwrap_or(0));
        }
    }
    out.extend(recs);
    let n = labels_disagree.len();
    out.push(if n > 0 {
        CheckRecord::new("chi_parity_labels", Status::ErratumRecorded)
            .note("subset sums with odd |P| for + and even |P| for - disagree with the fermionic and bosonic forms")
            .metric("widths", labels_disagree)
    } else {
        CheckRecord::new("chi_parity_labels", Status::Pass)
    });
    for s in sectors {
        let v = compare_virasoro(s)?;
        let ok = v.matches && v.stable;
        out.push(
            CheckRecord::new("virasoro_limit", if ok { Status::Pass } else { Status::Fail })
                .b(if s == Sector::Plus { 1 } else { -1 })
                .orders(v.printed.len())
                .metric("computed", &v.computed)
                .metric("printed", &v.printed)
                .metric("stable", v.stable),
        );
    }
    Ok(())
}

pub fn free_energy_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let tol = Tolerances::from_config(cfg);
    let x0 = cfg.requested_x().map(f64::abs).unwrap_or(2.0);
    let xs = S::from_f64(ctx, x0);
    let n_terms = 30;
    let widths = match cfg.l {
        Some(l) => vec![l],
        None => (0..=4).collect(),
    };
    for &l in &widths {
        let r = resummation_check(l, &xs, n_terms)?;
        let printed = CheckRecord::measured("even_resummation", r.even_printed, tol.resummation).l(l).x(x0).orders(n_terms);
        out.push(if printed.status == Status::Fail && r.printed_gap_explained <= tol.resummation {
            let mut e = printed.with_status(Status::ErratumRecorded).note(
                "the even sum resums to coefficient 1/4 on log(1-1/x^2), not 1; the gap equals 3/4 |log(1-1/x^2)|",
            );
            e.check_name = "even_resummation_log_coefficient".into();
            e
        } else {
            printed
        });
        out.push(CheckRecord::measured("even_resummation_corrected", r.even_corrected, tol.resummation).l(l).x(x0).orders(n_terms));
        out.push(CheckRecord::measured("odd_resummation", r.odd, tol.resummation).l(l).x(x0).orders(n_terms));
        let regroup = (S::from_i64(ctx, -2 * (2 * l as i64 + 3)) * f_bulk(&xs)? - f_bou(&xs)?
            - even_closed(l, &xs, 0.25)
            - odd_closed(l, &xs)?)
        .abs()
        .to_f64();
        out.push(CheckRecord::measured("free_energy_regrouping", regroup, tol.resummation).l(l).x(x0));
    }

    for x in [1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0] {
        let r = integral_identity_check(x)?;
        out.push(
            CheckRecord::measured("bulk_integral_identity", r.residual, tol.integral)
                .x(x)
                .metric("quadrature", r.quadrature)
                .metric("closed", r.closed),
        );
    }

    let comparisons = [2.0, 4.0, 8.0].map(f_bulk_integral_comparison);
    let comparisons: Vec<_> = comparisons.into_iter().collect::<Result<_>>()?;
    let diffs: Vec<f64> = comparisons.iter().map(|c| c.difference).collect();
    let spread = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = diffs.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let mut r = CheckRecord::measured("bulk_free_energy_forms", worst, tol.integral)
        .metric("x", [2.0, 4.0, 8.0])
        .metric("hypergeometricForm", comparisons.iter().map(|c| c.hypergeometric).collect::<Vec<_>>())
        .metric("integralForm", comparisons.iter().map(|c| c.integral_form).collect::<Vec<_>>())
        .metric("spread", spread);
    if r.status == Status::Fail {
        r = r.with_status(Status::ErratumRecorded).note("the two bulk free energies differ by an x-dependent amount");
    }
    out.push(r);

    let l = cfg.l.unwrap_or(4);
    let x = cfg.requested_x().map(f64::abs).unwrap_or(3.0);
    let xs = S::from_f64(ctx, x);
    let m_max = crate::free_energy::DEFAULT_M_MAX;
    let gap = f_bou_discrepancy(&xs).abs().to_f64();
    for b in cfg.b.spins() {
        let mut printed_worst = 0.0f64;
        for p in enumerate_sector(l, b) {
            let r = log_t_expansion_check(&p, &xs, m_max, Boundary::Resummed)?;
            out.push(
                CheckRecord::measured("log_transfer_expansion", r, tol.expansion)
                    .l(l)
                    .b(b.sign())
                    .x(x)
                    .orders(m_max)
                    .partition(p.label()),
            );
            let printed = log_t_expansion_check(&p, &xs, m_max, Boundary::Printed)?;
            printed_worst = printed_worst.max((printed - gap).abs() - r);
        }
        // with the printed boundary free energy the deviation is the same
        // constant for every partition
        let mut e = CheckRecord::new(
            "even_resummation_log_coefficient",
            if printed_worst <= 1e-9 { Status::ErratumRecorded } else { Status::Fail },
        )
        .l(l)
        .b(b.sign())
        .x(x)
        .orders(m_max)
        .note("log T expansion with the printed f_bou is off by 3/4 log(1-1/x^2) for every partition");
        e.residual = Some(printed_worst);
        e.tolerance = Some(1e-9);
        out.push(e);
    }
    Ok(())
}

pub fn partition_function_suite(cfg: &Config, out: &mut Vec<CheckRecord>) -> Result<()> {
    let u = cfg.u.unwrap_or(0.1);
    let l0 = cfg.l.unwrap_or(1);
    let doubling = doubling_steps(l0, 2);
    let stepped: Vec<(usize, u32)> = (0..4).map(|i| (2 + 2 * i, 4 + 4 * i as u32)).collect();
    for b in cfg.b.spins() {
        for (name, steps) in [("partition_function_trend", &doubling), ("partition_function_trend_step2", &stepped)] {
            let trend = partition_trend(steps, b, u)?;
            for p in &trend.points {
                out.push(
                    CheckRecord::new("partition_function", Status::Pass)
                        .l(p.l)
                        .b(b.sign())
                        .x(p.x)
                        .orders(p.m as usize)
                        .metric("logZ", p.log_z)
                        .metric("printedDeviation", p.printed_deviation)
                        .metric("correctedDeviation", p.corrected_deviation),
                );
            }
            let last = trend.points.last().expect("four steps");
            let series = |f: fn(&crate::qseries::PartitionFunctionPoint) -> f64| trend.points.iter().map(f).collect::<Vec<_>>();
            out.push(
                CheckRecord::new(name, if trend.printed_decreasing { Status::Pass } else { Status::Fail })
                    .b(b.sign())
                    .x(last.x)
                    .metric("steps", steps)
                    .metric("deviations", series(|p| p.printed_deviation))
                    .note("printed f_bou and nome"),
            );
            out.push(
                CheckRecord::new(
                    format!("{name}_corrected"),
                    if trend.corrected_decreasing { Status::Pass } else { Status::Fail },
                )
                .b(b.sign())
                .x(last.x)
                .metric("steps", steps)
                .metric("deviations", series(|p| p.corrected_deviation))
                .note("f_bou = 1/2 log(1+1/x), q = exp(-2 pi M/((2L+3)x))"),
            );
            if name == "partition_function_trend" {
                let better = trend.points.iter().all(|p| p.corrected_deviation < p.printed_deviation);
                let mut r = CheckRecord::new("character_nome", if better { Status::ErratumRecorded } else { Status::Fail })
                    .b(b.sign())
                    .x(last.x)
                    .note("the m = 1 term of the log T expansion fixes the nome as exp(-2 pi M/((2L+3)x))");
                r.residual = Some(last.corrected_deviation);
                r = r.metric("printedDeviation", last.printed_deviation);
                out.push(r);
            }
        }
    }
    Ok(())
}

pub fn extract_iom_suite<S: Scalar>(cfg: &Config, ctx: S::Ctx, out: &mut Vec<CheckRecord>) -> Result<()> {
    let n = orders(cfg);
    let tol = rounding_tol::<S>(ctx).max(Tolerances::from_config(cfg).iom);
    run_jobs(
        cfg,
        grid(cfg, 1, 6),
        |(l, b)| {
            let basis = SpinBasis::new(l, b)?;
            let mut recs = Vec::new();
            let (_, family) = family_records::<S>(cfg, ctx, &basis, n, &mut recs)?;
            for (i, a) in family.charges.iter().enumerate() {
                let diag = a.get(0, 0).to_f64();
                let scalar = a.max_off_diagonal() <= tol * a.max_abs().max(1.0)
                    && (0..a.dim()).all(|d| (a.get(d, d).to_f64() - diag).abs() <= tol * diag.abs().max(1.0));
                let mut r = CheckRecord::new("charge", Status::Pass)
                    .l(l)
                    .b(b.sign())
                    .orders(i + 1)
                    .metric("trace", a.trace().to_f64())
                    .metric("maxAbs", a.max_abs())
                    .metric("asymmetry", a.asymmetry());
                if scalar {
                    r = r.metric("scalarValue", a.get(0, 0).to_string());
                }
                recs.push(r);
            }
            Ok(recs)
        },
        out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Boundaries;

    fn small(l: usize) -> Config {
        Config { l: Some(l), ..Config::default() }
    }

    #[test]
    fn inversion_and_spectrum_pass_in_double() {
        for cmd in [Command::Inversion, Command::Spectrum] {
            let o = run(cmd, &small(3));
            assert!(o.error.is_none());
            let fails: Vec<_> = o.report.records.iter().filter(|r| r.status == Status::Fail).collect();
            assert!(fails.is_empty(), "{fails:#?}");
        }
    }

    #[test]
    fn orientation_erratum_only_for_even_width() {
        let o = run(Command::Spectrum, &Config { l: Some(2), ..Config::default() });
        assert!(o.report.records.iter().any(|r| r.check_name == "eigenvalue_orientation" && r.status == Status::ErratumRecorded));
        let o = run(Command::Spectrum, &Config { l: Some(3), ..Config::default() });
        assert!(o.report.records.iter().any(|r| r.check_name == "eigenvalue_orientation" && r.status == Status::Pass));
    }

    #[test]
    fn tl_records_boundary_exceptions() {
        let o = run(Command::Tl, &Config { l: Some(3), b: Boundaries::Plus, ..Config::default() });
        let names = o.report.recorded_discrepancies();
        assert_eq!(names, vec!["e1_e2_e1".to_string(), "e1_squared".to_string()]);
        assert!(!o.report.has_failures());
    }

    #[test]
    fn iom_in_double() {
        let o = run(Command::Iom, &Config { l: Some(3), ..Config::default() });
        assert!(o.error.is_none(), "{:?}", o.error);
        let fails: Vec<_> = o.report.records.iter().filter(|r| r.status == Status::Fail).collect();
        assert!(fails.is_empty(), "{fails:#?}");
        let signs: Vec<_> = o.report.records.iter().filter(|r| r.check_name == "even_charge_sign").map(|r| r.fitted_sign).collect();
        assert!(signs.iter().all(|s| *s == Some(-1)));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small(2);
        let a = run(Command::Spectrum, &cfg).report.to_json();
        let b = run(Command::Spectrum, &cfg).report.to_json();
        assert_eq!(a, b);
        let other = run(Command::Spectrum, &Config { seed: 1, ..cfg }).report.to_json();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_config_is_an_error() {
        let o = run(Command::Inversion, &Config { x: Some(0.5), ..Config::default() });
        assert!(matches!(o.error, Some(Error::Config(_))));
        assert!(o.report.records.is_empty());
    }

    #[test]
    fn timings_only_on_request() {
        let o = run(Command::Tl, &small(2));
        assert!(o.report.records.iter().all(|r| r.wall_time.is_none()));
        let o = run(Command::Tl, &Config { timings: true, ..small(2) });
        assert!(o.report.records.iter().all(|r| r.wall_time.is_some()));
    }
}
