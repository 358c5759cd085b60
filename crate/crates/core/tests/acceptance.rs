//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Every criterion is evaluated literally, with the tolerances of the
//! default configuration. Corrected variants of the checks that cannot hold
//! as stated are printed alongside but do not change the verdict. The
//! process exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ising_strip::config::Config;
use ising_strip::report::{CheckRecord, Status};
use ising_strip::verify::{closed_form_limit, run, Command};
use ising_strip::PrecisionMode;

struct Run {
    records: Vec<CheckRecord>,
    elapsed: Duration,
}

fn execute(command: Command, cfg: &Config) -> Run {
    let start = Instant::now();
    let outcome = run(command, cfg);
    if let Some(e) = outcome.error {
        panic!("{} aborted: {e}", command.name());
    }
    Run { records: outcome.report.records, elapsed: start.elapsed() }
}

fn extended() -> Config {
    Config { precision: PrecisionMode::Extended, ..Config::default() }
}

fn named<'a>(records: &'a [CheckRecord], name: &str) -> Vec<&'a CheckRecord> {
    records.iter().filter(|r| r.check_name == name).collect()
}

fn worst(records: &[&CheckRecord]) -> f64 {
    records.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
}

fn all_pass(records: &[&CheckRecord]) -> bool {
    !records.is_empty() && records.iter().all(|r| r.status == Status::Pass)
}

/// (L, b) pairs present among the records.
fn coverage(records: &[&CheckRecord]) -> BTreeSet<(usize, i32)> {
    records.iter().filter_map(|r| Some((r.params.l?, r.params.b?))).collect()
}

fn full_grid(lo: usize, hi: usize) -> BTreeSet<(usize, i32)> {
    (lo..=hi).flat_map(|l| [(l, 1), (l, -1)]).collect()
}

struct Verdicts {
    failed: Vec<usize>,
}

impl Verdicts {
    fn report(&mut self, n: usize, ok: bool, detail: String) {
        println!("CRITERION {n:>2}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }
}

fn main() {
    let mut v = Verdicts { failed: Vec::new() };
    let mut everything: Vec<CheckRecord> = Vec::new();

    // 1. inversion identity, double and extended
    let dbl = execute(Command::Inversion, &Config::default());
    let ext = execute(Command::Inversion, &extended());
    let (d, e) = (named(&dbl.records, "inversion"), named(&ext.records, "inversion"));
    let samples = d.len() == 60 && e.len() == 60;
    let within = dbl.elapsed.as_secs() < 60 && ext.elapsed.as_secs() < 60;
    v.report(
        1,
        all_pass(&d) && all_pass(&e) && samples && coverage(&d) == full_grid(1, 6) && within,
        format!(
            "{} samples, worst {:.1e} (double, tol 1e-9) / {:.1e} (extended, tol 1e-35), {:.1?} + {:.1?}",
            d.len(),
            worst(&d),
            worst(&e),
            dbl.elapsed,
            ext.elapsed
        ),
    );
    everything.extend(dbl.records);
    everything.extend(ext.records);

    // 2. spectrum and selection rules
    let spec = execute(Command::Spectrum, &Config::default());
    let s = named(&spec.records, "spectrum");
    let probes_ok = s.iter().all(|r| {
        let l = r.params.l.unwrap_or(0);
        r.metrics.get("probes").and_then(|p| p.as_u64()).is_some_and(|p| p > (1u64 << l))
    });
    let sizes = all_pass(&named(&spec.records, "sector_size"));
    v.report(
        2,
        all_pass(&s) && probes_ok && sizes && coverage(&s) == full_grid(1, 6) && spec.elapsed.as_secs() < 120,
        format!("{} sectors, worst {:.1e} (tol 1e-8), {:.1?}", s.len(), worst(&s), spec.elapsed),
    );
    everything.extend(spec.records);

    let tl = execute(Command::Tl, &Config::default());
    everything.extend(tl.records);

    // 3-6 share one extended run over L = 1..6, orders 1..15
    let iom = execute(Command::Iom, &extended());
    let r = &iom.records;

    let scalars = named(r, "scalar_charge");
    let aliased: Vec<(usize, usize)> = scalars
        .iter()
        .filter(|c| c.status == Status::Fail)
        .filter_map(|c| Some((c.params.l?, c.params.orders?)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let structural = named(r, "even_charge_scalar");
    let orders: BTreeSet<usize> = scalars.iter().filter_map(|c| c.params.orders).collect();
    v.report(
        3,
        all_pass(&scalars)
            && orders == (1..=7).map(|k| 2 * k).collect()
            && coverage(&scalars) == full_grid(1, 6)
            && iom.elapsed.as_secs() < 300,
        format!(
            "A_2..A_14, {} checks, failing (L, order) {aliased:?}, all at order >= 4L+6; \
             scalar structure {} (worst {:.1e}); {:.1?}",
            scalars.len(),
            if all_pass(&structural) { "holds" } else { "FAILS" },
            worst(&structural),
            iom.elapsed
        ),
    );

    let decomp = named(r, "decomposition");
    let must: Vec<_> = decomp
        .iter()
        .copied()
        .filter(|c| matches!(c.params.orders, Some(1 | 3 | 5 | 7)) && c.params.l.is_some_and(|l| l >= 3))
        .collect();
    let should: Vec<_> = decomp.iter().copied().filter(|c| c.params.orders.is_some_and(|n| n >= 9)).collect();
    let should_labelled = should.iter().all(|c| matches!(c.status, Status::ExtrapolatedPass | Status::ExtrapolatedFail));
    let should_pass = should.iter().filter(|c| c.status == Status::ExtrapolatedPass).count();
    v.report(
        4,
        all_pass(&must)
            && must.len() == 32
            && coverage(&must) == full_grid(3, 6)
            && should_labelled
            && iom.elapsed.as_secs() < 600,
        format!(
            "MUST {} checks worst {:.1e} (tol 1e-35); SHOULD {}/{} extrapolated passes",
            must.len(),
            worst(&must),
            should_pass,
            should.len()
        ),
    );

    let comm = named(r, "charge_commutation");
    let comm_t = named(r, "charge_transfer_commutation");
    v.report(
        5,
        all_pass(&comm) && all_pass(&comm_t) && coverage(&comm) == full_grid(1, 6),
        format!("[A_j, A_k] worst {:.1e}, [A_k, T] worst {:.1e} (tol 1e-35)", worst(&comm), worst(&comm_t)),
    );

    let pairing = named(r, "trace_pairing");
    let kmax = pairing.iter().filter_map(|c| c.params.orders).max().unwrap_or(0);
    let signs = |name: &str| -> BTreeSet<Option<i32>> { named(r, name).iter().map(|c| c.fitted_sign).collect() };
    let (even_signs, odd_signs) = (signs("even_charge_sign"), signs("odd_charge_sign"));
    let consistent = even_signs.len() == 1 && odd_signs.len() == 1 && !even_signs.contains(&None) && !odd_signs.contains(&None);
    v.report(
        6,
        all_pass(&pairing) && kmax == 10 && coverage(&pairing) == full_grid(1, 5) && consistent,
        format!(
            "{} pairings (k <= {kmax}, m = 0..2) worst {:.1e} (tol 1e-8); fitted signs even {:?}, odd {:?}",
            pairing.len(),
            worst(&pairing),
            even_signs,
            odd_signs
        ),
    );
    everything.extend(iom.records);

    // 7. characters
    let ch = execute(Command::Characters, &Config::default());
    let forms = named(&ch.records, "characters_three_forms");
    let vir = named(&ch.records, "virasoro_limit");
    v.report(
        7,
        all_pass(&forms) && forms.len() == 26 && all_pass(&vir) && vir.len() == 2 && ch.elapsed.as_secs() < 30,
        format!("{} (L, sector) pairs, L <= 12, truncation 40; Virasoro lists match; {:.1?}", forms.len(), ch.elapsed),
    );
    everything.extend(ch.records);

    // 8. free energy, as printed
    let fe = execute(Command::FreeEnergy, &Config::default());
    let f = &fe.records;
    let printed_even: Vec<_> = f.iter().filter(|c| matches!(c.check_name.as_str(), "even_resummation" | "even_resummation_log_coefficient") && c.params.orders == Some(30)).collect();
    let corrected_even = named(f, "even_resummation_corrected");
    let odd_sum = named(f, "odd_resummation");
    let integral = named(f, "bulk_integral_identity");
    let expansion = named(f, "log_transfer_expansion");
    let literal_even = printed_even.iter().all(|c| c.residual.is_some_and(|x| x < 1e-12));
    let expansion_fails = expansion.iter().filter(|c| c.status == Status::Fail).count();
    v.report(
        8,
        literal_even && all_pass(&odd_sum) && all_pass(&integral) && all_pass(&expansion) && expansion.len() == 32,
        format!(
            "even resummation as printed worst {:.1e} (corrected {:.1e}), odd {:.1e}, tol 1e-12; integral {:.1e} (tol 1e-8); \
             log T expansion worst {:.1e} with {expansion_fails}/{} partitions above 1e-10",
            worst(&printed_even),
            worst(&corrected_even),
            worst(&odd_sum),
            worst(&integral),
            worst(&expansion),
            expansion.len()
        ),
    );
    everything.extend(fe.records);

    // 9. partition function trend along doublings, as printed
    let pf = execute(Command::PartitionFunction, &Config::default());
    let trend = named(&pf.records, "partition_function_trend");
    let corrected = named(&pf.records, "partition_function_trend_corrected");
    let describe = |rs: &[&CheckRecord]| -> String {
        rs.iter()
            .map(|c| format!("b={:+} {}", c.params.b.unwrap_or(0), c.status))
            .collect::<Vec<_>>()
            .join(", ")
    };
    v.report(
        9,
        all_pass(&trend) && trend.len() == 2,
        format!("printed: {}; corrected f_bou and nome: {}", describe(&trend), describe(&corrected)),
    );
    everything.extend(pf.records);

    // 10. the recorded discrepancies across all runs above
    let expected: BTreeSet<&str> = [
        "chi_parity_labels",
        "e1_e2_e1",
        "e1_squared",
        "eigenvalue_orientation",
        "even_charge_sign",
        "even_sine_sum_sign",
        "even_resummation_log_coefficient",
        "bulk_free_energy_forms",
        "character_nome",
    ]
    .into_iter()
    .collect();
    let recorded: BTreeSet<&str> = everything
        .iter()
        .filter(|c| matches!(c.status, Status::ErratumRecorded | Status::KnownBoundaryException))
        .map(|c| c.check_name.as_str())
        .collect();
    // failures behind criteria 3, 8 and 9 are expected; any other is not
    let unattainable = |c: &CheckRecord| match c.check_name.as_str() {
        "log_transfer_expansion" => true,
        "scalar_charge" => c.params.orders.zip(c.params.l).is_some_and(|(k, l)| k >= closed_form_limit(l)),
        name => name.starts_with("partition_function_trend"),
    };
    let failing: Vec<&CheckRecord> = everything.iter().filter(|c| c.status == Status::Fail).collect();
    let unexpected: BTreeSet<&str> =
        failing.iter().filter(|c| !unattainable(c)).map(|c| c.check_name.as_str()).collect();
    let expected_failures: BTreeSet<&str> =
        failing.iter().filter(|c| unattainable(c)).map(|c| c.check_name.as_str()).collect();
    let missing: Vec<&str> = expected.difference(&recorded).copied().collect();
    let extra: Vec<&str> = recorded.difference(&expected).copied().collect();
    v.report(
        10,
        missing.is_empty() && extra.is_empty() && unexpected.is_empty(),
        format!(
            "recorded {recorded:?}; missing {missing:?}; unexpected {extra:?}; unexpected FAIL {unexpected:?}; \
             FAIL behind criteria 3, 8, 9 {expected_failures:?}"
        ),
    );

    if v.failed.is_empty() {
        println!("acceptance: all criteria PASS");
    } else {
        println!("acceptance: criteria {:?} FAIL", v.failed);
        std::process::exit(1);
    }
}
