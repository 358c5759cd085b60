use std::f64::consts::FRAC_PI_4;

use ising_strip::config::Config;
use ising_strip::exact::binomial_i64;
use ising_strip::free_energy::{even_closed, f_bou, f_bulk, odd_closed};
use ising_strip::lattice::{normalized_transfer, rescale_to_d, weight_left, weight_right, SpectralPoint, Spin, SpinBasis};
use ising_strip::qseries::{compare_forms, full_truncation, qbinom, Sector};
use ising_strip::report::Status;
use ising_strip::spectrum::{enumerate_sector, inversion_check, lattice_eigenvalue};
use proptest::prelude::*;

fn spin() -> impl Strategy<Value = Spin> {
    prop_oneof![Just(Spin::Plus), Just(Spin::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossing(r in spin(), t in spin(), s in spin(), u in 0.01f64..0.77) {
        let left = weight_left(r, t, s, &u).unwrap();
        let right = weight_right(r, t, s, &(FRAC_PI_4 - u)).unwrap();
        prop_assert!((left - right).abs() <= 1e-12 * left.abs());
    }

    #[test]
    fn inversion_identity(l in 1usize..=4, b in spin(), w in 0.02f64..0.45) {
        let basis = SpinBasis::new(l, b).unwrap();
        let p = SpectralPoint::from_w(w).unwrap();
        let m = SpectralPoint::from_w(-w).unwrap();
        let dp = rescale_to_d(&normalized_transfer(&basis, &p).unwrap(), &p.x, l).unwrap();
        let dm = rescale_to_d(&normalized_transfer(&basis, &m).unwrap(), &m.x, l).unwrap();
        let r = inversion_check(l, &p.x, &dp, &dm);
        prop_assert!(r.residual < 1e-10, "{:e}", r.residual);
    }

    #[test]
    fn trace_is_eigenvalue_sum(l in 1usize..=5, b in spin(), w in 0.02f64..0.45) {
        let basis = SpinBasis::new(l, b).unwrap();
        let p = SpectralPoint::from_w(w).unwrap();
        let t = normalized_transfer(&basis, &p).unwrap();
        let sum: f64 = enumerate_sector(l, b).iter().map(|q| lattice_eigenvalue(q, &p.x).unwrap()).sum();
        prop_assert!((t.trace() - sum).abs() < 1e-11 * sum.abs().max(1.0));
    }

    #[test]
    fn qbinomial_symmetry_and_count(n in 0usize..14, k in 0usize..14) {
        prop_assume!(k <= n);
        let a = qbinom(n, k).unwrap();
        let c = qbinom(n, n - k).unwrap();
        prop_assert_eq!(a.pairs(), c.pairs());
        prop_assert_eq!(a.coefficient_sum(), binomial_i64(n as u64, k as u64) as i128);
    }

    #[test]
    fn character_forms_agree(l in 0usize..=9, plus in any::<bool>(), full in any::<bool>()) {
        let sector = if plus { Sector::Plus } else { Sector::Minus };
        let trunc = if full { full_truncation(l) } else { 2 * l + 3 };
        let c = compare_forms(l, sector, trunc).unwrap();
        prop_assert!(c.partition_eq_fermionic && c.partition_eq_bosonic && c.nonnegative);
        if full {
            prop_assert_eq!(c.dimension, 1i128 << l);
        }
    }

    #[test]
    fn free_energy_regrouping(l in 0usize..6, x in 1.2f64..50.0) {
        let lhs = -2.0 * (2 * l + 3) as f64 * f_bulk(&x).unwrap() - f_bou(&x).unwrap();
        let rhs = even_closed(l, &x, 0.25) + odd_closed(l, &x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn status_follows_residual(r in 0.0f64..1.0, t in 0.0f64..1.0) {
        prop_assert_eq!(Status::from_residual(r, t) == Status::Pass, r <= t);
    }

    #[test]
    fn config_file_round_trip(l in 0usize..=12, seed in any::<u64>(), minus in any::<bool>(), digits in 30u32..200) {
        let text = format!("L = {l}\nseed={seed}\nb = {}\nprecision = extended\ndigits = {digits}\n", if minus { "-1" } else { "+1" });
        let c = Config::from_key_values(&text).unwrap();
        prop_assert_eq!(c.l, Some(l));
        prop_assert_eq!(c.seed, seed);
        prop_assert_eq!(c.digits, digits);
        prop_assert!(c.validate().is_ok());
    }
}
