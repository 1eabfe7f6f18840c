use chrono::{Months, NaiveDate};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tokenpolicy_core::cleaning::{extract_cleaned, iterative_filter};
use tokenpolicy_core::cointegration::engle_granger;
use tokenpolicy_core::events::{build_signal, bundled_registry, BipSet};
use tokenpolicy_core::granger::{full_granger, simple_granger, GrangerConfig};
use tokenpolicy_core::stats::{f_test_nested, ols_fit};
use tokenpolicy_core::timeseries::{build_panel, diff_transform, log_change_transform, Column};
use tokenpolicy_core::{Design, Frequency, Panel, TimeSeries};

fn months(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2005, 1, 1).unwrap();
    (0..n).map(|i| start + Months::new(i as u32)).collect()
}

fn monthly(label: &str, values: &[f64]) -> TimeSeries {
    TimeSeries::from_parts(label, Frequency::Monthly, &months(values.len()), values).unwrap()
}

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

/// Two columns with enough spread to keep the design well conditioned.
fn noisy(v: &[f64], k: usize) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, x)| x + ((i * (k + 3)) as f64).sin())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diff_then_cumsum_reconstructs(v in series(2..120)) {
        let ts = monthly("s", &v);
        let d = diff_transform(&ts).unwrap();
        prop_assert_eq!(d.len(), v.len() - 1);
        prop_assert_eq!(d.dates(), ts.dates()[1..].to_vec());
        let mut acc = v[0];
        for (i, (_, inc)) in d.points().iter().enumerate() {
            acc += inc;
            prop_assert!((acc - v[i + 1]).abs() <= 1e-12 * v[i + 1].abs().max(1.0) * (i + 1) as f64);
        }
    }

    #[test]
    fn log_change_then_exp_cumulation_reconstructs(v in prop::collection::vec(0.01f64..1e6, 2..120)) {
        let ts = monthly("s", &v);
        let l = log_change_transform(&ts).unwrap();
        let mut acc = v[0];
        for (i, (_, inc)) in l.points().iter().enumerate() {
            acc *= inc.exp();
            prop_assert!((acc - v[i + 1]).abs() <= 1e-10 * v[i + 1]);
        }
    }

    #[test]
    fn panel_ignores_input_gaps_order(v in series(30..60), drop in prop::collection::btree_set(0usize..30, 0..8)) {
        let m = months(v.len());
        let feat: Vec<(NaiveDate, f64)> = m.iter().copied().zip(v.iter().map(|x| x * 2.0)).enumerate()
            .filter(|(i, _)| !drop.contains(i)).map(|(_, p)| p).collect();
        let y = TimeSeries::from_parts("y", Frequency::Monthly, &m, &v).unwrap();
        let f = TimeSeries::new("f", Frequency::Monthly, feat).unwrap();
        let p = build_panel(&y, &[f]).unwrap();
        prop_assert_eq!(p.len(), v.len() - drop.len());
        prop_assert!(p.months().iter().all(|d| !drop.iter().any(|&i| m[i] == *d)));
    }

    #[test]
    fn single_restriction_f_equals_t_squared(a in series(40..80), b in series(40..80)) {
        let n = a.len().min(b.len());
        let x1 = noisy(&a[..n], 1);
        let x2 = noisy(&b[..n], 2);
        let y: Vec<f64> = x1.iter().zip(&x2).enumerate().map(|(i, (p, q))| 0.3 * p - 0.2 * q + (i as f64 * 0.7).cos()).collect();
        let nested = ols_fit(&Design::from_columns(vec![("x1", x1.clone())]).unwrap(), &y, true).unwrap();
        let parent = ols_fit(&Design::from_columns(vec![("x1", x1), ("x2", x2)]).unwrap(), &y, true).unwrap();
        let f = f_test_nested(&nested, &parent).unwrap();
        let t = parent.t_statistics[parent.index_of("x2").unwrap()];
        prop_assert!((f.f_statistic - t * t).abs() <= 1e-8 * (1.0 + t * t));
        let p = parent.p_value("x2").unwrap();
        prop_assert!((f.p_value - p).abs() <= 1e-8);
    }

    #[test]
    fn cleaning_reconstructs_bucket(a in series(40..80), b in series(40..80), noise in series(40..80)) {
        let n = a.len().min(b.len()).min(noise.len());
        let f1 = noisy(&a[..n], 4);
        let f2 = noisy(&b[..n], 5);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * f1[i] + 0.1 * noise[i]).collect();
        let panel = Panel::from_columns(months(n), vec![
            Column { name: "y".into(), values: y.clone() },
            Column { name: "f1".into(), values: f1.clone() },
            Column { name: "f2".into(), values: f2.clone() },
        ]).unwrap();
        let m = iterative_filter(&panel, 0.05).unwrap();
        for name in &m.surviving_features {
            prop_assert!(m.fit.p_value(name).unwrap() < 0.05);
        }
        prop_assert_eq!(&iterative_filter(&panel, 0.05).unwrap().elimination_log, &m.elimination_log);
        let c = extract_cleaned(&m, &panel).unwrap();
        prop_assert_eq!(c.values.len(), n);
        for (i, yi) in y.iter().enumerate() {
            let mut pred = m.fit.intercept().unwrap_or(0.0);
            for name in &m.surviving_features {
                pred += m.fit.coefficient(name).unwrap() * panel.column(name).unwrap()[i];
            }
            prop_assert!((c.values[i] + pred - yi).abs() <= 1e-10 * (1.0 + yi.abs()));
        }
    }

    #[test]
    fn signal_is_binary_and_union_is_or(
        a in prop::collection::btree_set(1u32..400, 0..30),
        b in prop::collection::btree_set(1u32..400, 0..30),
        start in 0u32..120,
        len in 1usize..200,
    ) {
        let reg = bundled_registry();
        let grid: Vec<NaiveDate> = (0..len).map(|i| NaiveDate::from_ymd_opt(2005, 1, 15).unwrap() + Months::new(start + i as u32)).collect();
        let sa = build_signal(&BipSet::new("a", a.iter().copied()), &reg, &grid);
        let sb = build_signal(&BipSet::new("b", b.iter().copied()), &reg, &grid);
        let su = build_signal(&BipSet::new("u", a.union(&b).copied()), &reg, &grid);
        prop_assert_eq!(sa.values.len(), len);
        prop_assert!(su.values.iter().all(|v| *v == 0.0 || *v == 1.0));
        for i in 0..len {
            prop_assert_eq!(su.values[i], sa.values[i].max(sb.values[i]));
        }
        prop_assert!(sa.ignored_outside_grid <= a.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn granger_invariant_to_signal_scale(seed in 0u64..1000, c in 0.01f64..100.0) {
        let n = 120;
        let x: Vec<f64> = (0..n).map(|i| (i as u64 * 7 + seed).is_multiple_of(5) as u8 as f64).collect();
        let e = gaussian(seed, n);
        let y: Vec<f64> = (0..n).map(|i| e[i] + if i >= 2 { 0.5 * x[i - 2] } else { 0.0 }).collect();
        let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
        let cfg = GrangerConfig::default();

        let a = simple_granger(&x, &y, 6, 0.05, true).unwrap();
        let b = simple_granger(&xs, &y, 6, 0.05, true).unwrap();
        prop_assert_eq!(a.accepted, b.accepted);
        if let (Some(fa), Some(fb)) = (a.diagnostics.f_result, b.diagnostics.f_result) {
            prop_assert!((fa.f_statistic - fb.f_statistic).abs() <= 1e-9 * (1.0 + fa.f_statistic.abs()));
        }

        let a = full_granger(&x, &y, &cfg).unwrap();
        let b = full_granger(&xs, &y, &cfg).unwrap();
        prop_assert_eq!(a.to_string(), b.to_string());
        if let (Some(fa), Some(fb)) = (a.diagnostics.f_result, b.diagnostics.f_result) {
            prop_assert!((fa.f_statistic - fb.f_statistic).abs() <= 1e-9 * (1.0 + fa.f_statistic.abs()));
        }
    }

    #[test]
    fn granger_failure_partition_and_lag_bounds(seed in 0u64..10_000) {
        let n = 100;
        let x: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed * 17) % 97) as f64 / 97.0).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i as u64 * 53 + seed * 11) % 89) as f64 / 89.0).collect();
        let cfg = GrangerConfig::default();
        let v = full_granger(&x, &y, &cfg).unwrap();
        prop_assert_eq!(v.accepted, v.failure_reason.is_none());
        prop_assert_eq!(v.accepted, v.longest_significant_lag.is_some());
        prop_assert!(v.longest_significant_lag.is_none_or(|l| (1..=cfg.x_max_lag).contains(&l)));
        if let (Some(nf), Some(pf)) = (&v.diagnostics.nested, &v.diagnostics.parent) {
            prop_assert_eq!(nf.n_observations, pf.n_observations);
        }
        let s = simple_granger(&x, &y, 6, 0.05, true).unwrap();
        prop_assert_eq!(s.accepted, s.failure_reason.is_none());
        if s.accepted {
            prop_assert_eq!(s.longest_significant_lag, Some(6));
        }
    }

    #[test]
    fn engle_granger_affine_invariance(seed in 0u64..1000, a in 0.1f64..50.0, b in -100.0f64..100.0) {
        let n = 80;
        let (steps, e) = (gaussian(seed, n), gaussian(seed + 5_000, n));
        let mut w = 0.0;
        let x: Vec<f64> = steps.iter().map(|s| { w += s; w }).collect();
        let y: Vec<f64> = x.iter().zip(&e).map(|(v, u)| 1.5 * v + u).collect();
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r1 = engle_granger(&monthly("x", &x), &monthly("y", &y)).unwrap();
        let r2 = engle_granger(&monthly("x", &xs), &monthly("y", &y)).unwrap();
        let (s1, s2) = (r1.adf.test_statistic, r2.adf.test_statistic);
        prop_assert!((s1 - s2).abs() <= 1e-9 * (1.0 + s1.abs()));
        prop_assert_eq!(r1.cointegrated_at_5pct, r2.cointegrated_at_5pct);
        prop_assert_eq!(r1.cointegrated_at_5pct, r1.adf.reject_unit_root);
    }
}
