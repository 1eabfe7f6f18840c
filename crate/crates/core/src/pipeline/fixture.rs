//! Seeded synthetic dataset with the same shape as the real inputs: six
//! exogenous series at daily, weekly and monthly frequency and ten wealth
//! buckets, some of which carry planted effects.
//!
//! Planted structure, in monthly increments:
//! - `From 0 to 0.001` loads on the Federal Funds Rate change;
//! - `From 10 to 100` loads on M2 growth;
//! - `From 0.001 to 0.01` responds to the major-BIP signal three months later;
//! - `From 10000 to 100000` responds to the economy-related signal two months later.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::events::{self, build_signal, builtin_sets};
use crate::pipeline::report::{slug, CANONICAL_BUCKETS};
use crate::timeseries::Frequency;

pub const FIXTURE_START: (i32, u32) = (2012, 1);
pub const FIXTURE_MONTHS: usize = 156;

struct Series {
    label: &'static str,
    frequency: Frequency,
    levels: Vec<f64>,
}

fn month_start(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(FIXTURE_START.0, FIXTURE_START.1, 1).unwrap() + Months::new(i as u32)
}

fn month_end(i: usize) -> NaiveDate {
    month_start(i + 1).pred_opt().unwrap()
}

/// Expands monthly levels to the series frequency. The last observation in
/// each month equals that month's level.
fn expand(s: &Series, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::from("date,value\n");
    for (i, &level) in s.levels.iter().enumerate() {
        let dates: Vec<NaiveDate> = match s.frequency {
            Frequency::Monthly => vec![month_start(i)],
            Frequency::Daily => month_start(i).iter_days().take_while(|d| *d <= month_end(i)).collect(),
            Frequency::Weekly => month_start(i)
                .iter_days()
                .take_while(|d| *d <= month_end(i))
                .filter(|d| d.weekday() == chrono::Weekday::Mon)
                .collect(),
        };
        let last = dates.len() - 1;
        for (k, d) in dates.iter().enumerate() {
            let v = if k == last {
                level
            } else {
                let z: f64 = rng.sample(StandardNormal);
                level * (1.0 + 0.001 * z)
            };
            writeln!(out, "{},{}", d.format("%Y-%m-%d"), v).unwrap();
        }
    }
    out
}

fn random_walk(rng: &mut ChaCha8Rng, start: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut v = start;
    (0..FIXTURE_MONTHS)
        .map(|i| {
            if i > 0 {
                let z: f64 = rng.sample(StandardNormal);
                v = (v + step * z).clamp(lo, hi);
            }
            v
        })
        .collect()
}

fn geometric(rng: &mut ChaCha8Rng, start: f64, drift: f64, vol: f64) -> (Vec<f64>, Vec<f64>) {
    let mut growth = vec![0.0; FIXTURE_MONTHS];
    let mut level = vec![start; FIXTURE_MONTHS];
    for i in 1..FIXTURE_MONTHS {
        let z: f64 = rng.sample(StandardNormal);
        growth[i] = drift + vol * z;
        level[i] = level[i - 1] * growth[i].exp();
    }
    (level, growth)
}

/// Writes `data/*.csv` and `config.toml` under `dir` and returns the config
/// path. Identical seeds give byte-identical files.
pub fn write_fixture(dir: &Path, seed: u64) -> Result<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = dir.join("data");
    std::fs::create_dir_all(&data).map_err(|e| Error::io(&data, e))?;

    let ffr = random_walk(&mut rng, 1.0, 0.15, 0.05, 8.0);
    let unemployment = random_walk(&mut rng, 6.0, 0.1, 3.0, 12.0);
    let (m2, m2_growth) = geometric(&mut rng, 10_000.0, 0.005, 0.004);
    let (cpi, _) = geometric(&mut rng, 230.0, 0.002, 0.002);
    let (gold, _) = geometric(&mut rng, 1_600.0, 0.004, 0.04);
    let (btc, _) = geometric(&mut rng, 100.0, 0.03, 0.15);

    let registry = events::bundled_registry();
    let sets = builtin_sets(&registry)?;
    let grid: Vec<NaiveDate> = (0..FIXTURE_MONTHS).map(month_start).collect();
    let signal = |name: &str| -> Vec<f64> {
        let set = events::find_set(&sets, name).expect("built-in set");
        build_signal(set, &registry, &grid).values
    };
    let major = signal(events::MAJOR_ECONOMY);
    let economy = signal(events::ALL_ECONOMY);

    let mut series = vec![
        Series { label: "Federal Funds Rate", frequency: Frequency::Daily, levels: ffr.clone() },
        Series { label: "M2 (US)", frequency: Frequency::Weekly, levels: m2 },
        Series { label: "Unemployment Rate (US)", frequency: Frequency::Monthly, levels: unemployment },
        Series { label: "Consumer Price Index (US)", frequency: Frequency::Monthly, levels: cpi },
        Series { label: "Gold Price Against USD", frequency: Frequency::Daily, levels: gold },
        Series { label: "Bitcoin (Close Price)", frequency: Frequency::Daily, levels: btc },
    ];
    let n_features = series.len();

    for (k, label) in CANONICAL_BUCKETS.iter().enumerate() {
        let mut level = vec![1_000.0 * (k as f64 + 1.0); FIXTURE_MONTHS];
        let mut prev = 0.0;
        for t in 1..FIXTURE_MONTHS {
            let e: f64 = rng.sample(StandardNormal);
            let r = match k {
                0 => 0.05 * (ffr[t] - ffr[t - 1]) + 0.01 * e,
                1 => (if t >= 3 { 0.05 * major[t - 3] } else { 0.0 }) + 0.01 * e,
                5 => 0.8 * m2_growth[t] + 0.002 * e,
                8 => (if t >= 2 { 0.03 * economy[t - 2] } else { 0.0 }) + 0.01 * e,
                _ => 0.3 * prev + 0.01 * e,
            };
            prev = r;
            level[t] = level[t - 1] * r.exp();
        }
        series.push(Series { label, frequency: Frequency::Daily, levels: level });
    }

    let mut toml = String::from(
        "# Synthetic fixture. Paths are relative to this file.\n\n\
         [output]\ndir = \"out\"\n\n\
         [significance]\nlevel = 0.05\n\n\
         [granger]\npacf_max_lag = 10\npacf_critical = 0.10\nx_max_lag = 10\n\
         t_level = 0.05\nf_level = 0.05\nsimple_intercept = true\nsensitivity_lags = [6, 12]\n\n\
         [cointegration]\nskip = false\non_levels = false\n\n\
         [cleaning]\nmode = \"all-at-once\"\n",
    );
    for (i, s) in series.iter().enumerate() {
        let file = format!("data/{}.csv", slug(s.label));
        let path = dir.join(&file);
        std::fs::write(&path, expand(s, &mut rng)).map_err(|e| Error::io(&path, e))?;
        let table = if i < n_features { "features" } else { "buckets" };
        let freq = match s.frequency {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
        };
        write!(
            toml,
            "\n[[{table}]]\nlabel = \"{}\"\npath = \"{file}\"\nfrequency = \"{freq}\"\n",
            s.label
        )
        .unwrap();
    }
    let config = dir.join("config.toml");
    std::fs::write(&config, toml).map_err(|e| Error::io(&config, e))?;
    Ok(config)
}
