//! Granger-causality tests in two flavours.
//!
//! *Full* picks the autoregressive order of `Y` from its partial
//! autocorrelations, chooses the number of `X` lags by AIC, drops
//! insignificant `X` lags by t-test and finally F-tests the nested model
//! against the parent. *Simple* uses one fixed lag count for both series and
//! goes straight to the F-test.
//!
//! Every model within one test is fitted on the same rows, starting at the
//! largest lag the test considers.

use std::fmt;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cleaning::CleanedSeries;
use crate::error::{Error, Result};
use crate::events::EventSignal;
use crate::stats::{aic, f_test_nested, normal_quantile, ols_fit, pacf, Design, FTestResult, RegressionFit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrangerConfig {
    pub pacf_max_lag: usize,
    pub pacf_critical: f64,
    pub x_max_lag: usize,
    pub t_level: f64,
    pub f_level: f64,
    /// Whether the Simple variant's models carry an intercept.
    pub simple_intercept: bool,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        GrangerConfig {
            pacf_max_lag: 10,
            pacf_critical: 0.10,
            x_max_lag: 10,
            t_level: 0.05,
            f_level: 0.05,
            simple_intercept: true,
        }
    }
}

impl GrangerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pacf_critical", self.pacf_critical),
            ("t_level", self.t_level),
            ("f_level", self.f_level),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} = {v} is outside (0, 1)")));
            }
        }
        if self.pacf_max_lag == 0 || self.x_max_lag == 0 {
            return Err(Error::Config("lag limits must be at least 1".into()));
        }
        Ok(())
    }

    /// Same settings with every lag limit set to `lag`.
    pub fn with_max_lag(self, lag: usize) -> Self {
        GrangerConfig {
            pacf_max_lag: lag,
            x_max_lag: lag,
            ..self
        }
    }
}

/// Why a test did not find causality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureReason {
    /// No candidate lag order produced a finite information criterion.
    A,
    /// Every lag of the independent variable failed the t-test.
    B,
    /// The F-test found no added explanatory power.
    C,
}

impl FailureReason {
    pub fn code(self) -> char {
        match self {
            FailureReason::A => 'a',
            FailureReason::B => 'b',
            FailureReason::C => 'c',
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            FailureReason::A => "every candidate model had a non-finite Akaike information criterion",
            FailureReason::B => "every lagged term of the independent variable was removed by the t-test",
            FailureReason::C => "the lagged terms added no explanatory power according to the F-test",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GrangerDiagnostics {
    pub ar_order: usize,
    pub x_order: Option<usize>,
    pub surviving_x_lags: Vec<usize>,
    /// First row (index into the input series) of the common sample.
    pub sample_start: usize,
    pub nested: Option<RegressionFit>,
    pub parent: Option<RegressionFit>,
    pub f_result: Option<FTestResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrangerVerdict {
    pub accepted: bool,
    pub longest_significant_lag: Option<usize>,
    pub failure_reason: Option<FailureReason>,
    pub diagnostics: GrangerDiagnostics,
}

impl GrangerVerdict {
    fn accept(lag: usize, diagnostics: GrangerDiagnostics) -> Self {
        GrangerVerdict {
            accepted: true,
            longest_significant_lag: Some(lag),
            failure_reason: None,
            diagnostics,
        }
    }

    fn reject(reason: FailureReason, diagnostics: GrangerDiagnostics) -> Self {
        GrangerVerdict {
            accepted: false,
            longest_significant_lag: None,
            failure_reason: Some(reason),
            diagnostics,
        }
    }
}

impl fmt::Display for GrangerVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.longest_significant_lag, self.failure_reason) {
            (Some(lag), _) if self.accepted => write!(f, "T ({lag})"),
            (_, Some(r)) => write!(f, "F ({})", r.code()),
            _ => write!(f, "?"),
        }
    }
}

/// Design with `y` lags `1..=y_lags` and the given `x` lags, rows `start..n`.
fn lag_design(y: &[f64], x: &[f64], start: usize, y_lags: usize, x_lags: &[usize]) -> Result<Design> {
    let rows = start..y.len();
    let mut d = Design::new(rows.len());
    for j in 1..=y_lags {
        d.push(format!("y_lag{j}"), rows.clone().map(|t| y[t - j]).collect())?;
    }
    for &j in x_lags {
        d.push(format!("x_lag{j}"), rows.clone().map(|t| x[t - j]).collect())?;
    }
    Ok(d)
}

fn check_aligned(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!(
            "series lengths differ: x has {}, y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("granger input contains non-finite values".into()));
    }
    Ok(())
}

/// Largest lag whose partial autocorrelation lies outside the two-sided
/// `pacf_critical` band `z / sqrt(n)`; 0 when none does.
pub fn select_ar_order(y: &[f64], cfg: &GrangerConfig) -> Result<usize> {
    let p = pacf(y, cfg.pacf_max_lag)?;
    let band = normal_quantile(1.0 - cfg.pacf_critical / 2.0) / (y.len() as f64).sqrt();
    Ok((1..p.len()).rev().find(|&k| p[k].abs() > band).unwrap_or(0))
}

fn common_start(ar_order: usize, cfg: &GrangerConfig) -> usize {
    ar_order.max(cfg.x_max_lag)
}

/// AIC-minimising number of `x` lags in `1..=x_max_lag`. `None` means no
/// candidate could be scored (failure A).
pub fn select_x_order(y: &[f64], x: &[f64], ar_order: usize, cfg: &GrangerConfig) -> Result<Option<usize>> {
    check_aligned(x, y)?;
    let start = common_start(ar_order, cfg);
    let target = &y[start.min(y.len())..];
    let mut best: Option<(usize, f64)> = None;
    for q in 1..=cfg.x_max_lag {
        let lags: Vec<usize> = (1..=q).collect();
        let design = lag_design(y, x, start, ar_order, &lags)?;
        let fit = match ols_fit(&design, target, true) {
            Ok(fit) => fit,
            Err(Error::Singular { .. }) | Err(Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(e),
        };
        let score = aic(fit.rss, fit.n_observations, fit.n_params());
        if !score.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| score < b - 1e-12) {
            best = Some((q, score));
        }
    }
    Ok(best.map(|(q, _)| q))
}

/// Repeatedly drops every `x` lag with `p >= t_level` and refits. Returns the
/// surviving lags and the final fit, or `None` when no lag survives
/// (failure B).
pub fn filter_x_lags(
    y: &[f64],
    x: &[f64],
    ar_order: usize,
    q: usize,
    cfg: &GrangerConfig,
) -> Result<Option<(Vec<usize>, RegressionFit)>> {
    check_aligned(x, y)?;
    if q == 0 {
        return Err(Error::Config("x lag order must be at least 1".into()));
    }
    let start = common_start(ar_order, cfg).max(q);
    let target = &y[start.min(y.len())..];
    let mut lags: Vec<usize> = (1..=q).collect();
    loop {
        let fit = ols_fit(&lag_design(y, x, start, ar_order, &lags)?, target, true)?;
        let before = lags.len();
        lags.retain(|j| {
            let p = fit.p_value(&format!("x_lag{j}")).unwrap_or(f64::NAN);
            p < cfg.t_level
        });
        if lags.is_empty() {
            return Ok(None);
        }
        if lags.len() == before {
            return Ok(Some((lags, fit)));
        }
    }
}

/// F-test of `nested` against `parent`. An exact parent fit that still
/// improves on the nested model is accepted outright.
fn compare(nested: &RegressionFit, parent: &RegressionFit) -> Result<FTestResult> {
    match f_test_nested(nested, parent) {
        Err(Error::DegenerateFit(_)) => {
            let gain = nested.rss > 0.0;
            Ok(FTestResult {
                f_statistic: if gain { f64::INFINITY } else { 0.0 },
                p_value: if gain { 0.0 } else { 1.0 },
                df_numerator: parent.n_params() - nested.n_params(),
                df_denominator: parent.n_observations.saturating_sub(parent.n_params()),
            })
        }
        other => other,
    }
}

pub fn full_granger(x: &[f64], y: &[f64], cfg: &GrangerConfig) -> Result<GrangerVerdict> {
    cfg.validate()?;
    check_aligned(x, y)?;
    let needed = cfg.pacf_max_lag + cfg.x_max_lag + 3;
    if y.len() < needed {
        return Err(Error::Length {
            op: "full_granger",
            needed,
            got: y.len(),
        });
    }
    let ar_order = select_ar_order(y, cfg)?;
    let start = common_start(ar_order, cfg);
    let mut diag = GrangerDiagnostics {
        ar_order,
        sample_start: start,
        ..Default::default()
    };

    let Some(q) = select_x_order(y, x, ar_order, cfg)? else {
        return Ok(GrangerVerdict::reject(FailureReason::A, diag));
    };
    diag.x_order = Some(q);

    let Some((lags, parent)) = filter_x_lags(y, x, ar_order, q, cfg)? else {
        return Ok(GrangerVerdict::reject(FailureReason::B, diag));
    };
    let nested = ols_fit(&lag_design(y, x, start, ar_order, &[])?, &y[start..], true)?;
    let f = compare(&nested, &parent)?;
    let longest = *lags.iter().max().expect("non-empty survivors");
    diag.surviving_x_lags = lags;
    diag.nested = Some(nested);
    diag.parent = Some(parent);
    diag.f_result = Some(f);
    Ok(if f.p_value < cfg.f_level {
        GrangerVerdict::accept(longest, diag)
    } else {
        GrangerVerdict::reject(FailureReason::C, diag)
    })
}

pub fn simple_granger(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
    f_level: f64,
    intercept: bool,
) -> Result<GrangerVerdict> {
    check_aligned(x, y)?;
    if max_lag == 0 {
        return Err(Error::Config("max_lag must be at least 1".into()));
    }
    if !(f_level > 0.0 && f_level < 1.0) {
        return Err(Error::Config(format!("f_level = {f_level} is outside (0, 1)")));
    }
    let needed = 2 * max_lag + 3;
    if y.len() < needed {
        return Err(Error::Length {
            op: "simple_granger",
            needed,
            got: y.len(),
        });
    }
    let lags: Vec<usize> = (1..=max_lag).collect();
    let target = &y[max_lag..];
    let mut diag = GrangerDiagnostics {
        ar_order: max_lag,
        x_order: Some(max_lag),
        sample_start: max_lag,
        ..Default::default()
    };
    // x lags that merely repeat earlier columns are dropped; the test fails
    // with A only when no x lag carries independent information.
    let mut x_lags = lags;
    let parent = loop {
        match ols_fit(&lag_design(y, x, max_lag, max_lag, &x_lags)?, target, intercept) {
            Ok(fit) => break fit,
            Err(Error::Singular { columns })
                if columns.iter().all(|c| c.starts_with("x_lag")) =>
            {
                x_lags.retain(|j| !columns.contains(&format!("x_lag{j}")));
                if x_lags.is_empty() {
                    return Ok(GrangerVerdict::reject(FailureReason::A, diag));
                }
            }
            Err(Error::Singular { .. }) | Err(Error::InsufficientData { .. }) => {
                return Ok(GrangerVerdict::reject(FailureReason::A, diag))
            }
            Err(e) => return Err(e),
        }
    };
    let nested = ols_fit(&lag_design(y, x, max_lag, max_lag, &[])?, target, intercept)?;
    let f = compare(&nested, &parent)?;
    diag.surviving_x_lags = x_lags;
    diag.nested = Some(nested);
    diag.parent = Some(parent);
    diag.f_result = Some(f);
    Ok(if f.p_value < f_level {
        GrangerVerdict::accept(max_lag, diag)
    } else {
        GrangerVerdict::reject(FailureReason::C, diag)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GrangerVariant {
    Simple,
    Full,
}

impl GrangerVariant {
    pub const ALL: [GrangerVariant; 2] = [GrangerVariant::Simple, GrangerVariant::Full];

    pub fn name(self) -> &'static str {
        match self {
            GrangerVariant::Simple => "Simple",
            GrangerVariant::Full => "Full",
        }
    }
}

/// Runs one variant on an aligned pair.
pub fn run_variant(variant: GrangerVariant, x: &[f64], y: &[f64], cfg: &GrangerConfig) -> Result<GrangerVerdict> {
    match variant {
        GrangerVariant::Simple => simple_granger(x, y, cfg.x_max_lag, cfg.f_level, cfg.simple_intercept),
        GrangerVariant::Full => full_granger(x, y, cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalityCell {
    pub bucket: String,
    pub signal: String,
    pub variant: GrangerVariant,
    /// Months used after aligning the signal with the bucket.
    pub months: usize,
    pub outcome: std::result::Result<GrangerVerdict, String>,
}

impl CausalityCell {
    /// Table token: `T (x)`, `F (a|b|c)`, or `E` when the test errored.
    pub fn token(&self) -> String {
        match &self.outcome {
            Ok(v) => v.to_string(),
            Err(_) => "E".to_string(),
        }
    }
}

/// Verdicts over buckets × variants × signals. Cells are ordered by bucket,
/// then variant (Simple before Full), then signal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalityMatrix {
    pub config: GrangerConfig,
    pub buckets: Vec<String>,
    pub signals: Vec<String>,
    pub cells: Vec<CausalityCell>,
}

impl CausalityMatrix {
    pub fn get(&self, bucket: &str, variant: GrangerVariant, signal: &str) -> Option<&CausalityCell> {
        self.cells
            .iter()
            .find(|c| c.bucket == bucket && c.variant == variant && c.signal == signal)
    }

    pub fn row(&self, bucket: &str) -> impl Iterator<Item = &CausalityCell> {
        let bucket = bucket.to_string();
        self.cells.iter().filter(move |c| c.bucket == bucket)
    }
}

/// Values of `a` and `b` on their shared months.
fn intersect(
    am: &[NaiveDate],
    av: &[f64],
    bm: &[NaiveDate],
    bv: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (mut i, mut j) = (0, 0);
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    while i < am.len() && j < bm.len() {
        match am[i].cmp(&bm[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                xa.push(av[i]);
                xb.push(bv[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (xa, xb)
}

pub fn run_causality_matrix(
    signals: &[EventSignal],
    buckets: &[CleanedSeries],
    cfg: &GrangerConfig,
) -> CausalityMatrix {
    let mut jobs = Vec::new();
    if !signals.is_empty() {
        for b in buckets {
            for variant in GrangerVariant::ALL {
                for s in signals {
                    jobs.push((b, variant, s));
                }
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(b, variant, s)| {
            let (x, y) = intersect(&s.months, &s.values, &b.months, &b.values);
            let outcome = if x.is_empty() {
                Err(format!("`{}` and `{}` share no months", s.name, b.bucket))
            } else {
                run_variant(variant, &x, &y, cfg).map_err(|e| e.to_string())
            };
            CausalityCell {
                bucket: b.bucket.clone(),
                signal: s.name.clone(),
                variant,
                months: x.len(),
                outcome,
            }
        })
        .collect();
    CausalityMatrix {
        config: *cfg,
        buckets: buckets.iter().map(|b| b.bucket.clone()).collect(),
        signals: signals.iter().map(|s| s.name.clone()).collect(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn verdict_tokens() {
        let d = GrangerDiagnostics::default();
        assert_eq!(GrangerVerdict::accept(3, d.clone()).to_string(), "T (3)");
        assert_eq!(GrangerVerdict::accept(10, d.clone()).to_string(), "T (10)");
        assert_eq!(GrangerVerdict::reject(FailureReason::A, d.clone()).to_string(), "F (a)");
        assert_eq!(GrangerVerdict::reject(FailureReason::B, d.clone()).to_string(), "F (b)");
        assert_eq!(GrangerVerdict::reject(FailureReason::C, d).to_string(), "F (c)");
    }

    #[test]
    fn config_validation() {
        assert!(GrangerConfig::default().validate().is_ok());
        let bad = GrangerConfig {
            f_level: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GrangerConfig {
            x_max_lag: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ar_order_length_error() {
        let cfg = GrangerConfig::default();
        assert!(matches!(select_ar_order(&noise(10, 1), &cfg), Err(Error::Length { .. })));
    }

    #[test]
    fn zero_signal_is_failure_a() {
        let y = noise(120, 3);
        let x = vec![0.0; 120];
        let v = full_granger(&x, &y, &GrangerConfig::default()).unwrap();
        assert_eq!(v.failure_reason, Some(FailureReason::A));
        let v = simple_granger(&x, &y, 10, 0.05, true).unwrap();
        assert_eq!(v.failure_reason, Some(FailureReason::A));
    }

    #[test]
    fn shifted_copy_is_detected_by_simple() {
        let y = noise(150, 4);
        let mut x = vec![0.0; 150];
        x[..149].copy_from_slice(&y[1..]);
        let v = simple_granger(&x, &y, 6, 0.05, true).unwrap();
        assert_eq!(v.to_string(), "T (6)");
    }

    #[test]
    fn nested_and_parent_share_rows() {
        let y = noise(180, 5);
        let x: Vec<f64> = noise(180, 6).iter().map(|v| (*v > 0.8) as u8 as f64).collect();
        let v = full_granger(&x, &y, &GrangerConfig::default()).unwrap();
        if let (Some(n), Some(p)) = (&v.diagnostics.nested, &v.diagnostics.parent) {
            assert_eq!(n.n_observations, p.n_observations);
            assert_eq!(n.n_observations, 180 - v.diagnostics.sample_start);
        }
    }

    #[test]
    fn length_and_alignment_errors() {
        let cfg = GrangerConfig::default();
        assert!(matches!(full_granger(&noise(20, 1), &noise(20, 2), &cfg), Err(Error::Length { .. })));
        assert!(matches!(full_granger(&noise(50, 1), &noise(60, 2), &cfg), Err(Error::Alignment(_))));
        assert!(matches!(simple_granger(&noise(10, 1), &noise(10, 2), 5, 0.05, true), Err(Error::Length { .. })));
    }

    #[test]
    fn empty_signal_list_gives_empty_matrix() {
        let b = CleanedSeries {
            bucket: "b".into(),
            months: vec![],
            values: vec![],
        };
        let m = run_causality_matrix(&[], &[b], &GrangerConfig::default());
        assert!(m.cells.is_empty());
    }

    #[test]
    fn intersect_keeps_shared_months() {
        let d = |m| NaiveDate::from_ymd_opt(2020, m, 1).unwrap();
        let (a, b) = intersect(&[d(1), d(2), d(4)], &[1.0, 2.0, 4.0], &[d(2), d(3), d(4)], &[20.0, 30.0, 40.0]);
        assert_eq!(a, vec![2.0, 4.0]);
        assert_eq!(b, vec![20.0, 40.0]);
    }
}
