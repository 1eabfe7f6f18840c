//! Engle-Granger two-step cointegration screening.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::adf::{adf_test_with, default_max_lag, AdfResult, AdfVariant};
use crate::stats::{ols_fit, Design, RegressionFit};
use crate::timeseries::{build_panel, TimeSeries};

/// Minimum number of shared months for the two-step test.
pub const MIN_OVERLAP: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CointegrationResult {
    pub feature: String,
    pub bucket: String,
    pub step1_fit: RegressionFit,
    pub adf: AdfResult,
    pub cointegrated_at_5pct: bool,
    /// Set when the first-step regression fits exactly.
    pub note: Option<String>,
}

/// Regresses `y` on `x` (with intercept) over their shared months and runs
/// the ADF residual test against the Engle-Granger critical values.
pub fn engle_granger(x: &TimeSeries, y: &TimeSeries) -> Result<CointegrationResult> {
    let panel = match build_panel(y, std::slice::from_ref(x)) {
        Ok(p) => p,
        Err(Error::EmptyPanel) => {
            return Err(Error::Alignment(format!(
                "`{}` and `{}` share no months",
                x.label(),
                y.label()
            )))
        }
        Err(e) => return Err(e),
    };
    let n = panel.len();
    if n < MIN_OVERLAP {
        return Err(Error::Alignment(format!(
            "`{}` and `{}` share {n} months, need at least {MIN_OVERLAP}",
            x.label(),
            y.label()
        )));
    }
    let yv = panel.dependent_values();
    let design = Design::from_columns(vec![(x.label(), panel.features()[0].values.clone())])?;
    let step1_fit = ols_fit(&design, yv, true)?;

    let mean = yv.iter().sum::<f64>() / n as f64;
    let tss: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    if step1_fit.rss <= 1e-20 * tss.max(f64::MIN_POSITIVE) {
        let adf = AdfResult {
            test_statistic: f64::NEG_INFINITY,
            critical_value_5pct: AdfVariant::CointegrationResidual.critical_value_5pct(n - 1),
            lag_used: 0,
            n_observations: n - 1,
            reject_unit_root: true,
            degenerate: true,
        };
        return Ok(CointegrationResult {
            feature: x.label().to_string(),
            bucket: y.label().to_string(),
            step1_fit,
            adf,
            cointegrated_at_5pct: true,
            note: Some("degenerate: first-step regression fits exactly, residuals are zero".into()),
        });
    }

    let adf = adf_test_with(
        &step1_fit.residuals,
        default_max_lag(n),
        AdfVariant::CointegrationResidual,
    )?;
    Ok(CointegrationResult {
        feature: x.label().to_string(),
        bucket: y.label().to_string(),
        cointegrated_at_5pct: adf.reject_unit_root,
        step1_fit,
        adf,
        note: None,
    })
}

/// Full feature-by-bucket matrix of Engle-Granger results. A failing pair is
/// recorded in its cell and does not abort the rest.
#[derive(Debug, Serialize)]
pub struct CointegrationMatrix {
    pub features: Vec<String>,
    pub buckets: Vec<String>,
    /// Row-major by feature, then bucket.
    pub cells: Vec<Vec<Result<CointegrationResult, String>>>,
}

impl CointegrationMatrix {
    /// Pairs that were tested successfully but did not pass at 5%.
    pub fn non_cointegrated(&self) -> Vec<(&str, &str)> {
        self.iter()
            .filter_map(|(f, b, c)| match c {
                Ok(r) if !r.cointegrated_at_5pct => Some((f, b)),
                _ => None,
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &Result<CointegrationResult, String>)> {
        self.features.iter().enumerate().flat_map(move |(i, f)| {
            self.buckets
                .iter()
                .enumerate()
                .map(move |(j, b)| (f.as_str(), b.as_str(), &self.cells[i][j]))
        })
    }
}

pub fn screen_all_pairs(features: &[TimeSeries], buckets: &[TimeSeries]) -> CointegrationMatrix {
    let pairs: Vec<(usize, usize)> = (0..features.len())
        .flat_map(|i| (0..buckets.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<CointegrationResult, String>> = pairs
        .par_iter()
        .map(|&(i, j)| engle_granger(&features[i], &buckets[j]).map_err(|e| e.to_string()))
        .collect();
    let mut it = results.into_iter();
    let cells = (0..features.len())
        .map(|_| it.by_ref().take(buckets.len()).collect())
        .collect();
    CointegrationMatrix {
        features: features.iter().map(|f| f.label().to_string()).collect(),
        buckets: buckets.iter().map(|b| b.label().to_string()).collect(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Frequency;
    use chrono::{Months, NaiveDate};

    fn monthly(label: &str, values: &[f64]) -> TimeSeries {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (start + Months::new(i as u32), v))
            .collect();
        TimeSeries::new(label, Frequency::Monthly, points).unwrap()
    }

    fn wiggle(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        let mut level = 0.0;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                level += ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
                level
            })
            .collect()
    }

    #[test]
    fn identical_series_are_degenerate_but_cointegrated() {
        let x = monthly("x", &wiggle(60, 1));
        let y = monthly("y", &wiggle(60, 1));
        let r = engle_granger(&x, &y).unwrap();
        assert!(r.cointegrated_at_5pct);
        assert!(r.note.is_some());
        assert_eq!(r.cointegrated_at_5pct, r.adf.reject_unit_root);
    }

    #[test]
    fn short_overlap_is_alignment_error() {
        let x = monthly("x", &wiggle(20, 1));
        let y = monthly("y", &wiggle(20, 2));
        assert!(matches!(engle_granger(&x, &y), Err(Error::Alignment(_))));
    }

    #[test]
    fn matrix_shape_and_empty() {
        let f = vec![monthly("a", &wiggle(50, 1)), monthly("b", &wiggle(50, 2))];
        let b = vec![monthly("u", &wiggle(50, 3)), monthly("v", &wiggle(50, 4))];
        let m = screen_all_pairs(&f, &b);
        assert_eq!(m.cells.len(), 2);
        assert!(m.cells.iter().all(|r| r.len() == 2));
        assert_eq!(m.iter().count(), 4);
        let (fe, bu, _) = m.iter().nth(1).unwrap();
        assert_eq!((fe, bu), ("a", "v"));

        let empty = screen_all_pairs(&[], &b);
        assert!(empty.cells.is_empty());
    }

    #[test]
    fn failing_pair_does_not_abort() {
        let f = vec![monthly("short", &wiggle(10, 1)), monthly("ok", &wiggle(50, 2))];
        let b = vec![monthly("u", &wiggle(50, 3))];
        let m = screen_all_pairs(&f, &b);
        assert!(m.cells[0][0].is_err());
        assert!(m.cells[1][0].is_ok());
    }
}
