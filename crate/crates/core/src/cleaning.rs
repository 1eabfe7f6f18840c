//! Per-bucket global regression, iterative t-test filtering and residual
//! extraction.
//!
//! The intercept is treated like any other regressor during filtering, so a
//! filtered model may end up without one. An empty survivor set is a valid
//! outcome: the cleaned series is then the dependent series itself.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ols_fit, Design, RegressionFit, INTERCEPT};
use crate::timeseries::Panel;

/// How many insignificant regressors are dropped per refit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    /// Drop every regressor with `p >= level`, then refit.
    #[default]
    AllAtOnce,
    /// Classic backward elimination: drop only the least significant one.
    OneAtATime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilteredModel {
    pub bucket: String,
    pub surviving_features: Vec<String>,
    pub has_intercept: bool,
    pub fit: RegressionFit,
    /// Number of regressions run.
    pub iterations: usize,
    /// Regressors removed at each iteration, with the p-value that removed them.
    pub elimination_log: Vec<Vec<(String, f64)>>,
}

impl FilteredModel {
    pub fn is_empty(&self) -> bool {
        self.surviving_features.is_empty() && !self.has_intercept
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CleanedSeries {
    pub bucket: String,
    pub months: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

fn design_for(panel: &Panel, features: &[String]) -> Result<Design> {
    let mut d = Design::new(panel.len());
    for name in features {
        let col = panel
            .column(name)
            .ok_or_else(|| Error::Config(format!("panel has no feature `{name}`")))?;
        d.push(name.clone(), col.to_vec())?;
    }
    Ok(d)
}

/// OLS of the dependent column on every feature, with intercept.
pub fn fit_global_model(panel: &Panel) -> Result<RegressionFit> {
    let features: Vec<String> = panel.feature_names().iter().map(|s| s.to_string()).collect();
    ols_fit(&design_for(panel, &features)?, panel.dependent_values(), true)
}

pub fn iterative_filter(panel: &Panel, level: f64) -> Result<FilteredModel> {
    iterative_filter_with(panel, level, FilterMode::AllAtOnce)
}

pub fn iterative_filter_with(panel: &Panel, level: f64, mode: FilterMode) -> Result<FilteredModel> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("significance level {level} outside (0, 1)")));
    }
    let y = panel.dependent_values();
    let mut features: Vec<String> = panel.feature_names().iter().map(|s| s.to_string()).collect();
    let mut intercept = true;
    let mut iterations = 0;
    let mut elimination_log = Vec::new();

    let fit = loop {
        let fit = ols_fit(&design_for(panel, &features)?, y, intercept)?;
        if fit.n_params() == 0 {
            break fit;
        }
        iterations += 1;
        let mut insignificant: Vec<(String, f64)> = fit
            .names
            .iter()
            .zip(&fit.p_values)
            .filter(|(_, p)| p.is_nan() || **p >= level)
            .map(|(n, p)| (n.clone(), *p))
            .collect();
        if insignificant.is_empty() {
            break fit;
        }
        if mode == FilterMode::OneAtATime {
            // Highest p-value goes first; ties resolve to the earliest regressor.
            let worst = insignificant
                .iter()
                .enumerate()
                .fold(0, |best, (i, (_, p))| {
                    if *p > insignificant[best].1 {
                        i
                    } else {
                        best
                    }
                });
            insignificant = vec![insignificant.swap_remove(worst)];
        }
        for (name, _) in &insignificant {
            if name == INTERCEPT && fit.has_intercept {
                intercept = false;
            } else {
                features.retain(|f| f != name);
            }
        }
        elimination_log.push(insignificant);
    };

    Ok(FilteredModel {
        bucket: panel.dependent().to_string(),
        surviving_features: features,
        has_intercept: intercept,
        fit,
        iterations,
        elimination_log,
    })
}

/// Residuals `Y - prediction` of a filtered model over the panel months.
pub fn extract_cleaned(model: &FilteredModel, panel: &Panel) -> Result<CleanedSeries> {
    if model.bucket != panel.dependent() {
        return Err(Error::Config(format!(
            "model was fitted for `{}` but panel is for `{}`",
            model.bucket,
            panel.dependent()
        )));
    }
    let y = panel.dependent_values();
    let mut values = y.to_vec();
    if let Some(c) = model.fit.intercept() {
        values.iter_mut().for_each(|v| *v -= c);
    }
    for name in &model.surviving_features {
        let beta = model
            .fit
            .coefficient(name)
            .ok_or_else(|| Error::Config(format!("model has no coefficient for `{name}`")))?;
        let x = panel
            .column(name)
            .ok_or_else(|| Error::Config(format!("panel has no feature `{name}`")))?;
        values.iter_mut().zip(x).for_each(|(v, xi)| *v -= beta * xi);
    }
    Ok(CleanedSeries {
        bucket: model.bucket.clone(),
        months: panel.months().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Column;
    use chrono::Months;

    fn panel(y: Vec<f64>, features: Vec<(&str, Vec<f64>)>) -> Panel {
        let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let months = (0..y.len()).map(|i| start + Months::new(i as u32)).collect();
        let mut cols = vec![Column {
            name: "bucket".into(),
            values: y,
        }];
        cols.extend(features.into_iter().map(|(n, v)| Column {
            name: n.into(),
            values: v,
        }));
        Panel::from_columns(months, cols).unwrap()
    }

    #[test]
    fn exact_linear_dependent_recovers_coefficient() {
        let a: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let y: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let fit = fit_global_model(&panel(y, vec![("a", a), ("b", b)])).unwrap();
        assert!((fit.coefficient("a").unwrap() - 3.0).abs() < 1e-10);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn global_model_rank_deficiency() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (0..10).map(|i| (i % 3) as f64).collect();
        let p = panel(y, vec![("a", a.clone()), ("a2", a)]);
        assert!(matches!(fit_global_model(&p), Err(Error::Singular { .. })));
    }

    #[test]
    fn one_feature_residuals() {
        let p = panel(vec![3.0, 5.0], vec![("x", vec![1.0, 2.0])]);
        let fit = RegressionFit {
            names: vec!["x".into()],
            coefficients: vec![2.0],
            standard_errors: vec![0.1],
            t_statistics: vec![20.0],
            p_values: vec![0.0],
            residuals: vec![1.0, 1.0],
            rss: 2.0,
            n_observations: 2,
            has_intercept: false,
        };
        let model = FilteredModel {
            bucket: "bucket".into(),
            surviving_features: vec!["x".into()],
            has_intercept: false,
            fit,
            iterations: 1,
            elimination_log: vec![],
        };
        let c = extract_cleaned(&model, &p).unwrap();
        assert_eq!(c.values, vec![1.0, 1.0]);
    }

    #[test]
    fn empty_model_returns_series_unchanged() {
        let y: Vec<f64> = (0..24).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let noise: Vec<f64> = (0..24).map(|i| ((i * 11) % 7) as f64).collect();
        let p = panel(y.clone(), vec![("n", noise)]);
        let m = iterative_filter(&p, 0.05).unwrap();
        assert!(m.is_empty(), "{m:?}");
        let c = extract_cleaned(&m, &p).unwrap();
        assert_eq!(c.values, y);
    }

    #[test]
    fn label_mismatch_is_config_error() {
        let y: Vec<f64> = (0..24).map(|i| ((i * 7) % 5) as f64).collect();
        let p = panel(y, vec![("n", (0..24).map(f64::from).collect())]);
        let mut m = iterative_filter(&p, 0.05).unwrap();
        m.bucket = "other".into();
        assert!(matches!(extract_cleaned(&m, &p), Err(Error::Config(_))));
    }

    #[test]
    fn strong_feature_survives_and_intercept_is_dropped() {
        let a: Vec<f64> = (0..60).map(|i| (i as f64 * 0.9).sin()).collect();
        let b: Vec<f64> = (0..60).map(|i| ((i * 13) % 17) as f64 / 17.0 - 0.5).collect();
        let y: Vec<f64> = (0..60)
            .map(|i| 2.0 * a[i] + 0.05 * (((i * 29) % 23) as f64 / 23.0 - 0.5))
            .collect();
        let p = panel(y.clone(), vec![("a", a), ("b", b)]);
        let m = iterative_filter(&p, 0.05).unwrap();
        assert!(m.surviving_features.contains(&"a".to_string()));
        for (i, name) in m.fit.names.iter().enumerate() {
            assert!(m.fit.p_values[i] < 0.05, "{name}");
        }
        assert!(m.iterations <= 3);
        let c = extract_cleaned(&m, &p).unwrap();
        for (r, e) in c.values.iter().zip(&m.fit.residuals) {
            assert!((r - e).abs() < 1e-10);
        }
    }

    #[test]
    fn one_at_a_time_removes_single_regressor_per_step() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let f1: Vec<f64> = (0..40).map(|i| ((i * 11) % 7) as f64).collect();
        let f2: Vec<f64> = (0..40).map(|i| ((i * 3) % 13) as f64).collect();
        let p = panel(y, vec![("f1", f1), ("f2", f2)]);
        let m = iterative_filter_with(&p, 0.05, FilterMode::OneAtATime).unwrap();
        assert!(m.elimination_log.iter().all(|step| step.len() == 1));
    }

    #[test]
    fn rejects_bad_level() {
        let p = panel(vec![1.0, 2.0, 3.0, 4.0], vec![("x", vec![1.0, 0.0, 1.0, 0.0])]);
        assert!(iterative_filter(&p, 0.0).is_err());
        assert!(iterative_filter(&p, 1.5).is_err());
    }
}
