//! Augmented Dickey-Fuller unit-root test, constant-only, with AIC-selected
//! augmentation lags and MacKinnon 5% finite-sample critical values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{aic, ols_fit, Design};

/// 5% response-surface coefficients `[tau_inf, tau_1, tau_2, tau_3]`,
/// constant-only case. Mirrored in `data/mackinnon_5pct.csv`.
const MACKINNON_5PCT_UNIT_ROOT: [f64; 4] = [-2.86154, -2.8903, -4.234, -40.040];
const MACKINNON_5PCT_COINT_2: [f64; 4] = [-3.33613, -6.1101, -6.823, 0.0];

/// Which critical-value surface applies to the tested series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdfVariant {
    /// Raw series.
    #[default]
    UnitRoot,
    /// Residuals of a two-variable cointegrating regression.
    CointegrationResidual,
}

impl AdfVariant {
    fn coefficients(self) -> [f64; 4] {
        match self {
            AdfVariant::UnitRoot => MACKINNON_5PCT_UNIT_ROOT,
            AdfVariant::CointegrationResidual => MACKINNON_5PCT_COINT_2,
        }
    }

    /// 5% critical value for a test regression with `nobs` observations.
    pub fn critical_value_5pct(self, nobs: usize) -> f64 {
        let [b0, b1, b2, b3] = self.coefficients();
        let t = nobs as f64;
        b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdfResult {
    pub test_statistic: f64,
    pub critical_value_5pct: f64,
    pub lag_used: usize,
    pub n_observations: usize,
    pub reject_unit_root: bool,
    /// The test regression fit the differences exactly (e.g. a linear ramp);
    /// the statistic is NaN and the unit root is not rejected.
    pub degenerate: bool,
}

/// Test regression `dy[i] = c + gamma*y[i] + sum_j delta_j*dy[i-j]` over rows
/// `start..dy.len()`.
fn adf_regression(
    y: &[f64],
    dy: &[f64],
    lags: usize,
    start: usize,
) -> Result<crate::stats::RegressionFit> {
    let rows = start..dy.len();
    let mut design = Design::new(rows.len());
    design.push("y_lag1", rows.clone().map(|i| y[i]).collect())?;
    for j in 1..=lags {
        design.push(format!("dy_lag{j}"), rows.clone().map(|i| dy[i - j]).collect())?;
    }
    let target: Vec<f64> = rows.map(|i| dy[i]).collect();
    ols_fit(&design, &target, true)
}

/// Runs the ADF test on the raw-series surface.
pub fn adf_test(x: &[f64], max_lag: usize) -> Result<AdfResult> {
    adf_test_with(x, max_lag, AdfVariant::UnitRoot)
}

pub fn adf_test_with(x: &[f64], max_lag: usize, variant: AdfVariant) -> Result<AdfResult> {
    let n = x.len();
    if n <= max_lag + 2 {
        return Err(Error::Length {
            op: "adf_test",
            needed: max_lag + 3,
            got: n,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("adf input contains non-finite values".into()));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(Error::Domain("adf test of a constant series".into()));
    }
    let dy: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();

    // Lag selection on the common sample implied by max_lag.
    let mut best: Option<(usize, f64)> = None;
    for lags in 0..=max_lag {
        let fit = match adf_regression(x, &dy, lags, max_lag) {
            Ok(fit) => fit,
            Err(Error::Singular { .. }) | Err(Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(e),
        };
        let score = aic(fit.rss, fit.n_observations, fit.n_params());
        if !score.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| score < b - 1e-12) {
            best = Some((lags, score));
        }
    }
    let lag_used = match best {
        Some((l, _)) => l,
        None => {
            // Every candidate fit exactly or was infeasible; fall back to no
            // augmentation and let the degeneracy check below decide.
            0
        }
    };

    let fit = match adf_regression(x, &dy, lag_used, lag_used) {
        Ok(fit) => fit,
        Err(Error::InsufficientData { n, k }) => {
            return Err(Error::Length {
                op: "adf_test",
                needed: k + 2,
                got: n + 1,
            })
        }
        Err(e) => return Err(e),
    };
    let nobs = fit.n_observations;
    let critical_value_5pct = variant.critical_value_5pct(nobs);
    let dy_ss: f64 = dy[lag_used..].iter().map(|v| v * v).sum();
    if fit.rss <= 1e-20 * dy_ss {
        return Ok(AdfResult {
            test_statistic: f64::NAN,
            critical_value_5pct,
            lag_used,
            n_observations: nobs,
            reject_unit_root: false,
            degenerate: true,
        });
    }
    let test_statistic = fit.t_statistics[fit.index_of("y_lag1").expect("level term present")];
    Ok(AdfResult {
        test_statistic,
        critical_value_5pct,
        lag_used,
        n_observations: nobs,
        reject_unit_root: test_statistic < critical_value_5pct,
        degenerate: false,
    })
}

/// Schwert's rule for the default maximum augmentation lag,
/// `floor(12 (n/100)^(1/4))`, capped so the test regression stays feasible.
pub fn default_max_lag(n: usize) -> usize {
    let rule = (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize;
    let cap = n.saturating_sub(4) / 3;
    rule.min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_critical_values() {
        let cv = AdfVariant::UnitRoot.critical_value_5pct(1_000_000);
        assert!((cv + 2.86).abs() < 0.01);
        let cv = AdfVariant::CointegrationResidual.critical_value_5pct(1_000_000);
        assert!((cv + 3.34).abs() < 0.01);
        // finite samples push the critical value further out
        assert!(AdfVariant::UnitRoot.critical_value_5pct(50) < -2.9);
    }

    #[test]
    fn data_table_matches_constants() {
        let table = include_str!("../../data/mackinnon_5pct.csv");
        let rows: Vec<Vec<f64>> = table
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("n_vars"))
            .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[0][1..], &MACKINNON_5PCT_UNIT_ROOT);
        assert_eq!(&rows[1][1..], &MACKINNON_5PCT_COINT_2);
    }

    #[test]
    fn exact_ramp_is_degenerate_and_not_rejected() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let r = adf_test(&x, 4).unwrap();
        assert!(r.degenerate);
        assert!(!r.reject_unit_root);
        assert!(r.test_statistic.is_nan());
    }

    #[test]
    fn too_short_and_constant() {
        assert!(matches!(adf_test(&[1.0, 2.0, 3.0], 1), Err(Error::Length { .. })));
        assert!(matches!(adf_test(&[2.0; 40], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn alternating_series_rejects() {
        let x: Vec<f64> = (0..120)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } + 0.01 * ((i * 37) % 11) as f64)
            .collect();
        let r = adf_test(&x, 3).unwrap();
        assert!(r.reject_unit_root, "{r:?}");
        assert_eq!(r.reject_unit_root, r.test_statistic < r.critical_value_5pct);
    }

    #[test]
    fn schwert_rule() {
        assert_eq!(default_max_lag(100), 12);
        assert_eq!(default_max_lag(500), 17);
        assert!(default_max_lag(20) <= 5);
    }
}
