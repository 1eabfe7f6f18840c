//! Numerical statistics kernels.

pub mod adf;
pub mod dist;
pub mod ols;
pub mod pacf;

use serde::Serialize;

use crate::error::{Error, Result};

pub use adf::{adf_test, AdfResult, AdfVariant};
pub use dist::{f_upper_tail_p, normal_quantile, student_t_two_sided_p};
pub use ols::{ols_fit, Design, RegressionFit, INTERCEPT};
pub use pacf::pacf;

/// Akaike information criterion `n ln(RSS/n) + 2k`.
///
/// `RSS = 0` gives `-inf` and a non-finite RSS gives `+inf`; callers treat
/// either as an unusable model.
pub fn aic(rss: f64, n: usize, k: usize) -> f64 {
    if !rss.is_finite() || n == 0 {
        return f64::INFINITY;
    }
    if rss <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = n as f64;
    n * (rss / n).ln() + 2.0 * k as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FTestResult {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_numerator: usize,
    pub df_denominator: usize,
}

/// F-test of a nested model against a parent with strictly more regressors,
/// both fitted on the same observations.
pub fn f_test_nested(nested: &RegressionFit, parent: &RegressionFit) -> Result<FTestResult> {
    if nested.n_observations != parent.n_observations {
        return Err(Error::Alignment(format!(
            "nested model has {} observations, parent has {}",
            nested.n_observations, parent.n_observations
        )));
    }
    let (kn, kp) = (nested.n_params(), parent.n_params());
    if kp <= kn {
        return Err(Error::Alignment(format!(
            "parent model must have more regressors than nested ({kp} vs {kn})"
        )));
    }
    let n = parent.n_observations;
    if n <= kp {
        return Err(Error::InsufficientData { n, k: kp });
    }
    if parent.rss <= 0.0 {
        return Err(Error::DegenerateFit(
            "parent model has zero residual sum of squares".into(),
        ));
    }
    let df_numerator = kp - kn;
    let df_denominator = n - kp;
    // Round-off can leave the parent a hair above the nested RSS.
    let gain = (nested.rss - parent.rss).max(0.0);
    let f_statistic = (gain / df_numerator as f64) / (parent.rss / df_denominator as f64);
    let p_value = f_upper_tail_p(f_statistic, df_numerator, df_denominator)?;
    Ok(FTestResult {
        f_statistic,
        p_value,
        df_numerator,
        df_denominator,
    })
}

/// Variance inflation factor of every column: `1 / (1 - R^2_j)` where
/// `R^2_j` comes from regressing column `j` on the others plus an intercept.
/// Perfectly collinear columns get `+inf`.
pub fn vif(x: &Design) -> Result<Vec<f64>> {
    if x.cols() < 2 {
        return Err(Error::Domain("VIF needs at least two columns".into()));
    }
    let mut out = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let target = x.column(j);
        let others: Vec<usize> = (0..x.cols()).filter(|&i| i != j).collect();
        let aux = x.subset(&others);
        // Columns that are combinations of earlier ones add nothing to the span.
        let mut with_const = Design::new(x.rows());
        with_const.push(INTERCEPT, vec![1.0; x.rows()])?;
        for (name, col) in aux.names().iter().zip(aux.columns()) {
            with_const.push(name.clone(), col.clone())?;
        }
        let dropped = ols::dependent_columns(&with_const);
        let keep: Vec<usize> = (0..with_const.cols()).filter(|i| !dropped.contains(i)).collect();
        let basis = with_const.subset(&keep);
        let fit = match ols_fit(&basis, target, false) {
            Ok(fit) => fit,
            Err(Error::InsufficientData { .. }) => {
                out.push(f64::INFINITY);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mean = target.iter().sum::<f64>() / target.len() as f64;
        let tss: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
        let unexplained = if tss > 0.0 { fit.rss / tss } else { 0.0 };
        out.push(if unexplained <= 1e-12 {
            f64::INFINITY
        } else {
            1.0 / unexplained
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aic_examples() {
        assert_eq!(aic(50.0, 50, 0), 0.0);
        assert!((aic(7.0, 20, 6) - aic(7.0, 20, 3) - 6.0).abs() < 1e-12);
        let a = aic(100.0, 50, 2);
        let b = aic(90.0, 50, 5);
        assert!((a - (50.0 * 2f64.ln() + 4.0)).abs() < 1e-12);
        assert!((a - 38.66).abs() < 0.01);
        assert!((b - 39.39).abs() < 0.01);
        assert!(a < b);
        assert_eq!(aic(0.0, 10, 2), f64::NEG_INFINITY);
        assert_eq!(aic(f64::NAN, 10, 2), f64::INFINITY);
        assert_eq!(aic(f64::INFINITY, 10, 2), f64::INFINITY);
    }

    fn fit_stub(rss: f64, k: usize, n: usize) -> RegressionFit {
        RegressionFit {
            names: (0..k).map(|i| format!("b{i}")).collect(),
            coefficients: vec![0.0; k],
            standard_errors: vec![1.0; k],
            t_statistics: vec![0.0; k],
            p_values: vec![1.0; k],
            residuals: vec![0.0; n],
            rss,
            n_observations: n,
            has_intercept: false,
        }
    }

    #[test]
    fn f_test_direct_formula() {
        let r = f_test_nested(&fit_stub(120.0, 3, 100), &fit_stub(100.0, 5, 100)).unwrap();
        assert!((r.f_statistic - 9.5).abs() < 1e-12);
        assert_eq!((r.df_numerator, r.df_denominator), (2, 95));
        let p = f_upper_tail_p(9.5, 2, 95).unwrap();
        assert_eq!(r.p_value, p);
    }

    #[test]
    fn f_test_no_gain() {
        let r = f_test_nested(&fit_stub(40.0, 2, 30), &fit_stub(40.0, 3, 30)).unwrap();
        assert_eq!(r.f_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn f_test_errors() {
        assert!(matches!(
            f_test_nested(&fit_stub(40.0, 2, 30), &fit_stub(30.0, 3, 31)),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            f_test_nested(&fit_stub(40.0, 2, 30), &fit_stub(0.0, 3, 30)),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn vif_orthogonal_columns() {
        let a = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let v = vif(&Design::from_unnamed(vec![a, b]).unwrap()).unwrap();
        for x in v {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vif_duplicated_column_is_infinite() {
        let a = vec![0.3, 1.2, -0.4, 2.2, 0.9, -1.1];
        let v = vif(&Design::from_unnamed(vec![a.clone(), a]).unwrap()).unwrap();
        assert_eq!(v, vec![f64::INFINITY, f64::INFINITY]);
    }

    #[test]
    fn vif_only_collinear_columns_are_infinite() {
        let a = vec![0.3, 1.2, -0.4, 2.2, 0.9, -1.1, 0.5];
        let b = vec![1.0, 0.0, 2.0, -1.0, 0.5, 0.7, -0.3];
        let v = vif(&Design::from_unnamed(vec![a.clone(), a, b]).unwrap()).unwrap();
        assert!(v[0].is_infinite() && v[1].is_infinite());
        assert!(v[2].is_finite() && v[2] >= 1.0);
    }

    #[test]
    fn vif_needs_two_columns() {
        assert!(vif(&Design::from_unnamed(vec![vec![1.0, 2.0, 3.0]]).unwrap()).is_err());
    }
}
