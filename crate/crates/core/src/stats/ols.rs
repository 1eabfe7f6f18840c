//! Ordinary least squares with per-coefficient t-tests.
//!
//! Estimation goes through a Householder QR factorisation of the design
//! matrix; the coefficient covariance is `sigma^2 (R^T R)^-1` with
//! `sigma^2 = RSS / (n - k)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::dist::student_t_two_sided_p;

/// Name given to the intercept coefficient.
pub const INTERCEPT: &str = "const";

/// Relative size below which a column's component orthogonal to the
/// preceding columns counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Column-major regressor matrix with column names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Design {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    rows: usize,
}

impl Design {
    /// Empty design with `rows` observations and no regressors.
    pub fn new(rows: usize) -> Self {
        Design {
            names: Vec::new(),
            columns: Vec::new(),
            rows,
        }
    }

    /// Builds a design from named columns, all of equal length.
    pub fn from_columns<S: Into<String>>(columns: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        let mut d = Design::new(rows);
        for (name, values) in columns {
            d.push(name, values)?;
        }
        Ok(d)
    }

    /// Builds a design from unnamed columns, naming them `x1`, `x2`, ...
    pub fn from_unnamed(columns: Vec<Vec<f64>>) -> Result<Self> {
        Design::from_columns(
            columns
                .into_iter()
                .enumerate()
                .map(|(i, c)| (format!("x{}", i + 1), c))
                .collect(),
        )
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if self.columns.is_empty() && self.rows == 0 {
            self.rows = values.len();
        }
        if values.len() != self.rows {
            return Err(Error::Alignment(format!(
                "column `{name}` has {} rows, design has {}",
                values.len(),
                self.rows
            )));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Copy keeping only the columns at `keep`, in that order.
    pub fn subset(&self, keep: &[usize]) -> Design {
        Design {
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            rows: self.rows,
        }
    }

    fn with_intercept(&self) -> Design {
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(self.names.iter().cloned());
        let mut columns = vec![vec![1.0; self.rows]];
        columns.extend(self.columns.iter().cloned());
        Design {
            names,
            columns,
            rows: self.rows,
        }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols(), |i, j| self.columns[j][i])
    }
}

/// Result of one least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionFit {
    /// Regressor names, the intercept (if any) first.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub n_observations: usize,
    pub has_intercept: bool,
}

impl RegressionFit {
    /// Number of estimated coefficients, intercept included.
    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    /// Residual degrees of freedom `n - k`.
    pub fn df_resid(&self) -> usize {
        self.n_observations - self.n_params()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.p_values[i])
    }

    pub fn intercept(&self) -> Option<f64> {
        if self.has_intercept {
            self.coefficient(INTERCEPT)
        } else {
            None
        }
    }

    /// Coefficient of determination against the mean of the fitted target.
    pub fn r_squared(&self, y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        if tss == 0.0 {
            return if self.rss == 0.0 { 1.0 } else { 0.0 };
        }
        1.0 - self.rss / tss
    }
}

/// Upper-triangular factor magnitude check: returns, for each column of `m`,
/// the norm of its component orthogonal to all preceding columns relative to
/// its own norm.
fn orthogonal_fractions(m: &DMatrix<f64>) -> Vec<f64> {
    let r = m.clone().qr().r();
    (0..m.ncols())
        .map(|j| {
            let norm = m.column(j).norm();
            if norm == 0.0 {
                0.0
            } else {
                r[(j, j)].abs() / norm
            }
        })
        .collect()
}

/// Indices of columns that are (numerically) linear combinations of the
/// columns kept before them, scanning left to right.
pub(crate) fn dependent_columns(design: &Design) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..design.cols() {
        let mut trial = kept.clone();
        trial.push(j);
        let frac = *orthogonal_fractions(&design.subset(&trial).to_matrix())
            .last()
            .expect("trial is nonempty");
        if frac <= RANK_TOL {
            dropped.push(j);
        } else {
            kept.push(j);
        }
    }
    dropped
}

/// Least-squares fit of `y` on the design, optionally with an intercept.
pub fn ols_fit(x: &Design, y: &[f64], intercept: bool) -> Result<RegressionFit> {
    if x.rows() != y.len() {
        return Err(Error::Alignment(format!(
            "design has {} rows but y has {} values",
            x.rows(),
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite response value {v}")));
    }
    let design = if intercept { x.with_intercept() } else { x.clone() };
    let n = design.rows();
    let k = design.cols();
    if n <= k {
        return Err(Error::InsufficientData { n, k });
    }
    if design.columns().iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite regressor value".into()));
    }

    let yv = DVector::from_column_slice(y);
    if k == 0 {
        let rss = yv.norm_squared();
        return Ok(RegressionFit {
            names: Vec::new(),
            coefficients: Vec::new(),
            standard_errors: Vec::new(),
            t_statistics: Vec::new(),
            p_values: Vec::new(),
            residuals: y.to_vec(),
            rss,
            n_observations: n,
            has_intercept: false,
        });
    }

    let xm = design.to_matrix();
    let fractions = orthogonal_fractions(&xm);
    if fractions.iter().any(|&f| f <= RANK_TOL) {
        let dropped = dependent_columns(&design);
        return Err(Error::Singular {
            columns: dropped.iter().map(|&j| design.names()[j].clone()).collect(),
        });
    }

    let qr = xm.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular {
            columns: design.names().to_vec(),
        })?;
    let residuals = &yv - &xm * &beta;
    let rss = residuals.norm_squared();

    let df = n - k;
    let sigma2 = rss / df as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular {
            columns: design.names().to_vec(),
        })?;
    // (X^T X)^-1 = R^-1 R^-T; its diagonal is the row norms of R^-1.
    let mut standard_errors = Vec::with_capacity(k);
    let mut t_statistics = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let var = sigma2 * r_inv.row(j).norm_squared();
        let se = var.sqrt();
        let t = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else {
            beta[j].signum() * f64::INFINITY
        };
        standard_errors.push(se);
        t_statistics.push(t);
        p_values.push(student_t_two_sided_p(t, df)?);
    }

    Ok(RegressionFit {
        names: design.names().to_vec(),
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        t_statistics,
        p_values,
        residuals: residuals.iter().copied().collect(),
        rss,
        n_observations: n,
        has_intercept: intercept,
    })
}
