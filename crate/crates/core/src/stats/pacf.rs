use crate::error::{Error, Result};

/// Biased sample autocovariances `gamma[0..=max_lag]` of a demeaned series.
pub(crate) fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    (0..=max_lag)
        .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

/// Partial autocorrelations up to `max_lag` via the Durbin-Levinson
/// recursion on sample autocovariances.
///
/// The returned vector has `max_lag + 1` entries; index `k` holds lag `k`
/// and index 0 is always 1.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag + 1 {
        return Err(Error::Length {
            op: "pacf",
            needed: max_lag + 2,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("pacf input contains non-finite values".into()));
    }
    let gamma = autocovariances(x, max_lag);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || gamma[0] <= 1e-28 * scale * scale {
        return Err(Error::Domain("pacf of a zero-variance series is undefined".into()));
    }
    let rho: Vec<f64> = gamma.iter().map(|g| g / gamma[0]).collect();

    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = rho[k] - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho[j]).sum::<f64>();
        let phi_kk = if den.abs() < f64::EPSILON { 0.0 } else { num / den };
        let prev = phi.clone();
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - phi_kk * prev[k - j - 1];
        }
        phi.push(phi_kk);
        out.push(phi_kk.clamp(-1.0, 1.0));
    }
    Ok(out)
}
