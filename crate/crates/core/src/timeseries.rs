//! Time-series container, stationarity transforms, monthly alignment and
//! panel assembly.
//!
//! Every operation here is a pure function over immutable inputs.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling frequency declared by the data source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Daily => write!(f, "daily"),
            Frequency::Weekly => write!(f, "weekly"),
            Frequency::Monthly => write!(f, "monthly"),
        }
    }
}

/// Stationarity transform applied to a level series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// First-order differencing, `x[t] - x[t-1]`.
    Diff,
    /// Log-change, `ln x[t] - ln x[t-1]`.
    LogChange,
}

impl Transform {
    pub fn apply(self, ts: &TimeSeries) -> Result<TimeSeries> {
        match self {
            Transform::Diff => diff_transform(ts),
            Transform::LogChange => log_change_transform(ts),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Diff => write!(f, "diff"),
            Transform::LogChange => write!(f, "log-change"),
        }
    }
}

/// Whether the transform runs on the raw-frequency series or on its monthly
/// sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformOrder {
    #[default]
    DownsampleThenTransform,
    TransformThenDownsample,
}

/// First day of the month containing `date`.
pub fn month_key(date: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("first of month is always valid")
}

/// Timestamped numeric observations at a declared frequency.
///
/// Dates are strictly increasing and every stored value is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    label: String,
    frequency: Frequency,
    points: Vec<(NaiveDate, f64)>,
}

impl TimeSeries {
    pub fn new(
        label: impl Into<String>,
        frequency: Frequency,
        points: Vec<(NaiveDate, f64)>,
    ) -> Result<Self> {
        let label = label.into();
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSeries {
                    label,
                    reason: format!("dates not strictly increasing at {}", w[1].0),
                });
            }
        }
        if let Some((d, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSeries {
                label,
                reason: format!("non-finite value {v} at {d}"),
            });
        }
        Ok(TimeSeries {
            label,
            frequency,
            points,
        })
    }

    /// Builds a series from parallel date and value slices.
    pub fn from_parts(
        label: impl Into<String>,
        frequency: Frequency,
        dates: &[NaiveDate],
        values: &[f64],
    ) -> Result<Self> {
        let label = label.into();
        if dates.len() != values.len() {
            return Err(Error::InvalidSeries {
                label,
                reason: format!("{} dates but {} values", dates.len(), values.len()),
            });
        }
        let points = dates.iter().copied().zip(values.iter().copied()).collect();
        TimeSeries::new(label, frequency, points)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn first(&self) -> Option<(NaiveDate, f64)> {
        self.points.first().copied()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn derived(&self, points: Vec<(NaiveDate, f64)>) -> TimeSeries {
        TimeSeries {
            label: self.label.clone(),
            frequency: self.frequency,
            points,
        }
    }
}

/// First-order differencing. The output is one element shorter and each
/// increment is dated at the later point of its pair.
pub fn diff_transform(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 2 {
        return Err(Error::Length {
            op: "diff_transform",
            needed: 2,
            got: ts.len(),
        });
    }
    let points = ts
        .points
        .windows(2)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect();
    Ok(ts.derived(points))
}

/// Log-change transform, `ln x[t] - ln x[t-1]`. Requires strictly positive
/// values.
pub fn log_change_transform(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 2 {
        return Err(Error::Length {
            op: "log_change_transform",
            needed: 2,
            got: ts.len(),
        });
    }
    if let Some((d, v)) = ts.points.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::Domain(format!(
            "log-change of `{}` requires positive values; found {v} at {d}",
            ts.label
        )));
    }
    let points = ts
        .points
        .windows(2)
        .map(|w| (w[1].0, w[1].1.ln() - w[0].1.ln()))
        .collect();
    Ok(ts.derived(points))
}

/// One observation per calendar month: the last reading within the month,
/// keyed to the first day of that month.
pub fn downsample_monthly(ts: &TimeSeries) -> TimeSeries {
    let mut points: Vec<(NaiveDate, f64)> = Vec::new();
    for &(date, value) in &ts.points {
        let key = month_key(date);
        match points.last_mut() {
            Some(last) if last.0 == key => last.1 = value,
            _ => points.push((key, value)),
        }
    }
    TimeSeries {
        label: ts.label.clone(),
        frequency: Frequency::Monthly,
        points,
    }
}

/// Turns a raw level series into monthly stationary increments.
pub fn monthly_increments(
    ts: &TimeSeries,
    transform: Transform,
    order: TransformOrder,
) -> Result<TimeSeries> {
    match order {
        TransformOrder::DownsampleThenTransform => transform.apply(&downsample_monthly(ts)),
        TransformOrder::TransformThenDownsample => {
            Ok(downsample_monthly(&transform.apply(ts)?))
        }
    }
}

/// A named column of a [`Panel`].
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Monthly design panel: the dependent series and its features joined on the
/// months where all of them are observed.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    months: Vec<NaiveDate>,
    columns: Vec<Column>,
    dependent: String,
}

impl Panel {
    /// Assembles a panel from already aligned columns. The dependent column
    /// comes first in `columns`.
    pub fn from_columns(months: Vec<NaiveDate>, columns: Vec<Column>) -> Result<Self> {
        let dependent = columns
            .first()
            .map(|c| c.name.clone())
            .ok_or_else(|| Error::Config("panel needs a dependent column".into()))?;
        if months.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Alignment("panel months not strictly increasing".into()));
        }
        if let Some(m) = months.iter().find(|m| m.day() != 1) {
            return Err(Error::Alignment(format!("month key {m} is not a first-of-month")));
        }
        for c in &columns {
            if c.values.len() != months.len() {
                return Err(Error::Alignment(format!(
                    "column `{}` has {} values for {} months",
                    c.name,
                    c.values.len(),
                    months.len()
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(c) = columns.iter().find(|c| !seen.insert(c.name.as_str())) {
            return Err(Error::Config(format!("duplicate panel column `{}`", c.name)));
        }
        Ok(Panel {
            months,
            columns,
            dependent,
        })
    }

    pub fn months(&self) -> &[NaiveDate] {
        &self.months
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn dependent(&self) -> &str {
        &self.dependent
    }

    pub fn dependent_values(&self) -> &[f64] {
        &self.columns[0].values
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn features(&self) -> &[Column] {
        &self.columns[1..]
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features().iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Copy of this panel keeping only the named features, in the given order.
    pub fn select(&self, features: &[&str]) -> Result<Panel> {
        let mut columns = vec![self.columns[0].clone()];
        for name in features {
            let c = self
                .features()
                .iter()
                .find(|c| c.name == *name)
                .ok_or_else(|| Error::Config(format!("panel has no feature `{name}`")))?;
            columns.push(c.clone());
        }
        Panel::from_columns(self.months.clone(), columns)
    }
}

fn by_month(ts: &TimeSeries) -> BTreeMap<NaiveDate, f64> {
    ts.points.iter().map(|&(d, v)| (month_key(d), v)).collect()
}

/// Inner-joins the dependent series and every feature on month keys. Column
/// order follows the input order.
pub fn build_panel(dependent: &TimeSeries, features: &[TimeSeries]) -> Result<Panel> {
    let dep = by_month(dependent);
    let feats: Vec<BTreeMap<NaiveDate, f64>> = features.iter().map(by_month).collect();
    let months: Vec<NaiveDate> = dep
        .keys()
        .copied()
        .filter(|m| feats.iter().all(|f| f.contains_key(m)))
        .collect();
    if months.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut columns = Vec::with_capacity(features.len() + 1);
    columns.push(Column {
        name: dependent.label().to_string(),
        values: months.iter().map(|m| dep[m]).collect(),
    });
    for (ts, map) in features.iter().zip(&feats) {
        columns.push(Column {
            name: ts.label().to_string(),
            values: months.iter().map(|m| map[m]).collect(),
        });
    }
    Panel::from_columns(months, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn monthly(label: &str, start_month: u32, values: &[f64]) -> TimeSeries {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (d(2020, start_month + i as u32, 1), v))
            .collect();
        TimeSeries::new(label, Frequency::Monthly, points).unwrap()
    }

    #[test]
    fn rejects_unsorted_and_non_finite() {
        let bad = TimeSeries::new(
            "x",
            Frequency::Daily,
            vec![(d(2020, 1, 2), 1.0), (d(2020, 1, 1), 2.0)],
        );
        assert!(matches!(bad, Err(Error::InvalidSeries { .. })));
        let dup = TimeSeries::new(
            "x",
            Frequency::Daily,
            vec![(d(2020, 1, 1), 1.0), (d(2020, 1, 1), 2.0)],
        );
        assert!(dup.is_err());
        let nan = TimeSeries::new("x", Frequency::Daily, vec![(d(2020, 1, 1), f64::NAN)]);
        assert!(nan.is_err());
    }

    #[test]
    fn diff_examples() {
        let out = diff_transform(&monthly("x", 1, &[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(out.values(), vec![2.0, -1.0]);
        assert_eq!(out.dates(), vec![d(2020, 2, 1), d(2020, 3, 1)]);
        let flat = diff_transform(&monthly("x", 1, &[5.0; 4])).unwrap();
        assert_eq!(flat.values(), vec![0.0; 3]);
        assert!(matches!(
            diff_transform(&monthly("x", 1, &[1.0])),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn diff_on_daily_rate_rows() {
        // Ten consecutive daily readings laid out like a DFF export.
        let values = [1.13, 1.25, 1.25, 1.25, 0.38, 0.38, 1.13, 1.25, 1.25, 1.25];
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (d(1954, 7, 1 + i as u32), v))
            .collect();
        let ts = TimeSeries::new("DFF", Frequency::Daily, points).unwrap();
        let out = diff_transform(&ts).unwrap().values();
        let expected = [0.12, 0.0, 0.0, -0.87, 0.0, 0.75, 0.12, 0.0, 0.0];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn log_change_examples() {
        let e = std::f64::consts::E;
        let out = log_change_transform(&monthly("x", 1, &[1.0, e])).unwrap();
        assert!((out.values()[0] - 1.0).abs() < 1e-15);
        let flat = log_change_transform(&monthly("x", 1, &[7.0; 3])).unwrap();
        assert_eq!(flat.values(), vec![0.0, 0.0]);
        let r = log_change_transform(&monthly("x", 1, &[100.0, 110.0])).unwrap();
        assert!((r.values()[0] - 0.0953102).abs() < 1e-7);
    }

    #[test]
    fn log_change_names_offending_date() {
        let err = log_change_transform(&monthly("x", 1, &[1.0, 0.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Domain(_)));
        assert!(msg.contains("2020-02-01"), "{msg}");
    }

    #[test]
    fn downsample_daily_two_months() {
        let mut points = Vec::new();
        let mut day = d(2021, 1, 1);
        while day < d(2021, 3, 1) {
            points.push((day, day.ordinal() as f64));
            day = day.succ_opt().unwrap();
        }
        let ts = TimeSeries::new("x", Frequency::Daily, points).unwrap();
        let m = downsample_monthly(&ts);
        assert_eq!(m.len(), 2);
        assert_eq!(m.points()[0], (d(2021, 1, 1), 31.0));
        assert_eq!(m.points()[1], (d(2021, 2, 1), 59.0));
        assert_eq!(m.frequency(), Frequency::Monthly);
    }

    #[test]
    fn downsample_weekly_takes_last_reading() {
        let points = (0..5).map(|i| (d(2022, 3, 1 + 7 * i), i as f64 + 1.0)).collect();
        let ts = TimeSeries::new("w", Frequency::Weekly, points).unwrap();
        let m = downsample_monthly(&ts);
        assert_eq!(m.points(), &[(d(2022, 3, 1), 5.0)]);
    }

    #[test]
    fn downsample_monthly_rekeys_and_is_idempotent() {
        let points = vec![(d(2020, 1, 31), 1.0), (d(2020, 2, 29), 2.0)];
        let ts = TimeSeries::new("m", Frequency::Monthly, points).unwrap();
        let once = downsample_monthly(&ts);
        assert_eq!(once.dates(), vec![d(2020, 1, 1), d(2020, 2, 1)]);
        assert_eq!(downsample_monthly(&once), once);
    }

    #[test]
    fn panel_is_inner_join() {
        let y = monthly("y", 1, &[1.0, 2.0, 3.0]);
        let x = monthly("x", 2, &[20.0, 30.0, 40.0]);
        let p = build_panel(&y, &[x]).unwrap();
        assert_eq!(p.months(), &[d(2020, 2, 1), d(2020, 3, 1)]);
        assert_eq!(p.dependent_values(), &[2.0, 3.0]);
        assert_eq!(p.column("x").unwrap(), &[20.0, 30.0]);
        assert_eq!(p.feature_names(), vec!["x"]);
    }

    #[test]
    fn panel_drops_dependent_gap_month() {
        let y = TimeSeries::new(
            "y",
            Frequency::Monthly,
            vec![(d(2020, 1, 1), 1.0), (d(2020, 3, 1), 3.0)],
        )
        .unwrap();
        let x = monthly("x", 1, &[1.0, 2.0, 3.0]);
        let p = build_panel(&y, &[x]).unwrap();
        assert_eq!(p.months(), &[d(2020, 1, 1), d(2020, 3, 1)]);
    }

    #[test]
    fn panel_empty_intersection_errors() {
        let y = monthly("y", 1, &[1.0, 2.0]);
        let x = monthly("x", 5, &[1.0, 2.0]);
        assert!(matches!(build_panel(&y, &[x]), Err(Error::EmptyPanel)));
    }

    #[test]
    fn transform_order_matters() {
        let points = vec![
            (d(2020, 1, 10), 1.0),
            (d(2020, 1, 20), 5.0),
            (d(2020, 2, 10), 6.0),
            (d(2020, 2, 20), 2.0),
        ];
        let ts = TimeSeries::new("x", Frequency::Daily, points).unwrap();
        let a = monthly_increments(&ts, Transform::Diff, TransformOrder::DownsampleThenTransform)
            .unwrap();
        assert_eq!(a.points(), &[(d(2020, 2, 1), -3.0)]);
        let b = monthly_increments(&ts, Transform::Diff, TransformOrder::TransformThenDownsample)
            .unwrap();
        assert_eq!(b.points(), &[(d(2020, 1, 1), 4.0), (d(2020, 2, 1), -4.0)]);
    }
}
