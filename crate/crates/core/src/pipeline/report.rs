//! Table model and the text/CSV renderers behind every emitted table.

use std::collections::BTreeMap;

use crate::cointegration::CointegrationMatrix;
use crate::error::{Error, Result};
use crate::granger::{CausalityMatrix, FailureReason, GrangerVariant};

/// Canonical order of the wealth buckets in every table.
pub const CANONICAL_BUCKETS: [&str; 10] = [
    "From 0 to 0.001",
    "From 0.001 to 0.01",
    "From 0.01 to 0.1",
    "From 0.1 to 1",
    "From 1 to 10",
    "From 10 to 100",
    "From 100 to 1000",
    "From 1000 to 10000",
    "From 10000 to 100000",
    "From 100000 to infinity",
];

/// Orders bucket labels canonically; unknown labels follow in input order.
pub fn canonical_order<S: AsRef<str>>(labels: &[S]) -> Vec<usize> {
    let rank = |l: &str| {
        CANONICAL_BUCKETS
            .iter()
            .position(|c| *c == l)
            .unwrap_or(CANONICAL_BUCKETS.len())
    };
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| rank(labels[i].as_ref()));
    idx
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if c == '.' && out.chars().last().is_some_and(|l| l.is_ascii_digit()) {
            out.push('p');
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// p-value rounded to five decimals with trailing zeros dropped, followed by
/// `*` when strictly below `level`.
pub fn format_pvalue(p: f64, level: f64) -> String {
    if p.is_nan() {
        return "NaN".into();
    }
    let mut s = format!("{p:.5}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if p < level {
        s.push('*');
    }
    s
}

/// Plain rectangular table; the first column holds row labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut records = r.records();
        let header = match records.next() {
            Some(rec) => rec
                .map_err(|e| Error::Config(format!("table csv: {e}")))?
                .iter()
                .map(String::from)
                .collect(),
            None => return Ok(Table::new(Vec::new())),
        };
        let mut t = Table::new(header);
        for rec in records {
            let rec = rec.map_err(|e| Error::Config(format!("table csv: {e}")))?;
            t.rows.push(rec.iter().map(String::from).collect());
        }
        Ok(t)
    }

    /// Fixed-width text rendering under a title line.
    pub fn to_text(&self, title: &str) -> String {
        let ncols = self
            .rows
            .iter()
            .map(Vec::len)
            .chain([self.header.len()])
            .max()
            .unwrap_or(0);
        let mut width = vec![0usize; ncols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (j, c) in r.iter().enumerate() {
                width[j] = width[j].max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = (0..ncols)
                .map(|j| {
                    let c = cells.get(j).map(String::as_str).unwrap_or("");
                    format!("{c:<w$}", w = width[j])
                })
                .collect();
            parts.join(" | ").trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(title);
        out.push('\n');
        out.push_str(&"=".repeat(title.chars().count()));
        out.push('\n');
        out.push_str(&line(&self.header));
        out.push('\n');
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("-+-"));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Features as rows, buckets as columns. `lookup(feature, bucket)` returns
/// the p-value, or `None` for an empty cell.
pub fn pvalue_table<F>(features: &[String], buckets: &[String], level: f64, lookup: F) -> Table
where
    F: Fn(&str, &str) -> Option<f64>,
{
    let mut t = Table::new(std::iter::once(String::new()).chain(buckets.iter().cloned()).collect());
    for f in features {
        let mut row = vec![f.clone()];
        for b in buckets {
            row.push(lookup(f, b).map(|p| format_pvalue(p, level)).unwrap_or_default());
        }
        t.rows.push(row);
    }
    t
}

/// Buckets as rows; columns are the Simple variant over every signal, then
/// the Full variant over every signal.
pub fn causality_table(m: &CausalityMatrix) -> Table {
    let mut header = vec![String::new()];
    for v in GrangerVariant::ALL {
        for s in &m.signals {
            header.push(format!("{} Test, {}", v.name(), s));
        }
    }
    let mut t = Table::new(header);
    if m.cells.is_empty() {
        return t;
    }
    let lookup: BTreeMap<(&str, GrangerVariant, &str), String> = m
        .cells
        .iter()
        .map(|c| ((c.bucket.as_str(), c.variant, c.signal.as_str()), c.token()))
        .collect();
    let order = canonical_order(&m.buckets);
    for i in order {
        let b = &m.buckets[i];
        let mut row = vec![b.clone()];
        for v in GrangerVariant::ALL {
            for s in &m.signals {
                row.push(lookup.get(&(b.as_str(), v, s.as_str())).cloned().unwrap_or_default());
            }
        }
        t.rows.push(row);
    }
    t
}

/// Long-form diagnostics of every causality cell.
pub fn causality_detail_table(m: &CausalityMatrix) -> Table {
    let header = [
        "bucket", "variant", "signal", "months", "verdict", "ar_order", "x_order", "x_lags",
        "f_statistic", "p_value", "df_num", "df_den", "sample_start", "error",
    ];
    let mut t = Table::new(header.iter().map(|s| s.to_string()).collect());
    let order = canonical_order(&m.buckets);
    for i in order {
        let b = &m.buckets[i];
        for c in m.row(b) {
            let mut r = vec![
                c.bucket.clone(),
                c.variant.name().to_string(),
                c.signal.clone(),
                c.months.to_string(),
                c.token(),
            ];
            match &c.outcome {
                Ok(v) => {
                    let d = &v.diagnostics;
                    let lags: Vec<String> = d.surviving_x_lags.iter().map(usize::to_string).collect();
                    r.push(d.ar_order.to_string());
                    r.push(d.x_order.map(|q| q.to_string()).unwrap_or_default());
                    r.push(lags.join(" "));
                    match d.f_result {
                        Some(f) => {
                            r.push(f.f_statistic.to_string());
                            r.push(f.p_value.to_string());
                            r.push(f.df_numerator.to_string());
                            r.push(f.df_denominator.to_string());
                        }
                        None => r.extend(std::iter::repeat_n(String::new(), 4)),
                    }
                    r.push(d.sample_start.to_string());
                    r.push(String::new());
                }
                Err(e) => {
                    r.extend(std::iter::repeat_n(String::new(), 8));
                    r.push(e.clone());
                }
            }
            t.rows.push(r);
        }
    }
    t
}

pub fn causality_legend() -> String {
    let mut s = String::new();
    s.push_str("T (x): Granger-causality accepted; x is the longest significant lag in months\n");
    for r in [FailureReason::A, FailureReason::B, FailureReason::C] {
        s.push_str(&format!("F ({}): rejected, {}\n", r.code(), r.description()));
    }
    s.push_str("E: the test could not be run; see the detail file for the error\n");
    s.push_str("The Simple variant has no t-test filtering, so F (b) never appears in its columns\n");
    s
}

pub fn cointegration_table(m: &CointegrationMatrix) -> Table {
    let header = [
        "feature", "bucket", "adf_statistic", "critical_value_5pct", "lag", "n_obs", "cointegrated",
        "note",
    ];
    let mut t = Table::new(header.iter().map(|s| s.to_string()).collect());
    let order = canonical_order(&m.buckets);
    for (i, f) in m.features.iter().enumerate() {
        for &j in &order {
            let b = &m.buckets[j];
            let row = match &m.cells[i][j] {
                Ok(r) => vec![
                    f.clone(),
                    b.clone(),
                    r.adf.test_statistic.to_string(),
                    r.adf.critical_value_5pct.to_string(),
                    r.adf.lag_used.to_string(),
                    r.adf.n_observations.to_string(),
                    if r.cointegrated_at_5pct { "yes" } else { "no" }.to_string(),
                    r.note.clone().unwrap_or_default(),
                ],
                Err(e) => vec![
                    f.clone(),
                    b.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "error".to_string(),
                    e.clone(),
                ],
            };
            t.rows.push(row);
        }
    }
    t
}

/// Compact yes/no grid of the cointegration screen.
pub fn cointegration_grid(m: &CointegrationMatrix) -> Table {
    let order = canonical_order(&m.buckets);
    let mut t = Table::new(
        std::iter::once(String::new())
            .chain(order.iter().map(|&j| m.buckets[j].clone()))
            .collect(),
    );
    for (i, f) in m.features.iter().enumerate() {
        let mut row = vec![f.clone()];
        for &j in &order {
            row.push(
                match &m.cells[i][j] {
                    Ok(r) if r.cointegrated_at_5pct => "yes",
                    Ok(_) => "no",
                    Err(_) => "E",
                }
                .to_string(),
            );
        }
        t.rows.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pvalue_formatting() {
        assert_eq!(format_pvalue(0.01864, 0.05), "0.01864*");
        assert_eq!(format_pvalue(0.95552, 0.05), "0.95552");
        assert_eq!(format_pvalue(0.05, 0.05), "0.05");
        assert_eq!(format_pvalue(0.2371, 0.05), "0.2371");
        assert_eq!(format_pvalue(1.0, 0.05), "1.0");
        assert_eq!(format_pvalue(0.0000001, 0.05), "0.0*");
        assert_eq!(format_pvalue(0.049999, 0.05), "0.05*");
    }

    #[test]
    fn canonical_bucket_sorting() {
        let labels = ["From 10 to 100", "Other", "From 0 to 0.001"];
        assert_eq!(canonical_order(&labels), vec![2, 0, 1]);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("From 0 to 0.001"), "from_0_to_0p001");
        assert_eq!(slug("M2 (US)"), "m2_us");
        assert_eq!(slug("All Economy-Related BIPs (Except the major ones)"), "all_economy_related_bips_except_the_major_ones");
    }

    #[test]
    fn csv_round_trip_and_text() {
        let mut t = Table::new(vec!["".into(), "a, b".into()]);
        t.rows.push(vec!["x".into(), "0.1*".into()]);
        let back = Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        let text = t.to_text("Title");
        assert!(text.starts_with("Title\n=====\n"));
        assert!(text.contains("x | 0.1*"));
    }

    #[test]
    fn empty_causality_matrix_is_header_only() {
        let m = CausalityMatrix {
            config: Default::default(),
            buckets: vec!["From 1 to 10".into()],
            signals: vec![],
            cells: vec![],
        };
        let t = causality_table(&m);
        assert!(t.rows.is_empty());
        assert_eq!(t.header, vec![String::new()]);
    }
}
