//! Recomputes the emitted tables from the stored intermediates and reports
//! every cell that does not match.

use std::path::Path;

use crate::cleaning::{extract_cleaned, fit_global_model, iterative_filter_with, CleanedSeries};
use crate::error::{Error, Result};
use crate::events::{self, EventSignal};
use crate::granger::run_causality_matrix;
use crate::pipeline::report::{causality_table, format_pvalue, slug, Table};
use crate::pipeline::{parse_panel_csv, parse_series_csv, read_metadata};
use crate::stats::INTERCEPT;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub checks: usize,
    pub mismatches: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn expect_eq(&mut self, what: String, stored: &str, recomputed: &str) {
        self.checks += 1;
        if stored != recomputed {
            self.mismatches
                .push(format!("{what}: stored `{stored}`, recomputed `{recomputed}`"));
        }
    }

    fn expect_close(&mut self, what: String, stored: f64, recomputed: f64) {
        self.checks += 1;
        let tol = 1e-9 * stored.abs().max(recomputed.abs()).max(1.0);
        if !((stored - recomputed).abs() <= tol || stored == recomputed) {
            self.mismatches
                .push(format!("{what}: stored {stored}, recomputed {recomputed}"));
        }
    }
}

fn read(dir: &Path, rel: &str) -> Result<Option<String>> {
    let p = dir.join(rel);
    if !p.is_file() {
        return Ok(None);
    }
    std::fs::read_to_string(&p).map(Some).map_err(|e| Error::io(&p, e))
}

fn cell<'a>(t: &'a Table, row: &str, col: &str) -> Option<&'a str> {
    let j = t.header.iter().position(|h| h == col)?;
    let r = t.rows.iter().find(|r| r.first().map(String::as_str) == Some(row))?;
    r.get(j).map(String::as_str)
}

/// Audits the run stored in `dir`.
pub fn audit(dir: &Path) -> Result<AuditReport> {
    let meta = read_metadata(dir)?;
    let cfg = &meta.config;
    let level = cfg.significance.level;
    let mut rep = AuditReport::default();

    let global_t = read(dir, "global_pvalues.csv")?.map(|s| Table::from_csv(&s)).transpose()?;
    let filtered_t = read(dir, "filtered_pvalues.csv")?.map(|s| Table::from_csv(&s)).transpose()?;
    let global_fits = read(dir, "global_fits.csv")?.map(|s| Table::from_csv(&s)).transpose()?;

    let mut cleaned_all: Vec<CleanedSeries> = Vec::new();
    for spec in &cfg.buckets {
        let b = &spec.label;
        let Some(panel_text) = read(dir, &format!("panels/{}.csv", slug(b)))? else {
            rep.mismatches.push(format!("panel for `{b}` is missing"));
            continue;
        };
        let panel = parse_panel_csv(&panel_text)?;
        let Some(gt) = &global_t else { continue };
        let global = fit_global_model(&panel)?;
        for f in panel.feature_names() {
            let p = global.p_value(f).unwrap_or(f64::NAN);
            rep.expect_eq(
                format!("global p-value {f} / {b}"),
                cell(gt, f, b).unwrap_or("<missing>"),
                &format_pvalue(p, level),
            );
        }
        if let Some(fits) = &global_fits {
            for r in fits.rows.iter().filter(|r| r[0] == *b) {
                let stored: f64 = r[6].parse().unwrap_or(f64::NAN);
                let recomputed = global.p_value(&r[2]).unwrap_or(f64::NAN);
                rep.expect_close(format!("global fit p-value {} / {b}", r[2]), stored, recomputed);
                let stored: f64 = r[3].parse().unwrap_or(f64::NAN);
                let recomputed = global.coefficient(&r[2]).unwrap_or(f64::NAN);
                rep.expect_close(format!("global coefficient {} / {b}", r[2]), stored, recomputed);
            }
        }

        let filtered = iterative_filter_with(&panel, level, cfg.cleaning.mode)?;
        if let Some(ft) = &filtered_t {
            for f in panel.feature_names() {
                let token = filtered
                    .fit
                    .p_value(f)
                    .map(|p| format_pvalue(p, level))
                    .unwrap_or_default();
                rep.expect_eq(
                    format!("filtered p-value {f} / {b}"),
                    cell(ft, f, b).unwrap_or("<missing>"),
                    &token,
                );
            }
            let token = filtered
                .fit
                .p_value(INTERCEPT)
                .map(|p| format_pvalue(p, level))
                .unwrap_or_default();
            rep.expect_eq(
                format!("filtered intercept / {b}"),
                cell(ft, "Intercept", b).unwrap_or("<missing>"),
                &token,
            );
        }

        let cleaned = extract_cleaned(&filtered, &panel)?;
        if let Some(text) = read(dir, &format!("cleaned/{}.csv", slug(b)))? {
            let (months, values) = parse_series_csv(&text)?;
            rep.checks += 1;
            if months != cleaned.months || values.len() != cleaned.values.len() {
                rep.mismatches.push(format!("cleaned `{b}`: month grid differs"));
            } else {
                for (i, (s, r)) in values.iter().zip(&cleaned.values).enumerate() {
                    rep.expect_close(format!("cleaned `{b}` row {i}"), *s, *r);
                }
            }
        }
        cleaned_all.push(cleaned);
    }

    let load_signals = |names: &[&str]| -> Result<Option<Vec<EventSignal>>> {
        let mut out = Vec::new();
        for n in names {
            let Some(text) = read(dir, &format!("signals/{}.csv", slug(n)))? else {
                return Ok(None);
            };
            let (months, values) = parse_series_csv(&text)?;
            out.push(EventSignal {
                name: n.to_string(),
                months,
                values,
                ignored_outside_grid: 0,
            });
        }
        Ok(Some(out))
    };
    let mut check_matrix = |stem: String, signals: &[EventSignal], lag: usize, main: bool| -> Result<()> {
        let Some(text) = read(dir, &format!("{stem}.csv"))? else {
            return Ok(());
        };
        let stored = Table::from_csv(&text)?;
        let gc = if main {
            cfg.granger.test()
        } else {
            cfg.granger.test_for_lag(lag)
        };
        let recomputed = causality_table(&run_causality_matrix(signals, &cleaned_all, &gc));
        rep.expect_eq(format!("{stem} header"), &stored.header.join("|"), &recomputed.header.join("|"));
        for (s, r) in stored.rows.iter().zip(&recomputed.rows) {
            for (j, (a, b)) in s.iter().zip(r).enumerate() {
                rep.expect_eq(format!("{stem} {} column {j}", s[0]), a, b);
            }
        }
        if stored.rows.len() != recomputed.rows.len() {
            rep.mismatches.push(format!("{stem}: row count differs"));
        }
        Ok(())
    };
    if let Some(main) = load_signals(&events::CAUSALITY_SETS)? {
        for lag in cfg.granger.lags() {
            check_matrix(format!("causality_lag{lag}"), &main, lag, false)?;
        }
    }
    if let Some(taxo) = load_signals(&events::TAXONOMY_SETS)? {
        let lag = cfg.granger.x_max_lag;
        check_matrix(format!("taxonomy_lag{lag}"), &taxo, lag, true)?;
    }
    Ok(rep)
}
