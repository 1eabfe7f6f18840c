//! End-to-end batch pipeline: ingest, transform, cointegration screen,
//! regression cleaning, event signals, causality matrices and reports.
//!
//! Every stage writes its artifacts as soon as it finishes, so a failed run
//! leaves the outputs of the stages before it on disk.

pub mod audit;
pub mod config;
pub mod fixture;
pub mod ingest;
pub mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cleaning::{extract_cleaned, fit_global_model, iterative_filter_with, CleanedSeries, FilteredModel};
use crate::cointegration::{screen_all_pairs, CointegrationMatrix};
use crate::error::{Error, Result};
use crate::events::{self, build_signal, builtin_sets, EventSignal, Registry};
use crate::granger::{run_causality_matrix, CausalityMatrix};
use crate::stats::{vif, Design, RegressionFit, INTERCEPT};
use crate::timeseries::{build_panel, downsample_monthly, monthly_increments, Column, Panel, TimeSeries};

pub use config::PipelineConfig;
use report::{canonical_order, slug, Table};

pub const TOOL_NAME: &str = "tokenpolicy";
pub const DATE_FMT: &str = "%Y-%m-%d";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Transform,
    Cointegration,
    Regression,
    Filtering,
    Cleaning,
    Signals,
    Causality,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Transform => "transform",
            Stage::Cointegration => "cointegration",
            Stage::Regression => "regression",
            Stage::Filtering => "filtering",
            Stage::Cleaning => "cleaning",
            Stage::Signals => "signals",
            Stage::Causality => "causality",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait StageExt<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> StageExt<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Which optional stages to run. Ingest and transform always run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub cointegration: bool,
    pub cleaning: bool,
    pub causality: bool,
    pub report: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        cointegration: true,
        cleaning: true,
        causality: true,
        report: true,
    };
    pub const TRANSFORM: Stages = Stages {
        cointegration: false,
        cleaning: false,
        causality: false,
        report: false,
    };
    pub const COINTEGRATION: Stages = Stages {
        cointegration: true,
        ..Stages::TRANSFORM
    };
    pub const CLEANING: Stages = Stages {
        cleaning: true,
        ..Stages::TRANSFORM
    };
    pub const CAUSALITY: Stages = Stages {
        cleaning: true,
        causality: true,
        ..Stages::TRANSFORM
    };
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketModel {
    pub bucket: String,
    pub global: RegressionFit,
    /// Per feature, in panel order.
    pub vif: Vec<f64>,
    pub filtered: FilteredModel,
    pub cleaned: CleanedSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub label: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub inputs: Vec<InputDigest>,
    pub registry: InputDigest,
    pub outputs: Vec<String>,
    /// The only field that differs between otherwise identical runs.
    pub generated_at: String,
}

/// Everything a run produced, in memory.
#[derive(Debug)]
pub struct PipelineReport {
    pub output_dir: PathBuf,
    pub features: Vec<String>,
    /// Canonical order.
    pub buckets: Vec<String>,
    pub transformed_features: Vec<TimeSeries>,
    pub transformed_buckets: Vec<TimeSeries>,
    /// One per bucket, canonical order.
    pub panels: Vec<Panel>,
    pub cointegration: Option<CointegrationMatrix>,
    pub models: Vec<BucketModel>,
    pub signals: Vec<EventSignal>,
    /// Main lag first, then sensitivity lags.
    pub causality: Vec<CausalityMatrix>,
    pub taxonomy: Option<CausalityMatrix>,
    pub metadata: RunMetadata,
}

impl PipelineReport {
    pub fn model(&self, bucket: &str) -> Option<&BucketModel> {
        self.models.iter().find(|m| m.bucket == bucket)
    }

    pub fn causality_for_lag(&self, lag: usize) -> Option<&CausalityMatrix> {
        self.causality.iter().find(|m| m.config.x_max_lag == lag)
    }
}

struct Outputs {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl Outputs {
    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.insert(rel.to_string());
        Ok(())
    }

    fn table(&mut self, stem: &str, t: &Table) -> Result<()> {
        self.write(&format!("{stem}.csv"), &t.to_csv())?;
        self.write(&format!("{stem}.txt"), &render_table_text(stem, t))
    }
}

/// Title of a stored table, derived from its file stem.
pub fn title_for(stem: &str) -> String {
    if let Some(l) = stem.strip_prefix("causality_lag") {
        return format!("BIP causality analysis, maximum lag {l} months");
    }
    if let Some(l) = stem.strip_prefix("taxonomy_lag") {
        return format!("Taxonomised BIP causality analysis, maximum lag {l} months");
    }
    match stem {
        "global_pvalues" => "Global linear regression p-values".into(),
        "filtered_pvalues" => "Filtered linear regression p-values".into(),
        "vif" => "Variance inflation factors of the global models".into(),
        "cointegration_matrix" => "Engle-Granger cointegration at 5%".into(),
        other => other.replace('_', " "),
    }
}

fn render_table_text(stem: &str, t: &Table) -> String {
    let mut s = t.to_text(&title_for(stem));
    if stem.starts_with("causality_lag") || stem.starts_with("taxonomy_lag") {
        s.push('\n');
        s.push_str(&report::causality_legend());
    }
    if stem.ends_with("pvalues") {
        s.push_str("\n* marks p-values below the significance level\n");
    }
    s
}

fn series_csv(months: &[NaiveDate], values: &[f64]) -> String {
    let mut s = String::from("month,value\n");
    for (m, v) in months.iter().zip(values) {
        s.push_str(&format!("{},{v}\n", m.format(DATE_FMT)));
    }
    s
}

/// Panel as CSV: `month`, the dependent column, then every feature.
pub fn panel_csv(p: &Panel) -> String {
    let mut t = Table::new(
        std::iter::once("month".to_string())
            .chain(p.columns().iter().map(|c| c.name.clone()))
            .collect(),
    );
    for (i, m) in p.months().iter().enumerate() {
        let mut row = vec![m.format(DATE_FMT).to_string()];
        row.extend(p.columns().iter().map(|c| c.values[i].to_string()));
        t.rows.push(row);
    }
    t.to_csv()
}

pub fn parse_panel_csv(text: &str) -> Result<Panel> {
    let t = Table::from_csv(text)?;
    if t.header.len() < 2 {
        return Err(Error::Config("panel csv needs a month and a dependent column".into()));
    }
    let mut months = Vec::with_capacity(t.rows.len());
    let mut cols: Vec<Column> = t.header[1..]
        .iter()
        .map(|n| Column {
            name: n.clone(),
            values: Vec::with_capacity(t.rows.len()),
        })
        .collect();
    for (i, r) in t.rows.iter().enumerate() {
        let bad = |what: &str| Error::Config(format!("panel csv row {}: bad {what}", i + 2));
        months.push(NaiveDate::parse_from_str(&r[0], DATE_FMT).map_err(|_| bad("month"))?);
        for (c, cell) in cols.iter_mut().zip(&r[1..]) {
            c.values.push(cell.parse().map_err(|_| bad("value"))?);
        }
    }
    Panel::from_columns(months, cols)
}

/// Parses a `month,value` CSV.
pub fn parse_series_csv(text: &str) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let t = Table::from_csv(text)?;
    let mut months = Vec::new();
    let mut values = Vec::new();
    for (i, r) in t.rows.iter().enumerate() {
        let bad = || Error::Config(format!("series csv row {}: malformed", i + 2));
        months.push(NaiveDate::parse_from_str(r.first().ok_or_else(bad)?, DATE_FMT).map_err(|_| bad())?);
        values.push(r.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?);
    }
    Ok((months, values))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn generated_at() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    fixed
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn fmt_vif(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.3}")
    }
}

fn load_registry(cfg: &PipelineConfig) -> Result<(Registry, InputDigest)> {
    match &cfg.events.registry {
        Some(p) => {
            let path = cfg.resolve(p);
            let reg = events::load_registry(&path)?;
            let digest = InputDigest {
                label: "registry".into(),
                path: p.display().to_string(),
                sha256: sha256_file(&path)?,
            };
            Ok((reg, digest))
        }
        None => Ok((
            events::bundled_registry(),
            InputDigest {
                label: "registry".into(),
                path: "bundled".into(),
                sha256: events::bundled_registry_sha256(),
            },
        )),
    }
}

pub fn run(cfg: &PipelineConfig) -> std::result::Result<PipelineReport, PipelineError> {
    run_stages(cfg, Stages::ALL)
}

pub fn run_stages(cfg: &PipelineConfig, stages: Stages) -> std::result::Result<PipelineReport, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let output_dir = cfg.output_dir();
    std::fs::create_dir_all(&output_dir)
        .map_err(|e| Error::io(&output_dir, e))
        .at(Stage::Config)?;
    let mut out = Outputs {
        root: output_dir.clone(),
        files: BTreeSet::new(),
    };
    let config_hash = cfg.hash();

    info!("ingesting {} features and {} buckets", cfg.features.len(), cfg.buckets.len());
    let raw = ingest::ingest(cfg).at(Stage::Ingest)?;
    let mut inputs = Vec::new();
    for s in cfg.features.iter().chain(&cfg.buckets) {
        inputs.push(InputDigest {
            label: s.label.clone(),
            path: s.path.display().to_string(),
            sha256: sha256_file(&cfg.resolve(&s.path)).at(Stage::Ingest)?,
        });
    }

    info!("transforming");
    let transform = |specs: &[config::SeriesSpec], series: &[TimeSeries]| -> Result<Vec<TimeSeries>> {
        specs
            .iter()
            .zip(series)
            .map(|(s, ts)| monthly_increments(ts, s.effective_transform(), s.order))
            .collect()
    };
    let tf = transform(&cfg.features, &raw.features).at(Stage::Transform)?;
    let tb_config_order = transform(&cfg.buckets, &raw.buckets).at(Stage::Transform)?;
    let order = canonical_order(&tb_config_order.iter().map(|t| t.label().to_string()).collect::<Vec<_>>());
    let tb: Vec<TimeSeries> = order.iter().map(|&i| tb_config_order[i].clone()).collect();
    let raw_buckets: Vec<&TimeSeries> = order.iter().map(|&i| &raw.buckets[i]).collect();
    for ts in tf.iter().chain(&tb) {
        out.write(
            &format!("transformed/{}.csv", slug(ts.label())),
            &series_csv(&ts.dates(), &ts.values()),
        )
        .at(Stage::Transform)?;
    }
    let panels: Vec<Panel> = tb
        .iter()
        .map(|b| build_panel(b, &tf))
        .collect::<Result<_>>()
        .at(Stage::Transform)?;
    for p in &panels {
        out.write(&format!("panels/{}.csv", slug(p.dependent())), &panel_csv(p))
            .at(Stage::Transform)?;
    }
    let features: Vec<String> = tf.iter().map(|t| t.label().to_string()).collect();
    let buckets: Vec<String> = tb.iter().map(|t| t.label().to_string()).collect();

    let cointegration = if stages.cointegration && !cfg.cointegration.skip {
        info!("cointegration screen");
        let m = if cfg.cointegration.on_levels {
            let lf: Vec<TimeSeries> = raw.features.iter().map(downsample_monthly).collect();
            let lb: Vec<TimeSeries> = raw_buckets.iter().map(|t| downsample_monthly(t)).collect();
            screen_all_pairs(&lf, &lb)
        } else {
            screen_all_pairs(&tf, &tb)
        };
        out.table("cointegration_matrix", &report::cointegration_grid(&m))
            .at(Stage::Cointegration)?;
        out.write("cointegration.csv", &report::cointegration_table(&m).to_csv())
            .at(Stage::Cointegration)?;
        Some(m)
    } else {
        None
    };

    let models = if stages.cleaning {
        info!("fitting global models");
        let level = cfg.significance.level;
        let mode = cfg.cleaning.mode;
        let models: Vec<BucketModel> = panels
            .par_iter()
            .map(|p| {
                let global = fit_global_model(p).at(Stage::Regression)?;
                let design = Design::from_columns(
                    p.features().iter().map(|c| (c.name.clone(), c.values.clone())).collect(),
                )
                .at(Stage::Regression)?;
                let vifs = if design.cols() >= 2 {
                    vif(&design).at(Stage::Regression)?
                } else {
                    vec![1.0; design.cols()]
                };
                let filtered = iterative_filter_with(p, level, mode).at(Stage::Filtering)?;
                let cleaned = extract_cleaned(&filtered, p).at(Stage::Cleaning)?;
                Ok(BucketModel {
                    bucket: p.dependent().to_string(),
                    global,
                    vif: vifs,
                    filtered,
                    cleaned,
                })
            })
            .collect::<std::result::Result<_, PipelineError>>()?;
        write_cleaning_outputs(&mut out, &features, &buckets, &models, level).at(Stage::Cleaning)?;
        models
    } else {
        Vec::new()
    };

    let (registry, registry_digest) = load_registry(cfg).at(Stage::Signals)?;
    let mut signals = Vec::new();
    let mut causality = Vec::new();
    let mut taxonomy = None;
    if stages.causality && !models.is_empty() {
        info!("building event signals");
        let sets = builtin_sets(&registry).at(Stage::Signals)?;
        let grid: Vec<NaiveDate> = models
            .iter()
            .flat_map(|m| m.cleaned.months.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        signals = sets.iter().map(|s| build_signal(s, &registry, &grid)).collect();
        write_signal_outputs(&mut out, &signals, &registry, &models, &grid).at(Stage::Signals)?;

        let pick = |names: &[&str]| -> Vec<EventSignal> {
            names
                .iter()
                .filter_map(|n| signals.iter().find(|s| s.name == *n).cloned())
                .collect()
        };
        let main = pick(&events::CAUSALITY_SETS);
        let taxo = pick(&events::TAXONOMY_SETS);
        let cleaned: Vec<CleanedSeries> = models.iter().map(|m| m.cleaned.clone()).collect();
        for lag in cfg.granger.lags() {
            info!("causality matrix, maximum lag {lag}");
            let gc = cfg.granger.test_for_lag(lag);
            gc.validate().at(Stage::Causality)?;
            let m = run_causality_matrix(&main, &cleaned, &gc);
            let stem = format!("causality_lag{lag}");
            out.table(&stem, &report::causality_table(&m)).at(Stage::Causality)?;
            out.write(&format!("{stem}_detail.csv"), &report::causality_detail_table(&m).to_csv())
                .at(Stage::Causality)?;
            causality.push(m);
        }
        let main_lag = cfg.granger.x_max_lag;
        let m = run_causality_matrix(&taxo, &cleaned, &cfg.granger.test());
        let stem = format!("taxonomy_lag{main_lag}");
        out.table(&stem, &report::causality_table(&m)).at(Stage::Causality)?;
        out.write(&format!("{stem}_detail.csv"), &report::causality_detail_table(&m).to_csv())
            .at(Stage::Causality)?;
        taxonomy = Some(m);
    }

    let mut metadata = RunMetadata {
        tool: TOOL_NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash,
        config: cfg.clone(),
        inputs,
        registry: registry_digest,
        outputs: Vec::new(),
        generated_at: generated_at(),
    };
    if stages.report {
        let text = render_report(&output_dir, &metadata).at(Stage::Report)?;
        out.write("report.txt", &text).at(Stage::Report)?;
    }
    metadata.outputs = out.files.iter().cloned().collect();
    metadata.outputs.push("metadata.json".into());
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    out.write("metadata.json", &(json + "\n")).at(Stage::Report)?;

    Ok(PipelineReport {
        output_dir,
        features,
        buckets,
        transformed_features: tf,
        transformed_buckets: tb,
        panels,
        cointegration,
        models,
        signals,
        causality,
        taxonomy,
        metadata,
    })
}

fn write_cleaning_outputs(
    out: &mut Outputs,
    features: &[String],
    buckets: &[String],
    models: &[BucketModel],
    level: f64,
) -> Result<()> {
    let model = |b: &str| models.iter().find(|m| m.bucket == b);
    let global = report::pvalue_table(features, buckets, level, |f, b| {
        model(b).and_then(|m| m.global.p_value(f))
    });
    out.table("global_pvalues", &global)?;

    let mut filtered = report::pvalue_table(features, buckets, level, |f, b| {
        model(b).and_then(|m| m.filtered.fit.p_value(f))
    });
    let mut intercept_row = vec!["Intercept".to_string()];
    for b in buckets {
        intercept_row.push(
            model(b)
                .and_then(|m| m.filtered.fit.p_value(INTERCEPT))
                .map(|p| report::format_pvalue(p, level))
                .unwrap_or_default(),
        );
    }
    filtered.rows.push(intercept_row);
    out.table("filtered_pvalues", &filtered)?;

    let mut vt = Table::new(std::iter::once(String::new()).chain(buckets.iter().cloned()).collect());
    for (i, f) in features.iter().enumerate() {
        let mut row = vec![f.clone()];
        for b in buckets {
            row.push(model(b).and_then(|m| m.vif.get(i)).map(|v| fmt_vif(*v)).unwrap_or_default());
        }
        vt.rows.push(row);
    }
    out.table("vif", &vt)?;

    let fit_rows = |which: &str, pick: &dyn Fn(&BucketModel) -> &RegressionFit| -> Table {
        let header = ["bucket", "model", "term", "coefficient", "std_error", "t_statistic", "p_value", "n_obs", "rss"];
        let mut t = Table::new(header.iter().map(|s| s.to_string()).collect());
        for m in models {
            let fit = pick(m);
            for (j, name) in fit.names.iter().enumerate() {
                t.rows.push(vec![
                    m.bucket.clone(),
                    which.to_string(),
                    name.clone(),
                    fit.coefficients[j].to_string(),
                    fit.standard_errors[j].to_string(),
                    fit.t_statistics[j].to_string(),
                    fit.p_values[j].to_string(),
                    fit.n_observations.to_string(),
                    fit.rss.to_string(),
                ]);
            }
        }
        t
    };
    out.write("global_fits.csv", &fit_rows("global", &|m| &m.global).to_csv())?;
    out.write("filtered_fits.csv", &fit_rows("filtered", &|m| &m.filtered.fit).to_csv())?;
    out.write("models.txt", &models_text(models, level))?;
    for m in models {
        out.write(
            &format!("cleaned/{}.csv", slug(&m.bucket)),
            &series_csv(&m.cleaned.months, &m.cleaned.values),
        )?;
    }
    Ok(())
}

/// Human-readable summary of every filtered model.
pub fn models_text(models: &[BucketModel], level: f64) -> String {
    let mut s = String::from("Filtered models\n===============\n");
    s.push_str(&format!("Regressors are removed while their p-value is at least {level}.\n"));
    for m in models {
        let f = &m.filtered;
        s.push_str(&format!("\n{}\n", m.bucket));
        s.push_str(&format!("  observations: {}\n", f.fit.n_observations));
        s.push_str(&format!("  iterations: {}\n", f.iterations));
        if f.is_empty() {
            s.push_str("  no significant regressors; cleaned series equals the transformed bucket\n");
        } else {
            let mut terms = Vec::new();
            if let Some(c) = f.fit.intercept() {
                terms.push(format!("{c:.5}"));
            }
            for name in &f.surviving_features {
                let b = f.fit.coefficient(name).unwrap_or(f64::NAN);
                terms.push(format!("{b:.5} X[{name}]"));
            }
            s.push_str(&format!("  Y[{}] = {} + e\n", m.bucket, terms.join(" + ")));
            for (j, name) in f.fit.names.iter().enumerate() {
                s.push_str(&format!(
                    "    {name}: coefficient {:.5}, p-value {:.6}\n",
                    f.fit.coefficients[j], f.fit.p_values[j]
                ));
            }
        }
        for (i, step) in f.elimination_log.iter().enumerate() {
            let removed: Vec<String> = step.iter().map(|(n, p)| format!("{n} ({p:.5})")).collect();
            s.push_str(&format!("  removed in iteration {}: {}\n", i + 1, removed.join(", ")));
        }
    }
    s
}

fn write_signal_outputs(
    out: &mut Outputs,
    signals: &[EventSignal],
    registry: &Registry,
    models: &[BucketModel],
    grid: &[NaiveDate],
) -> Result<()> {
    let mut summary = Table::new(
        ["set", "file", "members", "months_with_events", "ignored_outside_grid"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for s in signals {
        let file = format!("signals/{}.csv", slug(&s.name));
        let mut text = String::from("month,value\n");
        for (m, v) in s.months.iter().zip(&s.values) {
            text.push_str(&format!("{},{}\n", m.format(DATE_FMT), *v as u8));
        }
        out.write(&file, &text)?;
        let members = s.ones() + s.ignored_outside_grid;
        summary.rows.push(vec![
            s.name.clone(),
            file,
            members.to_string(),
            s.ones().to_string(),
            s.ignored_outside_grid.to_string(),
        ]);
    }
    out.write("signals/summary.csv", &summary.to_csv())?;

    // Plot-ready cleaned buckets on the common grid.
    let mut plot = Table::new(
        std::iter::once("month".to_string())
            .chain(models.iter().map(|m| m.bucket.clone()))
            .collect(),
    );
    for g in grid {
        let mut row = vec![g.format(DATE_FMT).to_string()];
        for m in models {
            row.push(
                m.cleaned
                    .months
                    .binary_search(g)
                    .map(|i| m.cleaned.values[i].to_string())
                    .unwrap_or_default(),
            );
        }
        plot.rows.push(row);
    }
    out.write("plot/cleaned_buckets.csv", &plot.to_csv())?;

    let mut bips = Table::new(["bip", "date", "month"].iter().map(|s| s.to_string()).collect());
    if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
        for r in registry.iter() {
            let m = crate::timeseries::month_key(r.date);
            if m >= *first && m <= *last {
                bips.rows.push(vec![
                    r.number.to_string(),
                    r.date.format(DATE_FMT).to_string(),
                    m.format(DATE_FMT).to_string(),
                ]);
            }
        }
    }
    out.write("plot/bip_events.csv", &bips.to_csv())?;
    Ok(())
}

/// Stems of the stored tables that make up `report.txt`, in order.
fn report_stems(meta: &RunMetadata) -> Vec<String> {
    let mut stems: Vec<String> = ["cointegration_matrix", "global_pvalues", "filtered_pvalues", "vif"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for lag in meta.config.granger.lags() {
        stems.push(format!("causality_lag{lag}"));
    }
    stems.push(format!("taxonomy_lag{}", meta.config.granger.x_max_lag));
    stems
}

/// Assembles `report.txt` from the tables stored in `dir`.
pub fn render_report(dir: &Path, meta: &RunMetadata) -> Result<String> {
    let mut s = String::new();
    s.push_str(&format!("{} {} report\n", meta.tool, meta.version));
    s.push_str(&format!("config sha256: {}\n", meta.config_hash));
    s.push_str(&format!(
        "series: {} features, {} buckets\n",
        meta.config.features.len(),
        meta.config.buckets.len()
    ));
    for stem in report_stems(meta) {
        let path = dir.join(format!("{stem}.csv"));
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        s.push('\n');
        s.push_str(&render_table_text(&stem, &Table::from_csv(&text)?));
        if stem == "vif" {
            let models = dir.join("models.txt");
            if models.is_file() {
                s.push('\n');
                s.push_str(&std::fs::read_to_string(&models).map_err(|e| Error::io(&models, e))?);
            }
        }
    }
    Ok(s)
}

pub fn read_metadata(dir: &Path) -> Result<RunMetadata> {
    let path = dir.join("metadata.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Re-renders every text table and `report.txt` from the stored CSVs.
/// Returns the files rewritten.
pub fn rerender(dir: &Path) -> Result<Vec<PathBuf>> {
    let meta = read_metadata(dir)?;
    let mut written = Vec::new();
    for stem in report_stems(&meta) {
        let csv_path = dir.join(format!("{stem}.csv"));
        if !csv_path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let txt = dir.join(format!("{stem}.txt"));
        std::fs::write(&txt, render_table_text(&stem, &Table::from_csv(&text)?))
            .map_err(|e| Error::io(&txt, e))?;
        written.push(txt);
    }
    let report = dir.join("report.txt");
    std::fs::write(&report, render_report(dir, &meta)?).map_err(|e| Error::io(&report, e))?;
    written.push(report);
    Ok(written)
}
