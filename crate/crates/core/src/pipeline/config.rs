//! TOML pipeline configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cleaning::FilterMode;
use crate::error::{Error, Result};
use crate::granger::GrangerConfig;
use crate::timeseries::{Frequency, Transform, TransformOrder};

/// Rate-quoted series that are differenced by default. Matching ignores case
/// and punctuation; every other series, buckets included, gets log-change.
pub const DIFF_BY_DEFAULT: [&str; 19] = [
    "Federal Funds Rate",
    "5 Year High Quality Market Corporate Bond Par Yield",
    "10 Year High Quality Market Corporate Bond Par Yield",
    "30 Year High Quality Market Corporate Bond Par Yield",
    "5 Year High Quality Market Corporate Bond Spot Rate",
    "10 Year High Quality Market Corporate Bond Spot Rate",
    "30 Year High Quality Market Corporate Bond Spot Rate",
    "5 Year GILTs (Nominal Par Yield)",
    "10 Year GILTs (Nominal Par Yield)",
    "20 Year GILTs (Nominal Par Yield)",
    "5 Year GILTs (Nominal Zero Coupon Yield)",
    "10 Year GILTs (Nominal Zero Coupon Yield)",
    "20 Year GILTs (Nominal Zero Coupon Yield)",
    "Unemployment Rate (US)",
    "Gold Price Against USD",
    // Alternative spellings of the same series.
    "Unemployment Rate",
    "Gold Price Against US Dollar",
    "Federal Funds Effective Rate",
    "Federal Funds Rate (US)",
];

fn normalize(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect::<String>()
        .replace("hqm", "highqualitymarket")
}

/// Default transform for a series label.
pub fn default_transform(label: &str) -> Transform {
    let key = normalize(label);
    if DIFF_BY_DEFAULT.iter().any(|l| normalize(l) == key) {
        Transform::Diff
    } else {
        Transform::LogChange
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub label: String,
    pub path: PathBuf,
    #[serde(default = "default_frequency")]
    pub frequency: Frequency,
    /// Falls back to [`default_transform`] of the label.
    #[serde(default)]
    pub transform: Option<Transform>,
    #[serde(default)]
    pub order: TransformOrder,
    /// Header name of the date column; the first column when absent.
    #[serde(default)]
    pub date_column: Option<String>,
    /// Header name of the value column; the second column when absent.
    #[serde(default)]
    pub value_column: Option<String>,
}

fn default_frequency() -> Frequency {
    Frequency::Monthly
}

impl SeriesSpec {
    pub fn effective_transform(&self) -> Transform {
        self.transform.unwrap_or_else(|| default_transform(&self.label))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignificanceConfig {
    /// t-test level of the regression filter; also the asterisk threshold.
    pub level: f64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig { level: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausalityConfig {
    pub pacf_max_lag: usize,
    pub pacf_critical: f64,
    pub x_max_lag: usize,
    pub t_level: f64,
    pub f_level: f64,
    pub simple_intercept: bool,
    /// Extra maximum lags rerun after the main matrix.
    pub sensitivity_lags: Vec<usize>,
}

impl Default for CausalityConfig {
    fn default() -> Self {
        let t = GrangerConfig::default();
        CausalityConfig {
            pacf_max_lag: t.pacf_max_lag,
            pacf_critical: t.pacf_critical,
            x_max_lag: t.x_max_lag,
            t_level: t.t_level,
            f_level: t.f_level,
            simple_intercept: t.simple_intercept,
            sensitivity_lags: vec![6, 12],
        }
    }
}

impl CausalityConfig {
    pub fn test(&self) -> GrangerConfig {
        GrangerConfig {
            pacf_max_lag: self.pacf_max_lag,
            pacf_critical: self.pacf_critical,
            x_max_lag: self.x_max_lag,
            t_level: self.t_level,
            f_level: self.f_level,
            simple_intercept: self.simple_intercept,
        }
    }

    /// Main lag first, then the sensitivity lags, without repeats.
    pub fn lags(&self) -> Vec<usize> {
        let mut out = vec![self.x_max_lag];
        for &l in &self.sensitivity_lags {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }

    /// Test settings for one entry of [`lags`](Self::lags). The main lag keeps
    /// the configured values; sensitivity reruns set both limits to `lag`.
    pub fn test_for_lag(&self, lag: usize) -> GrangerConfig {
        if lag == self.x_max_lag {
            self.test()
        } else {
            self.test().with_max_lag(lag)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CointegrationConfig {
    pub skip: bool,
    /// Test the monthly levels instead of the transformed increments.
    pub on_levels: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub mode: FilterMode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventsConfig {
    /// Registry CSV; the bundled registry when absent.
    pub registry: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub significance: SignificanceConfig,
    #[serde(default)]
    pub granger: CausalityConfig,
    #[serde(default)]
    pub cointegration: CointegrationConfig,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub events: EventsConfig,
    pub features: Vec<SeriesSpec>,
    pub buckets: Vec<SeriesSpec>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::from_toml_str(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.buckets.is_empty() {
            return Err(Error::Config("at least one feature and one bucket are required".into()));
        }
        let mut labels = BTreeSet::new();
        for s in self.features.iter().chain(&self.buckets) {
            if s.label.trim().is_empty() {
                return Err(Error::Config("series labels must be non-empty".into()));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(Error::Config(format!("duplicate series label `{}`", s.label)));
            }
            let p = self.resolve(&s.path);
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "data file for `{}` not found: {}",
                    s.label,
                    p.display()
                )));
            }
        }
        if let Some(r) = &self.events.registry {
            let p = self.resolve(r);
            if !p.is_file() {
                return Err(Error::Config(format!("registry not found: {}", p.display())));
            }
        }
        let level = self.significance.level;
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!("significance level {level} is outside (0, 1)")));
        }
        self.granger.test().validate()?;
        if self.granger.sensitivity_lags.contains(&0) {
            return Err(Error::Config("sensitivity lags must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_transforms_follow_label_lists() {
        assert_eq!(default_transform("Federal Funds Rate"), Transform::Diff);
        assert_eq!(default_transform("5 Year Gilts (Nominal Par Yield)"), Transform::Diff);
        assert_eq!(default_transform("10 Year HQM Corporate Bond Spot Rate"), Transform::Diff);
        assert_eq!(default_transform("Unemployment Rate"), Transform::Diff);
        assert_eq!(default_transform("M2 (US)"), Transform::LogChange);
        assert_eq!(default_transform("From 0 to 0.001"), Transform::LogChange);
        assert_eq!(default_transform("Bitcoin (Close Price)"), Transform::LogChange);
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let text = r#"
            [[features]]
            label = "M2 (US)"
            path = "m2.csv"
            frequency = "weekly"

            [[buckets]]
            label = "From 1 to 10"
            path = "b.csv"
            transform = "log-change"
            order = "transform-then-downsample"
        "#;
        let cfg = PipelineConfig::from_toml_str(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.granger.test(), GrangerConfig::default());
        assert_eq!(cfg.granger.lags(), vec![10, 6, 12]);
        assert_eq!(cfg.features[0].frequency, Frequency::Weekly);
        assert_eq!(cfg.buckets[0].order, TransformOrder::TransformThenDownsample);
        assert_eq!(cfg.resolve(Path::new("m2.csv")), PathBuf::from("/data/m2.csv"));
        assert_eq!(cfg.hash(), cfg.clone().hash());
    }

    #[test]
    fn rejects_unknown_keys_and_missing_files() {
        let bad = "[granger]\nbogus = 1\n[[features]]\nlabel='a'\npath='a'\n[[buckets]]\nlabel='b'\npath='b'\n";
        assert!(PipelineConfig::from_toml_str(bad, Path::new(".")).is_err());
        let text = "[[features]]\nlabel='a'\npath='nope.csv'\n[[buckets]]\nlabel='b'\npath='nope2.csv'\n";
        let cfg = PipelineConfig::from_toml_str(text, Path::new("/nonexistent")).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
