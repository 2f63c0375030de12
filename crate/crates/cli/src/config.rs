//! Pipeline configuration: a versioned JSON file with fail-fast parsing
//! (unknown keys rejected) and collected validation errors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Raw,
    Cocit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Builtin,
    Imported,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Config schema version; must equal [`CONFIG_VERSION`].
    pub version: u32,

    pub citations: PathBuf,
    pub docs: PathBuf,
    pub keywords: PathBuf,
    /// Directory of externally produced partitions (`w000.tsv`, …),
    /// required when `detector` is `imported`.
    #[serde(default)]
    pub partitions: Option<PathBuf>,

    pub first_year: i32,
    pub last_year: i32,
    #[serde(default = "default_window_length")]
    pub window_length: u32,
    #[serde(default = "default_window_stride")]
    pub window_stride: u32,
    /// Analyze trailing windows shorter than `window_length` too.
    #[serde(default)]
    pub include_clipped: bool,

    #[serde(default = "default_weighting")]
    pub weighting: Weighting,
    #[serde(default = "default_detector")]
    pub detector: Detector,
    #[serde(default = "default_resolution")]
    pub resolution: f64,

    #[serde(default = "default_theta_shift")]
    pub theta_shift: f64,
    #[serde(default = "default_theta_merge")]
    pub theta_merge: f64,
    #[serde(default = "default_theta_topic")]
    pub theta_topic: f64,
    #[serde(default = "default_min_overlap")]
    pub min_overlap: usize,

    /// Optional minimum Jaccard for cross-window matching (0 disables).
    #[serde(default)]
    pub min_jaccard: f64,
    /// Ancestor/descendant annotations below this fraction are dropped
    /// from lineage.tsv and default diagrams.
    #[serde(default = "default_lineage_min_fraction")]
    pub lineage_min_fraction: f64,

    #[serde(default = "default_camps")]
    pub camps: BTreeMap<String, BTreeSet<String>>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,

    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_layout_iterations")]
    pub layout_iterations: u32,

    pub out: PathBuf,
}

fn default_window_length() -> u32 {
    3
}
fn default_window_stride() -> u32 {
    1
}
fn default_weighting() -> Weighting {
    Weighting::Raw
}
fn default_detector() -> Detector {
    Detector::Builtin
}
fn default_resolution() -> f64 {
    1.0
}
fn default_theta_shift() -> f64 {
    0.5
}
fn default_theta_merge() -> f64 {
    0.5
}
fn default_theta_topic() -> f64 {
    0.3
}
fn default_min_overlap() -> usize {
    5
}
fn default_lineage_min_fraction() -> f64 {
    0.1
}
fn default_top_k() -> usize {
    20
}
fn default_seed() -> u64 {
    42
}
fn default_layout_iterations() -> u32 {
    200
}

fn default_camps() -> BTreeMap<String, BTreeSet<String>> {
    commtrace_core::events::CampConfig::default().0
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
        Ok(config)
    }

    /// Collects every validation problem (empty when the config is usable).
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.version != CONFIG_VERSION {
            errors.push(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        for (label, path) in [
            ("citations", &self.citations),
            ("docs", &self.docs),
            ("keywords", &self.keywords),
        ] {
            if !path.is_file() {
                errors.push(format!("{label} file does not exist: {}", path.display()));
            }
        }
        if self.detector == Detector::Imported {
            match &self.partitions {
                None => errors.push("detector 'imported' requires the partitions directory".into()),
                Some(dir) if !dir.is_dir() => {
                    errors.push(format!("partitions directory does not exist: {}", dir.display()))
                }
                _ => {}
            }
        }
        if self.first_year > self.last_year {
            errors.push(format!(
                "first_year {} is after last_year {}",
                self.first_year, self.last_year
            ));
        }
        if self.window_length < 1 || self.window_stride < 1 {
            errors.push("window_length and window_stride must be >= 1".into());
        }
        for (label, v) in [
            ("theta_shift", self.theta_shift),
            ("theta_merge", self.theta_merge),
            ("theta_topic", self.theta_topic),
            ("min_jaccard", self.min_jaccard),
            ("lineage_min_fraction", self.lineage_min_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                errors.push(format!("{label} must lie in [0, 1] (got {v})"));
            }
        }
        if self.min_overlap < 1 {
            errors.push("min_overlap must be >= 1".into());
        }
        if self.top_k < 1 {
            errors.push("top_k must be >= 1".into());
        }
        if self.camps.values().any(BTreeSet::is_empty) {
            errors.push("camp keyword sets must be non-empty".into());
        }
        if self.analysis_windows().map_or(true, |w| w.is_empty()) {
            errors.push("the configured year range selects no analysis windows".into());
        }
        errors
    }

    /// The analyzed windows; trailing windows shorter than
    /// `window_length` are excluded unless `include_clipped` is set.
    pub fn analysis_windows(
        &self,
    ) -> commtrace_core::Result<Vec<commtrace_core::netbuild::TemporalWindow>> {
        let all = commtrace_core::netbuild::build_windows(
            self.first_year,
            self.last_year,
            self.window_length,
            self.window_stride,
        )?;
        Ok(all
            .into_iter()
            .filter(|w| self.include_clipped || w.span() == self.window_length as usize)
            .collect())
    }

    pub fn thresholds(&self) -> commtrace_core::events::Thresholds {
        commtrace_core::events::Thresholds {
            shift: self.theta_shift,
            shift_merge: self.theta_merge,
            topic_change: self.theta_topic,
            min_overlap: self.min_overlap,
        }
    }

    pub fn camp_config(&self) -> commtrace_core::events::CampConfig {
        commtrace_core::events::CampConfig(self.camps.clone())
    }
}
