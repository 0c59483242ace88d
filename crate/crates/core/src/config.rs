//! Declarative pipeline configuration: data sources, timestamp extraction,
//! regex-defined features with weights, and detection policies.
//!
//! One YAML document describes the whole pipeline. Everything is validated
//! and compiled at load time; the result is immutable and can be shared
//! read-only across workers.

use regex::bytes::{Regex, RegexSet};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// A regex-defined event counter with an analyst-assigned severity weight.
#[derive(Debug, Clone)]
pub struct FeatureSpec {
    pub name: String,
    pub pattern: Regex,
    /// Severity weight in [1, 10]; 1 means neutral.
    pub weight: f64,
}

/// One log source: how to pull a timestamp out of a line, the native
/// sampling interval, and the ordered feature list.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub name: String,
    /// Must contain exactly one capture group isolating the timestamp text.
    pub timestamp_pattern: Regex,
    /// strftime-style format applied to the captured text.
    pub timestamp_format: String,
    /// Applied to naive timestamps; lines are shifted to UTC by this offset.
    pub utc_offset_seconds: i32,
    pub interval_seconds: u32,
    pub features: Vec<FeatureSpec>,
    feature_set: RegexSet,
}

impl SourceSpec {
    /// All feature patterns compiled into one multi-pattern set, indexed in
    /// feature declaration order.
    pub fn feature_set(&self) -> &RegexSet {
        &self.feature_set
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPolicy {
    Fixed(usize),
    /// Smallest A whose cumulative captured variance reaches the fraction.
    VarianceFraction(f64),
}

/// How pre-diagnosis contributions are turned into a feature selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureSelection {
    /// Keep features with |contribution| >= fraction * max |contribution|.
    Relative(f64),
    /// Keep the k largest by |contribution|.
    TopK(usize),
}

/// Validated pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub sources: Vec<SourceSpec>,
    pub common_interval_seconds: u32,
    pub ucl_percentile: f64,
    pub component_policy: ComponentPolicy,
    /// Per-source cap on lines retrieved by de-parsing.
    pub deparse_threshold: usize,
    pub feature_selection: FeatureSelection,
    /// SHA-256 of the configuration document, hex-encoded.
    pub digest: String,
}

impl PipelineConfig {
    /// Fused dimensionality M: sum of per-source feature counts.
    pub fn total_features(&self) -> usize {
        self.sources.iter().map(|s| s.features.len()).sum()
    }

    /// Column names of the fused matrix: source order, then declaration order.
    pub fn qualified_feature_names(&self) -> Vec<String> {
        self.sources
            .iter()
            .flat_map(|s| s.features.iter().map(move |f| format!("{}.{}", s.name, f.name)))
            .collect()
    }

    /// Per-feature weights in fused column order.
    pub fn feature_weights(&self) -> Vec<f64> {
        self.sources
            .iter()
            .flat_map(|s| s.features.iter().map(|f| f.weight))
            .collect()
    }

    pub fn source(&self, name: &str) -> Option<&SourceSpec> {
        self.sources.iter().find(|s| s.name == name)
    }
}

pub const DEFAULT_UCL_PERCENTILE: f64 = 0.99;
pub const DEFAULT_VARIANCE_FRACTION: f64 = 0.9;
pub const DEFAULT_DEPARSE_THRESHOLD: usize = 500;
pub const DEFAULT_RELATIVE_SELECTION: f64 = 0.1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    common_interval: u32,
    ucl_percentile: Option<f64>,
    components: Option<RawComponents>,
    deparse_threshold: Option<usize>,
    feature_selection: Option<RawSelection>,
    sources: Vec<RawSource>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponents {
    fixed: Option<usize>,
    variance_fraction: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelection {
    relative: Option<f64>,
    top_k: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    name: String,
    interval: u32,
    timestamp_pattern: String,
    timestamp_format: String,
    utc_offset: Option<String>,
    features: Vec<RawFeature>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    name: String,
    pattern: String,
    weight: Option<f64>,
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct Position<'a> {
    source: Option<(usize, &'a str)>,
    feature: Option<(usize, &'a str)>,
}

impl fmt::Display for Position<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.source, &self.feature) {
            (Some((si, sn)), Some((fi, fn_))) => {
                write!(f, "source #{} '{}' feature #{} '{}'", si + 1, sn, fi + 1, fn_)
            }
            (Some((si, sn)), None) => write!(f, "source #{} '{}'", si + 1, sn),
            _ => write!(f, "pipeline"),
        }
    }
}

fn at_source<'a>(i: usize, name: &'a str) -> Position<'a> {
    Position {
        source: Some((i, name)),
        feature: None,
    }
}

fn at_feature<'a>(si: usize, sn: &'a str, fi: usize, fname: &'a str) -> Position<'a> {
    Position {
        source: Some((si, sn)),
        feature: Some((fi, fname)),
    }
}

fn parse_utc_offset(s: &str) -> Result<i32> {
    let bad = || Error::Config(format!("invalid utc_offset '{}', expected +HH:MM or -HH:MM", s));
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1i32, &s[1..]),
        Some(b'-') => (-1i32, &s[1..]),
        _ => return Err(bad()),
    };
    let (h, m) = rest.split_once(':').ok_or_else(bad)?;
    let h: i32 = h.parse().map_err(|_| bad())?;
    let m: i32 = m.parse().map_err(|_| bad())?;
    if h > 14 || m > 59 {
        return Err(bad());
    }
    Ok(sign * (h * 3600 + m * 60))
}

/// Scan a strftime format for specifiers chrono cannot handle, so bad
/// formats fail at load time instead of marking every line unparseable.
fn validate_timestamp_format(fmt: &str) -> bool {
    use chrono::format::{Item, StrftimeItems};
    !StrftimeItems::new(fmt).any(|item| matches!(item, Item::Error))
}

/// Parse and validate a configuration document.
pub fn load_config(document: &str) -> Result<PipelineConfig> {
    let raw: RawConfig = serde_yaml::from_str(document)
        .map_err(|e| Error::Config(format!("malformed document: {}", e)))?;

    if raw.common_interval == 0 {
        return Err(Error::Config("common_interval must be >= 1".into()));
    }
    let ucl_percentile = raw.ucl_percentile.unwrap_or(DEFAULT_UCL_PERCENTILE);
    if !(ucl_percentile > 0.0 && ucl_percentile < 1.0) {
        return Err(Error::Config(format!(
            "ucl_percentile must be in (0,1), got {}",
            ucl_percentile
        )));
    }

    let component_policy = match raw.components {
        None => ComponentPolicy::VarianceFraction(DEFAULT_VARIANCE_FRACTION),
        Some(c) => match (c.fixed, c.variance_fraction) {
            (Some(a), None) => {
                if a == 0 {
                    return Err(Error::Config("components.fixed must be >= 1".into()));
                }
                ComponentPolicy::Fixed(a)
            }
            (None, Some(f)) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Config(format!(
                        "components.variance_fraction must be in (0,1], got {}",
                        f
                    )));
                }
                ComponentPolicy::VarianceFraction(f)
            }
            _ => {
                return Err(Error::Config(
                    "components: set exactly one of {fixed, variance_fraction}".into(),
                ))
            }
        },
    };

    let feature_selection = match raw.feature_selection {
        None => FeatureSelection::Relative(DEFAULT_RELATIVE_SELECTION),
        Some(s) => match (s.relative, s.top_k) {
            (Some(r), None) => {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::Config(format!(
                        "feature_selection.relative must be in (0,1], got {}",
                        r
                    )));
                }
                FeatureSelection::Relative(r)
            }
            (None, Some(k)) => {
                if k == 0 {
                    return Err(Error::Config("feature_selection.top_k must be >= 1".into()));
                }
                FeatureSelection::TopK(k)
            }
            _ => {
                return Err(Error::Config(
                    "feature_selection: set exactly one of {relative, top_k}".into(),
                ))
            }
        },
    };

    let deparse_threshold = raw.deparse_threshold.unwrap_or(DEFAULT_DEPARSE_THRESHOLD);
    if deparse_threshold == 0 {
        return Err(Error::Config("deparse_threshold must be >= 1".into()));
    }

    if raw.sources.is_empty() {
        return Err(Error::Config("at least one source is required".into()));
    }

    let mut sources = Vec::with_capacity(raw.sources.len());
    for (si, rs) in raw.sources.iter().enumerate() {
        let pos = at_source(si, &rs.name);
        if !valid_identifier(&rs.name) {
            return Err(Error::Config(format!(
                "{}: name must be a non-empty identifier ([A-Za-z0-9_-])",
                pos
            )));
        }
        if sources.iter().any(|s: &SourceSpec| s.name == rs.name) {
            return Err(Error::Config(format!("{}: duplicate source name", pos)));
        }
        if rs.interval == 0 {
            return Err(Error::Config(format!("{}: interval must be >= 1", pos)));
        }
        if !raw.common_interval.is_multiple_of(rs.interval) {
            return Err(Error::Config(format!(
                "{}: common interval {} is not an integer multiple of source interval {}",
                pos, raw.common_interval, rs.interval
            )));
        }
        let timestamp_pattern = Regex::new(&rs.timestamp_pattern).map_err(|e| {
            Error::Config(format!("{}: invalid timestamp_pattern: {}", pos, e))
        })?;
        if timestamp_pattern.captures_len() != 2 {
            return Err(Error::Config(format!(
                "{}: timestamp_pattern must have exactly one capture group, found {}",
                pos,
                timestamp_pattern.captures_len() - 1
            )));
        }
        if !validate_timestamp_format(&rs.timestamp_format) {
            return Err(Error::Config(format!(
                "{}: invalid timestamp_format '{}'",
                pos, rs.timestamp_format
            )));
        }
        let utc_offset_seconds = match &rs.utc_offset {
            Some(o) => parse_utc_offset(o)
                .map_err(|e| Error::Config(format!("{}: {}", pos, e)))?,
            None => 0,
        };
        if rs.features.is_empty() {
            return Err(Error::Config(format!("{}: features must be non-empty", pos)));
        }

        let mut features = Vec::with_capacity(rs.features.len());
        for (fi, rf) in rs.features.iter().enumerate() {
            let fpos = at_feature(si, &rs.name, fi, &rf.name);
            if !valid_identifier(&rf.name) {
                return Err(Error::Config(format!(
                    "{}: name must be a non-empty identifier ([A-Za-z0-9_-])",
                    fpos
                )));
            }
            if features.iter().any(|f: &FeatureSpec| f.name == rf.name) {
                return Err(Error::Config(format!("{}: duplicate feature name", fpos)));
            }
            let pattern = Regex::new(&rf.pattern)
                .map_err(|e| Error::Config(format!("{}: invalid regex: {}", fpos, e)))?;
            let weight = rf.weight.unwrap_or(1.0);
            if !(1.0..=10.0).contains(&weight) {
                return Err(Error::Config(format!(
                    "{}: weight must be in [1,10], got {}",
                    fpos, weight
                )));
            }
            features.push(FeatureSpec {
                name: rf.name.clone(),
                pattern,
                weight,
            });
        }

        let feature_set = RegexSet::new(rs.features.iter().map(|f| f.pattern.as_str()))
            .map_err(|e| Error::Config(format!("{}: feature set: {}", pos, e)))?;

        sources.push(SourceSpec {
            name: rs.name.clone(),
            timestamp_pattern,
            timestamp_format: rs.timestamp_format.clone(),
            utc_offset_seconds,
            interval_seconds: rs.interval,
            features,
            feature_set,
        });
    }

    Ok(PipelineConfig {
        sources,
        common_interval_seconds: raw.common_interval,
        ucl_percentile,
        component_policy,
        deparse_threshold,
        feature_selection,
        digest: sha256_hex(document.as_bytes()),
    })
}

/// Load a configuration file from disk.
pub fn load_config_file(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    load_config(&text)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{:02x}", b));
    }
    out
}
