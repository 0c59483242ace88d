//! Steps 4 and 5: Univariate-Squared pre-diagnosis of an anomaly window,
//! feature selection, and de-parsing — recovering the raw log lines behind
//! the anomaly, ranked by how many diagnosed features they match.

use chrono::{DateTime, Utc};
use regex::bytes::RegexSet;
use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::PathBuf;

use crate::config::{PipelineConfig, SourceSpec};
use crate::error::{Error, Result};
use crate::fusion::FusedMatrix;
use crate::parser::LogLine;
use crate::pca::{apply_preprocess, PreprocessParams};

/// Half-open anomaly window `[start, end)`.
pub type Window = (DateTime<Utc>, DateTime<Utc>);

/// Per-feature signed-square contributions of one anomaly window.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionVector {
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub feature_names: Vec<String>,
    /// values[m] = x'[m] * |x'[m]| of the window-mean preprocessed row.
    pub values: Vec<f64>,
    /// The scalar x'^T |x'|: the sum of the vector above.
    pub scalar: f64,
}

/// Features deemed relevant for an anomaly, descending by |contribution|.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeatures {
    pub features: Vec<SelectedFeature>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeature {
    /// Qualified `source.feature` name.
    pub name: String,
    pub contribution: f64,
}

impl SelectedFeatures {
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Negative contributions mark absence-of-events features; regex
    /// matching can only confirm presence, so these deserve a note.
    pub fn negative(&self) -> Vec<&SelectedFeature> {
        self.features.iter().filter(|f| f.contribution < 0.0).collect()
    }
}

/// Element-wise signed square: x * |x|.
pub fn us_signed_square(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v * v.abs()).collect()
}

/// Univariate-Squared contributions for a half-open anomaly window. For a
/// multi-interval window the preprocessed rows are averaged element-wise
/// before squaring, preserving sign semantics.
pub fn us_contributions(
    fused: &FusedMatrix,
    window: Window,
    params: &PreprocessParams,
) -> Result<ContributionVector> {
    if fused.n_features() != params.n_features() {
        return Err(Error::Data(format!(
            "fused matrix has {} features, preprocessing expects {}",
            fused.n_features(),
            params.n_features()
        )));
    }
    let rows = fused.rows_in_window(window.0, window.1);
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "anomaly window {} .. {} contains no observations",
            window.0.to_rfc3339(),
            window.1.to_rfc3339()
        )));
    }
    let m = fused.n_features();
    let mut mean = vec![0.0; m];
    for &i in &rows {
        let pre = apply_preprocess(&fused.row_f64(i), params)?;
        for (a, v) in mean.iter_mut().zip(pre.iter()) {
            *a += v;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for a in mean.iter_mut() {
        *a *= inv;
    }
    let values = us_signed_square(&mean);
    let scalar = values.iter().sum();
    Ok(ContributionVector {
        window_start: window.0,
        window_end: window.1,
        feature_names: fused.feature_names.clone(),
        values,
        scalar,
    })
}

/// Keep the large-magnitude contributions, by relative threshold or top-k.
/// Returns an empty selection when every contribution is zero.
pub fn select_features(
    contributions: &ContributionVector,
    policy: &crate::config::FeatureSelection,
) -> SelectedFeatures {
    let mut order: Vec<usize> = (0..contributions.values.len()).collect();
    order.sort_by(|&a, &b| {
        contributions.values[b]
            .abs()
            .total_cmp(&contributions.values[a].abs())
            .then_with(|| a.cmp(&b))
    });
    let max_abs = order
        .first()
        .map(|&i| contributions.values[i].abs())
        .unwrap_or(0.0);
    if max_abs == 0.0 {
        return SelectedFeatures { features: Vec::new() };
    }
    let keep: Vec<usize> = match policy {
        crate::config::FeatureSelection::Relative(r) => {
            let cut = r * max_abs;
            order
                .into_iter()
                .take_while(|&i| contributions.values[i].abs() >= cut)
                .collect()
        }
        crate::config::FeatureSelection::TopK(k) => order.into_iter().take(*k).collect(),
    };
    SelectedFeatures {
        features: keep
            .into_iter()
            .map(|i| SelectedFeature {
                name: contributions.feature_names[i].clone(),
                contribution: contributions.values[i],
            })
            .collect(),
    }
}

/// The diagnosed features of one source, compiled for line matching.
#[derive(Debug)]
pub struct SourceFeatureSet {
    /// Unqualified feature names, in selection order.
    pub names: Vec<String>,
    set: RegexSet,
}

impl SourceFeatureSet {
    /// Resolve the per-source subset of a selection against the source's
    /// feature specs. Unknown features are a configuration error.
    pub fn resolve(spec: &SourceSpec, selected: &SelectedFeatures) -> Result<SourceFeatureSet> {
        let prefix = format!("{}.", spec.name);
        let mut names = Vec::new();
        let mut patterns = Vec::new();
        for f in &selected.features {
            if let Some(unqualified) = f.name.strip_prefix(&prefix) {
                let idx = spec.feature_index(unqualified).ok_or_else(|| {
                    Error::Config(format!(
                        "selected feature '{}' is not defined for source '{}'",
                        f.name, spec.name
                    ))
                })?;
                names.push(unqualified.to_string());
                patterns.push(spec.features[idx].pattern.as_str().to_string());
            }
        }
        let set = RegexSet::new(&patterns)
            .map_err(|e| Error::Config(format!("source '{}': feature set: {}", spec.name, e)))?;
        Ok(SourceFeatureSet { names, set })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Indices (in selection order) of the features matching a line.
    pub fn signature(&self, line: &[u8]) -> Vec<u16> {
        self.set.matches(line).into_iter().map(|i| i as u16).collect()
    }
}

/// Number of distinct diagnosed features that appear in the line.
pub fn fscore(line: &[u8], features: &SourceFeatureSet) -> usize {
    features.set.matches(line).into_iter().count()
}

/// One retrieved line with its relevance score and match signature.
#[derive(Debug, Clone, PartialEq)]
pub struct DeparsedLine {
    pub line: LogLine,
    pub fscore: usize,
    /// Which diagnosed features matched, as indices into the source's
    /// selection order; the "log type" proxy.
    pub signature: Vec<u16>,
}

/// De-parse output for one source.
#[derive(Debug)]
pub struct SourceDeparse {
    pub source: String,
    /// Unqualified diagnosed feature names for this source.
    pub features: Vec<String>,
    /// Extraction order: fscore descending, then input order.
    pub lines: Vec<DeparsedLine>,
    /// Lines retrieved per visited fscore level.
    pub lines_per_level: BTreeMap<usize, u64>,
    pub distinct_signatures: usize,
    /// Candidate lines whose timestamp fell inside the window.
    pub lines_in_window: u64,
}

/// De-parse output across sources.
#[derive(Debug)]
pub struct DeparseResult {
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub sources: Vec<SourceDeparse>,
    pub total_lines: u64,
    pub distinct_signatures: usize,
}

/// Selective inversion of parsing for one source: collect the window's
/// lines, score them, then extract whole fscore levels from the highest
/// down until the threshold is reached or the level hits zero. A level is
/// always extracted atomically, so the result may exceed the threshold.
pub fn deparse_source<R: BufRead>(
    spec: &SourceSpec,
    inputs: Vec<(String, R)>,
    window: Window,
    features: SourceFeatureSet,
    threshold: usize,
) -> Result<SourceDeparse> {
    if threshold == 0 {
        return Err(Error::Config("deparse threshold must be >= 1".into()));
    }
    let mut candidates: Vec<DeparsedLine> = Vec::new();
    for (input_name, mut reader) in inputs {
        let mut buf: Vec<u8> = Vec::with_capacity(512);
        let mut offset: u64 = 0;
        let mut memo_text: Vec<u8> = Vec::new();
        let mut memo_ts: Option<DateTime<Utc>> = None;
        loop {
            buf.clear();
            let n = reader
                .read_until(b'\n', &mut buf)
                .map_err(|e| Error::io(input_name.clone(), e))?;
            if n == 0 {
                break;
            }
            let line_offset = offset;
            offset += n as u64;
            let line = if buf.last() == Some(&b'\n') {
                &buf[..buf.len() - 1]
            } else {
                &buf[..]
            };
            let ts = match spec.timestamp_pattern.captures(line) {
                Some(caps) => {
                    let text = caps.get(1).map(|m| m.as_bytes()).unwrap_or(b"");
                    match memo_ts {
                        Some(memo) if text == memo_text.as_slice() => memo,
                        _ => match crate::parser::extract_timestamp(line, spec) {
                            Ok(ts) => {
                                memo_text.clear();
                                memo_text.extend_from_slice(text);
                                memo_ts = Some(ts);
                                ts
                            }
                            Err(_) => continue,
                        },
                    }
                }
                None => continue,
            };
            if ts < window.0 || ts >= window.1 {
                continue;
            }
            let signature = features.signature(line);
            candidates.push(DeparsedLine {
                line: LogLine {
                    source: spec.name.clone(),
                    timestamp: ts,
                    raw: line.to_vec(),
                    byte_offset: line_offset,
                },
                fscore: signature.len(),
                signature,
            });
        }
    }

    let lines_in_window = candidates.len() as u64;
    let n_features = features.len();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); n_features + 1];
    for (i, c) in candidates.iter().enumerate() {
        by_level[c.fscore].push(i);
    }

    let mut picked: Vec<usize> = Vec::new();
    let mut lines_per_level = BTreeMap::new();
    let mut level = n_features;
    while picked.len() < threshold && level >= 1 {
        picked.extend_from_slice(&by_level[level]);
        lines_per_level.insert(level, by_level[level].len() as u64);
        level -= 1;
    }

    let mut signatures: HashSet<&[u16]> = HashSet::new();
    for &i in &picked {
        signatures.insert(&candidates[i].signature);
    }
    let distinct_signatures = signatures.len();

    let mut taken: Vec<Option<DeparsedLine>> = candidates.into_iter().map(Some).collect();
    let lines = picked
        .into_iter()
        .map(|i| taken[i].take().expect("each candidate picked at most once"))
        .collect();

    Ok(SourceDeparse {
        source: spec.name.clone(),
        features: features.names,
        lines,
        lines_per_level,
        distinct_signatures,
        lines_in_window,
    })
}

/// De-parse every source from its raw input files.
pub fn deparse_files(
    config: &PipelineConfig,
    inputs: &[(String, Vec<PathBuf>)],
    window: Window,
    selected: &SelectedFeatures,
    threshold: usize,
) -> Result<DeparseResult> {
    // every selected feature must belong to a configured source
    for f in &selected.features {
        let source = f
            .name
            .split_once('.')
            .map(|(s, _)| s)
            .ok_or_else(|| Error::Config(format!("selected feature '{}' is not qualified", f.name)))?;
        if config.source(source).is_none() {
            return Err(Error::Config(format!(
                "selected feature '{}' names unknown source '{}'",
                f.name, source
            )));
        }
    }

    let mut sources = Vec::new();
    for (source, paths) in inputs {
        let spec = config
            .source(source)
            .ok_or_else(|| Error::Config(format!("source '{}' not declared in configuration", source)))?;
        let features = SourceFeatureSet::resolve(spec, selected)?;
        let readers: Vec<(String, Box<dyn BufRead>)> = paths
            .iter()
            .map(|p| {
                crate::parser::open_log_input(p)
                    .map(|r| (p.display().to_string(), r as Box<dyn BufRead>))
            })
            .collect::<Result<_>>()?;
        sources.push(deparse_source(spec, readers, window, features, threshold)?);
    }
    let total_lines = sources.iter().map(|s| s.lines.len() as u64).sum();
    let distinct_signatures = sources.iter().map(|s| s.distinct_signatures).sum();
    Ok(DeparseResult {
        window_start: window.0,
        window_end: window.1,
        sources,
        total_lines,
        distinct_signatures,
    })
}
