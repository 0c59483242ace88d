//! Step executors and file writers shared by the subcommands and by `run`.
//!
//! Every artifact written here is deterministic for identical inputs and
//! configuration: fixed orderings, shortest round-trip float formatting.

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use mbda_core::config::PipelineConfig;
use mbda_core::diagnosis::{self, ContributionVector, DeparseResult, SelectedFeature, SelectedFeatures};
use mbda_core::error::{Error, Result};
use mbda_core::fusion::{self, FusedMatrix};
use mbda_core::model::SavedModel;
use mbda_core::monitor::{
    self, AnomalyWindow, ControlLimits, Detector, MonitorRecord, Phase, VarianceCheck,
};
use mbda_core::parser::{self, FeatureStream, ParseStats};
use mbda_core::pca::{self, CrossProductAccumulator, MeanVarAccumulator, PcaModel};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_MAX_CLUSTERS: usize = 100;
pub const DEFAULT_POLLUTION_THRESHOLD: f64 = 0.10;
/// Cluster member timestamps are kept only up to this multiplicity.
pub const CLUSTER_MEMBER_CAP: usize = 10;

const FIT_CHUNK_ROWS: usize = 1024;

pub fn format_ts(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Accept RFC 3339 or a naive `YYYY-MM-DDTHH:MM:SS` (interpreted as UTC).
pub fn parse_instant(s: &str) -> Result<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(n) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(Utc.from_utc_datetime(&n));
        }
    }
    Err(Error::Config(format!(
        "cannot parse timestamp '{}': expected RFC 3339 or YYYY-MM-DDTHH:MM:SS",
        s
    )))
}

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Split `SOURCE=PATH` input arguments, grouped per source in order of
/// first appearance. Sources must exist in the configuration.
pub fn group_inputs(config: &PipelineConfig, raw: &[String]) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let mut grouped: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for item in raw {
        let (source, path) = item.split_once('=').ok_or_else(|| {
            Error::Config(format!("input '{}' must use the form SOURCE=PATH", item))
        })?;
        if config.source(source).is_none() {
            return Err(Error::Config(format!(
                "input names source '{}', which is not declared in the configuration",
                source
            )));
        }
        match grouped.iter_mut().find(|(s, _)| s == source) {
            Some((_, paths)) => paths.push(PathBuf::from(path)),
            None => grouped.push((source.to_string(), vec![PathBuf::from(path)])),
        }
    }
    if grouped.is_empty() {
        return Err(Error::Config("at least one --input SOURCE=PATH is required".into()));
    }
    Ok(grouped)
}

// ---------------------------------------------------------------- parse

pub struct ParseOutput {
    /// One stream per input source, in input order.
    pub streams: Vec<FeatureStream>,
    pub stats: BTreeMap<String, ParseStats>,
}

pub fn run_parse(config: &PipelineConfig, inputs: &[(String, Vec<PathBuf>)]) -> Result<ParseOutput> {
    let mut streams = Vec::new();
    let mut stats = BTreeMap::new();
    for (source, paths) in inputs {
        let spec = config
            .source(source)
            .ok_or_else(|| Error::Config(format!("source '{}' not declared in configuration", source)))?;
        let (stream, st) = parser::parse_files(paths, spec)?;
        streams.push(stream);
        stats.insert(source.clone(), st);
    }
    Ok(ParseOutput { streams, stats })
}

#[derive(Serialize)]
struct ParseStatsRepr {
    lines_read: u64,
    lines_unparseable: u64,
    intervals: u64,
    bytes_read: u64,
}

pub fn write_parse_outputs(out_dir: &Path, parsed: &ParseOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for stream in &parsed.streams {
        let path = out_dir.join(format!("{}.csv", stream.source));
        let matrix = fusion::single_source_matrix(stream);
        let mut buf = Vec::new();
        fusion::write_csv(&matrix, &mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
        write_file(&path, &buf)?;
        written.push(path);
    }
    let stats: BTreeMap<&String, ParseStatsRepr> = parsed
        .stats
        .iter()
        .map(|(k, v)| {
            (
                k,
                ParseStatsRepr {
                    lines_read: v.lines_read,
                    lines_unparseable: v.lines_unparseable,
                    intervals: v.intervals,
                    bytes_read: v.bytes_read,
                },
            )
        })
        .collect();
    let path = out_dir.join("parse_stats.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&stats).expect("stats serialize").as_bytes(),
    )?;
    written.push(path);
    Ok(written)
}

// ----------------------------------------------------------------- fuse

/// Read a standalone per-source observation CSV, identifying the source by
/// its qualified column prefix.
pub fn read_stream_file(path: &Path, config: &PipelineConfig) -> Result<FeatureStream> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let header = text.lines().next().unwrap_or("");
    let source = header
        .split(',')
        .nth(1)
        .and_then(|c| c.split_once('.'))
        .map(|(s, _)| s)
        .ok_or_else(|| {
            Error::Data(format!(
                "{}: not a per-source observation CSV (no qualified columns)",
                path.display()
            ))
        })?;
    let spec = config
        .source(source)
        .ok_or_else(|| Error::Config(format!("source '{}' not declared in configuration", source)))?;
    let matrix = fusion::read_csv(std::io::Cursor::new(text.as_bytes()), spec.interval_seconds)?;
    fusion::matrix_to_stream(&matrix, config)
}

/// Resample every stream to the common rate and fuse. All configured
/// sources must be present exactly once so the fused dimensionality
/// matches the model space.
pub fn fuse_streams(config: &PipelineConfig, streams: &[FeatureStream]) -> Result<FusedMatrix> {
    let mut ordered = Vec::with_capacity(config.sources.len());
    for spec in &config.sources {
        let found: Vec<&FeatureStream> = streams.iter().filter(|s| s.source == spec.name).collect();
        match found.len() {
            0 => {
                return Err(Error::Config(format!(
                    "source '{}' is configured but no stream was provided",
                    spec.name
                )))
            }
            1 => ordered.push(fusion::resample(found[0], config.common_interval_seconds)?),
            _ => {
                return Err(Error::Config(format!(
                    "source '{}' was provided more than once",
                    spec.name
                )))
            }
        }
    }
    for stream in streams {
        if config.source(&stream.source).is_none() {
            return Err(Error::Config(format!(
                "stream source '{}' is not declared in the configuration",
                stream.source
            )));
        }
    }
    fusion::fuse(&ordered, config.common_interval_seconds)
}

pub fn write_fused(out_dir: &Path, fused: &FusedMatrix) -> Result<PathBuf> {
    let path = out_dir.join("fused.csv");
    let mut buf = Vec::new();
    fusion::write_csv(fused, &mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_file(&path, &buf)?;
    Ok(path)
}

pub fn read_fused(path: &Path, config: &PipelineConfig) -> Result<FusedMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let fused = fusion::read_csv(std::io::BufReader::new(file), config.common_interval_seconds)?;
    validate_fused(config, &fused)?;
    Ok(fused)
}

fn validate_fused(config: &PipelineConfig, fused: &FusedMatrix) -> Result<()> {
    if fused.feature_names != config.qualified_feature_names() {
        return Err(Error::Config(
            "fused columns do not match the configured sources and features".into(),
        ));
    }
    Ok(())
}

// ------------------------------------------------------------ calibrate

pub struct Calibration {
    pub saved: SavedModel,
    /// Monitor records of the calibration rows (Phase I alpha).
    pub records: Vec<MonitorRecord>,
    pub variance_check: Option<VarianceCheck>,
    pub n_used: u64,
    pub n_excluded: u64,
}

fn fit_model(config: &PipelineConfig, fused: &FusedMatrix, keep: &[usize]) -> Result<PcaModel> {
    let m = fused.n_features();
    let weights = config.feature_weights();
    let mut mv = MeanVarAccumulator::new(m);
    for &i in keep {
        mv.update(&fused.row_f64(i))?;
    }
    let pre = mv.finish(&weights)?;
    if !pre.constant_columns.is_empty() {
        let names: Vec<&str> = pre
            .constant_columns
            .iter()
            .take(8)
            .map(|&i| fused.feature_names[i].as_str())
            .collect();
        eprintln!(
            "warning: {} constant column(s) over the calibration stream (unit scale substituted): {}{}",
            pre.constant_columns.len(),
            names.join(", "),
            if pre.constant_columns.len() > names.len() { ", ..." } else { "" }
        );
    }
    let mut acc = CrossProductAccumulator::new(m);
    let mut chunk: Vec<Vec<f64>> = Vec::with_capacity(FIT_CHUNK_ROWS);
    for &i in keep {
        chunk.push(pca::apply_preprocess(&fused.row_f64(i), &pre)?);
        if chunk.len() == FIT_CHUNK_ROWS {
            acc.accumulate_rows(&chunk)?;
            chunk.clear();
        }
    }
    acc.accumulate_rows(&chunk)?;
    pca::fit_pca(&acc, pre, &config.component_policy)
}

pub fn run_calibrate(
    config: &PipelineConfig,
    fused: &FusedMatrix,
    exclude: Option<&HashSet<i64>>,
    pollution_threshold: f64,
) -> Result<Calibration> {
    validate_fused(config, fused)?;
    let keep: Vec<usize> = (0..fused.n_rows())
        .filter(|&i| {
            exclude.is_none_or(|ex| !ex.contains(&fused.timestamps[i].timestamp()))
        })
        .collect();
    let n_excluded = (fused.n_rows() - keep.len()) as u64;

    let model = fit_model(config, fused, &keep)?;
    let variance_check = match exclude {
        Some(_) => {
            let full = if n_excluded == 0 {
                model.clone()
            } else {
                let all: Vec<usize> = (0..fused.n_rows()).collect();
                fit_model(config, fused, &all)?
            };
            Some(monitor::phase1_variance_check(&full, &model, pollution_threshold)?)
        }
        None => None,
    };

    let detector = Detector::new(model)?;
    let mut scored = Vec::with_capacity(keep.len());
    for &i in &keep {
        let (d, q) = detector.score(&fused.row_f64(i))?;
        scored.push((fused.timestamps[i], d, q));
    }
    let ds: Vec<f64> = scored.iter().map(|s| s.1).collect();
    let qs: Vec<f64> = scored.iter().map(|s| s.2).collect();
    let limits = ControlLimits {
        ucl_d: monitor::compute_ucl(&ds, config.ucl_percentile)?,
        ucl_q: monitor::compute_ucl(&qs, config.ucl_percentile)?,
        percentile: config.ucl_percentile,
        n_calibration: keep.len() as u64,
    };
    let alpha = monitor::phase_alpha(detector.model(), Phase::One);
    let records = monitor::attach_tscores(&scored, &limits, alpha);
    Ok(Calibration {
        saved: SavedModel {
            model: detector.model().clone(),
            limits,
            config_digest: config.digest.clone(),
        },
        records,
        variance_check,
        n_used: keep.len() as u64,
        n_excluded,
    })
}

/// One interval-start timestamp per line, RFC 3339 or naive UTC.
pub fn read_exclude_file(path: &Path) -> Result<HashSet<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut set = HashSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        set.insert(parse_instant(line)?.timestamp());
    }
    Ok(set)
}

// -------------------------------------------------------------- monitor

pub fn run_monitor(
    config: &PipelineConfig,
    saved: &SavedModel,
    fused: &FusedMatrix,
    phase: Phase,
) -> Result<Vec<MonitorRecord>> {
    validate_fused(config, fused)?;
    if saved.config_digest != config.digest {
        return Err(Error::Config(
            "model was calibrated under a different configuration document; recalibrate first".into(),
        ));
    }
    let detector = Detector::new(saved.model.clone())?;
    let scored = monitor::score_matrix(&detector, fused)?;
    let alpha = monitor::phase_alpha(detector.model(), phase);
    Ok(monitor::attach_tscores(&scored, &saved.limits, alpha))
}

pub fn triage_windows(
    records: &[MonitorRecord],
    top_k: usize,
    interval_seconds: u32,
    coalesce: bool,
) -> Vec<AnomalyWindow> {
    let selected = monitor::triage(records, top_k);
    monitor::coalesce_windows(&selected, interval_seconds, coalesce)
}

// -------------------------------------------------------------- writers

pub fn write_monitor_csv(path: &Path, records: &[MonitorRecord]) -> Result<()> {
    let mut buf = String::from("timestamp,d,q,tscore\n");
    for r in records {
        buf.push_str(&format!("{},{},{},{}\n", format_ts(r.timestamp), r.d, r.q, r.tscore));
    }
    write_file(path, buf.as_bytes())
}

pub fn write_clusters_csv(path: &Path, points: &[monitor::ClusterPoint]) -> Result<()> {
    let mut buf = String::from("centroid_d,centroid_q,multiplicity,members\n");
    for p in points {
        let members = p
            .members
            .as_ref()
            .map(|m| m.iter().map(|ts| format_ts(*ts)).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        buf.push_str(&format!(
            "{},{},{},{}\n",
            p.centroid_d, p.centroid_q, p.multiplicity, members
        ));
    }
    write_file(path, buf.as_bytes())
}

#[derive(Serialize, Deserialize)]
pub struct WindowRepr {
    pub window_start: String,
    pub window_end: String,
    pub tscore_max: f64,
    pub rank: usize,
}

pub fn write_anomalies_jsonl(path: &Path, windows: &[AnomalyWindow]) -> Result<()> {
    let mut buf = String::new();
    for w in windows {
        let repr = WindowRepr {
            window_start: format_ts(w.start),
            window_end: format_ts(w.end),
            tscore_max: w.tscore_max,
            rank: w.rank,
        };
        buf.push_str(&serde_json::to_string(&repr).expect("window serializes"));
        buf.push('\n');
    }
    write_file(path, buf.as_bytes())
}

#[derive(Serialize)]
struct VarianceCheckRepr {
    per_pc: Vec<PcShare>,
    max_relative_change: f64,
    threshold: f64,
    polluted: bool,
}

#[derive(Serialize)]
struct PcShare {
    pc: usize,
    share_with_outliers: f64,
    share_without_outliers: f64,
    relative_change: f64,
}

pub fn write_variance_check(path: &Path, check: &VarianceCheck) -> Result<()> {
    let repr = VarianceCheckRepr {
        per_pc: check
            .per_pc
            .iter()
            .enumerate()
            .map(|(i, (a, b, c))| PcShare {
                pc: i + 1,
                share_with_outliers: *a,
                share_without_outliers: *b,
                relative_change: *c,
            })
            .collect(),
        max_relative_change: check.max_relative_change,
        threshold: check.threshold,
        polluted: check.polluted,
    };
    write_file(path, serde_json::to_string_pretty(&repr).expect("serializes").as_bytes())
}

// ------------------------------------------------------------- diagnose

pub struct Diagnosis {
    pub contributions: ContributionVector,
    pub selected: SelectedFeatures,
}

pub fn run_diagnose(
    config: &PipelineConfig,
    params: &mbda_core::pca::PreprocessParams,
    fused: &FusedMatrix,
    window: diagnosis::Window,
) -> Result<Diagnosis> {
    validate_fused(config, fused)?;
    let contributions = diagnosis::us_contributions(fused, window, params)?;
    let selected = diagnosis::select_features(&contributions, &config.feature_selection);
    if selected.is_empty() {
        eprintln!(
            "warning: window {} .. {}: all contributions are zero, nothing selected",
            format_ts(window.0),
            format_ts(window.1)
        );
    }
    Ok(Diagnosis {
        contributions,
        selected,
    })
}

#[derive(Serialize, Deserialize)]
struct DiagnosisRepr {
    window_start: String,
    window_end: String,
    /// x'^T |x'| of the window-mean preprocessed observation.
    scalar: f64,
    selected: Vec<SelectedRepr>,
    /// Features whose contribution is negative: the anomaly shows fewer
    /// events than normal, which regex matching cannot confirm directly.
    negative_features: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SelectedRepr {
    name: String,
    contribution: f64,
}

pub fn write_diagnosis(out_dir: &Path, diag: &Diagnosis) -> Result<Vec<PathBuf>> {
    let contributions_path = out_dir.join("contributions.csv");
    let mut buf = String::from("feature,contribution\n");
    for (name, value) in diag
        .contributions
        .feature_names
        .iter()
        .zip(diag.contributions.values.iter())
    {
        buf.push_str(&format!("{},{}\n", name, value));
    }
    write_file(&contributions_path, buf.as_bytes())?;

    let repr = DiagnosisRepr {
        window_start: format_ts(diag.contributions.window_start),
        window_end: format_ts(diag.contributions.window_end),
        scalar: diag.contributions.scalar,
        selected: diag
            .selected
            .features
            .iter()
            .map(|f| SelectedRepr {
                name: f.name.clone(),
                contribution: f.contribution,
            })
            .collect(),
        negative_features: diag
            .selected
            .negative()
            .iter()
            .map(|f| f.name.clone())
            .collect(),
    };
    let diagnosis_path = out_dir.join("diagnosis.json");
    write_file(
        &diagnosis_path,
        serde_json::to_string_pretty(&repr).expect("serializes").as_bytes(),
    )?;
    Ok(vec![contributions_path, diagnosis_path])
}

/// Load a diagnosis file back: the anomaly window and the selection.
pub fn read_diagnosis(path: &Path) -> Result<(diagnosis::Window, SelectedFeatures)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let repr: DiagnosisRepr =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    let window = (parse_instant(&repr.window_start)?, parse_instant(&repr.window_end)?);
    Ok((
        window,
        SelectedFeatures {
            features: repr
                .selected
                .into_iter()
                .map(|f| SelectedFeature {
                    name: f.name,
                    contribution: f.contribution,
                })
                .collect(),
        },
    ))
}

// -------------------------------------------------------------- deparse

#[derive(Serialize)]
struct DeparseSummaryRepr {
    window_start: String,
    window_end: String,
    threshold: usize,
    features: Vec<SelectedRepr>,
    sources: BTreeMap<String, SourceSummaryRepr>,
    totals: TotalsRepr,
}

#[derive(Serialize)]
struct SourceSummaryRepr {
    features: Vec<String>,
    lines_retrieved: u64,
    lines_in_window: u64,
    lines_per_level: Vec<LevelRepr>,
    distinct_signatures: usize,
}

#[derive(Serialize)]
struct LevelRepr {
    fscore: usize,
    lines: u64,
}

#[derive(Serialize)]
struct TotalsRepr {
    lines_retrieved: u64,
    distinct_signatures: usize,
}

pub fn write_deparse(
    out_dir: &Path,
    result: &DeparseResult,
    selected: &SelectedFeatures,
    threshold: usize,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut sources = BTreeMap::new();
    for s in &result.sources {
        let path = out_dir.join(format!("{}.deparsed.txt", s.source));
        let mut file = std::fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        for line in &s.lines {
            write!(file, "{}\t", line.fscore).map_err(|e| Error::io(path.display().to_string(), e))?;
            file.write_all(&line.line.raw)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            file.write_all(b"\n").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        written.push(path);
        sources.insert(
            s.source.clone(),
            SourceSummaryRepr {
                features: s.features.clone(),
                lines_retrieved: s.lines.len() as u64,
                lines_in_window: s.lines_in_window,
                lines_per_level: s
                    .lines_per_level
                    .iter()
                    .rev()
                    .map(|(&fscore, &lines)| LevelRepr { fscore, lines })
                    .collect(),
                distinct_signatures: s.distinct_signatures,
            },
        );
    }
    let summary = DeparseSummaryRepr {
        window_start: format_ts(result.window_start),
        window_end: format_ts(result.window_end),
        threshold,
        features: selected
            .features
            .iter()
            .map(|f| SelectedRepr {
                name: f.name.clone(),
                contribution: f.contribution,
            })
            .collect(),
        sources,
        totals: TotalsRepr {
            lines_retrieved: result.total_lines,
            distinct_signatures: result.distinct_signatures,
        },
    };
    let path = out_dir.join("deparse_summary.json");
    write_file(&path, serde_json::to_string_pretty(&summary).expect("serializes").as_bytes())?;
    written.push(path);
    Ok(written)
}
