//! Step 1: stream raw text logs, bucket lines into sampling intervals by
//! timestamp, and count regex matches per feature per interval.
//!
//! Counting is occurrence-level: several matches of one pattern inside one
//! line each count. Aggregation state merges associatively and
//! commutatively, so any line-boundary partition of the input produces the
//! same stream as a single pass.

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::config::SourceSpec;
use crate::error::{Error, Result};

/// One raw input line, round-trippable for de-parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogLine {
    pub source: String,
    pub timestamp: DateTime<Utc>,
    /// Exact line bytes, newline delimiter stripped. Not required to be UTF-8.
    pub raw: Vec<u8>,
    pub byte_offset: u64,
}

/// Per-interval feature counts for one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStream {
    pub source: String,
    pub interval_seconds: u32,
    pub feature_names: Vec<String>,
    /// Strictly increasing, regular rows; interior gaps are zero rows.
    pub rows: Vec<StreamRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRow {
    pub interval_start: DateTime<Utc>,
    pub counts: Vec<u64>,
}

impl FeatureStream {
    /// Element-wise sum of another parse of the same source, re-spanned.
    /// Exact in integers, so partition merging is byte-identical to a
    /// single pass.
    pub fn merge(self, other: FeatureStream) -> Result<FeatureStream> {
        if self.source != other.source
            || self.interval_seconds != other.interval_seconds
            || self.feature_names != other.feature_names
        {
            return Err(Error::Data(format!(
                "cannot merge streams: '{}' and '{}' differ in source, interval or features",
                self.source, other.source
            )));
        }
        let n = self.feature_names.len();
        let mut buckets: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
        for row in self.rows.into_iter().chain(other.rows) {
            let entry = buckets
                .entry(row.interval_start.timestamp())
                .or_insert_with(|| vec![0; n]);
            for (acc, c) in entry.iter_mut().zip(row.counts.iter()) {
                *acc += c;
            }
        }
        Ok(FeatureStream {
            source: self.source,
            interval_seconds: self.interval_seconds,
            feature_names: self.feature_names,
            rows: finalize_rows(buckets, self.interval_seconds, n),
        })
    }

    /// Grand total per feature over all rows.
    pub fn total_counts(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.feature_names.len()];
        for row in &self.rows {
            for (t, c) in totals.iter_mut().zip(row.counts.iter()) {
                *t += c;
            }
        }
        totals
    }
}

/// Audit counters for one parse pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub lines_read: u64,
    /// Lines skipped because no timestamp could be extracted.
    pub lines_unparseable: u64,
    pub intervals: u64,
    pub bytes_read: u64,
}

impl ParseStats {
    pub fn merge(self, other: ParseStats) -> ParseStats {
        ParseStats {
            lines_read: self.lines_read + other.lines_read,
            lines_unparseable: self.lines_unparseable + other.lines_unparseable,
            // recomputed when the owning aggregation finishes
            intervals: self.intervals.max(other.intervals),
            bytes_read: self.bytes_read + other.bytes_read,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TimestampError {
    #[error("timestamp pattern did not match")]
    NoMatch,
    #[error("captured timestamp is not valid UTF-8")]
    NotUtf8,
    #[error("captured timestamp does not parse under the source format")]
    BadFormat,
}

/// Parse the first timestamp_pattern match of a line under the source's
/// strftime format. Naive timestamps are shifted by the source UTC offset.
pub fn extract_timestamp(line: &[u8], spec: &SourceSpec) -> std::result::Result<DateTime<Utc>, TimestampError> {
    let caps = spec
        .timestamp_pattern
        .captures(line)
        .ok_or(TimestampError::NoMatch)?;
    let text = caps.get(1).ok_or(TimestampError::NoMatch)?.as_bytes();
    let text = std::str::from_utf8(text).map_err(|_| TimestampError::NotUtf8)?;
    parse_timestamp_text(text, spec)
}

fn parse_timestamp_text(text: &str, spec: &SourceSpec) -> std::result::Result<DateTime<Utc>, TimestampError> {
    let fmt = spec.timestamp_format.as_str();
    if fmt.contains("%z") || fmt.contains("%:z") || fmt.contains("%#z") {
        let dt = DateTime::parse_from_str(text, fmt).map_err(|_| TimestampError::BadFormat)?;
        return Ok(dt.with_timezone(&Utc));
    }
    let naive = NaiveDateTime::parse_from_str(text, fmt).map_err(|_| TimestampError::BadFormat)?;
    let shifted = naive - chrono::Duration::seconds(spec.utc_offset_seconds as i64);
    Ok(Utc.from_utc_datetime(&shifted))
}

/// Epoch-aligned floor bucketing.
pub fn floor_to_interval(ts_seconds: i64, interval_seconds: u32) -> i64 {
    let step = interval_seconds as i64;
    ts_seconds.div_euclid(step) * step
}

fn add_line_counts(line: &[u8], spec: &SourceSpec, counts: &mut [u64]) {
    for idx in spec.feature_set().matches(line) {
        counts[idx] += spec.features[idx].pattern.find_iter(line).count() as u64;
    }
}

/// Occurrence counts of every feature over a batch of lines from one
/// interval. Zero vector for empty input.
pub fn count_features<'a, I>(lines: I, spec: &SourceSpec) -> Vec<u64>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut counts = vec![0u64; spec.features.len()];
    for line in lines {
        add_line_counts(line, spec, &mut counts);
    }
    counts
}

/// Mergeable aggregation state for one source.
///
/// Workers may consume disjoint line-aligned chunks in parallel and merge
/// their aggregators afterwards; counts are integers, so the result does
/// not depend on chunking.
#[derive(Debug)]
pub struct SourceAggregator {
    interval_seconds: u32,
    n_features: usize,
    buckets: BTreeMap<i64, Vec<u64>>,
    lines_read: u64,
    lines_unparseable: u64,
    bytes_read: u64,
    // consecutive lines usually repeat the same timestamp text
    memo_text: Vec<u8>,
    memo_ts: Option<i64>,
    capture_locs: regex::bytes::CaptureLocations,
}

impl SourceAggregator {
    pub fn new(spec: &SourceSpec) -> Self {
        SourceAggregator {
            interval_seconds: spec.interval_seconds,
            n_features: spec.features.len(),
            buckets: BTreeMap::new(),
            lines_read: 0,
            lines_unparseable: 0,
            bytes_read: 0,
            memo_text: Vec::new(),
            memo_ts: None,
            capture_locs: spec.timestamp_pattern.capture_locations(),
        }
    }

    pub fn consume_line(&mut self, line: &[u8], spec: &SourceSpec) {
        self.lines_read += 1;
        let group = spec
            .timestamp_pattern
            .captures_read(&mut self.capture_locs, line)
            .and_then(|_| self.capture_locs.get(1));
        let ts = match group {
            Some((start, end)) => {
                let text = &line[start..end];
                match self.memo_ts {
                    Some(memo) if text == self.memo_text.as_slice() => memo,
                    _ => match std::str::from_utf8(text)
                        .ok()
                        .and_then(|t| parse_timestamp_text(t, spec).ok())
                    {
                        Some(dt) => {
                            let secs = dt.timestamp();
                            self.memo_text.clear();
                            self.memo_text.extend_from_slice(text);
                            self.memo_ts = Some(secs);
                            secs
                        }
                        None => {
                            self.lines_unparseable += 1;
                            return;
                        }
                    },
                }
            }
            None => {
                self.lines_unparseable += 1;
                return;
            }
        };
        let bucket = floor_to_interval(ts, self.interval_seconds);
        let counts = self
            .buckets
            .entry(bucket)
            .or_insert_with(|| vec![0; self.n_features]);
        add_line_counts(line, spec, counts);
    }

    pub fn merge(mut self, other: SourceAggregator) -> SourceAggregator {
        for (k, v) in other.buckets {
            match self.buckets.get_mut(&k) {
                Some(acc) => {
                    for (a, c) in acc.iter_mut().zip(v.iter()) {
                        *a += c;
                    }
                }
                None => {
                    self.buckets.insert(k, v);
                }
            }
        }
        self.lines_read += other.lines_read;
        self.lines_unparseable += other.lines_unparseable;
        self.bytes_read += other.bytes_read;
        self
    }

    pub fn finish(self, spec: &SourceSpec) -> (FeatureStream, ParseStats) {
        let rows = finalize_rows(self.buckets, self.interval_seconds, self.n_features);
        let stats = ParseStats {
            lines_read: self.lines_read,
            lines_unparseable: self.lines_unparseable,
            intervals: rows.len() as u64,
            bytes_read: self.bytes_read,
        };
        (
            FeatureStream {
                source: spec.name.clone(),
                interval_seconds: self.interval_seconds,
                feature_names: spec.features.iter().map(|f| f.name.clone()).collect(),
                rows,
            },
            stats,
        )
    }
}

/// Zero-fill interior gaps so the time axis stays regular: an interval with
/// no events is itself an observation.
fn finalize_rows(mut buckets: BTreeMap<i64, Vec<u64>>, interval_seconds: u32, n: usize) -> Vec<StreamRow> {
    let (first, last) = match (buckets.keys().next(), buckets.keys().next_back()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Vec::new(),
    };
    let step = interval_seconds as i64;
    let mut rows = Vec::with_capacity(((last - first) / step + 1) as usize);
    let mut k = first;
    while k <= last {
        let counts = buckets.remove(&k).unwrap_or_else(|| vec![0; n]);
        let interval_start = Utc
            .timestamp_opt(k, 0)
            .single()
            .expect("interval start within datetime range");
        rows.push(StreamRow {
            interval_start,
            counts,
        });
        k += step;
    }
    rows
}

/// Feed every line of a reader into an aggregator. Lines are split on
/// `\n`; the delimiter is stripped, all other bytes pass through.
pub fn parse_reader<R: BufRead>(mut reader: R, spec: &SourceSpec, agg: &mut SourceAggregator) -> std::io::Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(512);
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        agg.bytes_read += n as u64;
        let line = if buf.last() == Some(&b'\n') {
            &buf[..buf.len() - 1]
        } else {
            &buf[..]
        };
        agg.consume_line(line, spec);
    }
    Ok(())
}

/// Open a log file, transparently decompressing `.gz` inputs.
pub fn open_log_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let dec = flate2::read::MultiGzDecoder::new(BufReader::new(file));
        Ok(Box::new(BufReader::with_capacity(64 * 1024, dec)))
    } else {
        Ok(Box::new(BufReader::with_capacity(64 * 1024, file)))
    }
}

/// Parse one source from its input files, in parallel over files.
pub fn parse_files(paths: &[std::path::PathBuf], spec: &SourceSpec) -> Result<(FeatureStream, ParseStats)> {
    let agg = paths
        .par_iter()
        .map(|path| {
            let reader = open_log_input(path)?;
            let mut agg = SourceAggregator::new(spec);
            parse_reader(reader, spec, &mut agg)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            Ok(agg)
        })
        .try_reduce(|| SourceAggregator::new(spec), |a, b| Ok(a.merge(b)))?;
    Ok(agg.finish(spec))
}

/// Single-pass parse of in-memory text; convenience for tests and benches.
pub fn parse_bytes(data: &[u8], spec: &SourceSpec) -> (FeatureStream, ParseStats) {
    let mut agg = SourceAggregator::new(spec);
    parse_reader(std::io::Cursor::new(data), spec, &mut agg).expect("in-memory read");
    agg.finish(spec)
}
