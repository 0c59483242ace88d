//! Step 2: resample per-source feature streams to the common sampling rate
//! and append their columns into one fused observation matrix.

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::parser::{floor_to_interval, FeatureStream, StreamRow};

/// N x M fused observation matrix with a regular time axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusedMatrix {
    pub timestamps: Vec<DateTime<Utc>>,
    /// Qualified `source.feature` names; source order, then declaration order.
    pub feature_names: Vec<String>,
    pub interval_seconds: u32,
    /// Row-major N x M counts.
    pub counts: Vec<u64>,
}

impl FusedMatrix {
    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let m = self.n_features();
        &self.counts[i * m..(i + 1) * m]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&c| c as f64).collect()
    }

    /// Index of the row starting at `ts`, if on the grid.
    pub fn row_at(&self, ts: DateTime<Utc>) -> Option<usize> {
        let first = self.timestamps.first()?.timestamp();
        let step = self.interval_seconds as i64;
        let offset = ts.timestamp() - first;
        if offset < 0 || offset % step != 0 {
            return None;
        }
        let idx = (offset / step) as usize;
        (idx < self.n_rows()).then_some(idx)
    }

    /// Row indices whose interval start falls in the half-open window.
    pub fn rows_in_window(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Vec<usize> {
        self.timestamps
            .iter()
            .enumerate()
            .filter(|(_, ts)| **ts >= start && **ts < end)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Sum k fine intervals into each coarse interval, re-anchored to the
/// coarse epoch-aligned grid. Only downsampling is supported; the common
/// rate must be the coarsest.
pub fn resample(stream: &FeatureStream, common_interval_seconds: u32) -> Result<FeatureStream> {
    if common_interval_seconds == 0 || !common_interval_seconds.is_multiple_of(stream.interval_seconds) {
        return Err(Error::Config(format!(
            "source '{}': common interval {} is not an integer multiple of source interval {}",
            stream.source, common_interval_seconds, stream.interval_seconds
        )));
    }
    if common_interval_seconds == stream.interval_seconds {
        return Ok(stream.clone());
    }
    let n = stream.feature_names.len();
    let mut buckets: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for row in &stream.rows {
        let coarse = floor_to_interval(row.interval_start.timestamp(), common_interval_seconds);
        let entry = buckets.entry(coarse).or_insert_with(|| vec![0; n]);
        for (acc, c) in entry.iter_mut().zip(row.counts.iter()) {
            *acc += c;
        }
    }
    let rows = buckets
        .into_iter()
        .map(|(k, counts)| StreamRow {
            interval_start: Utc
                .timestamp_opt(k, 0)
                .single()
                .expect("interval start within datetime range"),
            counts,
        })
        .collect();
    Ok(FeatureStream {
        source: stream.source.clone(),
        interval_seconds: common_interval_seconds,
        feature_names: stream.feature_names.clone(),
        rows,
    })
}

/// Append columns of streams already at the common rate. The row set is the
/// union of interval starts, spanned regularly; a source absent at a
/// timestamp contributes a zero sub-vector.
pub fn fuse(streams: &[FeatureStream], common_interval_seconds: u32) -> Result<FusedMatrix> {
    let mut feature_names = Vec::new();
    let mut seen = HashSet::new();
    for s in streams {
        if s.interval_seconds != common_interval_seconds {
            return Err(Error::Config(format!(
                "source '{}' is at interval {}, expected common interval {}",
                s.source, s.interval_seconds, common_interval_seconds
            )));
        }
        for f in &s.feature_names {
            let qualified = format!("{}.{}", s.source, f);
            if !seen.insert(qualified.clone()) {
                return Err(Error::Config(format!("duplicate qualified feature name '{}'", qualified)));
            }
            feature_names.push(qualified);
        }
    }
    let m = feature_names.len();

    let mut first: Option<i64> = None;
    let mut last: Option<i64> = None;
    for s in streams {
        if let (Some(a), Some(b)) = (s.rows.first(), s.rows.last()) {
            let (a, b) = (a.interval_start.timestamp(), b.interval_start.timestamp());
            first = Some(first.map_or(a, |f| f.min(a)));
            last = Some(last.map_or(b, |l| l.max(b)));
        }
    }
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Ok(FusedMatrix {
                timestamps: Vec::new(),
                feature_names,
                interval_seconds: common_interval_seconds,
                counts: Vec::new(),
            })
        }
    };

    let step = common_interval_seconds as i64;
    let n_rows = ((last - first) / step + 1) as usize;
    let mut counts = vec![0u64; n_rows * m];
    let mut col_offset = 0;
    for s in streams {
        let width = s.feature_names.len();
        for row in &s.rows {
            let k = row.interval_start.timestamp();
            debug_assert_eq!((k - first) % step, 0);
            let r = ((k - first) / step) as usize;
            let base = r * m + col_offset;
            counts[base..base + width].copy_from_slice(&row.counts);
        }
        col_offset += width;
    }

    let timestamps = (0..n_rows)
        .map(|i| {
            Utc.timestamp_opt(first + i as i64 * step, 0)
                .single()
                .expect("interval start within datetime range")
        })
        .collect();

    Ok(FusedMatrix {
        timestamps,
        feature_names,
        interval_seconds: common_interval_seconds,
        counts,
    })
}

fn format_ts(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Write the observation CSV: header `timestamp,<source.feature>,...`,
/// ISO-8601 UTC timestamps, integer cells.
pub fn write_csv<W: Write>(fused: &FusedMatrix, mut w: W) -> std::io::Result<()> {
    write!(w, "timestamp")?;
    for name in &fused.feature_names {
        write!(w, ",{}", name)?;
    }
    writeln!(w)?;
    for (i, ts) in fused.timestamps.iter().enumerate() {
        write!(w, "{}", format_ts(*ts))?;
        for c in fused.row(i) {
            write!(w, ",{}", c)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Read an observation CSV back, validating the regular grid.
pub fn read_csv<R: BufRead>(reader: R, interval_seconds: u32) -> Result<FusedMatrix> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty observation file".into()))?
        .map_err(|e| Error::Data(format!("observation file: {}", e)))?;
    let mut cols = header.split(',');
    if cols.next() != Some("timestamp") {
        return Err(Error::Data("observation file: first column must be 'timestamp'".into()));
    }
    let feature_names: Vec<String> = cols.map(|c| c.to_string()).collect();
    if feature_names.is_empty() {
        return Err(Error::Data("observation file: no feature columns".into()));
    }
    let m = feature_names.len();

    let mut timestamps = Vec::new();
    let mut counts = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Data(format!("observation file: {}", e)))?;
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let ts_text = cells
            .next()
            .ok_or_else(|| Error::Data(format!("row {}: missing timestamp", lineno + 2)))?;
        let ts = DateTime::parse_from_rfc3339(ts_text)
            .map_err(|e| Error::Data(format!("row {}: bad timestamp '{}': {}", lineno + 2, ts_text, e)))?
            .with_timezone(&Utc);
        let mut row = Vec::with_capacity(m);
        for cell in cells {
            let v: u64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("row {}: bad count '{}'", lineno + 2, cell)))?;
            row.push(v);
        }
        if row.len() != m {
            return Err(Error::Data(format!(
                "row {}: expected {} cells, found {}",
                lineno + 2,
                m,
                row.len()
            )));
        }
        if let Some(prev) = timestamps.last() {
            let expect = *prev + chrono::Duration::seconds(interval_seconds as i64);
            if ts != expect {
                return Err(Error::Data(format!(
                    "row {}: expected timestamp {}, found {} (grid must be regular at {} s)",
                    lineno + 2,
                    format_ts(expect),
                    format_ts(ts),
                    interval_seconds
                )));
            }
        }
        timestamps.push(ts);
        counts.extend_from_slice(&row);
    }

    Ok(FusedMatrix {
        timestamps,
        feature_names,
        interval_seconds,
        counts,
    })
}

/// View a single stream as a one-source observation matrix at its native
/// interval; used for the standalone per-source CSV output of parsing.
pub fn single_source_matrix(stream: &FeatureStream) -> FusedMatrix {
    fuse(std::slice::from_ref(stream), stream.interval_seconds).expect("single stream always fuses")
}

/// Reconstruct a per-source stream from a standalone observation CSV,
/// identifying the source by the qualified column prefix.
pub fn matrix_to_stream(matrix: &FusedMatrix, config: &PipelineConfig) -> Result<FeatureStream> {
    let mut prefix: Option<&str> = None;
    let mut names = Vec::with_capacity(matrix.feature_names.len());
    for q in &matrix.feature_names {
        let (src, feat) = q
            .split_once('.')
            .ok_or_else(|| Error::Data(format!("column '{}' is not a qualified source.feature name", q)))?;
        match prefix {
            None => prefix = Some(src),
            Some(p) if p != src => {
                return Err(Error::Data(format!(
                    "stream file mixes sources '{}' and '{}'",
                    p, src
                )))
            }
            _ => {}
        }
        names.push(feat.to_string());
    }
    let source = prefix.ok_or_else(|| Error::Data("stream file has no columns".into()))?;
    let spec = config
        .source(source)
        .ok_or_else(|| Error::Config(format!("source '{}' not declared in configuration", source)))?;
    let expected: Vec<&str> = spec.features.iter().map(|f| f.name.as_str()).collect();
    if names != expected {
        return Err(Error::Config(format!(
            "source '{}': stream columns do not match configured features",
            source
        )));
    }
    let rows = matrix
        .timestamps
        .iter()
        .enumerate()
        .map(|(i, ts)| StreamRow {
            interval_start: *ts,
            counts: matrix.row(i).to_vec(),
        })
        .collect();
    Ok(FeatureStream {
        source: source.to_string(),
        interval_seconds: matrix.interval_seconds,
        feature_names: names,
        rows,
    })
}
