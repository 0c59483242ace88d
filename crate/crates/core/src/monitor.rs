//! Step 3 (monitoring half): D and Q statistics, empirical control limits,
//! phase-dependent Tscore, anomaly triage, and compressed chart data.

use chrono::{DateTime, Utc};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::FusedMatrix;
use crate::pca::{apply_preprocess, PcaModel};

/// Per-observation monitoring statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub timestamp: DateTime<Utc>,
    pub d: f64,
    pub q: f64,
    pub tscore: f64,
}

/// Empirical upper control limits from calibration data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLimits {
    pub ucl_d: f64,
    pub ucl_q: f64,
    pub percentile: f64,
    pub n_calibration: u64,
}

/// Tscore weighting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Exploratory: outliers live in the model's high-variance directions.
    One,
    /// Learning: new data may deviate in any direction.
    Two,
}

/// Scores observations against a fitted model. Holds the inverted score
/// covariance so per-row work stays cheap.
#[derive(Debug, Clone)]
pub struct Detector {
    model: PcaModel,
    sigma_inv: DMatrix<f64>,
}

impl Detector {
    /// Fails when the score covariance is singular (any eigenvalue below
    /// 1e-12 of the largest), naming the degenerate component.
    pub fn new(model: PcaModel) -> Result<Self> {
        let a = model.n_components;
        let eig = nalgebra::SymmetricEigen::new(model.scores_cov.clone());
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|x, y| y.total_cmp(x));
        let max = evs[0];
        for (i, &ev) in evs.iter().enumerate() {
            // catches tiny, negative and NaN eigenvalues alike
            let healthy = ev > max * 1e-12;
            if !healthy {
                return Err(Error::Model(format!(
                    "scores covariance is singular: component {} of {} has eigenvalue {:e}",
                    i + 1,
                    a,
                    ev
                )));
            }
        }
        let sigma_inv = model
            .scores_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Model("scores covariance is not positive definite".into()))?
            .inverse();
        Ok(Detector { model, sigma_inv })
    }

    pub fn model(&self) -> &PcaModel {
        &self.model
    }

    /// D = t Sigma_T^-1 t^T (Hotelling's T2 under the calibration score
    /// covariance).
    pub fn d_statistic(&self, t: &DVector<f64>) -> f64 {
        let y = &self.sigma_inv * t;
        t.dot(&y)
    }

    /// Preprocess a raw count row and return its (D, Q) pair.
    pub fn score(&self, raw_row: &[f64]) -> Result<(f64, f64)> {
        let x = apply_preprocess(raw_row, &self.model.preprocess)?;
        let t = self.model.project(&x)?;
        let e = self.model.residual(&x, &t)?;
        Ok((self.d_statistic(&t), q_statistic(&e)))
    }
}

/// Q = ||e||^2 (squared prediction error).
pub fn q_statistic(e: &DVector<f64>) -> f64 {
    e.norm_squared()
}

/// Nearest-rank order statistic: the value at 1-based index ceil(p * N) of
/// the ascending sort. Exact and distribution-free.
pub fn compute_ucl(values: &[f64], percentile: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Data("control limit requires non-empty calibration statistics".into()));
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::Config(format!(
            "percentile must be in (0,1), got {}",
            percentile
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let rank = (percentile * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// T = alpha * D/UCL_D + (1 - alpha) * Q/UCL_Q
pub fn tscore(d: f64, q: f64, limits: &ControlLimits, alpha: f64) -> f64 {
    alpha * (d / limits.ucl_d) + (1.0 - alpha) * (q / limits.ucl_q)
}

/// Phase I: fraction of variance captured by the model.
/// Phase II: A / M.
pub fn phase_alpha(model: &PcaModel, phase: Phase) -> f64 {
    match phase {
        Phase::One => model.captured_variance_fraction,
        Phase::Two => model.n_components as f64 / model.n_features() as f64,
    }
}

/// (D, Q) for every row of a fused matrix, in row order.
pub fn score_matrix(detector: &Detector, fused: &FusedMatrix) -> Result<Vec<(DateTime<Utc>, f64, f64)>> {
    (0..fused.n_rows())
        .into_par_iter()
        .map(|i| {
            let (d, q) = detector.score(&fused.row_f64(i))?;
            Ok((fused.timestamps[i], d, q))
        })
        .collect()
}

/// Attach Tscores to scored rows.
pub fn attach_tscores(scored: &[(DateTime<Utc>, f64, f64)], limits: &ControlLimits, alpha: f64) -> Vec<MonitorRecord> {
    scored
        .iter()
        .map(|&(timestamp, d, q)| MonitorRecord {
            timestamp,
            d,
            q,
            tscore: tscore(d, q, limits, alpha),
        })
        .collect()
}

/// Top-k records by Tscore, ties broken by earlier timestamp. The result
/// does not depend on the input ordering.
pub fn triage(records: &[MonitorRecord], top_k: usize) -> Vec<MonitorRecord> {
    let mut sorted: Vec<MonitorRecord> = records.to_vec();
    sorted.sort_by(|a, b| {
        b.tscore
            .total_cmp(&a.tscore)
            .then_with(|| a.timestamp.cmp(&b.timestamp))
    });
    sorted.truncate(top_k);
    sorted
}

/// A triaged anomaly: one interval, or several consecutive ones coalesced.
/// The window is half-open `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub tscore_max: f64,
    pub rank: usize,
}

/// Group triaged records into anomaly windows. With `coalesce`, records on
/// adjacent intervals become a single window; multi-interval events are
/// reported once.
pub fn coalesce_windows(selected: &[MonitorRecord], interval_seconds: u32, coalesce: bool) -> Vec<AnomalyWindow> {
    let step = chrono::Duration::seconds(interval_seconds as i64);
    let mut by_time: Vec<&MonitorRecord> = selected.iter().collect();
    by_time.sort_by_key(|r| r.timestamp);

    let mut windows: Vec<AnomalyWindow> = Vec::new();
    for rec in by_time {
        match windows.last_mut() {
            Some(w) if coalesce && rec.timestamp == w.end => {
                w.end = rec.timestamp + step;
                w.tscore_max = w.tscore_max.max(rec.tscore);
            }
            _ => windows.push(AnomalyWindow {
                start: rec.timestamp,
                end: rec.timestamp + step,
                tscore_max: rec.tscore,
                rank: 0,
            }),
        }
    }
    windows.sort_by(|a, b| {
        b.tscore_max
            .total_cmp(&a.tscore_max)
            .then_with(|| a.start.cmp(&b.start))
    });
    for (i, w) in windows.iter_mut().enumerate() {
        w.rank = i + 1;
    }
    windows
}

/// One marker of a compressed monitoring chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPoint {
    pub centroid_d: f64,
    pub centroid_q: f64,
    pub multiplicity: u64,
    /// Kept only while multiplicity stays within the cap, so small
    /// clusters (the likely outliers) stay identifiable.
    pub members: Option<Vec<DateTime<Utc>>>,
}

/// Sequential agglomeration in (D/UCL_D, Q/UCL_Q) space. Duplicate points
/// join their cluster directly; otherwise each record opens a cluster and
/// the two nearest centroids merge whenever the count exceeds
/// `max_clusters`. Multiplicity mass is conserved exactly.
pub fn cluster_plot(
    records: &[MonitorRecord],
    limits: &ControlLimits,
    max_clusters: usize,
    member_cap: usize,
) -> Vec<ClusterPoint> {
    struct Cluster {
        x: f64,
        y: f64,
        multiplicity: u64,
        members: Option<Vec<DateTime<Utc>>>,
    }
    let max_clusters = max_clusters.max(1);
    let mut clusters: Vec<Cluster> = Vec::new();

    let dist2 = |a: &Cluster, x: f64, y: f64| {
        let (dx, dy) = (a.x - x, a.y - y);
        dx * dx + dy * dy
    };

    for rec in records {
        let x = rec.d / limits.ucl_d;
        let y = rec.q / limits.ucl_q;
        let nearest = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, dist2(c, x, y)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        match nearest {
            // squared distances are nonnegative; zero means a duplicate point
            Some((i, d2)) if d2 <= 0.0 => {
                let c = &mut clusters[i];
                c.multiplicity += 1;
                match &mut c.members {
                    Some(m) if c.multiplicity <= member_cap as u64 => m.push(rec.timestamp),
                    m => *m = None,
                }
            }
            _ => {
                clusters.push(Cluster {
                    x,
                    y,
                    multiplicity: 1,
                    members: (member_cap >= 1).then(|| vec![rec.timestamp]),
                });
            }
        }
        while clusters.len() > max_clusters {
            let mut best = (0usize, 1usize, f64::INFINITY);
            for i in 0..clusters.len() {
                for j in (i + 1)..clusters.len() {
                    let d2 = dist2(&clusters[i], clusters[j].x, clusters[j].y);
                    if d2 < best.2 {
                        best = (i, j, d2);
                    }
                }
            }
            let (i, j, _) = best;
            let b = clusters.remove(j);
            let a = &mut clusters[i];
            let total = a.multiplicity + b.multiplicity;
            let wa = a.multiplicity as f64 / total as f64;
            let wb = b.multiplicity as f64 / total as f64;
            a.x = wa * a.x + wb * b.x;
            a.y = wa * a.y + wb * b.y;
            a.multiplicity = total;
            a.members = match (a.members.take(), b.members) {
                (Some(mut ma), Some(mb)) if total <= member_cap as u64 => {
                    ma.extend(mb);
                    Some(ma)
                }
                _ => None,
            };
        }
    }

    clusters
        .into_iter()
        .map(|c| ClusterPoint {
            centroid_d: c.x * limits.ucl_d,
            centroid_q: c.y * limits.ucl_q,
            multiplicity: c.multiplicity,
            members: c.members,
        })
        .collect()
}

/// Per-PC captured-variance comparison between a model fitted with and
/// without suspected outliers.
#[derive(Debug, Clone)]
pub struct VarianceCheck {
    /// (fraction with outliers, fraction without, relative change) per PC.
    pub per_pc: Vec<(f64, f64, f64)>,
    pub max_relative_change: f64,
    pub threshold: f64,
    /// Set when the outliers pollute the model enough to refit without them.
    pub polluted: bool,
}

pub fn phase1_variance_check(
    model_full: &PcaModel,
    model_without_outliers: &PcaModel,
    threshold: f64,
) -> Result<VarianceCheck> {
    if model_full.n_features() != model_without_outliers.n_features() {
        return Err(Error::Model(format!(
            "variance check: models disagree on dimensionality ({} vs {})",
            model_full.n_features(),
            model_without_outliers.n_features()
        )));
    }
    let n = model_full
        .eigenvalues
        .len()
        .min(model_without_outliers.eigenvalues.len());
    let mut per_pc = Vec::with_capacity(n);
    let mut max_change: f64 = 0.0;
    for i in 0..n {
        let fa = model_full.eigenvalues[i] / model_full.total_variance;
        let fb = model_without_outliers.eigenvalues[i] / model_without_outliers.total_variance;
        let denom = fa.max(fb);
        let change = if denom > 0.0 { (fa - fb).abs() / denom } else { 0.0 };
        max_change = max_change.max(change);
        per_pc.push((fa, fb, change));
    }
    Ok(VarianceCheck {
        per_pc,
        max_relative_change: max_change,
        threshold,
        polluted: max_change > threshold,
    })
}
