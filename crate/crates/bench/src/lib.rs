//! Synthetic data generators shared by the benchmarks.

use chrono::{Duration, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mbda_core::config::{load_config, PipelineConfig};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

/// A single-source configuration with `n` regex features over netflow-like
/// text lines.
pub fn netflow_config(n: usize) -> PipelineConfig {
    let mut doc = String::from(
        "common_interval: 60\nsources:\n  - name: net\n    interval: 60\n    timestamp_pattern: '^(\\d{4}-\\d{2}-\\d{2} \\d{2}:\\d{2}:\\d{2})'\n    timestamp_format: '%Y-%m-%d %H:%M:%S'\n    features:\n",
    );
    for i in 0..n {
        doc.push_str(&format!(
            "      - {{name: dport_{0}, pattern: 'dst port {0}\\b'}}\n",
            20 + 17 * i
        ));
    }
    load_config(&doc).expect("bench config loads")
}

/// About `target_bytes` of synthetic log text, 300 lines per log-second.
pub fn netflow_corpus(target_bytes: usize, n_features: usize, seed: u64) -> Vec<u8> {
    let mut rng = seeded(seed);
    let t0 = Utc.with_ymd_and_hms(2016, 8, 1, 0, 0, 0).unwrap();
    let mut data = Vec::with_capacity(target_bytes + 256);
    let mut line_no = 0i64;
    while data.len() < target_bytes {
        let ts = t0 + Duration::seconds(line_no / 300);
        let port = if rng.random_range(0..10) < 7 {
            20 + 17 * rng.random_range(0..n_features as u32)
        } else {
            rng.random_range(49152..65535)
        };
        data.extend_from_slice(
            format!(
                "{} permit tcp src 10.{}.{}.{} dst 172.16.{}.{} dst port {} bytes {}\n",
                ts.format("%Y-%m-%d %H:%M:%S"),
                rng.random_range(0..255),
                rng.random_range(0..255),
                rng.random_range(1..255),
                rng.random_range(0..255),
                rng.random_range(1..255),
                port,
                rng.random_range(40..64000)
            )
            .as_bytes(),
        );
        line_no += 1;
    }
    data
}

/// Random count rows mimicking a fused observation matrix.
pub fn count_rows(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(0..40) as f64).collect())
        .collect()
}
