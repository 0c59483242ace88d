//! Synthetic two-source scenario with a planted scan burst, plus helpers
//! for driving the `mbda` binary in tests.
#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::Path;
use std::process::Output;

pub const SCENARIO_CONFIG: &str = r#"
common_interval: 60
ucl_percentile: 0.99
components: {variance_fraction: 0.9}
deparse_threshold: 500
feature_selection: {relative: 0.1}
sources:
  - name: fw
    interval: 60
    timestamp_pattern: '^(\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2})'
    timestamp_format: '%Y-%m-%d %H:%M:%S'
    features:
      - {name: permit, pattern: 'permit'}
      - {name: deny, pattern: 'deny'}
      - {name: dport_80, pattern: 'dst port 80\b'}
      - {name: dport_443, pattern: 'dst port 443\b'}
      - {name: dport_53, pattern: 'dst port 53\b'}
      - {name: dport_25, pattern: 'dst port 25\b'}
      - {name: dport_telnet, pattern: 'dst port 23\b', weight: 8}
      - {name: syn_flag, pattern: 'flags SYN', weight: 6}
      - {name: scan_marker, pattern: 'scanburst', weight: 6}
  - name: ids
    interval: 60
    timestamp_pattern: '^(\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2})'
    timestamp_format: '%Y-%m-%d %H:%M:%S'
    features:
      - {name: alert, pattern: 'alert'}
      - {name: prio2, pattern: 'prio2'}
      - {name: prio3, pattern: 'prio3'}
      - {name: sig_http, pattern: 'sig=http_inspect'}
      - {name: sig_dns, pattern: 'sig=dns_query'}
      - {name: sig_smtp, pattern: 'sig=smtp_policy'}
      - {name: telnet_scan, pattern: 'sig=telnet_scan', weight: 8}
      - {name: prio1, pattern: 'prio1', weight: 4}
"#;

pub struct Scenario {
    pub fw_log: Vec<u8>,
    pub ids_log: Vec<u8>,
    /// Exact raw bytes of every planted attack line (without newline).
    pub planted: HashSet<Vec<u8>>,
    pub burst_start: DateTime<Utc>,
    /// Half-open window end.
    pub burst_end: DateTime<Utc>,
    pub n_intervals: usize,
}

fn fmt(ts: DateTime<Utc>) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

/// Stationary background traffic over `n_intervals` one-minute intervals
/// with a scan burst planted on three consecutive intervals starting at
/// `burst_at`. Planted lines carry tokens no background line contains.
pub fn synth_scenario(n_intervals: usize, burst_at: usize, seed: u64) -> Scenario {
    assert!(burst_at + 3 <= n_intervals);
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let t0 = Utc.with_ymd_and_hms(2016, 8, 1, 0, 0, 0).unwrap();
    let mut fw = Vec::new();
    let mut ids = Vec::new();
    let mut planted = HashSet::new();
    let mut serial = 0u64;

    for minute in 0..n_intervals {
        let base = t0 + Duration::minutes(minute as i64);
        let n_fw = if minute == 0 || minute + 1 == n_intervals {
            6
        } else {
            rng.random_range(4..=12)
        };
        for _ in 0..n_fw {
            let ts = base + Duration::seconds(rng.random_range(0..60));
            let action = if rng.random_range(0..10) < 2 { "deny" } else { "permit" };
            let port = [80u32, 443, 53, 25][rng.random_range(0..4)];
            fw.extend_from_slice(
                format!(
                    "{} {} tcp src 10.0.{}.{} dst 10.1.{}.{} dst port {} bytes {}\n",
                    fmt(ts),
                    action,
                    rng.random_range(0..32),
                    rng.random_range(1..255),
                    rng.random_range(0..8),
                    rng.random_range(1..255),
                    port,
                    rng.random_range(40..9000)
                )
                .as_bytes(),
            );
        }
        if minute == 0 || minute + 1 == n_intervals || rng.random_range(0..10) < 4 {
            let ts = base + Duration::seconds(rng.random_range(0..60));
            let prio = ["prio2", "prio3"][rng.random_range(0..2)];
            let sig = ["sig=http_inspect", "sig=dns_query", "sig=smtp_policy"][rng.random_range(0..3)];
            ids.extend_from_slice(
                format!(
                    "{} alert {} {} src 10.0.{}.{}\n",
                    fmt(ts),
                    prio,
                    sig,
                    rng.random_range(0..32),
                    rng.random_range(1..255)
                )
                .as_bytes(),
            );
        }
        if (burst_at..burst_at + 3).contains(&minute) {
            for _ in 0..20 {
                let ts = base + Duration::seconds(rng.random_range(0..60));
                let line = format!(
                    "{} block tcp src 6.6.6.6 dst 10.1.0.{} dst port 23 flags SYN scanburst id={}",
                    fmt(ts),
                    rng.random_range(1..255),
                    serial
                );
                serial += 1;
                planted.insert(line.clone().into_bytes());
                fw.extend_from_slice(line.as_bytes());
                fw.push(b'\n');
            }
            for _ in 0..15 {
                let ts = base + Duration::seconds(rng.random_range(0..60));
                let line = format!(
                    "{} event prio1 sig=telnet_scan src 6.6.6.6 target 10.1.0.{} id={}",
                    fmt(ts),
                    rng.random_range(1..255),
                    serial
                );
                serial += 1;
                planted.insert(line.clone().into_bytes());
                ids.extend_from_slice(line.as_bytes());
                ids.push(b'\n');
            }
        }
    }

    Scenario {
        fw_log: fw,
        ids_log: ids,
        planted,
        burst_start: t0 + Duration::minutes(burst_at as i64),
        burst_end: t0 + Duration::minutes(burst_at as i64 + 3),
        n_intervals,
    }
}

pub fn write_scenario(dir: &Path, scenario: &Scenario) {
    std::fs::write(dir.join("pipeline.yaml"), SCENARIO_CONFIG).unwrap();
    std::fs::write(dir.join("fw.log"), &scenario.fw_log).unwrap();
    std::fs::write(dir.join("ids.log"), &scenario.ids_log).unwrap();
}

/// Run the `mbda` binary with the given arguments.
pub fn mbda(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_mbda"))
        .args(args)
        .output()
        .expect("mbda binary runs")
}

pub fn mbda_ok(args: &[&str]) -> Output {
    let out = mbda(args);
    assert!(
        out.status.success(),
        "mbda {:?} failed with {:?}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Parse the retrieved lines of a `.deparsed.txt` file (fscore TAB raw).
pub fn read_deparsed(path: &Path) -> Vec<(usize, Vec<u8>)> {
    let bytes = std::fs::read(path).unwrap();
    let mut out = Vec::new();
    for line in bytes.split(|&b| b == b'\n') {
        if line.is_empty() {
            continue;
        }
        let tab = line.iter().position(|&b| b == b'\t').expect("fscore TAB raw");
        let fscore: usize = std::str::from_utf8(&line[..tab]).unwrap().parse().unwrap();
        out.push((fscore, line[tab + 1..].to_vec()));
    }
    out
}

/// First JSON-lines anomaly record of a report.
pub fn read_anomalies(path: &Path) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}
