//! `mbda` — five-step anomaly detection over text logs.
//!
//! Subcommands mirror the pipeline steps and communicate through files:
//! per-source observation CSVs, a fused CSV, a JSON model file, monitor
//! CSVs, JSON-lines anomaly reports, and de-parsed raw log extracts.

mod manifest;
mod steps;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use manifest::Manifest;
use mbda_core::config::{load_config_file, PipelineConfig};
use mbda_core::error::{Error, Result};
use mbda_core::monitor::Phase;
use steps::*;

#[derive(Parser)]
#[command(
    name = "mbda",
    version,
    about = "Anomaly detection over text logs: parse, fuse, calibrate/monitor, diagnose, de-parse"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw logs into per-interval feature counts, one CSV per source
    Parse(ParseArgs),
    /// Resample per-source observation CSVs to the common rate and fuse them
    Fuse(FuseArgs),
    /// Phase I: fit the PCA normality model, control limits and chart data
    Calibrate(CalibrateArgs),
    /// Phase II: score observations against a calibrated model
    Monitor(MonitorArgs),
    /// Univariate-Squared pre-diagnosis of an anomaly window
    Diagnose(DiagnoseArgs),
    /// Recover the raw log lines behind an anomaly, ranked by fscore
    Deparse(DeparseArgs),
    /// End to end: parse, fuse, calibrate or monitor, diagnose, de-parse
    Run(RunArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Pipeline configuration file
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (created if absent)
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raw log input, SOURCE=PATH; repeatable (gzip detected by extension)
    #[arg(long = "input", value_name = "SOURCE=PATH", required = true)]
    inputs: Vec<String>,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-source observation CSVs produced by `parse`
    #[arg(long = "input", value_name = "PATH", required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fused observation CSV
    #[arg(long = "input", value_name = "PATH")]
    input: PathBuf,
    /// Interval-start timestamps to exclude from the fit (Phase I iteration)
    #[arg(long, value_name = "TIMESTAMPS-FILE")]
    exclude: Option<PathBuf>,
    /// Anomalies to report from the calibration data
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Cluster count for the compressed monitoring chart
    #[arg(long, default_value_t = DEFAULT_MAX_CLUSTERS)]
    max_clusters: usize,
    /// Flag threshold for the with/without-outlier variance comparison
    #[arg(long, default_value_t = DEFAULT_POLLUTION_THRESHOLD)]
    pollution_threshold: f64,
    /// Report each anomalous interval separately
    #[arg(long)]
    no_coalesce: bool,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Calibrated model file
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Fused observation CSV
    #[arg(long = "input", value_name = "PATH")]
    input: PathBuf,
    /// Tscore weighting phase: 1 exploratory, 2 learning
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    phase: u8,
    /// Anomalies to report
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Report each anomalous interval separately
    #[arg(long)]
    no_coalesce: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Calibrated model file
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Fused observation CSV
    #[arg(long = "input", value_name = "PATH")]
    input: PathBuf,
    /// Anomaly window, half-open [START, END)
    #[arg(long, num_args = 2, value_names = ["START", "END"], required = true)]
    window: Vec<String>,
}

#[derive(Args)]
struct DeparseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raw log input, SOURCE=PATH; repeatable
    #[arg(long = "input", value_name = "SOURCE=PATH", required = true)]
    inputs: Vec<String>,
    /// Diagnosis file carrying the selected features (and default window)
    #[arg(long, value_name = "PATH")]
    features: PathBuf,
    /// Anomaly window override, half-open [START, END)
    #[arg(long, num_args = 2, value_names = ["START", "END"])]
    window: Option<Vec<String>>,
    /// Per-source cap on retrieved lines (default from configuration)
    #[arg(long, value_name = "INT")]
    threshold: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raw log input, SOURCE=PATH; repeatable
    #[arg(long = "input", value_name = "SOURCE=PATH", required = true)]
    inputs: Vec<String>,
    /// 1: calibrate on this data (exploratory); 2: monitor against --model
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    phase: u8,
    /// Calibrated model file, required with --phase 2
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Anomalies to diagnose and de-parse
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Per-source cap on retrieved lines (default from configuration)
    #[arg(long, value_name = "INT")]
    threshold: Option<usize>,
    /// Cluster count for the compressed monitoring chart
    #[arg(long, default_value_t = DEFAULT_MAX_CLUSTERS)]
    max_clusters: usize,
    /// Report each anomalous interval separately
    #[arg(long)]
    no_coalesce: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mbda: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Monitor(args) => cmd_monitor(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Deparse(args) => cmd_deparse(args),
        Command::Run(args) => cmd_run(args),
    }
}

fn load_common(common: &CommonArgs, command: &str) -> Result<(PipelineConfig, Manifest)> {
    let config = load_config_file(&common.config)?;
    ensure_out_dir(&common.out)?;
    let mut manifest = Manifest::new(command, &config.digest);
    manifest.input(&common.config);
    Ok((config, manifest))
}

fn parse_window(window: &[String]) -> Result<mbda_core::diagnosis::Window> {
    let start = parse_instant(&window[0])?;
    let end = parse_instant(&window[1])?;
    if end <= start {
        return Err(Error::Config(format!(
            "window end {} is not after start {}",
            window[1], window[0]
        )));
    }
    Ok((start, end))
}

fn cmd_parse(args: ParseArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "parse")?;
    let inputs = group_inputs(&config, &args.inputs)?;
    for (_, paths) in &inputs {
        for p in paths {
            manifest.input(p);
        }
    }
    let parsed = manifest.step("parse", || run_parse(&config, &inputs))?;
    for (source, st) in &parsed.stats {
        eprintln!(
            "{}: {} lines, {} unparseable, {} intervals",
            source, st.lines_read, st.lines_unparseable, st.intervals
        );
    }
    let written = write_parse_outputs(&args.common.out, &parsed)?;
    for p in &written {
        manifest.output(p);
    }
    record_parse_counts(&mut manifest, &parsed);
    manifest.write(&args.common.out)?;
    Ok(())
}

fn record_parse_counts(manifest: &mut Manifest, parsed: &ParseOutput) {
    let (mut lines, mut unparseable, mut intervals) = (0, 0, 0);
    for st in parsed.stats.values() {
        lines += st.lines_read;
        unparseable += st.lines_unparseable;
        intervals += st.intervals;
    }
    manifest.count("lines_read", lines);
    manifest.count("lines_unparseable", unparseable);
    manifest.count("intervals", intervals);
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "fuse")?;
    let mut streams = Vec::new();
    for path in &args.inputs {
        manifest.input(path);
        streams.push(read_stream_file(path, &config)?);
    }
    let fused = manifest.step("fuse", || fuse_streams(&config, &streams))?;
    manifest.count("intervals", fused.n_rows() as u64);
    manifest.count("features", fused.n_features() as u64);
    let path = write_fused(&args.common.out, &fused)?;
    manifest.output(&path);
    manifest.write(&args.common.out)?;
    Ok(())
}

fn write_calibration_outputs(
    out: &std::path::Path,
    config: &PipelineConfig,
    calibration: &Calibration,
    top_k: usize,
    max_clusters: usize,
    coalesce: bool,
    manifest: &mut Manifest,
) -> Result<Vec<mbda_core::monitor::AnomalyWindow>> {
    let model_path = out.join("model.json");
    calibration.saved.save(&model_path)?;
    manifest.output(&model_path);

    let cal_path = out.join("calibration.csv");
    write_monitor_csv(&cal_path, &calibration.records)?;
    manifest.output(&cal_path);

    let clusters = mbda_core::monitor::cluster_plot(
        &calibration.records,
        &calibration.saved.limits,
        max_clusters,
        CLUSTER_MEMBER_CAP,
    );
    let clusters_path = out.join("clusters.csv");
    write_clusters_csv(&clusters_path, &clusters)?;
    manifest.output(&clusters_path);

    let windows = triage_windows(
        &calibration.records,
        top_k,
        config.common_interval_seconds,
        coalesce,
    );
    let anomalies_path = out.join("anomalies.jsonl");
    write_anomalies_jsonl(&anomalies_path, &windows)?;
    manifest.output(&anomalies_path);

    if let Some(check) = &calibration.variance_check {
        let path = out.join("variance_check.json");
        write_variance_check(&path, check)?;
        manifest.output(&path);
        if check.polluted {
            eprintln!(
                "warning: excluded outliers change per-PC variance by up to {:.1}% (threshold {:.0}%)",
                100.0 * check.max_relative_change,
                100.0 * check.threshold
            );
        }
    }

    manifest.count("observations", calibration.n_used);
    manifest.count("excluded", calibration.n_excluded);
    manifest.count("anomalies", windows.len() as u64);
    Ok(windows)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "calibrate")?;
    manifest.input(&args.input);
    let fused = read_fused(&args.input, &config)?;
    let exclude = match &args.exclude {
        Some(path) => {
            manifest.input(path);
            Some(read_exclude_file(path)?)
        }
        None => None,
    };
    let calibration = manifest.step("calibrate", || {
        run_calibrate(&config, &fused, exclude.as_ref(), args.pollution_threshold)
    })?;
    write_calibration_outputs(
        &args.common.out,
        &config,
        &calibration,
        args.top_k,
        args.max_clusters,
        !args.no_coalesce,
        &mut manifest,
    )?;
    manifest.write(&args.common.out)?;
    Ok(())
}

fn cmd_monitor(args: MonitorArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "monitor")?;
    manifest.input(&args.model);
    manifest.input(&args.input);
    let saved = mbda_core::model::SavedModel::load(&args.model)?;
    let fused = read_fused(&args.input, &config)?;
    let phase = if args.phase == 1 { Phase::One } else { Phase::Two };
    let records = manifest.step("monitor", || run_monitor(&config, &saved, &fused, phase))?;

    let monitor_path = args.common.out.join("monitor.csv");
    write_monitor_csv(&monitor_path, &records)?;
    manifest.output(&monitor_path);

    let windows = triage_windows(
        &records,
        args.top_k,
        config.common_interval_seconds,
        !args.no_coalesce,
    );
    let anomalies_path = args.common.out.join("anomalies.jsonl");
    write_anomalies_jsonl(&anomalies_path, &windows)?;
    manifest.output(&anomalies_path);

    manifest.count("observations", records.len() as u64);
    manifest.count("anomalies", windows.len() as u64);
    manifest.write(&args.common.out)?;
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "diagnose")?;
    manifest.input(&args.model);
    manifest.input(&args.input);
    let saved = mbda_core::model::SavedModel::load(&args.model)?;
    let fused = read_fused(&args.input, &config)?;
    let window = parse_window(&args.window)?;
    let diag = manifest.step("diagnose", || {
        run_diagnose(&config, &saved.model.preprocess, &fused, window)
    })?;
    let written = write_diagnosis(&args.common.out, &diag)?;
    for p in &written {
        manifest.output(p);
    }
    manifest.count("selected_features", diag.selected.features.len() as u64);
    manifest.write(&args.common.out)?;
    Ok(())
}

fn cmd_deparse(args: DeparseArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "deparse")?;
    manifest.input(&args.features);
    let (file_window, selected) = read_diagnosis(&args.features)?;
    let window = match &args.window {
        Some(w) => parse_window(w)?,
        None => file_window,
    };
    let inputs = group_inputs(&config, &args.inputs)?;
    for (_, paths) in &inputs {
        for p in paths {
            manifest.input(p);
        }
    }
    let threshold = args.threshold.unwrap_or(config.deparse_threshold);
    let result = manifest.step("deparse", || {
        mbda_core::diagnosis::deparse_files(&config, &inputs, window, &selected, threshold)
    })?;
    if result.sources.iter().all(|s| s.lines_in_window == 0) {
        eprintln!(
            "notice: window {} .. {} matched no raw lines in the given inputs",
            format_ts(window.0),
            format_ts(window.1)
        );
    }
    let written = write_deparse(&args.common.out, &result, &selected, threshold)?;
    for p in &written {
        manifest.output(p);
    }
    manifest.count("lines_retrieved", result.total_lines);
    manifest.count("log_types", result.distinct_signatures as u64);
    manifest.write(&args.common.out)?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (config, mut manifest) = load_common(&args.common, "run")?;
    let out = &args.common.out;
    let inputs = group_inputs(&config, &args.inputs)?;
    for (_, paths) in &inputs {
        for p in paths {
            manifest.input(p);
        }
    }

    // step 1: parse
    let parsed = manifest.step("parse", || run_parse(&config, &inputs))?;
    record_parse_counts(&mut manifest, &parsed);
    for p in write_parse_outputs(out, &parsed)? {
        manifest.output(&p);
    }

    // step 2: fuse
    let fused = manifest.step("fuse", || fuse_streams(&config, &parsed.streams))?;
    manifest.output(&write_fused(out, &fused)?);

    // step 3: detect (Phase I calibrates, Phase II monitors)
    let threshold = args.threshold.unwrap_or(config.deparse_threshold);
    let coalesce = !args.no_coalesce;
    let (params, windows) = if args.phase == 1 {
        let calibration = manifest.step("calibrate", || {
            run_calibrate(&config, &fused, None, DEFAULT_POLLUTION_THRESHOLD)
        })?;
        let windows = write_calibration_outputs(
            out,
            &config,
            &calibration,
            args.top_k,
            args.max_clusters,
            coalesce,
            &mut manifest,
        )?;
        (calibration.saved.model.preprocess.clone(), windows)
    } else {
        let model_path = args.model.as_ref().ok_or_else(|| {
            Error::Config("--phase 2 requires --model pointing at a calibrated model".into())
        })?;
        manifest.input(model_path);
        let saved = mbda_core::model::SavedModel::load(model_path)?;
        let records = manifest.step("monitor", || run_monitor(&config, &saved, &fused, Phase::Two))?;
        let monitor_path = out.join("monitor.csv");
        write_monitor_csv(&monitor_path, &records)?;
        manifest.output(&monitor_path);
        let windows = triage_windows(&records, args.top_k, config.common_interval_seconds, coalesce);
        let anomalies_path = out.join("anomalies.jsonl");
        write_anomalies_jsonl(&anomalies_path, &windows)?;
        manifest.output(&anomalies_path);
        manifest.count("observations", records.len() as u64);
        manifest.count("anomalies", windows.len() as u64);
        (saved.model.preprocess.clone(), windows)
    };

    // steps 4 and 5 per anomaly: diagnose, then de-parse
    for window in &windows {
        let dir = out.join(format!("anomaly_{}", window.rank));
        ensure_out_dir(&dir)?;
        let diag = manifest.step("diagnose", || {
            run_diagnose(&config, &params, &fused, (window.start, window.end))
        })?;
        for p in write_diagnosis(&dir, &diag)? {
            manifest.output(&p);
        }
        let result = manifest.step("deparse", || {
            mbda_core::diagnosis::deparse_files(
                &config,
                &inputs,
                (window.start, window.end),
                &diag.selected,
                threshold,
            )
        })?;
        for p in write_deparse(&dir, &result, &diag.selected, threshold)? {
            manifest.output(&p);
        }
        eprintln!(
            "anomaly {}: {} .. {} tscore {:.2}, {} features, {} lines in {} log types",
            window.rank,
            format_ts(window.start),
            format_ts(window.end),
            window.tscore_max,
            diag.selected.features.len(),
            result.total_lines,
            result.distinct_signatures
        );
    }

    manifest.write(out)?;
    Ok(())
}
