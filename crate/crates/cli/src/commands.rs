//! Implementations of the eight subcommands.
//!
//! Machine-readable results go to stdout as one JSON document per run;
//! progress notes go to stderr. Every output file is written from an
//! in-memory byte buffer so a run either produces a complete artifact or
//! none at all, and reruns with the same config and seed are byte-identical.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ftind_core::calibration::{
    calibrate_dataset, decode, load_calibration, save_calibration, CalReport, Calibration,
    CalibrationOptions,
};
use ftind_core::coil::{inductance_with_target, TargetCoupling};
use ftind_core::config::sha256_hex;
use ftind_core::fitting::{fit_nls, FitFamily, FitModel, FitOptions};
use ftind_core::metrics::{
    crosstalk_matrix, full_scale_error, quantization_levels, resolution_from_noise, AxisRanges,
    EvalReport,
};
use ftind_core::synth::{
    calibration_schedule, generate_dataset, NoiseModel, Wrench, AXIS_NAMES,
};
use ftind_core::wire::{
    dataset_to_frames, ingest_csv_path, read_frames_auto, replay, write_log, RawFrame,
    MAX_REPLAY_RATE_HZ,
};
use ftind_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::runconfig::{load_run_config, RunConfig};
use crate::{
    CalibrateArgs, DecodeArgs, DemoArgs, EvaluateArgs, FamilyArg, FitArgs, ReplayArgs, ReportArgs,
    SimulateArgs, SinkArg,
};

/// Number of samples in each simulated coil response curve.
const CURVE_POINTS: usize = 200;
/// Gap sweep bounds for the response curves, millimetres.
const CURVE_GAP_MM: (f64, f64) = (0.05, 2.5);

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

/// One file recorded in a manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of a simulate run: the seed, the config that produced it, and a
/// checksum per written file. Deliberately carries no timestamps so reruns
/// are byte-identical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_sha256: String,
    pub model_sha256: String,
    pub files: Vec<ManifestEntry>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn entry_for(name: &str, bytes: &[u8]) -> ManifestEntry {
    ManifestEntry { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) }
}

fn json_pretty<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn print_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn progress(msg: &str) {
    eprintln!("{msg}");
}

/// Reads a two-column `x,y` CSV.
fn read_xy_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(CliError::Runtime(format!(
            "{}: expected header 'x,y', got '{}'",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let parse = |field: &str| -> CliResult<f64> {
            field.trim().parse::<f64>().map_err(|e| {
                CliError::Runtime(format!("{}: row {}: {e}", path.display(), i + 2))
            })
        };
        if record.len() != 2 {
            return Err(CliError::Runtime(format!(
                "{}: row {}: expected 2 fields, got {}",
                path.display(),
                i + 2,
                record.len()
            )));
        }
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    Ok((xs, ys))
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

/// Loads a calibration, treating a format or geometry mismatch as a config
/// error and corruption as a runtime error.
fn load_calibration_file(path: &Path, expected_geometry: Option<&str>) -> CliResult<Calibration> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    load_calibration(file, expected_geometry).map_err(|e| match e {
        CoreError::VersionMismatch(_) => CliError::Config(format!("{}: {e}", path.display())),
        other => CliError::Runtime(format!("{}: {other}", path.display())),
    })
}

fn counts_of(frames: &[RawFrame]) -> Vec<[u32; 6]> {
    frames.iter().map(|f| f.channels).collect()
}

/// Renders one coil response curve as a fit-ready `x,y` CSV: x is the plate
/// gap in mm, y the coil inductance in µH.
fn curve_csv(geometry: &ftind_core::coil::CoilGeometry, beta: f64) -> CliResult<String> {
    let (lo, hi) = CURVE_GAP_MM;
    let mut out = String::from("x,y\n");
    for i in 0..CURVE_POINTS {
        let gap = if i + 1 == CURVE_POINTS {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64
        };
        let l = inductance_with_target(geometry, &TargetCoupling { gap, coupling_scale: beta })
            .map_err(CliError::runtime)?;
        out.push_str(&format!("{},{}\n", gap, l * 1e6));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = load_run_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out_dir = PathBuf::from(&args.out);
    simulate_into(&cfg, &out_dir, args.strict).map(|manifest| {
        if let Ok(text) = json_pretty(&manifest) {
            let _ = print_stdout(&text);
        }
    })
}

/// Runs a simulation into `dir` and returns the manifest.
pub fn simulate_into(cfg: &RunConfig, dir: &Path, strict: bool) -> CliResult<Manifest> {
    progress("simulate: building forward model");
    let model = cfg.build_model()?;

    let schedule = calibration_schedule(
        cfg.rate_hz,
        cfg.schedule.unloaded_seconds,
        cfg.schedule.per_axis_seconds,
        cfg.schedule.peak_fraction,
    );
    if strict {
        for (i, w) in schedule.iter().enumerate() {
            let v = w.to_vector();
            for axis in 0..6 {
                let limit = cfg.ranges[axis] / 2.0;
                if v[axis].abs() > limit {
                    return Err(CliError::Config(format!(
                        "schedule sample {i} drives {} to {} which exceeds the \
                         configured limit ±{limit}",
                        AXIS_NAMES[axis], v[axis]
                    )));
                }
            }
        }
    }

    progress(&format!("simulate: synthesizing {} samples", schedule.len()));
    let noise = NoiseModel {
        count_sigma: cfg.noise.count_sigma,
        drift_per_second: cfg.noise.drift_per_second,
    };
    let dataset = generate_dataset(&schedule, &model, &noise, cfg.rate_hz, cfg.seed)?;

    let mut csv_bytes = Vec::new();
    dataset.write_csv(&mut csv_bytes)?;
    let mut log_bytes = Vec::new();
    write_log(&dataset_to_frames(&dataset), &mut log_bytes)?;

    let curve_vertical = curve_csv(&model.channels[0].geometry, cfg.coupling_scale)?;
    let curve_horizontal = curve_csv(&model.channels[3].geometry, cfg.coupling_scale)?;
    let config_json = json_pretty(cfg)?;

    let named: [(&str, &[u8]); 5] = [
        ("config.json", config_json.as_bytes()),
        ("curve_horizontal.csv", curve_horizontal.as_bytes()),
        ("curve_vertical.csv", curve_vertical.as_bytes()),
        ("dataset.csv", &csv_bytes),
        ("dataset.ftlog", &log_bytes),
    ];
    let manifest = Manifest {
        seed: cfg.seed,
        config_sha256: sha256_hex(config_json.as_bytes()),
        model_sha256: cfg.model_hash()?,
        files: named.iter().map(|(n, b)| entry_for(n, b)).collect(),
    };
    for (name, bytes) in named {
        write_file(dir, name, bytes)?;
    }
    write_file(dir, "manifest.json", json_pretty(&manifest)?.as_bytes())?;
    progress(&format!("simulate: wrote {} files to {}", named.len() + 1, dir.display()));
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

/// One row of the family comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub n_params: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linearity_pct: Option<f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn fit_row(family: FitFamily, xs: &[f64], ys: &[f64]) -> (FitRow, Option<FitModel>) {
    match fit_nls(family, xs, ys, None, &FitOptions::default()) {
        Ok((model, report)) => (
            FitRow {
                model: family.name().to_string(),
                n_params: family.coefficient_len(),
                coefficients: Some(model.coefficients.clone()),
                rmse: Some(report.rmse),
                r2: report.r_squared,
                linearity_pct: Some(report.linearity_error_pct),
                converged: report.converged,
                error: None,
            },
            Some(model),
        ),
        Err(e) => (
            FitRow {
                model: family.name().to_string(),
                n_params: family.coefficient_len(),
                coefficients: None,
                rmse: None,
                r2: None,
                linearity_pct: None,
                converged: false,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let input = PathBuf::from(&args.input);
    let (xs, ys) = read_xy_csv(&input)?;
    progress(&format!("fit: {} samples from {}", xs.len(), input.display()));

    let families: Vec<FitFamily> = match args.family {
        FamilyArg::All => FitFamily::ALL.to_vec(),
        single => vec![single.to_family().expect("non-all variant maps to a family")],
    };
    let mut rows = Vec::new();
    for family in &families {
        let (row, model) = fit_row(*family, &xs, &ys);
        if families.len() == 1 {
            if let Some(err) = &row.error {
                return Err(CliError::Runtime(format!("{} fit failed: {err}", row.model)));
            }
            let _ = model;
        }
        rows.push(row);
    }
    if let Some(dir) = &args.out {
        let dir = PathBuf::from(dir);
        for row in &rows {
            write_file(&dir, &format!("fit_{}.json", row.model), json_pretty(row)?.as_bytes())?;
        }
    }
    if rows.len() == 1 {
        print_stdout(&json_pretty(&rows[0])?)
    } else {
        print_stdout(&json_pretty(&rows)?)
    }
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

pub fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let cfg = load_run_config(args.config.as_deref())?;
    let out_dir = PathBuf::from(&args.out);
    let input = PathBuf::from(&args.input);
    let report = calibrate_into(&cfg, &input, &out_dir)?;
    print_stdout(&json_pretty(&report)?)
}

pub fn calibrate_into(cfg: &RunConfig, input: &Path, dir: &Path) -> CliResult<CalReport> {
    let geometry_hash = cfg.model_hash()?;
    let (dataset, stats) = ingest_csv_path(input).map_err(CliError::runtime)?;
    progress(&format!("calibrate: {} rows at {} Hz", stats.rows, dataset.rate));
    let opts = CalibrationOptions { geometry_hash, ..CalibrationOptions::default() };
    let (cal, report) = calibrate_dataset(&dataset, &opts).map_err(CliError::runtime)?;
    let mut bytes = Vec::new();
    save_calibration(&cal, &mut bytes).map_err(CliError::runtime)?;
    write_file(dir, "calibration.ftcal", &bytes)?;
    write_file(dir, "calibration_report.json", json_pretty(&report)?.as_bytes())?;
    progress(&format!(
        "calibrate: converged={} weighted_rmse={:.3e}",
        report.converged, report.weighted_rmse
    ));
    Ok(report)
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodeSummary {
    pub rows: usize,
    pub extrapolated: usize,
}

pub fn cmd_decode(args: &DecodeArgs) -> CliResult<()> {
    let cfg = load_run_config(args.config.as_deref())?;
    let input = PathBuf::from(&args.input);
    let calibration = PathBuf::from(&args.calibration);
    let out_dir = PathBuf::from(&args.out);
    let summary = decode_into(&cfg, &input, &calibration, &out_dir)?;
    print_stdout(&json_pretty(&summary)?)
}

pub fn decode_into(
    cfg: &RunConfig,
    input: &Path,
    calibration: &Path,
    dir: &Path,
) -> CliResult<DecodeSummary> {
    let hash = cfg.model_hash()?;
    let cal = load_calibration_file(calibration, Some(&hash))?;
    let frames = read_frames_auto(input).map_err(CliError::runtime)?;
    let decoded = decode(&cal, &counts_of(&frames)).map_err(CliError::runtime)?;

    let mut csv = String::from("t_us,fx,fy,fz,tx,ty,tz,extrapolated\n");
    let mut extrapolated = 0usize;
    for (frame, sample) in frames.iter().zip(&decoded) {
        let w = sample.wrench;
        extrapolated += sample.extrapolated as usize;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            frame.timestamp_us, w.fx, w.fy, w.fz, w.tx, w.ty, w.tz, sample.extrapolated as u8
        ));
    }
    write_file(dir, "decoded.csv", csv.as_bytes())?;
    progress(&format!("decode: {} rows, {} extrapolated", decoded.len(), extrapolated));
    Ok(DecodeSummary { rows: decoded.len(), extrapolated })
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Index range (inclusive) of the block where only `axis` is loaded.
fn single_axis_block(reference: &[Wrench], axis: usize) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    for (i, w) in reference.iter().enumerate() {
        let v = w.to_vector();
        let only_this = v[axis] != 0.0
            && (0..6).all(|a| a == axis || v[a] == 0.0);
        if only_this {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    Some((first?, last?))
}

fn leading_zeros(reference: &[Wrench]) -> usize {
    reference.iter().take_while(|w| w.is_zero()).count()
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let mut cfg = load_run_config(args.config.as_deref())?;
    if let Some(k) = args.sigma_multiplier {
        cfg.sigma_multiplier = k;
    }
    cfg.validate()?;
    let input = PathBuf::from(&args.input);
    let calibration = PathBuf::from(&args.calibration);
    let out_dir = PathBuf::from(&args.out);
    let report = evaluate_into(&cfg, &input, &calibration, &out_dir)?;
    print_stdout(&json_pretty(&report)?)
}

pub fn evaluate_into(
    cfg: &RunConfig,
    input: &Path,
    calibration: &Path,
    dir: &Path,
) -> CliResult<EvalReport> {
    let hash = cfg.model_hash()?;
    let cal = load_calibration_file(calibration, Some(&hash))?;
    let (dataset, _) = ingest_csv_path(input).map_err(CliError::runtime)?;
    let truth: Vec<Wrench> = dataset.rows.iter().map(|r| r.wrench).collect();
    let counts: Vec<[u32; 6]> = dataset.rows.iter().map(|r| r.channels).collect();
    let decoded: Vec<Wrench> = decode(&cal, &counts)
        .map_err(CliError::runtime)?
        .iter()
        .map(|s| s.wrench)
        .collect();

    let ranges = AxisRanges { spans: cfg.ranges };
    let full_scale = full_scale_error(&decoded, &truth, &ranges).map_err(CliError::runtime)?;

    // Resolution from the unloaded hold at the start of the dataset.
    let prefix = leading_zeros(&truth);
    let mut resolution = None;
    let mut quantization = None;
    if prefix >= 2 {
        let mut res = [0.0; 6];
        for axis in 0..6 {
            let series: Vec<f64> =
                decoded[..prefix].iter().map(|w| w.to_vector()[axis]).collect();
            res[axis] = resolution_from_noise(&series, cfg.sigma_multiplier)
                .map_err(CliError::runtime)?;
        }
        if res.iter().all(|r| *r > 0.0) {
            let mut levels = [0u64; 6];
            for axis in 0..6 {
                levels[axis] = quantization_levels(cfg.ranges[axis], res[axis])
                    .map_err(CliError::runtime)?;
            }
            quantization = Some(levels);
        }
        resolution = Some(res);
    }

    // Crosstalk from the per-axis excitation blocks, when all six exist.
    let mut crosstalk = None;
    let blocks: Vec<Option<(usize, usize)>> =
        (0..6).map(|axis| single_axis_block(&truth, axis)).collect();
    if blocks.iter().all(Option::is_some) && prefix > 0 {
        let runs: Vec<Vec<Wrench>> = blocks
            .iter()
            .map(|b| {
                let (first, last) = b.unwrap();
                let mut run: Vec<Wrench> = decoded[..prefix].to_vec();
                run.extend_from_slice(&decoded[first..=last]);
                run
            })
            .collect();
        crosstalk =
            Some(crosstalk_matrix(&runs, &ranges, prefix).map_err(CliError::runtime)?);
    }

    let report = EvalReport {
        ranges,
        full_scale,
        sigma_multiplier: resolution.is_some().then_some(cfg.sigma_multiplier),
        resolution,
        quantization_levels: quantization,
        crosstalk,
    };
    write_file(dir, "evaluation.json", json_pretty(&report)?.as_bytes())?;
    progress(&format!(
        "evaluate: {} rows, prefix {}, crosstalk {}",
        truth.len(),
        prefix,
        if report.crosstalk.is_some() { "yes" } else { "no" }
    ));
    Ok(report)
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

pub fn cmd_replay(args: &ReplayArgs) -> CliResult<()> {
    if !(1.0..=MAX_REPLAY_RATE_HZ).contains(&args.rate) {
        return Err(CliError::Config(format!(
            "rate {} Hz out of range [1, {MAX_REPLAY_RATE_HZ}]",
            args.rate
        )));
    }
    let input = PathBuf::from(&args.input);
    let frames = read_frames_auto(&input).map_err(CliError::runtime)?;
    progress(&format!("replay: {} frames at {} Hz", frames.len(), args.rate));

    let stats = match args.sink {
        SinkArg::Null => replay(&frames, args.rate, |_| {}).map_err(CliError::runtime)?,
        SinkArg::Stdout => {
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            let stats = replay(&frames, args.rate, |f| {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    f.seq,
                    f.timestamp_us,
                    f.channels[0],
                    f.channels[1],
                    f.channels[2],
                    f.channels[3],
                    f.channels[4],
                    f.channels[5]
                );
            })
            .map_err(CliError::runtime)?;
            out.flush()?;
            drop(out);
            stats
        }
        SinkArg::File => {
            let mut received: Vec<RawFrame> = Vec::with_capacity(frames.len());
            let stats = replay(&frames, args.rate, |f| received.push(f.clone()))
                .map_err(CliError::runtime)?;
            let mut bytes = Vec::new();
            write_log(&received, &mut bytes).map_err(CliError::runtime)?;
            write_file(Path::new(&args.out), "replayed.ftlog", &bytes)?;
            stats
        }
    };
    print_stdout(&json_pretty(&stats)?)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the evaluation tables; returns (name, bytes) pairs.
fn eval_tables(report: &EvalReport) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();

    let mut fs_csv = String::from("axis,mean_pct,std_pct,max_pct,rmse\n");
    for (axis, stats) in report.full_scale.iter().enumerate() {
        fs_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            AXIS_NAMES[axis], stats.mean_pct, stats.std_pct, stats.max_pct, stats.rmse
        ));
    }
    files.push(("fullscale_error.csv".to_string(), fs_csv.into_bytes()));

    if let Some(res) = &report.resolution {
        let mut csv = String::from("axis,span,resolution,quantization_levels\n");
        for axis in 0..6 {
            let levels = report
                .quantization_levels
                .map(|l| l[axis].to_string())
                .unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{}\n",
                AXIS_NAMES[axis], report.ranges.spans[axis], res[axis], levels
            ));
        }
        files.push(("resolution.csv".to_string(), csv.into_bytes()));
    }

    if let Some(ct) = &report.crosstalk {
        let mut csv = String::from("excited_axis,fx,fy,fz,tx,ty,tz\n");
        for (axis, row) in ct.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                AXIS_NAMES[axis], row[0], row[1], row[2], row[3], row[4], row[5]
            ));
        }
        files.push(("crosstalk.csv".to_string(), csv.into_bytes()));
    }
    files
}

/// Fits all four families to the curve and renders the comparison table plus
/// one observed-vs-fitted series per family.
fn curve_tables(xs: &[f64], ys: &[f64]) -> CliResult<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    let mut table = String::from("model,n_params,rmse,r2,linearity_pct\n");
    for family in FitFamily::ALL {
        let (row, model) = fit_row(family, xs, ys);
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            row.model,
            row.n_params,
            fmt_opt(row.rmse),
            fmt_opt(row.r2),
            fmt_opt(row.linearity_pct)
        ));
        if let Some(model) = model {
            let fitted = model.evaluate_many(xs).map_err(CliError::runtime)?;
            let mut series = String::from("x,y,y_fit\n");
            for i in 0..xs.len() {
                series.push_str(&format!("{},{},{}\n", xs[i], ys[i], fitted[i]));
            }
            files.push((format!("curve_fit_{}.csv", row.model), series.into_bytes()));
        } else {
            progress(&format!(
                "report: {} fit failed ({}), series omitted",
                row.model,
                row.error.as_deref().unwrap_or("unknown")
            ));
        }
    }
    files.insert(0, ("fit_comparison.csv".to_string(), table.into_bytes()));
    Ok(files)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportSummary {
    pub written: Vec<ManifestEntry>,
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let out_dir = PathBuf::from(&args.out);
    let summary = report_into(
        args.eval.as_deref().map(Path::new),
        args.curve.as_deref().map(Path::new),
        &out_dir,
    )?;
    print_stdout(&json_pretty(&summary)?)
}

pub fn report_into(
    eval: Option<&Path>,
    curve: Option<&Path>,
    dir: &Path,
) -> CliResult<ReportSummary> {
    if eval.is_none() && curve.is_none() {
        return Err(CliError::Config(
            "nothing to report: provide --eval and/or --curve".into(),
        ));
    }
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if let Some(path) = eval {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let report: EvalReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        files.extend(eval_tables(&report));
    }
    if let Some(path) = curve {
        let (xs, ys) = read_xy_csv(path)
            .map_err(|e| CliError::Config(format!("unusable curve input: {e}")))?;
        if xs.is_empty() {
            return Err(CliError::Config(format!("{}: curve file has no rows", path.display())));
        }
        files.extend(curve_tables(&xs, &ys)?);
    }
    let mut written = Vec::new();
    for (name, bytes) in &files {
        write_file(dir, name, bytes)?;
        written.push(entry_for(name, bytes));
    }
    written.sort_by(|a, b| a.name.cmp(&b.name));
    progress(&format!("report: wrote {} tables to {}", written.len(), dir.display()));
    Ok(ReportSummary { written })
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoSummary {
    pub manifest: Manifest,
    pub calibration: CalReport,
    pub evaluation: EvalReport,
    pub report_files: Vec<ManifestEntry>,
}

pub fn cmd_demo(args: &DemoArgs) -> CliResult<()> {
    let mut cfg = load_run_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let dir = PathBuf::from(&args.out);

    progress("demo: [1/5] simulate");
    let manifest = simulate_into(&cfg, &dir, false)?;
    progress("demo: [2/5] calibrate");
    let calibration = calibrate_into(&cfg, &dir.join("dataset.csv"), &dir)?;
    progress("demo: [3/5] decode");
    let _ = decode_into(&cfg, &dir.join("dataset.ftlog"), &dir.join("calibration.ftcal"), &dir)?;
    progress("demo: [4/5] evaluate");
    let evaluation =
        evaluate_into(&cfg, &dir.join("dataset.csv"), &dir.join("calibration.ftcal"), &dir)?;
    progress("demo: [5/5] report");
    let report = report_into(
        Some(&dir.join("evaluation.json")),
        Some(&dir.join("curve_vertical.csv")),
        &dir.join("report"),
    )?;

    let summary = DemoSummary {
        manifest,
        calibration,
        evaluation,
        report_files: report.written,
    };
    write_file(&dir, "summary.json", json_pretty(&summary)?.as_bytes())?;
    print_stdout(&json_pretty(&summary)?)
}
