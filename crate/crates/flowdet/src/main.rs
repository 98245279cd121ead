//! Command-line frontend: run detection over a flow sequence, evaluate masks
//! against ground truth, generate synthetic fixtures, and benchmark the
//! pipeline stages.
//!
//! Exit codes: 0 on success, 1 on input/data errors, 2 on internal errors.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flowdet::detector::{
    detect_frame_timed, extract_mask_with_norm, DetectorConfig, ForegroundMask, IntervalKind,
    IntervalState, ModelKind, ResidualNorm, ThresholdKind,
};
use flowdet::eval::{score_sequence, SequenceScore};
use flowdet::flow::{BackgroundModel, FlowField};
use flowdet::io::{load_manifest, read_flow, read_mask, write_flow, write_mask, SequenceManifest};
use flowdet::synth::{benchmark_suite, generate};

#[derive(Parser)]
#[command(
    name = "flowdet",
    version,
    about = "Optical-flow motion detection for moving cameras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect foreground over a flow sequence and write one mask per frame.
    Detect {
        /// Sequence manifest: lines of `<index> <flow-path> [<mask-path>]`.
        #[arg(long)]
        manifest: PathBuf,
        /// Detector configuration, line-delimited `key=value`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for masks and the run report.
        #[arg(long)]
        out: PathBuf,
        /// Base RNG seed; overrides the config file's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score predicted masks against ground truth.
    Eval {
        /// Directory of predicted `.pgm` masks.
        #[arg(long)]
        pred: PathBuf,
        /// Directory of ground-truth masks with matching file names.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Manifest whose mask column provides the ground truth.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Report file (default: `eval_report.txt` inside the prediction dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Materialize a synthetic benchmark preset as flow + mask files.
    Synth {
        /// Preset name: static | single-blob | multi-object | zooming.
        #[arg(long)]
        preset: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Base seed for the generated scenes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure per-stage pipeline times over a sequence.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of repetitions of the whole sequence.
        #[arg(long, default_value_t = 5)]
        reps: u32,
        /// Base RNG seed; overrides the config file's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Input/data problems exit 1; bugs and environment failures exit 2.
enum AppError {
    Input(String),
    Internal(String),
}

fn input<E: std::fmt::Display>(err: E) -> AppError {
    AppError::Input(err.to_string())
}

fn internal<E: std::fmt::Display>(err: E) -> AppError {
    AppError::Internal(err.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are not errors; usage problems are input errors.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Detect {
            manifest,
            config,
            out,
            seed,
        } => cmd_detect(&manifest, config.as_deref(), &out, seed),
        Command::Eval {
            pred,
            gt,
            manifest,
            out,
        } => cmd_eval(&pred, gt.as_deref(), manifest.as_deref(), out.as_deref()),
        Command::Synth { preset, out, seed } => cmd_synth(&preset, &out, seed),
        Command::Bench {
            manifest,
            config,
            reps,
            seed,
        } => cmd_bench(&manifest, config.as_deref(), reps, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ── Configuration file ──────────────────────────────────────────────────────

/// Parses the line-delimited `key=value` detector configuration. Unknown keys
/// are rejected so typos fail loudly instead of silently using defaults.
fn parse_config(text: &str) -> Result<DetectorConfig, String> {
    let mut cfg = DetectorConfig::default();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", line_no + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| format!("line {}: bad {what} value `{value}`", line_no + 1);
        match key {
            "alpha_s" => cfg.alpha_s = value.parse().map_err(|_| bad("alpha_s"))?,
            "alpha_1" => cfg.alpha_1 = value.parse().map_err(|_| bad("alpha_1"))?,
            "alpha_2" => cfg.alpha_2 = value.parse().map_err(|_| bad("alpha_2"))?,
            "k_min" => cfg.k_min = value.parse().map_err(|_| bad("k_min"))?,
            "k_max" => cfg.k_max = value.parse().map_err(|_| bad("k_max"))?,
            "piece_edge" => cfg.grid.piece_edge = value.parse().map_err(|_| bad("piece_edge"))?,
            "sample_fraction" => {
                cfg.grid.sample_fraction = value.parse().map_err(|_| bad("sample_fraction"))?
            }
            "ransac_iterations" => {
                cfg.ransac.iterations = value.parse().map_err(|_| bad("ransac_iterations"))?
            }
            "inlier_threshold" => {
                cfg.ransac.inlier_threshold_px =
                    value.parse().map_err(|_| bad("inlier_threshold"))?
            }
            "seed" => cfg.ransac.seed = value.parse().map_err(|_| bad("seed"))?,
            "model" => {
                cfg.model_kind = match value {
                    "quadratic" => ModelKind::Quadratic,
                    "linear" => ModelKind::Linear,
                    _ => return Err(bad("model")),
                }
            }
            "threshold" => {
                cfg.threshold_kind = if value == "adaptive" {
                    ThresholdKind::Adaptive
                } else if let Some(v) = value.strip_prefix("fixed:") {
                    ThresholdKind::Fixed(v.parse().map_err(|_| bad("threshold"))?)
                } else {
                    return Err(bad("threshold"));
                }
            }
            "interval" => {
                cfg.interval_kind = if value == "adaptive" {
                    IntervalKind::Adaptive
                } else if let Some(v) = value.strip_prefix("fixed:") {
                    IntervalKind::Fixed(v.parse().map_err(|_| bad("interval"))?)
                } else {
                    return Err(bad("interval"));
                }
            }
            "mask_norm" => {
                cfg.residual_norm = match value {
                    "l2" => ResidualNorm::L2,
                    "l1" => ResidualNorm::L1,
                    _ => return Err(bad("mask_norm")),
                }
            }
            other => return Err(format!("line {}: unknown key `{other}`", line_no + 1)),
        }
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &DetectorConfig) -> Result<(), String> {
    if cfg.alpha_s <= 0.0 {
        return Err("alpha_s must be positive".into());
    }
    if cfg.alpha_1 < 0.0 || cfg.alpha_2 < 0.0 {
        return Err("alpha_1 and alpha_2 must be non-negative".into());
    }
    if cfg.k_min < 1 || cfg.k_min > cfg.k_max {
        return Err("need 1 <= k_min <= k_max".into());
    }
    if cfg.grid.piece_edge < 1 {
        return Err("piece_edge must be at least 1".into());
    }
    if !(cfg.grid.sample_fraction > 0.0 && cfg.grid.sample_fraction <= 1.0) {
        return Err("sample_fraction must be in (0, 1]".into());
    }
    if cfg.ransac.iterations < 1 {
        return Err("ransac_iterations must be at least 1".into());
    }
    if cfg.ransac.inlier_threshold_px <= 0.0 {
        return Err("inlier_threshold must be positive".into());
    }
    if let ThresholdKind::Fixed(v) = cfg.threshold_kind {
        if v <= 0.0 {
            return Err("fixed threshold must be positive".into());
        }
    }
    Ok(())
}

/// Every config field in the format `parse_config` accepts, for the report
/// header (and for round-tripping configs).
fn config_lines(cfg: &DetectorConfig) -> Vec<(&'static str, String)> {
    vec![
        ("alpha_s", cfg.alpha_s.to_string()),
        ("alpha_1", cfg.alpha_1.to_string()),
        ("alpha_2", cfg.alpha_2.to_string()),
        ("k_min", cfg.k_min.to_string()),
        ("k_max", cfg.k_max.to_string()),
        ("piece_edge", cfg.grid.piece_edge.to_string()),
        ("sample_fraction", cfg.grid.sample_fraction.to_string()),
        ("ransac_iterations", cfg.ransac.iterations.to_string()),
        (
            "inlier_threshold",
            cfg.ransac.inlier_threshold_px.to_string(),
        ),
        ("seed", cfg.ransac.seed.to_string()),
        (
            "model",
            match cfg.model_kind {
                ModelKind::Quadratic => "quadratic".into(),
                ModelKind::Linear => "linear".into(),
            },
        ),
        (
            "threshold",
            match cfg.threshold_kind {
                ThresholdKind::Adaptive => "adaptive".into(),
                ThresholdKind::Fixed(v) => format!("fixed:{v}"),
            },
        ),
        (
            "interval",
            match cfg.interval_kind {
                IntervalKind::Adaptive => "adaptive".into(),
                IntervalKind::Fixed(k) => format!("fixed:{k}"),
            },
        ),
        (
            "mask_norm",
            match cfg.residual_norm {
                ResidualNorm::L2 => "l2".into(),
                ResidualNorm::L1 => "l1".into(),
            },
        ),
    ]
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<DetectorConfig, AppError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| input(format!("cannot read config {}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| input(format!("config {}: {e}", p.display())))?
        }
        None => DetectorConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.ransac.seed = seed;
    }
    Ok(cfg)
}

// ── detect ──────────────────────────────────────────────────────────────────

fn mask_file_name(frame_index: u64) -> String {
    format!("{frame_index:06}.pgm")
}

fn cmd_detect(
    manifest_path: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<(), AppError> {
    let manifest = load_manifest(manifest_path).map_err(input)?;
    if manifest.entries.is_empty() {
        return Err(input(format!(
            "empty sequence in {}",
            manifest_path.display()
        )));
    }
    let cfg = load_config(config_path, seed)?;
    let base_seed = cfg.ransac.seed;

    // Masks and report are staged in a temp dir and moved into place only
    // after the whole sequence succeeds, so failures leave nothing partial.
    let stage_parent = out_dir.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = stage_parent {
        fs::create_dir_all(parent).map_err(internal)?;
    }
    let staging = make_staging_dir(stage_parent.unwrap_or(Path::new(".")))?;

    let mut report = String::new();
    let _ = writeln!(report, "report=detect");
    let _ = writeln!(report, "manifest={}", manifest_path.display());
    let _ = writeln!(report, "frames={}", manifest.entries.len());
    for (key, value) in config_lines(&cfg) {
        let _ = writeln!(report, "config.{key}={value}");
    }

    let mut history: VecDeque<FlowField> = VecDeque::new();
    let mut state = IntervalState::new();
    let mut previous: Option<(BackgroundModel, f64)> = None;
    let mut predictions: Vec<ForegroundMask> = Vec::with_capacity(manifest.entries.len());

    for (position, entry) in manifest.entries.iter().enumerate() {
        let base_field = read_flow(&entry.flow_path)
            .map_err(|e| input(format!("{}: {e}", entry.flow_path.display())))?;
        history.push_back(base_field);
        if history.len() > cfg.k_max as usize {
            history.pop_front();
        }

        // The manifest provides interval-1 flow; longer intervals are
        // emulated by accumulating the most recent fields. This ignores
        // occlusion, so it is flagged per frame.
        let k_used = (state.k as usize).min(history.len());
        let field = history
            .iter()
            .rev()
            .take(k_used)
            .skip(1)
            .fold(history.back().unwrap().clone(), |acc, f| acc.accumulate(f));
        let composed = k_used > 1;

        let mut frame_cfg = cfg;
        frame_cfg.ransac.seed = base_seed.wrapping_add(position as u64);

        let _ = writeln!(report);
        let _ = writeln!(report, "frame={}", entry.frame_index);
        let _ = writeln!(report, "k={}", state.k);
        let _ = writeln!(report, "k_used={k_used}");
        let _ = writeln!(
            report,
            "flow_composition={}",
            if composed { "accumulated" } else { "direct" }
        );

        let mask = match detect_frame_timed(&field, &state, &frame_cfg) {
            Ok((result, next_state, timings)) => {
                state = next_state;
                previous = Some((result.model, result.threshold_used));
                let _ = writeln!(report, "fallback=false");
                let _ = writeln!(report, "threshold_used={}", result.threshold_used);
                let _ = writeln!(
                    report,
                    "mean_background_norm={}",
                    result.mean_background_norm
                );
                let _ = writeln!(report, "inlier_ratio={}", result.inlier_ratio);
                let _ = writeln!(report, "next_k={}", result.next_k);
                let _ = writeln!(report, "sampling_ms={:.3}", timings.sampling_ms);
                let _ = writeln!(report, "search_ms={:.3}", timings.search_ms);
                let _ = writeln!(report, "refit_ms={:.3}", timings.refit_ms);
                let _ = writeln!(report, "mask_ms={:.3}", timings.mask_ms);
                result.mask
            }
            Err(err) => {
                // Degenerate fit: reuse the previous frame's model and flag it.
                let Some((model, threshold)) = previous.as_ref() else {
                    return Err(input(format!(
                        "frame {}: {err} (no earlier model to fall back on)",
                        entry.frame_index
                    )));
                };
                let _ = writeln!(report, "fallback=true");
                let _ = writeln!(report, "fallback_reason={err}");
                let _ = writeln!(report, "threshold_used={threshold}");
                extract_mask_with_norm(&field, model, *threshold, cfg.residual_norm)
            }
        };

        let name = mask_file_name(entry.frame_index);
        write_mask(&mask, &staging.join(&name)).map_err(internal)?;
        let _ = writeln!(report, "mask={name}");
        predictions.push(mask);
    }

    if manifest.has_ground_truth() {
        let score = score_against_manifest(&predictions, &manifest)?;
        let _ = writeln!(report);
        append_score(&mut report, &score);
        print_score(&score);
    }

    fs::write(staging.join("report.txt"), &report).map_err(internal)?;

    fs::create_dir_all(out_dir).map_err(internal)?;
    for entry in fs::read_dir(&staging).map_err(internal)? {
        let entry = entry.map_err(internal)?;
        let target = out_dir.join(entry.file_name());
        fs::rename(entry.path(), &target).map_err(internal)?;
    }
    fs::remove_dir_all(&staging).ok();
    println!("wrote {} masks to {}", predictions.len(), out_dir.display());
    Ok(())
}

/// Fresh private staging directory; the caller moves files out on success.
/// Abandoned staging dirs from failed runs are cleaned up on reuse.
fn make_staging_dir(parent: &Path) -> Result<PathBuf, AppError> {
    let dir = parent.join(format!(".staging-{}", std::process::id()));
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(internal)?;
    }
    fs::create_dir_all(&dir).map_err(internal)?;
    Ok(dir)
}

fn score_against_manifest(
    predictions: &[ForegroundMask],
    manifest: &SequenceManifest,
) -> Result<SequenceScore, AppError> {
    let mut truths = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = entry
            .mask_path
            .as_ref()
            .expect("checked by has_ground_truth");
        truths.push(read_mask(path).map_err(|e| input(format!("{}: {e}", path.display())))?);
    }
    score_sequence(predictions, &truths).map_err(input)
}

fn append_score(report: &mut String, score: &SequenceScore) {
    let _ = writeln!(report, "j_mean={}", score.j_mean);
    let _ = writeln!(report, "j_recall={}", score.j_recall);
    let _ = writeln!(report, "j_decay={}", score.j_decay);
}

fn print_score(score: &SequenceScore) {
    println!("j_mean={}", score.j_mean);
    println!("j_recall={}", score.j_recall);
    println!("j_decay={}", score.j_decay);
}

// ── eval ────────────────────────────────────────────────────────────────────

fn cmd_eval(
    pred_dir: &Path,
    gt_dir: Option<&Path>,
    manifest_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let pairs: Vec<(PathBuf, PathBuf)> = match (gt_dir, manifest_path) {
        (Some(gt), None) => {
            let names = mask_names_in(pred_dir)?;
            if names.is_empty() {
                return Err(input(format!("no .pgm masks in {}", pred_dir.display())));
            }
            names
                .into_iter()
                .map(|name| {
                    let gt_path = gt.join(&name);
                    if !gt_path.exists() {
                        return Err(input(format!(
                            "missing ground-truth frame {}",
                            gt_path.display()
                        )));
                    }
                    Ok((pred_dir.join(&name), gt_path))
                })
                .collect::<Result<_, _>>()?
        }
        (None, Some(manifest_path)) => {
            let manifest = load_manifest(manifest_path).map_err(input)?;
            if !manifest.has_ground_truth() {
                return Err(input(format!(
                    "{} carries no ground-truth masks",
                    manifest_path.display()
                )));
            }
            manifest
                .entries
                .iter()
                .map(|entry| {
                    let pred = pred_dir.join(mask_file_name(entry.frame_index));
                    if !pred.exists() {
                        return Err(input(format!("missing predicted frame {}", pred.display())));
                    }
                    Ok((pred, entry.mask_path.clone().unwrap()))
                })
                .collect::<Result<_, _>>()?
        }
        _ => return Err(input("exactly one of --gt and --manifest is required")),
    };

    let mut predictions = Vec::with_capacity(pairs.len());
    let mut truths = Vec::with_capacity(pairs.len());
    for (pred_path, gt_path) in &pairs {
        predictions.push(
            read_mask(pred_path).map_err(|e| input(format!("{}: {e}", pred_path.display())))?,
        );
        truths.push(read_mask(gt_path).map_err(|e| input(format!("{}: {e}", gt_path.display())))?);
    }
    let score = score_sequence(&predictions, &truths).map_err(input)?;

    let mut report = String::new();
    let _ = writeln!(report, "report=eval");
    let _ = writeln!(report, "frames={}", pairs.len());
    append_score(&mut report, &score);
    for ((pred_path, _), iou) in pairs.iter().zip(&score.per_frame_iou) {
        let _ = writeln!(report);
        let _ = writeln!(
            report,
            "frame={}",
            pred_path.file_name().unwrap().to_string_lossy()
        );
        let _ = writeln!(report, "iou={iou}");
    }
    let report_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| pred_dir.join("eval_report.txt"));
    fs::write(&report_path, &report).map_err(internal)?;
    print_score(&score);
    Ok(())
}

fn mask_names_in(dir: &Path) -> Result<Vec<String>, AppError> {
    let entries = fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".pgm"))
        .collect();
    names.sort();
    Ok(names)
}

// ── synth ───────────────────────────────────────────────────────────────────

fn cmd_synth(preset: &str, out_dir: &Path, seed: u64) -> Result<(), AppError> {
    let sequences = benchmark_suite(preset, seed).map_err(|e| {
        input(format!(
            "{e} (valid presets: {})",
            flowdet::synth::PRESETS.join(", ")
        ))
    })?;
    let mut total_frames = 0;
    for (index, sequence) in sequences.iter().enumerate() {
        let dir = if sequences.len() == 1 {
            out_dir.to_path_buf()
        } else {
            out_dir.join(format!("seq{index:02}"))
        };
        fs::create_dir_all(&dir).map_err(internal)?;
        let mut manifest = String::new();
        for (i, spec) in sequence.frames.iter().enumerate() {
            let (field, truth) = generate(spec).map_err(internal)?;
            let flow_name = format!("{i:06}.flo");
            let mask_name = format!("{i:06}.pgm");
            write_flow(&field, &dir.join(&flow_name)).map_err(internal)?;
            write_mask(&truth.mask, &dir.join(&mask_name)).map_err(internal)?;
            let _ = writeln!(manifest, "{i} {flow_name} {mask_name}");
            total_frames += 1;
        }
        fs::write(dir.join("manifest.txt"), manifest).map_err(internal)?;
    }
    println!(
        "wrote {total_frames} frames of preset `{preset}` to {}",
        out_dir.display()
    );
    Ok(())
}

// ── bench ───────────────────────────────────────────────────────────────────

fn cmd_bench(
    manifest_path: &Path,
    config_path: Option<&Path>,
    reps: u32,
    seed: Option<u64>,
) -> Result<(), AppError> {
    if reps < 1 {
        return Err(input("need at least one repetition"));
    }
    let manifest = load_manifest(manifest_path).map_err(input)?;
    if manifest.entries.is_empty() {
        return Err(input(format!(
            "empty sequence in {}",
            manifest_path.display()
        )));
    }
    let cfg = load_config(config_path, seed)?;
    let base_seed = cfg.ransac.seed;

    // I/O is excluded from the timings: load everything first.
    let mut fields = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        fields.push(
            read_flow(&entry.flow_path)
                .map_err(|e| input(format!("{}: {e}", entry.flow_path.display())))?,
        );
    }

    let mut sampling = Vec::new();
    let mut search = Vec::new();
    let mut refit = Vec::new();
    let mut mask = Vec::new();
    let mut total = Vec::new();
    for _ in 0..reps {
        let mut state = IntervalState::new();
        let mut history: VecDeque<FlowField> = VecDeque::new();
        for (position, base_field) in fields.iter().enumerate() {
            history.push_back(base_field.clone());
            if history.len() > cfg.k_max as usize {
                history.pop_front();
            }
            let k_used = (state.k as usize).min(history.len());
            let field = history
                .iter()
                .rev()
                .take(k_used)
                .skip(1)
                .fold(history.back().unwrap().clone(), |acc, f| acc.accumulate(f));

            let mut frame_cfg = cfg;
            frame_cfg.ransac.seed = base_seed.wrapping_add(position as u64);
            let (_, next_state, timings) = detect_frame_timed(&field, &state, &frame_cfg)
                .map_err(|e| input(format!("frame {position}: {e}")))?;
            state = next_state;
            sampling.push(timings.sampling_ms);
            search.push(timings.search_ms);
            refit.push(timings.refit_ms);
            mask.push(timings.mask_ms);
            total.push(timings.total_ms());
        }
    }

    println!("frames={}", manifest.entries.len());
    println!("reps={reps}");
    println!("width={}", manifest.width);
    println!("height={}", manifest.height);
    println!("sampling_ms_median={:.3}", median(&mut sampling));
    println!("search_ms_median={:.3}", median(&mut search));
    println!("refit_ms_median={:.3}", median(&mut refit));
    println!("mask_ms_median={:.3}", median(&mut mask));
    println!("total_ms_median={:.3}", median(&mut total));
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
