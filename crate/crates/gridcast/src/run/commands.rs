//! The eight pipeline subcommands.
//!
//! Argument structs double as the clap definitions; the `gridcast` binary
//! only parses and dispatches. Every command writes its artifacts plus a
//! `manifest.json` into `--out`; data artifacts are byte-reproducible from
//! the recorded config and seed, the manifest alone carries wall-clock
//! times.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use super::config::PipelineConfig;
use super::dataset::{
    dynamic_cell_fraction, label_sequence, load_samples, write_fraction_csv, write_labels_dir,
    FractionRow,
};
use super::manifest::{with_manifest, RunManifest};
use super::split::split_dataset;
use super::RunError;
use crate::eval::{
    metrics_rows, read_metrics_csv, roc_curve, write_metrics_csv, write_overlay_file,
    MetricsRow, OverlayConfig, PredictionPlane,
};
use crate::grid::{read_sequence, write_sequence, DogmaFrame};
use crate::label::LabelTensor;
use crate::net::{load_checkpoint, predict, save_checkpoint, train, write_loss_csv, NetworkParams};
use crate::particle::{classify_dynamic, predict_particles, CountGrid};
use crate::sim::{inject_patch, read_patch, scenarios, simulate, write_stats_csv, Scenario};

fn horizon_millis(seconds: f32) -> i64 {
    (seconds as f64 * 1000.0).round() as i64
}

fn counts_file_name(seconds: f32) -> String {
    format!("counts_{:04}ms.dcnt", horizon_millis(seconds))
}

fn frame_at<'a>(
    frames: &'a [DogmaFrame],
    index: usize,
    what: &str,
) -> Result<&'a DogmaFrame, RunError> {
    frames.get(index).ok_or_else(|| {
        RunError::Usage(format!(
            "{what} index {index} out of range: the sequence has {} frames",
            frames.len()
        ))
    })
}

/// Render a scenario into a frame sequence with per-frame statistics.
#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario description file (TOML).
    #[arg(long, value_name = "FILE", conflicts_with = "scenario")]
    pub config: Option<PathBuf>,

    /// Built-in scenario name (downtown, parked-vehicle, empty-street,
    /// standing-pedestrian).
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,

    /// Replaces the scenario's sensor-noise seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Pipeline config file for the grid and sensor model.
    #[arg(long, value_name = "FILE")]
    pub pipeline: Option<PathBuf>,

    /// Pipeline config override, section.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), RunError> {
    let pipeline = PipelineConfig::load(args.pipeline.as_deref(), &args.set)?;
    let mut scenario = match (&args.config, &args.scenario) {
        (Some(path), None) => Scenario::read_file(path)?,
        (None, Some(name)) => scenarios::builtin(name, args.seed.unwrap_or(0))
            .ok_or_else(|| RunError::Usage(format!("unknown built-in scenario {name:?}")))?,
        _ => {
            return Err(RunError::Usage(
                "simulate needs exactly one of --config FILE or --scenario NAME".to_string(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let sim_config = pipeline.sim_config()?;

    let mut manifest = RunManifest::begin(
        "simulate",
        json!({
            "pipeline": pipeline.to_json()?,
            "scenario": serde_json::to_value(&scenario)?,
        }),
    );
    manifest.seed = Some(scenario.seed);
    if let Some(path) = &args.config {
        manifest.input(path);
    }
    let frames_path = args.out.join("frames.dogm");
    let stats_path = args.out.join("stats.csv");
    manifest.output(&frames_path);
    manifest.output(&stats_path);

    with_manifest(&args.out, manifest, |_| {
        let output = simulate(&scenario, &sim_config)?;
        write_sequence(&frames_path, &output.frames)?;
        write_stats_csv(&stats_path, &output.stats)?;
        let mean_dynamic = output.stats.iter().map(|r| r.dynamic_fraction).sum::<f64>()
            / output.stats.len().max(1) as f64;
        println!(
            "simulate: {} frames of {:?} -> {} (mean dynamic fraction {:.3}%)",
            output.frames.len(),
            scenario.name,
            frames_path.display(),
            100.0 * mean_dynamic
        );
        Ok(())
    })
}

/// Build static/dynamic label tensors for every sample of a recording.
#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Frame sequence to label.
    #[arg(long, value_name = "FILE")]
    pub frames: PathBuf,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Frames between samples; defaults to the config's label.stride.
    #[arg(long)]
    pub stride: Option<usize>,

    /// Pipeline config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Pipeline config override, section.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

pub fn cmd_label(args: &LabelArgs) -> Result<(), RunError> {
    let pipeline = PipelineConfig::load(args.config.as_deref(), &args.set)?;
    let lspec = pipeline.label_spec();
    let detector = pipeline.detector();
    let stride = args.stride.unwrap_or(pipeline.label.stride);

    let mut manifest = RunManifest::begin("label", pipeline.to_json()?);
    manifest.input(&args.frames);
    let labels_dir = args.out.join("labels");
    let fractions_path = args.out.join("fractions.csv");
    manifest.output(&labels_dir);
    manifest.output(&fractions_path);

    with_manifest(&args.out, manifest, |_| {
        let frames = read_sequence(&args.frames)?;
        let labeled = label_sequence(&frames, &lspec, &detector, stride)?;
        if labeled.is_empty() {
            return Err(RunError::Usage(format!(
                "{} frames leave no room for a label window (smoothing margin \
                 plus {} s horizon)",
                frames.len(),
                lspec.horizon
            )));
        }
        write_labels_dir(&labels_dir, &labeled)?;
        let rows: Vec<FractionRow> = labeled
            .iter()
            .enumerate()
            .map(|(i, (t0, tensor))| FractionRow {
                sample: i,
                t0_index: *t0,
                t0_s: frames[*t0].timestamp,
                dynamic_fraction: dynamic_cell_fraction(tensor),
            })
            .collect();
        write_fraction_csv(&fractions_path, &rows)?;
        let mean = rows.iter().map(|r| r.dynamic_fraction).sum::<f64>() / rows.len() as f64;
        println!(
            "label: {} samples (stride {stride}) -> {} (mean dynamic cell fraction {:.3}%)",
            rows.len(),
            labels_dir.display(),
            100.0 * mean
        );
        Ok(())
    })
}

/// Train the encoder-decoder on labeled recordings.
#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labeled recording directory (frames.dogm + labels/); repeatable.
    #[arg(long = "data", value_name = "DIR", required = true)]
    pub data: Vec<PathBuf>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Pipeline config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Pipeline config override, section.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), RunError> {
    let pipeline = PipelineConfig::load(args.config.as_deref(), &args.set)?;
    let train_config = pipeline.train_config();

    let mut manifest = RunManifest::begin("train", pipeline.to_json()?);
    manifest.seed = Some(train_config.seed);
    manifest.split = Some(pipeline.split);
    for dir in &args.data {
        manifest.input(dir);
    }
    let checkpoint_path = args.out.join("checkpoint.dnet");
    let loss_path = args.out.join("loss.csv");
    let split_path = args.out.join("split.json");
    manifest.output(&checkpoint_path);
    manifest.output(&loss_path);
    manifest.output(&split_path);

    with_manifest(&args.out, manifest, |_| {
        // Recordings, not samples, are the split unit: frames taken seconds
        // apart within one recording are near-duplicates.
        let split = split_dataset(args.data.len(), &pipeline.split, pipeline.split_seed)?;
        // Recordings are identified by name, not by absolute path: the
        // split file is a data artifact and must come out byte-identical
        // when the same run is repeated somewhere else. Full input paths
        // live in the manifest.
        let dirs_of = |idx: &[usize]| -> Vec<String> {
            idx.iter()
                .map(|&i| match args.data[i].file_name() {
                    Some(name) => name.to_string_lossy().into_owned(),
                    None => args.data[i].display().to_string(),
                })
                .collect()
        };
        let mut split_text = serde_json::to_string_pretty(&json!({
            "train": dirs_of(&split.train),
            "test": dirs_of(&split.test),
            "validation": dirs_of(&split.validation),
        }))?;
        split_text.push('\n');
        fs::write(&split_path, split_text)?;

        let mut samples = Vec::new();
        let mut step_seconds = None;
        for &i in &split.train {
            let (mut part, step) = load_samples(&args.data[i])?;
            match step_seconds {
                None => step_seconds = Some(step),
                Some(s) if s != step => {
                    return Err(RunError::Usage(format!(
                        "{} labels use channel step {} s, earlier recordings {} s",
                        args.data[i].display(),
                        step,
                        s
                    )));
                }
                Some(_) => {}
            }
            samples.append(&mut part);
        }
        if samples.is_empty() {
            return Err(RunError::Usage(
                "the training split is empty; check --data and split fractions".to_string(),
            ));
        }

        let spec = pipeline.net_spec(
            samples[0].horizon_steps(),
            step_seconds.expect("samples imply a step"),
        );
        let mut params = NetworkParams::init(spec, train_config.seed)?;
        println!(
            "train: {} samples, {} parameters, {} iterations",
            samples.len(),
            params.parameter_count(),
            train_config.iterations
        );
        let report_every = (train_config.iterations / 10).max(1);
        let rows = train(&mut params, &samples, &train_config, |row| {
            if row.iteration % report_every == 0 || row.iteration + 1 == train_config.iterations {
                println!(
                    "  iter {:>6}  loss {:12.3}  static {:12.3}  dynamic {:12.3}",
                    row.iteration, row.loss, row.static_loss, row.dynamic_loss
                );
            }
        })?;
        save_checkpoint(&checkpoint_path, &mut params)?;
        write_loss_csv(&loss_path, &rows)?;
        println!("train: checkpoint -> {}", checkpoint_path.display());
        Ok(())
    })
}

/// Predict future occupancy for one frame with a trained network.
#[derive(Debug, Clone, Args)]
pub struct PredictNetArgs {
    /// Trained checkpoint file.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,

    /// Frame sequence to predict from.
    #[arg(long, value_name = "FILE")]
    pub frames: PathBuf,

    /// Index of the source frame.
    #[arg(long, default_value_t = 0)]
    pub index: usize,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn cmd_predict_net(args: &PredictNetArgs) -> Result<(), RunError> {
    let mut manifest = RunManifest::begin(
        "predict-net",
        json!({ "checkpoint": args.checkpoint.display().to_string(), "index": args.index }),
    );
    manifest.input(&args.checkpoint);
    manifest.input(&args.frames);
    let pred_path = args.out.join("prediction.dlbl");
    manifest.output(&pred_path);

    with_manifest(&args.out, manifest, |_| {
        let params = load_checkpoint(&args.checkpoint)?;
        let frames = read_sequence(&args.frames)?;
        let frame = frame_at(&frames, args.index, "frame")?;
        let output = predict(&params, frame)?;

        let spec = params.spec();
        let k = spec.horizon_steps;
        let (w, h) = (frame.spec.width, frame.spec.height);
        let mut tensor =
            LabelTensor::new(w, h, k, frame.timestamp as f32, spec.step_seconds);
        for y in 0..h {
            for x in 0..w {
                tensor.set_static(x, y, output.at(0, 0, y, x) as f32);
                for c in 1..=k {
                    tensor.set_dynamic(c, x, y, output.at(0, c, y, x) as f32, true);
                }
            }
        }
        tensor.write_file(&pred_path)?;
        println!(
            "predict-net: frame {} -> {} ({} horizon channels)",
            args.index,
            pred_path.display(),
            k
        );
        Ok(())
    })
}

/// Predict future occupancy for one frame with the particle baseline.
#[derive(Debug, Clone, Args)]
pub struct PredictParticleArgs {
    /// Frame sequence to predict from.
    #[arg(long, value_name = "FILE")]
    pub frames: PathBuf,

    /// Index of the source frame.
    #[arg(long, default_value_t = 0)]
    pub index: usize,

    /// Total particles spread over the dynamic cells.
    #[arg(long)]
    pub particles: Option<usize>,

    /// Velocity-variance gate in (m/s)^2.
    #[arg(long)]
    pub var_threshold: Option<f64>,

    /// Minimum speed in m/s for a cell to count as moving.
    #[arg(long)]
    pub speed_threshold: Option<f64>,

    /// Comma-separated prediction horizons in seconds.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f32>>,

    /// Sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Pipeline config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Pipeline config override, section.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

pub fn cmd_predict_particle(args: &PredictParticleArgs) -> Result<(), RunError> {
    let pipeline = PipelineConfig::load(args.config.as_deref(), &args.set)?;
    let mut config = pipeline.particle_config();
    if let Some(n) = args.particles {
        config.particle_count = n;
    }
    if let Some(v) = args.var_threshold {
        config.variance_threshold = v;
    }
    if let Some(s) = args.speed_threshold {
        config.speed_threshold = s;
    }
    if let Some(h) = &args.horizons {
        config.horizons = h.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let mut manifest = RunManifest::begin(
        "predict-particle",
        json!({
            "pipeline": pipeline.to_json()?,
            "particles": config.particle_count,
            "speed_threshold": config.speed_threshold,
            "var_threshold": config.variance_threshold,
            "horizons": config.horizons,
            "index": args.index,
        }),
    );
    manifest.seed = Some(config.seed);
    manifest.input(&args.frames);
    let out_paths: Vec<PathBuf> = config
        .horizons
        .iter()
        .map(|&h| args.out.join(counts_file_name(h)))
        .collect();
    for path in &out_paths {
        manifest.output(path);
    }

    with_manifest(&args.out, manifest, |_| {
        let frames = read_sequence(&args.frames)?;
        let frame = frame_at(&frames, args.index, "frame")?;
        let dynamic_cells = classify_dynamic(frame, &config)
            .iter()
            .filter(|&&d| d)
            .count();
        let grids = predict_particles(frame, &config)?;
        for (grid, path) in grids.iter().zip(&out_paths) {
            grid.write_file(path)?;
        }
        println!(
            "predict-particle: {} particles over {} dynamic cells, {} horizons -> {}",
            config.particle_count,
            dynamic_cells,
            grids.len(),
            args.out.display()
        );
        Ok(())
    })
}

/// Score predictions against the frames that actually happened.
#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Frame sequence holding the source frame and the future truth.
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,

    /// Index of the frame the predictions were made from.
    #[arg(long, default_value_t = 0)]
    pub index: usize,

    /// Network prediction file (prediction.dlbl).
    #[arg(long, value_name = "FILE")]
    pub net: Option<PathBuf>,

    /// Particle count-grid file, or a directory of counts_*.dcnt files.
    #[arg(long, value_name = "PATH")]
    pub particle: Option<PathBuf>,

    /// Comma-separated thresholds kept in the CSV (all 99 when omitted);
    /// the first one drives the overlay images.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Pipeline config file (particle gates for the baseline's static map).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Pipeline config override, section.key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

fn read_count_grids(path: &Path) -> Result<Vec<CountGrid>, RunError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "dcnt"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(RunError::Usage(format!(
                "no .dcnt files under {}",
                path.display()
            )));
        }
        files
            .iter()
            .map(|p| CountGrid::read_file(p).map_err(RunError::from))
            .collect()
    } else {
        Ok(vec![CountGrid::read_file(path)?])
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), RunError> {
    if args.net.is_none() && args.particle.is_none() {
        return Err(RunError::Usage(
            "eval needs --net and/or --particle".to_string(),
        ));
    }
    let pipeline = PipelineConfig::load(args.config.as_deref(), &args.set)?;
    let particle_config = pipeline.particle_config();

    let mut manifest = RunManifest::begin(
        "eval",
        json!({
            "pipeline": pipeline.to_json()?,
            "index": args.index,
            "gammas": args.gammas,
        }),
    );
    manifest.input(&args.truth);
    for path in [&args.net, &args.particle].into_iter().flatten() {
        manifest.input(path);
    }
    let metrics_path = args.out.join("metrics.csv");
    manifest.output(&metrics_path);

    with_manifest(&args.out, manifest, |m| {
        let frames = read_sequence(&args.truth)?;
        let source = frame_at(&frames, args.index, "source frame")?;
        let period = source.spec.frame_period as f64;

        let net_pred = args.net.as_deref().map(LabelTensor::read_file).transpose()?;
        let count_grids = args.particle.as_deref().map(read_count_grids).transpose()?;
        let dynamic = count_grids
            .is_some()
            .then(|| classify_dynamic(source, &particle_config));

        // Horizons come from whatever the predictors actually produced.
        let mut horizons: BTreeSet<i64> = BTreeSet::new();
        if let Some(t) = &net_pred {
            horizons.extend((1..=t.k).map(|k| horizon_millis(k as f32 * t.step)));
        }
        if let Some(grids) = &count_grids {
            horizons.extend(grids.iter().map(|g| horizon_millis(g.horizon)));
        }

        let overlay_gamma = args.gammas.as_ref().and_then(|g| g.first().copied());
        let mut rows: Vec<MetricsRow> = Vec::new();
        for &ms in &horizons {
            let steps = (ms as f64 / 1000.0 / period).round() as usize;
            let truth_index = args.index + steps;
            let truth_frame = frame_at(&frames, truth_index, "truth frame")?;
            let horizon_s = ms as f32 / 1000.0;

            let net_plane = match &net_pred {
                Some(t) => (1..=t.k)
                    .find(|&k| horizon_millis(k as f32 * t.step) == ms)
                    .map(|k| PredictionPlane {
                        width: t.width,
                        height: t.height,
                        ego_offset: source.ego_offset,
                        static_p: t.static_plane().iter().map(|&v| v as f64).collect(),
                        score: t.dynamic_plane(k).iter().map(|&v| v as f64).collect(),
                    }),
                None => None,
            };
            let particle_plane = match (&count_grids, &dynamic) {
                (Some(grids), Some(dynamic)) => grids
                    .iter()
                    .find(|g| horizon_millis(g.horizon) == ms)
                    .map(|g| PredictionPlane::from_particles(source, dynamic, g))
                    .transpose()?,
                _ => None,
            };

            for (name, plane) in [("network", &net_plane), ("particle", &particle_plane)] {
                if let Some(plane) = plane {
                    let curve = roc_curve(plane, truth_frame)?;
                    println!("eval: {name:>8} at {horizon_s:.1} s: auc {:.4}", curve.auc);
                    rows.extend(metrics_rows(name, horizon_s, &curve));
                }
            }

            let overlay_path = args.out.join(format!("overlay_{ms:04}ms.ppm"));
            write_overlay_file(
                &overlay_path,
                truth_frame,
                net_plane.as_ref(),
                particle_plane.as_ref(),
                &OverlayConfig {
                    gamma: overlay_gamma.unwrap_or(0.5),
                    ..OverlayConfig::default()
                },
            )?;
            m.output(&overlay_path);
        }

        if let Some(keep) = &args.gammas {
            rows.retain(|r| keep.iter().any(|g| (g - r.gamma).abs() < 1e-9));
        }
        write_metrics_csv(&metrics_path, &rows)?;
        println!("eval: {} metric rows -> {}", rows.len(), metrics_path.display());
        Ok(())
    })
}

/// Splice a recorded object patch into a frame sequence.
#[derive(Debug, Clone, Args)]
pub struct InjectArgs {
    /// Frame sequence to modify.
    #[arg(long, value_name = "FILE")]
    pub frames: PathBuf,

    /// Patch file produced by the patch extractor.
    #[arg(long, value_name = "FILE")]
    pub patch: PathBuf,

    /// World cell anchoring the patch, as "east,north".
    #[arg(long, value_name = "E,N", allow_hyphen_values = true)]
    pub at: String,

    /// First frame the patch applies to.
    #[arg(long, default_value_t = 0)]
    pub start: usize,

    /// Keep the patch's last frame applied through the end of the sequence.
    #[arg(long)]
    pub hold_last: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn parse_world_cell(text: &str) -> Result<(i64, i64), RunError> {
    let bad = || RunError::Usage(format!("--at expects \"east,north\" cells, got {text:?}"));
    let (e, n) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        e.trim().parse().map_err(|_| bad())?,
        n.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn cmd_inject(args: &InjectArgs) -> Result<(), RunError> {
    let anchor = parse_world_cell(&args.at)?;
    let mut manifest = RunManifest::begin(
        "inject",
        json!({
            "at": [anchor.0, anchor.1],
            "start": args.start,
            "hold_last": args.hold_last,
        }),
    );
    manifest.input(&args.frames);
    manifest.input(&args.patch);
    let out_path = args.out.join("injected.dogm");
    manifest.output(&out_path);

    with_manifest(&args.out, manifest, |_| {
        let mut frames = read_sequence(&args.frames)?;
        let patch = read_patch(&args.patch)?;
        let cells = inject_patch(&mut frames, &patch, anchor, args.start, args.hold_last)?;
        write_sequence(&out_path, &frames)?;
        println!(
            "inject: {} cells over {} patch frames -> {}",
            cells,
            patch.frames.len(),
            out_path.display()
        );
        Ok(())
    })
}

/// Summarize a finished evaluation: AUC per horizon per predictor.
#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directory holding metrics.csv.
    #[arg(value_name = "DIR")]
    pub run: PathBuf,

    /// Where the report goes; defaults to DIR/report.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Builds the alignment-padded AUC table from metric rows.
fn auc_table(rows: &[MetricsRow]) -> String {
    let predictors: BTreeSet<&str> = rows.iter().map(|r| r.predictor.as_str()).collect();
    let horizons: BTreeSet<i64> = rows.iter().map(|r| horizon_millis(r.horizon_s)).collect();

    let mut text = String::from("horizon_s");
    for p in &predictors {
        let _ = write!(text, "  {p:>9}");
    }
    text.push('\n');
    for &ms in &horizons {
        let _ = write!(text, "{:<9}", format!("{:.1}", ms as f64 / 1000.0));
        for p in &predictors {
            let auc = rows
                .iter()
                .find(|r| r.predictor == *p && horizon_millis(r.horizon_s) == ms)
                .map(|r| r.auc);
            match auc {
                Some(a) => {
                    let _ = write!(text, "  {a:>9.4}");
                }
                None => {
                    let _ = write!(text, "  {:>9}", "-");
                }
            }
        }
        text.push('\n');
    }
    text
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), RunError> {
    let metrics_path = args.run.join("metrics.csv");
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| args.run.join("report"));

    let mut manifest = RunManifest::begin(
        "report",
        json!({ "run": args.run.display().to_string() }),
    );
    manifest.input(&metrics_path);
    let report_path = out_dir.join("report.txt");
    manifest.output(&report_path);

    with_manifest(&out_dir, manifest, |_| {
        let rows = read_metrics_csv(&metrics_path)?;
        if rows.is_empty() {
            return Err(RunError::Usage(format!(
                "{} holds no metric rows",
                metrics_path.display()
            )));
        }
        let table = auc_table(&rows);
        print!("{table}");
        fs::write(&report_path, &table)?;
        Ok(())
    })
}
