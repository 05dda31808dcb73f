//! Trains a small encoder-decoder on a handful of simulated recordings.
//!
//! Desk-scale version of the full pipeline: two crossing-pedestrian scenes
//! and a straight drive on a 64x64 grid, a two-stage network, a few hundred
//! iterations. Prints the loss trace and saves a checkpoint that the other
//! examples' prediction code can load.

use std::fs;
use std::path::Path;

use gridcast::grid::GridSpec;
use gridcast::net::{dataset_loss, save_checkpoint, train, NetworkParams, Sample, TrainConfig};
use gridcast::run::label_sequence;
use gridcast::sim::scenarios::{self, Heading};
use gridcast::sim::{simulate, SimConfig};
use gridcast::{DetectorConfig, LabelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        grid: GridSpec::new(64, 64, 0.15, 0.1)?,
        ..SimConfig::default()
    };
    let lspec = LabelSpec::default();
    let detector = DetectorConfig::default();

    let scenarios = vec![
        scenarios::crossing_pedestrian(21, Heading::North, 0.0),
        scenarios::crossing_pedestrian(22, Heading::East, -1.0),
        scenarios::straight_drive(23, 2.0, 0.0, Heading::East),
    ];
    let mut samples: Vec<Sample> = Vec::new();
    for scenario in &scenarios {
        let output = simulate(scenario, &config)?;
        for (_, labels) in label_sequence(&output.frames, &lspec, &detector, 8)? {
            // Frames are paired with the labels built around them.
            let t0 = ((labels.t0 as f64) / config.grid.frame_period as f64).round() as usize;
            samples.push(Sample::from_frame_labels(&output.frames[t0], &labels)?);
        }
        println!("{:?}: {} samples so far", scenario.name, samples.len());
    }

    let mut spec = gridcast::NetworkSpec::default();
    spec.widths = vec![6, 12];
    let train_config = TrainConfig {
        iterations: 250,
        ..TrainConfig::default()
    };
    let mut params = NetworkParams::init(spec, train_config.seed)?;
    println!(
        "training {} parameters for {} iterations on {} samples",
        params.parameter_count(),
        train_config.iterations,
        samples.len()
    );

    let before = dataset_loss(&params, &samples, &train_config.weights)?;
    train(&mut params, &samples, &train_config, |row| {
        if row.iteration % 50 == 0 {
            println!(
                "  iter {:>4}  batch loss {:>12.2}  (static {:>10.2}, dynamic {:>12.2})",
                row.iteration, row.loss, row.static_loss, row.dynamic_loss
            );
        }
    })?;
    let after = dataset_loss(&params, &samples, &train_config.weights)?;

    // Per-batch losses above swing with each batch's dynamic content; the
    // dataset mean is the comparable number.
    println!(
        "dataset mean loss {:.1} -> {:.1} ({:.0}% drop; static {:.1} -> {:.1}, dynamic {:.1} -> {:.1})",
        before.total,
        after.total,
        100.0 * (1.0 - after.total / before.total),
        before.static_part,
        after.static_part,
        before.dynamic_part,
        after.dynamic_part,
    );

    let out = Path::new("runs/train_small_net");
    fs::create_dir_all(out)?;
    save_checkpoint(&out.join("checkpoint.dnet"), &mut params)?;
    println!("checkpoint saved to {}", out.display());
    Ok(())
}
