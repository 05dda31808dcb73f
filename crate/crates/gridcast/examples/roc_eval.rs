//! Scores the particle baseline against the frames that actually happened.
//!
//! Binarizes the future frame into occupied/free truth (unobserved cells
//! stay out of the count), sweeps the dynamic-score threshold into an ROC
//! curve per horizon, and reports AUC plus recall at a fixed false-positive
//! budget. Also writes the metrics CSV the `report` subcommand consumes.

use std::fs;
use std::path::Path;

use gridcast::eval::{metrics_rows, roc_curve, tpr_at_fpr, write_metrics_csv, PredictionPlane};
use gridcast::particle::{classify_dynamic, predict_particles, ParticleConfig};
use gridcast::sim::scenarios::{self, Heading};
use gridcast::sim::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = scenarios::crossing_pedestrian(2001, Heading::North, -2.0);
    let config = SimConfig::default();
    let output = simulate(&scenario, &config)?;

    let t0 = 45;
    let frame = &output.frames[t0];
    let particle_config = ParticleConfig {
        particle_count: 200_000,
        ..ParticleConfig::default()
    };
    let dynamic = classify_dynamic(frame, &particle_config);
    let grids = predict_particles(frame, &particle_config)?;

    let period = config.grid.frame_period as f64;
    let mut rows = Vec::new();
    println!("horizon    auc    tpr @ fpr 0.10");
    for grid in &grids {
        let steps = (grid.horizon as f64 / period).round() as usize;
        let truth = &output.frames[t0 + steps];
        let plane = PredictionPlane::from_particles(frame, &dynamic, grid)?;
        let curve = roc_curve(&plane, truth)?;
        println!(
            "{:>5.1} s  {:.4}  {:.4}",
            grid.horizon,
            curve.auc,
            tpr_at_fpr(&curve, 0.1)
        );
        rows.extend(metrics_rows("particle", grid.horizon, &curve));
    }

    let out = Path::new("runs/roc_eval");
    fs::create_dir_all(out)?;
    write_metrics_csv(&out.join("metrics.csv"), &rows)?;
    println!(
        "{} metric rows written to {} (try: gridcast report runs/roc_eval)",
        rows.len(),
        out.display()
    );
    Ok(())
}
