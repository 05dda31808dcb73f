//! Renders the built-in downtown scene into a grid-map recording.
//!
//! Writes `runs/simulate_downtown/{frames.dogm,stats.csv}` and prints the
//! imbalance statistic the whole pipeline is built around: cells covered by
//! moving objects are a small fraction of a percent of the grid.

use std::fs;
use std::path::Path;

use gridcast::grid::write_sequence;
use gridcast::sim::{scenarios, simulate, write_stats_csv, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = scenarios::downtown(11);
    let config = SimConfig::default();
    println!(
        "simulating {:?}: {} static shapes, {} actors, {} s at {} Hz",
        scenario.name,
        scenario.statics.len(),
        scenario.actors.len(),
        scenario.duration,
        1.0 / config.grid.frame_period
    );

    let output = simulate(&scenario, &config)?;

    let out = Path::new("runs/simulate_downtown");
    fs::create_dir_all(out)?;
    write_sequence(&out.join("frames.dogm"), &output.frames)?;
    write_stats_csv(&out.join("stats.csv"), &output.stats)?;

    let n = output.stats.len() as f64;
    let mean_dynamic = output.stats.iter().map(|r| r.dynamic_fraction).sum::<f64>() / n;
    let mean_visible = output.stats.iter().map(|r| r.visible_fraction).sum::<f64>() / n;
    println!(
        "{} frames of {}x{} cells ({} m each)",
        output.frames.len(),
        config.grid.width,
        config.grid.height,
        config.grid.cell_width
    );
    println!(
        "mean dynamic-cell fraction {:.3}% | mean visible fraction {:.1}%",
        100.0 * mean_dynamic,
        100.0 * mean_visible
    );

    let last = output.frames.last().expect("simulation yields frames");
    let mut occupied = 0usize;
    let mut moving = 0usize;
    for y in 0..last.spec.height {
        for x in 0..last.spec.width {
            if last.occupancy(x, y) > 0.7 {
                occupied += 1;
                let c = last.cell(x, y);
                if (c.vel_e.powi(2) + c.vel_n.powi(2)).sqrt() > 0.5 {
                    moving += 1;
                }
            }
        }
    }
    println!("final frame: {occupied} cells with P_O > 0.7, {moving} of them moving > 0.5 m/s");
    println!("artifacts in {}", out.display());
    Ok(())
}
