//! Builds static/dynamic training labels for one frame of a recording.
//!
//! A crossing pedestrian leaves a characteristic rise-and-drop in each cell
//! it traverses; the label detector turns that into per-horizon dynamic
//! targets while everything else becomes the static map. The example prints
//! the label channels of one cell on the walker's path.

use std::fs;
use std::path::Path;

use gridcast::label::{build_labels, DetectorConfig, LabelSpec};
use gridcast::sim::scenarios::{self, Heading};
use gridcast::sim::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = scenarios::crossing_pedestrian(5, Heading::North, 0.0);
    let config = SimConfig::default();
    println!("simulating {:?} ({} s)", scenario.name, scenario.duration);
    let output = simulate(&scenario, &config)?;

    let lspec = LabelSpec::default(); // 3.0 s horizon, 0.5 s channel spacing
    let detector = DetectorConfig::default();
    let t0 = 40; // 4.0 s in: the walker is mid-crossing
    let labels = build_labels(&output.frames, t0, &lspec, &detector)?;

    let out = Path::new("runs/label_recording");
    fs::create_dir_all(out)?;
    labels.write_file(&out.join(format!("label_{t0:05}.dlbl")))?;

    // Count cells carrying any dynamic target, then inspect the strongest
    // transient one: free outside its episode and released again before the
    // last horizon, which is the signature of a cell the walker passes
    // through (wall cells occasionally catch a noise-driven episode too,
    // but keep a high static level).
    let mut dynamic_cells = 0usize;
    let mut best = (0usize, 0usize, 0.0f32);
    for y in 0..labels.height {
        for x in 0..labels.width {
            let peak = (1..=labels.k)
                .filter(|&k| labels.mask_at(k, x, y))
                .map(|k| labels.dynamic_at(k, x, y))
                .fold(0.0f32, f32::max);
            if peak > 0.5 {
                dynamic_cells += 1;
            }
            if peak > best.2 && !labels.mask_at(labels.k, x, y) && labels.static_at(x, y) < 0.5 {
                best = (x, y, peak);
            }
        }
    }
    println!(
        "labels at t0 = {:.1} s: {} channels, {} of {} cells dynamic ({:.3}%)",
        labels.t0,
        labels.k,
        dynamic_cells,
        labels.width * labels.height,
        100.0 * dynamic_cells as f64 / (labels.width * labels.height) as f64
    );

    let (x, y, _) = best;
    println!(
        "cell ({x}, {y}): static level {:.3}, dynamic targets by horizon:",
        labels.static_at(x, y)
    );
    for k in 1..=labels.k {
        println!(
            "  +{:.1} s  masked {:<5}  P_O {:.3}",
            k as f32 * labels.step,
            labels.mask_at(k, x, y),
            labels.dynamic_at(k, x, y)
        );
    }
    println!("label tensor written to {}", out.display());
    Ok(())
}
