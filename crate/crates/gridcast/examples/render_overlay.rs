//! Renders truth-versus-prediction overlays as portable pixel-map images.
//!
//! Each overlay shows one future frame, north up: red marks cells that
//! really are occupied, blue marks where the particle baseline expects
//! occupancy (additive, so agreement turns magenta), gray background marks
//! the predicted static structure. Open the .ppm files with any image
//! viewer.

use std::fs;
use std::path::Path;

use gridcast::eval::{write_overlay_file, OverlayConfig, PredictionPlane};
use gridcast::particle::{classify_dynamic, predict_particles, ParticleConfig};
use gridcast::sim::scenarios::{self, Heading};
use gridcast::sim::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = scenarios::crossing_pedestrian(7, Heading::East, 1.0);
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

    let out = Path::new("runs/render_overlay");
    fs::create_dir_all(out)?;
    let overlay_config = OverlayConfig::default(); // score > 0.5, static > 0.6
    let period = config.grid.frame_period as f64;

    for grid in grids.iter().filter(|g| g.horizon == 1.0 || g.horizon == 2.5) {
        let steps = (grid.horizon as f64 / period).round() as usize;
        let truth = &output.frames[t0 + steps];
        let plane = PredictionPlane::from_particles(frame, &dynamic, grid)?;
        let path = out.join(format!("overlay_{:.1}s.ppm", grid.horizon));
        write_overlay_file(&path, truth, None, Some(&plane), &overlay_config)?;
        println!(
            "+{:.1} s -> {} ({}x{} pixels)",
            grid.horizon,
            path.display(),
            truth.spec.width,
            truth.spec.height
        );
    }
    println!("red = truth, blue = baseline claim, gray = predicted static");
    Ok(())
}
