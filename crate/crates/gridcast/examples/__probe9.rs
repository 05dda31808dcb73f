//! Scratch probe for the injection-test constants. Not shipped.
use gridcast::particle::{classify_dynamic, ParticleConfig};
use gridcast::sim::{scenarios, simulate, SimConfig};

fn main() {
    let config = SimConfig::default();

    // Walker donor: occupancy available around the walker at frames 45..=55.
    let donor = simulate(&scenarios::crossing_pedestrian(3002, scenarios::Heading::North, -2.0), &config).unwrap();
    println!("crossing donor: {} frames", donor.frames.len());
    for fi in [45usize, 48, 50, 52, 55] {
        let f = &donor.frames[fi];
        let mut best = (0i64, 0i64, 0.0f64);
        let mut above = 0usize;
        for wy in -6i64..=6 {
            for wx in 7i64..=19 {
                if let Some((x, y)) = f.grid_index((wx, wy)) {
                    let o = f.occupancy(x, y);
                    if o > best.2 {
                        best = (wx, wy, o);
                    }
                    if o > 0.6 {
                        above += 1;
                    }
                }
            }
        }
        println!("  frame {fi}: peak occ {:.3} at world ({}, {}), {} cells > 0.6", best.2, best.0, best.1, above);
    }

    // Injection base: vehicle state at frame 40.
    let base = simulate(&scenarios::straight_drive(3001, 2.0, 1.5, scenarios::Heading::East), &config).unwrap();
    println!("straight base: {} frames", base.frames.len());
    let f = &base.frames[40];
    let pcfg = ParticleConfig { particle_count: 300_000, horizons: vec![1.5, 2.0], seed: 5, ..ParticleConfig::default() };
    let dynamic = classify_dynamic(f, &pcfg);
    let mut occ_cells = 0usize;
    let mut dyn_in_region = 0usize;
    let mut dyn_outside = 0usize;
    let (mut ve_sum, mut n_v) = (0.0f64, 0usize);
    for y in 0..f.spec.height {
        for x in 0..f.spec.width {
            let (wx, wy) = f.world_cell(x, y);
            let in_region = (-16..=8).contains(&wx) && (4..=15).contains(&wy);
            let d = dynamic[f.spec.index(x, y)];
            if d && in_region {
                dyn_in_region += 1;
            }
            if d && !in_region {
                dyn_outside += 1;
            }
            if in_region && f.occupancy(x, y) > 0.55 {
                occ_cells += 1;
                ve_sum += f.cell(x, y).vel_e as f64;
                n_v += 1;
            }
        }
    }
    println!(
        "  frame 40 vehicle region: {} occupied cells, mean vel_e {:.2}, dynamic {} in region / {} outside",
        occ_cells,
        ve_sum / n_v.max(1) as f64,
        dyn_in_region,
        dyn_outside
    );

    // Stop scenario for the blocked-corridor check.
    let stop = simulate(&scenarios::stop_behind_obstacle(2003, 2.5, scenarios::Heading::East), &config).unwrap();
    println!("stop 2003: {} frames", stop.frames.len());
    for fi in [29usize, 49] {
        let f = &stop.frames[fi];
        let mut front = i64::MIN;
        let mut moving = 0usize;
        let dynamic = classify_dynamic(f, &pcfg);
        for y in 0..f.spec.height {
            for x in 0..f.spec.width {
                let (wx, wy) = f.world_cell(x, y);
                if (8..=18).contains(&wy) && wx < 20 && f.occupancy(x, y) > 0.55 && wx > front {
                    front = wx;
                }
                if dynamic[f.spec.index(x, y)] {
                    moving += 1;
                }
            }
        }
        println!("  frame {fi}: lane-band front cell wx={front} (blocker face at wx=25), {moving} dynamic cells");
    }

    // Determinism-run donor: a standing pedestrian as a clean patch source.
    let stand = simulate(&scenarios::standing_pedestrian(7), &config).unwrap();
    let f = &stand.frames[40];
    let mut best = (0i64, 0i64, 0.0f64);
    for wy in -2i64..=8 {
        for wx in 8i64..=20 {
            if let Some((x, y)) = f.grid_index((wx, wy)) {
                let o = f.occupancy(x, y);
                if o > best.2 {
                    best = (wx, wy, o);
                }
            }
        }
    }
    println!("standing donor frame 40: peak occ {:.3} at world ({}, {})", best.2, best.0, best.1);
}
