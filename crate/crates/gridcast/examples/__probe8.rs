//! Scratch probe: evaluate the tuned checkpoint against the 8b/8c/9 gates.

use std::path::Path;

use gridcast::eval::{
    binarize_truth, tpr_at_fpr, PredictionPlane, RocCurve, RocPoint, TruthCell,
    STATIC_PREDICTED_THRESHOLD,
};
use gridcast::grid::DogmaFrame;
use gridcast::net::{load_checkpoint, predict, Tensor};
use gridcast::particle::{classify_dynamic, predict_particles, predict_particles_from, ParticleConfig};
use gridcast::sim::scenarios::{self, Heading};
use gridcast::sim::{extract_patch, inject_patch, simulate, SimConfig};

fn pooled_curve(static_p: &[f64], score: &[f64], occupied: &[bool]) -> RocCurve {
    let positives = occupied.iter().filter(|&&o| o).count();
    let negatives = occupied.len() - positives;
    let mut points = Vec::with_capacity(99);
    for i in (1..=99).rev() {
        let gamma = i as f64 / 100.0;
        let (mut tp, mut fp) = (0usize, 0usize);
        for j in 0..occupied.len() {
            if static_p[j] > STATIC_PREDICTED_THRESHOLD || score[j] > gamma {
                if occupied[j] {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        points.push(RocPoint {
            gamma,
            tpr: if positives == 0 { 1.0 } else { tp as f64 / positives as f64 },
            fpr: if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 },
        });
    }
    let mut auc = 0.0;
    let (mut last_fpr, mut last_tpr) = (0.0, points[0].tpr);
    for p in points.iter().chain(std::iter::once(&RocPoint { gamma: 0.0, tpr: 1.0, fpr: 1.0 })) {
        auc += (p.fpr - last_fpr) * 0.5 * (p.tpr + last_tpr);
        last_fpr = p.fpr;
        last_tpr = p.tpr;
    }
    RocCurve { points, auc }
}

fn zone_sum(
    plane: &[f64],
    frame: &DogmaFrame,
    east: std::ops::RangeInclusive<i64>,
    north: std::ops::RangeInclusive<i64>,
) -> f64 {
    let spec = frame.spec;
    let mut sum = 0.0;
    for y in 0..spec.height {
        for x in 0..spec.width {
            let (wx, wy) = frame.world_cell(x, y);
            if east.contains(&wx) && north.contains(&wy) {
                sum += plane[spec.index(x, y)];
            }
        }
    }
    sum
}

fn main() {
    let params = load_checkpoint(Path::new("/tmp/tune_checkpoint.dnet")).expect("checkpoint");
    let config = SimConfig::default();

    // --- 8b ---
    let pcfg = ParticleConfig { particle_count: 300_000, horizons: vec![0.5], seed: 5, ..ParticleConfig::default() };
    let mut net_static = Vec::new();
    let mut net_score = Vec::new();
    let mut par_static = Vec::new();
    let mut par_score = Vec::new();
    let mut occupied = Vec::new();
    for scenario in scenarios::eval_set() {
        let frames = simulate(&scenario, &config).expect("sim").frames;
        for &t0 in &[20usize, 35, 50] {
            let frame = &frames[t0];
            let pred = predict(&params, frame).expect("predict");
            let net = PredictionPlane::from_network(&pred, 1, frame.ego_offset).expect("plane");
            let dynamic = classify_dynamic(frame, &pcfg);
            let counts = predict_particles_from(frame, &dynamic, &pcfg).expect("particles");
            let par = PredictionPlane::from_particles(frame, &dynamic, &counts[0]).expect("plane");
            let future = &frames[t0 + 5];
            let truth = binarize_truth(future);
            let spec = frame.spec;
            for y in 0..spec.height {
                for x in 0..spec.width {
                    let world = frame.world_cell(x, y);
                    let Some((tx, ty)) = future.grid_index(world) else { continue };
                    let t = truth[spec.index(tx, ty)];
                    if t == TruthCell::Unobserved {
                        continue;
                    }
                    let i = spec.index(x, y);
                    occupied.push(t == TruthCell::Occupied);
                    net_static.push(net.static_p[i]);
                    net_score.push(net.score[i]);
                    par_static.push(par.static_p[i]);
                    par_score.push(par.score[i]);
                }
            }
        }
    }
    let net_curve = pooled_curve(&net_static, &net_score, &occupied);
    let par_curve = pooled_curve(&par_static, &par_score, &occupied);
    let net_tpr = tpr_at_fpr(&net_curve, 0.05);
    let par_tpr = tpr_at_fpr(&par_curve, 0.05);
    println!(
        "8b: net tpr@5%fpr {net_tpr:.4} (auc {:.4}) vs particle {par_tpr:.4} (auc {:.4}); need net >= particle - 0.05 -> {}",
        net_curve.auc,
        par_curve.auc,
        if net_tpr >= par_tpr - 0.05 { "OK" } else { "SHORT" }
    );

    // --- 8c ---
    let frames = simulate(&scenarios::stop_behind_obstacle(2003, 2.5, Heading::East), &config)
        .expect("sim")
        .frames;
    let frame = &frames[29];
    let pred = predict(&params, frame).expect("predict");
    let net_total = zone_sum(pred.plane(0, 4), frame, -64..=63, 8..=18);
    let net_beyond = zone_sum(pred.plane(0, 4), frame, 9..=63, 8..=18);
    let pcfg2 = ParticleConfig { particle_count: 300_000, horizons: vec![2.0], seed: 5, ..ParticleConfig::default() };
    let counts = &predict_particles(frame, &pcfg2).expect("particles")[0];
    let cv: Vec<f64> = counts.counts.iter().map(|&c| c as f64).collect();
    let cv_total = zone_sum(&cv, frame, -64..=63, 8..=18);
    let cv_beyond = zone_sum(&cv, frame, 9..=63, 8..=18);
    println!(
        "8c: net beyond {:.4} of {:.2} = {:.2}%; cv beyond {:.0} of {:.0} = {:.2}% -> {}",
        net_beyond,
        net_total,
        100.0 * net_beyond / net_total,
        cv_beyond,
        cv_total,
        100.0 * cv_beyond / cv_total,
        if net_beyond / net_total < cv_beyond / cv_total { "OK" } else { "SHORT" }
    );

    // --- 9 ---
    let base = simulate(&scenarios::straight_drive(3001, 2.0, 1.5, Heading::East), &config)
        .expect("sim")
        .frames;
    let donor = simulate(&scenarios::crossing_pedestrian(3002, Heading::North, -2.0), &config)
        .expect("sim")
        .frames;
    let patch = extract_patch(&donor, (12, -2), (3, 3), 50..51, 0.55).expect("patch");
    let mut injected = base.clone();
    let written = inject_patch(&mut injected, &patch, (28, 8), 40, false).expect("inject");
    let east = 33..=42i64;
    let north = 4..=15i64;
    let base_pred = predict(&params, &base[40]).expect("predict");
    let inj_pred = predict(&params, &injected[40]).expect("predict");
    let sum_both = |pred: &Tensor, frame: &DogmaFrame| {
        zone_sum(pred.plane(0, 3), frame, east.clone(), north.clone())
            + zone_sum(pred.plane(0, 4), frame, east.clone(), north.clone())
    };
    let net_base = sum_both(&base_pred, &base[40]);
    let net_inj = sum_both(&inj_pred, &injected[40]);
    println!(
        "9: {written} cells written; net zone mass base {net_base:.4} -> injected {net_inj:.4} (delta {:+.4}) -> {}",
        net_inj - net_base,
        if net_inj < net_base { "OK" } else { "SHORT" }
    );
}
