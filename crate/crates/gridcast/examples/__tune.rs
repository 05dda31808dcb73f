//! Scratch tuning run for the desk-scale training recipe. Not shipped.
use std::time::Instant;

use gridcast::grid::GridSpec;
use gridcast::net::{dataset_loss, save_checkpoint, train, NetworkParams, NetworkSpec, Sample, TrainConfig};
use gridcast::run::label_sequence;
use gridcast::sim::{scenarios, simulate, SimConfig};
use gridcast::{DetectorConfig, LabelSpec};

fn main() {
    let t_all = Instant::now();
    let config = SimConfig {
        grid: GridSpec::new(128, 128, 0.15, 0.1).unwrap(),
        ..SimConfig::default()
    };
    let lspec = LabelSpec::default();
    let det = DetectorConfig::default();

    let mut samples: Vec<Sample> = Vec::new();
    let t = Instant::now();
    for sc in scenarios::training_set() {
        let out = simulate(&sc, &config).unwrap();
        for (t0, lt) in label_sequence(&out.frames, &lspec, &det, 2).unwrap() {
            samples.push(Sample::from_frame_labels(&out.frames[t0], &lt).unwrap());
        }
        println!("  {}: {} samples cumulative, {:.0} s", sc.name, samples.len(), t.elapsed().as_secs_f64());
    }
    println!("data phase: {} samples in {:.0} s", samples.len(), t.elapsed().as_secs_f64());

    let lr: f64 = std::env::var("TUNE_LR").ok().and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let total: usize = std::env::var("TUNE_ITERS").ok().and_then(|s| s.parse().ok()).unwrap_or(4000);
    println!("lr {lr}, {total} iterations");
    let spec = NetworkSpec { widths: vec![8, 16, 32], ..NetworkSpec::default() };
    let mut tc = TrainConfig { iterations: 500, batch_size: 2, seed: 7, ..TrainConfig::default() };
    tc.adam.learning_rate = lr;
    let mut params = NetworkParams::init(spec, 11).unwrap();
    let probe: Vec<Sample> = samples.iter().step_by(9).cloned().collect();

    let init = dataset_loss(&params, &samples, &tc.weights).unwrap();
    let probe_init = dataset_loss(&params, &probe, &tc.weights).unwrap();
    println!("init: dataset loss {:.1} (static {:.1}, dynamic {:.1}); probe {:.1}",
        init.total, init.static_part, init.dynamic_part, probe_init.total);

    let t = Instant::now();
    let mut done = 0usize;
    while done < total {
        let chunk = TrainConfig { seed: tc.seed + done as u64, ..tc.clone() };
        train(&mut params, &samples, &chunk, |_| {}).unwrap();
        done += 500;
        let p = dataset_loss(&params, &probe, &tc.weights).unwrap();
        println!("iter {done}: probe loss {:.1} ({:.1}% of probe init; static {:.1}, dynamic {:.1}), {:.0} s elapsed",
            p.total, 100.0 * p.total / probe_init.total, p.static_part, p.dynamic_part, t.elapsed().as_secs_f64());
    }
    let fin = dataset_loss(&params, &samples, &tc.weights).unwrap();
    println!("final: dataset loss {:.1}, drop {:.1}% from init, total wall {:.0} s",
        fin.total, 100.0 * (1.0 - fin.total / init.total), t_all.elapsed().as_secs_f64());
    save_checkpoint(std::path::Path::new("/tmp/tune_checkpoint.dnet"), &mut params).unwrap();
    println!("checkpoint -> /tmp/tune_checkpoint.dnet");
}
