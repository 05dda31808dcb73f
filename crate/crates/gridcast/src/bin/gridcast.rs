//! Command-line entry point: parse, dispatch, map errors to exit codes.
//! All real work lives in [`gridcast::run`].

use clap::{Parser, Subcommand};

use gridcast::run::{
    cmd_eval, cmd_inject, cmd_label, cmd_predict_net, cmd_predict_particle, cmd_report,
    cmd_simulate, cmd_train, EvalArgs, InjectArgs, LabelArgs, PredictNetArgs,
    PredictParticleArgs, ReportArgs, SimulateArgs, TrainArgs,
};

/// Future-occupancy prediction on dynamic occupancy grids: simulate
/// recordings, label them, train the network, predict with the network or
/// the particle baseline, and score both.
#[derive(Parser)]
#[command(name = "gridcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Simulate(SimulateArgs),
    Label(LabelArgs),
    Train(TrainArgs),
    PredictNet(PredictNetArgs),
    PredictParticle(PredictParticleArgs),
    Eval(EvalArgs),
    Inject(InjectArgs),
    Report(ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Label(args) => cmd_label(args),
        Command::Train(args) => cmd_train(args),
        Command::PredictNet(args) => cmd_predict_net(args),
        Command::PredictParticle(args) => cmd_predict_particle(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Inject(args) => cmd_inject(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
