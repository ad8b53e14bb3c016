//! `cytoseg`: segmentation of overlapping cervical cells in multi-focal
//! microscopy stacks.

mod commands;
mod config;
mod manifest;
mod stack;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cytoseg", version, about = "Overlapping cervical cell segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse a focal stack into one extended-depth-of-field image.
    Edf(commands::edf::EdfArgs),
    /// Run clump, nucleus and cytoplasm segmentation on a specimen.
    Segment(commands::segment::SegmentArgs),
    /// Score predicted cell masks against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Generate a synthetic specimen with ground truth.
    Synth(commands::synth::SynthArgs),
    /// Render an RGB composite of a segmentation result.
    Overlay(commands::overlay::OverlayArgs),
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Edf(args) => commands::edf::run(args),
        Command::Segment(args) => commands::segment::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Overlay(args) => commands::overlay::run(args),
    }
}
