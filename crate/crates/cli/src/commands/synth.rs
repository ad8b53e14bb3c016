//! `cytoseg synth`: emit a synthetic specimen in the directory layout the
//! other commands consume (focal planes at the top level, ground truth under
//! `gt/`).

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use cytoseg_core::io::{save_gray, save_mask};
use cytoseg_core::synthetic::{generate_specimen, SynthSpec};

fn parse_overlap(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=0.6).contains(&v) {
        Ok(v)
    } else {
        Err(format!("overlap fraction must lie in [0, 0.6], got {v}"))
    }
}

#[derive(Args)]
pub struct SynthArgs {
    /// Generator seed; the same seed reproduces the specimen bit for bit.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Number of cells.
    #[arg(long, default_value_t = 3)]
    pub cells: usize,

    /// Target pairwise overlap ratio in [0, 0.6]; 0 places cells disjoint.
    #[arg(long, value_parser = parse_overlap, default_value_t = 0.3)]
    pub overlap: f64,

    /// Frame side length in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: usize,

    /// Number of focal planes.
    #[arg(long, default_value_t = 20)]
    pub planes: usize,

    /// Output specimen directory.
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::new(args.seed);
    spec.cell_count = args.cells;
    spec.overlap_fraction = args.overlap;
    spec.image_size = args.size;
    spec.plane_count = args.planes;
    let specimen = generate_specimen(&spec)?;

    std::fs::create_dir_all(args.out.join("gt/cells"))?;
    std::fs::create_dir_all(args.out.join("gt/nuclei"))?;
    for (i, plane) in specimen.stack.planes().iter().enumerate() {
        save_gray(args.out.join(format!("plane_{i:02}.png")), plane)?;
    }
    for (i, cell) in specimen.cells.iter().enumerate() {
        save_mask(args.out.join(format!("gt/cells/cell_{i:03}.png")), cell)?;
    }
    for (i, nucleus) in specimen.nuclei.iter().enumerate() {
        save_mask(args.out.join(format!("gt/nuclei/nucleus_{i:03}.png")), nucleus)?;
    }
    save_gray(args.out.join("gt/reference.png"), &specimen.reference)?;

    println!(
        "seed {}: {} cells on {}x{} over {} planes -> {}",
        args.seed,
        specimen.cells.len(),
        args.size,
        args.size,
        specimen.stack.plane_count(),
        args.out.display()
    );
    Ok(())
}
