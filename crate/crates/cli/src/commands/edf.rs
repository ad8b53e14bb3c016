//! `cytoseg edf`: fuse a specimen directory into one all-in-focus image.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use cytoseg_core::edf::{fuse_edf, FocusParams};
use cytoseg_core::io::save_gray;

use crate::stack::load_stack;

#[derive(Args)]
pub struct EdfArgs {
    /// Directory holding the focal planes (plane_00.png, plane_01.png, ...).
    pub specimen_dir: PathBuf,

    /// Output image path (.png or .pgm).
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,

    /// Focus-measure window (odd, >= 3).
    #[arg(long, default_value_t = 9)]
    pub focus_window: usize,

    /// Median window applied to the winning-plane index map (odd, >= 1).
    #[arg(long, default_value_t = 9)]
    pub smooth_window: usize,
}

pub fn run(args: EdfArgs) -> Result<()> {
    let params = FocusParams::new(args.focus_window, args.smooth_window)?;
    let stack = load_stack(&args.specimen_dir)?;
    let fused = fuse_edf(&stack, &params);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    save_gray(&args.out, &fused)?;
    println!(
        "fused {} planes ({}x{}) -> {}",
        stack.plane_count(),
        fused.width(),
        fused.height(),
        args.out.display()
    );
    Ok(())
}
