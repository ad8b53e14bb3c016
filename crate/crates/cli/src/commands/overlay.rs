//! `cytoseg overlay`: render the EDF image with clump boundaries, nucleus
//! regions and per-cell contours in distinct colors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use cytoseg_core::io::{load_gray, load_label_map, load_mask};
use cytoseg_core::raster::BinaryMask;
use image::{Rgb, RgbImage};

#[derive(Args)]
pub struct OverlayArgs {
    /// EDF image used as the background.
    pub edf: PathBuf,

    /// Result directory written by `cytoseg segment`.
    pub result_dir: PathBuf,

    /// Output RGB PNG.
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

const CLUMP_COLOR: Rgb<u8> = Rgb([255, 221, 0]);
const NUCLEUS_COLOR: Rgb<u8> = Rgb([66, 133, 244]);

/// Deterministic per-cell contour palette, indexed modulo its length.
const CELL_PALETTE: [Rgb<u8>; 8] = [
    Rgb([230, 25, 75]),
    Rgb([60, 180, 75]),
    Rgb([255, 140, 0]),
    Rgb([0, 200, 200]),
    Rgb([240, 50, 230]),
    Rgb([170, 255, 0]),
    Rgb([255, 80, 120]),
    Rgb([130, 90, 255]),
];

pub fn run(args: OverlayArgs) -> Result<()> {
    let edf = load_gray(&args.edf)
        .with_context(|| format!("cannot load EDF image {}", args.edf.display()))?;
    if !args.result_dir.is_dir() {
        bail!("result directory {} does not exist", args.result_dir.display());
    }
    let (w, h) = edf.dimensions();
    let mut canvas = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = edf.get(x as usize, y as usize);
        Rgb([v, v, v])
    });

    // Clump boundaries from the label map.
    let clumps_path = args.result_dir.join("clumps.png");
    if clumps_path.exists() {
        let labels = load_label_map(&clumps_path)?;
        if labels.dimensions() != (w, h) {
            bail!("clumps.png size does not match the EDF image");
        }
        for y in 0..h {
            for x in 0..w {
                let l = labels.get(x, y);
                if l == 0 {
                    continue;
                }
                let boundary = neighbors4(x, y, w, h).any(|(nx, ny)| labels.get(nx, ny) != l);
                if boundary {
                    canvas.put_pixel(x as u32, y as u32, CLUMP_COLOR);
                }
            }
        }
    }

    // Nucleus regions, tinted.
    let nuclei_path = args.result_dir.join("nuclei.png");
    if nuclei_path.exists() {
        let nuclei = load_mask(&nuclei_path)?;
        if nuclei.dimensions() != (w, h) {
            bail!("nuclei.png size does not match the EDF image");
        }
        for (x, y) in nuclei.iter_set() {
            let Rgb([r, g, b]) = *canvas.get_pixel(x as u32, y as u32);
            let mix = |base: u8, tint: u8| ((base as u16 + tint as u16) / 2) as u8;
            canvas.put_pixel(
                x as u32,
                y as u32,
                Rgb([
                    mix(r, NUCLEUS_COLOR.0[0]),
                    mix(g, NUCLEUS_COLOR.0[1]),
                    mix(b, NUCLEUS_COLOR.0[2]),
                ]),
            );
        }
    }

    // Per-cell contours, palette indexed by sorted file order.
    for (k, path) in cell_mask_paths(&args.result_dir)?.iter().enumerate() {
        let mask = load_mask(path)?;
        if mask.dimensions() != (w, h) {
            bail!("{} size does not match the EDF image", path.display());
        }
        let color = CELL_PALETTE[k % CELL_PALETTE.len()];
        for (x, y) in contour(&mask) {
            canvas.put_pixel(x as u32, y as u32, color);
        }
    }

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    canvas.save(&args.out)?;
    println!("overlay -> {}", args.out.display());
    Ok(())
}

fn cell_mask_paths(result_dir: &Path) -> Result<Vec<PathBuf>> {
    let cells = result_dir.join("cells");
    if !cells.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&cells)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)]
        .into_iter()
        .filter_map(move |(dx, dy)| {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            (nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64)
                .then_some((nx as usize, ny as usize))
        })
}

/// Mask pixels with at least one 4-neighbor outside the mask.
fn contour(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let (w, h) = mask.dimensions();
    mask.iter_set()
        .filter(|&(x, y)| neighbors4(x, y, w, h).any(|(nx, ny)| !mask.get(nx, ny)))
        .collect()
}
