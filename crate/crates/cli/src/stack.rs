//! Loading focal stacks from specimen directories.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cytoseg_core::edf::FocalStack;
use cytoseg_core::io::load_gray;

const PLANE_EXTENSIONS: [&str; 3] = ["png", "pgm", "pnm"];

/// Plane image paths of a specimen directory, sorted by file name so that
/// zero-padded indices load in stack order.
pub fn plane_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read specimen directory {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| PLANE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
                    .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no plane images (*.png, *.pgm) in {}", dir.display());
    }
    Ok(paths)
}

/// Load every plane of `dir` into a stack, naming the offending file when
/// a plane cannot be read or its size disagrees with the first plane.
pub fn load_stack(dir: &Path) -> Result<FocalStack> {
    let paths = plane_paths(dir)?;
    let mut planes = Vec::with_capacity(paths.len());
    let mut dims = None;
    for path in &paths {
        let plane =
            load_gray(path).with_context(|| format!("cannot load plane {}", path.display()))?;
        match dims {
            None => dims = Some(plane.dimensions()),
            Some(d) if d != plane.dimensions() => {
                bail!(
                    "plane {} is {}x{}, expected {}x{}",
                    path.display(),
                    plane.dimensions().0,
                    plane.dimensions().1,
                    d.0,
                    d.1
                );
            }
            _ => {}
        }
        planes.push(plane);
    }
    Ok(FocalStack::new(planes)?)
}
