//! `cytoseg eval`: score predicted per-cell masks against ground truth and
//! emit a JSON report plus `mean ± std` console lines.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use cytoseg_core::io::load_mask;
use cytoseg_core::metrics::match_and_score;
use cytoseg_core::raster::BinaryMask;

#[derive(Args)]
pub struct EvalArgs {
    /// Directory with predicted cell masks (a `cells/` subdirectory or
    /// loose PNG masks).
    pub pred_dir: PathBuf,

    /// Directory with ground-truth cell masks, same layout.
    pub gt_dir: PathBuf,

    /// Output report path.
    #[arg(short, long, value_name = "FILE", default_value = "report.json")]
    pub out: PathBuf,
}

/// Collect per-cell masks: prefer `<dir>/cells/*.png`, else `<dir>/*.png`,
/// sorted by file name.
fn load_cell_masks(dir: &Path) -> Result<Vec<BinaryMask>> {
    let cells = dir.join("cells");
    let scan = if cells.is_dir() { cells } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&scan)
        .with_context(|| format!("cannot read {}", scan.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.eq_ignore_ascii_case("png"))
                    .unwrap_or(false)
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_mask(p).with_context(|| format!("cannot load mask {}", p.display())))
        .collect()
}

fn fmt_stat(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
        _ => "n/a (no matched cells)".to_string(),
    }
}

pub fn run(args: EvalArgs) -> Result<()> {
    if !args.gt_dir.exists() {
        bail!("ground truth directory {} does not exist", args.gt_dir.display());
    }
    let pred = load_cell_masks(&args.pred_dir)?;
    let gt = load_cell_masks(&args.gt_dir)?;
    if gt.is_empty() {
        bail!("no ground-truth masks under {}", args.gt_dir.display());
    }

    let report = match_and_score(&pred, &gt)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;

    println!("DC : {}", fmt_stat(report.dc_mean, report.dc_std));
    println!("TPR: {}", fmt_stat(report.tpr_mean, report.tpr_std));
    println!("FPR: {}", fmt_stat(report.fpr_mean, report.fpr_std));
    println!(
        "matched {} cells; unmatched: {} predicted, {} ground truth",
        report.matched.len(),
        report.unmatched_pred,
        report.unmatched_gt
    );
    println!("matching rule: {}; std: {}", report.matching, report.std_kind);
    Ok(())
}
