//! `cytoseg segment`: run the full pipeline on one specimen and write the
//! result directory (EDF image, clump labels, nucleus mask, per-cell masks,
//! result.json, manifest.json).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use cytoseg_core::io::{save_gray, save_label_map, save_mask};
use cytoseg_core::pipeline::{
    run_specimen_timed, PipelineConfig, SpecimenResult, StageTimings,
};
use cytoseg_core::raster::BinaryMask;
use serde::Serialize;

use crate::config::{resolve, resolve_jobs, Overrides};
use crate::manifest::RunManifest;

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("prior probability must lie strictly between 0 and 1, got {v}"))
    }
}

#[derive(Args)]
pub struct SegmentArgs {
    /// Specimen directory (focal planes) or a single EDF image file.
    pub input: PathBuf,

    /// Output directory for the result layout.
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,

    /// Optional `key = value` config file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Prior probability of the dark (nucleus) class, in (0, 1).
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,

    /// H-maxima suppression height (1-255).
    #[arg(long = "h", value_parser = clap::value_parser!(u8).range(1..))]
    pub h_maxima: Option<u8>,

    /// Median window (odd, >= 3).
    #[arg(long)]
    pub median_window: Option<usize>,

    /// Minimum clump area in pixels at 1024x1024 scale.
    #[arg(long)]
    pub min_clump_area: Option<usize>,

    /// Minimum nucleus area in pixels at 1024x1024 scale.
    #[arg(long)]
    pub min_nucleus_area: Option<usize>,

    /// Fixed seed-disc radius; omitted = derived per nucleus.
    #[arg(long)]
    pub nucleus_disc_radius: Option<f64>,

    /// Level-set evolution steps.
    #[arg(long)]
    pub drlse_iters: Option<usize>,

    /// Worker thread cap (falls back to CYTOSEG_JOBS, then all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Serialize)]
struct ClumpJson {
    id: u32,
    flagged: bool,
    nucleus_count: usize,
    centroids: Vec<(f64, f64)>,
    nucleus_areas: Vec<usize>,
    cell_count: usize,
    cells: Vec<String>,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    input: String,
    config: &'a PipelineConfig,
    clump_count: usize,
    cell_count: usize,
    clumps: Vec<ClumpJson>,
}

pub fn run(args: SegmentArgs) -> Result<()> {
    let overrides = Overrides {
        prior_alpha: args.alpha,
        h_maxima_h: args.h_maxima,
        median_window: args.median_window,
        min_clump_area: args.min_clump_area,
        min_nucleus_area: args.min_nucleus_area,
        nucleus_disc_radius: args.nucleus_disc_radius,
        drlse_iterations: args.drlse_iters,
    };
    let cfg = resolve(args.config.as_deref(), &overrides)?;
    let jobs = resolve_jobs(args.jobs)?;

    let (result, timings) = process(&args.input, &cfg, jobs)?;
    write_result_dir(&args.out, &args.input, &cfg, jobs, &result, timings)?;
    println!(
        "{}: {} clumps, {} cells -> {}",
        args.input.display(),
        result.clump_labels.count(),
        result.cell_count(),
        args.out.display()
    );
    Ok(())
}

fn process(
    input: &Path,
    cfg: &PipelineConfig,
    jobs: Option<usize>,
) -> Result<(SpecimenResult, StageTimings)> {
    let run = || -> Result<(SpecimenResult, StageTimings)> {
        if input.is_dir() {
            let stack = crate::stack::load_stack(input)?;
            Ok(run_specimen_timed(&stack, cfg)?)
        } else {
            let edf = cytoseg_core::io::load_gray(input)
                .with_context(|| format!("cannot load EDF image {}", input.display()))?;
            let start = std::time::Instant::now();
            let result = cytoseg_core::pipeline::run_on_edf(edf, cfg)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            Ok((result, StageTimings { edf_ms: 0.0, clump_ms: elapsed, cell_ms: 0.0 }))
        }
    };
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot build worker pool")?;
            pool.install(run)
        }
        None => run(),
    }
}

fn write_result_dir(
    out: &Path,
    input: &Path,
    cfg: &PipelineConfig,
    jobs: Option<usize>,
    result: &SpecimenResult,
    timings: StageTimings,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let cells_dir = out.join("cells");
    std::fs::create_dir_all(&cells_dir)?;

    save_gray(out.join("edf.png"), &result.edf)?;
    save_label_map(out.join("clumps.png"), &result.clump_labels)?;

    let (w, h) = result.edf.dimensions();
    let mut nuclei_union = BinaryMask::new(w, h);
    for clump in &result.clumps {
        nuclei_union = nuclei_union.or(&clump.nucleus_mask);
    }
    save_mask(out.join("nuclei.png"), &nuclei_union)?;

    let mut clumps_json = Vec::with_capacity(result.clumps.len());
    for clump in &result.clumps {
        let mut cell_files = Vec::with_capacity(clump.cell_masks.len());
        for (k, cell) in clump.cell_masks.iter().enumerate() {
            let name = format!("cells/cell_{}_{k}.png", clump.clump_id);
            save_mask(out.join(&name), cell)?;
            cell_files.push(name);
        }
        clumps_json.push(ClumpJson {
            id: clump.clump_id,
            flagged: clump.flagged,
            nucleus_count: clump.nuclei.len(),
            centroids: clump.nucleus_centroids(),
            nucleus_areas: clump.nuclei.iter().map(|n| n.area).collect(),
            cell_count: clump.cell_masks.len(),
            cells: cell_files,
        });
    }

    let result_json = ResultJson {
        input: input.display().to_string(),
        config: cfg,
        clump_count: result.clump_labels.count(),
        cell_count: result.cell_count(),
        clumps: clumps_json,
    };
    std::fs::write(
        out.join("result.json"),
        serde_json::to_string_pretty(&result_json)?,
    )?;

    RunManifest::new(input, jobs, cfg, timings).write(out)?;
    Ok(())
}
