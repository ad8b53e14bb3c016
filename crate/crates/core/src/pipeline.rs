//! Per-specimen orchestration: clump segmentation on the fused EDF image,
//! per-clump nucleus detection with the prior-weighted threshold, and
//! level-set cytoplasm segmentation seeded at each nucleus.
//!
//! Clumps are independent work units and are processed in parallel; results
//! are assembled in clump-label order, so the output is identical for any
//! worker count.

use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::edf::{fuse_edf, FocalStack, FocusParams};
use crate::error::{Error, Result};
use crate::filter::{adaptive_hist_eq, median_filter};
use crate::levelset::{drlse_evolve, edge_indicator, init_phi_disc, DrlseParams};
use crate::morph::{
    connected_components, fill_holes, h_maxima, regional_maxima, remove_small_components,
};
use crate::raster::{BinaryMask, GrayImage, LabelMap};
use crate::threshold::{modified_otsu, Histogram, ThresholdParams};

/// Reference scale at which the area thresholds are expressed.
const AREA_REFERENCE: f64 = 1024.0 * 1024.0;

/// Components covering more than this fraction of the frame are treated as
/// background regardless of the area filter.
const BACKGROUND_FRACTION: f64 = 0.9;

/// Lower bound for rescaled nonzero area thresholds.
const MIN_AREA_FLOOR: usize = 8;

/// Resolved parameters of the whole pipeline. Area thresholds are expressed
/// at 1024x1024 scale and rescaled by the actual frame area.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    /// Denoising median window applied to the EDF image.
    pub median_window: usize,
    pub clahe_tile_rows: usize,
    pub clahe_tile_cols: usize,
    pub clahe_clip: f64,
    /// Plateau-suppression height of the clump extraction; maxima shallower
    /// than this never become clump bodies.
    pub h_maxima_h: u8,
    /// Minimum clump area in pixels at 1024x1024 scale.
    pub min_clump_area: usize,
    /// Prior probability of the dark (nucleus) class.
    pub prior_alpha: f64,
    /// Minimum nucleus area in pixels at 1024x1024 scale.
    pub min_nucleus_area: usize,
    /// Seed-disc radius for cytoplasm evolution; `None` derives it per
    /// nucleus from the component area (equivalent-circle radius plus a
    /// margin, floor of 5 px).
    pub nucleus_disc_radius: Option<f64>,
    pub drlse: DrlseParams,
    pub focus: FocusParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            median_window: 5,
            clahe_tile_rows: 8,
            clahe_tile_cols: 8,
            clahe_clip: 0.01,
            h_maxima_h: 150,
            min_clump_area: 1000,
            prior_alpha: 0.05,
            min_nucleus_area: 50,
            nucleus_disc_radius: None,
            drlse: DrlseParams::default(),
            focus: FocusParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_window < 3 || self.median_window % 2 == 0 {
            return Err(Error::InvalidParameter("median window must be odd and >= 3".into()));
        }
        if !(self.prior_alpha > 0.0 && self.prior_alpha < 1.0) {
            return Err(Error::InvalidParameter("prior alpha must lie in (0, 1)".into()));
        }
        if self.h_maxima_h == 0 {
            return Err(Error::InvalidParameter("h-maxima height must be >= 1".into()));
        }
        if let Some(r) = self.nucleus_disc_radius {
            if r <= 0.0 {
                return Err(Error::InvalidParameter("nucleus disc radius must be positive".into()));
            }
        }
        self.drlse.validate()
    }

    /// Area threshold rescaled from the 1024x1024 reference to `w x h`.
    /// Nonzero thresholds never scale below a small floor: single-pixel
    /// noise does not shrink with the frame, so a sub-floor threshold would
    /// stop filtering anything at desk scale.
    fn scaled_area(&self, base: usize, w: usize, h: usize) -> usize {
        if base == 0 {
            return 0;
        }
        let scaled = ((base as f64) * (w as f64 * h as f64) / AREA_REFERENCE).round() as usize;
        scaled.max(MIN_AREA_FLOOR)
    }
}

/// One detected nucleus: component centroid and pixel area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nucleus {
    pub centroid: (f64, f64),
    pub area: usize,
}

/// Nucleus detection output for one clump. `flagged` marks clumps whose
/// interior histogram admitted no threshold (degenerate, e.g. constant).
#[derive(Debug, Clone)]
pub struct NucleusSegmentation {
    pub mask: BinaryMask,
    pub nuclei: Vec<Nucleus>,
    pub flagged: bool,
}

/// Everything the pipeline produced for one clump.
#[derive(Debug, Clone, PartialEq)]
pub struct ClumpResult {
    pub clump_id: u32,
    pub nucleus_mask: BinaryMask,
    pub nuclei: Vec<Nucleus>,
    /// One cytoplasm mask per nucleus; masks of one clump may overlap.
    pub cell_masks: Vec<BinaryMask>,
    pub flagged: bool,
}

impl ClumpResult {
    pub fn nucleus_centroids(&self) -> Vec<(f64, f64)> {
        self.nuclei.iter().map(|n| n.centroid).collect()
    }
}

/// Full result for one specimen.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecimenResult {
    pub edf: GrayImage,
    pub clump_labels: LabelMap,
    pub clumps: Vec<ClumpResult>,
}

impl SpecimenResult {
    /// All cell masks across clumps, in clump-label order.
    pub fn all_cells(&self) -> Vec<&BinaryMask> {
        self.clumps.iter().flat_map(|c| c.cell_masks.iter()).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.clumps.iter().map(|c| c.cell_masks.len()).sum()
    }
}

/// Wall-clock stage timings of one run, in milliseconds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageTimings {
    pub edf_ms: f64,
    pub clump_ms: f64,
    pub cell_ms: f64,
}

/// Segment cell clumps from the EDF image.
///
/// Chain: median denoise, CLAHE, photometric inversion (cellular material is
/// darker than the bright-field background, so plateau extraction runs on the
/// inverted image), h-maxima suppression, regional maxima, hole filling, area
/// filter, background guard, connected components.
pub fn segment_clumps(edf: &GrayImage, cfg: &PipelineConfig) -> Result<LabelMap> {
    cfg.validate()?;
    let (w, h) = edf.dimensions();
    let denoised = median_filter(edf, cfg.median_window)?;
    let equalized =
        adaptive_hist_eq(&denoised, cfg.clahe_tile_rows, cfg.clahe_tile_cols, cfg.clahe_clip)?;
    let inverted = equalized.invert();
    let suppressed = h_maxima(&inverted, cfg.h_maxima_h)?;
    let maxima = regional_maxima(&suppressed);
    let filled = fill_holes(&maxima);
    let cleaned = remove_small_components(&filled, cfg.scaled_area(cfg.min_clump_area, w, h));

    // Drop frame-covering components: a plateau spanning the image is the
    // background, not a clump.
    let labels = connected_components(&cleaned);
    let limit = (BACKGROUND_FRACTION * (w * h) as f64) as usize;
    let areas = labels.areas();
    if areas.iter().any(|&a| a > limit) {
        let kept = BinaryMask::from_fn(w, h, |x, y| {
            let l = labels.get(x, y);
            l != 0 && areas[(l - 1) as usize] <= limit
        });
        Ok(connected_components(&kept))
    } else {
        Ok(labels)
    }
}

/// Detect nuclei inside one clump: prior-weighted Otsu on the clump-interior
/// histogram, dark side kept, holes filled, small components dropped.
pub fn segment_nuclei(
    edf: &GrayImage,
    clump: &BinaryMask,
    cfg: &PipelineConfig,
) -> Result<NucleusSegmentation> {
    cfg.validate()?;
    if edf.dimensions() != clump.dimensions() {
        return Err(Error::InvalidInput("EDF image and clump mask differ in size".into()));
    }
    if clump.is_empty() {
        return Err(Error::InvalidInput("clump mask is empty".into()));
    }
    let (w, h) = edf.dimensions();
    let hist = Histogram::from_image_masked(edf, clump)?;
    let params = ThresholdParams::new(cfg.prior_alpha)?;
    let result = match modified_otsu(&hist, &params) {
        Ok(r) => r,
        Err(Error::NoValidThreshold) => {
            return Ok(NucleusSegmentation {
                mask: BinaryMask::new(w, h),
                nuclei: Vec::new(),
                flagged: true,
            });
        }
        Err(e) => return Err(e),
    };

    let raw = BinaryMask::from_fn(w, h, |x, y| {
        clump.get(x, y) && edf.get(x, y) as usize <= result.threshold
    });
    let mask = remove_small_components(
        &fill_holes(&raw),
        cfg.scaled_area(cfg.min_nucleus_area, w, h),
    );

    let labels = connected_components(&mask);
    let mut sums = vec![(0f64, 0f64, 0usize); labels.count()];
    for y in 0..h {
        for x in 0..w {
            let l = labels.get(x, y);
            if l > 0 {
                let s = &mut sums[(l - 1) as usize];
                s.0 += x as f64;
                s.1 += y as f64;
                s.2 += 1;
            }
        }
    }
    let nuclei = sums
        .into_iter()
        .map(|(sx, sy, n)| Nucleus {
            centroid: (sx / n as f64, sy / n as f64),
            area: n,
        })
        .collect();

    Ok(NucleusSegmentation { mask, nuclei, flagged: false })
}

/// Segment cytoplasm for one clump given its nuclei. A clump with a single
/// nucleus is one cell and keeps the clump mask verbatim; with several
/// nuclei, one level-set contour grows from a seed disc at each nucleus,
/// confined to the clump.
pub fn segment_cytoplasm(
    edf: &GrayImage,
    clump: &BinaryMask,
    nuclei: &[Nucleus],
    cfg: &PipelineConfig,
) -> Result<Vec<BinaryMask>> {
    cfg.validate()?;
    match nuclei.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![clump.clone()]),
        _ => {
            let (w, h) = edf.dimensions();
            let g = edge_indicator(edf, cfg.drlse.sigma)?;
            let mut cells = Vec::with_capacity(nuclei.len());
            for nucleus in nuclei {
                let radius = cfg
                    .nucleus_disc_radius
                    .unwrap_or_else(|| seed_radius(nucleus.area));
                let cx = (nucleus.centroid.0.round() as isize).clamp(0, w as isize - 1) as usize;
                let cy = (nucleus.centroid.1.round() as isize).clamp(0, h as isize - 1) as usize;
                let phi0 = init_phi_disc(w, h, (cx, cy), radius, cfg.drlse.c0)?;
                cells.push(drlse_evolve(&phi0, &g, &cfg.drlse, clump)?);
            }
            Ok(cells)
        }
    }
}

/// Equivalent-circle radius of the nucleus component plus a margin that puts
/// the seed contour clear of the nucleus-edge attraction well, floored at
/// 5 px. Smaller margins let the contour lock onto the nucleus rim.
fn seed_radius(area: usize) -> f64 {
    ((area as f64 / std::f64::consts::PI).sqrt() + 4.0).max(5.0)
}

/// Run the full pipeline on a fused EDF image.
pub fn run_on_edf(edf: GrayImage, cfg: &PipelineConfig) -> Result<SpecimenResult> {
    let (result, _) = run_on_edf_timed(edf, cfg)?;
    Ok(result)
}

fn run_on_edf_timed(edf: GrayImage, cfg: &PipelineConfig) -> Result<(SpecimenResult, StageTimings)> {
    let clump_start = Instant::now();
    let clump_labels = segment_clumps(&edf, cfg)?;
    let clump_ms = clump_start.elapsed().as_secs_f64() * 1e3;

    let cell_start = Instant::now();
    let clumps: Vec<ClumpResult> = (1..=clump_labels.count() as u32)
        .into_par_iter()
        .map(|id| {
            let mask = clump_labels.mask_of(id);
            let nuclei = segment_nuclei(&edf, &mask, cfg)?;
            let cells = segment_cytoplasm(&edf, &mask, &nuclei.nuclei, cfg)?;
            debug_assert_eq!(cells.len(), nuclei.nuclei.len());
            debug_assert!(cells.iter().all(|c| c.is_subset_of(&mask)));
            Ok(ClumpResult {
                clump_id: id,
                nucleus_mask: nuclei.mask,
                nuclei: nuclei.nuclei,
                cell_masks: cells,
                flagged: nuclei.flagged,
            })
        })
        .collect::<Result<_>>()?;
    let cell_ms = cell_start.elapsed().as_secs_f64() * 1e3;

    Ok((
        SpecimenResult { edf, clump_labels, clumps },
        StageTimings { edf_ms: 0.0, clump_ms, cell_ms },
    ))
}

/// Fuse the stack and run the full pipeline.
pub fn run_specimen(stack: &FocalStack, cfg: &PipelineConfig) -> Result<SpecimenResult> {
    let (result, _) = run_specimen_timed(stack, cfg)?;
    Ok(result)
}

/// As [`run_specimen`], additionally reporting wall-clock stage timings.
pub fn run_specimen_timed(
    stack: &FocalStack,
    cfg: &PipelineConfig,
) -> Result<(SpecimenResult, StageTimings)> {
    cfg.validate()?;
    let edf_start = Instant::now();
    let edf = fuse_edf(stack, &cfg.focus);
    let edf_ms = edf_start.elapsed().as_secs_f64() * 1e3;
    let (result, timings) = run_on_edf_timed(edf, cfg)?;
    Ok((result, StageTimings { edf_ms, ..timings }))
}
