//! Deterministic synthetic specimens: overlapping elliptical cells with dark
//! nuclei, rendered into a defocus stack with per-cell ground truth masks.
//!
//! Cells are placed in clusters of at most two. A positive overlap target
//! makes consecutive cells pair up (each pair hitting the target ratio within
//! 0.1), with a leftover odd cell placed solitary; a zero target places every
//! cell disjoint from the others. Intensities follow the bright-field
//! convention: nuclei darkest, background brightest, and overlapping
//! cytoplasm darker than a single layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::edf::FocalStack;
use crate::error::{Error, Result};
use crate::filter::gaussian_blur_field;
use crate::raster::{BinaryMask, FloatField, GrayImage};

/// Mean and per-pixel texture deviation of one intensity class.
#[derive(Debug, Clone, Copy)]
pub struct ClassIntensity {
    pub mean: f64,
    pub std: f64,
}

/// Bright-field intensity model; the ordering
/// `nucleus.mean < cytoplasm.mean < background.mean` is enforced.
#[derive(Debug, Clone, Copy)]
pub struct IntensityModel {
    pub background: ClassIntensity,
    pub cytoplasm: ClassIntensity,
    pub nucleus: ClassIntensity,
    /// Extra darkening per additional cytoplasm layer in overlap regions.
    pub overlap_darkening: f64,
}

impl Default for IntensityModel {
    fn default() -> Self {
        IntensityModel {
            background: ClassIntensity { mean: 232.0, std: 3.0 },
            cytoplasm: ClassIntensity { mean: 170.0, std: 4.0 },
            nucleus: ClassIntensity { mean: 60.0, std: 4.0 },
            overlap_darkening: 40.0,
        }
    }
}

/// Full description of one synthetic specimen.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub seed: u64,
    /// Side length of the square frame.
    pub image_size: usize,
    pub cell_count: usize,
    /// Target pairwise overlap ratio `|A.B| / min(|A|, |B|)`, in [0, 0.6].
    pub overlap_fraction: f64,
    pub plane_count: usize,
    pub intensity: IntensityModel,
    /// Defocus blur grows by this sigma per plane of distance...
    pub blur_per_plane: f64,
    /// ...up to this cap.
    pub blur_cap: f64,
    /// Per-plane sensor noise.
    pub noise_std: f64,
}

impl SynthSpec {
    pub fn new(seed: u64) -> Self {
        SynthSpec {
            seed,
            image_size: 256,
            cell_count: 3,
            overlap_fraction: 0.3,
            plane_count: 20,
            intensity: IntensityModel::default(),
            blur_per_plane: 0.8,
            blur_cap: 6.0,
            noise_std: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.image_size < 64 {
            return Err(Error::InvalidParameter("image size must be at least 64".into()));
        }
        if self.cell_count == 0 {
            return Err(Error::InvalidParameter("cell count must be positive".into()));
        }
        if !(0.0..=0.6).contains(&self.overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction must lie in [0, 0.6], got {}",
                self.overlap_fraction
            )));
        }
        if self.plane_count == 0 {
            return Err(Error::InvalidParameter("plane count must be positive".into()));
        }
        let i = &self.intensity;
        if !(i.nucleus.mean < i.cytoplasm.mean && i.cytoplasm.mean < i.background.mean) {
            return Err(Error::InvalidParameter(
                "intensity means must satisfy nucleus < cytoplasm < background".into(),
            ));
        }
        Ok(())
    }
}

/// Generated stack plus ground truth. `reference` is the all-in-focus
/// composite the stack was rendered from, before sensor noise.
#[derive(Debug, Clone)]
pub struct SyntheticSpecimen {
    pub stack: FocalStack,
    pub cells: Vec<BinaryMask>,
    pub nuclei: Vec<BinaryMask>,
    pub reference: GrayImage,
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    theta: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let (sin, cos) = self.theta.sin_cos();
        let u = (dx * cos + dy * sin) / self.a;
        let v = (-dx * sin + dy * cos) / self.b;
        u * u + v * v <= 1.0
    }

    fn grown(&self, margin: f64) -> Ellipse {
        Ellipse { a: self.a + margin, b: self.b + margin, ..*self }
    }

    fn rasterize(&self, size: usize) -> BinaryMask {
        BinaryMask::from_fn(size, size, |x, y| self.contains(x as f64, y as f64))
    }
}

const MAX_REJECTION_ROUNDS: usize = 10_000;

/// Generate the stack and ground truth for `spec`. The same spec always
/// produces bit-identical output.
pub fn generate_specimen(spec: &SynthSpec) -> Result<SyntheticSpecimen> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let size = spec.image_size;

    let cells = place_cells(spec, &mut rng)?;
    let cell_masks: Vec<BinaryMask> = cells.iter().map(|e| e.rasterize(size)).collect();
    let nuclei = place_nuclei(&cells, &cell_masks, size, &mut rng);
    let nucleus_masks: Vec<BinaryMask> = nuclei.iter().map(|e| e.rasterize(size)).collect();

    // Focal plane per cell, distinct while planes last.
    let mut plane_order: Vec<usize> = (0..spec.plane_count).collect();
    for i in (1..plane_order.len()).rev() {
        let j = rng.random_range(0..=i);
        plane_order.swap(i, j);
    }
    let cell_planes: Vec<usize> =
        (0..cells.len()).map(|k| plane_order[k % spec.plane_count]).collect();

    // Cytoplasm layer count per pixel, for overlap darkening.
    let mut coverage = vec![0u8; size * size];
    for mask in &cell_masks {
        for (i, &set) in mask.as_slice().iter().enumerate() {
            if set {
                coverage[i] += 1;
            }
        }
    }

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let model = &spec.intensity;
    let mut background = FloatField::new(size, size);
    for y in 0..size {
        for x in 0..size {
            background.set(x, y, model.background.mean + model.background.std * normal.sample(&mut rng));
        }
    }

    // Per-cell sharp value layer: cytoplasm shade (darkened by layer count)
    // with the nucleus punched in, textured once so every focal plane sees
    // the same specimen.
    let mut values: Vec<FloatField> = Vec::with_capacity(cells.len());
    for (mask, nucleus) in cell_masks.iter().zip(&nucleus_masks) {
        let mut field = FloatField::new(size, size);
        for (i, &set) in mask.as_slice().iter().enumerate() {
            if !set {
                continue;
            }
            let (x, y) = (i % size, i / size);
            let v = if nucleus.get(x, y) {
                model.nucleus.mean + model.nucleus.std * normal.sample(&mut rng)
            } else {
                model.cytoplasm.mean - model.overlap_darkening * (coverage[i] as f64 - 1.0)
                    + model.cytoplasm.std * normal.sample(&mut rng)
            };
            field.set(x, y, v);
        }
        values.push(field);
    }

    let reference = {
        let mut canvas = background.clone();
        for (mask, value) in cell_masks.iter().zip(&values) {
            for (x, y) in mask.iter_set() {
                canvas.set(x, y, value.get(x, y));
            }
        }
        to_gray(&canvas)
    };

    let mut planes = Vec::with_capacity(spec.plane_count);
    for q in 0..spec.plane_count {
        let mut canvas = background.clone();
        for (k, (mask, value)) in cell_masks.iter().zip(&values).enumerate() {
            let dist = (q as f64 - cell_planes[k] as f64).abs();
            let sigma = (spec.blur_per_plane * dist).min(spec.blur_cap);
            composite_blurred(&mut canvas, mask, value, &cells[k], sigma);
        }
        let mut img_data = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let v = canvas.get(x, y) + spec.noise_std * normal.sample(&mut rng);
                img_data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        planes.push(GrayImage::from_raw(size, size, img_data)?);
    }

    Ok(SyntheticSpecimen {
        stack: FocalStack::new(planes)?,
        cells: cell_masks,
        nuclei: nucleus_masks,
        reference,
    })
}

fn place_cells(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Ellipse>> {
    let size = spec.image_size as f64;
    let lo = 0.09 * size;
    let hi = 0.14 * size;
    let gap = 6.0;
    let mut rounds = 0usize;
    let spend = |rounds: &mut usize| -> Result<()> {
        *rounds += 1;
        if *rounds > MAX_REJECTION_ROUNDS {
            return Err(Error::GenerationFailure(format!(
                "no admissible cell placement after {MAX_REJECTION_ROUNDS} rejection rounds"
            )));
        }
        Ok(())
    };

    let sample_axes = |rng: &mut ChaCha8Rng| -> (f64, f64, f64) {
        (
            rng.random_range(lo..hi),
            rng.random_range(lo..hi),
            rng.random_range(0.0..std::f64::consts::PI),
        )
    };

    let in_frame = |e: &Ellipse| {
        let r = e.a.max(e.b) + 2.0;
        e.cx - r >= 0.0 && e.cy - r >= 0.0 && e.cx + r < size && e.cy + r < size
    };
    let separated = |e: &Ellipse, placed: &[Ellipse], skip: Option<usize>| {
        let g = e.grown(gap);
        placed.iter().enumerate().all(|(i, other)| {
            if Some(i) == skip {
                return true;
            }
            !ellipses_touch(&g, &other.grown(gap), spec.image_size)
        })
    };

    let mut cells: Vec<Ellipse> = Vec::with_capacity(spec.cell_count);
    let mut remaining = spec.cell_count;
    while remaining > 0 {
        let paired = spec.overlap_fraction > 0.0 && remaining >= 2;

        // Anchor of the cluster.
        let anchor = loop {
            spend(&mut rounds)?;
            let (a, b, theta) = sample_axes(rng);
            let e = Ellipse {
                cx: rng.random_range(0.0..size),
                cy: rng.random_range(0.0..size),
                a,
                b,
                theta,
            };
            if in_frame(&e) && separated(&e, &cells, None) {
                break e;
            }
        };
        let anchor_index = cells.len();
        cells.push(anchor);
        remaining -= 1;

        if paired {
            let target = spec.overlap_fraction;
            let partner = loop {
                spend(&mut rounds)?;
                let (a, b, theta) = sample_axes(rng);
                let dir = rng.random_range(0.0..std::f64::consts::TAU);
                let d = rng.random_range(0.4..1.4) * (anchor.a.max(anchor.b) + a.max(b)) / 2.0;
                let e = Ellipse {
                    cx: anchor.cx + d * dir.cos(),
                    cy: anchor.cy + d * dir.sin(),
                    a,
                    b,
                    theta,
                };
                if !in_frame(&e) || !separated(&e, &cells, Some(anchor_index)) {
                    continue;
                }
                let ratio = overlap_ratio(&anchor, &e, spec.image_size);
                if (ratio - target).abs() <= 0.1 {
                    break e;
                }
            };
            cells.push(partner);
            remaining -= 1;
        }
    }
    Ok(cells)
}

/// Pairwise overlap ratio `|A.B| / min(|A|, |B|)` on the pixel grid.
fn overlap_ratio(a: &Ellipse, b: &Ellipse, size: usize) -> f64 {
    let mut inter = 0usize;
    let mut area_a = 0usize;
    let mut area_b = 0usize;
    for y in 0..size {
        for x in 0..size {
            let (fa, fb) = (a.contains(x as f64, y as f64), b.contains(x as f64, y as f64));
            inter += (fa && fb) as usize;
            area_a += fa as usize;
            area_b += fb as usize;
        }
    }
    if area_a == 0 || area_b == 0 {
        return 0.0;
    }
    inter as f64 / area_a.min(area_b) as f64
}

fn ellipses_touch(a: &Ellipse, b: &Ellipse, size: usize) -> bool {
    // Cheap reject by bounding circles first.
    let dx = a.cx - b.cx;
    let dy = a.cy - b.cy;
    let reach = a.a.max(a.b) + b.a.max(b.b);
    if dx * dx + dy * dy > reach * reach {
        return false;
    }
    for y in 0..size {
        for x in 0..size {
            if a.contains(x as f64, y as f64) && b.contains(x as f64, y as f64) {
                return true;
            }
        }
    }
    false
}

fn place_nuclei(
    cells: &[Ellipse],
    cell_masks: &[BinaryMask],
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Ellipse> {
    cells
        .iter()
        .zip(cell_masks)
        .map(|(cell, mask)| {
            let base = Ellipse {
                a: 0.28 * cell.a,
                b: 0.28 * cell.b,
                ..*cell
            };
            for _ in 0..50 {
                let r = rng.random_range(0.0..0.3) * (cell.a.min(cell.b) - base.a.max(base.b));
                let dir = rng.random_range(0.0..std::f64::consts::TAU);
                let candidate = Ellipse {
                    cx: cell.cx + r * dir.cos(),
                    cy: cell.cy + r * dir.sin(),
                    ..base
                };
                if candidate.rasterize(size).is_subset_of(mask) {
                    return candidate;
                }
            }
            base
        })
        .collect()
}

/// Blur the cell layer by `sigma` and alpha-composite it over the canvas.
/// Work is confined to the cell bounding box plus the blur support.
fn composite_blurred(
    canvas: &mut FloatField,
    mask: &BinaryMask,
    value: &FloatField,
    cell: &Ellipse,
    sigma: f64,
) {
    let size = canvas.width();
    if sigma <= 0.0 {
        for (x, y) in mask.iter_set() {
            canvas.set(x, y, value.get(x, y));
        }
        return;
    }
    let pad = (3.0 * sigma).ceil() + 2.0;
    let reach = cell.a.max(cell.b) + pad;
    let x0 = (cell.cx - reach).floor().max(0.0) as usize;
    let y0 = (cell.cy - reach).floor().max(0.0) as usize;
    let x1 = ((cell.cx + reach).ceil() as usize + 1).min(size);
    let y1 = ((cell.cy + reach).ceil() as usize + 1).min(size);
    let (bw, bh) = (x1 - x0, y1 - y0);

    let mut premult = FloatField::new(bw, bh);
    let mut alpha = FloatField::new(bw, bh);
    for y in 0..bh {
        for x in 0..bw {
            if mask.get(x0 + x, y0 + y) {
                premult.set(x, y, value.get(x0 + x, y0 + y));
                alpha.set(x, y, 1.0);
            }
        }
    }
    let premult = gaussian_blur_field(&premult, sigma);
    let alpha = gaussian_blur_field(&alpha, sigma);
    for y in 0..bh {
        for x in 0..bw {
            let a = alpha.get(x, y).clamp(0.0, 1.0);
            if a > 0.0 {
                let old = canvas.get(x0 + x, y0 + y);
                canvas.set(x0 + x, y0 + y, old * (1.0 - a) + premult.get(x, y));
            }
        }
    }
}

fn to_gray(field: &FloatField) -> GrayImage {
    GrayImage::from_fn(field.width(), field.height(), |x, y| {
        field.get(x, y).round().clamp(0.0, 255.0) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_contains_its_nucleus() {
        let mut spec = SynthSpec::new(7);
        spec.cell_count = 1;
        spec.overlap_fraction = 0.0;
        spec.plane_count = 3;
        let s = generate_specimen(&spec).unwrap();
        assert_eq!(s.cells.len(), 1);
        assert_eq!(s.nuclei.len(), 1);
        assert!(s.nuclei[0].is_subset_of(&s.cells[0]));
        assert!(!s.nuclei[0].is_empty());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = SynthSpec::new(99);
        let a = generate_specimen(&spec).unwrap();
        let b = generate_specimen(&spec).unwrap();
        assert_eq!(a.reference, b.reference);
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.nuclei, b.nuclei);
        for (pa, pb) in a.stack.planes().iter().zip(b.stack.planes()) {
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn pair_overlap_lands_in_the_target_window() {
        let mut spec = SynthSpec::new(404);
        spec.cell_count = 2;
        spec.overlap_fraction = 0.3;
        spec.plane_count = 5;
        let s = generate_specimen(&spec).unwrap();
        let inter = s.cells[0].and(&s.cells[1]).area() as f64;
        let ratio = inter / s.cells[0].area().min(s.cells[1].area()) as f64;
        assert!((0.2..=0.4).contains(&ratio), "overlap ratio {ratio}");
    }

    #[test]
    fn zero_overlap_places_disjoint_cells() {
        let mut spec = SynthSpec::new(11);
        spec.cell_count = 3;
        spec.overlap_fraction = 0.0;
        spec.plane_count = 4;
        let s = generate_specimen(&spec).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(s.cells[i].and(&s.cells[j]).is_empty());
            }
        }
    }

    #[test]
    fn every_nucleus_is_inside_its_cell() {
        for seed in [1u64, 2, 3, 4] {
            let mut spec = SynthSpec::new(seed);
            spec.cell_count = 4;
            spec.plane_count = 6;
            let s = generate_specimen(&spec).unwrap();
            for (cell, nucleus) in s.cells.iter().zip(&s.nuclei) {
                assert!(nucleus.is_subset_of(cell));
            }
        }
    }

    #[test]
    fn cytoplasm_mass_dominates_nucleus_mass() {
        for seed in [5u64, 6, 7] {
            let mut spec = SynthSpec::new(seed);
            spec.cell_count = 3;
            spec.plane_count = 4;
            let s = generate_specimen(&spec).unwrap();
            let nucleus_px: usize = s.nuclei.iter().map(|m| m.area()).sum();
            let mut union = BinaryMask::new(spec.image_size, spec.image_size);
            for c in &s.cells {
                union = union.or(c);
            }
            let cyto_px = union.area() - nucleus_px;
            assert!(
                cyto_px >= 10 * nucleus_px,
                "cytoplasm {cyto_px} px vs nucleus {nucleus_px} px"
            );
        }
    }

    #[test]
    fn planes_differ_from_reference_only_by_blur_and_noise() {
        let mut spec = SynthSpec::new(31);
        spec.cell_count = 2;
        spec.overlap_fraction = 0.0;
        spec.plane_count = 6;
        let s = generate_specimen(&spec).unwrap();
        // Background pixels far from cells are blur-invariant; planes should
        // match the reference there up to sensor noise.
        let mut union = BinaryMask::new(spec.image_size, spec.image_size);
        for c in &s.cells {
            union = union.or(c);
        }
        for plane in s.stack.planes() {
            let mut acc = 0.0;
            let mut n = 0usize;
            for y in (0..spec.image_size).step_by(7) {
                for x in (0..spec.image_size).step_by(7) {
                    if !union.get(x, y) {
                        acc += (plane.get(x, y) as f64 - s.reference.get(x, y) as f64).abs();
                        n += 1;
                    }
                }
            }
            let mean = acc / n as f64;
            assert!(mean < 4.0 * spec.noise_std + 1.0, "background deviates by {mean}");
        }
    }

    #[test]
    fn impossible_overlap_target_fails_cleanly() {
        let mut spec = SynthSpec::new(1);
        spec.image_size = 64;
        spec.cell_count = 40;
        spec.overlap_fraction = 0.0;
        spec.plane_count = 2;
        match generate_specimen(&spec) {
            Err(Error::GenerationFailure(_)) => {}
            other => panic!("expected generation failure, got {other:?}"),
        }
    }
}
