//! Spatial filters: median smoothing, contrast-limited adaptive histogram
//! equalization and the Gaussian blur shared by the level-set forcing field
//! and the synthetic renderer.
//!
//! Every window filter replicates edge pixels instead of padding with a
//! constant, so borders never introduce artificial extrema.

use crate::error::{Error, Result};
use crate::raster::{FloatField, GrayImage};

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    Ok(())
}

/// Median filter over a `window x window` neighborhood with edge replication.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    check_window(window)?;
    let data = median_plane(img.as_slice(), img.width(), img.height(), window);
    GrayImage::from_raw(img.width(), img.height(), data)
}

/// Median of the window centered on each cell, for any ordered sample type.
/// Also used to smooth the plane-index map during focus stacking.
pub(crate) fn median_plane<T: Copy + Ord>(
    data: &[T],
    width: usize,
    height: usize,
    window: usize,
) -> Vec<T> {
    let r = (window / 2) as isize;
    let mut out = Vec::with_capacity(data.len());
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..height as isize {
        for x in 0..width as isize {
            buf.clear();
            for dy in -r..=r {
                let cy = dy.saturating_add(y).clamp(0, height as isize - 1) as usize;
                for dx in -r..=r {
                    let cx = dx.saturating_add(x).clamp(0, width as isize - 1) as usize;
                    buf.push(data[cy * width + cx]);
                }
            }
            let mid = buf.len() / 2;
            let (_, median, _) = buf.select_nth_unstable(mid);
            out.push(*median);
        }
    }
    out
}

/// Contrast-limited adaptive histogram equalization.
///
/// The image is divided into a `tile_rows x tile_cols` grid; each tile gets a
/// clipped-histogram CDF mapping (clip level = `clip_limit` fraction of the
/// tile pixel count, never below one count), with clipped excess redistributed
/// uniformly over all bins. Pixels are remapped by bilinear interpolation
/// between the four surrounding tile mappings. A 1x1 grid with `clip_limit`
/// 1.0 degenerates to global histogram equalization.
pub fn adaptive_hist_eq(
    img: &GrayImage,
    tile_rows: usize,
    tile_cols: usize,
    clip_limit: f64,
) -> Result<GrayImage> {
    if tile_rows == 0 || tile_cols == 0 {
        return Err(Error::InvalidParameter("tile grid must be at least 1x1".into()));
    }
    if !(clip_limit > 0.0 && clip_limit <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "clip limit must lie in (0, 1], got {clip_limit}"
        )));
    }
    let (w, h) = img.dimensions();
    if w / tile_cols < 2 || h / tile_rows < 2 {
        return Err(Error::InvalidParameter(format!(
            "degenerate tiles: {w}x{h} image with {tile_rows}x{tile_cols} grid"
        )));
    }

    // Tile i spans [i*extent/n, (i+1)*extent/n); uneven remainders are spread
    // by the integer division itself.
    let col_bound = |i: usize| i * w / tile_cols;
    let row_bound = |j: usize| j * h / tile_rows;

    let mut luts = vec![[0u8; 256]; tile_rows * tile_cols];
    let mut centers_x = vec![0.0f64; tile_cols];
    let mut centers_y = vec![0.0f64; tile_rows];
    for j in 0..tile_rows {
        let (y0, y1) = (row_bound(j), row_bound(j + 1));
        centers_y[j] = (y0 + y1) as f64 / 2.0 - 0.5;
        for i in 0..tile_cols {
            let (x0, x1) = (col_bound(i), col_bound(i + 1));
            centers_x[i] = (x0 + x1) as f64 / 2.0 - 0.5;
            luts[j * tile_cols + i] = tile_lut(img, x0, x1, y0, y1, clip_limit);
        }
    }

    let mut out = GrayImage::new(w, h);
    for y in 0..h {
        // Bracketing tile rows for this scanline.
        let (j0, j1, fy) = bracket(y as f64, &centers_y);
        for x in 0..w {
            let (i0, i1, fx) = bracket(x as f64, &centers_x);
            let v = img.get(x, y) as usize;
            let tl = luts[j0 * tile_cols + i0][v] as f64;
            let tr = luts[j0 * tile_cols + i1][v] as f64;
            let bl = luts[j1 * tile_cols + i0][v] as f64;
            let br = luts[j1 * tile_cols + i1][v] as f64;
            let top = tl * (1.0 - fx) + tr * fx;
            let bottom = bl * (1.0 - fx) + br * fx;
            let mixed = top * (1.0 - fy) + bottom * fy;
            out.set(x, y, mixed.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

/// Indices of the two tile centers bracketing `coord` plus the interpolation
/// fraction; clamps to the outermost centers.
fn bracket(coord: f64, centers: &[f64]) -> (usize, usize, f64) {
    if coord <= centers[0] {
        return (0, 0, 0.0);
    }
    if coord >= *centers.last().unwrap() {
        let last = centers.len() - 1;
        return (last, last, 0.0);
    }
    let mut hi = 1;
    while centers[hi] < coord {
        hi += 1;
    }
    let lo = hi - 1;
    let span = centers[hi] - centers[lo];
    (lo, hi, (coord - centers[lo]) / span)
}

fn tile_lut(img: &GrayImage, x0: usize, x1: usize, y0: usize, y1: usize, clip_limit: f64) -> [u8; 256] {
    let area = (x1 - x0) * (y1 - y0);
    let mut hist = [0u64; 256];
    for y in y0..y1 {
        for x in x0..x1 {
            hist[img.get(x, y) as usize] += 1;
        }
    }

    let clip = ((clip_limit * area as f64).floor() as u64).max(1);
    let mut excess = 0u64;
    for bin in hist.iter_mut() {
        if *bin > clip {
            excess += *bin - clip;
            *bin = clip;
        }
    }
    // Uniform redistribution of the clipped mass; the remainder goes to the
    // lowest bins so the total count is preserved exactly.
    let share = excess / 256;
    let mut leftover = (excess % 256) as usize;
    for bin in hist.iter_mut() {
        *bin += share;
        if leftover > 0 {
            *bin += 1;
            leftover -= 1;
        }
    }

    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    for (i, &count) in hist.iter().enumerate() {
        cdf += count;
        lut[i] = ((cdf as f64 * 255.0) / area as f64).round().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Separable Gaussian blur of a float field with edge replication. The kernel
/// is truncated at three standard deviations; `sigma <= 0` is the identity.
pub fn gaussian_blur_field(field: &FloatField, sigma: f64) -> FloatField {
    if sigma <= 0.0 {
        return field.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-((d * d) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }

    let (w, h) = field.dimensions();
    let mut tmp = FloatField::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = x as isize + ki as isize - radius;
                acc += k * field.get_clamped(sx, y as isize);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = FloatField::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = y as isize + ki as isize - radius;
                acc += k * tmp.get_clamped(x as isize, sy);
            }
            out.set(x, y, acc);
        }
    }
    out
}
