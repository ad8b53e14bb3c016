//! Extended-depth-of-field fusion: collapse a multi-focal stack into one
//! all-in-focus image by per-pixel selection of the sharpest plane.
//!
//! Sharpness is the sum-modified-Laplacian energy box-summed over a window;
//! the winning plane-index map is median smoothed before the final selection,
//! so the output is always a selection of input intensities, never a blend.

use crate::error::{Error, Result};
use crate::filter::median_plane;
use crate::raster::{FloatField, GrayImage};

/// Ordered stack of co-registered focal planes sharing one geometry.
#[derive(Debug, Clone)]
pub struct FocalStack {
    planes: Vec<GrayImage>,
}

impl FocalStack {
    /// Wraps the planes; the stack must be non-empty and all planes must
    /// share dimensions.
    pub fn new(planes: Vec<GrayImage>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidInput("focal stack holds no planes".into()))?;
        let dims = first.dimensions();
        for (i, plane) in planes.iter().enumerate() {
            if plane.dimensions() != dims {
                return Err(Error::InvalidInput(format!(
                    "plane {i} is {:?}, expected {:?}",
                    plane.dimensions(),
                    dims
                )));
            }
        }
        Ok(FocalStack { planes })
    }

    pub fn planes(&self) -> &[GrayImage] {
        &self.planes
    }

    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.planes[0].dimensions()
    }
}

/// Windows of the focus measure and of the index-map smoothing.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FocusParams {
    window: usize,
    smooth_window: usize,
}

impl FocusParams {
    /// `window` must be odd and >= 3; `smooth_window` odd and >= 1
    /// (1 disables smoothing).
    pub fn new(window: usize, smooth_window: usize) -> Result<Self> {
        if window < 3 || window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "focus window must be odd and >= 3, got {window}"
            )));
        }
        if smooth_window == 0 || smooth_window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing window must be odd and >= 1, got {smooth_window}"
            )));
        }
        Ok(FocusParams { window, smooth_window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn smooth_window(&self) -> usize {
        self.smooth_window
    }
}

impl Default for FocusParams {
    fn default() -> Self {
        FocusParams { window: 9, smooth_window: 9 }
    }
}

/// Per-pixel sum-modified-Laplacian focus energy box-summed over
/// `window x window`, with edge replication.
pub fn focus_measure(img: &GrayImage, window: usize) -> Result<FloatField> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "focus window must be odd and >= 3, got {window}"
        )));
    }
    let (w, h) = img.dimensions();
    let mut ml = FloatField::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = 2.0 * img.get_clamped(x, y) as f64;
            let horiz = (c - img.get_clamped(x - 1, y) as f64 - img.get_clamped(x + 1, y) as f64).abs();
            let vert = (c - img.get_clamped(x, y - 1) as f64 - img.get_clamped(x, y + 1) as f64).abs();
            ml.set(x as usize, y as usize, horiz + vert);
        }
    }
    Ok(box_sum(&ml, window))
}

/// Separable box sum with edge replication.
fn box_sum(field: &FloatField, window: usize) -> FloatField {
    let r = (window / 2) as isize;
    let (w, h) = field.dimensions();
    let mut rows = FloatField::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dx in -r..=r {
                acc += field.get_clamped(x + dx, y);
            }
            rows.set(x as usize, y as usize, acc);
        }
    }
    let mut out = FloatField::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in -r..=r {
                acc += rows.get_clamped(x, y + dy);
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

/// Fuse the stack: per pixel, pick the plane with maximal focus measure
/// (ties go to the lowest plane index), median-smooth the winning-index map,
/// then sample the selected plane.
pub fn fuse_edf(stack: &FocalStack, params: &FocusParams) -> GrayImage {
    let (w, h) = stack.dimensions();
    let planes = stack.planes();

    let mut best_index = vec![0u16; w * h];
    if planes.len() > 1 {
        let mut best_measure = vec![f64::NEG_INFINITY; w * h];
        for (pi, plane) in planes.iter().enumerate() {
            let measure =
                focus_measure(plane, params.window).expect("window validated by FocusParams");
            for (i, &m) in measure.as_slice().iter().enumerate() {
                // Strict comparison keeps the lowest plane index on ties.
                if m > best_measure[i] {
                    best_measure[i] = m;
                    best_index[i] = pi as u16;
                }
            }
        }
    }

    let smoothed = if params.smooth_window > 1 {
        median_plane(&best_index, w, h, params.smooth_window)
    } else {
        best_index
    };

    GrayImage::from_fn(w, h, |x, y| {
        planes[smoothed[y * w + x] as usize].get(x, y)
    })
}
