//! Row-major raster containers shared by every stage: 8-bit grayscale images,
//! boolean masks, connected-component label maps and scalar float fields.
//!
//! All containers are plain value types; coordinates are `(x, y)` with `x`
//! running along a row. Out-of-range access through the `*_clamped` accessors
//! replicates the nearest edge pixel, which is the border policy used by all
//! window filters in this crate.

use crate::error::{Error, Result};

/// 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    /// All-zero image.
    pub fn new(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0)
    }

    /// Image filled with `value`.
    pub fn constant(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GrayImage { width, height, data: vec![value; width * height] }
    }

    /// Wrap an existing row-major buffer. Fails when the length does not
    /// match `width * height`.
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "buffer of {} bytes does not match {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    /// Build from a per-pixel function evaluated in row-major order.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = GrayImage::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    /// Edge-replicating accessor for window filters.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn min_max(&self) -> (u8, u8) {
        let mut lo = u8::MAX;
        let mut hi = u8::MIN;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Photometric inversion, `v -> 255 - v`.
    pub fn invert(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 255 - v).collect(),
        }
    }
}

/// Boolean mask with the same geometry conventions as [`GrayImage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        BinaryMask { width, height, data: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                mask.data[y * width + x] = f(x, y);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Iterator over the coordinates of set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Pixelwise intersection. Panics on dimension mismatch.
    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!(self.dimensions(), other.dimensions());
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// Pixelwise union. Panics on dimension mismatch.
    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!(self.dimensions(), other.dimensions());
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect(),
        }
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Connected-component labeling: 0 is background, components carry labels
/// `1..=count` in row-major first-encounter order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

impl LabelMap {
    pub(crate) fn from_raw(width: usize, height: usize, labels: Vec<u32>, count: usize) -> Self {
        debug_assert_eq!(labels.len(), width * height);
        LabelMap { width, height, labels, count }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Number of distinct non-zero labels.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x]
    }

    /// Mask of the pixels carrying `label`.
    pub fn mask_of(&self, label: u32) -> BinaryMask {
        let mut mask = BinaryMask::new(self.width, self.height);
        for (i, &l) in self.labels.iter().enumerate() {
            if l == label {
                mask.data[i] = true;
            }
        }
        mask
    }

    /// Pixel area per label; index `label - 1`.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count];
        for &l in &self.labels {
            if l > 0 {
                areas[(l - 1) as usize] += 1;
            }
        }
        areas
    }

    /// Union of all labeled pixels.
    pub fn foreground(&self) -> BinaryMask {
        let mut mask = BinaryMask::new(self.width, self.height);
        for (i, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                mask.data[i] = true;
            }
        }
        mask
    }
}

/// Scalar `f64` field over the image grid (focus measures, edge indicators).
#[derive(Debug, Clone, PartialEq)]
pub struct FloatField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatField {
    pub fn new(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be positive");
        FloatField { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut field = FloatField::new(width, height);
        for y in 0..height {
            for x in 0..width {
                field.data[y * width + x] = f(x, y);
            }
        }
        field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_raw_rejects_bad_length() {
        assert!(GrayImage::from_raw(4, 4, vec![0; 15]).is_err());
        assert!(GrayImage::from_raw(4, 4, vec![0; 16]).is_ok());
    }

    #[test]
    fn clamped_access_replicates_edges() {
        let img = GrayImage::from_fn(3, 2, |x, y| (10 * y + x) as u8);
        assert_eq!(img.get_clamped(-5, 0), img.get(0, 0));
        assert_eq!(img.get_clamped(7, 1), img.get(2, 1));
        assert_eq!(img.get_clamped(1, -1), img.get(1, 0));
        assert_eq!(img.get_clamped(1, 9), img.get(1, 1));
    }

    #[test]
    fn mask_set_iteration_and_subset() {
        let mut m = BinaryMask::new(4, 3);
        m.set(1, 2, true);
        m.set(3, 0, true);
        let set: Vec<_> = m.iter_set().collect();
        assert_eq!(set, vec![(3, 0), (1, 2)]);
        assert_eq!(m.area(), 2);
        let all = BinaryMask::from_fn(4, 3, |_, _| true);
        assert!(m.is_subset_of(&all));
        assert!(!all.is_subset_of(&m));
    }

    #[test]
    fn label_map_masks_and_areas() {
        let labels = vec![0, 1, 1, 0, 2, 2, 2, 0, 0];
        let lm = LabelMap::from_raw(3, 3, labels, 2);
        assert_eq!(lm.count(), 2);
        assert_eq!(lm.areas(), vec![2, 3]);
        assert_eq!(lm.mask_of(1).area(), 2);
        assert_eq!(lm.foreground().area(), 5);
    }
}
