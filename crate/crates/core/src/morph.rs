//! Grayscale and binary morphology: reconstruction by dilation, the h-maxima
//! transform, regional maxima, connected components and mask cleanup.
//!
//! Connectivity is 8-connected throughout, for components, plateaus and
//! reconstruction alike. Reconstruction uses the raster/anti-raster sweep
//! pair with a FIFO finish; the naive iterate-until-stable formulation only
//! exists in test code as the oracle.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, LabelMap};

// Scan-order halves of the 8-neighborhood used by the sweep phases.
const FWD: [(isize, isize); 4] = [(-1, -1), (0, -1), (1, -1), (-1, 0)];
const BWD: [(isize, isize); 4] = [(1, 1), (0, 1), (-1, 1), (1, 0)];
const ALL8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Morphological reconstruction by dilation of `marker` under `mask` with the
/// 8-connected unit structuring element: the fixed point of
/// "dilate, then pixelwise min with the mask".
pub fn reconstruct_by_dilation(marker: &GrayImage, mask: &GrayImage) -> Result<GrayImage> {
    if marker.dimensions() != mask.dimensions() {
        return Err(Error::InvalidInput(format!(
            "marker {:?} and mask {:?} differ in size",
            marker.dimensions(),
            mask.dimensions()
        )));
    }
    if marker.as_slice().iter().zip(mask.as_slice()).any(|(&m, &k)| m > k) {
        return Err(Error::InvalidInput("marker exceeds mask".into()));
    }
    let data = reconstruct_plane(
        marker.as_slice(),
        mask.as_slice(),
        marker.width(),
        marker.height(),
    );
    GrayImage::from_raw(marker.width(), marker.height(), data)
}

/// Vincent-style hybrid reconstruction over any ordered sample type.
fn reconstruct_plane<T: Copy + Ord>(marker: &[T], mask: &[T], width: usize, height: usize) -> Vec<T> {
    let mut out = marker.to_vec();
    let w = width as isize;
    let h = height as isize;
    let at = |x: isize, y: isize| (y * w + x) as usize;

    // Raster sweep.
    for y in 0..h {
        for x in 0..w {
            let mut best = out[at(x, y)];
            for (dx, dy) in FWD {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    best = best.max(out[at(nx, ny)]);
                }
            }
            out[at(x, y)] = best.min(mask[at(x, y)]);
        }
    }

    // Anti-raster sweep, queuing pixels whose value could still propagate.
    let mut fifo = VecDeque::new();
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut best = out[at(x, y)];
            for (dx, dy) in BWD {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    best = best.max(out[at(nx, ny)]);
                }
            }
            let v = best.min(mask[at(x, y)]);
            out[at(x, y)] = v;
            for (dx, dy) in BWD {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    let q = at(nx, ny);
                    if out[q] < v && out[q] < mask[q] {
                        fifo.push_back((x, y));
                        break;
                    }
                }
            }
        }
    }

    while let Some((x, y)) = fifo.pop_front() {
        let v = out[at(x, y)];
        for (dx, dy) in ALL8 {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && nx < w && ny >= 0 && ny < h {
                let q = at(nx, ny);
                if out[q] < v && out[q] < mask[q] {
                    out[q] = v.min(mask[q]);
                    fifo.push_back((nx, ny));
                }
            }
        }
    }
    out
}

/// H-maxima transform: reconstruction of `img - h` (saturating at zero) under
/// `img`, which suppresses every regional maximum of height below `h`.
pub fn h_maxima(img: &GrayImage, h: u8) -> Result<GrayImage> {
    if h == 0 {
        return Err(Error::InvalidParameter("h-maxima height must be >= 1".into()));
    }
    let marker: Vec<u8> = img.as_slice().iter().map(|&v| v.saturating_sub(h)).collect();
    let data = reconstruct_plane(&marker, img.as_slice(), img.width(), img.height());
    GrayImage::from_raw(img.width(), img.height(), data)
}

/// Regional maxima: connected plateaus whose every outside 8-neighbor is
/// strictly darker.
///
/// Computed through the reconstruction identity on a one-shifted copy:
/// a pixel belongs to a maximum exactly where reconstructing `v` under `v+1`
/// fails to reach `v+1`. The shift keeps value-0 plateaus (the all-dark
/// image) representable.
pub fn regional_maxima(img: &GrayImage) -> BinaryMask {
    let mask16: Vec<u16> = img.as_slice().iter().map(|&v| v as u16 + 1).collect();
    let marker16: Vec<u16> = img.as_slice().iter().map(|&v| v as u16).collect();
    let recon = reconstruct_plane(&marker16, &mask16, img.width(), img.height());
    let mut out = BinaryMask::new(img.width(), img.height());
    for (i, (&r, &m)) in recon.iter().zip(&mask16).enumerate() {
        if r < m {
            out.set(i % img.width(), i / img.width(), true);
        }
    }
    out
}

/// 8-connected component labeling; labels are assigned in row-major
/// first-encounter order, so the result is deterministic.
pub fn connected_components(mask: &BinaryMask) -> LabelMap {
    let (width, height) = mask.dimensions();
    let w = width as isize;
    let h = height as isize;
    let mut labels = vec![0u32; width * height];
    let mut count = 0u32;
    let mut queue = VecDeque::new();

    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !mask.get(x as usize, y as usize) || labels[idx] != 0 {
                continue;
            }
            count += 1;
            labels[idx] = count;
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for (dx, dy) in ALL8 {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx >= 0 && nx < w && ny >= 0 && ny < h {
                        let nidx = (ny * w + nx) as usize;
                        if mask.get(nx as usize, ny as usize) && labels[nidx] == 0 {
                            labels[nidx] = count;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
        }
    }
    LabelMap::from_raw(width, height, labels, count as usize)
}

/// Clear connected components whose pixel area is below `min_area`.
pub fn remove_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area == 0 {
        return mask.clone();
    }
    let labels = connected_components(mask);
    let areas = labels.areas();
    let (width, height) = mask.dimensions();
    BinaryMask::from_fn(width, height, |x, y| {
        let l = labels.get(x, y);
        l != 0 && areas[(l - 1) as usize] >= min_area
    })
}

/// Fill holes: background components that do not touch the image border are
/// turned into foreground. Background connectivity follows the crate-wide
/// 8-connected convention.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (width, height) = mask.dimensions();
    let w = width as isize;
    let h = height as isize;
    let mut outside = vec![false; width * height];
    let mut queue = VecDeque::new();

    let seed = |x: isize, y: isize, outside: &mut Vec<bool>, queue: &mut VecDeque<(isize, isize)>| {
        let idx = (y * w + x) as usize;
        if !mask.get(x as usize, y as usize) && !outside[idx] {
            outside[idx] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }

    while let Some((cx, cy)) = queue.pop_front() {
        for (dx, dy) in ALL8 {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx >= 0 && nx < w && ny >= 0 && ny < h {
                let idx = (ny * w + nx) as usize;
                if !mask.get(nx as usize, ny as usize) && !outside[idx] {
                    outside[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }

    BinaryMask::from_fn(width, height, |x, y| {
        mask.get(x, y) || !outside[y * width + x]
    })
}
