//! Property tests of the algebraic invariants: morphology bounds and
//! idempotence, labeling partitions, h-maxima height audits, selection
//! properties of the fusion, and metric symmetries.

use cytoseg_core::edf::{fuse_edf, FocalStack, FocusParams};
use cytoseg_core::filter::median_filter;
use cytoseg_core::metrics::{dice, match_and_score};
use cytoseg_core::morph::{
    connected_components, fill_holes, h_maxima, reconstruct_by_dilation, regional_maxima,
    remove_small_components,
};
use cytoseg_core::raster::{BinaryMask, GrayImage};
use proptest::prelude::*;

fn arb_gray(max_side: usize) -> impl Strategy<Value = GrayImage> {
    (3..max_side, 3..max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |data| GrayImage::from_raw(w, h, data).unwrap())
    })
}

/// Low-cardinality images produce wide plateaus, which stress the
/// morphology more than white noise does.
fn arb_coarse_gray(max_side: usize) -> impl Strategy<Value = GrayImage> {
    (3..max_side, 3..max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u8..6, w * h)
            .prop_map(move |data| GrayImage::from_raw(w, h, data.iter().map(|v| v * 40).collect()).unwrap())
    })
}

fn arb_mask(max_side: usize) -> impl Strategy<Value = BinaryMask> {
    (3..max_side, 3..max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<bool>(), w * h).prop_map(move |data| {
            let mut m = BinaryMask::new(w, h);
            for (i, v) in data.into_iter().enumerate() {
                if v {
                    m.set(i % w, i / w, true);
                }
            }
            m
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn median_filter_preserves_intensity_range(img in arb_gray(20)) {
        let out = median_filter(&img, 3).unwrap();
        let (in_lo, in_hi) = img.min_max();
        let (out_lo, out_hi) = out.min_max();
        prop_assert!(out_lo >= in_lo);
        prop_assert!(out_hi <= in_hi);
    }

    #[test]
    fn reconstruction_is_bounded_and_stable(mask in arb_gray(16), shift in 1u8..80) {
        let marker = GrayImage::from_fn(mask.width(), mask.height(), |x, y| {
            mask.get(x, y).saturating_sub(shift)
        });
        let out = reconstruct_by_dilation(&marker, &mask).unwrap();
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                prop_assert!(marker.get(x, y) <= out.get(x, y));
                prop_assert!(out.get(x, y) <= mask.get(x, y));
            }
        }
        // One more dilate-and-min step must not change anything.
        let again = reconstruct_by_dilation(&out, &mask).unwrap();
        prop_assert_eq!(&again, &out);
    }

    #[test]
    fn h_maxima_is_anti_extensive_and_kills_shallow_maxima(img in arb_coarse_gray(16), h in 1u8..100) {
        let out = h_maxima(&img, h).unwrap();
        for (o, i) in out.as_slice().iter().zip(img.as_slice()) {
            prop_assert!(o <= i);
        }
        prop_assert!(
            surviving_maxima_have_deep_roots(&img, &out, h),
            "a surviving maximum has input dynamics below {}", h
        );
    }

    #[test]
    fn labeling_partitions_the_foreground(mask in arb_mask(20)) {
        let labels = connected_components(&mask);
        let mut seen = vec![false; labels.count()];
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                let l = labels.get(x, y);
                prop_assert_eq!(mask.get(x, y), l != 0);
                if l != 0 {
                    prop_assert!((l as usize) <= labels.count());
                    seen[(l - 1) as usize] = true;
                }
            }
        }
        prop_assert!(seen.into_iter().all(|s| s), "labels must be contiguous 1..=count");
    }

    #[test]
    fn small_component_removal_is_idempotent(mask in arb_mask(20), min_area in 0usize..12) {
        let once = remove_small_components(&mask, min_area);
        let twice = remove_small_components(&once, min_area);
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.is_subset_of(&mask));
    }

    #[test]
    fn hole_filling_is_idempotent_and_extensive(mask in arb_mask(20)) {
        let once = fill_holes(&mask);
        prop_assert!(mask.is_subset_of(&once));
        let twice = fill_holes(&once);
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn regional_maxima_are_nonempty_and_flat(img in arb_coarse_gray(14)) {
        // Every image has at least one regional maximum, and each connected
        // maximum region holds a single value.
        let maxima = regional_maxima(&img);
        prop_assert!(!maxima.is_empty());
        let labels = connected_components(&maxima);
        for id in 1..=labels.count() as u32 {
            let vals: Vec<u8> = labels
                .mask_of(id)
                .iter_set()
                .map(|(x, y)| img.get(x, y))
                .collect();
            prop_assert!(vals.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn fusion_selects_only_input_intensities(imgs in prop::collection::vec(arb_gray(12), 1..4)) {
        let (w, h) = imgs[0].dimensions();
        let planes: Vec<GrayImage> = imgs
            .iter()
            .map(|img| GrayImage::from_fn(w, h, |x, y| img.get_clamped(x as isize, y as isize)))
            .collect();
        let stack = FocalStack::new(planes.clone()).unwrap();
        let fused = fuse_edf(&stack, &FocusParams::new(3, 3).unwrap());
        for y in 0..h {
            for x in 0..w {
                let v = fused.get(x, y);
                prop_assert!(planes.iter().any(|p| p.get(x, y) == v));
            }
        }
    }

    #[test]
    fn dice_is_symmetric_and_bounded(masks in arb_mask_pair(16)) {
        let (a, b) = masks;
        let ab = dice(&a, &b).unwrap();
        let ba = dice(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }
}

fn arb_mask_pair(max_side: usize) -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (3..max_side, 3..max_side).prop_flat_map(|(w, h)| {
        let one = prop::collection::vec(any::<bool>(), w * h).prop_map(move |data| {
            let mut m = BinaryMask::new(w, h);
            for (i, v) in data.into_iter().enumerate() {
                if v {
                    m.set(i % w, i / w, true);
                }
            }
            m
        });
        (one.clone(), one)
    })
}

/// Audit that every regional maximum of the suppressed image `out` is rooted
/// in an input maximum of dynamics >= `h`: flooding the input from the
/// plateau's peak pixels through ground brighter than `peak - h` must not
/// reach anything brighter than the peak. Heights are measured in the input;
/// surviving plateaus can sit arbitrarily close above deep surviving saddles
/// of the output.
fn surviving_maxima_have_deep_roots(img: &GrayImage, out: &GrayImage, h: u8) -> bool {
    let maxima = regional_maxima(out);
    let labels = connected_components(&maxima);
    let (w, hh) = img.dimensions();
    for id in 1..=labels.count() as u32 {
        let plateau = labels.mask_of(id);
        let peak = plateau
            .iter_set()
            .map(|(x, y)| img.get(x, y))
            .max()
            .unwrap();
        let floor = peak.saturating_sub(h);

        let mut visited = vec![false; w * hh];
        let mut stack: Vec<(usize, usize)> = plateau
            .iter_set()
            .filter(|&(x, y)| img.get(x, y) == peak)
            .collect();
        for &(x, y) in &stack {
            visited[y * w + x] = true;
        }
        while let Some((x, y)) = stack.pop() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= hh as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if visited[ny * w + nx] {
                        continue;
                    }
                    let v = img.get(nx, ny);
                    if v > peak {
                        // Higher input ground reachable through a shallow
                        // saddle: this maximum should have been suppressed.
                        return false;
                    }
                    if v > floor {
                        visited[ny * w + nx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    true
}

#[test]
fn greedy_matching_is_permutation_invariant() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let cells: Vec<BinaryMask> = (0..4)
            .map(|_| {
                let cx = rng.random_range(8.0..40.0);
                let cy = rng.random_range(8.0..40.0);
                let r = rng.random_range(4.0..9.0);
                BinaryMask::from_fn(48, 48, |x, y| {
                    let dx = x as f64 - cx;
                    let dy = y as f64 - cy;
                    dx * dx + dy * dy <= r * r
                })
            })
            .collect();
        let pred: Vec<BinaryMask> = cells
            .iter()
            .map(|c| {
                // Shift by one pixel so dices are high but not 1.
                BinaryMask::from_fn(48, 48, |x, y| x > 0 && c.get(x - 1, y))
            })
            .collect();

        // Skip degenerate draws with tied pairwise scores.
        let mut scores = Vec::new();
        for p in &pred {
            for g in &cells {
                let d = dice(p, g).unwrap();
                if d > 0.0 {
                    scores.push(d);
                }
            }
        }
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if scores.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }

        let base = match_and_score(&pred, &cells).unwrap();
        let perm = [2usize, 0, 3, 1];
        let pred_perm: Vec<BinaryMask> = perm.iter().map(|&i| pred[i].clone()).collect();
        let permuted = match_and_score(&pred_perm, &cells).unwrap();

        let mut base_pairs: Vec<(usize, usize)> =
            base.matched.iter().map(|m| (m.pred, m.gt)).collect();
        let mut perm_pairs: Vec<(usize, usize)> = permuted
            .matched
            .iter()
            .map(|m| (perm[m.pred], m.gt))
            .collect();
        base_pairs.sort_unstable();
        perm_pairs.sort_unstable();
        assert_eq!(base_pairs, perm_pairs);
    }
}
