//! Histogram thresholding: classic Otsu minimization of the within-class
//! variance and the prior-weighted variant that rebalances the histogram
//! before the scan.
//!
//! Bins are stored 0..=255. A threshold `t` assigns bins `<= t` to the dark
//! class and bins `> t` to the bright class, so valid thresholds span
//! 0..=254. Ties always resolve to the smallest minimizing threshold.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

pub const BINS: usize = 256;

/// Intensity histogram with its derived probability vector.
#[derive(Debug, Clone)]
pub struct Histogram {
    counts: [u64; BINS],
    total: u64,
    p: [f64; BINS],
}

impl Histogram {
    /// Build from raw bin counts; at least one pixel is required.
    pub fn from_counts(counts: [u64; BINS]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidInput("histogram holds no pixels".into()));
        }
        let mut p = [0.0f64; BINS];
        for (pi, &c) in p.iter_mut().zip(&counts) {
            *pi = c as f64 / total as f64;
        }
        Ok(Histogram { counts, total, p })
    }

    pub fn from_image(img: &GrayImage) -> Result<Self> {
        let mut counts = [0u64; BINS];
        for &v in img.as_slice() {
            counts[v as usize] += 1;
        }
        Self::from_counts(counts)
    }

    /// Histogram of the pixels selected by `mask` only.
    pub fn from_image_masked(img: &GrayImage, mask: &BinaryMask) -> Result<Self> {
        if img.dimensions() != mask.dimensions() {
            return Err(Error::InvalidInput("image and mask differ in size".into()));
        }
        let mut counts = [0u64; BINS];
        for (&v, &keep) in img.as_slice().iter().zip(mask.as_slice()) {
            if keep {
                counts[v as usize] += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64; BINS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Per-bin probability, `counts[i] / total`.
    pub fn p(&self) -> &[f64; BINS] {
        &self.p
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// One integer count per line; the fixture format used by tests.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(BINS * 4);
        for c in &self.counts {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut counts = [0u64; BINS];
        let mut n = 0usize;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if n >= BINS {
                return Err(Error::InvalidInput("histogram text has more than 256 bins".into()));
            }
            counts[n] = line
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad histogram count {line:?}")))?;
            n += 1;
        }
        if n != BINS {
            return Err(Error::InvalidInput(format!(
                "histogram text has {n} bins, expected 256"
            )));
        }
        Self::from_counts(counts)
    }
}

/// Prior probability of the dark class, in the open interval (0, 1).
#[derive(Debug, Clone, Copy)]
pub struct ThresholdParams {
    prior_alpha: f64,
}

impl ThresholdParams {
    pub fn new(prior_alpha: f64) -> Result<Self> {
        if !(prior_alpha > 0.0 && prior_alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "prior class probability must lie in (0, 1), got {prior_alpha}"
            )));
        }
        Ok(ThresholdParams { prior_alpha })
    }

    pub fn prior_alpha(&self) -> f64 {
        self.prior_alpha
    }
}

/// Outcome of a threshold scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Selected cut; bins `<= threshold` form the dark class.
    pub threshold: usize,
    /// Within-class variance at the selected cut.
    pub within_class_variance: f64,
    /// Length of the reweighted dark prefix (prior-weighted variant only).
    pub pivot: Option<usize>,
}

/// Within-class variance at cut `t`: each class contributes its probability
/// mass times its variance; an empty class contributes zero.
pub fn within_class_variance(hist: &Histogram, t: usize) -> f64 {
    assert!(t < BINS - 1, "cut must lie in 0..=254");
    class_spread(&hist.p, 0, t + 1) + class_spread(&hist.p, t + 1, BINS)
}

/// `omega * sigma^2` of one class computed directly from its definition.
fn class_spread(p: &[f64; BINS], lo: usize, hi: usize) -> f64 {
    let mut mass = 0.0;
    let mut first_moment = 0.0;
    for i in lo..hi {
        mass += p[i];
        first_moment += p[i] * i as f64;
    }
    if mass <= 0.0 {
        return 0.0;
    }
    let mean = first_moment / mass;
    let mut spread = 0.0;
    for i in lo..hi {
        let d = i as f64 - mean;
        spread += p[i] * d * d;
    }
    spread
}

/// Single-pass scan minimizing the within-class variance over all 255 cuts.
/// Uses running moments, so each class term is `Q - M^2 / W` with `W`, `M`,
/// `Q` the class mass and first two raw moments.
fn scan_min_variance(p: &[f64; BINS]) -> Result<(usize, f64)> {
    if p.iter().filter(|&&v| v > 0.0).count() < 2 {
        return Err(Error::NoValidThreshold);
    }
    let mut total_w = 0.0;
    let mut total_m = 0.0;
    let mut total_q = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        total_w += pi;
        total_m += pi * i as f64;
        total_q += pi * (i * i) as f64;
    }

    let mut w1 = 0.0;
    let mut m1 = 0.0;
    let mut q1 = 0.0;
    let mut best = (0usize, f64::INFINITY);
    for t in 0..BINS - 1 {
        w1 += p[t];
        m1 += p[t] * t as f64;
        q1 += p[t] * (t * t) as f64;
        let w2 = total_w - w1;
        let m2 = total_m - m1;
        let q2 = total_q - q1;
        let mut v = 0.0;
        if w1 > 0.0 {
            v += q1 - m1 * m1 / w1;
        }
        if w2 > 0.0 {
            v += q2 - m2 * m2 / w2;
        }
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Classic Otsu threshold: the smallest cut minimizing the within-class
/// variance. Requires at least two occupied bins.
pub fn otsu_threshold(hist: &Histogram) -> Result<ThresholdResult> {
    let (threshold, v) = scan_min_variance(&hist.p)?;
    Ok(ThresholdResult { threshold, within_class_variance: v, pivot: None })
}

/// Length of the longest histogram prefix whose cumulative probability stays
/// strictly below `prior_alpha`; 0 when even the first bin reaches it.
pub fn dark_prefix_pivot(hist: &Histogram, prior_alpha: f64) -> usize {
    let mut cum = 0.0;
    let mut pivot = 0;
    for (i, &pi) in hist.p.iter().enumerate() {
        cum += pi;
        if cum < prior_alpha {
            pivot = i + 1;
        } else {
            break;
        }
    }
    pivot
}

/// Prior-weighted Otsu: bins below the dark prefix pivot are scaled by
/// `1 - alpha`, the rest by `alpha`; the renormalized distribution is then
/// thresholded with the classic scan. With `alpha = 0.5` both branches scale
/// equally and the classic threshold is recovered.
pub fn modified_otsu(hist: &Histogram, params: &ThresholdParams) -> Result<ThresholdResult> {
    let alpha = params.prior_alpha();
    let pivot = dark_prefix_pivot(hist, alpha);

    let mut reweighted = [0.0f64; BINS];
    let mut mass = 0.0;
    for (i, (out, &pi)) in reweighted.iter_mut().zip(&hist.p).enumerate() {
        *out = pi * if i < pivot { 1.0 - alpha } else { alpha };
        mass += *out;
    }
    if mass <= 0.0 {
        return Err(Error::NoValidThreshold);
    }
    for v in reweighted.iter_mut() {
        *v /= mass;
    }

    let (threshold, v) = scan_min_variance(&reweighted)?;
    Ok(ThresholdResult { threshold, within_class_variance: v, pivot: Some(pivot) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_delta() -> Histogram {
        let mut counts = [0u64; BINS];
        counts[10] = 400;
        counts[200] = 600;
        Histogram::from_counts(counts).unwrap()
    }

    /// Discretized two-Gaussian mixture scaled to integer counts.
    fn gaussian_mix(m1: f64, s1: f64, a1: f64, m2: f64, s2: f64, a2: f64) -> Histogram {
        let mut counts = [0u64; BINS];
        for (i, c) in counts.iter_mut().enumerate() {
            let x = i as f64;
            let g = |m: f64, s: f64| (-((x - m) * (x - m)) / (2.0 * s * s)).exp() / s;
            *c = ((a1 * g(m1, s1) + a2 * g(m2, s2)) * 1.0e8).round() as u64;
        }
        Histogram::from_counts(counts).unwrap()
    }

    fn random_histogram(rng: &mut ChaCha8Rng) -> Histogram {
        loop {
            let mut counts = [0u64; BINS];
            match rng.random_range(0..3) {
                0 => {
                    for c in counts.iter_mut() {
                        *c = rng.random_range(0..500);
                    }
                }
                1 => {
                    let k = rng.random_range(2..20);
                    for _ in 0..k {
                        counts[rng.random_range(0..BINS)] = rng.random_range(1..1000);
                    }
                }
                _ => {
                    let m1 = rng.random_range(30.0..100.0);
                    let m2 = rng.random_range(120.0..230.0);
                    return gaussian_mix(
                        m1,
                        rng.random_range(3.0..25.0),
                        rng.random_range(0.05..0.95),
                        m2,
                        rng.random_range(3.0..25.0),
                        rng.random_range(0.05..0.95),
                    );
                }
            }
            if counts.iter().filter(|&&c| c > 0).count() >= 2 {
                return Histogram::from_counts(counts).unwrap();
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let h = random_histogram(&mut rng);
            let sum: f64 = h.p().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn variance_is_zero_when_both_classes_are_single_valued() {
        let h = two_delta();
        assert!(within_class_variance(&h, 10).abs() < 1e-12);
        assert!(within_class_variance(&h, 150).abs() < 1e-12);
    }

    #[test]
    fn variance_matches_two_pass_oracle_on_uniform_histogram() {
        let h = Histogram::from_counts([4u64; BINS]).unwrap();
        let got = within_class_variance(&h, 127);
        // Explicit per-class mean and variance.
        let mut expect = 0.0;
        for (lo, hi) in [(0usize, 128usize), (128, 256)] {
            let n = (hi - lo) as f64;
            let w = n / 256.0;
            let mean = (lo as f64 + hi as f64 - 1.0) / 2.0;
            let var = (0..hi - lo).map(|k| {
                let d = (lo + k) as f64 - mean;
                d * d
            }).sum::<f64>() / n;
            expect += w * var;
        }
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn otsu_two_delta_takes_smallest_zero_variance_cut() {
        let r = otsu_threshold(&two_delta()).unwrap();
        assert_eq!(r.threshold, 10);
        assert!(r.pivot.is_none());
    }

    #[test]
    fn otsu_matches_exhaustive_scan_on_two_gaussian_mixture() {
        let h = gaussian_mix(60.0, 10.0, 0.5, 180.0, 10.0, 0.5);
        let r = otsu_threshold(&h).unwrap();
        let naive = (0..BINS - 1)
            .min_by(|&a, &b| {
                within_class_variance(&h, a)
                    .partial_cmp(&within_class_variance(&h, b))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(r.threshold, naive);
    }

    #[test]
    fn otsu_rejects_single_occupied_bin() {
        let mut counts = [0u64; BINS];
        counts[42] = 1000;
        let h = Histogram::from_counts(counts).unwrap();
        assert!(matches!(otsu_threshold(&h), Err(Error::NoValidThreshold)));
    }

    #[test]
    fn otsu_equals_between_class_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let h = random_histogram(&mut rng);
            let r = otsu_threshold(&h).unwrap();
            // Between-class route: argmax of w1*w2*(mu1-mu2)^2, smallest tie.
            let p = h.p();
            let mut w1 = 0.0;
            let mut m1 = 0.0;
            let total_m: f64 = p.iter().enumerate().map(|(i, &v)| v * i as f64).sum();
            let total_w: f64 = p.iter().sum();
            let mut best = (0usize, f64::NEG_INFINITY);
            for t in 0..BINS - 1 {
                w1 += p[t];
                m1 += p[t] * t as f64;
                let w2 = total_w - w1;
                if w1 <= 0.0 || w2 <= 0.0 {
                    continue;
                }
                let d = m1 / w1 - (total_m - m1) / w2;
                let sb = w1 * w2 * d * d;
                if sb > best.1 {
                    best = (t, sb);
                }
            }
            assert_eq!(r.threshold, best.0, "histogram {:?}", &h.counts()[..8]);
        }
    }

    #[test]
    fn pivot_follows_strict_cumulative_rule() {
        let mut counts = [0u64; BINS];
        counts[0] = 4;
        counts[1] = 4;
        counts[2] = 92;
        let h = Histogram::from_counts(counts).unwrap();
        assert_eq!(dark_prefix_pivot(&h, 0.05), 1);

        let mut counts = [0u64; BINS];
        counts[0] = 1;
        let h = Histogram::from_counts(counts).unwrap();
        assert_eq!(dark_prefix_pivot(&h, 0.5), 0);

        let h = Histogram::from_counts([10u64; BINS]).unwrap();
        assert_eq!(dark_prefix_pivot(&h, 0.05), 12);
    }

    #[test]
    fn modified_with_half_prior_reduces_to_classic() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let params = ThresholdParams::new(0.5).unwrap();
        for _ in 0..200 {
            let h = random_histogram(&mut rng);
            let classic = otsu_threshold(&h).unwrap();
            let modified = modified_otsu(&h, &params).unwrap();
            assert_eq!(modified.threshold, classic.threshold);
        }
    }

    #[test]
    fn reweighted_distribution_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let h = random_histogram(&mut rng);
            let alpha = rng.random_range(0.01..0.99);
            let pivot = dark_prefix_pivot(&h, alpha);
            let mut mass = 0.0;
            for (i, &pi) in h.p().iter().enumerate() {
                mass += pi * if i < pivot { 1.0 - alpha } else { alpha };
            }
            let sum: f64 = h
                .p()
                .iter()
                .enumerate()
                .map(|(i, &pi)| pi * if i < pivot { 1.0 - alpha } else { alpha } / mass)
                .sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn modified_small_prior_matches_reweighted_scan_and_undercuts_classic() {
        // Sparse dark class (5%) against a broad bright class.
        let h = gaussian_mix(40.0, 10.0, 0.05, 180.0, 30.0, 0.95);
        let params = ThresholdParams::new(0.05).unwrap();
        let modified = modified_otsu(&h, &params).unwrap();
        let classic = otsu_threshold(&h).unwrap();

        // Exhaustive scan over the reweighted distribution, built in place.
        let pivot = dark_prefix_pivot(&h, 0.05);
        let mut q = [0.0f64; BINS];
        let mut mass = 0.0;
        for (i, (qi, &pi)) in q.iter_mut().zip(h.p()).enumerate() {
            *qi = pi * if i < pivot { 0.95 } else { 0.05 };
            mass += *qi;
        }
        for v in q.iter_mut() {
            *v /= mass;
        }
        let hq = {
            // Express as counts for the public API by scaling; equivalent scan.
            let spread = |lo: usize, hi: usize| {
                let m: f64 = q[lo..hi].iter().sum();
                if m <= 0.0 {
                    return 0.0;
                }
                let mean: f64 =
                    q[lo..hi].iter().enumerate().map(|(k, &v)| v * (lo + k) as f64).sum::<f64>() / m;
                q[lo..hi]
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let d = (lo + k) as f64 - mean;
                        v * d * d
                    })
                    .sum()
            };
            (0..BINS - 1)
                .min_by(|&a, &b| {
                    (spread(0, a + 1) + spread(a + 1, BINS))
                        .partial_cmp(&(spread(0, b + 1) + spread(b + 1, BINS)))
                        .unwrap()
                })
                .unwrap()
        };
        assert_eq!(modified.threshold, hq);
        assert!(
            modified.threshold < classic.threshold,
            "prior weighting must pull the threshold below the classic cut ({} vs {})",
            modified.threshold,
            classic.threshold
        );
        assert_eq!(modified.pivot, Some(pivot));
    }

    #[test]
    fn thresholds_are_invariant_under_count_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let params = ThresholdParams::new(0.2).unwrap();
        for _ in 0..50 {
            let mut counts = [0u64; BINS];
            for c in counts.iter_mut() {
                *c = rng.random_range(0..1000);
            }
            if counts.iter().filter(|&&c| c > 0).count() < 2 {
                continue;
            }
            let k = rng.random_range(2..50u64);
            let scaled = counts.map(|c| c * k);
            let h = Histogram::from_counts(counts).unwrap();
            let hs = Histogram::from_counts(scaled).unwrap();
            assert_eq!(
                otsu_threshold(&h).unwrap().threshold,
                otsu_threshold(&hs).unwrap().threshold
            );
            assert_eq!(
                modified_otsu(&h, &params).unwrap().threshold,
                modified_otsu(&hs, &params).unwrap().threshold
            );
        }
    }

    #[test]
    fn classic_threshold_drifts_toward_higher_variance_class() {
        // Equal-mass mixtures with variance ratio >= 4; the analytic density
        // intersection must separate the threshold from the narrow class.
        let cases = [
            (70.0, 24.0, 180.0, 9.0),
            (60.0, 20.0, 170.0, 8.0),
            (80.0, 30.0, 200.0, 12.0),
            (50.0, 8.0, 150.0, 22.0),
            (90.0, 10.0, 190.0, 28.0),
            (40.0, 6.0, 120.0, 16.0),
        ];
        for (m1, s1, m2, s2) in cases {
            let h = gaussian_mix(m1, s1, 0.5, m2, s2, 0.5);
            let t = otsu_threshold(&h).unwrap().threshold as f64 + 0.5;
            let x = gaussian_intersection(m1, s1, m2, s2);
            assert!(x > m1 && x < m2, "intersection {x} outside ({m1}, {m2})");
            if s1 > s2 {
                assert!(t < x, "threshold {t} should sit below intersection {x}");
            } else {
                assert!(t > x, "threshold {t} should sit above intersection {x}");
            }
        }
    }

    /// Root of `N(m1,s1) = N(m2,s2)` between the two means.
    fn gaussian_intersection(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
        let a = 1.0 / (2.0 * s2 * s2) - 1.0 / (2.0 * s1 * s1);
        let b = m1 / (s1 * s1) - m2 / (s2 * s2);
        let c = m2 * m2 / (2.0 * s2 * s2) - m1 * m1 / (2.0 * s1 * s1) - (s1 / s2).ln();
        let disc = (b * b - 4.0 * a * c).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        if r1 > m1 && r1 < m2 {
            r1
        } else {
            r2
        }
    }

    #[test]
    fn text_round_trip_preserves_counts() {
        let h = two_delta();
        let h2 = Histogram::from_text(&h.to_text()).unwrap();
        assert_eq!(h.counts(), h2.counts());
        assert!(Histogram::from_text("1\n2\n3\n").is_err());
    }
}
