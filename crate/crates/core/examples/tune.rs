//! Scratch diagnostics for pipeline tuning (not part of the deliverable).
use cytoseg_core::metrics::dice;
use cytoseg_core::morph::{connected_components, fill_holes, remove_small_components};
use cytoseg_core::pipeline::*;
use cytoseg_core::raster::{BinaryMask, GrayImage};
use cytoseg_core::threshold::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    // Fig-2-style clump: big noisy cytoplasm (std 30), small tight nucleus.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let size = 128usize;
    let cell = BinaryMask::from_fn(size, size, |x, y| {
        let dx = (x as f64 - 64.0) / 45.0f64;
        let dy = (y as f64 - 64.0) / 38.0;
        dx * dx + dy * dy <= 1.0
    });
    let nucleus = BinaryMask::from_fn(size, size, |x, y| {
        let dx = (x as f64 - 58.0) / 11.0;
        let dy = (y as f64 - 70.0) / 10.0;
        dx * dx + dy * dy <= 1.0
    });
    let img = GrayImage::from_fn(size, size, |x, y| {
        let v: f64 = if nucleus.get(x, y) {
            60.0 + 5.0 * normal.sample(&mut rng)
        } else if cell.get(x, y) {
            170.0 + 30.0 * normal.sample(&mut rng)
        } else {
            232.0 + 3.0 * normal.sample(&mut rng)
        };
        v.round().clamp(0.0, 255.0) as u8
    });
    let hist = Histogram::from_image_masked(&img, &cell).unwrap();
    let classic = otsu_threshold(&hist).unwrap();
    let modified = modified_otsu(&hist, &ThresholdParams::new(0.05).unwrap()).unwrap();
    println!("classic T={} modified T={} pivot={:?}", classic.threshold, modified.threshold, modified.pivot);

    let mask_at = |t: usize| {
        let raw = BinaryMask::from_fn(size, size, |x, y| cell.get(x, y) && img.get(x, y) as usize <= t);
        remove_small_components(&fill_holes(&raw), 13) // 50 scaled to 128x128... 50*(128*128)/1024^2 = 0.78 -> 1; use pipeline scaling below instead
    };
    let m_classic = mask_at(classic.threshold);
    let m_mod = mask_at(modified.threshold);
    println!(
        "areas: nucleus gt={} classic={} modified={}",
        nucleus.area(), m_classic.area(), m_mod.area()
    );
    println!(
        "dice: classic={:.3} modified={:.3}",
        dice(&m_classic, &nucleus).unwrap(),
        dice(&m_mod, &nucleus).unwrap()
    );
    let labels_c = connected_components(&m_classic);
    let labels_m = connected_components(&m_mod);
    println!("components: classic={} modified={}", labels_c.count(), labels_m.count());

    // And through segment_nuclei with the pipeline config.
    let cfg = PipelineConfig::default();
    let ns = segment_nuclei(&img, &cell, &cfg).unwrap();
    println!("segment_nuclei: {} nuclei, flagged={}", ns.nuclei.len(), ns.flagged);
    for n in &ns.nuclei {
        println!("  centroid {:?} area {}", n.centroid, n.area);
    }
    println!("  mask dice vs gt nucleus: {:.3}", dice(&ns.mask, &nucleus).unwrap());
    let raw = BinaryMask::from_fn(size, size, |x, y| cell.get(x, y) && img.get(x, y) as usize <= modified.threshold);
    let filled = fill_holes(&raw);
    let labels = connected_components(&filled);
    let mut areas = labels.areas();
    areas.sort_unstable();
    println!("  component areas (sorted tail): {:?}", &areas[areas.len().saturating_sub(8)..]);
    for floor in [5usize, 8, 10, 15] {
        let cleaned = remove_small_components(&filled, floor);
        println!("  floor {floor}: components {}", connected_components(&cleaned).count());
    }
}
// appended probe
