use mbsif::harness::{synthetic_eye_images, ClassCounts};
use mbsif::learn::{fast_ica, fit_whitening, identity_deviation, orthonormality_error, sample_patches};
use mbsif::{
    apply_mask_zero, bilinear_sample, encode, full_image_feature, histogram_feature, learn_filterbank, rubber_sheet,
    BitMask, Circle, FilterBank, FloatImage, GrayImage, HistogramMode, IrisAnnotation, PaddingStrategy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(w, h, |_, _| rng.random()).unwrap()
}

// Smooth-ish texture so patches have a non-trivial spectrum.
fn blobs(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<(f64, f64, f64)> = (0..12)
        .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64), rng.random_range(2.0..9.0)))
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let v: f64 = centres
            .iter()
            .map(|&(cx, cy, s)| (-((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum();
        (v * 120.0 + rng.random_range(0.0..20.0)).min(255.0) as u8
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rubber_sheet_shape_and_range(
        w in 40usize..120, h in 40usize..120,
        radial in 1usize..30, angular in 1usize..80,
        r_pupil in 3.0f64..12.0, extra in 4.0f64..30.0,
        seed in any::<u64>(),
    ) {
        let img = noise_image(w, h, seed);
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        let ann = IrisAnnotation::new(
            Circle::new(cx, cy, r_pupil).unwrap(),
            Circle::new(cx, cy, r_pupil + extra).unwrap(),
            BitMask::filled(w, h, false).unwrap(),
        ).unwrap();
        let n = rubber_sheet(&img, &ann, radial, angular).unwrap();
        prop_assert_eq!((n.strip.width(), n.strip.height()), (angular, radial));
        prop_assert_eq!((n.mask.width(), n.mask.height()), (angular, radial));
        prop_assert!(n.strip.data().iter().all(|&v| (0.0..=255.0).contains(&v)));
        let once = apply_mask_zero(&n);
        prop_assert_eq!(apply_mask_zero(&once), once);
    }

    #[test]
    fn bilinear_is_lipschitz(w in 2usize..20, h in 2usize..20, fx in 0.0f64..1.0, fy in 0.0f64..1.0,
                             dx in -0.5f64..0.5, dy in -0.5f64..0.5, seed in any::<u64>()) {
        let img = noise_image(w, h, seed);
        let (mx, my) = ((w - 1) as f64, (h - 1) as f64);
        let (x, y) = (fx * mx, fy * my);
        let (x2, y2) = ((x + dx).clamp(0.0, mx), (y + dy).clamp(0.0, my));
        let eps = (x2 - x).abs().max((y2 - y).abs());
        let a: f64 = bilinear_sample(&img, x, y).unwrap();
        let b: f64 = bilinear_sample(&img, x2, y2).unwrap();
        prop_assert!((a - b).abs() <= 255.0 * 2.0 * eps + 1e-9);
    }

    #[test]
    fn whitening_and_ica_hold_for_any_corpus(seed in any::<u64>(), l in prop::sample::select(vec![3usize, 5, 7]), bits in 2usize..8) {
        let images: Vec<GrayImage> = (0..3).map(|i| blobs(48, 40, seed ^ i)).collect();
        let patches = sample_patches::<f64>(&images, l, 40 * l * l, seed).unwrap();
        let bits = bits.min(l * l - 1);
        let whitening = fit_whitening(&patches, bits).unwrap();
        let z = whitening.apply(patches.matrix());
        prop_assert!(identity_deviation(&z) <= 1e-6);
        let ica = fast_ica(&z, seed).unwrap();
        prop_assert!(orthonormality_error(&ica.unmixing) <= 1e-6);
    }

    #[test]
    fn features_are_normalized(seed in any::<u64>(), bits in 1usize..10, occluded in 0.0f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strip = FloatImage::from_fn(60, 12, |_, _| rng.random_range(0.0..255.0)).unwrap();
        let mask = BitMask::from_fn(60, 12, |_, _| rng.random_bool(occluded)).unwrap();
        let filters: Vec<Vec<f64>> = (0..bits).map(|_| (0..25).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let bank = FilterBank::from_filters(5, &filters).unwrap();
        let code = encode(&strip, &mask, &bank, PaddingStrategy::MODIFIED).unwrap();
        for mode in [HistogramMode::MaskZeroed, HistogramMode::MaskExcluded] {
            match histogram_feature::<f64>(&code, mode) {
                Ok(h) => {
                    prop_assert_eq!(h.values.len(), 1 << bits);
                    prop_assert!(h.values.iter().all(|&v| v >= 0.0));
                    prop_assert!((h.values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                }
                Err(_) => prop_assert!(mode == HistogramMode::MaskExcluded && mask.count_set() == 720),
            }
        }
        let full = full_image_feature::<f64>(&code);
        let top = ((1u32 << bits) - 1) as f64;
        prop_assert!(full.values.iter().all(|&v| v.fract() == 0.0 && (0.0..=top).contains(&v)));
    }

    #[test]
    fn counts_are_consistent(mc in 0usize..50, mt in 0usize..50, fc in 0usize..50, ft in 0usize..50) {
        let c = ClassCounts { male_correct: mc.min(mt), male_total: mt, female_correct: fc.min(ft), female_total: ft };
        prop_assert_eq!(c.total(), mt + ft);
        if c.total() > 0 {
            let expected = (c.male_correct + c.female_correct) as f64 / (mt + ft) as f64;
            prop_assert_eq!(c.accuracy(), expected);
        }
    }
}

#[test]
fn learned_responses_are_decorrelated() {
    let images = synthetic_eye_images(13, 240, 21).unwrap();
    let bank: FilterBank = learn_filterbank(&images, 7, 8, 20_000, 21).unwrap();
    // Held-out patches: same corpus, different draw.
    let held_out = sample_patches::<f64>(&images, 7, 20_000, 9_999).unwrap();
    let responses = held_out.matrix().matmul(&bank.weights().transpose()).unwrap();
    let n = responses.rows() as f64;
    let column = |j: usize| -> Vec<f64> { (0..responses.rows()).map(|r| responses[(r, j)]).collect() };
    let cols: Vec<Vec<f64>> = (0..bank.bits()).map(column).collect();
    let stats: Vec<(f64, f64)> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            (m, (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let cov = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a - stats[i].0) * (b - stats[j].0)).sum::<f64>() / n;
            worst = worst.max((cov / (stats[i].1 * stats[j].1)).abs());
        }
    }
    assert!(worst < 0.15, "max pairwise |rho| = {worst}");
}

#[test]
fn learning_is_deterministic() {
    let images = synthetic_eye_images(3, 120, 4).unwrap();
    let a: FilterBank = learn_filterbank(&images, 5, 6, 2_000, 4).unwrap();
    let b: FilterBank = learn_filterbank(&images, 5, 6, 2_000, 4).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    let c: FilterBank = learn_filterbank(&images, 5, 6, 2_000, 5).unwrap();
    assert_ne!(a.to_bytes(), c.to_bytes());
}
