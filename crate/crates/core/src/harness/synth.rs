//! Procedural stand-ins for restricted iris databases: labelled two-class
//! strips, eye images and natural images for filter learning, and a writer
//! that renders strips back into annotated eye images on disk.
//!
//! Class information lives in a thin band of diagonal texture next to the
//! pupil (`+45` degrees for male, `-45` for female). The rows next to the
//! sclera carry high-contrast class-independent eyelash streaks and eyelid
//! occlusions. Wrapping the radial axis therefore drags that clutter into
//! the informative rows, while replicating does not.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::experiment::{PreparedCorpus, Sample};
use super::manifest::{write_manifest, DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::imaging::{save_gray_with_comments, BitMask, Circle, FloatImage, GrayImage};
use crate::normalize::{apply_mask_zero, Eye, Gender, NormalizedIris, DEFAULT_ANGULAR, DEFAULT_RADIAL};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    /// Total subjects; even indices are male.
    pub subjects: usize,
    pub radial: usize,
    pub angular: usize,
    /// Rows from the pupil edge carrying the class texture.
    pub informative_rows: usize,
    pub class_amplitude: f64,
    /// Cycles per pixel along the diagonal.
    pub class_frequency: f64,
    pub common_amplitude: f64,
    /// Rows at the sclera edge carrying eyelash clutter.
    pub boundary_rows: usize,
    pub boundary_amplitude: f64,
    pub occlusion_probability: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            subjects: 400,
            radial: DEFAULT_RADIAL,
            angular: DEFAULT_ANGULAR,
            informative_rows: 3,
            class_amplitude: 60.0,
            class_frequency: 0.2,
            common_amplitude: 30.0,
            boundary_rows: 5,
            boundary_amplitude: 90.0,
            occlusion_probability: 0.7,
            noise: 6.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.radial < self.informative_rows + self.boundary_rows || self.radial < 2 || self.angular < 8 {
            return Err(Error::InvalidParameter(format!(
                "a {}x{} strip cannot hold {} informative and {} boundary rows",
                self.radial, self.angular, self.informative_rows, self.boundary_rows
            )));
        }
        if !(0.0..=1.0).contains(&self.occlusion_probability) {
            return Err(Error::InvalidParameter("occlusion probability must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn gender_of(subject: usize) -> Gender {
        if subject % 2 == 0 {
            Gender::Male
        } else {
            Gender::Female
        }
    }

    pub fn subject_id(subject: usize) -> String {
        format!("s{subject:04}")
    }

    /// One RNG stream per (subject, eye).
    fn rng(&self, subject: usize, eye: Eye) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2 * subject as u64 + u64::from(eye == Eye::Right));
        rng
    }
}

struct Wave {
    amp: f64,
    kx: f64,
    ky: f64,
    phase: f64,
}

impl Wave {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.amp * (self.kx * x + self.ky * y + self.phase).cos()
    }
}

fn random_waves(rng: &mut ChaCha8Rng, count: usize, amplitude: f64, freq: (f64, f64)) -> Vec<Wave> {
    let amp = amplitude / (count as f64).sqrt();
    (0..count)
        .map(|_| {
            let angle = rng.random_range(0.0..PI);
            let f = TAU * rng.random_range(freq.0..freq.1);
            Wave {
                amp,
                kx: f * angle.cos(),
                ky: f * angle.sin(),
                phase: rng.random_range(0.0..TAU),
            }
        })
        .collect()
}

/// Raw (not yet mask-zeroed) strip for one subject and eye.
pub fn synth_strip(params: &SynthParams, gender: Gender, rng: &mut ChaCha8Rng) -> Result<NormalizedIris> {
    let (h, w) = (params.radial, params.angular);
    let common = random_waves(rng, 6, params.common_amplitude, (0.04, 0.2));
    let sign = if gender == Gender::Female { -1.0 } else { 1.0 };
    let f = TAU * params.class_frequency * rng.random_range(0.9..1.1) / 2f64.sqrt();
    let class = Wave {
        amp: params.class_amplitude,
        kx: f,
        ky: sign * f,
        phase: rng.random_range(0.0..TAU),
    };

    // Eyelash streaks: runs of 1-4 columns sharing a random level.
    let mut streaks = vec![0.0; w];
    let mut x = 0;
    while x < w {
        let run = rng.random_range(1..=4usize);
        let level = rng.random_range(-params.boundary_amplitude..=params.boundary_amplitude);
        for s in streaks.iter_mut().skip(x).take(run) {
            *s = level;
        }
        x += run;
    }

    let boundary_start = h - params.boundary_rows;
    let mut data = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let mut v = 128.0 + common.iter().map(|c| c.at(xf, yf)).sum::<f64>();
            if y < params.informative_rows {
                v += class.at(xf, yf);
            }
            if y >= boundary_start {
                v += streaks[x];
            }
            let n: f64 = StandardNormal.sample(rng);
            data.push((v + params.noise * n).clamp(0.0, 255.0));
        }
    }

    let mut mask = vec![false; h * w];
    if rng.random_bool(params.occlusion_probability) {
        // Eyelid: the outermost rows over a random angular span.
        let depth = rng.random_range(2..=params.boundary_rows + 2).min(h);
        let center = rng.random_range(0..w);
        let half = rng.random_range(w / 16..=w / 5).max(1);
        for dx in 0..=2 * half {
            let x = (center + w + dx - half) % w;
            for y in h - depth..h {
                mask[y * w + x] = true;
            }
        }
    }
    NormalizedIris::new(FloatImage::new(w, h, data)?, BitMask::new(w, h, mask)?)
}

/// The labelled strip corpus, one strip per subject per eye, mask-zeroed.
pub fn synthetic_corpus(params: &SynthParams) -> Result<PreparedCorpus> {
    params.validate()?;
    let mut samples = Vec::with_capacity(2 * params.subjects);
    for subject in 0..params.subjects {
        let gender = SynthParams::gender_of(subject);
        let subject_id = SynthParams::subject_id(subject);
        for eye in [Eye::Left, Eye::Right] {
            let raw = synth_strip(params, gender, &mut params.rng(subject, eye))?;
            let sample_id = format!("{subject_id}_{}", &eye.as_str()[..1]);
            samples.push(Sample {
                iris: apply_mask_zero(&raw).with_meta(sample_id.clone(), eye, gender),
                sample_id,
                subject_id: subject_id.clone(),
                eye,
                gender,
            });
        }
    }
    PreparedCorpus::new(format!("synthetic-{}", params.seed), samples)
}

/// Geometry used when rendering strips into eye images.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeGeometry {
    pub size: usize,
    pub pupil: Circle,
    pub iris: Circle,
}

impl Default for EyeGeometry {
    fn default() -> Self {
        Self {
            size: 240,
            pupil: Circle { cx: 120.0, cy: 120.0, r: 40.0 },
            iris: Circle { cx: 120.0, cy: 120.0, r: 100.0 },
        }
    }
}

/// Paints a strip back into the annulus of a `size x size` eye image so
/// that unwrapping with the same circles approximately recovers it.
/// Returns the image and its occlusion mask (255 = occluded).
pub fn render_eye(iris: &NormalizedIris, geom: &EyeGeometry) -> Result<(GrayImage, GrayImage)> {
    let (h, w) = (iris.radial(), iris.angular());
    let strip = &iris.strip;
    let (cx, cy) = (geom.iris.cx, geom.iris.cy);
    let (rp, ri) = (geom.pupil.r, geom.iris.r);
    if (geom.pupil.cx, geom.pupil.cy) != (cx, cy) || !(rp < ri) {
        return Err(Error::InvalidParameter("rendering needs concentric circles with pupil inside iris".into()));
    }
    let mut image = vec![0u8; geom.size * geom.size];
    let mut mask = vec![0u8; geom.size * geom.size];
    for py in 0..geom.size {
        for px in 0..geom.size {
            let (dx, dy) = (px as f64 - cx, py as f64 - cy);
            let r = dx.hypot(dy);
            let idx = py * geom.size + px;
            if r < rp {
                image[idx] = 30;
                continue;
            }
            if r > ri {
                image[idx] = 200;
                continue;
            }
            let ry = ((r - rp) / (ri - rp) * (h - 1) as f64).clamp(0.0, (h - 1) as f64);
            let tx = (-dy).atan2(dx).rem_euclid(TAU) / TAU * w as f64;
            let (y0, x0) = (ry.floor() as usize, tx.floor() as usize % w);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1) % w);
            let (fy, fx) = (ry - ry.floor(), tx - tx.floor());
            let top = strip.get(x0, y0) * (1.0 - fx) + strip.get(x1, y0) * fx;
            let bottom = strip.get(x0, y1) * (1.0 - fx) + strip.get(x1, y1) * fx;
            image[idx] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
            let (ny, nx) = (ry.round() as usize, tx.round() as usize % w);
            if iris.mask.get(nx, ny) {
                mask[idx] = 255;
            }
        }
    }
    Ok((
        GrayImage::new(geom.size, geom.size, image)?,
        GrayImage::new(geom.size, geom.size, mask)?,
    ))
}

/// Writes the corpus as eye images, masks and `manifest.csv` under `dir`.
pub fn write_synthetic_corpus(dir: impl AsRef<Path>, params: &SynthParams, comments: &[String]) -> Result<PathBuf> {
    params.validate()?;
    let dir = dir.as_ref();
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let geom = EyeGeometry::default();
    let mut entries = Vec::new();
    for subject in 0..params.subjects {
        let gender = SynthParams::gender_of(subject);
        let subject_id = SynthParams::subject_id(subject);
        for eye in [Eye::Left, Eye::Right] {
            let raw = synth_strip(params, gender, &mut params.rng(subject, eye))?;
            let sample_id = format!("{subject_id}_{}", &eye.as_str()[..1]);
            let (image, mask) = render_eye(&raw, &geom)?;
            let image_path = dir.join("images").join(format!("{sample_id}.pgm"));
            let mask_path = dir.join("masks").join(format!("{sample_id}_mask.pgm"));
            save_gray_with_comments(&image, &image_path, comments)?;
            save_gray_with_comments(&mask, &mask_path, comments)?;
            entries.push(ManifestEntry {
                sample_id,
                subject_id: subject_id.clone(),
                eye,
                gender,
                image_path,
                mask_path: Some(mask_path),
                pupil: geom.pupil,
                iris: geom.iris,
            });
        }
    }
    let path = dir.join("manifest.csv");
    write_manifest(&DatasetManifest::new("manifest", entries)?, &path, comments)?;
    Ok(path)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Near-infrared-like eye images: dark pupil with a specular spot, radially
/// textured iris, bright sclera, eyelids and eyelashes.
pub fn synthetic_eye_images(count: usize, size: usize, seed: u64) -> Result<Vec<GrayImage>> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let s = size as f64;
            let (cx, cy) = (s * rng.random_range(0.45..0.55), s * rng.random_range(0.45..0.55));
            let ri = s * rng.random_range(0.33..0.4);
            let rp = ri * rng.random_range(0.3..0.5);
            let fibers: Vec<(f64, f64, f64)> = (0..8)
                .map(|_| (rng.random_range(6..60) as f64, rng.random_range(0.02..0.15), rng.random_range(0.0..TAU)))
                .collect();
            let iris_level = rng.random_range(90.0..140.0);
            let lid_top = cy - ri * rng.random_range(0.6..0.95);
            let lid_bottom = cy + ri * rng.random_range(0.7..1.05);
            let lashes: Vec<(f64, f64)> = (0..40)
                .map(|_| (rng.random_range(0.0..s), rng.random_range(-0.6..0.6)))
                .collect();
            let spot = (cx + rp * rng.random_range(-0.5..0.5), cy + rp * rng.random_range(-0.5..0.5));
            GrayImage::from_fn(size, size, |x, y| {
                let (xf, yf) = (x as f64, y as f64);
                let (dx, dy) = (xf - cx, yf - cy);
                let r = dx.hypot(dy);
                let theta = (-dy).atan2(dx);
                let upper = lid_top + (dx / s).powi(2) * s * 1.2;
                let lower = lid_bottom - (dx / s).powi(2) * s * 0.8;
                let mut v = if yf < upper || yf > lower {
                    150.0 + 10.0 * (xf * 0.05).sin() * (yf * 0.07).cos()
                } else if r < rp {
                    if (xf - spot.0).hypot(yf - spot.1) < rp * 0.15 {
                        250.0
                    } else {
                        25.0
                    }
                } else if r < ri {
                    let t = (r - rp) / (ri - rp);
                    iris_level
                        + fibers
                            .iter()
                            .map(|&(k, fr, ph)| 12.0 * (k * theta + TAU * fr * r + ph).cos())
                            .sum::<f64>()
                        + 25.0 * t
                } else {
                    195.0 - 20.0 * ((r - ri) / s)
                };
                for &(lx, slope) in &lashes {
                    let ly = yf - upper;
                    if (0.0..s * 0.08).contains(&ly) && (xf - lx - slope * ly).abs() < 0.8 {
                        v = 35.0;
                    }
                }
                let n: f64 = StandardNormal.sample(&mut rng);
                (v + 3.0 * n).round().clamp(0.0, 255.0) as u8
            })
        })
        .collect()
}

/// Dead-leaves images: overlapping disks and rectangles with power-law
/// sizes, a common surrogate for natural-scene statistics.
pub fn synthetic_natural_images(count: usize, size: usize, seed: u64) -> Result<Vec<GrayImage>> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed ^ 0x6e61_7475_7261_6c00, i as u64);
            let s = size as f64;
            let mut img = vec![rng.random_range(60.0..200.0); size * size];
            for _ in 0..(size * size / 40).max(50) {
                // r ~ r_min * u^(-1/2): many small shapes, few large ones.
                let u: f64 = rng.random_range(0.002..1.0);
                let radius = (1.5 * u.powf(-0.5)).min(s / 3.0);
                let (cx, cy) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
                let level = rng.random_range(0.0..255.0);
                let gradient = rng.random_range(-1.0..1.0);
                let disk = rng.random_bool(0.6);
                let (x0, x1) = (((cx - radius).floor().max(0.0)) as usize, ((cx + radius).ceil().min(s - 1.0)) as usize);
                let (y0, y1) = (((cy - radius).floor().max(0.0)) as usize, ((cy + radius).ceil().min(s - 1.0)) as usize);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                        if !disk || dx.hypot(dy) <= radius {
                            img[y * size + x] = level + gradient * dx;
                        }
                    }
                }
            }
            GrayImage::from_fn(size, size, |x, y| {
                let n: f64 = StandardNormal.sample(&mut rng);
                (img[y * size + x] + 2.0 * n).round().clamp(0.0, 255.0) as u8
            })
        })
        .collect()
}
