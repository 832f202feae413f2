//! Rubber-sheet unwrapping of an annotated eye image into a fixed-size
//! polar strip.
//!
//! Strip row 0 lies on the pupil boundary and row `radial - 1` on the iris
//! boundary. Column `j` samples the ray at angle `2*pi*j/angular` from the
//! pupil center, where angle 0 points along +x and angles grow
//! counter-clockwise as seen on screen (towards -y in image coordinates).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{bilinear_sample, BitMask, Circle, FloatImage, GrayImage};
use crate::scalar::Real;

pub const DEFAULT_RADIAL: usize = 20;
pub const DEFAULT_ANGULAR: usize = 240;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub fn as_str(self) -> &'static str {
        match self {
            Eye::Left => "left",
            Eye::Right => "right",
        }
    }
}

impl fmt::Display for Eye {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Eye {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Eye::Left),
            "right" | "r" => Ok(Eye::Right),
            other => Err(Error::InvalidParameter(format!("unknown eye {other:?}"))),
        }
    }
}

/// Sample label. Binary classification maps male to +1 and female to -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        }
    }

    /// +1 for male, -1 for female, `None` when unknown.
    pub fn sign(self) -> Option<i8> {
        match self {
            Gender::Male => Some(1),
            Gender::Female => Some(-1),
            Gender::Unknown => None,
        }
    }

    pub fn from_sign(sign: i8) -> Self {
        if sign >= 0 {
            Gender::Male
        } else {
            Gender::Female
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" | "+1" | "1" => Ok(Gender::Male),
            "female" | "f" | "-1" => Ok(Gender::Female),
            "unknown" | "" | "?" => Ok(Gender::Unknown),
            other => Err(Error::InvalidParameter(format!("unknown gender {other:?}"))),
        }
    }
}

/// Segmentation output for one eye image.
#[derive(Clone, Debug, PartialEq)]
pub struct IrisAnnotation<T = f64> {
    pub pupil: Circle<T>,
    pub iris: Circle<T>,
    pub occlusion: BitMask,
}

impl<T: Real> IrisAnnotation<T> {
    pub fn new(pupil: Circle<T>, iris: Circle<T>, occlusion: BitMask) -> Result<Self> {
        let ann = Self {
            pupil,
            iris,
            occlusion,
        };
        ann.validate()?;
        Ok(ann)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pupil.r < self.iris.r) {
            return Err(Error::Annotation(format!(
                "pupil radius {} must be smaller than iris radius {}",
                self.pupil.r, self.iris.r
            )));
        }
        if !self.iris.contains_point(self.pupil.cx, self.pupil.cy) {
            return Err(Error::Annotation(format!(
                "pupil center ({}, {}) lies outside the iris circle",
                self.pupil.cx, self.pupil.cy
            )));
        }
        Ok(())
    }
}

/// Polar iris strip: `radial` rows by `angular` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedIris<T = f64> {
    pub strip: FloatImage<T>,
    pub mask: BitMask,
    pub source_id: String,
    pub eye: Eye,
    pub gender: Gender,
}

impl<T: Real> NormalizedIris<T> {
    pub fn new(strip: FloatImage<T>, mask: BitMask) -> Result<Self> {
        if !mask.same_dims(strip.width(), strip.height()) {
            return Err(Error::Dimensions(format!(
                "mask {}x{} does not match strip {}x{}",
                mask.width(),
                mask.height(),
                strip.width(),
                strip.height()
            )));
        }
        Ok(Self {
            strip,
            mask,
            source_id: String::new(),
            eye: Eye::Left,
            gender: Gender::Unknown,
        })
    }

    pub fn with_meta(mut self, source_id: impl Into<String>, eye: Eye, gender: Gender) -> Self {
        self.source_id = source_id.into();
        self.eye = eye;
        self.gender = gender;
        self
    }

    pub fn radial(&self) -> usize {
        self.strip.height()
    }

    pub fn angular(&self) -> usize {
        self.strip.width()
    }
}

/// Samples along one ray: `(intensity, occluded)` for each radial position.
///
/// Exposed so callers can probe arbitrary angles, including `2*pi`.
pub fn sample_ray<T: Real>(
    image: &GrayImage,
    ann: &IrisAnnotation<T>,
    theta: T,
    radial: usize,
) -> Vec<(T, bool)> {
    let (dx, dy) = (theta.cos(), -theta.sin());
    let (px, py) = (ann.pupil.cx, ann.pupil.cy);
    // distance along the ray from the pupil center to the iris circle
    let ex = px - ann.iris.cx;
    let ey = py - ann.iris.cy;
    let b = ex * dx + ey * dy;
    let c = ex * ex + ey * ey - ann.iris.r * ann.iris.r;
    let outer = -b + (b * b - c).max(T::zero()).sqrt();
    let inner = ann.pupil.r;

    let max_x = T::lit((image.width() - 1) as f64);
    let max_y = T::lit((image.height() - 1) as f64);
    (0..radial)
        .map(|ri| {
            let frac = if radial > 1 {
                T::lit(ri as f64) / T::lit((radial - 1) as f64)
            } else {
                T::zero()
            };
            let t = inner + (outer - inner) * frac;
            let x = px + t * dx;
            let y = py + t * dy;
            if !(x >= T::zero() && x <= max_x && y >= T::zero() && y <= max_y) {
                return (T::zero(), true);
            }
            let v = bilinear_sample(image, x, y).unwrap_or(T::zero());
            let nx = x.round().to_usize().unwrap_or(0).min(image.width() - 1);
            let ny = y.round().to_usize().unwrap_or(0).min(image.height() - 1);
            (v, ann.occlusion.get(nx, ny))
        })
        .collect()
}

/// Unwraps the iris annulus into a `radial x angular` strip with its mask.
pub fn rubber_sheet<T: Real>(
    image: &GrayImage,
    ann: &IrisAnnotation<T>,
    radial: usize,
    angular: usize,
) -> Result<NormalizedIris<T>> {
    ann.validate()?;
    if radial == 0 || angular == 0 {
        return Err(Error::InvalidParameter(format!(
            "strip resolution must be positive, got {radial}x{angular}"
        )));
    }
    if !ann.occlusion.same_dims(image.width(), image.height()) {
        return Err(Error::Annotation(format!(
            "occlusion mask {}x{} does not match image {}x{}",
            ann.occlusion.width(),
            ann.occlusion.height(),
            image.width(),
            image.height()
        )));
    }
    let mut strip = vec![T::zero(); radial * angular];
    let mut mask = vec![false; radial * angular];
    let step = T::lit(std::f64::consts::TAU) / T::lit(angular as f64);
    for j in 0..angular {
        let theta = step * T::lit(j as f64);
        for (ri, (v, occluded)) in sample_ray(image, ann, theta, radial).into_iter().enumerate() {
            strip[ri * angular + j] = v;
            mask[ri * angular + j] = occluded;
        }
    }
    NormalizedIris::new(
        FloatImage::new(angular, radial, strip)?,
        BitMask::new(angular, radial, mask)?,
    )
}

/// Sets occluded strip values to zero; the mask itself is kept.
pub fn apply_mask_zero<T: Real>(n: &NormalizedIris<T>) -> NormalizedIris<T> {
    let mut out = n.clone();
    let w = n.strip.width();
    for y in 0..n.strip.height() {
        for x in 0..w {
            if n.mask.get(x, y) {
                out.strip.set(x, y, T::zero());
            }
        }
    }
    out
}
