//! Raster containers and elementary sampling.
//!
//! Pixel addressing is `(x, y)` with `x` the column and `y` the row; storage
//! is row-major everywhere in the crate, so pixel `(x, y)` lives at offset
//! `y * width + x`.

mod io;

pub use io::{load_gray, read_pgm, save_gray, save_gray16, save_gray_with_comments, write_pgm};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// 8-bit grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        check_dims(width, height, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn to_float<T: Real>(&self) -> FloatImage<T> {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| T::lit(v as f64)).collect(),
        }
    }
}

/// Real-valued raster used for interpolated strips and filter responses.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage<T = f64> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> FloatImage<T> {
    /// Fails on a length mismatch or any non-finite value.
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimensions(format!(
                "non-finite value at offset {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![T::zero(); width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        debug_assert!(value.is_finite());
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Rounds to the nearest integer and clamps into `[0, 255]`.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .iter()
            .map(|v| {
                let v = v.to_f64_lossless().round().clamp(0.0, 255.0);
                v as u8
            })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn cast<U: Real>(&self) -> FloatImage<U> {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossless())).collect(),
        }
    }
}

/// Boolean raster; `true` marks an occluded pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    /// Pixels at or above 128 count as occluded.
    pub fn from_gray(image: &GrayImage) -> Self {
        Self {
            width: image.width,
            height: image.height,
            bits: image.data.iter().map(|&v| v >= 128).collect(),
        }
    }

    /// Occluded pixels become 255, clear pixels 0.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

/// Circle in image coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle<T = f64> {
    pub cx: T,
    pub cy: T,
    pub r: T,
}

impl<T: Real> Circle<T> {
    pub fn new(cx: T, cy: T, r: T) -> Result<Self> {
        if !(cx.is_finite() && cy.is_finite() && r.is_finite()) || r < T::zero() {
            return Err(Error::Annotation(format!(
                "circle ({cx}, {cy}, r={r}) must be finite with r >= 0"
            )));
        }
        Ok(Self { cx, cy, r })
    }

    pub fn contains_point(&self, x: T, y: T) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        (dx * dx + dy * dy).sqrt() < self.r
    }
}

/// Bilinear interpolation of `image` at sub-pixel `(x, y)`.
///
/// Exact at integer coordinates. Coordinates must lie within
/// `[0, width-1] x [0, height-1]`; callers clamp explicitly.
pub fn bilinear_sample<T: Real>(image: &GrayImage, x: T, y: T) -> Result<T> {
    let max_x = T::lit((image.width - 1) as f64);
    let max_y = T::lit((image.height - 1) as f64);
    if !(x >= T::zero() && x <= max_x && y >= T::zero() && y <= max_y) {
        return Err(Error::OutOfBounds {
            x: x.to_f64_lossless(),
            y: y.to_f64_lossless(),
            width: image.width,
            height: image.height,
        });
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0.to_usize().unwrap_or(0);
    let y0 = y0.to_usize().unwrap_or(0);
    let x1 = (x0 + 1).min(image.width - 1);
    let y1 = (y0 + 1).min(image.height - 1);
    let p = |xx: usize, yy: usize| T::lit(image.get(xx, yy) as f64);
    let one = T::one();
    Ok(p(x0, y0) * (one - fx) * (one - fy)
        + p(x1, y0) * fx * (one - fy)
        + p(x0, y1) * (one - fx) * fy
        + p(x1, y1) * fx * fy)
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions(format!(
            "width and height must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Dimensions(format!(
            "{width}x{height} image needs {} values, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> GrayImage {
        GrayImage::new(2, 2, vec![10, 20, 30, 40]).unwrap()
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(FloatImage::<f64>::new(1, 1, vec![f64::NAN]).is_err());
        assert!(BitMask::new(3, 1, vec![true; 2]).is_err());
    }

    #[test]
    fn bilinear_exact_at_integers() {
        let img = GrayImage::from_fn(7, 9, |x, y| (x * 31 + y * 7) as u8).unwrap();
        let v: f64 = bilinear_sample(&img, 3.0, 5.0).unwrap();
        assert_eq!(v, img.get(3, 5) as f64);
        let v: f64 = bilinear_sample(&img, 6.0, 8.0).unwrap();
        assert_eq!(v, img.get(6, 8) as f64);
    }

    #[test]
    fn bilinear_midpoint() {
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        let v: f64 = bilinear_sample(&img, 0.5, 0.0).unwrap();
        assert_eq!(v, 127.5);
    }

    #[test]
    fn bilinear_hand_evaluated() {
        // 10*.75*.25 + 20*.25*.25 + 30*.75*.75 + 40*.25*.75
        let v: f64 = bilinear_sample(&two_by_two(), 0.25, 0.75).unwrap();
        assert!((v - 27.5).abs() < 1e-12);
        let v32: f32 = bilinear_sample(&two_by_two(), 0.25, 0.75).unwrap();
        assert!((v32 - 27.5).abs() < 1e-5);
    }

    #[test]
    fn bilinear_out_of_range() {
        assert!(bilinear_sample(&two_by_two(), -0.01f64, 0.0).is_err());
        assert!(bilinear_sample(&two_by_two(), 0.0f64, 1.01).is_err());
        assert!(bilinear_sample(&two_by_two(), f64::NAN, 0.0).is_err());
    }

    #[test]
    fn circle_rejects_negative_radius() {
        assert!(Circle::new(0.0, 0.0, -1.0).is_err());
        assert!(Circle::new(0.0, 0.0, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn bilinear_within_neighbour_range(
            px in proptest::collection::vec(any::<u8>(), 4),
            x in 0.0f64..=1.0,
            y in 0.0f64..=1.0,
        ) {
            let img = GrayImage::new(2, 2, px.clone()).unwrap();
            let v: f64 = bilinear_sample(&img, x, y).unwrap();
            let lo = *px.iter().min().unwrap() as f64;
            let hi = *px.iter().max().unwrap() as f64;
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }

        #[test]
        fn bilinear_is_lipschitz(
            px in proptest::collection::vec(any::<u8>(), 9),
            x in 0.0f64..=2.0,
            y in 0.0f64..=2.0,
            dx in -0.5f64..0.5,
            dy in -0.5f64..0.5,
        ) {
            let img = GrayImage::new(3, 3, px).unwrap();
            let x2 = (x + dx).clamp(0.0, 2.0);
            let y2 = (y + dy).clamp(0.0, 2.0);
            let a: f64 = bilinear_sample(&img, x, y).unwrap();
            let b: f64 = bilinear_sample(&img, x2, y2).unwrap();
            let eps = (x2 - x).abs().max((y2 - y).abs());
            prop_assert!((a - b).abs() <= 255.0 * 2.0 * eps + 1e-9);
        }
    }
}
