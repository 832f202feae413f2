use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::FloatImage;
use crate::scalar::Real;

/// How one axis is extended beyond the image border.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PaddingMode {
    /// Copies from the opposite edge (periodic extension).
    Wrap,
    /// Repeats the nearest edge row or column.
    Replicate,
    /// Writes zeros.
    Zero,
    /// Mirrors about the edge pixel without repeating it.
    Reflect,
}

impl PaddingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PaddingMode::Wrap => "wrap",
            PaddingMode::Replicate => "replicate",
            PaddingMode::Zero => "zero",
            PaddingMode::Reflect => "reflect",
        }
    }

    /// Source index for the (possibly out-of-range) index `i` on an axis of
    /// length `len`; `None` means the padded value is zero.
    #[inline]
    pub fn source_index(self, i: isize, len: usize) -> Option<usize> {
        let n = len as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            PaddingMode::Zero => None,
            PaddingMode::Wrap => Some(i.rem_euclid(n) as usize),
            PaddingMode::Replicate => Some(i.clamp(0, n - 1) as usize),
            PaddingMode::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let period = 2 * (n - 1);
                let j = i.rem_euclid(period);
                Some(if j < n { j } else { period - j } as usize)
            }
        }
    }
}

impl fmt::Display for PaddingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PaddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wrap" | "circular" => Ok(PaddingMode::Wrap),
            "replicate" | "edge" => Ok(PaddingMode::Replicate),
            "zero" | "constant" => Ok(PaddingMode::Zero),
            "reflect" | "symmetric" => Ok(PaddingMode::Reflect),
            other => Err(Error::InvalidParameter(format!("unknown padding mode {other:?}"))),
        }
    }
}

/// Per-axis boundary handling for a polar strip.
///
/// The radial axis runs down the rows (pupil to sclera); the angular axis
/// runs across the columns. The pad width is always `(size - 1) / 2` for a
/// `size x size` filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PaddingStrategy {
    pub radial: PaddingMode,
    pub angular: PaddingMode,
}

impl PaddingStrategy {
    /// Both axes wrapped: the classic BSIF boundary handling.
    pub const TRADITIONAL: Self = Self {
        radial: PaddingMode::Wrap,
        angular: PaddingMode::Wrap,
    };

    /// Top and bottom rows replicated, angular axis wrapped since it is
    /// periodic on the iris.
    pub const MODIFIED: Self = Self {
        radial: PaddingMode::Replicate,
        angular: PaddingMode::Wrap,
    };

    /// Replicate on both axes.
    pub const FULL_REPLICATE: Self = Self {
        radial: PaddingMode::Replicate,
        angular: PaddingMode::Replicate,
    };

    pub const fn new(radial: PaddingMode, angular: PaddingMode) -> Self {
        Self { radial, angular }
    }

    /// Short name: a preset name when one matches, otherwise
    /// `radial/angular`.
    pub fn name(&self) -> String {
        match *self {
            Self::TRADITIONAL => "traditional".into(),
            Self::MODIFIED => "modified".into(),
            Self::FULL_REPLICATE => "replicate".into(),
            _ => format!("{}/{}", self.radial, self.angular),
        }
    }
}

impl fmt::Display for PaddingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PaddingStrategy {
    type Err = Error;

    /// Accepts `traditional`, `modified`, `replicate`, or `radial/angular`
    /// (e.g. `reflect/wrap`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "traditional" | "bsif" => return Ok(Self::TRADITIONAL),
            "modified" | "mbsif" => return Ok(Self::MODIFIED),
            "replicate" | "full-replicate" => return Ok(Self::FULL_REPLICATE),
            _ => {}
        }
        match s.split_once(['/', ':']) {
            Some((r, a)) => Ok(Self::new(r.parse()?, a.parse()?)),
            None => Err(Error::InvalidParameter(format!(
                "unknown padding {s:?}; expected traditional, modified, replicate or radial/angular"
            ))),
        }
    }
}

/// Pads a strip for a `size x size` filter: `k = (size - 1) / 2` extra rows
/// on top and bottom and `k` extra columns on each side.
///
/// Corners take the angular rule for the column and the radial rule for the
/// row, which is the same as padding columns first and then rows.
pub fn pad_image<T: Real>(strip: &FloatImage<T>, size: usize, padding: PaddingStrategy) -> Result<FloatImage<T>> {
    let k = pad_width(size)?;
    let (w, h) = (strip.width(), strip.height());
    check_extent(padding.radial, k, h, "radial")?;
    check_extent(padding.angular, k, w, "angular")?;
    let (pw, ph) = (w + 2 * k, h + 2 * k);
    let cols: Vec<Option<usize>> = (0..pw)
        .map(|x| padding.angular.source_index(x as isize - k as isize, w))
        .collect();
    let mut data = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        match padding.radial.source_index(y as isize - k as isize, h) {
            Some(sy) => {
                let row = strip.row(sy);
                data.extend(cols.iter().map(|c| c.map_or(T::zero(), |sx| row[sx])));
            }
            None => data.extend(std::iter::repeat_n(T::zero(), pw)),
        }
    }
    FloatImage::new(pw, ph, data)
}

pub(crate) fn pad_width(size: usize) -> Result<usize> {
    if size % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "filter size must be odd, got {size}"
        )));
    }
    Ok((size - 1) / 2)
}

fn check_extent(mode: PaddingMode, k: usize, len: usize, axis: &str) -> Result<()> {
    if matches!(mode, PaddingMode::Wrap | PaddingMode::Reflect) && k > len {
        return Err(Error::InvalidParameter(format!(
            "{mode} padding of {k} exceeds the {axis} extent {len}"
        )));
    }
    Ok(())
}
