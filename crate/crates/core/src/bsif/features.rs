use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::encode::CodeImage;
use crate::error::{Error, Result};
use crate::imaging::{save_gray16, save_gray_with_comments, GrayImage};
use crate::normalize::{Eye, Gender};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    /// Row-major code image flattened to reals.
    FullImage,
    /// L1-normalized `2^bits`-bin histogram of codes.
    Histogram,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::FullImage => "full_image",
            FeatureKind::Histogram => "histogram",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full_image" | "full" | "image" => Ok(FeatureKind::FullImage),
            "histogram" | "hist" => Ok(FeatureKind::Histogram),
            other => Err(Error::InvalidParameter(format!("unknown feature kind {other:?}"))),
        }
    }
}

/// Which pixels a histogram counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum HistogramMode {
    /// Every pixel, including those coded from the zeroed occlusion.
    #[default]
    MaskZeroed,
    /// Only pixels whose mask bit is clear.
    MaskExcluded,
}

impl HistogramMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HistogramMode::MaskZeroed => "zeroed",
            HistogramMode::MaskExcluded => "excluded",
        }
    }
}

impl FromStr for HistogramMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "zeroed" | "mask_zeroed" => Ok(HistogramMode::MaskZeroed),
            "excluded" | "mask_excluded" => Ok(HistogramMode::MaskExcluded),
            other => Err(Error::InvalidParameter(format!("unknown histogram mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T = f64> {
    pub kind: FeatureKind,
    pub values: Vec<T>,
    pub label: Gender,
    pub source_id: String,
    pub eye: Eye,
}

impl<T: Real> FeatureVector<T> {
    fn unlabeled(kind: FeatureKind, values: Vec<T>) -> Self {
        Self {
            kind,
            values,
            label: Gender::Unknown,
            source_id: String::new(),
            eye: Eye::Left,
        }
    }

    pub fn with_meta(mut self, source_id: impl Into<String>, eye: Eye, label: Gender) -> Self {
        self.source_id = source_id.into();
        self.eye = eye;
        self.label = label;
        self
    }
}

pub fn histogram_feature<T: Real>(code: &CodeImage, mode: HistogramMode) -> Result<FeatureVector<T>> {
    let mut counts = vec![0u64; 1 << code.bits()];
    let mut total = 0u64;
    for (&c, &masked) in code.codes().iter().zip(code.mask.bits()) {
        if mode == HistogramMode::MaskExcluded && masked {
            continue;
        }
        counts[c as usize] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptySupport);
    }
    let denom = T::lit(total as f64);
    let values = counts.into_iter().map(|c| T::lit(c as f64) / denom).collect();
    Ok(FeatureVector::unlabeled(FeatureKind::Histogram, values))
}

pub fn full_image_feature<T: Real>(code: &CodeImage) -> FeatureVector<T> {
    let values = code.codes().iter().map(|&c| T::lit(c as f64)).collect();
    FeatureVector::unlabeled(FeatureKind::FullImage, values)
}

/// Writes the code image as a PGM: 8-bit when `bits <= 8`, 16-bit otherwise.
pub fn save_code_image(code: &CodeImage, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    if code.bits() <= 8 {
        let img = GrayImage::new(
            code.width(),
            code.height(),
            code.codes().iter().map(|&c| c as u8).collect(),
        )?;
        save_gray_with_comments(&img, path, comments)
    } else if code.bits() <= 16 {
        let data: Vec<u16> = code.codes().iter().map(|&c| c as u16).collect();
        save_gray16(code.width(), code.height(), &data, path, comments)
    } else {
        Err(Error::InvalidParameter(format!(
            "cannot dump {}-bit codes as PGM",
            code.bits()
        )))
    }
}

/// Feature CSV: optional `#` comment lines, a header
/// `sample_id,eye,gender,kind,v0,...,vK`, then one row per vector.
pub fn write_features_csv<T: Real>(
    path: impl AsRef<Path>,
    features: &[FeatureVector<T>],
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for c in comments {
        for line in c.lines() {
            writeln!(buf, "# {line}").map_err(|e| Error::io(path, e))?;
        }
    }
    let width = features.first().map_or(0, |f| f.values.len());
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["sample_id".to_string(), "eye".into(), "gender".into(), "kind".into()];
        header.extend((0..width).map(|i| format!("v{i}")));
        w.write_record(&header)?;
        for f in features {
            if f.values.len() != width {
                return Err(Error::Dimensions(format!(
                    "feature {} has {} values, expected {width}",
                    f.source_id,
                    f.values.len()
                )));
            }
            let mut rec = vec![
                f.source_id.clone(),
                f.eye.to_string(),
                f.label.to_string(),
                f.kind.to_string(),
            ];
            rec.extend(f.values.iter().map(|v| v.to_f64_lossless().to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_features_csv<T: Real>(path: impl AsRef<Path>) -> Result<Vec<FeatureVector<T>>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Manifest(format!(
                "{}: row {} has {} fields",
                path.display(),
                line + 1,
                rec.len()
            )));
        }
        let values = rec
            .iter()
            .skip(4)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Manifest(format!("{}: bad value {v:?}", path.display())))
            })
            .collect::<Result<Vec<T>>>()?;
        out.push(FeatureVector {
            kind: rec[3].parse()?,
            values,
            label: rec[2].parse()?,
            source_id: rec[0].to_string(),
            eye: rec[1].parse()?,
        });
    }
    Ok(out)
}
