use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::ica::FastIca;
use super::patches::{check_patch_size, sample_patches};
use super::whitening::fit_whitening;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const MAX_BITS: usize = 16;
const MAGIC_PREFIX: &[u8; 6] = b"MBSIFB";
const VERSION: &[u8; 2] = b"01";

/// Kind of corpus a bank was trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorpusKind {
    Natural,
    Eye,
    Custom,
}

impl CorpusKind {
    pub fn tag(self) -> u32 {
        match self {
            CorpusKind::Natural => 0,
            CorpusKind::Eye => 1,
            CorpusKind::Custom => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(CorpusKind::Natural),
            1 => Some(CorpusKind::Eye),
            2 => Some(CorpusKind::Custom),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusKind::Natural => "natural",
            CorpusKind::Eye => "eye",
            CorpusKind::Custom => "custom",
        }
    }
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(CorpusKind::Natural),
            "eye" | "eyes" => Ok(CorpusKind::Eye),
            "custom" => Ok(CorpusKind::Custom),
            other => Err(Error::InvalidParameter(format!("unknown corpus kind {other:?}"))),
        }
    }
}

/// `bits` linear filters of size `size x size`, one per row of `weights`.
///
/// Row `i` is filter `i` vectorized row-major, and filter `i` sets bit `i`
/// (value `2^i`) of the code.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank<T = f64> {
    size: usize,
    weights: Matrix<T>,
    pub source: CorpusKind,
    pub corpus: String,
    pub seed: u64,
}

impl<T: Real> FilterBank<T> {
    pub fn new(size: usize, weights: Matrix<T>, source: CorpusKind, corpus: impl Into<String>, seed: u64) -> Result<Self> {
        validate_shape(size, weights.rows())?;
        if weights.cols() != size * size {
            return Err(Error::Dimensions(format!(
                "filters of size {size} need {} weights, got {}",
                size * size,
                weights.cols()
            )));
        }
        if !weights.is_finite() {
            return Err(Error::InvalidParameter("filter weights must be finite".into()));
        }
        Ok(Self {
            size,
            weights,
            source,
            corpus: corpus.into(),
            seed,
        })
    }

    /// Builds a custom bank from explicit `size x size` filters.
    pub fn from_filters(size: usize, filters: &[Vec<T>]) -> Result<Self> {
        let data: Vec<T> = filters.iter().flatten().copied().collect();
        let weights = Matrix::from_vec(filters.len(), size * size, data)?;
        Self::new(size, weights, CorpusKind::Custom, "hand-built", 0)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    /// Filter `i` as a row-major `size x size` slice.
    #[inline]
    pub fn filter(&self, i: usize) -> &[T] {
        self.weights.row(i)
    }

    pub fn with_source(mut self, source: CorpusKind, corpus: impl Into<String>) -> Self {
        self.source = source;
        self.corpus = corpus.into();
        self
    }

    pub fn cast<U: Real>(&self) -> FilterBank<U> {
        FilterBank {
            size: self.size,
            weights: Matrix::from_fn(self.weights.rows(), self.weights.cols(), |r, c| {
                U::lit(self.weights[(r, c)].to_f64_lossless())
            }),
            source: self.source,
            corpus: self.corpus.clone(),
            seed: self.seed,
        }
    }

    /// Serializes into the `MBSIFB01` binary layout (all integers and floats
    /// little-endian).
    pub fn to_bytes(&self) -> Vec<u8> {
        let desc = self.corpus.as_bytes();
        let mut out = Vec::with_capacity(36 + desc.len() + 8 * self.weights.data().len());
        out.extend_from_slice(MAGIC_PREFIX);
        out.extend_from_slice(VERSION);
        out.extend_from_slice(&(self.size as u32).to_le_bytes());
        out.extend_from_slice(&(self.bits() as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.source.tag().to_le_bytes());
        out.extend_from_slice(&(desc.len() as u32).to_le_bytes());
        out.extend_from_slice(desc);
        for w in self.weights.data() {
            out.extend_from_slice(&w.to_f64_lossless().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..6] != MAGIC_PREFIX {
            return Err(Error::Corrupt("not a filter-bank file (bad magic)".into()));
        }
        if &bytes[6..8] != VERSION {
            return Err(Error::Version {
                found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
                expected: "MBSIFB01".into(),
            });
        }
        let mut r = ByteReader { bytes, pos: 8 };
        let size = r.u32()? as usize;
        let bits = r.u32()? as usize;
        let seed = r.u64()?;
        let tag = r.u32()?;
        let source = CorpusKind::from_tag(tag)
            .ok_or_else(|| Error::Corrupt(format!("unknown corpus tag {tag}")))?;
        let desc_len = r.u32()? as usize;
        let corpus = String::from_utf8(r.take(desc_len)?.to_vec())
            .map_err(|_| Error::Corrupt("corpus description is not UTF-8".into()))?;
        validate_shape(size, bits)?;
        let count = bits * size * size;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(T::lit(r.f64()?));
        }
        if r.pos != bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after filter weights",
                bytes.len() - r.pos
            )));
        }
        Self::new(size, Matrix::from_vec(bits, size * size, data)?, source, corpus, seed)
    }
}

fn validate_shape(size: usize, bits: usize) -> Result<()> {
    check_patch_size(size)?;
    if bits == 0 || bits > MAX_BITS || bits > size * size - 1 {
        return Err(Error::InvalidParameter(format!(
            "bit count must be in [1, {}] for {size}x{size} filters, got {bits}",
            MAX_BITS.min(size * size - 1)
        )));
    }
    Ok(())
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.bytes.len())))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn save_filterbank<T: Real>(bank: &FilterBank<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bank.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_filterbank<T: Real>(path: impl AsRef<Path>) -> Result<FilterBank<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FilterBank::from_bytes(&bytes)
}

/// Learns `bits` filters of size `size` from `patches` random patches:
/// DC removal, PCA whitening to `bits` components, then FastICA. The
/// filters are the rows of `unmixing * projection`.
///
/// The returned bank is tagged [`CorpusKind::Custom`]; use
/// [`FilterBank::with_source`] to record the corpus.
pub fn learn_filterbank<T: Real>(
    images: &[GrayImage],
    size: usize,
    bits: usize,
    patches: usize,
    seed: u64,
) -> Result<FilterBank<T>> {
    validate_shape(size, bits)?;
    let patch_matrix = sample_patches::<T>(images, size, patches, seed)?;
    let whitening = fit_whitening(&patch_matrix, bits)?;
    let whitened = whitening.apply(patch_matrix.matrix());
    let ica = FastIca::default().fit(&whitened, seed)?;
    if !ica.converged {
        log::warn!("filter learning (size {size}, bits {bits}, seed {seed}): ICA stopped before converging");
    }
    let weights = ica.unmixing.matmul(&whitening.projection)?;
    FilterBank::new(
        size,
        weights,
        CorpusKind::Custom,
        format!("{} images, {patches} patches", images.len()),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_bank() -> FilterBank {
        let mut f = vec![0.0; 9];
        f[4] = 1.0;
        let mut g = vec![0.0; 9];
        g[0] = -0.5;
        g[8] = 0.25;
        FilterBank::from_filters(3, &[f, g]).unwrap()
    }

    #[test]
    fn byte_round_trip() {
        let bank = delta_bank().with_source(CorpusKind::Eye, "13 synthetic eyes ✓");
        let back = FilterBank::<f64>::from_bytes(&bank.to_bytes()).unwrap();
        assert_eq!(back, bank);
    }

    #[test]
    fn layout_is_fixed() {
        let bank = delta_bank();
        let b = bank.to_bytes();
        assert_eq!(&b[..8], b"MBSIFB01");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 0);
        assert_eq!(u32::from_le_bytes(b[24..28].try_into().unwrap()), 2);
        let dlen = u32::from_le_bytes(b[28..32].try_into().unwrap()) as usize;
        assert_eq!(&b[32..32 + dlen], b"hand-built");
        assert_eq!(b.len(), 32 + dlen + 18 * 8);
        let w4 = f64::from_le_bytes(b[32 + dlen + 32..32 + dlen + 40].try_into().unwrap());
        assert_eq!(w4, 1.0);
    }

    #[test]
    fn even_size_rejected() {
        let mut b = delta_bank().to_bytes();
        b[8..12].copy_from_slice(&12u32.to_le_bytes());
        assert!(matches!(FilterBank::<f64>::from_bytes(&b), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn truncated_and_foreign_files() {
        let b = delta_bank().to_bytes();
        for cut in [4, 20, b.len() - 1] {
            assert!(matches!(FilterBank::<f64>::from_bytes(&b[..cut]), Err(Error::Corrupt(_))), "{cut}");
        }
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(FilterBank::<f64>::from_bytes(&extra), Err(Error::Corrupt(_))));
        let mut v2 = b;
        v2[6..8].copy_from_slice(b"02");
        assert!(matches!(FilterBank::<f64>::from_bytes(&v2), Err(Error::Version { .. })));
    }

    #[test]
    fn shape_limits() {
        assert!(FilterBank::<f64>::new(3, Matrix::zeros(9, 9), CorpusKind::Custom, "", 0).is_err());
        assert!(FilterBank::<f64>::new(5, Matrix::zeros(17, 25), CorpusKind::Custom, "", 0).is_err());
        assert!(FilterBank::<f64>::new(5, Matrix::zeros(16, 25), CorpusKind::Custom, "", 0).is_ok());
        let mut nan = Matrix::zeros(1, 9);
        nan[(0, 0)] = f64::NAN;
        assert!(FilterBank::<f64>::new(3, nan, CorpusKind::Custom, "", 0).is_err());
    }

    #[test]
    fn file_round_trip_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.bsif");
        let bank = delta_bank().cast::<f32>();
        save_filterbank(&bank, &path).unwrap();
        assert_eq!(load_filterbank::<f32>(&path).unwrap(), bank);
    }
}
