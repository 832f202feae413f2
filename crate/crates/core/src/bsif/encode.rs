use super::padding::{pad_image, PaddingStrategy};
use crate::error::{Error, Result};
use crate::imaging::{BitMask, FloatImage};
use crate::learn::FilterBank;
use crate::scalar::Real;

/// Full-image responses of every filter in a bank.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseStack<T = f64> {
    pub responses: Vec<FloatImage<T>>,
}

impl<T: Real> ResponseStack<T> {
    pub fn bits(&self) -> usize {
        self.responses.len()
    }
}

/// Per-pixel codes in `[0, 2^bits - 1]`; bit `i` is set when filter `i`
/// responds strictly positively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeImage {
    bits: usize,
    width: usize,
    height: usize,
    codes: Vec<u32>,
    pub mask: BitMask,
}

impl CodeImage {
    pub fn new(bits: usize, width: usize, height: usize, codes: Vec<u32>, mask: BitMask) -> Result<Self> {
        if bits == 0 || bits > 31 {
            return Err(Error::InvalidParameter(format!("unsupported bit count {bits}")));
        }
        if width * height != codes.len() || !mask.same_dims(width, height) {
            return Err(Error::Dimensions(format!(
                "code image {width}x{height} with {} codes and a {}x{} mask",
                codes.len(),
                mask.width(),
                mask.height()
            )));
        }
        if let Some(c) = codes.iter().find(|&&c| c >> bits != 0) {
            return Err(Error::InvalidParameter(format!("code {c} exceeds {bits} bits")));
        }
        Ok(Self {
            bits,
            width,
            height,
            codes,
            mask,
        })
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
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
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.codes[y * self.width + x]
    }
}

/// Correlates every filter with the padded strip (no kernel flip):
/// `response_i(x, y) = sum_{v,u} W_i(v, u) * padded(y + v, x + u)`, summed in
/// row-major `(v, u)` order, cropped back to the strip size.
pub fn filter_responses<T: Real>(
    strip: &FloatImage<T>,
    bank: &FilterBank<T>,
    padding: PaddingStrategy,
) -> Result<ResponseStack<T>> {
    let l = bank.size();
    let padded = pad_image(strip, l, padding)?;
    let (w, h, pw) = (strip.width(), strip.height(), padded.width());
    let pdata = padded.data();
    let mut responses = Vec::with_capacity(bank.bits());
    for i in 0..bank.bits() {
        let filter = bank.filter(i);
        let mut out = vec![T::zero(); w * h];
        for y in 0..h {
            let acc = &mut out[y * w..(y + 1) * w];
            for v in 0..l {
                let row = &pdata[(y + v) * pw..(y + v + 1) * pw];
                for u in 0..l {
                    let wt = filter[v * l + u];
                    for (a, &p) in acc.iter_mut().zip(&row[u..u + w]) {
                        *a += wt * p;
                    }
                }
            }
        }
        responses.push(FloatImage::new(w, h, out)?);
    }
    Ok(ResponseStack { responses })
}

/// Binarizes the responses (`> 0` sets the bit) and stacks them into codes:
/// `code = sum_i [response_i > 0] * 2^i`.
pub fn encode<T: Real>(
    strip: &FloatImage<T>,
    mask: &BitMask,
    bank: &FilterBank<T>,
    padding: PaddingStrategy,
) -> Result<CodeImage> {
    if !mask.same_dims(strip.width(), strip.height()) {
        return Err(Error::Dimensions(format!(
            "mask {}x{} does not match strip {}x{}",
            mask.width(),
            mask.height(),
            strip.width(),
            strip.height()
        )));
    }
    let stack = filter_responses(strip, bank, padding)?;
    Ok(codes_from_responses(&stack, mask.clone()))
}

pub fn codes_from_responses<T: Real>(stack: &ResponseStack<T>, mask: BitMask) -> CodeImage {
    let (w, h) = (mask.width(), mask.height());
    let mut codes = vec![0u32; w * h];
    for (i, r) in stack.responses.iter().enumerate() {
        for (c, &v) in codes.iter_mut().zip(r.data()) {
            if v > T::zero() {
                *c |= 1 << i;
            }
        }
    }
    CodeImage {
        bits: stack.bits(),
        width: w,
        height: h,
        codes,
        mask,
    }
}
