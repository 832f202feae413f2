//! Binary PGM (P5) read/write and 8-bit grayscale PNG ingestion.

use std::fs;
use std::io::{Cursor, Write};
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Loads a binary PGM (P5, maxval <= 255) or an 8-bit grayscale PNG.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        read_pgm(&bytes).map_err(|reason| Error::image(path, reason))
    } else if bytes.starts_with(PNG_SIGNATURE) {
        read_png(&bytes).map_err(|reason| Error::image(path, reason))
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::image(
            path,
            format!("unsupported netpbm variant P{}", bytes[1] as char),
        ))
    } else {
        Err(Error::image(path, "not a PGM (P5) or PNG file"))
    }
}

pub fn save_gray(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    save_gray_with_comments(image, path, &[])
}

/// Writes a P5 file with `# ...` comment lines after the magic number.
pub fn save_gray_with_comments(image: &GrayImage, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(image.data().len() + 64);
    write_pgm(&mut buf, image, comments).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_pgm<W: Write>(out: &mut W, image: &GrayImage, comments: &[String]) -> std::io::Result<()> {
    write_header(out, image.width(), image.height(), 255, comments)?;
    out.write_all(image.data())
}

/// Writes a 16-bit P5 file (maxval 65535, big-endian samples).
pub fn save_gray16(
    width: usize,
    height: usize,
    data: &[u16],
    path: impl AsRef<Path>,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if width * height != data.len() || width == 0 || height == 0 {
        return Err(Error::Dimensions(format!(
            "{width}x{height} image needs {} samples, got {}",
            width * height,
            data.len()
        )));
    }
    let mut buf = Vec::with_capacity(2 * data.len() + 64);
    write_header(&mut buf, width, height, 65535, comments).map_err(|e| Error::io(path, e))?;
    for v in data {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_header<W: Write>(
    out: &mut W,
    width: usize,
    height: usize,
    maxval: u32,
    comments: &[String],
) -> std::io::Result<()> {
    out.write_all(b"P5\n")?;
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    write!(out, "{width} {height}\n{maxval}\n")
}

/// Parses an in-memory P5 image. Errors are plain reasons; `load_gray`
/// attaches the path.
pub fn read_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if !bytes.starts_with(b"P5") {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid maxval {maxval}"));
    }
    if maxval > 255 {
        return Err(format!("unsupported bit depth: maxval {maxval} (16-bit samples)"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("malformed header: no separator before pixel data".into()),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format!("dimensions {width}x{height} overflow"))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| format!("truncated pixel data: expected {n} bytes, found {}", bytes.len() - pos))?;
    GrayImage::new(width, height, raster.to_vec()).map_err(|e| e.to_string())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> std::result::Result<usize, String> {
    // skip whitespace and comments
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(format!("malformed header: missing {what}")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(format!("malformed header: expected {what}"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("malformed header: {what} out of range"))
}

fn read_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| format!("png: {e}"))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(format!("unsupported PNG color type {:?}", info.color_type));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(format!("unsupported bit depth {:?}", info.bit_depth));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "png: image too large".to_string())?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| format!("png: {e}"))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    if frame.line_size != w {
        return Err(format!("unexpected PNG line size {}", frame.line_size));
    }
    buf.truncate(w * h);
    GrayImage::new(w, h, buf).map_err(|e| e.to_string())
}
