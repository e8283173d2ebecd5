//! File ingestion: binary PGM (P5, maxval 255) read/write and 8-bit
//! grayscale PNG read. Raw byte values are normalized to `[0, 1]` by
//! dividing by 255.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Image, ImageError};

/// Loads a scene or template image, sniffing the format from the file's
/// magic bytes: `P5` for binary PGM, the PNG signature for PNG.
pub fn load_image(path: &Path) -> Result<Image, ImageError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes)
    } else {
        Err(ImageError::UnsupportedFormat(format!(
            "{}: expected binary PGM (P5) or PNG",
            path.display()
        )))
    }
}

/// Reads a binary PGM (P5, 8-bit, maxval 255) file.
pub fn read_pgm(path: &Path) -> Result<Image, ImageError> {
    decode_pgm(&fs::read(path)?)
}

/// Reads an 8-bit grayscale PNG file.
pub fn read_png(path: &Path) -> Result<Image, ImageError> {
    decode_png(&fs::read(path)?)
}

/// Writes `img` as binary PGM (P5, maxval 255) with a single comment line
/// recording where the image came from. Intensities are quantized with
/// round-to-nearest; `provenance` must not contain a newline.
pub fn write_pgm(img: &Image, path: &Path, provenance: &str) -> Result<(), ImageError> {
    assert!(
        !provenance.contains('\n') && !provenance.contains('\r'),
        "provenance comment must be a single line"
    );
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write!(
        out,
        "P5\n# {}\n{} {}\n255\n",
        provenance,
        img.width(),
        img.height()
    )?;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

fn decode_pgm(bytes: &[u8]) -> Result<Image, ImageError> {
    let mut cursor = 0usize;
    let magic = read_token(bytes, &mut cursor)
        .ok_or_else(|| ImageError::MalformedFile("missing PGM magic number".into()))?;
    if magic != b"P5" {
        return Err(ImageError::UnsupportedFormat(format!(
            "PGM magic {:?}, only binary P5 is supported",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width = read_usize_token(bytes, &mut cursor, "width")?;
    let height = read_usize_token(bytes, &mut cursor, "height")?;
    let maxval = read_usize_token(bytes, &mut cursor, "maxval")?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!(
            "PGM maxval {maxval}, only 8-bit (255) is supported"
        )));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions);
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => {
            return Err(ImageError::MalformedFile(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let payload = &bytes[cursor..];
    let expected = width * height;
    if payload.len() != expected {
        return Err(ImageError::MalformedFile(format!(
            "header claims {width}x{height} ({expected} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let data = payload.iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(width, height, data)
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn read_token(bytes: &[u8], cursor: &mut usize) -> Option<Vec<u8>> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if *cursor > start {
        Some(bytes[start..*cursor].to_vec())
    } else {
        None
    }
}

fn read_usize_token(bytes: &[u8], cursor: &mut usize, field: &str) -> Result<usize, ImageError> {
    let token = read_token(bytes, cursor)
        .ok_or_else(|| ImageError::MalformedFile(format!("missing PGM {field}")))?;
    std::str::from_utf8(&token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            ImageError::MalformedFile(format!(
                "PGM {field} {:?} is not a number",
                String::from_utf8_lossy(&token)
            ))
        })
}

fn decode_png(bytes: &[u8]) -> Result<Image, ImageError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImageError::MalformedFile(format!("PNG: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(ImageError::UnsupportedFormat(format!(
            "PNG color type {:?}, only grayscale is supported",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedFormat(format!(
            "PNG bit depth {:?}, only 8-bit is supported",
            info.bit_depth
        )));
    }
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| ImageError::MalformedFile(format!("PNG: {e}")))?;
    let width = frame.width as usize;
    let height = frame.height as usize;
    let data = buf[..width * height]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Image::new(width, height, data)
}
