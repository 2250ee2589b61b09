//! Netpbm readers and writers: binary PPM (P6), binary PGM (P5) and
//! Portable FloatMap (Pf / PF).
//!
//! PFM stores scanlines bottom-to-top; the in-memory rasters here are
//! top-to-bottom, so both directions flip rows.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{DepthMap, RgbImage};

/// Header tokens parsed from the ASCII preamble.
struct Header<'a> {
    magic: &'a [u8],
    fields: Vec<usize>,
    body: &'a [u8],
}

fn parse_header<'a>(bytes: &'a [u8], numeric_fields: usize) -> Result<Header<'a>> {
    let mut pos = 0;
    let mut tokens: Vec<&[u8]> = Vec::with_capacity(numeric_fields + 1);
    while tokens.len() < numeric_fields + 1 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated header".into()));
        }
        tokens.push(&bytes[start..pos]);
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() {
        return Err(Error::Format("missing raster data".into()));
    }
    pos += 1;
    let fields = tokens[1..]
        .iter()
        .map(|t| {
            std::str::from_utf8(t)
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| {
                    Error::Format(format!("bad header field {:?}", String::from_utf8_lossy(t)))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Header {
        magic: tokens[0],
        fields,
        body: &bytes[pos..],
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::file(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

fn read_samples(body: &[u8], count: usize, maxval: usize) -> Result<Vec<u16>> {
    let wide = maxval > 255;
    let need = if wide { count * 2 } else { count };
    if body.len() < need {
        return Err(Error::Format(format!(
            "raster has {} bytes, expected {need}",
            body.len()
        )));
    }
    Ok(if wide {
        body[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        body[..need].iter().map(|&b| b as u16).collect()
    })
}

fn check_maxval(maxval: usize) -> Result<()> {
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    Ok(())
}

/// Decodes a binary PPM, scaling samples to [0, 1] by the header maxval.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let h = parse_header(bytes, 3)?;
    if h.magic != b"P6" {
        return Err(Error::Format("expected binary PPM (P6)".into()));
    }
    let (w, ht, maxval) = (h.fields[0], h.fields[1], h.fields[2]);
    check_maxval(maxval)?;
    let samples = read_samples(h.body, w * ht * 3, maxval)?;
    let scale = maxval as f64;
    RgbImage::new(w, ht, samples.iter().map(|&s| s as f64 / scale).collect())
}

/// Encodes an 8-bit binary PPM; values are clamped to [0, 1] and rounded.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|v| quantize(*v)));
    out
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Decodes a binary PGM into raw samples.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let h = parse_header(bytes, 3)?;
    if h.magic != b"P5" {
        return Err(Error::Format("expected binary PGM (P5)".into()));
    }
    let (w, ht, maxval) = (h.fields[0], h.fields[1], h.fields[2]);
    check_maxval(maxval)?;
    if w == 0 || ht == 0 {
        return Err(Error::Format("empty PGM".into()));
    }
    Ok((w, ht, read_samples(h.body, w * ht, maxval)?))
}

pub fn encode_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// Decodes a PFM. Colour files (PF) are reduced to their first channel.
pub fn decode_pfm(bytes: &[u8]) -> Result<DepthMap> {
    let (w, h, channels, values) = decode_pfm_raw(bytes)?;
    let values = values.chunks_exact(channels).map(|c| c[0] as f64).collect();
    DepthMap::new(w, h, values)
}

/// Returns (width, height, channels, top-to-bottom samples).
pub fn decode_pfm_raw(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f32>)> {
    // The scale token is a float, so parse the header by lines.
    let mut lines = Vec::with_capacity(3);
    let mut pos = 0;
    while lines.len() < 3 {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("truncated PFM header".into()))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| Error::Format("non-ASCII PFM header".into()))?
            .trim();
        pos += end + 1;
        if !line.is_empty() && !line.starts_with('#') {
            lines.push(line.to_owned());
        }
    }
    let channels = match lines[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(Error::Format(format!("unknown PFM magic '{other}'"))),
    };
    let dims: Vec<usize> = lines[1]
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("bad PFM size line '{}'", lines[1])))?;
    let [w, h] = dims[..] else {
        return Err(Error::Format(format!("bad PFM size line '{}'", lines[1])));
    };
    let scale: f64 = lines[2]
        .parse()
        .map_err(|_| Error::Format(format!("bad PFM scale '{}'", lines[2])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Format("PFM scale must be non-zero".into()));
    }
    let little = scale < 0.0;
    let count = w * h * channels;
    let body = &bytes[pos..];
    if body.len() < count * 4 {
        return Err(Error::Format(format!(
            "PFM raster has {} bytes, expected {}",
            body.len(),
            count * 4
        )));
    }
    let raw: Vec<f32> = body[..count * 4]
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let row = w * channels;
    let mut values = Vec::with_capacity(count);
    for y in (0..h).rev() {
        values.extend_from_slice(&raw[y * row..(y + 1) * row]);
    }
    Ok((w, h, channels, values))
}

/// Encodes a little-endian grayscale PFM (scale −1.0).
pub fn encode_pfm_gray(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(values.len() * 4);
    for y in (0..height).rev() {
        for v in &values[y * width..(y + 1) * width] {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    encode_pfm_gray(depth.width, depth.height, &depth.values)
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    decode_ppm(&read_file(path)?).map_err(|e| annotate(path, e))
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    write_file(path, &encode_ppm(img))
}

/// Reads a PGM as a membership mask: non-zero samples are members.
pub fn read_pgm_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let (w, h, samples) = decode_pgm(&read_file(path)?).map_err(|e| annotate(path, e))?;
    Ok((w, h, samples.into_iter().map(|s| s != 0).collect()))
}

pub fn write_pgm_mask(path: &Path, width: usize, height: usize, member: &[bool]) -> Result<()> {
    let samples: Vec<u8> = member.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_file(path, &encode_pgm(width, height, &samples))
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    decode_pfm(&read_file(path)?).map_err(|e| annotate(path, e))
}

pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    write_file(path, &encode_pfm(depth))
}

fn annotate(path: &Path, err: Error) -> Error {
    match err {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        Error::Shape(msg) => Error::Shape(format!("{}: {msg}", path.display())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pfm_header_and_row_order() {
        let d = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_pfm(&d);
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        // First stored row is the bottom one.
        let first = f32::from_le_bytes(bytes[header.len()..header.len() + 4].try_into().unwrap());
        assert_eq!(first, 3.0);
        assert_eq!(decode_pfm(&bytes).unwrap(), d);
    }

    #[test]
    fn pfm_big_endian_and_color() {
        let mut bytes = b"PF\n1 1\n1.0\n".to_vec();
        for v in [2.5f32, 7.0, 9.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let d = decode_pfm(&bytes).unwrap();
        assert_eq!(d.values, vec![2.5]);
    }

    #[test]
    fn ppm_with_comment() {
        let mut bytes = b"P6\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 51, 255]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(img.pixel(1, 0), [0.0, 0.2, 1.0]);
        assert_eq!(
            encode_ppm(&img)[b"P6\n2 1\n255\n".len()..],
            [255, 0, 0, 0, 51, 255]
        );
    }

    #[test]
    fn sixteen_bit_pgm() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 1, 0]);
        let (w, h, s) = decode_pgm(&bytes).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(s, vec![0, 256]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode_ppm(b"P5\n1 1\n255\n\0").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\0\0\0").is_err());
        assert!(decode_pgm(b"P5\n").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n-1.0\n\0\0\0\0").is_err());
        assert!(decode_pfm(b"PX\n1 1\n-1.0\n\0\0\0\0").is_err());
        assert!(decode_pfm(b"Pf\n1 1\n0\n\0\0\0\0").is_err());
    }

    proptest! {
        #[test]
        fn pfm_round_trip_is_f32_exact(
            w in 1usize..8,
            h in 1usize..8,
            seed in proptest::collection::vec(0.0f64..100.0, 64),
        ) {
            let values: Vec<f64> = (0..w * h).map(|i| seed[i % seed.len()]).collect();
            let d = DepthMap::new(w, h, values.clone()).unwrap();
            let back = decode_pfm(&encode_pfm(&d)).unwrap();
            for (a, b) in values.iter().zip(&back.values) {
                prop_assert_eq!(*a as f32 as f64, *b);
            }
        }

        #[test]
        fn ppm_round_trip_on_8bit_grid(samples in proptest::collection::vec(any::<u8>(), 12)) {
            let img = RgbImage::new(2, 2, samples.iter().map(|&s| s as f64 / 255.0).collect()).unwrap();
            let back = decode_ppm(&encode_ppm(&img)).unwrap();
            prop_assert_eq!(img, back);
        }
    }
}
