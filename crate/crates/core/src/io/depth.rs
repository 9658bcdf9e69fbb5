//! 16-bit binary PGM depth maps in millimeters (`0` = no reading).

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::DepthMap;

const MAXVAL: u32 = 65535;

/// Quantizes a depth map to millimeter samples. Values beyond 65.535 m
/// saturate; the second element counts how many did.
pub fn quantize(map: &DepthMap) -> (Vec<u16>, usize) {
    let mut clamped = 0;
    let samples = map
        .samples()
        .iter()
        .map(|&m| {
            let mm = (m * 1000.0).round();
            if mm > MAXVAL as f64 {
                clamped += 1;
                MAXVAL as u16
            } else {
                mm as u16
            }
        })
        .collect();
    (samples, clamped)
}

pub fn from_samples(width: u32, height: u32, samples: &[u16]) -> Result<DepthMap> {
    DepthMap::new(width, height, samples.iter().map(|&s| s as f64 / 1000.0).collect())
}

pub fn encode_samples(width: u32, height: u32, samples: &[u16]) -> Vec<u8> {
    let header = format!("P5\n{width} {height}\n{MAXVAL}\n");
    let mut out = Vec::with_capacity(header.len() + samples.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Encodes a map; returns the bytes and the number of clamped samples.
pub fn encode(map: &DepthMap) -> (Vec<u8>, usize) {
    let (samples, clamped) = quantize(map);
    (encode_samples(map.width(), map.height(), &samples), clamped)
}

struct Header {
    width: u32,
    height: u32,
    data_start: usize,
}

fn parse_header(data: &[u8], source: &str) -> Result<Header> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::binary(source, 0, "not a binary PGM (expected P5)"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (k, name) in ["width", "height", "maxval"].iter().enumerate() {
        // whitespace and comments
        let mut saw_space = false;
        loop {
            match data.get(pos) {
                Some(c) if c.is_ascii_whitespace() => {
                    saw_space = true;
                    pos += 1;
                }
                Some(b'#') => {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        if !saw_space {
            return Err(Error::binary(source, pos, format!("expected whitespace before {name}")));
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        let text = std::str::from_utf8(&data[start..pos]).unwrap_or("");
        fields[k] = text
            .parse()
            .map_err(|_| Error::binary(source, start, format!("cannot read {name}")))?;
    }
    match data.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::binary(source, pos, "expected one whitespace byte after maxval")),
    }
    let [width, height, maxval] = fields;
    if maxval != MAXVAL {
        return Err(Error::binary(
            source,
            0,
            format!("maxval must be {MAXVAL}, found {maxval}"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::binary(source, 0, "image dimensions must be positive"));
    }
    Ok(Header {
        width,
        height,
        data_start: pos,
    })
}

/// Decodes to raw millimeter samples.
pub fn decode_samples(data: &[u8], source: &str) -> Result<(u32, u32, Vec<u16>)> {
    let h = parse_header(data, source)?;
    let need = h.width as usize * h.height as usize * 2;
    let payload = &data[h.data_start..];
    if payload.len() < need {
        return Err(Error::binary(
            source,
            data.len(),
            format!("truncated pixel payload: {} of {need} bytes", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(Error::binary(
            source,
            h.data_start + need,
            "trailing bytes after pixel payload",
        ));
    }
    let samples = payload
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((h.width, h.height, samples))
}

pub fn decode(data: &[u8], source: &str) -> Result<DepthMap> {
    let (w, h, samples) = decode_samples(data, source)?;
    from_samples(w, h, &samples)
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    decode(&super::read_bytes(path)?, &path.display().to_string())
}

/// Writes a map; returns the number of samples clamped at 65.535 m.
pub fn write_depth(path: &Path, map: &DepthMap) -> Result<usize> {
    let (bytes, clamped) = encode(map);
    super::write_file(path, bytes)?;
    Ok(clamped)
}
