//! Binary PGM and raw planar YUV 4:2:0 files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plane::{chroma_dims, ChromaFormat, Frame, Plane};

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Param(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res.map_err(Error::from)
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn pgm_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = pgm_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad number in PGM header".into()))
}

/// Parses a binary (`P5`) 8-bit PGM.
pub fn decode_pgm(bytes: &[u8]) -> Result<Plane> {
    let mut pos = 0;
    if pgm_token(bytes, &mut pos)? != b"P5" {
        return Err(Error::Format("not a binary PGM (P5)".into()));
    }
    let w = pgm_number(bytes, &mut pos)?;
    let h = pgm_number(bytes, &mut pos)?;
    let maxval = pgm_number(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval {maxval}, only 255 is supported")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = w
        .checked_mul(h)
        .ok_or_else(|| Error::Format("PGM dimensions overflow".into()))?;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < need {
        return Err(Error::Format(format!(
            "PGM raster is {} bytes, expected {need}",
            raster.len()
        )));
    }
    Plane::new(w, h, raster[..need].to_vec())
}

pub fn encode_pgm(plane: &Plane) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", plane.width(), plane.height()).into_bytes();
    out.extend_from_slice(plane.data());
    out
}

pub fn read_pgm(path: &Path) -> Result<Plane> {
    decode_pgm(&fs::read(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn write_pgm(path: &Path, plane: &Plane) -> Result<()> {
    write_atomic(path, &encode_pgm(plane))
}

/// Bytes of one 4:2:0 frame.
pub fn yuv420_frame_bytes(width: usize, height: usize) -> usize {
    let (cw, ch) = chroma_dims(width, height);
    width * height + 2 * cw * ch
}

/// Splits a raw planar 4:2:0 stream into frames; the count follows from the length.
pub fn decode_yuv420(bytes: &[u8], width: usize, height: usize) -> Result<Vec<Frame>> {
    let fb = yuv420_frame_bytes(width, height);
    if fb == 0 {
        return Err(Error::EmptyPlane);
    }
    if bytes.is_empty() || !bytes.len().is_multiple_of(fb) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {width}x{height} 4:2:0 frames ({fb} bytes each)",
            bytes.len()
        )));
    }
    let (cw, ch) = chroma_dims(width, height);
    bytes
        .chunks_exact(fb)
        .map(|f| {
            let (y, rest) = f.split_at(width * height);
            let (u, v) = rest.split_at(cw * ch);
            Frame::yuv420(
                Plane::new(width, height, y.to_vec())?,
                Plane::new(cw, ch, u.to_vec())?,
                Plane::new(cw, ch, v.to_vec())?,
            )
        })
        .collect()
}

pub fn encode_yuv420(frames: &[Frame]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for f in frames {
        if f.chroma_format != ChromaFormat::Yuv420 {
            return Err(Error::Format("frame has no chroma planes".into()));
        }
        out.extend_from_slice(f.y.data());
        out.extend_from_slice(f.u.data());
        out.extend_from_slice(f.v.data());
    }
    Ok(out)
}

pub fn read_yuv420(path: &Path, width: usize, height: usize) -> Result<Vec<Frame>> {
    decode_yuv420(&fs::read(path)?, width, height).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn write_yuv420(path: &Path, frames: &[Frame]) -> Result<()> {
    write_atomic(path, &encode_yuv420(frames)?)
}
