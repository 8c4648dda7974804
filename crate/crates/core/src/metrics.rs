//! Contact-point evaluation: distance-to-mask and binary PGM masks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelPoint;

/// Binary image mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Mask {
        Mask { width, height, data: vec![false; width as usize * height as usize] }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<bool>) -> Result<Mask> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch {
                expected: width as usize * height as usize,
                got: data.len(),
            });
        }
        Ok(Mask { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        col < self.width && row < self.height && self.data[(row * self.width + col) as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, value: bool) {
        let i = (row * self.width + col) as usize;
        self.data[i] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn diagonal(&self) -> f64 {
        let (w, h) = (self.width as f64, self.height as f64);
        (w * w + h * h).sqrt()
    }

    /// Binary PGM (P5, maxval 255); nonzero bytes are in the mask.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Mask> {
        let bad = |r: &str| Error::parse("pgm", r);
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
        }
        if fields[0] != "P5" {
            return Err(bad("expected P5 magic"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| bad("bad header number"));
        let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(bad("only 8-bit maxval supported"));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let n = w as usize * h as usize;
        let raster = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated raster"))?;
        Mask::from_data(w, h, raster.iter().map(|&b| b != 0).collect())
    }

    pub fn read(path: &Path) -> Result<Mask> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Mask::from_pgm(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Distance from `pred` to the closest mask pixel center, over the image
/// diagonal. Zero when `pred` falls on a mask pixel.
pub fn compute_dtm(pred: PixelPoint, mask: &Mask) -> Result<f64> {
    if !pred.u.is_finite() || !pred.v.is_finite() {
        return Err(Error::NonFinite("prediction"));
    }
    let mut best = f64::INFINITY;
    let (pc, pr) = (pred.u.round(), pred.v.round());
    if pc >= 0.0 && pr >= 0.0 && mask.get(pc as u32, pr as u32) {
        return Ok(0.0);
    }
    for row in 0..mask.height {
        for col in 0..mask.width {
            if mask.data[(row * mask.width + col) as usize] {
                let (du, dv) = (col as f64 - pred.u, row as f64 - pred.v);
                best = best.min(du * du + dv * dv);
            }
        }
    }
    if best.is_infinite() {
        return Err(Error::EmptyMask);
    }
    Ok(best.sqrt() / mask.diagonal())
}
