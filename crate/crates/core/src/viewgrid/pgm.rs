//! Binary PGM (P5, maxval 255) images and viewgrid montages.

use std::io::Write;
use std::path::Path;

use super::Viewgrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Separator pixel value between montage tiles.
pub const SEPARATOR: u8 = 255;

/// 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// `round(255 · clamp(v, 0, 1))`.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayImage { width, height, pixels: vec![fill; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
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
                return Err(Error::format("PGM", "truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::format("PGM", format!("expected P5 magic, got {}", fields[0])));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::format("PGM", format!("bad number {s}")));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(Error::format("PGM", format!("only maxval 255 supported, got {maxval}")));
        }
        pos += 1; // single whitespace after maxval
        let body = bytes.get(pos..pos + width * height).ok_or_else(|| Error::format("PGM", "truncated pixel data"))?;
        Ok(GrayImage { width, height, pixels: body.to_vec() })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_pgm())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_pgm(&std::fs::read(path)?)
    }
}

/// Tiles `N` rows × `M` columns of views with one-pixel separators;
/// several grids are stacked vertically with a separator row between them.
pub fn montage<T: Real>(grids: &[&Viewgrid<T>]) -> Result<GrayImage> {
    let first = grids.first().ok_or_else(|| Error::Empty("montage of zero viewgrids".into()))?;
    for g in grids {
        first.ensure_compatible(g)?;
    }
    let (h, w) = (first.height(), first.width());
    let (rows, cols) = (first.spec().num_elevations(), first.spec().num_azimuths());
    let block_h = rows * h + rows - 1;
    let width = cols * w + cols - 1;
    let height = grids.len() * block_h + grids.len() - 1;
    let mut img = GrayImage::new(width, height, SEPARATOR);
    for (gi, g) in grids.iter().enumerate() {
        let top = gi * (block_h + 1);
        for idx in g.spec().indices() {
            let cell = g.cell(idx);
            let (oy, ox) = (top + idx.elev_row * (h + 1), idx.azim_col * (w + 1));
            for y in 0..h {
                for x in 0..w {
                    img.set(ox + x, oy + y, quantize(cell[y * w + x].to_f64_lossy()));
                }
            }
        }
    }
    Ok(img)
}

/// Reads tile `(grid, view)` of a montage back into 8-bit pixels.
pub fn montage_tile(img: &GrayImage, grid: usize, idx: super::ViewIndex, rows: usize, h: usize, w: usize) -> Vec<u8> {
    let block_h = rows * h + rows - 1;
    let (oy, ox) = (grid * (block_h + 1) + idx.elev_row * (h + 1), idx.azim_col * (w + 1));
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            out.push(img.get(ox + x, oy + y));
        }
    }
    out
}
