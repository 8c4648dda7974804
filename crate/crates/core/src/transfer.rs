//! Contact-point transfer through dense feature correspondence.
//!
//! The source contact is sampled bilinearly from the source feature grid and
//! matched by cosine similarity against every target cell. Pixel ↔ grid
//! mapping uses cell centers in both directions:
//!
//! ```text
//! grid_x  = (u + 0.5) · w / width  − 0.5
//! pixel_u = (col + 0.5) · width / w − 0.5
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelPoint;
use crate::pointing::CropRect;

/// `h × w` grid of `d`-dimensional features extracted from an image of
/// `image_width × image_height` pixels. Stored row-major, channel-last.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    h: usize,
    w: usize,
    d: usize,
    data: Vec<f32>,
    image_width: u32,
    image_height: u32,
}

impl FeatureMap {
    pub fn new(
        h: usize,
        w: usize,
        d: usize,
        data: Vec<f32>,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(Error::InvalidFeatureMap(format!("empty shape {h}x{w}x{d}")));
        }
        if image_width == 0 || image_height == 0 {
            return Err(Error::InvalidFeatureMap("image dimensions must be positive".into()));
        }
        if data.len() != h * w * d {
            return Err(Error::InvalidFeatureMap(format!(
                "{} values for shape {h}x{w}x{d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatureMap("non-finite value".into()));
        }
        let map = FeatureMap {
            h,
            w,
            d,
            data,
            image_width,
            image_height,
        };
        if (0..h * w).all(|i| map.cell_norm(i) == 0.0) {
            return Err(Error::InvalidFeatureMap("every cell is zero".into()));
        }
        Ok(map)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn image_dims(&self) -> (u32, u32) {
        (self.image_width, self.image_height)
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.w + col) * self.d;
        &self.data[start..start + self.d]
    }

    fn cell_norm(&self, idx: usize) -> f64 {
        let s = &self.data[idx * self.d..(idx + 1) * self.d];
        s.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
    }

    /// Continuous grid coordinates `(x, y)` of an image pixel.
    pub fn pixel_to_grid(&self, p: PixelPoint) -> (f64, f64) {
        (
            (p.u + 0.5) * self.w as f64 / self.image_width as f64 - 0.5,
            (p.v + 0.5) * self.h as f64 / self.image_height as f64 - 0.5,
        )
    }

    /// Image pixel at the center of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> PixelPoint {
        PixelPoint::new(
            (col as f64 + 0.5) * self.image_width as f64 / self.w as f64 - 0.5,
            (row as f64 + 0.5) * self.image_height as f64 / self.h as f64 - 0.5,
        )
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: f32) -> Result<FeatureMap> {
        FeatureMap::new(
            self.h,
            self.w,
            self.d,
            self.data.iter().map(|v| v * s).collect(),
            self.image_width,
            self.image_height,
        )
    }
}

/// Bilinear feature lookup at an image pixel, clamped at the grid border.
pub fn sample_feature(map: &FeatureMap, pixel: PixelPoint) -> Result<Vec<f64>> {
    let (width, height) = map.image_dims();
    if !pixel.inside(width, height) {
        return Err(Error::OutOfBounds {
            u: pixel.u,
            v: pixel.v,
            width,
            height,
        });
    }
    let (gx, gy) = map.pixel_to_grid(pixel);
    let gx = gx.clamp(0.0, (map.w - 1) as f64);
    let gy = gy.clamp(0.0, (map.h - 1) as f64);
    let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(map.w - 1), (y0 + 1).min(map.h - 1));
    let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
    let corners = [
        (y0, x0, (1.0 - fx) * (1.0 - fy)),
        (y0, x1, fx * (1.0 - fy)),
        (y1, x0, (1.0 - fx) * fy),
        (y1, x1, fx * fy),
    ];
    let mut out = vec![0.0; map.d];
    for (row, col, wgt) in corners {
        if wgt == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(map.cell(row, col)) {
            *o += wgt * v as f64;
        }
    }
    Ok(out)
}

/// Restricts which target cells may match; a cell qualifies when its center
/// pixel lies inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SearchWindow {
    Radius { center: PixelPoint, radius: f64 },
    Rect(CropRect),
}

impl SearchWindow {
    fn admits(&self, p: PixelPoint) -> bool {
        match *self {
            SearchWindow::Radius { center, radius } => center.distance(p) <= radius,
            SearchWindow::Rect(r) => r.contains(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    /// Center of the matched cell in target image pixels.
    pub target_pixel: PixelPoint,
    pub similarity: f64,
    /// `(row, col)` of the matched cell.
    pub target_cell: (usize, usize),
}

/// Transfers `c_src` from the source map onto the best-matching target cell.
///
/// Zero-norm target cells never match. Ties keep the first cell in
/// row-major order.
pub fn transfer_contact(
    src: &FeatureMap,
    c_src: PixelPoint,
    tgt: &FeatureMap,
    window: Option<SearchWindow>,
) -> Result<Correspondence> {
    if src.d != tgt.d {
        return Err(Error::ChannelMismatch {
            src: src.d,
            tgt: tgt.d,
        });
    }
    let query = sample_feature(src, c_src)?;
    let qn = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    if qn < 1e-12 {
        return Err(Error::ZeroQueryFeature);
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for row in 0..tgt.h {
        for col in 0..tgt.w {
            if let Some(win) = &window {
                if !win.admits(tgt.cell_center(row, col)) {
                    continue;
                }
            }
            let cell = tgt.cell(row, col);
            let (mut dot, mut cn) = (0.0, 0.0);
            for (q, &c) in query.iter().zip(cell) {
                let c = c as f64;
                dot += q * c;
                cn += c * c;
            }
            if cn == 0.0 {
                continue;
            }
            let sim = (dot / (qn * cn.sqrt())).clamp(-1.0, 1.0);
            if best.map_or(true, |b| sim > b.0) {
                best = Some((sim, row, col));
            }
        }
    }
    let (similarity, row, col) = best.ok_or(Error::EmptySearchWindow)?;
    Ok(Correspondence {
        target_pixel: tgt.cell_center(row, col),
        similarity,
        target_cell: (row, col),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(h: usize, w: usize, d: usize, f: impl Fn(usize, usize, usize) -> f32) -> FeatureMap {
        let mut data = Vec::with_capacity(h * w * d);
        for r in 0..h {
            for c in 0..w {
                for k in 0..d {
                    data.push(f(r, c, k));
                }
            }
        }
        FeatureMap::new(h, w, d, data, (w * 8) as u32, (h * 8) as u32).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(FeatureMap::new(2, 2, 1, vec![0.0; 4], 4, 4).is_err());
        assert!(FeatureMap::new(2, 2, 1, vec![1.0; 3], 4, 4).is_err());
        assert!(FeatureMap::new(1, 1, 1, vec![f32::NAN], 4, 4).is_err());
    }

    #[test]
    fn sample_at_cell_center() {
        let m = map_from(4, 5, 3, |r, c, k| (r * 100 + c * 10 + k) as f32);
        let p = m.cell_center(2, 3);
        assert_eq!(p, PixelPoint::new(27.5, 19.5));
        let f = sample_feature(&m, p).unwrap();
        assert_eq!(f, vec![230.0, 231.0, 232.0]);
    }

    #[test]
    fn sample_midway() {
        let m = map_from(2, 2, 2, |r, c, k| (r * 7 + c * 3 + k) as f32 + 0.25);
        let a = m.cell(0, 0).to_vec();
        let b = m.cell(0, 1).to_vec();
        let mid = PixelPoint::new((m.cell_center(0, 0).u + m.cell_center(0, 1).u) / 2.0, 3.5);
        let f = sample_feature(&m, mid).unwrap();
        for i in 0..2 {
            assert!((f[i] - (a[i] as f64 + b[i] as f64) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_single_cell_everywhere() {
        let m = FeatureMap::new(1, 1, 2, vec![0.5, -2.0], 30, 20).unwrap();
        for p in [(-0.5, -0.5), (0.0, 0.0), (29.4, 19.4), (11.3, 7.9)] {
            let f = sample_feature(&m, PixelPoint::from([p.0, p.1])).unwrap();
            assert_eq!(f, vec![0.5, -2.0]);
        }
        assert!(matches!(
            sample_feature(&m, PixelPoint::new(30.0, 1.0)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    fn pseudo(r: usize, c: usize, k: usize) -> f32 {
        // deterministic, distinct per cell
        (((r * 31 + c * 17 + k * 7) % 23) as f32 - 11.0) / 7.0 + (r * c) as f32 * 0.01
    }

    #[test]
    fn identity_transfer() {
        let m = map_from(6, 7, 4, pseudo);
        let c = m.cell_center(3, 5);
        let corr = transfer_contact(&m, c, &m, None).unwrap();
        assert_eq!(corr.target_cell, (3, 5));
        assert_eq!(corr.target_pixel, c);
        assert!((corr.similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cyclic_shift() {
        let (h, w) = (6, 9);
        let src = map_from(h, w, 5, pseudo);
        let tgt = map_from(h, w, 5, |r, c, k| pseudo(r, (c + w - 3) % w, k));
        let corr = transfer_contact(&src, src.cell_center(2, 4), &tgt, None).unwrap();
        assert_eq!(corr.target_cell, (2, 7));
        assert!((corr.similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_mismatch_and_zero_query() {
        let a = map_from(2, 2, 3, pseudo);
        let b = map_from(2, 2, 4, pseudo);
        assert!(matches!(
            transfer_contact(&a, a.cell_center(0, 0), &b, None),
            Err(Error::ChannelMismatch { src: 3, tgt: 4 })
        ));
        let z = map_from(2, 2, 3, |r, c, _| if r == 1 && c == 1 { 1.0 } else { 0.0 });
        assert!(matches!(
            transfer_contact(&z, z.cell_center(0, 0), &a, None),
            Err(Error::ZeroQueryFeature)
        ));
    }

    #[test]
    fn window_restricts_search() {
        let m = map_from(6, 7, 4, pseudo);
        let c = m.cell_center(3, 5);
        let win = SearchWindow::Rect(CropRect { u0: 0, v0: 0, w: 24, h: 24 });
        let corr = transfer_contact(&m, c, &m, Some(win)).unwrap();
        assert!(corr.target_cell.0 < 3 && corr.target_cell.1 < 3);
        let tiny = SearchWindow::Radius { center: PixelPoint::new(-100.0, -100.0), radius: 1.0 };
        assert!(matches!(
            transfer_contact(&m, c, &m, Some(tiny)),
            Err(Error::EmptySearchWindow)
        ));
    }

    #[test]
    fn ties_go_to_first_row_major_cell() {
        let m = map_from(3, 3, 2, |_, _, k| if k == 0 { 1.0 } else { 0.0 });
        let corr = transfer_contact(&m, m.cell_center(2, 2), &m, None).unwrap();
        assert_eq!(corr.target_cell, (0, 0));
    }
}
