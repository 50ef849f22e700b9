//! Canny edge detection on a single slice.

use serde::{Deserialize, Serialize};

use super::image::Image;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    /// Gaussian standard deviation in pixels; the kernel is truncated at 4σ.
    pub sigma: f64,
    /// Weak threshold as a fraction of the maximum gradient magnitude.
    pub low: f64,
    /// Strong threshold as a fraction of the maximum gradient magnitude.
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 1.0,
            low: 0.1,
            high: 0.2,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "canny sigma {} must be > 0",
                self.sigma
            )));
        }
        if !(0.0 < self.low && self.low < self.high && self.high <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "canny thresholds need 0 < low < high <= 1, got {} / {}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Separable blur with edge replication.
fn blur(img: &Image<f64>, sigma: f64) -> Image<f64> {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let horizontal = Image::from_fn(img.width(), img.height(), |r, c| {
        k.iter()
            .enumerate()
            .map(|(t, wt)| {
                let cc = (c as isize + t as isize - radius).clamp(0, w - 1) as usize;
                wt * img.get(r, cc)
            })
            .sum::<f64>()
    });
    Image::from_fn(img.width(), img.height(), |r, c| {
        k.iter()
            .enumerate()
            .map(|(t, wt)| {
                let rr = (r as isize + t as isize - radius).clamp(0, h - 1) as usize;
                wt * horizontal.get(rr, c)
            })
            .sum()
    })
}

/// Sobel derivatives `(d/dcol, d/drow)` with edge replication.
pub(crate) fn sobel(img: &Image<f64>) -> (Image<f64>, Image<f64>) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let px = |r: isize, c: isize| img.get(r.clamp(0, h - 1) as usize, c.clamp(0, w - 1) as usize);
    let gx = Image::from_fn(img.width(), img.height(), |r, c| {
        let (r, c) = (r as isize, c as isize);
        (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1))
            - (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1))
    });
    let gy = Image::from_fn(img.width(), img.height(), |r, c| {
        let (r, c) = (r as isize, c as isize);
        (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1))
            - (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1))
    });
    (gx, gy)
}

/// Neighbour offsets `(dr, dc)` across the edge for a gradient direction,
/// quantized to 0°, 45°, 90° and 135°.
fn nms_offsets(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (0, 1)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (1, 0)
    } else {
        (1, -1)
    }
}

/// Binary edge map: Gaussian blur, Sobel gradients, non-maximum suppression
/// and 8-connected hysteresis.
///
/// Along the gradient a pixel survives suppression when it is `>=` the
/// neighbour behind it and `>` the neighbour ahead, so a symmetric plateau of
/// two equal responses keeps exactly one pixel.
pub fn canny2d(img: &Image<f64>, params: CannyParams) -> Result<Image<bool>> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let smooth = blur(img, params.sigma);
    let (gx, gy) = sobel(&smooth);
    let mag = Image::from_fn(w, h, |r, c| gx.get(r, c).hypot(gy.get(r, c)));
    let gmax = mag.data().iter().copied().fold(0.0, f64::max);
    if gmax <= 0.0 {
        return Ok(Image::filled(w, h, false));
    }

    let mut thin = Image::filled(w, h, 0.0);
    for r in 0..h {
        for c in 0..w {
            let m = mag.get(r, c);
            if m <= 0.0 {
                continue;
            }
            let (dr, dc) = nms_offsets(gx.get(r, c), gy.get(r, c));
            let (ri, ci) = (r as isize, c as isize);
            let behind = mag.at(ri - dr, ci - dc).unwrap_or(0.0);
            let ahead = mag.at(ri + dr, ci + dc).unwrap_or(0.0);
            if m >= behind && m > ahead {
                thin.set(r, c, m);
            }
        }
    }

    let strong = params.high * gmax;
    let weak = params.low * gmax;
    let mut edges = Image::filled(w, h, false);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if thin.get(r, c) >= strong {
                edges.set(r, c, true);
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if let Some(m) = thin.at(rr, cc) {
                    let (rr, cc) = (rr as usize, cc as usize);
                    if m >= weak && m > 0.0 && !edges.get(rr, cc) {
                        edges.set(rr, cc, true);
                        stack.push((rr, cc));
                    }
                }
            }
        }
    }
    Ok(edges)
}
