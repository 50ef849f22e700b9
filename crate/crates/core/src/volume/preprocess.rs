//! Intensity preprocessing: percentile clipping, cubic median filter, min-max scaling.

use rayon::prelude::*;

use super::Volume;
use crate::error::{Error, Result};

/// Fraction clipped from each tail by default (0.01 %).
pub const DEFAULT_CLIP_FRACTION: f64 = 0.0001;

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub volume: Volume,
    /// The clipped volume was constant; `volume` is all zeros.
    pub degenerate: bool,
}

/// Linear-interpolation quantile of `sorted` (ascending) at `q ∈ [0, 1]`,
/// matching the default method of the common array libraries.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Clips both tails at `clip_fraction`, median-filters with a cube of side
/// `2 * median_radius + 1` and rescales to `[0, 1]`.
pub fn preprocess(v: &Volume, clip_fraction: f64, median_radius: usize) -> Result<Preprocessed> {
    if !(0.0..0.5).contains(&clip_fraction) {
        return Err(Error::InvalidParameter(format!(
            "clip fraction {clip_fraction} outside [0, 0.5)"
        )));
    }
    let mut sorted = v.data().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let lo = quantile(&sorted, clip_fraction);
    let hi = quantile(&sorted, 1.0 - clip_fraction);
    let clipped = Volume::from_parts(
        v.shape(),
        v.data().iter().map(|&x| x.clamp(lo, hi)).collect(),
    );
    if hi <= lo {
        log::warn!("preprocess: clipped volume is constant, returning zeros");
        return Ok(Preprocessed {
            volume: Volume::zeros(v.shape()).with_voxel_size(v.voxel_size()),
            degenerate: true,
        });
    }
    let filtered = if median_radius > 0 {
        median_filter(&clipped, median_radius)
    } else {
        clipped
    };
    let (volume, degenerate) = filtered.normalized();
    if degenerate {
        log::warn!("preprocess: filtered volume is constant, returning zeros");
    }
    Ok(Preprocessed {
        volume: volume.with_voxel_size(v.voxel_size()),
        degenerate,
    })
}

/// Cubic median filter; windows are truncated at the volume boundary and the
/// median of an even count is the mean of the two middle values.
pub fn median_filter(v: &Volume, radius: usize) -> Volume {
    let s = v.shape();
    let r = radius as isize;
    let data = v.data();
    let out: Vec<f64> = (0..s.len())
        .into_par_iter()
        .map_init(Vec::new, |window, i| {
            let (x, y, z) = s.coords(i);
            window.clear();
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if let Some(j) = s.offset(x, y, z, (dx, dy, dz)) {
                            window.push(data[j]);
                        }
                    }
                }
            }
            window.sort_unstable_by(f64::total_cmp);
            let n = window.len();
            if n % 2 == 1 {
                window[n / 2]
            } else {
                0.5 * (window[n / 2 - 1] + window[n / 2])
            }
        })
        .collect();
    Volume::from_parts(s, out).with_voxel_size(v.voxel_size())
}
