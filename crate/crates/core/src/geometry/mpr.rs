//! Iteration-count estimate from the maximal inscribed radius of random slices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canny::{canny2d, CannyParams};
use super::image::{Image, Slice2D};
use super::medial::medial_axis2d;
use crate::error::{Error, Result};
use crate::numeric::canonical_sum;
use crate::volume::{Axis, Volume};

/// How each slice is binarized before measuring radii.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binarization {
    Fixed(f64),
    /// Otsu threshold computed once over the whole volume.
    Otsu,
}

impl Default for Binarization {
    fn default() -> Self {
        Binarization::Fixed(0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MprConfig {
    pub n: usize,
    pub seed: u64,
    pub binarization: Binarization,
    /// Axes whose planes form the sampling pool.
    pub axes: Vec<Axis>,
    pub canny: CannyParams,
}

impl Default for MprConfig {
    fn default() -> Self {
        MprConfig {
            n: 4,
            seed: 0,
            binarization: Binarization::default(),
            axes: Axis::ALL.to_vec(),
            canny: CannyParams::default(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SliceId {
    pub axis: Axis,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MprResult {
    pub k: usize,
    /// Maximal radius per sampled slice, `None` when the slice is empty.
    pub per_slice_maxdist: Vec<Option<f64>>,
    pub slices_used: Vec<SliceId>,
    pub seed: u64,
    /// Edge pixel count of each slice (boundary diagnostic).
    pub canny_edge_pixels: Vec<usize>,
}

/// Draws `n` distinct planes uniformly from all three axes.
pub fn extract_slices(v: &Volume, n: usize, seed: u64) -> Result<Vec<Slice2D>> {
    extract_slices_along(v, n, seed, &Axis::ALL)
}

pub fn extract_slices_along(
    v: &Volume,
    n: usize,
    seed: u64,
    axes: &[Axis],
) -> Result<Vec<Slice2D>> {
    Ok(sample_planes(v, n, seed, axes)?
        .into_iter()
        .map(|id| Slice2D::extract(v, id.axis, id.index))
        .collect())
}

fn sample_planes(v: &Volume, n: usize, seed: u64, axes: &[Axis]) -> Result<Vec<SliceId>> {
    let mut axes = axes.to_vec();
    axes.sort();
    axes.dedup();
    let dims = v.shape().dims();
    let pool: Vec<SliceId> = axes
        .iter()
        .flat_map(|&axis| (0..dims[axis.index()]).map(move |index| SliceId { axis, index }))
        .collect();
    if n == 0 || n > pool.len() {
        return Err(Error::NotEnoughPlanes {
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Otsu threshold over 256 bins of `[0, 1]`; the returned value is the lower
/// edge of the first foreground bin.
pub fn otsu_threshold(v: &Volume) -> f64 {
    const BINS: usize = 256;
    let mut hist = [0u64; BINS];
    for &x in v.data() {
        hist[((x.clamp(0.0, 1.0) * BINS as f64) as usize).min(BINS - 1)] += 1;
    }
    let total = v.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as f64 * h as f64)
        .sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, 0);
    for (t, &h) in hist.iter().enumerate().take(BINS - 1) {
        w0 += h as f64;
        sum0 += t as f64 * h as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_t = t;
        }
    }
    (best_t + 1) as f64 / BINS as f64
}

/// Largest inscribed radius of the foreground of one binarized slice.
/// The slice is framed by one background pixel so structures touching the
/// slice border are measured against it.
pub fn slice_max_radius(fg: &Image<bool>) -> Result<Option<f64>> {
    if fg.count() == 0 {
        return Ok(None);
    }
    let (_, radius) = medial_axis2d(&fg.padded(1, false))?;
    Ok(Some(radius.data().iter().copied().fold(0.0, f64::max)))
}

/// `k = int(2 * mean(2 * MaxDist))` over the sampled slices; empty slices
/// contribute zero.
pub fn mpr(v: &Volume, config: &MprConfig) -> Result<MprResult> {
    config.canny.validate()?;
    let threshold = match config.binarization {
        Binarization::Fixed(t) => t,
        Binarization::Otsu => otsu_threshold(v),
    };
    let planes = sample_planes(v, config.n, config.seed, &config.axes)?;
    let measured: Vec<(Option<f64>, usize)> = planes
        .par_iter()
        .map(|id| {
            let slice = Slice2D::extract(v, id.axis, id.index);
            let edges = canny2d(&slice.image, config.canny)?.count();
            let fg = slice.image.map(|x| x >= threshold);
            Ok((slice_max_radius(&fg)?, edges))
        })
        .collect::<Result<_>>()?;

    if measured.iter().all(|(r, _)| r.is_none()) {
        return Err(Error::AllSlicesEmpty);
    }
    let doubled: Vec<f64> = measured
        .iter()
        .map(|(r, _)| 2.0 * r.unwrap_or(0.0))
        .collect();
    let d = canonical_sum(&doubled);
    let k = (2.0 * (d / planes.len() as f64)).trunc() as usize;
    let (per_slice_maxdist, canny_edge_pixels) = measured.into_iter().unzip();
    Ok(MprResult {
        k,
        per_slice_maxdist,
        slices_used: planes,
        seed: config.seed,
        canny_edge_pixels,
    })
}
