//! Independent scalar reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::HashSet;

use curvitopo::{BinaryVolume, Shape, Volume};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Copy, Clone, PartialEq)]
pub enum Pool {
    Min,
    Max,
    Avg,
}

/// Direct 3×3×3 window pooling with plain left-to-right accumulation.
pub fn naive_pool(v: &[f64], s: Shape, kind: Pool) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for z in 0..s.nz {
        for y in 0..s.ny {
            for x in 0..s.nx {
                let mut vals = Vec::new();
                for dz in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (xx, yy, zz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                            if xx >= 0
                                && yy >= 0
                                && zz >= 0
                                && (xx as usize) < s.nx
                                && (yy as usize) < s.ny
                                && (zz as usize) < s.nz
                            {
                                vals.push(
                                    v[xx as usize + s.nx * (yy as usize + s.ny * zz as usize)],
                                );
                            }
                        }
                    }
                }
                out[x + s.nx * (y + s.ny * z)] = match kind {
                    Pool::Min => vals.iter().cloned().fold(f64::INFINITY, f64::min),
                    Pool::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Pool::Avg => vals.iter().sum::<f64>() / vals.len() as f64,
                };
            }
        }
    }
    out
}

/// Scalar rendition of the iterated morphology.
pub fn naive_iterate(v: &[f64], s: Shape, k: usize, smooth: bool) -> Vec<f64> {
    let (erode, open) = if smooth {
        (Pool::Avg, [Pool::Avg, Pool::Avg])
    } else {
        (Pool::Min, [Pool::Min, Pool::Max])
    };
    let opening = |x: &[f64]| naive_pool(&naive_pool(x, s, open[0]), s, open[1]);
    let relu = |x: f64| if x > 0.0 { x } else { 0.0 };
    let mut img = v.to_vec();
    let o = opening(&img);
    let mut skel: Vec<f64> = img.iter().zip(&o).map(|(a, b)| relu(a - b)).collect();
    for _ in 0..k {
        img = naive_pool(&img, s, erode);
        let o = opening(&img);
        for i in 0..img.len() {
            let d = relu(img[i] - o[i]);
            skel[i] += relu(d - skel[i] * d);
        }
    }
    skel
}

/// Harmonic overlap score written out directly from its definition.
pub fn naive_score(p: &[f64], g: &[f64], s: Shape, k: usize, smooth: bool) -> f64 {
    let eps = 1e-6;
    let sp = naive_iterate(p, s, k, smooth);
    let sg = naive_iterate(g, s, k, smooth);
    let ratio = |skel: &[f64], vol: &[f64]| {
        let mass: f64 = skel.iter().sum();
        if mass < eps {
            0.0
        } else {
            skel.iter().zip(vol).map(|(a, b)| a * b).sum::<f64>() / (mass + eps)
        }
    };
    let (tp, ts) = (ratio(&sp, g), ratio(&sg, p));
    if tp + ts == 0.0 {
        0.0
    } else {
        2.0 * tp * ts / (tp + ts)
    }
}

pub fn naive_dice(p: &[f64], g: &[f64]) -> f64 {
    2.0 * p.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
        / (p.iter().sum::<f64>() + g.iter().sum::<f64>() + 1e-6)
}

/// Squared distance from each pixel to the nearest background pixel by
/// exhaustive search.
pub fn brute_edt(mask: &[bool], w: usize, h: usize) -> Vec<u64> {
    let mut out = vec![0; w * h];
    for r in 0..h {
        for c in 0..w {
            if !mask[r * w + c] {
                continue;
            }
            let mut best = u64::MAX;
            for rr in 0..h {
                for cc in 0..w {
                    if !mask[rr * w + cc] {
                        let d = (r.abs_diff(rr).pow(2) + c.abs_diff(cc).pow(2)) as u64;
                        best = best.min(d);
                    }
                }
            }
            out[r * w + c] = best;
        }
    }
    out
}

/// Adjusted Rand index by counting all voxel pairs.
pub fn pair_counting_ari(a: &[bool], b: &[bool]) -> f64 {
    let n = a.len();
    let (mut same_both, mut same_a, mut same_b, mut diff_both) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => same_both += 1.0,
                (true, false) => same_a += 1.0,
                (false, true) => same_b += 1.0,
                (false, false) => diff_both += 1.0,
            }
        }
    }
    if same_a == 0.0 && same_b == 0.0 {
        return 1.0;
    }
    2.0 * (same_both * diff_both - same_a * same_b)
        / ((same_both + same_a) * (same_a + diff_both)
            + (same_both + same_b) * (same_b + diff_both))
}

/// Euler characteristic of the closed-cube complex, enumerating cells in
/// doubled coordinates (odd coordinate = open extent along that axis).
pub fn cell_euler(b: &BinaryVolume) -> i64 {
    let s = b.shape();
    let mut cells = HashSet::new();
    for z in 0..s.nz {
        for y in 0..s.ny {
            for x in 0..s.nx {
                if b.get(x, y, z) {
                    for dz in 0..3 {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                cells.insert((2 * x + dx, 2 * y + dy, 2 * z + dz));
                            }
                        }
                    }
                }
            }
        }
    }
    cells
        .iter()
        .map(|&(x, y, z)| {
            if (x % 2 + y % 2 + z % 2) % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Dilation by an explicit search over all voxel pairs.
pub fn brute_dilate(b: &BinaryVolume, rho: f64) -> Vec<bool> {
    let s = b.shape();
    let fg: Vec<(usize, usize, usize)> = (0..s.len())
        .filter(|&i| b.bits()[i])
        .map(|i| s.coords(i))
        .collect();
    (0..s.len())
        .map(|i| {
            let (x, y, z) = s.coords(i);
            fg.iter().any(|&(a, bb, c)| {
                let d =
                    (x.abs_diff(a).pow(2) + y.abs_diff(bb).pow(2) + z.abs_diff(c).pow(2)) as f64;
                d <= rho * rho
            })
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Evenly spaced values in (0.05, 0.95) in random order: no two voxels tie.
pub fn spaced(s: Shape, seed: u64) -> Volume {
    let n = s.len();
    let mut vals: Vec<f64> = (0..n)
        .map(|i| 0.05 + 0.9 * (i as f64 + 0.5) / n as f64)
        .collect();
    vals.shuffle(&mut rng(seed));
    Volume::new(s, vals).unwrap()
}

pub fn random_mask(s: Shape, p: f64, seed: u64) -> BinaryVolume {
    let mut r = rng(seed);
    BinaryVolume::from_fn(s, |_, _, _| r.random::<f64>() < p)
}

pub fn ball(s: Shape, c: [f64; 3], r: f64) -> BinaryVolume {
    BinaryVolume::from_fn(s, |x, y, z| {
        (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2) < r * r
    })
}

pub fn union(a: &BinaryVolume, b: &BinaryVolume) -> BinaryVolume {
    let s = a.shape();
    BinaryVolume::from_fn(s, |x, y, z| a.get(x, y, z) || b.get(x, y, z))
}

pub fn minus(a: &BinaryVolume, b: &BinaryVolume) -> BinaryVolume {
    let s = a.shape();
    BinaryVolume::from_fn(s, |x, y, z| a.get(x, y, z) && !b.get(x, y, z))
}
