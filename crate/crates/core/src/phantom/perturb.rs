use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::label_components;
use crate::volume::{BinaryVolume, Shape, Volume};

/// Controlled topology edits on binary volumes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Perturbation {
    /// Clears one connected piece of a slab `len` voxels thick, cut across
    /// the longest extent of the largest component.
    BreakGap { len: usize },
    /// Joins the two largest components with a bar between their closest
    /// voxels.
    MergeBridge,
    /// `n` steps of 6-neighbourhood dilation.
    Dilate { n: usize },
    /// `n` steps of 6-neighbourhood erosion.
    Erode { n: usize },
}

const FACES: [(isize, isize, isize); 6] = [
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
];

fn binary(v: &Volume) -> Result<BinaryVolume> {
    if let Some(index) = v.data().iter().position(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbations need a binary volume; voxel {index} is {}",
            v.data()[index]
        )));
    }
    Ok(v.threshold(0.5))
}

fn step(b: &BinaryVolume, grow: bool) -> BinaryVolume {
    let s = b.shape();
    let bits = b.bits();
    let mut out = b.clone();
    for i in 0..s.len() {
        let (x, y, z) = s.coords(i);
        let mut hit = FACES
            .iter()
            .filter_map(|&d| s.offset(x, y, z, d))
            .map(|j| bits[j]);
        out.bits_mut()[i] = if grow {
            bits[i] || hit.any(|v| v)
        } else {
            bits[i] && hit.all(|v| v)
        };
    }
    out
}

/// Component sizes and the voxel list of each component, largest first
/// (ties by label order).
fn components_by_size(b: &BinaryVolume) -> Vec<Vec<usize>> {
    let (n, labels) = label_components(b);
    let mut comps = vec![Vec::new(); n];
    for (i, &l) in labels.iter().enumerate() {
        if l != u32::MAX {
            comps[l as usize].push(i);
        }
    }
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    comps
}

fn break_gap(b: &BinaryVolume, len: usize, seed: u64) -> Result<BinaryVolume> {
    if len == 0 {
        return Err(Error::InvalidParameter(
            "gap length must be positive".into(),
        ));
    }
    let s = b.shape();
    let comps = components_by_size(b);
    let Some(target) = comps.first() else {
        return Err(Error::NotApplicable(
            "break_gap needs a foreground component".into(),
        ));
    };
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for &i in target {
        let (x, y, z) = s.coords(i);
        for (a, c) in [x, y, z].into_iter().enumerate() {
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    let axis = (0..3)
        .max_by_key(|&a| (hi[a] - lo[a], std::cmp::Reverse(a)))
        .expect("three axes");
    let extent = hi[axis] - lo[axis] + 1;
    if extent < len + 2 {
        return Err(Error::NotApplicable(format!(
            "component spans {extent} voxels, too short for a gap of {len}"
        )));
    }
    // gap start drawn from the middle third, kept clear of both ends
    let first = (lo[axis] + extent / 3).max(lo[axis] + 1);
    let last = (lo[axis] + 2 * extent / 3).min(hi[axis] - len).max(first);
    let start = ChaCha8Rng::seed_from_u64(seed).random_range(first..=last);

    let in_slab = |i: usize| {
        let c = s.coords(i);
        let v = [c.0, c.1, c.2][axis];
        (start..start + len).contains(&v)
    };
    let mut slab = BinaryVolume::empty(s);
    for &i in target {
        if in_slab(i) {
            slab.bits_mut()[i] = true;
        }
    }
    let pieces = components_by_size(&slab);
    let piece = pieces
        .iter()
        .min_by_key(|p| p[0])
        .expect("slab crosses the component");
    let mut out = b.clone();
    for &i in piece {
        out.bits_mut()[i] = false;
    }
    Ok(out)
}

fn merge_bridge(b: &BinaryVolume) -> Result<BinaryVolume> {
    let s = b.shape();
    let comps = components_by_size(b);
    if comps.len() < 2 {
        return Err(Error::NotApplicable(format!(
            "merge_bridge needs two components, found {}",
            comps.len()
        )));
    }
    let boundary = |c: &[usize]| -> Vec<(usize, usize, usize)> {
        c.iter()
            .map(|&i| s.coords(i))
            .filter(|&(x, y, z)| {
                FACES
                    .iter()
                    .any(|&d| s.offset(x, y, z, d).is_none_or(|j| !b.bits()[j]))
            })
            .collect()
    };
    let (a, c) = (boundary(&comps[0]), boundary(&comps[1]));
    let d2 = |p: (usize, usize, usize), q: (usize, usize, usize)| {
        let f = |u: usize, v: usize| (u as i64 - v as i64).pow(2);
        f(p.0, q.0) + f(p.1, q.1) + f(p.2, q.2)
    };
    let mut best = (i64::MAX, a[0], c[0]);
    for &p in &a {
        for &q in &c {
            let d = d2(p, q);
            if d < best.0 {
                best = (d, p, q);
            }
        }
    }
    let (_, p, q) = best;
    Ok(draw_bar(b, p, q))
}

/// Sets every voxel within distance 1 of the segment `p`–`q`.
fn draw_bar(b: &BinaryVolume, p: (usize, usize, usize), q: (usize, usize, usize)) -> BinaryVolume {
    let s: Shape = b.shape();
    let (pf, qf) = (
        [p.0 as f64, p.1 as f64, p.2 as f64],
        [q.0 as f64, q.1 as f64, q.2 as f64],
    );
    let mut out = b.clone();
    let lo = [p.0.min(q.0), p.1.min(q.1), p.2.min(q.2)].map(|v| v.saturating_sub(1));
    let hi = [p.0.max(q.0) + 1, p.1.max(q.1) + 1, p.2.max(q.2) + 1];
    for z in lo[2]..=hi[2].min(s.nz - 1) {
        for y in lo[1]..=hi[1].min(s.ny - 1) {
            for x in lo[0]..=hi[0].min(s.nx - 1) {
                let v = [x as f64, y as f64, z as f64];
                let ab: Vec<f64> = (0..3).map(|i| qf[i] - pf[i]).collect();
                let ap: Vec<f64> = (0..3).map(|i| v[i] - pf[i]).collect();
                let len2: f64 = ab.iter().map(|t| t * t).sum();
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (ap.iter().zip(&ab).map(|(u, w)| u * w).sum::<f64>() / len2).clamp(0.0, 1.0)
                };
                let dist2: f64 = (0..3).map(|i| (ap[i] - t * ab[i]).powi(2)).sum();
                if dist2 <= 1.0 {
                    out.set(x, y, z, true);
                }
            }
        }
    }
    out
}

/// Applies `op` to a binary (0/1-valued) volume. Only `BreakGap` uses the
/// seed.
pub fn perturb(v: &Volume, op: Perturbation, seed: u64) -> Result<Volume> {
    let mut b = binary(v)?;
    b = match op {
        Perturbation::BreakGap { len } => break_gap(&b, len, seed)?,
        Perturbation::MergeBridge => merge_bridge(&b)?,
        Perturbation::Dilate { n } => (0..n).fold(b, |acc, _| step(&acc, true)),
        Perturbation::Erode { n } => (0..n).fold(b, |acc, _| step(&acc, false)),
    };
    Ok(b.to_volume().with_voxel_size(v.voxel_size()))
}
