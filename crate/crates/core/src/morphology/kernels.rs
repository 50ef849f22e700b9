//! Same-shape pooling over truncated cubic windows.
//!
//! Min and max are computed separably (exact). The average sums the
//! in-bounds window values in ascending order and divides by the in-bounds
//! count, so it is exactly invariant under the 48 lattice symmetries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::canonical_sum_in_place;
use crate::volume::Shape;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Min,
    Max,
    Avg,
}

/// Stride-1 cubic pooling window with truncated boundary handling.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoolKernel {
    kind: PoolKind,
    window: usize,
}

impl PoolKernel {
    pub const DEFAULT_WINDOW: usize = 3;

    pub fn new(kind: PoolKind, window: usize) -> Result<Self> {
        if window < 3 || window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "pool window must be odd and >= 3, got {window}"
            )));
        }
        Ok(PoolKernel { kind, window })
    }

    pub fn min() -> Self {
        PoolKernel {
            kind: PoolKind::Min,
            window: 3,
        }
    }

    pub fn max() -> Self {
        PoolKernel {
            kind: PoolKind::Max,
            window: 3,
        }
    }

    pub fn avg() -> Self {
        PoolKernel {
            kind: PoolKind::Avg,
            window: 3,
        }
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn with_window(self, window: usize) -> Result<Self> {
        PoolKernel::new(self.kind, window)
    }

    pub(crate) fn half(&self) -> usize {
        self.window / 2
    }
}

/// Volumes smaller than this are processed on the calling thread; handing
/// them to the pool costs more than the work.
const PARALLEL_MIN_LEN: usize = 1 << 15;

fn for_each_slab(dst: &mut [f64], slab: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    if dst.len() < PARALLEL_MIN_LEN {
        dst.chunks_mut(slab)
            .enumerate()
            .for_each(|(z, out)| f(z, out));
    } else {
        dst.par_chunks_mut(slab)
            .enumerate()
            .for_each(|(z, out)| f(z, out));
    }
}

fn map_voxels<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if len < PARALLEL_MIN_LEN {
        (0..len).map(f).collect()
    } else {
        (0..len).into_par_iter().map(f).collect()
    }
}

pub(crate) fn pool_values(shape: Shape, src: &[f64], kernel: PoolKernel) -> Vec<f64> {
    match kernel.kind {
        PoolKind::Min => separable(shape, src, kernel.half(), f64::min),
        PoolKind::Max => separable(shape, src, kernel.half(), f64::max),
        PoolKind::Avg => average(shape, src, kernel.half()),
    }
}

fn separable(shape: Shape, src: &[f64], half: usize, op: fn(f64, f64) -> f64) -> Vec<f64> {
    let a = line_pass(shape, src, 0, half, op);
    let b = line_pass(shape, &a, 1, half, op);
    line_pass(shape, &b, 2, half, op)
}

fn line_pass(
    shape: Shape,
    src: &[f64],
    axis: usize,
    half: usize,
    op: fn(f64, f64) -> f64,
) -> Vec<f64> {
    let dims = shape.dims();
    let n = dims[axis];
    let stride = [1, shape.nx, shape.nx * shape.ny][axis];
    let slab = shape.nx * shape.ny;
    let mut dst = vec![0.0; src.len()];
    for_each_slab(&mut dst, slab, |z, out| {
        for (local, o) in out.iter_mut().enumerate() {
            let i = z * slab + local;
            let c = [local % shape.nx, local / shape.nx, z][axis];
            let lo = c.saturating_sub(half);
            let hi = (c + half).min(n - 1);
            let base = i - c * stride;
            let mut acc = src[base + lo * stride];
            for t in lo + 1..=hi {
                acc = op(acc, src[base + t * stride]);
            }
            *o = acc;
        }
    });
    dst
}

/// In-bounds window bounds `[lo, hi]` per axis around `(x, y, z)`.
#[inline]
pub(crate) fn window_bounds(
    shape: Shape,
    x: usize,
    y: usize,
    z: usize,
    half: usize,
) -> [(usize, usize); 3] {
    [
        (x.saturating_sub(half), (x + half).min(shape.nx - 1)),
        (y.saturating_sub(half), (y + half).min(shape.ny - 1)),
        (z.saturating_sub(half), (z + half).min(shape.nz - 1)),
    ]
}

#[inline]
pub(crate) fn window_count(b: &[(usize, usize); 3]) -> usize {
    b.iter().map(|(lo, hi)| hi - lo + 1).product()
}

fn average(shape: Shape, src: &[f64], half: usize) -> Vec<f64> {
    let slab = shape.nx * shape.ny;
    let mut dst = vec![0.0; src.len()];
    for_each_slab(&mut dst, slab, |z, out| {
        let mut window = Vec::with_capacity((2 * half + 1).pow(3));
        for (local, o) in out.iter_mut().enumerate() {
            let (x, y) = (local % shape.nx, local / shape.nx);
            let b = window_bounds(shape, x, y, z, half);
            window.clear();
            for zz in b[2].0..=b[2].1 {
                for yy in b[1].0..=b[1].1 {
                    let row = shape.index(0, yy, zz);
                    window.extend_from_slice(&src[row + b[0].0..=row + b[0].1]);
                }
            }
            let n = window.len() as f64;
            let mean = canonical_sum_in_place(&mut window) / n;
            // the sorted window bounds the exact mean; clamping keeps constants fixed
            *o = mean.clamp(window[0], window[window.len() - 1]);
        }
    });
    dst
}

/// Min or max pooling that also returns, per output voxel, the linear index
/// of the first window element (in raster order) attaining the extremum.
pub(crate) fn pool_extremum_tracked(
    shape: Shape,
    src: &[f64],
    kernel: PoolKernel,
) -> (Vec<f64>, Vec<u32>) {
    let better: fn(f64, f64) -> bool = match kernel.kind {
        PoolKind::Min => |cand, best| cand < best,
        PoolKind::Max => |cand, best| cand > best,
        PoolKind::Avg => panic!("average pooling has no arg-extremum"),
    };
    let half = kernel.half();
    map_voxels(shape.len(), |i| {
        let (x, y, z) = shape.coords(i);
        let b = window_bounds(shape, x, y, z, half);
        let mut best_idx = shape.index(b[0].0, b[1].0, b[2].0);
        let mut best = src[best_idx];
        for zz in b[2].0..=b[2].1 {
            for yy in b[1].0..=b[1].1 {
                for xx in b[0].0..=b[0].1 {
                    let j = shape.index(xx, yy, zz);
                    if better(src[j], best) {
                        best = src[j];
                        best_idx = j;
                    }
                }
            }
        }
        (best, best_idx as u32)
    })
    .into_iter()
    .unzip()
}

/// Adjoint of average pooling: each output adjoint is spread evenly over the
/// in-bounds window that produced it. Contributions to an input voxel are
/// added in canonical order.
pub(crate) fn avg_pool_adjoint(shape: Shape, adj_out: &[f64], half: usize, adj_in: &mut [f64]) {
    let scaled: Vec<f64> = (0..shape.len())
        .map(|i| {
            let (x, y, z) = shape.coords(i);
            adj_out[i] / window_count(&window_bounds(shape, x, y, z, half)) as f64
        })
        .collect();
    // The window relation is symmetric, so the input adjoint is a window
    // sum of the scaled output adjoints.
    let sums: Vec<f64> = map_voxels(shape.len(), |i| {
        let (x, y, z) = shape.coords(i);
        let b = window_bounds(shape, x, y, z, half);
        let mut terms = Vec::with_capacity(window_count(&b));
        for zz in b[2].0..=b[2].1 {
            for yy in b[1].0..=b[1].1 {
                let row = shape.index(0, yy, zz);
                terms.extend_from_slice(&scaled[row + b[0].0..=row + b[0].1]);
            }
        }
        canonical_sum_in_place(&mut terms)
    });
    for (a, s) in adj_in.iter_mut().zip(sums) {
        *a += s;
    }
}

/// Adjoint of tracked min/max pooling: input voxel `j` receives the
/// canonical sum of the adjoints of every output whose arg is `j`.
pub(crate) fn extremum_pool_adjoint(
    shape: Shape,
    adj_out: &[f64],
    arg: &[u32],
    half: usize,
    adj_in: &mut [f64],
) {
    let sums: Vec<f64> = map_voxels(shape.len(), |j| {
        let (x, y, z) = shape.coords(j);
        let b = window_bounds(shape, x, y, z, half);
        let mut terms = Vec::new();
        for zz in b[2].0..=b[2].1 {
            for yy in b[1].0..=b[1].1 {
                for xx in b[0].0..=b[0].1 {
                    let i = shape.index(xx, yy, zz);
                    if arg[i] as usize == j {
                        terms.push(adj_out[i]);
                    }
                }
            }
        }
        canonical_sum_in_place(&mut terms)
    });
    for (a, s) in adj_in.iter_mut().zip(sums) {
        *a += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(shape: Shape, src: &[f64], kernel: PoolKernel) -> Vec<f64> {
        let half = kernel.half() as isize;
        (0..shape.len())
            .map(|i| {
                let (x, y, z) = shape.coords(i);
                let mut vals = Vec::new();
                for dz in -half..=half {
                    for dy in -half..=half {
                        for dx in -half..=half {
                            if let Some(j) = shape.offset(x, y, z, (dx, dy, dz)) {
                                vals.push(src[j]);
                            }
                        }
                    }
                }
                match kernel.kind {
                    PoolKind::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                    PoolKind::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    PoolKind::Avg => {
                        vals.sort_by(f64::total_cmp);
                        vals.iter().sum::<f64>() / vals.len() as f64
                    }
                }
            })
            .collect()
    }

    fn pseudo_random(n: usize, mut h: u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                h ^= h << 13;
                h ^= h >> 7;
                h ^= h << 17;
                (h >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn matches_direct_window_scan() {
        let shape = Shape::new(5, 4, 6).unwrap();
        let src = pseudo_random(shape.len(), 0x9e3779b97f4a7c15);
        for w in [3, 5] {
            for kind in [PoolKind::Min, PoolKind::Max, PoolKind::Avg] {
                let k = PoolKernel::new(kind, w).unwrap();
                assert_eq!(
                    pool_values(shape, &src, k),
                    naive(shape, &src, k),
                    "{kind:?} w={w}"
                );
            }
            for kind in [PoolKind::Min, PoolKind::Max] {
                let k = PoolKernel::new(kind, w).unwrap();
                let (vals, args) = pool_extremum_tracked(shape, &src, k);
                assert_eq!(vals, pool_values(shape, &src, k));
                for (v, a) in vals.iter().zip(&args) {
                    assert_eq!(*v, src[*a as usize]);
                }
            }
        }
    }

    #[test]
    fn ties_route_to_first_raster_element() {
        let shape = Shape::new(3, 1, 1).unwrap();
        let (_, args) = pool_extremum_tracked(shape, &[0.5, 0.5, 0.5], PoolKernel::min());
        assert_eq!(args, vec![0, 0, 1]);
    }

    #[test]
    fn kernel_validation() {
        assert!(PoolKernel::new(PoolKind::Avg, 2).is_err());
        assert!(PoolKernel::new(PoolKind::Avg, 1).is_err());
        assert!(PoolKernel::new(PoolKind::Avg, 5).is_ok());
    }

    #[test]
    fn avg_adjoint_is_transpose() {
        let shape = Shape::new(4, 3, 2).unwrap();
        let x = pseudo_random(shape.len(), 7);
        let w = pseudo_random(shape.len(), 11);
        // <w, A x> == <A^T w, x>
        let ax = pool_values(shape, &x, PoolKernel::avg());
        let mut atw = vec![0.0; shape.len()];
        avg_pool_adjoint(shape, &w, 1, &mut atw);
        let lhs: f64 = w.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let rhs: f64 = atw.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
