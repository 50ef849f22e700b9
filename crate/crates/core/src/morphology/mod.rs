//! Differentiable pooling morphology: soft skeletonization (min/max pooling)
//! and topological smoothing (average pooling).
//!
//! Both share one control flow:
//!
//! ```text
//! S <- relu(I - open(I))
//! repeat k times:
//!     I <- erode(I)
//!     D <- relu(I - open(I))
//!     S <- S + relu(D - S * D)
//! ```
//!
//! with `erode = minpool`, `open = maxpool . minpool` for skeletonization
//! and `erode = avgpool`, `open = avgpool . avgpool` for smoothing.

mod backend;
mod kernels;

pub use backend::{Backend, Eager};
pub use kernels::{PoolKernel, PoolKind};

pub(crate) use backend::{relu, zip_with};
pub(crate) use kernels::{avg_pool_adjoint, extremum_pool_adjoint, pool_extremum_tracked};

use crate::volume::Volume;

/// Pools `v` with a same-shape, stride-1 truncated window.
pub fn pool(v: &Volume, kernel: PoolKernel) -> Volume {
    Eager.pool(v, kernel)
}

/// Which iterated morphology to run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Morphology {
    /// Min/max pooling (thinning).
    Skeletonize,
    /// Average pooling (smoothing).
    Smooth,
}

impl Morphology {
    fn kernels(self, window: usize) -> (PoolKernel, [PoolKernel; 2]) {
        let k = |kind| PoolKernel::new(kind, window).expect("validated window");
        match self {
            Morphology::Skeletonize => (k(PoolKind::Min), [k(PoolKind::Min), k(PoolKind::Max)]),
            Morphology::Smooth => (k(PoolKind::Avg), [k(PoolKind::Avg), k(PoolKind::Avg)]),
        }
    }
}

/// Runs the iterated morphology on any backend. When `trace` is given, the
/// `S` iterate after each round is appended to it.
pub fn iterate<B: Backend>(
    b: &mut B,
    input: &B::Field,
    k: usize,
    morphology: Morphology,
    window: usize,
    mut trace: Option<&mut Vec<B::Field>>,
) -> B::Field {
    let (erode, open) = morphology.kernels(window);
    let opening = |b: &mut B, x: &B::Field| {
        let t = b.pool(x, open[0]);
        b.pool(&t, open[1])
    };

    let opened = opening(b, input);
    let residue = b.sub(input, &opened);
    let mut skel = b.relu(&residue);
    let mut img = input.clone();
    for _ in 0..k {
        img = b.pool(&img, erode);
        let opened = opening(b, &img);
        let residue = b.sub(&img, &opened);
        let delta = b.relu(&residue);
        let overlap = b.mul(&skel, &delta);
        let fresh = b.sub(&delta, &overlap);
        let fresh = b.relu(&fresh);
        skel = b.add(&skel, &fresh);
        if let Some(t) = trace.as_deref_mut() {
            t.push(skel.clone());
        }
    }
    skel
}

/// Soft skeleton after `k` erosion rounds (3³ windows).
pub fn soft_skeletonize(v: &Volume, k: usize) -> Volume {
    iterate(
        &mut Eager,
        v,
        k,
        Morphology::Skeletonize,
        PoolKernel::DEFAULT_WINDOW,
        None,
    )
}

/// Topological smoothing after `k` rounds (3³ windows).
pub fn topo_smooth(v: &Volume, k: usize) -> Volume {
    iterate(
        &mut Eager,
        v,
        k,
        Morphology::Smooth,
        PoolKernel::DEFAULT_WINDOW,
        None,
    )
}

/// Runs `morphology` with a custom odd window size.
pub fn run_with_window(
    v: &Volume,
    k: usize,
    morphology: Morphology,
    window: usize,
) -> crate::Result<Volume> {
    PoolKernel::new(PoolKind::Avg, window)?;
    Ok(iterate(&mut Eager, v, k, morphology, window, None))
}

/// `S` iterates of topological smoothing after each of the `k` rounds.
pub fn smoothing_trace(v: &Volume, k: usize) -> Vec<Volume> {
    trace(v, k, Morphology::Smooth)
}

/// `S` iterates of soft skeletonization after each of the `k` rounds.
pub fn skeleton_trace(v: &Volume, k: usize) -> Vec<Volume> {
    trace(v, k, Morphology::Skeletonize)
}

fn trace(v: &Volume, k: usize, morphology: Morphology) -> Vec<Volume> {
    let mut out = Vec::with_capacity(k);
    iterate(
        &mut Eager,
        v,
        k,
        morphology,
        PoolKernel::DEFAULT_WINDOW,
        Some(&mut out),
    );
    out
}

/// Histogram of `|a - b|` over `bins` equal-width bins of `[0, 1]`
/// (values of exactly 1 land in the last bin).
pub fn difference_histogram(a: &Volume, b: &Volume, bins: usize) -> crate::Result<Vec<usize>> {
    histogram(a, b, bins, false)
}

/// As [`difference_histogram`], restricted to voxels where `a` or `b` is
/// nonzero.
pub fn support_difference_histogram(
    a: &Volume,
    b: &Volume,
    bins: usize,
) -> crate::Result<Vec<usize>> {
    histogram(a, b, bins, true)
}

fn histogram(a: &Volume, b: &Volume, bins: usize, support_only: bool) -> crate::Result<Vec<usize>> {
    a.check_same_shape(b)?;
    if bins == 0 {
        return Err(crate::Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let mut hist = vec![0usize; bins];
    for (&x, &y) in a.data().iter().zip(b.data()) {
        if support_only && x == 0.0 && y == 0.0 {
            continue;
        }
        let d = (x - y).abs().min(1.0);
        let bin = ((d * bins as f64) as usize).min(bins - 1);
        hist[bin] += 1;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Shape;

    fn line(values: &[f64]) -> Volume {
        Volume::new(Shape::new(values.len(), 1, 1).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn constants_are_fixed_by_every_pool() {
        let v = Volume::filled(Shape::new(4, 3, 5).unwrap(), 0.37);
        for k in [PoolKernel::min(), PoolKernel::max(), PoolKernel::avg()] {
            assert_eq!(pool(&v, k), v);
        }
    }

    #[test]
    fn isolated_voxel_is_eroded() {
        let mut d = vec![0.0; 125];
        d[62] = 1.0;
        let v = Volume::new(Shape::cube(5), d).unwrap();
        assert!(pool(&v, PoolKernel::min()).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn max_pool_of_raster_ramp() {
        let v = Volume::new(Shape::cube(3), (0..27).map(f64::from).collect()).unwrap();
        assert_eq!(pool(&v, PoolKernel::max()).get(1, 1, 1), 26.0);
        assert_eq!(pool(&v, PoolKernel::min()).get(1, 1, 1), 0.0);
        assert_eq!(pool(&v, PoolKernel::max()).get(0, 0, 0), 13.0);
    }

    #[test]
    fn zeros_stay_zero() {
        let v = Volume::zeros(Shape::cube(4));
        for k in [0, 1, 3] {
            assert_eq!(soft_skeletonize(&v, k), v);
            assert_eq!(topo_smooth(&v, k), v);
        }
    }

    #[test]
    fn single_voxel_survives_skeletonization() {
        let mut d = vec![0.0; 125];
        d[62] = 1.0;
        let v = Volume::new(Shape::cube(5), d).unwrap();
        for k in [0, 1, 4] {
            assert_eq!(soft_skeletonize(&v, k), v);
        }
    }

    #[test]
    fn constant_is_flattened_by_smoothing() {
        let v = Volume::filled(Shape::cube(4), 0.8);
        for k in [0, 2] {
            assert!(topo_smooth(&v, k).data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn hand_traced_line_skeleton() {
        // minpool [0,1,1,1,0] = [0,0,1,0,0]; its maxpool restores the input,
        // so S starts at zero. Round one erodes to the centre voxel, whose
        // opening is empty, so it enters S.
        let v = line(&[0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(soft_skeletonize(&v, 0).data(), &[0.0; 5]);
        assert_eq!(soft_skeletonize(&v, 1).data(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(soft_skeletonize(&v, 3).data(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn trace_consistency() {
        let v = line(&[0.1, 0.9, 0.6, 0.8, 0.2, 0.4]);
        let t = smoothing_trace(&v, 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0], topo_smooth(&v, 1));
        let t = smoothing_trace(&v, 4);
        assert_eq!(t.last().unwrap(), &topo_smooth(&v, 4));
        for w in t.windows(2) {
            assert!(w[0].data().iter().zip(w[1].data()).all(|(a, b)| a <= b));
        }
        let z = smoothing_trace(&Volume::zeros(Shape::cube(3)), 3);
        assert_eq!(z.len(), 3);
        assert!(z.iter().all(|s| s.data().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn histogram_bins() {
        let a = line(&[0.0, 0.0, 0.0, 1.0]);
        let b = line(&[0.0, 0.3, 0.6, 0.0]);
        assert_eq!(difference_histogram(&a, &b, 4).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(
            support_difference_histogram(&a, &b, 4).unwrap(),
            vec![0, 1, 1, 1]
        );
        assert!(difference_histogram(&a, &b, 0).is_err());
    }
}
