use super::kernels::{pool_values, PoolKernel};
use crate::numeric::canonical_sum;
use crate::volume::Volume;

/// The closed primitive set the morphology and overlap formulas are written
/// against. [`Eager`] evaluates directly on volumes; the loss tape records
/// the same calls so forward values agree bit-for-bit.
pub trait Backend {
    type Field: Clone;
    type Scalar: Copy;

    fn pool(&mut self, x: &Self::Field, kernel: PoolKernel) -> Self::Field;
    fn relu(&mut self, x: &Self::Field) -> Self::Field;
    fn add(&mut self, a: &Self::Field, b: &Self::Field) -> Self::Field;
    fn sub(&mut self, a: &Self::Field, b: &Self::Field) -> Self::Field;
    fn mul(&mut self, a: &Self::Field, b: &Self::Field) -> Self::Field;
    fn sum(&mut self, x: &Self::Field) -> Self::Scalar;

    fn constant(&mut self, c: f64) -> Self::Scalar;
    fn s_add(&mut self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;
    fn s_sub(&mut self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;
    fn s_mul(&mut self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;
    fn s_div(&mut self, a: Self::Scalar, b: Self::Scalar) -> Self::Scalar;
    fn value(&self, s: Self::Scalar) -> f64;
}

#[inline]
pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub(crate) fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Direct evaluation on [`Volume`]s.
#[derive(Debug, Default, Clone, Copy)]
pub struct Eager;

impl Backend for Eager {
    type Field = Volume;
    type Scalar = f64;

    fn pool(&mut self, x: &Volume, kernel: PoolKernel) -> Volume {
        Volume::from_parts(x.shape(), pool_values(x.shape(), x.data(), kernel))
    }

    fn relu(&mut self, x: &Volume) -> Volume {
        Volume::from_parts(x.shape(), x.data().iter().map(|&v| relu(v)).collect())
    }

    fn add(&mut self, a: &Volume, b: &Volume) -> Volume {
        Volume::from_parts(a.shape(), zip_with(a.data(), b.data(), |x, y| x + y))
    }

    fn sub(&mut self, a: &Volume, b: &Volume) -> Volume {
        Volume::from_parts(a.shape(), zip_with(a.data(), b.data(), |x, y| x - y))
    }

    fn mul(&mut self, a: &Volume, b: &Volume) -> Volume {
        Volume::from_parts(a.shape(), zip_with(a.data(), b.data(), |x, y| x * y))
    }

    fn sum(&mut self, x: &Volume) -> f64 {
        canonical_sum(x.data())
    }

    fn constant(&mut self, c: f64) -> f64 {
        c
    }

    fn s_add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }

    fn s_sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }

    fn s_mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }

    fn s_div(&mut self, a: f64, b: f64) -> f64 {
        a / b
    }

    fn value(&self, s: f64) -> f64 {
        s
    }
}
