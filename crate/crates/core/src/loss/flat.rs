//! Flat-array entry points for foreign callers.
//!
//! Arrays are 32-bit floats in C order with shape `[nx, ny, nz]`
//! (`arr[x, y, z]` at `(x * ny + y) * nz + z`), matching the NPY layout.

use serde::{Deserialize, Serialize};

use super::{cldice_loss, gats_loss, LossValue};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalOptions, MetricReport};
use crate::volume::{from_c_order, to_c_order, Shape, Volume};

/// Loss value and C-order gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatLoss {
    pub value: f64,
    pub gradient: Vec<f32>,
}

fn volume_from_flat(data: &[f32], shape: [usize; 3], what: &str) -> Result<Volume> {
    let shape = Shape::from_dims(shape)?;
    if data.len() != shape.len() {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            found: data.len(),
        });
    }
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        log::debug!("{what} array has a non-finite entry at {index}");
        return Err(Error::NonFinite { index });
    }
    let wide: Vec<f64> = data.iter().map(|&v| v as f64).collect();
    Volume::new(shape, from_c_order(shape, &wide))
}

fn flatten(l: LossValue) -> FlatLoss {
    FlatLoss {
        value: l.value,
        gradient: to_c_order(&l.gradient)
            .into_iter()
            .map(|g| g as f32)
            .collect(),
    }
}

pub fn gats_loss_flat(
    pred: &[f32],
    target: &[f32],
    shape: [usize; 3],
    alpha: f64,
    k: usize,
) -> Result<FlatLoss> {
    let p = volume_from_flat(pred, shape, "pred")?;
    let t = volume_from_flat(target, shape, "target")?;
    gats_loss(&p, &t, alpha, k).map(flatten)
}

pub fn cldice_loss_flat(
    pred: &[f32],
    target: &[f32],
    shape: [usize; 3],
    alpha: f64,
    k: usize,
) -> Result<FlatLoss> {
    let p = volume_from_flat(pred, shape, "pred")?;
    let t = volume_from_flat(target, shape, "target")?;
    cldice_loss(&p, &t, alpha, k).map(flatten)
}

pub fn metrics_flat(
    pred: &[f32],
    gt: &[f32],
    shape: [usize; 3],
    k: usize,
    rho: f64,
) -> Result<MetricReport> {
    let p = volume_from_flat(pred, shape, "pred")?;
    let g = volume_from_flat(gt, shape, "gt")?;
    let opts = EvalOptions {
        k,
        rho,
        ..Default::default()
    };
    evaluate(&p, &g, &opts)
}
