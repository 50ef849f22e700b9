//! Differentiable Dice / clDice / smoothing-overlap losses and a
//! finite-difference gradient verifier.

mod flat;
mod gradcheck;
mod tape;

pub use flat::{cldice_loss_flat, gats_loss_flat, metrics_flat, FlatLoss};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, LossFn, Violation};
pub use tape::{FieldId, ScalarId, Tape};

use crate::error::{Error, Result};
use crate::metrics::{overlap_with_label_iterate, soft_dice, Flag, DEFAULT_EPS};
use crate::morphology::{iterate, Backend, Eager, Morphology, PoolKernel};
use crate::volume::Volume;

/// Default weight of the overlap term in the smoothing loss.
pub const DEFAULT_GATS_ALPHA: f64 = 0.5;
/// Reference clDice configuration.
pub const DEFAULT_CLDICE_ALPHA: f64 = 0.65;
pub const DEFAULT_CLDICE_K: usize = 3;
/// Default weight of the centerline head.
pub const DEFAULT_MULTIHEAD_ALPHA: f64 = 0.8;

/// Loss value with its gradient with respect to the prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Volume,
    pub flags: Vec<Flag>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

/// `(1 − α)(1 − Dice(p, g)) + α(1 − overlap(p, g))` on any backend.
pub(crate) fn combined<B: Backend>(
    b: &mut B,
    p: &B::Field,
    g: &B::Field,
    alpha: f64,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> (B::Scalar, Vec<Flag>) {
    let sl = iterate(b, g, k, morphology, PoolKernel::DEFAULT_WINDOW, None);
    combined_with_label_iterate(b, p, g, &sl, alpha, k, morphology, eps)
}

/// As [`combined`] with the target's iterate `sl` already computed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn combined_with_label_iterate<B: Backend>(
    b: &mut B,
    p: &B::Field,
    g: &B::Field,
    sl: &B::Field,
    alpha: f64,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> (B::Scalar, Vec<Flag>) {
    let d = soft_dice(b, p, g, eps);
    let (score, flags) = overlap_with_label_iterate(b, p, g, sl, k, morphology, eps);
    let one = b.constant(1.0);
    let dice_term = b.s_sub(one, d);
    let overlap_term = b.s_sub(one, score);
    let wd = b.constant(1.0 - alpha);
    let wo = b.constant(alpha);
    let a = b.s_mul(wd, dice_term);
    let c = b.s_mul(wo, overlap_term);
    (b.s_add(a, c), flags)
}

/// Loss with gradient for either morphology.
pub fn combined_loss(
    pred: &Volume,
    target: &Volume,
    alpha: f64,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> Result<LossValue> {
    pred.check_same_shape(target)?;
    check_alpha(alpha)?;
    let mut tape = Tape::new(pred.shape());
    let p = tape.leaf(pred);
    let g = tape.input(target);
    let (out, flags) = combined(&mut tape, &p, &g, alpha, k, morphology, eps);
    let gradient = tape.backward(out).remove(0);
    Ok(LossValue {
        value: tape.value(out),
        gradient,
        flags,
    })
}

/// Forward-only loss value, evaluated without recording.
pub fn combined_loss_value(
    pred: &Volume,
    target: &Volume,
    alpha: f64,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> Result<f64> {
    pred.check_same_shape(target)?;
    check_alpha(alpha)?;
    Ok(combined(&mut Eager, pred, target, alpha, k, morphology, eps).0)
}

/// Dice plus smoothing-overlap loss over topologically smoothed fields.
pub fn gats_loss(pred: &Volume, target: &Volume, alpha: f64, k: usize) -> Result<LossValue> {
    combined_loss(pred, target, alpha, k, Morphology::Smooth, DEFAULT_EPS)
}

/// Dice plus clDice loss over soft skeletons.
pub fn cldice_loss(pred: &Volume, target: &Volume, alpha: f64, k: usize) -> Result<LossValue> {
    combined_loss(pred, target, alpha, k, Morphology::Skeletonize, DEFAULT_EPS)
}

/// `(1 − α)(1 − seg) + α(1 − cl)` over two head scores.
pub fn multihead_loss(seg: f64, cl: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - alpha) * (1.0 - seg) + alpha * (1.0 - cl))
}
