use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::morphology::{iterate, Backend, Eager, Morphology, PoolKernel};
use crate::volume::Volume;

/// Smoothing term added to every ratio denominator.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Convention markers attached to a score.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The prediction's skeleton (or smoothed field) has mass below eps.
    EmptyPredSkeleton,
    /// The label's skeleton (or smoothed field) has mass below eps.
    EmptyLabelSkeleton,
    /// Both centerlines were empty; the score is 1 by convention.
    BothEmpty,
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flag::EmptyPredSkeleton => "empty_pred_skeleton",
            Flag::EmptyLabelSkeleton => "empty_label_skeleton",
            Flag::BothEmpty => "both_empty",
        })
    }
}

/// A score plus any conventions applied while computing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub value: f64,
    pub flags: Vec<Flag>,
}

impl Scored {
    fn plain(value: f64) -> Self {
        Scored {
            value,
            flags: Vec::new(),
        }
    }
}

pub(crate) fn soft_dice<B: Backend>(b: &mut B, p: &B::Field, g: &B::Field, eps: f64) -> B::Scalar {
    let pg = b.mul(p, g);
    let inter = b.sum(&pg);
    let sp = b.sum(p);
    let sg = b.sum(g);
    let two = b.constant(2.0);
    let num = b.s_mul(two, inter);
    let mass = b.s_add(sp, sg);
    let e = b.constant(eps);
    let den = b.s_add(mass, e);
    b.s_div(num, den)
}

/// `Σ(s·v) / (Σs + eps)`, or a constant 0 when `Σs < eps`.
pub(crate) fn overlap_ratio<B: Backend>(
    b: &mut B,
    s: &B::Field,
    v: &B::Field,
    eps: f64,
) -> (B::Scalar, bool) {
    let sv = b.mul(s, v);
    let num = b.sum(&sv);
    let mass = b.sum(s);
    if b.value(mass) < eps {
        return (b.constant(0.0), true);
    }
    let e = b.constant(eps);
    let den = b.s_add(mass, e);
    (b.s_div(num, den), false)
}

pub(crate) fn harmonic_mean<B: Backend>(b: &mut B, x: B::Scalar, y: B::Scalar) -> B::Scalar {
    let total = b.s_add(x, y);
    if b.value(total) == 0.0 {
        return b.constant(0.0);
    }
    let prod = b.s_mul(x, y);
    let two = b.constant(2.0);
    let num = b.s_mul(two, prod);
    b.s_div(num, total)
}

/// Harmonic mean of precision `Σ(S_P·V_L)/ΣS_P` and sensitivity
/// `Σ(S_L·V_P)/ΣS_L` where `S_*` is the chosen morphology of `V_*`.
pub(crate) fn morphological_overlap<B: Backend>(
    b: &mut B,
    vp: &B::Field,
    vl: &B::Field,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> (B::Scalar, Vec<Flag>) {
    let sl = iterate(b, vl, k, morphology, PoolKernel::DEFAULT_WINDOW, None);
    overlap_with_label_iterate(b, vp, vl, &sl, k, morphology, eps)
}

/// As [`morphological_overlap`] with the label iterate `sl` supplied.
pub(crate) fn overlap_with_label_iterate<B: Backend>(
    b: &mut B,
    vp: &B::Field,
    vl: &B::Field,
    sl: &B::Field,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> (B::Scalar, Vec<Flag>) {
    let sp = iterate(b, vp, k, morphology, PoolKernel::DEFAULT_WINDOW, None);
    let (prec, empty_p) = overlap_ratio(b, &sp, vl, eps);
    let (sens, empty_l) = overlap_ratio(b, sl, vp, eps);
    let mut flags = Vec::new();
    if empty_p {
        flags.push(Flag::EmptyPredSkeleton);
    }
    if empty_l {
        flags.push(Flag::EmptyLabelSkeleton);
    }
    (harmonic_mean(b, prec, sens), flags)
}

/// Soft Dice `2Σ(p·g) / (Σp + Σg + eps)`.
pub fn dice(p: &Volume, g: &Volume) -> Result<f64> {
    dice_with_eps(p, g, DEFAULT_EPS)
}

pub fn dice_with_eps(p: &Volume, g: &Volume, eps: f64) -> Result<f64> {
    p.check_same_shape(g)?;
    Ok(soft_dice(&mut Eager, p, g, eps))
}

/// Topological precision of skeleton `s_p` against label volume `v_l`.
pub fn tprec(s_p: &Volume, v_l: &Volume) -> Result<Scored> {
    s_p.check_same_shape(v_l)?;
    let (value, empty) = overlap_ratio(&mut Eager, s_p, v_l, DEFAULT_EPS);
    Ok(Scored {
        value,
        flags: if empty {
            vec![Flag::EmptyPredSkeleton]
        } else {
            Vec::new()
        },
    })
}

/// Topological sensitivity of label skeleton `s_l` against prediction `v_p`.
pub fn tsens(s_l: &Volume, v_p: &Volume) -> Result<Scored> {
    s_l.check_same_shape(v_p)?;
    let (value, empty) = overlap_ratio(&mut Eager, s_l, v_p, DEFAULT_EPS);
    Ok(Scored {
        value,
        flags: if empty {
            vec![Flag::EmptyLabelSkeleton]
        } else {
            Vec::new()
        },
    })
}

/// clDice over soft skeletons after `k` rounds.
pub fn cldice_score(v_p: &Volume, v_l: &Volume, k: usize) -> Result<Scored> {
    score(v_p, v_l, k, Morphology::Skeletonize, DEFAULT_EPS)
}

/// The same harmonic overlap computed over topologically smoothed fields.
pub fn gats_score(v_p: &Volume, v_l: &Volume, k: usize) -> Result<Scored> {
    score(v_p, v_l, k, Morphology::Smooth, DEFAULT_EPS)
}

pub fn score(
    v_p: &Volume,
    v_l: &Volume,
    k: usize,
    morphology: Morphology,
    eps: f64,
) -> Result<Scored> {
    v_p.check_same_shape(v_l)?;
    let (value, flags) = morphological_overlap(&mut Eager, v_p, v_l, k, morphology, eps);
    Ok(Scored { value, flags })
}

impl From<f64> for Scored {
    fn from(value: f64) -> Self {
        Scored::plain(value)
    }
}
