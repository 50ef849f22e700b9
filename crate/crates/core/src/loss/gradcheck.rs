use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use std::hash::{DefaultHasher, Hash, Hasher};

use super::{check_alpha, combined, combined_with_label_iterate, Tape};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_EPS;
use crate::morphology::{
    iterate, pool_extremum_tracked, Backend, Eager, Morphology, PoolKernel, PoolKind,
};
use crate::volume::Volume;

/// Functional under test.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFn {
    Gats,
    Cldice,
    /// `Σ p²`, a smooth reference with gradient `2p`.
    SumOfSquares,
}

impl std::str::FromStr for LossFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gats" => Ok(LossFn::Gats),
            "cldice" => Ok(LossFn::Cldice),
            "sum_of_squares" | "sumsq" => Ok(LossFn::SumOfSquares),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckConfig {
    pub step: f64,
    pub alpha: f64,
    pub k: usize,
    pub eps: f64,
    /// Maximum allowed relative error.
    pub tolerance: f64,
    /// Coordinates where both gradients are at most this large are skipped.
    pub min_grad: f64,
    /// Check a random subset of this many coordinates instead of all.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-4,
            alpha: 0.5,
            k: 2,
            eps: DEFAULT_EPS,
            tolerance: 1e-3,
            min_grad: 1e-6,
            sample: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub coords: (usize, usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub loss: LossFn,
    pub value: f64,
    pub checked: usize,
    pub skipped_small: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub violations: Vec<Violation>,
    /// Coordinates whose finite-difference probes straddle a relu kink or
    /// change a min/max pool's selected element.
    pub crossings: Vec<usize>,
    /// Distance of the point from the nearest relu kink on the tape.
    pub kink_margin: f64,
    /// Coordinates of `pred` outside `(10·step, 1 − 10·step)`.
    pub near_boundary: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when every probe stayed on the point's smooth piece.
    pub fn clear_of_kinks(&self) -> bool {
        self.crossings.is_empty()
    }
}

fn evaluate(
    loss: LossFn,
    pred: &Volume,
    target: &Volume,
    cfg: &GradCheckConfig,
) -> Result<(f64, Volume, f64)> {
    let morphology = match loss {
        LossFn::Gats => Morphology::Smooth,
        LossFn::Cldice => Morphology::Skeletonize,
        LossFn::SumOfSquares => {
            let mut t = Tape::new(pred.shape());
            let x = t.leaf(pred);
            let sq = t.mul(&x, &x);
            let out = t.sum(&sq);
            let g = t.backward(out).remove(0);
            return Ok((t.value(out), g, f64::INFINITY));
        }
    };
    pred.check_same_shape(target)?;
    check_alpha(cfg.alpha)?;
    let mut t = Tape::new(pred.shape());
    let p = t.leaf(pred);
    let g = t.input(target);
    let (out, _) = combined(&mut t, &p, &g, cfg.alpha, cfg.k, morphology, cfg.eps);
    let grad = t.backward(out).remove(0);
    Ok((t.value(out), grad, t.kink_margin()))
}

/// Eager evaluation that also hashes which side of every kink the point is
/// on: relu argument signs and min/max pool argmins. Two points with equal
/// hashes lie in the same smooth piece of the loss.
struct Probe {
    branches: DefaultHasher,
}

impl Backend for Probe {
    type Field = Volume;
    type Scalar = f64;

    fn pool(&mut self, x: &Volume, kernel: PoolKernel) -> Volume {
        if kernel.kind() == PoolKind::Avg {
            return Eager.pool(x, kernel);
        }
        let (values, arg) = pool_extremum_tracked(x.shape(), x.data(), kernel);
        arg.hash(&mut self.branches);
        Volume::from_parts(x.shape(), values)
    }

    fn relu(&mut self, x: &Volume) -> Volume {
        for &v in x.data() {
            (v > 0.0).hash(&mut self.branches);
        }
        Eager.relu(x)
    }

    fn add(&mut self, a: &Volume, b: &Volume) -> Volume {
        Eager.add(a, b)
    }

    fn sub(&mut self, a: &Volume, b: &Volume) -> Volume {
        Eager.sub(a, b)
    }

    fn mul(&mut self, a: &Volume, b: &Volume) -> Volume {
        Eager.mul(a, b)
    }

    fn sum(&mut self, x: &Volume) -> f64 {
        Eager.sum(x)
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

/// Forward evaluator with the target side precomputed.
struct Forward<'a> {
    target: &'a Volume,
    label_iterate: Option<(Morphology, Volume)>,
    cfg: &'a GradCheckConfig,
}

impl<'a> Forward<'a> {
    fn new(loss: LossFn, target: &'a Volume, cfg: &'a GradCheckConfig) -> Self {
        let label_iterate = morphology_of(loss).map(|m| {
            (
                m,
                iterate(
                    &mut Eager,
                    target,
                    cfg.k,
                    m,
                    PoolKernel::DEFAULT_WINDOW,
                    None,
                ),
            )
        });
        Forward {
            target,
            label_iterate,
            cfg,
        }
    }

    /// Loss value and branch hash at `pred`.
    fn eval(&self, pred: &Volume) -> (f64, u64) {
        let mut b = Probe {
            branches: DefaultHasher::new(),
        };
        let value = match &self.label_iterate {
            None => {
                let sq = b.mul(pred, pred);
                b.sum(&sq)
            }
            Some((m, sl)) => {
                let c = self.cfg;
                combined_with_label_iterate(&mut b, pred, self.target, sl, c.alpha, c.k, *m, c.eps)
                    .0
            }
        };
        (value, b.branches.finish())
    }
}

fn morphology_of(loss: LossFn) -> Option<Morphology> {
    match loss {
        LossFn::Gats => Some(Morphology::Smooth),
        LossFn::Cldice => Some(Morphology::Skeletonize),
        LossFn::SumOfSquares => None,
    }
}

/// Compares the tape gradient of `loss` against central differences with
/// step `cfg.step`.
///
/// Relative error is `|a − n| / max(|a|, |n|)`; every checked coordinate
/// above `cfg.tolerance` is listed as a violation. Coordinates whose
/// `±step` probes land on a different side of some kink than the point
/// itself are also listed in `crossings`.
pub fn grad_check(
    loss: LossFn,
    pred: &Volume,
    target: &Volume,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {}",
            cfg.step
        )));
    }
    let (value, analytic, kink_margin) = evaluate(loss, pred, target, cfg)?;
    let len = pred.len();
    let coords: Vec<usize> = match cfg.sample {
        Some(n) if n < len => {
            if n < 64 {
                return Err(Error::InvalidParameter(format!(
                    "a sampled check needs at least 64 coordinates, got {n}"
                )));
            }
            let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(cfg.seed), len, n).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..len).collect(),
    };
    let delta = 10.0 * cfg.step;
    let near_boundary = pred
        .data()
        .iter()
        .filter(|&&v| v <= delta || v >= 1.0 - delta)
        .count();

    let fwd = Forward::new(loss, target, cfg);
    let (_, home) = fwd.eval(pred);
    let mut data = pred.data().to_vec();
    let mut errors = Vec::with_capacity(coords.len());
    let mut violations = Vec::new();
    let mut crossings = Vec::new();
    let mut skipped_small = 0;
    for &i in &coords {
        let orig = data[i];
        data[i] = orig + cfg.step;
        let (up, bu) = fwd.eval(&Volume::from_parts(pred.shape(), data.clone()));
        data[i] = orig - cfg.step;
        let (down, bd) = fwd.eval(&Volume::from_parts(pred.shape(), data.clone()));
        data[i] = orig;
        if bu != home || bd != home {
            crossings.push(i);
        }
        let numeric = (up - down) / (2.0 * cfg.step);
        let a = analytic.data()[i];
        let scale = a.abs().max(numeric.abs());
        if scale <= cfg.min_grad {
            skipped_small += 1;
            continue;
        }
        let rel_error = (a - numeric).abs() / scale;
        errors.push(rel_error);
        if rel_error > cfg.tolerance {
            violations.push(Violation {
                index: i,
                coords: pred.shape().coords(i),
                analytic: a,
                numeric,
                rel_error,
            });
        }
    }
    let max_rel_error = errors.iter().copied().fold(0.0, f64::max);
    let mean_rel_error = if errors.is_empty() {
        0.0
    } else {
        errors.iter().sum::<f64>() / errors.len() as f64
    };
    Ok(GradCheckReport {
        loss,
        value,
        checked: errors.len(),
        skipped_small,
        max_rel_error,
        mean_rel_error,
        violations,
        crossings,
        kink_margin,
        near_boundary,
    })
}
