use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::thin3d;
use crate::volume::Volume;

use super::{ari, betti_error, cldice_score, dice, rho_dice, Flag, DEFAULT_RHO};

/// Which scores [`evaluate`] computes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Dice,
    Cldice,
    RhoDice,
    Ari,
    Betti,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Dice,
        Metric::Cldice,
        Metric::RhoDice,
        Metric::Ari,
        Metric::Betti,
    ];
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dice" => Ok(Metric::Dice),
            "cldice" => Ok(Metric::Cldice),
            "rho_dice" => Ok(Metric::RhoDice),
            "ari" => Ok(Metric::Ari),
            "betti" => Ok(Metric::Betti),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Soft-skeleton rounds for clDice.
    pub k: usize,
    pub rho: f64,
    /// Binarization threshold for the set-based metrics.
    pub threshold: f64,
    pub metrics: Vec<Metric>,
    /// Divide Betti errors by the voxel count.
    pub normalize_betti: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 3,
            rho: DEFAULT_RHO,
            threshold: 0.5,
            metrics: Metric::ALL.to_vec(),
            normalize_betti: false,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho must be non-negative, got {}",
                self.rho
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

/// One row of evaluation results. Unrequested metrics are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pair: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cldice: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_dice: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betti0_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betti1_error: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<Flag>,
}

/// Scores `pred` against `gt`. Set-based metrics use both volumes
/// thresholded at `opts.threshold`; ρ-Dice compares their thinned
/// centerlines.
pub fn evaluate(pred: &Volume, gt: &Volume, opts: &EvalOptions) -> Result<MetricReport> {
    opts.validate()?;
    pred.check_same_shape(gt)?;
    let mut r = MetricReport::default();
    if opts.wants(Metric::Dice) {
        r.dice = Some(dice(pred, gt)?);
    }
    if opts.wants(Metric::Cldice) {
        let s = cldice_score(pred, gt, opts.k)?;
        r.cldice = Some(s.value);
        r.flags.extend(s.flags);
    }
    let needs_binary = [Metric::RhoDice, Metric::Ari, Metric::Betti]
        .iter()
        .any(|&m| opts.wants(m));
    if needs_binary {
        let (bp, bg) = (pred.threshold(opts.threshold), gt.threshold(opts.threshold));
        if opts.wants(Metric::RhoDice) {
            let s = rho_dice(&thin3d(&bp)?, &thin3d(&bg)?, opts.rho)?;
            r.rho_dice = Some(s.value);
            r.flags.extend(s.flags);
        }
        if opts.wants(Metric::Ari) {
            r.ari = Some(ari(&bp, &bg)?);
        }
        if opts.wants(Metric::Betti) {
            let (e0, e1) = betti_error(&bp, &bg)?;
            let scale = if opts.normalize_betti {
                pred.len() as f64
            } else {
                1.0
            };
            r.betti0_error = Some(e0 / scale);
            r.betti1_error = Some(e1 / scale);
        }
    }
    Ok(r)
}

pub const CSV_HEADER: [&str; 8] = [
    "pair",
    "dice",
    "cldice",
    "rho_dice",
    "ari",
    "betti0_error",
    "betti1_error",
    "flags",
];

/// Writes reports as CSV, one row per pair, empty cells for unrequested
/// metrics and `;`-joined flags.
pub fn write_csv<W: Write>(reports: &[MetricReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        let flags: Vec<String> = r.flags.iter().map(|f| f.to_string()).collect();
        w.write_record([
            r.pair.clone(),
            cell(r.dice),
            cell(r.cldice),
            cell(r.rho_dice),
            cell(r.ari),
            cell(r.betti0_error),
            cell(r.betti1_error),
            flags.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
