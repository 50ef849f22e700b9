//! Overlap, centerline, clustering and topology scores.

mod ari;
mod betti;
mod overlap;
mod report;
mod rho_dice;

pub use ari::ari;
pub use betti::{
    betti, betti_error, cavities, components, euler_characteristic, label_components, BettiTriple,
};
pub use overlap::{
    cldice_score, dice, dice_with_eps, gats_score, score, tprec, tsens, Flag, Scored, DEFAULT_EPS,
};
pub use report::{evaluate, write_csv, EvalOptions, Metric, MetricReport, CSV_HEADER};
pub use rho_dice::{dilate_ball, rho_dice, DEFAULT_RHO};

pub(crate) use overlap::{overlap_with_label_iterate, soft_dice};
