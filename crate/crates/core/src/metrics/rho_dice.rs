use crate::error::{Error, Result};
use crate::volume::BinaryVolume;

use super::overlap::{Flag, Scored};

/// Default tolerance radius in voxels.
pub const DEFAULT_RHO: f64 = 2.0;

fn ball_offsets(rho: f64) -> Vec<(isize, isize, isize)> {
    let r = rho.floor() as isize;
    let r2 = rho * rho;
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if ((dx * dx + dy * dy + dz * dz) as f64) <= r2 {
                    out.push((dx, dy, dz));
                }
            }
        }
    }
    out
}

/// Dilation by the Euclidean ball of radius `rho` (truncated at the border).
pub fn dilate_ball(b: &BinaryVolume, rho: f64) -> Result<BinaryVolume> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be finite and non-negative, got {rho}"
        )));
    }
    let shape = b.shape();
    let offsets = ball_offsets(rho);
    let mut out = BinaryVolume::empty(shape).with_connectivity(b.connectivity());
    for (i, _) in b.bits().iter().enumerate().filter(|(_, &v)| v) {
        let (x, y, z) = shape.coords(i);
        for &d in &offsets {
            if let Some(j) = shape.offset(x, y, z, d) {
                out.bits_mut()[j] = true;
            }
        }
    }
    Ok(out)
}

/// Tolerance Dice between two centerlines:
/// `(|P ∩ dilate(G, ρ)| + |G ∩ dilate(P, ρ)|) / (|P| + |G|)`.
///
/// Two empty centerlines score 1 with [`Flag::BothEmpty`].
pub fn rho_dice(p: &BinaryVolume, g: &BinaryVolume, rho: f64) -> Result<Scored> {
    p.check_same_shape(g)?;
    let dp = dilate_ball(p, rho)?;
    let dg = dilate_ball(g, rho)?;
    let (np, ng) = (p.count(), g.count());
    if np + ng == 0 {
        return Ok(Scored {
            value: 1.0,
            flags: vec![Flag::BothEmpty],
        });
    }
    let hits = |a: &BinaryVolume, d: &BinaryVolume| {
        a.bits()
            .iter()
            .zip(d.bits())
            .filter(|(&x, &y)| x && y)
            .count()
    };
    let tp = hits(p, &dg) + hits(g, &dp);
    Ok(((tp as f64) / ((np + ng) as f64)).into())
}
