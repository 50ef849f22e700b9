//! Sequential 3D thinning by deletion of simple points (26/6 adjacency).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Connectivity, Shape};

const CENTER: usize = 13;

#[inline]
fn cube_pos(dx: isize, dy: isize, dz: isize) -> usize {
    ((dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)) as usize
}

fn cube_offset(p: usize) -> (isize, isize, isize) {
    let p = p as isize;
    (p % 3 - 1, (p / 3) % 3 - 1, p / 9 - 1)
}

struct Tables {
    adj26: [u32; 27],
    adj6: [u32; 27],
    n6: u32,
    n18: u32,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = Tables {
            adj26: [0; 27],
            adj6: [0; 27],
            n6: 0,
            n18: 0,
        };
        for p in 0..27 {
            let (x, y, z) = cube_offset(p);
            let l1 = x.abs() + y.abs() + z.abs();
            if l1 == 1 {
                t.n6 |= 1 << p;
            }
            if (1..=2).contains(&l1) {
                t.n18 |= 1 << p;
            }
            for q in 0..27 {
                if p == q || q == CENTER {
                    continue;
                }
                let (a, b, c) = cube_offset(q);
                let (dx, dy, dz) = ((x - a).abs(), (y - b).abs(), (z - c).abs());
                if dx.max(dy).max(dz) == 1 {
                    t.adj26[p] |= 1 << q;
                }
                if dx + dy + dz == 1 {
                    t.adj6[p] |= 1 << q;
                }
            }
        }
        t
    })
}

fn flood(seed: u32, set: u32, adj: &[u32; 27]) -> u32 {
    let mut reached = seed;
    let mut frontier = seed;
    while frontier != 0 {
        let p = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[p] & set & !reached;
        reached |= fresh;
        frontier |= fresh;
    }
    reached
}

/// Simple-point test on a 3×3×3 foreground bitmask (bit `p` per
/// [`cube_pos`]; the centre bit is ignored).
///
/// The foreground topological number counts 26-components of the
/// foreground in the punctured 26-neighbourhood; the background number
/// counts 6-components of the background in the punctured
/// 18-neighbourhood that touch a face neighbour. Both must equal one.
pub(crate) fn is_simple_3d(mask: u32) -> bool {
    let t = tables();
    let fg = mask & !(1 << CENTER) & ((1 << 27) - 1);
    if fg == 0 {
        return false;
    }
    let first = fg & fg.wrapping_neg();
    if flood(first, fg, &t.adj26) != fg {
        return false;
    }
    let bg = !mask & t.n18;
    let mut remaining_faces = bg & t.n6;
    if remaining_faces == 0 {
        return false;
    }
    let comp = flood(
        remaining_faces & remaining_faces.wrapping_neg(),
        bg,
        &t.adj6,
    );
    remaining_faces &= !comp;
    remaining_faces == 0
}

pub(crate) fn neighbourhood_mask(shape: Shape, bits: &[bool], x: usize, y: usize, z: usize) -> u32 {
    let mut m = 0u32;
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(j) = shape.offset(x, y, z, (dx, dy, dz)) {
                    if bits[j] {
                        m |= 1 << cube_pos(dx, dy, dz);
                    }
                }
            }
        }
    }
    m
}

/// Border directions visited in order: up, down, north, south, east, west.
const DIRECTIONS: [(isize, isize, isize); 6] = [
    (0, 0, 1),
    (0, 0, -1),
    (0, 1, 0),
    (0, -1, 0),
    (1, 0, 0),
    (-1, 0, 0),
];

/// Thins a (26, 6) mask to single-voxel-wide curves.
///
/// Each pass runs six directional sub-passes. A sub-pass collects the
/// foreground voxels whose neighbour in that direction is background (out of
/// bounds counts as background) and then, in raster order, deletes each one
/// that is still a simple point and is not a curve end (more than one
/// foreground 26-neighbour). Passes repeat until a full pass deletes
/// nothing.
pub fn thin3d(b: &BinaryVolume) -> Result<BinaryVolume> {
    if b.connectivity() != Connectivity::FG26_BG6 {
        return Err(Error::UnsupportedConnectivity);
    }
    let shape = b.shape();
    let mut out = b.clone();
    loop {
        let mut deleted = 0usize;
        for &dir in &DIRECTIONS {
            let candidates: Vec<usize> = {
                let bits = out.bits();
                (0..shape.len())
                    .filter(|&i| {
                        if !bits[i] {
                            return false;
                        }
                        let (x, y, z) = shape.coords(i);
                        shape.offset(x, y, z, dir).is_none_or(|j| !bits[j])
                    })
                    .collect()
            };
            for i in candidates {
                let (x, y, z) = shape.coords(i);
                let mask = neighbourhood_mask(shape, out.bits(), x, y, z);
                let degree = (mask & !(1 << CENTER)).count_ones();
                if degree > 1 && is_simple_3d(mask) {
                    out.bits_mut()[i] = false;
                    deleted += 1;
                }
            }
        }
        if deleted == 0 {
            return Ok(out);
        }
    }
}
