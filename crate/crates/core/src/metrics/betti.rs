use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::volume::{BinaryVolume, Shape};

/// Betti numbers of a binary volume.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BettiTriple {
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
}

impl BettiTriple {
    pub const fn new(b0: usize, b1: usize, b2: usize) -> Self {
        BettiTriple { b0, b1, b2 }
    }

    pub fn euler(&self) -> i64 {
        self.b0 as i64 - self.b1 as i64 + self.b2 as i64
    }
}

impl std::fmt::Display for BettiTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.b0, self.b1, self.b2)
    }
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let up = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = up;
            i = up;
        }
        i
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Half of the 26-neighbourhood: offsets that come before the centre in
/// raster order, so each adjacent pair is visited once.
fn backward_offsets(full: bool) -> Vec<(isize, isize, isize)> {
    let mut out = Vec::new();
    for dz in -1..=0isize {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                if (dz, dy, dx) >= (0, 0, 0) {
                    continue;
                }
                if full || dx.abs() + dy.abs() + dz.abs() == 1 {
                    out.push((dx, dy, dz));
                }
            }
        }
    }
    out
}

fn count_components(
    shape: Shape,
    member: impl Fn(usize) -> bool,
    full: bool,
) -> (usize, DisjointSets) {
    let mut sets = DisjointSets::new(shape.len());
    let offsets = backward_offsets(full);
    let mut count = 0;
    for i in 0..shape.len() {
        if !member(i) {
            continue;
        }
        count += 1;
        let (x, y, z) = shape.coords(i);
        for &d in &offsets {
            if let Some(j) = shape.offset(x, y, z, d) {
                if member(j) && sets.find(i as u32) != sets.find(j as u32) {
                    sets.union(i as u32, j as u32);
                    count -= 1;
                }
            }
        }
    }
    (count, sets)
}

/// Labels of the foreground 26-components, as `(count, label per voxel)`;
/// background voxels get `u32::MAX`. Labels follow raster order of each
/// component's first voxel.
pub fn label_components(b: &BinaryVolume) -> (usize, Vec<u32>) {
    let bits = b.bits();
    let (count, mut sets) = count_components(b.shape(), |i| bits[i], true);
    let mut labels = vec![u32::MAX; bits.len()];
    let mut root_label = vec![u32::MAX; bits.len()];
    let mut next = 0;
    for i in 0..bits.len() {
        if bits[i] {
            let r = sets.find(i as u32) as usize;
            if root_label[r] == u32::MAX {
                root_label[r] = next;
                next += 1;
            }
            labels[i] = root_label[r];
        }
    }
    (count, labels)
}

/// Number of foreground 26-components.
pub fn components(b: &BinaryVolume) -> usize {
    let bits = b.bits();
    count_components(b.shape(), |i| bits[i], true).0
}

/// Number of background 6-components enclosed by the foreground.
pub fn cavities(b: &BinaryVolume) -> usize {
    let s = b.shape();
    let padded = Shape::new(s.nx + 2, s.ny + 2, s.nz + 2).expect("nonzero extents");
    let inside = |i: usize| {
        let (x, y, z) = padded.coords(i);
        (1..=s.nx).contains(&x)
            && (1..=s.ny).contains(&y)
            && (1..=s.nz).contains(&z)
            && b.get(x - 1, y - 1, z - 1)
    };
    // the padding shell is one background component touching everything outside
    count_components(padded, |i| !inside(i), false).0 - 1
}

/// Euler characteristic `V − E + F − C` of the union of closed unit cubes
/// at the foreground voxels.
pub fn euler_characteristic(b: &BinaryVolume) -> i64 {
    let s = b.shape();
    let fg = |x: isize, y: isize, z: isize| {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < s.nx
            && (y as usize) < s.ny
            && (z as usize) < s.nz
            && b.get(x as usize, y as usize, z as usize)
    };
    // a lattice cell with extent e (0 or 1) along each axis is present iff
    // any voxel it bounds is foreground; those voxels differ by -1..=0 along
    // the axes where the cell has extent 0
    let mut chi = 0i64;
    for ez in 0..2isize {
        for ey in 0..2isize {
            for ex in 0..2isize {
                let dim = ex + ey + ez;
                let sign = if dim % 2 == 0 { 1 } else { -1 };
                let (mx, my, mz) = (
                    s.nx as isize + 1 - ex,
                    s.ny as isize + 1 - ey,
                    s.nz as isize + 1 - ez,
                );
                for z in 0..mz {
                    for y in 0..my {
                        for x in 0..mx {
                            let present = (ez - 1..=0).any(|oz| {
                                (ey - 1..=0)
                                    .any(|oy| (ex - 1..=0).any(|ox| fg(x + ox, y + oy, z + oz)))
                            });
                            if present {
                                chi += sign;
                            }
                        }
                    }
                }
            }
        }
    }
    chi
}

/// Betti numbers under foreground 26 / background 6 adjacency; the
/// volume's connectivity tag is not consulted.
pub fn betti(b: &BinaryVolume) -> BettiTriple {
    let b0 = components(b);
    let b2 = cavities(b);
    let chi = euler_characteristic(b);
    let b1 = b0 as i64 + b2 as i64 - chi;
    debug_assert!(b1 >= 0, "negative first Betti number");
    BettiTriple::new(b0, b1.max(0) as usize, b2)
}

/// Absolute differences `(|Δβ0|, |Δβ1|)`.
pub fn betti_error(p: &BinaryVolume, g: &BinaryVolume) -> Result<(f64, f64)> {
    p.check_same_shape(g)?;
    let (bp, bg) = (betti(p), betti(g));
    Ok((bp.b0.abs_diff(bg.b0) as f64, bp.b1.abs_diff(bg.b1) as f64))
}
