//! Exact lattice symmetries.

use super::{Axis, Shape, Volume};

/// Rotates by `quarter_turns * 90°` about `axis` (negative turns allowed).
///
/// One quarter turn about z maps voxel `(x, y, z)` to `(ny - 1 - y, x, z)`;
/// the x and y rotations are the cyclic analogues (`(y, z)` and `(z, x)`
/// planes respectively).
pub fn rotate90(v: &Volume, axis: Axis, quarter_turns: i32) -> Volume {
    let turns = quarter_turns.rem_euclid(4);
    let mut out = v.clone();
    for _ in 0..turns {
        out = rotate_once(&out, axis);
    }
    out
}

type IndexMap = Box<dyn Fn(usize, usize, usize) -> (usize, usize, usize)>;

fn rotate_once(v: &Volume, axis: Axis) -> Volume {
    let s = v.shape();
    let [nx, ny, nz] = s.dims();
    let (new_shape, map): (Shape, IndexMap) = match axis {
        Axis::Z => (
            Shape { nx: ny, ny: nx, nz },
            Box::new(move |x, y, z| (ny - 1 - y, x, z)),
        ),
        Axis::X => (
            Shape { nx, ny: nz, nz: ny },
            Box::new(move |x, y, z| (x, nz - 1 - z, y)),
        ),
        Axis::Y => (
            Shape { nx: nz, ny, nz: nx },
            Box::new(move |x, y, z| (z, y, nx - 1 - x)),
        ),
    };
    let mut data = vec![0.0; s.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let (a, b, c) = map(x, y, z);
                data[new_shape.index(a, b, c)] = v.get(x, y, z);
            }
        }
    }
    Volume::from_parts(new_shape, data).with_voxel_size(v.voxel_size().map(|vs| match axis {
        Axis::Z => [vs[1], vs[0], vs[2]],
        Axis::X => [vs[0], vs[2], vs[1]],
        Axis::Y => [vs[2], vs[1], vs[0]],
    }))
}

/// Mirrors the volume along `axis`.
pub fn flip(v: &Volume, axis: Axis) -> Volume {
    let s = v.shape();
    let mut data = vec![0.0; s.len()];
    for z in 0..s.nz {
        for y in 0..s.ny {
            for x in 0..s.nx {
                let (a, b, c) = match axis {
                    Axis::X => (s.nx - 1 - x, y, z),
                    Axis::Y => (x, s.ny - 1 - y, z),
                    Axis::Z => (x, y, s.nz - 1 - z),
                };
                data[s.index(a, b, c)] = v.get(x, y, z);
            }
        }
    }
    Volume::from_parts(s, data).with_voxel_size(v.voxel_size())
}
