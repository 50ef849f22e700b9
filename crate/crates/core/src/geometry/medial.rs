//! Distance-ordered 2D medial axis.

use super::edt::edt2d;
use super::image::Image;
use crate::error::Result;

/// 8-neighbour offsets `(dr, dc)` in raster order.
const N8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// A pixel is simple (8-connected foreground, 4-connected background) when
/// its foreground neighbours form one 8-component and the background
/// neighbours 4-adjacent to it lie in one 4-component of the 3×3 ring.
///
/// `nbr` is indexed like [`N8`].
pub(crate) fn is_simple_2d(nbr: [bool; 8]) -> bool {
    let adjacent = |a: usize, b: usize, four: bool| {
        let (ra, ca) = N8[a];
        let (rb, cb) = N8[b];
        let (dr, dc) = ((ra - rb).abs(), (ca - cb).abs());
        if four {
            dr + dc == 1
        } else {
            dr.max(dc) == 1
        }
    };
    let components = |want: bool, four: bool, seeds_only_4: bool| {
        let mut seen = [false; 8];
        let mut count = 0;
        for start in 0..8 {
            if nbr[start] != want || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut touches_4 = false;
            while let Some(p) = stack.pop() {
                let (dr, dc) = N8[p];
                touches_4 |= dr.abs() + dc.abs() == 1;
                for q in 0..8 {
                    if nbr[q] == want && !seen[q] && adjacent(p, q, four) {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
            if !seeds_only_4 || touches_4 {
                count += 1;
            }
        }
        count
    };
    components(true, false, false) == 1 && components(false, true, true) == 1
}

/// Skeleton mask and radius map (`sqrt` of the squared EDT on skeleton
/// pixels, zero elsewhere).
///
/// Foreground pixels are visited in ascending distance order (raster order
/// on ties) and deleted when they are simple and have at least two
/// foreground neighbours. Local maxima of the distance map are never
/// deleted, so the skeleton always carries the maximal inscribed radius.
/// Passes repeat until nothing changes.
pub fn medial_axis2d(fg: &Image<bool>) -> Result<(Image<bool>, Image<f64>)> {
    let dist = edt2d(fg)?;
    let (w, h) = (fg.width(), fg.height());
    let mut skel = fg.clone();

    let mut order: Vec<usize> = (0..w * h).filter(|&i| fg.data()[i]).collect();
    order.sort_by_key(|&i| (dist.data()[i], i));

    let anchor: Vec<bool> = (0..w * h)
        .map(|i| {
            if !fg.data()[i] {
                return false;
            }
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            let d = dist.data()[i];
            N8.iter()
                .all(|&(dr, dc)| dist.at(r + dr, c + dc).unwrap_or(0) <= d)
        })
        .collect();

    loop {
        let mut changed = false;
        for &i in &order {
            if !skel.data()[i] || anchor[i] {
                continue;
            }
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            let mut nbr = [false; 8];
            for (k, &(dr, dc)) in N8.iter().enumerate() {
                nbr[k] = skel.at(r + dr, c + dc).unwrap_or(false);
            }
            let degree = nbr.iter().filter(|&&b| b).count();
            if degree >= 2 && is_simple_2d(nbr) {
                skel.set(r as usize, c as usize, false);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let radius = Image::from_fn(w, h, |r, c| {
        if skel.get(r, c) {
            (dist.get(r, c) as f64).sqrt()
        } else {
            0.0
        }
    });
    Ok((skel, radius))
}
