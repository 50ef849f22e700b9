//! Exact squared Euclidean distance transform (Meijster, Roerdink & Hesselink),
//! computed in integer arithmetic.

use super::image::Image;
use crate::error::{Error, Result};

/// Squared distance from every foreground pixel to the nearest background
/// pixel; background pixels map to zero.
pub fn edt2d(fg: &Image<bool>) -> Result<Image<u64>> {
    let (w, h) = (fg.width(), fg.height());
    if fg.data().iter().all(|&b| b) {
        return Err(Error::NoBackground);
    }
    let inf = (w + h) as i64;

    // column scan: g = vertical distance to nearest background in the column
    let mut g = vec![0i64; w * h];
    for c in 0..w {
        g[c] = if fg.get(0, c) { inf } else { 0 };
        for r in 1..h {
            g[r * w + c] = if fg.get(r, c) {
                g[(r - 1) * w + c] + 1
            } else {
                0
            };
        }
        for r in (0..h.saturating_sub(1)).rev() {
            let below = g[(r + 1) * w + c];
            if below < g[r * w + c] {
                g[r * w + c] = below + 1;
            }
        }
    }

    // row scan: lower envelope of parabolas (u - i)^2 + g(i)^2
    let mut out = vec![0u64; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for r in 0..h {
        let row = &g[r * w..(r + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i] * row[i];
        let sep = |i: usize, u: usize| {
            let (ii, uu) = (i as i64, u as i64);
            (uu * uu - ii * ii + row[u] * row[u] - row[i] * row[i]).div_euclid(2 * (uu - ii))
        };
        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let wv = 1 + sep(s[q as usize], u);
                if wv < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = wv;
                }
            }
        }
        for u in (0..w).rev() {
            out[r * w + u] = f(u as i64, s[q as usize]) as u64;
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    Ok(Image::new(w, h, out))
}
