use serde::{Deserialize, Serialize};

use crate::volume::{Axis, Volume};

/// Row-major 2D grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Image<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(width * height, data.len(), "image buffer length");
        Image {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    /// Value at a signed offset, `None` outside the image.
    #[inline]
    pub fn at(&self, row: isize, col: isize) -> Option<T> {
        if row < 0 || col < 0 || row >= self.height as isize || col >= self.width as isize {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Image<U> {
        Image::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Surrounds the image with a `pad`-pixel frame of `value`.
    pub fn padded(&self, pad: usize, value: T) -> Image<T> {
        let mut out = Image::filled(self.width + 2 * pad, self.height + 2 * pad, value);
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(r + pad, c + pad, self.get(r, c));
            }
        }
        out
    }
}

impl Image<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// One lattice plane of a volume, with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice2D {
    pub image: Image<f64>,
    pub axis: Axis,
    pub index: usize,
}

impl Slice2D {
    /// Extracts plane `index` normal to `axis`. Columns/rows are `(x, y)`
    /// for z-planes, `(x, z)` for y-planes and `(y, z)` for x-planes.
    pub fn extract(v: &Volume, axis: Axis, index: usize) -> Slice2D {
        let s = v.shape();
        let image = match axis {
            Axis::Z => Image::from_fn(s.nx, s.ny, |r, c| v.get(c, r, index)),
            Axis::Y => Image::from_fn(s.nx, s.nz, |r, c| v.get(c, index, r)),
            Axis::X => Image::from_fn(s.ny, s.nz, |r, c| v.get(index, c, r)),
        };
        Slice2D { image, axis, index }
    }
}
