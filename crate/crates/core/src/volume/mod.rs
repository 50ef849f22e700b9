//! Dense volumes, binary masks and their file formats.

mod io;
mod preprocess;
mod transform;

pub(crate) use io::{from_c_order, to_c_order};
pub use io::{read_volume, write_volume, Format, RawSidecar};
pub use preprocess::{median_filter, preprocess, quantile, Preprocessed, DEFAULT_CLIP_FRACTION};
pub use transform::{flip, rotate90};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis `{other}`"))),
        }
    }
}

/// Volume dimensions `(nx, ny, nz)`, all positive.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Shape {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidParameter(format!(
                "shape ({nx}, {ny}, {nz}) has a zero extent"
            )));
        }
        Ok(Shape { nx, ny, nz })
    }

    /// Panics on zero extents; meant for literals in tests and generators.
    pub fn cube(n: usize) -> Self {
        Shape::new(n, n, n).expect("non-zero cube side")
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn from_dims(d: [usize; 3]) -> Result<Self> {
        Shape::new(d[0], d[1], d[2])
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz);
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.nx;
        let r = i / self.nx;
        (x, r % self.ny, r / self.ny)
    }

    /// Linear index of `(x, y, z) + offset` if it stays in bounds.
    #[inline]
    pub fn offset(&self, x: usize, y: usize, z: usize, d: (isize, isize, isize)) -> Option<usize> {
        let xx = x as isize + d.0;
        let yy = y as isize + d.1;
        let zz = z as isize + d.2;
        if xx < 0
            || yy < 0
            || zz < 0
            || xx >= self.nx as isize
            || yy >= self.ny as isize
            || zz >= self.nz as isize
        {
            None
        } else {
            Some(self.index(xx as usize, yy as usize, zz as usize))
        }
    }
}

/// Dense scalar field with finite samples stored x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    shape: Shape,
    data: Vec<f64>,
    voxel_size: Option<[f64; 3]>,
}

impl Volume {
    /// Builds a volume, rejecting length mismatches and non-finite samples.
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Volume {
            shape,
            data,
            voxel_size: None,
        })
    }

    pub fn zeros(shape: Shape) -> Self {
        Volume::filled(shape, 0.0)
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        assert!(value.is_finite());
        Volume {
            shape,
            data: vec![value; shape.len()],
            voxel_size: None,
        }
    }

    /// Evaluates `f(x, y, z)` at every voxel.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for z in 0..shape.nz {
            for y in 0..shape.ny {
                for x in 0..shape.nx {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume::new(shape, data)
    }

    /// Internal constructor for kernels whose outputs are finite by construction.
    pub(crate) fn from_parts(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Volume {
            shape,
            data,
            voxel_size: None,
        }
    }

    pub fn with_voxel_size(mut self, voxel_size: Option<[f64; 3]>) -> Self {
        self.voxel_size = voxel_size;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn voxel_size(&self) -> Option<[f64; 3]> {
        self.voxel_size
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.shape.index(x, y, z)]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Order-independent sum of all samples.
    pub fn sum(&self) -> f64 {
        crate::numeric::canonical_sum(&self.data)
    }

    /// Min-max scaling to `[0, 1]`. A constant volume maps to all zeros and
    /// the second element reports the degenerate range.
    pub fn normalized(&self) -> (Volume, bool) {
        let lo = self.min();
        let hi = self.max();
        if hi <= lo {
            return (
                Volume::zeros(self.shape).with_voxel_size(self.voxel_size),
                true,
            );
        }
        let span = hi - lo;
        let data = self.data.iter().map(|&v| (v - lo) / span).collect();
        (
            Volume::from_parts(self.shape, data).with_voxel_size(self.voxel_size),
            false,
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Volume> {
        Volume::new(self.shape, self.data.iter().map(|&v| f(v)).collect())
            .map(|v| v.with_voxel_size(self.voxel_size))
    }

    pub fn check_same_shape(&self, other: &Volume) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapesDiffer(self.shape.dims(), other.shape.dims()));
        }
        Ok(())
    }

    /// `bits[v] = data[v] >= threshold`, with foreground 26 / background 6.
    pub fn threshold(&self, threshold: f64) -> BinaryVolume {
        BinaryVolume::from_bits(
            self.shape,
            self.data.iter().map(|&v| v >= threshold).collect(),
        )
    }
}

/// Neighbourhood adjacency on the cubic lattice.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjacency {
    Six,
    TwentySix,
}

impl Adjacency {
    pub fn from_count(n: u8) -> Option<Self> {
        match n {
            6 => Some(Adjacency::Six),
            26 => Some(Adjacency::TwentySix),
            _ => None,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Adjacency::Six => 6,
            Adjacency::TwentySix => 26,
        }
    }
}

/// A complementary foreground / background adjacency pair.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Connectivity {
    fg: Adjacency,
    bg: Adjacency,
}

impl Connectivity {
    pub const FG26_BG6: Connectivity = Connectivity {
        fg: Adjacency::TwentySix,
        bg: Adjacency::Six,
    };
    pub const FG6_BG26: Connectivity = Connectivity {
        fg: Adjacency::Six,
        bg: Adjacency::TwentySix,
    };

    pub fn new(fg: u8, bg: u8) -> Result<Self> {
        match (Adjacency::from_count(fg), Adjacency::from_count(bg)) {
            (Some(f), Some(b)) if f != b => Ok(Connectivity { fg: f, bg: b }),
            _ => Err(Error::MixedConnectivity { fg, bg }),
        }
    }

    pub fn foreground(&self) -> Adjacency {
        self.fg
    }

    pub fn background(&self) -> Adjacency {
        self.bg
    }
}

impl Default for Connectivity {
    fn default() -> Self {
        Connectivity::FG26_BG6
    }
}

/// Boolean mask with its adjacency convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryVolume {
    shape: Shape,
    bits: Vec<bool>,
    connectivity: Connectivity,
}

impl BinaryVolume {
    pub fn new(shape: Shape, bits: Vec<bool>, connectivity: Connectivity) -> Result<Self> {
        if bits.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                found: bits.len(),
            });
        }
        Ok(BinaryVolume {
            shape,
            bits,
            connectivity,
        })
    }

    pub(crate) fn from_bits(shape: Shape, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), shape.len());
        BinaryVolume {
            shape,
            bits,
            connectivity: Connectivity::FG26_BG6,
        }
    }

    pub fn empty(shape: Shape) -> Self {
        BinaryVolume::from_bits(shape, vec![false; shape.len()])
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(shape.len());
        for z in 0..shape.nz {
            for y in 0..shape.ny {
                for x in 0..shape.nx {
                    bits.push(f(x, y, z));
                }
            }
        }
        BinaryVolume::from_bits(shape, bits)
    }

    pub fn with_connectivity(mut self, connectivity: Connectivity) -> Self {
        self.connectivity = connectivity;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.shape.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.shape.index(x, y, z);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_volume(&self) -> Volume {
        Volume::from_parts(
            self.shape,
            self.bits
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn complement(&self) -> BinaryVolume {
        BinaryVolume {
            shape: self.shape,
            bits: self.bits.iter().map(|b| !b).collect(),
            connectivity: self.connectivity,
        }
    }

    pub fn check_same_shape(&self, other: &BinaryVolume) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapesDiffer(self.shape.dims(), other.shape.dims()));
        }
        Ok(())
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_order_is_x_fastest() {
        let s = Shape::new(2, 3, 4).unwrap();
        assert_eq!(s.index(1, 0, 0), 1);
        assert_eq!(s.index(0, 1, 0), 2);
        assert_eq!(s.index(0, 0, 1), 6);
        for i in 0..s.len() {
            let (x, y, z) = s.coords(i);
            assert_eq!(s.index(x, y, z), i);
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_length() {
        let s = Shape::cube(2);
        assert!(matches!(
            Volume::new(s, vec![0.0; 7]),
            Err(Error::ShapeMismatch {
                expected: 8,
                found: 7
            })
        ));
        let mut d = vec![0.0; 8];
        d[5] = f64::NAN;
        assert!(matches!(
            Volume::new(s, d),
            Err(Error::NonFinite { index: 5 })
        ));
        assert!(Shape::new(0, 1, 1).is_err());
    }

    #[test]
    fn connectivity_pairs() {
        assert_eq!(Connectivity::new(26, 6).unwrap(), Connectivity::FG26_BG6);
        assert_eq!(Connectivity::new(6, 26).unwrap(), Connectivity::FG6_BG26);
        assert!(Connectivity::new(6, 6).is_err());
        assert!(Connectivity::new(26, 26).is_err());
        assert!(Connectivity::new(18, 6).is_err());
    }

    #[test]
    fn normalization() {
        let v = Volume::new(Shape::new(4, 1, 1).unwrap(), vec![2.0, 4.0, 6.0, 3.0]).unwrap();
        let (n, degenerate) = v.normalized();
        assert!(!degenerate);
        assert_eq!(n.data(), &[0.0, 0.5, 1.0, 0.25]);
        let (c, degenerate) = Volume::filled(Shape::cube(2), 0.3).normalized();
        assert!(degenerate);
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_is_inclusive() {
        let v = Volume::new(Shape::new(3, 1, 1).unwrap(), vec![0.2, 0.5, 0.7]).unwrap();
        assert_eq!(v.threshold(0.5).bits(), &[false, true, true]);
    }
}
