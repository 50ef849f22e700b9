//! Slice-wise geometric assessment and 3D centerline extraction.

mod canny;
mod edt;
mod image;
mod medial;
mod mpr;
mod thin;

pub use canny::{canny2d, CannyParams};
pub use edt::edt2d;
pub use image::{Image, Slice2D};
pub use medial::medial_axis2d;
pub use mpr::{
    extract_slices, extract_slices_along, mpr, otsu_threshold, slice_max_radius, Binarization,
    MprConfig, MprResult, SliceId,
};
pub use thin::thin3d;
