//! Synthetic tubular volumes with analytic centerlines and Betti numbers.

mod perturb;

pub use perturb::{perturb, Perturbation};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BettiTriple;
use crate::volume::{Axis, BinaryVolume, Shape, Volume};

/// Minimum background margin between a structure and the volume border.
pub const MARGIN: f64 = 2.0;

/// Structure to draw. Centres default to `floor(n / 2)` on each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    /// A tube along `axis`. Without `length` it runs through the whole
    /// volume; with it the tube is a capsule centred on `center`.
    StraightTube {
        radius: f64,
        #[serde(default = "default_axis")]
        axis: Axis,
        #[serde(default)]
        length: Option<f64>,
        #[serde(default)]
        center: Option<[f64; 3]>,
    },
    /// Solid torus lying in the plane normal to `axis`.
    Torus {
        major_radius: f64,
        radius: f64,
        #[serde(default = "default_axis")]
        axis: Axis,
        #[serde(default)]
        center: Option<[f64; 3]>,
    },
    /// Helical tube winding around the z axis between the margins.
    Helix {
        radius: f64,
        helix_radius: f64,
        pitch: f64,
    },
    /// A trunk along z splitting into two branches in the x-z plane.
    /// `radius` lists trunk, left and right branch radii.
    Bifurcation { radius: [f64; 3] },
    /// Two full-length tubes along z at the x quarter points.
    TwoTubes { radius: [f64; 2] },
}

fn default_axis() -> Axis {
    Axis::Z
}

/// Additive noise applied after the ground truth is fixed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Noise {
    /// Standard deviation of additive Gaussian noise.
    pub sigma: f64,
    /// Fraction of voxels replaced by 0 or 1.
    pub salt_pepper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub shape: [usize; 3],
    #[serde(flatten)]
    pub kind: PhantomKind,
    #[serde(default)]
    pub noise: Option<Noise>,
}

impl PhantomSpec {
    pub fn new(shape: [usize; 3], kind: PhantomKind) -> Self {
        PhantomSpec {
            shape,
            kind,
            noise: None,
        }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = Some(noise);
        self
    }

    /// Betti numbers of the noiseless structure.
    pub fn analytic_betti(&self) -> BettiTriple {
        match self.kind {
            PhantomKind::Torus { .. } => BettiTriple::new(1, 1, 0),
            PhantomKind::TwoTubes { .. } => BettiTriple::new(2, 0, 0),
            _ => BettiTriple::new(1, 0, 0),
        }
    }

    pub fn max_radius(&self) -> f64 {
        match &self.kind {
            PhantomKind::StraightTube { radius, .. }
            | PhantomKind::Torus { radius, .. }
            | PhantomKind::Helix { radius, .. } => *radius,
            PhantomKind::Bifurcation { radius } => radius.iter().copied().fold(0.0, f64::max),
            PhantomKind::TwoTubes { radius } => radius.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Exact references for a generated phantom.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub centerline: BinaryVolume,
    pub betti: BettiTriple,
    pub max_radius: f64,
}

type P3 = [f64; 3];

/// A centerline piece: a polyline drawn with one radius.
struct Branch {
    points: Vec<P3>,
    radius: f64,
}

fn dist2_to_segment(p: P3, a: P3, b: P3) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab.iter().map(|v| v * v).sum::<f64>();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (ap.iter().zip(&ab).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    };
    (0..3).map(|i| (ap[i] - t * ab[i]).powi(2)).sum()
}

fn centre(shape: Shape) -> P3 {
    let d = shape.dims();
    [(d[0] / 2) as f64, (d[1] / 2) as f64, (d[2] / 2) as f64]
}

fn axis_frame(axis: Axis) -> (usize, usize, usize) {
    match axis {
        Axis::X => (0, 1, 2),
        Axis::Y => (1, 2, 0),
        Axis::Z => (2, 0, 1),
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "radius must be at least 1, got {r}"
        )))
    }
}

/// Centerline branches plus the axes along which the structure may reach
/// the border.
fn branches(spec: &PhantomSpec, shape: Shape) -> Result<(Vec<Branch>, [bool; 3])> {
    let d = shape.dims().map(|n| n as f64);
    let mut open = [false; 3];
    let out = match &spec.kind {
        PhantomKind::StraightTube {
            radius,
            axis,
            length,
            center,
        } => {
            check_radius(*radius)?;
            let c = center.unwrap_or_else(|| centre(shape));
            let (a, _, _) = axis_frame(*axis);
            let (lo, hi) = match length {
                None => {
                    open[a] = true;
                    (-radius - 1.0, d[a] + radius)
                }
                Some(l) if *l > 0.0 => (c[a] - l / 2.0, c[a] + l / 2.0),
                Some(l) => {
                    return Err(Error::InvalidParameter(format!(
                        "tube length must be positive, got {l}"
                    )))
                }
            };
            let (mut p, mut q) = (c, c);
            p[a] = lo;
            q[a] = hi;
            vec![Branch {
                points: vec![p, q],
                radius: *radius,
            }]
        }
        PhantomKind::Torus {
            major_radius,
            radius,
            axis,
            center,
        } => {
            check_radius(*radius)?;
            if *major_radius <= *radius + 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "major radius {major_radius} must exceed tube radius {radius} by more than one voxel"
                )));
            }
            let c = center.unwrap_or_else(|| centre(shape));
            let (_, u, v) = axis_frame(*axis);
            let n = (2.0 * std::f64::consts::PI * major_radius * 4.0).ceil() as usize;
            let points = (0..=n)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    let mut p = c;
                    p[u] += major_radius * t.cos();
                    p[v] += major_radius * t.sin();
                    p
                })
                .collect();
            vec![Branch {
                points,
                radius: *radius,
            }]
        }
        PhantomKind::Helix {
            radius,
            helix_radius,
            pitch,
        } => {
            check_radius(*radius)?;
            if *pitch <= 2.0 * radius + 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "pitch {pitch} must exceed the tube diameter plus one voxel"
                )));
            }
            let c = centre(shape);
            let (z0, z1) = (MARGIN + radius, d[2] - 1.0 - MARGIN - radius);
            if z1 <= z0 {
                return Err(Error::DoesNotFit("helix has no room along z".into()));
            }
            let turns = (z1 - z0) / pitch;
            let arc = turns * 2.0 * std::f64::consts::PI * helix_radius.max(1.0) + (z1 - z0);
            let n = (arc * 4.0).ceil() as usize;
            let points = (0..=n)
                .map(|i| {
                    let s = i as f64 / n as f64;
                    let t = 2.0 * std::f64::consts::PI * turns * s;
                    [
                        c[0] + helix_radius * t.cos(),
                        c[1] + helix_radius * t.sin(),
                        z0 + s * (z1 - z0),
                    ]
                })
                .collect();
            vec![Branch {
                points,
                radius: *radius,
            }]
        }
        PhantomKind::Bifurcation { radius } => {
            for r in radius {
                check_radius(*r)?;
            }
            let c = centre(shape);
            let rmax = radius.iter().copied().fold(0.0, f64::max);
            let bottom = [c[0], c[1], MARGIN + radius[0]];
            let top = d[2] - 1.0 - MARGIN - rmax;
            let reach = ((c[0] - MARGIN - rmax).min(d[0] - 1.0 - MARGIN - rmax - c[0])).floor();
            let left = [c[0] - reach, c[1], top];
            let right = [c[0] + reach, c[1], top];
            vec![
                Branch {
                    points: vec![bottom, c],
                    radius: radius[0],
                },
                Branch {
                    points: vec![c, left],
                    radius: radius[1],
                },
                Branch {
                    points: vec![c, right],
                    radius: radius[2],
                },
            ]
        }
        PhantomKind::TwoTubes { radius } => {
            for r in radius {
                check_radius(*r)?;
            }
            open[2] = true;
            let c = centre(shape);
            let xs = [(shape.nx / 4) as f64, (3 * shape.nx / 4) as f64];
            if xs[1] - xs[0] <= radius[0] + radius[1] + 1.0 {
                return Err(Error::DoesNotFit("the two tubes would touch".into()));
            }
            xs.iter()
                .zip(radius)
                .map(|(&x, &r)| Branch {
                    points: vec![[x, c[1], -r - 1.0], [x, c[1], d[2] + r]],
                    radius: r,
                })
                .collect()
        }
    };
    Ok((out, open))
}

fn check_fit(branches: &[Branch], shape: Shape, open: [bool; 3]) -> Result<()> {
    let d = shape.dims().map(|n| n as f64);
    for b in branches {
        for p in &b.points {
            for a in 0..3 {
                if open[a] {
                    continue;
                }
                if p[a] - b.radius < MARGIN || p[a] + b.radius > d[a] - 1.0 - MARGIN {
                    return Err(Error::DoesNotFit(format!(
                        "structure comes within {MARGIN} voxels of the border along axis {a}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn rasterize_solid(branches: &[Branch], shape: Shape) -> BinaryVolume {
    let mut out = BinaryVolume::empty(shape);
    let dims = shape.dims();
    for b in branches {
        let r2 = b.radius * b.radius;
        for seg in b.points.windows(2) {
            let (a, c) = (seg[0], seg[1]);
            let range = |i: usize| {
                let lo = (a[i].min(c[i]) - b.radius).floor().max(0.0) as usize;
                let hi = ((a[i].max(c[i]) + b.radius).ceil().max(0.0) as usize).min(dims[i] - 1);
                lo..=hi
            };
            for z in range(2) {
                for y in range(1) {
                    for x in range(0) {
                        if dist2_to_segment([x as f64, y as f64, z as f64], a, c) < r2 {
                            out.set(x, y, z, true);
                        }
                    }
                }
            }
        }
    }
    out
}

fn rasterize_centerline(branches: &[Branch], shape: Shape) -> BinaryVolume {
    let mut out = BinaryVolume::empty(shape);
    let dims = shape.dims();
    for b in branches {
        for seg in b.points.windows(2) {
            let (a, c) = (seg[0], seg[1]);
            let span = (0..3).map(|i| (c[i] - a[i]).abs()).fold(0.0, f64::max);
            // steps of at most half a voxel keep rounded samples 26-adjacent
            let n = (2.0 * span).ceil().max(1.0) as usize;
            for s in 0..=n {
                let t = s as f64 / n as f64;
                let p: Vec<f64> = (0..3).map(|i| (a[i] + t * (c[i] - a[i])).round()).collect();
                if (0..3).all(|i| p[i] >= 0.0 && (p[i] as usize) < dims[i]) {
                    out.set(p[0] as usize, p[1] as usize, p[2] as usize, true);
                }
            }
        }
    }
    out
}

/// Draws the phantom and its ground truth. Noiseless output does not
/// depend on `seed`.
pub fn generate(spec: &PhantomSpec, seed: u64) -> Result<(Volume, GroundTruth)> {
    let shape = Shape::from_dims(spec.shape)?;
    let (branches, open) = branches(spec, shape)?;
    check_fit(&branches, shape, open)?;
    let solid = rasterize_solid(&branches, shape);
    let centerline = rasterize_centerline(&branches, shape);
    let truth = GroundTruth {
        centerline,
        betti: spec.analytic_betti(),
        max_radius: spec.max_radius(),
    };
    let mut volume = solid.to_volume();
    if let Some(noise) = &spec.noise {
        volume = add_noise(&volume, noise, seed)?;
    }
    Ok((volume, truth))
}

fn add_noise(v: &Volume, noise: &Noise, seed: u64) -> Result<Volume> {
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be non-negative, got {}",
            noise.sigma
        )));
    }
    if !(0.0..=1.0).contains(&noise.salt_pepper) {
        return Err(Error::InvalidParameter(format!(
            "salt-and-pepper fraction must lie in [0, 1], got {}",
            noise.salt_pepper
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise.sigma).expect("validated sigma");
    let mut data = v.data().to_vec();
    for x in data.iter_mut() {
        if noise.sigma > 0.0 {
            *x += gauss.sample(&mut rng);
        }
        if noise.salt_pepper > 0.0 && rng.random::<f64>() < noise.salt_pepper {
            *x = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
        *x = x.clamp(0.0, 1.0);
    }
    Volume::new(v.shape(), data)
}

/// Noiseless phantoms used throughout the tests: straight tubes of radius
/// 2 to 4, a torus, a helix, a bifurcation and two parallel tubes.
pub fn standard_suite() -> Vec<(String, PhantomSpec)> {
    let tube = |r: f64| PhantomKind::StraightTube {
        radius: r,
        axis: Axis::Z,
        length: Some(20.0),
        center: None,
    };
    vec![
        ("tube_r2".into(), PhantomSpec::new([24, 24, 36], tube(2.0))),
        ("tube_r3".into(), PhantomSpec::new([24, 24, 36], tube(3.0))),
        ("tube_r4".into(), PhantomSpec::new([24, 24, 36], tube(4.0))),
        (
            "tube_x_r3".into(),
            PhantomSpec::new(
                [36, 20, 20],
                PhantomKind::StraightTube {
                    radius: 3.0,
                    axis: Axis::X,
                    length: Some(20.0),
                    center: None,
                },
            ),
        ),
        (
            "torus".into(),
            PhantomSpec::new(
                [32, 32, 16],
                PhantomKind::Torus {
                    major_radius: 10.0,
                    radius: 3.0,
                    axis: Axis::Z,
                    center: None,
                },
            ),
        ),
        (
            "helix".into(),
            PhantomSpec::new(
                [32, 32, 40],
                PhantomKind::Helix {
                    radius: 2.0,
                    helix_radius: 7.0,
                    pitch: 12.0,
                },
            ),
        ),
        (
            "bifurcation".into(),
            PhantomSpec::new(
                [40, 16, 40],
                PhantomKind::Bifurcation {
                    radius: [3.0, 2.0, 2.0],
                },
            ),
        ),
        (
            "two_tubes".into(),
            PhantomSpec::new([32, 16, 24], PhantomKind::TwoTubes { radius: [2.0, 4.0] }),
        ),
    ]
}
