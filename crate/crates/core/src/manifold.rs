//! Catalog of compact targets isometrically embedded in Euclidean space.
//!
//! Every entry supplies closed forms for the closest-point map, the tangent
//! projector, the second fundamental form `II`, the shape operator `P` and the
//! Riemann tensor `R`. The curvature convention is
//! `R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`, so that the Gauss equation reads
//! `⟨R(X,Y)Z, W⟩ = ⟨II(X,W), II(Y,Z)⟩ - ⟨II(X,Z), II(Y,W)⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::CircleGrid;
use crate::spinor::CurveField;

const SINGULAR_RADIUS: f64 = 1e-12;

/// A catalog target manifold `N ⊂ ℝ^q`.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    /// Round sphere of the given radius in `ℝ^ambient` (codimension one).
    /// `ambient = 2` is a circle, `ambient = 3` the usual sphere.
    Sphere { ambient: usize, radius: f64 },
    /// Product of two circles of radius `1/√2` in `ℝ⁴`.
    CliffordTorus,
    /// Euclidean space `ℝ^q` itself.
    FlatSpace { dim: usize },
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Sphere { ambient: 2, radius } if *radius == 1.0 => write!(f, "unit_circle"),
            Manifold::Sphere { ambient, radius } => write!(f, "round_sphere(q={ambient}, r={radius})"),
            Manifold::CliffordTorus => write!(f, "clifford_torus"),
            Manifold::FlatSpace { dim } => write!(f, "flat_space({dim})"),
        }
    }
}

/// Parameters accepted by [`catalog`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CatalogParams {
    pub radius: Option<f64>,
    pub dim: Option<usize>,
}

/// Looks up a catalog manifold by name.
pub fn catalog(name: &str, params: CatalogParams) -> Result<Manifold> {
    match name {
        "unit_circle" => Ok(Manifold::Sphere {
            ambient: 2,
            radius: 1.0,
        }),
        "round_sphere" => {
            let radius = params.radius.unwrap_or(1.0);
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
            }
            Ok(Manifold::Sphere { ambient: 3, radius })
        }
        "clifford_torus" => Ok(Manifold::CliffordTorus),
        "flat_space" => {
            let dim = params.dim.unwrap_or(3);
            if dim == 0 {
                return Err(Error::Config("flat_space dimension must be positive".into()));
            }
            Ok(Manifold::FlatSpace { dim })
        }
        other => Err(Error::Config(format!("unknown manifold `{other}`"))),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Circle factors of the Clifford torus: coordinate ranges in `ℝ⁴`.
const TORUS_BLOCKS: [std::ops::Range<usize>; 2] = [0..2, 2..4];
const TORUS_RADIUS: f64 = FRAC_1_SQRT_2;

impl Manifold {
    pub fn name(&self) -> &'static str {
        match self {
            Manifold::Sphere { ambient: 2, .. } => "unit_circle",
            Manifold::Sphere { .. } => "round_sphere",
            Manifold::CliffordTorus => "clifford_torus",
            Manifold::FlatSpace { .. } => "flat_space",
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere { ambient, .. } => *ambient,
            Manifold::CliffordTorus => 4,
            Manifold::FlatSpace { dim } => *dim,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Sphere { ambient, .. } => ambient - 1,
            Manifold::CliffordTorus => 2,
            Manifold::FlatSpace { dim } => *dim,
        }
    }

    /// Nearest point of `N` to `p`. Fails on the singular set of the
    /// projection instead of clamping.
    pub fn closest_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p.len())?;
        match self {
            Manifold::Sphere { radius, .. } => {
                let norm = dot(p, p).sqrt();
                if norm < SINGULAR_RADIUS * radius {
                    return Err(Error::ProjectionSingularity(format!(
                        "point {p:?} is at the sphere centre"
                    )));
                }
                Ok(p.iter().map(|x| x * radius / norm).collect())
            }
            Manifold::CliffordTorus => {
                let mut out = p.to_vec();
                for block in TORUS_BLOCKS {
                    let norm = dot(&p[block.clone()], &p[block.clone()]).sqrt();
                    if norm < SINGULAR_RADIUS {
                        return Err(Error::ProjectionSingularity(format!(
                            "point {p:?} lies on a torus factor axis"
                        )));
                    }
                    for i in block {
                        out[i] = p[i] * TORUS_RADIUS / norm;
                    }
                }
                Ok(out)
            }
            Manifold::FlatSpace { .. } => Ok(p.to_vec()),
        }
    }

    /// Distance from `p` to `N`.
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            Manifold::Sphere { radius, .. } => (dot(p, p).sqrt() - radius).abs(),
            Manifold::CliffordTorus => TORUS_BLOCKS
                .iter()
                .map(|b| {
                    let r = dot(&p[b.clone()], &p[b.clone()]).sqrt() - TORUS_RADIUS;
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
            Manifold::FlatSpace { .. } => 0.0,
        }
    }

    /// Writes the tangential part of `v` at the point `p ∈ N` into `out`.
    pub fn project_tangent(&self, p: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        match self {
            Manifold::Sphere { radius, .. } => {
                let c = dot(p, v) / (radius * radius);
                out.iter_mut().zip(p).for_each(|(o, x)| *o -= c * x);
            }
            Manifold::CliffordTorus => {
                for block in TORUS_BLOCKS {
                    let c = dot(&p[block.clone()], &v[block.clone()]) / (TORUS_RADIUS * TORUS_RADIUS);
                    for i in block {
                        out[i] -= c * p[i];
                    }
                }
            }
            Manifold::FlatSpace { .. } => {}
        }
    }

    /// Dense tangent projector at `p`.
    pub fn tangent_projector(&self, p: &[f64]) -> DMatrix<f64> {
        let q = self.ambient_dim();
        let mut m = DMatrix::zeros(q, q);
        let mut e = vec![0.0; q];
        let mut col = vec![0.0; q];
        for j in 0..q {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            self.project_tangent(p, &e, &mut col);
            for i in 0..q {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    /// Normal-valued second fundamental form `II_p(X, Y)` for tangent `X, Y`.
    pub fn second_fundamental_form(&self, p: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Manifold::Sphere { radius, .. } => {
                let c = -dot(x, y) / (radius * radius);
                out.iter_mut().zip(p).for_each(|(o, pi)| *o = c * pi);
            }
            Manifold::CliffordTorus => {
                for block in TORUS_BLOCKS {
                    let c = -dot(&x[block.clone()], &y[block.clone()]) / (TORUS_RADIUS * TORUS_RADIUS);
                    for i in block {
                        out[i] = c * p[i];
                    }
                }
            }
            Manifold::FlatSpace { .. } => {}
        }
    }

    /// Shape operator `P_p(ν, X)`, the tangent vector with
    /// `⟨P(ν, X), Y⟩ = ⟨ν, II(X, Y)⟩` for all tangent `Y`.
    pub fn shape_operator(&self, p: &[f64], nu: &[f64], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Manifold::Sphere { radius, .. } => {
                let c = -dot(nu, p) / (radius * radius);
                out.iter_mut().zip(x).for_each(|(o, xi)| *o = c * xi);
            }
            Manifold::CliffordTorus => {
                for block in TORUS_BLOCKS {
                    let c = -dot(&nu[block.clone()], &p[block.clone()]) / (TORUS_RADIUS * TORUS_RADIUS);
                    for i in block {
                        out[i] = c * x[i];
                    }
                }
            }
            Manifold::FlatSpace { .. } => {}
        }
    }

    /// Riemann tensor `R_p(X, Y)Z` on tangent vectors.
    pub fn curvature(&self, _p: &[f64], x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Sphere { radius, .. } => {
                let k = 1.0 / (radius * radius);
                let yz = dot(y, z);
                let xz = dot(x, z);
                for i in 0..out.len() {
                    out[i] = k * (yz * x[i] - xz * y[i]);
                }
            }
            // both factors are flat; the product metric is flat
            Manifold::CliffordTorus | Manifold::FlatSpace { .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
            }
        }
    }

    /// True if `p` lies on `N` to within `tol`.
    pub fn on_manifold(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.ambient_dim() && self.distance(p) <= tol
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.ambient_dim() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.ambient_dim(),
                got,
            })
        }
    }

    /// Nodal samples of the closed geodesic `s ↦ exp_p(s v)`.
    ///
    /// `velocity` must be tangent at `p`, and the geodesic must close up over
    /// `[0, 2π]`: on circle factors the angular speed has to be an integer.
    pub fn geodesic_fixture(&self, grid: &CircleGrid, p: &[f64], velocity: &[f64]) -> Result<CurveField> {
        self.check_dim(p.len())?;
        self.check_dim(velocity.len())?;
        if !self.on_manifold(p, 1e-10) {
            return Err(Error::Config(format!("base point {p:?} is not on {self}")));
        }
        let mut tangential = vec![0.0; velocity.len()];
        self.project_tangent(p, velocity, &mut tangential);
        let off: f64 = tangential
            .iter()
            .zip(velocity)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if off > 1e-10 * (1.0 + dot(velocity, velocity).sqrt()) {
            return Err(Error::Config("geodesic velocity is not tangent".into()));
        }
        let speed = dot(velocity, velocity).sqrt();
        let q = self.ambient_dim();
        let n = grid.len();
        let mut points = vec![0.0; n * q];
        match self {
            Manifold::Sphere { radius, .. } => {
                if speed == 0.0 {
                    for j in 0..n {
                        points[j * q..(j + 1) * q].copy_from_slice(p);
                    }
                } else {
                    let omega = integer_speed(speed / radius)?;
                    for j in 0..n {
                        let s = grid.node(j);
                        let (sn, cs) = (omega * s).sin_cos();
                        for i in 0..q {
                            points[j * q + i] = cs * p[i] + sn * radius * velocity[i] / speed;
                        }
                    }
                }
            }
            Manifold::CliffordTorus => {
                for block in TORUS_BLOCKS {
                    let (pb, vb) = (&p[block.clone()], &velocity[block.clone()]);
                    // angular speed with sign relative to the positive rotation
                    let omega = integer_speed((pb[0] * vb[1] - pb[1] * vb[0]) / (TORUS_RADIUS * TORUS_RADIUS))?;
                    for j in 0..n {
                        let (sn, cs) = (omega * grid.node(j)).sin_cos();
                        points[j * q + block.start] = cs * pb[0] - sn * pb[1];
                        points[j * q + block.start + 1] = sn * pb[0] + cs * pb[1];
                    }
                }
            }
            Manifold::FlatSpace { .. } => {
                if speed > 0.0 {
                    return Err(Error::Config(
                        "straight lines in flat space do not close up over the circle".into(),
                    ));
                }
                for j in 0..n {
                    points[j * q..(j + 1) * q].copy_from_slice(p);
                }
            }
        }
        CurveField::new(grid.clone(), self.clone(), points)
    }
}

fn integer_speed(omega: f64) -> Result<f64> {
    if (omega - omega.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "geodesic with angular speed {omega} does not close over [0, 2π]"
        )));
    }
    Ok(omega.round())
}
