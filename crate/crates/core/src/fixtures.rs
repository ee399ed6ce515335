//! Named initial data: geodesics, stationary pairs, explicit mode lists and
//! seeded band-limited random perturbations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::spectral::{CircleGrid, ModeVector, SpinStructure};
use crate::spinor::{construct_stationary, CurveField, SpinorField};

/// Shape of a random band-limited perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    /// Scale of the ambient curve perturbation before projection.
    pub amplitude: f64,
    /// Highest frequency used, `|λ| ≤ max_mode`.
    pub max_mode: usize,
    pub spinor_amplitude: f64,
    /// Restrict the curve perturbation to odd frequencies, which keeps the
    /// antipodal symmetry `u(s + π) = -u(s)` of a great circle.
    pub odd_modes: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.3,
            max_mode: 4,
            spinor_amplitude: 0.5,
            odd_modes: false,
        }
    }
}

impl RandomSpec {
    fn check(&self, n: usize) -> Result<()> {
        if self.max_mode == 0 || self.max_mode > n / 4 {
            return Err(Error::Config(format!(
                "max_mode must lie in 1..={} for n = {n}, got {}",
                n / 4,
                self.max_mode
            )));
        }
        if !(self.amplitude >= 0.0 && self.spinor_amplitude >= 0.0) {
            return Err(Error::Config("perturbation amplitudes must be non-negative".into()));
        }
        Ok(())
    }
}

/// Reference closed curve that random perturbations start from: a great
/// circle on spheres, the (1,1) winding on the torus, the unit circle in the
/// first plane of flat space.
fn reference_point(m: &Manifold, s: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let (sn, cs) = s.sin_cos();
    match m {
        Manifold::Sphere { radius, .. } => {
            out[0] = radius * cs;
            out[1] = radius * sn;
        }
        Manifold::CliffordTorus => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            out.copy_from_slice(&[r * cs, r * sn, r * cs, r * sn]);
        }
        Manifold::FlatSpace { dim } => {
            out[0] = cs;
            if *dim > 1 {
                out[1] = sn;
            }
        }
    }
}

/// Seeded band-limited perturbation of the reference curve, projected to `N`.
pub fn random_curve(m: &Manifold, n: usize, spec: &RandomSpec, seed: u64) -> Result<CurveField> {
    spec.check(n)?;
    let grid = CircleGrid::new(n)?;
    let q = m.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::new();
    for _ in 0..q {
        for k in 0..=spec.max_mode {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if spec.odd_modes && k % 2 == 0 {
                continue;
            }
            coeffs.push((k as f64, a, b));
        }
    }
    let per_component = coeffs.len() / q;
    let mut points = vec![0.0; n * q];
    for j in 0..n {
        let s = grid.node(j);
        let node = &mut points[j * q..(j + 1) * q];
        reference_point(m, s, node);
        for (c, x) in node.iter_mut().enumerate() {
            for &(k, a, b) in &coeffs[c * per_component..(c + 1) * per_component] {
                let (sn, cs) = (k * s).sin_cos();
                *x += spec.amplitude * (a * cs + b * sn) / (1.0 + k * k);
            }
        }
    }
    CurveField::projected(grid, m.clone(), points)
}

/// Seeded band-limited spinor tangent along `base`.
pub fn random_spinor(base: &CurveField, spin: SpinStructure, spec: &RandomSpec, seed: u64) -> Result<SpinorField> {
    let grid = base.grid();
    let n = grid.len();
    spec.check(n)?;
    let q = base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let shift = spin.frequency_shift();
    let top = spec.max_mode as i64;
    let mut values = vec![Complex64::new(0.0, 0.0); n * q];
    for a in 0..q {
        let mut modes = Vec::new();
        for k in -top - 1..=top {
            let lambda = k as f64 + shift;
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if lambda.abs() <= spec.max_mode as f64 {
                modes.push((lambda, z * spec.spinor_amplitude / (1.0 + lambda * lambda)));
            }
        }
        let col = grid.inverse_transform(&ModeVector::from_modes(n, spin, &modes)?)?;
        for (j, z) in col.into_iter().enumerate() {
            values[j * q + a] = z;
        }
    }
    SpinorField::tangent_to(base, spin, values)
}

/// Initial data selectable by name in run configurations.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Equator of a sphere (or the unit circle itself), `ψ = 0`.
    GreatCircle,
    /// Latitude circle at height `z0` on a sphere, `ψ = 0`.
    Latitude { z0: f64 },
    /// Great circle with `ψ = ∂_s·χ ⊗ γ'` for constant `χ`.
    StationaryPair { chi: Complex64 },
    /// Closed torus geodesic winding `p` and `q` times around the factors.
    TorusWinding { p: i64, q: i64 },
    /// Unit-circle target only: curve angle `s + Re Σ a_k e^{iks}` and
    /// spinor `φ·T` with `φ = Σ b_λ e^{iλs}` and unit tangent `T`.
    ExplicitModes {
        angle: Vec<(i64, Complex64)>,
        spinor: Vec<(f64, Complex64)>,
    },
    /// Seeded random perturbation of the reference curve.
    RandomPerturbation { spec: RandomSpec, seed: u64 },
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::GreatCircle => "great_circle",
            InitialData::Latitude { .. } => "latitude",
            InitialData::StationaryPair { .. } => "stationary_pair",
            InitialData::TorusWinding { .. } => "torus_winding",
            InitialData::ExplicitModes { .. } => "explicit_modes",
            InitialData::RandomPerturbation { .. } => "random_perturbation",
        }
    }

    pub fn build(&self, m: &Manifold, n: usize, spin: SpinStructure) -> Result<(CurveField, SpinorField)> {
        let grid = CircleGrid::new(n)?;
        let q = m.ambient_dim();
        let zero = SpinorField::zeros(grid.clone(), spin, q);
        match self {
            InitialData::GreatCircle => Ok((great_circle(m, &grid)?, zero)),
            InitialData::Latitude { z0 } => {
                let Manifold::Sphere { ambient: 3, radius } = m else {
                    return Err(Error::Config("latitude needs round_sphere".into()));
                };
                if !(z0.abs() < *radius) {
                    return Err(Error::Config(format!("latitude height {z0} outside (-r, r)")));
                }
                let rho = (radius * radius - z0 * z0).sqrt();
                let pts = grid
                    .nodes()
                    .iter()
                    .flat_map(|&s| [rho * s.cos(), rho * s.sin(), *z0])
                    .collect();
                Ok((CurveField::new(grid, m.clone(), pts)?, zero))
            }
            InitialData::StationaryPair { chi } => {
                let base = great_circle(m, &grid)?;
                let psi = construct_stationary(&base, &vec![*chi; n], spin)?;
                Ok((base, psi))
            }
            InitialData::TorusWinding { p, q: w } => {
                if *m != Manifold::CliffordTorus {
                    return Err(Error::Config("torus_winding needs clifford_torus".into()));
                }
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let v = [0.0, r * *p as f64, 0.0, r * *w as f64];
                Ok((m.geodesic_fixture(&grid, &[r, 0.0, r, 0.0], &v)?, zero))
            }
            InitialData::ExplicitModes { angle, spinor } => explicit_modes(m, &grid, spin, angle, spinor),
            InitialData::RandomPerturbation { spec, seed } => {
                let base = random_curve(m, n, spec, *seed)?;
                let psi = random_spinor(&base, spin, spec, seed.wrapping_add(1))?;
                Ok((base, psi))
            }
        }
    }
}

fn great_circle(m: &Manifold, grid: &CircleGrid) -> Result<CurveField> {
    match m {
        Manifold::Sphere { ambient, radius } => {
            let mut p = vec![0.0; *ambient];
            let mut v = vec![0.0; *ambient];
            p[0] = *radius;
            v[1] = *radius;
            m.geodesic_fixture(grid, &p, &v)
        }
        Manifold::CliffordTorus => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            m.geodesic_fixture(grid, &[r, 0.0, r, 0.0], &[0.0, r, 0.0, 0.0])
        }
        Manifold::FlatSpace { .. } => Err(Error::Config("flat space has no closed geodesics".into())),
    }
}

/// Angle perturbation `Re Σ a_k e^{iks}` as a real periodic field.
pub fn angle_field(grid: &CircleGrid, angle: &[(i64, Complex64)]) -> Result<Vec<f64>> {
    let modes: Vec<(f64, Complex64)> = angle.iter().map(|&(k, a)| (k as f64, a)).collect();
    Ok(grid
        .inverse_transform(&ModeVector::from_modes(grid.len(), SpinStructure::Periodic, &modes)?)?
        .into_iter()
        .map(|z| z.re)
        .collect())
}

fn explicit_modes(
    m: &Manifold,
    grid: &CircleGrid,
    spin: SpinStructure,
    angle: &[(i64, Complex64)],
    spinor: &[(f64, Complex64)],
) -> Result<(CurveField, SpinorField)> {
    if !matches!(m, Manifold::Sphere { ambient: 2, radius } if *radius == 1.0) {
        return Err(Error::Config("explicit_modes needs the unit_circle target".into()));
    }
    let n = grid.len();
    let theta: Vec<f64> = angle_field(grid, angle)?
        .into_iter()
        .zip(grid.nodes())
        .map(|(a, s)| s + a)
        .collect();
    let phi = grid.inverse_transform(&ModeVector::from_modes(n, spin, spinor)?)?;
    let pts = theta.iter().flat_map(|t| [t.cos(), t.sin()]).collect();
    let vals = theta
        .iter()
        .zip(&phi)
        .flat_map(|(t, f)| [-t.sin() * f, t.cos() * f])
        .collect();
    let curve = CurveField::new(grid.clone(), m.clone(), pts)?;
    let psi = SpinorField::new(grid.clone(), spin, 2, vals)?;
    Ok((curve, psi))
}
