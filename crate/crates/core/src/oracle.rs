//! Slow reference implementations: finite-difference gradients, a spherical
//! chart with its own Christoffel symbols, and dense operator spectra.
//!
//! Nothing here reuses the spectral or curvature code of the main path apart
//! from the field types and the energy being probed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::energy::{energies, l2_gradient, StateDirection};
use crate::error::{Error, Result};
use crate::fixtures::{random_spinor, RandomSpec};
use crate::manifold::Manifold;
use crate::spectral::SpinStructure;
use crate::spinor::{twisted_dirac, twisted_laplacian, CurveField, SpinorField, VectorField};

/// Smallest admissible `sin θ` of the spherical chart.
pub const CHART_MIN_SIN: f64 = 0.1;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of `T_pN`, from projected coordinate vectors.
pub fn tangent_frame(m: &Manifold, p: &[f64]) -> Vec<Vec<f64>> {
    let q = m.ambient_dim();
    let mut frame: Vec<Vec<f64>> = Vec::new();
    let mut e = vec![0.0; q];
    let mut v = vec![0.0; q];
    for i in 0..q {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[i] = 1.0;
        m.project_tangent(p, &e, &mut v);
        for f in &frame {
            let c = dot(&v, f);
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= c * b);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            frame.push(v.iter().map(|x| x / norm).collect());
        }
    }
    frame
}

/// Central finite differences of the discrete `E_ε` under per-node
/// perturbations: curve nodes move along a tangent frame and are re-projected
/// (dragging the spinor value with them), spinor values move along the frame
/// and its `i`-multiple.
pub fn fd_energy_gradient(curve: &CurveField, psi: &SpinorField, eps: f64, h: f64) -> Result<StateDirection> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Domain(format!("probe size must lie in [1e-7, 1e-3], got {h}")));
    }
    let m = curve.manifold();
    let n = curve.len();
    let q = curve.dim();
    let w = curve.grid().weight();
    let energy = |c: &CurveField, s: &SpinorField| -> Result<f64> { Ok(energies(c, s, eps)?.energy_eps) };
    let mut g_curve = VectorField::zeros(n, q);
    let mut g_spinor = SpinorField::zeros(curve.grid().clone(), psi.spin(), q);
    let mut tmp = vec![0.0; q];
    for j in 0..n {
        let frame = tangent_frame(m, curve.point(j));
        for e in &frame {
            let mut diff = 0.0;
            for sign in [1.0, -1.0] {
                let mut pts = curve.points().data().to_vec();
                pts[j * q..(j + 1) * q]
                    .iter_mut()
                    .zip(e)
                    .for_each(|(x, d)| *x += sign * h * d);
                let moved = CurveField::projected(curve.grid().clone(), m.clone(), pts)?;
                let mut vals = psi.values().to_vec();
                let node = &mut vals[j * q..(j + 1) * q];
                for part in 0..2 {
                    let comp: Vec<f64> = node.iter().map(|z| if part == 0 { z.re } else { z.im }).collect();
                    m.project_tangent(moved.point(j), &comp, &mut tmp);
                    for (z, t) in node.iter_mut().zip(&tmp) {
                        if part == 0 {
                            z.re = *t;
                        } else {
                            z.im = *t;
                        }
                    }
                }
                let spinor = SpinorField::new(curve.grid().clone(), psi.spin(), q, vals)?;
                diff += sign * energy(&moved, &spinor)?;
            }
            let c = diff / (2.0 * h * w);
            g_curve.node_mut(j).iter_mut().zip(e).for_each(|(g, d)| *g += c * d);
        }
        for e in &frame {
            for unit in [Complex64::new(1.0, 0.0), Complex64::i()] {
                let mut diff = 0.0;
                for sign in [1.0, -1.0] {
                    let mut vals = psi.values().to_vec();
                    for (z, d) in vals[j * q..(j + 1) * q].iter_mut().zip(e) {
                        *z += unit * (sign * h * d);
                    }
                    let spinor = SpinorField::new(curve.grid().clone(), psi.spin(), q, vals)?;
                    diff += sign * energy(curve, &spinor)?;
                }
                let c = diff / (2.0 * h * w);
                for (g, d) in g_spinor.node_mut(j).iter_mut().zip(e) {
                    *g += unit * (c * d);
                }
            }
        }
    }
    Ok(StateDirection {
        curve: g_curve,
        spinor: g_spinor,
    })
}

/// Relative mismatch between a central difference of `E_ε` along
/// `δ = g + r` and `⟨l2_gradient, δ⟩`, where `g` is the analytic gradient
/// and `r` a seeded smooth tangent field with `‖r‖ = ½‖g‖`.
///
/// The curve moves by `proj(u + hη)` and the spinor by
/// `P(u_h)(ψ + hχ)`, so that the covariant variation of `ψ` is `χ`.
pub fn directional_derivative_error(curve: &CurveField, psi: &SpinorField, eps: f64, h: f64, seed: u64) -> Result<f64> {
    let g = l2_gradient(curve, psi, eps)?;
    let spec = RandomSpec {
        spinor_amplitude: 1.0,
        max_mode: 3.min(curve.len() / 4),
        ..RandomSpec::default()
    };
    let r_curve = random_spinor(curve, SpinStructure::Periodic, &spec, seed ^ 0xc0ffee)?.real_part();
    let r_spinor = random_spinor(curve, psi.spin(), &spec, seed ^ 0xbeef)?;
    let grid = curve.grid();
    let r_norm = (r_curve.l2_inner(&r_curve, grid) + r_spinor.l2_norm().powi(2)).sqrt();
    let scale = if r_norm > 0.0 { 0.5 * g.l2_norm() / r_norm } else { 0.0 };
    let dir = StateDirection {
        curve: g.curve.axpy(scale, &r_curve),
        spinor: g.spinor.axpy(scale, &r_spinor),
    };
    let analytic = g.l2_inner(&dir)?;
    let mut fd = 0.0;
    for sign in [1.0, -1.0] {
        let pts: Vec<f64> = curve
            .points()
            .data()
            .iter()
            .zip(dir.curve.data())
            .map(|(x, d)| x + sign * h * d)
            .collect();
        let moved = CurveField::projected(grid.clone(), curve.manifold().clone(), pts)?;
        let vals: Vec<Complex64> = psi
            .values()
            .iter()
            .zip(dir.spinor.values())
            .map(|(z, d)| z + d * (sign * h))
            .collect();
        let spinor = SpinorField::tangent_to(&moved, psi.spin(), vals)?;
        fd += sign * energies(&moved, &spinor, eps)?.energy_eps;
    }
    fd /= 2.0 * h;
    if analytic == 0.0 {
        return Ok(fd.abs());
    }
    Ok((fd - analytic).abs() / analytic.abs())
}

/// Naive `O(n²)` Fourier derivative of order `order` on the spin
/// structure's frequency set; the σ₁ Nyquist mode is dropped.
fn naive_derivative(values: &[Complex64], spin: SpinStructure, order: u32) -> Vec<Complex64> {
    let n = values.len();
    let nodes: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let half = (n / 2) as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in -half..half {
        if spin == SpinStructure::Periodic && k == -half {
            continue;
        }
        let lam = k as f64 + spin.frequency_shift();
        let coef: Complex64 = values
            .iter()
            .zip(&nodes)
            .map(|(v, s)| v * Complex64::from_polar(1.0, -lam * s))
            .sum::<Complex64>()
            / n as f64;
        let factor = Complex64::new(0.0, lam).powu(order);
        for (o, s) in out.iter_mut().zip(&nodes) {
            *o += coef * factor * Complex64::from_polar(1.0, lam * s);
        }
    }
    out
}

fn naive_real_derivative(values: &[f64], order: u32) -> Vec<f64> {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    naive_derivative(&c, SpinStructure::Periodic, order)
        .into_iter()
        .map(|z| z.re)
        .collect()
}

/// Spherical coordinates `(θ, φ)` on a round sphere of radius `r`, with
/// `x = r(sinθ cosφ, sinθ sinφ, cosθ)`, restricted to `sin θ ≥ 0.1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereChart {
    pub radius: f64,
}

/// Chart data at one point: coordinates, coordinate frame in `ℝ³` and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFrame {
    pub theta: f64,
    pub phi: f64,
    /// `∂_θ` and `∂_φ` as ambient vectors.
    pub basis: [[f64; 3]; 2],
    /// Diagonal metric `(r², r² sin²θ)`.
    pub metric: [f64; 2],
}

impl ChartFrame {
    /// Ambient vector `v^i ∂_i`.
    pub fn push_forward(&self, v: [f64; 2]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, c) in v.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(&self.basis[i]) {
                *o += c * b;
            }
        }
        out
    }

    /// Chart components of a tangent ambient vector.
    pub fn pull_back(&self, x: &[f64]) -> [f64; 2] {
        [
            dot(x, &self.basis[0]) / self.metric[0],
            dot(x, &self.basis[1]) / self.metric[1],
        ]
    }

    /// Ratio of the largest to the smallest singular value of the frame.
    pub fn condition_number(&self) -> f64 {
        let a = self.metric[0].sqrt();
        let b = self.metric[1].sqrt();
        a.max(b) / a.min(b)
    }
}

impl SphereChart {
    pub fn for_manifold(m: &Manifold) -> Result<Self> {
        match m {
            Manifold::Sphere { ambient: 3, radius } => Ok(Self { radius: *radius }),
            other => Err(Error::ChartDomain(format!("no spherical chart on {other}"))),
        }
    }

    pub fn frame(&self, p: &[f64]) -> Result<ChartFrame> {
        let r = self.radius;
        let theta = (p[2] / r).clamp(-1.0, 1.0).acos();
        let (st, ct) = theta.sin_cos();
        if st < CHART_MIN_SIN {
            return Err(Error::ChartDomain(format!("point {p:?} is inside a polar cap")));
        }
        let phi = p[1].atan2(p[0]);
        let (sp, cp) = phi.sin_cos();
        Ok(ChartFrame {
            theta,
            phi,
            basis: [[r * ct * cp, r * ct * sp, -r * st], [-r * st * sp, r * st * cp, 0.0]],
            metric: [r * r, r * r * st * st],
        })
    }

    /// `Γ^k_{ij}` at colatitude `θ`, indexed `[k][i][j]`.
    pub fn christoffel(theta: f64) -> [[[f64; 2]; 2]; 2] {
        let (s, c) = theta.sin_cos();
        let mut g = [[[0.0; 2]; 2]; 2];
        g[0][1][1] = -s * c;
        g[1][0][1] = c / s;
        g[1][1][0] = c / s;
        g
    }

    /// `∂_p Γ^k_{ij}`, indexed `[p][k][i][j]`; only `θ`-derivatives survive.
    pub fn christoffel_derivative(theta: f64) -> [[[[f64; 2]; 2]; 2]; 2] {
        let s = theta.sin();
        let mut d = [[[[0.0; 2]; 2]; 2]; 2];
        d[0][0][1][1] = -(2.0 * theta).cos();
        d[0][1][0][1] = -1.0 / (s * s);
        d[0][1][1][0] = -1.0 / (s * s);
        d
    }

    /// `R^m_{lij}` with `R(∂_i, ∂_j)∂_l = R^m_{lij} ∂_m`, indexed `[m][l][i][j]`,
    /// from `R^m_{lij} = ∂_iΓ^m_{jl} − ∂_jΓ^m_{il} + Γ^m_{ik}Γ^k_{jl} − Γ^m_{jk}Γ^k_{il}`.
    pub fn riemann(theta: f64) -> [[[[f64; 2]; 2]; 2]; 2] {
        let g = Self::christoffel(theta);
        let dg = Self::christoffel_derivative(theta);
        let mut r = [[[[0.0; 2]; 2]; 2]; 2];
        for m in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = dg[i][m][j][l] - dg[j][m][i][l];
                        for k in 0..2 {
                            v += g[m][i][k] * g[k][j][l] - g[m][j][k] * g[k][i][l];
                        }
                        r[m][l][i][j] = v;
                    }
                }
            }
        }
        r
    }
}

/// Chart coordinates and their derivatives along a curve; `φ` is unwrapped
/// and its winding split off before differentiating.
struct ChartCurve {
    frames: Vec<ChartFrame>,
    /// `γ'^i` per node.
    d1: Vec<[f64; 2]>,
    /// `γ''^i` per node.
    d2: Vec<[f64; 2]>,
}

fn chart_curve(chart: &SphereChart, curve: &CurveField) -> Result<ChartCurve> {
    let n = curve.len();
    let frames: Vec<ChartFrame> = (0..n).map(|j| chart.frame(curve.point(j))).collect::<Result<_>>()?;
    let theta: Vec<f64> = frames.iter().map(|f| f.theta).collect();
    let mut phi: Vec<f64> = frames.iter().map(|f| f.phi).collect();
    for j in 1..n {
        while phi[j] - phi[j - 1] > PI {
            phi[j] -= 2.0 * PI;
        }
        while phi[j] - phi[j - 1] < -PI {
            phi[j] += 2.0 * PI;
        }
    }
    let mut closing = phi[0] - phi[n - 1];
    while closing > PI {
        closing -= 2.0 * PI;
    }
    while closing < -PI {
        closing += 2.0 * PI;
    }
    let winding = ((phi[n - 1] + closing - phi[0]) / (2.0 * PI)).round();
    let nodes: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let periodic: Vec<f64> = phi.iter().zip(&nodes).map(|(p, s)| p - winding * s).collect();
    let t1 = naive_real_derivative(&theta, 1);
    let t2 = naive_real_derivative(&theta, 2);
    let p1 = naive_real_derivative(&periodic, 1);
    let p2 = naive_real_derivative(&periodic, 2);
    Ok(ChartCurve {
        frames,
        d1: (0..n).map(|j| [t1[j], p1[j] + winding]).collect(),
        d2: (0..n).map(|j| [t2[j], p2[j]]).collect(),
    })
}

/// Chart components `ψ^i` of a spinor along the curve.
fn chart_spinor(cc: &ChartCurve, psi: &SpinorField) -> [Vec<Complex64>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (j, f) in cc.frames.iter().enumerate() {
        let node = psi.node(j);
        for i in 0..2 {
            let c: Complex64 = node.iter().zip(&f.basis[i]).map(|(z, b)| z * b).sum();
            out[i].push(c / f.metric[i]);
        }
    }
    out
}

fn ambient_field(frames: &[ChartFrame], comps: &[[f64; 2]]) -> VectorField {
    let data = frames.iter().zip(comps).flat_map(|(f, c)| f.push_forward(*c)).collect();
    VectorField::from_data(3, data)
}

/// Tension in chart form, `τ^m = γ''^m + Γ^m_{jk} γ'^j γ'^k`.
pub fn chart_tension(curve: &CurveField) -> Result<VectorField> {
    let chart = SphereChart::for_manifold(curve.manifold())?;
    let cc = chart_curve(&chart, curve)?;
    let comps: Vec<[f64; 2]> = (0..curve.len())
        .map(|j| {
            let g = SphereChart::christoffel(cc.frames[j].theta);
            let v = cc.d1[j];
            let mut t = cc.d2[j];
            for (m, tm) in t.iter_mut().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        *tm += g[m][a][b] * v[a] * v[b];
                    }
                }
            }
            t
        })
        .collect();
    Ok(ambient_field(&cc.frames, &comps))
}

/// `𝓡^m = ½ R^m_{lij} γ'^l ⟨ψ^i, ∂_s·ψ^j⟩` in the spherical chart, pushed
/// forward to `ℝ³`.
pub fn chart_curvature_term(curve: &CurveField, psi: &SpinorField) -> Result<VectorField> {
    let chart = SphereChart::for_manifold(curve.manifold())?;
    let cc = chart_curve(&chart, curve)?;
    let comps = chart_spinor(&cc, psi);
    let out: Vec<[f64; 2]> = (0..curve.len())
        .map(|j| {
            let r = SphereChart::riemann(cc.frames[j].theta);
            let mut v = [0.0; 2];
            for (m, vm) in v.iter_mut().enumerate() {
                for l in 0..2 {
                    for i in 0..2 {
                        for k in 0..2 {
                            let pair = (comps[i][j].conj() * Complex64::i() * comps[k][j]).re;
                            *vm += 0.5 * r[m][l][i][k] * cc.d1[j][l] * pair;
                        }
                    }
                }
            }
            v
        })
        .collect();
    Ok(ambient_field(&cc.frames, &out))
}

/// Connection Laplacian from its coordinate expansion
/// `ψ^k'' + ∂_pΓ^k_{ij}γ'^pγ'^iψ^j + Γ^k_{ij}γ''^iψ^j + 2Γ^k_{ij}γ'^iψ^j'
///  + Γ^k_{ij}Γ^j_{rt}γ'^iγ'^rψ^t`.
pub fn chart_laplacian(curve: &CurveField, psi: &SpinorField) -> Result<SpinorField> {
    let chart = SphereChart::for_manifold(curve.manifold())?;
    let cc = chart_curve(&chart, curve)?;
    let comps = chart_spinor(&cc, psi);
    let spin = psi.spin();
    let d1 = [
        naive_derivative(&comps[0], spin, 1),
        naive_derivative(&comps[1], spin, 1),
    ];
    let d2 = [
        naive_derivative(&comps[0], spin, 2),
        naive_derivative(&comps[1], spin, 2),
    ];
    let n = curve.len();
    let mut values = Vec::with_capacity(3 * n);
    for j in 0..n {
        let theta = cc.frames[j].theta;
        let g = SphereChart::christoffel(theta);
        let dg = SphereChart::christoffel_derivative(theta);
        let v = cc.d1[j];
        let a = cc.d2[j];
        let mut lap = [Complex64::new(0.0, 0.0); 2];
        for (k, lk) in lap.iter_mut().enumerate() {
            *lk += d2[k][j];
            for i in 0..2 {
                for jj in 0..2 {
                    for p in 0..2 {
                        *lk += dg[p][k][i][jj] * v[p] * v[i] * comps[jj][j];
                    }
                    *lk += g[k][i][jj] * a[i] * comps[jj][j];
                    *lk += 2.0 * g[k][i][jj] * v[i] * d1[jj][j];
                    for r in 0..2 {
                        for t in 0..2 {
                            *lk += g[k][i][jj] * g[jj][r][t] * v[i] * v[r] * comps[t][j];
                        }
                    }
                }
            }
        }
        let b = &cc.frames[j].basis;
        for x in 0..3 {
            values.push(lap[0] * b[0][x] + lap[1] * b[1][x]);
        }
    }
    SpinorField::new(curve.grid().clone(), spin, 3, values)
}

/// Operators available to [`dense_operator_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseOperator {
    Dirac,
    Laplacian,
    /// `εΔ̃ − D`
    Regularized,
}

/// Dense matrix of an operator on the tangency subspace, with its spectrum.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub matrix: DMatrix<f64>,
    /// `max |M − Mᵀ|`
    pub symmetry_defect: f64,
    /// Eigenvalues of the symmetric part, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns, in basis coordinates.
    pub eigenvectors: DMatrix<f64>,
    /// Nodal tangent fields, one per basis coordinate.
    pub basis: Vec<SpinorField>,
}

/// Largest side allowed for dense assembly.
pub const DENSE_LIMIT: usize = 4096;

/// Assembles the operator against an `L²`-orthonormal basis of tangent
/// nodal fields: per node, an orthonormal tangent frame and its `i`-multiple,
/// scaled by `1/√w`.
pub fn dense_operator_matrix(
    op: DenseOperator,
    curve: &CurveField,
    eps: f64,
    spin: SpinStructure,
) -> Result<DenseSpectrum> {
    let n = curve.len();
    let q = curve.dim();
    if n * 2 * q > DENSE_LIMIT {
        return Err(Error::Resource(format!(
            "dense operator of side {} exceeds the limit {DENSE_LIMIT}",
            n * 2 * q
        )));
    }
    let scale = 1.0 / curve.grid().weight().sqrt();
    let mut basis = Vec::new();
    for j in 0..n {
        for e in tangent_frame(curve.manifold(), curve.point(j)) {
            for unit in [Complex64::new(1.0, 0.0), Complex64::i()] {
                let mut f = SpinorField::zeros(curve.grid().clone(), spin, q);
                for (z, d) in f.node_mut(j).iter_mut().zip(&e) {
                    *z = unit * (scale * d);
                }
                basis.push(f);
            }
        }
    }
    let dim = basis.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (c, b) in basis.iter().enumerate() {
        let image = match op {
            DenseOperator::Dirac => twisted_dirac(curve, b)?,
            DenseOperator::Laplacian => twisted_laplacian(curve, b)?,
            DenseOperator::Regularized => twisted_laplacian(curve, b)?
                .scaled(Complex64::new(eps, 0.0))
                .axpy(-1.0, &twisted_dirac(curve, b)?),
        };
        for (r, a) in basis.iter().enumerate() {
            matrix[(r, c)] = crate::spinor::inner_l2(a, &image)?;
        }
    }
    let symmetry_defect = (&matrix - matrix.transpose()).abs().max();
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(DenseSpectrum {
        matrix,
        symmetry_defect,
        eigenvalues,
        eigenvectors,
        basis,
    })
}

impl DenseSpectrum {
    /// Nodal field of eigenvector `k`.
    pub fn eigenfield(&self, k: usize) -> SpinorField {
        let mut out = self.basis[0].scaled(Complex64::new(0.0, 0.0));
        for (i, b) in self.basis.iter().enumerate() {
            out = out.axpy(self.eigenvectors[(i, k)], b);
        }
        out
    }
}
