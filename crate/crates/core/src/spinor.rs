//! Discrete curves into the target and twisted spinor fields along them.
//!
//! Spinors are stored extrinsically: one complex `q`-vector per node whose
//! real and imaginary parts are tangent to `N` at the base point. Clifford
//! multiplication by the circle's unit tangent is multiplication by `i`.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::manifold::Manifold;
use crate::spectral::{CircleGrid, SpinStructure};

/// Tolerance above which a spinor is rejected as non-tangent.
pub const TANGENCY_LIMIT: f64 = 1e-6;
/// Tolerance on the distance of curve nodes to the target.
pub const CONSTRAINT_LIMIT: f64 = 1e-10;

/// Real `q`-vector per node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    q: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(n: usize, q: usize) -> Self {
        Self {
            q,
            data: vec![0.0; n * q],
        }
    }

    pub fn from_data(q: usize, data: Vec<f64>) -> Self {
        debug_assert!(q > 0 && data.len() % q == 0);
        Self { q, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.data[j * self.q..(j + 1) * self.q]
    }

    pub fn node_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.q..(j + 1) * self.q]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// `max_j |v_j|`.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len())
            .map(|j| self.node(j).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Trapezoidal `∫ ⟨v, w⟩ ds`.
    pub fn l2_inner(&self, other: &VectorField, grid: &CircleGrid) -> f64 {
        grid.weight() * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self, grid: &CircleGrid) -> f64 {
        self.l2_inner(self, grid).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q: self.q,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &VectorField) -> Self {
        Self {
            q: self.q,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub(crate) fn component(&self, a: usize) -> Vec<f64> {
        self.data.iter().skip(a).step_by(self.q).copied().collect()
    }

    pub(crate) fn set_component(&mut self, a: usize, values: &[f64]) {
        for (j, v) in values.iter().enumerate() {
            self.data[j * self.q + a] = *v;
        }
    }
}

/// Discrete closed curve `u = ι∘γ : S¹ → N ⊂ ℝ^q` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveField {
    grid: CircleGrid,
    manifold: Manifold,
    points: VectorField,
}

impl CurveField {
    /// Wraps node-major samples; every node must lie on the target.
    pub fn new(grid: CircleGrid, manifold: Manifold, points: Vec<f64>) -> Result<Self> {
        let q = manifold.ambient_dim();
        check_len(grid.len() * q, points.len())?;
        let curve = Self {
            grid,
            manifold,
            points: VectorField::from_data(q, points),
        };
        let drift = curve.constraint_violation();
        if !(drift <= CONSTRAINT_LIMIT) {
            return Err(Error::Integrity(format!("curve leaves the target by {drift:e}")));
        }
        Ok(curve)
    }

    /// Projects arbitrary samples onto the target node by node.
    pub fn projected(grid: CircleGrid, manifold: Manifold, points: Vec<f64>) -> Result<Self> {
        let q = manifold.ambient_dim();
        check_len(grid.len() * q, points.len())?;
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(q) {
            out.extend(manifold.closest_point(chunk)?);
        }
        Ok(Self {
            grid,
            manifold,
            points: VectorField::from_data(q, out),
        })
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> &[f64] {
        self.points.node(j)
    }

    pub fn points(&self) -> &VectorField {
        &self.points
    }

    /// Largest node distance to the target.
    pub fn constraint_violation(&self) -> f64 {
        (0..self.len())
            .map(|j| self.manifold.distance(self.point(j)))
            .fold(0.0, f64::max)
    }

    /// Spectral derivative `u'`.
    pub fn derivative(&self) -> Result<VectorField> {
        self.map_components(|g, c| g.differentiate_real(c))
    }

    /// Spectral second derivative `u''`.
    pub fn second_derivative(&self) -> Result<VectorField> {
        self.map_components(|g, c| {
            let cplx: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Ok(g.second_derivative(&cplx, SpinStructure::Periodic)?
                .into_iter()
                .map(|z| z.re)
                .collect())
        })
    }

    /// `|γ'|` per node.
    pub fn speeds(&self) -> Result<Vec<f64>> {
        let d = self.derivative()?;
        Ok((0..self.len())
            .map(|j| d.node(j).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect())
    }

    /// Tangential part of a vector field along the curve.
    pub fn project_tangent(&self, v: &VectorField) -> VectorField {
        let mut out = VectorField::zeros(self.len(), self.dim());
        for j in 0..self.len() {
            self.manifold.project_tangent(self.point(j), v.node(j), out.node_mut(j));
        }
        out
    }

    fn map_components<F>(&self, f: F) -> Result<VectorField>
    where
        F: Fn(&CircleGrid, &[f64]) -> Result<Vec<f64>>,
    {
        let mut out = VectorField::zeros(self.len(), self.dim());
        for a in 0..self.dim() {
            let col = f(&self.grid, &self.points.component(a))?;
            out.set_component(a, &col);
        }
        Ok(out)
    }
}

/// Section of `ΣS¹ ⊗ γ⁻¹TN`: complex `q`-vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: CircleGrid,
    spin: SpinStructure,
    q: usize,
    values: Vec<Complex64>,
}

impl SpinorField {
    pub fn new(grid: CircleGrid, spin: SpinStructure, q: usize, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid.len() * q, values.len())?;
        Ok(Self { grid, spin, q, values })
    }

    pub fn zeros(grid: CircleGrid, spin: SpinStructure, q: usize) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len() * q];
        Self { grid, spin, q, values }
    }

    /// Projects arbitrary complex vectors onto the tangent spaces of `base`.
    pub fn tangent_to(base: &CurveField, spin: SpinStructure, values: Vec<Complex64>) -> Result<Self> {
        let mut field = Self::new(base.grid().clone(), spin, base.dim(), values)?;
        field.retangentialize(base)?;
        Ok(field)
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn spin(&self) -> SpinStructure {
        self.spin
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.q..(j + 1) * self.q]
    }

    pub fn node_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.values[j * self.q..(j + 1) * self.q]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Real part as a vector field.
    pub fn real_part(&self) -> VectorField {
        VectorField::from_data(self.q, self.values.iter().map(|z| z.re).collect())
    }

    /// Imaginary part as a vector field.
    pub fn imag_part(&self) -> VectorField {
        VectorField::from_data(self.q, self.values.iter().map(|z| z.im).collect())
    }

    pub fn from_parts(&self, re: &VectorField, im: &VectorField) -> Self {
        Self {
            grid: self.grid.clone(),
            spin: self.spin,
            q: self.q,
            values: re
                .data()
                .iter()
                .zip(im.data())
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        }
    }

    /// `max_j |ψ_j|²`.
    pub fn sup_norm_sq(&self) -> f64 {
        pointwise_norm_sq(self).into_iter().fold(0.0, f64::max)
    }

    /// `max_j |ψ_j|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_sq().sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.integrate(&pointwise_norm_sq(self)).sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &SpinorField) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += c * b);
        out
    }

    /// Largest norm of the normal component, over nodes.
    pub fn tangency_defect(&self, base: &CurveField) -> Result<f64> {
        check_base(base, self)?;
        let mut worst = 0.0f64;
        let q = self.q;
        let mut re = vec![0.0; q];
        let mut im = vec![0.0; q];
        let mut t = vec![0.0; q];
        for j in 0..self.len() {
            for (a, z) in self.node(j).iter().enumerate() {
                re[a] = z.re;
                im[a] = z.im;
            }
            let mut defect = 0.0;
            for part in [&re, &im] {
                base.manifold().project_tangent(base.point(j), part, &mut t);
                defect += part.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            worst = worst.max(defect.sqrt());
        }
        Ok(worst)
    }

    /// Replaces every value by its tangential part at the base point.
    pub fn retangentialize(&mut self, base: &CurveField) -> Result<()> {
        check_base(base, self)?;
        let q = self.q;
        let mut re = vec![0.0; q];
        let mut im = vec![0.0; q];
        let mut tre = vec![0.0; q];
        let mut tim = vec![0.0; q];
        for j in 0..self.len() {
            for (a, z) in self.node(j).iter().enumerate() {
                re[a] = z.re;
                im[a] = z.im;
            }
            base.manifold().project_tangent(base.point(j), &re, &mut tre);
            base.manifold().project_tangent(base.point(j), &im, &mut tim);
            for (a, z) in self.node_mut(j).iter_mut().enumerate() {
                *z = Complex64::new(tre[a], tim[a]);
            }
        }
        Ok(())
    }

    pub(crate) fn component(&self, a: usize) -> Vec<Complex64> {
        self.values.iter().skip(a).step_by(self.q).copied().collect()
    }

    pub(crate) fn set_component(&mut self, a: usize, col: &[Complex64]) {
        for (j, v) in col.iter().enumerate() {
            self.values[j * self.q + a] = *v;
        }
    }

    /// Applies a grid operator componentwise.
    pub(crate) fn map_components<F>(&self, f: F) -> Result<SpinorField>
    where
        F: Fn(&CircleGrid, &[Complex64], SpinStructure) -> Result<Vec<Complex64>>,
    {
        let mut out = SpinorField::zeros(self.grid.clone(), self.spin, self.q);
        for a in 0..self.q {
            let col = f(&self.grid, &self.component(a), self.spin)?;
            out.set_component(a, &col);
        }
        Ok(out)
    }
}

pub(crate) fn check_base(base: &CurveField, psi: &SpinorField) -> Result<()> {
    if base.len() != psi.len() || base.dim() != psi.dim() {
        return Err(Error::Integrity(format!(
            "spinor ({} nodes, q={}) does not live over curve ({} nodes, q={})",
            psi.len(),
            psi.dim(),
            base.len(),
            base.dim()
        )));
    }
    Ok(())
}

fn check_pair(a: &SpinorField, b: &SpinorField) -> Result<()> {
    if a.len() != b.len() || a.dim() != b.dim() || a.spin != b.spin {
        return Err(Error::Integrity("spinor fields live over different bases".into()));
    }
    Ok(())
}

/// Clifford multiplication `∂_s·ψ = iψ`.
pub fn clifford_mul(psi: &SpinorField) -> SpinorField {
    psi.scaled(Complex64::i())
}

fn require_tangent(base: &CurveField, psi: &SpinorField) -> Result<()> {
    let defect = psi.tangency_defect(base)?;
    if !(defect <= TANGENCY_LIMIT) {
        return Err(Error::Integrity(format!(
            "spinor is not tangent to the target (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Covariant derivative `∇̃ψ`: spectral `d/ds` followed by the tangent
/// projector, on real and imaginary parts.
pub fn covariant_derivative(base: &CurveField, psi: &SpinorField) -> Result<SpinorField> {
    require_tangent(base, psi)?;
    let mut d = psi.map_components(|g, c, spin| g.differentiate(c, spin))?;
    d.retangentialize(base)?;
    Ok(d)
}

/// Twisted Dirac operator `Dψ = ∂_s·∇̃ψ`.
pub fn twisted_dirac(base: &CurveField, psi: &SpinorField) -> Result<SpinorField> {
    Ok(clifford_mul(&covariant_derivative(base, psi)?))
}

/// Connection Laplacian `Δ̃ψ = ∇̃∇̃ψ`.
pub fn twisted_laplacian(base: &CurveField, psi: &SpinorField) -> Result<SpinorField> {
    covariant_derivative(base, &covariant_derivative(base, psi)?)
}

/// Builds `ψ = ∂_s·χ ⊗ γ'` from a closed geodesic and a harmonic spinor `χ`
/// given by nodal values.
pub fn construct_stationary(base: &CurveField, chi: &[Complex64], spin: SpinStructure) -> Result<SpinorField> {
    check_len(base.len(), chi.len())?;
    let tension = crate::energy::tension_field(base)?.sup_norm();
    if !(tension <= 1e-8) {
        return Err(Error::Config(format!(
            "stationary construction needs a geodesic base (tension {tension:e})"
        )));
    }
    let chi_size = chi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if spin == SpinStructure::Antiperiodic && chi_size > 0.0 {
        return Err(Error::NoHarmonicSpinor);
    }
    let dirac_chi = base.grid().untwisted_dirac(chi, spin)?;
    let residual = dirac_chi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > 1e-8 * (1.0 + chi_size) {
        return Err(Error::Domain(format!(
            "spinor factor is not harmonic (|∂̸χ| = {residual:e})"
        )));
    }
    let velocity = base.derivative()?;
    let q = base.dim();
    let mut values = Vec::with_capacity(base.len() * q);
    for (j, c) in chi.iter().enumerate() {
        let ic = Complex64::i() * c;
        values.extend(velocity.node(j).iter().map(|&v| ic * v));
    }
    SpinorField::new(base.grid().clone(), spin, q, values)
}

/// Pointwise metric `⟨ψ, φ⟩ = Re Σ_a conj(ψ^a) φ^a`.
pub fn inner_pointwise(psi: &SpinorField, phi: &SpinorField) -> Result<Vec<f64>> {
    check_pair(psi, phi)?;
    Ok((0..psi.len())
        .map(|j| {
            psi.node(j)
                .iter()
                .zip(phi.node(j))
                .map(|(a, b)| (a.conj() * b).re)
                .sum()
        })
        .collect())
}

/// `∫ ⟨ψ, φ⟩ ds` by the trapezoidal rule.
pub fn inner_l2(psi: &SpinorField, phi: &SpinorField) -> Result<f64> {
    Ok(psi.grid.integrate(&inner_pointwise(psi, phi)?))
}

/// Selects pointwise or integrated evaluation of the spinor metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerProductMode {
    Pointwise,
    L2,
}

/// Result of [`inner_product`].
#[derive(Debug, Clone, PartialEq)]
pub enum InnerProduct {
    Pointwise(Vec<f64>),
    L2(f64),
}

pub fn inner_product(psi: &SpinorField, phi: &SpinorField, mode: InnerProductMode) -> Result<InnerProduct> {
    match mode {
        InnerProductMode::Pointwise => inner_pointwise(psi, phi).map(InnerProduct::Pointwise),
        InnerProductMode::L2 => inner_l2(psi, phi).map(InnerProduct::L2),
    }
}

/// `|ψ_j|²` per node.
pub fn pointwise_norm_sq(psi: &SpinorField) -> Vec<f64> {
    (0..psi.len())
        .map(|j| psi.node(j).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}
