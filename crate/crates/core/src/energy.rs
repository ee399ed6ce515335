//! Energy functionals, curvature terms, Euler–Lagrange residuals and the
//! discrete L² gradient of `E_ε`.

use crate::error::{Error, Result};
use crate::spinor::{
    check_base, covariant_derivative, inner_pointwise, pointwise_norm_sq, twisted_dirac, twisted_laplacian, CurveField,
    SpinorField, VectorField,
};

fn require_curve(curve: &CurveField) -> Result<()> {
    let drift = curve.constraint_violation();
    if !(drift <= crate::spinor::CONSTRAINT_LIMIT) {
        return Err(Error::Integrity(format!("curve leaves the target by {drift:e}")));
    }
    Ok(())
}

fn require_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

/// Tension `τ(γ) = P(u'')`.
pub fn tension_field(curve: &CurveField) -> Result<VectorField> {
    require_curve(curve)?;
    Ok(curve.project_tangent(&curve.second_derivative()?))
}

/// Sums `R(x_c, y_c)u'` over the pairs `(x_c, y_c)` at every node.
fn curvature_sum(curve: &CurveField, velocity: &VectorField, pairs: &[(&VectorField, &VectorField)]) -> VectorField {
    let q = curve.dim();
    let mut out = VectorField::zeros(curve.len(), q);
    let mut buf = vec![0.0; q];
    for j in 0..curve.len() {
        let p = curve.point(j);
        let acc = out.node_mut(j);
        for (x, y) in pairs {
            curve
                .manifold()
                .curvature(p, x.node(j), y.node(j), velocity.node(j), &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
        }
    }
    out
}

/// `𝓡(γ, ψ) = ½ R(∂_s·ψ, ψ)γ'` summed over real components.
///
/// With `ψ = a + ib` the real expansion collapses to `R(b, a)u'`, the
/// coordinate form `½ R^m_{lij} γ'^l ⟨ψ^i, ∂_s·ψ^j⟩`.
pub fn curvature_term_r(curve: &CurveField, psi: &SpinorField) -> Result<VectorField> {
    check_base(curve, psi)?;
    let velocity = curve.derivative()?;
    let (a, b) = (psi.real_part(), psi.imag_part());
    Ok(curvature_sum(curve, &velocity, &[(&b, &a)]))
}

/// `𝓡_c(γ, ψ) = R(∇̃ψ, ψ)γ'` summed over real components.
pub fn curvature_term_rc(curve: &CurveField, psi: &SpinorField) -> Result<VectorField> {
    check_base(curve, psi)?;
    let velocity = curve.derivative()?;
    let cov = covariant_derivative(curve, psi)?;
    let (ca, cb) = (cov.real_part(), cov.imag_part());
    let (a, b) = (psi.real_part(), psi.imag_part());
    Ok(curvature_sum(curve, &velocity, &[(&ca, &a), (&cb, &b)]))
}

/// Scalar energies of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `½∫|γ'|²`
    pub dirichlet: f64,
    /// `½∫⟨ψ, Dψ⟩`
    pub dirac: f64,
    /// `½∫|∇̃ψ|²`
    pub regularizer: f64,
    pub energy: f64,
    pub energy_eps: f64,
    pub eps: f64,
}

impl EnergyReport {
    /// `E_ε + ‖ψ‖²/(8ε)`, non-negative by the lower bound.
    pub fn lower_bound_margin(&self, psi_l2_sq: f64) -> f64 {
        self.energy_eps + psi_l2_sq / (8.0 * self.eps)
    }
}

pub fn energies(curve: &CurveField, psi: &SpinorField, eps: f64) -> Result<EnergyReport> {
    require_eps(eps)?;
    check_base(curve, psi)?;
    let grid = curve.grid();
    let velocity = curve.derivative()?;
    let dirichlet = 0.5 * velocity.l2_inner(&velocity, grid);
    let cov = covariant_derivative(curve, psi)?;
    let dpsi = crate::spinor::clifford_mul(&cov);
    let dirac = 0.5 * grid.integrate(&inner_pointwise(psi, &dpsi)?);
    let regularizer = 0.5 * grid.integrate(&pointwise_norm_sq(&cov));
    let energy = dirichlet + dirac;
    Ok(EnergyReport {
        dirichlet,
        dirac,
        regularizer,
        energy,
        energy_eps: energy + eps * regularizer,
        eps,
    })
}

/// A pair of fields on the curve and spinor factors of the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDirection {
    pub curve: VectorField,
    pub spinor: SpinorField,
}

impl StateDirection {
    pub fn l2_norm(&self) -> f64 {
        let grid = self.spinor.grid();
        (self.curve.l2_inner(&self.curve, grid) + self.spinor.l2_norm().powi(2)).sqrt()
    }

    /// `⟨self, other⟩_{L²}` over both factors.
    pub fn l2_inner(&self, other: &StateDirection) -> Result<f64> {
        let grid = self.spinor.grid();
        Ok(self.curve.l2_inner(&other.curve, grid) + crate::spinor::inner_l2(&self.spinor, &other.spinor)?)
    }

    pub fn sup_norm(&self) -> f64 {
        self.curve.sup_norm().max(self.spinor.sup_norm())
    }
}

/// Euler–Lagrange residual fields with their norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub fields: StateDirection,
    pub curve_sup: f64,
    pub curve_l2: f64,
    pub spinor_sup: f64,
    pub spinor_l2: f64,
}

impl Residual {
    fn new(fields: StateDirection) -> Self {
        let grid = fields.spinor.grid();
        Self {
            curve_sup: fields.curve.sup_norm(),
            curve_l2: fields.curve.l2_norm(grid),
            spinor_sup: fields.spinor.sup_norm(),
            spinor_l2: fields.spinor.l2_norm(),
            fields,
        }
    }

    pub fn sup(&self) -> f64 {
        self.curve_sup.max(self.spinor_sup)
    }

    pub fn l2(&self) -> f64 {
        self.curve_l2.hypot(self.spinor_l2)
    }
}

/// `(τ − 𝓡 − ε𝓡_c, εΔ̃ψ − Dψ)` when `regularized`, else `(τ − 𝓡, Dψ)`.
pub fn el_residual(curve: &CurveField, psi: &SpinorField, eps: f64, regularized: bool) -> Result<Residual> {
    require_eps(eps)?;
    let mut c = tension_field(curve)?.axpy(-1.0, &curvature_term_r(curve, psi)?);
    let dpsi = twisted_dirac(curve, psi)?;
    let spinor = if regularized {
        c = c.axpy(-eps, &curvature_term_rc(curve, psi)?);
        twisted_laplacian(curve, psi)?
            .scaled(num_complex::Complex64::new(eps, 0.0))
            .axpy(-1.0, &dpsi)
    } else {
        dpsi
    };
    Ok(Residual::new(StateDirection { curve: c, spinor }))
}

/// L² gradient of `E_ε`: `(−τ + 𝓡 + ε𝓡_c, Dψ − εΔ̃ψ)`.
pub fn l2_gradient(curve: &CurveField, psi: &SpinorField, eps: f64) -> Result<StateDirection> {
    Ok(assemble(curve, psi, eps)?.gradient())
}

/// Every differential quantity of a state, computed once.
#[derive(Debug, Clone)]
pub(crate) struct Assembled {
    pub eps: f64,
    pub velocity: VectorField,
    pub tension: VectorField,
    pub cov: SpinorField,
    pub dirac: SpinorField,
    pub laplacian: SpinorField,
    pub r: VectorField,
    pub rc: VectorField,
    pub report: EnergyReport,
}

pub(crate) fn assemble(curve: &CurveField, psi: &SpinorField, eps: f64) -> Result<Assembled> {
    require_eps(eps)?;
    check_base(curve, psi)?;
    let grid = curve.grid();
    let velocity = curve.derivative()?;
    let tension = tension_field(curve)?;
    let cov = covariant_derivative(curve, psi)?;
    let dirac = crate::spinor::clifford_mul(&cov);
    let laplacian = covariant_derivative(curve, &cov)?;
    let (a, b) = (psi.real_part(), psi.imag_part());
    let (ca, cb) = (cov.real_part(), cov.imag_part());
    let r = curvature_sum(curve, &velocity, &[(&b, &a)]);
    let rc = curvature_sum(curve, &velocity, &[(&ca, &a), (&cb, &b)]);
    let dirichlet = 0.5 * velocity.l2_inner(&velocity, grid);
    let dirac_energy = 0.5 * grid.integrate(&inner_pointwise(psi, &dirac)?);
    let regularizer = 0.5 * grid.integrate(&pointwise_norm_sq(&cov));
    let energy = dirichlet + dirac_energy;
    Ok(Assembled {
        eps,
        velocity,
        tension,
        cov,
        dirac,
        laplacian,
        r,
        rc,
        report: EnergyReport {
            dirichlet,
            dirac: dirac_energy,
            regularizer,
            energy,
            energy_eps: energy + eps * regularizer,
            eps,
        },
    })
}

impl Assembled {
    pub fn gradient(&self) -> StateDirection {
        StateDirection {
            curve: self.r.axpy(self.eps, &self.rc).axpy(-1.0, &self.tension),
            spinor: self.dirac.axpy(-self.eps, &self.laplacian),
        }
    }
}
