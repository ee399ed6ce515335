//! Time integration of the coupled gradient flow.
//!
//! The state is carried extrinsically: curve nodes in `ℝ^q` and spinor values
//! as complex `q`-vectors. The flat part of both equations (`d²/ds²` plus the
//! flat Dirac symbol on the spinor) is treated implicitly in mode space, every
//! geometric correction explicitly. After each step the curve is projected
//! back to `N` and the spinor re-tangentialized.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::energy::{assemble, el_residual, Assembled, Residual};
use crate::error::{Error, Result};
use crate::spectral::{CircleGrid, SpinStructure};
use crate::spinor::{CurveField, SpinorField, VectorField};

/// `sup_F` above which a run is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// IMEX Euler: implicit flat part, explicit remainder. First order.
    SemiImplicit,
    /// Third-order IMEX Runge–Kutta of Ascher, Ruuth and Spiteri (4,4,3).
    SemiImplicit3,
    /// Classical RK4 on the full right-hand side; subject to a CFL limit.
    ExplicitRk4,
}

impl Integrator {
    pub fn label(self) -> &'static str {
        match self {
            Integrator::SemiImplicit => "semi_implicit",
            Integrator::SemiImplicit3 => "semi_implicit3",
            Integrator::ExplicitRk4 => "explicit_rk4",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_implicit" => Ok(Integrator::SemiImplicit),
            "semi_implicit3" => Ok(Integrator::SemiImplicit3),
            "explicit_rk4" => Ok(Integrator::ExplicitRk4),
            other => Err(Error::Config(format!("unknown integrator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Spinor equation `Δ̃ψ − (1/ε)Dψ` when set, `εΔ̃ψ − Dψ` otherwise.
    pub rescaled: bool,
    pub integrator: Integrator,
    /// Gradient norm at which a state counts as stationary.
    pub stationary_tol: f64,
    /// Stop as soon as the state is stationary.
    pub stop_when_stationary: bool,
    /// Record diagnostics every this many steps.
    pub monitor_stride: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            rescaled: true,
            integrator: Integrator::SemiImplicit,
            stationary_tol: 1e-6,
            stop_when_stationary: true,
            monitor_stride: 1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("ε must be positive, got {}", self.eps)));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end) {
            return Err(Error::Config(format!(
                "need 0 < dt ≤ t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if !(self.stationary_tol > 0.0) {
            return Err(Error::Config("stationary_tol must be positive".into()));
        }
        if self.monitor_stride == 0 {
            return Err(Error::Config("monitor_stride must be positive".into()));
        }
        Ok(())
    }

    /// Coefficient of `Δ̃ψ` in the spinor equation.
    fn laplace_coef(&self) -> f64 {
        if self.rescaled {
            1.0
        } else {
            self.eps
        }
    }

    /// Coefficient of `−Dψ` in the spinor equation.
    fn dirac_coef(&self) -> f64 {
        if self.rescaled {
            1.0 / self.eps
        } else {
            1.0
        }
    }

    /// Weight of `|∇̃_tψ|²` in the dissipation, making
    /// `E_ε(T) + ∫dissipation = E_ε(0)` exact for the continuous flow.
    fn dissipation_weight(&self) -> f64 {
        if self.rescaled {
            self.eps
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub curve: CurveField,
    pub spinor: SpinorField,
}

impl FlowState {
    pub fn new(curve: CurveField, spinor: SpinorField) -> Result<Self> {
        let defect = spinor.tangency_defect(&curve)?;
        if !(defect <= 1e-10) {
            return Err(Error::Integrity(format!(
                "initial spinor is not tangent (defect {defect:e})"
            )));
        }
        Ok(Self { t: 0.0, curve, spinor })
    }

    pub fn grid(&self) -> &CircleGrid {
        self.curve.grid()
    }
}

/// One row of the diagnostics stream, in output column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_eps: f64,
    pub energy: f64,
    pub cumulative_dissipation: f64,
    pub sup_psi_sq: f64,
    pub psi_l2_sq: f64,
    pub sup_f: f64,
    pub sup_g: f64,
    pub grad_norm: f64,
    pub gamma_speed_min: f64,
    pub gamma_speed_max: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 11] = [
        "t",
        "E_eps",
        "E",
        "cumulative_dissipation",
        "sup_psi_sq",
        "psi_l2_sq",
        "sup_F",
        "sup_G",
        "grad_norm",
        "gamma_speed_min",
        "gamma_speed_max",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.energy_eps,
            self.energy,
            self.cumulative_dissipation,
            self.sup_psi_sq,
            self.psi_l2_sq,
            self.sup_f,
            self.sup_g,
            self.grad_norm,
            self.gamma_speed_min,
            self.gamma_speed_max,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            t: v[0],
            energy_eps: v[1],
            energy: v[2],
            cumulative_dissipation: v[3],
            sup_psi_sq: v[4],
            psi_l2_sq: v[5],
            sup_f: v[6],
            sup_g: v[7],
            grad_norm: v[8],
            gamma_speed_min: v[9],
            gamma_speed_max: v[10],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("blowup at t = {t}: {reason}")]
    Blowup {
        t: f64,
        reason: String,
        last_valid: Box<FlowState>,
        trajectory: Vec<DiagnosticsRecord>,
    },
    #[error("step size: {0}")]
    StepSize(String),
    #[error(transparent)]
    Core(#[from] Error),
}

/// Extrinsic state or rate: curve coordinates and spinor values.
#[derive(Debug, Clone)]
struct Ambient {
    u: Vec<f64>,
    psi: Vec<Complex64>,
}

impl Ambient {
    fn of(state: &FlowState) -> Self {
        Self {
            u: state.curve.points().data().to_vec(),
            psi: state.spinor.values().to_vec(),
        }
    }

    fn axpy(&mut self, c: f64, other: &Ambient) {
        self.u.iter_mut().zip(&other.u).for_each(|(a, b)| *a += c * b);
        self.psi.iter_mut().zip(&other.psi).for_each(|(a, b)| *a += c * b);
    }

    fn is_finite(&self) -> bool {
        self.u.iter().all(|x| x.is_finite()) && self.psi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// The flat operator `L` treated implicitly: `d²/ds²` on the curve,
/// `c_Δ d²/ds² − c_D i d/ds` on the spinor.
struct LinearPart<'a> {
    grid: &'a CircleGrid,
    spin: SpinStructure,
    q: usize,
    laplace: f64,
    dirac: f64,
}

impl<'a> LinearPart<'a> {
    fn new(state: &'a FlowState, params: &FlowParams) -> Self {
        Self {
            grid: state.grid(),
            spin: state.spinor.spin(),
            q: state.curve.dim(),
            laplace: params.laplace_coef(),
            dirac: params.dirac_coef(),
        }
    }

    fn curve_symbol(lam: f64) -> f64 {
        -lam * lam
    }

    /// `i d/ds` has symbol `−λ`, so `−c_D D` contributes `+c_D λ`.
    fn spinor_symbol(&self, lam: f64) -> f64 {
        -self.laplace * lam * lam + self.dirac * lam
    }

    /// Applies `g(symbol)` mode by mode; the Nyquist mode sees symbol 0.
    fn map<G: Fn(f64) -> f64>(&self, y: &Ambient, g: G) -> Result<Ambient> {
        let n = self.grid.len();
        let q = self.q;
        let mut out = Ambient {
            u: vec![0.0; n * q],
            psi: vec![Complex64::new(0.0, 0.0); n * q],
        };
        let per = SpinStructure::Periodic;
        for a in 0..q {
            let col: Vec<Complex64> = (0..n).map(|j| Complex64::new(y.u[j * q + a], 0.0)).collect();
            let res = self.grid.apply_symbol(&col, per, |idx, lam| {
                let sym = if self.grid.is_nyquist(idx, per) {
                    0.0
                } else {
                    Self::curve_symbol(lam)
                };
                Complex64::new(g(sym), 0.0)
            })?;
            for (j, z) in res.into_iter().enumerate() {
                out.u[j * q + a] = z.re;
            }
            let col: Vec<Complex64> = (0..n).map(|j| y.psi[j * q + a]).collect();
            let res = self.grid.apply_symbol(&col, self.spin, |idx, lam| {
                let sym = if self.grid.is_nyquist(idx, self.spin) {
                    0.0
                } else {
                    self.spinor_symbol(lam)
                };
                Complex64::new(g(sym), 0.0)
            })?;
            for (j, z) in res.into_iter().enumerate() {
                out.psi[j * q + a] = z;
            }
        }
        Ok(out)
    }

    fn apply(&self, y: &Ambient) -> Result<Ambient> {
        self.map(y, |s| s)
    }

    /// `(I − c L)^{-1} y`.
    fn solve(&self, y: &Ambient, c: f64) -> std::result::Result<Ambient, FlowError> {
        // the spinor symbol is positive on 0 < λ < c_D/c_Δ; keep 1 − c·sym away from 0
        let worst = 1.0 - c * self.dirac * self.dirac / (4.0 * self.laplace);
        if worst < 0.5 {
            return Err(FlowError::StepSize(format!(
                "implicit solve is near-singular (1 − dt·a·max symbol = {worst:.3}); reduce dt"
            )));
        }
        Ok(self.map(y, |s| 1.0 / (1.0 - c * s))?)
    }

    /// Largest modulus of the flat symbol, used for the explicit CFL check.
    fn spectral_radius(&self) -> f64 {
        let k = self.grid.len() as f64 / 2.0;
        (k * k).max(self.laplace * k * k + self.dirac * k)
    }
}

/// Everything the integrator and the monitors need at one state.
struct Evaluation {
    assembled: Assembled,
    /// `∂_t u`
    curve_rate: VectorField,
    /// `∇̃_tψ`
    spinor_rate: SpinorField,
    speeds: Vec<f64>,
    sup_f: f64,
    sup_g: f64,
    dissipation_rate: f64,
    grad_norm: f64,
}

impl Evaluation {
    fn new(state: &FlowState, params: &FlowParams) -> Result<Self> {
        let assembled = assemble(&state.curve, &state.spinor, params.eps)?;
        let grad = assembled.gradient();
        let curve_rate = grad.curve.scaled(-1.0);
        // rescaled: Δ̃ψ − Dψ/ε = −(Dψ − εΔ̃ψ)/ε; unrescaled: −(Dψ − εΔ̃ψ)
        let spinor_rate = grad.spinor.scaled(Complex64::new(-params.dirac_coef(), 0.0));
        let grid = state.grid();
        let n = grid.len();
        let speeds: Vec<f64> = (0..n)
            .map(|j| assembled.velocity.node(j).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let cov_sq = crate::spinor::pointwise_norm_sq(&assembled.cov);
        let rate_sq = crate::spinor::pointwise_norm_sq(&spinor_rate);
        let mut sup_f = 0.0f64;
        let mut sup_g = 0.0f64;
        let mut density = Vec::with_capacity(n);
        let w = params.dissipation_weight();
        for j in 0..n {
            let ut: f64 = curve_rate.node(j).iter().map(|x| x * x).sum();
            sup_f = sup_f.max(0.5 * (speeds[j] * speeds[j] + params.eps * cov_sq[j]));
            sup_g = sup_g.max(0.5 * (ut + rate_sq[j]));
            density.push(ut + w * rate_sq[j]);
        }
        Ok(Self {
            grad_norm: grad.l2_norm(),
            assembled,
            curve_rate,
            spinor_rate,
            speeds,
            sup_f,
            sup_g,
            dissipation_rate: grid.integrate(&density),
        })
    }

    /// Extrinsic rate `(u̇, ∇̃_tψ + II(u̇, ψ))`.
    fn extrinsic(&self, state: &FlowState) -> Ambient {
        let q = state.curve.dim();
        let m = state.curve.manifold();
        let mut psi = self.spinor_rate.values().to_vec();
        let mut re = vec![0.0; q];
        let mut im = vec![0.0; q];
        let mut ii_re = vec![0.0; q];
        let mut ii_im = vec![0.0; q];
        for j in 0..state.curve.len() {
            for (a, z) in state.spinor.node(j).iter().enumerate() {
                re[a] = z.re;
                im[a] = z.im;
            }
            let p = state.curve.point(j);
            let v = self.curve_rate.node(j);
            m.second_fundamental_form(p, v, &re, &mut ii_re);
            m.second_fundamental_form(p, v, &im, &mut ii_im);
            for a in 0..q {
                psi[j * q + a] += Complex64::new(ii_re[a], ii_im[a]);
            }
        }
        Ambient {
            u: self.curve_rate.data().to_vec(),
            psi,
        }
    }

    fn record(&self, state: &FlowState, cumulative: f64) -> DiagnosticsRecord {
        let norm_sq = crate::spinor::pointwise_norm_sq(&state.spinor);
        DiagnosticsRecord {
            t: state.t,
            energy_eps: self.assembled.report.energy_eps,
            energy: self.assembled.report.energy,
            cumulative_dissipation: cumulative,
            sup_psi_sq: norm_sq.iter().copied().fold(0.0, f64::max),
            psi_l2_sq: state.grid().integrate(&norm_sq),
            sup_f: self.sup_f,
            sup_g: self.sup_g,
            grad_norm: self.grad_norm,
            gamma_speed_min: self.speeds.iter().copied().fold(f64::INFINITY, f64::min),
            gamma_speed_max: self.speeds.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Pulls extrinsic values back onto the constraint set.
fn restore(template: &FlowState, y: Ambient, t: f64) -> Result<FlowState> {
    let curve = CurveField::projected(template.grid().clone(), template.curve.manifold().clone(), y.u)?;
    let spinor = SpinorField::tangent_to(&curve, template.spinor.spin(), y.psi)?;
    Ok(FlowState { t, curve, spinor })
}

/// `F(π(y))` in extrinsic form.
fn rate_at(template: &FlowState, y: &Ambient, params: &FlowParams) -> Result<Ambient> {
    let state = restore(template, y.clone(), template.t)?;
    Ok(Evaluation::new(&state, params)?.extrinsic(&state))
}

// ARS(4,4,3): implicit and explicit tableaux, stages 1..=4 (stage 0 is y_n).
const ARS_IMPLICIT: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.5, 0.0, 0.0, 0.0],
    [0.0, 1.0 / 6.0, 0.5, 0.0, 0.0],
    [0.0, -0.5, 0.5, 0.5, 0.0],
    [0.0, 1.5, -1.5, 0.5, 0.5],
];
const ARS_EXPLICIT: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0, 0.0],
    [11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0, 0.0],
    [5.0 / 6.0, -5.0 / 6.0, 0.5, 0.0, 0.0],
    [0.25, 1.75, 0.75, -1.75, 0.0],
];

/// Advances by `dt` given the evaluation at `state`; returns the raw
/// extrinsic update before projection.
fn advance(
    state: &FlowState,
    eval: &Evaluation,
    params: &FlowParams,
    dt: f64,
) -> std::result::Result<Ambient, FlowError> {
    let lin = LinearPart::new(state, params);
    let y0 = Ambient::of(state);
    let f0 = eval.extrinsic(state);
    match params.integrator {
        Integrator::SemiImplicit => {
            let mut rhs = y0.clone();
            rhs.axpy(dt, &f0);
            rhs.axpy(-dt, &lin.apply(&y0)?);
            lin.solve(&rhs, dt)
        }
        Integrator::SemiImplicit3 => {
            let mut ly = vec![lin.apply(&y0)?];
            let mut gs = {
                let mut g = f0;
                g.axpy(-1.0, &ly[0]);
                vec![g]
            };
            for i in 1..5 {
                let mut rhs = y0.clone();
                for j in 0..i {
                    rhs.axpy(dt * ARS_EXPLICIT[i][j], &gs[j]);
                    if ARS_IMPLICIT[i][j] != 0.0 {
                        rhs.axpy(dt * ARS_IMPLICIT[i][j], &ly[j]);
                    }
                }
                let yi = lin.solve(&rhs, dt * ARS_IMPLICIT[i][i])?;
                // stiffly accurate: the last stage is the update
                if i == 4 || !yi.is_finite() {
                    return Ok(yi);
                }
                let lyi = lin.apply(&yi)?;
                let mut gi = rate_at(state, &yi, params)?;
                gi.axpy(-1.0, &lyi);
                ly.push(lyi);
                gs.push(gi);
            }
            unreachable!("ARS(4,4,3) has four implicit stages")
        }
        Integrator::ExplicitRk4 => {
            let rho = lin.spectral_radius();
            if dt * rho > 2.5 {
                return Err(FlowError::StepSize(format!(
                    "explicit_rk4 needs dt ≤ {:.3e} at this resolution, got {dt:e}",
                    2.5 / rho
                )));
            }
            let stage = |c: f64, k: &Ambient| -> std::result::Result<Ambient, FlowError> {
                let mut y = y0.clone();
                y.axpy(c * dt, k);
                if !y.is_finite() {
                    return Ok(y);
                }
                Ok(rate_at(state, &y, params)?)
            };
            let k1 = f0;
            let k2 = stage(0.5, &k1)?;
            let k3 = stage(0.5, &k2)?;
            let k4 = stage(1.0, &k3)?;
            let mut y = y0;
            y.axpy(dt / 6.0, &k1);
            y.axpy(dt / 3.0, &k2);
            y.axpy(dt / 3.0, &k3);
            y.axpy(dt / 6.0, &k4);
            Ok(y)
        }
    }
}

fn blowup_reason(y: &Ambient) -> Option<String> {
    (!y.is_finite()).then(|| "non-finite nodal values".to_string())
}

/// One step of size `params.dt`.
pub fn step(state: &FlowState, params: &FlowParams) -> std::result::Result<FlowState, FlowError> {
    params.validate()?;
    let eval = Evaluation::new(state, params)?;
    let y = advance(state, &eval, params, params.dt)?;
    if let Some(reason) = blowup_reason(&y) {
        return Err(FlowError::Blowup {
            t: state.t + params.dt,
            reason,
            last_valid: Box::new(state.clone()),
            trajectory: Vec::new(),
        });
    }
    Ok(restore(state, y, state.t + params.dt)?)
}

/// Final state and recorded diagnostics of a run.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: FlowState,
    pub trajectory: Vec<DiagnosticsRecord>,
    /// The run stopped early because the gradient norm fell below tolerance.
    pub converged: bool,
    pub steps: usize,
}

/// Integrates from `state0` to `t_end`, or until stationary.
///
/// `observer` sees every recorded state with its diagnostics.
pub fn evolve<O>(
    state0: &FlowState,
    params: &FlowParams,
    mut observer: O,
) -> std::result::Result<FlowOutcome, FlowError>
where
    O: FnMut(&FlowState, &DiagnosticsRecord),
{
    params.validate()?;
    let total = ((params.t_end / params.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut state = state0.clone();
    let mut eval = Evaluation::new(&state, params)?;
    let mut cumulative = 0.0;
    let mut trajectory = Vec::new();
    let first = eval.record(&state, cumulative);
    observer(&state, &first);
    trajectory.push(first);
    let mut converged = params.stop_when_stationary && first.grad_norm <= params.stationary_tol;
    let mut steps = 0;
    while !converged && steps < total {
        let t_next = if steps + 1 == total {
            params.t_end
        } else {
            (steps + 1) as f64 * params.dt
        };
        let dt = t_next - state.t;
        let y = advance(&state, &eval, params, dt)?;
        let blowup = |reason: String, state: &FlowState, trajectory: Vec<DiagnosticsRecord>| FlowError::Blowup {
            t: t_next,
            reason,
            last_valid: Box::new(state.clone()),
            trajectory,
        };
        if let Some(reason) = blowup_reason(&y) {
            return Err(blowup(reason, &state, trajectory));
        }
        let next = match restore(&state, y, t_next) {
            Ok(s) => s,
            Err(e @ Error::ProjectionSingularity(_)) => return Err(blowup(e.to_string(), &state, trajectory)),
            Err(e) => return Err(e.into()),
        };
        let next_eval = Evaluation::new(&next, params)?;
        if !(next_eval.sup_f <= BLOWUP_THRESHOLD) {
            return Err(blowup(format!("sup_F = {:e}", next_eval.sup_f), &state, trajectory));
        }
        cumulative += 0.5 * dt * (eval.dissipation_rate + next_eval.dissipation_rate);
        state = next;
        eval = next_eval;
        steps += 1;
        converged = params.stop_when_stationary && eval.grad_norm <= params.stationary_tol;
        if steps % params.monitor_stride == 0 || steps == total || converged {
            let rec = eval.record(&state, cumulative);
            if !rec.is_finite() {
                return Err(blowup("non-finite diagnostics".into(), &state, trajectory));
            }
            observer(&state, &rec);
            trajectory.push(rec);
        }
    }
    Ok(FlowOutcome {
        state,
        trajectory,
        converged,
        steps,
    })
}

/// Stationarity verdict with both residual systems.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub stationary: bool,
    pub grad_norm: f64,
    pub regularized: Residual,
    pub unregularized: Residual,
}

pub fn detect_stationary(state: &FlowState, eps: f64, tol: f64) -> Result<StationarityReport> {
    let regularized = el_residual(&state.curve, &state.spinor, eps, true)?;
    let unregularized = el_residual(&state.curve, &state.spinor, eps, false)?;
    let grad_norm = regularized.l2();
    Ok(StationarityReport {
        stationary: grad_norm <= tol,
        grad_norm,
        regularized,
        unregularized,
    })
}

/// Greedy strictly decreasing subsequence of `grad_norm`, as trajectory
/// indices. The last index is the limit candidate.
pub fn subconvergence_extract(trajectory: &[DiagnosticsRecord]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, rec) in trajectory.iter().enumerate() {
        match out.last() {
            Some(&last) if rec.grad_norm >= trajectory[last].grad_norm => {}
            _ => out.push(i),
        }
    }
    out
}

/// Limit summary of one ε in a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub eps: f64,
    /// `ε < 1`: outside the regime where subconvergence is known.
    pub exploratory: bool,
    pub converged: bool,
    pub final_t: f64,
    pub grad_norm: f64,
    pub regularized_residual: f64,
    pub unregularized_residual: f64,
    /// `‖Dψ_∞‖_{L²}`
    pub dirac_norm: f64,
    /// `(max|γ'| − min|γ'|)/max|γ'|`
    pub speed_spread: f64,
    pub trajectory: Vec<DiagnosticsRecord>,
    pub state: FlowState,
    /// Failure message when the run did not finish normally.
    pub failure: Option<String>,
}

/// Relative spread of `|γ'|` along the curve.
pub fn speed_spread(curve: &CurveField) -> Result<f64> {
    let s = curve.speeds()?;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if max > 0.0 { (max - min) / max } else { 0.0 })
}

/// Runs `evolve` for each ε in turn, warm-starting from the previous limit.
pub fn epsilon_sweep(
    state0: &FlowState,
    eps_list: &[f64],
    params: &FlowParams,
) -> std::result::Result<Vec<SweepEntry>, FlowError> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("ε list must be non-empty and positive".into()).into());
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("ε list must be strictly descending".into()).into());
    }
    let mut start = state0.clone();
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = FlowParams { eps, ..*params };
        start.t = 0.0;
        let (state, trajectory, converged, failure) = match evolve(&start, &p, |_, _| {}) {
            Ok(o) => (o.state, o.trajectory, o.converged, None),
            Err(FlowError::Blowup {
                last_valid,
                trajectory,
                reason,
                ..
            }) => (*last_valid, trajectory, false, Some(reason)),
            Err(e) => return Err(e),
        };
        let report = detect_stationary(&state, eps, p.stationary_tol)?;
        let dirac_norm = crate::spinor::twisted_dirac(&state.curve, &state.spinor)?.l2_norm();
        out.push(SweepEntry {
            eps,
            exploratory: eps < 1.0,
            converged,
            final_t: state.t,
            grad_norm: report.grad_norm,
            regularized_residual: report.regularized.l2(),
            unregularized_residual: report.unregularized.l2(),
            dirac_norm,
            speed_spread: speed_spread(&state.curve)?,
            trajectory,
            state: state.clone(),
            failure,
        });
        start = state;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{InitialData, RandomSpec};
    use crate::manifold::{catalog, CatalogParams, Manifold};

    fn sphere() -> Manifold {
        catalog("round_sphere", CatalogParams::default()).unwrap()
    }

    fn initial(data: InitialData, m: &Manifold, n: usize) -> FlowState {
        let (c, psi) = data.build(m, n, SpinStructure::Periodic).unwrap();
        FlowState::new(c, psi).unwrap()
    }

    fn perturbed(n: usize, seed: u64) -> FlowState {
        let spec = RandomSpec {
            amplitude: 0.2,
            max_mode: 3,
            spinor_amplitude: 0.3,
            odd_modes: false,
        };
        initial(InitialData::RandomPerturbation { spec, seed }, &sphere(), n)
    }

    fn max_diff(a: &FlowState, b: &FlowState) -> f64 {
        let du = a
            .curve
            .points()
            .data()
            .iter()
            .zip(b.curve.points().data())
            .map(|(x, y)| (x - y).abs());
        let dp = a
            .spinor
            .values()
            .iter()
            .zip(b.spinor.values())
            .map(|(x, y)| (x - y).norm());
        du.chain(dp).fold(0.0, f64::max)
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::default().validate().is_ok());
        let bad = [
            FlowParams {
                eps: 0.0,
                ..Default::default()
            },
            FlowParams {
                dt: 2.0,
                ..Default::default()
            },
            FlowParams {
                stationary_tol: 0.0,
                ..Default::default()
            },
            FlowParams {
                monitor_stride: 0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::Config(_))), "{p:?}");
        }
        for i in [
            Integrator::SemiImplicit,
            Integrator::SemiImplicit3,
            Integrator::ExplicitRk4,
        ] {
            assert_eq!(i.label().parse::<Integrator>().unwrap(), i);
        }
        assert!("rk45".parse::<Integrator>().is_err());
    }

    #[test]
    fn geodesic_without_spinor_is_fixed() {
        let s0 = initial(InitialData::GreatCircle, &sphere(), 32);
        for integrator in [
            Integrator::SemiImplicit,
            Integrator::SemiImplicit3,
            Integrator::ExplicitRk4,
        ] {
            let p = FlowParams {
                dt: 1e-3,
                integrator,
                ..Default::default()
            };
            let s1 = step(&s0, &p).unwrap();
            assert!(max_diff(&s0, &s1) <= 1e-10, "{integrator}");
            assert_eq!(s1.t, 1e-3);
        }
    }

    #[test]
    fn latitude_follows_heat_flow_ode() {
        // A latitude circle stays a latitude circle, with height z obeying
        // z' = z(1 − z²), i.e. z²/(1 − z²) = z0²/(1 − z0²)·e^{2t}.
        let z0: f64 = 0.3;
        let s0 = initial(InitialData::Latitude { z0 }, &sphere(), 32);
        let p = FlowParams {
            dt: 1e-3,
            t_end: 1.0,
            integrator: Integrator::SemiImplicit3,
            stop_when_stationary: false,
            monitor_stride: 100,
            ..Default::default()
        };
        let out = evolve(&s0, &p, |s, _| assert_eq!(s.spinor.sup_norm(), 0.0)).unwrap();
        let k = z0 * z0 / (1.0 - z0 * z0) * 2f64.exp();
        let z = (k / (1.0 + k)).sqrt();
        for j in 0..32 {
            assert!((out.state.curve.point(j)[2] - z).abs() < 1e-8);
        }
        assert_eq!(out.trajectory.len(), 11);
    }

    #[test]
    fn constraint_and_tangency_hold_after_steps() {
        let mut s = perturbed(32, 3);
        let p = FlowParams {
            dt: 2e-3,
            ..Default::default()
        };
        for _ in 0..20 {
            s = step(&s, &p).unwrap();
            assert!(s.curve.constraint_violation() <= 1e-10);
            assert!(s.spinor.tangency_defect(&s.curve).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn energy_decreases_and_bounds_hold() {
        let s0 = perturbed(32, 5);
        for rescaled in [true, false] {
            let p = FlowParams {
                dt: 2e-3,
                t_end: 0.5,
                rescaled,
                stop_when_stationary: false,
                ..Default::default()
            };
            let out = evolve(&s0, &p, |_, _| {}).unwrap();
            let tr = &out.trajectory;
            let tol = p.dt * 1e-2 * tr[0].energy_eps.abs();
            for w in tr.windows(2) {
                assert!(w[1].energy_eps <= w[0].energy_eps + tol);
                assert!(w[1].cumulative_dissipation >= w[0].cumulative_dissipation);
            }
            for r in tr {
                assert!(r.energy_eps + r.psi_l2_sq / (8.0 * p.eps) >= -1e-10);
                let bound = (r.t / (2.0 * p.eps * p.eps)).exp() * tr[0].sup_psi_sq * (1.0 + 1e-6);
                assert!(r.sup_psi_sq <= bound);
            }
            let last = tr.last().unwrap();
            let defect = (last.energy_eps + last.cumulative_dissipation - tr[0].energy_eps).abs();
            assert!(defect < 0.05 * (tr[0].energy_eps - last.energy_eps), "{defect}");
        }
    }

    #[test]
    fn third_order_integrator_converges_at_third_order() {
        let m = catalog("unit_circle", CatalogParams::default()).unwrap();
        let data = InitialData::ExplicitModes {
            angle: vec![(1, Complex64::new(0.3, 0.1)), (2, Complex64::new(-0.1, 0.0))],
            spinor: vec![(0.0, Complex64::new(0.5, 0.0)), (1.0, Complex64::new(0.2, -0.1))],
        };
        let s0 = initial(data, &m, 32);
        let run = |dt: f64| {
            let p = FlowParams {
                dt,
                t_end: 0.2,
                integrator: Integrator::SemiImplicit3,
                stop_when_stationary: false,
                monitor_stride: 1000,
                ..Default::default()
            };
            evolve(&s0, &p, |_, _| {}).unwrap().state
        };
        let reference = run(1e-3);
        let e1 = max_diff(&run(2e-2), &reference);
        let e2 = max_diff(&run(1e-2), &reference);
        assert!(e1 / e2 > 6.0, "{e1:e} {e2:e}");
    }

    #[test]
    fn stride_does_not_change_trajectory() {
        let s0 = perturbed(16, 9);
        let run = |stride| {
            let p = FlowParams {
                dt: 5e-3,
                t_end: 0.1,
                monitor_stride: stride,
                stop_when_stationary: false,
                ..Default::default()
            };
            evolve(&s0, &p, |_, _| {}).unwrap()
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.state, b.state);
        assert_eq!(a.steps, 20);
        assert_eq!(b.trajectory.len(), 6);
        for rb in &b.trajectory {
            let ra = a.trajectory.iter().find(|r| r.t == rb.t).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn nearby_initial_data_stay_nearby() {
        let s0 = perturbed(16, 11);
        let mut s1 = s0.clone();
        let delta = 1e-8;
        for z in s1.spinor.values_mut() {
            *z *= 1.0 + delta;
        }
        let p = FlowParams {
            dt: 5e-3,
            t_end: 0.5,
            stop_when_stationary: false,
            monitor_stride: 1000,
            ..Default::default()
        };
        let a = evolve(&s0, &p, |_, _| {}).unwrap().state;
        let b = evolve(&s1, &p, |_, _| {}).unwrap().state;
        assert!(max_diff(&a, &b) < 100.0 * delta);
    }

    #[test]
    fn explicit_rk4_rejects_large_steps() {
        let s0 = perturbed(64, 1);
        let p = FlowParams {
            dt: 1e-2,
            integrator: Integrator::ExplicitRk4,
            ..Default::default()
        };
        assert!(matches!(step(&s0, &p), Err(FlowError::StepSize(_))));
        let p = FlowParams { dt: 1e-4, ..p };
        assert!(step(&s0, &p).is_ok());
    }

    #[test]
    fn blowup_keeps_partial_data() {
        // Too large a step for the explicit curvature terms around a
        // spinor of unit size.
        let s0 = initial(
            InitialData::StationaryPair {
                chi: Complex64::new(1.0, 0.0),
            },
            &sphere(),
            64,
        );
        let p = FlowParams {
            dt: 1e-2,
            t_end: 10.0,
            integrator: Integrator::SemiImplicit3,
            stop_when_stationary: false,
            monitor_stride: 10,
            ..Default::default()
        };
        match evolve(&s0, &p, |_, _| {}) {
            Err(FlowError::Blowup {
                t,
                last_valid,
                trajectory,
                ..
            }) => {
                assert!(t > 0.0 && t < 10.0);
                assert!(last_valid.t < t);
                assert!(!trajectory.is_empty() && trajectory.iter().all(|r| r.is_finite()));
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn stationary_detection() {
        let s = initial(
            InitialData::StationaryPair {
                chi: Complex64::new(0.6, 0.8),
            },
            &sphere(),
            32,
        );
        let r = detect_stationary(&s, 1.0, 1e-6).unwrap();
        assert!(r.stationary && r.unregularized.sup() <= 1e-6);
        assert!(!detect_stationary(&perturbed(32, 2), 1.0, 1e-6).unwrap().stationary);
        let p = FlowParams::default();
        let out = evolve(&s, &p, |_, _| {}).unwrap();
        assert!(out.converged && out.steps == 0 && out.trajectory.len() == 1);
    }

    fn with_grad(g: &[f64]) -> Vec<DiagnosticsRecord> {
        g.iter()
            .enumerate()
            .map(|(i, &g)| {
                let mut v = [0.0; 11];
                v[0] = i as f64;
                v[8] = g;
                DiagnosticsRecord::from_values(v)
            })
            .collect()
    }

    #[test]
    fn subconvergence_extraction() {
        assert_eq!(
            subconvergence_extract(&with_grad(&[4.0, 3.0, 2.0, 1.0])),
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            subconvergence_extract(&with_grad(&[4.0, 5.0, 3.0, 3.0, 1.0, 2.0])),
            vec![0, 2, 4]
        );
        assert_eq!(subconvergence_extract(&with_grad(&[1.0, 2.0])), vec![0]);
        assert!(subconvergence_extract(&[]).is_empty());
    }

    #[test]
    fn sweep_validates_and_marks_exploratory() {
        let s0 = perturbed(16, 4);
        let p = FlowParams {
            dt: 5e-3,
            t_end: 0.05,
            ..Default::default()
        };
        assert!(epsilon_sweep(&s0, &[1.0, 2.0], &p).is_err());
        assert!(epsilon_sweep(&s0, &[1.0, -1.0], &p).is_err());
        assert!(epsilon_sweep(&s0, &[], &p).is_err());
        let out = epsilon_sweep(&s0, &[2.0, 0.5], &p).unwrap();
        assert_eq!(out.len(), 2);
        assert!(!out[0].exploratory && out[1].exploratory);
        assert!(out[1].trajectory[0].energy_eps.is_finite());
        assert!(out.iter().all(|e| e.failure.is_none() && !e.converged));
    }

    #[test]
    fn diagnostics_value_order() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let r = DiagnosticsRecord::from_values(v);
        assert_eq!(r.values(), v);
        assert_eq!(r.grad_norm, 8.0);
        assert_eq!(DiagnosticsRecord::COLUMNS[8], "grad_norm");
    }
}
