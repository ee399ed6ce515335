//! Fourier collocation on the circle for periodic and antiperiodic fields.
//!
//! Fields are stored as nodal values at `s_j = 2πj/n`. Antiperiodic fields
//! (spin structure σ₂) are gauge-transformed by `e^{-is/2}` so that a single
//! periodic FFT kernel yields the half-integer frequency set exactly.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

/// One of the two spin structures on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinStructure {
    /// σ₁: `f(s + 2π) = f(s)`, integer frequencies.
    Periodic,
    /// σ₂: `f(s + 2π) = -f(s)`, half-integer frequencies.
    Antiperiodic,
}

impl SpinStructure {
    pub const ALL: [SpinStructure; 2] = [SpinStructure::Periodic, SpinStructure::Antiperiodic];

    /// Offset added to integer labels to obtain the frequency set.
    pub fn frequency_shift(self) -> f64 {
        match self {
            SpinStructure::Periodic => 0.0,
            SpinStructure::Antiperiodic => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpinStructure::Periodic => "sigma1",
            SpinStructure::Antiperiodic => "sigma2",
        }
    }
}

impl fmt::Display for SpinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpinStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma1" | "periodic" => Ok(SpinStructure::Periodic),
            "sigma2" | "antiperiodic" => Ok(SpinStructure::Antiperiodic),
            other => Err(Error::Config(format!("unknown spin structure `{other}`"))),
        }
    }
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `e^{-i s_j / 2}` per node.
    gauge: Vec<Complex64>,
}

/// Uniform grid of `n` nodes on `[0, 2π)` with cached transform plans.
#[derive(Clone)]
pub struct CircleGrid {
    n: usize,
    plan: Arc<Plan>,
}

impl fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl CircleGrid {
    /// Builds a grid; `n` must be even and at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size must be an even integer >= 4, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let gauge = (0..n)
            .map(|j| Complex64::from_polar(1.0, -0.5 * node_at(n, j)))
            .collect();
        Ok(Self {
            n,
            plan: Arc::new(Plan {
                forward,
                inverse,
                gauge,
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        node_at(self.n, j)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Trapezoidal quadrature weight `2π/n`.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Trapezoidal integral of nodal samples over the circle.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weight() * values.iter().sum::<f64>()
    }

    /// Signed integer label of FFT slot `index`, in `[-n/2, n/2)`.
    pub fn signed_index(&self, index: usize) -> i64 {
        let n = self.n as i64;
        let k = index as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Frequency `λ` carried by FFT slot `index`.
    pub fn frequency(&self, index: usize, spin: SpinStructure) -> f64 {
        self.signed_index(index) as f64 + spin.frequency_shift()
    }

    /// True for the unpaired σ₁ mode `k = -n/2`, which is dropped by
    /// differentiation.
    pub fn is_nyquist(&self, index: usize, spin: SpinStructure) -> bool {
        spin == SpinStructure::Periodic && self.signed_index(index) == -(self.n as i64) / 2
    }

    /// Exact discrete Fourier coefficients on the spin structure's frequency set.
    pub fn forward_transform(&self, values: &[Complex64], spin: SpinStructure) -> Result<ModeVector> {
        check_len(self.n, values.len())?;
        let mut buf = self.gauged(values, spin);
        self.plan.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Ok(ModeVector {
            spin,
            coefficients: buf,
        })
    }

    /// Nodal values synthesized from mode coefficients.
    pub fn inverse_transform(&self, modes: &ModeVector) -> Result<Vec<Complex64>> {
        check_len(self.n, modes.coefficients.len())?;
        let mut buf = modes.coefficients.clone();
        self.plan.inverse.process(&mut buf);
        Ok(self.ungauged(buf, modes.spin))
    }

    /// Applies a Fourier multiplier `symbol(λ)` to nodal values.
    pub fn apply_symbol<F>(&self, values: &[Complex64], spin: SpinStructure, symbol: F) -> Result<Vec<Complex64>>
    where
        F: Fn(usize, f64) -> Complex64,
    {
        check_len(self.n, values.len())?;
        let mut buf = self.gauged(values, spin);
        self.plan.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (idx, c) in buf.iter_mut().enumerate() {
            *c *= symbol(idx, self.frequency(idx, spin)) * scale;
        }
        self.plan.inverse.process(&mut buf);
        Ok(self.ungauged(buf, spin))
    }

    /// Spectral `d/ds`: multiplication by `iλ`, Nyquist mode zeroed.
    pub fn differentiate(&self, values: &[Complex64], spin: SpinStructure) -> Result<Vec<Complex64>> {
        self.apply_symbol(values, spin, |idx, lam| {
            if self.is_nyquist(idx, spin) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, lam)
            }
        })
    }

    /// `d/ds` of a real periodic field.
    pub fn differentiate_real(&self, values: &[f64]) -> Result<Vec<f64>> {
        let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self
            .differentiate(&complex, SpinStructure::Periodic)?
            .into_iter()
            .map(|c| c.re)
            .collect())
    }

    /// Spectral `d²/ds²`, equal to `differentiate` applied twice.
    pub fn second_derivative(&self, values: &[Complex64], spin: SpinStructure) -> Result<Vec<Complex64>> {
        self.apply_symbol(values, spin, |idx, lam| {
            if self.is_nyquist(idx, spin) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-lam * lam, 0.0)
            }
        })
    }

    /// Untwisted Dirac operator `i d/ds`; acts on `e^{iλs}` as `-λ`.
    pub fn untwisted_dirac(&self, values: &[Complex64], spin: SpinStructure) -> Result<Vec<Complex64>> {
        Ok(self
            .differentiate(values, spin)?
            .into_iter()
            .map(|c| Complex64::i() * c)
            .collect())
    }

    fn gauged(&self, values: &[Complex64], spin: SpinStructure) -> Vec<Complex64> {
        match spin {
            SpinStructure::Periodic => values.to_vec(),
            SpinStructure::Antiperiodic => values.iter().zip(&self.plan.gauge).map(|(v, g)| v * g).collect(),
        }
    }

    fn ungauged(&self, mut buf: Vec<Complex64>, spin: SpinStructure) -> Vec<Complex64> {
        if spin == SpinStructure::Antiperiodic {
            for (v, g) in buf.iter_mut().zip(&self.plan.gauge) {
                *v *= g.conj();
            }
        }
        buf
    }
}

fn node_at(n: usize, j: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Complex mode amplitudes `b_k` on the frequency set of a spin structure,
/// stored in FFT slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    spin: SpinStructure,
    coefficients: Vec<Complex64>,
}

impl ModeVector {
    pub fn zeros(n: usize, spin: SpinStructure) -> Self {
        Self {
            spin,
            coefficients: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Builds a mode vector from `(λ, b)` pairs. Every `λ` must belong to the
    /// representable frequency set of the spin structure on `n` nodes.
    pub fn from_modes(n: usize, spin: SpinStructure, modes: &[(f64, Complex64)]) -> Result<Self> {
        let mut mv = Self::zeros(n, spin);
        for &(lam, b) in modes {
            let slot = mv
                .slot_of(lam)
                .ok_or_else(|| Error::Domain(format!("frequency {lam} not representable for {spin} on {n} nodes")))?;
            mv.coefficients[slot] += b;
        }
        Ok(mv)
    }

    pub fn spin(&self) -> SpinStructure {
        self.spin
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Frequency of FFT slot `index`.
    pub fn frequency(&self, index: usize) -> f64 {
        let n = self.coefficients.len() as i64;
        let k = index as i64;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 + self.spin.frequency_shift()
    }

    /// Iterates `(λ, b)` pairs in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.frequency(i), c))
    }

    pub fn coefficient(&self, lambda: f64) -> Option<Complex64> {
        self.slot_of(lambda).map(|i| self.coefficients[i])
    }

    /// Sum of `|b_k|²`, i.e. the mean square of the nodal field.
    pub fn power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    fn slot_of(&self, lambda: f64) -> Option<usize> {
        let n = self.coefficients.len() as i64;
        let k = lambda - self.spin.frequency_shift();
        if (k - k.round()).abs() > 1e-12 {
            return None;
        }
        let k = k.round() as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    fn scaled_by<F: Fn(f64) -> f64>(&self, factor: F) -> Self {
        Self {
            spin: self.spin,
            coefficients: self.iter().map(|(lam, c)| c * factor(lam)).collect(),
        }
    }
}

/// Dirac eigenvalue labels `λ_k`: `k` for σ₁, `k + ½` for σ₂.
pub fn dirac_eigenvalues(spin: SpinStructure, k_range: RangeInclusive<i64>) -> Result<Vec<f64>> {
    if k_range.is_empty() {
        return Err(Error::Domain("empty eigenvalue index range".into()));
    }
    Ok(k_range.map(|k| k as f64 + spin.frequency_shift()).collect())
}

/// Exact periodic heat flow `a_k ↦ a_k e^{-k²t}`.
pub fn heat_exact(initial: &ModeVector, t: f64) -> Result<ModeVector> {
    if initial.spin != SpinStructure::Periodic {
        return Err(Error::Domain("heat flow solution requires periodic modes".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok(initial.scaled_by(|k| (-k * k * t).exp()))
}

/// Growth rate `λ - ελ²` of mode `e^{iλs}` under `∂_tψ = εψ'' - iψ'`.
pub fn flat_spinor_rate(lambda: f64, eps: f64) -> f64 {
    lambda - eps * lambda * lambda
}

/// Exact flat spinor flow `b_k ↦ b_k e^{(λ_k - ελ_k²)t}`.
pub fn flat_spinor_exact(initial: &ModeVector, eps: f64, t: f64) -> Result<ModeVector> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok(initial.scaled_by(|lam| (flat_spinor_rate(lam, eps) * t).exp()))
}

/// Fundamental solution `χ(s,t) = Σ e^{iλs} e^{(λ-ελ²)t}` of the flat spinor
/// flow, truncated to the frequencies a grid of `n` nodes represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSpinorKernel {
    pub eps: f64,
    pub spin: SpinStructure,
    pub n: usize,
}

impl FlatSpinorKernel {
    pub fn new(eps: f64, spin: SpinStructure, n: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
        }
        Ok(Self { eps, spin, n })
    }

    /// Point evaluation of the truncated series.
    pub fn evaluate(&self, s: f64, t: f64) -> Complex64 {
        let half = (self.n / 2) as i64;
        (-half..half)
            .map(|k| {
                let lam = k as f64 + self.spin.frequency_shift();
                Complex64::from_polar((flat_spinor_rate(lam, self.eps) * t).exp(), lam * s)
            })
            .sum()
    }

    /// Mode amplitudes of `χ(·, t)`.
    pub fn modes(&self, t: f64) -> ModeVector {
        let unit = ModeVector {
            spin: self.spin,
            coefficients: vec![Complex64::new(1.0, 0.0); self.n],
        };
        unit.scaled_by(|lam| (flat_spinor_rate(lam, self.eps) * t).exp())
    }
}

/// `(1/2π) ∫ ψ₀(y) χ(s - y, t) dy`, evaluated through the convolution theorem.
pub fn convolve_initial(
    grid: &CircleGrid,
    psi0: &[Complex64],
    spin: SpinStructure,
    kernel: &FlatSpinorKernel,
    t: f64,
) -> Result<Vec<Complex64>> {
    if kernel.spin != spin {
        return Err(Error::Config(format!(
            "kernel spin structure {} does not match field spin structure {}",
            kernel.spin, spin
        )));
    }
    check_len(grid.len(), kernel.n)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let initial = grid.forward_transform(psi0, spin)?;
    let weights = kernel.modes(t);
    let product = ModeVector {
        spin,
        coefficients: initial
            .coefficients
            .iter()
            .zip(weights.coefficients.iter())
            .map(|(a, b)| a * b)
            .collect(),
    };
    grid.inverse_transform(&product)
}
