//! Scenario execution and file output.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dgflow_core::io::{
    read_diagnostics, write_diagnostics, write_energy_reports, write_long_form, write_snapshot, write_spectrum,
};
use dgflow_core::oracle::{dense_operator_matrix, DenseOperator};
use dgflow_core::spectral::{flat_spinor_exact, heat_exact};
use dgflow_core::spinor::twisted_dirac;
use dgflow_core::{
    detect_stationary, energies, epsilon_sweep, evolve, speed_spread, CircleGrid, DiagnosticsRecord, EnergyReport,
    FlowError, FlowParams, FlowState, ModeVector, SpinStructure,
};
use serde::Serialize;

use crate::config::{InitialConfig, PlotInput, Resolved, RunConfig, Scenario};
use crate::error::{CliError, EXIT_BLOWUP, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VALIDATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Blowup,
    NotConverged,
    ValidationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Blowup => EXIT_BLOWUP,
            Status::NotConverged => EXIT_NOT_CONVERGED,
            Status::ValidationFailed => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationEntry {
    pub spin: String,
    pub curve_error: f64,
    pub spinor_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub eps: f64,
    pub exploratory: bool,
    pub converged: bool,
    pub final_t: f64,
    pub grad_norm: f64,
    pub regularized_residual: f64,
    pub unregularized_residual: f64,
    pub dirac_norm: f64,
    pub speed_spread: f64,
    pub diagnostics: String,
    pub snapshot: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub operator: String,
    pub path: String,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub symmetry_defect: f64,
}

/// Written as `summary.toml`. `config` echoes the effective configuration,
/// after command-line overrides, and is enough to reproduce the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularized_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unregularized_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirac_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_spread: Option<f64>,
    /// Sup distance between initial and final state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_trace: Option<String>,
    pub diagnostics: Vec<String>,
    pub snapshots: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<ValidationEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spectra: Vec<SpectrumSummary>,
    pub config: RunConfig,
}

impl RunSummary {
    fn new(scenario: Scenario, config: &RunConfig) -> Self {
        Self {
            scenario,
            status: Status::Ok,
            message: None,
            final_t: None,
            converged: None,
            regularized_residual: None,
            unregularized_residual: None,
            dirac_norm: None,
            speed_spread: None,
            drift: None,
            wall_time_s: 0.0,
            energy_trace: None,
            diagnostics: Vec::new(),
            snapshots: Vec::new(),
            plot_data: None,
            validation: Vec::new(),
            sweep: Vec::new(),
            spectra: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Validates the configuration, then runs `scenario` and writes its outputs
/// and `summary.toml` into the output directory. Nothing is written when the
/// configuration is rejected.
pub fn run(scenario: Scenario, mut config: RunConfig, overrides: &Overrides) -> Result<RunSummary, CliError> {
    if let Some(s) = config.scenario {
        if s != scenario {
            return Err(CliError::Config(format!(
                "config is for scenario `{}`, not `{}`",
                s.label(),
                scenario.label()
            )));
        }
    }
    config.scenario = Some(scenario);
    if let Some(seed) = overrides.seed {
        config.override_seed(seed);
    }
    if let Some(out) = &overrides.out {
        config.output_dir = Some(out.clone());
    }
    let out = config
        .output_dir
        .clone()
        .ok_or_else(|| CliError::Config("no output directory: set `output_dir` or pass --out".into()))?;

    let resolved = match scenario {
        Scenario::Report => {
            if config.report.as_ref().map_or(true, |r| r.inputs.is_empty()) {
                return Err(CliError::Config("report needs [[report.inputs]]".into()));
            }
            None
        }
        _ => Some(config.resolve()?),
    };
    if scenario == Scenario::Validate {
        check_validate(&config, resolved.as_ref().unwrap())?;
    }
    if scenario == Scenario::Sweep {
        check_sweep(&config)?;
    }

    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let start = Instant::now();
    let mut summary = RunSummary::new(scenario, &config);
    match scenario {
        Scenario::Validate => run_validate(&config, &resolved.unwrap(), &out, &mut summary)?,
        Scenario::Flow => run_flow(&config, &resolved.unwrap(), &out, &mut summary)?,
        Scenario::Sweep => run_sweep(&config, &resolved.unwrap(), &out, &mut summary)?,
        Scenario::Spectrum => run_spectrum(&resolved.unwrap(), &out, &mut summary)?,
        Scenario::Report => {
            let path = out.join("plot_data.csv");
            emit_plot_data(&config.report.as_ref().unwrap().inputs, &path)?;
            summary.plot_data = Some(display(&path));
        }
    }
    summary.wall_time_s = start.elapsed().as_secs_f64();
    let path = out.join("summary.toml");
    std::fs::write(&path, summary.to_toml()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(summary)
}

fn check_validate(config: &RunConfig, r: &Resolved) -> Result<(), CliError> {
    if r.manifold.to_string() != "unit_circle" {
        return Err(CliError::Config("validate runs on manifold `unit_circle`".into()));
    }
    if !matches!(r.initial, InitialConfig::ExplicitModes { .. }) {
        return Err(CliError::Config("validate needs initial kind `explicit_modes`".into()));
    }
    if config.stop_when_stationary {
        // the exact solution is only compared at t_end
        return Err(CliError::Config("validate needs stop_when_stationary = false".into()));
    }
    Ok(())
}

fn check_sweep(config: &RunConfig) -> Result<(), CliError> {
    let list = &config.eps_list;
    if list.is_empty() || list.iter().any(|e| !(*e > 0.0)) || list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "eps_list must be non-empty, positive and strictly descending".into(),
        ));
    }
    for &eps in list {
        config.flow_params(eps)?;
    }
    Ok(())
}

fn initial_state(r: &Resolved, spin: SpinStructure) -> Result<FlowState, CliError> {
    let (c, psi) = r.initial.to_initial_data(spin).build(&r.manifold, r.n, spin)?;
    Ok(FlowState::new(c, psi)?)
}

fn write_trajectory(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    write_diagnostics(create(path)?, records)?;
    Ok(())
}

fn write_state(path: &Path, state: &FlowState) -> Result<(), CliError> {
    write_snapshot(create(path)?, &state.curve, &state.spinor)?;
    Ok(())
}

fn sup_distance(a: &FlowState, b: &FlowState) -> f64 {
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

/// Sup-norm errors of curve and spinor against the closed-form solution on
/// the unit circle.
fn exact_errors(
    r: &Resolved,
    params: &FlowParams,
    spin: SpinStructure,
    state: &FlowState,
) -> Result<(f64, f64), CliError> {
    let InitialConfig::ExplicitModes { angle, spinor } = &r.initial else {
        unreachable!("checked before the run")
    };
    let grid = CircleGrid::new(r.n)?;
    let a0 = ModeVector::from_modes(
        r.n,
        SpinStructure::Periodic,
        &angle
            .iter()
            .map(|m| (m.k as f64, num_complex::Complex64::new(m.re, m.im)))
            .collect::<Vec<_>>(),
    )?;
    let theta: Vec<f64> = grid
        .inverse_transform(&heat_exact(&a0, state.t)?)?
        .iter()
        .zip(grid.nodes())
        .map(|(z, s)| z.re + s)
        .collect();
    let b0 = ModeVector::from_modes(
        r.n,
        spin,
        &spinor
            .iter()
            .map(|m| {
                (
                    m.k as f64 + spin.frequency_shift(),
                    num_complex::Complex64::new(m.re, m.im),
                )
            })
            .collect::<Vec<_>>(),
    )?;
    let spinor_time = if params.rescaled { state.t / params.eps } else { state.t };
    let phi = grid.inverse_transform(&flat_spinor_exact(&b0, params.eps, spinor_time)?)?;
    let (mut ec, mut es) = (0.0f64, 0.0f64);
    for j in 0..r.n {
        let (sn, cs) = theta[j].sin_cos();
        let u = state.curve.point(j);
        let v = state.spinor.node(j);
        ec = ec.max((u[0] - cs).abs()).max((u[1] - sn).abs());
        es = es.max((v[0] + sn * phi[j]).norm()).max((v[1] - cs * phi[j]).norm());
    }
    Ok((ec, es))
}

fn run_validate(config: &RunConfig, r: &Resolved, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    for spin in SpinStructure::ALL {
        let s0 = initial_state(r, spin)?;
        let diag = out.join(format!("diagnostics_{spin}.csv"));
        let snap = out.join(format!("snapshot_{spin}.csv"));
        match evolve(&s0, &r.params, |_, _| {}) {
            Ok(o) => {
                write_trajectory(&diag, &o.trajectory)?;
                write_state(&snap, &o.state)?;
                let (curve_error, spinor_error) = exact_errors(r, &r.params, spin, &o.state)?;
                let pass = curve_error.max(spinor_error) <= config.tolerances.validate;
                if !pass && summary.status == Status::Ok {
                    summary.status = Status::ValidationFailed;
                }
                summary.validation.push(ValidationEntry {
                    spin: spin.to_string(),
                    curve_error,
                    spinor_error,
                    pass,
                });
                summary.final_t = Some(o.state.t);
            }
            Err(FlowError::Blowup {
                t,
                reason,
                last_valid,
                trajectory,
            }) => {
                write_trajectory(&diag, &trajectory)?;
                write_state(&snap, &last_valid)?;
                summary.status = Status::Blowup;
                summary.message = Some(format!("{spin}: blowup at t = {t}: {reason}"));
            }
            Err(e) => return Err(e.into()),
        }
        summary.diagnostics.push(display(&diag));
        summary.snapshots.push(display(&snap));
    }
    Ok(())
}

fn run_flow(config: &RunConfig, r: &Resolved, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let s0 = initial_state(r, r.spin)?;
    let eps = r.params.eps;
    let initial_snap = out.join("snapshot_initial.csv");
    write_state(&initial_snap, &s0)?;
    summary.snapshots.push(display(&initial_snap));

    let mut reports: Vec<EnergyReport> = Vec::new();
    let result = evolve(&s0, &r.params, |s, _| {
        if let Ok(e) = energies(&s.curve, &s.spinor, eps) {
            reports.push(e);
        }
    });
    let energy_path = out.join("energies.csv");
    let diag = out.join("diagnostics.csv");
    let (state, trajectory, converged) = match result {
        Ok(o) => (o.state, o.trajectory, o.converged),
        Err(FlowError::Blowup {
            t,
            reason,
            last_valid,
            trajectory,
        }) => {
            summary.status = Status::Blowup;
            summary.message = Some(format!("blowup at t = {t}: {reason}"));
            (*last_valid, trajectory, false)
        }
        Err(e) => return Err(e.into()),
    };
    write_trajectory(&diag, &trajectory)?;
    write_energy_reports(create(&energy_path)?, &reports)?;
    let final_snap = out.join(if summary.status == Status::Blowup {
        "snapshot_last_valid.csv"
    } else {
        "snapshot_final.csv"
    });
    write_state(&final_snap, &state)?;
    summary.diagnostics.push(display(&diag));
    summary.snapshots.push(display(&final_snap));
    summary.energy_trace = Some(display(&energy_path));

    let report = detect_stationary(&state, eps, r.params.stationary_tol)?;
    summary.final_t = Some(state.t);
    summary.converged = Some(converged || report.stationary);
    summary.regularized_residual = Some(report.regularized.l2());
    summary.unregularized_residual = Some(report.unregularized.l2());
    summary.dirac_norm = Some(twisted_dirac(&state.curve, &state.spinor)?.l2_norm());
    summary.speed_spread = Some(speed_spread(&state.curve)?);
    summary.drift = Some(sup_distance(&s0, &state));
    if summary.status == Status::Ok && config.require_convergence && !report.stationary {
        summary.status = Status::NotConverged;
    }
    Ok(())
}

fn run_sweep(config: &RunConfig, r: &Resolved, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let s0 = initial_state(r, r.spin)?;
    let entries = epsilon_sweep(&s0, &config.eps_list, &r.params)?;
    let mut plot_inputs = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let dir = out.join(format!("eps_{i:02}"));
        std::fs::create_dir_all(&dir)?;
        let diag = dir.join("diagnostics.csv");
        let snap = dir.join("snapshot_final.csv");
        write_trajectory(&diag, &e.trajectory)?;
        write_state(&snap, &e.state)?;
        plot_inputs.push(PlotInput {
            path: diag.clone(),
            eps: Some(e.eps),
        });
        if !e.exploratory && summary.status == Status::Ok {
            if e.failure.is_some() {
                summary.status = Status::Blowup;
                summary.message = Some(format!("blowup at ε = {}", e.eps));
            } else if config.require_convergence && !e.converged {
                summary.status = Status::NotConverged;
            }
        }
        summary.diagnostics.push(display(&diag));
        summary.snapshots.push(display(&snap));
        summary.sweep.push(SweepSummary {
            eps: e.eps,
            exploratory: e.exploratory,
            converged: e.converged,
            final_t: e.final_t,
            grad_norm: e.grad_norm,
            regularized_residual: e.regularized_residual,
            unregularized_residual: e.unregularized_residual,
            dirac_norm: e.dirac_norm,
            speed_spread: e.speed_spread,
            diagnostics: display(&diag),
            snapshot: display(&snap),
            failure: e.failure.clone(),
        });
    }
    if let Some(last) = entries.last() {
        summary.final_t = Some(last.final_t);
        summary.converged = Some(last.converged);
        summary.regularized_residual = Some(last.regularized_residual);
        summary.unregularized_residual = Some(last.unregularized_residual);
        summary.dirac_norm = Some(last.dirac_norm);
        summary.speed_spread = Some(last.speed_spread);
    }
    let plot = out.join("plot_data.csv");
    emit_plot_data(&plot_inputs, &plot)?;
    summary.plot_data = Some(display(&plot));
    Ok(())
}

fn run_spectrum(r: &Resolved, out: &Path, summary: &mut RunSummary) -> Result<(), CliError> {
    let s0 = initial_state(r, r.spin)?;
    let ops = [
        ("dirac", DenseOperator::Dirac),
        ("laplacian", DenseOperator::Laplacian),
        ("regularized", DenseOperator::Regularized),
    ];
    for (name, op) in ops {
        let spec = dense_operator_matrix(op, &s0.curve, r.params.eps, r.spin)?;
        let path = out.join(format!("spectrum_{name}.csv"));
        write_spectrum(create(&path)?, &spec.eigenvalues, spec.symmetry_defect)?;
        summary.spectra.push(SpectrumSummary {
            operator: name.into(),
            path: display(&path),
            count: spec.eigenvalues.len(),
            min: spec.eigenvalues.first().copied().unwrap_or(f64::NAN),
            max: spec.eigenvalues.last().copied().unwrap_or(f64::NAN),
            symmetry_defect: spec.symmetry_defect,
        });
    }
    Ok(())
}

/// Merges diagnostics files into one long-form table `[eps,] t, quantity,
/// value`. The `eps` column appears when any input carries an ε.
pub fn emit_plot_data(inputs: &[PlotInput], out: &Path) -> Result<(), CliError> {
    let mut runs = Vec::with_capacity(inputs.len());
    for input in inputs {
        let file = File::open(&input.path).map_err(|e| CliError::Io(format!("{}: {e}", input.path.display())))?;
        runs.push((input.eps, read_diagnostics(file)?));
    }
    write_long_form(create(out)?, &runs)?;
    Ok(())
}
