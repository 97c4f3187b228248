//! The full nonlinear evolution: mean curvature, the system right-hand side,
//! stiff time integration, and the growth-rate experiment reproducing the
//! Rayleigh curve.
//!
//! The state is `(eta, psi)`: interface perturbation and boundary value of
//! the velocity potential, with the real mean of `psi` projected to zero at
//! construction. The evolution is
//!
//! ```text
//! eta_t = G[eta] psi,
//! psi_t = -psi_x^2/2 + (psi_x eta_x + G[eta]psi)^2 / (2(1+eta_x^2))
//!         + (eta_xx/(1+eta_x^2) - 1/(rho+eta)) / sqrt(1+eta_x^2) + 1/rho,
//! ```
//!
//! with the real mean of `psi_t` projected to zero. The flat state is an
//! exact equilibrium: the `1/rho` constant cancels the curvature of the
//! undisturbed cylinder.
//!
//! Time stepping is Lawson exponential RK4: the linearization at the flat
//! state is integrated exactly mode-wise through the complex coordinate of
//! the `linear` module (growth/decay on the unstable band, pure rotation on
//! the dispersive band), and classical RK4 handles the nonlinear remainder.
//! The stiffest linear speed on a grid of max frequency `M` is
//! `lambda_d(M) ~ M^{3/2}/sqrt(rho)`, which the exponential treatment removes
//! from the stability constraint; the remainder is quadratically small near
//! equilibrium, so `dt` of order 5e-3 is ample for the scan amplitudes.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::dno::{self, DnoSolver};
use crate::error::{Error, Result};
use crate::linear::{self, DispersionParams};
use crate::spectral::{self, FourierGrid, GridOps, RealField, Spectrum};

/// Interface state `(eta, psi)` with the zero-mean normalization on `psi`.
#[derive(Debug, Clone)]
pub struct JetState {
    /// Interface perturbation.
    pub eta: RealField,
    /// Boundary potential, real mean projected to zero.
    pub psi: RealField,
    /// Radius parameter.
    pub params: DispersionParams,
}

impl JetState {
    /// Build a state: projects the real mean of `psi` out and rejects
    /// pinch-off (`min(rho + eta) <= 0`).
    pub fn new(eta: RealField, psi: RealField, params: DispersionParams) -> Result<Self> {
        if eta.grid != psi.grid {
            return Err(Error::config("eta and psi must share a grid"));
        }
        let min_radius = eta
            .values
            .iter()
            .fold(f64::INFINITY, |acc, &v| Float::min(acc, params.rho() + v));
        if !(min_radius > 0.0) {
            return Err(Error::numeric(format_args!(
                "pinch-off: min(rho + eta) = {min_radius} <= 0"
            )));
        }
        let mean = psi.mean();
        let psi = psi.map(|v| v - mean);
        Ok(JetState { eta, psi, params })
    }

    /// The flat equilibrium on a grid.
    pub fn flat(grid: FourierGrid, params: DispersionParams) -> Self {
        JetState {
            eta: RealField::zeros(grid),
            psi: RealField::zeros(grid),
            params,
        }
    }

    /// Peak-to-trough interface amplitude `max eta - min eta` on the grid.
    pub fn delta_eta(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.eta.values {
            lo = Float::min(lo, v);
            hi = Float::max(hi, v);
        }
        hi - lo
    }

    /// Whether any sample is non-finite.
    pub fn is_finite(&self) -> bool {
        self.eta.values.iter().all(|v| v.is_finite())
            && self.psi.values.iter().all(|v| v.is_finite())
    }
}

/// Mean curvature of the perturbed cylinder,
/// `H[eta] = -eta_xx/(1+eta_x^2)^{3/2} + 1/((rho+eta) sqrt(1+eta_x^2))`,
/// dealiased.
pub fn mean_curvature(eta: &RealField, p: &DispersionParams) -> Result<RealField> {
    let min_radius = eta
        .values
        .iter()
        .fold(f64::INFINITY, |acc, &v| Float::min(acc, p.rho() + v));
    if !(min_radius > 0.0) {
        return Err(Error::numeric(format_args!(
            "pinch-off: min(rho + eta) = {min_radius} <= 0"
        )));
    }
    let ops = GridOps::new(eta.grid);
    let ex = ops.dx(eta);
    let exx = {
        let s = ops.to_spectrum(eta);
        let d2 = spectral::apply_multiplier_unchecked(&s, |xi| {
            Complex64::new(-((xi * xi) as f64), 0.0)
        });
        ops.from_spectrum(&d2)
    };
    let n = eta.grid.n_modes();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let m2 = 1.0 + ex.values[i] * ex.values[i];
            -exx.values[i] / Float::powf(m2, 1.5)
                + 1.0 / ((p.rho() + eta.values[i]) * Float::sqrt(m2))
        })
        .collect();
    let raw = RealField::from_values(eta.grid, vals)?;
    let mut s = ops.to_spectrum(&raw);
    spectral::dealias_in_place(&mut s);
    Ok(ops.from_spectrum(&s))
}

/// Full nonlinear right-hand side `(eta_t, psi_t)`; the Dirichlet-Neumann
/// value comes from the given elliptic solver, and the real mean of `psi_t`
/// is projected to zero. The flat state maps exactly to `(0, 0)`.
pub fn rhs(state: &JetState, solver: &DnoSolver) -> Result<(RealField, RealField)> {
    let grid = state.eta.grid;
    let ops = GridOps::new(grid);
    let result = solver.solve(&state.eta, &state.psi)?;
    let ex = ops.dx(&state.eta);
    let px = ops.dx(&state.psi);
    let exx = {
        let s = ops.to_spectrum(&state.eta);
        let d2 = spectral::apply_multiplier_unchecked(&s, |xi| {
            Complex64::new(-((xi * xi) as f64), 0.0)
        });
        ops.from_spectrum(&d2)
    };
    let rho = state.params.rho();
    let n = grid.n_modes();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let e = ex.values[i];
            let p = px.values[i];
            let g = result.g.values[i];
            let m2 = 1.0 + e * e;
            let kin = -0.5 * p * p + (p * e + g) * (p * e + g) / (2.0 * m2);
            let cap = (exx.values[i] / m2 - 1.0 / (rho + state.eta.values[i]))
                / Float::sqrt(m2);
            kin + cap + 1.0 / rho
        })
        .collect();
    let raw = RealField::from_values(grid, vals)?;
    let mut s = ops.to_spectrum(&raw);
    spectral::dealias_in_place(&mut s);
    s.set_coeff(0, Complex64::new(0.0, 0.0)); // project the real mean out
    let psi_t = ops.from_spectrum(&s);
    Ok((result.g, psi_t))
}

/// Time-integration configuration (Lawson exponential RK4 only).
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Time step (may be negative for backward runs).
    pub dt: f64,
    /// Final time (same sign as `dt`).
    pub t_end: f64,
    /// Keep every `snapshot_stride`-th sample (>= 1); the first and last
    /// samples are always kept.
    pub snapshot_stride: usize,
    /// Radial resolution of the elliptic solver.
    pub n_y: usize,
}

impl IntegratorConfig {
    /// Validate the configuration.
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize, n_y: usize) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::config(format_args!("dt must be nonzero, got {dt}")));
        }
        if t_end / dt < 0.0 {
            return Err(Error::config("t_end and dt must have the same sign"));
        }
        if snapshot_stride == 0 {
            return Err(Error::config("snapshot_stride must be >= 1"));
        }
        Ok(IntegratorConfig { dt, t_end, snapshot_stride, n_y })
    }
}

/// One recorded trajectory point with its diagnostics.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    /// Sample time.
    pub t: f64,
    /// State at that time.
    pub state: JetState,
    /// Peak-to-trough interface amplitude.
    pub delta_eta: f64,
    /// Sobolev norm `H^2` of eta (resolution diagnostic).
    pub h_s_norm: f64,
    /// Net boundary flux (volume-conservation diagnostic).
    pub flux: f64,
}

/// Why a trajectory ended.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStatus {
    /// Reached `t_end`.
    Completed,
    /// Truncated: the interface approached pinch-off.
    PinchOff { t: f64, detail: String },
    /// Truncated: non-finite values appeared.
    Diverged { t: f64 },
}

/// A finished (possibly truncated) trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Recorded samples, monotone in t.
    pub samples: Vec<TrajectorySample>,
    /// Termination status.
    pub status: TrajectoryStatus,
}

/// Linearized right-hand side at the flat state:
/// `eta_t = lam1(D) psi`, `psi_t = (1/rho^2 - xi^2) eta` (zero mode of
/// `psi_t` projected out, matching the nonlinear normalization).
fn linear_rhs(state: &JetState) -> (RealField, RealField) {
    let p = &state.params;
    let eta_hat = spectral::to_spectrum(&state.eta);
    let psi_hat = spectral::to_spectrum(&state.psi);
    let ge = spectral::apply_even_multiplier(&psi_hat, |a| p.lam1(a));
    let rho = p.rho();
    let he = spectral::apply_multiplier_unchecked(&eta_hat, |xi| {
        if xi == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let a = xi as f64;
            Complex64::new(1.0 / (rho * rho) - a * a, 0.0)
        }
    });
    (spectral::from_spectrum(&ge), spectral::from_spectrum(&he))
}

/// Right-hand-side evaluation pluggable into the Lawson integrator.
pub type RhsFn<'a> = &'a dyn Fn(&JetState) -> Result<(RealField, RealField)>;

/// Nonlinear remainder in the complex coordinate:
/// `N(z) = T(rhs(state)) - T(linear_rhs(state))` where `T` is the (linear)
/// packing map `to_complex`.
fn nonlinear_remainder(z: &Spectrum, p: &DispersionParams, rhs_fn: RhsFn) -> Result<Spectrum> {
    let state = linear::from_complex(z, p)?;
    let (full_e, full_p) = rhs_fn(&state)?;
    let (lin_e, lin_p) = linear_rhs(&state);
    let de = full_e.axpy(-1.0, &lin_e)?;
    let dp = full_p.axpy(-1.0, &lin_p)?;
    // to_complex is linear in (eta, psi); rates pack the same way. The rate
    // pair needs no pinch-off check, so pack it directly.
    let rate_state = JetState { eta: de, psi: dp, params: *p };
    Ok(linear::to_complex(&rate_state, p))
}

/// One Lawson-RK4 step of size `dt` in the complex coordinate.
fn lawson_step(z: &Spectrum, dt: f64, p: &DispersionParams, rhs_fn: RhsFn) -> Result<Spectrum> {
    let one = Complex64::new(1.0, 0.0);
    let e_half = |v: &Spectrum| linear::linear_flow(v, dt / 2.0, p);
    let e_mhalf = |v: &Spectrum| linear::linear_flow(v, -dt / 2.0, p);
    let l1 = nonlinear_remainder(z, p, rhs_fn)?;
    let s2 = e_half(&z.axpy(Complex64::new(dt / 2.0, 0.0), &l1)?);
    let l2 = e_mhalf(&nonlinear_remainder(&s2, p, rhs_fn)?);
    let s3 = e_half(&z.axpy(Complex64::new(dt / 2.0, 0.0), &l2)?);
    let l3 = e_mhalf(&nonlinear_remainder(&s3, p, rhs_fn)?);
    let s4 = linear::linear_flow(&z.axpy(Complex64::new(dt, 0.0), &l3)?, dt, p);
    let l4 = linear::linear_flow(&nonlinear_remainder(&s4, p, rhs_fn)?, -dt, p);
    let mut incr = l1;
    incr = incr.axpy(Complex64::new(2.0, 0.0), &l2)?;
    incr = incr.axpy(Complex64::new(2.0, 0.0), &l3)?;
    incr = incr.axpy(one, &l4)?;
    let w = z.axpy(Complex64::new(dt / 6.0, 0.0), &incr)?;
    Ok(linear::linear_flow(&w, dt, p))
}

/// Advance one step (Lawson exponential RK4).
pub fn step(state: &JetState, cfg: &IntegratorConfig, solver: &DnoSolver) -> Result<JetState> {
    step_with_rhs(state, cfg, &|s| rhs(s, solver))
}

/// `step` with a caller-provided right-hand side.
pub fn step_with_rhs(state: &JetState, cfg: &IntegratorConfig, rhs_fn: RhsFn) -> Result<JetState> {
    let p = state.params;
    let z = linear::to_complex(state, &p);
    let z1 = lawson_step(&z, cfg.dt, &p, rhs_fn)?;
    linear::from_complex(&z1, &p)
}

fn sample_of(state: &JetState, t: f64, solver: &DnoSolver) -> Result<TrajectorySample> {
    let result = solver.solve(&state.eta, &state.psi)?;
    let flux = dno::boundary_flux(&result, &state.eta, &state.params);
    let h_s_norm = spectral::sobolev_norm(&spectral::to_spectrum(&state.eta), 2.0);
    Ok(TrajectorySample {
        t,
        state: state.clone(),
        delta_eta: state.delta_eta(),
        h_s_norm,
        flux,
    })
}

/// Integrate from `state0` to `t_end`, recording strided samples. Pinch-off
/// or non-finite values truncate the trajectory with the matching status.
pub fn simulate(state0: &JetState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let solver = DnoSolver::new(state0.eta.grid, cfg.n_y, state0.params)?;
    simulate_with(state0, cfg, &solver)
}

/// `simulate` with a caller-provided (cached) solver.
pub fn simulate_with(
    state0: &JetState,
    cfg: &IntegratorConfig,
    solver: &DnoSolver,
) -> Result<Trajectory> {
    simulate_with_rhs(state0, cfg, solver, &|s| rhs(s, solver))
}

/// `simulate` with a caller-provided right-hand side (the solver is still
/// used for the per-sample flux diagnostic).
pub fn simulate_with_rhs(
    state0: &JetState,
    cfg: &IntegratorConfig,
    solver: &DnoSolver,
    rhs_fn: RhsFn,
) -> Result<Trajectory> {
    let n_steps = Float::round(cfg.t_end / cfg.dt) as usize;
    let mut samples = Vec::new();
    let mut state = state0.clone();
    samples.push(sample_of(&state, 0.0, solver)?);
    let mut status = TrajectoryStatus::Completed;
    for k in 1..=n_steps {
        let t = cfg.dt * k as f64;
        match step_with_rhs(&state, cfg, rhs_fn) {
            Ok(next) => {
                if !next.is_finite() {
                    status = TrajectoryStatus::Diverged { t };
                    break;
                }
                state = next;
            }
            Err(Error::Numeric(msg)) => {
                status = TrajectoryStatus::PinchOff { t, detail: msg };
                break;
            }
            Err(e) => return Err(e),
        }
        if k % cfg.snapshot_stride == 0 || k == n_steps {
            match sample_of(&state, t, solver) {
                Ok(s) => samples.push(s),
                Err(Error::Numeric(msg)) => {
                    status = TrajectoryStatus::PinchOff { t, detail: msg };
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Trajectory { samples, status })
}

/// Growth-scan configuration.
#[derive(Debug, Clone, Copy)]
pub struct GrowthScanConfig {
    /// Seed amplitude (default 1e-6).
    pub amplitude: f64,
    /// Time step.
    pub dt: f64,
    /// Horizon for the fit.
    pub t_end: f64,
    /// Lower edge of the fit window as a multiple of the seed amplitude.
    pub window_lo_factor: f64,
    /// Upper edge of the fit window (absolute).
    pub window_hi: f64,
    /// Radial resolution.
    pub n_y: usize,
}

impl Default for GrowthScanConfig {
    fn default() -> Self {
        GrowthScanConfig {
            amplitude: 1e-6,
            dt: 5e-3,
            t_end: 25.0,
            window_lo_factor: 10.0,
            window_hi: 1e-2,
            n_y: 48,
        }
    }
}

/// One row of the growth-rate table.
#[derive(Debug, Clone)]
pub struct GrowthRecord {
    /// Seeded integer wavenumber.
    pub xi: i64,
    /// Fitted exponential rate of `delta_eta(t)` (0 for dispersive modes
    /// whose amplitude never reaches the window).
    pub omega_measured: f64,
    /// Linear prediction `lambda_g(xi)`.
    pub omega_rayleigh: f64,
    /// False when an unstable mode failed to produce a usable fit window.
    pub fit_ok: bool,
}

/// Run the growth experiment for one mode.
pub fn growth_for_mode(
    grid: FourierGrid,
    xi: i64,
    p: &DispersionParams,
    cfg: &GrowthScanConfig,
) -> Result<GrowthRecord> {
    let lam = linear::lambda_g(xi, p);
    let state0 = if p.is_growing(xi) {
        linear::unstable_seed(grid, xi, cfg.amplitude, p)?
    } else {
        let eta = RealField::from_fn(grid, |x| cfg.amplitude * Float::cos(xi as f64 * x));
        JetState::new(eta, RealField::zeros(grid), *p)?
    };
    let icfg = IntegratorConfig::new(cfg.dt, cfg.t_end, 1, cfg.n_y)?;
    let traj = simulate(&state0, &icfg)?;
    let lo = cfg.window_lo_factor * cfg.amplitude;
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for s in &traj.samples {
        if s.delta_eta >= lo && s.delta_eta <= cfg.window_hi {
            ts.push(s.t);
            logs.push(Float::ln(s.delta_eta));
        }
    }
    if ts.len() < 2 {
        if lam == 0.0 {
            // Dispersive mode: the amplitude never reaches the window.
            return Ok(GrowthRecord {
                xi,
                omega_measured: 0.0,
                omega_rayleigh: 0.0,
                fit_ok: true,
            });
        }
        return Ok(GrowthRecord {
            xi,
            omega_measured: f64::NAN,
            omega_rayleigh: lam,
            fit_ok: false,
        });
    }
    // Least-squares slope of ln(delta_eta) against t.
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, l) in ts.iter().zip(logs.iter()) {
        num += (t - mt) * (l - ml);
        den += (t - mt) * (t - mt);
    }
    Ok(GrowthRecord {
        xi,
        omega_measured: num / den,
        omega_rayleigh: lam,
        fit_ok: true,
    })
}

/// Growth-rate table over a list of seeded modes.
pub fn growth_scan(
    grid: FourierGrid,
    modes: &[i64],
    p: &DispersionParams,
    cfg: &GrowthScanConfig,
) -> Result<Vec<GrowthRecord>> {
    let mut out = Vec::with_capacity(modes.len());
    for &xi in modes {
        out.push(growth_for_mode(grid, xi, p, cfg)?);
    }
    Ok(out)
}

/// Initial states used by the CLI seeding options.
pub fn cosine_seed(
    grid: FourierGrid,
    xi: i64,
    amplitude: f64,
    p: &DispersionParams,
) -> Result<JetState> {
    let eta = RealField::from_fn(grid, |x| amplitude * Float::cos(xi as f64 * x));
    JetState::new(eta, RealField::zeros(grid), *p)
}

/// Dispersive-band seed: single-mode `z` on the dispersive side, unpacked.
pub fn dispersive_seed(
    grid: FourierGrid,
    xi: i64,
    amplitude: f64,
    p: &DispersionParams,
) -> Result<JetState> {
    if xi == 0 || p.is_growing(xi) {
        return Err(Error::config(format_args!(
            "frequency {xi} is not in the dispersive band for rho={}",
            p.rho()
        )));
    }
    let mut z = Spectrum::zeros(grid);
    z.set_coeff(xi, Complex64::new(amplitude, 0.0));
    z.set_coeff(-xi, Complex64::new(amplitude, 0.0));
    linear::from_complex(&z, p)
}
