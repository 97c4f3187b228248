//! Reduction of the evolution to a single complex unknown.
//!
//! Three layers, each invertible near the equilibrium:
//!
//! 1. the good unknown `w = psi - T_B eta`, which removes the worst
//!    derivative loss from the Dirichlet-Neumann paralinearization;
//! 2. the complex diagonalized unknown `u`, assembled band by band: the
//!    growing band through `sqrt(1/rho^2 - |D|^2)` and `sqrt(lambda^(1))`,
//!    the intermediate dispersive band through `sqrt(|D|^2 - 1/rho^2)` and
//!    `sqrt(lambda^(1))`, and the high band through the paradifferential
//!    operators `T_q` and `T_p` of the diagonalization symbols;
//! 3. the cutoff extension: `b_Ext`, the extended transport-dispersion
//!    symbol `gamma_Ext`, and the smoothing remainder `R_Ext`, defined as
//!    the exact residual of the extended equation so that
//!    `du/dt = Lambda_g conj(u) + i Pi_d T_{gamma_Ext} u + R_Ext(u)`
//!    holds identically inside the cutoff.
//!
//! Where a Dirichlet-Neumann value enters a small residual (the time
//! derivative of `u` in `R_Ext`), the flat part of the operator is taken
//! from the exact multiplier and only the shape correction from the elliptic
//! solver: `G~[eta]psi = G[0]psi + (solve(eta, psi) - solve(0, psi))`.  This
//! cancels the discretization bias of the radial grid, which is linear in
//! `psi` and would otherwise pollute quadratically small quantities.

use num_complex::Complex64;
use num_traits::float::Float;

use crate::dno::{dno_flat, DnoSolver};
use crate::dynamics::JetState;
use crate::error::{Error, Result};
use crate::linear::{self, DispersionParams};
use crate::paradiff::{paradiff_apply, paradiff_apply_function};
use crate::spectral::{
    self, apply_multiplier_unchecked, dealias_in_place, smoothstep, sobolev_norm, FourierGrid,
    GridOps, RealField, Spectrum,
};
use crate::symbol::{diag_symbols, PluriHomogeneousSymbol};

/// Sobolev index of the cutoff norm in the extension.
pub const S0: f64 = 5.5;

/// The extension bump: 1 on `|x| <= 2`, 0 on `|x| >= 4`, smooth monotone
/// in between.
pub fn kappa(x: f64) -> f64 {
    1.0 - smoothstep((Float::abs(x) - 2.0) / 2.0)
}

/// Boundary fields with the flat discretization bias removed.
#[derive(Debug, Clone)]
pub struct CorrectedFields {
    /// `G~[eta]psi`.
    pub g: RealField,
    /// `B = (eta_x psi_x + G~) / (1 + eta_x^2)`.
    pub b: RealField,
    /// `V = psi_x - B eta_x`.
    pub v: RealField,
}

/// Dirichlet-Neumann boundary fields with the corrected-flat evaluation.
pub fn corrected_fields(
    eta: &RealField,
    psi: &RealField,
    solver: &DnoSolver,
    p: &DispersionParams,
) -> Result<CorrectedFields> {
    let grid = eta.grid;
    let ops = GridOps::new(grid);
    let full = solver.solve(eta, psi)?;
    let flat = solver.solve(&RealField::zeros(grid), psi)?;
    let exact_flat = dno_flat(psi, p);
    let n = grid.n_modes();
    let mut g = RealField::zeros(grid);
    for i in 0..n {
        g.values[i] = exact_flat.values[i] + full.g.values[i] - flat.g.values[i];
    }
    let ex = ops.dx(eta);
    let px = ops.dx(psi);
    let mut b = RealField::zeros(grid);
    let mut v = RealField::zeros(grid);
    for i in 0..n {
        let e = ex.values[i];
        b.values[i] = (e * px.values[i] + g.values[i]) / (1.0 + e * e);
        v.values[i] = px.values[i] - b.values[i] * e;
    }
    Ok(CorrectedFields { g, b, v })
}

/// Full right-hand side of the evolution with the corrected-flat
/// Dirichlet-Neumann evaluation (same equations as `dynamics::rhs`).
pub fn corrected_rhs(state: &JetState, solver: &DnoSolver) -> Result<(RealField, RealField)> {
    let grid = state.eta.grid;
    let ops = GridOps::new(grid);
    let fields = corrected_fields(&state.eta, &state.psi, solver, &state.params)?;
    let ex = ops.dx(&state.eta);
    let px = ops.dx(&state.psi);
    let exx = {
        let s = ops.to_spectrum(&state.eta);
        let d2 = apply_multiplier_unchecked(&s, |xi| Complex64::new(-((xi * xi) as f64), 0.0));
        ops.from_spectrum(&d2)
    };
    let rho = state.params.rho();
    let n = grid.n_modes();
    let mut raw = RealField::zeros(grid);
    for i in 0..n {
        let e = ex.values[i];
        let pv = px.values[i];
        let g = fields.g.values[i];
        let m2 = 1.0 + e * e;
        let kin = -0.5 * pv * pv + (pv * e + g) * (pv * e + g) / (2.0 * m2);
        let cap =
            (exx.values[i] / m2 - 1.0 / (rho + state.eta.values[i])) / Float::sqrt(m2);
        raw.values[i] = kin + cap + 1.0 / rho;
    }
    let mut s = ops.to_spectrum(&raw);
    dealias_in_place(&mut s);
    s.set_coeff(0, Complex64::new(0.0, 0.0));
    let psi_t = ops.from_spectrum(&s);
    let mut eta_t = ops.to_spectrum(&fields.g);
    dealias_in_place(&mut eta_t);
    Ok((ops.from_spectrum(&eta_t), psi_t))
}

/// Integrate the flow with the corrected-flat Dirichlet-Neumann evaluation
/// (same Lawson scheme as `dynamics::simulate`, but the flat part of the
/// elliptic solve is replaced by the exact multiplier).  The extended
/// remainder is assembled from `corrected_rhs`, so trajectories fed to the
/// Duhamel diagnostics must flow along the same right-hand side.
pub fn simulate_corrected(
    state0: &JetState,
    cfg: &crate::dynamics::IntegratorConfig,
) -> Result<crate::dynamics::Trajectory> {
    let solver = DnoSolver::new(state0.eta.grid, cfg.n_y, state0.params)?;
    crate::dynamics::simulate_with_rhs(state0, cfg, &solver, &|s| corrected_rhs(s, &solver))
}

fn t_b_eta(b: &RealField, eta: &RealField) -> Result<RealField> {
    let s = spectral::to_spectrum(eta);
    let t = paradiff_apply_function(b, &s)?;
    Ok(spectral::from_spectrum(&t))
}

/// The good unknown `w = psi - T_B eta` (with `B` from the elliptic solve).
pub fn good_unknown(state: &JetState, n_y: usize) -> Result<(RealField, RealField)> {
    let solver = DnoSolver::new(state.eta.grid, n_y, state.params)?;
    let result = solver.solve(&state.eta, &state.psi)?;
    let correction = t_b_eta(&result.b, &state.eta)?;
    let w = state.psi.axpy(-1.0, &correction)?;
    Ok((state.eta.clone(), w))
}

/// Recover `psi` from `(eta, w)` by the damped fixed point
/// `psi <- w + T_{B(eta, psi)} eta`.
pub fn good_unknown_inverse(
    eta: &RealField,
    w: &RealField,
    n_y: usize,
    p: &DispersionParams,
) -> Result<JetState> {
    let solver = DnoSolver::new(eta.grid, n_y, *p)?;
    let tol = 1e-12 * (1.0 + w.max_norm());
    let mut psi = w.clone();
    let mut last = f64::INFINITY;
    for _ in 0..80 {
        let result = solver.solve(eta, &psi)?;
        let target = w.axpy(1.0, &t_b_eta(&result.b, eta)?)?;
        let step = target.axpy(-1.0, &psi)?;
        let size = step.max_norm();
        if size <= tol {
            return JetState::new(eta.clone(), target, *p);
        }
        if size > 2.0 * last {
            break;
        }
        last = size;
        psi = psi.axpy(0.5, &step)?;
    }
    Err(Error::numeric(format_args!(
        "good-unknown inversion did not contract; the state is too large"
    )))
}

/// Band classification at integer frequency `xi`.
fn is_intermediate(xi: i64, p: &DispersionParams, n_cut: i64) -> bool {
    xi != 0 && !p.is_growing(xi) && xi.abs() < n_cut
}

fn check_cut(grid: &FourierGrid, p: &DispersionParams, n_cut: i64) -> Result<()> {
    if (n_cut as f64) <= 1.0 / p.rho() || n_cut < 8 {
        return Err(Error::config(format_args!(
            "high-frequency cut {n_cut} must exceed max(1/rho, 8)"
        )));
    }
    if n_cut > grid.max_freq() {
        return Err(Error::config(format_args!(
            "high-frequency cut {n_cut} exceeds the retained band (max {})",
            grid.max_freq()
        )));
    }
    Ok(())
}

/// The complex diagonalized unknown
///
/// ```text
///     u = ( Mg Pi_g eta + Ml Pi_g w + Ml Pi_int w + T_q Pi_{>=N} w )
///       + i ( Pi_0 eta + Mg Pi_g eta - Ml Pi_g w + Md Pi_int eta
///             + T_p Pi_{>=N} eta ),
/// ```
///
/// with `Mg = sqrt(1/rho^2 - xi^2)`, `Md = sqrt(xi^2 - 1/rho^2)`,
/// `Ml = sqrt(lambda^(1))` and the diagonalization symbols `p, q` above the
/// cut `N`.
pub fn complex_diag(
    eta: &RealField,
    w: &RealField,
    p: &DispersionParams,
    n_cut: i64,
) -> Result<Spectrum> {
    let grid = eta.grid;
    check_cut(&grid, p, n_cut)?;
    let (p_sym, q_sym, _gamma) = diag_symbols(eta, p, n_cut)?;
    complex_diag_with(eta, w, p, n_cut, &p_sym, &q_sym)
}

/// `complex_diag` with precomputed diagonalization symbols.
pub fn complex_diag_with(
    eta: &RealField,
    w: &RealField,
    p: &DispersionParams,
    n_cut: i64,
    p_sym: &PluriHomogeneousSymbol,
    q_sym: &PluriHomogeneousSymbol,
) -> Result<Spectrum> {
    let grid = eta.grid;
    check_cut(&grid, p, n_cut)?;
    let es = spectral::to_spectrum(eta);
    let ws = spectral::to_spectrum(w);
    let rho = p.rho();
    let mut u = Spectrum::zeros(grid);
    for (xi, ec) in es.iter_freqs() {
        let wc = ws.coeff(xi);
        let i = Complex64::new(0.0, 1.0);
        let z = xi as f64;
        let total = if xi == 0 {
            i * ec
        } else if p.is_growing(xi) {
            let mg = Float::sqrt(1.0 / (rho * rho) - z * z);
            let ml = Float::sqrt(p.lam1(z));
            (mg * ec + ml * wc) + i * (mg * ec - ml * wc)
        } else if is_intermediate(xi, p, n_cut) {
            let md = Float::sqrt(z * z - 1.0 / (rho * rho));
            let ml = Float::sqrt(p.lam1(z));
            ml * wc + i * (md * ec)
        } else {
            Complex64::new(0.0, 0.0) // high band handled below
        };
        u.set_coeff(xi, total);
    }
    // High band through the paradifferential operators.
    let high = |s: &Spectrum| {
        apply_multiplier_unchecked(s, |xi| {
            if xi.abs() >= n_cut {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let tq = paradiff_apply(q_sym, &high(&ws))?;
    let tp = paradiff_apply(p_sym, &high(&es))?;
    let u = u.axpy(Complex64::new(1.0, 0.0), &tq)?;
    let u = u.axpy(Complex64::new(0.0, 1.0), &tp)?;
    Ok(u)
}

/// Inverse of the flat (eta = 0) diagonalization map; used as the
/// preconditioner of the nonlinear inversion.
fn flat_inverse(
    v: &Spectrum,
    p: &DispersionParams,
    n_cut: i64,
) -> (RealField, RealField) {
    let grid = v.grid;
    let rho = p.rho();
    let mut es = Spectrum::zeros(grid);
    let mut ws = Spectrum::zeros(grid);
    for xi in 0..=grid.max_freq() {
        let z1 = v.coeff(xi);
        let z2 = v.coeff(-xi).conj();
        let z = xi as f64;
        let (ec, wc) = if xi == 0 {
            (Complex64::new(v.coeff(0).im, 0.0), Complex64::new(0.0, 0.0))
        } else if p.is_growing(xi) {
            let mg = Float::sqrt(1.0 / (rho * rho) - z * z);
            let ml = Float::sqrt(p.lam1(z));
            let sum = (z1 + z2) * 0.25;
            let dif = (z1 - z2) * Complex64::new(0.0, -0.25);
            ((sum + dif) / mg, (sum - dif) / ml)
        } else {
            // Intermediate and high bands share the structure
            // u = m_w w + i m_e eta with real even multipliers.
            let (me, mw) = if xi.abs() < n_cut {
                (
                    Float::sqrt(z * z - 1.0 / (rho * rho)),
                    Float::sqrt(p.lam1(z)),
                )
            } else {
                (
                    Float::sqrt(rho * (z * z - 1.0 / (rho * rho))),
                    Float::sqrt(rho * p.lam1(z)),
                )
            };
            (
                (z1 - z2) * Complex64::new(0.0, -0.5) / me,
                (z1 + z2) * 0.5 / mw,
            )
        };
        es.set_coeff(xi, ec);
        ws.set_coeff(xi, wc);
        if xi > 0 {
            es.set_coeff(-xi, ec.conj());
            ws.set_coeff(-xi, wc.conj());
        }
    }
    (spectral::from_spectrum(&es), spectral::from_spectrum(&ws))
}

/// Numeric inverse of `complex_diag` by a damped fixed point preconditioned
/// with the flat inverse.
pub fn complex_diag_inverse(
    u: &Spectrum,
    p: &DispersionParams,
    n_cut: i64,
) -> Result<(RealField, RealField)> {
    let grid = u.grid;
    check_cut(&grid, p, n_cut)?;
    let tol = 1e-12 * (1.0 + u.l2_norm());
    let (mut eta, mut w) = flat_inverse(u, p, n_cut);
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let image = complex_diag(&eta, &w, p, n_cut)?;
        let defect = u.axpy(Complex64::new(-1.0, 0.0), &image)?;
        let size = defect.l2_norm();
        if size <= tol {
            return Ok((eta, w));
        }
        if size > 2.0 * last {
            break;
        }
        last = size;
        let (de, dw) = flat_inverse(&defect, p, n_cut);
        eta = eta.axpy(0.7, &de)?;
        w = w.axpy(0.7, &dw)?;
    }
    Err(Error::numeric(format_args!(
        "complex diagonalization inverse did not contract; the state is too large"
    )))
}

/// The extension data at one state: the extended coefficient and symbol,
/// the cutoff values, and the diagnostics needed by the remainder.
#[derive(Debug, Clone)]
pub struct Extension {
    /// Diagonalized unknown of the state.
    pub u: Spectrum,
    /// Good unknown used to build `u` (corrected-flat `B`).
    pub w: RealField,
    /// `b_Ext = kappa(||u||_{H^4}/eps0) ((1+eta_x^2)^{-3/4} - 1)`.
    pub b_ext: RealField,
    /// Transport speed `V` (corrected-flat).
    pub v: RealField,
    /// The extended symbol `gamma_Ext`.
    pub gamma: PluriHomogeneousSymbol,
    /// `kappa(||u||_{H^{s0}}/eps0)`.
    pub kappa_s0: f64,
    /// `kappa(||u||_{H^4}/eps0)`.
    pub kappa_4: f64,
}

fn assemble_u_corrected(
    eta: &RealField,
    psi: &RealField,
    solver: &DnoSolver,
    p: &DispersionParams,
    n_cut: i64,
) -> Result<(Spectrum, RealField, RealField)> {
    let fields = corrected_fields(eta, psi, solver, p)?;
    let correction = t_b_eta(&fields.b, eta)?;
    let w = psi.axpy(-1.0, &correction)?;
    let u = complex_diag(eta, &w, p, n_cut)?;
    Ok((u, w, fields.v))
}

/// Assemble `gamma_Ext` from its three coefficient fields
///
/// ```text
///     gamma = c_lam(x) Lambda_d(xi) + i c_half(x) sgn(xi)|xi|^{1/2}
///             + c_v(x) xi,
/// ```
///
/// with `c_lam = kappa (1 + b_Ext)`, `c_half = -(3/4) kappa d_x b_Ext` and
/// `c_v = kappa V` at a state of the flow.  Exposed separately so the
/// propagator can rebuild the symbol from interpolated coefficients.
pub fn gamma_from_coefficients(
    c_lam: &RealField,
    c_half: &RealField,
    c_v: &RealField,
    p: &DispersionParams,
) -> Result<PluriHomogeneousSymbol> {
    let grid = c_lam.grid;
    grid.check_same(&c_half.grid)?;
    grid.check_same(&c_v.grid)?;
    let lam_d = |xi: f64| {
        let z = xi.round() as i64;
        linear::lambda_d(z, p)
    };
    let dlam_d = |xi: f64| {
        let z = xi.round() as i64;
        let val = linear::lambda_d(z, p);
        if z == 0 || val == 0.0 {
            0.0
        } else {
            let rho = p.rho();
            (p.dlam1(xi) * (xi * xi - 1.0 / (rho * rho)) + 2.0 * xi * p.lam1(xi))
                / (2.0 * val)
        }
    };
    let t_disp = PluriHomogeneousSymbol::from_lattice(grid, 1.5, |ix, xi| {
        let c = c_lam.values[ix];
        (
            Complex64::new(c * lam_d(xi), 0.0),
            Complex64::new(c * dlam_d(xi), 0.0),
        )
    });
    let t_transport = PluriHomogeneousSymbol::from_lattice(grid, 1.0, |ix, xi| {
        let c = c_v.values[ix];
        (Complex64::new(c * xi, 0.0), Complex64::new(c, 0.0))
    });
    let t_half = PluriHomogeneousSymbol::from_lattice(grid, 0.5, |ix, xi| {
        let c = c_half.values[ix];
        let s = if xi > 0.0 {
            1.0
        } else if xi < 0.0 {
            -1.0
        } else {
            0.0
        };
        let a = Float::abs(xi).max(0.5);
        let v0 = Complex64::new(0.0, c * s * Float::sqrt(a));
        let d0 = if Float::abs(xi) < 0.5 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 0.5 * c / Float::sqrt(a))
        };
        (v0, d0)
    });
    t_disp.add(&t_transport)?.add(&t_half)
}

/// Build the extension (coefficients, `gamma_Ext`, cutoffs) at a state.
pub fn extend(state: &JetState, n_y: usize, n_cut: i64, eps0: f64) -> Result<Extension> {
    if !(eps0 > 0.0) {
        return Err(Error::config(format_args!("eps0 must be positive, got {eps0}")));
    }
    let grid = state.eta.grid;
    check_cut(&grid, &state.params, n_cut)?;
    let p = state.params;
    let solver = DnoSolver::new(grid, n_y, p)?;
    let (u, w, v) = assemble_u_corrected(&state.eta, &state.psi, &solver, &p, n_cut)?;
    let kappa_4 = kappa(sobolev_norm(&u, 4.0) / eps0);
    let kappa_s0 = kappa(sobolev_norm(&u, S0) / eps0);
    let ops = GridOps::new(grid);
    let etax = ops.dx(&state.eta);
    let b_ext = etax.map(|ex| kappa_4 * (Float::powf(1.0 + ex * ex, -0.75) - 1.0));
    let dbx = ops.dx(&b_ext);

    // gamma_Ext = kappa_s0 ( (1+b_Ext) Lambda_d(xi)
    //                        - (3i/4) d_x b_Ext sgn(xi)|xi|^{1/2} + V xi ).
    let c_lam = b_ext.map(|b| kappa_s0 * (1.0 + b));
    let c_half = dbx.scale(-0.75 * kappa_s0);
    let c_v = v.scale(kappa_s0);
    let gamma = gamma_from_coefficients(&c_lam, &c_half, &c_v, &p)?;
    Ok(Extension { u, w, b_ext, v, gamma, kappa_s0, kappa_4 })
}

/// The extended symbol `gamma_Ext` at a state.
pub fn extended_symbol(
    state: &JetState,
    n_y: usize,
    n_cut: i64,
    eps0: f64,
) -> Result<PluriHomogeneousSymbol> {
    Ok(extend(state, n_y, n_cut, eps0)?.gamma)
}

/// `Lambda_g(D) conj(u)`: coefficient `Lambda_g(xi) conj(u^(-xi))`.
pub fn lambda_g_conj(u: &Spectrum, p: &DispersionParams) -> Spectrum {
    let mut out = Spectrum::zeros(u.grid);
    for (xi, _) in u.iter_freqs() {
        let l = linear::lambda_g(xi, p);
        if l != 0.0 {
            out.set_coeff(xi, l * u.coeff(-xi).conj());
        }
    }
    out
}

/// Projection onto the dispersive (non-growing) frequencies.
pub fn project_dispersive(u: &Spectrum, p: &DispersionParams) -> Spectrum {
    apply_multiplier_unchecked(u, |xi| {
        if p.is_growing(xi) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// The extended smoothing remainder
/// `R_Ext = kappa_s0 (du/dt - Lambda_g conj(u) - i Pi_d T_{gamma_Ext} u)`,
/// with `du/dt` obtained by differentiating the diagonalization along the
/// full corrected right-hand side (exactly in the `psi` direction, by a
/// small central difference in the `eta` direction).
pub fn extended_remainder(
    state: &JetState,
    n_y: usize,
    n_cut: i64,
    eps0: f64,
) -> Result<Spectrum> {
    let grid = state.eta.grid;
    let ext = extend(state, n_y, n_cut, eps0)?;
    if ext.kappa_s0 == 0.0 {
        return Ok(Spectrum::zeros(grid));
    }
    let p = state.params;
    let solver = DnoSolver::new(grid, n_y, p)?;
    let (eta_t, psi_t) = corrected_rhs(state, &solver)?;
    let map = |eta: &RealField, psi: &RealField| -> Result<Spectrum> {
        Ok(assemble_u_corrected(eta, psi, &solver, &p, n_cut)?.0)
    };
    // psi-direction: the map is linear in psi.
    let zero = RealField::zeros(grid);
    let du_psi = {
        let with = map(&state.eta, &psi_t)?;
        let without = map(&state.eta, &zero)?;
        with.axpy(Complex64::new(-1.0, 0.0), &without)?
    };
    // eta-direction: central difference with a step well below the state
    // scale (the second derivative of the map is order one).
    let rate = eta_t.max_norm();
    let mut du = du_psi;
    if rate > 0.0 {
        let eps = 1e-5 / rate;
        let plus = map(&state.eta.axpy(eps, &eta_t)?, &state.psi)?;
        let minus = map(&state.eta.axpy(-eps, &eta_t)?, &state.psi)?;
        let diff = plus.axpy(Complex64::new(-1.0, 0.0), &minus)?;
        du = du.axpy(Complex64::new(0.5 / eps, 0.0), &diff)?;
    }
    let lin_g = lambda_g_conj(&ext.u, &p);
    let t_gamma = project_dispersive(&paradiff_apply(&ext.gamma, &ext.u)?, &p);
    let mut r = du.axpy(Complex64::new(-1.0, 0.0), &lin_g)?;
    r = r.axpy(Complex64::new(0.0, -1.0), &t_gamma)?;
    Ok(r.scale(Complex64::new(ext.kappa_s0, 0.0)))
}

/// Right-hand side of the extended system evaluated through the hydrodynamic
/// variables: `Lambda_g conj(u) + i Pi_d T_{gamma_Ext} u + R_Ext(u)`.
/// Inside the cutoff this is exactly `du/dt`.
pub fn extended_rhs_parts(
    state: &JetState,
    n_y: usize,
    n_cut: i64,
    eps0: f64,
) -> Result<(Spectrum, Spectrum, Spectrum)> {
    let ext = extend(state, n_y, n_cut, eps0)?;
    let lin_g = lambda_g_conj(&ext.u, &state.params);
    let t_gamma =
        project_dispersive(&paradiff_apply(&ext.gamma, &ext.u)?, &state.params)
            .scale(Complex64::new(0.0, 1.0));
    let r = extended_remainder(state, n_y, n_cut, eps0)?;
    Ok((lin_g, t_gamma, r))
}
