//! The Dirichlet-Neumann operator `G[eta] psi`: exact Bessel multiplier at
//! `eta = 0`, a flattened-coordinate elliptic solver for general `eta`, the
//! quadratic shape expansion for cross-validation, and the derived boundary
//! fields B and V.
//!
//! Flattening `r = y (rho + eta(x))` maps the jet interior onto the strip
//! `T x (0, 1]`. The axisymmetric potential then satisfies
//!
//! ```text
//! alpha Phi_yy + beta Phi_xy + Phi_xx + gamma Phi_y = 0,
//! alpha = (1 + y^2 |eta_x|^2)/(rho+eta)^2,
//! beta  = -2 y eta_x / (rho+eta),
//! gamma = 1/(y (rho+eta)^2) - y (rho+eta) d_x(eta_x/(rho+eta)^2),
//! ```
//!
//! with `Phi(., 1) = psi` and `Phi_y(., 0) = 0`. The sign of the first-order
//! term is `+gamma`: deriving the coordinate change from the cylindrical
//! Laplacian produces `+gamma Phi_y`, and only that sign reproduces the flat
//! profile `I_0(rho |xi| y)` whose trace is the known multiplier
//! `ratio(rho|xi|) |xi|` (the opposite sign would give the reciprocal ratio).
//!
//! Discretization: Fourier collocation in x, second-order central finite
//! differences on a cell-centered radial grid `y_m = (m + 1/2) h`,
//! `h = 1/(n_y - 1/2)`, so the last node sits exactly at `y = 1` and the
//! `1/y` coefficient singularity at the axis is never evaluated; the axis
//! condition enters through a ghost node with even reflection. The solver is
//! a Richardson iteration preconditioned by the exact flat operator
//! (tridiagonal per Fourier mode), with a direct block-tridiagonal
//! factorization as fallback when the iteration stalls.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{DenseLu, TridiagLu};
use crate::linear::DispersionParams;
use crate::spectral::{self, FourierGrid, GridOps, RealField, Spectrum};

/// Relative residual target of the elliptic solve.
pub const SOLVER_TOL: f64 = 1e-12;

/// Iteration budget before the direct fallback takes over.
const MAX_RICHARDSON: usize = 400;

/// The flattened elliptic boundary problem for one `(eta, psi)` pair.
#[derive(Debug, Clone)]
pub struct FlattenedEllipticProblem {
    /// Interface perturbation; `min(rho + eta)` must stay above the
    /// degeneracy threshold.
    pub eta: RealField,
    /// Dirichlet datum at `y = 1` (dealiased at construction).
    pub psi: RealField,
    /// Radial point count (cell-centered nodes in `(0, 1]`).
    pub n_y: usize,
    /// Radius parameter.
    pub params: DispersionParams,
    /// Degeneracy threshold `c`: reject when `min(rho + eta) < c`.
    pub threshold: f64,
}

impl FlattenedEllipticProblem {
    /// Problem with the default degeneracy threshold `c = rho/4`.
    pub fn new(
        eta: RealField,
        psi: RealField,
        n_y: usize,
        params: DispersionParams,
    ) -> Result<Self> {
        Self::with_threshold(eta, psi, n_y, params, params.rho() / 4.0)
    }

    /// Problem with an explicit degeneracy threshold.
    pub fn with_threshold(
        eta: RealField,
        psi: RealField,
        n_y: usize,
        params: DispersionParams,
        threshold: f64,
    ) -> Result<Self> {
        if eta.grid != psi.grid {
            return Err(Error::config("eta and psi must share a grid"));
        }
        if n_y < 4 {
            return Err(Error::config(format_args!(
                "n_y must be at least 4, got {n_y}"
            )));
        }
        let min_radius = eta
            .values
            .iter()
            .fold(f64::INFINITY, |acc, &v| Float::min(acc, params.rho() + v));
        if !(min_radius >= threshold) {
            return Err(Error::numeric(format_args!(
                "domain degeneracy (pinch-off): min(rho+eta) = {min_radius} < threshold {threshold}"
            )));
        }
        let ops = GridOps::new(eta.grid);
        let mut psi_hat = ops.to_spectrum(&psi);
        spectral::dealias_in_place(&mut psi_hat);
        let psi = ops.from_spectrum(&psi_hat);
        Ok(FlattenedEllipticProblem { eta, psi, n_y, params, threshold })
    }
}

/// Output of one Dirichlet-Neumann solve.
#[derive(Debug, Clone)]
pub struct DNOResult {
    /// The Neumann datum `G[eta] psi`.
    pub g: RealField,
    /// Potential on the strip, rows `phi[m]` at `y_m` (last row is `psi`).
    pub phi: Vec<RealField>,
    /// Boundary field `B = (eta_x psi_x + G)/(1 + |eta_x|^2)`.
    pub b: RealField,
    /// Boundary field `V = psi_x - B eta_x`.
    pub v: RealField,
    /// Scaled l2 residual of the discrete PDE at the solution.
    pub residual: f64,
    /// Richardson iterations used (0 when the direct fallback produced the
    /// solution).
    pub iterations: usize,
}

/// Flat Dirichlet-Neumann operator: multiplier `ratio(rho|xi|) |xi|`.
pub fn dno_flat(psi: &RealField, p: &DispersionParams) -> RealField {
    let s = spectral::to_spectrum(psi);
    let out = spectral::apply_even_multiplier(&s, |a| p.lam1(a));
    spectral::from_spectrum(&out)
}

/// Reusable solver bound to one `(grid, n_y, params)` triple; caches the FFT
/// plan and the per-mode flat preconditioner factorizations.
#[derive(Debug, Clone)]
pub struct DnoSolver {
    grid: FourierGrid,
    n_y: usize,
    params: DispersionParams,
    ops: GridOps,
    h: f64,
    /// Cell-centered radial nodes.
    ys: Vec<f64>,
    /// Flat tridiagonal factorization per FFT index (Nyquist excluded -> None).
    flat_lu: Vec<Option<TridiagLu>>,
}

impl DnoSolver {
    /// Build the solver and the flat preconditioner.
    pub fn new(grid: FourierGrid, n_y: usize, params: DispersionParams) -> Result<Self> {
        if n_y < 4 {
            return Err(Error::config(format_args!(
                "n_y must be at least 4, got {n_y}"
            )));
        }
        let h = 1.0 / (n_y as f64 - 0.5);
        let ys: Vec<f64> = (0..n_y).map(|m| (m as f64 + 0.5) * h).collect();
        let ni = n_y - 1; // interior rows (the top node is Dirichlet data)
        let rho = params.rho();
        let a0 = 1.0 / (rho * rho);
        let mut flat_lu: Vec<Option<TridiagLu>> = Vec::with_capacity(grid.n_modes());
        for k in 0..grid.n_modes() {
            if k == grid.n_modes() / 2 {
                flat_lu.push(None);
                continue;
            }
            let xi = grid.freq_of_index(k) as f64;
            let mut lower = vec![Complex64::new(0.0, 0.0); ni - 1];
            let mut diag = vec![Complex64::new(0.0, 0.0); ni];
            let mut upper = vec![Complex64::new(0.0, 0.0); ni - 1];
            for m in 0..ni {
                let g0 = 1.0 / (ys[m] * rho * rho);
                let lo = a0 / (h * h) - g0 / (2.0 * h);
                let up = a0 / (h * h) + g0 / (2.0 * h);
                let mut d = -2.0 * a0 / (h * h) - xi * xi;
                if m == 0 {
                    d += lo; // ghost node: Phi_{-1} = Phi_0
                } else {
                    lower[m - 1] = Complex64::new(lo, 0.0);
                }
                if m < ni - 1 {
                    upper[m] = Complex64::new(up, 0.0);
                }
                diag[m] = Complex64::new(d, 0.0);
            }
            flat_lu.push(Some(TridiagLu::factor(&lower, &diag, &upper)?));
        }
        Ok(DnoSolver {
            grid,
            n_y,
            params,
            ops: GridOps::new(grid),
            h,
            ys,
            flat_lu,
        })
    }

    /// The bound radial point count.
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Variable coefficients (alpha, beta, gamma) per interior row.
    fn coefficients(&self, eta: &RealField) -> (Vec<RealField>, Vec<RealField>, Vec<RealField>) {
        let rho = self.params.rho();
        let n = self.grid.n_modes();
        let eta_x = self.ops.dx(eta);
        // w = eta_x / (rho+eta)^2, and its x-derivative.
        let w = RealField::from_values(
            self.grid,
            (0..n)
                .map(|i| {
                    let r = rho + eta.values[i];
                    eta_x.values[i] / (r * r)
                })
                .collect(),
        )
        .unwrap();
        let wx = self.ops.dx(&w);
        let ni = self.n_y - 1;
        let mut alpha = Vec::with_capacity(ni);
        let mut beta = Vec::with_capacity(ni);
        let mut gamma = Vec::with_capacity(ni);
        for m in 0..ni {
            let y = self.ys[m];
            let mut av = vec![0.0; n];
            let mut bv = vec![0.0; n];
            let mut gv = vec![0.0; n];
            for i in 0..n {
                let r = rho + eta.values[i];
                let ex = eta_x.values[i];
                av[i] = (1.0 + y * y * ex * ex) / (r * r);
                bv[i] = -2.0 * y * ex / r;
                gv[i] = 1.0 / (y * r * r) - y * r * wx.values[i];
            }
            alpha.push(RealField::from_values(self.grid, av).unwrap());
            beta.push(RealField::from_values(self.grid, bv).unwrap());
            gamma.push(RealField::from_values(self.grid, gv).unwrap());
        }
        (alpha, beta, gamma)
    }

    /// Apply the discrete interior operator to interior rows `phi` with top
    /// row `top` (the Dirichlet datum or zero).
    #[allow(clippy::too_many_arguments)]
    fn apply(
        &self,
        phi: &[RealField],
        top: &RealField,
        alpha: &[RealField],
        beta: &[RealField],
        gamma: &[RealField],
    ) -> Vec<RealField> {
        let ni = self.n_y - 1;
        let h = self.h;
        let n = self.grid.n_modes();
        // Spectral x-derivatives of every row (and the top row) in one pass.
        let mut dx_rows: Vec<RealField> = Vec::with_capacity(ni);
        let mut dxx_rows: Vec<RealField> = Vec::with_capacity(ni);
        for row in phi.iter() {
            let s = self.ops.to_spectrum(row);
            let d1 = spectral::apply_multiplier_unchecked(&s, |xi| Complex64::new(0.0, xi as f64));
            let d2 = spectral::apply_multiplier_unchecked(&s, |xi| {
                Complex64::new(-((xi * xi) as f64), 0.0)
            });
            dx_rows.push(self.ops.from_spectrum(&d1));
            dxx_rows.push(self.ops.from_spectrum(&d2));
        }
        let dx_top = self.ops.dx(top);
        let mut out = Vec::with_capacity(ni);
        for m in 0..ni {
            let (up, dx_up): (&RealField, &RealField) = if m + 1 < ni {
                (&phi[m + 1], &dx_rows[m + 1])
            } else {
                (top, &dx_top)
            };
            // Ghost row below the axis: even reflection.
            let (lo, dx_lo): (&RealField, &RealField) = if m == 0 {
                (&phi[0], &dx_rows[0])
            } else {
                (&phi[m - 1], &dx_rows[m - 1])
            };
            let mut vals = vec![0.0; n];
            for i in 0..n {
                let yy = alpha[m].values[i]
                    * (up.values[i] - 2.0 * phi[m].values[i] + lo.values[i])
                    / (h * h);
                let xy = beta[m].values[i] * (dx_up.values[i] - dx_lo.values[i]) / (2.0 * h);
                let xx = dxx_rows[m].values[i];
                let y1 = gamma[m].values[i] * (up.values[i] - lo.values[i]) / (2.0 * h);
                vals[i] = yy + xy + xx + y1;
            }
            out.push(RealField::from_values(self.grid, vals).unwrap());
        }
        out
    }

    /// Apply the flat preconditioner inverse to residual rows.
    fn precondition(&self, rows: &[RealField]) -> Vec<RealField> {
        let ni = self.n_y - 1;
        let n = self.grid.n_modes();
        let spectra: Vec<Spectrum> = rows.iter().map(|r| self.ops.to_spectrum(r)).collect();
        let mut out_spectra: Vec<Spectrum> =
            (0..ni).map(|_| Spectrum::zeros(self.grid)).collect();
        let mut col = vec![Complex64::new(0.0, 0.0); ni];
        for k in 0..n {
            let Some(lu) = &self.flat_lu[k] else { continue };
            for m in 0..ni {
                col[m] = spectra[m].coeffs[k];
            }
            lu.solve(&mut col);
            for m in 0..ni {
                out_spectra[m].coeffs[k] = col[m];
            }
        }
        out_spectra.iter().map(|s| self.ops.from_spectrum(s)).collect()
    }

    fn rows_norm(rows: &[RealField]) -> f64 {
        let mut acc = 0.0;
        for r in rows {
            let v = r.l2_norm();
            acc += v * v;
        }
        Float::sqrt(acc / rows.len() as f64)
    }

    /// Dense spectral differentiation matrices (first and second derivative)
    /// consistent with the FFT convention, for the direct fallback.
    fn derivative_matrices(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n_modes();
        let mut d1 = vec![0.0; n * n];
        let mut d2 = vec![0.0; n * n];
        for j in 0..n {
            let mut e = RealField::zeros(self.grid);
            e.values[j] = 1.0;
            let s = self.ops.to_spectrum(&e);
            let c1 = spectral::apply_multiplier_unchecked(&s, |xi| Complex64::new(0.0, xi as f64));
            let c2 = spectral::apply_multiplier_unchecked(&s, |xi| {
                Complex64::new(-((xi * xi) as f64), 0.0)
            });
            let col1 = self.ops.from_spectrum(&c1);
            let col2 = self.ops.from_spectrum(&c2);
            for i in 0..n {
                d1[i * n + j] = col1.values[i];
                d2[i * n + j] = col2.values[i];
            }
        }
        (d1, d2)
    }

    /// Direct block-tridiagonal solve (dense x-blocks per y-level).
    fn solve_direct(
        &self,
        rhs: &[RealField],
        alpha: &[RealField],
        beta: &[RealField],
        gamma: &[RealField],
    ) -> Result<Vec<RealField>> {
        let n = self.grid.n_modes();
        let ni = self.n_y - 1;
        let h = self.h;
        let (d1, d2) = self.derivative_matrices();
        // Band blocks: lower L_m, diagonal A_m, upper U_m acting on rows.
        let block = |m: usize, sign: f64| -> Vec<f64> {
            // sign=+1: upper block, sign=-1: lower block.
            let mut bmat = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut v = sign * beta[m].values[i] * d1[i * n + j] / (2.0 * h);
                    if i == j {
                        v += alpha[m].values[i] / (h * h)
                            + sign * gamma[m].values[i] / (2.0 * h);
                    }
                    bmat[i * n + j] = v;
                }
            }
            bmat
        };
        let diag_block = |m: usize| -> Vec<f64> {
            let mut amat = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut v = d2[i * n + j];
                    if i == j {
                        v += -2.0 * alpha[m].values[i] / (h * h);
                    }
                    amat[i * n + j] = v;
                }
            }
            amat
        };
        // Block Thomas elimination.
        let mut carry: Vec<f64>; // D_{m-1}^{-1} U_{m-1}, row-major n x n
        let mut rhs_rows: Vec<Vec<f64>> = rhs.iter().map(|r| r.values.clone()).collect();
        let mut factors: Vec<DenseLu> = Vec::with_capacity(ni);
        let mut carries: Vec<Vec<f64>> = Vec::with_capacity(ni.saturating_sub(1));
        {
            let mut a0 = diag_block(0);
            let l0 = block(0, -1.0);
            for idx in 0..n * n {
                a0[idx] += l0[idx]; // ghost: lower block folds into diagonal
            }
            let lu = DenseLu::factor(n, &a0)?;
            if ni > 1 {
                let mut u0 = block(0, 1.0);
                lu.solve_columns(&mut u0, n);
                carry = u0;
                carries.push(carry.clone());
            } else {
                carry = vec![0.0; n * n];
            }
            lu.solve(&mut rhs_rows[0]);
            factors.push(lu);
        }
        for m in 1..ni {
            let lm = block(m, -1.0);
            let mut am = diag_block(m);
            // A_m - L_m * carry
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += lm[i * n + k] * carry[k * n + j];
                    }
                    am[i * n + j] -= acc;
                }
            }
            let lu = DenseLu::factor(n, &am)?;
            // rhs_m -= L_m * rhs_{m-1} (already solved rows hold D^{-1}-applied values)
            let prev = rhs_rows[m - 1].clone();
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += lm[i * n + k] * prev[k];
                }
                rhs_rows[m][i] -= acc;
            }
            lu.solve(&mut rhs_rows[m]);
            if m < ni - 1 {
                let mut um = block(m, 1.0);
                lu.solve_columns(&mut um, n);
                carry = um;
                carries.push(carry.clone());
            }
            factors.push(lu);
        }
        // Back substitution: x_m = rhs_m - carry_m x_{m+1}.
        for m in (0..ni.saturating_sub(1)).rev() {
            let next = rhs_rows[m + 1].clone();
            let cm = &carries[m];
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += cm[i * n + k] * next[k];
                }
                rhs_rows[m][i] -= acc;
            }
        }
        Ok(rhs_rows
            .into_iter()
            .map(|v| RealField::from_values(self.grid, v).unwrap())
            .collect())
    }

    /// Solve the flattened problem for one `(eta, psi)` pair.
    pub fn solve(&self, eta: &RealField, psi: &RealField) -> Result<DNOResult> {
        let problem = FlattenedEllipticProblem::new(
            eta.clone(),
            psi.clone(),
            self.n_y,
            self.params,
        )?;
        self.solve_problem(&problem)
    }

    /// Solve a validated problem.
    pub fn solve_problem(&self, problem: &FlattenedEllipticProblem) -> Result<DNOResult> {
        if problem.eta.grid != self.grid || problem.n_y != self.n_y {
            return Err(Error::config("problem does not match the solver's grids"));
        }
        let eta = &problem.eta;
        let psi = &problem.psi;
        let ni = self.n_y - 1;
        let (alpha, beta, gamma) = self.coefficients(eta);
        let zero_top = RealField::zeros(self.grid);
        // RHS: move the known Dirichlet row to the right-hand side.
        let zero_rows: Vec<RealField> = (0..ni).map(|_| RealField::zeros(self.grid)).collect();
        let rhs: Vec<RealField> = self
            .apply(&zero_rows, psi, &alpha, &beta, &gamma)
            .into_iter()
            .map(|r| r.scale(-1.0))
            .collect();
        let rhs_norm = Float::max(Self::rows_norm(&rhs), 1e-300);

        // Richardson iteration preconditioned by the flat operator.
        let mut phi: Vec<RealField> = self.precondition(&rhs);
        let mut iterations = 0;
        let mut last_res = f64::INFINITY;
        let mut converged = false;
        for it in 1..=MAX_RICHARDSON {
            let ax = self.apply(&phi, &zero_top, &alpha, &beta, &gamma);
            let res: Vec<RealField> = rhs
                .iter()
                .zip(ax.iter())
                .map(|(b, a)| b.axpy(-1.0, a).unwrap())
                .collect();
            let rn = Self::rows_norm(&res) / rhs_norm;
            iterations = it;
            if rn <= SOLVER_TOL {
                converged = true;
                break;
            }
            if rn > 0.9 * last_res && rn > 1e3 * SOLVER_TOL {
                break; // stalled far from tolerance: use the direct fallback
            }
            last_res = rn;
            let corr = self.precondition(&res);
            for (row, c) in phi.iter_mut().zip(corr.iter()) {
                *row = row.axpy(1.0, c).unwrap();
            }
        }
        if !converged {
            phi = self.solve_direct(&rhs, &alpha, &beta, &gamma)?;
            iterations = 0;
        }
        // Final residual report.
        let ax = self.apply(&phi, &zero_top, &alpha, &beta, &gamma);
        let res_rows: Vec<RealField> = rhs
            .iter()
            .zip(ax.iter())
            .map(|(b, a)| b.axpy(-1.0, a).unwrap())
            .collect();
        let residual = Self::rows_norm(&res_rows) / rhs_norm;
        if residual > 1e-9 {
            return Err(Error::numeric(format!(
                "elliptic solve failed to converge: scaled residual {residual:.3e}"
            )));
        }

        // Trace and boundary fields.
        let h = self.h;
        let eta_x = self.ops.dx(eta);
        let psi_x = self.ops.dx(psi);
        let rho = self.params.rho();
        let n = self.grid.n_modes();
        let mut g_vals = vec![0.0; n];
        for i in 0..n {
            let dyphi = (3.0 * psi.values[i] - 4.0 * phi[ni - 1].values[i]
                + phi[ni - 2].values[i])
                / (2.0 * h);
            let ex = eta_x.values[i];
            let r = rho + eta.values[i];
            g_vals[i] = (1.0 + ex * ex) / r * dyphi - ex * psi_x.values[i];
        }
        let mut g_hat = self
            .ops
            .to_spectrum(&RealField::from_values(self.grid, g_vals).unwrap());
        spectral::dealias_in_place(&mut g_hat);
        let g = self.ops.from_spectrum(&g_hat);
        let mut b_vals = vec![0.0; n];
        let mut v_vals = vec![0.0; n];
        for i in 0..n {
            let ex = eta_x.values[i];
            b_vals[i] = (ex * psi_x.values[i] + g.values[i]) / (1.0 + ex * ex);
            v_vals[i] = psi_x.values[i] - b_vals[i] * ex;
        }
        let b = RealField::from_values(self.grid, b_vals).unwrap();
        let v = RealField::from_values(self.grid, v_vals).unwrap();
        let mut phi_full = phi;
        phi_full.push(psi.clone());
        Ok(DNOResult {
            g,
            phi: phi_full,
            b,
            v,
            residual,
            iterations,
        })
    }
}

/// One-shot Dirichlet-Neumann solve.
pub fn solve_dno(problem: &FlattenedEllipticProblem) -> Result<DNOResult> {
    let solver = DnoSolver::new(problem.eta.grid, problem.n_y, problem.params)?;
    solver.solve_problem(problem)
}

/// Quadratic shape expansion
/// `(G[eta]psi)^[2] = -G[0](B0 eta) - d_x(V0 eta) - B0 eta / rho`
/// with `B0 = G[0]psi`, `V0 = psi_x` (bilinear in `(eta, psi)`).
pub fn quadratic_part(eta: &RealField, psi: &RealField, p: &DispersionParams) -> Result<RealField> {
    let ops = GridOps::new(eta.grid);
    let b0 = dno_flat(psi, p);
    let v0 = ops.dx(psi);
    let b0_eta = ops.product(&b0, eta)?;
    let v0_eta = ops.product(&v0, eta)?;
    let term1 = dno_flat(&b0_eta, p);
    let term2 = ops.dx(&v0_eta);
    let n = eta.grid.n_modes();
    let vals: Vec<f64> = (0..n)
        .map(|i| -term1.values[i] - term2.values[i] - b0_eta.values[i] / p.rho())
        .collect();
    let raw = RealField::from_values(eta.grid, vals)?;
    let mut s = ops.to_spectrum(&raw);
    spectral::dealias_in_place(&mut s);
    Ok(ops.from_spectrum(&s))
}

/// Shape derivative
/// `d_eta G[eta]psi . delta = -G[eta](B delta) - d_x(V delta) - B delta/(rho+eta)`
/// evaluated with the elliptic solver for the inner `G[eta]`.
pub fn shape_derivative(
    eta: &RealField,
    psi: &RealField,
    delta_eta: &RealField,
    n_y: usize,
    p: &DispersionParams,
) -> Result<RealField> {
    let solver = DnoSolver::new(eta.grid, n_y, *p)?;
    let base = solver.solve(eta, psi)?;
    let ops = GridOps::new(eta.grid);
    let b_delta = ops.product(&base.b, delta_eta)?;
    let v_delta = ops.product(&base.v, delta_eta)?;
    let inner = solver.solve(eta, &b_delta)?;
    let dxv = ops.dx(&v_delta);
    let n = eta.grid.n_modes();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            -inner.g.values[i]
                - dxv.values[i]
                - base.b.values[i] * delta_eta.values[i] / (p.rho() + eta.values[i])
        })
        .collect();
    let raw = RealField::from_values(eta.grid, vals)?;
    let mut s = ops.to_spectrum(&raw);
    spectral::dealias_in_place(&mut s);
    Ok(ops.from_spectrum(&s))
}

/// Net flux through the boundary, `int (rho+eta) G[eta]psi dx` by trapezoid
/// (periodic: the mean times the period); should vanish to solver accuracy.
pub fn boundary_flux(result: &DNOResult, eta: &RealField, p: &DispersionParams) -> f64 {
    let n = eta.grid.n_modes();
    let mut acc = 0.0;
    for i in 0..n {
        acc += (p.rho() + eta.values[i]) * result.g.values[i];
    }
    acc * 2.0 * core::f64::consts::PI / n as f64
}
