//! Linearized theory at the flat cylinder: eigen-speeds, spectral
//! projections, the complex coordinate, and the exact linear flow.
//!
//! At the undisturbed radius `rho` the linearization decouples mode-wise.
//! The flat Dirichlet-Neumann multiplier is `lam1(xi) = ratio(rho |xi|) |xi|`
//! and the linearized curvature multiplier is `H'[0] = xi^2 - 1/rho^2` (read
//! off the linearized system matrix; a prose statement with the opposite sign
//! exists in the source derivation and is deliberately not followed). Modes
//! with `1 <= |xi| < 1/rho` grow/decay at the rate
//! `lambda_g = sqrt(lam1 * (1/rho^2 - xi^2))`; the complementary modes
//! oscillate at `lambda_d = sqrt(lam1 * (xi^2 - 1/rho^2))`.
//!
//! The complex coordinate `z` packs `(eta, psi)` so the linear flow becomes
//! diagonal: on the growing band `z = (a+b) + i(a-b)` with
//! `a = sqrt(-H'[0]) eta`, `b = sqrt(G[0]) psi`; on the dispersive band
//! `z = i sqrt(H'[0]) eta + sqrt(G[0]) psi`. The zero mode carries
//! `z_hat(0) = -eta_hat(0)/rho` (the `xi = 0` continuation of the dispersive
//! formula with the principal branch of the square root), so the mean of eta
//! survives the round trip; the real mean of psi is projected out at state
//! construction and carries no coordinate.

use num_complex::Complex64;
use num_traits::Float;

use crate::bessel;
use crate::dynamics::JetState;
use crate::error::{Error, Result};
use crate::spectral::{self, RealField, Spectrum};

/// The unperturbed radius `rho in (0,1)` with `1/rho` not an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionParams {
    rho: f64,
}

impl DispersionParams {
    /// Validate and build; rejects `1/rho` within 1e-9 of an integer (the
    /// square-root degeneracy `(rho xi)^2 = 1` would sit on a retained mode).
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::config(format_args!("rho must lie in (0,1), got {rho}")));
        }
        let inv = 1.0 / rho;
        if Float::abs(inv - Float::round(inv)) < 1e-9 {
            return Err(Error::config(format_args!(
                "1/rho = {inv} is (numerically) an integer; the dispersion relation degenerates"
            )));
        }
        Ok(DispersionParams { rho })
    }

    /// The radius.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Flat Dirichlet-Neumann multiplier `lam1(xi) = ratio(rho|xi|) |xi|`.
    pub fn lam1(&self, xi: f64) -> f64 {
        let a = Float::abs(xi);
        bessel::ratio(self.rho * a) * a
    }

    /// `d/dxi` of `lam1` on `xi > 0` (odd continuation for `xi < 0`).
    pub fn dlam1(&self, xi: f64) -> f64 {
        let a = Float::abs(xi);
        let v = self.rho * a * bessel::dratio(self.rho * a) + bessel::ratio(self.rho * a);
        if xi < 0.0 {
            -v
        } else {
            v
        }
    }

    /// Whether integer frequency `xi` belongs to the growing band.
    pub fn is_growing(&self, xi: i64) -> bool {
        let a = xi.abs() as f64;
        a >= 1.0 && self.rho * a < 1.0
    }

    /// Number of growing frequency pairs, `floor(1/rho)`.
    pub fn growing_pairs(&self) -> usize {
        Float::floor(1.0 / self.rho) as usize
    }
}

/// Growth rate of the growing band (zero elsewhere).
pub fn lambda_g(xi: i64, p: &DispersionParams) -> f64 {
    if !p.is_growing(xi) {
        return 0.0;
    }
    let a = xi.abs() as f64;
    let r = p.rho * a;
    Float::sqrt(Float::powi(p.rho, -3) * bessel::ratio(r) * r * (1.0 - r * r))
}

/// Oscillation speed of the dispersive band (zero on the growing band; zero
/// at `xi = 0` where the multiplier factor vanishes).
pub fn lambda_d(xi: i64, p: &DispersionParams) -> f64 {
    if xi == 0 || p.is_growing(xi) {
        return 0.0;
    }
    let a = xi.abs() as f64;
    let r = p.rho * a;
    Float::sqrt(Float::powi(p.rho, -3) * bessel::ratio(r) * r * (r * r - 1.0))
}

/// Continuous dispersive speed at real frequency (used by symbols), zero
/// where the radicand is negative.
pub fn lambda_d_real(xi: f64, p: &DispersionParams) -> f64 {
    let a = Float::abs(xi);
    let r = p.rho * a;
    let rad = Float::powi(p.rho, -3) * bessel::ratio(r) * r * (r * r - 1.0);
    if rad <= 0.0 {
        0.0
    } else {
        Float::sqrt(rad)
    }
}

/// The Rayleigh growth-rate profile `f(k) = ratio(k) k (1 - k^2)` on (0,1).
pub fn rayleigh_profile(k: f64) -> f64 {
    bessel::ratio(k) * k * (1.0 - k * k)
}

/// Continuous argmax of the Rayleigh profile on (0,1) by golden-section
/// search to 1e-6 (the profile is unimodal there).
pub fn most_unstable_wavenumber() -> f64 {
    let invphi = (Float::sqrt(5.0f64) - 1.0) / 2.0;
    let mut a = 0.0f64;
    let mut b = 1.0f64;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = rayleigh_profile(c);
    let mut fd = rayleigh_profile(d);
    while b - a > 1e-7 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = rayleigh_profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = rayleigh_profile(d);
        }
    }
    0.5 * (a + b)
}

/// `sqrt(-H'[0]) = sqrt(1/rho^2 - xi^2)` on the growing band.
fn mh_growing(xi: i64, p: &DispersionParams) -> f64 {
    let a = xi.abs() as f64;
    Float::sqrt(1.0 / (p.rho * p.rho) - a * a)
}

/// `sqrt(H'[0]) = sqrt(xi^2 - 1/rho^2)` on the dispersive band (xi != 0).
fn mh_dispersive(xi: i64, p: &DispersionParams) -> f64 {
    let a = xi.abs() as f64;
    Float::sqrt(a * a - 1.0 / (p.rho * p.rho))
}

/// `sqrt(G[0]) = sqrt(lam1)`.
fn ml(xi: i64, p: &DispersionParams) -> f64 {
    Float::sqrt(p.lam1(xi as f64))
}

/// Pack a jet state into the complex coordinate.
pub fn to_complex(state: &JetState, p: &DispersionParams) -> Spectrum {
    let eta_hat = spectral::to_spectrum(&state.eta);
    let psi_hat = spectral::to_spectrum(&state.psi);
    let grid = state.eta.grid;
    let mut z = Spectrum::zeros(grid);
    for k in 0..grid.n_modes() {
        if k == grid.n_modes() / 2 {
            continue;
        }
        let xi = grid.freq_of_index(k);
        let e = eta_hat.coeffs[k];
        let s = psi_hat.coeffs[k];
        z.coeffs[k] = if xi == 0 {
            -e / p.rho
        } else if p.is_growing(xi) {
            let a = mh_growing(xi, p) * e;
            let b = ml(xi, p) * s;
            Complex64::new(1.0, 1.0) * a + Complex64::new(1.0, -1.0) * b
        } else {
            Complex64::new(0.0, mh_dispersive(xi, p)) * e + ml(xi, p) * s
        };
    }
    z
}

/// Unpack the complex coordinate into a jet state (exact inverse of
/// `to_complex` on retained frequencies).
pub fn from_complex(z: &Spectrum, p: &DispersionParams) -> Result<JetState> {
    let grid = z.grid;
    let mut eta_hat = Spectrum::zeros(grid);
    let mut psi_hat = Spectrum::zeros(grid);
    eta_hat.set_coeff(0, -p.rho * z.coeff(0));
    for xi in 1..=grid.max_freq() {
        let zp = z.coeff(xi);
        let zm_conj = z.coeff(-xi).conj();
        if p.is_growing(xi) {
            // z(+xi) = (1+i) a + (1-i) b, conj(z(-xi)) = (1-i) a + (1+i) b.
            let det = Complex64::new(0.0, 4.0);
            let a = (Complex64::new(1.0, 1.0) * zp - Complex64::new(1.0, -1.0) * zm_conj) / det;
            let b = (Complex64::new(1.0, 1.0) * zm_conj - Complex64::new(1.0, -1.0) * zp) / det;
            eta_hat.set_coeff(xi, a / mh_growing(xi, p));
            psi_hat.set_coeff(xi, b / ml(xi, p));
        } else {
            // z(+xi) = i md e + ml s, conj(z(-xi)) = -i md e + ml s.
            let md = mh_dispersive(xi, p);
            let e = (zp - zm_conj) / Complex64::new(0.0, 2.0 * md);
            let s = (zp + zm_conj) / (2.0 * ml(xi, p));
            eta_hat.set_coeff(xi, e);
            psi_hat.set_coeff(xi, s);
        }
        eta_hat.set_coeff(-xi, eta_hat.coeff(xi).conj());
        psi_hat.set_coeff(-xi, psi_hat.coeff(xi).conj());
    }
    let eta = spectral::from_spectrum(&eta_hat);
    let psi = spectral::from_spectrum(&psi_hat);
    JetState::new(eta, psi, *p)
}

/// Band indicator projection onto the growing frequencies.
pub fn proj_g(z: &Spectrum, p: &DispersionParams) -> Spectrum {
    spectral::apply_multiplier_unchecked(z, |xi| {
        if p.is_growing(xi) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Band indicator projection onto the dispersive frequencies.
pub fn proj_d(z: &Spectrum, p: &DispersionParams) -> Spectrum {
    spectral::apply_multiplier_unchecked(z, |xi| {
        if p.is_growing(xi) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Real part taken as a field: `(Re v)^(xi) = (v(xi) + conj(v(-xi)))/2`.
pub fn field_re(z: &Spectrum) -> Spectrum {
    let mut out = Spectrum::zeros(z.grid);
    for k in 0..z.grid.n_modes() {
        if k == z.grid.n_modes() / 2 {
            continue;
        }
        let xi = z.grid.freq_of_index(k);
        out.coeffs[k] = 0.5 * (z.coeff(xi) + z.coeff(-xi).conj());
    }
    out
}

/// Imaginary part taken as a field: `(Im v)^(xi) = (v(xi) - conj(v(-xi)))/(2i)`.
pub fn field_im(z: &Spectrum) -> Spectrum {
    let mut out = Spectrum::zeros(z.grid);
    for k in 0..z.grid.n_modes() {
        if k == z.grid.n_modes() / 2 {
            continue;
        }
        let xi = z.grid.freq_of_index(k);
        out.coeffs[k] = (z.coeff(xi) - z.coeff(-xi).conj()) / Complex64::new(0.0, 2.0);
    }
    out
}

/// Unstable projection: real part (as a field) of the growing-band piece.
pub fn proj_u(z: &Spectrum, p: &DispersionParams) -> Spectrum {
    field_re(&proj_g(z, p))
}

/// Stable projection: `i` times the imaginary part (as a field) of the
/// growing-band piece.
pub fn proj_s(z: &Spectrum, p: &DispersionParams) -> Spectrum {
    field_im(&proj_g(z, p)).scale(Complex64::new(0.0, 1.0))
}

/// The exact linear flow in the complex coordinate:
/// `z(t) = e^{t L_g} Re P_g z0 + i e^{-t L_g} Im P_g z0 + e^{i t L_d} P_d z0`.
pub fn linear_flow(z0: &Spectrum, t: f64, p: &DispersionParams) -> Spectrum {
    let zu = proj_u(z0, p);
    let zs = proj_s(z0, p);
    let zd = proj_d(z0, p);
    let mut out = Spectrum::zeros(z0.grid);
    for k in 0..z0.grid.n_modes() {
        if k == z0.grid.n_modes() / 2 {
            continue;
        }
        let xi = z0.grid.freq_of_index(k);
        if p.is_growing(xi) {
            let rate = lambda_g(xi, p);
            out.coeffs[k] =
                Float::exp(t * rate) * zu.coeffs[k] + Float::exp(-t * rate) * zs.coeffs[k];
        } else {
            let speed = lambda_d(xi, p);
            out.coeffs[k] = Complex64::from_polar(1.0, t * speed) * zd.coeffs[k];
        }
    }
    out
}

/// Growing-band eigenvector seed: `eta = amplitude cos(xi0 x)` paired with
/// the `psi` making `(eta, psi)` a pure growing mode (real complex
/// coordinate, `Im P_g z = 0`), namely
/// `psi_hat = sqrt((1/rho^2 - xi^2)/lam1(xi)) eta_hat`.
pub fn unstable_seed(
    grid: spectral::FourierGrid,
    xi0: i64,
    amplitude: f64,
    p: &DispersionParams,
) -> Result<JetState> {
    if !p.is_growing(xi0) {
        return Err(Error::config(format_args!(
            "frequency {xi0} is not in the growing band for rho={}",
            p.rho
        )));
    }
    let eta = RealField::from_fn(grid, |x| amplitude * Float::cos(xi0 as f64 * x));
    let factor = mh_growing(xi0, p) / ml(xi0, p);
    let psi = RealField::from_fn(grid, |x| amplitude * factor * Float::cos(xi0 as f64 * x));
    JetState::new(eta, psi, *p)
}
