//! Discrete paradifferential quantization.
//!
//! The paradifferential operator `T_a` is realized by the direct double sum
//!
//! ```text
//!     (T_a u)^(xi) = sum_{xi'} chi(xi - xi', xi') a^(xi - xi', xi') u^(xi'),
//! ```
//!
//! where `a^(zeta, xi')` is the x-Fourier coefficient of the symbol at
//! frequency `xi'` and `chi` is the admissibility cutoff built from the
//! Littlewood-Paley partition.  The double sum is `O(M^2)` but honors the
//! cutoff constants exactly, which is what the identity tests probe.  (With
//! the normalized Fourier coefficients used throughout -- `f = sum f^(xi)
//! e^{i xi x}` -- no extra `2 pi` factor appears in the sum.)
//!
//! For plain function symbols `a(x)` the classical blockwise paraproduct
//! `T_a u = sum_j (S_{j-3} a)(Delta_j u)` and the Bony remainder
//! `R(a, u) = sum_{|j-k| <= 2} (Delta_j a)(Delta_k u)` are also provided;
//! together with `T_u a` they reconstruct the pointwise product exactly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::float::Float;

use crate::error::{Error, Result};
use crate::spectral::{
    chi_tilde, j_max, lp_block, partial_sum, phi_bump, FourierGrid, GridOps, RealField, Spectrum,
};
use crate::symbol::PluriHomogeneousSymbol;

/// Admissibility cutoff `chi(zeta, xi') = sum_{j >= 3}
/// chi_tilde(zeta / 2^{j-2}) phi(xi' / 2^j)`.
///
/// It equals 1 for `|zeta| <= 0.125 |xi'|` and 0 for `|zeta| >= 0.5 |xi'|`
/// on the discrete frequency lattice (away from the low-frequency ball where
/// the `xi'`-side bumps vanish identically).
pub fn cutoff_chi(zeta: f64, xi_p: f64) -> f64 {
    let a = Float::abs(xi_p);
    if a <= 0.0 {
        return 0.0;
    }
    // phi(xi'/2^j) is supported in 2^j * 63/64 < |xi'| < 2^{j+1}.
    let j_hi = (Float::log2(a) + 1.0) as i32;
    let mut acc = 0.0;
    for j in 3..=j_hi.max(3) {
        let scale = Float::powi(2.0, -j);
        acc += chi_tilde(zeta * scale * 4.0) * phi_bump(xi_p * scale);
    }
    acc
}

/// Fourier coefficients of every frequency column of a symbol lattice:
/// `out[k' * n + index(zeta)] = a^(zeta, xi'_{k'})`.
fn symbol_coefficients(grid: &FourierGrid, lattice: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n_modes();
    let ops = GridOps::new(*grid);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for kp in 0..n {
        for ix in 0..n {
            column[ix] = lattice[ix * n + kp];
        }
        let spec = ops.analyze_complex(&column);
        out[kp * n..(kp + 1) * n].copy_from_slice(&spec.coeffs);
    }
    out
}

fn double_sum(grid: &FourierGrid, coeffs: &[Complex64], u: &Spectrum) -> Spectrum {
    let n = grid.n_modes();
    let max = grid.max_freq();
    let mut out = Spectrum::zeros(*grid);
    for kp in 0..n {
        if kp == n / 2 {
            continue;
        }
        let xi_p = grid.freq_of_index(kp);
        let uc = u.coeffs[kp];
        if uc.norm_sqr() == 0.0 {
            continue;
        }
        // chi vanishes for |zeta| >= |xi'| / 2.
        let half = xi_p.abs() / 2 + 1;
        for zeta in -half..=half {
            let xi = xi_p + zeta;
            if xi.abs() > max || zeta.abs() > max {
                continue;
            }
            let w = cutoff_chi(zeta as f64, xi_p as f64);
            if w == 0.0 {
                continue;
            }
            let ac = coeffs[kp * n + grid.index_of_freq(zeta)];
            let idx = grid.index_of_freq(xi);
            out.coeffs[idx] += w * ac * uc;
        }
    }
    out
}

/// Apply `T_a` for a pluri-homogeneous symbol by the direct double sum.
pub fn paradiff_apply(a: &PluriHomogeneousSymbol, u: &Spectrum) -> Result<Spectrum> {
    let grid = a.grid();
    if grid.n_modes() != u.grid.n_modes() {
        return Err(Error::config(format_args!("symbol/spectrum grid mismatch")));
    }
    let coeffs = symbol_coefficients(&grid, &a.total_values());
    Ok(double_sum(&grid, &coeffs, u))
}

/// Apply `T_a` for a plain function symbol `a(x)` by the same double sum.
pub fn paradiff_apply_function(a: &RealField, u: &Spectrum) -> Result<Spectrum> {
    let grid = a.grid;
    if grid.n_modes() != u.grid.n_modes() {
        return Err(Error::config(format_args!("symbol/spectrum grid mismatch")));
    }
    let n = grid.n_modes();
    let a_spec = crate::spectral::to_spectrum(a);
    // Constant-in-xi columns: a^(zeta, xi') = a^(zeta).
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
    for kp in 0..n {
        coeffs[kp * n..(kp + 1) * n].copy_from_slice(&a_spec.coeffs);
    }
    Ok(double_sum(&grid, &coeffs, u))
}

/// Dense matrix of `T_a` over the FFT coefficient basis (row-major, size
/// `n x n`); column `k` is `T_a` applied to the unit mode at FFT index `k`.
///
/// Used where the exact adjoint of the quantization is needed.
pub fn quantization_matrix(a: &PluriHomogeneousSymbol) -> Vec<Complex64> {
    let grid = a.grid();
    let n = grid.n_modes();
    let coeffs = symbol_coefficients(&grid, &a.total_values());
    let max = grid.max_freq();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for kp in 0..n {
        if kp == n / 2 {
            continue;
        }
        let xi_p = grid.freq_of_index(kp);
        let half = xi_p.abs() / 2 + 1;
        for zeta in -half..=half {
            let xi = xi_p + zeta;
            if xi.abs() > max || zeta.abs() > max {
                continue;
            }
            let w = cutoff_chi(zeta as f64, xi_p as f64);
            if w == 0.0 {
                continue;
            }
            let row = grid.index_of_freq(xi);
            m[row * n + kp] += w * coeffs[kp * n + grid.index_of_freq(zeta)];
        }
    }
    m
}

/// Apply the conjugate-transpose of `T_a` (its exact discrete `L^2`
/// adjoint) to `u`.
pub fn paradiff_adjoint_apply(a: &PluriHomogeneousSymbol, u: &Spectrum) -> Result<Spectrum> {
    let grid = a.grid();
    if grid.n_modes() != u.grid.n_modes() {
        return Err(Error::config(format_args!("symbol/spectrum grid mismatch")));
    }
    let n = grid.n_modes();
    let m = quantization_matrix(a);
    let mut out = Spectrum::zeros(grid);
    for col in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for row in 0..n {
            acc += m[row * n + col].conj() * u.coeffs[row];
        }
        out.coeffs[col] = acc;
    }
    out.coeffs[n / 2] = Complex64::new(0.0, 0.0);
    Ok(out)
}

/// Blockwise paraproduct of two spectra, `T_a u = sum_j (S_{j-3} a)
/// (Delta_j u)` with pointwise grid products.
pub fn paraproduct_pair(a: &Spectrum, u: &Spectrum) -> Result<Spectrum> {
    if a.grid.n_modes() != u.grid.n_modes() {
        return Err(Error::config(format_args!("paraproduct grid mismatch")));
    }
    let grid = a.grid;
    let ops = GridOps::new(grid);
    let n = grid.n_modes();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..=j_max(&grid) {
        let sa = ops.synthesize_complex(&partial_sum(a, j - 3));
        let du = ops.synthesize_complex(&lp_block(u, j));
        for ix in 0..n {
            acc[ix] += sa[ix] * du[ix];
        }
    }
    Ok(ops.analyze_complex(&acc))
}

/// Blockwise paraproduct with a real function symbol.
pub fn paraproduct(a: &RealField, u: &Spectrum) -> Result<Spectrum> {
    paraproduct_pair(&crate::spectral::to_spectrum(a), u)
}

/// Bony remainder `R(a, u) = sum_{|j-k| <= 2} (Delta_j a)(Delta_k u)`.
///
/// Together with the two paraproducts this reconstructs the pointwise grid
/// product exactly: `a u = T_a u + T_u a + R(a, u)`.
pub fn remainder_pm_pair(a: &Spectrum, u: &Spectrum) -> Result<Spectrum> {
    if a.grid.n_modes() != u.grid.n_modes() {
        return Err(Error::config(format_args!("remainder grid mismatch")));
    }
    let grid = a.grid;
    let ops = GridOps::new(grid);
    let n = grid.n_modes();
    let jm = j_max(&grid);
    let a_blocks: Vec<Vec<Complex64>> =
        (0..=jm).map(|j| ops.synthesize_complex(&lp_block(a, j))).collect();
    let u_blocks: Vec<Vec<Complex64>> =
        (0..=jm).map(|j| ops.synthesize_complex(&lp_block(u, j))).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..=jm {
        for k in 0..=jm {
            if (j - k).abs() > 2 {
                continue;
            }
            let (aj, uk) = (&a_blocks[j as usize], &u_blocks[k as usize]);
            for ix in 0..n {
                acc[ix] += aj[ix] * uk[ix];
            }
        }
    }
    Ok(ops.analyze_complex(&acc))
}

/// Bony remainder with a real function symbol.
pub fn remainder_pm(a: &RealField, u: &Spectrum) -> Result<Spectrum> {
    remainder_pm_pair(&crate::spectral::to_spectrum(a), u)
}
