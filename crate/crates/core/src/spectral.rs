//! Spectral substrate: periodic fields on [0, 2pi), their Fourier
//! coefficients, multipliers, Littlewood-Paley blocks and Sobolev norms.
//!
//! Conventions (asserted in tests):
//!
//! * Collocation points `x_m = 2 pi m / n`, `m = 0..n`, `n` a power of two.
//! * `Spectrum` stores coefficients of `e^{i xi x}` in FFT index order:
//!   index `k` carries `xi = k` for `k < n/2`, `xi = k - n` for `k > n/2`.
//! * The Nyquist mode `k = n/2` is always zeroed (it cannot be assigned a
//!   sign-symmetric frequency), so the retained range is `|xi| <= n/2 - 1`.
//! * `L^2` norms are mean-square: `||f||^2 = (2pi)^{-1} int f^2 dx`, so
//!   Parseval reads `||f||^2 = sum |u_hat(xi)|^2` exactly.
//!
//! The Littlewood-Paley bump is fixed concretely (the underlying theory only
//! constrains support and symmetry, so golden block values are tied to this
//! choice): with the smoothstep `s(t) = g(t)/(g(t)+g(1-t))`, `g(t) = e^{-1/t}`
//! for `t > 0`, the mother cutoff is
//!
//! ```text
//! chi_tilde(t) = 1                         for |t| <= c0 = 63/64,
//!              = s((1 - |t|)/(1 - c0))     for c0 < |t| < 1,
//!              = 0                         for |t| >= 1,
//! ```
//!
//! and `phi(xi) = chi_tilde(xi/2) - chi_tilde(xi)`, supported in the annulus
//! `[c0, 2]` (inside `[1/2, 2]`). The wide plateau `c0 = 63/64` is what makes
//! the paradifferential cutoff bounds hold on the *integer* lattice for all
//! block frequencies up to 512 (see `paradiff`); with a generic `(1/2, 1)`
//! transition they fail at e.g. data frequency 40.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::FftPlan;

/// Plateau edge of the mother cutoff `chi_tilde`.
pub const CHI_PLATEAU: f64 = 63.0 / 64.0;

/// Discrete grid on [0, 2pi): collocation size and dealiasing fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    n_modes: usize,
    dealias_fraction: f64,
}

impl FourierGrid {
    /// Grid with `n_modes` collocation points and the default 2/3 dealiasing.
    pub fn new(n_modes: usize) -> Result<Self> {
        Self::with_dealias(n_modes, 2.0 / 3.0)
    }

    /// Grid with an explicit dealiasing fraction in (0, 1].
    pub fn with_dealias(n_modes: usize, dealias_fraction: f64) -> Result<Self> {
        if !n_modes.is_power_of_two() || n_modes < 8 {
            return Err(Error::config(format_args!(
                "n_modes must be a power of two >= 8, got {n_modes}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::config(format_args!(
                "dealias_fraction must lie in (0,1], got {dealias_fraction}"
            )));
        }
        Ok(FourierGrid { n_modes, dealias_fraction })
    }

    /// Number of collocation points.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Dealiasing fraction (applied after pointwise products).
    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest retained |frequency| (Nyquist excluded).
    pub fn max_freq(&self) -> i64 {
        (self.n_modes / 2 - 1) as i64
    }

    /// Dealiasing cut: coefficients with |xi| above this are zeroed.
    pub fn dealias_cut(&self) -> f64 {
        self.dealias_fraction * (self.n_modes as f64) / 2.0
    }

    /// Frequency carried by FFT index `k`.
    pub fn freq_of_index(&self, k: usize) -> i64 {
        let n = self.n_modes as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT index carrying frequency `xi` (requires |xi| <= n/2).
    pub fn index_of_freq(&self, xi: i64) -> usize {
        let n = self.n_modes as i64;
        debug_assert!(xi.abs() <= n / 2);
        (if xi >= 0 { xi } else { xi + n }) as usize
    }

    /// Collocation point `x_m`.
    pub fn x(&self, m: usize) -> f64 {
        2.0 * core::f64::consts::PI * (m as f64) / (self.n_modes as f64)
    }

    /// All collocation points.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_modes).map(|m| self.x(m)).collect()
    }

    /// Error unless both grids have the same mode count.
    pub fn check_same(&self, other: &FourierGrid) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::config(format_args!(
                "grid size mismatch: {} vs {}",
                self.n_modes, other.n_modes
            )));
        }
        Ok(())
    }
}

/// Real scalar field sampled at the collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: FourierGrid,
    pub values: Vec<f64>,
}

impl RealField {
    /// Zero field.
    pub fn zeros(grid: FourierGrid) -> Self {
        RealField { grid, values: vec![0.0; grid.n_modes()] }
    }

    /// Field from explicit samples.
    pub fn from_values(grid: FourierGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes() {
            return Err(Error::config(format_args!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.n_modes()
            )));
        }
        Ok(RealField { grid, values })
    }

    /// Field sampled from a closure of the collocation coordinate.
    pub fn from_fn(grid: FourierGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_modes()).map(|m| f(grid.x(m))).collect();
        RealField { grid, values }
    }

    /// Mean value over the period.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.values.len() as f64)
    }

    /// Mean-square L2 norm (`||f||^2 = (2pi)^{-1} int f^2`).
    pub fn l2_norm(&self) -> f64 {
        let ms = self.values.iter().map(|v| v * v).sum::<f64>() / (self.values.len() as f64);
        Float::sqrt(ms)
    }

    /// Max-norm of the samples.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| Float::max(acc, Float::abs(*v)))
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(RealField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// self + c * other.
    pub fn axpy(&self, c: f64, other: &RealField) -> Result<Self> {
        self.zip(other, |a, b| a + c * b)
    }

    /// Scale by a constant.
    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }
}

/// Complex Fourier coefficients in FFT index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: FourierGrid,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Zero spectrum.
    pub fn zeros(grid: FourierGrid) -> Self {
        Spectrum { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_modes()] }
    }

    /// Spectrum with a single coefficient set at frequency `xi`.
    pub fn single_mode(grid: FourierGrid, xi: i64, amplitude: Complex64) -> Result<Self> {
        if xi.abs() > grid.max_freq() {
            return Err(Error::config(format_args!(
                "frequency {xi} outside retained range |xi| <= {}",
                grid.max_freq()
            )));
        }
        let mut s = Spectrum::zeros(grid);
        s.coeffs[grid.index_of_freq(xi)] = amplitude;
        Ok(s)
    }

    /// Coefficient at frequency `xi` (zero outside the retained range).
    pub fn coeff(&self, xi: i64) -> Complex64 {
        if xi.abs() > self.grid.max_freq() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[self.grid.index_of_freq(xi)]
        }
    }

    /// Set the coefficient at frequency `xi`.
    pub fn set_coeff(&mut self, xi: i64, value: Complex64) {
        if xi.abs() <= self.grid.max_freq() {
            let idx = self.grid.index_of_freq(xi);
            self.coeffs[idx] = value;
        }
    }

    /// Iterate (frequency, coefficient) over all retained frequencies.
    pub fn iter_freqs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let grid = self.grid;
        self.coeffs
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != grid.n_modes() / 2)
            .map(move |(k, &c)| (grid.freq_of_index(k), c))
    }

    /// l2 norm of the coefficients (equals the field L2 norm by Parseval).
    pub fn l2_norm(&self) -> f64 {
        Float::sqrt(self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>())
    }

    /// self + c * other.
    pub fn axpy(&self, c: Complex64, other: &Spectrum) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(other.coeffs.iter())
                .map(|(&a, &b)| a + c * b)
                .collect(),
        })
    }

    /// Scale by a complex constant.
    pub fn scale(&self, c: Complex64) -> Self {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&v| c * v).collect(),
        }
    }

    /// Difference norm against another spectrum.
    pub fn dist(&self, other: &Spectrum) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            acc += (a - b).norm_sqr();
        }
        Float::sqrt(acc)
    }

    /// Enforce Hermitian symmetry (coeff(-xi) = conj(coeff(xi))) by averaging;
    /// also zeroes the Nyquist mode and the imaginary part of the mean.
    pub fn hermitian_project(&mut self) {
        let n = self.grid.n_modes();
        self.coeffs[n / 2] = Complex64::new(0.0, 0.0);
        self.coeffs[0] = Complex64::new(self.coeffs[0].re, 0.0);
        for xi in 1..=self.grid.max_freq() {
            let ip = self.grid.index_of_freq(xi);
            let im = self.grid.index_of_freq(-xi);
            let avg = 0.5 * (self.coeffs[ip] + self.coeffs[im].conj());
            self.coeffs[ip] = avg;
            self.coeffs[im] = avg.conj();
        }
    }

    /// Largest Hermitian-symmetry defect (diagnostic).
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = self.coeffs[self.grid.n_modes() / 2].norm();
        worst = Float::max(worst, Float::abs(self.coeffs[0].im));
        for xi in 1..=self.grid.max_freq() {
            let d = (self.coeff(xi) - self.coeff(-xi).conj()).norm();
            worst = Float::max(worst, d);
        }
        worst
    }
}

/// Cached FFT plan bound to one grid; the workhorse for hot paths.
#[derive(Debug, Clone)]
pub struct GridOps {
    grid: FourierGrid,
    plan: FftPlan,
}

impl GridOps {
    /// Build the plan for a grid.
    pub fn new(grid: FourierGrid) -> Self {
        GridOps { grid, plan: FftPlan::new(grid.n_modes()) }
    }

    /// The bound grid.
    pub fn grid(&self) -> FourierGrid {
        self.grid
    }

    /// Forward transform of a real field (Nyquist zeroed).
    pub fn to_spectrum(&self, f: &RealField) -> Spectrum {
        debug_assert_eq!(f.grid.n_modes(), self.grid.n_modes());
        let mut data: Vec<Complex64> =
            f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut data);
        data[self.grid.n_modes() / 2] = Complex64::new(0.0, 0.0);
        Spectrum { grid: f.grid, coeffs: data }
    }

    /// Inverse transform onto the collocation grid, taking real parts.
    ///
    /// The input is expected Hermitian-symmetric; the imaginary residue of a
    /// symmetric input is pure roundoff and is discarded.
    pub fn from_spectrum(&self, s: &Spectrum) -> RealField {
        debug_assert_eq!(s.grid.n_modes(), self.grid.n_modes());
        let mut data = s.coeffs.clone();
        data[self.grid.n_modes() / 2] = Complex64::new(0.0, 0.0);
        self.plan.inverse(&mut data);
        RealField {
            grid: s.grid,
            values: data.iter().map(|c| c.re).collect(),
        }
    }

    /// Complex inverse transform: synthesis values of a general (not
    /// necessarily Hermitian) coefficient vector.
    pub fn synthesize_complex(&self, s: &Spectrum) -> Vec<Complex64> {
        let mut data = s.coeffs.clone();
        self.plan.inverse(&mut data);
        data
    }

    /// Complex forward transform of general sample values.
    pub fn analyze_complex(&self, values: &[Complex64]) -> Spectrum {
        let mut data = values.to_vec();
        self.plan.forward(&mut data);
        data[self.grid.n_modes() / 2] = Complex64::new(0.0, 0.0);
        Spectrum { grid: self.grid, coeffs: data }
    }

    /// Pointwise product of two fields, dealiased.
    pub fn product(&self, a: &RealField, b: &RealField) -> Result<RealField> {
        let raw = a.zip(b, |x, y| x * y)?;
        let mut s = self.to_spectrum(&raw);
        dealias_in_place(&mut s);
        Ok(self.from_spectrum(&s))
    }

    /// Spectral derivative d/dx of a real field.
    pub fn dx(&self, f: &RealField) -> RealField {
        let s = self.to_spectrum(f);
        let ds = apply_multiplier_unchecked(&s, |xi| Complex64::new(0.0, xi as f64));
        self.from_spectrum(&ds)
    }
}

/// Forward transform (convenience path; builds a plan per call).
pub fn to_spectrum(f: &RealField) -> Spectrum {
    GridOps::new(f.grid).to_spectrum(f)
}

/// Inverse transform (convenience path; builds a plan per call).
pub fn from_spectrum(s: &Spectrum) -> RealField {
    GridOps::new(s.grid).from_spectrum(s)
}

/// Apply a Fourier multiplier, rejecting non-finite values on the retained
/// range with the offending frequency reported.
pub fn apply_multiplier(m: impl Fn(i64) -> Complex64, s: &Spectrum) -> Result<Spectrum> {
    let mut out = Spectrum::zeros(s.grid);
    for (k, &c) in s.coeffs.iter().enumerate() {
        if k == s.grid.n_modes() / 2 {
            continue;
        }
        let xi = s.grid.freq_of_index(k);
        let mv = m(xi);
        if !mv.re.is_finite() || !mv.im.is_finite() {
            return Err(Error::numeric(format_args!(
                "multiplier non-finite at frequency {xi}"
            )));
        }
        out.coeffs[k] = mv * c;
    }
    Ok(out)
}

/// Multiplier application for internally-known finite multipliers.
pub fn apply_multiplier_unchecked(
    s: &Spectrum,
    m: impl Fn(i64) -> Complex64,
) -> Spectrum {
    let mut out = Spectrum::zeros(s.grid);
    for (k, &c) in s.coeffs.iter().enumerate() {
        if k == s.grid.n_modes() / 2 {
            continue;
        }
        out.coeffs[k] = m(s.grid.freq_of_index(k)) * c;
    }
    out
}

/// Apply a real multiplier given as a closure of |xi| (even symbol).
pub fn apply_even_multiplier(s: &Spectrum, m: impl Fn(f64) -> f64) -> Spectrum {
    apply_multiplier_unchecked(s, |xi| Complex64::new(m((xi as f64).abs()), 0.0))
}

/// Zero all coefficients above the dealiasing cut, in place.
pub fn dealias_in_place(s: &mut Spectrum) {
    let cut = s.grid.dealias_cut();
    let n = s.grid.n_modes();
    for k in 0..n {
        let xi = s.grid.freq_of_index(k) as f64;
        if Float::abs(xi) > cut {
            s.coeffs[k] = Complex64::new(0.0, 0.0);
        }
    }
}

/// The exponential smoothstep `s(t)`: 0 for t <= 0, 1 for t >= 1, smooth
/// monotone in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let g = |u: f64| Float::exp(-1.0 / u);
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

/// Mother cutoff `chi_tilde`: even, 1 on |t| <= 63/64, 0 on |t| >= 1.
pub fn chi_tilde(t: f64) -> f64 {
    let a = Float::abs(t);
    if a <= CHI_PLATEAU {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smoothstep((1.0 - a) / (1.0 - CHI_PLATEAU))
    }
}

/// The annulus bump `phi(xi) = chi_tilde(xi/2) - chi_tilde(xi)`, supported in
/// `63/64 <= |xi| <= 2`.
pub fn phi_bump(xi: f64) -> f64 {
    chi_tilde(xi / 2.0) - chi_tilde(xi)
}

/// Multiplier of the Littlewood-Paley block `Delta_j` at frequency `xi`.
///
/// `Delta_0` carries the whole low ball (`chi_tilde(xi/2)`), `Delta_j` for
/// `j >= 1` is `phi(2^{-j} xi)`; negative `j` gives zero.
pub fn lp_block_multiplier(j: i32, xi: f64) -> f64 {
    if j < 0 {
        0.0
    } else if j == 0 {
        chi_tilde(xi / 2.0)
    } else {
        let scale = Float::powi(2.0, -j);
        phi_bump(xi * scale)
    }
}

/// Multiplier of the partial sum `S_j = sum_{l <= j} Delta_l`.
pub fn partial_sum_multiplier(j: i32, xi: f64) -> f64 {
    if j < 0 {
        0.0
    } else {
        // telescoping: S_j = chi_tilde(xi / 2^{j+1})
        chi_tilde(xi * Float::powi(2.0, -(j + 1)))
    }
}

/// Littlewood-Paley block `Delta_j u`.
pub fn lp_block(u: &Spectrum, j: i32) -> Spectrum {
    apply_even_multiplier(u, |a| lp_block_multiplier(j, a))
}

/// Partial sum `S_j u` (zero for j <= -1).
pub fn partial_sum(u: &Spectrum, j: i32) -> Spectrum {
    apply_even_multiplier(u, |a| partial_sum_multiplier(j, a))
}

/// Largest block index that is nonzero on the retained frequencies.
pub fn j_max(grid: &FourierGrid) -> i32 {
    let mut j = 0;
    // Delta_j touches |xi| > c0 * 2^j; once that exceeds max_freq the block
    // vanishes on the grid.
    while CHI_PLATEAU * Float::powi(2.0, j) <= grid.max_freq() as f64 {
        j += 1;
    }
    j
}

/// A full Littlewood-Paley decomposition of one spectrum.
#[derive(Debug, Clone)]
pub struct LPDecomposition {
    /// Blocks `Delta_0 u, ..., Delta_{j_max} u`.
    pub blocks: Vec<Spectrum>,
    /// Largest block index represented.
    pub j_max: i32,
}

/// Decompose `u` into its Littlewood-Paley blocks.
pub fn lp_decompose(u: &Spectrum) -> LPDecomposition {
    let jm = j_max(&u.grid);
    let blocks = (0..=jm).map(|j| lp_block(u, j)).collect();
    LPDecomposition { blocks, j_max: jm }
}

/// Sobolev norm `(sum (1+xi^2)^s |u_hat|^2)^{1/2}` over retained frequencies.
pub fn sobolev_norm(u: &Spectrum, s: f64) -> f64 {
    let mut acc = 0.0;
    for (xi, c) in u.iter_freqs() {
        let w = Float::powf(1.0 + (xi as f64) * (xi as f64), s);
        acc += w * c.norm_sqr();
    }
    Float::sqrt(acc)
}
