//! Pluri-homogeneous symbols and their calculus.
//!
//! A symbol is a finite sum of terms of decreasing order,
//!
//! ```text
//!     a(x, xi) = sum_j a^(m - j)(x, xi),
//! ```
//!
//! where each term is, morally, `c_even(x) |xi|^{m-j} + c_odd(x) i sgn(xi)
//! |xi|^{m-j}`.  The concrete symbols of the problem (the Dirichlet-Neumann
//! symbol, the curvature symbol, the diagonalization symbols) are not exact
//! power laws -- they involve the Bessel ratio -- so every term is stored as
//! a lattice of exact values on (collocation point) x (retained integer
//! frequency), together with an exact `d/dxi` lattice computed from the
//! closed form of the term.  The `d/dxi` data is never finite-differenced in
//! `xi`.
//!
//! Values at `|xi| < 1/2` are irrelevant by convention (the quantization
//! cutoff annihilates them); lattice entries there hold the `|xi| = 1/2`
//! continuation of the power-law terms and the literal closed form of the
//! exact terms.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::float::Float;

use crate::error::{Error, Result};
use crate::linear::DispersionParams;
use crate::spectral::{apply_multiplier_unchecked, FourierGrid, GridOps, RealField};

/// Tolerance used when matching term orders during merges.
const ORDER_EPS: f64 = 1e-9;

/// One homogeneity component of a symbol, stored as lattices of exact
/// values and exact `d/dxi` values over (x-point) x (FFT frequency slot).
#[derive(Debug, Clone)]
pub struct SymbolTerm {
    order: f64,
    /// `values[ix * n + k]` is the term at collocation point `ix` and the
    /// frequency carried by FFT index `k`.
    values: Vec<Complex64>,
    /// Exact `d/dxi` of the term on the same lattice.
    dxi: Vec<Complex64>,
}

impl SymbolTerm {
    fn zeros(n: usize, order: f64) -> Self {
        SymbolTerm { order, values: vec![Complex64::new(0.0, 0.0); n * n], dxi: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    /// Nominal homogeneity order of the term.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Value lattice (row-major over x, then FFT frequency index).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Exact `d/dxi` lattice.
    pub fn dxi(&self) -> &[Complex64] {
        &self.dxi
    }
}

/// A finite sum of homogeneity terms; see the module docs.
#[derive(Debug, Clone)]
pub struct PluriHomogeneousSymbol {
    grid: FourierGrid,
    top_order: f64,
    /// Sorted by strictly decreasing order.
    terms: Vec<SymbolTerm>,
}

/// Frequency carried by lattice column `k`, with the `|xi| = 1/2`
/// continuation used at the zero mode for power-law evaluation.
fn column_freq(grid: &FourierGrid, k: usize) -> f64 {
    grid.freq_of_index(k) as f64
}

impl PluriHomogeneousSymbol {
    /// Symbol with the classical power-law terms
    /// `c_even_j(x) |xi|^{m-j} + c_odd_j(x) i sgn(xi) |xi|^{m-j}`.
    pub fn new(
        grid: FourierGrid,
        top_order: f64,
        components: &[(f64, RealField, RealField)],
    ) -> Result<Self> {
        let n = grid.n_modes();
        let mut terms = Vec::new();
        for (j, c_even, c_odd) in components {
            if *j < -ORDER_EPS {
                return Err(Error::config(format_args!("term offset must be >= 0, got {j}")));
            }
            if c_even.grid.n_modes() != n || c_odd.grid.n_modes() != n {
                return Err(Error::config(format_args!("symbol coefficient grid mismatch")));
            }
            let p = top_order - j;
            let mut term = SymbolTerm::zeros(n, p);
            for ix in 0..n {
                let ce = c_even.values[ix];
                let co = c_odd.values[ix];
                for k in 0..n {
                    let xi = column_freq(&grid, k);
                    // |xi| < 1/2 never matters; continue the power law from
                    // |xi| = 1/2 (sgn kept as sgn(xi), so the odd part of the
                    // zero column vanishes).
                    let a = Float::abs(xi).max(0.5);
                    let s = if xi > 0.0 {
                        1.0
                    } else if xi < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    let pow = Float::powf(a, p);
                    let dpow = if Float::abs(xi) < 0.5 { 0.0 } else { p * Float::powf(a, p - 1.0) };
                    let idx = ix * n + k;
                    term.values[idx] = Complex64::new(ce * pow, co * s * pow);
                    // d/dxi |xi|^p = p sgn(xi) |xi|^{p-1};
                    // d/dxi sgn(xi)|xi|^p = p |xi|^{p-1}.
                    term.dxi[idx] = Complex64::new(ce * s * dpow, co * dpow);
                }
            }
            terms.push(term);
        }
        let mut sym = PluriHomogeneousSymbol { grid, top_order, terms: Vec::new() };
        for t in terms {
            sym.merge_term(t);
        }
        Ok(sym)
    }

    /// x-independent symbol given by an exact multiplier `f(xi)` with exact
    /// derivative `df(xi)` (both as functions of the signed frequency).
    pub fn from_multiplier(
        grid: FourierGrid,
        order: f64,
        f: impl Fn(f64) -> Complex64,
        df: impl Fn(f64) -> Complex64,
    ) -> Self {
        Self::from_lattice(grid, order, |_, xi| (f(xi), df(xi)))
    }

    /// General exact lattice constructor: `f(ix, xi)` returns the value and
    /// the exact `d/dxi` at collocation index `ix` and signed frequency `xi`.
    pub fn from_lattice(
        grid: FourierGrid,
        order: f64,
        f: impl Fn(usize, f64) -> (Complex64, Complex64),
    ) -> Self {
        let n = grid.n_modes();
        let mut term = SymbolTerm::zeros(n, order);
        for ix in 0..n {
            for k in 0..n {
                let xi = column_freq(&grid, k);
                let (v, d) = f(ix, xi);
                term.values[ix * n + k] = v;
                term.dxi[ix * n + k] = d;
            }
        }
        PluriHomogeneousSymbol { grid, top_order: order, terms: vec![term] }
    }

    /// The identically-zero symbol of the given order.
    pub fn zero(grid: FourierGrid, order: f64) -> Self {
        PluriHomogeneousSymbol { grid, top_order: order, terms: Vec::new() }
    }

    /// Shared collocation grid.
    pub fn grid(&self) -> FourierGrid {
        self.grid
    }

    /// Order of the leading term slot.
    pub fn top_order(&self) -> f64 {
        self.top_order
    }

    /// Terms in strictly decreasing order.
    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// The term of the given order, if present.
    pub fn term_of_order(&self, order: f64) -> Option<&SymbolTerm> {
        self.terms.iter().find(|t| Float::abs(t.order - order) < ORDER_EPS)
    }

    /// Total value lattice (sum over terms), row-major over x then FFT index.
    pub fn total_values(&self) -> Vec<Complex64> {
        let n = self.grid.n_modes();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for t in &self.terms {
            for (o, v) in out.iter_mut().zip(t.values.iter()) {
                *o += v;
            }
        }
        out
    }

    /// Total symbol value at collocation index `ix` and frequency `xi`.
    pub fn value(&self, ix: usize, xi: i64) -> Complex64 {
        let n = self.grid.n_modes();
        let k = self.grid.index_of_freq(xi);
        self.terms.iter().map(|t| t.values[ix * n + k]).sum()
    }

    /// Keep only the `count` leading terms.
    pub fn truncated(&self, count: usize) -> Self {
        PluriHomogeneousSymbol {
            grid: self.grid,
            top_order: self.top_order,
            terms: self.terms.iter().take(count).cloned().collect(),
        }
    }

    /// Pointwise sum; terms of equal order are merged.
    pub fn add(&self, other: &PluriHomogeneousSymbol) -> Result<Self> {
        if self.grid.n_modes() != other.grid.n_modes() {
            return Err(Error::config(format_args!("symbol grid mismatch")));
        }
        let mut out = self.clone();
        out.top_order = self.top_order.max(other.top_order);
        for t in &other.terms {
            out.merge_term(t.clone());
        }
        Ok(out)
    }

    /// Scale by a complex constant.
    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            for v in t.values.iter_mut() {
                *v *= c;
            }
            for v in t.dxi.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Restrict every term (and its `d/dxi` lattice) to `|xi| >= n_cut`.
    pub fn high_cut(&self, n_cut: i64) -> Self {
        let n = self.grid.n_modes();
        let mut out = self.clone();
        for t in &mut out.terms {
            for k in 0..n {
                if self.grid.freq_of_index(k).abs() < n_cut {
                    for ix in 0..n {
                        t.values[ix * n + k] = Complex64::new(0.0, 0.0);
                        t.dxi[ix * n + k] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        out
    }

    fn merge_term(&mut self, t: SymbolTerm) {
        for existing in &mut self.terms {
            if Float::abs(existing.order - t.order) < ORDER_EPS {
                for (a, b) in existing.values.iter_mut().zip(t.values.iter()) {
                    *a += b;
                }
                for (a, b) in existing.dxi.iter_mut().zip(t.dxi.iter()) {
                    *a += b;
                }
                return;
            }
        }
        self.terms.push(t);
        self.terms.sort_by(|a, b| b.order.partial_cmp(&a.order).unwrap());
    }
}

/// `d/dx` of every column of a lattice via the spectral derivative.
fn lattice_dx(grid: &FourierGrid, lat: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n_modes();
    let ops = GridOps::new(*grid);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        for ix in 0..n {
            column[ix] = lat[ix * n + k];
        }
        let spec = ops.analyze_complex(&column);
        let dspec = apply_multiplier_unchecked(&spec, |z| Complex64::new(0.0, z as f64));
        let back = ops.synthesize_complex(&dspec);
        for ix in 0..n {
            out[ix * n + k] = back[ix];
        }
    }
    out
}

fn lattice_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
}

fn lattice_add_into(dst: &mut [Complex64], src: &[Complex64]) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += s;
    }
}

/// Truncated composition `a #_r b`.
///
/// The composed symbol is `sum_{|alpha| < r} (1/(i^|alpha| alpha!))
/// d_xi^alpha a d_x^alpha b`, with the pluri-homogeneous bookkeeping: a pair
/// of terms at offsets `(j, k)` below the respective top orders contributes
/// only when `j + k + |alpha| < r`.  Only `0 < r <= 2` is supported: for
/// `r = 2` this is the two-term composition (principal and subprincipal
/// parts), which is all the reduction ever needs.
///
/// The `d/dxi` lattice of the mixed (`|alpha| = 1`) contribution would
/// require `d^2/dxi^2` of `a`, which is not stored; it is left at zero.
/// This is harmless: the mixed term always lands strictly below the top
/// order, and the calculus only ever differentiates principal terms.
pub fn compose_symbols(
    a: &PluriHomogeneousSymbol,
    b: &PluriHomogeneousSymbol,
    r: f64,
) -> Result<PluriHomogeneousSymbol> {
    if !(r > 0.0) {
        return Err(Error::config(format_args!("composition requires r > 0, got {r}")));
    }
    if r > 2.0 + ORDER_EPS {
        return Err(Error::config(format_args!(
            "composition is implemented for r <= 2 (two-term calculus), got {r}"
        )));
    }
    if a.grid.n_modes() != b.grid.n_modes() {
        return Err(Error::config(format_args!("symbol grid mismatch in composition")));
    }
    let grid = a.grid;
    let m = a.top_order + b.top_order;
    let mut out = PluriHomogeneousSymbol::zero(grid, m);
    for ta in &a.terms {
        let ja = a.top_order - ta.order;
        for tb in &b.terms {
            let jb = b.top_order - tb.order;
            if ja + jb < r - ORDER_EPS {
                let mut term = SymbolTerm::zeros(grid.n_modes(), ta.order + tb.order);
                term.values = lattice_mul(&ta.values, &tb.values);
                term.dxi = lattice_mul(&ta.dxi, &tb.values);
                lattice_add_into(&mut term.dxi, &lattice_mul(&ta.values, &tb.dxi));
                out.merge_term(term);
            }
            if ja + jb + 1.0 < r - ORDER_EPS {
                // (1/i) d_xi a d_x b.
                let dxb = lattice_dx(&grid, &tb.values);
                let mut term = SymbolTerm::zeros(grid.n_modes(), ta.order + tb.order - 1.0);
                term.values = lattice_mul(&ta.dxi, &dxb)
                    .into_iter()
                    .map(|v| v * Complex64::new(0.0, -1.0))
                    .collect();
                out.merge_term(term);
            }
        }
    }
    Ok(out)
}

/// Two-term composition: both factors truncated to their two leading terms,
/// composed with `r = 2`.
pub fn sharp(a: &PluriHomogeneousSymbol, b: &PluriHomogeneousSymbol) -> Result<PluriHomogeneousSymbol> {
    compose_symbols(&a.truncated(2), &b.truncated(2), 2.0)
}

/// Truncated adjoint symbol `a^{x;r} = sum_{|alpha| < r}
/// (1/(i^|alpha| alpha!)) d_xi^alpha d_x^alpha conj(a)`.
pub fn adjoint_symbol(a: &PluriHomogeneousSymbol, r: f64) -> Result<PluriHomogeneousSymbol> {
    if !(r > 0.0) {
        return Err(Error::config(format_args!("adjoint requires r > 0, got {r}")));
    }
    if r > 2.0 + ORDER_EPS {
        return Err(Error::config(format_args!(
            "adjoint is implemented for r <= 2 (two-term calculus), got {r}"
        )));
    }
    let grid = a.grid;
    let mut out = PluriHomogeneousSymbol::zero(grid, a.top_order);
    for ta in &a.terms {
        let j = a.top_order - ta.order;
        if j < r - ORDER_EPS {
            let mut term = SymbolTerm::zeros(grid.n_modes(), ta.order);
            term.values = ta.values.iter().map(|v| v.conj()).collect();
            term.dxi = ta.dxi.iter().map(|v| v.conj()).collect();
            out.merge_term(term);
        }
        if j + 1.0 < r - ORDER_EPS {
            // (1/i) d_x d_xi conj(a); the d/dxi lattice of this term would
            // need second xi-derivatives and is never consumed -- left zero.
            let conj_dxi: Vec<Complex64> = ta.dxi.iter().map(|v| v.conj()).collect();
            let mixed = lattice_dx(&grid, &conj_dxi);
            let mut term = SymbolTerm::zeros(grid.n_modes(), ta.order - 1.0);
            term.values = mixed.into_iter().map(|v| v * Complex64::new(0.0, -1.0)).collect();
            out.merge_term(term);
        }
    }
    Ok(out)
}

/// The Dirichlet-Neumann symbol: `lambda^(1) = ratio(rho|xi|)|xi|` (exact
/// multiplier) and, when `order_count >= 2`,
/// `lambda^(0) = eta/(2 rho (rho+eta)) - (eta_x/(2(rho+eta))) i sgn(xi)`.
pub fn symbol_lambda(
    eta: &RealField,
    p: &DispersionParams,
    order_count: usize,
) -> Result<PluriHomogeneousSymbol> {
    if !(order_count == 1 || order_count == 2) {
        return Err(Error::config(format_args!(
            "symbol_lambda implements one or two terms, got {order_count}"
        )));
    }
    let grid = eta.grid;
    let rho = p.rho();
    let mut min_r = f64::INFINITY;
    for &e in &eta.values {
        min_r = min_r.min(rho + e);
    }
    if !(min_r > 0.0) {
        return Err(Error::config(format_args!(
            "interface touches the axis: min(rho+eta) = {min_r}"
        )));
    }
    let lam = |xi: f64| Complex64::new(p.lam1(xi), 0.0);
    let dlam = |xi: f64| Complex64::new(p.dlam1(xi), 0.0);
    let mut sym = PluriHomogeneousSymbol::from_multiplier(grid, 1.0, lam, dlam);
    if order_count == 2 {
        let ops = GridOps::new(grid);
        let etax = ops.dx(eta);
        let c_even = eta.map(|e| e / (2.0 * rho * (rho + e)));
        let c_odd = eta.zip(&etax, |e, ex| -ex / (2.0 * (rho + e)))?;
        let low = PluriHomogeneousSymbol::new(grid, 1.0, &[(1.0, c_even, c_odd)])?;
        sym = sym.add(&low)?;
    }
    Ok(sym)
}

/// The curvature symbol `h` with its three components of orders 2, 1, 0.
pub fn symbol_h(eta: &RealField, p: &DispersionParams) -> Result<PluriHomogeneousSymbol> {
    let grid = eta.grid;
    let rho = p.rho();
    let mut min_r = f64::INFINITY;
    for &e in &eta.values {
        min_r = min_r.min(rho + e);
    }
    if !(min_r > 0.0) {
        return Err(Error::config(format_args!(
            "interface touches the axis: min(rho+eta) = {min_r}"
        )));
    }
    let ops = GridOps::new(grid);
    let etax = ops.dx(eta);
    let etaxx = ops.dx(&etax);
    let n = grid.n_modes();
    let zero = RealField::zeros(grid);
    // h^(2) = |xi|^2 / (1+eta_x^2)^{3/2}.
    let c2 = etax.map(|ex| Float::powf(1.0 + ex * ex, -1.5));
    // h^(1) = c1(x) i xi with
    // c1 = (3(rho+eta)eta_xx - 1 - eta_x^2) eta_x / ((rho+eta)(1+eta_x^2)^{5/2}).
    let mut c1 = RealField::zeros(grid);
    for ix in 0..n {
        let e = eta.values[ix];
        let ex = etax.values[ix];
        let exx = etaxx.values[ix];
        c1.values[ix] = (3.0 * (rho + e) * exx - 1.0 - ex * ex) * ex
            / ((rho + e) * Float::powf(1.0 + ex * ex, 2.5));
    }
    // h^(0) = -1/((rho+eta)^2 sqrt(1+eta_x^2)) + 1/rho^2.
    let c0 = eta.zip(&etax, |e, ex| {
        -1.0 / ((rho + e) * (rho + e) * Float::sqrt(1.0 + ex * ex)) + 1.0 / (rho * rho)
    })?;
    PluriHomogeneousSymbol::new(
        grid,
        2.0,
        &[(0.0, c2, zero.clone()), (1.0, zero.clone(), c1), (2.0, c0, zero)],
    )
}

/// The `1_N`-cut inverse of the Dirichlet-Neumann symbol,
/// `(1/lambda^(1) - lambda^(0)/(lambda^(1))^2) 1_N`.
fn lambda_inv(
    eta: &RealField,
    p: &DispersionParams,
    n_cut: i64,
) -> Result<PluriHomogeneousSymbol> {
    let grid = eta.grid;
    let lam = symbol_lambda(eta, p, 2)?;
    let n = grid.n_modes();
    let lam1 = lam.term_of_order(1.0).unwrap();
    let lam0 = lam.term_of_order(0.0).unwrap();
    let mut lead = SymbolTerm::zeros(n, -1.0);
    let mut sub = SymbolTerm::zeros(n, -2.0);
    for ix in 0..n {
        for k in 0..n {
            if grid.freq_of_index(k).abs() < n_cut {
                continue;
            }
            let idx = ix * n + k;
            let l1 = lam1.values[idx];
            let dl1 = lam1.dxi[idx];
            let l0 = lam0.values[idx];
            lead.values[idx] = 1.0 / l1;
            lead.dxi[idx] = -dl1 / (l1 * l1);
            sub.values[idx] = -l0 / (l1 * l1);
            // lambda^(0) is xi-independent on each half-line.
            sub.dxi[idx] = 2.0 * l0 * dl1 / (l1 * l1 * l1);
        }
    }
    Ok(PluriHomogeneousSymbol { grid, top_order: -1.0, terms: vec![lead, sub] })
}

/// The diagonalization symbols `(p, q, gamma)` above the high-frequency cut.
///
/// * `gamma^(3/2) = sqrt((|xi|^2 (1+eta_x^2)^{-3/2} - 1/rho^2)
///   ratio(rho|xi|)|xi|) 1_N`, with `gamma^(1/2) = -(i/2) d_x d_xi
///   gamma^(3/2)`;
/// * `q^(1/2) = sqrt((rho+eta) ratio(rho|xi|)|xi|) 1_N`;
/// * `p = gamma # q # lambda_inv` (two-term composition), whose principal
///   part is `sqrt((rho+eta)(|xi|^2 (1+eta_x^2)^{-3/2} - 1/rho^2)) 1_N`.
pub fn diag_symbols(
    eta: &RealField,
    p: &DispersionParams,
    n_cut: i64,
) -> Result<(PluriHomogeneousSymbol, PluriHomogeneousSymbol, PluriHomogeneousSymbol)> {
    let grid = eta.grid;
    let rho = p.rho();
    if (n_cut as f64) <= 1.0 / rho {
        return Err(Error::config(format_args!(
            "high-frequency cut {n_cut} must exceed 1/rho = {}",
            1.0 / rho
        )));
    }
    if n_cut > grid.max_freq() {
        return Err(Error::config(format_args!(
            "high-frequency cut {n_cut} exceeds the retained band (max {})",
            grid.max_freq()
        )));
    }
    let ops = GridOps::new(grid);
    let etax = ops.dx(eta);
    let n = grid.n_modes();
    let mut min_r = f64::INFINITY;
    for &e in &eta.values {
        min_r = min_r.min(rho + e);
    }
    if !(min_r > 0.0) {
        return Err(Error::config(format_args!(
            "interface touches the axis: min(rho+eta) = {min_r}"
        )));
    }

    // gamma^(3/2): radicand R(x,xi) = (A(x) xi^2 - 1/rho^2) lam1(xi) with
    // A = (1+eta_x^2)^{-3/2}; exact derivative via R'/(2 sqrt(R)).
    let mut gamma_lead = SymbolTerm::zeros(n, 1.5);
    let mut q_lead = SymbolTerm::zeros(n, 0.5);
    for ix in 0..n {
        let ex = etax.values[ix];
        let aco = Float::powf(1.0 + ex * ex, -1.5);
        let rpe = rho + eta.values[ix];
        for k in 0..n {
            let xi = grid.freq_of_index(k);
            if xi.abs() < n_cut {
                continue;
            }
            let z = xi as f64;
            let l1 = p.lam1(z);
            let dl1 = p.dlam1(z);
            let rad = (aco * z * z - 1.0 / (rho * rho)) * l1;
            if rad <= 0.0 {
                return Err(Error::config(format_args!(
                    "gamma radicand non-positive at xi = {xi}; raise the high-frequency cut"
                )));
            }
            let drad = 2.0 * aco * z * l1 + (aco * z * z - 1.0 / (rho * rho)) * dl1;
            let idx = ix * n + k;
            gamma_lead.values[idx] = Complex64::new(Float::sqrt(rad), 0.0);
            gamma_lead.dxi[idx] = Complex64::new(drad / (2.0 * Float::sqrt(rad)), 0.0);
            let qv = rpe * l1;
            q_lead.values[idx] = Complex64::new(Float::sqrt(qv), 0.0);
            q_lead.dxi[idx] = Complex64::new(rpe * dl1 / (2.0 * Float::sqrt(qv)), 0.0);
        }
    }
    // gamma^(1/2) = -(i/2) d_x d_xi gamma^(3/2).  Its own d/dxi lattice would
    // need second xi-derivatives of the Bessel ratio; the calculus never
    // differentiates a subprincipal term, so it is left at zero.
    let mut gamma_sub = SymbolTerm::zeros(n, 0.5);
    gamma_sub.values = lattice_dx(&grid, &gamma_lead.dxi)
        .into_iter()
        .map(|v| v * Complex64::new(0.0, -0.5))
        .collect();
    let gamma = PluriHomogeneousSymbol { grid, top_order: 1.5, terms: vec![gamma_lead, gamma_sub] };
    let q = PluriHomogeneousSymbol { grid, top_order: 0.5, terms: vec![q_lead] };
    let linv = lambda_inv(eta, p, n_cut)?;
    let p_sym = sharp(&sharp(&gamma, &q)?, &linv)?;
    Ok((p_sym, q, gamma))
}
