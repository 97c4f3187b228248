//! Spectral substrate: transform pair, multipliers, Littlewood-Paley blocks,
//! Sobolev norms, and the fixed bump's support properties.

mod support;

use jetstab_core::spectral::{
    self, apply_even_multiplier, apply_multiplier, from_spectrum, lp_block, lp_decompose,
    partial_sum, phi_bump, sobolev_norm, to_spectrum, FourierGrid, GridOps, RealField, Spectrum,
};
use num_complex::Complex64;
use proptest::prelude::*;
use support::SplitMix64;

fn grid(n: usize) -> FourierGrid {
    FourierGrid::new(n).unwrap()
}

fn random_field(g: FourierGrid, seed: u64) -> RealField {
    let mut rng = SplitMix64::new(seed);
    RealField::from_values(g, (0..g.n_modes()).map(|_| rng.next_f64()).collect()).unwrap()
}

/// Random Hermitian spectrum (a general real field's transform).
fn random_spectrum(g: FourierGrid, seed: u64) -> Spectrum {
    to_spectrum(&random_field(g, seed))
}

#[test]
fn grid_constructor_guards() {
    assert!(FourierGrid::new(48).is_err()); // not a power of two
    assert!(FourierGrid::new(4).is_err()); // too small
    assert!(FourierGrid::with_dealias(64, 0.0).is_err());
    assert!(FourierGrid::with_dealias(64, 1.5).is_err());
    assert!(FourierGrid::new(64).is_ok());
}

#[test]
fn cosine_transform_coefficients() {
    let g = grid(64);
    let f = RealField::from_fn(g, |x| x.cos());
    let s = to_spectrum(&f);
    assert!((s.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    assert!((s.coeff(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    let rest: f64 = s
        .iter_freqs()
        .filter(|(xi, _)| xi.abs() != 1)
        .map(|(_, c)| c.norm())
        .sum();
    assert!(rest < 1e-13);
}

#[test]
fn constant_transform() {
    let g = grid(32);
    let f = RealField::from_fn(g, |_| 1.0);
    let s = to_spectrum(&f);
    assert!((s.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    let rest: f64 = s.iter_freqs().filter(|(xi, _)| *xi != 0).map(|(_, c)| c.norm()).sum();
    assert!(rest < 1e-13);
}

#[test]
fn fft_matches_naive_dft() {
    let g = grid(16);
    let f = random_field(g, 7);
    let s = to_spectrum(&f);
    let n = g.n_modes();
    for k in 0..n {
        let xi = g.freq_of_index(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, &v) in f.values.iter().enumerate() {
            let ang = -(xi as f64) * g.x(m);
            acc += v * Complex64::new(ang.cos(), ang.sin());
        }
        acc /= n as f64;
        if k == n / 2 {
            acc = Complex64::new(0.0, 0.0); // Nyquist zeroed by convention
        }
        assert!((s.coeffs[k] - acc).norm() < 1e-13, "DFT mismatch at index {k}");
    }
}

#[test]
fn nyquist_mode_zeroed() {
    let g = grid(32);
    // cos(16 x) lives exactly on the Nyquist mode and is annihilated.
    let f = RealField::from_fn(g, |x| (16.0 * x).cos());
    let s = to_spectrum(&f);
    assert!(s.l2_norm() < 1e-13);
}

#[test]
fn multiplier_derivative_and_identity() {
    let g = grid(64);
    let f = RealField::from_fn(g, |x| x.cos());
    let s = to_spectrum(&f);
    let ds = apply_multiplier(|xi| Complex64::new(0.0, xi as f64), &s).unwrap();
    let df = from_spectrum(&ds);
    for (m, &v) in df.values.iter().enumerate() {
        assert!((v + g.x(m).sin()).abs() < 1e-12);
    }
    let id = apply_multiplier(|_| Complex64::new(1.0, 0.0), &s).unwrap();
    assert!(id.dist(&s) < 1e-15);
}

#[test]
fn multiplier_single_mode_three_halves() {
    let g = grid(64);
    let u = Spectrum::single_mode(g, 2, Complex64::new(1.0, 0.0)).unwrap();
    let v = apply_even_multiplier(&u, |a| a.powf(1.5));
    assert!((v.coeff(2).re - 2f64.powf(1.5)).abs() < 1e-14);
}

#[test]
fn multiplier_nonfinite_reports_frequency() {
    let g = grid(32);
    let u = Spectrum::single_mode(g, 3, Complex64::new(1.0, 0.0)).unwrap();
    let err = apply_multiplier(|xi| Complex64::new(1.0 / ((xi - 3) as f64), 0.0), &u)
        .unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains('3'), "offending frequency missing from: {msg}");
}

#[test]
fn lp_block_plateau_and_conventions() {
    let g = grid(256);
    // phi(1) = 1 for the chosen bump, so Delta_2 e^{i4x} = e^{i4x}.
    assert!((phi_bump(1.0) - 1.0).abs() < 1e-15);
    let u = Spectrum::single_mode(g, 4, Complex64::new(1.0, 0.0)).unwrap();
    let b = lp_block(&u, 2);
    assert!(b.dist(&u) < 1e-15);
    // S_{-1} = 0.
    let s = partial_sum(&u, -1);
    assert!(s.l2_norm() == 0.0);
    // Negative block index gives zero.
    assert!(lp_block(&u, -3).l2_norm() == 0.0);
}

#[test]
fn lp_reconstruction_and_block_support() {
    let g = grid(256);
    let u = random_spectrum(g, 11);
    let decomp = lp_decompose(&u);
    let mut sum = Spectrum::zeros(g);
    for b in &decomp.blocks {
        sum = sum.axpy(Complex64::new(1.0, 0.0), b).unwrap();
    }
    assert!(sum.dist(&u) < 1e-12 * u.l2_norm().max(1.0), "LP reconstruction failed");
    // Support: Delta_j u vanishes outside [2^{j-1}, 2^{j+1}] (j >= 1).
    for (j, b) in decomp.blocks.iter().enumerate().skip(1) {
        let lo = 2f64.powi(j as i32 - 1);
        let hi = 2f64.powi(j as i32 + 1);
        for (xi, c) in b.iter_freqs() {
            let a = (xi as f64).abs();
            if a < lo || a > hi {
                assert!(
                    c.norm() == 0.0,
                    "block {j} leaks at frequency {xi}: {}",
                    c.norm()
                );
            }
        }
    }
    // Delta_0 is the low ball: support inside |xi| <= 2.
    for (xi, c) in decomp.blocks[0].iter_freqs() {
        if (xi as f64).abs() > 2.0 {
            assert!(c.norm() == 0.0);
        }
    }
}

#[test]
fn sobolev_norm_examples() {
    let g = grid(64);
    let e1 = Spectrum::single_mode(g, 1, Complex64::new(1.0, 0.0)).unwrap();
    assert!((sobolev_norm(&e1, 1.0) - 2f64.sqrt()).abs() < 1e-14);
    assert!(sobolev_norm(&Spectrum::zeros(g), 2.5) == 0.0);
    let e3 = Spectrum::single_mode(g, 3, Complex64::new(1.0, 0.0)).unwrap();
    assert!((sobolev_norm(&e3, 2.0) - 10.0).abs() < 1e-13);
}

#[test]
fn dealias_zeroes_high_modes() {
    let g = grid(64); // cut = (2/3)*32 ~ 21.3
    let mut u = Spectrum::zeros(g);
    u.set_coeff(20, Complex64::new(1.0, 0.0));
    u.set_coeff(25, Complex64::new(1.0, 0.0));
    spectral::dealias_in_place(&mut u);
    assert!(u.coeff(20).norm() == 1.0);
    assert!(u.coeff(25).norm() == 0.0);
}

#[test]
fn grid_ops_product_is_dealiased_pointwise_product() {
    let g = grid(64);
    let ops = GridOps::new(g);
    let a = RealField::from_fn(g, |x| (3.0 * x).cos());
    let b = RealField::from_fn(g, |x| (2.0 * x).sin());
    let p = ops.product(&a, &b).unwrap();
    // cos(3x) sin(2x) = (sin(5x) - sin(x)) / 2, all inside the dealias cut.
    let expect = RealField::from_fn(g, |x| 0.5 * ((5.0 * x).sin() - x.sin()));
    for (u, v) in p.values.iter().zip(expect.values.iter()) {
        assert!((u - v).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_round_trip(seed in 0u64..1_000_000) {
        let g = grid(128);
        let f = random_field(g, seed);
        // Nyquist-free version for exact comparisons.
        let s = to_spectrum(&f);
        let back = from_spectrum(&s);
        let s2 = to_spectrum(&back);
        // Round trip reproduces samples of the retained part.
        let back2 = from_spectrum(&s2);
        for (a, b) in back.values.iter().zip(back2.values.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // Parseval: mean-square field norm equals coefficient l2 norm.
        prop_assert!((back.l2_norm() - s.l2_norm()).abs() < 1e-12 * (1.0 + s.l2_norm()));
    }

    #[test]
    fn real_even_multiplier_preserves_reality(seed in 0u64..1_000_000) {
        let g = grid(64);
        let s = random_spectrum(g, seed);
        let m = apply_even_multiplier(&s, |a| (1.0 + a).sqrt());
        prop_assert!(m.hermitian_defect() < 1e-12);
    }

    #[test]
    fn partial_sums_telescope(seed in 0u64..1_000_000, j in 0i32..6) {
        let g = grid(128);
        let u = random_spectrum(g, seed);
        // S_j - S_{j-1} = Delta_j.
        let sj = partial_sum(&u, j);
        let sjm1 = partial_sum(&u, j - 1);
        let dj = lp_block(&u, j);
        let diff = sj.axpy(Complex64::new(-1.0, 0.0), &sjm1).unwrap();
        prop_assert!(diff.dist(&dj) < 1e-12 * (1.0 + u.l2_norm()));
    }
}
