//! Linearized theory: dispersion relation against frozen high-precision
//! values and a brute-force argmax oracle, spectral projections, the complex
//! coordinate round trip, and the exact linear flow.

mod support;

use jetstab_core::linear::{
    self, from_complex, lambda_d, lambda_g, linear_flow, most_unstable_wavenumber, proj_d, proj_g,
    proj_s, proj_u, rayleigh_profile, to_complex, unstable_seed, DispersionParams,
};
use jetstab_core::dynamics::JetState;
use jetstab_core::spectral::{to_spectrum, FourierGrid, RealField, Spectrum};
use num_complex::Complex64;
use proptest::prelude::*;
use support::SplitMix64;

/// Frozen 40-digit reference values, rounded to f64.
const LAMBDA_G_1_RHO_051: f64 = 0.8383236154032396; // lambda_g(1) at rho = 0.51
const LAMBDA_G_1_RHO_034: f64 = 1.1323205244059328;
const LAMBDA_G_2_RHO_034: f64 = 1.7299187157171242;
const LAMBDA_G_1_RHO_083: f64 = 0.4158463705640879;
const K_STAR: f64 = 0.6970188983063286;
const F_K_STAR: f64 = 0.11788146419580218;

fn grid(n: usize) -> FourierGrid {
    FourierGrid::new(n).unwrap()
}

fn params(rho: f64) -> DispersionParams {
    DispersionParams::new(rho).unwrap()
}

/// Random complex spectrum (no Hermitian symmetry) with zero Nyquist mode.
fn random_complex_spectrum(g: FourierGrid, seed: u64) -> Spectrum {
    let mut rng = SplitMix64::new(seed);
    let mut s = Spectrum::zeros(g);
    for k in 0..g.n_modes() {
        if k == g.n_modes() / 2 {
            continue;
        }
        s.coeffs[k] = Complex64::new(rng.next_f64(), rng.next_f64());
    }
    s
}

fn random_state(g: FourierGrid, p: DispersionParams, amp: f64, seed: u64) -> JetState {
    let mut rng = SplitMix64::new(seed);
    // Strip the Nyquist mode up front (the transform convention drops it).
    let filter = |f: &RealField| {
        jetstab_core::spectral::from_spectrum(&to_spectrum(f))
    };
    let eta = RealField::from_values(
        g,
        (0..g.n_modes()).map(|_| amp * rng.next_f64()).collect(),
    )
    .unwrap();
    let psi = RealField::from_values(
        g,
        (0..g.n_modes()).map(|_| amp * rng.next_f64()).collect(),
    )
    .unwrap();
    JetState::new(filter(&eta), filter(&psi), p).unwrap()
}

#[test]
fn constructor_guards() {
    assert!(DispersionParams::new(0.5).is_err()); // 1/rho integer
    assert!(DispersionParams::new(0.25).is_err());
    assert!(DispersionParams::new(1.0 / 3.0).is_err()); // within 1e-9
    assert!(DispersionParams::new(0.0).is_err());
    assert!(DispersionParams::new(1.2).is_err());
    assert!(DispersionParams::new(0.51).is_ok());
    assert!(DispersionParams::new(0.34).is_ok());
}

#[test]
fn lambda_g_frozen_values() {
    let tol = 2e-10; // the frozen constants above carry 10 digits
    assert!((lambda_g(1, &params(0.51)) - LAMBDA_G_1_RHO_051).abs() < tol);
    assert!((lambda_g(1, &params(0.34)) - LAMBDA_G_1_RHO_034).abs() < tol);
    assert!((lambda_g(2, &params(0.34)) - LAMBDA_G_2_RHO_034).abs() < tol);
    assert!((lambda_g(1, &params(0.83)) - LAMBDA_G_1_RHO_083).abs() < tol);
}

#[test]
fn band_supports_are_disjoint() {
    for &rho in &[0.51, 0.34, 0.83, 0.13] {
        let p = params(rho);
        for xi in -300..=300i64 {
            let g = lambda_g(xi, &p);
            let d = lambda_d(xi, &p);
            assert!(g * d == 0.0, "overlapping supports at xi={xi}, rho={rho}");
            if xi == 0 {
                assert!(g == 0.0 && d == 0.0);
            } else if (xi.abs() as f64) < 1.0 / rho {
                assert!(g > 0.0, "growing band empty at xi={xi}, rho={rho}");
            } else {
                assert!(d > 0.0, "dispersive band empty at xi={xi}, rho={rho}");
            }
        }
    }
}

#[test]
fn most_unstable_wavenumber_against_oracle() {
    let k = most_unstable_wavenumber();
    // Frozen 40-digit argmax of ratio(k) k (1 - k^2).
    assert!((k - K_STAR).abs() < 1e-6);
    assert!((rayleigh_profile(k) - F_K_STAR).abs() < 1e-10);
    // Quoted experimental location of the peak.
    assert!((k - 0.678).abs() <= 0.02);
    // Argmax definition.
    assert!(rayleigh_profile(k) > rayleigh_profile(0.5));
    assert!(rayleigh_profile(k) > rayleigh_profile(0.9));
    // Brute-force grid scan on 10^6 points.
    let n = 1_000_000;
    let mut best_k = 0.0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 1..n {
        let kk = i as f64 / n as f64;
        let f = rayleigh_profile(kk);
        if f > best_f {
            best_f = f;
            best_k = kk;
        }
    }
    assert!((k - best_k).abs() < 1e-5, "golden section {k} vs scan {best_k}");
}

#[test]
fn projections_idempotent_orthogonal_complete() {
    let g = grid(64);
    let p = params(0.13); // several growing pairs
    let z = random_complex_spectrum(g, 42);
    let one = Complex64::new(1.0, 0.0);
    let zu = proj_u(&z, &p);
    let zs = proj_s(&z, &p);
    let zd = proj_d(&z, &p);
    // Idempotence.
    assert!(proj_u(&zu, &p).dist(&zu) < 1e-13);
    assert!(proj_s(&zs, &p).dist(&zs) < 1e-13);
    assert!(proj_d(&zd, &p).dist(&zd) < 1e-13);
    // Pairwise products vanish.
    assert!(proj_s(&zu, &p).l2_norm() < 1e-13);
    assert!(proj_u(&zs, &p).l2_norm() < 1e-13);
    assert!(proj_d(&zu, &p).l2_norm() < 1e-13);
    assert!(proj_u(&zd, &p).l2_norm() < 1e-13);
    // Completeness: the three pieces sum back to z.
    let sum = zu.axpy(one, &zs).unwrap().axpy(one, &zd).unwrap();
    assert!(sum.dist(&z) < 1e-13);
}

#[test]
fn complex_round_trip() {
    let g = grid(64);
    for &rho in &[0.51, 0.34, 0.83] {
        let p = params(rho);
        let state = random_state(g, p, 1e-3, 7 + (rho * 100.0) as u64);
        let z = to_complex(&state, &p);
        let back = from_complex(&z, &p).unwrap();
        let de: f64 = state
            .eta
            .values
            .iter()
            .zip(back.eta.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dp: f64 = state
            .psi
            .values
            .iter()
            .zip(back.psi.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(de < 1e-15, "eta round trip failed at rho={rho}: {de}");
        assert!(dp < 1e-15, "psi round trip failed at rho={rho}: {dp}");
    }
}

#[test]
fn zero_state_maps_to_zero() {
    let g = grid(32);
    let p = params(0.51);
    let z = to_complex(&JetState::flat(g, p), &p);
    assert!(z.l2_norm() == 0.0);
}

#[test]
fn eta_mean_survives_round_trip() {
    let g = grid(32);
    let p = params(0.51);
    let eta = RealField::from_fn(g, |_| 0.01);
    let state = JetState::new(eta, RealField::zeros(g), p).unwrap();
    let z = to_complex(&state, &p);
    assert!((z.coeff(0).re + 0.01 / 0.51).abs() < 1e-14);
    let back = from_complex(&z, &p).unwrap();
    assert!((back.eta.mean() - 0.01).abs() < 1e-14);
    // The mean mode is dispersive and frozen by the flow.
    let moved = linear_flow(&z, 3.7, &p);
    assert!((moved.coeff(0) - z.coeff(0)).norm() < 1e-15);
}

#[test]
fn unstable_seed_is_real_in_complex_coordinate() {
    let g = grid(64);
    let p = params(0.34); // growing band {1, 2}
    for xi0 in [1i64, 2] {
        let seed = unstable_seed(g, xi0, 1e-4, &p).unwrap();
        let z = to_complex(&seed, &p);
        // Membership in the unstable subspace: the stable projection vanishes.
        assert!(
            proj_s(&z, &p).l2_norm() < 1e-18,
            "seed xi0={xi0} leaks into the stable subspace"
        );
        assert!(proj_u(&z, &p).l2_norm() > 0.0);
    }
    assert!(unstable_seed(g, 3, 1e-4, &p).is_err()); // dispersive frequency
}

#[test]
fn single_mode_growth_and_decay() {
    let g = grid(64);
    let p = params(0.51);
    let lam = lambda_g(1, &p);
    // E_u: real Hermitian single-mode growing-band data.
    let mut zu = Spectrum::zeros(g);
    zu.set_coeff(1, Complex64::new(0.3, 0.0));
    zu.set_coeff(-1, Complex64::new(0.3, 0.0));
    let t = 0.8;
    let moved = linear_flow(&zu, t, &p);
    assert!((moved.l2_norm() - (lam * t).exp() * zu.l2_norm()).abs() < 1e-12);
    // E_s: i times real data decays; amplitude ratio e^{-lambda_g(1)} at t=1.
    let zs = zu.scale(Complex64::new(0.0, 1.0));
    let moved = linear_flow(&zs, 1.0, &p);
    let ratio = moved.l2_norm() / zs.l2_norm();
    assert!((ratio - (-LAMBDA_G_1_RHO_051).exp()).abs() < 1e-10);
}

#[test]
fn dispersive_flow_is_unitary() {
    let g = grid(64);
    let p = params(0.51);
    let z0 = proj_d(&random_complex_spectrum(g, 99), &p);
    for &t in &[0.3, 2.0, 17.5] {
        let zt = linear_flow(&z0, t, &p);
        assert!((zt.l2_norm() - z0.l2_norm()).abs() < 1e-12 * z0.l2_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup_property(seed in 0u64..1_000_000, t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let g = grid(32);
        let p = params(0.34);
        let z0 = random_complex_spectrum(g, seed);
        let a = linear_flow(&z0, t + s, &p);
        let b = linear_flow(&linear_flow(&z0, t, &p), s, &p);
        prop_assert!(a.dist(&b) < 1e-12 * (1.0 + a.l2_norm()));
    }

    #[test]
    fn subspaces_invariant_under_flow(seed in 0u64..1_000_000, t in -1.5f64..1.5) {
        let g = grid(32);
        let p = params(0.34);
        let z0 = random_complex_spectrum(g, seed);
        let scale = 1e-12 * (1.0 + z0.l2_norm() * (3.0f64).exp());
        // Projection before and after the flow commute on each subspace.
        for proj in [
            linear::proj_u as fn(&Spectrum, &DispersionParams) -> Spectrum,
            linear::proj_s,
            linear::proj_d,
        ] {
            let a = proj(&linear_flow(&proj(&z0, &p), t, &p), &p);
            let b = linear_flow(&proj(&z0, &p), t, &p);
            prop_assert!(a.dist(&b) < scale);
        }
    }

    #[test]
    fn round_trip_random_states(seed in 0u64..1_000_000) {
        let g = grid(32);
        let p = params(0.51);
        let state = random_state(g, p, 1e-2, seed);
        let z = to_complex(&state, &p);
        let back = from_complex(&z, &p).unwrap();
        let z2 = to_complex(&back, &p);
        prop_assert!(z.dist(&z2) < 1e-12);
        for (a, b) in state.eta.values.iter().zip(back.eta.values.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn growing_band_matches_proj_g_support() {
    let g = grid(64);
    let p = params(0.34);
    let z = random_complex_spectrum(g, 5);
    let zg = proj_g(&z, &p);
    for (xi, c) in zg.iter_freqs() {
        if p.is_growing(xi) {
            assert!((c - z.coeff(xi)).norm() == 0.0);
        } else {
            assert!(c.norm() == 0.0);
        }
    }
    assert_eq!(p.growing_pairs(), 2);
}
