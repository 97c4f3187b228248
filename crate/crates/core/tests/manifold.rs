//! Lyapunov-Perron solvers: the integral map, the stable/unstable solution
//! families (convergence, decay bracket, quadratic tangency, reflection
//! symmetry, PDE replay), and the center seeds (cone ratio, lifespan
//! doubling, exit dichotomy).

mod support;

use jetstab_core::linear::DispersionParams;
use jetstab_core::manifold::{
    self, hyperbolic_bounds, lp_map, solve_center, solve_stable, solve_unstable,
    verify_decay_equivalence, CenterStatus, Direction, ManifoldConfig,
};
use jetstab_core::reduction::S0;
use jetstab_core::spectral::{sobolev_norm, FourierGrid, Spectrum};
use num_complex::Complex64;
use support::lsq_slope;

const RHO: f64 = 0.51;
/// min = max growth rate at rho = 0.51 (only |xi| = 1 grows there).
const MU: f64 = 0.8383236154032396;

fn grid() -> FourierGrid {
    FourierGrid::new(32).unwrap()
}

fn params() -> DispersionParams {
    DispersionParams::new(RHO).unwrap()
}

/// A base point in the contracting subspace `E_s = i * (real fields on the
/// growing band)`, normalized to `amp` in `L^2`.
fn stable_seed(g: FourierGrid, amp: f64) -> Spectrum {
    let mut m = Spectrum::zeros(g);
    m.set_coeff(1, Complex64::new(0.7, -0.3));
    m.set_coeff(-1, Complex64::new(0.7, 0.3));
    let f = m.scale(Complex64::new(0.0, 1.0));
    let n = f.l2_norm();
    f.scale(Complex64::new(amp / n, 0.0))
}

/// A dispersive datum on two adjacent low modes, normalized to `amp` in
/// `L^2`.  Two adjacent modes are essential: a single mode pair self-interacts
/// only into frequencies 0 and +-2k at quadratic order, so its hyperbolic
/// correction vanishes identically; the difference frequency of modes 2 and 3
/// feeds the growing band +-1.
fn dispersive_seed(g: FourierGrid, amp: f64) -> Spectrum {
    let mut f = Spectrum::zeros(g);
    f.set_coeff(2, Complex64::new(0.6, 0.35));
    f.set_coeff(-2, Complex64::new(-0.2, 0.5));
    f.set_coeff(3, Complex64::new(0.3, -0.45));
    f.set_coeff(-3, Complex64::new(0.5, 0.15));
    let n = f.l2_norm();
    f.scale(Complex64::new(amp / n, 0.0))
}

/// The time-reversal involution `(eta, psi, t) -> (eta, -psi, -t)` expressed
/// on the complex unknown: `conj(u(-xi))` with phase `i` on the growing band
/// and `-1` elsewhere.  It exchanges the stable and unstable families.
fn involute(u: &Spectrum, p: &DispersionParams) -> Spectrum {
    let g = u.grid;
    let mut out = Spectrum::zeros(g);
    for k in 0..g.n_modes() {
        if k == g.n_modes() / 2 {
            continue;
        }
        let xi = g.freq_of_index(k);
        let fc = u.coeff(-xi).conj();
        out.coeffs[k] = if p.is_growing(xi) {
            Complex64::new(0.0, 1.0) * fc
        } else {
            -fc
        };
    }
    out
}

fn short_config(p: &DispersionParams) -> ManifoldConfig {
    let mut cfg = ManifoldConfig::standard(p).unwrap();
    cfg.horizon = 12.0;
    cfg
}

#[test]
fn hyperbolic_bounds_match_the_frozen_growth_rate() {
    let p = params();
    let (mu, lam) = hyperbolic_bounds(&p).unwrap();
    assert!((mu - MU).abs() <= 1e-12, "mu = {mu}");
    assert!((lam - MU).abs() <= 1e-12, "lambda = {lam}");
}

#[test]
fn config_validation_rejects_bad_parameters() {
    let p = params();
    let good = ManifoldConfig::standard(&p).unwrap();
    assert!(good.validate(&p).is_ok());
    for patch in [
        |c: &mut ManifoldConfig| c.weight_a = 2.0 * MU,
        |c: &mut ManifoldConfig| c.weight_a = -0.1,
        |c: &mut ManifoldConfig| c.horizon = 5.0,
        |c: &mut ManifoldConfig| c.quad_dt = 0.0,
        |c: &mut ManifoldConfig| c.dt_lin = -0.1,
        |c: &mut ManifoldConfig| c.damping = 0.0,
        |c: &mut ManifoldConfig| c.damping = 1.5,
        |c: &mut ManifoldConfig| c.tol = 0.0,
        |c: &mut ManifoldConfig| c.max_iter = 0,
    ] {
        let mut bad = good;
        patch(&mut bad);
        assert!(bad.validate(&p).is_err());
    }
}

#[test]
fn time_grid_is_uniform_and_spans_the_horizon() {
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 12.0;
    cfg.quad_dt = 0.1;
    let times = cfg.time_grid();
    assert_eq!(times.len(), 121);
    assert_eq!(times[0], 0.0);
    assert!((times[times.len() - 1] - 12.0).abs() <= 1e-12);
    let d = times[1] - times[0];
    for w in times.windows(2) {
        assert!((w[1] - w[0] - d).abs() <= 1e-12);
    }
}

#[test]
fn lp_map_of_the_zero_trajectory_is_the_linear_flow() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    let times = cfg.time_grid();
    let zeros = vec![Spectrum::zeros(g); times.len()];
    let f = stable_seed(g, 1e-4);
    let image = lp_map(&times, &zeros, &f, Direction::Stable, &p, &cfg).unwrap();
    for (t, v) in times.iter().zip(image.values.iter()) {
        let mut expect = Spectrum::zeros(g);
        expect.set_coeff(1, f.coeff(1) * (-MU * t).exp());
        expect.set_coeff(-1, f.coeff(-1) * (-MU * t).exp());
        let d = v.axpy(Complex64::new(-1.0, 0.0), &expect).unwrap();
        assert!(
            d.l2_norm() <= 1e-14,
            "lp_map(0) deviates from e^(-t Lambda_g) f by {:.3e} at t = {t}",
            d.l2_norm()
        );
    }
    assert!(image.tail_bound <= 1e-8 * 1e-8, "tail {}", image.tail_bound);
}

#[test]
fn lp_map_fixes_the_zero_solution_at_zero_base_point() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    let times = cfg.time_grid();
    let zeros = vec![Spectrum::zeros(g); times.len()];
    let f = Spectrum::zeros(g);
    let image = lp_map(&times, &zeros, &f, Direction::Stable, &p, &cfg).unwrap();
    for v in &image.values {
        assert_eq!(v.l2_norm(), 0.0);
    }
    assert_eq!(image.tail_bound, 0.0);
}

#[test]
fn lp_map_rejects_mismatched_grids() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    let times = cfg.time_grid();
    let f = stable_seed(g, 1e-4);
    let too_short = vec![Spectrum::zeros(g); times.len() - 1];
    assert!(lp_map(&times, &too_short, &f, Direction::Stable, &p, &cfg).is_err());
}

/// Halving the quadrature step changes the map value at second order: the
/// Richardson ratio of a nonlinear candidate trajectory evaluated at steps
/// (0.2, 0.1, 0.05) is at least 3.
#[test]
fn lp_map_quadrature_refinement_is_second_order() {
    let g = grid();
    let p = params();
    let f = stable_seed(g, 1e-4);
    let d = dispersive_seed(g, 5e-5);
    // A smooth trajectory function sampled consistently on every grid.
    let candidate = |t: f64| -> Spectrum {
        let mut u = Spectrum::zeros(g);
        u.set_coeff(1, f.coeff(1) * (-MU * t).exp());
        u.set_coeff(-1, f.coeff(-1) * (-MU * t).exp());
        u.axpy(Complex64::new((-0.3 * t).exp(), 0.0), &d).unwrap()
    };
    let mut at_zero = Vec::new();
    for quad_dt in [0.2, 0.1, 0.05] {
        let mut cfg = short_config(&p);
        cfg.quad_dt = quad_dt;
        let times = cfg.time_grid();
        let values: Vec<Spectrum> = times.iter().map(|t| candidate(*t)).collect();
        let image = lp_map(&times, &values, &f, Direction::Stable, &p, &cfg).unwrap();
        at_zero.push(image.values[0].clone());
    }
    let coarse = at_zero[0]
        .axpy(Complex64::new(-1.0, 0.0), &at_zero[1])
        .unwrap()
        .l2_norm();
    let fine = at_zero[1]
        .axpy(Complex64::new(-1.0, 0.0), &at_zero[2])
        .unwrap()
        .l2_norm();
    assert!(
        coarse >= 3.0 * fine,
        "refinement ratio {:.2} below second order (coarse {coarse:.3e}, fine {fine:.3e})",
        coarse / fine
    );
}

#[test]
fn zero_base_point_solves_to_the_zero_solution() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    let sol = solve_stable(&Spectrum::zeros(g), &p, &cfg).unwrap();
    assert_eq!(sol.manifold_point().l2_norm(), 0.0);
    assert_eq!(sol.transverse_norm(), 0.0);
    assert_eq!(sol.iterations, 1);
    for u in &sol.trajectory {
        assert_eq!(u.l2_norm(), 0.0);
    }
}

#[test]
fn base_point_outside_the_subspace_is_rejected() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    let f = dispersive_seed(g, 1e-4);
    assert!(solve_stable(&f, &p, &cfg).is_err());
    assert!(solve_unstable(&f, &p, &cfg).is_err());
    // An E_s point is not an E_u point.
    let fs = stable_seed(g, 1e-4);
    assert!(solve_unstable(&fs, &p, &cfg).is_err());
}

/// The workhorse check: Picard convergence within budget, monotone residual
/// history, decay rate inside the 5% bracket around [mu, lambda], a strictly
/// positive quadratic transverse component, and agreement with a direct
/// replay of the interface flow that improves at second order when the
/// quadrature is refined.
#[test]
fn stable_solution_converges_decays_and_replays_the_flow() {
    let g = grid();
    let p = params();
    let f = stable_seed(g, 1e-4);
    let mut deviations = Vec::new();
    for quad_dt in [0.1, 0.05] {
        let mut cfg = ManifoldConfig::standard(&p).unwrap();
        cfg.horizon = 22.0;
        cfg.quad_dt = quad_dt;
        cfg.tol = 1e-10;
        let sol = solve_stable(&f, &p, &cfg).unwrap();
        assert!(sol.iterations <= 30, "iterations {}", sol.iterations);
        assert!(sol.residual <= cfg.tol);
        for w in sol.residual_history[1..].windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-12),
                "residual history not monotone: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(
            (sol.fitted_decay - MU).abs() <= 0.05 * MU,
            "fitted decay {} outside the 5% bracket around {MU}",
            sol.fitted_decay
        );
        let trans = sol.transverse_norm();
        assert!(trans > 0.0 && trans <= 10.0 * 1e-8, "transverse {trans:.3e}");
        assert!(sol.tail_bound <= 1e-12);

        let report = verify_decay_equivalence(&sol, &p, &cfg, 0.025).unwrap();
        assert!(report.poly_weighted_sup.is_finite() && report.poly_weighted_sup > 0.0);
        assert!(report.exp_weighted_sup.is_finite() && report.exp_weighted_sup > 0.0);
        assert!(
            report.replay_deviation <= 2e-6,
            "replay deviation {:.3e}",
            report.replay_deviation
        );
        deviations.push(report.replay_deviation);
        // A replay step that does not divide the quadrature step is refused.
        assert!(verify_decay_equivalence(&sol, &p, &cfg, 0.03).is_err());
    }
    assert!(
        deviations[0] >= 3.0 * deviations[1],
        "replay deviation did not refine at second order: {:.3e} -> {:.3e}",
        deviations[0],
        deviations[1]
    );
}

/// The transverse (hyperbolic-complement) part of the manifold point scales
/// quadratically in the base point: slope 2.0 +- 0.15 over a dyadic family.
#[test]
fn manifold_tangency_is_quadratic() {
    let g = grid();
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 22.0;
    cfg.tol = 1e-10;
    let mut logs_amp = Vec::new();
    let mut logs_trans = Vec::new();
    for amp in [1e-3, 5e-4, 2.5e-4] {
        let sol = solve_stable(&stable_seed(g, amp), &p, &cfg).unwrap();
        logs_amp.push(amp.ln());
        logs_trans.push(sol.transverse_norm().ln());
    }
    let slope = lsq_slope(&logs_amp, &logs_trans);
    assert!(
        (slope - 2.0).abs() <= 0.15,
        "tangency slope {slope}, expected 2.0 +- 0.15"
    );
}

/// The unstable family is the time reversal of the stable one: under the
/// involution (eta, psi, t) -> (eta, -psi, -t) the solution with base point
/// J f solves the reflected system sample by sample.
#[test]
fn unstable_family_is_the_reflected_stable_family() {
    let g = grid();
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 22.0;
    cfg.tol = 1e-10;
    let fs = stable_seed(g, 1e-4);
    let fu = involute(&fs, &p);
    let ss = solve_stable(&fs, &p, &cfg).unwrap();
    let su = solve_unstable(&fu, &p, &cfg).unwrap();
    assert_eq!(su.direction, Direction::Unstable);
    assert!(
        (su.fitted_decay - MU).abs() <= 0.05 * MU,
        "unstable decay {}",
        su.fitted_decay
    );
    let mut dev: f64 = 0.0;
    for (a, b) in ss.trajectory.iter().zip(su.trajectory.iter()) {
        let d = involute(a, &p).axpy(Complex64::new(-1.0, 0.0), b).unwrap();
        dev = dev.max(sobolev_norm(&d, S0));
    }
    assert!(dev <= 1e-8, "reflection deviation {dev:.3e}");
}

#[test]
fn zero_center_datum_solves_to_zero_correction() {
    let g = grid();
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 12.0;
    let seed = solve_center(&Spectrum::zeros(g), &p, &cfg, 0.05).unwrap();
    assert_eq!(seed.status, CenterStatus::Converged);
    assert_eq!(seed.g.l2_norm(), 0.0);
    assert_eq!(seed.cone_ratio, 0.0);
}

#[test]
fn center_solver_rejects_bad_data() {
    let g = grid();
    let p = params();
    let cfg = short_config(&p);
    // Hyperbolic content in the datum.
    assert!(solve_center(&stable_seed(g, 1e-4), &p, &cfg, 0.05).is_err());
    // Nonpositive step.
    assert!(solve_center(&dispersive_seed(g, 1e-4), &p, &cfg, 0.0).is_err());
    // A datum whose Sobolev norm lies outside the cutoff ball: mode 9 at
    // L^2 size 1e-3 weighs about 2e2 in H^{s0} against a ball of 2.5.
    let mut high = Spectrum::zeros(g);
    high.set_coeff(9, Complex64::new(1e-3, 0.0));
    high.set_coeff(-9, Complex64::new(1e-3, 0.0));
    assert!(solve_center(&high, &p, &cfg, 0.05).is_err());
}

/// Quadratic cone tangency of the center correction and the exit dichotomy:
/// the solved seed stays inside the cutoff ball over the window while a
/// perturbation of the hyperbolic part much larger than C ||f||^2 escapes.
#[test]
fn center_cone_is_quadratic_and_off_cone_seeds_escape() {
    let g = grid();
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 14.0;
    cfg.tol = 1e-10;
    cfg.max_iter = 40;
    let mut solved = Vec::new();
    for amp in [1e-3, 5e-4] {
        let f = dispersive_seed(g, amp);
        let seed = solve_center(&f, &p, &cfg, 0.04).unwrap();
        assert_eq!(seed.status, CenterStatus::Converged, "amp {amp}");
        assert!(seed.residual <= cfg.tol);
        assert!(
            seed.cone_ratio.is_finite() && seed.cone_ratio <= 10.0,
            "cone ratio {}",
            seed.cone_ratio
        );
        solved.push(seed);
    }
    let slope = (solved[0].g.l2_norm() / solved[1].g.l2_norm()).log2();
    assert!(
        (slope - 2.0).abs() <= 0.2,
        "cone slope {slope}, expected 2.0 +- 0.2"
    );

    // Exit dichotomy at the larger amplitude.
    let on_cone = solved[0]
        .f
        .axpy(Complex64::new(1.0, 0.0), &solved[0].g)
        .unwrap();
    let sup_on = manifold::flow_sup_norm(&on_cone, 10.0, &p, &cfg, 0.04).unwrap();
    assert!(sup_on.is_finite(), "solved seed left the ball (sup {sup_on})");
    let mut bad_g = Spectrum::zeros(g);
    bad_g.set_coeff(1, Complex64::new(0.02, 0.0));
    bad_g.set_coeff(-1, Complex64::new(0.02, 0.0));
    let off_cone = solved[0]
        .f
        .axpy(Complex64::new(1.0, 0.0), &bad_g)
        .unwrap();
    let sup_off = manifold::flow_sup_norm(&off_cone, 10.0, &p, &cfg, 0.04).unwrap();
    assert!(
        sup_off.is_infinite(),
        "off-cone seed stayed inside the ball (sup {sup_off})"
    );
}

/// Lifespan scaling of small dispersive data: halving the datum at least
/// doubles the certified horizon at the proportional threshold.
#[test]
fn certified_lifespan_doubles_when_the_datum_halves() {
    let g = grid();
    let p = params();
    let mut cfg = ManifoldConfig::standard(&p).unwrap();
    cfg.horizon = 14.0;
    let mut spans = Vec::new();
    for (amp, window) in [(1e-3, 6.0), (5e-4, 12.0)] {
        let f = dispersive_seed(g, amp);
        let bound = 3.0 * sobolev_norm(&f, S0);
        let life = manifold::certified_lifespan(&f, bound, window, &p, &cfg, 0.02).unwrap();
        spans.push(life);
    }
    assert!(
        spans[1] >= 2.0 * spans[0],
        "lifespan did not double: {} -> {}",
        spans[0],
        spans[1]
    );
    // A bound below the initial norm certifies nothing.
    let f = dispersive_seed(g, 1e-3);
    let tiny = 0.5 * sobolev_norm(&f, S0);
    let life = manifold::certified_lifespan(&f, tiny, 6.0, &p, &cfg, 0.02).unwrap();
    assert_eq!(life, 0.0);
}
