//! Subcommand bodies.  Each runner consumes a resolved `RunConfig`, computes
//! through `jetstab-core`, and writes its artifacts plus a manifest.

use std::path::Path;

use anyhow::Result;
use num_complex::Complex64;
use serde_json::{json, Value};

use jetstab_core::dno::{dno_flat, DnoSolver};
use jetstab_core::dynamics::{
    cosine_seed, dispersive_seed, growth_for_mode, simulate, GrowthScanConfig, IntegratorConfig,
    JetState, Trajectory, TrajectoryStatus,
};
use jetstab_core::linear::{self, DispersionParams};
use jetstab_core::manifold::{
    self, solve_center, solve_stable, solve_unstable, CenterStatus, ManifoldConfig,
};
use jetstab_core::paradiff::{paraproduct, paraproduct_pair, remainder_pm_pair};
use jetstab_core::reduction::{simulate_corrected, S0};
use jetstab_core::spectral::{
    partial_sum, sobolev_norm, to_spectrum, FourierGrid, GridOps, RealField, Spectrum,
};

use crate::config::{core_err, ConfigError, RunConfig};
use crate::output::{fmt_f64, json_complex, OutDir};

fn cfg_err(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow::Error::new(ConfigError(format!("{msg}")))
}

fn params(cfg: &RunConfig) -> Result<DispersionParams> {
    DispersionParams::new(cfg.f64("rho")?).map_err(core_err)
}

fn grid(cfg: &RunConfig) -> Result<FourierGrid> {
    FourierGrid::new(cfg.usize("n_modes")?).map_err(core_err)
}

// ------------------------------------------------------------- dispersion --

pub const DISPERSION_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
];

/// Tabulate the linear rates: `k,lambda_g,lambda_d` for k = 0..=n_modes.
pub fn run_dispersion(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = params(cfg)?;
    let n = cfg.usize("n_modes")?;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n as i64 {
        rows.push(vec![
            k.to_string(),
            fmt_f64(linear::lambda_g(k, &p)),
            fmt_f64(linear::lambda_d(k, &p)),
        ]);
    }
    let mut dir = OutDir::new(out)?;
    dir.write_csv("dispersion.csv", "k,lambda_g,lambda_d", &rows)?;
    dir.write_manifest("dispersion", cfg.resolved(), &[])?;
    Ok(0)
}

// --------------------------------------------------------------- simulate --

pub const SIMULATE_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
    ("n_y", Some("24")),
    ("dt", Some("0.01")),
    ("t_end", Some("1.0")),
    ("stride", Some("1")),
    ("amplitude", Some("1e-3")),
    ("seed_mode", Some("1")),
    ("seed_kind", Some("cosine")),
    ("corrected", Some("false")),
];

/// Integrate the interface flow and persist the sampled trajectory as
/// JSON lines (one object per sample).
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let amplitude = cfg.f64("amplitude")?;
    let mode = cfg.i64("seed_mode")?;
    let state0 = match cfg.str("seed_kind")? {
        "cosine" => cosine_seed(g, mode, amplitude, &p).map_err(core_err)?,
        "dispersive" => dispersive_seed(g, mode, amplitude, &p).map_err(core_err)?,
        "unstable" => linear::unstable_seed(g, mode, amplitude, &p).map_err(core_err)?,
        other => {
            return Err(cfg_err(format_args!(
                "seed_kind `{other}` is not one of cosine, dispersive, unstable"
            )))
        }
    };
    let icfg = IntegratorConfig::new(
        cfg.f64("dt")?,
        cfg.f64("t_end")?,
        cfg.usize("stride")?,
        cfg.usize("n_y")?,
    )
    .map_err(core_err)?;
    let traj: Trajectory = if cfg.bool("corrected")? {
        simulate_corrected(&state0, &icfg).map_err(core_err)?
    } else {
        simulate(&state0, &icfg).map_err(core_err)?
    };
    let lines: Vec<Value> = traj
        .samples
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "eta": s.state.eta.values,
                "psi": s.state.psi.values,
                "delta_eta": s.delta_eta,
                "h_s_norm": s.h_s_norm,
                "flux": s.flux,
            })
        })
        .collect();
    let status = match traj.status {
        TrajectoryStatus::Completed => json!({"kind": "completed"}),
        TrajectoryStatus::PinchOff { t, ref detail } => {
            json!({"kind": "pinch_off", "t": t, "detail": detail})
        }
        TrajectoryStatus::Diverged { t } => json!({"kind": "diverged", "t": t}),
    };
    let mut dir = OutDir::new(out)?;
    dir.write_jsonl("trajectory.jsonl", &lines)?;
    dir.write_manifest("simulate", cfg.resolved(), &[("status", status)])?;
    Ok(0)
}

// ------------------------------------------------------------------- scan --

pub const SCAN_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
    ("n_y", Some("48")),
    ("amplitude", Some("1e-6")),
    ("dt", Some("5e-3")),
    ("t_end", Some("25.0")),
    ("max_mode", None),
    ("threads", Some("1")),
];

/// Growth-rate scan over seeded modes 1..=max_mode; results are collected in
/// mode order regardless of the worker count.
pub fn run_scan(cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<i32> {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let scan_cfg = GrowthScanConfig {
        amplitude: cfg.f64("amplitude")?,
        dt: cfg.f64("dt")?,
        t_end: cfg.f64("t_end")?,
        n_y: cfg.usize("n_y")?,
        ..GrowthScanConfig::default()
    };
    let default_max = (1.0 / p.rho()).ceil() as i64 + 2;
    let max_mode = match cfg.resolved().get("max_mode") {
        Some(_) => cfg.i64("max_mode")?,
        None => default_max,
    };
    if max_mode < 1 || max_mode > g.max_freq() {
        return Err(cfg_err(format_args!(
            "max_mode {max_mode} must lie in 1..={}",
            g.max_freq()
        )));
    }
    let threads = resolve_threads(cfg, threads)?;
    let modes: Vec<i64> = (1..=max_mode).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| cfg_err(format_args!("cannot build worker pool: {e}")))?;
    let records = pool.install(|| {
        use rayon::prelude::*;
        modes
            .par_iter()
            .map(|&xi| growth_for_mode(g, xi, &p, &scan_cfg))
            .collect::<jetstab_core::Result<Vec<_>>>()
    })
    .map_err(core_err)?;
    for r in &records {
        if !r.fit_ok {
            return Err(core_err(jetstab_core::Error::numeric(format_args!(
                "growth fit failed for mode {}",
                r.xi
            ))));
        }
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.xi.to_string(),
                fmt_f64(r.omega_measured),
                fmt_f64(r.omega_rayleigh),
            ]
        })
        .collect();
    let mut dir = OutDir::new(out)?;
    dir.write_csv("scan.csv", "k,omega_measured,omega_rayleigh", &rows)?;
    dir.write_manifest("scan", cfg.resolved(), &[("threads", json!(threads))])?;
    Ok(0)
}

/// `--threads` flag, else `JETSTAB_THREADS`, else the config key (default 1).
fn resolve_threads(cfg: &RunConfig, flag: Option<usize>) -> Result<usize> {
    let threads = if let Some(t) = flag {
        t
    } else if let Ok(env) = std::env::var("JETSTAB_THREADS") {
        env.parse::<usize>()
            .map_err(|_| cfg_err(format_args!("JETSTAB_THREADS `{env}` is not an integer")))?
    } else {
        cfg.usize("threads")?
    };
    if threads == 0 {
        return Err(cfg_err("thread count must be at least 1"));
    }
    Ok(threads)
}

// -------------------------------------------------------------- dno-check --

pub const DNO_CHECK_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
    ("n_y", Some("24")),
];

/// Flat-interface consistency of the elliptic Dirichlet-Neumann solve:
/// Richardson extrapolation over (n_y, 2 n_y) against the exact Bessel
/// multiplier, per mode.
pub fn run_dno_check(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let n_y = cfg.usize("n_y")?;
    let coarse = DnoSolver::new(g, n_y, p).map_err(core_err)?;
    let fine = DnoSolver::new(g, 2 * n_y, p).map_err(core_err)?;
    let eta = RealField::zeros(g);
    let mut rows = Vec::new();
    let mut max_rel: f64 = 0.0;
    let mut orders = Vec::new();
    for xi in 1..=g.max_freq() {
        let psi = RealField::from_fn(g, |x| (xi as f64 * x).cos());
        let exact = dno_flat(&psi, &p);
        let gc = coarse.solve(&eta, &psi).map_err(core_err)?.g;
        let gf = fine.solve(&eta, &psi).map_err(core_err)?.g;
        let extrap = gf.scale(4.0 / 3.0).axpy(-1.0 / 3.0, &gc).map_err(core_err)?;
        let scale = exact.l2_norm();
        let ec = gc.axpy(-1.0, &exact).map_err(core_err)?.l2_norm() / scale;
        let ef = gf.axpy(-1.0, &exact).map_err(core_err)?.l2_norm() / scale;
        let ee = extrap.axpy(-1.0, &exact).map_err(core_err)?.l2_norm() / scale;
        max_rel = max_rel.max(ee);
        if ef > 0.0 {
            orders.push((ec / ef).log2());
        }
        rows.push(vec![xi.to_string(), fmt_f64(ee)]);
    }
    let mean_order = orders.iter().sum::<f64>() / orders.len() as f64;
    let mut dir = OutDir::new(out)?;
    dir.write_csv("dno_check.csv", "k,relative_error", &rows)?;
    dir.write_json(
        "dno_check.json",
        &json!({"max_rel_error": max_rel, "mean_order": mean_order}),
    )?;
    dir.write_manifest("dno-check", cfg.resolved(), &[])?;
    if !max_rel.is_finite() {
        return Err(core_err(jetstab_core::Error::numeric(
            "flat Dirichlet-Neumann check produced non-finite errors",
        )));
    }
    Ok(0)
}

// --------------------------------------------------------- paradiff-check --

pub const PARADIFF_CHECK_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("64")),
];

/// Structural identities of the paradifferential layer on deterministic
/// data: the Bony three-way decomposition and the constant-symbol identity.
pub fn run_paradiff_check(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = grid(cfg)?;
    let ops = GridOps::new(g);
    let a_field = RealField::from_fn(g, |x| 1.0 + 0.3 * x.cos() + 0.2 * (2.0 * x).sin());
    let a = to_spectrum(&a_field);
    let mut u = Spectrum::zeros(g);
    for xi in -g.max_freq()..=g.max_freq() {
        let d = 1.0 + (xi * xi) as f64;
        u.set_coeff(xi, Complex64::new(1.0 / d, 0.5 * xi as f64 / d));
    }
    // a u = T_a u + T_u a + R(a, u), exactly on the lattice.
    let product = {
        let av = ops.synthesize_complex(&a);
        let uv = ops.synthesize_complex(&u);
        let vals: Vec<Complex64> = av.iter().zip(uv.iter()).map(|(x, y)| x * y).collect();
        ops.analyze_complex(&vals)
    };
    let sum = paraproduct_pair(&a, &u)
        .and_then(|t_au| {
            paraproduct_pair(&u, &a).and_then(|t_ua| t_au.axpy(Complex64::new(1.0, 0.0), &t_ua))
        })
        .and_then(|s| {
            remainder_pm_pair(&a, &u).and_then(|r| s.axpy(Complex64::new(1.0, 0.0), &r))
        })
        .map_err(core_err)?;
    let bony = product
        .axpy(Complex64::new(-1.0, 0.0), &sum)
        .map_err(core_err)?
        .l2_norm()
        / product.l2_norm();
    // T_c u = c (u - S_2 u) for a constant symbol.
    let c = 2.5;
    let got = paraproduct(&RealField::from_fn(g, |_| c), &u).map_err(core_err)?;
    let expect = u
        .axpy(Complex64::new(-1.0, 0.0), &partial_sum(&u, 2))
        .map_err(core_err)?
        .scale(Complex64::new(c, 0.0));
    let constant = got
        .axpy(Complex64::new(-1.0, 0.0), &expect)
        .map_err(core_err)?
        .l2_norm()
        / expect.l2_norm();
    let pass = bony <= 1e-12 && constant <= 1e-13;
    let mut dir = OutDir::new(out)?;
    dir.write_json(
        "paradiff_check.json",
        &json!({"bony_residual": bony, "constant_symbol_residual": constant, "pass": pass}),
    )?;
    dir.write_manifest("paradiff-check", cfg.resolved(), &[])?;
    if !pass {
        return Err(core_err(jetstab_core::Error::numeric(format_args!(
            "paradifferential identities violated: bony {bony:.3e}, constant {constant:.3e}"
        ))));
    }
    Ok(0)
}

// --------------------------------------------------------------- manifold --

pub const MANIFOLD_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
    ("n_y", Some("24")),
    ("n_cut", Some("8")),
    ("base_norm", Some("1e-4")),
    ("horizon", Some("12.0")),
    ("quad_dt", Some("0.1")),
    ("weight_a", Some("auto")), // auto = mu/2
    ("damping", Some("0.5")),
    ("tol", Some("1e-8")),
    ("max_iter", Some("60")),
    ("eps0", Some("1.0")),
    ("dt_lin", Some("0.05")),
    ("direction", Some("stable")),
    ("levels", Some("3")),
];

fn manifold_config(cfg: &RunConfig, p: &DispersionParams) -> Result<ManifoldConfig> {
    let mut mc = ManifoldConfig::standard(p).map_err(core_err)?;
    mc.horizon = cfg.f64("horizon")?;
    mc.quad_dt = cfg.f64("quad_dt")?;
    mc.damping = cfg.f64("damping")?;
    mc.tol = cfg.f64("tol")?;
    mc.max_iter = cfg.usize("max_iter")?;
    mc.eps0 = cfg.f64("eps0")?;
    mc.n_y = cfg.usize("n_y")?;
    mc.n_cut = cfg.i64("n_cut")?;
    mc.dt_lin = cfg.f64("dt_lin")?;
    if cfg.str("weight_a")? != "auto" {
        mc.weight_a = cfg.f64("weight_a")?;
    }
    mc.validate(p).map_err(core_err)?;
    Ok(mc)
}

/// A unit-size hyperbolic base point: `E_u` is the real fields on the
/// growing band, `E_s` is `i` times them.
fn hyperbolic_seed(g: FourierGrid, amp: f64, stable: bool) -> Spectrum {
    let mut m = Spectrum::zeros(g);
    m.set_coeff(1, Complex64::new(0.7, -0.3));
    m.set_coeff(-1, Complex64::new(0.7, 0.3));
    let f = if stable {
        m.scale(Complex64::new(0.0, 1.0))
    } else {
        m
    };
    let n = f.l2_norm();
    f.scale(Complex64::new(amp / n, 0.0))
}

/// Solve the stable (or unstable) family at `base_norm` and at the halved
/// levels below it; report the manifold point, the decay fit, and the
/// tangency slope of the transverse component.
pub fn run_manifold(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let mc = manifold_config(cfg, &p)?;
    let base_norm = cfg.f64("base_norm")?;
    let stable = match cfg.str("direction")? {
        "stable" => true,
        "unstable" => false,
        other => {
            return Err(cfg_err(format_args!(
                "direction `{other}` is not one of stable, unstable"
            )))
        }
    };
    let levels = cfg.usize("levels")?.max(1);
    let mut logs_amp = Vec::new();
    let mut logs_trans = Vec::new();
    let mut base = None;
    for level in 0..levels {
        let amp = base_norm / f64::powi(2.0, level as i32);
        let f = hyperbolic_seed(g, amp, stable);
        let sol = if stable {
            solve_stable(&f, &p, &mc).map_err(core_err)?
        } else {
            solve_unstable(&f, &p, &mc).map_err(core_err)?
        };
        logs_amp.push(amp.ln());
        logs_trans.push(sol.transverse_norm().ln());
        if level == 0 {
            base = Some(sol);
        }
    }
    let sol = base.expect("levels >= 1");
    let tangency = if levels >= 2 {
        let n = logs_amp.len() as f64;
        let mx = logs_amp.iter().sum::<f64>() / n;
        let my = logs_trans.iter().sum::<f64>() / n;
        let num: f64 = logs_amp
            .iter()
            .zip(&logs_trans)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        let den: f64 = logs_amp.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(num / den)
    } else {
        None
    };
    let point: Vec<Value> = sol
        .manifold_point()
        .coeffs
        .iter()
        .map(|z| json_complex(*z))
        .collect();
    let rows: Vec<Vec<String>> = sol
        .times
        .iter()
        .zip(sol.trajectory.iter())
        .map(|(t, u)| {
            vec![
                fmt_f64(*t),
                fmt_f64(u.l2_norm()),
                fmt_f64(sobolev_norm(u, S0)),
            ]
        })
        .collect();
    let mut dir = OutDir::new(out)?;
    dir.write_csv("trajectory.csv", "t,l2_norm,h_s0_norm", &rows)?;
    dir.write_json(
        "manifold.json",
        &json!({
            "manifold_point": point,
            "residual": sol.residual,
            "decay_rate": sol.fitted_decay,
            "tangency_slope": tangency,
            "iterations": sol.iterations,
            "tail_bound": sol.tail_bound,
            "transverse_norm": sol.transverse_norm(),
        }),
    )?;
    dir.write_manifest("manifold", cfg.resolved(), &[])?;
    Ok(0)
}

// ----------------------------------------------------------------- center --

pub const CENTER_KEYS: crate::config::KeySpec = &[
    ("rho", Some("0.51")),
    ("n_modes", Some("32")),
    ("n_y", Some("24")),
    ("n_cut", Some("8")),
    ("base_norm", Some("1e-3")),
    ("horizon", Some("12.0")),
    ("quad_dt", Some("0.1")),
    ("weight_a", Some("auto")),
    ("damping", Some("0.5")),
    ("tol", Some("1e-8")),
    ("max_iter", Some("40")),
    ("eps0", Some("1.0")),
    ("dt_lin", Some("0.05")),
    ("sim_dt", Some("0.05")),
    ("levels", Some("2")),
];

/// A dispersive datum on the adjacent modes 2 and 3 (their difference
/// frequency feeds the growing band; a single mode pair leaves the
/// hyperbolic correction identically zero).
fn center_seed(g: FourierGrid, amp: f64) -> Spectrum {
    let mut f = Spectrum::zeros(g);
    f.set_coeff(2, Complex64::new(0.6, 0.35));
    f.set_coeff(-2, Complex64::new(-0.2, 0.5));
    f.set_coeff(3, Complex64::new(0.3, -0.45));
    f.set_coeff(-3, Complex64::new(0.5, 0.15));
    let n = f.l2_norm();
    f.scale(Complex64::new(amp / n, 0.0))
}

/// Solve the center fixed point at `base_norm` and the halved levels below,
/// reporting the correction, its cone ratio and slope, and the convergence
/// status (exit 4 when the Picard iteration does not converge — a legitimate
/// outcome per the construction).
pub fn run_center(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let p = params(cfg)?;
    let g = grid(cfg)?;
    let mc = manifold_config_center(cfg, &p)?;
    let sim_dt = cfg.f64("sim_dt")?;
    let base_norm = cfg.f64("base_norm")?;
    let levels = cfg.usize("levels")?.max(1);
    let mut seeds = Vec::new();
    for level in 0..levels {
        let amp = base_norm / f64::powi(2.0, level as i32);
        let seed = solve_center(&center_seed(g, amp), &p, &mc, sim_dt).map_err(core_err)?;
        seeds.push(seed);
    }
    let cone_slope = if levels >= 2 && seeds.iter().all(|s| s.g.l2_norm() > 0.0) {
        Some(
            (seeds[0].g.l2_norm() / seeds[1].g.l2_norm()).log2(),
        )
    } else {
        None
    };
    let base = &seeds[0];
    let status = match base.status {
        CenterStatus::Converged => "converged".to_string(),
        CenterStatus::MaxIterations => "max_iterations".to_string(),
        CenterStatus::Escaped { t } => format!("escaped at t = {t}"),
    };
    let gvals: Vec<Value> = base.g.coeffs.iter().map(|z| json_complex(*z)).collect();
    let mut dir = OutDir::new(out)?;
    dir.write_json(
        "center.json",
        &json!({
            "g": gvals,
            "cone_ratio": base.cone_ratio,
            "cone_slope": cone_slope,
            "residual": base.residual,
            "iterations": base.iterations,
            "status": status,
        }),
    )?;
    dir.write_manifest("center", cfg.resolved(), &[])?;
    for seed in &seeds {
        if seed.status != CenterStatus::Converged {
            return Err(core_err(jetstab_core::Error::non_convergence(format_args!(
                "center fixed point did not converge (status: {status}, residual {:.3e})",
                seed.residual
            ))));
        }
    }
    Ok(0)
}

