//! Acceptance suite: one test per pinned criterion, each printing a
//! `criterion N: PASS/FAIL` line (run with `-- --nocapture` to see them).
//!
//! Two checks are left deliberately red rather than retuned, because their
//! pinned target values contradict the operator algebra the rest of the
//! suite verifies:
//!
//! * criterion 5 pins the series-propagator defect at
//!   `(g/hw)^2 sin^2(wt/2)`, but for `U = exp(M2)(1 + M1)` the defect is
//!   `-M1^2`, whose vacuum expectation is `4 (g/hw)^2 sin^2(wt/2)` (the
//!   driven-module unit tests pin the factor-4 form at 1e-12);
//! * criterion 3 demands the rotating-wave leakage exceed 10x the full
//!   model's at 256 modes per branch, but the full model's pre-cone
//!   amplitude is bounded below by a finite-box switch-on residue
//!   (proportional to 1/box_length, converged in the mode count), and no
//!   admissible parameter choice pushes the ratio past about 6.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use magnus_qed::driven::{
    exact_propagator, guarded_block_distance, m2_scalar, magnus_exponential_closed,
    magnus_series_closed, vacuum_defect_expectation, DivergenceDiagnostic, DrivenModeConfig,
    DrivenPropagator,
};
use magnus_qed::fermi::{
    amplitude_analytic, amplitude_numeric, causality_leakage, FermiConfig,
};
use magnus_qed::operator::{commutator, Operator};
use magnus_qed::propagators::{
    dyson2_propagator, magnus2_pieces, PropagatorKind, TimeGrid,
};
use magnus_qed::space::{build_space, Branch, ModeFrequency, Space};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} - {detail}");
    assert!(pass, "criterion {criterion}: {verdict} - {detail}");
}

/// Criterion 1: the closed-form amplitude is exactly zero on a 200-point
/// grid below the light cone, and nonzero and continuous above it.
#[test]
fn criterion_1_analytic_causality() {
    let start = Instant::now();
    let cfg = FermiConfig::new(8.0, 10.0, 1.0).unwrap();
    let rc = cfg.light_cone_time();

    let mut worst_below: f64 = 0.0;
    for k in 0..200 {
        let t = rc * (k as f64 + 0.5) / 201.0;
        let amp = amplitude_analytic(&cfg, t).unwrap();
        worst_below = worst_below.max(amp.norm());
    }

    let samples = |count: usize| -> Vec<Complex64> {
        (0..count)
            .map(|k| {
                let t = rc + 2.0 * rc * (k as f64 + 0.5) / count as f64;
                amplitude_analytic(&cfg, t).unwrap()
            })
            .collect()
    };
    let coarse = samples(400);
    let min_above = coarse.iter().map(|a| a.norm()).fold(f64::MAX, f64::min);
    let max_jump = |vals: &[Complex64]| {
        vals.windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    };
    let coarse_jump = max_jump(&coarse);
    let fine_jump = max_jump(&samples(800));

    let pass = worst_below <= 1e-15
        && min_above > 1e-8
        && fine_jump <= 0.7 * coarse_jump;
    report(
        "1",
        pass,
        &format!(
            "pre-cone max |A| = {worst_below:.1e}, post-cone min |A| = {min_above:.2e}, \
             refinement shrinks jumps {coarse_jump:.2e} -> {fine_jump:.2e} \
             [{:.2?}]",
            start.elapsed()
        ),
    );
}

/// Criterion 2: the kernel-path amplitude at t = 2R/c with an 8R box
/// approaches the closed form monotonically in the mode count and lands
/// within 5% at 512 modes per branch.
#[test]
fn criterion_2_numeric_analytic_convergence() {
    let start = Instant::now();
    let base = FermiConfig::new(16.0, 20.0, 1.0).unwrap();
    let t = 2.0 * base.light_cone_time();
    let analytic = amplitude_analytic(&base, t).unwrap();
    let grid = TimeGrid::avoiding(t, 3201, base.light_cone_time()).unwrap();
    let mut errors = Vec::new();
    for n_modes in [64usize, 128, 256, 512] {
        let mut cfg = base;
        cfg.modes_per_branch = n_modes;
        let series =
            amplitude_numeric(&cfg, &grid, PropagatorKind::Magnus2Series, false).unwrap();
        let last = *series.amplitudes().last().unwrap();
        errors.push((last - analytic).norm() / analytic.norm());
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && errors[3] <= 0.05;
    report(
        "2",
        pass,
        &format!(
            "relative errors over N = 64..512: {} (monotone: {monotone}) [{:.2?}]",
            errors
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            start.elapsed()
        ),
    );
}

/// Criterion 3: leakage scaling. The full-model leakage strictly decreases
/// over N in {64, 128, 256} and the rotating-wave leakage stays within a
/// factor 2 (both hold); the pinned 10x separation at N = 256 does not:
/// the full model's leakage is floored by the finite-box switch-on residue
/// (about 1.8/box_length, converged in N), so the measured ratio tops out
/// near 6 over the admissible parameter space. Kept red rather than
/// loosened.
#[test]
fn criterion_3_causality_leakage_scaling() {
    let start = Instant::now();
    let mut base = FermiConfig::new(1.5, 2.0, 1.0).unwrap();
    base.box_length = 32.0;
    let grid = TimeGrid::avoiding(0.96, 1601, base.light_cone_time()).unwrap();
    let mut full = Vec::new();
    let mut rwa = Vec::new();
    for n_modes in [64usize, 128, 256] {
        let mut cfg = base;
        cfg.modes_per_branch = n_modes;
        let f = amplitude_numeric(&cfg, &grid, PropagatorKind::Magnus2Series, false).unwrap();
        let r = amplitude_numeric(&cfg, &grid, PropagatorKind::Magnus2Series, true).unwrap();
        full.push(causality_leakage(&f, &cfg).unwrap());
        rwa.push(causality_leakage(&r, &cfg).unwrap());
    }
    let monotone = full.windows(2).all(|w| w[1] < w[0]);
    let spread = rwa.iter().fold(0.0f64, |a, &b| a.max(b))
        / rwa.iter().fold(f64::MAX, |a, &b| a.min(b));
    let ratio = rwa[2] / full[2];
    let pass = monotone && spread < 2.0 && ratio > 10.0;
    report(
        "3",
        pass,
        &format!(
            "full decreases {} (monotone: {monotone}); rwa spread {spread:.2} < 2; \
             rwa/full at N=256 = {ratio:.2} vs pinned 10 (unattainable: full leakage \
             is floored at ~1.8/box_length by the switch-on residue) [{:.2?}]",
            full.iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join(" > "),
            start.elapsed()
        ),
    );
}

/// Criterion 4: removing the scalar M2 phase from the exponential Magnus
/// propagator reproduces the exact displacement propagator on the guarded
/// block, over 50 random parameter draws.
#[test]
fn criterion_4_global_phase_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let gamma = 0.5 * rng.random::<f64>().max(1e-3);
        let wt = 4.0 * PI * rng.random::<f64>().max(1e-3);
        let cfg = DrivenModeConfig::new(gamma, 1.0, 12).unwrap();
        let mag = magnus_exponential_closed(&cfg, wt).unwrap();
        let unphased = &mag * (-m2_scalar(&cfg, wt)).exp();
        let exact = exact_propagator(&cfg, wt).unwrap();
        worst = worst.max(guarded_block_distance(&cfg, &unphased, &exact));
    }
    let pass = worst <= 1e-10;
    report(
        "4",
        pass,
        &format!(
            "worst guarded-block distance over 50 draws = {worst:.2e} <= 1e-10 [{:.2?}]",
            start.elapsed()
        ),
    );
}

/// Criterion 5: pinned defect formula. The vacuum expectation of
/// `U^dag U - 1` for the series propagator `exp(M2)(1 + M1)` is
/// `-<0|M1^2|0> = 4 (g/hw)^2 sin^2(wt/2)`; the pinned value omits the
/// factor 4 and cannot be met by any propagator consistent with criteria
/// 4 and 8, so this check is red at wt = pi/2 and pi (it passes at 2 pi
/// where both sides vanish). The factor-4 form is asserted at 1e-12 in the
/// driven-module unit tests.
#[test]
fn criterion_5_unitarity_defect_formula() {
    let start = Instant::now();
    let cfg = DrivenModeConfig::new(0.3, 1.0, 12).unwrap();
    let gamma2 = cfg.gamma().powi(2);
    let mut lines = Vec::new();
    let mut pass = true;
    for wt in [PI / 2.0, PI, 2.0 * PI] {
        let u = magnus_series_closed(&cfg, wt).unwrap();
        let measured = vacuum_defect_expectation(&cfg, &u).unwrap();
        let pinned = gamma2 * (wt / 2.0).sin().powi(2);
        let ok = (measured - pinned).abs() <= 1e-10;
        pass &= ok;
        lines.push(format!(
            "wt={wt:.3}: measured {measured:.6e} vs pinned {pinned:.6e} ({})",
            if ok { "ok" } else { "= 4x pinned" }
        ));
    }
    report(
        "5",
        pass,
        &format!("{} [{:.2?}]", lines.join("; "), start.elapsed()),
    );
}

/// Criterion 6: the second-order perturbation propagator's vacuum defect
/// grows as t^2 over wt in [10, 100].
#[test]
fn criterion_6_tdpt_divergence_slope() {
    let start = Instant::now();
    let cfg = DrivenModeConfig::new(0.3, 1.0, 12).unwrap();
    let samples: Vec<f64> = (0..400)
        .map(|k| 10.0 + 90.0 * k as f64 / 399.0)
        .collect();
    let slope = match magnus_qed::driven::divergence_exponent(
        &cfg,
        DrivenPropagator::Tdpt2,
        &samples,
    )
    .unwrap()
    {
        DivergenceDiagnostic::Slope(s) => s,
        DivergenceDiagnostic::Degenerate => f64::NAN,
    };
    let pass = (slope - 2.0).abs() <= 0.1;
    report(
        "6",
        pass,
        &format!("log-log slope = {slope:.4} (pinned 2.0 +- 0.1) [{:.2?}]", start.elapsed()),
    );
}

fn random_hermitian(space: &Space, rng: &mut ChaCha8Rng) -> Operator {
    let dim = space.dimension();
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..dim {
        for j in i..dim {
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            if i == j {
                h[[i, j]] = Complex64::new(z.re, 0.0);
            } else {
                h[[i, j]] = z;
                h[[j, i]] = z.conj();
            }
        }
    }
    Operator::from_entries(space.clone(), h).unwrap()
}

/// Criterion 7: the Dyson propagator equals 1 + M1 + M1^2/2 + M2 up to
/// quadrature error on random 8-dimensional potentials, and the residual
/// shrinks at second order under grid doubling.
#[test]
fn criterion_7_magnus_dyson_identity() {
    let start = Instant::now();
    let space = build_space(0, &[ModeFrequency::new(1.0, Branch::RightMoving)], 7).unwrap();
    assert_eq!(space.dimension(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_order = f64::MAX;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..20 {
        let h0 = random_hermitian(&space, &mut rng);
        let h1 = random_hermitian(&space, &mut rng);
        let h2 = random_hermitian(&space, &mut rng);
        let w1 = 1.0 + rng.random::<f64>();
        let w2 = 2.0 + rng.random::<f64>();
        let v = |t: f64| {
            let c1 = Complex64::new((w1 * t).cos(), 0.0);
            let c2 = Complex64::new((w2 * t).sin(), 0.0);
            &(&h0 + &(&h1 * c1)) + &(&h2 * c2)
        };
        let residual = |steps: usize| {
            let grid = TimeGrid::new(1.0, steps).unwrap();
            let pieces = magnus2_pieces(v, &grid, 1.0).unwrap();
            let dyson = dyson2_propagator(v, &grid, 1.0).unwrap();
            let id = Operator::identity(space.clone());
            let half_sq = &pieces.m1.dot(&pieces.m1) * Complex64::new(0.5, 0.0);
            let rhs = &(&(&id + &pieces.m1) + &half_sq) + &pieces.m2;
            (&dyson - &rhs).fro_norm()
        };
        let coarse = residual(200);
        let fine = residual(400);
        worst_order = worst_order.min((coarse / fine).log2());
        // Fit the c of (residual = c dt^2) from the coarse grid; the fine
        // residual must sit within 5x of the fitted prediction.
        let fitted_fine = coarse / 4.0;
        worst_residual = worst_residual.max(fine / (5.0 * fitted_fine));
    }
    let pass = worst_order >= 1.8 && worst_residual <= 1.0;
    report(
        "7",
        pass,
        &format!(
            "worst observed order {worst_order:.3} >= 1.8 over 20 draws; residual within \
             5x of the fitted dt^2 law (max fraction {worst_residual:.3}) [{:.2?}]",
            start.elapsed()
        ),
    );
}

/// Criterion 8: the quadrature M2 with the conventional 1/2 reproduces
/// i (g/hw)^2 (wt - sin wt), and an intentionally unscaled reference path
/// lands on exactly twice that.
#[test]
fn criterion_8_half_convention_guard() {
    let start = Instant::now();
    let cfg = DrivenModeConfig::new(0.3, 1.0, 12).unwrap();
    let space = cfg.space();
    let t = 2.0 * PI;
    let steps = 2000;
    let grid = TimeGrid::new(t, steps).unwrap();
    let closed = &Operator::identity(space.clone()) * m2_scalar(&cfg, t);
    let pieces = magnus2_pieces(|t| cfg.interaction(&space, t), &grid, cfg.hbar).unwrap();
    let scaled_err =
        guarded_block_distance(&cfg, &pieces.m2, &closed) / (cfg.n_max as f64).sqrt();

    // Reference path: same trapezoid accumulation, written out directly,
    // with no 1/2.
    let dt = grid.dt();
    let half_dt = Complex64::new(dt / 2.0, 0.0);
    let mut running = Operator::zeros(space.clone());
    let mut acc = Operator::zeros(space.clone());
    let mut prev_v = cfg.interaction(&space, 0.0);
    let mut prev_inner = Operator::zeros(space.clone());
    for k in 1..=steps {
        let vk = cfg.interaction(&space, grid.node(k));
        running = &running + &(&(&prev_v + &vk) * half_dt);
        let inner = commutator(&vk, &running).unwrap();
        acc = &acc + &(&(&prev_inner + &inner) * half_dt);
        prev_v = vk;
        prev_inner = inner;
    }
    let unscaled = &acc * Complex64::new(-1.0 / (cfg.hbar * cfg.hbar), 0.0);
    let doubled = &closed * Complex64::new(2.0, 0.0);
    let unscaled_err =
        guarded_block_distance(&cfg, &unscaled, &doubled) / (cfg.n_max as f64).sqrt();

    let pass = scaled_err <= 1e-6 && unscaled_err <= 2e-6;
    report(
        "8",
        pass,
        &format!(
            "M2 vs closed scalar: {scaled_err:.2e} <= 1e-6; unscaled reference vs 2x \
             closed: {unscaled_err:.2e} [{:.2?}]",
            start.elapsed()
        ),
    );
}

/// Criterion 9: every CLI experiment emits byte-identical output across two
/// runs of the same config, in both formats.
#[test]
fn criterion_9_cli_determinism() {
    let start = Instant::now();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("fermi-analytic", vec!["--steps", "200"]),
        (
            "fermi-numeric",
            vec!["--modes", "32", "--steps", "401", "--t-max", "2"],
        ),
        (
            "rwa-compare",
            vec!["--modes-sweep", "16,32", "--steps", "401"],
        ),
        ("driven-mode", vec!["--steps", "100"]),
        (
            "convergence",
            vec![
                "--steps-sweep",
                "50,100",
                "--modes-sweep",
                "16",
                "--modes",
                "16",
                "--steps",
                "401",
            ],
        ),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (experiment, args) in &runs {
        for format in ["csv", "json"] {
            let run_once = || {
                let out = Command::new(env!("CARGO_BIN_EXE_mqed"))
                    .arg(experiment)
                    .args(args)
                    .args(["--format", format])
                    .output()
                    .expect("binary runs");
                assert!(
                    out.status.success(),
                    "{experiment} failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                );
                out.stdout
            };
            let first = run_once();
            let second = run_once();
            let identical = first == second;
            pass &= identical && !first.is_empty();
            detail.push(format!(
                "{experiment}/{format}: {}",
                if identical { "identical" } else { "DIFFERS" }
            ));
        }
    }
    report(
        "9",
        pass,
        &format!("{} [{:.2?}]", detail.join(", "), start.elapsed()),
    );
}
