//! One PASS/FAIL line per acceptance item, run with `--nocapture` to see them.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bathywave::config::{BathymetryKind, InitialKind, RunConfig};
use bathywave::energy::initial_energy;
use bathywave::experiment::{sweep_epsilon, SweepSummary};
use bathywave::fields::{check_interpolation, Grid};
use bathywave::params::{coefficients_from_bbm, fast_closed_form, slow_reference, BbmParams, Regime};
use bathywave::verify::*;
use bathywave::Error;

mod common;
use common::{bh_ch_errors, cascade_fd_order, p1_error, p2_error, rk4_order, N};

const SUM_TOL: f64 = 1e-12;
const SUM_BUDGET: Duration = Duration::from_secs(5);
const WAVE_BUDGET: Duration = Duration::from_secs(30);
const SWEEP_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];
const MAX_FLATNESS: f64 = 2.0;
const INITIAL_RATIO_BOUND: f64 = 3.0;
const INITIAL_RATIO_SPREAD: f64 = 2.0;
const ORACLE_TOL: f64 = 1e-8;
const RK4_ORDER: f64 = 4.0;
const ORDER_TOL: f64 = 0.2;

fn report(item: u32, name: &str, passed: bool, detail: String) {
    println!("{} {item} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{name}: {detail}");
}

#[test]
fn coefficient_sum_over_random_parameters() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let p = BbmParams::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(0.0..1.0),
        )
        .unwrap();
        let c = coefficients_from_bbm(&p).unwrap();
        worst = worst.max((c.dispersive_sum() - 2.0 / 3.0).abs());
    }
    let took = start.elapsed();
    report(
        1,
        "coefficient sum",
        worst <= SUM_TOL && took < SUM_BUDGET,
        format!("max deviation {worst:.1e} (tol {SUM_TOL:.0e}), {took:.2?}"),
    );
}

#[test]
fn flat_bottom_frequencies() {
    let c = coefficients_from_bbm(&fast_closed_form(0.0)).unwrap();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.05] {
        for xi in [1, 2, 4] {
            let w = flat_bottom_wave_test(&c, eps, xi, 3.0, 128).unwrap();
            worst = worst.max(w.rel_freq_error);
        }
    }
    let took = start.elapsed();
    report(
        2,
        "dispersion relation",
        worst <= WAVE_MAX_REL_ERROR && took < WAVE_BUDGET,
        format!("max relative frequency error {worst:.1e} (tol {WAVE_MAX_REL_ERROR:.0e}), {took:.2?}"),
    );
}

#[test]
fn cancellation_identity_and_negative_control() {
    let c = coefficients_from_bbm(&fast_closed_form(0.0)).unwrap();
    let can = check_cancellation(&cancellation_depth, 2.0 * PI, &c, 128, 20, 0, false).unwrap();
    let mut broken = c;
    broken.b2 += 1.0;
    let neg = check_cancellation(&cancellation_depth, 2.0 * PI, &broken, 128, 20, 0, true).unwrap();
    let ok = can.residual_2n <= CANCELLATION_MAX_RESIDUAL
        && can.decay >= CANCELLATION_MIN_DECAY
        && neg.residual_2n >= NEGATIVE_CONTROL_MIN_RESIDUAL;
    report(
        3,
        "cancellation identity",
        ok,
        format!(
            "residual N=256 {:.1e} (tol {CANCELLATION_MAX_RESIDUAL:.0e}), decay {:.1e} (min {CANCELLATION_MIN_DECAY:.0e}), negative control {:.2} (min {NEGATIVE_CONTROL_MIN_RESIDUAL:.0e})",
            can.residual_2n, can.decay, neg.residual_2n
        ),
    );
}

#[test]
fn norm_equivalences_are_uniform_in_epsilon() {
    let fast = coefficients_from_bbm(&fast_closed_form(0.0)).unwrap();
    let slow = coefficients_from_bbm(&slow_reference()).unwrap();
    let slow_b = slow_equivalence_bathymetry(256).unwrap();
    let fast_b = fast_equivalence_bathymetry(512).unwrap();
    let mut spreads = Vec::new();
    let mut ks = Vec::new();
    for (b, c, kinds) in [
        (&slow_b, &slow, &EquivalenceKind::ALL[..2]),
        (&fast_b, &fast, &EquivalenceKind::ALL[2..]),
    ] {
        let reports: Vec<_> = EQUIVALENCE_EPSILONS
            .iter()
            .map(|&eps| check_equivalences(b, c, eps, 2.0, 200, 0, kinds).unwrap())
            .collect();
        for &k in kinds {
            ks.push((k, reports.iter().map(|r| r.get(k).unwrap().k).fold(0.0, f64::max)));
        }
        spreads.extend(equivalence_spread(&reports));
    }
    let rejected = |r: Result<EquivalenceReport, Error>| matches!(r, Err(Error::HypothesisViolation(_)));
    // missing d1, and an index below n/2 + 1
    let neg = [
        rejected(check_equivalences(&slow_b, &fast, 0.1, 2.0, 4, 0, &[EquivalenceKind::Lemma24Mass])),
        rejected(check_equivalences(&slow_b, &slow, 0.1, 1.0, 4, 0, &[EquivalenceKind::Lemma24Momentum])),
    ];
    let worst = spreads.iter().map(|s| s.1).fold(0.0, f64::max);
    let ok = worst <= EQUIVALENCE_MAX_SPREAD && ks.iter().all(|k| k.1.is_finite()) && neg.iter().all(|&r| r);
    let ks: Vec<String> = ks.iter().map(|(k, v)| format!("{k:?} K={v:.2}")).collect();
    report(
        4,
        "norm equivalences",
        ok,
        format!(
            "{}; worst spread over eps {worst:.3} (max {EQUIVALENCE_MAX_SPREAD}); violations rejected {neg:?}",
            ks.join(", ")
        ),
    );
}

#[test]
fn interpolation_slack_is_nonnegative() {
    let g = Grid::line(128, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let s = rng.gen_range(0.0..3.0);
        let f = random_band_limited(&g, &mut rng, s);
        let f = &f * (1.0 / f.l2_norm());
        let eps = rng.gen_range(1e-3..1.0);
        for k in 2..=3 {
            for j in 1..k {
                worst = worst.min(check_interpolation(&f, j, k, eps).unwrap());
            }
        }
    }
    report(
        5,
        "interpolation inequality",
        worst >= INTERPOLATION_MIN_SLACK,
        format!("smallest slack {worst:.2e} over 1000 fields (min {INTERPOLATION_MIN_SLACK:.0e})"),
    );
}

fn sweep_line(s: &SweepSummary) -> String {
    let gs: Vec<String> = s
        .points
        .iter()
        .map(|p| format!("G({})={}", p.epsilon, p.growth.map_or("-".into(), |g| format!("{g:.3}"))))
        .collect();
    format!("{}, flatness {:?} (max {MAX_FLATNESS})", gs.join(" "), s.flatness)
}

#[test]
fn fast_regime_growth_is_uniform() {
    let mut cfg = RunConfig::new(Regime::Fast1d, 0.1, fast_closed_form(0.0));
    cfg.bathymetry.kind = BathymetryKind::Fast;
    cfg.grid.n = vec![256];
    let start = Instant::now();
    let s = sweep_epsilon(&cfg, &SWEEP_EPSILONS, None).unwrap();
    let ok = s.all_completed && s.flatness.is_some_and(|f| f <= MAX_FLATNESS);
    report(6, "fast regime sweep", ok, format!("{}, {:.1?}", sweep_line(&s), start.elapsed()));
}

#[test]
fn slow_regime_growth_is_uniform() {
    let mut cfg = RunConfig::new(Regime::Slow1d, 0.1, slow_reference());
    cfg.bathymetry.kind = BathymetryKind::Slow;
    cfg.grid.n = vec![256];
    cfg.s = 2.0;
    let s = sweep_epsilon(&cfg, &SWEEP_EPSILONS, None).unwrap();
    let ok = s.all_completed && s.flatness.is_some_and(|f| f <= MAX_FLATNESS);
    report(7, "slow regime sweep", ok, sweep_line(&s));
}

#[test]
fn initial_energy_is_controlled_by_data() {
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [InitialKind::Gaussian, InitialKind::SingleMode, InitialKind::Random] {
        let ratios: Vec<f64> = SWEEP_EPSILONS
            .iter()
            .map(|&eps| {
                let mut cfg = RunConfig::new(Regime::Fast1d, eps, fast_closed_form(0.0));
                cfg.bathymetry.kind = BathymetryKind::Fast;
                cfg.initial.kind = kind;
                let p = cfg.prepare().unwrap();
                let (rec, norm) = initial_energy(&p.model, &p.state, cfg.s).unwrap();
                rec.total().unwrap() / norm
            })
            .collect();
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= lo > 0.0 && hi <= INITIAL_RATIO_BOUND && hi / lo <= INITIAL_RATIO_SPREAD;
        lines.push(format!("{kind:?} {ratios:.3?}"));
    }
    report(
        8,
        "initial energy vs data norm",
        ok,
        format!(
            "{} (bound {INITIAL_RATIO_BOUND}, spread {INITIAL_RATIO_SPREAD})",
            lines.join("; ")
        ),
    );
}

#[test]
fn operators_match_dense_oracles_and_rk4_order() {
    let (eb, ec) = bh_ch_errors();
    let errs = [("P1", p1_error()), ("P2", p2_error()), ("B_h", eb), ("C_h", ec)];
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let (order, _) = rk4_order();
    let (fd, _) = cascade_fd_order();
    let ok = worst <= ORACLE_TOL && (order - RK4_ORDER).abs() <= ORDER_TOL && (fd - 2.0).abs() <= ORDER_TOL;
    let errs: Vec<String> = errs.iter().map(|(k, e)| format!("{k} {e:.1e}")).collect();
    report(
        9,
        "operator oracles",
        ok,
        format!(
            "{} at N={N} (tol {ORACLE_TOL:.0e}); RK4 order {order:.2} ({RK4_ORDER} +- {ORDER_TOL}); cascade difference order {fd:.2}",
            errs.join(", ")
        ),
    );
}
