//! Numerical checks of the identities, equivalences and inequalities that the
//! energy estimates rest on.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bathymetry::{make_bathymetry, validate_bathymetry, Bathymetry, HypothesisCheck, ModeSpec, Profile, DEFAULT_H0};
use crate::error::{Error, Result};
use crate::fields::{check_interpolation, x_norm_sq, Grid, NormSpec, ScalarField, VectorField};
use crate::operators::{
    apply_bh_unchecked, apply_ch_unchecked, apply_mass1, apply_mass2, flat_symbols, r_coefficient, Model, State,
    Topography,
};
use crate::params::{dispersion_eigenvalues, CoefficientSet, Regime, EQ_TOL};
use crate::timestepper::{model_dt, step_rk4};

/// Real trigonometric polynomial `sum a_m cos(2 pi m x / L) + b_m sin(2 pi m x / L)`,
/// evaluable on grids of any size.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigPoly {
    /// Modes `1..=max_mode` with amplitudes `(1 + m)^{-decay}` and random signs and phases.
    pub fn random(rng: &mut impl Rng, max_mode: u32, decay: f64) -> Self {
        let terms = (1..=max_mode)
            .map(|m| {
                let amp = (1.0 + m as f64).powf(-decay) * rng.gen_range(0.5..1.5);
                let phase = rng.gen_range(0.0..2.0 * PI);
                (m, amp * phase.cos(), amp * phase.sin())
            })
            .collect();
        Self { terms }
    }

    /// Gaussian spectral bump around `center` with the given width.
    pub fn concentrated(rng: &mut impl Rng, center: f64, width: f64, max_mode: u32) -> Self {
        let terms = (1..=max_mode)
            .filter_map(|m| {
                let z = (m as f64 - center) / width;
                if z.abs() > 4.0 {
                    return None;
                }
                let amp = (-0.5 * z * z).exp() * rng.gen_range(0.5..1.5);
                let phase = rng.gen_range(0.0..2.0 * PI);
                Some((m, amp * phase.cos(), amp * phase.sin()))
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, grid: &Arc<Grid>) -> ScalarField {
        let l = grid.length(0);
        ScalarField::from_fn(grid, |x, _| {
            self.terms
                .iter()
                .map(|&(m, a, b)| {
                    let th = 2.0 * PI * m as f64 * x / l;
                    a * th.cos() + b * th.sin()
                })
                .sum()
        })
    }
}

/// Random zero-mean wave packet: a Gaussian spectral bump around a wavevector
/// whose size is log-uniform over the retained band, with coherent phases so
/// the packet sits at a random position. Normalised in `L^2`.
pub fn random_concentrated(grid: &Arc<Grid>, rng: &mut impl Rng) -> ScalarField {
    let dim = grid.dim();
    let cut = (0..dim).map(|a| grid.cutoff(a)).min().unwrap_or(1).max(1) as f64;
    let radius = cut.powf(rng.gen_range(0.0..1.0));
    let width = rng.gen_range(0.7..(0.25 * radius).max(0.7) + 0.7);
    let angle: f64 = rng.gen_range(0.0..2.0 * PI);
    let center = if dim == 1 {
        [radius, 0.0]
    } else {
        [radius * angle.cos(), radius * angle.sin()]
    };
    let origin: Vec<f64> = (0..dim).map(|a| rng.gen_range(0.0..grid.length(a))).collect();
    let phase0 = rng.gen_range(0.0..2.0 * PI);
    let mut spec = vec![Complex64::default(); grid.len()];
    for (idx, c) in spec.iter_mut().enumerate() {
        if !grid.is_retained(idx) {
            continue;
        }
        let (m, k) = grid.mode_at(idx);
        if m == [0, 0] {
            continue;
        }
        let d2 = (0..dim)
            .map(|a| {
                let p = m[a] as f64 - center[a];
                p * p
            })
            .sum::<f64>();
        let z2 = d2 / (width * width);
        if z2 > 36.0 {
            continue;
        }
        let shift: f64 = (0..dim).map(|a| k[a] * origin[a]).sum();
        *c = Complex64::from_polar((-0.5 * z2).exp(), phase0 - shift);
    }
    let f = ScalarField::from_spectrum(grid, spec);
    let n = f.l2_norm();
    if n > 0.0 {
        f * (1.0 / n)
    } else {
        f
    }
}

/// Random real field with amplitudes `(1 + |m|)^{-(s+2)}` times a factor in
/// `[0.5, 1.5)`, limited to half the dealiasing cutoff. Each conjugate pair is
/// drawn once so no amplitude can cancel.
pub fn random_band_limited(grid: &Arc<Grid>, rng: &mut impl Rng, s: f64) -> ScalarField {
    let dim = grid.dim();
    let mut spec = vec![Complex64::default(); grid.len()];
    for (idx, c) in spec.iter_mut().enumerate() {
        let (m, _) = grid.mode_at(idx);
        if (0..dim).any(|a| m[a].unsigned_abs() as usize > grid.cutoff(a) / 2) {
            continue;
        }
        let j = grid.index_of_mode([-m[0], -m[1]]);
        if j < idx {
            continue;
        }
        let mag = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
        let amp = (1.0 + mag).powf(-(s + 2.0)) * rng.gen_range(0.5..1.5);
        if j == idx {
            *c = Complex64::new(if rng.gen_bool(0.5) { amp } else { -amp }, 0.0);
        } else {
            *c = Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
        }
    }
    for idx in 0..spec.len() {
        let (m, _) = grid.mode_at(idx);
        let j = grid.index_of_mode([-m[0], -m[1]]);
        if j < idx {
            spec[idx] = spec[j].conj();
        }
    }
    ScalarField::from_spectrum(grid, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub n: usize,
    pub trials: usize,
    /// Discrete left side on `n` points against the resolved right side.
    pub residual_n: f64,
    pub residual_2n: f64,
    /// `residual_n / residual_2n`.
    pub decay: f64,
    /// Fitted `p` in `residual ~ N^{-p}`.
    pub exponent: f64,
    /// Both sides on the same grid (`n` and `2n`, worst of the two).
    pub discrete_residual: f64,
}

/// Oversampling of the reference quadrature relative to the fine grid.
pub const CANCELLATION_REFERENCE_FACTOR: usize = 8;

struct CancellationTerms {
    lhs: f64,
    rhs: f64,
    scale: f64,
}

fn cancellation_terms(topo: &Topography, c: &CoefficientSet, f: &ScalarField, g: &ScalarField) -> CancellationTerms {
    CancellationTerms {
        lhs: apply_bh_unchecked(topo, c, f).inner(g) + apply_ch_unchecked(topo, c, g).inner(f),
        rhs: r_coefficient(topo, c).mul_pointwise(&f.dx()).inner(g),
        scale: f.sobolev_norm(3.0) * g.l2_norm() + g.sobolev_norm(3.0) * f.l2_norm(),
    }
}

/// Relative residual of `(B_h f | g) + (C_h g | f) = (r(h) f_x | g)` at `n`
/// and `2n` points, maximised over random band-limited pairs.
///
/// The left side uses the discrete operators on each grid; the right side is
/// the resolved value from a heavily oversampled quadrature of the same `h`,
/// `f`, `g`, so the residual measures how fast the discrete cancellation
/// converges to the continuous one. `f`, `g` are trigonometric polynomials
/// band-limited to half the cutoff of the coarse grid. Coefficient sets
/// outside the fast regime are rejected unless `allow_any` is set (used for
/// negative controls).
pub fn check_cancellation(
    h: &(dyn Fn(f64) -> f64 + Sync),
    length: f64,
    c: &CoefficientSet,
    n: usize,
    trials: usize,
    seed: u64,
    allow_any: bool,
) -> Result<CancellationReport> {
    if !allow_any && ((c.b1 - c.c1).abs() > EQ_TOL || c.fast_defect().abs() > EQ_TOL) {
        return Err(Error::RegimeMismatch(
            "cancellation needs b1 = c1 and b2 + b3 + c2 + c3 = 0".into(),
        ));
    }
    let grids = [
        Grid::line(n, length)?,
        Grid::line(2 * n, length)?,
        Grid::line(2 * n * CANCELLATION_REFERENCE_FACTOR, length)?,
    ];
    let topo_at = |g: &Arc<Grid>| -> Result<Topography> {
        let depth = ScalarField::from_fn(g, |x, _| h(x));
        Topography::from_depth(&depth, depth.min().min(1.0))
    };
    let topos = grids.iter().map(topo_at).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_mode = (grids[0].cutoff(0) / 2) as u32;
    let pairs: Vec<(TrigPoly, TrigPoly)> = (0..trials)
        .map(|_| {
            (
                TrigPoly::random(&mut rng, max_mode, 4.0),
                TrigPoly::random(&mut rng, max_mode, 4.0),
            )
        })
        .collect();
    let per_pair: Vec<[f64; 3]> = pairs
        .par_iter()
        .map(|(f, g)| {
            let terms: Vec<CancellationTerms> = grids
                .iter()
                .zip(&topos)
                .map(|(grid, topo)| cancellation_terms(topo, c, &f.eval(grid), &g.eval(grid)))
                .collect();
            let reference = &terms[2];
            let rel = |t: &CancellationTerms| (t.lhs - reference.rhs).abs() / reference.scale;
            let discrete = terms[..2]
                .iter()
                .map(|t| (t.lhs - t.rhs).abs() / t.scale)
                .fold(0.0, f64::max);
            [rel(&terms[0]), rel(&terms[1]), discrete]
        })
        .collect();
    let worst = |i: usize| per_pair.iter().map(|r| r[i]).fold(0.0, f64::max);
    let (rn, r2n) = (worst(0), worst(1));
    let decay = rn / r2n;
    Ok(CancellationReport {
        n,
        trials,
        residual_n: rn,
        residual_2n: r2n,
        decay,
        exponent: decay.log2(),
        discrete_residual: worst(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquivalenceKind {
    /// `((1 - eps/2 P1) f | f)_{H^s} ~ |f|^2_{X^s_eps}`
    Lemma24Momentum,
    /// `((1 - eps/2 P2) g | g)_{H^s} ~ |g|^2_{X^s_eps}`
    Lemma24Mass,
    /// `((sqrt(h) d_x + eps/2 B_h) f | f_x) ~ |f_x|^2_{X^0_eps}`
    B1,
    /// `|(sqrt(h) d_x + eps/2 B_h) f|^2 ~ |f_x|^2_{X^0_{eps^2}}`
    B2,
    /// `|(d_x(sqrt(h) .) + eps/2 C_h) f|^2 ~ |f_x|^2_{X^0_{eps^2}}` up to `|f|^2`
    C1,
    /// `((d_x(sqrt(h) .) + eps/2 C_h) f | f_x) ~ |f_x|^2_{X^0_eps}` up to `|f|^2`
    C2,
}

impl EquivalenceKind {
    pub const ALL: [EquivalenceKind; 6] = [
        EquivalenceKind::Lemma24Momentum,
        EquivalenceKind::Lemma24Mass,
        EquivalenceKind::B1,
        EquivalenceKind::B2,
        EquivalenceKind::C1,
        EquivalenceKind::C2,
    ];

    pub fn is_fast(&self) -> bool {
        !matches!(self, EquivalenceKind::Lemma24Momentum | EquivalenceKind::Lemma24Mass)
    }

    fn has_slack(&self) -> bool {
        matches!(self, EquivalenceKind::C1 | EquivalenceKind::C2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub kind: EquivalenceKind,
    /// Smallest lower-side ratio `Q / (X - L)` (`Q / X` without slack).
    pub min_ratio: f64,
    /// Largest upper-side ratio `Q / (X + L)` (`Q / X` without slack).
    pub max_ratio: f64,
    /// `max(max_ratio, 1 / min_ratio)`.
    pub k: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub epsilon: f64,
    pub s: f64,
    pub family_size: usize,
    pub hypotheses: Vec<HypothesisCheck>,
    pub ratios: Vec<RatioStats>,
}

impl EquivalenceReport {
    pub fn get(&self, kind: EquivalenceKind) -> Option<&RatioStats> {
        self.ratios.iter().find(|r| r.kind == kind)
    }
}

fn hypothesis(name: &str, passed: bool, value: f64, bound: f64) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        passed,
        value,
        bound,
    }
}

fn equivalence_hypotheses(b: &Bathymetry, c: &CoefficientSet, epsilon: f64, s: f64, kinds: &[EquivalenceKind]) -> Vec<HypothesisCheck> {
    let dim = b.grid().dim();
    let mut out = Vec::new();
    if kinds.contains(&EquivalenceKind::Lemma24Momentum) {
        out.push(hypothesis("a1 > 0", c.a1 > 0.0, c.a1, 0.0));
    }
    if kinds.contains(&EquivalenceKind::Lemma24Mass) {
        out.push(hypothesis("d1 > 0", c.d1 > 0.0, c.d1, 0.0));
    }
    if kinds.iter().any(|k| !k.is_fast()) {
        let sm = validate_bathymetry(b, Regime::Slow1d, s, epsilon);
        out.extend(sm.checks.into_iter().filter(|c| c.name != "slow_variation"));
        let need = dim as f64 / 2.0 + 1.0;
        out.push(hypothesis("s > n/2 + 1", s > need, s, need));
    }
    if kinds.iter().any(EquivalenceKind::is_fast) {
        out.push(hypothesis("b1 < 0", c.b1 < 0.0, c.b1, 0.0));
        let fast = validate_bathymetry(b, Regime::Fast1d, s, epsilon);
        for chk in fast.checks {
            if !out.iter().any(|o| o.name == chk.name) {
                out.push(chk);
            }
        }
    }
    out
}

/// Quadratic form and reference norm (with optional slack) for one field.
fn equivalence_sample(
    kind: EquivalenceKind,
    topo: &Topography,
    c: &CoefficientSet,
    epsilon: f64,
    s: f64,
    f: &ScalarField,
) -> Result<(f64, f64, f64)> {
    let half = 0.5 * epsilon;
    Ok(match kind {
        EquivalenceKind::Lemma24Momentum => {
            let grid = f.grid.clone();
            let v = if grid.dim() == 1 {
                VectorField { components: vec![f.clone()] }
            } else {
                // mix a gradient and a rotated copy so the divergence term is active
                let g = f.gradient();
                let rot = VectorField {
                    components: vec![g.components[1].clone(), -&g.components[0]],
                };
                let v = g.add(&rot.scale(0.5));
                let n = v.l2_norm();
                v.scale(1.0 / n)
            };
            let q = apply_mass1(topo, c, epsilon, &v)?.sobolev_inner(&v, s);
            (q, x_norm_sq(&v, NormSpec::vector(s, 1, epsilon))?, 0.0)
        }
        EquivalenceKind::Lemma24Mass => {
            let q = apply_mass2(topo, c, epsilon, f)?.sobolev_inner(f, s);
            (q, x_norm_sq(f, NormSpec::scalar(s, 1, epsilon))?, 0.0)
        }
        EquivalenceKind::B1 | EquivalenceKind::B2 => {
            let fx = f.dx();
            let op = topo.sqrt_h.mul_pointwise(&fx).dealias() + apply_bh_unchecked(topo, c, f) * half;
            if kind == EquivalenceKind::B1 {
                (op.inner(&fx), x_norm_sq(&fx, NormSpec::scalar(0.0, 1, epsilon))?, 0.0)
            } else {
                (op.inner(&op), x_norm_sq(&fx, NormSpec::scalar(0.0, 2, epsilon))?, 0.0)
            }
        }
        EquivalenceKind::C1 | EquivalenceKind::C2 => {
            let fx = f.dx();
            let op = topo.sqrt_h.mul_pointwise(f).dealias().dx() + apply_ch_unchecked(topo, c, f) * half;
            let l = f.inner(f);
            if kind == EquivalenceKind::C1 {
                (op.inner(&op), x_norm_sq(&fx, NormSpec::scalar(0.0, 2, epsilon))?, l)
            } else {
                (op.inner(&fx), x_norm_sq(&fx, NormSpec::scalar(0.0, 1, epsilon))?, l)
            }
        }
    })
}

/// Two-sided ratios of each requested equivalence over a random family.
///
/// Fields are concentrated around random wavenumbers spread log-uniformly over
/// the retained band, so every `eps` sees both the `eps |xi|^2 << 1` and
/// `>> 1` ends of the family. Fails with `HypothesisViolation` when the
/// hypotheses of a requested equivalence do not hold.
pub fn check_equivalences(
    b: &Bathymetry,
    c: &CoefficientSet,
    epsilon: f64,
    s: f64,
    family_size: usize,
    seed: u64,
    kinds: &[EquivalenceKind],
) -> Result<EquivalenceReport> {
    let hypotheses = equivalence_hypotheses(b, c, epsilon, s, kinds);
    let failed: Vec<String> = hypotheses
        .iter()
        .filter(|h| !h.passed)
        .map(|h| format!("{} (value {:.4e}, bound {:.4e})", h.name, h.value, h.bound))
        .collect();
    if !failed.is_empty() {
        return Err(Error::HypothesisViolation(failed));
    }
    let topo = Topography::new(b)?;
    let grid = b.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family: Vec<ScalarField> = (0..family_size).map(|_| random_concentrated(&grid, &mut rng)).collect();

    let mut ratios = Vec::new();
    for &kind in kinds {
        let samples: Vec<(f64, f64, f64)> = family
            .par_iter()
            .map(|f| equivalence_sample(kind, &topo, c, epsilon, s, f))
            .collect::<Result<_>>()?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (q, x, l) in samples {
            hi = hi.max(q / (x + l));
            if x > l {
                lo = lo.min(q / (x - l));
            }
        }
        if !kind.has_slack() && lo == f64::INFINITY {
            lo = 0.0;
        }
        let k = hi.max(1.0 / lo);
        ratios.push(RatioStats {
            kind,
            min_ratio: lo,
            max_ratio: hi,
            k,
            samples: family_size,
        });
    }
    Ok(EquivalenceReport {
        epsilon,
        s,
        family_size,
        hypotheses,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `|f g|_{H^s} / (|f|_{H^s} |g|_inf + |f|_inf |g|_{H^s})`
    Tame,
    /// `|[Lambda^s, f] u|_{L^2} / (|grad f|_{H^{t0}} |u|_{H^{s-1}})`, `t0 = n/2 + 1/2`
    Commutator,
    /// `|sqrt(h) - 1|_{H^s} / |h - 1|_{H^s}`
    Composition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub s: f64,
    pub family_size: usize,
    pub max_ratio: f64,
    pub max_ratio_doubled: f64,
    /// Relative change of the maximum when the family is doubled.
    pub drift: f64,
    pub finite: bool,
    /// Whether `s` satisfies the probed estimate's own hypothesis.
    pub hypothesis_met: bool,
    pub passed: bool,
}

pub const PROBE_SOBOLEV_MENU: [f64; 4] = [1.0, 1.5, 2.0, 3.0];
pub const PROBE_MAX_DRIFT: f64 = 0.1;

fn lambda_s(f: &ScalarField, s: f64) -> ScalarField {
    let g = &f.grid;
    ScalarField {
        grid: g.clone(),
        values: g.apply_symbol(&f.values, |_, _, idx| Complex64::new(g.sobolev_weight(idx, 0.5 * s), 0.0)),
    }
}

/// Left side over right side of the probed inequality for one pair.
pub fn probe_ratio(kind: ProbeKind, s: f64, f: &ScalarField, g: &ScalarField) -> f64 {
    match kind {
        ProbeKind::Tame => {
            let fg = f.mul_pointwise(g);
            fg.sobolev_norm(s) / (f.sobolev_norm(s) * g.max_abs() + f.max_abs() * g.sobolev_norm(s))
        }
        ProbeKind::Commutator => {
            let t0 = f.grid.dim() as f64 / 2.0 + 0.5;
            let comm = lambda_s(&f.mul_pointwise(g), s) - f.mul_pointwise(&lambda_s(g, s));
            let gradf = f.gradient();
            let scale = if s - 1.0 <= t0 {
                gradf.sobolev_norm(t0)
            } else {
                gradf.sobolev_norm(s - 1.0)
            } * g.sobolev_norm(s - 1.0);
            if scale == 0.0 {
                0.0
            } else {
                comm.l2_norm() / scale
            }
        }
        ProbeKind::Composition => {
            // h - 1 = 0.5 f / max|f| keeps h in [1/2, 3/2]
            let dev = f * (0.5 / f.max_abs());
            let comp = dev.map(|d| (1.0 + d).sqrt() - 1.0);
            comp.sobolev_norm(s) / dev.sobolev_norm(s)
        }
    }
}

/// Empirical constant of a classical inequality over a random family and its
/// doubling. A boundedness probe only.
pub fn probe_inequality_constants(kind: ProbeKind, s: f64, family_size: usize, seed: u64) -> Result<ProbeReport> {
    if !PROBE_SOBOLEV_MENU.contains(&s) {
        return Err(Error::ConfigInvalid(format!("probe index s = {s} not in {PROBE_SOBOLEV_MENU:?}")));
    }
    let grid = Grid::line(256, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(ScalarField, ScalarField)> = (0..2 * family_size)
        .map(|_| {
            (
                random_band_limited(&grid, &mut rng, s),
                random_band_limited(&grid, &mut rng, s),
            )
        })
        .collect();
    let ratios: Vec<f64> = pairs.par_iter().map(|(f, g)| probe_ratio(kind, s, f, g)).collect();
    let max_n = ratios[..family_size].iter().copied().fold(0.0, f64::max);
    let max_2n = ratios.iter().copied().fold(0.0, f64::max);
    let finite = ratios.iter().all(|r| r.is_finite());
    let drift = if max_n > 0.0 { (max_2n - max_n) / max_n } else { 0.0 };
    let hypothesis_met = match kind {
        ProbeKind::Tame => s >= 0.0,
        ProbeKind::Commutator => true,
        ProbeKind::Composition => s > 1.5,
    };
    Ok(ProbeReport {
        kind,
        s,
        family_size,
        max_ratio: max_n,
        max_ratio_doubled: max_2n,
        drift,
        finite,
        hypothesis_met,
        passed: finite && drift <= PROBE_MAX_DRIFT,
    })
}

/// Exact tame ratio for `f = g = sin(m x)` on `[0, 2 pi)`.
pub fn tame_single_mode_ratio(m: f64, s: f64) -> f64 {
    (PI / 2.0 + PI / 4.0 * (1.0 + 4.0 * m * m).powf(s)).sqrt() / (2.0 * PI.sqrt() * (1.0 + m * m).powf(s / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub xi: f64,
    pub epsilon: f64,
    pub n: usize,
    pub periods: f64,
    pub omega_expected: f64,
    pub omega_measured: f64,
    pub rel_freq_error: f64,
    /// `(|a(T)| / |a(0)| - 1) / periods` for the tracked Fourier amplitude.
    pub amplitude_drift_per_period: f64,
    /// Largest `|a(t)| / |a(0)|` seen.
    pub max_growth: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Largest `omega * dt` allowed in the wave test.
pub const WAVE_PHASE_STEP: f64 = 0.05;

/// Integrate the linearised flat-bottom system from its right-going eigenmode
/// at integer wavenumber `xi` on `[0, 2 pi)` and measure the frequency.
pub fn flat_bottom_wave_test(c: &CoefficientSet, epsilon: f64, xi: u32, periods: f64, n: usize) -> Result<WaveReport> {
    let grid = Grid::line(n, 2.0 * PI)?;
    let k = xi as f64;
    let lam = dispersion_eigenvalues(c, epsilon, k);
    if lam.ill_posed {
        return Err(Error::RegimeMismatch(format!("mode {xi} is ill-posed for these coefficients")));
    }
    let omega = lam.lambda_plus.im;
    let (alpha, _) = flat_symbols(c, epsilon, k);
    let topo = Topography::from_depth(&ScalarField::constant(&grid, 1.0), 0.5)?;
    let model = Model {
        coeffs: *c,
        epsilon,
        regime: Regime::FullySymmetric,
        nonlinear: false,
        topo,
    };
    let eta = ScalarField::from_fn(&grid, |x, _| (k * x).cos());
    let ratio = if omega != 0.0 { alpha / omega } else { 0.0 };
    let v = VectorField {
        components: vec![ScalarField::from_fn(&grid, |x, _| ratio * (k * x).cos())],
    };
    let mut state = State::new(v, eta, 0.0)?;
    let t_end = periods * 2.0 * PI / omega;
    let dt_max = model_dt(&model, 0.5).min(WAVE_PHASE_STEP / omega);
    let steps = (t_end / dt_max).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;

    let idx = grid.index_of_mode([xi as i64, 0]);
    let coef = |s: &State| s.eta.spectrum()[idx];
    let a0 = coef(&state);
    let mut phase = 0.0;
    let mut prev = a0;
    let mut max_growth: f64 = 1.0;
    for _ in 0..steps {
        state = step_rk4(&model, &state, dt)?;
        let a = coef(&state);
        phase += (a * prev.conj()).arg();
        prev = a;
        max_growth = max_growth.max(a.norm() / a0.norm());
    }
    // eta ~ cos(xi x - omega t): the +xi coefficient rotates as exp(-i omega t)
    let omega_measured = -phase / t_end;
    Ok(WaveReport {
        xi: k,
        epsilon,
        n,
        periods,
        omega_expected: omega,
        omega_measured,
        rel_freq_error: (omega_measured - omega).abs() / omega,
        amplitude_drift_per_period: (prev.norm() / a0.norm() - 1.0) / periods,
        max_growth,
        steps,
        dt,
    })
}

/// Depth used by the cancellation check: smooth but with a spectrum wide
/// enough that the residual at 128 points sits well above rounding.
pub fn cancellation_depth(x: f64) -> f64 {
    1.0 - 0.7 * (10.0 * x).sin()
}

pub const CANCELLATION_MAX_RESIDUAL: f64 = 1e-8;
pub const CANCELLATION_MIN_DECAY: f64 = 1e2;
pub const NEGATIVE_CONTROL_MIN_RESIDUAL: f64 = 1e-2;
pub const EQUIVALENCE_EPSILONS: [f64; 3] = [0.1, 0.05, 0.025];
/// Allowed spread `max K / min K` of the equivalence constants across epsilon.
pub const EQUIVALENCE_MAX_SPREAD: f64 = 1.2;
pub const INTERPOLATION_MIN_SLACK: f64 = -1e-12;
pub const WAVE_MAX_REL_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub quick: bool,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name));
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{n}/{} checks passed\n", self.checks.len()));
        out
    }
}

fn outcome<T: Serialize>(name: impl Into<String>, passed: bool, detail: &T) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        name: name.into(),
        passed,
        detail: serde_json::to_value(detail)?,
    })
}

/// Spread `max K / min K` of each equivalence across a set of reports.
pub fn equivalence_spread(reports: &[EquivalenceReport]) -> Vec<(EquivalenceKind, f64)> {
    let mut out = Vec::new();
    for kind in EquivalenceKind::ALL {
        let ks: Vec<f64> = reports.iter().filter_map(|r| r.get(kind)).map(|r| r.k).collect();
        if ks.is_empty() {
            continue;
        }
        let hi = ks.iter().copied().fold(f64::MIN, f64::max);
        let lo = ks.iter().copied().fold(f64::MAX, f64::min);
        out.push((kind, hi / lo));
    }
    out
}

/// Fast-regime bathymetry used by the equivalence checks.
pub fn fast_equivalence_bathymetry(n: usize) -> Result<Bathymetry> {
    let g = Grid::line(n, 2.0 * PI)?;
    make_bathymetry(
        &g,
        &Profile::Fast {
            amplitude: 0.2,
            modes: vec![ModeSpec::new(1)],
        },
        2.0,
        DEFAULT_H0,
    )
}

/// Slow-regime bathymetry used by the equivalence checks, fixed across epsilon.
pub fn slow_equivalence_bathymetry(n: usize) -> Result<Bathymetry> {
    let g = Grid::line(n, 2.0 * PI)?;
    make_bathymetry(
        &g,
        &Profile::Slow {
            scale: 0.1,
            modes: vec![ModeSpec::new(1), ModeSpec::new(2)],
        },
        2.0,
        DEFAULT_H0,
    )
}

/// Every check of this module with its default sizes (reduced when `quick`).
pub fn run_suite(seed: u64, quick: bool) -> Result<VerifyReport> {
    use crate::params::{coefficients_from_bbm, fast_closed_form, slow_reference};
    let fast = coefficients_from_bbm(&fast_closed_form(0.0))?;
    let slow = coefficients_from_bbm(&slow_reference())?;
    let (trials, family, interp, probe_family) = if quick { (4, 40, 100, 60) } else { (20, 200, 1000, 100) };
    let mut checks = Vec::new();

    let can = check_cancellation(&cancellation_depth, 2.0 * PI, &fast, 128, trials, seed, false)?;
    let ok = can.residual_2n <= CANCELLATION_MAX_RESIDUAL && can.decay >= CANCELLATION_MIN_DECAY;
    checks.push(outcome("cancellation", ok, &can)?);
    let mut broken = fast;
    broken.b2 += 1.0;
    let neg = check_cancellation(&cancellation_depth, 2.0 * PI, &broken, 128, trials, seed, true)?;
    checks.push(outcome(
        "cancellation negative control",
        neg.residual_2n >= NEGATIVE_CONTROL_MIN_RESIDUAL,
        &neg,
    )?);

    let groups: [(&str, Bathymetry, CoefficientSet, &[EquivalenceKind]); 2] = [
        ("slow", slow_equivalence_bathymetry(256)?, slow, &EquivalenceKind::ALL[..2]),
        ("fast", fast_equivalence_bathymetry(512)?, fast, &EquivalenceKind::ALL[2..]),
    ];
    for (label, b, c, kinds) in &groups {
        let reports = EQUIVALENCE_EPSILONS
            .iter()
            .map(|&eps| check_equivalences(b, c, eps, 2.0, family, seed, kinds))
            .collect::<Result<Vec<_>>>()?;
        let spread = equivalence_spread(&reports);
        let ok = spread.iter().all(|(_, s)| *s <= EQUIVALENCE_MAX_SPREAD)
            && reports.iter().flat_map(|r| &r.ratios).all(|r| r.min_ratio > 0.0 && r.k.is_finite());
        checks.push(outcome(format!("equivalences {label}"), ok, &(reports, spread))?);
    }
    let rejected = matches!(
        check_equivalences(&groups[0].1, &fast, 0.1, 2.0, 4, seed, &[EquivalenceKind::Lemma24Mass]),
        Err(Error::HypothesisViolation(_))
    );
    checks.push(outcome("equivalence hypotheses enforced", rejected, &rejected)?);

    let g = Grid::line(128, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..interp {
        let s = rng.gen_range(0.0..3.0);
        let f = random_band_limited(&g, &mut rng, s);
        let f = &f * (1.0 / f.l2_norm());
        let eps = rng.gen_range(1e-3..1.0);
        for k in 2..=3 {
            for j in 1..k {
                worst = worst.min(check_interpolation(&f, j, k, eps)?);
            }
        }
    }
    checks.push(outcome("interpolation", worst >= INTERPOLATION_MIN_SLACK, &worst)?);

    for kind in [ProbeKind::Tame, ProbeKind::Commutator, ProbeKind::Composition] {
        for s in PROBE_SOBOLEV_MENU {
            let p = probe_inequality_constants(kind, s, probe_family, seed)?;
            checks.push(outcome(format!("probe {kind:?} s={s}"), p.passed, &p)?);
        }
    }

    for eps in [0.1, 0.05] {
        for xi in [1, 2, 4] {
            let w = flat_bottom_wave_test(&fast, eps, xi, 3.0, 128)?;
            checks.push(outcome(
                format!("flat wave xi={xi} eps={eps}"),
                w.rel_freq_error <= WAVE_MAX_REL_ERROR,
                &w,
            )?);
        }
    }
    Ok(VerifyReport { seed, quick, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{coefficients_from_bbm, BbmParams};

    fn fast_set() -> CoefficientSet {
        coefficients_from_bbm(&BbmParams::new(-1.0 / 3.0, 1.0, 1.0, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn flat_cancellation_is_exact() {
        let r = check_cancellation(&|_| 1.0, 2.0 * PI, &fast_set(), 64, 5, 1, false).unwrap();
        assert!(r.residual_n < 1e-12 && r.residual_2n < 1e-12, "{r:?}");
    }

    #[test]
    fn cancellation_rejects_non_fast_sets() {
        let mut c = fast_set();
        c.b2 += 1.0;
        assert!(matches!(
            check_cancellation(&|_| 1.0, 2.0 * PI, &c, 64, 1, 1, false),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn single_mode_flat_ratio_is_constant() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let b = make_bathymetry(&g, &Profile::Flat, 2.0, 0.5).unwrap();
        let topo = Topography::new(&b).unwrap();
        let c = fast_set();
        let eps = 0.1;
        for m in [1.0, 3.0] {
            let f = ScalarField::from_fn(&g, |x, _| (m * x).sin());
            let f2 = ScalarField::from_fn(&g, |x, _| (m * x + 0.7).cos() * 2.0);
            let (q1, x1, _) = equivalence_sample(EquivalenceKind::Lemma24Momentum, &topo, &c, eps, 2.0, &f).unwrap();
            let (q2, x2, _) = equivalence_sample(EquivalenceKind::Lemma24Momentum, &topo, &c, eps, 2.0, &f2).unwrap();
            let want = (1.0 + 0.5 * eps * c.a1 * m * m) / (1.0 + eps * m * m);
            assert!((q1 / x1 - want).abs() < 1e-12);
            assert!((q2 / x2 - want).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_d1_is_a_hypothesis_violation() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let b = make_bathymetry(&g, &Profile::Flat, 2.0, 0.5).unwrap();
        let c = fast_set();
        let out = check_equivalences(&b, &c, 0.1, 2.0, 4, 0, &[EquivalenceKind::Lemma24Mass]);
        match out {
            Err(Error::HypothesisViolation(v)) => assert!(v.iter().any(|s| s.starts_with("d1 > 0"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fast_equivalences_run_on_fast_profile() {
        let g = Grid::line(128, 2.0 * PI).unwrap();
        let p = Profile::Fast {
            amplitude: 0.3,
            modes: vec![ModeSpec::new(1)],
        };
        let b = make_bathymetry(&g, &p, 2.0, 0.5).unwrap();
        let r = check_equivalences(&b, &fast_set(), 0.1, 2.0, 20, 3, &EquivalenceKind::ALL[2..]).unwrap();
        for st in &r.ratios {
            assert!(st.min_ratio > 0.0 && st.k.is_finite(), "{st:?}");
        }
    }

    #[test]
    fn tame_probe_matches_closed_form() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        for m in [1.0, 4.0] {
            let f = ScalarField::from_fn(&g, |x, _| (m * x).sin());
            for s in PROBE_SOBOLEV_MENU {
                let r = probe_ratio(ProbeKind::Tame, s, &f, &f);
                assert!((r - tame_single_mode_ratio(m, s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutator_with_constant_vanishes() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let f = ScalarField::constant(&g, 2.5);
        let u = ScalarField::from_fn(&g, |x, _| (3.0 * x).sin());
        assert_eq!(probe_ratio(ProbeKind::Commutator, 2.0, &f, &u), 0.0);
    }

    #[test]
    fn probes_are_stable_under_doubling() {
        for kind in [ProbeKind::Tame, ProbeKind::Commutator, ProbeKind::Composition] {
            let r = probe_inequality_constants(kind, 2.0, 40, 11).unwrap();
            assert!(r.passed, "{r:?}");
        }
        assert!(probe_inequality_constants(ProbeKind::Tame, 2.5, 4, 0).is_err());
    }

    #[test]
    fn small_epsilon_wave_moves_at_unit_speed() {
        let r = flat_bottom_wave_test(&fast_set(), 1e-6, 2, 1.0, 32).unwrap();
        assert!((r.omega_expected - 2.0).abs() < 1e-5);
        assert!(r.rel_freq_error < 1e-6, "{r:?}");
    }
}
