//! Coefficient algebra of the system: BBM parameters, the twelve derived
//! coefficients, regime admissibility and the flat-bottom dispersion relation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for equality constraints.
pub const EQ_TOL: f64 = 1e-10;
/// Margin for strict inequalities such as `a1 > 0`.
pub const STRICT_MARGIN: f64 = 1e-8;
/// Half-width of the `(lambda1, lambda2, mu)` search box.
pub const SEARCH_BOX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbmParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub theta: f64,
}

impl BbmParams {
    pub fn new(lambda1: f64, lambda2: f64, mu: f64, theta: f64) -> Result<Self> {
        let p = Self {
            lambda1,
            lambda2,
            mu,
            theta,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::ThetaOutOfRange(self.theta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a1: f64,
    pub a2: f64,
    pub d1: f64,
    pub d2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl CoefficientSet {
    pub fn dispersive_sum(&self) -> f64 {
        self.a1 + self.b1 + self.c1 + self.d1
    }

    /// `b2 + b3 + c2 + c3`, zero in the fast-oscillation regime.
    pub fn fast_defect(&self) -> f64 {
        self.b2 + self.b3 + self.c2 + self.c3
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; 12] {
        [
            self.a1, self.a2, self.d1, self.d2, self.b1, self.b2, self.b3, self.b4, self.c1,
            self.c2, self.c3, self.c4,
        ]
    }
}

/// Coefficients generated by a BBM quadruple. `c4 = -(theta - 2)^2 / 2`.
pub fn coefficients_from_bbm(p: &BbmParams) -> Result<CoefficientSet> {
    p.check()?;
    let BbmParams {
        lambda1: l1,
        lambda2: l2,
        mu,
        theta: th,
    } = *p;
    let one_m_th2 = 1.0 - th * th;
    let one_m_th = 1.0 - th;
    let th2_m_third = th * th - 1.0 / 3.0;
    let d2_shape = 1.5 * th * th - 7.0 / 6.0;
    Ok(CoefficientSet {
        a1: one_m_th2 * (1.0 - l1),
        a2: 2.0 * one_m_th * (1.0 - l2),
        d1: (1.0 - mu) * th2_m_third,
        d2: (1.0 - mu) * d2_shape,
        b1: l1 * one_m_th2,
        b2: 2.0 * l2 * one_m_th - 1.5 * l1 * one_m_th2,
        b3: 0.5 * l1 * one_m_th2,
        b4: l2 * one_m_th - 0.5 * l1 * one_m_th2,
        c1: mu * th2_m_third,
        c2: mu * d2_shape,
        c3: -0.5 * th * th + 2.0 * th - 7.0 / 6.0,
        c4: -0.5 * (th - 2.0).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Slow1d,
    Slow2d,
    Fast1d,
    FullySymmetric,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Slow1d => "slow1d",
            Regime::Slow2d => "slow2d",
            Regime::Fast1d => "fast1d",
            Regime::FullySymmetric => "fully_symmetric",
        }
    }

    pub fn is_fast(&self) -> bool {
        matches!(self, Regime::Fast1d)
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Regime::Slow1d | Regime::Fast1d => Some(1),
            Regime::Slow2d => Some(2),
            Regime::FullySymmetric => None,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slow1d" => Ok(Regime::Slow1d),
            "slow2d" => Ok(Regime::Slow2d),
            "fast1d" => Ok(Regime::Fast1d),
            "fully_symmetric" => Ok(Regime::FullySymmetric),
            other => Err(Error::ConfigInvalid(format!("unknown regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// value == 0
    Eq,
    /// value > 0 (with margin)
    Pos,
    /// value >= 0
    NonNeg,
}

struct Constraint {
    name: &'static str,
    kind: Kind,
    value: f64,
}

impl Constraint {
    fn holds(&self) -> bool {
        match self.kind {
            Kind::Eq => self.value.abs() <= EQ_TOL,
            Kind::Pos => self.value > STRICT_MARGIN,
            Kind::NonNeg => self.value >= -EQ_TOL,
        }
    }

    /// Signed distance into the admissible side (negative when violated).
    fn margin(&self) -> f64 {
        match self.kind {
            Kind::Eq => -self.value.abs(),
            Kind::Pos => self.value - STRICT_MARGIN,
            Kind::NonNeg => self.value,
        }
    }

    fn residual(&self) -> f64 {
        match self.kind {
            Kind::Eq => self.value,
            Kind::Pos => (STRICT_MARGIN - self.value).max(0.0),
            Kind::NonNeg => (-self.value).max(0.0),
        }
    }
}

fn constraints(c: &CoefficientSet, regime: Regime) -> Vec<Constraint> {
    use Kind::*;
    let k = |name, kind, value| Constraint { name, kind, value };
    match regime {
        Regime::Slow1d => vec![
            k("a1 > 0", Pos, c.a1),
            k("d1 > 0", Pos, c.d1),
            k("b1 = c1", Eq, c.b1 - c.c1),
        ],
        Regime::Slow2d => vec![
            k("a1 > 0", Pos, c.a1),
            k("d1 > 0", Pos, c.d1),
            k("a2 = 0", Eq, c.a2),
            k("b1 = c1", Eq, c.b1 - c.c1),
            k("b3 = -c3", Eq, c.b3 + c.c3),
        ],
        Regime::Fast1d => vec![
            k("a1 > 0", Pos, c.a1),
            k("a2 = 0", Eq, c.a2),
            k("d1 = 0", Eq, c.d1),
            k("d2 = 0", Eq, c.d2),
            k("b1 = c1", Eq, c.b1 - c.c1),
            k("b1 < 0", Pos, -c.b1),
            k("b2 + b3 + c2 + c3 = 0", Eq, c.fast_defect()),
        ],
        Regime::FullySymmetric => vec![
            k("a1 >= 0", NonNeg, c.a1),
            k("d1 >= 0", NonNeg, c.d1),
            k("a2 = 0", Eq, c.a2),
            k("d2 = 0", Eq, c.d2),
            k("b1 = c1", Eq, c.b1 - c.c1),
            k("b2 = -c2", Eq, c.b2 + c.c2),
            k("b3 = -c3", Eq, c.b3 + c.c3),
            k("b4 = c4", Eq, c.b4 - c.c4),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub dim: usize,
    pub linear_wellposed: bool,
    pub slow1d_ok: bool,
    pub slow2d_ok: bool,
    pub fast1d_ok: bool,
    pub fully_symmetric: bool,
    pub violations: Vec<Violation>,
}

impl RegimeReport {
    pub fn ok_for(&self, regime: Regime) -> bool {
        match regime {
            Regime::Slow1d => self.slow1d_ok,
            Regime::Slow2d => self.slow2d_ok,
            Regime::Fast1d => self.fast1d_ok,
            Regime::FullySymmetric => self.fully_symmetric,
        }
    }

    pub fn violations_for(&self, check: &str) -> impl Iterator<Item = &Violation> {
        let check = check.to_string();
        self.violations.iter().filter(move |v| v.check == check)
    }
}

/// Linear well-posedness of the flat-bottom linearisation: either
/// `a1, d1 >= 0, b1, c1 <= 0` or `a1, d1 >= 0, b1 = c1 > 0`.
fn wellposed_branches(c: &CoefficientSet) -> (Vec<Constraint>, Vec<Constraint>) {
    use Kind::*;
    let k = |name, kind, value| Constraint { name, kind, value };
    let first = vec![
        k("a1 >= 0", NonNeg, c.a1),
        k("d1 >= 0", NonNeg, c.d1),
        k("b1 <= 0", NonNeg, -c.b1),
        k("c1 <= 0", NonNeg, -c.c1),
    ];
    let second = vec![
        k("a1 >= 0", NonNeg, c.a1),
        k("d1 >= 0", NonNeg, c.d1),
        k("b1 = c1", Eq, c.b1 - c.c1),
        k("b1 > 0", Pos, c.b1),
    ];
    (first, second)
}

pub fn validate_coefficients(c: &CoefficientSet, dim: usize) -> RegimeReport {
    let mut violations = Vec::new();
    let mut record = |check: &str, list: &[Constraint]| -> bool {
        let mut ok = true;
        for con in list.iter().filter(|con| !con.holds()) {
            ok = false;
            violations.push(Violation {
                check: check.to_string(),
                constraint: con.name.to_string(),
                residual: con.residual(),
            });
        }
        ok
    };

    let (first, second) = wellposed_branches(c);
    let first_ok = first.iter().all(Constraint::holds);
    let second_ok = second.iter().all(Constraint::holds);
    let linear_wellposed = first_ok || second_ok;
    if !linear_wellposed {
        record("linear_wellposed (b1,c1 <= 0 branch)", &first);
        record("linear_wellposed (b1 = c1 > 0 branch)", &second);
    }

    let regime_flag = |regime: Regime, record: &mut dyn FnMut(&str, &[Constraint]) -> bool| {
        let ok = record(regime.name(), &constraints(c, regime));
        let dim_ok = regime.dim().is_none_or(|d| d == dim);
        if !dim_ok {
            record(
                regime.name(),
                &[Constraint {
                    name: "dimension matches regime",
                    kind: Kind::Eq,
                    value: dim as f64 - regime.dim().unwrap() as f64,
                }],
            );
        }
        ok && dim_ok
    };
    let slow1d_ok = regime_flag(Regime::Slow1d, &mut record);
    let slow2d_ok = regime_flag(Regime::Slow2d, &mut record);
    let fast1d_ok = regime_flag(Regime::Fast1d, &mut record);
    let fully_symmetric = regime_flag(Regime::FullySymmetric, &mut record);

    RegimeReport {
        dim,
        linear_wellposed,
        slow1d_ok,
        slow2d_ok,
        fast1d_ok,
        fully_symmetric,
        violations,
    }
}

/// Search for BBM parameters realising `target`.
///
/// The fast and two-dimensional slow regimes have closed-form reductions
/// (`lambda2 = mu = 1, theta = 0, lambda1 = -1/3` and `theta = 0.7,
/// lambda2 = 1` with `lambda1, mu` solving `b3 = -c3`, `b1 = c1`). Other
/// targets run a deterministic scan over `theta`: the coefficients are affine
/// in `(lambda1, lambda2, mu)` for fixed `theta`, so the equality constraints
/// are solved in the least-squares sense closest to a seed-derived point of
/// the search box, and the feasible `theta` interval around the best scan
/// point is located by bisection. The midpoint of that interval is returned.
pub fn find_bbm_for_regime(target: Regime, seed: f64) -> Result<BbmParams> {
    let closed = match target {
        Regime::Fast1d => Some(fast_closed_form(0.0)),
        Regime::Slow2d => Some(slow2d_closed_form(0.7)),
        _ => None,
    };
    if let Some(p) = closed {
        let c = coefficients_from_bbm(&p)?;
        if validate_coefficients(&c, target.dim().unwrap_or(1)).ok_for(target) {
            return Ok(p);
        }
    }
    search(target, seed)
}

/// Fast-regime family: `lambda2 = mu = 1`, `lambda1 = (theta^2 - 1/3) / (1 - theta^2)`,
/// admissible for `theta` in `[0, 1/sqrt 3)`.
pub fn fast_closed_form(theta: f64) -> BbmParams {
    let t2 = theta * theta;
    BbmParams {
        lambda1: (t2 - 1.0 / 3.0) / (1.0 - t2),
        lambda2: 1.0,
        mu: 1.0,
        theta,
    }
}

/// A one-dimensional slow-regime set with `a1, d1 > 0` and `b1 = c1 = -23/150`:
/// `theta = 0.8`, `mu = -1/2`, `lambda2 = 1`, `lambda1 = -23/54`.
pub fn slow_reference() -> BbmParams {
    BbmParams {
        lambda1: -23.0 / 54.0,
        lambda2: 1.0,
        mu: -0.5,
        theta: 0.8,
    }
}

fn slow2d_closed_form(theta: f64) -> BbmParams {
    let t2 = theta * theta;
    let b1 = t2 - 4.0 * theta + 7.0 / 3.0;
    BbmParams {
        lambda1: b1 / (1.0 - t2),
        lambda2: 1.0,
        mu: b1 / (t2 - 1.0 / 3.0),
        theta,
    }
}

const THETA_GRID: usize = 1001;
const BISECTION_STEPS: usize = 60;

fn search(target: Regime, seed: f64) -> Result<BbmParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.to_bits());
    let anchor = [
        rng.gen_range(-SEARCH_BOX..SEARCH_BOX),
        rng.gen_range(-SEARCH_BOX..SEARCH_BOX),
        rng.gen_range(-SEARCH_BOX..SEARCH_BOX),
    ];
    let margin_at = |theta: f64| -> Option<(f64, BbmParams)> { feasible_point(target, theta, anchor) };

    let thetas: Vec<f64> = (0..THETA_GRID)
        .map(|i| i as f64 / (THETA_GRID - 1) as f64)
        .collect();
    let best = thetas
        .iter()
        .enumerate()
        .filter_map(|(i, &th)| margin_at(th).map(|(m, _)| (i, m)))
        .filter(|&(_, m)| m > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let Some((best_idx, _)) = best else {
        return Err(Error::Infeasible(target.name().to_string()));
    };

    let feasible = |th: f64| margin_at(th).is_some_and(|(m, _)| m > 0.0);
    let edge = |inside: f64, outside: f64| -> f64 {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            if feasible(mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        a
    };
    let mut lo_idx = best_idx;
    while lo_idx > 0 && feasible(thetas[lo_idx - 1]) {
        lo_idx -= 1;
    }
    let mut hi_idx = best_idx;
    while hi_idx + 1 < THETA_GRID && feasible(thetas[hi_idx + 1]) {
        hi_idx += 1;
    }
    let lo = if lo_idx > 0 {
        edge(thetas[lo_idx], thetas[lo_idx - 1])
    } else {
        thetas[0]
    };
    let hi = if hi_idx + 1 < THETA_GRID {
        edge(thetas[hi_idx], thetas[hi_idx + 1])
    } else {
        thetas[THETA_GRID - 1]
    };

    let candidates = [0.5 * (lo + hi), thetas[best_idx]];
    for th in candidates {
        if let Some((m, p)) = margin_at(th) {
            if m > 0.0 {
                let c = coefficients_from_bbm(&p)?;
                let dim = target.dim().unwrap_or(1);
                if validate_coefficients(&c, dim).ok_for(target) {
                    return Ok(p);
                }
            }
        }
    }
    Err(Error::Infeasible(target.name().to_string()))
}

/// For fixed `theta`, the point satisfying the equality constraints that is
/// closest to `anchor`, with its inequality margin. `None` when the equality
/// system is inconsistent.
fn feasible_point(target: Regime, theta: f64, anchor: [f64; 3]) -> Option<(f64, BbmParams)> {
    let at = |x: [f64; 3]| -> Vec<Constraint> {
        let p = BbmParams {
            lambda1: x[0],
            lambda2: x[1],
            mu: x[2],
            theta,
        };
        // theta is in [0, 1] by construction
        constraints(&coefficients_from_bbm(&p).unwrap(), target)
    };

    let base = at([0.0; 3]);
    let eq_rows: Vec<usize> = base
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == Kind::Eq)
        .map(|(i, _)| i)
        .collect();

    let mut x = anchor;
    if !eq_rows.is_empty() {
        // Constraint values are affine in x: value(x) = value(0) + A x.
        let unit = |k: usize| {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            at(e)
        };
        let cols = [unit(0), unit(1), unit(2)];
        let a = nalgebra::DMatrix::from_fn(eq_rows.len(), 3, |r, k| {
            cols[k][eq_rows[r]].value - base[eq_rows[r]].value
        });
        let anchor_vals = at(anchor);
        let rhs = nalgebra::DVector::from_fn(eq_rows.len(), |r, _| -anchor_vals[eq_rows[r]].value);
        let svd = a.clone().svd(true, true);
        let dx = svd.solve(&rhs, 1e-12).ok()?;
        for k in 0..3 {
            x[k] += dx[k];
        }
        let residual = (&a * &dx - &rhs).norm();
        if !residual.is_finite() || residual > EQ_TOL {
            return None;
        }
    }

    let cons = at(x);
    if cons
        .iter()
        .any(|c| c.kind == Kind::Eq && c.value.abs() > EQ_TOL)
    {
        return None;
    }
    let ineq_margin = cons
        .iter()
        .filter(|c| c.kind != Kind::Eq)
        .map(Constraint::margin)
        .fold(f64::INFINITY, f64::min);
    let box_margin = x
        .iter()
        .map(|v| SEARCH_BOX - v.abs())
        .fold(f64::INFINITY, f64::min);
    Some((
        ineq_margin.min(box_margin),
        BbmParams {
            lambda1: x[0],
            lambda2: x[1],
            mu: x[2],
            theta,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub xi: f64,
    pub epsilon: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Set when the radicand is negative (or the denominator vanishes).
    pub ill_posed: bool,
}

/// Eigenvalues of the flat-bottom linearisation at wavenumber `xi`.
pub fn dispersion_eigenvalues(c: &CoefficientSet, epsilon: f64, xi: f64) -> DispersionSample {
    let k2 = xi * xi;
    let half = 0.5 * epsilon;
    let num = (1.0 - half * c.b1 * k2) * (1.0 - half * c.c1 * k2);
    let den = (1.0 + half * c.a1 * k2) * (1.0 + half * c.d1 * k2);
    let (lambda_plus, ill_posed) = if den == 0.0 {
        (Complex64::new(0.0, f64::INFINITY), xi != 0.0)
    } else {
        let rad = num / den;
        if rad >= 0.0 {
            (Complex64::new(0.0, xi.abs() * rad.sqrt()), false)
        } else {
            // sqrt of a negative radicand is imaginary: the pair becomes real
            (Complex64::new(-xi.abs() * (-rad).sqrt(), 0.0), true)
        }
    };
    DispersionSample {
        xi,
        epsilon,
        lambda_plus,
        lambda_minus: -lambda_plus,
        ill_posed,
    }
}

/// `|lambda_+|` for still-water depth `depth` instead of 1: the constant-depth
/// linearisation is the flat one with `epsilon -> epsilon depth^2` and an
/// overall `sqrt(depth)` wave speed.
pub fn dispersion_speed_at_depth(c: &CoefficientSet, epsilon: f64, xi: f64, depth: f64) -> f64 {
    let s = dispersion_eigenvalues(c, epsilon * depth * depth, xi);
    depth.sqrt() * s.lambda_plus.norm()
}
