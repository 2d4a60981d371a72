//! Depth profiles `h = 1 - b` and checks of the hypotheses placed on them.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::params::Regime;

pub const DEFAULT_H0: f64 = 0.5;
pub const MAX_DEPTH: f64 = 2.0;
/// Constant in `|grad h|_{H^{s+2}} <= C0 eps` used for generated slow profiles.
pub const SLOW_C0: f64 = 1.0;
/// Smallness constant `c0` in `|grad h|_{H^s} <= c0 < 1`.
pub const SMALLNESS_C0: f64 = 0.5;
/// Bound on `|d_x h|_{H^4}` for fast profiles.
pub const FAST_H4_BOUND: f64 = 1.0;
const CHECK_TOL: f64 = 1e-9;
const CACHED_ORDERS: usize = 9;

/// One trigonometric term `weight * sin(2 pi (kx x / Lx + ky y / Ly) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub kx: i64,
    #[serde(default)]
    pub ky: i64,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

impl ModeSpec {
    pub fn new(kx: i64) -> Self {
        Self {
            kx,
            ky: 0,
            weight: 1.0,
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Flat,
    /// Scaled so that `|grad h|_{H^{s+2}} = C0 * scale` (normally `scale = eps`).
    Slow { scale: f64, modes: Vec<ModeSpec> },
    /// `h = 1 - amplitude * sum`, shrunk if needed so that `|d_x h|_{H^4} <= 1`.
    Fast { amplitude: f64, modes: Vec<ModeSpec> },
    /// Depth samples on the grid nodes.
    Custom { values: Vec<f64> },
}

impl Profile {
    pub fn tag(&self) -> &'static str {
        match self {
            Profile::Flat => "flat",
            Profile::Slow { .. } => "slow",
            Profile::Fast { .. } => "fast",
            Profile::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bathymetry {
    pub h: ScalarField,
    pub h0: f64,
    pub profile_tag: String,
    /// Sobolev index used to scale slow profiles.
    pub s: f64,
    grad_norms: Vec<f64>,
}

fn trig_sum(grid: &Arc<Grid>, modes: &[ModeSpec]) -> ScalarField {
    let (lx, ly) = (grid.length(0), grid.length(1));
    let two_d = grid.dim() == 2;
    ScalarField::from_fn(grid, |x, y| {
        modes
            .iter()
            .map(|m| {
                let ky = if two_d { m.ky as f64 * y / ly } else { 0.0 };
                m.weight * (2.0 * PI * (m.kx as f64 * x / lx + ky) + m.phase).sin()
            })
            .sum()
    })
}

/// `|grad f|_{H^m}`.
pub fn grad_norm(f: &ScalarField, m: f64) -> f64 {
    f.gradient().sobolev_norm(m)
}

impl Bathymetry {
    /// Wrap a depth field as is, without rescaling.
    pub fn from_depth(h: ScalarField, h0: f64, tag: &str) -> Self {
        let grad_norms = (0..CACHED_ORDERS).map(|m| grad_norm(&h, m as f64)).collect();
        Self {
            h,
            h0,
            profile_tag: tag.to_string(),
            s: 0.0,
            grad_norms,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.h.grid
    }

    /// `|grad h|_{H^m}`; integer orders are cached.
    pub fn grad_norm(&self, m: f64) -> f64 {
        if m.fract() == 0.0 && m >= 0.0 && (m as usize) < self.grad_norms.len() {
            self.grad_norms[m as usize]
        } else {
            grad_norm(&self.h, m)
        }
    }

    pub fn is_flat(&self) -> bool {
        self.h.values.iter().all(|&v| v == 1.0)
    }
}

pub fn make_bathymetry(grid: &Arc<Grid>, profile: &Profile, s: f64, h0: f64) -> Result<Bathymetry> {
    if !(h0 > 0.0 && h0 <= 1.0) {
        return Err(Error::CavitationViolation(format!(
            "floor h0 = {h0} must lie in (0, 1]"
        )));
    }
    let deviation = match profile {
        Profile::Flat => ScalarField::zeros(grid),
        Profile::Slow { scale, modes } => {
            let t = trig_sum(grid, modes);
            let n = grad_norm(&t, s + 2.0);
            if n == 0.0 {
                ScalarField::zeros(grid)
            } else {
                &t * (-SLOW_C0 * scale / n)
            }
        }
        Profile::Fast { amplitude, modes } => {
            let t = &trig_sum(grid, modes) * -amplitude;
            let n = t.derivative(0, 1).sobolev_norm(4.0);
            if n > FAST_H4_BOUND {
                t * (FAST_H4_BOUND / n)
            } else {
                t
            }
        }
        Profile::Custom { values } => {
            let h = ScalarField::from_values(grid, values.clone())?;
            h.map(|v| v - 1.0)
        }
    };
    if !deviation.is_finite() {
        return Err(Error::CavitationViolation("depth profile is not finite".into()));
    }
    let lo = deviation.min();
    let hi = deviation.max();
    let mut gamma: f64 = 1.0;
    if 1.0 + lo < h0 {
        gamma = gamma.min((1.0 - h0) / -lo);
    }
    if 1.0 + hi > MAX_DEPTH {
        gamma = gamma.min((MAX_DEPTH - 1.0) / hi);
    }
    let h = deviation.map(|d| 1.0 + gamma * d);
    if h.min() < h0 - CHECK_TOL || h.max() > MAX_DEPTH + CHECK_TOL {
        return Err(Error::CavitationViolation(format!(
            "depth range [{}, {}] outside [{h0}, {MAX_DEPTH}]",
            h.min(),
            h.max()
        )));
    }
    if gamma < 1.0 {
        log::info!("bathymetry deviation rescaled by {gamma:.4} to respect the depth range");
    }
    let mut b = Bathymetry::from_depth(h, h0, profile.tag());
    b.s = s;
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathymetryReport {
    pub checks: Vec<HypothesisCheck>,
}

impl BathymetryReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {:.6e} vs bound {:.6e}", c.name, c.value, c.bound))
            .collect()
    }
}

fn upper(name: &str, value: f64, bound: f64) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        passed: value <= bound * (1.0 + CHECK_TOL) + CHECK_TOL,
        value,
        bound,
    }
}

pub fn validate_bathymetry(b: &Bathymetry, regime: Regime, s: f64, epsilon: f64) -> BathymetryReport {
    let mut checks = vec![
        HypothesisCheck {
            name: "non_cavitation".into(),
            passed: b.h0 > 0.0 && b.h.min() >= b.h0 - CHECK_TOL,
            value: b.h.min(),
            bound: b.h0,
        },
        upper("max_depth", b.h.max(), MAX_DEPTH),
    ];
    if regime.is_fast() {
        checks.push(HypothesisCheck {
            name: "one_dimensional".into(),
            passed: b.grid().dim() == 1,
            value: b.grid().dim() as f64,
            bound: 1.0,
        });
        checks.push(upper("fast_h4", b.h.derivative(0, 1).sobolev_norm(4.0), FAST_H4_BOUND));
    } else {
        checks.push(upper("slow_variation", b.grad_norm(s + 2.0), SLOW_C0 * epsilon));
        checks.push(upper("smallness", b.grad_norm(s), SMALLNESS_C0));
    }
    BathymetryReport { checks }
}
