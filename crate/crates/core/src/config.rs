//! Run configuration (TOML) and its validation into a ready-to-integrate model.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bathymetry::{make_bathymetry, validate_bathymetry, Bathymetry, BathymetryReport, ModeSpec, Profile, DEFAULT_H0};
use crate::energy::initial_data_norm;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::operators::{flat_symbols, Model, State, Topography};
use crate::params::{coefficients_from_bbm, validate_coefficients, BbmParams, CoefficientSet, Regime, RegimeReport};
use crate::timestepper::DEFAULT_SAFETY;
use crate::verify::random_band_limited;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Vec<usize>,
    #[serde(default)]
    pub length: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: vec![256],
            length: vec![2.0 * PI],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathymetryKind {
    Flat,
    Slow,
    Fast,
    Custom,
}

fn default_modes() -> Vec<ModeSpec> {
    vec![ModeSpec::new(1)]
}

fn default_amplitude() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathymetrySpec {
    pub kind: BathymetryKind,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeSpec>,
    /// Fast profiles: peak deviation before the `H^4` cap.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Slow profiles: target `|grad h|_{H^{s+2}}` in units of the bound; defaults to `epsilon`.
    #[serde(default)]
    pub scale: Option<f64>,
    /// Custom profiles: depth at every grid point.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl Default for BathymetrySpec {
    fn default() -> Self {
        Self {
            kind: BathymetryKind::Flat,
            modes: default_modes(),
            amplitude: default_amplitude(),
            scale: None,
            values: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Gaussian,
    SingleMode,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Velocity {
    /// `V = 0`.
    Zero,
    /// Right-going long-wave data `V = eta` (per component in 2D: along x).
    Right,
}

fn default_target() -> Option<f64> {
    Some(1.0)
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Rescale so the data norm `|V|^2_{X^2_{eps^3}} + |eta|^2_{X^2_{eps^2}}` equals this.
    #[serde(default = "default_target")]
    pub target_energy: Option<f64>,
    /// Peak value before rescaling (used as is when `target_energy` is absent).
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Gaussian width; defaults to a sixteenth of the domain.
    #[serde(default)]
    pub width: Option<f64>,
    /// Gaussian centre; defaults to the domain centre.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeSpec>,
    #[serde(default = "default_velocity")]
    pub velocity: Velocity,
}

fn default_velocity() -> Velocity {
    Velocity::Right
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            kind: InitialKind::Gaussian,
            target_energy: default_target(),
            amplitude: 1.0,
            width: None,
            center: None,
            modes: default_modes(),
            velocity: default_velocity(),
        }
    }
}

fn default_s() -> f64 {
    2.0
}
fn default_safety() -> f64 {
    DEFAULT_SAFETY
}
fn default_stride() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_h0() -> f64 {
    DEFAULT_H0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub regime: Regime,
    pub epsilon: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    /// `T_end = t_end_factor / epsilon`.
    #[serde(default = "one")]
    pub t_end_factor: f64,
    #[serde(default = "default_safety")]
    pub dt_safety: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_h0")]
    pub h0: f64,
    #[serde(default)]
    pub params: Option<BbmParams>,
    #[serde(default)]
    pub coefficients: Option<CoefficientSet>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub bathymetry: BathymetrySpec,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Used by `sweep` when no list is given on the command line.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Minimal valid configuration for a regime and coefficient source.
    pub fn new(regime: Regime, epsilon: f64, params: BbmParams) -> Self {
        Self {
            regime,
            epsilon,
            s: default_s(),
            t_end_factor: 1.0,
            dt_safety: DEFAULT_SAFETY,
            sample_stride: default_stride(),
            nonlinear: true,
            seed: 0,
            h0: DEFAULT_H0,
            params: Some(params),
            coefficients: None,
            grid: GridSpec::default(),
            bathymetry: BathymetrySpec::default(),
            initial: InitialSpec::default(),
            epsilons: None,
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn t_end(&self) -> f64 {
        self.t_end_factor / self.epsilon
    }

    pub fn coefficient_set(&self) -> Result<CoefficientSet> {
        match (&self.params, &self.coefficients) {
            (Some(p), None) => {
                p.check().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
                coefficients_from_bbm(p)
            }
            (None, Some(c)) => Ok(*c),
            _ => Err(Error::ConfigInvalid(
                "exactly one of [params] or [coefficients] must be given".into(),
            )),
        }
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        let dim = self.grid.n.len();
        let lengths = if self.grid.length.is_empty() {
            vec![2.0 * PI; dim]
        } else {
            self.grid.length.clone()
        };
        if lengths.len() != dim {
            return Err(Error::ConfigInvalid("grid.n and grid.length differ in length".into()));
        }
        Grid::new(dim, &self.grid.n, &lengths).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn profile(&self) -> Result<Profile> {
        let b = &self.bathymetry;
        Ok(match b.kind {
            BathymetryKind::Flat => Profile::Flat,
            BathymetryKind::Slow => Profile::Slow {
                scale: b.scale.unwrap_or(self.epsilon),
                modes: b.modes.clone(),
            },
            BathymetryKind::Fast => Profile::Fast {
                amplitude: b.amplitude,
                modes: b.modes.clone(),
            },
            BathymetryKind::Custom => Profile::Custom {
                values: b
                    .values
                    .clone()
                    .ok_or_else(|| Error::ConfigInvalid("custom bathymetry needs `values`".into()))?,
            },
        })
    }

    /// Check everything and assemble model and initial state.
    pub fn prepare(&self) -> Result<Prepared> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::ConfigInvalid(format!("epsilon = {} not in (0, 1)", self.epsilon)));
        }
        if !(self.t_end_factor > 0.0 && self.t_end_factor.is_finite()) {
            return Err(Error::ConfigInvalid("t_end_factor must be positive".into()));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::ConfigInvalid("dt_safety must lie in (0, 1]".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::ConfigInvalid("sample_stride must be at least 1".into()));
        }
        if !(self.s >= 0.0) {
            return Err(Error::ConfigInvalid("s must be non-negative".into()));
        }
        let coeffs = self.coefficient_set()?;
        let grid = self.build_grid()?;
        let regime_report = validate_coefficients(&coeffs, grid.dim());
        if !regime_report.ok_for(self.regime) {
            let why: Vec<String> = regime_report
                .violations
                .iter()
                .filter(|v| v.check == self.regime.name() || v.check == "linear_wellposed")
                .map(|v| format!("{}: {} (residual {:.3e})", v.check, v.constraint, v.residual))
                .collect();
            return Err(Error::ConfigInvalid(format!(
                "coefficients do not satisfy the {} regime: {}",
                self.regime.name(),
                why.join("; ")
            )));
        }
        let bathymetry = make_bathymetry(&grid, &self.profile()?, self.s, self.h0)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        let bathymetry_report = validate_bathymetry(&bathymetry, self.regime, self.s, self.epsilon);
        if !bathymetry_report.all_passed() {
            let mut why = bathymetry_report.failures();
            if let Some(c) = bathymetry_report.get("slow_variation").filter(|c| !c.passed) {
                why.push(format!(
                    "slow-oscillation bound |grad h|_H^(s+2) <= C0 eps violated ({:.4e} > {:.4e})",
                    c.value, c.bound
                ));
            }
            return Err(Error::ConfigInvalid(format!("bathymetry rejected: {}", why.join("; "))));
        }
        let topo = Topography::new(&bathymetry)?;
        let model = Model::new(coeffs, self.epsilon, self.regime, topo, self.nonlinear)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        let state = initial_state(&grid, &self.initial, &coeffs, self.epsilon, self.seed)?;
        Ok(Prepared {
            model,
            state,
            bathymetry,
            regime_report,
            bathymetry_report,
        })
    }
}

pub struct Prepared {
    pub model: Model,
    pub state: State,
    pub bathymetry: Bathymetry,
    pub regime_report: RegimeReport,
    pub bathymetry_report: BathymetryReport,
}

fn periodic_gaussian(grid: &Arc<Grid>, center: &[f64], width: f64) -> ScalarField {
    let dim = grid.dim();
    ScalarField::from_fn(grid, |x, y| {
        let p = [x, y];
        let mut r2 = 0.0;
        for a in 0..dim {
            let l = grid.length(a);
            let d = (p[a] - center[a]).rem_euclid(l);
            let d = d.min(l - d);
            r2 += d * d;
        }
        (-0.5 * r2 / (width * width)).exp()
    })
}

/// Initial surface and velocity. With `Velocity::Right` on a single mode the
/// flat-bottom right-going eigenvector is used; otherwise `V = eta` along x.
pub fn initial_state(
    grid: &Arc<Grid>,
    spec: &InitialSpec,
    coeffs: &CoefficientSet,
    epsilon: f64,
    seed: u64,
) -> Result<State> {
    let dim = grid.dim();
    let eta = match spec.kind {
        InitialKind::Gaussian => {
            let width = spec.width.unwrap_or(grid.length(0) / 16.0);
            if !(width > 0.0) {
                return Err(Error::ConfigInvalid("initial.width must be positive".into()));
            }
            let center = spec
                .center
                .clone()
                .unwrap_or_else(|| (0..dim).map(|a| 0.5 * grid.length(a)).collect());
            if center.len() != dim {
                return Err(Error::ConfigInvalid("initial.center has the wrong dimension".into()));
            }
            periodic_gaussian(grid, &center, width) * spec.amplitude
        }
        InitialKind::SingleMode => {
            let m = spec
                .modes
                .first()
                .ok_or_else(|| Error::ConfigInvalid("single_mode needs one entry in initial.modes".into()))?;
            let (kx, ky) = (
                2.0 * PI * m.kx as f64 / grid.length(0),
                if dim > 1 { 2.0 * PI * m.ky as f64 / grid.length(1) } else { 0.0 },
            );
            ScalarField::from_fn(grid, |x, y| spec.amplitude * (kx * x + ky * y + m.phase).cos())
        }
        InitialKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_band_limited(grid, &mut rng, 2.0);
            &f * (spec.amplitude / f.max_abs().max(f64::MIN_POSITIVE))
        }
    }
    .dealias();

    let mut comps = vec![ScalarField::zeros(grid); dim];
    if spec.velocity == Velocity::Right {
        comps[0] = match (spec.kind, spec.modes.first()) {
            (InitialKind::SingleMode, Some(m)) if dim == 1 && m.kx != 0 => {
                let xi = (2.0 * PI * m.kx as f64 / grid.length(0)).abs();
                let (alpha, beta) = flat_symbols(coeffs, epsilon, xi);
                let omega = (alpha * beta).max(0.0).sqrt();
                if omega > 0.0 {
                    &eta * (alpha / omega)
                } else {
                    eta.clone()
                }
            }
            _ => eta.clone(),
        };
    }
    let mut state = State::new(VectorField { components: comps }, eta, 0.0)?;
    if let Some(target) = spec.target_energy {
        if !(target >= 0.0) {
            return Err(Error::ConfigInvalid("initial.target_energy must be non-negative".into()));
        }
        let e0 = initial_data_norm(&state, epsilon)?;
        if e0 > 0.0 {
            let k = (target / e0).sqrt();
            state = state.axpy(k - 1.0, &state.v.clone(), &state.eta.clone());
        }
    }
    if !state.is_finite() {
        return Err(Error::ConfigInvalid("initial data is not finite".into()));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fast_closed_form;

    fn fast_cfg() -> RunConfig {
        let mut c = RunConfig::new(Regime::Fast1d, 0.1, fast_closed_form(0.0));
        c.grid.n = vec![64];
        c.bathymetry.kind = BathymetryKind::Fast;
        c
    }

    #[test]
    fn toml_round_trip() {
        let c = fast_cfg();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let text = r#"
            regime = "fast1d"
            epsilon = 0.1
            [params]
            lambda1 = -0.3333333333333333
            lambda2 = 1.0
            mu = 1.0
            theta = 0.0
            [bathymetry]
            kind = "fast"
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.s, 2.0);
        assert_eq!(c.grid.n, vec![256]);
        assert_eq!(c.initial.kind, InitialKind::Gaussian);
        let p = c.prepare().unwrap();
        let e0 = initial_data_norm(&p.state, 0.1).unwrap();
        assert!((e0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn both_or_neither_coefficient_sources_rejected() {
        let mut c = fast_cfg();
        c.coefficients = Some(c.coefficient_set().unwrap());
        assert!(matches!(c.prepare(), Err(Error::ConfigInvalid(_))));
        c.params = None;
        c.coefficients = None;
        assert!(matches!(c.prepare(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn epsilon_out_of_range() {
        let mut c = fast_cfg();
        c.epsilon = 1.0;
        assert!(matches!(c.prepare(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "regime = \"fast1d\"\nepsilon = 0.1\nbogus = 3\n";
        assert!(matches!(RunConfig::from_toml(text), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn steep_slow_bathymetry_names_the_bound() {
        let mut c = RunConfig::new(Regime::Slow1d, 0.05, BbmParams::new(-23.0 / 54.0, 1.0, -0.5, 0.8).unwrap());
        c.grid.n = vec![64];
        c.bathymetry.kind = BathymetryKind::Slow;
        c.bathymetry.scale = Some(0.5);
        match c.prepare() {
            Err(Error::ConfigInvalid(m)) => assert!(m.contains("slow-oscillation bound"), "{m}"),
            Err(e) => panic!("{e}"),
            Ok(_) => panic!("accepted"),
        }
    }

    #[test]
    fn wrong_regime_coefficients_rejected() {
        let mut c = fast_cfg();
        c.params = Some(BbmParams::new(0.0, 0.0, 0.0, 0.5).unwrap());
        assert!(matches!(c.prepare(), Err(Error::ConfigInvalid(_))));
    }
}
