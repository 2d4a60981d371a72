//! Energy functionals monitored during runs and checked by the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{x_norm_sq, NormSpec};
use crate::operators::{apply_mass1, apply_mass2, r_coefficient, Model, State, TimeDerivatives};

/// Column order of `energy.csv` (schema version 1).
pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "E_s",
    "calE_s",
    "E_fast",
    "E_tilde2",
    "calE_fast",
    "V_X2e3",
    "Vt_X1e2",
    "Vtt_X0e",
    "eta_X2e2",
    "etat_X1e",
    "etatt_L2",
    "E_mod",
    "V_Xs",
    "eta_Xs",
    "Es_ratio",
];
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One monitoring sample. Fields that do not apply to the regime are `None`
/// and written as empty CSV cells. Norm components are squared norms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub e_s: Option<f64>,
    pub cal_e_s: Option<f64>,
    pub e_fast: Option<f64>,
    pub e_tilde2: Option<f64>,
    pub cal_e_fast: Option<f64>,
    pub v_x2e3: Option<f64>,
    pub vt_x1e2: Option<f64>,
    pub vtt_x0e: Option<f64>,
    pub eta_x2e2: Option<f64>,
    pub etat_x1e: Option<f64>,
    pub etatt_l2: Option<f64>,
    pub e_mod: Option<f64>,
    pub v_xs: Option<f64>,
    pub eta_xs: Option<f64>,
    pub es_ratio: Option<f64>,
}

impl EnergyRecord {
    fn cells(&self) -> [Option<f64>; 16] {
        [
            Some(self.t),
            self.e_s,
            self.cal_e_s,
            self.e_fast,
            self.e_tilde2,
            self.cal_e_fast,
            self.v_x2e3,
            self.vt_x1e2,
            self.vtt_x0e,
            self.eta_x2e2,
            self.etat_x1e,
            self.etatt_l2,
            self.e_mod,
            self.v_xs,
            self.eta_xs,
            self.es_ratio,
        ]
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.cells()
            .iter()
            .map(|c| c.map(|v| format!("{v:.12e}")).unwrap_or_default())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// The monitored total: `calE_fast` in the fast regime, `E_s` otherwise.
    pub fn total(&self) -> Option<f64> {
        self.cal_e_fast.or(self.e_s)
    }

    pub fn is_finite(&self) -> bool {
        self.cells().iter().flatten().all(|v| v.is_finite())
    }
}

/// `(E_s, calE_s)` with `E_s = ((1 - eps/2 P1) V | V)_{H^s} + ((1 - eps/2 P2) eta | eta)_{H^s}`.
pub fn energy_slow(model: &Model, state: &State, s: f64) -> Result<(f64, f64)> {
    let rec = slow_record(model, state, s)?;
    Ok((rec.e_s.unwrap(), rec.cal_e_s.unwrap()))
}

fn slow_record(model: &Model, state: &State, s: f64) -> Result<EnergyRecord> {
    let (c, eps, topo) = (&model.coeffs, model.epsilon, &model.topo);
    let m1v = apply_mass1(topo, c, eps, &state.v)?;
    let m2e = apply_mass2(topo, c, eps, &state.eta)?;
    let e_s = m1v.sobolev_inner(&state.v, s) + m2e.sobolev_inner(&state.eta, s);
    let v_xs = x_norm_sq(&state.v, NormSpec::vector(s, 1, eps))?;
    let eta_xs = x_norm_sq(&state.eta, NormSpec::scalar(s, 1, eps))?;
    let cal = v_xs + eta_xs;
    Ok(EnergyRecord {
        t: state.t,
        e_s: Some(e_s),
        cal_e_s: Some(cal),
        v_xs: Some(v_xs),
        eta_xs: Some(eta_xs),
        es_ratio: Some(if cal > 0.0 { e_s / cal } else { 1.0 }),
        ..Default::default()
    })
}

/// Fast-regime functionals from a state and its time derivatives.
pub fn energy_fast(model: &Model, state: &State, d: &TimeDerivatives) -> Result<EnergyRecord> {
    let (c, eps, topo) = (&model.coeffs, model.epsilon, &model.topo);
    let mut e = 0.0;
    for (v, eta) in [
        (&state.v, &state.eta),
        (&d.v_t, &d.eta_t),
        (&d.v_tt, &d.eta_tt),
    ] {
        e += apply_mass1(topo, c, eps, v)?.inner(v) + eta.inner(eta);
    }

    let vt = &d.v_t.components[0];
    let r = r_coefficient(topo, c);
    let vtx = vt.dx();
    let vtxx = vt.dxx();
    let e21 = r.mul_pointwise(&topo.sqrt_h).mul_pointwise(&vtx).inner(&vtx);
    let e22 = -0.5 * eps * c.b1 * r.mul_pointwise(&topo.h52).mul_pointwise(&vtxx).inner(&vtxx);
    let e_tilde2 = e21 + e22;

    let v = &state.v.components[0];
    let v_x2e3 = x_norm_sq(v, NormSpec::scalar(2.0, 3, eps))?;
    let vt_x1e2 = x_norm_sq(vt, NormSpec::scalar(1.0, 2, eps))?;
    let vtt_x0e = x_norm_sq(&d.v_tt.components[0], NormSpec::scalar(0.0, 1, eps))?;
    let eta_x2e2 = x_norm_sq(&state.eta, NormSpec::scalar(2.0, 2, eps))?;
    let etat_x1e = x_norm_sq(&d.eta_t, NormSpec::scalar(1.0, 1, eps))?;
    let etatt_l2 = d.eta_tt.inner(&d.eta_tt);
    Ok(EnergyRecord {
        t: state.t,
        e_fast: Some(e),
        e_tilde2: Some(e_tilde2),
        cal_e_fast: Some(v_x2e3 + vt_x1e2 + vtt_x0e + eta_x2e2 + etat_x1e + etatt_l2),
        v_x2e3: Some(v_x2e3),
        vt_x1e2: Some(vt_x1e2),
        vtt_x0e: Some(vtt_x0e),
        eta_x2e2: Some(eta_x2e2),
        etat_x1e: Some(etat_x1e),
        etatt_l2: Some(etatt_l2),
        e_mod: Some(e + 0.5 * eps * e_tilde2),
        ..Default::default()
    })
}

/// Regime-appropriate record for a state (runs the cascade in the fast regime).
pub fn monitor(model: &Model, state: &State, s: f64) -> Result<EnergyRecord> {
    if model.regime.is_fast() {
        let d = model.time_derivative_cascade(state)?;
        energy_fast(model, state, &d)
    } else {
        slow_record(model, state, s)
    }
}

/// `|V0|^2_{X^2_{eps^3}} + |eta0|^2_{X^2_{eps^2}}` (scalar norms on each component).
pub fn initial_data_norm(state: &State, epsilon: f64) -> Result<f64> {
    let mut total = x_norm_sq(&state.eta, NormSpec::scalar(2.0, 2, epsilon))?;
    for v in &state.v.components {
        total += x_norm_sq(v, NormSpec::scalar(2.0, 3, epsilon))?;
    }
    Ok(total)
}

/// Functionals at `t = 0` together with the data norm they are compared to.
pub fn initial_energy(model: &Model, state: &State, s: f64) -> Result<(EnergyRecord, f64)> {
    Ok((monitor(model, state, s)?, initial_data_norm(state, model.epsilon)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, ScalarField, VectorField};
    use crate::operators::Topography;
    use crate::params::{coefficients_from_bbm, BbmParams, CoefficientSet, Regime};
    use std::f64::consts::PI;

    fn fast_model(amp: f64, eps: f64) -> Model {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let h = ScalarField::from_fn(&g, |x, _| 1.0 - amp * x.sin());
        let c = coefficients_from_bbm(&BbmParams::new(-1.0 / 3.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
        Model::new(c, eps, Regime::Fast1d, Topography::from_depth(&h, 0.5).unwrap(), true).unwrap()
    }

    #[test]
    fn slow_energy_of_sine() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let c = CoefficientSet {
            a1: 0.8,
            d1: 0.2,
            ..Default::default()
        };
        let topo = Topography::from_depth(&ScalarField::constant(&g, 1.0), 0.5).unwrap();
        let m = Model::new(c, 0.1, Regime::Slow1d, topo, true).unwrap();
        let v = VectorField {
            components: vec![ScalarField::from_fn(&g, |x, _| x.sin())],
        };
        let st = State::new(v, ScalarField::zeros(&g), 0.0).unwrap();
        let (e, cal) = energy_slow(&m, &st, 0.0).unwrap();
        assert!((e - (PI + 0.05 * 0.8 * PI)).abs() < 1e-12);
        assert!(cal > 0.0);
        let (z, zc) = energy_slow(&m, &State::zeros(&g), 2.0).unwrap();
        assert_eq!((z, zc), (0.0, 0.0));
    }

    #[test]
    fn fast_energy_zero_and_flat() {
        let m = fast_model(0.2, 0.1);
        let g = m.topo.grid().clone();
        let r = monitor(&m, &State::zeros(&g), 2.0).unwrap();
        assert_eq!(r.cal_e_fast, Some(0.0));
        assert_eq!(r.e_fast, Some(0.0));

        let flat = fast_model(0.0, 0.1);
        let eta = ScalarField::from_fn(&g, |x, _| (2.0 * x).cos());
        let v = VectorField {
            components: vec![ScalarField::from_fn(&g, |x, _| x.sin())],
        };
        let r = monitor(&flat, &State::new(v, eta, 0.0).unwrap(), 2.0).unwrap();
        assert_eq!(r.e_tilde2, Some(0.0));
        assert!(r.cal_e_fast.unwrap() >= r.e_fast.unwrap());
    }

    #[test]
    fn data_norm_of_sine_modes() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let eps: f64 = 0.1;
        let v = VectorField {
            components: vec![ScalarField::from_fn(&g, |x, _| (2.0 * x).sin())],
        };
        let eta = ScalarField::from_fn(&g, |x, _| (3.0 * x).cos());
        let st = State::new(v, eta, 0.0).unwrap();
        let want_v = PI * (5f64.powi(2) + eps.powi(3) * 5f64.powi(5));
        let want_e = PI * (10f64.powi(2) + eps.powi(2) * 10f64.powi(4));
        let got = initial_data_norm(&st, eps).unwrap();
        assert!((got - want_v - want_e).abs() < 1e-10 * got);
    }

    #[test]
    fn csv_row_leaves_absent_cells_empty() {
        let r = EnergyRecord {
            t: 0.5,
            e_s: Some(1.0),
            ..Default::default()
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_COLUMNS.len());
        assert!(row.starts_with("5.000000000000e-1,1.000000000000e0,,"));
    }
}
