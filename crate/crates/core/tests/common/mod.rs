//! Dense differentiation-matrix oracles built from the explicit trigonometric
//! interpolant, shared by the oracle and acceptance targets.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use bathywave::fields::{Grid, ScalarField, VectorField};
use bathywave::operators::{apply_bh, apply_ch, apply_p1, apply_p2, r1_coefficient, r2_coefficient, Model, State, Topography};
use bathywave::params::{coefficients_from_bbm, fast_closed_form, BbmParams, CoefficientSet, Regime};
use bathywave::timestepper::step_rk4;

pub const N: usize = 64;
pub const TOL: f64 = 1e-8;

/// Circulant matrix `(1/n) sum_k w(k) e^{i k (x_j - x_l)}` over integer `k` in `(-n/2, n/2]`,
/// with `L = 2 pi`.
pub fn circulant(n: usize, w: impl Fn(i64) -> (f64, f64)) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |j, l| {
        let d = (j as f64 - l as f64) * h;
        let mut s = 0.0;
        for k in -(n as i64 / 2)..=(n as i64 / 2 - 1) {
            let (re, im) = w(k);
            let th = k as f64 * d;
            s += re * th.cos() - im * th.sin();
        }
        s / n as f64
    })
}

pub struct Ops {
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

impl Ops {
    pub fn new(n: usize) -> Self {
        let nyq = -(n as i64) / 2;
        let cut = (n / 3) as i64;
        Self {
            d1: circulant(n, |k| if k == nyq { (0.0, 0.0) } else { (0.0, k as f64) }),
            d2: circulant(n, |k| (-(k as f64) * (k as f64), 0.0)),
            p: circulant(n, |k| if k.abs() <= cut { (1.0, 0.0) } else { (0.0, 0.0) }),
        }
    }
}

pub fn diag(f: &ScalarField) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(f.values.clone()))
}

pub fn vecf(f: &ScalarField) -> DVector<f64> {
    DVector::from_vec(f.values.clone())
}

pub fn max_diff(a: &DVector<f64>, b: &ScalarField) -> f64 {
    a.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn line() -> Arc<Grid> {
    Grid::line(N, 2.0 * PI).unwrap()
}

pub fn depth(g: &Arc<Grid>) -> ScalarField {
    ScalarField::from_fn(g, |x, _| 1.0 - 0.3 * x.sin() + 0.1 * (3.0 * x).cos())
}

pub fn rough(g: &Arc<Grid>, seed: f64) -> ScalarField {
    ScalarField::from_fn(g, |x, _| (seed * x.sin()).exp() * (2.0 * x + seed).cos() + 0.3 * (7.0 * x).sin())
}

pub fn general_coeffs() -> CoefficientSet {
    coefficients_from_bbm(&BbmParams::new(0.2, 0.4, 0.3, 0.5).unwrap()).unwrap()
}

fn p_matrix(o: &Ops, h: &ScalarField, k1: f64, k2: f64) -> DMatrix<f64> {
    let hv = vecf(h);
    let hx = &o.d1 * &hv;
    let h2 = DMatrix::from_diagonal(&hv.map(|v| v * v));
    let hhx = DMatrix::from_diagonal(&hv.component_mul(&hx));
    &o.d1 * (&o.p * (&h2 * &o.d1) * k1 + &o.p * &hhx * k2)
}

/// Largest pointwise gap between `apply_p1` and its dense oracle.
pub fn p1_error() -> f64 {
    let g = line();
    let h = depth(&g);
    let topo = Topography::from_depth(&h, 0.5).unwrap();
    let c = general_coeffs();
    let m = p_matrix(&Ops::new(N), &h, c.a1, c.a2);
    let v = rough(&g, 0.7);
    let got = apply_p1(&topo, &c, &VectorField { components: vec![v.clone()] }).unwrap();
    max_diff(&(&m * vecf(&v)), &got.components[0])
}

pub fn p2_error() -> f64 {
    let g = line();
    let h = depth(&g);
    let topo = Topography::from_depth(&h, 0.5).unwrap();
    let c = general_coeffs();
    let m = p_matrix(&Ops::new(N), &h, c.d1, c.d2);
    let eta = rough(&g, -0.4);
    let got = apply_p2(&topo, &c, &eta).unwrap();
    max_diff(&(&m * vecf(&eta)), &got)
}

/// Gaps for `B_h` and `C_h` with a fast-regime coefficient set.
pub fn bh_ch_errors() -> (f64, f64) {
    let g = line();
    let h = depth(&g);
    let topo = Topography::from_depth(&h, 0.5).unwrap();
    let c = coefficients_from_bbm(&fast_closed_form(0.2)).unwrap();
    let o = Ops::new(N);
    let hv = vecf(&h);
    let hx = &o.d1 * &hv;
    let sq = DMatrix::from_diagonal(&hv.map(f64::sqrt));
    let h2 = DMatrix::from_diagonal(&hv.map(|v| v * v));
    let h32hx = DMatrix::from_diagonal(&hv.map(|v| v * v.sqrt()).component_mul(&hx));
    let r1 = diag(&r1_coefficient(&topo, &c));
    let r2 = diag(&r2_coefficient(&topo, &c));
    let b = &o.p * &sq * &o.d2 * &o.p * &h2 * &o.d1 * c.b1
        + &o.p * &h32hx * &o.d2 * (c.b2 + c.b3)
        + &o.p * &r1 * &o.d1;
    let cm = &o.d1 * &o.p * &h2 * &o.d2 * &o.p * &sq * c.c1 + &o.d2 * &o.p * &h32hx * (c.c2 + c.c3)
        - &o.d1 * &o.p * &r2;
    let f = rough(&g, 0.5);
    (
        max_diff(&(&b * vecf(&f)), &apply_bh(&topo, &c, &f).unwrap()),
        max_diff(&(&cm * vecf(&f)), &apply_ch(&topo, &c, &f).unwrap()),
    )
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn fast_variable_model(nonlinear: bool) -> Model {
    let g = Grid::line(N, 2.0 * PI).unwrap();
    let h = ScalarField::from_fn(&g, |x, _| 1.0 - 0.2 * x.sin());
    let c = coefficients_from_bbm(&fast_closed_form(0.0)).unwrap();
    Model::new(c, 0.1, Regime::Fast1d, Topography::from_depth(&h, 0.5).unwrap(), nonlinear).unwrap()
}

pub fn smooth_state(g: &Arc<Grid>) -> State {
    let eta = ScalarField::from_fn(g, |x, _| 0.3 * (x.cos() - 0.5).exp() - 0.2).dealias();
    let v = ScalarField::from_fn(g, |x, _| 0.2 * (2.0 * x).sin()).dealias();
    State::new(VectorField { components: vec![v] }, eta, 0.0).unwrap()
}

/// Observed RK4 order against a fine-step reference, with the errors used.
pub fn rk4_order() -> (f64, Vec<f64>) {
    let m = fast_variable_model(true);
    let g = m.topo.grid().clone();
    let st = smooth_state(&g);
    let t_end = 0.4;
    let run = |n: usize| {
        let dt = t_end / n as f64;
        let mut s = st.clone();
        for _ in 0..n {
            s = step_rk4(&m, &s, dt).unwrap();
        }
        s
    };
    let reference = run(640);
    let mut steps = Vec::new();
    let mut errs = Vec::new();
    for n in [20, 40, 80] {
        let s = run(n);
        errs.push((&s.eta - &reference.eta).max_abs());
        steps.push(t_end / n as f64);
    }
    (fit_slope(&steps, &errs), errs)
}

/// Observed order of the centred difference of `V_t` against the cascade's `V_tt`.
pub fn cascade_fd_order() -> (f64, Vec<f64>) {
    let m = fast_variable_model(true);
    let g = m.topo.grid().clone();
    let st = smooth_state(&g);
    let d = m.time_derivative_cascade(&st).unwrap();
    let mut steps = Vec::new();
    let mut errs = Vec::new();
    for k in 0..3 {
        let dt = 0.02 / 2f64.powi(k);
        let fwd = step_rk4(&m, &st, dt).unwrap();
        let back = step_rk4(&m, &st, -dt).unwrap();
        let (vf, _) = m.assemble_rhs(&fwd).unwrap();
        let (vb, _) = m.assemble_rhs(&back).unwrap();
        let fd = (&vf.components[0] - &vb.components[0]) * (0.5 / dt);
        errs.push((&fd - &d.v_tt.components[0]).max_abs());
        steps.push(dt);
    }
    (fit_slope(&steps, &errs), errs)
}
