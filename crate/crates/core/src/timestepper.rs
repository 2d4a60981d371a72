//! Classical RK4 time integration with a dispersion-based step bound.

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::operators::{Model, State};
use crate::params::{dispersion_speed_at_depth, CoefficientSet};

/// Extent of the RK4 stability region along the imaginary axis (rounded down).
pub const RK4_IMAG_LIMIT: f64 = 2.8;
pub const DEFAULT_SAFETY: f64 = 0.5;

/// Fastest linear frequency over retained modes, at both extreme depths.
pub fn max_frequency(grid: &Grid, c: &CoefficientSet, epsilon: f64, depths: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for idx in 0..grid.len() {
        if !grid.is_retained(idx) {
            continue;
        }
        let (_, k) = grid.mode_at(idx);
        let xi = (k[0] * k[0] + k[1] * k[1]).sqrt();
        for &d in depths {
            best = best.max(dispersion_speed_at_depth(c, epsilon, xi, d));
        }
    }
    best
}

/// `safety * 2.8 / max |lambda_+|`.
pub fn stable_dt(grid: &Grid, c: &CoefficientSet, epsilon: f64, h_min: f64, h_max: f64, safety: f64) -> f64 {
    let w = max_frequency(grid, c, epsilon, &[h_min, h_max]);
    if w > 0.0 && w.is_finite() {
        safety * RK4_IMAG_LIMIT / w
    } else {
        f64::INFINITY
    }
}

pub fn model_dt(model: &Model, safety: f64) -> f64 {
    let h = &model.topo.h;
    stable_dt(h.grid.as_ref(), &model.coeffs, model.epsilon, h.min(), h.max(), safety)
}

pub fn step_rk4(model: &Model, state: &State, dt: f64) -> Result<State> {
    let t_end = state.t + dt;
    let rhs = |s: &State| {
        if !s.is_finite() {
            return Err(Error::NonFinite { t: t_end });
        }
        match model.assemble_rhs(s) {
            Err(Error::SolverDiverged { residual, .. }) if !residual.is_finite() => {
                Err(Error::NonFinite { t: t_end })
            }
            other => other,
        }
    };
    let (k1v, k1e) = rhs(state)?;
    let s2 = state.axpy(0.5 * dt, &k1v, &k1e);
    let (k2v, k2e) = rhs(&s2)?;
    let s3 = state.axpy(0.5 * dt, &k2v, &k2e);
    let (k3v, k3e) = rhs(&s3)?;
    let s4 = state.axpy(dt, &k3v, &k3e);
    let (k4v, k4e) = rhs(&s4)?;

    let mut next = state.axpy(dt / 6.0, &k1v, &k1e);
    next = next.axpy(dt / 3.0, &k2v, &k2e);
    next = next.axpy(dt / 3.0, &k3v, &k3e);
    next = next.axpy(dt / 6.0, &k4v, &k4e);
    next.t = t_end;
    if !next.is_finite() {
        return Err(Error::NonFinite { t: next.t });
    }
    Ok(next)
}

/// Advance `n` steps of size `dt`, calling `observe` after each step.
pub fn integrate<F>(model: &Model, state: &State, dt: f64, n: usize, mut observe: F) -> Result<State>
where
    F: FnMut(usize, &State) -> Result<()>,
{
    let mut s = state.clone();
    for i in 1..=n {
        s = step_rk4(model, &s, dt)?;
        observe(i, &s)?;
    }
    Ok(s)
}
