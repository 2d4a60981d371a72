//! Discrete operators of the system: mass operators and their inverses, the
//! dispersive terms, the quadratic nonlinearities, the one-dimensional
//! `B_h(D)`, `C_h(D)` forms, right-hand sides and the time-derivative cascade.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::params::{CoefficientSet, Regime, EQ_TOL};
use crate::solver::{bicgstab, pcg, SolveStats, MAX_ITER, RTOL};

/// Depth-dependent coefficient fields, computed once per bathymetry.
#[derive(Debug, Clone)]
pub struct Topography {
    pub h: ScalarField,
    pub h0: f64,
    pub h2: ScalarField,
    pub sqrt_h: ScalarField,
    pub h32: ScalarField,
    pub h52: ScalarField,
    pub inv_sqrt_h: ScalarField,
    pub inv_h: ScalarField,
    pub grad_h: VectorField,
    /// `h grad h`
    pub h_grad_h: VectorField,
    /// `sqrt(h) grad h`
    pub sqrt_h_grad_h: VectorField,
    /// `h^{3/2} d_x h` (first component)
    pub h32_hx: ScalarField,
    /// `d_x^2 h` (first axis)
    pub hxx: ScalarField,
    pub flat: bool,
    mean_h2: f64,
}

impl Topography {
    pub fn new(b: &Bathymetry) -> Result<Self> {
        Self::from_depth(&b.h, b.h0)
    }

    pub fn from_depth(h: &ScalarField, h0: f64) -> Result<Self> {
        if !h.is_finite() || h.min() < h0 || h0 <= 0.0 {
            return Err(Error::CavitationViolation(format!(
                "min h = {} below floor {h0}",
                h.min()
            )));
        }
        let grad_h = h.gradient();
        let h2 = h.map(|v| v * v);
        let sqrt_h = h.map(f64::sqrt);
        let h32 = h.map(|v| v * v.sqrt());
        let hx = &grad_h.components[0];
        Ok(Self {
            h0,
            h52: h.map(|v| v * v * v.sqrt()),
            inv_sqrt_h: h.map(|v| 1.0 / v.sqrt()),
            inv_h: h.map(|v| 1.0 / v),
            h_grad_h: grad_h.map_components(|g| g.mul_pointwise(h)),
            sqrt_h_grad_h: grad_h.map_components(|g| g.mul_pointwise(&sqrt_h)),
            h32_hx: h32.mul_pointwise(hx),
            hxx: h.derivative(0, 2),
            flat: h.values.iter().all(|&v| v == h.values[0]),
            mean_h2: h2.mean(),
            h: h.clone(),
            h2,
            sqrt_h,
            h32,
            grad_h,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.h.grid
    }

    pub fn hx(&self) -> &ScalarField {
        &self.grad_h.components[0]
    }
}

/// Dealiased product.
fn pr(a: &ScalarField, b: &ScalarField) -> ScalarField {
    a.mul_pointwise(b).dealias()
}

fn dot_pr(a: &VectorField, b: &VectorField) -> ScalarField {
    let mut out = a.components[0].mul_pointwise(&b.components[0]);
    for (x, y) in a.components.iter().zip(&b.components).skip(1) {
        out += &x.mul_pointwise(y);
    }
    out.dealias()
}

fn scal_vec(a: &ScalarField, v: &VectorField) -> VectorField {
    v.map_components(|c| pr(a, c))
}

fn check_vec(topo: &Topography, v: &VectorField) -> Result<()> {
    if v.components.len() != topo.grid().dim() {
        return Err(Error::GridMismatch);
    }
    v.components.iter().try_for_each(|c| topo.h.check_grid(c))
}

/// `a1 grad(h^2 div V) + a2 grad(h grad h . V)`.
pub fn apply_p1(topo: &Topography, c: &CoefficientSet, v: &VectorField) -> Result<VectorField> {
    check_vec(topo, v)?;
    let mut acc = ScalarField::zeros(topo.grid());
    if c.a1 != 0.0 {
        acc += &(pr(&topo.h2, &v.divergence()) * c.a1);
    }
    if c.a2 != 0.0 && !topo.flat {
        acc += &(dot_pr(&topo.h_grad_h, v) * c.a2);
    }
    Ok(acc.gradient())
}

/// `d1 div(h^2 grad eta) + d2 div(h grad h eta)`.
pub fn apply_p2(topo: &Topography, c: &CoefficientSet, eta: &ScalarField) -> Result<ScalarField> {
    topo.h.check_grid(eta)?;
    let mut flux = VectorField::zeros(topo.grid());
    if c.d1 != 0.0 {
        flux.axpy(c.d1, &scal_vec(&topo.h2, &eta.gradient()));
    }
    if c.d2 != 0.0 && !topo.flat {
        flux.axpy(c.d2, &topo.h_grad_h.map_components(|g| pr(g, eta)));
    }
    Ok(flux.divergence())
}

pub fn apply_mass1(topo: &Topography, c: &CoefficientSet, epsilon: f64, v: &VectorField) -> Result<VectorField> {
    let p = apply_p1(topo, c, v)?;
    Ok(v.add(&p.scale(-0.5 * epsilon)))
}

pub fn apply_mass2(topo: &Topography, c: &CoefficientSet, epsilon: f64, eta: &ScalarField) -> Result<ScalarField> {
    let p = apply_p2(topo, c, eta)?;
    Ok(eta - &(p * (0.5 * epsilon)))
}

fn spectral_map(f: &ScalarField, sym: impl Fn([f64; 2]) -> f64) -> ScalarField {
    let v = f.grid.apply_symbol(&f.values, |_, k, _| Complex64::new(sym(k), 0.0));
    ScalarField {
        grid: f.grid.clone(),
        values: v,
    }
}

/// Flat-depth inverse of `1 - kappa grad div` with `kappa = (eps/2) a1 <h^2>`.
fn precond1(kappa: f64, r: &VectorField) -> VectorField {
    if kappa <= 0.0 {
        return r.clone();
    }
    let grid = r.grid().clone();
    if grid.dim() == 1 {
        return VectorField {
            components: vec![spectral_map(&r.components[0], |k| 1.0 / (1.0 + kappa * k[0] * k[0]))],
        };
    }
    let specs: Vec<Vec<Complex64>> = r.components.iter().map(|c| c.spectrum()).collect();
    let mut out = specs.clone();
    for idx in 0..grid.len() {
        let (_, k) = grid.mode_at(idx);
        let k2 = k[0] * k[0] + k[1] * k[1];
        let kd = specs[0][idx] * k[0] + specs[1][idx] * k[1];
        let w = kappa / (1.0 + kappa * k2);
        out[0][idx] -= kd * (w * k[0]);
        out[1][idx] -= kd * (w * k[1]);
    }
    VectorField {
        components: out
            .into_iter()
            .map(|s| ScalarField::from_spectrum(&grid, s))
            .collect(),
    }
}

fn precond2(kappa: f64, r: &ScalarField) -> ScalarField {
    if kappa <= 0.0 {
        return r.clone();
    }
    spectral_map(r, |k| 1.0 / (1.0 + kappa * (k[0] * k[0] + k[1] * k[1])))
}

/// Solve `(1 - eps/2 P1) u = f`.
pub fn invert_mass1(
    topo: &Topography,
    c: &CoefficientSet,
    epsilon: f64,
    f: &VectorField,
) -> Result<(VectorField, SolveStats)> {
    check_vec(topo, f)?;
    let trivial = SolveStats {
        iterations: 0,
        residual: 0.0,
    };
    if c.a1 == 0.0 && (c.a2 == 0.0 || topo.flat) {
        return Ok((f.clone(), trivial));
    }
    let kappa = 0.5 * epsilon * c.a1 * topo.mean_h2;
    let apply = |u: &VectorField| apply_mass1(topo, c, epsilon, u);
    let pre = |r: &VectorField| precond1(kappa, r);
    if c.a2 == 0.0 || topo.flat {
        pcg(apply, pre, f, RTOL, MAX_ITER)
    } else {
        bicgstab(apply, pre, f, RTOL, MAX_ITER)
    }
}

/// Solve `(1 - eps/2 P2) u = f`.
pub fn invert_mass2(
    topo: &Topography,
    c: &CoefficientSet,
    epsilon: f64,
    f: &ScalarField,
) -> Result<(ScalarField, SolveStats)> {
    topo.h.check_grid(f)?;
    if c.d1 == 0.0 && (c.d2 == 0.0 || topo.flat) {
        return Ok((
            f.clone(),
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let kappa = 0.5 * epsilon * c.d1 * topo.mean_h2;
    let apply = |u: &ScalarField| apply_mass2(topo, c, epsilon, u);
    let pre = |r: &ScalarField| precond2(kappa, r);
    if c.d2 == 0.0 || topo.flat {
        pcg(apply, pre, f, RTOL, MAX_ITER)
    } else {
        bicgstab(apply, pre, f, RTOL, MAX_ITER)
    }
}

/// `(F_h, f_h)` in the general `n`-dimensional form.
pub fn compute_fh_fh(topo: &Topography, v: &VectorField, eta: &ScalarField) -> Result<(VectorField, ScalarField)> {
    check_vec(topo, v)?;
    topo.h.check_grid(eta)?;
    if topo.h.min() < topo.h0 {
        return Err(Error::CavitationViolation(format!("min h = {}", topo.h.min())));
    }
    let dim = topo.grid().dim();
    let div_v = v.divergence();
    let grad_eta = eta.gradient();
    let vsq = dot_pr(v, v);
    let grad_vsq = vsq.gradient();
    let vdh = dot_pr(v, &topo.grad_h);
    let grads: Vec<VectorField> = v.components.iter().map(ScalarField::gradient).collect();

    let mut comps = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut a = pr(eta, &grad_eta.components[i]);
        a += &(&grad_vsq.components[i] * 0.5);
        for j in 0..dim {
            a += &pr(&v.components[j], &grads[i].components[j]);
        }
        a += &pr(&v.components[i], &div_v);
        let extra = pr(&vdh, &v.components[i]) * 0.5 - pr(&vsq, &topo.grad_h.components[i]);
        a += &pr(&topo.inv_h, &extra);
        comps.push(pr(&topo.inv_sqrt_h, &a));
    }
    let eta_v = VectorField {
        components: v.components.iter().map(|c| pr(eta, c)).collect(),
    };
    let inner = eta_v.divergence() - pr(&topo.inv_h, &pr(eta, &vdh)) * 0.5;
    let f = pr(&topo.inv_sqrt_h, &inner);
    Ok((VectorField { components: comps }, f))
}

/// One-dimensional rewriting of `(F_h, f_h)`.
pub fn compute_fh_fh_1d(topo: &Topography, v: &ScalarField, eta: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    if topo.grid().dim() != 1 {
        return Err(Error::RegimeMismatch("reduced nonlinear terms need a 1D grid".into()));
    }
    topo.h.check_grid(v)?;
    topo.h.check_grid(eta)?;
    let hx = topo.hx();
    let quad = pr(eta, &eta.dx()) + pr(v, &v.dx()) * 3.0;
    let weight = hx.mul_pointwise(&topo.inv_h).mul_pointwise(&topo.inv_sqrt_h) * 0.5;
    let big = pr(&topo.inv_sqrt_h, &quad) - pr(&weight, &pr(v, v));
    let small = pr(&topo.inv_sqrt_h, &pr(eta, v)).dx();
    Ok((big, small))
}

/// `(b2 + 3/2 b3 + b4) sqrt(h) h_x^2 + b2 h^{3/2} h_xx`.
pub fn r1_coefficient(topo: &Topography, c: &CoefficientSet) -> ScalarField {
    r_combo(topo, c.b2 + 1.5 * c.b3 + c.b4, c.b2)
}

/// `(c2 + 3/2 c3 - c4) sqrt(h) h_x^2 + c2 h^{3/2} h_xx`.
pub fn r2_coefficient(topo: &Topography, c: &CoefficientSet) -> ScalarField {
    r_combo(topo, c.c2 + 1.5 * c.c3 - c.c4, c.c2)
}

/// `r = r1 + r2 = (b3/2 + c3/2 + b4 - c4) sqrt(h) h_x^2 + (b2 + c2) h^{3/2} h_xx`.
pub fn r_coefficient(topo: &Topography, c: &CoefficientSet) -> ScalarField {
    r_combo(topo, 0.5 * c.b3 + 0.5 * c.c3 + c.b4 - c.c4, c.b2 + c.c2)
}

fn r_combo(topo: &Topography, first: f64, second: f64) -> ScalarField {
    let hx = topo.hx();
    let a = topo.sqrt_h.mul_pointwise(hx).mul_pointwise(hx) * first;
    let b = topo.h32.mul_pointwise(&topo.hxx) * second;
    a + b
}

fn check_fast(topo: &Topography, c: &CoefficientSet) -> Result<()> {
    if topo.grid().dim() != 1 {
        return Err(Error::RegimeMismatch("B_h and C_h are one-dimensional".into()));
    }
    if (c.b1 - c.c1).abs() > EQ_TOL || c.fast_defect().abs() > EQ_TOL {
        return Err(Error::RegimeMismatch(format!(
            "need b1 = c1 and b2 + b3 + c2 + c3 = 0 (got b1 - c1 = {:e}, defect {:e})",
            c.b1 - c.c1,
            c.fast_defect()
        )));
    }
    Ok(())
}

/// `B_h(D) f` for fast-regime coefficients.
pub fn apply_bh(topo: &Topography, c: &CoefficientSet, f: &ScalarField) -> Result<ScalarField> {
    check_fast(topo, c)?;
    topo.h.check_grid(f)?;
    Ok(apply_bh_unchecked(topo, c, f))
}

/// `C_h(D) g` for fast-regime coefficients.
pub fn apply_ch(topo: &Topography, c: &CoefficientSet, g: &ScalarField) -> Result<ScalarField> {
    check_fast(topo, c)?;
    topo.h.check_grid(g)?;
    Ok(apply_ch_unchecked(topo, c, g))
}

/// `b1 sqrt(h) d_x^2(h^2 f_x) + (b2 + b3) h^{3/2} h_x f_xx + r1 f_x`, for any 1D coefficients.
pub fn apply_bh_unchecked(topo: &Topography, c: &CoefficientSet, f: &ScalarField) -> ScalarField {
    let fx = f.dx();
    let mut out = pr(&topo.sqrt_h, &pr(&topo.h2, &fx).dxx()) * c.b1;
    out += &(pr(&topo.h32_hx, &f.dxx()) * (c.b2 + c.b3));
    out += &pr(&r1_coefficient(topo, c), &fx);
    out
}

/// `c1 d_x(h^2 d_x^2(sqrt(h) g)) + (c2 + c3) d_x^2(h^{3/2} h_x g) - d_x(r2 g)`, for any 1D coefficients.
pub fn apply_ch_unchecked(topo: &Topography, c: &CoefficientSet, g: &ScalarField) -> ScalarField {
    let mut out = pr(&topo.h2, &pr(&topo.sqrt_h, g).dxx()).dx() * c.c1;
    out += &(pr(&topo.h32_hx, g).dxx() * (c.c2 + c.c3));
    out -= &pr(&r2_coefficient(topo, c), g).dx();
    out
}

#[derive(Debug, Clone)]
pub struct State {
    pub v: VectorField,
    pub eta: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(v: VectorField, eta: ScalarField, t: f64) -> Result<Self> {
        v.components.iter().try_for_each(|c| eta.check_grid(c))?;
        if v.components.len() != eta.grid.dim() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { v, eta, t })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            v: VectorField::zeros(grid),
            eta: ScalarField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.eta.grid
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.eta.is_finite()
    }

    /// Project both unknowns onto the retained modes.
    pub fn dealiased(&self) -> Self {
        Self {
            v: self.v.dealias(),
            eta: self.eta.dealias(),
            t: self.t,
        }
    }

    pub fn axpy(&self, a: f64, dv: &VectorField, deta: &ScalarField) -> Self {
        let mut v = self.v.clone();
        v.axpy(a, dv);
        let mut eta = self.eta.clone();
        eta.values.iter_mut().zip(&deta.values).for_each(|(e, d)| *e += a * d);
        Self { v, eta, t: self.t }
    }
}

#[derive(Debug, Clone)]
pub struct TimeDerivatives {
    pub v_t: VectorField,
    pub eta_t: ScalarField,
    pub v_tt: VectorField,
    pub eta_tt: ScalarField,
}

/// Coefficients, depth and switches defining one instance of the system.
#[derive(Debug, Clone)]
pub struct Model {
    pub coeffs: CoefficientSet,
    pub epsilon: f64,
    pub regime: Regime,
    pub nonlinear: bool,
    pub topo: Topography,
}

impl Model {
    pub fn new(coeffs: CoefficientSet, epsilon: f64, regime: Regime, topo: Topography, nonlinear: bool) -> Result<Self> {
        if let Some(d) = regime.dim() {
            if d != topo.grid().dim() {
                return Err(Error::RegimeMismatch(format!(
                    "{} runs on a {d}D grid, got {}D",
                    regime.name(),
                    topo.grid().dim()
                )));
            }
        }
        if regime.is_fast() {
            check_fast(&topo, &coeffs)?;
        }
        Ok(Self {
            coeffs,
            epsilon,
            regime,
            nonlinear,
            topo,
        })
    }

    fn reduced(&self) -> bool {
        self.regime.is_fast()
    }

    /// Linear part of the momentum equation: `sqrt(h) grad eta + eps/2 [b-terms]`.
    pub fn momentum_linear(&self, eta: &ScalarField) -> VectorField {
        let topo = &self.topo;
        let c = &self.coeffs;
        let half = 0.5 * self.epsilon;
        if self.reduced() {
            let mut out = pr(&topo.sqrt_h, &eta.dx());
            out += &(apply_bh_unchecked(topo, c, eta) * half);
            return VectorField { components: vec![out] };
        }
        let g = eta.gradient();
        let mut out = scal_vec(&topo.sqrt_h, &g);
        let mut disp = VectorField::zeros(topo.grid());
        if c.b1 != 0.0 {
            let w = scal_vec(&topo.h2, &g).divergence().gradient();
            disp.axpy(c.b1, &scal_vec(&topo.sqrt_h, &w));
        }
        if !topo.flat {
            if c.b2 != 0.0 {
                let s = dot_pr(&topo.h_grad_h, &g).gradient();
                disp.axpy(c.b2, &scal_vec(&topo.sqrt_h, &s));
            }
            if c.b3 != 0.0 {
                let q = scal_vec(&topo.h32, &g).divergence();
                disp.axpy(c.b3, &topo.grad_h.map_components(|gh| pr(gh, &q)));
            }
            if c.b4 != 0.0 {
                let s = dot_pr(&topo.grad_h, &g);
                disp.axpy(c.b4, &topo.sqrt_h_grad_h.map_components(|a| pr(a, &s)));
            }
        }
        out.axpy(half, &disp);
        out
    }

    /// Linear part of the mass equation: `div(sqrt(h) V) + eps/2 div[c-terms]`.
    pub fn mass_linear(&self, v: &VectorField) -> ScalarField {
        let topo = &self.topo;
        let c = &self.coeffs;
        let half = 0.5 * self.epsilon;
        if self.reduced() {
            let v0 = &v.components[0];
            let mut out = pr(&topo.sqrt_h, v0).dx();
            out += &(apply_ch_unchecked(topo, c, v0) * half);
            return out;
        }
        let q = scal_vec(&topo.sqrt_h, v).divergence();
        let mut inner = VectorField::zeros(topo.grid());
        if c.c1 != 0.0 {
            inner.axpy(c.c1, &scal_vec(&topo.h2, &q.gradient()));
        }
        if !topo.flat {
            if c.c2 != 0.0 {
                inner.axpy(c.c2, &topo.h_grad_h.map_components(|a| pr(a, &q)));
            }
            let gv = dot_pr(&topo.grad_h, v);
            if c.c3 != 0.0 {
                inner.axpy(c.c3, &scal_vec(&topo.h32, &gv.gradient()));
            }
            if c.c4 != 0.0 {
                inner.axpy(c.c4, &topo.sqrt_h_grad_h.map_components(|a| pr(a, &gv)));
            }
        }
        q + inner.divergence() * half
    }

    /// `(F_h, f_h)`, through the 1D rewriting in the fast regime.
    pub fn nonlinear_terms(&self, v: &VectorField, eta: &ScalarField) -> Result<(VectorField, ScalarField)> {
        if self.reduced() {
            let (big, small) = compute_fh_fh_1d(&self.topo, &v.components[0], eta)?;
            Ok((VectorField { components: vec![big] }, small))
        } else {
            compute_fh_fh(&self.topo, v, eta)
        }
    }

    /// Time derivative of the quadratic terms along `(dv, deta)`, by polarization.
    fn nonlinear_variation(
        &self,
        state: &State,
        dv: &VectorField,
        deta: &ScalarField,
    ) -> Result<(VectorField, ScalarField)> {
        let plus = state.axpy(1.0, dv, deta);
        let minus = state.axpy(-1.0, dv, deta);
        let (fp, gp) = self.nonlinear_terms(&plus.v, &plus.eta)?;
        let (fm, gm) = self.nonlinear_terms(&minus.v, &minus.eta)?;
        Ok((fp.sub(&fm).scale(0.5), (gp - gm) * 0.5))
    }

    fn solve(&self, mom: VectorField, mass: ScalarField) -> Result<(VectorField, ScalarField)> {
        let (vt, _) = invert_mass1(&self.topo, &self.coeffs, self.epsilon, &mom.scale(-1.0))?;
        let (et, _) = invert_mass2(&self.topo, &self.coeffs, self.epsilon, &(mass * -1.0))?;
        Ok((vt, et))
    }

    /// `(dV/dt, deta/dt)`.
    pub fn assemble_rhs(&self, state: &State) -> Result<(VectorField, ScalarField)> {
        let mut mom = self.momentum_linear(&state.eta);
        let mut mass = self.mass_linear(&state.v);
        if self.nonlinear {
            let (f_big, f_small) = self.nonlinear_terms(&state.v, &state.eta)?;
            let half = 0.5 * self.epsilon;
            mom.axpy(half, &f_big);
            mass += &(f_small * half);
        }
        self.solve(mom, mass)
    }

    /// First and second time derivatives from the equations themselves.
    pub fn time_derivative_cascade(&self, state: &State) -> Result<TimeDerivatives> {
        let (v_t, eta_t) = self.assemble_rhs(state)?;
        let mut mom = self.momentum_linear(&eta_t);
        let mut mass = self.mass_linear(&v_t);
        if self.nonlinear {
            let (df, dg) = self.nonlinear_variation(state, &v_t, &eta_t)?;
            let half = 0.5 * self.epsilon;
            mom.axpy(half, &df);
            mass += &(dg * half);
        }
        let (v_tt, eta_tt) = self.solve(mom, mass)?;
        Ok(TimeDerivatives {
            v_t,
            eta_t,
            v_tt,
            eta_tt,
        })
    }
}

/// Flat-bottom symbols `(alpha, beta)` with `V_t = -i alpha eta`, `eta_t = -i beta V` per mode.
pub fn flat_symbols(c: &CoefficientSet, epsilon: f64, xi: f64) -> (f64, f64) {
    let h = 0.5 * epsilon * xi * xi;
    (
        xi * (1.0 - h * c.b1) / (1.0 + h * c.a1),
        xi * (1.0 - h * c.c1) / (1.0 + h * c.d1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{coefficients_from_bbm, BbmParams};
    use std::f64::consts::PI;

    fn fast_coeffs() -> CoefficientSet {
        coefficients_from_bbm(&BbmParams::new(-1.0 / 3.0, 1.0, 1.0, 0.0).unwrap()).unwrap()
    }

    fn topo(g: &Arc<Grid>, amp: f64) -> Topography {
        let h = ScalarField::from_fn(g, |x, _| 1.0 - amp * x.sin());
        Topography::from_depth(&h, 0.5).unwrap()
    }

    fn vec1(f: ScalarField) -> VectorField {
        VectorField { components: vec![f] }
    }

    #[test]
    fn p1_flat_examples() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let t = topo(&g, 0.0);
        let c = fast_coeffs();
        let v = ScalarField::from_fn(&g, |x, _| x.sin());
        let p = apply_p1(&t, &c, &vec1(v.clone())).unwrap();
        assert!((&p.components[0] + &(&v * c.a1)).max_abs() < 1e-12);
        let z = apply_p1(&t, &c, &VectorField::zeros(&g)).unwrap();
        assert_eq!(z.components[0].max_abs(), 0.0);
    }

    #[test]
    fn p2_flat_is_scaled_laplacian() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let t = topo(&g, 0.0);
        let c = CoefficientSet {
            d1: 0.7,
            d2: -0.3,
            ..Default::default()
        };
        let eta = ScalarField::from_fn(&g, |x, _| (2.0 * x).cos());
        let p = apply_p2(&t, &c, &eta).unwrap();
        assert!((&p - &(eta.dxx() * 0.7)).max_abs() < 1e-12);
        let k = apply_p2(&t, &c, &ScalarField::constant(&g, 2.0)).unwrap();
        assert!(k.max_abs() < 1e-12);
    }

    #[test]
    fn mass_round_trip_flat_and_variable() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let c = fast_coeffs();
        for amp in [0.0, 0.3] {
            let t = topo(&g, amp);
            let f = vec1(ScalarField::from_fn(&g, |x, _| (3.0 * x).sin() + 0.2 * (5.0 * x).cos()));
            let (u, stats) = invert_mass1(&t, &c, 0.1, &f).unwrap();
            assert!(stats.residual <= RTOL);
            let back = apply_mass1(&t, &c, 0.1, &u).unwrap();
            let err = (&back.components[0] - &f.components[0]).l2_norm();
            assert!(err <= 1e-9 * f.l2_norm(), "{err}");
        }
        let (u, _) = invert_mass1(&topo(&g, 0.3), &c, 0.1, &VectorField::zeros(&g)).unwrap();
        assert_eq!(u.components[0].max_abs(), 0.0);
    }

    #[test]
    fn nonlinear_examples() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let t = topo(&g, 0.2);
        let eta = ScalarField::from_fn(&g, |x, _| (2.0 * x).cos());
        let (f, small) = compute_fh_fh(&t, &VectorField::zeros(&g), &eta).unwrap();
        let want = pr(&t.inv_sqrt_h, &pr(&eta, &eta.dx()));
        assert!((&f.components[0] - &want).max_abs() < 1e-12);
        assert!(small.max_abs() < 1e-14);

        let flat = topo(&g, 0.0);
        let v = ScalarField::from_fn(&g, |x, _| x.sin() + 0.3 * (3.0 * x).cos());
        let (f, small) = compute_fh_fh(&flat, &vec1(v.clone()), &ScalarField::zeros(&g)).unwrap();
        let want = pr(&v, &v.dx()) * 3.0;
        assert!((&f.components[0] - &want).max_abs() < 1e-12);
        assert!(small.max_abs() < 1e-14);
    }

    #[test]
    fn r_coefficient_examples() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let c = fast_coeffs();
        assert!(r_coefficient(&topo(&g, 0.0), &c).max_abs() == 0.0);
        let t = topo(&g, 0.25);
        let r = r_coefficient(&t, &c);
        let hx = t.hx();
        let want = t.sqrt_h.mul_pointwise(hx).mul_pointwise(hx) * 2.5 + t.h32.mul_pointwise(&t.hxx) * (4.0 / 3.0);
        assert!((&r - &want).max_abs() < 1e-12);
        let sum = r1_coefficient(&t, &c) + r2_coefficient(&t, &c);
        assert!((&r - &sum).max_abs() < 1e-12);
    }

    #[test]
    fn bh_ch_flat_bottom() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let t = topo(&g, 0.0);
        let c = fast_coeffs();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let b = apply_bh(&t, &c, &f).unwrap();
        let want = ScalarField::from_fn(&g, |x, _| x.cos() / 3.0);
        assert!((&b - &want).max_abs() < 1e-12);
        let ch = apply_ch(&t, &c, &f).unwrap();
        assert!((&ch - &want).max_abs() < 1e-12);
        // antisymmetry at flat bottom
        let r = ScalarField::from_fn(&g, |x, _| x.sin() + 0.4 * (2.0 * x + 1.0).cos());
        assert!(apply_bh(&t, &c, &r).unwrap().inner(&r).abs() < 1e-12);
    }

    #[test]
    fn bh_requires_fast_coefficients() {
        let g = Grid::line(64, 2.0 * PI).unwrap();
        let mut c = fast_coeffs();
        c.b2 += 1.0;
        let f = ScalarField::zeros(&g);
        assert!(matches!(apply_bh(&topo(&g, 0.1), &c, &f), Err(Error::RegimeMismatch(_))));
        let g2 = Grid::plane([8, 8], [1.0, 1.0]).unwrap();
        let t2 = Topography::from_depth(&ScalarField::constant(&g2, 1.0), 0.5).unwrap();
        assert!(matches!(
            apply_ch(&t2, &fast_coeffs(), &ScalarField::zeros(&g2)),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn zero_state_has_zero_derivatives() {
        let g = Grid::line(32, 2.0 * PI).unwrap();
        let m = Model::new(fast_coeffs(), 0.1, Regime::Fast1d, topo(&g, 0.1), true).unwrap();
        let d = m.time_derivative_cascade(&State::zeros(&g)).unwrap();
        assert_eq!(d.v_t.components[0].max_abs(), 0.0);
        assert_eq!(d.eta_t.max_abs(), 0.0);
        assert_eq!(d.v_tt.components[0].max_abs(), 0.0);
        assert_eq!(d.eta_tt.max_abs(), 0.0);
    }
}
