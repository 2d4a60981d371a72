//! Krylov solvers for the mass operators, generic over scalar and vector fields.

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};

pub const RTOL: f64 = 1e-10;
pub const MAX_ITER: usize = 500;

pub trait Space: Clone {
    fn dot(&self, other: &Self) -> f64;
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);

    fn norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }
}

impl Space for ScalarField {
    fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.values.iter_mut().zip(&x.values).for_each(|(s, v)| *s += a * v);
    }

    fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }
}

impl Space for VectorField {
    fn dot(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        VectorField::axpy(self, a, x);
    }

    fn scale(&mut self, a: f64) {
        self.components.iter_mut().for_each(|c| Space::scale(c, a));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn zero_like<S: Space>(b: &S) -> S {
    let mut z = b.clone();
    z.scale(0.0);
    z
}

/// Preconditioned conjugate gradients for a symmetric positive operator.
pub fn pcg<S, A, M>(apply: A, precond: M, b: &S, rtol: f64, max_iter: usize) -> Result<(S, SolveStats)>
where
    S: Space,
    A: Fn(&S) -> Result<S>,
    M: Fn(&S) -> S,
{
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok((zero_like(b), SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut x = precond(b);
    let mut r = b.clone();
    r.axpy(-1.0, &apply(&x)?);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut res = r.norm() / bnorm;
    for it in 0..max_iter {
        if res <= rtol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        let ap = apply(&p)?;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        res = r.norm() / bnorm;
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut next = z.clone();
        next.axpy(beta, &p);
        p = next;
    }
    if res <= rtol {
        return Ok((x, SolveStats { iterations: max_iter, residual: res }));
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: res,
    })
}

/// Right-preconditioned BiCGSTAB for nonsymmetric operators.
pub fn bicgstab<S, A, M>(
    apply: A,
    precond: M,
    b: &S,
    rtol: f64,
    max_iter: usize,
) -> Result<(S, SolveStats)>
where
    S: Space,
    A: Fn(&S) -> Result<S>,
    M: Fn(&S) -> S,
{
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok((zero_like(b), SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut x = precond(b);
    let mut r = b.clone();
    r.axpy(-1.0, &apply(&x)?);
    let mut r_hat = r.clone();
    let mut p = zero_like(b);
    let mut v = zero_like(b);
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut res = r.norm() / bnorm;
    for it in 0..max_iter {
        if res <= rtol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        let mut rho_new = r_hat.dot(&r);
        if rho_new.abs() < 1e-300 {
            // breakdown: restart the shadow residual
            r_hat = r.clone();
            p = zero_like(b);
            v = zero_like(b);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            rho_new = r_hat.dot(&r);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + beta (p - omega v)
        p.axpy(-omega, &v);
        p.scale(beta);
        p.axpy(1.0, &r);
        let y = precond(&p);
        v = apply(&y)?;
        let denom = r_hat.dot(&v);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        alpha = rho / denom;
        x.axpy(alpha, &y);
        r.axpy(-alpha, &v);
        res = r.norm() / bnorm;
        if res <= rtol {
            return Ok((x, SolveStats { iterations: it + 1, residual: res }));
        }
        let z = precond(&r);
        let t = apply(&z)?;
        let tt = t.dot(&t);
        if tt == 0.0 || !tt.is_finite() {
            break;
        }
        omega = t.dot(&r) / tt;
        x.axpy(omega, &z);
        r.axpy(-omega, &t);
        res = r.norm() / bnorm;
        if omega == 0.0 {
            break;
        }
    }
    if res <= rtol {
        return Ok((x, SolveStats { iterations: max_iter, residual: res }));
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: res,
    })
}
