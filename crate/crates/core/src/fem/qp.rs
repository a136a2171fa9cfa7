//! Bound-constrained convex quadratic programs
//!
//! `min ½ xᵀKx − bᵀx` subject to `x_i ≥ 0` or `x_i ≤ 0` on a subset of the
//! unknowns. Two independent solvers are provided: a primal–dual active set
//! method on top of sparse Cholesky, and projected successive
//! over-relaxation (projected Gauss–Seidel for `ω = 1`).

use serde::Serialize;

use super::sparse::{Cholesky, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bound {
    Free,
    NonNegative,
    NonPositive,
}

impl Bound {
    fn sign(self) -> f64 {
        match self {
            Bound::NonPositive => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundQp {
    pub k: CsrMatrix,
    pub rhs: Vec<f64>,
    pub bounds: Vec<Bound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Pdas,
    Pgs,
}

#[derive(Clone, Debug, Serialize)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// `Kx − b`; zero on free unknowns, the sign-constrained multiplier on
    /// bounded ones.
    pub multiplier: Vec<f64>,
    pub active: Vec<bool>,
    pub iterations: usize,
    /// `max |min(s·x_i, s·λ_i)|` over bounded unknowns (`s` the bound sign).
    pub complementarity: f64,
    /// `max |λ_i|` over free unknowns.
    pub stationarity: f64,
    /// Largest violation of `s·x ≥ 0` or `s·λ ≥ 0`.
    pub infeasibility: f64,
    pub method: Method,
}

#[derive(Clone, Copy, Debug)]
pub struct PdasOptions {
    pub c: f64,
    pub max_iter: usize,
}

impl Default for PdasOptions {
    fn default() -> Self {
        PdasOptions { c: 1.0, max_iter: 50 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PgsOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for PgsOptions {
    fn default() -> Self {
        PgsOptions {
            omega: 1.0,
            tol: 1e-14,
            max_sweeps: 200_000,
        }
    }
}

impl BoundQp {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.k.n() != self.rhs.len() || self.bounds.len() != self.rhs.len() {
            return Err(Error::Invalid("quadratic program dimensions disagree".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.k.quadratic_form(x) - self.rhs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.bounds
            .iter()
            .zip(x)
            .all(|(b, v)| *b == Bound::Free || b.sign() * v >= -tol)
    }

    fn finish(&self, x: Vec<f64>, iterations: usize, method: Method) -> QpSolution {
        let kx = self.k.mul_vec(&x);
        let multiplier: Vec<f64> = kx.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let mut active = vec![false; x.len()];
        let (mut comp, mut stat, mut infeas) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..x.len() {
            match self.bounds[i] {
                Bound::Free => stat = stat.max(multiplier[i].abs()),
                b => {
                    let (y, mu) = (b.sign() * x[i], b.sign() * multiplier[i]);
                    comp = comp.max(y.min(mu).abs());
                    infeas = infeas.max((-y).max(0.0)).max((-mu).max(0.0));
                    active[i] = y <= mu;
                }
            }
        }
        QpSolution {
            x,
            multiplier,
            active,
            iterations,
            complementarity: comp,
            stationarity: stat,
            infeasibility: infeas,
            method,
        }
    }

    pub fn solve(&self, method: Method) -> Result<QpSolution> {
        match method {
            Method::Pdas => self.solve_pdas(PdasOptions::default()),
            Method::Pgs => self.solve_pgs(PgsOptions::default()),
        }
    }

    /// Primal–dual active set iteration; stops when the active set repeats.
    pub fn solve_pdas(&self, opts: PdasOptions) -> Result<QpSolution> {
        self.check()?;
        let n = self.len();
        if n == 0 {
            return Ok(self.finish(Vec::new(), 0, Method::Pdas));
        }
        let mut chol = Cholesky::new(&self.k)?;
        let mut active = vec![false; n];
        let mut last_residual = f64::INFINITY;
        for it in 1..=opts.max_iter {
            chol.factor(&self.k, &active)?;
            let rhs: Vec<f64> = (0..n).map(|i| if active[i] { 0.0 } else { self.rhs[i] }).collect();
            let x = chol.solve(&rhs)?;
            let kx = self.k.mul_vec(&x);
            let mut mu_max = 0.0f64;
            let mut x_max = 0.0f64;
            for i in 0..n {
                x_max = x_max.max(x[i].abs());
                if active[i] {
                    mu_max = mu_max.max((kx[i] - self.rhs[i]).abs());
                }
            }
            // sign tests at roundoff level would make degenerate contact cycle
            let thr = 64.0 * f64::EPSILON * (mu_max + opts.c * x_max);
            let mut next = vec![false; n];
            for i in 0..n {
                let b = self.bounds[i];
                if b == Bound::Free {
                    continue;
                }
                let s = b.sign();
                let mu = if active[i] { s * (kx[i] - self.rhs[i]) } else { 0.0 };
                next[i] = mu - opts.c * s * x[i] > thr;
            }
            if next == active {
                return Ok(self.finish(x, it, Method::Pdas));
            }
            last_residual = (0..n)
                .filter(|&i| self.bounds[i] != Bound::Free)
                .map(|i| (self.bounds[i].sign() * x[i]).min(0.0).abs())
                .fold(0.0, f64::max);
            active = next;
        }
        Err(Error::NotConverged {
            iterations: opts.max_iter,
            residual: last_residual,
        })
    }

    /// Projected successive over-relaxation in natural order.
    pub fn solve_pgs(&self, opts: PgsOptions) -> Result<QpSolution> {
        self.check()?;
        let n = self.len();
        let diag = self.k.diag();
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::LinearSolve("non-positive diagonal entry".into()));
        }
        let mut x = vec![0.0; n];
        let mut delta = f64::INFINITY;
        for sweep in 1..=opts.max_sweeps {
            let mut change = 0.0f64;
            let mut size = 0.0f64;
            for i in 0..n {
                let mut r = self.rhs[i];
                for (j, v) in self.k.row(i) {
                    if j != i {
                        r -= v * x[j];
                    }
                }
                let mut xi = (1.0 - opts.omega) * x[i] + opts.omega * r / diag[i];
                match self.bounds[i] {
                    Bound::NonNegative => xi = xi.max(0.0),
                    Bound::NonPositive => xi = xi.min(0.0),
                    Bound::Free => {}
                }
                change = change.max((xi - x[i]).abs());
                size = size.max(xi.abs());
                x[i] = xi;
            }
            delta = change;
            if change <= opts.tol * size {
                return Ok(self.finish(x, sweep, Method::Pgs));
            }
        }
        Err(Error::NotConverged {
            iterations: opts.max_sweeps,
            residual: delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, bounds: Vec<Bound>, rhs: Vec<f64>) -> BoundQp {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        BoundQp {
            k: CsrMatrix::from_triplets(n, &t),
            rhs,
            bounds,
        }
    }

    #[test]
    fn unconstrained_matches_linear_solve() {
        let qp = chain(3, vec![Bound::Free; 3], vec![1.0, 0.0, 1.0]);
        let s = qp.solve_pdas(PdasOptions::default()).unwrap();
        for v in &s.x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn one_dimensional_obstacle() {
        // pulled down everywhere, middle unknown must stay nonnegative
        let n = 5;
        let mut bounds = vec![Bound::Free; n];
        bounds[2] = Bound::NonNegative;
        let qp = chain(n, bounds, vec![-1.0; n]);
        let a = qp.solve_pdas(PdasOptions::default()).unwrap();
        let b = qp
            .solve_pgs(PgsOptions {
                omega: 1.5,
                ..Default::default()
            })
            .unwrap();
        assert!(a.x[2].abs() < 1e-15 && a.multiplier[2] > 0.0);
        assert!(a.complementarity < 1e-14 && a.stationarity < 1e-13);
        for i in 0..n {
            assert!((a.x[i] - b.x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn nonpositive_bound_mirrors_nonnegative() {
        let n = 4;
        let mut up = vec![Bound::Free; n];
        up[1] = Bound::NonNegative;
        let mut down = vec![Bound::Free; n];
        down[1] = Bound::NonPositive;
        let a = chain(n, up, vec![-1.0, -0.5, 0.2, -1.0])
            .solve_pdas(PdasOptions::default())
            .unwrap();
        let b = chain(n, down, vec![1.0, 0.5, -0.2, 1.0])
            .solve_pdas(PdasOptions::default())
            .unwrap();
        for i in 0..n {
            assert!((a.x[i] + b.x[i]).abs() < 1e-14);
        }
    }
}
