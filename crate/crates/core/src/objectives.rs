//! Local quadratic objectives `f_i(x) = 1/2 (x - b_i)^T A_i (x - b_i)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// How the experimental cost `1/2 x^T x` is split across agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    /// Every agent holds `1/2 x^T x`.
    #[default]
    IdenticalCopy,
    /// Every agent holds `1/(2n) x^T x`, so the sum is `1/2 x^T x`.
    Share,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalQuadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LocalQuadratic {
    /// Validates that `a` is square, symmetric and positive definite and that
    /// `b` has matching length.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let p = a.nrows();
        if p == 0 || a.ncols() != p {
            return Err(Error::invalid(format!(
                "curvature matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("objective entries must be finite"));
        }
        for i in 0..p {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "curvature matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let lo = SymmetricEigen::new(a.clone()).eigenvalues.min();
        if lo <= 0.0 {
            return Err(Error::invalid(format!(
                "curvature matrix is not positive definite (smallest eigenvalue {lo})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn identity(p: usize, scale: f64) -> Self {
        Self {
            a: DMatrix::identity(p, p) * scale,
            b: DVector::zeros(p),
        }
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.b;
        0.5 * d.dot(&(&self.a * &d))
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * (x - &self.b)
    }
}

/// A family of local quadratics together with the constants the convergence
/// bounds are stated in.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    p: usize,
    locals: Vec<LocalQuadratic>,
    mu: f64,
    lip: f64,
    x_star: DVector<f64>,
    feasible_bound: Option<f64>,
}

impl ObjectiveSpec {
    /// `n` copies of `1/2 x^T x` in dimension `p` with `mu = L = 1`, `x* = 0`.
    pub fn paper_quadratic(n: usize, p: usize) -> Result<Self> {
        Self::paper_quadratic_with(n, p, Decomposition::IdenticalCopy)
    }

    /// The experimental cost under an explicit decomposition. Both
    /// conventions report `mu = L = 1`: for identical copies these are the
    /// per-agent constants, for shares they are the constants of the sum.
    pub fn paper_quadratic_with(n: usize, p: usize, split: Decomposition) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!(
                "paper quadratic needs n >= 1 and p >= 1, got n={n}, p={p}"
            )));
        }
        let scale = match split {
            Decomposition::IdenticalCopy => 1.0,
            Decomposition::Share => 1.0 / n as f64,
        };
        Ok(Self {
            p,
            locals: vec![LocalQuadratic::identity(p, scale); n],
            mu: 1.0,
            lip: 1.0,
            x_star: DVector::zeros(p),
            feasible_bound: None,
        })
    }

    /// General quadratics. `mu` and `L` are the extreme eigenvalues of
    /// `sum_i A_i` and `x*` solves `sum_i A_i (x - b_i) = 0`.
    pub fn from_locals(locals: Vec<LocalQuadratic>) -> Result<Self> {
        let first = locals
            .first()
            .ok_or_else(|| Error::invalid("objective needs at least one local function"))?;
        let p = first.b.len();
        if let Some(bad) = locals.iter().find(|l| l.b.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.b.len(),
            });
        }
        let hessian = locals
            .iter()
            .fold(DMatrix::zeros(p, p), |acc, l| acc + &l.a);
        let rhs = locals
            .iter()
            .fold(DVector::zeros(p), |acc, l| acc + &l.a * &l.b);
        let eig = SymmetricEigen::new(hessian.clone()).eigenvalues;
        let x_star = hessian
            .cholesky()
            .ok_or_else(|| Error::invalid("summed curvature is not positive definite"))?
            .solve(&rhs);
        Ok(Self {
            p,
            locals,
            mu: eig.min(),
            lip: eig.max(),
            x_star,
            feasible_bound: None,
        })
    }

    /// Attaches the optional bound `B` on the decision set. Recorded only;
    /// no update projects onto it.
    pub fn with_feasible_bound(mut self, bound: Option<f64>) -> Result<Self> {
        if let Some(b) = bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::invalid(format!(
                    "feasible bound must be positive and finite, got {b}"
                )));
            }
        }
        self.feasible_bound = bound;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn locals(&self) -> &[LocalQuadratic] {
        &self.locals
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn feasible_bound(&self) -> Option<f64> {
        self.feasible_bound
    }

    pub fn global_constants(&self) -> (f64, f64, DVector<f64>) {
        (self.mu, self.lip, self.x_star.clone())
    }

    fn local(&self, i: usize, x: &DVector<f64>) -> Result<&LocalQuadratic> {
        let local = self.locals.get(i).ok_or_else(|| {
            Error::invalid(format!(
                "agent {} out of range 1..={}",
                i + 1,
                self.locals.len()
            ))
        })?;
        if x.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: x.len(),
            });
        }
        Ok(local)
    }

    /// `A_i (x - b_i)` for 0-based agent `i`.
    pub fn grad_local(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.local(i, x)?.grad(x))
    }

    pub fn eval_local(&self, i: usize, x: &DVector<f64>) -> Result<f64> {
        Ok(self.local(i, x)?.eval(x))
    }

    /// `sum_i f_i(x)`.
    pub fn eval_global(&self, x: &DVector<f64>) -> f64 {
        self.locals.iter().map(|l| l.eval(x)).sum()
    }

    pub fn grad_global(&self, x: &DVector<f64>) -> DVector<f64> {
        self.locals
            .iter()
            .fold(DVector::zeros(self.p), |acc, l| acc + l.grad(x))
    }

    /// True when `x` leaves the ball `||x|| <= B`; always false without `B`.
    pub fn exceeds_bound(&self, x: &DVector<f64>) -> bool {
        self.feasible_bound.is_some_and(|b| x.norm() > b)
    }
}
