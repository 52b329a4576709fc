//! Polynomial test functions with exact derivative tensors up to order 4.
//!
//! The CLT machinery needs trusted D^2..D^4 of the integrand's primitive, so
//! test functions are polynomials of degree at most 4: derivatives are exact
//! and automatically bounded/Lipschitz on the orders the theory requires.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::Real;

pub const MAX_DEGREE: u32 = 4;

#[derive(Clone, Debug)]
pub struct Monomial<R> {
    pub coeff: R,
    pub exps: Vec<u8>,
}

impl<R: Real> Monomial<R> {
    fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    fn eval(&self, x: &[R]) -> R {
        let mut v = self.coeff;
        for (xi, &e) in x.iter().zip(&self.exps) {
            v = v * xi.powi(e as i32);
        }
        v
    }

    /// Partial derivative along coordinate `i`.
    fn diff(&self, i: usize) -> Option<Monomial<R>> {
        let e = self.exps[i];
        if e == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        exps[i] = e - 1;
        Some(Monomial {
            coeff: self.coeff * R::from_u8(e).unwrap(),
            exps,
        })
    }
}

/// Scalar polynomial test function on R^d, degree <= 4.
#[derive(Clone, Debug)]
pub struct TestFunction<R> {
    dim: usize,
    terms: Vec<Monomial<R>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunctionFamily {
    CoordinateLinear,
    CoordinateQuadratic,
    CustomPolynomial,
}

impl<R: Real> TestFunction<R> {
    /// phi(x) = x_i
    pub fn coordinate_linear(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut exps = vec![0u8; dim];
        exps[index] = 1;
        Ok(Self {
            dim,
            terms: vec![Monomial {
                coeff: R::one(),
                exps,
            }],
        })
    }

    /// phi(x) = x_i^2
    pub fn coordinate_quadratic(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut exps = vec![0u8; dim];
        exps[index] = 2;
        Ok(Self {
            dim,
            terms: vec![Monomial {
                coeff: R::one(),
                exps,
            }],
        })
    }

    /// Arbitrary polynomial, validated to degree <= 4.
    pub fn polynomial(dim: usize, terms: Vec<Monomial<R>>) -> Result<Self> {
        for t in &terms {
            if t.exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.exps.len(),
                });
            }
            if t.degree() > MAX_DEGREE {
                return Err(Error::OutOfRange {
                    what: "polynomial degree",
                    value: t.degree() as f64,
                });
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    fn check_dim(&self, x: &[R]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[R]) -> Result<R> {
        self.check_dim(x)?;
        Ok(self.terms.iter().map(|t| t.eval(x)).sum())
    }

    fn diff(&self, i: usize) -> TestFunction<R> {
        TestFunction {
            dim: self.dim,
            terms: self.terms.iter().filter_map(|t| t.diff(i)).collect(),
        }
    }

    pub fn grad(&self, x: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        (0..self.dim).map(|i| self.diff(i).eval(x)).collect()
    }

    pub fn hessian(&self, x: &[R]) -> Result<Mat<R>> {
        self.check_dim(x)?;
        let mut m = Mat::zeros(self.dim);
        for i in 0..self.dim {
            let di = self.diff(i);
            for j in i..self.dim {
                let v = di.diff(j).eval(x)?;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(m)
    }

    pub fn laplacian(&self, x: &[R]) -> Result<R> {
        self.check_dim(x)?;
        (0..self.dim)
            .map(|i| self.diff(i).diff(i).eval(x))
            .sum::<Result<R>>()
    }

    /// grad(laplacian phi)(x): component i is sum_j D^3 phi_{ijj}(x).
    /// This is the only D^3-contraction the bias constants need, because the
    /// second and third tensor slots are always paired with isotropic noise.
    pub fn grad_laplacian(&self, x: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        (0..self.dim)
            .map(|i| {
                let di = self.diff(i);
                (0..self.dim)
                    .map(|j| di.diff(j).diff(j).eval(x))
                    .sum::<Result<R>>()
            })
            .collect()
    }

    /// laplacian(laplacian phi)(x) = sum_{i,k} D^4 phi_{iikk}(x).
    pub fn bilaplacian(&self, x: &[R]) -> Result<R> {
        self.check_dim(x)?;
        let mut acc = R::zero();
        for i in 0..self.dim {
            let dii = self.diff(i).diff(i);
            for k in 0..self.dim {
                acc = acc + dii.diff(k).diff(k).eval(x)?;
            }
        }
        Ok(acc)
    }

    /// w with w_i = <D^3 phi(x), e_i ⊗ a ⊗ b>.
    pub fn d3_contract(&self, x: &[R], a: &[R], b: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        self.check_dim(a)?;
        self.check_dim(b)?;
        (0..self.dim)
            .map(|i| {
                let di = self.diff(i);
                let mut acc = R::zero();
                for j in 0..self.dim {
                    if a[j] == R::zero() {
                        continue;
                    }
                    let dij = di.diff(j);
                    for k in 0..self.dim {
                        if b[k] == R::zero() {
                            continue;
                        }
                        acc = acc + dij.diff(k).eval(x)? * a[j] * b[k];
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// <D^4 phi(x), v ⊗ v ⊗ v ⊗ v>.
    pub fn d4_contract4(&self, x: &[R], v: &[R]) -> Result<R> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let mut acc = R::zero();
        for i in 0..self.dim {
            if v[i] == R::zero() {
                continue;
            }
            let di = self.diff(i);
            for j in 0..self.dim {
                if v[j] == R::zero() {
                    continue;
                }
                let dij = di.diff(j);
                for k in 0..self.dim {
                    if v[k] == R::zero() {
                        continue;
                    }
                    let dijk = dij.diff(k);
                    for l in 0..self.dim {
                        if v[l] == R::zero() {
                            continue;
                        }
                        acc = acc + dijk.diff(l).eval(x)? * v[i] * v[j] * v[k] * v[l];
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Monomial over phase space (x, v), polynomial in both blocks.
#[derive(Clone, Debug)]
pub struct PhaseMonomial<R> {
    pub coeff: R,
    pub x_exps: Vec<u8>,
    pub v_exps: Vec<u8>,
}

/// Test function g(x, v): polynomial in v with x-polynomial coefficients, so
/// that the velocity derivatives entering the kinetic generator are analytic.
#[derive(Clone, Debug)]
pub struct PhaseTestFunction<R> {
    dim: usize,
    terms: Vec<PhaseMonomial<R>>,
}

impl<R: Real> PhaseTestFunction<R> {
    pub fn new(dim: usize, terms: Vec<PhaseMonomial<R>>) -> Result<Self> {
        for t in &terms {
            if t.x_exps.len() != dim || t.v_exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.x_exps.len().max(t.v_exps.len()),
                });
            }
        }
        Ok(Self { dim, terms })
    }

    /// g(x, v) = phi(x), no velocity dependence.
    pub fn from_position(tf: &TestFunction<R>) -> Self {
        Self {
            dim: tf.dim,
            terms: tf
                .terms
                .iter()
                .map(|t| PhaseMonomial {
                    coeff: t.coeff,
                    x_exps: t.exps.clone(),
                    v_exps: vec![0; tf.dim],
                })
                .collect(),
        }
    }

    /// g(x, v) = <v, grad phi(x)>, the class with the fast kinetic CLT.
    pub fn velocity_gradient(tf: &TestFunction<R>) -> Self {
        let mut terms = Vec::new();
        for i in 0..tf.dim {
            for t in &tf.diff(i).terms {
                let mut v_exps = vec![0u8; tf.dim];
                v_exps[i] = 1;
                terms.push(PhaseMonomial {
                    coeff: t.coeff,
                    x_exps: t.exps.clone(),
                    v_exps,
                });
            }
        }
        Self { dim: tf.dim, terms }
    }

    /// g(x, v) = v_i^2
    pub fn velocity_squared(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut v_exps = vec![0u8; dim];
        v_exps[index] = 2;
        Ok(Self {
            dim,
            terms: vec![PhaseMonomial {
                coeff: R::one(),
                x_exps: vec![0; dim],
                v_exps,
            }],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dims(&self, x: &[R], v: &[R]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[R], v: &[R]) -> Result<R> {
        self.check_dims(x, v)?;
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let mut val = t.coeff;
                for (xi, &e) in x.iter().zip(&t.x_exps) {
                    val = val * xi.powi(e as i32);
                }
                for (vi, &e) in v.iter().zip(&t.v_exps) {
                    val = val * vi.powi(e as i32);
                }
                val
            })
            .sum())
    }

    fn diff(&self, i: usize, in_v: bool) -> PhaseTestFunction<R> {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let exps = if in_v { &t.v_exps } else { &t.x_exps };
                let e = exps[i];
                if e == 0 {
                    return None;
                }
                let mut t2 = t.clone();
                if in_v {
                    t2.v_exps[i] = e - 1;
                } else {
                    t2.x_exps[i] = e - 1;
                }
                t2.coeff = t2.coeff * R::from_u8(e).unwrap();
                Some(t2)
            })
            .collect();
        PhaseTestFunction {
            dim: self.dim,
            terms,
        }
    }

    pub fn grad_x(&self, x: &[R], v: &[R]) -> Result<Vec<R>> {
        self.check_dims(x, v)?;
        (0..self.dim)
            .map(|i| self.diff(i, false).eval(x, v))
            .collect()
    }

    pub fn grad_v(&self, x: &[R], v: &[R]) -> Result<Vec<R>> {
        self.check_dims(x, v)?;
        (0..self.dim)
            .map(|i| self.diff(i, true).eval(x, v))
            .collect()
    }

    pub fn laplacian_v(&self, x: &[R], v: &[R]) -> Result<R> {
        self.check_dims(x, v)?;
        (0..self.dim)
            .map(|i| self.diff(i, true).diff(i, true).eval(x, v))
            .sum::<Result<R>>()
    }
}
