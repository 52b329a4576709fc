//! Minimal dense helpers for the small matrices this crate touches
//! (Hessians of registered potentials, 2x2 / 3x3 noise Gram blocks).

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R> {
    dim: usize,
    data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![R::zero(); dim * dim],
        }
    }

    pub fn from_diag(diag: &[R]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.dim + j] = v;
    }

    pub fn matvec(&self, x: &[R]) -> Vec<R> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// x^T A y
    pub fn bilinear(&self, x: &[R], y: &[R]) -> R {
        let mut acc = R::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc = acc + x[i] * self.get(i, j) * y[j];
            }
        }
        acc
    }

    pub fn trace(&self) -> R {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sizes here are tiny (d and the Gram order), so Jacobi is plenty.
pub fn sym_eigenvalues<R: Real>(m: &Mat<R>) -> Vec<R> {
    let n = m.dim();
    let mut a = m.clone();
    for _sweep in 0..64 {
        let mut off = R::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= R::lit(1e-300).max(R::epsilon() * a.trace().abs().max(R::one())) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == R::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (R::lit(2.0) * apq);
                let t = {
                    let sign = if theta >= R::zero() {
                        R::one()
                    } else {
                        -R::one()
                    };
                    sign / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<R> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Lower-triangular square root with pivot clamping.
///
/// Pivots within `tol` (absolute) or a 1e-10 relative margin of zero are
/// rounded to zero and their column dropped: rank-deficient Gram blocks land
/// there both through rounding and through near-total correlation (the
/// midpoint fraction drawn next to 1 makes two noise blocks coincide), and
/// dividing by such a pivot would poison the remaining columns. A pivot
/// materially below zero is an error.
pub fn cholesky_clamped<R: Real>(m: &Mat<R>, tol: R) -> Result<Mat<R>> {
    let n = m.dim();
    let mut l = Mat::zeros(n);
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot = pivot - l.get(j, k) * l.get(j, k);
        }
        // column conditional variance below 1e-10 of its marginal variance
        // counts as exact linear dependence
        let col_tol = tol + R::lit(1e-10) * m.get(j, j).abs();
        if pivot < -col_tol {
            return Err(Error::Indefinite {
                pivot: pivot.as_f64(),
            });
        }
        if pivot <= col_tol {
            // dependent column: zero it out (entries below are determined by
            // the previous columns up to the clamped tolerance)
            l.set(j, j, R::zero());
            continue;
        }
        let piv = pivot.sqrt();
        l.set(j, j, piv);
        for i in (j + 1)..n {
            let mut r = m.get(i, j);
            for k in 0..j {
                r = r - l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, r / piv);
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_matches_known_eigenvalues() {
        let mut m = Mat::<f64>::zeros(2);
        m.set(0, 0, 2.0);
        m.set(1, 1, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let e = sym_eigenvalues(&m);
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut m = Mat::<f64>::zeros(3);
        let vals = [[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, vals[i][j]);
            }
        }
        let l = cholesky_clamped(&m, 1e-12).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut r = 0.0;
                for k in 0..3 {
                    r += l.get(i, k) * l.get(j, k);
                }
                assert_relative_eq!(r, vals[i][j], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_clamps_tiny_negative_pivot() {
        let mut m = Mat::<f64>::zeros(2);
        m.set(0, 0, -1e-13);
        m.set(1, 1, 1.0);
        let l = cholesky_clamped(&m, 1e-12).unwrap();
        assert_eq!(l.get(0, 0), 0.0);
        assert_eq!(l.get(1, 1), 1.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = Mat::<f64>::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(0, 1, 2.0);
        m.set(1, 0, 2.0);
        assert!(cholesky_clamped(&m, 1e-12).is_err());
    }
}
