//! Quadrature utilities: Gauss–Hermite rules for Gaussian expectations and
//! adaptive Simpson integration for the Brownian kernel oracles.

use crate::error::{Error, Result};
use crate::real::Real;

/// Nodes and weights of the n-point Gauss–Hermite rule for the weight
/// e^{-t^2}, computed by Newton iteration on the Hermite recurrence.
/// Exact for polynomials up to degree 2n - 1.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let m = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        // initial guesses (Numerical-Recipes style seeding)
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // recurrence for orthonormal Hermite functions
            let mut p1 = 1.0 / sqrt_pi.sqrt();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        let w = 2.0 / (pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // enforce exact symmetry: odd n has a node at 0
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// E[f(Z)] for Z ~ N(0, I_d) via a tensor Gauss–Hermite grid.
pub fn expect_std_gaussian<R, F>(dim: usize, nodes_per_axis: usize, f: F) -> R
where
    R: Real,
    F: Fn(&[R]) -> R,
{
    let (t, w) = gauss_hermite(nodes_per_axis);
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    // map to probabilists' convention: x = sqrt(2) t, weight w / sqrt(pi)
    let x: Vec<R> = t.iter().map(|&v| R::lit(sqrt2 * v)).collect();
    let wn: Vec<R> = w.iter().map(|&v| R::lit(v * inv_sqrt_pi)).collect();

    let mut idx = vec![0usize; dim];
    let mut point = vec![R::zero(); dim];
    let mut acc = R::zero();
    loop {
        let mut weight = R::one();
        for k in 0..dim {
            point[k] = x[idx[k]];
            weight = weight * wn[idx[k]];
        }
        acc = acc + weight * f(&point);
        // odometer increment
        let mut k = 0;
        loop {
            if k == dim {
                return acc;
            }
            idx[k] += 1;
            if idx[k] < nodes_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    fn simpson<F: Fn(f64) -> f64 + ?Sized>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
    ) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64 + ?Sized>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Expectations under a one-dimensional Boltzmann density pi ∝ e^{-f} whose
/// potential is `base_curvature * x^2/2` plus a bounded smooth perturbation:
/// the ratio of two Gauss–Hermite sums against the quadratic base measure.
pub fn expect_boltzmann_1d<R, Fv, Fp>(
    base_curvature: R,
    nodes: usize,
    perturbation: Fp,
    f: Fv,
) -> Result<R>
where
    R: Real,
    Fv: Fn(R) -> R,
    Fp: Fn(R) -> R,
{
    if !(base_curvature > R::zero()) {
        return Err(Error::OutOfRange {
            what: "base curvature",
            value: base_curvature.as_f64(),
        });
    }
    let sigma = R::one() / base_curvature.sqrt();
    let mut num = R::zero();
    let mut den = R::zero();
    let (t, w) = gauss_hermite(nodes);
    let sqrt2 = R::lit(std::f64::consts::SQRT_2);
    for (ti, wi) in t.iter().zip(&w) {
        let x = sigma * sqrt2 * R::lit(*ti);
        let reweight = (-perturbation(x)).exp();
        let wt = R::lit(*wi) * reweight;
        num = num + wt * f(x);
        den = den + wt;
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn hermite_moments_match_gaussian() {
        for &n in &[5usize, 10, 20, 40] {
            let m2: f64 = expect_std_gaussian(1, n, |x: &[f64]| x[0] * x[0]);
            assert_relative_eq!(m2, 1.0, max_relative = 1e-12);
            if n >= 3 {
                let m4: f64 = expect_std_gaussian(1, n, |x: &[f64]| x[0].powi(4));
                assert_relative_eq!(m4, 3.0, max_relative = 1e-11);
            }
            let m1: f64 = expect_std_gaussian(1, n, |x: &[f64]| x[0]);
            assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn hermite_tensor_grid_2d() {
        let e: f64 = expect_std_gaussian(2, 12, |x: &[f64]| x[0] * x[0] * x[1] * x[1]);
        assert_relative_eq!(e, 1.0, max_relative = 1e-11);
        let cross: f64 = expect_std_gaussian(2, 12, |x: &[f64]| x[0] * x[1]);
        assert_abs_diff_eq!(cross, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_exact_on_smooth_integrals() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, max_relative = 1e-12);
        let v2 = adaptive_simpson(&|x: f64| (1.0 - (-2.0 * x).exp()).powi(2), 0.0, 0.3, 1e-13);
        // int (1 - e^{-2x})^2 = x + (1 - e^{-4x})/4 - (1 - e^{-2x}) at 0.3
        let exact = 0.3 + (1.0 - (-1.2f64).exp()) / 4.0 - (1.0 - (-0.6f64).exp());
        assert_abs_diff_eq!(v2, exact, epsilon = 1e-13);
    }

    #[test]
    fn boltzmann_reduces_to_gaussian_when_unperturbed() {
        let m2 = expect_boltzmann_1d(2.0f64, 40, |_| 0.0, |x| x * x).unwrap();
        assert_relative_eq!(m2, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn boltzmann_logcosh_centering() {
        // perturbed density stays symmetric: odd moments vanish
        let m1 = expect_boltzmann_1d(1.0f64, 60, |x: f64| 0.5 * (x.cosh()).ln(), |x| x).unwrap();
        assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-12);
        // second moment shrinks relative to the base Gaussian
        let m2 =
            expect_boltzmann_1d(1.0f64, 60, |x: f64| 0.5 * (x.cosh()).ln(), |x| x * x).unwrap();
        assert!(m2 < 1.0 && m2 > 0.5);
    }
}
