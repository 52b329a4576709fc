//! Registered family of strongly convex potentials with exact derivative
//! tensors up to the order the asymptotic bias formulas need.
//!
//! Black-box closures are deliberately not supported: the CLT bias constants
//! contract third-derivative tensors of `f`, so every registered family
//! carries trusted analytic tensors and exact strong-convexity constants.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, Mat};
use crate::real::Real;

/// Family tag of a registered potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialFamily {
    IsotropicQuadratic,
    DiagonalQuadratic,
    QuadraticLogCosh,
}

#[derive(Clone, Debug)]
enum Kind<R> {
    /// f(x) = c ||x||^2 / 2
    Iso { c: R },
    /// f(x) = sum_i c_i x_i^2 / 2
    Diag { curv: Vec<R> },
    /// f(x) = c ||x||^2 / 2 + eps * sum_i log cosh(x_i)
    LogCosh { c: R, eps: R },
}

/// A strongly convex, gradient-Lipschitz potential with minimum at the origin.
#[derive(Clone, Debug)]
pub struct Potential<R> {
    dim: usize,
    kind: Kind<R>,
}

/// Numerically robust log cosh: `|x| + log1p(e^{-2|x|}) - log 2`.
fn log_cosh<R: Real>(x: R) -> R {
    x.abs() + (-R::lit(2.0) * x.abs()).exp().ln_1p() - R::lit(std::f64::consts::LN_2)
}

/// sech^2 via 1 - tanh^2 (stays in [0,1] for all x).
fn sech2<R: Real>(x: R) -> R {
    let t = x.tanh();
    R::one() - t * t
}

impl<R: Real> Potential<R> {
    pub fn isotropic_quadratic(dim: usize, curvature: R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange {
                what: "dimension",
                value: 0.0,
            });
        }
        if !(curvature > R::zero()) {
            return Err(Error::OutOfRange {
                what: "curvature",
                value: curvature.as_f64(),
            });
        }
        Ok(Self {
            dim,
            kind: Kind::Iso { c: curvature },
        })
    }

    pub fn diagonal_quadratic(curvatures: Vec<R>) -> Result<Self> {
        if curvatures.is_empty() {
            return Err(Error::OutOfRange {
                what: "dimension",
                value: 0.0,
            });
        }
        if let Some(bad) = curvatures.iter().find(|c| !(**c > R::zero())) {
            return Err(Error::OutOfRange {
                what: "curvature",
                value: bad.as_f64(),
            });
        }
        Ok(Self {
            dim: curvatures.len(),
            kind: Kind::Diag { curv: curvatures },
        })
    }

    pub fn quadratic_log_cosh(dim: usize, base_curvature: R, amplitude: R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange {
                what: "dimension",
                value: 0.0,
            });
        }
        if !(base_curvature > R::zero()) {
            return Err(Error::OutOfRange {
                what: "curvature",
                value: base_curvature.as_f64(),
            });
        }
        if amplitude < R::zero() {
            return Err(Error::OutOfRange {
                what: "log-cosh amplitude",
                value: amplitude.as_f64(),
            });
        }
        Ok(Self {
            dim,
            kind: Kind::LogCosh {
                c: base_curvature,
                eps: amplitude,
            },
        })
    }

    pub fn family(&self) -> PotentialFamily {
        match self.kind {
            Kind::Iso { .. } => PotentialFamily::IsotropicQuadratic,
            Kind::Diag { .. } => PotentialFamily::DiagonalQuadratic,
            Kind::LogCosh { .. } => PotentialFamily::QuadraticLogCosh,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong-convexity constant m (inf of Hessian eigenvalues).
    pub fn m(&self) -> R {
        match &self.kind {
            Kind::Iso { c } => *c,
            Kind::Diag { curv } => curv.iter().cloned().fold(R::infinity(), R::min),
            // log cosh'' = sech^2 in (0,1]; infimum of c + eps*sech^2 is c
            Kind::LogCosh { c, .. } => *c,
        }
    }

    /// Gradient-Lipschitz constant M (sup of Hessian eigenvalues).
    pub fn big_m(&self) -> R {
        match &self.kind {
            Kind::Iso { c } => *c,
            Kind::Diag { curv } => curv.iter().cloned().fold(R::zero(), R::max),
            Kind::LogCosh { c, eps } => *c + *eps,
        }
    }

    /// Condition number kappa = M/m >= 1.
    pub fn kappa(&self) -> R {
        self.big_m() / self.m()
    }

    /// Known minimizer (the origin for every registered family).
    pub fn x_star(&self) -> Vec<R> {
        vec![R::zero(); self.dim]
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
        let half = R::lit(0.5);
        Ok(match &self.kind {
            Kind::Iso { c } => half * *c * x.iter().map(|&v| v * v).sum(),
            Kind::Diag { curv } => half * x.iter().zip(curv).map(|(&v, &ci)| ci * v * v).sum(),
            Kind::LogCosh { c, eps } => {
                let quad: R = half * *c * x.iter().map(|&v| v * v).sum();
                let lc: R = x.iter().map(|&v| log_cosh(v)).sum();
                quad + *eps * lc
            }
        })
    }

    pub fn grad(&self, x: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            Kind::Iso { c } => x.iter().map(|&v| *c * v).collect(),
            Kind::Diag { curv } => x.iter().zip(curv).map(|(&v, &ci)| ci * v).collect(),
            Kind::LogCosh { c, eps } => x.iter().map(|&v| *c * v + *eps * v.tanh()).collect(),
        })
    }

    /// Per-coordinate Hessian diagonal; every registered family is separable.
    pub fn hessian_diag(&self, x: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            Kind::Iso { c } => vec![*c; self.dim],
            Kind::Diag { curv } => curv.clone(),
            Kind::LogCosh { c, eps } => x.iter().map(|&v| *c + *eps * sech2(v)).collect(),
        })
    }

    /// Hessian D^2 f(x) as a dense matrix.
    pub fn d2(&self, x: &[R]) -> Result<Mat<R>> {
        Ok(Mat::from_diag(&self.hessian_diag(x)?))
    }

    /// v with v_i = <D^3 f(x), e_i ⊗ a ⊗ b>, the contraction used by the
    /// asymptotic bias constants. Exactly zero for the quadratic families.
    pub fn d3_contract(&self, x: &[R], a: &[R], b: &[R]) -> Result<Vec<R>> {
        self.check_dim(x)?;
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(match &self.kind {
            Kind::Iso { .. } | Kind::Diag { .. } => vec![R::zero(); self.dim],
            Kind::LogCosh { eps, .. } => {
                // separable: D^3 f_{iii} = eps * (log cosh)''' = -2 eps sech^2 tanh
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let third = -R::lit(2.0) * sech2(v) * v.tanh();
                        *eps * third * a[i] * b[i]
                    })
                    .collect()
            }
        })
    }
}

/// One probe of the smoothness/convexity assumption.
#[derive(Clone, Debug)]
pub struct ProbeCheck {
    pub point: Vec<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// min_eig - m (>= 0 when the lower bound holds)
    pub lower_margin: f64,
    /// M - max_eig (>= 0 when the upper bound holds)
    pub upper_margin: f64,
    pub hessian_ok: bool,
    pub grad_fd_rel_error: f64,
    pub grad_ok: bool,
}

#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub m: f64,
    pub big_m: f64,
    pub probes: Vec<ProbeCheck>,
    pub all_pass: bool,
}

/// Central finite-difference step for the consistency spot checks. Balances
/// truncation against rounding at 64-bit precision.
pub const FD_STEP: f64 = 1e-5;

/// Spot-checks `m I <= D^2 f(x) <= M I` on the probes (by eigenvalues of the
/// analytic Hessian) and the gradient against central finite differences of
/// `eval`. Violations are reported with their margins, never raised.
pub fn verify_assumption<R: Real>(p: &Potential<R>, probes: &[Vec<R>]) -> Result<AssumptionReport> {
    if probes.is_empty() {
        return Err(Error::OutOfRange {
            what: "probe count",
            value: 0.0,
        });
    }
    let m = p.m().as_f64();
    let big_m = p.big_m().as_f64();
    let h = R::lit(FD_STEP);
    let eig_tol = 1e-9 * (1.0 + big_m.abs());

    let mut probes_out = Vec::with_capacity(probes.len());
    let mut all_pass = true;
    for x in probes {
        let eig = sym_eigenvalues(&p.d2(x)?);
        let min_eig = eig.first().unwrap().as_f64();
        let max_eig = eig.last().unwrap().as_f64();
        let lower_margin = min_eig - m;
        let upper_margin = big_m - max_eig;
        let hessian_ok = lower_margin >= -eig_tol && upper_margin >= -eig_tol;

        let g = p.grad(x)?;
        let gnorm = g.iter().map(|&v| (v * v).as_f64()).sum::<f64>().sqrt();
        let mut fd_err2 = 0.0f64;
        let mut xp = x.clone();
        for i in 0..x.len() {
            let xi = x[i];
            xp[i] = xi + h;
            let fp = p.eval(&xp)?;
            xp[i] = xi - h;
            let fm = p.eval(&xp)?;
            xp[i] = xi;
            let fd = ((fp - fm) / (R::lit(2.0) * h)).as_f64();
            fd_err2 += (fd - g[i].as_f64()).powi(2);
        }
        let rel = fd_err2.sqrt() / (1.0 + gnorm);
        let grad_ok = rel <= 1e-6;

        all_pass &= hessian_ok && grad_ok;
        probes_out.push(ProbeCheck {
            point: x.iter().map(|v| v.as_f64()).collect(),
            min_eigenvalue: min_eig,
            max_eigenvalue: max_eig,
            lower_margin,
            upper_margin,
            hessian_ok,
            grad_fd_rel_error: rel,
            grad_ok,
        });
    }
    Ok(AssumptionReport {
        m,
        big_m,
        probes: probes_out,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn logcosh_1d() -> Potential<f64> {
        Potential::quadratic_log_cosh(1, 1.0, 0.5).unwrap()
    }

    #[test]
    fn eval_examples() {
        let iso = Potential::isotropic_quadratic(2, 1.0).unwrap();
        assert_eq!(iso.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let iso1 = Potential::isotropic_quadratic(1, 1.0).unwrap();
        assert_eq!(iso1.eval(&[2.0]).unwrap(), 2.0);
        assert_eq!(logcosh_1d().eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn grad_examples() {
        let iso = Potential::isotropic_quadratic(2, 1.0).unwrap();
        assert_eq!(iso.grad(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
        let lc = logcosh_1d();
        assert_eq!(lc.grad(&lc.x_star()).unwrap(), vec![0.0]);
        // 1 + 0.5 tanh(1), high-precision reference
        assert_relative_eq!(
            lc.grad(&[1.0]).unwrap()[0],
            1.380_797_077_977_882_4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn d3_examples() {
        let diag = Potential::diagonal_quadratic(vec![1.0, 3.0]).unwrap();
        assert_eq!(
            diag.d3_contract(&[0.3, -0.4], &[1.0, 1.0], &[1.0, 1.0])
                .unwrap(),
            vec![0.0, 0.0]
        );
        let lc = logcosh_1d();
        assert_eq!(lc.d3_contract(&[0.0], &[1.0], &[1.0]).unwrap(), vec![0.0]);
        // 0.5 * (-2 sech^2(0.5) tanh(0.5)), high-precision reference
        assert_relative_eq!(
            lc.d3_contract(&[0.5], &[1.0], &[1.0]).unwrap()[0],
            -0.363_430_990_691_793_6,
            max_relative = 1e-14
        );
    }

    #[test]
    fn constants_per_family() {
        let diag = Potential::diagonal_quadratic(vec![1.0, 3.0]).unwrap();
        assert_eq!(diag.m(), 1.0);
        assert_eq!(diag.big_m(), 3.0);
        assert_eq!(diag.kappa(), 3.0);
        let lc = logcosh_1d();
        assert_eq!(lc.m(), 1.0);
        assert_eq!(lc.big_m(), 1.5);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let iso = Potential::isotropic_quadratic(2, 1.0).unwrap();
        assert!(matches!(
            iso.eval(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(iso.grad(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn verify_assumption_on_registered_families() {
        let probes: Vec<Vec<f64>> = (-5..=5).map(|k| vec![k as f64 / 1.0]).collect();
        let rep = verify_assumption(&logcosh_1d(), &probes).unwrap();
        assert!(rep.all_pass);
        for pc in &rep.probes {
            assert!(pc.min_eigenvalue >= 1.0 - 1e-12);
            assert!(pc.max_eigenvalue <= 1.5 + 1e-12);
        }

        let diag = Potential::diagonal_quadratic(vec![1.0, 3.0]).unwrap();
        let probes2 = vec![vec![0.5, -2.0], vec![1.0, 1.0]];
        let rep2 = verify_assumption(&diag, &probes2).unwrap();
        assert!(rep2.all_pass);
        assert_eq!(rep2.m, 1.0);
        assert_eq!(rep2.big_m, 3.0);
        for pc in &rep2.probes {
            assert_abs_diff_eq!(pc.lower_margin, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(pc.upper_margin, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_consistency_random_probes() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let pots: Vec<Potential<f64>> = vec![
            Potential::isotropic_quadratic(3, 1.0).unwrap(),
            Potential::diagonal_quadratic(vec![0.5, 1.0, 4.0]).unwrap(),
            Potential::quadratic_log_cosh(3, 1.0, 0.5).unwrap(),
        ];
        for p in &pots {
            let probes: Vec<Vec<f64>> = (0..100)
                .map(|_| (0..3).map(|_| rng.random_range(-4.0..4.0)).collect())
                .collect();
            let rep = verify_assumption(p, &probes).unwrap();
            assert!(rep.all_pass, "family {:?}", p.family());
        }
    }

    #[test]
    fn hessian_matches_fd_of_grad_and_d3_matches_fd_of_hessian() {
        let lc = logcosh_1d();
        let h = FD_STEP;
        for &x in &[-1.3, -0.2, 0.7, 2.1] {
            let hess = lc.hessian_diag(&[x]).unwrap()[0];
            let fd_h = (lc.grad(&[x + h]).unwrap()[0] - lc.grad(&[x - h]).unwrap()[0]) / (2.0 * h);
            assert_abs_diff_eq!(hess, fd_h, epsilon = 1e-6 * (1.0 + hess.abs()));

            let d3 = lc.d3_contract(&[x], &[1.0], &[1.0]).unwrap()[0];
            let fd_d3 = (lc.hessian_diag(&[x + h]).unwrap()[0]
                - lc.hessian_diag(&[x - h]).unwrap()[0])
                / (2.0 * h);
            assert_abs_diff_eq!(d3, fd_d3, epsilon = 1e-5);
        }
    }
}
