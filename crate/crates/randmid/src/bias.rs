//! Stationary-bias upper bounds for the constant-step chains, exact
//! stationary oracles for quadratic targets, and empirical Wasserstein-2
//! distances.

use crate::error::{Error, Result};
use crate::real::Real;

/// Inputs for the constant-step bias bounds. The kinetic bound's universal
/// constants default to the explicit values carried by its derivation
/// (82500 and 99000) and stay configurable.
#[derive(Clone, Copy, Debug)]
pub struct BiasBoundInput<R> {
    pub m: R,
    pub big_m: R,
    pub dim: usize,
    pub h: R,
    pub c1: R,
    pub c2: R,
}

impl<R: Real> BiasBoundInput<R> {
    pub fn new(m: R, big_m: R, dim: usize, h: R) -> Self {
        Self {
            m,
            big_m,
            dim,
            h,
            c1: R::lit(82_500.0),
            c2: R::lit(99_000.0),
        }
    }

    pub fn kappa(&self) -> R {
        self.big_m / self.m
    }
}

/// Overdamped randomized-midpoint stationary bias bound:
/// `3 sqrt(d h) (1 + 2 M h)^2 / (kappa^{-1} - M h / sqrt(3))`,
/// valid for h in (0, 2/(m+M)) with a positive denominator.
pub fn rlmc_bias_bound<R: Real>(input: &BiasBoundInput<R>) -> Result<R> {
    let h = input.h;
    let window = R::lit(2.0) / (input.m + input.big_m);
    if !(h > R::zero() && h < window) {
        return Err(Error::Window(format!(
            "h = {} outside (0, {}) = (0, 2/(m+M))",
            h.as_f64(),
            window.as_f64()
        )));
    }
    let denom = input.kappa().recip() - input.big_m * h / R::lit(3.0).sqrt();
    if !(denom > R::zero()) {
        return Err(Error::Window(format!(
            "denominator 1/kappa - M h/sqrt(3) = {} not positive",
            denom.as_f64()
        )));
    }
    let d = R::from_usize(input.dim).unwrap();
    let poly = R::one() + R::lit(2.0) * input.big_m * h;
    Ok(R::lit(3.0) * (d * h).sqrt() * poly * poly / denom)
}

/// Kinetic randomized-midpoint stationary bias bound (at u = 1/M):
/// sqrt of `C1 h^3 (kappa h^3 + 1) d / (1 - h/(4 kappa) - C2 h^3 kappa (1 + kappa h^3))`.
pub fn rulmc_bias_bound<R: Real>(input: &BiasBoundInput<R>) -> Result<R> {
    let h = input.h;
    if !(h > R::zero()) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h.as_f64(),
        });
    }
    let kappa = input.kappa();
    let h3 = h * h * h;
    let denom =
        R::one() - h / (R::lit(4.0) * kappa) - input.c2 * h3 * kappa * (R::one() + kappa * h3);
    if !(denom > R::zero()) {
        return Err(Error::Window(format!(
            "denominator {} not positive (h too large)",
            denom.as_f64()
        )));
    }
    let d = R::from_usize(input.dim).unwrap();
    let w2_sq = input.c1 * h3 * (kappa * h3 + R::one()) * d / denom;
    Ok(w2_sq.sqrt())
}

/// Exact per-coordinate stationary variance of the randomized-midpoint
/// overdamped chain on the isotropic quadratic f(x) = ||x||^2/2.
///
/// The chain is x' = a(alpha) x + xi(alpha) with a = 1 - h + alpha h^2 and
/// Var(xi | alpha) = 2h - 4 alpha h^2 + 2 alpha h^3 (the sqrt(alpha)
/// cross-correlation of the pair produces the -4 alpha h^2 term). Averaging
/// over alpha ~ U[0,1] gives the fixed point
/// (2h - 2h^2 + h^3) / (1 - [(1-h)^2 + (1-h) h^2 + h^4/3]).
pub fn rlmc_stationary_variance_quadratic<R: Real>(h: R) -> Result<R> {
    if !(h > R::zero()) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h.as_f64(),
        });
    }
    let one = R::one();
    let a2 = (one - h) * (one - h) + (one - h) * h * h + h * h * h * h / R::lit(3.0);
    if !(a2 < one) {
        return Err(Error::Window(format!(
            "unstable step size: E[a(alpha)^2] = {} >= 1",
            a2.as_f64()
        )));
    }
    let noise = R::lit(2.0) * h - R::lit(2.0) * h * h + h * h * h;
    Ok(noise / (one - a2))
}

/// Euler counterpart, the AR(1) fixed point 2h / (1 - (1-h)^2).
pub fn lmc_stationary_variance_quadratic<R: Real>(h: R) -> Result<R> {
    if !(h > R::zero()) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h.as_f64(),
        });
    }
    let a = R::one() - h;
    if !(a.abs() < R::one()) {
        return Err(Error::Window(format!(
            "unstable step size h = {}",
            h.as_f64()
        )));
    }
    Ok(R::lit(2.0) * h / (R::one() - a * a))
}

/// Exact stationary second moments (E[x^2], E[xv], E[v^2]) per coordinate of
/// the kinetic randomized-midpoint chain on f = curvature ||x||^2/2 at
/// constant step h and inverse mass u, by solving the linear fixed point of
/// the second-moment map with the alpha-average taken by Gauss-Legendre
/// nodes.
pub fn rulmc_stationary_moments_quadratic<R: Real>(h: R, u: R, curvature: R) -> Result<(R, R, R)> {
    if !(h > R::zero()) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h.as_f64(),
        });
    }
    if !(u > R::zero()) || !(curvature > R::zero()) {
        return Err(Error::OutOfRange {
            what: "inverse mass u",
            value: u.as_f64(),
        });
    }
    let c = curvature;
    // 32-point Gauss-Legendre on [0,1]; the integrands are analytic in alpha
    let (nodes, weights) = gauss_legendre_01();

    // moment map: m' = T m + b over m = (xx, xv, vv)
    let mut t = [[R::zero(); 3]; 3];
    let mut b = [R::zero(); 3];
    let two = R::lit(2.0);
    let half = R::lit(0.5);
    for (&a_node, &w_node) in nodes.iter().zip(&weights) {
        let alpha = R::lit(a_node);
        let w = R::lit(w_node);
        let ag = alpha * h;
        let mid_decay = -(-two * ag).exp_m1() / two;
        let full_decay = -(-two * h).exp_m1() / two;
        let e_tail = (-two * (R::one() - alpha) * h).exp();
        let e_full = (-two * h).exp();
        // x_half = c1 x + c2 v + sqrt(u) n1; grad f(x) = c x
        let c1 = R::one() - (u * half) * (ag - mid_decay) * c;
        let c2 = mid_decay;
        let q = (u * half) * h * (R::one() - e_tail) * c;
        let r = u * h * e_tail * c;
        // x' = (1 - q c1) x + (full_decay - q c2) v + sqrt(u)(n2 - q n1)
        // v' = (-r c1) x + (e_full - r c2) v + sqrt(u)(2 n3 - r n1)
        let axx = R::one() - q * c1;
        let axv = full_decay - q * c2;
        let avx = -(r * c1);
        let avv = e_full - r * c2;

        let gram = crate::noise::rulmc_gram(alpha, h)?;
        let g11 = gram.entry(0, 0);
        let g22 = gram.entry(1, 1);
        let g33 = gram.entry(2, 2);
        let g12 = gram.entry(0, 1);
        let g13 = gram.entry(0, 2);
        let g23 = gram.entry(1, 2);
        // noise covariance of (sqrt(u)(n2 - q n1), sqrt(u)(2 n3 - r n1))
        let nxx = u * (g22 - two * q * g12 + q * q * g11);
        let nxv = u * (two * g23 - r * g12 - two * q * g13 + q * r * g11);
        let nvv = u * (R::lit(4.0) * g33 - R::lit(4.0) * r * g13 + r * r * g11);

        t[0][0] += w * axx * axx;
        t[0][1] += w * two * axx * axv;
        t[0][2] += w * axv * axv;
        t[1][0] += w * axx * avx;
        t[1][1] += w * (axx * avv + axv * avx);
        t[1][2] += w * axv * avv;
        t[2][0] += w * avx * avx;
        t[2][1] += w * two * avx * avv;
        t[2][2] += w * avv * avv;
        b[0] += w * nxx;
        b[1] += w * nxv;
        b[2] += w * nvv;
    }

    // solve (I - T) m = b by 3x3 elimination
    let mut a = [[R::zero(); 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = if i == j { R::one() - t[i][j] } else { -t[i][j] };
        }
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < R::lit(1e-300) {
            return Err(Error::Window(
                "moment map is singular (unstable step)".into(),
            ));
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] = a[row][k] - f * a[col][k];
                }
            }
        }
    }
    let m = [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
    if !m[0].is_finite() || m[0] <= R::zero() {
        return Err(Error::Window(
            "unstable step size for the kinetic chain".into(),
        ));
    }
    Ok((m[0], m[1], m[2]))
}

/// Stationary second moments of the exponential-integrator kinetic chain on
/// f = curvature ||x||^2/2: same fixed-point solve, no alpha average.
pub fn klmc_stationary_moments_quadratic<R: Real>(h: R, u: R, curvature: R) -> Result<(R, R, R)> {
    if !(h > R::zero()) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h.as_f64(),
        });
    }
    if !(u > R::zero()) || !(curvature > R::zero()) {
        return Err(Error::OutOfRange {
            what: "inverse mass u",
            value: u.as_f64(),
        });
    }
    let c = curvature;
    let two = R::lit(2.0);
    let half = R::lit(0.5);
    let decay = -(-two * h).exp_m1() / two;
    let e_full = (-two * h).exp();
    // x' = (1 - q) x + decay v + sqrt(u) n1; v' = -r x + e_full v + 2 sqrt(u) n2
    let axx = R::one() - (u * half) * (h - decay) * c;
    let axv = decay;
    let avx = -(u * decay * c);
    let avv = e_full;
    let gram = crate::noise::klmc_gram(h)?;
    let nxx = u * gram.entry(0, 0);
    let nxv = two * u * gram.entry(0, 1);
    let nvv = R::lit(4.0) * u * gram.entry(1, 1);

    let t = [
        [axx * axx, two * axx * axv, axv * axv],
        [axx * avx, axx * avv + axv * avx, axv * avv],
        [avx * avx, two * avx * avv, avv * avv],
    ];
    let b = [nxx, nxv, nvv];
    let mut a = [[R::zero(); 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = if i == j { R::one() - t[i][j] } else { -t[i][j] };
        }
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        if a[col][col].abs() < R::lit(1e-300) {
            return Err(Error::Window(
                "moment map is singular (unstable step)".into(),
            ));
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] = a[row][k] - f * a[col][k];
                }
            }
        }
    }
    let m = [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
    if !m[0].is_finite() || m[0] <= R::zero() {
        return Err(Error::Window(
            "unstable step size for the kinetic chain".into(),
        ));
    }
    Ok((m[0], m[1], m[2]))
}

fn gauss_legendre_01() -> (Vec<f64>, Vec<f64>) {
    // 32-point Gauss-Legendre on [-1,1], mapped to [0,1]
    let (xs, ws) = gauss_legendre_32();
    let nodes = xs.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    let weights = ws.iter().map(|&w| 0.5 * w).collect();
    (nodes, weights)
}

fn gauss_legendre_32() -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on Legendre P_32
    let n = 32usize;
    let mut xs = vec![0.0f64; n];
    let mut ws = vec![0.0f64; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Exact Wasserstein-2 distance between two one-dimensional empirical
/// measures with equal sample counts: sort both and root-mean-square the
/// order-statistic differences.
pub fn w2_empirical_1d<R: Real>(a: &[R], b: &[R]) -> Result<R> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange {
            what: "sample count",
            value: 0.0,
        });
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = R::from_usize(xs.len()).unwrap();
    let mut acc = crate::real::CompensatedSum::new();
    for (x, y) in xs.iter().zip(&ys) {
        let d = *x - *y;
        acc.add(d * d);
    }
    Ok((acc.value() / n).sqrt())
}

/// Closed-form W2 between diagonal Gaussians:
/// sqrt(||mu1 - mu2||^2 + sum_i (sigma1_i - sigma2_i)^2).
pub fn w2_gaussian_diag<R: Real>(mu1: &[R], sigma1: &[R], mu2: &[R], sigma2: &[R]) -> Result<R> {
    let d = mu1.len();
    if sigma1.len() != d || mu2.len() != d || sigma2.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma1.len().max(mu2.len()).max(sigma2.len()),
        });
    }
    if sigma1.iter().chain(sigma2).any(|s| !(*s > R::zero())) {
        return Err(Error::OutOfRange {
            what: "sigma",
            value: 0.0,
        });
    }
    let mut acc = R::zero();
    for i in 0..d {
        let dm = mu1[i] - mu2[i];
        let ds = sigma1[i] - sigma2[i];
        acc = acc + dm * dm + ds * ds;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn rlmc_bound_golden() {
        let input = BiasBoundInput::new(1.0f64, 1.0, 1, 0.1);
        assert_relative_eq!(
            rlmc_bias_bound(&input).unwrap(),
            1.449_808_693_117_207_8,
            max_relative = 1e-13
        );
        // h = 0.9 passes the window (2/(m+M) = 1) and keeps a positive denominator
        let ok = BiasBoundInput::new(1.0f64, 1.0, 1, 0.9);
        assert!(rlmc_bias_bound(&ok).is_ok());
        let bad = BiasBoundInput::new(1.0f64, 1.0, 1, 1.8);
        assert!(matches!(rlmc_bias_bound(&bad), Err(Error::Window(_))));
    }

    #[test]
    fn rlmc_bound_shrinks_like_sqrt_h() {
        let at = |h: f64| rlmc_bias_bound(&BiasBoundInput::new(1.0, 1.0, 1, h)).unwrap();
        let ratio = at(1e-6) / at(4e-6);
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-3);
    }

    #[test]
    fn rulmc_bound_golden() {
        let input = BiasBoundInput::new(1.0f64, 1.0, 1, 0.01);
        assert_relative_eq!(
            rulmc_bias_bound(&input).unwrap(),
            0.303_017_823_627_430_65,
            max_relative = 1e-12
        );
        let bad = BiasBoundInput::new(1.0f64, 1.0, 1, 0.25);
        assert!(matches!(rulmc_bias_bound(&bad), Err(Error::Window(_))));
    }

    #[test]
    fn rulmc_bound_order_three_halves() {
        let at = |h: f64| rulmc_bias_bound(&BiasBoundInput::new(1.0, 1.0, 1, h)).unwrap();
        let ratio = at(1e-6) / at(4e-6);
        assert_relative_eq!(ratio, 0.125, max_relative = 1e-3);
    }

    #[test]
    fn stationary_oracles_golden() {
        assert_relative_eq!(
            rlmc_stationary_variance_quadratic(0.1f64).unwrap(),
            1.000_184_195_984_527_5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            lmc_stationary_variance_quadratic(0.1f64).unwrap(),
            20.0 / 19.0,
            max_relative = 1e-15
        );
        // continuum limit recovers the target variance
        assert_relative_eq!(
            rlmc_stationary_variance_quadratic(1e-6f64).unwrap(),
            1.0,
            max_relative = 1e-9
        );
        // randomized midpoint has strictly smaller quadratic-target bias
        let r = rlmc_stationary_variance_quadratic(0.1f64).unwrap();
        let l = lmc_stationary_variance_quadratic(0.1f64).unwrap();
        assert!((r - 1.0).abs() < (l - 1.0).abs());
    }

    #[test]
    fn rulmc_stationary_moments_are_near_target() {
        let (xx, xv, vv) = rulmc_stationary_moments_quadratic(0.1f64, 1.0, 1.0).unwrap();
        // target: E[x^2] = 1, E[xv] = 0, E[v^2] = u, with O(h^3)-ish bias
        assert_abs_diff_eq!(xx, 1.0, epsilon = 5e-3);
        assert_abs_diff_eq!(xv, 0.0, epsilon = 5e-3);
        assert_abs_diff_eq!(vv, 1.0, epsilon = 5e-3);
        let (xx2, _, _) = rulmc_stationary_moments_quadratic(0.05f64, 1.0, 1.0).unwrap();
        assert!((xx2 - 1.0).abs() <= (xx - 1.0).abs());
        // curvature 2 target: E[x^2] = 1/2, E[v^2] = u
        let (xx3, _, vv3) = rulmc_stationary_moments_quadratic(0.05f64, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(xx3, 0.5, epsilon = 5e-3);
        assert_abs_diff_eq!(vv3, 0.5, epsilon = 5e-3);
    }

    #[test]
    fn klmc_stationary_moments_are_near_target() {
        // Euler-exponential integrator carries a visibly larger stationary
        // bias than the randomized midpoint at the same step
        let (xx, xv, vv) = klmc_stationary_moments_quadratic(0.1f64, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(xx, 1.0, epsilon = 4e-2);
        assert_abs_diff_eq!(xv, 0.0, epsilon = 4e-2);
        assert_abs_diff_eq!(vv, 1.0, epsilon = 4e-2);
        let (rx, _, _) = rulmc_stationary_moments_quadratic(0.1f64, 1.0, 1.0).unwrap();
        assert!((rx - 1.0).abs() < (xx - 1.0).abs());
    }

    #[test]
    fn w2_empirical_examples() {
        let a = vec![0.3f64, -1.0, 2.0, 0.0];
        assert_eq!(w2_empirical_1d(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.75).collect();
        assert_relative_eq!(w2_empirical_1d(&a, &b).unwrap(), 0.75, max_relative = 1e-14);
        assert!(w2_empirical_1d(&a, &b[..2].to_vec()).is_err());
        assert!(w2_empirical_1d::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn w2_empirical_gaussian_scale_gap() {
        use crate::noise::RngStream;
        let mut rng = RngStream::new(3, 0);
        let n = 1_000_000;
        let a: Vec<f64> = (0..n).map(|_| rng.standard_normal::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| 1.1 * rng.standard_normal::<f64>()).collect();
        let w = w2_empirical_1d(&a, &b).unwrap();
        assert!((w - 0.1).abs() < 0.02, "w = {w}");
    }

    #[test]
    fn w2_gaussian_diag_examples() {
        let z = vec![0.0f64];
        let one = vec![1.0f64];
        assert_eq!(w2_gaussian_diag(&z, &one, &z, &one).unwrap(), 0.0);
        assert_relative_eq!(w2_gaussian_diag(&[1.0], &one, &[3.5], &one).unwrap(), 2.5);
        assert_relative_eq!(
            w2_gaussian_diag(&z, &[1.0], &z, &[1.1]).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        assert!(w2_gaussian_diag(&z, &[0.0], &z, &one).is_err());
    }
}
