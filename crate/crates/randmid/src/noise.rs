//! Correlated Gaussian noise blocks for the discretized diffusions.
//!
//! The randomized-midpoint and exponential-integrator steps consume jointly
//! Gaussian increments whose per-coordinate covariances are Brownian kernel
//! integrals with closed forms. This module builds those Gram blocks,
//! stabilizes the small-step entries against cancellation, and samples them
//! reproducibly from counter-based streams.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, Mat};
use crate::real::Real;

/// Reproducible random stream: a ChaCha12 generator keyed by `(seed, stream)`.
///
/// Identical `(seed, stream_id)` produce identical draws on any host and
/// under any thread interleaving; distinct stream ids select independent
/// ChaCha counter streams, so replicate workers can be handed their streams
/// up front.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn standard_normal<R: Real>(&mut self) -> R {
        R::standard_normal(&mut self.rng)
    }

    #[inline]
    pub fn uniform_01<R: Real>(&mut self) -> R {
        R::uniform_01(&mut self.rng)
    }
}

/// Which sampler the Gram block belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramKind {
    Rlmc,
    Rulmc,
    Klmc,
}

/// Per-coordinate covariance of one step's Gaussian block.
///
/// Order 2 for RLMC/KLMC, order 3 for RULMC. The RLMC pair is standardized
/// (unit diagonal, sqrt(alpha) cross term); the RULMC/KLMC entries are the
/// covariances of the products sigma^(i) U^(i), matching how the step
/// formulas consume them.
#[derive(Clone, Debug)]
pub struct NoiseGram<R> {
    kind: GramKind,
    order: usize,
    entries: [[R; 3]; 3],
    alpha: Option<R>,
    gamma: Option<R>,
}

impl<R: Real> NoiseGram<R> {
    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> Option<R> {
        self.alpha
    }

    pub fn gamma(&self) -> Option<R> {
        self.gamma
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> R {
        self.entries[i][j]
    }

    pub fn matrix(&self) -> Mat<R> {
        let mut m = Mat::zeros(self.order);
        for i in 0..self.order {
            for j in 0..self.order {
                m.set(i, j, self.entries[i][j]);
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> R {
        sym_eigenvalues(&self.matrix())[0]
    }
}

/// Variance kernel `s + (1 - e^{-4s})/4 - (1 - e^{-2s})`
/// = int_0^s (1 - e^{-2(s-r)})^2 dr, the position-noise variance of the
/// exponential integrator over a window of length s.
///
/// The closed form cancels to O(s^3); below the switch point a Taylor series
/// keeps full relative accuracy so the assembled Gram stays PSD.
pub(crate) fn ou_position_var<R: Real>(s: R) -> R {
    if s < R::lit(0.01) {
        let c3 = R::lit(4.0 / 3.0);
        let c4 = R::lit(-2.0);
        let c5 = R::lit(28.0 / 15.0);
        let c6 = R::lit(-4.0 / 3.0);
        let c7 = R::lit(248.0 / 315.0);
        s * s * s * (c3 + s * (c4 + s * (c5 + s * (c6 + s * c7))))
    } else {
        let four = R::lit(4.0);
        let two = R::lit(2.0);
        s + (-(-four * s).exp_m1()) / four - (-(-two * s).exp_m1())
    }
}

/// `(1 - e^{-4s})/4` = int_0^s e^{-4(s-r)} dr, the velocity-noise variance.
#[inline]
pub(crate) fn ou_velocity_var<R: Real>(s: R) -> R {
    -(-R::lit(4.0) * s).exp_m1() / R::lit(4.0)
}

/// Standardized pair covariance of the RLMC noise: `[[1, sqrt(a)], [sqrt(a), 1]]`.
pub fn rlmc_gram<R: Real>(alpha: R) -> Result<NoiseGram<R>> {
    if !(R::zero()..=R::one()).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha.as_f64(),
        });
    }
    let r = alpha.sqrt();
    let mut entries = [[R::zero(); 3]; 3];
    entries[0][0] = R::one();
    entries[1][1] = R::one();
    entries[0][1] = r;
    entries[1][0] = r;
    Ok(NoiseGram {
        kind: GramKind::Rlmc,
        order: 2,
        entries,
        alpha: Some(alpha),
        gamma: None,
    })
}

/// Order-3 Gram of (sigma^1 U^1, sigma^2 U^2, sigma^3 U^3) for the
/// randomized-midpoint underdamped step at midpoint fraction `alpha` and
/// step `gamma`.
pub fn rulmc_gram<R: Real>(alpha: R, gamma: R) -> Result<NoiseGram<R>> {
    if !(R::zero()..=R::one()).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha.as_f64(),
        });
    }
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    let two = R::lit(2.0);
    let s = alpha * gamma;
    let e2g = (-two * gamma).exp();
    let sh_s = s.sinh();
    let sh_g = gamma.sinh();

    let g11 = ou_position_var(s);
    let g22 = ou_position_var(gamma);
    let g33 = ou_velocity_var(gamma);
    // s - (e^{-s} + e^{-2g} sinh s) sinh s, rewritten with expm1 for small s
    let g12 = s + (-two * s).exp_m1() / two - e2g * sh_s * sh_s;
    let g23 = e2g * sh_g * sh_g;
    let g13 = e2g * sh_s * sh_s;

    let entries = [[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]];
    let gram = NoiseGram {
        kind: GramKind::Rulmc,
        order: 3,
        entries,
        alpha: Some(alpha),
        gamma: Some(gamma),
    };
    // a clamped factorization must exist; failure here is a formula bug
    factor_block(&gram)?;
    Ok(gram)
}

/// Order-2 Gram of (sigma^1 U^1, sigma^2 U^2) for the exponential-integrator
/// underdamped step at step `gamma`.
pub fn klmc_gram<R: Real>(gamma: R) -> Result<NoiseGram<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    let g11 = ou_position_var(gamma);
    let g22 = ou_velocity_var(gamma);
    // (1 + e^{-4g} - 2 e^{-2g})/4 = (1 - e^{-2g})^2 / 4
    let omexp = -(-R::lit(2.0) * gamma).exp_m1();
    let g12 = omexp * omexp / R::lit(4.0);
    let mut entries = [[R::zero(); 3]; 3];
    entries[0][0] = g11;
    entries[1][1] = g22;
    entries[0][1] = g12;
    entries[1][0] = g12;
    Ok(NoiseGram {
        kind: GramKind::Klmc,
        order: 2,
        entries,
        alpha: None,
        gamma: Some(gamma),
    })
}

/// Eigenvalue clamp for near-singular small-step Grams: the blocks are
/// rank-deficient in the gamma -> 0 limit and rounding produces tiny
/// negative eigenvalues.
fn psd_tol<R: Real>() -> R {
    R::lit(1e-12)
}

/// Allocation-free clamped Cholesky of the (up to 3x3) Gram block; same
/// clamping policy as `linalg::cholesky_clamped`.
pub(crate) fn factor_block<R: Real>(gram: &NoiseGram<R>) -> Result<[[R; 3]; 3]> {
    let n = gram.order;
    let m = &gram.entries;
    let tol = psd_tol::<R>();
    let mut l = [[R::zero(); 3]; 3];
    for j in 0..n {
        let mut pivot = m[j][j];
        for k in 0..j {
            pivot = pivot - l[j][k] * l[j][k];
        }
        let col_tol = tol + R::lit(1e-10) * m[j][j].abs();
        if pivot < -col_tol {
            return Err(Error::Indefinite {
                pivot: pivot.as_f64(),
            });
        }
        if pivot <= col_tol {
            continue; // dependent column, stays zero
        }
        let piv = pivot.sqrt();
        l[j][j] = piv;
        for i in (j + 1)..n {
            let mut r = m[i][j];
            for k in 0..j {
                r = r - l[i][k] * l[j][k];
            }
            l[i][j] = r / piv;
        }
    }
    Ok(l)
}

/// One coordinate's correlated block from a precomputed factor.
#[inline]
pub(crate) fn draw_coord<R: Real>(l: &[[R; 3]; 3], order: usize, rng: &mut RngStream) -> [R; 3] {
    let mut z = [R::zero(); 3];
    for zk in z.iter_mut().take(order) {
        *zk = rng.standard_normal();
    }
    let mut out = [R::zero(); 3];
    for i in 0..order {
        let mut acc = R::zero();
        for (k, zk) in z.iter().enumerate().take(i + 1) {
            acc = acc + l[i][k] * *zk;
        }
        out[i] = acc;
    }
    out
}

/// Draws `order` d-dimensional vectors whose per-coordinate joint covariance
/// is `gram`, via the clamped lower-triangular square root.
///
/// Per coordinate, `order` standard normals are consumed in block order, so
/// the stream layout is independent of dimension handling elsewhere.
pub fn sample_block<R: Real>(
    gram: &NoiseGram<R>,
    dim: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<R>>> {
    let l = factor_block(gram)?;
    let order = gram.order;
    let mut out = vec![vec![R::zero(); dim]; order];
    for j in 0..dim {
        let coord = draw_coord(&l, order, rng);
        for i in 0..order {
            out[i][j] = coord[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn rlmc_gram_examples() {
        let g0 = rlmc_gram(0.0f64).unwrap();
        assert_eq!(g0.entry(0, 1), 0.0);
        assert_eq!(g0.entry(0, 0), 1.0);
        let g1 = rlmc_gram(1.0f64).unwrap();
        assert_eq!(g1.entry(0, 1), 1.0);
        let gq = rlmc_gram(0.25f64).unwrap();
        assert_eq!(gq.entry(0, 1), 0.5);
        assert!(rlmc_gram(-0.1f64).is_err());
        assert!(rlmc_gram(1.1f64).is_err());
    }

    #[test]
    fn rulmc_gram_golden_values() {
        let g = rulmc_gram(0.5f64, 0.1).unwrap();
        assert_relative_eq!(
            g.entry(2, 2),
            0.082_419_988_491_090_17,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            g.entry(0, 2),
            2.048_533_140_428_430_5e-3,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            g.entry(0, 0),
            1.547_297_664_641_085e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            g.entry(0, 1),
            3.701_758_775_513_561e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            g.entry(1, 1),
            1.150_741_569_072_033_5e-3,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            g.entry(1, 2),
            8.214_634_969_918_896e-3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rulmc_gram_vanishes_as_gamma_to_zero() {
        let g = rulmc_gram(0.7f64, 1e-9).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(g.entry(i, j).abs() < 1e-9);
            }
        }
        assert!(rulmc_gram(0.5f64, 0.0).is_err());
    }

    #[test]
    fn klmc_gram_golden_values() {
        let g = klmc_gram(0.1f64).unwrap();
        assert_relative_eq!(
            g.entry(0, 1),
            8.214_634_969_918_896e-3,
            max_relative = 1e-14
        );
        assert!(klmc_gram(-1.0f64).is_err());
        let tiny = klmc_gram(1e-9f64).unwrap();
        assert!(tiny.entry(0, 0) < 1e-18);
    }

    /// Brownian kernel integral oracles: each closed-form Gram entry equals
    /// the corresponding integral of exponential kernels over the step.
    fn quad_rulmc_entry(alpha: f64, gamma: f64, i: usize, j: usize) -> f64 {
        let s = alpha * gamma;
        let k1 = move |r: f64, t: f64| 1.0 - (-2.0 * (t - r)).exp(); // position kernel to time t
        let k3 = move |r: f64| (-2.0 * (gamma - r)).exp(); // velocity kernel
        let f: Box<dyn Fn(f64) -> f64> = match (i, j) {
            (0, 0) => Box::new(move |r| k1(r, s) * k1(r, s)),
            (1, 1) => Box::new(move |r| k1(r, gamma) * k1(r, gamma)),
            (2, 2) => Box::new(move |r| k3(r) * k3(r)),
            (0, 1) => Box::new(move |r| k1(r, s) * k1(r, gamma)),
            (1, 2) => Box::new(move |r| k1(r, gamma) * k3(r)),
            (0, 2) => Box::new(move |r| k1(r, s) * k3(r)),
            _ => unreachable!(),
        };
        let upper = match (i, j) {
            (0, 0) | (0, 1) | (0, 2) => s, // first block only accumulates over [0, alpha*gamma]
            _ => gamma,
        };
        if upper == 0.0 {
            return 0.0;
        }
        adaptive_simpson(&*f, 0.0, upper, 1e-13)
    }

    #[test]
    fn rulmc_entries_match_kernel_integrals_on_grid() {
        for ai in 0..=10 {
            let alpha = ai as f64 / 10.0;
            for &gamma in &[1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5] {
                let g = rulmc_gram(alpha, gamma).unwrap();
                for (i, j) in [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)] {
                    let q = quad_rulmc_entry(alpha, gamma, i, j);
                    assert_abs_diff_eq!(g.entry(i, j), q, epsilon = 1e-10);
                }
                assert!(g.min_eigenvalue() >= -1e-12);
            }
        }
    }

    #[test]
    fn klmc_offdiag_matches_kernel_integral() {
        for &gamma in &[1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5] {
            let g = klmc_gram(gamma).unwrap();
            let q = adaptive_simpson(
                &|r: f64| (1.0 - (-2.0 * (gamma - r)).exp()) * (-2.0 * (gamma - r)).exp(),
                0.0,
                gamma,
                1e-13,
            );
            assert_abs_diff_eq!(g.entry(0, 1), q, epsilon = 1e-10);
            assert!(g.min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn sample_block_zero_gram_gives_zeros() {
        let mut g = klmc_gram(1e-12f64).unwrap();
        // force exact zero entries
        for i in 0..3 {
            for j in 0..3 {
                g.entries[i][j] = 0.0;
            }
        }
        let mut rng = RngStream::new(1, 0);
        let block = sample_block(&g, 4, &mut rng).unwrap();
        assert!(block.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn sample_block_matches_identity_cross_covariance() {
        let gram = rlmc_gram(0.0f64).unwrap();
        let mut rng = RngStream::new(7, 3);
        let n = 1_000_000usize;
        let mut cross = 0.0;
        for _ in 0..n {
            let b = sample_block(&gram, 1, &mut rng).unwrap();
            cross += b[0][0] * b[1][0];
        }
        cross /= n as f64;
        assert!(cross.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sample_block_matches_rulmc_gram_moments() {
        let gram = rulmc_gram(0.5f64, 0.1).unwrap();
        let mut rng = RngStream::new(11, 1);
        let n = 1_000_000usize;
        let mut acc = [[0.0f64; 3]; 3];
        for _ in 0..n {
            let b = sample_block(&gram, 1, &mut rng).unwrap();
            for i in 0..3 {
                for j in i..3 {
                    acc[i][j] += b[i][0] * b[j][0];
                }
            }
        }
        for i in 0..3 {
            for j in i..3 {
                let est = acc[i][j] / n as f64;
                let gii = gram.entry(i, i);
                let gjj = gram.entry(j, j);
                let gij = gram.entry(i, j);
                // Var(XY) = Gii Gjj + Gij^2 for joint Gaussians
                let se = ((gii * gjj + gij * gij) / n as f64).sqrt();
                assert!(
                    (est - gij).abs() <= 5.0 * se,
                    "entry ({i},{j}): est {est:.6e} vs {:.6e} (5se {:.2e})",
                    gij,
                    5.0 * se
                );
            }
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = RngStream::new(42, 5);
        let mut b = RngStream::new(42, 5);
        let mut c = RngStream::new(42, 6);
        let mut same = true;
        for _ in 0..64 {
            let xa: f64 = a.standard_normal();
            let xb: f64 = b.standard_normal();
            let xc: f64 = c.standard_normal();
            assert_eq!(xa.to_bits(), xb.to_bits());
            same &= xa == xc;
        }
        assert!(!same);
    }
}
