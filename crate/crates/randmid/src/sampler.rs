//! One-step transition kernels and chain runners for the Euler and
//! randomized-midpoint discretizations of the overdamped and underdamped
//! Langevin diffusions.
//!
//! Every step formula is applied exactly as displayed, with the midpoint
//! fraction alpha drawn uniformly once per step and shared by all lines of
//! the update. The `*_step_with` variants take alpha and the noise block as
//! arguments; they are the hook the golden-value and conditional-law tests
//! drive, while the plain variants draw from the owned stream. Friction is
//! hard-coded to beta = 2 for the underdamped kernels.

use crate::error::{Error, Result};
use crate::noise::{klmc_gram, rulmc_gram, RngStream};
use crate::potential::Potential;
use crate::real::Real;
use crate::schedule::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Lmc,
    Rlmc,
    Klmc,
    Rulmc,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Lmc => "lmc",
            SamplerKind::Rlmc => "rlmc",
            SamplerKind::Klmc => "klmc",
            SamplerKind::Rulmc => "rulmc",
        }
    }

    pub fn is_underdamped(self) -> bool {
        matches!(self, SamplerKind::Klmc | SamplerKind::Rulmc)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lmc" => Some(SamplerKind::Lmc),
            "rlmc" => Some(SamplerKind::Rlmc),
            "klmc" => Some(SamplerKind::Klmc),
            "rulmc" => Some(SamplerKind::Rulmc),
            _ => None,
        }
    }
}

/// Position-only chain state.
#[derive(Clone, Debug, PartialEq)]
pub struct OverdampedState<R> {
    pub x: Vec<R>,
    pub n: u64,
}

/// Position-velocity chain state.
#[derive(Clone, Debug, PartialEq)]
pub struct UnderdampedState<R> {
    pub x: Vec<R>,
    pub v: Vec<R>,
    pub n: u64,
}

pub trait ChainState<R: Real>: Clone + Send {
    fn position(&self) -> &[R];
    fn velocity(&self) -> Option<&[R]>;
    fn step_index(&self) -> u64;
    fn all_finite(&self) -> bool;
}

impl<R: Real> ChainState<R> for OverdampedState<R> {
    fn position(&self) -> &[R] {
        &self.x
    }
    fn velocity(&self) -> Option<&[R]> {
        None
    }
    fn step_index(&self) -> u64 {
        self.n
    }
    fn all_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
    }
}

impl<R: Real> ChainState<R> for UnderdampedState<R> {
    fn position(&self) -> &[R] {
        &self.x
    }
    fn velocity(&self) -> Option<&[R]> {
        Some(&self.v)
    }
    fn step_index(&self) -> u64 {
        self.n
    }
    fn all_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).all(|v| v.is_finite())
    }
}

fn ensure_finite<R: Real, S: ChainState<R>>(s: S) -> Result<S> {
    if s.all_finite() {
        Ok(s)
    } else {
        Err(Error::Divergence {
            step: s.step_index(),
        })
    }
}

/// `(1 - e^{-2s}) / 2` via expm1.
#[inline]
fn half_one_minus_exp<R: Real>(s: R) -> R {
    -(-R::lit(2.0) * s).exp_m1() / R::lit(2.0)
}

// ---------------------------------------------------------------------------
// Overdamped steps
// ---------------------------------------------------------------------------

/// Euler step: x' = x - gamma grad f(x) + sqrt(2 gamma) Z.
pub fn lmc_step_with<R: Real>(
    s: &OverdampedState<R>,
    gamma: R,
    p: &Potential<R>,
    z: &[R],
) -> Result<OverdampedState<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    let g = p.grad(&s.x)?;
    let scale = (R::lit(2.0) * gamma).sqrt();
    let x =
        s.x.iter()
            .zip(&g)
            .zip(z)
            .map(|((&xi, &gi), &zi)| xi - gamma * gi + scale * zi)
            .collect();
    ensure_finite(OverdampedState { x, n: s.n + 1 })
}

pub fn lmc_step<R: Real>(
    s: &OverdampedState<R>,
    gamma: R,
    p: &Potential<R>,
    rng: &mut RngStream,
) -> Result<OverdampedState<R>> {
    let z: Vec<R> = (0..s.x.len()).map(|_| rng.standard_normal()).collect();
    lmc_step_with(s, gamma, p, &z)
}

/// Randomized-midpoint step:
/// x_half = x - a g grad f(x) + sqrt(2 a g) U',
/// x'     = x -   g grad f(x_half) + sqrt(2 g) U,
/// with (U', U) standardized and correlated by sqrt(a).
pub fn rlmc_step_with<R: Real>(
    s: &OverdampedState<R>,
    gamma: R,
    p: &Potential<R>,
    alpha: R,
    u_prime: &[R],
    u: &[R],
) -> Result<OverdampedState<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    if !(R::zero()..=R::one()).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha.as_f64(),
        });
    }
    let g0 = p.grad(&s.x)?;
    let ag = alpha * gamma;
    let mid_scale = (R::lit(2.0) * ag).sqrt();
    let x_half: Vec<R> =
        s.x.iter()
            .zip(&g0)
            .zip(u_prime)
            .map(|((&xi, &gi), &upi)| xi - ag * gi + mid_scale * upi)
            .collect();
    let g_half = p.grad(&x_half)?;
    let scale = (R::lit(2.0) * gamma).sqrt();
    let x =
        s.x.iter()
            .zip(&g_half)
            .zip(u)
            .map(|((&xi, &gi), &ui)| xi - gamma * gi + scale * ui)
            .collect();
    ensure_finite(OverdampedState { x, n: s.n + 1 })
}

pub fn rlmc_step<R: Real>(
    s: &OverdampedState<R>,
    gamma: R,
    p: &Potential<R>,
    rng: &mut RngStream,
) -> Result<OverdampedState<R>> {
    let alpha: R = rng.uniform_01();
    // factorization of the standardized pair [[1, sqrt(a)], [sqrt(a), 1]],
    // drawn per coordinate in block order
    let d = s.x.len();
    let sa = alpha.sqrt();
    let resid = (R::one() - sa * sa).max(R::zero()).sqrt();
    let mut u_prime = vec![R::zero(); d];
    let mut u = vec![R::zero(); d];
    for j in 0..d {
        let z1: R = rng.standard_normal();
        let z2: R = rng.standard_normal();
        u_prime[j] = z1;
        u[j] = sa * z1 + resid * z2;
    }
    rlmc_step_with(s, gamma, p, alpha, &u_prime, &u)
}

// ---------------------------------------------------------------------------
// Underdamped steps (friction beta = 2)
// ---------------------------------------------------------------------------

/// Randomized-midpoint kinetic step. The noise arguments are the products
/// sigma^(i) U^(i) as sampled from `rulmc_gram`; the formulas scale them by
/// sqrt(u) (and the extra factor 2 on the velocity line).
pub fn rulmc_step_with<R: Real>(
    s: &UnderdampedState<R>,
    gamma: R,
    u: R,
    p: &Potential<R>,
    alpha: R,
    n1: &[R],
    n2: &[R],
    n3: &[R],
) -> Result<UnderdampedState<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    if !(u > R::zero()) {
        return Err(Error::OutOfRange {
            what: "inverse mass u",
            value: u.as_f64(),
        });
    }
    let half = R::lit(0.5);
    let two = R::lit(2.0);
    let ag = alpha * gamma;
    let sqrt_u = u.sqrt();

    let mid_decay = half_one_minus_exp(ag); // (1 - e^{-2 a g})/2
    let full_decay = half_one_minus_exp(gamma); // (1 - e^{-2 g})/2
    let g0 = p.grad(&s.x)?;
    let drift_mid = (u * half) * (ag - mid_decay);
    let x_half: Vec<R> = (0..s.x.len())
        .map(|i| s.x[i] + mid_decay * s.v[i] - drift_mid * g0[i] + sqrt_u * n1[i])
        .collect();

    let g_half = p.grad(&x_half)?;
    let tail = -(-two * (R::one() - alpha) * gamma).exp_m1(); // 1 - e^{-2(1-a)g}
    let e_tail = (-two * (R::one() - alpha) * gamma).exp(); // e^{-2(1-a)g}
    let e_full = (-two * gamma).exp();
    let drift_x = (u * half) * gamma * tail;
    let drift_v = u * gamma * e_tail;

    let x: Vec<R> = (0..s.x.len())
        .map(|i| s.x[i] + full_decay * s.v[i] - drift_x * g_half[i] + sqrt_u * n2[i])
        .collect();
    let v: Vec<R> = (0..s.v.len())
        .map(|i| s.v[i] * e_full - drift_v * g_half[i] + two * sqrt_u * n3[i])
        .collect();
    ensure_finite(UnderdampedState { x, v, n: s.n + 1 })
}

pub fn rulmc_step<R: Real>(
    s: &UnderdampedState<R>,
    gamma: R,
    u: R,
    p: &Potential<R>,
    rng: &mut RngStream,
) -> Result<UnderdampedState<R>> {
    let alpha: R = rng.uniform_01();
    let gram = rulmc_gram(alpha, gamma)?;
    let l = crate::noise::factor_block(&gram)?;
    let d = s.x.len();
    let mut n1 = vec![R::zero(); d];
    let mut n2 = vec![R::zero(); d];
    let mut n3 = vec![R::zero(); d];
    for j in 0..d {
        let c = crate::noise::draw_coord(&l, 3, rng);
        n1[j] = c[0];
        n2[j] = c[1];
        n3[j] = c[2];
    }
    rulmc_step_with(s, gamma, u, p, alpha, &n1, &n2, &n3)
}

/// Exponential-integrator kinetic step; noise products from `klmc_gram`.
pub fn klmc_step_with<R: Real>(
    s: &UnderdampedState<R>,
    gamma: R,
    u: R,
    p: &Potential<R>,
    n1: &[R],
    n2: &[R],
) -> Result<UnderdampedState<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.as_f64(),
        });
    }
    if !(u > R::zero()) {
        return Err(Error::OutOfRange {
            what: "inverse mass u",
            value: u.as_f64(),
        });
    }
    let half = R::lit(0.5);
    let two = R::lit(2.0);
    let decay = half_one_minus_exp(gamma);
    let e_full = (-two * gamma).exp();
    let sqrt_u = u.sqrt();
    let g0 = p.grad(&s.x)?;
    let x: Vec<R> = (0..s.x.len())
        .map(|i| s.x[i] + decay * s.v[i] - (u * half) * (gamma - decay) * g0[i] + sqrt_u * n1[i])
        .collect();
    let v: Vec<R> = (0..s.v.len())
        .map(|i| s.v[i] * e_full - u * decay * g0[i] + two * sqrt_u * n2[i])
        .collect();
    ensure_finite(UnderdampedState { x, v, n: s.n + 1 })
}

pub fn klmc_step<R: Real>(
    s: &UnderdampedState<R>,
    gamma: R,
    u: R,
    p: &Potential<R>,
    rng: &mut RngStream,
) -> Result<UnderdampedState<R>> {
    let gram = klmc_gram(gamma)?;
    let l = crate::noise::factor_block(&gram)?;
    let d = s.x.len();
    let mut n1 = vec![R::zero(); d];
    let mut n2 = vec![R::zero(); d];
    for j in 0..d {
        let c = crate::noise::draw_coord(&l, 2, rng);
        n1[j] = c[0];
        n2[j] = c[1];
    }
    klmc_step_with(s, gamma, u, p, &n1, &n2)
}

// ---------------------------------------------------------------------------
// Chain running
// ---------------------------------------------------------------------------

/// A one-step transition kernel a chain runner can drive.
pub trait Kernel<R: Real>: Sync {
    type State: ChainState<R>;
    fn step(&self, s: &Self::State, gamma: R, rng: &mut RngStream) -> Result<Self::State>;
    fn kind(&self) -> SamplerKind;
}

pub struct LmcKernel<'a, R> {
    pub potential: &'a Potential<R>,
}

impl<R: Real> Kernel<R> for LmcKernel<'_, R> {
    type State = OverdampedState<R>;
    fn step(&self, s: &Self::State, gamma: R, rng: &mut RngStream) -> Result<Self::State> {
        lmc_step(s, gamma, self.potential, rng)
    }
    fn kind(&self) -> SamplerKind {
        SamplerKind::Lmc
    }
}

pub struct RlmcKernel<'a, R> {
    pub potential: &'a Potential<R>,
}

impl<R: Real> Kernel<R> for RlmcKernel<'_, R> {
    type State = OverdampedState<R>;
    fn step(&self, s: &Self::State, gamma: R, rng: &mut RngStream) -> Result<Self::State> {
        rlmc_step(s, gamma, self.potential, rng)
    }
    fn kind(&self) -> SamplerKind {
        SamplerKind::Rlmc
    }
}

pub struct KlmcKernel<'a, R> {
    pub potential: &'a Potential<R>,
    pub u: R,
}

impl<R: Real> Kernel<R> for KlmcKernel<'_, R> {
    type State = UnderdampedState<R>;
    fn step(&self, s: &Self::State, gamma: R, rng: &mut RngStream) -> Result<Self::State> {
        klmc_step(s, gamma, self.u, self.potential, rng)
    }
    fn kind(&self) -> SamplerKind {
        SamplerKind::Klmc
    }
}

pub struct RulmcKernel<'a, R> {
    pub potential: &'a Potential<R>,
    pub u: R,
}

impl<R: Real> Kernel<R> for RulmcKernel<'_, R> {
    type State = UnderdampedState<R>;
    fn step(&self, s: &Self::State, gamma: R, rng: &mut RngStream) -> Result<Self::State> {
        rulmc_step(s, gamma, self.u, self.potential, rng)
    }
    fn kind(&self) -> SamplerKind {
        SamplerKind::Rulmc
    }
}

/// Streaming consumer of chain transitions. `pre` is the state the step left
/// from and `gamma` the step size used, so weighted-measure observers see
/// exactly the (gamma_k, x_{k-1}) pairing the averaging recursion needs.
pub trait Observer<R: Real, S> {
    fn observe(&mut self, step: u64, gamma: R, pre: &S, post: &S);
}

/// Outcome of a chain run; trajectories are never materialized unless a
/// trace observer was attached.
#[derive(Clone, Debug)]
pub struct ChainRun<S> {
    pub final_state: S,
    pub steps: u64,
}

pub fn run_chain<R, K>(
    kernel: &K,
    init: K::State,
    schedule: &mut Schedule<R>,
    n_steps: u64,
    observers: &mut [&mut dyn Observer<R, K::State>],
    rng: &mut RngStream,
) -> Result<ChainRun<K::State>>
where
    R: Real,
    K: Kernel<R>,
{
    if n_steps == 0 {
        return Err(Error::OutOfRange {
            what: "n_steps",
            value: 0.0,
        });
    }
    let mut state = init;
    for k in 1..=n_steps {
        let gamma = schedule.next_gamma();
        let next = kernel.step(&state, gamma, rng)?;
        for obs in observers.iter_mut() {
            obs.observe(k, gamma, &state, &next);
        }
        state = next;
    }
    Ok(ChainRun {
        final_state: state,
        steps: n_steps,
    })
}

/// Collects every `stride`-th post-step state's first coordinate after a
/// burn-in, the raw material of the empirical bias diagnostics.
pub struct ThinnedTraceObserver<R> {
    pub burn_in: u64,
    pub stride: u64,
    pub samples: Vec<R>,
}

impl<R: Real> ThinnedTraceObserver<R> {
    pub fn new(burn_in: u64, stride: u64) -> Self {
        Self {
            burn_in,
            stride,
            samples: Vec::new(),
        }
    }
}

impl<R: Real, S: ChainState<R>> Observer<R, S> for ThinnedTraceObserver<R> {
    fn observe(&mut self, step: u64, _gamma: R, _pre: &S, post: &S) {
        if step > self.burn_in && (step - self.burn_in) % self.stride == 0 {
            self.samples.push(post.position()[0]);
        }
    }
}

/// Running mean / second moment of the first position coordinate over
/// post-burn-in post-step states.
pub struct MomentObserver<R: Real> {
    pub burn_in: u64,
    count: u64,
    mean: crate::real::CompensatedSum<R>,
    second: crate::real::CompensatedSum<R>,
}

impl<R: Real> MomentObserver<R> {
    pub fn new(burn_in: u64) -> Self {
        Self {
            burn_in,
            count: 0,
            mean: crate::real::CompensatedSum::new(),
            second: crate::real::CompensatedSum::new(),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> R {
        self.mean.value() / R::from_u64(self.count.max(1)).unwrap()
    }

    pub fn second_moment(&self) -> R {
        self.second.value() / R::from_u64(self.count.max(1)).unwrap()
    }
}

impl<R: Real, S: ChainState<R>> Observer<R, S> for MomentObserver<R> {
    fn observe(&mut self, step: u64, _gamma: R, _pre: &S, post: &S) {
        if step > self.burn_in {
            let x0 = post.position()[0];
            self.count += 1;
            self.mean.add(x0);
            self.second.add(x0 * x0);
        }
    }
}

/// Window where the kinetic chains are provably ergodic: u in (0, 4/(2M - m)).
pub fn kinetic_u_window<R: Real>(p: &Potential<R>) -> (R, R) {
    (R::zero(), R::lit(4.0) / (R::lit(2.0) * p.big_m() - p.m()))
}
