//! Step-size schedules, their running sums, and CLT regime classification.
//!
//! A schedule owns the four running sums Gamma_n^(l) = sum_k gamma_k^l for
//! l = 1..4 in compensated arithmetic; the regime of the associated central
//! limit theorem is decided analytically from the decay exponent (the
//! empirical gamma-hat ratios converge far too slowly to classify from, and
//! are reported alongside for sanity only).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::real::{CompensatedSum, Real};

/// Step-size rule.
#[derive(Clone, Debug, PartialEq)]
pub enum StepRule<R> {
    /// gamma_n = h
    Constant { h: R },
    /// gamma_n = n^{-alpha}
    Polynomial { alpha: R },
    /// Constant 1/(m + 34 M) for the first k1 steps, then
    /// gamma_n = 1/(m + 34 M + lambda (n - 1 - k1)).
    RlmcFast { m: R, big_m: R, lambda: R, k1: u64 },
    /// gamma_n = 16 kappa / (32 kappa^{5/3} + (n - k1)^+)
    RulmcFast { kappa: R, k1: u64 },
}

impl<R: Real> StepRule<R> {
    /// gamma_n for n = 1, 2, ... (pure function of the index).
    pub fn gamma(&self, n: u64) -> R {
        debug_assert!(n >= 1);
        match self {
            StepRule::Constant { h } => *h,
            StepRule::Polynomial { alpha } => R::from_u64(n).unwrap().powf(-*alpha),
            StepRule::RlmcFast {
                m,
                big_m,
                lambda,
                k1,
            } => {
                let base = *m + R::lit(34.0) * *big_m;
                let excess = n.saturating_sub(1).saturating_sub(*k1);
                R::one() / (base + *lambda * R::from_u64(excess).unwrap())
            }
            StepRule::RulmcFast { kappa, k1 } => {
                let num = R::lit(16.0) * *kappa;
                let den = R::lit(32.0) * kappa.powf(R::lit(5.0 / 3.0))
                    + R::from_u64(n.saturating_sub(*k1)).unwrap();
                num / den
            }
        }
    }

    /// Non-increasing for every rule except nothing; constant counts.
    pub fn is_non_increasing(&self) -> bool {
        true
    }

    /// Descriptor in the config syntax, e.g. `poly:alpha=0.333`.
    pub fn descriptor(&self) -> String {
        match self {
            StepRule::Constant { h } => format!("const:h={h}"),
            StepRule::Polynomial { alpha } => format!("poly:alpha={alpha}"),
            StepRule::RlmcFast {
                m,
                big_m,
                lambda,
                k1,
            } => {
                format!("rlmc-fast:m={m},M={big_m},lambda={lambda},K1={k1}")
            }
            StepRule::RulmcFast { kappa, k1 } => format!("rulmc-fast:kappa={kappa},K1={k1}"),
        }
    }
}

/// Largest positive lambda with G(lambda) <= 0 at the first decreasing step,
/// where G is the quadratic
/// `(K - m (K+1)^2 / 10) L^2 + (X - m X (K+1)/5) L - m X^2 / 10` with
/// `X = m + 34 M` evaluated at `K = 1`, located by bisection. The fast rule
/// only needs existence; picking the largest root decays the step fastest.
pub fn rlmc_fast_default_lambda<R: Real>(m: R, big_m: R) -> R {
    let x = m + R::lit(34.0) * big_m;
    let k = R::one();
    let ten = R::lit(10.0);
    let five = R::lit(5.0);
    let kp1 = k + R::one();
    let a = k - m * kp1 * kp1 / ten;
    let b = x - m * x * kp1 / five;
    let c = -(m * x * x) / ten;
    let g = |l: R| (a * l + b) * l + c;

    let mut lo = R::zero();
    let mut hi = x.max(R::one());
    let cap = R::lit(1e9);
    // grow until G > 0; if G stays nonpositive the quadratic is concave and
    // every lambda works, so return the capped bracket top
    while g(hi) <= R::zero() {
        hi = hi * R::lit(2.0);
        if hi > cap {
            return cap;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / R::lit(2.0);
        if g(mid) <= R::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A step-size sequence together with its running sums.
#[derive(Clone, Debug)]
pub struct Schedule<R: Real> {
    rule: StepRule<R>,
    n: u64,
    acc: [CompensatedSum<R>; 4],
}

impl<R: Real> Schedule<R> {
    pub fn new(rule: StepRule<R>) -> Self {
        Self {
            rule,
            n: 0,
            acc: [CompensatedSum::new(); 4],
        }
    }

    pub fn rule(&self) -> &StepRule<R> {
        &self.rule
    }

    pub fn steps_emitted(&self) -> u64 {
        self.n
    }

    /// Emits gamma_{n+1} and folds it into all four accumulators.
    pub fn next_gamma(&mut self) -> R {
        self.n += 1;
        let g = self.rule.gamma(self.n);
        let mut p = R::one();
        for acc in self.acc.iter_mut() {
            p = p * g;
            acc.add(p);
        }
        g
    }

    /// Gamma_n^(l) for l in 1..=4.
    pub fn gamma_sum(&self, l: usize) -> R {
        assert!((1..=4).contains(&l), "accumulators cover l = 1..=4");
        self.acc[l - 1].value()
    }

    /// The regime-classifying ratio from the accumulators:
    /// overdamped Gamma^(2)/sqrt(Gamma), underdamped-special
    /// Gamma^(4)/sqrt(Gamma^(3)).
    pub fn empirical_gamma_hat(&self, setting: CltSetting) -> R {
        match setting {
            CltSetting::Overdamped => self.gamma_sum(2) / self.gamma_sum(1).sqrt(),
            CltSetting::UnderdampedSpecial => self.gamma_sum(4) / self.gamma_sum(3).sqrt(),
        }
    }
}

/// Which CLT family a schedule feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CltSetting {
    Overdamped,
    /// Kinetic chains with test functions of the form <v, grad phi(x)>.
    UnderdampedSpecial,
}

/// Limit of the gamma-hat ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Regime {
    /// Unbiased CLT.
    Zero,
    /// Biased CLT with the carried positive limit value.
    Finite(f64),
    /// Degenerate: convergence in probability to the bias constant only.
    Infinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub setting: CltSetting,
    /// Which ratio defines gamma-hat in this setting.
    pub gamma_hat_definition: &'static str,
    pub regime: Regime,
    /// Exponent of n in the CLT normalizer.
    pub rate_exponent: f64,
}

const ALPHA_EQ_TOL: f64 = 1e-9;

/// Regime of the overdamped CLT under gamma_k = k^{-alpha}.
///
/// Gamma_n ~ n^{1-alpha}/(1-alpha) and Gamma_n^(2) asymptotics give
/// gamma-hat -> 0 for alpha > 1/3, the finite value sqrt(6) exactly at
/// alpha = 1/3 and divergence below.
pub fn classify_overdamped<R: Real>(alpha: R) -> Result<RegimeReport> {
    let a = alpha.as_f64();
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: a,
        });
    }
    let third = 1.0 / 3.0;
    let (regime, rate_exponent) = if (a - third).abs() <= ALPHA_EQ_TOL {
        (Regime::Finite(6.0f64.sqrt()), (1.0 - a) / 2.0)
    } else if a > third {
        (Regime::Zero, (1.0 - a) / 2.0)
    } else {
        // normalizer Gamma_n / Gamma_n^(2) ~ n^alpha
        (Regime::Infinite, a)
    };
    Ok(RegimeReport {
        setting: CltSetting::Overdamped,
        gamma_hat_definition: "Gamma^(2)_n / sqrt(Gamma_n)",
        regime,
        rate_exponent,
    })
}

/// Regime of the kinetic special-class CLT under gamma_k = k^{-alpha};
/// valid for alpha in (0, 1/4] where Gamma^(4) diverges and
/// gamma_{n-1} - gamma_n = o(gamma_n^4).
pub fn classify_underdamped<R: Real>(alpha: R) -> Result<RegimeReport> {
    let a = alpha.as_f64();
    if !(a > 0.0 && a <= 0.25 + ALPHA_EQ_TOL) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: a,
        });
    }
    let fifth = 0.2;
    let (regime, rate_exponent) = if (a - fifth).abs() <= ALPHA_EQ_TOL {
        (Regime::Finite(10.0f64.sqrt()), (1.0 + a) / 2.0)
    } else if a > fifth {
        // normalizer Gamma_n / sqrt(Gamma^(3)_n) ~ n^{(1+alpha)/2}, maximal 5/8 at 1/4
        (Regime::Zero, (1.0 + a) / 2.0)
    } else {
        // normalizer Gamma_n / Gamma^(4)_n ~ n^{3 alpha}
        (Regime::Infinite, 3.0 * a)
    };
    Ok(RegimeReport {
        setting: CltSetting::UnderdampedSpecial,
        gamma_hat_definition: "Gamma^(4)_n / sqrt(Gamma^(3)_n)",
        regime,
        rate_exponent,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleReport {
    pub descriptor: String,
    pub warnings: Vec<String>,
}

/// Advisory rule checks: non-increasing steps, divergent Gamma_n, the
/// kinetic 3/2-sum divergence hypothesis, and the fast-rule early-step bound
/// against the potential's constants. Emits warnings, never errors.
pub fn validate_schedule<R: Real>(
    rule: &StepRule<R>,
    setting: CltSetting,
    potential: Option<&Potential<R>>,
) -> ScheduleReport {
    let mut warnings = Vec::new();
    match rule {
        StepRule::Constant { .. } => {
            warnings.push(
                "biased regime: constant steps give gamma-hat -> infinity (no CLT recentred at 0)"
                    .into(),
            );
        }
        StepRule::Polynomial { alpha } => {
            let a = alpha.as_f64();
            match setting {
                CltSetting::Overdamped => {
                    if !(a > 0.0 && a <= 1.0) {
                        warnings.push(format!("alpha={a} outside (0,1]"));
                    } else if a >= 1.0 {
                        warnings.push("alpha=1: Gamma_n grows only logarithmically".into());
                    }
                }
                CltSetting::UnderdampedSpecial => {
                    if !(a > 0.0 && a <= 0.25 + ALPHA_EQ_TOL) {
                        warnings.push(format!(
                            "alpha={a} outside (0,1/4]: Gamma^(4) must diverge for the kinetic special CLT"
                        ));
                    }
                }
            }
            // Gamma^(3/2)-sum/sqrt(Gamma) divergence: exponent of n is
            // 1 - 3a/2 - (1-a)/2 = (1 - 2a)/2, needs a < 1/2 (log-divergent at 1/2)
            if matches!(setting, CltSetting::UnderdampedSpecial) && a > 0.5 {
                warnings.push(format!(
                    "alpha={a}: sum gamma^(3/2)/sqrt(Gamma_n) stays bounded; kinetic CLT hypothesis fails"
                ));
            }
        }
        StepRule::RlmcFast {
            m,
            big_m,
            lambda,
            k1,
        } => {
            if let Some(p) = potential {
                if (p.m() - *m).abs() > R::lit(1e-12) || (p.big_m() - *big_m).abs() > R::lit(1e-12)
                {
                    warnings.push("rule constants (m, M) differ from the potential's".into());
                }
            }
            if *lambda <= R::zero() {
                warnings.push("lambda must be positive".into());
            }
            // early-step bound gamma_{n+1} <= m / (m^2 + M^2 (33 + kappa));
            // the proof-side form with kappa is the one enforced
            let kappa = *big_m / *m;
            let cap = *m / (*m * *m + *big_m * *big_m * (R::lit(33.0) + kappa));
            let rule_r = StepRule::RlmcFast {
                m: *m,
                big_m: *big_m,
                lambda: *lambda,
                k1: *k1,
            };
            let g1: R = rule_r.gamma(k1 + 1);
            if g1 > cap + R::lit(1e-15) {
                warnings.push(format!(
                    "first decreasing step {} exceeds the contraction bound {}",
                    g1.as_f64(),
                    cap.as_f64()
                ));
            }
        }
        StepRule::RulmcFast { kappa, .. } => {
            if *kappa < R::one() {
                warnings.push("kappa below 1 is not a condition number".into());
            }
        }
    }
    ScheduleReport {
        descriptor: rule.descriptor(),
        warnings,
    }
}
