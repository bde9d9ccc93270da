//! Closed-form predictions and bounds for the recursive-training chain.
//!
//! Everything here is a pure function of the configuration; the ensembles
//! in [`crate::ensemble`] are what these are checked against.

use std::f64::consts::{E, PI};

use serde::Serialize;
use thiserror::Error;

use crate::dist::ProbVec;
use crate::schedule::Schedule;

/// `e^3 / (2 pi)`.
pub const C0: f64 = 3.196_712_485_980_095_5;
/// `6 e / pi^(3/2)`.
pub const C1: f64 = 2.929_010_464_188_573_7;

/// Below this distance from 1/2, `phi` uses its Taylor expansion.
const PHI_TAYLOR_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("no positive synthetic budget: log argument {log_argument} <= 1")]
    NonPositiveBudget { log_argument: f64 },
}

fn check(ok: bool, name: &'static str, value: f64, expected: &'static str) -> Result<(), AnalyticsError> {
    if ok {
        Ok(())
    } else {
        Err(AnalyticsError::OutOfRange {
            name,
            value,
            expected,
        })
    }
}

fn check_s0(s0: f64) -> Result<(), AnalyticsError> {
    check(s0 > 0.0 && s0 <= 1.0, "S0", s0, "0 < S0 <= 1")
}

/// A bound reported next to its natural cap; never silently clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CappedBound {
    pub value: f64,
    pub cap: f64,
    pub vacuous: bool,
}

impl CappedBound {
    fn new(value: f64, cap: f64) -> Self {
        Self {
            value,
            cap,
            vacuous: !(value < cap),
        }
    }

    pub fn clamped(&self) -> f64 {
        self.value.min(self.cap)
    }
}

/// Expected sum of squares after `m` fully synthetic generations of `n`
/// samples: `1 - (1 - 1/n)^m (1 - S0)`.
pub fn s_m_fully(s0: f64, n: u64, m: u64) -> Result<f64, AnalyticsError> {
    check_s0(s0)?;
    check(n >= 1, "n", n as f64, "n >= 1")?;
    let keep = 1.0 - 1.0 / n as f64;
    Ok(1.0 - keep.powf(m as f64) * (1.0 - s0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoBounds {
    pub generation: u64,
    pub lower: f64,
    pub upper: f64,
    /// Raw lower bound was below 0.
    pub lower_vacuous: bool,
    /// Raw upper bound was above 1.
    pub upper_vacuous: bool,
}

/// Bounds on the probability that the chain is a Dirac at generation `m`.
pub fn rho_bounds(s0: f64, n: u64, support: usize, m: u64) -> Result<RhoBounds, AnalyticsError> {
    check_s0(s0)?;
    check(n >= 2, "n", n as f64, "n >= 2")?;
    check(support >= 2, "support", support as f64, "support >= 2")?;
    let decay = (1.0 - 1.0 / n as f64).powf(m as f64);
    let lower = 1.0 - n as f64 * (1.0 - s0) * decay;
    let upper = 1.0 - (1.0 - s0) / (1.0 - 1.0 / support as f64) * decay;
    Ok(RhoBounds {
        generation: m,
        lower: lower.max(0.0),
        upper: upper.min(1.0),
        lower_vacuous: lower < 0.0,
        upper_vacuous: upper > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on the expected collapse time of the fully synthetic chain.
pub fn expected_t_bounds(s0: f64, n: u64, support: usize) -> Result<TBounds, AnalyticsError> {
    check_s0(s0)?;
    check(n >= 1, "n", n as f64, "n >= 1")?;
    if s0 == 1.0 {
        return Ok(TBounds {
            lower: 1.0,
            upper: 1.0,
        });
    }
    check(support >= 2, "support", support as f64, "support >= 2")?;
    let n = n as f64;
    Ok(TBounds {
        lower: 1.0 + (1.0 - s0) * (n - 1.0) / (1.0 - 1.0 / support as f64),
        upper: 1.0 + (1.0 - s0) * n * (n - 1.0),
    })
}

/// Mixing constants of the partially synthetic recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingConstants {
    /// Synthetic share `n / (N + n)`.
    pub alpha: f64,
    /// Contraction of the second moment per generation.
    pub beta: f64,
}

pub fn mixing_constants(real: u64, n: u64) -> MixingConstants {
    let inv_real = 1.0 / real as f64;
    let alpha = n as f64 / (real + n) as f64;
    let beta = alpha * ((1.0 + inv_real) * alpha - inv_real);
    MixingConstants { alpha, beta }
}

fn check_partial(s0: f64, real: u64, n: u64, generation: u64) -> Result<(), AnalyticsError> {
    check_s0(s0)?;
    check(real >= 2, "N", real as f64, "N >= 2")?;
    check(n >= 1, "n", n as f64, "n >= 1")?;
    check(generation >= 1, "generation", generation as f64, "generation >= 1")
}

/// Expected sum of squares at `generation` of the partially synthetic chain
/// (real corpus `real`, `n` synthetic samples per generation).
///
/// The closed form is stated for `S_{m+1}` with `m >= 1`, so generation
/// `g >= 2` evaluates it at `m = g - 1`. Generation 1 is the corpus alone:
/// `1/N + (1 - 1/N) S0`.
pub fn s_m_partial(s0: f64, real: u64, n: u64, generation: u64) -> Result<f64, AnalyticsError> {
    check_partial(s0, real, n, generation)?;
    let inv_real = 1.0 / real as f64;
    if generation == 1 {
        return Ok(inv_real + (1.0 - inv_real) * s0);
    }
    let MixingConstants { alpha, beta } = mixing_constants(real, n);
    let beta_m = beta.powf((generation - 1) as f64);
    let denom = 1.0 + (1.0 + inv_real) * alpha;
    let first = inv_real * (1.0 + 2.0 * alpha - (1.0 - inv_real) * alpha * beta_m) / denom;
    let second = (1.0 - inv_real) * s0 / denom * (1.0 + alpha - alpha * beta_m * inv_real);
    Ok(first + second)
}

/// The same quantity by iterating the exact one-step second-moment recursion
/// `S_g = (1-a)(1+2a)/N + (1-1/N)(1-a^2) S0 + b S_{g-1}` from `S_1`.
///
/// Agrees with [`s_m_partial`] as `g` grows; the two differ by a transient
/// of order `beta^g`.
pub fn s_m_partial_recursive(
    s0: f64,
    real: u64,
    n: u64,
    generation: u64,
) -> Result<f64, AnalyticsError> {
    check_partial(s0, real, n, generation)?;
    let inv_real = 1.0 / real as f64;
    let MixingConstants { alpha, beta } = mixing_constants(real, n);
    let constant = (1.0 - alpha) * (1.0 + 2.0 * alpha) * inv_real
        + (1.0 - inv_real) * (1.0 - alpha * alpha) * s0;
    let mut s = inv_real + (1.0 - inv_real) * s0;
    for _ in 2..=generation {
        s = constant + beta * s;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GnBranch {
    /// `C0 n / e + 2 <= s`: `C1 s exp(C0 n / (2e))`.
    LargeVocabulary,
    /// `C0 n / 4 + 2 <= s < C0 n / e + 2`: `C1 s (C0 n / s)^(s/2)`.
    Intermediate,
    /// `s < C0 n / 4 + 2`: `2^s - 2`.
    SmallVocabulary,
}

/// The combinatorial factor of the L1 concentration bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gn {
    /// `+inf` when the value does not fit in an `f64`.
    pub value: f64,
    pub ln_value: f64,
    pub branch: GnBranch,
    pub overflow: bool,
}

pub fn gn_branch(s: usize, n: u64) -> GnBranch {
    let s = s as f64;
    let n = n as f64;
    if C0 * n / E + 2.0 <= s {
        GnBranch::LargeVocabulary
    } else if C0 * n / 4.0 + 2.0 <= s {
        GnBranch::Intermediate
    } else {
        GnBranch::SmallVocabulary
    }
}

/// Evaluates one branch formula regardless of which regime `(s, n)` is in.
pub fn gn_branch_value(s: usize, n: u64, branch: GnBranch) -> Gn {
    let sf = s as f64;
    let nf = n as f64;
    let ln_value = match branch {
        GnBranch::LargeVocabulary => C1.ln() + sf.ln() + C0 * nf / (2.0 * E),
        GnBranch::Intermediate => C1.ln() + sf.ln() + sf / 2.0 * (C0 * nf / sf).ln(),
        GnBranch::SmallVocabulary => {
            if s < 1023 {
                (2f64.powi(s as i32) - 2.0).ln()
            } else {
                // 2^s - 2 ~ 2^s once the -2 is below one ulp.
                sf * std::f64::consts::LN_2
            }
        }
    };
    let value = match branch {
        GnBranch::SmallVocabulary if s < 1023 => 2f64.powi(s as i32) - 2.0,
        _ => ln_value.exp(),
    };
    Gn {
        value,
        ln_value,
        branch,
        overflow: value.is_infinite(),
    }
}

pub fn g_n(s: usize, n: u64) -> Result<Gn, AnalyticsError> {
    check(s >= 2, "s", s as f64, "s >= 2")?;
    check(n >= 1, "n", n as f64, "n >= 1")?;
    Ok(gn_branch_value(s, n, gn_branch(s, n)))
}

/// Bound on `E ||p^(m) - p^(1)||_1` for `m >= 2` in the partially synthetic
/// chain, using the worst case `phi = 2`.
pub fn deviation_bound(real: u64, n: u64, s: usize) -> Result<CappedBound, AnalyticsError> {
    check(real >= 1, "N", real as f64, "N >= 1")?;
    let g = g_n(s, n)?;
    let value = (PI * n as f64 / 2.0).sqrt() * g.value / real as f64;
    Ok(CappedBound::new(value, 2.0))
}

/// `log((1-x)/x) / (1-2x)` on `[0, 1/2]`, with `phi(1/2) = 2` and
/// `phi(0) = +inf`.
pub fn phi(x: f64) -> Result<f64, AnalyticsError> {
    check((0.0..=0.5).contains(&x), "x", x, "0 <= x <= 1/2")?;
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    let u = 1.0 - 2.0 * x;
    if u < 2.0 * PHI_TAYLOR_RADIUS {
        return Ok(2.0 + 2.0 * u * u / 3.0);
    }
    // log((1-x)/x) = 2 atanh(1-2x)
    Ok(2.0 * u.atanh() / u)
}

/// Upper bound on `P(||p_hat - p||_1 >= eps)` for `n` samples, clamped to 1.
pub fn concentration_tail(pi_p: f64, n: u64, s: usize, eps: f64) -> Result<f64, AnalyticsError> {
    check(eps > 0.0, "eps", eps, "eps > 0")?;
    let rate = phi(pi_p)?;
    let g = g_n(s, n)?;
    let exponent = -(n as f64) * rate * eps * eps / 4.0;
    if exponent == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((exponent + g.ln_value).exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralDeviation {
    pub zeta: f64,
    pub bound: CappedBound,
}

/// Deviation bound driven by the expected balanced-split product of the
/// first generation, `E[max_A p1(A) p1(A^c)]`.
pub fn deviation_bound_general(
    real: u64,
    n: u64,
    s: usize,
    expected_lambda1: f64,
) -> Result<GeneralDeviation, AnalyticsError> {
    check(real >= 1, "N", real as f64, "N >= 1")?;
    check(
        (0.0..=0.25).contains(&expected_lambda1),
        "E[lambda1]",
        expected_lambda1,
        "0 <= E[lambda1] <= 1/4",
    )?;
    let share = real as f64 / (real + n) as f64;
    let zeta = 0.5 - (0.5 - 2.0 * expected_lambda1) * share * share;
    let g = g_n(s, n)?;
    let value = (PI * n as f64 / phi(zeta)?).sqrt() * g.value / real as f64;
    Ok(GeneralDeviation {
        zeta,
        bound: CappedBound::new(value, 2.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticBudget {
    pub n: u64,
    pub log_argument: f64,
    /// The budget falls outside the `C0 n / e + 2 <= s` regime the formula
    /// was derived in.
    pub regime_violation: bool,
}

/// Largest synthetic budget keeping the expected L1 drift below `eps`.
pub fn max_synthetic_n(s: usize, real: u64, eps: f64) -> Result<SyntheticBudget, AnalyticsError> {
    check(s >= 3, "s", s as f64, "s >= 3")?;
    check(real >= 1, "N", real as f64, "N >= 1")?;
    check(eps > 0.0, "eps", eps, "eps > 0")?;
    let log_argument = 2f64.sqrt() * PI * real as f64 * eps / (6.0 * E * s as f64);
    if log_argument <= 1.0 {
        return Err(AnalyticsError::NonPositiveBudget { log_argument });
    }
    let arm = (s as f64 - 2.0).min(log_argument.ln());
    let n = (2.0 * PI * (-2.0f64).exp() * arm).floor().max(0.0) as u64;
    Ok(SyntheticBudget {
        n,
        log_argument,
        regime_violation: !(C0 * n as f64 / E + 2.0 <= s as f64),
    })
}

/// Limit law of the absorbed token in the fully synthetic chain: the
/// initial distribution itself.
pub fn prop1_limit_law(p0: &ProbVec) -> ProbVec {
    p0.clone()
}

/// What to evaluate a [`BoundsReport`] for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRequest {
    pub schedule: Schedule,
    pub s0: f64,
    pub alphabet: usize,
    pub support: usize,
    pub generations: u64,
    pub epsilon: Option<f64>,
    pub expected_lambda1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmPoint {
    pub generation: u64,
    pub formula: f64,
    /// Exact recursion, where it differs from the closed form.
    pub recursion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub request: BoundsRequest,
    pub s_m: Vec<SmPoint>,
    pub rho_bounds: Vec<RhoBounds>,
    pub t_bounds: Option<TBounds>,
    pub mixing: Option<MixingConstants>,
    pub g_n: Option<Gn>,
    pub deviation: Option<CappedBound>,
    pub general_deviation: Option<GeneralDeviation>,
    pub max_n: Option<SyntheticBudget>,
    /// Why `max_n` is absent when an epsilon was requested.
    pub max_n_note: Option<String>,
}

impl BoundsReport {
    /// Closed forms exist for the fully and partially synthetic scenarios
    /// (and the window-1 most-recent scenario, which is fully synthetic).
    pub fn evaluate(req: &BoundsRequest) -> Result<Self, AnalyticsError> {
        let mut report = BoundsReport {
            request: req.clone(),
            s_m: Vec::new(),
            rho_bounds: Vec::new(),
            t_bounds: None,
            mixing: None,
            g_n: None,
            deviation: None,
            general_deviation: None,
            max_n: None,
            max_n_note: None,
        };
        let fully_n = match req.schedule {
            Schedule::FullySynthetic { samples } => Some(samples),
            Schedule::MostRecent { samples, window: 1 } => Some(samples),
            _ => None,
        };
        if let Some(n) = fully_n {
            for m in 0..=req.generations {
                report.s_m.push(SmPoint {
                    generation: m,
                    formula: s_m_fully(req.s0, n, m)?,
                    recursion: None,
                });
            }
            if n >= 2 && req.support >= 2 {
                for m in 0..=req.generations {
                    report.rho_bounds.push(rho_bounds(req.s0, n, req.support, m)?);
                }
            }
            if req.s0 == 1.0 || req.support >= 2 {
                report.t_bounds = Some(expected_t_bounds(req.s0, n, req.support)?);
            }
        }
        if let Schedule::PartiallySynthetic {
            samples,
            real_samples,
        } = req.schedule
        {
            report.mixing = Some(mixing_constants(real_samples, samples));
            for g in 1..=req.generations {
                report.s_m.push(SmPoint {
                    generation: g,
                    formula: s_m_partial(req.s0, real_samples, samples, g)?,
                    recursion: Some(s_m_partial_recursive(req.s0, real_samples, samples, g)?),
                });
            }
            if req.alphabet >= 2 {
                report.g_n = Some(g_n(req.alphabet, samples)?);
                report.deviation = Some(deviation_bound(real_samples, samples, req.alphabet)?);
                if let Some(lambda) = req.expected_lambda1 {
                    report.general_deviation = Some(deviation_bound_general(
                        real_samples,
                        samples,
                        req.alphabet,
                        lambda,
                    )?);
                }
            }
            if let Some(eps) = req.epsilon {
                match max_synthetic_n(req.alphabet, real_samples, eps) {
                    Ok(b) => report.max_n = Some(b),
                    Err(e) => report.max_n_note = Some(e.to_string()),
                }
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn constants_match_definitions() {
        assert!(close(C0, E.powi(3) / (2.0 * PI), 1e-15));
        assert!(close(C1, 6.0 * E / PI.powf(1.5), 1e-15));
    }

    #[test]
    fn s_m_fully_examples() {
        for n in [1, 2, 17] {
            for m in [0, 1, 9] {
                assert_eq!(s_m_fully(1.0, n, m).unwrap(), 1.0);
            }
        }
        for m in 1..5 {
            assert_eq!(s_m_fully(0.3, 1, m).unwrap(), 1.0);
        }
        // 1 - 0.9 * 0.9 ; also 1/10 + 0.9 * 0.1
        assert!(close(s_m_fully(0.1, 10, 1).unwrap(), 0.19, 1e-15));
        assert!(s_m_fully(0.0, 10, 1).is_err());
        assert!(s_m_fully(0.5, 0, 1).is_err());
    }

    #[test]
    fn rho_bounds_edges() {
        let b = rho_bounds(0.1, 100, 52, 0).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.lower_vacuous);
        assert!(b.lower <= b.upper);
        let far = rho_bounds(0.1, 100, 52, 20_000).unwrap();
        assert!(far.lower > 0.999_999 && far.upper > 0.999_999);
        assert!(rho_bounds(0.1, 1, 52, 3).is_err());
        assert!(rho_bounds(0.1, 10, 1, 3).is_err());
    }

    #[test]
    fn t_bounds_examples() {
        assert_eq!(
            expected_t_bounds(1.0, 50, 1).unwrap(),
            TBounds {
                lower: 1.0,
                upper: 1.0
            }
        );
        assert_eq!(
            expected_t_bounds(0.4, 1, 5).unwrap(),
            TBounds {
                lower: 1.0,
                upper: 1.0
            }
        );
        // 1 + 0.9 * 99 * 52 / 51 and 1 + 0.9 * 100 * 99
        let b = expected_t_bounds(0.1, 100, 52).unwrap();
        assert!(close(b.lower, 1.0 + 0.9 * 99.0 * 52.0 / 51.0, 1e-14));
        assert!((b.lower - 91.847).abs() < 1e-3);
        assert!(close(b.upper, 8911.0, 1e-14));
    }

    #[test]
    fn mixing_constants_example() {
        let c = mixing_constants(100, 10);
        assert!(close(c.alpha, 1.0 / 11.0, 1e-15));
        // (1/11) * (1.01/11 - 0.01) = 0.0074380...
        assert!(close(c.beta, (1.0 / 11.0) * (1.01 / 11.0 - 0.01), 1e-15));
        assert!((c.beta - 0.00744).abs() < 1e-5);
    }

    #[test]
    fn s_m_partial_small_synthetic_share() {
        let s0 = 0.2;
        let v = s_m_partial(s0, 1_000_000, 1, 10).unwrap();
        assert!((v - (1e-6 + (1.0 - 1e-6) * s0)).abs() < 1e-5);
        assert!((v - s0).abs() < 1e-5);
        assert!(close(
            s_m_partial(s0, 100, 10, 1).unwrap(),
            0.01 + 0.99 * s0,
            1e-15
        ));
    }

    #[test]
    fn partial_closed_form_and_recursion_share_a_limit() {
        for &(real, n) in &[(100u64, 10u64), (100, 100), (100, 1000), (7, 3)] {
            let a = s_m_partial(0.1, real, n, 400).unwrap();
            let b = s_m_partial_recursive(0.1, real, n, 400).unwrap();
            assert!(close(a, b, 1e-12), "{real} {n}: {a} {b}");
        }
        // Exact rational evaluation of the recursion for N = 100, n = 10,
        // S0 = 1/10: S_2 = 0.10973636363..., the closed form gives 0.10973513...
        let rec = s_m_partial_recursive(0.1, 100, 10, 2).unwrap();
        assert!(close(rec, 0.109_736_363_636_363_63, 1e-13));
        let formula = s_m_partial(0.1, 100, 10, 2).unwrap();
        assert!(close(formula, 0.109_735_137_385_512_08, 1e-13));
    }

    #[test]
    fn gn_branch_examples() {
        let g = g_n(2, 10).unwrap();
        assert_eq!(g.branch, GnBranch::SmallVocabulary);
        assert_eq!(g.value, 2.0);
        let g = g_n(600, 5).unwrap();
        assert_eq!(g.branch, GnBranch::LargeVocabulary);
        let expected = C1 * 600.0 * (C0 * 5.0 / (2.0 * E)).exp();
        assert!(close(g.value, expected, 1e-13));
        assert!((g.value - 3.3e4).abs() < 0.05e4);
        assert!(g_n(1, 5).is_err());
    }

    #[test]
    fn gn_branch_gap_at_boundaries() {
        // At s = C0 n / e + 2 the two neighbouring formulas differ by the
        // factor e (1 - 2/s)^(s/2), which only tends to 1 as s grows.
        for s in [10usize, 100, 1000] {
            let n = ((s as f64 - 2.0) * E / C0) as u64;
            // pick n so that s sits exactly at the boundary: solve for s instead
            let s_exact = C0 * n as f64 / E + 2.0;
            let l = C1.ln() + s_exact.ln() + C0 * n as f64 / (2.0 * E);
            let m = C1.ln() + s_exact.ln() + s_exact / 2.0 * (C0 * n as f64 / s_exact).ln();
            let ratio = (m - l).exp();
            let predicted = E * (1.0 - 2.0 / s_exact).powf(s_exact / 2.0);
            assert!(close(ratio, predicted, 1e-9), "s={s}");
            assert!(ratio < 1.0);
        }
    }

    #[test]
    fn gn_overflow_is_flagged() {
        let g = g_n(5000, 1_000_000).unwrap();
        assert_eq!(g.branch, GnBranch::SmallVocabulary);
        assert!(g.overflow);
        assert_eq!(g.value, f64::INFINITY);
        assert!(g.ln_value.is_finite());
        let g = g_n(2000, 1500).unwrap();
        assert_eq!(g.branch, GnBranch::LargeVocabulary);
        assert!(g.overflow);
    }

    #[test]
    fn deviation_bound_examples() {
        let b = deviation_bound(1_000_000, 5, 600).unwrap();
        assert!((b.value - 0.0932).abs() < 5e-4, "{}", b.value);
        assert!(!b.vacuous);
        let b = deviation_bound(100, 1000, 600).unwrap();
        assert!(b.vacuous);
        assert!(b.value > 2.0);
        assert_eq!(b.clamped(), 2.0);
        let a = deviation_bound(10_000, 5, 600).unwrap().value;
        let c = deviation_bound(10_000_000, 5, 600).unwrap().value;
        assert!(c < a / 999.0);
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.5).unwrap(), 2.0);
        assert!(phi(0.1).unwrap() > phi(0.3).unwrap());
        assert!(phi(0.3).unwrap() > phi(0.5).unwrap());
        assert!(close(phi(0.25).unwrap(), 2.0 * 3f64.ln(), 1e-15));
        assert_eq!(phi(0.0).unwrap(), f64::INFINITY);
        assert!(phi(-0.1).is_err());
        assert!(phi(0.6).is_err());
    }

    #[test]
    fn phi_matches_the_log_form() {
        for i in 1..1000 {
            let x = i as f64 / 2001.0;
            let direct = ((1.0 - x) / x).ln() / (1.0 - 2.0 * x);
            assert!(close(phi(x).unwrap(), direct, 1e-12), "x={x}");
        }
    }

    #[test]
    fn phi_is_smooth_near_one_half() {
        for k in 1..200 {
            let h = k as f64 * 1e-8;
            let v = phi(0.5 - h).unwrap();
            assert!(v >= 2.0);
            assert!((v - 2.0).abs() < 1e-9, "h={h} v={v}");
        }
        // both sides of the Taylor switch agree
        let inside = phi(0.5 - 0.999e-6).unwrap();
        let outside = phi(0.5 - 1.001e-6).unwrap();
        assert!((inside - outside).abs() < 1e-11);
    }

    #[test]
    fn phi_grid_lower_bound() {
        for i in 0..=10_000 {
            let x = 0.5 * i as f64 / 10_000.0;
            assert!(phi(x).unwrap() >= 2.0, "x={x}");
        }
    }

    #[test]
    fn concentration_tail_examples() {
        let b = concentration_tail(0.5, 100, 2, 0.5).unwrap();
        assert!(close(b, 2.0 * (-12.5f64).exp(), 1e-13));
        assert_eq!(concentration_tail(0.5, 100, 2, 1e-9).unwrap(), 1.0);
        let wide = concentration_tail(0.5, 400, 8, 0.4).unwrap();
        let narrow = concentration_tail(0.1, 400, 8, 0.4).unwrap();
        assert!(wide > narrow);
        assert_eq!(concentration_tail(0.0, 30, 8, 0.4).unwrap(), 0.0);
        assert!(concentration_tail(0.5, 30, 8, 0.0).is_err());
    }

    #[test]
    fn general_deviation_reduces_to_worst_case() {
        for &(real, n, s) in &[(1_000_000u64, 5u64, 600usize), (100, 10, 600), (50, 3, 10)] {
            let g = deviation_bound_general(real, n, s, 0.25).unwrap();
            assert_eq!(g.zeta, 0.5);
            let d = deviation_bound(real, n, s).unwrap();
            assert!(close(g.bound.value, d.value, 1e-12));
        }
        let g = deviation_bound_general(100, 10, 600, 0.0).unwrap();
        let share: f64 = 100.0 / 110.0;
        assert!(close(g.zeta, 0.5 - 0.5 * share * share, 1e-15));
        assert!(g.bound.value < deviation_bound(100, 10, 600).unwrap().value);
    }

    #[test]
    fn synthetic_budget_example() {
        let b = max_synthetic_n(600, 1_000_000_000, 0.1).unwrap();
        assert_eq!(b.n, 9);
        assert!(!b.regime_violation);
        assert!(deviation_bound(1_000_000_000, b.n, 600).unwrap().value <= 0.1);
        assert!(matches!(
            max_synthetic_n(600, 100, 0.1),
            Err(AnalyticsError::NonPositiveBudget { .. })
        ));
    }

    #[test]
    fn synthetic_budget_grows_with_corpus() {
        let mut last = 0;
        for k in 6..40 {
            let real = 10f64.powf(k as f64 * 0.5) as u64;
            if let Ok(b) = max_synthetic_n(50, real, 0.1) {
                assert!(b.n >= last);
                last = b.n;
            }
        }
        assert!(last > 0);
        // the s - 2 arm caps the budget
        assert!(last <= (2.0 * PI * (-2.0f64).exp() * 48.0).floor() as u64);
    }

    #[test]
    fn limit_law_is_the_start() {
        let p = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(prop1_limit_law(&p), p);
        let d = ProbVec::dirac(3, 0).unwrap();
        assert_eq!(prop1_limit_law(&d), d);
    }

    #[test]
    fn report_for_each_kind() {
        let req = BoundsRequest {
            schedule: Schedule::fully_synthetic(20).unwrap(),
            s0: 0.2,
            alphabet: 10,
            support: 10,
            generations: 30,
            epsilon: None,
            expected_lambda1: None,
        };
        let r = BoundsReport::evaluate(&req).unwrap();
        assert_eq!(r.s_m.len(), 31);
        assert_eq!(r.rho_bounds.len(), 31);
        assert!(r.rho_bounds.iter().all(|b| b.lower <= b.upper));
        let t = r.t_bounds.unwrap();
        assert!(t.lower <= t.upper);

        let req = BoundsRequest {
            schedule: Schedule::partially_synthetic(100, 10).unwrap(),
            s0: 0.1,
            alphabet: 600,
            support: 52,
            generations: 50,
            epsilon: Some(0.1),
            expected_lambda1: Some(0.2),
        };
        let r = BoundsReport::evaluate(&req).unwrap();
        assert_eq!(r.s_m.len(), 50);
        assert!(r.deviation.unwrap().vacuous);
        assert!(r.max_n.is_none());
        assert!(r.max_n_note.is_some());
        assert!(r.general_deviation.is_some());
    }
}
