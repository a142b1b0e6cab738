//! Convergence constants of push-sum SGD and the iteration bounds they
//! imply. Everything that can overflow is carried in log space.

use serde::{Deserialize, Serialize};

use crate::design::{DesignResult, LogValue};
use crate::error::{Error, Result};

/// Problem constants: smoothness, noise, heterogeneity and the initial
/// state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub l: f64,
    pub sigma2: f64,
    pub zeta2: f64,
    pub n: usize,
    pub f0: f64,
    pub f_star: f64,
    pub x0_max_norm: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) {
            return Err(Error::Domain(format!(
                "smoothness must be positive, got {}",
                self.l
            )));
        }
        if self.sigma2 < 0.0 || self.zeta2 < 0.0 {
            return Err(Error::Domain("variances must be non-negative".into()));
        }
        if self.n == 0 {
            return Err(Error::Domain("need at least one node".into()));
        }
        if self.f0 < self.f_star {
            return Err(Error::Domain(format!(
                "initial value {} is below the optimum {}",
                self.f0, self.f_star
            )));
        }
        Ok(())
    }

    /// `A = 2 f0 - 2 f* + L σ²`.
    pub fn a(&self) -> f64 {
        2.0 * self.f0 - 2.0 * self.f_star + self.l * self.sigma2
    }

    /// `S = (max ‖x_i⁰‖)² + n² σ² + 3 n² ζ²`.
    pub fn s(&self) -> f64 {
        let n2 = (self.n * self.n) as f64;
        self.x0_max_norm.powi(2) + n2 * self.sigma2 + 3.0 * n2 * self.zeta2
    }
}

/// `C = 4 / δ^(ΔB)` and `q = (1 - δ^(ΔB))^(1/(ΔB))`, stored so that
/// neither overflows nor loses `1 - q` to rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingConstants {
    pub ln_c: f64,
    /// `ln(1 - q)`; `0` when `q = 0`.
    pub ln_one_minus_q: f64,
}

impl MixingConstants {
    pub fn c(&self) -> f64 {
        self.ln_c.exp()
    }

    pub fn q(&self) -> f64 {
        -self.ln_one_minus_q.exp_m1()
    }

    pub fn one_minus_q(&self) -> f64 {
        self.ln_one_minus_q.exp()
    }

    /// `ln(C² / (1 - q)²)`.
    pub fn ln_c2_over_gap2(&self) -> f64 {
        2.0 * self.ln_c - 2.0 * self.ln_one_minus_q
    }
}

/// Threshold below which `1 - q` uses its series expansion.
const SMALL_POWER: f64 = 1e-8;

pub fn convergence_constants(
    delta: f64,
    diameter: usize,
    period: usize,
) -> Result<MixingConstants> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    if diameter == 0 || period == 0 {
        return Err(Error::Domain("diameter and period must be positive".into()));
    }
    let m = (diameter * period) as f64;
    let ln_x = m * delta.ln();
    let ln_c = 4f64.ln() - ln_x;
    let x = ln_x.exp();
    let ln_one_minus_q = if x >= 1.0 {
        0.0
    } else if x < SMALL_POWER {
        // 1 - (1 - x)^(1/m) = (x/m)(1 + (m - 1)x/(2m) + O(x²))
        ln_x - m.ln() + ((m - 1.0) * x / (2.0 * m)).ln_1p()
    } else {
        (-((-x).ln_1p() / m).exp_m1()).ln()
    };
    Ok(MixingConstants {
        ln_c,
        ln_one_minus_q,
    })
}

/// Lower bound on the iteration count, with the proof's full maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationBound {
    /// `24 L² C² S / ((1 - q)² ε)`.
    pub t_lower: LogValue,
    /// `max{n, 18 C² L² n² / (1 - q)², 16 A² / (n ε²), t_lower}`.
    pub t_max: LogValue,
    /// Which of the four terms attains the maximum (0-based).
    pub dominant_term: usize,
}

impl IterationBound {
    /// Whether the closed-form bound and the full maximum differ.
    pub fn differs(&self) -> bool {
        self.dominant_term != 3
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub fn iteration_bound(
    pc: &ProblemConstants,
    cq: &MixingConstants,
    eps: f64,
) -> Result<IterationBound> {
    pc.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if cq.ln_one_minus_q == f64::NEG_INFINITY {
        return Err(Error::Domain("q must be below 1".into()));
    }
    let n = pc.n as f64;
    let ln_l2 = 2.0 * pc.l.ln();
    let ratio = cq.ln_c2_over_gap2();
    let terms = [
        n.ln(),
        18f64.ln() + ratio + ln_l2 + 2.0 * n.ln(),
        16f64.ln() + 2.0 * ln_or_neg_inf(pc.a()) - n.ln() - 2.0 * eps.ln(),
        24f64.ln() + ln_l2 + ratio + ln_or_neg_inf(pc.s()) - eps.ln(),
    ];
    let (dominant_term, &ln_max) = terms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("four terms");
    Ok(IterationBound {
        t_lower: LogValue::from_ln(terms[3]),
        t_max: LogValue::from_ln(ln_max),
        dominant_term,
    })
}

/// Range of `ε` for which the closed-form bound is the binding term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonWindow {
    pub lo: f64,
    pub hi: f64,
    /// Single node: the derivation assumes at least two.
    pub degenerate: bool,
}

impl EpsilonWindow {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, eps: f64) -> bool {
        self.lo <= eps && eps <= self.hi
    }
}

/// `2(1-q)² A² / (3 L² C² n S) ≤ ε ≤ min{4S/(3n²), 24 L² C² S / (n (1-q)²)}`.
pub fn epsilon_window(pc: &ProblemConstants, cq: &MixingConstants) -> Result<EpsilonWindow> {
    pc.validate()?;
    let n = pc.n as f64;
    let s = pc.s();
    let ln_l2 = 2.0 * pc.l.ln();
    let ratio = cq.ln_c2_over_gap2();
    let lo = (2f64.ln() + 2.0 * ln_or_neg_inf(pc.a())
        - 3f64.ln()
        - ln_l2
        - ratio
        - n.ln()
        - ln_or_neg_inf(s))
    .exp();
    let hi_a = 4.0 * s / (3.0 * n * n);
    let hi_b = (24f64.ln() + ln_l2 + ratio + ln_or_neg_inf(s) - n.ln()).exp();
    Ok(EpsilonWindow {
        lo,
        hi: hi_a.min(hi_b),
        degenerate: pc.n < 2,
    })
}

/// Predicted total slots `T τ` for a design, in log space.
pub fn predicted_total_slots(
    result: &DesignResult,
    pc: &ProblemConstants,
    eps: f64,
) -> Result<LogValue> {
    if result.tau == 0 {
        return Err(Error::NotStronglyConnected);
    }
    let cq = convergence_constants(result.delta, result.diameter, 1)?;
    let bound = iteration_bound(pc, &cq, eps)?;
    Ok(LogValue::from_ln(
        bound.t_lower.ln + (result.tau as f64).ln(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn unit_problem() -> ProblemConstants {
        ProblemConstants {
            l: 1.0,
            sigma2: 0.0,
            zeta2: 0.0,
            n: 2,
            f0: 0.0,
            f_star: 0.0,
            x0_max_norm: 1.0,
        }
    }

    #[test]
    fn constants_examples() {
        let cq = convergence_constants(0.5, 2, 1).unwrap();
        assert!(rel(cq.c(), 16.0) < 1e-12);
        assert!(rel(cq.q(), 0.75f64.sqrt()) < 1e-12);

        let cq = convergence_constants(1.0, 1, 1).unwrap();
        assert!(rel(cq.c(), 4.0) < 1e-12);
        assert_eq!(cq.q(), 0.0);

        let cq = convergence_constants(1.0 / 3.0, 1, 1).unwrap();
        assert!(rel(cq.c(), 12.0) < 1e-12);
        assert!(rel(cq.q(), 2.0 / 3.0) < 1e-12);
    }

    #[test]
    fn constants_reject_bad_delta() {
        assert!(convergence_constants(0.0, 1, 1).is_err());
        assert!(convergence_constants(1.5, 1, 1).is_err());
        assert!(convergence_constants(0.5, 0, 1).is_err());
    }

    #[test]
    fn series_branch_is_continuous() {
        // δ^(ΔB) straddles the switch point
        for &x in &[0.99e-8, 1.01e-8] {
            let m = 3usize;
            let delta = f64::powf(x, 1.0 / m as f64);
            let cq = convergence_constants(delta, m, 1).unwrap();
            let expected = x / m as f64 * (1.0 + (m as f64 - 1.0) * x / (2.0 * m as f64));
            assert!(rel(cq.one_minus_q(), expected) < 1e-9);
        }
    }

    #[test]
    fn iteration_bound_example() {
        let cq = convergence_constants(0.5, 2, 1).unwrap();
        let b = iteration_bound(&unit_problem(), &cq, 0.1).unwrap();
        let gap = 1.0 - 0.75f64.sqrt();
        let expected = 24.0 * 256.0 / (gap * gap * 0.1);
        assert!(rel(b.t_lower.value(), expected) < 1e-10);
        assert!(rel(b.t_lower.value(), 3.423e6) < 1e-3);

        let half = iteration_bound(&unit_problem(), &cq, 0.2).unwrap();
        assert!(rel(half.t_lower.value(), expected / 2.0) < 1e-10);
    }

    #[test]
    fn doubling_c_quadruples_bound() {
        let cq = convergence_constants(0.5, 2, 1).unwrap();
        let doubled = MixingConstants {
            ln_c: cq.ln_c + 2f64.ln(),
            ..cq
        };
        let a = iteration_bound(&unit_problem(), &cq, 0.1)
            .unwrap()
            .t_lower
            .value();
        let b = iteration_bound(&unit_problem(), &doubled, 0.1)
            .unwrap()
            .t_lower
            .value();
        assert!(rel(b, 4.0 * a) < 1e-12);
    }

    #[test]
    fn q_one_rejected() {
        let cq = MixingConstants {
            ln_c: 0.0,
            ln_one_minus_q: f64::NEG_INFINITY,
        };
        assert!(iteration_bound(&unit_problem(), &cq, 0.1).is_err());
    }

    #[test]
    fn window_example() {
        let cq = convergence_constants(0.5, 2, 1).unwrap();
        let w = epsilon_window(&unit_problem(), &cq).unwrap();
        assert_eq!(w.lo, 0.0);
        assert!(rel(w.hi, 1.0 / 3.0) < 1e-12);
        assert!(!w.is_empty() && !w.degenerate);

        let single = ProblemConstants {
            n: 1,
            ..unit_problem()
        };
        assert!(epsilon_window(&single, &cq).unwrap().degenerate);
    }

    #[test]
    fn total_slots_scale_with_tau() {
        let base = crate::graph::BaseTopology::from_edges(2, &[(0, 1)]).unwrap();
        let mut r = crate::design::design_graph(&base, 0, false).unwrap();
        let one = predicted_total_slots(&r, &unit_problem(), 0.1).unwrap();
        r.tau *= 2;
        let two = predicted_total_slots(&r, &unit_problem(), 0.1).unwrap();
        assert!(rel(two.value(), 2.0 * one.value()) < 1e-12);
        r.tau = 0;
        assert!(predicted_total_slots(&r, &unit_problem(), 0.1).is_err());
    }
}
