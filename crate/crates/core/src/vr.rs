//! Worthwhile-change calculus: inconvenience, payoffs, stationary and
//! variational traps.
//!
//! Advantages to change are a bifunction `A` (typically `-F`). With
//! experience `e = (x, z)` the inconvenience of moving from `z` to `y` is
//! `I_e(z, y) = <log_z x, log_z y>`, and the change is worthwhile when
//! `Delta = A(z, y) - lambda I_e(z, y) >= 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifunctions::{check_monotone, sampler, BifunctionError, BifunctionHandle};
use crate::geometry::ManifoldPoint;
use crate::sets::{SetError, DEFAULT_SAMPLING_CLIP};
use crate::solver::{IterationTrace, LambdaSchedule};

/// Band for strict sign tests on payoffs.
pub const PAYOFF_TOL: f64 = 1e-10;
/// Step payoffs down to `-STEP_TOL` still count as worthwhile.
pub const STEP_TOL: f64 = 1e-9;
/// Accepted regularized residual for a claimed resolvent point.
pub const RESOLVENT_TOL: f64 = 1e-8;
/// Slack for each link of the resolvent chain.
pub const CHAIN_TOL: f64 = 1e-9;

/// Samples closer than this to the candidate count as the candidate itself.
const SAME_POINT: f64 = 1e-15;
/// Number of sampled directions that also get a ladder of probes converging
/// to the candidate.
const LADDER_DIRECTIONS: usize = 32;
const LADDER_DEPTH: i32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VrError {
    #[error("points live on different manifolds")]
    ManifoldMismatch,
    #[error("point is outside the domain")]
    NotInDomain,
    #[error("trace needs at least 2 iterates, got {0}")]
    TraceTooShort(usize),
    #[error("z is not a resolvent point: regularized residual {0:e}")]
    NotAResolvent(f64),
    #[error("advantages are not monotone: A(x,y) + A(y,x) = {violation:e} at {witness:?}")]
    NotMonotone { witness: (Vec<f64>, Vec<f64>), violation: f64 },
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// `e = (x, z)`: the action two periods back and the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub past: ManifoldPoint,
    pub current: ManifoldPoint,
}

impl Experience {
    pub fn new(past: ManifoldPoint, current: ManifoldPoint) -> Result<Self, VrError> {
        if past.manifold() != current.manifold() {
            return Err(VrError::ManifoldMismatch);
        }
        Ok(Self { past, current })
    }

    /// `(x, x)`: no change before `x`.
    pub fn stay(x: &ManifoldPoint) -> Self {
        Self { past: x.clone(), current: x.clone() }
    }
}

/// `I_e(z, y)` at `z = e.current`.
pub fn inconvenience(e: &Experience, y: &ManifoldPoint) -> f64 {
    inconvenience_at(e, &e.current, y)
}

/// `<log_z x, log_z y>` with `x = e.past`, for an arbitrary base `z`.
pub fn inconvenience_at(e: &Experience, z: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
    z.log_inner(&e.past, y)
}

/// `Delta_{lambda,e}(z, y) = A(z, y) - lambda I_e(z, y)` at `z = e.current`.
pub fn worthwhile_payoff(a: &BifunctionHandle, lambda: f64, e: &Experience, y: &ManifoldPoint) -> f64 {
    payoff_at(a, lambda, e, &e.current, y)
}

fn payoff_at(a: &BifunctionHandle, lambda: f64, e: &Experience, z: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
    a.eval(z, y) - lambda * inconvenience_at(e, z, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapVerdict {
    StrongStationary,
    WeakStationary,
    NotStationary,
    VariationalTrap,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub verdict: TrapVerdict,
    pub lambda_star: f64,
    /// Largest payoff seen at points other than the candidate.
    pub max_payoff_found: Option<f64>,
    pub witness: Option<Vec<f64>>,
    /// Whether every step of the trace was worthwhile.
    pub trace_worthwhile_ok: Option<bool>,
    /// Index of the first iterate reached by a step that was not worthwhile.
    pub failing_index: Option<usize>,
    pub step_payoffs: Vec<f64>,
    pub terminal_verdict: Option<TrapVerdict>,
    pub samples: usize,
    pub seed: u64,
}

/// Classifies `x*` by sampling `Delta_{lambda*,e*}(x*, y)` over the domain of
/// `a`. Besides uniform samples, a few directions are probed at geometrically
/// shrinking distances from `x*`, since a weak trap shows up as payoffs that
/// vanish next to it.
pub fn classify_stationary_trap(
    a: &BifunctionHandle,
    lambda_star: f64,
    e_star: &Experience,
    x_star: &ManifoldPoint,
    samples: usize,
    seed: u64,
) -> Result<TrapReport, VrError> {
    let dom = a.domain();
    if !dom.contains(x_star)? {
        return Err(VrError::NotInDomain);
    }
    if e_star.past.manifold() != x_star.manifold() {
        return Err(VrError::ManifoldMismatch);
    }
    let mut rng = sampler(seed);
    let mut max: Option<(f64, ManifoldPoint)> = None;
    let mut all_strict = true;
    let mut consider = |y: ManifoldPoint, max: &mut Option<(f64, ManifoldPoint)>| {
        if y.distance(x_star) <= SAME_POINT {
            return;
        }
        let d = payoff_at(a, lambda_star, e_star, x_star, &y);
        if d >= -PAYOFF_TOL {
            all_strict = false;
        }
        if max.as_ref().is_none_or(|(m, _)| d > *m) {
            *max = Some((d, y));
        }
    };
    for i in 0..samples {
        let y = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        if i < LADDER_DIRECTIONS {
            for j in 1..=LADDER_DEPTH {
                consider(x_star.geodesic_to(&y, 10f64.powi(-j)), &mut max);
            }
        }
        consider(y, &mut max);
    }
    let (verdict, witness) = match &max {
        Some((m, y)) if *m > PAYOFF_TOL => (TrapVerdict::NotStationary, Some(y.coords().to_vec())),
        _ if all_strict => (TrapVerdict::StrongStationary, None),
        _ => (TrapVerdict::WeakStationary, None),
    };
    Ok(TrapReport {
        verdict,
        lambda_star,
        max_payoff_found: max.map(|(m, _)| m),
        witness,
        trace_worthwhile_ok: None,
        failing_index: None,
        step_payoffs: Vec::new(),
        terminal_verdict: None,
        samples,
        seed,
    })
}

/// Checks that each step `x^k -> x^{k+1}` is worthwhile under experience
/// `(x^{k-1}, x^k)` (with `(x^0, x^0)` first) and parameter `schedule.at(k)`,
/// then classifies the final point under experience `(x^{K-1}, x^K)`.
pub fn certify_variational_trap(
    a: &BifunctionHandle,
    trace: &IterationTrace,
    schedule: &LambdaSchedule,
    samples: usize,
    seed: u64,
) -> Result<TrapReport, VrError> {
    let pts = trace.points();
    if pts.len() < 2 {
        return Err(VrError::TraceTooShort(pts.len()));
    }
    let mut payoffs = Vec::with_capacity(pts.len() - 1);
    let mut failing = None;
    for k in 0..pts.len() - 1 {
        let past = if k == 0 { pts[0] } else { pts[k - 1] };
        let e = Experience::new(past.clone(), pts[k].clone())?;
        let d = worthwhile_payoff(a, schedule.at(k), &e, pts[k + 1]);
        if d < -STEP_TOL && failing.is_none() {
            failing = Some(k + 1);
        }
        payoffs.push(d);
    }
    let k_last = pts.len() - 1;
    let lambda_star = schedule.at(k_last);
    let e_star = Experience::new(pts[k_last - 1].clone(), pts[k_last].clone())?;
    let terminal = classify_stationary_trap(a, lambda_star, &e_star, pts[k_last], samples, seed)?;
    let stationary = matches!(terminal.verdict, TrapVerdict::WeakStationary | TrapVerdict::StrongStationary);
    let verdict =
        if failing.is_none() && stationary { TrapVerdict::VariationalTrap } else { TrapVerdict::NotCertified };
    Ok(TrapReport {
        verdict,
        lambda_star,
        max_payoff_found: terminal.max_payoff_found,
        witness: terminal.witness,
        trace_worthwhile_ok: Some(failing.is_none()),
        failing_index: failing,
        step_payoffs: payoffs,
        terminal_verdict: Some(terminal.verdict),
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    /// `A(x, z)`.
    pub advantage: f64,
    /// `-A(z, x)`.
    pub reverse: f64,
    /// `lambda d^2(x, z)`.
    pub scaled_sq_dist: f64,
    /// Whether `A(x, z) >= -A(z, x) >= lambda d^2(x, z)` within tolerance.
    pub holds: bool,
    /// Largest sampled violation of the resolvent inequality (0 if none).
    pub resolvent_residual: f64,
}

/// Verifies the chain `A(x, z) >= -A(z, x) >= lambda d^2(x, z)` for a
/// resolvent point `z` of `F = -A` at `x`, which makes the change from `x`
/// to `z` worthwhile. Both preconditions are checked on samples first.
pub fn resolvent_lemma_check(
    a: &BifunctionHandle,
    lambda: f64,
    x: &ManifoldPoint,
    z: &ManifoldPoint,
    samples: usize,
    seed: u64,
) -> Result<LemmaOutcome, VrError> {
    let dom = a.domain();
    if !dom.contains(x)? || !dom.contains(z)? {
        return Err(VrError::NotInDomain);
    }
    let f = a.negated();
    let fr = f.regularize(lambda, x)?;
    let mut rng = sampler(seed);
    let mut residual: f64 = 0.0;
    for i in 0..samples.max(1) {
        let far = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        // mix in points close to z, where violations of a slightly wrong z live
        let y = if i % 2 == 0 { far } else { z.geodesic_to(&far, 10f64.powf(rng.random_range(-6.0..=0.0))) };
        residual = residual.max(-fr.eval(z, &y));
    }
    residual = residual.max(-fr.eval(z, x));
    if residual > RESOLVENT_TOL {
        return Err(VrError::NotAResolvent(residual));
    }
    let mono = check_monotone(&f, samples.max(1), seed)?;
    if !mono.passed_on_samples() {
        return Err(VrError::NotMonotone {
            witness: mono.witness.unwrap_or_default(),
            violation: mono.violation.unwrap_or_default(),
        });
    }
    let advantage = a.eval(x, z);
    let reverse = -a.eval(z, x);
    let d = x.distance(z);
    let scaled_sq_dist = lambda * d * d;
    let holds = advantage >= reverse - CHAIN_TOL && reverse >= scaled_sq_dist - CHAIN_TOL;
    Ok(LemmaOutcome { advantage, reverse, scaled_sq_dist, holds, resolvent_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::example41;
    use crate::geometry::Manifold;
    use approx::assert_abs_diff_eq;

    fn r1(x: f64) -> ManifoldPoint {
        Manifold::euclidean(1).point(vec![x]).unwrap()
    }

    #[test]
    fn inconvenience_examples() {
        let e = Experience::new(r1(0.0), r1(1.0)).unwrap();
        assert_eq!(inconvenience(&e, &r1(1.0)), 0.0);
        assert_eq!(inconvenience(&e, &r1(2.0)), -1.0);
        // manifold form at y = x gives +d(x, z)^2
        assert_eq!(inconvenience(&e, &r1(0.0)), 1.0);
    }

    #[test]
    fn stay_payoff_is_zero() {
        let a = example41().negated();
        let e = Experience::new(r1(0.5), r1(0.7)).unwrap();
        assert_eq!(worthwhile_payoff(&a, 3.0, &e, &r1(0.7)), 0.0);
    }

    #[test]
    fn equilibrium_is_weak_trap_and_interior_point_is_not() {
        let a = example41().negated();
        let r = classify_stationary_trap(&a, 7.0, &Experience::stay(&r1(1.0)), &r1(1.0), 500, 3).unwrap();
        assert_eq!(r.verdict, TrapVerdict::WeakStationary);
        let r = classify_stationary_trap(&a, 0.1, &Experience::stay(&r1(0.75)), &r1(0.75), 500, 3).unwrap();
        assert_eq!(r.verdict, TrapVerdict::NotStationary);
        let w = r.witness.unwrap()[0];
        assert!(w > 0.75);
    }

    #[test]
    fn singleton_domain_is_vacuously_strong() {
        let dom = crate::sets::ConvexSet::interval(0.5, 0.5).unwrap();
        let a = BifunctionHandle::from_fn("flat", dom, |x, y| x.coords()[0] - y.coords()[0]);
        let r = classify_stationary_trap(&a, 1.0, &Experience::stay(&r1(0.5)), &r1(0.5), 50, 1).unwrap();
        assert_eq!(r.verdict, TrapVerdict::StrongStationary);
    }

    #[test]
    fn resolvent_chain_on_raw_example41_reports_not_monotone() {
        let f = example41();
        let a = f.negated();
        let z = r1(7.0 / 12.0);
        let err = resolvent_lemma_check(&a, 7.0, &r1(0.5), &z, 2000, 1).unwrap_err();
        assert!(matches!(err, VrError::NotMonotone { .. }));
        let err = resolvent_lemma_check(&a, 7.0, &r1(0.5), &r1(0.9), 2000, 1).unwrap_err();
        assert!(matches!(err, VrError::NotAResolvent(_)));
    }

    #[test]
    fn resolvent_chain_at_fixed_point_is_all_zero() {
        let dom = crate::sets::ConvexSet::interval(-1.0, 1.0).unwrap();
        let f = crate::bifunctions::potential(
            crate::bifunctions::PotentialSpec::Polynomial { coeffs: vec![0.0, 0.0, 1.0] },
            dom,
        )
        .unwrap();
        let out = resolvent_lemma_check(&f.negated(), 2.0, &r1(0.0), &r1(0.0), 500, 2).unwrap();
        assert!(out.holds);
        assert_abs_diff_eq!(out.advantage, 0.0);
        assert_abs_diff_eq!(out.scaled_sq_dist, 0.0);
    }
}
