//! Proximal point outer loop, resolvent solvers and convergence diagnostics.
//!
//! Convergence theory for the outer loop holds on flat manifolds. On curved
//! manifolds (`H^n` with `n >= 2`) the loop still runs, but results there are
//! experimental; [`IterationTrace::experimental`] flags such runs.

pub mod exact;
mod trace;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifunctions::{sampler, BifunctionError, BifunctionHandle};
use crate::existence::{gap, ExistenceError, Grid, GridSpec};
use crate::geometry::ManifoldPoint;
use crate::sets::{SetError, DEFAULT_SAMPLING_CLIP};

pub use trace::{read_jsonl, write_csv, write_jsonl, IterationRecord, IterationTrace, TerminationStatus, TraceIoError};

/// Distance to the solution set below which a non-exact run counts as
/// having reached it.
pub const TERMINATION_TOL: f64 = 1e-12;
/// Upper bound for the inner residual accepted for an iterate.
pub const MAX_ACCEPT_TOL: f64 = 1e-8;
/// Samples closer than this to the solution set are ignored by the
/// conditioning fit.
pub const CONDITIONING_MIN_DIST: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("starting point is outside the domain")]
    NotInDomain,
    #[error("no closed-form resolvent for {0}")]
    NoClosedForm(String),
    #[error("extragradient needs a direction oracle for {0}")]
    MissingDirection(String),
    #[error("inner solver did not converge: residual {residual:e} after {iterations} iterations at {point:?}")]
    InnerNonconvergence { point: Vec<f64>, residual: f64, iterations: usize },
    #[error("not conditioned: -F(x, P_S x) = {value:e} at {point:?}")]
    NotConditioned { point: Vec<f64>, value: f64 },
    #[error("solution set oracle is empty")]
    EmptyOracle,
    #[error(transparent)]
    Existence(#[from] ExistenceError),
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// A solver failure together with the iterates computed before it.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct SolveFailure {
    pub partial: IterationTrace,
    #[source]
    pub source: SolverError,
}

/// `lambda_k`: a constant, or an explicit list whose last entry repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSchedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl LambdaSchedule {
    /// Parameter used for the step from `x^k` to `x^{k+1}`.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            LambdaSchedule::Constant(l) => *l,
            LambdaSchedule::Sequence(v) => v[k.min(v.len() - 1)],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            LambdaSchedule::Constant(l) => std::slice::from_ref(l),
            LambdaSchedule::Sequence(v) => v,
        }
    }

    pub fn validate(&self, theta: f64) -> Result<(), SolverError> {
        let v = self.values();
        if v.is_empty() {
            return Err(SolverError::InvalidConfig("empty lambda schedule".into()));
        }
        for &l in v {
            if !l.is_finite() || !(l > theta) || !(l > 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "lambda {l} must be finite, positive and exceed theta = {theta}"
                )));
            }
        }
        Ok(())
    }

    /// `2 max(theta, 1)`.
    pub fn default_for(theta: f64) -> Self {
        LambdaSchedule::Constant(2.0 * theta.max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerMethod {
    ClosedForm,
    /// Grid node with the smallest regularized gap, lowest index on ties.
    GridOracle {
        grid: GridSpec,
    },
    /// Projected extragradient on the regularized problem. The step defaults
    /// to `0.5 / lambda`.
    Extragradient {
        #[serde(default)]
        step: Option<f64>,
        #[serde(default = "default_eg_iters")]
        max_iters: usize,
        #[serde(default = "default_eg_tol")]
        tol: f64,
    },
}

fn default_eg_iters() -> usize {
    100_000
}

fn default_eg_tol() -> f64 {
    1e-13
}

impl InnerMethod {
    pub fn extragradient() -> Self {
        InnerMethod::Extragradient { step: None, max_iters: default_eg_iters(), tol: default_eg_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximalConfig {
    #[serde(default)]
    pub lambda: Option<LambdaSchedule>,
    #[serde(default)]
    pub theta_bound: f64,
    pub inner: InnerMethod,
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    /// Grid for the stopping test and inner residuals; defaults per dimension.
    #[serde(default)]
    pub gap_grid: Option<GridSpec>,
}

fn default_outer_tol() -> f64 {
    1e-9
}

fn default_max_outer() -> usize {
    100
}

impl ProximalConfig {
    pub fn new(lambda: LambdaSchedule, theta_bound: f64, inner: InnerMethod) -> Self {
        Self {
            lambda: Some(lambda),
            theta_bound,
            inner,
            outer_tol: default_outer_tol(),
            max_outer: default_max_outer(),
            gap_grid: None,
        }
    }

    /// The validated schedule, falling back to the default for `theta_bound`.
    pub fn schedule(&self) -> Result<LambdaSchedule, SolverError> {
        if !(self.theta_bound >= 0.0) {
            return Err(SolverError::InvalidConfig("theta_bound must be nonnegative".into()));
        }
        if !(self.outer_tol > 0.0) {
            return Err(SolverError::InvalidConfig("outer_tol must be positive".into()));
        }
        let s = self.lambda.clone().unwrap_or_else(|| LambdaSchedule::default_for(self.theta_bound));
        s.validate(self.theta_bound)?;
        Ok(s)
    }

    pub fn accept_tol(&self) -> f64 {
        MAX_ACCEPT_TOL.min(self.outer_tol / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventOutcome {
    pub point: ManifoldPoint,
    /// Regularized gap of `point` on the probe grid.
    pub residual: f64,
    pub iterations: usize,
}

/// Resolvent evaluator bound to a bifunction, a method and a probe grid.
pub struct Resolver<'a> {
    f: &'a BifunctionHandle,
    method: &'a InnerMethod,
    probe: Grid,
    oracle: Option<Grid>,
    accept_tol: f64,
}

impl<'a> Resolver<'a> {
    pub fn new(
        f: &'a BifunctionHandle,
        method: &'a InnerMethod,
        probe: Option<&GridSpec>,
        accept_tol: f64,
    ) -> Result<Self, SolverError> {
        let dim = f.manifold().intrinsic_dim();
        let probe = match probe {
            Some(g) => g.build(f.domain())?,
            None => GridSpec::default_for(dim).build(f.domain())?,
        };
        let oracle = match method {
            InnerMethod::GridOracle { grid } => Some(grid.build(f.domain())?),
            _ => None,
        };
        Ok(Self { f, method, probe, oracle, accept_tol })
    }

    pub fn probe(&self) -> &Grid {
        &self.probe
    }

    /// `z` with `F(z, y) - lambda <log_z x, log_z y> >= -residual` on the probe grid.
    pub fn solve(&self, lambda: f64, x: &ManifoldPoint) -> Result<ResolventOutcome, SolverError> {
        let fr = self.f.regularize(lambda, x)?;
        match self.method {
            InnerMethod::ClosedForm => {
                let z = self
                    .f
                    .closed_form_resolvent(lambda, x)
                    .ok_or_else(|| SolverError::NoClosedForm(self.f.label().to_string()))?;
                let residual = gap(&fr, &z, &self.probe)?;
                self.accept(z, residual, 1)
            }
            InnerMethod::GridOracle { .. } => {
                let grid = self.oracle.as_ref().expect("oracle grid built for grid method");
                let (i, _) = grid_argmin_gap(&fr, grid);
                let z = grid.nodes()[i].clone();
                let residual = gap(&fr, &z, &self.probe)?;
                Ok(ResolventOutcome { point: z, residual, iterations: grid.len() })
            }
            InnerMethod::Extragradient { step, max_iters, tol } => {
                let sigma = step.unwrap_or(0.5 / lambda);
                if !(sigma > 0.0) {
                    return Err(SolverError::InvalidConfig("extragradient step must be positive".into()));
                }
                let (z, iters) = extragradient(&fr, x, sigma, *max_iters, *tol)?;
                let residual = gap(&fr, &z, &self.probe)?;
                self.accept(z, residual, iters)
            }
        }
    }

    fn accept(&self, z: ManifoldPoint, residual: f64, iterations: usize) -> Result<ResolventOutcome, SolverError> {
        if residual > self.accept_tol {
            return Err(SolverError::InnerNonconvergence { point: z.into_coords(), residual, iterations });
        }
        Ok(ResolventOutcome { point: z, residual, iterations })
    }
}

/// Single resolvent evaluation with the default probe grid and acceptance
/// tolerance.
pub fn resolvent(
    f: &BifunctionHandle,
    lambda: f64,
    x: &ManifoldPoint,
    method: &InnerMethod,
) -> Result<ResolventOutcome, SolverError> {
    Resolver::new(f, method, None, MAX_ACCEPT_TOL)?.solve(lambda, x)
}

/// Index of the grid node with the smallest gap (first one on ties), and
/// that gap. Candidates are abandoned once they exceed the current best.
fn grid_argmin_gap(f: &BifunctionHandle, grid: &Grid) -> (usize, f64) {
    let nodes = grid.nodes();
    let mut best = (0, f64::INFINITY);
    for (i, z) in nodes.iter().enumerate() {
        let mut g: f64 = 0.0;
        for y in nodes {
            g = g.max(-f.eval(z, y));
            if g >= best.1 {
                break;
            }
        }
        if g < best.1 {
            best = (i, g);
        }
    }
    best
}

/// Grid nodes whose regularized gap is within `tol` of the smallest one.
pub fn grid_oracle_sublevel(
    f: &BifunctionHandle,
    lambda: f64,
    x: &ManifoldPoint,
    grid: &Grid,
    tol: f64,
) -> Result<Vec<ManifoldPoint>, SolverError> {
    let fr = f.regularize(lambda, x)?;
    let (_, best) = grid_argmin_gap(&fr, grid);
    let mut out = Vec::new();
    for z in grid.nodes() {
        if gap(&fr, z, grid)? <= best + tol {
            out.push(z.clone());
        }
    }
    Ok(out)
}

fn extragradient(
    fr: &BifunctionHandle,
    start: &ManifoldPoint,
    sigma: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(ManifoldPoint, usize), SolverError> {
    let m = fr.manifold().clone();
    let dom = fr.domain();
    let dir = |p: &ManifoldPoint| fr.direction(p).ok_or_else(|| SolverError::MissingDirection(fr.label().to_string()));
    let mut z = start.clone();
    for it in 1..=max_iters {
        let g: Vec<f64> = dir(&z)?.iter().map(|c| -sigma * c).collect();
        let w = dom.project(&m.wrap(m.exp_raw(z.coords(), &g)))?;
        let gw = dir(&w)?;
        let mut v = w.log_to(&z).coords().to_vec();
        v.iter_mut().zip(&gw).for_each(|(a, b)| *a -= sigma * b);
        let next = dom.project(&m.wrap(m.exp_raw(w.coords(), &v)))?;
        let moved = next.distance(&z);
        z = next;
        if moved <= tol {
            return Ok((z, it));
        }
    }
    Ok((z, max_iters))
}

fn dist_to_set(x: &ManifoldPoint, s: &[ManifoldPoint]) -> f64 {
    s.iter().map(|p| x.distance(p)).fold(f64::INFINITY, f64::min)
}

fn nearest<'s>(x: &ManifoldPoint, s: &'s [ManifoldPoint]) -> &'s ManifoldPoint {
    let mut best = &s[0];
    let mut bd = x.distance(best);
    for p in &s[1..] {
        let d = x.distance(p);
        if d < bd {
            best = p;
            bd = d;
        }
    }
    best
}

/// Runs the proximal point method from `x0`. `s_oracle` enables the
/// distance-to-solution and Fejer columns of the trace.
pub fn proximal_solve(
    f: &BifunctionHandle,
    x0: &ManifoldPoint,
    config: &ProximalConfig,
    s_oracle: Option<&[ManifoldPoint]>,
) -> Result<IterationTrace, SolveFailure> {
    let mut trace = IterationTrace::new(f.manifold().descriptor().clone());
    let fail = |trace: &mut IterationTrace, e: SolverError| {
        trace.status = TerminationStatus::Aborted(e.to_string());
        SolveFailure { partial: trace.clone(), source: e }
    };
    let schedule = config.schedule().map_err(|e| fail(&mut trace, e))?;
    if let Some([]) = s_oracle {
        return Err(fail(&mut trace, SolverError::EmptyOracle));
    }
    match f.domain().contains(x0) {
        Ok(true) => {}
        Ok(false) => return Err(fail(&mut trace, SolverError::NotInDomain)),
        Err(e) => return Err(fail(&mut trace, e.into())),
    }
    let resolver = Resolver::new(f, &config.inner, config.gap_grid.as_ref(), config.accept_tol())
        .map_err(|e| fail(&mut trace, e))?;
    let exact = matches!(config.inner, InnerMethod::ClosedForm);

    let mut x = x0.clone();
    for k in 0.. {
        let g = gap(f, &x, resolver.probe()).map_err(|e| fail(&mut trace, e.into()))?;
        let d_s = s_oracle.map(|s| dist_to_set(&x, s));
        if g <= config.outer_tol || k == config.max_outer {
            trace.records.push(IterationRecord::terminal(k, &x, g, d_s));
            trace.status = if g > config.outer_tol {
                TerminationStatus::MaxIters
            } else if k == 0 {
                TerminationStatus::StoppedAtEquilibrium
            } else {
                let reached = match d_s {
                    Some(d) => d <= if exact { 0.0 } else { TERMINATION_TOL },
                    None => exact && g == 0.0,
                };
                if reached {
                    let k0 = s_oracle
                        .and_then(|s| finite_termination_index(&trace, s, if exact { 0.0 } else { TERMINATION_TOL }))
                        .unwrap_or(k);
                    TerminationStatus::FiniteTermination(k0)
                } else {
                    TerminationStatus::StoppedAtEquilibrium
                }
            };
            break;
        }
        let lambda = schedule.at(k);
        let out = resolver.solve(lambda, &x).map_err(|e| fail(&mut trace, e))?;
        let fejer =
            s_oracle.map(|s| s.iter().map(|p| out.point.distance(p) - x.distance(p)).fold(f64::NEG_INFINITY, f64::max));
        trace.records.push(IterationRecord {
            k,
            point: x.clone(),
            lambda: Some(lambda),
            step_dist: Some(x.distance(&out.point)),
            gap: Some(g),
            dist_to_s: d_s,
            fejer_slack: fejer,
            inner_residual: Some(out.residual),
        });
        x = out.point;
    }
    trace.experimental = !f.manifold().is_flat();
    Ok(trace)
}

/// `d(x^{k+1}, x_ref) - d(x^k, x_ref)` along the trace.
pub fn fejer_slacks(trace: &IterationTrace, x_ref: &ManifoldPoint) -> Vec<f64> {
    trace.records.windows(2).map(|w| w[1].point.distance(x_ref) - w[0].point.distance(x_ref)).collect()
}

/// `<log_{x^{k+1}} x^k, log_{x^{k+1}} x_ref>` along the trace; nonpositive
/// for resolvent steps of a pseudomonotone problem with `x_ref` a solution.
pub fn fejer_inner_products(trace: &IterationTrace, x_ref: &ManifoldPoint) -> Vec<f64> {
    trace.records.windows(2).map(|w| w[1].point.log_inner(&w[0].point, x_ref)).collect()
}

/// Smallest `k` with `dist(x^k, S) <= tol`.
pub fn finite_termination_index(trace: &IterationTrace, s: &[ManifoldPoint], tol: f64) -> Option<usize> {
    if s.is_empty() {
        return None;
    }
    trace.records.iter().find(|r| dist_to_set(&r.point, s) <= tol).map(|r| r.k)
}

/// `<log_{Tx} Ty, log_{Tx} x> + <log_{Ty} Tx, log_{Ty} y>` with `T` the
/// resolvent; positive values rule out firm nonexpansiveness.
pub fn firmly_nonexpansive_probe(
    f: &BifunctionHandle,
    lambda: f64,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    method: &InnerMethod,
) -> Result<f64, SolverError> {
    let resolver = Resolver::new(f, method, None, MAX_ACCEPT_TOL)?;
    let tx = resolver.solve(lambda, x)?.point;
    let ty = resolver.solve(lambda, y)?.point;
    Ok(tx.log_inner(&ty, x) + ty.log_inner(&tx, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningEstimate {
    pub tau: f64,
    pub rho: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    pub sample_count: usize,
    /// `min -F(x, P_S x) / dist(x, S)`, the constant for `rho = 1`.
    pub tau_linear: f64,
    pub seed: u64,
}

/// Fits `-F(x, P_S x) ~ tau dist(x, S)^rho` on sampled `x`.
///
/// Samples are drawn in the domain and pulled toward their projection by a
/// log-uniform fraction in `[1e-6, 1]`, so that the fit sees every scale of
/// `dist(x, S)` rather than only the bulk of the domain.
pub fn estimate_conditioning(
    f: &BifunctionHandle,
    s: &[ManifoldPoint],
    samples: usize,
    seed: u64,
) -> Result<ConditioningEstimate, SolverError> {
    if s.is_empty() {
        return Err(SolverError::EmptyOracle);
    }
    let mut rng = sampler(seed);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let far = f.domain().sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let frac = 10f64.powf(rng.random_range(-6.0..=0.0));
        let x = nearest(&far, s).geodesic_to(&far, frac);
        let p = nearest(&x, s);
        let d = x.distance(p);
        if d <= CONDITIONING_MIN_DIST {
            continue;
        }
        let g = -f.eval(&x, p);
        if g <= 0.0 {
            return Err(SolverError::NotConditioned { point: x.into_coords(), value: g });
        }
        pts.push((d, g));
    }
    if pts.len() < 2 {
        return Err(SolverError::InvalidConfig("too few usable conditioning samples".into()));
    }
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|(d, g)| (d.ln(), g.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let rho = sxy / sxx;
    let intercept = my - rho * mx;
    let fit_residual = (lx.iter().zip(&ly).map(|(a, b)| (b - intercept - rho * a).powi(2)).sum::<f64>() / n).sqrt();
    let min_ratio = pts.iter().map(|(d, g)| g / d.powf(rho)).fold(f64::INFINITY, f64::min);
    let tau_linear = pts.iter().map(|(d, g)| g / d).fold(f64::INFINITY, f64::min);
    Ok(ConditioningEstimate {
        tau: intercept.exp().min(min_ratio),
        rho,
        fit_residual,
        sample_count: pts.len(),
        tau_linear,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::{example41, potential, PotentialSpec};
    use crate::geometry::Manifold;
    use crate::sets::ConvexSet;
    use approx::assert_abs_diff_eq;

    fn r1(x: f64) -> ManifoldPoint {
        Manifold::euclidean(1).point(vec![x]).unwrap()
    }

    #[test]
    fn closed_form_resolvent_values() {
        let f = example41();
        let z = resolvent(&f, 7.0, &r1(0.5), &InnerMethod::ClosedForm).unwrap();
        assert_abs_diff_eq!(z.point.coords()[0], 7.0 / 12.0, epsilon = 1e-15);
        assert!(z.residual <= 1e-12);
        let z2 = resolvent(&f, 7.0, &z.point, &InnerMethod::ClosedForm).unwrap();
        assert_abs_diff_eq!(z2.point.coords()[0], 49.0 / 72.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_oracle_fixes_equilibrium() {
        let f = example41();
        let m = InnerMethod::GridOracle { grid: GridSpec::uniform(201) };
        let z = resolvent(&f, 7.0, &r1(1.0), &m).unwrap();
        assert_eq!(z.point.coords(), &[1.0]);
        assert_eq!(z.residual, 0.0);
    }

    #[test]
    fn example41_trace_terminates_at_five() {
        let f = example41();
        let cfg = ProximalConfig::new(LambdaSchedule::Constant(7.0), 1.0, InnerMethod::ClosedForm);
        let t = proximal_solve(&f, &r1(0.5), &cfg, Some(&[r1(1.0)])).unwrap();
        assert_eq!(t.status, TerminationStatus::FiniteTermination(5));
        assert_eq!(t.records.len(), 6);
        assert_eq!(t.records[5].point.coords(), &[1.0]);
        assert!(fejer_slacks(&t, &r1(1.0)).iter().all(|s| *s < 0.0));
        assert_eq!(finite_termination_index(&t, &[r1(1.0)], 1e-12), Some(5));
    }

    #[test]
    fn start_at_equilibrium_stops_immediately() {
        let f = example41();
        let cfg = ProximalConfig::new(LambdaSchedule::Constant(7.0), 1.0, InnerMethod::ClosedForm);
        let t = proximal_solve(&f, &r1(1.0), &cfg, None).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.status, TerminationStatus::StoppedAtEquilibrium);
    }

    #[test]
    fn config_rejects_lambda_below_theta() {
        let f = example41();
        let cfg = ProximalConfig::new(LambdaSchedule::Constant(0.5), 1.0, InnerMethod::ClosedForm);
        let err = proximal_solve(&f, &r1(0.5), &cfg, None).unwrap_err();
        assert!(matches!(err.source, SolverError::InvalidConfig(_)));
        assert!(matches!(err.partial.status, TerminationStatus::Aborted(_)));
        assert_eq!(LambdaSchedule::default_for(0.3), LambdaSchedule::Constant(2.0));
        assert_eq!(LambdaSchedule::Sequence(vec![3.0, 4.0]).at(7), 4.0);
    }

    #[test]
    fn potential_trace_matches_scalar_proximal_recursion() {
        // phi(y) = (y - 0.2)^2 on [-1, 1]; the resolvent minimizes
        // phi(y) + (lambda / 2)(y - x)^2.
        let dom = ConvexSet::interval(-1.0, 1.0).unwrap();
        let f = potential(PotentialSpec::Polynomial { coeffs: vec![0.04, -0.4, 1.0] }, dom).unwrap();
        let cfg = ProximalConfig::new(LambdaSchedule::Constant(3.0), 0.0, InnerMethod::ClosedForm);
        let t = proximal_solve(&f, &r1(-0.9), &cfg, None).unwrap();
        assert!(t.records.len() > 2);
        for w in t.records.windows(2) {
            let x = w[0].point.coords()[0];
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=200_000 {
                let y = -1.0 + 2.0 * i as f64 / 200_000.0;
                let v = (y - 0.2f64).powi(2) + 1.5 * (y - x).powi(2);
                if v < best.0 {
                    best = (v, y);
                }
            }
            assert!((w[1].point.coords()[0] - best.1).abs() <= 1e-5);
        }
    }

    #[test]
    fn extragradient_matches_closed_form() {
        let dom = ConvexSet::interval(-1.0, 1.0).unwrap();
        let f = potential(PotentialSpec::DistancePower { point: vec![0.3], power: 2.0, scale: 1.0 }, dom).unwrap();
        let a = resolvent(&f, 4.0, &r1(-0.8), &InnerMethod::ClosedForm).unwrap();
        let b = resolvent(&f, 4.0, &r1(-0.8), &InnerMethod::extragradient()).unwrap();
        assert_abs_diff_eq!(a.point.coords()[0], b.point.coords()[0], epsilon = 1e-9);
    }

    #[test]
    fn probe_is_zero_on_identical_points() {
        let f = example41();
        let v = firmly_nonexpansive_probe(&f, 7.0, &r1(0.6), &r1(0.6), &InnerMethod::ClosedForm).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn conditioning_of_example41() {
        let f = example41();
        let c = estimate_conditioning(&f, &[r1(1.0)], 2000, 11).unwrap();
        assert!((c.rho - 1.0).abs() < 0.05, "{c:?}");
        assert!(c.tau_linear >= 0.45);
    }
}
