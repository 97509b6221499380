//! Time integration of a [`TruncatedSystem`].
//!
//! The production method is the L-stable three-stage ESDIRK pair of order
//! 2(3) known as TR-BDF2: a trapezoidal stage to `t + γh` followed by a BDF2
//! stage to `t + h`, with `γ = 2 - √2`. Both implicit stages share the
//! diagonal coefficient `γ/2`, so one LU factorisation of `I - (γ/2) h J`
//! serves the whole step. The embedded third-order solution gives the local
//! error estimate, which is filtered through the same factorisation so that
//! stiff components do not inflate it.
//!
//! The explicit reference is classical fourth-order Runge–Kutta at a fixed
//! step. It is slow and only stable for small steps, but shares no code with
//! the implicit path, which makes it usable as an oracle.

use std::f64::consts::SQRT_2;
use std::fmt;

use log::debug;
use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::analysis::moments;
use crate::error::{Error, Result};
use crate::model::{StateVector, TruncatedSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ImplicitAdaptive,
    ExplicitReference,
}

/// Tolerances and step-size limits. For [`Method::ExplicitReference`] the
/// step is fixed at `h_init`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub method: Method,
    /// Newton stops once the (estimated) correction is below this fraction of
    /// the error weights `atol + rtol |u_i|`.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: 1e-6,
            h_min: 1e-14,
            h_max: 0.05,
            max_steps: 500_000,
            method: Method::ImplicitAdaptive,
            newton_tol: 1e-3,
            newton_max_iters: 8,
        }
    }
}

impl SolverConfig {
    pub fn explicit_reference(h: f64) -> Self {
        SolverConfig {
            method: Method::ExplicitReference,
            h_init: h,
            h_min: h,
            h_max: h,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("h_init", self.h_init),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
            ("newton_tol", self.newton_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    format!("solver.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if !(self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::invalid(
                "solver.h_init",
                format!(
                    "need h_min <= h_init <= h_max, got {} <= {} <= {}",
                    self.h_min, self.h_init, self.h_max
                ),
            ));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::invalid("solver.newton_max_iters", "must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("solver.max_steps", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub rejected_error: usize,
    pub rejected_negative: usize,
    pub newton_iterations: usize,
    pub newton_failures: usize,
    pub jacobian_evals: usize,
    pub lu_decompositions: usize,
    pub rhs_evals: usize,
}

impl StepStats {
    pub fn rejected(&self) -> usize {
        self.rejected_error + self.rejected_negative + self.newton_failures
    }
}

/// Per-sample diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `Σ i du_i/dt`.
    pub mass_flux: f64,
    /// `N g_N u_N`.
    pub growth_leakage: f64,
}

/// Sampled solution. `moments[k]` holds `‖u‖_0..‖u‖_3` of `states[k]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub moments: Vec<[f64; 4]>,
    pub diagnostics: Vec<Diagnostics>,
    pub stats: StepStats,
}

impl Trajectory {
    fn record(&mut self, sys: &TruncatedSystem, t: f64, u: &[f64]) {
        self.times.push(t);
        self.moments.push(moments(u, sys.laws()));
        self.diagnostics.push(Diagnostics {
            mass_flux: sys.mass_flux_unchecked(u),
            growth_leakage: sys.growth_leakage(u),
        });
        self.states.push(StateVector::new(u.to_vec()));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// Total mass `‖u‖_1` at every sample.
    pub fn mass(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m[1]).collect()
    }

    /// Smallest component over all samples.
    pub fn min_component(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FailureKind {
    StepSizeUnderflow { h: f64 },
    NewtonFailure,
    NonFinite,
    MaxSteps,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::StepSizeUnderflow { h } => write!(f, "step size {h:e} fell below h_min"),
            FailureKind::NewtonFailure => write!(f, "Newton iteration failed to converge"),
            FailureKind::NonFinite => write!(f, "state became non-finite"),
            FailureKind::MaxSteps => write!(f, "maximum number of steps exceeded"),
        }
    }
}

/// An aborted integration, with everything sampled before the abort.
#[derive(Debug, thiserror::Error)]
#[error("integration failed at t = {time}: {kind}")]
pub struct IntegrationFailure {
    pub kind: FailureKind,
    pub time: f64,
    pub partial: Trajectory,
}

/// `points` equally spaced times covering `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t1],
        _ => (0..points)
            .map(|k| {
                if k + 1 == points {
                    t1
                } else {
                    t0 + (t1 - t0) * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

/// Integrates `sys` from `u0` over `t_span`, sampling at `t0` and at every
/// point of `output_grid` after `t0`. An empty grid samples `t0` and `t1`.
pub fn integrate(
    sys: &TruncatedSystem,
    u0: &StateVector,
    t_span: (f64, f64),
    cfg: &SolverConfig,
    output_grid: &[f64],
) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    cfg.validate()?;
    if u0.len() != sys.n() {
        return Err(Error::LengthMismatch {
            expected: sys.n(),
            found: u0.len(),
        });
    }
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::invalid(
            "t_span",
            format!("need finite t0 < t1, got ({t0}, {t1})"),
        ));
    }
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("initial", "initial state must be finite"));
    }
    if output_grid.iter().any(|&t| !(t >= t0 && t <= t1))
        || output_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::invalid(
            "output_grid",
            "grid must be strictly increasing and inside [t0, t1]",
        ));
    }
    let mut targets: Vec<f64> = output_grid.iter().copied().filter(|&t| t > t0).collect();
    if targets.is_empty() {
        targets.push(t1);
    }

    let mut traj = Trajectory::default();
    traj.record(sys, t0, u0);
    let outcome = match cfg.method {
        Method::ImplicitAdaptive => Esdirk::new(sys, cfg).run(u0, t0, &targets, &mut traj),
        Method::ExplicitReference => run_explicit(sys, cfg, u0, t0, &targets, &mut traj),
    };
    match outcome {
        Ok(()) => Ok(traj),
        Err((kind, time)) => Err(IntegrationFailure {
            kind,
            time,
            partial: traj,
        }
        .into()),
    }
}

type Abort = (FailureKind, f64);

/// One classical fourth-order Runge–Kutta step.
pub fn explicit_reference_step(
    sys: &TruncatedSystem,
    u: &StateVector,
    h: f64,
) -> Result<StateVector> {
    if u.len() != sys.n() {
        return Err(Error::LengthMismatch {
            expected: sys.n(),
            found: u.len(),
        });
    }
    let mut ws = Rk4Workspace::new(sys.n());
    let mut out = vec![0.0; sys.n()];
    ws.step(sys, u, h, &mut out);
    Ok(StateVector::new(out))
}

struct Rk4Workspace {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    fn new(n: usize) -> Self {
        Rk4Workspace {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, sys: &TruncatedSystem, u: &[f64], h: f64, out: &mut [f64]) {
        let n = u.len();
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        sys.rhs_into(u, k1);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * h * k1[i];
        }
        sys.rhs_into(tmp, k2);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * h * k2[i];
        }
        sys.rhs_into(tmp, k3);
        for i in 0..n {
            tmp[i] = u[i] + h * k3[i];
        }
        sys.rhs_into(tmp, k4);
        for i in 0..n {
            out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn run_explicit(
    sys: &TruncatedSystem,
    cfg: &SolverConfig,
    u0: &[f64],
    t0: f64,
    targets: &[f64],
    traj: &mut Trajectory,
) -> std::result::Result<(), Abort> {
    let mut ws = Rk4Workspace::new(sys.n());
    let mut u = u0.to_vec();
    let mut next = vec![0.0; sys.n()];
    let mut t = t0;
    for &target in targets {
        // uniform substeps no longer than h_init that land on the target
        let substeps = ((target - t) / cfg.h_init * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (target - t) / substeps as f64;
        for _ in 0..substeps {
            if traj.stats.steps >= cfg.max_steps {
                return Err((FailureKind::MaxSteps, t));
            }
            ws.step(sys, &u, h, &mut next);
            std::mem::swap(&mut u, &mut next);
            t += h;
            traj.stats.steps += 1;
            traj.stats.rhs_evals += 4;
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err((FailureKind::NonFinite, t));
        }
        t = target;
        traj.record(sys, t, &u);
    }
    Ok(())
}

const GAMMA: f64 = 2.0 - SQRT_2;
const DIAG: f64 = GAMMA / 2.0;
const W: f64 = SQRT_2 / 4.0;
// b - b̂ for the embedded third-order weights ((1-w)/3, (3w+1)/3, d/3)
const E1: f64 = W - (1.0 - W) / 3.0;
const E2: f64 = W - (3.0 * W + 1.0) / 3.0;
const E3: f64 = DIAG - DIAG / 3.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

enum Attempt {
    Done {
        y_new: DVector<f64>,
        k_new: DVector<f64>,
        err: f64,
        newton_iters: usize,
    },
    NewtonFailed,
    NonFinite,
}

struct Esdirk<'a> {
    sys: &'a TruncatedSystem,
    cfg: &'a SolverConfig,
    jac: DMatrix<f64>,
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    lu_h: f64,
    jac_fresh: bool,
    scratch: Vec<f64>,
}

impl<'a> Esdirk<'a> {
    fn new(sys: &'a TruncatedSystem, cfg: &'a SolverConfig) -> Self {
        let n = sys.n();
        Esdirk {
            sys,
            cfg,
            jac: DMatrix::zeros(n, n),
            lu: None,
            lu_h: 0.0,
            jac_fresh: false,
            scratch: vec![0.0; n],
        }
    }

    fn f(&mut self, y: &DVector<f64>, stats: &mut StepStats) -> DVector<f64> {
        stats.rhs_evals += 1;
        self.sys.rhs_into(y.as_slice(), &mut self.scratch);
        DVector::from_column_slice(&self.scratch)
    }

    fn refresh_jacobian(&mut self, y: &DVector<f64>, stats: &mut StepStats) {
        self.sys.jacobian_into(y.as_slice(), &mut self.jac);
        self.jac_fresh = true;
        self.lu = None;
        stats.jacobian_evals += 1;
    }

    fn factor(&mut self, h: f64, stats: &mut StepStats) {
        let n = self.sys.n();
        let m = DMatrix::identity(n, n) - &self.jac * (h * DIAG);
        self.lu = Some(m.lu());
        self.lu_h = h;
        stats.lu_decompositions += 1;
    }

    fn solve(&self, rhs: &mut DVector<f64>) -> bool {
        self.lu.as_ref().is_some_and(|lu| lu.solve_mut(rhs))
    }

    fn weighted_max(
        &self,
        v: &DVector<f64>,
        scale_a: &DVector<f64>,
        scale_b: &DVector<f64>,
    ) -> f64 {
        let (atol, rtol) = (self.cfg.atol, self.cfg.rtol);
        v.iter()
            .zip(scale_a.iter().zip(scale_b.iter()))
            .map(|(x, (a, b))| x.abs() / (atol + rtol * a.abs().max(b.abs())))
            .fold(0.0, f64::max)
    }

    /// Solves `z - h·DIAG·f(z) = rhs` in place by simplified Newton.
    fn newton(
        &mut self,
        z: &mut DVector<f64>,
        rhs: &DVector<f64>,
        h: f64,
        stats: &mut StepStats,
    ) -> std::result::Result<usize, bool> {
        let tol = self.cfg.newton_tol;
        let mut prev = f64::INFINITY;
        for it in 1..=self.cfg.newton_max_iters {
            stats.newton_iterations += 1;
            let fz = self.f(z, stats);
            let mut delta = rhs - &*z + fz * (h * DIAG);
            if !self.solve(&mut delta) {
                return Err(false);
            }
            *z += &delta;
            if z.iter().any(|x| !x.is_finite()) {
                return Err(true);
            }
            let norm = self.weighted_max(&delta, z, z);
            if norm <= tol {
                return Ok(it);
            }
            if it > 1 {
                let rate = norm / prev;
                if rate >= 1.0 {
                    return Err(false);
                }
                if rate / (1.0 - rate) * norm <= tol {
                    return Ok(it);
                }
            }
            prev = norm;
        }
        Err(false)
    }

    fn attempt(
        &mut self,
        y: &DVector<f64>,
        k1: &DVector<f64>,
        h: f64,
        stats: &mut StepStats,
    ) -> Attempt {
        let hd = h * DIAG;
        // trapezoidal stage to t + γh
        let rhs2 = y + k1 * hd;
        let mut z2 = y + k1 * (h * GAMMA);
        let it2 = match self.newton(&mut z2, &rhs2, h, stats) {
            Ok(it) => it,
            Err(true) => return Attempt::NonFinite,
            Err(false) => return Attempt::NewtonFailed,
        };
        let k2 = (&z2 - &rhs2) / hd;
        // BDF2 stage to t + h
        let rhs3 = y + (k1 + &k2) * (h * W);
        let mut z3 = &rhs3 + &k2 * hd;
        let it3 = match self.newton(&mut z3, &rhs3, h, stats) {
            Ok(it) => it,
            Err(true) => return Attempt::NonFinite,
            Err(false) => return Attempt::NewtonFailed,
        };
        let k3 = (&z3 - &rhs3) / hd;
        let mut err = (k1 * E1 + &k2 * E2 + &k3 * E3) * h;
        if !self.solve(&mut err) {
            return Attempt::NewtonFailed;
        }
        let err = self.weighted_max(&err, y, &z3);
        let k_new = self.f(&z3, stats);
        if !err.is_finite() || k_new.iter().any(|x| !x.is_finite()) {
            return Attempt::NonFinite;
        }
        Attempt::Done {
            y_new: z3,
            k_new,
            err,
            newton_iters: it2.max(it3),
        }
    }

    fn run(
        mut self,
        u0: &[f64],
        t0: f64,
        targets: &[f64],
        traj: &mut Trajectory,
    ) -> std::result::Result<(), Abort> {
        let cfg = self.cfg;
        let mut stats = StepStats::default();
        let mut y = DVector::from_column_slice(u0);
        let mut k1 = self.f(&y, &mut stats);
        let mut t = t0;
        let mut h = cfg.h_init;
        self.refresh_jacobian(&y, &mut stats);

        let result = (|| {
            for &target in targets {
                let mut rejected_since_accept = false;
                while t < target {
                    if stats.steps + stats.rejected() >= cfg.max_steps {
                        return Err((FailureKind::MaxSteps, t));
                    }
                    let remaining = target - t;
                    let clipped = h * 1.01 >= remaining;
                    let h_step = if clipped { remaining } else { h };
                    if self.lu.is_none() || !(0.5..=2.0).contains(&(h_step / self.lu_h)) {
                        self.factor(h_step, &mut stats);
                    }
                    match self.attempt(&y, &k1, h_step, &mut stats) {
                        Attempt::NonFinite => return Err((FailureKind::NonFinite, t)),
                        Attempt::NewtonFailed => {
                            stats.newton_failures += 1;
                            if !self.jac_fresh {
                                self.refresh_jacobian(&y, &mut stats);
                            } else {
                                h = h_step * 0.25;
                                rejected_since_accept = true;
                                if h < cfg.h_min {
                                    return Err((FailureKind::NewtonFailure, t));
                                }
                            }
                        }
                        Attempt::Done {
                            y_new,
                            k_new,
                            err,
                            newton_iters,
                        } => {
                            if y_new.iter().any(|&x| x < -cfg.atol) {
                                stats.rejected_negative += 1;
                                rejected_since_accept = true;
                                h = h_step * 0.5;
                                if h < cfg.h_min {
                                    return Err((FailureKind::StepSizeUnderflow { h }, t));
                                }
                                continue;
                            }
                            let fac = SAFETY * err.max(1e-10).powf(-1.0 / 3.0);
                            if err > 1.0 {
                                stats.rejected_error += 1;
                                rejected_since_accept = true;
                                h = h_step * fac.max(FAC_MIN);
                                if h < cfg.h_min {
                                    return Err((FailureKind::StepSizeUnderflow { h }, t));
                                }
                                continue;
                            }
                            stats.steps += 1;
                            t = if clipped { target } else { t + h_step };
                            y = y_new;
                            k1 = k_new;
                            self.jac_fresh = false;
                            let cap = if rejected_since_accept { 1.0 } else { FAC_MAX };
                            rejected_since_accept = false;
                            let proposed = h_step * fac.clamp(FAC_MIN, cap);
                            h = if clipped { proposed.max(h) } else { proposed };
                            h = h.min(cfg.h_max);
                            if newton_iters > cfg.newton_max_iters / 2 {
                                self.refresh_jacobian(&y, &mut stats);
                            }
                        }
                    }
                }
                traj.record(self.sys, target, y.as_slice());
            }
            Ok(())
        })();
        debug!("esdirk finished: {stats:?}");
        traj.stats = stats;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CoagulationKernel, FragmentationKernel, RateLaws};

    fn decay_system(n: usize) -> TruncatedSystem {
        TruncatedSystem::new(
            n,
            FragmentationKernel::Binary,
            CoagulationKernel::BrownianLike { k1: 0.0 },
            RateLaws {
                s: 1.0,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            h_init: 1.0,
            h_max: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            newton_max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scalar_decay_matches_closed_form() {
        // one retained size behaves exactly like u' = -u
        let sys = decay_system(2);
        let cfg = SolverConfig {
            rtol: 1e-4,
            atol: 1e-8,
            ..Default::default()
        };
        let u0 = StateVector::new(vec![3.0, 0.0]);
        let traj = integrate(&sys, &u0, (0.0, 1.0), &cfg, &uniform_grid(0.0, 1.0, 11)).unwrap();
        let exact = 3.0 * (-1.0f64).exp();
        let got = traj.last_state().unwrap()[0];
        assert!(
            (got - exact).abs() <= 10.0 * cfg.rtol * exact,
            "{got} vs {exact}"
        );
        assert_eq!(traj.times.len(), 11);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = TruncatedSystem::new(
            10,
            FragmentationKernel::Binary,
            CoagulationKernel::BrownianLike { k1: 5e-3 },
            RateLaws {
                a: 1.0,
                frag_exp: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        for cfg in [
            SolverConfig::default(),
            SolverConfig::explicit_reference(1e-3),
        ] {
            let traj = integrate(
                &sys,
                &StateVector::zeros(10),
                (0.0, 1.0),
                &cfg,
                &uniform_grid(0.0, 1.0, 5),
            )
            .unwrap();
            assert!(traj.states.iter().all(|s| s.iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn rk4_step_consistency() {
        let sys = TruncatedSystem::new(
            6,
            FragmentationKernel::Binary,
            CoagulationKernel::BrownianLike { k1: 0.1 },
            RateLaws {
                a: 1.0,
                frag_exp: 1.0,
                g: 0.5,
                growth_exp: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let u = StateVector::new(vec![1.0, 0.5, 0.25, 2.0, 0.0, 0.1]);
        let h = 1e-8;
        let next = explicit_reference_step(&sys, &u, h).unwrap();
        let f = sys.rhs(&u).unwrap();
        for i in 0..6 {
            let fd = (next[i] - u[i]) / h;
            assert!(
                (fd - f[i]).abs() <= 1e-5 * f[i].abs().max(1e-3),
                "{i}: {fd} vs {}",
                f[i]
            );
        }
        let z = explicit_reference_step(&sys, &StateVector::zeros(6), 0.1).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rk4_local_error_order_five() {
        let sys = decay_system(2);
        let u = StateVector::new(vec![1.0, 0.0]);
        let err = |h: f64| {
            let v = explicit_reference_step(&sys, &u, h).unwrap()[0];
            (v - (-h).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 32.0).abs() <= 0.2 * 32.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let sys = decay_system(3);
        let cfg = SolverConfig::default();
        let u0 = StateVector::new(vec![1.0, 0.0, 0.0]);
        assert!(integrate(&sys, &u0, (1.0, 0.0), &cfg, &[]).is_err());
        assert!(integrate(&sys, &u0, (0.0, 1.0), &cfg, &[0.5, 2.0]).is_err());
        assert!(integrate(&sys, &u0, (0.0, 1.0), &cfg, &[0.5, 0.25]).is_err());
        assert!(integrate(&sys, &StateVector::zeros(2), (0.0, 1.0), &cfg, &[]).is_err());
        let nan = StateVector::new(vec![f64::NAN, 0.0, 0.0]);
        assert!(integrate(&sys, &nan, (0.0, 1.0), &cfg, &[]).is_err());
    }

    #[test]
    fn underflow_returns_partial_trajectory() {
        let sys = decay_system(3);
        let cfg = SolverConfig {
            max_steps: 3,
            ..Default::default()
        };
        let u0 = StateVector::new(vec![1.0, 1.0, 1.0]);
        match integrate(&sys, &u0, (0.0, 1.0), &cfg, &uniform_grid(0.0, 1.0, 3)) {
            Err(Error::Integration(f)) => {
                assert_eq!(f.kind, FailureKind::MaxSteps);
                assert_eq!(f.partial.times, vec![0.0]);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(0.0, 1.0, 101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
