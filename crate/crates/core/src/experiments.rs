//! Scenario configuration, the six built-in examples, persisted runs and
//! truncation-convergence studies.
//!
//! A run directory contains
//!
//! * `trajectory.csv`: header `t,u_1,...,u_N`, one row per output time;
//! * `moments.csv`: header `t,m0,m1,m2,m3,mass_flux,growth_leakage`;
//! * `report.json`: a [`RunReport`].
//!
//! A convergence study writes `convergence.csv` with header
//! `N,error,empirical_order` (the order is empty on the first row).
//!
//! All numbers are written with 17 significant digits so that files
//! round-trip to the same `f64` values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{check_conditions, weighted_norm, ConditionReport, NormSpec};
use crate::error::{Error, Result};
use crate::integrator::{integrate, uniform_grid, SolverConfig, StepStats, Trajectory};
use crate::kernels::{CoagulationKernel, FragmentationKernel, RateLaws};
use crate::model::{StateVector, TruncatedSystem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    /// Truncation size `N`.
    pub n: usize,
    pub laws: RateLaws,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSection {
    pub fragmentation: FragmentationKernel,
    pub coagulation: CoagulationKernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `value` on sizes `lo..=hi`.
    Block { lo: usize, hi: usize, value: f64 },
    /// Densities for sizes `1..=values.len()`, zero beyond.
    Explicit { values: Vec<f64> },
}

impl InitialCondition {
    /// Largest size carrying non-zero density.
    pub fn support(&self) -> usize {
        match self {
            InitialCondition::Block { hi, value, .. } => {
                if *value == 0.0 {
                    0
                } else {
                    *hi
                }
            }
            InitialCondition::Explicit { values } => {
                values.iter().rposition(|&v| v != 0.0).map_or(0, |p| p + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub name: String,
    pub t_end: f64,
    pub output_grid_points: usize,
}

/// A complete simulation setup, serialised as a JSON document with sections
/// `model`, `kernels`, `initial`, `solver`, `norm` and `run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub kernels: KernelSection,
    pub initial: InitialCondition,
    #[serde(default)]
    pub solver: SolverConfig,
    pub norm: NormSpec,
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.n;
        if n < 2 {
            return Err(Error::invalid("model.n", format!("must be >= 2, got {n}")));
        }
        self.model.laws.validate()?;
        self.kernels.fragmentation.validate()?;
        self.kernels.coagulation.validate()?;
        self.solver.validate()?;
        self.norm.validate()?;
        match &self.initial {
            InitialCondition::Block { lo, hi, value } => {
                if !(1 <= *lo && lo <= hi && *hi <= n) {
                    return Err(Error::invalid(
                        "initial",
                        format!("block needs 1 <= lo <= hi <= N = {n}, got lo = {lo}, hi = {hi}"),
                    ));
                }
                if !value.is_finite() {
                    return Err(Error::invalid("initial.value", "must be finite"));
                }
            }
            InitialCondition::Explicit { values } => {
                if values.len() > n {
                    return Err(Error::invalid(
                        "initial.values",
                        format!("{} entries exceed N = {n}", values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("initial.values", "entries must be finite"));
                }
            }
        }
        if !(self.run.t_end.is_finite() && self.run.t_end > 0.0) {
            return Err(Error::invalid(
                "run.t_end",
                format!("must be > 0, got {}", self.run.t_end),
            ));
        }
        if self.run.output_grid_points < 2 {
            return Err(Error::invalid("run.output_grid_points", "must be >= 2"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<TruncatedSystem> {
        TruncatedSystem::new(
            self.model.n,
            self.kernels.fragmentation,
            self.kernels.coagulation,
            self.model.laws,
        )
    }

    pub fn initial_state(&self) -> StateVector {
        let n = self.model.n;
        match &self.initial {
            InitialCondition::Block { lo, hi, value } => StateVector::block(n, *lo, *hi, *value),
            InitialCondition::Explicit { values } => StateVector::new(values.clone()).embed(n),
        }
    }

    pub fn output_grid(&self) -> Vec<f64> {
        uniform_grid(0.0, self.run.t_end, self.run.output_grid_points)
    }

    /// The same scenario truncated at a different size.
    pub fn with_size(&self, n: usize) -> ScenarioConfig {
        let mut cfg = self.clone();
        cfg.model.n = n;
        if let InitialCondition::Explicit { values } = &mut cfg.initial {
            values.truncate(n);
        }
        cfg
    }

    /// Condition report for this scenario's laws and kernels at `norm.p`
    /// (raised to 1 if smaller), sampled up to `max(N, 100)`.
    pub fn conditions(&self) -> Result<ConditionReport> {
        check_conditions(
            &self.kernels.fragmentation,
            &self.kernels.coagulation,
            &self.model.laws,
            self.norm.p.max(1.0),
            self.model.n.max(100),
        )
    }

    pub fn integrate(&self) -> Result<Trajectory> {
        self.validate()?;
        let sys = self.system()?;
        integrate(
            &sys,
            &self.initial_state(),
            (0.0, self.run.t_end),
            &self.solver,
            &self.output_grid(),
        )
    }
}

/// The six reference scenarios: `1`–`2` pure coagulation–fragmentation,
/// `3`–`4` with growth, decay and sedimentation, `5`–`6` without growth.
/// Odd ids use the binary/Brownian-like kernel pair, even ids the
/// power-law/product pair.
pub fn builtin_example(id: u32) -> Result<ScenarioConfig> {
    let binary_brownian = KernelSection {
        fragmentation: FragmentationKernel::Binary,
        coagulation: CoagulationKernel::BrownianLike { k1: 5e-3 },
    };
    let powerlaw_product = KernelSection {
        fragmentation: FragmentationKernel::Powerlaw { sigma: 0.1 },
        coagulation: CoagulationKernel::Product { k2: 5e-3, k3: 1.0 },
    };
    let pure = RateLaws {
        a: 1.0,
        frag_exp: 1.0,
        ..Default::default()
    };
    let transport = RateLaws {
        g: 1.0,
        growth_exp: 1.0,
        d: 1.0,
        decay_exp: 0.0,
        s: 1.0,
        sed_exp: 0.0,
        a: 1.0,
        frag_exp: 1.0,
    };
    let no_growth = RateLaws {
        g: 0.0,
        growth_exp: 0.0,
        d: 1.0,
        decay_exp: 0.0,
        s: 1.0,
        sed_exp: 1.0,
        a: 1.0,
        frag_exp: 1.0,
    };
    let (laws, kernels, p) = match id {
        1 => (pure, binary_brownian, 2.0),
        2 => (
            RateLaws {
                frag_exp: 2.5,
                ..pure
            },
            powerlaw_product,
            2.0,
        ),
        3 => (transport, binary_brownian, 2.0),
        4 => (
            RateLaws {
                growth_exp: 2.5,
                frag_exp: 2.5,
                ..transport
            },
            powerlaw_product,
            2.0,
        ),
        5 => (no_growth, binary_brownian, 1.0),
        6 => (
            RateLaws {
                sed_exp: 2.5,
                frag_exp: 2.5,
                ..no_growth
            },
            powerlaw_product,
            1.0,
        ),
        _ => {
            return Err(Error::invalid(
                "example",
                format!("id must be in 1..=6, got {id}"),
            ));
        }
    };
    Ok(ScenarioConfig {
        model: ModelSection { n: 200, laws },
        kernels,
        initial: InitialCondition::Block {
            lo: 5,
            hi: 20,
            value: 10.0,
        },
        solver: SolverConfig::default(),
        norm: NormSpec::moment(p),
        run: RunSection {
            name: format!("example-{id}"),
            t_end: 1.0,
            output_grid_points: 101,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub samples: usize,
    pub final_time: f64,
    pub min_component: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub max_abs_mass_flux: f64,
    pub max_growth_leakage: f64,
}

impl RunDiagnostics {
    fn from_trajectory(traj: &Trajectory) -> Self {
        let mass = traj.mass();
        RunDiagnostics {
            samples: traj.len(),
            final_time: traj.times.last().copied().unwrap_or(0.0),
            min_component: traj.min_component(),
            initial_mass: mass.first().copied().unwrap_or(0.0),
            final_mass: mass.last().copied().unwrap_or(0.0),
            max_abs_mass_flux: traj
                .diagnostics
                .iter()
                .map(|d| d.mass_flux.abs())
                .fold(0.0, f64::max),
            max_growth_leakage: traj
                .diagnostics
                .iter()
                .map(|d| d.growth_leakage)
                .fold(0.0, f64::max),
        }
    }
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub conditions: ConditionReport,
    pub status: RunStatus,
    /// True when the trajectory stops before `t_end`.
    pub partial: bool,
    pub error: Option<String>,
    pub solver_stats: StepStats,
    pub wall_time_seconds: f64,
    pub diagnostics: RunDiagnostics,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let n = traj.states.first().map_or(0, |s| s.len());
    let io = |e| Error::io(path, e);
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",u_{i}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let mut line = num(*t);
        for x in u.iter() {
            line.push(',');
            line.push_str(&num(*x));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_moments_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "t,m0,m1,m2,m3,mass_flux,growth_leakage").map_err(io)?;
    for ((t, m), d) in traj.times.iter().zip(&traj.moments).zip(&traj.diagnostics) {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(*t),
            num(m[0]),
            num(m[1]),
            num(m[2]),
            num(m[3]),
            num(d.mass_flux),
            num(d.growth_leakage)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Checks conditions, integrates and writes the three run files into
/// `out_dir`. A failed condition check is logged, not fatal. If integration
/// aborts, the partial trajectory is still written and the report is marked
/// `partial` before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Trajectory> {
    cfg.validate()?;
    let conditions = cfg.conditions()?;
    if !conditions.well_posed() {
        warn!(
            "{}: well-posedness hypotheses not met: {}",
            cfg.run.name,
            conditions.messages.join("; ")
        );
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let start = Instant::now();
    let outcome = cfg.integrate();
    let wall = start.elapsed().as_secs_f64();

    let (traj, err) = match outcome {
        Ok(traj) => (traj, None),
        Err(Error::Integration(failure)) => {
            let traj = failure.partial.clone();
            (traj, Some(Error::Integration(failure)))
        }
        Err(e) => return Err(e),
    };
    write_trajectory_csv(&traj, &out_dir.join("trajectory.csv"))?;
    write_moments_csv(&traj, &out_dir.join("moments.csv"))?;
    let report = RunReport {
        config: cfg.clone(),
        conditions,
        status: if err.is_none() {
            RunStatus::Completed
        } else {
            RunStatus::Failed
        },
        partial: err.is_some(),
        error: err.as_ref().map(|e| e.to_string()),
        solver_stats: traj.stats,
        wall_time_seconds: wall,
        diagnostics: RunDiagnostics::from_trajectory(&traj),
    };
    write_json(&report, &out_dir.join("report.json"))?;
    info!(
        "{}: {} steps, {} rejected, {:.2}s",
        cfg.run.name,
        traj.stats.steps,
        traj.stats.rejected(),
        wall
    );
    match err {
        None => Ok(traj),
        Some(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub sizes: Vec<usize>,
    pub reference_size: usize,
    pub norm: NormSpec,
    /// `max_t ‖embed(u^(N)) - u^(ref)‖_{p,α}` per size.
    pub errors: Vec<f64>,
    /// `log(e_{k-1}/e_k) / log(N_k/N_{k-1})`; `None` for the first size.
    pub empirical_orders: Vec<Option<f64>>,
}

impl ConvergenceResult {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "N,error,empirical_order").map_err(io)?;
        for ((n, e), o) in self
            .sizes
            .iter()
            .zip(&self.errors)
            .zip(&self.empirical_orders)
        {
            let order = o.map(num).unwrap_or_default();
            writeln!(w, "{n},{},{order}", num(*e)).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Self-convergence study: solves `base` truncated at every size in `sizes`
/// and at `reference_size` on the common output grid of `base`, then measures
/// the sup-in-time `‖·‖_{p,α}` distance between each zero-padded solution and
/// the reference. Runs execute on the current rayon pool.
pub fn convergence_study(
    base: &ScenarioConfig,
    sizes: &[usize],
    reference_size: usize,
    norm: &NormSpec,
) -> Result<ConvergenceResult> {
    norm.validate()?;
    if sizes.is_empty() {
        return Err(Error::invalid("sizes", "at least one size is required"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes", "sizes must be strictly increasing"));
    }
    if sizes[0] < 2 {
        return Err(Error::invalid("sizes", "sizes must be >= 2"));
    }
    if *sizes.last().unwrap() >= reference_size {
        return Err(Error::invalid(
            "ref",
            format!("reference size {reference_size} must exceed every study size"),
        ));
    }
    let support = base.initial.support();
    if support > sizes[0] {
        return Err(Error::invalid(
            "initial",
            format!(
                "initial data reaches size {support}, beyond the smallest study size {}",
                sizes[0]
            ),
        ));
    }

    let all: Vec<usize> = sizes.iter().copied().chain([reference_size]).collect();
    let runs: Vec<Trajectory> = all
        .par_iter()
        .map(|&n| base.with_size(n).integrate())
        .collect::<Result<_>>()?;
    let (reference, studies) = runs.split_last().unwrap();
    let laws = &base.model.laws;
    let errors: Vec<f64> = studies
        .iter()
        .map(|traj| {
            traj.states
                .iter()
                .zip(&reference.states)
                .map(|(u, r)| {
                    let diff: Vec<f64> = u
                        .embed(reference_size)
                        .iter()
                        .zip(r.iter())
                        .map(|(a, b)| a - b)
                        .collect();
                    weighted_norm(&diff, norm, laws)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let empirical_orders = (0..errors.len())
        .map(|k| {
            (k > 0).then(|| {
                (errors[k - 1] / errors[k]).ln() / (sizes[k] as f64 / sizes[k - 1] as f64).ln()
            })
        })
        .collect();
    Ok(ConvergenceResult {
        sizes: sizes.to_vec(),
        reference_size,
        norm: *norm,
        errors,
        empirical_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parameters() {
        assert_eq!(
            builtin_example(1).unwrap().kernels.coagulation,
            CoagulationKernel::BrownianLike { k1: 5e-3 }
        );
        assert_eq!(
            builtin_example(2).unwrap().kernels.fragmentation.sigma(),
            0.1
        );
        assert_eq!(builtin_example(5).unwrap().model.laws.g, 0.0);
        let ex4 = builtin_example(4).unwrap().model.laws;
        assert_eq!(
            (ex4.growth_exp, ex4.frag_exp, ex4.decay_exp, ex4.sed_exp),
            (2.5, 2.5, 0.0, 0.0)
        );
        let ex6 = builtin_example(6).unwrap().model.laws;
        assert_eq!(
            (ex6.g, ex6.sed_exp, ex6.frag_exp, ex6.decay_exp),
            (0.0, 2.5, 2.5, 0.0)
        );
        for id in 1..=6 {
            let cfg = builtin_example(id).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.model.n, 200);
            assert_eq!(cfg.run.t_end, 1.0);
        }
        assert!(builtin_example(0).is_err());
        assert!(builtin_example(7).is_err());
    }

    #[test]
    fn initial_block_mass() {
        let cfg = builtin_example(1).unwrap();
        let u = cfg.initial_state();
        let m1 = weighted_norm(&u, &NormSpec::moment(1.0), &cfg.model.laws);
        assert_eq!(m1, 2000.0);
        assert_eq!(cfg.initial.support(), 20);
    }

    #[test]
    fn config_json_round_trip() {
        for id in 1..=6 {
            let cfg = builtin_example(id).unwrap();
            let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn block_outside_truncation_rejected() {
        let mut cfg = builtin_example(1).unwrap();
        cfg.initial = InitialCondition::Block {
            lo: 5,
            hi: 300,
            value: 1.0,
        };
        assert!(cfg.validate().is_err());
        cfg.initial = InitialCondition::Block {
            lo: 0,
            hi: 3,
            value: 1.0,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn explicit_initial_padded() {
        let mut cfg = builtin_example(1).unwrap().with_size(6);
        cfg.initial = InitialCondition::Explicit {
            values: vec![1.0, 0.0, 2.0],
        };
        assert_eq!(
            cfg.initial_state().into_inner(),
            vec![1.0, 0.0, 2.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(cfg.initial.support(), 3);
    }

    #[test]
    fn convergence_preconditions() {
        let base = builtin_example(1).unwrap();
        let norm = NormSpec::new(1.5, 0.5).unwrap();
        // initial block reaches 20 > 10
        assert!(convergence_study(&base, &[10, 40], 80, &norm).is_err());
        assert!(convergence_study(&base, &[30], 30, &norm).is_err());
        assert!(convergence_study(&base, &[50, 40], 80, &norm).is_err());
        assert!(convergence_study(&base, &[], 80, &norm).is_err());
    }
}
