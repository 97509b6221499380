//! Moment defects, weighted norms and the coefficient hypotheses behind
//! global well-posedness.
//!
//! The hypotheses are asymptotic statements about `i -> ∞`. Each one is
//! checked two ways: by sampling the relevant quantity on `2..=i_max`, and, for
//! the power-law rates used here, by a closed-form limit computed from the
//! exponents. Both are reported; a check passes only when they agree.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{Error, Result};
use crate::kernels::{CoagulationKernel, FragmentationKernel, RateLaws};

/// Order `p` and interpolation weight of `‖u‖_{p,α} = Σ i^p (1 + θ_i)^α |u_i|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: f64,
    /// `α` in `[0, 1)`; zero gives the plain moment `Σ i^p |u_i|`.
    pub weight_exp: f64,
}

impl NormSpec {
    pub fn new(p: f64, weight_exp: f64) -> Result<Self> {
        let spec = NormSpec { p, weight_exp };
        spec.validate()?;
        Ok(spec)
    }

    pub fn moment(p: f64) -> Self {
        NormSpec { p, weight_exp: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::invalid(
                "norm.p",
                format!("must be >= 0, got {}", self.p),
            ));
        }
        if !(self.weight_exp >= 0.0 && self.weight_exp < 1.0) {
            return Err(Error::invalid(
                "norm.weight_exp",
                format!("must lie in [0, 1), got {}", self.weight_exp),
            ));
        }
        Ok(())
    }
}

/// `Δ_i^{(p)} = i^p - Σ_{j<i} j^p b_{j,i}`.
pub fn delta_p(frag: &FragmentationKernel, i: usize, p: f64) -> Result<f64> {
    if i < 2 {
        return Err(Error::invalid(
            "i",
            format!("moment defect needs i >= 2, got {i}"),
        ));
    }
    let sum: f64 = frag
        .column(i)
        .iter()
        .enumerate()
        .map(|(idx, b)| ((idx + 1) as f64).powf(p) * b)
        .sum();
    Ok((i as f64).powf(p) - sum)
}

/// `φ_i(p) = Δ_i^{(p)} / i^p`, which lies in `(0, 1)` for `p > 1`.
pub fn phi(frag: &FragmentationKernel, i: usize, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::invalid(
            "p",
            format!("φ is defined for p > 1, got {p}"),
        ));
    }
    Ok(delta_p(frag, i, p)? / (i as f64).powf(p))
}

/// Limit of `φ_i(p)` as `i -> ∞`: `1 - B(p+σ+1, σ+1) / B(σ+2, σ+1)`.
pub fn phi_limit(frag: &FragmentationKernel, p: f64) -> f64 {
    let s = frag.sigma();
    1.0 - beta(p + s + 1.0, s + 1.0) / beta(s + 2.0, s + 1.0)
}

/// `Σ_i i^p (1 + θ_i)^{weight_exp} |u_i|` over `u_1..=u_{len}`.
pub fn weighted_norm(u: &[f64], spec: &NormSpec, laws: &RateLaws) -> f64 {
    u.iter()
        .enumerate()
        .map(|(idx, x)| {
            let i = idx + 1;
            let w = if spec.weight_exp == 0.0 {
                1.0
            } else {
                (1.0 + laws.theta(i)).powf(spec.weight_exp)
            };
            (i as f64).powf(spec.p) * w * x.abs()
        })
        .sum()
}

/// The four diagnostic moments `‖u‖_0..‖u‖_3`.
pub fn moments(u: &[f64], laws: &RateLaws) -> [f64; 4] {
    [0.0, 1.0, 2.0, 3.0].map(|p| weighted_norm(u, &NormSpec::moment(p), laws))
}

/// Evidence for one liminf-type hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub pass: bool,
    /// Whether the exponent inequality holds.
    pub exponents_ok: bool,
    /// Minimum of the sampled quantity over `2..=i_max`.
    pub sampled_min: f64,
    /// Minimum over the upper half `i_max/2..=i_max`, the finite proxy for the liminf.
    pub sampled_tail_min: f64,
    /// Closed-form `i -> ∞` limit from the power-law exponents.
    pub asymptotic_limit: f64,
}

/// Growth bound `k_{i,j} <= κ ((1+θ_i)^α + (1+θ_j)^α)` on the coagulation kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoagulationBound {
    pub feasible: bool,
    pub kernel_degree: f64,
    pub theta_degree: Option<f64>,
    /// Smallest admissible `α`; `None` when infeasible.
    pub min_weight_exp: Option<f64>,
    /// Sampled `κ` witnessing the bound at `min_weight_exp`.
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p: f64,
    pub i_max: usize,
    /// Fragmentation dominance, required for `p > 1`.
    pub frag_dominance: DominanceCheck,
    /// Sedimentation dominance, which covers `p = 1`.
    pub sed_dominance: DominanceCheck,
    pub coag_bound: CoagulationBound,
    /// `sup_i ((g_i - d_i)/i - s_i)` over all sizes; `None` if unbounded.
    pub omega1: Option<f64>,
    /// The same supremum restricted to `1..=i_max`.
    pub omega1_sampled: f64,
    pub messages: Vec<String>,
}

impl ConditionReport {
    /// Whether the hypotheses for order `p` hold: fragmentation dominance for
    /// `p > 1`, sedimentation dominance for `p = 1`, plus a feasible
    /// coagulation bound.
    pub fn well_posed(&self) -> bool {
        let linear = if self.p > 1.0 {
            self.frag_dominance.pass
        } else {
            self.sed_dominance.pass
        };
        linear && self.coag_bound.feasible
    }

    /// Growth rate for the total-mass estimate of a system truncated at
    /// `i_max`: `omega1` when finite, else the sampled supremum (which is exact
    /// for sizes up to `i_max`).
    pub fn omega1_truncated(&self) -> f64 {
        self.omega1.unwrap_or(self.omega1_sampled)
    }
}

/// Limit of `Σ_k c_k i^{e_k}` as `i -> ∞`, given as `(leading exponent, coefficient)`
/// after merging equal exponents. `None` when every coefficient vanishes.
fn leading_term(terms: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(e, c) in terms {
        if c == 0.0 {
            continue;
        }
        match merged.iter_mut().find(|(e2, _)| *e2 == e) {
            Some(slot) => slot.1 += c,
            None => merged.push((e, c)),
        }
    }
    merged
        .into_iter()
        .filter(|&(_, c)| c != 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
}

/// Limit of `numerator / θ_i`, both sums of power laws.
fn ratio_limit(numerator: &[(f64, f64)], laws: &RateLaws) -> f64 {
    let theta = [
        (laws.frag_exp, laws.a),
        (laws.growth_exp, laws.g),
        (laws.decay_exp, laws.d),
        (laws.sed_exp, laws.s),
    ];
    let Some((ed, cd)) = leading_term(&theta) else {
        return 0.0;
    };
    match leading_term(numerator) {
        None => 0.0,
        Some((en, cn)) if en == ed => cn / cd,
        Some((en, cn)) if en > ed => cn.signum() * f64::INFINITY,
        Some(_) => 0.0,
    }
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sample_dominance<F: Fn(usize) -> f64>(f: F, i_max: usize) -> (f64, f64) {
    let mut min_all = f64::INFINITY;
    let mut min_tail = f64::INFINITY;
    for i in 2..=i_max {
        let v = f(i);
        min_all = min_all.min(v);
        if i >= i_max / 2 {
            min_tail = min_tail.min(v);
        }
    }
    (min_all, min_tail)
}

fn omega_term(laws: &RateLaws, i: usize) -> f64 {
    (laws.growth(i) - laws.decay(i)) / i as f64 - laws.sedimentation(i)
}

/// Sizes at which `κ` is sampled: everything up to 200, then geometric.
fn kappa_sample_sizes(i_max: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = (1..=i_max.min(200)).collect();
    let mut x = 200.0f64;
    while (x as usize) < i_max {
        x *= 1.05;
        let i = (x as usize).min(i_max);
        if sizes.last() != Some(&i) {
            sizes.push(i);
        }
    }
    sizes
}

/// Checks every coefficient hypothesis for moment order `p`, sampling up to
/// `i_max`.
pub fn check_conditions(
    frag: &FragmentationKernel,
    coag: &CoagulationKernel,
    laws: &RateLaws,
    p: f64,
    i_max: usize,
) -> Result<ConditionReport> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(
            "p",
            format!("moment order must be >= 1, got {p}"),
        ));
    }
    if i_max < 100 {
        return Err(Error::invalid(
            "i_max",
            format!("must be >= 100, got {i_max}"),
        ));
    }
    frag.validate()?;
    coag.validate()?;
    laws.validate()?;
    let mut messages = Vec::new();

    // fragmentation dominance: liminf (a_i/θ_i) φ_i(p) > 0
    let frag_exps_ok = laws.growth_exp.max(laws.decay_exp).max(laws.sed_exp) <= laws.frag_exp;
    let frag_dominance = if p > 1.0 {
        let (min_all, min_tail) = sample_dominance(
            |i| safe_ratio(laws.fragmentation(i), laws.theta(i)) * phi(frag, i, p).unwrap_or(0.0),
            i_max,
        );
        let limit = ratio_limit(&[(laws.frag_exp, laws.a)], laws) * phi_limit(frag, p);
        let pass = frag_exps_ok && limit > 0.0 && min_tail > 0.0;
        if !frag_exps_ok {
            messages.push(format!(
                "fragmentation dominance fails: max(growth_exp, decay_exp, sed_exp) = {} exceeds frag_exp = {}",
                laws.growth_exp.max(laws.decay_exp).max(laws.sed_exp),
                laws.frag_exp
            ));
        } else if !pass {
            messages.push(format!(
                "fragmentation dominance fails: (a_i/θ_i)·φ_i({p}) tends to {limit}, sampled tail minimum {min_tail}"
            ));
        }
        DominanceCheck {
            pass,
            exponents_ok: frag_exps_ok,
            sampled_min: min_all,
            sampled_tail_min: min_tail,
            asymptotic_limit: limit,
        }
    } else {
        messages.push("fragmentation dominance only applies to p > 1".to_string());
        DominanceCheck {
            pass: false,
            exponents_ok: frag_exps_ok,
            sampled_min: 0.0,
            sampled_tail_min: 0.0,
            asymptotic_limit: 0.0,
        }
    };

    // sedimentation dominance: liminf (s_i + (d_i - g_i)/i)/θ_i > 0
    let sed_exps_ok = laws.decay_exp.max(laws.frag_exp) <= laws.sed_exp;
    let (min_all, min_tail) = sample_dominance(
        |i| {
            let num = laws.sedimentation(i) + (laws.decay(i) - laws.growth(i)) / i as f64;
            safe_ratio(num, laws.theta(i))
        },
        i_max,
    );
    let sed_limit = ratio_limit(
        &[
            (laws.sed_exp, laws.s),
            (laws.decay_exp - 1.0, laws.d),
            (laws.growth_exp - 1.0, -laws.g),
        ],
        laws,
    );
    let sed_pass = sed_exps_ok && sed_limit > 0.0 && min_tail > 0.0;
    if p == 1.0 && !sed_pass {
        messages.push(format!(
            "sedimentation dominance fails: exponent condition {sed_exps_ok}, limit {sed_limit}, sampled tail minimum {min_tail}"
        ));
    }
    let sed_dominance = DominanceCheck {
        pass: sed_pass,
        exponents_ok: sed_exps_ok,
        sampled_min: min_all,
        sampled_tail_min: min_tail,
        asymptotic_limit: sed_limit,
    };

    let coag_bound = coagulation_bound(coag, laws, i_max);
    if !coag_bound.feasible {
        messages.push(format!(
            "coagulation bound infeasible: kernel degree {} vs θ degree {:?}",
            coag_bound.kernel_degree, coag_bound.theta_degree
        ));
    }

    // ω₁: sampled sup on 1..=i_max, then decide whether the tail can exceed it
    let mut omega1_sampled = f64::NEG_INFINITY;
    for i in 1..=i_max {
        omega1_sampled = omega1_sampled.max(omega_term(laws, i));
    }
    let tail = leading_term(&[
        (laws.growth_exp - 1.0, laws.g),
        (laws.decay_exp - 1.0, -laws.d),
        (laws.sed_exp, -laws.s),
    ]);
    let omega1 = match tail {
        Some((e, c)) if e > 0.0 && c > 0.0 => None,
        _ => {
            let limit = match tail {
                Some((0.0, c)) => c,
                Some((e, _)) if e > 0.0 => f64::NEG_INFINITY,
                _ => 0.0,
            };
            // power-law sums can have one interior extremum past i_max
            let mut sup = omega1_sampled.max(limit);
            let mut x = i_max as f64;
            while x < 1e15 {
                x *= 1.1;
                sup = sup.max(omega_term(laws, x as usize));
            }
            Some(sup)
        }
    };
    if omega1.is_none() {
        messages.push(format!(
            "ω₁ is unbounded: (g_i - d_i)/i - s_i grows without bound; the truncated bound {omega1_sampled} holds only up to size {i_max}"
        ));
    }

    Ok(ConditionReport {
        p,
        i_max,
        frag_dominance,
        sed_dominance,
        coag_bound,
        omega1,
        omega1_sampled,
        messages,
    })
}

fn coagulation_bound(coag: &CoagulationKernel, laws: &RateLaws, i_max: usize) -> CoagulationBound {
    let kernel_degree = coag.degree();
    let theta_degree = laws.theta_degree();
    let min_weight_exp = if coag.is_zero() {
        Some(0.0)
    } else {
        match theta_degree {
            Some(t) if t > 0.0 && kernel_degree / t < 1.0 => Some(kernel_degree / t),
            _ => None,
        }
    };
    let kappa = min_weight_exp.map(|alpha| {
        let sizes = kappa_sample_sizes(i_max);
        let weights: Vec<f64> = sizes
            .iter()
            .map(|&i| (1.0 + laws.theta(i)).powf(alpha))
            .collect();
        let mut kappa = 0.0f64;
        for (a, &i) in sizes.iter().enumerate() {
            for (b, &j) in sizes.iter().enumerate().skip(a) {
                kappa = kappa.max(coag.rate(i, j) / (weights[a] + weights[b]));
            }
        }
        kappa
    });
    CoagulationBound {
        feasible: min_weight_exp.is_some(),
        kernel_degree,
        theta_degree,
        min_weight_exp,
        kappa,
    }
}
