//! Fragmentation daughter distributions, coagulation kernels and power-law
//! transport rates.
//!
//! Every pointwise evaluation here has a table counterpart used by
//! [`TruncatedSystem`](crate::model::TruncatedSystem). Tables are filled by
//! calling the same pointwise code, so a table entry and the corresponding
//! pointwise value are bit-identical.
//!
//! The power-law normaliser is a direct sum of `j - 1` terms. Sizes up to
//! `10^4` are supported; beyond that `i^(1 + sigma)` products start to lose
//! digits for large `sigma` and the sum becomes the dominant cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// Largest truncation size the kernels are meant to be evaluated at.
pub const MAX_SIZE: usize = 10_000;

/// Daughter distribution `b_{i,j}`: the mean number of `i`-clusters produced
/// when a `j`-cluster breaks up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FragmentationKernel {
    /// `b_{i,j} = 2 / (j - 1)`: every smaller size is equally likely.
    Binary,
    /// `b_{i,j} = i^σ (j - i)^σ / α_j`, normalised so that mass is conserved.
    Powerlaw { sigma: f64 },
}

impl FragmentationKernel {
    pub fn powerlaw(sigma: f64) -> Result<Self> {
        let k = FragmentationKernel::Powerlaw { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FragmentationKernel::Binary => Ok(()),
            FragmentationKernel::Powerlaw { sigma } => {
                if sigma.is_finite() && sigma > -1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "kernels.fragmentation.sigma",
                        format!("power-law exponent must be finite and > -1, got {sigma}"),
                    ))
                }
            }
        }
    }

    /// Power-law exponent; zero for the binary kernel, which it coincides with.
    pub fn sigma(&self) -> f64 {
        match *self {
            FragmentationKernel::Binary => 0.0,
            FragmentationKernel::Powerlaw { sigma } => sigma,
        }
    }

    /// `b_{i,j}`; zero whenever `i >= j`.
    pub fn daughter(&self, i: usize, j: usize) -> f64 {
        if i == 0 || i >= j {
            return 0.0;
        }
        self.column(j)[i - 1]
    }

    /// `b_{1,j}..=b_{j-1,j}`. The closed-form values are rounded, which leaves
    /// `Σ i b_{i,j}` a few ulp away from `j`; the residual is folded back into
    /// the two end entries so the column carries mass `j` to working precision.
    pub fn column(&self, j: usize) -> Vec<f64> {
        if j < 2 {
            return Vec::new();
        }
        let mut col: Vec<f64> = match *self {
            FragmentationKernel::Binary => vec![binary_daughter(j); j - 1],
            FragmentationKernel::Powerlaw { sigma } => {
                let alpha = powerlaw_normaliser(sigma, j);
                (1..j)
                    .map(|i| powerlaw_daughter(sigma, i, j, alpha))
                    .collect()
            }
        };
        let residual = j as f64 - daughter_mass(&col);
        if j == 2 {
            col[0] += residual;
        } else {
            let share = residual / j as f64;
            col[0] += share;
            col[j - 2] += share;
        }
        col
    }

    /// Dense row-major `n x n` table with entry `[(i-1) * n + (j-1)] = b_{i,j}`.
    pub fn daughter_table(&self, n: usize) -> Vec<f64> {
        let mut table = vec![0.0; n * n];
        for j in 2..=n {
            for (idx, b) in self.column(j).into_iter().enumerate() {
                table[idx * n + (j - 1)] = b;
            }
        }
        table
    }
}

/// `Σ_i i col[i-1]` with exact products and compensated accumulation.
pub(crate) fn daughter_mass(col: &[f64]) -> f64 {
    let mut sum = NeumaierSum::new();
    for (idx, &b) in col.iter().enumerate() {
        let x = (idx + 1) as f64;
        let prod = x * b;
        sum += prod;
        sum += x.mul_add(b, -prod);
    }
    sum.value()
}

fn binary_daughter(j: usize) -> f64 {
    2.0 / (j - 1) as f64
}

/// `α_j = (1/j) Σ_{i<j} i^{1+σ} (j-i)^σ`.
pub fn powerlaw_normaliser(sigma: f64, j: usize) -> f64 {
    let jf = j as f64;
    let sum: f64 = (1..j)
        .map(|i| {
            let x = i as f64;
            x.powf(1.0 + sigma) * (jf - x).powf(sigma)
        })
        .sum();
    sum / jf
}

fn powerlaw_daughter(sigma: f64, i: usize, j: usize, alpha: f64) -> f64 {
    let x = i as f64;
    x.powf(sigma) * ((j - i) as f64).powf(sigma) / alpha
}

/// Coagulation kernel `k_{i,j}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoagulationKernel {
    /// `k_1 (i^{1/3} + j^{1/3})^{7/3}`.
    BrownianLike { k1: f64 },
    /// `k_2 (i + k_3)(j + k_3)`.
    Product { k2: f64, k3: f64 },
}

impl CoagulationKernel {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("kernels.coagulation.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        match *self {
            CoagulationKernel::BrownianLike { k1 } => check("k1", k1),
            CoagulationKernel::Product { k2, k3 } => {
                check("k2", k2)?;
                check("k3", k3)
            }
        }
    }

    /// `k_{i,j}`. The result is bit-identical under swapping `i` and `j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        let (x, y) = (i as f64, j as f64);
        match *self {
            CoagulationKernel::BrownianLike { k1 } => k1 * (x.cbrt() + y.cbrt()).powf(7.0 / 3.0),
            CoagulationKernel::Product { k2, k3 } => k2 * ((x + k3) * (y + k3)),
        }
    }

    /// Growth degree of `k_{i,i}` in `i`: `7/9` for the Brownian-like kernel,
    /// `2` for the product kernel (zero if the kernel vanishes identically).
    pub fn degree(&self) -> f64 {
        match *self {
            CoagulationKernel::BrownianLike { k1 } if k1 > 0.0 => 7.0 / 9.0,
            CoagulationKernel::Product { k2, .. } if k2 > 0.0 => 2.0,
            _ => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            CoagulationKernel::BrownianLike { k1 } => k1 == 0.0,
            CoagulationKernel::Product { k2, .. } => k2 == 0.0,
        }
    }

    /// Dense symmetric row-major `n x n` table, `[(i-1) * n + (j-1)] = k_{i,j}`.
    pub fn rate_table(&self, n: usize) -> Vec<f64> {
        let mut table = vec![0.0; n * n];
        for i in 1..=n {
            for j in i..=n {
                let k = self.rate(i, j);
                table[(i - 1) * n + (j - 1)] = k;
                table[(j - 1) * n + (i - 1)] = k;
            }
        }
        table
    }
}

/// Power-law transport, sedimentation and fragmentation rates:
/// `g_i = g i^growth_exp`, `d_i = d i^decay_exp`, `s_i = s i^sed_exp`,
/// `a_i = a i^frag_exp`, except `d_1 = a_1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateLaws {
    pub g: f64,
    pub growth_exp: f64,
    pub d: f64,
    pub decay_exp: f64,
    pub s: f64,
    pub sed_exp: f64,
    pub a: f64,
    pub frag_exp: f64,
}

impl Default for RateLaws {
    fn default() -> Self {
        RateLaws {
            g: 0.0,
            growth_exp: 0.0,
            d: 0.0,
            decay_exp: 0.0,
            s: 0.0,
            sed_exp: 0.0,
            a: 0.0,
            frag_exp: 0.0,
        }
    }
}

fn power_rate(coef: f64, exp: f64, i: usize) -> f64 {
    if i == 0 || coef == 0.0 {
        0.0
    } else {
        coef * (i as f64).powf(exp)
    }
}

impl RateLaws {
    pub fn validate(&self) -> Result<()> {
        let coefs = [("g", self.g), ("d", self.d), ("s", self.s), ("a", self.a)];
        for (name, v) in coefs {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    format!("model.laws.{name}"),
                    format!("rate coefficient must be finite and >= 0, got {v}"),
                ));
            }
        }
        let exps = [
            ("growth_exp", self.growth_exp),
            ("decay_exp", self.decay_exp),
            ("sed_exp", self.sed_exp),
            ("frag_exp", self.frag_exp),
        ];
        for (name, v) in exps {
            if !v.is_finite() {
                return Err(Error::invalid(
                    format!("model.laws.{name}"),
                    format!("exponent must be finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// `g_i`, with `g_0 = 0`.
    pub fn growth(&self, i: usize) -> f64 {
        power_rate(self.g, self.growth_exp, i)
    }

    /// `d_i`, with `d_1 = 0`.
    pub fn decay(&self, i: usize) -> f64 {
        if i <= 1 {
            0.0
        } else {
            power_rate(self.d, self.decay_exp, i)
        }
    }

    pub fn sedimentation(&self, i: usize) -> f64 {
        power_rate(self.s, self.sed_exp, i)
    }

    /// `a_i`, with `a_1 = 0`.
    pub fn fragmentation(&self, i: usize) -> f64 {
        if i <= 1 {
            0.0
        } else {
            power_rate(self.a, self.frag_exp, i)
        }
    }

    /// Total linear loss rate `θ_i = a_i + g_i + d_i + s_i`.
    pub fn theta(&self, i: usize) -> f64 {
        self.fragmentation(i) + self.growth(i) + self.decay(i) + self.sedimentation(i)
    }

    /// Growth degree of `θ_i` in `i`: the largest exponent carrying a
    /// non-zero coefficient, or `None` if every rate vanishes.
    pub fn theta_degree(&self) -> Option<f64> {
        [
            (self.a, self.frag_exp),
            (self.g, self.growth_exp),
            (self.d, self.decay_exp),
            (self.s, self.sed_exp),
        ]
        .into_iter()
        .filter(|&(c, _)| c > 0.0)
        .map(|(_, e)| e)
        .reduce(f64::max)
    }

    pub fn table(&self, n: usize) -> Result<RateTable> {
        RateTable::new(self, n)
    }
}

/// Rates tabulated for sizes `0..=n+1`. Slot 0 holds zeros so that sizes can
/// be used as indices directly.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    n: usize,
    growth: Vec<f64>,
    decay: Vec<f64>,
    sedimentation: Vec<f64>,
    fragmentation: Vec<f64>,
    theta: Vec<f64>,
}

impl RateTable {
    pub fn new(laws: &RateLaws, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("model.n", "truncation size must be >= 1"));
        }
        let sizes = 0..=n + 1;
        Ok(RateTable {
            n,
            growth: sizes.clone().map(|i| laws.growth(i)).collect(),
            decay: sizes.clone().map(|i| laws.decay(i)).collect(),
            sedimentation: sizes.clone().map(|i| laws.sedimentation(i)).collect(),
            fragmentation: sizes.clone().map(|i| laws.fragmentation(i)).collect(),
            theta: sizes
                .map(|i| if i == 0 { 0.0 } else { laws.theta(i) })
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn growth(&self, i: usize) -> f64 {
        self.growth[i]
    }

    pub fn decay(&self, i: usize) -> f64 {
        self.decay[i]
    }

    pub fn sedimentation(&self, i: usize) -> f64 {
        self.sedimentation[i]
    }

    pub fn fragmentation(&self, i: usize) -> f64 {
        self.fragmentation[i]
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }

    /// `g_1..=g_{n+1}`.
    pub fn growth_rates(&self) -> &[f64] {
        &self.growth[1..]
    }

    pub fn decay_rates(&self) -> &[f64] {
        &self.decay[1..]
    }

    pub fn sedimentation_rates(&self) -> &[f64] {
        &self.sedimentation[1..]
    }

    pub fn fragmentation_rates(&self) -> &[f64] {
        &self.fragmentation[1..]
    }

    pub fn theta_rates(&self) -> &[f64] {
        &self.theta[1..]
    }
}
