//! The truncated coagulation–fragmentation system on sizes `1..=N`.
//!
//! For `1 <= i <= N` the right-hand side is
//!
//! ```text
//! du_i/dt = g_{i-1} u_{i-1} - θ_i u_i + d_{i+1} u_{i+1}
//!         + Σ_{j=i+1}^{N} a_j b_{i,j} u_j
//!         + ½ Σ_{j=1}^{i-1} k_{i-j,j} u_{i-j} u_j  -  Σ_{j=1}^{N} k_{i,j} u_i u_j
//!         + δ_{i,N} (1/N) Σ_{j=1}^{N} Σ_{n=N+1-j}^{N} j k_{n,j} u_n u_j
//! ```
//!
//! with `u_0 = u_{N+1} = 0`. The last line returns to row `N` the mass that
//! coagulation would otherwise push past size `N`, so the truncated
//! coagulation and fragmentation operators conserve `Σ i u_i` exactly.
//!
//! The growth inflow is `g_{i-1} u_{i-1}` (the birth-and-death form of the
//! infinite system). The growth outflow `g_N u_N` stays inside `θ_N`, so mass
//! leaks through the top size at rate `N g_N u_N`; see
//! [`TruncatedSystem::growth_leakage`].

use std::ops::{Deref, DerefMut};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    daughter_mass, CoagulationKernel, FragmentationKernel, RateLaws, RateTable, MAX_SIZE,
};
use crate::summation::NeumaierSum;

/// Cluster densities `u_1..=u_N`, stored zero-based (`u[i - 1]` is `u_i`).
///
/// Entries may be slightly negative (down to `-atol`) when produced by the
/// integrator; every operation in the crate accepts such states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(u: Vec<f64>) -> Self {
        StateVector(u)
    }

    pub fn zeros(n: usize) -> Self {
        StateVector(vec![0.0; n])
    }

    /// Unit density at size `size` (1-based).
    pub fn unit(n: usize, size: usize) -> Self {
        let mut u = vec![0.0; n];
        u[size - 1] = 1.0;
        StateVector(u)
    }

    /// `value` on sizes `lo..=hi`, zero elsewhere.
    pub fn block(n: usize, lo: usize, hi: usize, value: f64) -> Self {
        let mut u = vec![0.0; n];
        for x in &mut u[lo - 1..hi] {
            *x = value;
        }
        StateVector(u)
    }

    /// Zero-padding embedding into a larger truncation.
    pub fn embed(&self, n: usize) -> StateVector {
        let mut u = vec![0.0; n.max(self.0.len())];
        u[..self.0.len()].copy_from_slice(&self.0);
        StateVector(u)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(u: Vec<f64>) -> Self {
        StateVector(u)
    }
}

/// Truncated system with all kernel and rate tables precomputed. Immutable
/// after construction.
#[derive(Clone, Debug)]
pub struct TruncatedSystem {
    n: usize,
    frag: FragmentationKernel,
    coag: CoagulationKernel,
    laws: RateLaws,
    rates: RateTable,
    daughters: Vec<f64>,
    // a_j b_{i,j}
    frag_gain: Vec<f64>,
    coag_rates: Vec<f64>,
}

impl TruncatedSystem {
    pub fn new(
        n: usize,
        frag: FragmentationKernel,
        coag: CoagulationKernel,
        laws: RateLaws,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "model.n",
                format!("truncation size must be >= 2, got {n}"),
            ));
        }
        if n > MAX_SIZE {
            return Err(Error::invalid(
                "model.n",
                format!("truncation size must be <= {MAX_SIZE}, got {n}"),
            ));
        }
        frag.validate()?;
        coag.validate()?;
        laws.validate()?;
        let rates = RateTable::new(&laws, n)?;
        let daughters = frag.daughter_table(n);
        let mut frag_gain = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                frag_gain[i * n + j] = rates.fragmentation(j + 1) * daughters[i * n + j];
            }
        }
        let coag_rates = coag.rate_table(n);
        Ok(TruncatedSystem {
            n,
            frag,
            coag,
            laws,
            rates,
            daughters,
            frag_gain,
            coag_rates,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fragmentation_kernel(&self) -> &FragmentationKernel {
        &self.frag
    }

    pub fn coagulation_kernel(&self) -> &CoagulationKernel {
        &self.coag
    }

    pub fn laws(&self) -> &RateLaws {
        &self.laws
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    /// Tabulated `b_{i,j}` (1-based sizes).
    pub fn daughter(&self, i: usize, j: usize) -> f64 {
        self.daughters[(i - 1) * self.n + (j - 1)]
    }

    /// Tabulated `k_{i,j}` (1-based sizes).
    pub fn coag_rate(&self, i: usize, j: usize) -> f64 {
        self.coag_rates[(i - 1) * self.n + (j - 1)]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n,
                found: len,
            })
        }
    }

    /// Time derivative of `u`.
    pub fn rhs(&self, u: &StateVector) -> Result<StateVector> {
        self.check_len(u.len())?;
        let mut du = vec![0.0; self.n];
        self.rhs_into(u, &mut du);
        Ok(StateVector(du))
    }

    /// Unchecked form of [`rhs`](Self::rhs) writing into `du`; both slices must
    /// have length `N`.
    pub fn rhs_into(&self, u: &[f64], du: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(du.len(), n);
        let k = &self.coag_rates;
        for i in 0..n {
            let size = i + 1;
            let mut acc = -self.rates.theta(size) * u[i];
            if i > 0 {
                acc += self.rates.growth(size - 1) * u[i - 1];
            }
            if i + 1 < n {
                acc += self.rates.decay(size + 1) * u[i + 1];
            }
            let row = &self.frag_gain[i * n..(i + 1) * n];
            for j in i + 1..n {
                acc += row[j] * u[j];
            }
            let mut gain = 0.0;
            for j in 0..i {
                // sizes (i - j) and (j + 1) merge into size i + 1
                let m = i - j - 1;
                gain += k[m * n + j] * u[m] * u[j];
            }
            let krow = &k[i * n..(i + 1) * n];
            let loss: f64 = krow.iter().zip(u).map(|(kij, uj)| kij * uj).sum();
            du[i] = acc + 0.5 * gain - u[i] * loss;
        }
        du[n - 1] += self.penalty(u) / n as f64;
    }

    /// `Σ_{j=1}^{N} j u_j Σ_{n=N+1-j}^{N} k_{n,j} u_n`.
    fn penalty(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let k = &self.coag_rates;
        let mut total = 0.0;
        for j in 0..n {
            if u[j] == 0.0 {
                continue;
            }
            let size_j = j + 1;
            // sizes n' with n' + size_j > N, i.e. zero-based m >= N - size_j
            let inner: f64 = (n - size_j..n).map(|m| k[m * n + j] * u[m]).sum();
            total += size_j as f64 * u[j] * inner;
        }
        total
    }

    /// `Σ_i i · du_i/dt`, accumulated with compensated summation. Transport and
    /// coagulation terms enter one by one; fragmentation enters per parent size
    /// as `a_j u_j (Σ_i i b_{i,j} - j)`, so its exact cancellation is not
    /// swamped by the rounding of large `a_j`.
    pub fn mass_flux(&self, u: &StateVector) -> Result<f64> {
        self.check_len(u.len())?;
        Ok(self.mass_flux_unchecked(u))
    }

    pub(crate) fn mass_flux_unchecked(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let k = &self.coag_rates;
        let mut sum = NeumaierSum::new();
        for i in 0..n {
            let size = (i + 1) as f64;
            let transport_loss = self.rates.growth(i + 1)
                + self.rates.decay(i + 1)
                + self.rates.sedimentation(i + 1);
            sum += -size * (transport_loss * u[i]);
            if i > 0 {
                sum += size * (self.rates.growth(i) * u[i - 1]);
            }
            if i + 1 < n {
                sum += size * (self.rates.decay(i + 2) * u[i + 1]);
            }
            // fragmentation of size i + 1, grouped by parent: a u (Σ_l l b_{l,i+1} - (i+1))
            if u[i] != 0.0 && i > 0 {
                let col: Vec<f64> = (0..i).map(|l| self.daughters[l * n + i]).collect();
                let defect = daughter_mass(&col) - size;
                sum += self.rates.fragmentation(i + 1) * u[i] * defect;
            }
            for j in 0..i {
                let m = i - j - 1;
                sum += size * (0.5 * (k[m * n + j] * u[m] * u[j]));
            }
            for j in 0..n {
                sum += -size * (u[i] * (k[i * n + j] * u[j]));
            }
        }
        // row N carries the penalty with weight N · (1/N)
        for j in 0..n {
            let size_j = (j + 1) as f64;
            for m in n - (j + 1)..n {
                sum += size_j * (k[m * n + j] * u[m]) * u[j];
            }
        }
        sum.value()
    }

    /// Mass per unit time leaving through the top size by growth, `N g_N u_N`.
    pub fn growth_leakage(&self, u: &[f64]) -> f64 {
        let n = self.n;
        n as f64 * self.rates.growth(n) * u[n - 1]
    }

    /// Analytic Jacobian `∂(du_i/dt)/∂u_j`.
    pub fn jacobian(&self, u: &StateVector) -> Result<DMatrix<f64>> {
        self.check_len(u.len())?;
        let mut jac = DMatrix::zeros(self.n, self.n);
        self.jacobian_into(u, &mut jac);
        Ok(jac)
    }

    /// Unchecked form of [`jacobian`](Self::jacobian); overwrites `jac`.
    pub fn jacobian_into(&self, u: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.n;
        let k = &self.coag_rates;
        jac.fill(0.0);
        for i in 0..n {
            let size = i + 1;
            jac[(i, i)] -= self.rates.theta(size);
            if i > 0 {
                jac[(i, i - 1)] += self.rates.growth(size - 1);
            }
            if i + 1 < n {
                jac[(i, i + 1)] += self.rates.decay(size + 1);
            }
            for j in i + 1..n {
                jac[(i, j)] += self.frag_gain[i * n + j];
            }
            // gain: ∂/∂u_m of ½ Σ k u u = k_{m, size-m} u_{size-m}
            for m in 0..i {
                let partner = i - m - 1;
                jac[(i, m)] += k[m * n + partner] * u[partner];
            }
            let krow = &k[i * n..(i + 1) * n];
            let loss: f64 = krow.iter().zip(u).map(|(kij, uj)| kij * uj).sum();
            jac[(i, i)] -= loss;
            for m in 0..n {
                jac[(i, m)] -= u[i] * krow[m];
            }
        }
        let inv_n = 1.0 / n as f64;
        for m in 0..n {
            let size_m = m + 1;
            let mut d = 0.0;
            for j in n - size_m..n {
                d += (j + 1 + size_m) as f64 * k[m * n + j] * u[j];
            }
            jac[(n - 1, m)] += d * inv_n;
        }
    }
}
