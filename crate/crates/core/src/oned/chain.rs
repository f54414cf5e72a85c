use super::scale::ScaleProfile;
use crate::env::Environment;
use crate::error::{ensure, Result};
use serde::{Deserialize, Serialize};

/// Nearest-neighbour chain on `left..=right` with absorbing ends; interior
/// site `i` steps left with odds `ρ̂(i) = q_i/p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub left: i64,
    pub right: i64,
    /// `ρ̂(i)` for `i = left + 1, …, right − 1`.
    pub rho: Vec<f64>,
}

impl ChainSpec {
    pub fn new(left: i64, right: i64, rho: Vec<f64>) -> Result<Self> {
        ensure(right - left >= 2, "right", || format!("window [{left}, {right}] has no interior site"))?;
        ensure(rho.len() as i64 == right - left - 1, "rho", || format!("expected {} interior ratios, got {}", right - left - 1, rho.len()))?;
        ensure(rho.iter().all(|r| r.is_finite() && *r > 0.0), "rho", || "ratios must be positive".into())?;
        Ok(ChainSpec { left, right, rho })
    }

    pub fn rho_at(&self, i: i64) -> f64 {
        self.rho[(i - self.left - 1) as usize]
    }

    /// Slab-chain ratios `ρ̂(i) = q_i/p_i` of a one-dimensional environment
    /// with slabs at `iL₀`, from exact scale-function increments.
    pub fn from_environment(env: &Environment, l0: f64, left: i64, right: i64, quad_step: f64) -> Result<Self> {
        let reach = (left.abs().max(right.abs()) as f64 + 1.0) * l0;
        let p = ScaleProfile::new(env, reach, quad_step)?;
        let rho = ((left + 1)..right)
            .map(|i| {
                let x = i as f64 * l0;
                (p.log_increment(x, x + l0) - p.log_increment(x - l0, x)).exp()
            })
            .collect();
        ChainSpec::new(left, right, rho)
    }

    /// Every ratio lies in `[κ^{L₀+1}, κ^{−(L₀+1)}]`.
    pub fn within_ellipticity(&self, kappa: f64, l0: f64) -> bool {
        let lo = kappa.powf(l0 + 1.0);
        self.rho.iter().all(|r| *r >= lo && *r <= 1.0 / lo)
    }

    /// `log Π_{m, right−1} = −Σ_{m<j<right} log ρ̂(j)` for `m = left..right−1`.
    fn log_products(&self) -> Vec<f64> {
        let n = (self.right - self.left) as usize;
        let mut lp = vec![0.0; n];
        for k in (0..n - 1).rev() {
            lp[k] = lp[k + 1] - self.rho[k].ln();
        }
        lp
    }

    /// `f(i) = Σ_{i ≤ m < right} Π_{m, right−1}`, with `f(right) = 0`,
    /// `f(right − 1) = 1`; returned as `log f`.
    pub fn log_f(&self, i: i64) -> f64 {
        assert!(i >= self.left && i <= self.right);
        if i == self.right {
            return f64::NEG_INFINITY;
        }
        let lp = self.log_products();
        log_sum_exp(&lp[(i - self.left) as usize..])
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Probability of absorption at `left` from `start`, as `f(start)/f(left)`.
pub fn chain_exit_probability(chain: &ChainSpec, start: i64) -> f64 {
    assert!(start >= chain.left && start <= chain.right, "start outside the window");
    if start == chain.left {
        return 1.0;
    }
    if start == chain.right {
        return 0.0;
    }
    let lp = chain.log_products();
    let k = (start - chain.left) as usize;
    let m = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let head: f64 = lp[..k].iter().map(|x| (x - m).exp()).sum();
    let tail: f64 = lp[k..].iter().map(|x| (x - m).exp()).sum();
    tail / (head + tail)
}
