use super::kernel::SlabKernel;
use crate::error::{ensure, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct GammaRow {
    pub probe_x1: f64,
    /// Parity of the cube index along `e₁`.
    pub family_e1: u8,
    /// Number of transverse axes with odd cube index.
    pub odd_transverse: usize,
    /// `L² Σ_k γ_{m,k}²`
    pub l2_gamma_sq: f64,
    /// `L² Σ_k γ̃_{m,k}²`
    pub l2_gamma_tilde_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaSums {
    pub dim: usize,
    pub half_width: f64,
    pub range: f64,
    pub c17: f64,
    /// Transverse distance beyond which `exp(−c₁₇|·|_⊥/L) < 10⁻¹²`.
    pub cutoff: f64,
    pub rows: Vec<GammaRow>,
}

impl GammaSums {
    pub fn max_l2_gamma_sq(&self) -> f64 {
        self.rows.iter().map(|r| r.l2_gamma_sq).fold(0.0, f64::max)
    }

    pub fn max_l2_gamma_tilde_sq(&self) -> f64 {
        self.rows.iter().map(|r| r.l2_gamma_tilde_sq).fold(0.0, f64::max)
    }
}

/// `(γ, γ̃)` envelopes with unit constant for a cube centre at distance
/// `dist` and transverse distance `perp` from the probe.
pub fn gamma_envelopes(dim: usize, half_width: f64, c17: f64, dist: f64, perp: f64) -> (f64, f64) {
    let l = half_width;
    let d = dim as i32;
    let decay = (-c17 * perp / l).exp();
    let g = (dist.powi(1 - d).min(1.0) + l.powi(1 - d)) * decay / l;
    let gt = dist.powi(2 - d).min(1.0) * decay / l;
    (g, gt)
}

/// Envelope sums over the `R`-cube lattice covering the slab, one row per
/// probe and cube family.
///
/// The probe sits at transverse position `(R/2, …, R/2)`, a cube corner, so
/// transverse offsets to cube centres are integer multiples of `R` and the
/// transverse lattice sum reduces to representation counts of integers as
/// sums of even or odd squares.
pub fn gamma_sums(kern: &SlabKernel, probe_x1: &[f64], range: f64, c17: f64) -> Result<GammaSums> {
    let dim = kern.dim();
    ensure(dim >= 4, "dim", || format!("variance sums need d ≥ 4, got {dim}"))?;
    ensure(range > 0.0 && c17 > 0.0, "range", || "R and c₁₇ must be positive".into())?;
    let l = kern.half_width();
    ensure(probe_x1.iter().all(|x| x.abs() < l), "probe", || "probes must lie inside the slab".into())?;
    let m = dim - 1;
    let cutoff = 1e12f64.ln() * l / c17;
    let n_max = ((cutoff / range).powi(2)).floor() as usize;
    let even = square_series(n_max, 0);
    let odd = square_series(n_max, 1);
    let counts: Vec<Vec<f64>> = (0..=m)
        .map(|j| {
            let mut c = vec![0.0; n_max + 1];
            c[0] = 1.0;
            for _ in 0..m - j {
                c = convolve(&c, &even);
            }
            for _ in 0..j {
                c = convolve(&c, &odd);
            }
            c
        })
        .collect();
    let n1 = (2.0 * l / range).ceil() as usize;
    let mut rows = Vec::new();
    for &x1 in probe_x1 {
        for family in 0..2u8 {
            let offsets: Vec<f64> = (0..n1).filter(|k| k % 2 == family as usize).map(|k| -l + range * (k as f64 + 0.5) - x1).collect();
            for (j, count) in counts.iter().enumerate() {
                let (mut s, mut st) = (0.0, 0.0);
                for (n, &c) in count.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let perp = range * (n as f64).sqrt();
                    for dz in &offsets {
                        let dist = (dz * dz + perp * perp).sqrt();
                        let (g, gt) = gamma_envelopes(dim, l, c17, dist, perp);
                        s += c * g * g;
                        st += c * gt * gt;
                    }
                }
                rows.push(GammaRow { probe_x1: x1, family_e1: family, odd_transverse: j, l2_gamma_sq: l * l * s, l2_gamma_tilde_sq: l * l * st });
            }
        }
    }
    Ok(GammaSums { dim, half_width: l, range, c17, cutoff, rows })
}

/// `(n, multiplicity)` for `n = (2i + parity)² ≤ n_max`, `i ∈ ℤ`.
fn square_series(n_max: usize, parity: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut i = parity;
    while i * i <= n_max {
        out.push((i * i, if i == 0 { 1.0 } else { 2.0 }));
        i += 2;
    }
    out
}

fn convolve(a: &[f64], series: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (n, &v) in a.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for &(s, w) in series {
            if n + s >= a.len() {
                break;
            }
            out[n + s] += v * w;
        }
    }
    out
}
