use crate::env::{Environment, SiteLaw};
use crate::error::{ensure, Result};
use crate::greenslab::{sphere_rule, SlabKernel};
use crate::quad::GaussLegendre;
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Sites within this distance of the margin `r_φ + NEAR_MARGIN` get exact
/// weights; beyond it the bump acts as a point mass.
const NEAR_MARGIN: f64 = 0.5;
const MID_RADIUS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctuationStd {
    pub x: Vec<f64>,
    pub l: f64,
    /// Standard deviation of `V_z·e₁`.
    pub site_sd: f64,
    pub n_near: usize,
    pub n_mid: usize,
    pub sum_w2_near: f64,
    pub sum_w2_mid: f64,
    pub sum_w2_far: f64,
    /// `Σ_z w_z` by the same split; equals `G_𝒮 1(x) = L² − x₁²`.
    pub sum_w: f64,
    /// Standard deviation over environments of `G_𝒮 b̃(x)`.
    pub std: f64,
}

/// `sd(G_𝒮 b̃(x)) = sd(V·e₁)·(Σ_z w_z²)^{1/2}` with `w_z = G_𝒮 φ_z(x)`, for
/// the lattice offset of `env`. Near sites are integrated against the
/// kernel, the next shell uses `w_z ≈ g(x, z)` and the rest of the slab
/// contributes `∫ g(x, y)² dy`.
pub fn fluctuation_std(env: &Environment, kern: &SlabKernel, x: &[f64]) -> Result<FluctuationStd> {
    let d = env.dim();
    ensure(kern.dim() == d, "kern", || format!("kernel dimension {} differs from environment dimension {d}", kern.dim()))?;
    let spec = env.spec();
    let l = kern.half_width();
    let reach = spec.bump_radius;
    let r_near = reach + NEAR_MARGIN;
    ensure(x.len() == d && x[0].abs() + r_near + reach + 1.0 <= l, "x", || {
        format!("x must lie at distance ≥ {} from the slab faces", r_near + reach + 1.0)
    })?;
    let site_sd = match spec.site_law {
        SiteLaw::Uniform => (spec.drift_bound - spec.mean_drift.abs()) / 3f64.sqrt(),
        SiteLaw::Constant => 0.0,
    };
    let off = env.offset();
    let lo: Vec<i64> = (0..d).map(|i| (x[i] + off[i] - MID_RADIUS).floor() as i64).collect();
    let hi: Vec<i64> = (0..d).map(|i| (x[i] + off[i] + MID_RADIUS).ceil() as i64).collect();
    let mut z = lo.clone();
    let (mut near, mut mid) = (Vec::new(), Vec::new());
    'outer: loop {
        let c: Vec<f64> = (0..d).map(|i| z[i] as f64 - off[i]).collect();
        let r = dist(&c, x);
        if r <= r_near {
            near.push((z.clone(), c));
        } else if r <= MID_RADIUS && c[0].abs() < l {
            mid.push(c);
        }
        for i in 0..d {
            z[i] += 1;
            if z[i] <= hi[i] {
                continue 'outer;
            }
            z[i] = lo[i];
        }
        break;
    }
    let rays = BumpRays::new(d, env.spec().profile().halfwidth());
    let (mut sum_w, mut sum_w2_near) = (0.0, 0.0);
    for (z, c) in &near {
        let w = rays.free_potential(env, z, c, x) * kern.gamma_d() + regular_part(kern, x, c)?;
        sum_w += w;
        sum_w2_near += w * w;
    }
    let mut sum_w2_mid = 0.0;
    for c in &mid {
        let g = kern.green_function(x, c)?;
        sum_w += g;
        sum_w2_mid += g * g;
    }
    let sum_w2_far = far_integral(kern, x[0], MID_RADIUS, 2);
    sum_w += far_integral(kern, x[0], MID_RADIUS, 1);
    let std = site_sd * (sum_w2_near + sum_w2_mid + sum_w2_far).sqrt();
    Ok(FluctuationStd { x: x.to_vec(), l, site_sd, n_near: near.len(), n_mid: mid.len(), sum_w2_near, sum_w2_mid, sum_w2_far, sum_w, std })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// `g(x, c) − g_d(x, c)`, harmonic in `c` near `x`; a bump that is symmetric
/// with isotropic second moments integrates it to its centre value up to
/// fourth-order terms.
fn regular_part(kern: &SlabKernel, x: &[f64], c: &[f64]) -> Result<f64> {
    let mut c = c.to_vec();
    if dist(&c, x) < 1e-3 {
        let k = 1 % c.len();
        c[k] += 1e-3;
    }
    Ok(kern.green_function(x, &c)? - kern.free_green(dist(&c, x)))
}

/// Rays from the pole for `∫ |x − y|^{2−d} φ_z(y) dy = ∫_{S^{d−1}} ∫ r φ_z(x + rθ) dr dθ`.
struct BumpRays {
    dirs: Vec<(Vec<f64>, f64)>,
    gl: GaussLegendre,
    half: f64,
}

impl BumpRays {
    fn new(d: usize, half: f64) -> Self {
        BumpRays { dirs: sphere_rule(d - 1, 14), gl: GaussLegendre::new(12), half }
    }

    fn free_potential(&self, env: &Environment, z: &[i64], c: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        let mut y = vec![0.0; d];
        let mut total = 0.0;
        for (theta, wt) in &self.dirs {
            // Chord of the ray through the support box c + (−w, w)^d.
            let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
            for i in 0..d {
                let (a, b) = (c[i] - self.half - x[i], c[i] + self.half - x[i]);
                if theta[i].abs() < 1e-14 {
                    if a > 0.0 || b < 0.0 {
                        t1 = -1.0;
                    }
                    continue;
                }
                let (s0, s1) = (a / theta[i], b / theta[i]);
                t0 = t0.max(s0.min(s1));
                t1 = t1.min(s0.max(s1));
            }
            if t1 <= t0 {
                continue;
            }
            let mut ray = 0.0;
            for (r, wr) in self.gl.on(t0, t1) {
                for i in 0..d {
                    y[i] = x[i] + r * theta[i];
                }
                ray += wr * r * env.site_weight(z, &y);
            }
            total += wt * ray;
        }
        total
    }
}

/// `∫ g(x, y)^p dy` over slab points with `|y − x| > r0`.
fn far_integral(kern: &SlabKernel, x1: f64, r0: f64, p: i32) -> f64 {
    let d = kern.dim();
    let l = kern.half_width();
    // Area of the unit sphere in ℝ^{d−1}.
    let area = 2.0 * PI.powf((d - 1) as f64 / 2.0) / gamma((d - 1) as f64 / 2.0);
    let gl = GaussLegendre::new(8);
    let mut breaks = vec![-l, l];
    for b in [x1 - r0, x1 + r0, x1] {
        if b.abs() < l {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mut y_nodes = Vec::new();
    for w in breaks.windows(2) {
        let k = (w[1] - w[0]).ceil().max(1.0) as usize;
        for j in 0..k {
            let a = w[0] + (w[1] - w[0]) * j as f64 / k as f64;
            let b = w[0] + (w[1] - w[0]) * (j + 1) as f64 / k as f64;
            y_nodes.extend(gl.on(a, b));
        }
    }
    let mut total = 0.0;
    for (y1, wy) in y_nodes {
        let dy = y1 - x1;
        let rmin = (r0 * r0 - dy * dy).max(0.0).sqrt();
        let mut edges = vec![rmin];
        let mut e = rmin.max(0.5);
        while e < l {
            e *= 2.0;
            edges.push(e.min(l));
        }
        let top = rmin.max(l) + 24.0 * l / p as f64;
        let mut e = *edges.last().unwrap();
        while e < top {
            e += l;
            edges.push(e);
        }
        let mut inner = 0.0;
        for w in edges.windows(2) {
            for (rho, wr) in gl.on(w[0], w[1]) {
                inner += wr * kern.green_reduced(x1, y1, rho).powi(p) * rho.powi(d as i32 - 2);
            }
        }
        total += wy * area * inner;
    }
    total
}
