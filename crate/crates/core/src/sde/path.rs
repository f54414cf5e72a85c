use super::domain::{dot, CompiledDomain, Domain, FaceLabel};
use crate::env::{Environment, SiteCache};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Bridge crossing probabilities below `e^{-40}` are not sampled.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub exit_point: Vec<f64>,
    pub exit_time: f64,
    pub face: FaceLabel,
    pub steps: u64,
    pub dt: f64,
}

/// Receives every (possibly partial) time step `[t, t + dt)` of a path with
/// the left-endpoint state and drift.
pub trait PathObserver {
    fn step(&mut self, x: &[f64], drift: &[f64], dt: f64);
}

impl PathObserver for () {
    #[inline]
    fn step(&mut self, _: &[f64], _: &[f64], _: f64) {}
}

impl<F: FnMut(&[f64], &[f64], f64)> PathObserver for F {
    #[inline]
    fn step(&mut self, x: &[f64], drift: &[f64], dt: f64) {
        self(x, drift, dt)
    }
}

/// One Euler–Maruyama step `x + b(x)dt + σ(x)√dt·noise`.
pub fn step(env: &Environment, x: &[f64], dt: f64, noise: &[f64]) -> Vec<f64> {
    assert!(dt > 0.0, "dt must be positive");
    let d = env.dim();
    let mut cache = SiteCache::new(d);
    let mut b = vec![0.0; d];
    env.drift_into(x, &mut cache, &mut b);
    let sq = dt.sqrt();
    if env.has_identity_diffusion() {
        return (0..d).map(|i| x[i] + b[i] * dt + sq * noise[i]).collect();
    }
    let mut a = vec![0.0; d * d];
    let mut s = vec![0.0; d * d];
    env.sigma_into(x, &mut cache, &mut a, &mut s);
    (0..d).map(|i| x[i] + b[i] * dt + sq * dot(&s[i * d..(i + 1) * d], noise)).collect()
}

/// Default step `10⁻³·min(1, L²)/ν` for a domain of length scale `L`.
pub fn default_dt(length: f64, ellipticity: f64) -> f64 {
    1e-3 * (length * length).min(1.0) / ellipticity
}

/// Default horizon `100·ν·diameter²`.
pub fn default_max_time(dom: &CompiledDomain, ellipticity: f64) -> f64 {
    100.0 * ellipticity * dom.diameter() * dom.diameter()
}

/// Simulates from `x0` until the path leaves `dom`.
pub fn run_until_exit(env: &Environment, x0: &[f64], dom: &Domain, dt: f64, rng: &mut ChaCha8Rng, max_time: Option<f64>) -> Result<ExitRecord> {
    let c = dom.compile(env.dim())?;
    let horizon = max_time.unwrap_or_else(|| default_max_time(&c, env.spec().ellipticity));
    run_observed(env, x0, &c, dt, rng, horizon, &mut ())
}

/// Core path loop: Euler–Maruyama with discrete exit detection and a
/// Brownian-bridge crossing test per planar face.
pub fn run_observed<O: PathObserver>(
    env: &Environment,
    x0: &[f64],
    dom: &CompiledDomain,
    dt: f64,
    rng: &mut ChaCha8Rng,
    max_time: f64,
    obs: &mut O,
) -> Result<ExitRecord> {
    let d = env.dim();
    if x0.len() != d || dom.dim != d {
        return Err(Error::invalid("x0", format!("expected a point of dimension {d}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    // Start on or outside the boundary.
    let mut worst: Option<(f64, FaceLabel)> = None;
    for (g, label) in dom.gaps(x0) {
        if g <= 0.0 {
            if g < -1e-9 * dom.diameter.max(1.0) {
                return Err(Error::invalid("x0", "start point lies outside the domain"));
            }
            worst = Some(prefer(worst, (g, label)));
        }
    }
    if let Some((_, face)) = worst {
        return Ok(ExitRecord { exit_point: x0.to_vec(), exit_time: 0.0, face, steps: 0, dt });
    }

    let identity = env.has_identity_diffusion();
    let mut cache = SiteCache::new(d);
    let mut x = x0.to_vec();
    let mut xn = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut a = if identity { Vec::new() } else { vec![0.0; d * d] };
    let mut s = if identity { Vec::new() } else { vec![0.0; d * d] };
    let mut gap_prev: Vec<f64> = dom.faces.iter().map(|f| f.offset - dot(&f.normal, &x)).collect();
    let sq = dt.sqrt();
    let mut t = 0.0;
    let mut steps = 0u64;
    loop {
        if t >= max_time {
            return Ok(ExitRecord { exit_point: x, exit_time: t, face: FaceLabel::Timeout, steps, dt });
        }
        env.drift_into(&x, &mut cache, &mut b);
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        if identity {
            for i in 0..d {
                xn[i] = x[i] + b[i] * dt + sq * xi[i];
            }
        } else {
            env.sigma_into(&x, &mut cache, &mut a, &mut s);
            for i in 0..d {
                xn[i] = x[i] + b[i] * dt + sq * dot(&s[i * d..(i + 1) * d], &xi);
            }
        }
        steps += 1;

        // Earliest crossing within the step; discrete crossings carry the
        // interpolated fraction, bridge crossings the midpoint.
        let mut hit: Option<(f64, usize, bool)> = None;
        let mut outside_lateral = false;
        let mut outside_any = false;
        for (k, f) in dom.faces.iter().enumerate() {
            let g0 = gap_prev[k];
            let g1 = f.offset - dot(&f.normal, &xn);
            if g1 <= 0.0 {
                outside_any = true;
                outside_lateral |= f.label == FaceLabel::Lateral;
                let frac = g0 / (g0 - g1);
                if hit.is_none_or(|(h, _, _)| frac < h) {
                    hit = Some((frac, k, true));
                }
            } else {
                let ann = if identity { 1.0 } else { quad_form(&a, &f.normal, d) };
                let arg = 2.0 * g0 * g1 / (ann * dt);
                if arg < BRIDGE_CUTOFF {
                    let u: f64 = rng.random();
                    if u < (-arg).exp() && hit.is_none_or(|(h, _, _)| 0.5 < h) {
                        hit = Some((0.5, k, false));
                    }
                }
            }
        }
        if let Some((frac, k, discrete)) = hit {
            obs.step(&x, &b, frac * dt);
            let mut face = dom.faces[k].label;
            if outside_any && outside_lateral {
                face = FaceLabel::Lateral;
            }
            let mut p: Vec<f64> = (0..d).map(|i| x[i] + frac * (xn[i] - x[i])).collect();
            if !discrete {
                let f = &dom.faces[k];
                let g = f.offset - dot(&f.normal, &p);
                for i in 0..d {
                    p[i] += g * f.normal[i];
                }
            }
            return Ok(ExitRecord { exit_point: p, exit_time: t + frac * dt, face, steps, dt });
        }
        obs.step(&x, &b, dt);
        std::mem::swap(&mut x, &mut xn);
        for (k, f) in dom.faces.iter().enumerate() {
            gap_prev[k] = f.offset - dot(&f.normal, &x);
        }
        t += dt;
    }
}

fn prefer(cur: Option<(f64, FaceLabel)>, cand: (f64, FaceLabel)) -> (f64, FaceLabel) {
    match cur {
        None => cand,
        Some(c) if c.1 == FaceLabel::Lateral => c,
        Some(_) if cand.1 == FaceLabel::Lateral => cand,
        Some(c) => {
            if cand.0 < c.0 {
                cand
            } else {
                c
            }
        }
    }
}

fn quad_form(a: &[f64], n: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += n[i] * a[i * d + j] * n[j];
        }
    }
    s
}
