use super::kernel::SlabKernel;
use crate::error::{ensure, Result};
use crate::rng::{tag, StreamKey};
use rand::Rng;
use serde::Serialize;

/// Constants of `g ≤ c₁₆|x−y|^{2−d}e^{−c₁₇|x−y|_⊥/L}` and
/// `|∇g| ≤ (c₁₈|x−y|^{1−d} + c₁₉L^{1−d})e^{−c₁₇|x−y|_⊥/L}`, fitted as the
/// calibration supremum times a safety margin.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeFit {
    pub c16: f64,
    pub c17: f64,
    pub c18: f64,
    pub c19: f64,
    pub margin: f64,
    pub calibration_pairs: usize,
}

pub type Pair = (Vec<f64>, Vec<f64>);

/// Random pairs in the slab with transverse separation up to `4L`, half of
/// them within `L` of each other.
pub fn envelope_pairs(dim: usize, half_width: f64, n: usize, seed: u64) -> Vec<Pair> {
    let key = StreamKey::new(seed, tag::PROBE, 17);
    let mut rng = key.rng(0);
    let l = half_width;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let near = out.len() % 2 == 0;
        let x: Vec<f64> = (0..dim).map(|i| if i == 0 { rng.random_range(-l..l) * 0.999 } else { 0.0 }).collect();
        let scale = if near { l } else { 4.0 * l };
        let mut y = vec![0.0; dim];
        y[0] = rng.random_range(-l..l) * 0.999;
        for v in y.iter_mut().skip(1) {
            *v = rng.random_range(-1.0..1.0) * scale / (dim as f64 - 1.0).sqrt();
        }
        let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2.sqrt() > 1e-3 * l {
            out.push((x, y));
        }
    }
    out
}

fn geometry(x: &[f64], y: &[f64]) -> (f64, f64) {
    let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let perp = x[1..].iter().zip(&y[1..]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    (r, perp)
}

pub fn fit_envelopes(kern: &SlabKernel, pairs: &[Pair], c17: f64, margin: f64) -> Result<EnvelopeFit> {
    ensure(c17 > 0.0 && margin >= 1.0, "c17", || "need c₁₇ > 0 and margin ≥ 1".into())?;
    ensure(!pairs.is_empty(), "pairs", || "empty calibration grid".into())?;
    let l = kern.half_width();
    let d = kern.dim() as i32;
    let mut c16: f64 = 0.0;
    let mut samples = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let (r, perp) = geometry(x, y);
        let boost = (c17 * perp / l).exp();
        let g = kern.green_function(x, y)?;
        c16 = c16.max(g * boost / r.powi(2 - d));
        let grad = kern.green_gradient(x, y)?;
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        samples.push((r, norm * boost));
    }
    let c18 = samples.iter().filter(|s| s.0 < l).map(|s| s.1 / s.0.powi(1 - d)).fold(0.0, f64::max);
    let c19 = samples.iter().map(|s| (s.1 - c18 * s.0.powi(1 - d)).max(0.0) / l.powi(1 - d)).fold(0.0, f64::max);
    Ok(EnvelopeFit { c16: c16 * margin, c17, c18: c18 * margin, c19: c19 * margin, margin, calibration_pairs: pairs.len() })
}

impl EnvelopeFit {
    pub fn green_bound(&self, kern: &SlabKernel, x: &[f64], y: &[f64]) -> f64 {
        let (r, perp) = geometry(x, y);
        self.c16 * r.powi(2 - kern.dim() as i32) * (-self.c17 * perp / kern.half_width()).exp()
    }

    pub fn gradient_bound(&self, kern: &SlabKernel, x: &[f64], y: &[f64]) -> f64 {
        let (r, perp) = geometry(x, y);
        let d = kern.dim() as i32;
        let l = kern.half_width();
        (self.c18 * r.powi(1 - d) + self.c19 * l.powi(1 - d)) * (-self.c17 * perp / l).exp()
    }

    /// Count of pairs violating each envelope.
    pub fn violations(&self, kern: &SlabKernel, pairs: &[Pair]) -> Result<(usize, usize)> {
        let (mut vg, mut vd) = (0, 0);
        for (x, y) in pairs {
            if kern.green_function(x, y)? > self.green_bound(kern, x, y) {
                vg += 1;
            }
            let grad = kern.green_gradient(x, y)?;
            if grad.iter().map(|v| v * v).sum::<f64>().sqrt() > self.gradient_bound(kern, x, y) {
                vd += 1;
            }
        }
        Ok((vg, vd))
    }
}
