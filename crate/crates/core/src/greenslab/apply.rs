use super::kernel::SlabKernel;
use crate::error::{ensure, Error, Result};
use crate::quad::GaussLegendre;
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_PI_2, PI};

/// A bounded function on the slab, with a known bound on `sup |f|`.
pub trait SlabFunction: Sync {
    fn value(&self, y: &[f64]) -> f64;

    /// `sup |f|`; a non-finite value marks `f` as unbounded.
    fn sup_norm(&self) -> f64;

    /// `Some(f(y))` when `f` depends on `y₁` only.
    fn profile(&self, _y1: f64) -> Option<f64> {
        None
    }
}

/// `f(y) = f₁(y₁)`.
pub struct ProfileFn<F> {
    pub f: F,
    pub sup: f64,
}

impl<F: Fn(f64) -> f64 + Sync> SlabFunction for ProfileFn<F> {
    fn value(&self, y: &[f64]) -> f64 {
        (self.f)(y[0])
    }

    fn sup_norm(&self) -> f64 {
        self.sup
    }

    fn profile(&self, y1: f64) -> Option<f64> {
        Some((self.f)(y1))
    }
}

pub struct FieldFn<F> {
    pub f: F,
    pub sup: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> SlabFunction for FieldFn<F> {
    fn value(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }

    fn sup_norm(&self) -> f64 {
        self.sup
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApplyRule {
    pub radial: usize,
    pub polar: usize,
    pub sphere: usize,
}

impl ApplyRule {
    pub const COARSE: ApplyRule = ApplyRule { radial: 8, polar: 10, sphere: 4 };
    pub const FINE: ApplyRule = ApplyRule { radial: 14, polar: 18, sphere: 7 };
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApplyResult {
    pub value: f64,
    /// Coarse-versus-fine difference plus the far-field cutoff bound.
    pub error: f64,
    pub cutoff_bound: f64,
    pub cutoff_radius: f64,
}

/// `G_𝒮 f(x) = ∫_𝒮 g(x, y) f(y) dy` in spherical coordinates about `x` with
/// polar axis `e₁`.
pub fn green_apply(kern: &SlabKernel, f: &dyn SlabFunction, x: &[f64]) -> Result<ApplyResult> {
    let (fine, cutoff_bound, cutoff_radius) = apply_rule(kern, f, x, ApplyRule::FINE)?;
    let (coarse, _, _) = apply_rule(kern, f, x, ApplyRule::COARSE)?;
    Ok(ApplyResult { value: fine, error: (fine - coarse).abs() + cutoff_bound, cutoff_bound, cutoff_radius })
}

/// Radius beyond which the remaining integral of `g` is below
/// `sup|f|·e^{−30}·O(L²)`, and that bound.
fn cutoff(dim: usize, l: f64, sup: f64) -> (f64, f64) {
    let m = (dim - 1) as f64;
    let exponent = 30.0;
    let rho_c = 2.0 * exponent * m.sqrt() * l / PI;
    let t_star = 2.0 * rho_c * l / (PI * m.sqrt());
    let bound = sup * (t_star * 2.0 * m * (-exponent).exp() + 32.0 * l * l / PI.powi(3) * (-exponent).exp());
    ((rho_c * rho_c + 4.0 * l * l).sqrt(), bound)
}

pub fn apply_rule(kern: &SlabKernel, f: &dyn SlabFunction, x: &[f64], rule: ApplyRule) -> Result<(f64, f64, f64)> {
    let dim = kern.dim();
    ensure(dim >= 4, "dim", || format!("Green operator needs d ≥ 4, got {dim}"))?;
    ensure(x.len() == dim, "x", || format!("point has {} coordinates, expected {dim}", x.len()))?;
    let sup = f.sup_norm();
    if !sup.is_finite() {
        return Err(Error::Unbounded("green_apply needs a bounded f".into()));
    }
    let l = kern.half_width();
    let x1 = x[0];
    ensure(x1.abs() <= l, "x", || format!("x₁ = {x1} outside the slab"))?;
    let near = l - x1.abs();
    let far = l + x1.abs();
    let (r_cut, cutoff_bound) = cutoff(dim, l, sup);
    if near == 0.0 {
        return Ok((0.0, 0.0, r_cut));
    }

    let rho0 = 0.05 * l.min(near);
    let mut breaks = vec![0.0, rho0];
    let mut r = rho0;
    while r < l {
        r *= 2.0;
        breaks.push(r.min(l));
    }
    breaks.push(near);
    breaks.push(far);
    let mut k = 2.0;
    while k * l < r_cut {
        breaks.push(k * l);
        k += 1.0;
    }
    breaks.push(r_cut);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * l);

    let gr = GaussLegendre::new(rule.radial);
    let gp = GaussLegendre::new(rule.polar);
    let profile_only = f.profile(x1).is_some();
    let sphere = if profile_only { Vec::new() } else { sphere_rule(dim - 2, rule.sphere) };
    let sphere_area = 2.0 * PI.powf((dim - 1) as f64 / 2.0) / gamma((dim - 1) as f64 / 2.0);
    let mut y = vec![0.0; dim];

    let mut total = 0.0;
    for w in breaks.windows(2) {
        for (r, wr) in gr.on(w[0], w[1]) {
            let c_hi = ((l - x1) / r).min(1.0);
            let c_lo = ((-l - x1) / r).max(-1.0);
            let (p_lo, p_hi) = (c_hi.acos(), c_lo.acos());
            let mut shell = 0.0;
            for (a, b) in [(p_lo, p_hi.min(FRAC_PI_2)), (p_lo.max(FRAC_PI_2), p_hi)] {
                if b <= a {
                    continue;
                }
                for (phi, wp) in gp.on(a, b) {
                    let (s, c) = phi.sin_cos();
                    let y1 = x1 + r * c;
                    let rho = r * s;
                    let g = kern.green_reduced(x1, y1, rho);
                    let favg = if profile_only {
                        sphere_area * f.profile(y1).unwrap_or(0.0)
                    } else {
                        let mut acc = 0.0;
                        y[0] = y1;
                        for (omega, ws) in &sphere {
                            for i in 1..dim {
                                y[i] = x[i] + rho * omega[i - 1];
                            }
                            acc += ws * f.value(&y);
                        }
                        acc
                    };
                    shell += wp * s.powi(dim as i32 - 2) * g * favg;
                }
            }
            total += wr * r.powi(dim as i32 - 1) * shell;
        }
    }
    Ok((total, cutoff_bound, r_cut))
}

/// Product rule on the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub(crate) fn sphere_rule(k: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    if k == 0 {
        return vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)];
    }
    if k == 1 {
        let m = 2 * n;
        return (0..m)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect();
    }
    let inner = sphere_rule(k - 1, n);
    let gl = GaussLegendre::new(n);
    let mut out = Vec::with_capacity(n * inner.len());
    for (theta, wt) in gl.on(0.0, PI) {
        let (s, c) = theta.sin_cos();
        let w = wt * s.powi(k as i32 - 1);
        for (v, wv) in &inner {
            let mut p = Vec::with_capacity(k + 1);
            p.push(c);
            p.extend(v.iter().map(|t| s * t));
            out.push((p, w * wv));
        }
    }
    out
}

/// `G_𝒮 f` and its `x₁` derivative for `f(y) = f₁(y₁)`, from the 1-D kernel
/// `(L − x∨y)(L + x∧y)/L` on a uniform grid with cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct ProfileGreen {
    half_width: f64,
    step: f64,
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
}

impl ProfileGreen {
    pub fn new(half_width: f64, cells: usize, f1: impl Fn(f64) -> f64) -> Result<Self> {
        ensure(half_width > 0.0, "L", || "slab half-width must be positive".into())?;
        ensure(cells >= 4, "cells", || "need at least four cells".into())?;
        let l = half_width;
        let h = 2.0 * l / cells as f64;
        let gl = GaussLegendre::new(8);
        let xs: Vec<f64> = (0..=cells).map(|i| -l + i as f64 * h).collect();
        // a[i] = ∫_{−L}^{x_i} (L+y) f, b[i] = ∫_{x_i}^{L} (L−y) f
        let mut a = vec![0.0; cells + 1];
        let mut b = vec![0.0; cells + 1];
        for i in 0..cells {
            a[i + 1] = a[i] + gl.integrate(xs[i], xs[i + 1], |y| (l + y) * f1(y));
        }
        for i in (0..cells).rev() {
            b[i] = b[i + 1] + gl.integrate(xs[i], xs[i + 1], |y| (l - y) * f1(y));
        }
        let u = (0..=cells).map(|i| ((l - xs[i]) * a[i] + (l + xs[i]) * b[i]) / l).collect();
        let du = (0..=cells).map(|i| (b[i] - a[i]) / l).collect();
        let ddu = xs.iter().map(|x| -2.0 * f1(*x)).collect();
        Ok(ProfileGreen { half_width, step: h, u, du, ddu })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let s = ((x + self.half_width) / self.step).clamp(0.0, (self.u.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.u.len() - 2);
        (i, s - i as f64)
    }

    /// `G_𝒮 f(x)`, zero outside the slab.
    pub fn value(&self, x1: f64) -> f64 {
        if x1.abs() >= self.half_width {
            return 0.0;
        }
        let (i, t) = self.locate(x1);
        hermite(self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], self.step, t)
    }

    /// `∂₁ G_𝒮 f(x)`; the other components vanish.
    pub fn derivative(&self, x1: f64) -> f64 {
        let (i, t) = self.locate(x1.clamp(-self.half_width, self.half_width));
        hermite(self.du[i], self.du[i + 1], self.ddu[i], self.ddu[i + 1], self.step, t)
    }
}

fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * h * m1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_area_and_moments() {
        for (k, area) in [(1usize, 2.0 * PI), (2, 4.0 * PI), (3, 2.0 * PI * PI)] {
            let rule = sphere_rule(k, 12);
            let total: f64 = rule.iter().map(|p| p.1).sum();
            assert!((total - area).abs() < 1e-12, "k={k}");
            let second: f64 = rule.iter().map(|p| p.1 * p.0[0] * p.0[0]).sum();
            assert!((second - area / (k + 1) as f64).abs() < 1e-10, "k={k}: {second}");
        }
    }

    #[test]
    fn profile_green_constant_and_cosine() {
        let l = 3.0;
        let one = ProfileGreen::new(l, 400, |_| 1.0).unwrap();
        for x in [-2.9, -1.234, 0.0, 0.77, 2.5] {
            assert!((one.value(x) - (l * l - x * x)).abs() < 1e-11);
            assert!((one.derivative(x) + 2.0 * x).abs() < 1e-11);
        }
        let k = PI / (2.0 * l);
        let cos = ProfileGreen::new(l, 400, |y| (k * y).cos()).unwrap();
        for x in [-2.9, -1.234, 0.0, 0.77, 2.5] {
            let exact = 8.0 * l * l / (PI * PI) * (k * x).cos();
            assert!((cos.value(x) - exact).abs() < 1e-9);
            assert!((cos.derivative(x) + 8.0 * l * l / (PI * PI) * k * (k * x).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn refuses_unbounded() {
        let kern = SlabKernel::new(4, 1.0).unwrap();
        let f = ProfileFn { f: |y: f64| 1.0 / y, sup: f64::INFINITY };
        assert!(matches!(green_apply(&kern, &f, &[0.0; 4]), Err(Error::Unbounded(_))));
    }
}
