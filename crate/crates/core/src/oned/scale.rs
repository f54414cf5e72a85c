use crate::env::{DiffusionMode, Environment, SiteCache};
use crate::error::{ensure, Result};

/// Scale function `s(x) = ∫₀ˣ exp(−∫₀ʸ 2b/a) dy` of a one-dimensional
/// environment, tabulated on `[−X, X]` by nested composite Simpson.
#[derive(Clone, Debug)]
pub struct ScaleProfile {
    env: Environment,
    step: f64,
    half: usize,
    /// `B(x) = ∫₀ˣ 2b/a` at the nodes `j·h`, `j ∈ [−half, half]`.
    b_int: Vec<f64>,
    s: Vec<f64>,
    /// `∫ exp(−(B(y) − B(x_k))) dy` over the cell `[x_k, x_{k+1}]`.
    cell: Vec<f64>,
    lip_f: f64,
    sup_f: f64,
}

impl ScaleProfile {
    pub fn new(env: &Environment, range: f64, quad_step: f64) -> Result<Self> {
        ensure(env.dim() == 1, "env", || format!("scale functions need d = 1, got d = {}", env.dim()))?;
        ensure(range > 0.0 && quad_step > 0.0, "quad_step", || "range and step must be positive".into())?;
        let half = (range / quad_step).ceil() as usize;
        let h = quad_step;
        let mut cache = SiteCache::new(1);
        let mut f = |y: f64| two_b_over_a(env, y, &mut cache);
        let mut b_int = vec![0.0; 2 * half + 1];
        let mut s = vec![0.0; 2 * half + 1];
        let mut cell = vec![0.0; 2 * half];
        for dir in [1.0f64, -1.0] {
            let hs = dir * h;
            let mut f0 = f(0.0);
            for j in 0..half {
                let x0 = dir * (j as f64) * h;
                let fq = f(x0 + 0.25 * hs);
                let fm = f(x0 + 0.5 * hs);
                let f1 = f(x0 + hs);
                let (i0, i1) = index_pair(half, j, dir);
                let b0 = b_int[i0];
                let bm = b0 + (0.5 * hs / 6.0) * (f0 + 4.0 * fq + fm);
                let b1 = b0 + (hs / 6.0) * (f0 + 4.0 * fm + f1);
                b_int[i1] = b1;
                s[i1] = s[i0] + (hs / 6.0) * ((-b0).exp() + 4.0 * (-bm).exp() + (-b1).exp());
                let (lo, b_lo, b_hi) = if dir > 0.0 { (i0, b0, b1) } else { (i1, b1, b0) };
                cell[lo] = (h / 6.0) * (1.0 + 4.0 * (-(bm - b_lo)).exp() + (-(b_hi - b_lo)).exp());
                f0 = f1;
            }
        }
        let spec = env.spec();
        let nu = spec.ellipticity;
        let (lip_f, sup_f) = match spec.diffusion {
            DiffusionMode::Identity => (2.0 * spec.drift_lipschitz(), 2.0 * spec.drift_bound),
            DiffusionMode::Generated => {
                (2.0 * (spec.drift_lipschitz() * nu + spec.drift_bound * nu * nu * spec.diffusion_lipschitz()), 2.0 * spec.drift_bound * nu)
            }
        };
        Ok(ScaleProfile { env: env.clone(), step: h, half, b_int, s, cell, lip_f, sup_f })
    }

    pub fn range(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `∫₀ˣ 2b/a` on a node multiple of the step, or by a partial Simpson
    /// cell otherwise.
    pub fn potential(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// `s(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// `log(s(b) − s(a))` for `a < b`, summed cell by cell so that far
    /// increments keep their relative accuracy.
    pub fn log_increment(&self, a: f64, b: f64) -> f64 {
        assert!(a < b, "empty interval [{a}, {b}]");
        let node_up = |x: f64| {
            let r = x / self.step;
            if (r - r.round()).abs() < 1e-9 {
                r.round()
            } else {
                r.ceil()
            }
        };
        let node_down = |x: f64| {
            let r = x / self.step;
            if (r - r.round()).abs() < 1e-9 {
                r.round()
            } else {
                r.floor()
            }
        };
        let (ja, jb) = (node_up(a), node_down(b));
        let mut terms = Vec::new();
        if ja > jb {
            terms.push(self.log_partial(a, b));
        } else {
            let (xa, xb) = (ja * self.step, jb * self.step);
            if xa > a {
                terms.push(self.log_partial(a, xa));
            }
            let (ka, kb) = ((self.half as i64 + ja as i64) as usize, (self.half as i64 + jb as i64) as usize);
            for k in ka..kb {
                terms.push(-self.b_int[k] + self.cell[k].ln());
            }
            if b > xb {
                terms.push(self.log_partial(xb, b));
            }
        }
        log_sum_exp(&terms)
    }

    /// Simpson on `[u, v]` inside one cell, in log form.
    fn log_partial(&self, u: f64, v: f64) -> f64 {
        let (bu, bm, bv) = (self.potential(u), self.potential(0.5 * (u + v)), self.potential(v));
        -bu + ((v - u) / 6.0 * (1.0 + 4.0 * (-(bm - bu)).exp() + (-(bv - bu)).exp())).ln()
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        assert!(x.abs() <= self.range() * (1.0 + 1e-12), "x = {x} outside the tabulated range");
        let r = x / self.step;
        let j = r.trunc();
        let node = (self.half as i64 + j as i64) as usize;
        let (b0, s0) = (self.b_int[node], self.s[node]);
        let x0 = j * self.step;
        let dx = x - x0;
        if dx == 0.0 {
            return (b0, s0);
        }
        let mut cache = SiteCache::new(1);
        let mut f = |y: f64| two_b_over_a(&self.env, y, &mut cache);
        let (fa, fq, fm, fb) = (f(x0), f(x0 + 0.25 * dx), f(x0 + 0.5 * dx), f(x));
        let bm = b0 + (0.5 * dx / 6.0) * (fa + 4.0 * fq + fm);
        let b1 = b0 + (dx / 6.0) * (fa + 4.0 * fm + fb);
        (b1, s0 + (dx / 6.0) * ((-b0).exp() + 4.0 * (-bm).exp() + (-b1).exp()))
    }

    /// Bound on `|s(x) − s_h(x)|` from the Lipschitz constant `K` of `2b/a`:
    /// the potential error is at most `(5/12)K·h·|x|`, which perturbs `s` by
    /// at most `|s|·(e^{ΔB} − 1)`, plus the outer rule's own error.
    pub fn error_bound(&self, x: f64) -> f64 {
        let db = self.potential_error_bound(x);
        let lo = self.index(x.min(0.0));
        let hi = self.index(x.max(0.0));
        let emax = self.b_int[lo..=hi].iter().map(|b| (-b).exp()).fold(0.0, f64::max);
        let k_e = self.sup_f * emax;
        self.value(x).abs() * db.exp_m1() + (5.0 / 12.0) * k_e * self.step * x.abs()
    }

    pub fn potential_error_bound(&self, x: f64) -> f64 {
        (5.0 / 12.0) * self.lip_f * self.step * x.abs()
    }

    fn index(&self, x: f64) -> usize {
        (self.half as i64 + (x / self.step).trunc() as i64) as usize
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn index_pair(half: usize, j: usize, dir: f64) -> (usize, usize) {
    if dir > 0.0 {
        (half + j, half + j + 1)
    } else {
        (half - j, half - j - 1)
    }
}

#[inline]
fn two_b_over_a(env: &Environment, y: f64, cache: &mut SiteCache) -> f64 {
    let mut b = [0.0];
    env.drift_into(&[y], cache, &mut b);
    if env.has_identity_diffusion() {
        2.0 * b[0]
    } else {
        let mut a = [0.0];
        env.diffusion_into(&[y], cache, &mut a);
        2.0 * b[0] / a[0]
    }
}

/// `ρ_L = s(L)/(−s(−L))`.
pub fn rho_l_exact(profile: &ScaleProfile, l: f64) -> f64 {
    assert!(l > 0.0);
    profile.value(l) / (-profile.value(-l))
}

/// `log ρ_L`, computed without forming the ratio.
pub fn log_rho_l(profile: &ScaleProfile, l: f64) -> f64 {
    profile.value(l).ln() - (-profile.value(-l)).ln()
}

/// Scale function of `env` evaluated at `x`.
pub fn scale_function(profile: &ScaleProfile, x: f64) -> f64 {
    profile.value(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_environment, EnvSpec};

    #[test]
    fn brownian_scale_is_identity() {
        let e = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
        let p = ScaleProfile::new(&e, 5.0, 1e-3).unwrap();
        for x in [-4.2, -1.0, 0.0, 0.3337, 5.0] {
            assert!((p.value(x) - x).abs() < 1e-12);
        }
        assert_eq!(rho_l_exact(&p, 3.0), 1.0);
    }

    #[test]
    fn constant_drift_closed_form() {
        let beta = 0.1;
        let e = sample_environment(&EnvSpec::constant(1, beta), 0).unwrap();
        let p = ScaleProfile::new(&e, 6.0, 1e-3).unwrap();
        let l = 5.0;
        let exact = (1.0 - (-2.0 * beta * l).exp()) / (2.0 * beta);
        assert!((p.value(l) - exact).abs() < 1e-8);
        assert!((rho_l_exact(&p, l) - (-1.0f64).exp()).abs() < 1e-6);
        // Off-grid evaluation.
        let x = 2.34567;
        assert!((p.value(x) - (1.0 - (-2.0 * beta * x).exp()) / (2.0 * beta)).abs() < 1e-10);
    }

    #[test]
    fn mirror_inverts_rho() {
        let spec = EnvSpec::new(1, 0.2, 0.05);
        let e = sample_environment(&spec, 12).unwrap();
        let p = ScaleProfile::new(&e, 10.0, 1e-3).unwrap();
        let pm = ScaleProfile::new(&e.mirrored(), 10.0, 1e-3).unwrap();
        let r = rho_l_exact(&p, 8.0);
        let rm = rho_l_exact(&pm, 8.0);
        assert!((r * rm - 1.0).abs() < 1e-12, "{r} {rm}");
    }

    #[test]
    fn far_increments_keep_precision() {
        let beta = 0.1;
        let e = sample_environment(&EnvSpec::constant(1, beta), 0).unwrap();
        let p = ScaleProfile::new(&e, 200.0, 1e-3).unwrap();
        let exact = |a: f64, b: f64| -2.0 * beta * a + ((1.0 - (-2.0 * beta * (b - a)).exp()) / (2.0 * beta)).ln();
        for (a, b) in [(180.0, 183.0), (-183.0, -180.0), (-1.0, 2.0), (0.12345, 0.5), (7.0001, 7.0004)] {
            assert!((p.log_increment(a, b) - exact(a, b)).abs() < 1e-9, "[{a}, {b}]");
        }
        let x = 2.5;
        assert!((p.log_increment(0.0, x) - p.value(x).ln()).abs() < 1e-12);
    }

    #[test]
    fn strictly_increasing() {
        let e = sample_environment(&EnvSpec::new(1, 0.3, -0.1), 3).unwrap();
        let p = ScaleProfile::new(&e, 10.0, 1e-3).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..1000 {
            let v = p.value(-10.0 + 0.02 * i as f64);
            assert!(v > last);
            last = v;
        }
        assert!(p.error_bound(5.0) > 0.0);
    }
}
