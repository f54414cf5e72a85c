use super::bessel::k_pair_scaled;
use crate::error::{ensure, Error, Result};
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Brownian motion (generator `½Δ`) killed on leaving `{|x₁| < L}`.
#[derive(Clone, Debug, Serialize)]
pub struct SlabKernel {
    dim: usize,
    half_width: f64,
    tol: f64,
    gamma_d: f64,
}

/// Green function value with the truncation bound actually achieved.
#[derive(Clone, Copy, Debug)]
pub struct GreenValue {
    pub value: f64,
    pub bound: f64,
    pub eigen_route: bool,
}

const SINGULAR: f64 = 1e-12;

impl SlabKernel {
    pub fn new(dim: usize, half_width: f64) -> Result<Self> {
        ensure((1..=8).contains(&dim), "dim", || format!("dimension {dim} outside 1..=8"))?;
        ensure(half_width > 0.0 && half_width.is_finite(), "L", || "slab half-width must be positive".into())?;
        let gamma_d = if dim >= 3 { gamma(dim as f64 / 2.0 - 1.0) / (2.0 * PI.powf(dim as f64 / 2.0)) } else { f64::NAN };
        Ok(SlabKernel { dim, half_width, tol: 1e-10, gamma_d })
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        ensure(tol > 0.0 && tol < 1.0, "tol", || "tolerance must lie in (0, 1)".into())?;
        self.tol = tol;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `γ_d`, with `∫₀^∞ (2πt)^{−d/2} e^{−r²/2t} dt = γ_d r^{2−d}`.
    pub fn gamma_d(&self) -> f64 {
        self.gamma_d
    }

    pub fn free_green(&self, r: f64) -> f64 {
        self.gamma_d * r.powi(2 - self.dim as i32)
    }

    fn check_point(&self, name: &'static str, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(name, format!("point has {} coordinates, expected {}", x.len(), self.dim)));
        }
        if !(x[0].abs() <= self.half_width) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(name, format!("x₁ = {} outside the closed slab", x[0])));
        }
        Ok(())
    }

    fn check_green_dim(&self) -> Result<()> {
        ensure(self.dim >= 4, "dim", || format!("slab Green function needs d ≥ 4, got {}", self.dim))
    }

    pub fn heat_kernel(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        ensure(t > 0.0 && t.is_finite(), "t", || format!("time {t} must be positive"))?;
        self.check_point("x", x)?;
        self.check_point("y", y)?;
        let m = (self.dim - 1) as f64;
        let rho2 = transverse_dist2(x, y);
        let transverse = (2.0 * PI * t).powf(-m / 2.0) * (-rho2 / (2.0 * t)).exp();
        Ok(transverse * self.heat_1d(t, x[0], y[0]))
    }

    /// Dirichlet heat kernel of `½ d²/dx²` on `(−L, L)`.
    pub fn heat_1d(&self, t: f64, x1: f64, y1: f64) -> f64 {
        let l = self.half_width;
        let u = (x1 - y1).abs();
        let v = x1 + y1;
        if t <= l * l {
            let norm = 1.0 / (2.0 * PI * t).sqrt();
            let g = |s: f64| norm * (-(s * s) / (2.0 * t)).exp();
            let reach = (2.0 * t * 40.0).sqrt();
            let k_max = ((reach + 2.0 * l) / (4.0 * l)).ceil() as i64 + 1;
            let mut sum = 0.0;
            for k in -k_max..=k_max {
                let s = 4.0 * k as f64 * l;
                sum += g(u - s) - g(v - 2.0 * l - s);
            }
            sum
        } else {
            let mut sum = 0.0;
            for n in 1.. {
                let a = n as f64 * PI / (2.0 * l);
                let decay = (-a * a * t / 2.0).exp();
                sum += decay * ((a * u).cos() - (a * (v + 2.0 * l)).cos()) / (2.0 * l);
                if decay < 1e-18 {
                    break;
                }
            }
            sum
        }
    }

    pub fn green_function(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.green_value(x, y)?.value)
    }

    pub fn green_value(&self, x: &[f64], y: &[f64]) -> Result<GreenValue> {
        self.check_green_dim()?;
        self.check_point("x", x)?;
        self.check_point("y", y)?;
        let rho2 = transverse_dist2(x, y);
        let d1 = x[0] - y[0];
        ensure(rho2 + d1 * d1 >= SINGULAR * SINGULAR, "y", || "y coincides with the pole x".into())?;
        let rho = rho2.sqrt();
        if rho >= 0.5 * self.half_width {
            let (value, bound) = self.eigen_sum(x[0], y[0], rho, false);
            Ok(GreenValue { value: value[0], bound, eigen_route: true })
        } else {
            let (value, bound) = self.image_sum(x[0], y[0], rho2);
            Ok(GreenValue { value, bound, eigen_route: false })
        }
    }

    /// `∇ₓ g(x, y)`.
    pub fn green_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_green_dim()?;
        self.check_point("x", x)?;
        self.check_point("y", y)?;
        let rho2 = transverse_dist2(x, y);
        let d1 = x[0] - y[0];
        ensure(rho2 + d1 * d1 >= SINGULAR * SINGULAR, "y", || "y coincides with the pole x".into())?;
        let rho = rho2.sqrt();
        let (dx1, drho) = if rho >= 0.5 * self.half_width {
            let (v, _) = self.eigen_sum(x[0], y[0], rho, true);
            (v[1], v[2])
        } else {
            self.image_gradient(x[0], y[0], rho)
        };
        let mut grad = vec![0.0; self.dim];
        grad[0] = dx1;
        if rho > 0.0 {
            for i in 1..self.dim {
                grad[i] = drho * (x[i] - y[i]) / rho;
            }
        }
        Ok(grad)
    }

    /// Green function of the image series in the variables `(x₁, y₁, ρ)`,
    /// evaluated without input checks. Used by quadrature.
    pub(crate) fn green_reduced(&self, x1: f64, y1: f64, rho: f64) -> f64 {
        if rho >= 0.5 * self.half_width {
            self.eigen_sum(x1, y1, rho, false).0[0]
        } else {
            self.image_sum(x1, y1, rho * rho).0
        }
    }

    fn profile(&self, rho2: f64) -> Profile {
        Profile { gamma: self.gamma_d, m: (self.dim as f64 - 2.0) / 2.0, rho2 }
    }

    fn tail_bound(&self, p: &Profile, a0: f64) -> f64 {
        let h = 4.0 * self.half_width;
        2.0 * 7.0 / 5760.0 * h * h * h * p.d3(a0).abs()
    }

    fn image_count(&self, p: &Profile, u: f64, v: f64) -> (i64, f64) {
        let l = self.half_width;
        let mut k = 2i64;
        loop {
            let a = 4.0 * l * (k as f64 + 0.5);
            let bound =
                self.tail_bound(p, a - u) + self.tail_bound(p, a + u) + self.tail_bound(p, a + 2.0 * l - v) + self.tail_bound(p, a - 2.0 * l + v);
            if bound <= self.tol || k >= 1 << 14 {
                return (k, bound);
            }
            k = (k as f64 * 1.5).ceil() as i64;
        }
    }

    fn image_sum(&self, x1: f64, y1: f64, rho2: f64) -> (f64, f64) {
        let l = self.half_width;
        let p = self.profile(rho2);
        let u = (x1 - y1).abs();
        let v = x1 + y1;
        let (k_max, bound) = self.image_count(&p, u, v);
        let mut sum = 0.0;
        for k in -k_max..=k_max {
            let s = 4.0 * k as f64 * l;
            sum += p.f(u - s) - p.f(v - 2.0 * l - s);
        }
        let a = 4.0 * l * (k_max as f64 + 0.5);
        let h = 4.0 * l;
        let tail = |a0: f64| p.integral(a0) / h + h / 24.0 * p.d1(a0);
        sum += tail(a - u) + tail(a + u) - tail(a + 2.0 * l - v) - tail(a - 2.0 * l + v);
        (sum, bound)
    }

    fn image_gradient(&self, x1: f64, y1: f64, rho: f64) -> (f64, f64) {
        let l = self.half_width;
        let p = self.profile(rho * rho);
        let w = x1 - y1;
        let v = x1 + y1;
        let (k_max, _) = self.image_count(&p, w.abs(), v);
        let (mut dx, mut dr) = (0.0, 0.0);
        for k in -k_max..=k_max {
            let s = 4.0 * k as f64 * l;
            let (sp, sn) = (w - s, v - 2.0 * l - s);
            dx += p.d1(sp) - p.d1(sn);
            dr += p.d_rho(sp, rho) - p.d_rho(sn, rho);
        }
        let a = 4.0 * l * (k_max as f64 + 0.5);
        let h = 4.0 * l;
        // (∂T/∂a₀, ∂T/∂ρ) for the tail T(a₀) = J(a₀)/h + (h/24)F′(a₀).
        let tail = |a0: f64| {
            let da = -p.f(a0) / h + h / 24.0 * p.d2(a0);
            let dr = p.integral_d_rho(a0, rho) / h + h / 24.0 * p.d1_d_rho(a0, rho);
            (da, dr)
        };
        for (a0, sign_a, sign) in [(a - w, -1.0, 1.0), (a + w, 1.0, 1.0), (a + 2.0 * l - v, -1.0, -1.0), (a - 2.0 * l + v, 1.0, -1.0)] {
            let (da, d_r) = tail(a0);
            dx += sign * sign_a * da;
            dr += sign * d_r;
        }
        (dx, dr)
    }

    /// `Σ φₙ(x₁)φₙ(y₁)Tₙ(ρ)` and, when asked, its `x₁` and `ρ` derivatives.
    fn eigen_sum(&self, x1: f64, y1: f64, rho: f64, derivatives: bool) -> ([f64; 3], f64) {
        let l = self.half_width;
        let m = (self.dim - 1) as f64;
        let two_nu = (self.dim - 3) as u32;
        let nu = two_nu as f64 / 2.0;
        let pref = 2.0 * (2.0 * PI).powf(-m / 2.0);
        let norm = 1.0 / l;
        let step = PI / (2.0 * l);
        let mut acc = [0.0; 3];
        let mut bound = 0.0;
        for n in 1usize.. {
            let a = n as f64 * step;
            let z = a * rho;
            let (k0, k1) = k_pair_scaled(two_nu, z);
            let decay = (-z).exp();
            let t = pref * (a / rho).powf(nu) * k0 * decay;
            let (sx, sy) = ((a * (x1 + l)).sin(), (a * (y1 + l)).sin());
            acc[0] += norm * sx * sy * t;
            let mut size = t * norm;
            if derivatives {
                let cx = (a * (x1 + l)).cos();
                let dt = -pref * a * (a / rho).powf(nu) * k1 * decay;
                acc[1] += norm * a * cx * sy * t;
                acc[2] += norm * sx * sy * dt;
                size = size.max(norm * a * t).max(norm * dt.abs());
            }
            let q = (-step * rho).exp() * ((n + 1) as f64 / n as f64).powf(nu + 2.0);
            if n >= 2 && q < 1.0 {
                bound = size * q / (1.0 - q);
                if bound < 0.1 * self.tol || size == 0.0 {
                    break;
                }
            }
            if n > 100_000 {
                break;
            }
        }
        (acc, bound)
    }
}

fn transverse_dist2(x: &[f64], y: &[f64]) -> f64 {
    x[1..].iter().zip(&y[1..]).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `F(s) = γ(ρ² + s²)^{−m}` with `m = (d − 2)/2`.
struct Profile {
    gamma: f64,
    m: f64,
    rho2: f64,
}

impl Profile {
    fn q(&self, s: f64) -> f64 {
        self.rho2 + s * s
    }

    fn f(&self, s: f64) -> f64 {
        self.gamma * self.q(s).powf(-self.m)
    }

    fn d1(&self, s: f64) -> f64 {
        -2.0 * self.m * self.gamma * s * self.q(s).powf(-self.m - 1.0)
    }

    fn d2(&self, s: f64) -> f64 {
        let q = self.q(s);
        -2.0 * self.m * self.gamma * (q.powf(-self.m - 1.0) - 2.0 * (self.m + 1.0) * s * s * q.powf(-self.m - 2.0))
    }

    fn d3(&self, s: f64) -> f64 {
        let q = self.q(s);
        let m = self.m;
        -2.0 * m * self.gamma * (m + 1.0) * s * q.powf(-m - 2.0) * (-6.0 + 4.0 * (m + 2.0) * s * s / q)
    }

    fn d_rho(&self, s: f64, rho: f64) -> f64 {
        -2.0 * self.m * self.gamma * rho * self.q(s).powf(-self.m - 1.0)
    }

    fn d1_d_rho(&self, s: f64, rho: f64) -> f64 {
        4.0 * self.m * (self.m + 1.0) * self.gamma * s * rho * self.q(s).powf(-self.m - 2.0)
    }

    /// Coefficients `c_j` with `∫_{a₀}^∞ F = γ Σ_j c_j ρ^{2j} a₀^{1−2m−2j}`.
    fn series(&self, a0: f64, mut term: impl FnMut(usize, f64, f64)) {
        let r = self.rho2 / (a0 * a0);
        let mut binom = 1.0;
        let mut pow = a0.powf(1.0 - 2.0 * self.m);
        for j in 0..200 {
            let c = binom / (2.0 * self.m + 2.0 * j as f64 - 1.0);
            term(j, c, pow);
            if (c * pow).abs() < 1e-18 * a0.powf(1.0 - 2.0 * self.m) {
                break;
            }
            binom *= -(self.m + j as f64) / (j as f64 + 1.0);
            pow *= r;
        }
    }

    fn integral(&self, a0: f64) -> f64 {
        let mut sum = 0.0;
        self.series(a0, |_, c, pow| sum += c * pow);
        self.gamma * sum
    }

    fn integral_d_rho(&self, a0: f64, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        self.series(a0, |j, c, pow| sum += c * pow * 2.0 * j as f64 / rho);
        self.gamma * sum
    }
}
