//! Stationary random environments with finite-range dependence.
//!
//! The drift is `b(x) = Σ_z φ(x − z) V_z` over the unit lattice, with
//! `φ(x) = Π_i ψ(x_i)` a product partition of unity of support radius `r_φ`
//! and `V_z` i.i.d. with `|V_z| ≤ ε` and `E[V_z·e₁] = λ`. Two points farther
//! apart than `2r_φ < R` see disjoint site sets, so the field has range-`R`
//! dependence by construction. A uniform random offset per seed restores
//! continuous-shift stationarity in law.
//!
//! Site data are never stored: every `V_z` is a hash of `(seed, z)`, and a
//! per-path [`SiteCache`] only avoids rehashing the current cell.

mod axioms;
mod profile;

pub use axioms::{verify_env_axioms, AxiomReport};
pub use profile::BumpProfile;

use crate::error::{ensure, Error, Result};
use crate::rng::{hash_words, mix64, tag, unit_from_bits};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionMode {
    Identity,
    Generated,
}

/// Law of the site vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteLaw {
    /// `V·e₁ = λ + (ε − |λ|)U`, transverse parts uniform, `|V| ≤ ε`.
    Uniform,
    /// `V ≡ λe₁` (zero variance).
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub dim: usize,
    /// ε
    pub drift_bound: f64,
    /// λ
    pub mean_drift: f64,
    /// η, only recorded for the perturbative regime `λ ≥ ε^{2−η}`.
    pub eta: f64,
    /// R
    pub range: f64,
    /// ν
    pub ellipticity: f64,
    /// r_φ
    pub bump_radius: f64,
    pub diffusion: DiffusionMode,
    pub site_law: SiteLaw,
    pub random_offset: bool,
}

impl EnvSpec {
    /// Uniform site law, identity diffusion, `r_φ = 0.75√d`, `R = 2r_φ + 10⁻³`.
    pub fn new(dim: usize, drift_bound: f64, mean_drift: f64) -> Self {
        let r = 0.75 * (dim as f64).sqrt();
        EnvSpec {
            dim,
            drift_bound,
            mean_drift,
            eta: 0.5,
            range: 2.0 * r + 1e-3,
            ellipticity: 1.0,
            bump_radius: r,
            diffusion: DiffusionMode::Identity,
            site_law: SiteLaw::Uniform,
            random_offset: true,
        }
    }

    /// Zero drift, identity diffusion.
    pub fn brownian(dim: usize) -> Self {
        EnvSpec { site_law: SiteLaw::Constant, ..EnvSpec::new(dim, 0.0, 0.0) }
    }

    /// `b ≡ λe₁`.
    pub fn constant(dim: usize, drift: f64) -> Self {
        EnvSpec { site_law: SiteLaw::Constant, ..EnvSpec::new(dim, drift.abs(), drift) }
    }

    pub fn with_range(mut self, range: f64, bump_radius: f64) -> Self {
        self.range = range;
        self.bump_radius = bump_radius;
        self
    }

    pub fn with_generated_diffusion(mut self, ellipticity: f64) -> Self {
        self.diffusion = DiffusionMode::Generated;
        self.ellipticity = ellipticity;
        self
    }

    pub fn with_offset(mut self, on: bool) -> Self {
        self.random_offset = on;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// The same spec with the mean drift reversed.
    pub fn reversed(&self) -> Self {
        EnvSpec { mean_drift: -self.mean_drift, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim as f64;
        ensure((1..=8).contains(&self.dim), "dim", || format!("dimension {} outside 1..=8", self.dim))?;
        ensure(self.drift_bound.is_finite() && self.drift_bound >= 0.0, "drift_bound", || {
            format!("ε = {} must be finite and non-negative", self.drift_bound)
        })?;
        ensure(self.mean_drift.abs() <= self.drift_bound, "mean_drift", || {
            format!("|λ| = {} exceeds ε = {}: the mean drift is unattainable under |b| ≤ ε", self.mean_drift.abs(), self.drift_bound)
        })?;
        ensure(self.ellipticity.is_finite() && self.ellipticity >= 1.0, "ellipticity", || format!("ν = {} must be ≥ 1", self.ellipticity))?;
        ensure(self.eta > 0.0 && self.eta < 1.0, "eta", || format!("η = {} must lie in (0, 1)", self.eta))?;
        ensure(self.bump_radius > 0.5 * d.sqrt() && self.bump_radius <= d.sqrt(), "bump_radius", || {
            format!("r_φ = {} must lie in (√d/2, √d] = ({}, {}] for a two-site partition of unity", self.bump_radius, 0.5 * d.sqrt(), d.sqrt())
        })?;
        ensure(self.bump_radius <= self.range / 2.0 - 1e-6, "range", || {
            format!("R = {} must satisfy r_φ ≤ R/2 − 10⁻⁶ (r_φ = {})", self.range, self.bump_radius)
        })?;
        Ok(())
    }

    /// `λ ≥ ε^{2−η}`, the perturbative regime of the ballistic example.
    pub fn in_perturbative_regime(&self) -> bool {
        self.mean_drift >= self.drift_bound.powf(2.0 - self.eta)
    }

    pub fn profile(&self) -> BumpProfile {
        BumpProfile::new(self.bump_radius / (self.dim as f64).sqrt())
    }

    /// Lipschitz constant of the drift, `ε·√d·sup Σ|ψ'|`.
    pub fn drift_lipschitz(&self) -> f64 {
        if self.site_law == SiteLaw::Constant {
            return 0.0;
        }
        self.drift_bound * (self.dim as f64).sqrt() * self.profile().slope_bound()
    }

    /// Lipschitz constant of the diffusion matrix (operator norm).
    pub fn diffusion_lipschitz(&self) -> f64 {
        match self.diffusion {
            DiffusionMode::Identity => 0.0,
            DiffusionMode::Generated => {
                let nu = self.ellipticity;
                (self.dim as f64).sqrt() * self.profile().slope_bound() * 0.5 * (nu - 1.0 / nu)
            }
        }
    }

    /// K̄: bounds both `|b| + |a|` and the joint Lipschitz constant.
    pub fn regularity_bound(&self) -> f64 {
        let sup = self.drift_bound + self.ellipticity;
        let lip = self.drift_lipschitz() + self.diffusion_lipschitz();
        sup.max(lip)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "eps = {}", self.drift_bound);
        let _ = writeln!(s, "lambda = {}", self.mean_drift);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "range = {}", self.range);
        let _ = writeln!(s, "nu = {}", self.ellipticity);
        let _ = writeln!(s, "bump_radius = {}", self.bump_radius);
        let _ = writeln!(
            s,
            "diffusion = {}",
            match self.diffusion {
                DiffusionMode::Identity => "identity",
                DiffusionMode::Generated => "generated",
            }
        );
        let _ = writeln!(
            s,
            "site_law = {}",
            match self.site_law {
                SiteLaw::Uniform => "uniform",
                SiteLaw::Constant => "constant",
            }
        );
        let _ = writeln!(s, "random_offset = {}", self.random_offset);
        s
    }

    /// Parses the `key = value` block written by [`to_text`](Self::to_text).
    /// Missing keys keep the defaults of [`EnvSpec::new`] for the given
    /// dimension; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::invalid("env", format!("line {}: expected `key = value`", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let dim = match pairs.iter().find(|(k, _)| k == "dim") {
            Some((_, v)) => parse_num::<usize>("dim", v)?,
            None => 1,
        };
        let mut spec = EnvSpec::new(dim, 0.0, 0.0);
        for (k, v) in &pairs {
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dim" => self.dim = parse_num("dim", value)?,
            "eps" => self.drift_bound = parse_num("eps", value)?,
            "lambda" => self.mean_drift = parse_num("lambda", value)?,
            "eta" => self.eta = parse_num("eta", value)?,
            "range" => self.range = parse_num("range", value)?,
            "nu" => self.ellipticity = parse_num("nu", value)?,
            "bump_radius" => self.bump_radius = parse_num("bump_radius", value)?,
            "diffusion" => {
                self.diffusion = match value {
                    "identity" => DiffusionMode::Identity,
                    "generated" => DiffusionMode::Generated,
                    _ => return Err(Error::invalid("diffusion", format!("unknown mode `{value}`"))),
                }
            }
            "site_law" => {
                self.site_law = match value {
                    "uniform" => SiteLaw::Uniform,
                    "constant" => SiteLaw::Constant,
                    _ => return Err(Error::invalid("site_law", format!("unknown law `{value}`"))),
                }
            }
            "random_offset" => self.random_offset = parse_num("random_offset", value)?,
            _ => return Err(Error::invalid("env", format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 10] = ["dim", "eps", "lambda", "eta", "range", "nu", "bump_radius", "diffusion", "site_law", "random_offset"];
}

fn parse_num<T: std::str::FromStr>(name: &'static str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::invalid(name, format!("cannot parse `{v}`")))
}

/// One realisation ω of the environment.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvSpec,
    seed: u64,
    offset: Vec<f64>,
    profile: BumpProfile,
    mirrored: bool,
}

pub fn sample_environment(spec: &EnvSpec, seed: u64) -> Result<Environment> {
    spec.validate()?;
    let offset = if spec.random_offset {
        (0..spec.dim).map(|i| unit_from_bits(hash_words(&[seed, tag::OFFSET, i as u64]))).collect()
    } else {
        vec![0.0; spec.dim]
    };
    Ok(Environment { profile: spec.profile(), spec: spec.clone(), seed, offset, mirrored: false })
}

/// Cached site data of the current lattice cell, owned by one path.
#[derive(Clone, Debug)]
pub struct SiteCache {
    cell: Vec<i64>,
    valid: bool,
    vectors: Vec<f64>,
    matrices: Vec<f64>,
}

impl SiteCache {
    pub fn new(dim: usize) -> Self {
        SiteCache { cell: vec![0; dim], valid: false, vectors: Vec::new(), matrices: Vec::new() }
    }
}

impl Environment {
    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn has_identity_diffusion(&self) -> bool {
        self.spec.diffusion == DiffusionMode::Identity
    }

    fn is_constant(&self) -> bool {
        self.spec.site_law == SiteLaw::Constant
    }

    /// The reflected environment `b′(x) = M b(Mx)`, `a′(x) = M a(Mx) M`, with
    /// `M` the reflection `x·e₁ ↦ −x·e₁`. Its law is that of the spec with
    /// λ reversed.
    pub fn mirrored(&self) -> Environment {
        Environment { mirrored: !self.mirrored, ..self.clone() }
    }

    /// Global lattice offset added to `x` before locating sites.
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Weight `φ_z(x)` of site `z` in the drift at `x`, so that
    /// `b(x) = Σ_z φ_z(x) V_z`.
    pub fn site_weight(&self, z: &[i64], x: &[f64]) -> f64 {
        let d = self.spec.dim;
        let mut cell = [0i64; 16];
        let mut w = [0f64; 16];
        self.locate(x, &mut cell[..d], &mut w[..d]);
        let mut p = 1.0;
        for i in 0..d {
            p *= match z[i] - cell[i] {
                0 => w[i],
                1 => 1.0 - w[i],
                _ => return 0.0,
            };
        }
        p
    }

    /// Site vector `V_z`.
    pub fn site_vector(&self, z: &[i64], out: &mut [f64]) {
        let d = self.spec.dim;
        let eps = self.spec.drift_bound;
        let lam = self.spec.mean_drift;
        if self.is_constant() {
            out.fill(0.0);
            out[0] = lam;
            return;
        }
        let h = self.site_key(tag::SITE, z);
        let u = |j: u64| 2.0 * unit_from_bits(mix64(h ^ j.wrapping_mul(0xD1B5_4A32_D192_ED03))) - 1.0;
        let v1 = lam + (eps - lam.abs()) * u(0);
        out[0] = v1;
        if d > 1 {
            let s = (eps * eps - v1 * v1).max(0.0).sqrt() / ((d - 1) as f64).sqrt();
            for (j, o) in out.iter_mut().enumerate().skip(1) {
                *o = s * u(j as u64);
            }
        }
    }

    /// Site matrix `A_z = Q diag(λ_i) Qᵀ` with `λ_i` uniform on `[1/ν, ν]`.
    pub fn site_matrix(&self, z: &[i64], out: &mut [f64]) {
        let d = self.spec.dim;
        let nu = self.spec.ellipticity;
        let h = self.site_key(tag::DIFFUSION, z);
        let mut k = 0u64;
        let mut next = || {
            k += 1;
            unit_from_bits(mix64(h ^ k.wrapping_mul(0xD1B5_4A32_D192_ED03)))
        };
        let eig: Vec<f64> = (0..d).map(|_| 1.0 / nu + (nu - 1.0 / nu) * next()).collect();
        let mut g = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let (u1, u2) = (next().max(1e-300), next());
                g[(i, j)] = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            }
        }
        let q = g.qr().q();
        let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * q.transpose();
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
    }

    fn site_key(&self, t: u64, z: &[i64]) -> u64 {
        let mut h = hash_words(&[self.seed, t]);
        for &zi in z {
            h = mix64(h ^ mix64(zi as u64));
        }
        h
    }

    /// Lattice coordinates of `x` (after reflection and offset), with the
    /// lower-site weight per axis.
    #[inline]
    fn locate(&self, x: &[f64], cell: &mut [i64], weights: &mut [f64]) {
        for i in 0..x.len() {
            let xi = if i == 0 && self.mirrored { -x[0] } else { x[i] };
            let y = xi + self.offset[i];
            let k = y.floor();
            cell[i] = k as i64;
            weights[i] = self.profile.weight(y - k);
        }
    }

    fn refresh(&self, cell: &[i64], cache: &mut SiteCache) {
        if cache.valid && cache.cell == cell {
            return;
        }
        let d = self.spec.dim;
        let corners = 1usize << d;
        cache.cell.copy_from_slice(cell);
        cache.vectors.resize(corners * d, 0.0);
        let generated = self.spec.diffusion == DiffusionMode::Generated;
        if generated {
            cache.matrices.resize(corners * d * d, 0.0);
        }
        let mut z = vec![0i64; d];
        for c in 0..corners {
            for i in 0..d {
                z[i] = cell[i] + ((c >> i) & 1) as i64;
            }
            self.site_vector(&z, &mut cache.vectors[c * d..(c + 1) * d]);
            if generated {
                self.site_matrix(&z, &mut cache.matrices[c * d * d..(c + 1) * d * d]);
            }
        }
        cache.valid = true;
    }

    /// Drift at `x` into `out`, using and updating the per-path cache.
    pub fn drift_into(&self, x: &[f64], cache: &mut SiteCache, out: &mut [f64]) {
        let d = self.spec.dim;
        if self.is_constant() {
            out.fill(0.0);
            out[0] = if self.mirrored { -self.spec.mean_drift } else { self.spec.mean_drift };
            return;
        }
        let mut cell = [0i64; 16];
        let mut w = [0f64; 16];
        self.locate(x, &mut cell[..d], &mut w[..d]);
        self.refresh(&cell[..d], cache);
        out.fill(0.0);
        for c in 0..(1usize << d) {
            let mut wc = 1.0;
            for i in 0..d {
                wc *= if (c >> i) & 1 == 0 { w[i] } else { 1.0 - w[i] };
            }
            if wc == 0.0 {
                continue;
            }
            let v = &cache.vectors[c * d..(c + 1) * d];
            for i in 0..d {
                out[i] += wc * v[i];
            }
        }
        if self.mirrored {
            out[0] = -out[0];
        }
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.dim];
        self.drift_into(x, &mut SiteCache::new(self.spec.dim), &mut out);
        out
    }

    /// Row-major diffusion matrix at `x` into `out` (`d·d` entries).
    pub fn diffusion_into(&self, x: &[f64], cache: &mut SiteCache, out: &mut [f64]) {
        let d = self.spec.dim;
        out.fill(0.0);
        if self.spec.diffusion == DiffusionMode::Identity {
            for i in 0..d {
                out[i * d + i] = 1.0;
            }
            return;
        }
        let mut cell = [0i64; 16];
        let mut w = [0f64; 16];
        self.locate(x, &mut cell[..d], &mut w[..d]);
        self.refresh(&cell[..d], cache);
        for c in 0..(1usize << d) {
            let mut wc = 1.0;
            for i in 0..d {
                wc *= if (c >> i) & 1 == 0 { w[i] } else { 1.0 - w[i] };
            }
            if wc == 0.0 {
                continue;
            }
            let m = &cache.matrices[c * d * d..(c + 1) * d * d];
            for k in 0..d * d {
                out[k] += wc * m[k];
            }
        }
        if self.mirrored {
            for k in 1..d {
                out[k] = -out[k];
                out[k * d] = -out[k * d];
            }
        }
    }

    pub fn diffusion_at(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.spec.dim;
        let mut out = vec![0.0; d * d];
        self.diffusion_into(x, &mut SiteCache::new(d), &mut out);
        DMatrix::from_row_slice(d, d, &out)
    }

    /// Symmetric square root `σ` of `a(x)`, row-major.
    pub fn sigma_into(&self, x: &[f64], cache: &mut SiteCache, a_buf: &mut [f64], out: &mut [f64]) {
        let d = self.spec.dim;
        self.diffusion_into(x, cache, a_buf);
        if d == 1 {
            out[0] = a_buf[0].sqrt();
            return;
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, a_buf));
        let v = &eig.eigenvectors;
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += v[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt() * v[(j, k)];
                }
                out[i * d + j] = s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(spec: &EnvSpec, seed: u64) -> Environment {
        sample_environment(spec, seed).unwrap()
    }

    #[test]
    fn constant_mode_is_constant() {
        let e = env(&EnvSpec::constant(3, 0.2), 1);
        for i in 0..50 {
            let x = [i as f64 * 0.37, -1.3 * i as f64, 0.1];
            assert_eq!(e.drift_at(&x), vec![0.2, 0.0, 0.0]);
        }
    }

    #[test]
    fn partition_of_unity_reproduces_equal_sites() {
        // With ε = λ every site vector equals εe₁ even under the uniform law.
        let e = env(&EnvSpec::new(2, 0.3, 0.3), 5);
        for i in 0..200 {
            let x = [i as f64 * 0.123 - 7.0, (i as f64 * 0.71).sin() * 5.0];
            let b = e.drift_at(&x);
            assert!((b[0] - 0.3).abs() < 1e-15 && b[1].abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unattainable_mean() {
        let err = sample_environment(&EnvSpec::new(2, 0.1, 0.2), 0).unwrap_err();
        assert!(matches!(err, Error::Invalid { name: "mean_drift", .. }));
    }

    #[test]
    fn rejects_bad_bump_radius() {
        let s = EnvSpec::new(2, 0.1, 0.0).with_range(3.0, 0.5);
        assert!(sample_environment(&s, 0).is_err());
        let s = EnvSpec::new(2, 0.1, 0.0).with_range(2.0, 1.2);
        assert!(sample_environment(&s, 0).is_err());
    }

    #[test]
    fn deterministic_and_bounded() {
        let s = EnvSpec::new(3, 0.1, 0.02);
        let a = env(&s, 9);
        let b = env(&s, 9);
        for i in 0..1000 {
            let x = [(i as f64 * 0.731).sin() * 20.0, i as f64 * 0.013, -(i as f64) * 0.029];
            let (u, v) = (a.drift_at(&x), b.drift_at(&x));
            assert_eq!(u, v);
            assert!(u.iter().map(|c| c * c).sum::<f64>().sqrt() <= 0.1 + 1e-15);
        }
    }

    #[test]
    fn site_mean_matches_lambda() {
        let e = env(&EnvSpec::new(1, 0.1, 0.01), 3);
        let mut v = [0.0];
        let xs: Vec<f64> = (0..10_000)
            .map(|z| {
                e.site_vector(&[z], &mut v);
                v[0]
            })
            .collect();
        let est = crate::stats::MCEstimate::from_samples(&xs);
        assert!(est.within(0.01, 3.0, 0.0), "{est:?}");
    }

    #[test]
    fn mirrored_field_reflects() {
        let e = env(&EnvSpec::new(2, 0.2, 0.05), 4);
        let m = e.mirrored();
        for i in 0..100 {
            let x = [i as f64 * 0.17 - 8.0, i as f64 * 0.05];
            let b = e.drift_at(&[-x[0], x[1]]);
            let bm = m.drift_at(&x);
            assert_eq!(bm[0], -b[0]);
            assert_eq!(bm[1], b[1]);
        }
    }

    #[test]
    fn generated_diffusion_is_elliptic_and_symmetric() {
        let s = EnvSpec::new(3, 0.1, 0.0).with_generated_diffusion(2.0);
        let e = env(&s, 11);
        for i in 0..1000 {
            let x = [i as f64 * 0.0371, (i as f64).cos() * 3.0, i as f64 * -0.011];
            let a = e.diffusion_at(&x);
            assert_eq!(a.clone() - a.transpose(), DMatrix::zeros(3, 3));
            let ev = a.symmetric_eigenvalues();
            for l in ev.iter() {
                assert!(*l >= 0.5 - 1e-12 && *l <= 2.0 + 1e-12, "{l}");
            }
        }
    }

    #[test]
    fn sigma_squares_to_a() {
        let s = EnvSpec::new(2, 0.1, 0.0).with_generated_diffusion(3.0);
        let e = env(&s, 2);
        let mut cache = SiteCache::new(2);
        let (mut a, mut sg) = ([0.0; 4], [0.0; 4]);
        e.sigma_into(&[0.3, 1.7], &mut cache, &mut a, &mut sg);
        let sm = DMatrix::from_row_slice(2, 2, &sg);
        let am = DMatrix::from_row_slice(2, 2, &a);
        assert!((&sm * &sm - am).norm() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let s = EnvSpec::new(4, 0.05, 0.01).with_generated_diffusion(1.5).with_offset(false);
        let t = s.to_text();
        assert_eq!(EnvSpec::from_text(&t).unwrap(), s);
        assert!(EnvSpec::from_text("dim = 2\nbogus = 1\n").is_err());
    }

    #[test]
    fn regularity_bound_dominates() {
        let s = EnvSpec::new(2, 0.2, 0.0);
        assert!(s.regularity_bound() >= s.drift_bound);
        assert!(s.drift_lipschitz() > 0.0);
    }
}
