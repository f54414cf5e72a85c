use std::f64::consts::PI;

/// One-dimensional partition-of-unity profile on the unit lattice.
///
/// `θ(t) = cos²(πt/(2w))` on `|t| < w`, normalised so that
/// `ψ(t) + ψ(t − 1) = 1` on `[0, 1)`. With `w ∈ (1/2, 1]` exactly the two
/// neighbouring sites carry weight at any point.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpProfile {
    halfwidth: f64,
    slope_bound: f64,
}

impl BumpProfile {
    pub fn new(halfwidth: f64) -> Self {
        assert!(halfwidth > 0.5 && halfwidth <= 1.0, "halfwidth must lie in (1/2, 1]");
        let mut p = BumpProfile { halfwidth, slope_bound: 0.0 };
        let n = 20_000;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            m = m.max(p.derivative(i as f64 / n as f64).abs());
        }
        // ψ'(t) and the neighbour's derivative have equal magnitude.
        p.slope_bound = 2.0 * m * (1.0 + 1e-6);
        p
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    /// `sup_t Σ_k |ψ'(t − k)|`.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    fn theta(&self, t: f64) -> f64 {
        if t.abs() >= self.halfwidth {
            0.0
        } else {
            let c = (PI * t / (2.0 * self.halfwidth)).cos();
            c * c
        }
    }

    fn theta_prime(&self, t: f64) -> f64 {
        if t.abs() >= self.halfwidth {
            0.0
        } else {
            -(PI / (2.0 * self.halfwidth)) * (PI * t / self.halfwidth).sin()
        }
    }

    /// Weight of the lower site at fractional position `f ∈ [0, 1)`.
    #[inline]
    pub fn weight(&self, f: f64) -> f64 {
        let t0 = self.theta(f);
        let t1 = self.theta(f - 1.0);
        t0 / (t0 + t1)
    }

    /// Derivative of [`weight`](Self::weight) in `f`.
    pub fn derivative(&self, f: f64) -> f64 {
        let t0 = self.theta(f);
        let t1 = self.theta(f - 1.0);
        let d0 = self.theta_prime(f);
        let d1 = self.theta_prime(f - 1.0);
        let s = t0 + t1;
        (d0 * t1 - t0 * d1) / (s * s)
    }
}
