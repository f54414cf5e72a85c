//! Modified Bessel functions of the second kind for the orders that appear in
//! the slab Green function, `ν = (d − 3)/2`.

use std::f64::consts::PI;

/// `(e^z K_ν(z), e^z K_{ν+1}(z))` for `ν = two_nu / 2`, `z > 0`.
pub fn k_pair_scaled(two_nu: u32, z: f64) -> (f64, f64) {
    debug_assert!(z > 0.0);
    if two_nu % 2 == 1 {
        // K_{1/2} = K_{-1/2} = sqrt(π/2z) e^{-z}
        let mut lo = (PI / (2.0 * z)).sqrt();
        let mut hi = lo * (1.0 + 1.0 / z);
        let mut mu = 1.5;
        for _ in 0..two_nu / 2 {
            let next = lo + 2.0 * mu / z * hi;
            lo = hi;
            hi = next;
            mu += 1.0;
        }
        (lo, hi)
    } else {
        let mut lo = k_int_scaled(0, z);
        let mut hi = k_int_scaled(1, z);
        for n in 1..=two_nu / 2 {
            let next = lo + 2.0 * n as f64 / z * hi;
            lo = hi;
            hi = next;
        }
        (lo, hi)
    }
}

/// `e^z K_n(z) = ∫₀^∞ exp(−z(cosh t − 1)) cosh(nt) dt` by the trapezoid rule,
/// which converges geometrically for this analytic integrand.
fn k_int_scaled(n: u32, z: f64) -> f64 {
    let h = 0.05;
    let nu = n as f64;
    let mut sum = 0.5;
    let mut t: f64 = h;
    loop {
        let e = -z * (t.cosh() - 1.0) + nu * t;
        if e < -45.0 && t > 1.0 {
            break;
        }
        sum += (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        t += h;
    }
    sum * h
}
