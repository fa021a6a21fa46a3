//! Rate conventions.
//!
//! Rates are quoted in the literature as `x/2π` in MHz. Internally every rate
//! is an angular frequency in rad/s and every duration is in seconds.

use std::f64::consts::PI;

/// Converts a `value/2π` rate given in MHz to an angular frequency in rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    mhz * 2.0 * PI * 1.0e6
}

/// Inverse of [`mhz_to_angular`].
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1.0e6)
}

pub fn seconds_to_ns(t: f64) -> f64 {
    t * 1.0e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_mhz_round_trip() {
        let w = mhz_to_angular(10.0);
        assert!((w - 2.0 * PI * 1.0e7).abs() < 1e-6);
        assert!((angular_to_mhz(w) - 10.0).abs() < 1e-12);
    }
}
