//! One-blob encoding with a quartic (biweight) kernel.

use glam::Vec3;

/// Antiderivative of the normalized quartic kernel on `s` in `[-1, 1]`.
#[inline]
fn quartic_cdf(s: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    let s3 = s * s * s;
    0.5 + 15.0 / 16.0 * (s - 2.0 / 3.0 * s3 + 0.2 * s3 * s * s)
}

#[inline]
fn bin_mass(x: f64, lo: f64, hi: f64, r: f64) -> f64 {
    quartic_cdf((hi - x) / r) - quartic_cdf((lo - x) / r)
}

/// Spreads `x` in `[0,1]` over `out.len()` bins. Kernel mass falling outside
/// the unit interval is dropped.
pub fn oneblob_encode(x: f32, out: &mut [f32]) {
    let k = out.len();
    debug_assert!(k >= 2);
    let x = (x as f64).clamp(0.0, 1.0);
    let r = 1.0 / k as f64;
    for (b, o) in out.iter_mut().enumerate() {
        *o = bin_mass(x, b as f64 * r, (b + 1) as f64 * r, r) as f32;
    }
}

/// Periodic variant: bins wrap around, so the total is always one.
pub fn oneblob_encode_wrapped(x: f32, out: &mut [f32]) {
    let k = out.len();
    debug_assert!(k >= 2);
    let x = (x as f64).rem_euclid(1.0);
    let r = 1.0 / k as f64;
    for (b, o) in out.iter_mut().enumerate() {
        let (lo, hi) = (b as f64 * r, (b + 1) as f64 * r);
        *o = (bin_mass(x - 1.0, lo, hi, r) + bin_mass(x, lo, hi, r) + bin_mass(x + 1.0, lo, hi, r)) as f32;
    }
}

/// `(theta / pi, phi / 2pi + 0.5)` of a unit vector.
pub fn dir_to_spherical(v: Vec3) -> [f32; 2] {
    let theta = v.z.clamp(-1.0, 1.0).acos();
    // Azimuth is undefined at the poles; +0.0 avoids atan2(-0, -0) = -pi there.
    let phi = (v.y + 0.0).atan2(v.x + 0.0);
    [
        theta / std::f32::consts::PI,
        (phi / std::f32::consts::TAU + 0.5).clamp(0.0, 1.0),
    ]
}
