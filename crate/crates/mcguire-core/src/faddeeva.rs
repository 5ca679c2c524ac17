//! The Faddeeva function w(z) = e^{-z²} erfc(-iz), the one special
//! function the oscillatory primitives stand on.
//!
//! Two regimes cover the upper half-plane:
//!
//! * moderate |z|: Weideman's rational expansion (64 terms), whose
//!   coefficients are the DFT of a sampled Gaussian and are computed once
//!   at first use;
//! * |z| ≥ 12: the Laplace continued fraction, which converges rapidly
//!   away from the origin.
//!
//! The lower half-plane goes through the reflection
//! w(z) = 2 e^{-z²} - w(-z). The e^{-z²} factor makes the reflected value
//! intrinsically sensitive to rounding in z² once |z| is large; callers
//! that need the lower half-plane at |z| ≫ 40 should restructure around
//! the asymptotic series instead (as the pole-integral code does).

use std::sync::LazyLock;

use crate::C64;

pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Number of terms in the Weideman expansion.
const WEIDEMAN_N: usize = 64;

struct WeidemanTable {
    /// Scale parameter L = √(N/√2).
    scale: f64,
    /// Polynomial coefficients, highest degree first.
    coeffs: [f64; WEIDEMAN_N],
}

static WEIDEMAN: LazyLock<WeidemanTable> = LazyLock::new(|| {
    let n = WEIDEMAN_N;
    let m2 = 2 * n;
    let scale = (n as f64 / std::f64::consts::SQRT_2).sqrt();
    // Sample f(θ) = e^{-t²}(L² + t²) with t = L·tan(θ/2) on the uniform
    // grid θ_k = kπ/N, k = -N+1..N-1, with one zero prepended; the real
    // part of the shifted DFT yields the expansion coefficients.
    let mut samples = vec![0.0f64; m2];
    samples[0] = 0.0;
    for (idx, k) in (-(n as i64 - 1)..=(n as i64 - 1)).enumerate() {
        let theta = k as f64 * std::f64::consts::PI / n as f64;
        let t = scale * (theta / 2.0).tan();
        samples[idx + 1] = (-t * t).exp() * (scale * scale + t * t);
    }
    // fftshift: rotate so that the second half comes first.
    samples.rotate_left(n);
    let mut coeffs = [0.0f64; WEIDEMAN_N];
    // Direct DFT is plenty: 128 × 64 multiplies, once per process.
    for j in 1..=n {
        let mut acc = 0.0;
        for (m, &s) in samples.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j * m) as f64 / m2 as f64;
            acc += s * angle.cos();
        }
        // Highest degree first: coefficient j of the DFT lands at
        // position n - j (numpy's flipud of a[1..=n]).
        coeffs[n - j] = acc / m2 as f64;
    }
    WeidemanTable { scale, coeffs }
});

/// Weideman rational approximation; accurate to ~1e-14 for Im z ≥ 0 with
/// |z| up to the continued-fraction crossover.
fn w_weideman(z: C64) -> C64 {
    let table = &*WEIDEMAN;
    let l = table.scale;
    let iz = C64::new(-z.im, z.re); // i·z
    let denom = C64::new(l, 0.0) - iz;
    let big_z = (C64::new(l, 0.0) + iz) / denom;
    let mut poly = C64::new(0.0, 0.0);
    for &a in table.coeffs.iter() {
        poly = poly * big_z + a;
    }
    poly * 2.0 / (denom * denom) + C64::new(1.0 / SQRT_PI, 0.0) / denom
}

/// Laplace continued fraction, 32 levels; used for |z| ≥ 12, Im z ≥ 0.
fn w_continued_fraction(z: C64) -> C64 {
    let mut r = C64::new(0.0, 0.0);
    let mut m = 32;
    while m > 0 {
        r = C64::new(m as f64 / 2.0, 0.0) / (z - r);
        m -= 1;
    }
    C64::new(0.0, 1.0 / SQRT_PI) / (z - r)
}

/// w(z) on the whole plane.
///
/// Relative accuracy is ~1e-13 for Im z ≥ 0 and for moderate |z| below
/// the axis; see the module notes for the deep lower half-plane caveat.
pub fn wofz(z: C64) -> C64 {
    if z.im >= 0.0 {
        if z.norm_sqr() >= 144.0 {
            w_continued_fraction(z)
        } else {
            w_weideman(z)
        }
    } else {
        let zr = -z;
        let wr = if zr.norm_sqr() >= 144.0 {
            w_continued_fraction(zr)
        } else {
            w_weideman(zr)
        };
        (-z * z).exp() * 2.0 - wr
    }
}

/// Asymptotic expansion w(z) ≈ (i/√π) Σ_n d_n z^{-(2n+1)} with
/// d_n = (2n-1)!!/2ⁿ, valid for Im z ≥ 0 once |z| ≳ 40 (where the
/// nine retained terms already sit far below double precision).
pub fn wofz_asymptotic(z: C64) -> C64 {
    let zi2 = (z * z).inv();
    let mut s = C64::new(0.0, 0.0);
    for n in (1..=8).rev() {
        s = (s + DOUBLE_FACTORIAL_HALVED[n]) * zi2;
    }
    C64::new(0.0, 1.0 / SQRT_PI) / z * (s + 1.0)
}

/// Derivative of [`wofz_asymptotic`] with respect to z.
pub fn wofz_asymptotic_deriv(z: C64) -> C64 {
    let zi2 = (z * z).inv();
    let mut s = C64::new(0.0, 0.0);
    for n in (1..=8).rev() {
        s = s * zi2 + DOUBLE_FACTORIAL_HALVED[n] * (2.0 * n as f64 + 1.0);
    }
    -C64::new(0.0, 1.0 / SQRT_PI) * (C64::new(1.0, 0.0) + s * zi2) * zi2
}

/// d_n = (2n-1)!!/2ⁿ for n = 0..8.
const DOUBLE_FACTORIAL_HALVED: [f64; 9] = [
    1.0,
    0.5,
    0.75,
    1.875,
    6.5625,
    29.53125,
    162.421875,
    1055.7421875,
    7918.06640625,
];
