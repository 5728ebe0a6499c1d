//! Scalar helpers. Most go through `libm`; the two transcendental functions
//! on the conv hot path use the platform implementation when `std` is
//! available, which is several times faster.

pub(crate) const PI: f64 = core::f64::consts::PI;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::sqrt(x * x + y * y)
}

#[cfg(feature = "std")]
#[inline]
fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(not(feature = "std"))]
#[inline]
fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
#[inline]
fn ln_1p(x: f64) -> f64 {
    x.ln_1p()
}

#[cfg(not(feature = "std"))]
#[inline]
fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    let e = exp(-x.abs());
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[cfg(test)]
pub(crate) fn softplus(x: f64) -> f64 {
    softplus_sigmoid(x).0
}

/// `(softplus(x), sigmoid(x))` sharing one exponential.
#[inline]
pub(crate) fn softplus_sigmoid(x: f64) -> (f64, f64) {
    let e = exp(-x.abs());
    let sp = x.max(0.0) + ln_1p(e);
    let s = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (sp, s)
}

/// Floored modulus, result in `[0, m)` for `m > 0`.
#[inline]
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub(crate) fn sin_cos_deg(degrees: f64) -> (f64, f64) {
    let d = rem_euclid(degrees, 360.0);
    if d == 0.0 {
        (0.0, 1.0)
    } else if d == 90.0 {
        (1.0, 0.0)
    } else if d == 180.0 {
        (0.0, -1.0)
    } else if d == 270.0 {
        (-1.0, 0.0)
    } else {
        let r = d.to_radians();
        (libm::sin(r), libm::cos(r))
    }
}
