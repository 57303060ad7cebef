//! Thin wrappers over `libm` so the numeric kernels stay `no_std`.

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Nearest non-negative integer to `x` (0 for negative inputs).
pub(crate) fn round_to_usize(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        libm::round(x) as usize
    }
}

/// Integer power by repeated multiplication (exponents here are tiny).
pub(crate) fn powi(x: f64, mut p: u32) -> f64 {
    let mut base = x;
    let mut acc = 1.0;
    while p > 0 {
        if p & 1 == 1 {
            acc *= base;
        }
        base *= base;
        p >>= 1;
    }
    acc
}
