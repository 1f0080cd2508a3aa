//! Helpers on complex vectors stored as slices.

use super::C64;

/// Inner product `x^H y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    norm_sqr(x).sqrt()
}

pub fn norm_inf(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn scale(x: &[C64], s: C64) -> Vec<C64> {
    x.iter().map(|z| z * s).collect()
}

/// Unit 2-norm copy of `x`, or `None` for the zero vector.
pub fn normalized(x: &[C64]) -> Option<Vec<C64>> {
    let n = norm2(x);
    if n > 0.0 && n.is_finite() {
        Some(x.iter().map(|z| z / n).collect())
    } else {
        None
    }
}

pub fn conj(x: &[C64]) -> Vec<C64> {
    x.iter().map(|z| z.conj()).collect()
}

/// `x + y`.
pub fn add(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// Phase of `z`, with the angle of an exact zero defined as 0.
pub fn phase(z: C64) -> f64 {
    if z == C64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// Index of the first entry of largest magnitude.
pub fn argmax_abs(x: &[C64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, z) in x.iter().enumerate() {
        let v = z.norm_sqr();
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

pub fn all_finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
