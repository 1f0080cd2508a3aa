//! Counter-based random streams.
//!
//! Every trial owns a ChaCha stream selected by `(master_seed, trial_index)`,
//! so results do not depend on which worker runs which trial or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{vector, C64};

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Independent stream for one trial.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Sub-stream derived from a trial stream, for independent stages of one trial.
pub fn fork(rng: &mut SimRng) -> SimRng {
    ChaCha8Rng::seed_from_u64(rng.random())
}

/// One draw of CN(0, 1): real and imaginary parts each N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Length-`n` vector with i.i.d. CN(0, `variance`) entries.
pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Vec<C64> {
    let s = variance.sqrt();
    (0..n).map(|_| complex_normal(rng) * s).collect()
}

/// Uniform draw on the complex unit sphere in C^n.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        if let Some(v) = vector::normalized(&complex_normal_vec(rng, n, 1.0)) {
            return v;
        }
    }
}

/// Equal-gain vector with i.i.d. uniform phases and entries of modulus `1/sqrt(n)`.
pub fn equal_gain_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let a = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|_| C64::from_polar(a, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}
