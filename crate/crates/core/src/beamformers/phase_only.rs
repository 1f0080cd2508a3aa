//! Phase-only (equal-gain) transmit schemes.

use std::f64::consts::TAU;

use super::{optimal_pair, Beamformer, BeamformerPair, ConstraintClass};
use crate::channel::ChannelMatrix;
use crate::error::{domain, Error, Result};
use crate::numerics::{vector, ComplexMatrix, C64};

/// Optimal peak-limited combiner for a fixed transmit beam: `Hf / (sqrt(N_r) ||Hf||_inf)`.
///
/// Its largest entry has modulus exactly `1/sqrt(N_r)`; the others may be smaller.
pub fn theorem2_rx(h: &ComplexMatrix, f: &[C64]) -> Result<Beamformer> {
    let y = h.matvec(f);
    let peak = vector::norm_inf(&y);
    if peak == 0.0 {
        return Err(domain("transmit beam lands in the channel null space"));
    }
    let s = 1.0 / ((h.rows() as f64).sqrt() * peak);
    let g = vector::scale(&y, C64::new(s, 0.0));
    Beamformer::new(g, ConstraintClass::PeakLimited)
}

/// Phases of the dominant right singular vector at equal gain, with the matched combiner.
pub fn egt_from_rsv(h: &ChannelMatrix) -> Result<BeamformerPair> {
    let opt = optimal_pair(&h.h)?;
    let tx = Beamformer::equal_gain_projection(opt.tx.weights());
    let rx = theorem2_rx(&h.h, tx.weights())?;
    Ok(BeamformerPair { tx, rx })
}

/// Column-recursive phase alignment: `theta_1 = 0`,
/// `theta_i = arg(sum_{k<i} e^{j theta_k} h_i^H h_k)`.
pub fn prop1_beamformer(h: &ChannelMatrix) -> Result<BeamformerPair> {
    let m = &h.h;
    if m.max_abs() == 0.0 {
        return Err(domain("zero channel"));
    }
    let cols = m.columns();
    let nt = cols.len();
    let mut theta = vec![0.0; nt];
    // Running sum of e^{j theta_k} h_k keeps the recursion linear in N_t.
    let mut acc: Vec<C64> = cols[0].clone();
    for i in 1..nt {
        theta[i] = vector::phase(vector::dot(&cols[i], &acc));
        let rot = C64::from_polar(1.0, theta[i]);
        for (a, x) in acc.iter_mut().zip(&cols[i]) {
            *a += rot * x;
        }
    }
    let tx = Beamformer::from_phases(&theta);
    let rx = theorem2_rx(m, tx.weights())?;
    Ok(BeamformerPair { tx, rx })
}

/// Rounds every phase to the nearest point of `{2 pi m / 2^bits}` at equal gain.
pub fn quantize_phases(f: &Beamformer, bits: u32) -> Result<Beamformer> {
    if bits == 0 || bits > 30 {
        return Err(Error::Config(format!(
            "phase shifter bits must be in 1..=30, got {bits}"
        )));
    }
    let levels = (1u64 << bits) as f64;
    let step = TAU / levels;
    let phases: Vec<f64> = f
        .weights()
        .iter()
        .map(|&z| {
            let k = (vector::phase(z).rem_euclid(TAU) / step).round();
            (k % levels) * step
        })
        .collect();
    Ok(Beamformer::from_phases(&phases))
}

/// Exhaustive search over equal-gain transmit beams with `levels` phases per
/// antenna (first phase pinned to 0), scored with the optimal peak-limited combiner.
///
/// Exponential in `N_t`; refuses `N_t > 6`.
pub fn brute_force_equal_gain(h: &ComplexMatrix, levels: usize) -> Result<(Beamformer, f64)> {
    let nt = h.cols();
    if nt > 6 {
        return Err(Error::Config(format!(
            "brute-force search is limited to N_t <= 6, got {nt}"
        )));
    }
    if levels == 0 {
        return Err(Error::Config("need at least one phase level".into()));
    }
    let gram = h.gram();
    let table: Vec<C64> = (0..levels)
        .map(|k| C64::from_polar(1.0, TAU * k as f64 / levels as f64))
        .collect();
    let mut idx = vec![0usize; nt];
    let mut best_val = f64::NEG_INFINITY;
    let mut best_idx = idx.clone();
    loop {
        let f: Vec<C64> = idx.iter().map(|&k| table[k]).collect();
        let val = gram.quadratic_form(&f).re;
        if val > best_val {
            best_val = val;
            best_idx.clone_from(&idx);
        }
        // Odometer over antennas 1..nt.
        let mut pos = 1;
        while pos < nt {
            idx[pos] += 1;
            if idx[pos] < levels {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos >= nt {
            break;
        }
    }
    let phases: Vec<f64> = best_idx
        .iter()
        .map(|&k| TAU * k as f64 / levels as f64)
        .collect();
    let f = Beamformer::from_phases(&phases);
    let gain = super::beamforming_gain(h, f.weights(), &h.matvec(f.weights()))?;
    Ok((f, gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::perturbation_scenario;
    use std::f64::consts::PI;

    fn channel(h: ComplexMatrix) -> ChannelMatrix {
        ChannelMatrix {
            h,
            source: perturbation_scenario(),
        }
    }

    #[test]
    fn identical_columns_give_zero_phases() {
        let col = [C64::new(1.0, 2.0), C64::new(-0.5, 0.3)];
        let h = ComplexMatrix::from_fn(2, 4, |r, _| col[r]);
        let pair = prop1_beamformer(&channel(h)).unwrap();
        for z in pair.tx.weights() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rotated_columns_are_realigned() {
        let h0 = [C64::new(0.7, -0.2), C64::new(0.1, 0.9), C64::new(-0.4, 0.4)];
        let psi = [0.0, 1.1, -2.3, 0.4];
        let h = ComplexMatrix::from_fn(3, 4, |r, c| h0[r] * C64::from_polar(1.0, psi[c]));
        let pair = prop1_beamformer(&channel(h)).unwrap();
        for (i, z) in pair.tx.weights().iter().enumerate() {
            let want = C64::from_polar(0.5, psi[0] - psi[i]);
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn quantization_examples() {
        let f = Beamformer::from_phases(&[0.6 * PI, 0.0, PI]);
        let q = quantize_phases(&f, 2).unwrap();
        let expect = [PI / 2.0, 0.0, PI];
        for (z, p) in q.weights().iter().zip(expect) {
            assert!((z - C64::from_polar(1.0 / 3f64.sqrt(), p)).norm() < 1e-12);
        }
        let on_grid = Beamformer::from_phases(&[0.0, PI / 4.0, -PI / 2.0]);
        let q = quantize_phases(&on_grid, 3).unwrap();
        for (a, b) in q.weights().iter().zip(on_grid.weights()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn theorem2_rx_is_peak_limited() {
        let h = ComplexMatrix::from_fn(4, 3, |r, c| {
            C64::new((r + c) as f64 - 2.0, (r * c) as f64 * 0.3)
        });
        let f = Beamformer::from_phases(&[0.1, 0.2, 0.3]);
        let g = theorem2_rx(&h, f.weights()).unwrap();
        assert!((vector::norm_inf(g.weights()) - 0.5).abs() < 1e-15);
        assert!(vector::norm2(g.weights()) <= 1.0);
    }
}
