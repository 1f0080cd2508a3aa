use serde::{Deserialize, Serialize};

use super::{matched_filter, Beamformer, BeamformerPair, ConstraintClass};
use crate::channel::{steering_vector, ArrayGeometry, ChannelMatrix, PathCluster};
use crate::error::{domain, Error, Result};
use crate::numerics::{vector, C64};

/// How the UE combines when the MWB beams along a single direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxMode {
    /// Unit-norm matched filter to `H f`.
    MatchedFilter,
    /// Steering vector toward the same path's AoA.
    DominantDirection,
}

/// Beams along the strongest of `paths` (ties go to the lowest index).
///
/// `paths` may be the true clusters or estimates; only angles and gain
/// magnitudes are used.
pub fn dominant_directional(
    h: &ChannelMatrix,
    paths: &[PathCluster],
    rx_mode: RxMode,
) -> Result<BeamformerPair> {
    if paths.is_empty() {
        return Err(domain("no paths to beam along"));
    }
    let mut best = 0;
    for (i, p) in paths.iter().enumerate() {
        if p.gain.norm() > paths[best].gain.norm() {
            best = i;
        }
    }
    let p = paths[best];
    let tx = Beamformer::new(
        steering_vector(&h.source.tx, p.aod_deg),
        ConstraintClass::EqualGain,
    )?;
    let rx = match rx_mode {
        RxMode::MatchedFilter => matched_filter(&h.h, tx.weights())?,
        RxMode::DominantDirection => Beamformer::new(
            steering_vector(&h.source.rx, p.aoa_deg),
            ConstraintClass::EqualGain,
        )?,
    };
    Ok(BeamformerPair { tx, rx })
}

/// Weighted sum of steering beams, scaled to unit norm.
pub fn combine_beams(weights: &[C64], aods_deg: &[f64], tx: &ArrayGeometry) -> Result<Beamformer> {
    if weights.len() != aods_deg.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} directions",
            weights.len(),
            aods_deg.len()
        )));
    }
    let mut acc = vec![C64::new(0.0, 0.0); tx.n_elements];
    for (w, &a) in weights.iter().zip(aods_deg) {
        for (x, s) in acc.iter_mut().zip(steering_vector(tx, a)) {
            *x += w * s;
        }
    }
    Beamformer::energy(&acc).map_err(|_| domain("beam combination cancels to zero"))
}

/// Peak-to-average power ratio `N max_i |f_i|^2 / ||f||_2^2` (linear).
pub fn par(f: &Beamformer) -> f64 {
    let w = f.weights();
    let peak = vector::norm_inf(w);
    w.len() as f64 * peak * peak / vector::norm_sqr(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::beamspace_vector;

    #[test]
    fn par_examples() {
        let cpo = Beamformer::new(beamspace_vector(16, 0.7), ConstraintClass::EqualGain).unwrap();
        assert!((par(&cpo) - 1.0).abs() < 1e-12);
        let mut e1 = vec![C64::new(0.0, 0.0); 8];
        e1[0] = C64::new(1.0, 0.0);
        assert!((par(&Beamformer::energy(&e1).unwrap()) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_element_orthogonal_combination() {
        // Omega = 0 and Omega = pi beams with N = 2 sum to [1, 0].
        let tx = ArrayGeometry::ula(2);
        let f = combine_beams(&[C64::new(1.0, 0.0); 2], &[90.0, 0.0], &tx).unwrap();
        assert!((f.weights()[0].norm() - 1.0).abs() < 1e-12);
        assert!(f.weights()[1].norm() < 1e-12);
        assert!((par(&f) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_beam_is_the_steering_vector() {
        let tx = ArrayGeometry::ula(8);
        let f = combine_beams(&[C64::new(0.0, 2.0)], &[70.0], &tx).unwrap();
        let s = steering_vector(&tx, 70.0);
        let overlap = vector::dot(&s, f.weights()).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }
}
