use serde::Serialize;

use super::{beamforming_gain, dominant_directional, loss_db, optimal_f2, optimal_gain, RxMode};
use crate::channel::{build_channel, Scenario};
use crate::error::{Error, Result};
use crate::numerics::C64;

/// Losses of two stale beamformer pairs after the dominant path's phase moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub phase_deg: f64,
    /// Unperturbed optimal pair reused on the perturbed channel.
    pub loss_rsv_db: f64,
    /// Unperturbed steering pair (AoD at the MWB, AoA at the UE) reused likewise.
    pub loss_directional_db: f64,
}

/// Rotates the dominant path gain by each angle of `phase_grid_deg` and
/// scores the stale pairs against the perturbed channel's optimum.
pub fn phase_perturbation_study(
    base: &Scenario,
    phase_grid_deg: &[f64],
) -> Result<Vec<PerturbationRow>> {
    if base.paths.len() != 2 {
        return Err(Error::Precondition(format!(
            "perturbation study needs exactly two paths, got {}",
            base.paths.len()
        )));
    }
    let ch0 = build_channel(base)?;
    let rsv = optimal_f2(&ch0)?;
    let dir = dominant_directional(&ch0, &base.paths, RxMode::DominantDirection)?;
    let dom = base.dominant_path();

    phase_grid_deg
        .iter()
        .map(|&phase_deg| {
            let mut s = base.clone();
            s.paths[dom].gain *= C64::from_polar(1.0, phase_deg.to_radians());
            let ch = build_channel(&s)?;
            let opt = optimal_gain(&ch.h)?;
            let g_rsv = beamforming_gain(&ch.h, rsv.tx.weights(), rsv.rx.weights())?;
            let g_dir = beamforming_gain(&ch.h, dir.tx.weights(), dir.rx.weights())?;
            Ok(PerturbationRow {
                phase_deg,
                loss_rsv_db: loss_db(opt, g_rsv),
                loss_directional_db: loss_db(opt, g_dir),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::perturbation_scenario;

    #[test]
    fn zero_phase_has_no_rsv_loss() {
        let rows = phase_perturbation_study(&perturbation_scenario(), &[0.0]).unwrap();
        assert!(rows[0].loss_rsv_db.abs() < 1e-9);
        assert!(rows[0].loss_directional_db > 0.0);
    }
}
