//! Transmit/receive beamformers and the received-SNR metric.

mod closed_form;
mod directional;
mod perturbation;
mod phase_only;

pub use closed_form::{
    beta_sq_orthogonal_u, beta_sq_orthogonal_v, closed_form_l2_orthogonal_u,
    closed_form_l2_orthogonal_v, ClosedFormSolution, ORTHOGONALITY_TOL,
};
pub use directional::{combine_beams, dominant_directional, par, RxMode};
pub use perturbation::{phase_perturbation_study, PerturbationRow};
pub use phase_only::{
    brute_force_equal_gain, egt_from_rsv, prop1_beamformer, quantize_phases, theorem2_rx,
};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::ChannelMatrix;
use crate::error::{domain, Error, Result};
use crate::numerics::{from_db, thin_svd, to_db, vector, ComplexMatrix, C64};

/// Slack used when checking the constraint classes.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Which feasible set a beamformer belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    /// `||w||_2 <= 1`.
    Energy,
    /// Phase-only: `|w_i| = 1/sqrt(N)` for every `i`.
    EqualGain,
    /// `||w||_inf <= 1/sqrt(N)`; the optimal phase-only receive combiner lives here.
    PeakLimited,
}

/// Complex weight vector tagged with its constraint class.
#[derive(Clone, Debug, PartialEq)]
pub struct Beamformer {
    weights: Vec<C64>,
    class: ConstraintClass,
}

impl Beamformer {
    /// Checks `weights` against `class`.
    pub fn new(weights: Vec<C64>, class: ConstraintClass) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain("empty beamformer"));
        }
        if !vector::all_finite(&weights) {
            return Err(Error::NonFinite("beamformer weights"));
        }
        let n = weights.len() as f64;
        let amp = 1.0 / n.sqrt();
        let ok = match class {
            ConstraintClass::Energy => vector::norm2(&weights) <= 1.0 + CONSTRAINT_TOL,
            ConstraintClass::EqualGain => weights
                .iter()
                .all(|z| (z.norm() - amp).abs() <= CONSTRAINT_TOL),
            ConstraintClass::PeakLimited => vector::norm_inf(&weights) <= amp + CONSTRAINT_TOL,
        };
        if !ok {
            return Err(domain(format!("weights violate the {class:?} constraint")));
        }
        Ok(Self { weights, class })
    }

    /// Scales `weights` to unit 2-norm.
    pub fn energy(weights: &[C64]) -> Result<Self> {
        let w = vector::normalized(weights).ok_or_else(|| domain("zero beamformer"))?;
        Self::new(w, ConstraintClass::Energy)
    }

    /// Phase-only beamformer `exp(j phase_i) / sqrt(N)`.
    pub fn from_phases(phases: &[f64]) -> Self {
        let amp = 1.0 / (phases.len() as f64).sqrt();
        let weights = phases.iter().map(|&p| C64::from_polar(amp, p)).collect();
        Self {
            weights,
            class: ConstraintClass::EqualGain,
        }
    }

    /// Keeps the phases of `x` and sets every modulus to `1/sqrt(N)`.
    /// Zero entries get phase 0.
    pub fn equal_gain_projection(x: &[C64]) -> Self {
        let phases: Vec<f64> = x.iter().map(|&z| vector::phase(z)).collect();
        Self::from_phases(&phases)
    }

    /// Picks the tightest class the weights satisfy.
    pub fn infer(weights: Vec<C64>) -> Result<Self> {
        for class in [
            ConstraintClass::EqualGain,
            ConstraintClass::Energy,
            ConstraintClass::PeakLimited,
        ] {
            if let Ok(b) = Self::new(weights.clone(), class) {
                return Ok(b);
            }
        }
        Err(domain("weights fit no constraint class"))
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<C64> {
        self.weights
    }

    pub fn class(&self) -> ConstraintClass {
        self.class
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl Serialize for Beamformer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.weights.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Beamformer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let w = pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        Beamformer::infer(w).map_err(serde::de::Error::custom)
    }
}

/// Transmit beamformer `f` (N_t entries) and receive combiner `g` (N_r entries).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerPair {
    pub tx: Beamformer,
    pub rx: Beamformer,
}

/// `|g^H H f|^2 / (g^H g)`: received SNR at unit pre-beamforming SNR.
pub fn beamforming_gain(h: &ComplexMatrix, f: &[C64], g: &[C64]) -> Result<f64> {
    if h.cols() != f.len() || h.rows() != g.len() {
        return Err(Error::DimensionMismatch(format!(
            "pair ({} tx, {} rx) against a {}x{} channel",
            f.len(),
            g.len(),
            h.rows(),
            h.cols()
        )));
    }
    let gg = vector::norm_sqr(g);
    if gg == 0.0 {
        return Err(domain("zero receive combiner"));
    }
    Ok(vector::dot(g, &h.matvec(f)).norm_sqr() / gg)
}

/// Linear received SNR `rho |g^H H f|^2 / (g^H g)` with `rho` given in dB.
pub fn received_snr(h: &ChannelMatrix, pair: &BeamformerPair, rho_db: f64) -> Result<f64> {
    Ok(from_db(rho_db) * beamforming_gain(&h.h, pair.tx.weights(), pair.rx.weights())?)
}

/// Dominant right singular vector and its matched filter.
pub fn optimal_f2(h: &ChannelMatrix) -> Result<BeamformerPair> {
    optimal_pair(&h.h)
}

pub(crate) fn optimal_pair(h: &ComplexMatrix) -> Result<BeamformerPair> {
    let svd = thin_svd(h)?;
    if svd.sigma1() == 0.0 {
        return Err(domain("zero channel has no dominant direction"));
    }
    let tx = Beamformer::energy(&svd.v1())?;
    let rx = matched_filter(h, tx.weights())?;
    Ok(BeamformerPair { tx, rx })
}

/// Best gain any unit-norm pair can reach: `sigma_1(H)^2`.
pub fn optimal_gain(h: &ComplexMatrix) -> Result<f64> {
    Ok(thin_svd(h)?.sigma1().powi(2))
}

/// Unit-norm receive combiner `Hf / ||Hf||_2`.
pub fn matched_filter(h: &ComplexMatrix, f: &[C64]) -> Result<Beamformer> {
    Beamformer::energy(&h.matvec(f))
        .map_err(|_| domain("transmit beam lands in the channel null space"))
}

/// `10 log10(optimum / achieved)`; `+inf` when nothing is received.
pub fn loss_db(optimum: f64, achieved: f64) -> f64 {
    if achieved <= 0.0 {
        f64::INFINITY
    } else {
        to_db(optimum / achieved)
    }
}
