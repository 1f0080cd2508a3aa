use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::broad::{construct_broad_beam, optimize_broad_beam, BroadBeamSpec};
use super::BeamspaceInterval;
use crate::beamformers::{Beamformer, BeamformerPair, ConstraintClass};
use crate::channel::ArrayGeometry;
use crate::error::{domain, Error, Result};
use crate::numerics::{from_db, vector, ComplexMatrix, C64};
use crate::rng::complex_normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookSide {
    Mwb,
    Ue,
}

/// Beamspace span `[lo, hi]` of an angular field of view.
pub fn fov_beamspace(geom: &ArrayGeometry, fov_deg: [f64; 2]) -> (f64, f64) {
    let a = geom.beamspace(fov_deg[0]);
    let b = geom.beamspace(fov_deg[1]);
    (a.min(b), a.max(b))
}

/// Equal-gain beams whose intervals tile the field of view in beamspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCodebook {
    pub n_t: usize,
    pub m: u8,
    pub fov_deg: [f64; 2],
    pub side: CodebookSide,
    /// Parameters of the centered beam every entry is modulated from.
    pub template: BroadBeamSpec,
    pub beams: Vec<Beamformer>,
    pub intervals: Vec<BeamspaceInterval>,
}

impl SweepCodebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let book: Self = serde_json::from_str(text)?;
        if book.beams.len() != book.intervals.len()
            || book.beams.iter().any(|b| b.len() != book.n_t)
        {
            return Err(Error::Config(
                "codebook beams and intervals disagree".into(),
            ));
        }
        Ok(book)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Designs the `m`-subarray template for width `fov / n_beams` and modulates
/// it to the center of each interval. `m = 1` gives CPO beams.
pub fn build_codebook(
    geom: &ArrayGeometry,
    fov_deg: [f64; 2],
    n_beams: usize,
    m: u8,
    side: CodebookSide,
) -> Result<SweepCodebook> {
    geom.validate()?;
    if n_beams == 0 {
        return Err(domain("codebook needs at least one beam"));
    }
    let n_t = geom.n_elements;
    let (lo, hi) = fov_beamspace(geom, fov_deg);
    let omega0 = (hi - lo) / n_beams as f64;
    let template = if m == 1 {
        BroadBeamSpec::cpo()
    } else {
        optimize_broad_beam(n_t, m, omega0)?.spec
    };
    let base = construct_broad_beam(n_t, &template)?;

    let mut beams = Vec::with_capacity(n_beams);
    let mut intervals = Vec::with_capacity(n_beams);
    for i in 0..n_beams {
        let center = lo + (i as f64 + 0.5) * omega0;
        let w: Vec<C64> = base
            .weights()
            .iter()
            .enumerate()
            .map(|(n, &x)| x * C64::from_polar(1.0, n as f64 * center))
            .collect();
        beams.push(Beamformer::new(w, ConstraintClass::EqualGain)?);
        intervals.push(BeamspaceInterval::new(center, omega0)?);
    }
    Ok(SweepCodebook {
        n_t,
        m,
        fov_deg,
        side,
        template,
        beams,
        intervals,
    })
}

/// Result of a beam sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub pair: BeamformerPair,
    pub mwb_index: usize,
    pub ue_index: usize,
    /// Mean received energy of the winner, in units of the noise power over `rho`.
    pub energy: f64,
    pub latency_samples: usize,
}

/// Tries every pair `n_rep` times and keeps the one with the largest average
/// received energy (ties go to the lowest indices).
pub fn beam_sweep<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    mwb_book: &SweepCodebook,
    ue_book: &SweepCodebook,
    rho_db: f64,
    n_rep: usize,
    rng: &mut R,
) -> Result<SweepOutcome> {
    if mwb_book.is_empty() || ue_book.is_empty() || n_rep == 0 {
        return Err(domain(
            "beam sweep needs non-empty codebooks and n_rep >= 1",
        ));
    }
    if mwb_book.n_t != h.cols() || ue_book.n_t != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "codebooks for {}x{} but channel is {}x{}",
            ue_book.n_t,
            mwb_book.n_t,
            h.rows(),
            h.cols()
        )));
    }
    if rho_db.is_nan() || rho_db == f64::NEG_INFINITY {
        return Err(Error::Config(format!(
            "bad pre-beamforming SNR {rho_db} dB"
        )));
    }
    // y / sqrt(rho) = g^H H f + z / sqrt(rho) with z ~ CN(0, ||g||^2) = CN(0, 1).
    let noise_std = (1.0 / from_db(rho_db)).sqrt();
    let mut best: Option<(f64, usize, usize)> = None;
    for (a, f) in mwb_book.beams.iter().enumerate() {
        let hf = h.matvec(f.weights());
        for (b, g) in ue_book.beams.iter().enumerate() {
            let s = vector::dot(g.weights(), &hf);
            let mut energy = 0.0;
            for _ in 0..n_rep {
                let y = if noise_std > 0.0 {
                    s + complex_normal(rng) * noise_std
                } else {
                    s
                };
                energy += y.norm_sqr();
            }
            energy /= n_rep as f64;
            if best.is_none_or(|(e, _, _)| energy > e) {
                best = Some((energy, a, b));
            }
        }
    }
    let (energy, a, b) = best.expect("books are non-empty");
    Ok(SweepOutcome {
        pair: BeamformerPair {
            tx: mwb_book.beams[a].clone(),
            rx: ue_book.beams[b].clone(),
        },
        mwb_index: a,
        ue_index: b,
        energy,
        latency_samples: mwb_book.len() * ue_book.len() * n_rep,
    })
}
