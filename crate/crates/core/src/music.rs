//! MUSIC direction learning with a split uplink/downlink pilot budget.
//!
//! The MWB learns AoDs from the uplink covariance, the UE learns AoAs from the
//! downlink covariance. During training the transmitting side sends a fresh
//! random equal-gain beam per snapshot.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beamformers::{Beamformer, BeamformerPair, ConstraintClass};
use crate::channel::{steering_vector, ArrayGeometry, ChannelMatrix};
use crate::error::{domain, Error, Result};
use crate::numerics::{eigh, from_db, vector, ComplexMatrix, C64};
use crate::rng::{complex_normal_vec, equal_gain_vector};

/// Pseudospectrum values are capped here.
pub const PSEUDOSPECTRUM_CLAMP: f64 = 1e12;
/// Default angular grid step in degrees.
pub const DEFAULT_GRID_STEP_DEG: f64 = 0.05;

/// Pilot budget for bi-directional training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MusicBudget {
    pub n_total: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub n_up_cov: usize,
    pub n_up_noi: usize,
    pub n_down_cov: usize,
    pub n_down_noi: usize,
}

impl Default for MusicBudget {
    /// 256 pilots: 192 uplink as 96 x 2, 64 downlink as 8 x 8.
    fn default() -> Self {
        Self {
            n_total: 256,
            n_up: 192,
            n_down: 64,
            n_up_cov: 96,
            n_up_noi: 2,
            n_down_cov: 8,
            n_down_noi: 8,
        }
    }
}

impl MusicBudget {
    /// Default split with the uplink factored as `n_up_cov x (192 / n_up_cov)`.
    pub fn with_up_cov(n_up_cov: usize) -> Result<Self> {
        let base = Self::default();
        if n_up_cov == 0 || base.n_up % n_up_cov != 0 {
            return Err(Error::Config(format!(
                "{n_up_cov} does not divide the {} uplink pilots",
                base.n_up
            )));
        }
        let b = Self {
            n_up_cov,
            n_up_noi: base.n_up / n_up_cov,
            ..base
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n_up == self.n_up_cov * self.n_up_noi
            && self.n_down == self.n_down_cov * self.n_down_noi
            && self.n_up + self.n_down == self.n_total
            && self.n_up_cov > 0
            && self.n_down_cov > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("inconsistent MUSIC budget {self:?}")))
        }
    }
}

/// Which covariance is being estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// UE trains, MWB listens: AoD estimation over `N_t` antennas.
    Uplink,
    /// MWB trains, UE listens: AoA estimation over `N_r` antennas.
    Downlink,
}

/// Training snapshots as columns.
///
/// Downlink columns are `sqrt(rho_f) H f + n`. Uplink columns are the conjugate
/// of `sqrt(rho_r) H^T g + n`, which puts them in the span of the AoD steering
/// vectors rather than their conjugates. Noise has variance `1/n_noi`.
pub fn simulate_snapshots<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    side: Side,
    budget: &MusicBudget,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    budget.validate()?;
    let s = &h.source;
    let (n_cov, n_noi, rho_db) = match side {
        Side::Uplink => (budget.n_up_cov, budget.n_up_noi, s.rho_reverse_db),
        Side::Downlink => (budget.n_down_cov, budget.n_down_noi, s.rho_forward_db),
    };
    snapshots_at(&h.h, side, n_cov, n_noi, rho_db, rng)
}

pub(crate) fn snapshots_at<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    side: Side,
    n_cov: usize,
    n_noi: usize,
    rho_db: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if n_noi == 0 {
        return Err(Error::Config(
            "noise averaging factor must be positive".into(),
        ));
    }
    let amp = from_db(rho_db).sqrt();
    let noise_var = 1.0 / n_noi as f64;
    let dim = match side {
        Side::Uplink => h.cols(),
        Side::Downlink => h.rows(),
    };
    let mut cols = Vec::with_capacity(n_cov);
    for _ in 0..n_cov {
        let mut y = match side {
            Side::Uplink => {
                let g = equal_gain_vector(rng, h.rows());
                vector::conj(&h.transpose_matvec(&g))
            }
            Side::Downlink => h.matvec(&equal_gain_vector(rng, h.cols())),
        };
        let noise = complex_normal_vec(rng, dim, noise_var);
        for (yi, ni) in y.iter_mut().zip(noise) {
            *yi = *yi * amp + ni;
        }
        cols.push(y);
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

/// `(1/n) Y Y^H`, exactly Hermitian.
pub fn sample_covariance(snapshots: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = snapshots.cols();
    if n == 0 {
        return Err(domain("no snapshots"));
    }
    Ok(snapshots
        .adjoint()
        .gram()
        .scale(C64::new(1.0 / n as f64, 0.0)))
}

/// Expected snapshot covariance under random equal-gain training.
pub fn analytic_covariance(
    h: &ComplexMatrix,
    side: Side,
    rho_db: f64,
    n_noi: usize,
) -> ComplexMatrix {
    let rho = from_db(rho_db);
    let (signal, dim, n_train) = match side {
        // E[conj(g) g^T] = I / N_r, so E[conj(H^T g) (H^T g)^T] = H^H H / N_r.
        Side::Uplink => (h.gram(), h.cols(), h.rows()),
        Side::Downlink => (h.adjoint().gram(), h.rows(), h.cols()),
    };
    let noise = ComplexMatrix::identity(dim).scale(C64::new(1.0 / n_noi as f64, 0.0));
    signal
        .scale(C64::new(rho / n_train as f64, 0.0))
        .add(&noise)
}

/// Inclusive angle grid from `fov[0]` to `fov[1]`.
pub fn angle_grid(fov_deg: [f64; 2], step_deg: f64) -> Result<Vec<f64>> {
    let [lo, hi] = fov_deg;
    if !(step_deg > 0.0) || !(hi > lo) {
        return Err(Error::Config(format!(
            "bad grid [{lo}, {hi}] step {step_deg}"
        )));
    }
    let n = ((hi - lo) / step_deg).round() as usize + 1;
    Ok((0..n)
        .map(|i| lo + i as f64 * step_deg)
        .filter(|&a| a <= hi + 1e-9)
        .collect())
}

/// MUSIC pseudospectrum sampled on an angle grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Pseudospectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub model_order: usize,
}

impl Pseudospectrum {
    /// Columns: `angle_deg, value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["angle_deg", "value"])?;
        for (a, v) in self.grid.iter().zip(&self.values) {
            out.write_record([a.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Up to `k` peak angles, strongest first.
    pub fn peaks(&self, k: usize) -> Peaks {
        find_peaks(&self.grid, &self.values, k)
    }
}

/// `P(phi) = 1 / sum_{n > k} |a(phi)^H q_n|^2`.
///
/// The noise-subspace sum is evaluated as `||a||^2 - sum_{n <= k} |a^H q_n|^2`,
/// which is the same quantity for a unitary eigenbasis and needs only the
/// `k` signal eigenvectors.
pub fn pseudospectrum(
    r: &ComplexMatrix,
    k: usize,
    geom: &ArrayGeometry,
    grid: &[f64],
) -> Result<Pseudospectrum> {
    let dim = r.rows();
    if !r.is_square() || dim != geom.n_elements {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} covariance for a {}-element array",
            r.rows(),
            r.cols(),
            geom.n_elements
        )));
    }
    if k == 0 || k >= dim {
        return Err(domain(format!("model order {k} must be in 1..{dim}")));
    }
    let e = eigh(r)?;
    let signal: Vec<Vec<C64>> = (0..k).map(|i| e.eigenvector(i)).collect();
    let values = grid
        .iter()
        .map(|&phi| {
            let a = steering_vector(geom, phi);
            let captured: f64 = signal.iter().map(|q| vector::dot(&a, q).norm_sqr()).sum();
            let residual = (vector::norm_sqr(&a) - captured).max(0.0);
            (1.0 / residual).min(PSEUDOSPECTRUM_CLAMP)
        })
        .collect();
    Ok(Pseudospectrum {
        grid: grid.to_vec(),
        values,
        model_order: k,
    })
}

/// Selected peak angles.
#[derive(Clone, Debug, PartialEq)]
pub struct Peaks {
    pub angles_deg: Vec<f64>,
    pub values: Vec<f64>,
    /// Fewer than the requested number of separated local maxima were found.
    pub shortfall: bool,
}

/// Local maxima ranked by value, keeping only those at least two grid steps
/// from every stronger pick. Plateaus count once, at their left end.
pub fn find_peaks(grid: &[f64], values: &[f64], k: usize) -> Peaks {
    let n = values.len();
    let mut cands: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right && n > 1
        })
        .collect();
    cands.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for c in cands {
        if picked.len() == k {
            break;
        }
        if picked.iter().all(|&p| p.abs_diff(c) >= 2) {
            picked.push(c);
        }
    }
    Peaks {
        angles_deg: picked.iter().map(|&i| grid[i]).collect(),
        values: picked.iter().map(|&i| values[i]).collect(),
        shortfall: picked.len() < k,
    }
}

/// Top-`k` directions from a covariance estimate.
pub fn estimate_directions(
    r: &ComplexMatrix,
    k: usize,
    geom: &ArrayGeometry,
    grid: &[f64],
) -> Result<Peaks> {
    Ok(pseudospectrum(r, k, geom, grid)?.peaks(k))
}

/// Output of bi-directional MUSIC.
#[derive(Clone, Debug)]
pub struct DirectionEstimates {
    pub aod_deg: Vec<f64>,
    pub aoa_deg: Vec<f64>,
    pub shortfall: bool,
    /// Uplink and downlink sample covariances, kept for beam selection.
    pub uplink_cov: ComplexMatrix,
    pub downlink_cov: ComplexMatrix,
}

/// Learns `k` AoDs (uplink) and `k` AoAs (downlink) on a `grid_step_deg` grid over the fov.
///
/// A side with `k >= dim` has no noise subspace; its order is reduced to
/// `dim - 1` and the result is flagged as a shortfall.
pub fn learn_directions<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    budget: &MusicBudget,
    k: usize,
    grid_step_deg: f64,
    rng: &mut R,
) -> Result<DirectionEstimates> {
    if k == 0 {
        return Err(domain("model order must be positive"));
    }
    let s = &h.source;
    let grid = angle_grid(s.fov_deg, grid_step_deg)?;
    let up = sample_covariance(&simulate_snapshots(h, Side::Uplink, budget, rng)?)?;
    let down = sample_covariance(&simulate_snapshots(h, Side::Downlink, budget, rng)?)?;
    if s.tx.n_elements < 2 || s.rx.n_elements < 2 {
        return Err(domain("MUSIC needs at least two antennas per side"));
    }
    let k_up = k.min(s.tx.n_elements - 1);
    let k_down = k.min(s.rx.n_elements - 1);
    let aod = estimate_directions(&up, k_up, &s.tx, &grid)?;
    let aoa = estimate_directions(&down, k_down, &s.rx, &grid)?;
    Ok(DirectionEstimates {
        shortfall: aod.shortfall || aoa.shortfall || k_up < k || k_down < k,
        aod_deg: aod.angles_deg,
        aoa_deg: aoa.angles_deg,
        uplink_cov: up,
        downlink_cov: down,
    })
}

/// Steering pair along the estimated directions with the most power in each
/// side's own sample covariance (`a^H R a`).
pub fn music_beamformers(h: &ChannelMatrix, est: &DirectionEstimates) -> Result<BeamformerPair> {
    let s = &h.source;
    let pick = |angles: &[f64], geom: &ArrayGeometry, r: &ComplexMatrix| -> Result<Beamformer> {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for &a in angles {
            let v = steering_vector(geom, a);
            let p = r.quadratic_form(&v).re;
            if best.as_ref().is_none_or(|(bp, _)| p > *bp) {
                best = Some((p, v));
            }
        }
        let (_, v) = best.ok_or_else(|| domain("no direction estimates"))?;
        Beamformer::new(v, ConstraintClass::EqualGain)
    };
    Ok(BeamformerPair {
        tx: pick(&est.aod_deg, &s.tx, &est.uplink_cov)?,
        rx: pick(&est.aoa_deg, &s.rx, &est.downlink_cov)?,
    })
}
