//! Bi-directional noisy power iteration over a reciprocal (TDD) channel.
//!
//! One iteration sends the current transmit beam forward, normalizes what the
//! UE hears into its combiner, sends the conjugated combiner back over `H^T`,
//! and normalizes the conjugate of what the MWB hears into the next beam.
//! Each direction averages `n_noise_avg` repeated pilots, which divides the
//! noise variance by that factor.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beamformers::{beamforming_gain, loss_db, Beamformer, BeamformerPair};
use crate::error::{domain, Error, Result};
use crate::numerics::{eigh, from_db, thin_svd, vector, ComplexMatrix, C64};
use crate::rng::{complex_normal_vec, unit_vector};

/// Starting transmit beam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTx {
    /// Uniform on the complex unit sphere.
    RandomUnit,
    /// Fixed weights (normalized before use).
    Fixed(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerIterConfig {
    /// Total pilot budget, `2 * n_noise_avg * n_iter`.
    pub n_total: usize,
    pub n_noise_avg: usize,
    /// `+inf` disables noise on that link.
    pub rho_forward_db: f64,
    pub rho_reverse_db: f64,
    pub initial_tx: InitialTx,
}

impl PowerIterConfig {
    pub fn new(
        n_total: usize,
        n_noise_avg: usize,
        rho_forward_db: f64,
        rho_reverse_db: f64,
    ) -> Self {
        Self {
            n_total,
            n_noise_avg,
            rho_forward_db,
            rho_reverse_db,
            initial_tx: InitialTx::RandomUnit,
        }
    }

    /// Number of forward/reverse round trips the budget allows.
    pub fn n_iter(&self) -> Result<usize> {
        let per = 2 * self.n_noise_avg;
        if per == 0 || self.n_total == 0 || !self.n_total.is_multiple_of(per) {
            return Err(Error::Config(format!(
                "budget {} is not 2 x {} x (whole number of iterations)",
                self.n_total, self.n_noise_avg
            )));
        }
        Ok(self.n_total / per)
    }

    fn validate(&self) -> Result<()> {
        self.n_iter()?;
        for rho in [self.rho_forward_db, self.rho_reverse_db] {
            if rho.is_nan() || rho == f64::NEG_INFINITY {
                return Err(Error::Config(format!("bad pre-beamforming SNR {rho} dB")));
            }
        }
        Ok(())
    }
}

/// Per-iteration beams and diagnostics. Index `i` holds the state after round trip `i + 1`.
#[derive(Clone, Debug)]
pub struct PowerIterTrace {
    pub tx: Vec<Beamformer>,
    pub rx: Vec<Beamformer>,
    /// `f^H H^H H f` for each transmit iterate.
    pub rayleigh: Vec<f64>,
    /// Loss of `(tx[i], rx[i])` against the optimal pair.
    pub loss_db: Vec<f64>,
    pub final_pair: BeamformerPair,
}

impl PowerIterTrace {
    pub fn n_iter(&self) -> usize {
        self.tx.len()
    }

    pub fn final_loss_db(&self) -> f64 {
        *self.loss_db.last().expect("trace is never empty")
    }

    /// Columns: `iteration, rayleigh_quotient, snr_loss_db`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "rayleigh_quotient", "snr_loss_db"])?;
        for (i, (r, l)) in self.rayleigh.iter().zip(&self.loss_db).enumerate() {
            out.write_record([(i + 1).to_string(), r.to_string(), l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs the protocol for `cfg.n_iter()` round trips.
pub fn run_noisy<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    cfg: &PowerIterConfig,
    rng: &mut R,
) -> Result<PowerIterTrace> {
    cfg.validate()?;
    let n_iter = cfg.n_iter()?;
    let nt = h.cols();
    let opt = thin_svd(h)?.sigma1().powi(2);
    if opt == 0.0 {
        return Err(domain("zero channel"));
    }
    // Dividing the received vector by sqrt(rho) leaves its direction unchanged,
    // so only the noise standard deviation 1/sqrt(rho * n_avg) is needed.
    let sigma = |rho_db: f64| (1.0 / (from_db(rho_db) * cfg.n_noise_avg as f64)).sqrt();
    let (sigma_f, sigma_r) = (sigma(cfg.rho_forward_db), sigma(cfg.rho_reverse_db));

    let mut f = match &cfg.initial_tx {
        InitialTx::RandomUnit => unit_vector(rng, nt),
        InitialTx::Fixed(w) => {
            if w.len() != nt {
                return Err(Error::DimensionMismatch(format!(
                    "initial beam has {} entries, need {nt}",
                    w.len()
                )));
            }
            let w: Vec<C64> = w.iter().map(|&[re, im]| C64::new(re, im)).collect();
            vector::normalized(&w).ok_or_else(|| domain("zero initial beam"))?
        }
    };

    let mut tx = Vec::with_capacity(n_iter);
    let mut rx = Vec::with_capacity(n_iter);
    let mut rayleigh = Vec::with_capacity(n_iter);
    let mut losses = Vec::with_capacity(n_iter);

    for _ in 0..n_iter {
        let mut y = h.matvec(&f);
        add_noise(&mut y, sigma_f, rng);
        let g = normalize_or_redraw(&y, rng);

        let mut z = h.transpose_matvec(&vector::conj(&g));
        // The MWB hears sqrt(rho_r) H^T g* + n_r*.
        if sigma_r > 0.0 {
            for (zi, ni) in z
                .iter_mut()
                .zip(complex_normal_vec(rng, nt, sigma_r * sigma_r))
            {
                *zi += ni.conj();
            }
        }
        f = normalize_or_redraw(&vector::conj(&z), rng);

        let hf = h.matvec(&f);
        rayleigh.push(vector::norm_sqr(&hf));
        losses.push(loss_db(opt, beamforming_gain(h, &f, &g)?));
        tx.push(Beamformer::energy(&f)?);
        rx.push(Beamformer::energy(&g)?);
    }
    let final_pair = BeamformerPair {
        tx: tx.last().cloned().expect("n_iter >= 1"),
        rx: rx.last().cloned().expect("n_iter >= 1"),
    };
    Ok(PowerIterTrace {
        tx,
        rx,
        rayleigh,
        loss_db: losses,
        final_pair,
    })
}

fn add_noise<R: Rng + ?Sized>(y: &mut [C64], sigma: f64, rng: &mut R) {
    if sigma > 0.0 {
        let noise = complex_normal_vec(rng, y.len(), sigma * sigma);
        for (yi, ni) in y.iter_mut().zip(noise) {
            *yi += ni;
        }
    }
}

fn normalize_or_redraw<R: Rng + ?Sized>(x: &[C64], rng: &mut R) -> Vec<C64> {
    vector::normalized(x).unwrap_or_else(|| unit_vector(rng, x.len()))
}

/// Noiseless iterates `(H^H H)^i f_0 / ||.||` for `i = 1..=n_iter`, from the
/// eigendecomposition of `H^H H`.
pub fn noiseless_closed_form(
    h: &ComplexMatrix,
    f0: &[C64],
    n_iter: usize,
) -> Result<Vec<Vec<C64>>> {
    let e = eigh(&h.gram())?;
    let lmax = e.max_eigenvalue();
    if lmax <= 0.0 {
        return Err(domain("zero channel"));
    }
    let coeffs: Vec<C64> = (0..f0.len())
        .map(|j| vector::dot(&e.eigenvector(j), f0))
        .collect();
    (1..=n_iter)
        .map(|i| {
            let mut x = vec![C64::new(0.0, 0.0); f0.len()];
            for (j, c) in coeffs.iter().enumerate() {
                // Eigenvalues scaled by the largest to keep the powers in range.
                let w = c * (e.eigenvalues[j].max(0.0) / lmax).powi(i as i32);
                for (xk, vk) in x.iter_mut().zip(e.eigenvector(j)) {
                    *xk += w * vk;
                }
            }
            vector::normalized(&x)
                .ok_or_else(|| domain("initial beam orthogonal to the channel row space"))
        })
        .collect()
}

/// Every `(n_noise_avg, n_iter)` with `2 * n_noise_avg * n_iter = n_total`, by increasing `n_noise_avg`.
pub fn partition_budget(n_total: usize) -> Vec<(usize, usize)> {
    if n_total == 0 || !n_total.is_multiple_of(2) {
        return Vec::new();
    }
    let half = n_total / 2;
    (1..=half)
        .filter(|d| half.is_multiple_of(*d))
        .map(|d| (d, half / d))
        .collect()
}
