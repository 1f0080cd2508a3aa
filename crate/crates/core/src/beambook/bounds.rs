//! Upper bounds on the worst-case gain a unit-norm beam can hold over an interval.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::broad::optimize_broad_beam;
use super::dirichlet;
use crate::error::{domain, Result};
use crate::numerics::{eigh, to_db, ComplexMatrix, C64};

/// `10 log10(min(N_t, (2 pi / fov_width) n_beams))`.
pub fn parseval_bound(n_t: usize, fov_width: f64, n_beams: usize) -> Result<f64> {
    if n_beams == 0 {
        return Err(domain("need at least one beam"));
    }
    if !(fov_width > 0.0 && fov_width <= TAU + 1e-12) {
        return Err(domain(format!(
            "field of view width {fov_width} outside (0, 2 pi]"
        )));
    }
    Ok(to_db((n_t as f64).min(TAU / fov_width * n_beams as f64)))
}

/// Search resolution for [`thm3_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thm3Grid {
    /// Number of symmetric uniform spreads tried per `J`.
    pub n_spread: usize,
    /// Final coordinate-descent step is `omega0 / refine_steps`.
    pub refine_steps: usize,
}

impl Default for Thm3Grid {
    fn default() -> Self {
        Self {
            n_spread: 64,
            refine_steps: 256,
        }
    }
}

/// `lambda_max(sum_j a(w_j) a(w_j)^H) / J` via the `J x J` Gram matrix.
fn sampled_bound(n_t: usize, omegas: &[f64]) -> Result<f64> {
    let j = omegas.len();
    let g = ComplexMatrix::from_fn(j, j, |r, c| {
        if r == c {
            C64::new(n_t as f64, 0.0)
        } else {
            dirichlet(n_t, omegas[c] - omegas[r])
        }
    });
    Ok(eigh(&g)?.max_eigenvalue() / j as f64)
}

/// Placement of `j` points spread over `[-spread/2, spread/2]`.
fn uniform_placement(j: usize, spread: f64) -> Vec<f64> {
    (0..j)
        .map(|i| -spread / 2.0 + i as f64 * spread / (j - 1) as f64)
        .collect()
}

/// Pattern search over one placement with steps halving down to `min_step`.
fn refine(n_t: usize, mut pts: Vec<f64>, half: f64, min_step: f64) -> Result<f64> {
    let mut best = sampled_bound(n_t, &pts)?;
    let mut step = (16.0 * min_step).min(half);
    while step >= min_step * (1.0 - 1e-9) {
        let mut improved = true;
        let mut passes = 0;
        while improved && passes < 10_000 {
            improved = false;
            passes += 1;
            for i in 0..pts.len() {
                for dir in [-1.0, 1.0] {
                    let old = pts[i];
                    let cand = (old + dir * step).clamp(-half, half);
                    if cand == old {
                        continue;
                    }
                    pts[i] = cand;
                    let v = sampled_bound(n_t, &pts)?;
                    if v < best * (1.0 - 1e-12) {
                        best = v;
                        improved = true;
                    } else {
                        pts[i] = old;
                    }
                }
            }
        }
        step /= 2.0;
    }
    Ok(best)
}

/// Smallest `lambda_max(sum_j a(w_j) a(w_j)^H) / J` found over `J in 2..=j_max`
/// and placements in an interval of width `omega0`, capped at `N_t`, in dB.
///
/// Any placement gives a valid bound; the search only tightens it.
pub fn thm3_bound(n_t: usize, omega0: f64, j_max: usize, grid: Thm3Grid) -> Result<f64> {
    if j_max < 2 {
        return Err(domain(format!("j_max must be at least 2, got {j_max}")));
    }
    if n_t == 0 || !(0.0..=TAU).contains(&omega0) {
        return Err(domain(format!(
            "bad bound inputs n_t={n_t} omega0={omega0}"
        )));
    }
    if grid.n_spread == 0 || grid.refine_steps == 0 {
        return Err(domain("empty search grid"));
    }
    let half = omega0 / 2.0;
    let min_step = omega0 / grid.refine_steps as f64;
    let mut best = n_t as f64;
    for j in 2..=j_max {
        let mut seeds: Vec<Vec<f64>> = (1..=grid.n_spread)
            .map(|k| uniform_placement(j, omega0 * k as f64 / grid.n_spread as f64))
            .collect();
        // Mutually orthogonal steering vectors give exactly N_t / J.
        let ortho = (j - 1) as f64 * TAU / n_t as f64;
        if ortho <= omega0 {
            seeds.push(uniform_placement(j, ortho));
        }
        let mut seed_best = (f64::INFINITY, 0);
        for (i, s) in seeds.iter().enumerate() {
            let v = sampled_bound(n_t, s)?;
            if v < seed_best.0 {
                seed_best = (v, i);
            }
        }
        let v = if omega0 > 0.0 {
            refine(n_t, seeds.swap_remove(seed_best.1), half, min_step)?
        } else {
            seed_best.0
        };
        best = best.min(v);
    }
    Ok(to_db(best))
}

/// Two samples at the interval edges: `(N_t + |D_{N_t}(omega0)|) / 2` in dB.
pub fn thm3_j2_closed_form(n_t: usize, omega0: f64) -> f64 {
    to_db(((n_t as f64 + dirichlet(n_t, omega0).norm()) / 2.0).min(n_t as f64))
}

/// One row of the gain-versus-beams tradeoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub n_beams: usize,
    pub parseval_db: f64,
    pub thm3_db: f64,
    pub achieved_db: f64,
}

/// Bounds and optimized `m`-subarray worst-case gain for each codebook size.
pub fn tradeoff_table(
    n_t: usize,
    fov_width: f64,
    sizes: &[usize],
    m: u8,
) -> Result<Vec<TradeoffRow>> {
    sizes
        .iter()
        .map(|&n_beams| {
            let parseval_db = parseval_bound(n_t, fov_width, n_beams)?;
            let omega0 = fov_width / n_beams as f64;
            let j_max = default_j_max(n_t, omega0);
            let thm3_db = thm3_bound(n_t, omega0, j_max, Thm3Grid::default())?;
            let achieved_db = optimize_broad_beam(n_t, m, omega0)?.gain_db;
            Ok(TradeoffRow {
                n_beams,
                parseval_db,
                thm3_db,
                achieved_db,
            })
        })
        .collect()
}

/// At least 8, and enough samples for an orthogonal placement to fit.
pub fn default_j_max(n_t: usize, omega0: f64) -> usize {
    8usize.max((n_t as f64 * omega0 / TAU).floor() as usize + 2)
}

/// Columns: `n_beams, parseval_db, thm3_db, achieved_db`.
pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
