//! Array-factor evaluation, worst-case gain bounds, broadened beams,
//! sweep codebooks and the beam-sweep discovery procedure.

mod bounds;
mod broad;
mod codebook;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::C64;

pub use bounds::{
    default_j_max, parseval_bound, thm3_bound, thm3_j2_closed_form, tradeoff_table,
    write_tradeoff_csv, Thm3Grid, TradeoffRow,
};
pub use broad::{construct_broad_beam, optimize_broad_beam, BroadBeamSpec, OptimizedBeam};
pub use codebook::{
    beam_sweep, build_codebook, fov_beamspace, CodebookSide, SweepCodebook, SweepOutcome,
};

/// Default number of grid points used for worst-case gain.
pub const DEFAULT_GRID_PTS: usize = 1024;

/// Slack for containment of an interval in `[-pi, pi]`.
const EDGE_TOL: f64 = 1e-12;

/// A contiguous beamspace region `[center - width/2, center + width/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamspaceInterval {
    pub center: f64,
    pub width: f64,
}

impl BeamspaceInterval {
    /// Zero width is accepted and denotes a single point.
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() || !width.is_finite() || width < 0.0 {
            return Err(domain(format!(
                "bad beamspace interval center={center} width={width}"
            )));
        }
        if center.abs() + width / 2.0 > PI + EDGE_TOL {
            return Err(domain(format!(
                "interval center={center} width={width} leaves [-pi, pi]"
            )));
        }
        Ok(Self { center, width })
    }

    pub fn lo(&self) -> f64 {
        self.center - self.width / 2.0
    }

    pub fn hi(&self) -> f64 {
        self.center + self.width / 2.0
    }

    /// `n` uniformly spaced points including both edges.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n <= 1 || self.width == 0.0 {
            return vec![self.center; n.max(1)];
        }
        let step = self.width / (n - 1) as f64;
        (0..n).map(|i| self.lo() + i as f64 * step).collect()
    }
}

/// `F(omega) = sum_n f(n) e^{-j omega n}`.
pub fn array_factor(f: &[C64], omega: f64) -> C64 {
    let step = C64::from_polar(1.0, -omega);
    let mut rot = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (n, &w) in f.iter().enumerate() {
        // Re-anchor periodically so the recurrence does not drift.
        if n % 32 == 0 {
            rot = C64::from_polar(1.0, -omega * n as f64);
        }
        acc += w * rot;
        rot *= step;
    }
    acc
}

/// Unnormalized Dirichlet sum `sum_{n<N} e^{j x n}`.
pub(crate) fn dirichlet(n: usize, x: f64) -> C64 {
    let half = (x / 2.0).sin();
    if half.abs() < 1e-9 {
        return (0..n).map(|k| C64::from_polar(1.0, x * k as f64)).sum();
    }
    C64::from_polar(
        (n as f64 * x / 2.0).sin() / half,
        x * (n as f64 - 1.0) / 2.0,
    )
}

/// `|F(omega)|^2`.
pub fn pattern_gain(f: &[C64], omega: f64) -> f64 {
    array_factor(f, omega).norm_sqr()
}

/// Minimum of `|F|^2` over `grid_pts` uniformly spaced points of `iv`, edges included.
pub fn worst_case_gain(f: &[C64], iv: &BeamspaceInterval, grid_pts: usize) -> Result<f64> {
    if grid_pts < 64 {
        return Err(domain(format!(
            "worst-case gain needs at least 64 grid points, got {grid_pts}"
        )));
    }
    Ok(iv
        .grid(grid_pts)
        .into_iter()
        .map(|w| pattern_gain(f, w))
        .fold(f64::INFINITY, f64::min))
}

/// `(1/2pi) integral |F|^2` by the rectangle rule on `n_pts` points of `[-pi, pi)`.
///
/// Exact for `n_pts >= f.len()` since `|F|^2` is a trigonometric polynomial.
pub fn parseval_energy(f: &[C64], n_pts: usize) -> f64 {
    let step = 2.0 * PI / n_pts as f64;
    (0..n_pts)
        .map(|i| pattern_gain(f, -PI + i as f64 * step))
        .sum::<f64>()
        / n_pts as f64
}

/// Writes `omega, gain_db` rows of `|F|^2` on a uniform grid over `[lo, hi]`.
pub fn write_pattern_csv<W: std::io::Write>(
    f: &[C64],
    lo: f64,
    hi: f64,
    n_pts: usize,
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["omega", "gain_db"])?;
    let iv = BeamspaceInterval {
        center: (lo + hi) / 2.0,
        width: hi - lo,
    };
    for omega in iv.grid(n_pts) {
        out.write_record([
            omega.to_string(),
            crate::numerics::to_db(pattern_gain(f, omega)).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
