//! Broadened beams built from virtual subarrays with linear phase progressions,
//! and their max-min parameter search.
//!
//! Every construction has `f(N-1-n) = f(n)`, so `|F(w)| = |F(-w)|` and only
//! the non-negative half of a centered interval needs evaluating.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{dirichlet, DEFAULT_GRID_PTS};
use crate::beamformers::Beamformer;
use crate::error::{domain, Result};
use crate::numerics::{to_db, C64};

/// Parameter grid density: `sf` and `delta_sf` move in steps of `1 / SF_DIVISIONS`.
const SF_DIVISIONS: f64 = 20.0;
/// Fine grid points skipped between coarse bound evaluations.
const COARSE_STRIDE: usize = 16;
/// Candidate pool size that triggers pruning.
const POOL_CAP: usize = 1 << 16;
/// Candidates refined per pruning round.
const REFINE_BATCH: usize = 64;
/// Relative slack absorbing rounding between the coarse and fine evaluators.
const PRUNE_SLACK: f64 = 1e-9;
/// Relative gap below which two candidates count as equally good.
const TIE_TOL: f64 = 1e-12;

/// Parameters of an `m`-subarray beam. `m = 1` is the broadside CPO beam.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BroadBeamSpec {
    pub m: u8,
    /// Beam offset `sf`, in cycles across the aperture.
    pub f_param: f64,
    /// Extra offset of the outer subarrays (`m = 4`).
    pub delta_f: f64,
    /// Half-length `L` of the middle section (`m` in {3, 4}).
    pub mid_len: usize,
}

impl BroadBeamSpec {
    pub fn cpo() -> Self {
        Self {
            m: 1,
            f_param: 0.0,
            delta_f: 0.0,
            mid_len: 0,
        }
    }

    fn validate(&self, n_t: usize) -> Result<()> {
        if !(1..=4).contains(&self.m) {
            return Err(domain(format!(
                "subarray count must be in 1..=4, got {}",
                self.m
            )));
        }
        if n_t == 0 || (self.m > 1 && !n_t.is_multiple_of(2)) {
            return Err(domain(format!(
                "subarray beams need an even, non-zero array size, got {n_t}"
            )));
        }
        if !self.f_param.is_finite() || !self.delta_f.is_finite() {
            return Err(domain("non-finite beam parameter"));
        }
        if self.mid_len > n_t / 2 {
            return Err(domain(format!(
                "L = {} exceeds N_t / 2 = {}",
                self.mid_len,
                n_t / 2
            )));
        }
        let uses_f = self.m >= 2;
        let uses_l = self.m >= 3;
        let uses_delta = self.m == 4;
        if (!uses_f && self.f_param != 0.0)
            || (!uses_l && self.mid_len != 0)
            || (!uses_delta && self.delta_f != 0.0)
        {
            return Err(domain(format!(
                "parameter not used by the m = {} construction is set",
                self.m
            )));
        }
        Ok(())
    }
}

/// `f(n) = e^{j(phase0 + slope (n - start))} / sqrt(N)` for `n` in `start..start + len`.
#[derive(Clone, Copy, Debug)]
struct Segment {
    start: usize,
    len: usize,
    phase0: f64,
    slope: f64,
}

impl Segment {
    /// Contribution to `sqrt(N) F(omega)`.
    fn factor(&self, omega: f64) -> C64 {
        if self.len == 0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(1.0, self.phase0 - omega * self.start as f64)
            * dirichlet(self.len, self.slope - omega)
    }
}

fn segments(n_t: usize, spec: &BroadBeamSpec) -> Vec<Segment> {
    let n = n_t as f64;
    let h = n_t / 2;
    let c = n / 2.0 - 0.5;
    let k = TAU * spec.f_param / n;
    let l = spec.mid_len;
    let lf = l as f64;
    match spec.m {
        1 => vec![Segment {
            start: 0,
            len: n_t,
            phase0: 0.0,
            slope: 0.0,
        }],
        2 => vec![
            Segment {
                start: 0,
                len: h,
                phase0: k * c,
                slope: -k,
            },
            Segment {
                start: h,
                len: h,
                phase0: k / 2.0,
                slope: k,
            },
        ],
        3 => vec![
            Segment {
                start: 0,
                len: h - l,
                phase0: k * (c - lf),
                slope: -k,
            },
            Segment {
                start: h - l,
                len: 2 * l,
                phase0: 0.0,
                slope: 0.0,
            },
            Segment {
                start: h + l,
                len: h - l,
                phase0: k / 2.0,
                slope: k,
            },
        ],
        _ => {
            let k1 = TAU * (spec.f_param + spec.delta_f) / n;
            let dk = TAU * spec.delta_f / n;
            let tail = dk * (lf - 0.5);
            vec![
                Segment {
                    start: 0,
                    len: h - l,
                    phase0: k1 * c - tail,
                    slope: -k1,
                },
                Segment {
                    start: h - l,
                    len: l,
                    phase0: k * (lf - 0.5),
                    slope: -k,
                },
                Segment {
                    start: h,
                    len: l,
                    phase0: k / 2.0,
                    slope: k,
                },
                Segment {
                    start: h + l,
                    len: h - l,
                    phase0: k1 * (lf + 0.5) - tail,
                    slope: k1,
                },
            ]
        }
    }
}

fn gain_from_segments(segs: &[Segment], n_t: usize, omega: f64) -> f64 {
    segs.iter().map(|s| s.factor(omega)).sum::<C64>().norm_sqr() / n_t as f64
}

/// Builds the equal-gain weights of `spec`.
pub fn construct_broad_beam(n_t: usize, spec: &BroadBeamSpec) -> Result<Beamformer> {
    spec.validate(n_t)?;
    let mut phases = vec![0.0; n_t];
    for s in segments(n_t, spec) {
        for i in 0..s.len {
            phases[s.start + i] = s.phase0 + s.slope * i as f64;
        }
    }
    Ok(Beamformer::from_phases(&phases))
}

/// Result of [`optimize_broad_beam`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBeam {
    pub spec: BroadBeamSpec,
    /// Worst-case `|F|^2` over the interval, linear.
    pub gain: f64,
    pub gain_db: f64,
}

/// Grid position of a candidate: `sf = i / 20`, `delta_sf = j / 20`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Key {
    i: i64,
    l: usize,
    j: i64,
}

impl Key {
    /// Ties prefer smaller `sf`, then smaller `L`, then smaller `|delta_sf|`.
    fn rank(&self) -> (i64, usize, i64, i64) {
        (self.i, self.l, self.j.abs(), self.j)
    }

    fn spec(&self, m: u8) -> BroadBeamSpec {
        BroadBeamSpec {
            m,
            f_param: self.i as f64 / SF_DIVISIONS,
            delta_f: self.j as f64 / SF_DIVISIONS,
            mid_len: self.l,
        }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    coarse: f64,
    key: Key,
}

/// Branch and bound over candidates: the minimum over a subset of the fine
/// grid bounds the fine minimum from above.
struct Search<'a> {
    n_t: usize,
    m: u8,
    fine: &'a [f64],
    pool: Vec<Candidate>,
    best: Option<(f64, Key)>,
}

impl<'a> Search<'a> {
    fn lower_bound(&self) -> f64 {
        self.best
            .map_or(f64::NEG_INFINITY, |(v, _)| v * (1.0 - PRUNE_SLACK))
    }

    fn offer(&mut self, coarse: f64, key: Key) {
        if coarse >= self.lower_bound() {
            self.pool.push(Candidate { coarse, key });
            if self.pool.len() >= POOL_CAP {
                self.prune();
            }
        }
    }

    fn evaluate(&mut self, key: Key) {
        let segs = segments(self.n_t, &key.spec(self.m));
        let mut v = f64::INFINITY;
        for &w in self.fine {
            v = v.min(gain_from_segments(&segs, self.n_t, w));
        }
        let better = match self.best {
            None => true,
            // Equivalent parameterizations differ only by rounding; treat them as ties.
            Some((bv, bk)) => {
                v > bv * (1.0 + TIE_TOL) || (v >= bv * (1.0 - TIE_TOL) && key.rank() < bk.rank())
            }
        };
        if better {
            self.best = Some((v, key));
        }
    }

    fn sort_pool(&mut self) {
        self.pool.sort_by(|a, b| {
            b.coarse
                .partial_cmp(&a.coarse)
                .unwrap_or(Ordering::Equal)
                .then(a.key.rank().cmp(&b.key.rank()))
        });
    }

    fn prune(&mut self) {
        self.sort_pool();
        let batch: Vec<Key> = self.pool.iter().take(REFINE_BATCH).map(|c| c.key).collect();
        for k in batch {
            self.evaluate(k);
        }
        let lb = self.lower_bound();
        self.pool.retain(|c| c.coarse >= lb);
    }

    fn finish(mut self) -> (f64, Key) {
        self.sort_pool();
        let pool = std::mem::take(&mut self.pool);
        for c in pool {
            if c.coarse < self.lower_bound() {
                break;
            }
            self.evaluate(c.key);
        }
        self.best.expect("search offered at least one candidate")
    }
}

/// Maximizes the worst-case gain over the centered interval of width `omega0`.
///
/// `sf` ranges over `[0, B]` and `delta_sf` over `[-B, B]` in steps of 0.05,
/// with `B = min(N_t / 2, max(2, N_t omega0 / pi))`, so beams may point up to
/// twice the interval width off center; `L` covers `0..=N_t/2`.
pub fn optimize_broad_beam(n_t: usize, m: u8, omega0: f64) -> Result<OptimizedBeam> {
    if !(0.0..=PI).contains(&omega0) {
        return Err(domain(format!("interval width {omega0} outside [0, pi]")));
    }
    BroadBeamSpec {
        m,
        f_param: 0.0,
        delta_f: 0.0,
        mid_len: 0,
    }
    .validate(n_t)?;

    // Non-negative half of the centered grid, plus the coarse subset ending at the edge.
    let g = DEFAULT_GRID_PTS;
    let point = |i: usize| -omega0 / 2.0 + i as f64 * omega0 / (g - 1) as f64;
    let fine: Vec<f64> = ((g - 1) / 2..g).map(point).collect();
    let coarse: Vec<f64> = (0..)
        .map(|s| g - 1 - s * COARSE_STRIDE)
        .take_while(|&i| i >= (g - 1) / 2)
        .map(point)
        .collect();

    let b = (2.0 * n_t as f64 * omega0 / TAU)
        .max(2.0)
        .min(n_t as f64 / 2.0);
    let n_b = (b * SF_DIVISIONS).ceil() as i64;
    let mut search = Search {
        n_t,
        m,
        fine: &fine,
        pool: Vec::new(),
        best: None,
    };
    let coarse_of = |key: Key| {
        let segs = segments(n_t, &key.spec(m));
        coarse
            .iter()
            .map(|&w| gain_from_segments(&segs, n_t, w))
            .fold(f64::INFINITY, f64::min)
    };
    match m {
        1 => {
            let key = Key { i: 0, l: 0, j: 0 };
            search.offer(coarse_of(key), key);
        }
        2 => {
            for i in 0..=n_b {
                let key = Key { i, l: 0, j: 0 };
                search.offer(coarse_of(key), key);
            }
        }
        3 => {
            for l in 0..=n_t / 2 {
                for i in 0..=n_b {
                    let key = Key { i, l, j: 0 };
                    search.offer(coarse_of(key), key);
                }
            }
        }
        _ => search_m4(&mut search, &coarse, n_b),
    }
    let (gain, key) = search.finish();
    Ok(OptimizedBeam {
        spec: key.spec(m),
        gain,
        gain_db: to_db(gain),
    })
}

/// `m = 4` splits into an inner part depending on `(sf, L)` and an outer part
/// depending on `(sf + delta_sf, L)`, joined by the phase `e^{j k (L - 1/2)}`.
/// Tabulating both per `L` makes each candidate a short vector sum.
fn search_m4(search: &mut Search<'_>, coarse: &[f64], n_b: i64) {
    let n_t = search.n_t;
    let p = coarse.len();
    let k_of = |idx: i64| TAU * (idx as f64 / SF_DIVISIONS) / n_t as f64;
    let scale = 1.0 / (n_t as f64).sqrt();
    let n_outer = (3 * n_b + 1) as usize;
    for l in 0..=n_t / 2 {
        let lf = l as f64;
        let mut inner = vec![C64::new(0.0, 0.0); (n_b as usize + 1) * p];
        let mut joint = vec![C64::new(0.0, 0.0); n_b as usize + 1];
        for i in 0..=n_b {
            let segs = segments(n_t, &Key { i, l, j: -i }.spec(4));
            for (q, &w) in coarse.iter().enumerate() {
                inner[i as usize * p + q] = (segs[1].factor(w) + segs[2].factor(w)) * scale;
            }
            joint[i as usize] = C64::from_polar(1.0, k_of(i) * (lf - 0.5));
        }
        // With sf = 0 the outer segments carry exactly the outer table entry.
        let mut outer = vec![C64::new(0.0, 0.0); n_outer * p];
        for s in 0..n_outer as i64 {
            let segs = segments(
                n_t,
                &Key {
                    i: 0,
                    l,
                    j: s - n_b,
                }
                .spec(4),
            );
            for (q, &w) in coarse.iter().enumerate() {
                outer[s as usize * p + q] = (segs[0].factor(w) + segs[3].factor(w)) * scale;
            }
        }
        // Outer segments vanish at L = N_t/2 and delta_sf has no effect.
        let j_range = if l == n_t / 2 { 0..=0 } else { -n_b..=n_b };
        for i in 0..=n_b {
            let inn = &inner[i as usize * p..(i as usize + 1) * p];
            let ph = joint[i as usize];
            for j in j_range.clone() {
                let s = (i + j + n_b) as usize;
                let out = &outer[s * p..(s + 1) * p];
                let lb = search.lower_bound();
                let mut v = f64::INFINITY;
                for q in 0..p {
                    v = v.min((inn[q] + ph * out[q]).norm_sqr());
                    if v < lb {
                        break;
                    }
                }
                search.offer(v, Key { i, l, j });
            }
        }
    }
}
