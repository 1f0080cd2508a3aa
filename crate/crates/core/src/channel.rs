//! Geometric multipath channels for uniform linear arrays.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::rng::complex_normal;

/// Default field of view in degrees.
pub const DEFAULT_FOV_DEG: [f64; 2] = [30.0, 150.0];

/// A uniform linear array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "half_wavelength")]
    pub spacing_over_wavelength: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

impl ArrayGeometry {
    /// Half-wavelength array with `n` elements.
    pub fn ula(n: usize) -> Self {
        Self {
            n_elements: n,
            spacing_over_wavelength: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(Error::Config("array needs at least one element".into()));
        }
        if !(self.spacing_over_wavelength > 0.0 && self.spacing_over_wavelength.is_finite()) {
            return Err(Error::Config(format!(
                "element spacing must be positive, got {}",
                self.spacing_over_wavelength
            )));
        }
        Ok(())
    }

    /// Beamspace coordinate of an azimuth seen by this array.
    pub fn beamspace(&self, angle_deg: f64) -> f64 {
        beamspace(angle_deg, self.spacing_over_wavelength)
    }

    pub fn steering_vector(&self, angle_deg: f64) -> Vec<C64> {
        steering_vector(self, angle_deg)
    }
}

/// One scattering cluster: complex gain plus arrival and departure azimuths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathCluster {
    pub gain: C64,
    pub aoa_deg: f64,
    pub aod_deg: f64,
}

/// Everything needed to synthesize one channel draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub rx: ArrayGeometry,
    pub tx: ArrayGeometry,
    pub paths: Vec<PathCluster>,
    #[serde(default = "default_fov")]
    pub fov_deg: [f64; 2],
    pub rho_forward_db: f64,
    pub rho_reverse_db: f64,
}

fn default_fov() -> [f64; 2] {
    DEFAULT_FOV_DEG
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.rx.validate()?;
        self.tx.validate()?;
        if self.paths.is_empty() {
            return Err(Error::Config("scenario has no paths".into()));
        }
        if !(self.rho_forward_db.is_finite() && self.rho_reverse_db.is_finite()) {
            return Err(Error::Config("pre-beamforming SNRs must be finite".into()));
        }
        validate_fov(self.fov_deg)?;
        let [lo, hi] = self.fov_deg;
        for (i, p) in self.paths.iter().enumerate() {
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(Error::Config(format!("path {i} has a non-finite gain")));
            }
            for a in [p.aoa_deg, p.aod_deg] {
                if !(lo..=hi).contains(&a) {
                    return Err(Error::Config(format!(
                        "path {i} angle {a} deg outside the field of view [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Index of the path with the largest gain magnitude; ties go to the lowest index.
    pub fn dominant_path(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.paths.iter().enumerate() {
            if p.gain.norm() > self.paths[best].gain.norm() {
                best = i;
            }
        }
        best
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A synthesized `N_r x N_t` channel and the scenario it came from.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    pub h: ComplexMatrix,
    pub source: Scenario,
}

impl ChannelMatrix {
    pub fn n_rx(&self) -> usize {
        self.h.rows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.cols()
    }
}

/// `2 pi (d / lambda) cos(angle)`.
pub fn beamspace(angle_deg: f64, d_over_lambda: f64) -> f64 {
    TAU * d_over_lambda * angle_deg.to_radians().cos()
}

/// Unit-norm ULA response with entry `m` equal to `exp(j m omega) / sqrt(N)`.
pub fn steering_vector(geom: &ArrayGeometry, angle_deg: f64) -> Vec<C64> {
    beamspace_vector(geom.n_elements, geom.beamspace(angle_deg))
}

/// Steering vector parameterized directly by the beamspace coordinate.
pub fn beamspace_vector(n: usize, omega: f64) -> Vec<C64> {
    let a = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|m| C64::from_polar(a, m as f64 * omega))
        .collect()
}

/// `H = sqrt(N_r N_t / L) sum_l alpha_l u_l v_l^H`.
pub fn build_channel(s: &Scenario) -> Result<ChannelMatrix> {
    s.validate()?;
    let nr = s.rx.n_elements;
    let nt = s.tx.n_elements;
    let scale = ((nr * nt) as f64 / s.paths.len() as f64).sqrt();
    let mut h = ComplexMatrix::zeros(nr, nt);
    for p in &s.paths {
        let u = s.rx.steering_vector(p.aoa_deg);
        let v = s.tx.steering_vector(p.aod_deg);
        let g = p.gain * scale;
        for (r, ur) in u.iter().enumerate() {
            let gu = g * ur;
            for (c, vc) in v.iter().enumerate() {
                h[(r, c)] += gu * vc.conj();
            }
        }
    }
    Ok(ChannelMatrix {
        h,
        source: s.clone(),
    })
}

/// Draws `l` paths with CN(0, 1) gains and azimuths uniform on the field of view.
///
/// Checks `0 <= lo <= hi <= 180` degrees.
pub fn validate_fov(fov_deg: [f64; 2]) -> Result<()> {
    let [lo, hi] = fov_deg;
    if !(0.0 <= lo && lo <= hi && hi <= 180.0) {
        return Err(Error::Config(format!("bad field of view [{lo}, {hi}]")));
    }
    Ok(())
}

/// All gains are drawn first, then the (AoA, AoD) pair of each path in turn.
pub fn sample_scenario<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    rx: ArrayGeometry,
    tx: ArrayGeometry,
    fov_deg: [f64; 2],
    rho_forward_db: f64,
    rho_reverse_db: f64,
) -> Result<Scenario> {
    if l == 0 {
        return Err(Error::Config("need at least one path".into()));
    }
    let [lo, hi] = fov_deg;
    let gains: Vec<C64> = (0..l).map(|_| complex_normal(rng)).collect();
    let angle = |rng: &mut R| lo + (hi - lo) * rng.random::<f64>();
    let paths = gains
        .into_iter()
        .map(|gain| {
            let aoa_deg = angle(rng);
            let aod_deg = angle(rng);
            PathCluster {
                gain,
                aoa_deg,
                aod_deg,
            }
        })
        .collect();
    let s = Scenario {
        rx,
        tx,
        paths,
        fov_deg,
        rho_forward_db,
        rho_reverse_db,
    };
    s.validate()?;
    Ok(s)
}

/// The two-path example used for the phase-sensitivity study.
pub fn perturbation_scenario() -> Scenario {
    Scenario {
        rx: ArrayGeometry::ula(4),
        tx: ArrayGeometry::ula(64),
        paths: vec![
            PathCluster {
                gain: C64::new(2.61, 0.0),
                aoa_deg: 108.57,
                aod_deg: 83.74,
            },
            PathCluster {
                gain: C64::new(1.79, 0.0),
                aoa_deg: 92.74,
                aod_deg: 94.26,
            },
        ],
        fov_deg: DEFAULT_FOV_DEG,
        rho_forward_db: 0.0,
        rho_reverse_db: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::vector;

    #[test]
    fn broadside_steering_is_flat() {
        let v = steering_vector(&ArrayGeometry::ula(4), 90.0);
        for z in v {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sixty_degrees_two_elements() {
        let v = steering_vector(&ArrayGeometry::ula(2), 60.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((v[1] - C64::new(0.0, s)).norm() < 1e-15);
    }

    #[test]
    fn supplementary_angles_conjugate() {
        let g = ArrayGeometry::ula(8);
        let a = steering_vector(&g, 47.0);
        let b = steering_vector(&g, 133.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y.conj()).norm() < 1e-14);
        }
        assert!((vector::norm2(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beamspace_values() {
        assert!(beamspace(90.0, 0.5).abs() < 1e-15);
        assert!((beamspace(30.0, 0.5) - std::f64::consts::PI * 3f64.sqrt() / 2.0).abs() < 1e-12);
        let width = beamspace(30.0, 0.5) - beamspace(150.0, 0.5);
        assert!((width - std::f64::consts::PI * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_broadside_path_gives_all_ones() {
        let s = Scenario {
            rx: ArrayGeometry::ula(2),
            tx: ArrayGeometry::ula(2),
            paths: vec![PathCluster {
                gain: C64::new(1.0, 0.0),
                aoa_deg: 90.0,
                aod_deg: 90.0,
            }],
            fov_deg: DEFAULT_FOV_DEG,
            rho_forward_db: 0.0,
            rho_reverse_db: 0.0,
        };
        let h = build_channel(&s).unwrap().h;
        for z in h.as_slice() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_out_of_fov_path() {
        let mut s = perturbation_scenario();
        s.paths[0].aod_deg = 10.0;
        assert!(build_channel(&s).is_err());
    }
}
