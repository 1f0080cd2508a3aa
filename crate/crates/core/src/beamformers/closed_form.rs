//! Two-path optimal beamformers when one side's steering vectors are orthogonal.

use super::{Beamformer, BeamformerPair};
use crate::error::{Error, Result};
use crate::numerics::{vector, C64};

/// Orthogonality is accepted when the inner-product modulus is below this.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Below this overlap the orthogonal-u power split degenerates to all-or-nothing.
const OVERLAP_FLOOR: f64 = 1e-12;

/// A closed-form pair together with the power fraction it puts on path 1.
#[derive(Clone, Debug)]
pub struct ClosedFormSolution {
    pub pair: BeamformerPair,
    pub beta_sq: f64,
}

/// Power fraction on path 1 for orthogonal AoD vectors.
///
/// `a1`, `a2` are `|alpha_1|^2`, `|alpha_2|^2`; `overlap` is `|u_1^H u_2|`.
pub fn beta_sq_orthogonal_v(a1: f64, a2: f64, overlap: f64) -> f64 {
    let d = a1 - a2;
    let root = (d * d + 4.0 * a1 * a2 * overlap * overlap).sqrt();
    if root == 0.0 {
        // Both gains zero, or equal gains with orthogonal u: any split is optimal.
        return 0.5;
    }
    0.5 * (1.0 + d / root)
}

/// Power fraction on path 1 for orthogonal AoA vectors; `overlap` is `|v_1^H v_2|`.
pub fn beta_sq_orthogonal_u(a1: f64, a2: f64, overlap: f64) -> f64 {
    if overlap < OVERLAP_FLOOR {
        return if a1 >= a2 { 1.0 } else { 0.0 };
    }
    let k = overlap * overlap;
    let d = a1 - a2;
    let s = a1 + a2;
    let big_a = d * d / k + 2.0 * a1 * s;
    let big_b = d.powi(4) / (k * k) + 4.0 * a1 * a2 * d * d / k;
    let big_c = (1.0 + 1.0 / k) * s * s - 4.0 * a1 * a2 / k;
    let root_b = big_b.max(0.0).sqrt();
    if a1 >= a2 {
        (big_a + root_b) / (2.0 * big_c)
    } else {
        // (A - sqrt B) / 2C rewritten with A^2 - B = 4 a1^2 (d^2/k + s^2) to avoid cancellation.
        4.0 * a1 * a1 * (d * d / k + s * s) / (2.0 * big_c * (big_a + root_b))
    }
}

fn check(u1: &[C64], u2: &[C64], v1: &[C64], v2: &[C64]) -> Result<()> {
    if u1.len() != u2.len() || v1.len() != v2.len() || u1.is_empty() || v1.is_empty() {
        return Err(Error::DimensionMismatch(
            "steering vector lengths differ".into(),
        ));
    }
    for x in [u1, u2, v1, v2] {
        if (vector::norm2(x) - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(
                "steering vectors must be unit-norm".into(),
            ));
        }
    }
    Ok(())
}

fn finish(f: Vec<C64>, g: Vec<C64>, beta_sq: f64) -> Result<ClosedFormSolution> {
    Ok(ClosedFormSolution {
        pair: BeamformerPair {
            tx: Beamformer::energy(&f)?,
            rx: Beamformer::energy(&g)?,
        },
        beta_sq,
    })
}

/// Optimal pair for `v_1 ⊥ v_2` and arbitrary `u_1`, `u_2`.
pub fn closed_form_l2_orthogonal_v(
    alpha1: C64,
    alpha2: C64,
    u1: &[C64],
    u2: &[C64],
    v1: &[C64],
    v2: &[C64],
) -> Result<ClosedFormSolution> {
    check(u1, u2, v1, v2)?;
    let vv = vector::dot(v1, v2).norm();
    if vv >= ORTHOGONALITY_TOL {
        return Err(Error::Precondition(format!(
            "|v1^H v2| = {vv:.3e} is not orthogonal"
        )));
    }
    let uu = vector::dot(u1, u2);
    let beta_sq = beta_sq_orthogonal_v(alpha1.norm_sqr(), alpha2.norm_sqr(), uu.norm());
    let beta = beta_sq.sqrt();
    let rest = (1.0 - beta_sq).max(0.0).sqrt();
    let rot = C64::from_polar(
        1.0,
        vector::phase(alpha1) - vector::phase(alpha2) - vector::phase(uu),
    );
    let f: Vec<C64> = v1
        .iter()
        .zip(v2)
        .map(|(a, b)| a * beta + rot * b * rest)
        .collect();
    let g: Vec<C64> = u1
        .iter()
        .zip(u2)
        .map(|(a, b)| alpha1 * beta * a + rot * alpha2 * rest * b)
        .collect();
    finish(f, g, beta_sq)
}

/// Optimal pair for `u_1 ⊥ u_2` and arbitrary `v_1`, `v_2`.
pub fn closed_form_l2_orthogonal_u(
    alpha1: C64,
    alpha2: C64,
    u1: &[C64],
    u2: &[C64],
    v1: &[C64],
    v2: &[C64],
) -> Result<ClosedFormSolution> {
    check(u1, u2, v1, v2)?;
    let uu = vector::dot(u1, u2).norm();
    if uu >= ORTHOGONALITY_TOL {
        return Err(Error::Precondition(format!(
            "|u1^H u2| = {uu:.3e} is not orthogonal"
        )));
    }
    let vv = vector::dot(v1, v2);
    let kappa = vv.norm();
    let beta_sq = beta_sq_orthogonal_u(alpha1.norm_sqr(), alpha2.norm_sqr(), kappa);
    let beta = beta_sq.sqrt();
    let rest = (1.0 - beta_sq).max(0.0).sqrt();
    let rot = C64::from_polar(1.0, -vector::phase(vv));
    let f: Vec<C64> = v1
        .iter()
        .zip(v2)
        .map(|(a, b)| a * beta + rot * b * rest)
        .collect();
    let c1 = alpha1 * (beta + kappa * rest);
    let c2 = rot * alpha2 * (kappa * beta + rest);
    let g: Vec<C64> = u1.iter().zip(u2).map(|(a, b)| c1 * a + c2 * b).collect();
    finish(f, g, beta_sq)
}
