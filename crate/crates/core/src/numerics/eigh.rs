use super::{sweep_cap, vector, ComplexMatrix, C64, CONVERGENCE_TOL};
use crate::error::{domain, Error, Result};

/// Inputs whose asymmetry exceeds this (relative to `max(1, max|m_ij|)`)
/// are rejected by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EighResult {
    /// Real eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl EighResult {
    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrized as `(m + m^H)/2` before iterating.
pub fn eigh(m: &ComplexMatrix) -> Result<EighResult> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigh needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !vector::all_finite(m.as_slice()) {
        return Err(Error::NonFinite("eigh input"));
    }
    let asym = m.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }

    let n = m.rows();
    let herm = m.hermitian_part();
    let mut a: Vec<C64> = herm.as_slice().to_vec();
    let mut v: Vec<C64> = ComplexMatrix::identity(n).as_slice().to_vec();
    let norm = herm.frobenius_norm();

    let cap = sweep_cap(n, n);
    let mut converged = norm == 0.0 || n < 2;
    let mut sweep = 0;
    while !converged {
        if sweep >= cap {
            return Err(Error::NonConvergence {
                routine: "eigh",
                sweeps: cap,
            });
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q, norm);
            }
        }
        converged = off_diagonal_norm(&a, n) <= CONVERGENCE_TOL * norm;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    // Stable sort keeps the original index order among equal eigenvalues.
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok(EighResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &[C64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize, norm: f64) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    if mag <= f64::EPSILON * 1e-3 * norm || mag == 0.0 {
        return;
    }
    // e^{-j phi} turns a[p][q] real and positive.
    let unphase = (apq / mag).conj();
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    for k in 0..n {
        let x = a[k * n + p];
        let y = a[k * n + q] * unphase;
        a[k * n + p] = x * c - y * s;
        a[k * n + q] = x * s + y * c;
    }
    let rephase = unphase.conj();
    for k in 0..n {
        let x = a[p * n + k];
        let y = a[q * n + k] * rephase;
        a[p * n + k] = x * c - y * s;
        a[q * n + k] = x * s + y * c;
    }
    a[p * n + q] = C64::new(0.0, 0.0);
    a[q * n + p] = C64::new(0.0, 0.0);
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;

    for k in 0..n {
        let x = v[k * n + p];
        let y = v[k * n + q] * unphase;
        v[k * n + p] = x * c - y * s;
        v[k * n + q] = x * s + y * c;
    }
}

/// `x^H m x / x^H x` for Hermitian `m`.
pub fn rayleigh_quotient(m: &ComplexMatrix, x: &[C64]) -> Result<f64> {
    if !m.is_square() || m.cols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "rayleigh quotient of {}x{} matrix with length-{} vector",
            m.rows(),
            m.cols(),
            x.len()
        )));
    }
    let denom = vector::norm_sqr(x);
    if denom == 0.0 {
        return Err(domain("rayleigh quotient of the zero vector"));
    }
    Ok(m.quadratic_form(x).re / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let r = eigh(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0; 4]);
    }

    #[test]
    fn rank_one_hermitian() {
        let a = vec![c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        let r = eigh(&ComplexMatrix::outer(&a, &a)).unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        for &l in &r.eigenvalues[1..] {
            assert!(l.abs() < 1e-14);
        }
        let overlap = vector::dot(&r.eigenvector(0), &a).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, 1+j], [1-j, 3]] has eigenvalues (5 +- sqrt(9)) / 2 = 4, 1.
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)],
        )
        .unwrap();
        let r = eigh(&m).unwrap();
        assert!((r.eigenvalues[0] - 4.0).abs() < 1e-13);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-13);
        for i in 0..2 {
            let q = r.eigenvector(i);
            let mq = m.matvec(&q);
            for k in 0..2 {
                assert!((mq[k] - q[k] * r.eigenvalues[i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rayleigh_examples() {
        let id = ComplexMatrix::identity(3);
        let x = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)];
        assert!((rayleigh_quotient(&id, &x).unwrap() - 1.0).abs() < 1e-15);
        let d = ComplexMatrix::from_diag(&[3.0, 1.0]);
        assert_eq!(
            rayleigh_quotient(&d, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            3.0
        );
        assert!(rayleigh_quotient(&d, &[c(0.0, 0.0); 2]).is_err());
    }
}
