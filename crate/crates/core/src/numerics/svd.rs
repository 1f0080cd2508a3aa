use super::{sweep_cap, vector, ComplexMatrix, C64, CONVERGENCE_TOL};
use crate::error::{Error, Result};

/// Full singular value decomposition `M = U diag(s) V^H`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `rows x rows` unitary.
    pub left_vectors: ComplexMatrix,
    /// `min(rows, cols)` values, non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `cols x cols` unitary.
    pub right_vectors: ComplexMatrix,
}

impl SvdResult {
    /// Dominant right singular vector.
    pub fn v1(&self) -> Vec<C64> {
        self.right_vectors.column(0)
    }

    /// `U diag(s) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        reconstruct(
            &self.left_vectors,
            &self.singular_values,
            &self.right_vectors,
        )
    }
}

/// Economy SVD: only the `min(rows, cols)` paired singular vectors.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl ThinSvd {
    pub fn v1(&self) -> Vec<C64> {
        self.v.column(0)
    }

    pub fn u1(&self) -> Vec<C64> {
        self.u.column(0)
    }

    pub fn sigma1(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

fn reconstruct(u: &ComplexMatrix, s: &[f64], v: &ComplexMatrix) -> ComplexMatrix {
    let rows = u.rows();
    let cols = v.rows();
    ComplexMatrix::from_fn(rows, cols, |r, c| {
        s.iter()
            .enumerate()
            .map(|(k, &sk)| u[(r, k)] * sk * v[(c, k)].conj())
            .sum()
    })
}

/// Economy SVD by one-sided (Hestenes) Jacobi.
///
/// Phase convention: in each right singular vector the first entry of
/// largest magnitude is real and non-negative; the paired left vector is
/// rotated to match.
pub fn thin_svd(m: &ComplexMatrix) -> Result<ThinSvd> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::DimensionMismatch("svd of an empty matrix".into()));
    }
    if !vector::all_finite(m.as_slice()) {
        return Err(Error::NonFinite("svd input"));
    }
    // Orthogonalize the columns of the tall orientation.
    let tall = m.rows() >= m.cols();
    let work = if tall { m.clone() } else { m.adjoint() };
    let (w, rot) = one_sided_jacobi(&work)?;
    let k = work.cols();

    let mut order: Vec<usize> = (0..k).collect();
    let sigma: Vec<f64> = w.iter().map(|c| vector::norm2(c)).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut left: Vec<Option<Vec<C64>>> = Vec::with_capacity(k);
    let mut right: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for &i in &order {
        values.push(sigma[i]);
        left.push(if sigma[i] > 0.0 {
            Some(w[i].iter().map(|z| z / sigma[i]).collect())
        } else {
            None
        });
        right.push(rot[i].clone());
    }
    let left = fill_missing(left, work.rows());

    // In the wide case the roles swap: M = (rot) S (w/s)^H.
    let (mut us, mut vs) = if tall { (left, right) } else { (right, left) };
    for (u, v) in us.iter_mut().zip(vs.iter_mut()) {
        fix_phase(v, Some(u));
    }
    Ok(ThinSvd {
        u: ComplexMatrix::from_columns(&us),
        singular_values: values,
        v: ComplexMatrix::from_columns(&vs),
    })
}

/// Full SVD with both singular-vector matrices completed to unitaries.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    let thin = thin_svd(m)?;
    let mut left = complete_unitary(&thin.u.columns(), m.rows());
    let mut right = complete_unitary(&thin.v.columns(), m.cols());
    for v in right.iter_mut().skip(thin.singular_values.len()) {
        fix_phase(v, None);
    }
    // Completion columns of U carry no singular value; leave them as built.
    left.truncate(m.rows());
    right.truncate(m.cols());
    Ok(SvdResult {
        left_vectors: ComplexMatrix::from_columns(&left),
        singular_values: thin.singular_values,
        right_vectors: ComplexMatrix::from_columns(&right),
    })
}

fn fix_phase(v: &mut [C64], paired: Option<&mut Vec<C64>>) {
    let idx = vector::argmax_abs(v);
    let z = v[idx];
    if z.norm() == 0.0 {
        return;
    }
    let unphase = (z / z.norm()).conj();
    for x in v.iter_mut() {
        *x *= unphase;
    }
    v[idx] = C64::new(v[idx].norm(), 0.0);
    if let Some(u) = paired {
        for x in u.iter_mut() {
            *x *= unphase;
        }
    }
}

/// Returns the rotated columns `A V` and the accumulated rotation `V`
/// (both as column lists).
/// Column lists.
type Columns = Vec<Vec<C64>>;

fn one_sided_jacobi(a: &ComplexMatrix) -> Result<(Columns, Columns)> {
    let n = a.cols();
    let mut w = a.columns();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[i] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let cap = sweep_cap(a.rows(), a.cols());
    for _ in 0..cap {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = vector::norm_sqr(&w[p]);
                let beta = vector::norm_sqr(&w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = vector::dot(&w[p], &w[q]);
                let g = gamma.norm();
                if g <= CONVERGENCE_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let unphase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s, unphase);
                let (lo, hi) = v.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s, unphase);
            }
        }
        if !rotated {
            return Ok((w, v));
        }
    }
    Err(Error::NonConvergence {
        routine: "svd",
        sweeps: cap,
    })
}

fn rotate_pair(x: &mut [C64], y: &mut [C64], c: f64, s: f64, unphase: C64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b * unphase;
        *a = xa * c - yb * s;
        *b = xa * s + yb * c;
    }
}

/// Replaces `None` entries by unit vectors orthogonal to the known ones.
fn fill_missing(cols: Vec<Option<Vec<C64>>>, dim: usize) -> Vec<Vec<C64>> {
    if cols.iter().all(Option::is_some) {
        return cols.into_iter().flatten().collect();
    }
    let known: Vec<Vec<C64>> = cols.iter().flatten().cloned().collect();
    let mut extra = complete_unitary(&known, dim).into_iter().skip(known.len());
    cols.into_iter()
        .map(|c| c.unwrap_or_else(|| extra.next().expect("completion exhausted")))
        .collect()
}

/// Extends orthonormal `cols` (each of length `dim`) to a full orthonormal
/// basis of C^dim, keeping the given columns first and unchanged.
///
/// The complement comes from the Householder QR of the given columns.
pub(crate) fn complete_unitary(cols: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let r = cols.len();
    let mut out: Vec<Vec<C64>> = cols.to_vec();
    if r >= dim {
        return out;
    }
    let mut work: Vec<Vec<C64>> = cols.to_vec();
    let mut reflectors: Vec<(usize, Vec<C64>)> = Vec::with_capacity(r);
    for k in 0..r {
        let x: Vec<C64> = work[k][k..].to_vec();
        let xn = vector::norm2(&x);
        if xn == 0.0 {
            continue;
        }
        let lead = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut h = x;
        h[0] += lead * xn;
        let hn2 = vector::norm_sqr(&h);
        if hn2 == 0.0 {
            continue;
        }
        for col in work.iter_mut().skip(k) {
            apply_reflector(&mut col[k..], &h, hn2);
        }
        reflectors.push((k, h));
    }
    for j in r..dim {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[j] = C64::new(1.0, 0.0);
        for (k, h) in reflectors.iter().rev() {
            let hn2 = vector::norm_sqr(h);
            apply_reflector(&mut e[*k..], h, hn2);
        }
        out.push(e);
    }
    out
}

fn apply_reflector(x: &mut [C64], h: &[C64], hn2: f64) {
    let proj = vector::dot(h, x) * (2.0 / hn2);
    for (xi, hi) in x.iter_mut().zip(h) {
        *xi -= hi * proj;
    }
}
