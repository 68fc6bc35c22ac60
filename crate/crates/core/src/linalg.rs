//! Linear algebra for indefinite metrics at a single point.
//!
//! Zero/rank decisions are relative: a quantity counts as zero when it is
//! at most `tol` times the largest magnitude of the input it was derived from.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:e}")]
    NonSymmetric { i: usize, j: usize, gap: f64 },
    #[error("metric is degenerate")]
    DegenerateMetric,
    #[error("restriction of the metric to the span is degenerate (lightlike direction)")]
    Lightlike,
    #[error("vectors are linearly dependent")]
    LinearlyDependent,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Inertia of a symmetric bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
}

impl Signature {
    /// Number of negative directions.
    pub fn index(&self) -> usize {
        self.n_neg
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.n_zero == 0
    }

    pub fn dim(&self) -> usize {
        self.n_pos + self.n_neg + self.n_zero
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.n_pos, self.n_neg, self.n_zero)
    }
}

/// Pseudo-orthonormal frame: `g(e_i, e_j) = signs[i] * δ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub vectors: Vec<DVector<f64>>,
    pub signs: Vec<f64>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest deviation of the Gram matrix from `diag(signs)`.
    pub fn gram_residual(&self, g: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                let want = if i == j { self.signs[i] } else { 0.0 };
                worst = worst.max((inner(g, u, v) - want).abs());
            }
        }
        worst
    }

    pub fn signature(&self) -> Signature {
        let n_pos = self.signs.iter().filter(|s| **s > 0.0).count();
        Signature {
            n_pos,
            n_neg: self.signs.len() - n_pos,
            n_zero: 0,
        }
    }
}

pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > tol * scale {
                return Err(LinalgError::NonSymmetric { i, j, gap });
            }
        }
    }
    Ok(())
}

/// Inertia via symmetric-indefinite LDLᵀ with complete (Bunch–Parlett)
/// pivoting. 2x2 pivots are only taken when their determinant is negative, so
/// each contributes exactly one positive and one negative direction.
pub fn signature(m: &DMatrix<f64>, tol: f64) -> Result<Signature, LinalgError> {
    check_symmetric(m, tol)?;
    let n = m.nrows();
    // symmetrise away sub-tolerance asymmetry
    let mut a = (m + m.transpose()) * 0.5;
    let reference = max_abs(&a);
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut active: Vec<usize> = (0..n).collect();
    let mut sig = Signature {
        n_pos: 0,
        n_neg: 0,
        n_zero: 0,
    };

    while !active.is_empty() {
        let mut mu0 = 0.0f64;
        let mut off = (active[0], active[0]);
        let mut mu1 = 0.0f64;
        let mut diag = active[0];
        for (ii, &i) in active.iter().enumerate() {
            if a[(i, i)].abs() > mu1 {
                mu1 = a[(i, i)].abs();
                diag = i;
            }
            for &j in &active[ii + 1..] {
                if a[(i, j)].abs() > mu0 {
                    mu0 = a[(i, j)].abs();
                    off = (i, j);
                }
            }
        }
        if mu0.max(mu1) <= tol * reference || reference == 0.0 {
            sig.n_zero += active.len();
            break;
        }
        if mu1 >= alpha * mu0 {
            let d = a[(diag, diag)];
            if d > 0.0 {
                sig.n_pos += 1;
            } else {
                sig.n_neg += 1;
            }
            active.retain(|&k| k != diag);
            for &i in &active {
                let li = a[(i, diag)] / d;
                for &j in &active {
                    a[(i, j)] -= li * a[(diag, j)];
                }
            }
        } else {
            let (r, s) = off;
            let (err, ers, ess) = (a[(r, r)], a[(r, s)], a[(s, s)]);
            let det = err * ess - ers * ers;
            sig.n_pos += 1;
            sig.n_neg += 1;
            active.retain(|&k| k != r && k != s);
            // S <- S - C E^{-1} C^T
            let inv = [ess / det, -ers / det, err / det];
            for &i in &active {
                let (cir, cis) = (a[(i, r)], a[(i, s)]);
                let wr = cir * inv[0] + cis * inv[1];
                let ws = cir * inv[1] + cis * inv[2];
                for &j in &active {
                    a[(i, j)] -= wr * a[(r, j)] + ws * a[(s, j)];
                }
            }
        }
    }
    Ok(sig)
}

/// Orthonormal (Euclidean) basis of the kernel of `m`.
///
/// Singular values at most `tol * σ_max` count as zero.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    // pad to at least square so the SVD yields a full right basis
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    let mut out: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| smax == 0.0 || **s <= tol * smax)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    // deterministic orientation: largest-magnitude entry positive
    for v in &mut out {
        let k = v.iamax();
        if v[k] < 0.0 {
            *v = -v.clone();
        }
    }
    out
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    m.ncols() - null_space(m, tol).len()
}

/// Matrix whose columns are the given vectors.
pub fn columns(vectors: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Rank of a list of vectors.
pub fn span_rank(vectors: &[DVector<f64>], dim: usize, tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    rank(&columns(vectors, dim).transpose(), tol)
}

/// All `w` with `g(w, b) = 0` for every `b` in `basis`.
pub fn g_orthogonal_complement(
    basis: &[DVector<f64>],
    g: &DMatrix<f64>,
    tol: f64,
) -> Result<Vec<DVector<f64>>, LinalgError> {
    let n = g.nrows();
    if !signature(g, tol)?.is_nondegenerate() {
        return Err(LinalgError::DegenerateMetric);
    }
    if let Some(b) = basis.iter().find(|b| b.len() != n) {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    if basis.is_empty() {
        return Ok((0..n)
            .map(|i| DVector::from_fn(n, |k, _| (k == i) as u8 as f64))
            .collect());
    }
    let constraints = columns(basis, n).transpose() * g;
    Ok(null_space(&constraints, tol))
}

/// Gram–Schmidt with respect to an indefinite `g`.
///
/// At each step the remaining vector with the largest relative `|g(v,v)|` is
/// taken as the next pivot. When every remaining vector is numerically null
/// but the span is not, two of them are combined (`v_i ± v_j`) into a
/// non-null vector. A degenerate restriction is reported as
/// [`LinalgError::Lightlike`].
pub fn pseudo_orthonormalize(basis: &[DVector<f64>], g: &DMatrix<f64>, tol: f64) -> Result<Frame, LinalgError> {
    let n = g.nrows();
    if let Some(b) = basis.iter().find(|b| b.len() != n) {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let gnorm = max_abs(g).max(f64::MIN_POSITIVE);
    let input_scale = basis.iter().fold(0.0f64, |a, v| a.max(v.amax()));
    let mut work: Vec<DVector<f64>> = basis.to_vec();
    let mut frame = Frame {
        vectors: Vec::new(),
        signs: Vec::new(),
    };
    while !work.is_empty() {
        for w in work.iter_mut() {
            for (e, s) in frame.vectors.iter().zip(&frame.signs) {
                let c = s * inner(g, w, e);
                *w -= e * c;
            }
        }
        if work.iter().all(|w| w.amax() <= tol * input_scale.max(1.0)) {
            return Err(LinalgError::LinearlyDependent);
        }
        let rel = |u: &DVector<f64>, v: &DVector<f64>| {
            let denom = u.norm() * v.norm() * gnorm;
            if denom == 0.0 {
                0.0
            } else {
                inner(g, u, v) / denom
            }
        };
        let (best, best_rel) = work
            .iter()
            .enumerate()
            .map(|(i, w)| (i, rel(w, w).abs()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let pick = if best_rel > tol {
            best
        } else {
            let mut pair = None;
            let mut pair_rel = tol;
            for i in 0..work.len() {
                for j in i + 1..work.len() {
                    let r = rel(&work[i], &work[j]).abs();
                    if r > pair_rel {
                        pair_rel = r;
                        pair = Some((i, j));
                    }
                }
            }
            let (i, j) = pair.ok_or(LinalgError::Lightlike)?;
            let s = inner(g, &work[i], &work[j]).signum();
            let combined = &work[i] + &work[j] * s;
            work[i] = combined;
            i
        };
        let w = work.remove(pick);
        let d = inner(g, &w, &w);
        frame.vectors.push(&w / d.abs().sqrt());
        frame.signs.push(d.signum());
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn sig(p: usize, n: usize, z: usize) -> Signature {
        Signature {
            n_pos: p,
            n_neg: n,
            n_zero: z,
        }
    }

    fn eig_signature(m: &DMatrix<f64>, tol: f64) -> Signature {
        let e = SymmetricEigen::new(m.clone());
        let scale = e.eigenvalues.amax();
        let mut s = sig(0, 0, 0);
        for l in e.eigenvalues.iter() {
            if l.abs() <= tol * scale {
                s.n_zero += 1;
            } else if *l > 0.0 {
                s.n_pos += 1;
            } else {
                s.n_neg += 1;
            }
        }
        s
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(signature(&DMatrix::identity(4, 4), DEFAULT_TOL).unwrap(), sig(4, 0, 0));
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        assert_eq!(signature(&d, DEFAULT_TOL).unwrap(), sig(2, 1, 0));
    }

    #[test]
    fn hyperbolic_plane_needs_two_by_two_pivot() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(signature(&m, DEFAULT_TOL).unwrap(), sig(1, 1, 0));
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(signature(&m, DEFAULT_TOL).unwrap(), sig(1, 1, 1));
    }

    #[test]
    fn zero_matrix_is_all_null() {
        assert_eq!(signature(&DMatrix::zeros(3, 3), DEFAULT_TOL).unwrap(), sig(0, 0, 3));
    }

    #[test]
    fn non_symmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            signature(&m, DEFAULT_TOL),
            Err(LinalgError::NonSymmetric { .. })
        ));
    }

    #[test]
    fn null_space_basics() {
        assert_eq!(null_space(&DMatrix::zeros(2, 2), DEFAULT_TOL).len(), 2);
        assert!(null_space(&DMatrix::identity(3, 3), DEFAULT_TOL).is_empty());
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, DEFAULT_TOL);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&m * v).amax() <= 1e-12);
        }
    }

    #[test]
    fn complement_in_euclidean_plane() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let c = g_orthogonal_complement(&[e1], &DMatrix::identity(2, 2), DEFAULT_TOL).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0][0].abs() < 1e-15 && (c[0][1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complement_rejects_degenerate_metric() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(
            g_orthogonal_complement(&[], &g, DEFAULT_TOL),
            Err(LinalgError::DegenerateMetric)
        );
    }

    #[test]
    fn orthonormalize_standard_basis_is_identity() {
        let g = DMatrix::identity(3, 3);
        let basis: Vec<_> = (0..3)
            .map(|i| DVector::from_fn(3, |k, _| (k == i) as u8 as f64))
            .collect();
        let f = pseudo_orthonormalize(&basis, &g, DEFAULT_TOL).unwrap();
        assert_eq!(f.signs, vec![1.0; 3]);
        for (e, b) in f.vectors.iter().zip(&basis) {
            assert_eq!(e, b);
        }
    }

    #[test]
    fn orthonormalize_null_basis_of_minkowski_plane() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let basis = vec![DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![1.0, -1.0])];
        let f = pseudo_orthonormalize(&basis, &g, DEFAULT_TOL).unwrap();
        assert!(f.gram_residual(&g) < 1e-12);
        assert_eq!(f.signature(), sig(1, 1, 0));
    }

    #[test]
    fn lightlike_line_is_reported() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let basis = vec![DVector::from_vec(vec![1.0, 1.0])];
        assert_eq!(
            pseudo_orthonormalize(&basis, &g, DEFAULT_TOL),
            Err(LinalgError::Lightlike)
        );
    }

    fn random_invertible(seed: &[f64], n: usize) -> DMatrix<f64> {
        let mut p = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        for i in 0..n {
            p[(i, i)] += 3.0;
        }
        p
    }

    proptest! {
        #[test]
        fn signature_invariant_under_congruence(
            diag in proptest::collection::vec(prop_oneof![Just(-1.0), Just(0.0), Just(1.0), -4.0..4.0f64], 5),
            mix in proptest::collection::vec(-1.0..1.0f64, 25),
        ) {
            let d = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
            let base = signature(&d, 1e-8).unwrap();
            let p = random_invertible(&mix, 5);
            let c = p.transpose() * &d * &p;
            let c = (&c + c.transpose()) * 0.5;
            prop_assert_eq!(signature(&c, 1e-8).unwrap(), base);
            prop_assert_eq!(eig_signature(&c, 1e-8), base);
        }

        #[test]
        fn complement_dimensions_add_up(
            diag in proptest::collection::vec(prop_oneof![Just(-1.0), Just(1.0)], 5),
            vecs in proptest::collection::vec(-1.0..1.0f64, 10),
        ) {
            let g = DMatrix::from_diagonal(&DVector::from_vec(diag));
            let basis: Vec<_> = vecs.chunks(5).map(|c| DVector::from_vec(c.to_vec())).collect();
            let r = span_rank(&basis, 5, 1e-9);
            let comp = g_orthogonal_complement(&basis, &g, 1e-9).unwrap();
            prop_assert_eq!(r + comp.len(), 5);
            for w in &comp {
                for b in &basis {
                    prop_assert!(inner(&g, w, b).abs() < 1e-9);
                }
            }
            // complement of the complement recovers the span
            let back = g_orthogonal_complement(&comp, &g, 1e-9).unwrap();
            prop_assert_eq!(back.len(), r);
            let mut joined = back.clone();
            joined.extend(basis.iter().cloned());
            prop_assert_eq!(span_rank(&joined, 5, 1e-9), r);
        }
    }
}
