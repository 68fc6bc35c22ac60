//! Small dense linear algebra over jets.
//!
//! Matrices are row-major `Vec<Jet>`; vectors are `Vec<Jet>`.

use nalgebra::DMatrix;

use crate::expr::Jet;

pub fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(|j| j.value).collect()
}

pub fn value_matrix(m: &[Jet], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| m[i * cols + j].value)
}

pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut it = a.iter().zip(b).map(|(x, y)| x * y);
    let first = it.next().expect("non-empty vectors");
    it.fold(first, |acc, t| acc + t)
}

/// `m · v` for an `rows × v.len()` matrix.
pub fn mat_vec(m: &[Jet], rows: usize, v: &[Jet]) -> Vec<Jet> {
    let cols = v.len();
    (0..rows).map(|i| dot(&m[i * cols..(i + 1) * cols], v)).collect()
}

/// `a · b` with `a` of shape `r × k` and `b` of shape `k × c`.
pub fn mat_mul(a: &[Jet], r: usize, k: usize, b: &[Jet], c: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            let mut acc = &a[i * k] * &b[j];
            for l in 1..k {
                acc += &a[i * k + l] * &b[l * c + j];
            }
            out.push(acc);
        }
    }
    out
}

pub fn transpose(m: &[Jet], rows: usize, cols: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            out.push(m[i * cols + j].clone());
        }
    }
    out
}

pub fn add(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Jet], s: f64) -> Vec<Jet> {
    a.iter().map(|x| x * s).collect()
}

pub fn lowest_order(m: &[Jet]) -> u8 {
    m.iter().map(Jet::order).min().unwrap_or(2)
}

/// Inverse of a square jet matrix, differentiated through
/// `∂(M⁻¹) = −M⁻¹ ∂M M⁻¹` and its second-order analogue.
///
/// Returns `None` when the value matrix is singular. The result has the
/// lowest order present in the input.
pub fn inverse(m: &[Jet], n: usize) -> Option<Vec<Jet>> {
    let m0 = value_matrix(m, n, n);
    let inv = m0.try_inverse()?;
    if inv.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let order = lowest_order(m);
    if order == 0 {
        return Some(inv.transpose().iter().map(|x| Jet::value_only(*x)).collect());
    }
    let d = m.iter().find(|j| j.order() > 0).map(Jet::dim).unwrap_or(0);
    let dm: Vec<DMatrix<f64>> = (0..d)
        .map(|a| DMatrix::from_fn(n, n, |i, j| m[i * n + j].gradient[a]))
        .collect();
    let grads: Vec<DMatrix<f64>> = dm.iter().map(|da| -(&inv * da * &inv)).collect();
    let hess: Option<Vec<DMatrix<f64>>> = (order == 2).then(|| {
        let mut out = vec![DMatrix::zeros(n, n); d * d];
        for a in 0..d {
            for b in a..d {
                let ddm = DMatrix::from_fn(n, n, |i, j| {
                    m[i * n + j].hessian_entry(a, b).expect("second-order input")
                });
                let mid = &dm[a] * &inv * &dm[b] + &dm[b] * &inv * &dm[a] - ddm;
                let h = &inv * mid * &inv;
                out[b * d + a] = h.clone();
                out[a * d + b] = h;
            }
        }
        out
    });
    let mut result = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            result.push(Jet {
                value: inv[(i, j)],
                gradient: grads.iter().map(|g| g[(i, j)]).collect(),
                hessian: hess.as_ref().map(|hs| hs.iter().map(|h| h[(i, j)]).collect()),
            });
        }
    }
    Some(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_scalar_jet_matches_recip() {
        let x = Jet::variable(2.0, 0, 1);
        let m = vec![&x * &x + Jet::constant(1.0, 1)];
        let inv = inverse(&m, 1).unwrap();
        let direct = m[0].recip();
        assert!((inv[0].value - direct.value).abs() < 1e-15);
        assert!((inv[0].gradient[0] - direct.gradient[0]).abs() < 1e-15);
        let (h1, h2) = (inv[0].hessian_entry(0, 0).unwrap(), direct.hessian_entry(0, 0).unwrap());
        assert!((h1 - h2).abs() < 1e-14);
    }

    #[test]
    fn inverse_times_matrix_is_identity_to_second_order() {
        let x = Jet::variable(0.3, 0, 2);
        let y = Jet::variable(-0.7, 1, 2);
        let one = Jet::constant(1.0, 2);
        let m = vec![&one + &(&x * &y), x.sin(), y.exp(), -(&one + &(&x * &x))];
        let inv = inverse(&m, 2).unwrap();
        let prod = mat_mul(&m, 2, 2, &inv, 2);
        for (k, e) in prod.iter().enumerate() {
            let target = if k == 0 || k == 3 { 1.0 } else { 0.0 };
            assert!((e.value - target).abs() < 1e-14);
            assert!(e.gradient.iter().all(|g| g.abs() < 1e-13));
            assert!(e.hessian.as_ref().unwrap().iter().all(|h| h.abs() < 1e-12));
        }
    }

    #[test]
    fn singular_inverse_is_none() {
        let z = Jet::constant(0.0, 1);
        assert!(inverse(&[z.clone(), z.clone(), z.clone(), z], 2).is_none());
    }
}
