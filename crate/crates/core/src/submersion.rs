//! Smooth maps between charts: differential, vertical/horizontal splitting,
//! O'Neill tensors, second fundamental form and tension field.
//!
//! The O'Neill tensors are evaluated through the vertical projector built
//! from declared smooth vertical fields, `P = V (VᵀgV)⁻¹ Vᵀ g`. With
//! `S = I − 2P` (horizontal minus vertical projection):
//!
//! ```text
//! T_E G = S (∇_{PE} P) G        A_E G = S (∇_{(I−P)E} P) G
//! ```
//!
//! which follows from the defining formulas because `H∇(VG)` and `V∇(HG)`
//! only see the derivative of the projector. Both are tensorial, so their
//! arguments may be plain vectors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse_with, Jet, ScalarExpr};
use crate::geometry::jetlin;
use crate::geometry::{Chart, GeometryError, PointGeometry, VectorField};
use crate::linalg::{self, Frame, LinalgError, Signature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubmersionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("map component count {got} does not match target dimension {expected}")]
    ComponentCount { expected: usize, got: usize },
    #[error("differential has rank {rank} at {point:?}, target dimension is {expected}")]
    RankDeficient {
        point: Vec<f64>,
        rank: usize,
        expected: usize,
    },
    #[error("fiber metric is degenerate at {point:?}")]
    DegenerateFiber { point: Vec<f64> },
    #[error("operation differentiates along the fibers and needs declared vertical fields")]
    MissingDeclaredFields,
    #[error("declared vertical fields do not span ker dF at {point:?} (residual {residual:e})")]
    DeclaredFieldsMismatch { point: Vec<f64>, residual: f64 },
}

/// `F: source → target` given by component expressions over source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    pub source: Chart,
    pub target: Chart,
    components: Vec<ScalarExpr>,
}

/// Smooth vertical and horizontal fields supplied with a map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeclaredFrames {
    pub vertical: Vec<VectorField>,
    pub horizontal: Vec<VectorField>,
}

impl SmoothMap {
    pub fn new(source: Chart, target: Chart, components: &[impl AsRef<str>]) -> Result<Self, SubmersionError> {
        if components.len() != target.dim() {
            return Err(SubmersionError::ComponentCount {
                expected: target.dim(),
                got: components.len(),
            });
        }
        let coords: Arc<[String]> = source.coords().clone();
        let components = components
            .iter()
            .enumerate()
            .map(|(k, s)| {
                parse_with(s.as_ref(), coords.clone()).map_err(|source| GeometryError::Parse {
                    what: format!("map[{k}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SmoothMap {
            source,
            target,
            components,
        })
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.components
            .iter()
            .map(|c| {
                c.eval(p).map_err(|source| GeometryError::Eval {
                    point: p.to_vec(),
                    source,
                })
            })
            .collect()
    }

    fn component_jets(&self, p: &[f64]) -> Result<Vec<Jet>, GeometryError> {
        self.components
            .iter()
            .map(|c| {
                c.eval_jet2(p).map_err(|source| GeometryError::Eval {
                    point: p.to_vec(),
                    source,
                })
            })
            .collect()
    }

    /// Jacobian `∂_i F^a`, shape `dim N × dim M`.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let jets = self.component_jets(p)?;
        let n = self.source.dim();
        Ok(DMatrix::from_fn(jets.len(), n, |a, i| jets[a].gradient[i]))
    }

    /// Pointwise splitting of `T_pM` and the submersion axioms at `p`.
    pub fn analyze_split(
        &self,
        p: &[f64],
        declared: Option<&DeclaredFrames>,
        tol: f64,
    ) -> Result<SplitFrames, SubmersionError> {
        let n_target = self.target.dim();
        let g = self.source.metric_at(p)?;
        let j = self.jacobian(p)?;
        let rank = linalg::rank(&j, tol);
        if rank != n_target {
            return Err(SubmersionError::RankDeficient {
                point: p.to_vec(),
                rank,
                expected: n_target,
            });
        }
        let kernel = linalg::null_space(&j, tol);
        let degenerate = || SubmersionError::DegenerateFiber { point: p.to_vec() };
        let fiber_gram = gram(&g, &kernel);
        let fiber_signature = linalg::signature(&fiber_gram, tol)?;
        if !fiber_signature.is_nondegenerate() {
            return Err(degenerate());
        }
        let horizontal_basis = linalg::g_orthogonal_complement(&kernel, &g, tol)?;
        let vertical = linalg::pseudo_orthonormalize(&kernel, &g, tol).map_err(|_| degenerate())?;
        let horizontal = linalg::pseudo_orthonormalize(&horizontal_basis, &g, tol).map_err(|_| degenerate())?;
        let q = self.apply(p)?;
        let g_n = self.target.metric_at(&q)?;
        let target_signature = linalg::signature(&g_n, tol)?;
        let mut isometry_residual: f64 = 0.0;
        for (a, x) in horizontal.vectors.iter().enumerate() {
            for y in &horizontal.vectors[a..] {
                let (fx, fy) = (&j * x, &j * y);
                let r = (linalg::inner(&g, x, y) - linalg::inner(&g_n, &fx, &fy)).abs();
                isometry_residual = isometry_residual.max(r);
            }
        }
        let mut orthogonality_residual: f64 = 0.0;
        for v in &vertical.vectors {
            for h in &horizontal.vectors {
                orthogonality_residual = orthogonality_residual.max(linalg::inner(&g, v, h).abs());
            }
        }
        let annihilation_residual = vertical.vectors.iter().map(|v| (&j * v).amax()).fold(0.0, f64::max);
        let declared_residual = match declared {
            Some(d) if !d.vertical.is_empty() => Some(declared_vertical_residual(&j, &kernel, d, p, tol)?),
            _ => None,
        };
        Ok(SplitFrames {
            point: p.to_vec(),
            rank,
            fiber_signature,
            target_signature,
            isometry_residual,
            orthogonality_residual,
            annihilation_residual,
            declared_residual,
            is_submersion: isometry_residual <= tol,
            vertical,
            horizontal,
        })
    }

    /// Jet-level data for differentiating along the declared distributions.
    pub fn at(&self, p: &[f64], declared: &DeclaredFrames) -> Result<SubmersionAt, SubmersionError> {
        let n = self.source.dim();
        let m = self.target.dim();
        if declared.vertical.is_empty() && n != m {
            return Err(SubmersionError::MissingDeclaredFields);
        }
        let geometry = self.source.at(p)?;
        let vertical: Vec<Vec<Jet>> = declared.vertical.iter().map(|v| v.jets(p)).collect::<Result<_, _>>()?;
        let horizontal: Vec<Vec<Jet>> = declared
            .horizontal
            .iter()
            .map(|v| v.jets(p))
            .collect::<Result<_, _>>()?;
        let pv = vertical_projector(&geometry, &vertical)
            .ok_or_else(|| SubmersionError::DegenerateFiber { point: p.to_vec() })?;
        let ph: Vec<Jet> = identity_jets(n).iter().zip(&pv).map(|(i, v)| i - v).collect();
        let f = self.component_jets(p)?;
        let jac: Vec<Jet> = (0..m)
            .flat_map(|a| (0..n).map(move |i| (a, i)))
            .map(|(a, i)| f[a].partial(i))
            .collect();
        let q: Vec<f64> = f.iter().map(|c| c.value).collect();
        let target = self.target.at(&q)?;
        Ok(SubmersionAt {
            point: p.to_vec(),
            geometry,
            target,
            pv,
            ph,
            jac,
            vertical,
            horizontal,
        })
    }

    /// `F_* X` at `p`.
    pub fn pushforward(&self, x: &DVector<f64>, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        Ok(self.jacobian(p)? * x)
    }
}

fn gram(g: &DMatrix<f64>, vs: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(vs.len(), vs.len(), |i, j| linalg::inner(g, &vs[i], &vs[j]))
}

fn declared_vertical_residual(
    j: &DMatrix<f64>,
    kernel: &[DVector<f64>],
    d: &DeclaredFrames,
    p: &[f64],
    tol: f64,
) -> Result<f64, SubmersionError> {
    let n = j.ncols();
    let vals: Vec<DVector<f64>> = d.vertical.iter().map(|v| v.eval(p)).collect::<Result<_, _>>()?;
    let residual = vals.iter().map(|v| (j * v).amax()).fold(0.0, f64::max);
    if linalg::span_rank(&vals, n, tol) != kernel.len() {
        return Err(SubmersionError::DeclaredFieldsMismatch {
            point: p.to_vec(),
            residual: f64::INFINITY,
        });
    }
    Ok(residual)
}

fn identity_jets(n: usize) -> Vec<Jet> {
    (0..n * n)
        .map(|k| Jet::constant(if k / n == k % n { 1.0 } else { 0.0 }, n))
        .collect()
}

/// `V (VᵀgV)⁻¹ Vᵀ g` as a jet matrix; zero when there are no fields.
fn vertical_projector(pg: &PointGeometry, vertical: &[Vec<Jet>]) -> Option<Vec<Jet>> {
    let n = pg.dim;
    let k = vertical.len();
    if k == 0 {
        return Some(vec![Jet::zero(n); n * n]);
    }
    // V as n×k, row-major
    let mut v = Vec::with_capacity(n * k);
    for i in 0..n {
        for col in vertical {
            v.push(col[i].clone());
        }
    }
    let vt = jetlin::transpose(&v, n, k);
    let vtg = jetlin::mat_mul(&vt, k, n, &pg.g, n);
    let gram = jetlin::mat_mul(&vtg, k, n, &v, k);
    let inv = jetlin::inverse(&gram, k)?;
    let left = jetlin::mat_mul(&v, n, k, &inv, k);
    Some(jetlin::mat_mul(&left, n, k, &vtg, n))
}

/// Pointwise splitting and submersion-axiom residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitFrames {
    pub point: Vec<f64>,
    pub rank: usize,
    #[serde(skip)]
    pub vertical: Frame,
    #[serde(skip)]
    pub horizontal: Frame,
    pub fiber_signature: Signature,
    pub target_signature: Signature,
    /// `max |g_M(X,Y) − g_N(F_*X, F_*Y)|` over horizontal frame pairs.
    pub isometry_residual: f64,
    pub orthogonality_residual: f64,
    pub annihilation_residual: f64,
    /// `max |F_* V|` over declared vertical fields, when supplied.
    pub declared_residual: Option<f64>,
    pub is_submersion: bool,
}

/// Value of an O'Neill tensor with its vertical and horizontal parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ONeillValue {
    pub value: Vec<f64>,
    pub vertical: Vec<f64>,
    pub horizontal: Vec<f64>,
}

/// Source geometry, projectors and differential at one point.
#[derive(Debug, Clone)]
pub struct SubmersionAt {
    pub point: Vec<f64>,
    pub geometry: PointGeometry,
    pub target: PointGeometry,
    /// Vertical projector (order 2).
    pub pv: Vec<Jet>,
    /// Horizontal projector (order 2).
    pub ph: Vec<Jet>,
    /// `∂_i F^a`, `dim N × dim M` (order 1).
    pub jac: Vec<Jet>,
    pub vertical: Vec<Vec<Jet>>,
    pub horizontal: Vec<Vec<Jet>>,
}

impl SubmersionAt {
    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn target_dim(&self) -> usize {
        self.target.dim
    }

    pub fn constant(&self, v: &DVector<f64>) -> Vec<Jet> {
        v.iter().map(|x| Jet::constant(*x, self.dim())).collect()
    }

    pub fn vert(&self, v: &[Jet]) -> Vec<Jet> {
        jetlin::mat_vec(&self.pv, self.dim(), v)
    }

    pub fn horiz(&self, v: &[Jet]) -> Vec<Jet> {
        jetlin::mat_vec(&self.ph, self.dim(), v)
    }

    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        self.geometry.inner(u, v)
    }

    pub fn nabla(&self, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
        self.geometry.cov_deriv(x, y)
    }

    fn reflect_nabla_p(&self, dir: &[Jet], g: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        let dp = self.geometry.cov_deriv_tensor(&self.pv, dir);
        let w = jetlin::mat_vec(&dp, n, g);
        jetlin::sub(&self.horiz(&w), &self.vert(&w))
    }

    /// `T_E G`.
    pub fn t(&self, e: &[Jet], g: &[Jet]) -> Vec<Jet> {
        self.reflect_nabla_p(&self.vert(e), g)
    }

    /// `A_E G`.
    pub fn a(&self, e: &[Jet], g: &[Jet]) -> Vec<Jet> {
        self.reflect_nabla_p(&self.horiz(e), g)
    }

    pub fn split(&self, v: &[Jet]) -> ONeillValue {
        ONeillValue {
            value: jetlin::values(v),
            vertical: jetlin::values(&self.vert(v)),
            horizontal: jetlin::values(&self.horiz(v)),
        }
    }

    /// `F_* X` with jet dependence.
    pub fn push(&self, x: &[Jet]) -> Vec<Jet> {
        jetlin::mat_vec(&self.jac, self.target_dim(), x)
    }

    /// `(∇F_*)(X,Y) = X(F_*Y) + Γ_N(F_*X, F_*Y) − F_*(∇_X Y)` in target
    /// coordinates. Requires `Y` of order 2 for an exact value.
    pub fn second_fundamental_form(&self, x: &[Jet], y: &[Jet]) -> DVector<f64> {
        let m = self.target_dim();
        let fy = self.push(y);
        let fx = jetlin::values(&self.push(x));
        let fyv = jetlin::values(&fy);
        let corr = jetlin::values(&self.push(&self.nabla(x, y)));
        DVector::from_fn(m, |a, _| {
            let mut s = fy[a].derivative_along(x).value;
            for b in 0..m {
                for c in 0..m {
                    s += self.target.gamma(a, b, c).value * fx[b] * fyv[c];
                }
            }
            s - corr[a]
        })
    }
}

/// Pointwise `T_E G` for expression fields.
pub fn oneill_t(sa: &SubmersionAt, e: &VectorField, g: &VectorField) -> Result<ONeillValue, GeometryError> {
    Ok(sa.split(&sa.t(&e.jets(&sa.point)?, &g.jets(&sa.point)?)))
}

/// Pointwise `A_E G` for expression fields.
pub fn oneill_a(sa: &SubmersionAt, e: &VectorField, g: &VectorField) -> Result<ONeillValue, GeometryError> {
    Ok(sa.split(&sa.a(&e.jets(&sa.point)?, &g.jets(&sa.point)?)))
}

pub fn second_fundamental_form(
    sa: &SubmersionAt,
    x: &VectorField,
    y: &VectorField,
) -> Result<DVector<f64>, GeometryError> {
    Ok(sa.second_fundamental_form(&x.jets(&sa.point)?, &y.jets(&sa.point)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionReport {
    pub tension: Vec<f64>,
    /// `Σ ε_i T_{e_i} e_i` over the vertical frame.
    pub fiber_mean_curvature: Vec<f64>,
    pub tension_norm: f64,
    pub mean_curvature_norm: f64,
    pub harmonic: bool,
    pub minimal_fibers: bool,
}

/// Tension `Σ ε_i (∇F_*)(e_i,e_i)` over the full pseudo-orthonormal frame and
/// the fiber mean-curvature vector.
pub fn tension_and_harmonic(sa: &SubmersionAt, split: &SplitFrames, tol: f64) -> TensionReport {
    let m = sa.target_dim();
    let n = sa.dim();
    let mut tension = DVector::zeros(m);
    for frame in [&split.vertical, &split.horizontal] {
        for (e, s) in frame.vectors.iter().zip(&frame.signs) {
            let ej = sa.constant(e);
            tension += sa.second_fundamental_form(&ej, &ej) * *s;
        }
    }
    let mut mean = DVector::zeros(n);
    for (e, s) in split.vertical.vectors.iter().zip(&split.vertical.signs) {
        let ej = sa.constant(e);
        mean += DVector::from_vec(jetlin::values(&sa.t(&ej, &ej))) * *s;
    }
    let (tn, mn) = (tension.amax(), mean.amax());
    TensionReport {
        tension: tension.iter().copied().collect(),
        fiber_mean_curvature: mean.iter().copied().collect(),
        tension_norm: tn,
        mean_curvature_norm: mn,
        harmonic: tn <= tol,
        minimal_fibers: mn <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    // Warped metric on R^3 = (a, b, c) fibered over (a, b) by projection;
    // the fiber direction is c with length exp(a).
    fn warped() -> (SmoothMap, DeclaredFrames) {
        let src = Chart::new(
            "w",
            &names(&["a", "b", "c"]),
            &["1", "0", "0", "0", "1 + a^2/4", "0", "0", "0", "exp(2*a)"],
        )
        .unwrap();
        let tgt = Chart::new("base", &names(&["u", "v"]), &["1", "0", "0", "1 + u^2/4"]).unwrap();
        let coords = src.coords().clone();
        let f = SmoothMap::new(src, tgt, &["a", "b"]).unwrap();
        let d = DeclaredFrames {
            vertical: vec![VectorField::parse(&["0", "0", "1"], &coords).unwrap()],
            horizontal: vec![
                VectorField::parse(&["1", "0", "0"], &coords).unwrap(),
                VectorField::parse(&["0", "1", "0"], &coords).unwrap(),
            ],
        };
        (f, d)
    }

    // Direct definition T_E G = H∇_{VE}VG + V∇_{VE}HG through fields.
    fn t_direct(sa: &SubmersionAt, e: &[Jet], g: &[Jet]) -> Vec<f64> {
        let ve = sa.vert(e);
        let a = sa.horiz(&sa.nabla(&ve, &sa.vert(g)));
        let b = sa.vert(&sa.nabla(&ve, &sa.horiz(g)));
        jetlin::values(&jetlin::add(&a, &b))
    }

    fn a_direct(sa: &SubmersionAt, e: &[Jet], g: &[Jet]) -> Vec<f64> {
        let he = sa.horiz(e);
        let a = sa.vert(&sa.nabla(&he, &sa.horiz(g)));
        let b = sa.horiz(&sa.nabla(&he, &sa.vert(g)));
        jetlin::values(&jetlin::add(&a, &b))
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_pushforward_and_split() {
        let c = Chart::new("e2", &names(&["a", "b"]), &["1", "0", "0", "1"]).unwrap();
        let f = SmoothMap::new(c.clone(), c, &["a", "b"]).unwrap();
        let x = DVector::from_vec(vec![0.3, -2.0]);
        assert_eq!(f.pushforward(&x, &[1.0, 1.0]).unwrap(), x);
        let s = f.analyze_split(&[0.1, 0.2], None, 1e-9).unwrap();
        assert!(s.vertical.is_empty());
        assert!(s.is_submersion);
    }

    #[test]
    fn constant_map_is_rank_deficient() {
        let c = Chart::new("e2", &names(&["a", "b"]), &["1", "0", "0", "1"]).unwrap();
        let t = Chart::new("e1", &names(&["u"]), &["1"]).unwrap();
        let f = SmoothMap::new(c, t, &["3"]).unwrap();
        assert!(matches!(
            f.analyze_split(&[0.0, 0.0], None, 1e-9),
            Err(SubmersionError::RankDeficient { rank: 0, .. })
        ));
    }

    #[test]
    fn warped_projection_is_a_submersion_with_umbilic_fibers() {
        let (f, d) = warped();
        let p = [0.4, -0.7, 1.1];
        let split = f.analyze_split(&p, Some(&d), 1e-9).unwrap();
        assert!(split.is_submersion, "{split:?}");
        assert_eq!(
            split.fiber_signature,
            Signature {
                n_pos: 1,
                n_neg: 0,
                n_zero: 0
            }
        );
        let sa = f.at(&p, &d).unwrap();
        let v = &sa.vertical[0];
        // T_V V = -g(V,V) grad(a) for this warping: horizontal, nonzero.
        let t = sa.t(v, v);
        let tv = jetlin::values(&t);
        assert!((tv[0] + (2.0 * 0.4_f64).exp()).abs() < 1e-12, "{tv:?}");
        assert!(tv[2].abs() < 1e-12);
    }

    #[test]
    fn tensorial_oneill_matches_field_definition() {
        let (f, d) = warped();
        let p = [0.4, -0.7, 1.1];
        let sa = f.at(&p, &d).unwrap();
        let coords = f.source.coords().clone();
        let e = VectorField::parse(&["a*c", "1 + b^2", "sin(c)"], &coords).unwrap();
        let g = VectorField::parse(&["exp(b)", "a - c", "a*b"], &coords).unwrap();
        let (ej, gj) = (e.jets(&p).unwrap(), g.jets(&p).unwrap());
        assert!(close(&jetlin::values(&sa.t(&ej, &gj)), &t_direct(&sa, &ej, &gj), 1e-12));
        assert!(close(&jetlin::values(&sa.a(&ej, &gj)), &a_direct(&sa, &ej, &gj), 1e-12));
    }

    #[test]
    fn product_projection_has_vanishing_t_and_tension() {
        let src = Chart::new(
            "prod",
            &names(&["a", "b", "c"]),
            &["1 + a^2", "0", "0", "0", "1", "0", "0", "0", "-(2 + cos(c))"],
        )
        .unwrap();
        let tgt = Chart::new("base", &names(&["u", "v"]), &["1 + u^2", "0", "0", "1"]).unwrap();
        let coords = src.coords().clone();
        let f = SmoothMap::new(src, tgt, &["a", "b"]).unwrap();
        let d = DeclaredFrames {
            vertical: vec![VectorField::parse(&["0", "0", "1"], &coords).unwrap()],
            horizontal: vec![],
        };
        let p = [0.5, 0.1, -0.3];
        let split = f.analyze_split(&p, Some(&d), 1e-9).unwrap();
        assert_eq!(split.fiber_signature.n_neg, 1);
        let sa = f.at(&p, &d).unwrap();
        for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            let ej = sa.constant(&DVector::from_row_slice(&e));
            for g in [[0.2, -1.0, 3.0], [0.0, 0.0, 1.0]] {
                let gj = sa.constant(&DVector::from_row_slice(&g));
                assert!(jetlin::values(&sa.t(&ej, &gj)).iter().all(|x| x.abs() < 1e-14));
            }
        }
        let tr = tension_and_harmonic(&sa, &split, 1e-9);
        assert!(tr.harmonic && tr.minimal_fibers, "{tr:?}");
    }

    #[test]
    fn identity_map_second_fundamental_form_vanishes() {
        let c = Chart::new("curved", &names(&["a", "b"]), &["1 + a^2", "a*b", "a*b", "2 + b^2"]).unwrap();
        let coords = c.coords().clone();
        let f = SmoothMap::new(c.clone(), c, &["a", "b"]).unwrap();
        let p = [0.3, -0.4];
        let sa = f.at(&p, &DeclaredFrames::default()).unwrap();
        let x = VectorField::parse(&["a*b", "exp(a)"], &coords).unwrap();
        let y = VectorField::parse(&["cos(b)", "a - b"], &coords).unwrap();
        assert!(second_fundamental_form(&sa, &x, &y).unwrap().amax() < 1e-13);
        let split = f.analyze_split(&p, None, 1e-9).unwrap();
        assert!(tension_and_harmonic(&sa, &split, 1e-9).tension_norm < 1e-13);
    }

    #[test]
    fn missing_declared_fields_is_an_error() {
        let (f, _) = warped();
        assert!(matches!(
            f.at(&[0.0, 0.0, 0.0], &DeclaredFrames::default()),
            Err(SubmersionError::MissingDeclaredFields)
        ));
    }

    #[test]
    fn second_fundamental_form_matches_tensorial_formula() {
        let (f, d) = warped();
        let p = [0.2, 0.5, -0.9];
        let sa = f.at(&p, &d).unwrap();
        let coords = f.source.coords().clone();
        let x = VectorField::parse(&["a*c", "1 + b^2", "sin(c)"], &coords).unwrap();
        let y = VectorField::parse(&["exp(b)", "a - c", "a*b"], &coords).unwrap();
        let via_fields = second_fundamental_form(&sa, &x, &y).unwrap();
        let (xv, yv) = (x.eval(&p).unwrap(), y.eval(&p).unwrap());
        let fj: Vec<Jet> = f.components().iter().map(|c| c.eval_jet2(&p).unwrap()).collect();
        let gam = sa.geometry.christoffel_values();
        let n = 3;
        let fx = sa.push(&sa.constant(&xv));
        let fy = sa.push(&sa.constant(&yv));
        for a in 0..2 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mut t = fj[a].hessian_entry(i, j).unwrap();
                    for k in 0..n {
                        t -= gam[k * n * n + i * n + j] * fj[a].gradient[k];
                    }
                    s += xv[i] * yv[j] * t;
                }
            }
            for b in 0..2 {
                for c in 0..2 {
                    s += sa.target.gamma(a, b, c).value * fx[b].value * fy[c].value;
                }
            }
            assert!((s - via_fields[a]).abs() < 1e-12, "{s} vs {}", via_fields[a]);
        }
    }
}
