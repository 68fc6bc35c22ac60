//! Charts, metrics and the Levi-Civita connection at a point.
//!
//! Everything is evaluated through jets: a [`PointGeometry`] holds the metric
//! and its inverse to second order and the Christoffel symbols to first order,
//! so covariant derivatives of expression fields come out with their own
//! gradients and can be differentiated once more.

pub mod jetlin;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{coords_arc, parse_with, EvalError, Jet, ParseError, ScalarExpr};
use crate::linalg::{self, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("parse error in {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: ParseError,
    },
    #[error("evaluation error at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("{what}: expected {expected} components, got {got}")]
    Shape { what: String, expected: usize, got: usize },
    #[error("field is defined over coordinates {got:?}, chart has {expected:?}")]
    ChartMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("metric is degenerate at {point:?}")]
    DegenerateMetric { point: Vec<f64> },
    #[error("metric is not symmetric at {point:?}: entry ({i},{j}) differs by {gap:e}")]
    NonSymmetricMetric {
        point: Vec<f64>,
        i: usize,
        j: usize,
        gap: f64,
    },
}

impl GeometryError {
    fn eval(point: &[f64], source: EvalError) -> Self {
        GeometryError::Eval {
            point: point.to_vec(),
            source,
        }
    }
}

/// Convention factor in `dη(X,Y) = κ (X η(Y) − Y η(X) − η([X,Y]))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Kappa {
    #[default]
    Half,
    One,
}

impl Kappa {
    pub fn factor(self) -> f64 {
        match self {
            Kappa::Half => 0.5,
            Kappa::One => 1.0,
        }
    }

    pub fn from_factor(f: f64) -> Option<Kappa> {
        if f == 0.5 {
            Some(Kappa::Half)
        } else if f == 1.0 {
            Some(Kappa::One)
        } else {
            None
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.factor())
    }
}

impl Serialize for Kappa {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.factor())
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = f64::deserialize(d)?;
        Kappa::from_factor(f).ok_or_else(|| serde::de::Error::custom("kappa must be 0.5 or 1"))
    }
}

fn parse_all(
    sources: &[impl AsRef<str>],
    coords: &Arc<[String]>,
    what: &str,
) -> Result<Vec<ScalarExpr>, GeometryError> {
    sources
        .iter()
        .enumerate()
        .map(|(k, s)| {
            parse_with(s.as_ref(), coords.clone()).map_err(|source| GeometryError::Parse {
                what: format!("{what}[{k}]"),
                source,
            })
        })
        .collect()
}

fn eval_jets(exprs: &[ScalarExpr], p: &[f64]) -> Result<Vec<Jet>, GeometryError> {
    exprs
        .iter()
        .map(|e| e.eval_jet2(p).map_err(|err| GeometryError::eval(p, err)))
        .collect()
}

fn eval_values(exprs: &[ScalarExpr], p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    exprs
        .iter()
        .map(|e| e.eval(p).map_err(|err| GeometryError::eval(p, err)))
        .collect()
}

fn check_coords(expected: &Arc<[String]>, exprs: &[ScalarExpr]) -> Result<(), GeometryError> {
    for e in exprs {
        if e.coords() != &expected[..] {
            return Err(GeometryError::ChartMismatch {
                expected: expected.to_vec(),
                got: e.coords().to_vec(),
            });
        }
    }
    Ok(())
}

/// A coordinate patch with a metric given entry-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    name: String,
    coords: Arc<[String]>,
    metric: Vec<ScalarExpr>,
}

impl Chart {
    /// `metric` is row-major, `dim * dim` entries.
    pub fn new(name: impl Into<String>, coords: &[String], metric: &[impl AsRef<str>]) -> Result<Chart, GeometryError> {
        let coords = coords_arc(coords).map_err(|source| GeometryError::Parse {
            what: "coordinates".into(),
            source,
        })?;
        let n = coords.len();
        if metric.len() != n * n {
            return Err(GeometryError::Shape {
                what: "metric".into(),
                expected: n * n,
                got: metric.len(),
            });
        }
        let metric = parse_all(metric, &coords, "metric")?;
        Ok(Chart {
            name: name.into(),
            coords,
            metric,
        })
    }

    pub fn from_exprs(
        name: impl Into<String>,
        coords: Arc<[String]>,
        metric: Vec<ScalarExpr>,
    ) -> Result<Chart, GeometryError> {
        let n = coords.len();
        if metric.len() != n * n {
            return Err(GeometryError::Shape {
                what: "metric".into(),
                expected: n * n,
                got: metric.len(),
            });
        }
        check_coords(&coords, &metric)?;
        Ok(Chart {
            name: name.into(),
            coords,
            metric,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn metric_exprs(&self) -> &[ScalarExpr] {
        &self.metric
    }

    pub fn parse_scalar(&self, source: &str) -> Result<ScalarExpr, ParseError> {
        parse_with(source, self.coords.clone())
    }

    /// Metric values at `p`, checked for symmetry and nondegeneracy.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_point(p)?;
        let n = self.dim();
        let vals = eval_values(&self.metric, p)?;
        let m = DMatrix::from_row_slice(n, n, &vals);
        self.validate_metric(&m, p)?;
        Ok(symmetrize(&m))
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::eval(
                p,
                EvalError::DimensionMismatch {
                    expected: self.dim(),
                    got: p.len(),
                },
            ));
        }
        if let Some(i) = p.iter().position(|x| !x.is_finite()) {
            return Err(GeometryError::eval(p, EvalError::NonFinitePoint(i)));
        }
        Ok(())
    }

    fn validate_metric(&self, m: &DMatrix<f64>, p: &[f64]) -> Result<(), GeometryError> {
        let n = self.dim();
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > DEFAULT_TOL * scale {
                    return Err(GeometryError::NonSymmetricMetric {
                        point: p.to_vec(),
                        i,
                        j,
                        gap,
                    });
                }
            }
        }
        let sig = linalg::signature(&symmetrize(m), DEFAULT_TOL)
            .map_err(|_| GeometryError::DegenerateMetric { point: p.to_vec() })?;
        if !sig.is_nondegenerate() {
            return Err(GeometryError::DegenerateMetric { point: p.to_vec() });
        }
        Ok(())
    }

    /// Metric, inverse metric and Christoffel symbols at `p`.
    pub fn at(&self, p: &[f64]) -> Result<PointGeometry, GeometryError> {
        self.check_point(p)?;
        let n = self.dim();
        let raw = eval_jets(&self.metric, p)?;
        self.validate_metric(&jetlin::value_matrix(&raw, n, n), p)?;
        let mut g = raw.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let s = (&raw[i * n + j] + &raw[j * n + i]) * 0.5;
                g[i * n + j] = s.clone();
                g[j * n + i] = s;
            }
        }
        let g_inv = jetlin::inverse(&g, n).ok_or_else(|| GeometryError::DegenerateMetric { point: p.to_vec() })?;
        let dg: Vec<Vec<Jet>> = (0..n).map(|l| g.iter().map(|e| e.partial(l)).collect()).collect();
        let mut gamma = vec![Jet::value_only(0.0); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc: Option<Jet> = None;
                    for l in 0..n {
                        let bracket = &dg[i][j * n + l] + &dg[j][i * n + l] - &dg[l][i * n + j];
                        let term = &g_inv[k * n + l] * &bracket;
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a + term,
                        });
                    }
                    let v = acc.expect("dim > 0") * 0.5;
                    gamma[k * n * n + j * n + i] = v.clone();
                    gamma[k * n * n + i * n + j] = v;
                }
            }
        }
        Ok(PointGeometry {
            point: p.to_vec(),
            dim: n,
            g,
            g_inv,
            gamma,
        })
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m[(i, i)]
        } else {
            (m[(i, j)] + m[(j, i)]) * 0.5
        }
    })
}

macro_rules! component_field {
    ($name:ident, $what:literal) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            components: Vec<ScalarExpr>,
        }

        impl $name {
            pub fn parse(sources: &[impl AsRef<str>], coords: &Arc<[String]>) -> Result<Self, GeometryError> {
                if sources.len() != coords.len() {
                    return Err(GeometryError::Shape {
                        what: $what.into(),
                        expected: coords.len(),
                        got: sources.len(),
                    });
                }
                Ok($name {
                    components: parse_all(sources, coords, $what)?,
                })
            }

            pub fn from_exprs(components: Vec<ScalarExpr>) -> Result<Self, GeometryError> {
                let coords: Arc<[String]> = match components.first() {
                    Some(c) => c.coords().to_vec().into(),
                    None => {
                        return Err(GeometryError::Shape {
                            what: $what.into(),
                            expected: 1,
                            got: 0,
                        })
                    }
                };
                if components.len() != coords.len() {
                    return Err(GeometryError::Shape {
                        what: $what.into(),
                        expected: coords.len(),
                        got: components.len(),
                    });
                }
                check_coords(&coords, &components)?;
                Ok($name { components })
            }

            pub fn constant(values: &[f64], coords: &Arc<[String]>) -> Self {
                assert_eq!(values.len(), coords.len(), "component count");
                $name {
                    components: values
                        .iter()
                        .map(|v| ScalarExpr::constant(*v, coords.clone()))
                        .collect(),
                }
            }

            pub fn components(&self) -> &[ScalarExpr] {
                &self.components
            }

            pub fn dim(&self) -> usize {
                self.components.len()
            }

            pub fn coords(&self) -> &[String] {
                self.components[0].coords()
            }

            pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet>, GeometryError> {
                eval_jets(&self.components, p)
            }

            pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
                Ok(DVector::from_vec(eval_values(&self.components, p)?))
            }
        }
    };
}

component_field!(VectorField, "vector field");
component_field!(OneForm, "one-form");

impl VectorField {
    /// The coordinate field `∂_k`.
    pub fn coordinate(k: usize, coords: &Arc<[String]>) -> Self {
        let mut v = vec![0.0; coords.len()];
        v[k] = 1.0;
        VectorField::constant(&v, coords)
    }
}

/// A (1,1) tensor; row-major with the output index first.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor11Field {
    dim: usize,
    entries: Vec<ScalarExpr>,
}

impl Tensor11Field {
    pub fn parse(sources: &[impl AsRef<str>], coords: &Arc<[String]>) -> Result<Self, GeometryError> {
        let n = coords.len();
        if sources.len() != n * n {
            return Err(GeometryError::Shape {
                what: "tensor".into(),
                expected: n * n,
                got: sources.len(),
            });
        }
        Ok(Tensor11Field {
            dim: n,
            entries: parse_all(sources, coords, "tensor")?,
        })
    }

    pub fn from_exprs(dim: usize, entries: Vec<ScalarExpr>) -> Result<Self, GeometryError> {
        if entries.len() != dim * dim || entries.iter().any(|e| e.dim() != dim) {
            return Err(GeometryError::Shape {
                what: "tensor".into(),
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Tensor11Field { dim, entries })
    }

    pub fn constant(values: &DMatrix<f64>, coords: &Arc<[String]>) -> Self {
        let n = coords.len();
        assert_eq!(values.shape(), (n, n), "tensor shape");
        Tensor11Field {
            dim: n,
            entries: values
                .transpose()
                .iter()
                .map(|v| ScalarExpr::constant(*v, coords.clone()))
                .collect(),
        }
    }

    pub fn identity(coords: &Arc<[String]>) -> Self {
        let n = coords.len();
        Tensor11Field::constant(&DMatrix::identity(n, n), coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[ScalarExpr] {
        &self.entries
    }

    pub fn jets(&self, p: &[f64]) -> Result<Vec<Jet>, GeometryError> {
        eval_jets(&self.entries, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let vals = eval_values(&self.entries, p)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &vals))
    }
}

/// Jet-level geometric data at one point.
///
/// `g` and `g_inv` are second-order jets, `gamma[k][i][j]` (flattened
/// `k*n*n + i*n + j`) first-order.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub dim: usize,
    pub g: Vec<Jet>,
    pub g_inv: Vec<Jet>,
    pub gamma: Vec<Jet>,
}

impl PointGeometry {
    pub fn metric_values(&self) -> DMatrix<f64> {
        jetlin::value_matrix(&self.g, self.dim, self.dim)
    }

    pub fn christoffel_values(&self) -> Vec<f64> {
        jetlin::values(&self.gamma)
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[k * self.dim * self.dim + i * self.dim + j]
    }

    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        jetlin::dot(u, &jetlin::mat_vec(&self.g, self.dim, v))
    }

    /// Metric dual `g(v, ·)` as covector components.
    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        jetlin::mat_vec(&self.g, self.dim, v)
    }

    /// `∇_X Y`; one order below the lower of `Y` and the connection.
    pub fn cov_deriv(&self, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut acc = y[k].derivative_along(x);
                for i in 0..n {
                    for j in 0..n {
                        acc += &(&(self.gamma(k, i, j) * &x[i]) * &y[j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇_X T` for a (1,1) tensor `T` (row-major, output index first).
    pub fn cov_deriv_tensor(&self, t: &[Jet], x: &[Jet]) -> Vec<Jet> {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut acc = t[a * n + b].derivative_along(x);
                for i in 0..n {
                    for c in 0..n {
                        acc += &(&(self.gamma(a, i, c) * &x[i]) * &t[c * n + b]);
                        acc -= &(&(self.gamma(c, i, b) * &x[i]) * &t[a * n + c]);
                    }
                }
                out.push(acc);
            }
        }
        out
    }
}

/// `[X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn bracket_jets(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    x.iter()
        .zip(y)
        .map(|(xk, yk)| yk.derivative_along(x) - xk.derivative_along(y))
        .collect()
}

/// `(∇_X φ)Y = ∇_X(φY) − φ(∇_X Y)` at jet level.
pub fn tensor_applied_cov_deriv(pg: &PointGeometry, phi: &[Jet], x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let n = pg.dim;
    let phi_y = jetlin::mat_vec(phi, n, y);
    jetlin::sub(&pg.cov_deriv(x, &phi_y), &jetlin::mat_vec(phi, n, &pg.cov_deriv(x, y)))
}

/// `κ (X η(Y) − Y η(X) − η([X,Y]))` at jet level.
pub fn d_oneform_jets(eta: &[Jet], x: &[Jet], y: &[Jet], kappa: Kappa) -> Jet {
    let eta_y = jetlin::dot(eta, y);
    let eta_x = jetlin::dot(eta, x);
    let br = bracket_jets(x, y);
    (eta_y.derivative_along(x) - eta_x.derivative_along(y) - jetlin::dot(eta, &br)) * kappa.factor()
}

fn to_dvector(v: &[Jet]) -> DVector<f64> {
    DVector::from_vec(jetlin::values(v))
}

/// Christoffel symbols `Γ^k_{ij}` at `p`, flattened `k*n*n + i*n + j`.
pub fn christoffel(c: &Chart, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(c.at(p)?.christoffel_values())
}

fn check_field(c: &Chart, coords: &[String]) -> Result<(), GeometryError> {
    if coords != &c.coords[..] {
        return Err(GeometryError::ChartMismatch {
            expected: c.coords.to_vec(),
            got: coords.to_vec(),
        });
    }
    Ok(())
}

pub fn cov_deriv_vector(c: &Chart, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
    check_field(c, x.coords())?;
    check_field(c, y.coords())?;
    let pg = c.at(p)?;
    Ok(to_dvector(&pg.cov_deriv(&x.jets(p)?, &y.jets(p)?)))
}

pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
    if x.coords() != y.coords() {
        return Err(GeometryError::ChartMismatch {
            expected: x.coords().to_vec(),
            got: y.coords().to_vec(),
        });
    }
    Ok(to_dvector(&bracket_jets(&x.jets(p)?, &y.jets(p)?)))
}

pub fn cov_deriv_tensor11(
    c: &Chart,
    phi: &Tensor11Field,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>, GeometryError> {
    check_field(c, x.coords())?;
    check_field(c, y.coords())?;
    if phi.dim() != c.dim() {
        return Err(GeometryError::Shape {
            what: "tensor".into(),
            expected: c.dim() * c.dim(),
            got: phi.dim() * phi.dim(),
        });
    }
    let pg = c.at(p)?;
    let v = tensor_applied_cov_deriv(&pg, &phi.jets(p)?, &x.jets(p)?, &y.jets(p)?);
    Ok(to_dvector(&v))
}

pub fn d_oneform(
    eta: &OneForm,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
    kappa: Kappa,
) -> Result<f64, GeometryError> {
    Ok(d_oneform_jets(&eta.jets(p)?, &x.jets(p)?, &y.jets(p)?, kappa).value)
}
