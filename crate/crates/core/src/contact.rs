//! Lorentzian almost (para)contact structures and their verification.
//!
//! All axioms are checked on the coordinate frame at each sample point; by
//! (multi)linearity this is equivalent to checking them on all vectors.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::Jet;
use crate::geometry::jetlin;
use crate::geometry::{
    bracket_jets, d_oneform_jets, tensor_applied_cov_deriv, Chart, GeometryError, Kappa, OneForm, PointGeometry,
    Tensor11Field, VectorField,
};
use crate::linalg::{self, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactError {
    #[error("epsilon must be +1 or -1, got {0}")]
    Epsilon(f64),
    #[error("{0} is not defined over the chart coordinates")]
    Chart(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub const ALMOST_CONTACT_AXIOMS: [&str; 9] = [
    "phi^2 X = eps X + eta(X) xi",
    "g(phi X, phi Y) = g(X, Y) + eta(X) eta(Y)",
    "eta(X) = eps g(X, xi)",
    "eta(xi) = -epsilon",
    "phi xi = 0",
    "eta o phi = 0",
    "rank phi = dim - 1",
    "g(xi, xi) = -1",
    "g(phi X, Y) = eps g(X, phi Y)",
];

pub const KILLING: &str = "nabla_X xi = eps phi X";
pub const SASAKIAN: &str = "(nabla_X phi) Y = eps g(phi X, phi Y) xi + eta(Y) phi^2 X";
pub const SASAKIAN_VERBATIM: &str = "(nabla_X phi) Y = g(phi X, phi Y) xi + eta(Y) phi^2 X (verbatim)";
pub const METRIC_CONTACT: &str = "d eta(X, Y) = Phi(X, Y)";
pub const NORMALITY: &str = "[phi, phi] + 2 d eta (x) xi = 0";

/// `(ε, φ, ξ, η)` on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactStructure {
    pub chart: Chart,
    pub epsilon: f64,
    pub phi: Tensor11Field,
    pub xi: VectorField,
    pub eta: OneForm,
}

/// Jets of the structure tensors at one point.
#[derive(Debug, Clone)]
pub struct StructureAt {
    pub geometry: PointGeometry,
    pub phi: Vec<Jet>,
    pub xi: Vec<Jet>,
    pub eta: Vec<Jet>,
}

impl StructureAt {
    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn phi_values(&self) -> DMatrix<f64> {
        jetlin::value_matrix(&self.phi, self.dim(), self.dim())
    }

    pub fn xi_values(&self) -> DVector<f64> {
        DVector::from_vec(jetlin::values(&self.xi))
    }

    pub fn eta_values(&self) -> DVector<f64> {
        DVector::from_vec(jetlin::values(&self.eta))
    }

    pub fn apply_phi(&self, v: &[Jet]) -> Vec<Jet> {
        jetlin::mat_vec(&self.phi, self.dim(), v)
    }
}

impl ContactStructure {
    pub fn new(
        chart: Chart,
        epsilon: f64,
        phi: Tensor11Field,
        xi: VectorField,
        eta: OneForm,
    ) -> Result<Self, ContactError> {
        if epsilon != 1.0 && epsilon != -1.0 {
            return Err(ContactError::Epsilon(epsilon));
        }
        let coords = &chart.coords()[..];
        if xi.coords() != coords {
            return Err(ContactError::Chart("xi"));
        }
        if eta.coords() != coords {
            return Err(ContactError::Chart("eta"));
        }
        if phi.dim() != chart.dim() || phi.entries().iter().any(|e| e.coords() != coords) {
            return Err(ContactError::Chart("phi"));
        }
        Ok(ContactStructure {
            chart,
            epsilon,
            phi,
            xi,
            eta,
        })
    }

    pub fn at(&self, p: &[f64]) -> Result<StructureAt, GeometryError> {
        Ok(StructureAt {
            geometry: self.chart.at(p)?,
            phi: self.phi.jets(p)?,
            xi: self.xi.jets(p)?,
            eta: self.eta.jets(p)?,
        })
    }
}

/// Worst residual of one axiom over all sampled points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub id: String,
    pub worst_residual: f64,
    /// Index into the sampled points where the worst residual occurred.
    pub worst_point: usize,
    pub pass: bool,
    /// Informational checks are reported but do not affect the verdict.
    pub gating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub suite: String,
    pub axioms: Vec<AxiomCheck>,
    pub points_sampled: usize,
    pub tol: f64,
    pub kappa: Kappa,
    /// Named verdicts derived from subsets of the axioms.
    pub verdicts: Vec<(String, bool)>,
    pub pass: bool,
}

impl StructureReport {
    pub fn axiom(&self, id: &str) -> Option<&AxiomCheck> {
        self.axioms.iter().find(|a| a.id == id)
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.verdicts.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn unit(n: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[k] = 1.0;
    v
}

fn const_jets(v: &DVector<f64>, dim: usize) -> Vec<Jet> {
    v.iter().map(|x| Jet::constant(*x, dim)).collect()
}

fn almost_contact_point(s: &StructureAt, eps: f64) -> Vec<f64> {
    let n = s.dim();
    let g = s.geometry.metric_values();
    let phi = s.phi_values();
    let xi = s.xi_values();
    let eta = s.eta_values();
    let id = DMatrix::<f64>::identity(n, n);
    let eta_row = eta.transpose();

    let phi2 = &phi * &phi - &id * eps - &xi * &eta_row;
    let metric = phi.transpose() * &g * &phi - &g - &eta * &eta_row;
    let dual = &eta - (&g * &xi) * eps;
    let eta_xi = (eta.dot(&xi) + eps).abs();
    let phi_xi = (&phi * &xi).amax();
    let eta_phi = (&eta_row * &phi).amax();
    let rank = linalg::rank(&phi, DEFAULT_TOL) as f64;
    let rank_res = (rank - (n as f64 - 1.0)).abs();
    let xi_norm = (linalg::inner(&g, &xi, &xi) + 1.0).abs();
    let sym = phi.transpose() * &g - (&g * &phi) * eps;
    vec![
        max_abs(&phi2),
        max_abs(&metric),
        dual.amax(),
        eta_xi,
        phi_xi,
        eta_phi,
        rank_res,
        xi_norm,
        max_abs(&sym),
    ]
}

/// Worst of the Killing and sign-consistent Sasakian residuals at one point.
pub fn sasakian_residual(s: &StructureAt, eps: f64) -> f64 {
    let [k, sas, _] = kcontact_point(s, eps);
    k.max(sas)
}

/// Residuals of the Killing, sign-consistent Sasakian and verbatim identities.
fn kcontact_point(s: &StructureAt, eps: f64) -> [f64; 3] {
    let n = s.dim();
    let d = n;
    let pg = &s.geometry;
    let g = pg.metric_values();
    let phi = s.phi_values();
    let xi = s.xi_values();
    let eta = s.eta_values();
    let phi2 = &phi * &phi;
    let mut killing: f64 = 0.0;
    let mut sasaki: f64 = 0.0;
    let mut verbatim: f64 = 0.0;
    for a in 0..n {
        let x = const_jets(&unit(n, a), d);
        let nabla_xi = DVector::from_vec(jetlin::values(&pg.cov_deriv(&x, &s.xi)));
        let phi_x = phi.column(a).into_owned();
        killing = killing.max((nabla_xi - &phi_x * eps).amax());
        for b in 0..n {
            let y = const_jets(&unit(n, b), d);
            let lhs = DVector::from_vec(jetlin::values(&tensor_applied_cov_deriv(pg, &s.phi, &x, &y)));
            let phi_y = phi.column(b);
            let gpp = linalg::inner(&g, &phi_x, &phi_y.into_owned());
            let tail = phi2.column(a) * eta[b];
            let rhs = &xi * (eps * gpp) + &tail;
            let rhs_v = &xi * gpp + &tail;
            sasaki = sasaki.max((&lhs - rhs).amax());
            verbatim = verbatim.max((&lhs - rhs_v).amax());
        }
    }
    [killing, sasaki, verbatim]
}

fn metric_contact_point(s: &StructureAt, kappa: Kappa) -> [f64; 2] {
    let n = s.dim();
    let g = s.geometry.metric_values();
    let phi = s.phi_values();
    let xi = s.xi_values();
    let frame: Vec<Vec<Jet>> = (0..n).map(|a| const_jets(&unit(n, a), n)).collect();
    let phi_frame: Vec<Vec<Jet>> = frame.iter().map(|x| s.apply_phi(x)).collect();
    let mut contact: f64 = 0.0;
    let mut normal: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let d = d_oneform_jets(&s.eta, &frame[a], &frame[b], kappa).value;
            let big_phi = g.row(a).dot(&phi.column(b).transpose());
            contact = contact.max((d - big_phi).abs());
            let vals = |v: Vec<Jet>| DVector::from_vec(jetlin::values(&v));
            let br = bracket_jets(&frame[a], &frame[b]);
            let t1 = vals(s.apply_phi(&s.apply_phi(&br)));
            let t2 = vals(bracket_jets(&phi_frame[a], &phi_frame[b]));
            let t3 = vals(s.apply_phi(&bracket_jets(&phi_frame[a], &frame[b])));
            let t4 = vals(s.apply_phi(&bracket_jets(&frame[a], &phi_frame[b])));
            let nij = t1 + t2 - t3 - t4;
            normal = normal.max((nij + &xi * (2.0 * d)).amax());
        }
    }
    [contact, normal]
}

/// Nijenhuis torsion `[φ,φ](X,Y)` for expression fields, value at `p`.
pub fn nijenhuis(
    s: &ContactStructure,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>, GeometryError> {
    let phi = s.phi.jets(p)?;
    let n = s.chart.dim();
    let ap = |v: &[Jet]| jetlin::mat_vec(&phi, n, v);
    let (xj, yj) = (x.jets(p)?, y.jets(p)?);
    let (px, py) = (ap(&xj), ap(&yj));
    let t1 = ap(&ap(&bracket_jets(&xj, &yj)));
    let t2 = bracket_jets(&px, &py);
    let t3 = ap(&bracket_jets(&px, &yj));
    let t4 = ap(&bracket_jets(&xj, &py));
    let v = jetlin::sub(&jetlin::sub(&jetlin::add(&t1, &t2), &t3), &t4);
    Ok(DVector::from_vec(jetlin::values(&v)))
}

fn evaluate<const K: usize>(
    s: &ContactStructure,
    points: &[Vec<f64>],
    f: impl Fn(&StructureAt) -> Vec<f64> + Sync,
) -> Result<Vec<Vec<f64>>, GeometryError> {
    let per_point: Vec<Result<Vec<f64>, GeometryError>> = points.par_iter().map(|p| s.at(p).map(|sa| f(&sa))).collect();
    let rows = per_point.into_iter().collect::<Result<Vec<_>, _>>()?;
    debug_assert!(rows.iter().all(|r| r.len() == K));
    Ok(rows)
}

fn aggregate(ids: &[&str], gating: &[bool], rows: &[Vec<f64>], tol: f64) -> Vec<AxiomCheck> {
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let (worst_point, worst) =
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| (i, r[k]))
                    .fold(
                        (0, 0.0_f64),
                        |acc, (i, v)| {
                            if v > acc.1 || v.is_nan() {
                                (i, v)
                            } else {
                                acc
                            }
                        },
                    );
            AxiomCheck {
                id: id.to_string(),
                worst_residual: worst,
                worst_point,
                pass: worst <= tol,
                gating: gating[k],
            }
        })
        .collect()
}

fn finish(
    suite: &str,
    axioms: Vec<AxiomCheck>,
    points: usize,
    tol: f64,
    kappa: Kappa,
    verdicts: Vec<(String, bool)>,
) -> StructureReport {
    let pass = axioms.iter().filter(|a| a.gating).all(|a| a.pass);
    StructureReport {
        suite: suite.into(),
        axioms,
        points_sampled: points,
        tol,
        kappa,
        verdicts,
        pass,
    }
}

pub fn verify_almost_contact(
    s: &ContactStructure,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<StructureReport, GeometryError> {
    let eps = s.epsilon;
    let rows = evaluate::<9>(s, points, |sa| almost_contact_point(sa, eps))?;
    let axioms = aggregate(&ALMOST_CONTACT_AXIOMS, &[true; 9], &rows, tol);
    let ok = axioms.iter().all(|a| a.pass);
    let name = if eps < 0.0 {
        "Lorentzian almost contact"
    } else {
        "Lorentzian almost para contact"
    };
    Ok(finish(
        "almost-contact",
        axioms,
        points.len(),
        tol,
        Kappa::default(),
        vec![(name.to_string(), ok)],
    ))
}

pub fn verify_kcontact_sasakian(
    s: &ContactStructure,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<StructureReport, GeometryError> {
    let eps = s.epsilon;
    let rows = evaluate::<3>(s, points, |sa| kcontact_point(sa, eps).to_vec())?;
    let axioms = aggregate(
        &[KILLING, SASAKIAN, SASAKIAN_VERBATIM],
        &[true, true, false],
        &rows,
        tol,
    );
    let (k, sas) = (axioms[0].pass, axioms[1].pass);
    let (kn, sn) = if eps < 0.0 {
        ("K-contact", "Lorentzian Sasakian")
    } else {
        ("K-para contact", "Lorentzian para Sasakian")
    };
    Ok(finish(
        "k-contact-sasakian",
        axioms,
        points.len(),
        tol,
        Kappa::default(),
        vec![(kn.to_string(), k), (sn.to_string(), sas)],
    ))
}

/// Metric-contact and normality conditions. Both are informational: the
/// verdicts are reported but the suite never fails on them.
pub fn verify_metric_contact_and_normality(
    s: &ContactStructure,
    points: &[Vec<f64>],
    tol: f64,
    kappa: Kappa,
) -> Result<StructureReport, GeometryError> {
    let rows = evaluate::<2>(s, points, |sa| metric_contact_point(sa, kappa).to_vec())?;
    let axioms = aggregate(&[METRIC_CONTACT, NORMALITY], &[false, false], &rows, tol);
    let verdicts = vec![
        ("metric contact".to_string(), axioms[0].pass),
        ("normal".to_string(), axioms[1].pass),
    ];
    Ok(finish(
        "metric-contact-normality",
        axioms,
        points.len(),
        tol,
        kappa,
        verdicts,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    // n = 1 model structure over (x, y, z).
    fn model(eps: f64) -> ContactStructure {
        let c = names(&["x", "y", "z"]);
        let e2 = eps * eps / 4.0;
        let chart = Chart::new(
            "m",
            &c,
            &[
                format!("1/4 - {e2}*y*y"),
                "0".into(),
                format!("{e2}*y"),
                "0".into(),
                "1/4".into(),
                "0".into(),
                format!("{e2}*y"),
                "0".into(),
                format!("-{e2}"),
            ],
        )
        .unwrap();
        let coords = chart.coords().clone();
        let phi = Tensor11Field::parse(
            &[
                "0".to_string(),
                format!("{eps}"),
                "0".into(),
                "1".into(),
                "0".into(),
                "0".into(),
                "0".into(),
                format!("{eps}*y"),
                "0".into(),
            ],
            &coords,
        )
        .unwrap();
        let xi = VectorField::parse(&["0", "0", "2"], &coords).unwrap();
        let h = -eps / 2.0;
        let eta = OneForm::parse(&[format!("{}*y", -h), "0".into(), format!("{h}")], &coords).unwrap();
        ContactStructure::new(chart, eps, phi, xi, eta).unwrap()
    }

    fn points() -> Vec<Vec<f64>> {
        vec![vec![0.4, -0.3, 0.2], vec![-0.9, 0.8, 0.1], vec![0.0, 0.5, -0.6]]
    }

    #[test]
    fn model_is_almost_contact_for_both_signs() {
        for eps in [-1.0, 1.0] {
            let r = verify_almost_contact(&model(eps), &points(), 1e-9).unwrap();
            assert!(r.pass, "{eps}: {r:?}");
        }
    }

    #[test]
    fn model_is_sasakian_for_negative_epsilon() {
        let r = verify_kcontact_sasakian(&model(-1.0), &points(), 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.verdict("Lorentzian Sasakian"), Some(true));
        // The verbatim form cannot hold when phi is g-skew.
        assert!(!r.axiom(SASAKIAN_VERBATIM).unwrap().pass);
    }

    #[test]
    fn para_model_is_not_k_para_contact() {
        let r = verify_kcontact_sasakian(&model(1.0), &points(), 1e-9).unwrap();
        assert!(!r.axiom(KILLING).unwrap().pass);
        assert!(!r.pass);
    }

    #[test]
    fn doubled_xi_fails_eta_xi() {
        let mut s = model(-1.0);
        s.xi = VectorField::parse(&["0", "0", "4"], s.chart.coords()).unwrap();
        let r = verify_almost_contact(&s, &points(), 1e-9).unwrap();
        assert!(!r.pass);
        assert!(!r.axiom("eta(xi) = -epsilon").unwrap().pass);
    }

    #[test]
    fn zero_phi_fails_rank() {
        let mut s = model(-1.0);
        let coords = s.chart.coords().clone();
        s.phi = Tensor11Field::constant(&DMatrix::zeros(3, 3), &coords);
        let r = verify_almost_contact(&s, &points(), 1e-9).unwrap();
        let rank = r.axiom("rank phi = dim - 1").unwrap();
        assert!(!rank.pass);
        assert_eq!(rank.worst_residual, 2.0);
    }

    #[test]
    fn flat_rotation_is_not_k_contact() {
        let c = names(&["x", "y", "z"]);
        let chart = Chart::new("flat", &c, &["1", "0", "0", "0", "1", "0", "0", "0", "-1"]).unwrap();
        let coords: Arc<[String]> = chart.coords().clone();
        let phi = Tensor11Field::parse(&["0", "-1", "0", "1", "0", "0", "0", "0", "0"], &coords).unwrap();
        let xi = VectorField::parse(&["0", "0", "1"], &coords).unwrap();
        let eta = OneForm::parse(&["0", "0", "1"], &coords).unwrap();
        let s = ContactStructure::new(chart, -1.0, phi, xi, eta).unwrap();
        let ac = verify_almost_contact(&s, &points(), 1e-9).unwrap();
        assert!(ac.pass, "{ac:?}");
        let r = verify_kcontact_sasakian(&s, &points(), 1e-9).unwrap();
        assert!(!r.axiom(KILLING).unwrap().pass);
    }

    #[test]
    fn metric_contact_and_normality_are_informational() {
        let s = model(-1.0);
        let r = verify_metric_contact_and_normality(&s, &points(), 1e-9, Kappa::Half).unwrap();
        assert!(r.pass);
        assert!(r.axioms.iter().all(|a| !a.gating));
        assert_eq!(r.verdict("normal"), Some(true));
        // d eta = eps Phi here, so the metric-contact identity is off by 2|Phi|.
        assert_eq!(r.verdict("metric contact"), Some(false));
        let one = verify_metric_contact_and_normality(&s, &points(), 1e-9, Kappa::One).unwrap();
        assert_eq!(one.verdict("normal"), Some(false));
    }

    #[test]
    fn nijenhuis_is_antisymmetric() {
        let s = model(-1.0);
        let coords = s.chart.coords().clone();
        let x = VectorField::parse(&["x*y", "z", "1 + x"], &coords).unwrap();
        let y = VectorField::parse(&["y^2", "sin(z)", "x"], &coords).unwrap();
        let p = [0.3, -0.2, 0.6];
        let a = nijenhuis(&s, &x, &y, &p).unwrap();
        let b = nijenhuis(&s, &y, &x, &p).unwrap();
        assert!((a + b).amax() < 1e-14);
    }

    #[test]
    fn bad_epsilon_rejected() {
        let s = model(-1.0);
        assert!(matches!(
            ContactStructure::new(s.chart, 0.5, s.phi, s.xi, s.eta),
            Err(ContactError::Epsilon(_))
        ));
    }
}
