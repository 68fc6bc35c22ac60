//! Built-in models: the `R^{2n+1}` (para)Sasakian model and the example
//! submersions built on it, plus a product-metric control.
//!
//! Coordinates are `(x1..xn, y1..yn, z)`. The model frame is
//! `E_i = 2∂y_i`, `E_{n+i} = 2(∂x_i + y_i ∂z)`, `ξ = 2∂z`, and
//! `η = −(ε/2)(dz − Σ y_i dx_i)`, `g = −η⊗η + ¼ Σ (dx_i² + dy_i²)`.
//!
//! `φ_ε(X∂x + Y∂y + Z∂z) = ε Σ Y_i ∂x_i + Σ X_i ∂y_i + ε Σ Y_i y_i ∂z`, the
//! sign for which `∇ξ = εφ` holds with this metric.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::antiinv::XiPosition;
use crate::document::{
    Document, DocumentError, ExpectedFacts, FramesDoc, MapDoc, Model, NamedField, PhiImage, StructureDoc, TargetDoc,
};
use crate::linalg::Signature;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`; run `lsub list`")]
    Unknown(String),
    #[error("model-r2n1 needs n >= 1 and epsilon = +1 or -1 (got n={n}, epsilon={epsilon})")]
    BadParameters { n: usize, epsilon: f64 },
    #[error(transparent)]
    Document(#[from] DocumentError),
}

pub struct EntryInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const ENTRIES: &[EntryInfo] = &[
    EntryInfo {
        name: "model-r2n1",
        summary: "R^{2n+1} Lorentzian (para)Sasakian model; parameters n, epsilon",
    },
    EntryInfo {
        name: "ls-r5-r2",
        summary: "R^5 -> R^2, (x1+y1, x2+y2), epsilon=-1, xi vertical",
    },
    EntryInfo {
        name: "lps-r5-r2",
        summary: "same map with the epsilon=+1 structure",
    },
    EntryInfo {
        name: "lps-r7-r5",
        summary: "R^7 -> R^5 with Lorentzian target, epsilon=-1, xi horizontal",
    },
    EntryInfo {
        name: "lps-r7-r5-para",
        summary: "same map with the epsilon=+1 structure",
    },
    EntryInfo {
        name: "ls-r5-r3",
        summary: "R^5 -> R^3 with Lorentzian target, epsilon=-1, xi horizontal",
    },
    EntryInfo {
        name: "product-control",
        summary: "projection of a conformally flat plane times a timelike line",
    },
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// Load an entry by name. `model-r2n1` also accepts `model-r2n1(n,eps)`;
/// the bare name means `(1,-1)`.
pub fn load_example(name: &str) -> Result<Model, CatalogError> {
    Ok(document(name)?.build()?)
}

pub fn document(name: &str) -> Result<Document, CatalogError> {
    if let Some((n, eps)) = parse_model_name(name) {
        return model_document(n, eps);
    }
    match name {
        "model-r2n1" => model_document(1, -1.0),
        "ls-r5-r2" => Ok(r5_r2(-1.0)),
        "lps-r5-r2" => Ok(r5_r2(1.0)),
        "lps-r7-r5" => Ok(r7_r5(-1.0)),
        "lps-r7-r5-para" => Ok(r7_r5(1.0)),
        "ls-r5-r3" => Ok(r5_r3()),
        "product-control" => Ok(product_control()),
        _ => Err(CatalogError::Unknown(name.into())),
    }
}

fn parse_model_name(name: &str) -> Option<(usize, f64)> {
    let inner = name.strip_prefix("model-r2n1(")?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    let n = a.trim().parse().ok()?;
    let eps = b.trim().replace('\u{2212}', "-").parse().ok()?;
    Some((n, eps))
}

/// Linear combination of monomials: key `""` is the constant term.
#[derive(Clone, Default)]
struct Lin(BTreeMap<String, f64>);

impl Lin {
    fn constant(c: f64) -> Lin {
        Lin::term(c, "")
    }

    fn term(c: f64, m: &str) -> Lin {
        let mut l = Lin::default();
        l.add(c, m);
        l
    }

    fn add(&mut self, c: f64, m: &str) {
        *self.0.entry(m.to_string()).or_insert(0.0) += c;
    }

    fn plus(&self, other: &Lin, s: f64) -> Lin {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add(s * c, m);
        }
        out
    }

    fn render(&self) -> String {
        let mut parts = Vec::new();
        for (m, c) in &self.0 {
            if *c == 0.0 {
                continue;
            }
            let mag = c.abs();
            let body = match (m.is_empty(), mag == 1.0) {
                (true, _) => format_num(mag),
                (false, true) => m.clone(),
                (false, false) => format!("{}*{}", format_num(mag), m),
            };
            parts.push((c.is_sign_negative(), body));
        }
        if parts.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (neg, body)) in parts.into_iter().enumerate() {
            match (k, neg) {
                (0, true) => s.push_str(&format!("-{body}")),
                (0, false) => s.push_str(&body),
                (_, true) => s.push_str(&format!(" - {body}")),
                (_, false) => s.push_str(&format!(" + {body}")),
            }
        }
        s
    }
}

fn format_num(v: f64) -> String {
    for d in [1.0, 2.0, 4.0, 8.0] {
        let k = v * d;
        if (k - k.round()).abs() < 1e-15 {
            return if d == 1.0 {
                format!("{}", k.round())
            } else {
                format!("{}/{}", k.round(), d)
            };
        }
    }
    format!("{v}")
}

type FieldLin = Vec<Lin>;

struct Frame21 {
    n: usize,
    coords: Vec<String>,
}

impl Frame21 {
    fn new(n: usize) -> Self {
        let mut coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        coords.extend((1..=n).map(|i| format!("y{i}")));
        coords.push("z".into());
        Frame21 { n, coords }
    }

    fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn y(&self, i: usize) -> String {
        format!("y{}", i + 1)
    }

    fn zero(&self) -> FieldLin {
        vec![Lin::default(); self.dim()]
    }

    /// `E_k`, 1-based as in the model's frame; `E_{2n+1} = ξ`.
    fn e(&self, k: usize) -> FieldLin {
        let n = self.n;
        let mut f = self.zero();
        if k <= n {
            f[n + k - 1] = Lin::constant(2.0);
        } else if k <= 2 * n {
            let i = k - n - 1;
            f[i] = Lin::constant(2.0);
            f[2 * n] = Lin::term(2.0, &self.y(i));
        } else {
            f[2 * n] = Lin::constant(2.0);
        }
        f
    }

    fn combo(&self, terms: &[(f64, usize)]) -> FieldLin {
        let mut f = self.zero();
        for (c, k) in terms {
            let e = self.e(*k);
            f = f.iter().zip(&e).map(|(a, b)| a.plus(b, *c)).collect();
        }
        f
    }

    fn metric(&self) -> Vec<Vec<String>> {
        let d = self.dim();
        let n = self.n;
        // eta up to the sign of epsilon; g only sees eta⊗eta
        let mut eta_abs: Vec<Lin> = vec![Lin::default(); d];
        for i in 0..n {
            eta_abs[i] = Lin::term(0.5, &self.y(i));
        }
        eta_abs[2 * n] = Lin::constant(-0.5);
        let mut rows = Vec::with_capacity(d);
        for a in 0..d {
            let mut row = Vec::with_capacity(d);
            for b in 0..d {
                row.push(metric_entry(&eta_abs[a], &eta_abs[b], a == b && a < 2 * n));
            }
            rows.push(row);
        }
        rows
    }

    fn structure(&self, eps: f64) -> StructureDoc {
        let d = self.dim();
        let n = self.n;
        let mut phi = vec![vec![Lin::default(); d]; d];
        for i in 0..n {
            phi[n + i][i] = Lin::constant(1.0);
            phi[i][n + i] = Lin::constant(eps);
            phi[2 * n][n + i] = Lin::term(eps, &self.y(i));
        }
        let mut eta = vec![Lin::default(); d];
        for i in 0..n {
            eta[i] = Lin::term(eps / 2.0, &self.y(i));
        }
        eta[2 * n] = Lin::constant(-eps / 2.0);
        StructureDoc {
            epsilon: eps,
            phi: phi.iter().map(|r| r.iter().map(Lin::render).collect()).collect(),
            xi: render(&self.e(2 * n + 1)),
            eta: render(&eta),
        }
    }
}

fn render(f: &[Lin]) -> Vec<String> {
    f.iter().map(Lin::render).collect()
}

fn metric_entry(a: &Lin, b: &Lin, diag: bool) -> String {
    // -a*b (+ 1/4 on the x/y diagonal), a and b each one monomial at most
    let (ma, ca) = single(a);
    let (mb, cb) = single(b);
    let c = -ca * cb;
    let mono = match (ma.is_empty(), mb.is_empty()) {
        (true, true) => String::new(),
        (false, true) => ma,
        (true, false) => mb,
        (false, false) => format!("{ma}*{mb}"),
    };
    let mut l = Lin::term(c, &mono);
    if diag {
        l.add(0.25, "");
    }
    l.render()
}

fn single(l: &Lin) -> (String, f64) {
    l.0.iter()
        .find(|(_, c)| **c != 0.0)
        .map(|(m, c)| (m.clone(), *c))
        .unwrap_or((String::new(), 0.0))
}

fn named(name: &str, f: FieldLin) -> NamedField {
    NamedField {
        name: name.into(),
        components: render(&f),
    }
}

fn model_document(n: usize, eps: f64) -> Result<Document, CatalogError> {
    if n == 0 || (eps != 1.0 && eps != -1.0) {
        return Err(CatalogError::BadParameters { n, epsilon: eps });
    }
    let fr = Frame21::new(n);
    let kind = if eps < 0.0 { "Sasakian" } else { "para Sasakian" };
    Ok(Document {
        name: format!("model-r2n1({n},{eps})"),
        description: format!("R^{} with the Lorentzian {kind} model structure", 2 * n + 1),
        coords: fr.coords.clone(),
        metric: fr.metric(),
        structure: fr.structure(eps),
        map: None,
        declared_frames: FramesDoc::default(),
        expected_facts: ExpectedFacts {
            sasakian: Some(true),
            ..Default::default()
        },
    })
}

fn quarter_lorentz_target(k: usize, with_flat: bool) -> Vec<Vec<String>> {
    // (1/4) [ 1/2 δ_ij − u_i u_j, u_i ; u_j, −1 ] with an optional extra
    // flat 1/2 coordinate before the last one
    let us: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
    let d = if with_flat { k + 2 } else { k + 1 };
    let last = d - 1;
    let mut rows = vec![vec!["0".to_string(); d]; d];
    for i in 0..k {
        for j in 0..k {
            let mut l = Lin::term(-0.25, &format!("{}*{}", us[i], us[j]));
            if i == j {
                l = Lin::term(-0.25, &format!("{}^2", us[i]));
                l.add(0.125, "");
            }
            rows[i][j] = l.render();
        }
        rows[i][last] = Lin::term(0.25, &us[i]).render();
        rows[last][i] = rows[i][last].clone();
    }
    if with_flat {
        rows[k][k] = "1/8".into();
    }
    rows[last][last] = "-1/4".into();
    rows
}

fn r5_r2(eps: f64) -> Document {
    let fr = Frame21::new(2);
    let v1 = fr.combo(&[(1.0, 1), (-1.0, 3)]);
    let v2 = fr.combo(&[(1.0, 2), (-1.0, 4)]);
    let h1 = fr.combo(&[(1.0, 1), (1.0, 3)]);
    let h2 = fr.combo(&[(1.0, 2), (1.0, 4)]);
    let para = eps > 0.0;
    let expected = if para {
        // φ_{+1} fixes V_k: the vertical distribution is φ-invariant.
        ExpectedFacts {
            is_submersion: Some(true),
            xi_position: Some(XiPosition::Vertical),
            anti_invariant: Some(false),
            phi_images: vec![
                PhiImage {
                    source: "V1".into(),
                    target: "V1".into(),
                    coefficient: -1.0,
                },
                PhiImage {
                    source: "V2".into(),
                    target: "V2".into(),
                    coefficient: -1.0,
                },
            ],
            ..Default::default()
        }
    } else {
        ExpectedFacts {
            sasakian: Some(true),
            is_submersion: Some(true),
            xi_position: Some(XiPosition::Vertical),
            fiber_signature: Some(Signature {
                n_pos: 2,
                n_neg: 1,
                n_zero: 0,
            }),
            target_index: Some(0),
            anti_invariant: Some(true),
            phi_ker_is_horizontal: Some(true),
            horizontal_is_phi_ker_plus_xi: Some(false),
            mu: Some(vec![]),
            phi_images: vec![
                PhiImage {
                    source: "V1".into(),
                    target: "H1".into(),
                    coefficient: -1.0,
                },
                PhiImage {
                    source: "V2".into(),
                    target: "H2".into(),
                    coefficient: -1.0,
                },
            ],
        }
    };
    Document {
        name: if para { "lps-r5-r2" } else { "ls-r5-r2" }.into(),
        description: "F(x1,x2,y1,y2,z) = (x1+y1, x2+y2) onto (R^2, (du^2+dv^2)/8)".into(),
        coords: fr.coords.clone(),
        metric: fr.metric(),
        structure: fr.structure(eps),
        map: Some(MapDoc {
            target: TargetDoc {
                name: "r2".into(),
                coords: vec!["u".into(), "v".into()],
                metric: vec![vec!["1/8".into(), "0".into()], vec!["0".into(), "1/8".into()]],
            },
            components: vec!["x1 + y1".into(), "x2 + y2".into()],
        }),
        declared_frames: FramesDoc {
            vertical: vec![named("V1", v1), named("V2", v2), named("xi", fr.e(5))],
            horizontal: vec![named("H1", h1), named("H2", h2)],
        },
        expected_facts: expected,
    }
}

fn r7_r5(eps: f64) -> Document {
    let fr = Frame21::new(3);
    let para = eps > 0.0;
    let expected = if para {
        ExpectedFacts {
            xi_position: Some(XiPosition::Horizontal),
            target_index: Some(1),
            anti_invariant: Some(false),
            ..Default::default()
        }
    } else {
        ExpectedFacts {
            sasakian: Some(true),
            is_submersion: Some(false),
            xi_position: Some(XiPosition::Horizontal),
            fiber_signature: Some(Signature {
                n_pos: 2,
                n_neg: 0,
                n_zero: 0,
            }),
            target_index: Some(1),
            anti_invariant: Some(true),
            phi_ker_is_horizontal: Some(false),
            horizontal_is_phi_ker_plus_xi: Some(false),
            mu: Some(vec!["H3".into(), "H4".into(), "H5".into()]),
            phi_images: vec![
                PhiImage {
                    source: "V1".into(),
                    target: "H1".into(),
                    coefficient: -1.0,
                },
                PhiImage {
                    source: "V2".into(),
                    target: "H2".into(),
                    coefficient: -1.0,
                },
            ],
        }
    };
    Document {
        name: if para { "lps-r7-r5-para" } else { "lps-r7-r5" }.into(),
        description: "F = (x1+y1, x2+y2, x3+y3, x3-y3, (y1^2+y2^2+y3^2)/2 + z) onto a Lorentzian R^5".into(),
        coords: fr.coords.clone(),
        metric: fr.metric(),
        structure: fr.structure(eps),
        map: Some(MapDoc {
            target: TargetDoc {
                name: "n5".into(),
                coords: ["u1", "u2", "u3", "u4", "w"].map(String::from).to_vec(),
                metric: quarter_lorentz_target(3, true),
            },
            components: vec![
                "x1 + y1".into(),
                "x2 + y2".into(),
                "x3 + y3".into(),
                "x3 - y3".into(),
                "y1^2/2 + y2^2/2 + y3^2/2 + z".into(),
            ],
        }),
        declared_frames: FramesDoc {
            vertical: vec![
                named("V1", fr.combo(&[(1.0, 1), (-1.0, 4)])),
                named("V2", fr.combo(&[(1.0, 2), (-1.0, 5)])),
            ],
            horizontal: vec![
                named("H1", fr.combo(&[(1.0, 1), (1.0, 4)])),
                named("H2", fr.combo(&[(1.0, 2), (1.0, 5)])),
                named("H3", fr.e(3)),
                named("H4", fr.e(6)),
                named("H5", fr.e(7)),
            ],
        },
        expected_facts: expected,
    }
}

fn r5_r3() -> Document {
    let fr = Frame21::new(2);
    Document {
        name: "ls-r5-r3".into(),
        description: "F = (x1+y1, x2+y2, (y1^2+y2^2)/2 + z) onto a Lorentzian R^3".into(),
        coords: fr.coords.clone(),
        metric: fr.metric(),
        structure: fr.structure(-1.0),
        map: Some(MapDoc {
            target: TargetDoc {
                name: "n3".into(),
                coords: ["u1", "u2", "w"].map(String::from).to_vec(),
                metric: quarter_lorentz_target(2, false),
            },
            components: vec!["x1 + y1".into(), "x2 + y2".into(), "y1^2/2 + y2^2/2 + z".into()],
        }),
        declared_frames: FramesDoc {
            vertical: vec![
                named("V1", fr.combo(&[(1.0, 3), (-1.0, 1)])),
                named("V2", fr.combo(&[(1.0, 4), (-1.0, 2)])),
            ],
            horizontal: vec![
                named("H1", fr.combo(&[(1.0, 1), (1.0, 3)])),
                named("H2", fr.combo(&[(1.0, 2), (1.0, 4)])),
                named("H3", fr.e(5)),
            ],
        },
        expected_facts: ExpectedFacts {
            sasakian: Some(true),
            is_submersion: Some(false),
            xi_position: Some(XiPosition::Horizontal),
            fiber_signature: Some(Signature {
                n_pos: 2,
                n_neg: 0,
                n_zero: 0,
            }),
            target_index: Some(1),
            anti_invariant: Some(true),
            phi_ker_is_horizontal: Some(false),
            horizontal_is_phi_ker_plus_xi: Some(true),
            mu: Some(vec!["H3".into()]),
            phi_images: vec![
                PhiImage {
                    source: "V1".into(),
                    target: "H1".into(),
                    coefficient: 1.0,
                },
                PhiImage {
                    source: "V2".into(),
                    target: "H2".into(),
                    coefficient: 1.0,
                },
            ],
        },
    }
}

fn product_control() -> Document {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let f = "1 + x^2/4 + y^2/4";
    Document {
        name: "product-control".into(),
        description: "projection of (R^2, f(dx^2+dy^2)) x (R, -dz^2) onto its first factor".into(),
        coords: s(&["x", "y", "z"]),
        metric: vec![s(&[f, "0", "0"]), s(&["0", f, "0"]), s(&["0", "0", "-1"])],
        structure: StructureDoc {
            epsilon: -1.0,
            phi: vec![s(&["0", "-1", "0"]), s(&["1", "0", "0"]), s(&["0", "0", "0"])],
            xi: s(&["0", "0", "1"]),
            eta: s(&["0", "0", "1"]),
        },
        map: Some(MapDoc {
            target: TargetDoc {
                name: "plane".into(),
                coords: s(&["u", "v"]),
                metric: vec![s(&["1 + u^2/4 + v^2/4", "0"]), s(&["0", "1 + u^2/4 + v^2/4"])],
            },
            components: s(&["x", "y"]),
        }),
        declared_frames: FramesDoc {
            vertical: vec![NamedField {
                name: "xi".into(),
                components: s(&["0", "0", "1"]),
            }],
            horizontal: vec![
                NamedField {
                    name: "X".into(),
                    components: s(&["1", "0", "0"]),
                },
                NamedField {
                    name: "Y".into(),
                    components: s(&["0", "1", "0"]),
                },
            ],
        },
        expected_facts: ExpectedFacts {
            sasakian: Some(false),
            is_submersion: Some(true),
            xi_position: Some(XiPosition::Vertical),
            fiber_signature: Some(Signature {
                n_pos: 0,
                n_neg: 1,
                n_zero: 0,
            }),
            target_index: Some(0),
            anti_invariant: Some(true),
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds() {
        for e in ENTRIES {
            let m = load_example(e.name).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert!(!m.name.is_empty());
        }
        for (n, eps) in [(1, -1.0), (2, 1.0), (3, -1.0)] {
            let m = load_example(&format!("model-r2n1({n},{eps})")).unwrap();
            assert_eq!(m.chart().dim(), 2 * n + 1);
        }
    }

    #[test]
    fn unknown_and_bad_parameters() {
        assert!(matches!(load_example("nope"), Err(CatalogError::Unknown(_))));
        assert!(matches!(
            load_example("model-r2n1(0,-1)"),
            Err(CatalogError::BadParameters { .. })
        ));
    }

    #[test]
    fn model_metric_entries_render_as_transcribed() {
        let d = document("model-r2n1(1,-1)").unwrap();
        assert_eq!(d.metric[0], vec!["1/4 - 1/4*y1*y1", "0", "1/4*y1"]);
        assert_eq!(d.metric[2][2], "-1/4");
        assert_eq!(d.structure.eta, vec!["-1/2*y1", "0", "1/2"]);
        assert_eq!(d.structure.phi[2], vec!["0", "-y1", "0"]);
    }

    #[test]
    fn targets_match_transcription() {
        let d = document("ls-r5-r3").unwrap();
        let t = &d.map.unwrap().target.metric;
        assert_eq!(t[0], vec!["1/8 - 1/4*u1^2", "-1/4*u1*u2", "1/4*u1"]);
        assert_eq!(t[2], vec!["1/4*u1", "1/4*u2", "-1/4"]);
        let d = document("lps-r7-r5").unwrap();
        let t = &d.map.unwrap().target.metric;
        assert_eq!(t[3], vec!["0", "0", "0", "1/8", "0"]);
        assert_eq!(t[4], vec!["1/4*u1", "1/4*u2", "1/4*u3", "0", "-1/4"]);
    }

    #[test]
    fn export_round_trips_through_json() {
        for e in ENTRIES {
            let d = document(e.name).unwrap();
            let back = Document::from_json(&d.to_json(), e.name).unwrap();
            assert_eq!(back, d);
            assert_eq!(back.build().unwrap(), d.build().unwrap());
        }
    }
}
