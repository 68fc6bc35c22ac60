//! Anti-invariance, the B/C and μ decompositions, ξ position and dimension
//! audits, and the lemma and theorem criteria for anti-invariant submersions.
//!
//! Everything here is evaluated at one sample point through a
//! [`PointContext`]. Theorem criteria are transcribed as stated; where the
//! stated form carries a sign that is inconsistent for `ε = −1`, the
//! ε-consistent form is reported next to it as an informational criterion.
//! Each equivalence theorem also yields an agreement result comparing the
//! verdict of the direct definition with the verdict of the criterion.
//!
//! A criterion whose hypotheses fail at the point (structure not
//! (para)Sasakian, map not a semi-Riemannian submersion, fibers not
//! anti-invariant) is still evaluated but marked non-gating, with a note.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{self, StructureAt};
use crate::document::Model;
use crate::expr::Jet;
use crate::geometry::{bracket_jets, jetlin, GeometryError};
use crate::linalg::{self, LinalgError};
use crate::submersion::{SplitFrames, SubmersionAt, SubmersionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiPosition {
    Vertical,
    Horizontal,
    Oblique,
}

impl std::fmt::Display for XiPosition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            XiPosition::Vertical => "vertical",
            XiPosition::Horizontal => "horizontal",
            XiPosition::Oblique => "oblique",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AntiInvError {
    #[error("model `{0}` has no map to analyze")]
    NoMap(String),
    #[error(transparent)]
    Submersion(#[from] SubmersionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("mu has a degenerate Gram matrix at {point:?}")]
    DegenerateMu { point: Vec<f64> },
}

/// One criterion evaluated at one point.
///
/// `residual` is the largest entrywise gap between `lhs` and `rhs` (or a 0/1
/// flag for logical criteria) and `pass` is always `residual <= tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub gating: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriterionResult {
    fn build(id: &str, ctx: &PointContext, lhs: Vec<f64>, rhs: Vec<f64>, residual: f64) -> Self {
        Self::located(id, ctx.index, &ctx.point, ctx.tol, lhs, rhs, residual)
    }

    /// A result at an explicit point, for checks that need no [`PointContext`].
    pub fn located(
        id: &str,
        point_index: usize,
        point: &[f64],
        tol: f64,
        lhs: Vec<f64>,
        rhs: Vec<f64>,
        residual: f64,
    ) -> Self {
        CriterionResult {
            id: id.to_string(),
            point_index,
            point: point.to_vec(),
            lhs,
            rhs,
            residual,
            tol,
            pass: residual <= tol,
            gating: true,
            note: None,
        }
    }

    /// `lhs = rhs` entrywise; an empty comparison passes vacuously.
    pub fn compare(id: &str, ctx: &PointContext, lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        debug_assert_eq!(lhs.len(), rhs.len(), "{id}");
        let residual = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, |acc: f64, d| if d.is_nan() { f64::NAN } else { acc.max(d) });
        Self::build(id, ctx, lhs, rhs, residual)
    }

    /// A logical statement; `lhs`/`rhs` carry the quantities it was decided on.
    pub fn holds(id: &str, ctx: &PointContext, ok: bool, lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        Self::build(id, ctx, lhs, rhs, if ok { 0.0 } else { 1.0 })
    }

    /// `value >= bound`, residual `max(0, bound − value)`.
    pub fn at_least(id: &str, ctx: &PointContext, value: f64, bound: f64) -> Self {
        Self::build(id, ctx, vec![value], vec![bound], (bound - value).max(0.0))
    }

    /// Not evaluated; passes and never gates.
    pub fn skipped(id: &str, ctx: &PointContext, note: impl Into<String>) -> Self {
        let mut r = Self::build(id, ctx, vec![], vec![], 0.0);
        r.gating = false;
        r.note = Some(format!("skipped: {}", note.into()));
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(old) => format!("{old}; {note}"),
            None => note,
        });
        self
    }

    pub fn informational(mut self, note: impl Into<String>) -> Self {
        self.gating = false;
        self.with_note(note)
    }

    /// Agreement between the verdict of a direct definition and the verdict
    /// of a theorem criterion at the same point.
    pub fn agreement(ctx: &PointContext, direct: &CriterionResult, criterion: &CriterionResult) -> Self {
        let (a, b) = (direct.pass, criterion.pass);
        let mut r = Self::holds(
            &format!("agreement: {}", criterion.id),
            ctx,
            a == b,
            vec![a as u8 as f64],
            vec![b as u8 as f64],
        )
        .with_note(format!("lhs = direct `{}` verdict, rhs = criterion verdict", direct.id));
        r.gating = direct.gating && criterion.gating;
        r
    }
}

/// Hypotheses of the lemmas and theorems, decided at the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub sasakian: bool,
    pub submersion: bool,
    pub anti_invariant: bool,
}

/// Declared-field data needed to differentiate along the distributions.
#[derive(Debug, Clone)]
pub struct FieldData {
    pub sa: SubmersionAt,
    pub st: StructureAt,
}

/// Pointwise data shared by all operations at one sample point.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub index: usize,
    pub point: Vec<f64>,
    pub tol: f64,
    pub epsilon: f64,
    pub g: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub xi: DVector<f64>,
    pub eta: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub target_g: DMatrix<f64>,
    pub split: SplitFrames,
    pub position: XiPosition,
    /// `|V ξ|` and `|H ξ|` (max norm).
    pub xi_parts: (f64, f64),
    pub anti_invariance_residual: f64,
    pub hypotheses: Hypotheses,
    pub vertical_names: Vec<String>,
    pub horizontal_names: Vec<String>,
    pub fields: Option<FieldData>,
}

fn project(frame: &linalg::Frame, g: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for (e, s) in frame.vectors.iter().zip(&frame.signs) {
        out += e * (s * linalg::inner(g, v, e));
    }
    out
}

impl PointContext {
    pub fn new(model: &Model, index: usize, point: &[f64], tol: f64) -> Result<Self, AntiInvError> {
        let map = model
            .map
            .as_ref()
            .ok_or_else(|| AntiInvError::NoMap(model.name.clone()))?;
        let declared = (!model.declared.vertical.is_empty()).then_some(&model.declared);
        let split = map.analyze_split(point, declared, tol)?;
        let st = model.structure.at(point)?;
        let eps = model.structure.epsilon;
        let g = st.geometry.metric_values();
        let phi = st.phi_values();
        let xi = st.xi_values();
        let eta = st.eta_values();
        let jacobian = map.jacobian(point)?;
        let target_g = map.target.metric_at(&map.apply(point)?)?;

        let xv = project(&split.vertical, &g, &xi);
        let xh = &xi - &xv;
        let scale = xi.amax().max(f64::MIN_POSITIVE);
        let position = if xh.amax() <= tol * scale {
            XiPosition::Vertical
        } else if xv.amax() <= tol * scale {
            XiPosition::Horizontal
        } else {
            XiPosition::Oblique
        };

        let vs = &split.vertical.vectors;
        let mut anti: f64 = 0.0;
        for u in vs {
            let pu = &phi * u;
            for v in vs {
                anti = anti.max(linalg::inner(&g, &pu, v).abs());
            }
        }
        let sasakian = contact::sasakian_residual(&st, eps) <= tol;
        let fields = if declared.is_some() || map.source.dim() == map.target.dim() {
            Some(FieldData {
                sa: map.at(point, &model.declared)?,
                st,
            })
        } else {
            None
        };
        Ok(PointContext {
            index,
            point: point.to_vec(),
            tol,
            epsilon: eps,
            hypotheses: Hypotheses {
                sasakian,
                submersion: split.is_submersion,
                anti_invariant: anti <= tol,
            },
            g,
            phi,
            xi,
            eta,
            jacobian,
            target_g,
            split,
            position,
            xi_parts: (xv.amax(), xh.amax()),
            anti_invariance_residual: anti,
            vertical_names: model.vertical_names.clone(),
            horizontal_names: model.horizontal_names.clone(),
            fields,
        })
    }

    fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        linalg::inner(&self.g, u, v)
    }

    fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `m` with `dim M = 2m + 1`.
    pub fn m(&self) -> usize {
        (self.dim() - 1) / 2
    }

    /// `n = dim N`.
    pub fn n(&self) -> usize {
        self.target_g.nrows()
    }

    pub fn target_index(&self) -> usize {
        self.split.target_signature.index()
    }

    pub fn fiber_index(&self) -> usize {
        self.split.fiber_signature.index()
    }

    fn phi_images(&self) -> Vec<DVector<f64>> {
        self.split.vertical.vectors.iter().map(|v| &self.phi * v).collect()
    }

    /// `dim φ(ker F_*)`.
    pub fn dim_phi_ker(&self) -> usize {
        linalg::span_rank(&self.phi_images(), self.dim(), self.tol)
    }

    pub fn dim_horizontal(&self) -> usize {
        self.split.horizontal.len()
    }

    /// `φ(ker F_*) = (ker F_*)^⊥`.
    pub fn phi_ker_is_horizontal(&self) -> bool {
        self.hypotheses.anti_invariant && self.dim_phi_ker() == self.dim_horizontal()
    }

    /// `(ker F_*)^⊥ = φ(ker F_*) ⊕ span{ξ}`.
    pub fn horizontal_is_phi_ker_plus_xi(&self) -> bool {
        if !(self.hypotheses.anti_invariant && self.position == XiPosition::Horizontal) {
            return false;
        }
        let mut vs = self.phi_images();
        let k = linalg::span_rank(&vs, self.dim(), self.tol);
        vs.push(self.xi.clone());
        let with_xi = linalg::span_rank(&vs, self.dim(), self.tol);
        with_xi == k + 1 && with_xi == self.dim_horizontal()
    }

    fn hypothesis_note(&self, needs: Needs) -> Option<String> {
        let h = self.hypotheses;
        let mut missing = Vec::new();
        if needs.sasakian && !h.sasakian {
            missing.push("structure is not (para)Sasakian");
        }
        if needs.submersion && !h.submersion {
            missing.push("map is not a semi-Riemannian submersion");
        }
        if needs.anti_invariant && !h.anti_invariant {
            missing.push("fibers are not anti-invariant");
        }
        (!missing.is_empty()).then(|| format!("hypothesis not met: {}", missing.join(", ")))
    }

    /// Mark `r` informational when a hypothesis it needs fails here.
    pub fn gate(&self, r: CriterionResult, needs: Needs) -> CriterionResult {
        match self.hypothesis_note(needs) {
            Some(note) => r.informational(note),
            None => r,
        }
    }

    pub fn fields(&self) -> Result<&FieldData, AntiInvError> {
        self.fields
            .as_ref()
            .ok_or(AntiInvError::Submersion(SubmersionError::MissingDeclaredFields))
    }
}

/// Hypotheses a criterion depends on.
#[derive(Debug, Clone, Copy)]
pub struct Needs {
    pub sasakian: bool,
    pub submersion: bool,
    pub anti_invariant: bool,
}

pub const SUBMERSION: Needs = Needs {
    sasakian: false,
    submersion: true,
    anti_invariant: false,
};
pub const ANTI: Needs = Needs {
    sasakian: false,
    submersion: true,
    anti_invariant: true,
};
pub const ALL: Needs = Needs {
    sasakian: true,
    submersion: true,
    anti_invariant: true,
};

// Criterion ids.
pub const ANTI_INVARIANCE: &str = "g(phi V_i, V_j) = 0 (anti-invariant)";
pub const XI_POSITION: &str = "xi position";
pub const XI_VERTICAL_IFF_RIEMANNIAN: &str = "xi vertical <=> target Riemannian";
pub const XI_HORIZONTAL_IFF_LORENTZIAN: &str = "xi horizontal <=> target Lorentzian";
pub const INDEX_PAIR: &str = "(fiber index, target index) = (1,0) if xi vertical, (0,1) if horizontal";
pub const DIM_VERTICAL: &str = "xi vertical => m <= n <= 2m";
pub const DIM_EQUAL: &str = "m = n => xi vertical";
pub const DIM_HORIZONTAL: &str = "xi horizontal => m + 1 <= n";
pub const DIM_EQUAL_SPAN: &str = "m = n => phi(ker) = (ker)^perp and target Riemannian";
pub const SPAN_FULL: &str = "phi(ker) = (ker)^perp => xi vertical and m = n";
pub const SPAN_ZERO: &str = "phi(ker) = 0 => xi vertical, 2m = n, ker = span{xi}";
pub const DIM_DOUBLE: &str =
    "2m = n => (xi vertical, ker = span{xi}, phi(ker) = 0) or (xi horizontal, target Lorentzian)";
pub const SPAN_PLUS_XI: &str = "target Lorentzian => ((ker)^perp = phi(ker) + span{xi} <=> m + 1 = n)";
pub const KCONTACT_HORIZONTAL: &str = "K-contact and xi horizontal => anti-invariant and m + 1 <= n";
pub const MU_COMPLETE: &str = "dim phi(ker) + dim mu = dim (ker)^perp";
pub const MU_ORTHOGONAL: &str = "g(mu, phi(ker)) = 0";

pub const BCX: &str = "B C X = 0";
pub const C2X: &str = "C^2 X + phi B X = eps X";
pub const NABLA_XY: &str = "nabla_X Y = g(X, phi Y) xi + eps phi nabla_X phi Y";
pub const CX_AXI: &str = "C X = eps A_X xi";
pub const AXI_PHIU: &str = "g(A_X xi, phi U) = 0";
pub const NABLA_AXI: &str = "g(nabla_Y A_X xi, phi U) = -g(A_X xi, phi A_Y U) - eps eta(U) g(A_X xi, Y)";
pub const AXI_SYM: &str = "g(X, A_Y xi) = eps g(Y, A_X xi)";
pub const BX_AXI: &str = "B X = eps A_X xi";
pub const TUXI_ZERO: &str = "T_U xi = 0";
pub const NABLA_CY: &str = "g(nabla_X C Y, phi U) = -g(C Y, phi A_X U)";
pub const TUXI_PHIU: &str = "T_U xi = eps phi U";
pub const NOT_UMBILICAL: &str = "|phi U| >= 0.1 for U = first vertical field (fibers not totally umbilical)";

pub const INTEGRABLE_DIRECT: &str = "g([X,Y], V) = 0 (horizontal distribution integrable)";
pub const INT_V_II: &str = "g_N((nabla F_*)(Y,BX), F_* phi V) = g_N((nabla F_*)(X,BY), F_* phi V) + eps g(A_X xi, phi A_Y V) - eps g(A_Y xi, phi A_X V)";
pub const INT_V_III: &str = "g(A_X BY - A_Y BX, phi V) = eps g(A_X xi, phi A_Y V) - eps g(A_Y xi, phi A_X V)";
pub const INT_V_COR_SFF: &str = "(nabla F_*)(Y, phi X) = (nabla F_*)(X, phi Y)";
pub const INT_V_COR_A: &str = "A_X phi Y = A_Y phi X";
pub const INT_H_II: &str = "g_N((nabla F_*)(Y,BX), F_* phi V) = g_N((nabla F_*)(X,BY), F_* phi V) - g(CX, phi A_Y V) + g(CY, phi A_X V) + eps g(X, phi V) eta(Y) - eps g(Y, phi V) eta(X)";
pub const INT_H_III: &str = "g(A_X A_Y xi - A_Y A_X xi, phi V) = -g(CX, phi A_Y V) + g(CY, phi A_X V) + eps g(X, phi V) eta(Y) - eps g(Y, phi V) eta(X)";
pub const INT_H_III_EPS: &str = "g(A_X A_Y xi - A_Y A_X xi, phi V) = eps (-g(CX, phi A_Y V) + g(CY, phi A_X V)) + g(X, phi V) eta(Y) - g(Y, phi V) eta(X) [eps-consistent]";
pub const INT_H_COR_SFF: &str = "(nabla F_*)(Y,BX) = (nabla F_*)(X,BY) + eps eta(Y) F_*X - eps eta(X) F_*Y";
pub const INT_H_COR_A: &str = "A_X A_Y xi - A_Y A_X xi = eps eta(Y) X - eps eta(X) Y";

pub const HTG_DIRECT: &str = "g(nabla_X Y, V) = 0 (horizontal foliation totally geodesic)";
pub const HTG_V_II: &str = "g(A_X BY, phi V) = eps g(A_Y xi, phi A_X V)";
pub const HTG_V_III: &str = "g_N((nabla F_*)(X, phi Y), F_* phi V) = -eps g(A_Y xi, phi A_X V)";
pub const HTG_V_COR_A: &str = "A_X phi Y = 0";
pub const HTG_V_COR_SFF: &str = "(nabla F_*)(X, phi Y) = 0";
pub const HTG_H_II: &str = "g(A_X BY, phi V) = g(CY, phi A_X V) + eps eta(Y) g(X, phi V)";
pub const HTG_H_III: &str = "g_N((nabla F_*)(Y, phi X), F_* phi V) = g(CY, phi A_X V) + eps eta(Y) g(X, phi V)";
pub const HTG_H_COR_A: &str = "A_X BY = eps eta(Y) X";
pub const HTG_H_COR_SFF: &str = "(nabla F_*)(Y, phi X) = eps eta(Y) F_*X";
pub const VTG_DIRECT: &str = "H nabla_V W = 0 (vertical foliation totally geodesic)";
pub const VTG_B: &str = "g_N((nabla F_*)(V, phi X), F_* phi W) = 0";
pub const VTG_C: &str = "g(T_V BX + A_CX V, phi W) = 0 (T_V BX + A_CX V in mu)";
pub const VTG_COR_SFF: &str = "(nabla F_*)(V, phi X) = 0";
pub const VTG_COR_T: &str = "T_V phi W = 0";

pub const TG_DIRECT: &str = "nabla F_* = 0 (totally geodesic map)";
pub const TG_CRITERION: &str = "T_V phi W = 0 and A_X phi W = 0";
pub const NOT_TG: &str = "F is not totally geodesic";
pub const HARMONIC_DIRECT: &str = "tau(F) = 0 (harmonic map)";
pub const MINIMAL_FIBERS: &str = "sum eps_i T_(e_i) e_i = 0 (minimal fibers)";
pub const HARMONIC_V: &str = "tr phi(T_V) = -n eta(V)";
pub const HARMONIC_V_EPS: &str = "tr phi(T_V) = -eps n eta(V) [eps-consistent]";
pub const HARMONIC_H: &str = "tr(phi T_V) = 0";
pub const TXIXI: &str = "T_xi xi = 0";

pub const PRODUCT_CRITERION: &str = "g_N((nabla F_*)(Y,BX), F_* phi V) = g(CY, phi A_X V) + eps eta(Y) g(X, phi V) and g_N((nabla F_*)(V, phi X), F_* phi W) = 0";
pub const TWISTED_T: &str = "T_V phi X = -g(X, T_V V) |V|^-2 phi V";
pub const TWISTED_A: &str = "A_X phi Y = eta(Y) X";
pub const UMBILICAL_DIRECT: &str = "T_U W = g(U,W) H (fibers totally umbilical)";

fn b2f(b: bool) -> f64 {
    b as u8 as f64
}

/// Def. of anti-invariance over the pointwise vertical frame.
pub fn check_anti_invariance(ctx: &PointContext) -> CriterionResult {
    let vs = &ctx.split.vertical.vectors;
    let mut lhs = Vec::new();
    for u in vs {
        let pu = &ctx.phi * u;
        for v in vs {
            lhs.push(ctx.inner(&pu, v));
        }
    }
    let rhs = vec![0.0; lhs.len()];
    let r = CriterionResult::compare(ANTI_INVARIANCE, ctx, lhs, rhs);
    let r = if vs.is_empty() {
        r.with_note("no fibers; vacuous")
    } else {
        r
    };
    ctx.gate(r, SUBMERSION)
}

/// ξ position and every applicable dimension relation.
pub fn xi_position_and_dimension_audit(ctx: &PointContext) -> Vec<CriterionResult> {
    let (m, n) = (ctx.m(), ctx.n());
    let pos = ctx.position;
    let vertical = pos == XiPosition::Vertical;
    let horizontal = pos == XiPosition::Horizontal;
    let t_index = ctx.target_index();
    let mut out = Vec::new();
    out.push(
        CriterionResult::holds(XI_POSITION, ctx, true, vec![ctx.xi_parts.0, ctx.xi_parts.1], vec![])
            .informational(format!("xi is {pos}; lhs = (|V xi|, |H xi|)")),
    );
    let pro = |id: &str, a: bool, b: bool| {
        ctx.gate(
            CriterionResult::holds(id, ctx, a == b, vec![b2f(a)], vec![b2f(b)]),
            SUBMERSION,
        )
    };
    out.push(pro(XI_VERTICAL_IFF_RIEMANNIAN, vertical, t_index == 0));
    out.push(pro(XI_HORIZONTAL_IFF_LORENTZIAN, horizontal, t_index == 1));
    let pair = vec![ctx.fiber_index() as f64, t_index as f64];
    out.push(match pos {
        XiPosition::Vertical => ctx.gate(
            CriterionResult::compare(INDEX_PAIR, ctx, pair, vec![1.0, 0.0]),
            SUBMERSION,
        ),
        XiPosition::Horizontal => ctx.gate(
            CriterionResult::compare(INDEX_PAIR, ctx, pair, vec![0.0, 1.0]),
            SUBMERSION,
        ),
        XiPosition::Oblique => CriterionResult::skipped(INDEX_PAIR, ctx, "xi is oblique"),
    });

    let mn = vec![m as f64, n as f64];
    let implication = |id: &str, premise: bool, conclusion: bool, needs: Needs| {
        let r = CriterionResult::holds(id, ctx, !premise || conclusion, mn.clone(), vec![]);
        let r = if premise {
            r
        } else {
            r.with_note("premise does not hold")
        };
        ctx.gate(r.with_note("lhs = (m, n)"), needs)
    };
    out.push(implication(DIM_VERTICAL, vertical, m <= n && n <= 2 * m, ANTI));
    out.push(implication(DIM_EQUAL, m == n, vertical, ANTI));
    out.push(implication(DIM_HORIZONTAL, horizontal, m < n, ANTI));
    let full = ctx.phi_ker_is_horizontal();
    out.push(implication(DIM_EQUAL_SPAN, m == n, full && t_index == 0, ANTI));
    out.push(implication(SPAN_FULL, full, vertical && m == n, ANTI));
    let zero = ctx.dim_phi_ker() == 0 && ctx.hypotheses.anti_invariant;
    let ker_is_xi = vertical && ctx.split.vertical.len() == 1;
    out.push(implication(SPAN_ZERO, zero, vertical && 2 * m == n && ker_is_xi, ANTI));
    let branch_a = vertical && ker_is_xi && ctx.dim_phi_ker() == 0 && t_index == 0;
    let branch_b = horizontal && t_index == 1;
    let r = implication(DIM_DOUBLE, 2 * m == n, branch_a || branch_b, ANTI);
    out.push(if 2 * m == n {
        let b = match (branch_a, branch_b) {
            (true, _) => "first branch holds",
            (_, true) => "second branch holds",
            _ => "neither branch holds",
        };
        r.with_note(b)
    } else {
        r
    });
    let plus_xi = ctx.horizontal_is_phi_ker_plus_xi();
    out.push(implication(SPAN_PLUS_XI, t_index == 1, plus_xi == (m + 1 == n), ANTI));
    // The K-contact hypothesis is what makes anti-invariance automatic here.
    let r = implication(
        KCONTACT_HORIZONTAL,
        horizontal,
        ctx.hypotheses.anti_invariant && m < n,
        SUBMERSION,
    );
    out.push(if ctx.hypotheses.sasakian {
        r
    } else {
        r.informational("hypothesis not met: structure is not K-(para)contact")
    });
    out
}

/// Basis of `μ`, the complement of `φ(ker F_*)` in the
/// horizontal space.
pub fn mu_basis(ctx: &PointContext) -> Vec<DVector<f64>> {
    let hs = &ctx.split.horizontal.vectors;
    let images = ctx.phi_images();
    if images.is_empty() {
        return hs.clone();
    }
    let cons = DMatrix::from_fn(images.len(), hs.len(), |i, a| ctx.inner(&images[i], &hs[a]));
    linalg::null_space(&cons, ctx.tol)
        .into_iter()
        .map(|c| {
            let mut w = DVector::zeros(ctx.dim());
            for (a, h) in hs.iter().enumerate() {
                w += h * c[a];
            }
            w
        })
        .collect()
}

/// `φX = BX + CX` for a horizontal `X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcDecomposition {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub mu_basis: Vec<Vec<f64>>,
    /// `|φX − BX − CX|`; nonzero when `φX` leaves `ker F_* ⊕ μ`.
    pub remainder: f64,
}

pub fn bc_mu_decompose(ctx: &PointContext, x: &DVector<f64>) -> Result<BcDecomposition, AntiInvError> {
    let px = &ctx.phi * x;
    let b = project(&ctx.split.vertical, &ctx.g, &px);
    let mu = mu_basis(ctx);
    let mut c = DVector::zeros(ctx.dim());
    if !mu.is_empty() {
        let gram = DMatrix::from_fn(mu.len(), mu.len(), |i, j| ctx.inner(&mu[i], &mu[j]));
        let rhs = DVector::from_fn(mu.len(), |i, _| ctx.inner(&mu[i], &px));
        let coef = gram.lu().solve(&rhs).ok_or_else(|| AntiInvError::DegenerateMu {
            point: ctx.point.clone(),
        })?;
        for (w, k) in mu.iter().zip(coef.iter()) {
            c += w * *k;
        }
    }
    let remainder = (&px - &b - &c).amax();
    Ok(BcDecomposition {
        b: b.iter().copied().collect(),
        c: c.iter().copied().collect(),
        mu_basis: mu.iter().map(|v| v.iter().copied().collect()).collect(),
        remainder,
    })
}

/// The decomposition identities of `(ker F_*)^⊥ = φ(ker F_*) ⊕ μ`.
pub fn mu_checks(ctx: &PointContext) -> Vec<CriterionResult> {
    let mu = mu_basis(ctx);
    let dphi = ctx.dim_phi_ker();
    let complete = CriterionResult::compare(
        MU_COMPLETE,
        ctx,
        vec![(dphi + mu.len()) as f64],
        vec![ctx.dim_horizontal() as f64],
    );
    let images = ctx.phi_images();
    let orth: Vec<f64> = mu
        .iter()
        .flat_map(|w| images.iter().map(move |p| (w, p)))
        .map(|(w, p)| ctx.inner(w, p))
        .collect();
    let zeros = vec![0.0; orth.len()];
    vec![
        ctx.gate(complete, ANTI),
        ctx.gate(CriterionResult::compare(MU_ORTHOGONAL, ctx, orth, zeros), ANTI),
    ]
}

/// Jet-level helpers over the declared fields.
struct Ops<'a> {
    f: &'a FieldData,
    eps: f64,
}

type J = Vec<Jet>;

impl<'a> Ops<'a> {
    fn phi(&self, v: &[Jet]) -> J {
        self.f.st.apply_phi(v)
    }
    fn b(&self, v: &[Jet]) -> J {
        self.f.sa.vert(&self.phi(v))
    }
    /// Horizontal part of `φX`; it lies in `μ` when the fibers are
    /// anti-invariant, since `g(φX, φV) = 0` for horizontal `X`.
    fn c(&self, v: &[Jet]) -> J {
        self.f.sa.horiz(&self.phi(v))
    }
    fn eta(&self, v: &[Jet]) -> f64 {
        jetlin::dot(&self.f.st.eta, v).value
    }
    fn g(&self, u: &[Jet], v: &[Jet]) -> f64 {
        self.f.sa.inner(u, v).value
    }
    fn a(&self, e: &[Jet], g: &[Jet]) -> J {
        self.f.sa.a(e, g)
    }
    fn t(&self, e: &[Jet], g: &[Jet]) -> J {
        self.f.sa.t(e, g)
    }
    fn nabla(&self, x: &[Jet], y: &[Jet]) -> J {
        self.f.sa.nabla(x, y)
    }
    fn xi(&self) -> &[Jet] {
        &self.f.st.xi
    }
    fn sff(&self, x: &[Jet], y: &[Jet]) -> DVector<f64> {
        self.f.sa.second_fundamental_form(x, y)
    }
    fn push(&self, x: &[Jet]) -> DVector<f64> {
        DVector::from_vec(jetlin::values(&self.f.sa.push(x)))
    }
    fn gn(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        linalg::inner(&self.f.sa.target.metric_values(), a, b)
    }
    fn vals(v: &[Jet]) -> Vec<f64> {
        jetlin::values(v)
    }
    fn scale(v: &[Jet], s: f64) -> J {
        jetlin::scale(v, s)
    }
    fn constant(&self, v: &DVector<f64>) -> J {
        self.f.sa.constant(v)
    }
}

fn ops(ctx: &PointContext) -> Result<Ops<'_>, AntiInvError> {
    Ok(Ops {
        f: ctx.fields()?,
        eps: ctx.epsilon,
    })
}

/// Accumulates `lhs`/`rhs` pairs for one criterion.
#[derive(Default)]
struct Acc {
    lhs: Vec<f64>,
    rhs: Vec<f64>,
}

impl Acc {
    fn push(&mut self, l: f64, r: f64) {
        self.lhs.push(l);
        self.rhs.push(r);
    }
    fn extend(&mut self, l: &[f64], r: &[f64]) {
        self.lhs.extend_from_slice(l);
        self.rhs.extend_from_slice(r);
    }
    fn finish(self, id: &str, ctx: &PointContext) -> CriterionResult {
        CriterionResult::compare(id, ctx, self.lhs, self.rhs)
    }
}

fn oblique_skip(ctx: &PointContext, ids: &[&str]) -> Vec<CriterionResult> {
    ids.iter()
        .map(|id| CriterionResult::skipped(id, ctx, "xi is neither vertical nor horizontal"))
        .collect()
}

/// The lemma identities for the detected ξ position, on the declared frames.
pub fn lemma_residual_suite(ctx: &PointContext) -> Result<Vec<CriterionResult>, AntiInvError> {
    let o = ops(ctx)?;
    let eps = o.eps;
    let hs = &o.f.sa.horizontal;
    let vs = &o.f.sa.vertical;
    let xi = o.xi().to_vec();
    let mut out = Vec::new();
    match ctx.position {
        XiPosition::Vertical => {
            let mut bcx = Acc::default();
            let mut c2x = Acc::default();
            let mut n31 = Acc::default();
            let mut c46 = Acc::default();
            let mut a47 = Acc::default();
            let mut a48 = Acc::default();
            let mut a49 = Acc::default();
            let mut tphi = Acc::default();
            for x in hs {
                let cx = o.c(x);
                bcx.extend(&Ops::vals(&o.b(&cx)), &vec![0.0; x.len()]);
                let l = jetlin::add(&o.c(&cx), &o.phi(&o.b(x)));
                c2x.extend(&Ops::vals(&l), &Ops::vals(&Ops::scale(x, eps)));
                let axi = o.a(x, &xi);
                c46.extend(&Ops::vals(&cx), &Ops::vals(&Ops::scale(&axi, eps)));
                for u in vs {
                    a47.push(o.g(&axi, &o.phi(u)), 0.0);
                }
                for y in hs {
                    let ayxi = o.a(y, &xi);
                    a49.push(o.g(x, &ayxi), eps * o.g(y, &axi));
                    let lhs = o.nabla(x, y);
                    let rhs = jetlin::add(
                        &Ops::scale(&xi, o.g(x, &o.phi(y))),
                        &Ops::scale(&o.phi(&o.nabla(x, &o.phi(y))), eps),
                    );
                    n31.extend(&Ops::vals(&lhs), &Ops::vals(&rhs));
                    for u in vs {
                        let l = o.g(&o.nabla(y, &axi), &o.phi(u));
                        let r = -o.g(&axi, &o.phi(&o.a(y, u))) - eps * o.eta(u) * o.g(&axi, y);
                        a48.push(l, r);
                    }
                }
            }
            for u in vs {
                tphi.extend(&Ops::vals(&o.t(u, &xi)), &Ops::vals(&Ops::scale(&o.phi(u), eps)));
            }
            let accs = [
                (BCX, bcx),
                (C2X, c2x),
                (NABLA_XY, n31),
                (CX_AXI, c46),
                (AXI_PHIU, a47),
                (NABLA_AXI, a48),
                (AXI_SYM, a49),
                (TUXI_PHIU, tphi),
            ];
            for (id, acc) in accs {
                out.push(ctx.gate(acc.finish(id, ctx), ALL));
            }
            match vs.first() {
                Some(u) => {
                    let pu = o.phi(u);
                    let norm = o.g(&pu, &pu).abs().sqrt();
                    out.push(ctx.gate(CriterionResult::at_least(NOT_UMBILICAL, ctx, norm, 0.1), ALL));
                }
                None => out.push(CriterionResult::skipped(NOT_UMBILICAL, ctx, "no vertical fields")),
            }
        }
        XiPosition::Horizontal => {
            let mut b56 = Acc::default();
            let mut t57 = Acc::default();
            let mut c58 = Acc::default();
            for x in hs {
                let axi = o.a(x, &xi);
                b56.extend(&Ops::vals(&o.b(x)), &Ops::vals(&Ops::scale(&axi, eps)));
                for y in hs {
                    let cy = o.c(y);
                    for u in vs {
                        let l = o.g(&o.nabla(x, &cy), &o.phi(u));
                        let r = -o.g(&cy, &o.phi(&o.a(x, u)));
                        c58.push(l, r);
                    }
                }
            }
            for u in vs {
                let t = Ops::vals(&o.t(u, &xi));
                let z = vec![0.0; t.len()];
                t57.extend(&t, &z);
            }
            out.push(ctx.gate(b56.finish(BX_AXI, ctx), ALL));
            out.push(ctx.gate(t57.finish(TUXI_ZERO, ctx), ALL));
            out.push(ctx.gate(c58.finish(NABLA_CY, ctx), ALL));
        }
        XiPosition::Oblique => {
            out.extend(oblique_skip(
                ctx,
                &[BCX, C2X, NABLA_XY, CX_AXI, AXI_PHIU, NABLA_AXI, AXI_SYM],
            ));
            out.extend(oblique_skip(ctx, &[BX_AXI, TUXI_ZERO, NABLA_CY]));
        }
    }
    Ok(out)
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// The two sides of an equivalence are verdicts, not claims; only their
/// agreement gates.
fn with_agreements(
    ctx: &PointContext,
    direct: CriterionResult,
    criteria: Vec<CriterionResult>,
) -> Vec<CriterionResult> {
    let mut out = vec![direct
        .clone()
        .informational("property verdict; the agreement result gates")];
    for c in criteria {
        if c.note.as_deref().is_some_and(|n| n.starts_with("skipped")) {
            out.push(c);
            continue;
        }
        let agree = CriterionResult::agreement(ctx, &direct, &c);
        out.push(c.informational("equivalence criterion; the agreement result gates"));
        out.push(agree);
    }
    out
}

/// Direct integrability test against the theorem criteria for the detected
/// case, with agreement flags.
pub fn integrability_check(ctx: &PointContext) -> Result<Vec<CriterionResult>, AntiInvError> {
    let o = ops(ctx)?;
    let eps = o.eps;
    let hs = &o.f.sa.horizontal;
    let vs = &o.f.sa.vertical;
    let xi = o.xi().to_vec();
    let mut direct = Acc::default();
    for (i, j) in pairs(hs.len()) {
        let br = bracket_jets(&hs[i], &hs[j]);
        for v in vs {
            direct.push(o.g(&br, v), 0.0);
        }
    }
    let direct = ctx.gate(direct.finish(INTEGRABLE_DIRECT, ctx), SUBMERSION);
    let mut crit = Vec::new();
    match ctx.position {
        XiPosition::Vertical => {
            let (mut ii, mut iii, mut cs, mut ca) = (Acc::default(), Acc::default(), Acc::default(), Acc::default());
            for (i, j) in pairs(hs.len()) {
                let (x, y) = (&hs[i], &hs[j]);
                let (axi, ayxi) = (o.a(x, &xi), o.a(y, &xi));
                let (bx, by) = (o.b(x), o.b(y));
                for v in vs {
                    let pv = o.phi(v);
                    let fpv = o.push(&pv);
                    let tail = eps * o.g(&axi, &o.phi(&o.a(y, v))) - eps * o.g(&ayxi, &o.phi(&o.a(x, v)));
                    ii.push(o.gn(&o.sff(y, &bx), &fpv), o.gn(&o.sff(x, &by), &fpv) + tail);
                    let l = o.g(&jetlin::sub(&o.a(x, &by), &o.a(y, &bx)), &pv);
                    iii.push(l, tail);
                }
                let (sa, sb) = (o.sff(y, &o.phi(x)), o.sff(x, &o.phi(y)));
                cs.extend(sa.as_slice(), sb.as_slice());
                ca.extend(&Ops::vals(&o.a(x, &o.phi(y))), &Ops::vals(&o.a(y, &o.phi(x))));
            }
            crit.push(ctx.gate(ii.finish(INT_V_II, ctx), ALL));
            crit.push(
                ctx.gate(iii.finish(INT_V_III, ctx), ALL)
                    .with_note("first A_Y U read as A_Y V"),
            );
            if ctx.phi_ker_is_horizontal() {
                crit.push(ctx.gate(cs.finish(INT_V_COR_SFF, ctx), ALL));
                crit.push(ctx.gate(ca.finish(INT_V_COR_A, ctx), ALL));
            } else {
                for id in [INT_V_COR_SFF, INT_V_COR_A] {
                    crit.push(CriterionResult::skipped(id, ctx, "phi(ker) != (ker)^perp"));
                }
            }
        }
        XiPosition::Horizontal => {
            let (mut ii, mut iii, mut iii_eps, mut cs, mut ca) = (
                Acc::default(),
                Acc::default(),
                Acc::default(),
                Acc::default(),
                Acc::default(),
            );
            for (i, j) in pairs(hs.len()) {
                let (x, y) = (&hs[i], &hs[j]);
                let (axi, ayxi) = (o.a(x, &xi), o.a(y, &xi));
                let (bx, by, cx, cy) = (o.b(x), o.b(y), o.c(x), o.c(y));
                let (ex, ey) = (o.eta(x), o.eta(y));
                for v in vs {
                    let pv = o.phi(v);
                    let fpv = o.push(&pv);
                    let cterm = -o.g(&cx, &o.phi(&o.a(y, v))) + o.g(&cy, &o.phi(&o.a(x, v)));
                    let eterm = eps * o.g(x, &pv) * ey - eps * o.g(y, &pv) * ex;
                    ii.push(o.gn(&o.sff(y, &bx), &fpv), o.gn(&o.sff(x, &by), &fpv) + cterm + eterm);
                    let l = o.g(&jetlin::sub(&o.a(x, &ayxi), &o.a(y, &axi)), &pv);
                    iii.push(l, cterm + eterm);
                    iii_eps.push(l, eps * (cterm + eterm));
                }
                let fx = o.push(x);
                let fy = o.push(y);
                let r = o.sff(x, &by) + &fx * (eps * ey) - &fy * (eps * ex);
                cs.extend(o.sff(y, &bx).as_slice(), r.as_slice());
                let l = jetlin::sub(&o.a(x, &ayxi), &o.a(y, &axi));
                let r = jetlin::sub(&Ops::scale(x, eps * ey), &Ops::scale(y, eps * ex));
                ca.extend(&Ops::vals(&l), &Ops::vals(&r));
            }
            crit.push(ctx.gate(ii.finish(INT_H_II, ctx), ALL));
            crit.push(ctx.gate(iii.finish(INT_H_III, ctx), ALL));
            crit.push(
                iii_eps
                    .finish(INT_H_III_EPS, ctx)
                    .informational("stated criterion with B = eps A xi substituted consistently"),
            );
            if ctx.horizontal_is_phi_ker_plus_xi() {
                crit.push(ctx.gate(cs.finish(INT_H_COR_SFF, ctx), ALL));
                crit.push(ctx.gate(ca.finish(INT_H_COR_A, ctx), ALL));
            } else {
                for id in [INT_H_COR_SFF, INT_H_COR_A] {
                    crit.push(CriterionResult::skipped(id, ctx, "(ker)^perp != phi(ker) + span{xi}"));
                }
            }
        }
        XiPosition::Oblique => {
            crit.extend(oblique_skip(ctx, &[INT_V_II, INT_V_III, INT_H_II, INT_H_III]));
        }
    }
    Ok(with_agreements(ctx, direct, crit))
}

/// Totally geodesic tests for both foliations against the theorem criteria.
pub fn foliation_checks(ctx: &PointContext) -> Result<Vec<CriterionResult>, AntiInvError> {
    let o = ops(ctx)?;
    let eps = o.eps;
    let hs = &o.f.sa.horizontal;
    let vs = &o.f.sa.vertical;
    let xi = o.xi().to_vec();

    let mut direct = Acc::default();
    for x in hs {
        for y in hs {
            let nxy = o.nabla(x, y);
            for v in vs {
                direct.push(o.g(&nxy, v), 0.0);
            }
        }
    }
    let direct_h = ctx.gate(direct.finish(HTG_DIRECT, ctx), SUBMERSION);
    let mut crit = Vec::new();
    match ctx.position {
        XiPosition::Vertical => {
            let (mut ii, mut iii, mut ca, mut cs) = (Acc::default(), Acc::default(), Acc::default(), Acc::default());
            for x in hs {
                for y in hs {
                    let ayxi = o.a(y, &xi);
                    let by = o.b(y);
                    let py = o.phi(y);
                    for v in vs {
                        let pv = o.phi(v);
                        let r = eps * o.g(&ayxi, &o.phi(&o.a(x, v)));
                        ii.push(o.g(&o.a(x, &by), &pv), r);
                        iii.push(o.gn(&o.sff(x, &py), &o.push(&pv)), -r);
                    }
                    let a = Ops::vals(&o.a(x, &py));
                    ca.extend(&a, &vec![0.0; a.len()]);
                    let s = o.sff(x, &py);
                    cs.extend(s.as_slice(), &vec![0.0; s.len()]);
                }
            }
            crit.push(ctx.gate(ii.finish(HTG_V_II, ctx), ALL));
            crit.push(ctx.gate(iii.finish(HTG_V_III, ctx), ALL));
            if ctx.phi_ker_is_horizontal() {
                crit.push(ctx.gate(ca.finish(HTG_V_COR_A, ctx), ALL));
                crit.push(ctx.gate(cs.finish(HTG_V_COR_SFF, ctx), ALL));
            } else {
                for id in [HTG_V_COR_A, HTG_V_COR_SFF] {
                    crit.push(CriterionResult::skipped(id, ctx, "phi(ker) != (ker)^perp"));
                }
            }
        }
        XiPosition::Horizontal => {
            let (mut ii, mut iii, mut ca, mut cs) = (Acc::default(), Acc::default(), Acc::default(), Acc::default());
            for x in hs {
                for y in hs {
                    let (by, cy, px) = (o.b(y), o.c(y), o.phi(x));
                    let ey = o.eta(y);
                    for v in vs {
                        let pv = o.phi(v);
                        let r = o.g(&cy, &o.phi(&o.a(x, v))) + eps * ey * o.g(x, &pv);
                        ii.push(o.g(&o.a(x, &by), &pv), r);
                        iii.push(o.gn(&o.sff(y, &px), &o.push(&pv)), r);
                    }
                    ca.extend(&Ops::vals(&o.a(x, &by)), &Ops::vals(&Ops::scale(x, eps * ey)));
                    let s = o.sff(y, &px);
                    let r = o.push(x) * (eps * ey);
                    cs.extend(s.as_slice(), r.as_slice());
                }
            }
            crit.push(ctx.gate(ii.finish(HTG_H_II, ctx), ALL));
            crit.push(ctx.gate(iii.finish(HTG_H_III, ctx), ALL));
            if ctx.horizontal_is_phi_ker_plus_xi() {
                crit.push(ctx.gate(ca.finish(HTG_H_COR_A, ctx), ALL));
                crit.push(ctx.gate(cs.finish(HTG_H_COR_SFF, ctx), ALL));
            } else {
                for id in [HTG_H_COR_A, HTG_H_COR_SFF] {
                    crit.push(CriterionResult::skipped(id, ctx, "(ker)^perp != phi(ker) + span{xi}"));
                }
            }
        }
        XiPosition::Oblique => crit.extend(oblique_skip(ctx, &[HTG_V_II, HTG_H_II])),
    }
    let mut out = with_agreements(ctx, direct_h, crit);

    let mut direct = Acc::default();
    for v in vs {
        for w in vs {
            let t = Ops::vals(&o.t(v, w));
            direct.extend(&t, &vec![0.0; t.len()]);
        }
    }
    let direct_v = ctx.gate(direct.finish(VTG_DIRECT, ctx), SUBMERSION);
    let (mut cb, mut cc, mut csff, mut ct) = (Acc::default(), Acc::default(), Acc::default(), Acc::default());
    for v in vs {
        for x in hs {
            let px = o.phi(x);
            let s = o.sff(v, &px);
            csff.extend(s.as_slice(), &vec![0.0; s.len()]);
            let (bx, cx) = (o.b(x), o.c(x));
            let sum = jetlin::add(&o.t(v, &bx), &o.a(&cx, v));
            for w in vs {
                let pw = o.phi(w);
                cb.push(o.gn(&s, &o.push(&pw)), 0.0);
                cc.push(o.g(&sum, &pw), 0.0);
            }
        }
        for w in vs {
            let t = Ops::vals(&o.t(v, &o.phi(w)));
            ct.extend(&t, &vec![0.0; t.len()]);
        }
    }
    let mut crit = vec![
        ctx.gate(cb.finish(VTG_B, ctx), ALL),
        ctx.gate(cc.finish(VTG_C, ctx), ALL),
    ];
    if ctx.horizontal_is_phi_ker_plus_xi() {
        crit.push(ctx.gate(csff.finish(VTG_COR_SFF, ctx), ALL));
        crit.push(ctx.gate(ct.finish(VTG_COR_T, ctx), ALL));
    } else {
        for id in [VTG_COR_SFF, VTG_COR_T] {
            crit.push(CriterionResult::skipped(id, ctx, "(ker)^perp != phi(ker) + span{xi}"));
        }
    }
    out.extend(with_agreements(ctx, direct_v, crit));
    Ok(out)
}

/// `Σ_i ε_i g(e_i, φ T_{e_i} V)` over the pointwise vertical frame.
fn trace_phi_t(o: &Ops, ctx: &PointContext, v: &[Jet]) -> f64 {
    let frame = &ctx.split.vertical;
    frame
        .vectors
        .iter()
        .zip(&frame.signs)
        .map(|(e, s)| {
            let ej = o.constant(e);
            s * o.g(&ej, &o.phi(&o.t(&ej, v)))
        })
        .sum()
}

/// Totally geodesic map and harmonicity criteria, each against the direct
/// second-fundamental-form computation.
pub fn tg_map_and_harmonic_criteria(ctx: &PointContext) -> Result<Vec<CriterionResult>, AntiInvError> {
    let o = ops(ctx)?;
    let eps = o.eps;
    let hs = &o.f.sa.horizontal;
    let vs = &o.f.sa.vertical;
    let xi = o.xi().to_vec();
    let frame: Vec<(J, f64)> = ctx
        .split
        .vertical
        .vectors
        .iter()
        .zip(&ctx.split.vertical.signs)
        .chain(ctx.split.horizontal.vectors.iter().zip(&ctx.split.horizontal.signs))
        .map(|(e, s)| (o.constant(e), *s))
        .collect();

    let mut tg = Acc::default();
    let mut tension = DVector::zeros(ctx.n());
    for (a, (ea, sa)) in frame.iter().enumerate() {
        for (eb, _) in &frame[a..] {
            let s = o.sff(ea, eb);
            tg.extend(s.as_slice(), &vec![0.0; s.len()]);
        }
        tension += o.sff(ea, ea) * *sa;
    }
    let direct_tg = ctx.gate(tg.finish(TG_DIRECT, ctx), SUBMERSION);
    let mut out = Vec::new();
    let span_xi = ctx.horizontal_is_phi_ker_plus_xi();
    if span_xi {
        let mut c = Acc::default();
        for v in vs {
            for w in vs {
                let t = Ops::vals(&o.t(v, &o.phi(w)));
                c.extend(&t, &vec![0.0; t.len()]);
            }
        }
        for x in hs {
            for w in vs {
                let a = Ops::vals(&o.a(x, &o.phi(w)));
                c.extend(&a, &vec![0.0; a.len()]);
            }
        }
        out.extend(with_agreements(
            ctx,
            direct_tg.clone(),
            vec![ctx.gate(c.finish(TG_CRITERION, ctx), ALL)],
        ));
    } else {
        out.push(direct_tg.clone().informational("property verdict"));
        out.push(CriterionResult::skipped(
            TG_CRITERION,
            ctx,
            "(ker)^perp != phi(ker) + span{xi}",
        ));
    }
    if ctx.position == XiPosition::Vertical && ctx.phi_ker_is_horizontal() {
        let r = CriterionResult::holds(NOT_TG, ctx, !direct_tg.pass, vec![direct_tg.residual], vec![ctx.tol]);
        out.push(ctx.gate(r.with_note("lhs = max |nabla F_*| over the frame"), ALL));
    }

    let t = tension.as_slice().to_vec();
    let direct_h = ctx.gate(
        CriterionResult::compare(HARMONIC_DIRECT, ctx, t.clone(), vec![0.0; t.len()]),
        SUBMERSION,
    );
    let mut mean = DVector::zeros(ctx.dim());
    for (e, s) in ctx.split.vertical.vectors.iter().zip(&ctx.split.vertical.signs) {
        let ej = o.constant(e);
        mean += DVector::from_vec(Ops::vals(&o.t(&ej, &ej))) * *s;
    }
    let m = mean.as_slice().to_vec();
    let minimal = ctx.gate(
        CriterionResult::compare(MINIMAL_FIBERS, ctx, m.clone(), vec![0.0; m.len()]),
        SUBMERSION,
    );
    let mut crit = vec![minimal];
    let n = ctx.n() as f64;
    let fiber: Vec<J> = ctx.split.vertical.vectors.iter().map(|v| o.constant(v)).collect();
    match ctx.position {
        XiPosition::Vertical if ctx.m() == ctx.n() => {
            let (mut stated, mut consistent) = (Acc::default(), Acc::default());
            for v in &fiber {
                let tr = trace_phi_t(&o, ctx, v);
                stated.push(tr, -n * o.eta(v));
                consistent.push(tr, -eps * n * o.eta(v));
            }
            crit.push(
                ctx.gate(stated.finish(HARMONIC_V, ctx), ALL)
                    .with_note("trace sum_i eps_i g(e_i, phi T_(e_i) V) over the pseudo-orthonormal fiber frame"),
            );
            crit.push(
                consistent
                    .finish(HARMONIC_V_EPS, ctx)
                    .informational("stated trace identity with the eps-consistent structure equation"),
            );
        }
        XiPosition::Horizontal if span_xi => {
            let mut acc = Acc::default();
            for v in &fiber {
                acc.push(trace_phi_t(&o, ctx, v), 0.0);
            }
            crit.push(ctx.gate(acc.finish(HARMONIC_H, ctx), ALL));
        }
        _ => crit.push(CriterionResult::skipped(
            HARMONIC_V,
            ctx,
            "needs xi vertical with m = n, or xi horizontal with (ker)^perp = phi(ker) + span{xi}",
        )),
    }
    out.extend(with_agreements(ctx, direct_h, crit));
    if ctx.position == XiPosition::Vertical {
        let t = Ops::vals(&o.t(&xi, &xi));
        out.push(ctx.gate(CriterionResult::compare(TXIXI, ctx, t.clone(), vec![0.0; t.len()]), ALL));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "locally product")]
    LocallyProduct,
    #[serde(rename = "twisted-product candidate")]
    TwistedProductCandidate,
    #[serde(rename = "none")]
    None,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::LocallyProduct => "locally product",
            Classification::TwistedProductCandidate => "twisted-product candidate",
            Classification::None => "none",
        })
    }
}

/// Foliation flags at one point and the classification they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDecomposition {
    pub point_index: usize,
    pub horizontal_integrable: bool,
    pub horizontal_totally_geodesic: bool,
    pub vertical_totally_geodesic: bool,
    pub vertical_totally_umbilical: bool,
    pub classification: Classification,
}

/// Classification over all sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionVerdict {
    pub points: Vec<PointDecomposition>,
    /// The common classification when every point agrees.
    pub classification: Option<Classification>,
    pub stable: bool,
    pub evidence: String,
}

fn classify(h_tg: bool, v_tg: bool, v_umb: bool) -> Classification {
    match (h_tg, v_tg, v_umb) {
        (true, true, _) => Classification::LocallyProduct,
        (true, false, true) => Classification::TwistedProductCandidate,
        _ => Classification::None,
    }
}

/// Flags and decomposition criteria at one point.
pub fn decomposition_point(ctx: &PointContext) -> Result<(PointDecomposition, Vec<CriterionResult>), AntiInvError> {
    let o = ops(ctx)?;
    let eps = o.eps;
    let hs = &o.f.sa.horizontal;
    let vs = &o.f.sa.vertical;
    let integ = integrability_check(ctx)?;
    let fol = foliation_checks(ctx)?;
    let find = |rs: &[CriterionResult], id: &str| rs.iter().find(|r| r.id == id).map(|r| r.pass).unwrap_or(false);

    let frame = &ctx.split.vertical;
    let fj: Vec<J> = frame.vectors.iter().map(|v| o.constant(v)).collect();
    let k = fj.len() as f64;
    let mut mean = vec![0.0; ctx.dim()];
    for (e, s) in fj.iter().zip(&frame.signs) {
        for (m, t) in mean.iter_mut().zip(Ops::vals(&o.t(e, e))) {
            *m += s * t / k;
        }
    }
    let mut umb = Acc::default();
    for (a, u) in fj.iter().enumerate() {
        for w in &fj[a..] {
            let guw = o.g(u, w);
            let r: Vec<f64> = mean.iter().map(|h| guw * h).collect();
            umb.extend(&Ops::vals(&o.t(u, w)), &r);
        }
    }
    let umbilical = umb.finish(UMBILICAL_DIRECT, ctx).informational("property verdict");

    let flags = PointDecomposition {
        point_index: ctx.index,
        horizontal_integrable: find(&integ, INTEGRABLE_DIRECT),
        horizontal_totally_geodesic: find(&fol, HTG_DIRECT),
        vertical_totally_geodesic: find(&fol, VTG_DIRECT),
        vertical_totally_umbilical: umbilical.pass,
        classification: Classification::None,
    };
    let class = classify(
        flags.horizontal_totally_geodesic,
        flags.vertical_totally_geodesic,
        flags.vertical_totally_umbilical,
    );
    let flags = PointDecomposition {
        classification: class,
        ..flags
    };
    let product_direct = CriterionResult::holds(
        "both foliations totally geodesic (direct)",
        ctx,
        class == Classification::LocallyProduct,
        vec![
            b2f(flags.horizontal_totally_geodesic),
            b2f(flags.vertical_totally_geodesic),
        ],
        vec![1.0, 1.0],
    );
    let twisted_direct = CriterionResult::holds(
        "horizontal totally geodesic and fibers totally umbilical (direct)",
        ctx,
        flags.horizontal_totally_geodesic && flags.vertical_totally_umbilical,
        vec![
            b2f(flags.horizontal_totally_geodesic),
            b2f(flags.vertical_totally_umbilical),
        ],
        vec![1.0, 1.0],
    );
    let mut out = vec![umbilical];
    if ctx.position == XiPosition::Horizontal {
        let mut acc = Acc::default();
        for x in hs {
            for y in hs {
                let bx = o.b(x);
                let cy = o.c(y);
                let ey = o.eta(y);
                for v in vs {
                    let pv = o.phi(v);
                    let r = o.g(&cy, &o.phi(&o.a(x, v))) + eps * ey * o.g(x, &pv);
                    acc.push(o.gn(&o.sff(y, &bx), &o.push(&pv)), r);
                }
            }
        }
        for v in vs {
            for x in hs {
                let s = o.sff(v, &o.phi(x));
                for w in vs {
                    acc.push(o.gn(&s, &o.push(&o.phi(w))), 0.0);
                }
            }
        }
        let crit = ctx.gate(acc.finish(PRODUCT_CRITERION, ctx), ALL);
        out.extend(with_agreements(ctx, product_direct, vec![crit]));
    } else {
        out.push(product_direct.informational("locally product criterion stated for xi horizontal"));
    }

    if ctx.horizontal_is_phi_ker_plus_xi() {
        let mut tw = Acc::default();
        let mut degenerate = Vec::new();
        for (i, v) in vs.iter().enumerate() {
            let vv = o.g(v, v);
            if vv.abs() < ctx.tol {
                degenerate.push(ctx.vertical_names.get(i).cloned().unwrap_or_else(|| format!("V{i}")));
                continue;
            }
            let tvv = o.t(v, v);
            let pv = o.phi(v);
            for x in hs {
                let l = Ops::vals(&o.t(v, &o.phi(x)));
                let r = Ops::vals(&Ops::scale(&pv, -o.g(x, &tvv) / vv));
                tw.extend(&l, &r);
            }
        }
        let mut ta = Acc::default();
        for x in hs {
            for y in hs {
                let l = Ops::vals(&o.a(x, &o.phi(y)));
                let r = Ops::vals(&Ops::scale(x, o.eta(y)));
                ta.extend(&l, &r);
            }
        }
        let mut t_res = ctx.gate(tw.finish(TWISTED_T, ctx), ALL);
        if !degenerate.is_empty() {
            t_res = t_res.with_note(format!("|V|^2 below tolerance for {}; skipped", degenerate.join(", ")));
        }
        let a_res = ctx.gate(ta.finish(TWISTED_A, ctx), ALL);
        out.extend(with_agreements(ctx, twisted_direct, vec![t_res, a_res]));
    } else {
        out.push(twisted_direct.informational("twisted-product criteria need (ker)^perp = phi(ker) + span{xi}"));
        for id in [TWISTED_T, TWISTED_A] {
            out.push(CriterionResult::skipped(id, ctx, "(ker)^perp != phi(ker) + span{xi}"));
        }
    }
    Ok((flags, out))
}

/// Combine per-point flags; always pointwise numerical evidence, never a
/// proof of a global decomposition.
pub fn decomposition_classify(points: Vec<PointDecomposition>) -> DecompositionVerdict {
    let first = points.first().map(|p| p.classification);
    let stable = points.iter().all(|p| Some(p.classification) == first);
    let evidence = format!("pointwise numerical evidence at {} sample points", points.len());
    DecompositionVerdict {
        classification: if stable { first } else { None },
        stable,
        points,
        evidence,
    }
}

/// Regression checks against the model's expected facts.
pub fn expected_fact_checks(ctx: &PointContext, model: &Model) -> Vec<CriterionResult> {
    let e = &model.expected;
    let mut out = Vec::new();
    let eq =
        |id: &str, got: bool, want: bool| CriterionResult::holds(id, ctx, got == want, vec![b2f(got)], vec![b2f(want)]);
    if let Some(want) = e.is_submersion {
        out.push(eq(
            "expected: is a semi-Riemannian submersion",
            ctx.split.is_submersion,
            want,
        ));
    }
    if let Some(want) = e.xi_position {
        out.push(
            CriterionResult::holds("expected: xi position", ctx, ctx.position == want, vec![], vec![])
                .with_note(format!("got {}, expected {want}", ctx.position)),
        );
    }
    if let Some(want) = e.fiber_signature {
        let s = ctx.split.fiber_signature;
        let f = |s: linalg::Signature| vec![s.n_pos as f64, s.n_neg as f64, s.n_zero as f64];
        out.push(CriterionResult::compare(
            "expected: fiber signature",
            ctx,
            f(s),
            f(want),
        ));
    }
    if let Some(want) = e.target_index {
        out.push(CriterionResult::compare(
            "expected: target index",
            ctx,
            vec![ctx.target_index() as f64],
            vec![want as f64],
        ));
    }
    if let Some(want) = e.anti_invariant {
        out.push(eq("expected: anti-invariant", ctx.hypotheses.anti_invariant, want));
    }
    if let Some(want) = e.phi_ker_is_horizontal {
        out.push(eq("expected: phi(ker) = (ker)^perp", ctx.phi_ker_is_horizontal(), want));
    }
    if let Some(want) = e.horizontal_is_phi_ker_plus_xi {
        out.push(eq(
            "expected: (ker)^perp = phi(ker) + span{xi}",
            ctx.horizontal_is_phi_ker_plus_xi(),
            want,
        ));
    }
    let value = |name: &str| model.field(name).and_then(|f| f.eval(&ctx.point).ok());
    if let Some(names) = &e.mu {
        let id = format!("expected: mu = span{{{}}}", names.join(","));
        let fields: Option<Vec<DVector<f64>>> = names.iter().map(|n| value(n)).collect();
        out.push(match fields {
            None => CriterionResult::holds(&id, ctx, false, vec![], vec![]).with_note("unknown field name"),
            Some(fs) => {
                let images = ctx.phi_images();
                let mut gaps = Vec::new();
                for f in &fs {
                    for p in &images {
                        gaps.push(ctx.inner(f, p));
                    }
                    for v in &ctx.split.vertical.vectors {
                        gaps.push(ctx.inner(f, v));
                    }
                }
                let rank = linalg::span_rank(&fs, ctx.dim(), ctx.tol);
                let dim_mu = mu_basis(ctx).len();
                let zeros = vec![0.0; gaps.len()];
                let r = CriterionResult::compare(&id, ctx, gaps, zeros);
                if rank == dim_mu && rank == fs.len() {
                    r.with_note("lhs = g(field, phi V_i) and g(field, V_j)")
                } else {
                    CriterionResult::holds(&id, ctx, false, vec![rank as f64], vec![dim_mu as f64])
                        .with_note("rank of the named fields differs from dim mu")
                }
            }
        });
    }
    for img in &e.phi_images {
        let id = format!("expected: phi({}) = {} {}", img.source, img.coefficient, img.target);
        out.push(match (value(&img.source), value(&img.target)) {
            (Some(s), Some(t)) => {
                let l = &ctx.phi * s;
                let r = t * img.coefficient;
                CriterionResult::compare(&id, ctx, l.as_slice().to_vec(), r.as_slice().to_vec())
            }
            _ => CriterionResult::holds(&id, ctx, false, vec![], vec![]).with_note("unknown field name"),
        });
    }
    out
}

/// Anti-invariance, audit, μ checks and expected facts: everything that
/// needs no differentiation along the distributions.
pub fn pointwise_suite(ctx: &PointContext, model: &Model) -> Vec<CriterionResult> {
    let mut out = vec![check_anti_invariance(ctx)];
    out.extend(xi_position_and_dimension_audit(ctx));
    out.extend(mu_checks(ctx));
    if ctx.position == XiPosition::Vertical {
        // C on the horizontal frame; the B/C identities are in the lemma suite.
        for (i, h) in ctx.split.horizontal.vectors.iter().enumerate() {
            if let Ok(d) = bc_mu_decompose(ctx, h) {
                let r = CriterionResult::compare("phi X = B X + C X with C X in mu", ctx, vec![d.remainder], vec![0.0])
                    .with_note(format!("horizontal frame vector {i}"));
                out.push(ctx.gate(r, ANTI));
            }
        }
    }
    out.extend(expected_fact_checks(ctx, model));
    out
}

/// Worst residual among results with the given id.
pub fn worst<'a>(results: impl IntoIterator<Item = &'a CriterionResult>, id: &str) -> Option<f64> {
    results
        .into_iter()
        .filter(|r| r.id == id)
        .map(|r| r.residual)
        .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn ctx(name: &str, p: &[f64]) -> PointContext {
        let m = catalog::load_example(name).unwrap();
        PointContext::new(&m, 0, p, 1e-9).unwrap()
    }

    const P5: [f64; 5] = [0.3, -0.2, 0.1, 0.5, 0.0];

    #[test]
    fn vertical_example_audit() {
        let c = ctx("ls-r5-r2", &P5);
        assert_eq!(c.position, XiPosition::Vertical);
        assert!(c.hypotheses.sasakian && c.hypotheses.submersion && c.hypotheses.anti_invariant);
        assert!(c.phi_ker_is_horizontal());
        assert_eq!((c.m(), c.n()), (2, 2));
        for r in xi_position_and_dimension_audit(&c) {
            assert!(r.pass, "{r:?}");
        }
        let x = c.split.horizontal.vectors[0].clone();
        let d = bc_mu_decompose(&c, &x).unwrap();
        assert!(d.c.iter().all(|v| v.abs() < 1e-12));
        assert!(d.mu_basis.is_empty());
    }

    #[test]
    fn horizontal_example_mu() {
        let p = [0.3, -0.2, 0.1, 0.5, 0.0, 0.2, -0.4];
        let c = ctx("lps-r7-r5", &p);
        assert_eq!(c.position, XiPosition::Horizontal);
        assert_eq!(mu_basis(&c).len(), 3);
        for r in mu_checks(&c) {
            assert!(r.pass, "{r:?}");
        }
        let xi = c.xi.clone();
        let d = bc_mu_decompose(&c, &xi).unwrap();
        assert!(d.b.iter().chain(&d.c).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn lemmas_hold_on_vertical_example() {
        let c = ctx("ls-r5-r2", &P5);
        for r in lemma_residual_suite(&c).unwrap() {
            assert!(r.pass && r.gating, "{r:?}");
        }
    }

    #[test]
    fn product_control_foliations() {
        let c = ctx("product-control", &[0.2, -0.7, 0.4]);
        let fol = foliation_checks(&c).unwrap();
        for id in [HTG_DIRECT, VTG_DIRECT] {
            assert_eq!(worst(&fol, id), Some(0.0), "{id}");
        }
        let (flags, _) = decomposition_point(&c).unwrap();
        assert_eq!(flags.classification, Classification::LocallyProduct);
    }

    #[test]
    fn identity_map_is_vacuously_anti_invariant() {
        let doc = r#"{
  "name": "id",
  "coords": ["x", "y", "z"],
  "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
  "structure": {"epsilon": -1, "phi": [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]], "xi": ["0", "0", "1"], "eta": ["0", "0", "1"]},
  "map": {"target": {"coords": ["u", "v", "w"], "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]]}, "components": ["x", "y", "z"]}
}"#;
        let m = crate::document::Document::from_json(doc, "id")
            .unwrap()
            .build()
            .unwrap();
        let c = PointContext::new(&m, 0, &[0.1, 0.2, 0.3], 1e-9).unwrap();
        let r = check_anti_invariance(&c);
        assert!(r.pass && r.lhs.is_empty());
        assert_eq!(c.position, XiPosition::Horizontal);
    }

    #[test]
    fn skipped_never_gates() {
        let c = ctx("ls-r5-r2", &P5);
        let r = CriterionResult::skipped("x", &c, "why");
        assert!(r.pass && !r.gating);
        let d = decomposition_classify(vec![]);
        assert!(d.stable && d.classification.is_none());
    }
}
