//! Chen's algebraic lemma and the δ(2)-type inequalities for Riemannian
//! submersions, with closed forms for space-form total spaces.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{extremal_sectional_tensor, scalar_curvatures_from, split_curvature, Extremum, ScalarCurvatures, SplitCurvature};
use crate::oneill::{compute_a, compute_t, delta_n, mean_curvature, PointGeometry};
use crate::space_forms::{
    classify_xi, eta_weight, model_fit_residual, pq_norms_at, structure_residuals, ModelFamily, PQNorms, SpaceFormModel,
    StructureAt, XiPlacement,
};
use crate::submersion::{adapt_frames, build_frames, resolve_plane, FramePair, PlaneSpec, Space, SubmersionSetup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaInstance {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LemmaInstance {
    /// Instance with b solved from (Σaᵢ)² = (k−1)(Σaᵢ² + b).
    pub fn solved(a: Vec<f64>) -> Result<Self> {
        let k = a.len();
        if k <= 2 {
            return Err(Error::InvalidArgument(format!("lemma needs k > 2, got {k}")));
        }
        let s: f64 = a.iter().sum();
        let s2: f64 = a.iter().map(|v| v * v).sum();
        Ok(LemmaInstance {
            b: s * s / (k as f64 - 1.0) - s2,
            a,
        })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn constraint_residual(&self) -> f64 {
        let k = self.k() as f64;
        let s: f64 = self.a.iter().sum();
        let s2: f64 = self.a.iter().map(|v| v * v).sum();
        let scale = 1.0 + s * s + (k - 1.0) * (s2 + self.b.abs());
        (s * s - (k - 1.0) * (s2 + self.b)).abs() / scale
    }

    /// Spread of (a₁ + a₂, a₃, …, a_k).
    pub fn condition_residual(&self) -> f64 {
        let head = self.a[0] + self.a[1];
        let (lo, hi) = self.a[2..]
            .iter()
            .fold((head, head), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        hi - lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaResult {
    /// 2a₁a₂ − b.
    pub gap: f64,
    pub equality: bool,
    pub condition_residual: f64,
    pub constraint_residual: f64,
}

pub fn chen_lemma_gap(inst: &LemmaInstance, lemma_tol: f64) -> Result<LemmaResult> {
    if inst.k() <= 2 {
        return Err(Error::InvalidArgument(format!("lemma needs k > 2, got {}", inst.k())));
    }
    let constraint_residual = inst.constraint_residual();
    if !(constraint_residual < lemma_tol) {
        return Err(Error::ConstraintViolated {
            residual: constraint_residual,
        });
    }
    let condition_residual = inst.condition_residual();
    Ok(LemmaResult {
        gap: 2.0 * inst.a[0] * inst.a[1] - inst.b,
        equality: condition_residual < lemma_tol,
        condition_residual,
        constraint_residual,
    })
}

/// Identifiers of the checked inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "thm31")]
    Vertical,
    #[serde(rename = "thm32")]
    DeltaHat,
    #[serde(rename = "rsf_thm36")]
    RealVertical,
    #[serde(rename = "csf_thm38")]
    ComplexVertical,
    #[serde(rename = "gssf_thm310")]
    SasakianVertical,
    #[serde(rename = "thm41")]
    HorizontalVertical,
    #[serde(rename = "rsf_thm43")]
    RealHorizontalVertical,
    #[serde(rename = "csf_thm45")]
    ComplexHorizontalVertical,
    #[serde(rename = "gssf_thm47")]
    SasakianHorizontalVertical,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::Vertical,
        TheoremId::DeltaHat,
        TheoremId::RealVertical,
        TheoremId::ComplexVertical,
        TheoremId::SasakianVertical,
        TheoremId::HorizontalVertical,
        TheoremId::RealHorizontalVertical,
        TheoremId::ComplexHorizontalVertical,
        TheoremId::SasakianHorizontalVertical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Vertical => "thm31",
            TheoremId::DeltaHat => "thm32",
            TheoremId::RealVertical => "rsf_thm36",
            TheoremId::ComplexVertical => "csf_thm38",
            TheoremId::SasakianVertical => "gssf_thm310",
            TheoremId::HorizontalVertical => "thm41",
            TheoremId::RealHorizontalVertical => "rsf_thm43",
            TheoremId::ComplexHorizontalVertical => "csf_thm45",
            TheoremId::SasakianHorizontalVertical => "gssf_thm47",
        }
    }

    pub fn model_family(self) -> Option<ModelFamily> {
        match self {
            TheoremId::RealVertical | TheoremId::RealHorizontalVertical => Some(ModelFamily::Real),
            TheoremId::ComplexVertical | TheoremId::ComplexHorizontalVertical => Some(ModelFamily::Complex),
            TheoremId::SasakianVertical | TheoremId::SasakianHorizontalVertical => {
                Some(ModelFamily::GeneralizedSasakian)
            }
            _ => None,
        }
    }

    /// Lower-bound form (τ-type quantity ≥ bound) versus upper-bound form.
    pub fn is_lower_bound(self) -> bool {
        !self.uses_horizontal_plane()
    }

    pub fn uses_horizontal_plane(self) -> bool {
        matches!(
            self,
            TheoremId::HorizontalVertical
                | TheoremId::RealHorizontalVertical
                | TheoremId::ComplexHorizontalVertical
                | TheoremId::SasakianHorizontalVertical
        )
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown theorem id `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

fn term(name: &str, value: f64) -> Term {
    Term {
        name: name.to_string(),
        value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameChoice {
    /// Π = span{V₁,V₂}, h₁ ∥ H, (T^H)₁₂¹ = 0.
    Adapted,
    /// Pivoted coordinate frames with Π first.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityCondition {
    pub label: String,
    pub frame: FrameChoice,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub quantity: String,
    pub closed_form: f64,
    pub raw: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem: TheoremId,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub vertical_plane: Option<[Vec<f64>; 2]>,
    pub horizontal_plane: Option<[Vec<f64>; 2]>,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    pub equality: bool,
    pub equality_conditions: Vec<EqualityCondition>,
    pub lhs_terms: Vec<Term>,
    pub rhs_terms: Vec<Term>,
    pub cross_check: Option<CrossCheck>,
    pub model: Option<SpaceFormModel>,
    pub xi: Option<XiPlacement>,
}

impl InequalityReport {
    /// Largest residual among the equality conditions evaluated in the
    /// adapted frame.
    pub fn worst_equality_residual(&self) -> Option<f64> {
        self.equality_conditions
            .iter()
            .filter(|c| c.frame == FrameChoice::Adapted)
            .map(|c| c.residual)
            .fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }
}

/// Geometry and default frames at one point, shared by all checkers.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub point_index: usize,
    pub geom: PointGeometry,
    pub frames: FramePair,
}

impl PointAnalysis {
    pub fn new(setup: &SubmersionSetup, point_index: usize, p: &[f64]) -> Result<Self> {
        let geom = PointGeometry::compute(setup, p)?;
        let frames = build_frames(setup, p, None)?;
        Ok(PointAnalysis {
            point_index,
            geom,
            frames,
        })
    }

    fn plane(&self, setup: &SubmersionSetup, space: Space, spec: &PlaneSpec) -> Result<[DVector<f64>; 2]> {
        let p = resolve_plane(&self.geom.g, &self.geom.jacobian, &self.frames, space, spec, setup.tol.frame_tol)?;
        Ok(p.basis)
    }
}

/// r²(r−2)/(2(r−1)).
pub fn mean_curvature_coefficient(r: usize) -> f64 {
    let r = r as f64;
    r * r * (r - 2.0) / (2.0 * (r - 1.0))
}

struct ModelContext {
    structure: Option<StructureAt>,
    xi: Option<XiPlacement>,
}

fn model_context(
    setup: &SubmersionSetup,
    an: &PointAnalysis,
    id: TheoremId,
    model: Option<&SpaceFormModel>,
) -> Result<Option<(SpaceFormModel, ModelContext)>> {
    let want = id.model_family();
    let model = match (want, model) {
        (None, _) => return Ok(None),
        (Some(_), None) => return Err(Error::MissingField(format!("model (required by {id})"))),
        (Some(f), Some(m)) if m.family() != f => {
            return Err(Error::InvalidArgument(format!(
                "{id} needs a {f:?} model, got `{}`",
                m.name()
            )))
        }
        (Some(_), Some(m)) => *m,
    };
    let p = &an.geom.p;
    let residual = model_fit_residual(&setup.g1, setup.structure.as_ref(), p, &model)?;
    if !(residual < setup.tol.fit_tol) {
        return Err(Error::ModelMisfit {
            residual,
            tol: setup.tol.fit_tol,
        });
    }
    let mut ctx = ModelContext {
        structure: None,
        xi: None,
    };
    if let Some(kind) = model.needs_structure() {
        let st = setup
            .structure
            .as_ref()
            .filter(|s| s.kind == kind)
            .ok_or_else(|| Error::MissingStructure(model.name().into()))?;
        let at = st.at(p)?;
        for (axiom, residual) in structure_residuals(&an.geom.g, &at, kind) {
            if !(residual < setup.tol.struct_tol) {
                return Err(Error::StructureViolation { axiom, residual });
            }
        }
        if let Some(xi) = &at.xi {
            ctx.xi = Some(classify_xi(&an.geom.g, &an.geom.p_h, xi, setup.tol.align_tol)?);
        }
        ctx.structure = Some(at);
    }
    Ok(Some((model, ctx)))
}

fn vecs(p: &[DVector<f64>; 2]) -> [Vec<f64>; 2] {
    [p[0].iter().copied().collect(), p[1].iter().copied().collect()]
}

fn finish(
    setup: &SubmersionSetup,
    id: TheoremId,
    an: &PointAnalysis,
    lhs: f64,
    rhs: f64,
    lhs_terms: Vec<Term>,
    rhs_terms: Vec<Term>,
) -> InequalityReport {
    let gap = if id.is_lower_bound() { lhs - rhs } else { rhs - lhs };
    InequalityReport {
        theorem: id,
        point_index: an.point_index,
        point: an.geom.p.clone(),
        vertical_plane: None,
        horizontal_plane: None,
        lhs,
        rhs,
        gap,
        holds: gap >= -setup.tol.gap_tol,
        equality: gap.abs() <= setup.tol.eq_tol,
        equality_conditions: Vec::new(),
        lhs_terms,
        rhs_terms,
        cross_check: None,
        model: None,
        xi: None,
    }
}

fn cross_check(quantity: &str, closed_form: f64, raw: f64, tol: f64) -> CrossCheck {
    let residual = (closed_form - raw).abs();
    CrossCheck {
        quantity: quantity.to_string(),
        closed_form,
        raw,
        residual,
        pass: residual <= tol,
    }
}

/// Frame-level quantities used by the vertical inequalities.
struct VerticalPieces {
    scalars: ScalarCurvatures,
    k_ker: f64,
    k_m1: f64,
    norm_h2: f64,
    r: usize,
}

fn vertical_pieces(an: &PointAnalysis, frames: &FramePair) -> (VerticalPieces, SplitCurvature) {
    let split = split_curvature(&an.geom, frames);
    let scalars = scalar_curvatures_from(&an.geom, frames, &split);
    let (_, _, h2) = mean_curvature(&an.geom, frames);
    (
        VerticalPieces {
            scalars,
            k_ker: split.vertical_ker.get(0, 1, 1, 0),
            k_m1: split.vertical_m1.get(0, 1, 1, 0),
            norm_h2: h2,
            r: frames.r(),
        },
        split,
    )
}

fn require_fiber(r: usize) -> Result<()> {
    if r <= 2 {
        Err(Error::FiberTooSmall { r })
    } else {
        Ok(())
    }
}

fn pq_for(ctx: &ModelContext, an: &PointAnalysis, frames: &FramePair) -> Option<PQNorms> {
    ctx.structure.as_ref().map(|st| pq_norms_at(&an.geom.g, &st.phi, frames))
}

/// Lower bound for τ^{ker} − K^{ker}(Π) with the vertical plane Π.
pub fn check_vertical(
    setup: &SubmersionSetup,
    an: &PointAnalysis,
    id: TheoremId,
    pi: &PlaneSpec,
    model: Option<&SpaceFormModel>,
) -> Result<InequalityReport> {
    require_fiber(an.frames.r())?;
    let plane = an.plane(setup, Space::Vertical, pi)?;
    let frames = adapt_frames(&an.geom.g, &an.frames, Some(&plane), None, setup.tol.frame_tol)?;
    let (vp, _) = vertical_pieces(an, &frames);
    let coef = mean_curvature_coefficient(vp.r);
    let lhs = vp.scalars.tau_v_ker - vp.k_ker;
    let raw_rhs = vp.scalars.tau_v_m1 - vp.k_m1 - coef * vp.norm_h2;
    let lhs_terms = vec![term("tau_v_ker", vp.scalars.tau_v_ker), term("k_v_ker", -vp.k_ker)];
    let mut rhs_terms = vec![
        term("tau_v_m1", vp.scalars.tau_v_m1),
        term("k_v_m1", -vp.k_m1),
        term("mean_curvature", -coef * vp.norm_h2),
    ];
    let ctx = model_context(setup, an, id, model)?;
    let mut rhs = raw_rhs;
    let mut check = None;
    if let Some((m, ctx)) = &ctx {
        let closed = vertical_closed_form(m, ctx, an, &frames, &vp, coef, &mut rhs_terms)?;
        check = Some(cross_check("rhs", closed, raw_rhs, setup.tol.xcheck_tol));
        rhs = closed;
    }
    let mut rep = finish(setup, id, an, lhs, rhs, lhs_terms, rhs_terms);
    rep.vertical_plane = Some(vecs(&[frames.vertical[0].clone(), frames.vertical[1].clone()]));
    rep.equality_conditions = equality_diagnostics_in(setup, an, &frames)?;
    rep.cross_check = check;
    if let Some((m, ctx)) = ctx {
        rep.model = Some(m);
        rep.xi = ctx.xi;
    }
    Ok(rep)
}

fn vertical_closed_form(
    model: &SpaceFormModel,
    ctx: &ModelContext,
    an: &PointAnalysis,
    frames: &FramePair,
    vp: &VerticalPieces,
    coef: f64,
    terms: &mut Vec<Term>,
) -> Result<f64> {
    let r = vp.r as f64;
    let h_term = -coef * vp.norm_h2;
    let out = match *model {
        SpaceFormModel::Real { c } => {
            let v = 0.5 * (c * (r * r - r - 2.0) - r * r * (r - 2.0) / (r - 1.0) * vp.norm_h2);
            terms.push(term("closed_form.space_form", 0.5 * c * (r * r - r - 2.0)));
            v
        }
        SpaceFormModel::Complex { c } => {
            let pq = pq_for(ctx, an, frames).ok_or_else(|| Error::MissingStructure("complex".into()))?;
            let tau = c / 4.0 * r * (r - 1.0) / 2.0 + 3.0 * c / 8.0 * pq.norm_q2;
            let k = c / 4.0 + 3.0 * c / 4.0 * pq.v1_qv2().powi(2);
            terms.push(term("closed_form.tau_v_m1", tau));
            terms.push(term("closed_form.k_v_m1", -k));
            terms.push(term("norm_q2", pq.norm_q2));
            tau - k + h_term
        }
        _ => {
            let (c1, c2, c3) = model.gssf_constants().expect("almost contact family");
            let pq = pq_for(ctx, an, frames).ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let st = ctx.structure.as_ref().expect("structure");
            let eta = st.eta.as_ref().ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let theta = eta_weight(eta, &frames.vertical[0], &frames.vertical[1]);
            let contact = match ctx.xi {
                Some(XiPlacement::Vertical) => -c3 * ((r - 1.0) - theta),
                _ => 0.0,
            };
            let holo = 1.5 * c2 * (pq.norm_q2 - 2.0 * pq.v1_qv2().powi(2));
            terms.push(term("closed_form.c1", 0.5 * c1 * (r * r - r - 2.0)));
            terms.push(term("closed_form.c2", holo));
            terms.push(term("closed_form.c3", contact));
            terms.push(term("theta", theta));
            h_term + 0.5 * c1 * (r * r - r - 2.0) + contact + holo
        }
    };
    Ok(out)
}

/// δ̂^V(2) against the sup of the ambient vertical sectional curvature.
pub fn check_delta_hat(setup: &SubmersionSetup, an: &PointAnalysis) -> Result<InequalityReport> {
    require_fiber(an.frames.r())?;
    let (vp, split) = vertical_pieces(an, &an.frames);
    let coef = mean_curvature_coefficient(vp.r);
    let sup_ker = extremal_sectional_tensor(&split.vertical_ker, Extremum::Sup)?;
    let sup_m1 = extremal_sectional_tensor(&split.vertical_m1, Extremum::Sup)?;
    let lhs = vp.scalars.tau_v_ker - sup_ker.value;
    let rhs = vp.scalars.tau_v_m1 - sup_m1.value - coef * vp.norm_h2;
    let mut rep = finish(
        setup,
        TheoremId::DeltaHat,
        an,
        lhs,
        rhs,
        vec![term("tau_v_ker", vp.scalars.tau_v_ker), term("sup_k_v_ker", -sup_ker.value)],
        vec![
            term("tau_v_m1", vp.scalars.tau_v_m1),
            term("sup_k_v_m1", -sup_m1.value),
            term("mean_curvature", -coef * vp.norm_h2),
        ],
    );
    let lift = |c: &DVector<f64>| {
        let mut v = DVector::zeros(an.geom.n());
        for (b, ci) in an.frames.vertical.iter().zip(c.iter()) {
            v += b * *ci;
        }
        v
    };
    rep.vertical_plane = Some(vecs(&[lift(&sup_ker.plane[0]), lift(&sup_ker.plane[1])]));
    Ok(rep)
}

/// Upper bound for the combined vertical and horizontal curvature with Π
/// vertical and ℙ horizontal.
pub fn check_horizontal_vertical(
    setup: &SubmersionSetup,
    an: &PointAnalysis,
    id: TheoremId,
    pi: &PlaneSpec,
    pp: &PlaneSpec,
    model: Option<&SpaceFormModel>,
) -> Result<InequalityReport> {
    require_fiber(an.frames.r())?;
    let vplane = an.plane(setup, Space::Vertical, pi)?;
    let hplane = an.plane(setup, Space::Horizontal, pp)?;
    let frames = adapt_frames(&an.geom.g, &an.frames, Some(&vplane), Some(&hplane), setup.tol.frame_tol)?;
    let geom = &an.geom;
    let split = split_curvature(geom, &frames);
    let sc = scalar_curvatures_from(geom, &frames, &split);
    let (r, s) = (frames.r(), frames.s());
    let kv_m1 = split.vertical_m1.get(0, 1, 1, 0);
    let kv_ker = split.vertical_ker.get(0, 1, 1, 0);
    let kh_m1 = split.horizontal_m1.get(0, 1, 1, 0);
    let kh_perp = split.horizontal_perp.get(0, 1, 1, 0);
    let (_, _, h2) = mean_curvature(geom, &frames);
    let coef = mean_curvature_coefficient(r);
    let (a_v, a_h) = compute_a(geom, &frames);
    let (_, t_v) = compute_t(geom, &frames);
    let sq = |b: &Vec<Vec<Vec<f64>>>| b.iter().flatten().flatten().map(|v| v * v).sum::<f64>();
    let norm_ah2 = sq(&a_h);
    let norm_tv2 = sq(&t_v);
    // a_v[α][β][i] = g(A_{h_α}h_β, V_i)
    let mut a_first = 0.0;
    for j in 2..s {
        for i in 0..r {
            a_first += a_v[0][j][i].powi(2);
        }
    }
    let mut a_rest = 0.0;
    for a in 1..s {
        for b in 1..s {
            for i in 0..r {
                a_rest += a_v[a][b][i].powi(2);
            }
        }
    }
    let dn = delta_n(geom, &frames);

    let raw_lhs = sc.tau_v_m1 - kv_m1 + sc.tau_h_m1 - kh_m1 + sc.mixed_sum;
    let rhs_terms = vec![
        term("tau_h_perp", sc.tau_h_perp),
        term("k_h_perp", -kh_perp),
        term("tau_v_ker", sc.tau_v_ker),
        term("k_v_ker", -kv_ker),
        term("mean_curvature", coef * h2),
        term("a_h", -0.5 * norm_ah2),
        term("a_v_first_row", 3.0 * a_first),
        term("a_v_rest", 1.5 * a_rest),
        term("delta_n", -dn),
        term("t_v", 0.5 * norm_tv2),
    ];
    let rhs: f64 = rhs_terms.iter().map(|t| t.value).sum();
    let mut lhs_terms = vec![
        term("tau_v_m1", sc.tau_v_m1),
        term("k_v_m1", -kv_m1),
        term("tau_h_m1", sc.tau_h_m1),
        term("k_h_m1", -kh_m1),
        term("mixed_sum", sc.mixed_sum),
    ];
    let ctx = model_context(setup, an, id, model)?;
    let mut lhs = raw_lhs;
    let mut check = None;
    if let Some((m, ctx)) = &ctx {
        let closed = horizontal_vertical_closed_form(m, ctx, an, &frames, &mut lhs_terms)?;
        check = Some(cross_check("lhs", closed, raw_lhs, setup.tol.xcheck_tol));
        lhs = closed;
    }
    let mut rep = finish(setup, id, an, lhs, rhs, lhs_terms, rhs_terms);
    rep.vertical_plane = Some(vecs(&[frames.vertical[0].clone(), frames.vertical[1].clone()]));
    rep.horizontal_plane = Some(vecs(&[frames.horizontal[0].clone(), frames.horizontal[1].clone()]));
    rep.cross_check = check;
    if let Some((m, ctx)) = ctx {
        rep.model = Some(m);
        rep.xi = ctx.xi;
    }
    Ok(rep)
}

fn horizontal_vertical_closed_form(
    model: &SpaceFormModel,
    ctx: &ModelContext,
    an: &PointAnalysis,
    frames: &FramePair,
    terms: &mut Vec<Term>,
) -> Result<f64> {
    let (r, s) = (frames.r() as f64, frames.s() as f64);
    let dims = r * r + s * s + 2.0 * s * r - s - r - 4.0;
    let holo_part = |pq: &PQNorms| {
        pq.norm_q2 + pq.norm_p2 + 2.0 * pq.norm_pv2 - 2.0 * pq.v1_qv2().powi(2) - 2.0 * pq.h1_ph2().powi(2)
    };
    Ok(match *model {
        SpaceFormModel::Real { c } => c / 2.0 * dims,
        SpaceFormModel::Complex { c } => {
            let pq = pq_for(ctx, an, frames).ok_or_else(|| Error::MissingStructure("complex".into()))?;
            terms.push(term("norm_q2", pq.norm_q2));
            terms.push(term("norm_p2", pq.norm_p2));
            terms.push(term("norm_pv2", pq.norm_pv2));
            c / 8.0 * dims + 3.0 * c / 8.0 * holo_part(&pq)
        }
        _ => {
            let (c1, c2, c3) = model.gssf_constants().expect("almost contact family");
            let pq = pq_for(ctx, an, frames).ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let st = ctx.structure.as_ref().expect("structure");
            let eta = st.eta.as_ref().ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let contact = match ctx.xi {
                Some(XiPlacement::Vertical) => {
                    let theta = eta_weight(eta, &frames.vertical[0], &frames.vertical[1]);
                    terms.push(term("theta", theta));
                    -c3 * (r + s - 1.0 - theta)
                }
                Some(XiPlacement::Horizontal) => {
                    let gamma = eta_weight(eta, &frames.horizontal[0], &frames.horizontal[1]);
                    terms.push(term("gamma", gamma));
                    -c3 * (s + r - 1.0 - gamma)
                }
                None => 0.0,
            };
            terms.push(term("norm_q2", pq.norm_q2));
            terms.push(term("norm_p2", pq.norm_p2));
            terms.push(term("norm_pv2", pq.norm_pv2));
            c1 / 2.0 * dims + contact + 1.5 * c2 * holo_part(&pq)
        }
    })
}

/// Equality conditions for the vertical inequality at Π, in the adapted
/// frame and in the default frame.
pub fn equality_diagnostics(setup: &SubmersionSetup, an: &PointAnalysis, pi: &PlaneSpec) -> Result<Vec<EqualityCondition>> {
    require_fiber(an.frames.r())?;
    let plane = an.plane(setup, Space::Vertical, pi)?;
    let frames = adapt_frames(&an.geom.g, &an.frames, Some(&plane), None, setup.tol.frame_tol)?;
    equality_diagnostics_in(setup, an, &frames)
}

const LABEL_OFF_DIAGONAL: &str = "(T^H)_1j^l = (T^H)_2j^l = 0, j > 2";
const LABEL_TRACE: &str = "(T^H)_11^l + (T^H)_22^l = 0, l >= 2";
const LABEL_CHAIN: &str = "(T^H)_11^1 + (T^H)_22^1 = (T^H)_33^1 = ... = (T^H)_rr^1";

/// Residuals of the three condition families with `ell` as the
/// distinguished horizontal direction.
fn condition_residuals(t_h: &[Vec<Vec<f64>>], ell: usize) -> [f64; 3] {
    let r = t_h.len();
    let s = t_h[0][0].len();
    let mut off: f64 = 0.0;
    for i in 0..2 {
        for j in 2..r {
            for l in 0..s {
                off = off.max(t_h[i][j][l].abs());
            }
        }
    }
    let mut trace: f64 = 0.0;
    for l in (0..s).filter(|l| *l != ell) {
        trace = trace.max((t_h[0][0][l] + t_h[1][1][l]).abs());
    }
    let head = t_h[0][0][ell] + t_h[1][1][ell];
    let (lo, hi) = (2..r).fold((head, head), |(lo, hi), j| (lo.min(t_h[j][j][ell]), hi.max(t_h[j][j][ell])));
    [off, trace, hi - lo]
}

/// Rotate V₁, V₂ within Π so that (T^H)₁₂ along `h` vanishes.
fn diagonalize_pair(an: &PointAnalysis, frames: &FramePair, h: &DVector<f64>) -> FramePair {
    let f = &an.geom.fields;
    let v = &frames.vertical;
    let s = |a: usize, b: usize| an.geom.inner(&f.t_of(&v[a], &v[b]), h);
    let m = DMatrix::from_row_slice(2, 2, &[s(0, 0), s(0, 1), s(1, 0), s(1, 1)]);
    let m = (&m + m.transpose()) * 0.5;
    if m[(0, 1)].abs() < 1e-15 {
        return frames.clone();
    }
    let theta = 0.5 * (2.0 * m[(0, 1)]).atan2(m[(0, 0)] - m[(1, 1)]);
    let (c, sn) = (theta.cos(), theta.sin());
    let mut q = DMatrix::identity(v.len(), v.len());
    q[(0, 0)] = c;
    q[(1, 0)] = sn;
    q[(0, 1)] = -sn;
    q[(1, 1)] = c;
    frames.rotate_vertical(&q)
}

fn equality_diagnostics_in(setup: &SubmersionSetup, an: &PointAnalysis, frames: &FramePair) -> Result<Vec<EqualityCondition>> {
    let eq_tol = setup.tol.eq_tol;
    let (_, h, h2) = mean_curvature(&an.geom, frames);
    let entries = |frame: FrameChoice, res: [f64; 3]| {
        [LABEL_OFF_DIAGONAL, LABEL_TRACE, LABEL_CHAIN]
            .iter()
            .zip(res)
            .map(|(label, residual)| EqualityCondition {
                label: label.to_string(),
                frame,
                residual,
                pass: residual < eq_tol,
            })
            .collect::<Vec<_>>()
    };
    let adapted_res = if h2.sqrt() > setup.tol.align_tol {
        let hf = adapt_frames(&an.geom.g, frames, None, Some(std::slice::from_ref(&h)), setup.tol.frame_tol)?;
        let hf = diagonalize_pair(an, &hf, &hf.horizontal[0]);
        let (t_h, _) = compute_t(&an.geom, &hf);
        condition_residuals(&t_h, 0)
    } else {
        // with H = 0 any horizontal direction may be distinguished
        let mut best: Option<[f64; 3]> = None;
        for ell in 0..frames.s() {
            let hf = diagonalize_pair(an, frames, &frames.horizontal[ell]);
            let (t_h, _) = compute_t(&an.geom, &hf);
            let res = condition_residuals(&t_h, ell);
            let worst = res.iter().cloned().fold(0.0, f64::max);
            if best.as_ref().is_none_or(|b| worst < b.iter().cloned().fold(0.0, f64::max)) {
                best = Some(res);
            }
        }
        best.expect("horizontal space is nonempty")
    };
    let (t_h, _) = compute_t(&an.geom, frames);
    let mut out = entries(FrameChoice::Adapted, adapted_res);
    out.extend(entries(FrameChoice::Default, condition_residuals(&t_h, 0)));
    Ok(out)
}

/// Dispatch a theorem check.
pub fn check_theorem(
    setup: &SubmersionSetup,
    an: &PointAnalysis,
    id: TheoremId,
    pi: &PlaneSpec,
    pp: &PlaneSpec,
    model: Option<&SpaceFormModel>,
) -> Result<InequalityReport> {
    match id {
        TheoremId::DeltaHat => check_delta_hat(setup, an),
        id if id.uses_horizontal_plane() => check_horizontal_vertical(setup, an, id, pi, pp, model),
        id => check_vertical(setup, an, id, pi, model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_equality_case() {
        let inst = LemmaInstance { a: vec![1.0, 1.0, 2.0], b: 2.0 };
        let res = chen_lemma_gap(&inst, 1e-9).unwrap();
        assert_eq!(res.gap, 0.0);
        assert!(res.equality);
    }

    #[test]
    fn lemma_strict_case() {
        let inst = LemmaInstance {
            a: vec![1.0; 4],
            b: 4.0 / 3.0,
        };
        let res = chen_lemma_gap(&inst, 1e-9).unwrap();
        assert!((res.gap - 2.0 / 3.0).abs() < 1e-15);
        assert!(!res.equality);
    }

    #[test]
    fn lemma_zero_and_errors() {
        let res = chen_lemma_gap(&LemmaInstance { a: vec![0.0; 3], b: 0.0 }, 1e-9).unwrap();
        assert_eq!(res.gap, 0.0);
        assert!(res.equality);
        assert!(matches!(
            chen_lemma_gap(&LemmaInstance { a: vec![1.0, 2.0, 3.0], b: 0.0 }, 1e-9),
            Err(Error::ConstraintViolated { .. })
        ));
        assert!(LemmaInstance::solved(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn theorem_ids_round_trip() {
        for id in TheoremId::ALL {
            assert_eq!(id.as_str().parse::<TheoremId>().unwrap(), id);
            let js = serde_json::to_string(&id).unwrap();
            assert_eq!(js, format!("\"{}\"", id.as_str()));
        }
        assert!("thm99".parse::<TheoremId>().is_err());
    }

    #[test]
    fn coefficient() {
        assert_eq!(mean_curvature_coefficient(3), 9.0 / 4.0);
    }
}
