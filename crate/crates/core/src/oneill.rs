//! O'Neill tensors T and A, their covariant derivatives, mean curvature of
//! the fibers and δ(N).
//!
//! Both tensors are computed from the g-orthogonal projector field P_V onto
//! ker F₊. Since T and A are tensorial, extending the arguments by constant
//! coordinate fields gives, for X = vE (T) or X = hE (A),
//!
//! ```text
//! S_X = P_H (D_X P_V + Γ_X P_V) + P_V (−D_X P_V + Γ_X P_H)
//! ```
//!
//! where D_X is the directional derivative and Γ_X Y = Γ(X, Y).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{riemann_from_jet, spd_inverse, step1, step2, ChristoffelTable, CurvatureTensor, DerivativeMode, MetricJet};
use crate::submersion::{horizontal_projector, inner, numerical_rank, pushforward, FramePair, SubmersionSetup};

fn to_stencil_error(e: Error) -> Error {
    match e {
        Error::DomainViolation(m) => Error::StencilOutsideDomain(m),
        other => other,
    }
}

/// Metric data, splitting and the derivative of P_V at one point.
#[derive(Debug, Clone)]
pub struct LocalSplitting {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub gamma: ChristoffelTable,
    pub jacobian: DMatrix<f64>,
    pub p_h: DMatrix<f64>,
    pub p_v: DMatrix<f64>,
    /// `dp_v[k]` = ∂_k P_V.
    pub dp_v: Vec<DMatrix<f64>>,
}

fn projector_at(setup: &SubmersionSetup, q: &[f64]) -> Result<DMatrix<f64>> {
    setup.domain().check_stencil(q)?;
    let g = setup.g1.eval(q).map_err(to_stencil_error)?;
    let j = setup.map.jacobian(q).map_err(to_stencil_error)?;
    let g_inv = spd_inverse(&g)?;
    horizontal_projector(&g_inv, &j)
}

fn local_splitting_from(
    setup: &SubmersionSetup,
    q: &[f64],
    jet: &MetricJet,
    j: DMatrix<f64>,
) -> Result<LocalSplitting> {
    let n = setup.n();
    let g_inv = spd_inverse(&jet.g)?;
    let gamma = ChristoffelTable::from_jet(jet, &g_inv);
    let p_h = horizontal_projector(&g_inv, &j)?;
    let p_v = DMatrix::identity(n, n) - &p_h;
    let dp_v = match setup.mode() {
        DerivativeMode::Analytic => {
            let dj = setup.map.jacobian_derivatives(q)?;
            let gjt = &g_inv * j.transpose();
            let m_inv = spd_inverse(&(&j * &gjt))?;
            let right = &m_inv * &j;
            (0..n)
                .map(|k| {
                    let dg_inv = -(&g_inv * &jet.dg[k] * &g_inv);
                    let dm = &dj[k] * &gjt + &j * &dg_inv * j.transpose() + &gjt.transpose() * dj[k].transpose();
                    let dm_inv = -(&m_inv * dm * &m_inv);
                    let dph = &dg_inv * j.transpose() * &right
                        + &g_inv * dj[k].transpose() * &right
                        + &gjt * dm_inv * &j
                        + &gjt * &m_inv * &dj[k];
                    -dph
                })
                .collect()
        }
        DerivativeMode::CentralDifference => {
            let mut out = Vec::with_capacity(n);
            let mut x = q.to_vec();
            for k in 0..n {
                let h = step1(q[k]);
                x[k] = q[k] + h;
                let pp = projector_at(setup, &x)?;
                x[k] = q[k] - h;
                let pm = projector_at(setup, &x)?;
                x[k] = q[k];
                out.push(-(pp - pm) / (2.0 * h));
            }
            out
        }
    };
    Ok(LocalSplitting {
        g: jet.g.clone(),
        g_inv,
        gamma,
        jacobian: j,
        p_h,
        p_v,
        dp_v,
    })
}

/// Splitting data at a stencil point.
fn local_splitting(setup: &SubmersionSetup, q: &[f64]) -> Result<LocalSplitting> {
    setup.domain().check_stencil(q)?;
    let jet = setup.g1.jet(q, 1).map_err(to_stencil_error)?;
    let j = setup.map.jacobian(q).map_err(to_stencil_error)?;
    let rank = numerical_rank(&j, setup.tol.rank_tol);
    if rank < setup.m() {
        return Err(Error::RankDeficient {
            rank,
            expected: setup.m(),
        });
    }
    local_splitting_from(setup, q, &jet, j)
}

impl LocalSplitting {
    /// The operator S_X described in the module docs.
    fn operator(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = x.len();
        let mut d = DMatrix::zeros(n, n);
        for (k, dk) in self.dp_v.iter().enumerate() {
            if x[k] != 0.0 {
                d += dk * x[k];
            }
        }
        let gx = self.gamma.along(x);
        &self.p_h * (&d + &gx * &self.p_v) + &self.p_v * (-&d + &gx * &self.p_h)
    }

    /// Coordinate matrices of T and A: column j of `t[i]` is T(∂_i, ∂_j).
    fn tensors(&self) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let n = self.g.nrows();
        let mut t = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        for i in 0..n {
            t.push(self.operator(&self.p_v.column(i).into_owned()));
            a.push(self.operator(&self.p_h.column(i).into_owned()));
        }
        (t, a)
    }
}

/// T, A and their covariant derivatives in coordinates at a point.
#[derive(Debug, Clone)]
pub struct ONeillFields {
    pub t: Vec<DMatrix<f64>>,
    pub a: Vec<DMatrix<f64>>,
    /// Column j of `dt[l][i]` is (∇_{∂_l} T)(∂_i, ∂_j).
    pub dt: Vec<Vec<DMatrix<f64>>>,
    pub da: Vec<Vec<DMatrix<f64>>>,
}

fn apply(mats: &[DMatrix<f64>], e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(f.len());
    for (i, m) in mats.iter().enumerate() {
        if e[i] != 0.0 {
            out += m * f * e[i];
        }
    }
    out
}

fn apply3(mats: &[Vec<DMatrix<f64>>], x: &DVector<f64>, e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(f.len());
    for (l, row) in mats.iter().enumerate() {
        if x[l] != 0.0 {
            out += apply(row, e, f) * x[l];
        }
    }
    out
}

impl ONeillFields {
    pub fn t_of(&self, e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        apply(&self.t, e, f)
    }

    pub fn a_of(&self, e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        apply(&self.a, e, f)
    }

    /// (∇_X T)(E, F).
    pub fn nabla_t(&self, x: &DVector<f64>, e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        apply3(&self.dt, x, e, f)
    }

    /// (∇_X A)(E, F).
    pub fn nabla_a(&self, x: &DVector<f64>, e: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        apply3(&self.da, x, e, f)
    }
}

/// Everything needed at one point: metric, curvature, splitting and the
/// O'Neill fields.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub p: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub gamma: ChristoffelTable,
    pub riemann: CurvatureTensor,
    pub jacobian: DMatrix<f64>,
    pub p_h: DMatrix<f64>,
    pub p_v: DMatrix<f64>,
    pub fields: ONeillFields,
    /// Largest change of P_H across the derivative stencil.
    pub projector_jump: f64,
}

impl PointGeometry {
    pub fn compute(setup: &SubmersionSetup, p: &[f64]) -> Result<Self> {
        let n = setup.n();
        if p.len() != n {
            return Err(Error::Shape(format!("point has {} coordinates, expected {n}", p.len())));
        }
        setup.domain().check(p)?;
        let jet = setup.g1.jet(p, 2)?;
        let j = pushforward(setup, p)?;
        let center = local_splitting_from(setup, p, &jet, j)?;
        let riemann = riemann_from_jet(&jet, &center.g_inv);
        let (t, a) = center.tensors();

        // covariant derivatives by central differences of the tensor fields
        let mut dt = Vec::with_capacity(n);
        let mut da = Vec::with_capacity(n);
        let mut jump: f64 = 0.0;
        let mut q = p.to_vec();
        for l in 0..n {
            let h = match setup.mode() {
                DerivativeMode::Analytic => step1(p[l]),
                DerivativeMode::CentralDifference => step2(p[l]),
            };
            q[l] = p[l] + h;
            let plus = local_splitting(setup, &q)?;
            q[l] = p[l] - h;
            let minus = local_splitting(setup, &q)?;
            q[l] = p[l];
            for side in [&plus, &minus] {
                jump = jump.max((&side.p_h - &center.p_h).amax());
            }
            if jump > setup.tol.frame_jump {
                return Err(Error::FrameDiscontinuity { jump });
            }
            let (tp, ap) = plus.tensors();
            let (tm, am) = minus.tensors();
            let gl = center.gamma.along(&unit(n, l));
            let cov = |fp: &[DMatrix<f64>], fm: &[DMatrix<f64>], f0: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
                (0..n)
                    .map(|i| {
                        let mut m = (&fp[i] - &fm[i]) / (2.0 * h);
                        m += &gl * &f0[i];
                        m -= &f0[i] * &gl;
                        for (mm, fmm) in f0.iter().enumerate() {
                            let c = center.gamma.gamma(mm, l, i);
                            if c != 0.0 {
                                m -= fmm * c;
                            }
                        }
                        m
                    })
                    .collect()
            };
            dt.push(cov(&tp, &tm, &t));
            da.push(cov(&ap, &am, &a));
        }
        Ok(PointGeometry {
            p: p.to_vec(),
            g: center.g,
            g_inv: center.g_inv,
            gamma: center.gamma,
            riemann,
            jacobian: center.jacobian,
            p_h: center.p_h,
            p_v: center.p_v,
            fields: ONeillFields { t, a, dt, da },
            projector_jump: jump,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        inner(&self.g, x, y)
    }
}

fn unit(n: usize, k: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[k] = 1.0;
    e
}

type Block = Vec<Vec<Vec<f64>>>;

fn block(a: usize, b: usize, c: usize, f: impl Fn(usize, usize, usize) -> f64) -> Block {
    (0..a)
        .map(|i| (0..b).map(|j| (0..c).map(|k| f(i, j, k)).collect()).collect())
        .collect()
}

fn sum_sq(b: &Block) -> f64 {
    b.iter().flatten().flatten().map(|v| v * v).sum()
}

/// Frame components of the O'Neill tensors and derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ONeillData {
    pub r: usize,
    pub s: usize,
    /// `t_h[i][j][l]` = g(T_{Vᵢ}Vⱼ, h_l).
    pub t_h: Block,
    /// `t_v[j][l][i]` = g(T_{Vⱼ}h_l, Vᵢ).
    pub t_v: Block,
    /// `a_v[α][β][i]` = g(A_{h_α}h_β, Vᵢ).
    pub a_v: Block,
    /// `a_h[α][j][l]` = g(A_{h_α}Vⱼ, h_l).
    pub a_h: Block,
    /// N = Σ T(Vᵢ,Vᵢ) in coordinates.
    pub n_vec: Vec<f64>,
    /// Horizontal frame components of N.
    pub n_frame: Vec<f64>,
    pub h_vec: Vec<f64>,
    pub h_frame: Vec<f64>,
    pub norm_h2: f64,
    pub norm_th2: f64,
    pub norm_tv2: f64,
    pub norm_av2: f64,
    pub norm_ah2: f64,
    pub delta_n: f64,
}

pub fn compute_t(geom: &PointGeometry, frames: &FramePair) -> (Block, Block) {
    let (v, h) = (&frames.vertical, &frames.horizontal);
    let f = &geom.fields;
    let th = block(v.len(), v.len(), h.len(), |i, j, l| geom.inner(&f.t_of(&v[i], &v[j]), &h[l]));
    let tv = block(v.len(), h.len(), v.len(), |j, l, i| geom.inner(&f.t_of(&v[j], &h[l]), &v[i]));
    (th, tv)
}

pub fn compute_a(geom: &PointGeometry, frames: &FramePair) -> (Block, Block) {
    let (v, h) = (&frames.vertical, &frames.horizontal);
    let f = &geom.fields;
    let av = block(h.len(), h.len(), v.len(), |a, b, i| geom.inner(&f.a_of(&h[a], &h[b]), &v[i]));
    let ah = block(h.len(), v.len(), h.len(), |a, j, l| geom.inner(&f.a_of(&h[a], &v[j]), &h[l]));
    (av, ah)
}

/// (N, H, ‖H‖²) with N = Σ T(Vᵢ,Vᵢ), H = N/r.
pub fn mean_curvature(geom: &PointGeometry, frames: &FramePair) -> (DVector<f64>, DVector<f64>, f64) {
    let n = geom.n();
    let mut nv = DVector::zeros(n);
    for v in &frames.vertical {
        nv += geom.fields.t_of(v, v);
    }
    let r = frames.vertical.len() as f64;
    let h = &nv / r;
    let h2 = geom.inner(&h, &h);
    (nv, h, h2)
}

/// δ(N) = Σⱼ Σᵢ g((∇_{hᵢ}T)(Vⱼ,Vⱼ), hᵢ).
pub fn delta_n(geom: &PointGeometry, frames: &FramePair) -> f64 {
    let mut s = 0.0;
    for v in &frames.vertical {
        for h in &frames.horizontal {
            s += geom.inner(&geom.fields.nabla_t(h, v, v), h);
        }
    }
    s
}

pub fn oneill_data(geom: &PointGeometry, frames: &FramePair) -> ONeillData {
    let (t_h, t_v) = compute_t(geom, frames);
    let (a_v, a_h) = compute_a(geom, frames);
    let (nv, hv, h2) = mean_curvature(geom, frames);
    let n_frame = frames.horizontal.iter().map(|h| geom.inner(&nv, h)).collect();
    let h_frame = frames.horizontal.iter().map(|h| geom.inner(&hv, h)).collect();
    ONeillData {
        r: frames.r(),
        s: frames.s(),
        norm_th2: sum_sq(&t_h),
        norm_tv2: sum_sq(&t_v),
        norm_av2: sum_sq(&a_v),
        norm_ah2: sum_sq(&a_h),
        t_h,
        t_v,
        a_v,
        a_h,
        n_vec: nv.iter().copied().collect(),
        n_frame,
        h_vec: hv.iter().copied().collect(),
        h_frame,
        norm_h2: h2,
        delta_n: delta_n(geom, frames),
    }
}

/// Residuals of the algebraic identities of T and A on frame vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ONeillResiduals {
    pub t_symmetry: f64,
    pub a_alternation: f64,
    pub t_skew: f64,
    pub a_skew: f64,
}

impl ONeillResiduals {
    pub fn max(&self) -> f64 {
        self.t_symmetry.max(self.a_alternation).max(self.t_skew).max(self.a_skew)
    }
}

pub fn oneill_residuals(geom: &PointGeometry, frames: &FramePair) -> ONeillResiduals {
    let f = &geom.fields;
    let v = &frames.vertical;
    let h = &frames.horizontal;
    let all: Vec<&DVector<f64>> = v.iter().chain(h.iter()).collect();
    let mut out = ONeillResiduals {
        t_symmetry: 0.0,
        a_alternation: 0.0,
        t_skew: 0.0,
        a_skew: 0.0,
    };
    for x in v {
        for y in v {
            out.t_symmetry = out.t_symmetry.max((f.t_of(x, y) - f.t_of(y, x)).amax());
        }
    }
    for x in h {
        for y in h {
            out.a_alternation = out.a_alternation.max((f.a_of(x, y) + f.a_of(y, x)).amax());
        }
    }
    for e in &all {
        for a in &all {
            for b in &all {
                let ts = geom.inner(&f.t_of(e, a), b) + geom.inner(a, &f.t_of(e, b));
                let as_ = geom.inner(&f.a_of(e, a), b) + geom.inner(a, &f.a_of(e, b));
                out.t_skew = out.t_skew.max(ts.abs());
                out.a_skew = out.a_skew.max(as_.abs());
            }
        }
    }
    out
}
