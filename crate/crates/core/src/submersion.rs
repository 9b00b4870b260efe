//! The smooth map F, its pushforward, the vertical/horizontal splitting and
//! orthonormal frames adapted to it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::metric::{spd_inverse, step1, step2, DerivativeMode, Domain, MetricField};
use crate::space_forms::StructureTensors;
use crate::tolerances::Tolerances;

pub type VectorFn = Arc<dyn Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync>;

#[derive(Clone)]
enum MapSource {
    Expr {
        comps: Vec<Expression>,
        /// `d1[a][k]` = ∂_k F^a
        d1: Option<Vec<Vec<Expression>>>,
        /// `d2[a][k * n + l]` = ∂_k ∂_l F^a
        d2: Option<Vec<Vec<Expression>>>,
    },
    Func(VectorFn),
}

/// A smooth map from an n-dimensional chart to an m-dimensional one.
#[derive(Clone)]
pub struct SmoothMap {
    n: usize,
    m: usize,
    source: MapSource,
    mode: DerivativeMode,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl SmoothMap {
    pub fn from_expressions(n: usize, comps: Vec<Expression>, mode: DerivativeMode) -> Result<Self> {
        let m = comps.len();
        if m == 0 || m > n {
            return Err(Error::Shape(format!("map has {m} components on a chart of dimension {n}")));
        }
        let (d1, d2) = if mode == DerivativeMode::Analytic {
            let d1: Vec<Vec<Expression>> = comps
                .iter()
                .map(|c| (0..n).map(|k| c.derivative(k)).collect())
                .collect();
            let d2 = d1
                .iter()
                .map(|row| {
                    (0..n * n)
                        .map(|kl| row[kl / n].derivative(kl % n))
                        .collect()
                })
                .collect();
            (Some(d1), Some(d2))
        } else {
            (None, None)
        };
        Ok(SmoothMap {
            n,
            m,
            source: MapSource::Expr { comps, d1, d2 },
            mode,
        })
    }

    pub fn from_fn(n: usize, m: usize, f: VectorFn) -> Self {
        SmoothMap {
            n,
            m,
            source: MapSource::Func(f),
            mode: DerivativeMode::CentralDifference,
        }
    }

    /// Projection onto the listed coordinates (0-based).
    pub fn projection(n: usize, coords: &[usize]) -> Self {
        let comps = coords
            .iter()
            .map(|&c| {
                crate::expr::parse_expression(&format!("x{}", c + 1)).expect("variable name")
            })
            .collect();
        SmoothMap::from_expressions(n, comps, DerivativeMode::Analytic).expect("valid projection")
    }

    pub fn source_dim(&self) -> usize {
        self.n
    }

    pub fn target_dim(&self) -> usize {
        self.m
    }

    pub fn with_mode(&self, mode: DerivativeMode) -> Self {
        match &self.source {
            MapSource::Expr { comps, .. } => {
                SmoothMap::from_expressions(self.n, comps.clone(), mode).expect("validated shape")
            }
            MapSource::Func(_) => self.clone(),
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<DVector<f64>> {
        match &self.source {
            MapSource::Expr { comps, .. } => {
                let mut v = DVector::zeros(self.m);
                for (a, c) in comps.iter().enumerate() {
                    v[a] = c.eval(p)?;
                }
                Ok(v)
            }
            MapSource::Func(f) => {
                let v = f(p)?;
                if v.len() != self.m {
                    return Err(Error::Shape("map callable returned wrong length".into()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::DomainViolation(format!("map undefined at {p:?}")));
                }
                Ok(v)
            }
        }
    }

    /// m×n Jacobian matrix at p.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (n, m) = (self.n, self.m);
        match (&self.source, self.mode) {
            (MapSource::Expr { d1: Some(d1), .. }, DerivativeMode::Analytic) => {
                let mut j = DMatrix::zeros(m, n);
                for a in 0..m {
                    for k in 0..n {
                        j[(a, k)] = d1[a][k].eval(p)?;
                    }
                }
                Ok(j)
            }
            _ => {
                let mut j = DMatrix::zeros(m, n);
                let mut q = p.to_vec();
                for k in 0..n {
                    let h = step1(p[k]);
                    q[k] = p[k] + h;
                    let fp = self.value(&q)?;
                    q[k] = p[k] - h;
                    let fm = self.value(&q)?;
                    q[k] = p[k];
                    j.set_column(k, &((fp - fm) / (2.0 * h)));
                }
                Ok(j)
            }
        }
    }

    /// `out[k]` is ∂_k of the Jacobian.
    pub fn jacobian_derivatives(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let (n, m) = (self.n, self.m);
        let mut out = vec![DMatrix::zeros(m, n); n];
        match (&self.source, self.mode) {
            (MapSource::Expr { d2: Some(d2), .. }, DerivativeMode::Analytic) => {
                for (k, dk) in out.iter_mut().enumerate() {
                    for a in 0..m {
                        for l in 0..n {
                            dk[(a, l)] = d2[a][k * n + l].eval(p)?;
                        }
                    }
                }
            }
            _ => {
                let f0 = self.value(p)?;
                let mut q = p.to_vec();
                for k in 0..n {
                    let hk = step2(p[k]);
                    q[k] = p[k] + hk;
                    let fp = self.value(&q)?;
                    q[k] = p[k] - hk;
                    let fm = self.value(&q)?;
                    q[k] = p[k];
                    let col = (fp - &f0 * 2.0 + fm) / (hk * hk);
                    out[k].set_column(k, &col);
                    for l in k + 1..n {
                        let hl = step2(p[l]);
                        let mut acc = DVector::zeros(m);
                        for (sk, sl, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                            q[k] = p[k] + sk * hk;
                            q[l] = p[l] + sl * hl;
                            acc += self.value(&q)? * w;
                        }
                        q[k] = p[k];
                        q[l] = p[l];
                        let col = acc / (4.0 * hk * hl);
                        out[k].set_column(l, &col);
                        out[l].set_column(k, &col);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Total-space metric, base metric, map and optional structure tensors.
#[derive(Debug, Clone)]
pub struct SubmersionSetup {
    pub g1: MetricField,
    pub g2: MetricField,
    pub map: SmoothMap,
    pub structure: Option<StructureTensors>,
    pub tol: Tolerances,
}

impl SubmersionSetup {
    pub fn new(g1: MetricField, g2: MetricField, map: SmoothMap) -> Result<Self> {
        if map.source_dim() != g1.dim() || map.target_dim() != g2.dim() {
            return Err(Error::Shape(format!(
                "map {}→{} does not match metrics of dimension {} and {}",
                map.source_dim(),
                map.target_dim(),
                g1.dim(),
                g2.dim()
            )));
        }
        let tol = Tolerances::for_mode(g1.mode());
        Ok(SubmersionSetup {
            g1,
            g2,
            map,
            structure: None,
            tol,
        })
    }

    pub fn with_structure(mut self, s: StructureTensors) -> Result<Self> {
        if s.dim() != self.n() {
            return Err(Error::Shape("structure tensor dimension mismatch".into()));
        }
        self.structure = Some(s);
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.g1.dim()
    }

    pub fn m(&self) -> usize {
        self.g2.dim()
    }

    /// Fiber dimension.
    pub fn r(&self) -> usize {
        self.n() - self.m()
    }

    pub fn s(&self) -> usize {
        self.m()
    }

    pub fn domain(&self) -> &Domain {
        &self.g1.domain
    }

    pub fn mode(&self) -> DerivativeMode {
        self.g1.mode()
    }
}

/// Numerical rank of `j` relative to its largest singular value.
pub fn numerical_rank(j: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = j.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

pub fn pushforward(setup: &SubmersionSetup, p: &[f64]) -> Result<DMatrix<f64>> {
    setup.domain().check(p)?;
    let j = setup.map.jacobian(p)?;
    let rank = numerical_rank(&j, setup.tol.rank_tol);
    if rank < setup.m() {
        return Err(Error::RankDeficient {
            rank,
            expected: setup.m(),
        });
    }
    Ok(j)
}

/// g-orthogonal projector onto the horizontal space: G Jᵀ (J G Jᵀ)⁻¹ J
/// with G = g⁻¹.
pub fn horizontal_projector(g_inv: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gjt = g_inv * j.transpose();
    let m = j * &gjt;
    let m_inv = spd_inverse(&m).map_err(|_| Error::RankDeficient {
        rank: numerical_rank(j, 1e-12),
        expected: j.nrows(),
    })?;
    Ok(gjt * m_inv * j)
}

pub fn inner(g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.dot(&(g * y))
}

pub fn norm(g: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    inner(g, x, x).max(0.0).sqrt()
}

/// Orthonormal vertical and horizontal frames at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePair {
    pub p: Vec<f64>,
    pub vertical: Vec<DVector<f64>>,
    pub horizontal: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameResiduals {
    pub vertical_orthonormality: f64,
    pub horizontal_orthonormality: f64,
    pub cross: f64,
    /// Largest |F₊ Vᵢ|.
    pub verticality: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.vertical_orthonormality
            .max(self.horizontal_orthonormality)
            .max(self.cross)
            .max(self.verticality)
    }
}

impl FramePair {
    pub fn r(&self) -> usize {
        self.vertical.len()
    }

    pub fn s(&self) -> usize {
        self.horizontal.len()
    }

    pub fn residuals(&self, g: &DMatrix<f64>, j: &DMatrix<f64>) -> FrameResiduals {
        let ortho = |vs: &[DVector<f64>]| {
            let mut r: f64 = 0.0;
            for (a, x) in vs.iter().enumerate() {
                for (b, y) in vs.iter().enumerate() {
                    let target = if a == b { 1.0 } else { 0.0 };
                    r = r.max((inner(g, x, y) - target).abs());
                }
            }
            r
        };
        let mut cross: f64 = 0.0;
        for v in &self.vertical {
            for h in &self.horizontal {
                cross = cross.max(inner(g, v, h).abs());
            }
        }
        let verticality = self
            .vertical
            .iter()
            .map(|v| (j * v).norm())
            .fold(0.0, f64::max);
        FrameResiduals {
            vertical_orthonormality: ortho(&self.vertical),
            horizontal_orthonormality: ortho(&self.horizontal),
            cross,
            verticality,
        }
    }

    /// Replace the vertical frame by `V Q` for an r×r orthogonal Q.
    pub fn rotate_vertical(&self, q: &DMatrix<f64>) -> FramePair {
        FramePair {
            p: self.p.clone(),
            vertical: rotate(&self.vertical, q),
            horizontal: self.horizontal.clone(),
        }
    }

    pub fn rotate_horizontal(&self, q: &DMatrix<f64>) -> FramePair {
        FramePair {
            p: self.p.clone(),
            vertical: self.vertical.clone(),
            horizontal: rotate(&self.horizontal, q),
        }
    }
}

fn rotate(vs: &[DVector<f64>], q: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..q.ncols())
        .map(|c| {
            let mut acc = DVector::zeros(vs[0].len());
            for (r, v) in vs.iter().enumerate() {
                acc += v * q[(r, c)];
            }
            acc
        })
        .collect()
}

/// Remove the g-components along an orthonormal set (two passes).
fn orthogonalize(g: &DMatrix<f64>, basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = inner(g, b, &w);
            w -= b * c;
        }
    }
    w
}

/// Select `count` vectors among `candidates` by pivoting on the largest
/// residual, then Gram–Schmidt them in ascending candidate order after
/// the vectors in `fixed`.
pub fn pivoted_frame(
    g: &DMatrix<f64>,
    fixed: &[DVector<f64>],
    candidates: &[DVector<f64>],
    count: usize,
    frame_tol: f64,
) -> Result<Vec<DVector<f64>>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(fixed.len() + count);
    for f in fixed {
        let w = orthogonalize(g, &basis, f);
        let nw = norm(g, &w);
        if nw < frame_tol {
            return Err(Error::GramSchmidtBreakdown { pivot: nw });
        }
        basis.push(w / nw);
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    let mut scratch = basis.clone();
    for _ in 0..count {
        let mut best: Option<(usize, f64, DVector<f64>)> = None;
        for (idx, c) in candidates.iter().enumerate() {
            if chosen.contains(&idx) {
                continue;
            }
            let w = orthogonalize(g, &scratch, c);
            let nw = norm(g, &w);
            let better = match &best {
                None => true,
                Some((_, b, _)) => nw > *b * (1.0 + 1e-12) + 1e-300,
            };
            if better {
                best = Some((idx, nw, w));
            }
        }
        match best {
            Some((idx, nw, w)) if nw >= frame_tol => {
                chosen.push(idx);
                scratch.push(w / nw);
            }
            Some((_, nw, _)) => return Err(Error::GramSchmidtBreakdown { pivot: nw }),
            None => return Err(Error::GramSchmidtBreakdown { pivot: 0.0 }),
        }
    }
    chosen.sort_unstable();
    for idx in chosen {
        let w = orthogonalize(g, &basis, &candidates[idx]);
        let nw = norm(g, &w);
        if nw < frame_tol {
            return Err(Error::GramSchmidtBreakdown { pivot: nw });
        }
        basis.push(w / nw);
    }
    Ok(basis.split_off(fixed.len()))
}

/// Frames at p. Candidates are the seed basis (default: coordinate
/// vectors) projected onto each distribution.
pub fn build_frames(
    setup: &SubmersionSetup,
    p: &[f64],
    seed_basis: Option<&[DVector<f64>]>,
) -> Result<FramePair> {
    let g = setup.g1.eval(p)?;
    let j = pushforward(setup, p)?;
    frames_from(setup.n(), &g, &j, p, seed_basis, setup.tol.frame_tol)
}

pub(crate) fn frames_from(
    n: usize,
    g: &DMatrix<f64>,
    j: &DMatrix<f64>,
    p: &[f64],
    seed_basis: Option<&[DVector<f64>]>,
    frame_tol: f64,
) -> Result<FramePair> {
    let m = j.nrows();
    let g_inv = spd_inverse(g)?;
    let ph = horizontal_projector(&g_inv, j)?;
    let pv = DMatrix::identity(n, n) - &ph;
    let seeds: Vec<DVector<f64>> = match seed_basis {
        Some(s) => {
            if s.len() != n || s.iter().any(|v| v.len() != n) {
                return Err(Error::Shape(format!("seed basis must hold {n} vectors of length {n}")));
            }
            s.to_vec()
        }
        None => (0..n)
            .map(|k| {
                let mut e = DVector::zeros(n);
                e[k] = 1.0;
                e
            })
            .collect(),
    };
    let vcand: Vec<_> = seeds.iter().map(|v| &pv * v).collect();
    let hcand: Vec<_> = seeds.iter().map(|v| &ph * v).collect();
    let vertical = pivoted_frame(g, &[], &vcand, n - m, frame_tol)?;
    let horizontal = pivoted_frame(g, &[], &hcand, m, frame_tol)?;
    Ok(FramePair {
        p: p.to_vec(),
        vertical,
        horizontal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionPoint {
    pub point_index: usize,
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionReport {
    pub points: Vec<SubmersionPoint>,
    pub max_residual: f64,
    pub ok: bool,
}

/// max |g₁(hᵢ,hⱼ) − g₂(F₊hᵢ,F₊hⱼ)| over the horizontal frame.
pub fn submersion_residual(setup: &SubmersionSetup, p: &[f64]) -> Result<f64> {
    let frames = build_frames(setup, p, None)?;
    let j = pushforward(setup, p)?;
    let g1 = setup.g1.eval(p)?;
    let y = setup.map.value(p)?;
    let g2 = setup.g2.matrix(y.as_slice())?;
    let mut r: f64 = 0.0;
    for a in &frames.horizontal {
        let fa = &j * a;
        for b in &frames.horizontal {
            let fb = &j * b;
            r = r.max((inner(&g1, a, b) - inner(&g2, &fa, &fb)).abs());
        }
    }
    Ok(r)
}

/// Advisory check of the Riemannian-submersion property.
pub fn validate_submersion(setup: &SubmersionSetup, points: &[Vec<f64>]) -> Result<SubmersionReport> {
    let mut out = Vec::with_capacity(points.len());
    let mut max: f64 = 0.0;
    for (k, p) in points.iter().enumerate() {
        let residual = submersion_residual(setup, p)?;
        max = max.max(residual);
        out.push(SubmersionPoint {
            point_index: k,
            residual,
            flagged: residual > setup.tol.sub_tol,
        });
    }
    Ok(SubmersionReport {
        ok: out.iter().all(|p| !p.flagged),
        points: out,
        max_residual: max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Vertical,
    Horizontal,
    Ambient,
}

/// A 2-plane given by 1-based frame indices or by two coordinate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlaneSpec {
    Indices([usize; 2]),
    Vectors([Vec<f64>; 2]),
}

impl Default for PlaneSpec {
    fn default() -> Self {
        PlaneSpec::Indices([1, 2])
    }
}

/// An orthonormal pair spanning a 2-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane2 {
    pub space: Space,
    pub basis: [DVector<f64>; 2],
}

/// Orthonormalize `x`, `y` under g.
pub fn orthonormal_pair(
    g: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    frame_tol: f64,
) -> Result<[DVector<f64>; 2]> {
    let nx = norm(g, x);
    if nx < frame_tol {
        return Err(Error::DegeneratePlane);
    }
    let e1 = x / nx;
    let w = orthogonalize(g, std::slice::from_ref(&e1), y);
    let ny = norm(g, y);
    let nw = norm(g, &w);
    if ny < frame_tol || nw < frame_tol * ny.max(1.0) {
        return Err(Error::DegeneratePlane);
    }
    Ok([e1, w / nw])
}

/// Resolve a requested plane against the frames at a point.
pub fn resolve_plane(
    g: &DMatrix<f64>,
    j: &DMatrix<f64>,
    frames: &FramePair,
    space: Space,
    spec: &PlaneSpec,
    frame_tol: f64,
) -> Result<Plane2> {
    let n = g.nrows();
    let pool: Vec<DVector<f64>> = match space {
        Space::Vertical => frames.vertical.clone(),
        Space::Horizontal => frames.horizontal.clone(),
        Space::Ambient => frames.vertical.iter().chain(&frames.horizontal).cloned().collect(),
    };
    if pool.len() < 2 {
        return Err(Error::DimensionTooSmall { dim: pool.len() });
    }
    match spec {
        PlaneSpec::Indices([a, b]) => {
            if *a == 0 || *b == 0 || *a > pool.len() || *b > pool.len() {
                return Err(Error::InvalidArgument(format!(
                    "plane indices ({a}, {b}) outside 1..={}",
                    pool.len()
                )));
            }
            if a == b {
                return Err(Error::DegeneratePlane);
            }
            Ok(Plane2 {
                space,
                basis: [pool[a - 1].clone(), pool[b - 1].clone()],
            })
        }
        PlaneSpec::Vectors([x, y]) => {
            if x.len() != n || y.len() != n {
                return Err(Error::Shape(format!("plane vectors must have length {n}")));
            }
            let x = DVector::from_column_slice(x);
            let y = DVector::from_column_slice(y);
            if space != Space::Ambient {
                let g_inv = spd_inverse(g)?;
                let ph = horizontal_projector(&g_inv, j)?;
                let proj = match space {
                    Space::Horizontal => ph,
                    _ => DMatrix::identity(n, n) - ph,
                };
                for v in [&x, &y] {
                    let out = v - &proj * v;
                    let residual = norm(g, &out) / norm(g, v).max(f64::MIN_POSITIVE);
                    if residual > frame_tol {
                        return Err(Error::PlaneOutsideDistribution { residual });
                    }
                }
            }
            Ok(Plane2 {
                space,
                basis: orthonormal_pair(g, &x, &y, frame_tol)?,
            })
        }
    }
}

/// Frames with the vertical pair replaced by `pi` (first two vectors) and,
/// if given, the horizontal pair by `pp`; the rest is completed from the
/// current frames by pivoted Gram–Schmidt.
pub fn adapt_frames(
    g: &DMatrix<f64>,
    frames: &FramePair,
    pi: Option<&[DVector<f64>]>,
    pp: Option<&[DVector<f64>]>,
    frame_tol: f64,
) -> Result<FramePair> {
    let complete = |first: &[DVector<f64>], pool: &[DVector<f64>]| -> Result<Vec<DVector<f64>>> {
        let rest = pivoted_frame(g, first, pool, pool.len() - first.len(), frame_tol)?;
        let mut out = Vec::with_capacity(pool.len());
        // re-orthonormalize the given vectors in order
        let mut head: Vec<DVector<f64>> = Vec::new();
        for f in first {
            let w = orthogonalize(g, &head, f);
            let nw = norm(g, &w);
            head.push(w / nw);
        }
        out.extend(head);
        out.extend(rest);
        Ok(out)
    };
    let vertical = match pi {
        Some(v) => complete(v, &frames.vertical)?,
        None => frames.vertical.clone(),
    };
    let horizontal = match pp {
        Some(h) => complete(h, &frames.horizontal)?,
        None => frames.horizontal.clone(),
    };
    Ok(FramePair {
        p: frames.p.clone(),
        vertical,
        horizontal,
    })
}
