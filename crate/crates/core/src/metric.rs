//! Metrics on a coordinate chart: evaluation, derivatives, Christoffel
//! symbols and the (0,4) Riemann tensor.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    #[serde(alias = "difference", alias = "central-difference")]
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainRule {
    Nonzero,
    Positive,
}

#[derive(Debug, Clone)]
pub struct DomainConstraint {
    pub expr: Expression,
    pub rule: DomainRule,
    pub label: String,
}

/// Open subset of the chart, described by sign conditions on expressions.
#[derive(Debug, Clone, Default)]
pub struct Domain {
    pub constraints: Vec<DomainConstraint>,
}

impl Domain {
    pub fn unrestricted() -> Self {
        Domain::default()
    }

    pub fn push(&mut self, expr: Expression, rule: DomainRule, label: impl Into<String>) {
        self.constraints.push(DomainConstraint {
            expr,
            rule,
            label: label.into(),
        });
    }

    /// First violated constraint, if any.
    pub fn violation(&self, x: &[f64]) -> Option<String> {
        if x.iter().any(|v| !v.is_finite()) {
            return Some("non-finite coordinate".into());
        }
        for c in &self.constraints {
            let v = c.expr.eval_raw(x);
            let ok = match c.rule {
                DomainRule::Nonzero => v.is_finite() && v != 0.0,
                DomainRule::Positive => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Some(format!("{} fails at {:?}", c.label, x));
            }
        }
        None
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.violation(x).is_none()
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        match self.violation(x) {
            Some(msg) => Err(Error::DomainViolation(msg)),
            None => Ok(()),
        }
    }

    pub fn check_stencil(&self, x: &[f64]) -> Result<()> {
        match self.violation(x) {
            Some(msg) => Err(Error::StencilOutsideDomain(msg)),
            None => Ok(()),
        }
    }
}

/// First-derivative step: cbrt(eps) scaled by the coordinate.
pub fn step1(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Second-derivative step: eps^(1/4) scaled by the coordinate.
pub fn step2(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Expr {
        entries: Vec<Expression>,
        d1: Option<Vec<Vec<Expression>>>,
        d2: Option<Vec<Vec<Expression>>>,
    },
    Func(MatrixFn),
}

/// A symmetric bilinear form field on an n-dimensional chart.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    source: Source,
    mode: DerivativeMode,
    pub domain: Domain,
    pub pd_tol: f64,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

/// Metric values and partial derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[k]` is the matrix of partials with respect to coordinate k.
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[k * n + l]` is the matrix of mixed second partials.
    pub ddg: Vec<DMatrix<f64>>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n + j
}

impl MetricField {
    /// Build from a row-major n*n table of expressions. Only the upper
    /// triangle is read; the lower one is mirrored.
    pub fn from_expressions(
        n: usize,
        entries: Vec<Expression>,
        mode: DerivativeMode,
        domain: Domain,
    ) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::Shape(format!(
                "expected {} metric entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let entries: Vec<Expression> = (0..n * n)
            .map(|idx| entries[upper_index(n, idx / n, idx % n)].clone())
            .collect();
        let (d1, d2) = if mode == DerivativeMode::Analytic {
            let d1: Vec<Vec<Expression>> = (0..n)
                .map(|k| entries.iter().map(|e| e.derivative(k)).collect())
                .collect();
            let d2: Vec<Vec<Expression>> = (0..n * n)
                .map(|kl| {
                    let (k, l) = (kl / n, kl % n);
                    if l < k {
                        Vec::new()
                    } else {
                        d1[k].iter().map(|e| e.derivative(l)).collect()
                    }
                })
                .collect();
            (Some(d1), Some(d2))
        } else {
            (None, None)
        };
        Ok(MetricField {
            dim: n,
            source: Source::Expr { entries, d1, d2 },
            mode,
            domain,
            pd_tol: 1e-10,
        })
    }

    /// Build from a closure returning the full matrix. Derivatives are
    /// always taken by central differences.
    pub fn from_fn(n: usize, f: MatrixFn, domain: Domain) -> Self {
        MetricField {
            dim: n,
            source: Source::Func(f),
            mode: DerivativeMode::CentralDifference,
            domain,
            pd_tol: 1e-10,
        }
    }

    /// Constant diagonal metric, handy in tests.
    pub fn constant(g: DMatrix<f64>) -> Self {
        let n = g.nrows();
        let entries = g.iter().map(|v| Expression::constant(*v)).collect::<Vec<_>>();
        // column-major iteration of a symmetric matrix is fine
        MetricField::from_expressions(n, entries, DerivativeMode::Analytic, Domain::default())
            .expect("square matrix")
    }

    pub fn euclidean(n: usize) -> Self {
        MetricField::constant(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    /// The same field with another derivative mode.
    pub fn with_mode(&self, mode: DerivativeMode) -> Self {
        match &self.source {
            Source::Expr { entries, .. } => {
                let mut f =
                    MetricField::from_expressions(self.dim, entries.clone(), mode, self.domain.clone())
                        .expect("shape already validated");
                f.pd_tol = self.pd_tol;
                f
            }
            Source::Func(_) => self.clone(),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Shape(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dim
            )));
        }
        self.domain.check(p)
    }

    /// Matrix at p without the positive-definiteness check.
    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        self.raw(p)
    }

    fn raw(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        match &self.source {
            Source::Expr { entries, .. } => {
                let mut g = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = entries[i * n + j].eval(p)?;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
                Ok(g)
            }
            Source::Func(f) => {
                let g = f(p)?;
                if g.nrows() != n || g.ncols() != n {
                    return Err(Error::Shape("metric callable returned wrong shape".into()));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DomainViolation(format!("metric undefined at {p:?}")));
                }
                Ok((&g + g.transpose()) * 0.5)
            }
        }
    }

    fn raw_stencil(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check_stencil(q)?;
        self.raw(q).map_err(|e| match e {
            Error::DomainViolation(m) => Error::StencilOutsideDomain(m),
            other => other,
        })
    }

    /// Evaluate g at p and require positive definiteness.
    pub fn eval(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.matrix(p)?;
        check_positive_definite(&g, self.pd_tol)?;
        Ok(g)
    }

    /// Values and derivatives up to `order` (0, 1 or 2).
    pub fn jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.dim;
        let g = self.eval(p)?;
        let mut dg = Vec::new();
        let mut ddg = Vec::new();
        if order == 0 {
            return Ok(MetricJet { g, dg, ddg });
        }
        match (&self.source, self.mode) {
            (
                Source::Expr {
                    d1: Some(d1),
                    d2: Some(d2),
                    ..
                },
                DerivativeMode::Analytic,
            ) => {
                for table in d1.iter() {
                    dg.push(eval_table(n, table, p)?);
                }
                if order >= 2 {
                    ddg = vec![DMatrix::zeros(n, n); n * n];
                    for k in 0..n {
                        for l in k..n {
                            let m = eval_table(n, &d2[k * n + l], p)?;
                            ddg[l * n + k] = m.clone();
                            ddg[k * n + l] = m;
                        }
                    }
                }
            }
            _ => {
                let mut q = p.to_vec();
                for k in 0..n {
                    let h = step1(p[k]);
                    q[k] = p[k] + h;
                    let gp = self.raw_stencil(&q)?;
                    q[k] = p[k] - h;
                    let gm = self.raw_stencil(&q)?;
                    q[k] = p[k];
                    dg.push((gp - gm) / (2.0 * h));
                }
                if order >= 2 {
                    ddg = vec![DMatrix::zeros(n, n); n * n];
                    for k in 0..n {
                        let hk = step2(p[k]);
                        q[k] = p[k] + hk;
                        let gp = self.raw_stencil(&q)?;
                        q[k] = p[k] - hk;
                        let gm = self.raw_stencil(&q)?;
                        q[k] = p[k];
                        ddg[k * n + k] = (gp - &g * 2.0 + gm) / (hk * hk);
                        for l in k + 1..n {
                            let hl = step2(p[l]);
                            let mut acc = DMatrix::zeros(n, n);
                            for (sk, sl, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                                q[k] = p[k] + sk * hk;
                                q[l] = p[l] + sl * hl;
                                acc += self.raw_stencil(&q)? * w;
                            }
                            q[k] = p[k];
                            q[l] = p[l];
                            let m = acc / (4.0 * hk * hl);
                            ddg[l * n + k] = m.clone();
                            ddg[k * n + l] = m;
                        }
                    }
                }
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }
}

fn eval_table(n: usize, table: &[Expression], p: &[f64]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = table[i * n + j].eval(p)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue must exceed `pd_tol`.
pub fn check_positive_definite(g: &DMatrix<f64>, pd_tol: f64) -> Result<()> {
    let min = g.clone().symmetric_eigenvalues().min();
    if min > pd_tol {
        Ok(())
    } else {
        Err(Error::NonPositiveDefinite {
            min_eigenvalue: min,
        })
    }
}

/// Inverse of a positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match g.clone().cholesky() {
        Some(c) => Ok(c.inverse()),
        None => Err(Error::NonPositiveDefinite {
            min_eigenvalue: g.clone().symmetric_eigenvalues().min(),
        }),
    }
}

pub fn eval_metric(field: &MetricField, p: &[f64]) -> Result<DMatrix<f64>> {
    field.eval(p)
}

/// Christoffel symbols of the second kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTable {
    n: usize,
    data: Vec<f64>,
}

impl ChristoffelTable {
    pub fn zeros(n: usize) -> Self {
        ChristoffelTable {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    /// Build from the jet and the inverse metric.
    pub fn from_jet(jet: &MetricJet, g_inv: &DMatrix<f64>) -> Self {
        let n = jet.g.nrows();
        let first = first_kind(jet);
        let mut t = ChristoffelTable::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += g_inv[(k, l)] * first[(l * n + i) * n + j];
                    }
                    t.data[(k * n + i) * n + j] = s;
                    t.data[(k * n + j) * n + i] = s;
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Γ^k_ij.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    /// The vector Γ(X, Y) with components Γ^k_ij X^i Y^j.
    pub fn contract(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.along(x) * y
    }

    /// Matrix of Y ↦ Γ(X, Y).
    pub fn along(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[(k, j)] += self.gamma(k, i, j) * xi;
                }
            }
        }
        m
    }

    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r = r.max((self.gamma(k, i, j) - self.gamma(k, j, i)).abs());
                }
            }
        }
        r
    }
}

/// Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), stored at [(l*n + i)*n + j].
fn first_kind(jet: &MetricJet) -> Vec<f64> {
    let n = jet.g.nrows();
    let mut out = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(l * n + i) * n + j] =
                    0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
            }
        }
    }
    out
}

pub fn christoffel(field: &MetricField, p: &[f64]) -> Result<ChristoffelTable> {
    let jet = field.jet(p, 1)?;
    let g_inv = spd_inverse(&jet.g)?;
    Ok(ChristoffelTable::from_jet(&jet, &g_inv))
}

/// A (0,4) tensor with the curvature symmetries, stored densely.
/// `value(X, Y, Z, W) = g(R(X, Y)Z, W)`, so sectional curvature is
/// `value(X, Y, Y, X)` on an orthonormal pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureTensor {
    pub fn zeros(n: usize) -> Self {
        CurvatureTensor {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = CurvatureTensor::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t.data[((i * n + j) * n + k) * n + l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l] = v;
    }

    /// Multilinear evaluation on component vectors.
    pub fn value(
        &self,
        z1: &DVector<f64>,
        z2: &DVector<f64>,
        z3: &DVector<f64>,
        z4: &DVector<f64>,
    ) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if z1[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let a = z1[i] * z2[j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let b = a * z3[k];
                    if b == 0.0 {
                        continue;
                    }
                    let base = ((i * n + j) * n + k) * n;
                    for l in 0..n {
                        s += b * self.data[base + l] * z4[l];
                    }
                }
            }
        }
        s
    }

    /// Components in the basis given by `vectors` (columns of coordinate
    /// components). The result has dimension `vectors.len()`.
    pub fn in_basis(&self, vectors: &[DVector<f64>]) -> CurvatureTensor {
        let n = self.n;
        let k = vectors.len();
        let mut b = DMatrix::zeros(n, k);
        for (c, v) in vectors.iter().enumerate() {
            b.set_column(c, v);
        }
        // contract one slot at a time
        let mut cur = self.data.clone();
        let mut dims = [n, n, n, n];
        for slot in 0..4 {
            let mut new_dims = dims;
            new_dims[slot] = k;
            let total: usize = new_dims.iter().product();
            let mut next = vec![0.0; total];
            let stride = |d: &[usize; 4], s: usize| -> usize { d[s + 1..].iter().product() };
            let old_stride = stride(&dims, slot);
            let new_stride = stride(&new_dims, slot);
            let outer: usize = dims[..slot].iter().product();
            for o in 0..outer {
                for inner in 0..old_stride {
                    for a in 0..k {
                        let mut acc = 0.0;
                        for m in 0..dims[slot] {
                            let bv = b[(m, a)];
                            if bv != 0.0 {
                                acc += bv * cur[(o * dims[slot] + m) * old_stride + inner];
                            }
                        }
                        next[(o * k + a) * new_stride + inner] = acc;
                    }
                }
            }
            cur = next;
            dims = new_dims;
        }
        CurvatureTensor { n: k, data: cur }
    }

    /// Sectional curvature of span{x, y} (any basis, not necessarily
    /// orthonormal) with respect to `g`.
    pub fn sectional(&self, g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Option<f64> {
        let gxx = x.dot(&(g * x));
        let gyy = y.dot(&(g * y));
        let gxy = x.dot(&(g * y));
        let area = gxx * gyy - gxy * gxy;
        if area <= 1e-300 {
            return None;
        }
        Some(self.value(x, y, y, x) / area)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> CurvatureTensor {
        CurvatureTensor {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_diff(&self, other: &CurvatureTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest violation of R(X,Y,·,·) = −R(Y,X,·,·) and R(·,·,Z,W) = −R(·,·,W,Z).
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        r = r.max((v + self.get(j, i, k, l)).abs());
                        r = r.max((v + self.get(i, j, l, k)).abs());
                    }
                }
            }
        }
        r
    }

    pub fn pair_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        r = r.max((self.get(i, j, k, l) - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        r
    }

    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l);
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }
}

/// Riemann tensor from a second-order jet:
/// R_ijkl = ∂_i Γ_{l,jk} − ∂_j Γ_{l,ik} − Γ_{p,il} Γ^p_jk + Γ_{p,jl} Γ^p_ik.
pub fn riemann_from_jet(jet: &MetricJet, g_inv: &DMatrix<f64>) -> CurvatureTensor {
    let n = jet.g.nrows();
    let first = first_kind(jet);
    let second = ChristoffelTable::from_jet(jet, g_inv);
    let fk = |l: usize, i: usize, j: usize| first[(l * n + i) * n + j];
    // ∂_a Γ_{l,bc} = ½(∂_a∂_b g_cl + ∂_a∂_c g_bl − ∂_a∂_l g_bc)
    let d2 = |a: usize, b: usize| &jet.ddg[a * n + b];
    let dfirst = |a: usize, l: usize, b: usize, c: usize| {
        0.5 * (d2(a, b)[(c, l)] + d2(a, c)[(b, l)] - d2(a, l)[(b, c)])
    };
    let mut r = CurvatureTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    if k == l {
                        continue;
                    }
                    let mut v = dfirst(i, l, j, k) - dfirst(j, l, i, k);
                    for p in 0..n {
                        v += -fk(p, i, l) * second.gamma(p, j, k) + fk(p, j, l) * second.gamma(p, i, k);
                    }
                    r.set(i, j, k, l, v);
                }
            }
        }
    }
    r
}

pub fn riemann(field: &MetricField, p: &[f64]) -> Result<CurvatureTensor> {
    let jet = field.jet(p, 2)?;
    let g_inv = spd_inverse(&jet.g)?;
    Ok(riemann_from_jet(&jet, &g_inv))
}

/// Largest entry of ∇g computed from the jet and the Christoffel symbols.
pub fn metricity_residual(jet: &MetricJet, gamma: &ChristoffelTable) -> f64 {
    let n = jet.g.nrows();
    let mut r: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = jet.dg[k][(i, j)];
                for p in 0..n {
                    v -= gamma.gamma(p, k, i) * jet.g[(p, j)] + gamma.gamma(p, k, j) * jet.g[(i, p)];
                }
                r = r.max(v.abs());
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn field(n: usize, src: &[&str], mode: DerivativeMode) -> MetricField {
        let entries = src.iter().map(|s| parse_expression(s).unwrap()).collect();
        MetricField::from_expressions(n, entries, mode, Domain::default()).unwrap()
    }

    fn sphere(mode: DerivativeMode) -> MetricField {
        field(2, &["1", "0", "0", "sin(x1)^2"], mode)
    }

    #[test]
    fn euclidean_is_identity_and_flat() {
        let g = MetricField::euclidean(3);
        assert_eq!(g.eval(&[1.0, 2.0, 3.0]).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(christoffel(&g, &[0.0; 3]).unwrap(), ChristoffelTable::zeros(3));
        assert_eq!(riemann(&g, &[0.0; 3]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sphere_chart_curvature() {
        for mode in [DerivativeMode::Analytic, DerivativeMode::CentralDifference] {
            let th = std::f64::consts::FRAC_PI_3;
            let r = riemann(&sphere(mode), &[th, 0.4]).unwrap();
            assert!((r.get(0, 1, 1, 0) - 0.75).abs() < 1e-6, "{mode:?}: {}", r.get(0, 1, 1, 0));
            assert!((r.get(0, 1, 0, 1) + 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn non_positive_definite_rejected() {
        let g = field(2, &["1", "0", "0", "x1"], DerivativeMode::Analytic);
        assert!(matches!(g.eval(&[-1.0, 0.0]), Err(Error::NonPositiveDefinite { .. })));
    }

    #[test]
    fn division_by_zero_is_domain_violation() {
        let g = field(1, &["1/x1"], DerivativeMode::Analytic);
        assert!(matches!(g.eval(&[0.0]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn stencil_leaving_domain() {
        let mut d = Domain::default();
        d.push(parse_expression("x1").unwrap(), DomainRule::Positive, "x1 > 0");
        let entries = vec![parse_expression("x1").unwrap()];
        let g = MetricField::from_expressions(1, entries, DerivativeMode::CentralDifference, d).unwrap();
        assert!(matches!(christoffel(&g, &[1e-7]), Err(Error::StencilOutsideDomain(_))));
        assert!(matches!(g.eval(&[-1.0]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn in_basis_matches_value() {
        let r = riemann(&sphere(DerivativeMode::Analytic), &[0.9, 0.0]).unwrap();
        let b = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![-0.5, 0.3])];
        let rb = r.in_basis(&b);
        for (i, j, k, l) in [(0, 1, 1, 0), (1, 0, 0, 1), (0, 1, 0, 1), (1, 1, 0, 0)] {
            let direct = r.value(&b[i], &b[j], &b[k], &b[l]);
            assert!((rb.get(i, j, k, l) - direct).abs() < 1e-12);
        }
    }
}
