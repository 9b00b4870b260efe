//! Induced curvatures of the vertical and horizontal distributions,
//! scalar-curvature aggregates and δ(2)-type invariants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::CurvatureTensor;
use crate::oneill::PointGeometry;
use crate::submersion::{orthonormal_pair, FramePair, Plane2, Space};

/// R^{ker F₊}(F₁,F₂,F₃,F₄) on vertical vectors, from the Gauss equation
/// of the fibers.
pub fn induced_vertical_curvature(geom: &PointGeometry, f: [&DVector<f64>; 4]) -> f64 {
    let t = &geom.fields;
    let [f1, f2, f3, f4] = f;
    geom.riemann.value(f1, f2, f3, f4)
        - geom.inner(&t.t_of(f1, f3), &t.t_of(f2, f4))
        + geom.inner(&t.t_of(f2, f3), &t.t_of(f1, f4))
}

/// R^{(ker F₊)^⊥}(Z₁,Z₂,Z₃,Z₄) on horizontal vectors, i.e. the base
/// curvature lifted horizontally.
pub fn induced_horizontal_curvature(geom: &PointGeometry, z: [&DVector<f64>; 4]) -> f64 {
    let a = &geom.fields;
    let [z1, z2, z3, z4] = z;
    geom.riemann.value(z1, z2, z3, z4) - 2.0 * geom.inner(&a.a_of(z1, z2), &a.a_of(z3, z4))
        + geom.inner(&a.a_of(z2, z3), &a.a_of(z1, z4))
        - geom.inner(&a.a_of(z1, z3), &a.a_of(z2, z4))
}

/// Right-hand side of the mixed fundamental equation for horizontal Z₁, Z₂
/// and vertical F₁, F₂. It equals R^{M₁}(Z₁,F₁,F₂,Z₂).
pub fn mixed_curvature(
    geom: &PointGeometry,
    z1: &DVector<f64>,
    f1: &DVector<f64>,
    z2: &DVector<f64>,
    f2: &DVector<f64>,
) -> f64 {
    let o = &geom.fields;
    geom.inner(&o.nabla_t(z1, f1, f2), z2) + geom.inner(&o.nabla_a(f1, z1, z2), f2)
        - geom.inner(&o.t_of(f1, z1), &o.t_of(f2, z2))
        + geom.inner(&o.a_of(z1, f1), &o.a_of(z2, f2))
}

/// The ambient value compared against [`mixed_curvature`].
pub fn mixed_direct(
    geom: &PointGeometry,
    z1: &DVector<f64>,
    f1: &DVector<f64>,
    z2: &DVector<f64>,
    f2: &DVector<f64>,
) -> f64 {
    geom.riemann.value(z1, f1, f2, z2)
}

/// Ambient and induced curvature tensors in the orthonormal frames.
#[derive(Debug, Clone)]
pub struct SplitCurvature {
    pub vertical_m1: CurvatureTensor,
    pub vertical_ker: CurvatureTensor,
    pub horizontal_m1: CurvatureTensor,
    pub horizontal_perp: CurvatureTensor,
}

pub fn split_curvature(geom: &PointGeometry, frames: &FramePair) -> SplitCurvature {
    let v = &frames.vertical;
    let h = &frames.horizontal;
    let o = &geom.fields;
    let tvv: Vec<Vec<DVector<f64>>> = v.iter().map(|a| v.iter().map(|b| o.t_of(a, b)).collect()).collect();
    let ahh: Vec<Vec<DVector<f64>>> = h.iter().map(|a| h.iter().map(|b| o.a_of(a, b)).collect()).collect();
    let vertical_m1 = geom.riemann.in_basis(v);
    let horizontal_m1 = geom.riemann.in_basis(h);
    let vertical_ker = CurvatureTensor::from_fn(v.len(), |i, j, k, l| {
        vertical_m1.get(i, j, k, l) - geom.inner(&tvv[i][k], &tvv[j][l]) + geom.inner(&tvv[j][k], &tvv[i][l])
    });
    let horizontal_perp = CurvatureTensor::from_fn(h.len(), |i, j, k, l| {
        horizontal_m1.get(i, j, k, l) - 2.0 * geom.inner(&ahh[i][j], &ahh[k][l])
            + geom.inner(&ahh[j][k], &ahh[i][l])
            - geom.inner(&ahh[i][k], &ahh[j][l])
    });
    SplitCurvature {
        vertical_m1,
        vertical_ker,
        horizontal_m1,
        horizontal_perp,
    }
}

/// Σ_{i<j} R(eᵢ,eⱼ,eⱼ,eᵢ) for a tensor given in an orthonormal basis.
pub fn half_scalar(t: &CurvatureTensor) -> f64 {
    let k = t.dim();
    let mut s = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            s += t.get(i, j, j, i);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCurvatures {
    pub tau_v_m1: f64,
    pub tau_h_m1: f64,
    pub tau_v_ker: f64,
    pub tau_h_perp: f64,
    /// Σᵢⱼ R^{M₁}(hᵢ,Vⱼ,Vⱼ,hᵢ).
    pub mixed_sum: f64,
    pub tau_m1: f64,
    /// |τ − τ_V − τ_H − mixed_sum|.
    pub additivity_residual: f64,
}

pub fn scalar_curvatures_from(geom: &PointGeometry, frames: &FramePair, split: &SplitCurvature) -> ScalarCurvatures {
    let mut mixed = 0.0;
    for h in &frames.horizontal {
        for v in &frames.vertical {
            mixed += geom.riemann.value(h, v, v, h);
        }
    }
    let all: Vec<DVector<f64>> = frames.vertical.iter().chain(&frames.horizontal).cloned().collect();
    let tau_m1 = half_scalar(&geom.riemann.in_basis(&all));
    let tau_v_m1 = half_scalar(&split.vertical_m1);
    let tau_h_m1 = half_scalar(&split.horizontal_m1);
    ScalarCurvatures {
        tau_v_m1,
        tau_h_m1,
        tau_v_ker: half_scalar(&split.vertical_ker),
        tau_h_perp: half_scalar(&split.horizontal_perp),
        mixed_sum: mixed,
        tau_m1,
        additivity_residual: (tau_m1 - tau_v_m1 - tau_h_m1 - mixed).abs(),
    }
}

pub fn scalar_curvatures(geom: &PointGeometry, frames: &FramePair) -> ScalarCurvatures {
    scalar_curvatures_from(geom, frames, &split_curvature(geom, frames))
}

/// Which curvature a sectional value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureKind {
    Ambient,
    Induced,
}

pub fn sectional_curvature(geom: &PointGeometry, plane: &Plane2, kind: CurvatureKind, frame_tol: f64) -> Result<f64> {
    let [x, y] = orthonormal_pair(&geom.g, &plane.basis[0], &plane.basis[1], frame_tol)?;
    Ok(match (kind, plane.space) {
        (CurvatureKind::Ambient, _) | (_, Space::Ambient) => geom.riemann.value(&x, &y, &y, &x),
        (CurvatureKind::Induced, Space::Vertical) => induced_vertical_curvature(geom, [&x, &y, &y, &x]),
        (CurvatureKind::Induced, Space::Horizontal) => induced_horizontal_curvature(geom, [&x, &y, &y, &x]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Inf,
    Sup,
}

/// Optimum of the sectional curvature of a tensor given in an orthonormal
/// basis. `plane` holds orthonormal coefficient vectors in that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalPlane {
    pub value: f64,
    pub plane: [DVector<f64>; 2],
    pub start_index: usize,
}

pub const MIN_STARTS: usize = 32;
const OPT_SEED: u64 = 0x5eed_2b1a;
const MAX_SWEEPS: usize = 500;

/// M_y(a, d) = R(e_a, y, y, e_d), so that x ↦ xᵀ M_y x is K(x, y) for
/// unit x ⊥ y.
fn sectional_form(t: &CurvatureTensor, y: &DVector<f64>) -> DMatrix<f64> {
    let k = t.dim();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for d in 0..k {
            let mut s = 0.0;
            for b in 0..k {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..k {
                    s += y[b] * y[c] * t.get(a, b, c, d);
                }
            }
            m[(a, d)] = s;
        }
    }
    (&m + m.transpose()) * 0.5
}

/// Top unit eigenvector of M on the orthogonal complement of `y`.
fn top_on_complement(m: &DMatrix<f64>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let k = m.nrows();
    let p = DMatrix::identity(k, k) - y * y.transpose();
    let shift = 1.0 + 2.0 * m.amax() * k as f64;
    let q = &p * m * &p - y * y.transpose() * shift;
    let q = (&q + q.transpose()) * 0.5;
    let eig = q.symmetric_eigen();
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut x: DVector<f64> = eig.eigenvectors.column(best).into_owned();
    // orient deterministically
    if let Some(pos) = x.iter().position(|v| v.abs() > 1e-12) {
        if x[pos] < 0.0 {
            x = -x;
        }
    }
    (eig.eigenvalues[best], x)
}

fn ascend(t: &CurvatureTensor, mut x: DVector<f64>, mut y: DVector<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let mut val = t.value(&x, &y, &y, &x);
    for _ in 0..MAX_SWEEPS {
        let (_, nx) = top_on_complement(&sectional_form(t, &y), &y);
        let (v2, ny) = top_on_complement(&sectional_form(t, &nx), &nx);
        let improved = v2 - val;
        x = nx;
        y = ny;
        val = v2;
        if improved.abs() <= 1e-15 * (1.0 + val.abs()) {
            break;
        }
    }
    (t.value(&x, &y, &y, &x), x, y)
}

/// Multistart block-coordinate ascent over the Grassmannian of 2-planes.
/// Starts are all coordinate planes followed by seeded random planes, at
/// least `MIN_STARTS` in total and at least eight random ones. The reduction keeps the best value and,
/// among values within 1e-12, the lowest start index.
pub fn extremal_sectional_tensor(t: &CurvatureTensor, mode: Extremum) -> Result<ExtremalPlane> {
    let k = t.dim();
    if k < 2 {
        return Err(Error::DimensionTooSmall { dim: k });
    }
    let work = match mode {
        Extremum::Sup => t.clone(),
        Extremum::Inf => t.scaled(-1.0),
    };
    let unit = |i: usize| {
        let mut e = DVector::zeros(k);
        e[i] = 1.0;
        e
    };
    let mut starts: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            starts.push((unit(i), unit(j)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(OPT_SEED);
    let total = MIN_STARTS.max(starts.len() + 8);
    while starts.len() < total {
        let x: DVector<f64> = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let y: DVector<f64> = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let nx = x.norm();
        if nx < 1e-3 {
            continue;
        }
        let x = x / nx;
        let w = &y - &x * x.dot(&y);
        let nw = w.norm();
        if nw < 1e-3 {
            continue;
        }
        starts.push((x, w / nw));
    }
    let mut best: Option<ExtremalPlane> = None;
    for (idx, (x0, y0)) in starts.into_iter().enumerate() {
        let (val, x, y) = if k == 2 {
            (work.value(&x0, &y0, &y0, &x0), x0, y0)
        } else {
            ascend(&work, x0, y0)
        };
        let better = match &best {
            None => true,
            Some(b) => val > b.value + 1e-12,
        };
        if better {
            best = Some(ExtremalPlane {
                value: val,
                plane: [x, y],
                start_index: idx,
            });
        }
    }
    let mut out = best.expect("at least one start");
    if mode == Extremum::Inf {
        out.value = -out.value;
    }
    Ok(out)
}

/// Extreme sectional curvature over 2-planes of one distribution.
pub fn extremal_sectional(
    geom: &PointGeometry,
    frames: &FramePair,
    space: Space,
    kind: CurvatureKind,
    mode: Extremum,
) -> Result<(f64, Plane2)> {
    let (basis, tensor): (Vec<DVector<f64>>, CurvatureTensor) = match (space, kind) {
        (Space::Ambient, _) | (_, CurvatureKind::Ambient) => {
            let b: Vec<DVector<f64>> = match space {
                Space::Vertical => frames.vertical.clone(),
                Space::Horizontal => frames.horizontal.clone(),
                Space::Ambient => frames.vertical.iter().chain(&frames.horizontal).cloned().collect(),
            };
            let t = geom.riemann.in_basis(&b);
            (b, t)
        }
        (Space::Vertical, CurvatureKind::Induced) => {
            (frames.vertical.clone(), split_curvature(geom, frames).vertical_ker)
        }
        (Space::Horizontal, CurvatureKind::Induced) => {
            (frames.horizontal.clone(), split_curvature(geom, frames).horizontal_perp)
        }
    };
    let opt = extremal_sectional_tensor(&tensor, mode)?;
    Ok((opt.value, Plane2 { space, basis: combine(&basis, &opt.plane) }))
}

fn combine(basis: &[DVector<f64>], coeffs: &[DVector<f64>; 2]) -> [DVector<f64>; 2] {
    let lift = |c: &DVector<f64>| {
        let mut v = DVector::zeros(basis[0].len());
        for (b, ci) in basis.iter().zip(c.iter()) {
            v += b * *ci;
        }
        v
    };
    [lift(&coeffs[0]), lift(&coeffs[1])]
}

/// Infimum and supremum of a sectional curvature with their planes (in
/// coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub inf: f64,
    pub sup: f64,
    pub inf_plane: [Vec<f64>; 2],
    pub sup_plane: [Vec<f64>; 2],
}

fn extremes_of(t: &CurvatureTensor, basis: &[DVector<f64>]) -> Result<Option<Extremes>> {
    if t.dim() < 2 {
        return Ok(None);
    }
    let lo = extremal_sectional_tensor(t, Extremum::Inf)?;
    let hi = extremal_sectional_tensor(t, Extremum::Sup)?;
    let as_vecs = |p: [DVector<f64>; 2]| [p[0].iter().copied().collect(), p[1].iter().copied().collect()];
    Ok(Some(Extremes {
        inf: lo.value,
        sup: hi.value,
        inf_plane: as_vecs(combine(basis, &lo.plane)),
        sup_plane: as_vecs(combine(basis, &hi.plane)),
    }))
}

/// Every aggregate the inequality checkers draw on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantBundle {
    #[serde(flatten)]
    pub scalars: ScalarCurvatures,
    pub kv_m1: Option<f64>,
    pub kv_ker: Option<f64>,
    pub kh_m1: Option<f64>,
    pub kh_perp: Option<f64>,
    pub vertical_ker: Option<Extremes>,
    pub vertical_m1: Option<Extremes>,
    pub horizontal_perp: Option<Extremes>,
    pub horizontal_m1: Option<Extremes>,
    /// τ_V^{ker} − inf K_V^{ker}.
    pub delta2_v: Option<f64>,
    /// τ_V^{ker} − sup K_V^{ker}.
    pub delta_hat2_v: Option<f64>,
    /// τ_H^{⊥} − sup K_H^{⊥}.
    pub delta_hat2_h: Option<f64>,
}

/// Evaluate the bundle in the given frames. If `pi` / `pp` are set, their
/// sectional curvatures are filled in.
pub fn invariant_bundle(
    geom: &PointGeometry,
    frames: &FramePair,
    pi: Option<&Plane2>,
    pp: Option<&Plane2>,
    frame_tol: f64,
) -> Result<InvariantBundle> {
    let split = split_curvature(geom, frames);
    let scalars = scalar_curvatures_from(geom, frames, &split);
    let k = |p: Option<&Plane2>, kind| -> Result<Option<f64>> {
        p.map(|p| sectional_curvature(geom, p, kind, frame_tol)).transpose()
    };
    let vertical_ker = extremes_of(&split.vertical_ker, &frames.vertical)?;
    let vertical_m1 = extremes_of(&split.vertical_m1, &frames.vertical)?;
    let horizontal_perp = extremes_of(&split.horizontal_perp, &frames.horizontal)?;
    let horizontal_m1 = extremes_of(&split.horizontal_m1, &frames.horizontal)?;
    Ok(InvariantBundle {
        kv_m1: k(pi, CurvatureKind::Ambient)?,
        kv_ker: k(pi, CurvatureKind::Induced)?,
        kh_m1: k(pp, CurvatureKind::Ambient)?,
        kh_perp: k(pp, CurvatureKind::Induced)?,
        delta2_v: vertical_ker.as_ref().map(|e| scalars.tau_v_ker - e.inf),
        delta_hat2_v: vertical_ker.as_ref().map(|e| scalars.tau_v_ker - e.sup),
        delta_hat2_h: horizontal_perp.as_ref().map(|e| scalars.tau_h_perp - e.sup),
        scalars,
        vertical_ker,
        vertical_m1,
        horizontal_perp,
        horizontal_m1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_curvature(k: usize, c: f64) -> CurvatureTensor {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        CurvatureTensor::from_fn(k, |i, j, kk, l| c * (d(j, kk) * d(i, l) - d(i, kk) * d(j, l)))
    }

    #[test]
    fn constant_curvature_extremes() {
        let t = constant_curvature(4, 0.7);
        let lo = extremal_sectional_tensor(&t, Extremum::Inf).unwrap();
        let hi = extremal_sectional_tensor(&t, Extremum::Sup).unwrap();
        assert!((lo.value - 0.7).abs() < 1e-12);
        assert!((hi.value - 0.7).abs() < 1e-12);
        assert_eq!(lo.start_index, 0);
        assert!((half_scalar(&t) - 6.0 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn product_of_spheres() {
        // S²×S² with unit factors in an orthonormal basis
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let t = CurvatureTensor::from_fn(4, |i, j, k, l| {
            let blk = |x: usize| x / 2;
            if blk(i) == blk(j) && blk(j) == blk(k) && blk(k) == blk(l) {
                d(j, k) * d(i, l) - d(i, k) * d(j, l)
            } else {
                0.0
            }
        });
        let lo = extremal_sectional_tensor(&t, Extremum::Inf).unwrap();
        let hi = extremal_sectional_tensor(&t, Extremum::Sup).unwrap();
        assert!(lo.value.abs() < 1e-12);
        assert!((hi.value - 1.0).abs() < 1e-12);
        let [x, y] = &hi.plane;
        assert!((x.norm() - 1.0).abs() < 1e-12 && x.dot(y).abs() < 1e-12);
    }

    #[test]
    fn too_small() {
        let t = constant_curvature(1, 1.0);
        assert!(matches!(
            extremal_sectional_tensor(&t, Extremum::Sup),
            Err(Error::DimensionTooSmall { dim: 1 })
        ));
    }
}
