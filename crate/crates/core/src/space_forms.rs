//! Model curvature tensors of real, complex and generalized Sasakian space
//! forms, the structure tensors they need, and the P/Q decomposition.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::metric::{riemann, CurvatureTensor, MetricField};
use crate::submersion::{inner, norm, FramePair, SubmersionSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Complex,
    AlmostContact,
}

/// J (complex) or (φ, ξ, η) (almost contact) as expression fields.
/// `phi[i * n + j]` is the component φ^i_j, so (φZ)^i = φ^i_j Z^j.
#[derive(Debug, Clone)]
pub struct StructureTensors {
    pub kind: StructureKind,
    n: usize,
    phi: Vec<Expression>,
    xi: Option<Vec<Expression>>,
    eta: Option<Vec<Expression>>,
}

/// Structure tensors evaluated at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureAt {
    pub phi: DMatrix<f64>,
    pub xi: Option<DVector<f64>>,
    pub eta: Option<DVector<f64>>,
}

impl StructureTensors {
    pub fn complex(n: usize, j: Vec<Expression>) -> Result<Self> {
        if j.len() != n * n {
            return Err(Error::Shape(format!("J needs {} entries", n * n)));
        }
        Ok(StructureTensors {
            kind: StructureKind::Complex,
            n,
            phi: j,
            xi: None,
            eta: None,
        })
    }

    pub fn almost_contact(
        n: usize,
        phi: Vec<Expression>,
        xi: Vec<Expression>,
        eta: Vec<Expression>,
    ) -> Result<Self> {
        if phi.len() != n * n || xi.len() != n || eta.len() != n {
            return Err(Error::Shape("almost contact structure has wrong shape".into()));
        }
        Ok(StructureTensors {
            kind: StructureKind::AlmostContact,
            n,
            phi,
            xi: Some(xi),
            eta: Some(eta),
        })
    }

    /// Constant structure from numeric data.
    pub fn constant(phi: &DMatrix<f64>, xi: Option<&DVector<f64>>, eta: Option<&DVector<f64>>) -> Result<Self> {
        let n = phi.nrows();
        let c = |v: f64| Expression::constant(v);
        let phi_e: Vec<Expression> = (0..n * n).map(|k| c(phi[(k / n, k % n)])).collect();
        match (xi, eta) {
            (Some(x), Some(e)) => StructureTensors::almost_contact(
                n,
                phi_e,
                x.iter().map(|v| c(*v)).collect(),
                e.iter().map(|v| c(*v)).collect(),
            ),
            (None, None) => StructureTensors::complex(n, phi_e),
            _ => Err(Error::Shape("ξ and η must be given together".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, p: &[f64]) -> Result<StructureAt> {
        let n = self.n;
        let mut phi = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                phi[(i, j)] = self.phi[i * n + j].eval(p)?;
            }
        }
        let vec_of = |v: &Option<Vec<Expression>>| -> Result<Option<DVector<f64>>> {
            match v {
                Some(es) => {
                    let mut out = DVector::zeros(n);
                    for (k, e) in es.iter().enumerate() {
                        out[k] = e.eval(p)?;
                    }
                    Ok(Some(out))
                }
                None => Ok(None),
            }
        };
        Ok(StructureAt {
            phi,
            xi: vec_of(&self.xi)?,
            eta: vec_of(&self.eta)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResidual {
    pub axiom: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub axioms: Vec<AxiomResidual>,
    pub pass: bool,
}

/// Axiom residuals of the structure tensors at one point.
pub fn structure_residuals(g: &DMatrix<f64>, st: &StructureAt, kind: StructureKind) -> Vec<(String, f64)> {
    let n = g.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let phi = &st.phi;
    match kind {
        StructureKind::Complex => vec![
            ("J^2 = -Id".to_string(), (phi * phi + &id).amax()),
            ("g(JX,JY) = g(X,Y)".to_string(), (phi.transpose() * g * phi - g).amax()),
        ],
        StructureKind::AlmostContact => {
            let zero = DVector::zeros(n);
            let xi = st.xi.as_ref().unwrap_or(&zero);
            let eta = st.eta.as_ref().unwrap_or(&zero);
            let xe = xi * eta.transpose();
            let ee = eta * eta.transpose();
            vec![
                ("eta(xi) = 1".to_string(), (eta.dot(xi) - 1.0).abs()),
                ("phi^2 = -Id + eta (x) xi".to_string(), (phi * phi + &id - &xe).amax()),
                ("phi xi = 0".to_string(), (phi * xi).amax()),
                ("eta o phi = 0".to_string(), (phi.transpose() * eta).amax()),
                (
                    "g(phi X, phi Y) = g(X,Y) - eta(X)eta(Y)".to_string(),
                    (phi.transpose() * g * phi - g + &ee).amax(),
                ),
            ]
        }
    }
}

pub fn validate_structure(setup: &SubmersionSetup, points: &[Vec<f64>]) -> Result<StructureReport> {
    let st = setup
        .structure
        .as_ref()
        .ok_or_else(|| Error::MissingStructure("structure validation".into()))?;
    let tol = setup.tol.struct_tol;
    let mut worst: Vec<(String, f64)> = Vec::new();
    for p in points {
        let g = setup.g1.eval(p)?;
        let at = st.at(p)?;
        let res = structure_residuals(&g, &at, st.kind);
        if worst.is_empty() {
            worst = res;
        } else {
            for (w, (_, v)) in worst.iter_mut().zip(res) {
                w.1 = w.1.max(v);
            }
        }
    }
    let axioms: Vec<AxiomResidual> = worst
        .into_iter()
        .map(|(axiom, residual)| AxiomResidual {
            axiom,
            residual,
            pass: residual < tol,
        })
        .collect();
    Ok(StructureReport {
        pass: axioms.iter().all(|a| a.pass),
        axioms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Real,
    Complex,
    GeneralizedSasakian,
}

/// Space-form model. The almost contact families of Table 1 resolve to
/// generalized Sasakian constants (c₁, c₂, c₃).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpaceFormModel {
    Real { c: f64 },
    Complex { c: f64 },
    GeneralizedSasakian { c1: f64, c2: f64, c3: f64 },
    Sasakian { c: f64 },
    Kenmotsu { c: f64 },
    Cosymplectic { c: f64 },
    #[serde(rename = "c_alpha")]
    CAlpha { c: f64, alpha: f64 },
}

impl SpaceFormModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            SpaceFormModel::Real { .. } => ModelFamily::Real,
            SpaceFormModel::Complex { .. } => ModelFamily::Complex,
            _ => ModelFamily::GeneralizedSasakian,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpaceFormModel::Real { .. } => "real",
            SpaceFormModel::Complex { .. } => "complex",
            SpaceFormModel::GeneralizedSasakian { .. } => "generalized_sasakian",
            SpaceFormModel::Sasakian { .. } => "sasakian",
            SpaceFormModel::Kenmotsu { .. } => "kenmotsu",
            SpaceFormModel::Cosymplectic { .. } => "cosymplectic",
            SpaceFormModel::CAlpha { .. } => "c_alpha",
        }
    }

    /// (c₁, c₂, c₃) for the almost contact families.
    pub fn gssf_constants(&self) -> Option<(f64, f64, f64)> {
        match *self {
            SpaceFormModel::GeneralizedSasakian { c1, c2, c3 } => Some((c1, c2, c3)),
            SpaceFormModel::Sasakian { c } => Some(((c + 3.0) / 4.0, (c - 1.0) / 4.0, (c - 1.0) / 4.0)),
            SpaceFormModel::Kenmotsu { c } => Some(((c - 3.0) / 4.0, (c + 1.0) / 4.0, (c + 1.0) / 4.0)),
            SpaceFormModel::Cosymplectic { c } => Some((c / 4.0, c / 4.0, c / 4.0)),
            SpaceFormModel::CAlpha { c, alpha } => {
                let a2 = alpha * alpha;
                Some(((c + 3.0 * a2) / 4.0, (c - a2) / 4.0, (c - a2) / 4.0))
            }
            _ => None,
        }
    }

    pub fn needs_structure(&self) -> Option<StructureKind> {
        match self.family() {
            ModelFamily::Real => None,
            ModelFamily::Complex => Some(StructureKind::Complex),
            ModelFamily::GeneralizedSasakian => Some(StructureKind::AlmostContact),
        }
    }
}

/// g(R(Z₁,Z₂)Z₃, Z₄) for the model.
pub fn model_curvature(
    model: &SpaceFormModel,
    g: &DMatrix<f64>,
    st: Option<&StructureAt>,
    z: [&DVector<f64>; 4],
) -> Result<f64> {
    let gi = |a: &DVector<f64>, b: &DVector<f64>| inner(g, a, b);
    let [z1, z2, z3, z4] = z;
    let base = gi(z2, z3) * gi(z1, z4) - gi(z1, z3) * gi(z2, z4);
    let holo = |phi: &DMatrix<f64>| {
        let (p1, p2, p3) = (phi * z1, phi * z2, phi * z3);
        gi(z1, &p3) * gi(&p2, z4) - gi(z2, &p3) * gi(&p1, z4) + 2.0 * gi(z1, &p2) * gi(&p3, z4)
    };
    match model.family() {
        ModelFamily::Real => {
            let SpaceFormModel::Real { c } = *model else { unreachable!() };
            Ok(c * base)
        }
        ModelFamily::Complex => {
            let SpaceFormModel::Complex { c } = *model else { unreachable!() };
            let st = st.ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            Ok(c / 4.0 * (base + holo(&st.phi)))
        }
        ModelFamily::GeneralizedSasakian => {
            let (c1, c2, c3) = model.gssf_constants().expect("almost contact family");
            let st = st.ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let eta = st.eta.as_ref().ok_or_else(|| Error::MissingStructure(model.name().into()))?;
            let e = |v: &DVector<f64>| eta.dot(v);
            let contact = e(z1) * e(z3) * gi(z2, z4) - e(z2) * e(z3) * gi(z1, z4)
                + gi(z1, z3) * e(z2) * e(z4)
                - gi(z2, z3) * e(z1) * e(z4);
            Ok(c1 * base + c2 * holo(&st.phi) + c3 * contact)
        }
    }
}

/// Model tensor components on the given vectors.
pub fn model_tensor(
    model: &SpaceFormModel,
    g: &DMatrix<f64>,
    st: Option<&StructureAt>,
    basis: &[DVector<f64>],
) -> Result<CurvatureTensor> {
    if model.needs_structure().is_some() && st.is_none() {
        return Err(Error::MissingStructure(model.name().into()));
    }
    let k = basis.len();
    // structure presence was checked above, so evaluation cannot fail
    Ok(CurvatureTensor::from_fn(k, |a, b, c, d| {
        model_curvature(model, g, st, [&basis[a], &basis[b], &basis[c], &basis[d]]).unwrap_or(f64::NAN)
    }))
}

/// A g-orthonormal basis of the whole tangent space.
pub fn orthonormal_basis(g: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = g.nrows();
    let chol = g.clone().cholesky().ok_or(Error::NonPositiveDefinite {
        min_eigenvalue: g.clone().symmetric_eigenvalues().min(),
    })?;
    // columns of L^{-T} are g-orthonormal
    let l_inv_t = chol
        .l()
        .try_inverse()
        .ok_or(Error::NonPositiveDefinite { min_eigenvalue: 0.0 })?
        .transpose();
    Ok((0..n).map(|c| l_inv_t.column(c).into_owned()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: SpaceFormModel,
    pub residual: f64,
    pub per_point: Vec<f64>,
    pub pass: bool,
    pub tolerance: f64,
}

/// Largest |R − R^model| over orthonormal-frame quadruples.
pub fn model_fit_residual(
    g1: &MetricField,
    structure: Option<&StructureTensors>,
    p: &[f64],
    model: &SpaceFormModel,
) -> Result<f64> {
    let g = g1.eval(p)?;
    let r = riemann(g1, p)?;
    let st = match structure {
        Some(s) => Some(s.at(p)?),
        None => None,
    };
    if let Some(kind) = model.needs_structure() {
        match (&st, structure) {
            (Some(_), Some(s)) if s.kind == kind => {}
            _ => return Err(Error::MissingStructure(model.name().into())),
        }
    }
    let basis = orthonormal_basis(&g)?;
    let rb = r.in_basis(&basis);
    let mb = model_tensor(model, &g, st.as_ref(), &basis)?;
    Ok(rb.max_diff(&mb))
}

pub fn model_fit(setup: &SubmersionSetup, points: &[Vec<f64>], model: &SpaceFormModel) -> Result<FitReport> {
    let mut per_point = Vec::with_capacity(points.len());
    for p in points {
        per_point.push(model_fit_residual(&setup.g1, setup.structure.as_ref(), p, model)?);
    }
    let residual = per_point.iter().cloned().fold(0.0, f64::max);
    Ok(FitReport {
        model: *model,
        residual,
        pass: residual < setup.tol.fit_tol,
        tolerance: setup.tol.fit_tol,
        per_point,
    })
}

/// The P/Q decomposition of J or φ relative to the frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PQNorms {
    pub norm_q2: f64,
    pub norm_p2: f64,
    pub norm_pv2: f64,
    /// `qform[i][j]` = g(QVᵢ, Vⱼ).
    pub qform: Vec<Vec<f64>>,
    /// `pform[a][b]` = g(Ph_a, h_b).
    pub pform: Vec<Vec<f64>>,
    /// `pv[i][a]` = g(PVᵢ, h_a).
    pub pv: Vec<Vec<f64>>,
}

impl PQNorms {
    /// g(V₁, QV₂).
    pub fn v1_qv2(&self) -> f64 {
        self.qform[1][0]
    }

    /// g(h₁, Ph₂).
    pub fn h1_ph2(&self) -> f64 {
        self.pform[1][0]
    }
}

pub fn pq_norms_at(g: &DMatrix<f64>, phi: &DMatrix<f64>, frames: &FramePair) -> PQNorms {
    let v = &frames.vertical;
    let h = &frames.horizontal;
    let qform: Vec<Vec<f64>> = v
        .iter()
        .map(|vi| {
            let p = phi * vi;
            v.iter().map(|vj| inner(g, &p, vj)).collect()
        })
        .collect();
    let pform: Vec<Vec<f64>> = h
        .iter()
        .map(|ha| {
            let p = phi * ha;
            h.iter().map(|hb| inner(g, &p, hb)).collect()
        })
        .collect();
    let pv: Vec<Vec<f64>> = v
        .iter()
        .map(|vi| {
            let p = phi * vi;
            h.iter().map(|ha| inner(g, &p, ha)).collect()
        })
        .collect();
    let ss = |m: &Vec<Vec<f64>>| m.iter().flatten().map(|x| x * x).sum::<f64>();
    PQNorms {
        norm_q2: ss(&qform),
        norm_p2: ss(&pform),
        norm_pv2: ss(&pv),
        qform,
        pform,
        pv,
    }
}

pub fn pq_norms(setup: &SubmersionSetup, p: &[f64], frames: &FramePair) -> Result<PQNorms> {
    let st = setup
        .structure
        .as_ref()
        .ok_or_else(|| Error::MissingStructure("P/Q decomposition".into()))?;
    let g = setup.g1.eval(p)?;
    Ok(pq_norms_at(&g, &st.at(p)?.phi, frames))
}

/// η(x)² + η(y)².
pub fn eta_weight(eta: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    eta.dot(x).powi(2) + eta.dot(y).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiPlacement {
    Vertical,
    Horizontal,
}

/// Decide whether ξ is vertical or horizontal at a point.
pub fn classify_xi(
    g: &DMatrix<f64>,
    p_h: &DMatrix<f64>,
    xi: &DVector<f64>,
    align_tol: f64,
) -> Result<XiPlacement> {
    let hx = p_h * xi;
    let vx = xi - &hx;
    let (nh, nv) = (norm(g, &hx), norm(g, &vx));
    if nh < align_tol {
        Ok(XiPlacement::Vertical)
    } else if nv < align_tol {
        Ok(XiPlacement::Horizontal)
    } else {
        Err(Error::MixedStructureVector {
            horizontal: nh,
            vertical: nv,
        })
    }
}
