//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use submersion_core::chen::PointAnalysis;
use submersion_core::config::RunConfig;
use submersion_core::invariants::{induced_horizontal_curvature, induced_vertical_curvature, mixed_curvature, mixed_direct};
use submersion_core::metric::{riemann, CurvatureTensor, Domain, MetricField};
use submersion_core::submersion::{SubmersionSetup, VectorFn};

pub fn analysis(cfg: &RunConfig, idx: usize) -> PointAnalysis {
    PointAnalysis::new(&cfg.setup, idx, &cfg.points()[idx]).expect("geometry")
}

fn coef(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    (rng.gen_range(-scale..scale) * 1e6).round() / 1e6
}

fn linear(c: &[f64], var: &str, offset: usize) -> String {
    let mut s = String::from("0");
    for (k, v) in c.iter().enumerate() {
        s.push_str(&format!(" + ({v})*{var}{}", k + 1 + offset));
    }
    s
}

/// Twisted warped product with a twisted horizontal distribution:
///
/// g = Σ βᵢ(x) dxᵢ² + Σ λₐ(x,u) (duₐ + Σᵢ wₐᵢ(x) dxᵢ)²
///
/// with βᵢ = exp(2 bᵢ·x), λₐ = exp(2(pₐ·x + qₐ x₁x_m + sₐ·u)) and wₐᵢ linear
/// in x, projected onto x with base metric Σ βᵢ dyᵢ². The coordinates are
/// x₁..x_m followed by u₁..u_r.
pub struct WarpedCase {
    pub m: usize,
    pub r: usize,
    pub config: RunConfig,
    pub point: Vec<f64>,
}

pub fn warped_case(seed: u64) -> WarpedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)];
    let (m, r) = shapes[rng.gen_range(0..shapes.len())];
    let n = m + r;
    let bcoef: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| coef(&mut rng, 0.5)).collect()).collect();
    let beta: Vec<String> = bcoef.iter().map(|b| format!("exp(2*({}))", linear(b, "x", 0))).collect();
    let lambda: Vec<String> = (0..r)
        .map(|_| {
            let p: Vec<f64> = (0..m).map(|_| coef(&mut rng, 0.6)).collect();
            let q = coef(&mut rng, 0.4);
            let s: Vec<f64> = (0..r).map(|_| coef(&mut rng, 0.5)).collect();
            format!(
                "exp(2*({} + ({q})*x1*x{m} + {}))",
                linear(&p, "x", 0),
                linear(&s, "x", m)
            )
        })
        .collect();
    let w: Vec<Vec<String>> = (0..r)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let c: Vec<f64> = (0..m).map(|_| coef(&mut rng, 0.5)).collect();
                    format!("({})", linear(&c, "x", 0))
                })
                .collect()
        })
        .collect();

    let mut g = vec![vec![Value::Null; n]; n];
    for i in 0..m {
        for j in i..m {
            let mut e = if i == j { beta[i].clone() } else { "0".to_string() };
            for a in 0..r {
                e.push_str(&format!(" + {}*{}*{}", lambda[a], w[a][i], w[a][j]));
            }
            g[i][j] = json!(e);
        }
        for a in 0..r {
            g[i][m + a] = json!(format!("{}*{}", lambda[a], w[a][i]));
        }
    }
    for a in 0..r {
        g[m + a][m + a] = json!(lambda[a].clone());
    }
    let base: Vec<String> = bcoef.iter().map(|b| format!("exp(2*({}))", linear(b, "y", 0))).collect();
    let map: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let point: Vec<f64> = (0..n).map(|_| coef(&mut rng, 0.4)).collect();
    let text = json!({
        "name": format!("warped_{seed}"),
        "n": n,
        "m": m,
        "metric_total": g,
        "metric_base": { "diagonal": base },
        "map": map,
        "points": [point.clone()],
        "theorems": ["thm31", "thm41"],
    });
    let config = RunConfig::from_json(&text.to_string()).expect("warped config");
    WarpedCase { m, r, config, point }
}

/// Intrinsic curvature of the fiber through p, in the basis `vertical`.
///
/// The fiber is charted as φ(u) = p + B u + C w(u) with B the vertical
/// vectors, C the horizontal ones and w(u) solving F(φ(u)) = F(p) by Newton.
/// Its metric Dφᵀ g Dφ is differentiated by central differences, so none of
/// the O'Neill machinery is involved.
pub fn fiber_chart_curvature(
    setup: &SubmersionSetup,
    p: &[f64],
    vertical: &[DVector<f64>],
    horizontal: &[DVector<f64>],
) -> CurvatureTensor {
    let r = vertical.len();
    let b = DMatrix::from_columns(vertical);
    let c = DMatrix::from_columns(horizontal);
    let p0 = DVector::from_column_slice(p);
    let target = setup.map.value(p).expect("map at p");
    let g1 = setup.g1.clone();
    let map = setup.map.clone();
    let chart = move |u: &[f64]| -> DMatrix<f64> {
        let u = DVector::from_column_slice(u);
        let mut w = DVector::zeros(c.ncols());
        let mut x = &p0 + &b * &u;
        for _ in 0..50 {
            x = &p0 + &b * &u + &c * &w;
            let f = map.value(x.as_slice()).expect("map") - &target;
            if f.amax() < 1e-15 {
                break;
            }
            let jc = map.jacobian(x.as_slice()).expect("jacobian") * &c;
            let dw = jc.lu().solve(&f).expect("JC invertible");
            w -= dw;
        }
        let j = map.jacobian(x.as_slice()).expect("jacobian");
        let jc = &j * &c;
        let dphi = &b - &c * jc.lu().solve(&(&j * &b)).expect("JC invertible");
        let g = g1.eval(x.as_slice()).expect("metric");
        dphi.transpose() * g * dphi
    };
    let field = MetricField::from_fn(r, Arc::new(move |u| Ok(chart(u))), Domain::unrestricted());
    riemann(&field, &vec![0.0; r]).expect("fiber curvature")
}

/// Base curvature at F(p) evaluated on pushforwards of `horizontal`.
pub fn base_curvature_on(setup: &SubmersionSetup, p: &[f64], horizontal: &[DVector<f64>]) -> CurvatureTensor {
    let q = setup.map.value(p).expect("map");
    let r2 = riemann(&setup.g2, q.as_slice()).expect("base curvature");
    let j = setup.map.jacobian(p).expect("jacobian");
    let pushed: Vec<DVector<f64>> = horizontal.iter().map(|h| &j * h).collect();
    r2.in_basis(&pushed)
}

/// Sectional curvature of a 4-dimensional tensor (orthonormal basis) over
/// a grid of Gr(2,4). Unit decomposable bivectors are (α ⊕ β)/√2 with α, β
/// unit vectors of the self-dual and anti-self-dual parts; each sphere is
/// sampled on a latitude/longitude grid of the given angular step.
pub fn grassmannian_grid_extremes(t: &CurvatureTensor, step: f64) -> (f64, f64) {
    assert_eq!(t.dim(), 4);
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    // bivector quadratic form: K(ω) = ¼ Σ R_ijkl ω_ij ω_lk, both orders of each pair
    let mut q = DMatrix::<f64>::zeros(6, 6);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            q[(a, b)] = t.get(i, j, l, k);
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // columns: self-dual basis, then anti-self-dual, in the pair ordering above
    let f = DMatrix::from_row_slice(6, 3, &[s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s, 0.0, 0.0, s, 0.0, -s, 0.0, s, 0.0, 0.0]);
    let g = DMatrix::from_row_slice(6, 3, &[s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s, 0.0, 0.0, -s, 0.0, s, 0.0, -s, 0.0, 0.0]);
    let aa = f.transpose() * &q * &f;
    let ab = f.transpose() * &q * &g;
    let bb = g.transpose() * &q * &g;
    let sphere: Vec<DVector<f64>> = {
        let nt = (std::f64::consts::PI / step).round() as usize;
        let np = (2.0 * std::f64::consts::PI / step).round() as usize;
        let mut pts = Vec::new();
        for it in 0..=nt {
            let th = it as f64 * step;
            let phis = if it == 0 || it == nt { 1 } else { np };
            for ip in 0..phis {
                let ph = ip as f64 * step;
                pts.push(DVector::from_vec(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
            }
        }
        pts
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in &sphere {
        let qa = a.dot(&(&aa * a));
        let la = ab.transpose() * a;
        for b in &sphere {
            let k = 0.5 * (qa + 2.0 * la.dot(b) + b.dot(&(&bb * b)));
            lo = lo.min(k);
            hi = hi.max(k);
        }
    }
    (lo, hi)
}

/// S² × S² in the product of two polar charts.
pub fn s2xs2_metric() -> MetricField {
    let f: submersion_core::metric::MatrixFn = Arc::new(|x: &[f64]| {
        Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0,
            x[0].sin().powi(2),
            1.0,
            x[2].sin().powi(2),
        ])))
    });
    MetricField::from_fn(4, f, Domain::unrestricted())
}

/// A map given by a closure, for tests that need one.
pub fn closure_map(n: usize, m: usize, f: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> submersion_core::submersion::SmoothMap {
    let f: VectorFn = Arc::new(move |x| Ok(f(x)));
    submersion_core::submersion::SmoothMap::from_fn(n, m, f)
}

/// Heisenberg group H⁵ with its standard Sasakian structure of
/// φ-sectional curvature −3, projected onto (x₁, y₁). Coordinates are
/// (x₁, x₂, y₁, y₂, z), η = ½(dz − y₁dx₁ − y₂dx₂), ξ = 2∂z and
/// g = ¼(dx² + dy²) + η⊗η. The fibers are 3-dimensional and contain ξ.
pub fn heisenberg_json(points: &[[f64; 5]], theorems: &[&str]) -> String {
    let eta = ["-x3/2", "-x4/2", "0", "0", "1/2"];
    let flat = [0.25, 0.25, 0.25, 0.25, 0.0];
    let mut g = vec![vec![Value::Null; 5]; 5];
    for i in 0..5 {
        for j in i..5 {
            let d = if i == j { flat[i] } else { 0.0 };
            g[i][j] = json!(format!("{d} + ({})*({})", eta[i], eta[j]));
        }
    }
    let phi = json!([
        [0, 0, 1, 0, 0],
        [0, 0, 0, 1, 0],
        [-1, 0, 0, 0, 0],
        [0, -1, 0, 0, 0],
        [0, 0, "x3", "x4", 0]
    ]);
    json!({
        "name": "heisenberg",
        "n": 5,
        "m": 2,
        "metric_total": g,
        "metric_base": { "diagonal": [0.25, 0.25] },
        "map": ["x1", "x3"],
        "structure": { "kind": "almost_contact", "matrix": phi, "xi": [0, 0, 0, 0, 2], "eta": eta },
        "model": { "family": "sasakian", "c": -3.0 },
        "points": points,
        "theorems": theorems,
    })
    .to_string()
}

/// Fubini-Study metric on the affine chart C³ ⊂ CP³ (holomorphic sectional
/// curvature 4) in real coordinates (a₁, b₁, a₂, b₂, a₃, b₃), wₖ = aₖ + i bₖ,
/// with the coordinate projection onto (a₁, b₁, a₂). The projection is not
/// a Riemannian submersion; the space-form side does not need it to be.
pub fn fubini_study_json(points: &[[f64; 6]], theorems: &[&str]) -> String {
    let a = |k: usize| format!("x{}", 2 * k + 1);
    let b = |k: usize| format!("x{}", 2 * k + 2);
    let s = "(1 + x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2)";
    let re = |j: usize, k: usize| {
        let d = if j == k { s } else { "0" };
        format!("({d} - ({}*{} + {}*{}))/{s}^2", a(j), a(k), b(j), b(k))
    };
    // B_jk = −(b_j a_k − a_j b_k)/S²
    let im = |j: usize, k: usize| format!("(-({}*{} - {}*{}))/{s}^2", b(j), a(k), a(j), b(k));
    let mut g = vec![vec![Value::Null; 6]; 6];
    for j in 0..3 {
        for k in 0..3 {
            let (aj, bj, ak, bk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            if aj <= ak {
                g[aj][ak] = json!(re(j, k));
                g[bj][bk] = json!(re(j, k));
            }
            // g(∂a_j, ∂b_k) = −B_jk
            if aj <= bk {
                g[aj][bk] = json!(format!("-({})", im(j, k)));
            }
            if bj <= ak {
                g[bj][ak] = json!(im(j, k));
            }
        }
    }
    let mut phi = vec![vec![json!(0); 6]; 6];
    for k in 0..3 {
        // J ∂a = ∂b, J ∂b = −∂a; column j is the image of ∂_j
        phi[2 * k + 1][2 * k] = json!(1);
        phi[2 * k][2 * k + 1] = json!(-1);
    }
    json!({
        "name": "fubini_study_cp3",
        "n": 6,
        "m": 3,
        "metric_total": g,
        "metric_base": { "diagonal": [1, 1, 1] },
        "map": ["x1", "x2", "x3"],
        "structure": { "kind": "complex", "matrix": phi },
        "model": { "family": "complex", "c": 4.0 },
        "points": points,
        "theorems": theorems,
    })
    .to_string()
}

/// Random lemma instance: a ∈ [−5, 5]^k and b from the constraint.
pub fn random_lemma_a(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect()
}

/// Largest residual of the three fundamental equations at the point of
/// a configuration, each against an independent computation.
pub fn equation_residuals(cfg: &RunConfig, idx: usize) -> [f64; 3] {
    let an = analysis(cfg, idx);
    let (v, h) = (&an.frames.vertical, &an.frames.horizontal);
    let p = &cfg.points()[idx];

    let fiber = fiber_chart_curvature(&cfg.setup, p, v, h);
    let mut r10: f64 = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            for k in 0..v.len() {
                for l in 0..v.len() {
                    let gauss = induced_vertical_curvature(&an.geom, [&v[i], &v[j], &v[k], &v[l]]);
                    r10 = r10.max((gauss - fiber.get(i, j, k, l)).abs());
                }
            }
        }
    }

    let base = base_curvature_on(&cfg.setup, p, h);
    let mut r11: f64 = 0.0;
    for a in 0..h.len() {
        for b in 0..h.len() {
            for c in 0..h.len() {
                for d in 0..h.len() {
                    let lifted = induced_horizontal_curvature(&an.geom, [&h[a], &h[b], &h[c], &h[d]]);
                    r11 = r11.max((lifted - base.get(a, b, c, d)).abs());
                }
            }
        }
    }

    let mut r12: f64 = 0.0;
    for z1 in h {
        for z2 in h {
            for f1 in v {
                for f2 in v {
                    let lhs = mixed_curvature(&an.geom, z1, f1, z2, f2);
                    r12 = r12.max((lhs - mixed_direct(&an.geom, z1, f1, z2, f2)).abs());
                }
            }
        }
    }
    [r10, r11, r12]
}
