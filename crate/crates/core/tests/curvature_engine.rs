mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{grassmannian_grid_extremes, s2xs2_metric};
use submersion_core::catalog;
use submersion_core::expr::parse_expression;
use submersion_core::invariants::{extremal_sectional_tensor, Extremum};
use submersion_core::metric::{christoffel, riemann, CurvatureTensor, DerivativeMode, Domain, MetricField};

fn diagonal(entries: &[&str], mode: DerivativeMode) -> MetricField {
    let n = entries.len();
    let mut table = Vec::with_capacity(n * n);
    for (i, entry) in entries.iter().enumerate() {
        for j in 0..n {
            table.push(parse_expression(if i == j { entry } else { "0" }).unwrap());
        }
    }
    MetricField::from_expressions(n, table, mode, Domain::unrestricted()).unwrap()
}

fn coordinate_sectional(t: &CurvatureTensor, g: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let n = g.nrows();
    let e = |k: usize| DVector::from_fn(n, |r, _| if r == k { 1.0 } else { 0.0 });
    t.sectional(g, &e(i), &e(j)).unwrap()
}

#[test]
fn flat_metrics_have_no_curvature() {
    for mode in [DerivativeMode::Analytic, DerivativeMode::CentralDifference] {
        // polar coordinates on R³ and a constant skew metric
        let polar = diagonal(&["1", "x1^2", "x1^2*sin(x2)^2"], mode);
        assert!(riemann(&polar, &[1.3, 0.7, 0.2]).unwrap().max_abs() < 1e-7);
        let c = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        assert!(riemann(&MetricField::constant(c).with_mode(mode), &[0.1, 0.2, 0.3]).unwrap().max_abs() < 1e-7);
    }
}

#[test]
fn round_spheres_have_unit_curvature() {
    for mode in [DerivativeMode::Analytic, DerivativeMode::CentralDifference] {
        let s3 = diagonal(&["1", "sin(x1)^2", "sin(x1)^2*sin(x2)^2"], mode);
        let p = [1.1, 0.8, 0.3];
        let t = riemann(&s3, &p).unwrap();
        let g = s3.eval(&p).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let k = coordinate_sectional(&t, &g, i, j);
            assert!((k - 1.0).abs() < 1e-5, "{mode:?} K({i},{j}) = {k}");
        }
        let stereo = diagonal(&["4/(1+x1^2+x2^2)^2", "4/(1+x1^2+x2^2)^2"], mode);
        let p = [0.4, -1.3];
        let k = coordinate_sectional(&riemann(&stereo, &p).unwrap(), &stereo.eval(&p).unwrap(), 0, 1);
        assert!((k - 1.0).abs() < 1e-5, "{mode:?} stereographic K = {k}");
    }
}

#[test]
fn riemann_symmetries_on_a_generic_metric() {
    let g = MetricField::from_expressions(
        3,
        ["1+x2^2", "x1*x3/5", "0", "x1*x3/5", "exp(x3)", "sin(x1)/4", "0", "sin(x1)/4", "2+cos(x2)"]
            .iter()
            .map(|s| parse_expression(s).unwrap())
            .collect(),
        DerivativeMode::Analytic,
        Domain::unrestricted(),
    )
    .unwrap();
    let t = riemann(&g, &[0.3, -0.5, 0.2]).unwrap();
    assert!(t.max_abs() > 1e-2);
    assert!(t.antisymmetry_residual() < 1e-12);
    assert!(t.pair_symmetry_residual() < 1e-12);
    assert!(t.bianchi_residual() < 1e-12);
    let fd = riemann(&g.with_mode(DerivativeMode::CentralDifference), &[0.3, -0.5, 0.2]).unwrap();
    assert!(t.max_diff(&fd) < 1e-6);
}

#[test]
fn girmednh_christoffel_symbols_in_difference_mode() {
    let cfg = catalog::load("girmednh").unwrap();
    let g = cfg.setup.g1.with_mode(DerivativeMode::CentralDifference);
    let gamma = christoffel(&g, &[0.0; 6]).unwrap();
    // g11 = exp(2 x4), g22 = exp(2 x6), g44 = exp(2 x6), g66 = exp(2 x4)
    let expected = [
        ((3, 0, 0), -1.0),
        ((0, 0, 3), 1.0),
        ((5, 1, 1), -1.0),
        ((1, 1, 5), 1.0),
        ((5, 3, 3), -1.0),
        ((3, 3, 5), 1.0),
        ((3, 5, 5), -1.0),
        ((5, 5, 3), 1.0),
        ((2, 2, 2), 0.0),
    ];
    for ((k, i, j), v) in expected {
        assert!((gamma.gamma(k, i, j) - v).abs() < 1e-6, "Γ^{}_{}{} = {}", k + 1, i + 1, j + 1, gamma.gamma(k, i, j));
    }
    assert!(gamma.symmetry_residual() < 1e-12);
}

#[test]
fn s2xs2_extremes_match_grid() {
    let field = s2xs2_metric();
    let p = [1.0, 0.4, 0.7, -0.9];
    let t = riemann(&field, &p).unwrap();
    let basis = submersion_core::space_forms::orthonormal_basis(&field.eval(&p).unwrap()).unwrap();
    let t = t.in_basis(&basis);
    let inf = extremal_sectional_tensor(&t, Extremum::Inf).unwrap();
    let sup = extremal_sectional_tensor(&t, Extremum::Sup).unwrap();
    let (lo, hi) = grassmannian_grid_extremes(&t, std::f64::consts::PI / 30.0);
    assert!((inf.value - lo).abs() < 1e-4 && inf.value.abs() < 1e-4, "inf {} grid {lo}", inf.value);
    assert!((sup.value - hi).abs() < 1e-4 && (sup.value - 1.0).abs() < 1e-4, "sup {} grid {hi}", sup.value);
    // returned planes are orthonormal and realize the value
    for plane in [&inf, &sup] {
        let [x, y] = &plane.plane;
        assert!((x.norm() - 1.0).abs() < 1e-9 && (y.norm() - 1.0).abs() < 1e-9 && x.dot(y).abs() < 1e-9);
        let k = t.sectional(&DMatrix::identity(4, 4), x, y).unwrap();
        assert!((k - plane.value).abs() < 1e-9);
    }
}

#[test]
fn optimizer_never_beats_the_grid_on_rotated_frames() {
    let field = s2xs2_metric();
    let p = [0.8, 0.1, 1.9, 0.5];
    let t = riemann(&field, &p).unwrap();
    let basis = submersion_core::space_forms::orthonormal_basis(&field.eval(&p).unwrap()).unwrap();
    let q = DMatrix::from_row_slice(4, 4, &[0.3, 1.0, -0.4, 0.2, 0.9, -0.2, 0.5, 0.1, -0.1, 0.4, 1.1, 0.7, 0.6, 0.3, 0.2, -1.2])
        .qr()
        .q();
    let rotated: Vec<DVector<f64>> = (0..4)
        .map(|k| {
            let mut v = DVector::zeros(4);
            for (b, c) in basis.iter().zip(q.column(k).iter()) {
                v += b * *c;
            }
            v
        })
        .collect();
    let t = t.in_basis(&rotated);
    let inf = extremal_sectional_tensor(&t, Extremum::Inf).unwrap().value;
    let sup = extremal_sectional_tensor(&t, Extremum::Sup).unwrap().value;
    let (lo, hi) = grassmannian_grid_extremes(&t, std::f64::consts::PI / 30.0);
    // a grid only approximates from inside
    assert!(inf <= lo + 1e-12 && sup >= hi - 1e-12);
    assert!(inf.abs() < 1e-6 && (sup - 1.0).abs() < 1e-6);
}

#[test]
fn optimizer_rejects_low_dimensions() {
    let t = CurvatureTensor::zeros(1);
    assert!(extremal_sectional_tensor(&t, Extremum::Sup).is_err());
}

fn constant_curvature(n: usize, c: f64) -> CurvatureTensor {
    CurvatureTensor::from_fn(n, |i, j, k, l| {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        c * (d(j, k) * d(i, l) - d(i, k) * d(j, l))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn extremes_bracket_every_plane(raw in prop::collection::vec(-1.0f64..1.0, 10), c in -2.0f64..2.0, w in 0.1f64..2.0) {
        // constant curvature plus a rank-one bump along e1∧e2
        let n = 5;
        let base = constant_curvature(n, c);
        let bump = CurvatureTensor::from_fn(n, |i, j, k, l| {
            let s = |a: usize, b: usize| match (a, b) { (0, 1) => 1.0, (1, 0) => -1.0, _ => 0.0 };
            w * s(i, j) * s(l, k)
        });
        let t = CurvatureTensor::from_fn(n, |i, j, k, l| base.get(i, j, k, l) + bump.get(i, j, k, l));
        let inf = extremal_sectional_tensor(&t, Extremum::Inf).unwrap().value;
        let sup = extremal_sectional_tensor(&t, Extremum::Sup).unwrap().value;
        prop_assert!((inf - c).abs() < 1e-6);
        prop_assert!((sup - (c + w)).abs() < 1e-6);
        let x = DVector::from_column_slice(&raw[..5]);
        let y = DVector::from_column_slice(&raw[5..]);
        if let Some(k) = t.sectional(&DMatrix::identity(n, n), &x, &y) {
            prop_assert!(k >= inf - 1e-9 && k <= sup + 1e-9);
        }
    }
}

