mod common;

use nalgebra::DVector;

use common::{analysis, equation_residuals, fiber_chart_curvature, warped_case};
use submersion_core::catalog;
use submersion_core::invariants::{induced_vertical_curvature, mixed_curvature, mixed_direct, split_curvature};
use submersion_core::oneill::oneill_residuals;

#[test]
fn warped_products_satisfy_all_three_equations() {
    for seed in 100..106 {
        let case = warped_case(seed);
        let res = equation_residuals(&case.config, 0);
        for (k, r) in res.iter().enumerate() {
            assert!(*r < 1e-5, "seed {seed} (m={}, r={}) equation {k}: {r:e}", case.m, case.r);
        }
    }
}

#[test]
fn warped_products_have_nontrivial_tensors() {
    // a vacuous oracle would pass with T = A = 0
    let mut t_seen = false;
    let mut a_seen = false;
    for seed in 0..20 {
        let case = warped_case(seed);
        let an = analysis(&case.config, 0);
        let d = submersion_core::oneill::oneill_data(&an.geom, &an.frames);
        t_seen |= d.norm_th2 > 1e-3;
        a_seen |= d.norm_av2 > 1e-3;
        assert!(oneill_residuals(&an.geom, &an.frames).max() < 1e-6);
    }
    assert!(t_seen && a_seen);
}

#[test]
fn warped_products_are_riemannian_submersions() {
    for seed in 0..5 {
        let case = warped_case(seed);
        let r = submersion_core::submersion::submersion_residual(&case.config.setup, &case.point).unwrap();
        assert!(r < 1e-10, "seed {seed}: {r:e}");
    }
}

#[test]
fn hopf_fibers_are_round_spheres() {
    let cfg = catalog::load("hopf_s7_s4").unwrap();
    for idx in 0..cfg.points().len() {
        let res = equation_residuals(&cfg, idx);
        assert!(res.iter().all(|r| *r < 1e-5), "point {idx}: {res:?}");
        // fibers are totally geodesic great 3-spheres and the base has curvature 4
        let an = analysis(&cfg, idx);
        let split = split_curvature(&an.geom, &an.frames);
        assert!((split.vertical_ker.get(0, 1, 1, 0) - 1.0).abs() < 1e-6);
        assert!((split.horizontal_perp.get(0, 1, 1, 0) - 4.0).abs() < 1e-6);
    }
}

#[test]
fn girmednh_equations_hold_with_bent_fibers() {
    let cfg = catalog::load("girmednh").unwrap();
    let an = analysis(&cfg, 0);
    let v = &an.frames.vertical;
    let fiber = fiber_chart_curvature(&cfg.setup, &cfg.points()[0], v, &an.frames.horizontal);
    for i in 0..v.len() {
        for j in 0..v.len() {
            let gauss = induced_vertical_curvature(&an.geom, [&v[i], &v[j], &v[j], &v[i]]);
            assert!((gauss - fiber.get(i, j, j, i)).abs() < 1e-5);
        }
    }
    let z: Vec<DVector<f64>> = an.frames.horizontal.clone();
    for z1 in &z {
        for f1 in v {
            let lhs = mixed_curvature(&an.geom, z1, f1, z1, f1);
            assert!((lhs - mixed_direct(&an.geom, z1, f1, z1, f1)).abs() < 1e-6);
        }
    }
}
