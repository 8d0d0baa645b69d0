//! Invariants of the geometry, quadrature, kernel and mesh layers.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use ifs_scatter::assembly::Problem;
use ifs_scatter::bessel::{j0, j1, y0, y1};
use ifs_scatter::builtin::{Example, KOCH_DEFAULT_H0};
use ifs_scatter::geom::{reflection, rotation, Similarity, Vec2};
use ifs_scatter::kernel::{phi_r, phi_star_r, WaveParams, C2};
use ifs_scatter::mesh::{build_lh_mesh, example_mesh, nested_restriction};
use ifs_scatter::postprocess::{angles, far_field_pattern};
use ifs_scatter::prefractal::{build_prefractal_mesh, prefractal_count};
use ifs_scatter::quadrature::template_rule;
use ifs_scatter::solve::{solve_problem, SolverOptions};

fn example(i: usize) -> Example {
    [Example::Fudgeflake, Example::Gosper, Example::Koch { h0: KOCH_DEFAULT_H0 }][i]
}

fn similarity() -> impl Strategy<Value = Similarity> {
    (0.05f64..2.0, 0.0..2.0 * PI, any::<bool>(), -3.0f64..3.0, -3.0f64..3.0).prop_map(|(rho, t, flip, x, y)| {
        let rot = if flip { reflection(t) } else { rotation(t) };
        Similarity::new(rho, rot, Vec2::new(x, y))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn similarity_group_laws(a in similarity(), b in similarity(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let p = Vec2::new(x, y);
        let ab = a.compose(&b);
        prop_assert!((ab.apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-11);
        prop_assert!((a.inverse().apply(&a.apply(&p)) - p).norm() < 1e-10);
        prop_assert!((ab.rho - a.rho * b.rho).abs() < 1e-12);
        let q = Vec2::new(y, -x);
        let d = (a.apply(&p) - a.apply(&q)).norm();
        prop_assert!((d - a.rho * (p - q).norm()).abs() < 1e-11);
    }

    #[test]
    fn barycentre_rule_is_exact_on_affine(ex in 0usize..3, frac in 0.02f64..1.0, c in -2.0f64..2.0, gx in -2.0f64..2.0, gy in -2.0f64..2.0) {
        let ifs = example(ex).attractor();
        let q = template_rule(&ifs, frac * ifs.diam()).unwrap();
        prop_assert!((q.total_weight() - ifs.measure()).abs() < 1e-12);
        let v = q.apply(|p| c + gx * p.x + gy * p.y);
        let x = ifs.barycentre();
        let exact = ifs.measure() * (c + gx * x.x + gy * x.y);
        prop_assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn mesh_cells_partition_the_measure(ex in 0usize..3, frac in 0.08f64..1.0) {
        let ifs = Arc::new(example(ex).attractor());
        let h = frac * ifs.diam();
        let mesh = build_lh_mesh(&ifs, h).unwrap();
        prop_assert!(mesh.max_diam() <= h * (1.0 + 1e-12));
        prop_assert!((mesh.total_measure() - ifs.measure()).abs() < 1e-12);
        for e in mesh.elements() {
            prop_assert!((ifs.compose(&e.word).unwrap().apply(&ifs.barycentre()) - e.node).norm() < 1e-12);
        }
    }

    #[test]
    fn bessel_wronskian(z in 0.01f64..60.0) {
        let w = j1(z).unwrap() * y0(z).unwrap() - j0(z).unwrap() * y1(z).unwrap();
        prop_assert!((w - 2.0 / (PI * z)).abs() < 1e-12 * (1.0 + 2.0 / (PI * z)));
    }

    #[test]
    fn kernel_splitting(k in 0.5f64..30.0, r in 1e-6f64..3.0) {
        let lhs = phi_r(k, r);
        let rhs = phi_star_r(k, r) + C2 * r.ln();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }
}

#[test]
fn phi_star_is_continuous_at_the_diagonal() {
    for k in [1.0, 5.0, 30.0] {
        let d = phi_star_r(k, 0.0);
        for r in [1e-7, 1e-5] {
            assert!((phi_star_r(k, r) - d).norm() < 10.0 * (k * r).powi(2) * (1.0 - (k * r).ln()));
        }
    }
}

#[test]
fn example_meshes_nest() {
    for i in 0..3 {
        let ex = example(i);
        let coarse = example_mesh(&ex, 2).unwrap();
        let fine = example_mesh(&ex, 3).unwrap();
        let parent = nested_restriction(&coarse, &fine).unwrap();
        let mut child_measure = vec![0.0; coarse.len()];
        for (j, &p) in parent.iter().enumerate() {
            child_measure[p] += fine.elements()[j].measure;
        }
        for (c, e) in child_measure.iter().zip(coarse.elements()) {
            assert!((c - e.measure).abs() < 1e-13);
        }
    }
}

#[test]
fn prefractal_area_deficit_shrinks_by_four_ninths() {
    let koch_area = Example::koch().attractor().measure();
    let deficits: Vec<f64> = (1..=5)
        .map(|j| {
            let pm = build_prefractal_mesh(j, KOCH_DEFAULT_H0).unwrap();
            assert_eq!(pm.len() as u64, prefractal_count(j));
            koch_area - pm.area()
        })
        .collect();
    for w in deficits.windows(2) {
        assert!((w[1] / w[0] - 4.0 / 9.0).abs() < 1e-10, "{}", w[1] / w[0]);
    }
}

#[test]
fn koch_far_field_is_mirror_symmetric() {
    // Incidence along the snowflake's axis of symmetry x = 0.
    let ex = Example::koch();
    let params = WaveParams::plane_wave(5.0, Complex64::new(1.0, 0.0), [0.0, 1.0]).unwrap();
    let p = Problem::new(example_mesh(&ex, 4).unwrap(), Some(ex), params, 2, None).unwrap();
    let r = solve_problem(&p, &SolverOptions::default()).unwrap();
    let thetas = angles(36);
    let mirrored: Vec<f64> = thetas.iter().map(|t| (PI - t).rem_euclid(2.0 * PI)).collect();
    let a = far_field_pattern(&p, &r.coefficients, &thetas).unwrap();
    let b = far_field_pattern(&p, &r.coefficients, &mirrored).unwrap();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-8 * scale);
    }
}

#[test]
fn triangle_self_integral_matches_graded_refinement() {
    use ifs_scatter::ifs::equilateral_triangle;
    use ifs_scatter::singular::{graded_log_integral, CanonicalSystem, ClosureOptions};
    let tri = Arc::new(equilateral_triangle(1.0));
    let id = Similarity::identity();
    let sys = CanonicalSystem::derive_covering(&tri, &[(id, id)], ClosureOptions::default()).unwrap();
    let canonical = sys.log_integral(&id, &id, tri.diam() / 64.0).unwrap();
    let graded = graded_log_integral(&tri, &id, &id, 12, 0.05).unwrap();
    assert!((canonical - graded).abs() < 1e-6, "{canonical} vs {graded}");
}
