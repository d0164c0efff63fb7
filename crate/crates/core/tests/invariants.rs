use std::f64::consts::PI;

use flexspec_core::fedosov::coefficients;
use flexspec_core::surface::shapes::{corner_tetrahedron, cuboid, polygon};
use flexspec_core::{hausdorff_distance, BoundaryCondition, SimplicialSurface};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn convex_polygon(angles: &[f64], radii: &[f64]) -> SimplicialSurface {
    let mut a: Vec<f64> = angles.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let pts: Vec<[f64; 2]> = a.iter().zip(radii).map(|(t, r)| [r * t.cos(), r * t.sin()]).collect();
    polygon(&pts).unwrap()
}

fn polygon_strategy() -> impl Strategy<Value = SimplicialSurface> {
    // one vertex per sector keeps the hull convex when radii are equal
    (3usize..9).prop_flat_map(|n| {
        (prop::collection::vec(0.05f64..0.95, n), 0.5f64..3.0).prop_map(move |(jit, r)| {
            let angles: Vec<f64> = jit.iter().enumerate().map(|(i, j)| 2.0 * PI * (i as f64 + j) / n as f64).collect();
            convex_polygon(&angles, &vec![r; n])
        })
    })
}

fn tetra_strategy() -> impl Strategy<Value = SimplicialSurface> {
    prop::array::uniform4(prop::array::uniform3(-2.0f64..2.0))
        .prop_filter("non-degenerate", |p| {
            let e = |i: usize| Vector3::new(p[i][0] - p[0][0], p[i][1] - p[0][1], p[i][2] - p[0][2]);
            e(1).cross(&e(2)).dot(&e(3)).abs() > 0.05
        })
        .prop_map(|p| {
            let t = corner_tetrahedron();
            let mut s = t.map_vertices(|x| {
                let i = x.iter().position(|&c| c == 1.0).map_or(0, |k| k + 1);
                p[i].to_vec()
            })
            .unwrap();
            if s.oriented_volume() < 0.0 {
                s = s.reversed();
            }
            s
        })
}

fn body_strategy() -> impl Strategy<Value = SimplicialSurface> {
    prop_oneof![
        tetra_strategy(),
        (0.2f64..3.0, 0.2f64..3.0, 0.2f64..3.0).prop_map(|(a, b, c)| cuboid(a, b, c)),
    ]
}

fn rigid(s: &SimplicialSurface, axis: [f64; 3], angle: f64, shift: [f64; 3]) -> SimplicialSurface {
    let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::from(axis)), angle);
    s.map_vertices(|x| {
        let y = r * Vector3::new(x[0], x[1], x[2]);
        vec![y[0] + shift[0], y[1] + shift[1], y[2] + shift[2]]
    })
    .unwrap()
}

fn scaled(s: &SimplicialSurface, l: f64) -> SimplicialSurface {
    s.map_vertices(|x| x.iter().map(|c| c * l).collect()).unwrap()
}

fn axis() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter("axis", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.01)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_negates_volume(s in prop_oneof![body_strategy(), polygon_strategy()]) {
        let v = s.oriented_volume();
        prop_assert!((s.reversed().oriented_volume() + v).abs() <= 1e-14 * v.abs().max(1.0));
    }

    #[test]
    fn rigid_motion_invariance(s in body_strategy(), a in axis(), t in -PI..PI, sh in prop::array::uniform3(-5.0f64..5.0)) {
        let m = rigid(&s, a, t, sh);
        prop_assert!((m.oriented_volume() - s.oriented_volume()).abs() < 1e-12 * s.diameter().powi(3).max(1.0));
        prop_assert!((m.surface_area() - s.surface_area()).abs() < 1e-12 * s.diameter().powi(2).max(1.0));
        for (x, y) in m.dihedral_angles().iter().zip(s.dihedral_angles()) {
            prop_assert!((x.angle - y.angle).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_are_homogeneous(s in body_strategy(), l in 0.2f64..5.0) {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let c = coefficients(&s, bc).unwrap();
            let cl = coefficients(&scaled(&s, l), bc).unwrap();
            for k in 1..=3 {
                let (x, y) = (c.get(k).unwrap(), cl.get(k).unwrap());
                prop_assert!((y - l.powi(k as i32) * x).abs() <= 1e-10 * y.abs().max(1e-12), "a_{k}");
            }
        }
    }

    #[test]
    fn convex_bodies_have_positive_curvature(s in body_strategy()) {
        let h = s.integral_mean_curvature().unwrap();
        prop_assert!(h > 0.0);
        prop_assert!(s.dihedral_angles().iter().all(|d| d.angle <= PI + 1e-12));
    }

    #[test]
    fn convex_polygon_turning(s in polygon_strategy()) {
        // exterior angles of a convex polygon sum to 2π
        let turn: f64 = s.dihedral_angles().iter().map(|d| PI - d.angle).sum();
        prop_assert!((turn - 2.0 * PI).abs() < 1e-12);
        prop_assert!(turn > 0.0);
    }

    #[test]
    fn hausdorff_is_a_metric(s in body_strategy(), d1 in prop::array::uniform3(-0.3f64..0.3), d2 in prop::array::uniform3(-0.3f64..0.3)) {
        let a = rigid(&s, [0.0, 0.0, 1.0], 0.0, d1);
        let b = rigid(&s, [0.0, 0.0, 1.0], 0.2, d2);
        let tol = 2e-6 * s.diameter();
        let ab = hausdorff_distance(&s, &a).unwrap();
        let ba = hausdorff_distance(&a, &s).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-15);
        let ac = hausdorff_distance(&s, &b).unwrap();
        let cb = hausdorff_distance(&b, &a).unwrap();
        prop_assert!(ab <= ac + cb + tol);
        prop_assert!(hausdorff_distance(&s, &s).unwrap() == 0.0);
    }
}
