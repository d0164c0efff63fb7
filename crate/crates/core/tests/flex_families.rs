use flexspec_core::families::*;
use flexspec_core::flex::uniform_samples;
use flexspec_core::{advance_flex, check_congruence, is_embedded, Error, FlexContext, FlexFamily};

fn relative_spread(v: &[f64], scale: f64) -> f64 {
    let v0 = v[0];
    v.iter().map(|x| (x - v0).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn steffen_counts_and_embedding() {
    let f = make_steffen();
    let s0 = f.reference_surface().unwrap();
    assert_eq!(s0.num_vertices(), 9);
    assert_eq!(s0.facets().len(), 14);
    assert_eq!(s0.edges().len(), 21);
    let mut ctx = FlexContext::new(&f).unwrap();
    let states = ctx.sample(&uniform_samples(50)).unwrap();
    let mut vols = Vec::new();
    let mut hs = Vec::new();
    for st in &states {
        let s = st.surface(&f).unwrap();
        assert!(is_embedded(&s), "s = {}", st.s);
        assert!(st.edge_residual(&f) < 1e-9);
        vols.push(s.oriented_volume());
        hs.push(s.integral_mean_curvature().unwrap());
    }
    println!("V0 {} H0 {}", vols[0], hs[0]);
    assert!(relative_spread(&vols, vols[0].abs()) < 1e-7);
    assert!(relative_spread(&hs, hs[0].abs()) < 1e-7);
}

#[test]
fn steffen_matches_construction() {
    let built = steffen_family_from(&STEFFEN_PARAMETERS).unwrap();
    assert_eq!(built, make_steffen());
}

#[test]
fn steffen_is_not_congruent_along_flex() {
    let f = make_steffen();
    let mut ctx = FlexContext::new(&f).unwrap();
    let a = ctx.advance(0.0).unwrap();
    let b = ctx.advance(0.5).unwrap();
    assert!(!check_congruence(&a, &b));
    assert!(check_congruence(&a, &a));
}

#[test]
fn bricard_volume_and_curvature() {
    let f = make_bricard1();
    let mut ctx = FlexContext::new(&f).unwrap();
    let states = ctx.sample(&uniform_samples(50)).unwrap();
    let s0 = states[0].surface(&f).unwrap();
    assert!(!is_embedded(&s0));
    let d3 = s0.diameter().powi(3);
    let vols: Vec<f64> = states.iter().map(|s| s.surface(&f).unwrap().oriented_volume()).collect();
    let hs: Vec<f64> = states.iter().map(|s| s.surface(&f).unwrap().integral_mean_curvature().unwrap()).collect();
    assert!(relative_spread(&vols, vols[0].abs().max(d3)) < 1e-8);
    assert!(relative_spread(&hs, hs[0].abs().max(s0.diameter())) < 1e-8);
}

fn builtins() -> Vec<FlexFamily> {
    vec![
        four_bar(),
        make_flex_polygon(&[1.0; 6]).unwrap(),
        make_bricard1(),
        make_steffen(),
    ]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn four_bar_starts_at_rectangle() {
    let f = four_bar();
    let want = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
    for (v, w) in f.reference.iter().zip(&want) {
        assert!(dist(v, w) < 1e-12, "{v:?} vs {w:?}");
    }
}

/// Vertex 2 of the (2,1,2,1) linkage with v0 = 0, v1 = (2,0), v3 at angle θ:
/// the intersection of the circles |x − v1| = 1 and |x − v3| = 2 on the
/// parallelogram side of the diagonal v1 v3.
fn two_circle_oracle(theta: f64) -> [f64; 2] {
    let c1 = [2.0, 0.0];
    let c2 = [theta.cos(), theta.sin()];
    let (r1, r2) = (1.0, 2.0);
    let d = dist(&c1, &c2);
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - a * a).sqrt();
    let ex = [(c2[0] - c1[0]) / d, (c2[1] - c1[1]) / d];
    let base = [c1[0] + a * ex[0], c1[1] + a * ex[1]];
    // right of the directed diagonal v1 -> v3
    [base[0] + h * ex[1], base[1] - h * ex[0]]
}

#[test]
fn four_bar_matches_closed_form() {
    let f = four_bar();
    let mut ctx = FlexContext::new(&f).unwrap();
    for s in uniform_samples(20) {
        let st = ctx.advance(s).unwrap();
        let theta = f.driver_target(s).unwrap();
        assert!(dist(st.vertex(0), &[0.0, 0.0]) < 1e-12);
        assert!(dist(st.vertex(1), &[2.0, 0.0]) < 1e-9);
        assert!(dist(st.vertex(3), &[theta.cos(), theta.sin()]) < 1e-9, "s = {s}");
        assert!(dist(st.vertex(2), &two_circle_oracle(theta)) < 1e-9, "s = {s}");
    }
}

#[test]
fn polygon_feasibility() {
    let hex = make_flex_polygon(&[1.0; 6]).unwrap();
    let st = advance_flex(&hex, 0.5).unwrap();
    assert!(st.edge_residual(&hex) < 1e-9);
    assert!(matches!(
        make_flex_polygon(&[10.0, 1.0, 1.0, 1.0]),
        Err(Error::ClosureInfeasible(_))
    ));
    assert!(matches!(make_flex_polygon(&[1.0, 1.0, 1.0]), Err(Error::InvalidFamily(_))));
}

#[test]
fn reference_is_returned_exactly_at_zero() {
    for f in builtins().iter().chain([&rigid_cube()]) {
        assert_eq!(advance_flex(f, 0.0).unwrap().coords, f.reference_coords(), "{}", f.name);
    }
}

#[test]
fn parameter_outside_unit_interval() {
    assert!(matches!(
        advance_flex(&four_bar(), 1.5),
        Err(Error::ParameterOutOfRange { .. })
    ));
    assert!(matches!(
        advance_flex(&four_bar(), -0.1),
        Err(Error::ParameterOutOfRange { .. })
    ));
}

#[test]
fn rigid_cube_is_static() {
    let f = rigid_cube();
    assert!(f.is_static());
    for s in [0.0, 0.3, 0.99] {
        let st = advance_flex(&f, s).unwrap();
        assert_eq!(st.coords, f.reference_coords());
        assert!((st.surface(&f).unwrap().oriented_volume() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn steffen_midpoint_edges_and_angles() {
    let f = make_steffen();
    let mut ctx = FlexContext::new(&f).unwrap();
    let mid = ctx.advance(0.5).unwrap();
    let edges = f.facet_edge_lengths();
    assert_eq!(edges.len(), 21);
    for ((i, j), l) in edges {
        assert!((dist(mid.vertex(i), mid.vertex(j)) - l).abs() / l < 1e-9);
    }
    let s0 = f.reference_surface().unwrap();
    let states = ctx.sample(&uniform_samples(50)).unwrap();
    let angles: Vec<Vec<f64>> = states
        .iter()
        .map(|st| st.surface(&f).unwrap().dihedral_angles().iter().map(|d| d.angle).collect())
        .collect();
    let best = (0..s0.ridges().len())
        .map(|r| {
            let v: Vec<f64> = angles.iter().map(|a| a[r]).collect();
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!(best > 0.05, "{best}");
}

#[test]
fn surface_area_is_preserved() {
    for f in [make_bricard1(), make_steffen()] {
        let mut ctx = FlexContext::new(&f).unwrap();
        let a0 = f.reference_surface().unwrap().surface_area();
        for st in ctx.sample(&uniform_samples(50)).unwrap() {
            let a = st.surface(&f).unwrap().surface_area();
            assert!((a - a0).abs() < 1e-12 * a0, "{}: {a} vs {a0}", f.name);
        }
    }
}

#[test]
fn builtins_are_not_congruent_along_flex() {
    for f in builtins() {
        let mut ctx = FlexContext::new(&f).unwrap();
        let a = ctx.advance(0.0).unwrap();
        let b = ctx.advance(0.5).unwrap();
        assert!(!check_congruence(&a, &b), "{}", f.name);
        assert!(b.edge_residual(&f) < 1e-9);
    }
}

#[test]
fn congruence_ignores_rigid_motion() {
    let f = make_steffen();
    let a = advance_flex(&f, 0.3).unwrap();
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let mut b = a.clone();
    for v in b.coords.chunks_mut(3) {
        let (x, y) = (v[0], v[1]);
        v[0] = c * x - s * y + 1.0;
        v[1] = s * x + c * y - 2.0;
        v[2] += 0.5;
    }
    assert!(check_congruence(&a, &b));
}

#[test]
fn path_is_lipschitz() {
    // displacement over a step stays within 10 × step × local speed
    for f in builtins() {
        let mut ctx = FlexContext::new(&f).unwrap();
        let h = 0.02;
        for k in 0..40 {
            let s = k as f64 * h;
            let a = ctx.advance(s).unwrap();
            let b = ctx.advance(s + h).unwrap();
            let c = ctx.advance(s + h / 100.0).unwrap();
            let speed = dist(&c.coords, &a.coords) / (h / 100.0);
            assert!(dist(&b.coords, &a.coords) <= 10.0 * h * speed, "{} at s = {s}", f.name);
        }
    }
}

#[test]
fn family_json_round_trip() {
    for f in builtins() {
        assert_eq!(FlexFamily::from_json(&f.to_json()).unwrap(), f);
    }
}
