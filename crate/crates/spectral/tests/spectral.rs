use std::f64::consts::PI;

use flexspec_core::families::four_bar;
use flexspec_core::fedosov::{coefficients, riesz_mean_empirical, riesz_mean_prediction};
use flexspec_core::surface::shapes::{polygon, unit_square};
use flexspec_core::BoundaryCondition::{Dirichlet, Neumann};
use flexspec_core::{FlexFamily, Spectrum};
use flexspec_fem::analysis::eigen_count_for;
use flexspec_fem::{
    counting_function, flex_spectrum_sweep, richardson, solve_eigenpairs, solve_eigs, triangulate, Error,
    SolverOptions,
};

const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
const L_SHAPE: [[f64; 2]; 6] = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
/// First Dirichlet eigenvalue of the three-unit-square L (Fox, Henrici, Moler).
const L_SHAPE_LAMBDA1: f64 = 9.6397238;

/// `π²(m² + n²)`, m, n ≥ 1, sorted, below `top`.
fn square_oracle(top: f64) -> Vec<f64> {
    let mut v = vec![];
    for m in 1..200 {
        for n in 1..200 {
            let l = PI * PI * (m * m + n * n) as f64;
            if l <= top {
                v.push(l);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn square_dirichlet_matches_separation_of_variables() {
    let mesh = triangulate(&SQUARE, 0.02).unwrap();
    let (sp, pairs) = solve_eigenpairs(&mesh, Dirichlet, 10, &SolverOptions::default()).unwrap();
    let exact = square_oracle(20.0 * PI * PI);
    for (l, e) in sp.eigenvalues.iter().zip(&exact) {
        assert!((l - e).abs() / e < 5e-3, "{l} vs {e}");
    }
    assert!(pairs.residuals.iter().all(|&r| r < 1e-8));
    assert!((sp.eigenvalues[0] - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 5e-3);
    assert_eq!(sp.mesh.as_ref().unwrap().nodes, mesh.num_nodes());
}

#[test]
fn square_neumann_zero_mode() {
    let mesh = triangulate(&SQUARE, 0.04).unwrap();
    let (sp, pairs) = solve_eigenpairs(&mesh, Neumann, 3, &SolverOptions::default()).unwrap();
    assert!(sp.eigenvalues[0].abs() < 1e-8);
    assert!((sp.eigenvalues[1] - PI * PI).abs() / (PI * PI) < 5e-3);
    // M-normalized constant on unit area is ±1
    let u = &pairs.vectors[0];
    assert!(u.iter().all(|x| (x.abs() - 1.0).abs() < 1e-6));
}

#[test]
fn l_shape_first_eigenvalue() {
    let coarse = triangulate(&L_SHAPE, 0.1).unwrap();
    let fine = coarse.refine_uniform();
    let lc = solve_eigs(&coarse, Dirichlet, 1).unwrap().eigenvalues[0];
    let lf = solve_eigs(&fine, Dirichlet, 1).unwrap().eigenvalues[0];
    // refinement oracle from the two nested meshes
    let oracle = richardson(&[lc], &[lf])[0];
    assert!((oracle - L_SHAPE_LAMBDA1).abs() / L_SHAPE_LAMBDA1 < 1e-3, "{oracle}");
    assert!((lf - oracle).abs() / oracle < 5e-3, "{lf}");
    assert!((lf - L_SHAPE_LAMBDA1).abs() / L_SHAPE_LAMBDA1 < 5e-3, "{lf}");
}

#[test]
fn counting_function_examples() {
    let mesh = triangulate(&SQUARE, 0.03).unwrap();
    let sp = solve_eigs(&mesh, Dirichlet, 14).unwrap();
    // λ/π² ∈ {2, 5, 5, 8, 10, 10} below 100
    assert_eq!(counting_function(&sp, 10.0).unwrap(), square_oracle(100.0).len());
    assert_eq!(counting_function(&sp, 10.0).unwrap(), 6);
    assert_eq!(counting_function(&sp, 4.0).unwrap(), 0);
    assert!(matches!(counting_function(&sp, 100.0), Err(Error::BeyondTrust { .. })));
    let neu = solve_eigs(&mesh, Neumann, 3).unwrap();
    assert_eq!(counting_function(&neu, 0.1).unwrap(), 1);
}

#[test]
fn quadratic_convergence_on_square() {
    let m0 = triangulate(&SQUARE, 0.2).unwrap();
    let m1 = m0.refine_uniform();
    let m2 = m1.refine_uniform();
    let l: Vec<Vec<f64>> = [&m0, &m1, &m2].iter().map(|m| solve_eigs(m, Dirichlet, 3).unwrap().eigenvalues).collect();
    for i in 0..3 {
        let ratio = (l[0][i] - l[1][i]) / (l[1][i] - l[2][i]);
        assert!((2.5..=6.0).contains(&ratio), "λ_{}: ratio {ratio}", i + 1);
    }
}

#[test]
fn eigenvalues_scale_inversely_with_area() {
    let c = 2.5;
    let big: Vec<[f64; 2]> = L_SHAPE.iter().map(|p| [p[0] * c, p[1] * c]).collect();
    let a = solve_eigs(&triangulate(&L_SHAPE, 0.05).unwrap(), Dirichlet, 4).unwrap();
    let b = solve_eigs(&triangulate(&big, 0.05 * c).unwrap(), Dirichlet, 4).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((y * c * c - x).abs() / x < 5e-3, "{x} vs {}", y * c * c);
    }
    // the same mesh scaled exactly scales the discrete spectrum exactly
    let m = triangulate(&SQUARE, 0.1).unwrap();
    let s1 = solve_eigs(&m, Dirichlet, 3).unwrap();
    let s2 = solve_eigs(&m.scaled(c), Dirichlet, 3).unwrap();
    for (x, y) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
        assert!((y * c * c - x).abs() / x < 1e-9);
    }
}

#[test]
fn dirichlet_domain_monotonicity() {
    let inner = triangulate(&SQUARE, 0.03).unwrap();
    let outer = triangulate(&[[0.0, 0.0], [1.2, 0.0], [1.2, 1.0], [0.6, 1.3], [0.0, 1.0]], 0.03).unwrap();
    let a = solve_eigs(&inner, Dirichlet, 1).unwrap().eigenvalues[0];
    let b = solve_eigs(&outer, Dirichlet, 1).unwrap().eigenvalues[0];
    assert!(a >= b, "{a} < {b}");
}

#[test]
fn four_bar_sweep_separates_spectra() {
    let sw = flex_spectrum_sweep(&four_bar(), Dirichlet, 0.05, 2, &[0.0, 0.5]).unwrap();
    let rect = PI * PI * (0.25 + 1.0);
    let (r0, r1) = (&sw.rows[0], &sw.rows[1]);
    assert!(r0.simple && r1.simple);
    assert!((r0.refined[0] - rect).abs() / rect < 5e-3, "{}", r0.refined[0]);
    let bar = r0.error_bar[0].max(r1.error_bar[0]);
    assert!((r0.eigenvalues[0] - r1.eigenvalues[0]).abs() > 10.0 * bar);
}

#[test]
fn rigid_family_sweep_is_flat() {
    let pent = polygon(&[[0.0, 0.0], [1.0, 0.0], [1.3, 0.8], [0.5, 1.4], [-0.3, 0.8]]).unwrap();
    let fam = FlexFamily::rigid("pentagon", &pent).unwrap();
    let sw = flex_spectrum_sweep(&fam, Neumann, 0.08, 3, &[0.0, 0.4, 0.8]).unwrap();
    for i in 0..3 {
        assert!(sw.spread[i] <= sw.max_error_bar[i], "λ_{}", i + 1);
    }
}

#[test]
fn planar_sweep_rejects_polyhedra() {
    let fam = flexspec_core::families::rigid_cube();
    assert!(matches!(
        flex_spectrum_sweep(&fam, Dirichlet, 0.1, 1, &[0.0]),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn solver_rejects_bad_counts() {
    let mesh = triangulate(&SQUARE, 0.5).unwrap();
    assert!(matches!(solve_eigs(&mesh, Dirichlet, 0), Err(Error::InvalidInput(_))));
    assert!(matches!(solve_eigs(&mesh, Dirichlet, 10_000), Err(Error::InvalidInput(_))));
}

#[test]
fn riesz_remainder_tracks_exact_spectrum() {
    // the fitted corner term from FEM spectra agrees with the same fit on the
    // analytic spectrum
    let top = 700.0;
    let n = eigen_count_for(&SQUARE, Dirichlet, top).unwrap();
    let coarse = triangulate(&SQUARE, 0.04).unwrap();
    let fine = coarse.refine_uniform();
    let a = solve_eigs(&coarse, Dirichlet, n).unwrap().eigenvalues;
    let b = solve_eigs(&fine, Dirichlet, n).unwrap().eigenvalues;
    let fem = Spectrum::new(Dirichlet, richardson(&a, &b));
    let exact = Spectrum::new(Dirichlet, square_oracle(4.0 * top));
    let mut bulk = coefficients(&unit_square(), Dirichlet).unwrap();
    bulk.a_d2 = 0.0;
    let fit = |sp: &Spectrum| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=100 {
            let k = 10.0 + 12.0 * i as f64 / 100.0;
            let r = riesz_mean_empirical(sp, 2, k).unwrap() - riesz_mean_prediction(&bulk, 2, k).unwrap();
            num += r * k * k;
            den += k.powi(4);
        }
        num / den
    };
    let (cf, ce) = (fit(&fem), fit(&exact));
    assert!((cf - ce).abs() < 0.2 * ce.abs(), "{cf} vs {ce}");
}
