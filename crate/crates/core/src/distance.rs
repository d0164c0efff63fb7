//! Hausdorff distance between surfaces (as point sets).
//!
//! The directed distance `sup_{x in A} d(x, B)` is bracketed by branch and
//! bound over recursive subdivision of the facets of `A`. On a piece `σ` of
//! `A` with vertices `v_i`, any evaluated `d(v_i, B)` is a lower bound of the
//! supremum, and because `x -> d(x, K)` is convex for every facet `K` of `B`,
//! `min_K max_i d(v_i, K)` bounds `d(·, B)` on all of `σ` from above. Pieces
//! whose upper bound cannot beat the running lower bound by more than the
//! tolerance are discarded.

use crate::error::{Error, Result};
use crate::surface::SimplicialSurface;

/// Relative accuracy of [`hausdorff_distance`], in units of the larger diameter.
pub const HAUSDORFF_RELATIVE_TOLERANCE: f64 = 1e-6;

type P = [f64; 3];

fn sub(a: &P, b: &P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P, b: &P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mid(a: &P, b: &P) -> P {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

fn point_segment(p: &P, a: &P, b: &P) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let l2 = dot(&ab, &ab);
    let t = if l2 > 0.0 { (dot(&ap, &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    let d = sub(p, &q);
    dot(&d, &d).sqrt()
}

/// Distance from `p` to the closed triangle `abc` (Voronoi-region walk).
pub(crate) fn point_triangle(p: &P, a: &P, b: &P, c: &P) -> f64 {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    let closest = |q: P| {
        let d = sub(p, &q);
        dot(&d, &d).sqrt()
    };
    if d1 <= 0.0 && d2 <= 0.0 {
        return closest(*a);
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return closest(*b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return closest([a[0] + v * ab[0], a[1] + v * ab[1], a[2] + v * ab[2]]);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return closest(*c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return closest([a[0] + w * ac[0], a[1] + w * ac[1], a[2] + w * ac[2]]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let bc = sub(c, b);
        return closest([b[0] + w * bc[0], b[1] + w * bc[1], b[2] + w * bc[2]]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    closest([
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ])
}

/// Distance between closed segments `p1q1` and `p2q2`.
pub(crate) fn segment_segment(p1: &P, q1: &P, p2: &P, q2: &P) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let c = dot(&d1, &r);
    let b = dot(&d1, &d2);
    let den = a * e - b * b;
    let mut s = if den > 1e-14 * a * e { ((b * f - c * e) / den).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let x = [p1[0] + d1[0] * s, p1[1] + d1[1] * s, p1[2] + d1[2] * s];
    let y = [p2[0] + d2[0] * t, p2[1] + d2[1] * t, p2[2] + d2[2] * t];
    let d = sub(&x, &y);
    dot(&d, &d).sqrt()
}

/// Distance between two disjoint closed triangles (0 if they touch; for
/// crossing triangles the value is not meaningful).
pub(crate) fn triangle_triangle(a: &[P; 3], b: &[P; 3]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..3 {
        m = m.min(point_triangle(&a[k], &b[0], &b[1], &b[2]));
        m = m.min(point_triangle(&b[k], &a[0], &a[1], &a[2]));
        for l in 0..3 {
            m = m.min(segment_segment(&a[k], &a[(k + 1) % 3], &b[l], &b[(l + 1) % 3]));
        }
    }
    m
}

/// Facets lifted to 3-vectors (d = 2 pads with zero); 2 or 3 points each.
fn simplices(s: &SimplicialSurface) -> Vec<Vec<P>> {
    s.facets()
        .iter()
        .map(|f| {
            f.iter()
                .map(|&v| {
                    let x = s.vertex(v);
                    [x[0], x[1], if x.len() > 2 { x[2] } else { 0.0 }]
                })
                .collect()
        })
        .collect()
}

fn point_simplex(p: &P, k: &[P]) -> f64 {
    match k.len() {
        2 => point_segment(p, &k[0], &k[1]),
        _ => point_triangle(p, &k[0], &k[1], &k[2]),
    }
}

fn point_set(p: &P, b: &[Vec<P>]) -> f64 {
    b.iter().map(|k| point_simplex(p, k)).fold(f64::INFINITY, f64::min)
}

fn split(s: &[P]) -> Vec<Vec<P>> {
    match s.len() {
        2 => {
            let m = mid(&s[0], &s[1]);
            vec![vec![s[0], m], vec![m, s[1]]]
        }
        _ => {
            let (a, b, c) = (s[0], s[1], s[2]);
            let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
            vec![
                vec![a, ab, ca],
                vec![ab, b, bc],
                vec![ca, bc, c],
                vec![ab, bc, ca],
            ]
        }
    }
}

/// `sup_{x in A} d(x, B)` to absolute accuracy `tol`.
fn directed(a: &[Vec<P>], b: &[Vec<P>], tol: f64) -> f64 {
    let mut lower: f64 = 0.0;
    for s in a {
        for p in s {
            lower = lower.max(point_set(p, b));
        }
    }
    let mut stack: Vec<Vec<P>> = a.to_vec();
    while let Some(s) = stack.pop() {
        let mut upper = f64::INFINITY;
        for k in b {
            let m = s.iter().map(|p| point_simplex(p, k)).fold(0.0, f64::max);
            upper = upper.min(m);
            if upper <= lower + tol {
                break;
            }
        }
        if upper <= lower + tol {
            continue;
        }
        for child in split(&s) {
            // new vertices are midpoints; evaluating them tightens `lower`
            for p in &child {
                lower = lower.max(point_set(p, b));
            }
            stack.push(child);
        }
    }
    lower
}

/// Symmetric Hausdorff distance between the point sets of two surfaces,
/// within `HAUSDORFF_RELATIVE_TOLERANCE` times the larger diameter (the value
/// returned never exceeds the true distance). Supports d = 2 and d = 3.
pub fn hausdorff_distance(s1: &SimplicialSurface, s2: &SimplicialSurface) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch(s1.dim(), s2.dim()));
    }
    if !(2..=3).contains(&s1.dim()) {
        return Err(Error::UnsupportedDimension {
            found: s1.dim(),
            expected: "2 or 3",
        });
    }
    let a = simplices(s1);
    let b = simplices(s2);
    let tol = HAUSDORFF_RELATIVE_TOLERANCE * s1.diameter().max(s2.diameter());
    Ok(directed(&a, &b, tol).max(directed(&b, &a, tol)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::shapes::*;

    #[test]
    fn identical_surfaces() {
        let c = unit_cube();
        assert_eq!(hausdorff_distance(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn translated_cube() {
        let c = unit_cube();
        let t = c.map_vertices(|x| vec![x[0] + 0.03, x[1], x[2]]).unwrap();
        let h = hausdorff_distance(&c, &t).unwrap();
        assert!((h - 0.03).abs() < 2e-6, "{h}");
    }

    #[test]
    fn scaled_square() {
        let s = unit_square();
        let d = 0.05;
        let t = s
            .map_vertices(|x| vec![0.5 + (x[0] - 0.5) * (1.0 + 2.0 * d), 0.5 + (x[1] - 0.5) * (1.0 + 2.0 * d)])
            .unwrap();
        // attained at the corners, which are d·√2 apart
        let h = hausdorff_distance(&s, &t).unwrap();
        assert!((h - d * 2f64.sqrt()).abs() < 2e-6, "{h}");
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            hausdorff_distance(&unit_cube(), &unit_square()),
            Err(Error::DimensionMismatch(3, 2))
        ));
    }

    #[test]
    fn triangle_gap() {
        let a = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let b = [[0.0, 0.0, 0.3], [1.0, 0.0, 0.7], [0.0, 1.0, 0.5]];
        assert!((triangle_triangle(&a, &b) - 0.3).abs() < 1e-15);
        let c = [[2.0, -1.0, 0.0], [2.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        assert!((triangle_triangle(&a, &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_triangle_regions() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!((point_triangle(&[0.2, 0.2, 0.5], &a, &b, &c) - 0.5).abs() < 1e-15);
        assert!((point_triangle(&[-1.0, -1.0, 0.0], &a, &b, &c) - 2f64.sqrt()).abs() < 1e-15);
        assert!((point_triangle(&[1.0, 1.0, 0.0], &a, &b, &c) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
