//! Self-intersection tests on adaptive-precision orientation predicates.
//!
//! Touching counts as intersecting: two facets may share only the vertices
//! and edges they have in common combinatorially.

use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::error::{Error, Result};
use crate::surface::SimplicialSurface;

pub(crate) type P3 = [f64; 3];

fn c3(p: &P3) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

fn c2(p: &[f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

pub(crate) fn o3(a: &P3, b: &P3, c: &P3, d: &P3) -> f64 {
    orient3d(c3(a), c3(b), c3(c), c3(d))
}

fn o2(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    orient2d(c2(a), c2(b), c2(c))
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Closed segments intersect (including touching and collinear overlap).
fn segments_meet_2d(p: &[f64; 2], q: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> bool {
    let d1 = sgn(o2(a, b, p));
    let d2 = sgn(o2(a, b, q));
    let d3 = sgn(o2(p, q, a));
    let d4 = sgn(o2(p, q, b));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    let on = |x: &[f64; 2], y: &[f64; 2], z: &[f64; 2]| {
        z[0] >= x[0].min(y[0]) && z[0] <= x[0].max(y[0]) && z[1] >= x[1].min(y[1]) && z[1] <= x[1].max(y[1])
    };
    (d1 == 0 && on(a, b, p))
        || (d2 == 0 && on(a, b, q))
        || (d3 == 0 && on(p, q, a))
        || (d4 == 0 && on(p, q, b))
}

fn point_in_triangle_2d(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> bool {
    let s1 = sgn(o2(a, b, p));
    let s2 = sgn(o2(b, c, p));
    let s3 = sgn(o2(c, a, p));
    !((s1 < 0 || s2 < 0 || s3 < 0) && (s1 > 0 || s2 > 0 || s3 > 0))
}

/// Drops the coordinate along which the triangle's normal is largest.
fn project(tri: &[P3; 3], pts: &[P3]) -> Vec<[f64; 2]> {
    let u = [tri[1][0] - tri[0][0], tri[1][1] - tri[0][1], tri[1][2] - tri[0][2]];
    let v = [tri[2][0] - tri[0][0], tri[2][1] - tri[0][1], tri[2][2] - tri[0][2]];
    let n = [
        (u[1] * v[2] - u[2] * v[1]).abs(),
        (u[2] * v[0] - u[0] * v[2]).abs(),
        (u[0] * v[1] - u[1] * v[0]).abs(),
    ];
    let drop = if n[0] >= n[1] && n[0] >= n[2] {
        0
    } else if n[1] >= n[2] {
        1
    } else {
        2
    };
    let (i, j) = match drop {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    pts.iter().map(|p| [p[i], p[j]]).collect()
}

/// Closed segment `pq` meets closed triangle `abc`.
pub(crate) fn segment_meets_triangle(p: &P3, q: &P3, tri: &[P3; 3]) -> bool {
    let [a, b, c] = tri;
    let sp = sgn(o3(a, b, c, p));
    let sq = sgn(o3(a, b, c, q));
    if sp * sq > 0 {
        return false;
    }
    if sp == 0 && sq == 0 {
        let pr = project(tri, &[*a, *b, *c, *p, *q]);
        let (ta, tb, tc, pp, qq) = (&pr[0], &pr[1], &pr[2], &pr[3], &pr[4]);
        return point_in_triangle_2d(pp, ta, tb, tc)
            || point_in_triangle_2d(qq, ta, tb, tc)
            || segments_meet_2d(pp, qq, ta, tb)
            || segments_meet_2d(pp, qq, tb, tc)
            || segments_meet_2d(pp, qq, tc, ta);
    }
    let s1 = sgn(o3(p, q, a, b));
    let s2 = sgn(o3(p, q, b, c));
    let s3 = sgn(o3(p, q, c, a));
    !((s1 < 0 || s2 < 0 || s3 < 0) && (s1 > 0 || s2 > 0 || s3 > 0))
}

/// Whether two triangles, given with global vertex ids, meet anywhere other
/// than in the faces spanned by their shared vertices.
pub(crate) fn triangles_conflict(ia: [usize; 3], ta: &[P3; 3], ib: [usize; 3], tb: &[P3; 3]) -> bool {
    let shared: Vec<usize> = ia.iter().copied().filter(|v| ib.contains(v)).collect();
    match shared.len() {
        0 => (0..3).any(|k| segment_meets_triangle(&ta[k], &ta[(k + 1) % 3], tb))
            || (0..3).any(|k| segment_meets_triangle(&tb[k], &tb[(k + 1) % 3], ta)),
        1 => {
            // The intersection is convex and contains the shared vertex; any
            // further point forces the opposite edge of one triangle to meet the other.
            let ka = ia.iter().position(|&v| v == shared[0]).unwrap();
            let kb = ib.iter().position(|&v| v == shared[0]).unwrap();
            segment_meets_triangle(&ta[(ka + 1) % 3], &ta[(ka + 2) % 3], tb)
                || segment_meets_triangle(&tb[(kb + 1) % 3], &tb[(kb + 2) % 3], ta)
        }
        2 => {
            let ka = (0..3).find(|&k| !shared.contains(&ia[k])).unwrap();
            let kb = (0..3).find(|&k| !shared.contains(&ib[k])).unwrap();
            let p = ta[(0..3).find(|&k| ia[k] == shared[0]).unwrap()];
            let q = ta[(0..3).find(|&k| ia[k] == shared[1]).unwrap()];
            let (r, s) = (ta[ka], tb[kb]);
            if o3(&p, &q, &r, &s) != 0.0 {
                return false;
            }
            // coplanar: overlap iff r and s lie on the same side of line pq
            let pr = project(&[p, q, r], &[p, q, r, s]);
            sgn(o2(&pr[0], &pr[1], &pr[2])) * sgn(o2(&pr[0], &pr[1], &pr[3])) >= 0
        }
        _ => true,
    }
}

fn as_p3(s: &[f64]) -> P3 {
    [s[0], s[1], s[2]]
}

fn as_p2(s: &[f64]) -> [f64; 2] {
    [s[0], s[1]]
}

/// Indices of conflicting facet pairs (empty iff embedded). d = 2 or 3.
pub fn conflicting_pairs(s: &SimplicialSurface) -> Result<Vec<(usize, usize)>> {
    let facets = s.facets();
    let mut out = Vec::new();
    match s.dim() {
        3 => {
            let tris: Vec<[P3; 3]> = facets
                .iter()
                .map(|f| [as_p3(s.vertex(f[0])), as_p3(s.vertex(f[1])), as_p3(s.vertex(f[2]))])
                .collect();
            let bbox: Vec<[P3; 2]> = tris.iter().map(bounding_box).collect();
            for i in 0..facets.len() {
                for j in i + 1..facets.len() {
                    if !boxes_overlap(&bbox[i], &bbox[j]) {
                        continue;
                    }
                    let ia = [facets[i][0], facets[i][1], facets[i][2]];
                    let ib = [facets[j][0], facets[j][1], facets[j][2]];
                    if triangles_conflict(ia, &tris[i], ib, &tris[j]) {
                        out.push((i, j));
                    }
                }
            }
        }
        2 => {
            for i in 0..facets.len() {
                for j in i + 1..facets.len() {
                    let (a, b) = (facets[i][0], facets[i][1]);
                    let (c, d) = (facets[j][0], facets[j][1]);
                    let pa = as_p2(s.vertex(a));
                    let pb = as_p2(s.vertex(b));
                    let pc = as_p2(s.vertex(c));
                    let pd = as_p2(s.vertex(d));
                    let shared: Vec<usize> = [a, b].into_iter().filter(|v| *v == c || *v == d).collect();
                    let bad = match shared.len() {
                        0 => segments_meet_2d(&pa, &pb, &pc, &pd),
                        1 => {
                            // adjacent edges: only a collinear fold-back overlaps
                            let w = shared[0];
                            let pw = as_p2(s.vertex(w));
                            let x = if a == w { pb } else { pa };
                            let y = if c == w { pd } else { pc };
                            o2(&pw, &x, &y) == 0.0
                                && (x[0] - pw[0]) * (y[0] - pw[0]) + (x[1] - pw[1]) * (y[1] - pw[1]) > 0.0
                        }
                        _ => true,
                    };
                    if bad {
                        out.push((i, j));
                    }
                }
            }
        }
        d => {
            return Err(Error::UnsupportedDimension {
                found: d,
                expected: "2 or 3",
            })
        }
    }
    Ok(out)
}

/// True iff the surface is embedded (injective). Total for d = 2, 3; other
/// dimensions report `false`.
pub fn is_embedded(s: &SimplicialSurface) -> bool {
    matches!(conflicting_pairs(s), Ok(v) if v.is_empty())
}

pub(crate) fn bounding_box(t: &[P3; 3]) -> [P3; 2] {
    let mut lo = t[0];
    let mut hi = t[0];
    for p in &t[1..] {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    [lo, hi]
}

pub(crate) fn boxes_overlap(a: &[P3; 2], b: &[P3; 2]) -> bool {
    (0..3).all(|k| a[0][k] <= b[1][k] && b[0][k] <= a[1][k])
}

/// Generalized winding number of a closed 3D triangulated surface around `x`
/// (≈ ±1 inside, ≈ 0 outside), via summed signed solid angles.
pub fn winding_number(s: &SimplicialSurface, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for f in s.facets() {
        let a: Vec<f64> = (0..3).map(|k| s.vertex(f[0])[k] - x[k]).collect();
        let b: Vec<f64> = (0..3).map(|k| s.vertex(f[1])[k] - x[k]).collect();
        let c: Vec<f64> = (0..3).map(|k| s.vertex(f[2])[k] - x[k]).collect();
        let la = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let lb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let lc = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]);
        let ab = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let bc = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
        let ca = c[0] * a[0] + c[1] * a[1] + c[2] * a[2];
        let denom = la * lb * lc + ab * lc + bc * la + ca * lb;
        total += 2.0 * det.atan2(denom);
    }
    total / (4.0 * std::f64::consts::PI)
}
