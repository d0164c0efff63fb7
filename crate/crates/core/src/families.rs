//! Built-in families: planar linkages, a line-symmetric Bricard octahedron,
//! a nine-vertex embedded flexible polyhedron, and a rigid cube.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flex::{Driver, FlexFamily, Parametrization};
use crate::surface::{orient_coherently, shapes, SimplicialSurface};

/// Continuation grid used by the built-in families.
pub const DEFAULT_STEPS: usize = 64;

/// Closed polygon with the given side lengths, started at the cyclic
/// (inscribed) polygon and driven by the interior angle at vertex 0, which
/// decreases by 0.8 rad over the family interval.
pub fn make_flex_polygon(lengths: &[f64]) -> Result<FlexFamily> {
    let n = lengths.len();
    if n < 4 {
        return Err(Error::InvalidFamily(format!("a flexible polygon needs at least 4 edges, got {n}")));
    }
    if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidFamily("edge lengths must be positive and finite".into()));
    }
    let total: f64 = lengths.iter().sum();
    let (imax, &lmax) = lengths
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if lmax >= (total - lmax) * (1.0 - 1e-12) {
        return Err(Error::ClosureInfeasible(format!(
            "longest edge {lmax} is not shorter than the sum {} of the others",
            total - lmax
        )));
    }
    let points = cyclic_polygon(lengths, imax);
    let surface = shapes::polygon(&points)?;
    let ridge = surface
        .find_ridge(&[0])
        .expect("vertex 0 is a ridge of a polygon");
    let driver = Driver::from_ridge(&surface, ridge);
    let start = surface.dihedral_angle(ridge);
    let end = (start - 0.8).max(0.5 * start);
    let name = format!(
        "polygon({})",
        lengths.iter().map(|l| format!("{l}")).collect::<Vec<_>>().join(",")
    );
    FlexFamily::driven(&name, &surface, driver, end, DEFAULT_STEPS)
}

/// Counter-clockwise polygon inscribed in a circle, with vertex 0 at the
/// origin and edge 0 along +x.
fn cyclic_polygon(l: &[f64], imax: usize) -> Vec<[f64; 2]> {
    let lmax = l[imax];
    let arc = |r: f64, x: f64| 2.0 * (x / (2.0 * r)).min(1.0).asin();
    let others = |r: f64| -> f64 {
        l.iter()
            .enumerate()
            .filter(|&(i, _)| i != imax)
            .map(|(_, &x)| arc(r, x))
            .sum()
    };
    let r0 = lmax / 2.0;
    // centre inside when the arcs at the smallest radius already exceed 2π
    let inside = others(r0) + PI >= 2.0 * PI;
    let f = |r: f64| {
        if inside {
            others(r) + arc(r, lmax) - 2.0 * PI
        } else {
            others(r) - arc(r, lmax)
        }
    };
    let (mut lo, mut hi) = (r0, r0 * 2.0);
    while f(hi).signum() == f(lo).signum() {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut phi: f64 = 0.0;
    let mut raw = Vec::with_capacity(l.len());
    for (i, &x) in l.iter().enumerate() {
        raw.push([r * phi.cos(), r * phi.sin()]);
        phi += if i == imax && !inside {
            2.0 * PI - arc(r, x)
        } else {
            arc(r, x)
        };
    }
    let (ox, oy) = (raw[0][0], raw[0][1]);
    let rot = (raw[1][1] - oy).atan2(raw[1][0] - ox);
    let (c, s) = (rot.cos(), rot.sin());
    raw.iter()
        .map(|p| {
            let (x, y) = (p[0] - ox, p[1] - oy);
            [c * x + s * y, -s * x + c * y]
        })
        .collect()
}

/// The (2, 1, 2, 1) four-bar linkage, starting at the 2×1 rectangle.
pub fn four_bar() -> FlexFamily {
    make_flex_polygon(&[2.0, 1.0, 2.0, 1.0]).expect("four-bar linkage is feasible")
}

fn half_turn_z(p: [f64; 3]) -> Vec<f64> {
    vec![-p[0], -p[1], p[2]]
}

/// Line-symmetric Bricard octahedron. Opposite vertex pairs `(i, i + 3)` are
/// exchanged by the half-turn about the z-axis; all eight triangles choosing
/// one vertex of each pair are faces. Driven by the dihedral angle at edge
/// (0, 1), which increases by 0.3 rad.
pub fn make_bricard1() -> FlexFamily {
    let p = [[1.0, 0.2, 0.1], [0.1, 1.2, 0.5], [-0.7, 0.4, 1.1]];
    let mut verts: Vec<Vec<f64>> = p.iter().map(|q| q.to_vec()).collect();
    verts.extend(p.iter().map(|&q| half_turn_z(q)));
    let mut facets = Vec::new();
    for mask in 0..8usize {
        facets.push(
            (0..3)
                .map(|k| if mask >> k & 1 == 1 { k + 3 } else { k })
                .collect::<Vec<_>>(),
        );
    }
    let facets = orient_coherently(&facets).expect("octahedron is orientable");
    let surface = SimplicialSurface::new(3, verts, facets).expect("valid octahedron");
    let ridge = surface.find_ridge(&[0, 1]).expect("edge (0,1) exists");
    let driver = Driver::from_ridge(&surface, ridge);
    let start = surface.dihedral_angle(ridge);
    FlexFamily::driven("bricard-1", &surface, driver, start + 0.3, DEFAULT_STEPS).expect("bricard octahedron flexes")
}

/// Parameters of the nine-vertex construction (see [`steffen_construction`]).
/// Points `a`, `b`, `c` are given in cylindrical coordinates `(x, r, angle)`
/// about the x-axis; `psi` selects the symmetry axis of each crinkle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteffenParameters {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub psi: [f64; 2],
    /// Rotation of `a` about the x-axis over the family interval.
    pub sweep: f64,
}

pub const STEFFEN_PARAMETERS: SteffenParameters = SteffenParameters {
    a: [-0.8936, 1.1422, 1.3997],
    b: [1.0575, 1.2775, 4.9825],
    c: [0.4271, 1.6991, 3.3985],
    psi: [0.3459, 0.5387],
    sweep: 0.4,
};

type V3 = [f64; 3];

fn sub3(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit3(a: V3) -> V3 {
    let n = dot3(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Half-turn of `p` about the line through `m` with unit direction `d`.
fn half_turn(m: V3, d: V3, p: V3) -> V3 {
    let w = sub3(p, m);
    let k = 2.0 * dot3(d, w);
    [m[0] + k * d[0] - w[0], m[1] + k * d[1] - w[1], m[2] + k * d[2] - w[2]]
}

/// Images of `u`, `v` under the half-turn about the axis through the
/// midpoint of `ab`, perpendicular to `ab`, at angle `psi` in that normal plane.
fn crinkle(u: V3, v: V3, a: V3, b: V3, psi: f64) -> (V3, V3) {
    let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
    let n = unit3(sub3(b, a));
    let t = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = unit3(cross3(n, t));
    let e2 = cross3(n, e1);
    let d = [
        psi.cos() * e1[0] + psi.sin() * e2[0],
        psi.cos() * e1[1] + psi.sin() * e2[1],
        psi.cos() * e1[2] + psi.sin() * e2[2],
    ];
    (half_turn(m, d, u), half_turn(m, d, v))
}

fn cyl(p: [f64; 3]) -> V3 {
    [p[0], p[1] * p[2].cos(), p[1] * p[2].sin()]
}

/// Vertex placement and oriented facets of the nine-vertex surface.
///
/// Vertex order: `u, v, b, c, a, u1, v1, u2, v2` with `u = (-1/2, 0, 0)`,
/// `v = (1/2, 0, 0)`. A line-symmetric Bricard octahedron on the opposite pairs
/// `(u, u1)`, `(v, v1)`, `(a, b)` (symmetry: the half-turn exchanging `a` and
/// `b`), minus its two faces at edge `uv`, is the first crinkle. The second
/// is built the same way on `(u, v, a, c)`. Both crinkles share the boundary
/// edges `ua`, `va`; the triangles `bcu`, `bcv` close the surface. Keeping
/// `u, v, b, c` fixed and turning `a` about the line `uv` flexes both
/// crinkles at once, each like a hinged pair of triangles over `uv`.
pub fn steffen_construction(p: &SteffenParameters) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let u = [-0.5, 0.0, 0.0];
    let v = [0.5, 0.0, 0.0];
    let (a, b, c) = (cyl(p.a), cyl(p.b), cyl(p.c));
    let (u1, v1) = crinkle(u, v, a, b, p.psi[0]);
    let (u2, v2) = crinkle(u, v, a, c, p.psi[1]);
    let verts: Vec<Vec<f64>> = [u, v, b, c, a, u1, v1, u2, v2].iter().map(|x| x.to_vec()).collect();
    let (iu, iv, ib, ic, ia, iu1, iv1, iu2, iv2) = (0, 1, 2, 3, 4, 5, 6, 7, 8);
    let raw = vec![
        vec![iu, iv1, ia],
        vec![iu, iv1, ib],
        vec![iu1, iv, ia],
        vec![iu1, iv, ib],
        vec![iu1, iv1, ia],
        vec![iu1, iv1, ib],
        vec![iu, iv2, ia],
        vec![iu, iv2, ic],
        vec![iu2, iv, ia],
        vec![iu2, iv, ic],
        vec![iu2, iv2, ia],
        vec![iu2, iv2, ic],
        vec![ib, ic, iu],
        vec![ib, ic, iv],
    ];
    let mut facets = orient_coherently(&raw).expect("sphere is orientable");
    let s = SimplicialSurface::new(3, verts.clone(), facets.clone()).expect("valid construction");
    if s.oriented_volume() < 0.0 {
        for f in &mut facets {
            f.swap(0, 1);
        }
    }
    (verts, facets)
}

/// Builds the nine-vertex family from parameters: driven by the y-coordinate
/// of `a` while `a` turns by `sweep` about the x-axis.
pub fn steffen_family_from(p: &SteffenParameters) -> Result<FlexFamily> {
    let (verts, facets) = steffen_construction(p);
    let surface = SimplicialSurface::new(3, verts, facets)?;
    let end = p.a[1] * (p.a[2] + p.sweep).cos();
    let mut fam = FlexFamily::from_surface(
        "steffen",
        &surface,
        Parametrization::Continuation {
            driver: Driver::VertexCoordinate { vertex: 4, axis: 1 },
            start: surface.vertex(4)[1],
            end,
            steps: DEFAULT_STEPS,
        },
    )?;
    fam.gauge = vec![0, 1, 2];
    fam.validate()?;
    let state = crate::flex::advance_flex(&fam, 0.0)?;
    fam.reference_residual = Some(state.edge_residual(&fam));
    Ok(fam)
}

/// The checked-in nine-vertex family (`data/steffen.json`), as produced by
/// [`steffen_family_from`] with [`STEFFEN_PARAMETERS`].
pub fn make_steffen() -> FlexFamily {
    FlexFamily::from_json(include_str!("../data/steffen.json")).expect("bundled family is valid")
}

/// The unit cube as a constant family.
pub fn rigid_cube() -> FlexFamily {
    FlexFamily::rigid("cube", &shapes::unit_cube()).expect("cube is valid")
}
