//! Conforming triangle meshes of simple polygons.
//!
//! The polygon is inserted as a closed constraint loop into a constrained
//! Delaunay triangulation, which is then refined Ruppert-style (circumcenter
//! insertion, constraint edges split at midpoints) until every triangle
//! meets the angle bound and an area cap derived from `h`. The cap is
//! tightened until the longest edge is at most `h`.

use std::collections::HashMap;
use std::f64::consts::PI;

use flexspec_core::surface::shapes::polygon;
use flexspec_core::is_embedded;
use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};

/// Minimum interior angle enforced away from sharper polygon corners (degrees).
pub const MIN_ANGLE_DEG: f64 = 15.0;
/// Angle bound handed to the refinement (degrees); a margin above `MIN_ANGLE_DEG`.
const REFINE_ANGLE_DEG: f64 = 25.0;
const MAX_TIGHTENINGS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Target element size the mesh was generated for.
    pub h: f64,
}

fn signed_area(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn len(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Interior angles of a triangle, radians.
fn angles(p: [&[f64; 2]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        out[i] = (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1]);
    }
    out
}

/// Signed area of a vertex loop (positive for counter-clockwise).
pub fn loop_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

/// Smallest interior angle of a simple counter-clockwise loop (radians).
fn min_corner_angle(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (p, c, q) = (points[(i + n - 1) % n], points[i], points[(i + 1) % n]);
            let u = [q[0] - c[0], q[1] - c[1]];
            let v = [p[0] - c[0], p[1] - c[1]];
            let a = (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
            if a < 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Mesh the interior of a simple polygon with elements of diameter at most `h`.
/// Either orientation is accepted; every input vertex becomes a mesh node.
pub fn triangulate(points: &[[f64; 2]], h: f64) -> Result<Mesh2D> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("target size h = {h}")));
    }
    if points.len() < 3 {
        return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
    }
    let surface = polygon(points).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if !is_embedded(&surface) {
        return Err(Error::SelfIntersecting);
    }
    let mut pts = points.to_vec();
    if loop_area(&pts) < 0.0 {
        pts.reverse();
    }
    let corner = min_corner_angle(&pts);
    let angle = REFINE_ANGLE_DEG.min(corner.to_degrees() * 0.9);
    let mut area_cap = 3f64.sqrt() / 4.0 * (0.9 * h).powi(2);
    for _ in 0..MAX_TIGHTENINGS {
        let mesh = refine(&pts, h, area_cap, angle)?;
        if mesh.max_edge() <= h {
            // sharp input corners cannot be refined past their own angle
            let bound = MIN_ANGLE_DEG.min(0.5 * corner.to_degrees());
            if mesh.min_angle_deg() < bound {
                return Err(Error::MeshFailure(format!(
                    "minimum angle {:.2}° below {bound:.2}°",
                    mesh.min_angle_deg()
                )));
            }
            return Ok(mesh);
        }
        area_cap *= 0.7;
    }
    Err(Error::MeshFailure(format!("could not reach element size {h}")))
}

fn refine(pts: &[[f64; 2]], h: f64, area_cap: f64, angle_deg: f64) -> Result<Mesh2D> {
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    cdt.add_constraint_edges(pts.iter().map(|p| Point2::new(p[0], p[1])), true)
        .map_err(|e| Error::MeshFailure(format!("{e:?}")))?;
    let bbox = pts.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |a, p| {
        [a[0].min(p[0]).min(p[1]), a[1].max(p[0]).max(p[1])]
    });
    let expected = ((bbox[1] - bbox[0]).powi(2) / area_cap) as usize;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .with_angle_limit(AngleLimit::from_deg(angle_deg))
        .with_max_allowed_area(area_cap)
        .with_max_additional_vertices(8 * expected + 1000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::MeshFailure("refinement ran out of vertices".into()));
    }
    let excluded: std::collections::HashSet<_> = result.excluded_faces.iter().copied().collect();

    let mut index = HashMap::new();
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let mut tri = [0usize; 3];
        for (k, v) in face.vertices().iter().enumerate() {
            let id = *index.entry(v.fix()).or_insert_with(|| {
                let p = v.position();
                nodes.push([p.x, p.y]);
                nodes.len() - 1
            });
            tri[k] = id;
        }
        triangles.push(tri);
    }
    let mut boundary = vec![false; nodes.len()];
    for e in cdt.undirected_edges() {
        if cdt.is_constraint_edge(e.fix()) {
            for v in e.vertices() {
                if let Some(&i) = index.get(&v.fix()) {
                    boundary[i] = true;
                }
            }
        }
    }
    let mesh = Mesh2D {
        nodes,
        triangles,
        boundary,
        h,
    };
    mesh.validate()?;
    Ok(mesh)
}

impl Mesh2D {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_points(&self, t: usize) -> [&[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [&self.nodes[a], &self.nodes[b], &self.nodes[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                signed_area(a, b, c)
            })
            .sum()
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                len(a, b).max(len(b, c)).max(len(c, a))
            })
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len())
            .flat_map(|t| angles(self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Undirected edges with their incident triangle count.
    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    /// Positive orientation, conformity and boundary flags.
    pub fn validate(&self) -> Result<()> {
        if self.boundary.len() != self.nodes.len() {
            return Err(Error::MeshFailure("boundary flags do not match nodes".into()));
        }
        let scale = self.h * self.h;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            if !(signed_area(a, b, c) > 1e-12 * scale) {
                return Err(Error::MeshFailure(format!("triangle {t} has non-positive area")));
            }
        }
        for ((a, b), n) in self.edge_counts() {
            match n {
                1 if !(self.boundary[a] && self.boundary[b]) => {
                    return Err(Error::MeshFailure(format!("free edge ({a},{b}) off the boundary")));
                }
                1 | 2 => {}
                _ => return Err(Error::MeshFailure(format!("edge ({a},{b}) shared by {n} triangles"))),
            }
        }
        Ok(())
    }

    /// Red refinement: every triangle split into four by its edge midpoints.
    /// Element diameters halve and shapes are preserved, so the result is the
    /// nested `h/2` mesh.
    pub fn refine_uniform(&self) -> Mesh2D {
        let counts = self.edge_counts();
        let mut nodes = self.nodes.clone();
        let mut boundary = self.boundary.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>, boundary: &mut Vec<bool>| {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5]);
                boundary.push(counts[&key] == 1);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut nodes, &mut boundary);
            let bc = mid(b, c, &mut nodes, &mut boundary);
            let ca = mid(c, a, &mut nodes, &mut boundary);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        Mesh2D {
            nodes,
            triangles,
            boundary,
            h: self.h * 0.5,
        }
    }

    /// Uniformly scaled copy.
    pub fn scaled(&self, c: f64) -> Mesh2D {
        Mesh2D {
            nodes: self.nodes.iter().map(|p| [p[0] * c, p[1] * c]).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            h: self.h * c,
        }
    }
}
