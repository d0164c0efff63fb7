//! Closed, coherently oriented simplicial surfaces in R^d and their invariants.
//!
//! A surface of dimension `d` is a list of vertices in R^d and a list of
//! oriented (d-1)-simplices. A ridge is a (d-2)-face; for `d = 3` ridges are
//! edges, for `d = 2` they are the polygon vertices (with unit 0-measure).
//!
//! Orientation convention: a facet `(v_0, ..., v_{d-1})` has outward normal
//! `n` with `det(n, v_1 - v_0, ..., v_{d-1} - v_0) > 0`. For `d = 3` this is
//! the right-hand rule; for `d = 2` it makes counter-clockwise polygons
//! outward-oriented. Interior dihedral angles are measured on the side
//! opposite to that normal, so they are the angles of the bounded domain
//! when the surface is outward-oriented (positive oriented volume).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative threshold below which a facet counts as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// A (d-2)-face together with the two facets that contain it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// `(facet, position of the omitted vertex)` for both incident facets.
    pub incident: [(usize, usize); 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DihedralData {
    pub ridge: usize,
    /// Interior angle in radians, in (0, 2π) for an embedded surface.
    pub angle: f64,
    /// (d-2)-dimensional measure of the ridge.
    pub measure: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct SurfaceFile {
    dimension: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialSurface {
    dim: usize,
    coords: Vec<f64>,
    facets: Vec<Vec<usize>>,
    ridges: Vec<Ridge>,
}

impl SimplicialSurface {
    /// Builds and validates a surface: closed, coherently oriented, no degenerate facet.
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>, facets: Vec<Vec<usize>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension {
                found: dim,
                expected: ">= 2",
            });
        }
        let mut coords = Vec::with_capacity(vertices.len() * dim);
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidSurface(format!(
                    "vertex {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSurface(format!("vertex {i} is not finite")));
            }
            coords.extend_from_slice(v);
        }
        Self::from_flat(dim, coords, facets)
    }

    pub(crate) fn from_flat(dim: usize, coords: Vec<f64>, facets: Vec<Vec<usize>>) -> Result<Self> {
        let nv = coords.len() / dim;
        if facets.is_empty() {
            return Err(Error::InvalidSurface("no facets".into()));
        }
        for (f, facet) in facets.iter().enumerate() {
            if facet.len() != dim {
                return Err(Error::InvalidSurface(format!(
                    "facet {f} has {} vertices, expected {dim}",
                    facet.len()
                )));
            }
            if facet.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidSurface(format!("facet {f} references a missing vertex")));
            }
            let mut s = facet.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != dim {
                return Err(Error::InvalidSurface(format!("facet {f} repeats a vertex")));
            }
        }
        let ridges = build_ridges(&facets)?;
        let surface = Self {
            dim,
            coords,
            facets,
            ridges,
        };
        surface.check_orientation()?;
        surface.check_degeneracy()?;
        Ok(surface)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        (0..self.num_vertices()).map(|i| self.vertex(i).to_vec()).collect()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn ridges(&self) -> &[Ridge] {
        &self.ridges
    }

    /// Sorted list of distinct edges (vertex pairs) of all facets.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        edges_of(&self.facets)
    }

    /// Same combinatorics, new coordinates (validated).
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.coords.len() {
            return Err(Error::InvalidSurface("coordinate count changed".into()));
        }
        let s = Self {
            dim: self.dim,
            coords,
            facets: self.facets.clone(),
            ridges: self.ridges.clone(),
        };
        s.check_degeneracy()?;
        Ok(s)
    }

    /// All facet orientations flipped.
    pub fn reversed(&self) -> Self {
        let facets: Vec<Vec<usize>> = self
            .facets
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.swap(0, 1);
                g
            })
            .collect();
        let ridges = build_ridges(&facets).expect("reversal preserves the ridge structure");
        Self {
            dim: self.dim,
            coords: self.coords.clone(),
            facets,
            ridges,
        }
    }

    /// Applies `x -> f(x)` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let coords: Vec<f64> = (0..self.num_vertices()).flat_map(|i| f(self.vertex(i))).collect();
        self.with_coords(coords)
    }

    pub fn facet_points(&self, f: usize) -> Vec<&[f64]> {
        self.facets[f].iter().map(|&v| self.vertex(v)).collect()
    }

    fn facet_edges(&self, f: usize) -> Vec<Vec<f64>> {
        let pts = self.facet_points(f);
        pts[1..].iter().map(|p| linalg::sub(p, pts[0])).collect()
    }

    /// (d-1)-measure of facet `f`.
    pub fn facet_measure(&self, f: usize) -> f64 {
        linalg::simplex_measure(&self.facet_edges(f))
    }

    /// Outward normal (unnormalized) of facet `f`.
    pub fn facet_normal(&self, f: usize) -> Vec<f64> {
        linalg::cofactor_normal(&self.facet_edges(f))
    }

    fn check_degeneracy(&self) -> Result<()> {
        for f in 0..self.facets.len() {
            let pts = self.facet_points(f);
            let mut longest: f64 = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    longest = longest.max(linalg::dist(pts[i], pts[j]));
                }
            }
            let threshold = DEGENERACY_TOLERANCE * longest.powi(self.dim as i32 - 1);
            let measure = self.facet_measure(f);
            if !(measure > threshold) {
                return Err(Error::DegenerateFacet {
                    facet: f,
                    measure,
                    threshold,
                });
            }
        }
        Ok(())
    }

    fn check_orientation(&self) -> Result<()> {
        for r in &self.ridges {
            let s0 = induced_sign(&self.facets[r.incident[0].0], r.incident[0].1);
            let s1 = induced_sign(&self.facets[r.incident[1].0], r.incident[1].1);
            if s0 == s1 {
                return Err(Error::InvalidSurface(format!(
                    "facets {} and {} induce the same orientation on ridge {:?}",
                    r.incident[0].0, r.incident[1].0, r.vertices
                )));
            }
        }
        Ok(())
    }

    /// Signed d-volume enclosed, `(1/d!) Σ det(v_0 - c, ..., v_{d-1} - c)`.
    pub fn oriented_volume(&self) -> f64 {
        let d = self.dim;
        let n = self.num_vertices() as f64;
        let mut c = vec![0.0; d];
        for i in 0..self.num_vertices() {
            linalg::axpy(1.0 / n, self.vertex(i), &mut c);
        }
        let fact: f64 = (1..=d).map(|i| i as f64).product();
        let sum: f64 = self
            .facets
            .iter()
            .map(|f| {
                let rows: Vec<Vec<f64>> = f.iter().map(|&v| linalg::sub(self.vertex(v), &c)).collect();
                linalg::det(&rows)
            })
            .sum();
        sum / fact
    }

    /// Total (d-1)-measure of the surface.
    pub fn surface_area(&self) -> f64 {
        (0..self.facets.len()).map(|f| self.facet_measure(f)).sum()
    }

    pub fn ridge_measure(&self, r: usize) -> f64 {
        let rv = &self.ridges[r].vertices;
        let edges: Vec<Vec<f64>> = rv[1..]
            .iter()
            .map(|&v| linalg::sub(self.vertex(v), self.vertex(rv[0])))
            .collect();
        linalg::simplex_measure(&edges)
    }

    /// Interior dihedral angle at ridge `r`, in [0, 2π).
    ///
    /// With `p` a ridge vertex, `w1`, `w2` the components of the two opposite
    /// facet vertices orthogonal to the ridge, and `n1` the outward normal of
    /// the first facet, the angle is `atan2(-<w2, n1>, <w2, w1>)` in the
    /// plane spanned by `w1` and `-n1`. A negative second component is the
    /// reflex case: the far vertex lies outside the first facet's half-space.
    pub fn dihedral_angle(&self, r: usize) -> f64 {
        ridge_angle(self.dim, &self.coords, &self.facets, &self.ridges[r])
    }

    pub fn dihedral_angles(&self) -> Vec<DihedralData> {
        (0..self.ridges.len())
            .map(|r| DihedralData {
                ridge: r,
                angle: self.dihedral_angle(r),
                measure: self.ridge_measure(r),
            })
            .collect()
    }

    /// `½ Σ (π - φ_i) ℓ_i` over edges; only defined for d = 3.
    pub fn integral_mean_curvature(&self) -> Result<f64> {
        if self.dim != 3 {
            return Err(Error::UnsupportedDimension {
                found: self.dim,
                expected: "3",
            });
        }
        Ok(0.5
            * self
                .dihedral_angles()
                .iter()
                .map(|d| (PI - d.angle) * d.measure)
                .sum::<f64>())
    }

    /// Index of the ridge with the given (unordered) vertex set.
    pub fn find_ridge(&self, vertices: &[usize]) -> Option<usize> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        self.ridges.iter().position(|r| r.vertices == key)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let n = self.num_vertices();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(linalg::dist(self.vertex(i), self.vertex(j)));
            }
        }
        d
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: SurfaceFile = serde_json::from_str(text)?;
        Self::new(f.dimension, f.vertices, f.facets)
    }

    pub fn to_json(&self) -> String {
        let f = SurfaceFile {
            dimension: self.dim,
            vertices: self.vertices(),
            facets: self.facets.clone(),
        };
        serde_json::to_string_pretty(&f).expect("surface serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Interior angle at `ridge` for the given flat coordinates; see
/// [`SimplicialSurface::dihedral_angle`].
pub(crate) fn ridge_angle(dim: usize, coords: &[f64], facets: &[Vec<usize>], ridge: &Ridge) -> f64 {
    let (f1, k1) = ridge.incident[0];
    let (f2, k2) = ridge.incident[1];
    angle_from_points(dim, coords, &facets[f1], k1, facets[f2][k2])
}

/// Interior angle at the ridge `facet \ {facet[omit]}` between the oriented
/// `facet` and the simplex spanned by the ridge and `apex`.
pub(crate) fn angle_from_points(dim: usize, coords: &[f64], facet: &[usize], omit: usize, apex: usize) -> f64 {
    let vx = |i: usize| &coords[i * dim..(i + 1) * dim];
    let ridge: Vec<usize> = facet
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != omit)
        .map(|(_, &v)| v)
        .collect();
    let p = vx(ridge[0]);
    let basis = linalg::orthonormal_basis(&ridge[1..].iter().map(|&v| linalg::sub(vx(v), p)).collect::<Vec<_>>());
    let w1 = linalg::reject(&linalg::sub(vx(facet[omit]), p), &basis);
    let w2 = linalg::reject(&linalg::sub(vx(apex), p), &basis);
    let q0 = vx(facet[0]);
    let fe: Vec<Vec<f64>> = facet[1..].iter().map(|&v| linalg::sub(vx(v), q0)).collect();
    let n1 = linalg::cofactor_normal(&fe);
    let x = linalg::dot(&w2, &w1) / linalg::norm(&w1);
    let y = -linalg::dot(&w2, &n1) / linalg::norm(&n1);
    let a = y.atan2(x);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Sign of the orientation induced on the ridge obtained by deleting
/// position `k` of `facet`, relative to the sorted order of that ridge.
fn induced_sign(facet: &[usize], k: usize) -> i8 {
    let rest: Vec<usize> = facet
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &v)| v)
        .collect();
    let mut inversions = 0;
    for i in 0..rest.len() {
        for j in i + 1..rest.len() {
            if rest[i] > rest[j] {
                inversions += 1;
            }
        }
    }
    let base = if k % 2 == 0 { 1 } else { -1 };
    if inversions % 2 == 0 {
        base
    } else {
        -base
    }
}

fn build_ridges(facets: &[Vec<usize>]) -> Result<Vec<Ridge>> {
    let mut map: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for (f, facet) in facets.iter().enumerate() {
        for k in 0..facet.len() {
            let mut key: Vec<usize> = facet
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &v)| v)
                .collect();
            key.sort_unstable();
            map.entry(key).or_default().push((f, k));
        }
    }
    map.into_iter()
        .map(|(vertices, inc)| {
            if inc.len() != 2 {
                Err(Error::NonManifoldRidge {
                    ridge: vertices,
                    count: inc.len(),
                })
            } else {
                Ok(Ridge {
                    vertices,
                    incident: [inc[0], inc[1]],
                })
            }
        })
        .collect()
}

/// Flips facets so that neighbours induce opposite orientations on shared
/// ridges. The first facet of each connected component keeps its order.
/// Fails on non-manifold or non-orientable input.
pub fn orient_coherently(facets: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let ridges = build_ridges(facets)?;
    let mut adj: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); facets.len()];
    for r in &ridges {
        let [(f, k), (g, l)] = r.incident;
        adj[f].push((g, k, l));
        adj[g].push((f, l, k));
    }
    let mut flipped: Vec<Option<bool>> = vec![None; facets.len()];
    for start in 0..facets.len() {
        if flipped[start].is_some() {
            continue;
        }
        flipped[start] = Some(false);
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            for &(g, k, l) in &adj[f] {
                let sf = induced_sign(&facets[f], k) * if flipped[f] == Some(true) { -1 } else { 1 };
                let sg = induced_sign(&facets[g], l);
                // g must induce -sf
                let want = sg != -sf;
                match flipped[g] {
                    None => {
                        flipped[g] = Some(want);
                        stack.push(g);
                    }
                    Some(w) if w != want => {
                        return Err(Error::InvalidSurface("surface is not orientable".into()))
                    }
                    _ => {}
                }
            }
        }
    }
    let mut out = facets.to_vec();
    for (f, fl) in out.iter_mut().zip(&flipped) {
        if *fl == Some(true) {
            f.swap(0, 1);
        }
    }
    Ok(out)
}

pub(crate) fn edges_of(facets: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = facets
        .iter()
        .flat_map(|f| {
            let mut out = Vec::new();
            for i in 0..f.len() {
                for j in i + 1..f.len() {
                    out.push((f[i].min(f[j]), f[i].max(f[j])));
                }
            }
            out
        })
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

/// Ready-made test bodies.
pub mod shapes {
    use super::*;

    /// Axis-aligned box `[0,a]×[0,b]×[0,c]`, 12 outward-oriented triangles.
    pub fn cuboid(a: f64, b: f64, c: f64) -> SimplicialSurface {
        let v = vec![
            vec![0.0, 0.0, 0.0],
            vec![a, 0.0, 0.0],
            vec![a, b, 0.0],
            vec![0.0, b, 0.0],
            vec![0.0, 0.0, c],
            vec![a, 0.0, c],
            vec![a, b, c],
            vec![0.0, b, c],
        ];
        let quads = [
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        let facets = quads
            .iter()
            .flat_map(|q| [vec![q[0], q[1], q[2]], vec![q[0], q[2], q[3]]])
            .collect();
        SimplicialSurface::new(3, v, facets).expect("cuboid is valid")
    }

    pub fn unit_cube() -> SimplicialSurface {
        cuboid(1.0, 1.0, 1.0)
    }

    /// Corner tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1).
    pub fn corner_tetrahedron() -> SimplicialSurface {
        let v = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let f = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
        SimplicialSurface::new(3, v, f).expect("tetrahedron is valid")
    }

    /// Closed polygon from a vertex loop (counter-clockwise = outward-oriented).
    pub fn polygon(points: &[[f64; 2]]) -> Result<SimplicialSurface> {
        let n = points.len();
        let v = points.iter().map(|p| p.to_vec()).collect();
        let f = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        SimplicialSurface::new(2, v, f)
    }

    pub fn unit_square() -> SimplicialSurface {
        polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("square is valid")
    }

    /// Prism over the L-shaped region `[0,2]² \ (1,2]²` with height 1.
    pub fn l_prism() -> SimplicialSurface {
        let base = [
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ];
        let n = base.len();
        let mut v: Vec<Vec<f64>> = base.iter().map(|p| vec![p[0], p[1], 0.0]).collect();
        v.extend(base.iter().map(|p| vec![p[0], p[1], 1.0]));
        let mut f = Vec::new();
        // bottom (normal -z) and top (+z): fan triangulations of the L from vertex 0 / split into two rectangles
        let bottom = [[0, 3, 1], [1, 3, 2], [0, 5, 4], [0, 4, 3]];
        for t in bottom {
            f.push(vec![t[0], t[1], t[2]]);
            f.push(vec![t[0] + n, t[2] + n, t[1] + n]);
        }
        for i in 0..n {
            let j = (i + 1) % n;
            f.push(vec![i, j, j + n]);
            f.push(vec![i, j + n, i + n]);
        }
        SimplicialSurface::new(3, v, f).expect("L prism is valid")
    }
}
