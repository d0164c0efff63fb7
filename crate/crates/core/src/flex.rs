//! Flexes: one-parameter families of surfaces with rigid faces.
//!
//! A [`FlexFamily`] stores the combinatorics, a reference placement (the state
//! at `s = 0`), the bars whose lengths are held fixed, and a parametrization.
//! Vertices listed in `attachments` are not unknowns: they ride along with a
//! frame of other vertices (used for subdivision points and tent apexes).
//!
//! Continuation families are tracked by predictor-corrector continuation on
//! the bar-length system. The flex parameter `s ∈ [0, 1]` maps linearly onto
//! a driving quantity (a dihedral angle or a vertex coordinate). Rigid motions
//! are removed by pinning the gauge vertices: the first is fixed, the second
//! kept on its reference line, the third in its reference plane, and so on.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::surface::{angle_from_points, edges_of, SimplicialSurface};

/// Corrector convergence threshold on every residual component.
pub const CORRECTOR_TOLERANCE: f64 = 1e-12;
/// A step is accepted only if the corrector converges within this many iterations.
pub const MAX_CORRECTOR_ITERATIONS: usize = 8;
/// Step halvings allowed per grid interval before giving up.
pub const MAX_BISECTIONS: usize = 40;
/// Relative singular-value threshold for numerical rank.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Driver {
    /// Coordinate `axis` of `vertex`.
    VertexCoordinate { vertex: usize, axis: usize },
    /// Interior angle at the ridge `facet \ {facet[omit]}` between the
    /// oriented `facet` and the simplex spanned by that ridge and `apex`.
    DihedralAngle {
        facet: Vec<usize>,
        omit: usize,
        apex: usize,
    },
}

impl Driver {
    /// The dihedral angle of ridge `r` of `s`, frozen on its current vertices.
    pub fn from_ridge(s: &SimplicialSurface, r: usize) -> Self {
        let ridge = &s.ridges()[r];
        let (f1, k1) = ridge.incident[0];
        let (f2, k2) = ridge.incident[1];
        Driver::DihedralAngle {
            facet: s.facets()[f1].clone(),
            omit: k1,
            apex: s.facets()[f2][k2],
        }
    }

    pub fn value(&self, dim: usize, coords: &[f64]) -> f64 {
        match self {
            Driver::VertexCoordinate { vertex, axis } => coords[vertex * dim + axis],
            Driver::DihedralAngle { facet, omit, apex } => angle_from_points(dim, coords, facet, *omit, *apex),
        }
    }

    fn vertices(&self) -> Vec<usize> {
        match self {
            Driver::VertexCoordinate { vertex, .. } => vec![*vertex],
            Driver::DihedralAngle { facet, apex, .. } => {
                let mut v = facet.clone();
                v.push(*apex);
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

/// A vertex rigidly carried by `frame` (d vertices spanning a hyperplane).
/// `local` holds its coordinates in the orthonormal frame built by
/// [`frame_basis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub vertex: usize,
    pub frame: Vec<usize>,
    pub local: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parametrization {
    /// Closed form: every `s` gives the reference placement.
    Static,
    /// Driver value `start + s·(end − start)`, tracked on a grid of `steps`
    /// intervals.
    Continuation {
        driver: Driver,
        start: f64,
        end: f64,
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexFamily {
    pub name: String,
    pub dimension: usize,
    pub facets: Vec<Vec<usize>>,
    /// Placement at `s = 0`, one coordinate vector per vertex.
    pub reference: Vec<Vec<f64>>,
    pub bars: Vec<Bar>,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
    /// Vertices pinned to remove rigid motions (d of them).
    pub gauge: Vec<usize>,
    pub parametrization: Parametrization,
    /// Max relative bar residual of the stored reference, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_residual: Option<f64>,
}

/// Origin and orthonormal basis of the frame spanned by `pts` (d points in R^d).
/// The last axis is the unit cofactor normal of the first d-1.
pub(crate) fn frame_basis(pts: &[&[f64]]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let o = pts[0].to_vec();
    let mut basis = linalg::orthonormal_basis(&pts[1..].iter().map(|p| linalg::sub(p, &o)).collect::<Vec<_>>());
    let n = linalg::cofactor_normal(&basis);
    let nn = linalg::norm(&n);
    basis.push(linalg::scale(&n, 1.0 / nn));
    (o, basis)
}

fn to_local(x: &[f64], pts: &[&[f64]]) -> Vec<f64> {
    let (o, b) = frame_basis(pts);
    let w = linalg::sub(x, &o);
    b.iter().map(|e| linalg::dot(&w, e)).collect()
}

fn from_local(local: &[f64], pts: &[&[f64]]) -> Vec<f64> {
    let (mut o, b) = frame_basis(pts);
    for (c, e) in local.iter().zip(&b) {
        linalg::axpy(*c, e, &mut o);
    }
    o
}

impl Attachment {
    /// Records `vertex` relative to `frame` in the placement `coords`.
    pub fn new(vertex: usize, frame: Vec<usize>, dim: usize, coords: &[f64]) -> Self {
        let pts: Vec<&[f64]> = frame.iter().map(|&v| &coords[v * dim..(v + 1) * dim]).collect();
        let local = to_local(&coords[vertex * dim..(vertex + 1) * dim], &pts);
        Self { vertex, frame, local }
    }

    fn place(&self, dim: usize, coords: &[f64]) -> Vec<f64> {
        let pts: Vec<&[f64]> = self.frame.iter().map(|&v| &coords[v * dim..(v + 1) * dim]).collect();
        from_local(&self.local, &pts)
    }
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

/// First `dim` vertices of `coords` in general position.
fn default_gauge(dim: usize, coords: &[f64], candidates: &[usize]) -> Vec<usize> {
    let vx = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut g: Vec<usize> = Vec::new();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for &v in candidates {
        if g.len() == dim {
            break;
        }
        if g.is_empty() {
            g.push(v);
            continue;
        }
        let mut trial = dirs.clone();
        trial.push(linalg::sub(vx(v), vx(g[0])));
        if linalg::orthonormal_basis(&trial).len() == trial.len() {
            dirs = trial;
            g.push(v);
        }
    }
    g
}

impl FlexFamily {
    /// Family with every surface edge as a bar and gauge chosen automatically.
    pub fn from_surface(name: &str, surface: &SimplicialSurface, parametrization: Parametrization) -> Result<Self> {
        let dim = surface.dim();
        let coords = surface.coords();
        let bars = surface
            .edges()
            .into_iter()
            .map(|(i, j)| Bar {
                i,
                j,
                length: linalg::dist(surface.vertex(i), surface.vertex(j)),
            })
            .collect();
        let all: Vec<usize> = (0..surface.num_vertices()).collect();
        let fam = Self {
            name: name.to_string(),
            dimension: dim,
            facets: surface.facets().to_vec(),
            reference: surface.vertices(),
            bars,
            attachments: Vec::new(),
            gauge: default_gauge(dim, coords, &all),
            parametrization,
            reference_residual: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Rigid (constant) family.
    pub fn rigid(name: &str, surface: &SimplicialSurface) -> Result<Self> {
        Self::from_surface(name, surface, Parametrization::Static)
    }

    /// Continuation family whose driver moves linearly from its reference value to `end`.
    pub fn driven(name: &str, surface: &SimplicialSurface, driver: Driver, end: f64, steps: usize) -> Result<Self> {
        let start = driver.value(surface.dim(), surface.coords());
        Self::from_surface(
            name,
            surface,
            Parametrization::Continuation {
                driver,
                start,
                end,
                steps,
            },
        )
    }

    pub fn num_vertices(&self) -> usize {
        self.reference.len()
    }

    pub fn reference_coords(&self) -> Vec<f64> {
        flatten(&self.reference)
    }

    pub fn reference_surface(&self) -> Result<SimplicialSurface> {
        SimplicialSurface::new(self.dimension, self.reference.clone(), self.facets.clone())
    }

    pub fn is_static(&self) -> bool {
        matches!(self.parametrization, Parametrization::Static)
    }

    /// Checks lengths, frames, gauge, surface validity and (for continuation
    /// families) the flexibility witness: the bar Jacobian at the reference
    /// has a kernel beyond rigid motions.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        let n = self.num_vertices();
        self.reference_surface()?;
        let attached: Vec<bool> = {
            let mut a = vec![false; n];
            for at in &self.attachments {
                a[at.vertex] = true;
            }
            a
        };
        for b in &self.bars {
            if b.i >= n || b.j >= n || !(b.length > 0.0) {
                return Err(Error::InvalidFamily(format!("bar ({}, {}) is invalid", b.i, b.j)));
            }
            if attached[b.i] || attached[b.j] {
                return Err(Error::InvalidFamily("bars must join free vertices".into()));
            }
        }
        for at in &self.attachments {
            if at.frame.len() != d || at.local.len() != d || at.frame.iter().any(|&v| v >= n || attached[v]) {
                return Err(Error::InvalidFamily(format!("attachment of vertex {} is invalid", at.vertex)));
            }
        }
        if self.gauge.len() != d || self.gauge.iter().any(|&v| v >= n || attached[v]) {
            return Err(Error::InvalidFamily("gauge needs d free vertices".into()));
        }
        if let Parametrization::Continuation { driver, steps, .. } = &self.parametrization {
            if *steps == 0 {
                return Err(Error::InvalidFamily("continuation needs at least one step".into()));
            }
            if driver.vertices().iter().any(|&v| v >= n || attached[v]) {
                return Err(Error::InvalidFamily("driver must use free vertices".into()));
            }
            if let Driver::VertexCoordinate { axis, .. } = driver {
                if *axis >= d {
                    return Err(Error::InvalidFamily("driver axis out of range".into()));
                }
            }
            let sys = System::new(self);
            let x = sys.core_of(&self.reference_coords());
            if sys.kernel_dim(&x) == 0 {
                return Err(Error::NotFlexible(format!(
                    "{}: bar system is rigid at the reference placement",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Length of every facet edge at the reference placement.
    pub fn facet_edge_lengths(&self) -> Vec<((usize, usize), f64)> {
        edges_of(&self.facets)
            .into_iter()
            .map(|(i, j)| ((i, j), linalg::dist(&self.reference[i], &self.reference[j])))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Driver value at parameter `s` (continuation families only).
    pub fn driver_target(&self, s: f64) -> Option<f64> {
        match &self.parametrization {
            Parametrization::Static => None,
            Parametrization::Continuation { start, end, .. } => Some(start + s * (end - start)),
        }
    }
}

/// A placement of a family at parameter `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexState {
    pub s: f64,
    pub dimension: usize,
    /// Flat coordinates of all vertices.
    pub coords: Vec<f64>,
    /// Set when the bar Jacobian lost rank here (possible branch point).
    pub warning: Option<String>,
}

impl FlexState {
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn surface(&self, family: &FlexFamily) -> Result<SimplicialSurface> {
        let verts: Vec<Vec<f64>> = self.coords.chunks(self.dimension).map(|c| c.to_vec()).collect();
        SimplicialSurface::new(self.dimension, verts, family.facets.clone())
    }

    /// Max relative deviation of facet-edge lengths from the reference.
    pub fn edge_residual(&self, family: &FlexFamily) -> f64 {
        family
            .facet_edge_lengths()
            .iter()
            .map(|&((i, j), l)| (linalg::dist(self.vertex(i), self.vertex(j)) - l).abs() / l)
            .fold(0.0, f64::max)
    }
}

/// True iff the two placements have the same inter-vertex distance matrix
/// within 1e-8 of the larger diameter (congruence up to rigid motion and reflection).
pub fn check_congruence(a: &FlexState, b: &FlexState) -> bool {
    if a.coords.len() != b.coords.len() || a.dimension != b.dimension {
        return false;
    }
    let n = a.coords.len() / a.dimension;
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let da = linalg::dist(a.vertex(i), a.vertex(j));
            let db = linalg::dist(b.vertex(i), b.vertex(j));
            scale = scale.max(da).max(db);
            worst = worst.max((da - db).abs());
        }
    }
    worst <= 1e-8 * scale
}

/// The bar, gauge and driver equations in the free coordinates.
struct System<'a> {
    fam: &'a FlexFamily,
    dim: usize,
    /// Free vertices, in slot order.
    free: Vec<usize>,
    slot: Vec<Option<usize>>,
    /// (vertex, direction, right-hand side) of linear gauge equations.
    gauge_rows: Vec<(usize, Vec<f64>, f64)>,
}

impl<'a> System<'a> {
    fn new(fam: &'a FlexFamily) -> Self {
        let d = fam.dimension;
        let n = fam.num_vertices();
        let mut attached = vec![false; n];
        for a in &fam.attachments {
            attached[a.vertex] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&v| !attached[v]).collect();
        let mut slot = vec![None; n];
        for (k, &v) in free.iter().enumerate() {
            slot[v] = Some(k);
        }
        let g0 = &fam.reference[fam.gauge[0]];
        let mut gauge_rows = Vec::new();
        let mut span: Vec<Vec<f64>> = Vec::new();
        for (k, &g) in fam.gauge.iter().enumerate() {
            if k > 0 {
                span.push(linalg::sub(&fam.reference[g], g0));
            }
            let b = linalg::orthonormal_basis(&span);
            let mut complete = b.clone();
            for axis in 0..d {
                let mut e = vec![0.0; d];
                e[axis] = 1.0;
                complete.push(e);
            }
            let full = linalg::orthonormal_basis(&complete);
            for dir in full.into_iter().skip(b.len()) {
                let rhs = linalg::dot(&dir, g0);
                gauge_rows.push((g, dir, rhs));
            }
        }
        Self {
            fam,
            dim: d,
            free,
            slot,
            gauge_rows,
        }
    }

    fn nvars(&self) -> usize {
        self.free.len() * self.dim
    }

    fn core_of(&self, coords: &[f64]) -> Vec<f64> {
        let d = self.dim;
        self.free.iter().flat_map(|&v| coords[v * d..(v + 1) * d].to_vec()).collect()
    }

    fn full_of(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut c = vec![0.0; self.fam.num_vertices() * d];
        for (k, &v) in self.free.iter().enumerate() {
            c[v * d..(v + 1) * d].copy_from_slice(&x[k * d..(k + 1) * d]);
        }
        for a in &self.fam.attachments {
            let p = a.place(d, &c);
            c[a.vertex * d..(a.vertex + 1) * d].copy_from_slice(&p);
        }
        c
    }

    fn xv<'b>(&self, x: &'b [f64], v: usize) -> &'b [f64] {
        let k = self.slot[v].expect("free vertex");
        &x[k * self.dim..(k + 1) * self.dim]
    }

    fn nconstraints(&self) -> usize {
        self.fam.bars.len() + self.gauge_rows.len()
    }

    /// Bar and gauge residuals, followed by the driver residual if `target` is given.
    fn residual(&self, x: &[f64], target: Option<(&Driver, f64)>) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.nconstraints() + 1);
        for b in &self.fam.bars {
            r.push((linalg::dist(self.xv(x, b.i), self.xv(x, b.j)) - b.length) / b.length);
        }
        for (v, dir, rhs) in &self.gauge_rows {
            r.push(linalg::dot(dir, self.xv(x, *v)) - rhs);
        }
        if let Some((drv, t)) = target {
            r.push(self.driver_value(drv, x) - t);
        }
        r
    }

    fn driver_value(&self, drv: &Driver, x: &[f64]) -> f64 {
        match drv {
            Driver::VertexCoordinate { vertex, axis } => self.xv(x, *vertex)[*axis],
            _ => drv.value(self.dim, &self.full_of(x)),
        }
    }

    fn driver_gradient(&self, drv: &Driver, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut g = vec![0.0; self.nvars()];
        match drv {
            Driver::VertexCoordinate { vertex, axis } => {
                g[self.slot[*vertex].unwrap() * d + axis] = 1.0;
            }
            Driver::DihedralAngle { .. } => {
                let scale = self.fam.bars.iter().map(|b| b.length).fold(0.0, f64::max);
                let h = 1e-6 * scale;
                let mut y = x.to_vec();
                for v in drv.vertices() {
                    let k = self.slot[v].unwrap();
                    for a in 0..d {
                        let i = k * d + a;
                        let x0 = y[i];
                        y[i] = x0 + h;
                        let fp = drv.value(d, &self.full_of(&y));
                        y[i] = x0 - h;
                        let fm = drv.value(d, &self.full_of(&y));
                        y[i] = x0;
                        let mut diff = fp - fm;
                        // angles wrap at 2π
                        if diff > std::f64::consts::PI {
                            diff -= 2.0 * std::f64::consts::PI;
                        } else if diff < -std::f64::consts::PI {
                            diff += 2.0 * std::f64::consts::PI;
                        }
                        g[i] = diff / (2.0 * h);
                    }
                }
            }
        }
        g
    }

    fn jacobian(&self, x: &[f64], driver: Option<&Driver>) -> DMatrix<f64> {
        let d = self.dim;
        let rows = self.nconstraints() + usize::from(driver.is_some());
        let mut j = DMatrix::zeros(rows, self.nvars());
        for (r, b) in self.fam.bars.iter().enumerate() {
            let (pi, pj) = (self.xv(x, b.i), self.xv(x, b.j));
            let l = linalg::dist(pi, pj);
            let (ki, kj) = (self.slot[b.i].unwrap(), self.slot[b.j].unwrap());
            for a in 0..d {
                let g = (pi[a] - pj[a]) / (l * b.length);
                j[(r, ki * d + a)] = g;
                j[(r, kj * d + a)] = -g;
            }
        }
        let off = self.fam.bars.len();
        for (r, (v, dir, _)) in self.gauge_rows.iter().enumerate() {
            let k = self.slot[*v].unwrap();
            for a in 0..d {
                j[(off + r, k * d + a)] = dir[a];
            }
        }
        if let Some(drv) = driver {
            let g = self.driver_gradient(drv, x);
            for (c, gc) in g.into_iter().enumerate() {
                j[(rows - 1, c)] = gc;
            }
        }
        j
    }

    fn kernel_dim(&self, x: &[f64]) -> usize {
        let j = self.jacobian(x, None);
        let n = j.ncols();
        let sv = j.svd(false, false).singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
        n - rank
    }

    fn lstsq(j: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
        let svd = j.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let b = DVector::from_column_slice(rhs);
        svd.solve(&b, 1e-13 * smax).ok().map(|v| v.as_slice().to_vec())
    }

    /// Unit-driver-speed tangent: min-norm `t` with `J t = 0`, `∇g·t = 1`.
    fn tangent(&self, drv: &Driver, x: &[f64]) -> Option<Vec<f64>> {
        let j = self.jacobian(x, Some(drv));
        let mut rhs = vec![0.0; j.nrows()];
        *rhs.last_mut().unwrap() = 1.0;
        Self::lstsq(j, &rhs)
    }

    /// Gauss-Newton with min-norm steps; returns iterations used on success.
    fn correct(&self, x: &mut Vec<f64>, drv: &Driver, target: f64) -> Option<usize> {
        for it in 0..=MAX_CORRECTOR_ITERATIONS {
            let r = self.residual(x, Some((drv, target)));
            let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !worst.is_finite() {
                return None;
            }
            if worst < CORRECTOR_TOLERANCE {
                return Some(it);
            }
            if it == MAX_CORRECTOR_ITERATIONS {
                break;
            }
            let j = self.jacobian(x, Some(drv));
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = Self::lstsq(j, &neg)?;
            linalg::axpy(1.0, &dx, x);
        }
        None
    }
}

/// Per-computation continuation context. Caches the tracked path on the
/// family's grid so repeated queries are cheap and deterministic.
pub struct FlexContext<'a> {
    family: &'a FlexFamily,
    sys: System<'a>,
    /// Free coordinates at grid points `k / steps`, k = 0..grid.len().
    grid: Vec<Vec<f64>>,
    reference_kernel: usize,
    /// Grid index at which the kernel grew, if any.
    branch: Option<usize>,
}

impl<'a> FlexContext<'a> {
    pub fn new(family: &'a FlexFamily) -> Result<Self> {
        let sys = System::new(family);
        let x0 = sys.core_of(&family.reference_coords());
        let reference_kernel = if family.is_static() { 0 } else { sys.kernel_dim(&x0) };
        Ok(Self {
            family,
            sys,
            grid: vec![x0],
            reference_kernel,
            branch: None,
        })
    }

    fn steps(&self) -> usize {
        match &self.family.parametrization {
            Parametrization::Continuation { steps, .. } => *steps,
            Parametrization::Static => 1,
        }
    }

    /// Tracks from `(sa, x)` to `sb` with step halving.
    fn march(&self, x: &[f64], sa: f64, sb: f64) -> Result<Vec<f64>> {
        let drv = match &self.family.parametrization {
            Parametrization::Continuation { driver, .. } => driver,
            Parametrization::Static => return Ok(x.to_vec()),
        };
        let target = |s: f64| self.family.driver_target(s).unwrap();
        let mut s = sa;
        let mut x = x.to_vec();
        let mut h = sb - sa;
        let mut halvings = 0;
        while s < sb {
            let step = h.min(sb - s);
            let s_next = if step >= sb - s { sb } else { s + step };
            let dg = target(s_next) - target(s);
            let accepted = self.sys.tangent(drv, &x).and_then(|t| {
                let mut xp = x.clone();
                linalg::axpy(dg, &t, &mut xp);
                self.sys.correct(&mut xp, drv, target(s_next))?;
                // reject jumps to a distant branch
                let moved = linalg::dist(&xp, &x);
                let bound = 10.0 * dg.abs() * linalg::norm(&t);
                (moved <= bound.max(1e-14)).then_some(xp)
            });
            match accepted {
                Some(xp) => {
                    x = xp;
                    s = s_next;
                    h = (2.0 * step).min(sb - sa);
                }
                None => {
                    halvings += 1;
                    if halvings > MAX_BISECTIONS {
                        return Err(Error::ContinuationFailure {
                            s,
                            reason: format!("corrector failed after {MAX_BISECTIONS} step halvings"),
                        });
                    }
                    h = step / 2.0;
                }
            }
        }
        Ok(x)
    }

    fn extend_grid(&mut self, k: usize) -> Result<()> {
        let n = self.steps() as f64;
        while self.grid.len() <= k {
            let i = self.grid.len() - 1;
            if let Some(b) = self.branch {
                return Err(Error::ContinuationFailure {
                    s: b as f64 / n,
                    reason: "branch point: bar Jacobian lost rank".into(),
                });
            }
            let x = self.march(&self.grid[i], i as f64 / n, (i + 1) as f64 / n)?;
            if !self.family.is_static() && self.sys.kernel_dim(&x) > self.reference_kernel {
                self.branch = Some(i + 1);
            }
            self.grid.push(x);
        }
        Ok(())
    }

    /// State at parameter `s ∈ [0, 1]`.
    pub fn advance(&mut self, s: f64) -> Result<FlexState> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ParameterOutOfRange { value: s, lo: 0.0, hi: 1.0 });
        }
        let d = self.family.dimension;
        if self.family.is_static() || s == 0.0 {
            return Ok(FlexState {
                s,
                dimension: d,
                coords: self.family.reference_coords(),
                warning: None,
            });
        }
        let n = self.steps();
        let k = ((s * n as f64).floor() as usize).min(n);
        self.extend_grid(k)?;
        let sk = k as f64 / n as f64;
        let x = if s > sk {
            if self.branch == Some(k) {
                return Err(Error::ContinuationFailure {
                    s: sk,
                    reason: "branch point: bar Jacobian lost rank".into(),
                });
            }
            self.march(&self.grid[k], sk, s)?
        } else {
            self.grid[k].clone()
        };
        let warning = (self.branch == Some(k) && s == sk)
            .then(|| format!("possible branch point at s = {sk}: bar Jacobian lost rank"));
        Ok(FlexState {
            s,
            dimension: d,
            coords: self.sys.full_of(&x),
            warning,
        })
    }

    /// States at ascending parameters, marching from one sample to the next
    /// (cheaper than [`FlexContext::sample`] for dense profiles).
    pub fn sweep(&mut self, ss: &[f64]) -> Result<Vec<FlexState>> {
        let Some(&last) = ss.last() else {
            return Ok(Vec::new());
        };
        if ss.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("sweep parameters must ascend".into()));
        }
        let n = self.steps();
        self.extend_grid(((last.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n))?;
        let mut out = vec![self.advance(ss[0])?];
        if self.family.is_static() {
            for &s in &ss[1..] {
                out.push(self.advance(s)?);
            }
            return Ok(out);
        }
        let mut x = self.sys.core_of(&out[0].coords);
        let mut prev = ss[0];
        for &s in &ss[1..] {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::ParameterOutOfRange { value: s, lo: 0.0, hi: 1.0 });
            }
            if let Some(b) = self.branch {
                if s > b as f64 / n as f64 {
                    return Err(Error::ContinuationFailure {
                        s: b as f64 / n as f64,
                        reason: "branch point: bar Jacobian lost rank".into(),
                    });
                }
            }
            if s > prev {
                x = self.march(&x, prev, s)?;
            }
            prev = s;
            out.push(FlexState {
                s,
                dimension: self.family.dimension,
                coords: self.sys.full_of(&x),
                warning: None,
            });
        }
        Ok(out)
    }

    pub fn sample(&mut self, ss: &[f64]) -> Result<Vec<FlexState>> {
        ss.iter().map(|&s| self.advance(s)).collect()
    }
}

/// State of `family` at `s` (fresh context; use [`FlexContext`] for repeated queries).
pub fn advance_flex(family: &FlexFamily, s: f64) -> Result<FlexState> {
    FlexContext::new(family)?.advance(s)
}

/// `n` equally spaced parameters `i / n`, i = 0..n.
pub fn uniform_samples(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}
