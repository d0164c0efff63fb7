//! Tents: modifying a flexible family so that one dihedral angle tends to 0.
//!
//! Pick an edge `X` whose dihedral angle `φ(X_t)` is not constant, restrict
//! the family to a parameter interval on which `φ(X_t) > φ*` with equality
//! only at the end `s = 1`, and glue two rigid tetrahedra ("tents") into the
//! domain over small triangles `y'`, `z'` cut from the two facets `Y`, `Z`
//! at `X`. The tents share the segment `x' ⊂ X` and make angles
//! `θ_y + θ_z = φ*` with their base facets there, so the new angle at `x'`
//! is `φ(X_s) − φ*`.
//!
//! Each tent is removed from the domain: the new surface is `P' − ∂tent_y −
//! ∂tent_z` as chains, and the enclosed volume drops by the two tent volumes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{hausdorff_distance, point_triangle, triangle_triangle};
use crate::embed::{triangles_conflict, winding_number};
use crate::error::{Error, Result};
use crate::flex::{Attachment, FlexContext, FlexFamily, Parametrization};
use crate::linalg;
use crate::surface::{orient_coherently, ridge_angle, SimplicialSurface};

/// Length of the initial parameter window searched for a variable angle.
pub const DEFAULT_DELTA: f64 = 0.1;
/// Uniform samples of `[0, δ]` used to locate `φ*`.
pub const PROFILE_SAMPLES: usize = 10_000;
/// Bisection target for the crossing of `φ*`, in family parameter units.
pub const CROSSING_TOLERANCE: f64 = 1e-12;
/// Tolerance on `θ_y + θ_z − φ*` and on the angle bookkeeping.
pub const ANGLE_TOLERANCE: f64 = 1e-9;
const SELECTION_SAMPLES: usize = 100;
const CONSTANT_ANGLE_TOLERANCE: f64 = 1e-9;
const SPLIT: f64 = 1.0 / 3.0;
const INITIAL_INSET: f64 = 0.25;
const SHRINK: f64 = 0.7;
const MAX_SHRINKS: usize = 40;
const SEARCH_SAMPLES: usize = 12;

type P3 = [f64; 3];

fn p3(x: &[f64]) -> P3 {
    [x[0], x[1], x[2]]
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = linalg::norm(&v);
    linalg::scale(&v, 1.0 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRidge {
    /// Ridge index in the family's surface.
    pub ridge: usize,
    pub vertices: Vec<usize>,
    /// `max − min` of the sampled angle.
    pub variation: f64,
    /// `(t, φ(X_t))` on `[0, δ]`.
    pub profile: Vec<(f64, f64)>,
}

/// The ridge whose angle varies most over `[0, δ]` (ties go to the lower index).
pub fn select_variable_ridge(family: &FlexFamily, delta: f64) -> Result<VariableRidge> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("δ = {delta} outside (0, 1]")));
    }
    if family.is_static() {
        return Err(Error::NotFlexible(format!("{}: static family", family.name)));
    }
    let surface = family.reference_surface()?;
    let ts: Vec<f64> = (0..=SELECTION_SAMPLES)
        .map(|k| delta * k as f64 / SELECTION_SAMPLES as f64)
        .collect();
    let states = FlexContext::new(family)?.sweep(&ts)?;
    let d = family.dimension;
    let angles: Vec<Vec<f64>> = states
        .iter()
        .map(|st| {
            surface
                .ridges()
                .iter()
                .map(|r| ridge_angle(d, &st.coords, &family.facets, r))
                .collect()
        })
        .collect();
    let nr = surface.ridges().len();
    let variation: Vec<f64> = (0..nr)
        .map(|r| {
            let (lo, hi) = angles
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a[r]), hi.max(a[r])));
            hi - lo
        })
        .collect();
    let best = variation.iter().copied().fold(0.0, f64::max);
    if best < CONSTANT_ANGLE_TOLERANCE {
        return Err(Error::NotFlexible(format!(
            "{}: every dihedral angle is constant within {CONSTANT_ANGLE_TOLERANCE:e} on [0, {delta}]",
            family.name
        )));
    }
    let ridge = (0..nr).find(|&r| variation[r] >= best * (1.0 - 1e-9)).unwrap();
    Ok(VariableRidge {
        ridge,
        vertices: surface.ridges()[ridge].vertices.clone(),
        variation: variation[ridge],
        profile: ts.iter().zip(&angles).map(|(&t, a)| (t, a[ridge])).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiStarCase {
    /// The angle increases right after `t = 0`: `t* = 0`.
    LimitPoint,
    /// The angle decreases right after `t = 0`: `t* > 0` inside the decrease.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiStar {
    pub phi_star: f64,
    pub t_star: f64,
    pub case: PhiStarCase,
    /// Family parameters mapped to `s = 0` and `s = 1`; `φ = φ*` at the second.
    pub interval: [f64; 2],
    /// Where the profile first returns to `φ*` (limit-point case), if inside `[0, δ]`.
    pub crossing: Option<f64>,
    /// Hausdorff distance between the surfaces at `t = 0` and at the shifted endpoint.
    pub drift: f64,
}

/// Case split on a sampled profile `φ(δ·k/n)`, k = 0..=n. `phi` evaluates the
/// angle off-grid (for bisection) and `drift(t)` the Hausdorff distance from
/// the surface at `t = 0`.
pub fn choose_phi_star(
    profile: &[f64],
    delta: f64,
    epsilon: f64,
    phi: &mut dyn FnMut(f64) -> Result<f64>,
    drift: &mut dyn FnMut(f64) -> Result<f64>,
) -> Result<PhiStar> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("ε = {epsilon} must be positive")));
    }
    let n = profile.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::ResolutionExhausted("profile needs at least two samples".into()));
    }
    let t = |k: usize| delta * k as f64 / n as f64;
    let p0 = profile[0];
    // largest k ≤ k0 (halving) whose surface is within ε/3 of the start
    let mut capped = |mut k: usize| -> Result<(usize, f64)> {
        while k > 0 {
            let d = drift(t(k))?;
            if d < epsilon / 3.0 {
                return Ok((k, d));
            }
            k /= 2;
        }
        Err(Error::ResolutionExhausted(format!(
            "no sample within drift ε/3 = {} of t = 0",
            epsilon / 3.0
        )))
    };
    if profile[1] > p0 {
        let back = (1..=n).find(|&k| profile[k] <= p0);
        let (end, crossing) = match back {
            None => (n, None),
            Some(b) => {
                let (mut lo, mut hi) = (t(b - 1), t(b));
                while hi - lo > CROSSING_TOLERANCE {
                    let mid = 0.5 * (lo + hi);
                    if phi(mid)? > p0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (b - 1, Some(hi))
            }
        };
        if end == 0 {
            return Err(Error::ResolutionExhausted("angle exceeds φ(0) on no sampled interval".into()));
        }
        let (k, d) = capped(end)?;
        Ok(PhiStar {
            phi_star: p0,
            t_star: 0.0,
            case: PhiStarCase::LimitPoint,
            interval: [t(k), 0.0],
            crossing,
            drift: d,
        })
    } else if profile[1] < p0 {
        let end = (1..=n).take_while(|&k| profile[k] < profile[k - 1]).last().unwrap();
        let (k, d) = capped(end)?;
        Ok(PhiStar {
            phi_star: profile[k],
            t_star: t(k),
            case: PhiStarCase::Shifted,
            interval: [0.0, t(k)],
            crossing: None,
            drift: d,
        })
    } else {
        Err(Error::ResolutionExhausted(
            "angle is flat at the first sample; no sign-definite sub-interval".into(),
        ))
    }
}

/// `φ*` and the restricted interval for the ridge with vertex set `ridge`.
pub fn compute_phi_star(family: &FlexFamily, ridge: &[usize], epsilon: f64, delta: f64) -> Result<PhiStar> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("δ = {delta} outside (0, 1]")));
    }
    let surface = family.reference_surface()?;
    let r = surface
        .find_ridge(ridge)
        .ok_or_else(|| Error::Precondition(format!("{ridge:?} is not a ridge")))?;
    let rdata = surface.ridges()[r].clone();
    let d = family.dimension;
    let ts: Vec<f64> = (0..=PROFILE_SAMPLES)
        .map(|k| delta * k as f64 / PROFILE_SAMPLES as f64)
        .collect();
    let mut ctx = FlexContext::new(family)?;
    let profile: Vec<f64> = ctx
        .sweep(&ts)?
        .iter()
        .map(|st| ridge_angle(d, &st.coords, &family.facets, &rdata))
        .collect();
    let mut phi = |t: f64| -> Result<f64> { Ok(ridge_angle(d, &ctx.advance(t)?.coords, &family.facets, &rdata)) };
    let mut ctx2 = FlexContext::new(family)?;
    let mut drift = |t: f64| -> Result<f64> { hausdorff_distance(&surface, &ctx2.advance(t)?.surface(family)?) };
    choose_phi_star(&profile, delta, epsilon, &mut phi, &mut drift)
}

/// The family restricted to `interval` (`s = 0` at `interval[0]`).
pub fn reparametrize(family: &FlexFamily, interval: [f64; 2]) -> Result<FlexFamily> {
    let Parametrization::Continuation { driver, steps, .. } = &family.parametrization else {
        return Err(Error::NotFlexible(format!("{}: static family", family.name)));
    };
    let mut ctx = FlexContext::new(family)?;
    let st = ctx.advance(interval[0])?;
    // also checks that the far end is reachable
    ctx.advance(interval[1])?;
    let mut out = family.clone();
    out.name = format!("{}-restricted", family.name);
    out.reference = st.coords.chunks(family.dimension).map(|c| c.to_vec()).collect();
    out.parametrization = Parametrization::Continuation {
        driver: driver.clone(),
        start: family.driver_target(interval[0]).unwrap(),
        end: family.driver_target(interval[1]).unwrap(),
        steps: *steps,
    };
    out.reference_residual = Some(st.edge_residual(family));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentSpec {
    /// Endpoints `[p, q]` of the selected edge `X`, in the order of facet `Y`.
    pub ridge: [usize; 2],
    /// Third vertices `r` of `Y = (p, q, r)` and `s` of `Z = (q, p, s)`.
    pub opposite: [usize; 2],
    /// Endpoints of the sub-edge `x' ⊂ X` in the modified family.
    pub sub_ridge: [usize; 2],
    /// Third vertices of `y'` and `z'`.
    pub inner: [usize; 2],
    pub apex: [usize; 2],
    /// Apex coordinates in the frames `(p, q, r)` and `(q, p, s)`.
    pub apex_offsets: [Vec<f64>; 2],
    /// Tent angles `θ_y`, `θ_z` at `x'`.
    pub theta: [f64; 2],
    pub phi_star: f64,
    pub epsilon: f64,
    /// `x' = [p + split·(q − p), q − split·(q − p)]`.
    pub split: f64,
    /// Third vertex of `y'` is `m + inset·(r − m)`, `m` the midpoint of `X`.
    pub inset: f64,
    /// Distance of both apexes from `m`.
    pub height: f64,
}

impl TentSpec {
    /// Tent geometry for the ridge `{a, b}` of `family` (vertex ids of the new points
    /// follow the family's vertices). The tent angles are `φ*/2` each.
    pub fn new(
        family: &FlexFamily,
        ridge: [usize; 2],
        phi_star: f64,
        epsilon: f64,
        inset: f64,
        height: f64,
    ) -> Result<Self> {
        if family.dimension != 3 {
            return Err(Error::UnsupportedDimension {
                found: family.dimension,
                expected: "3",
            });
        }
        if !(epsilon > 0.0) {
            return Err(Error::Precondition(format!("ε = {epsilon} must be positive")));
        }
        if !(phi_star > 0.0 && phi_star < 2.0 * PI) {
            return Err(Error::Precondition(format!("φ* = {phi_star} outside (0, 2π)")));
        }
        let inc: Vec<&Vec<usize>> = family
            .facets
            .iter()
            .filter(|f| f.contains(&ridge[0]) && f.contains(&ridge[1]))
            .collect();
        if inc.len() != 2 {
            return Err(Error::Precondition(format!("{ridge:?} is not an edge")));
        }
        let y = inc[0];
        let k = y.iter().position(|&v| v != ridge[0] && v != ridge[1]).unwrap();
        let (p, q, r) = (y[(k + 1) % 3], y[(k + 2) % 3], y[k]);
        let s = *inc[1].iter().find(|&&v| v != p && v != q).unwrap();
        let n0 = family.num_vertices();
        let mut spec = Self {
            ridge: [p, q],
            opposite: [r, s],
            sub_ridge: [n0, n0 + 1],
            inner: [n0 + 2, n0 + 3],
            apex: [n0 + 4, n0 + 5],
            apex_offsets: [Vec::new(), Vec::new()],
            theta: [0.5 * phi_star, 0.5 * phi_star],
            phi_star,
            epsilon,
            split: SPLIT,
            inset,
            height,
        };
        let coords = family.reference_coords();
        let pts = spec.new_points(&coords);
        let mut all = coords;
        for x in &pts {
            all.extend_from_slice(x);
        }
        spec.apex_offsets = [
            Attachment::new(spec.apex[0], spec.frame_y(), 3, &all).local,
            Attachment::new(spec.apex[1], spec.frame_z(), 3, &all).local,
        ];
        Ok(spec)
    }

    fn frame_y(&self) -> Vec<usize> {
        vec![self.ridge[0], self.ridge[1], self.opposite[0]]
    }

    fn frame_z(&self) -> Vec<usize> {
        vec![self.ridge[1], self.ridge[0], self.opposite[1]]
    }

    /// `x1, x2, r_y, r_z, v', w'` for the base placement `coords`.
    fn new_points(&self, coords: &[f64]) -> Vec<Vec<f64>> {
        let vx = |i: usize| &coords[3 * i..3 * i + 3];
        let (p, q) = (vx(self.ridge[0]), vx(self.ridge[1]));
        let (r, s) = (vx(self.opposite[0]), vx(self.opposite[1]));
        let pq = linalg::sub(q, p);
        let e = unit(pq.clone());
        let m: Vec<f64> = (0..3).map(|k| 0.5 * (p[k] + q[k])).collect();
        let mut x1 = p.to_vec();
        linalg::axpy(self.split, &pq, &mut x1);
        let mut x2 = q.to_vec();
        linalg::axpy(-self.split, &pq, &mut x2);
        let toward = |a: &[f64]| {
            let mut x = m.clone();
            linalg::axpy(self.inset, &linalg::sub(a, &m), &mut x);
            x
        };
        let apex = |a: &[f64], normal: Vec<f64>, theta: f64| {
            let w = unit(linalg::reject(&linalg::sub(a, p), &[e.clone()]));
            let n = unit(normal);
            let mut x = m.clone();
            linalg::axpy(self.height * theta.cos(), &w, &mut x);
            linalg::axpy(-self.height * theta.sin(), &n, &mut x);
            x
        };
        let ny = linalg::cofactor_normal(&[pq.clone(), linalg::sub(r, p)]);
        let nz = linalg::cofactor_normal(&[linalg::sub(p, q), linalg::sub(s, q)]);
        vec![
            x1,
            x2,
            toward(r),
            toward(s),
            apex(r, ny, self.theta[0]),
            apex(s, nz, self.theta[1]),
        ]
    }

    fn tent_facets(&self) -> [[usize; 3]; 6] {
        let [x1, x2] = self.sub_ridge;
        let [ry, rz] = self.inner;
        let [v, w] = self.apex;
        [
            [x1, x2, v],
            [x2, ry, v],
            [ry, x1, v],
            [x2, x1, w],
            [x1, rz, w],
            [rz, x2, w],
        ]
    }

    /// `y'` and `z'`, oriented like `Y` and `Z`.
    fn bases(&self) -> [[usize; 3]; 2] {
        let [x1, x2] = self.sub_ridge;
        [[x1, x2, self.inner[0]], [x2, x1, self.inner[1]]]
    }

    fn present_in(&self, family: &FlexFamily) -> bool {
        let n = family.num_vertices();
        self.apex.iter().all(|&a| a < n)
            && self
                .tent_facets()
                .iter()
                .all(|t| family.facets.iter().any(|f| t.iter().all(|v| f.contains(v))))
    }
}

fn oriented_outward(facets: Vec<Vec<usize>>, coords: &[f64]) -> Result<Vec<Vec<usize>>> {
    let facets = orient_coherently(&facets)?;
    let s = SimplicialSurface::from_flat(3, coords.to_vec(), facets.clone())?;
    Ok(if s.oriented_volume() < 0.0 {
        s.reversed().facets().to_vec()
    } else {
        facets
    })
}

/// The modified family: `Y` and `Z` subdivided, `y'` and `z'` replaced by
/// the tent sides. All new vertices ride on the frames of `Y` and `Z`.
pub fn subdivide_and_tent(family: &FlexFamily, spec: &TentSpec) -> Result<FlexFamily> {
    if !(spec.epsilon > 0.0) {
        return Err(Error::Precondition(format!("ε = {} must be positive", spec.epsilon)));
    }
    if spec.theta.iter().any(|&t| !(t > 0.0 && t < PI)) || (spec.theta[0] + spec.theta[1] - spec.phi_star).abs() > 1e-14
    {
        return Err(Error::Precondition("tent angles must lie in (0, π) and sum to φ*".into()));
    }
    let n0 = family.num_vertices();
    if spec.sub_ridge[0] != n0 {
        return Err(Error::Precondition("tent geometry does not match the family's vertex count".into()));
    }
    let [p, q] = spec.ridge;
    let [r, s] = spec.opposite;
    let [x1, x2] = spec.sub_ridge;
    let [ry, rz] = spec.inner;
    let mut facets: Vec<Vec<usize>> = family
        .facets
        .iter()
        .filter(|f| !(f.contains(&p) && f.contains(&q)))
        .cloned()
        .collect();
    if facets.len() + 2 != family.facets.len() {
        return Err(Error::Precondition(format!("[{p}, {q}] is not an edge")));
    }
    for f in [
        [p, x1, ry],
        [x2, q, ry],
        [q, r, ry],
        [r, p, ry],
        [q, x2, rz],
        [x1, p, rz],
        [p, s, rz],
        [s, q, rz],
    ] {
        facets.push(f.to_vec());
    }
    for t in spec.tent_facets() {
        facets.push(t.to_vec());
    }
    let mut coords = family.reference_coords();
    for x in spec.new_points(&coords) {
        coords.extend(x);
    }
    let facets = oriented_outward(facets, &coords)?;
    let mut attachments = family.attachments.clone();
    for v in [x1, x2, ry, spec.apex[0]] {
        attachments.push(Attachment::new(v, spec.frame_y(), 3, &coords));
    }
    for v in [rz, spec.apex[1]] {
        attachments.push(Attachment::new(v, spec.frame_z(), 3, &coords));
    }
    let out = FlexFamily {
        name: format!("{}-tented", family.name),
        dimension: 3,
        facets,
        reference: coords.chunks(3).map(|c| c.to_vec()).collect(),
        bars: family.bars.clone(),
        attachments,
        gauge: family.gauge.clone(),
        parametrization: family.parametrization.clone(),
        reference_residual: family.reference_residual,
    };
    out.validate()?;
    Ok(out)
}

/// The modified surface with the tents flattened back: `y'`, `z'` in place
/// of the tent sides. Its point set is that of the unmodified surface.
fn untented_facets(family: &FlexFamily, spec: &TentSpec) -> Result<Vec<Vec<usize>>> {
    let mut facets: Vec<Vec<usize>> = family
        .facets
        .iter()
        .filter(|f| !spec.apex.iter().any(|a| f.contains(a)))
        .cloned()
        .collect();
    for b in spec.bases() {
        facets.push(b.to_vec());
    }
    oriented_outward(facets, &family.reference_coords())
}

/// Whether every facet of `coarse` is the union of facets of `fine` lying in
/// it (coplanar, same orientation, areas adding up to relative 1e-12).
pub fn is_subdivision(fine: &SimplicialSurface, coarse: &SimplicialSurface) -> bool {
    if fine.dim() != 3 || coarse.dim() != 3 {
        return false;
    }
    let tol = 1e-12 * coarse.diameter().max(fine.diameter());
    let mut covered = vec![0.0; coarse.facets().len()];
    for f in 0..fine.facets().len() {
        let pts = fine.facet_points(f);
        let nf = fine.facet_normal(f);
        let carrier = (0..coarse.facets().len()).find(|&c| {
            let cp = coarse.facet_points(c);
            let t = [p3(cp[0]), p3(cp[1]), p3(cp[2])];
            pts.iter().all(|x| point_triangle(&p3(x), &t[0], &t[1], &t[2]) <= tol)
                && linalg::dot(&nf, &coarse.facet_normal(c)) > 0.0
        });
        match carrier {
            Some(c) => covered[c] += fine.facet_measure(f),
            None => return false,
        }
    }
    (0..coarse.facets().len()).all(|c| {
        let a = coarse.facet_measure(c);
        (covered[c] - a).abs() <= 1e-12 * a.max(1.0)
    })
}

/// Volumes of the two tents in the placement `coords`.
pub fn tent_volumes(spec: &TentSpec, coords: &[f64]) -> [f64; 2] {
    let b = spec.bases();
    [tent_volume(coords, b[0], spec.apex[0]), tent_volume(coords, b[1], spec.apex[1])]
}

fn tent_volume(coords: &[f64], base: [usize; 3], apex: usize) -> f64 {
    let vx = |i: usize| &coords[3 * i..3 * i + 3];
    let o = vx(base[0]);
    linalg::det(&[
        linalg::sub(vx(base[1]), o),
        linalg::sub(vx(base[2]), o),
        linalg::sub(vx(apex), o),
    ])
    .abs()
        / 6.0
}

/// Angle of the tent over `base` at its first edge (between the base and the apex side).
fn tent_angle(coords: &[f64], base: [usize; 3], apex: usize) -> f64 {
    let vx = |i: usize| &coords[3 * i..3 * i + 3];
    let o = vx(base[0]);
    let e = unit(linalg::sub(vx(base[1]), o));
    let a = linalg::reject(&linalg::sub(vx(base[2]), o), &[e.clone()]);
    let b = linalg::reject(&linalg::sub(vx(apex), o), &[e]);
    (linalg::dot(&a, &b) / (linalg::norm(&a) * linalg::norm(&b))).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub s: f64,
    /// (σ1): both apexes lie inside the unmodified surface.
    pub apex_inside: bool,
    /// (σ4): the sides of tent y avoid the unmodified surface off `y'`.
    pub tent_y_clear: bool,
    /// (σ5): likewise for tent z.
    pub tent_z_clear: bool,
    /// (σ6): `|θ_y + θ_z − φ*|` as measured.
    pub angle_sum_residual: Option<f64>,
    /// (σ7): largest distance of a tent point from its base triangle.
    pub tent_offset: Option<f64>,
    pub embedded: bool,
    /// Angle of the unmodified surface at `X`.
    pub phi_x: Option<f64>,
    /// Angle of the modified surface at `x'`.
    pub phi_tilde: Option<f64>,
    /// `|φ̃ − (φ(X_s) − φ*)|`.
    pub bookkeeping_residual: Option<f64>,
    /// Extreme angles over all other ridges of the modified surface.
    pub other_angles: [f64; 2],
    /// Signed volumes of the unmodified and modified surfaces.
    pub volumes: [f64; 2],
}

impl SigmaRow {
    pub fn angle_sum_ok(&self) -> bool {
        self.angle_sum_residual.is_some_and(|r| r < ANGLE_TOLERANCE)
    }

    pub fn offset_ok(&self, epsilon: f64) -> bool {
        self.tent_offset.is_some_and(|h| h < epsilon / 3.0)
    }

    pub fn passed(&self, epsilon: f64) -> bool {
        self.apex_inside
            && self.tent_y_clear
            && self.tent_z_clear
            && self.angle_sum_ok()
            && self.offset_ok(epsilon)
            && self.embedded
            && self.bookkeeping_residual.is_some_and(|r| r < ANGLE_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub epsilon: f64,
    pub rows: Vec<SigmaRow>,
    /// `[m̃, M̃]`: extreme angles over all sampled `s`, the sub-edge excluded.
    pub angle_bounds: [f64; 2],
    /// Angles of the unmodified surface stay within `(m/2, M/2 + π)`, with
    /// `m`, `M` their extremes at `s = 0`.
    pub restricted_bounds_ok: bool,
    pub all_pass: bool,
}

/// `1 − 10^{−3i/(n−1)}`, i = 0..n: from 0 to 0.999, dense towards 1.
pub fn tent_samples(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| 1.0 - 10f64.powf(-3.0 * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

fn sigma_row(family: &FlexFamily, spec: &TentSpec, s: f64, coords: &[f64], present: bool) -> Result<SigmaRow> {
    let modified = SimplicialSurface::from_flat(3, coords.to_vec(), family.facets.clone())?;
    let embedded = crate::embed::conflicting_pairs(&modified)?.is_empty();
    let angles = |surf: &SimplicialSurface, skip: Option<usize>| {
        (0..surf.ridges().len())
            .filter(|&r| Some(r) != skip)
            .map(|r| surf.dihedral_angle(r))
            .fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], a| [lo.min(a), hi.max(a)])
    };
    if !present {
        return Ok(SigmaRow {
            s,
            apex_inside: false,
            tent_y_clear: false,
            tent_z_clear: false,
            angle_sum_residual: None,
            tent_offset: None,
            embedded,
            phi_x: None,
            phi_tilde: None,
            bookkeeping_residual: None,
            other_angles: angles(&modified, None),
            volumes: [modified.oriented_volume(); 2],
        });
    }
    let plain = SimplicialSurface::from_flat(3, coords.to_vec(), untented_facets(family, spec)?)?;
    let vx = |i: usize| p3(&coords[3 * i..3 * i + 3]);
    let tri = |f: &[usize]| [vx(f[0]), vx(f[1]), vx(f[2])];
    let apex_inside = spec.apex.iter().all(|&a| winding_number(&plain, &coords[3 * a..3 * a + 3]) > 0.5);
    let sides = spec.tent_facets();
    let clear = |range: std::ops::Range<usize>| {
        sides[range].iter().all(|t| {
            plain
                .facets()
                .iter()
                .all(|f| !triangles_conflict(*t, &tri(t), [f[0], f[1], f[2]], &tri(f)))
        })
    };
    let theta_y = tent_angle(coords, spec.bases()[0], spec.apex[0]);
    let theta_z = tent_angle(coords, spec.bases()[1], spec.apex[1]);
    let offset = (0..2)
        .map(|k| {
            let b = tri(&spec.bases()[k]);
            point_triangle(&vx(spec.apex[k]), &b[0], &b[1], &b[2])
        })
        .fold(0.0, f64::max);
    let sub = spec.sub_ridge;
    let rx = plain.find_ridge(&sub).unwrap();
    let rt = modified.find_ridge(&sub).unwrap();
    let phi_x = plain.dihedral_angle(rx);
    let phi_tilde = modified.dihedral_angle(rt);
    Ok(SigmaRow {
        s,
        apex_inside,
        tent_y_clear: clear(0..3),
        tent_z_clear: clear(3..6),
        angle_sum_residual: Some((theta_y + theta_z - spec.phi_star).abs()),
        tent_offset: Some(offset),
        embedded,
        phi_x: Some(phi_x),
        phi_tilde: Some(phi_tilde),
        bookkeeping_residual: Some((phi_tilde - (phi_x - spec.phi_star)).abs()),
        other_angles: angles(&modified, Some(rt)),
        volumes: [plain.oriented_volume(), modified.oriented_volume()],
    })
}

/// Per-sample check of the tent conditions at [`tent_samples`]`(samples)`.
/// A family without the tents of `spec` yields failing rows, not an error.
pub fn verify_sigma_conditions(family: &FlexFamily, spec: &TentSpec, samples: usize) -> Result<SigmaReport> {
    verify_at(family, spec, &tent_samples(samples))
}

fn verify_at(family: &FlexFamily, spec: &TentSpec, ss: &[f64]) -> Result<SigmaReport> {
    if !(spec.epsilon > 0.0) {
        return Err(Error::Precondition(format!("ε = {} must be positive", spec.epsilon)));
    }
    if family.dimension != 3 {
        return Err(Error::UnsupportedDimension {
            found: family.dimension,
            expected: "3",
        });
    }
    let present = spec.present_in(family);
    let states = FlexContext::new(family)?.sweep(ss)?;
    let rows: Vec<SigmaRow> = states
        .par_iter()
        .map(|st| sigma_row(family, spec, st.s, &st.coords, present))
        .collect::<Result<_>>()?;
    let angle_bounds = rows.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], r| {
        [lo.min(r.other_angles[0]), hi.max(r.other_angles[1])]
    });
    let restricted_bounds_ok = if present {
        let d = family.dimension;
        let plain = untented_facets(family, spec)?;
        let coarse = SimplicialSurface::from_flat(d, family.reference_coords(), plain.clone())?;
        let extremes = |coords: &[f64]| {
            coarse
                .ridges()
                .iter()
                .map(|r| ridge_angle(d, coords, &plain, r))
                .fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], a| [lo.min(a), hi.max(a)])
        };
        let [m, big_m] = extremes(&family.reference_coords());
        states.iter().all(|st| {
            let [lo, hi] = extremes(&st.coords);
            lo > 0.5 * m && hi < 0.5 * big_m + PI
        })
    } else {
        false
    };
    let all_pass = present
        && restricted_bounds_ok
        && angle_bounds[0] > 0.0
        && angle_bounds[1] < 2.0 * PI
        && rows.iter().all(|r| r.passed(spec.epsilon));
    Ok(SigmaReport {
        epsilon: spec.epsilon,
        rows,
        angle_bounds,
        restricted_bounds_ok,
        all_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentConstruction {
    pub selection: VariableRidge,
    pub phi_star: PhiStar,
    /// The base family restricted to the chosen interval.
    pub restricted: FlexFamily,
    pub spec: TentSpec,
    /// The modified family.
    pub family: FlexFamily,
    /// The modified surface at `s = 0` subdivides the restricted one, tents flattened.
    pub subdivision: bool,
    /// Hausdorff distance between the modified surface at `s = 0` and the base at `t = 0`.
    pub hausdorff_to_base: f64,
    /// Distance from `y' ∪ z'` to the facets other than `Y`, `Z` at `s = 0`.
    pub clearance: f64,
}

fn clearance(family: &FlexFamily, spec: &TentSpec) -> f64 {
    let coords = family.reference_coords();
    let mut all = coords.clone();
    for x in spec.new_points(&coords) {
        all.extend(x);
    }
    let vx = |i: usize| p3(&all[3 * i..3 * i + 3]);
    let tri = |f: &[usize]| [vx(f[0]), vx(f[1]), vx(f[2])];
    let [p, q] = spec.ridge;
    family
        .facets
        .iter()
        .filter(|f| !(f.contains(&p) && f.contains(&q)))
        .flat_map(|f| spec.bases().map(|b| triangle_triangle(&tri(&b), &tri(f))))
        .fold(f64::INFINITY, f64::min)
}

/// Full construction on a base family: ridge selection, `φ*`, restriction,
/// subdivision, and a geometric search over the tent height.
pub fn build_tent(base: &FlexFamily, epsilon: f64, delta: f64) -> Result<TentConstruction> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("ε = {epsilon} must be positive")));
    }
    if base.dimension != 3 {
        return Err(Error::UnsupportedDimension {
            found: base.dimension,
            expected: "3",
        });
    }
    let selection = select_variable_ridge(base, delta)?;
    let phi_star = compute_phi_star(base, &selection.vertices, epsilon, delta)?;
    let restricted = reparametrize(base, phi_star.interval)?;
    let ridge = [selection.vertices[0], selection.vertices[1]];
    let fresh = |inset: f64, height: f64| TentSpec::new(&restricted, ridge, phi_star.phi_star, epsilon, inset, height);

    let mut inset = INITIAL_INSET;
    let mut gap = clearance(&restricted, &fresh(inset, epsilon)?);
    let mut tries = 0;
    while gap < epsilon / 10.0 {
        tries += 1;
        if tries > MAX_SHRINKS {
            return Err(Error::ConstructionFailure(format!(
                "(ξ3): clearance {gap:e} of y' ∪ z' below ε/10"
            )));
        }
        inset *= SHRINK;
        gap = clearance(&restricted, &fresh(inset, epsilon)?);
    }

    let search = tent_samples(SEARCH_SAMPLES);
    let mut height = 0.9 * epsilon / 3.0;
    let mut last = String::new();
    for _ in 0..=MAX_SHRINKS {
        let spec = fresh(inset, height)?;
        match subdivide_and_tent(&restricted, &spec) {
            Ok(family) => {
                let report = verify_at(&family, &spec, &search)?;
                if let Some(bad) = report.rows.iter().find(|r| !r.passed(epsilon)) {
                    last = violated(bad, epsilon);
                } else {
                    let fine = family.reference_surface()?;
                    let flat = SimplicialSurface::from_flat(
                        3,
                        family.reference_coords(),
                        untented_facets(&family, &spec)?,
                    )?;
                    let subdivision = is_subdivision(&flat, &restricted.reference_surface()?);
                    let hausdorff_to_base = hausdorff_distance(&fine, &base.reference_surface()?)?;
                    return Ok(TentConstruction {
                        selection,
                        phi_star,
                        restricted,
                        spec,
                        family,
                        subdivision,
                        hausdorff_to_base,
                        clearance: gap,
                    });
                }
            }
            Err(e) => last = e.to_string(),
        }
        height *= SHRINK;
    }
    Err(Error::ConstructionFailure(format!("no tent height found; last violation: {last}")))
}

fn violated(row: &SigmaRow, epsilon: f64) -> String {
    let name = if !row.apex_inside {
        "(σ1) apex outside"
    } else if !row.tent_y_clear {
        "(σ4) tent y meets the surface"
    } else if !row.tent_z_clear {
        "(σ5) tent z meets the surface"
    } else if !row.angle_sum_ok() {
        "(σ6) angle sum"
    } else if !row.offset_ok(epsilon) {
        "(σ7) tent offset"
    } else {
        "modified surface not embedded"
    };
    format!("{name} at s = {}", row.s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increasing_profile_is_limit_point_case() {
        let n = 100;
        let delta = 0.1;
        let profile: Vec<f64> = (0..=n).map(|k| 1.0 + delta * k as f64 / n as f64).collect();
        let ps = choose_phi_star(&profile, delta, 0.05, &mut |t| Ok(1.0 + t), &mut |t| Ok(0.1 * t)).unwrap();
        assert_eq!(ps.case, PhiStarCase::LimitPoint);
        assert_eq!(ps.phi_star, 1.0);
        assert_eq!(ps.interval, [delta, 0.0]);
        assert_eq!(ps.crossing, None);
    }

    #[test]
    fn decreasing_profile_shifts_t_star() {
        let n = 100;
        let delta = 0.1;
        let eps = 0.03;
        let profile: Vec<f64> = (0..=n).map(|k| 1.0 - delta * k as f64 / n as f64).collect();
        // drift grows like t, so the cap is active
        let ps = choose_phi_star(&profile, delta, eps, &mut |t| Ok(1.0 - t), &mut |t| Ok(t)).unwrap();
        assert_eq!(ps.case, PhiStarCase::Shifted);
        assert!(ps.t_star > 0.0 && ps.drift < eps / 3.0);
        assert!((ps.phi_star - (1.0 - ps.t_star)).abs() < 1e-15);
        assert_eq!(ps.interval, [0.0, ps.t_star]);
    }

    #[test]
    fn return_crossing_is_bisected() {
        let n = 1000;
        let delta = 1.0;
        let f = |t: f64| 2.0 + t * (0.3 - t);
        let profile: Vec<f64> = (0..=n).map(|k| f(k as f64 / n as f64)).collect();
        let ps = choose_phi_star(&profile, delta, 1.0, &mut |t| Ok(f(t)), &mut |_| Ok(0.0)).unwrap();
        assert!((ps.crossing.unwrap() - 0.3).abs() < 1e-11);
        assert!(ps.interval[0] < 0.3);
    }

    #[test]
    fn flat_start_and_bad_epsilon() {
        let profile = vec![1.0; 10];
        assert!(matches!(
            choose_phi_star(&profile, 0.1, 0.1, &mut |_| Ok(1.0), &mut |_| Ok(0.0)),
            Err(Error::ResolutionExhausted(_))
        ));
        assert!(matches!(
            choose_phi_star(&profile, 0.1, 0.0, &mut |_| Ok(1.0), &mut |_| Ok(0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn log_samples() {
        let s = tent_samples(50);
        assert_eq!(s[0], 0.0);
        assert!((s[49] - 0.999).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
}
