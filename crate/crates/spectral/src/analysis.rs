//! Spectra of polygons, counting functions, flex sweeps and the corner
//! coefficient fit.

use flexspec_core::fedosov::{coefficients, riesz_mean_empirical, riesz_mean_prediction, weyl_counting_prediction, MeshDescriptor};
use flexspec_core::surface::shapes::polygon;
use flexspec_core::{is_embedded, BoundaryCondition, FlexContext, FlexFamily, SimplicialSurface, Spectrum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpairs, Eigenpairs, SolverOptions};
use crate::error::{Error, Result};
use crate::fem::assemble;
use crate::mesh::{loop_area, triangulate, Mesh2D};

/// Fraction of the largest computed eigenvalue below which counts are trusted.
pub const TRUST_FRACTION: f64 = 0.8;

fn shift(mesh: &Mesh2D, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => 0.0,
        // below the zero mode, on the scale of the domain
        BoundaryCondition::Neumann => -1.0 / mesh.area(),
    }
}

/// Eigenvalues and `M`-normalized eigenvectors (on the free nodes).
pub fn solve_eigenpairs(
    mesh: &Mesh2D,
    bc: BoundaryCondition,
    n: usize,
    opts: &SolverOptions,
) -> Result<(Spectrum, Eigenpairs)> {
    let sys = assemble(mesh, bc);
    let pairs = smallest_eigenpairs(&sys, n, shift(mesh, bc), opts)?;
    let spectrum = Spectrum {
        bc,
        eigenvalues: pairs.values.clone(),
        mesh: Some(MeshDescriptor {
            h: mesh.h,
            nodes: mesh.num_nodes(),
        }),
    };
    Ok((spectrum, pairs))
}

/// The `n` smallest eigenvalues of the Laplacian on the meshed domain.
pub fn solve_eigs(mesh: &Mesh2D, bc: BoundaryCondition, n: usize) -> Result<Spectrum> {
    Ok(solve_eigenpairs(mesh, bc, n, &SolverOptions::default())?.0)
}

/// Largest `k` whose count is trusted: `k² ≤ 0.8 λ_max`.
pub fn trusted_k(spectrum: &Spectrum) -> f64 {
    let top = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
    (TRUST_FRACTION * top).max(0.0).sqrt()
}

/// `#{n : λ_n ≤ k²}`.
pub fn counting_function(spectrum: &Spectrum, k: f64) -> Result<usize> {
    spectrum.check_sorted()?;
    let limit = trusted_k(spectrum);
    if k > limit {
        return Err(Error::BeyondTrust { k, limit });
    }
    Ok(spectrum.eigenvalues.iter().take_while(|&&l| l <= k * k).count())
}

/// Vertex loop of a closed polygon surface (d = 2), in facet order.
pub fn polygon_loop(s: &SimplicialSurface) -> Result<Vec<[f64; 2]>> {
    if s.dim() != 2 {
        return Err(Error::InvalidInput(format!("polygon expected, got dimension {}", s.dim())));
    }
    let n = s.num_vertices();
    let mut next = vec![usize::MAX; n];
    for f in s.facets() {
        next[f[0]] = f[1];
    }
    let start = s.facets()[0][0];
    let mut out = Vec::with_capacity(n);
    let mut v = start;
    loop {
        out.push([s.vertex(v)[0], s.vertex(v)[1]]);
        v = next[v];
        if v == start || v == usize::MAX || out.len() > n {
            break;
        }
    }
    if out.len() != n || v != start {
        return Err(Error::InvalidInput("facets do not form a single loop".into()));
    }
    Ok(out)
}

/// Eigenvalue count needed to cover `λ ≤ lambda_max` with a margin, from
/// the two-term Weyl prediction.
pub fn eigen_count_for(points: &[[f64; 2]], bc: BoundaryCondition, lambda_max: f64) -> Result<usize> {
    let s = polygon(points)?;
    let s = if loop_area(points) < 0.0 { s.reversed() } else { s };
    let w = weyl_counting_prediction(&s, bc, lambda_max.sqrt());
    Ok((1.1 * w).ceil().max(1.0) as usize + 12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub simple: bool,
    /// Eigenvalues on the mesh of size `h` (empty when the sample is not simple).
    pub eigenvalues: Vec<f64>,
    /// Same eigenvalues on the uniformly refined `h/2` mesh.
    pub refined: Vec<f64>,
    /// `|λ_n(h) − λ_n(h/2)|`.
    pub error_bar: Vec<f64>,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSweep {
    pub family: String,
    pub bc: BoundaryCondition,
    pub h: f64,
    pub rows: Vec<SweepRow>,
    /// Per eigenvalue: `(max − min)/mean` over the simple samples.
    pub variation: Vec<f64>,
    /// Per eigenvalue: `max − min` over the simple samples.
    pub spread: Vec<f64>,
    /// Per eigenvalue: largest two-mesh error bar over the simple samples.
    pub max_error_bar: Vec<f64>,
}

fn sweep_row(
    s: f64,
    surface: &SimplicialSurface,
    bc: BoundaryCondition,
    h: f64,
    n: usize,
    opts: &SolverOptions,
) -> Result<SweepRow> {
    if !is_embedded(surface) {
        return Ok(SweepRow {
            s,
            simple: false,
            eigenvalues: vec![],
            refined: vec![],
            error_bar: vec![],
            nodes: 0,
        });
    }
    let mesh = triangulate(&polygon_loop(surface)?, h)?;
    let fine = mesh.refine_uniform();
    let (a, b) = rayon::join(|| solve_eigenpairs(&mesh, bc, n, opts), || solve_eigenpairs(&fine, bc, n, opts));
    let (a, b) = (a?.0.eigenvalues, b?.0.eigenvalues);
    let error_bar = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
    Ok(SweepRow {
        s,
        simple: true,
        eigenvalues: a,
        refined: b,
        error_bar,
        nodes: mesh.num_nodes(),
    })
}

/// Spectra of a planar flex family at the given samples. Non-simple samples
/// give flagged rows without eigenvalues.
pub fn flex_spectrum_sweep(
    family: &FlexFamily,
    bc: BoundaryCondition,
    h: f64,
    n: usize,
    samples: &[f64],
) -> Result<SpectrumSweep> {
    flex_spectrum_sweep_with(family, bc, h, n, samples, &SolverOptions::default())
}

pub fn flex_spectrum_sweep_with(
    family: &FlexFamily,
    bc: BoundaryCondition,
    h: f64,
    n: usize,
    samples: &[f64],
    opts: &SolverOptions,
) -> Result<SpectrumSweep> {
    if family.dimension != 2 {
        return Err(Error::InvalidInput(format!("planar family expected, got d = {}", family.dimension)));
    }
    let mut ctx = FlexContext::new(family)?;
    let surfaces = samples
        .iter()
        .map(|&s| Ok((s, ctx.advance(s)?.surface(family)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = surfaces
        .par_iter()
        .map(|(s, surf)| sweep_row(*s, surf, bc, h, n, opts))
        .collect::<Result<Vec<_>>>()?;
    let simple: Vec<&SweepRow> = rows.iter().filter(|r| r.simple).collect();
    let mut variation = vec![0.0; n];
    let mut spread = vec![0.0; n];
    let mut max_error_bar = vec![0.0; n];
    for i in 0..n {
        let v: Vec<f64> = simple.iter().map(|r| r.eigenvalues[i]).collect();
        if v.is_empty() {
            continue;
        }
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        spread[i] = hi - lo;
        variation[i] = if mean.abs() > 0.0 { (hi - lo) / mean.abs() } else { hi - lo };
        max_error_bar[i] = simple.iter().map(|r| r.error_bar[i]).fold(0.0, f64::max);
    }
    Ok(SpectrumSweep {
        family: family.name.clone(),
        bc,
        h,
        rows,
        variation,
        spread,
        max_error_bar,
    })
}

/// Richardson extrapolation of P1 eigenvalues from meshes `h` and `h/2`
/// (error `O(h²)`), re-sorted.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerProtocol {
    pub h: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Spectra are computed up to this eigenvalue.
    pub lambda_max: f64,
    pub fit_points: usize,
    pub seed: u64,
}

impl Default for CornerProtocol {
    fn default() -> Self {
        Self {
            h: 0.02,
            k_min: 15.0,
            k_max: 35.0,
            lambda_max: 1600.0,
            fit_points: 201,
            seed: SolverOptions::default().seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerFit {
    pub bc: BoundaryCondition,
    /// Fitted coefficient of `k²` in the Riesz-mean remainder.
    pub c: f64,
    /// `a_{d−2}/2` from the closed-form coefficients.
    pub predicted: f64,
    pub eigenvalues: usize,
    pub nodes: [usize; 2],
    /// Largest extrapolated eigenvalue.
    pub lambda_top: f64,
    /// Root-mean-square misfit of `c·k²` over the window.
    pub rms_misfit: f64,
    /// Extrapolated spectrum used for the fit.
    pub spectrum: Vec<f64>,
}

/// Corner coefficient of a polygon: Richardson-extrapolated spectra from
/// meshes `h` and `h/2`, the order-2 Riesz mean minus its volume and boundary
/// terms, and a least-squares fit of `c·k²` over `[k_min, k_max]`.
pub fn corner_coefficient(points: &[[f64; 2]], bc: BoundaryCondition, protocol: &CornerProtocol) -> Result<CornerFit> {
    if !(protocol.k_min > 0.0 && protocol.k_max > protocol.k_min && protocol.fit_points >= 2) {
        return Err(Error::InvalidInput("empty fitting window".into()));
    }
    let surface = polygon(points)?;
    let surface = if surface.oriented_volume() < 0.0 { surface.reversed() } else { surface };
    let full = coefficients(&surface, bc)?;
    let mut bulk = full.clone();
    bulk.a_d2 = 0.0;

    let n = eigen_count_for(points, bc, protocol.lambda_max)?;
    let mesh = triangulate(points, protocol.h)?;
    let fine = mesh.refine_uniform();
    let opts = SolverOptions {
        seed: protocol.seed,
        ..SolverOptions::default()
    };
    let (a, b) = rayon::join(|| solve_eigs_with(&mesh, bc, n, &opts), || solve_eigs_with(&fine, bc, n, &opts));
    let (a, b) = (a?, b?);
    let ext = Spectrum {
        bc,
        eigenvalues: richardson(&a, &b),
        mesh: None,
    };
    let limit = trusted_k(&ext);
    if protocol.k_max > limit {
        return Err(Error::BeyondTrust {
            k: protocol.k_max,
            limit,
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut samples = Vec::with_capacity(protocol.fit_points);
    for i in 0..protocol.fit_points {
        let k = protocol.k_min + (protocol.k_max - protocol.k_min) * i as f64 / (protocol.fit_points - 1) as f64;
        let r = riesz_mean_empirical(&ext, 2, k)? - riesz_mean_prediction(&bulk, 2, k)?;
        num += r * k * k;
        den += k.powi(4);
        samples.push((k, r));
    }
    let c = num / den;
    let rms = (samples.iter().map(|(k, r)| (r - c * k * k).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    Ok(CornerFit {
        bc,
        c,
        predicted: full.a_d2 / 2.0,
        eigenvalues: n,
        nodes: [mesh.num_nodes(), fine.num_nodes()],
        lambda_top: *ext.eigenvalues.last().unwrap(),
        rms_misfit: rms,
        spectrum: ext.eigenvalues,
    })
}

fn solve_eigs_with(mesh: &Mesh2D, bc: BoundaryCondition, n: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    Ok(solve_eigenpairs(mesh, bc, n, opts)?.0.eigenvalues)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub k: f64,
    pub count: usize,
    pub prediction: f64,
    /// `|N(k) − prediction| / k`.
    pub scaled_remainder: f64,
}

/// `N(k)` against the two-term Weyl prediction on `[k_min, k_max]`.
pub fn weyl_table(points: &[[f64; 2]], spectrum: &Spectrum, k_min: f64, k_max: f64, step: f64) -> Result<Vec<WeylRow>> {
    let surface = polygon(points)?;
    let surface = if surface.oriented_volume() < 0.0 { surface.reversed() } else { surface };
    let steps = ((k_max - k_min) / step).round() as usize;
    (0..=steps)
        .map(|i| {
            let k = k_min + i as f64 * step;
            let count = counting_function(spectrum, k)?;
            let prediction = weyl_counting_prediction(&surface, spectrum.bc, k);
            Ok(WeylRow {
                k,
                count,
                prediction,
                scaled_remainder: (count as f64 - prediction).abs() / k,
            })
        })
        .collect()
}
