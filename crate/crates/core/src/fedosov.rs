//! Weyl and Fedosov asymptotics for the Laplacian in polyhedral domains.
//!
//! The Riesz mean of order `p` of the counting function `N(k)` (eigenvalues
//! `λ ≤ k²`) expands as `Σ_l a_l Γ(l+1)/Γ(p+l+1) k^{p+l}`. The top three
//! coefficients depend on the volume, the boundary measure and the dihedral
//! angles at the ridges:
//!
//! ```text
//! a_d     =   vol_d(D)      / (2^d     π^{d/2}     Γ(d/2 + 1))
//! a_{d-1} = ∓ vol_{d-1}(∂D) / (2^{d+1} π^{(d-1)/2} Γ((d+1)/2))
//! a_{d-2} =   Σ_i (φ_i² − π²)/(3φ_i) vol_{d-2}(F_i) / (2^{d+1} π^{d/2} Γ(d/2))
//! ```
//!
//! with `−` for Dirichlet and `+` for Neumann conditions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::conflicting_pairs;
use crate::error::{Error, Result};
use crate::flex::{uniform_samples, FlexContext, FlexFamily};
use crate::surface::SimplicialSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    /// Sign of `a_{d−1}`.
    pub fn sign(self) -> f64 {
        match self {
            BoundaryCondition::Dirichlet => -1.0,
            BoundaryCondition::Neumann => 1.0,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        })
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            other => Err(Error::Precondition(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub h: f64,
    pub nodes: usize,
}

/// Eigenvalues `λ_n = ν_n²` in ascending order (units length⁻²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub bc: BoundaryCondition,
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshDescriptor>,
}

impl Spectrum {
    pub fn new(bc: BoundaryCondition, eigenvalues: Vec<f64>) -> Self {
        Self {
            bc,
            eigenvalues,
            mesh: None,
        }
    }

    /// Index of the first descent, if any.
    pub fn check_sorted(&self) -> Result<()> {
        match self.eigenvalues.windows(2).position(|w| !(w[1] >= w[0])) {
            Some(i) => Err(Error::UnsortedSpectrum(i + 1)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FedosovCoefficients {
    pub dimension: usize,
    pub bc: BoundaryCondition,
    pub a_d: f64,
    pub a_d1: f64,
    pub a_d2: f64,
}

impl FedosovCoefficients {
    /// `a_l` for `l ∈ {d−2, d−1, d}`.
    pub fn get(&self, l: usize) -> Option<f64> {
        let d = self.dimension;
        match l {
            _ if l == d => Some(self.a_d),
            _ if l + 1 == d => Some(self.a_d1),
            _ if l + 2 == d => Some(self.a_d2),
            _ => None,
        }
    }
}

/// `Γ(n/2)` for a positive integer `n`.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n > 0, "Γ(0) is undefined");
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < n as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `(φ² − π²)/(3φ)`; exactly 0 at `φ = π`.
pub fn ridge_term(phi: f64) -> f64 {
    if phi == PI {
        0.0
    } else {
        (phi * phi - PI * PI) / (3.0 * phi)
    }
}

/// Normalizing factor of `a_{d−2}`: `1/(2^{d+1} π^{d/2} Γ(d/2))`.
pub fn ridge_factor(d: usize) -> f64 {
    1.0 / (2f64.powi(d as i32 + 1) * PI.powf(d as f64 / 2.0) * gamma_half(d))
}

/// Coefficients from the geometry alone (no embedding check).
fn raw_coefficients(s: &SimplicialSurface, bc: BoundaryCondition) -> FedosovCoefficients {
    let d = s.dim();
    let df = d as f64;
    let vol = s.oriented_volume();
    let area = s.surface_area();
    let a_d = vol / (2f64.powi(d as i32) * PI.powf(df / 2.0) * gamma_half(d + 2));
    let a_d1 = bc.sign() * area / (2f64.powi(d as i32 + 1) * PI.powf((df - 1.0) / 2.0) * gamma_half(d + 1));
    let sum: f64 = s.dihedral_angles().iter().map(|r| ridge_term(r.angle) * r.measure).sum();
    FedosovCoefficients {
        dimension: d,
        bc,
        a_d,
        a_d1,
        a_d2: ridge_factor(d) * sum,
    }
}

/// `a_d`, `a_{d−1}`, `a_{d−2}` of the domain bounded by `s`, which must be
/// embedded and outward oriented (d = 2 or 3).
pub fn coefficients(s: &SimplicialSurface, bc: BoundaryCondition) -> Result<FedosovCoefficients> {
    let conflicts = conflicting_pairs(s)?;
    if let Some(&(a, b)) = conflicts.first() {
        return Err(Error::InvalidDomain(format!("facets {a} and {b} intersect")));
    }
    if !(s.oriented_volume() > 0.0) {
        return Err(Error::InvalidDomain("surface is not outward oriented".into()));
    }
    Ok(raw_coefficients(s, bc))
}

/// Two-term Weyl prediction of `N(k)` for `k ≥ 0`.
pub fn weyl_counting_prediction(s: &SimplicialSurface, bc: BoundaryCondition, k: f64) -> f64 {
    let d = s.dim();
    let x = k / (2.0 * PI.sqrt());
    s.oriented_volume() / gamma_half(d + 2) * x.powi(d as i32)
        + bc.sign() * s.surface_area() / (4.0 * gamma_half(d + 1)) * x.powi(d as i32 - 1)
}

/// Largest Riesz order accepted by [`riesz_mean_prediction`].
pub fn max_riesz_order(d: usize) -> usize {
    d
}

/// `Σ_{l=d−2}^{d} a_l Γ(l+1)/Γ(p+l+1) k^{p+l}`, for `0 ≤ p ≤ d`.
pub fn riesz_mean_prediction(c: &FedosovCoefficients, p: usize, k: f64) -> Result<f64> {
    let d = c.dimension;
    if p > max_riesz_order(d) {
        return Err(Error::OrderOutOfRange {
            p,
            max: max_riesz_order(d),
        });
    }
    Ok((d - 2..=d)
        .map(|l| {
            c.get(l).unwrap() * gamma_half(2 * l + 2) / gamma_half(2 * (p + l) + 2) * k.powi((p + l) as i32)
        })
        .sum())
}

/// `(1/Γ(p+1)) Σ_{√λ_n ≤ k} (k − √λ_n)^p`. Eigenvalues below zero (round-off
/// on a Neumann zero mode) count as zero.
pub fn riesz_mean_empirical(spectrum: &Spectrum, p: usize, k: f64) -> Result<f64> {
    spectrum.check_sorted()?;
    let sum: f64 = spectrum
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .take_while(|&t| t <= k)
        .map(|t| (k - t).powi(p as i32))
        .sum();
    Ok(sum / gamma_half(2 * p + 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub s: f64,
    pub embedded: bool,
    pub coefficients: FedosovCoefficients,
    pub min_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrack {
    pub rows: Vec<CoefficientRow>,
    /// `max_s |a(s) − a(s_0)| / |a(s_0)|` for `a_d`, `a_{d−1}`, `a_{d−2}`
    /// over embedded rows (absolute if `a(s_0) = 0`).
    pub variation: [f64; 3],
}

/// Coefficients at `uniform_samples(samples)`.
pub fn track_coefficients(family: &FlexFamily, bc: BoundaryCondition, samples: usize) -> Result<CoefficientTrack> {
    track_coefficients_at(family, bc, &uniform_samples(samples))
}

/// Coefficients at the ascending parameters `ss`. Non-embedded samples are
/// kept with `embedded = false` and left out of the variation.
pub fn track_coefficients_at(family: &FlexFamily, bc: BoundaryCondition, ss: &[f64]) -> Result<CoefficientTrack> {
    let states = FlexContext::new(family)?.sweep(ss)?;
    let rows: Vec<CoefficientRow> = states
        .par_iter()
        .map(|st| {
            let s = st.surface(family)?;
            let embedded = conflicting_pairs(&s)?.is_empty() && s.oriented_volume() > 0.0;
            let min_angle = s.dihedral_angles().iter().map(|r| r.angle).fold(f64::INFINITY, f64::min);
            Ok(CoefficientRow {
                s: st.s,
                embedded,
                coefficients: raw_coefficients(&s, bc),
                min_angle,
            })
        })
        .collect::<Result<_>>()?;
    let good: Vec<&CoefficientRow> = rows.iter().filter(|r| r.embedded).collect();
    let mut variation = [0.0; 3];
    if let Some(first) = good.first() {
        let pick = |c: &FedosovCoefficients, i: usize| [c.a_d, c.a_d1, c.a_d2][i];
        for (i, v) in variation.iter_mut().enumerate() {
            let a0 = pick(&first.coefficients, i);
            let worst = good
                .iter()
                .map(|r| (pick(&r.coefficients, i) - a0).abs())
                .fold(0.0, f64::max);
            *v = if a0 != 0.0 { worst / a0.abs() } else { worst };
        }
    }
    Ok(CoefficientTrack { rows, variation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::shapes::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn corner_terms() {
        assert!((ridge_term(PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((ridge_term(1.5 * PI) - 5.0 * PI / 18.0).abs() < 1e-15);
        assert_eq!(ridge_term(PI), 0.0);
    }

    #[test]
    fn square_coefficients() {
        let s = unit_square();
        let c = coefficients(&s, BoundaryCondition::Dirichlet).unwrap();
        assert!((c.a_d - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((c.a_d1 + 1.0 / PI).abs() < 1e-15);
        assert!((c.a_d2 + 0.25).abs() < 1e-15);
        let n = coefficients(&s, BoundaryCondition::Neumann).unwrap();
        assert!((n.a_d1 - 1.0 / PI).abs() < 1e-15);
        assert_eq!((n.a_d, n.a_d2), (c.a_d, c.a_d2));
    }

    #[test]
    fn weyl_square() {
        let s = unit_square();
        let d = weyl_counting_prediction(&s, BoundaryCondition::Dirichlet, 10.0);
        let n = weyl_counting_prediction(&s, BoundaryCondition::Neumann, 10.0);
        assert!((d - (100.0 / (4.0 * PI) - 10.0 / PI)).abs() < 1e-12);
        assert!((n - (100.0 / (4.0 * PI) + 10.0 / PI)).abs() < 1e-12);
        assert!((d - 4.775).abs() < 1e-3 && (n - 11.141).abs() < 1e-3);
    }

    #[test]
    fn riesz_prediction_square() {
        let c = coefficients(&unit_square(), BoundaryCondition::Dirichlet).unwrap();
        let k: f64 = 7.0;
        let want = k.powi(4) / (48.0 * PI) - k.powi(3) / (6.0 * PI) - k * k / 8.0;
        assert!((riesz_mean_prediction(&c, 2, k).unwrap() - want).abs() < 1e-12);
        assert_eq!(riesz_mean_prediction(&c, 2, 0.0).unwrap(), 0.0);
        assert!(matches!(riesz_mean_prediction(&c, 3, 1.0), Err(Error::OrderOutOfRange { p: 3, max: 2 })));
    }

    #[test]
    fn empirical_riesz() {
        // λ = π²(m² + n²) ≤ 25 only for m = n = 1
        let mut ev: Vec<f64> = (1..10)
            .flat_map(|m| (1..10).map(move |n| PI * PI * (m * m + n * n) as f64))
            .collect();
        ev.sort_by(f64::total_cmp);
        let sp = Spectrum::new(BoundaryCondition::Dirichlet, ev);
        let want = 0.5 * (5.0 - PI * 2f64.sqrt()).powi(2);
        assert!((riesz_mean_empirical(&sp, 2, 5.0).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.1551).abs() < 1e-4);
        assert_eq!(riesz_mean_empirical(&sp, 0, 10.0).unwrap(), 6.0);
        assert_eq!(riesz_mean_empirical(&sp, 2, 1.0).unwrap(), 0.0);
        let bad = Spectrum::new(BoundaryCondition::Dirichlet, vec![2.0, 1.0]);
        assert!(matches!(riesz_mean_empirical(&bad, 0, 1.0), Err(Error::UnsortedSpectrum(1))));
    }

    #[test]
    fn cube_coefficients_and_orientation() {
        let c = coefficients(&unit_cube(), BoundaryCondition::Dirichlet).unwrap();
        assert!(c.a_d > 0.0 && c.a_d1 < 0.0 && c.a_d2 < 0.0);
        // the 6 face diagonals are flat and add nothing to the 12 right-angle edges
        assert!((c.a_d2 + 3.0 / (4.0 * PI)).abs() < 1e-14, "{}", c.a_d2);
        assert!((c.a_d - 1.0 / (8.0 * PI.powf(1.5) * 0.75 * PI.sqrt())).abs() < 1e-15);
        assert!(matches!(
            coefficients(&unit_cube().reversed(), BoundaryCondition::Dirichlet),
            Err(Error::InvalidDomain(_))
        ));
    }
}
