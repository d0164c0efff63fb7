//! Smallest eigenpairs of `K u = λ M u` by shift-invert block Krylov
//! iteration.
//!
//! `K − σM` is factored once (LDLᵀ after reverse Cuthill–McKee ordering).
//! The operator `A = (K − σM)⁻¹M` is self-adjoint in the `M` inner product
//! and maps the wanted end of the spectrum to its largest eigenvalues
//! `θ = 1/(λ − σ)`. A block Krylov basis of `A` is grown with full
//! reorthogonalization, and Rayleigh–Ritz on the projected matrix
//! `QᵀMAQ` gives the approximations. Blocks keep clusters and exact
//! multiplicities (up to the block size) from being missed.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sprs::{CsMat, FillInReduction, SymmetryCheck};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};
use crate::fem::{matvec, System};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `‖Ku − λMu‖ / ‖Mu‖` for every returned pair.
    pub tol: f64,
    pub block: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            block: 8,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// `M`-normalized eigenvectors on the system's degrees of freedom.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

struct ShiftInvert {
    ldl: LdlNumeric<f64, usize>,
}

impl ShiftInvert {
    fn new(sys: &System, shift: f64) -> Result<Self> {
        let a: CsMat<f64> = &sys.stiffness - &sys.mass.map(|v| v * shift);
        let ldl = Ldl::new()
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .numeric(a.view())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        if let Some(i) = ldl.d().iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Factorization(format!("K − σM not positive definite (pivot {i})")));
        }
        Ok(Self { ldl })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.ldl.solve(b)
    }
}

/// The `n` smallest eigenpairs of the assembled system. `shift` must lie
/// below the smallest eigenvalue.
pub fn smallest_eigenpairs(sys: &System, n: usize, shift: f64, opts: &SolverOptions) -> Result<Eigenpairs> {
    let dim = sys.size();
    if n == 0 || n >= dim {
        return Err(Error::InvalidInput(format!("{n} eigenpairs requested from {dim} unknowns")));
    }
    let op = ShiftInvert::new(sys, shift)?;
    let b = opts.block.max(1).min(dim - n).max(1);
    let max_basis = dim.min((6 * n).max(n + 40 * b));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_block = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..b).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    };

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    let mut h = DMatrix::<f64>::zeros(0, 0);
    let mut next_check = n + 2 * b;
    let mut block = random_block(&mut rng);
    loop {
        let start = q.len();
        for mut v in block {
            if q.len() >= max_basis {
                break;
            }
            let before = dot(&v, &matvec(&sys.mass, &v)).sqrt();
            for _ in 0..2 {
                let coef: Vec<f64> = mq.par_iter().map(|m| dot(&v, m)).collect();
                for (c, qi) in coef.iter().zip(&q) {
                    axpy(&mut v, -c, qi);
                }
            }
            let mut mv = matvec(&sys.mass, &v);
            let nrm = dot(&v, &mv).sqrt();
            if !(nrm > 1e-10 * before) {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            mv.iter_mut().for_each(|x| *x /= nrm);
            q.push(v);
            mq.push(mv);
        }
        let added = q.len() - start;
        if added == 0 {
            if q.len() >= max_basis {
                return Err(Error::NonConvergence(format!("basis limit {max_basis} reached")));
            }
            block = random_block(&mut rng);
            continue;
        }
        // images of the new basis vectors; they seed the next block
        let y: Vec<Vec<f64>> = mq[start..].par_iter().map(|m| op.solve(m)).collect();
        let m = q.len();
        h = h.resize(m, m, 0.0);
        let cols: Vec<(usize, Vec<f64>)> = (start..m)
            .into_par_iter()
            .map(|j| (j, (0..=j).map(|i| dot(&mq[i], &y[j - start])).collect()))
            .collect();
        for (j, col) in cols {
            for (i, v) in col.into_iter().enumerate() {
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }

        if m >= next_check || m >= max_basis {
            if let Some(pairs) = rayleigh_ritz(sys, &q, &mq, &h, n, shift, opts.tol) {
                return Ok(pairs);
            }
            if m >= max_basis {
                return Err(Error::NonConvergence(format!(
                    "residual above {:e} with a basis of {m} vectors",
                    opts.tol
                )));
            }
            next_check = m + b.max(m / 8);
        }
        block = y;
    }
}

/// Ritz pairs of the current basis, if all `n` meet the residual bound.
fn rayleigh_ritz(
    sys: &System,
    q: &[Vec<f64>],
    mq: &[Vec<f64>],
    h: &DMatrix<f64>,
    n: usize,
    shift: f64,
    tol: f64,
) -> Option<Eigenpairs> {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let dim = sys.size();
    let results: Vec<(f64, Vec<f64>, f64)> = order[..n]
        .par_iter()
        .map(|&k| {
            let theta = eig.eigenvalues[k];
            let lambda = shift + 1.0 / theta;
            let s = eig.eigenvectors.column(k);
            let mut u = vec![0.0; dim];
            let mut mu = vec![0.0; dim];
            for (i, c) in s.iter().enumerate() {
                axpy(&mut u, *c, &q[i]);
                axpy(&mut mu, *c, &mq[i]);
            }
            let ku = matvec(&sys.stiffness, &u);
            let r: f64 = ku.iter().zip(&mu).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            (lambda, u, r / dot(&mu, &mu).sqrt())
        })
        .collect();
    if results.iter().any(|r| !(r.2 < tol) || !(r.0.is_finite())) {
        return None;
    }
    let mut pairs = Eigenpairs {
        values: Vec::with_capacity(n),
        vectors: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
    };
    for (l, u, r) in results {
        pairs.values.push(l);
        pairs.vectors.push(u);
        pairs.residuals.push(r);
    }
    Some(pairs)
}
