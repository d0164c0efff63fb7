//! Piecewise-linear stiffness and consistent mass matrices.

use flexspec_core::BoundaryCondition;
use sprs::{CsMat, TriMat};

use crate::mesh::Mesh2D;

/// Assembled generalized eigenproblem `K u = λ M u` on the free degrees of
/// freedom (interior nodes for Dirichlet, all nodes for Neumann).
#[derive(Debug, Clone)]
pub struct System {
    pub stiffness: CsMat<f64>,
    pub mass: CsMat<f64>,
    /// Mesh node of each degree of freedom.
    pub dofs: Vec<usize>,
}

impl System {
    pub fn size(&self) -> usize {
        self.dofs.len()
    }

    /// Expand a dof vector to all mesh nodes (zero on eliminated nodes).
    pub fn to_nodes(&self, u: &[f64], nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; nodes];
        for (&n, &x) in self.dofs.iter().zip(u) {
            out[n] = x;
        }
        out
    }
}

/// Element matrices of a P1 triangle: stiffness `(b_i b_j + c_i c_j)/(4A)`
/// and mass `A(1 + δ_ij)/12`.
fn element(p: [&[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let area = 0.5 * (b[0] * c[1] - b[1] * c[0]);
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

pub fn assemble(mesh: &Mesh2D, bc: BoundaryCondition) -> System {
    let n = mesh.num_nodes();
    let mut dof_of = vec![usize::MAX; n];
    let mut dofs = Vec::new();
    for i in 0..n {
        if bc == BoundaryCondition::Neumann || !mesh.boundary[i] {
            dof_of[i] = dofs.len();
            dofs.push(i);
        }
    }
    let nd = dofs.len();
    let mut kt = TriMat::with_capacity((nd, nd), 9 * mesh.triangles.len());
    let mut mt = TriMat::with_capacity((nd, nd), 9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (ke, me) = element(mesh.triangle_points(t));
        for i in 0..3 {
            let gi = dof_of[tri[i]];
            if gi == usize::MAX {
                continue;
            }
            for j in 0..3 {
                let gj = dof_of[tri[j]];
                if gj == usize::MAX {
                    continue;
                }
                kt.add_triplet(gi, gj, ke[i][j]);
                mt.add_triplet(gi, gj, me[i][j]);
            }
        }
    }
    System {
        stiffness: kt.to_csr(),
        mass: mt.to_csr(),
        dofs,
    }
}

/// `y = A x` for a CSR matrix.
pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, &v)| v * x[j]).sum();
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::triangulate;

    #[test]
    fn reference_element() {
        let (k, m) = element([&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
        assert!((m.iter().flatten().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_and_area() {
        let mesh = triangulate(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], 0.3).unwrap();
        let sys = assemble(&mesh, BoundaryCondition::Neumann);
        let one = vec![1.0; sys.size()];
        // K annihilates constants; 1ᵀ M 1 is the area
        assert!(matvec(&sys.stiffness, &one).iter().all(|v| v.abs() < 1e-12));
        let area: f64 = matvec(&sys.mass, &one).iter().sum();
        assert!((area - 2.0).abs() < 1e-12);
        let d = assemble(&mesh, BoundaryCondition::Dirichlet);
        assert_eq!(d.size(), mesh.boundary.iter().filter(|b| !**b).count());
    }
}
