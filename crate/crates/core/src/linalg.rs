//! Small dense helpers on coordinate slices.

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Determinant of a square matrix given as rows. Partial-pivot LU.
pub(crate) fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    match n {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let (a, b, c) = (&rows[0], &rows[1], &rows[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        _ => {
            let mut m: Vec<Vec<f64>> = rows.to_vec();
            let mut d = 1.0;
            for k in 0..n {
                let piv = (k..n)
                    .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
                    .unwrap();
                if m[piv][k] == 0.0 {
                    return 0.0;
                }
                if piv != k {
                    m.swap(piv, k);
                    d = -d;
                }
                d *= m[k][k];
                for i in k + 1..n {
                    let f = m[i][k] / m[k][k];
                    for j in k..n {
                        m[i][j] -= f * m[k][j];
                    }
                }
            }
            d
        }
    }
}

/// Vector `n` with `det(n, e_1, ..., e_{d-1}) = |n|^2`, orthogonal to every `e_j`.
/// `edges` holds d-1 vectors of length d.
pub(crate) fn cofactor_normal(edges: &[Vec<f64>]) -> Vec<f64> {
    let d = edges.len() + 1;
    (0..d)
        .map(|i| {
            let minor: Vec<Vec<f64>> = edges
                .iter()
                .map(|e| {
                    e.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(&minor)
        })
        .collect()
}

/// Orthonormal basis of span(vectors) by modified Gram-Schmidt; near-dependent vectors dropped.
pub(crate) fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale0 = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let nw = norm(&w);
        if nw > 1e-14 * scale0.max(f64::MIN_POSITIVE) {
            basis.push(scale(&w, 1.0 / nw));
        }
    }
    basis
}

/// Removes from `v` its components along the orthonormal `basis`.
pub(crate) fn reject(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for b in basis {
        let c = dot(&w, b);
        axpy(-c, b, &mut w);
    }
    w
}

/// (k)-dimensional measure of the simplex spanned by `edges` (k = edges.len()).
pub(crate) fn simplex_measure(edges: &[Vec<f64>]) -> f64 {
    let k = edges.len();
    if k == 0 {
        return 1.0;
    }
    let gram: Vec<Vec<f64>> = edges
        .iter()
        .map(|a| edges.iter().map(|b| dot(a, b)).collect())
        .collect();
    let g = det(&gram).max(0.0);
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    g.sqrt() / fact
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_closed_forms() {
        let m = vec![vec![2.0, 0.0, 1.0], vec![1.0, 3.0, 2.0], vec![1.0, 1.0, 2.0]];
        assert!((det(&m) - 6.0).abs() < 1e-14);
        let m4 = vec![
            vec![1.0, 2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0, 0.0],
            vec![0.0, 0.0, 1.0, 2.0],
        ];
        assert!((det(&m4) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn cofactor_normal_is_right_handed() {
        let e = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(cofactor_normal(&e), vec![0.0, 0.0, 1.0]);
        let e2 = vec![vec![1.0, 0.0]];
        assert_eq!(cofactor_normal(&e2), vec![0.0, -1.0]);
    }

    #[test]
    fn measure_of_unit_triangle() {
        let e = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!((simplex_measure(&e) - 0.5).abs() < 1e-15);
    }
}
