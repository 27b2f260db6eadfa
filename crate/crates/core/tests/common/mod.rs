//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fas_surrogate::fem::CoefficientModel;

/// Six-point degree-4 rule on the reference triangle: barycentric points and
/// weights normalized to sum to one.
const DUNAVANT4: [([f64; 3], f64); 6] = [
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
];

fn k_of(model: CoefficientModel, x: f64, y: f64, u: f64) -> f64 {
    match model {
        CoefficientModel::OnePlusUSquared => 1.0 + u * u,
        CoefficientModel::OnePlusExpNegU => 1.0 + (-u).exp(),
        CoefficientModel::OnePlusExpNegUPlusXY => 1.0 + (-u).exp() + x * x + y * y,
    }
}

/// Unit square with `n` cells per side, row-major vertices, each cell cut
/// along its lower-left to upper-right diagonal.
pub struct OracleMesh {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl OracleMesh {
    pub fn new(n: usize) -> Self {
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ul, ur) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Self { n, vertices, triangles }
    }

    /// `F(u)_i = sum_T int_T k(x, u) grad u . grad phi_i + u phi_i` by the
    /// degree-4 rule on every triangle.
    pub fn apply(&self, model: CoefficientModel, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vertices.len()];
        for tri in &self.triangles {
            let p: Vec<[f64; 2]> = tri.iter().map(|&v| self.vertices[v]).collect();
            let (a, b) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
            let det = a[0] * b[1] - a[1] * b[0];
            let area = 0.5 * det.abs();
            // gradients of the barycentric coordinates
            let g1 = [b[1] / det, -b[0] / det];
            let g2 = [-a[1] / det, a[0] / det];
            let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
            let grads = [g0, g1, g2];
            let uv = [u[tri[0]], u[tri[1]], u[tri[2]]];
            let grad_u = [
                (0..3).map(|i| uv[i] * grads[i][0]).sum::<f64>(),
                (0..3).map(|i| uv[i] * grads[i][1]).sum::<f64>(),
            ];
            for (lam, w) in DUNAVANT4 {
                let x = (0..3).map(|i| lam[i] * p[i][0]).sum::<f64>();
                let y = (0..3).map(|i| lam[i] * p[i][1]).sum::<f64>();
                let uq = (0..3).map(|i| lam[i] * uv[i]).sum::<f64>();
                let k = k_of(model, x, y, uq);
                for i in 0..3 {
                    let diff = k * (grad_u[0] * grads[i][0] + grad_u[1] * grads[i][1]);
                    out[tri[i]] += w * area * (diff + uq * lam[i]);
                }
            }
        }
        out
    }
}

/// Central-difference Jacobian of `f` at `u` (column by column).
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, u: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut jac = vec![vec![0.0; n]; f(u).len()];
    let mut up = u.to_vec();
    for j in 0..n {
        up[j] = u[j] + eps;
        let fp = f(&up);
        up[j] = u[j] - eps;
        let fm = f(&up);
        up[j] = u[j];
        for (row, (a, b)) in jac.iter_mut().zip(fp.iter().zip(&fm)) {
            row[j] = (a - b) / (2.0 * eps);
        }
    }
    jac
}

/// Dense Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| {
        let mut r = r.clone();
        r.push(bi);
        r
    }).collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max |a - b| / max |b|` over all entries.
pub fn max_rel_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    err / scale
}
