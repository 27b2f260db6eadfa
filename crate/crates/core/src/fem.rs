//! P1 finite element discretization of `-div(k(u) grad u) + u = f` with
//! homogeneous Neumann conditions.
//!
//! Component `i` of the fine operator is
//! `F(u)_i = sum_tau  int_tau ( k(u_h) grad u_h . grad phi_i + u_h phi_i ) dx`,
//! assembled triangle by triangle in index order. The same per-triangle
//! kernel evaluates the local coarse maps `F_T^H`, so global and
//! subdomain-assembled quantities agree up to summation order.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::linsolve::SparseMatrix;
use crate::mesh::{local_interpolation_weights, MeshHierarchy, StructuredGrid, Subdomain, TransferOperators};
use crate::LOCAL_COARSE_DOFS;

/// Nonlinear diffusion coefficient `k(x, y, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientModel {
    /// `k = 1 + u^2`
    OnePlusUSquared,
    /// `k = 1 + exp(-u)`
    OnePlusExpNegU,
    /// `k = 1 + exp(-u) + x^2 + y^2`
    OnePlusExpNegUPlusXY,
}

impl CoefficientModel {
    pub const ALL: [CoefficientModel; 3] = [
        CoefficientModel::OnePlusUSquared,
        CoefficientModel::OnePlusExpNegU,
        CoefficientModel::OnePlusExpNegUPlusXY,
    ];

    #[inline]
    pub fn evaluate(self, x: f64, y: f64, u: f64) -> f64 {
        match self {
            Self::OnePlusUSquared => 1.0 + u * u,
            Self::OnePlusExpNegU => 1.0 + (-u).exp(),
            Self::OnePlusExpNegUPlusXY => 1.0 + (-u).exp() + x * x + y * y,
        }
    }

    /// `dk/du`.
    #[inline]
    pub fn derivative(self, _x: f64, _y: f64, u: f64) -> f64 {
        match self {
            Self::OnePlusUSquared => 2.0 * u,
            Self::OnePlusExpNegU | Self::OnePlusExpNegUPlusXY => -(-u).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::OnePlusUSquared => "one_plus_u2",
            Self::OnePlusExpNegU => "one_plus_exp_neg_u",
            Self::OnePlusExpNegUPlusXY => "one_plus_exp_neg_u_plus_xy",
        }
    }
}

impl fmt::Display for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoefficientModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown coefficient `{s}`")))
    }
}

/// Quadrature on the reference triangle in barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    /// Weights sum to the reference-triangle area 1/2.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Symmetric 3-point rule, exact for degree 2.
    pub fn degree2() -> Self {
        let a = 2.0 / 3.0;
        let b = 1.0 / 6.0;
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 6.0; 3],
        }
    }
}

/// Analytic solutions with vanishing normal derivative on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// `x^2 (1-x)^2 + y^2 (1-y)^2`
    Biquartic,
    /// `cos(pi x) cos(pi y)`
    CosPi,
}

impl ExactSolution {
    pub fn evaluate(self, x: f64, y: f64) -> f64 {
        match self {
            Self::Biquartic => x * x * (1.0 - x) * (1.0 - x) + y * y * (1.0 - y) * (1.0 - y),
            Self::CosPi => (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Biquartic => "biquartic",
            Self::CosPi => "cospi",
        }
    }
}

impl FromStr for ExactSolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biquartic" => Ok(Self::Biquartic),
            "cospi" => Ok(Self::CosPi),
            _ => Err(Error::InvalidConfig(format!("unknown exact solution `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
struct TriangleGeometry {
    grads: [[f64; 2]; 3],
    /// Physical quadrature points.
    qpoints: Vec<[f64; 2]>,
    /// Physical quadrature weights (sum = area).
    qweights: Vec<f64>,
}

/// The fine-level nonlinear operator `F` and its Jacobian.
#[derive(Debug, Clone)]
pub struct FineOperator {
    grid: StructuredGrid,
    ratio: usize,
    coefficient: CoefficientModel,
    quadrature: QuadratureRule,
    geometry: Vec<TriangleGeometry>,
    pattern: SparseMatrix,
    /// CSR positions of each triangle's 3x3 block.
    positions: Vec<[[usize; 3]; 3]>,
    local_p: Vec<[f64; LOCAL_COARSE_DOFS]>,
}

impl FineOperator {
    pub fn new(hierarchy: &MeshHierarchy, coefficient: CoefficientModel) -> Self {
        Self::with_quadrature(hierarchy, coefficient, QuadratureRule::degree2())
    }

    pub fn with_quadrature(
        hierarchy: &MeshHierarchy,
        coefficient: CoefficientModel,
        quadrature: QuadratureRule,
    ) -> Self {
        let grid = hierarchy.fine.clone();
        let r = hierarchy.ratio;
        let geometry = grid
            .triangles
            .iter()
            .map(|&tri| triangle_geometry(&grid, tri, &quadrature))
            .collect();

        let n = grid.num_vertices();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in &grid.triangles {
            for &a in tri {
                neighbours[a].extend_from_slice(tri);
            }
        }
        for row in &mut neighbours {
            row.sort_unstable();
            row.dedup();
        }
        let pattern = SparseMatrix::from_pattern(n, &neighbours);
        let positions = grid
            .triangles
            .iter()
            .map(|tri| {
                let mut pos = [[0; 3]; 3];
                for (a, &ga) in tri.iter().enumerate() {
                    for (b, &gb) in tri.iter().enumerate() {
                        pos[a][b] = pattern.position(ga, gb).expect("pattern covers triangle");
                    }
                }
                pos
            })
            .collect();

        let mut local_p = Vec::with_capacity((r + 1) * (r + 1));
        for b in 0..=r {
            for a in 0..=r {
                local_p.push(local_interpolation_weights(r, a, b));
            }
        }

        Self {
            grid,
            ratio: r,
            coefficient,
            quadrature,
            geometry,
            pattern,
            positions,
            local_p,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.grid.num_vertices()
    }

    pub fn coefficient(&self) -> CoefficientModel {
        self.coefficient
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    /// Element residual of triangle `t` for vertex values `u`.
    pub fn triangle_residual(&self, t: usize, u: [f64; 3]) -> [f64; 3] {
        let geo = &self.geometry[t];
        let grad_u = gradient(&geo.grads, u);
        let mut out = [0.0; 3];
        for ((lam, xy), w) in self.quadrature.points.iter().zip(&geo.qpoints).zip(&geo.qweights) {
            let uq = lam[0] * u[0] + lam[1] * u[1] + lam[2] * u[2];
            let k = self.coefficient.evaluate(xy[0], xy[1], uq);
            for a in 0..3 {
                let diffusion = k * (grad_u[0] * geo.grads[a][0] + grad_u[1] * geo.grads[a][1]);
                out[a] += w * (diffusion + uq * lam[a]);
            }
        }
        out
    }

    /// Element Jacobian `d(residual_a)/d(u_b)` of triangle `t`.
    pub fn triangle_jacobian(&self, t: usize, u: [f64; 3]) -> [[f64; 3]; 3] {
        let geo = &self.geometry[t];
        let grad_u = gradient(&geo.grads, u);
        let mut out = [[0.0; 3]; 3];
        for ((lam, xy), w) in self.quadrature.points.iter().zip(&geo.qpoints).zip(&geo.qweights) {
            let uq = lam[0] * u[0] + lam[1] * u[1] + lam[2] * u[2];
            let k = self.coefficient.evaluate(xy[0], xy[1], uq);
            let dk = self.coefficient.derivative(xy[0], xy[1], uq);
            for a in 0..3 {
                let flux_a = grad_u[0] * geo.grads[a][0] + grad_u[1] * geo.grads[a][1];
                for b in 0..3 {
                    let stiff = geo.grads[b][0] * geo.grads[a][0] + geo.grads[b][1] * geo.grads[a][1];
                    out[a][b] += w * (k * stiff + dk * lam[b] * flux_a + lam[b] * lam[a]);
                }
            }
        }
        out
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("fine operator input", self.num_dofs(), u.len())?;
        let mut out = vec![0.0; u.len()];
        for (t, tri) in self.grid.triangles.iter().enumerate() {
            let local = self.triangle_residual(t, tri.map(|i| u[i]));
            for (a, &i) in tri.iter().enumerate() {
                out[i] += local[a];
            }
        }
        Ok(out)
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix> {
        check_len("jacobian input", self.num_dofs(), u.len())?;
        let mut j = self.pattern.clone();
        let values = j.values_mut();
        for (t, tri) in self.grid.triangles.iter().enumerate() {
            let local = self.triangle_jacobian(t, tri.map(|i| u[i]));
            let pos = &self.positions[t];
            for a in 0..3 {
                for b in 0..3 {
                    values[pos[a][b]] += local[a][b];
                }
            }
        }
        Ok(j)
    }

    /// `P^T F(P v_c)`.
    pub fn galerkin_coarse_apply(&self, t: &TransferOperators, v_c: &[f64]) -> Result<Vec<f64>> {
        let v = t.prolong(v_c)?;
        t.restrict(&self.apply(&v)?)
    }

    /// `F_T^H(v) = P_T^T F_T(P_T v)`: the fine-triangle assembly of the coarse
    /// residual over subdomain `T`.
    pub fn local_coarse_operator(
        &self,
        sub: &Subdomain,
        v: &[f64; LOCAL_COARSE_DOFS],
    ) -> [f64; LOCAL_COARSE_DOFS] {
        let fine_local: Vec<f64> = self
            .local_p
            .iter()
            .map(|w| w.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        let mut fine_res = vec![0.0; fine_local.len()];
        for (&t, tri) in sub.fine_triangles.iter().zip(&sub.local_triangles) {
            let local = self.triangle_residual(t, tri.map(|i| fine_local[i]));
            for (a, &i) in tri.iter().enumerate() {
                fine_res[i] += local[a];
            }
        }
        let mut out = [0.0; LOCAL_COARSE_DOFS];
        for (w, &x) in self.local_p.iter().zip(&fine_res) {
            for k in 0..LOCAL_COARSE_DOFS {
                out[k] += w[k] * x;
            }
        }
        out
    }

    /// `G_T(u, g) = F_T^H(u + g) - F_T^H(u)`.
    pub fn local_coarse_delta(&self, sub: &Subdomain, u: &[f64], g: &[f64]) -> Result<[f64; LOCAL_COARSE_DOFS]> {
        check_len("local coarse delta u", LOCAL_COARSE_DOFS, u.len())?;
        check_len("local coarse delta g", LOCAL_COARSE_DOFS, g.len())?;
        let u: [f64; LOCAL_COARSE_DOFS] = u.try_into().expect("checked length");
        let ug: [f64; LOCAL_COARSE_DOFS] = std::array::from_fn(|k| u[k] + g[k]);
        let a = self.local_coarse_operator(sub, &ug);
        let b = self.local_coarse_operator(sub, &u);
        Ok(std::array::from_fn(|k| a[k] - b[k]))
    }

    /// Nodal interpolant of an analytic function on the fine grid.
    pub fn interpolate(&self, exact: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.grid.vertices.iter().map(|&[x, y]| exact(x, y)).collect()
    }

    /// Right-hand side `f = F(I_h u*)`, so that `I_h u*` solves `F(u) = f` exactly.
    pub fn manufactured_rhs(&self, exact: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let u = self.interpolate(exact);
        self.apply(&u).expect("interpolant has fine length")
    }
}

fn gradient(grads: &[[f64; 2]; 3], u: [f64; 3]) -> [f64; 2] {
    [
        grads[0][0] * u[0] + grads[1][0] * u[1] + grads[2][0] * u[2],
        grads[0][1] * u[0] + grads[1][1] * u[1] + grads[2][1] * u[2],
    ]
}

fn triangle_geometry(grid: &StructuredGrid, tri: [usize; 3], rule: &QuadratureRule) -> TriangleGeometry {
    let [p0, p1, p2] = tri.map(|i| grid.vertices[i]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    // gradients of the barycentric coordinates
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    let qpoints = rule
        .points
        .iter()
        .map(|l| {
            [
                l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
                l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
            ]
        })
        .collect();
    let qweights = rule.weights.iter().map(|w| w * det.abs()).collect();
    TriangleGeometry {
        grads,
        qpoints,
        qweights,
    }
}
