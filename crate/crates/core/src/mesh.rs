//! Two-level structured triangulations of the unit square.
//!
//! Vertices are numbered row-major by `(y, x)`: vertex `(i, j)` of a grid with
//! `n` cells per side has index `j * (n + 1) + i` and coordinates `(i / n, j / n)`.
//! Every square cell is split along its lower-left to upper-right diagonal.
//!
//! A subdomain is one coarse square cell. Its four coarse dofs are listed in
//! local order `[lower-left, lower-right, upper-left, upper-right]`.

use crate::error::{check_len, Error, Result};
use crate::linsolve::SparseMatrix;
use crate::LOCAL_COARSE_DOFS;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    pub cells_per_side: usize,
    pub h: f64,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl StructuredGrid {
    pub fn unit_square(cells_per_side: usize) -> Self {
        let n = cells_per_side;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let ll = j * (n + 1) + i;
                let lr = ll + 1;
                let ul = ll + n + 1;
                let ur = ul + 1;
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Self {
            cells_per_side: n,
            h: 1.0 / n as f64,
            vertices,
            triangles,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.cells_per_side + 1) + i
    }

    /// Twice the signed area of triangle `t` (positive for counter-clockwise).
    pub fn doubled_signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let [ax, ay] = self.vertices[a];
        let [bx, by] = self.vertices[b];
        let [cx, cy] = self.vertices[c];
        (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshHierarchy {
    pub coarse: StructuredGrid,
    pub fine: StructuredGrid,
    pub ratio: usize,
    /// Fine vertex index of every coarse vertex.
    pub coarse_to_fine_vertex: Vec<usize>,
}

impl MeshHierarchy {
    pub fn subdomains_per_side(&self) -> usize {
        self.coarse.cells_per_side
    }

    pub fn num_coarse(&self) -> usize {
        self.coarse.num_vertices()
    }

    pub fn num_fine(&self) -> usize {
        self.fine.num_vertices()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub id: usize,
    /// `(column, row)` of the coarse cell.
    pub cell: (usize, usize),
    pub coarse_dofs: [usize; LOCAL_COARSE_DOFS],
    /// Global fine vertices in the closed cell, row-major within the cell.
    pub fine_dofs: Vec<usize>,
    /// Global fine triangle indices inside the cell.
    pub fine_triangles: Vec<usize>,
    /// The same triangles expressed in local (`fine_dofs`) vertex indices.
    pub local_triangles: Vec<[usize; 3]>,
    pub num_coarse_dofs: usize,
}

impl Subdomain {
    /// `I_T`: zero-extension of a local coarse vector.
    pub fn extend_local(&self, v_local: &[f64]) -> Result<Vec<f64>> {
        check_len("extend_local", LOCAL_COARSE_DOFS, v_local.len())?;
        let mut out = vec![0.0; self.num_coarse_dofs];
        self.add_local(&mut out, v_local);
        Ok(out)
    }

    /// `I_T^T`: restriction of a global coarse vector to the subdomain corners.
    pub fn restrict_local(&self, v: &[f64]) -> Result<[f64; LOCAL_COARSE_DOFS]> {
        check_len("restrict_local", self.num_coarse_dofs, v.len())?;
        Ok(self.coarse_dofs.map(|i| v[i]))
    }

    /// Accumulates `I_T v_local` into `global`.
    pub fn add_local(&self, global: &mut [f64], v_local: &[f64]) {
        for (&i, &v) in self.coarse_dofs.iter().zip(v_local) {
            global[i] += v;
        }
    }
}

/// Builds the coarse/fine pair and the subdomain list (one per coarse cell).
pub fn build_hierarchy(
    subdomains_per_side: usize,
    ratio: usize,
) -> Result<(MeshHierarchy, Vec<Subdomain>)> {
    if subdomains_per_side < 1 {
        return Err(Error::InvalidMesh(
            "subdomains_per_side must be at least 1".into(),
        ));
    }
    if ratio < 2 {
        return Err(Error::InvalidMesh(format!(
            "coarsening ratio must be at least 2, got {ratio}"
        )));
    }
    let nc = subdomains_per_side;
    let nf = nc * ratio;
    let coarse = StructuredGrid::unit_square(nc);
    let fine = StructuredGrid::unit_square(nf);

    let mut coarse_to_fine_vertex = Vec::with_capacity(coarse.num_vertices());
    for j in 0..=nc {
        for i in 0..=nc {
            coarse_to_fine_vertex.push(fine.vertex_index(i * ratio, j * ratio));
        }
    }

    let mut subdomains = Vec::with_capacity(nc * nc);
    for cj in 0..nc {
        for ci in 0..nc {
            let coarse_dofs = [
                coarse.vertex_index(ci, cj),
                coarse.vertex_index(ci + 1, cj),
                coarse.vertex_index(ci, cj + 1),
                coarse.vertex_index(ci + 1, cj + 1),
            ];
            let mut fine_dofs = Vec::with_capacity((ratio + 1) * (ratio + 1));
            for b in 0..=ratio {
                for a in 0..=ratio {
                    fine_dofs.push(fine.vertex_index(ci * ratio + a, cj * ratio + b));
                }
            }
            let mut fine_triangles = Vec::with_capacity(2 * ratio * ratio);
            let mut local_triangles = Vec::with_capacity(2 * ratio * ratio);
            for b in 0..ratio {
                for a in 0..ratio {
                    let cell = (cj * ratio + b) * nf + ci * ratio + a;
                    let ll = b * (ratio + 1) + a;
                    let lr = ll + 1;
                    let ul = ll + ratio + 1;
                    let ur = ul + 1;
                    fine_triangles.push(2 * cell);
                    fine_triangles.push(2 * cell + 1);
                    local_triangles.push([ll, lr, ur]);
                    local_triangles.push([ll, ur, ul]);
                }
            }
            subdomains.push(Subdomain {
                id: cj * nc + ci,
                cell: (ci, cj),
                coarse_dofs,
                fine_dofs,
                fine_triangles,
                local_triangles,
                num_coarse_dofs: coarse.num_vertices(),
            });
        }
    }

    Ok((
        MeshHierarchy {
            coarse,
            fine,
            ratio,
            coarse_to_fine_vertex,
        },
        subdomains,
    ))
}

/// Interpolation weights of the four local coarse corners at local fine
/// vertex `(a, b)`, `0 <= a, b <= ratio`.
///
/// Weights are formed from integer numerators so that corner vertices get
/// exact 0/1 weights.
pub fn local_interpolation_weights(ratio: usize, a: usize, b: usize) -> [f64; LOCAL_COARSE_DOFS] {
    let r = ratio as f64;
    if a >= b {
        // triangle (ll, lr, ur)
        [
            (ratio - a) as f64 / r,
            (a - b) as f64 / r,
            0.0,
            b as f64 / r,
        ]
    } else {
        // triangle (ll, ur, ul)
        [
            (ratio - b) as f64 / r,
            0.0,
            (b - a) as f64 / r,
            a as f64 / r,
        ]
    }
}

/// Prolongation `P`, injection `pi`, and the per-subdomain local `P_T`.
#[derive(Debug, Clone)]
pub struct TransferOperators {
    pub p: SparseMatrix,
    pub pt: SparseMatrix,
    pub pi_select: Vec<usize>,
    /// `P_T` as `(ratio+1)^2` rows of corner weights, shared by all subdomains.
    pub local_p: Vec<[f64; LOCAL_COARSE_DOFS]>,
}

pub fn build_transfer(h: &MeshHierarchy) -> TransferOperators {
    let r = h.ratio;
    let nc = h.coarse.cells_per_side;
    let nf = h.fine.cells_per_side;

    let mut local_p = Vec::with_capacity((r + 1) * (r + 1));
    for b in 0..=r {
        for a in 0..=r {
            local_p.push(local_interpolation_weights(r, a, b));
        }
    }

    let mut triplets = Vec::new();
    for jy in 0..=nf {
        for ix in 0..=nf {
            let ci = (ix / r).min(nc - 1);
            let cj = (jy / r).min(nc - 1);
            let w = local_interpolation_weights(r, ix - ci * r, jy - cj * r);
            let corners = [
                h.coarse.vertex_index(ci, cj),
                h.coarse.vertex_index(ci + 1, cj),
                h.coarse.vertex_index(ci, cj + 1),
                h.coarse.vertex_index(ci + 1, cj + 1),
            ];
            let row = h.fine.vertex_index(ix, jy);
            for (c, wk) in corners.into_iter().zip(w) {
                if wk != 0.0 {
                    triplets.push((row, c, wk));
                }
            }
        }
    }
    let p = SparseMatrix::from_triplets(h.num_fine(), h.num_coarse(), triplets);
    let pt = p.transpose();
    TransferOperators {
        p,
        pt,
        pi_select: h.coarse_to_fine_vertex.clone(),
        local_p,
    }
}

impl TransferOperators {
    pub fn num_coarse(&self) -> usize {
        self.p.ncols()
    }

    pub fn num_fine(&self) -> usize {
        self.p.nrows()
    }

    /// `P u_c`.
    pub fn prolong(&self, u_c: &[f64]) -> Result<Vec<f64>> {
        check_len("prolong", self.num_coarse(), u_c.len())?;
        Ok(self.p.mul_vec(u_c))
    }

    /// `P^T v`.
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("restrict", self.num_fine(), v.len())?;
        Ok(self.pt.mul_vec(v))
    }

    /// `pi u`: injection of the coarse-coincident fine values.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("project", self.num_fine(), u.len())?;
        Ok(self.pi_select.iter().map(|&i| u[i]).collect())
    }

    /// `P_T v_local`: local fine values of a subdomain.
    pub fn prolong_local(&self, v_local: &[f64; LOCAL_COARSE_DOFS]) -> Vec<f64> {
        self.local_p
            .iter()
            .map(|w| w.iter().zip(v_local).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `P_T^T w_local`.
    pub fn restrict_local(&self, w_local: &[f64]) -> [f64; LOCAL_COARSE_DOFS] {
        let mut out = [0.0; LOCAL_COARSE_DOFS];
        for (w, &x) in self.local_p.iter().zip(w_local) {
            for k in 0..LOCAL_COARSE_DOFS {
                out[k] += w[k] * x;
            }
        }
        out
    }
}
