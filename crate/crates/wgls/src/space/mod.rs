//! The weak finite element space: degrees of freedom, local L2
//! projections, and the discrete weak gradient operator.
//!
//! A weak function pairs an interior polynomial of degree `k` per cell
//! with an independent polynomial of degree `k` per facet; facet values
//! are single-valued across the two adjacent cells. Degrees of freedom
//! are numbered with all interior blocks first (cell by cell), then all
//! facet blocks (facet by facet), so the layout is independent of any
//! traversal order.

mod project;
mod weak_grad;

pub use project::{
    eval_facet_block, interior_error_norm, project_onto_grad_space, project_q0,
    project_q0_with_basis, project_qb, project_qh, project_with,
};
pub use weak_grad::{build_weak_gradient, verify_commutativity, WeakGradientOperator};

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::{
    mass_matrix_cell, mass_matrix_facet, poly_space_dim, CellBasis, FacetBasis,
};
use crate::error::Error;
use crate::linalg::{Cholesky, DenseMatrix};
use crate::mesh::PolyMesh;
use crate::quadrature::{cell_quadrature, facet_quadrature, QuadratureRule};

/// Per-cell working set: bases, quadrature rules and mass factorizations
/// shared by the weak gradient, the assembler and the error norms.
pub struct CellContext {
    pub cell_id: usize,
    /// Interior `P_k` basis.
    pub basis_k: CellBasis,
    /// Weak-gradient `P_r` basis.
    pub basis_r: CellBasis,
    /// Cell rule of exactness `2r + 4`.
    pub cell_rule: QuadratureRule,
    /// Mass matrix of `basis_r` and the Cholesky factors of both cell
    /// mass matrices.
    pub mass_r: DenseMatrix,
    pub chol_k: Cholesky,
    pub chol_r: Cholesky,
    /// Facet bases, rules and edge-mass factors, aligned with
    /// `local_facets`.
    pub facet_bases: Vec<FacetBasis>,
    pub facet_rules: Vec<QuadratureRule>,
    pub facet_chols: Vec<Cholesky>,
    /// Facet ids of this cell in ascending global order (local block order).
    pub local_facets: Vec<usize>,
}

/// Weak finite element space over a mesh: interior degree `k`, facet
/// degree `k`, weak-gradient degree `r >= k`.
pub struct WeakSpace {
    mesh: Arc<PolyMesh>,
    k: u32,
    r: u32,
    dim_k: usize,
    dim_r: usize,
    stab_weight: f64,
    contexts: Vec<CellContext>,
    gradients: Vec<WeakGradientOperator>,
}

impl WeakSpace {
    /// Build the space and the per-cell weak gradient operators.
    pub fn new(mesh: Arc<PolyMesh>, k: u32, r: u32) -> Result<Self, Error> {
        if k < 1 {
            return Err(Error::InvalidConfig(format!(
                "interior degree k must be >= 1, got {k}"
            )));
        }
        if r < k {
            return Err(Error::InvalidConfig(format!(
                "weak-gradient degree r = {r} must be >= k = {k}"
            )));
        }
        let mut contexts = Vec::with_capacity(mesh.n_cells());
        let mut gradients = Vec::with_capacity(mesh.n_cells());
        for cell in mesh.cells() {
            let ctx = CellContext::build(&mesh, cell.id, k, r)?;
            let grad = build_weak_gradient(&mesh, &ctx)?;
            contexts.push(ctx);
            gradients.push(grad);
        }
        Ok(Self {
            mesh,
            k,
            r,
            dim_k: poly_space_dim(k),
            dim_r: poly_space_dim(r),
            stab_weight: 1.0,
            contexts,
            gradients,
        })
    }

    pub fn mesh(&self) -> &PolyMesh {
        &self.mesh
    }

    /// Multiplier on the `h_T^{-1}` facet penalty. The scheme itself has
    /// no tunable constant; this override exists for experimentation and
    /// defaults to 1.
    pub fn stabilization_weight(&self) -> f64 {
        self.stab_weight
    }

    pub fn set_stabilization_weight(&mut self, weight: f64) {
        assert!(weight > 0.0 && weight.is_finite());
        self.stab_weight = weight;
    }

    pub fn mesh_arc(&self) -> Arc<PolyMesh> {
        Arc::clone(&self.mesh)
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn grad_degree(&self) -> u32 {
        self.r
    }

    /// Dimension of the interior polynomial space per cell.
    pub fn cell_block_len(&self) -> usize {
        self.dim_k
    }

    /// Dimension of the facet polynomial space per facet.
    pub fn facet_block_len(&self) -> usize {
        self.k as usize + 1
    }

    /// Dimension of `[P_r]` per cell (one gradient component).
    pub fn grad_block_len(&self) -> usize {
        self.dim_r
    }

    /// Total number of degrees of freedom.
    pub fn n_dofs(&self) -> usize {
        self.mesh.n_cells() * self.dim_k + self.mesh.n_facets() * self.facet_block_len()
    }

    /// First global dof of a cell's interior block.
    pub fn cell_block_start(&self, cell: usize) -> usize {
        cell * self.dim_k
    }

    /// First global dof of a facet's block.
    pub fn facet_block_start(&self, facet: usize) -> usize {
        self.mesh.n_cells() * self.dim_k + facet * self.facet_block_len()
    }

    pub fn context(&self, cell: usize) -> &CellContext {
        &self.contexts[cell]
    }

    pub fn gradient(&self, cell: usize) -> &WeakGradientOperator {
        &self.gradients[cell]
    }

    /// Number of local dofs of a cell: interior block plus all adjacent
    /// facet blocks.
    pub fn n_local_dofs(&self, cell: usize) -> usize {
        self.dim_k + self.contexts[cell].local_facets.len() * self.facet_block_len()
    }

    /// Global dof indices of a cell's local block, interior first, then
    /// facet blocks in ascending global facet id.
    pub fn local_to_global(&self, cell: usize) -> Vec<usize> {
        let ctx = &self.contexts[cell];
        let mut map = Vec::with_capacity(self.n_local_dofs(cell));
        let start = self.cell_block_start(cell);
        map.extend(start..start + self.dim_k);
        for &fid in &ctx.local_facets {
            let fstart = self.facet_block_start(fid);
            map.extend(fstart..fstart + self.facet_block_len());
        }
        map
    }

    /// Gather the local coefficient vector of `w` on a cell.
    pub fn gather_local(&self, w: &WeakFunction, cell: usize) -> Vec<f64> {
        self.local_to_global(cell)
            .iter()
            .map(|&g| w.coeffs[g])
            .collect()
    }
}

impl CellContext {
    pub fn build(mesh: &PolyMesh, cell_id: usize, k: u32, r: u32) -> Result<Self, Error> {
        let cell = mesh.cell(cell_id);
        // 2r for products of gradient components, plus degree-2 headroom
        // for a polynomial reaction coefficient in the residual.
        let cell_rule = cell_quadrature(mesh, cell, 2 * r + 4)?;
        let (basis_k, chol_k, _) = conditioned_basis(CellBasis::new(cell, k), &cell_rule, cell_id)?;
        let (basis_r, chol_r, mass_r) =
            conditioned_basis(CellBasis::new(cell, r), &cell_rule, cell_id)?;
        let mut local_facets = cell.facets.clone();
        local_facets.sort_unstable();
        let facet_q = (2 * k + 2).max(k + r);
        let mut facet_bases = Vec::with_capacity(local_facets.len());
        let mut facet_rules = Vec::with_capacity(local_facets.len());
        let mut facet_chols = Vec::with_capacity(local_facets.len());
        for &fid in &local_facets {
            let facet = mesh.facet(fid);
            let basis = FacetBasis::new(facet, k);
            let rule = facet_quadrature(mesh, facet, facet_q);
            let mass = mass_matrix_facet(mesh, facet, &basis, &rule);
            let chol = mass.cholesky().map_err(|e| Error::SingularLocalSystem {
                cell: cell_id,
                detail: alloc::format!("facet {fid} mass matrix: {e}"),
            })?;
            facet_bases.push(basis);
            facet_rules.push(rule);
            facet_chols.push(chol);
        }
        Ok(Self {
            cell_id,
            basis_k,
            basis_r,
            cell_rule,
            mass_r,
            chol_k,
            chol_r,
            facet_bases,
            facet_rules,
            facet_chols,
            local_facets,
        })
    }

    /// Position of a facet in this cell's local block order.
    pub fn local_facet_index(&self, facet: usize) -> Option<usize> {
        self.local_facets.binary_search(&facet).ok()
    }
}

/// Factor a cell mass matrix, switching to the orthonormalized basis when
/// the reciprocal condition estimate drops below 1e-14.
fn conditioned_basis(
    basis: CellBasis,
    rule: &QuadratureRule,
    cell_id: usize,
) -> Result<(CellBasis, Cholesky, DenseMatrix), Error> {
    let mass = mass_matrix_cell(&basis, rule);
    let fallback = match mass.cholesky() {
        Ok(chol) if chol.rcond_estimate() >= 1e-14 => {
            return Ok((basis, chol, mass));
        }
        _ => basis.orthonormalized(rule),
    };
    let basis = fallback.map_err(|e| Error::SingularLocalSystem {
        cell: cell_id,
        detail: alloc::format!("cell mass matrix: {e}"),
    })?;
    let mass = mass_matrix_cell(&basis, rule);
    let chol = mass.cholesky().map_err(|e| Error::SingularLocalSystem {
        cell: cell_id,
        detail: alloc::format!("orthonormalized cell mass matrix: {e}"),
    })?;
    Ok((basis, chol, mass))
}

/// Coefficient vector of a weak function over a space's dof layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFunction {
    pub coeffs: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(space: &WeakSpace) -> Self {
        Self {
            coeffs: alloc::vec![0.0; space.n_dofs()],
        }
    }

    pub fn from_coeffs(space: &WeakSpace, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.n_dofs());
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient magnitude (discrete sup norm over all dofs).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, &c| m.max(c.abs()))
    }

    /// Evaluate the interior component on a cell.
    pub fn eval_interior(&self, space: &WeakSpace, cell: usize, points: &[crate::geometry::Point]) -> Vec<f64> {
        let basis = &space.context(cell).basis_k;
        let vals = basis.eval(points);
        let start = space.cell_block_start(cell);
        let block = &self.coeffs[start..start + space.cell_block_len()];
        (0..points.len())
            .map(|q| {
                vals.row(q)
                    .iter()
                    .zip(block)
                    .map(|(v, c)| v * c)
                    .sum()
            })
            .collect()
    }
}
