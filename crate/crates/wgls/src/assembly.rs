//! Assembly of the WG-LS system: the least-squares form
//!
//! ```text
//!   a(u,v) = sum_T ( beta . grad_w u + c u_0 , beta . grad_w v + c v_0 )_T
//! ```
//!
//! the stabilizer
//!
//! ```text
//!   s(u,v) = sum_T int_{dT} h_T^{-1} (u_0 - u_b)(v_0 - v_b) ds
//! ```
//!
//! the load vector `(f, beta . grad_w v + c v_0)`, and inflow boundary
//! conditions by symmetric elimination.
//!
//! The PDE residual is formed pointwise at quadrature nodes (no extra
//! projection of `c v_0`), so variable coefficients are integrated
//! directly and the local blocks are exactly symmetric.

use alloc::boxed::Box;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::weighted_gram;
use crate::error::Error;
use crate::geometry::{Point, Vec2};
use crate::linalg::{CsrMatrix, DenseMatrix, TripletBuffer};
use crate::mesh::{classify_boundary, BoundaryClassification};
use crate::space::{project_qb, WeakSpace};

type CellScalar = dyn Fn(usize, Point) -> f64 + Send + Sync;
type CellVector = dyn Fn(usize, Point) -> Vec2 + Send + Sync;
type BoundaryScalar = dyn Fn(Point) -> f64 + Send + Sync;

/// Problem data: convection field `beta`, reaction `c`, source `f` and
/// inflow data `g`. `beta`, `c` and `f` take the cell id so piecewise
/// fields with jumps across facets are well defined; smooth fields simply
/// ignore it.
pub struct CoefficientField {
    beta: Box<CellVector>,
    c: Box<CellScalar>,
    f: Option<Box<CellScalar>>,
    g: Option<Box<BoundaryScalar>>,
    /// Coefficients are assumed smooth within each cell; jumps are allowed
    /// only across facets. Purely informational.
    pub piecewise_smooth: bool,
}

impl CoefficientField {
    pub fn new(
        beta: impl Fn(usize, Point) -> Vec2 + Send + Sync + 'static,
        c: impl Fn(usize, Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            beta: Box::new(beta),
            c: Box::new(c),
            f: None,
            g: None,
            piecewise_smooth: true,
        }
    }

    /// Constant convection and reaction.
    pub fn constant(beta: Vec2, c: f64) -> Self {
        Self::new(move |_, _| beta, move |_, _| c)
    }

    pub fn with_source(
        mut self,
        f: impl Fn(usize, Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.f = Some(Box::new(f));
        self
    }

    pub fn with_inflow_data(
        mut self,
        g: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.g = Some(Box::new(g));
        self
    }

    pub fn beta(&self, cell: usize, p: Point) -> Vec2 {
        (self.beta)(cell, p)
    }

    pub fn c(&self, cell: usize, p: Point) -> f64 {
        (self.c)(cell, p)
    }

    pub fn source(&self, cell: usize, p: Point) -> Result<f64, Error> {
        match &self.f {
            Some(f) => Ok(f(cell, p)),
            None => Err(Error::MissingCoefficient("f")),
        }
    }

    pub fn has_source(&self) -> bool {
        self.f.is_some()
    }

    pub fn inflow_value(&self, p: Point) -> Result<f64, Error> {
        match &self.g {
            Some(g) => Ok(g(p)),
            None => Err(Error::MissingCoefficient("g")),
        }
    }

    pub fn has_inflow_data(&self) -> bool {
        self.g.is_some()
    }

    /// Classify the mesh boundary for this convection field.
    pub fn classify(&self, mesh: &crate::mesh::PolyMesh) -> BoundaryClassification {
        classify_boundary(mesh, |cell, p| self.beta(cell, p))
    }
}

/// Assembled global system. The least-squares part and the stabilizer are
/// kept separately (their sum is the system matrix); constraints are
/// applied by [`apply_inflow_bc`], which builds the reduced free-dof
/// system by symmetric elimination.
pub struct LinearSystem {
    n_dofs: usize,
    a_part: CsrMatrix,
    s_part: CsrMatrix,
    rhs: Vec<f64>,
    free_dofs: Vec<usize>,
    constrained: Vec<(usize, f64)>,
    reduced: Option<(CsrMatrix, Vec<f64>)>,
}

impl LinearSystem {
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Least-squares part `a(.,.)` over all dofs.
    pub fn a_part(&self) -> &CsrMatrix {
        &self.a_part
    }

    /// Stabilizer part `s(.,.)` over all dofs.
    pub fn s_part(&self) -> &CsrMatrix {
        &self.s_part
    }

    /// Full system matrix `a + s` over all dofs.
    pub fn full_matrix(&self) -> CsrMatrix {
        self.a_part.add(&self.s_part)
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Free dof indices, ascending. All dofs before constraints are
    /// applied.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Constrained dofs and their values, ascending by dof.
    pub fn constrained(&self) -> &[(usize, f64)] {
        &self.constrained
    }

    /// Reduced SPD system over the free dofs (built by
    /// [`apply_inflow_bc`]; equals the full system before constraints).
    pub fn reduced(&self) -> (CsrMatrix, Vec<f64>) {
        match &self.reduced {
            Some((m, b)) => (m.clone(), b.clone()),
            None => (self.full_matrix(), self.rhs.clone()),
        }
    }

    /// Expand a free-dof vector to all dofs, filling constrained values.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = alloc::vec![0.0; self.n_dofs];
        for (&dof, &v) in self.free_dofs.iter().zip(reduced) {
            full[dof] = v;
        }
        for &(dof, v) in &self.constrained {
            full[dof] = v;
        }
        full
    }
}

/// Per-cell block computed independently of every other cell.
struct LocalBlock {
    a: DenseMatrix,
    s: DenseMatrix,
    rhs: Vec<f64>,
}

fn local_block(space: &WeakSpace, coeffs: &CoefficientField, cell: usize) -> Result<LocalBlock, Error> {
    let mesh = space.mesh();
    let ctx = space.context(cell);
    let op = space.gradient(cell);
    let n_loc = space.n_local_dofs(cell);
    let dim_k = space.cell_block_len();
    let fdim = space.facet_block_len();

    // Residual values beta . grad_w phi_j + c phi_j0 at cell quadrature
    // points: rows are points, columns local dofs.
    let rule = &ctx.cell_rule;
    let n_q = rule.len();
    let vr = ctx.basis_r.eval(&rule.points);
    let vk = ctx.basis_k.eval(&rule.points);
    let gvx = vr.matmul(&op.gx);
    let gvy = vr.matmul(&op.gy);
    let mut residual = DenseMatrix::zeros(n_q, n_loc);
    let mut rhs = alloc::vec![0.0; n_loc];
    let need_source = coeffs.has_source();
    for q in 0..n_q {
        let p = rule.points[q];
        let b = coeffs.beta(cell, p);
        let cc = coeffs.c(cell, p);
        let r_row = residual.row_mut(q);
        for j in 0..n_loc {
            r_row[j] = b.x * gvx[(q, j)] + b.y * gvy[(q, j)];
        }
        for (j, &v) in vk.row(q).iter().enumerate() {
            r_row[j] += cc * v;
        }
        if need_source {
            let fw = rule.weights[q] * coeffs.source(cell, p)?;
            for (dst, &rv) in rhs.iter_mut().zip(residual.row(q)) {
                *dst += fw * rv;
            }
        }
    }
    let a = weighted_gram(&residual, &rule.weights);

    // Stabilizer: h_T^{-1} (v_0 - v_b)(w_0 - w_b) over every facet of the
    // cell, including inflow facets.
    let h_inv = space.stabilization_weight() / mesh.cell(cell).diameter;
    let mut s = DenseMatrix::zeros(n_loc, n_loc);
    for (slot, &fid) in ctx.local_facets.iter().enumerate() {
        let facet = mesh.facet(fid);
        let frule = &ctx.facet_rules[slot];
        let trace0 = ctx.basis_k.eval(&frule.points);
        let traceb = ctx.facet_bases[slot].eval(mesh, facet, &frule.points);
        let col0 = dim_k + slot * fdim;
        let mut jump = DenseMatrix::zeros(frule.len(), n_loc);
        for q in 0..frule.len() {
            let row = jump.row_mut(q);
            for (j, &v) in trace0.row(q).iter().enumerate() {
                row[j] = v;
            }
            for (j, &v) in traceb.row(q).iter().enumerate() {
                row[col0 + j] = -v;
            }
        }
        let block = weighted_gram(&jump, &frule.weights);
        for i in 0..n_loc {
            for j in 0..n_loc {
                s[(i, j)] += h_inv * block[(i, j)];
            }
        }
    }

    Ok(LocalBlock { a, s, rhs })
}

/// Assemble the global WG-LS system for the given coefficients. Requires
/// the source term `f`; inflow data is applied separately by
/// [`apply_inflow_bc`].
pub fn assemble(space: &WeakSpace, coeffs: &CoefficientField) -> Result<LinearSystem, Error> {
    if !coeffs.has_source() {
        return Err(Error::MissingCoefficient("f"));
    }
    let n_dofs = space.n_dofs();
    let n_cells = space.mesh().n_cells();

    let blocks = compute_blocks(space, coeffs, n_cells)?;

    let mut a_trip = TripletBuffer::new(n_dofs);
    let mut s_trip = TripletBuffer::new(n_dofs);
    let mut rhs = alloc::vec![0.0; n_dofs];
    for (cell, block) in blocks.into_iter().enumerate() {
        let map = space.local_to_global(cell);
        for (i, &gi) in map.iter().enumerate() {
            rhs[gi] += block.rhs[i];
            for (j, &gj) in map.iter().enumerate() {
                a_trip.push(gi, gj, block.a[(i, j)]);
                s_trip.push(gi, gj, block.s[(i, j)]);
            }
        }
    }

    let free_dofs = (0..n_dofs).collect();
    Ok(LinearSystem {
        n_dofs,
        a_part: a_trip.to_csr(),
        s_part: s_trip.to_csr(),
        rhs,
        free_dofs,
        constrained: Vec::new(),
        reduced: None,
    })
}

/// Cell blocks are independent; compute them in order (or in parallel with
/// the `parallel` feature) and scatter sequentially so the assembled
/// matrix is identical either way.
#[cfg(not(feature = "parallel"))]
fn compute_blocks(
    space: &WeakSpace,
    coeffs: &CoefficientField,
    n_cells: usize,
) -> Result<Vec<LocalBlock>, Error> {
    (0..n_cells)
        .map(|cell| local_block(space, coeffs, cell))
        .collect()
}

#[cfg(feature = "parallel")]
fn compute_blocks(
    space: &WeakSpace,
    coeffs: &CoefficientField,
    n_cells: usize,
) -> Result<Vec<LocalBlock>, Error> {
    use rayon::prelude::*;
    (0..n_cells)
        .into_par_iter()
        .map(|cell| local_block(space, coeffs, cell))
        .collect()
}

/// Constrain the facet dofs on inflow facets to the projection of `g` and
/// eliminate them symmetrically: the right-hand side over free dofs
/// becomes `b_f - A_fc x_c`, and constrained rows/columns are dropped from
/// the reduced matrix.
pub fn apply_inflow_bc(
    system: &mut LinearSystem,
    space: &WeakSpace,
    coeffs: &CoefficientField,
) -> Result<BoundaryClassification, Error> {
    let mesh = space.mesh();
    let classification = coeffs.classify(mesh);
    if !classification.inflow_facets().is_empty() && !coeffs.has_inflow_data() {
        return Err(Error::MissingCoefficient("g"));
    }

    let mut constrained: Vec<(usize, f64)> = Vec::new();
    for &fid in classification.inflow_facets() {
        let values = project_qb(space, fid, |p| {
            coeffs
                .inflow_value(p)
                .expect("inflow data checked before projection")
        });
        let start = space.facet_block_start(fid);
        for (offset, &v) in values.iter().enumerate() {
            constrained.push((start + offset, v));
        }
    }
    constrained.sort_unstable_by_key(|&(dof, _)| dof);

    let mut constrained_value = alloc::vec![None; system.n_dofs];
    for &(dof, v) in &constrained {
        constrained_value[dof] = Some(v);
    }
    let free_dofs: Vec<usize> = (0..system.n_dofs)
        .filter(|&d| constrained_value[d].is_none())
        .collect();

    // Reduced matrix and right-hand side in one pass over the full rows.
    let mut new_index = alloc::vec![u32::MAX; system.n_dofs];
    for (new, &old) in free_dofs.iter().enumerate() {
        new_index[old] = new as u32;
    }
    let mut trip = TripletBuffer::new(free_dofs.len());
    let mut reduced_rhs = alloc::vec![0.0; free_dofs.len()];
    for (new_row, &old_row) in free_dofs.iter().enumerate() {
        let mut b = system.rhs[old_row];
        for (col, v) in merged_row(&system.a_part, &system.s_part, old_row) {
            match constrained_value[col] {
                None => trip.push(new_row, new_index[col] as usize, v),
                Some(x) => b -= v * x,
            }
        }
        reduced_rhs[new_row] = b;
    }

    system.free_dofs = free_dofs;
    system.constrained = constrained;
    system.reduced = Some((trip.to_csr(), reduced_rhs));
    Ok(classification)
}

/// Entries of row `i` of `a + s` (columns may repeat; the triplet sink
/// merges them).
fn merged_row<'a>(
    a: &'a CsrMatrix,
    s: &'a CsrMatrix,
    i: usize,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    a.row(i).chain(s.row(i))
}
