//! Local L2 projections onto cell polynomials (`Q_0`), facet polynomials
//! (`Q_b`), and their weak-function pairing (`Q_h`).

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::{CellBasis, FacetBasis};
use crate::geometry::Point;
use crate::linalg::Cholesky;
use crate::quadrature::QuadratureRule;
use crate::space::{WeakFunction, WeakSpace};

/// Generic projection helper: coefficients of the best L2 approximation of
/// `f` in the span of `values`' columns, with the mass factor `chol`.
pub fn project_with(
    values: &crate::linalg::DenseMatrix,
    rule: &QuadratureRule,
    chol: &Cholesky,
    mut f: impl FnMut(Point) -> f64,
) -> Vec<f64> {
    let dim = values.cols();
    let mut b = alloc::vec![0.0; dim];
    for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let fw = w * f(p);
        if fw == 0.0 {
            continue;
        }
        for (bi, v) in b.iter_mut().zip(values.row(q)) {
            *bi += fw * v;
        }
    }
    chol.solve_in_place(&mut b);
    b
}

/// `Q_0`: best L2(T) approximation of `f` in the cell's interior space
/// `P_k(T)`.
pub fn project_q0(space: &WeakSpace, cell: usize, f: impl FnMut(Point) -> f64) -> Vec<f64> {
    let ctx = space.context(cell);
    let values = ctx.basis_k.eval(&ctx.cell_rule.points);
    project_with(&values, &ctx.cell_rule, &ctx.chol_k, f)
}

/// Projection of `f` onto the weak-gradient space `P_r(T)` of a cell.
pub fn project_onto_grad_space(
    space: &WeakSpace,
    cell: usize,
    f: impl FnMut(Point) -> f64,
) -> Vec<f64> {
    let ctx = space.context(cell);
    let values = ctx.basis_r.eval(&ctx.cell_rule.points);
    project_with(&values, &ctx.cell_rule, &ctx.chol_r, f)
}

/// Projection onto `P_r(T)` for a standalone cell context (used when
/// experimenting with gradient degrees outside a built space).
pub fn project_q0_with_basis(
    basis: &CellBasis,
    rule: &QuadratureRule,
    chol: &Cholesky,
    f: impl FnMut(Point) -> f64,
) -> Vec<f64> {
    let values = basis.eval(&rule.points);
    project_with(&values, rule, chol, f)
}

/// `Q_b`: best L2(e) approximation of `g` on a facet, in the arc-length
/// monomial basis shared by both adjacent cells.
pub fn project_qb(space: &WeakSpace, facet: usize, g: impl FnMut(Point) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let cell = mesh.facet(facet).cells()[0];
    let ctx = space.context(cell);
    let slot = ctx
        .local_facet_index(facet)
        .expect("facet belongs to its adjacent cell");
    let values = ctx.facet_bases[slot].eval(mesh, mesh.facet(facet), &ctx.facet_rules[slot].points);
    project_with(&values, &ctx.facet_rules[slot], &ctx.facet_chols[slot], g)
}

/// `Q_h`: interior blocks from `Q_0` per cell, facet blocks from `Q_b`
/// per facet.
pub fn project_qh(space: &WeakSpace, mut u: impl FnMut(Point) -> f64) -> WeakFunction {
    let mut w = WeakFunction::zeros(space);
    for cell in 0..space.mesh().n_cells() {
        let block = project_q0(space, cell, &mut u);
        let start = space.cell_block_start(cell);
        w.coeffs[start..start + block.len()].copy_from_slice(&block);
    }
    for facet in 0..space.mesh().n_facets() {
        let block = project_qb(space, facet, &mut u);
        let start = space.facet_block_start(facet);
        w.coeffs[start..start + block.len()].copy_from_slice(&block);
    }
    w
}

/// L2(T) norm of `u - u0_h` over one cell, where `u0_h` is the interior
/// component of `w`; used to measure projection quality.
pub fn interior_error_norm(
    space: &WeakSpace,
    w: &WeakFunction,
    cell: usize,
    mut u: impl FnMut(Point) -> f64,
) -> f64 {
    let ctx = space.context(cell);
    let vals = w.eval_interior(space, cell, &ctx.cell_rule.points);
    let mut acc = 0.0;
    for ((&p, &wq), v) in ctx
        .cell_rule
        .points
        .iter()
        .zip(&ctx.cell_rule.weights)
        .zip(vals)
    {
        let d = u(p) - v;
        acc += wq * d * d;
    }
    acc.sqrt()
}

/// Trace of a facet block of `w` at physical points on the facet.
pub fn eval_facet_block(
    space: &WeakSpace,
    w: &WeakFunction,
    facet: usize,
    points: &[Point],
) -> Vec<f64> {
    let mesh = space.mesh();
    let facet_ref = mesh.facet(facet);
    let basis = FacetBasis::new(facet_ref, space.degree());
    let vals = basis.eval(mesh, facet_ref, points);
    let start = space.facet_block_start(facet);
    let block = &w.coeffs[start..start + space.facet_block_len()];
    (0..points.len())
        .map(|q| vals.row(q).iter().zip(block).map(|(v, c)| v * c).sum())
        .collect()
}
