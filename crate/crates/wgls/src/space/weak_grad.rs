//! The discrete weak gradient: the per-cell operator lifting a local weak
//! function (interior block plus adjacent facet blocks) into `[P_r(T)]^2`.
//!
//! The operator columns are defined by testing against every component
//! basis field `psi`:
//!
//! ```text
//!   (grad_w v, psi)_T = -(v_0, div psi)_T + <v_b, psi . n>_{dT}
//! ```
//!
//! which becomes one mass-matrix solve per gradient component.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::geometry::{Point, Vec2};
use crate::linalg::DenseMatrix;
use crate::mesh::PolyMesh;
use crate::space::{CellContext, WeakSpace};

/// Per-cell weak gradient map: `dim P_r x n_loc` coefficient matrices for
/// the two gradient components.
#[derive(Debug, Clone)]
pub struct WeakGradientOperator {
    pub gx: DenseMatrix,
    pub gy: DenseMatrix,
}

impl WeakGradientOperator {
    /// Gradient coefficients (in the cell's `P_r` basis) of the weak
    /// function with local coefficients `local`.
    pub fn apply(&self, local: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.gx.matvec(local), self.gy.matvec(local))
    }

    pub fn n_local_dofs(&self) -> usize {
        self.gx.cols()
    }
}

/// Right-hand sides of the defining equations, one column per local dof.
fn rhs_matrices(mesh: &PolyMesh, ctx: &CellContext) -> (DenseMatrix, DenseMatrix) {
    let dim_r = ctx.basis_r.dim();
    let dim_k = ctx.basis_k.dim();
    let fdim = ctx.facet_bases.first().map_or(0, |b| b.dim());
    let n_loc = dim_k + ctx.local_facets.len() * fdim;
    let mut bx = DenseMatrix::zeros(dim_r, n_loc);
    let mut by = DenseMatrix::zeros(dim_r, n_loc);

    // Interior term: -(v_0, div psi)_T.
    let (grx, gry) = ctx.basis_r.eval_grad(&ctx.cell_rule.points);
    let vk = ctx.basis_k.eval(&ctx.cell_rule.points);
    for (q, &w) in ctx.cell_rule.weights.iter().enumerate() {
        let vrow = vk.row(q);
        for i in 0..dim_r {
            let dx = w * grx[(q, i)];
            let dy = w * gry[(q, i)];
            for (j, &v) in vrow.iter().enumerate() {
                bx[(i, j)] -= dx * v;
                by[(i, j)] -= dy * v;
            }
        }
    }

    // Boundary term: +<v_b, psi . n>_{dT}, facet by facet.
    let cell_id = ctx.cell_id;
    for (slot, &fid) in ctx.local_facets.iter().enumerate() {
        let facet = mesh.facet(fid);
        let normal = facet
            .outward_normal(cell_id)
            .expect("facet is adjacent to its cell");
        let rule = &ctx.facet_rules[slot];
        let vr = ctx.basis_r.eval(&rule.points);
        let vb = ctx.facet_bases[slot].eval(mesh, facet, &rule.points);
        let col0 = dim_k + slot * fdim;
        for (q, &w) in rule.weights.iter().enumerate() {
            let r_row = vr.row(q);
            let b_row = vb.row(q);
            for i in 0..dim_r {
                let wx = w * normal.x * r_row[i];
                let wy = w * normal.y * r_row[i];
                for (j, &tb) in b_row.iter().enumerate() {
                    bx[(i, col0 + j)] += wx * tb;
                    by[(i, col0 + j)] += wy * tb;
                }
            }
        }
    }
    (bx, by)
}

/// Build the weak gradient operator of one cell.
pub fn build_weak_gradient(
    mesh: &PolyMesh,
    ctx: &CellContext,
) -> Result<WeakGradientOperator, Error> {
    let (bx, by) = rhs_matrices(mesh, ctx);
    let gx = ctx.chol_r.solve_matrix(&bx);
    let gy = ctx.chol_r.solve_matrix(&by);
    Ok(WeakGradientOperator { gx, gy })
}

/// Result of a commutativity sweep over all cells.
#[derive(Debug, Clone, Copy)]
pub struct CommutativityCheck {
    /// `max_T || grad_w(Q_h w) - Q_0(grad w) ||_{L2(T)}`.
    pub max_residual: f64,
    /// `|| Q_0(grad w) ||_{L2(Omega)}`, for relative comparisons.
    pub gradient_norm: f64,
}

/// Check the projection/weak-gradient commutation identity
/// `grad_w(Q_h w) = Q_0(grad w)` cell by cell, with the gradient
/// projection taken in `[P_r]^2`.
///
/// The projections of `w` and `grad w` are mathematical L2 projections;
/// they are evaluated here with quadrature several orders sharper than the
/// space's default so the returned residual reflects the identity rather
/// than the verifier's own integration error. The weak gradient operator
/// under test is the one stored in the space.
pub fn verify_commutativity(
    space: &WeakSpace,
    w: impl Fn(Point) -> f64,
    grad_w: impl Fn(Point) -> Vec2,
) -> CommutativityCheck {
    use crate::quadrature::{cell_quadrature, facet_quadrature};
    use crate::space::project_with;

    let mesh = space.mesh();
    let k = space.degree();
    let r = space.grad_degree();
    let mut max_residual = 0.0f64;
    let mut norm_sq = 0.0;
    for cell in 0..mesh.n_cells() {
        let ctx = space.context(cell);
        let sharp = cell_quadrature(mesh, mesh.cell(cell), 2 * r + 8)
            .expect("cell was already triangulated during space construction");
        // Local coefficients of Q_h w. The mass factors from the space are
        // polynomial-exact under both rules, so they are reused.
        let vk = ctx.basis_k.eval(&sharp.points);
        let mut local = project_with(&vk, &sharp, &ctx.chol_k, &w);
        for (slot, &fid) in ctx.local_facets.iter().enumerate() {
            let facet = mesh.facet(fid);
            let frule = facet_quadrature(mesh, facet, 2 * k + 8);
            let vb = ctx.facet_bases[slot].eval(mesh, facet, &frule.points);
            local.extend(project_with(&vb, &frule, &ctx.facet_chols[slot], &w));
        }
        let (ax, ay) = space.gradient(cell).apply(&local);

        let vr = ctx.basis_r.eval(&sharp.points);
        let px = project_with(&vr, &sharp, &ctx.chol_r, |p| grad_w(p).x);
        let py = project_with(&vr, &sharp, &ctx.chol_r, |p| grad_w(p).y);

        let dx: Vec<f64> = ax.iter().zip(&px).map(|(a, p)| a - p).collect();
        let dy: Vec<f64> = ay.iter().zip(&py).map(|(a, p)| a - p).collect();
        let m = &ctx.mass_r;
        let resid_sq = dot(&dx, &m.matvec(&dx)) + dot(&dy, &m.matvec(&dy));
        max_residual = max_residual.max(resid_sq.max(0.0).sqrt());
        norm_sq += dot(&px, &m.matvec(&px)) + dot(&py, &m.matvec(&py));
    }
    CommutativityCheck {
        max_residual,
        gradient_norm: norm_sq.max(0.0).sqrt(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::mesh::{generate_nonconvex_polygonal, generate_triangular, PolyMesh};
    use crate::space::WeakSpace;
    use alloc::sync::Arc;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn reference_triangle() -> PolyMesh {
        let vertices = alloc::vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        PolyMesh::from_cells(vertices, alloc::vec![alloc::vec![0, 1, 2]]).unwrap()
    }

    /// Evaluate a `P_r` coefficient vector at a point.
    fn eval_r(ctx: &CellContext, coeffs: &[f64], p: Point) -> f64 {
        let vals = ctx.basis_r.eval(&[p]);
        vals.row(0).iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }

    #[test]
    fn zero_function_has_zero_gradient() {
        let mesh = generate_triangular(1, Rect::BIUNIT);
        let space = WeakSpace::new(Arc::new(mesh), 1, 2).unwrap();
        for cell in 0..space.mesh().n_cells() {
            let n = space.n_local_dofs(cell);
            let (gx, gy) = space.gradient(cell).apply(&alloc::vec![0.0; n]);
            assert!(gx.iter().chain(&gy).all(|&c| c == 0.0));
        }
    }

    #[test]
    fn boundary_only_weak_function_on_reference_triangle() {
        // v = {0, 1 on the hypotenuse}, r = 0. The defining equation with
        // psi = (1,0) reads  gx * |T| = <1, n_x>_hyp = (1/sqrt2) * sqrt2 = 1,
        // so gx = 1 / (1/2) = 2, and gy = 2 the same way.
        let mesh = reference_triangle();
        let ctx = CellContext::build(&mesh, 0, 1, 0).unwrap();
        let op = build_weak_gradient(&mesh, &ctx).unwrap();

        // Direct oracle: evaluate the right side of the defining equation.
        let hyp_slot = ctx
            .local_facets
            .iter()
            .position(|&f| {
                let facet = mesh.facet(f);
                facet.midpoint.x == 0.5 && facet.midpoint.y == 0.5
            })
            .unwrap();
        let facet = mesh.facet(ctx.local_facets[hyp_slot]);
        let normal = facet.outward_normal(0).unwrap();
        let rhs_x = facet.length * normal.x; // <1, 1 * n_x>
        let area = mesh.cell(0).area;
        let expect = rhs_x / area;
        assert!((expect - 2.0).abs() < 1e-15);

        let mut local = alloc::vec![0.0; op.n_local_dofs()];
        local[ctx.basis_k.dim() + hyp_slot * 2] = 1.0; // constant facet mode
        let (gx, gy) = op.apply(&local);
        let p = mesh.cell(0).centroid;
        assert!((eval_r(&ctx, &gx, p) - 2.0).abs() < 1e-13);
        assert!((eval_r(&ctx, &gy, p) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn defining_equations_are_satisfied() {
        // || M_r G - B ||_max <= 1e-13 * scale on every cell of both
        // families.
        let tri = generate_triangular(1, Rect::BIUNIT);
        let poly = generate_nonconvex_polygonal(1, Rect::BIUNIT);
        for mesh in [tri, poly] {
            let space = WeakSpace::new(Arc::new(mesh), 2, 3).unwrap();
            for cell in 0..space.mesh().n_cells() {
                let ctx = space.context(cell);
                let (bx, by) = rhs_matrices(space.mesh(), ctx);
                let op = space.gradient(cell);
                let rx = ctx.mass_r.matmul(&op.gx);
                let ry = ctx.mass_r.matmul(&op.gy);
                let scale = bx.max_abs().max(by.max_abs()).max(1e-30);
                for i in 0..bx.rows() {
                    for j in 0..bx.cols() {
                        assert!((rx[(i, j)] - bx[(i, j)]).abs() <= 1e-13 * scale);
                        assert!((ry[(i, j)] - by[(i, j)]).abs() <= 1e-13 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_of_projected_coordinate_function() {
        // w = x: grad_w(Q_h w) = (1, 0) on every cell, any r >= 0.
        let mesh = generate_nonconvex_polygonal(1, Rect::BIUNIT);
        let space = WeakSpace::new(Arc::new(mesh), 1, 3).unwrap();
        for cell in 0..space.mesh().n_cells() {
            let ctx = space.context(cell);
            let mut local = crate::space::project_q0(&space, cell, |p| p.x);
            for &fid in &ctx.local_facets {
                local.extend(crate::space::project_qb(&space, fid, |p| p.x));
            }
            let (gx, gy) = space.gradient(cell).apply(&local);
            for &p in ctx.cell_rule.points.iter().take(3) {
                assert!((eval_r(ctx, &gx, p) - 1.0).abs() < 1e-12);
                assert!(eval_r(ctx, &gy, p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn operator_is_linear() {
        let mesh = generate_triangular(1, Rect::BIUNIT);
        let space = WeakSpace::new(Arc::new(mesh), 2, 3).unwrap();
        let op = space.gradient(3);
        let n = op.n_local_dofs();
        let mut rng = StdRng::seed_from_u64(7);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.5 * a - 0.75 * b).collect();
        let (cx, cy) = op.apply(&combo);
        let (ux, uy) = op.apply(&u);
        let (vx, vy) = op.apply(&v);
        let scale = cx
            .iter()
            .chain(&cy)
            .fold(1.0f64, |m, &c| m.max(c.abs()));
        for i in 0..cx.len() {
            assert!((cx[i] - (2.5 * ux[i] - 0.75 * vx[i])).abs() < 1e-13 * scale);
            assert!((cy[i] - (2.5 * uy[i] - 0.75 * vy[i])).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn trace_agreeing_polynomial_recovers_classical_gradient() {
        // v_0 in P_k with v_b its trace gives grad_w v = grad v_0 whenever
        // r >= k - 1.
        let mesh = generate_nonconvex_polygonal(1, Rect::BIUNIT);
        let k = 2;
        let r = 1; // k - 1
        let p = |pt: Point| 0.3 + 1.2 * pt.x - 0.8 * pt.y + 0.5 * pt.x * pt.x
            - 0.9 * pt.x * pt.y
            + 0.4 * pt.y * pt.y;
        let grad_p = |pt: Point| {
            Vec2::new(1.2 + 1.0 * pt.x - 0.9 * pt.y, -0.8 - 0.9 * pt.x + 0.8 * pt.y)
        };
        for cell in 0..mesh.n_cells() {
            let ctx = CellContext::build(&mesh, cell, k, r).unwrap();
            let op = build_weak_gradient(&mesh, &ctx).unwrap();
            // Interior: project p (exact since p in P_k).
            let vk = ctx.basis_k.eval(&ctx.cell_rule.points);
            let mut local =
                crate::space::project_with(&vk, &ctx.cell_rule, &ctx.chol_k, p);
            // Facets: exact traces.
            for (slot, &fid) in ctx.local_facets.iter().enumerate() {
                let facet = mesh.facet(fid);
                let vb = ctx.facet_bases[slot].eval(&mesh, facet, &ctx.facet_rules[slot].points);
                local.extend(crate::space::project_with(
                    &vb,
                    &ctx.facet_rules[slot],
                    &ctx.facet_chols[slot],
                    p,
                ));
            }
            let (gx, gy) = op.apply(&local);
            for &pt in ctx.cell_rule.points.iter().take(4) {
                let g = grad_p(pt);
                assert!((eval_r(&ctx, &gx, pt) - g.x).abs() < 1e-11);
                assert!((eval_r(&ctx, &gy, pt) - g.y).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn commutativity_for_linear_field() {
        let mesh = generate_triangular(2, Rect::BIUNIT);
        let space = WeakSpace::new(Arc::new(mesh), 1, 2).unwrap();
        let check = verify_commutativity(&space, |p| p.x + 2.0 * p.y, |_| Vec2::new(1.0, 2.0));
        assert!(check.max_residual <= 1e-12, "{:e}", check.max_residual);
    }

    #[test]
    fn commutativity_for_random_polynomials() {
        let mut rng = StdRng::seed_from_u64(42);
        for (k, r) in [(1u32, 1u32), (2, 3), (3, 4)] {
            let mesh = generate_nonconvex_polygonal(1, Rect::BIUNIT);
            let space = WeakSpace::new(Arc::new(mesh), k, r).unwrap();
            // Random polynomial of degree <= k and its exact gradient.
            let exps = crate::basis::monomial_exponents(k);
            let coeffs: Vec<f64> = exps.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let poly = {
                let exps = exps.clone();
                let coeffs = coeffs.clone();
                move |p: Point| {
                    exps.iter()
                        .zip(&coeffs)
                        .map(|(&(a, b), &c)| c * p.x.powi(a as i32) * p.y.powi(b as i32))
                        .sum::<f64>()
                }
            };
            let grad = move |p: Point| {
                let mut g = Vec2::new(0.0, 0.0);
                for (&(a, b), &c) in exps.iter().zip(&coeffs) {
                    if a > 0 {
                        g.x += c * a as f64 * p.x.powi(a as i32 - 1) * p.y.powi(b as i32);
                    }
                    if b > 0 {
                        g.y += c * b as f64 * p.x.powi(a as i32) * p.y.powi(b as i32 - 1);
                    }
                }
                g
            };
            let check = verify_commutativity(&space, poly, grad);
            let scale = check.gradient_norm.max(1e-30);
            assert!(
                check.max_residual <= 1e-11 * scale.max(1.0),
                "k={k} r={r}: residual {:e} (norm {:e})",
                check.max_residual,
                check.gradient_norm
            );
        }
    }

    #[test]
    fn commutativity_for_smooth_field() {
        // The identity extends to non-polynomial fields when the gradient
        // degree matches the projection degree (r = k); only quadrature
        // error remains. For r > k the orthogonality argument needs
        // `psi . n` of degree <= k on facets, so only polynomials of
        // degree <= k commute exactly there.
        let mesh = generate_triangular(3, Rect::BIUNIT);
        let space = WeakSpace::new(Arc::new(mesh), 2, 2).unwrap();
        let check = verify_commutativity(
            &space,
            |p| p.x.sin() * p.y.sin(),
            |p| Vec2::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos()),
        );
        assert!(
            check.max_residual <= 1e-10 * check.gradient_norm.max(1.0),
            "residual {:e} vs norm {:e}",
            check.max_residual,
            check.gradient_norm
        );
    }
}
