//! Discretization error measures: the interior L2 norm, the weak-gradient
//! seminorm of the projection error, and the energy norm `|||.|||` induced
//! by the least-squares form.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::assembly::{assemble, CoefficientField};
use crate::error::Error;
use crate::geometry::Point;
use crate::space::{project_qh, WeakFunction, WeakSpace};

/// The three error norms reported by the convergence tables.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorReport {
    /// `|| Q_0 u - u_0 ||_{L2}`: interior component of the projection error.
    pub l2_interior: f64,
    /// `|| grad_w (Q_h u - u_h) ||_{L2}`.
    pub weak_grad: f64,
    /// `||| Q_h u - u_h |||: sqrt(a(e, e))`.
    pub energy: f64,
}

/// Compute the three norms of `Q_h u - u_h` by elementwise quadrature,
/// reusing the per-cell weak gradient operators stored in the space.
pub fn error_norms(
    space: &WeakSpace,
    coeffs: &CoefficientField,
    exact_u: impl Fn(Point) -> f64,
    u_h: &WeakFunction,
) -> ErrorReport {
    let mesh = space.mesh();
    let q_h_u = project_qh(space, &exact_u);
    let mut l2_sq = 0.0;
    let mut grad_sq = 0.0;
    let mut energy_sq = 0.0;
    for cell in 0..mesh.n_cells() {
        let ctx = space.context(cell);
        let rule = &ctx.cell_rule;

        // Interior L2 part.
        let dq: Vec<f64> = {
            let start = space.cell_block_start(cell);
            let len = space.cell_block_len();
            q_h_u.coeffs[start..start + len]
                .iter()
                .zip(&u_h.coeffs[start..start + len])
                .map(|(a, b)| a - b)
                .collect()
        };
        let vk = ctx.basis_k.eval(&rule.points);
        let d0: Vec<f64> = (0..rule.len())
            .map(|q| vk.row(q).iter().zip(&dq).map(|(v, c)| v * c).sum())
            .collect();
        for (&w, &d) in rule.weights.iter().zip(&d0) {
            l2_sq += w * d * d;
        }

        // Weak gradient of the difference.
        let local_q = space.gather_local(&q_h_u, cell);
        let local_u = space.gather_local(u_h, cell);
        let local_d: Vec<f64> = local_q
            .iter()
            .zip(&local_u)
            .map(|(a, b)| a - b)
            .collect();
        let (gx, gy) = space.gradient(cell).apply(&local_d);
        let m = &ctx.mass_r;
        grad_sq += dot(&gx, &m.matvec(&gx)) + dot(&gy, &m.matvec(&gy));

        // Energy: L2 norm of the pointwise PDE residual of the difference.
        let vr = ctx.basis_r.eval(&rule.points);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let b = coeffs.beta(cell, p);
            let c = coeffs.c(cell, p);
            let gxv: f64 = vr.row(q).iter().zip(&gx).map(|(v, c)| v * c).sum();
            let gyv: f64 = vr.row(q).iter().zip(&gy).map(|(v, c)| v * c).sum();
            let resid = b.x * gxv + b.y * gyv + c * d0[q];
            energy_sq += w * resid * resid;
        }
    }
    ErrorReport {
        l2_interior: l2_sq.max(0.0).sqrt(),
        weak_grad: grad_sq.max(0.0).sqrt(),
        energy: energy_sq.max(0.0).sqrt(),
    }
}

/// Residual of the error equation
/// `a(e_h, v) + s(e_h, v) + s(Q_h u, v) = 0` for all `v` in the test
/// space, with `e_h = u_h - Q_h u`.
#[derive(Debug, Clone, Copy)]
pub struct ErrorEquationCheck {
    /// Largest absolute component over the test-space basis.
    pub max_residual: f64,
    /// `max(1, |rhs|_inf)`: the natural problem scale.
    pub scale: f64,
}

/// Evaluate the error-equation residual for piecewise-constant (or more
/// generally cellwise-smooth) coefficients. Requires the same coefficient
/// data the system was solved with.
pub fn verify_error_equation(
    space: &WeakSpace,
    coeffs: &CoefficientField,
    u_h: &WeakFunction,
    exact_u: impl Fn(Point) -> f64,
) -> Result<ErrorEquationCheck, Error> {
    let system = assemble(space, coeffs)?;
    let classification = coeffs.classify(space.mesh());

    let q_h_u = project_qh(space, &exact_u);
    let e: Vec<f64> = u_h
        .coeffs
        .iter()
        .zip(&q_h_u.coeffs)
        .map(|(u, q)| u - q)
        .collect();

    let ae = system.a_part().matvec(&e);
    let se = system.s_part().matvec(&e);
    let sq = system.s_part().matvec(&q_h_u.coeffs);

    // Test space: all dofs except facet blocks on inflow facets.
    let mut is_test = alloc::vec![true; space.n_dofs()];
    for &fid in classification.inflow_facets() {
        let start = space.facet_block_start(fid);
        for d in start..start + space.facet_block_len() {
            is_test[d] = false;
        }
    }

    let mut max_residual = 0.0f64;
    for dof in 0..space.n_dofs() {
        if is_test[dof] {
            max_residual = max_residual.max((ae[dof] + se[dof] + sq[dof]).abs());
        }
    }
    let scale = system
        .rhs()
        .iter()
        .fold(1.0f64, |m, &b| m.max(b.abs()));
    Ok(ErrorEquationCheck {
        max_residual,
        scale,
    })
}

/// Human-readable summary used by diagnostics output.
pub fn format_report(report: &ErrorReport) -> String {
    format!(
        "l2={:.3e} wgrad={:.3e} energy={:.3e}",
        report.l2_interior, report.weak_grad, report.energy
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::apply_inflow_bc;
    use crate::geometry::{Rect, Vec2};
    use crate::mesh::generate_triangular;
    use crate::solver::{solve, SolverOptions};
    use alloc::sync::Arc;

    #[test]
    fn perfect_solution_has_zero_errors() {
        let space =
            WeakSpace::new(Arc::new(generate_triangular(2, Rect::BIUNIT)), 2, 3).unwrap();
        let u = |p: Point| 0.3 * p.x * p.x - p.y + 0.1;
        let coeffs = CoefficientField::constant(Vec2::new(1.0, 1.0), 0.5)
            .with_source(|_, _| 0.0);
        let u_h = project_qh(&space, u);
        let report = error_norms(&space, &coeffs, u, &u_h);
        assert!(report.l2_interior <= 1e-12);
        assert!(report.weak_grad <= 1e-12);
        assert!(report.energy <= 1e-12);
    }

    #[test]
    fn energy_norm_matches_quadratic_form() {
        // |||v|||^2 = x^T A_ls x for the weak function with coefficients x.
        let space =
            WeakSpace::new(Arc::new(generate_triangular(2, Rect::BIUNIT)), 1, 2).unwrap();
        let coeffs = CoefficientField::new(
            |_, p| Vec2::new(1.0 - 0.2 * p.y, 1.0 + 0.1 * p.x),
            |_, p| (p.x - 0.5) * (p.y - 0.5),
        )
        .with_source(|_, _| 0.0);
        let system = assemble(&space, &coeffs).unwrap();

        // x = coefficients of Q_h of a smooth function, u_h = 0.
        let u = |p: Point| (0.5 * p.x).sin() + 0.25 * p.y * p.y;
        let x = project_qh(&space, u);
        let zero = WeakFunction::zeros(&space);
        let report = error_norms(&space, &coeffs, u, &zero);

        let ax = system.a_part().matvec(&x.coeffs);
        let quad_form = dot(&x.coeffs, &ax);
        let diff = (report.energy * report.energy - quad_form).abs();
        assert!(
            diff <= 1e-12 * quad_form.abs().max(1.0),
            "energy^2 {:e} vs x'Ax {:e}",
            report.energy * report.energy,
            quad_form
        );
    }

    #[test]
    fn patch_test_linear_solution_is_exact() {
        // u = x + y, beta = (1,1), c = 0, f = 2: the full pipeline
        // reproduces the projection of u to machine precision.
        let space =
            WeakSpace::new(Arc::new(generate_triangular(2, Rect::BIUNIT)), 1, 2).unwrap();
        let u = |p: Point| p.x + p.y;
        let coeffs = CoefficientField::constant(Vec2::new(1.0, 1.0), 0.0)
            .with_source(|_, _| 2.0)
            .with_inflow_data(move |p| u(p));
        let mut system = assemble(&space, &coeffs).unwrap();
        apply_inflow_bc(&mut system, &space, &coeffs).unwrap();
        let solution = solve(&system, &space, &SolverOptions::default()).unwrap();
        let report = error_norms(&space, &coeffs, u, &solution.u_h);
        assert!(report.l2_interior <= 1e-10, "{report:?}");
        assert!(report.weak_grad <= 1e-10, "{report:?}");
        assert!(report.energy <= 1e-10, "{report:?}");

        // Error-equation residual vanishes along with the stabilizer term.
        let check = verify_error_equation(&space, &coeffs, &solution.u_h, u).unwrap();
        assert!(check.max_residual <= 1e-10 * check.scale);
    }

    #[test]
    fn error_equation_holds_for_smooth_solution() {
        // r = k: the identity needs the PDE residual of test functions to
        // stay in P_k, which fails for r > k once c != 0 (an O(h^{k+1})
        // defect appears). With c = 0 any r satisfies it; see the patch
        // test above.
        let space =
            WeakSpace::new(Arc::new(generate_triangular(3, Rect::BIUNIT)), 2, 2).unwrap();
        let u = |p: Point| p.x.sin() * p.y.sin();
        let grad_u = |p: Point| Vec2::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos());
        let beta = Vec2::new(1.0, 1.0);
        let c = 1.0;
        let coeffs = CoefficientField::constant(beta, c)
            .with_source(move |_, p| beta.dot(grad_u(p)) + c * u(p))
            .with_inflow_data(move |p| u(p));
        let mut system = assemble(&space, &coeffs).unwrap();
        apply_inflow_bc(&mut system, &space, &coeffs).unwrap();
        let solution = solve(&system, &space, &SolverOptions::default()).unwrap();
        let check = verify_error_equation(&space, &coeffs, &solution.u_h, u).unwrap();
        assert!(
            check.max_residual <= 1e-9 * check.scale,
            "residual {:e} scale {:e}",
            check.max_residual,
            check.scale
        );
    }
}
