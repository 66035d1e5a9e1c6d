//! Solution of the reduced SPD system: Jacobi-preconditioned conjugate
//! gradients, with a dense Cholesky path for small systems.
//!
//! All reductions are sequential, so repeated runs are bit-identical.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::LinearSystem;
use crate::error::Error;
use crate::linalg::CsrMatrix;
use crate::space::{WeakFunction, WeakSpace};

/// Free-dof count up to which the direct path is preferred under
/// [`SolverKind::Auto`].
pub const DENSE_PATH_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolverKind {
    /// Dense Cholesky for up to [`DENSE_PATH_LIMIT`] free dofs, CG above.
    Auto,
    ConjugateGradient,
    DenseCholesky,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target `|b - Ax| / |b|`.
    pub tol: f64,
    /// CG iteration cap as a multiple of the free-dof count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tol: 1e-12,
            max_iter_factor: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SolverMethod {
    Cg,
    Cholesky,
}

impl SolverMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverMethod::Cg => "cg",
            SolverMethod::Cholesky => "cholesky",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverStats {
    pub method: SolverMethod,
    pub iterations: usize,
    /// Relative residual of the returned solution.
    pub final_residual: f64,
}

/// Discrete solution with solver diagnostics.
pub struct Solution {
    pub u_h: WeakFunction,
    pub stats: SolverStats,
}

/// Solve the (reduced) system and expand back to a full weak function.
pub fn solve(
    system: &LinearSystem,
    space: &WeakSpace,
    options: &SolverOptions,
) -> Result<Solution, Error> {
    let (matrix, rhs) = system.reduced();
    if matrix.dim() == 0 {
        return Err(Error::EmptySystem);
    }
    let use_dense = match options.kind {
        SolverKind::DenseCholesky => true,
        SolverKind::ConjugateGradient => false,
        SolverKind::Auto => matrix.dim() <= DENSE_PATH_LIMIT,
    };
    let (x, stats) = if use_dense {
        dense_solve(&matrix, &rhs, options.tol)?
    } else {
        cg_solve(&matrix, &rhs, options.tol, options.max_iter_factor)?
    };
    let coeffs = system.expand(&x);
    Ok(Solution {
        u_h: WeakFunction::from_coeffs(space, coeffs),
        stats,
    })
}

fn residual_norm(matrix: &CsrMatrix, rhs: &[f64], x: &[f64]) -> f64 {
    let ax = matrix.matvec(x);
    rhs.iter()
        .zip(&ax)
        .map(|(b, a)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

fn dense_solve(
    matrix: &CsrMatrix,
    rhs: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolverStats), Error> {
    let b_norm = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((
            alloc::vec![0.0; matrix.dim()],
            SolverStats {
                method: SolverMethod::Cholesky,
                iterations: 0,
                final_residual: 0.0,
            },
        ));
    }
    let dense = matrix.to_dense();
    let chol = dense.cholesky()?;
    let mut x = chol.solve(rhs);
    // Iterative refinement drives the relative residual to the same
    // contract the iterative path honors.
    let mut refinements = 0;
    let mut resid = residual_norm(matrix, rhs, &x) / b_norm;
    while resid > tol && refinements < 4 {
        let ax = matrix.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = chol.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        let new_resid = residual_norm(matrix, rhs, &x) / b_norm;
        if new_resid >= resid {
            break;
        }
        resid = new_resid;
        refinements += 1;
    }
    if resid > tol {
        return Err(Error::NotSpd {
            iterations: refinements,
            residual: resid,
            trace: alloc::vec![resid],
        });
    }
    Ok((
        x,
        SolverStats {
            method: SolverMethod::Cholesky,
            iterations: refinements,
            final_residual: resid,
        },
    ))
}

fn cg_solve(
    matrix: &CsrMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter_factor: usize,
) -> Result<(Vec<f64>, SolverStats), Error> {
    let n = matrix.dim();
    let b_norm = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((
            alloc::vec![0.0; n],
            SolverStats {
                method: SolverMethod::Cg,
                iterations: 0,
                final_residual: 0.0,
            },
        ));
    }
    let diag = matrix.diagonal();
    if diag.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::NotSpd {
            iterations: 0,
            residual: f64::INFINITY,
            trace: Vec::new(),
        });
    }
    let max_iter = max_iter_factor.saturating_mul(n).max(16);

    let mut x = alloc::vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut ap = alloc::vec![0.0; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut resid = 1.0;

    for iter in 0..max_iter {
        resid = dot(&r, &r).sqrt() / b_norm;
        if trace.len() == 16 {
            trace.remove(0);
        }
        trace.push(resid);
        if resid <= tol {
            return Ok((
                x,
                SolverStats {
                    method: SolverMethod::Cg,
                    iterations: iter,
                    final_residual: resid,
                },
            ));
        }
        matrix.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotSpd {
                iterations: iter,
                residual: resid,
                trace,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotSpd {
        iterations: max_iter,
        residual: resid,
        trace,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuffer;

    fn csr_from(entries: &[(usize, usize, f64)], n: usize) -> CsrMatrix {
        let mut t = TripletBuffer::new(n);
        for &(i, j, v) in entries {
            t.push(i, j, v);
        }
        t.to_csr()
    }

    #[test]
    fn cg_solves_identity() {
        let m = csr_from(&[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)], 3);
        let b = [3.0, -1.0, 0.5];
        let (x, stats) = cg_solve(&m, &b, 1e-12, 20).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
        assert!(stats.final_residual <= 1e-12);
    }

    #[test]
    fn two_by_two_analytic_solution() {
        let m = csr_from(&[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)], 2);
        let b = [3.0, 3.0];
        for solver in [cg_solve(&m, &b, 1e-12, 20), dense_solve(&m, &b, 1e-12)] {
            let (x, _) = solver.unwrap();
            assert!((x[0] - 1.0).abs() < 1e-12);
            assert!((x[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_detected() {
        let m = csr_from(&[(0, 0, 1.0), (1, 1, -1.0)], 2);
        let b = [1.0, 1.0];
        assert!(matches!(
            cg_solve(&m, &b, 1e-12, 20),
            Err(Error::NotSpd { .. })
        ));
        assert!(matches!(
            dense_solve(&m, &b, 1e-12),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let m = csr_from(&[(0, 0, 2.0), (1, 1, 2.0)], 2);
        let (x, stats) = cg_solve(&m, &[0.0, 0.0], 1e-12, 20).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn cg_and_cholesky_agree_on_random_spd_system() {
        // A = D + L L^T style SPD matrix.
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let n = 40;
        let mut rng = StdRng::seed_from_u64(11);
        let mut entries = alloc::vec::Vec::new();
        for i in 0..n {
            entries.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            if i + 1 < n {
                let v = rng.gen_range(-1.0..1.0);
                entries.push((i, i + 1, v));
                entries.push((i + 1, i, v));
            }
        }
        let m = csr_from(&entries, n);
        let b: alloc::vec::Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x1, _) = cg_solve(&m, &b, 1e-13, 20).unwrap();
        let (x2, _) = dense_solve(&m, &b, 1e-13).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
