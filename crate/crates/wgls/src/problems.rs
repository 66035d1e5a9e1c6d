//! Built-in manufactured-solution problems.
//!
//! Each problem fixes an exact solution `u`, the fields `beta` and `c`,
//! and derives the source `f = beta . grad u + c u` and the inflow data
//! `g = u|_{Gamma_-}` from it, so discretization error can be measured
//! directly.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::CoefficientField;
use crate::error::Error;
use crate::geometry::{Point, Rect, Vec2};

type Scalar = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;

/// A manufactured problem: exact solution plus coefficient fields.
pub struct Problem {
    pub name: String,
    /// Lowest interior degree for which the scheme reproduces `u` exactly
    /// (patch-test problems); `None` for non-polynomial solutions.
    pub exact_for_degree: Option<u32>,
    u: Scalar,
    grad_u: Vector,
    beta: Vector,
    c: Scalar,
    f: Scalar,
}

impl Problem {
    fn manufactured(
        name: &str,
        exact_for_degree: Option<u32>,
        u: Scalar,
        grad_u: Vector,
        beta: Vector,
        c: Scalar,
    ) -> Self {
        let f: Scalar = {
            let (u, grad_u, beta, c) =
                (u.clone(), grad_u.clone(), beta.clone(), c.clone());
            Arc::new(move |p| beta(p).dot(grad_u(p)) + c(p) * u(p))
        };
        Self {
            name: String::from(name),
            exact_for_degree,
            u,
            grad_u,
            beta,
            c,
            f,
        }
    }

    pub fn exact(&self, p: Point) -> f64 {
        (self.u)(p)
    }

    pub fn exact_gradient(&self, p: Point) -> Vec2 {
        (self.grad_u)(p)
    }

    pub fn beta(&self, p: Point) -> Vec2 {
        (self.beta)(p)
    }

    pub fn reaction(&self, p: Point) -> f64 {
        (self.c)(p)
    }

    pub fn source(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    /// Coefficient data for the solver: `f` derived from the exact
    /// solution, `g` its trace on whatever facets get classified inflow.
    pub fn coefficient_field(&self) -> CoefficientField {
        let beta = self.beta.clone();
        let c = self.c.clone();
        let f = self.f.clone();
        let g = self.u.clone();
        CoefficientField::new(move |_, p| beta(p), move |_, p| c(p))
            .with_source(move |_, p| f(p))
            .with_inflow_data(move |p| g(p))
    }

    /// Largest PDE residual `|beta . grad u + c u - f|` over `n` quasi-random
    /// sample points of `domain`, relative to the local scale. A derived
    /// `f` must drive this to rounding level.
    pub fn residual_check(&self, domain: Rect, n: usize) -> f64 {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut unit = move || {
            // xorshift*: deterministic sample points, no RNG dependency.
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut worst = 0.0f64;
        for _ in 0..n {
            let p = Point::new(
                domain.xmin + unit() * domain.width(),
                domain.ymin + unit() * domain.height(),
            );
            let f = self.source(p);
            let resid = self.beta(p).dot(self.exact_gradient(p)) + self.reaction(p) * self.exact(p) - f;
            let scale = f.abs().max(1.0);
            worst = worst.max(resid.abs() / scale);
        }
        worst
    }
}

/// Names understood by [`by_name`].
pub fn problem_names() -> Vec<&'static str> {
    alloc::vec!["sin", "linear", "quadratic"]
}

/// Look up a built-in problem. `lambda` scales the reaction coefficient of
/// the `sin` problem and is ignored by the patch-test problems.
pub fn by_name(name: &str, lambda: f64) -> Result<Problem, Error> {
    match name {
        // u = sin x sin y with beta = (1,1) and the quadratic reaction
        // c = lambda (x - 1/2)(y - 1/2).
        "sin" => Ok(Problem::manufactured(
            name,
            None,
            Arc::new(|p| p.x.sin() * p.y.sin()),
            Arc::new(|p| Vec2::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos())),
            Arc::new(|_| Vec2::new(1.0, 1.0)),
            Arc::new(move |p| lambda * (p.x - 0.5) * (p.y - 0.5)),
        )),
        // Patch tests: global polynomials the scheme reproduces exactly.
        "linear" => Ok(Problem::manufactured(
            name,
            Some(1),
            Arc::new(|p| p.x + p.y),
            Arc::new(|_| Vec2::new(1.0, 1.0)),
            Arc::new(|_| Vec2::new(1.0, 1.0)),
            Arc::new(|_| 0.0),
        )),
        "quadratic" => Ok(Problem::manufactured(
            name,
            Some(2),
            Arc::new(|p| p.x * p.x - p.y),
            Arc::new(|p| Vec2::new(2.0 * p.x, -1.0)),
            Arc::new(|_| Vec2::new(1.0, 1.0)),
            Arc::new(|_| 0.0),
        )),
        other => Err(Error::InvalidConfig(format!(
            "unknown problem `{other}` (available: {})",
            problem_names().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_sources_satisfy_the_pde() {
        for lambda in [1.0, 100.0] {
            let p = by_name("sin", lambda).unwrap();
            assert!(p.residual_check(Rect::BIUNIT, 100) <= 1e-12);
        }
        for name in ["linear", "quadratic"] {
            let p = by_name(name, 1.0).unwrap();
            assert!(p.residual_check(Rect::BIUNIT, 100) <= 1e-12);
        }
    }

    #[test]
    fn linear_problem_has_constant_source() {
        let p = by_name("linear", 7.0).unwrap();
        for pt in [Point::new(0.0, 0.0), Point::new(-0.8, 0.3)] {
            assert_eq!(p.source(pt), 2.0);
        }
    }

    #[test]
    fn quadratic_problem_source() {
        let p = by_name("quadratic", 1.0).unwrap();
        // f = (1,1) . (2x, -1) = 2x - 1.
        for pt in [Point::new(0.25, -0.5), Point::new(-1.0, 1.0)] {
            assert!((p.source(pt) - (2.0 * pt.x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_problem_is_a_config_error() {
        assert!(matches!(
            by_name("vortex", 1.0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
