//! Refinement-study driver: run the full pipeline over a level range,
//! collect the three error norms, and compute observed convergence
//! orders.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::{apply_inflow_bc, assemble};
use crate::error::Error;
use crate::geometry::Rect;
use crate::mesh::{generate_nonconvex_polygonal, generate_triangular, PolyMesh};
use crate::norms::{error_norms, ErrorReport};
use crate::problems;
use crate::solver::{solve, SolverKind, SolverOptions, SolverStats};
use crate::space::WeakSpace;

/// Errors at or below this absolute size are treated as machine zero:
/// no convergence order is reported for them.
pub const MACHINE_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MeshFamily {
    Triangular,
    NonconvexPolygonal,
    /// Meshes supplied by the caller (see [`run_study_with`]).
    File,
}

impl MeshFamily {
    /// Weak-gradient degree used when the config leaves it unset:
    /// `k + 1` on triangles, `k + 2` on polygons.
    pub fn default_grad_degree(self, k: u32) -> u32 {
        match self {
            MeshFamily::Triangular => k + 1,
            MeshFamily::NonconvexPolygonal | MeshFamily::File => k + 2,
        }
    }

    pub fn parse(name: &str) -> Result<Self, Error> {
        match name {
            "triangular" => Ok(MeshFamily::Triangular),
            "nonconvex-polygonal" => Ok(MeshFamily::NonconvexPolygonal),
            "file" => Ok(MeshFamily::File),
            other => Err(Error::InvalidConfig(format!(
                "unknown mesh family `{other}` \
                 (available: triangular, nonconvex-polygonal, file)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeshFamily::Triangular => "triangular",
            MeshFamily::NonconvexPolygonal => "nonconvex-polygonal",
            MeshFamily::File => "file",
        }
    }
}

/// Full description of a refinement study.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyConfig {
    pub family: MeshFamily,
    /// Inclusive level range, ascending.
    pub levels: (u32, u32),
    /// Interior and facet polynomial degree `k`.
    pub degree: u32,
    /// Weak-gradient degree; defaults per family when `None`.
    pub grad_degree: Option<u32>,
    pub problem: String,
    pub lambda: f64,
    pub solver: SolverKind,
    pub tol: f64,
    /// Studies stop before a level whose free-dof count would exceed this.
    pub max_free_dofs: usize,
    /// Multiplier on the `h_T^{-1}` stabilizer weight.
    pub stab_weight: f64,
    /// Mesh file path (informational; only used by the CLI for
    /// [`MeshFamily::File`]).
    pub mesh_file: Option<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            family: MeshFamily::Triangular,
            levels: (1, 3),
            degree: 1,
            grad_degree: None,
            problem: String::from("sin"),
            lambda: 1.0,
            solver: SolverKind::Auto,
            tol: 1e-12,
            max_free_dofs: 500_000,
            stab_weight: 1.0,
            mesh_file: None,
        }
    }
}

impl StudyConfig {
    pub fn grad_degree(&self) -> u32 {
        self.grad_degree
            .unwrap_or_else(|| self.family.default_grad_degree(self.degree))
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(1..=6).contains(&self.degree) {
            return Err(Error::InvalidConfig(format!(
                "degree k must satisfy 1 <= k <= 6, got {}",
                self.degree
            )));
        }
        let r = self.grad_degree();
        if r < self.degree {
            return Err(Error::InvalidConfig(format!(
                "grad degree r = {r} must be >= k = {}",
                self.degree
            )));
        }
        if self.levels.0 > self.levels.1 {
            return Err(Error::InvalidConfig(
                "level range must be ascending".to_string(),
            ));
        }
        if self.family == MeshFamily::NonconvexPolygonal && self.levels.0 < 1 {
            return Err(Error::InvalidConfig(
                "nonconvex polygonal meshes start at level 1".to_string(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig("solver tolerance must be positive".into()));
        }
        if !(self.stab_weight > 0.0 && self.stab_weight.is_finite()) {
            return Err(Error::InvalidConfig(
                "stabilization weight must be positive".into(),
            ));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        Ok(())
    }
}

/// One refinement level of a study.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelRecord {
    pub level: u32,
    pub h: f64,
    pub n_dofs: usize,
    pub n_free_dofs: usize,
    pub errors: ErrorReport,
    /// Orders against the previous level; `None` on the first level, after
    /// a non-halving step, or when an error sits at machine zero.
    pub ord_l2: Option<f64>,
    pub ord_wgrad: Option<f64>,
    pub ord_energy: Option<f64>,
    pub solver: SolverStats,
}

/// Study output: one record per completed level plus the reason the run
/// stopped early, if it did.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub levels: Vec<LevelRecord>,
    pub failure: Option<String>,
}

impl ConvergenceReport {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// `log2(e_{i-1} / e_i)` between consecutive entries; `None` where either
/// error is not strictly positive.
pub fn compute_orders(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                Some((w[0] / w[1]).log2())
            } else {
                None
            }
        })
        .collect()
}

/// Run a study on the built-in mesh families over `Rect::BIUNIT`.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport, Error> {
    let family = config.family;
    run_study_with(config, |level| match family {
        MeshFamily::Triangular => Ok(generate_triangular(level, Rect::BIUNIT)),
        MeshFamily::NonconvexPolygonal => Ok(generate_nonconvex_polygonal(level, Rect::BIUNIT)),
        MeshFamily::File => Err(Error::InvalidConfig(
            "the `file` family needs meshes supplied by the caller".to_string(),
        )),
    })
}

/// Run a study with caller-supplied meshes (one per level). Levels run
/// sequentially; a solver failure stops the run and leaves the completed
/// levels in the report.
pub fn run_study_with(
    config: &StudyConfig,
    mut mesh_for_level: impl FnMut(u32) -> Result<PolyMesh, Error>,
) -> Result<ConvergenceReport, Error> {
    config.validate()?;
    let problem = problems::by_name(&config.problem, config.lambda)?;
    let coeffs = problem.coefficient_field();
    let k = config.degree;
    let r = config.grad_degree();
    let options = SolverOptions {
        kind: config.solver,
        tol: config.tol,
        ..SolverOptions::default()
    };

    let mut report = ConvergenceReport {
        config: config.clone(),
        levels: Vec::new(),
        failure: None,
    };

    for level in config.levels.0..=config.levels.1 {
        let outcome = (|| -> Result<LevelRecord, Error> {
            let mesh = Arc::new(mesh_for_level(level)?);
            let mut space = WeakSpace::new(mesh, k, r)?;
            space.set_stabilization_weight(config.stab_weight);

            let classification = coeffs.classify(space.mesh());
            let n_dofs = space.n_dofs();
            let n_constrained =
                classification.inflow_facets().len() * space.facet_block_len();
            let n_free = n_dofs - n_constrained;
            if n_free > config.max_free_dofs {
                return Err(Error::InvalidConfig(format!(
                    "level {level} needs {n_free} free dofs, over the budget of {}",
                    config.max_free_dofs
                )));
            }

            let mut system = assemble(&space, &coeffs)?;
            apply_inflow_bc(&mut system, &space, &coeffs)?;
            let solution = solve(&system, &space, &options)?;
            let errors = error_norms(&space, &coeffs, |p| problem.exact(p), &solution.u_h);
            Ok(LevelRecord {
                level,
                h: space.mesh().mesh_size(),
                n_dofs,
                n_free_dofs: n_free,
                errors,
                ord_l2: None,
                ord_wgrad: None,
                ord_energy: None,
                solver: solution.stats,
            })
        })();
        match outcome {
            Ok(record) => report.levels.push(record),
            Err(e) => {
                report.failure = Some(format!("level {level}: {e}"));
                break;
            }
        }
    }

    fill_orders(&mut report.levels);
    Ok(report)
}

/// Orders between consecutive records, masked where `h` does not halve or
/// an error is at machine zero.
fn fill_orders(levels: &mut [LevelRecord]) {
    let l2: Vec<f64> = levels.iter().map(|l| l.errors.l2_interior).collect();
    let wg: Vec<f64> = levels.iter().map(|l| l.errors.weak_grad).collect();
    let en: Vec<f64> = levels.iter().map(|l| l.errors.energy).collect();
    let ord_l2 = compute_orders(&l2);
    let ord_wg = compute_orders(&wg);
    let ord_en = compute_orders(&en);
    for i in 1..levels.len() {
        let halves = {
            let ratio = levels[i].h / levels[i - 1].h;
            (ratio - 0.5).abs() <= 1e-9
        };
        let usable = |prev: f64, curr: f64| halves && prev > MACHINE_ZERO && curr > MACHINE_ZERO;
        levels[i].ord_l2 = ord_l2[i - 1].filter(|_| usable(l2[i - 1], l2[i]));
        levels[i].ord_wgrad = ord_wg[i - 1].filter(|_| usable(wg[i - 1], wg[i]));
        levels[i].ord_energy = ord_en[i - 1].filter(|_| usable(en[i - 1], en[i]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_from_exact_halving() {
        let orders = compute_orders(&[0.1, 0.025]);
        assert_eq!(orders.len(), 1);
        assert!((orders[0].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orders_match_published_energy_column() {
        // Energy-norm column of a P2 run: 0.340E-3, 0.844E-4, 0.210E-4
        // prints as orders 2.0, 2.0 (exact values 2.010, 2.007).
        let orders = compute_orders(&[0.340e-3, 0.844e-4, 0.210e-4]);
        assert!((orders[0].unwrap() - 2.0103).abs() < 1e-3);
        assert!((orders[1].unwrap() - 2.0069).abs() < 1e-3);
    }

    #[test]
    fn constant_errors_give_zero_orders() {
        let orders = compute_orders(&[1.0, 1.0, 1.0]);
        assert_eq!(orders, alloc::vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn nonpositive_errors_are_sentinels() {
        let orders = compute_orders(&[0.1, 0.0, 0.05]);
        assert_eq!(orders, alloc::vec![None, None]);
    }

    #[test]
    fn config_validation_rejects_bad_degrees() {
        let mut config = StudyConfig::default();
        config.degree = 0;
        assert!(config.validate().is_err());
        config.degree = 7;
        assert!(config.validate().is_err());
        config.degree = 2;
        config.grad_degree = Some(1);
        assert!(config.validate().is_err());
        config.grad_degree = None;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn default_grad_degrees_follow_family() {
        assert_eq!(MeshFamily::Triangular.default_grad_degree(2), 3);
        assert_eq!(MeshFamily::NonconvexPolygonal.default_grad_degree(2), 4);
    }

    #[test]
    fn patch_study_reports_machine_zero_without_orders() {
        let config = StudyConfig {
            problem: String::from("linear"),
            levels: (1, 2),
            ..StudyConfig::default()
        };
        let report = run_study(&config).unwrap();
        assert!(report.succeeded());
        assert_eq!(report.levels.len(), 2);
        for level in &report.levels {
            assert!(level.errors.l2_interior <= MACHINE_ZERO);
            assert!(level.errors.energy <= MACHINE_ZERO);
        }
        assert_eq!(report.levels[1].ord_l2, None);
        assert_eq!(report.levels[1].ord_energy, None);
    }

    #[test]
    fn sin_study_shows_expected_orders() {
        let config = StudyConfig {
            levels: (2, 4),
            ..StudyConfig::default()
        };
        let report = run_study(&config).unwrap();
        assert!(report.succeeded(), "{:?}", report.failure);
        let last = report.levels.last().unwrap();
        let ord_l2 = last.ord_l2.unwrap();
        let ord_energy = last.ord_energy.unwrap();
        assert!((ord_l2 - 2.0).abs() < 0.35, "l2 order {ord_l2}");
        assert!((ord_energy - 1.0).abs() < 0.35, "energy order {ord_energy}");
    }

    #[test]
    fn dof_budget_stops_the_run() {
        let config = StudyConfig {
            levels: (1, 6),
            max_free_dofs: 500,
            ..StudyConfig::default()
        };
        let report = run_study(&config).unwrap();
        assert!(!report.succeeded());
        assert!(!report.levels.is_empty());
        assert!(report.failure.as_ref().unwrap().contains("budget"));
    }

    #[test]
    fn studies_are_deterministic() {
        let config = StudyConfig {
            levels: (1, 2),
            ..StudyConfig::default()
        };
        let a = run_study(&config).unwrap();
        let b = run_study(&config).unwrap();
        assert_eq!(a, b);
    }
}
