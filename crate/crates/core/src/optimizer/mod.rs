//! Two-layer gait optimization: a genetic search over the penalized
//! objective followed by gradient-based refinement of its best genome.

pub mod ga;
pub mod penalty;
pub mod refine;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::boundary::{resolve_boundary, BoundaryCheck};
use crate::constraints::{evaluate_constraints, ConstraintReport, GaitProblemConfig};
use crate::error::{GaitError, Result};
use crate::model::RobotParams;
use crate::polynomial::{FreeParams, PolynomialGait, NUM_FREE};

pub use ga::{ga_search, GaConfig, GaOutcome, GaStop};
pub use penalty::{GaitPenaltyProblem, PenaltyConfig, PenaltyWeights};
pub use refine::{local_refine, PenaltyProblem, RefineConfig, RefineOutcome, RefineStatus};

/// Settings of both optimization layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub ga: GaConfig,
    pub refine: RefineConfig,
    pub penalty: PenaltyConfig,
    /// Free parameters to start from: injected into the initial GA
    /// population, or refined directly when the GA is disabled.
    pub initial_guess: Option<Vec<f64>>,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.refine.validate()?;
        self.penalty.validate()?;
        if let Some(z) = &self.initial_guess {
            FreeParams::from_slice(z).map_err(|e| GaitError::invalid(format!("initial_guess: {e}")))?;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(GaitError::invalid("initial_guess must be finite"));
            }
        }
        if !self.ga.enabled && self.initial_guess.is_none() {
            return Err(GaitError::invalid("an initial_guess is required when the GA is disabled"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSummary {
    /// Best penalized value per generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
    pub stop: GaStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSummary {
    /// Best penalized value per iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub status: RefineStatus,
    pub start_penalized: f64,
}

/// Result of a full optimization run. Every number is recomputed from the
/// stored free parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitReport {
    pub seed: u64,
    pub feasible: bool,
    pub free_params: Vec<f64>,
    /// Joint-major polynomial coefficients, 25 values.
    pub coefficients: Vec<f64>,
    pub duration: f64,
    /// `∫ ‖τ‖² dt` on the configured grid.
    pub objective: f64,
    /// Penalized objective at the last weight stage.
    pub penalized: f64,
    pub constraints: ConstraintReport,
    pub boundary: BoundaryCheck,
    pub ga: Option<GaSummary>,
    pub refine: RefineSummary,
    /// Elapsed time; kept out of the serialized report so identical runs
    /// produce identical files.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl GaitReport {
    pub fn gait(&self) -> Result<PolynomialGait> {
        PolynomialGait::from_flat(&self.coefficients, self.duration)
    }
}

/// Run the GA and the local refinement and assemble the report.
pub fn optimize_gait(
    params: &RobotParams,
    problem: &GaitProblemConfig,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<GaitReport> {
    let started = Instant::now();
    params.validate()?;
    problem.validate()?;
    cfg.validate()?;
    let (problem, boundary) = resolve_boundary(problem, params)?;

    let penalty = GaitPenaltyProblem::new(params.clone(), problem.clone(), cfg.penalty.clone());
    let last = cfg.penalty.stages() - 1;
    let fitness = |z: &[f64]| penalty.penalized(z, last);

    let (start, ga) = if cfg.ga.enabled {
        let seeds: Vec<Vec<f64>> = cfg.initial_guess.iter().cloned().collect();
        let out = ga_search(&fitness, NUM_FREE, &cfg.ga, seed, &seeds)?;
        log::info!(
            "genetic search: best penalized {:.6e} after {} evaluations ({:?})",
            out.best_value,
            out.evaluations,
            out.stop
        );
        let summary = GaSummary {
            generations: out.history.len(),
            history: out.history,
            evaluations: out.evaluations,
            stop: out.stop,
        };
        (out.best, Some(summary))
    } else {
        (cfg.initial_guess.clone().expect("validated"), None)
    };

    let start_penalized = fitness(&start);
    let refined = local_refine(&penalty, &start, &cfg.refine);
    log::info!(
        "local refinement: penalized {:.6e} -> {:.6e}, max violation {:.3e} ({:?})",
        start_penalized,
        refined.penalized,
        refined.max_violation,
        refined.status
    );

    let z = FreeParams::from_slice(&refined.z)?;
    let gait = penalty.gait(&z);
    let constraints = evaluate_constraints(&gait, params, &problem);
    Ok(GaitReport {
        seed,
        feasible: constraints.feasible,
        free_params: refined.z.clone(),
        coefficients: gait.flat_coefficients(),
        duration: gait.duration,
        objective: constraints.objective,
        penalized: fitness(&refined.z),
        constraints,
        boundary,
        ga,
        refine: RefineSummary {
            history: refined.history,
            iterations: refined.iterations,
            status: refined.status,
            start_penalized,
        },
        wall_clock: started.elapsed(),
    })
}
