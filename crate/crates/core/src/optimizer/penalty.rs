//! Exterior quadratic penalty turning the constrained gait problem into an
//! unconstrained one.

use serde::{Deserialize, Serialize};

use crate::constraints::{evaluate, ConstraintReport, ConstraintTerms, GaitProblemConfig};
use crate::error::{GaitError, Result};
use crate::impact::RelabelMaps;
use crate::model::RobotParams;
use crate::optimizer::refine::PenaltyProblem;
use crate::polynomial::{assemble_gait, FreeParams, PolynomialGait, NUM_FREE};

/// Added to the objective when the impact map is singular.
pub const DEGENERATE_PENALTY: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Equality weights per stage, strictly increasing.
    pub equality_weights: Vec<f64>,
    /// Inequality weights per stage, strictly increasing.
    pub inequality_weights: Vec<f64>,
    pub violation_threshold: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            equality_weights: vec![1e3, 1e4, 1e5],
            inequality_weights: vec![1e3, 1e4, 1e5],
            violation_threshold: 0.01,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, w: &[f64]| -> Result<()> {
            if w.is_empty() {
                return Err(GaitError::invalid(format!("penalty.{name} must not be empty")));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(GaitError::invalid(format!("penalty.{name} must be positive")));
            }
            if w.windows(2).any(|p| p[1] <= p[0]) {
                return Err(GaitError::invalid(format!("penalty.{name} must be strictly increasing")));
            }
            Ok(())
        };
        check("equality_weights", &self.equality_weights)?;
        check("inequality_weights", &self.inequality_weights)?;
        if self.equality_weights.len() != self.inequality_weights.len() {
            return Err(GaitError::invalid("penalty weight schedules must have equal length"));
        }
        if !(self.violation_threshold.is_finite() && self.violation_threshold > 0.0) {
            return Err(GaitError::invalid("penalty.violation_threshold must be positive"));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.equality_weights.len()
    }

    pub fn weights(&self, stage: usize) -> PenaltyWeights {
        PenaltyWeights {
            equality: self.equality_weights[stage],
            inequality: self.inequality_weights[stage],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub equality: f64,
    pub inequality: f64,
}

/// Residual vector whose squared norm is the penalized objective.
pub fn penalty_residuals(terms: &ConstraintTerms, weights: PenaltyWeights) -> Vec<f64> {
    let se = weights.equality.sqrt();
    let si = weights.inequality.sqrt();
    let impact_terms = if terms.impact_degenerate { 5 } else { 0 };
    let eq = &terms.equalities[..terms.equalities.len() - impact_terms];
    let mut r = Vec::with_capacity(terms.objective_residuals.len() + eq.len() + terms.inequalities.len() + 1);
    r.extend_from_slice(&terms.objective_residuals);
    r.extend(eq.iter().map(|h| se * h));
    r.extend(terms.inequalities.iter().map(|g| si * g.max(0.0)));
    if terms.impact_degenerate {
        r.push(DEGENERATE_PENALTY.sqrt());
    }
    r
}

/// `f + r_eq Σ h² + r_ineq Σ max(0, g)²`.
pub fn penalized_value(terms: &ConstraintTerms, weights: PenaltyWeights) -> f64 {
    let eq_count = terms.equalities.len() - if terms.impact_degenerate { 5 } else { 0 };
    let eq: f64 = terms.equalities[..eq_count].iter().map(|h| h * h).sum();
    let ineq: f64 = terms.inequalities.iter().map(|g| g.max(0.0).powi(2)).sum();
    let sentinel = if terms.impact_degenerate { DEGENERATE_PENALTY } else { 0.0 };
    terms.objective + weights.equality * eq + weights.inequality * ineq + sentinel
}

/// The gait problem seen as a function of the 15 free coefficients.
#[derive(Debug, Clone)]
pub struct GaitPenaltyProblem {
    pub params: RobotParams,
    pub problem: GaitProblemConfig,
    pub penalty: PenaltyConfig,
    pub maps: RelabelMaps,
}

impl GaitPenaltyProblem {
    pub fn new(params: RobotParams, problem: GaitProblemConfig, penalty: PenaltyConfig) -> Self {
        Self { params, problem, penalty, maps: RelabelMaps::new() }
    }

    pub fn gait(&self, z: &FreeParams) -> PolynomialGait {
        assemble_gait(z, &self.problem.q_init(), &self.problem.q_final(), self.problem.duration())
            .expect("validated step duration")
    }

    pub fn evaluate(&self, z: &FreeParams) -> (ConstraintTerms, ConstraintReport) {
        evaluate(&self.gait(z), &self.params, &self.problem, &self.maps)
    }

    /// Penalized objective for the given weights; non-finite evaluations map
    /// to the degenerate sentinel.
    pub fn penalized_objective(&self, z: &FreeParams, weights: PenaltyWeights) -> f64 {
        let (terms, _) = self.evaluate(z);
        let v = penalized_value(&terms, weights);
        if v.is_finite() {
            v
        } else {
            DEGENERATE_PENALTY * 1e3
        }
    }
}

fn free(z: &[f64]) -> FreeParams {
    FreeParams::from_slice(z).expect("optimizer works on 15 free parameters")
}

impl PenaltyProblem for GaitPenaltyProblem {
    fn dim(&self) -> usize {
        NUM_FREE
    }

    fn num_stages(&self) -> usize {
        self.penalty.stages()
    }

    fn residuals(&self, z: &[f64], stage: usize) -> Vec<f64> {
        let (terms, _) = self.evaluate(&free(z));
        penalty_residuals(&terms, self.penalty.weights(stage))
    }

    fn max_violation(&self, z: &[f64]) -> f64 {
        self.evaluate(&free(z)).1.max_violation
    }

    fn penalized(&self, z: &[f64], stage: usize) -> f64 {
        self.penalized_objective(&free(z), self.penalty.weights(stage))
    }
}
