//! Gradient-based local refinement of a penalized least-squares objective.
//!
//! The penalized objective `F(z) = ‖r(z)‖²` is a sum of squares: square
//! roots of the quadrature-weighted torques plus weighted constraint
//! residuals. Each major iteration builds the residual Jacobian by central
//! finite differences and takes a Levenberg–Marquardt step, i.e. a
//! quasi-Newton step with the Gauss–Newton Hessian `2 JᵀJ`. Penalty weights
//! grow along the configured schedule whenever a stage stalls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub max_iterations: usize,
    pub violation_tolerance: f64,
    /// Central-difference step, scaled by `max(1, |z_i|)`.
    pub fd_step: f64,
    /// Stop when a step moves `z` less than this (infinity norm).
    pub step_tolerance: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            violation_tolerance: 0.01,
            fd_step: 1e-6,
            step_tolerance: 1e-10,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(GaitError::invalid("refine.max_iterations must be at least 1"));
        }
        for (name, v) in [
            ("refine.violation_tolerance", self.violation_tolerance),
            ("refine.fd_step", self.fd_step),
            ("refine.step_tolerance", self.step_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GaitError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A penalized least-squares problem with a sequence of weight stages.
pub trait PenaltyProblem {
    fn dim(&self) -> usize;
    fn num_stages(&self) -> usize;
    /// Residual vector at `z` for weight stage `stage`; `F = ‖r‖²`.
    fn residuals(&self, z: &[f64], stage: usize) -> Vec<f64>;
    /// Largest raw constraint violation at `z`.
    fn max_violation(&self, z: &[f64]) -> f64;

    fn penalized(&self, z: &[f64], stage: usize) -> f64 {
        self.residuals(z, stage).iter().map(|r| r * r).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStatus {
    /// Step size fell below tolerance.
    Converged,
    /// Iteration budget used up.
    MaxIterations,
    /// No descent step could be found on the first iteration.
    NoProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub z: Vec<f64>,
    /// Penalized value of `z` at the last weight stage.
    pub penalized: f64,
    pub max_violation: f64,
    pub success: bool,
    pub status: RefineStatus,
    pub iterations: usize,
    /// Best penalized value (last stage weights) after each iteration.
    pub history: Vec<f64>,
}

/// Gradient infinity norm, relative to `1 + F`, treated as stationary.
const STATIONARY_TOLERANCE: f64 = 1e-12;

fn jacobian<P: PenaltyProblem + Sync + ?Sized>(problem: &P, z: &[f64], stage: usize, step: f64) -> DMatrix<f64> {
    use rayon::prelude::*;
    let n = z.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let h = step * z[i].abs().max(1.0);
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[i] += h;
            zm[i] -= h;
            let rp = problem.residuals(&zp, stage);
            let rm = problem.residuals(&zm, stage);
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let m = columns[0].len();
    DMatrix::from_fn(m, n, |r, c| columns[c][r])
}

/// Solve `min ‖J δ + r‖² + λ ‖D δ‖²` through an SVD of the stacked system.
fn damped_step(j: &DMatrix<f64>, r: &DVector<f64>, scale: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let (m, n) = j.shape();
    let mut a = DMatrix::zeros(m + n, n);
    a.view_mut((0, 0), (m, n)).copy_from(j);
    let mut b = DVector::zeros(m + n);
    b.rows_mut(0, m).copy_from(&(-r));
    let sl = lambda.sqrt();
    for i in 0..n {
        a[(m + i, i)] = sl * scale[i];
    }
    let svd = a.svd(true, true);
    let step = svd.solve(&b, 1e-14 * svd.singular_values.max()).ok()?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

pub fn local_refine<P: PenaltyProblem + Sync + ?Sized>(problem: &P, z0: &[f64], cfg: &RefineConfig) -> RefineOutcome {
    let last_stage = problem.num_stages() - 1;
    let final_value = |z: &[f64]| problem.penalized(z, last_stage);

    let mut best_z = z0.to_vec();
    let mut best_value = final_value(z0);
    let mut history = Vec::with_capacity(cfg.max_iterations);

    let mut z = z0.to_vec();
    let mut stage = 0usize;
    let mut lambda = 1e-3;
    let mut status = RefineStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let r = DVector::from_vec(problem.residuals(&z, stage));
        let value = r.norm_squared();
        let j = jacobian(problem, &z, stage, cfg.fd_step);
        let scale = DVector::from_fn(z.len(), |i, _| j.column(i).norm().max(1e-12));

        // Stationary point of the current stage: nothing left to descend.
        if j.tr_mul(&r).amax() <= STATIONARY_TOLERANCE * (1.0 + value) {
            history.push(best_value);
            if stage == last_stage {
                status = RefineStatus::Converged;
                break;
            }
            stage += 1;
            continue;
        }

        // Raise the damping until the step decreases the current stage value.
        let mut accepted = None;
        for _ in 0..30 {
            if let Some(step) = damped_step(&j, &r, &scale, lambda) {
                let candidate: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let cand_value = problem.penalized(&candidate, stage);
                if cand_value.is_finite() && cand_value < value {
                    accepted = Some((candidate, step.amax()));
                    lambda = (lambda * 0.3).max(1e-12);
                    break;
                }
            }
            lambda *= 10.0;
        }

        match accepted {
            Some((candidate, step_norm)) => {
                z = candidate;
                let v = final_value(&z);
                if v < best_value {
                    best_value = v;
                    best_z = z.clone();
                }
                history.push(best_value);
                if step_norm < cfg.step_tolerance {
                    if stage == last_stage {
                        status = RefineStatus::Converged;
                        break;
                    }
                    stage += 1;
                }
            }
            None => {
                history.push(best_value);
                if iterations == 1 {
                    status = RefineStatus::NoProgress;
                    break;
                }
                if stage == last_stage {
                    status = RefineStatus::Converged;
                    break;
                }
                stage += 1;
                lambda = 1e-3;
            }
        }
        // Weights advance evenly over the iteration budget.
        let scheduled = (iterations * problem.num_stages()) / cfg.max_iterations;
        if scheduled > stage {
            stage = scheduled.min(last_stage);
        }
    }

    let max_violation = problem.max_violation(&best_z);
    RefineOutcome {
        z: best_z,
        penalized: best_value,
        max_violation,
        success: max_violation <= cfg.violation_tolerance,
        status,
        iterations,
        history,
    }
}
