//! Degree-4 polynomial joint trajectories and the 15 free coefficients
//! left after fixing the boundary configurations.

use nalgebra::{SMatrix, SVector, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

pub const DEGREE: usize = 4;
pub const COEFFS_PER_JOINT: usize = DEGREE + 1;
/// Middle coefficients `α_{k,1..3}` of each joint.
pub const FREE_PER_JOINT: usize = 3;
pub const NUM_FREE: usize = 5 * FREE_PER_JOINT;

/// Coefficients `alpha[(k, i)]` of `q_k(t) = Σ_i alpha[(k, i)] tⁱ`.
pub type Coefficients = SMatrix<f64, 5, COEFFS_PER_JOINT>;

/// Free optimization variables, joint-major: `(α_{1,1}, α_{1,2}, α_{1,3}, α_{2,1}, ...)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParams(pub SVector<f64, NUM_FREE>);

impl FreeParams {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != NUM_FREE {
            return Err(GaitError::Parse(format!(
                "expected {NUM_FREE} free parameters, got {}",
                values.len()
            )));
        }
        Ok(Self(SVector::from_column_slice(values)))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// A single-step joint trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialGait {
    pub alpha: Coefficients,
    pub duration: f64,
}

/// Joint angles, rates and accelerations at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSample {
    pub q: Vector5<f64>,
    pub qdot: Vector5<f64>,
    pub qddot: Vector5<f64>,
}

impl PolynomialGait {
    pub fn new(alpha: Coefficients, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(GaitError::invalid("step duration must be positive and finite"));
        }
        Ok(Self { alpha, duration })
    }

    /// Evaluate `q`, `q̇`, `q̈` at `t ∈ [0, T]`.
    pub fn eval(&self, t: f64) -> Result<GaitSample> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(GaitError::OutOfRange { t, duration: self.duration });
        }
        Ok(self.eval_unchecked(t))
    }

    /// Polynomial evaluation without the range check; used for the
    /// extrapolated feed-forward past the nominal step end.
    pub fn eval_unchecked(&self, t: f64) -> GaitSample {
        let mut q = Vector5::zeros();
        let mut qdot = Vector5::zeros();
        let mut qddot = Vector5::zeros();
        for k in 0..5 {
            let a = self.alpha.row(k);
            // Horner for value and both derivatives.
            let (mut p, mut dp, mut ddp) = (a[DEGREE], 0.0, 0.0);
            for i in (0..DEGREE).rev() {
                ddp = ddp * t + 2.0 * dp;
                dp = dp * t + p;
                p = p * t + a[i];
            }
            q[k] = p;
            qdot[k] = dp;
            qddot[k] = ddp;
        }
        GaitSample { q, qdot, qddot }
    }

    /// Uniform grid of `n` instants covering `[0, T]`, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.duration } else { self.duration * i as f64 / last })
            .collect()
    }

    /// Coefficients flattened joint-major, 25 values.
    pub fn flat_coefficients(&self) -> Vec<f64> {
        (0..5)
            .flat_map(|k| (0..COEFFS_PER_JOINT).map(move |i| (k, i)))
            .map(|(k, i)| self.alpha[(k, i)])
            .collect()
    }

    pub fn from_flat(coefficients: &[f64], duration: f64) -> Result<Self> {
        if coefficients.len() != 5 * COEFFS_PER_JOINT {
            return Err(GaitError::Parse(format!(
                "expected {} coefficients, got {}",
                5 * COEFFS_PER_JOINT,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(GaitError::Parse("coefficients must be finite".into()));
        }
        Self::new(Coefficients::from_row_slice(coefficients), duration)
    }
}

/// Serialized form of a gait: 25 joint-major coefficients and the step
/// duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitRecord {
    pub coefficients: Vec<f64>,
    pub duration: f64,
}

impl GaitRecord {
    pub fn to_gait(&self) -> Result<PolynomialGait> {
        PolynomialGait::from_flat(&self.coefficients, self.duration)
    }
}

impl From<&PolynomialGait> for GaitRecord {
    fn from(gait: &PolynomialGait) -> Self {
        Self { coefficients: gait.flat_coefficients(), duration: gait.duration }
    }
}

/// Build a gait from the free coefficients: `α_{k,0}` reproduces `q_init`
/// and `α_{k,4}` is solved so that `q(T) = q_final`.
pub fn assemble_gait(
    z: &FreeParams,
    q_init: &Vector5<f64>,
    q_final: &Vector5<f64>,
    duration: f64,
) -> Result<PolynomialGait> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(GaitError::invalid("step duration must be positive and finite"));
    }
    let t = duration;
    let mut alpha = Coefficients::zeros();
    for k in 0..5 {
        alpha[(k, 0)] = q_init[k];
        let mut reached = q_init[k];
        let mut tp = 1.0;
        for i in 1..=FREE_PER_JOINT {
            tp *= t;
            let a = z.0[k * FREE_PER_JOINT + i - 1];
            alpha[(k, i)] = a;
            reached += a * tp;
        }
        alpha[(k, DEGREE)] = (q_final[k] - reached) / (tp * t);
    }
    PolynomialGait::new(alpha, duration)
}

/// Inverse of [`assemble_gait`]'s packing.
pub fn extract_free_params(gait: &PolynomialGait) -> FreeParams {
    let mut z = SVector::zeros();
    for k in 0..5 {
        for i in 1..=FREE_PER_JOINT {
            z[k * FREE_PER_JOINT + i - 1] = gait.alpha[(k, i)];
        }
    }
    FreeParams(z)
}
