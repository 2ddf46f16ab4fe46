//! Plastic swing-foot impact and the stance/swing relabeling.

use nalgebra::{Matrix2, Matrix5, Vector2, Vector5};

use crate::error::{GaitError, Result};
use crate::model::{
    accumulation_matrix, mass_matrix, relative_from_absolute_matrix, swing_foot_jacobian,
    swing_foot_position, RobotParams,
};
use crate::polynomial::PolynomialGait;

/// Maximum swing-foot height accepted as "on the ground" at impact.
pub const GROUND_TOLERANCE: f64 = 1e-8;

/// Condition number of `J M⁻¹ Jᵀ` above which the contact is treated as
/// degenerate.
const MAX_CONTACT_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactOutcome {
    pub qdot_plus: Vector5<f64>,
    /// Ground impulse at the new contact point, N·s.
    pub impulse: Vector2<f64>,
    pub qdot_minus: Vector5<f64>,
}

/// Coordinate changes applied when the legs swap roles.
#[derive(Debug, Clone, PartialEq)]
pub struct RelabelMaps {
    /// Absolute to relative angles.
    pub h: Matrix5<f64>,
    /// Old absolute angles to new absolute angles.
    pub gamma: Matrix5<f64>,
    /// `H Γ H⁻¹`, acting on relative angles and rates.
    pub r: Matrix5<f64>,
}

impl Default for RelabelMaps {
    fn default() -> Self {
        Self::new()
    }
}

impl RelabelMaps {
    pub fn new() -> Self {
        let h = relative_from_absolute_matrix();
        // Absolute angles run along each link from its lower joint to its
        // upper one, so swapping legs just reverses the link order.
        let gamma = Matrix5::from_fn(|i, j| if i + j == 4 { 1.0 } else { 0.0 });
        let r = h * gamma * accumulation_matrix();
        Self { h, gamma, r }
    }
}

/// Velocity jump of a plastic, non-slipping swing-foot impact with the
/// stance foot still pinned.
pub fn impact_velocity_map(
    q_minus: &Vector5<f64>,
    qdot_minus: &Vector5<f64>,
    params: &RobotParams,
) -> Result<ImpactOutcome> {
    let height = swing_foot_position(q_minus, params).y;
    if height.abs() > GROUND_TOLERANCE {
        return Err(GaitError::SwingFootOffGround { height });
    }
    impact_rates(q_minus, qdot_minus, params)
}

/// [`impact_velocity_map`] without the ground-contact precondition. The
/// constraint machinery uses it on trial gaits whose boundary configuration
/// may be off the ground.
pub(crate) fn impact_rates(
    q_minus: &Vector5<f64>,
    qdot_minus: &Vector5<f64>,
    params: &RobotParams,
) -> Result<ImpactOutcome> {
    let m = mass_matrix(q_minus, params);
    let j = swing_foot_jacobian(q_minus, params);
    let chol = m.cholesky().expect("mass matrix is positive definite");
    // M⁻¹ Jᵀ, 5×2
    let minv_jt = chol.solve(&j.transpose());
    let contact: Matrix2<f64> = j * minv_jt;
    let eig = contact.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONTACT_CONDITION {
        return Err(GaitError::RankDeficient { condition: if lo > 0.0 { hi / lo } else { f64::INFINITY } });
    }
    let v_e = j * qdot_minus;
    let impulse = contact
        .cholesky()
        .ok_or(GaitError::RankDeficient { condition: hi / lo })?
        .solve(&(-v_e));
    Ok(ImpactOutcome {
        qdot_plus: qdot_minus + minv_jt * impulse,
        impulse,
        qdot_minus: *qdot_minus,
    })
}

/// Re-express a state in the chart of the other leg.
pub fn relabel_state(
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    maps: &RelabelMaps,
) -> (Vector5<f64>, Vector5<f64>) {
    (maps.r * q, maps.r * qdot)
}

/// Relabeled post-impact rates at `t = T` minus the rates at `t = 0`;
/// zero for a periodic gait.
pub fn impact_invariance_residual(
    gait: &PolynomialGait,
    params: &RobotParams,
    maps: &RelabelMaps,
) -> Result<Vector5<f64>> {
    let start = gait.eval_unchecked(0.0);
    let end = gait.eval_unchecked(gait.duration);
    let outcome = impact_rates(&end.q, &end.qdot, params)?;
    Ok(maps.r * outcome.qdot_plus - start.qdot)
}
