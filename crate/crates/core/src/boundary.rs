//! Geometric validation of the step's boundary configurations.
//!
//! The initial configuration must have the swing foot on the ground one step
//! length behind the stance foot, the final configuration one step length
//! ahead. Configurations failing the check are regenerated from the step
//! geometry by inverse kinematics.

use nalgebra::Vector5;
use serde::{Deserialize, Serialize};

use crate::constraints::GaitProblemConfig;
use crate::error::Result;
use crate::impact::RelabelMaps;
use crate::model::{inverse_kinematics, relative_to_absolute, swing_foot_position, Point, RobotParams};

/// Largest accepted swing-foot height at the step boundaries, m.
pub const HEIGHT_TOLERANCE: f64 = 0.01;
/// Largest accepted error in the horizontal foot separation, m.
pub const STEP_TOLERANCE: f64 = 0.02;
/// Hip distance from each foot, as a fraction of the shorter leg's reach,
/// used when regenerating boundary configurations.
const REGENERATED_LEG_EXTENSION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySource {
    /// The configured angles passed the geometric check.
    Configured,
    /// The configured angles failed and were rebuilt by inverse kinematics.
    Regenerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub source: BoundarySource,
    pub q_init: [f64; 5],
    pub q_final: [f64; 5],
    /// Swing-foot position at the start of the step, m.
    pub init_swing_foot: [f64; 2],
    /// Swing-foot position at the end of the step, m.
    pub final_swing_foot: [f64; 2],
}

fn foot_ok(foot: Point, expected_x: f64) -> bool {
    foot.y.abs() <= HEIGHT_TOLERANCE && (foot.x - expected_x).abs() <= STEP_TOLERANCE
}

/// Whether the configured boundary angles place the swing foot on the
/// ground one step behind (start) and ahead (end) of the stance foot.
pub fn boundary_geometry_ok(problem: &GaitProblemConfig, params: &RobotParams) -> bool {
    let init = swing_foot_position(&problem.q_init(), params);
    let fin = swing_foot_position(&problem.q_final(), params);
    foot_ok(init, -problem.step_length) && foot_ok(fin, problem.step_length)
}

/// Boundary configurations built from the step geometry: hip midway between
/// the feet, legs at a fixed fraction of their reach, trunk at the absolute
/// angle of the configured initial pose. The final pose is the initial pose
/// seen from the other leg, so the pair is consistent with the relabeling.
pub fn regenerate_boundary(
    problem: &GaitProblemConfig,
    params: &RobotParams,
) -> Result<(Vector5<f64>, Vector5<f64>)> {
    let [l1, l2, _, l4, l5] = params.lengths;
    let reach = (l1 + l2).min(l4 + l5) * REGENERATED_LEG_EXTENSION;
    let half = 0.5 * problem.step_length;
    let height = (reach * reach - half * half).max(0.0).sqrt();
    let trunk = relative_to_absolute(&problem.q_init())[2];
    let ik = inverse_kinematics(
        Point::new(-half, height),
        Point::new(-problem.step_length, 0.0),
        trunk,
        params,
    )?;
    let q_final = RelabelMaps::new().r * ik.q;
    Ok((ik.q, q_final))
}

/// Validate the boundary configurations and substitute regenerated ones if
/// they fail. Returns the problem to optimize and a record of the check.
pub fn resolve_boundary(
    problem: &GaitProblemConfig,
    params: &RobotParams,
) -> Result<(GaitProblemConfig, BoundaryCheck)> {
    let mut resolved = problem.clone();
    let source = if boundary_geometry_ok(problem, params) {
        BoundarySource::Configured
    } else {
        let (qi, qf) = regenerate_boundary(problem, params)?;
        log::warn!("boundary configurations fail the step geometry; regenerated by inverse kinematics");
        resolved.q_init = qi.into();
        resolved.q_final = qf.into();
        BoundarySource::Regenerated
    };
    let init = swing_foot_position(&resolved.q_init(), params);
    let fin = swing_foot_position(&resolved.q_final(), params);
    let check = BoundaryCheck {
        source,
        q_init: resolved.q_init,
        q_final: resolved.q_final,
        init_swing_foot: [init.x, init.y],
        final_swing_foot: [fin.x, fin.y],
    };
    Ok((resolved, check))
}
