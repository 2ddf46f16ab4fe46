//! Impact map checked against a direct impulse–momentum solve and the
//! momentum balance of the pinned chain.

mod common;

use approx::assert_relative_eq;
use biped_gait::impact::{impact_velocity_map, relabel_state, RelabelMaps};
use biped_gait::model::{forward_kinematics, kinetic_energy, mass_matrix, swing_foot_jacobian, RobotParams};
use nalgebra::{Matrix5, Vector2, Vector5};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn impact_agrees_with_linear_system_and_stops_the_foot() {
    let p = RobotParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let q = common::random_ground_contact(&mut rng, &p);
        let qd = common::random_vector(&mut rng, 3.0);
        let out = impact_velocity_map(&q, &qd, &p).unwrap();
        let j = swing_foot_jacobian(&q, &p);
        assert!((j * out.qdot_plus).norm() <= 1e-9);
        let (qd_ref, f_ref) = common::impact_by_linear_system(&q, &qd, &mass_matrix(&q, &p), &j);
        assert!((out.qdot_plus - qd_ref).amax() <= 1e-10 * qd_ref.amax().max(1.0));
        assert!((out.impulse - f_ref).amax() <= 1e-10 * f_ref.amax().max(1.0));
        assert!(kinetic_energy(&q, &out.qdot_plus, &p) <= kinetic_energy(&q, &qd, &p) + 1e-12);
        assert_eq!(out.qdot_minus, qd);
    }
}

/// The pinned model keeps the stance foot fixed through the impact, so the
/// stance pivot also delivers an impulse. Angular momentum about the new
/// contact then changes by exactly that impulse's moment.
#[test]
fn angular_momentum_balance_about_contact() {
    let p = RobotParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let q = common::random_ground_contact(&mut rng, &p);
        let qd = common::random_vector(&mut rng, 3.0);
        let out = impact_velocity_map(&q, &qd, &p).unwrap();
        let contact = forward_kinematics(&q, &p).swing_foot;
        let before = common::angular_momentum(&q, &qd, contact, &p);
        let after = common::angular_momentum(&q, &out.qdot_plus, contact, &p);
        let pivot_impulse = common::linear_momentum(&q, &out.qdot_plus, &p)
            - common::linear_momentum(&q, &qd, &p)
            - out.impulse;
        let arm: Vector2<f64> = -contact;
        let moment = arm.x * pivot_impulse.y - arm.y * pivot_impulse.x;
        assert_relative_eq!(after - before, moment, epsilon = 1e-8 * before.abs().max(1.0));
    }
}

#[test]
fn relabel_involution_and_table4() {
    let maps = RelabelMaps::new();
    assert_eq!(maps.r * maps.r, Matrix5::identity());
    assert_eq!(maps.gamma * maps.gamma, Matrix5::identity());
    let q_final = Vector5::new(0.4754, 0.3073, -0.0064, 0.6499, 0.3073);
    let q_init = Vector5::new(-0.1681, 0.3073, -0.6499, 0.0064, 0.3073);
    let (q, _) = relabel_state(&q_final, &Vector5::zeros(), &maps);
    assert_eq!((q[1], q[4]), (0.3073, 0.3073));
    assert_eq!((q[2], q[3]), (-q_final[3], -q_final[2]));
    assert_relative_eq!(q, q_init, epsilon = 1e-12);

    // The new stance foot is the old contact point; hip height is unchanged.
    let p = RobotParams::default();
    let old = forward_kinematics(&q_final, &p);
    let new = forward_kinematics(&q, &p);
    assert_relative_eq!(new.hip.y, old.hip.y, epsilon = 1e-12);
    assert_relative_eq!(new.swing_foot, -old.swing_foot, epsilon = 1e-12);
}
