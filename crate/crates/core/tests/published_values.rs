//! Built-in defaults pinned to the published RABBIT testbed parameters, GA
//! settings, problem bounds and step configurations.

use biped_gait::constraints::GaitProblemConfig;
use biped_gait::model::RobotParams;
use biped_gait::optimizer::{GaConfig, RefineConfig};

#[test]
fn robot_parameters() {
    let p = RobotParams::default();
    assert_eq!(p.masses, [3.2, 6.8, 20.0, 6.8, 3.2]);
    assert_eq!(p.inertias, [0.93, 1.08, 2.22, 1.08, 0.93]);
    assert_eq!(p.lengths, [0.4, 0.4, 0.625, 0.4, 0.4]);
    assert_eq!(p.com_offsets, [0.128, 0.163, 0.2, 0.163, 0.128]);
}

#[test]
fn genetic_search_settings() {
    let ga = GaConfig::default();
    assert_eq!(ga.population, 300);
    assert_eq!(ga.initial_range, 12.0);
    assert_eq!(ga.elite_count, 15);
    assert_eq!(ga.crossover_fraction, 0.8);
    assert_eq!(ga.migration_fraction, 0.2);
    assert_eq!(ga.stall_generations, 50);
    assert_eq!(ga.max_evaluations, 10401);
}

#[test]
fn refinement_settings() {
    let r = RefineConfig::default();
    assert_eq!(r.max_iterations, 20);
    assert_eq!(r.violation_tolerance, 0.01);
}

#[test]
fn problem_bounds_and_boundary_configurations() {
    let c = GaitProblemConfig::default();
    assert_eq!(c.rate_max, 5.0);
    assert_eq!(c.torque_max, 150.0);
    assert_eq!(c.step_length, 0.5);
    assert_eq!(c.velocity, 1.0);
    assert_eq!(c.friction, 0.7);
    assert_eq!(c.violation_threshold, 0.01);
    assert_eq!(c.q_init, [-0.1681, 0.3073, -0.6499, 0.0064, 0.3073]);
    assert_eq!(c.q_final, [0.4754, 0.3073, -0.0064, 0.6499, 0.3073]);
    assert_eq!(c.duration(), 0.5);
}
