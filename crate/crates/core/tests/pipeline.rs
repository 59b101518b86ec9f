//! End-to-end paths through the public API.

use minentlab::discretize::{covering_partition, greedy_packing_net};
use minentlab::entropy::classical_hmin_success;
use minentlab::learning::{
    induced_joint, map_decoder_success, monte_carlo_risk, prop3_check, Estimator, LearningTask, Loss, Score,
};
use minentlab::quantum::{bell, depolarizing, diagonal_embedding, apply_channel, singlet_fraction_given_decoder};
use minentlab::sdp::channel_from_dual;
use minentlab::{solve_hmin, JointTable, MetricSpace};

#[test]
fn classical_table_through_the_sdp() {
    let t = JointTable::from_nested(&[vec![0.3, 0.05, 0.1], vec![0.05, 0.25, 0.25]]).unwrap();
    let classical = classical_hmin_success(&t).unwrap();
    let sol = solve_hmin(&diagonal_embedding(&t), 1e-9).unwrap();
    // column maxima: 0.3 + 0.25 + 0.25
    assert!((classical.success - 0.8).abs() < 1e-12);
    assert!((sol.primal_value - 0.8).abs() < 1e-7);
}

#[test]
fn recovered_decoder_attains_the_optimum() {
    let noisy = apply_channel(&depolarizing(2, 0.3).unwrap(), &bell(), 1).unwrap();
    let sol = solve_hmin(&noisy, 1e-9).unwrap();
    let decoder = channel_from_dual(&sol).unwrap();
    let achieved = singlet_fraction_given_decoder(&noisy, &decoder).unwrap();
    assert!((achieved - sol.primal_value).abs() < 1e-6, "{achieved} vs {}", sol.primal_value);
    // identity decoding is already optimal for an isotropic state
    let overlap = noisy.overlap_with_pure(&minentlab::quantum::maximally_entangled_vector(2));
    assert!((sol.primal_value - 2.0 * overlap).abs() < 1e-6);
}

#[test]
fn simulated_success_is_at_least_the_cell_hit_rate() {
    let space = MetricSpace::grid_1d(0.0, 0.9, 0.1).unwrap();
    let net = covering_partition(&greedy_packing_net(&space, 0.3).unwrap()).unwrap();
    assert_eq!(net.len(), 4);
    let likelihood = vec![
        vec![0.7, 0.1, 0.1, 0.1],
        vec![0.1, 0.7, 0.1, 0.1],
        vec![0.1, 0.1, 0.7, 0.1],
        vec![0.1, 0.1, 0.1, 0.7],
    ];
    let task = LearningTask::new(net.clone(), likelihood, None, Loss::Squared, Score::Indicator { eps: 0.15 }).unwrap();
    let (exact, _) = map_decoder_success(&induced_joint(&task, &net).unwrap());
    assert!((exact - 0.7).abs() < 1e-12);

    // Decoding the right cell puts the estimate within ε, and a neighbouring
    // center can be within ε too, so the hit rate only bounds from below.
    let mc = monte_carlo_risk(&task, &net, &Estimator::MapCenter, 40_000, 11, 0).unwrap();
    assert!(mc.success >= exact - mc.success_half_width, "{mc:?}");
    assert!(mc.success < 1.0);

    let report = prop3_check(&task, &net).unwrap();
    assert!(report.pass, "{report:?}");
}
