use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qrc_core::dynamics::{general_solution_node, GaussianDrive, InputSignal, NodeMode};
use qrc_core::encodings::{Affine, KrausChannel, ParamChannel};
use qrc_core::linearity::{affine_fit, default_grid, probe_discrete, PriorEnsemble, Tolerances, Verdict};
use qrc_core::operator::random::random_unitary;
use qrc_core::operator::{make_basis, BasisKind, DensityMatrix};
use qrc_core::reservoir::{
    run_continuous_gaussian, run_discrete, stm_capacity, stm_inputs, DiscreteReservoir, GaussianReservoir,
};

#[test]
fn coupled_register_outperforms_memoryless_baseline() {
    let inputs = stm_inputs(2000, 17);
    let delays = [0, 1, 2, 3, 4];
    let memoryless = DiscreteReservoir::new(
        ParamChannel::reinit_mixed(&[2]).unwrap(),
        make_basis(BasisKind::Pauli { qubits: 1 }).unwrap(),
    )
    .unwrap();
    let baseline = stm_capacity(&memoryless, &inputs, &delays, 1e-8).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let coupled = DiscreteReservoir::new(
        ParamChannel::reinit_mixed(&[2, 2, 2]).unwrap(),
        make_basis(BasisKind::Pauli { qubits: 3 }).unwrap(),
    )
    .unwrap()
    .with_internal(KrausChannel::unitary(random_unitary(8, &mut rng)).unwrap())
    .unwrap();
    let rich = stm_capacity(&coupled, &inputs, &delays, 1e-8).unwrap();
    assert!(baseline.capacity < 1.05, "{baseline:?}");
    assert!(rich.capacity > baseline.capacity + 0.5, "{rich:?} vs {baseline:?}");
}

#[test]
fn nodes_are_affine_in_the_current_input_at_fixed_history() {
    // Linear input channel followed by a unitary (unital) internal map.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let damp = KrausChannel::amplitude_damping(0.4).unwrap();
    let damp2 = KrausChannel::new(
        damp.ops().iter().map(|k| qrc_core::operator::tensor(k, &qrc_core::operator::identity(2))).collect(),
    )
    .unwrap();
    let weights = vec![Affine::new(1.0, vec![-1.0]), Affine::identity()];
    let input = ParamChannel::channel_mixture(vec![KrausChannel::identity(4), damp2.clone()], weights.clone(), &[2, 2]).unwrap();
    let internal = KrausChannel::unitary(random_unitary(4, &mut rng)).unwrap();
    let basis = make_basis(BasisKind::Pauli { qubits: 2 }).unwrap();
    let res = DiscreteReservoir::new(input, basis.clone()).unwrap().with_internal(internal.clone()).unwrap();

    let history: Vec<Vec<f64>> = stm_inputs(6, 1).into_iter().map(|u| vec![u]).collect();
    let (_, prior) = res.run_from(res.initial(), &history).unwrap();
    let grid = default_grid(&[(0.0, 1.0)]);
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|u| {
            let mut seq = history.clone();
            seq.push(u.clone());
            let nodes = run_discrete(&res, &seq).unwrap();
            nodes.values.row(seq.len() - 1).iter().copied().collect()
        })
        .collect();

    // The composed step map is again a channel mixture.
    let composed = ParamChannel::channel_mixture(
        vec![internal.clone(), internal.compose(&damp2).unwrap()],
        weights,
        &[2, 2],
    )
    .unwrap();
    for (u, row) in grid.iter().zip(&rows) {
        let direct = basis.expectations(&composed.apply(u, &prior).unwrap()).unwrap().real();
        for (a, b) in row.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    for k in 0..basis.len() {
        let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        assert!(affine_fit(&grid, &column).unwrap().max_abs_residual < 1e-12);
    }
    let run = probe_discrete(&composed, &basis, &PriorEnsemble::default_with_seed(4), &grid, &Tolerances::default()).unwrap();
    assert_eq!(run.report.overall(), Verdict::Linear);
}

#[test]
fn echo_state_with_partial_reinit_and_mixing() {
    // Re-initializing one qubit of two, coupled by a random unitary: the
    // initial condition fades but is not erased in one step.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let res = DiscreteReservoir::new(
        ParamChannel::reinit_mixed(&[2, 2]).unwrap(),
        make_basis(BasisKind::Pauli { qubits: 2 }).unwrap(),
    )
    .unwrap()
    .with_internal(KrausChannel::unitary(random_unitary(4, &mut rng)).unwrap())
    .unwrap();
    let inputs: Vec<Vec<f64>> = stm_inputs(300, 3).into_iter().map(|u| vec![u]).collect();
    let a = DensityMatrix::ginibre(&[2, 2], &mut rng);
    let b = DensityMatrix::haar_pure(&[2, 2], &mut rng);
    let d = qrc_core::reservoir::echo_state_distances(&res, &inputs, &a, &b).unwrap();
    assert!(d[0] > 1e-6);
    assert!(d[299] < 1e-10, "{}", d[299]);
}

#[test]
fn piecewise_drive_matches_closed_form_node() {
    let (gamma, cx) = (0.7, 1.2);
    let drive = GaussianDrive::new(Affine::new(0.1, vec![cx]), Affine::constant(0.0, 1), gamma).unwrap();
    let res = GaussianReservoir::new(drive, false).unwrap();
    let values: Vec<Vec<f64>> = stm_inputs(8, 5).into_iter().map(|u| vec![u]).collect();
    let signal = InputSignal::held_steps(0.0, 0.75, values).unwrap();
    let times: Vec<f64> = (1..=12).map(|k| 0.5 * k as f64).collect();
    let x = run_continuous_gaussian(&res, &signal, &times).unwrap().column("X").unwrap();
    let f = Affine::new(0.1, vec![cx]);
    let oracle = general_solution_node(&f, NodeMode::Damped { gamma }, &signal, 0.0, 0.0, &times, 32).unwrap();
    for (a, b) in x.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-8);
    }
}
