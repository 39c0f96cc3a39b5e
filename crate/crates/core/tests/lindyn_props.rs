mod common;

use common::{expm_taylor, max_abs, q_plus_matrix};
use cvdp::compound::{add_compound, mult_compound};
use cvdp::lindyn::{
    check_positivity_condition, compound_transition, simulate, transition, transition_matrix,
    transition_matrix_exact, verify_cvds, verify_tpds, GeneratorSpec, Interpolation, LtvSystem, SimOptions,
};
use cvdp::monitor::{EventKind, MonitorOptions};
use cvdp::{Error, Matrix};
use rand::Rng;

fn q_plus_5x5() -> Matrix {
    Matrix::from_row_slice(
        5,
        5,
        &[
            -4., 1., 0., 0., 0., //
            2., -4., 4., 0., 0., //
            0., 3.5, -4., 2.5, 0., //
            0., 0., 0., -4., 1., //
            1.25, 0., 0., 1.5, -4.,
        ],
    )
}

#[test]
fn rk4_matches_taylor_exponential() {
    let mut rng = common::rng(41);
    let sys = LtvSystem::constant(q_plus_5x5()).unwrap();
    let phi = transition_matrix(&sys, 0.0, 0.1, 1e-3).unwrap();
    let oracle = expm_taylor(&(q_plus_5x5() * 0.1));
    assert!(max_abs(&(phi - &oracle)) <= 1e-8 * max_abs(&oracle));
    for _ in 0..30 {
        let n = rng.random_range(1..=6);
        let a = common::gaussian_matrix(&mut rng, n, n);
        let sys = LtvSystem::constant(a.clone()).unwrap();
        let oracle = expm_taylor(&a);
        let rk = transition_matrix(&sys, 0.0, 1.0, 1e-3).unwrap();
        let ex = transition_matrix_exact(&sys, 0.0, 1.0).unwrap();
        assert!(max_abs(&(rk - &oracle)) <= 1e-8 * max_abs(&oracle).max(1.0));
        assert!(max_abs(&(ex - &oracle)) <= 1e-10 * max_abs(&oracle).max(1.0));
    }
}

#[test]
fn first_order_expansion() {
    let a = Matrix::from_row_slice(2, 2, &[0.3, -1.2, 2.0, 0.7]);
    let d = 1e-3;
    let phi = transition_matrix(&LtvSystem::constant(a.clone()).unwrap(), 0.0, d, d).unwrap();
    let lin = Matrix::identity(2, 2) + &a * d;
    assert!(max_abs(&(phi - lin)) <= 10.0 * d * d);
}

#[test]
fn identity_at_start_and_step_check() {
    let sys = LtvSystem::constant(q_plus_5x5()).unwrap();
    assert_eq!(transition_matrix(&sys, 1.0, 1.0, 1e-3).unwrap(), Matrix::identity(5, 5));
    assert!(matches!(transition_matrix(&sys, 0.0, 0.01, 0.1), Err(Error::StepTooLarge { .. })));
}

fn piecewise(rng: &mut impl Rng, n: usize, pieces: usize) -> LtvSystem {
    let mats = (0..pieces).map(|_| common::gaussian_matrix(rng, n, n)).collect();
    let bps = (1..pieces).map(|k| k as f64 * 0.37).collect();
    LtvSystem::piecewise_constant(bps, mats).unwrap()
}

#[test]
fn cocycle() {
    let mut rng = common::rng(42);
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let systems = [
            LtvSystem::constant(common::gaussian_matrix(&mut rng, n, n)).unwrap(),
            piecewise(&mut rng, n, 4),
        ];
        for sys in &systems {
            let (t0, t1, t2) = (0.0, 0.55, 1.3);
            let full = transition(sys, t0, t2, 1e-3).unwrap();
            let split = transition(sys, t1, t2, 1e-3).unwrap() * transition(sys, t0, t1, 1e-3).unwrap();
            assert!(max_abs(&(&full - split)) <= 1e-7 * max_abs(&full).max(1.0));
            // the RK4 route obeys the same law
            let rk = transition_matrix(sys, t1, t2, 1e-3).unwrap() * transition_matrix(sys, t0, t1, 1e-3).unwrap();
            assert!(max_abs(&(&full - rk)) <= 1e-7 * max_abs(&full).max(1.0));
        }
    }
}

#[test]
fn sampled_generator_rk4_cocycle_and_hold_equivalence() {
    let mut rng = common::rng(43);
    let n = 3;
    let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let mats: Vec<Matrix> = times.iter().map(|_| common::gaussian_matrix(&mut rng, n, n)).collect();
    let lin = LtvSystem::sampled(times.clone(), mats.clone(), Interpolation::Linear).unwrap();
    let full = transition_matrix(&lin, 0.0, 1.0, 1e-3).unwrap();
    let split = transition_matrix(&lin, 0.4, 1.0, 1e-3).unwrap() * transition_matrix(&lin, 0.0, 0.4, 1e-3).unwrap();
    assert!(max_abs(&(&full - split)) <= 1e-7 * max_abs(&full).max(1.0));
    let hold = LtvSystem::sampled(times.clone(), mats.clone(), Interpolation::Hold).unwrap();
    let pw = LtvSystem::piecewise_constant(times[1..].to_vec(), mats).unwrap();
    let a = transition_matrix(&hold, 0.0, 1.0, 1e-3).unwrap();
    let b = transition_matrix_exact(&pw, 0.0, 1.0).unwrap();
    assert!(max_abs(&(a - b)) <= 1e-8);
}

#[test]
fn compound_consistency() {
    let mut rng = common::rng(44);
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let sys = LtvSystem::constant(common::gaussian_matrix(&mut rng, n, n) * 0.7).unwrap();
        let phi = transition_matrix(&sys, 0.0, 0.8, 1e-3).unwrap();
        for p in 1..=n {
            let via_dyn = compound_transition(&sys, p, 0.0, 0.8, 1e-3).unwrap().entries;
            let via_phi = mult_compound(&phi, p).unwrap().entries;
            assert!(max_abs(&(via_dyn - via_phi)) <= 1e-6 * max_abs(&phi).max(1.0).powi(p as i32));
        }
        let top = compound_transition(&sys, n, 0.0, 0.8, 1e-3).unwrap().entries[(0, 0)];
        let liouville = (0.8 * add_compound(&sys.eval(0.0), n).unwrap().entries[(0, 0)]).exp();
        assert!((top - liouville).abs() <= 1e-8 * liouville.max(1.0));
    }
}

#[test]
fn q_plus_compound_dynamics_positive() {
    let mut rng = common::rng(45);
    for _ in 0..10 {
        let sys = LtvSystem::constant(q_plus_matrix(&mut rng, 5)).unwrap();
        let c = compound_transition(&sys, 3, 0.0, 0.5, 1e-3).unwrap();
        assert!(c.entries.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn verify_cvds_examples() {
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let sys = LtvSystem::constant(q_plus_5x5()).unwrap();
    assert!(verify_cvds(&sys, 0.0, &grid, 1e-3, 0.0).unwrap().holds);

    let bad = Matrix::from_row_slice(3, 3, &[-1., 1., -0.5, 1., -1., 1., 1., 1., -1.]);
    let v = verify_cvds(&LtvSystem::constant(bad).unwrap(), 0.0, &[1e-3, 1e-2], 1e-4, 0.0).unwrap();
    let w = v.first_violation.expect("order-1 violation");
    assert_eq!((w.order, w.rows.one_based(), w.cols.one_based()), (1, vec![1], vec![3]));
    assert!(w.value < 0.0);

    let mut rng = common::rng(46);
    for _ in 0..10 {
        let n = rng.random_range(2..=5);
        let a = Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => rng.random_range(-2.0..0.5),
            1 => rng.random_range(0.2..2.0),
            _ => 0.0,
        });
        let sys = LtvSystem::constant(a).unwrap();
        assert!(verify_tpds(&sys, 0.0, &[0.05, 0.3, 1.0], 1e-3, 0.0).unwrap().holds);
    }
}

/// Piecewise-constant generators switching among Q⁺ matrices keep all odd
/// minors of the transition matrix positive.
#[test]
fn switched_q_plus_systems_are_cvds() {
    let mut rng = common::rng(47);
    for _ in 0..20 {
        let n = rng.random_range(3..=6);
        let mats: Vec<Matrix> = (0..4).map(|_| q_plus_matrix(&mut rng, n)).collect();
        let sys = LtvSystem::piecewise_constant(vec![0.2, 0.5, 0.7], mats).unwrap();
        let grid = [0.1, 0.3, 0.6, 0.9, 1.5];
        assert!(verify_cvds(&sys, 0.0, &grid, 1e-3, 0.0).unwrap().holds);
    }
}

#[test]
fn positivity_condition() {
    let a = Matrix::from_row_slice(3, 3, &[-1., 1., 0., 0., -1., 1., 1., 0., -1.]);
    assert!(check_positivity_condition(&LtvSystem::constant(a.clone()).unwrap(), 0.0, 0.5, 1e-3, 0.0).unwrap());

    let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 2.0, 0.5]));
    assert!(!check_positivity_condition(&LtvSystem::constant(d).unwrap(), 0.0, 0.5, 1e-3, 0.0).unwrap());

    // the union graph 1→2→1 is strongly connected, each piece is not
    let up = Matrix::from_row_slice(2, 2, &[-1., 1., 0., -1.]);
    let down = Matrix::from_row_slice(2, 2, &[-1., 0., 1., -1.]);
    let sys = LtvSystem::piecewise_constant(vec![1.0], vec![up, down]).unwrap();
    assert!(!check_positivity_condition(&sys, 0.0, 0.8, 1e-3, 0.0).unwrap());
    let phi = transition(&sys, 0.0, 0.8, 1e-3).unwrap();
    assert_eq!(phi[(1, 0)], 0.0);
    assert!(check_positivity_condition(&sys, 0.0, 1.5, 1e-3, 0.0).unwrap());

    let neg = Matrix::from_row_slice(2, 2, &[0., -1., 1., 0.]);
    let r = check_positivity_condition(&LtvSystem::constant(neg).unwrap(), 0.0, 0.5, 1e-3, 0.0);
    assert!(matches!(r, Err(Error::NotMetzler { row: 1, col: 2, .. })));
}

fn assert_cvds_trajectory(traj: &cvdp::monitor::Trajectory, n: usize) {
    let scm = traj.sc_minus_series();
    let scp = traj.sc_plus_series();
    assert!(scm.windows(2).all(|w| w[1] <= w[0]));
    assert!(scp.windows(2).all(|w| w[1] <= w[0]));
    // the chain inequality is stated for t > t0
    for (k, c) in traj.counts.iter().enumerate().skip(1) {
        assert!(c.sc_plus <= scm[0], "chain inequality at sample {k}");
    }
    let drops: Vec<_> = traj.events_of(EventKind::ScMinusDrop).collect();
    assert!(drops.len() <= n / 2);
    for e in &drops {
        assert!(e.after.sc_minus + 2 <= e.before.sc_minus);
    }
    assert_eq!(traj.events_of(EventKind::ScMinusRise).count(), 0);
}

#[test]
fn cvds_simulations_are_monotone() {
    let mut rng = common::rng(48);
    for _ in 0..30 {
        let n = rng.random_range(3..=6);
        let sys = LtvSystem::constant(q_plus_matrix(&mut rng, n)).unwrap();
        let x0 = cvdp::vdp::sample_vector(&mut rng, n);
        let opts = SimOptions { monitor: MonitorOptions { step: 1e-2, ..Default::default() }, record_phi: false };
        let traj = simulate(&sys, &x0, 0.0, 3.0, &opts).unwrap();
        assert_cvds_trajectory(&traj, n);
    }
}

#[test]
fn simulate_errors_and_phi() {
    let sys = LtvSystem::constant(q_plus_5x5()).unwrap();
    assert!(matches!(simulate(&sys, &[0.0; 5], 0.0, 1.0, &SimOptions::default()), Err(Error::ZeroInitialCondition)));
    let opts = SimOptions { monitor: MonitorOptions { step: 0.1, ..Default::default() }, record_phi: true };
    let traj = simulate(&sys, &[1.0, 0.0, 0.0, 0.0, 0.0], 0.0, 1.0, &opts).unwrap();
    let phi = traj.phi.as_ref().unwrap();
    assert_eq!(phi.len(), traj.times.len());
    let last = cvdp::io::matrix_from_rows(phi.last().unwrap()).unwrap();
    let oracle = expm_taylor(&q_plus_5x5());
    assert!(max_abs(&(last - oracle)) <= 1e-9);

    let blow = LtvSystem::constant(Matrix::identity(2, 2) * 50.0).unwrap();
    let r = simulate(&blow, &[1.0, 1.0], 0.0, 1.0, &SimOptions::default());
    assert!(matches!(r, Err(Error::NumericalAbort(_))));
}

#[test]
fn system_spec_round_trip() {
    let mut rng = common::rng(49);
    let sys = piecewise(&mut rng, 3, 3);
    let spec = GeneratorSpec::from(&sys);
    let json = serde_json::to_string(&spec).unwrap();
    let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back.build().unwrap(), sys);
}
