mod common;

use common::{cyclic_permutation, gaussian_matrix, tp_matrix};
use cvdp::classify::ssr_verdict;
use cvdp::signvar::{s_minus, s_plus, sc_minus, sc_plus};
use cvdp::vdp::{
    check_nonstandard_vdp, check_prop_sv1, check_scvdp, check_svdp, check_weak_cvdp, gaussian_kernel, sample_vector,
    Relation, SampleBudget,
};
use cvdp::Matrix;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-9;

fn budget(seed: u64) -> Option<SampleBudget> {
    Some(SampleBudget { num_samples: 10_000, seed })
}

fn nonsingular<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let a = gaussian_matrix(rng, n, n);
        if a.determinant().abs() > 1e-3 {
            return a;
        }
    }
}

/// A failed verdict carries a witness that really violates the inequality.
#[test]
fn failing_verdicts_carry_valid_witnesses() {
    let mut rng = common::rng(31);
    for i in 0..300 {
        let n = rng.random_range(2..=5);
        let a = nonsingular(&mut rng, n);
        let verdicts = [
            check_scvdp(&a, TOL, budget(i)).unwrap(),
            check_weak_cvdp(&a, TOL, budget(i)).unwrap(),
            check_svdp(&a, TOL, budget(i)).unwrap(),
            check_nonstandard_vdp(&a, n / 2, TOL, budget(i)).unwrap(),
        ];
        let relations = [Relation::Scvdp, Relation::WeakCvdp, Relation::Svdp, Relation::Nonstandard(n / 2)];
        for (v, rel) in verdicts.iter().zip(relations) {
            if let Some(w) = &v.counterexample {
                let ax = &a * DVector::from_column_slice(&w.x);
                assert!(rel.violation(&w.x, ax.as_slice(), TOL).is_some());
            }
            if !v.holds {
                assert!(v.counterexample.is_some(), "{rel:?} fails without a witness\n{a}");
            }
        }
    }
}

/// Any pair that satisfies the linear inequality also satisfies the cyclic one.
#[test]
fn non_cyclic_implies_cyclic() {
    let mut rng = common::rng(32);
    let mut hits = 0;
    for _ in 0..20_000 {
        let n = rng.random_range(2..=6);
        let a = gaussian_matrix(&mut rng, n, n);
        let x = sample_vector(&mut rng, n);
        let ax = &a * DVector::from_column_slice(&x);
        if s_plus(ax.as_slice(), TOL) <= s_minus(&x, TOL) {
            hits += 1;
            assert!(sc_plus(ax.as_slice(), TOL) <= sc_minus(&x, TOL));
        }
    }
    assert!(hits > 1000);
}

#[test]
fn cyclic_permutation_invariance() {
    let mut rng = common::rng(33);
    for i in 0..200 {
        let n = rng.random_range(3..=5);
        let a = match i % 3 {
            0 => tp_matrix(&mut rng, n),
            1 => common::uniform_matrix(&mut rng, n, 0.1, 1.0),
            _ => nonsingular(&mut rng, n),
        };
        let (k1, k2) = (rng.random_range(0..n), rng.random_range(0..n));
        let p1 = cyclic_permutation(n, k1);
        let p2 = cyclic_permutation(n, k2);
        let b = &p1 * &a * p2.transpose();
        assert_eq!(
            check_scvdp(&a, TOL, None).unwrap().holds,
            check_scvdp(&b, TOL, None).unwrap().holds,
            "{a}"
        );
    }
}

/// A weak-CVDP matrix smoothed by the Gaussian kernel becomes strictly signed
/// in every odd order.
#[test]
fn gaussian_smoothing_of_weak_cvdp() {
    let mut rng = common::rng(34);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(2..=5);
        // nonnegative with zeros: often weak but not strict
        let a = Matrix::from_fn(n, n, |_, _| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.1..1.0) });
        if a.determinant().abs() < 1e-3 || !check_weak_cvdp(&a, TOL, None).unwrap().holds {
            continue;
        }
        checked += 1;
        for y in [1.0, 5.0] {
            let b = gaussian_kernel(n, y).unwrap() * &a;
            for r in (1..=n).step_by(2) {
                assert!(ssr_verdict(&b, r, 0.0).unwrap().is_strict(), "y = {y}, r = {r}\n{a}");
            }
        }
    }
}

#[test]
fn nonstandard_vdp_sweep() {
    let mut rng = common::rng(35);
    for i in 0..200 {
        let n = rng.random_range(2..=5);
        let a = if i % 2 == 0 { tp_matrix(&mut rng, n) } else { nonsingular(&mut rng, n) };
        for p in 0..n {
            let v = check_nonstandard_vdp(&a, p, TOL, budget(i)).unwrap();
            assert_eq!(v.holds, ssr_verdict(&a, p + 1, TOL).unwrap().is_strict());
            assert_eq!(v.sample_agrees, Some(true), "p = {p}\n{a}");
        }
    }
}

#[test]
fn prop_sv1_on_kernel_columns() {
    let mut rng = common::rng(36);
    for i in 0..50 {
        let n = rng.random_range(3..=6);
        let m = rng.random_range(1..n);
        let cols: Vec<usize> = {
            let mut c: Vec<usize> = (0..n).collect();
            while c.len() > m {
                c.remove(rng.random_range(0..c.len()));
            }
            c
        };
        // steeper kernels put genuine entries of Uc below the zero threshold
        let f = gaussian_kernel(n, rng.random_range(0.2..0.6)).unwrap();
        let u = Matrix::from_fn(n, m, |r, k| f[(r, cols[k])]);
        let v = check_prop_sv1(&u, TOL, budget(i)).unwrap();
        assert!(v.holds);
        assert_eq!(v.sample_agrees, Some(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), mseed in any::<u64>()) {
        let mut rng = common::rng(mseed);
        let a = nonsingular(&mut rng, 4);
        let b = SampleBudget { num_samples: 5000, seed };
        let r1 = check_scvdp(&a, TOL, Some(b)).unwrap();
        let r2 = check_scvdp(&a, TOL, Some(b)).unwrap();
        prop_assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }
}
