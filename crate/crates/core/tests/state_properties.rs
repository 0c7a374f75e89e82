use proptest::prelude::*;
use qlwe_core::qsim::{
    apply_relabel_phase, measure, measure_in_basis, qft, qft_inverse, rejection_sample,
    trace_distance_pure, PureState, Register, Unitary,
};
use qlwe_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn amps(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn cyclic_state(max: usize) -> impl Strategy<Value = PureState> {
    (2..max).prop_flat_map(amps).prop_map(|a| PureState::cyclic(a, 0.0).unwrap())
}

/// Two cyclic registers of sizes `p` and `q`.
fn two_registers() -> impl Strategy<Value = PureState> {
    (2usize..7, 2usize..7).prop_flat_map(|(p, q)| (amps(p), amps(q))).prop_map(|(a, b)| {
        PureState::cyclic(a, 0.0).unwrap().tensor(&PureState::cyclic(b, 0.0).unwrap()).unwrap()
    })
}

fn max_gap(a: &PureState, b: &PureState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn qft_preserves_norm(state in two_registers(), reg in 0usize..2) {
        prop_assert!((qft(&state, reg).unwrap().norm() - 1.0).abs() < 1e-12);
        prop_assert!((qft_inverse(&state, reg).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qft_fourth_power_is_identity(state in cyclic_state(24)) {
        let mut s = state.clone();
        for _ in 0..4 {
            s = qft(&s, 0).unwrap();
        }
        prop_assert!(max_gap(&s, &state) < 1e-10);
    }

    #[test]
    fn qft_inverse_undoes_qft(state in two_registers(), reg in 0usize..2) {
        let back = qft_inverse(&qft(&state, reg).unwrap(), reg).unwrap();
        prop_assert!(max_gap(&back, &state) < 1e-12);
    }

    #[test]
    fn relabel_phase_preserves_norm(state in cyclic_state(12), shift in 0usize..12, turns in prop::collection::vec(0.0f64..1.0, 12)) {
        let q = state.amplitudes().len();
        let out = apply_relabel_phase(&state, 0, Register::Cyclic(q as u64), |x| {
            Some(((x + shift) % q, Complex64::from_polar(1.0, std::f64::consts::TAU * turns[x])))
        })
        .unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        prop_assert!(trace_distance_pure(&out, &state).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn basis_measurement_preserves_norm(state in two_registers(), phi in 0.0f64..6.3, seed in any::<u64>()) {
        let qubit = PureState::cyclic(state.amplitudes()[..2].to_vec(), 0.0);
        prop_assume!(qubit.is_ok());
        let qubit = qubit.unwrap().tensor(&state).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (_, post) = measure_in_basis(&qubit, 0, &Unitary::rotated_hadamard(phi), &mut rng).unwrap();
        prop_assert!((post.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_triangle(a in amps(6), b in amps(6), c in amps(6)) {
        let (a, b, c) = (
            PureState::cyclic(a, 0.0).unwrap(),
            PureState::cyclic(b, 0.0).unwrap(),
            PureState::cyclic(c, 0.0).unwrap(),
        );
        let d = |x: &PureState, y: &PureState| trace_distance_pure(x, y).unwrap();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        prop_assert!(d(&a, &a) < 1e-7);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
    }
}

#[test]
fn measurement_marginals_match_born_rule() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let amps: Vec<Complex64> = (0..12)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let state = PureState::cyclic(amps[..4].to_vec(), 0.0)
        .unwrap()
        .tensor(&PureState::cyclic(amps[4..].to_vec(), 0.0).unwrap())
        .unwrap();
    let draws = 1_000_000;
    for reg in 0..2 {
        let exact = state.marginal(reg).unwrap();
        let mut counts = vec![0u64; exact.len()];
        for _ in 0..draws {
            counts[measure(&state, reg, &mut rng).unwrap().0] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.01, "register {reg}: tv {tv}");
    }
}

#[test]
fn rejection_rate_matches_success_probability() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let state = PureState::cyclic(
        (0..8).map(|k| Complex64::from_polar(1.0 + k as f64, 0.3 * k as f64)).collect(),
        0.0,
    )
    .unwrap();
    let gamma: Vec<f64> = (0..8).map(|k| if k % 3 == 0 { 0.9 } else { 0.2 }).collect();
    let trials = 100_000;
    let mut accepted = 0;
    let mut m = 0.0;
    for _ in 0..trials {
        let out = rejection_sample(&state, 0, &gamma, &mut rng).unwrap();
        m = out.success_probability;
        accepted += out.state.is_some() as u64;
    }
    let se = (m * (1.0 - m) / trials as f64).sqrt();
    assert!((accepted as f64 / trials as f64 - m).abs() <= 3.0 * se);
}
