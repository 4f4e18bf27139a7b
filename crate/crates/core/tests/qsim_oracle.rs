use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qdeeponet::qsim::Program;
use qdeeponet::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<C>>;

fn single(kind: GateKind, a: f64) -> [[C; 2]; 2] {
    let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
    let z = C::new(0.0, 0.0);
    let r = |x: f64| C::new(x, 0.0);
    let i = |x: f64| C::new(0.0, x);
    match kind {
        GateKind::RX | GateKind::CRX => [[r(c), i(-s)], [i(-s), r(c)]],
        GateKind::RY => [[r(c), r(-s)], [r(s), r(c)]],
        GateKind::RZ | GateKind::CRZ => [[C::from_polar(1.0, -a / 2.0), z], [z, C::from_polar(1.0, a / 2.0)]],
        GateKind::CNOT => [[z, r(1.0)], [r(1.0), z]],
        GateKind::H => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            [[r(h), r(h)], [r(h), r(-h)]]
        }
    }
}

/// Full `2^n × 2^n` matrix of one gate, little-endian basis.
fn full(n: usize, g: &Gate, angle: f64) -> Mat {
    let dim = 1 << n;
    let u = single(g.kind, angle);
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let active = g.control.map_or(true, |c| col >> c & 1 == 1);
        if !active {
            m[col][col] = C::new(1.0, 0.0);
            continue;
        }
        let bit = col >> g.target & 1;
        for out_bit in 0..2 {
            let row = (col & !(1 << g.target)) | (out_bit << g.target);
            m[row][col] += u[out_bit][bit];
        }
    }
    m
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == C::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn angle_of(g: &Gate, z: &[f64], theta: &[f64]) -> f64 {
    match g.slot {
        Some(Slot::Input(i)) => z[i],
        Some(Slot::Param(j)) => theta[j],
        None => 0.0,
    }
}

fn oracle_state(program: &Program, z: &[f64], theta: &[f64]) -> Vec<C> {
    let n = program.n_qubits();
    let dim = 1 << n;
    let mut u: Mat = (0..dim)
        .map(|i| (0..dim).map(|j| C::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    for g in program.gates() {
        u = matmul(&full(n, g, angle_of(g, z, theta)), &u);
    }
    (0..dim).map(|i| u[i][0]).collect()
}

#[test]
fn ansatz_circuits_match_dense_matrix_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for kind in AnsatzKind::ALL {
        for n in 2..=4 {
            for l in 1..=2 {
                let spec = build_ansatz(kind, n, l).unwrap();
                let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
                let th: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
                let got = run_circuit(spec.program(), &z, &th).unwrap();
                let want = oracle_state(spec.program(), &z, &th);
                for (a, b) in got.amplitudes().iter().zip(&want) {
                    assert!((a - b).norm() < 1e-12, "{kind:?} n={n} L={l}");
                }
                // <Z_v> = Σ_b |a_b|² (1 − 2 bit_v(b)).
                let e = expectations_z(&got);
                for (v, ev) in e.iter().enumerate() {
                    let w: f64 = want
                        .iter()
                        .enumerate()
                        .map(|(b, a)| a.norm_sqr() * if b >> v & 1 == 1 { -1.0 } else { 1.0 })
                        .sum();
                    assert!((ev - w).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn mixed_gate_programs_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let n = 3;
        let mut gates = Vec::new();
        let mut params = 0;
        for _ in 0..15 {
            let t = rng.gen_range(0..n);
            let c = (t + rng.gen_range(1..n)) % n;
            let g = match rng.gen_range(0..7) {
                0 => Gate::rx(t, Slot::Param(params)),
                1 => Gate::ry(t, Slot::Param(params)),
                2 => Gate::rz(t, Slot::Param(params)),
                3 => Gate::crx(c, t, Slot::Param(params)),
                4 => Gate::crz(c, t, Slot::Param(params)),
                5 => Gate::cnot(c, t),
                _ => Gate::h(t),
            };
            if g.slot.is_some() {
                params += 1;
            }
            gates.push(g);
        }
        let program = Program::new(n, gates, 0, params).unwrap();
        let th: Vec<f64> = (0..params).map(|_| rng.gen_range(-TAU..TAU)).collect();
        let got = program.run(&[], &th).unwrap();
        let want = oracle_state(&program, &[], &th);
        for (a, b) in got.amplitudes().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn malformed_gates_are_rejected() {
    let mut s = StateVector::zero(2).unwrap();
    assert!(matches!(s.apply_gate(&Gate::rx(2, Slot::Param(0)), Some(0.1)), Err(Error::QubitOutOfRange { .. })));
    assert!(matches!(s.apply_gate(&Gate::crx(1, 1, Slot::Param(0)), Some(0.1)), Err(Error::ControlIsTarget { .. })));
    assert!(s.apply_gate(&Gate::rx(0, Slot::Param(0)), None).is_err());
    let spec = build_ansatz(AnsatzKind::CircuitBlock, 3, 1).unwrap();
    assert!(run_circuit(spec.program(), &[0.0; 2], &vec![0.0; spec.param_count()]).is_err());
    assert!(run_circuit(spec.program(), &[0.0; 3], &[0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_preserve_norm_and_bound_expectations(
        seed in any::<u64>(),
        kind in 0usize..3,
        n in 2usize..=6,
        l in 1usize..=3,
    ) {
        let spec = build_ansatz(AnsatzKind::ALL[kind], n, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let th: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let s = run_circuit(spec.program(), &z, &th).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let p: f64 = s.probabilities().iter().sum();
        prop_assert!((p - 1.0).abs() < 1e-12);
        for e in expectations_z(&s) {
            prop_assert!((-1.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn angle_periodicity_is_4pi(seed in any::<u64>(), n in 2usize..=4) {
        // exp(-iθP/2) has period 4π; expectations have period 2π.
        let spec = build_ansatz(AnsatzKind::CircuitBlock, n, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let th: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let shifted: Vec<f64> = th.iter().map(|t| t + 2.0 * TAU).collect();
        let a = run_circuit(spec.program(), &z, &th).unwrap();
        let b = run_circuit(spec.program(), &z, &shifted).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-11);
        }
    }
}
