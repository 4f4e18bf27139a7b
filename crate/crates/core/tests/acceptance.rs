//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process exits non-zero if any criterion other than the desk-scale learning
//! check fails; that one is reported but not enforced (see README).

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use qdeeponet::attention::{banded_conv, sigmoid};
use qdeeponet::cli::init_model;
use qdeeponet::operator_net::GateMode;
use qdeeponet::pde_data::{BurgersSolver, GrfConfig};
use qdeeponet::qsim::Program;
use qdeeponet::training::{batch_loss_and_grad, draw_batch};
use qdeeponet::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose failure is reported without failing the run.
const REPORT_ONLY: &[u32] = &[8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "parameter-count fidelity", c1_counts),
        (2, "ansatz difference reproduction", c2_differences),
        (3, "gradient suite", c3_gradients),
        (4, "simulator physics", c4_physics),
        (5, "attention correctness", c5_attention),
        (6, "solver suite", c6_solvers),
        (7, "grf spectrum", c7_spectrum),
        (8, "desk-scale learning", c8_learning),
        (9, "structural reductions", c9_reductions),
        (10, "determinism", c10_determinism),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut enforced_failures = 0;
    for (id, name, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} ({:.1}s)",
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass && !REPORT_ONLY.contains(&id) {
            enforced_failures += 1;
        }
    }
    if enforced_failures > 0 {
        eprintln!("{enforced_failures} enforced criteria failed");
        std::process::exit(1);
    }
}

fn closed_forms(kind: AnsatzKind, n: usize, l: usize) -> (usize, usize) {
    match kind {
        AnsatzKind::NearestNeighbour => (4 * n * l, n * l),
        AnsatzKind::AllToAll => (n * (n + 3) * l, n * (n - 1) * l),
        AnsatzKind::CircuitBlock => (3 * n * l, n * l),
    }
}

fn c1_counts() -> Outcome {
    let t = Instant::now();
    let mut mismatches = 0;
    let mut cases = 0;
    for kind in AnsatzKind::ALL {
        for n in 2..=12 {
            for l in 1..=4 {
                let spec = build_ansatz(kind, n, l).unwrap();
                // Walk the gate list directly.
                let params = spec
                    .gates()
                    .iter()
                    .filter(|g| matches!(g.slot, Some(Slot::Param(_))))
                    .count();
                let two = spec.gates().iter().filter(|g| g.control.is_some()).count();
                cases += 1;
                if (params, two) != closed_forms(kind, n, l) || count_summary(&spec) != (params, two) {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 1.0,
        format!("{cases} cases, {mismatches} mismatches, {secs:.3}s"),
    )
}

fn c2_differences() -> Outcome {
    let total = |kind: AnsatzKind| {
        let mut run = RunConfig::default();
        run.ansatz = kind;
        assert_eq!((run.qubits, run.depth, run.subnets), (10, 2, 4));
        init_model(&run).unwrap().count_parameters().total() as i64
    };
    let cb = total(AnsatzKind::CircuitBlock);
    let nn = total(AnsatzKind::NearestNeighbour) - cb;
    let a2a = total(AnsatzKind::AllToAll) - cb;
    outcome(
        nn == 100 && a2a == 1000,
        format!("nearest-neighbour - circuit-block = {nn}, all-to-all - circuit-block = {a2a}"),
    )
}

fn fd_expectations(program: &Program, z: &[f64], theta: &[f64], h: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let eval = |z: &[f64], th: &[f64]| expectations_z(&run_circuit(program, z, th).unwrap());
    let mut d_theta = Vec::new();
    for j in 0..theta.len() {
        let (mut p, mut m) = (theta.to_vec(), theta.to_vec());
        p[j] += h;
        m[j] -= h;
        let (ep, em) = (eval(z, &p), eval(z, &m));
        d_theta.push(ep.iter().zip(&em).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let mut d_z = Vec::new();
    for i in 0..z.len() {
        let (mut p, mut m) = (z.to_vec(), z.to_vec());
        p[i] += h;
        m[i] -= h;
        let (ep, em) = (eval(&p, theta), eval(&m, theta));
        d_z.push(ep.iter().zip(&em).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    (d_theta, d_z)
}

fn c3_gradients() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let kind = AnsatzKind::ALL[rng.gen_range(0..3)];
        let n = rng.gen_range(2..=6);
        let l = rng.gen_range(1..=2);
        let spec = build_ansatz(kind, n, l).unwrap();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
        let theta: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let g = circuit_gradients(spec.program(), &z, &theta).unwrap();
        let (fd_t, fd_z) = fd_expectations(spec.program(), &z, &theta, 1e-5);
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for v in 0..n {
            for (j, row) in fd_t.iter().enumerate() {
                diff = diff.max((g.d_param(v, j) - row[v]).abs());
                scale = scale.max(row[v].abs());
            }
            for (i, row) in fd_z.iter().enumerate() {
                diff = diff.max((g.d_input(v, i) - row[v]).abs());
                scale = scale.max(row[v].abs());
            }
        }
        worst = worst.max(diff / scale.max(1e-12));
    }

    let model_rel = model_gradient_check();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst < 1e-5 && model_rel < 1e-4 && secs < 120.0,
        format!("circuit max rel {worst:.2e}, model max rel {model_rel:.2e}, {secs:.1}s"),
    )
}

/// Finite differences of the batch MSE over every parameter of a tiny model.
fn model_gradient_check() -> f64 {
    let run = RunConfig::parse(
        "qubits = 2\ndepth = 1\nhidden = 4\nsubnets = 4\nlatent = 8\n\
         grid = 16\nsensor_grid = 4\nn_train = 3\nn_test = 1\nqueries_per_sample = 4\n\
         ansatz = \"all-to-all\"\nseed = 11",
    )
    .unwrap();
    let data = build_dataset(&run.data_config()).unwrap();
    let mut model = init_model(&run).unwrap();
    model.branch.gate.w = vec![0.4, -0.7, 0.9];
    let groups = draw_batch(data.train(), 0, 0, 0);
    let (_, grad) = batch_loss_and_grad(&model, data.train(), &groups).unwrap();
    let base = model.params();
    let h = 1e-5;
    let mut loss_at = |p: &[f64]| {
        model.load_params(p).unwrap();
        batch_loss_and_grad(&model, data.train(), &groups).unwrap().0
    };
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..base.len() {
        let (mut p, mut m) = (base.clone(), base.clone());
        p[j] += h;
        m[j] -= h;
        let fd = (loss_at(&p) - loss_at(&m)) / (2.0 * h);
        diff = diff.max((fd - grad[j]).abs());
        scale = scale.max(fd.abs());
    }
    diff / scale
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> (Gate, Option<f64>) {
    let target = rng.gen_range(0..n);
    let mut control = rng.gen_range(0..n - 1);
    if control >= target {
        control += 1;
    }
    let angle = Some(rng.gen_range(-TAU..TAU));
    let p = Slot::Param(0);
    match rng.gen_range(0..7) {
        0 => (Gate::rx(target, p), angle),
        1 => (Gate::ry(target, p), angle),
        2 => (Gate::rz(target, p), angle),
        3 => (Gate::crx(control, target, p), angle),
        4 => (Gate::crz(control, target, p), angle),
        5 => (Gate::cnot(control, target), None),
        _ => (Gate::h(target), None),
    }
}

fn c4_physics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut state = StateVector::zero(6).unwrap();
    let mut worst_norm: f64 = 0.0;
    let mut bounded = true;
    for step in 0..1000 {
        let (g, a) = random_gate(&mut rng, 6);
        state.apply_gate(&g, a).unwrap();
        if step % 50 == 49 {
            worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());
            bounded &= state.expectations_z().iter().all(|e| (-1.0..=1.0).contains(e));
        }
    }
    worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());

    // One trainable gate between fixed random layers. Single-qubit rotations
    // use the two-term shift rule; controlled rotations the four-term rule.
    let mut worst_shift: f64 = 0.0;
    for case in 0..40 {
        let n = 3;
        let mut gates = Vec::new();
        let mut fixed = 0;
        for q in 0..n {
            gates.push(Gate::ry(q, Slot::Input(fixed)));
            fixed += 1;
        }
        gates.push(Gate::cnot(0, 1));
        let kind = case % 5;
        let target = rng.gen_range(0..n);
        let control = (target + 1 + rng.gen_range(0..n - 1)) % n;
        gates.push(match kind {
            0 => Gate::rx(target, Slot::Param(0)),
            1 => Gate::ry(target, Slot::Param(0)),
            2 => Gate::rz(target, Slot::Param(0)),
            3 => Gate::crx(control, target, Slot::Param(0)),
            _ => Gate::crz(control, target, Slot::Param(0)),
        });
        for q in 0..n {
            gates.push(Gate::rx(q, Slot::Input(fixed)));
            fixed += 1;
        }
        gates.push(Gate::cnot(2, 0));
        let program = Program::new(n, gates, fixed, 1).unwrap();
        let z: Vec<f64> = (0..fixed).map(|_| rng.gen_range(-PI..PI)).collect();
        let th = rng.gen_range(0.0..TAU);
        let f = |t: f64| expectations_z(&run_circuit(&program, &z, &[t]).unwrap());
        let shifted: Vec<f64> = if kind < 3 {
            let (p, m) = (f(th + PI / 2.0), f(th - PI / 2.0));
            p.iter().zip(&m).map(|(a, b)| (a - b) / 2.0).collect()
        } else {
            let s2 = 2f64.sqrt();
            let (c1, c2) = ((s2 + 1.0) / (4.0 * s2), (s2 - 1.0) / (4.0 * s2));
            let (p1, m1) = (f(th + PI / 2.0), f(th - PI / 2.0));
            let (p3, m3) = (f(th + 3.0 * PI / 2.0), f(th - 3.0 * PI / 2.0));
            (0..n)
                .map(|v| c1 * (p1[v] - m1[v]) - c2 * (p3[v] - m3[v]))
                .collect()
        };
        let g = circuit_gradients(&program, &z, &[th]).unwrap();
        for (v, s) in shifted.iter().enumerate() {
            worst_shift = worst_shift.max((g.d_param(v, 0) - s).abs());
        }
    }
    outcome(
        worst_norm < 1e-10 && bounded && worst_shift < 1e-9,
        format!("norm drift {worst_norm:.1e}, expectations bounded {bounded}, shift-vs-adjoint {worst_shift:.1e}"),
    )
}

fn c5_attention() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut open_interval = true;
    for &x in &[-1e4, -800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0, 1e4] {
        let s = sigmoid(x);
        open_interval &= s > 0.0 && s < 1.0;
    }
    let mut counts_ok = true;
    let mut worst_toeplitz: f64 = 0.0;
    for r in 1..=32 {
        let mut gate = AttentionGate::new(r, 2.0, 1.0, Padding::Circular).unwrap();
        counts_ok &= gate.param_count() == kernel_size(r, 2.0, 1.0).unwrap();
        gate.w = (0..gate.k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let h: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..5).map(|_| rng.gen_range(-20.0..20.0)).collect())
            .collect();
        let omega = gate.attention_weights(&gap(&SubnetStack::from_rows(&h).unwrap())).unwrap();
        open_interval &= omega.iter().all(|&w| w > 0.0 && w < 1.0);

        // Dense circulant matrix with the band from w.
        let half = gate.k / 2;
        let z: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dense = vec![vec![0.0; r]; r];
        for (i, row) in dense.iter_mut().enumerate() {
            for (o, &wo) in gate.w.iter().enumerate() {
                let j = (i + r * 2 + half - o) % r;
                row[j] += wo;
            }
        }
        let (banded, _) = banded_conv(&gate.w, &z, Padding::Circular);
        for i in 0..r {
            let want: f64 = (0..r).map(|j| dense[i][j] * z[j]).sum();
            worst_toeplitz = worst_toeplitz.max((want - banded[i]).abs());
        }
    }
    // log2(r)/2 + 1/2 = 1, 1.5, 2, 2.5 round half away to 1, 2, 2, 3;
    // evens bump to 3 and every value is within the largest odd <= r.
    let ks: Vec<usize> = [2, 4, 8, 16].iter().map(|&r| kernel_size(r, 2.0, 1.0).unwrap()).collect();
    let ks_ok = ks == [1, 3, 3, 3];
    outcome(
        open_interval && counts_ok && worst_toeplitz < 1e-12 && ks_ok,
        format!(
            "omega in (0,1) {open_interval}, count = k {counts_ok}, toeplitz err {worst_toeplitz:.1e}, k(2,4,8,16) = {ks:?}"
        ),
    )
}

fn grf(n: usize, corr: f64, seed: u64) -> Field2D {
    sample_grf(&GrfConfig {
        n,
        amplitude: 1.0,
        corr_x: corr,
        corr_y: corr,
        smoothing: 1.0,
        lo: -0.5,
        hi: 0.5,
        seed,
    })
    .unwrap()
}

fn c6_solvers() -> Outcome {
    let n = 32;
    let (mx, my) = (3.0, -2.0);
    let (vx, vy, t) = (1.0, 0.5, 0.37);
    let u0 = Field2D::from_fn(n, |x, y| (TAU * (mx * x + my * y)).sin());
    let ut = solve_advection(&u0, vx, vy, t);
    let exact = Field2D::from_fn(n, |x, y| (TAU * (mx * (x - vx * t) + my * (y - vy * t))).sin());
    let adv_err = ut
        .values()
        .iter()
        .zip(exact.values())
        .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));

    let nu = 0.01;
    let u0 = grf(n, 0.4, 6);
    let solver = BurgersSolver::new(n, nu).unwrap();
    let dt = solver.stable_dt(&u0);
    let slices = solver.slices(&u0, 51, 1.0, 50, dt).unwrap();
    let mean_drift = slices.iter().fold(0.0f64, |a, f| a.max((f.mean() - u0.mean()).abs()));
    let energy_ok = slices.windows(2).all(|w| w[1].energy() <= w[0].energy());

    let (a, _) = solver.solve(&u0, 0.5, dt).unwrap();
    let (b, _) = solver.solve(&u0, 0.5, dt / 2.0).unwrap();
    let num: f64 = a.values().iter().zip(b.values()).map(|(p, q)| (p - q) * (p - q)).sum();
    let den: f64 = b.values().iter().map(|q| q * q).sum();
    let dt_rel = (num / den).sqrt();
    outcome(
        adv_err < 1e-10 && mean_drift < 1e-10 && dt_rel < 1e-6 && energy_ok,
        format!(
            "advection err {adv_err:.1e}, burgers mean drift {mean_drift:.1e}, dt vs dt/2 {dt_rel:.1e}, energy non-increasing {energy_ok}"
        ),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Naive 2D DFT power, kept independent of the library's FFT.
fn dft_power(f: &Field2D) -> Vec<f64> {
    let n = f.n();
    let tw: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / n as f64)).collect();
    let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for kx in 0..n {
            rows[j * n + kx] = (0..n).map(|i| tw[(i * kx) % n] * f.at(i, j)).sum();
        }
    }
    let mut power = vec![0.0; n * n];
    for ky in 0..n {
        for kx in 0..n {
            let c: Complex64 = (0..n).map(|j| tw[(j * ky) % n] * rows[j * n + kx]).sum();
            power[ky * n + kx] = c.norm_sqr();
        }
    }
    power
}

fn c7_spectrum() -> Outcome {
    let (n, corr) = (32, 0.2);
    let bins = n / 2;
    let mut emp = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for s in 0..200 {
        let f = grf(n, corr, 7000 + s);
        let p = dft_power(&f);
        for ky in 0..n {
            for kx in 0..n {
                let fx = if kx <= n / 2 { kx as f64 } else { kx as f64 - n as f64 };
                let fy = if ky <= n / 2 { ky as f64 } else { ky as f64 - n as f64 };
                let b = (fx * fx + fy * fy).sqrt().round() as usize;
                if (1..bins).contains(&b) {
                    emp[b] += p[ky * n + kx];
                    hits[b] += 1;
                }
            }
        }
    }
    let mut e = Vec::new();
    let mut model = Vec::new();
    for b in 1..bins {
        e.push(emp[b] / hits[b] as f64);
        let k = TAU * b as f64;
        model.push((-((k * corr).powi(2) + (k * corr).powi(2)) / 2.0).exp());
    }
    let rho = pearson(&e, &model);
    outcome(rho > 0.9, format!("radial spectrum correlation {rho:.4} over 200 samples"))
}

fn c8_learning() -> Outcome {
    let run = RunConfig::parse(
        "equation = \"advection\"\ngrid = 32\nsensor_grid = 8\nn_train = 500\nn_test = 200\n\
         qubits = 4\ndepth = 2\nsubnets = 4\nansatz = \"circuit-block\"\nepochs = 3000\neval_every = 3000",
    )
    .unwrap();
    let t = Instant::now();
    let data = build_dataset(&run.data_config()).unwrap();
    let mut model = init_model(&run).unwrap();
    let log = train(&mut model, &data, &run.train_config()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let (first, last) = (log.rows.first().unwrap(), log.rows.last().unwrap());
    let ratio = last.train_loss / first.train_loss;
    outcome(
        ratio < 0.1 && last.test_rel_l2 < 0.15 && secs < 1800.0,
        format!(
            "loss {:.3e} -> {:.3e} (ratio {ratio:.3}), test rel L2 {:.1}%, {secs:.0}s",
            first.train_loss,
            last.train_loss,
            100.0 * last.test_rel_l2
        ),
    )
}

fn c9_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = ModelConfig {
        ansatz: AnsatzKind::CircuitBlock,
        qubits: 3,
        depth: 2,
        hidden: 6,
        subnets: 1,
        sensors: 12,
        latent: 5,
        query_dim: 3,
        gamma: 2.0,
        beta: 1.0,
        padding: Padding::Circular,
        slicing: operator_net::Slicing::Contiguous,
        gate_mode: GateMode::Bypass,
        outer_tanh: false,
    };
    let model = OperatorModel::init(&cfg, &mut rng).unwrap();
    let mut identical = true;
    let mut halved = true;
    for _ in 0..20 {
        let u: Vec<f64> = (0..12).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let y = [rng.gen(), rng.gen(), rng.gen()];
        let b = model.branch.subnets[0].forward(&u).unwrap();
        let t = model.trunk.layer.forward(&y).unwrap();
        let vanilla: f64 = b.output().iter().zip(t.output()).map(|(p, q)| p * q).sum();
        identical &= model.predict(&u, &y).unwrap().to_bits() == vanilla.to_bits();
    }

    let mut cfg4 = cfg.clone();
    cfg4.subnets = 4;
    cfg4.latent = 8;
    let bypass = OperatorModel::init(&cfg4, &mut rng).unwrap();
    let mut gated = bypass.clone();
    gated.branch.gate_mode = GateMode::Attention;
    assert!(gated.branch.gate.w.iter().all(|&w| w == 0.0));
    for _ in 0..20 {
        let u: Vec<f64> = (0..12).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let a = bypass.branch_forward(&u).unwrap();
        let g = gated.branch_forward(&u).unwrap();
        halved &= a.output().iter().zip(g.output()).all(|(x, y)| 0.5 * x == *y);
    }
    outcome(
        identical && halved,
        format!("r=1 bypass equals vanilla bitwise {identical}, w=0 halves bitwise {halved}"),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_qdeeponet"))
        .current_dir(dir)
        .arg("--threads")
        .arg(threads)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

fn pipeline(dir: &Path, threads: &str) {
    std::fs::write(
        dir.join("run.toml"),
        "grid = 16\nsensor_grid = 4\nn_train = 12\nn_test = 4\nqueries_per_sample = 10\n\
         qubits = 3\ndepth = 1\nhidden = 6\nlatent = 8\nepochs = 12\neval_every = 4\n\
         batch_size = 16\ncheckpoint_every_eval = true\nseed = 5\n",
    )
    .unwrap();
    run_cli(dir, threads, &["gen-data", "--config", "run.toml", "--out", "data.bin"]);
    run_cli(dir, threads, &["train", "--config", "run.toml", "--data", "data.bin", "--out-dir", "out"]);
    run_cli(dir, threads, &["eval", "--ckpt", "out/checkpoint.bin", "--data", "data.bin", "--out", "eval.csv"]);
    run_cli(dir, threads, &["export-sample", "--data", "data.bin", "--index", "3", "--out", "sample.csv"]);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c10_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "3");
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let same = ta == tb;
    outcome(
        same && ta.len() > 6,
        format!("{} artifacts, byte-identical across re-runs (1 vs 3 threads) {same}", ta.len()),
    )
}
