//! Dense statevector simulator.
//!
//! Basis ordering is little-endian: qubit `v` is bit `v` of the basis index.
//! Rotations follow `R_P(θ) = exp(-iθP/2)`. Gradients come from an adjoint
//! sweep over the gate program (one forward pass, one reverse pass).

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

type C = Complex64;
type Mat2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    CRX,
    CRZ,
    CNOT,
    H,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CRX => "CRX",
            GateKind::CRZ => "CRZ",
            GateKind::CNOT => "CNOT",
            GateKind::H => "H",
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRX | GateKind::CRZ
        )
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::CRX | GateKind::CRZ | GateKind::CNOT)
    }
}

/// Where a parameterized gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Slot {
    /// Component of the encoded input vector `z`.
    Input(usize),
    /// Entry of the trainable angle vector `θ`.
    Param(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub slot: Option<Slot>,
}

impl Gate {
    fn rot(kind: GateKind, target: usize, slot: Slot) -> Self {
        Gate {
            kind,
            target,
            control: None,
            slot: Some(slot),
        }
    }

    pub fn rx(target: usize, slot: Slot) -> Self {
        Self::rot(GateKind::RX, target, slot)
    }

    pub fn ry(target: usize, slot: Slot) -> Self {
        Self::rot(GateKind::RY, target, slot)
    }

    pub fn rz(target: usize, slot: Slot) -> Self {
        Self::rot(GateKind::RZ, target, slot)
    }

    pub fn crx(control: usize, target: usize, slot: Slot) -> Self {
        Gate {
            kind: GateKind::CRX,
            target,
            control: Some(control),
            slot: Some(slot),
        }
    }

    pub fn crz(control: usize, target: usize, slot: Slot) -> Self {
        Gate {
            kind: GateKind::CRZ,
            target,
            control: Some(control),
            slot: Some(slot),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::CNOT,
            target,
            control: Some(control),
            slot: None,
        }
    }

    pub fn h(target: usize) -> Self {
        Gate {
            kind: GateKind::H,
            target,
            control: None,
            slot: None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.control.is_some()
    }

    /// Checks the structural invariants of the gate against a register size.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let name = self.kind.name();
        if self.target >= n_qubits {
            return Err(Error::QubitOutOfRange {
                index: self.target,
                n_qubits,
            });
        }
        match (self.kind.is_controlled(), self.control) {
            (true, Some(c)) => {
                if c >= n_qubits {
                    return Err(Error::QubitOutOfRange { index: c, n_qubits });
                }
                if c == self.target {
                    return Err(Error::ControlIsTarget {
                        kind: name,
                        target: self.target,
                    });
                }
            }
            (true, None) => {
                return Err(Error::InvalidArgument(format!("{name} requires a control qubit")))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!("{name} takes no control qubit")))
            }
            (false, None) => {}
        }
        match (self.kind.is_parameterized(), self.slot.is_some()) {
            (true, false) => Err(Error::AngleMismatch {
                kind: name,
                detail: "is parameterized but has no parameter slot",
            }),
            (false, true) => Err(Error::AngleMismatch {
                kind: name,
                detail: "is fixed but carries a parameter slot",
            }),
            _ => Ok(()),
        }
    }

    /// Unitary acting on the target (restricted to control = 1 when controlled).
    fn matrix(&self, angle: f64) -> Mat2 {
        match self.kind {
            GateKind::RX | GateKind::CRX => rx_matrix(angle),
            GateKind::RY => ry_matrix(angle),
            GateKind::RZ | GateKind::CRZ => rz_matrix(angle),
            GateKind::CNOT => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::H => {
                let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
        }
    }

    /// Derivative of `matrix` with respect to the angle.
    fn d_matrix(&self, angle: f64) -> Mat2 {
        let (s, c) = (angle / 2.0).sin_cos();
        match self.kind {
            GateKind::RX | GateKind::CRX => [
                [C::new(-s / 2.0, 0.0), C::new(0.0, -c / 2.0)],
                [C::new(0.0, -c / 2.0), C::new(-s / 2.0, 0.0)],
            ],
            GateKind::RY => [
                [C::new(-s / 2.0, 0.0), C::new(-c / 2.0, 0.0)],
                [C::new(c / 2.0, 0.0), C::new(-s / 2.0, 0.0)],
            ],
            GateKind::RZ | GateKind::CRZ => [
                [C::new(-s / 2.0, -c / 2.0), ZERO],
                [ZERO, C::new(-s / 2.0, c / 2.0)],
            ],
            GateKind::CNOT | GateKind::H => [[ZERO, ZERO], [ZERO, ZERO]],
        }
    }

    /// Inverse of the gate at the given angle.
    fn inverse_matrix(&self, angle: f64) -> Mat2 {
        match self.kind {
            GateKind::CNOT | GateKind::H => self.matrix(angle),
            _ => self.matrix(-angle),
        }
    }
}

fn rx_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C::new(c, 0.0), C::new(0.0, -s)],
        [C::new(0.0, -s), C::new(c, 0.0)],
    ]
}

fn ry_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C::new(c, 0.0), C::new(-s, 0.0)],
        [C::new(s, 0.0), C::new(c, 0.0)],
    ]
}

fn rz_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C::new(c, -s), ZERO], [ZERO, C::new(c, s)]]
}

/// Applies `m` to `target`, restricted to the control = 1 subspace when a
/// control is given. With `zero_uncontrolled`, amplitudes in the control = 0
/// subspace are cleared instead of left alone (used for gate derivatives).
fn apply_mat2(
    amps: &mut [C],
    target: usize,
    control: Option<usize>,
    m: &Mat2,
    zero_uncontrolled: bool,
) {
    let tbit = 1usize << target;
    let cmask = control.map_or(0, |c| 1usize << c);
    for i in 0..amps.len() {
        if i & tbit != 0 {
            continue;
        }
        let j = i | tbit;
        if i & cmask != cmask {
            if zero_uncontrolled {
                amps[i] = ZERO;
                amps[j] = ZERO;
            }
            continue;
        }
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a0 + m[0][1] * a1;
        amps[j] = m[1][0] * a0 + m[1][1] * a1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 24 {
            return Err(Error::InvalidArgument(format!(
                "n_qubits must be in 1..=24, got {n_qubits}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the vector must have length `2^n` and unit norm.
    pub fn from_amplitudes(amps: Vec<C>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "amplitudes not normalized (norm^2 = {norm})"
            )));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies one gate in place. `angle` must be given exactly when the
    /// gate is parameterized.
    pub fn apply_gate(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let theta = match (gate.kind.is_parameterized(), angle) {
            (true, Some(a)) => a,
            (false, None) => 0.0,
            (true, None) => {
                return Err(Error::AngleMismatch {
                    kind: gate.kind.name(),
                    detail: "requires an angle",
                })
            }
            (false, Some(_)) => {
                return Err(Error::AngleMismatch {
                    kind: gate.kind.name(),
                    detail: "takes no angle",
                })
            }
        };
        self.apply_unchecked(gate, theta);
        Ok(())
    }

    fn apply_unchecked(&mut self, gate: &Gate, angle: f64) {
        apply_mat2(&mut self.amps, gate.target, gate.control, &gate.matrix(angle), false);
    }

    fn unapply_unchecked(&mut self, gate: &Gate, angle: f64) {
        apply_mat2(
            &mut self.amps,
            gate.target,
            gate.control,
            &gate.inverse_matrix(angle),
            false,
        );
    }

    /// `⟨Z_v⟩` for every qubit `v`.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (v, o) in out.iter_mut().enumerate() {
                if i >> v & 1 == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        out
    }
}

/// A validated gate program on a fixed register, reading angles from an
/// input vector `z` and a trainable vector `θ`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Program {
    n_qubits: usize,
    n_inputs: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl Program {
    /// Validates every gate. Input and parameter counts are the largest
    /// referenced slot index plus one, unless larger counts are requested.
    pub fn new(n_qubits: usize, gates: Vec<Gate>, n_inputs: usize, n_params: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("program needs at least one qubit".into()));
        }
        let mut max_in = 0;
        let mut max_par = 0;
        for g in &gates {
            g.validate(n_qubits)?;
            match g.slot {
                Some(Slot::Input(i)) => max_in = max_in.max(i + 1),
                Some(Slot::Param(j)) => max_par = max_par.max(j + 1),
                None => {}
            }
        }
        if max_in > n_inputs || max_par > n_params {
            return Err(Error::InvalidArgument(format!(
                "program references {max_in} inputs / {max_par} params, declared {n_inputs} / {n_params}"
            )));
        }
        Ok(Program {
            n_qubits,
            n_inputs,
            n_params,
            gates,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn angle(gate: &Gate, z: &[f64], theta: &[f64]) -> f64 {
        match gate.slot {
            Some(Slot::Input(i)) => z[i],
            Some(Slot::Param(j)) => theta[j],
            None => 0.0,
        }
    }

    fn check_args(&self, z: &[f64], theta: &[f64]) -> Result<()> {
        check_len("circuit inputs", self.n_inputs, z.len())?;
        check_len("circuit params", self.n_params, theta.len())
    }

    /// `U(z, θ)|0…0⟩`, gates applied in program order.
    pub fn run(&self, z: &[f64], theta: &[f64]) -> Result<StateVector> {
        self.check_args(z, theta)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        for g in &self.gates {
            state.apply_unchecked(g, Self::angle(g, z, theta));
        }
        Ok(state)
    }

    /// Vector-Jacobian product of the Z expectations by adjoint sweep.
    ///
    /// Given the final state of `run(z, θ)` and weights `g_v`, returns the
    /// gradients of `Σ_v g_v ⟨Z_v⟩` with respect to `θ` and `z`.
    pub fn adjoint_vjp(
        &self,
        final_state: &StateVector,
        z: &[f64],
        theta: &[f64],
        weights: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_args(z, theta)?;
        check_len("final state qubits", self.n_qubits, final_state.n_qubits)?;
        check_len("observable weights", self.n_qubits, weights.len())?;

        let mut d_theta = vec![0.0; self.n_params];
        let mut d_z = vec![0.0; self.n_inputs];

        let mut phi = final_state.clone();
        // λ = M ψ with M = Σ_v g_v Z_v, diagonal in the computational basis.
        let mut lambda = final_state.clone();
        for (i, a) in lambda.amps.iter_mut().enumerate() {
            let m: f64 = weights
                .iter()
                .enumerate()
                .map(|(v, w)| if i >> v & 1 == 0 { *w } else { -*w })
                .sum();
            *a *= m;
        }

        let mut mu = vec![ZERO; phi.amps.len()];
        for g in self.gates.iter().rev() {
            let angle = Self::angle(g, z, theta);
            phi.unapply_unchecked(g, angle);
            if let Some(slot) = g.slot {
                mu.copy_from_slice(&phi.amps);
                apply_mat2(&mut mu, g.target, g.control, &g.d_matrix(angle), true);
                let overlap: f64 = lambda
                    .amps
                    .iter()
                    .zip(&mu)
                    .map(|(l, m)| (l.conj() * m).re)
                    .sum();
                match slot {
                    Slot::Input(i) => d_z[i] += 2.0 * overlap,
                    Slot::Param(j) => d_theta[j] += 2.0 * overlap,
                }
            }
            lambda.unapply_unchecked(g, angle);
        }
        Ok((d_theta, d_z))
    }
}

/// Jacobians of every qubit's Z expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGradients {
    /// Row-major `n_qubits × n_params`.
    pub d_params: Vec<f64>,
    /// Row-major `n_qubits × n_inputs`.
    pub d_inputs: Vec<f64>,
    pub n_params: usize,
    pub n_inputs: usize,
}

impl CircuitGradients {
    pub fn d_param(&self, observable: usize, param: usize) -> f64 {
        self.d_params[observable * self.n_params + param]
    }

    pub fn d_input(&self, observable: usize, input: usize) -> f64 {
        self.d_inputs[observable * self.n_inputs + input]
    }
}

pub fn run_circuit(program: &Program, inputs: &[f64], params: &[f64]) -> Result<StateVector> {
    program.run(inputs, params)
}

pub fn expectations_z(state: &StateVector) -> Vec<f64> {
    state.expectations_z()
}

/// Full Jacobians, one adjoint reverse pass per observable.
pub fn circuit_gradients(program: &Program, z: &[f64], theta: &[f64]) -> Result<CircuitGradients> {
    let state = program.run(z, theta)?;
    let n = program.n_qubits();
    let mut d_params = Vec::with_capacity(n * program.n_params());
    let mut d_inputs = Vec::with_capacity(n * program.n_inputs());
    let mut weights = vec![0.0; n];
    for v in 0..n {
        weights.iter_mut().for_each(|w| *w = 0.0);
        weights[v] = 1.0;
        let (dt, dz) = program.adjoint_vjp(&state, z, theta, &weights)?;
        d_params.extend(dt);
        d_inputs.extend(dz);
    }
    Ok(CircuitGradients {
        d_params,
        d_inputs,
        n_params: program.n_params(),
        n_inputs: program.n_inputs(),
    })
}
