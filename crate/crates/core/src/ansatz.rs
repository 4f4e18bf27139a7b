//! Angle encoder and the three trainable circuit templates.
//!
//! Every circuit is `W^L(θ)⋯W^1(θ) S(z)`: one RY encoder gate per qubit,
//! followed by `L` copies of the chosen block with fresh parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Gate, Program, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    /// Circuit 2: rotation layer, CNOT chain with wrap, rotation layer.
    NearestNeighbour,
    /// Circuit 6: rotation layer, CRX between every ordered qubit pair, rotation layer.
    AllToAll,
    /// Circuit 19: rotation layer, ring of CRX gates.
    CircuitBlock,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [
        AnsatzKind::NearestNeighbour,
        AnsatzKind::AllToAll,
        AnsatzKind::CircuitBlock,
    ];

    /// Closed-form trainable parameter count for `n` qubits and depth `l`.
    pub fn param_formula(self, n: usize, l: usize) -> usize {
        match self {
            AnsatzKind::NearestNeighbour => 4 * n * l,
            AnsatzKind::AllToAll => n * (n + 3) * l,
            AnsatzKind::CircuitBlock => 3 * n * l,
        }
    }

    /// Closed-form two-qubit gate count for `n` qubits and depth `l`.
    pub fn two_qubit_formula(self, n: usize, l: usize) -> usize {
        match self {
            AnsatzKind::NearestNeighbour | AnsatzKind::CircuitBlock => n * l,
            AnsatzKind::AllToAll => n * (n - 1) * l,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnsatzKind::NearestNeighbour => "nearest-neighbour",
            AnsatzKind::AllToAll => "all-to-all",
            AnsatzKind::CircuitBlock => "circuit-block",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest-neighbour" | "nearest-neighbor" => Ok(AnsatzKind::NearestNeighbour),
            "all-to-all" => Ok(AnsatzKind::AllToAll),
            "circuit-block" => Ok(AnsatzKind::CircuitBlock),
            other => Err(Error::InvalidArgument(format!("unknown ansatz `{other}`"))),
        }
    }
}

/// A built ansatz: encoder plus `depth` trainable blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    kind: AnsatzKind,
    depth: usize,
    program: Program,
    /// `encoder_slots[v]` is the gate position that consumes input `v`.
    encoder_slots: Vec<usize>,
}

impl CircuitSpec {
    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_qubits(&self) -> usize {
        self.program.n_qubits()
    }

    pub fn param_count(&self) -> usize {
        self.program.n_params()
    }

    pub fn gates(&self) -> &[Gate] {
        self.program.gates()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn encoder_slots(&self) -> &[usize] {
        &self.encoder_slots
    }
}

pub fn build_encoder(n_qubits: usize) -> Vec<Gate> {
    (0..n_qubits).map(|v| Gate::ry(v, Slot::Input(v))).collect()
}

struct Emitter {
    gates: Vec<Gate>,
    next_param: usize,
}

impl Emitter {
    fn slot(&mut self) -> Slot {
        let s = Slot::Param(self.next_param);
        self.next_param += 1;
        s
    }

    fn rotation_layer(&mut self, n: usize) {
        for q in 0..n {
            let s = self.slot();
            self.gates.push(Gate::rx(q, s));
            let s = self.slot();
            self.gates.push(Gate::rz(q, s));
        }
    }
}

pub fn build_ansatz(kind: AnsatzKind, n_qubits: usize, depth: usize) -> Result<CircuitSpec> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "ansatz needs at least 2 qubits for entanglers, got {n_qubits}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("ansatz depth must be >= 1".into()));
    }
    let n = n_qubits;
    let mut em = Emitter {
        gates: build_encoder(n),
        next_param: 0,
    };
    for _ in 0..depth {
        em.rotation_layer(n);
        match kind {
            AnsatzKind::NearestNeighbour => {
                for q in (1..n).rev() {
                    em.gates.push(Gate::cnot(q, q - 1));
                }
                em.gates.push(Gate::cnot(0, n - 1));
                em.rotation_layer(n);
            }
            AnsatzKind::AllToAll => {
                for c in (0..n).rev() {
                    for t in (0..n).rev().filter(|&t| t != c) {
                        let s = em.slot();
                        em.gates.push(Gate::crx(c, t, s));
                    }
                }
                em.rotation_layer(n);
            }
            AnsatzKind::CircuitBlock => {
                for c in 0..n {
                    let s = em.slot();
                    em.gates.push(Gate::crx(c, (c + 1) % n, s));
                }
            }
        }
    }
    let program = Program::new(n, em.gates, n, em.next_param)?;
    Ok(CircuitSpec {
        kind,
        depth,
        program,
        encoder_slots: (0..n).collect(),
    })
}

/// Trainable parameter and two-qubit gate counts, by walking the gate list.
pub fn count_summary(spec: &CircuitSpec) -> (usize, usize) {
    let params = spec
        .gates()
        .iter()
        .filter(|g| matches!(g.slot, Some(Slot::Param(_))))
        .count();
    let two_qubit = spec.gates().iter().filter(|g| g.is_two_qubit()).count();
    (params, two_qubit)
}
