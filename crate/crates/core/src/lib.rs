//! Hybrid quantum-classical operator learning.
//!
//! A DeepONet whose branch is a stack of hybrid quantum subnets gated by
//! cross-subnet attention and whose trunk is one hybrid quantum layer. Each
//! hybrid layer is `φ(f(ψ(x)))` with a parameterized-circuit core `f`
//! simulated exactly on a dense statevector.

pub mod ansatz;
pub mod attention;
pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod hybrid;
pub mod operator_net;
pub mod pde_data;
pub mod qsim;
pub mod seeds;
pub mod spectral;
pub mod training;

pub use ansatz::{build_ansatz, build_encoder, count_summary, AnsatzKind, CircuitSpec};
pub use attention::{gap, kernel_size, modulate, AttentionGate, Padding, SubnetStack};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use hybrid::{hybrid_backward, hybrid_forward, AffinePair, HybridLayer};
pub use operator_net::{partition_input, ModelConfig, OperatorModel, ParamCounts};
pub use pde_data::{build_dataset, sample_grf, solve_advection, solve_burgers, Dataset, Field2D};
pub use qsim::{circuit_gradients, expectations_z, run_circuit, Gate, GateKind, Program, Slot, StateVector};
pub use training::{adam_step, lr_at, mse_loss, relative_l2, train, AdamState, TrainConfig};
