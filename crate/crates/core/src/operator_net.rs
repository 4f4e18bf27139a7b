//! Stacked attention-gated branch, hybrid trunk, and the inner-product
//! readout `G(u)(y) = ⟨b(u_s), t(y)⟩`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzKind};
use crate::attention::{AttentionGate, AttentionTape, Padding, SubnetStack};
use crate::error::{check_len, Error, Result};
use crate::hybrid::{HybridGrads, HybridLayer, HybridTape};

/// How the sensor vector is cut into per-subnet slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Slicing {
    /// Contiguous runs in sensor order.
    #[default]
    Contiguous,
    /// Element `i` goes to slice `i mod r`.
    Interleaved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    #[default]
    Attention,
    /// Every attention weight fixed at 1.
    Bypass,
}

/// Shape and hyperparameters of an [`OperatorModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub ansatz: AnsatzKind,
    pub qubits: usize,
    pub depth: usize,
    pub hidden: usize,
    pub subnets: usize,
    pub sensors: usize,
    pub latent: usize,
    pub query_dim: usize,
    pub gamma: f64,
    pub beta: f64,
    pub padding: Padding,
    pub slicing: Slicing,
    pub gate_mode: GateMode,
    pub outer_tanh: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Error::Config {
            field: field.into(),
            reason,
        };
        if self.subnets == 0 {
            return Err(bad("subnets", "must be >= 1".into()));
        }
        if self.sensors == 0 || self.sensors % self.subnets != 0 {
            return Err(bad(
                "sensors",
                format!("{} is not divisible by subnets = {}", self.sensors, self.subnets),
            ));
        }
        if self.latent == 0 || self.latent % self.subnets != 0 {
            return Err(bad(
                "latent",
                format!("{} is not divisible by subnets = {}", self.latent, self.subnets),
            ));
        }
        if self.qubits < 2 {
            return Err(bad("qubits", "must be >= 2".into()));
        }
        if self.depth == 0 {
            return Err(bad("depth", "must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(bad("hidden", "must be >= 1".into()));
        }
        if self.query_dim == 0 {
            return Err(bad("query_dim", "must be >= 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(bad("gamma", "must be > 0".into()));
        }
        Ok(())
    }
}

pub fn partition_input(u_s: &[f64], r: usize, slicing: Slicing) -> Result<Vec<Vec<f64>>> {
    if r == 0 || u_s.len() % r != 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} sensors into {r} equal slices",
            u_s.len()
        )));
    }
    let len = u_s.len() / r;
    Ok(match slicing {
        Slicing::Contiguous => u_s.chunks(len).map(<[f64]>::to_vec).collect(),
        Slicing::Interleaved => (0..r)
            .map(|j| u_s.iter().skip(j).step_by(r).copied().collect())
            .collect(),
    })
}

/// Sum of elementwise products.
pub fn inner(b: &[f64], t: &[f64]) -> Result<f64> {
    check_len("branch/trunk latent", b.len(), t.len())?;
    Ok(b.iter().zip(t).map(|(x, y)| x * y).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchNet {
    pub subnets: Vec<HybridLayer>,
    pub gate: AttentionGate,
    pub gate_mode: GateMode,
    pub slicing: Slicing,
}

#[derive(Debug, Clone)]
pub struct BranchTape {
    subnet_tapes: Vec<HybridTape>,
    stack: SubnetStack,
    attention: Option<AttentionTape>,
    output: Vec<f64>,
}

impl BranchTape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl BranchNet {
    pub fn r(&self) -> usize {
        self.subnets.len()
    }

    pub fn in_dim(&self) -> usize {
        self.subnets.iter().map(HybridLayer::in_dim).sum()
    }

    pub fn out_dim(&self) -> usize {
        self.subnets.iter().map(HybridLayer::out_dim).sum()
    }

    pub fn forward(&self, u_s: &[f64]) -> Result<BranchTape> {
        check_len("branch input", self.in_dim(), u_s.len())?;
        let slices = partition_input(u_s, self.r(), self.slicing)?;
        let subnet_tapes = self
            .subnets
            .iter()
            .zip(&slices)
            .map(|(net, x)| net.forward(x))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = subnet_tapes.iter().map(|t| t.output().to_vec()).collect();
        let stack = SubnetStack::from_rows(&rows)?;
        let (attention, output) = match self.gate_mode {
            GateMode::Attention => {
                let t = self.gate.forward(&stack)?;
                let out = t.out.as_slice().to_vec();
                (Some(t), out)
            }
            GateMode::Bypass => (None, stack.as_slice().to_vec()),
        };
        Ok(BranchTape {
            subnet_tapes,
            stack,
            attention,
            output,
        })
    }

    /// Accumulates gradients for a given `d loss / d b`.
    pub fn backward_into(
        &self,
        tape: &BranchTape,
        d_b: &[f64],
        subnet_grads: &mut [HybridGrads],
        d_gate: &mut [f64],
    ) -> Result<()> {
        check_len("branch upstream", self.out_dim(), d_b.len())?;
        let d_h = match &tape.attention {
            Some(t) => self.gate.backward(&tape.stack, t, d_b, d_gate)?,
            None => d_b.to_vec(),
        };
        let c = tape.stack.cols();
        for (i, ((net, t), g)) in self
            .subnets
            .iter()
            .zip(&tape.subnet_tapes)
            .zip(subnet_grads.iter_mut())
            .enumerate()
        {
            net.backward_into(t, &d_h[i * c..(i + 1) * c], g)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrunkNet {
    pub layer: HybridLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel {
    pub branch: BranchNet,
    pub trunk: TrunkNet,
}

/// Parameter totals per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub branch_affine: usize,
    pub branch_circuit: usize,
    pub trunk_affine: usize,
    pub trunk_circuit: usize,
    pub attention: usize,
}

impl ParamCounts {
    pub fn total(&self) -> usize {
        self.branch_affine + self.branch_circuit + self.trunk_affine + self.trunk_circuit + self.attention
    }

    pub fn components(&self) -> [(&'static str, usize); 5] {
        [
            ("branch_affine", self.branch_affine),
            ("branch_circuit", self.branch_circuit),
            ("trunk_affine", self.trunk_affine),
            ("trunk_circuit", self.trunk_circuit),
            ("attention", self.attention),
        ]
    }
}

/// Gradient buffers shaped like the model.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub subnets: Vec<HybridGrads>,
    pub gate: Vec<f64>,
    pub trunk: HybridGrads,
}

impl ModelGrads {
    /// Flat gradient in [`OperatorModel::params`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.subnets {
            g.append_to(&mut out);
        }
        out.extend_from_slice(&self.gate);
        self.trunk.append_to(&mut out);
        out
    }
}

impl OperatorModel {
    pub fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let circuit = Arc::new(build_ansatz(cfg.ansatz, cfg.qubits, cfg.depth)?);
        let r = cfg.subnets;
        let subnets = (0..r)
            .map(|_| {
                HybridLayer::init(cfg.sensors / r, cfg.hidden, cfg.latent / r, circuit.clone(), rng)
                    .map(|l| l.with_outer_tanh(cfg.outer_tanh))
            })
            .collect::<Result<Vec<_>>>()?;
        let gate = AttentionGate::new(r, cfg.gamma, cfg.beta, cfg.padding)?;
        let trunk = HybridLayer::init(cfg.query_dim, cfg.hidden, cfg.latent, circuit, rng)?
            .with_outer_tanh(cfg.outer_tanh);
        Ok(OperatorModel {
            branch: BranchNet {
                subnets,
                gate,
                gate_mode: cfg.gate_mode,
                slicing: cfg.slicing,
            },
            trunk: TrunkNet { layer: trunk },
        })
    }

    pub fn latent(&self) -> usize {
        self.trunk.layer.out_dim()
    }

    pub fn count_parameters(&self) -> ParamCounts {
        let b = &self.branch;
        ParamCounts {
            branch_affine: b.subnets.iter().map(HybridLayer::affine_param_count).sum(),
            branch_circuit: b.subnets.iter().map(HybridLayer::circuit_param_count).sum(),
            trunk_affine: self.trunk.layer.affine_param_count(),
            trunk_circuit: self.trunk.layer.circuit_param_count(),
            attention: b.gate.param_count(),
        }
    }

    /// Flat parameters: subnets in order, gate weights, trunk.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_parameters().total());
        for s in &self.branch.subnets {
            s.append_params(&mut out);
        }
        out.extend_from_slice(&self.branch.gate.w);
        self.trunk.layer.append_params(&mut out);
        out
    }

    pub fn load_params(&mut self, src: &[f64]) -> Result<()> {
        check_len("model parameters", self.count_parameters().total(), src.len())?;
        let mut off = 0;
        for s in &mut self.branch.subnets {
            off += s.load_params(&src[off..])?;
        }
        let k = self.branch.gate.w.len();
        self.branch.gate.w.copy_from_slice(&src[off..off + k]);
        off += k;
        self.trunk.layer.load_params(&src[off..])?;
        Ok(())
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            subnets: self.branch.subnets.iter().map(HybridLayer::zero_grads).collect(),
            gate: vec![0.0; self.branch.gate.w.len()],
            trunk: self.trunk.layer.zero_grads(),
        }
    }

    pub fn branch_forward(&self, u_s: &[f64]) -> Result<BranchTape> {
        let t = self.branch.forward(u_s)?;
        check_len("branch output vs trunk output", self.latent(), t.output.len())?;
        Ok(t)
    }

    pub fn trunk_forward(&self, y: &[f64]) -> Result<HybridTape> {
        self.trunk.layer.forward(y)
    }

    pub fn predict(&self, u_s: &[f64], y: &[f64]) -> Result<f64> {
        let b = self.branch_forward(u_s)?;
        let t = self.trunk_forward(y)?;
        inner(b.output(), t.output())
    }

    /// Predictions for many query points sharing one branch evaluation.
    pub fn predict_many(&self, u_s: &[f64], queries: &[[f64; 3]]) -> Result<Vec<f64>> {
        let b = self.branch_forward(u_s)?;
        queries
            .iter()
            .map(|y| inner(b.output(), self.trunk_forward(y)?.output()))
            .collect()
    }

    /// Squared-error sum over the given queries of one input function, with
    /// its gradient accumulated (scaled by `scale`) into `grads`.
    pub fn accumulate_sq_error(
        &self,
        u_s: &[f64],
        queries: &[[f64; 3]],
        targets: &[f64],
        scale: f64,
        grads: &mut ModelGrads,
    ) -> Result<f64> {
        check_len("targets", queries.len(), targets.len())?;
        let bt = self.branch_forward(u_s)?;
        let b = bt.output();
        let mut d_b = vec![0.0; b.len()];
        let mut sq = 0.0;
        for (y, &target) in queries.iter().zip(targets) {
            let tt = self.trunk_forward(y)?;
            let t = tt.output();
            let err = inner(b, t)? - target;
            sq += err * err;
            let g = 2.0 * err * scale;
            d_b.iter_mut().zip(t).for_each(|(d, tk)| *d += g * tk);
            let d_t: Vec<f64> = b.iter().map(|bk| g * bk).collect();
            self.trunk.layer.backward_into(&tt, &d_t, &mut grads.trunk)?;
        }
        self.branch
            .backward_into(&bt, &d_b, &mut grads.subnets, &mut grads.gate)?;
        Ok(sq)
    }
}
