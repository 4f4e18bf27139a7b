//! Run configuration: a flat `key = value` file (TOML syntax, no tables).
//!
//! Every key is optional; omitted keys take the defaults below. Unknown keys
//! are rejected.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `equation` | `"advection"` | `"advection"` or `"burgers"` |
//! | `ansatz` | `"circuit-block"` | `"nearest-neighbour"`, `"all-to-all"`, `"circuit-block"` |
//! | `qubits` | 10 | qubits per circuit |
//! | `depth` | 2 | trainable circuit blocks |
//! | `hidden` | 50 | width of pre/post networks |
//! | `subnets` | 4 | branch subnets `r` |
//! | `latent` | 40 | branch/trunk output size `p` |
//! | `outer_tanh` | false | tanh after the post-network |
//! | `gate` | `"attention"` | `"attention"` or `"bypass"` |
//! | `gamma`, `beta` | 2, 1 | kernel-size map hyperparameters |
//! | `padding` | `"circular"` | `"circular"` or `"zero"` |
//! | `slicing` | `"contiguous"` | `"contiguous"` or `"interleaved"` |
//! | `grid` | 64 | solver grid `N` |
//! | `sensor_grid` | 8 | sensors per axis, `d = sensor_grid²` |
//! | `n_train`, `n_test` | 1000, 200 | sample counts |
//! | `queries_per_sample` | 100 | query points per sample |
//! | `time_slices` | 51 | stored time levels on `[0, 1]` |
//! | `amplitude` | 1 | spectral amplitude `A` |
//! | `corr_x`, `corr_y` | 0.2 (advection), 0.4 (burgers) | correlation lengths |
//! | `smoothing` | 1 | Gaussian smoothing, grid cells |
//! | `range_lo`, `range_hi` | -0.5, 0.5 | normalization range |
//! | `velocity_x`, `velocity_y` | 1.0, 0.5 | advection velocity |
//! | `viscosity` | 0.01 | Burgers `ν` |
//! | `burgers_dt` | 0 | max Burgers step, 0 = stability bound |
//! | `lr` | 0.002 | initial learning rate |
//! | `schedule_fractions` | `[0, 1/3, 2/3]` | stage starts |
//! | `schedule_multipliers` | `[1, 0.5, 0.1]` | stage factors |
//! | `epochs` | 60000 | optimizer steps |
//! | `eval_every` | 500 | log interval |
//! | `batch_size` | 128 | query points per step, 0 = all |
//! | `checkpoint_every_eval` | false | also checkpoint at each log row |
//! | `export_time` | 0.5 | time of exported field slices |
//! | `export_samples` | 2 | test samples exported by `eval` |
//! | `seed` | 0 | root seed for data, init, and batch streams |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzKind;
use crate::attention::Padding;
use crate::error::{Error, Result};
use crate::operator_net::{GateMode, ModelConfig, Slicing};
use crate::pde_data::{DataConfig, Equation};
use crate::training::{Stage, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub equation: Equation,
    pub ansatz: AnsatzKind,
    pub qubits: usize,
    pub depth: usize,
    pub hidden: usize,
    pub subnets: usize,
    pub latent: usize,
    pub outer_tanh: bool,
    pub gate: GateMode,
    pub gamma: f64,
    pub beta: f64,
    pub padding: Padding,
    pub slicing: Slicing,

    pub grid: usize,
    pub sensor_grid: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub queries_per_sample: usize,
    pub time_slices: usize,
    pub amplitude: f64,
    pub corr_x: Option<f64>,
    pub corr_y: Option<f64>,
    pub smoothing: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    pub velocity_x: f64,
    pub velocity_y: f64,
    pub viscosity: f64,
    pub burgers_dt: f64,

    pub lr: f64,
    pub schedule_fractions: Vec<f64>,
    pub schedule_multipliers: Vec<f64>,
    pub epochs: usize,
    pub eval_every: usize,
    pub batch_size: usize,
    pub checkpoint_every_eval: bool,

    pub export_time: f64,
    pub export_samples: usize,

    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            equation: Equation::Advection,
            ansatz: AnsatzKind::CircuitBlock,
            qubits: 10,
            depth: 2,
            hidden: 50,
            subnets: 4,
            latent: 40,
            outer_tanh: false,
            gate: GateMode::Attention,
            gamma: 2.0,
            beta: 1.0,
            padding: Padding::Circular,
            slicing: Slicing::Contiguous,
            grid: 64,
            sensor_grid: 8,
            n_train: 1000,
            n_test: 200,
            queries_per_sample: 100,
            time_slices: 51,
            amplitude: 1.0,
            corr_x: None,
            corr_y: None,
            smoothing: 1.0,
            range_lo: -0.5,
            range_hi: 0.5,
            velocity_x: 1.0,
            velocity_y: 0.5,
            viscosity: 0.01,
            burgers_dt: 0.0,
            lr: 0.002,
            schedule_fractions: vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
            schedule_multipliers: vec![1.0, 0.5, 0.1],
            epochs: 60_000,
            eval_every: 500,
            batch_size: 128,
            checkpoint_every_eval: false,
            export_time: 0.5,
            export_samples: 2,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .unwrap_or("<file>")
                .to_string();
            Error::Config {
                field,
                reason: msg.replace('\n', " "),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    fn default_corr(&self) -> f64 {
        match self.equation {
            Equation::Advection => 0.2,
            Equation::Burgers => 0.4,
        }
    }

    pub fn sensors(&self) -> usize {
        self.sensor_grid * self.sensor_grid
    }

    /// Checks cross-field consistency (`r | d`, `r | p`, schedule shape, …).
    pub fn validate(&self) -> Result<()> {
        if self.schedule_fractions.len() != self.schedule_multipliers.len() {
            return Err(Error::Config {
                field: "schedule_multipliers".into(),
                reason: format!(
                    "{} multipliers for {} fractions",
                    self.schedule_multipliers.len(),
                    self.schedule_fractions.len()
                ),
            });
        }
        if !(0.0..=1.0).contains(&self.export_time) {
            return Err(Error::Config {
                field: "export_time".into(),
                reason: "must lie in [0, 1]".into(),
            });
        }
        self.model_config().validate()?;
        self.data_config().validate()?;
        self.train_config().validate()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            ansatz: self.ansatz,
            qubits: self.qubits,
            depth: self.depth,
            hidden: self.hidden,
            subnets: self.subnets,
            sensors: self.sensors(),
            latent: self.latent,
            query_dim: 3,
            gamma: self.gamma,
            beta: self.beta,
            padding: self.padding,
            slicing: self.slicing,
            gate_mode: self.gate,
            outer_tanh: self.outer_tanh,
        }
    }

    pub fn data_config(&self) -> DataConfig {
        DataConfig {
            equation: self.equation,
            grid: self.grid,
            sensor_grid: self.sensor_grid,
            n_train: self.n_train,
            n_test: self.n_test,
            queries_per_sample: self.queries_per_sample,
            time_slices: self.time_slices,
            amplitude: self.amplitude,
            corr_x: self.corr_x.unwrap_or_else(|| self.default_corr()),
            corr_y: self.corr_y.unwrap_or_else(|| self.default_corr()),
            smoothing: self.smoothing,
            range_lo: self.range_lo,
            range_hi: self.range_hi,
            velocity_x: self.velocity_x,
            velocity_y: self.velocity_y,
            viscosity: self.viscosity,
            burgers_dt: self.burgers_dt,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr0: self.lr,
            schedule: self
                .schedule_fractions
                .iter()
                .zip(&self.schedule_multipliers)
                .map(|(&fraction, &multiplier)| Stage { fraction, multiplier })
                .collect(),
            epochs: self.epochs,
            eval_every: self.eval_every,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}
