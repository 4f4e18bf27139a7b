//! Pipeline commands behind the `qdeeponet` binary: data generation,
//! training, evaluation, and exports.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzKind;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::format::{read_container, write_container, CHECKPOINT_MAGIC, DATASET_MAGIC};
use crate::operator_net::{OperatorModel, ParamCounts};
use crate::pde_data::{build_dataset, solution_slices, DataConfig, Dataset, Sample};
use crate::seeds::{substream, Stream};
use crate::training::{evaluate, train_with, TrainLog};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub code_version: String,
    pub run: RunConfig,
    pub data: DataConfig,
    pub n_samples: usize,
    pub sensors: usize,
    pub queries_per_sample: usize,
}

pub fn write_dataset(path: &Path, data: &Dataset, run: &RunConfig) -> Result<()> {
    let q = data.config.queries_per_sample;
    if data.samples.iter().any(|s| s.queries.len() != q || s.targets.len() != q) {
        return Err(Error::Format("samples have unequal query counts".into()));
    }
    let meta = DatasetMeta {
        code_version: CODE_VERSION.into(),
        run: run.clone(),
        data: data.config.clone(),
        n_samples: data.samples.len(),
        sensors: data.d(),
        queries_per_sample: q,
    };
    let mut payload = Vec::new();
    for s in &data.sensors {
        payload.extend_from_slice(s);
    }
    for s in &data.samples {
        payload.extend_from_slice(&s.u_s);
    }
    for s in &data.samples {
        for y in &s.queries {
            payload.extend_from_slice(y);
        }
    }
    for s in &data.samples {
        payload.extend_from_slice(&s.targets);
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_container(&mut w, DATASET_MAGIC, &meta, &payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, DatasetMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let (meta, payload): (DatasetMeta, Vec<f64>) = read_container(&mut r, DATASET_MAGIC)?;
    let (n, d, q) = (meta.n_samples, meta.sensors, meta.queries_per_sample);
    let expected = d * 2 + n * d + n * q * 3 + n * q;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "dataset payload has {} values, expected {expected}",
            payload.len()
        )));
    }
    let (sensor_part, rest) = payload.split_at(d * 2);
    let (us_part, rest) = rest.split_at(n * d);
    let (query_part, target_part) = rest.split_at(n * q * 3);
    let sensors = sensor_part.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let samples = (0..n)
        .map(|i| Sample {
            u_s: us_part[i * d..(i + 1) * d].to_vec(),
            queries: query_part[i * q * 3..(i + 1) * q * 3]
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
            targets: target_part[i * q..(i + 1) * q].to_vec(),
        })
        .collect();
    Ok((
        Dataset {
            config: meta.data.clone(),
            sensors,
            samples,
        },
        meta,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub code_version: String,
    pub run: RunConfig,
    pub epoch: usize,
    pub counts: ParamCounts,
    pub param_count: usize,
}

pub fn save_checkpoint(path: &Path, model: &OperatorModel, run: &RunConfig, epoch: usize) -> Result<()> {
    let counts = model.count_parameters();
    let meta = CheckpointMeta {
        code_version: CODE_VERSION.into(),
        run: run.clone(),
        epoch,
        counts,
        param_count: counts.total(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    write_container(&mut w, CHECKPOINT_MAGIC, &meta, &model.params())?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(OperatorModel, CheckpointMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let (meta, params): (CheckpointMeta, Vec<f64>) = read_container(&mut r, CHECKPOINT_MAGIC)?;
    let mut rng = substream(meta.run.seed, Stream::Init, 0);
    let mut model = OperatorModel::init(&meta.run.model_config(), &mut rng)?;
    model.load_params(&params)?;
    Ok((model, meta))
}

pub fn init_model(run: &RunConfig) -> Result<OperatorModel> {
    let mut rng = substream(run.seed, Stream::Init, 0);
    OperatorModel::init(&run.model_config(), &mut rng)
}

fn load_run(config_path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut run = RunConfig::load(config_path)?;
    if let Some(s) = seed {
        run.seed = s;
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSummary {
    pub samples: usize,
    pub sensors: usize,
    pub grid: usize,
    pub seed: u64,
}

pub fn cmd_gen_data(config_path: &Path, out_path: &Path, seed: Option<u64>) -> Result<GenSummary> {
    let run = load_run(config_path, seed)?;
    let data = build_dataset(&run.data_config())?;
    write_dataset(out_path, &data, &run)?;
    Ok(GenSummary {
        samples: data.samples.len(),
        sensors: data.d(),
        grid: data.config.grid,
        seed: run.seed,
    })
}

/// Parameter totals for the configured model and for every ansatz swapped in.
pub fn param_report(run: &RunConfig) -> Result<String> {
    let counts = init_model(run)?.count_parameters();
    let mut out = String::new();
    writeln!(out, "total,{}", counts.total()).unwrap();
    for (name, n) in counts.components() {
        writeln!(out, "{name},{n}").unwrap();
    }
    let totals = AnsatzKind::ALL
        .iter()
        .map(|&kind| {
            let mut alt = run.clone();
            alt.ansatz = kind;
            Ok((kind, init_model(&alt)?.count_parameters().total()))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = totals
        .iter()
        .find(|(k, _)| *k == AnsatzKind::CircuitBlock)
        .map(|t| t.1)
        .expect("circuit-block present");
    for (kind, total) in &totals {
        writeln!(out, "total[{kind}],{total}").unwrap();
    }
    for (kind, total) in &totals {
        if *kind != AnsatzKind::CircuitBlock {
            writeln!(out, "delta[{kind} - circuit-block],{}", *total as i64 - base as i64).unwrap();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub log: TrainLog,
    pub counts: ParamCounts,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(config_path: &Path, data_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<TrainSummary> {
    let run = load_run(config_path, seed)?;
    let (data, _) = read_dataset(data_path)?;
    if data.d() != run.sensors() {
        return Err(Error::LengthMismatch {
            what: "dataset sensors vs config sensor_grid²",
            expected: run.sensors(),
            got: data.d(),
        });
    }
    fs::create_dir_all(out_dir)?;
    let mut model = init_model(&run)?;
    let counts = model.count_parameters();
    fs::write(out_dir.join("params.csv"), param_report(&run)?)?;

    let snapshot = run.checkpoint_every_eval;
    let log = train_with(&mut model, &data, &run.train_config(), |row, m| {
        if snapshot {
            save_checkpoint(&out_dir.join(format!("checkpoint_e{}.bin", row.epoch)), m, &run, row.epoch)?;
        }
        Ok(())
    })?;
    fs::write(out_dir.join("train_log.csv"), log.to_csv())?;
    let checkpoint = out_dir.join("checkpoint.bin");
    save_checkpoint(&checkpoint, &model, &run, run.epochs)?;
    fs::write(out_dir.join("run_config.toml"), run.to_toml())?;
    Ok(TrainSummary {
        log,
        counts,
        checkpoint,
    })
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub rel_l2: f64,
    pub mse: f64,
    pub points: usize,
    pub exports: Vec<PathBuf>,
}

fn grid_csv(n: usize, value: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for j in 0..n {
        let row: Vec<String> = (0..n).map(|i| format!("{:e}", value(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Relative L2 over the test split (all samples when there is none), plus
/// predicted and true field grids at the configured export time.
pub fn cmd_eval(ckpt_path: &Path, data_path: &Path, out_path: &Path) -> Result<EvalSummary> {
    let (model, meta) = load_checkpoint(ckpt_path)?;
    let (data, _) = read_dataset(data_path)?;
    if data.d() != model.branch.in_dim() {
        return Err(Error::LengthMismatch {
            what: "dataset sensors vs checkpoint model input",
            expected: model.branch.in_dim(),
            got: data.d(),
        });
    }
    let (split, offset) = if data.test().is_empty() {
        (&data.samples[..], 0)
    } else {
        (data.test(), data.config.n_train)
    };
    let stats = evaluate(&model, split)?;

    let cfg = &data.config;
    let slice = (meta.run.export_time * (cfg.time_slices - 1) as f64).round() as usize;
    let t = cfg.slice_time(slice);
    let n = cfg.grid;
    let h = 1.0 / n as f64;
    let stem = out_path
        .file_stem()
        .map_or_else(|| "eval".to_string(), |s| s.to_string_lossy().into_owned());
    let dir = out_path.parent().unwrap_or_else(|| Path::new("."));
    let mut exports = Vec::new();
    for k in 0..meta.run.export_samples.min(split.len()) {
        let index = offset + k;
        let truth = solution_slices(cfg, index, &[slice])?.remove(0);
        let queries: Vec<[f64; 3]> = (0..n * n)
            .map(|idx| [(idx % n) as f64 * h, (idx / n) as f64 * h, t])
            .collect();
        let pred = model.predict_many(&split[k].u_s, &queries)?;
        let tag = format!("{stem}_sample{index}_t{slice}");
        let pred_path = dir.join(format!("{tag}_pred.csv"));
        let true_path = dir.join(format!("{tag}_true.csv"));
        fs::write(&pred_path, grid_csv(n, |i, j| pred[j * n + i]))?;
        fs::write(&true_path, grid_csv(n, |i, j| truth.at(i, j)))?;
        exports.push(pred_path);
        exports.push(true_path);
    }

    let mut report = String::new();
    writeln!(report, "metric,value").unwrap();
    writeln!(report, "rel_l2,{:e}", stats.rel_l2()).unwrap();
    writeln!(report, "rel_l2_percent,{:e}", 100.0 * stats.rel_l2()).unwrap();
    writeln!(report, "mse,{:e}", stats.mse()).unwrap();
    writeln!(report, "points,{}", stats.count).unwrap();
    writeln!(report, "export_time,{t:e}").unwrap();
    writeln!(report, "code_version,{CODE_VERSION}").unwrap();
    writeln!(report, "checkpoint_epoch,{}", meta.epoch).unwrap();
    fs::write(out_path, report)?;
    Ok(EvalSummary {
        rel_l2: stats.rel_l2(),
        mse: stats.mse(),
        points: stats.count,
        exports,
    })
}

/// One sample as CSV rows `kind,x,y,t,value` (sensors first, then queries).
pub fn sample_csv(data: &Dataset, index: usize) -> Result<String> {
    let s = data.samples.get(index).ok_or_else(|| {
        Error::InvalidArgument(format!("sample {index} out of range ({} samples)", data.samples.len()))
    })?;
    let mut out = String::from("kind,x,y,t,value\n");
    for (p, v) in data.sensors.iter().zip(&s.u_s) {
        writeln!(out, "sensor,{:e},{:e},0,{:e}", p[0], p[1], v).unwrap();
    }
    for (q, v) in s.queries.iter().zip(&s.targets) {
        writeln!(out, "query,{:e},{:e},{:e},{:e}", q[0], q[1], q[2], v).unwrap();
    }
    Ok(out)
}

pub fn cmd_export_sample(data_path: &Path, index: usize, out_path: &Path) -> Result<()> {
    let (data, _) = read_dataset(data_path)?;
    fs::write(out_path, sample_csv(&data, index)?)?;
    Ok(())
}
