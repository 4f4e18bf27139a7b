//! Adam, the staged learning-rate schedule, losses, and the training loop.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operator_net::{ModelGrads, OperatorModel};
use crate::pde_data::{Dataset, Sample};
use crate::seeds::{substream, Stream};

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("mse target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("mse of empty vectors".into()));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// `‖pred − target‖₂ / ‖target‖₂`.
pub fn relative_l2(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("relative L2 target", pred.len(), target.len())?;
    let num: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    let den: f64 = target.iter().map(|t| t * t).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("relative L2 against a zero-norm target".into()));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    check_len("adam params", state.m.len(), params.len())?;
    check_len("adam grads", state.m.len(), grads.len())?;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Piecewise-constant stage of the learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Start of the stage as a fraction of the total epochs.
    pub fraction: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub schedule: Vec<Stage>,
    pub epochs: usize,
    pub eval_every: usize,
    /// Query points per optimizer step; 0 means every training pair.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.002,
            schedule: vec![
                Stage {
                    fraction: 0.0,
                    multiplier: 1.0,
                },
                Stage {
                    fraction: 1.0 / 3.0,
                    multiplier: 0.5,
                },
                Stage {
                    fraction: 2.0 / 3.0,
                    multiplier: 0.1,
                },
            ],
            epochs: 60_000,
            eval_every: 500,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::Config {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if !(self.lr0 > 0.0) {
            return bad("lr", "must be > 0");
        }
        if self.schedule.first().map(|s| s.fraction) != Some(0.0) {
            return bad("schedule", "first stage must start at fraction 0");
        }
        if self
            .schedule
            .windows(2)
            .any(|w| !(w[1].fraction > w[0].fraction))
        {
            return bad("schedule", "stage fractions must be strictly increasing");
        }
        if self.eval_every == 0 {
            return bad("eval_every", "must be >= 1");
        }
        Ok(())
    }
}

pub fn lr_at(cfg: &TrainConfig, epoch: usize) -> Result<f64> {
    if epoch >= cfg.epochs {
        return Err(Error::InvalidArgument(format!(
            "epoch {epoch} outside schedule of {} epochs",
            cfg.epochs
        )));
    }
    let e = epoch as f64;
    let total = cfg.epochs as f64;
    let stage = cfg
        .schedule
        .iter()
        .rev()
        .find(|s| e >= s.fraction * total)
        .ok_or_else(|| Error::InvalidArgument("empty schedule".into()))?;
    Ok(cfg.lr0 * stage.multiplier)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    /// Optimizer steps completed.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// NaN when the dataset has no test split.
    pub test_rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,test_rel_l2\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                r.epoch, r.lr, r.train_loss, r.test_rel_l2
            ));
        }
        out
    }
}

/// Error statistics of a model on a set of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub sq_err: f64,
    pub sq_target: f64,
    pub count: usize,
}

impl EvalStats {
    pub fn mse(&self) -> f64 {
        self.sq_err / self.count as f64
    }

    pub fn rel_l2(&self) -> f64 {
        (self.sq_err / self.sq_target).sqrt()
    }
}

/// Evaluates every query of every sample; summation order is fixed.
pub fn evaluate(model: &OperatorModel, samples: &[Sample]) -> Result<EvalStats> {
    let per_sample = samples
        .par_iter()
        .map(|s| {
            let pred = model.predict_many(&s.u_s, &s.queries)?;
            let mut e = 0.0;
            let mut t2 = 0.0;
            for (p, t) in pred.iter().zip(&s.targets) {
                e += (p - t) * (p - t);
                t2 += t * t;
            }
            Ok((e, t2, pred.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stats = EvalStats {
        sq_err: 0.0,
        sq_target: 0.0,
        count: 0,
    };
    for (e, t2, n) in per_sample {
        stats.sq_err += e;
        stats.sq_target += t2;
        stats.count += n;
    }
    Ok(stats)
}

/// Queries of one sample that take part in a step.
#[derive(Debug, Clone)]
pub struct Group {
    pub sample: usize,
    pub queries: Vec<usize>,
}

/// Draws `batch_size` (sample, query) pairs with replacement, grouped by
/// sample in ascending order. A zero or oversized batch takes every pair.
pub fn draw_batch(samples: &[Sample], batch_size: usize, seed: u64, epoch: usize) -> Vec<Group> {
    let total: usize = samples.iter().map(|s| s.queries.len()).sum();
    if batch_size == 0 || batch_size >= total {
        return samples
            .iter()
            .enumerate()
            .map(|(i, s)| Group {
                sample: i,
                queries: (0..s.queries.len()).collect(),
            })
            .collect();
    }
    let mut rng = substream(seed, Stream::Batch, epoch as u64);
    let mut picks: Vec<(usize, usize)> = (0..batch_size)
        .map(|_| {
            let s = rng.gen_range(0..samples.len());
            (s, rng.gen_range(0..samples[s].queries.len()))
        })
        .collect();
    picks.sort_unstable();
    let mut groups: Vec<Group> = Vec::new();
    for (s, q) in picks {
        match groups.last_mut() {
            Some(g) if g.sample == s => g.queries.push(q),
            _ => groups.push(Group {
                sample: s,
                queries: vec![q],
            }),
        }
    }
    groups
}

/// Groups reduced sequentially inside one chunk; chunks are summed in order,
/// so results do not depend on the thread count.
const REDUCE_CHUNK: usize = 8;

/// Mean squared error over the batch and its flat gradient.
pub fn batch_loss_and_grad(model: &OperatorModel, samples: &[Sample], groups: &[Group]) -> Result<(f64, Vec<f64>)> {
    let count: usize = groups.iter().map(|g| g.queries.len()).sum();
    if count == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let scale = 1.0 / count as f64;
    let partials = groups
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut grads: ModelGrads = model.zero_grads();
            let mut sq = 0.0;
            for g in chunk {
                let s = &samples[g.sample];
                let qs: Vec<[f64; 3]> = g.queries.iter().map(|&q| s.queries[q]).collect();
                let ts: Vec<f64> = g.queries.iter().map(|&q| s.targets[q]).collect();
                sq += model.accumulate_sq_error(&s.u_s, &qs, &ts, scale, &mut grads)?;
            }
            Ok((sq, grads.flatten()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; partials.first().map_or(0, |p| p.1.len())];
    let mut sq = 0.0;
    for (s, g) in partials {
        sq += s;
        total.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((sq * scale, total))
}

fn log_row(model: &OperatorModel, data: &Dataset, epoch: usize, lr: f64) -> Result<LogRow> {
    let train = evaluate(model, data.train())?;
    let test_rel_l2 = if data.test().is_empty() {
        f64::NAN
    } else {
        evaluate(model, data.test())?.rel_l2()
    };
    let train_loss = train.mse();
    if !train_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch });
    }
    Ok(LogRow {
        epoch,
        lr,
        train_loss,
        test_rel_l2,
    })
}

/// Runs `cfg.epochs` optimizer steps. A log row is recorded before the first
/// step, after every `eval_every` steps, and after the last step; `on_eval`
/// sees each row together with the model at that point.
pub fn train_with<F>(model: &mut OperatorModel, data: &Dataset, cfg: &TrainConfig, mut on_eval: F) -> Result<TrainLog>
where
    F: FnMut(&LogRow, &OperatorModel) -> Result<()>,
{
    cfg.validate()?;
    let mut log = TrainLog::default();
    if cfg.epochs == 0 {
        return Ok(log);
    }
    let train = data.train();
    if train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let d = model.branch.in_dim();
    check_len("dataset sensors vs model input", d, data.d())?;

    let row = log_row(model, data, 0, lr_at(cfg, 0)?)?;
    on_eval(&row, model)?;
    log.rows.push(row);

    let mut params = model.params();
    let mut adam = AdamState::new(params.len());
    for epoch in 0..cfg.epochs {
        let lr = lr_at(cfg, epoch)?;
        let groups = draw_batch(train, cfg.batch_size, cfg.seed, epoch);
        let (loss, grads) = batch_loss_and_grad(model, train, &groups)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        adam_step(&mut adam, &mut params, &grads, lr)?;
        model.load_params(&params)?;
        let done = epoch + 1;
        if done % cfg.eval_every == 0 || done == cfg.epochs {
            let row = log_row(model, data, done, lr)?;
            on_eval(&row, model)?;
            log.rows.push(row);
        }
    }
    Ok(log)
}

pub fn train(model: &mut OperatorModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainLog> {
    train_with(model, data, cfg, |_, _| Ok(()))
}
