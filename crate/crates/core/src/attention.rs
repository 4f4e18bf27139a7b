//! Cross-subnet attention gate.
//!
//! Each subnet's output row is pooled to its mean, the pooled vector is mixed
//! by a banded Toeplitz (1D convolution) with `k` shared weights, and a
//! sigmoid of the result rescales each subnet's row.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Row-major `r × c` stack of subnet outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnetStack {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SubnetStack {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("subnet stack needs r >= 1 and c >= 1".into()));
        }
        check_len("subnet stack entries", rows * cols, data.len())?;
        Ok(SubnetStack { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidArgument("ragged subnet rows".into()));
        }
        Self::new(rows.len(), c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    /// Indices wrap modulo `r`.
    #[default]
    Circular,
    /// Out-of-range neighbours contribute nothing.
    Zero,
}

/// Logistic function, clamped so the result stays strictly inside (0, 1)
/// even where the exact value rounds to an endpoint.
pub fn sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Global average pooling: mean of each row.
pub fn gap(h: &SubnetStack) -> Vec<f64> {
    (0..h.rows)
        .map(|i| h.row(i).iter().sum::<f64>() / h.cols as f64)
        .collect()
}

/// Odd kernel size from the subnet count: round `log2(r)/γ + b/γ` half away
/// from zero, bump even values up by one, clamp to `[1, largest odd ≤ r]`.
pub fn kernel_size(r: usize, gamma: f64, b: f64) -> Result<usize> {
    if r == 0 {
        return Err(Error::InvalidArgument("subnet count must be >= 1".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    let t = (r as f64).log2() / gamma + b / gamma;
    let mut k = t.round().max(1.0) as usize;
    if k % 2 == 0 {
        k += 1;
    }
    let max_k = if r % 2 == 1 { r } else { r - 1 };
    Ok(k.min(max_k))
}

/// Banded convolution `s_i = Σ_{|o| ≤ (k−1)/2} w[o + half] · z[i − o]`.
///
/// Returns the result and the number of multiply-adds performed.
pub fn banded_conv(w: &[f64], z: &[f64], padding: Padding) -> (Vec<f64>, usize) {
    let r = z.len() as isize;
    let half = (w.len() / 2) as isize;
    let mut ops = 0;
    let s = (0..r)
        .map(|i| {
            let mut acc = 0.0;
            for o in -half..=half {
                let j = i - o;
                let zj = match padding {
                    Padding::Circular => z[j.rem_euclid(r) as usize],
                    Padding::Zero if (0..r).contains(&j) => z[j as usize],
                    Padding::Zero => continue,
                };
                acc += w[(o + half) as usize] * zj;
                ops += 1;
            }
            acc
        })
        .collect();
    (s, ops)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionGate {
    pub k: usize,
    /// `w[o + (k−1)/2]` is the weight for offset `o = i − j`.
    pub w: Vec<f64>,
    pub gamma: f64,
    pub b: f64,
    pub padding: Padding,
}

impl AttentionGate {
    /// Gate for `r` subnets with zero-initialized weights.
    pub fn new(r: usize, gamma: f64, b: f64, padding: Padding) -> Result<Self> {
        let k = kernel_size(r, gamma, b)?;
        Ok(AttentionGate {
            k,
            w: vec![0.0; k],
            gamma,
            b,
            padding,
        })
    }

    pub fn param_count(&self) -> usize {
        self.w.len()
    }

    pub fn attention_weights(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len("attention kernel", self.k, self.w.len())?;
        if self.k > z.len() {
            return Err(Error::InvalidArgument(format!(
                "kernel size {} exceeds subnet count {}",
                self.k,
                z.len()
            )));
        }
        let (s, _) = banded_conv(&self.w, z, self.padding);
        Ok(s.into_iter().map(sigmoid).collect())
    }

    /// Forward through pooling, mixing, gating, and scaling.
    pub fn forward(&self, h: &SubnetStack) -> Result<AttentionTape> {
        let pooled = gap(h);
        let omega = self.attention_weights(&pooled)?;
        let out = modulate(h, &omega)?;
        Ok(AttentionTape { pooled, omega, out })
    }

    /// Given `d loss / d H̃`, accumulates `d loss / d w` into `d_w` and
    /// returns `d loss / d H` (row-major).
    pub fn backward(&self, h: &SubnetStack, tape: &AttentionTape, d_out: &[f64], d_w: &mut [f64]) -> Result<Vec<f64>> {
        let (r, c) = (h.rows, h.cols);
        check_len("attention upstream", r * c, d_out.len())?;
        check_len("attention weight gradient", self.k, d_w.len())?;
        // d loss / d s_i through ω_i = σ(s_i).
        let d_s: Vec<f64> = (0..r)
            .map(|i| {
                let g_omega: f64 = h
                    .row(i)
                    .iter()
                    .zip(&d_out[i * c..(i + 1) * c])
                    .map(|(a, b)| a * b)
                    .sum();
                let om = tape.omega[i];
                g_omega * om * (1.0 - om)
            })
            .collect();
        let ri = r as isize;
        let half = (self.k / 2) as isize;
        let mut d_z = vec![0.0; r];
        for i in 0..ri {
            for o in -half..=half {
                let j = i - o;
                let j = match self.padding {
                    Padding::Circular => j.rem_euclid(ri),
                    Padding::Zero if (0..ri).contains(&j) => j,
                    Padding::Zero => continue,
                } as usize;
                let widx = (o + half) as usize;
                d_w[widx] += d_s[i as usize] * tape.pooled[j];
                d_z[j] += d_s[i as usize] * self.w[widx];
            }
        }
        let mut d_h = vec![0.0; r * c];
        for i in 0..r {
            let pooled_share = d_z[i] / c as f64;
            for col in 0..c {
                d_h[i * c + col] = tape.omega[i] * d_out[i * c + col] + pooled_share;
            }
        }
        Ok(d_h)
    }
}

#[derive(Debug, Clone)]
pub struct AttentionTape {
    pub pooled: Vec<f64>,
    pub omega: Vec<f64>,
    pub out: SubnetStack,
}

pub fn attention_weights(gate: &AttentionGate, z: &[f64]) -> Result<Vec<f64>> {
    gate.attention_weights(z)
}

/// `diag(ω) H`.
pub fn modulate(h: &SubnetStack, omega: &[f64]) -> Result<SubnetStack> {
    check_len("attention weights", h.rows, omega.len())?;
    let mut data = h.data.clone();
    for (i, om) in omega.iter().enumerate() {
        data[i * h.cols..(i + 1) * h.cols]
            .iter_mut()
            .for_each(|v| *v *= om);
    }
    Ok(SubnetStack {
        rows: h.rows,
        cols: h.cols,
        data,
    })
}
