//! Training data: Gaussian random field initial conditions, periodic
//! advection and Burgers solvers, and `(u_s, y, target)` assembly.
//!
//! Grids are `n × n` on the periodic unit square, stored row-major with
//! `idx = j·n + i`, `x = i/n`, `y = j/n`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{substream, Stream};
use crate::spectral::{freq, is_nyquist, Fft2};

#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    n: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "field of {} values is not {n}x{n}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Field2D { n, values })
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        let values = (0..n * n)
            .map(|idx| f((idx % n) as f64 * h, (idx / n) as f64 * h))
            .collect();
        Field2D { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(j % self.n) * self.n + (i % self.n)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `½ ∫ u² dx dy` by the midpoint rule.
    pub fn energy(&self) -> f64 {
        0.5 * self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfConfig {
    pub n: usize,
    pub amplitude: f64,
    pub corr_x: f64,
    pub corr_y: f64,
    /// Gaussian smoothing standard deviation in grid cells.
    pub smoothing: f64,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl GrfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::Config {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.n < 4 || !self.n.is_power_of_two() {
            return bad("grid", "must be a power of two >= 4");
        }
        if !(self.corr_x > 0.0 && self.corr_y > 0.0) {
            return bad("corr_x/corr_y", "correlation lengths must be > 0");
        }
        if !(self.amplitude > 0.0) {
            return bad("amplitude", "must be > 0");
        }
        if !(self.smoothing >= 0.0) {
            return bad("smoothing", "must be >= 0");
        }
        if !(self.lo < self.hi) {
            return bad("range_lo/range_hi", "need lo < hi");
        }
        Ok(())
    }

    /// Power spectral density at angular wavenumbers `(kx, ky)`.
    pub fn psd(&self, kx: f64, ky: f64) -> f64 {
        let (a, b) = (kx * self.corr_x, ky * self.corr_y);
        self.amplitude * (-(a * a + b * b) / 2.0).exp()
    }
}

/// Spectrally synthesized field before normalization, with the largest
/// imaginary residue of the inverse transform.
pub fn synthesize_grf<R: Rng + ?Sized>(cfg: &GrfConfig, rng: &mut R) -> Result<(Field2D, f64)> {
    cfg.validate()?;
    let n = cfg.n;
    let half = (n / 2) as i64;
    let idx = |m: i64| m.rem_euclid(n as i64) as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
    let smooth = |mx: i64, my: i64| {
        let s = cfg.smoothing / n as f64;
        (-2.0 * PI * PI * s * s * ((mx * mx + my * my) as f64)).exp()
    };
    // DC is its own conjugate partner: a random sign stands in for the phase.
    let dc = cfg.psd(0.0, 0.0).sqrt();
    coeffs[0] = Complex64::new(if rng.gen::<bool>() { dc } else { -dc }, 0.0);
    // One phase per conjugate pair, drawn over the upper half plane. Nyquist
    // rows and columns stay empty so every mode has a distinct partner.
    for my in 0..half {
        let mx_start = if my == 0 { 1 } else { 1 - half };
        for mx in mx_start..half {
            let amp = cfg.psd(TAU * mx as f64, TAU * my as f64).sqrt() * smooth(mx, my);
            let c = Complex64::from_polar(amp, rng.gen_range(0.0..TAU));
            coeffs[idx(my) * n + idx(mx)] = c;
            coeffs[idx(-my) * n + idx(-mx)] = c.conj();
        }
    }
    let (values, residue) = Fft2::new(n).inverse_real(coeffs.iter().map(|c| c * (n * n) as f64).collect());
    Ok((Field2D { n, values }, residue))
}

/// Affine rescale so the minimum maps to `lo` and the maximum to `hi`.
pub fn normalize(field: &Field2D, lo: f64, hi: f64) -> Result<Field2D> {
    let (min, max) = field
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(max > min) {
        return Err(Error::DegenerateField);
    }
    let values = field
        .values
        .iter()
        .map(|&v| {
            if v == max {
                hi
            } else {
                lo + (v - min) / (max - min) * (hi - lo)
            }
        })
        .collect();
    Ok(Field2D { n: field.n, values })
}

pub fn sample_grf(cfg: &GrfConfig) -> Result<Field2D> {
    let mut rng = substream(cfg.seed, Stream::Data, 0);
    sample_grf_with(cfg, &mut rng)
}

pub fn sample_grf_with<R: Rng + ?Sized>(cfg: &GrfConfig, rng: &mut R) -> Result<Field2D> {
    let (raw, _) = synthesize_grf(cfg, rng)?;
    normalize(&raw, cfg.lo, cfg.hi)
}

/// Exact periodic advection `u(x, y, t) = u0(x − vx·t, y − vy·t)` by a
/// Fourier phase shift. A Nyquist mode, having no distinct partner, keeps only
/// the real part of its shifted coefficient.
pub fn solve_advection(u0: &Field2D, vx: f64, vy: f64, t: f64) -> Field2D {
    let n = u0.n;
    let fft = Fft2::new(n);
    let coeffs = fft.forward_real(&u0.values);
    advect_coeffs(&fft, &coeffs, vx, vy, t)
}

fn advect_coeffs(fft: &Fft2, coeffs: &[Complex64], vx: f64, vy: f64, t: f64) -> Field2D {
    let n = fft.n();
    let shifted = coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (mx, my) = (freq(idx % n, n) as f64, freq(idx / n, n) as f64);
            c * Complex64::from_polar(1.0, -TAU * (mx * vx + my * vy) * t)
        })
        .collect();
    let (values, _) = fft.inverse_real(shifted);
    Field2D { n, values }
}

/// Pseudo-spectral RK4 integrator for `u_t + u u_x + u u_y = ν Δu`.
///
/// The nonlinear term is evaluated in conservative form `½ ∂(u²)` with the
/// 2/3-rule mask on the product, so the spatial mean is preserved exactly.
pub struct BurgersSolver {
    n: usize,
    nu: f64,
    fft: Fft2,
    /// `i(kx + ky)` on retained modes, zero elsewhere.
    conv: Vec<Complex64>,
    /// `−ν |k|²`.
    diff: Vec<f64>,
}

/// Time-stepping diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BurgersStats {
    pub steps: usize,
    /// Largest single-step increase of `½∫u²` observed (0 if it never grew).
    pub max_energy_increase: f64,
}

/// Tolerance on per-step energy growth when `ν > 0`.
pub const ENERGY_TOL: f64 = 1e-8;

impl BurgersSolver {
    pub fn new(n: usize, nu: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid {n} must be a power of two >= 4")));
        }
        if !(nu >= 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be >= 0, got {nu}")));
        }
        let cutoff = n as f64 / 3.0;
        let mut conv = vec![Complex64::new(0.0, 0.0); n * n];
        let mut diff = vec![0.0; n * n];
        for idx in 0..n * n {
            let (ix, iy) = (idx % n, idx / n);
            let (mx, my) = (freq(ix, n) as f64, freq(iy, n) as f64);
            let (kx, ky) = (TAU * mx, TAU * my);
            diff[idx] = -nu * (kx * kx + ky * ky);
            let keep = mx.abs() < cutoff && my.abs() < cutoff && !is_nyquist(ix, n) && !is_nyquist(iy, n);
            if keep {
                conv[idx] = Complex64::new(0.0, kx + ky);
            }
        }
        Ok(BurgersSolver {
            n,
            nu,
            fft: Fft2::new(n),
            conv,
            diff,
        })
    }

    /// Largest step inside the RK4 stability region for the given field.
    pub fn stable_dt(&self, u: &Field2D) -> f64 {
        let n = self.n as f64;
        let kmax = PI * n;
        let umax = u.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diffusive = if self.nu > 0.0 {
            2.78 / (2.0 * self.nu * kmax * kmax)
        } else {
            f64::INFINITY
        };
        let advective = if umax > 0.0 {
            2.83 / (umax * 2.0 * kmax)
        } else {
            f64::INFINITY
        };
        0.9 * diffusive.min(advective).min(1.0)
    }

    fn rhs(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let (u, _) = self.fft.inverse_real(u_hat.to_vec());
        let half_sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let w_hat = self.fft.forward_real(&half_sq);
        u_hat
            .iter()
            .zip(&w_hat)
            .zip(self.conv.iter().zip(&self.diff))
            .map(|((uh, wh), (c, d))| -c * wh + uh * *d)
            .collect()
    }

    fn energy_of(&self, u_hat: &[Complex64]) -> f64 {
        let n2 = (self.n * self.n) as f64;
        0.5 * u_hat.iter().map(|c| c.norm_sqr()).sum::<f64>() / (n2 * n2)
    }

    fn step(&self, u_hat: &mut Vec<Complex64>, dt: f64) {
        let axpy = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rhs(u_hat);
        let k2 = self.rhs(&axpy(u_hat, &k1, dt / 2.0));
        let k3 = self.rhs(&axpy(u_hat, &k2, dt / 2.0));
        let k4 = self.rhs(&axpy(u_hat, &k3, dt));
        for i in 0..u_hat.len() {
            u_hat[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }

    /// Integrates over `duration` in equal steps no longer than `dt_max`,
    /// reporting the field after each entry of `checkpoints` (cumulative
    /// step counts must be increasing).
    fn integrate(
        &self,
        u0: &Field2D,
        durations: &[f64],
        dt_max: f64,
        stats: &mut BurgersStats,
    ) -> Result<Vec<Field2D>> {
        if u0.n != self.n {
            return Err(Error::InvalidArgument(format!(
                "field grid {} does not match solver grid {}",
                u0.n, self.n
            )));
        }
        let limit = self.stable_dt(u0);
        if !(dt_max > 0.0) || dt_max > limit {
            return Err(Error::InvalidArgument(format!(
                "dt {dt_max} outside stability bound (0, {limit:.3e}]"
            )));
        }
        let mut u_hat = self.fft.forward_real(&u0.values);
        let mut energy = self.energy_of(&u_hat);
        let mut out = Vec::with_capacity(durations.len());
        for &span in durations {
            if span > 0.0 {
                let steps = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                for _ in 0..steps {
                    self.step(&mut u_hat, dt);
                    stats.steps += 1;
                    if u_hat.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        return Err(Error::BlowUp { step: stats.steps });
                    }
                    let e = self.energy_of(&u_hat);
                    let growth = e - energy;
                    stats.max_energy_increase = stats.max_energy_increase.max(growth);
                    if self.nu > 0.0 && growth > ENERGY_TOL {
                        return Err(Error::EnergyGrowth {
                            step: stats.steps,
                            increase: growth,
                        });
                    }
                    energy = e;
                }
            }
            if stats.steps == 0 {
                out.push(u0.clone());
            } else {
                let (values, _) = self.fft.inverse_real(u_hat.clone());
                out.push(Field2D { n: self.n, values });
            }
        }
        Ok(out)
    }

    pub fn solve(&self, u0: &Field2D, t_end: f64, dt: f64) -> Result<(Field2D, BurgersStats)> {
        if t_end == 0.0 {
            return Ok((u0.clone(), BurgersStats::default()));
        }
        if !(t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {t_end}")));
        }
        let mut stats = BurgersStats::default();
        let mut fields = self.integrate(u0, &[t_end], dt, &mut stats)?;
        Ok((fields.pop().expect("one checkpoint"), stats))
    }

    /// Fields at `0, Δ, 2Δ, …, count·Δ` where `Δ = horizon / (slices − 1)`.
    pub fn slices(&self, u0: &Field2D, slices: usize, horizon: f64, count: usize, dt: f64) -> Result<Vec<Field2D>> {
        let span = horizon / (slices.max(2) - 1) as f64;
        let mut durations = vec![0.0];
        durations.extend(std::iter::repeat(span).take(count));
        let mut stats = BurgersStats::default();
        self.integrate(u0, &durations, dt, &mut stats)
    }
}

pub fn solve_burgers(u0: &Field2D, nu: f64, t_end: f64, dt: f64) -> Result<Field2D> {
    Ok(BurgersSolver::new(u0.n, nu)?.solve(u0, t_end, dt)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Advection,
    Burgers,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Advection => "advection",
            Equation::Burgers => "burgers",
        })
    }
}

impl FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advection" => Ok(Equation::Advection),
            "burgers" => Ok(Equation::Burgers),
            other => Err(Error::InvalidArgument(format!("unknown equation `{other}`"))),
        }
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub equation: Equation,
    pub grid: usize,
    pub sensor_grid: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub queries_per_sample: usize,
    pub time_slices: usize,
    pub amplitude: f64,
    pub corr_x: f64,
    pub corr_y: f64,
    pub smoothing: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    pub velocity_x: f64,
    pub velocity_y: f64,
    pub viscosity: f64,
    /// Largest Burgers step; 0 selects the stability bound of each sample.
    pub burgers_dt: f64,
    pub seed: u64,
}

impl DataConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(Error::Config {
                field: field.into(),
                reason,
            })
        };
        self.grf(0).validate()?;
        if self.sensor_grid == 0 || self.grid % self.sensor_grid != 0 {
            return bad(
                "sensor_grid",
                format!("{} does not divide grid {}", self.sensor_grid, self.grid),
            );
        }
        if self.n_train + self.n_test == 0 {
            return bad("n_train", "dataset needs at least one sample".into());
        }
        if self.queries_per_sample == 0 {
            return bad("queries_per_sample", "must be >= 1".into());
        }
        if self.time_slices < 2 {
            return bad("time_slices", "must be >= 2".into());
        }
        if !(self.viscosity >= 0.0) {
            return bad("viscosity", "must be >= 0".into());
        }
        if !(self.burgers_dt >= 0.0) {
            return bad("burgers_dt", "must be >= 0".into());
        }
        Ok(())
    }

    pub fn sensors(&self) -> usize {
        self.sensor_grid * self.sensor_grid
    }

    pub fn n_samples(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn grf(&self, seed: u64) -> GrfConfig {
        GrfConfig {
            n: self.grid,
            amplitude: self.amplitude,
            corr_x: self.corr_x,
            corr_y: self.corr_y,
            smoothing: self.smoothing,
            lo: self.range_lo,
            hi: self.range_hi,
            seed,
        }
    }

    /// Grid indices of the sensors, row-major over the sensor subgrid.
    pub fn sensor_indices(&self) -> Vec<(usize, usize)> {
        let stride = self.grid / self.sensor_grid;
        (0..self.sensor_grid)
            .flat_map(|b| (0..self.sensor_grid).map(move |a| (a * stride, b * stride)))
            .collect()
    }

    pub fn sensor_locations(&self) -> Vec<[f64; 2]> {
        let h = 1.0 / self.grid as f64;
        self.sensor_indices()
            .into_iter()
            .map(|(i, j)| [i as f64 * h, j as f64 * h])
            .collect()
    }

    pub fn slice_time(&self, slice: usize) -> f64 {
        slice as f64 / (self.time_slices - 1) as f64
    }

    fn burgers_step(&self, solver: &BurgersSolver, u0: &Field2D) -> f64 {
        let limit = solver.stable_dt(u0);
        if self.burgers_dt > 0.0 {
            self.burgers_dt.min(limit)
        } else {
            limit
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub u_s: Vec<f64>,
    pub queries: Vec<[f64; 3]>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DataConfig,
    pub sensors: Vec<[f64; 2]>,
    /// The first `config.n_train` samples are the training split.
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn train(&self) -> &[Sample] {
        &self.samples[..self.config.n_train.min(self.samples.len())]
    }

    pub fn test(&self) -> &[Sample] {
        &self.samples[self.config.n_train.min(self.samples.len())..]
    }

    pub fn d(&self) -> usize {
        self.sensors.len()
    }
}

/// Initial condition of sample `index` and the generator positioned after it.
fn initial_condition(cfg: &DataConfig, index: usize) -> Result<(Field2D, rand_chacha::ChaCha8Rng)> {
    let mut rng = substream(cfg.seed, Stream::Data, index as u64);
    let u0 = sample_grf_with(&cfg.grf(cfg.seed), &mut rng)?;
    Ok((u0, rng))
}

/// Solution fields of sample `index` at the requested slices (ascending).
pub fn solution_slices(cfg: &DataConfig, index: usize, slices: &[usize]) -> Result<Vec<Field2D>> {
    let (u0, _) = initial_condition(cfg, index)?;
    solve_slices(cfg, &u0, slices)
}

fn solve_slices(cfg: &DataConfig, u0: &Field2D, slices: &[usize]) -> Result<Vec<Field2D>> {
    match cfg.equation {
        Equation::Advection => {
            let fft = Fft2::new(u0.n);
            let coeffs = fft.forward_real(&u0.values);
            Ok(slices
                .iter()
                .map(|&s| advect_coeffs(&fft, &coeffs, cfg.velocity_x, cfg.velocity_y, cfg.slice_time(s)))
                .collect())
        }
        Equation::Burgers => {
            let last = slices.iter().copied().max().unwrap_or(0);
            let solver = BurgersSolver::new(u0.n, cfg.viscosity)?;
            let dt = cfg.burgers_step(&solver, u0);
            let all = solver.slices(u0, cfg.time_slices, 1.0, last, dt)?;
            Ok(slices.iter().map(|&s| all[s].clone()).collect())
        }
    }
}

pub fn generate_sample(cfg: &DataConfig, index: usize) -> Result<Sample> {
    let (u0, mut rng) = initial_condition(cfg, index)?;
    let u_s = cfg.sensor_indices().iter().map(|&(i, j)| u0.at(i, j)).collect();
    let n = cfg.grid;
    let picks: Vec<(usize, usize, usize)> = (0..cfg.queries_per_sample)
        .map(|_| {
            (
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..cfg.time_slices),
            )
        })
        .collect();
    let mut needed: Vec<usize> = picks.iter().map(|p| p.2).collect();
    needed.sort_unstable();
    needed.dedup();
    let fields = solve_slices(cfg, &u0, &needed)?;
    let h = 1.0 / n as f64;
    let mut queries = Vec::with_capacity(picks.len());
    let mut targets = Vec::with_capacity(picks.len());
    for (i, j, s) in picks {
        let pos = needed.binary_search(&s).expect("slice was solved");
        queries.push([i as f64 * h, j as f64 * h, cfg.slice_time(s)]);
        targets.push(fields[pos].at(i, j));
    }
    Ok(Sample {
        u_s,
        queries,
        targets,
    })
}

/// Builds every sample in parallel; the result depends only on `cfg`.
pub fn build_dataset(cfg: &DataConfig) -> Result<Dataset> {
    cfg.validate()?;
    let samples = (0..cfg.n_samples())
        .into_par_iter()
        .map(|i| generate_sample(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        config: cfg.clone(),
        sensors: cfg.sensor_locations(),
        samples,
    })
}
