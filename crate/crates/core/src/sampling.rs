//! Exact joint sampling of `W(t)` and `X(t)` and the Monte Carlo kernels.
//!
//! Sampling is exact on any time grid: by the renewal property the law of
//! `W(s + Δ)` given `W(s) = a` is Gaussian with mean `μ(a, Δ)` and covariance
//! `R(Δ)`, and `R(Δ) = L L′` with the closed-form lower-triangular factor
//! `L = T⁻¹(Δ) A⁻¹ Λ^{−1/2}`.
//!
//! Random streams: every path is driven by a `ChaCha8Rng` seeded from the
//! master seed with `seed_from_u64`, then switched to stream `path_index`
//! with `set_stream`. Within a path, each time step consumes `n + 1` standard
//! normals in component order. Monte Carlo estimators group paths into
//! batches of [`BATCH_PATHS`] consecutive indices and fold the batch moments
//! in index order, so a parallel driver that evaluates batches concurrently
//! reproduces the sequential result bit for bit.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::density::{covariance_r, DensityKernel, StateVector};
use crate::math::{self, CompensatedSum};
use crate::{Error, Result};

/// Paths per Monte Carlo batch.
pub const BATCH_PATHS: u64 = 1024;

/// Generator for one path: master seed, then stream `path_index`.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// One sampled trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub seed: u64,
}

impl PathSample {
    pub fn order(&self) -> usize {
        self.states.first().map_or(0, StateVector::order)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// How the step covariance `R(Δ)` is square-rooted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SquareRoot {
    /// `T⁻¹(Δ) A⁻¹ Λ^{−1/2}`.
    #[default]
    Factored,
    /// Numerical Cholesky of `R(Δ)`; falls back to `Factored` when the
    /// factorization breaks down (small `Δ` or large `n`).
    Cholesky,
}

#[derive(Clone, Debug)]
pub struct PathSampler {
    kernel: DensityKernel,
    root: SquareRoot,
}

impl PathSampler {
    pub fn new(order: usize) -> Self {
        PathSampler {
            kernel: DensityKernel::new(order),
            root: SquareRoot::default(),
        }
    }

    pub fn with_square_root(mut self, root: SquareRoot) -> Self {
        self.root = root;
        self
    }

    pub fn order(&self) -> usize {
        self.kernel.order()
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    /// Lower-triangular `L` with `L L′ = R(Δ)`.
    pub fn step_factor(&self, dt: f64) -> Result<DMatrix<f64>> {
        match self.root {
            SquareRoot::Factored => self.kernel.covariance_factor(dt),
            SquareRoot::Cholesky => {
                let r = covariance_r(self.order(), dt)?;
                match nalgebra::Cholesky::new(r) {
                    Some(c) if c.l_dirty().iter().all(|x| x.is_finite()) => Ok(c.unpack()),
                    _ => self.kernel.covariance_factor(dt),
                }
            }
        }
    }

    /// Advance `state` by `dt` in place: `state ← μ(state, dt) + L z`.
    pub fn step<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        state: &mut [f64],
        dt: f64,
        factor: &DMatrix<f64>,
        scratch: &mut Vec<f64>,
    ) {
        let size = state.len();
        scratch.clear();
        scratch.extend((0..size).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // μ_k = Σ_j dt^j/j! a_{k−j}, from the top down so lower entries are still old
        for k in (0..size).rev() {
            let mut acc = state[k];
            let mut p = 1.0;
            for j in 1..=k {
                p *= dt / j as f64;
                acc += p * state[k - j];
            }
            for (j, z) in scratch.iter().enumerate().take(k + 1) {
                acc += factor[(k, j)] * z;
            }
            state[k] = acc;
        }
    }

    pub fn sample_w(&self, times: &[f64], seed: u64) -> Result<PathSample> {
        self.sample_w_stream(times, seed, 0)
    }

    /// `W` at `times`, started from `W(0) = 0`, on stream `path_index`.
    pub fn sample_w_stream(&self, times: &[f64], seed: u64, path_index: u64) -> Result<PathSample> {
        validate_times(times)?;
        if times[0] <= 0.0 {
            return Err(Error::NonPositiveTime(times[0]));
        }
        let mut rng = path_rng(seed, path_index);
        let mut state = alloc::vec![0.0; self.order() + 1];
        let mut scratch = Vec::with_capacity(state.len());
        let mut states = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in times {
            let dt = t - prev;
            let factor = self.step_factor(dt)?;
            self.step(&mut rng, &mut state, dt, &factor, &mut scratch);
            states.push(StateVector::new(state.clone())?);
            prev = t;
        }
        Ok(PathSample {
            times: times.to_vec(),
            states,
            seed,
        })
    }

    pub fn sample_x(&self, times: &[f64], seed: u64) -> Result<PathSample> {
        self.sample_x_stream(times, seed, 0)
    }

    /// `X_k(t) = e^{−(k+1/2)t} W_k(e^t)` at `times` (any sign).
    pub fn sample_x_stream(&self, times: &[f64], seed: u64, path_index: u64) -> Result<PathSample> {
        validate_times(times)?;
        let clock: Vec<f64> = times.iter().map(|&t| math::exp(t)).collect();
        let w = self.sample_w_stream(&clock, seed, path_index)?;
        let states = w
            .states
            .into_iter()
            .zip(times)
            .map(|(s, &t)| {
                let x = s
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * math::exp(-(k as f64 + 0.5) * t))
                    .collect();
                StateVector::new(x)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PathSample {
            times: times.to_vec(),
            states,
            seed,
        })
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonIncreasingTimes);
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonIncreasingTimes);
    }
    Ok(())
}

pub fn sample_w(order: usize, times: &[f64], seed: u64) -> Result<PathSample> {
    PathSampler::new(order).sample_w(times, seed)
}

pub fn sample_x(order: usize, times: &[f64], seed: u64) -> Result<PathSample> {
    PathSampler::new(order).sample_x(times, seed)
}

/// Running first and second moments with compensated sums.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl Moments {
    pub fn push(&mut self, y: f64) {
        self.count += 1;
        self.sum.add(y);
        self.sum_sq.add(y * y);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.mean();
        ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        math::sqrt(self.variance() / self.count as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub grid_size: usize,
    pub seed: u64,
}

/// `E exp(−(θ²/2) ∫₀¹ W₁²) = (2 / (cosh² √(θ/2) + cos² √(θ/2)))^{1/2}`.
pub fn laplace_closed_form(theta: f64) -> f64 {
    let x = math::sqrt(theta / 2.0);
    let ch = libm::cosh(x);
    let c = libm::cos(x);
    math::sqrt(2.0 / (ch * ch + c * c))
}

/// Monte Carlo setup for the quadratic-functional Laplace transform of `W_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceRun {
    thetas: Vec<f64>,
    n_paths: u64,
    grid_size: usize,
    seed: u64,
}

impl LaplaceRun {
    pub fn new(thetas: &[f64], n_paths: u64, grid_size: usize, seed: u64) -> Result<Self> {
        if thetas.is_empty() || thetas.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig("theta must be positive"));
        }
        if n_paths < 2 {
            return Err(Error::InvalidConfig("at least two paths are required"));
        }
        if grid_size < 100 {
            return Err(Error::InvalidConfig("grid size must be at least 100"));
        }
        Ok(LaplaceRun {
            thetas: thetas.to_vec(),
            n_paths,
            grid_size,
            seed,
        })
    }

    pub fn batches(&self) -> u64 {
        self.n_paths.div_ceil(BATCH_PATHS)
    }

    /// Trapezoid approximation of `∫₀¹ W₁(t)² dt` along one exact path.
    pub fn path_integral(&self, sampler: &PathSampler, factor: &DMatrix<f64>, path_index: u64) -> f64 {
        let mut rng = path_rng(self.seed, path_index);
        let h = 1.0 / self.grid_size as f64;
        let mut state = [0.0; 2];
        let mut scratch = Vec::with_capacity(2);
        let mut acc = CompensatedSum::default();
        for i in 1..=self.grid_size {
            sampler.step(&mut rng, &mut state, h, factor, &mut scratch);
            let sq = state[1] * state[1];
            acc.add(if i == self.grid_size { 0.5 * sq } else { sq });
        }
        h * acc.value()
    }

    /// Moments of `exp(−(θ²/2) I)` for each θ over one batch of paths.
    pub fn batch(&self, batch_index: u64) -> Vec<Moments> {
        let sampler = PathSampler::new(1);
        let factor = sampler
            .step_factor(1.0 / self.grid_size as f64)
            .expect("grid step is positive");
        let start = batch_index * BATCH_PATHS;
        let end = (start + BATCH_PATHS).min(self.n_paths);
        let mut out = alloc::vec![Moments::default(); self.thetas.len()];
        for path in start..end {
            let integral = self.path_integral(&sampler, &factor, path);
            for (m, theta) in out.iter_mut().zip(&self.thetas) {
                m.push(math::exp(-0.5 * theta * theta * integral));
            }
        }
        out
    }

    /// Fold per-batch moments (in batch order) into estimates.
    pub fn finish(&self, batches: impl IntoIterator<Item = Vec<Moments>>) -> Vec<MCEstimate> {
        let mut total = alloc::vec![Moments::default(); self.thetas.len()];
        for b in batches {
            for (t, m) in total.iter_mut().zip(&b) {
                t.merge(m);
            }
        }
        total
            .iter()
            .map(|m| MCEstimate {
                mean: m.mean(),
                std_error: m.std_error(),
                n_paths: m.count(),
                grid_size: self.grid_size,
                seed: self.seed,
            })
            .collect()
    }

    pub fn run(&self) -> Vec<MCEstimate> {
        self.finish((0..self.batches()).map(|b| self.batch(b)))
    }
}

/// Sequential Monte Carlo estimate of the Laplace functional at one θ.
pub fn mc_quadratic_laplace(theta: f64, n_paths: u64, grid_size: usize, seed: u64) -> Result<MCEstimate> {
    Ok(LaplaceRun::new(&[theta], n_paths, grid_size, seed)?.run()[0])
}

/// Acceptance band for Monte Carlo comparisons: three standard errors plus
/// `2 / grid_size` for trapezoid bias.
pub fn mc_tolerance(estimate: &MCEstimate) -> f64 {
    3.0 * estimate.std_error + 2.0 / estimate.grid_size as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    pub order: usize,
    pub trials: usize,
    pub max_rel_error: f64,
}

/// A random `(a, w, t)` probe for the transition symmetry check.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryProbe {
    pub a: StateVector,
    pub w: StateVector,
    pub t: f64,
}

impl SymmetryProbe {
    /// `(a, w) ↦ (w*, a*)`; an involution.
    pub fn swapped(&self) -> Self {
        SymmetryProbe {
            a: self.w.star(),
            w: self.a.star(),
            t: self.t,
        }
    }
}

pub fn symmetry_probe<R: Rng + ?Sized>(rng: &mut R, order: usize) -> SymmetryProbe {
    let mut draw = || {
        let v = (0..=order).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        StateVector::new(v).expect("normal draws are finite")
    };
    let a = draw();
    let w = draw();
    let t = rng.random_range(0.1..10.0);
    SymmetryProbe { a, w, t }
}

/// Compares `π_a(w,t)` with `π_{w*}(a*,t)` on random probes. Relative error
/// is measured on the log scale as `|exp(Δ ln π) − 1|`, which stays defined
/// where the densities themselves underflow.
pub fn mc_transition_symmetry(order: usize, trials: usize, seed: u64) -> Result<SymmetryReport> {
    if order > 6 {
        return Err(Error::InvalidConfig("symmetry check supports n <= 6"));
    }
    let kernel = DensityKernel::new(order);
    let mut rng = path_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let p = symmetry_probe(&mut rng, order);
        let q = p.swapped();
        let lhs = kernel.log_transition_density(&p.w, &p.a, p.t)?;
        let rhs = kernel.log_transition_density(&q.w, &q.a, q.t)?;
        worst = worst.max(math::expm1(lhs - rhs).abs());
    }
    Ok(SymmetryReport {
        order,
        trials,
        max_rel_error: worst,
    })
}
