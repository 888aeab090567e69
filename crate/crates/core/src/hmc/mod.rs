//! A general-purpose Hamiltonian Monte Carlo sampler.
//!
//! Chains run independently (in parallel) over any [`Target`] exposing a
//! differentiable log-density. Each transition draws a momentum from the
//! current diagonal mass matrix, integrates a jittered-length leapfrog
//! trajectory, and applies a Metropolis correction. During warmup the step
//! size follows dual averaging toward the target acceptance statistic and
//! the mass matrix is estimated from the second half of warmup draws; the
//! post-warmup configuration is frozen.
//!
//! Randomness: chain `c` of a run seeded `s` uses the substreams
//! `(s, "init", c)` and `(s, "chain", c)`, so results are bit-reproducible
//! regardless of thread scheduling.

mod leapfrog;
mod stepsize;

pub use leapfrog::{leapfrog, leapfrog_with_mass};
pub use stepsize::DualAverage;

use crate::rng::substream;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

/// Energy error beyond which a trajectory is declared divergent.
pub const DIVERGENCE_ENERGY: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum HmcError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("chain {chain}: initial log-density is not finite")]
    NonFiniteInitialDensity { chain: usize },
    #[error("chain {chain}: every warmup proposal diverged; the target gradient is likely broken or the geometry pathological")]
    AllWarmupDivergent { chain: usize },
}

/// A differentiable log-density the sampler can draw from.
///
/// Implementations must be pure: the engine calls them concurrently from
/// multiple chains.
pub trait Target: Sync {
    fn dim(&self) -> usize;
    /// Unnormalized log-density at `position`.
    fn log_density(&self, position: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the log-density.
    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;
}

/// [`Target`] built from plain callables.
pub struct FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    dim: usize,
    log_density: F,
    gradient: G,
}

impl<F, G> FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, log_density: F, gradient: G) -> Self {
        FnTarget { dim, log_density, gradient }
    }
}

impl<F, G> Target for FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, position: &[f64]) -> f64 {
        (self.log_density)(position)
    }

    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        (self.gradient)(position, grad);
        (self.log_density)(position)
    }
}

/// Sampler configuration. `iterations` is the total per chain; the first
/// `warmup_fraction` of it is adaptation and is not retained.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    pub chains: usize,
    pub iterations: usize,
    pub warmup_fraction: f64,
    pub target_accept: f64,
    /// Base leapfrog trajectory length; actual lengths get +/-20% uniform
    /// jitter to avoid resonances.
    pub leapfrog_steps: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            chains: 2,
            iterations: 10_000,
            warmup_fraction: 0.5,
            target_accept: 0.8,
            leapfrog_steps: 32,
            seed: 0,
        }
    }
}

impl HmcConfig {
    /// Warmup iterations per chain.
    pub fn warmup(&self) -> usize {
        (self.iterations as f64 * self.warmup_fraction).round() as usize
    }

    /// Retained (post-warmup) iterations per chain.
    pub fn retained(&self) -> usize {
        self.iterations - self.warmup()
    }

    pub fn validate(&self) -> Result<(), HmcError> {
        let fail = |msg: &str| Err(HmcError::InvalidConfig(msg.to_string()));
        if self.chains == 0 {
            return fail("chains must be >= 1");
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return fail("warmup_fraction must be in (0, 1)");
        }
        if self.warmup() < 100 {
            return fail("warmup must be at least 100 iterations");
        }
        if self.retained() == 0 {
            return fail("no retained iterations after warmup");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return fail("target_accept must be in (0, 1)");
        }
        if self.leapfrog_steps == 0 {
            return fail("leapfrog_steps must be >= 1");
        }
        Ok(())
    }
}

/// Row-major draws of one chain: `retained x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    dim: usize,
    data: Vec<f64>,
}

impl ChainDraws {
    fn with_capacity(dim: usize, rows: usize) -> Self {
        ChainDraws { dim, data: Vec::with_capacity(dim * rows) }
    }

    /// Wraps a row-major buffer of whole draws.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "buffer is not whole rows");
        ChainDraws { dim, data }
    }

    fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_draws(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies the trace of one coordinate.
    pub fn param(&self, p: usize) -> Vec<f64> {
        assert!(p < self.dim, "parameter index out of range");
        self.data.iter().skip(p).step_by(self.dim).copied().collect()
    }
}

/// Retained draws and per-chain sampling statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSet {
    pub draws: Vec<ChainDraws>,
    /// Fraction of accepted post-warmup transitions, per chain.
    pub accept_rate: Vec<f64>,
    /// Frozen step size used after warmup, per chain.
    pub step_size: Vec<f64>,
    /// Divergent post-warmup proposals, per chain.
    pub divergence_count: Vec<usize>,
    pub dim: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl ChainSet {
    pub fn chain_count(&self) -> usize {
        self.draws.len()
    }

    pub fn retained(&self) -> usize {
        self.draws.first().map_or(0, ChainDraws::n_draws)
    }

    /// Per-chain traces of one parameter.
    pub fn param_chains(&self, p: usize) -> Vec<Vec<f64>> {
        self.draws.iter().map(|c| c.param(p)).collect()
    }

    /// All chains' draws of one parameter, pooled in chain order.
    pub fn pooled_param(&self, p: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.retained() * self.chain_count());
        for c in &self.draws {
            v.extend(c.param(p));
        }
        v
    }
}

/// Starting position with coordinates uniform on [-1, 1], from the
/// per-chain init substream.
pub fn initialize_chain(dim: usize, seed: u64, chain: u64) -> Vec<f64> {
    let mut rng = substream(seed, "init", chain);
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Metropolis acceptance probability `min(1, exp(h_old - h_new))`.
pub fn acceptance_probability(h_old: f64, h_new: f64) -> f64 {
    let delta = h_old - h_new;
    if !delta.is_finite() {
        return 0.0;
    }
    delta.exp().min(1.0)
}

fn kinetic_energy(momentum: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * momentum.iter().zip(inv_mass).map(|(p, im)| p * p * im).sum::<f64>()
}

fn draw_momentum(rng: &mut ChaCha12Rng, inv_mass: &[f64]) -> Vec<f64> {
    inv_mass
        .iter()
        .map(|im| {
            let z: f64 = StandardNormal.sample(rng);
            z / im.sqrt()
        })
        .collect()
}

fn jitter_steps(rng: &mut ChaCha12Rng, base: usize) -> usize {
    let lo = ((0.8 * base as f64).ceil() as usize).max(1);
    let hi = ((1.2 * base as f64).floor() as usize).max(lo);
    rng.random_range(lo..=hi)
}

struct Transition {
    accepted: bool,
    divergent: bool,
    accept_stat: f64,
}

fn transition<T: Target>(
    target: &T,
    position: &mut Vec<f64>,
    logp: &mut f64,
    step_size: f64,
    steps: usize,
    inv_mass: &[f64],
    rng: &mut ChaCha12Rng,
) -> Transition {
    let momentum = draw_momentum(rng, inv_mass);
    let h_old = -*logp + kinetic_energy(&momentum, inv_mass);

    let mut q = position.clone();
    let mut p = momentum;
    let mut trajectory_logp = f64::NAN;
    let ok = leapfrog_with_mass(&mut q, &mut p, step_size, steps, inv_mass, |pos, grad| {
        trajectory_logp = target.log_density_grad(pos, grad);
    });
    // the final gradient evaluation in the integrator is at the end position,
    // so trajectory_logp is the end-point density when integration succeeded
    let divergent = !ok || {
        let h_new = -trajectory_logp + kinetic_energy(&p, inv_mass);
        !(h_new - h_old).is_finite() || (h_new - h_old).abs() > DIVERGENCE_ENERGY
    };
    if divergent {
        // uniform draw still consumed to keep the stream layout fixed
        let _: f64 = rng.random();
        return Transition { accepted: false, divergent: true, accept_stat: 0.0 };
    }

    let h_new = -trajectory_logp + kinetic_energy(&p, inv_mass);
    let accept_stat = acceptance_probability(h_old, h_new);
    let u: f64 = rng.random();
    let accepted = u < accept_stat;
    if accepted {
        *position = q;
        *logp = trajectory_logp;
    }
    Transition { accepted, divergent: false, accept_stat }
}

/// One-leapfrog-step probe for a starting step size: double or halve until
/// the acceptance statistic crosses one half.
fn find_reasonable_step<T: Target>(
    target: &T,
    position: &[f64],
    logp: f64,
    inv_mass: &[f64],
    rng: &mut ChaCha12Rng,
) -> f64 {
    let momentum = draw_momentum(rng, inv_mass);
    let h_old = -logp + kinetic_energy(&momentum, inv_mass);
    let probe = |eps: f64| -> f64 {
        let mut q = position.to_vec();
        let mut p = momentum.clone();
        let mut end_logp = f64::NAN;
        let ok = leapfrog_with_mass(&mut q, &mut p, eps, 1, inv_mass, |pos, grad| {
            end_logp = target.log_density_grad(pos, grad);
        });
        if !ok {
            return 0.0;
        }
        acceptance_probability(h_old, -end_logp + kinetic_energy(&p, inv_mass))
    };

    let mut eps = 1.0;
    let mut a = probe(eps);
    if a > 0.5 {
        for _ in 0..60 {
            eps *= 2.0;
            a = probe(eps);
            if a <= 0.5 {
                break;
            }
        }
    } else {
        for _ in 0..60 {
            eps *= 0.5;
            a = probe(eps);
            if a > 0.5 {
                break;
            }
        }
    }
    eps.clamp(1e-10, 1e4)
}

struct ChainResult {
    draws: ChainDraws,
    accept_rate: f64,
    step_size: f64,
    divergences: usize,
}

fn run_chain<T: Target>(target: &T, config: &HmcConfig, chain: usize) -> Result<ChainResult, HmcError> {
    let dim = target.dim();
    let warmup = config.warmup();
    let retained = config.retained();
    let mut rng = substream(config.seed, "chain", chain as u64);

    let mut position = initialize_chain(dim, config.seed, chain as u64);
    let mut logp = target.log_density(&position);
    if !logp.is_finite() {
        return Err(HmcError::NonFiniteInitialDensity { chain });
    }

    let mut inv_mass = vec![1.0; dim];
    let mut step_size = find_reasonable_step(target, &position, logp, &inv_mass, &mut rng);
    let mut adapter = DualAverage::new(step_size, config.target_accept);

    // mass matrix window: [warmup/2, warmup - term), estimated once at the
    // switch point so dual averaging can re-tune under the final metric
    let term = (warmup / 5).clamp(25, 200);
    let mass_switch = warmup.saturating_sub(term);
    let window_start = warmup / 2;

    let mut mass_mean = vec![0.0; dim];
    let mut mass_m2 = vec![0.0; dim];
    let mut mass_n = 0usize;

    let mut warmup_divergences = 0usize;
    for t in 0..warmup {
        let tr = transition(target, &mut position, &mut logp, step_size, jitter_steps(&mut rng, config.leapfrog_steps), &inv_mass, &mut rng);
        if tr.divergent {
            warmup_divergences += 1;
        }
        adapter.advance(tr.accept_stat);
        step_size = adapter.current();

        if t >= window_start && t < mass_switch {
            mass_n += 1;
            for d in 0..dim {
                let delta = position[d] - mass_mean[d];
                mass_mean[d] += delta / mass_n as f64;
                mass_m2[d] += delta * (position[d] - mass_mean[d]);
            }
        }
        if t + 1 == mass_switch && mass_n >= 10 {
            let n = mass_n as f64;
            let shrink = n / (n + 5.0);
            for d in 0..dim {
                let var = mass_m2[d] / (n - 1.0);
                inv_mass[d] = (shrink * var + (1.0 - shrink) * 1e-3).max(1e-10);
            }
            step_size = find_reasonable_step(target, &position, logp, &inv_mass, &mut rng);
            adapter = DualAverage::new(step_size, config.target_accept);
        }
    }
    if warmup_divergences == warmup {
        return Err(HmcError::AllWarmupDivergent { chain });
    }
    step_size = adapter.adapted();

    let mut draws = ChainDraws::with_capacity(dim, retained);
    let mut accepted = 0usize;
    let mut divergences = 0usize;
    for _ in 0..retained {
        let tr = transition(target, &mut position, &mut logp, step_size, jitter_steps(&mut rng, config.leapfrog_steps), &inv_mass, &mut rng);
        if tr.accepted {
            accepted += 1;
        }
        if tr.divergent {
            divergences += 1;
        }
        draws.push_row(&position);
    }

    Ok(ChainResult {
        draws,
        accept_rate: accepted as f64 / retained as f64,
        step_size,
        divergences,
    })
}

/// Runs `config.chains` independent chains over the target and collects the
/// retained draws. Deterministic for a fixed seed; chains execute in
/// parallel.
pub fn hmc_sample<T: Target>(target: &T, config: &HmcConfig) -> Result<ChainSet, HmcError> {
    config.validate()?;
    let dim = target.dim();
    if dim == 0 {
        return Err(HmcError::InvalidConfig("target dimension must be >= 1".into()));
    }

    let results: Result<Vec<ChainResult>, HmcError> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect();
    let results = results?;

    let mut set = ChainSet {
        draws: Vec::with_capacity(results.len()),
        accept_rate: Vec::with_capacity(results.len()),
        step_size: Vec::with_capacity(results.len()),
        divergence_count: Vec::with_capacity(results.len()),
        dim,
        warmup: config.warmup(),
        seed: config.seed,
    };
    for r in results {
        set.draws.push(r.draws);
        set.accept_rate.push(r.accept_rate);
        set.step_size.push(r.step_size);
        set.divergence_count.push(r.divergences);
    }
    Ok(set)
}

/// Standard-normal target in any dimension, used by tests and calibration.
pub fn standard_normal_target(dim: usize) -> impl Target {
    FnTarget::new(
        dim,
        |q: &[f64]| -0.5 * q.iter().map(|x| x * x).sum::<f64>(),
        |q: &[f64], g: &mut [f64]| {
            for (gi, qi) in g.iter_mut().zip(q) {
                *gi = -qi;
            }
        },
    )
}
