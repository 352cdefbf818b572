//! Full-batch gradient descent with parameter masks and seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, QnnError, Result};
use crate::network::Network;
use crate::oracles::horner;
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Mean squared error.
    Mse,
    /// Mean `ln(1 + exp(−y·f))` for labels `y = ±1`.
    Logistic,
}

impl Loss {
    /// Loss value and its derivative with respect to the prediction.
    fn eval(self, pred: f64, target: f64) -> (f64, f64) {
        match self {
            Loss::Mse => {
                let d = pred - target;
                (d * d, 2.0 * d)
            }
            Loss::Logistic => {
                let m = -target * pred;
                // softplus(m) and its derivative sigmoid(m), computed stably
                let value = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
                let sig = if m >= 0.0 {
                    1.0 / (1.0 + (-m).exp())
                } else {
                    let e = m.exp();
                    e / (1.0 + e)
                };
                (value, -target * sig)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Trainable parameters start uniform in `[−init_scale, init_scale]`;
    /// zero keeps the parameters of the network passed in.
    pub init_scale: f64,
    pub restarts: usize,
    /// Run restarts on the rayon pool. Results do not depend on this flag.
    #[serde(default)]
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::Mse,
            learning_rate: 2.0e-3,
            iterations: 600,
            seed: 0,
            init_scale: 0.5,
            restarts: 1,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return invalid("learning rate must be positive");
        }
        if self.iterations == 0 {
            return invalid("iterations must be at least 1");
        }
        if self.restarts == 0 {
            return invalid("restarts must be at least 1");
        }
        if !(self.init_scale >= 0.0) {
            return invalid("init scale must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        if let Some(first) = inputs.first() {
            let n = first.len();
            if inputs.iter().any(|x| x.len() != n) {
                return invalid("inconsistent input dimensions");
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub seed: u64,
    /// Loss after the last step, `None` if the run diverged.
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Loss before each step of the winning restart.
    pub loss_history: Vec<f64>,
    pub best_restart: usize,
    pub restarts: Vec<RestartResult>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.restarts[self.best_restart].final_loss.unwrap_or(f64::NAN)
    }
}

/// Seed of restart `index` derived from the base seed (SplitMix64 step).
pub fn restart_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean loss over the dataset.
pub fn dataset_loss(net: &Network, data: &Dataset, loss: Loss) -> Result<f64> {
    let mut total = 0.0;
    for (x, &t) in data.inputs.iter().zip(&data.targets) {
        total += loss.eval(net.eval_scalar(x)?, t).0;
    }
    Ok(total / data.len() as f64)
}

/// Mean loss and its gradient over all trainable parameters.
pub fn loss_and_gradient(net: &Network, data: &Dataset, loss: Loss) -> Result<(f64, Vec<f64>)> {
    let n = data.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; net.trainable_count()];
    for (x, &t) in data.inputs.iter().zip(&data.targets) {
        let y = net.eval_scalar(x)?;
        let (l, dl) = loss.eval(y, t);
        total += l;
        let g = net.backward(x, &[dl / n])?;
        grad.iter_mut().zip(&g.values).for_each(|(a, b)| *a += b);
    }
    Ok((total / n, grad))
}

fn run_restart(net: &Network, data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<(Network, Vec<f64>, Option<f64>)> {
    let mut net = net.clone();
    let trainable = net.trainable_indices();
    let mut params = net.params();
    if cfg.init_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &i in &trainable {
            params[i] = rng.gen_range(-cfg.init_scale..=cfg.init_scale);
        }
        net.set_params(&params)?;
    }
    let mut history = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let (l, grad) = loss_and_gradient(&net, data, cfg.loss)?;
        if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Ok((net, history, None));
        }
        history.push(l);
        for (&i, g) in trainable.iter().zip(&grad) {
            params[i] -= cfg.learning_rate * g;
        }
        net.set_params(&params)?;
    }
    let final_loss = dataset_loss(&net, data, cfg.loss)?;
    Ok((net, history, final_loss.is_finite().then_some(final_loss)))
}

/// Full-batch gradient descent; the best of `cfg.restarts` seeded runs by
/// final loss wins (ties go to the lower restart index). Parameters with
/// mask `false` are never modified.
pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    net.validate()?;
    if data.is_empty() {
        return invalid("empty dataset");
    }
    check_dim(net.input_dim, data.input_dim())?;
    if net.output_dim() != 1 {
        return invalid("training expects a single-output network");
    }
    let seeds: Vec<u64> = (0..cfg.restarts).map(|i| restart_seed(cfg.seed, i)).collect();
    let runs: Vec<Result<(Network, Vec<f64>, Option<f64>)>> = if cfg.parallel {
        seeds.par_iter().map(|&s| run_restart(net, data, cfg, s)).collect()
    } else {
        seeds.iter().map(|&s| run_restart(net, data, cfg, s)).collect()
    };
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let restarts: Vec<RestartResult> = seeds
        .iter()
        .zip(&runs)
        .map(|(&seed, (_, _, l))| RestartResult { seed, final_loss: *l })
        .collect();
    let best = restarts
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.final_loss.map(|l| (i, l)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or(QnnError::Diverged { restarts: cfg.restarts })?;
    let (network, loss_history, _) = runs.into_iter().nth(best).expect("best index in range");
    Ok(TrainOutcome {
        network,
        loss_history,
        best_restart: best,
        restarts,
    })
}

/// Two concentric rings in the plane: `n_per_class` points at radius
/// `r_inner ± noise` labelled `+1`, then `n_per_class` at `r_outer ± noise`
/// labelled `−1`.
pub fn make_rings_dataset(n_per_class: usize, r_inner: f64, r_outer: f64, noise: f64, seed: u64) -> Result<Dataset> {
    if !(0.0 < r_inner && r_inner < r_outer) {
        return invalid("ring radii must satisfy 0 < r_inner < r_outer");
    }
    if n_per_class == 0 {
        return invalid("need at least one point per ring");
    }
    if !(noise >= 0.0) {
        return invalid("noise must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(2 * n_per_class);
    let mut targets = Vec::with_capacity(2 * n_per_class);
    for (radius, label) in [(r_inner, 1.0), (r_outer, -1.0)] {
        for _ in 0..n_per_class {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = if noise > 0.0 { radius + rng.gen_range(-noise..=noise) } else { radius };
            inputs.push(vec![r * angle.cos(), r * angle.sin()]);
            targets.push(label);
        }
    }
    Dataset::new(inputs, targets)
}

/// `n` evenly spaced samples of `p` on `[lo, hi]`, endpoints included.
pub fn make_poly_dataset(p: &Polynomial, lo: f64, hi: f64, n: usize) -> Result<Dataset> {
    if !(lo < hi) || n < 2 {
        return invalid("need lo < hi and n >= 2");
    }
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect();
    let targets = xs.iter().map(|x| horner(p, x)).collect();
    Dataset::new(xs.into_iter().map(|x| vec![x]).collect(), targets)
}

/// Fraction of points whose output sign matches the label sign
/// (non-positive outputs count as the negative class).
pub fn accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    let mut hits = 0usize;
    for (x, &t) in data.inputs.iter().zip(&data.targets) {
        if (net.eval_scalar(x)? > 0.0) == (t > 0.0) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}

/// Mean absolute error of a single-output network on a regression dataset.
pub fn mean_abs_error(net: &Network, data: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for (x, &t) in data.inputs.iter().zip(&data.targets) {
        total += (net.eval_scalar(x)? - t).abs();
    }
    Ok(total / data.len().max(1) as f64)
}
