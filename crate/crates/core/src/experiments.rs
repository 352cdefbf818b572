//! Experiment setups shared by the command-line harness and the acceptance
//! suite: targets, default configurations and runners.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::bernstein_coeffs;
use crate::builders::{
    build_deep_radial, build_factorization_trainable, build_poly_net, factor_coefficients, FactorLayout,
    RadialPartition,
};
use crate::error::{invalid, QnnError, Result};
use crate::factor::factor_polynomial;
use crate::network::{LayerSpec, Network};
use crate::neuron::{Activation, ConventionalNeuron, Neuron, QuadraticNeuron};
use crate::oracles::{grid_l1, grid_sup, horner, GridSpec};
use crate::poly::{FactoredForm, Polynomial};
use crate::trainer::{
    accuracy, make_poly_dataset, make_rings_dataset, mean_abs_error, restart_seed, train, Dataset, Loss,
    TrainConfig,
};

// ---------------------------------------------------------------------------
// Targets

/// `(x² + 1)(x − 1)(x² + 1.7x + 1.2)`, expanded.
pub fn quintic_target() -> Polynomial {
    Polynomial::new(vec![-1.2, -0.5, -0.5, 0.5, 0.7, 1.0])
}

pub fn quintic_factored() -> FactoredForm {
    FactoredForm {
        scale: 1.0,
        linear_roots: vec![1.0],
        quadratic_factors: vec![(0.0, 1.0), (1.7, 1.2)],
    }
}

pub const QUINTIC_DOMAIN: (f64, f64) = (-1.0, 0.0);

/// `cos(3π/200 · t² + π/2)`.
pub fn cosine_profile(t: f64) -> f64 {
    (3.0 * std::f64::consts::PI / 200.0 * t * t + std::f64::consts::FRAC_PI_2).cos()
}

/// Outer edge `10√2` of the cosine profile's support.
pub fn cosine_support() -> f64 {
    10.0 * std::f64::consts::SQRT_2
}

/// One interval per half period of the cosine profile in `t²`.
pub fn cosine_partition(delta: f64) -> Result<RadialPartition> {
    RadialPartition::new(
        vec![0.0, (200.0f64 / 3.0).sqrt(), (400.0f64 / 3.0).sqrt(), cosine_support()],
        vec![-1.0, 1.0, -1.0],
        delta,
    )
}

pub const DELTA_SWEEP: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

// ---------------------------------------------------------------------------
// Network templates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenKind {
    Quadratic,
    Conventional,
}

impl HiddenKind {
    pub fn label(self) -> &'static str {
        match self {
            HiddenKind::Quadratic => "quadratic",
            HiddenKind::Conventional => "conventional",
        }
    }
}

/// One quadratic neuron with identity activation.
pub fn single_quadratic(dim: usize) -> Result<Network> {
    Network::new(
        dim,
        vec![LayerSpec::new(vec![QuadraticNeuron::zeros(dim).into()], Activation::Identity)],
        vec![],
    )
}

/// `width` ReLU hidden neurons of the given kind and a linear read-out.
pub fn one_hidden_layer(dim: usize, width: usize, kind: HiddenKind) -> Result<Network> {
    if width == 0 {
        return invalid("hidden width must be at least 1");
    }
    let hidden: Vec<Neuron> = (0..width)
        .map(|_| match kind {
            HiddenKind::Quadratic => QuadraticNeuron::zeros(dim).into(),
            HiddenKind::Conventional => ConventionalNeuron { w: vec![0.0; dim], b: 0.0 }.into(),
        })
        .collect();
    Network::new(
        dim,
        vec![
            LayerSpec::new(hidden, Activation::Relu),
            LayerSpec::new(
                vec![ConventionalNeuron { w: vec![0.0; width], b: 0.0 }.into()],
                Activation::Identity,
            ),
        ],
        vec![],
    )
}

/// Trains `restarts` independent single-restart runs with seeds derived
/// from `cfg.seed`. Diverged runs come back as `None`.
pub fn independent_runs(
    template: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    restarts: usize,
) -> Result<Vec<Option<Network>>> {
    let run = |i: usize| -> Result<Option<Network>> {
        let one = TrainConfig {
            seed: restart_seed(cfg.seed, i),
            restarts: 1,
            parallel: false,
            ..cfg.clone()
        };
        match train(template, data, &one) {
            Ok(out) => Ok(Some(out.network)),
            Err(QnnError::Diverged { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let runs: Vec<Result<Option<Network>>> = if cfg.parallel {
        (0..restarts).into_par_iter().map(run).collect()
    } else {
        (0..restarts).map(run).collect()
    };
    runs.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Two rings

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingsConfig {
    pub n_per_class: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub noise: f64,
    pub data_seed: u64,
    pub seed: u64,
    pub restarts: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub init_scale: f64,
    pub conventional_widths: Vec<usize>,
    pub parallel: bool,
}

impl Default for RingsConfig {
    fn default() -> Self {
        Self {
            n_per_class: 60,
            r_inner: 1.0,
            r_outer: 2.0,
            noise: 0.1,
            data_seed: 0,
            seed: 0,
            restarts: 5,
            learning_rate: 0.1,
            iterations: 2000,
            init_scale: 0.5,
            conventional_widths: vec![1, 2, 4, 6],
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RingsModel {
    pub kind: HiddenKind,
    /// Hidden width; the single quadratic neuron counts as width 1.
    pub width: usize,
    /// Accuracy of each restart, `None` if it diverged.
    pub accuracies: Vec<Option<f64>>,
    /// Most accurate network across restarts.
    pub best: Option<Network>,
}

impl RingsModel {
    pub fn best_accuracy(&self) -> f64 {
        self.accuracies.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn reaches(&self, target: f64) -> bool {
        self.accuracies.iter().flatten().any(|&a| a >= target)
    }
}

#[derive(Debug, Clone)]
pub struct RingsResult {
    pub data: Dataset,
    pub quadratic: RingsModel,
    pub conventional: Vec<RingsModel>,
}

fn rings_model(template: &Network, kind: HiddenKind, width: usize, data: &Dataset, cfg: &TrainConfig, restarts: usize) -> Result<RingsModel> {
    let nets = independent_runs(template, data, cfg, restarts)?;
    let mut accuracies = Vec::with_capacity(nets.len());
    let mut best: Option<(f64, Network)> = None;
    for net in nets {
        let acc = match net {
            Some(n) => {
                let a = accuracy(&n, data)?;
                if best.as_ref().map_or(true, |(b, _)| a > *b) {
                    best = Some((a, n));
                }
                Some(a)
            }
            None => None,
        };
        accuracies.push(acc);
    }
    Ok(RingsModel {
        kind,
        width,
        accuracies,
        best: best.map(|(_, n)| n),
    })
}

/// Trains one quadratic neuron and conventional one-hidden-layer networks
/// of each width on the two-ring data with logistic loss.
pub fn run_rings(cfg: &RingsConfig) -> Result<RingsResult> {
    let data = make_rings_dataset(cfg.n_per_class, cfg.r_inner, cfg.r_outer, cfg.noise, cfg.data_seed)?;
    let train_cfg = TrainConfig {
        loss: Loss::Logistic,
        learning_rate: cfg.learning_rate,
        iterations: cfg.iterations,
        seed: cfg.seed,
        init_scale: cfg.init_scale,
        restarts: 1,
        parallel: cfg.parallel,
    };
    train_cfg.validate()?;
    let quadratic = rings_model(&single_quadratic(2)?, HiddenKind::Quadratic, 1, &data, &train_cfg, cfg.restarts)?;
    let conventional = cfg
        .conventional_widths
        .iter()
        .map(|&w| {
            let template = one_hidden_layer(2, w, HiddenKind::Conventional)?;
            rings_model(&template, HiddenKind::Conventional, w, &data, &train_cfg, cfg.restarts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RingsResult {
        data,
        quadratic,
        conventional,
    })
}

// ---------------------------------------------------------------------------
// Deep radial stack on the cosine profile

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSweepRow {
    pub delta: f64,
    /// L1 distance to the piecewise-constant step profile.
    pub l1_step: f64,
    /// L1 distance to the cosine profile itself.
    pub l1_profile: f64,
}

/// Radial network evaluated along the first axis at distance `t`.
pub fn radial_at(net: &Network, t: f64) -> Result<f64> {
    let mut x = vec![0.0; net.input_dim];
    x[0] = t;
    net.eval_scalar(&x)
}

/// Grid L1 errors of the deep stack for each `delta`, over `[0, 10√2]`.
pub fn radial_delta_sweep(deltas: &[f64], grid_n: usize, input_dim: usize) -> Result<Vec<RadialSweepRow>> {
    let grid = GridSpec::new(0.0, cosine_support(), grid_n)?;
    deltas
        .iter()
        .map(|&delta| {
            let partition = cosine_partition(delta)?;
            let net = build_deep_radial(&partition, input_dim)?;
            let values: Vec<f64> = grid.points().map(|t| radial_at(&net, t)).collect::<Result<_>>()?;
            let at = |t: f64| values[((t - grid.lo) / grid.step()).round() as usize];
            Ok(RadialSweepRow {
                delta,
                l1_step: grid_l1(|t| partition.step_value(t), at, &grid),
                l1_profile: grid_l1(cosine_profile, at, &grid),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exact polynomial networks

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyReport {
    pub degree: usize,
    pub factored: FactoredForm,
    pub depth: usize,
    pub width: usize,
    pub depth_bound: usize,
    pub width_bound: usize,
    /// `max |net − horner| / (1 + |horner|)` over the sample points.
    pub max_rel_error: f64,
    pub points: usize,
}

/// `ceil(log2 k) + 1`.
pub fn product_tree_depth_bound(factors: usize) -> usize {
    let mut d = 0;
    while (1usize << d) < factors {
        d += 1;
    }
    d + 1
}

/// Factorizes `p`, builds its network and compares it with Horner at
/// `points` uniform random points in `[lo, hi]`.
pub fn poly_report(p: &Polynomial, points: usize, seed: u64, lo: f64, hi: f64) -> Result<(Network, PolyReport)> {
    if p.degree() == 0 {
        return invalid("polynomial must have degree at least 1");
    }
    let ff = factor_polynomial(p)?;
    let net = build_poly_net(&ff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_error: f64 = 0.0;
    for _ in 0..points {
        let x = rng.gen_range(lo..=hi);
        let want = horner(p, &x);
        let got = net.eval_scalar(&[x])?;
        max_rel_error = max_rel_error.max((got - want).abs() / (1.0 + want.abs()));
    }
    let report = PolyReport {
        degree: p.degree(),
        depth: net.depth(),
        width: net.max_width(),
        depth_bound: product_tree_depth_bound(ff.factor_count()),
        width_bound: p.degree(),
        factored: ff,
        max_rel_error,
        points,
    };
    Ok((net, report))
}

// ---------------------------------------------------------------------------
// Trainable factorization

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTrainConfig {
    pub samples: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub parallel: bool,
}

impl Default for FactorTrainConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            learning_rate: 2.0e-3,
            iterations: 600,
            restarts: 10,
            seed: 0,
            init_scale: 0.5,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorTrainResult {
    pub data: Dataset,
    pub network: Network,
    pub layout: FactorLayout,
    /// Mean absolute error of the selected restart on the training samples.
    pub mae: f64,
    /// Final mse and mean absolute error of every restart (`None` if diverged).
    pub restarts: Vec<Option<(f64, f64)>>,
    pub best_restart: usize,
    /// `[x², x, 1]` coefficients of each learned factor neuron.
    pub factors: Vec<[f64; 3]>,
    pub loss_history: Vec<f64>,
    /// Sup error against the target on a 1000-point grid of the domain.
    pub grid_sup_error: f64,
}

/// Fits the quintic target with the trainable factorization network
/// (one linear and two quadratic factors). The restart with the lowest
/// final mse is selected.
pub fn run_factor_train(cfg: &FactorTrainConfig) -> Result<FactorTrainResult> {
    let target = quintic_target();
    let (lo, hi) = QUINTIC_DOMAIN;
    let data = make_poly_dataset(&target, lo, hi, cfg.samples)?;
    let (template, layout) = build_factorization_trainable(5, 1, 2)?;
    let train_cfg = TrainConfig {
        loss: Loss::Mse,
        learning_rate: cfg.learning_rate,
        iterations: cfg.iterations,
        seed: cfg.seed,
        init_scale: cfg.init_scale,
        restarts: cfg.restarts,
        parallel: cfg.parallel,
    };
    let outcome = train(&template, &data, &train_cfg)?;

    // Per-restart errors for the report; the trainer only keeps the winner.
    let nets = independent_runs(&template, &data, &TrainConfig { restarts: 1, ..train_cfg.clone() }, cfg.restarts)?;
    let restarts = nets
        .iter()
        .map(|n| match n {
            Some(n) => Ok(Some((
                crate::trainer::dataset_loss(n, &data, Loss::Mse)?,
                mean_abs_error(n, &data)?,
            ))),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let network = outcome.network;
    let grid = GridSpec::new(lo, hi, 1000)?;
    let values: Vec<f64> = grid.points().map(|x| network.eval_scalar(&[x])).collect::<Result<_>>()?;
    let at = |x: f64| values[((x - grid.lo) / grid.step()).round() as usize];
    Ok(FactorTrainResult {
        mae: mean_abs_error(&network, &data)?,
        factors: factor_coefficients(&network),
        grid_sup_error: grid_sup(|x| horner(&target, &x), at, &grid),
        best_restart: outcome.best_restart,
        loss_history: outcome.loss_history,
        restarts,
        network,
        layout,
        data,
    })
}

// ---------------------------------------------------------------------------
// Bernstein approximants

/// `|x − 1/2|`.
pub fn abs_half(x: &BigRational) -> BigRational {
    (x - BigRational::new(BigInt::from(1), BigInt::from(2))).abs()
}

/// `k/(n−1)` for `k = 0..n`.
pub fn rational_grid(n: usize) -> Vec<BigRational> {
    (0..n)
        .map(|k| BigRational::new(BigInt::from(k), BigInt::from(n - 1)))
        .collect()
}

/// Exact `max |B_n f − f|` over the grid, rounded to `f64` at the end.
pub fn bernstein_sup_error(f: impl Fn(&BigRational) -> BigRational, n: usize, grid: &[BigRational]) -> Result<f64> {
    let b = bernstein_coeffs(&f, n)?;
    let worst = grid
        .iter()
        .map(|x| (horner(&b, x) - f(x)).abs())
        .max()
        .unwrap_or_default();
    Ok(worst.to_f64().unwrap_or(f64::NAN))
}

// ---------------------------------------------------------------------------
// Width sweep on a radial indicator sum

/// `Σ ε_i 1{||x|| ∈ [lo_i, hi_i)}` on the ball of the given radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTarget {
    pub dim: usize,
    pub radius: f64,
    /// `(lo, hi, sign)` per annulus.
    pub annuli: Vec<(f64, f64, f64)>,
}

impl AnnulusTarget {
    /// `count` disjoint annuli with random signs. Breakpoints are uniform
    /// in `(t/radius)^dim`, so each annulus carries a comparable share of
    /// the uniform measure on the ball.
    pub fn random(dim: usize, count: usize, radius: f64, seed: u64) -> Result<Self> {
        if dim == 0 || count == 0 || !(radius > 0.0) {
            return invalid("annulus target needs dim, count >= 1 and radius > 0");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cuts: Vec<f64> = (0..2 * count).map(|_| rng.gen_range(0.0..1.0)).collect();
        cuts.sort_by(f64::total_cmp);
        let annuli = cuts
            .chunks(2)
            .map(|c| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let t = |u: f64| radius * u.powf(1.0 / dim as f64);
                (t(c[0]), t(c[1]), sign)
            })
            .collect();
        Ok(Self { dim, radius, annuli })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.annuli
            .iter()
            .filter(|&&(lo, hi, _)| t >= lo && t < hi)
            .map(|a| a.2)
            .sum()
    }
}

/// `n` points uniform on the ball `||x|| ≤ radius` in `dim` dimensions.
pub fn sample_ball(dim: usize, n: usize, radius: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
            dir.into_iter().map(|v| v * r / norm).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSweepConfig {
    pub dims: Vec<usize>,
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub annuli: usize,
    pub radius: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub init_scale: f64,
    pub parallel: bool,
}

impl Default for WidthSweepConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 4],
            widths: vec![1, 2, 4, 8, 16, 32],
            seeds: (0..5).collect(),
            annuli: 3,
            radius: 1.0,
            train_samples: 400,
            test_samples: 2000,
            learning_rate: 0.05,
            iterations: 1500,
            init_scale: 0.5,
            parallel: false,
        }
    }
}

impl WidthSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.iter().any(|&w| w == 0) {
            return invalid("widths must be at least 1");
        }
        if self.dims.iter().any(|&d| d == 0) {
            return invalid("dimensions must be at least 1");
        }
        if self.train_samples == 0 || self.test_samples == 0 || self.annuli == 0 {
            return invalid("sample and annulus counts must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSweepRow {
    pub dim: usize,
    pub width: usize,
    pub seed: u64,
    /// Held-out mse, `None` if training diverged.
    pub quadratic_mse: Option<f64>,
    pub conventional_mse: Option<f64>,
}

impl WidthSweepRow {
    /// Quadratic strictly better; a diverged conventional run counts as a loss
    /// for the conventional side.
    pub fn quadratic_wins(&self) -> bool {
        match (self.quadratic_mse, self.conventional_mse) {
            (Some(q), Some(c)) => q < c,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

/// One (dimension, width, seed) cell: both kinds trained on the same data.
pub fn width_sweep_trial(cfg: &WidthSweepConfig, dim: usize, width: usize, seed: u64) -> Result<WidthSweepRow> {
    cfg.validate()?;
    let target = AnnulusTarget::random(dim, cfg.annuli, cfg.radius, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0000_0000_0001);
    let make = |xs: Vec<Vec<f64>>| {
        let ys = xs.iter().map(|x| target.value(x)).collect();
        Dataset::new(xs, ys)
    };
    let train_data = make(sample_ball(dim, cfg.train_samples, cfg.radius, &mut rng))?;
    let test_data = make(sample_ball(dim, cfg.test_samples, cfg.radius, &mut rng))?;
    let train_cfg = TrainConfig {
        loss: Loss::Mse,
        learning_rate: cfg.learning_rate,
        iterations: cfg.iterations,
        seed,
        init_scale: cfg.init_scale,
        restarts: 1,
        parallel: false,
    };
    let fit = |kind: HiddenKind| -> Result<Option<f64>> {
        let template = one_hidden_layer(dim, width, kind)?;
        match train(&template, &train_data, &train_cfg) {
            Ok(out) => Ok(Some(crate::trainer::dataset_loss(&out.network, &test_data, Loss::Mse)?)),
            Err(QnnError::Diverged { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(WidthSweepRow {
        dim,
        width,
        seed,
        quadratic_mse: fit(HiddenKind::Quadratic)?,
        conventional_mse: fit(HiddenKind::Conventional)?,
    })
}

pub fn run_width_sweep(cfg: &WidthSweepConfig) -> Result<Vec<WidthSweepRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize, u64)> = cfg
        .dims
        .iter()
        .flat_map(|&d| cfg.widths.iter().flat_map(move |&w| cfg.seeds.iter().map(move |&s| (d, w, s))))
        .collect();
    let rows: Vec<Result<WidthSweepRow>> = if cfg.parallel {
        cells.par_iter().map(|&(d, w, s)| width_sweep_trial(cfg, d, w, s)).collect()
    } else {
        cells.iter().map(|&(d, w, s)| width_sweep_trial(cfg, d, w, s)).collect()
    };
    rows.into_iter().collect()
}
