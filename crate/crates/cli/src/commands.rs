use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use num_traits::ToPrimitive;
use qnn_core::builders::{build_deep_radial, build_poly_net_from_polynomial};
use qnn_core::experiments::{
    abs_half, cosine_partition, cosine_profile, cosine_support, poly_report, radial_at, radial_delta_sweep,
    rational_grid, run_factor_train, run_rings, run_width_sweep, FactorTrainConfig, RingsConfig, RingsModel,
    WidthSweepConfig, QUINTIC_DOMAIN,
};
use qnn_core::oracles::{bernstein_direct, expand_factored, grid_l1, horner, GridSpec};
use qnn_core::{bernstein_coeffs, relative_coeff_error, BigRational, Network, Polynomial};
use serde::Serialize;

use crate::cells;
use crate::report::{Csv, Plot, Run};
use crate::{Cli, Command};

pub fn dispatch(cli: &Cli) -> Result<()> {
    let config = serde_json::to_value(cli)?;
    let name = match &cli.command {
        Command::Rings(_) => "rings",
        Command::RadialDeep(_) => "radial-deep",
        Command::Poly(_) => "poly",
        Command::FactorTrain(_) => "factor-train",
        Command::Bernstein(_) => "bernstein",
        Command::WidthSweep(_) => "width-sweep",
    };
    let mut run = Run::start(&cli.out_dir, name, config, cli.svg)?;
    match &cli.command {
        Command::Rings(a) => rings(&mut run, cli.seed, a),
        Command::RadialDeep(a) => radial_deep(&mut run, a),
        Command::Poly(a) => poly(&mut run, cli.seed, a),
        Command::FactorTrain(a) => factor_train(&mut run, cli.seed, a),
        Command::Bernstein(a) => bernstein(&mut run, a),
        Command::WidthSweep(a) => width_sweep(&mut run, cli.seed, a),
    }?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct RingsArgs {
    #[arg(long, default_value_t = 60)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 1.0)]
    pub r_inner: f64,
    #[arg(long, default_value_t = 2.0)]
    pub r_outer: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub init_scale: f64,
    /// Hidden widths of the conventional baselines.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
    pub widths: Vec<usize>,
    /// Points per side of the decision-boundary sample grid.
    #[arg(long, default_value_t = 61)]
    pub grid: usize,
    #[arg(long)]
    pub parallel_restarts: bool,
}

fn model_label(m: &RingsModel) -> String {
    format!("{}_w{}", m.kind.label(), m.width)
}

fn rings(run: &mut Run, seed: u64, a: &RingsArgs) -> Result<()> {
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let cfg = RingsConfig {
        n_per_class: a.n_per_class,
        r_inner: a.r_inner,
        r_outer: a.r_outer,
        noise: a.noise,
        data_seed: seed,
        seed,
        restarts: a.restarts,
        learning_rate: a.learning_rate,
        iterations: a.iterations,
        init_scale: a.init_scale,
        conventional_widths: a.widths.clone(),
        parallel: a.parallel_restarts,
    };
    let result = run_rings(&cfg)?;
    let models: Vec<&RingsModel> = std::iter::once(&result.quadratic).chain(&result.conventional).collect();

    let mut acc = Csv::new(&["model", "width", "restart", "accuracy"]);
    for m in &models {
        for (i, v) in m.accuracies.iter().enumerate() {
            acc.row(cells![m.kind.label(), m.width, i, *v]);
        }
        run.metric(format!("{}_best_accuracy", model_label(m)), m.best_accuracy());
    }
    run.write_csv("accuracy.csv", &acc)?;

    let mut data_csv = Csv::new(&["x", "y", "label"]);
    for (x, &t) in result.data.inputs.iter().zip(&result.data.targets) {
        data_csv.row(cells![x[0], x[1], t]);
    }
    run.write_csv("data.csv", &data_csv)?;

    let extent = a.r_outer + 3.0 * a.noise + 0.5;
    let grid = GridSpec::new(-extent, extent, a.grid)?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend(models.iter().map(|m| model_label(m)));
    let mut boundary = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut outputs: Vec<Vec<Option<f64>>> = Vec::new();
    for gy in grid.points() {
        for gx in grid.points() {
            let row: Vec<Option<f64>> = models
                .iter()
                .map(|m| m.best.as_ref().map(|n| n.eval_scalar(&[gx, gy])).transpose())
                .collect::<qnn_core::Result<_>>()?;
            let mut cells = vec![gx.into(), gy.into()];
            cells.extend(row.iter().map(|&v| v.into()));
            boundary.row(&cells);
            outputs.push(row);
        }
    }
    run.write_csv("boundary.csv", &boundary)?;

    if run.svg_enabled() {
        let side = a.grid;
        let mut plot = Plot::new("Two rings: decision boundaries", "x", "y");
        let (mut inner, mut outer) = (Vec::new(), Vec::new());
        for (x, &t) in result.data.inputs.iter().zip(&result.data.targets) {
            if t > 0.0 { inner.push((x[0], x[1])) } else { outer.push((x[0], x[1])) }
        }
        plot = plot.scatter("label +1", inner).scatter("label -1", outer);
        for (k, m) in models.iter().enumerate() {
            let mut edge = Vec::new();
            for j in 0..side {
                for i in 0..side {
                    let here = outputs[j * side + i][k];
                    let right = (i + 1 < side).then(|| outputs[j * side + i + 1][k]).flatten();
                    let up = (j + 1 < side).then(|| outputs[(j + 1) * side + i][k]).flatten();
                    if let Some(h) = here {
                        if right.is_some_and(|r| (r > 0.0) != (h > 0.0)) || up.is_some_and(|u| (u > 0.0) != (h > 0.0)) {
                            edge.push((grid.point(i), grid.point(j)));
                        }
                    }
                }
            }
            plot = plot.scatter(&model_label(m), edge);
        }
        run.write_svg("boundary.svg", &plot)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct RadialDeepArgs {
    /// Ramp fraction of the network written out in full.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Ramp fractions for the L1 error sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub deltas: Vec<f64>,
    /// Quadrature points on [0, 10√2].
    #[arg(long, default_value_t = 4001)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub input_dim: usize,
    /// Cross-check the quadrature against a grid with 2n − 1 points.
    #[arg(long)]
    pub oracle: bool,
}

fn radial_deep(run: &mut Run, a: &RadialDeepArgs) -> Result<()> {
    let partition = cosine_partition(a.delta)?;
    let net = build_deep_radial(&partition, a.input_dim)?;
    run.metric("depth", net.depth() as f64);
    run.metric("module_layers", (net.depth() - 2) as f64);
    run.metric("modules", partition.heights.len() as f64);
    run.metric("max_width", net.max_width() as f64);
    run.metric("output_outside_support", radial_at(&net, cosine_support() + 1.0)?);
    run.write("network.json", &net.to_json()?)?;

    let mut bp = Csv::new(&["index", "t", "t_squared", "height_after"]);
    for (i, &t) in partition.breakpoints.iter().enumerate() {
        bp.row(cells![i, t, t * t, partition.heights.get(i).copied()]);
    }
    run.write_csv("breakpoints.csv", &bp)?;

    let grid = GridSpec::new(0.0, cosine_support() + 1.0, a.grid)?;
    let mut profile = Csv::new(&["t", "f", "step", "F"]);
    let mut curves = (Vec::new(), Vec::new());
    for t in grid.points() {
        let y = radial_at(&net, t)?;
        profile.row(cells![t, cosine_profile(t), partition.step_value(t), y]);
        curves.0.push((t, cosine_profile(t)));
        curves.1.push((t, y));
    }
    run.write_csv("profile.csv", &profile)?;
    run.write_svg(
        "profile.svg",
        &Plot::new("Deep radial network", "t = ||x||", "value")
            .line("f(t)", curves.0)
            .line("F(t)", curves.1),
    )?;

    let rows = radial_delta_sweep(&a.deltas, a.grid, a.input_dim)?;
    let mut sweep = Csv::new(&["delta", "l1_step", "l1_profile"]);
    for r in &rows {
        sweep.row(cells![r.delta, r.l1_step, r.l1_profile]);
        run.metric(format!("l1_step_delta_{}", r.delta), r.l1_step);
        run.metric(format!("l1_profile_delta_{}", r.delta), r.l1_profile);
    }
    run.write_csv("sweep.csv", &sweep)?;
    let monotone = rows.windows(2).all(|w| w[1].l1_step <= w[0].l1_step);
    run.metric("l1_step_non_increasing", f64::from(u8::from(monotone)));

    if a.oracle {
        let support = cosine_support();
        let coarse = GridSpec::new(0.0, support, a.grid)?;
        let fine = GridSpec::new(0.0, support, 2 * a.grid - 1)?;
        let f = |t: f64| radial_at(&net, t).unwrap_or(f64::NAN);
        let l1 = |g: &GridSpec| grid_l1(|t| partition.step_value(t), f, g);
        run.metric("oracle_quadrature_refine_diff", (l1(&coarse) - l1(&fine)).abs());
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct PolyArgs {
    /// Coefficients, lowest degree first (`-1 1 -1 1` is x³ − x² + x − 1).
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    pub coeffs: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub hi: f64,
    /// Re-expand the factorization and report the coefficient error.
    #[arg(long)]
    pub oracle: bool,
}

fn poly(run: &mut Run, seed: u64, a: &PolyArgs) -> Result<()> {
    if !(a.lo < a.hi) {
        bail!("--lo must be below --hi");
    }
    let p = Polynomial::new(a.coeffs.clone());
    if p.degree() == 0 {
        bail!("polynomial must have degree at least 1");
    }
    let (net, r) = poly_report(&p, a.points, seed, a.lo, a.hi).context("factorization failed")?;
    run.metric("degree", r.degree as f64);
    run.metric("linear_factors", r.factored.linear_roots.len() as f64);
    run.metric("quadratic_factors", r.factored.quadratic_factors.len() as f64);
    run.metric("depth", r.depth as f64);
    run.metric("depth_bound", r.depth_bound as f64);
    run.metric("width", r.width as f64);
    run.metric("width_bound", r.width_bound as f64);
    run.metric("max_rel_error", r.max_rel_error);
    run.write("factored.json", &r.factored.to_json()?)?;
    run.write("network.json", &net.to_json()?)?;

    let grid = GridSpec::new(a.lo, a.hi, 201)?;
    let mut eval = Csv::new(&["x", "horner", "network"]);
    for x in grid.points() {
        eval.row(cells![x, horner(&p, &x), net.eval_scalar(&[x])?]);
    }
    run.write_csv("eval.csv", &eval)?;
    if a.oracle {
        run.metric("oracle_coeff_rel_error", relative_coeff_error(&p, &expand_factored(&r.factored)));
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct FactorTrainArgs {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 600)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2.0e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.5)]
    pub init_scale: f64,
    #[arg(long)]
    pub parallel_restarts: bool,
}

/// Mean absolute error the reference experiment reports.
const REPORTED_MAE: f64 = 0.0051;

fn factor_train(run: &mut Run, seed: u64, a: &FactorTrainArgs) -> Result<()> {
    let cfg = FactorTrainConfig {
        samples: a.samples,
        learning_rate: a.learning_rate,
        iterations: a.iterations,
        restarts: a.restarts,
        seed,
        init_scale: a.init_scale,
        parallel: a.parallel_restarts,
    };
    let r = run_factor_train(&cfg)?;
    run.metric("mae", r.mae);
    run.metric("final_mse", r.loss_history.last().copied().unwrap_or(f64::NAN));
    run.metric("grid_sup_error", r.grid_sup_error);
    run.metric("best_restart", r.best_restart as f64);
    run.metric("diverged_restarts", r.restarts.iter().filter(|x| x.is_none()).count() as f64);
    run.metric("meets_reported_mae", f64::from(u8::from(r.mae < REPORTED_MAE)));

    let mut factors = Csv::new(&["factor", "x2", "x", "one"]);
    for (i, f) in r.factors.iter().enumerate() {
        factors.row(cells![i, f[0], f[1], f[2]]);
    }
    run.write_csv("factors.csv", &factors)?;

    let mut restarts = Csv::new(&["restart", "final_mse", "mae"]);
    for (i, v) in r.restarts.iter().enumerate() {
        restarts.row(cells![i, v.map(|x| x.0), v.map(|x| x.1)]);
    }
    run.write_csv("restarts.csv", &restarts)?;

    let mut loss = Csv::new(&["iteration", "mse"]);
    for (i, &l) in r.loss_history.iter().enumerate() {
        loss.row(cells![i, l]);
    }
    run.write_csv("loss.csv", &loss)?;

    let (lo, hi) = QUINTIC_DOMAIN;
    let grid = GridSpec::new(lo, hi, 201)?;
    let target = qnn_core::experiments::quintic_target();
    let mut fit = Csv::new(&["x", "target", "network"]);
    let mut curves = (Vec::new(), Vec::new());
    for x in grid.points() {
        let (t, y) = (horner(&target, &x), r.network.eval_scalar(&[x])?);
        fit.row(cells![x, t, y]);
        curves.0.push((x, t));
        curves.1.push((x, y));
    }
    run.write_csv("fit.csv", &fit)?;
    run.write("network.json", &r.network.to_json()?)?;
    run.write_svg(
        "loss.svg",
        &Plot::new("Factorization training", "iteration", "mse")
            .line("mse", r.loss_history.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect())
            .log_y(),
    )?;
    run.write_svg(
        "fit.svg",
        &Plot::new("Learned product", "x", "value").line("target", curves.0).line("network", curves.1),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BernsteinTarget {
    /// f(x) = x
    X,
    /// f(x) = x²
    XSquared,
    /// f(x) = |x − 1/2|
    AbsHalf,
}

impl BernsteinTarget {
    fn exact(self, x: &BigRational) -> BigRational {
        match self {
            BernsteinTarget::X => x.clone(),
            BernsteinTarget::XSquared => x * x,
            BernsteinTarget::AbsHalf => abs_half(x),
        }
    }

    fn float(self, x: f64) -> f64 {
        match self {
            BernsteinTarget::X => x,
            BernsteinTarget::XSquared => x * x,
            BernsteinTarget::AbsHalf => (x - 0.5).abs(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BernsteinArgs {
    #[arg(long, value_enum, default_value_t = BernsteinTarget::AbsHalf)]
    pub function: BernsteinTarget,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    pub degrees: Vec<usize>,
    /// Grid points on [0, 1] for the sup error.
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Build the product-tree network for degrees up to this value.
    #[arg(long, default_value_t = 8)]
    pub build_max: usize,
    /// Compare the exact monomial form with direct Bernstein summation.
    #[arg(long)]
    pub oracle: bool,
}

fn bernstein(run: &mut Run, a: &BernsteinArgs) -> Result<()> {
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let f = a.function;
    let grid = rational_grid(a.grid);
    let float_grid: Vec<f64> = grid.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let mut sweep = Csv::new(&["n", "sup_error"]);
    let mut coeffs = Csv::new(&["n", "power", "coefficient"]);
    let mut curve = Vec::new();
    for &n in &a.degrees {
        let exact = bernstein_coeffs(|x: &BigRational| f.exact(x), n)?;
        let err = qnn_core::experiments::bernstein_sup_error(|x| f.exact(x), n, &grid)?;
        sweep.row(cells![n, err]);
        curve.push((n as f64, err));
        run.metric(format!("sup_error_n{n}"), err);
        let p = exact.to_f64();
        for (k, &c) in p.coeffs().iter().enumerate() {
            coeffs.row(cells![n, k, c]);
        }
        if n <= a.build_max {
            let net: Network = build_poly_net_from_polynomial(&p)
                .with_context(|| format!("building the network for n = {n}"))?;
            let worst = float_grid
                .iter()
                .map(|&x| Ok((net.eval_scalar(&[x])? - bernstein_direct(|t| f.float(t), n, x)).abs()))
                .collect::<qnn_core::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            run.metric(format!("network_vs_direct_n{n}"), worst);
            run.write(&format!("network_n{n}.json"), &net.to_json()?)?;
        }
        if a.oracle {
            let worst = grid
                .iter()
                .zip(&float_grid)
                .map(|(xr, &x)| {
                    (horner(&exact, xr).to_f64().unwrap_or(f64::NAN) - bernstein_direct(|t| f.float(t), n, x)).abs()
                })
                .fold(0.0, f64::max);
            run.metric(format!("oracle_exact_vs_direct_n{n}"), worst);
        }
    }
    let monotone = curve.windows(2).all(|w| w[1].1 <= w[0].1);
    run.metric("sup_error_non_increasing", f64::from(u8::from(monotone)));
    run.write_csv("sweep.csv", &sweep)?;
    run.write_csv("coefficients.csv", &coeffs)?;
    run.write_svg(
        "sweep.svg",
        &Plot::new("Bernstein sup error", "n", "sup error").line("sup error", curve).log_y(),
    )?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct WidthSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub widths: Vec<usize>,
    /// Number of seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 3)]
    pub annuli: usize,
    #[arg(long, default_value_t = 400)]
    pub train_samples: usize,
    #[arg(long, default_value_t = 2000)]
    pub test_samples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1500)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub init_scale: f64,
    /// Train the sweep cells on the rayon pool.
    #[arg(long)]
    pub parallel_restarts: bool,
}

fn width_sweep(run: &mut Run, seed: u64, a: &WidthSweepArgs) -> Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let cfg = WidthSweepConfig {
        dims: a.dims.clone(),
        widths: a.widths.clone(),
        seeds: (seed..seed + a.seeds).collect(),
        annuli: a.annuli,
        radius: 1.0,
        train_samples: a.train_samples,
        test_samples: a.test_samples,
        learning_rate: a.learning_rate,
        iterations: a.iterations,
        init_scale: a.init_scale,
        parallel: a.parallel_restarts,
    };
    let rows = run_width_sweep(&cfg)?;
    let mut sweep = Csv::new(&["dim", "width", "seed", "quadratic_mse", "conventional_mse"]);
    for r in &rows {
        sweep.row(cells![r.dim, r.width, r.seed, r.quadratic_mse, r.conventional_mse]);
    }
    run.write_csv("sweep.csv", &sweep)?;

    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut summary = Csv::new(&["dim", "width", "quadratic_mean_mse", "conventional_mean_mse", "quadratic_wins", "seeds"]);
    let mut plot = Plot::new("Held-out mse vs width", "width", "mse").log_y();
    for &d in &a.dims {
        let (mut qc, mut cc) = (Vec::new(), Vec::new());
        for &w in &a.widths {
            let cell: Vec<_> = rows.iter().filter(|r| r.dim == d && r.width == w).collect();
            let q = mean(cell.iter().filter_map(|r| r.quadratic_mse).collect());
            let c = mean(cell.iter().filter_map(|r| r.conventional_mse).collect());
            let wins = cell.iter().filter(|r| r.quadratic_wins()).count();
            summary.row(cells![d, w, q, c, wins, cell.len()]);
            run.metric(format!("quadratic_wins_d{d}_w{w}"), wins as f64);
            if let Some(q) = q {
                run.metric(format!("quadratic_mean_mse_d{d}_w{w}"), q);
                qc.push((w as f64, q));
            }
            if let Some(c) = c {
                run.metric(format!("conventional_mean_mse_d{d}_w{w}"), c);
                cc.push((w as f64, c));
            }
        }
        plot = plot.line(&format!("quadratic d={d}"), qc).line(&format!("conventional d={d}"), cc);
    }
    let diverged = rows
        .iter()
        .map(|r| usize::from(r.quadratic_mse.is_none()) + usize::from(r.conventional_mse.is_none()))
        .sum::<usize>();
    run.metric("diverged_runs", diverged as f64);
    run.write_csv("summary.csv", &summary)?;
    run.write_svg("sweep.svg", &plot)?;
    Ok(())
}
