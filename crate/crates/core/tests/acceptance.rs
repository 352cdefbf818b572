//! Acceptance suite: one PASS/FAIL line per criterion, with runtime against
//! its budget. Exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qnn_core::bernstein_coeffs;
use qnn_core::builders::{
    build_deep_radial, build_parabola_module, build_shallow_radial, multivariate_size_bounds, parabola_plateau,
    shallow_hidden_units, MultiPolySpec,
};
use qnn_core::experiments::{
    abs_half, bernstein_sup_error, cosine_partition, cosine_profile, radial_at, radial_delta_sweep, rational_grid,
    run_factor_train, run_rings, width_sweep_trial, FactorTrainConfig, RingsConfig, WidthSweepConfig, DELTA_SWEEP,
};
use qnn_core::experiments::poly_report;
use qnn_core::oracles::{bernstein_direct, finite_diff_grad};
use qnn_core::{Activation, BigRational, LayerSpec, Network, Polynomial, QuadraticNeuron};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_network, random_polynomial, rel_err, smooth_point, PiecewiseLinear};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Regression baselines, written on first run

fn baselines_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("baselines.json")
}

/// Compares `values` with the stored baselines (relative tolerance 1e-6),
/// recording any key seen for the first time.
fn against_baselines(values: &[(String, f64)]) -> Result<String, String> {
    let path = baselines_path();
    let mut stored: BTreeMap<String, f64> = std::fs::read_to_string(&path)
        .ok()
        .map(|s| serde_json::from_str(&s).map_err(|e| format!("bad baselines file: {e}")))
        .transpose()?
        .unwrap_or_default();
    let mut recorded = 0;
    let mut drift = Vec::new();
    for (k, v) in values {
        match stored.get(k) {
            Some(&b) if (v - b).abs() <= 1e-6 * b.abs().max(1e-12) => {}
            Some(&b) => drift.push(format!("{k}: {v:e} vs baseline {b:e}")),
            None => {
                stored.insert(k.clone(), *v);
                recorded += 1;
            }
        }
    }
    if recorded > 0 {
        let json = serde_json::to_string_pretty(&stored).map_err(|e| e.to_string())?;
        std::fs::write(&path, json + "\n").map_err(|e| format!("writing baselines: {e}"))?;
    }
    if drift.is_empty() {
        Ok(if recorded > 0 { format!("{recorded} baseline(s) recorded") } else { "baselines match".into() })
    } else {
        Err(drift.join("; "))
    }
}

// ---------------------------------------------------------------------------

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut worst_coarse, mut params) = (0.0f64, 0.0f64, 0);
    let mut nets = 0;
    while nets < 100 {
        let net = random_network(&mut rng, nets % 2 == 1);
        let Some(x) = smooth_point(&net, &mut rng) else { continue };
        let upstream = vec![1.0; net.output_dim()];
        let analytic = net.backward(&x, &upstream).map_err(|e| e.to_string())?;
        let fine = finite_diff_grad(&net, &x, 1e-5).map_err(|e| e.to_string())?;
        let coarse = finite_diff_grad(&net, &x, 1e-4).map_err(|e| e.to_string())?;
        if analytic.indices != fine.indices {
            return Err("gradient index sets differ".into());
        }
        for ((a, n), c) in analytic.values.iter().zip(&fine.values).zip(&coarse.values) {
            worst = worst.max(rel_err(*a, *n));
            worst_coarse = worst_coarse.max(rel_err(*a, *c));
        }
        params += analytic.len();
        nets += 1;
    }
    check(
        worst < 1e-5,
        format!("{nets} networks, {params} gradients, max rel err {worst:.2e} (step 1e-4: {worst_coarse:.2e})"),
    )
}

fn xor() -> Outcome {
    let cases = [([0.0, 0.0], false), ([0.0, 1.0], true), ([1.0, 0.0], true), ([1.0, 1.0], false)];
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut tried = 0u64;
    let mut idx = [0usize; 9];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let q = QuadraticNeuron::new(vec![p[0], p[1]], p[2], vec![p[3], p[4]], p[5], vec![p[6], p[7]], p[8])
            .map_err(|e| e.to_string())?;
        tried += 1;
        let net = Network::new(2, vec![LayerSpec::new(vec![q.into()], Activation::Identity)], vec![])
            .map_err(|e| e.to_string())?;
        let correct = cases
            .iter()
            .filter(|(x, y)| (net.eval_scalar(x).unwrap() > 0.0) == *y)
            .count();
        if correct == 4 {
            return Ok(format!("found after {tried} grid points: params {p:?}"));
        }
        let mut k = 0;
        while k < 9 {
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == 9 {
            return Err(format!("no XOR neuron among {tried} grid points"));
        }
    }
}

fn rings() -> Outcome {
    let cfg = RingsConfig { conventional_widths: vec![2, 6], ..RingsConfig::default() };
    let r = run_rings(&cfg).map_err(|e| e.to_string())?;
    let w2 = &r.conventional[0];
    let w6 = &r.conventional[1];
    let fmt = |a: &[Option<f64>]| a.iter().map(|v| v.map_or("div".into(), |v| format!("{v:.3}"))).collect::<Vec<_>>().join(" ");
    let detail = format!(
        "quadratic [{}], width 2 [{}], width 6 [{}] (width 6 reported only: {})",
        fmt(&r.quadratic.accuracies),
        fmt(&w2.accuracies),
        fmt(&w6.accuracies),
        if w6.reaches(1.0) { "reaches 1.0" } else { "does not reach 1.0" },
    );
    check(r.quadratic.reaches(1.0) && !w2.reaches(1.0), detail)
}

fn exact_polynomials() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut bound_misses) = (0.0f64, Vec::new());
    for i in 0..200 {
        let degree = 1 + i % 12;
        let p = random_polynomial(&mut rng, degree);
        let (_, r) = poly_report(&p, 1000, i as u64, -1.0, 1.0).map_err(|e| format!("poly {i}: {e}"))?;
        worst = worst.max(r.max_rel_error);
        if r.depth > r.depth_bound || r.width > r.width_bound {
            bound_misses.push(format!("poly {i}: depth {}/{} width {}/{}", r.depth, r.depth_bound, r.width, r.width_bound));
        }
    }
    check(
        worst < 1e-8 && bound_misses.is_empty(),
        format!("200 polynomials, max rel err {worst:.2e}, bound violations {bound_misses:?}"),
    )
}

fn parabola_modules() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut plateau_err, mut outside, mut gap_fail) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let a_lo = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..5.0) };
        let a_hi = a_lo + rng.gen_range(0.1..5.0);
        let delta = rng.gen_range(0.01..0.49);
        let b = rng.gen_range(-3.0..3.0);
        let dim = rng.gen_range(1..=3);
        let net = build_parabola_module(a_lo, a_hi, b, delta, dim).map_err(|e| e.to_string())?;
        let (p_lo, p_hi) = parabola_plateau(a_lo, a_hi, delta);
        if !(a_hi - p_hi < delta * (a_hi - a_lo)) {
            gap_fail += 1;
        }
        for k in 0..=20 {
            let t = p_lo + (p_hi - p_lo) * k as f64 / 20.0;
            plateau_err = plateau_err.max((radial_at(&net, t).unwrap() - b).abs());
        }
        for k in 0..10 {
            let below = a_lo * k as f64 / 10.0;
            let above = a_hi * (1.0 + 1e-9) + k as f64;
            for t in [below, above] {
                if t <= a_lo * (1.0 - 1e-9) || t > a_hi {
                    outside = outside.max(radial_at(&net, t).unwrap().abs());
                }
            }
        }
    }
    check(
        plateau_err < 1e-9 && outside == 0.0 && gap_fail == 0,
        format!("1000 modules: plateau err {plateau_err:.2e}, max |out| outside {outside:.2e}, gap failures {gap_fail}"),
    )
}

fn radial_refinement() -> Outcome {
    let rows = radial_delta_sweep(&DELTA_SWEEP, 4001, 2).map_err(|e| e.to_string())?;
    let monotone = rows.windows(2).all(|w| w[1].l1_step <= w[0].l1_step);
    let net = build_deep_radial(&cosine_partition(0.05).map_err(|e| e.to_string())?, 2).map_err(|e| e.to_string())?;
    let module_layers = net.depth() - 2;
    let modules = module_layers / 3;
    let at = radial_at(&net, (100.0f64 / 3.0).sqrt()).map_err(|e| e.to_string())?;
    let profile_at = cosine_profile((100.0f64 / 3.0).sqrt());
    let l1 = rows.iter().map(|r| format!("{:.4}", r.l1_step)).collect::<Vec<_>>().join(" ");
    let l1_profile = rows.iter().map(|r| format!("{:.3}", r.l1_profile)).collect::<Vec<_>>().join(" ");
    let structural = monotone && module_layers == 9 && modules == 3 && (at + 1.0).abs() < 1e-9;
    let detail = format!(
        "L1 to step profile [{l1}], to cosine [{l1_profile}]; {module_layers} module layers, {modules} modules, \
         max width {}; F(sqrt(100/3)) = {at} (profile {profile_at:.3})",
        net.max_width()
    );
    if !structural {
        return Err(detail);
    }
    let base = against_baselines(&[("radial_l1_step_delta_0.05".into(), rows[3].l1_step)])?;
    Ok(format!("{detail}; {base}"))
}

fn shallow_radial() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_ratio, mut width_fail) = (0.0f64, 0);
    for _ in 0..200 {
        let r = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) };
        let big_r = r + rng.gen_range(0.5..3.0);
        let lip = rng.gen_range(0.5..3.0);
        let delta = rng.gen_range(0.05..0.5);
        let dim = rng.gen_range(1..=3);
        let f = PiecewiseLinear::random(&mut rng, r, big_r, lip);
        let net = build_shallow_radial(|t| f.eval(t), r, big_r, lip, delta, dim).map_err(|e| e.to_string())?;
        let n = 10_000;
        let sup = (0..n)
            .map(|k| {
                let t = (big_r + 1.0) * k as f64 / (n - 1) as f64;
                (radial_at(&net, t).unwrap() - f.eval(t)).abs()
            })
            .fold(0.0, f64::max);
        worst_ratio = worst_ratio.max(sup / delta);
        if shallow_hidden_units(&net) > ((big_r - r) * lip / delta).floor() as usize + 1 {
            width_fail += 1;
        }
    }
    check(
        worst_ratio < 1.0 && width_fail == 0,
        format!("200 targets: max sup err / delta {worst_ratio:.3}, width violations {width_fail}"),
    )
}

const REPORTED_MAE: f64 = 0.0051;

fn factor_training() -> Outcome {
    let mut detail = Vec::new();
    for restarts in [10, 20] {
        let cfg = FactorTrainConfig { restarts, ..FactorTrainConfig::default() };
        let r = run_factor_train(&cfg).map_err(|e| e.to_string())?;
        let best_each = r.restarts.iter().flatten().map(|m| m.1).fold(f64::INFINITY, f64::min);
        detail.push(format!(
            "{restarts} restarts: selected mae {:.4} (restart {}), best restart mae {best_each:.4}",
            r.mae, r.best_restart
        ));
        if r.mae < REPORTED_MAE {
            return Ok(detail.join("; "));
        }
    }
    Err(format!("{}; reported mae < {REPORTED_MAE} not reached", detail.join("; ")))
}

fn bernstein() -> Outcome {
    let rat_to_f = |p: &Polynomial<BigRational>| -> Vec<f64> {
        use num_traits::ToPrimitive;
        p.coeffs().iter().map(|c| c.to_f64().unwrap()).collect()
    };
    let mut identity_err = 0.0f64;
    for n in 1..=20 {
        let b = bernstein_coeffs(|x: &BigRational| x.clone(), n).map_err(|e| e.to_string())?;
        let c = rat_to_f(&b);
        let want = [0.0, 1.0];
        for k in 0..c.len().max(2) {
            identity_err = identity_err.max((c.get(k).copied().unwrap_or(0.0) - want.get(k).copied().unwrap_or(0.0)).abs());
        }
    }

    let b10 = rat_to_f(&bernstein_coeffs(|x: &BigRational| x * x, 10).map_err(|e| e.to_string())?);
    let closed = [0.0, 0.1, 0.9];
    // Direct summation expanded in the monomial basis.
    let mut direct = Polynomial::zero();
    let mut binom = 1.0;
    for m in 0..=10usize {
        if m > 0 {
            binom = binom * (11 - m) as f64 / m as f64;
        }
        let fm = (m as f64 / 10.0).powi(2);
        let mut term = Polynomial::new(vec![fm * binom]);
        for _ in 0..m {
            term = term.mul(&Polynomial::new(vec![0.0, 1.0]));
        }
        for _ in 0..10 - m {
            term = term.mul(&Polynomial::new(vec![1.0, -1.0]));
        }
        direct = Polynomial::new(
            (0..=10)
                .map(|k| direct.coeffs().get(k).copied().unwrap_or(0.0) + term.coeffs().get(k).copied().unwrap_or(0.0))
                .collect(),
        );
    }
    let coeff = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let mut b10_err = 0.0f64;
    for k in 0..=10 {
        b10_err = b10_err.max((coeff(&b10, k) - coeff(&closed, k)).abs());
        b10_err = b10_err.max((coeff(&b10, k) - coeff(direct.coeffs(), k)).abs());
    }
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        let via_coeffs: f64 = b10.iter().rev().fold(0.0, |acc, c| acc * x + c);
        b10_err = b10_err.max((via_coeffs - bernstein_direct(|t| t * t, 10, x)).abs());
    }

    let grid = rational_grid(201);
    let sups = [4, 8, 16, 32, 64]
        .iter()
        .map(|&n| bernstein_sup_error(abs_half, n, &grid))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let monotone = sups.windows(2).all(|w| w[1] <= w[0]);
    check(
        identity_err < 1e-12 && b10_err < 1e-12 && monotone,
        format!(
            "identity err {identity_err:.1e}, B_10 x^2 err {b10_err:.1e}, |x-1/2| sup errors {:?}",
            sups.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn size_bounds() -> Outcome {
    let cases = [
        (vec![vec![1, 1]], vec![1.0], (6, 3)),
        (vec![vec![4]], vec![1.0], (10, 5)),
        (vec![vec![2, 1], vec![1, 3]], vec![1.0, 1.0], (14, 5)),
    ];
    let mut got = Vec::new();
    for (e, c, want) in cases {
        let spec = MultiPolySpec::new(e, c).map_err(|e| e.to_string())?;
        got.push((multivariate_size_bounds(&spec), want));
    }
    check(got.iter().all(|(g, w)| g == w), format!("(width, depth) got/want {got:?}"))
}

fn width_sweep() -> Outcome {
    let cfg = WidthSweepConfig::default();
    let mut wins = 0;
    let mut values = Vec::new();
    let mut detail = Vec::new();
    for seed in 0..5u64 {
        let row = width_sweep_trial(&cfg, 4, 8, seed).map_err(|e| e.to_string())?;
        if row.quadratic_wins() {
            wins += 1;
        }
        let q = row.quadratic_mse.unwrap_or(f64::NAN);
        let c = row.conventional_mse.unwrap_or(f64::NAN);
        detail.push(format!("seed {seed}: {q:.4} vs {c:.4}"));
        values.push((format!("width_sweep_d4_w8_seed{seed}_quadratic"), q));
        values.push((format!("width_sweep_d4_w8_seed{seed}_conventional"), c));
    }
    let detail = format!("quadratic wins {wins}/5 ({})", detail.join(", "));
    if wins < 4 {
        return Err(detail);
    }
    let base = against_baselines(&values.into_iter().filter(|(_, v)| v.is_finite()).collect::<Vec<_>>())?;
    Ok(format!("{detail}; {base}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("1 gradient correctness", 10, gradients),
        ("2 XOR with one quadratic neuron", 5, xor),
        ("3 two rings", 60, rings),
        ("4 exact polynomial networks", 30, exact_polynomials),
        ("5 truncated-parabola module", 5, parabola_modules),
        ("6 deep radial refinement", 10, radial_refinement),
        ("7 shallow radial builder", 20, shallow_radial),
        ("8 factorization training", 60, factor_training),
        ("9 Bernstein approximants", 5, bernstein),
        ("10 multivariate size bounds", 1, size_bounds),
        ("11 width sweep d=4 width 8", 300, width_sweep),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        let took = start.elapsed();
        let over = took > Duration::from_secs(budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over runtime budget; {d}")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} [{name}] {:.2}s / {budget}s: {detail}", took.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
