//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails or overruns its time budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chronic_roi::mc::{run_monte_carlo_detailed, substream};
use chronic_roi::roi::{compare, roi_at};
use chronic_roi::scenario::{REFERENCE_COMPRESSION, REFERENCE_INFLATION};
use chronic_roi::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<T>(r: chronic_roi::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn preset(name: &str) -> PolicyConfig {
    build_preset(name).expect("known preset")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn roi_formula() -> Outcome {
    let r = e2s(roi(3953.07, 3602.26))?;
    ensure((r - 9.74).abs() <= 0.01, || format!("roi = {r}"))?;
    Ok(format!("roi = {r:.4}%"))
}

fn closed_form_oracles() -> Outcome {
    let reference = ModelParams::reference();
    let base = preset("baseline");

    // Constant integrand: only the adherence term survives and A = A0 throughout.
    let p = ModelParams { disease_cost: 0.0, health_weight: 0.0, ..reference };
    let cbar = p.adherence_cost * p.adherence_baseline.powi(2);
    let mut worst_a = 0.0f64;
    for t in 1..=10 {
        let t = t as f64;
        let oracle = p.baseline_cost + cbar * (1.0 - (-p.discount_rate * t).exp()) / p.discount_rate;
        worst_a = worst_a.max(rel(e2s(cumulative_cost(&p, &base, t))?, oracle));
    }

    // Undiscounted logistic: integral of Dmax / (1 + e^{-k(s - s0)}) is
    // (Dmax / k) ln(1 + e^{k(s - s0)}).
    let p = ModelParams { discount_rate: 0.0, adherence_cost: 0.0, health_weight: 0.0, ..reference };
    let (dmax, k, s0) = (p.disease_max, p.disease_steepness, p.disease_midpoint);
    let antiderivative = |s: f64| dmax / k * (k * (s - s0)).exp().ln_1p();
    let mut worst_b = 0.0f64;
    for t in 1..=10 {
        let t = t as f64;
        let oracle = p.baseline_cost + p.disease_cost * (antiderivative(t) - antiderivative(0.0));
        worst_b = worst_b.max(rel(e2s(cumulative_cost(&p, &base, t))?, oracle));
    }
    ensure(worst_a <= 1e-6 && worst_b <= 1e-6, || {
        format!("max relative error {worst_a:.2e} (constant), {worst_b:.2e} (logistic)")
    })?;
    Ok(format!("max relative error {worst_a:.1e} (constant), {worst_b:.1e} (logistic)"))
}

fn grid_refinement() -> Outcome {
    let p = ModelParams::reference();
    let grid = e2s(TimeGrid::default_for(p.horizon))?;
    let mut worst = (0.0f64, "");
    for name in scenario::PRESET_NAMES {
        let policy = preset(name);
        let coarse = e2s(simulate_trajectory_on(&p, &policy, grid))?.final_cost();
        let fine = e2s(simulate_trajectory_on(&p, &policy, grid.refined()))?.final_cost();
        let r = rel(coarse, fine);
        if r > worst.0 {
            worst = (r, name);
        }
    }
    ensure(worst.0 <= 1e-6, || format!("{} changed by {:.2e}", worst.1, worst.0))?;
    Ok(format!("largest change {:.1e} ({})", worst.0, worst.1))
}

fn scenario_rois(p: &ModelParams) -> Result<Vec<(&'static str, f64)>, String> {
    ["early_adherence", "adaptive_nudges", "delayed", "regressive", "low_impact"]
        .into_iter()
        .map(|n| Ok((n, e2s(compare(p, &preset(n)))?.roi_percent)))
        .collect()
}

fn ordering() -> Outcome {
    let r = scenario_rois(&ModelParams::reference())?;
    let v: Vec<f64> = r.iter().map(|x| x.1).collect();
    let ok = v[0] >= v[1] && v[1] > v[2] && v[2] > v[3] && v[3] > v[4] && v[4] < 0.0;
    let text = r.iter().map(|(n, x)| format!("{n} {x:.2}")).collect::<Vec<_>>().join(", ");
    ensure(ok, || text.clone())?;
    Ok(text)
}

fn golden_targets() -> Outcome {
    let p = ModelParams::reference();
    let run = |n: &str| e2s(simulate_trajectory(&p, &preset(n)));
    let decaying =
        |n: &str| e2s(simulate_trajectory(&p, &preset(n).with_baseline_decay(Some(scenario::DEFAULT_BASELINE_DECAY))));
    let base = run("baseline")?;
    let early = run("early_adherence")?;
    let adaptive = run("adaptive_nudges")?;
    let weak = [run("delayed")?, run("regressive")?, run("low_impact")?];
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    check(rel(base.final_cost(), 3953.07) <= 0.02, format!("baseline cost {:.2}", base.final_cost()));
    check(rel(early.final_cost(), 3602.26) <= 0.02, format!("early cost {:.2}", early.final_cost()));
    check(weak[2].final_cost() > 4600.0, format!("low-impact cost {:.2}", weak[2].final_cost()));
    for (n, t) in [("early", &early), ("adaptive", &adaptive)] {
        check(t.final_severity() < 0.70, format!("{n} severity {:.3}", t.final_severity()));
        check(t.final_adherence() > 0.8, format!("{n} adherence {:.3}", t.final_adherence()));
    }
    for (n, t) in ["delayed", "regressive", "low_impact"].iter().zip(&weak) {
        check(t.final_severity() > 0.87, format!("{n} severity {:.3}", t.final_severity()));
    }
    for n in ["regressive", "low_impact"] {
        let a = decaying(n)?.final_adherence();
        check(a < 0.4, format!("{n} adherence {a:.3} (decaying baseline)"));
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "baseline {:.2}, early {:.2}, low-impact {:.2}",
        base.final_cost(),
        early.final_cost(),
        weak[2].final_cost()
    ))
}

fn breakeven() -> Outcome {
    let p = ModelParams::reference();
    let early = preset("early_adherence");
    let deltas = [0.10, 0.15, 0.25];
    let mut stars = Vec::new();
    for d in deltas {
        let g = e2s(breakeven_gamma(&p, &early, d))?.ok_or(format!("no break-even at delta {d}"))?;
        stars.push(g);
    }
    ensure(stars.windows(2).all(|w| w[1] > w[0]), || format!("gamma* = {stars:?}"))?;

    let gammas: Vec<f64> = (0..=40).map(|j| 0.25 * j as f64).collect();
    let grid = e2s(sweep_design_space(&p, &early, &deltas, &gammas))?;
    for (i, &star) in stars.iter().enumerate() {
        let j = gammas.iter().position(|&g| g > star).ok_or("gamma axis too short")?;
        let (below, above) = (grid.roi_percent[i][j - 1], grid.roi_percent[i][j]);
        ensure(below > 0.0 && above < 0.0, || {
            format!("delta {}: ROI {below} at {} and {above} at {}", deltas[i], gammas[j - 1], gammas[j])
        })?;
    }
    Ok(format!("gamma* = {:.4}, {:.4}, {:.4}", stars[0], stars[1], stars[2]))
}

fn moments_within_3se(spec: &DistributionSpec, mean: f64, var: f64, seed: u64) -> Result<(), String> {
    let n = 100_000u64;
    let xs: Vec<f64> = (0..n).map(|i| sample_delta(spec, &mut substream(seed, i))).collect();
    let nf = n as f64;
    let m = xs.iter().sum::<f64>() / nf;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let se_mean = (var / nf).sqrt();
    let se_var = ((m4 - var * var) / nf).sqrt();
    ensure((m - mean).abs() <= 3.0 * se_mean, || format!("{spec:?}: mean {m} vs {mean}"))?;
    ensure((v - var).abs() <= 3.0 * se_var, || format!("{spec:?}: variance {v} vs {var}"))
}

/// Mean and variance of N(mu, sigma) truncated to [lo, hi].
fn trunc_normal_moments(mu: f64, sigma: f64, lo: f64, hi: f64) -> (f64, f64) {
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // Standard normal CDF by Simpson's rule on the density from 0.
    let cdf = |z: f64| {
        let n = 2000;
        let h = z / n as f64;
        let mut acc = pdf(0.0) + pdf(z);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(i as f64 * h);
        }
        0.5 + acc * h / 3.0
    };
    let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
    let z = cdf(b) - cdf(a);
    let mean = mu + sigma * (pdf(a) - pdf(b)) / z;
    let var = sigma * sigma * (1.0 + (a * pdf(a) - b * pdf(b)) / z - ((pdf(a) - pdf(b)) / z).powi(2));
    (mean, var)
}

fn monte_carlo() -> Outcome {
    let p = ModelParams::reference();
    let early = preset("early_adherence");
    let spec = e2s(DistributionSpec::beta_from_moments(0.3, mc::DEFAULT_DELTA_SD))?;

    let runs: Vec<_> = [1usize, 2, 8]
        .into_iter()
        .map(|w| e2s(run_monte_carlo_detailed(&p, &early, &spec, 2_000, 20_240_101, Some(w))))
        .collect::<Result<_, _>>()?;
    let bits = |r: &mc::McRun| {
        r.draws
            .iter()
            .flat_map(|d| [d.index, d.delta.to_bits(), d.total_cost.to_bits(), d.roi_percent.to_bits()])
            .collect::<Vec<u64>>()
    };
    for r in &runs[1..] {
        ensure(bits(r) == bits(&runs[0]) && r.summary == runs[0].summary, || "output depends on worker count".into())?;
    }

    let (a, b) = (2.0, 5.0);
    moments_within_3se(&e2s(DistributionSpec::beta(a, b))?, a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0)), 7)?;
    let (mu, sigma) = (0.3, 0.05);
    let (tm, tv) = trunc_normal_moments(mu, sigma, 0.0, 1.0);
    moments_within_3se(&e2s(DistributionSpec::trunc_normal(mu, sigma))?, tm, tv, 11)?;
    let (mu, sigma) = (0.1, 0.2);
    let (tm, tv) = trunc_normal_moments(mu, sigma, 0.0, 1.0);
    moments_within_3se(&e2s(DistributionSpec::trunc_normal(mu, sigma))?, tm, tv, 13)?;

    let summary = e2s(run_monte_carlo(&p, &early, &spec, 10_000, 42))?;
    let deterministic = e2s(roi_at(&p, &early, spec.mean(), early.cost_scale_gamma))?;
    let gap = summary.roi_mean - deterministic;
    ensure(gap.abs() <= 1.0, || format!("roi_mean {} vs deterministic {deterministic}", summary.roi_mean))?;
    Ok(format!(
        "worker-invariant; moments within 3 SE; roi_mean {:.3}% vs {:.3}% at the mean",
        summary.roi_mean, deterministic
    ))
}

fn robustness() -> Outcome {
    let p = ModelParams::reference();
    let plain: Vec<(&str, f64)> = scenario_rois(&p)?;
    let stressed = |s: Stress| -> Result<Vec<f64>, String> {
        plain.iter().map(|(n, _)| Ok(e2s(compare(&p, &e2s(apply_stress(&preset(n), s))?))?.roi_percent)).collect()
    };
    let inflated = stressed(Stress::CostInflation(REFERENCE_INFLATION))?;
    let compressed = stressed(Stress::AcceleratedProgression(REFERENCE_COMPRESSION))?;
    let [early, adaptive, _, regressive, low] = [0, 1, 2, 3, 4];
    let mut failures = Vec::new();
    for i in [early, adaptive] {
        let (n, r) = plain[i];
        if !(inflated[i] < r && inflated[i] > 0.0) {
            failures.push(format!("{n} inflated ROI {:.3} vs {r:.3}", inflated[i]));
        }
        if compressed[i] < r {
            failures.push(format!("{n} compressed ROI {:.3} vs {r:.3}", compressed[i]));
        }
    }
    for i in [regressive, low] {
        if inflated[i] >= 0.0 {
            failures.push(format!("{} inflated ROI {:.3}", plain[i].0, inflated[i]));
        }
    }
    if compressed[low] >= plain[low].1 {
        failures.push(format!("low_impact compressed ROI {:.3} vs {:.3}", compressed[low], plain[low].1));
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "inflation: early {:.2}->{:.2}, adaptive {:.2}->{:.2}; compression: early {:.2}->{:.2}, \
         adaptive {:.2}->{:.2}, low-impact {:.2}->{:.2}",
        plain[early].1,
        inflated[early],
        plain[adaptive].1,
        inflated[adaptive],
        plain[early].1,
        compressed[early],
        plain[adaptive].1,
        compressed[adaptive],
        plain[low].1,
        compressed[low]
    ))
}

fn property_spot_checks() -> Outcome {
    let p = ModelParams::reference();

    // ROI is non-increasing in gamma.
    for name in ["early_adherence", "adaptive_nudges", "low_impact"] {
        let t = preset(name);
        let rois: Vec<f64> =
            (0..=12).map(|j| e2s(roi_at(&p, &t, t.adherence_gain_delta, 0.25 * j as f64))).collect::<Result<_, _>>()?;
        ensure(rois.windows(2).all(|w| w[1] <= w[0]), || format!("{name}: ROI rises with gamma"))?;
    }

    // Adherence stays in [0, 1] even for gains past the ceiling.
    let big = preset("early_adherence").with_delta(0.9);
    let a =
        e2s(mc::run_monte_carlo_detailed(&p, &big, &e2s(DistributionSpec::binary(0.95, 0.95, 1.0))?, 1, 1, Some(1)))?;
    ensure(a.draws[0].total_cost.is_finite(), || "clamped run failed".into())?;
    for name in scenario::PRESET_NAMES {
        let t = e2s(simulate_trajectory(&p, &preset(name)))?;
        ensure(t.adherence.iter().all(|a| (0.0..=1.0).contains(a)), || format!("{name}: adherence range"))?;
    }

    // Frontier: no grid cell dominates a frontier point.
    let grid =
        e2s(sweep_design_space(&p, &preset("early_adherence"), &[0.1, 0.2, 0.3, 0.4], &[0.5, 1.0, 1.5, 2.0, 2.5]))?;
    let front = e2s(roi::frontier(&grid))?;
    for f in &front {
        for (_, _, r, c) in grid.cells() {
            let cell = roi::FrontierPoint { total_cost: c, roi_percent: r };
            ensure(!roi::dominates(&cell, f), || format!("{cell:?} dominates {f:?}"))?;
        }
    }

    // Payback time brackets the first crossing of the cumulative curves.
    let base = e2s(simulate_trajectory(&p, &preset("baseline")))?;
    let early = e2s(simulate_trajectory(&p, &preset("early_adherence")))?;
    let t = e2s(payback_time(&base, &early))?.ok_or("early adherence never pays back")?;
    let i = early.times.iter().position(|&s| s >= t).ok_or("payback past horizon")?;
    ensure(early.cumulative_cost[i] <= base.cumulative_cost[i], || "after payback".into())?;
    ensure(i == 0 || early.cumulative_cost[i - 1] >= base.cumulative_cost[i - 1], || "before payback".into())?;

    // Stress transforms commute.
    for name in scenario::PRESET_NAMES {
        let x = preset(name);
        let a = e2s(apply_stress(
            &e2s(apply_stress(&x, Stress::CostInflation(1.2)))?,
            Stress::AcceleratedProgression(0.85),
        ))?;
        let b = e2s(apply_stress(
            &e2s(apply_stress(&x, Stress::AcceleratedProgression(0.85)))?,
            Stress::CostInflation(1.2),
        ))?;
        ensure(a == b, || format!("{name}: stress order matters"))?;
    }
    Ok(format!(
        "gamma monotonicity, adherence range, frontier ({} points), payback at {t:.2}, stress order",
        front.len()
    ))
}

/// Name, check and time budget.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 roi formula", roi_formula, Duration::from_millis(1)),
        ("2 closed-form integration oracles", closed_form_oracles, Duration::from_secs(1)),
        ("3 grid refinement", grid_refinement, Duration::from_secs(10)),
        ("4 scenario ordering", ordering, Duration::from_secs(5)),
        ("5 calibrated golden targets", golden_targets, Duration::from_secs(30)),
        ("6 break-even properties", breakeven, Duration::from_secs(20)),
        ("7 monte carlo determinism and sanity", monte_carlo, Duration::from_secs(120)),
        ("8 robustness patterns", robustness, Duration::from_secs(60)),
        ("9 property spot checks", property_spot_checks, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) if elapsed <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {elapsed:?}, budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} [{name}] {detail} ({:.3}s)", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
