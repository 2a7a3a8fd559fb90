//! Run orchestration: one configuration in, one set of files out.

use std::path::PathBuf;

use anyhow::{Context, Result};
use chronic_roi::mc::run_monte_carlo_detailed;
use chronic_roi::roi::{compare, counterfactual, CONTOUR_LEVELS_EFFICIENCY, CONTOUR_LEVELS_SIGN};
use chronic_roi::scenario::PRESET_NAMES;
use chronic_roi::{
    apply_stress, breakeven_gamma, build_preset, frontier, payback_time, simulate_trajectory, sweep_design_space,
    ModelParams, PolicyConfig, RoiGrid, Stress, Trajectory,
};
use serde::Serialize;

use crate::config::{Mode, RunConfig, StressKind};
use crate::format::{sig6, sig6_opt};
use crate::output::{Manifest, OutputSet, Table};
use crate::plots;

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// One-line human summary.
    pub summary: String,
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// Everything a mode needs, resolved once.
pub(crate) struct RunContext {
    pub params: ModelParams,
    pub policy: PolicyConfig,
    pub label: String,
    pub config: RunConfig,
}

pub fn load_params(config: &RunConfig) -> Result<ModelParams> {
    match &config.params_file {
        Some(path) => {
            ModelParams::from_file(path).with_context(|| format!("params_file {} could not be loaded", path.display()))
        }
        None => Ok(ModelParams::reference()),
    }
}

/// Executes `config`. Nothing is written unless every computation succeeds.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let params = load_params(config)?;
    let policy = config.scenario.policy()?;
    policy.validate(&params).context("scenario is inconsistent with the parameter file")?;
    let ctx = RunContext { params, policy, label: config.scenario.label(), config: config.clone() };

    let mut out = OutputSet::new();
    let summary = match config.mode {
        Mode::Simulate => simulate(&ctx, &mut out)?,
        Mode::Compare => compare_arms(&ctx, &mut out)?,
        Mode::Sweep => sweep(&ctx, &mut out)?,
        Mode::Breakeven => breakeven(&ctx, &mut out)?,
        Mode::MonteCarlo => monte_carlo(&ctx, &mut out)?,
        Mode::Stress => stress(&ctx, &mut out)?,
        Mode::ExportPlots => plots::export_plot_data(&ctx, &config.plot_families(), &mut out)?,
    };
    let echo = serde_json::to_value(config)?;
    let manifest = out.commit(&config.output_dir, echo)?;
    Ok(RunReport { summary, output_dir: config.output_dir.clone(), manifest })
}

pub(crate) fn trajectory_table(t: &Trajectory) -> Table {
    let mut table =
        Table::new(&["time", "adherence", "severity", "policy_cost", "instantaneous_cost", "cumulative_cost"]);
    for i in 0..t.len() {
        table.push(vec![
            sig6(t.times[i]),
            sig6(t.adherence[i]),
            sig6(t.severity[i]),
            sig6(t.policy_cost[i]),
            sig6(t.instantaneous_cost[i]),
            sig6(t.cumulative_cost[i]),
        ]);
    }
    table
}

fn simulate(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let t = simulate_trajectory(&ctx.params, &ctx.policy)?;
    out.add_csv(&format!("trajectory_{}.csv", ctx.label), &trajectory_table(&t))?;
    Ok(format!(
        "{}: C({}) = {:.2}, severity {:.3}, adherence {:.3}, {} nudges",
        ctx.label,
        ctx.params.horizon,
        t.final_cost(),
        t.final_severity(),
        t.final_adherence(),
        t.nudges.count
    ))
}

fn compare_arms(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let base = simulate_trajectory(&ctx.params, &counterfactual(&ctx.policy))?;
    let arm = simulate_trajectory(&ctx.params, &ctx.policy)?;
    let roi = chronic_roi::roi(base.final_cost(), arm.final_cost())?;
    let payback = payback_time(&base, &arm)?;
    out.add_csv("trajectory_no_policy.csv", &trajectory_table(&base))?;
    out.add_csv(&format!("trajectory_{}.csv", ctx.label), &trajectory_table(&arm))?;
    let mut table = Table::new(&["scenario", "baseline_cost", "policy_cost", "roi_percent", "payback_years"]);
    table.push(vec![ctx.label.clone(), sig6(base.final_cost()), sig6(arm.final_cost()), sig6(roi), sig6_opt(payback)]);
    out.add_csv("comparison.csv", &table)?;
    let payback = payback.map_or_else(|| "none".to_string(), |p| format!("{p:.2} years"));
    Ok(format!(
        "{} vs no policy: ROI {roi:.1}% (cost {:.2} vs {:.2}), payback {payback}",
        ctx.label,
        arm.final_cost(),
        base.final_cost()
    ))
}

#[derive(Serialize)]
struct LevelSet {
    name: &'static str,
    levels: Vec<f64>,
    crossings: Vec<Crossing>,
}

/// Point where ROI crosses `level` along a gamma row, by linear interpolation.
#[derive(Serialize)]
struct Crossing {
    level: f64,
    delta: f64,
    gamma: f64,
}

#[derive(Serialize)]
struct ContourData<'a> {
    scenario: &'a str,
    delta_axis: &'a [f64],
    gamma_axis: &'a [f64],
    roi_percent: &'a [Vec<f64>],
    level_sets: Vec<LevelSet>,
}

fn crossings(grid: &RoiGrid, levels: &[f64]) -> Vec<Crossing> {
    let mut found = Vec::new();
    for &level in levels {
        for (i, &delta) in grid.delta_axis.iter().enumerate() {
            let row = &grid.roi_percent[i];
            for j in 1..row.len() {
                let (a, b) = (row[j - 1] - level, row[j] - level);
                if a == 0.0 {
                    found.push(Crossing { level, delta, gamma: grid.gamma_axis[j - 1] });
                } else if a * b < 0.0 {
                    let w = a / (a - b);
                    let gamma = grid.gamma_axis[j - 1] + w * (grid.gamma_axis[j] - grid.gamma_axis[j - 1]);
                    found.push(Crossing { level, delta, gamma });
                }
            }
            if row.last().map(|r| r - level) == Some(0.0) {
                found.push(Crossing { level, delta, gamma: *grid.gamma_axis.last().unwrap() });
            }
        }
    }
    found
}

fn sweep(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let axes = ctx.config.sweep_axes();
    let grid = sweep_design_space(&ctx.params, &ctx.policy, &axes.deltas, &axes.gammas)?;
    let front = frontier(&grid)?;

    let mut cells = Table::new(&["delta", "gamma", "roi_percent", "total_cost"]);
    for (d, g, r, c) in grid.cells() {
        cells.push(vec![sig6(d), sig6(g), sig6(r), sig6(c)]);
    }
    out.add_csv("roi_grid.csv", &cells)?;

    let mut ft = Table::new(&["total_cost", "roi_percent"]);
    for p in &front {
        ft.push(vec![sig6(p.total_cost), sig6(p.roi_percent)]);
    }
    out.add_csv("frontier.csv", &ft)?;

    let contours = ContourData {
        scenario: &ctx.label,
        delta_axis: &grid.delta_axis,
        gamma_axis: &grid.gamma_axis,
        roi_percent: &grid.roi_percent,
        level_sets: vec![
            LevelSet {
                name: "sign",
                levels: CONTOUR_LEVELS_SIGN.to_vec(),
                crossings: crossings(&grid, &CONTOUR_LEVELS_SIGN),
            },
            LevelSet {
                name: "efficiency",
                levels: CONTOUR_LEVELS_EFFICIENCY.to_vec(),
                crossings: crossings(&grid, &CONTOUR_LEVELS_EFFICIENCY),
            },
        ],
    };
    out.add_json("contours.json", &contours)?;

    let all = grid.roi_percent.iter().flatten();
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!(
        "sweep of {}: {} x {} cells, ROI {lo:.1}% to {hi:.1}%, {} frontier points",
        ctx.label,
        grid.delta_axis.len(),
        grid.gamma_axis.len(),
        front.len()
    ))
}

fn breakeven(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let mut table = Table::new(&["delta", "gamma_star"]);
    let mut parts = Vec::new();
    for d in ctx.config.breakeven_deltas() {
        let star = breakeven_gamma(&ctx.params, &ctx.policy, d)
            .with_context(|| format!("break-even search failed at delta = {d}"))?;
        table.push(vec![sig6(d), sig6_opt(star)]);
        parts.push(match star {
            Some(g) => format!("delta {d}: {g:.4}"),
            None => format!("delta {d}: none"),
        });
    }
    out.add_csv("breakeven.csv", &table)?;
    Ok(format!("break-even gamma for {}: {}", ctx.label, parts.join(", ")))
}

#[derive(Serialize)]
struct McReport<'a> {
    scenario: &'a str,
    distribution: crate::config::GainDistribution,
    #[serde(flatten)]
    summary: &'a chronic_roi::McSummary,
}

fn monte_carlo(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let (seed, n) = (ctx.config.seed.expect("validated"), ctx.config.n_draws.expect("validated"));
    let dist = ctx.config.distribution();
    let spec = dist.to_spec(ctx.policy.adherence_gain_delta)?;
    let run = run_monte_carlo_detailed(&ctx.params, &ctx.policy, &spec, n, seed, ctx.config.workers)?;

    let mut draws = Table::new(&["draw_index", "delta", "total_cost", "roi_percent"]);
    for d in &run.draws {
        draws.push(vec![d.index.to_string(), sig6(d.delta), sig6(d.total_cost), sig6(d.roi_percent)]);
    }
    out.add_csv("mc_draws.csv", &draws)?;
    let report = McReport { scenario: &ctx.label, distribution: dist, summary: &run.summary };
    out.add_json("mc_summary.json", &report)?;
    let s = &run.summary;
    Ok(format!(
        "{} Monte Carlo, {n} {} draws (seed {seed}): mean ROI {:.2}% (sd {:.2}), P(ROI > 0) = {:.3}",
        ctx.label,
        dist.name(),
        s.roi_mean,
        s.roi_sd,
        s.prob_roi_positive
    ))
}

/// One scenario evaluated with and without a stress.
pub(crate) struct StressRow {
    pub scenario: String,
    pub stress: &'static str,
    pub factor: f64,
    pub unstressed: chronic_roi::roi::Comparison,
    pub stressed: chronic_roi::roi::Comparison,
}

/// Policy designs shown in stress comparisons: the five policy presets, plus
/// the configured scenario when it is not one of them.
pub(crate) fn stress_designs(ctx: &RunContext) -> Result<Vec<(String, PolicyConfig)>> {
    let mut designs = Vec::new();
    for name in &PRESET_NAMES[1..] {
        designs.push((name.to_string(), build_preset(name)?));
    }
    if ctx.policy.kind != chronic_roi::ScenarioKind::Baseline && !designs.iter().any(|(_, p)| *p == ctx.policy) {
        designs.push((ctx.label.clone(), ctx.policy));
    }
    Ok(designs)
}

pub(crate) fn stress_rows(ctx: &RunContext, kinds: &[StressKind]) -> Result<Vec<StressRow>> {
    let mut rows = Vec::new();
    for (name, policy) in stress_designs(ctx)? {
        let unstressed = compare(&ctx.params, &policy)?;
        for kind in kinds {
            let (label, factor, stress) = match kind {
                StressKind::Inflation => {
                    let f = ctx.config.inflation_factor();
                    ("inflation", f, Stress::CostInflation(f))
                }
                StressKind::Compression => {
                    let c = ctx.config.compression();
                    ("compression", c, Stress::AcceleratedProgression(c))
                }
                StressKind::Both => unreachable!("expanded by caller"),
            };
            let stressed = compare(&ctx.params, &apply_stress(&policy, stress)?)?;
            rows.push(StressRow { scenario: name.clone(), stress: label, factor, unstressed, stressed });
        }
    }
    Ok(rows)
}

pub(crate) fn expand(kind: StressKind) -> Vec<StressKind> {
    match kind {
        StressKind::Both => vec![StressKind::Inflation, StressKind::Compression],
        k => vec![k],
    }
}

fn stress(ctx: &RunContext, out: &mut OutputSet) -> Result<String> {
    let rows = stress_rows(ctx, &expand(ctx.config.stress_kind()))?;
    let mut table = Table::new(&[
        "scenario",
        "stress",
        "factor",
        "roi_unstressed",
        "roi_stressed",
        "cost_unstressed",
        "cost_stressed",
    ]);
    for r in &rows {
        table.push(vec![
            r.scenario.clone(),
            r.stress.to_string(),
            sig6(r.factor),
            sig6(r.unstressed.roi_percent),
            sig6(r.stressed.roi_percent),
            sig6(r.unstressed.policy_cost),
            sig6(r.stressed.policy_cost),
        ]);
    }
    out.add_csv("stress.csv", &table)?;
    let mut parts = Vec::new();
    for kind in expand(ctx.config.stress_kind()) {
        let name = match kind {
            StressKind::Inflation => "inflation",
            _ => "compression",
        };
        let of_kind: Vec<_> = rows.iter().filter(|r| r.stress == name).collect();
        let positive = of_kind.iter().filter(|r| r.stressed.roi_percent > 0.0).count();
        parts.push(format!("{name} x{}: {positive} of {} designs ROI-positive", of_kind[0].factor, of_kind.len()));
    }
    Ok(format!("stress test: {}", parts.join("; ")))
}
