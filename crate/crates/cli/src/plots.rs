//! Plot-ready CSV series, one file per curve.

use anyhow::{Context, Result};
use chronic_roi::mc::run_monte_carlo_detailed;
use chronic_roi::scenario::{DEFAULT_BASELINE_DECAY, PRESET_NAMES};
use chronic_roi::{build_preset, simulate_trajectory, PolicyConfig, Trajectory};

use crate::config::{GainDistribution, PlotFamily, StressKind};
use crate::format::sig6;
use crate::output::{OutputSet, Table};
use crate::run::{stress_rows, RunContext};

/// Equal-width bins in every Monte Carlo histogram.
pub const HISTOGRAM_BINS: usize = 40;

/// Spread of the two responder subgroups around the scenario gain.
pub const SUBGROUP_SPREAD: f64 = 0.1;

/// Label of the no-policy arm with slowly eroding adherence.
pub const DECAYING_BASELINE_LABEL: &str = "baseline_decaying";

/// Writes the requested figure families and returns a summary line.
pub(crate) fn export_plot_data(ctx: &RunContext, families: &[PlotFamily], out: &mut OutputSet) -> Result<String> {
    let needs_curves =
        families.iter().any(|f| matches!(f, PlotFamily::Severity | PlotFamily::Adherence | PlotFamily::Cost));
    let curves = if needs_curves { scenario_curves(ctx)? } else { Vec::new() };
    let before = out.entries().len();
    for &family in families {
        match family {
            PlotFamily::Severity => series(out, family, &curves, "severity", |t| &t.severity)?,
            PlotFamily::Adherence => series(out, family, &curves, "adherence", |t| &t.adherence)?,
            PlotFamily::Cost => series(out, family, &curves, "cumulative_cost", |t| &t.cumulative_cost)?,
            PlotFamily::Mc => histograms(ctx, out)?,
            PlotFamily::Stress => stress_pairs(ctx, out)?,
        }
    }
    let names: Vec<_> = families.iter().map(|f| f.name()).collect();
    Ok(format!("exported {} files for {}", out.entries().len() - before, names.join(", ")))
}

/// Presets, the decaying baseline, and the configured scenario if it is new.
fn scenario_curves(ctx: &RunContext) -> Result<Vec<(String, Trajectory)>> {
    let mut designs: Vec<(String, PolicyConfig)> = Vec::new();
    for name in PRESET_NAMES {
        designs.push((name.to_string(), build_preset(name)?));
    }
    let decaying = PolicyConfig::baseline().with_baseline_decay(Some(DEFAULT_BASELINE_DECAY));
    designs.push((DECAYING_BASELINE_LABEL.to_string(), decaying));
    if !designs.iter().any(|(_, p)| *p == ctx.policy) {
        designs.push((ctx.label.clone(), ctx.policy));
    }
    designs
        .into_iter()
        .map(|(label, p)| {
            let t = simulate_trajectory(&ctx.params, &p).with_context(|| format!("simulating {label}"))?;
            Ok((label, t))
        })
        .collect()
}

fn series(
    out: &mut OutputSet,
    family: PlotFamily,
    curves: &[(String, Trajectory)],
    column: &str,
    pick: impl Fn(&Trajectory) -> &Vec<f64>,
) -> Result<()> {
    for (label, t) in curves {
        let mut table = Table::new(&["time", column]);
        for (s, v) in t.times.iter().zip(pick(t)) {
            table.push(vec![sig6(*s), sig6(*v)]);
        }
        let name = format!("{family}/{label}.csv");
        out.add_labeled_csv(&name, &table, Some(family.name()), Some(label))?;
    }
    Ok(())
}

/// The three gain distributions overlaid in the ROI histogram.
fn histogram_distributions(ctx: &RunContext) -> Vec<(&'static str, GainDistribution)> {
    let delta = ctx.policy.adherence_gain_delta;
    let configured = ctx.config.distribution();
    let sd = match configured {
        GainDistribution::Beta { sd } | GainDistribution::TruncNormal { sd } => sd,
        GainDistribution::Binary { .. } => chronic_roi::mc::DEFAULT_DELTA_SD,
    };
    let subgroups = match configured {
        GainDistribution::Binary { .. } => configured,
        _ => GainDistribution::Binary {
            delta_high: (delta + SUBGROUP_SPREAD).min(1.0),
            delta_low: (delta - SUBGROUP_SPREAD).max(0.0),
            p_high: 0.5,
        },
    };
    vec![
        ("beta", GainDistribution::Beta { sd }),
        ("trunc_normal", GainDistribution::TruncNormal { sd }),
        ("subgroups", subgroups),
    ]
}

fn histograms(ctx: &RunContext, out: &mut OutputSet) -> Result<()> {
    let (seed, n) = (ctx.config.seed.expect("validated"), ctx.config.n_draws.expect("validated"));
    let mut samples = Vec::new();
    for (label, dist) in histogram_distributions(ctx) {
        let spec = dist
            .to_spec(ctx.policy.adherence_gain_delta)
            .with_context(|| format!("{label} distribution for scenario {}", ctx.label))?;
        let run = run_monte_carlo_detailed(&ctx.params, &ctx.policy, &spec, n, seed, ctx.config.workers)?;
        samples.push((label, run.draws.iter().map(|d| d.roi_percent).collect::<Vec<_>>()));
    }
    // Shared edges so the overlays line up.
    let all = samples.iter().flat_map(|(_, v)| v.iter().copied());
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let bins = if hi > lo { HISTOGRAM_BINS } else { 1 };
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    for (label, values) in samples {
        let mut counts = vec![0u64; bins];
        for v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let mut table = Table::new(&["bin_lower", "bin_upper", "count"]);
        for (k, c) in counts.iter().enumerate() {
            let upper = if k + 1 == bins { hi.max(lo + width) } else { lo + width * (k + 1) as f64 };
            table.push(vec![sig6(lo + width * k as f64), sig6(upper), c.to_string()]);
        }
        let name = format!("mc/roi_histogram_{label}.csv");
        out.add_labeled_csv(&name, &table, Some("mc"), Some(label))?;
    }
    Ok(())
}

fn stress_pairs(ctx: &RunContext, out: &mut OutputSet) -> Result<()> {
    for kind in [StressKind::Inflation, StressKind::Compression] {
        let rows = stress_rows(ctx, &[kind])?;
        let mut table = Table::new(&["scenario", "factor", "roi_baseline", "roi_stressed"]);
        for r in &rows {
            table.push(vec![
                r.scenario.clone(),
                sig6(r.factor),
                sig6(r.unstressed.roi_percent),
                sig6(r.stressed.roi_percent),
            ]);
        }
        let label = rows.first().map_or("stress", |r| r.stress);
        out.add_labeled_csv(&format!("stress/{label}.csv"), &table, Some("stress"), Some(label))?;
    }
    Ok(())
}
