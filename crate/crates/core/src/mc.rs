//! Parameter uncertainty over the adherence gain: distributions, seeded
//! Monte Carlo execution and distributional ROI summaries.
//!
//! # Sub-streams
//!
//! Draw `i` of a run with master seed `m` uses
//! `ChaCha8Rng::seed_from_u64(m)` switched to stream `i` (`set_stream(i)`),
//! starting at word position 0. ChaCha is counter-based, so every draw owns an
//! independent stream that does not depend on which worker evaluates it or in
//! what order. This construction is part of the output contract: changing it
//! changes every golden file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::simulate_clamped;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::params::ModelParams;
use crate::roi::{counterfactual, roi};
use crate::scenario::PolicyConfig;

/// Default spread of the adherence gain around its scenario value.
pub const DEFAULT_DELTA_SD: f64 = 0.05;

/// Quantile levels reported in every summary.
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Distribution of the adherence gain `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Beta { alpha_shape: f64, beta_shape: f64 },
    TruncNormal { mu: f64, sigma: f64, lo: f64, hi: f64 },
    Binary { delta_high: f64, delta_low: f64, p_high: f64 },
}

impl DistributionSpec {
    pub fn beta(alpha_shape: f64, beta_shape: f64) -> Result<Self> {
        let spec = Self::Beta { alpha_shape, beta_shape };
        spec.validate()?;
        Ok(spec)
    }

    /// Beta distribution with the given mean and standard deviation.
    pub fn beta_from_moments(mean: f64, sd: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) || sd.is_nan() || sd <= 0.0 || sd * sd >= mean * (1.0 - mean) {
            return Err(Error::InvalidDistribution(format!("no Beta distribution has mean {mean} and sd {sd}")));
        }
        let total = mean * (1.0 - mean) / (sd * sd) - 1.0;
        Self::beta(mean * total, (1.0 - mean) * total)
    }

    /// Normal truncated to `[0, 1]`.
    pub fn trunc_normal(mu: f64, sigma: f64) -> Result<Self> {
        let spec = Self::TruncNormal { mu, sigma, lo: 0.0, hi: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn binary(delta_high: f64, delta_low: f64, p_high: f64) -> Result<Self> {
        let spec = Self::Binary { delta_high, delta_low, p_high };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            Self::Beta { alpha_shape, beta_shape } => {
                if !(alpha_shape > 0.0 && beta_shape > 0.0 && alpha_shape.is_finite() && beta_shape.is_finite()) {
                    return bad(format!("Beta shapes must be positive, got ({alpha_shape}, {beta_shape})"));
                }
            }
            Self::TruncNormal { mu, sigma, lo, hi } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return bad(format!("truncation bounds must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"));
                }
                if !(lo..=hi).contains(&mu) {
                    return bad(format!("mu = {mu} must lie inside [{lo}, {hi}]"));
                }
            }
            Self::Binary { delta_high, delta_low, p_high } => {
                for (name, v) in [("delta_high", delta_high), ("delta_low", delta_low), ("p_high", p_high)] {
                    if !(0.0..=1.0).contains(&v) {
                        return bad(format!("{name} = {v} must lie in [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Analytic mean (not used by the sampler).
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Beta { alpha_shape, beta_shape } => alpha_shape / (alpha_shape + beta_shape),
            Self::TruncNormal { mu, sigma, lo, hi } => trunc_normal_mean(mu, sigma, lo, hi),
            Self::Binary { delta_high, delta_low, p_high } => p_high * delta_high + (1.0 - p_high) * delta_low,
        }
    }
}

/// Mean of a truncated normal by Simpson quadrature of the density.
fn trunc_normal_mean(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let lo = lo.max(mu - 12.0 * sigma);
    let hi = hi.min(mu + 12.0 * sigma);
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let (mut mass, mut first) = (0.0, 0.0);
    for i in 0..=n {
        let x = lo + h * i as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let z = (x - mu) / sigma;
        let density = (-0.5 * z * z).exp();
        mass += w * density;
        first += w * density * x;
    }
    first / mass
}

/// Derives the independent generator of draw `index`.
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng.set_word_pos(0);
    rng
}

/// One draw of `delta`, always in `[0, 1]`.
pub fn sample_delta<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> f64 {
    let x = match *spec {
        DistributionSpec::Beta { alpha_shape, beta_shape } => {
            Beta::new(alpha_shape, beta_shape).expect("validated Beta shapes").sample(rng)
        }
        DistributionSpec::TruncNormal { mu, sigma, lo, hi } => {
            let normal = Normal::new(mu, sigma).expect("validated sigma");
            // mu lies inside [lo, hi], so acceptance is at least ~1/3 for
            // sigma <= 1; the loop terminates quickly.
            loop {
                let x = normal.sample(rng);
                if (lo..=hi).contains(&x) {
                    break x;
                }
            }
        }
        DistributionSpec::Binary { delta_high, delta_low, p_high } => {
            if rng.random::<f64>() < p_high {
                delta_high
            } else {
                delta_low
            }
        }
    };
    x.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

/// One Monte Carlo draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub index: u64,
    pub delta: f64,
    pub total_cost: f64,
    pub roi_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_draws: u64,
    pub master_seed: u64,
    pub roi_mean: f64,
    pub roi_sd: f64,
    pub roi_quantiles: Vec<Quantile>,
    pub prob_roi_positive: f64,
    pub cost_mean: f64,
    pub cost_sd: f64,
    /// Shared no-policy cost every draw is compared against.
    pub baseline_cost: f64,
}

impl McSummary {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.roi_quantiles.iter().find(|q| (q.level - level).abs() < 1e-12).map(|q| q.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub summary: McSummary,
    /// Sorted by draw index.
    pub draws: Vec<Draw>,
}

/// Fraction of draws with strictly positive ROI.
pub fn positive_roi_rate(summary: &McSummary) -> f64 {
    summary.prob_roi_positive
}

pub fn run_monte_carlo(
    params: &ModelParams,
    template: &PolicyConfig,
    spec: &DistributionSpec,
    n: u64,
    master_seed: u64,
) -> Result<McSummary> {
    Ok(run_monte_carlo_detailed(params, template, spec, n, master_seed, None)?.summary)
}

/// Runs `n` draws. `workers` pins the size of a dedicated thread pool; `None`
/// uses the global pool. The output does not depend on the worker count.
pub fn run_monte_carlo_detailed(
    params: &ModelParams,
    template: &PolicyConfig,
    spec: &DistributionSpec,
    n: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<McRun> {
    if n == 0 {
        return Err(Error::Empty("n_draws"));
    }
    params.validate()?;
    template.validate_fields()?;
    spec.validate()?;
    let grid = TimeGrid::default_for(params.horizon)?;
    let baseline_cost = simulate_clamped(params, &counterfactual(template), grid)?.final_cost();

    let one = |index: u64| -> Result<Draw> {
        let mut rng = substream(master_seed, index);
        let delta = sample_delta(spec, &mut rng);
        let policy = template.with_delta(delta);
        let wrap = |e: Error| Error::Draw { index, delta, source: Box::new(e) };
        let cost = simulate_clamped(params, &policy, grid).map_err(wrap)?.final_cost();
        let roi_percent = roi(baseline_cost, cost).map_err(wrap)?;
        Ok(Draw { index, delta, total_cost: cost, roi_percent })
    };

    let mut draws: Vec<Draw> = match workers {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter { name: "workers", reason: e.to_string() })?;
            pool.install(|| (0..n).into_par_iter().map(one).collect::<Result<_>>())?
        }
        None => (0..n).into_par_iter().map(one).collect::<Result<_>>()?,
    };
    draws.sort_by_key(|d| d.index);

    let summary = summarize(&draws, master_seed, baseline_cost);
    Ok(McRun { summary, draws })
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Nearest-rank quantile of sorted data: the value at rank `ceil(q n)`.
pub fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = (level * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Aggregates draws already sorted by index.
fn summarize(draws: &[Draw], master_seed: u64, baseline_cost: f64) -> McSummary {
    let (roi_mean, roi_sd) = mean_sd(draws.iter().map(|d| d.roi_percent));
    let (cost_mean, cost_sd) = mean_sd(draws.iter().map(|d| d.total_cost));
    let mut sorted: Vec<f64> = draws.iter().map(|d| d.roi_percent).collect();
    sorted.sort_by(f64::total_cmp);
    let roi_quantiles =
        QUANTILE_LEVELS.iter().map(|&level| Quantile { level, value: nearest_rank(&sorted, level) }).collect();
    let positive = draws.iter().filter(|d| d.roi_percent > 0.0).count();
    McSummary {
        n_draws: draws.len() as u64,
        master_seed,
        roi_mean,
        roi_sd,
        roi_quantiles,
        prob_roi_positive: positive as f64 / draws.len() as f64,
        cost_mean,
        cost_sd,
        baseline_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_preset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_binary_always_returns_its_value() {
        let spec = DistributionSpec::binary(0.3, 0.3, 0.37).unwrap();
        let mut rng = substream(7, 0);
        for _ in 0..100 {
            assert_eq!(sample_delta(&spec, &mut rng), 0.3);
        }
    }

    #[test]
    fn vanishing_variance_truncnormal() {
        let spec = DistributionSpec::trunc_normal(0.3, 1e-9).unwrap();
        let mut rng = substream(1, 2);
        for _ in 0..100 {
            assert_abs_diff_eq!(sample_delta(&spec, &mut rng), 0.3, epsilon = 1e-7);
        }
    }

    #[test]
    fn beta_mean_from_many_draws() {
        let spec = DistributionSpec::beta(2.0, 5.0).unwrap();
        let mut rng = substream(42, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_delta(&spec, &mut rng)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(mean, 2.0 / 7.0, epsilon = 0.005);
    }

    #[test]
    fn beta_from_moments_recovers_moments() {
        let spec = DistributionSpec::beta_from_moments(0.3, 0.05).unwrap();
        let DistributionSpec::Beta { alpha_shape: a, beta_shape: b } = spec else { panic!() };
        let mean = a / (a + b);
        let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        assert_abs_diff_eq!(mean, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(var.sqrt(), 0.05, epsilon = 1e-12);
        assert!(DistributionSpec::beta_from_moments(0.5, 0.6).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(DistributionSpec::beta(0.0, 1.0).is_err());
        assert!(DistributionSpec::trunc_normal(0.3, 0.0).is_err());
        assert!(DistributionSpec::binary(1.2, 0.1, 0.5).is_err());
        assert!(DistributionSpec::binary(0.3, 0.1, -0.1).is_err());
        let s = DistributionSpec::TruncNormal { mu: 0.5, sigma: 0.1, lo: 0.6, hi: 0.4 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 0), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 0), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 1), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(nearest_rank(&data, 0.05), 1.0);
        assert_eq!(nearest_rank(&data, 0.25), 3.0);
        assert_eq!(nearest_rank(&data, 0.5), 5.0);
        assert_eq!(nearest_rank(&data, 0.95), 10.0);
        assert_eq!(nearest_rank(&[4.0], 0.05), 4.0);
    }

    #[test]
    fn single_degenerate_draw_matches_deterministic_run() {
        let p = ModelParams::reference();
        let e = build_preset("early_adherence").unwrap();
        let spec = DistributionSpec::binary(0.3, 0.3, 0.5).unwrap();
        let s = run_monte_carlo(&p, &e, &spec, 1, 11).unwrap();
        let direct = crate::roi::compare(&p, &e).unwrap().roi_percent;
        assert_eq!(s.roi_mean, direct);
        assert_eq!(s.roi_sd, 0.0);
        assert_eq!(s.n_draws, 1);
    }

    #[test]
    fn zero_roi_is_not_positive() {
        let p = ModelParams::reference();
        let free_nothing = PolicyConfig { kind: crate::scenario::ScenarioKind::Custom, ..PolicyConfig::baseline() };
        let spec = DistributionSpec::binary(0.0, 0.0, 0.5).unwrap();
        let s = run_monte_carlo(&p, &free_nothing, &spec, 3, 1).unwrap();
        assert_eq!(s.roi_mean, 0.0);
        assert_eq!(positive_roi_rate(&s), 0.0);
    }

    #[test]
    fn zero_draws_is_an_error() {
        let p = ModelParams::reference();
        let e = build_preset("early_adherence").unwrap();
        let spec = DistributionSpec::trunc_normal(0.3, 0.05).unwrap();
        assert!(run_monte_carlo(&p, &e, &spec, 0, 1).is_err());
    }
}
