//! Replicated experiments, aggregation, and the variance-scaling probe.
//!
//! Replica `j` always runs on RNG stream `(master_seed, j)`, so results are
//! a deterministic function of the configuration no matter how many workers
//! execute them or in which order they finish.

use rand::Rng;
use rayon::prelude::*;

use crate::census::{
    run_totals_with, run_trajectory_with, RateContext, SeedStream, Trajectory,
};
use crate::error::{Error, Result};
use crate::measure::{LambdaMeasure, MeasureKind};
use crate::theory;

/// A replicated experiment over a grid of sample sizes.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub measure: LambdaMeasure,
    pub n_values: Vec<u64>,
    pub r_max: u32,
    pub replicas: u64,
    pub master_seed: u64,
    /// Rescaled snapshot times; used by trajectory mode only.
    pub time_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Config("n values must be non-empty with entries >= 2".into()));
        }
        if self.n_values.iter().any(|&n| (self.r_max as u64) > n) {
            return Err(Error::Config(format!("r_max {} exceeds some n", self.r_max)));
        }
        if self.time_grid.windows(2).any(|w| w[0] >= w[1])
            || self.time_grid.first().is_some_and(|&t| t < 0.0)
        {
            return Err(Error::Config("time grid must be nonnegative and increasing".into()));
        }
        Ok(())
    }
}

/// One replica's total caterpillar counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalsReplica {
    pub n: u64,
    pub replica: u64,
    pub seed: SeedStream,
    /// `cumulative[r]` = `xi_r` for `r = 2..=r_max`; `cumulative[1] = n`.
    pub cumulative: Vec<u64>,
    pub events: u64,
    pub final_time: f64,
}

/// Run `replicas` independent coalescences for every `n` in the grid.
/// Replicas execute in parallel on the current rayon pool; output order is
/// `(n, replica)`-sorted regardless of completion order.
pub fn run_totals_ensemble(config: &ExperimentConfig) -> Result<Vec<TotalsReplica>> {
    config.validate()?;
    let mut out = Vec::new();
    for &n in &config.n_values {
        let ctx = RateContext::new(&config.measure, n)?;
        let mut rows: Vec<TotalsReplica> = (0..config.replicas)
            .into_par_iter()
            .map(|replica| {
                let seed = SeedStream::new(config.master_seed, replica);
                let totals = run_totals_with(&ctx, n, config.r_max, seed)?;
                Ok(TotalsReplica {
                    n,
                    replica,
                    seed,
                    cumulative: totals.cumulative,
                    events: totals.events,
                    final_time: totals.final_time,
                })
            })
            .collect::<Result<_>>()?;
        rows.sort_by_key(|r| r.replica);
        out.extend(rows);
    }
    Ok(out)
}

/// One replica's trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReplica {
    pub n: u64,
    pub replica: u64,
    pub trajectory: Trajectory,
}

/// Trajectory counterpart of [`run_totals_ensemble`].
pub fn run_trajectory_ensemble(config: &ExperimentConfig) -> Result<Vec<TrajectoryReplica>> {
    config.validate()?;
    if config.time_grid.is_empty() {
        return Err(Error::Config("trajectory mode needs a time grid".into()));
    }
    let mut out = Vec::new();
    for &n in &config.n_values {
        let ctx = RateContext::new(&config.measure, n)?;
        let mut rows: Vec<TrajectoryReplica> = (0..config.replicas)
            .into_par_iter()
            .map(|replica| {
                let seed = SeedStream::new(config.master_seed, replica);
                let trajectory =
                    run_trajectory_with(&ctx, n, config.r_max, &config.time_grid, seed)?;
                Ok(TrajectoryReplica { n, replica, trajectory })
            })
            .collect::<Result<_>>()?;
        rows.sort_by_key(|r| r.replica);
        out.extend(rows);
    }
    Ok(out)
}

/// Mean / spread / theory-target summary of one statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: u64,
    pub r: u32,
    /// Rescaled snapshot time; `None` for totals mode.
    pub t: Option<f64>,
    pub mean: f64,
    pub std_dev: f64,
    /// Half-width of the standard-error-based 95% interval.
    pub ci_half_width: f64,
    pub replicas: u64,
    /// Single replica: std is 0 by convention and the interval is
    /// meaningless.
    pub degenerate: bool,
    pub target: Option<f64>,
    pub deviation: Option<f64>,
}

fn summarize(values: &[f64]) -> (f64, f64, f64, bool) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0, 0.0, true);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let std_dev = var.sqrt();
    (mean, std_dev, 1.96 * std_dev / count.sqrt(), false)
}

/// Aggregate totals replicas into per-`(n, r)` rows of `xi_r / n`, with the
/// limiting constant attached as the theory target. A sequential fold over
/// replica-sorted input: associative, commutative, order-independent.
pub fn aggregate_totals(
    results: &[TotalsReplica],
    measure: &LambdaMeasure,
) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(Error::Config("nothing to aggregate".into()));
    }
    let mut sorted: Vec<&TotalsReplica> = results.iter().collect();
    sorted.sort_by_key(|r| (r.n, r.replica));
    let r_max = sorted[0].cumulative.len() - 1;
    let mut rows = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let n = sorted[i].n;
        let group: Vec<&&TotalsReplica> = sorted[i..].iter().take_while(|r| r.n == n).collect();
        for r in 2..=r_max as u32 {
            let values: Vec<f64> = group
                .iter()
                .map(|rep| rep.cumulative[r as usize] as f64 / n as f64)
                .collect();
            let (mean, std_dev, ci_half_width, degenerate) = summarize(&values);
            let target = theory::limit_constant(measure.alpha(), r)?;
            rows.push(AggregateRow {
                n,
                r,
                t: None,
                mean,
                std_dev,
                ci_half_width,
                replicas: values.len() as u64,
                degenerate,
                target: Some(target),
                deviation: Some((mean - target).abs()),
            });
        }
        i += group.len();
    }
    Ok(rows)
}

/// Aggregate trajectory replicas into per-`(n, t, r)` rows of `X_r(t)`, with
/// the closed-form `x_r(t)` attached.
pub fn aggregate_trajectory(
    results: &[TrajectoryReplica],
    measure: &LambdaMeasure,
) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        return Err(Error::Config("nothing to aggregate".into()));
    }
    let mut sorted: Vec<&TrajectoryReplica> = results.iter().collect();
    sorted.sort_by_key(|r| (r.n, r.replica));
    let grid = sorted[0].trajectory.grid.clone();
    let dim = sorted[0].trajectory.states[0].len();
    let mut rows = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let n = sorted[i].n;
        let group: Vec<&&TrajectoryReplica> = sorted[i..].iter().take_while(|r| r.n == n).collect();
        for (gi, &t) in grid.iter().enumerate() {
            for r in 0..dim as u32 {
                let values: Vec<f64> =
                    group.iter().map(|rep| rep.trajectory.states[gi][r as usize]).collect();
                let (mean, std_dev, ci_half_width, degenerate) = summarize(&values);
                let target = theory::x_r(measure.alpha(), r, t)?;
                rows.push(AggregateRow {
                    n,
                    r,
                    t: Some(t),
                    mean,
                    std_dev,
                    ci_half_width,
                    replicas: values.len() as u64,
                    degenerate,
                    target: Some(target),
                    deviation: Some((mean - target).abs()),
                });
            }
        }
        i += group.len();
    }
    Ok(rows)
}

/// One grid point of the variance-scaling probe.
#[derive(Debug, Clone, PartialEq)]
pub struct VariancePoint {
    pub n: u64,
    pub replicas: u64,
    /// Replica-to-replica variance of the first-event increment of `X_0`.
    pub variance: f64,
    pub log_n: f64,
    pub log_variance: f64,
    /// Delta-method standard error of `log_variance`.
    pub se_log_variance: f64,
}

/// Fitted log-log scaling of the increment variance.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScalingReport {
    pub alpha: f64,
    pub points: Vec<VariancePoint>,
    pub slope: f64,
    pub slope_se: f64,
    /// The exponent the slope is compared against, `alpha - 3`.
    pub reference_exponent: f64,
    pub deviation: f64,
}

/// Suggested replica counts: the increment distribution has a heavy
/// `k^(-1-alpha)` tail, and `~2 n^alpha` replicas hold the relative noise of
/// the variance estimate roughly constant along the grid.
pub fn default_probe_replicas(measure: &LambdaMeasure, n_grid: &[u64]) -> Vec<u64> {
    n_grid
        .iter()
        .map(|&n| ((2.0 * (n as f64).powf(measure.alpha())).ceil() as u64).clamp(1_000, 100_000_000))
        .collect()
}

/// Estimate how the replica-to-replica variance of the first jump of `X_0`
/// scales with `n`, by a least-squares fit of `log variance` against
/// `log n`.
///
/// The increment over one event at `b = n` blocks is `-(k-1)/n` with `k` the
/// merger size, so its variance is essentially the second moment of the
/// size distribution over `n^2`, which scales like `n^(-alpha)`. At
/// `alpha = 3/2` this coincides with the reference exponent `alpha - 3`
/// carried in the report.
pub fn variance_scaling_probe(
    measure: &LambdaMeasure,
    n_grid: &[u64],
    replicas: &[u64],
    master_seed: u64,
) -> Result<VarianceScalingReport> {
    if measure.kind() == MeasureKind::Kingman {
        return Err(Error::Domain(
            "variance scaling probe applies to alpha in (1, 2) only".into(),
        ));
    }
    if n_grid.len() < 2 || replicas.len() != n_grid.len() {
        return Err(Error::Domain("need >= 2 grid points with matching replica counts".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return Err(Error::Domain("n grid must be strictly increasing with entries >= 2".into()));
    }
    let span = *n_grid.last().expect("non-empty") as f64 / n_grid[0] as f64;
    if span < 100.0 {
        return Err(Error::Domain(format!(
            "n grid must span at least two decades, got factor {span}"
        )));
    }
    if replicas.iter().any(|&r| r < 2) {
        return Err(Error::Domain("need >= 2 replicas per grid point".into()));
    }

    const CHUNKS: u64 = 64;
    let mut points = Vec::with_capacity(n_grid.len());
    for (idx, (&n, &reps)) in n_grid.iter().zip(replicas).enumerate() {
        let ctx = RateContext::new(measure, n)?;
        // Fixed 64-way chunking keeps results independent of worker count.
        let sums: (f64, f64, f64) = (0..CHUNKS)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = SeedStream::new(master_seed, (idx as u64) * CHUNKS + chunk).rng();
                let lo = reps * chunk / CHUNKS;
                let hi = reps * (chunk + 1) / CHUNKS;
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                let mut s4 = 0.0;
                for _ in lo..hi {
                    let u: f64 = rng.random();
                    let k = ctx.sample_size(n, u).expect("closed-form size sampling");
                    let delta = (k - 1) as f64 / n as f64;
                    s1 += delta;
                    s2 += delta * delta;
                    s4 += delta * delta * delta * delta;
                }
                (s1, s2, s4)
            })
            .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let rf = reps as f64;
        let mean = sums.0 / rf;
        let variance = (sums.1 - rf * mean * mean) / (rf - 1.0);
        // Central fourth moment, mean correction negligible for these heavy
        // tails; delta-method SE of the log variance.
        let m4 = sums.2 / rf;
        let se_var = ((m4 - variance * variance).max(0.0) / rf).sqrt();
        points.push(VariancePoint {
            n,
            replicas: reps,
            variance,
            log_n: (n as f64).ln(),
            log_variance: variance.ln(),
            se_log_variance: se_var / variance,
        });
    }

    let count = points.len() as f64;
    let x_bar = points.iter().map(|p| p.log_n).sum::<f64>() / count;
    let y_bar = points.iter().map(|p| p.log_variance).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.log_n - x_bar).powi(2)).sum();
    let slope = points
        .iter()
        .map(|p| (p.log_n - x_bar) * (p.log_variance - y_bar))
        .sum::<f64>()
        / sxx;
    let slope_se = points
        .iter()
        .map(|p| ((p.log_n - x_bar) / sxx * p.se_log_variance).powi(2))
        .sum::<f64>()
        .sqrt();
    let reference_exponent = measure.alpha() - 3.0;
    Ok(VarianceScalingReport {
        alpha: measure.alpha(),
        deviation: (slope - reference_exponent).abs(),
        points,
        slope,
        slope_se,
        reference_exponent,
    })
}
