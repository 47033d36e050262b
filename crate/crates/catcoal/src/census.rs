//! Exact continuous-time simulation of the coalescent restricted to `n`
//! individuals, tracking the caterpillar census instead of the full
//! partition.
//!
//! The engine keeps only category counts: how many alive blocks are
//! `l`-caterpillars for each `l <= r_max`, and how many are anything else.
//! Chosen blocks are exchangeable, so the composition of a `k`-merger is an
//! exact multivariate hypergeometric sample over those categories, and a
//! per-event cost of O(r_max) replaces the O(n) partition bookkeeping.
//!
//! A new block is a caterpillar exactly when a pairwise merger joins a
//! singleton to an `l`-caterpillar (two singletons form a 2-caterpillar).
//! Caterpillars that outgrow `r_max` are reclassified as plain blocks; this
//! is lossless for every reported statistic, since such a block can only
//! ever produce caterpillars larger than `r_max`.
//!
//! RNG consumption order per event is fixed: (1) one uniform for the holding
//! time, (2) one uniform for the merger size, (3) the composition draws.
//! Draws (2) and (3) are computed from unit-scale rates, so rescaling the
//! measure changes only the holding times: the jump chain, and with it every
//! caterpillar count, is bit-for-bit invariant under time changes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{LambdaMeasure, MeasureKind};
use crate::rates::TotalRates;

/// Live caterpillar counts of a partially coalesced sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CaterpillarCensus {
    n: u64,
    r_max: u32,
    /// `counts[l]` = alive `l`-caterpillar blocks, `l = 1..=r_max`
    /// (`counts[1]` = singletons). Index 0 unused.
    counts: Vec<u64>,
    /// Alive blocks that are not tracked caterpillars.
    other_blocks: u64,
    /// `cumulative[r]` = `r`-caterpillars seen up to now, `r = 2..=r_max`.
    /// Index 0 unused; index 1 fixed at `n` (every individual starts as a
    /// 1-caterpillar).
    cumulative: Vec<u64>,
    /// Elapsed unscaled time.
    coalescent_time: f64,
}

impl CaterpillarCensus {
    /// Fresh sample of `n` singletons tracking caterpillars up to `r_max`.
    pub fn new(n: u64, r_max: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sample size n must be >= 2, got {n}")));
        }
        if r_max < 2 || r_max as u64 > n {
            return Err(Error::Domain(format!(
                "r_max must lie in [2, n]={n}, got {r_max}"
            )));
        }
        let mut counts = vec![0; r_max as usize + 1];
        counts[1] = n;
        let mut cumulative = vec![0; r_max as usize + 1];
        cumulative[1] = n;
        Ok(Self { n, r_max, counts, other_blocks: 0, cumulative, coalescent_time: 0.0 })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        n: u64,
        r_max: u32,
        counts: Vec<u64>,
        other_blocks: u64,
    ) -> Result<Self> {
        let mut census = Self::new(n, r_max)?;
        let sized: u64 = counts.iter().enumerate().map(|(l, &c)| l as u64 * c).sum();
        if counts.len() != r_max as usize + 1 || counts[0] != 0 || sized + other_blocks > n {
            return Err(Error::Domain(format!("infeasible census state {counts:?}")));
        }
        census.counts = counts;
        census.other_blocks = other_blocks;
        Ok(census)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    /// Number of alive blocks.
    pub fn block_total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.other_blocks
    }

    /// Alive `l`-caterpillar blocks, `l = 1..=r_max`.
    pub fn count(&self, l: u32) -> u64 {
        self.counts[l as usize]
    }

    pub fn other_blocks(&self) -> u64 {
        self.other_blocks
    }

    /// `r`-caterpillars seen up to now (`r = 1` is the constant `n`).
    pub fn cumulative(&self, r: u32) -> u64 {
        self.cumulative[r as usize]
    }

    pub fn coalescent_time(&self) -> f64 {
        self.coalescent_time
    }

    /// `(X_0, ..., X_{r_max})`: alive block count and per-size caterpillar
    /// counts, each divided by `n`.
    pub fn scaled_state(&self) -> Vec<f64> {
        let n = self.n as f64;
        let mut state = Vec::with_capacity(self.r_max as usize + 1);
        state.push(self.block_total() as f64 / n);
        for l in 1..=self.r_max {
            state.push(self.counts[l as usize] as f64 / n);
        }
        state
    }
}

/// Outcome of one sampled merger.
#[derive(Debug, Clone, PartialEq)]
pub struct MergerEvent {
    /// Exponential waiting time at the total rate `lambda_b`.
    pub holding_time: f64,
    /// Number of blocks merging.
    pub k: u64,
    /// `composition[l]` = chosen `l`-caterpillars for `l = 1..=r_max`
    /// (index 0 unused).
    pub composition: Vec<u64>,
    /// Chosen untracked blocks.
    pub other_chosen: u64,
    /// Size of the caterpillar the merger creates, when it creates one that
    /// is still trackable (`<= r_max`).
    pub created: Option<u32>,
}

/// Shared per-(measure, n) sampling state: the exact total-rate and
/// pairwise-rate recursions at unit scale. Immutable after construction.
#[derive(Debug, Clone)]
pub struct RateContext {
    measure: LambdaMeasure,
    totals: TotalRates,
}

impl RateContext {
    pub fn new(measure: &LambdaMeasure, n_max: u64) -> Result<Self> {
        Ok(Self { measure: measure.clone(), totals: TotalRates::build(measure, n_max)? })
    }

    pub fn measure(&self) -> &LambdaMeasure {
        &self.measure
    }

    pub fn totals(&self) -> &TotalRates {
        &self.totals
    }

    /// Map the uniform `u` through the CDF of the merger-size distribution
    /// at block count `b`, walking block rates by their exact ratio
    /// recurrence. Unit scale throughout: the result does not depend on the
    /// measure's scale.
    pub fn sample_size(&self, b: u64, u: f64) -> Result<u64> {
        debug_assert!(b >= 2);
        match self.measure.kind() {
            MeasureKind::Kingman => Ok(2),
            MeasureKind::Beta => {
                let alpha = self.measure.alpha();
                let target = u * self.totals.total_rate_unit(b);
                let bf = b as f64;
                let mut term = bf * (bf - 1.0) / 2.0 * self.totals.lambda_b2_unit(b);
                let mut cum = term;
                let mut k = 2u64;
                while cum < target && k < b {
                    let kf = k as f64;
                    term *= (bf - kf) / (kf + 1.0) * ((kf - alpha) / (bf - kf - 1.0 + alpha));
                    cum += term;
                    k += 1;
                }
                Ok(k)
            }
            MeasureKind::GeneralDensity => {
                let target = u * self.totals.total_rate_unit(b);
                let unit = self.measure.with_scale(1.0)?;
                let table = crate::rates::build_rate_table(&unit, b, 0.0)?;
                let mut cum = 0.0;
                for (i, log_rate) in table.log_block_rates.iter().enumerate() {
                    cum += log_rate.exp();
                    if cum >= target {
                        return Ok(i as u64 + 2);
                    }
                }
                Ok(b)
            }
        }
    }
}

/// Draw the next merger. Needs `block_total >= 2`.
pub fn sample_event<R: Rng>(
    census: &CaterpillarCensus,
    ctx: &RateContext,
    rng: &mut R,
) -> Result<MergerEvent> {
    let b = census.block_total();
    if b < 2 {
        return Err(Error::TerminalState);
    }

    // (1) Holding time: the scale enters here and only here.
    let rate = ctx.totals.total_rate_unit(b) * ctx.measure.scale();
    let u1: f64 = rng.random();
    let holding_time = -(1.0 - u1).ln() / rate;

    // (2) Merger size. The uniform is always consumed, including the Kingman
    // case where k = 2 is forced, so streams stay aligned across kinds.
    let u2: f64 = rng.random();
    let k = ctx.sample_size(b, u2)?;

    // (3) Composition: the k blocks are drawn one at a time without
    // replacement, each pick choosing a category with probability
    // proportional to its remaining block count — exactly a multivariate
    // hypergeometric sample, one uniform per chosen block. Total work over a
    // whole run is O(n), since merger sizes sum to at most 2(n-1).
    let mut composition = vec![0u64; census.r_max as usize + 1];
    let mut other_chosen = 0u64;
    let mut remaining = census.counts.clone();
    let mut remaining_other = census.other_blocks;
    let mut pop_left = b;
    for _ in 0..k {
        let u: f64 = rng.random();
        let mut target = u * pop_left as f64;
        let mut picked = None;
        for (l, m) in remaining.iter_mut().enumerate().skip(1) {
            target -= *m as f64;
            if target < 0.0 {
                *m -= 1;
                composition[l] += 1;
                picked = Some(l);
                break;
            }
        }
        if picked.is_none() {
            // Rounding at the upper CDF edge also lands here.
            if remaining_other > 0 {
                remaining_other -= 1;
                other_chosen += 1;
            } else if let Some(l) =
                (1..remaining.len()).rev().find(|&l| remaining[l] > 0)
            {
                remaining[l] -= 1;
                composition[l] += 1;
            } else {
                return Err(Error::Inconsistency(
                    "composition pick ran past every category".into(),
                ));
            }
        }
        pop_left -= 1;
    }

    let created = classify(census.r_max, k, &composition, other_chosen);
    Ok(MergerEvent { holding_time, k, composition, other_chosen, created })
}

/// The caterpillar creation rule: a pairwise merger of a singleton with an
/// `l`-caterpillar yields an `(l+1)`-caterpillar (two singletons a
/// 2-caterpillar). Returns `None` when the result is untrackable.
fn classify(r_max: u32, k: u64, composition: &[u64], _other: u64) -> Option<u32> {
    if k != 2 {
        return None;
    }
    if composition[1] == 2 {
        return Some(2);
    }
    if composition[1] == 1 {
        for l in 2..=r_max as usize {
            if composition[l] == 1 {
                let created = l as u32 + 1;
                return (created <= r_max).then_some(created);
            }
        }
    }
    None
}

/// Apply a sampled merger to the census.
pub fn apply_merger(census: &mut CaterpillarCensus, event: &MergerEvent) -> Result<()> {
    let feasible = event.composition.len() == census.counts.len()
        && event.composition[0] == 0
        && event
            .composition
            .iter()
            .zip(&census.counts)
            .all(|(chosen, have)| chosen <= have)
        && event.other_chosen <= census.other_blocks
        && event.composition.iter().sum::<u64>() + event.other_chosen == event.k
        && event.k >= 2;
    if !feasible {
        return Err(Error::Inconsistency(format!(
            "composition {:?}+{} infeasible against counts {:?}+{}",
            event.composition, event.other_chosen, census.counts, census.other_blocks
        )));
    }
    for (have, chosen) in census.counts.iter_mut().zip(&event.composition) {
        *have -= chosen;
    }
    census.other_blocks -= event.other_chosen;
    match event.created {
        Some(r) => {
            census.counts[r as usize] += 1;
            census.cumulative[r as usize] += 1;
        }
        None => census.other_blocks += 1,
    }
    census.coalescent_time += event.holding_time;
    Ok(())
}

/// Identification of one replica's RNG stream: the ChaCha8 generator seeded
/// by `master` on stream `replica`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    pub master: u64,
    pub replica: u64,
}

impl SeedStream {
    pub fn new(master: u64, replica: u64) -> Self {
        Self { master, replica }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.replica);
        rng
    }
}

/// Result of a full coalescence: the cumulative caterpillar counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTotals {
    /// `cumulative[r]` = `xi_r`, the number of `r`-caterpillars ever seen,
    /// for `r = 2..=r_max`; `cumulative[1] = n`, index 0 unused.
    pub cumulative: Vec<u64>,
    pub events: u64,
    pub final_time: f64,
}

/// Run the coalescent to a single block; returns the total caterpillar
/// counts. Deterministic in `(measure, n, r_max, seed)`.
pub fn run_totals(
    n: u64,
    measure: &LambdaMeasure,
    r_max: u32,
    seed: SeedStream,
) -> Result<RunTotals> {
    run_totals_with(&RateContext::new(measure, n)?, n, r_max, seed)
}

/// As [`run_totals`], with a shared pre-built [`RateContext`].
pub fn run_totals_with(
    ctx: &RateContext,
    n: u64,
    r_max: u32,
    seed: SeedStream,
) -> Result<RunTotals> {
    let mut census = CaterpillarCensus::new(n, r_max)?;
    let mut rng = seed.rng();
    let mut events = 0;
    while census.block_total() > 1 {
        let event = sample_event(&census, ctx, &mut rng)?;
        apply_merger(&mut census, &event)?;
        events += 1;
    }
    Ok(RunTotals {
        cumulative: census.cumulative.clone(),
        events,
        final_time: census.coalescent_time,
    })
}

/// Unscaled time corresponding to one unit of rescaled time for a sample of
/// size `n`: the rescaled process `X_r(t)` reads the coalescent at
/// `t * time_scale`.
///
/// For `alpha` in (1, 2) the total merger rate at `b ~ nx` blocks grows like
/// `A Gamma(2-alpha) n^alpha x^alpha / alpha`, giving the classical
/// `t * alpha / (A Gamma(2-alpha) n^(alpha-1))` change of time (`A` is the
/// regular-variation constant of the scaled measure). In the Kingman case
/// pairs merge at rate `scale * b(b-1)/2 ~ scale * n^2 x^2 / 2`, so matching
/// the limit drift `-x^2` per unit rescaled time forces `2t/(scale * n)`.
pub fn time_scale(measure: &LambdaMeasure, n: u64) -> f64 {
    let nf = n as f64;
    match measure.kind() {
        MeasureKind::Kingman => 2.0 / (measure.scale() * nf),
        _ => {
            let alpha = measure.alpha();
            let a = measure.a_lambda().expect("non-Kingman measure has a density constant");
            let gamma = statrs::function::gamma::ln_gamma(2.0 - alpha).exp();
            alpha / (a * gamma * nf.powf(alpha - 1.0))
        }
    }
}

/// One replica's trajectory snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Rescaled grid times, as requested.
    pub grid: Vec<f64>,
    /// `states[i]` = `(X_0, ..., X_{r_max})` at `grid[i]`.
    pub states: Vec<Vec<f64>>,
}

/// Run the coalescent and snapshot the scaled state `(X_0, ..., X_{r_max})`
/// at each rescaled grid time. The event loop and RNG consumption are
/// identical to [`run_totals_with`].
pub fn run_trajectory_with(
    ctx: &RateContext,
    n: u64,
    r_max: u32,
    grid: &[f64],
    seed: SeedStream,
) -> Result<Trajectory> {
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Domain(format!(
            "time grid must be nonnegative and strictly increasing: {grid:?}"
        )));
    }
    let scale = time_scale(ctx.measure(), n);
    let raw_grid: Vec<f64> = grid.iter().map(|t| t * scale).collect();

    let mut census = CaterpillarCensus::new(n, r_max)?;
    let mut rng = seed.rng();
    let mut states = Vec::with_capacity(grid.len());
    let mut next = 0;

    while census.block_total() > 1 && next < raw_grid.len() {
        let event = sample_event(&census, ctx, &mut rng)?;
        let event_time = census.coalescent_time() + event.holding_time;
        while next < raw_grid.len() && raw_grid[next] < event_time {
            states.push(census.scaled_state());
            next += 1;
        }
        apply_merger(&mut census, &event)?;
    }
    while next < raw_grid.len() {
        states.push(census.scaled_state());
        next += 1;
    }
    Ok(Trajectory { grid: grid.to_vec(), states })
}

/// Convenience wrapper building its own [`RateContext`].
pub fn run_trajectory(
    n: u64,
    measure: &LambdaMeasure,
    r_max: u32,
    grid: &[f64],
    seed: SeedStream,
) -> Result<Trajectory> {
    run_trajectory_with(&RateContext::new(measure, n)?, n, r_max, grid, seed)
}
