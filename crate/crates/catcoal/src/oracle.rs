//! Small-`n` brute-force engine keeping the full labelled partition.
//!
//! The oracle stores every block ever created and, per individual, the
//! sequence of sizes of the block containing it. An `r`-caterpillar is then
//! evaluated literally: a block of size `r` some member of which saw only
//! `+1` size jumps up to that block's creation. Agreement between this
//! definition and the census engine's creation rule is the central
//! correctness check of the whole toolkit.
//!
//! The oracle consumes the same rate machinery as the census engine
//! ([`RateContext`]), so a disagreement isolates the census and composition
//! logic rather than the rates.

use rand::Rng;

use crate::census::{RateContext, SeedStream};
use crate::error::{Error, Result};
use crate::measure::LambdaMeasure;

/// Largest `n` the oracle accepts; it is quadratic on purpose.
pub const ORACLE_CAP: u64 = 64;

/// One recorded merger.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEvent {
    pub time: f64,
    /// Ids of the merged blocks, ordered by least member.
    pub merged: Vec<u64>,
    pub new_block: u64,
}

/// Full partition trajectory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeHistory {
    pub n: u64,
    pub events: Vec<OracleEvent>,
    /// Members of every block ever alive, by id. Ids `0..n` are the initial
    /// singletons `{1}, ..., {n}`; merged blocks get fresh ids in order.
    pub block_members: Vec<Vec<u64>>,
    /// Per individual `i` (index `i - 1`), the sizes of the block containing
    /// `i` after each merger affecting it; starts implicitly at 1, which is
    /// stored as the first entry.
    pub leaf_paths: Vec<Vec<u64>>,
}

/// Run the coalescent on `n <= ORACLE_CAP` individuals recording everything.
pub fn run_oracle(n: u64, measure: &LambdaMeasure, seed: SeedStream) -> Result<MergeHistory> {
    run_oracle_with(&RateContext::new(measure, n.max(2))?, n, seed)
}

/// As [`run_oracle`] with a shared [`RateContext`].
pub fn run_oracle_with(ctx: &RateContext, n: u64, seed: SeedStream) -> Result<MergeHistory> {
    if n < 2 || n > ORACLE_CAP {
        return Err(Error::Domain(format!("oracle accepts n in [2, {ORACLE_CAP}], got {n}")));
    }
    let mut rng = seed.rng();
    let mut block_members: Vec<Vec<u64>> = (1..=n).map(|i| vec![i]).collect();
    let mut leaf_paths: Vec<Vec<u64>> = (0..n).map(|_| vec![1]).collect();
    // Alive block ids, kept ordered by least member.
    let mut alive: Vec<u64> = (0..n).collect();
    let mut events = Vec::with_capacity(n as usize - 1);
    let mut time = 0.0;

    while alive.len() > 1 {
        let b = alive.len() as u64;
        let rate = ctx.totals().total_rate_unit(b) * ctx.measure().scale();
        let u1: f64 = rng.random();
        time += -(1.0 - u1).ln() / rate;
        let u2: f64 = rng.random();
        let k = ctx.sample_size(b, u2)? as usize;

        // Uniform k-subset of the alive blocks, by partial Fisher-Yates over
        // positions.
        let mut positions: Vec<usize> = (0..alive.len()).collect();
        for j in 0..k {
            let pick = rng.random_range(j..positions.len());
            positions.swap(j, pick);
        }
        let mut chosen: Vec<usize> = positions[..k].to_vec();
        chosen.sort_unstable();

        let mut merged: Vec<u64> = chosen.iter().map(|&p| alive[p]).collect();
        merged.sort_unstable_by_key(|&id| block_members[id as usize][0]);
        let mut members: Vec<u64> =
            merged.iter().flat_map(|&id| block_members[id as usize].iter().copied()).collect();
        members.sort_unstable();
        let new_size = members.len() as u64;
        let new_block = block_members.len() as u64;
        for &i in &members {
            leaf_paths[i as usize - 1].push(new_size);
        }
        block_members.push(members);
        events.push(OracleEvent { time, merged, new_block });

        for &p in chosen.iter().rev() {
            alive.remove(p);
        }
        let insert_at = alive
            .partition_point(|&id| block_members[id as usize][0] < block_members[new_block as usize][0]);
        alive.insert(insert_at, new_block);
    }

    Ok(MergeHistory { n, events, block_members, leaf_paths })
}

/// Count `r`-caterpillars by the literal definition.
///
/// A block `B` with `|B| = r` is one when some member's size path up to the
/// creation of `B` consists of `+1` jumps only. Size paths are strictly
/// increasing, so that path prefix is exactly the first `r` entries of the
/// member's full path, and the condition collapses to the prefix being
/// `1, 2, ..., r`. Each block is a set and can exist over only one time
/// interval, so scanning creations counts each caterpillar once.
pub fn caterpillars_from_history(history: &MergeHistory, r: u64) -> u64 {
    if r < 2 {
        return if r == 1 { history.n } else { 0 };
    }
    history
        .events
        .iter()
        .filter(|ev| {
            let members = &history.block_members[ev.new_block as usize];
            members.len() as u64 == r
                && members.iter().any(|&i| {
                    let path = &history.leaf_paths[i as usize - 1];
                    path.len() >= r as usize
                        && path[..r as usize]
                            .iter()
                            .zip(1..=r)
                            .all(|(&size, expect)| size == expect)
                })
        })
        .count() as u64
}

/// Replay the recorded events through the census engine's creation rule:
/// label every alive block with its caterpillar size (singletons are 1,
/// non-caterpillars none), and a pairwise merger of a singleton with an
/// `l`-caterpillar creates an `(l+1)`-caterpillar.
///
/// Returns `counts[r]` = `r`-caterpillars created, for `r = 2..=n`
/// (`counts[1] = n`, index 0 unused). No `r_max` cap is applied.
pub fn census_replay_from_history(history: &MergeHistory) -> Vec<u64> {
    let mut labels: Vec<Option<u64>> = vec![Some(1); history.block_members.len()];
    let mut counts = vec![0u64; history.n as usize + 1];
    counts[1] = history.n;
    for ev in &history.events {
        let new_label = if ev.merged.len() == 2 {
            match (labels[ev.merged[0] as usize], labels[ev.merged[1] as usize]) {
                (Some(1), Some(l)) | (Some(l), Some(1)) => Some(l + 1),
                _ => None,
            }
        } else {
            None
        };
        if let Some(r) = new_label {
            counts[r as usize] += 1;
        }
        labels[ev.new_block as usize] = new_label;
    }
    counts
}

/// Line-based dump: one `EVENT` line per merger, then a `MEMBERS` section
/// listing every block ever created.
pub fn format_history(history: &MergeHistory) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for ev in &history.events {
        let ids: Vec<String> = ev.merged.iter().map(|id| id.to_string()).collect();
        writeln!(out, "EVENT {:.6} {} -> {}", ev.time, ids.join(","), ev.new_block).unwrap();
    }
    writeln!(out, "MEMBERS").unwrap();
    for (id, members) in history.block_members.iter().enumerate() {
        let m: Vec<String> = members.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{id}: {}", m.join(",")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn kingman() -> LambdaMeasure {
        LambdaMeasure::kingman(1.0).unwrap()
    }

    fn beta15() -> LambdaMeasure {
        LambdaMeasure::beta(1.5, 1.0).unwrap()
    }

    #[test]
    fn two_individuals_merge_once() {
        let h = run_oracle(2, &kingman(), SeedStream::new(1, 0)).unwrap();
        assert_eq!(h.events.len(), 1);
        assert_eq!(h.block_members[2], vec![1, 2]);
        assert_eq!(h.leaf_paths, vec![vec![1, 2], vec![1, 2]]);
    }

    #[test]
    fn three_individuals_kingman_forced_shape() {
        let h = run_oracle(3, &kingman(), SeedStream::new(5, 0)).unwrap();
        assert_eq!(h.events.len(), 2);
        assert_eq!(h.block_members.last().unwrap(), &vec![1, 2, 3]);
        assert_eq!(caterpillars_from_history(&h, 2), 1);
        assert_eq!(caterpillars_from_history(&h, 3), 1);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(run_oracle(65, &kingman(), SeedStream::new(0, 0)).is_err());
        assert!(run_oracle(1, &kingman(), SeedStream::new(0, 0)).is_err());
    }

    #[test]
    fn partitions_stay_valid() {
        // Every event preserves a partition of {1..8}; paths start at 1 and
        // strictly increase to the final block size.
        let h = run_oracle(8, &beta15(), SeedStream::new(99, 0)).unwrap();
        assert!(!h.events.is_empty() && h.events.len() <= 7);
        for path in &h.leaf_paths {
            assert_eq!(path[0], 1);
            assert!(path.windows(2).all(|w| w[1] > w[0]));
        }
        let final_block = h.block_members[h.events.last().unwrap().new_block as usize].clone();
        if final_block.len() == 8 {
            for (i, path) in h.leaf_paths.iter().enumerate() {
                assert_eq!(*path.last().unwrap() as usize, final_block.len(), "leaf {}", i + 1);
            }
        }
        for ev in &h.events {
            let times_merged: usize = h
                .events
                .iter()
                .flat_map(|e| e.merged.iter())
                .filter(|&&id| id == ev.new_block)
                .count();
            assert!(times_merged <= 1, "block merged more than once");
        }
    }

    /// The two four-leaf genealogies: a chain ({1,2}, +3, +4) versus two
    /// cherries merging.
    fn chain_history() -> MergeHistory {
        MergeHistory {
            n: 4,
            events: vec![
                OracleEvent { time: 0.1, merged: vec![0, 1], new_block: 4 },
                OracleEvent { time: 0.2, merged: vec![4, 2], new_block: 5 },
                OracleEvent { time: 0.3, merged: vec![5, 3], new_block: 6 },
            ],
            block_members: vec![
                vec![1],
                vec![2],
                vec![3],
                vec![4],
                vec![1, 2],
                vec![1, 2, 3],
                vec![1, 2, 3, 4],
            ],
            leaf_paths: vec![
                vec![1, 2, 3, 4],
                vec![1, 2, 3, 4],
                vec![1, 3, 4],
                vec![1, 4],
            ],
        }
    }

    fn double_cherry_history() -> MergeHistory {
        MergeHistory {
            n: 4,
            events: vec![
                OracleEvent { time: 0.1, merged: vec![0, 1], new_block: 4 },
                OracleEvent { time: 0.2, merged: vec![2, 3], new_block: 5 },
                OracleEvent { time: 0.3, merged: vec![4, 5], new_block: 6 },
            ],
            block_members: vec![
                vec![1],
                vec![2],
                vec![3],
                vec![4],
                vec![1, 2],
                vec![3, 4],
                vec![1, 2, 3, 4],
            ],
            leaf_paths: vec![
                vec![1, 2, 4],
                vec![1, 2, 4],
                vec![1, 2, 4],
                vec![1, 2, 4],
            ],
        }
    }

    #[test]
    fn caterpillar_definition_on_reference_histories() {
        let chain = chain_history();
        assert_eq!(caterpillars_from_history(&chain, 2), 1);
        assert_eq!(caterpillars_from_history(&chain, 3), 1);
        assert_eq!(caterpillars_from_history(&chain, 4), 1);

        let double = double_cherry_history();
        assert_eq!(caterpillars_from_history(&double, 2), 2);
        assert_eq!(caterpillars_from_history(&double, 3), 0);
        assert_eq!(caterpillars_from_history(&double, 4), 0);
    }

    #[test]
    fn replay_agrees_on_reference_histories() {
        for h in [chain_history(), double_cherry_history()] {
            let replay = census_replay_from_history(&h);
            for r in 2..=4u64 {
                assert_eq!(replay[r as usize], caterpillars_from_history(&h, r));
            }
        }
    }

    #[test]
    fn pair_caterpillars_are_singleton_pair_mergers() {
        for replica in 0..50 {
            let h = run_oracle(10, &beta15(), SeedStream::new(7, replica)).unwrap();
            let pair_events = h
                .events
                .iter()
                .filter(|ev| {
                    ev.merged.len() == 2
                        && ev.merged.iter().all(|&id| h.block_members[id as usize].len() == 1)
                })
                .count() as u64;
            assert_eq!(caterpillars_from_history(&h, 2), pair_events);
        }
    }

    #[test]
    fn definition_and_census_rule_agree_on_random_runs() {
        for measure in [kingman(), beta15()] {
            let ctx = RateContext::new(&measure, 12).unwrap();
            for n in 2..=12u64 {
                for replica in 0..300 {
                    let h = run_oracle_with(&ctx, n, SeedStream::new(1000 + n, replica)).unwrap();
                    let replay = census_replay_from_history(&h);
                    for r in 2..=n {
                        assert_eq!(
                            replay[r as usize],
                            caterpillars_from_history(&h, r),
                            "n={n} replica={replica} r={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn counts_ignore_time_rescaling() {
        // Scaling the measure rescales every event time but nothing else.
        let a = run_oracle(12, &beta15(), SeedStream::new(4, 2)).unwrap();
        let b = run_oracle(12, &beta15().with_scale(5.0).unwrap(), SeedStream::new(4, 2)).unwrap();
        assert_eq!(a.block_members, b.block_members);
        for r in 2..=12 {
            assert_eq!(caterpillars_from_history(&a, r), caterpillars_from_history(&b, r));
        }
        assert!(a.events.iter().zip(&b.events).all(|(x, y)| x.time > y.time));
    }

    #[test]
    fn history_dump_round_shape() {
        let h = chain_history();
        let dump = format_history(&h);
        let expected = "EVENT 0.100000 0,1 -> 4\n\
                        EVENT 0.200000 4,2 -> 5\n\
                        EVENT 0.300000 5,3 -> 6\n\
                        MEMBERS\n\
                        0: 1\n\
                        1: 2\n\
                        2: 3\n\
                        3: 4\n\
                        4: 1,2\n\
                        5: 1,2,3\n\
                        6: 1,2,3,4\n";
        assert_eq!(dump, expected);
    }

    /// Exact law of (xi_2, ..., xi_n) for the Kingman coalescent by
    /// enumeration over all pair-merge sequences, each sequence weighted by
    /// the product of uniform pair choices.
    fn kingman_exact_law(n: usize) -> HashMap<Vec<u64>, f64> {
        // State: labels of alive blocks (Some(l) = l-caterpillar).
        let mut law = HashMap::new();
        let labels: Vec<Option<u64>> = vec![Some(1); n];
        let counts = vec![0u64; n + 1];
        recurse(&labels, &counts, 1.0, &mut law);
        fn recurse(
            labels: &[Option<u64>],
            counts: &[u64],
            prob: f64,
            law: &mut HashMap<Vec<u64>, f64>,
        ) {
            let b = labels.len();
            if b == 1 {
                *law.entry(counts[2..].to_vec()).or_default() += prob;
                return;
            }
            let pairs = (b * (b - 1) / 2) as f64;
            for i in 0..b {
                for j in i + 1..b {
                    let new_label = match (labels[i], labels[j]) {
                        (Some(1), Some(l)) | (Some(l), Some(1)) => Some(l + 1),
                        _ => None,
                    };
                    let mut next: Vec<Option<u64>> = labels
                        .iter()
                        .enumerate()
                        .filter(|&(idx, _)| idx != i && idx != j)
                        .map(|(_, &l)| l)
                        .collect();
                    next.push(new_label);
                    let mut next_counts = counts.to_vec();
                    if let Some(r) = new_label {
                        next_counts[r as usize] += 1;
                    }
                    recurse(&next, &next_counts, prob / pairs, law);
                }
            }
        }
        law
    }

    #[test]
    fn kingman_small_n_law_matches_enumeration() {
        // Total variation between the oracle's empirical law of
        // (xi_2, ..., xi_n) and exact enumeration, n <= 5 here (n = 6 in the
        // slower acceptance suite).
        for n in 3..=5usize {
            let exact = kingman_exact_law(n);
            let ctx = RateContext::new(&kingman(), n as u64).unwrap();
            let runs = 100_000u64;
            let mut empirical: HashMap<Vec<u64>, u64> = HashMap::new();
            for replica in 0..runs {
                let h = run_oracle_with(&ctx, n as u64, SeedStream::new(777, replica)).unwrap();
                let key: Vec<u64> =
                    (2..=n as u64).map(|r| caterpillars_from_history(&h, r)).collect();
                *empirical.entry(key).or_default() += 1;
            }
            let mut tv = 0.0;
            for (key, &p) in &exact {
                let q = *empirical.get(key).unwrap_or(&0) as f64 / runs as f64;
                tv += (p - q).abs();
            }
            for (key, &c) in &empirical {
                if !exact.contains_key(key) {
                    tv += c as f64 / runs as f64;
                }
            }
            tv /= 2.0;
            assert!(tv <= 0.01, "n={n}: TV = {tv}");
        }
    }

    #[test]
    fn kingman_exact_four_leaf_cherry_mean() {
        // E[xi_2] = 4/3 from the enumeration itself.
        let law = kingman_exact_law(4);
        let mean: f64 =
            law.iter().map(|(key, p)| key[0] as f64 * p).sum();
        assert!((mean - 4.0 / 3.0).abs() < 1e-12);
    }
}
