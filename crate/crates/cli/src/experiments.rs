//! Monte Carlo frequency estimates over batches of independent replicas,
//! together with the exact values they are compared against.

use sepness_core::closed_forms::{absorption_levels, Segment};
use sepness_core::exact::absorption_distribution;
use sepness_core::ninja::{conditional_return_probability, NinjaState};
use sepness_core::sim::{simulate_dual, simulate_ninja, simulate_stirring, simulate_stirring_from, Accumulator, McEstimate, RngStream};
use sepness_core::{homogeneous_segment, GraphSpec, Result, SiteSet};

use crate::parallel::map_replicas;

/// Mean and standard error of a 0/1 sample with `hits` ones out of `n`.
pub fn indicator_estimate(hits: u64, n: u64) -> Result<McEstimate> {
    let ones = Accumulator { n: hits, mean: 1.0, m2: 0.0 };
    let zeros = Accumulator { n: n - hits, mean: 0.0, m2: 0.0 };
    ones.merge(&zeros).estimate()
}

fn estimates(counts: &[u64], n: u64) -> Result<Vec<McEstimate>> {
    counts.iter().map(|&c| indicator_estimate(c, n)).collect()
}

/// Empirical law of the number of dual particles absorbed at `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrequencies {
    pub replicas: u64,
    pub counts: Vec<u64>,
    pub levels: Vec<McEstimate>,
}

pub fn dual_frequencies(g: &GraphSpec, start: &SiteSet, replicas: u64, base: &RngStream, threads: Option<usize>) -> Result<DualFrequencies> {
    let ends = map_replicas(replicas, base, threads, |s| simulate_dual(g, start, s))?;
    let mut counts = vec![0u64; start.len() + 1];
    for e in &ends {
        counts[e.absorbed_n as usize] += 1;
    }
    Ok(DualFrequencies { replicas, levels: estimates(&counts, replicas)?, counts })
}

/// Exact level law: closed form on a homogeneous segment, linear solve otherwise.
pub fn dual_reference(g: &GraphSpec, start: &SiteSet) -> Result<Vec<f64>> {
    if g.is_homogeneous_segment() {
        absorption_levels(&Segment::from_graph(g)?, start)
    } else {
        Ok(absorption_distribution(g, start)?.probs)
    }
}

/// Frequencies of the set of start sites whose particle ends at `N`, for
/// stirring runs started with every bulk site occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct StirringFrequencies {
    pub n_sites: usize,
    pub replicas: u64,
    /// Indexed by site mask.
    pub counts: Vec<u64>,
    pub weights: Vec<McEstimate>,
}

pub fn stirring_frequencies(g: &GraphSpec, replicas: u64, base: &RngStream, threads: Option<usize>) -> Result<StirringFrequencies> {
    let masks = map_replicas(replicas, base, threads, |s| Ok(simulate_stirring(g, s)?.right_mask()))?;
    let mut counts = vec![0u64; 1 << g.n_sites];
    for m in masks {
        counts[m as usize] += 1;
    }
    Ok(StirringFrequencies { n_sites: g.n_sites, replicas, weights: estimates(&counts, replicas)?, counts })
}

/// Counts of the pattern of `labels` ending at `N`; bit `j` stands for the
/// `j`-th label. With `restrict` the runs start from the full bulk and are
/// read on `labels` only, otherwise they start from `labels`.
pub fn stirring_pattern_counts(
    g: &GraphSpec,
    labels: &SiteSet,
    restrict: bool,
    replicas: u64,
    base: &RngStream,
    threads: Option<usize>,
) -> Result<Vec<u64>> {
    let patterns = map_replicas(replicas, base, threads, |s| {
        let out = if restrict {
            simulate_stirring(g, s)?
        } else {
            simulate_stirring_from(g, labels, &mut s.rng(), &mut ())?
        };
        let right = out.right_mask();
        Ok(labels.sites().iter().enumerate().filter(|(_, &x)| right >> (x - 1) & 1 == 1).fold(0usize, |p, (j, _)| p | 1 << j))
    })?;
    let mut counts = vec![0u64; 1 << labels.len()];
    for p in patterns {
        counts[p] += 1;
    }
    Ok(counts)
}

/// Outcome statistics of Ninja runs.
#[derive(Debug, Clone, PartialEq)]
pub struct NinjaFrequencies {
    pub big_n: usize,
    pub start: NinjaState,
    pub replicas: u64,
    /// Runs in which every label ended at `N`.
    pub conditioned: u64,
    pub all_labels_at_n: McEstimate,
    /// `P(Ninja ends at 0 | every label at N)`; `None` with fewer than two conditioned runs.
    pub ninja_at_zero_given: Option<McEstimate>,
    /// Counts of the number of particles, Ninja included, ending at `N`.
    pub unlabelled_counts: Vec<u64>,
}

pub fn ninja_frequencies(big_n: usize, start: &NinjaState, replicas: u64, base: &RngStream, threads: Option<usize>) -> Result<NinjaFrequencies> {
    let start = NinjaState::new(big_n, start.labels.clone(), start.ninja)?;
    let ends = map_replicas(replicas, base, threads, |s| simulate_ninja(big_n, &start, s))?;
    let mut unlabelled_counts = vec![0u64; start.labels.len() + 2];
    let (mut conditioned, mut returned) = (0u64, 0u64);
    for e in &ends {
        unlabelled_counts[e.configuration(big_n).2 as usize] += 1;
        if e.labels.iter().all(|&x| x == big_n) {
            conditioned += 1;
            returned += u64::from(e.ninja == 0);
        }
    }
    let ninja_at_zero_given = if conditioned >= 2 { Some(indicator_estimate(returned, conditioned)?) } else { None };
    Ok(NinjaFrequencies {
        big_n,
        replicas,
        conditioned,
        all_labels_at_n: indicator_estimate(conditioned, replicas)?,
        ninja_at_zero_given,
        unlabelled_counts,
        start,
    })
}

/// Predicted `P(Ninja ends at 0 | every label at N)`.
pub fn ninja_conditional_reference(big_n: usize, start: &NinjaState) -> f64 {
    conditional_return_probability(big_n, start)
}

/// Level law of the ordinary dual on `[N]_0` started from the labelled sites
/// and the Ninja site, indexed like [`NinjaFrequencies::unlabelled_counts`].
pub fn ninja_unlabelled_reference(big_n: usize, start: &NinjaState) -> Result<Vec<f64>> {
    let g = homogeneous_segment(big_n - 1, 1.0, 1.0, 0.5, 0.5)?;
    let mut bulk = start.labels.clone();
    if start.ninja != 0 && start.ninja != big_n {
        bulk.push(start.ninja);
        bulk.sort_unstable();
    }
    let law = dual_reference(&g, &SiteSet::new(bulk, g.n_sites)?)?;
    let mut out = vec![0.0; start.labels.len() + 2];
    let shift = usize::from(start.ninja == big_n);
    for (l, p) in law.into_iter().enumerate() {
        out[l + shift] += p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_matches_accumulator() {
        let direct: Accumulator = (0..100).map(|i| if i % 7 == 0 { 1.0 } else { 0.0 }).collect();
        let a = direct.estimate().unwrap();
        let b = indicator_estimate(15, 100).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-15);
        assert!((a.stderr - b.stderr).abs() < 1e-15);
        assert_eq!(indicator_estimate(0, 10).unwrap().stderr, 0.0);
    }

    #[test]
    fn unlabelled_reference_sums_to_one() {
        for start in [NinjaState::new(4, vec![1], 3).unwrap(), NinjaState::new(4, vec![2], 4).unwrap(), NinjaState::new(4, vec![3], 0).unwrap()] {
            let r = ninja_unlabelled_reference(4, &start).unwrap();
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // Ninja already at N counts as one particle there
        assert_eq!(ninja_unlabelled_reference(4, &NinjaState::new(4, vec![2], 4).unwrap()).unwrap()[0], 0.0);
    }

    #[test]
    fn small_dual_run_is_reproducible() {
        let g = homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8).unwrap();
        let start = SiteSet::new(vec![2], 3).unwrap();
        let a = dual_frequencies(&g, &start, 2000, &RngStream::new(5, 0), Some(1)).unwrap();
        let b = dual_frequencies(&g, &start, 2000, &RngStream::new(5, 0), Some(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.levels[1].within(0.5, 4.0));
    }

    #[test]
    fn doubling_replicas_shrinks_error_bars() {
        let g = homogeneous_segment(4, 0.5, 2.0, 0.2, 0.8).unwrap();
        let start = SiteSet::new(vec![2, 3], 4).unwrap();
        let small = dual_frequencies(&g, &start, 20_000, &RngStream::new(9, 0), None).unwrap();
        let large = dual_frequencies(&g, &start, 40_000, &RngStream::new(9, 1 << 32), None).unwrap();
        for (a, b) in small.levels.iter().zip(&large.levels) {
            let ratio = b.stderr / a.stderr;
            assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
        }
    }
}
