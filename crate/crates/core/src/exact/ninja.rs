//! Exact absorption law of the Ninja process by enumeration of its
//! reachable states and a dense solve of the jump chain.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail_capacity, Result};
use crate::exact::{absorption_distribution, all_absorbed_at_n};
use crate::lattice::{homogeneous_segment, SiteSet};
use crate::linalg::Dense;
use crate::ninja::{conditional_return_probability, NinjaState};

/// Largest number of transient states handled by the dense solve.
pub const NINJA_STATE_CAP: usize = 4096;

/// Distribution of the terminal state of a Ninja run.
#[derive(Debug, Clone, PartialEq)]
pub struct NinjaLaw {
    pub big_n: usize,
    pub start: NinjaState,
    pub outcomes: Vec<(NinjaState, f64)>,
}

impl NinjaLaw {
    pub fn probability(&self, mut event: impl FnMut(&NinjaState) -> bool) -> f64 {
        self.outcomes.iter().filter(|(s, _)| event(s)).map(|(_, p)| p).sum()
    }

    /// `P(E)`, every label absorbed at `N`.
    pub fn all_labels_at_n(&self) -> f64 {
        let n = self.big_n;
        self.probability(|s| s.labels.iter().all(|&x| x == n))
    }

    /// `P(Ninja ends at 0 | E)`.
    pub fn ninja_at_zero_given_labels_at_n(&self) -> f64 {
        let n = self.big_n;
        self.probability(|s| s.ninja == 0 && s.labels.iter().all(|&x| x == n)) / self.all_labels_at_n()
    }

    /// Law of the number of particles, Ninja included, ending at `N`.
    pub fn unlabelled_levels(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.start.labels.len() + 2];
        for (s, p) in &self.outcomes {
            out[s.configuration(self.big_n).2 as usize] += p;
        }
        out
    }
}

/// Solves the jump chain of the Ninja process started from `start`.
pub fn ninja_absorption_law(big_n: usize, start: &NinjaState) -> Result<NinjaLaw> {
    let start = NinjaState::new(big_n, start.labels.clone(), start.ninja)?;
    let mut index: BTreeMap<NinjaState, usize> = BTreeMap::new();
    let mut states = vec![start.clone()];
    index.insert(start.clone(), 0);
    let mut moves: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        let mut row = Vec::new();
        if !s.is_terminal(big_n) {
            for t in s.moves(big_n) {
                let j = *index.entry(t.clone()).or_insert_with(|| {
                    states.push(t);
                    states.len() - 1
                });
                row.push(j);
            }
        }
        moves.push(row);
        i += 1;
        if states.len() > 4 * NINJA_STATE_CAP {
            bail_capacity!("ninja chain exceeds {} states", 4 * NINJA_STATE_CAP);
        }
    }
    let transient: Vec<usize> = (0..states.len()).filter(|&i| !states[i].is_terminal(big_n)).collect();
    let terminal: Vec<usize> = (0..states.len()).filter(|&i| states[i].is_terminal(big_n)).collect();
    if start.is_terminal(big_n) {
        return Ok(NinjaLaw { big_n, start: start.clone(), outcomes: vec![(start, 1.0)] });
    }
    if transient.len() > NINJA_STATE_CAP {
        bail_capacity!("{} transient ninja states exceed the cap of {NINJA_STATE_CAP}", transient.len());
    }
    let mut t_rank = vec![usize::MAX; states.len()];
    for (r, &i) in transient.iter().enumerate() {
        t_rank[i] = r;
    }
    let mut a_rank = vec![usize::MAX; states.len()];
    for (r, &i) in terminal.iter().enumerate() {
        a_rank[i] = r;
    }
    let dim = transient.len();
    let mut a = Dense::zeros(dim);
    let mut rhs = vec![vec![0.0; dim]; terminal.len()];
    for (r, &i) in transient.iter().enumerate() {
        a.add(r, r, 1.0);
        let p = 1.0 / moves[i].len() as f64;
        for &j in &moves[i] {
            if t_rank[j] != usize::MAX {
                a.add(r, t_rank[j], -p);
            } else {
                rhs[a_rank[j]][r] += p;
            }
        }
    }
    let lu = a.lu()?;
    let outcomes = terminal
        .iter()
        .zip(&rhs)
        .map(|(&i, b)| (states[i].clone(), lu.solve(b)[0]))
        .filter(|(_, p)| *p != 0.0)
        .collect();
    Ok(NinjaLaw { big_n, start, outcomes })
}

/// Distances between the Ninja law and the ordinary dual processes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NinjaCouplingResiduals {
    /// Unlabelled level law vs the dual process on `[N]_0`.
    pub unlabelled: f64,
    /// `P(E)` vs all-at-`(N-1)` for the projected start on `[N-1]_0`.
    pub projected: f64,
    /// `P(Ninja_inf = 0 | E)` vs `(N - ninja + #{labels below}) / N`.
    pub conditional: f64,
}

impl NinjaCouplingResiduals {
    pub fn max(&self) -> f64 {
        self.unlabelled.max(self.projected).max(self.conditional)
    }
}

/// Compares the exact Ninja law from `start` with the three identities it
/// is built to satisfy.
pub fn check_ninja_coupling(big_n: usize, start: &NinjaState) -> Result<NinjaCouplingResiduals> {
    let law = ninja_absorption_law(big_n, start)?;
    let k = start.labels.len();

    let bulk: Vec<usize> = {
        let mut v = start.labels.clone();
        if start.ninja != 0 && start.ninja != big_n {
            v.push(start.ninja);
            v.sort_unstable();
        }
        v
    };
    let g = homogeneous_segment(big_n - 1, 1.0, 1.0, 0.5, 0.5)?;
    let dual = absorption_distribution(&g, &SiteSet::new(bulk, big_n - 1)?)?;
    let shift = usize::from(start.ninja == big_n);
    let mut expected = vec![0.0; k + 2];
    for (l, p) in dual.probs.iter().enumerate() {
        expected[l + shift] += p;
    }
    let unlabelled = law
        .unlabelled_levels()
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let reduced = if k == 0 {
        1.0
    } else {
        let g = homogeneous_segment(big_n - 2, 1.0, 1.0, 0.5, 0.5)?;
        all_absorbed_at_n(&g, &SiteSet::new(start.projected(big_n), big_n - 2)?)?
    };
    let projected = (law.all_labels_at_n() - reduced).abs();

    let conditional = if law.all_labels_at_n() > 0.0 {
        (law.ninja_at_zero_given_labels_at_n() - conditional_return_probability(big_n, start)).abs()
    } else {
        0.0
    };
    Ok(NinjaCouplingResiduals { unlabelled, projected, conditional })
}

/// Every valid start with `k` labels on `[N]_0`; with `ninja_on_top` only the
/// Ninja sites above all labels are used.
pub fn ninja_starts(big_n: usize, k: usize, ninja_on_top: bool) -> Vec<NinjaState> {
    let mut out = Vec::new();
    for mask in 0u64..1 << (big_n - 1) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let labels = SiteSet::from_mask(mask).sites().to_vec();
        let lo = if ninja_on_top { labels.last().map_or(0, |&x| x + 1) } else { 0 };
        for ninja in lo..=big_n {
            if let Ok(s) = NinjaState::new(big_n, labels.clone(), ninja) {
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_example() {
        let law = ninja_absorption_law(4, &NinjaState::new(4, vec![1], 3).unwrap()).unwrap();
        let total: f64 = law.outcomes.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((law.ninja_at_zero_given_labels_at_n() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coupling_identities_small() {
        for n in 2..=5 {
            for k in 0..=2 {
                for s in ninja_starts(n, k, false) {
                    let r = check_ninja_coupling(n, &s).unwrap();
                    assert!(r.max() < 1e-12, "N={n} {s:?}: {r:?}");
                }
            }
        }
    }
}
