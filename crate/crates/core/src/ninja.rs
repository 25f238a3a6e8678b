//! Transition rules of the labelled Ninja process on the unit segment
//! `[N]_0`, shared by the exact solver and the simulator.
//!
//! `k` labelled particles and one Ninja perform exclusion walks with every
//! enabled move at rate one; sites `0` and `N` absorb and hold any number of
//! particles. Labels change hands only around the Ninja:
//!
//! * Ninja in the bulk with no labelled bulk neighbour: everyone walks.
//! * Ninja in the bulk next to a labelled particle at `x`: that particle
//!   either steps away from the Ninja, or jumps over it to `x + 2d`
//!   (`d = Ninja - x`) while the Ninja moves back to `x`. The Ninja has no
//!   moves of its own.
//! * Ninja on an absorbing site `b` and a labelled particle at distance two:
//!   the particle either steps away, or is absorbed at `b` while the Ninja
//!   comes back to the site between them.
//!
//! Forgetting labels, every move is a move of the ordinary dual process.

use alloc::vec::Vec;

use crate::error::{bail_param, Result};

/// Positions of the labelled particles and of the Ninja.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NinjaState {
    pub labels: Vec<usize>,
    pub ninja: usize,
}

impl NinjaState {
    /// Validates a starting state: labels strictly increasing in the bulk,
    /// Ninja anywhere in `0..=N` off the labels, and no labelled particle
    /// next to a Ninja sitting on an absorbing site.
    pub fn new(big_n: usize, labels: Vec<usize>, ninja: usize) -> Result<Self> {
        if big_n < 2 {
            bail_param!("need N >= 2, got {big_n}");
        }
        for w in labels.windows(2) {
            if w[0] >= w[1] {
                bail_param!("labelled sites must be strictly increasing");
            }
        }
        if let Some(&x) = labels.iter().find(|&&x| x == 0 || x >= big_n) {
            bail_param!("labelled site {x} outside the bulk 1..={}", big_n - 1);
        }
        if ninja > big_n {
            bail_param!("ninja site {ninja} outside 0..={big_n}");
        }
        if labels.contains(&ninja) {
            bail_param!("ninja site {ninja} coincides with a labelled particle");
        }
        if (ninja == big_n && labels.contains(&(big_n - 1))) || (ninja == 0 && labels.contains(&1)) {
            bail_param!("a labelled particle may not start next to a ninja on an absorbing site");
        }
        Ok(Self { labels, ninja })
    }

    pub fn is_terminal(&self, big_n: usize) -> bool {
        let abs = |z: usize| z == 0 || z == big_n;
        abs(self.ninja) && self.labels.iter().all(|&x| abs(x))
    }

    /// All states reachable in one move; each move has rate one.
    pub fn moves(&self, big_n: usize) -> Vec<NinjaState> {
        let abs = |z: usize| z == 0 || z == big_n;
        let free = |z: usize| abs(z) || (z != self.ninja && !self.labels.contains(&z));
        let nb = !abs(self.ninja);
        let mut out = Vec::new();
        let push = |out: &mut Vec<NinjaState>, i: usize, to: usize, ninja: usize| {
            let mut labels = self.labels.clone();
            labels[i] = to;
            out.push(NinjaState { labels, ninja });
        };
        for (i, &x) in self.labels.iter().enumerate() {
            if abs(x) {
                continue;
            }
            let dist = x.abs_diff(self.ninja);
            if nb && dist == 1 {
                let toward = self.ninja > x;
                let away = if toward { x - 1 } else { x + 1 };
                if free(away) {
                    push(&mut out, i, away, self.ninja);
                }
                let over = if toward { x + 2 } else { x - 2 };
                if free(over) {
                    push(&mut out, i, over, x);
                }
            } else if !nb && dist == 2 {
                let toward = self.ninja > x;
                let away = if toward { x - 1 } else { x + 1 };
                if free(away) {
                    push(&mut out, i, away, self.ninja);
                }
                let between = if toward { x + 1 } else { x - 1 };
                push(&mut out, i, self.ninja, between);
            } else {
                for z in [x - 1, x + 1] {
                    if free(z) {
                        push(&mut out, i, z, self.ninja);
                    }
                }
            }
        }
        if nb {
            let y = self.ninja;
            let blocked = self.labels.iter().any(|&x| !abs(x) && x.abs_diff(y) == 1);
            if !blocked {
                for z in [y - 1, y + 1] {
                    out.push(NinjaState { labels: self.labels.clone(), ninja: z });
                }
            }
        }
        out
    }

    /// Unlabelled occupation `(absorbed at 0, bulk mask, absorbed at N)` of
    /// all `k + 1` particles.
    pub fn configuration(&self, big_n: usize) -> (u32, u64, u32) {
        let mut c = (0u32, 0u64, 0u32);
        for &z in self.labels.iter().chain(core::iter::once(&self.ninja)) {
            if z == 0 {
                c.0 += 1;
            } else if z == big_n {
                c.2 += 1;
            } else {
                c.1 |= 1 << (z - 1);
            }
        }
        c
    }

    /// Labelled positions seen on `[N-1]_0`: `x - 1{ninja < x}`, with a label
    /// sharing site `N` with the Ninja sent to `N - 1`.
    pub fn projected(&self, big_n: usize) -> Vec<usize> {
        self.labels.iter().map(|&x| project(big_n, x, self.ninja)).collect()
    }
}

/// `x - 1{ninja < x}`, and `N - 1` when both sit at `N`.
pub fn project(big_n: usize, x: usize, ninja: usize) -> usize {
    if x == big_n && ninja == big_n {
        big_n - 1
    } else if ninja < x {
        x - 1
    } else {
        x
    }
}

/// `P(Ninja ends at 0 | every label ends at N)` predicted for a start state:
/// `(N - ninja + #{labels left of the ninja}) / N`.
pub fn conditional_return_probability(big_n: usize, start: &NinjaState) -> f64 {
    let below = start.labels.iter().filter(|&&x| x < start.ninja).count();
    (big_n + below - start.ninja) as f64 / big_n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(labels: &[usize], ninja: usize) -> NinjaState {
        NinjaState { labels: labels.to_vec(), ninja }
    }

    #[test]
    fn forbidden_starts() {
        assert!(NinjaState::new(5, alloc::vec![4], 5).is_err());
        assert!(NinjaState::new(5, alloc::vec![1], 0).is_err());
        assert!(NinjaState::new(5, alloc::vec![2], 2).is_err());
        assert!(NinjaState::new(5, alloc::vec![3, 2], 4).is_err());
        assert!(NinjaState::new(5, alloc::vec![3], 5).is_ok());
    }

    #[test]
    fn lone_ninja_walks() {
        let m = st(&[1], 4).moves(6);
        assert!(m.contains(&st(&[1], 3)) && m.contains(&st(&[1], 5)));
        assert!(m.contains(&st(&[0], 4)) && m.contains(&st(&[2], 4)));
        assert_eq!(m.len(), 4);
    }

    #[test]
    fn jump_over_and_step_away() {
        let m = st(&[2], 3).moves(6);
        assert_eq!(m.len(), 2);
        assert!(m.contains(&st(&[1], 3)));
        assert!(m.contains(&st(&[4], 2)));
        // sandwiched ninja cannot move, nobody jumps over
        let m = st(&[2, 4], 3).moves(6);
        assert!(m.contains(&st(&[1, 4], 3)) && m.contains(&st(&[2, 5], 3)));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn return_from_the_boundary() {
        let m = st(&[3], 5).moves(5);
        assert!(m.contains(&st(&[2], 5)));
        assert!(m.contains(&st(&[5], 4)));
        assert_eq!(m.len(), 2);
        let m = st(&[2], 0).moves(5);
        assert!(m.contains(&st(&[3], 0)) && m.contains(&st(&[0], 1)));
    }

    #[test]
    fn moves_preserve_unlabelled_dynamics() {
        // each labelled move changes the unlabelled configuration by one hop
        let n = 6;
        let s = st(&[2, 4], 3);
        for t in s.moves(n) {
            let (a, b) = (s.configuration(n), t.configuration(n));
            let moved = (a.1 ^ b.1).count_ones() + a.0.abs_diff(b.0) + a.2.abs_diff(b.2);
            assert!(moved == 1 || moved == 2);
        }
    }

    #[test]
    fn projection() {
        assert_eq!(project(5, 3, 2), 2);
        assert_eq!(project(5, 3, 4), 3);
        assert_eq!(project(5, 5, 5), 4);
        assert_eq!(project(5, 5, 0), 4);
        assert_eq!(project(5, 0, 0), 0);
        assert_eq!(conditional_return_probability(4, &st(&[1], 3)), 0.5);
    }
}
