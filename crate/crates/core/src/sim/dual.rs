use alloc::vec;
use alloc::vec::Vec;

use super::events::{EventKind, EventSink, EVENT_CAP};
use super::rng::{RngStream, SimRng};
use super::sampler::RateTree;
use crate::error::{Error, Result};
use crate::lattice::{DualState, GraphSpec, SiteSet, MAX_SIM_SITES};

/// End state of a dual run together with its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualRun {
    pub state: DualState,
    pub events: u64,
    pub time: f64,
}

fn check(g: &GraphSpec, start: &SiteSet) -> Result<()> {
    g.require_valid()?;
    if g.n_sites > MAX_SIM_SITES {
        return Err(Error::Capacity(alloc::format!("simulation limited to {MAX_SIM_SITES} sites")));
    }
    SiteSet::new(start.sites().to_vec(), g.n_sites)?;
    Ok(())
}

/// Runs the absorbing dual from `start` until every particle is absorbed.
pub fn simulate_dual(g: &GraphSpec, start: &SiteSet, stream: &RngStream) -> Result<DualState> {
    Ok(simulate_dual_logged(g, start, &mut stream.rng(), &mut ())?.state)
}

/// [`simulate_dual`] on a caller-owned generator, reporting every event.
pub fn simulate_dual_logged(
    g: &GraphSpec,
    start: &SiteSet,
    rng: &mut SimRng,
    sink: &mut impl EventSink,
) -> Result<DualRun> {
    check(g, start)?;
    let n = g.n_sites;
    let m = g.edges.len();
    let (left, right) = (m, m + 1);
    let right_bit = 1u64 << (n - 1);
    let mut site_edges = vec![Vec::new(); n + 1];
    for (i, e) in g.edges.iter().enumerate() {
        site_edges[e.x].push(i);
        site_edges[e.y].push(i);
    }
    let rate = |c: usize, s: u64| -> f64 {
        if c == left {
            if s & 1 != 0 { g.omega_left } else { 0.0 }
        } else if c == right {
            if s & right_bit != 0 { g.omega_right } else { 0.0 }
        } else {
            let e = &g.edges[c];
            if (s >> (e.x - 1) & 1) != (s >> (e.y - 1) & 1) { e.weight } else { 0.0 }
        }
    };
    let mut state = DualState::from_sites(start);
    let mut tree = RateTree::new(m + 2);
    for c in 0..m + 2 {
        tree.set(c, rate(c, state.bulk));
    }
    let refresh = |tree: &mut RateTree, x: usize, s: u64| {
        for &c in &site_edges[x] {
            tree.set(c, rate(c, s));
        }
        tree.set(left, rate(left, s));
        tree.set(right, rate(right, s));
    };
    let (mut t, mut events) = (0.0, 0u64);
    while state.bulk != 0 {
        let total = tree.total();
        t += rng.exponential(total);
        let c = tree.sample(total, rng);
        if c == left {
            state.bulk ^= 1;
            state.absorbed_0 += 1;
            sink.record(t, EventKind::Absorb, 1, 0);
            refresh(&mut tree, 1, state.bulk);
        } else if c == right {
            state.bulk ^= right_bit;
            state.absorbed_n += 1;
            sink.record(t, EventKind::Absorb, n, n + 1);
            refresh(&mut tree, n, state.bulk);
        } else {
            let e = &g.edges[c];
            let (from, to) = if state.bulk >> (e.x - 1) & 1 == 1 { (e.x, e.y) } else { (e.y, e.x) };
            state.bulk ^= (1 << (e.x - 1)) | (1 << (e.y - 1));
            sink.record(t, EventKind::Hop, from, to);
            refresh(&mut tree, e.x, state.bulk);
            refresh(&mut tree, e.y, state.bulk);
        }
        events += 1;
        if events >= EVENT_CAP {
            return Err(Error::EventCap { cap: EVENT_CAP, detail: alloc::format!("dual run from {:?}", start.sites()) });
        }
    }
    Ok(DualRun { state, events, time: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::homogeneous_segment;

    #[test]
    fn conserves_particles() {
        let g = homogeneous_segment(5, 0.7, 1.3, 0.5, 0.5).unwrap();
        let start = SiteSet::new(vec![1, 3, 4, 5], 5).unwrap();
        for i in 0..200 {
            let s = simulate_dual(&g, &start, &RngStream::new(2, i)).unwrap();
            assert_eq!(s.absorbed_0 + s.absorbed_n, 4);
            assert!(s.is_absorbed());
        }
    }

    #[test]
    fn single_walker_frequency() {
        let g = homogeneous_segment(3, 1.0, 1.0, 0.5, 0.5).unwrap();
        let start = SiteSet::new(vec![1], 3).unwrap();
        let n = 20_000;
        let hits = (0..n).filter(|&i| simulate_dual(&g, &start, &RngStream::new(4, i)).unwrap().absorbed_n == 1).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * libm::sqrt(0.25 * 0.75 / n as f64));
    }

    #[test]
    fn empty_start_is_immediately_done() {
        let g = homogeneous_segment(2, 1.0, 1.0, 0.5, 0.5).unwrap();
        let s = simulate_dual(&g, &SiteSet::empty(), &RngStream::default()).unwrap();
        assert_eq!(s, DualState::default());
    }
}
