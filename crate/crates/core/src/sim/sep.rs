use alloc::vec;
use alloc::vec::Vec;

use super::estimate::{Accumulator, McEstimate};
use super::events::{EventKind, EventSink, EVENT_CAP};
use super::rng::RngStream;
use super::sampler::RateTree;
use crate::error::{bail_param, Error, Result};
use crate::lattice::{GraphSpec, OccupancyConfig, SiteSet, MAX_SIM_SITES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepOptions {
    /// Discarded initial time; `None` means `t_max / 5`.
    pub burn_in: Option<f64>,
    /// Number of equal batches the averaging window is cut into.
    pub batches: usize,
}

impl Default for SepOptions {
    fn default() -> Self {
        Self { burn_in: None, batches: 20 }
    }
}

/// Time averages of product observables over one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SepRun {
    /// One estimate per observable, built from the batch means.
    pub estimates: Vec<McEstimate>,
    pub events: u64,
    pub burn_in: f64,
    pub t_max: f64,
    pub final_state: OccupancyConfig,
}

struct Channels<'g> {
    g: &'g GraphSpec,
    site_edges: Vec<Vec<usize>>,
    left: usize,
    right: usize,
    right_bit: u64,
}

impl<'g> Channels<'g> {
    fn new(g: &'g GraphSpec) -> Self {
        let mut site_edges = vec![Vec::new(); g.n_sites + 1];
        for (i, e) in g.edges.iter().enumerate() {
            site_edges[e.x].push(i);
            site_edges[e.y].push(i);
        }
        let m = g.edges.len();
        Self { g, site_edges, left: m, right: m + 1, right_bit: 1 << (g.n_sites - 1) }
    }

    fn rate(&self, c: usize, s: u64) -> f64 {
        let g = self.g;
        if c == self.left {
            g.omega_left * if s & 1 != 0 { 1.0 - g.rho_left } else { g.rho_left }
        } else if c == self.right {
            g.omega_right * if s & self.right_bit != 0 { 1.0 - g.rho_right } else { g.rho_right }
        } else {
            let e = &g.edges[c];
            if (s >> (e.x - 1) & 1) != (s >> (e.y - 1) & 1) {
                e.weight
            } else {
                0.0
            }
        }
    }

    fn refresh_site(&self, tree: &mut RateTree, x: usize, s: u64) {
        for &c in &self.site_edges[x] {
            tree.set(c, self.rate(c, s));
        }
    }
}

/// Gillespie simulation of the open process from `eta0` up to `t_max`,
/// returning time-weighted averages of `prod_{x in A} eta(x)` for each
/// observable `A` over `[burn_in, t_max]`.
pub fn simulate_sep(
    g: &GraphSpec,
    eta0: &OccupancyConfig,
    t_max: f64,
    stream: &RngStream,
    observables: &[SiteSet],
    opts: SepOptions,
    sink: &mut impl EventSink,
) -> Result<SepRun> {
    g.require_valid()?;
    if g.n_sites > MAX_SIM_SITES {
        return Err(Error::Capacity(alloc::format!("simulation limited to {MAX_SIM_SITES} sites")));
    }
    if eta0.n_sites() != g.n_sites {
        bail_param!("initial configuration has {} sites, graph has {}", eta0.n_sites(), g.n_sites);
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        bail_param!("t_max must be positive and finite, got {t_max}");
    }
    let burn_in = opts.burn_in.unwrap_or(t_max / 5.0);
    if !(burn_in >= 0.0 && burn_in < t_max) {
        bail_param!("burn-in {burn_in} must lie in [0, t_max)");
    }
    if opts.batches < 2 {
        bail_param!("need at least two batches, got {}", opts.batches);
    }
    for a in observables {
        SiteSet::new(a.sites().to_vec(), g.n_sites)?;
    }
    let masks: Vec<u64> = observables.iter().map(SiteSet::mask).collect();

    let ch = Channels::new(g);
    let mut tree = RateTree::new(g.edges.len() + 2);
    let mut s = eta0.bits();
    for c in 0..tree.len() {
        tree.set(c, ch.rate(c, s));
    }
    let mut rng = stream.rng();
    let batch_len = (t_max - burn_in) / opts.batches as f64;
    let mut occupied_time = vec![vec![0.0; masks.len()]; opts.batches];
    let mut credit = |from: f64, to: f64, s: u64| {
        let (a, b) = (from.max(burn_in), to.min(t_max));
        if b <= a {
            return;
        }
        let mut lo = a;
        while lo < b {
            let k = (((lo - burn_in) / batch_len) as usize).min(opts.batches - 1);
            let edge = if k + 1 == opts.batches { t_max } else { burn_in + (k + 1) as f64 * batch_len };
            let hi = b.min(edge);
            let dt = hi - lo;
            for (slot, &m) in occupied_time[k].iter_mut().zip(&masks) {
                if s & m == m {
                    *slot += dt;
                }
            }
            if hi <= lo {
                break;
            }
            lo = hi;
        }
    };

    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let total = tree.total();
        let next = t + rng.exponential(total);
        if next >= t_max {
            credit(t, t_max, s);
            break;
        }
        credit(t, next, s);
        t = next;
        let c = tree.sample(total, &mut rng);
        if c == ch.left {
            s ^= 1;
            let kind = if s & 1 != 0 { EventKind::Create } else { EventKind::Destroy };
            let (from, to) = if s & 1 != 0 { (0, 1) } else { (1, 0) };
            sink.record(t, kind, from, to);
            ch.refresh_site(&mut tree, 1, s);
        } else if c == ch.right {
            s ^= ch.right_bit;
            let (n, big) = (g.n_sites, g.big_n());
            let created = s & ch.right_bit != 0;
            let (kind, from, to) = if created { (EventKind::Create, big, n) } else { (EventKind::Destroy, n, big) };
            sink.record(t, kind, from, to);
            ch.refresh_site(&mut tree, n, s);
        } else {
            let e = &g.edges[c];
            let (from, to) = if s >> (e.x - 1) & 1 == 1 { (e.x, e.y) } else { (e.y, e.x) };
            s ^= (1 << (e.x - 1)) | (1 << (e.y - 1));
            sink.record(t, EventKind::Hop, from, to);
            ch.refresh_site(&mut tree, e.x, s);
            ch.refresh_site(&mut tree, e.y, s);
        }
        tree.set(ch.left, ch.rate(ch.left, s));
        tree.set(ch.right, ch.rate(ch.right, s));
        events += 1;
        if events >= EVENT_CAP {
            return Err(Error::EventCap { cap: EVENT_CAP, detail: alloc::format!("open process stopped at t = {t}") });
        }
    }
    let estimates = (0..masks.len())
        .map(|j| {
            let acc: Accumulator = occupied_time.iter().map(|b| b[j] / batch_len).collect();
            acc.estimate()
        })
        .collect::<Result<Vec<_>>>()?;
    let final_state = OccupancyConfig::from_bits(s, g.n_sites)?;
    Ok(SepRun { estimates, events, burn_in, t_max, final_state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::homogeneous_segment;

    struct Count(u64, f64);

    impl EventSink for Count {
        fn record(&mut self, time: f64, _: EventKind, _: usize, _: usize) {
            assert!(time >= self.1);
            self.0 += 1;
            self.1 = time;
        }
    }

    #[test]
    fn equilibrium_density() {
        let g = homogeneous_segment(3, 1.0, 1.0, 0.4, 0.4).unwrap();
        let eta0 = OccupancyConfig::from_bits(0, 3).unwrap();
        let obs = [SiteSet::from_mask(0b010)];
        let run = simulate_sep(&g, &eta0, 2e4, &RngStream::new(11, 0), &obs, SepOptions::default(), &mut ()).unwrap();
        assert!(run.estimates[0].within(0.4, 4.0), "{:?}", run.estimates[0]);
    }

    #[test]
    fn events_reach_the_sink_in_order() {
        let g = homogeneous_segment(2, 1.0, 1.0, 0.2, 0.8).unwrap();
        let eta0 = OccupancyConfig::from_bits(0b11, 2).unwrap();
        let mut sink = Count(0, 0.0);
        let run = simulate_sep(&g, &eta0, 50.0, &RngStream::new(1, 1), &[], SepOptions::default(), &mut sink).unwrap();
        assert_eq!(sink.0, run.events);
    }

    #[test]
    fn same_stream_same_run() {
        let g = homogeneous_segment(4, 0.5, 2.0, 0.2, 0.8).unwrap();
        let eta0 = OccupancyConfig::from_bits(0b0101, 4).unwrap();
        let obs = [SiteSet::from_mask(0b0011)];
        let st = RngStream::new(5, 9);
        let a = simulate_sep(&g, &eta0, 200.0, &st, &obs, SepOptions::default(), &mut ()).unwrap();
        let b = simulate_sep(&g, &eta0, 200.0, &st, &obs, SepOptions::default(), &mut ()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_times() {
        let g = homogeneous_segment(2, 1.0, 1.0, 0.2, 0.8).unwrap();
        let eta0 = OccupancyConfig::from_bits(0, 2).unwrap();
        assert!(simulate_sep(&g, &eta0, 0.0, &RngStream::default(), &[], SepOptions::default(), &mut ()).is_err());
        let o = SepOptions { burn_in: Some(5.0), batches: 20 };
        assert!(simulate_sep(&g, &eta0, 5.0, &RngStream::default(), &[], o, &mut ()).is_err());
    }
}
