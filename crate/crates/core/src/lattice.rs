//! Graph, parameter and configuration model shared by every engine.
//!
//! Bulk sites are numbered `1..=n_sites` (so `N = n_sites + 1`). The two
//! reservoirs, or absorbing sites in the dual picture, are the virtual sites
//! `0` and `N`; they never appear in an edge list. Configurations and site
//! sets are packed into a `u64` with bit `x - 1` standing for site `x`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail_capacity, bail_param, Error, Result};

/// Largest bulk for which the simulators can pack a configuration.
pub const MAX_SIM_SITES: usize = 63;
/// Largest bulk for which an engine may enumerate all `2^{N-1}` configurations.
pub const MAX_EXACT_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub x: usize,
    pub y: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(x: usize, y: usize, weight: f64) -> Self {
        Self { x, y, weight }
    }
}

/// Weighted bulk graph on `{1..n_sites}` plus the two reservoir couplings.
///
/// Construction does not validate; call [`validate`] (every engine does) to
/// obtain diagnostics for a malformed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub n_sites: usize,
    pub edges: Vec<Edge>,
    pub omega_left: f64,
    pub omega_right: f64,
    pub rho_left: f64,
    pub rho_right: f64,
}

impl GraphSpec {
    /// Index of the right absorbing site, `N = n_sites + 1`.
    pub fn big_n(&self) -> usize {
        self.n_sites + 1
    }

    /// `(neighbor, conductance)` lists, indexed by site (entry 0 unused).
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = alloc::vec![Vec::new(); self.n_sites + 1];
        for e in &self.edges {
            adj[e.x].push((e.y, e.weight));
            adj[e.y].push((e.x, e.weight));
        }
        adj
    }

    /// True for the nearest-neighbour segment with unit bulk conductances,
    /// whatever the reservoir couplings.
    pub fn is_homogeneous_segment(&self) -> bool {
        if self.edges.len() + 1 != self.n_sites {
            return false;
        }
        let mut seen = alloc::vec![false; self.n_sites];
        for e in &self.edges {
            let (a, b) = if e.x < e.y { (e.x, e.y) } else { (e.y, e.x) };
            if b != a + 1 || a == 0 || b > self.n_sites || e.weight != 1.0 || seen[a] {
                return false;
            }
            seen[a] = true;
        }
        true
    }

    /// Mirror image under `x -> N - x` with the reservoirs exchanged.
    pub fn reversed(&self) -> GraphSpec {
        let n = self.big_n();
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (n - e.x, n - e.y);
                Edge::new(a.min(b), a.max(b), e.weight)
            })
            .collect();
        edges.sort_by_key(|e| (e.x, e.y));
        GraphSpec {
            n_sites: self.n_sites,
            edges,
            omega_left: self.omega_right,
            omega_right: self.omega_left,
            rho_left: self.rho_right,
            rho_right: self.rho_left,
        }
    }

    /// Copy with different reservoir densities; couplings and bulk unchanged.
    pub fn with_densities(&self, rho_left: f64, rho_right: f64) -> GraphSpec {
        GraphSpec { rho_left, rho_right, ..self.clone() }
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        validate(self).map_err(Error::InvalidGraph)
    }

    pub(crate) fn require_exact_size(&self) -> Result<()> {
        self.require_valid()?;
        if self.n_sites > MAX_EXACT_SITES {
            bail_capacity!(
                "{} bulk sites exceeds the exact-enumeration cap of {}",
                self.n_sites,
                MAX_EXACT_SITES
            );
        }
        Ok(())
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        bail_param!("{name} must be a positive finite rate, got {v}");
    }
    Ok(())
}

fn check_density(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        bail_param!("{name} must lie strictly inside (0,1), got {v}");
    }
    Ok(())
}

/// Nearest-neighbour segment `1 - 2 - ... - n_sites` with unit conductances.
pub fn homogeneous_segment(
    n_sites: usize,
    omega_left: f64,
    omega_right: f64,
    rho_left: f64,
    rho_right: f64,
) -> Result<GraphSpec> {
    if n_sites == 0 {
        bail_param!("a segment needs at least one bulk site");
    }
    check_rate("omega_left", omega_left)?;
    check_rate("omega_right", omega_right)?;
    check_density("rho_left", rho_left)?;
    check_density("rho_right", rho_right)?;
    let edges = (1..n_sites).map(|x| Edge::new(x, x + 1, 1.0)).collect();
    Ok(GraphSpec { n_sites, edges, omega_left, omega_right, rho_left, rho_right })
}

/// Creation/annihilation rates of the classical boundary-driven model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbgdParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl AbgdParams {
    /// Inverse of [`from_abgd`] on the reservoir parameters.
    pub fn from_reservoirs(omega_left: f64, rho_left: f64, omega_right: f64, rho_right: f64) -> Self {
        Self {
            alpha: rho_left / omega_left,
            gamma: (1.0 - rho_left) / omega_left,
            delta: rho_right / omega_right,
            beta: (1.0 - rho_right) / omega_right,
        }
    }
}

/// Homogeneous segment parametrized by `alpha, beta, gamma, delta`:
/// `rho_L = a/(a+g)`, `omega_L = 1/(a+g)`, `rho_R = d/(d+b)`, `omega_R = 1/(d+b)`.
pub fn from_abgd(n_sites: usize, p: AbgdParams) -> Result<GraphSpec> {
    for (name, v) in [("alpha", p.alpha), ("beta", p.beta), ("gamma", p.gamma), ("delta", p.delta)] {
        check_rate(name, v)?;
    }
    let left = p.alpha + p.gamma;
    let right = p.delta + p.beta;
    homogeneous_segment(n_sites, 1.0 / left, 1.0 / right, p.alpha / left, p.delta / right)
}

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoSites,
    TooManySites(usize),
    EndpointOutOfRange { x: usize, y: usize },
    SelfLoop(usize),
    DuplicateEdge { x: usize, y: usize },
    NonPositiveConductance { x: usize, y: usize, weight: f64 },
    NonPositiveReservoirRate { side: Side, value: f64 },
    DensityOutOfRange { side: Side, value: f64 },
    NotConnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSites => write!(f, "graph has no bulk sites"),
            Violation::TooManySites(n) => {
                write!(f, "{n} bulk sites exceeds the bitmask cap of {MAX_SIM_SITES}")
            }
            Violation::EndpointOutOfRange { x, y } => write!(f, "edge ({x},{y}) leaves the bulk"),
            Violation::SelfLoop(x) => write!(f, "self-loop at {x}"),
            Violation::DuplicateEdge { x, y } => write!(f, "duplicate edge ({x},{y})"),
            Violation::NonPositiveConductance { x, y, weight } => {
                write!(f, "non-positive conductance {weight} on edge ({x},{y})")
            }
            Violation::NonPositiveReservoirRate { side, value } => {
                write!(f, "non-positive {side} reservoir rate {value}")
            }
            Violation::DensityOutOfRange { side, value } => {
                write!(f, "{side} density {value} outside (0,1)")
            }
            Violation::NotConnected => write!(f, "not connected"),
        }
    }
}

/// Non-empty list of violations returned by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics(pub Vec<Violation>);

impl Diagnostics {
    pub fn contains(&self, v: &Violation) -> bool {
        self.0.contains(v)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every [`GraphSpec`] invariant and reports all violations at once.
pub fn validate(g: &GraphSpec) -> core::result::Result<(), Diagnostics> {
    let mut out = Vec::new();
    let n = g.n_sites;
    if n == 0 {
        out.push(Violation::NoSites);
    }
    if n > MAX_SIM_SITES {
        out.push(Violation::TooManySites(n));
    }
    let mut seen: Vec<(usize, usize)> = Vec::with_capacity(g.edges.len());
    let mut endpoints_ok = true;
    for e in &g.edges {
        if e.x == 0 || e.y == 0 || e.x > n || e.y > n {
            out.push(Violation::EndpointOutOfRange { x: e.x, y: e.y });
            endpoints_ok = false;
            continue;
        }
        if e.x == e.y {
            out.push(Violation::SelfLoop(e.x));
            continue;
        }
        let key = (e.x.min(e.y), e.x.max(e.y));
        if seen.contains(&key) {
            out.push(Violation::DuplicateEdge { x: key.0, y: key.1 });
        } else {
            seen.push(key);
        }
        if !(e.weight > 0.0) || !e.weight.is_finite() {
            out.push(Violation::NonPositiveConductance { x: e.x, y: e.y, weight: e.weight });
        }
    }
    for (side, value) in [(Side::Left, g.omega_left), (Side::Right, g.omega_right)] {
        if !(value > 0.0) || !value.is_finite() {
            out.push(Violation::NonPositiveReservoirRate { side, value });
        }
    }
    for (side, value) in [(Side::Left, g.rho_left), (Side::Right, g.rho_right)] {
        if !(value > 0.0 && value < 1.0) {
            out.push(Violation::DensityOutOfRange { side, value });
        }
    }
    if n > 0 && endpoints_ok && !is_connected(n, &g.edges) {
        out.push(Violation::NotConnected);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(Diagnostics(out))
    }
}

fn is_connected(n: usize, edges: &[Edge]) -> bool {
    // union-find over 1..=n
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.x), find(&mut parent, e.y));
        if a != b {
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 1);
    (2..=n).all(|x| find(&mut parent, x) == root)
}

/// Strictly increasing list of bulk sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SiteSet(Vec<usize>);

impl SiteSet {
    /// Accepts a strictly increasing list of sites in `1..=n_sites`.
    pub fn new(sites: Vec<usize>, n_sites: usize) -> Result<Self> {
        for w in sites.windows(2) {
            if w[0] >= w[1] {
                bail_param!("sites must be strictly increasing, got {} before {}", w[0], w[1]);
            }
        }
        if let Some(&bad) = sites.iter().find(|&&x| x == 0 || x > n_sites) {
            bail_param!("site {bad} outside the bulk 1..={n_sites}");
        }
        Ok(Self(sites))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// All sites `1..=n_sites`.
    pub fn full(n_sites: usize) -> Self {
        Self((1..=n_sites).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut v = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            v.push(b + 1);
            m &= m - 1;
        }
        Self(v)
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &x| m | 1u64 << (x - 1))
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }
}

/// Every subset of `sites`, each exactly once.
///
/// Subsets come out in bitmask order: bit `j` of a counter running from `0`
/// to `2^k - 1` selects `sites[j]`, so `{1,3}` yields `{}, {1}, {3}, {1,3}`.
pub fn subsets_of(sites: &SiteSet) -> Subsets<'_> {
    Subsets { sites: sites.sites(), next: 0, end: 1u128 << sites.len() }
}

pub struct Subsets<'a> {
    sites: &'a [usize],
    next: u128,
    end: u128,
}

impl Iterator for Subsets<'_> {
    type Item = SiteSet;

    fn next(&mut self) -> Option<SiteSet> {
        if self.next >= self.end {
            return None;
        }
        let c = self.next;
        self.next += 1;
        let v = self
            .sites
            .iter()
            .enumerate()
            .filter(|(j, _)| c >> j & 1 == 1)
            .map(|(_, &x)| x)
            .collect();
        Some(SiteSet(v))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Subsets<'_> {}

/// One configuration `eta` of the open process, bit `x - 1` holding `eta(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupancyConfig {
    bits: u64,
    n_sites: usize,
}

impl OccupancyConfig {
    pub fn from_bits(bits: u64, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SIM_SITES {
            bail_param!("configuration length {n_sites} outside 1..={MAX_SIM_SITES}");
        }
        if n_sites < 64 && bits >> n_sites != 0 {
            bail_param!("bits {bits:#x} exceed {n_sites} sites");
        }
        Ok(Self { bits, n_sites })
    }

    /// Packs occupation numbers; `occ[x - 1]` is `eta(x)` and must be 0 or 1.
    pub fn encode(occ: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &o) in occ.iter().enumerate() {
            match o {
                0 => {}
                1 => bits |= 1 << i,
                _ => bail_param!("occupation {o} at site {} is not 0/1", i + 1),
            }
        }
        Self::from_bits(bits, occ.len())
    }

    pub fn decode(&self) -> Vec<u8> {
        (0..self.n_sites).map(|i| (self.bits >> i & 1) as u8).collect()
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn occupied(&self, x: usize) -> bool {
        self.bits >> (x - 1) & 1 == 1
    }

    pub fn particles(&self) -> u32 {
        self.bits.count_ones()
    }
}

/// Dual configuration: bulk occupancy plus the counts piled on sites 0 and N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DualState {
    pub bulk: u64,
    pub absorbed_0: u32,
    pub absorbed_n: u32,
}

impl DualState {
    pub fn from_sites(start: &SiteSet) -> Self {
        Self { bulk: start.mask(), absorbed_0: 0, absorbed_n: 0 }
    }

    pub fn total(&self) -> u32 {
        self.bulk.count_ones() + self.absorbed_0 + self.absorbed_n
    }

    pub fn is_absorbed(&self) -> bool {
        self.bulk == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn segment_construction() {
        let g = homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8).unwrap();
        assert_eq!(g.edges, vec![Edge::new(1, 2, 1.0), Edge::new(2, 3, 1.0)]);
        assert_eq!(g.big_n(), 4);
        assert!(g.is_homogeneous_segment());
        assert!(validate(&g).is_ok());

        let single = homogeneous_segment(1, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert!(single.edges.is_empty());
        assert!(validate(&single).is_ok());

        let g = homogeneous_segment(3, 2.0, 0.5, 0.2, 0.8).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert_eq!((g.omega_left, g.omega_right), (2.0, 0.5));
    }

    #[test]
    fn segment_rejects_bad_parameters() {
        assert!(homogeneous_segment(3, 0.0, 1.0, 0.2, 0.8).is_err());
        assert!(homogeneous_segment(3, 1.0, -1.0, 0.2, 0.8).is_err());
        assert!(homogeneous_segment(3, 1.0, 1.0, 0.0, 0.8).is_err());
        assert!(homogeneous_segment(3, 1.0, 1.0, 0.2, 1.0).is_err());
        assert!(homogeneous_segment(0, 1.0, 1.0, 0.2, 0.8).is_err());
    }

    #[test]
    fn abgd_map() {
        let g = from_abgd(3, AbgdParams { alpha: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0 }).unwrap();
        assert_eq!((g.rho_left, g.rho_right, g.omega_left, g.omega_right), (0.5, 0.5, 0.5, 0.5));

        let g = from_abgd(3, AbgdParams { alpha: 3.0, gamma: 1.0, delta: 1.0, beta: 4.0 }).unwrap();
        assert_eq!(g.rho_left, 0.75);
        assert_eq!(g.omega_left, 0.25);
        assert_eq!(g.rho_right, 0.2);
        assert_eq!(g.omega_right, 0.2);

        let bad = from_abgd(3, AbgdParams { alpha: 1.0, beta: 1.0, gamma: 0.0, delta: 1.0 });
        assert!(matches!(bad, Err(Error::Parameter(_))));
    }

    #[test]
    fn validate_reports_each_violation() {
        let mut g = homogeneous_segment(4, 1.0, 1.0, 0.2, 0.8).unwrap();
        g.edges = vec![Edge::new(1, 2, 1.0), Edge::new(3, 4, 1.0)];
        let d = validate(&g).unwrap_err();
        assert_eq!(d.0, vec![Violation::NotConnected]);
        assert!(alloc::format!("{d}").contains("not connected"));

        let mut g = homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8).unwrap();
        g.edges[0].weight = 0.0;
        let d = validate(&g).unwrap_err();
        assert!(alloc::format!("{d}").contains("non-positive conductance"));

        let mut g = homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8).unwrap();
        g.edges.push(Edge::new(2, 1, 3.0));
        g.edges.push(Edge::new(2, 2, 1.0));
        g.rho_right = 1.5;
        let d = validate(&g).unwrap_err();
        assert!(d.contains(&Violation::DuplicateEdge { x: 1, y: 2 }));
        assert!(d.contains(&Violation::SelfLoop(2)));
        assert!(d.contains(&Violation::DensityOutOfRange { side: Side::Right, value: 1.5 }));
    }

    #[test]
    fn subsets_in_bitmask_order() {
        let s = |v: Vec<usize>| SiteSet::new(v, 5).unwrap();
        assert_eq!(subsets_of(&SiteSet::empty()).collect::<Vec<_>>(), vec![SiteSet::empty()]);
        assert_eq!(subsets_of(&s(vec![1])).collect::<Vec<_>>(), vec![s(vec![]), s(vec![1])]);
        assert_eq!(
            subsets_of(&s(vec![1, 3])).collect::<Vec<_>>(),
            vec![s(vec![]), s(vec![1]), s(vec![3]), s(vec![1, 3])]
        );
    }

    #[test]
    fn site_set_rejects_unsorted_and_out_of_range() {
        assert!(SiteSet::new(vec![2, 1], 3).is_err());
        assert!(SiteSet::new(vec![1, 1], 3).is_err());
        assert!(SiteSet::new(vec![0], 3).is_err());
        assert!(SiteSet::new(vec![4], 3).is_err());
        let s = SiteSet::new(vec![1, 3], 3).unwrap();
        assert_eq!(s.mask(), 0b101);
        assert_eq!(SiteSet::from_mask(0b101), s);
    }

    #[test]
    fn reversed_segment_swaps_reservoirs() {
        let mut g = homogeneous_segment(3, 2.0, 0.5, 0.2, 0.7).unwrap();
        g.edges[0].weight = 3.0;
        let r = g.reversed();
        assert_eq!(r.edges, vec![Edge::new(1, 2, 1.0), Edge::new(2, 3, 3.0)]);
        assert_eq!((r.omega_left, r.rho_left, r.omega_right, r.rho_right), (0.5, 0.7, 2.0, 0.2));
        assert_eq!(r.reversed(), g);
    }
}
