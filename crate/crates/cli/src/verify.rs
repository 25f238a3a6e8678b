//! Verification suites: every structural identity of the model checked
//! against independent exact or Monte Carlo computations.

use serde::Serialize;
use sepness_core::closed_forms::{
    absorption_levels, absorption_product, mixture_measure, mixture_measure_by_classes, mixture_weights, n_point_correlation,
    ninja_recursion_residual, nonempty_site_sets, two_point_correlation, CorrelationRequest, Segment, WeightOracle,
};
use sepness_core::exact::ninja::ninja_starts;
use sepness_core::exact::{absorption_distribution, all_absorbed_at_n, check_generator_duality, check_ninja_coupling, check_two_particle_martingales, solve_stationary};
use sepness_core::ninja::NinjaState;
use sepness_core::sim::{simulate_sep, RngStream, SepOptions};
use sepness_core::{homogeneous_segment, Edge, GraphSpec, OccupancyConfig, Result, SiteSet};

use crate::experiments::{
    dual_frequencies, dual_reference, ninja_conditional_reference, ninja_frequencies, ninja_unlabelled_reference, stirring_frequencies,
    stirring_pattern_counts,
};
use crate::stats::chi_square_test;

/// Reservoir coupling grid shared by the formula and martingale suites.
pub const OMEGA_GRID: [f64; 3] = [0.5, 1.0, 3.0];
/// Significance level of the chi-square checks.
pub const CHI_SQUARE_LEVEL: f64 = 0.01;
/// Monte Carlo estimates must fall within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Duality,
    Martingales,
    Ninja,
    Mixture,
    Formulas,
    Montecarlo,
}

impl Suite {
    const PARTS: [Suite; 6] = [Suite::Duality, Suite::Martingales, Suite::Ninja, Suite::Mixture, Suite::Formulas, Suite::Montecarlo];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Duality => "duality",
            Suite::Martingales => "martingales",
            Suite::Ninja => "ninja",
            Suite::Mixture => "mixture",
            Suite::Formulas => "formulas",
            Suite::Montecarlo => "montecarlo",
        }
    }
}

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Below,
    Above,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub rule: Rule,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(suite: Suite, name: impl Into<String>, value: f64, rule: Rule, threshold: f64) -> Self {
        let pass = match rule {
            Rule::Below => value < threshold,
            Rule::Above => value > threshold,
            Rule::AtLeast => value >= threshold,
        };
        Self { suite: suite.name(), name: name.into(), value, rule, threshold, pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Restricts the martingale suite to one `N`.
    pub segment_n: Option<usize>,
    /// Restricts the martingale suite to one coupling pair.
    pub omega: Option<(f64, f64)>,
    /// Largest `N` of the exhaustive Ninja recursion.
    pub max_n: usize,
    pub seed: u64,
    pub replicas: u64,
    pub threads: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { segment_n: None, omega: None, max_n: 7, seed: 0, replicas: 100_000, threads: None }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::PARTS {
                out.extend(run_suite(s, opts)?);
            }
            Ok(out)
        }
        Suite::Duality => duality(),
        Suite::Martingales => martingales(opts),
        Suite::Ninja => ninja(opts),
        Suite::Mixture => mixture(),
        Suite::Formulas => formulas(),
        Suite::Montecarlo => montecarlo(opts),
    }
}

fn graph(n_sites: usize, edges: &[(usize, usize, f64)], omega_left: f64, omega_right: f64) -> GraphSpec {
    GraphSpec {
        n_sites,
        edges: edges.iter().map(|&(x, y, w)| Edge::new(x, y, w)).collect(),
        omega_left,
        omega_right,
        rho_left: 0.2,
        rho_right: 0.8,
    }
}

/// A tree on five bulk sites with assorted conductances.
pub fn tree_graph() -> GraphSpec {
    graph(5, &[(1, 2, 1.0), (2, 3, 0.7), (2, 4, 1.8), (4, 5, 1.2)], 1.5, 0.6)
}

/// The five-cycle `1..5` with the chord `{2,4}`.
pub fn cycle_with_chord() -> GraphSpec {
    graph(5, &[(1, 2, 1.0), (2, 3, 2.0), (3, 4, 0.5), (4, 5, 1.0), (5, 1, 0.8), (2, 4, 1.3)], 0.7, 2.5)
}

/// Graphs with at most five bulk sites, homogeneous and not.
pub fn graph_battery() -> Vec<(String, GraphSpec)> {
    let mut out = Vec::new();
    for (n, wl, wr) in [(1, 1.0, 1.0), (2, 0.5, 3.0), (3, 1.0, 1.0), (4, 3.0, 0.5), (5, 2.0, 1.0)] {
        out.push((format!("segment N={} omega=({wl},{wr})", n + 1), homogeneous_segment(n, wl, wr, 0.2, 0.8).expect("valid segment")));
    }
    out.push(("weighted segment N=5".into(), graph(4, &[(1, 2, 0.3), (2, 3, 2.5), (3, 4, 1.1)], 0.9, 1.7)));
    out.push(("tree".into(), tree_graph()));
    out.push(("cycle with chord".into(), cycle_with_chord()));
    out.push(("complete K4".into(), graph(4, &[(1, 2, 1.0), (1, 3, 0.4), (1, 4, 2.0), (2, 3, 1.5), (2, 4, 0.8), (3, 4, 1.0)], 1.2, 0.4)));
    out
}

fn duality() -> Result<Vec<Check>> {
    graph_battery()
        .into_iter()
        .map(|(name, g)| Ok(Check::new(Suite::Duality, format!("generator duality, {name}"), check_generator_duality(&g, 2)?, Rule::Below, 1e-12)))
        .collect()
}

fn martingales(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let sizes: Vec<usize> = match opts.segment_n {
        Some(n) => vec![n],
        None => (3..=6).collect(),
    };
    let grid: Vec<(f64, f64)> = match opts.omega {
        Some(w) => vec![w],
        None => OMEGA_GRID.iter().flat_map(|&a| OMEGA_GRID.iter().map(move |&b| (a, b))).collect(),
    };
    let mut out = Vec::new();
    for &n in &sizes {
        for &(wl, wr) in &grid {
            let r = check_two_particle_martingales(n, wl, wr)?;
            out.push(Check::new(Suite::Martingales, format!("pair martingales N={n} omega=({wl},{wr})"), r.max(), Rule::Below, 1e-12));
        }
    }
    Ok(out)
}

fn ninja(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 2..=opts.max_n {
        let mut worst = 0.0f64;
        for xs in nonempty_site_sets(n) {
            worst = worst.max(ninja_recursion_residual(n, &xs)?.residual);
        }
        out.push(Check::new(Suite::Ninja, format!("size recursion N={n}"), worst, Rule::Below, 1e-12));
    }
    for n in 3..=opts.max_n.min(5) {
        let mut worst = 0.0f64;
        for k in 0..=2 {
            for start in ninja_starts(n, k, false) {
                worst = worst.max(check_ninja_coupling(n, &start)?.max());
            }
        }
        out.push(Check::new(Suite::Ninja, format!("coupling identities N={n}"), worst, Rule::Below, 1e-12));
    }
    Ok(out)
}

/// Segments `N = 3..6` plus the tree and the cycle with chord.
pub fn mixture_battery() -> Vec<(String, GraphSpec)> {
    let mut out = Vec::new();
    for (n, wl, wr) in [(2, 1.0, 1.0), (3, 0.5, 3.0), (4, 2.0, 0.7), (5, 1.0, 1.0)] {
        out.push((format!("segment N={} omega=({wl},{wr})", n + 1), homogeneous_segment(n, wl, wr, 0.2, 0.8).expect("valid segment")));
    }
    out.push(("tree".into(), tree_graph()));
    out.push(("cycle with chord".into(), cycle_with_chord()));
    out
}

fn mixture() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, g) in mixture_battery() {
        let w = mixture_weights(&g, WeightOracle::Auto)?;
        let stationary = solve_stationary(&g)?;
        let kron = mixture_measure(&g, &w)?;
        let classes = mixture_measure_by_classes(&g, &w)?;
        out.push(Check::new(Suite::Mixture, format!("mixture = stationary, {name}"), stationary.max_deviation(&kron.probs), Rule::Below, 1e-9));
        out.push(Check::new(Suite::Mixture, format!("class regrouping = product form, {name}"), kron.max_deviation(&classes.probs), Rule::Below, 1e-12));
        out.push(Check::new(Suite::Mixture, format!("weights sum to one, {name}"), (w.total() - 1.0).abs(), Rule::Below, 1e-10));
        out.push(Check::new(Suite::Mixture, format!("weights positive, {name}"), w.min(), Rule::Above, 0.0));
        if g.is_homogeneous_segment() {
            let solved = mixture_weights(&g, WeightOracle::ExactSolve)?;
            let d = w.weights.iter().zip(&solved.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            out.push(Check::new(Suite::Mixture, format!("product weights = solved weights, {name}"), d, Rule::Below, 1e-12));
        }
    }
    Ok(out)
}

fn small_sets(n_sites: usize, max_len: usize) -> impl Iterator<Item = SiteSet> {
    (1u64..1 << n_sites).filter(move |m| m.count_ones() as usize <= max_len).map(SiteSet::from_mask)
}

fn formulas() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for big_n in 2..=8 {
        let (mut product, mut levels, mut mass) = (0.0f64, 0.0f64, 0.0f64);
        for &wl in &OMEGA_GRID {
            for &wr in &OMEGA_GRID {
                let g = homogeneous_segment(big_n - 1, wl, wr, 0.2, 0.8)?;
                let seg = Segment::new(big_n, wl, wr)?;
                for xs in small_sets(big_n - 1, 4) {
                    product = product.max((absorption_product(&seg, &xs)? - all_absorbed_at_n(&g, &xs)?).abs());
                    let closed = absorption_levels(&seg, &xs)?;
                    let solved = absorption_distribution(&g, &xs)?.probs;
                    levels = levels.max(closed.iter().zip(&solved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
                    mass = mass.max((closed.iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
        out.push(Check::new(Suite::Formulas, format!("all-at-N product N={big_n}"), product, Rule::Below, 1e-12));
        out.push(Check::new(Suite::Formulas, format!("level laws N={big_n}"), levels, Rule::Below, 1e-10));
        out.push(Check::new(Suite::Formulas, format!("level laws sum to one N={big_n}"), mass, Rule::Below, 1e-10));
    }
    for big_n in 2..=6 {
        let (mut moments, mut pair) = (0.0f64, 0.0f64);
        for (wl, wr) in [(1.0, 1.0), (0.5, 3.0), (3.0, 1.0)] {
            let g = homogeneous_segment(big_n - 1, wl, wr, 0.2, 0.8)?;
            let seg = Segment::new(big_n, wl, wr)?;
            let sd = solve_stationary(&g)?;
            for xs in small_sets(big_n - 1, 3) {
                for centered in [false, true] {
                    let formula = n_point_correlation(&seg, 0.2, 0.8, &CorrelationRequest { points: xs.clone(), centered })?;
                    let exact = if centered { sd.centered_moment(xs.sites()) } else { sd.product_moment(xs.mask()) };
                    moments = moments.max((formula - exact).abs());
                }
                if let [x, y] = *xs.sites() {
                    let general = n_point_correlation(&seg, 0.2, 0.8, &CorrelationRequest { points: xs.clone(), centered: true })?;
                    pair = pair.max((general - two_point_correlation(&seg, 0.2, 0.8, x, y)?).abs());
                }
            }
        }
        out.push(Check::new(Suite::Formulas, format!("correlations vs stationary moments N={big_n}"), moments, Rule::Below, 1e-9));
        out.push(Check::new(Suite::Formulas, format!("pair correlation two ways N={big_n}"), pair, Rule::Below, 1e-12));
    }
    Ok(out)
}

fn montecarlo(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut stream = 0u64;
    // each experiment gets its own block of replica streams
    let mut next = || {
        stream += 1;
        RngStream::new(opts.seed, stream << 40)
    };
    let z = |name: String, e: &sepness_core::sim::McEstimate, target: f64| Check::new(Suite::Montecarlo, name, e.z_score(target), Rule::Below, MC_SIGMAS);

    for (g, sites) in [(homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8)?, vec![2]), (homogeneous_segment(4, 0.5, 3.0, 0.2, 0.8)?, vec![1, 3])] {
        let start = SiteSet::new(sites, g.n_sites)?;
        let base = next();
        let f = dual_frequencies(&g, &start, opts.replicas, &base, opts.threads)?;
        let again = dual_frequencies(&g, &start, opts.replicas, &base, Some(1))?;
        let same = f == again && f.levels.iter().zip(&again.levels).all(|(a, b)| a.mean.to_bits() == b.mean.to_bits() && a.stderr.to_bits() == b.stderr.to_bits());
        out.push(Check::new(Suite::Montecarlo, format!("dual N={} rerun on one thread is bit-identical", g.big_n()), f64::from(u8::from(!same)), Rule::Below, 0.5));
        for (l, (e, p)) in f.levels.iter().zip(dual_reference(&g, &start)?).enumerate() {
            out.push(z(format!("dual N={} start={:?} level {l}", g.big_n(), start.sites()), e, p));
        }
    }

    for n_sites in [2, 3] {
        let g = homogeneous_segment(n_sites, 1.0, 1.0, 0.2, 0.8)?;
        let exact = mixture_weights(&g, WeightOracle::Auto)?;
        let f = stirring_frequencies(&g, opts.replicas, &next(), opts.threads)?;
        let worst = f.weights.iter().zip(&exact.weights).map(|(e, &p)| e.z_score(p)).fold(0.0, f64::max);
        out.push(Check::new(Suite::Montecarlo, format!("stirring weights N={}", n_sites + 1), worst, Rule::Below, MC_SIGMAS));
        let test = chi_square_test(&f.counts, &exact.weights)?;
        out.push(Check::new(Suite::Montecarlo, format!("stirring weights chi-square N={}", n_sites + 1), test.p_value, Rule::AtLeast, CHI_SQUARE_LEVEL));
    }

    let g = homogeneous_segment(4, 1.0, 1.0, 0.2, 0.8)?;
    let labels = SiteSet::new(vec![2, 3], 4)?;
    let weights = mixture_weights(&g, WeightOracle::Auto)?;
    let mut pattern_law = vec![0.0; 4];
    for (i, f) in weights.iter() {
        let p = labels.sites().iter().enumerate().filter(|(_, &x)| i.contains(x)).fold(0, |p, (j, _)| p | 1 << j);
        pattern_law[p] += f;
    }
    for restrict in [true, false] {
        let counts = stirring_pattern_counts(&g, &labels, restrict, opts.replicas, &next(), opts.threads)?;
        let how = if restrict { "restricted full run" } else { "run from subset" };
        out.push(Check::new(Suite::Montecarlo, format!("stirring consistency, {how}"), chi_square_test(&counts, &pattern_law)?.p_value, Rule::AtLeast, CHI_SQUARE_LEVEL));
    }

    for (big_n, labels, ninja) in [(4, vec![1], 3), (5, vec![1, 2], 4), (5, vec![3], 1)] {
        let start = NinjaState::new(big_n, labels, ninja)?;
        let f = ninja_frequencies(big_n, &start, opts.replicas, &next(), opts.threads)?;
        let tag = format!("N={big_n} labels={:?} ninja={ninja}", start.labels);
        if let Some(e) = &f.ninja_at_zero_given {
            out.push(z(format!("ninja conditional return, {tag}"), e, ninja_conditional_reference(big_n, &start)));
        } else {
            out.push(Check::new(Suite::Montecarlo, format!("ninja conditional return, {tag}"), f64::INFINITY, Rule::Below, MC_SIGMAS));
        }
        let test = chi_square_test(&f.unlabelled_counts, &ninja_unlabelled_reference(big_n, &start)?)?;
        out.push(Check::new(Suite::Montecarlo, format!("ninja label forgetting chi-square, {tag}"), test.p_value, Rule::AtLeast, CHI_SQUARE_LEVEL));
    }

    let g = homogeneous_segment(3, 1.0, 1.0, 0.2, 0.8)?;
    let sd = solve_stationary(&g)?;
    let observables: Vec<SiteSet> = small_sets(3, 2).collect();
    let run = simulate_sep(&g, &OccupancyConfig::from_bits(0, 3)?, 1e5, &next(), &observables, SepOptions::default(), &mut ())?;
    for (a, e) in observables.iter().zip(&run.estimates) {
        out.push(z(format!("time average of {:?}", a.sites()), e, sd.product_moment(a.mask())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Check::new(Suite::Duality, "a", 0.5, Rule::Below, 1.0).pass);
        assert!(!Check::new(Suite::Duality, "a", 0.0, Rule::Above, 0.0).pass);
        assert!(Check::new(Suite::Duality, "a", 0.01, Rule::AtLeast, 0.01).pass);
        assert!(!Check::new(Suite::Duality, "a", f64::NAN, Rule::Below, 1.0).pass);
    }

    #[test]
    fn exact_suites_pass() {
        let opts = VerifyOptions { max_n: 5, ..Default::default() };
        for s in [Suite::Duality, Suite::Martingales, Suite::Ninja, Suite::Mixture] {
            for c in run_suite(s, &opts).unwrap() {
                assert!(c.pass, "{c:?}");
            }
        }
    }

    #[test]
    fn battery_is_valid() {
        for (name, g) in graph_battery() {
            assert!(sepness_core::validate(&g).is_ok(), "{name}");
            assert!(g.n_sites <= 5);
        }
    }
}
