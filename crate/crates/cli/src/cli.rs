//! Argument parsing and command dispatch for the `sepness` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sepness_core::closed_forms::{
    absorption_levels, mixture_measure, mixture_weights, n_point_correlation, n_point_correlation_graph, CorrelationRequest, Segment, WeightOracle,
};
use sepness_core::exact::{absorption_distribution, solve_stationary};
use sepness_core::lattice::{from_abgd, AbgdParams};
use sepness_core::ninja::NinjaState;
use sepness_core::sim::{simulate_dual_logged, simulate_sep, RngStream, SepOptions, RNG_ALGORITHM};
use sepness_core::{homogeneous_segment, GraphSpec, OccupancyConfig, SiteSet};

use crate::error::{bail_input, CliError, ExitCode, Result};
use crate::experiments::{
    dual_frequencies, dual_reference, ninja_conditional_reference, ninja_frequencies, ninja_unlabelled_reference, stirring_frequencies,
};
use crate::formats::{estimate_json, graph_hash, mixture_csv, mixture_json, read_graph, stationary_csv, stationary_json, EventCsv, GraphDoc};
use crate::stats::chi_square_test;
use crate::verify::{run_suite, Suite, VerifyOptions, MC_SIGMAS};

/// Largest bulk for which `simulate` attaches exact reference values.
const REFERENCE_MAX_SITES: usize = 12;
/// Largest bulk for which the stirring pattern table is reported.
const STIRRING_TABLE_MAX_SITES: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "sepness", version, about = "Open symmetric exclusion: exact laws, closed forms, Monte Carlo and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stationary law by exact solve and by mixture assembly, with their distance
    Exact(ExactArgs),
    /// Law of the number of dual particles absorbed at N
    Absorption(AbsorptionArgs),
    /// Stationary n-point correlations
    Correlations(CorrelationArgs),
    /// Monte Carlo estimates from one of the simulators
    Simulate(SimulateArgs),
    /// Run a verification suite
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Homogeneous segment with absorbing sites 0 and N, i.e. N - 1 bulk sites
    #[arg(long, visible_alias = "segment-n", value_name = "N")]
    segment: Option<usize>,
    /// Homogeneous segment given by its number of bulk sites
    #[arg(long, value_name = "SITES")]
    bulk_sites: Option<usize>,
    /// Graph file (JSON)
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Reservoirs as creation/annihilation rates alpha,beta,gamma,delta
    #[arg(long, value_name = "A,B,G,D", value_delimiter = ',', allow_negative_numbers = true)]
    abgd: Option<Vec<f64>>,
    #[arg(long = "rho-l", value_name = "RHO")]
    rho_left: Option<f64>,
    #[arg(long = "rho-r", value_name = "RHO")]
    rho_right: Option<f64>,
    #[arg(long = "omega-l", value_name = "OMEGA")]
    omega_left: Option<f64>,
    #[arg(long = "omega-r", value_name = "OMEGA")]
    omega_right: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Stationary,
    Weights,
    Mixture,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Table written in CSV mode
    #[arg(long, value_enum, default_value_t = Table::Stationary)]
    table: Table,
    /// Largest accepted distance between the two stationary laws
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Only {
    AllAtN,
}

#[derive(Debug, Args)]
struct AbsorptionArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Starting sites of the dual particles
    #[arg(long, value_delimiter = ',', required = true)]
    sites: Vec<usize>,
    /// Report a single quantity
    #[arg(long, value_enum)]
    only: Option<Only>,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Strictly increasing bulk sites
    #[arg(long, value_delimiter = ',', required = true)]
    points: Vec<usize>,
    /// Centered moment instead of the plain product moment
    #[arg(long)]
    centered: bool,
    /// Also compute the moment from the exact stationary law
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sep,
    Dual,
    Stirring,
    Ninja,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Dual start sites, or labelled sites for the ninja mode
    #[arg(long, value_delimiter = ',')]
    sites: Vec<usize>,
    /// Starting site of the ninja
    #[arg(long)]
    ninja: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First stream; replica i uses stream + i
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Simulated time (sep mode)
    #[arg(long, default_value_t = 1e5)]
    t_max: f64,
    /// Discarded initial time (sep mode); default t_max / 5
    #[arg(long)]
    burn_in: Option<f64>,
    /// Number of batches for the error bars (sep mode)
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Product observable such as 1,2; repeatable (sep mode); default every single site
    #[arg(long, value_name = "SITES")]
    observe: Vec<String>,
    /// Stream the events of one trajectory (the first replica) to this CSV file
    #[arg(long, value_name = "PATH")]
    events: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Only this N in the martingale suite
    #[arg(long = "segment-n", visible_alias = "segment", value_name = "N")]
    segment_n: Option<usize>,
    #[arg(long = "omega-l", requires = "omega_right")]
    omega_left: Option<f64>,
    #[arg(long = "omega-r", requires = "omega_left")]
    omega_right: Option<f64>,
    /// Largest N of the exhaustive ninja recursion
    #[arg(long, default_value_t = 7)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    replicas: u64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let invocation: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Input as i32 } else { ExitCode::Success as i32 };
        }
    };
    match execute(cli.command, &invocation) {
        Ok(()) => ExitCode::Success as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

fn execute(command: Command, invocation: &[String]) -> Result<()> {
    match command {
        Command::Exact(a) => cmd_exact(a, invocation),
        Command::Absorption(a) => cmd_absorption(a, invocation),
        Command::Correlations(a) => cmd_correlations(a, invocation),
        Command::Simulate(a) => cmd_simulate(a, invocation),
        Command::Verify(a) => cmd_verify(a, invocation),
    }
}

impl GraphArgs {
    fn build(&self) -> Result<(GraphSpec, Value)> {
        let sources = [self.segment.is_some(), self.bulk_sites.is_some(), self.graph.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            bail_input!("give exactly one graph source: --segment N, --bulk-sites SITES or --graph PATH");
        }
        if let Some(path) = &self.graph {
            if self.abgd.is_some() {
                bail_input!("--abgd only applies to segments");
            }
            let mut g = read_graph(path)?;
            g.rho_left = self.rho_left.unwrap_or(g.rho_left);
            g.rho_right = self.rho_right.unwrap_or(g.rho_right);
            g.omega_left = self.omega_left.unwrap_or(g.omega_left);
            g.omega_right = self.omega_right.unwrap_or(g.omega_right);
            sepness_core::validate(&g).map_err(sepness_core::Error::InvalidGraph)?;
            return Ok((g, json!({ "file": path.display().to_string() })));
        }
        let n_sites = match (self.segment, self.bulk_sites) {
            (Some(n), _) if n < 2 => bail_input!("a segment needs N >= 2, got {n}; --bulk-sites counts bulk sites instead"),
            (Some(n), _) => n - 1,
            (_, Some(0)) => bail_input!("a segment needs at least one bulk site"),
            (_, Some(k)) => k,
            _ => unreachable!(),
        };
        if let Some(v) = &self.abgd {
            if [self.rho_left, self.rho_right, self.omega_left, self.omega_right].iter().any(Option::is_some) {
                bail_input!("--abgd replaces the --rho-* and --omega-* flags");
            }
            let [alpha, beta, gamma, delta] = v[..] else {
                bail_input!("--abgd takes four values, got {}", v.len());
            };
            let g = from_abgd(n_sites, AbgdParams { alpha, beta, gamma, delta })?;
            return Ok((g, json!({ "segment_bulk_sites": n_sites, "abgd": v })));
        }
        let g = homogeneous_segment(
            n_sites,
            self.omega_left.unwrap_or(1.0),
            self.omega_right.unwrap_or(1.0),
            self.rho_left.unwrap_or(0.2),
            self.rho_right.unwrap_or(0.8),
        )?;
        Ok((g, json!({ "segment_bulk_sites": n_sites })))
    }
}

struct Report {
    command: &'static str,
    params: Value,
    seed: Option<u64>,
    graph: Option<GraphSpec>,
    results: Value,
    residuals: Map<String, Value>,
    pass: bool,
}

impl Report {
    fn to_json(&self, invocation: &[String]) -> Value {
        let mut params = self.params.clone();
        if let (Some(g), Value::Object(m)) = (&self.graph, &mut params) {
            m.insert("graph".into(), serde_json::to_value(GraphDoc::from(g)).expect("graph serializes"));
        }
        json!({
            "command": self.command,
            "invocation": invocation,
            "params": params,
            "seed": self.seed,
            "graph_hash": self.graph.as_ref().map(graph_hash),
            "results": self.results,
            "residuals": self.residuals,
            "pass": self.pass,
        })
    }
}

fn write_out(out: &OutputArgs, body: &str) -> Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush()).map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}

/// Writes the report (JSON) or `csv`, then turns failed checks into exit code 3.
fn finish(out: &OutputArgs, report: &Report, invocation: &[String], csv: impl FnOnce() -> String, failures: Vec<String>) -> Result<()> {
    let body = match out.format {
        Format::Json => serde_json::to_string_pretty(&report.to_json(invocation)).expect("report serializes") + "\n",
        Format::Csv => csv(),
    };
    write_out(out, &body)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures))
    }
}

fn residuals(pairs: &[(&str, f64)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), json!(v))).collect()
}

fn failed(pairs: &[(&str, f64)], tolerance: f64) -> Vec<String> {
    pairs.iter().filter(|(_, v)| !(*v < tolerance)).map(|(k, _)| k.to_string()).collect()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        bail_input!("{name} must be positive, got {v}");
    }
    Ok(())
}

fn cmd_exact(a: ExactArgs, invocation: &[String]) -> Result<()> {
    positive("--tolerance", a.tolerance)?;
    let (g, source) = a.graph.build()?;
    let sd = solve_stationary(&g)?;
    let w = mixture_weights(&g, WeightOracle::Auto)?;
    let mixed = mixture_measure(&g, &w)?;
    let pairs = [("max_deviation", sd.max_deviation(&mixed.probs)), ("weight_sum_error", (w.total() - 1.0).abs())];
    let failures = failed(&pairs, a.tolerance);
    let report = Report {
        command: "exact",
        params: json!({ "source": source, "tolerance": a.tolerance }),
        seed: None,
        results: json!({
            "stationary": stationary_json(&sd),
            "mixture_weights": mixture_json(&w),
            "mixture_measure": mixed.probs,
            "max_deviation": pairs[0].1,
            "min_weight": w.min(),
        }),
        residuals: residuals(&pairs),
        pass: failures.is_empty(),
        graph: Some(g),
    };
    let csv = || match a.table {
        Table::Stationary => stationary_csv(&sd),
        Table::Weights => mixture_csv(&w),
        Table::Mixture => stationary_csv(&mixed),
    };
    finish(&a.out, &report, invocation, csv, failures)
}

fn cmd_absorption(a: AbsorptionArgs, invocation: &[String]) -> Result<()> {
    positive("--tolerance", a.tolerance)?;
    let (g, source) = a.graph.build()?;
    let start = SiteSet::new(a.sites.clone(), g.n_sites)?;
    let oracle = absorption_distribution(&g, &start)?;
    let closed = if g.is_homogeneous_segment() { Some(absorption_levels(&Segment::from_graph(&g)?, &start)?) } else { None };
    let k = start.len();
    let discrepancy = closed
        .as_ref()
        .map(|c| c.iter().zip(&oracle.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    let mut pairs = vec![("oracle_mass_error", (oracle.total() - 1.0).abs())];
    if let Some(d) = discrepancy {
        pairs.push(("max_discrepancy", d));
    }
    let failures = failed(&pairs, a.tolerance);
    let results = match a.only {
        Some(Only::AllAtN) => {
            let value = closed.as_ref().map_or(oracle.probs[k], |c| c[k]);
            json!({ "all_at_n": value, "closed_form": closed.as_ref().map(|c| c[k]), "oracle": oracle.probs[k] })
        }
        None => json!({
            "levels": closed.as_ref().unwrap_or(&oracle.probs),
            "closed_form": closed,
            "oracle": oracle.probs,
            "max_discrepancy": discrepancy,
        }),
    };
    let report = Report {
        command: "absorption",
        params: json!({ "source": source, "sites": start.sites(), "only": a.only.map(|_| "all-at-n"), "tolerance": a.tolerance }),
        seed: None,
        graph: Some(g),
        results,
        residuals: residuals(&pairs),
        pass: failures.is_empty(),
    };
    let csv = || {
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let mut s = String::from("level,closed_form,oracle\n");
        let levels: Vec<usize> = if a.only.is_some() { vec![k] } else { (0..=k).collect() };
        for l in levels {
            s += &format!("{l},{},{}\n", cell(closed.as_ref().map(|c| c[l])), oracle.probs[l]);
        }
        s
    };
    finish(&a.out, &report, invocation, csv, failures)
}

fn cmd_correlations(a: CorrelationArgs, invocation: &[String]) -> Result<()> {
    positive("--tolerance", a.tolerance)?;
    let (g, source) = a.graph.build()?;
    let points = SiteSet::new(a.points.clone(), g.n_sites)?;
    if points.is_empty() {
        bail_input!("--points needs at least one site");
    }
    let req = CorrelationRequest { points: points.clone(), centered: a.centered };
    let (value, method) = if g.is_homogeneous_segment() {
        (n_point_correlation(&Segment::from_graph(&g)?, g.rho_left, g.rho_right, &req)?, "closed_form")
    } else {
        (n_point_correlation_graph(&g, &req)?, "dual_absorption")
    };
    let oracle = if a.check {
        let sd = solve_stationary(&g)?;
        Some(if a.centered { sd.centered_moment(points.sites()) } else { sd.product_moment(points.mask()) })
    } else {
        None
    };
    let pairs: Vec<(&str, f64)> = oracle.map(|o| ("discrepancy", (o - value).abs())).into_iter().collect();
    let failures = failed(&pairs, a.tolerance);
    let report = Report {
        command: "correlations",
        params: json!({ "source": source, "points": points.sites(), "centered": a.centered, "check": a.check, "tolerance": a.tolerance }),
        seed: None,
        graph: Some(g),
        results: json!({ "value": value, "method": method, "oracle": oracle, "discrepancy": pairs.first().map(|p| p.1) }),
        residuals: residuals(&pairs),
        pass: failures.is_empty(),
    };
    let csv = || {
        let pts: Vec<String> = points.sites().iter().map(usize::to_string).collect();
        let mut s = String::from("points,centered,value,oracle\n");
        s += &format!("{},{},{value},{}\n", pts.join(";"), a.centered, oracle.map_or(String::new(), |o| o.to_string()));
        s
    };
    finish(&a.out, &report, invocation, csv, failures)
}

fn parse_sites(text: &str, n_sites: usize) -> Result<SiteSet> {
    let sites = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Input(format!("bad site list {text:?}"))))
        .collect::<Result<Vec<usize>>>()?;
    Ok(SiteSet::new(sites, n_sites)?)
}

fn open_events(path: &Path) -> Result<EventCsv<BufWriter<File>>> {
    let f = File::create(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    Ok(EventCsv::new(BufWriter::new(f)))
}

fn close_events(log: EventCsv<BufWriter<File>>, path: &Path) -> Result<()> {
    log.finish().map(drop).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn with_reference(e: &sepness_core::sim::McEstimate, reference: Option<f64>) -> Value {
    let mut v = estimate_json(e);
    if let (Some(r), Value::Object(m)) = (reference, &mut v) {
        m.insert("reference".into(), json!(r));
        m.insert("z".into(), json!(e.z_score(r)));
    }
    v
}

fn cmd_simulate(a: SimulateArgs, invocation: &[String]) -> Result<()> {
    let (g, source) = a.graph.build()?;
    let base = RngStream::new(a.seed, a.stream);
    if a.mode != Mode::Sep && a.replicas < 2 {
        bail_input!("--replicas must be at least 2");
    }
    let mut params = json!({
        "source": source,
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "seed": a.seed,
        "stream": a.stream,
        "rng": RNG_ALGORITHM,
    });
    let set = |params: &mut Value, k: &str, v: Value| {
        params.as_object_mut().expect("object").insert(k.into(), v);
    };
    let mut within = true;
    let mut check = |z: f64| within &= z <= MC_SIGMAS;
    let (results, csv) = match a.mode {
        Mode::Sep => {
            let observables = if a.observe.is_empty() {
                (1..=g.n_sites).map(|x| SiteSet::new(vec![x], g.n_sites)).collect::<sepness_core::Result<Vec<_>>>()?
            } else {
                a.observe.iter().map(|t| parse_sites(t, g.n_sites)).collect::<Result<Vec<_>>>()?
            };
            let opts = SepOptions { burn_in: a.burn_in, batches: a.batches };
            let eta0 = OccupancyConfig::from_bits(0, g.n_sites)?;
            let run = match &a.events {
                Some(path) => {
                    let mut log = open_events(path)?;
                    let run = simulate_sep(&g, &eta0, a.t_max, &base, &observables, opts, &mut log)?;
                    close_events(log, path)?;
                    run
                }
                None => simulate_sep(&g, &eta0, a.t_max, &base, &observables, opts, &mut ())?,
            };
            let sd = if g.n_sites <= REFERENCE_MAX_SITES { Some(solve_stationary(&g)?) } else { None };
            set(&mut params, "t_max", json!(run.t_max));
            set(&mut params, "burn_in", json!(run.burn_in));
            set(&mut params, "batches", json!(a.batches));
            let mut rows = String::from("sites,mean,stderr,n,reference\n");
            let mut list = Vec::new();
            for (obs, e) in observables.iter().zip(&run.estimates) {
                let reference = sd.as_ref().map(|s| s.product_moment(obs.mask()));
                if let Some(r) = reference {
                    check(e.z_score(r));
                }
                let mut v = with_reference(e, reference);
                v["sites"] = json!(obs.sites());
                list.push(v);
                let pts: Vec<String> = obs.sites().iter().map(usize::to_string).collect();
                rows += &format!("{},{},{},{},{}\n", pts.join(";"), e.mean, e.stderr, e.n_samples, reference.map_or(String::new(), |r| r.to_string()));
            }
            (json!({ "observables": list, "events": run.events }), rows)
        }
        Mode::Dual => {
            if a.sites.is_empty() {
                bail_input!("--mode dual needs --sites");
            }
            let start = SiteSet::new(a.sites.clone(), g.n_sites)?;
            if let Some(path) = &a.events {
                let mut log = open_events(path)?;
                simulate_dual_logged(&g, &start, &mut base.replica(0).rng(), &mut log)?;
                close_events(log, path)?;
            }
            let f = dual_frequencies(&g, &start, a.replicas, &base, None)?;
            let reference = if g.n_sites <= REFERENCE_MAX_SITES || g.is_homogeneous_segment() { Some(dual_reference(&g, &start)?) } else { None };
            set(&mut params, "sites", json!(start.sites()));
            set(&mut params, "replicas", json!(a.replicas));
            let mut rows = String::from("level,mean,stderr,n,reference\n");
            let mut levels = Vec::new();
            for (l, e) in f.levels.iter().enumerate() {
                let r = reference.as_ref().map(|r| r[l]);
                if let Some(r) = r {
                    check(e.z_score(r));
                }
                let mut v = with_reference(e, r);
                v["level"] = json!(l);
                levels.push(v);
                rows += &format!("{l},{},{},{},{}\n", e.mean, e.stderr, e.n_samples, r.map_or(String::new(), |r| r.to_string()));
            }
            let k = start.len();
            (json!({ "levels": levels, "all_at_n": with_reference(&f.levels[k], reference.as_ref().map(|r| r[k])), "counts": f.counts }), rows)
        }
        Mode::Stirring => {
            if g.n_sites > STIRRING_TABLE_MAX_SITES {
                return Err(sepness_core::Error::Capacity(format!("stirring tables are limited to {STIRRING_TABLE_MAX_SITES} bulk sites")).into());
            }
            let f = stirring_frequencies(&g, a.replicas, &base, None)?;
            let exact = if g.n_sites <= REFERENCE_MAX_SITES { Some(mixture_weights(&g, WeightOracle::Auto)?) } else { None };
            set(&mut params, "replicas", json!(a.replicas));
            let mut rows = String::from("sites,F_hat,stderr,n,F\n");
            let mut table = Vec::new();
            for (mask, e) in f.weights.iter().enumerate() {
                let sites = SiteSet::from_mask(mask as u64);
                let r = exact.as_ref().map(|w| w.weights[mask]);
                if let Some(r) = r {
                    check(e.z_score(r));
                }
                let mut v = with_reference(e, r);
                v["sites"] = json!(sites.sites());
                table.push(v);
                let pts: Vec<String> = sites.sites().iter().map(usize::to_string).collect();
                rows += &format!("{},{},{},{},{}\n", pts.join(";"), e.mean, e.stderr, e.n_samples, r.map_or(String::new(), |r| r.to_string()));
            }
            let chi = exact.as_ref().map(|w| chi_square_test(&f.counts, &w.weights)).transpose()?;
            let chi = chi.map(|t| json!({ "statistic": t.statistic, "dof": t.degrees_of_freedom, "p_value": t.p_value }));
            (json!({ "weights": table, "chi_square": chi }), rows)
        }
        Mode::Ninja => {
            if !g.is_homogeneous_segment() || g.omega_left != 1.0 || g.omega_right != 1.0 {
                return Err(sepness_core::Error::Unsupported("the ninja process lives on the unit segment".into()).into());
            }
            let Some(ninja) = a.ninja else {
                bail_input!("--mode ninja needs --ninja SITE");
            };
            let big_n = g.big_n();
            let start = NinjaState::new(big_n, a.sites.clone(), ninja)?;
            let f = ninja_frequencies(big_n, &start, a.replicas, &base, None)?;
            let predicted = ninja_conditional_reference(big_n, &start);
            let unlabelled = ninja_unlabelled_reference(big_n, &start)?;
            let chi = chi_square_test(&f.unlabelled_counts, &unlabelled)?;
            if let Some(e) = &f.ninja_at_zero_given {
                check(e.z_score(predicted));
            }
            set(&mut params, "labels", json!(start.labels));
            set(&mut params, "ninja", json!(ninja));
            set(&mut params, "replicas", json!(a.replicas));
            let mut rows = String::from("quantity,mean,stderr,n,reference\n");
            rows += &format!("all_labels_at_n,{},{},{},\n", f.all_labels_at_n.mean, f.all_labels_at_n.stderr, f.all_labels_at_n.n_samples);
            if let Some(e) = &f.ninja_at_zero_given {
                rows += &format!("ninja_at_zero_given_labels_at_n,{},{},{},{predicted}\n", e.mean, e.stderr, e.n_samples);
            }
            let results = json!({
                "all_labels_at_n": estimate_json(&f.all_labels_at_n),
                "ninja_at_zero_given_labels_at_n": f.ninja_at_zero_given.as_ref().map(|e| with_reference(e, Some(predicted))),
                "conditioned_runs": f.conditioned,
                "unlabelled_counts": f.unlabelled_counts,
                "unlabelled_reference": unlabelled,
                "label_forgetting_chi_square": { "statistic": chi.statistic, "dof": chi.degrees_of_freedom, "p_value": chi.p_value },
            });
            (results, rows)
        }
    };
    let report = Report { command: "simulate", params, seed: Some(a.seed), graph: Some(g), results, residuals: Map::new(), pass: within };
    finish(&a.out, &report, invocation, || csv, Vec::new())
}

fn cmd_verify(a: VerifyArgs, invocation: &[String]) -> Result<()> {
    if a.replicas < 2 {
        bail_input!("--replicas must be at least 2");
    }
    if a.max_n < 2 {
        bail_input!("--max-n must be at least 2");
    }
    let opts = VerifyOptions {
        segment_n: a.segment_n,
        omega: a.omega_left.zip(a.omega_right),
        max_n: a.max_n,
        seed: a.seed,
        replicas: a.replicas,
        threads: None,
    };
    let checks = run_suite(a.suite, &opts)?;
    let failures: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    let report = Report {
        command: "verify",
        params: json!({
            "suite": a.suite.name(),
            "segment_n": a.segment_n,
            "omega": opts.omega,
            "max_n": a.max_n,
            "replicas": a.replicas,
            "rng": RNG_ALGORITHM,
        }),
        seed: Some(a.seed),
        graph: None,
        results: json!({ "checks": checks }),
        residuals: checks.iter().map(|c| (c.name.clone(), json!(c.value))).collect(),
        pass: failures.is_empty(),
    };
    let csv = || {
        let mut s = String::from("suite,name,value,rule,threshold,pass\n");
        for c in &checks {
            let rule = serde_json::to_value(c.rule).expect("rule serializes");
            s += &format!("{},\"{}\",{},{},{},{}\n", c.suite, c.name.replace('"', "\"\""), c.value, rule.as_str().unwrap_or_default(), c.threshold, c.pass);
        }
        s
    };
    finish(&a.out, &report, invocation, csv, failures)
}
