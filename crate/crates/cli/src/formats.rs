//! JSON and CSV encodings of graphs, exact tables and Monte Carlo results.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sepness_core::closed_forms::MixtureWeights;
use sepness_core::exact::{AbsorptionTable, StationaryDistribution};
use sepness_core::sim::{EventKind, EventSink, McEstimate};
use sepness_core::{validate, Edge, Error, GraphSpec};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// On-disk graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub n_sites: usize,
    /// `[x, y, conductance]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    pub omega_left: f64,
    pub omega_right: f64,
    pub rho_left: f64,
    pub rho_right: f64,
}

impl From<&GraphSpec> for GraphDoc {
    fn from(g: &GraphSpec) -> Self {
        Self {
            n_sites: g.n_sites,
            edges: g.edges.iter().map(|e| (e.x, e.y, e.weight)).collect(),
            omega_left: g.omega_left,
            omega_right: g.omega_right,
            rho_left: g.rho_left,
            rho_right: g.rho_right,
        }
    }
}

impl GraphDoc {
    pub fn to_graph(&self) -> GraphSpec {
        GraphSpec {
            n_sites: self.n_sites,
            edges: self.edges.iter().map(|&(x, y, w)| Edge::new(x, y, w)).collect(),
            omega_left: self.omega_left,
            omega_right: self.omega_right,
            rho_left: self.rho_left,
            rho_right: self.rho_right,
        }
    }

    /// Edge endpoints ordered and edges sorted, so equal graphs print equally.
    pub fn canonical(&self) -> Self {
        let mut edges: Vec<_> = self.edges.iter().map(|&(x, y, w)| (x.min(y), x.max(y), w)).collect();
        edges.sort_by_key(|e| (e.0, e.1));
        Self { edges, ..self.clone() }
    }
}

/// Reads and validates a graph file.
pub fn read_graph(path: &Path) -> Result<GraphSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let doc: GraphDoc =
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.display().to_string(), source })?;
    let g = doc.to_graph();
    validate(&g).map_err(Error::InvalidGraph)?;
    Ok(g)
}

pub fn write_graph(path: &Path, g: &GraphSpec) -> Result<()> {
    let text = serde_json::to_string_pretty(&GraphDoc::from(g)).expect("graph serializes");
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Hex SHA-256 of the canonical compact JSON of the graph.
pub fn graph_hash(g: &GraphSpec) -> String {
    let text = serde_json::to_string(&GraphDoc::from(g).canonical()).expect("graph serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn estimate_json(e: &McEstimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "n": e.n_samples, "half_width_99": e.half_width_99 })
}

pub fn stationary_json(sd: &StationaryDistribution) -> Value {
    json!({ "n_sites": sd.graph.n_sites, "graph_hash": graph_hash(&sd.graph), "probabilities": sd.probs })
}

pub fn stationary_csv(sd: &StationaryDistribution) -> String {
    let mut out = String::from("config_bits,probability\n");
    for (s, p) in sd.probs.iter().enumerate() {
        writeln!(out, "{s},{p}").unwrap();
    }
    out
}

pub fn absorption_json(t: &AbsorptionTable) -> Value {
    json!({ "start": t.start.sites(), "probabilities": t.probs })
}

pub fn mixture_json(w: &MixtureWeights) -> Value {
    let weights: Vec<Value> = w.iter().map(|(i, f)| json!({ "sites": i.sites(), "F": f })).collect();
    json!({ "n_sites": w.n_sites, "weights": weights })
}

/// One row per subset, sites joined by `;` (empty for the empty set).
pub fn mixture_csv(w: &MixtureWeights) -> String {
    let mut out = String::from("sites,F\n");
    for (i, f) in w.iter() {
        let sites: Vec<String> = i.sites().iter().map(usize::to_string).collect();
        writeln!(out, "{},{f}", sites.join(";")).unwrap();
    }
    out
}

/// Streams events as CSV rows `time,event_type,site_from,site_to`. The first
/// write error is kept and reported by [`EventCsv::finish`].
pub struct EventCsv<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> EventCsv<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "time,event_type,site_from,site_to").err();
        Self { out, error }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventSink for EventCsv<W> {
    fn record(&mut self, time: f64, kind: EventKind, from: usize, to: usize) {
        if self.error.is_none() {
            self.error = writeln!(self.out, "{time},{},{from},{to}", kind.name()).err();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sepness_core::homogeneous_segment;

    #[test]
    fn graph_round_trip() {
        let mut g = homogeneous_segment(3, 0.5, 2.0, 0.2, 0.8).unwrap();
        g.edges.push(Edge::new(3, 1, 0.25));
        let text = serde_json::to_string(&GraphDoc::from(&g)).unwrap();
        let back: GraphDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_graph(), g);
    }

    #[test]
    fn hash_ignores_edge_order() {
        let g = homogeneous_segment(4, 1.0, 1.0, 0.2, 0.8).unwrap();
        let mut h = g.clone();
        h.edges.reverse();
        h.edges[0] = Edge::new(4, 3, 1.0);
        assert_eq!(graph_hash(&g), graph_hash(&h));
        assert_ne!(graph_hash(&g), graph_hash(&g.with_densities(0.3, 0.8)));
        assert_eq!(graph_hash(&g).len(), 64);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"n_sites":1,"edges":[],"omega_left":1,"omega_right":1,"rho_left":0.2,"rho_right":0.8,"x":1}"#;
        assert!(serde_json::from_str::<GraphDoc>(text).is_err());
    }

    #[test]
    fn event_rows() {
        let mut log = EventCsv::new(Vec::new());
        log.record(0.5, EventKind::Hop, 1, 2);
        log.record(1.25, EventKind::Absorb, 1, 0);
        let text = String::from_utf8(log.finish().unwrap()).unwrap();
        assert_eq!(text, "time,event_type,site_from,site_to\n0.5,hop,1,2\n1.25,absorb,1,0\n");
    }
}
