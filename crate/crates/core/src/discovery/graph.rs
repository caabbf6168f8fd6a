use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A variable at a lag: `(var, lag)` stands for `var(t - lag)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub var: usize,
    pub lag: usize,
}

impl Node {
    pub fn new(var: usize, lag: usize) -> Self {
        Node { var, lag }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiddleMark {
    Unconfirmed,
    Confirmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphMode {
    #[serde(rename = "pcmci")]
    Pcmci,
    #[serde(rename = "lpcmci-lite")]
    LpcmciLite,
}

impl GraphMode {
    pub fn label(self) -> &'static str {
        match self {
            GraphMode::Pcmci => "pcmci",
            GraphMode::LpcmciLite => "lpcmci-lite",
        }
    }
}

/// An edge between an earlier-or-simultaneous source and a target at lag 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: Node,
    pub target: Node,
    pub mark_source: Mark,
    pub mark_target: Mark,
    pub middle_mark: MiddleMark,
    pub statistic: f64,
    pub p_value: f64,
}

/// Lag-resolved partial ancestral graph over `(variable, lag)` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedGraph {
    pub mode: GraphMode,
    pub tau_max: usize,
    pub alpha: f64,
    pub names: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    var: String,
    lag: usize,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    src: NodeJson,
    dst: NodeJson,
    mark_src: Mark,
    mark_dst: Mark,
    stat: f64,
    pval: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    mode: GraphMode,
    tau_max: usize,
    alpha: f64,
    nodes: Vec<NodeJson>,
    edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Json,
    Dot,
}

impl LaggedGraph {
    pub fn node_label(&self, n: Node) -> String {
        if n.lag == 0 {
            format!("{}(t)", self.names[n.var])
        } else {
            format!("{}(t-{})", self.names[n.var], n.lag)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..=self.tau_max).flat_map(move |lag| (0..self.names.len()).map(move |v| Node::new(v, lag)))
    }

    pub fn is_finalized(&self) -> bool {
        self.edges.iter().all(|e| e.middle_mark == MiddleMark::Confirmed)
    }

    /// Canonical edge order: target variable, then source lag, then source variable.
    pub fn sort_edges(&mut self) {
        self.edges.sort_by_key(|e| (e.target.var, e.target.lag, e.source.lag, e.source.var));
    }

    pub fn find(&self, source: Node, target: Node) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| (e.source == source && e.target == target) || (e.source == target && e.target == source))
    }

    /// Unordered `(source, target)` adjacencies, keyed by names, for comparing
    /// graphs built with different column orders.
    pub fn named_adjacencies(&self) -> std::collections::BTreeSet<(String, usize, String)> {
        self.edges
            .iter()
            .map(|e| {
                let (a, b) = (self.names[e.source.var].clone(), self.names[e.target.var].clone());
                let lag = e.source.lag - e.target.lag;
                if lag == 0 && b < a {
                    (b, 0, a)
                } else {
                    (a, lag, b)
                }
            })
            .collect()
    }

    /// Checks the structural invariants: targets sit at lag 0, lagged edges
    /// carry an arrowhead at the target, no lag-0 self-edges.
    pub fn check_invariants(&self) -> Result<()> {
        for e in &self.edges {
            if e.target.lag != 0 || e.source.lag > self.tau_max {
                return Err(Error::Structure(format!(
                    "edge {} -> {} violates lag layout",
                    self.node_label(e.source),
                    self.node_label(e.target)
                )));
            }
            if e.source.lag >= 1 && e.mark_target != Mark::Arrow {
                return Err(Error::Structure(format!(
                    "lagged edge {} -> {} lacks an arrowhead at the present",
                    self.node_label(e.source),
                    self.node_label(e.target)
                )));
            }
            if e.source.lag == 0 && e.source.var == e.target.var {
                return Err(Error::Structure("contemporaneous self-edge".into()));
            }
        }
        Ok(())
    }

    fn to_json_value(&self) -> GraphJson {
        let node = |n: Node| NodeJson { var: self.names[n.var].clone(), lag: n.lag };
        GraphJson {
            mode: self.mode,
            tau_max: self.tau_max,
            alpha: self.alpha,
            nodes: self.nodes().map(node).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    src: node(e.source),
                    dst: node(e.target),
                    mark_src: e.mark_source,
                    mark_dst: e.mark_target,
                    stat: e.statistic,
                    pval: e.p_value,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        if !self.is_finalized() {
            return Err(Error::NotFinalized("edges with unconfirmed middle marks".into()));
        }
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GraphJson = serde_json::from_str(text)?;
        let mut names: Vec<String> = Vec::new();
        for n in &g.nodes {
            if !names.contains(&n.var) {
                names.push(n.var.clone());
            }
        }
        let lookup = |n: &NodeJson| -> Result<Node> {
            let var = names
                .iter()
                .position(|x| *x == n.var)
                .ok_or_else(|| Error::Structure(format!("edge references unknown node {}", n.var)))?;
            Ok(Node::new(var, n.lag))
        };
        let edges = g
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    source: lookup(&e.src)?,
                    target: lookup(&e.dst)?,
                    mark_source: e.mark_src,
                    mark_target: e.mark_dst,
                    middle_mark: MiddleMark::Confirmed,
                    statistic: e.stat,
                    p_value: e.pval,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = LaggedGraph { mode: g.mode, tau_max: g.tau_max, alpha: g.alpha, names, edges };
        graph.check_invariants()?;
        Ok(graph)
    }

    pub fn to_dot(&self) -> Result<String> {
        if !self.is_finalized() {
            return Err(Error::NotFinalized("edges with unconfirmed middle marks".into()));
        }
        let arrow = |m: Mark| match m {
            Mark::Tail => "none",
            Mark::Arrow => "normal",
            Mark::Circle => "odot",
        };
        let mut out = String::new();
        writeln!(out, "digraph lagged_graph {{").unwrap();
        writeln!(out, "  // mode={} tau_max={} alpha={}", self.mode.label(), self.tau_max, self.alpha).unwrap();
        for n in self.nodes() {
            writeln!(out, "  \"{}\";", self.node_label(n)).unwrap();
        }
        for e in &self.edges {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=both, arrowtail={}, arrowhead={}, label=\"p={:.2e}\"];",
                self.node_label(e.source),
                self.node_label(e.target),
                arrow(e.mark_source),
                arrow(e.mark_target),
                e.p_value
            )
            .unwrap();
        }
        writeln!(out, "}}").unwrap();
        Ok(out)
    }
}

/// Serializes a finalized graph.
pub fn export_graph(graph: &LaggedGraph, format: GraphFormat) -> Result<String> {
    match format {
        GraphFormat::Json => graph.to_json(),
        GraphFormat::Dot => graph.to_dot(),
    }
}
