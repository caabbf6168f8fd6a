use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{Edge, GraphMode, LaggedGraph, Mark, MiddleMark, Node};
use super::{DiscoveryConfig, LaggedData};
use crate::citest::CiTestResult;
use crate::error::Result;
use crate::panel::TimeSeriesPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentEntry {
    pub node: Node,
    /// |statistic| of the last PC1 test of this candidate.
    pub strength: f64,
    pub p_value: f64,
}

/// Selected lagged parents per target variable, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSets {
    pub parents: Vec<Vec<ParentEntry>>,
}

impl ParentSets {
    pub fn of(&self, var: usize) -> impl Iterator<Item = Node> + '_ {
        self.parents[var].iter().map(|e| e.node)
    }
}

/// Descending strength; ties by variable index, then lag.
pub(crate) fn by_strength(a: &ParentEntry, b: &ParentEntry) -> Ordering {
    b.strength
        .partial_cmp(&a.strength)
        .unwrap_or(Ordering::Equal)
        .then(a.node.var.cmp(&b.node.var))
        .then(a.node.lag.cmp(&b.node.lag))
}

fn pc1_target(data: &LaggedData<'_>, target: usize, config: &DiscoveryConfig) -> Result<Vec<ParentEntry>> {
    let y = Node::new(target, 0);
    let mut cands: Vec<ParentEntry> = (0..data.n_vars())
        .flat_map(|v| (1..=config.tau_max).map(move |lag| Node::new(v, lag)))
        .map(|node| ParentEntry { node, strength: f64::INFINITY, p_value: 0.0 })
        .collect();
    let mut p = 0;
    loop {
        if cands.is_empty() || p >= cands.len() || config.max_cond_dim.is_some_and(|m| p > m) {
            break;
        }
        let snapshot = cands.clone();
        let results: Vec<CiTestResult> = snapshot
            .par_iter()
            .map(|c| {
                let cond: Vec<Node> = snapshot.iter().filter(|o| o.node != c.node).take(p).map(|o| o.node).collect();
                data.test(c.node, y, &cond)
            })
            .collect::<Result<_>>()?;
        cands = snapshot
            .into_iter()
            .zip(results)
            .filter(|(_, r)| r.p_value <= config.alpha_pc)
            .map(|(c, r)| ParentEntry { node: c.node, strength: r.statistic.abs(), p_value: r.p_value })
            .collect();
        cands.sort_by(by_strength);
        p += 1;
    }
    Ok(cands)
}

/// PC1 condition selection for every variable.
pub fn pc1_select_parents(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<ParentSets> {
    let data = LaggedData::new(panel, config)?;
    pc1_with(&data, config)
}

pub(crate) fn pc1_with(data: &LaggedData<'_>, config: &DiscoveryConfig) -> Result<ParentSets> {
    let parents = (0..data.n_vars()).map(|j| pc1_target(data, j, config)).collect::<Result<Vec<_>>>()?;
    Ok(ParentSets { parents })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MciCell {
    pub source: Node,
    pub target: usize,
    pub result: CiTestResult,
}

/// MCI results for every admissible `(source var, lag, target var)` cell.
/// Contemporaneous pairs appear once, with the lower variable index as source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MciResults {
    pub names: Vec<String>,
    pub tau_max: usize,
    pub cells: Vec<MciCell>,
}

impl MciResults {
    pub fn get(&self, source_var: usize, lag: usize, target_var: usize) -> Option<&CiTestResult> {
        let (s, t) =
            if lag == 0 && source_var > target_var { (target_var, source_var) } else { (source_var, target_var) };
        self.cells.iter().find(|c| c.source == Node::new(s, lag) && c.target == t).map(|c| &c.result)
    }
}

pub(crate) fn mci_conditions(parents: &ParentSets, source: Node, target: usize, tau_max: usize) -> Vec<Node> {
    let mut cond: Vec<Node> = parents.of(target).filter(|n| *n != source).collect();
    for p in parents.of(source.var) {
        let shifted = Node::new(p.var, p.lag + source.lag);
        if shifted.lag <= tau_max && !cond.contains(&shifted) {
            cond.push(shifted);
        }
    }
    cond
}

/// MCI tests: each cell conditions on the target's parents (minus the source)
/// and the source's parents shifted by the source lag. Shifted parents beyond
/// `tau_max` fall outside the shared window and are dropped.
pub fn mci_matrix(panel: &TimeSeriesPanel, parents: &ParentSets, config: &DiscoveryConfig) -> Result<MciResults> {
    let data = LaggedData::new(panel, config)?;
    mci_with(&data, parents, config)
}

pub(crate) fn mci_with(data: &LaggedData<'_>, parents: &ParentSets, config: &DiscoveryConfig) -> Result<MciResults> {
    let n = data.n_vars();
    let mut cells: Vec<(Node, usize)> = Vec::new();
    for target in 0..n {
        for lag in 0..=config.tau_max {
            for var in 0..n {
                if lag == 0 && var >= target {
                    continue;
                }
                cells.push((Node::new(var, lag), target));
            }
        }
    }
    let results: Vec<CiTestResult> = cells
        .par_iter()
        .map(|&(source, target)| {
            let cond = mci_conditions(parents, source, target, config.tau_max);
            data.test(source, Node::new(target, 0), &cond)
        })
        .collect::<Result<_>>()?;
    Ok(MciResults {
        names: data_names(data),
        tau_max: config.tau_max,
        cells: cells
            .into_iter()
            .zip(results)
            .map(|((source, target), result)| MciCell { source, target, result })
            .collect(),
    })
}

fn data_names(data: &LaggedData<'_>) -> Vec<String> {
    data.panel.names().to_vec()
}

/// Thresholds MCI results at `alpha`. Lagged links become `tail -> arrow`,
/// contemporaneous links stay `circle - circle`.
pub fn graph_from_mci(mci: &MciResults, alpha: f64) -> LaggedGraph {
    let edges = mci
        .cells
        .iter()
        .filter(|c| c.result.p_value <= alpha)
        .map(|c| {
            let lagged = c.source.lag > 0;
            Edge {
                source: c.source,
                target: Node::new(c.target, 0),
                mark_source: if lagged { Mark::Tail } else { Mark::Circle },
                mark_target: if lagged { Mark::Arrow } else { Mark::Circle },
                middle_mark: MiddleMark::Confirmed,
                statistic: c.result.statistic,
                p_value: c.result.p_value,
            }
        })
        .collect();
    let mut g = LaggedGraph { mode: GraphMode::Pcmci, tau_max: mci.tau_max, alpha, names: mci.names.clone(), edges };
    g.sort_edges();
    g
}

/// PC1 followed by MCI, thresholded at `alpha_mci`.
pub fn run_pcmci(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<LaggedGraph> {
    let data = LaggedData::new(panel, config)?;
    let parents = pc1_with(&data, config)?;
    let mci = mci_with(&data, &parents, config)?;
    Ok(graph_from_mci(&mci, config.alpha_mci))
}
