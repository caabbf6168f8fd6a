use rayon::prelude::*;

use super::graph::{Edge, GraphMode, LaggedGraph, Mark, MiddleMark, Node};
use super::pcmci::{by_strength, ParentEntry};
use super::{DiscoveryConfig, LaggedData};
use crate::citest::CiTestResult;
use crate::error::Result;
use crate::panel::TimeSeriesPanel;

#[derive(Debug, Clone)]
struct Link {
    source: Node,
    target: usize,
    removed: bool,
    middle: MiddleMark,
    strength: f64,
    last: Option<CiTestResult>,
    /// Conditioning set that separated the pair, relative to the target's time.
    sepset: Option<Vec<Node>>,
}

/// Stepwise LPCMCI-lite engine. [`LpcmciEngine::run`] drives it to completion;
/// the intermediate state can be inspected through [`LpcmciEngine::snapshot`].
pub struct LpcmciEngine<'a> {
    data: LaggedData<'a>,
    config: DiscoveryConfig,
    links: Vec<Link>,
    level: usize,
}

impl<'a> LpcmciEngine<'a> {
    /// Fully connected start: every lagged `(source, lag, target)` triple and
    /// every unordered contemporaneous pair.
    pub fn new(panel: &'a TimeSeriesPanel, config: &DiscoveryConfig) -> Result<Self> {
        let data = LaggedData::new(panel, config)?;
        let n = data.n_vars();
        let mut links = Vec::new();
        for target in 0..n {
            for lag in 0..=config.tau_max {
                for var in 0..n {
                    if lag == 0 && var >= target {
                        continue;
                    }
                    links.push(Link {
                        source: Node::new(var, lag),
                        target,
                        removed: false,
                        middle: MiddleMark::Unconfirmed,
                        strength: f64::INFINITY,
                        last: None,
                        sepset: None,
                    });
                }
            }
        }
        Ok(LpcmciEngine { data, config: config.clone(), links, level: 0 })
    }

    pub fn active_links(&self) -> usize {
        self.links.iter().filter(|l| !l.removed).count()
    }

    /// Current state as a (possibly unfinalized) graph with initial marks.
    pub fn snapshot(&self) -> LaggedGraph {
        let edges = self.links.iter().filter(|l| !l.removed).map(initial_edge).collect();
        LaggedGraph {
            mode: GraphMode::LpcmciLite,
            tau_max: self.config.tau_max,
            alpha: self.config.alpha_mci,
            names: self.data.panel.names().to_vec(),
            edges,
        }
    }

    fn find(&self, source: Node, target: usize) -> Option<&Link> {
        let (source, target) =
            if source.lag == 0 && source.var > target { (Node::new(target, 0), source.var) } else { (source, target) };
        self.links.iter().find(|l| l.source == source && l.target == target)
    }

    /// Active lagged neighbours of `var(t)`; these cannot be its descendants.
    fn lagged_parents(&self, var: usize) -> Vec<ParentEntry> {
        let mut v: Vec<ParentEntry> = self
            .links
            .iter()
            .filter(|l| !l.removed && l.target == var && l.source.lag > 0)
            .map(|l| ParentEntry {
                node: l.source,
                strength: l.strength,
                p_value: l.last.as_ref().map_or(0.0, |r| r.p_value),
            })
            .collect();
        v.sort_by(by_strength);
        v
    }

    fn confirmed_parents(&self, var: usize) -> Vec<Node> {
        self.links
            .iter()
            .filter(|l| !l.removed && l.target == var && l.source.lag > 0 && l.middle == MiddleMark::Confirmed)
            .map(|l| l.source)
            .collect()
    }

    /// Confirmed parents of both endpoints, the source's shifted by its lag.
    fn default_conditions(&self, link: &Link) -> Vec<Node> {
        let mut d: Vec<Node> = self.confirmed_parents(link.target).into_iter().filter(|n| *n != link.source).collect();
        for p in self.confirmed_parents(link.source.var) {
            let shifted = Node::new(p.var, p.lag + link.source.lag);
            if shifted.lag <= self.config.tau_max && shifted != link.source && !d.contains(&shifted) {
                d.push(shifted);
            }
        }
        d
    }

    /// Candidate extra conditions: lagged neighbours of the target (and of the
    /// source, for contemporaneous pairs), strongest first.
    fn candidate_pool(&self, link: &Link, defaults: &[Node]) -> Vec<Node> {
        let mut pool = self.lagged_parents(link.target);
        if link.source.lag == 0 {
            for e in self.lagged_parents(link.source.var) {
                if !pool.iter().any(|p| p.node == e.node) {
                    pool.push(e);
                }
            }
            pool.sort_by(by_strength);
        }
        pool.into_iter().map(|e| e.node).filter(|n| *n != link.source && !defaults.contains(n)).collect()
    }

    fn done(&self) -> bool {
        self.config.max_cond_dim.is_some_and(|m| self.level > m)
            || self.links.iter().all(|l| l.removed || l.middle == MiddleMark::Confirmed)
    }

    /// One removal sweep at the current conditioning level. Tests within the
    /// sweep run in parallel against a frozen graph; updates are applied
    /// afterwards. Returns `false` once every surviving link is confirmed.
    pub fn sweep(&mut self) -> Result<bool> {
        if self.done() {
            return Ok(false);
        }
        let p = self.level;
        let mut jobs: Vec<(usize, Vec<Node>)> = Vec::new();
        let mut confirm = Vec::new();
        for (idx, link) in self.links.iter().enumerate() {
            if link.removed || link.middle == MiddleMark::Confirmed {
                continue;
            }
            let defaults = self.default_conditions(link);
            let pool = self.candidate_pool(link, &defaults);
            if p > pool.len() {
                confirm.push(idx);
                continue;
            }
            let mut cond = defaults;
            cond.extend_from_slice(&pool[..p]);
            jobs.push((idx, cond));
        }
        let results: Vec<CiTestResult> = jobs
            .par_iter()
            .map(|(idx, cond)| {
                let l = &self.links[*idx];
                self.data.test(l.source, Node::new(l.target, 0), cond)
            })
            .collect::<Result<_>>()?;
        for ((idx, cond), r) in jobs.into_iter().zip(results) {
            let link = &mut self.links[idx];
            if r.p_value > self.config.alpha_mci {
                link.removed = true;
                link.sepset = Some(cond);
            } else {
                link.strength = r.statistic.abs();
            }
            link.last = Some(r);
        }
        for idx in confirm {
            self.links[idx].middle = MiddleMark::Confirmed;
        }
        self.level += 1;
        if self.done() {
            for l in &mut self.links {
                l.middle = MiddleMark::Confirmed;
            }
            return Ok(false);
        }
        Ok(true)
    }

    /// Final pruning: every surviving link is re-tested with the full default
    /// conditions of both endpoints.
    fn final_pruning(&mut self) -> Result<()> {
        let jobs: Vec<(usize, Vec<Node>)> = self
            .links
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.removed)
            .map(|(i, l)| (i, self.default_conditions(l)))
            .collect();
        let results: Vec<CiTestResult> = jobs
            .par_iter()
            .map(|(idx, cond)| {
                let l = &self.links[*idx];
                self.data.test(l.source, Node::new(l.target, 0), cond)
            })
            .collect::<Result<_>>()?;
        for ((idx, cond), r) in jobs.into_iter().zip(results) {
            let link = &mut self.links[idx];
            if r.p_value > self.config.alpha_mci {
                link.removed = true;
                link.sepset = Some(cond);
            }
            link.last = Some(r);
        }
        Ok(())
    }

    /// Whether `c(t)` lies in the separating set of the non-adjacent pair
    /// `(a, b)` (lags relative to `c`). `None` when the pair is out of reach
    /// or still adjacent.
    fn separated_without(&self, a: Node, b: Node, c: usize) -> Option<bool> {
        let (early, late) = if a.lag > b.lag || (a.lag == b.lag && a.var < b.var) { (a, b) } else { (b, a) };
        let d = early.lag - late.lag;
        if d > self.config.tau_max {
            return None;
        }
        let link = self.find(Node::new(early.var, d), late.var)?;
        if !link.removed {
            return None;
        }
        let sepset = link.sepset.as_ref()?;
        // c(t) relative to late's time; it is only representable when late is at lag 0
        let contains = late.lag == 0 && sepset.contains(&Node::new(c, 0));
        Some(!contains)
    }

    fn orient(&self) -> LaggedGraph {
        let active: Vec<&Link> = self.links.iter().filter(|l| !l.removed).collect();
        let mut edges: Vec<Edge> = active.iter().map(|l| initial_edge(l)).collect();
        let n = self.data.n_vars();
        for c in 0..n {
            // neighbours of c(t) that may carry an arrowhead into it
            let nbrs: Vec<(Node, bool)> = active
                .iter()
                .filter_map(|l| {
                    if l.target == c {
                        Some((l.source, l.source.lag == 0))
                    } else if l.source.lag == 0 && l.source.var == c {
                        Some((Node::new(l.target, 0), true))
                    } else {
                        None
                    }
                })
                .collect();
            for i in 0..nbrs.len() {
                for j in (i + 1)..nbrs.len() {
                    let ((a, a_contemp), (b, b_contemp)) = (nbrs[i], nbrs[j]);
                    if !a_contemp && !b_contemp {
                        continue;
                    }
                    if self.separated_without(a, b, c) != Some(true) {
                        continue;
                    }
                    for (other, contemp) in [(a, a_contemp), (b, b_contemp)] {
                        if !contemp {
                            continue;
                        }
                        let e = edges
                            .iter_mut()
                            .find(|e| {
                                e.source.lag == 0
                                    && ((e.source.var == other.var && e.target.var == c)
                                        || (e.source.var == c && e.target.var == other.var))
                            })
                            .expect("contemporaneous neighbour has an edge");
                        if e.target.var == c {
                            e.mark_target = Mark::Arrow;
                        } else {
                            e.mark_source = Mark::Arrow;
                        }
                    }
                }
            }
        }
        for e in &mut edges {
            e.middle_mark = MiddleMark::Confirmed;
        }
        let mut g = LaggedGraph {
            mode: GraphMode::LpcmciLite,
            tau_max: self.config.tau_max,
            alpha: self.config.alpha_mci,
            names: self.data.panel.names().to_vec(),
            edges,
        };
        g.sort_edges();
        g
    }

    pub fn run(mut self) -> Result<LaggedGraph> {
        while self.sweep()? {}
        self.final_pruning()?;
        Ok(self.orient())
    }
}

fn initial_edge(l: &Link) -> Edge {
    let (stat, p) = l.last.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.statistic, r.p_value));
    Edge {
        source: l.source,
        target: Node::new(l.target, 0),
        mark_source: Mark::Circle,
        mark_target: if l.source.lag > 0 { Mark::Arrow } else { Mark::Circle },
        middle_mark: l.middle,
        statistic: stat,
        p_value: p,
    }
}

/// Runs LPCMCI-lite to completion.
pub fn run_lpcmci(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<LaggedGraph> {
    LpcmciEngine::new(panel, config)?.run()
}
