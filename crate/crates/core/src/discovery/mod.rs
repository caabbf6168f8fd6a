//! Time-lagged causal discovery.
//!
//! [`run_pcmci`] runs PC1 condition selection followed by MCI tests.
//! [`run_lpcmci`] runs a reduced latent-aware variant ("LPCMCI-lite"): it
//! starts fully connected, prunes with conditioning sets drawn from the
//! lagged neighbours (non-descendants) of the tested pair plus default
//! conditions from confirmed parents, tracks two-state middle marks, and only
//! orients contemporaneous colliders. It never asserts a tail mark.
//!
//! All tests share the sample window `t ∈ [tau_max, T)`, so every CI test
//! sees the same rows.

mod graph;
mod lpcmci;
mod pcmci;

pub use graph::{export_graph, Edge, GraphFormat, GraphMode, LaggedGraph, Mark, MiddleMark, Node};
pub use lpcmci::{run_lpcmci, LpcmciEngine};
pub use pcmci::{
    graph_from_mci, mci_matrix, pc1_select_parents, run_pcmci, MciCell, MciResults, ParentEntry, ParentSets,
};

use serde::{Deserialize, Serialize};

use crate::citest::{CiTest, CiTestKind, CiTestResult, GpdcConfig};
use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscoveryMode {
    Pcmci,
    Lpcmci,
}

impl std::str::FromStr for DiscoveryMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pcmci" => Ok(DiscoveryMode::Pcmci),
            "lpcmci" | "lpcmci-lite" => Ok(DiscoveryMode::Lpcmci),
            other => Err(format!("unknown discovery mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub tau_max: usize,
    pub alpha_pc: f64,
    pub alpha_mci: f64,
    pub ci_test: CiTestKind,
    /// Permutations for GPDC; ignored by ParCorr.
    pub n_perm: usize,
    pub max_cond_dim: Option<usize>,
    pub mode: DiscoveryMode,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            tau_max: 4,
            alpha_pc: 0.2,
            alpha_mci: 0.05,
            ci_test: CiTestKind::Parcorr,
            n_perm: 199,
            max_cond_dim: None,
            mode: DiscoveryMode::Pcmci,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_max < 1 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        for (name, a) in [("alpha_pc", self.alpha_pc), ("alpha_mci", self.alpha_mci)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("{name} = {a} outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn test(&self) -> CiTest {
        match self.ci_test {
            CiTestKind::Parcorr => CiTest::ParCorr,
            CiTestKind::Gpdc => CiTest::Gpdc(GpdcConfig { n_perm: self.n_perm, ..GpdcConfig::default() }),
        }
    }
}

/// Runs the engine selected by `config.mode`.
pub fn discover(panel: &TimeSeriesPanel, config: &DiscoveryConfig) -> Result<LaggedGraph> {
    match config.mode {
        DiscoveryMode::Pcmci => run_pcmci(panel, config),
        DiscoveryMode::Lpcmci => run_lpcmci(panel, config),
    }
}

/// Lagged views on a fully observed panel over the shared sample window.
pub(crate) struct LaggedData<'a> {
    panel: &'a TimeSeriesPanel,
    tau_max: usize,
    test: CiTest,
    seed: u64,
}

impl<'a> LaggedData<'a> {
    pub(crate) fn new(panel: &'a TimeSeriesPanel, config: &DiscoveryConfig) -> Result<Self> {
        config.validate()?;
        if !panel.is_fully_observed() {
            return Err(Error::Config(
                "discovery needs a fully observed panel; restrict to the longest complete span first".into(),
            ));
        }
        if panel.n_vars() == 0 {
            return Err(Error::Config("panel has no variables".into()));
        }
        if panel.len() <= 10 * config.tau_max {
            return Err(Error::SampleSize(format!(
                "T = {} must exceed 10 * tau_max = {}",
                panel.len(),
                10 * config.tau_max
            )));
        }
        Ok(LaggedData { panel, tau_max: config.tau_max, test: config.test(), seed: config.seed })
    }

    pub(crate) fn n_vars(&self) -> usize {
        self.panel.n_vars()
    }

    pub(crate) fn n_samples(&self) -> usize {
        self.panel.len() - self.tau_max
    }

    pub(crate) fn series(&self, node: Node) -> &[f64] {
        let col = self.panel.column(node.var);
        &col[self.tau_max - node.lag..col.len() - node.lag]
    }

    fn name(&self, var: usize) -> &str {
        &self.panel.names()[var]
    }

    /// Runs `x ⊥ y | cond`. The conditioning set is put in a canonical
    /// name-based order and the test seed is derived from the node names, so
    /// results do not depend on column order.
    pub(crate) fn test(&self, x: Node, y: Node, cond: &[Node]) -> Result<CiTestResult> {
        // contemporaneous pairs: the permuted side is chosen by name
        let (x, y) = if x.lag == y.lag && self.name(x.var) > self.name(y.var) { (y, x) } else { (x, y) };
        let mut cond: Vec<Node> = cond.to_vec();
        cond.sort_by(|a, b| (self.name(a.var), a.lag).cmp(&(self.name(b.var), b.lag)));
        cond.dedup();
        let d = cond.len();
        if self.n_samples() < d + 4 {
            return Err(Error::SampleSize(format!("effective T = {} < D_Z + 4 = {}", self.n_samples(), d + 4)));
        }
        let z: Vec<&[f64]> = cond.iter().map(|n| self.series(*n)).collect();
        let seed = match self.test {
            CiTest::ParCorr => 0,
            CiTest::Gpdc(_) => {
                let (a, b) = {
                    let ka = format!("{}@{}", self.name(x.var), x.lag);
                    let kb = format!("{}@{}", self.name(y.var), y.lag);
                    if ka <= kb {
                        (ka, kb)
                    } else {
                        (kb, ka)
                    }
                };
                let mut key = format!("{a}|{b}|");
                for n in &cond {
                    key.push_str(&format!("{}@{},", self.name(n.var), n.lag));
                }
                seed::hash_bytes(self.seed, key.as_bytes())
            }
        };
        self.test.run(self.series(x), self.series(y), &z, seed)
    }
}
