//! Source text to race reports.

use thiserror::Error;

use crate::cfg::{build_cfg, normalize_barriers, root_functions, Cfg, CfgOptions, CfgWarning};
use crate::frontend::{parse_source, FrontendError, Parsed};
use crate::mhp::MhpOptions;
use crate::pia::{run_pia, PiaError, PiaLattice, PiaResult};
use crate::racedetect::{detect_races, RaceError, RaceReport};
use crate::taskgraph::{build_taskgraph, TaskGraph, TaskGraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Config {
    pub lattice: PiaLattice,
    pub mhp: MhpOptions,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    TaskGraph(#[from] TaskGraphError),
    #[error(transparent)]
    Pia(#[from] PiaError),
    #[error(transparent)]
    Race(#[from] RaceError),
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub file: String,
    pub parsed: Parsed,
    pub cfgs: Vec<Cfg>,
    pub graph: TaskGraph,
    pub pia: PiaResult,
    /// Empty when the file is not covered.
    pub races: Vec<RaceReport>,
    pub warnings: Vec<CfgWarning>,
}

impl Analysis {
    /// Files with unsupported pragmas are analyzed for the graph but their
    /// race verdicts are withheld.
    pub fn covered(&self) -> bool {
        self.parsed.unsupported.is_empty()
    }
}

pub fn analyze_source(file: &str, text: &str, config: &Config) -> Result<Analysis, AnalysisError> {
    let parsed = parse_source(file, text)?;
    let roots = root_functions(&parsed.ast);
    let opts = CfgOptions { fold_trailing_parallel_exit: roots.len() == 1 };
    let cfgs: Vec<Cfg> =
        roots.iter().map(|f| normalize_barriers(build_cfg(&parsed.ast, f, opts))).collect();
    let graph = build_taskgraph(&cfgs)?;
    let pia = run_pia(&graph, &config.lattice)?;
    let races = detect_races(&cfgs, &graph, &pia, config.mhp)?;
    let warnings = cfgs.iter().flat_map(|c| c.warnings.iter().cloned()).collect();
    let mut a = Analysis { file: file.to_string(), parsed, cfgs, graph, pia, races, warnings };
    if !a.covered() {
        a.races.clear();
    }
    Ok(a)
}
