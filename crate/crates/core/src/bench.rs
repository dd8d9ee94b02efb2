//! Labeled-corpus harness: run every kernel in a manifest and tally the
//! confusion matrix.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{compute_metrics, Metrics};
use crate::pipeline::{analyze_source, Config};
use crate::report::{Diagnostic, Highlight, Severity};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub expected_race: bool,
    pub line: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}:{line}: expected `<path><TAB>yes|no`")]
    ManifestParse { path: String, line: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelStatus {
    Analyzed { races: usize },
    /// Unsupported pragma; left out of the tallies.
    NotCovered,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct KernelOutcome {
    pub entry: ManifestEntry,
    pub status: KernelStatus,
    /// Rendered with `>>` markers.
    pub diagnostics: Vec<Diagnostic>,
}

impl KernelOutcome {
    pub fn reported_race(&self) -> bool {
        matches!(self.status, KernelStatus::Analyzed { races } if races > 0)
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub outcomes: Vec<KernelOutcome>,
    pub metrics: Metrics,
}

/// Paths are resolved against `base`. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path, name: &str) -> Result<Vec<ManifestEntry>, BenchError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = || BenchError::ManifestParse { path: name.to_string(), line: i + 1 };
        let (path, label) = line.split_once('\t').ok_or_else(bad)?;
        let expected_race = match label.trim() {
            "yes" => true,
            "no" => false,
            _ => return Err(bad()),
        };
        if path.trim().is_empty() {
            return Err(bad());
        }
        out.push(ManifestEntry { path: base.join(path.trim()), expected_race, line: i + 1 });
    }
    Ok(out)
}

fn run_kernel(entry: ManifestEntry, config: &Config) -> Result<KernelOutcome, BenchError> {
    let name = entry.path.display().to_string();
    let text = std::fs::read_to_string(&entry.path).map_err(|source| BenchError::Io { path: name.clone(), source })?;
    let outcome = match analyze_source(&name, &text, config) {
        Ok(a) => {
            let mut diagnostics: Vec<Diagnostic> = a.parsed.unsupported.iter().map(Diagnostic::unsupported).collect();
            diagnostics.extend(a.races.iter().map(|r| Diagnostic::race(r, &text, Highlight::Marker)));
            let status =
                if a.covered() { KernelStatus::Analyzed { races: a.races.len() } } else { KernelStatus::NotCovered };
            KernelOutcome { entry, status, diagnostics }
        }
        Err(e) => KernelOutcome { entry, status: KernelStatus::Failed(e.to_string()), diagnostics: Vec::new() },
    };
    Ok(outcome)
}

/// A kernel counts as a detection when at least one race is reported for it.
pub fn tally(outcomes: &[KernelOutcome]) -> Metrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for o in outcomes {
        if !matches!(o.status, KernelStatus::Analyzed { .. }) {
            continue;
        }
        match (o.entry.expected_race, o.reported_race()) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    compute_metrics(tp, fp, tn, fn_)
}

pub fn evaluate_benchmarks(manifest: &Path, config: &Config) -> Result<BenchResult, BenchError> {
    let name = manifest.display().to_string();
    let text = std::fs::read_to_string(manifest).map_err(|source| BenchError::Io { path: name.clone(), source })?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base, &name)?;
    let outcomes = entries.into_par_iter().map(|e| run_kernel(e, config)).collect::<Result<Vec<_>, _>>()?;
    let metrics = tally(&outcomes);
    Ok(BenchResult { outcomes, metrics })
}

impl BenchResult {
    pub fn race_diagnostics(&self) -> usize {
        self.outcomes.iter().flat_map(|o| &o.diagnostics).filter(|d| d.severity == Severity::Race).count()
    }
}
