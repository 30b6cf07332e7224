//! JSON report types. The layout is described by
//! `schema/experiment_report.schema.json`.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use anasamp::sampler::Tally;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: Config,
    pub tallies: Tallies,
    /// `failures / (failures + accepts + size_rejections)`; overflows are
    /// left out of the denominator.
    pub observed_failure_ratio: Option<f64>,
    pub theoretical_failure: Option<f64>,
    pub size_stats: SizeStats,
    /// Accepted leaves by duplication multiplicity, for grammars with `mset2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<BTreeMap<u64, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub spec: String,
    pub spec_sha256: String,
    pub class: String,
    pub z: f64,
    /// Explicit values per class, level 0 first.
    pub values: IndexMap<String, Vec<f64>>,
    pub tail_k: IndexMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i0: Option<u32>,
    pub seed: u64,
    pub count: u64,
    pub max_size: u64,
    pub target: Option<TargetWindow>,
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetWindow {
    pub n: u64,
    pub tolerance: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tallies {
    pub attempts: u64,
    pub accepts: u64,
    pub failures: u64,
    pub overflows: u64,
    pub size_rejections: u64,
}

impl From<Tally> for Tallies {
    fn from(t: Tally) -> Self {
        Self {
            attempts: t.attempts,
            accepts: t.accepts,
            failures: t.failures,
            overflows: t.overflows,
            size_rejections: t.size_rejections,
        }
    }
}

impl Tallies {
    pub fn observed_failure_ratio(&self) -> Option<f64> {
        let completed = self.failures + self.accepts + self.size_rejections;
        (completed > 0).then(|| self.failures as f64 / completed as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SizeStats {
    pub accepted: u64,
    pub mean: Option<f64>,
    pub max: Option<u64>,
    pub histogram: BTreeMap<u64, u64>,
}

impl SizeStats {
    pub fn from_sizes(sizes: &[u64]) -> Self {
        let mut histogram = BTreeMap::new();
        for &s in sizes {
            *histogram.entry(s).or_insert(0) += 1;
        }
        let total: f64 = sizes.iter().map(|&s| s as f64).sum();
        Self {
            accepted: sizes.len() as u64,
            mean: (!sizes.is_empty()).then(|| total / sizes.len() as f64),
            max: sizes.iter().copied().max(),
            histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub ok: bool,
    pub classes: Vec<ClassReport>,
    pub errors: Vec<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub name: String,
    pub min_size: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GfReport {
    pub class: String,
    pub z: f64,
    pub converged: bool,
    pub value: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub tolerance: f64,
    pub y_star: Option<f64>,
    pub z_star: f64,
    pub converged: bool,
    pub function_evals: usize,
    pub oracle_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chi2Report {
    pub spec: String,
    pub spec_sha256: String,
    pub class: String,
    pub z: f64,
    pub seed: u64,
    pub n: u64,
    pub samples: u64,
    /// Number of objects of size `n` (from exact enumeration).
    pub categories: u64,
    pub distinct_seen: u64,
    pub statistic: f64,
    pub dof: u64,
    pub alpha: f64,
    pub critical_value: f64,
    pub pass: bool,
    pub tallies: Tallies,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_ratio_excludes_overflows() {
        let t = Tallies {
            attempts: 10,
            accepts: 5,
            failures: 2,
            overflows: 2,
            size_rejections: 1,
        };
        assert_eq!(t.observed_failure_ratio(), Some(0.25));
        assert_eq!(Tallies::default().observed_failure_ratio(), None);
    }

    #[test]
    fn size_stats() {
        let s = SizeStats::from_sizes(&[1, 3, 3, 5]);
        assert_eq!(s.mean, Some(3.0));
        assert_eq!(s.max, Some(5));
        assert_eq!(s.histogram[&3], 2);
        assert_eq!(SizeStats::from_sizes(&[]).mean, None);
    }
}
