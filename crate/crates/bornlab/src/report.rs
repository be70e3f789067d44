//! Report assembly and serialization. A report is one JSON document plus one
//! CSV file per emitted series. Re-running the same scenario with the same
//! seed yields byte-identical output except for the wall-time block, which
//! lives under the single key `timings_ms` so consumers can strip it.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::derivations::{DyadicTail, HomogeneityProbe, SwapDerivation};
use crate::error::Result;
use crate::frequency::{ConvergenceSeries, MixedVarianceGap};
use crate::gleason::{FitResult, Regularity};
use crate::properties::{ContinuityReport, Lemma1Record, PropertyMatrix};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, Serialize)]
pub struct GleasonResult {
    pub assignment: String,
    pub dim: usize,
    pub frames: usize,
    pub seed: u64,
    pub fit: FitResult,
    pub regularity: Regularity,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvarianceEntry {
    pub n: usize,
    /// Residual of the matched swap pair on the equal-amplitude state.
    pub equal_amplitude_residual: f64,
    /// Residual of the same swap pair on an unequal-amplitude control state.
    pub unequal_amplitude_residual: f64,
    pub swap: SwapDerivation,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvarianceResult {
    pub entries: Vec<EnvarianceEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinegrainEntry {
    pub m: u64,
    pub n: u64,
    /// Exact aggregated weights as strings: (m/n, (n−m)/n).
    pub first: String,
    pub second: String,
    /// Value of the multiplicative conditional chain; must equal `first`.
    pub chain: String,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinegrainResult {
    pub entries: Vec<FinegrainEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HartleResult {
    pub probs: Vec<f64>,
    pub target: usize,
    pub series: ConvergenceSeries,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureResult {
    pub weights: Vec<f64>,
    pub qvalues: Vec<f64>,
    pub gap: MixedVarianceGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscontinuityWitness {
    pub left_parameter: f64,
    pub right_parameter: f64,
    pub delta_parameter: f64,
    pub delta_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathologyResult {
    pub c1: String,
    pub c2: String,
    pub pairs_checked: u32,
    /// Additivity holds as an exact identity on every sampled pair.
    pub cauchy_exact: bool,
    /// f(1) and f(√2) as exact strings.
    pub basis_values: (String, String),
    pub discontinuity: DiscontinuityWitness,
}

/// Scaling-continuity probes attached alongside the pathology block: the
/// homogeneity grid μ(qA) and the dyadic partial sums Σ μ(A/2^i).
#[derive(Debug, Clone, Serialize)]
pub struct ScalingProbeResult {
    pub assignment: String,
    pub homogeneity: HomogeneityProbe,
    pub dyadic: DyadicTail,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationOutcome {
    pub assignment: String,
    pub property: String,
    pub expected: String,
    pub actual: String,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationSummary {
    pub checked: usize,
    pub mismatches: Vec<ExpectationOutcome>,
    /// Populated under --expect-strict: matrix cells with no expectation.
    pub uncovered: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub artifact_version: String,
    pub scenario: ScenarioSpec,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub property_matrix: Option<PropertyMatrix>,
    pub lemma1: Vec<Lemma1Record>,
    pub gleason: Vec<GleasonResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envariance: Option<EnvarianceResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finegrain: Option<FinegrainResult>,
    pub hartle: Vec<HartleResult>,
    pub mixture: Vec<MixtureResult>,
    pub continuity: Vec<ContinuityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathology: Option<PathologyResult>,
    pub scaling_probes: Vec<ScalingProbeResult>,
    pub expectations: ExpectationSummary,
    pub series_files: Vec<String>,
    /// Wall time per check; the only non-deterministic block.
    pub timings_ms: BTreeMap<String, u64>,
}

impl Report {
    /// JSON with the timing block removed and keys sorted: the byte-exact
    /// determinism contract.
    pub fn canonical_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("timings_ms");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn full_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

/// Strips the timing block from report JSON text (for byte comparisons).
pub fn strip_timings(json_text: &str) -> Result<String> {
    let mut value: serde_json::Value = serde_json::from_str(json_text)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("timings_ms");
    }
    Ok(serde_json::to_string_pretty(&value)?)
}

/// CSV contract: comma separator, `.` decimal point, one header row.
pub fn write_csv(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (a, b) in rows {
        out.push_str(&format!("{a},{b}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes report.json and every series CSV into `dir`; returns the paths.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    let mut file = fs::File::create(&report_path)?;
    file.write_all(report.full_json()?.as_bytes())?;
    file.write_all(b"\n")?;
    written.push(report_path);

    for (i, h) in report.hartle.iter().enumerate() {
        let path = dir.join(format!("hartle-{i}.csv"));
        let rows: Vec<(f64, f64)> = h.series.points.iter().map(|(n, v)| (*n as f64, *v)).collect();
        write_csv(&path, "N,value", &rows)?;
        written.push(path);
    }
    for (i, m) in report.mixture.iter().enumerate() {
        let iid = dir.join(format!("mixture-{i}-iid.csv"));
        let rows: Vec<(f64, f64)> = m.gap.iid_series.points.iter().map(|(n, v)| (*n as f64, *v)).collect();
        write_csv(&iid, "N,value", &rows)?;
        written.push(iid);
        let mixed = dir.join(format!("mixture-{i}-mixture.csv"));
        let rows: Vec<(f64, f64)> =
            m.gap.mixture_series.points.iter().map(|(n, v)| (*n as f64, *v)).collect();
        write_csv(&mixed, "N,value", &rows)?;
        written.push(mixed);
    }
    for (i, c) in report.continuity.iter().enumerate() {
        let path = dir.join(format!("continuity-{i}.csv"));
        let rows: Vec<(f64, f64)> = c.points.iter().map(|p| (p.parameter, p.value)).collect();
        write_csv(&path, "parameter,value", &rows)?;
        written.push(path);
    }
    for s in &report.scaling_probes {
        let path = dir.join(format!("scaling-{}-homogeneity.csv", s.assignment));
        write_csv(&path, "parameter,value", &s.homogeneity.series)?;
        written.push(path);
        let path = dir.join(format!("scaling-{}-dyadic.csv", s.assignment));
        let rows: Vec<(f64, f64)> = s
            .dyadic
            .partial_sums
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64, *v))
            .collect();
        write_csv(&path, "parameter,value", &rows)?;
        written.push(path);
    }
    Ok(written)
}

/// The relative CSV names a report will produce, in emission order.
pub fn planned_series_files(
    hartle: usize,
    mixture: usize,
    continuity: usize,
    scaling: &[String],
) -> Vec<String> {
    let mut names = Vec::new();
    for i in 0..hartle {
        names.push(format!("hartle-{i}.csv"));
    }
    for i in 0..mixture {
        names.push(format!("mixture-{i}-iid.csv"));
        names.push(format!("mixture-{i}-mixture.csv"));
    }
    for i in 0..continuity {
        names.push(format!("continuity-{i}.csv"));
    }
    for a in scaling {
        names.push(format!("scaling-{a}-homogeneity.csv"));
        names.push(format!("scaling-{a}-dyadic.csv"));
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_csv(&path, "parameter,value", &[(0.5, 1.25), (1.0, 2.0)]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "parameter,value\n0.5,1.25\n1,2\n");
    }

    #[test]
    fn strip_timings_removes_only_the_timing_block() {
        let json = r#"{"a":1,"timings_ms":{"x":12},"b":2}"#;
        let stripped = strip_timings(json).unwrap();
        assert!(!stripped.contains("timings_ms"));
        assert!(stripped.contains("\"a\""));
        assert!(stripped.contains("\"b\""));
    }
}
