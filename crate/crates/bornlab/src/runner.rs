//! Scenario execution: expands a scenario into independent check tasks, runs
//! them on a work pool, and assembles the deterministic report. Every task
//! derives its seed from the scenario seed and its own stable identifier, so
//! the report does not depend on the thread count.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::assignments::Assignment;
use crate::derivations::{
    busch_homogeneity_probe, dyadic_tail_check, envariance_check, fine_grain, swap_derivation,
    swap_unitary, zurek_chain, BipartiteState,
};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, ProbabilityTag, QuadRational};
use crate::frequency::{hartle_convergence_study, mixed_variance_gap};
use crate::gleason::{fit_density, regularity_verdict, FitSetup, DEFAULT_REGULARITY_THRESHOLD};
use crate::linalg::{random_density_matrix, random_pure_state};
use crate::properties::{
    build_cell, ContinuityReport, Lemma1Record, ProbeGrid, ProbePath, Property, PropertyMatrix,
    PropertyVerdict, VerdictStatus,
};
use crate::report::{
    planned_series_files, write_report, DiscontinuityWitness, EnvarianceEntry, EnvarianceResult,
    ExpectationOutcome, ExpectationSummary, FinegrainEntry, FinegrainResult, GleasonResult,
    HartleResult, MixtureResult, PathologyResult, Report, ScalingProbeResult,
};
use crate::scenario::{ExpectKind, ScenarioSpec};
use crate::seeds::derive_seed;
use crate::ARTIFACT_VERSION;

enum TaskOutput {
    Cell { row: usize, col: usize, verdict: Box<PropertyVerdict> },
    Lemma1(Box<Lemma1Record>),
    Gleason(Box<GleasonResult>),
    Envariance(Box<EnvarianceEntry>),
    Finegrain(FinegrainEntry),
    Hartle(Box<HartleResult>),
    Mixture(Box<MixtureResult>),
    Continuity(Box<ContinuityReport>),
    Pathology(Box<PathologyResult>),
    Scaling(Box<ScalingProbeResult>),
}

type TaskFn = Box<dyn Fn() -> Result<TaskOutput> + Send + Sync>;

struct Task {
    id: String,
    run: TaskFn,
}

/// Interprets raw continuity grid tokens for one assignment.
fn parse_grid(assignment: &Assignment, tokens: &[String]) -> Result<ProbeGrid> {
    match assignment {
        Assignment::ZurekPatch => Ok(ProbeGrid::Tags(
            tokens.iter().map(|t| ProbabilityTag::parse(t)).collect::<Result<Vec<_>>>()?,
        )),
        Assignment::TwoSlope { .. } => Ok(ProbeGrid::Quads(
            tokens.iter().map(|t| QuadRational::from_str(t)).collect::<Result<Vec<_>>>()?,
        )),
        _ => tokens
            .iter()
            .map(|t| {
                t.parse::<f64>().or_else(|_| {
                    parse_rational(t).and_then(|q| {
                        num_traits::ToPrimitive::to_f64(&q)
                            .ok_or_else(|| Error::InvalidGrid(format!("grid value {t:?} out of range")))
                    })
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(ProbeGrid::Reals),
    }
}

fn build_tasks(spec: &ScenarioSpec) -> Result<Vec<Task>> {
    let mut tasks: Vec<Task> = Vec::new();
    let assignments: Vec<Assignment> =
        spec.assignments.iter().map(|n| Assignment::from_name(n)).collect::<Result<Vec<_>>>()?;
    let properties: Vec<Property> =
        spec.properties.iter().map(|n| Property::from_name(n)).collect::<Result<Vec<_>>>()?;

    for (row, a) in assignments.iter().enumerate() {
        for (col, &p) in properties.iter().enumerate() {
            let id = format!("matrix/{}/{}", a.name(), p.name());
            let a = a.clone();
            let dims = spec.dims.clone();
            let trials = spec.trials;
            let tol = spec.tolerance_for(p.name());
            let seed = derive_seed(spec.seed, &id);
            tasks.push(Task {
                id,
                run: Box::new(move || {
                    Ok(TaskOutput::Cell {
                        row,
                        col,
                        verdict: Box::new(build_cell(&a, p, &dims, trials, tol, seed)),
                    })
                }),
            });
        }
    }

    for a in &assignments {
        let id = format!("lemma1/{}", a.name());
        let a = a.clone();
        let dims = spec.dims.clone();
        let trials = spec.trials;
        let tol = spec.tolerance_for("lemma1");
        let seed = derive_seed(spec.seed, &id);
        tasks.push(Task {
            id,
            run: Box::new(move || {
                let cfg = crate::properties::LabConfig { dims: dims.clone(), trials, tol, seed };
                Ok(TaskOutput::Lemma1(Box::new(crate::properties::lemma1_crosscheck(&a, &cfg))))
            }),
        });
    }

    for (i, block) in spec.gleason.iter().enumerate() {
        let id = format!("gleason/{i}/{}", block.assignment);
        let assignment = Assignment::from_name(&block.assignment)?;
        let dim = block.dim;
        let frames = block.frames;
        let seed = derive_seed(spec.seed, &id);
        tasks.push(Task {
            id,
            run: Box::new(move || {
                let setup = match assignment {
                    Assignment::Born => FitSetup {
                        state: Some(crate::assignments::State::Density(random_density_matrix(
                            dim,
                            derive_seed(seed, "hidden-state"),
                        )?)),
                        tags: None,
                    },
                    Assignment::DeutschQuartic => FitSetup {
                        state: Some(crate::assignments::State::Pure(random_pure_state(
                            dim,
                            derive_seed(seed, "hidden-state"),
                        )?)),
                        tags: None,
                    },
                    _ => FitSetup::default(),
                };
                let fit = fit_density(&assignment, &setup, dim, frames, seed)?;
                let regularity = regularity_verdict(&fit, DEFAULT_REGULARITY_THRESHOLD);
                Ok(TaskOutput::Gleason(Box::new(GleasonResult {
                    assignment: assignment.name().to_string(),
                    dim,
                    frames,
                    seed,
                    fit,
                    regularity,
                    threshold: DEFAULT_REGULARITY_THRESHOLD,
                })))
            }),
        });
    }

    if let Some(block) = &spec.envariance {
        for &n in &block.dims {
            let id = format!("envariance/{n}");
            tasks.push(Task {
                id,
                run: Box::new(move || {
                    let equal = BipartiteState::equal_amplitude(n)?;
                    let (equal_res, unequal_res) = if n >= 2 {
                        let u = swap_unitary(n, 0, 1)?;
                        let equal_res = envariance_check(&equal, &u, &u)?;
                        let norm: f64 = (1..=n).map(|i| i as f64).sum();
                        let amps: Vec<f64> = (1..=n).map(|i| (i as f64 / norm).sqrt()).collect();
                        let control = BipartiteState::correlated(&amps)?;
                        (equal_res, envariance_check(&control, &u, &u)?)
                    } else {
                        (0.0, 0.0)
                    };
                    Ok(TaskOutput::Envariance(Box::new(EnvarianceEntry {
                        n,
                        equal_amplitude_residual: equal_res,
                        unequal_amplitude_residual: unequal_res,
                        swap: swap_derivation(n)?,
                    })))
                }),
            });
        }
    }

    if let Some(block) = &spec.finegrain {
        for &(m, n) in &block.pairs {
            let id = format!("finegrain/{m}-{n}");
            tasks.push(Task {
                id,
                run: Box::new(move || {
                    let (first, second) = fine_grain(m as usize, n as usize)?;
                    let chain = zurek_chain(m as usize, n as usize)?;
                    let consistent = first == chain;
                    Ok(TaskOutput::Finegrain(FinegrainEntry {
                        m,
                        n,
                        first: first.to_string(),
                        second: second.to_string(),
                        chain: chain.to_string(),
                        consistent,
                    }))
                }),
            });
        }
    }

    for (i, block) in spec.hartle.iter().enumerate() {
        let id = format!("hartle/{i}");
        let probs = block.probs.clone();
        let target = block.target;
        let ngrid = block.ngrid.clone();
        tasks.push(Task {
            id,
            run: Box::new(move || {
                let series = hartle_convergence_study(&probs, target, &ngrid)?;
                Ok(TaskOutput::Hartle(Box::new(HartleResult { probs: probs.clone(), target, series })))
            }),
        });
    }

    for (i, block) in spec.mixture.iter().enumerate() {
        let id = format!("mixture/{i}");
        let weights = block.weights.clone();
        let qvalues = block.qvalues.clone();
        let ngrid = block.ngrid.clone();
        tasks.push(Task {
            id,
            run: Box::new(move || {
                let gap = mixed_variance_gap(&weights, &qvalues, &ngrid)?;
                Ok(TaskOutput::Mixture(Box::new(MixtureResult {
                    weights: weights.clone(),
                    qvalues: qvalues.clone(),
                    gap,
                })))
            }),
        });
    }

    for (i, block) in spec.continuity.iter().enumerate() {
        let id = format!("continuity/{i}/{}", block.assignment);
        let assignment = Assignment::from_name(&block.assignment)?;
        let path = ProbePath::from_name(&block.path)?;
        let grid = parse_grid(&assignment, &block.grid)?;
        let tol = block.tol;
        let seed = derive_seed(spec.seed, &id);
        tasks.push(Task {
            id,
            run: Box::new(move || {
                let report = crate::properties::continuity_probe(&assignment, path, &grid, tol, seed)?;
                Ok(TaskOutput::Continuity(Box::new(report)))
            }),
        });
    }

    if spec.pathology.is_some() {
        // companion scaling-continuity probes: homogeneity grid and dyadic
        // partial sums for the linear rule and the quadratic counterexample
        for name in ["born", "trace-squared"] {
            let id = format!("busch/{name}");
            let assignment = Assignment::from_name(name)?;
            let seed = derive_seed(spec.seed, &id);
            tasks.push(Task {
                id,
                run: Box::new(move || {
                    let ctx = crate::linalg::random_projective_context(3, 2, derive_seed(seed, "effect"))?;
                    let effect = ctx.members()[0].clone();
                    let state = match assignment {
                        Assignment::Born => Some(crate::assignments::State::Density(
                            random_density_matrix(3, derive_seed(seed, "state"))?,
                        )),
                        _ => None,
                    };
                    let rationals: Vec<crate::exact::Rational> =
                        (1..=50).map(|k| crate::exact::rat(k, 50)).collect();
                    let homogeneity = busch_homogeneity_probe(
                        &assignment,
                        state.as_ref(),
                        &effect,
                        &rationals,
                        &[1.0 / 2f64.sqrt()],
                    )?;
                    let dyadic = dyadic_tail_check(&assignment, state.as_ref(), &effect, 20)?;
                    Ok(TaskOutput::Scaling(Box::new(ScalingProbeResult {
                        assignment: assignment.name().to_string(),
                        homogeneity,
                        dyadic,
                    })))
                }),
            });
        }
    }

    if let Some(block) = &spec.pathology {
        let id = "pathology".to_string();
        let c1 = parse_rational(&block.c1)?;
        let c2 = parse_rational(&block.c2)?;
        let pairs = block.pairs;
        let seed = derive_seed(spec.seed, &id);
        tasks.push(Task {
            id,
            run: Box::new(move || Ok(TaskOutput::Pathology(Box::new(run_pathology(&c1, &c2, pairs, seed))))),
        });
    }

    Ok(tasks)
}

/// Exact additivity trials plus the close-reals discontinuity witness for
/// the two-slope function.
fn run_pathology(
    c1: &crate::exact::Rational,
    c2: &crate::exact::Rational,
    pairs: u32,
    seed: u64,
) -> PathologyResult {
    use crate::assignments::two_slope_eval;
    use crate::exact::rat;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cauchy_exact = true;
    for _ in 0..pairs {
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
            QuadRational::new(
                rat(rng.gen_range(-40..=40), rng.gen_range(1..=15)),
                rat(rng.gen_range(-40..=40), rng.gen_range(1..=15)),
            )
        };
        let x = pick(&mut rng);
        let y = pick(&mut rng);
        let lhs = two_slope_eval(&(&x + &y), c1, c2);
        let rhs = two_slope_eval(&x, c1, c2) + two_slope_eval(&y, c1, c2);
        if lhs != rhs {
            cauchy_exact = false;
        }
    }

    let one = QuadRational::from_rational(rat(1, 1));
    // a + b√2 with b = 1e-4 and a chosen so the embedding is within 1e-6 of 1
    let near = QuadRational::new(rat(1, 1) - rat(141_421_356, 1_000_000_000_000), rat(1, 10_000));
    let f_one = two_slope_eval(&one, c1, c2);
    let f_near = two_slope_eval(&near, c1, c2);
    let basis = crate::assignments::two_slope_basis_values(c1, c2);
    PathologyResult {
        c1: c1.to_string(),
        c2: c2.to_string(),
        pairs_checked: pairs,
        cauchy_exact,
        basis_values: (basis.0.to_string(), basis.1.to_string()),
        discontinuity: DiscontinuityWitness {
            left_parameter: one.to_f64(),
            right_parameter: near.to_f64(),
            delta_parameter: (near.to_f64() - one.to_f64()).abs(),
            delta_value: (f_near.to_f64() - f_one.to_f64()).abs(),
        },
    }
}

fn evaluate_expectations(
    spec: &ScenarioSpec,
    matrix: &PropertyMatrix,
    strict: bool,
) -> ExpectationSummary {
    let status_name = |s: VerdictStatus| match s {
        VerdictStatus::Holds => "holds",
        VerdictStatus::Fails => "fails",
        VerdictStatus::NotApplicable => "not-applicable",
    };
    let mut mismatches = Vec::new();
    for e in &spec.expects {
        let row = matrix.assignments.iter().position(|a| *a == e.assignment);
        let col = matrix.properties.iter().position(|p| *p == e.property);
        let (Some(row), Some(col)) = (row, col) else {
            mismatches.push(ExpectationOutcome {
                assignment: e.assignment.clone(),
                property: e.property.clone(),
                expected: format!("{:?}", e.expect).to_lowercase(),
                actual: "missing-cell".into(),
                matched: false,
            });
            continue;
        };
        let verdict = &matrix.cells[row][col];
        let matched = matches!(
            (e.expect, verdict.status),
            (ExpectKind::Holds, VerdictStatus::Holds) | (ExpectKind::Fails, VerdictStatus::Fails)
        );
        if !matched {
            mismatches.push(ExpectationOutcome {
                assignment: e.assignment.clone(),
                property: e.property.clone(),
                expected: format!("{:?}", e.expect).to_lowercase(),
                actual: status_name(verdict.status).to_string(),
                matched,
            });
        }
    }
    let mut uncovered = Vec::new();
    if strict {
        for a in &matrix.assignments {
            for p in &matrix.properties {
                let covered = spec.expects.iter().any(|e| e.assignment == *a && e.property == *p);
                if !covered {
                    uncovered.push(format!("{a}/{p}"));
                }
            }
        }
    }
    ExpectationSummary { checked: spec.expects.len(), mismatches, uncovered }
}

/// Runs every check requested by the scenario on a pool of `jobs` threads
/// (0 = one per core) and assembles the report.
pub fn run_scenario(spec: &ScenarioSpec, jobs: usize, expect_strict: bool) -> Result<Report> {
    let tasks = build_tasks(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("cannot build worker pool: {e}")))?;
    let results: Vec<(String, u64, Result<TaskOutput>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let start = Instant::now();
                let out = (t.run)();
                (t.id.clone(), start.elapsed().as_millis() as u64, out)
            })
            .collect()
    });

    let n_rows = spec.assignments.len();
    let n_cols = spec.properties.len();
    let mut cells: Vec<Vec<Option<PropertyVerdict>>> = vec![vec![None; n_cols]; n_rows];
    let mut lemma1 = Vec::new();
    let mut gleason = Vec::new();
    let mut envariance_entries = Vec::new();
    let mut finegrain_entries = Vec::new();
    let mut hartle = Vec::new();
    let mut mixture = Vec::new();
    let mut continuity = Vec::new();
    let mut pathology = None;
    let mut scaling_probes = Vec::new();
    let mut timings = std::collections::BTreeMap::new();

    for (id, ms, outcome) in results {
        timings.insert(id, ms);
        match outcome? {
            TaskOutput::Cell { row, col, verdict } => cells[row][col] = Some(*verdict),
            TaskOutput::Lemma1(rec) => lemma1.push(*rec),
            TaskOutput::Gleason(g) => gleason.push(*g),
            TaskOutput::Envariance(e) => envariance_entries.push(*e),
            TaskOutput::Finegrain(e) => finegrain_entries.push(e),
            TaskOutput::Hartle(h) => hartle.push(*h),
            TaskOutput::Mixture(m) => mixture.push(*m),
            TaskOutput::Continuity(c) => continuity.push(*c),
            TaskOutput::Pathology(p) => pathology = Some(*p),
            TaskOutput::Scaling(s) => scaling_probes.push(*s),
        }
    }

    let matrix = PropertyMatrix {
        assignments: spec.assignments.clone(),
        properties: spec.properties.clone(),
        cells: cells
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.expect("every cell has a task")).collect())
            .collect(),
    };
    let expectations = evaluate_expectations(spec, &matrix, expect_strict);
    let scaling_names: Vec<String> = scaling_probes.iter().map(|s| s.assignment.clone()).collect();
    let series_files = planned_series_files(hartle.len(), mixture.len(), continuity.len(), &scaling_names);

    Ok(Report {
        artifact_version: ARTIFACT_VERSION.to_string(),
        scenario: spec.clone(),
        seed: spec.seed,
        property_matrix: Some(matrix),
        lemma1,
        gleason,
        envariance: if envariance_entries.is_empty() {
            None
        } else {
            Some(EnvarianceResult { entries: envariance_entries })
        },
        finegrain: if finegrain_entries.is_empty() {
            None
        } else {
            Some(FinegrainResult { entries: finegrain_entries })
        },
        hartle,
        mixture,
        continuity,
        pathology,
        scaling_probes,
        expectations,
        series_files,
        timings_ms: timings,
    })
}

/// Exit code of a finished run: 1 when any expectation disagrees (or, under
/// strict mode, any cell is uncovered), else 0.
pub fn exit_code_for(report: &Report) -> i32 {
    if report.expectations.mismatches.is_empty() && report.expectations.uncovered.is_empty() {
        0
    } else {
        1
    }
}

/// Runs a scenario and writes the report bundle into `out_dir`.
pub fn execute(spec: &ScenarioSpec, out_dir: &Path, jobs: usize, expect_strict: bool) -> Result<(Report, i32)> {
    let report = run_scenario(spec, jobs, expect_strict)?;
    write_report(&report, out_dir)?;
    let code = exit_code_for(&report);
    Ok((report, code))
}

/// Alphabetized listing of assignment names, property names, continuity
/// paths, and harness identifiers.
pub fn list_catalog() -> String {
    let mut assignments: Vec<&str> =
        Assignment::catalog().iter().map(|a| a.name()).collect::<Vec<_>>();
    assignments.sort_unstable();
    let mut properties: Vec<&str> = Property::all().iter().map(|p| p.name()).collect::<Vec<_>>();
    properties.sort_unstable();
    let descriptions: std::collections::BTreeMap<&str, &str> = [
        ("born", "trace pairing of state and effect"),
        ("trace-squared", "squared normalized trace; not additive"),
        ("equal-rule", "1/N per member of the measured set; additive only within one context"),
        ("deutsch-quartic", "normalized fourth power of overlaps, dimension two"),
        ("zurek-patch", "tag-driven rule: rational tags keep their value, irrational tags snap to sqrt(2)"),
        ("bloch-hemisphere", "step frame function on the Bloch sphere; weight one, not regular"),
        ("two-slope", "exactly additive two-slope function on the quadratic field"),
    ]
    .into_iter()
    .collect();
    let mut out = String::new();
    out.push_str("assignments:\n");
    for a in assignments {
        out.push_str(&format!("  {a:18} {}\n", descriptions.get(a).copied().unwrap_or("")));
    }
    out.push_str("properties:\n");
    for p in properties {
        out.push_str(&format!("  {p}\n"));
    }
    out.push_str("continuity paths:\n  amplitude-sweep\n  frame-rotation\n  scaling-sweep\n");
    out.push_str("harness blocks:\n  continuity\n  envariance\n  finegrain\n  gleason\n  hartle\n  mixture\n  pathology\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const SMALL: &str = "\
name small
seed 11
dims 2 3
trials 12
assignments born trace-squared
properties additivity normalization
expect born additivity holds
expect trace-squared additivity fails

[envariance]
dims 2 3
[/envariance]

[finegrain]
pairs 1/2 2/3
[/finegrain]

[hartle]
probs 0.5 0.5
target 0
ngrid 100 1000 10000 100000
[/hartle]
";

    #[test]
    fn small_scenario_runs_and_exits_zero() {
        let spec = parse_scenario(SMALL).unwrap();
        let report = run_scenario(&spec, 2, false).unwrap();
        assert_eq!(exit_code_for(&report), 0);
        assert_eq!(report.expectations.checked, 2);
        let matrix = report.property_matrix.as_ref().unwrap();
        assert_eq!(matrix.cells.len(), 2);
        assert_eq!(matrix.cells[0].len(), 2);
        assert_eq!(report.envariance.as_ref().unwrap().entries.len(), 2);
        assert!(report.finegrain.as_ref().unwrap().entries.iter().all(|e| e.consistent));
        assert_eq!(report.series_files, vec!["hartle-0.csv"]);
    }

    #[test]
    fn contradicted_expectation_exits_one() {
        let text = SMALL.replace("expect born additivity holds", "expect born additivity fails");
        let spec = parse_scenario(&text).unwrap();
        let report = run_scenario(&spec, 1, false).unwrap();
        assert_eq!(exit_code_for(&report), 1);
        assert_eq!(report.expectations.mismatches.len(), 1);
        assert_eq!(report.expectations.mismatches[0].actual, "holds");
    }

    #[test]
    fn strict_mode_requires_full_coverage() {
        let spec = parse_scenario(SMALL).unwrap();
        let report = run_scenario(&spec, 1, true).unwrap();
        // 2x2 matrix with only two expectations: two uncovered cells
        assert_eq!(report.expectations.uncovered.len(), 2);
        assert_eq!(exit_code_for(&report), 1);
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let spec = parse_scenario(SMALL).unwrap();
        let r1 = run_scenario(&spec, 1, false).unwrap();
        let r8 = run_scenario(&spec, 8, false).unwrap();
        assert_eq!(r1.canonical_json().unwrap(), r8.canonical_json().unwrap());
    }

    #[test]
    fn catalog_listing_is_stable_and_complete() {
        let a = list_catalog();
        let b = list_catalog();
        assert_eq!(a, b);
        for name in ["born", "zurek-patch", "strong-normalization", "two-slope", "pathology"] {
            assert!(a.contains(name), "{name} missing from listing");
        }
    }
}
