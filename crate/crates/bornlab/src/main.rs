//! Batch CLI: declarative scenarios in, deterministic JSON/CSV reports out.
//!
//! Exit codes: 0 on completion, 1 when any `expect` line disagrees with its
//! verdict (or strict coverage fails), 2 on invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bornlab::error::Error;
use bornlab::runner::{execute, list_catalog};
use bornlab::scenario::{
    parse_scenario, ContinuityBlock, EnvarianceBlock, FinegrainBlock, GleasonBlock, HartleBlock,
    PathologyBlock, ScenarioSpec,
};

/// Scenario text bundled with the binary; reachable as `--scenario paper-claims`.
const PAPER_CLAIMS: &str = include_str!("../scenarios/paper-claims.scn");

#[derive(Parser)]
#[command(name = "bornlab", version, about = "measurement-assignment laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output directory (default: $BORNLAB_OUT or ./bornlab-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the bundled name `paper-claims`)
    Run {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        common: CommonArgs,
        /// Fail unless every matrix cell carries an expectation
        #[arg(long)]
        expect_strict: bool,
    },
    /// Check one property of one assignment
    Check {
        #[arg(long)]
        assignment: String,
        #[arg(long)]
        property: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Least-squares regularity fit of an assignment on random frames
    GleasonFit {
        #[arg(long)]
        assignment: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Swap-pair residuals and the equal-weight constraint solution
    Envariance {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 6, 7, 8])]
        dims: Vec<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact fine-graining of m/n outcomes, cross-checked two ways
    Finegrain {
        /// Pairs like 2/3,617/1000
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Frequency-operator deviation norms over a grid of copy counts
    Hartle {
        #[arg(long, value_delimiter = ',')]
        probs: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![100u64, 1000, 10000, 100000])]
        ngrid: Vec<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate an assignment along a parameter sweep and report jumps
    Continuity {
        #[arg(long)]
        assignment: String,
        #[arg(long)]
        path: String,
        /// Grid values, comma-separated (rationals and `a+b*sqrt2` allowed)
        #[arg(long, value_delimiter = ',')]
        grid: Vec<String>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact additive two-slope function: Cauchy trials and the
    /// close-reals discontinuity witness
    Pathology {
        #[arg(long, default_value = "1")]
        c1: String,
        #[arg(long, default_value = "10000")]
        c2: String,
        #[arg(long, default_value_t = 10000)]
        pairs: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List assignment, property, and harness identifiers
    List,
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("BORNLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bornlab-out"))
}

fn blank_spec(name: &str, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        seed,
        dims: vec![2, 3, 4, 5],
        trials: 200,
        assignments: Vec::new(),
        properties: Vec::new(),
        tolerances: Default::default(),
        expects: Vec::new(),
        gleason: Vec::new(),
        envariance: None,
        finegrain: None,
        hartle: Vec::new(),
        mixture: Vec::new(),
        continuity: Vec::new(),
        pathology: None,
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { scenario, common, expect_strict } => {
            let text = if scenario == "paper-claims" {
                PAPER_CLAIMS.to_string()
            } else {
                std::fs::read_to_string(&scenario)?
            };
            let mut spec = parse_scenario(&text)?;
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, expect_strict)?;
            println!(
                "scenario {}: {} checks, {} expectation mismatches -> {}",
                spec.name,
                report.timings_ms.len(),
                report.expectations.mismatches.len(),
                dir.display()
            );
            for m in &report.expectations.mismatches {
                println!("  mismatch: {}/{} expected {} got {}", m.assignment, m.property, m.expected, m.actual);
            }
            for u in &report.expectations.uncovered {
                println!("  uncovered cell: {u}");
            }
            Ok(code)
        }
        Command::Check { assignment, property, dims, trials, tol, common } => {
            let mut spec = blank_spec("check", common.seed.unwrap_or(0));
            spec.dims = dims;
            spec.trials = trials;
            spec.tolerances.insert("default".into(), tol);
            spec.assignments = vec![assignment.clone()];
            spec.properties = vec![property.clone()];
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            let cell = &report.property_matrix.as_ref().expect("one cell").cells[0][0];
            println!(
                "{assignment} / {property}: {:?} (trials {}, tol {:.1e}, max discrepancy {:.3e})",
                cell.status, cell.trials, cell.tolerance, cell.max_discrepancy
            );
            if let Some(w) = &cell.witness {
                println!("  witness: dim {} probe {} values {:?} discrepancy {:.6}", w.dim, w.probe, w.values, w.discrepancy);
            }
            Ok(code)
        }
        Command::GleasonFit { assignment, dim, frames, common } => {
            let mut spec = blank_spec("gleason-fit", common.seed.unwrap_or(0));
            spec.gleason.push(GleasonBlock { assignment: assignment.clone(), dim, frames });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            let g = &report.gleason[0];
            println!(
                "{assignment} d={dim} frames={frames}: residual {:.3e}, condition {:.3e} -> {:?}",
                g.fit.residual_rms, g.fit.condition, g.regularity
            );
            Ok(code)
        }
        Command::Envariance { dims, common } => {
            let mut spec = blank_spec("envariance", common.seed.unwrap_or(0));
            spec.envariance = Some(EnvarianceBlock { dims });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            for e in &report.envariance.as_ref().expect("entries").entries {
                println!(
                    "n={}: swap residual {:.2e} (equal) vs {:.3} (unequal control); p=1/{} rank {}",
                    e.n, e.equal_amplitude_residual, e.unequal_amplitude_residual, e.n, e.swap.rank
                );
            }
            Ok(code)
        }
        Command::Finegrain { pairs, common } => {
            let mut parsed = Vec::new();
            for p in &pairs {
                let Some((m, n)) = p.split_once('/') else {
                    return Err(Error::InvalidSpec(format!("pair {p:?} is not m/n")));
                };
                let m: u64 = m.parse().map_err(|_| Error::InvalidSpec(format!("bad pair {p:?}")))?;
                let n: u64 = n.parse().map_err(|_| Error::InvalidSpec(format!("bad pair {p:?}")))?;
                parsed.push((m, n));
            }
            let mut spec = blank_spec("finegrain", common.seed.unwrap_or(0));
            spec.finegrain = Some(FinegrainBlock { pairs: parsed });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            for e in &report.finegrain.as_ref().expect("entries").entries {
                println!(
                    "{}/{} -> ({}, {}); chain {} ({})",
                    e.m,
                    e.n,
                    e.first,
                    e.second,
                    e.chain,
                    if e.consistent { "consistent" } else { "INCONSISTENT" }
                );
            }
            Ok(code)
        }
        Command::Hartle { probs, target, ngrid, common } => {
            let mut spec = blank_spec("hartle", common.seed.unwrap_or(0));
            spec.hartle.push(HartleBlock { probs, target, ngrid });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            let h = &report.hartle[0];
            for (n, v) in &h.series.points {
                println!("N={n}: deviation {v:.6e}");
            }
            match h.series.slope {
                Some(s) => println!("log-log slope {s:.4}"),
                None => println!("exact convergence (all deviations zero)"),
            }
            Ok(code)
        }
        Command::Continuity { assignment, path, grid, tol, common } => {
            let mut spec = blank_spec("continuity", common.seed.unwrap_or(0));
            spec.continuity.push(ContinuityBlock { assignment, path, tol, grid });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            let c = &report.continuity[0];
            println!("{} points, {} jumps over tol {:.1e}", c.points.len(), c.jumps.len(), c.tolerance);
            for j in &c.jumps {
                println!("  jump {:.6} across [{:.9}, {:.9}]", j.delta_value, j.left, j.right);
            }
            Ok(code)
        }
        Command::Pathology { c1, c2, pairs, common } => {
            let mut spec = blank_spec("pathology", common.seed.unwrap_or(0));
            spec.pathology = Some(PathologyBlock { c1, c2, pairs });
            // also emit the two-slope continuity series over a tight grid
            spec.continuity.push(ContinuityBlock {
                assignment: "two-slope".into(),
                path: "amplitude-sweep".into(),
                tol: 1.0,
                grid: vec!["1".into(), "1-141421356/1000000000000+1/10000*sqrt2".into()],
            });
            let dir = out_dir(&common);
            let (report, code) = execute(&spec, &dir, common.jobs, false)?;
            let p = report.pathology.as_ref().expect("pathology result");
            println!(
                "two-slope (c1={}, c2={}): {} exact additivity pairs ({}), f(1)={}, f(sqrt2)={}",
                p.c1,
                p.c2,
                p.pairs_checked,
                if p.cauchy_exact { "all exact" } else { "FAILED" },
                p.basis_values.0,
                p.basis_values.1
            );
            println!(
                "discontinuity witness: |dx| = {:.3e}, |df| = {:.6}",
                p.discontinuity.delta_parameter, p.discontinuity.delta_value
            );
            Ok(code)
        }
        Command::List => {
            print!("{}", list_catalog());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
