//! Acceptance suite: one test per claim, each printing a pass line with the
//! measured quantities (visible with `cargo test -- --nocapture`). Every
//! tolerance is pinned here.

use bornlab::assignments::{Assignment, State};
use bornlab::derivations::{
    busch_homogeneity_probe, dyadic_tail_check, envariance_check, fine_grain, orthogonality_witness,
    shift_invariance_check, swap_derivation, swap_unitary, zurek_chain, BipartiteState,
};
use bornlab::exact::{rat, ProbabilityTag, QuadRational, Rational};
use bornlab::frequency::{
    frequency_apply_bruteforce, frequency_deviation_norm, hartle_convergence_study,
    mixed_variance_gap, FrequencySpec,
};
use bornlab::gleason::{fit_density, FitSetup};
use bornlab::linalg::{
    computational_context, haar_random_unitary, random_density_matrix, random_pure_state, CVec,
    Context, C64,
};
use bornlab::properties::VerdictStatus;
use bornlab::report::Report;
use bornlab::runner::{exit_code_for, run_scenario};
use bornlab::scenario::parse_scenario;
use bornlab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAPER_CLAIMS: &str = include_str!("../scenarios/paper-claims.scn");

fn run_paper_claims() -> Report {
    let spec = parse_scenario(PAPER_CLAIMS).expect("bundled scenario parses");
    run_scenario(&spec, 0, false).expect("bundled scenario runs")
}

fn cell<'r>(report: &'r Report, assignment: &str, property: &str) -> &'r bornlab::properties::PropertyVerdict {
    let m = report.property_matrix.as_ref().expect("matrix present");
    let row = m.assignments.iter().position(|a| a == assignment).expect("assignment row");
    let col = m.properties.iter().position(|p| p == property).expect("property column");
    &m.cells[row][col]
}

#[test]
fn criterion_01_claim_matrix() {
    let report = run_paper_claims();
    assert_eq!(exit_code_for(&report), 0, "no expectation mismatches");

    for p in ["additivity", "anc", "onc", "normalization", "strong-normalization", "non-negativity", "state-affinity"] {
        assert_eq!(cell(&report, "born", p).status, VerdictStatus::Holds, "born/{p}");
    }

    assert_eq!(cell(&report, "trace-squared", "onc").status, VerdictStatus::Holds);
    assert_eq!(cell(&report, "trace-squared", "normalization").status, VerdictStatus::Holds);
    let add = cell(&report, "trace-squared", "additivity");
    assert_eq!(add.status, VerdictStatus::Fails);
    let w = add.witness.as_ref().unwrap();
    assert!((w.discrepancy - 0.5).abs() <= 1e-10, "witness discrepancy {}", w.discrepancy);
    let strong = cell(&report, "trace-squared", "strong-normalization");
    assert_eq!(strong.status, VerdictStatus::Fails);
    assert!((strong.witness.as_ref().unwrap().values[0] - 0.5).abs() <= 1e-12, "sum is 1/2");
    assert_eq!(cell(&report, "trace-squared", "anc").status, VerdictStatus::Fails);

    let add = cell(&report, "equal-rule", "additivity");
    assert_eq!(add.status, VerdictStatus::Holds);
    assert_eq!(add.max_discrepancy, 0.0, "within-context additivity is exact");
    let anc = cell(&report, "equal-rule", "anc");
    assert_eq!(anc.status, VerdictStatus::Fails);
    let w = anc.witness.as_ref().unwrap();
    assert_eq!(w.values[0], 2.0 / 3.0, "additive value in the three-member context");
    assert_eq!(w.values[1], 0.5, "additive value in the four-member context");
    assert_eq!(cell(&report, "equal-rule", "onc").status, VerdictStatus::Fails);

    let strong = cell(&report, "deutsch-quartic", "strong-normalization");
    assert_eq!(strong.status, VerdictStatus::Holds);
    assert!(strong.max_discrepancy <= 1e-12, "sum over bases within 1e-12, got {}", strong.max_discrepancy);
    assert_eq!(cell(&report, "deutsch-quartic", "state-affinity").status, VerdictStatus::Fails);
    assert_eq!(cell(&report, "deutsch-quartic", "anc").status, VerdictStatus::Fails);

    // patch rational sector equals the trace-rule value exactly
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for _ in 0..50 {
        let den = rng.gen_range(2..=19i64);
        let num = rng.gen_range(1..den);
        let t = rat(num, den);
        let tags = [
            ProbabilityTag::rational(t.clone()),
            ProbabilityTag::rational(rat(1, 1) - t.clone()),
        ];
        let patch = bornlab::assignments::zurek_patch_eval(&tags, 0).unwrap();
        let exact = num_traits::ToPrimitive::to_f64(&t).unwrap();
        assert_eq!(patch, exact, "patch reproduces the tagged rational bit-for-bit");
        let p = exact;
        let psi = State::pure(CVec::unit(vec![C64::new(p.sqrt(), 0.0), C64::new((1.0 - p).sqrt(), 0.0)]).unwrap()).unwrap();
        let member = CVec::basis_vector(2, 0).unwrap().projector().unwrap();
        let born = bornlab::assignments::born_eval(&psi, &member).unwrap();
        assert!((patch - born).abs() <= 1e-12);
    }

    // the bundled patch sweep finds the jump at the irrational tag
    let sweep = report
        .continuity
        .iter()
        .find(|c| c.assignment == "zurek-patch")
        .expect("patch sweep present");
    let max_jump = sweep.jumps.iter().map(|j| j.delta_value).fold(0.0f64, f64::max);
    assert!(max_jump >= 0.9, "jump at the irrational tag: {max_jump}");

    println!("criterion 01 claim matrix: PASS (42 cells, witness 1/2 and 2/3-vs-1/2 reproduced, patch jump {max_jump:.3})");
}

#[test]
fn criterion_02_biconditional_crosscheck() {
    let cfg = bornlab::properties::LabConfig { dims: vec![2, 3, 4, 5], trials: 200, tol: 1e-9, seed: 20 };
    let mut checked = 0;
    for a in Assignment::operator_catalog() {
        let rec = bornlab::properties::lemma1_crosscheck(&a, &cfg);
        assert_eq!(rec.consistent, Some(true), "{}: {rec:?}", a.name());
        checked += 1;
    }
    assert_eq!(checked, 6);
    println!("criterion 02 biconditional cross-check: PASS (6 assignments, dims 2-5, 200 trials, 0 inconsistencies)");
}

#[test]
fn criterion_03_regularity_fits() {
    let mut max_residual = 0.0f64;
    let mut max_recovery = 0.0f64;
    for d in 2..=6usize {
        for trial in 0..50u64 {
            let rho = random_density_matrix(d, 7_000 + 100 * d as u64 + trial).unwrap();
            let setup = FitSetup { state: Some(State::Density(rho.clone())), tags: None };
            let fit = fit_density(&Assignment::Born, &setup, d, 20, 9_000 + trial).unwrap();
            max_residual = max_residual.max(fit.residual_rms);
            max_recovery = max_recovery.max(fit.rho().distance(&rho));
        }
    }
    assert!(max_residual <= 1e-10, "max refit residual {max_residual}");
    assert!(max_recovery <= 1e-7, "max recovery error {max_recovery}");

    let mut min_floor = f64::INFINITY;
    for seed in 0..10u64 {
        let fit = fit_density(&Assignment::BlochHemisphere, &FitSetup::default(), 2, 50, seed).unwrap();
        min_floor = min_floor.min(fit.residual_rms);
    }
    assert!(min_floor >= 0.05, "hemisphere residual floor {min_floor}");
    println!(
        "criterion 03 regularity: PASS (250 refits: residual <= {max_residual:.2e}, recovery <= {max_recovery:.2e}; hemisphere floor {min_floor:.3})"
    );
}

#[test]
fn criterion_04_envariance_and_fine_graining() {
    for n in 2..=8usize {
        let psi = BipartiteState::equal_amplitude(n).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                let u = swap_unitary(n, i, j).unwrap();
                let r = envariance_check(&psi, &u, &u).unwrap();
                assert!(r <= 1e-12, "n={n} swap ({i},{j}): residual {r}");
            }
        }
    }
    for n in 1..=64usize {
        let d = swap_derivation(n).unwrap();
        assert_eq!(d.rank, n, "unique solution for n={n}");
        assert!(d.probabilities.iter().all(|p| *p == rat(1, n as i64)), "p = 1/{n} exactly");
    }
    for n in 1..=200usize {
        for m in 1..=n {
            let (first, second) = fine_grain(m, n).unwrap();
            let chain = zurek_chain(m, n).unwrap();
            let direct = rat(m as i64, n as i64);
            assert_eq!(first, direct, "fine grain m={m} n={n}");
            assert_eq!(chain, direct, "chain m={m} n={n}");
            assert_eq!(first.clone() + second, rat(1, 1));
        }
    }
    println!("criterion 04 envariance and fine-graining: PASS (swap residuals <= 1e-12 for n=2..8; 1/n exact to n=64; 20100 pairs agree)");
}

#[test]
fn criterion_05_orthogonality_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    // orthogonal system vectors: witness vanishes
    for _ in 0..20 {
        let u = haar_random_unitary(3, rng.gen()).unwrap();
        let x1 = CVec::from_column(&u, 0);
        let x2 = CVec::from_column(&u, 1);
        let e0 = random_pure_state(3, rng.gen()).unwrap();
        let e1 = random_pure_state(3, rng.gen()).unwrap();
        let e2 = random_pure_state(3, rng.gen()).unwrap();
        assert!(orthogonality_witness(&x1, &x2, &e0, &e1, &e2).unwrap() <= 1e-12);
    }
    // identical records: witness vanishes
    for _ in 0..20 {
        let x1 = random_pure_state(3, rng.gen()).unwrap();
        let x2 = random_pure_state(3, rng.gen()).unwrap();
        let e0 = random_pure_state(3, rng.gen()).unwrap();
        let e1 = random_pure_state(3, rng.gen()).unwrap();
        assert!(orthogonality_witness(&x1, &x2, &e0, &e1, &e1).unwrap() <= 1e-12);
    }
    // generic quintuples match the product of moduli
    let mut max_dev = 0.0f64;
    for _ in 0..100 {
        let x1 = random_pure_state(4, rng.gen()).unwrap();
        let x2 = random_pure_state(4, rng.gen()).unwrap();
        let e0 = random_pure_state(3, rng.gen()).unwrap();
        let e1 = random_pure_state(3, rng.gen()).unwrap();
        let e2 = random_pure_state(3, rng.gen()).unwrap();
        let w = orthogonality_witness(&x1, &x2, &e0, &e1, &e2).unwrap();
        let sys = x1.inner(&x2).unwrap().norm();
        let env = (C64::new(1.0, 0.0) - e1.inner(&e2).unwrap()).norm();
        max_dev = max_dev.max((w - sys * env).abs());
    }
    assert!(max_dev <= 1e-12, "max deviation {max_dev}");
    println!("criterion 05 orthogonality witness: PASS (vanishing cases <= 1e-12; 100 quintuples match to {max_dev:.2e})");
}

#[test]
fn criterion_06_shift_invariance_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut max_identity_dev = 0.0f64;
    let assignments = Assignment::operator_catalog();
    for _ in 0..100 {
        let k: f64 = rng.gen_range(-5.0..5.0);
        for a in &assignments {
            let d = a.dimension_restriction().unwrap_or(rng.gen_range(2..=5));
            let basis = {
                let u = haar_random_unitary(d, rng.gen()).unwrap();
                let members = (0..d)
                    .map(|j| CVec::from_column(&u, j).projector().unwrap())
                    .collect::<Vec<_>>();
                Context::new(members).unwrap()
            };
            let eigenvalues: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let state = match a {
                Assignment::Born => Some(State::Density(random_density_matrix(d, rng.gen()).unwrap())),
                Assignment::DeutschQuartic => Some(State::Pure(random_pure_state(d, rng.gen()).unwrap())),
                _ => None,
            };
            let tags: Option<Vec<ProbabilityTag>> = match a {
                Assignment::ZurekPatch => {
                    let weights: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=9i64)).collect();
                    let total: i64 = weights.iter().sum();
                    Some(weights.into_iter().map(|w| ProbabilityTag::rational(rat(w, total))).collect())
                }
                _ => None,
            };
            let r = shift_invariance_check(a, state.as_ref(), tags.as_deref(), &basis, &eigenvalues, k).unwrap();
            let identity = k.abs() * (r.mu_sum - 1.0).abs();
            max_identity_dev = max_identity_dev.max((r.gap - identity).abs());
        }
    }
    assert!(max_identity_dev <= 1e-12, "identity deviation {max_identity_dev}");
    // the quadratic-field assignment defines no per-outcome weights
    let basis = computational_context(2).unwrap();
    let r = shift_invariance_check(
        &Assignment::from_name("two-slope").unwrap(),
        None,
        None,
        &basis,
        &[1.0, 2.0],
        1.0,
    );
    assert!(matches!(r, Err(Error::NotApplicable(_))));
    println!("criterion 06 shift invariance: PASS (gap = |k|·|sum-1| to {max_identity_dev:.2e} on 100 draws x 6 assignments)");
}

#[test]
fn criterion_07_homogeneity_and_dyadic_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ctx = bornlab::linalg::random_projective_context(3, 2, rng.gen()).unwrap();
    let effect = ctx.members()[0].clone();
    let state = State::Density(random_density_matrix(3, rng.gen()).unwrap());

    let rationals: Vec<Rational> = (1..=50).map(|k| rat(k, 50)).collect();
    let probe = busch_homogeneity_probe(&Assignment::Born, Some(&state), &effect, &rationals, &[1.0 / 2f64.sqrt()]).unwrap();
    assert!(probe.max_rational_dev <= 1e-12, "homogeneity deviation {}", probe.max_rational_dev);
    assert!(probe.limit_gaps[0].1 <= 1e-10, "limit gap {}", probe.limit_gaps[0].1);

    let tail = dyadic_tail_check(&Assignment::Born, Some(&state), &effect, 20).unwrap();
    assert!(tail.error <= 1e-10, "dyadic tail {}", tail.error);

    let m = 10;
    let t = effect.trace() / 3.0;
    let expected = (t * t) * (1.0 - (1.0 - 0.25f64.powi(m as i32)) / 3.0 - 0.5f64.powi(m as i32)).abs();
    let ts_tail = dyadic_tail_check(&Assignment::TraceSquared, None, &effect, m).unwrap();
    assert!((ts_tail.error - expected).abs() <= 1e-10, "{} vs closed form {expected}", ts_tail.error);
    assert!(ts_tail.error > 1e-4, "the quadratic rule visibly fails the tail identity");
    println!(
        "criterion 07 homogeneity/dyadic: PASS (dev {:.1e}, tail {:.1e}, quadratic-rule gap {:.4} = closed form)",
        probe.max_rational_dev, tail.error, ts_tail.error
    );
}

#[test]
fn criterion_08_additive_pathology() {
    let c1 = rat(1, 1);
    let c2 = rat(10_000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let pick = |rng: &mut ChaCha8Rng| {
        QuadRational::new(
            rat(rng.gen_range(-40..=40), rng.gen_range(1..=15)),
            rat(rng.gen_range(-40..=40), rng.gen_range(1..=15)),
        )
    };
    for _ in 0..10_000 {
        let x = pick(&mut rng);
        let y = pick(&mut rng);
        let lhs = bornlab::assignments::two_slope_eval(&(&x + &y), &c1, &c2);
        let rhs = bornlab::assignments::two_slope_eval(&x, &c1, &c2)
            + bornlab::assignments::two_slope_eval(&y, &c1, &c2);
        assert_eq!(lhs, rhs, "additivity must hold as an exact identity");
    }
    // two points within 1e-6 in the reals whose values differ by more than 1
    let one = QuadRational::from_rational(rat(1, 1));
    let near = QuadRational::new(rat(1, 1) - rat(141_421_356, 1_000_000_000_000), rat(1, 10_000));
    let dx = (near.to_f64() - one.to_f64()).abs();
    let df = (bornlab::assignments::two_slope_eval(&near, &c1, &c2).to_f64()
        - bornlab::assignments::two_slope_eval(&one, &c1, &c2).to_f64())
    .abs();
    assert!(dx <= 1e-6, "parameter gap {dx}");
    assert!(df > 1.0, "value gap {df}");
    println!("criterion 08 additive pathology: PASS (10000 exact pairs; |dx| = {dx:.2e} with |df| = {df:.4})");
}

#[test]
fn criterion_09_frequency_convergence() {
    // brute force against the binomial reduction
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut max_gap = 0.0f64;
    for d in 2..=3usize {
        for _ in 0..50 {
            let psi = random_pure_state(d, rng.gen()).unwrap();
            let target = rng.gen_range(0..d);
            let mut probs: Vec<f64> = (0..d).map(|i| psi.entry(i).norm_sqr()).collect();
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|q| *q /= total);
            for n in 1..=12u32 {
                let brute = frequency_apply_bruteforce(&psi, target, n).unwrap();
                let spec = FrequencySpec::new(probs.clone(), target, n as u64).unwrap();
                let binom = frequency_deviation_norm(&spec);
                max_gap = max_gap.max((brute - binom).abs());
            }
        }
    }
    assert!(max_gap <= 1e-12, "brute force vs binomial gap {max_gap}");

    let series = hartle_convergence_study(&[0.5, 0.5], 0, &[100, 1_000, 10_000, 100_000]).unwrap();
    let slope = series.slope.unwrap();
    assert!((slope + 0.5).abs() <= 0.02, "slope {slope}");

    let grid = [10u64, 100, 1_000, 10_000, 100_000];
    let mut max_mix_err = 0.0f64;
    let mut max_iid = 0.0f64;
    for _ in 0..10 {
        let w: f64 = rng.gen_range(0.1..0.9);
        let weights = [w, 1.0 - w];
        let qvalues = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let gap = mixed_variance_gap(&weights, &qvalues, &grid).unwrap();
        let last_mix = gap.mixture_series.points.last().unwrap().1;
        let last_iid = gap.iid_series.points.last().unwrap().1;
        max_mix_err = max_mix_err.max((last_mix - gap.mixture_limit).abs());
        max_iid = max_iid.max(last_iid);
        assert!((gap.expectation_iid - gap.expectation_mixture).abs() <= 1e-12, "expectations agree");
    }
    assert!(max_mix_err <= 1e-3, "mixture limit error {max_mix_err}");
    assert!(max_iid <= 1e-3, "single-state variance at N=1e5: {max_iid}");
    println!(
        "criterion 09 frequency convergence: PASS (brute-vs-binomial {max_gap:.1e}; slope {slope:.4}; limits within {max_mix_err:.1e})"
    );
}

#[test]
fn criterion_10_reproducibility() {
    let spec = parse_scenario(PAPER_CLAIMS).unwrap();
    let r1 = run_scenario(&spec, 1, false).unwrap();
    let r2 = run_scenario(&spec, 1, false).unwrap();
    assert_eq!(r1.canonical_json().unwrap(), r2.canonical_json().unwrap(), "same seed, same bytes");
    let r8 = run_scenario(&spec, 8, false).unwrap();
    assert_eq!(r1.canonical_json().unwrap(), r8.canonical_json().unwrap(), "thread count never matters");

    // the full written bundle, CSVs included
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    bornlab::report::write_report(&r1, d1.path()).unwrap();
    bornlab::report::write_report(&r8, d2.path()).unwrap();
    for name in &r1.series_files {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
    let a = bornlab::report::strip_timings(&std::fs::read_to_string(d1.path().join("report.json")).unwrap()).unwrap();
    let b = bornlab::report::strip_timings(&std::fs::read_to_string(d2.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(a, b);
    println!("criterion 10 reproducibility: PASS (byte-identical reports and series, jobs 1 vs 8)");
}
