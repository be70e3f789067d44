//! Regularity analysis for frame functions: fit a Hermitian operator ρ̂ to
//! rank-one values of an assignment by linear least squares and classify the
//! assignment as regular (representable as ⟨x|ρ̂|x⟩) or not by the residual.
//!
//! The fit parametrizes ρ by d² real coefficients over an orthonormal
//! Hermitian operator basis and solves the normal equations with a pivoted
//! orthogonal factorization. No regularization is applied: a biased fit
//! would mask non-regularity. The trace of ρ̂ is left unconstrained; the
//! frame weight can be read off as Tr ρ̂.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assignments::{quartic_weights, Assignment, State};
use crate::error::{Error, Result};
use crate::exact::ProbabilityTag;
use crate::linalg::{haar_unitary_with, CMat, CVec, Context, HermitianOperator, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Relative singular-value cutoff below which the design matrix is treated
/// as rank deficient.
const RANK_CUTOFF: f64 = 1e-10;

/// Default classification threshold: three orders of magnitude above fit
/// noise and three below the hemisphere residual.
pub const DEFAULT_REGULARITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Real and imaginary parts of ρ̂, row-major.
    pub rho_hat_re: Vec<Vec<f64>>,
    pub rho_hat_im: Vec<Vec<f64>>,
    pub residual_rms: f64,
    pub condition: f64,
    pub sample_count: usize,
    #[serde(skip)]
    pub rho_hat: Option<HermitianOperator>,
}

impl FitResult {
    pub fn rho(&self) -> &HermitianOperator {
        self.rho_hat.as_ref().expect("fit stores its minimizer")
    }

    /// Frame weight read off as Tr ρ̂.
    pub fn weight(&self) -> f64 {
        self.rho().trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Regular,
    NonRegular,
}

/// Orthonormal (Frobenius) basis of d×d Hermitian matrices: diagonal units,
/// symmetric pairs, antisymmetric pairs.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let inv = 1.0 / 2f64.sqrt();
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMat::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        basis.push(m);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut s = CMat::zeros(d, d);
            s[(i, j)] = C64::new(inv, 0.0);
            s[(j, i)] = C64::new(inv, 0.0);
            basis.push(s);
            let mut t = CMat::zeros(d, d);
            t[(i, j)] = C64::new(0.0, inv);
            t[(j, i)] = C64::new(0.0, -inv);
            basis.push(t);
        }
    }
    basis
}

/// Core solver: given rank-one directions x_s and target values μ(x_s),
/// minimize Σ_s (⟨x_s|ρ|x_s⟩ − μ(x_s))² over Hermitian ρ.
pub fn fit_frame_values(vectors: &[CVec], values: &[f64]) -> Result<FitResult> {
    if vectors.is_empty() || vectors.len() != values.len() {
        return Err(Error::InvalidDims("need matching, nonempty vector/value lists".into()));
    }
    let d = vectors[0].dim();
    let params = d * d;
    if vectors.len() < params {
        return Err(Error::UnderdeterminedFit { rank: vectors.len(), needed: params });
    }
    let basis = hermitian_basis(d);
    let mut design = DMatrix::<f64>::zeros(vectors.len(), params);
    for (row, x) in vectors.iter().enumerate() {
        if x.dim() != d {
            return Err(Error::InvalidDims("mixed vector dimensions".into()));
        }
        for (col, b) in basis.iter().enumerate() {
            let bx = b * x.entries();
            design[(row, col)] = x.entries().dotc(&bx).re;
        }
    }
    let y = DVector::from_column_slice(values);

    let svd = design.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = svd.singular_values.iter().filter(|&&s| s > smax * RANK_CUTOFF).count();
    if rank < params {
        return Err(Error::UnderdeterminedFit { rank, needed: params });
    }
    let condition = smax / smin;

    // normal equations, solved by column-pivoted QR
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * &y;
    let coeffs = gram
        .col_piv_qr()
        .solve(&rhs)
        .ok_or(Error::UnderdeterminedFit { rank, needed: params })?;

    let mut rho = CMat::zeros(d, d);
    for (c, b) in coeffs.iter().zip(&basis) {
        rho += b * C64::new(*c, 0.0);
    }
    let rho_hat = HermitianOperator::new(rho)?;

    let residuals = design * &coeffs - &y;
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / values.len() as f64).sqrt();

    let m = rho_hat.matrix();
    let rho_hat_re = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
    let rho_hat_im = (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect();
    Ok(FitResult {
        rho_hat_re,
        rho_hat_im,
        residual_rms,
        condition,
        sample_count: vectors.len(),
        rho_hat: Some(rho_hat),
    })
}

/// Inputs an assignment may need while being fitted.
#[derive(Debug, Clone, Default)]
pub struct FitSetup {
    pub state: Option<State>,
    pub tags: Option<Vec<ProbabilityTag>>,
}

/// Evaluates the assignment on every rank-one vector of `n_frames` random
/// orthonormal bases and fits ρ̂ by least squares.
pub fn fit_density(
    a: &Assignment,
    setup: &FitSetup,
    d: usize,
    n_frames: usize,
    seed: u64,
) -> Result<FitResult> {
    if d == 0 {
        return Err(Error::InvalidDimension("dimension 0".into()));
    }
    if n_frames * d < d * d {
        return Err(Error::InvalidDims(format!(
            "{n_frames} frames of {d} vectors cannot determine {} parameters",
            d * d
        )));
    }
    if let Some(req) = a.dimension_restriction() {
        if d != req {
            return Err(Error::NotApplicable(format!("{} is defined for dimension {req} only", a.name())));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::with_capacity(n_frames * d);
    let mut values = Vec::with_capacity(n_frames * d);
    for _ in 0..n_frames {
        let u = haar_unitary_with(d, &mut rng);
        let frame: Vec<CVec> = (0..d).map(|j| CVec::from_column(&u, j)).collect();
        let members = frame.iter().map(|v| v.projector()).collect::<Result<Vec<_>>>()?;
        let ctx = Context::new(members)?;
        for (i, x) in frame.iter().enumerate() {
            let value = rank1_value(a, setup, &ctx, i, x)?;
            vectors.push(x.clone());
            values.push(value);
        }
    }
    fit_frame_values(&vectors, &values)
}

/// μ on the i-th rank-one member of a frame.
fn rank1_value(a: &Assignment, setup: &FitSetup, ctx: &Context, i: usize, x: &CVec) -> Result<f64> {
    match a {
        Assignment::Born => {
            let state = setup
                .state
                .as_ref()
                .ok_or_else(|| Error::InvalidState("fitting the trace rule needs a state".into()))?;
            crate::assignments::born_eval(state, &ctx.members()[i])
        }
        Assignment::TraceSquared => crate::assignments::trace_squared_eval(&ctx.members()[i]),
        Assignment::EqualRule => crate::assignments::equal_rule_eval(&ctx.members()[i], ctx),
        Assignment::DeutschQuartic => {
            let state = setup
                .state
                .as_ref()
                .ok_or_else(|| Error::InvalidState("fitting the quartic rule needs a state".into()))?;
            Ok(quartic_weights(state, ctx)?[i])
        }
        Assignment::BlochHemisphere => crate::assignments::bloch_hemisphere_eval(x),
        Assignment::ZurekPatch | Assignment::TwoSlope { .. } => Err(Error::NotApplicable(format!(
            "{} does not define values on rank-one projectors",
            a.name()
        ))),
    }
}

/// Classifies a fit: regular when the residual is at or below the threshold.
pub fn regularity_verdict(fit: &FitResult, threshold: f64) -> Regularity {
    if fit.residual_rms <= threshold {
        Regularity::Regular
    } else {
        Regularity::NonRegular
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density_matrix, random_pure_state};
    use rand::Rng;

    #[test]
    fn born_refit_recovers_the_hidden_state() {
        for d in 2..=6usize {
            for trial in 0..5u64 {
                let rho = random_density_matrix(d, 100 * d as u64 + trial).unwrap();
                let setup = FitSetup { state: Some(State::Density(rho.clone())), tags: None };
                let fit = fit_density(&Assignment::Born, &setup, d, 20, 37 + trial).unwrap();
                assert!(fit.residual_rms <= 1e-10, "d={d} residual {}", fit.residual_rms);
                assert!(fit.rho().distance(&rho) <= 1e-8, "d={d} recovery {}", fit.rho().distance(&rho));
                assert_eq!(regularity_verdict(&fit, DEFAULT_REGULARITY_THRESHOLD), Regularity::Regular);
                assert!((fit.weight() - 1.0).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn constant_values_fit_the_scaled_identity() {
        // a constant frame function 1/d is represented by I/d
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut vectors = Vec::new();
        for _ in 0..20 {
            let u = haar_unitary_with(d, &mut rng);
            for j in 0..d {
                vectors.push(CVec::from_column(&u, j));
            }
        }
        let values = vec![1.0 / d as f64; vectors.len()];
        let fit = fit_frame_values(&vectors, &values).unwrap();
        assert!(fit.residual_rms <= 1e-10);
        let target = HermitianOperator::identity(d).unwrap().scale(1.0 / d as f64);
        assert!(fit.rho().distance(&target) <= 1e-8);
    }

    #[test]
    fn trace_squared_on_rank_ones_is_the_constant_fit() {
        // restricted to rank-one projectors the value is 1/d², fit by I/d²
        let d = 3;
        let fit = fit_density(&Assignment::TraceSquared, &FitSetup::default(), d, 20, 8).unwrap();
        assert!(fit.residual_rms <= 1e-10);
        let target = HermitianOperator::identity(d).unwrap().scale(1.0 / (d * d) as f64);
        assert!(fit.rho().distance(&target) <= 1e-8);
        assert_eq!(regularity_verdict(&fit, DEFAULT_REGULARITY_THRESHOLD), Regularity::Regular);
    }

    #[test]
    fn hemisphere_is_non_regular_with_a_solid_floor() {
        for seed in 0..10u64 {
            let fit = fit_density(&Assignment::BlochHemisphere, &FitSetup::default(), 2, 50, seed).unwrap();
            assert!(fit.residual_rms >= 0.05, "seed {seed}: residual {}", fit.residual_rms);
            assert_eq!(regularity_verdict(&fit, DEFAULT_REGULARITY_THRESHOLD), Regularity::NonRegular);
        }
    }

    #[test]
    fn hemisphere_floor_against_dense_grid_oracle() {
        // best possible quadratic-form fit over a dense sphere grid still
        // leaves a large residual: the step cannot be a quadratic form
        let n = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut vectors = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let x = random_pure_state(2, rng.gen()).unwrap();
            values.push(crate::assignments::bloch_hemisphere_eval(&x).unwrap());
            vectors.push(x);
        }
        let fit = fit_frame_values(&vectors, &values).unwrap();
        // the analytic best affine-in-z fit leaves rms 1/4
        assert!(fit.residual_rms > 0.2 && fit.residual_rms < 0.3, "rms {}", fit.residual_rms);
    }

    #[test]
    fn underdetermined_design_is_rejected() {
        let d = 3;
        let err = fit_density(
            &Assignment::TraceSquared,
            &FitSetup::default(),
            d,
            2, // 2 frames × 3 vectors < 9 parameters
            1,
        );
        assert!(matches!(err, Err(Error::InvalidDims(_))));

        // enough rows but rank-deficient: the same frame repeated
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary_with(d, &mut rng);
        let mut vectors = Vec::new();
        for _ in 0..5 {
            for j in 0..d {
                vectors.push(CVec::from_column(&u, j));
            }
        }
        let values = vec![0.5; vectors.len()];
        assert!(matches!(
            fit_frame_values(&vectors, &values),
            Err(Error::UnderdeterminedFit { .. })
        ));
    }

    #[test]
    fn residual_is_invariant_under_global_conjugation() {
        // conjugating the sampled frames together with the defining state
        // leaves the fit residual unchanged
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = random_density_matrix(d, 77).unwrap();
        let v = haar_unitary_with(d, &mut rng);

        let collect = |rho: &HermitianOperator, conj: Option<&CMat>, rng_seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut vectors = Vec::new();
            let mut values = Vec::new();
            for _ in 0..15 {
                let u = haar_unitary_with(d, &mut rng);
                for j in 0..d {
                    let mut x = CVec::from_column(&u, j);
                    if let Some(w) = conj {
                        x = CVec::new((w * x.entries()).iter().copied().collect()).unwrap();
                    }
                    values.push(
                        crate::assignments::born_eval(&State::Density(rho.clone()), &x.projector().unwrap())
                            .unwrap(),
                    );
                    vectors.push(x);
                }
            }
            fit_frame_values(&vectors, &values).unwrap()
        };
        let base = collect(&rho, None, 500);
        let conjugated_rho = rho.conjugate_by(&v).unwrap();
        let moved = collect(&conjugated_rho, Some(&v), 500);
        assert!((base.residual_rms - moved.residual_rms).abs() <= 1e-9);
    }
}
