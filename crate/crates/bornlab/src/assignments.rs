//! The catalog of measurement assignment functions μ behind one uniform
//! evaluation interface: the trace rule and the structured counterexamples
//! (trace-squared, equal-rule, the dimension-two quartic ratio, the
//! rational/irrational patch, the hemisphere step frame function, and the
//! exactly additive two-slope pathology).

use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::{rat, ProbabilityTag, QuadRational, Rational};
use crate::linalg::{dominant_vector, CVec, Context, HermitianOperator, XReal};

/// Tolerance used to match a queried operator against context members and
/// subset sums.
pub const MATCH_TOL: f64 = 1e-9;

/// A quantum state: a unit vector or a density matrix.
#[derive(Debug, Clone)]
pub enum State {
    Pure(CVec),
    Density(HermitianOperator),
}

impl State {
    pub fn pure(v: CVec) -> Result<Self> {
        if !v.is_unit() {
            return Err(Error::InvalidState("pure state must be a unit vector".into()));
        }
        Ok(State::Pure(v))
    }

    pub fn density(rho: HermitianOperator) -> Result<Self> {
        if !rho.is_density() {
            return Err(Error::InvalidState("density matrix must be PSD with unit trace".into()));
        }
        Ok(State::Density(rho))
    }

    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.dim(),
            State::Density(rho) => rho.dim(),
        }
    }

    /// Expectation value ⟨A⟩ in this state, as a complex number.
    fn expectation_raw(&self, a: &HermitianOperator) -> Result<num_complex::Complex64> {
        if self.dim() != a.dim() {
            return Err(Error::InvalidDims(format!("state dim {} vs operator dim {}", self.dim(), a.dim())));
        }
        match self {
            State::Pure(v) => {
                let av = a.matrix() * v.entries();
                Ok(v.entries().dotc(&av))
            }
            State::Density(rho) => Ok((rho.matrix() * a.matrix()).trace()),
        }
    }

    /// Probability weight ⟨x|ρ|x⟩ of a unit vector in this state.
    pub fn weight_of(&self, x: &CVec) -> Result<f64> {
        let p = x.projector()?;
        Ok(self.expectation_raw(&p)?.re)
    }

    /// Density-matrix form of the state.
    pub fn to_density(&self) -> Result<HermitianOperator> {
        match self {
            State::Pure(v) => v.projector(),
            State::Density(rho) => Ok(rho.clone()),
        }
    }
}

/// Born rule: μ(ρ, A) = Tr[ρA]. The imaginary residue must be below 1e-12
/// and is clipped from the returned value.
pub fn born_eval(state: &State, a: &HermitianOperator) -> Result<f64> {
    if !a.is_effect() {
        return Err(Error::InvalidOperator("trace-rule argument must be an effect".into()));
    }
    let z = state.expectation_raw(a)?;
    if z.im.abs() > 1e-12 {
        return Err(Error::InvalidOperator(format!("imaginary residue {:.3e} too large", z.im)));
    }
    Ok(z.re)
}

/// μ(A) = (Tr[A] / d)². Depends on the operator alone, so it is observable
/// non-contextual by construction, but it is not additive.
pub fn trace_squared_eval(a: &HermitianOperator) -> Result<f64> {
    if !a.is_effect() {
        return Err(Error::InvalidOperator("trace-squared argument must be an effect".into()));
    }
    let d = a.dim() as f64;
    Ok((a.trace() / d).powi(2))
}

/// Equal rule, exact form: every member of the measured set receives 1/N,
/// and an operator matching a sum of a subset of members receives k/N by
/// within-context additivity. Returns the exact rational value.
pub fn equal_rule_eval_exact(a: &HermitianOperator, ctx: &Context) -> Result<Rational> {
    let n = ctx.len() as i64;
    if ctx.member_index(a, MATCH_TOL).is_some() {
        return Ok(rat(1, n));
    }
    let subset = match_subset_sum(a, ctx)?;
    Ok(rat(subset.len() as i64, n))
}

/// Equal rule as a real number; see [`equal_rule_eval_exact`].
pub fn equal_rule_eval(a: &HermitianOperator, ctx: &Context) -> Result<f64> {
    let q = equal_rule_eval_exact(a, ctx)?;
    Ok(q.to_f64().expect("small rational"))
}

/// Identifies the subset of context members whose sum matches `a` within
/// [`MATCH_TOL`]. Projective contexts use greedy projector matching (a member
/// belongs to the subset exactly when it is left fixed by the queried sum);
/// other contexts fall back to exhaustive subset search for up to 16 members.
fn match_subset_sum(a: &HermitianOperator, ctx: &Context) -> Result<Vec<usize>> {
    let dim = ctx.dim();
    if a.dim() != dim {
        return Err(Error::InvalidDims("query/context dimension mismatch".into()));
    }
    if ctx.is_projective() && a.is_projector() {
        let mut subset = Vec::new();
        for (i, m) in ctx.members().iter().enumerate() {
            // m ≤ a for projectors exactly when a·m = m
            let fixed = (a.matrix() * m.matrix() - m.matrix()).norm() <= MATCH_TOL;
            if fixed {
                subset.push(i);
            }
        }
        if verify_subset(a, ctx, &subset) {
            return Ok(subset);
        }
    }
    if ctx.len() <= 16 {
        for bits in 0u32..(1u32 << ctx.len()) {
            let subset: Vec<usize> = (0..ctx.len()).filter(|i| bits >> i & 1 == 1).collect();
            if verify_subset(a, ctx, &subset) {
                return Ok(subset);
            }
        }
    }
    Err(Error::NotInContextAlgebra)
}

fn verify_subset(a: &HermitianOperator, ctx: &Context, subset: &[usize]) -> bool {
    let dim = ctx.dim();
    let mut sum = nalgebra::DMatrix::zeros(dim, dim);
    for &i in subset {
        sum += ctx.members()[i].matrix();
    }
    (sum - a.matrix()).norm() <= MATCH_TOL
}

/// Per-outcome weights of the quartic ratio rule in any dimension:
/// w_i = q_i² / Σ_j q_j² with q_i the Born weight of the i-th basis member.
/// The rule is only offered as a catalog assignment for dimension two.
pub fn quartic_weights(state: &State, basis: &Context) -> Result<Vec<f64>> {
    if !basis.is_complete() || !basis.is_projective() {
        return Err(Error::InvalidOperator("quartic rule needs a complete projective basis".into()));
    }
    let vectors = basis.rank1_vectors()?;
    let q: Vec<f64> = vectors
        .iter()
        .map(|x| state.weight_of(x))
        .collect::<Result<Vec<_>>>()?;
    let denom: f64 = q.iter().map(|v| v * v).sum();
    if denom <= 1e-300 {
        return Err(Error::InvalidState("state is orthogonal to every basis member".into()));
    }
    Ok(q.iter().map(|v| v * v / denom).collect())
}

/// Quartic ratio counterexample, restricted to dimension two: the weight of
/// outcome `i` in a rank-one basis of size two.
pub fn deutsch_quartic_eval(state: &State, i: usize, basis: &Context) -> Result<f64> {
    if state.dim() != 2 || basis.dim() != 2 || basis.len() != 2 {
        return Err(Error::InvalidDimension("quartic rule is defined for dimension two only".into()));
    }
    let w = quartic_weights(state, basis)?;
    w.get(i).copied().ok_or_else(|| Error::InvalidDims(format!("outcome index {i} out of range")))
}

/// Patch rule driven by exact probability tags: a rational tag contributes
/// its own value, an irrational tag contributes √2.
pub fn zurek_patch_eval(tags: &[ProbabilityTag], i: usize) -> Result<f64> {
    if !crate::exact::tags_consistent(tags) {
        return Err(Error::InvalidTags("tag embeddings do not sum to 1 within 1e-12".into()));
    }
    let tag = tags.get(i).ok_or_else(|| Error::InvalidTags(format!("outcome index {i} out of range")))?;
    Ok(patch_value(tag))
}

/// The patch value of one tag, without the whole-set consistency check.
pub fn patch_value(tag: &ProbabilityTag) -> f64 {
    match tag {
        ProbabilityTag::Rational(q) => q.to_f64().expect("finite rational"),
        ProbabilityTag::Irrational(_) => std::f64::consts::SQRT_2,
    }
}

/// Hemisphere step function on the Bloch sphere: 1 on the upper hemisphere,
/// 0 on the lower, 1/2 on the equator band of width 1e-12. Antipodal pairs
/// sum to exactly 1, making this a frame function of weight 1 in dimension
/// two that no Hermitian operator can represent.
pub fn bloch_hemisphere_eval(x: &CVec) -> Result<f64> {
    if x.dim() != 2 {
        return Err(Error::InvalidDimension("hemisphere rule is defined for dimension two only".into()));
    }
    if !x.is_unit() {
        return Err(Error::InvalidState("hemisphere rule needs a unit vector".into()));
    }
    let z = x.entry(0).norm_sqr() - x.entry(1).norm_sqr();
    Ok(if z > 1e-12 {
        1.0
    } else if z < -1e-12 {
        0.0
    } else {
        0.5
    })
}

/// Exactly additive two-slope function on ℚ(√2):
/// f(a + b√2) = c1·a + c2·b√2. Additivity holds as an identity of exact
/// field elements; with c1 ≠ c2 the function is wildly discontinuous in the
/// real embedding.
pub fn two_slope_eval(x: &QuadRational, c1: &Rational, c2: &Rational) -> QuadRational {
    QuadRational::new(x.rational_part() * c1, x.sqrt2_part() * c2)
}

/// Which inputs an assignment consumes. An assignment whose `context` flag is
/// false returns identical values for the same operator across all contexts,
/// which makes it observable non-contextual by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Consumes {
    pub operator: bool,
    pub context: bool,
    pub state: bool,
    pub tags: bool,
}

/// A named measurement assignment from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    Born,
    TraceSquared,
    EqualRule,
    DeutschQuartic,
    ZurekPatch,
    BlochHemisphere,
    TwoSlope { c1: Rational, c2: Rational },
}

/// One evaluation request: the measured operator, the context it is measured
/// in, and the optional state and tag inputs.
#[derive(Debug, Clone)]
pub struct EvalInput<'a> {
    pub op: &'a HermitianOperator,
    pub ctx: &'a Context,
    pub state: Option<&'a State>,
    pub tags: Option<&'a [ProbabilityTag]>,
}

impl Assignment {
    /// Stable identifiers used by scenario files and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Assignment::Born => "born",
            Assignment::TraceSquared => "trace-squared",
            Assignment::EqualRule => "equal-rule",
            Assignment::DeutschQuartic => "deutsch-quartic",
            Assignment::ZurekPatch => "zurek-patch",
            Assignment::BlochHemisphere => "bloch-hemisphere",
            Assignment::TwoSlope { .. } => "two-slope",
        }
    }

    /// Resolves a catalog name. The two-slope assignment defaults to the
    /// slope pair (1, 10000), the standard discontinuity witness.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "born" => Ok(Assignment::Born),
            "trace-squared" => Ok(Assignment::TraceSquared),
            "equal-rule" => Ok(Assignment::EqualRule),
            "deutsch-quartic" => Ok(Assignment::DeutschQuartic),
            "zurek-patch" => Ok(Assignment::ZurekPatch),
            "bloch-hemisphere" => Ok(Assignment::BlochHemisphere),
            "two-slope" => Ok(Assignment::TwoSlope { c1: rat(1, 1), c2: rat(10_000, 1) }),
            other => Err(Error::UnknownIdentifier(format!("assignment {other:?}"))),
        }
    }

    /// The full catalog under default parameters.
    pub fn catalog() -> Vec<Assignment> {
        vec![
            Assignment::Born,
            Assignment::TraceSquared,
            Assignment::EqualRule,
            Assignment::DeutschQuartic,
            Assignment::ZurekPatch,
            Assignment::BlochHemisphere,
            Assignment::TwoSlope { c1: rat(1, 1), c2: rat(10_000, 1) },
        ]
    }

    /// The six assignments with an operator domain (everything except the
    /// two-slope function, whose domain is ℚ(√2)).
    pub fn operator_catalog() -> Vec<Assignment> {
        Self::catalog().into_iter().filter(|a| !matches!(a, Assignment::TwoSlope { .. })).collect()
    }

    pub fn consumes(&self) -> Consumes {
        match self {
            Assignment::Born => Consumes { operator: true, context: false, state: true, tags: false },
            Assignment::TraceSquared => {
                Consumes { operator: true, context: false, state: false, tags: false }
            }
            Assignment::EqualRule => {
                Consumes { operator: true, context: true, state: false, tags: false }
            }
            Assignment::DeutschQuartic => {
                Consumes { operator: true, context: true, state: true, tags: false }
            }
            Assignment::ZurekPatch => {
                Consumes { operator: true, context: true, state: false, tags: true }
            }
            Assignment::BlochHemisphere => {
                Consumes { operator: true, context: false, state: false, tags: false }
            }
            Assignment::TwoSlope { .. } => {
                Consumes { operator: false, context: false, state: false, tags: false }
            }
        }
    }

    /// Dimensions in which the assignment is defined (`None` = every d ≥ 1).
    pub fn dimension_restriction(&self) -> Option<usize> {
        match self {
            Assignment::DeutschQuartic | Assignment::BlochHemisphere => Some(2),
            _ => None,
        }
    }

    /// Uniform evaluation of μ(operator | context, state, tags).
    pub fn evaluate(&self, input: &EvalInput<'_>) -> Result<XReal> {
        match self {
            Assignment::Born => {
                let state = input.state.ok_or_else(|| Error::InvalidState("trace rule needs a state".into()))?;
                Ok(XReal::finite(born_eval(state, input.op)?))
            }
            Assignment::TraceSquared => Ok(XReal::finite(trace_squared_eval(input.op)?)),
            Assignment::EqualRule => Ok(XReal::finite(equal_rule_eval(input.op, input.ctx)?)),
            Assignment::DeutschQuartic => {
                let state = input.state.ok_or_else(|| Error::InvalidState("quartic rule needs a state".into()))?;
                let i = input
                    .ctx
                    .member_index(input.op, MATCH_TOL)
                    .ok_or(Error::NotInContextAlgebra)?;
                Ok(XReal::finite(deutsch_quartic_eval(state, i, input.ctx)?))
            }
            Assignment::ZurekPatch => {
                let tags = input.tags.ok_or(Error::MissingTags)?;
                let i = input
                    .ctx
                    .member_index(input.op, MATCH_TOL)
                    .ok_or(Error::NotInContextAlgebra)?;
                Ok(XReal::finite(zurek_patch_eval(tags, i)?))
            }
            Assignment::BlochHemisphere => {
                if !input.op.is_projector() || input.op.projector_rank() != 1 {
                    return Err(Error::InvalidOperator("hemisphere rule is defined on rank-one projectors".into()));
                }
                let x = dominant_vector(input.op)?;
                Ok(XReal::finite(bloch_hemisphere_eval(&x)?))
            }
            Assignment::TwoSlope { .. } => Err(Error::NotApplicable(
                "two-slope domain is the quadratic field, not operators".into(),
            )),
        }
    }

    /// Exact value where the assignment defines one (equal rule; patch on a
    /// rational tag). Used by checkers to report exact discrepancies.
    pub fn evaluate_exact(&self, input: &EvalInput<'_>) -> Option<Rational> {
        match self {
            Assignment::EqualRule => equal_rule_eval_exact(input.op, input.ctx).ok(),
            Assignment::ZurekPatch => {
                let tags = input.tags?;
                let i = input.ctx.member_index(input.op, MATCH_TOL)?;
                match tags.get(i)? {
                    ProbabilityTag::Rational(q) => Some(q.clone()),
                    ProbabilityTag::Irrational(_) => None,
                }
            }
            _ => None,
        }
    }
}

/// Two-slope assignment helper: evaluates and also reports the real
/// embedding of the exact result.
pub fn two_slope_report(x: &QuadRational, c1: &Rational, c2: &Rational) -> (QuadRational, f64) {
    let exact = two_slope_eval(x, c1, c2);
    let real = exact.to_f64();
    (exact, real)
}

/// Values on the two basis directions: f(1) = c1 and f(√2) = c2·√2.
pub fn two_slope_basis_values(c1: &Rational, c2: &Rational) -> (QuadRational, QuadRational) {
    (
        two_slope_eval(&QuadRational::from_rational(Rational::one()), c1, c2),
        two_slope_eval(&QuadRational::sqrt2(), c1, c2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        random_density_matrix, random_projective_context, random_pure_state, C64,
    };
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn computational_basis(d: usize) -> Context {
        let members = (0..d)
            .map(|i| CVec::basis_vector(d, i).unwrap().projector().unwrap())
            .collect();
        Context::new(members).unwrap()
    }

    #[test]
    fn born_maximally_mixed_gives_one_over_d() {
        for d in 2..=5usize {
            let rho = HermitianOperator::identity(d).unwrap().scale(1.0 / d as f64);
            let state = State::density(rho).unwrap();
            let p = CVec::basis_vector(d, 0).unwrap().projector().unwrap();
            let v = born_eval(&state, &p).unwrap();
            assert!((v - 1.0 / d as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn born_symmetric_superposition_gives_half() {
        let inv = 1.0 / 2f64.sqrt();
        let psi = CVec::unit(vec![C64::new(inv, 0.0), C64::new(inv, 0.0)]).unwrap();
        let state = State::pure(psi).unwrap();
        let p = CVec::basis_vector(2, 0).unwrap().projector().unwrap();
        assert!((born_eval(&state, &p).unwrap() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn born_matches_entrywise_double_sum_oracle() {
        for seed in 0..20u64 {
            let d = 2 + (seed as usize % 4);
            let rho = random_density_matrix(d, seed).unwrap();
            let ctx = random_projective_context(d, d, seed + 1000).unwrap();
            let a = &ctx.members()[0];
            let direct = born_eval(&State::Density(rho.clone()), a).unwrap();
            // Σ_{ij} ρ_{ij} A_{ji}
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += rho.matrix()[(i, j)] * a.matrix()[(j, i)];
                }
            }
            assert!((direct - acc.re).abs() <= 1e-12);
        }
    }

    #[test]
    fn born_is_linear_in_the_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let d = 2 + rng.gen_range(0..4usize);
            let rho = random_density_matrix(d, rng.gen()).unwrap();
            let state = State::Density(rho);
            let ctx = random_projective_context(d, d, rng.gen()).unwrap();
            let a = &ctx.members()[0];
            let b = &ctx.members()[1];
            // convex coefficients keep αA + βB an effect
            let alpha = rng.gen_range(0.0..1.0);
            let beta = 1.0 - alpha;
            let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
            let lhs = born_eval(&state, &combo).unwrap();
            let rhs = alpha * born_eval(&state, a).unwrap() + beta * born_eval(&state, b).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn trace_squared_examples() {
        let p = CVec::basis_vector(2, 0).unwrap().projector().unwrap();
        assert!((trace_squared_eval(&p).unwrap() - 0.25).abs() <= 1e-15);

        let id = HermitianOperator::identity(3).unwrap();
        assert!((trace_squared_eval(&id).unwrap() - 1.0).abs() <= 1e-15);

        // rank-one pair in d=2: value of the sum is 1, the sum of values 1/2
        let q = CVec::basis_vector(2, 1).unwrap().projector().unwrap();
        let sum = p.add(&q).unwrap();
        let merged = trace_squared_eval(&sum).unwrap();
        let split = trace_squared_eval(&p).unwrap() + trace_squared_eval(&q).unwrap();
        assert!((merged - 1.0).abs() <= 1e-15);
        assert!((split - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn equal_rule_subset_sums() {
        let ctx = random_projective_context(3, 3, 77).unwrap();
        let a01 = ctx.members()[0].add(&ctx.members()[1]).unwrap();
        assert_eq!(equal_rule_eval_exact(&a01, &ctx).unwrap(), rat(2, 3));

        let ctx4 = random_projective_context(4, 4, 78).unwrap();
        let b01 = ctx4.members()[0].add(&ctx4.members()[1]).unwrap();
        assert_eq!(equal_rule_eval_exact(&b01, &ctx4).unwrap(), rat(1, 2));

        // the same rank-two operator scores 2/3 in a three-member context and
        // 1/2 when it is itself a member of a two-member context
        let fine = random_projective_context(3, 3, 79).unwrap();
        let s = fine.members()[1].add(&fine.members()[2]).unwrap();
        assert_eq!(equal_rule_eval_exact(&s, &fine).unwrap(), rat(2, 3));
        let coarse = Context::new(vec![fine.members()[0].clone(), s.clone()]).unwrap();
        assert_eq!(equal_rule_eval_exact(&s, &coarse).unwrap(), rat(1, 2));

        // full-context sum is exactly 1
        let full = fine.members().iter().skip(1).fold(fine.members()[0].clone(), |acc, m| acc.add(m).unwrap());
        assert_eq!(equal_rule_eval_exact(&full, &fine).unwrap(), rat(1, 1));

        // an operator outside the subset-sum algebra errors
        let outside = random_projective_context(3, 3, 80).unwrap().members()[0].clone();
        assert!(matches!(equal_rule_eval_exact(&outside, &fine), Err(Error::NotInContextAlgebra)));
    }

    #[test]
    fn quartic_examples() {
        let basis = computational_basis(2);
        let inv = 1.0 / 2f64.sqrt();
        let sym = State::pure(CVec::unit(vec![C64::new(inv, 0.0), C64::new(inv, 0.0)]).unwrap()).unwrap();
        assert!((deutsch_quartic_eval(&sym, 0, &basis).unwrap() - 0.5).abs() <= 1e-12);
        assert!((deutsch_quartic_eval(&sym, 1, &basis).unwrap() - 0.5).abs() <= 1e-12);

        let eigen = State::pure(CVec::basis_vector(2, 0).unwrap()).unwrap();
        assert!((deutsch_quartic_eval(&eigen, 0, &basis).unwrap() - 1.0).abs() <= 1e-12);

        // |⟨ψ|x₁⟩|² = 1/3 → (1/9)/(1/9 + 4/9) = 1/5, hand-evaluated
        let psi = State::pure(
            CVec::unit(vec![C64::new((1f64 / 3.0).sqrt(), 0.0), C64::new((2f64 / 3.0).sqrt(), 0.0)]).unwrap(),
        )
        .unwrap();
        assert!((deutsch_quartic_eval(&psi, 0, &basis).unwrap() - 0.2).abs() <= 1e-12);

        // weights sum to 1 over any d=2 basis
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let st = State::Pure(random_pure_state(2, rng.gen()).unwrap());
            let ctx = random_projective_context(2, 2, rng.gen()).unwrap();
            let w = quartic_weights(&st, &ctx).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        assert!(deutsch_quartic_eval(&eigen, 0, &computational_basis(3)).is_err());
    }

    #[test]
    fn patch_examples() {
        let tags = [ProbabilityTag::parse("1/2").unwrap(), ProbabilityTag::parse("1/2").unwrap()];
        assert_eq!(zurek_patch_eval(&tags, 0).unwrap(), 0.5);

        let tags = [ProbabilityTag::parse("1/3").unwrap(), ProbabilityTag::parse("2/3").unwrap()];
        assert!((zurek_patch_eval(&tags, 1).unwrap() - 2.0 / 3.0).abs() <= 1e-15);

        // irrational slot returns sqrt(2) regardless of the tagged magnitude
        let tags = [
            ProbabilityTag::parse("1 - 1/2*sqrt2").unwrap(),
            ProbabilityTag::parse("1/2*sqrt2").unwrap(),
        ];
        assert!(crate::exact::tags_consistent(&tags));
        assert!((zurek_patch_eval(&tags, 0).unwrap() - std::f64::consts::SQRT_2).abs() <= 1e-15);

        let bad = [ProbabilityTag::parse("1/2").unwrap(), ProbabilityTag::parse("1/3").unwrap()];
        assert!(zurek_patch_eval(&bad, 0).is_err());
    }

    #[test]
    fn hemisphere_examples_and_frame_property() {
        let north = CVec::basis_vector(2, 0).unwrap();
        let south = CVec::basis_vector(2, 1).unwrap();
        assert_eq!(bloch_hemisphere_eval(&north).unwrap(), 1.0);
        assert_eq!(bloch_hemisphere_eval(&south).unwrap(), 0.0);
        let inv = 1.0 / 2f64.sqrt();
        let equator = CVec::unit(vec![C64::new(inv, 0.0), C64::new(inv, 0.0)]).unwrap();
        assert_eq!(bloch_hemisphere_eval(&equator).unwrap(), 0.5);

        // f(x) + f(x⊥) = 1 exactly for every sampled basis pair
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let ctx = random_projective_context(2, 2, rng.gen()).unwrap();
            let vs = ctx.rank1_vectors().unwrap();
            let total = bloch_hemisphere_eval(&vs[0]).unwrap() + bloch_hemisphere_eval(&vs[1]).unwrap();
            assert_eq!(total, 1.0);
        }
    }

    #[test]
    fn two_slope_is_exactly_additive() {
        let c1 = rat(1, 1);
        let c2 = rat(10_000, 1);
        assert_eq!(
            two_slope_eval(&QuadRational::from_rational(rat(1, 1)), &c1, &c2),
            QuadRational::from_rational(rat(1, 1))
        );

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rand_quad = |rng: &mut ChaCha8Rng| {
            QuadRational::new(
                rat(rng.gen_range(-30..=30), rng.gen_range(1..=12)),
                rat(rng.gen_range(-30..=30), rng.gen_range(1..=12)),
            )
        };
        for _ in 0..10_000 {
            let x = rand_quad(&mut rng);
            let y = rand_quad(&mut rng);
            let lhs = two_slope_eval(&(&x + &y), &c1, &c2);
            let rhs = two_slope_eval(&x, &c1, &c2) + two_slope_eval(&y, &c1, &c2);
            assert_eq!(lhs, rhs);
        }

        // rational homogeneity f(qx) = q f(x)
        let q = rat(3, 7);
        for _ in 0..100 {
            let x = rand_quad(&mut rng);
            assert_eq!(two_slope_eval(&x.scale(&q), &c1, &c2), two_slope_eval(&x, &c1, &c2).scale(&q));
        }

        // slopes (1, 10000): nearby reals 1 and sqrt(2) map far apart
        let fx = two_slope_eval(&QuadRational::from_rational(rat(1, 1)), &c1, &c2).to_f64();
        let fy = two_slope_eval(&QuadRational::sqrt2(), &c1, &c2).to_f64();
        assert_eq!(fx, 1.0);
        assert!((fy - 10_000.0 * std::f64::consts::SQRT_2).abs() <= 1e-9);
    }

    #[test]
    fn uniform_interface_dispatch() {
        let ctx = computational_basis(2);
        let op = &ctx.members()[0];
        let rho = random_density_matrix(2, 4).unwrap();
        let state = State::Density(rho);
        let tags = vec![ProbabilityTag::parse("1/2").unwrap(), ProbabilityTag::parse("1/2").unwrap()];

        let input = EvalInput { op, ctx: &ctx, state: Some(&state), tags: Some(&tags) };
        for a in Assignment::operator_catalog() {
            let v = a.evaluate(&input).unwrap();
            assert!(v.is_finite(), "{}", a.name());
        }
        let two_slope = Assignment::from_name("two-slope").unwrap();
        assert!(matches!(two_slope.evaluate(&input), Err(Error::NotApplicable(_))));
        assert!(Assignment::from_name("nope").is_err());

        // the patch demands its tags
        let no_tags = EvalInput { op, ctx: &ctx, state: Some(&state), tags: None };
        assert!(matches!(Assignment::ZurekPatch.evaluate(&no_tags), Err(Error::MissingTags)));
    }

    #[test]
    fn context_free_assignments_ignore_the_context() {
        // the checkable meaning of the consumes declaration
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let ctx1 = random_projective_context(3, 3, rng.gen()).unwrap();
            let ctx2 = random_projective_context(3, 2, rng.gen()).unwrap();
            let op = ctx1.members()[0].clone();
            let st = State::Density(random_density_matrix(3, rng.gen()).unwrap());
            for a in [Assignment::Born, Assignment::TraceSquared] {
                assert!(!a.consumes().context);
                let v1 = a
                    .evaluate(&EvalInput { op: &op, ctx: &ctx1, state: Some(&st), tags: None })
                    .unwrap()
                    .as_f64();
                let v2 = a
                    .evaluate(&EvalInput { op: &op, ctx: &ctx2, state: Some(&st), tags: None })
                    .unwrap()
                    .as_f64();
                assert_eq!(v1, v2);
            }
        }
    }
}
