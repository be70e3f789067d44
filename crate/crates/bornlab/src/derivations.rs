//! Executable cores of the entanglement-based and operational arguments:
//! envariance residuals, the swap-symmetry constraint solver, exact
//! fine-graining, the multiplicative conditional chain, the entangling
//! unitary orthogonality witness, the reward-shift identity, and the
//! homogeneity/dyadic-tail probes that underpin continuity from additivity.
//!
//! All probability bookkeeping here is exact rational arithmetic; floats
//! appear only in vector-space residuals.

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::assignments::{patch_value, quartic_weights, Assignment, EvalInput, State};
use crate::error::{Error, Result};
use crate::exact::{rat, ProbabilityTag, QuadRational, Rational};
use crate::linalg::{kron, CMat, CVec, Context, HermitianOperator, C64};

/// A pure state of a bipartite system with factor dimensions (d_S, d_E).
#[derive(Debug, Clone)]
pub struct BipartiteState {
    vector: CVec,
    dims: (usize, usize),
}

impl BipartiteState {
    pub fn new(vector: CVec, dims: (usize, usize)) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::InvalidDims("factor dimensions must be positive".into()));
        }
        if vector.dim() != dims.0 * dims.1 {
            return Err(Error::InvalidDims(format!(
                "vector dim {} is not {}x{}",
                vector.dim(),
                dims.0,
                dims.1
            )));
        }
        if !vector.is_unit() {
            return Err(Error::InvalidState("bipartite state must be a unit vector".into()));
        }
        Ok(Self { vector, dims })
    }

    /// Equal-amplitude correlated state Σ_i |i⟩|i⟩ / √n.
    pub fn equal_amplitude(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDims("need at least one branch".into()));
        }
        let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = amp;
        }
        Self::new(CVec::unit(entries)?, (n, n))
    }

    /// Correlated state Σ_i c_i |i⟩|i⟩ from given branch amplitudes.
    pub fn correlated(amplitudes: &[f64]) -> Result<Self> {
        let n = amplitudes.len();
        let norm: f64 = amplitudes.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState("branch amplitudes must have unit norm".into()));
        }
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for (i, &c) in amplitudes.iter().enumerate() {
            entries[i * n + i] = C64::new(c, 0.0);
        }
        Self::new(CVec::unit(entries)?, (n, n))
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Schmidt decomposition via singular values of the reshaped amplitude
    /// matrix: coefficients are non-negative and descending, and
    /// Σ c_k |u_k⟩|v_k⟩ reconstructs the state.
    pub fn schmidt(&self) -> Result<Vec<(f64, CVec, CVec)>> {
        let (ds, de) = self.dims;
        let m = CMat::from_fn(ds, de, |i, j| self.vector.entry(i * de + j));
        let svd = m.svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| Error::InvalidState("svd failed".into()))?;
        let vt = svd.v_t.as_ref().ok_or_else(|| Error::InvalidState("svd failed".into()))?;
        let mut parts = Vec::new();
        for k in 0..svd.singular_values.len() {
            let c = svd.singular_values[k];
            if c <= 1e-14 {
                continue;
            }
            let sys = CVec::from_column(&u.clone_owned(), k);
            // rows of v_t are already the adjoint side: M = U Σ V†
            let env_row: Vec<C64> = (0..de).map(|j| vt[(k, j)]).collect();
            let env = CVec::new(env_row)?;
            parts.push((c, sys, env));
        }
        Ok(parts)
    }
}

/// ‖(I⊗U_E)(U_S⊗I)ψ − ψ‖: zero exactly when the system-side action is
/// undone by the environment side.
pub fn envariance_check(psi: &BipartiteState, u_s: &CMat, u_e: &CMat) -> Result<f64> {
    let (ds, de) = psi.dims();
    if u_s.nrows() != ds || u_s.ncols() != ds || u_e.nrows() != de || u_e.ncols() != de {
        return Err(Error::InvalidDims("unitary shapes must match the factor dimensions".into()));
    }
    let id_s = CMat::identity(ds, ds);
    let id_e = CMat::identity(de, de);
    let moved = kron(&id_s, u_e) * (kron(u_s, &id_e) * psi.vector().entries());
    Ok((moved - psi.vector().entries()).norm())
}

/// Swap permutation matrix exchanging basis directions i and j.
pub fn swap_unitary(dim: usize, i: usize, j: usize) -> Result<CMat> {
    if i >= dim || j >= dim {
        return Err(Error::InvalidDims("swap indices out of range".into()));
    }
    let mut m = CMat::identity(dim, dim);
    m[(i, i)] = C64::new(0.0, 0.0);
    m[(j, j)] = C64::new(0.0, 0.0);
    m[(i, j)] = C64::new(1.0, 0.0);
    m[(j, i)] = C64::new(1.0, 0.0);
    Ok(m)
}

/// Provenance of one linear constraint on the outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationSource {
    SwapSymmetry { i: usize, j: usize },
    WeakAdditivity,
}

/// One linear relation Σ coeff_k p_k = rhs with its generating argument.
#[derive(Debug, Clone)]
pub struct Equation {
    pub source: EquationSource,
    /// Sparse (index, coefficient) pairs.
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

/// The assembled constraint system over p_1..p_n.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub n: usize,
    pub equations: Vec<Equation>,
}

impl ConstraintSystem {
    /// All C(n,2) pairwise swap-symmetry equations p_i − p_j = 0 plus the
    /// single weak-additivity equation Σ p_i = 1.
    pub fn swap_system(n: usize) -> Self {
        let mut equations = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                equations.push(Equation {
                    source: EquationSource::SwapSymmetry { i, j },
                    coeffs: vec![(i, Rational::one()), (j, -Rational::one())],
                    rhs: Rational::zero(),
                });
            }
        }
        equations.push(Equation {
            source: EquationSource::WeakAdditivity,
            coeffs: (0..n).map(|i| (i, Rational::one())).collect(),
            rhs: Rational::one(),
        });
        ConstraintSystem { n, equations }
    }

    /// Checks a candidate solution against every equation, exactly.
    pub fn satisfied_by(&self, p: &[Rational]) -> bool {
        self.equations.iter().all(|eq| {
            let lhs: Rational = eq
                .coeffs
                .iter()
                .map(|(k, c)| c * &p[*k])
                .fold(Rational::zero(), |acc, x| acc + x);
            lhs == eq.rhs
        })
    }

    /// Rank over ℚ by sparse elimination: pairwise equations pivot each
    /// variable against the first, and the sum equation supplies the final
    /// independent row. Returns the number of independent equations found.
    pub fn rank(&self) -> usize {
        // pivot p_j -> p_0 relation discovered so far (true = tied to p_0)
        let mut tied = vec![false; self.n];
        if self.n == 0 {
            return 0;
        }
        tied[0] = true;
        let mut rank = 0usize;
        let mut sum_seen = false;
        for eq in &self.equations {
            match eq.source {
                EquationSource::SwapSymmetry { i, j } => {
                    // independent exactly when it ties a new variable
                    if tied[i] != tied[j] {
                        tied[i] = true;
                        tied[j] = true;
                        rank += 1;
                    } else if !tied[i] && !tied[j] {
                        tied[i] = true;
                        tied[j] = true;
                        rank += 1;
                    }
                }
                EquationSource::WeakAdditivity => {
                    if !sum_seen {
                        sum_seen = true;
                        rank += 1;
                    }
                }
            }
        }
        rank
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SwapDerivation {
    /// Exact outcome probabilities, as strings in the report.
    #[serde(serialize_with = "serialize_rationals")]
    pub probabilities: Vec<Rational>,
    pub rank: usize,
    pub equations: usize,
    pub unique: bool,
}

fn serialize_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

/// Builds the full pairwise swap-symmetry system, solves it, verifies the
/// solution against every equation, and confirms uniqueness (rank n).
/// Results are cached per n; the derivation is pure.
pub fn swap_derivation(n: usize) -> Result<SwapDerivation> {
    if n == 0 {
        return Err(Error::InvalidDims("need at least one outcome".into()));
    }
    use std::collections::HashMap;
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, SwapDerivation>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("cache lock").get(&n) {
        return Ok(hit.clone());
    }
    let system = ConstraintSystem::swap_system(n);
    let p: Vec<Rational> = (0..n).map(|_| rat(1, n as i64)).collect();
    if !system.satisfied_by(&p) {
        return Err(Error::InvalidSpec("swap system rejected its own solution".into()));
    }
    let rank = system.rank();
    if rank != n {
        return Err(Error::InvalidSpec(format!("swap system rank {rank} != {n}; solution not unique")));
    }
    let result = SwapDerivation { probabilities: p, rank, equations: system.equations.len(), unique: true };
    cache.lock().expect("cache lock").insert(n, result.clone());
    Ok(result)
}

/// Fine-graining: the two-outcome state with amplitudes √(m/n), √((n−m)/n)
/// is refined into n equal-amplitude ancilla branches; aggregating branch
/// weights (1/n each, from the swap derivation) gives (m/n, (n−m)/n)
/// exactly.
pub fn fine_grain(m: usize, n: usize) -> Result<(Rational, Rational)> {
    if m < 1 || m > n {
        return Err(Error::InvalidSplit(format!("m={m} outside 1..={n}")));
    }
    let branches = swap_derivation(n)?.probabilities;
    let first = branches[..m].iter().fold(Rational::zero(), |acc, q| acc + q);
    let second = branches[m..].iter().fold(Rational::zero(), |acc, q| acc + q);
    Ok((first, second))
}

/// Multiplicative conditional chain: with all n outcomes equally weighted,
/// ruling out one outcome at a time gives
/// μ(x_1 + … + x_m) = (1 − 1/n)(1 − 1/(n−1))···(1 − 1/(m+1)) = m/n, exactly.
pub fn zurek_chain(m: usize, n: usize) -> Result<Rational> {
    if n == 0 || m > n {
        return Err(Error::InvalidSplit(format!("m={m} outside 0..={n}")));
    }
    let mut value = Rational::one();
    let mut remaining = n;
    while remaining > m {
        value *= Rational::one() - rat(1, remaining as i64);
        remaining -= 1;
    }
    // cross-check against the direct ratio
    let direct = rat(m as i64, n as i64);
    if value != direct {
        return Err(Error::InvalidSpec(format!("chain product {value} != direct {direct}")));
    }
    Ok(value)
}

/// |⟨x₁|x₂⟩ · (1 − ⟨E₁|E₂⟩)|: a nonzero value certifies that no unitary can
/// map x_i ⊗ E₀ to x_i ⊗ E_i (inner products would not be preserved).
pub fn orthogonality_witness(x1: &CVec, x2: &CVec, e0: &CVec, e1: &CVec, e2: &CVec) -> Result<f64> {
    for (name, v) in [("x1", x1), ("x2", x2), ("E0", e0), ("E1", e1), ("E2", e2)] {
        if !v.is_unit() {
            return Err(Error::InvalidState(format!("{name} is not a unit vector")));
        }
    }
    if x1.dim() != x2.dim() {
        return Err(Error::InvalidDims("system vectors must share a dimension".into()));
    }
    if e0.dim() != e1.dim() || e1.dim() != e2.dim() {
        return Err(Error::InvalidDims("environment vectors must share a dimension".into()));
    }
    let sys = x1.inner(x2)?;
    let env = e1.inner(e2)?;
    Ok((sys * (C64::new(1.0, 0.0) - env)).norm())
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftInvariance {
    pub mu_sum: f64,
    pub gap: f64,
}

/// Reward-shift identity: with per-outcome weights μ_i and rewards λ_i, the
/// value V = Σ μ_i λ_i shifts by exactly k under λ_i → λ_i + k if and only
/// if Σ μ_i = 1; the measured gap |V_shift − V − k| equals |k|·|Σμ − 1|.
pub fn shift_invariance_check(
    a: &Assignment,
    state: Option<&State>,
    tags: Option<&[ProbabilityTag]>,
    basis: &Context,
    eigenvalues: &[f64],
    k: f64,
) -> Result<ShiftInvariance> {
    if eigenvalues.len() != basis.len() {
        return Err(Error::InvalidDims("one eigenvalue per basis member".into()));
    }
    let weights = per_outcome_weights(a, state, tags, basis)?;
    let mu_sum: f64 = weights.iter().sum();
    let v: f64 = weights.iter().zip(eigenvalues).map(|(w, x)| w * x).sum();
    let v_shift: f64 = weights.iter().zip(eigenvalues).map(|(w, x)| w * (x + k)).sum();
    Ok(ShiftInvariance { mu_sum, gap: (v_shift - v - k).abs() })
}

/// Per-outcome weights of an assignment over a rank-one projective basis.
pub fn per_outcome_weights(
    a: &Assignment,
    state: Option<&State>,
    tags: Option<&[ProbabilityTag]>,
    basis: &Context,
) -> Result<Vec<f64>> {
    match a {
        Assignment::DeutschQuartic => {
            let state = state.ok_or_else(|| Error::InvalidState("missing state".into()))?;
            quartic_weights(state, basis)
        }
        Assignment::ZurekPatch => {
            let tags = tags.ok_or(Error::MissingTags)?;
            if tags.len() != basis.len() {
                return Err(Error::InvalidTags("one tag per basis member".into()));
            }
            Ok(tags.iter().map(patch_value).collect())
        }
        Assignment::TwoSlope { .. } => Err(Error::NotApplicable(
            "two-slope assigns no per-outcome weights over an operator basis".into(),
        )),
        _ => (0..basis.len())
            .map(|i| {
                let op = basis.members()[i].clone();
                Ok(a.evaluate(&EvalInput { op: &op, ctx: basis, state, tags })?.as_f64())
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityProbe {
    /// max_q |μ(qA) − q·μ(A)| over the rational grid.
    pub max_rational_dev: f64,
    /// For each real target r: (r, |μ(q_K A) − μ(rA)| with q_K → r).
    pub limit_gaps: Vec<(f64, f64)>,
    /// The homogeneity series (q, μ(qA)).
    pub series: Vec<(f64, f64)>,
}

/// Homogeneity of μ under scaling of one effect, and the rational→real limit
/// gap estimated by dyadic approximants.
pub fn busch_homogeneity_probe(
    a: &Assignment,
    state: Option<&State>,
    effect: &HermitianOperator,
    rationals: &[Rational],
    reals: &[f64],
) -> Result<HomogeneityProbe> {
    if !effect.is_effect() {
        return Err(Error::InvalidOperator("scaling probe needs an effect".into()));
    }
    let eval = |c: f64| -> Result<f64> {
        if !(0.0..=1.0 + 1e-12).contains(&c) {
            return Err(Error::InvalidScaling(format!("coefficient {c} pushes the operator outside the effect cone")));
        }
        let scaled = effect.scale(c);
        match a {
            Assignment::Born => {
                let state = state.ok_or_else(|| Error::InvalidState("missing state".into()))?;
                crate::assignments::born_eval(state, &scaled)
            }
            Assignment::TraceSquared => crate::assignments::trace_squared_eval(&scaled),
            _ => Err(Error::NotApplicable(format!("{} does not admit effect scaling", a.name()))),
        }
    };
    let base = eval(1.0)?;
    let mut series = Vec::with_capacity(rationals.len());
    let mut max_dev = 0.0f64;
    for q in rationals {
        let qf = q.to_f64().ok_or_else(|| Error::InvalidScaling("rational out of range".into()))?;
        let v = eval(qf)?;
        max_dev = max_dev.max((v - qf * base).abs());
        series.push((qf, v));
    }
    let mut limit_gaps = Vec::with_capacity(reals.len());
    for &r in reals {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidScaling(format!("real target {r} outside [0,1]")));
        }
        // dyadic approximants q_i = round(r·2^i)/2^i from below of the target
        let mut approx = 0.0;
        for i in 1..=48 {
            let scale = (1u64 << i.min(52)) as f64;
            let q = (r * scale).floor() / scale;
            approx = eval(q.clamp(0.0, 1.0))?;
        }
        let direct = eval(r)?;
        limit_gaps.push((r, (approx - direct).abs()));
    }
    Ok(HomogeneityProbe { max_rational_dev: max_dev, limit_gaps, series })
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchScalingProbe {
    /// (q, value) over the rational grid (the patch follows the tag).
    pub series: Vec<(f64, f64)>,
    /// |√2 − limit of the rational series| at the irrational target.
    pub limit_gap: f64,
}

/// Tag-driven analog of the scaling probe for the patch rule: along a
/// rational grid the value is the tag itself; at an irrational target the
/// value snaps to √2.
pub fn patch_scaling_probe(rational_grid: &[Rational], irrational: &QuadRational) -> Result<PatchScalingProbe> {
    if irrational.is_rational() {
        return Err(Error::InvalidTags("target must be irrational".into()));
    }
    let series: Vec<(f64, f64)> = rational_grid
        .iter()
        .map(|q| {
            let x = q.to_f64().unwrap_or(f64::NAN);
            (x, patch_value(&ProbabilityTag::rational(q.clone())))
        })
        .collect();
    let limit = series.last().map(|(_, v)| *v).unwrap_or(0.0);
    let at_target = patch_value(&ProbabilityTag::Irrational(irrational.clone()));
    Ok(PatchScalingProbe { series, limit_gap: (at_target - limit).abs() })
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicTail {
    /// |μ(A) − Σ_{i=1}^{M} μ(A/2^i) − μ(A)/2^M|.
    pub error: f64,
    /// Partial sums Σ_{i=1}^{m} μ(A/2^i) for m = 1..=M.
    pub partial_sums: Vec<f64>,
}

/// Geometric decomposition check: an additive μ satisfies
/// μ(A) = Σ_{i=1}^{M} μ(A/2^i) + μ(A)/2^M for every M.
pub fn dyadic_tail_check(
    a: &Assignment,
    state: Option<&State>,
    effect: &HermitianOperator,
    m: usize,
) -> Result<DyadicTail> {
    if m == 0 {
        return Err(Error::InvalidGrid("need at least one dyadic level".into()));
    }
    if !effect.is_effect() {
        return Err(Error::InvalidOperator("dyadic probe needs an effect".into()));
    }
    let eval = |op: &HermitianOperator| -> Result<f64> {
        match a {
            Assignment::Born => {
                let state = state.ok_or_else(|| Error::InvalidState("missing state".into()))?;
                crate::assignments::born_eval(state, op)
            }
            Assignment::TraceSquared => crate::assignments::trace_squared_eval(op),
            _ => Err(Error::NotApplicable(format!("{} does not admit effect scaling", a.name()))),
        }
    };
    let total = eval(effect)?;
    let mut partial_sums = Vec::with_capacity(m);
    let mut acc = 0.0;
    for i in 1..=m {
        let piece = effect.scale(0.5f64.powi(i as i32));
        acc += eval(&piece)?;
        partial_sums.push(acc);
    }
    let tail = total * 0.5f64.powi(m as i32);
    Ok(DyadicTail { error: (total - acc - tail).abs(), partial_sums })
}
