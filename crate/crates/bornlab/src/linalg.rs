//! Dense complex linear algebra: state vectors, Hermitian operators,
//! measurement contexts, spectral decomposition, and seeded Haar sampling.
//!
//! Everything in this module is a pure function of its inputs. All sampling
//! takes an explicit 64-bit seed and is reproducible across runs and thread
//! schedules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const EFFECT_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-12;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const UNIT_NORM_TOL: f64 = 1e-12;
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Complex column vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec {
    data: DVector<C64>,
}

impl CVec {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension("vector dimension must be positive".into()));
        }
        Ok(Self { data: DVector::from_vec(entries) })
    }

    /// Unit-norm constructor; rejects vectors whose Euclidean norm differs
    /// from 1 by more than 1e-12.
    pub fn unit(entries: Vec<C64>) -> Result<Self> {
        let v = Self::new(entries)?;
        if !v.is_unit() {
            return Err(Error::InvalidState(format!("norm {} is not within 1e-12 of 1", v.norm())));
        }
        Ok(v)
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis_vector(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dimension 0".into()));
        }
        if index >= dim {
            return Err(Error::InvalidDimension(format!("index {index} out of range for dim {dim}")));
        }
        let mut entries = vec![C64::new(0.0, 0.0); dim];
        entries[index] = C64::new(1.0, 0.0);
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn entry(&self, i: usize) -> C64 {
        self.data[i]
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= 1e-300 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self { data: self.data.clone() / C64::new(n, 0.0) })
    }

    /// Inner product ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVec) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(self.data.dotc(&other.data))
    }

    /// Rank-one projector |self⟩⟨self| (self must be unit).
    pub fn projector(&self) -> Result<HermitianOperator> {
        if !self.is_unit() {
            return Err(Error::InvalidState("projector requires a unit vector".into()));
        }
        let m = &self.data * self.data.adjoint();
        HermitianOperator::new(m)
    }

    pub fn tensor(&self, other: &CVec) -> CVec {
        CVec { data: self.data.kronecker(&other.data) }
    }

    pub fn scale(&self, c: C64) -> CVec {
        CVec { data: &self.data * c }
    }

    pub fn add(&self, other: &CVec) -> Result<CVec> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(CVec { data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &CVec) -> Result<CVec> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(CVec { data: &self.data - &other.data })
    }

    pub fn from_column(m: &CMat, col: usize) -> Self {
        CVec { data: DVector::from_iterator(m.nrows(), m.column(col).iter().copied()) }
    }
}

/// A d×d complex Hermitian matrix. Hermiticity (max entrywise deviation from
/// the adjoint at most 1e-12) is checked at construction; the predicate
/// refinements (projector, effect, density matrix) are queried on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMat,
}

impl HermitianOperator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidDimension(format!("{}x{} is not a positive square shape", m.nrows(), m.ncols())));
        }
        let adj = m.adjoint();
        let dev = (&m - &adj).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidOperator(format!("not Hermitian: max |M - M†| = {dev:.3e}")));
        }
        // Symmetrize so downstream arithmetic sees an exactly Hermitian matrix.
        let sym = (&m + &adj).map(|z| z * C64::new(0.5, 0.0));
        Ok(Self { m: sym })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dimension 0".into()));
        }
        Ok(Self { m: CMat::identity(dim, dim) })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dimension 0".into()));
        }
        Ok(Self { m: CMat::zeros(dim, dim) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut m = CMat::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn distance(&self, other: &HermitianOperator) -> f64 {
        (&self.m - &other.m).norm()
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(HermitianOperator { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDims(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(HermitianOperator { m: &self.m - &other.m })
    }

    /// Scaling by a real coefficient (preserves Hermiticity).
    pub fn scale(&self, c: f64) -> HermitianOperator {
        HermitianOperator { m: &self.m * C64::new(c, 0.0) }
    }

    pub fn real_eigenvalues(&self) -> Vec<f64> {
        let eig = self.m.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    /// ‖M² − M‖_F ≤ 1e-10.
    pub fn is_projector(&self) -> bool {
        let sq = &self.m * &self.m;
        (sq - &self.m).norm() <= PROJECTOR_TOL
    }

    /// All eigenvalues within [−1e-10, 1 + 1e-10].
    pub fn is_effect(&self) -> bool {
        self.real_eigenvalues()
            .iter()
            .all(|&l| l >= -EFFECT_TOL && l <= 1.0 + EFFECT_TOL)
    }

    /// Positive semidefinite with unit trace within 1e-12.
    pub fn is_density(&self) -> bool {
        (self.trace() - 1.0).abs() <= DENSITY_TRACE_TOL
            && self.real_eigenvalues().iter().all(|&l| l >= -DENSITY_TRACE_TOL * 10.0)
    }

    /// Numerical rank of a projector, i.e. its trace rounded to the nearest
    /// integer.
    pub fn projector_rank(&self) -> usize {
        self.trace().round().max(0.0) as usize
    }

    pub fn conjugate_by(&self, u: &CMat) -> Result<HermitianOperator> {
        if u.nrows() != self.dim() {
            return Err(Error::InvalidDims("unitary/operator shape mismatch".into()));
        }
        HermitianOperator::new(u * &self.m * u.adjoint())
    }
}

/// An ordered list of effects forming the context of a measurement. The
/// `complete` flag records whether the members sum to the identity, and
/// `projective` whether all members are mutually orthogonal projectors; both
/// are detected at construction against the stated tolerances.
#[derive(Debug, Clone)]
pub struct Context {
    members: Vec<HermitianOperator>,
    complete: bool,
    projective: bool,
}

impl Context {
    pub fn new(members: Vec<HermitianOperator>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidPartition("a context needs at least one member".into()));
        }
        let dim = members[0].dim();
        for m in &members {
            if m.dim() != dim {
                return Err(Error::InvalidDims("context members must share a dimension".into()));
            }
            if !m.is_effect() {
                return Err(Error::InvalidOperator("context member is not an effect".into()));
            }
        }
        let mut sum = CMat::zeros(dim, dim);
        for m in &members {
            sum += m.matrix();
        }
        let complete = (&sum - CMat::identity(dim, dim)).norm() <= COMPLETENESS_TOL;
        let mut projective = members.iter().all(|m| m.is_projector());
        if projective {
            'outer: for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    let prod = members[i].matrix() * members[j].matrix();
                    if prod.norm() > ORTHOGONALITY_TOL {
                        projective = false;
                        break 'outer;
                    }
                }
            }
        }
        Ok(Self { members, complete, projective })
    }

    pub fn members(&self) -> &[HermitianOperator] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    /// Index of the member matching `op` within Frobenius distance `tol`.
    pub fn member_index(&self, op: &HermitianOperator, tol: f64) -> Option<usize> {
        self.members.iter().position(|m| m.distance(op) <= tol)
    }

    /// For rank-one projective contexts: unit vectors spanning each member.
    pub fn rank1_vectors(&self) -> Result<Vec<CVec>> {
        self.members
            .iter()
            .map(|m| {
                if !m.is_projector() || m.projector_rank() != 1 {
                    return Err(Error::InvalidOperator("member is not a rank-one projector".into()));
                }
                dominant_vector(m)
            })
            .collect()
    }
}

/// The rank-one projective context built from the computational basis.
pub fn computational_context(dim: usize) -> Result<Context> {
    let members = (0..dim)
        .map(|i| CVec::basis_vector(dim, i)?.projector())
        .collect::<Result<Vec<_>>>()?;
    Context::new(members)
}

/// Unit vector spanning the range of a rank-one projector.
pub fn dominant_vector(p: &HermitianOperator) -> Result<CVec> {
    let m = p.matrix();
    let (mut best, mut best_norm) = (0usize, 0.0f64);
    for j in 0..m.ncols() {
        let n = m.column(j).norm();
        if n > best_norm {
            best_norm = n;
            best = j;
        }
    }
    if best_norm <= 1e-12 {
        return Err(Error::InvalidOperator("zero projector has no range vector".into()));
    }
    CVec::from_column(m, best).normalized()
}

/// Extended real line value with saturating arithmetic; ∞ − ∞ is an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl XReal {
    pub fn finite(x: f64) -> Self {
        if x.is_infinite() {
            if x > 0.0 {
                XReal::PosInf
            } else {
                XReal::NegInf
            }
        } else {
            XReal::Finite(x)
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            XReal::Finite(x) => *x,
            XReal::PosInf => f64::INFINITY,
            XReal::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, XReal::Finite(_))
    }

    pub fn checked_add(self, other: XReal) -> Result<XReal> {
        use XReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(XReal::finite(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => {
                Err(Error::Indeterminate("(+inf) + (-inf)".into()))
            }
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn checked_sub(self, other: XReal) -> Result<XReal> {
        use XReal::*;
        let negated = match other {
            Finite(x) => Finite(-x),
            PosInf => NegInf,
            NegInf => PosInf,
        };
        match (self, negated) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::Indeterminate("inf - inf".into())),
            (a, b) => a.checked_add(b),
        }
    }
}

/// Haar-distributed random unitary, sampled by QR of a complex Gaussian
/// matrix with the phases of the R diagonal absorbed into Q. Deterministic
/// for fixed (dim, seed).
pub fn haar_random_unitary(dim: usize, seed: u64) -> Result<CMat> {
    if dim == 0 {
        return Err(Error::InvalidDimension("cannot sample a 0-dimensional unitary".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_unitary_with(dim, &mut rng))
}

pub(crate) fn haar_unitary_with(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut phases = CMat::zeros(dim, dim);
    for i in 0..dim {
        let rii = r[(i, i)];
        phases[(i, i)] = if rii.norm() > 0.0 { rii / rii.norm() } else { C64::new(1.0, 0.0) };
    }
    q * phases
}

/// Random unit vector under the Haar-invariant measure.
pub fn random_pure_state(dim: usize, seed: u64) -> Result<CVec> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_pure_state_with(dim, &mut rng))
}

pub(crate) fn random_pure_state_with(dim: usize, rng: &mut ChaCha8Rng) -> CVec {
    let v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    CVec { data: v }.normalized().expect("gaussian vector is nonzero")
}

/// Random density matrix from a normalized complex Wishart draw.
pub fn random_density_matrix(dim: usize, seed: u64) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_density_matrix_with(dim, &mut rng))
}

pub(crate) fn random_density_matrix_with(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let g = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    HermitianOperator::new(w / C64::new(tr, 0.0)).expect("wishart draw is Hermitian")
}

/// Complete projective context from the eigendirections of a Haar-random
/// unitary, partitioned into `n_blocks` groups. A rank-one context results
/// when `n_blocks == dim`.
pub fn random_projective_context(dim: usize, n_blocks: usize, seed: u64) -> Result<Context> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dimension 0".into()));
    }
    if n_blocks == 0 || n_blocks > dim {
        return Err(Error::InvalidPartition(format!("n_blocks {n_blocks} outside 1..={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_projective_context_with(dim, n_blocks, &mut rng)
}

pub(crate) fn random_projective_context_with(
    dim: usize,
    n_blocks: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Context> {
    if n_blocks == 0 || n_blocks > dim {
        return Err(Error::InvalidPartition(format!("n_blocks {n_blocks} outside 1..={dim}")));
    }
    let u = haar_unitary_with(dim, rng);
    // Fisher-Yates shuffle of the eigendirection indices.
    let mut order: Vec<usize> = (0..dim).collect();
    for i in (1..dim).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    // n_blocks - 1 distinct interior cut points keep every block nonempty.
    let mut cuts: Vec<usize> = Vec::new();
    let mut available: Vec<usize> = (1..dim).collect();
    for _ in 0..(n_blocks - 1) {
        let k = rng.gen_range(0..available.len());
        cuts.push(available.remove(k));
    }
    cuts.sort_unstable();
    cuts.push(dim);
    let mut members = Vec::with_capacity(n_blocks);
    let mut start = 0usize;
    for &end in &cuts {
        let mut p = CMat::zeros(dim, dim);
        for &idx in &order[start..end] {
            let col = u.column(idx);
            p += col * col.adjoint();
        }
        members.push(HermitianOperator::new(p)?);
        start = end;
    }
    Context::new(members)
}

/// Either side of a tensor product.
#[derive(Debug, Clone)]
pub enum TensorOperand {
    Vector(CVec),
    Operator(HermitianOperator),
}

/// Tensor product of two vectors or two operators; mixed kinds are rejected.
pub fn tensor_product(a: &TensorOperand, b: &TensorOperand) -> Result<TensorOperand> {
    match (a, b) {
        (TensorOperand::Vector(x), TensorOperand::Vector(y)) => {
            Ok(TensorOperand::Vector(x.tensor(y)))
        }
        (TensorOperand::Operator(x), TensorOperand::Operator(y)) => {
            let m = x.matrix().kronecker(y.matrix());
            Ok(TensorOperand::Operator(HermitianOperator::new(m)?))
        }
        _ => Err(Error::TypeMismatch("cannot tensor a vector with an operator".into())),
    }
}

/// Kronecker product of raw matrices (not restricted to Hermitian inputs).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Groups the members of a context by a disjoint covering partition of their
/// indices, summing each group. Completeness is preserved.
pub fn coarse_grain(ctx: &Context, partition: &[Vec<usize>]) -> Result<Context> {
    let n = ctx.len();
    let mut seen = vec![false; n];
    for block in partition {
        if block.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        for &i in block {
            if i >= n {
                return Err(Error::InvalidPartition(format!("index {i} out of range for {n} members")));
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::InvalidPartition("partition does not cover all member indices".into()));
    }
    let members = partition
        .iter()
        .map(|block| {
            let mut sum = CMat::zeros(ctx.dim(), ctx.dim());
            for &i in block {
                sum += ctx.members()[i].matrix();
            }
            HermitianOperator::new(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    Context::new(members)
}

/// Spectral decomposition into (eigenvalue, eigenprojector) pairs, with
/// eigenvalues within 1e-9 of each other merged into a single projector.
/// Pairs are returned in descending eigenvalue order.
pub fn spectral_decompose(op: &HermitianOperator) -> Result<Vec<(f64, HermitianOperator)>> {
    let eig = op.matrix().clone().symmetric_eigen();
    let dim = op.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut out: Vec<(f64, HermitianOperator)> = Vec::new();
    let mut cluster: Vec<usize> = Vec::new();
    let flush = |cluster: &mut Vec<usize>, out: &mut Vec<(f64, HermitianOperator)>| -> Result<()> {
        if cluster.is_empty() {
            return Ok(());
        }
        let mean: f64 = cluster.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / cluster.len() as f64;
        let mut p = CMat::zeros(dim, dim);
        for &i in cluster.iter() {
            let col = eig.eigenvectors.column(i);
            p += col * col.adjoint();
        }
        out.push((mean, HermitianOperator::new(p)?));
        cluster.clear();
        Ok(())
    };
    let mut prev: Option<f64> = None;
    for &i in &order {
        let l = eig.eigenvalues[i];
        if let Some(p) = prev {
            if (p - l).abs() > DEGENERACY_TOL {
                flush(&mut cluster, &mut out)?;
            }
        }
        cluster.push(i);
        prev = Some(l);
    }
    flush(&mut cluster, &mut out)?;
    Ok(out)
}

/// Rebuilds Σ λ_i P_i from a spectral decomposition.
pub fn spectral_reconstruct(parts: &[(f64, HermitianOperator)]) -> Result<HermitianOperator> {
    let dim = parts
        .first()
        .map(|(_, p)| p.dim())
        .ok_or_else(|| Error::InvalidOperator("empty decomposition".into()))?;
    let mut m = CMat::zeros(dim, dim);
    for (l, p) in parts {
        m += p.matrix() * C64::new(*l, 0.0);
    }
    HermitianOperator::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for d in [1usize, 2, 3, 5, 8] {
            let u = haar_random_unitary(d, 17).unwrap();
            let gram = u.adjoint() * &u;
            assert!((gram - CMat::identity(d, d)).norm() <= 1e-12, "d={d}");
        }
        let a = haar_random_unitary(4, 99).unwrap();
        let b = haar_random_unitary(4, 99).unwrap();
        assert_eq!(a, b);
        let c = haar_random_unitary(4, 100).unwrap();
        assert!((a - c).norm() > 1e-6);
        assert!(haar_random_unitary(0, 1).is_err());

        // dimension-1 unitary is a phase
        let u1 = haar_random_unitary(1, 5).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn projective_context_construction() {
        let ctx = random_projective_context(3, 3, 7).unwrap();
        assert!(ctx.is_complete() && ctx.is_projective());
        assert_eq!(ctx.len(), 3);
        for m in ctx.members() {
            assert_eq!(m.projector_rank(), 1);
        }

        let ctx = random_projective_context(4, 2, 11).unwrap();
        assert_eq!(ctx.len(), 2);
        let ranks: usize = ctx.members().iter().map(|m| m.projector_rank()).sum();
        assert_eq!(ranks, 4);

        let ctx = random_projective_context(2, 2, 13).unwrap();
        let prod = ctx.members()[0].matrix() * ctx.members()[1].matrix();
        assert!(prod.norm() <= 1e-10);

        assert!(random_projective_context(3, 4, 1).is_err());
        assert!(random_projective_context(3, 0, 1).is_err());
    }

    #[test]
    fn sampled_contexts_satisfy_invariants_in_dims_2_to_8() {
        for d in 2..=8usize {
            for seed in 0..10u64 {
                let nb = 1 + (seed as usize % d);
                let ctx = random_projective_context(d, nb, 1000 + seed).unwrap();
                assert!(ctx.is_complete());
                assert!(ctx.is_projective());
                for m in ctx.members() {
                    assert!(m.is_projector());
                }
            }
        }
    }

    #[test]
    fn tensor_product_examples() {
        let i2 = HermitianOperator::identity(2).unwrap();
        let i3 = HermitianOperator::identity(3).unwrap();
        let prod = tensor_product(
            &TensorOperand::Operator(i2.clone()),
            &TensorOperand::Operator(i3.clone()),
        )
        .unwrap();
        match prod {
            TensorOperand::Operator(op) => {
                assert_eq!(op.dim(), 6);
                assert!(op.distance(&HermitianOperator::identity(6).unwrap()) <= 1e-12);
            }
            _ => panic!("expected operator"),
        }

        let zero = CVec::basis_vector(2, 0).unwrap();
        let one = CVec::basis_vector(2, 1).unwrap();
        let t = zero.tensor(&one);
        assert_eq!(t.dim(), 4);
        assert!((t.entry(1) - C64::new(1.0, 0.0)).norm() <= 1e-15);

        assert!(tensor_product(&TensorOperand::Vector(zero), &TensorOperand::Operator(i2)).is_err());
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        // direct trace computation oracle
        for seed in 0..20u64 {
            let a = random_density_matrix(3, seed).unwrap().scale(1.7);
            let b = random_density_matrix(2, seed + 50).unwrap().scale(0.3);
            let t = kron(a.matrix(), b.matrix()).trace().re;
            assert!((t - a.trace() * b.trace()).abs() <= 1e-12);
        }
    }

    #[test]
    fn tensor_is_associative_on_random_triples() {
        for seed in 0..10u64 {
            let a = random_density_matrix(2, seed).unwrap();
            let b = random_density_matrix(2, seed + 100).unwrap();
            let c = random_density_matrix(3, seed + 200).unwrap();
            let left = kron(&kron(a.matrix(), b.matrix()), c.matrix());
            let right = kron(a.matrix(), &kron(b.matrix(), c.matrix()));
            assert!((left - right).norm() <= 1e-12);
        }
    }

    #[test]
    fn tensor_respects_application() {
        // ‖(A⊗B)(x⊗y) − (Ax)⊗(By)‖ small on samples
        for seed in 0..10u64 {
            let a = random_density_matrix(3, seed).unwrap();
            let b = random_density_matrix(2, seed + 31).unwrap();
            let x = random_pure_state(3, seed + 62).unwrap();
            let y = random_pure_state(2, seed + 93).unwrap();
            let lhs = kron(a.matrix(), b.matrix()) * x.tensor(&y).entries();
            let ax = CVec { data: a.matrix() * x.entries() };
            let by = CVec { data: b.matrix() * y.entries() };
            let rhs = ax.tensor(&by);
            assert!((lhs - rhs.entries()).norm() <= 1e-12);
        }
    }

    #[test]
    fn coarse_grain_examples() {
        let ctx = random_projective_context(3, 3, 21).unwrap();
        let grouped = coarse_grain(&ctx, &[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(grouped.len(), 2);
        let expected = ctx.members()[0].add(&ctx.members()[1]).unwrap();
        assert!(grouped.members()[0].distance(&expected) <= 1e-12);
        assert!(grouped.is_complete());

        let same = coarse_grain(&ctx, &[vec![0], vec![1], vec![2]]).unwrap();
        for (a, b) in same.members().iter().zip(ctx.members()) {
            assert!(a.distance(b) <= 1e-12);
        }

        // idempotence of the grouped sums for a projective context
        let ctx4 = random_projective_context(4, 4, 22).unwrap();
        let merged = coarse_grain(&ctx4, &[vec![0, 1], vec![2, 3]]).unwrap();
        for m in merged.members() {
            assert!(m.is_projector());
        }

        assert!(coarse_grain(&ctx, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(coarse_grain(&ctx, &[vec![0]]).is_err());
    }

    #[test]
    fn spectral_decomposition_examples() {
        let op = HermitianOperator::from_real_diag(&[1.0, 1.0, 0.0]).unwrap();
        let parts = spectral_decompose(&op).unwrap();
        assert_eq!(parts.len(), 2);
        assert!((parts[0].0 - 1.0).abs() <= 1e-12);
        assert_eq!(parts[0].1.projector_rank(), 2);
        assert!((parts[1].0).abs() <= 1e-12);
        assert_eq!(parts[1].1.projector_rank(), 1);

        let id = HermitianOperator::identity(4).unwrap();
        let parts = spectral_decompose(&id).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(parts[0].1.distance(&id) <= 1e-10);
    }

    #[test]
    fn spectral_reconstruction_is_identity() {
        for seed in 0..20u64 {
            let d = 2 + (seed as usize % 5);
            let w = random_density_matrix(d, seed).unwrap().scale(3.0);
            let parts = spectral_decompose(&w).unwrap();
            let rebuilt = spectral_reconstruct(&parts).unwrap();
            assert!(rebuilt.distance(&w) <= 1e-10, "seed {seed}");
            // projectors orthogonal and complete
            let mut sum = CMat::zeros(d, d);
            for (_, p) in &parts {
                assert!(p.is_projector());
                sum += p.matrix();
            }
            assert!((sum - CMat::identity(d, d)).norm() <= 1e-9);
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn xreal_arithmetic() {
        let a = XReal::Finite(1.5);
        let b = XReal::Finite(2.0);
        assert_eq!(a.checked_add(b).unwrap(), XReal::Finite(3.5));
        assert_eq!(XReal::PosInf.checked_add(a).unwrap(), XReal::PosInf);
        assert!(XReal::PosInf.checked_add(XReal::NegInf).is_err());
        assert!(XReal::PosInf.checked_sub(XReal::PosInf).is_err());
        assert_eq!(XReal::NegInf.checked_sub(b).unwrap(), XReal::NegInf);
        assert_eq!(XReal::finite(f64::INFINITY), XReal::PosInf);
    }
}
