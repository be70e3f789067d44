//! Finite-copy frequency-operator analysis: the deviation norm of the
//! relative-frequency operator on N identical copies, its brute-force
//! counterpart on the expanded product space, the variance gap between the
//! two readings of a mixed-state ensemble, and the convergence study.
//!
//! The N-copy product space is never materialized for large N: the deviation
//! norm reduces to a binomial sum, which is evaluated directly (with
//! compensated summation) and agrees with the closed form √(p(1−p)/N).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Outcome distribution, target outcome, and copy count.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencySpec {
    pub probs: Vec<f64>,
    pub target: usize,
    pub copies: u64,
}

impl FrequencySpec {
    pub fn new(probs: Vec<f64>, target: usize, copies: u64) -> Result<Self> {
        if probs.is_empty() || target >= probs.len() {
            return Err(Error::InvalidSpec("target outcome out of range".into()));
        }
        if copies == 0 {
            return Err(Error::InvalidSpec("need at least one copy".into()));
        }
        if probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::InvalidSpec("probabilities must lie in [0,1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs, target, copies })
    }

    pub fn target_prob(&self) -> f64 {
        self.probs[self.target]
    }
}

/// ‖(f_N − p)ψ^⊗N‖ computed by the binomial sum
/// Σ_m C(N,m) p^m (1−p)^{N−m} (m/N − p)², square-rooted. The product space
/// is never constructed. Equals √(p(1−p)/N).
pub fn frequency_deviation_norm(spec: &FrequencySpec) -> f64 {
    let p = spec.target_prob();
    let n = spec.copies;
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let nf = n as f64;
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let ln_gamma_n1 = libm::lgamma(nf + 1.0);
    // compensated summation over the full binomial support
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for m in 0..=n {
        let mf = m as f64;
        let ln_pmf = ln_gamma_n1 - libm::lgamma(mf + 1.0) - libm::lgamma(nf - mf + 1.0)
            + mf * ln_p
            + (nf - mf) * ln_q;
        let term = ln_pmf.exp() * (mf / nf - p) * (mf / nf - p);
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum.max(0.0).sqrt()
}

/// Closed form √(p(1−p)/N) for cross-checks at very large N.
pub fn frequency_deviation_closed_form(spec: &FrequencySpec) -> f64 {
    let p = spec.target_prob();
    (p * (1.0 - p) / spec.copies as f64).sqrt()
}

/// Hard ceiling on the expanded product space.
pub const BRUTEFORCE_LIMIT: usize = 2_000_000;

/// Expands ψ^⊗N over all d^N outcome strings, applies the diagonal
/// frequency weights, and returns ‖(f_N − p_k)ψ^⊗N‖ directly.
pub fn frequency_apply_bruteforce(psi: &CVec, target: usize, copies: u32) -> Result<f64> {
    let d = psi.dim();
    if target >= d {
        return Err(Error::InvalidSpec("target outcome out of range".into()));
    }
    if copies == 0 {
        return Err(Error::InvalidSpec("need at least one copy".into()));
    }
    if !psi.is_unit() {
        return Err(Error::InvalidState("need a unit state".into()));
    }
    let total = (d as f64).powi(copies as i32);
    if total > BRUTEFORCE_LIMIT as f64 {
        return Err(Error::SizeLimit(format!(
            "{d}^{copies} outcome strings exceed the ceiling {BRUTEFORCE_LIMIT}"
        )));
    }
    let weights: Vec<f64> = (0..d).map(|i| psi.entry(i).norm_sqr()).collect();
    let p_target = weights[target];
    let n = copies as usize;
    // odometer over outcome strings with an incremental probability stack
    let mut digits = vec![0usize; n];
    let mut prob_stack = vec![1.0f64; n + 1];
    let mut count_stack = vec![0usize; n + 1];
    for level in 0..n {
        prob_stack[level + 1] = prob_stack[level] * weights[0];
        count_stack[level + 1] = count_stack[level] + usize::from(0 == target);
    }
    let mut acc = 0.0f64;
    loop {
        let prob = prob_stack[n];
        let freq = count_stack[n] as f64 / n as f64;
        acc += prob * (freq - p_target) * (freq - p_target);
        // advance the odometer
        let mut level = n;
        loop {
            if level == 0 {
                return Ok(acc.max(0.0).sqrt());
            }
            level -= 1;
            if digits[level] + 1 < d {
                digits[level] += 1;
                break;
            }
            digits[level] = 0;
        }
        for l in level..n {
            prob_stack[l + 1] = prob_stack[l] * weights[digits[l]];
            count_stack[l + 1] = count_stack[l] + usize::from(digits[l] == target);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSeries {
    /// (N, value) with N strictly increasing.
    pub points: Vec<(u64, f64)>,
    /// Fitted log-log slope; absent when every value vanishes.
    pub slope: Option<f64>,
    pub exact_convergence: bool,
}

fn fit_loglog_slope(points: &[(u64, f64)]) -> Option<f64> {
    let filtered: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.ln()))
        .collect();
    if filtered.len() < 2 {
        return None;
    }
    let n = filtered.len() as f64;
    let sx: f64 = filtered.iter().map(|(x, _)| x).sum();
    let sy: f64 = filtered.iter().map(|(_, y)| y).sum();
    let sxx: f64 = filtered.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = filtered.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Deviation norms across a grid of copy counts plus the fitted log-log
/// slope (−1/2 for any nondegenerate distribution).
pub fn hartle_convergence_study(probs: &[f64], target: usize, n_grid: &[u64]) -> Result<ConvergenceSeries> {
    if n_grid.len() < 4 {
        return Err(Error::InvalidGrid("need at least four grid points".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("copy counts must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let spec = FrequencySpec::new(probs.to_vec(), target, n)?;
        points.push((n, frequency_deviation_norm(&spec)));
    }
    let slope = fit_loglog_slope(&points);
    let exact = points.iter().all(|(_, v)| *v == 0.0);
    Ok(ConvergenceSeries { points, slope, exact_convergence: exact })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixedVarianceGap {
    /// Var(f_N) when the N copies are drawn from the single density matrix:
    /// q(1−q)/N with q = Σ_j p_j q_j. Tends to 0.
    pub iid_series: ConvergenceSeries,
    /// Var(f_N) when an entire run uses one randomly chosen pure component:
    /// Σ_j p_j q_j(1−q_j)/N + Var_j(q_j). Tends to Var_j(q_j) > 0.
    pub mixture_series: ConvergenceSeries,
    /// The N → ∞ limits of the two series.
    pub iid_limit: f64,
    pub mixture_limit: f64,
    /// E[f_N] under both constructions (they agree for every N).
    pub expectation_iid: f64,
    pub expectation_mixture: f64,
}

/// Variance of the frequency under the two readings of an N-copy mixed
/// ensemble. `weights` are the mixture weights p_j and `component_probs`
/// the per-component target probabilities q_j.
pub fn mixed_variance_gap(
    weights: &[f64],
    component_probs: &[f64],
    n_grid: &[u64],
) -> Result<MixedVarianceGap> {
    if weights.is_empty() || weights.len() != component_probs.len() {
        return Err(Error::InvalidSpec("need matching weight/probability lists".into()));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec("mixture weights must sum to 1".into()));
    }
    if component_probs.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(Error::InvalidSpec("component probabilities must lie in [0,1]".into()));
    }
    if n_grid.len() < 4 {
        return Err(Error::InvalidGrid("need at least four grid points".into()));
    }
    let q_bar: f64 = weights.iter().zip(component_probs).map(|(p, q)| p * q).sum();
    let within: f64 = weights.iter().zip(component_probs).map(|(p, q)| p * q * (1.0 - q)).sum();
    let var_between: f64 = weights
        .iter()
        .zip(component_probs)
        .map(|(p, q)| p * (q - q_bar) * (q - q_bar))
        .sum();

    let iid_points: Vec<(u64, f64)> = n_grid.iter().map(|&n| (n, q_bar * (1.0 - q_bar) / n as f64)).collect();
    let mixture_points: Vec<(u64, f64)> = n_grid.iter().map(|&n| (n, within / n as f64 + var_between)).collect();
    let iid_series = ConvergenceSeries {
        slope: fit_loglog_slope(&iid_points),
        exact_convergence: iid_points.iter().all(|(_, v)| *v == 0.0),
        points: iid_points,
    };
    let mixture_series = ConvergenceSeries {
        slope: fit_loglog_slope(&mixture_points),
        exact_convergence: mixture_points.iter().all(|(_, v)| *v == 0.0),
        points: mixture_points,
    };
    Ok(MixedVarianceGap {
        iid_series,
        mixture_series,
        iid_limit: 0.0,
        mixture_limit: var_between,
        expectation_iid: q_bar,
        expectation_mixture: q_bar,
    })
}
