//! Numeric checks of the quantitative claims behind the solver.
//!
//! - [`check_divergence_lemma`]: the `(exp(4η ln(2/δ)/σ), δ)` closeness of two
//!   truncated Laplacians whose parameters differ as in neighbouring runs.
//! - [`measure_regret`]: the no-regret inequality of the price sequence.
//! - [`measure_feasibility`] and [`measure_rounds`]: overflow of `x̄` and the
//!   per-type round counts.
//! - [`noise_statistics`]: Monte Carlo moments and KS distance of a noise law.
//! - [`check_privacy`]: per-round regime conditions and the composed budget.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log, sqrt};
use rand::Rng as _;

use crate::instance::PackingInstance;
use crate::noise::{NoiseDistribution, TruncatedLaplace};
use crate::solver::{PrivacyParams, RoundRecord, SolveResult};

/// Frozen constants for the `O(·)` bounds, calibrated once on a fixed seed set
/// and asserted thereafter.
pub mod thresholds {
    /// `OPT − ALG ≤ C_GAP · α n`
    pub const C_GAP: f64 = 1.5;
    /// `s ≤ C_FEAS · α b`
    pub const C_FEAS: f64 = 1.0;
    /// Regret `≤ D_KL(p‖p¹) + C_REG · α n η_sum`
    pub const C_REG: f64 = 1.0;
    /// Composed budget `≤ C_PRIV · ε² / ln(2/δ)`
    pub const C_PRIV: f64 = crate::solver::DEFAULT_PRIVACY_CONSTANT;
    /// Largest tolerated fraction of runs exceeding a high-probability bound.
    pub const MAX_VIOLATION_RATE: f64 = 0.05;
    /// Grid tolerance on top of `δ` in the divergence check.
    pub const DIVERGENCE_TOL: f64 = 1e-4;
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("comparator has {found} coordinates, expected {expected}")]
    ComparatorLength { expected: usize, found: usize },
    #[error("comparator l1 norm {norm} differs from p_max = {p_max}")]
    ComparatorNorm { norm: f64, p_max: f64 },
}

// ---------------------------------------------------------------------------
// Divergence lemma
// ---------------------------------------------------------------------------

/// A pair of noise laws and the lemma's auxiliary parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivergenceParams {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub alpha: f64,
    pub delta: f64,
}

/// Which hypothesis of the lemma a parameter tuple breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Hypothesis {
    #[error("means must lie in [-alpha, alpha]")]
    MeanRange,
    #[error("scales must lie in (0, alpha]")]
    ScaleRange,
    #[error("eta must lie in (0, alpha] and delta in (0, 1)")]
    ParameterRange,
    #[error("|1/sigma1^2 - 1/sigma2^2| exceeds eta / (alpha sigma^2)")]
    ScaleGap,
    #[error("|mu1 - mu2| exceeds eta")]
    MeanGap,
    #[error("delta exceeds eta ln(2/delta) / sigma")]
    DeltaBound,
}

impl DivergenceParams {
    /// `max(σ₁, σ₂)`
    pub fn sigma(&self) -> f64 {
        f64::max(self.sigma1, self.sigma2)
    }

    /// `4 η ln(2/δ) / σ`
    pub fn log_factor(&self) -> f64 {
        4.0 * self.eta * log(2.0 / self.delta) / self.sigma()
    }

    pub fn check_hypotheses(&self) -> Result<(), Hypothesis> {
        let a = self.alpha;
        if !(a > 0.0 && a < 1.0 && self.eta > 0.0 && self.eta <= a && self.delta > 0.0 && self.delta < 1.0) {
            return Err(Hypothesis::ParameterRange);
        }
        if fabs(self.mu1) > a || fabs(self.mu2) > a {
            return Err(Hypothesis::MeanRange);
        }
        if !(self.sigma1 > 0.0 && self.sigma1 <= a && self.sigma2 > 0.0 && self.sigma2 <= a) {
            return Err(Hypothesis::ScaleRange);
        }
        let s = self.sigma();
        let gap = fabs(1.0 / (self.sigma1 * self.sigma1) - 1.0 / (self.sigma2 * self.sigma2));
        if gap > self.eta / (a * s * s) {
            return Err(Hypothesis::ScaleGap);
        }
        if fabs(self.mu1 - self.mu2) > self.eta {
            return Err(Hypothesis::MeanGap);
        }
        if self.delta > self.eta * log(2.0 / self.delta) / s {
            return Err(Hypothesis::DeltaBound);
        }
        Ok(())
    }
}

/// Worst event found for one parameter tuple.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivergenceReport {
    pub params: DivergenceParams,
    /// Contiguous interval maximizing `Pr₁[S] − e^c Pr₂[S]`.
    pub worst_interval: (f64, f64),
    /// `Pr₁[S*]` for the worst measurable set `S*`.
    pub lhs_prob: f64,
    /// `e^c Pr₂[S*] + δ`
    pub rhs_bound: f64,
    /// `max_S (Pr₁[S] − e^c Pr₂[S])`; the lemma claims this is `≤ δ`.
    pub max_excess: f64,
    pub violated: bool,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DivergenceOutcome {
    Checked(DivergenceReport),
    Skipped {
        params: DivergenceParams,
        reason: Hypothesis,
    },
}

/// Computes `max_S (Pr₁[S] − e^{log_factor} Pr₂[S])` over measurable `S`.
///
/// Both densities are exponential on each piece between the breakpoints
/// (support endpoints and locations), so the weighted difference changes sign
/// at most once per piece. The scan splits the union of supports at the
/// breakpoints and at `grid_points` uniform points, locates each sign change
/// by bisection, and sums exact CDF masses over the cells where the difference
/// is positive. The result is exact up to floating point.
pub fn worst_event(
    first: &TruncatedLaplace,
    second: &TruncatedLaplace,
    log_factor: f64,
    grid_points: usize,
) -> (f64, f64, f64, (f64, f64)) {
    let factor = exp(log_factor.min(700.0));
    let weighted = |x: f64| first.pdf(x) - factor * second.pdf(x);
    let (lo1, hi1) = first.support();
    let (lo2, hi2) = second.support();
    let (lo, hi) = (f64::min(lo1, lo2), f64::max(hi1, hi2));

    let grid_points = grid_points.max(2);
    let mut cuts: Vec<f64> = (0..grid_points)
        .map(|k| lo + (hi - lo) * k as f64 / (grid_points - 1) as f64)
        .chain([lo1, hi1, lo2, hi2, first.mu(), second.mu()])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // (start, end, Pr1 mass, Pr2 mass) per cell of constant sign
    let mut cells: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cuts.len() + 8);
    let mut push = |a: f64, b: f64| {
        let p1 = first.cdf(b) - first.cdf(a);
        let p2 = second.cdf(b) - second.cdf(a);
        cells.push((a, b, p1, p2));
    };
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inset = (b - a) * 1e-9;
        let (ha, hb) = (weighted(a + inset), weighted(b - inset));
        if (ha > 0.0) != (hb > 0.0) && b - a > 4.0 * inset {
            let (mut l, mut r) = (a + inset, b - inset);
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if mid <= l || mid >= r {
                    break;
                }
                if (weighted(mid) > 0.0) == (ha > 0.0) {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            let root = 0.5 * (l + r);
            push(a, root);
            push(root, b);
        } else {
            push(a, b);
        }
    }

    let (mut lhs, mut rhs_mass) = (0.0, 0.0);
    // Kadane over cell excesses for the best single interval
    let (mut best, mut best_span) = (0.0, (lo, lo));
    let (mut run, mut run_start) = (0.0, lo);
    for &(a, b, p1, p2) in &cells {
        let excess = p1 - factor * p2;
        if weighted(0.5 * (a + b)) > 0.0 {
            lhs += p1;
            rhs_mass += p2;
        }
        if run <= 0.0 {
            run = excess;
            run_start = a;
        } else {
            run += excess;
        }
        if run > best {
            best = run;
            best_span = (run_start, b);
        }
    }
    let max_excess = f64::max(lhs - factor * rhs_mass, 0.0);
    (max_excess, lhs, factor * rhs_mass, best_span)
}

/// Evaluates the lemma's conclusion without checking its hypotheses.
pub fn evaluate_divergence(params: &DivergenceParams, grid_points: usize, tolerance: f64) -> DivergenceReport {
    let first = TruncatedLaplace::new(params.mu1, params.sigma1, params.alpha).expect("valid first law");
    let second = TruncatedLaplace::new(params.mu2, params.sigma2, params.alpha).expect("valid second law");
    let (max_excess, lhs_prob, weighted_rhs, worst_interval) =
        worst_event(&first, &second, params.log_factor(), grid_points);
    DivergenceReport {
        params: *params,
        worst_interval,
        lhs_prob,
        rhs_bound: weighted_rhs + params.delta,
        max_excess,
        violated: max_excess > params.delta + tolerance,
        grid_points,
    }
}

/// Checks every tuple; tuples breaking a hypothesis are skipped with the reason.
pub fn check_divergence_lemma(
    points: &[DivergenceParams],
    grid_points: usize,
    tolerance: f64,
) -> Vec<DivergenceOutcome> {
    points
        .iter()
        .map(|p| match p.check_hypotheses() {
            Ok(()) => DivergenceOutcome::Checked(evaluate_divergence(p, grid_points, tolerance)),
            Err(reason) => DivergenceOutcome::Skipped { params: *p, reason },
        })
        .collect()
}

/// `count` random tuples satisfying every hypothesis with `α` drawn from
/// `alphas`, deterministic in `seed`.
///
/// Near the truncation edges the two supports differ by `|μ₁ − μ₂|` and the
/// first law puts mass where the second has none, roughly
/// `η e^{−(1−2α)/σ} / (2σ)`. That term is not covered by the bound; it stays
/// under `10⁻⁴` for `α ≤ 0.1` but reaches `10⁻³` and more around `α = 0.3`.
pub fn valid_divergence_grid(count: usize, seed: u64, alphas: &[f64]) -> Vec<DivergenceParams> {
    assert!(!alphas.is_empty(), "need at least one alpha");
    let mut rng = crate::rng_stream(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let alpha = alphas[rng.gen_range(0..alphas.len())];
        let sigma1 = alpha * rng.gen_range(0.1..=1.0);
        let eta = alpha * exp(rng.gen_range(log(1e-3)..=0.0));
        let mu2 = alpha * rng.gen_range(-1.0..=1.0);
        let mu1 = (mu2 + eta * rng.gen_range(-1.0..=1.0)).clamp(-alpha, alpha);
        // push the scale as far as the scale-gap hypothesis allows
        let inv_sq = 1.0 / (sigma1 * sigma1) + rng.gen_range(-1.0..=1.0) * eta / (alpha * alpha * alpha);
        let sigma2 = if inv_sq > 0.0 {
            (1.0 / sqrt(inv_sq)).min(alpha)
        } else {
            alpha
        };
        let delta = exp(rng.gen_range(log(1e-9)..=log(1e-2)));
        let p = DivergenceParams {
            mu1,
            sigma1,
            mu2,
            sigma2,
            eta,
            alpha,
            delta,
        };
        if p.check_hypotheses().is_ok() {
            out.push(p);
        }
    }
    out
}

/// Negative control: the means are `10η` apart but `η` is reported.
pub fn negative_control(base: &DivergenceParams) -> DivergenceParams {
    DivergenceParams {
        mu1: base.mu2 + 10.0 * base.eta,
        ..*base
    }
}

// ---------------------------------------------------------------------------
// Regret
// ---------------------------------------------------------------------------

/// Generalized KL divergence `Σ_j p_j ln(p_j/q_j) − p_j + q_j`, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&p, &q)| {
            let term = if p > 0.0 { p * log(p / q) } else { 0.0 };
            term - p + q
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Comparator {
    /// All mass on the dummy coordinate: the optimality check.
    Dummy,
    /// All mass on the resource with the largest demand under `x̄`: the
    /// feasibility check.
    MostOverdemanded,
}

impl Comparator {
    pub fn prices(self, instance: &PackingInstance, x_bar: &[f64], p_max: f64) -> Vec<f64> {
        let m = instance.m();
        let mut p = vec![0.0; m + 1];
        let target = match self {
            Comparator::Dummy => m,
            Comparator::MostOverdemanded => {
                let demand = instance.resource_demand(x_bar);
                (0..m).fold(0, |best, j| if demand[j] > demand[best] { j } else { best })
            }
        };
        p[target] = p_max;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegretReport {
    pub comparator_p: Vec<f64>,
    /// `Σ_t η^t (L(x^t, p^t) − L(x^t, p))`
    pub lhs: f64,
    pub kl: f64,
    /// `D_KL(p‖p¹) + C α n η_sum`
    pub bound: f64,
    pub slack: f64,
    pub c: f64,
}

/// Regret of the recorded price sequence against a fixed comparator.
///
/// `L(x, p^t) − L(x, p) = ⟨g(x), p^t − p⟩`, so only the recorded subgradients
/// and prices are needed.
pub fn measure_regret(
    result: &SolveResult,
    n: usize,
    alpha: f64,
    comparator: &[f64],
    c: f64,
) -> Result<RegretReport, AuditError> {
    let initial = result.initial_prices.prices();
    let p_max = result.initial_prices.p_max();
    if comparator.len() != initial.len() {
        return Err(AuditError::ComparatorLength {
            expected: initial.len(),
            found: comparator.len(),
        });
    }
    let norm: f64 = comparator.iter().map(|p| fabs(*p)).sum();
    if fabs(norm - p_max) > 1e-9 * p_max {
        return Err(AuditError::ComparatorNorm { norm, p_max });
    }
    let mut lhs = 0.0;
    let mut current = initial;
    for round in &result.trace {
        let inner: f64 = round
            .subgradient
            .iter()
            .zip(current.iter().zip(comparator))
            .map(|(g, (pt, p))| g * (pt - p))
            .sum();
        lhs += round.eta * inner;
        current = &round.prices_after;
    }
    let kl = kl_divergence(comparator, initial);
    let bound = kl + c * alpha * n as f64 * result.constants.eta_sum;
    Ok(RegretReport {
        comparator_p: comparator.to_vec(),
        lhs,
        kl,
        bound,
        slack: bound - lhs,
        c,
    })
}

// ---------------------------------------------------------------------------
// Feasibility and rounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibilityReport {
    /// `max_j (Σ_i a_ij x̄_i − b)`
    pub overflow_s: f64,
    /// `s / (α b)`
    pub ratio: f64,
    /// Same quantity for the scaled allocation; never positive.
    pub scaled_overflow: f64,
}

pub fn measure_feasibility(result: &SolveResult, instance: &PackingInstance, alpha: f64) -> FeasibilityReport {
    let overflow_s = instance.max_overflow(&result.x_bar);
    FeasibilityReport {
        overflow_s,
        ratio: overflow_s / (alpha * instance.b()),
        scaled_overflow: instance.max_overflow(result.x_feasible.as_slice()),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundReport {
    pub rounds: usize,
    /// `T / (m ln(m+1) / α²)`
    pub normalized: f64,
    /// Index 0: capped steps; index `j`: steps set by resource `j`.
    pub type_counts: Vec<usize>,
    /// Recorded step kinds and sizes agree with the recorded subgradients.
    pub kinds_consistent: bool,
    /// `3 (m+1) ln(m+1) / α² + m + 1`
    pub total_bound: f64,
    /// `3 ln(m+1) / α² + 1`
    pub per_type_bound: f64,
    /// `ln(m+1) / α² + 1`
    pub type0_bound: f64,
    pub within_bounds: bool,
}

/// Classifies rounds by which term set the step size.
pub fn measure_rounds(trace: &[RoundRecord], m: usize, alpha: f64, b: f64) -> RoundReport {
    let mut type_counts = vec![0; m + 1];
    let mut kinds_consistent = true;
    for r in trace {
        if let Some(c) = type_counts.get_mut(r.step_kind) {
            *c += 1;
        } else {
            kinds_consistent = false;
        }
        let real = &r.subgradient[..m.min(r.subgradient.len())];
        let max = real.iter().fold(0.0, |acc, g| f64::max(acc, fabs(*g)));
        let kind = if max <= b {
            0
        } else {
            real.iter().position(|g| fabs(*g) == max).map_or(0, |j| j + 1)
        };
        let eta = alpha / f64::max(b, max);
        if kind != r.step_kind || eta != r.eta {
            kinds_consistent = false;
        }
    }
    let ln_m1 = log((m + 1) as f64);
    let a2 = alpha * alpha;
    let total_bound = 3.0 * (m + 1) as f64 * ln_m1 / a2 + (m + 1) as f64;
    let per_type_bound = 3.0 * ln_m1 / a2 + 1.0;
    let type0_bound = ln_m1 / a2 + 1.0;
    let within_bounds = trace.len() as f64 <= total_bound
        && type_counts[0] as f64 <= type0_bound
        && type_counts[1..].iter().all(|&c| c as f64 <= per_type_bound);
    RoundReport {
        rounds: trace.len(),
        normalized: trace.len() as f64 / (m as f64 * ln_m1 / a2),
        type_counts,
        kinds_consistent,
        total_bound,
        per_type_bound,
        type0_bound,
        within_bounds,
    }
}

// ---------------------------------------------------------------------------
// Privacy regime and budget
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacyReport {
    pub spent: f64,
    pub bound: f64,
    pub budget_ok: bool,
    /// Rounds with some `|μ_j| > α`.
    pub mean_violations: usize,
    /// Rounds with `σ > α`.
    pub scale_violations: usize,
    /// Recorded `ε^t` disagreeing with `4η ln(2/δ)/σ` beyond rounding.
    pub accounting_mismatches: usize,
}

impl PrivacyReport {
    pub fn passed(&self) -> bool {
        self.budget_ok && self.mean_violations == 0 && self.scale_violations == 0 && self.accounting_mismatches == 0
    }
}

/// `price_epsilon` is the share of `ε` that drove the price noise.
pub fn check_privacy(result: &SolveResult, params: &PrivacyParams, price_epsilon: f64, constant: f64) -> PrivacyReport {
    let alpha = params.alpha;
    let spent = crate::solver::privacy_spent(&result.trace, params.delta);
    let bound = constant * price_epsilon * price_epsilon / log(2.0 / params.delta);
    let ln_2_delta = log(2.0 / params.delta);
    let mut report = PrivacyReport {
        spent,
        bound,
        budget_ok: spent <= bound,
        mean_violations: 0,
        scale_violations: 0,
        accounting_mismatches: 0,
    };
    for r in &result.trace {
        if r.mu.iter().any(|mu| fabs(*mu) > alpha * (1.0 + 1e-12)) {
            report.mean_violations += 1;
        }
        if !(r.sigma > 0.0 && r.sigma <= alpha) {
            report.scale_violations += 1;
        }
        let expected = 4.0 * r.eta * ln_2_delta / r.sigma;
        if r.epsilon_t.is_none_or(|e| fabs(e - expected) > 1e-12 * expected) {
            report.accounting_mismatches += 1;
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Noise statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseStats {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub exact_mean: f64,
    pub exact_variance: f64,
    /// `sup_x |F_n(x) − F(x)|`
    pub ks_distance: f64,
}

impl NoiseStats {
    pub fn mean_z(&self) -> f64 {
        (self.mean - self.exact_mean) / self.se_mean
    }

    pub fn variance_z(&self) -> f64 {
        (self.variance - self.exact_variance) / self.se_variance
    }
}

/// Monte Carlo moments of `samples` draws, with standard errors from the
/// sample second and fourth central moments.
pub fn noise_statistics<D: NoiseDistribution>(dist: &D, samples: usize, rng: &mut crate::Rng) -> NoiseStats {
    let mut xs: Vec<f64> = (0..samples).map(|_| dist.sample(rng)).collect();
    let count = samples as f64;
    let mean = xs.iter().sum::<f64>() / count;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d = (x - mean) * (x - mean);
        (m2 + d, m4 + d * d)
    });
    let (m2, m4) = (m2 / count, m4 / count);
    xs.sort_by(f64::total_cmp);
    let ks_distance = xs.iter().enumerate().fold(0.0, |acc, (k, &x)| {
        let f = dist.cdf(x);
        let lo = k as f64 / count;
        let hi = (k + 1) as f64 / count;
        f64::max(acc, f64::max(fabs(f - lo), fabs(hi - f)))
    });
    NoiseStats {
        samples,
        mean,
        variance: m2,
        se_mean: sqrt(m2 / count),
        se_variance: sqrt(f64::max(m4 - m2 * m2, 0.0) / count),
        exact_mean: dist.mean(),
        exact_variance: dist.variance(),
        ks_distance,
    }
}

/// One point of the noise-law check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseCheck {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub stats: NoiseStats,
    /// Sample mean within 4 standard errors of `μ`.
    pub mean_ok: bool,
    /// Exact variance at most `2σ²`.
    pub bound_ok: bool,
    /// Sample variance within 3 standard errors of the exact variance.
    pub variance_ok: bool,
}

impl NoiseCheck {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.bound_ok && self.variance_ok
    }
}

/// `count` triples `(μ, σ, α)` with `α ∈ [0.01, 0.5]`, `|μ| ≤ α`, `0 < σ ≤ α`.
pub fn noise_grid(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = crate::rng_stream(seed, 0);
    (0..count)
        .map(|_| {
            let alpha = rng.gen_range(0.01..=0.5);
            (
                alpha * rng.gen_range(-1.0..=1.0),
                alpha * rng.gen_range(0.01..=1.0),
                alpha,
            )
        })
        .collect()
}

/// Monte Carlo check of every grid point; point `k` draws from stream `k + 1`
/// of `seed`.
pub fn check_noise_grid(grid: &[(f64, f64, f64)], samples: usize, seed: u64) -> Vec<NoiseCheck> {
    grid.iter()
        .enumerate()
        .map(|(k, &(mu, sigma, alpha))| {
            let dist = TruncatedLaplace::new(mu, sigma, alpha).expect("grid point in range");
            let stats = noise_statistics(&dist, samples, &mut crate::rng_stream(seed, k as u64 + 1));
            NoiseCheck {
                mu,
                sigma,
                alpha,
                stats,
                mean_ok: fabs(stats.mean - mu) <= 4.0 * stats.se_mean,
                bound_ok: dist.variance_exact() <= 2.0 * sigma * sigma,
                variance_ok: fabs(stats.variance - stats.exact_variance) <= 3.0 * stats.se_variance,
            }
        })
        .collect()
}
