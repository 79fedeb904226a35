//! The private dual MWU loop.
//!
//! Each round: best response to the current prices, subgradient, step size
//! `η = α / max(b, max_j |g_j|)`, noise scale
//! `σ = √(m · η_sum · η · ln(T_max·m/δ)) / ε`, a truncated Laplacian draw
//! `δ_j ~ Lap_{1−α}(η·g_j, σ)` per real resource, and a multiplicative price
//! update renormalized to `p_max`. The loop stops once the counter reports
//! `Σ η ≥ η_sum`. The output is the step-weighted average of the best
//! responses, plus a copy scaled down until every supply constraint holds.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, log, sqrt};

use crate::counter::{CounterError, CounterMode, PrivateCounter};
use crate::instance::{Allocation, PackingInstance};
use crate::mwu::{self, MwuError, PriceState};
use crate::noise::{NoiseDistribution, NoiseError, NoiseFamily, TruncatedLaplaceFamily};

/// Frozen constant for the composed budget check
/// `Σ_t Σ_j (ε^t)² ≤ C · ε² / ln(2/δ)`; calibrated for `δ = 10⁻⁶`.
pub const DEFAULT_PRIVACY_CONSTANT: f64 = 2600.0;

/// RNG stream carrying the price noise.
const NOISE_STREAM: u64 = 2;
/// RNG stream carrying the tree counter noise.
const COUNTER_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("epsilon must be positive and finite (got {0})")]
    Epsilon(f64),
    #[error("delta must lie in (0, 1) (got {0})")]
    Delta(f64),
    #[error("alpha must lie in (0, 1) (got {0})")]
    Alpha(f64),
}

/// `(ε, δ)` privacy target and approximation parameter `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, alpha: f64) -> Result<Self, ParamError> {
        let p = Self { epsilon, delta, alpha };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ParamError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ParamError::Epsilon(self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ParamError::Delta(self.delta));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ParamError::Alpha(self.alpha));
        }
        Ok(())
    }
}

/// Constants fixed before the first round.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedConstants {
    /// `2n / b`
    pub p_max: f64,
    /// `ln(m+1) / (α b)`
    pub eta_sum: f64,
    /// `ceil(c₁ (m+1) ln(m+1) / α²)`
    pub t_max: u64,
}

impl DerivedConstants {
    pub fn new(n: usize, m: usize, b: f64, alpha: f64, rounds_constant: f64) -> Self {
        let ln_m1 = log((m + 1) as f64);
        let t_max = ceil(rounds_constant * (m + 1) as f64 * ln_m1 / (alpha * alpha)).max(1.0) as u64;
        Self {
            p_max: 2.0 * n as f64 / b,
            eta_sum: ln_m1 / (alpha * b),
            t_max,
        }
    }

    pub fn for_instance(instance: &PackingInstance, alpha: f64, rounds_constant: f64) -> Self {
        Self::new(instance.n(), instance.m(), instance.b(), alpha, rounds_constant)
    }
}

/// Minimum supply `c₀ √(m ln(m+1) ln(T_max m/δ)) / (α ε)`. At `c₀ = 1` this is
/// exactly the supply at which the largest noise scale equals `α`.
pub fn supply_threshold(m: usize, epsilon: f64, delta: f64, alpha: f64, t_max: u64, supply_constant: f64) -> f64 {
    let m_f = m as f64;
    supply_constant * sqrt(m_f * log(m_f + 1.0) * log(t_max as f64 * m_f / delta)) / (alpha * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    pub counter_mode: CounterMode,
    /// Test-only switch: `false` replaces every draw by its mean.
    pub noise: bool,
    /// `c₀` in the supply condition.
    pub supply_constant: f64,
    /// `c₁` in `T_max`.
    pub rounds_constant: f64,
    /// Fraction of `ε` reserved for the tree counter.
    pub counter_share: f64,
    /// Run even when the supply condition fails; rounds with `σ > α` are
    /// counted instead of refused.
    pub override_supply_check: bool,
    /// Keep every round's best response in the result.
    pub record_best_responses: bool,
    pub privacy_constant: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            counter_mode: CounterMode::Exact,
            noise: true,
            supply_constant: 1.0,
            rounds_constant: 3.0,
            counter_share: 0.1,
            override_supply_check: false,
            record_best_responses: false,
            privacy_constant: DEFAULT_PRIVACY_CONSTANT,
        }
    }
}

impl SolverConfig {
    pub fn without_noise() -> Self {
        Self {
            noise: false,
            ..Self::default()
        }
    }

    /// The part of `ε` that drives the price noise.
    pub fn price_epsilon(&self, epsilon: f64) -> f64 {
        match self.counter_mode {
            CounterMode::Exact => epsilon,
            CounterMode::Tree => epsilon * (1.0 - self.counter_share),
        }
    }
}

/// One round of the loop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: u64,
    pub eta: f64,
    /// `0` when the `α/b` cap set the step, else the 1-based resource index.
    pub step_kind: usize,
    /// `0` when noise is disabled.
    pub sigma: f64,
    /// Per-coordinate budget `4η ln(2/δ)/σ`; `None` when noise is disabled.
    pub epsilon_t: Option<f64>,
    pub subgradient: Vec<f64>,
    /// `η·g_j`
    pub mu: Vec<f64>,
    pub delta_realized: Vec<f64>,
    pub prices_after: Vec<f64>,
    /// Counter reading after this round's step was added.
    pub counter_read: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveResult {
    /// `(1/η_sum) Σ_t η^t x^t`. May exceed 1 by the final step's overshoot.
    pub x_bar: Vec<f64>,
    pub x_feasible: Allocation,
    pub objective_bar: f64,
    /// Objective of `x_feasible`.
    pub objective: f64,
    /// `max_j (Σ_i a_ij x̄_i − b)`
    pub overflow_s: f64,
    pub rounds: usize,
    pub trace: Vec<RoundRecord>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub best_responses: Vec<Allocation>,
    pub initial_prices: PriceState,
    pub constants: DerivedConstants,
    /// True `Σ_t η^t`.
    pub eta_total: f64,
    pub epsilon_spent: f64,
    pub budget_bound: f64,
    pub budget_within_bound: bool,
    /// The loop stopped at `T_max` before the counter reached `η_sum`.
    pub guard_hit: bool,
    /// `n < b`: everyone allocated, no rounds run.
    pub trivial: bool,
    /// Rounds with `σ > α` (only possible under the supply override).
    pub regime_violations: usize,
    pub supply_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("supply b = {b} below the required {required:.3}; pass the override to run anyway")]
    SupplyCondition { b: f64, required: f64 },
    #[error("round {round}: noise scale {sigma} exceeds alpha = {alpha}")]
    NoiseScale { round: u64, sigma: f64, alpha: f64 },
    #[error(transparent)]
    Mwu(#[from] MwuError),
    #[error(transparent)]
    Counter(#[from] CounterError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Step rule for the shared loop.
#[derive(Debug, Clone, Copy)]
pub(crate) enum StepRule {
    Adaptive,
    /// Uniform step; the guard becomes `ceil(η_sum/η) + 1`.
    Fixed(f64),
}

/// Runs the private dual MWU with the truncated Laplacian family.
pub fn solve(
    instance: &PackingInstance,
    params: &PrivacyParams,
    config: &SolverConfig,
    seed: u64,
) -> Result<SolveResult, SolveError> {
    solve_with(&TruncatedLaplaceFamily, instance, params, config, seed)
}

/// [`solve`] with any noise family.
pub fn solve_with<F: NoiseFamily>(
    family: &F,
    instance: &PackingInstance,
    params: &PrivacyParams,
    config: &SolverConfig,
    seed: u64,
) -> Result<SolveResult, SolveError> {
    run_loop(family, instance, params, config, seed, StepRule::Adaptive)
}

pub(crate) fn run_loop<F: NoiseFamily>(
    family: &F,
    instance: &PackingInstance,
    params: &PrivacyParams,
    config: &SolverConfig,
    seed: u64,
    rule: StepRule,
) -> Result<SolveResult, SolveError> {
    params.check()?;
    let (n, m, b, alpha) = (instance.n(), instance.m(), instance.b(), params.alpha);
    let mut constants = DerivedConstants::for_instance(instance, alpha, config.rounds_constant);
    if let StepRule::Fixed(eta) = rule {
        constants.t_max = ceil(constants.eta_sum / eta) as u64 + 1;
    }
    let eps = config.price_epsilon(params.epsilon);
    let threshold = supply_threshold(m, eps, params.delta, alpha, constants.t_max, config.supply_constant);
    if config.noise && b < threshold && !config.override_supply_check {
        return Err(SolveError::SupplyCondition { b, required: threshold });
    }
    let initial_prices = PriceState::uniform(m, constants.p_max);
    let budget_bound = config.privacy_constant * eps * eps / log(2.0 / params.delta);

    let mut result = SolveResult {
        x_bar: vec![1.0; n],
        x_feasible: Allocation::ones(n),
        objective_bar: 0.0,
        objective: 0.0,
        overflow_s: 0.0,
        rounds: 0,
        trace: Vec::new(),
        best_responses: Vec::new(),
        initial_prices: initial_prices.clone(),
        constants,
        eta_total: 0.0,
        epsilon_spent: 0.0,
        budget_bound,
        budget_within_bound: true,
        guard_hit: false,
        trivial: false,
        regime_violations: 0,
        supply_threshold: threshold,
    };

    if (n as f64) < b {
        result.trivial = true;
        return Ok(finish(instance, result));
    }

    let max_step = alpha / b;
    let mut counter = match config.counter_mode {
        CounterMode::Exact => PrivateCounter::exact(max_step),
        CounterMode::Tree => PrivateCounter::tree(
            max_step,
            constants.t_max,
            params.epsilon * config.counter_share,
            crate::rng_stream(seed, COUNTER_STREAM),
        )?,
    };
    let mut rng = crate::rng_stream(seed, NOISE_STREAM);
    let log_term = log(constants.t_max as f64 * m as f64 / params.delta);
    let ln_2_delta = log(2.0 / params.delta);

    let mut prices = initial_prices;
    let mut weighted = vec![0.0; n];
    for t in 1..=constants.t_max {
        let x = mwu::best_response(instance, &prices)?;
        let g = mwu::subgradient(instance, x.as_slice())?;
        let (eta, step_kind) = match rule {
            StepRule::Adaptive => (mwu::step_size(&g, alpha, b), mwu::step_kind(&g, b)),
            StepRule::Fixed(eta) => (eta, 0),
        };
        for (acc, &xi) in weighted.iter_mut().zip(x.as_slice()) {
            if xi != 0.0 {
                *acc += eta * xi;
            }
        }
        let mu: Vec<f64> = g.as_slice().iter().map(|g| eta * g).collect();
        let (sigma, epsilon_t, deltas) = if config.noise {
            let sigma = sqrt(m as f64 * constants.eta_sum * eta * log_term) / eps;
            if sigma > alpha {
                if !config.override_supply_check {
                    return Err(SolveError::NoiseScale { round: t, sigma, alpha });
                }
                result.regime_violations += 1;
            }
            let mut deltas = Vec::with_capacity(m + 1);
            for &mean in &mu[..m] {
                deltas.push(family.build(mean, sigma, alpha)?.sample(&mut rng));
            }
            deltas.push(0.0);
            (sigma, Some(4.0 * eta * ln_2_delta / sigma), deltas)
        } else {
            let mut deltas = mu.clone();
            deltas[m] = 0.0;
            (0.0, None, deltas)
        };
        prices = mwu::mwu_update(&prices, &deltas)?;
        counter.add(eta)?;
        let counter_read = counter.read();
        result.trace.push(RoundRecord {
            t,
            eta,
            step_kind,
            sigma,
            epsilon_t,
            subgradient: g.into_inner(),
            mu,
            delta_realized: deltas,
            prices_after: prices.prices().to_vec(),
            counter_read,
        });
        if config.record_best_responses {
            result.best_responses.push(x);
        }
        if counter_read >= constants.eta_sum {
            break;
        }
        if t == constants.t_max {
            result.guard_hit = true;
        }
    }

    result.rounds = result.trace.len();
    result.eta_total = counter.true_sum();
    result.x_bar = weighted.into_iter().map(|w| w / constants.eta_sum).collect();
    result.epsilon_spent = if config.noise {
        privacy_spent(&result.trace, params.delta)
    } else {
        f64::INFINITY
    };
    result.budget_within_bound = result.epsilon_spent <= budget_bound;
    Ok(finish(instance, result))
}

fn finish(instance: &PackingInstance, mut result: SolveResult) -> SolveResult {
    result.objective_bar = instance.objective(&result.x_bar);
    result.overflow_s = instance.max_overflow(&result.x_bar);
    result.x_feasible = scale_to_feasible(instance, &result.x_bar);
    result.objective = instance.objective(result.x_feasible.as_slice());
    result
}

/// Clamps to `[0, 1]` and divides by `max(1, max_j demand_j / b)`. The result
/// satisfies every supply constraint in floating point.
pub fn scale_to_feasible(instance: &PackingInstance, x: &[f64]) -> Allocation {
    let clamped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let b = instance.b();
    let mut factor = instance
        .resource_demand(&clamped)
        .into_iter()
        .fold(1.0, |f, d| f64::max(f, d / b));
    if factor == 1.0 {
        return Allocation::from_vec_unchecked(clamped);
    }
    loop {
        let scaled: Vec<f64> = clamped.iter().map(|v| v / factor).collect();
        if instance.max_overflow(&scaled) <= 0.0 {
            return Allocation::from_vec_unchecked(scaled);
        }
        // rounding left a resource a few ulps over
        factor *= 1.0 + 4.0 * f64::EPSILON;
    }
}

/// `Σ_t Σ_{j ≤ m} (4 η^t ln(2/δ) / σ^t)²`, recomputed from each round's step
/// and noise scale. Infinite if any round ran without noise.
pub fn privacy_spent(trace: &[RoundRecord], delta: f64) -> f64 {
    let ln_2_delta = log(2.0 / delta);
    trace
        .iter()
        .map(|r| {
            let m = r.mu.len().saturating_sub(1) as f64;
            let e = 4.0 * r.eta * ln_2_delta / r.sigma;
            m * e * e
        })
        .sum()
}
