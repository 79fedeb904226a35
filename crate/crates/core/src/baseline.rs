//! Non-private references.
//!
//! [`nonprivate_mwu_run`] is written out separately from the private loop on
//! purpose: with noise disabled the two must agree bit-for-bit, and that check
//! only means something if they do not share the loop body.

use alloc::vec;
use alloc::vec::Vec;

use crate::instance::{Allocation, PackingInstance};
use crate::mwu::{self, MwuError, PriceState};
use crate::noise::TruncatedLaplaceFamily;
use crate::solver::{
    self, DerivedConstants, PrivacyParams, RoundRecord, SolveError, SolveResult, SolverConfig, StepRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OracleMethod {
    GreedyKnapsack,
    HighPrecisionMwu,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleResult {
    pub x_opt: Allocation,
    pub opt_value: f64,
    pub method: OracleMethod,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("knapsack oracle needs exactly one resource (got {0})")]
    NotSingleResource(usize),
    #[error("alpha must lie in (0, 1) (got {0})")]
    Alpha(f64),
    #[error(transparent)]
    Mwu(#[from] MwuError),
}

/// Exact optimum of the fractional single-resource packing LP: take agents in
/// decreasing `v_i / a_i` order (zero-demand agents first) until the supply
/// runs out, splitting the last one.
pub fn knapsack_oracle(instance: &PackingInstance) -> Result<OracleResult, BaselineError> {
    if instance.m() != 1 {
        return Err(BaselineError::NotSingleResource(instance.m()));
    }
    let values = instance.values();
    let demand = |i: usize| instance.demand(i, 0);
    let mut order: Vec<usize> = (0..instance.n()).collect();
    // zero-demand agents rank first; ratios are compared as computed floats so
    // the order stays total even when many ratios tie up to rounding
    let ratio = |i: usize| {
        if demand(i) == 0.0 {
            f64::INFINITY
        } else {
            values[i] / demand(i)
        }
    };
    order.sort_by(|&i, &k| ratio(k).total_cmp(&ratio(i)));
    let mut x = vec![0.0; instance.n()];
    let mut remaining = instance.b();
    for i in order {
        let a = demand(i);
        if a == 0.0 {
            x[i] = 1.0;
        } else if remaining >= a {
            x[i] = 1.0;
            remaining -= a;
        } else {
            x[i] = (remaining / a).clamp(0.0, 1.0);
            break;
        }
    }
    let opt_value = instance.objective(&x);
    Ok(OracleResult {
        x_opt: Allocation::from_vec_unchecked(x),
        opt_value,
        method: OracleMethod::GreedyKnapsack,
    })
}

/// The dual MWU with every noise draw replaced by its mean, returning the
/// scaled-feasible allocation. With small `α` it serves as the reference
/// optimum when `m > 1`.
pub fn nonprivate_mwu(instance: &PackingInstance, alpha: f64) -> Result<OracleResult, BaselineError> {
    let run = nonprivate_mwu_run(instance, alpha, 3.0, false)?;
    Ok(OracleResult {
        x_opt: run.x_feasible,
        opt_value: run.objective,
        method: OracleMethod::HighPrecisionMwu,
    })
}

/// Full run of the noiseless loop, with trace. `rounds_constant` is `c₁`.
pub fn nonprivate_mwu_run(
    instance: &PackingInstance,
    alpha: f64,
    rounds_constant: f64,
    record_best_responses: bool,
) -> Result<SolveResult, BaselineError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BaselineError::Alpha(alpha));
    }
    let (n, m, b) = (instance.n(), instance.m(), instance.b());
    let constants = DerivedConstants::for_instance(instance, alpha, rounds_constant);
    let initial = PriceState::uniform(m, constants.p_max);
    let mut prices = initial.clone();
    let mut weighted = vec![0.0; n];
    let mut trace = Vec::new();
    let mut best_responses = Vec::new();
    let mut eta_total = 0.0;
    let mut guard_hit = false;
    let trivial = (n as f64) < b;

    let mut t = 0;
    while !trivial && eta_total < constants.eta_sum {
        if t == constants.t_max {
            guard_hit = true;
            break;
        }
        t += 1;
        let x = mwu::best_response(instance, &prices)?;
        let g = mwu::subgradient(instance, x.as_slice())?;
        let eta = mwu::step_size(&g, alpha, b);
        for (w, &xi) in weighted.iter_mut().zip(x.as_slice()) {
            if xi != 0.0 {
                *w += eta * xi;
            }
        }
        let mu: Vec<f64> = g.as_slice().iter().map(|v| eta * v).collect();
        let mut step = mu.clone();
        step[m] = 0.0;
        prices = mwu::mwu_update(&prices, &step)?;
        eta_total += eta;
        trace.push(RoundRecord {
            t,
            eta,
            step_kind: mwu::step_kind(&g, b),
            sigma: 0.0,
            epsilon_t: None,
            subgradient: g.into_inner(),
            mu,
            delta_realized: step,
            prices_after: prices.prices().to_vec(),
            counter_read: eta_total,
        });
        if record_best_responses {
            best_responses.push(x);
        }
    }

    let x_bar: Vec<f64> = if trivial {
        vec![1.0; n]
    } else {
        weighted.into_iter().map(|w| w / constants.eta_sum).collect()
    };
    let x_feasible = solver::scale_to_feasible(instance, &x_bar);
    Ok(SolveResult {
        objective_bar: instance.objective(&x_bar),
        overflow_s: instance.max_overflow(&x_bar),
        objective: instance.objective(x_feasible.as_slice()),
        x_feasible,
        x_bar,
        rounds: trace.len(),
        trace,
        best_responses,
        initial_prices: initial,
        constants,
        eta_total,
        epsilon_spent: f64::INFINITY,
        budget_bound: 0.0,
        budget_within_bound: false,
        guard_hit,
        trivial,
        regime_violations: 0,
        supply_threshold: 0.0,
    })
}

/// Same loop as [`solver::solve`] but with the uniform step `η = α/n` (and so
/// a uniform noise scale). Round count grows linearly in `n`.
pub fn fixed_step_mwu(
    instance: &PackingInstance,
    params: &PrivacyParams,
    config: &SolverConfig,
    seed: u64,
) -> Result<SolveResult, SolveError> {
    params.check()?;
    let eta = params.alpha / instance.n() as f64;
    solver::run_loop(
        &TruncatedLaplaceFamily,
        instance,
        params,
        config,
        seed,
        StepRule::Fixed(eta),
    )
}
