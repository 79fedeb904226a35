//! Deterministic primal–dual primitives.
//!
//! Prices live on `m + 1` coordinates; the last one is a dummy resource with
//! zero supply and zero demand, which lets the `ℓ₁` mass of the real prices
//! float anywhere in `[0, p_max]`.
//!
//! Subgradient sign: `g_j = b − Σ_i a_ij x_i`, so an overdemanded resource has
//! `g_j < 0` and its price rises under the `exp(−δ)` update.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log};

use crate::instance::{Allocation, PackingInstance};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MwuError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("price update collapsed: every reweighted price is zero or non-finite")]
    DegenerateUpdate,
    #[error("price vector violates the l1 budget or has a negative entry")]
    InvalidPrices,
}

fn check_len(expected: usize, found: usize) -> Result<(), MwuError> {
    if expected == found {
        Ok(())
    } else {
        Err(MwuError::DimensionMismatch { expected, found })
    }
}

/// Dual prices over `m + 1` coordinates summing to `p_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceState {
    prices: Vec<f64>,
    p_max: f64,
}

impl PriceState {
    /// `p_max` spread evenly over the `m` resources and the dummy.
    pub fn uniform(m: usize, p_max: f64) -> Self {
        Self {
            prices: vec![p_max / (m + 1) as f64; m + 1],
            p_max,
        }
    }

    /// Checks nonnegativity and `Σ p = p_max` to `1e−9` relative tolerance.
    pub fn new(prices: Vec<f64>, p_max: f64) -> Result<Self, MwuError> {
        let total: f64 = prices.iter().sum();
        let ok = p_max > 0.0
            && prices.len() >= 2
            && prices.iter().all(|p| *p >= 0.0 && p.is_finite())
            && fabs(total - p_max) <= 1e-9 * p_max;
        if ok {
            Ok(Self { prices, p_max })
        } else {
            Err(MwuError::InvalidPrices)
        }
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Number of real resources (excludes the dummy).
    pub fn resources(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.prices
    }
}

/// Dual subgradient; the dummy coordinate is always zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Subgradient(Vec<f64>);

impl Subgradient {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `max_{j ≤ m} |g_j|`.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, g| f64::max(acc, fabs(*g)))
    }
}

impl From<Vec<f64>> for Subgradient {
    fn from(g: Vec<f64>) -> Self {
        Self(g)
    }
}

/// `x_i = 1` iff `v_i − Σ_{j ≤ m} a_ij p_j ≥ 0`; ties allocate.
pub fn best_response(instance: &PackingInstance, prices: &PriceState) -> Result<Allocation, MwuError> {
    check_len(instance.m() + 1, prices.prices.len())?;
    let p = &prices.prices[..instance.m()];
    let x = instance
        .rows()
        .zip(instance.values())
        .map(|(row, &v)| {
            let cost: f64 = row.iter().zip(p).map(|(a, p)| a * p).sum();
            if v - cost >= 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Allocation::from_vec_unchecked(x))
}

/// `g_j = b − Σ_i a_ij x_i` for real resources, `0` for the dummy.
pub fn subgradient(instance: &PackingInstance, x: &[f64]) -> Result<Subgradient, MwuError> {
    check_len(instance.n(), x.len())?;
    let mut g: Vec<f64> = instance
        .resource_demand(x)
        .into_iter()
        .map(|d| instance.b() - d)
        .collect();
    g.push(0.0);
    Ok(Subgradient(g))
}

/// `α / max(b, max_j |g_j|)`. Every price move `η·|g_j|` is at most `α`.
pub fn step_size(g: &Subgradient, alpha: f64, b: f64) -> f64 {
    alpha / f64::max(b, g.max_abs())
}

/// Which term set the step: `0` when the cap `α/b` binds, otherwise `j + 1`
/// for the first resource attaining `max_j |g_j|`.
pub fn step_kind(g: &Subgradient, b: f64) -> usize {
    let max = g.max_abs();
    if max <= b {
        return 0;
    }
    g.0.iter().position(|v| fabs(*v) == max).map_or(0, |j| j + 1)
}

/// `p'_j = p_max · p_j e^{−δ_j} / Σ_k p_k e^{−δ_k}`.
pub fn mwu_update(prices: &PriceState, deltas: &[f64]) -> Result<PriceState, MwuError> {
    check_len(prices.prices.len(), deltas.len())?;
    let weights: Vec<f64> = if deltas.iter().any(|d| fabs(*d) > 30.0) {
        // log-sum-exp path
        let logs: Vec<f64> = prices.prices.iter().zip(deltas).map(|(p, d)| log(*p) - d).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(MwuError::DegenerateUpdate);
        }
        logs.iter().map(|l| exp(l - top)).collect()
    } else {
        prices.prices.iter().zip(deltas).map(|(p, d)| p * exp(-d)).collect()
    };
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(MwuError::DegenerateUpdate);
    }
    let p_max = prices.p_max;
    Ok(PriceState {
        prices: weights.into_iter().map(|w| p_max * w / total).collect(),
        p_max,
    })
}

/// `L(x, p) = Σ_i v_i x_i + Σ_{j ≤ m} p_j (b − Σ_i a_ij x_i)`.
pub fn lagrangian(instance: &PackingInstance, x: &[f64], prices: &PriceState) -> Result<f64, MwuError> {
    check_len(instance.m() + 1, prices.prices.len())?;
    let g = subgradient(instance, x)?;
    let dual: f64 = g.0.iter().zip(&prices.prices).map(|(g, p)| g * p).sum();
    Ok(instance.objective(x) + dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GeneratorKind};
    use proptest::prelude::*;

    fn inst(values: Vec<f64>, demands: Vec<f64>, m: usize, b: f64) -> PackingInstance {
        PackingInstance::from_flat(m, b, values, demands).unwrap()
    }

    fn prices(p: Vec<f64>) -> PriceState {
        let total = p.iter().sum();
        PriceState::new(p, total).unwrap()
    }

    #[test]
    fn zero_prices_allocate_everyone() {
        let i = generate(GeneratorKind::Uniform, 20, 3, 2.0, 1).unwrap();
        let p = PriceState {
            prices: vec![0.0, 0.0, 0.0, 1.0],
            p_max: 1.0,
        };
        assert_eq!(best_response(&i, &p).unwrap(), Allocation::ones(20));
    }

    #[test]
    fn best_response_thresholds() {
        let i = inst(vec![0.9, 0.1], vec![1.0, 1.0], 1, 1.0);
        let x = best_response(&i, &prices(vec![0.5, 0.5])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0]);
        // exact tie allocates
        let i = inst(vec![1.0], vec![1.0], 1, 1.0);
        assert_eq!(best_response(&i, &prices(vec![1.0, 0.0])).unwrap().as_slice(), &[1.0]);
        assert!(matches!(
            best_response(&i, &prices(vec![1.0, 0.0, 1.0])),
            Err(MwuError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn subgradient_cases() {
        let i = inst(vec![0.5, 0.5], vec![1.0, 1.0], 1, 1.0);
        assert_eq!(subgradient(&i, &[0.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(subgradient(&i, &[1.0, 1.0]).unwrap().as_slice(), &[-1.0, 0.0]);
        assert!(subgradient(&i, &[1.0]).is_err());
    }

    #[test]
    fn step_size_cases() {
        let g = Subgradient(vec![5.0, 0.0, 0.0]);
        assert_eq!(step_size(&g, 0.1, 5.0), 0.1 / 5.0);
        assert_eq!(step_kind(&g, 5.0), 0);
        let g = Subgradient(vec![-500.0, 20.0, 0.0]);
        assert!((step_size(&g, 0.1, 100.0) - 0.0002).abs() < 1e-18);
        assert_eq!(step_kind(&g, 100.0), 1);
        let g = Subgradient(vec![0.0, 0.0]);
        assert_eq!(step_size(&g, 0.1, 4.0), 0.1 / 4.0);
    }

    #[test]
    fn update_cases() {
        let p = prices(vec![1.0, 1.0]);
        assert_eq!(mwu_update(&p, &[0.0, 0.0]).unwrap(), p);
        let q = mwu_update(&p, &[core::f64::consts::LN_2, 0.0]).unwrap();
        assert!((q.prices[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q.prices[1] - 4.0 / 3.0).abs() < 1e-15);
        assert!(mwu_update(&p, &[0.0]).is_err());
        // large deltas go through the stable path
        let q = mwu_update(&p, &[800.0, 0.0]).unwrap();
        assert!(q.prices[0] >= 0.0 && (q.prices[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_cases() {
        let i = inst(vec![0.9], vec![1.0], 1, 1.0);
        assert!((lagrangian(&i, &[1.0], &prices(vec![0.5, 0.0])).unwrap() - 0.9).abs() < 1e-15);
        let i = generate(GeneratorKind::Uniform, 10, 2, 3.0, 4).unwrap();
        let zero = PriceState {
            prices: vec![0.0, 0.0, 1.0],
            p_max: 1.0,
        };
        let x = vec![0.3; 10];
        assert!((lagrangian(&i, &x, &zero).unwrap() - i.objective(&x)).abs() < 1e-12);
        let p = prices(vec![0.2, 0.7, 0.1]);
        assert!((lagrangian(&i, &[0.0; 10], &p).unwrap() - 3.0 * 0.9).abs() < 1e-12);
    }

    fn arb_instance() -> impl Strategy<Value = PackingInstance> {
        (1usize..=20, 1usize..=4, 0.5f64..8.0, any::<u64>())
            .prop_map(|(n, m, b, seed)| generate(GeneratorKind::Uniform, n, m, b, seed).unwrap())
    }

    fn arb_prices(m: usize) -> impl Strategy<Value = PriceState> {
        (proptest::collection::vec(0.0f64..1.0, m + 1), 0.1f64..10.0).prop_map(|(w, p_max)| {
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            let mut p: Vec<f64> = w.iter().map(|w| p_max * w / total).collect();
            let last = p_max - p[..p.len() - 1].iter().sum::<f64>();
            *p.last_mut().unwrap() = last.max(0.0);
            PriceState { prices: p, p_max }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn best_response_maximizes_lagrangian(
            (i, p, seed) in arb_instance().prop_flat_map(|i| { let m = i.m(); (Just(i), arb_prices(m), any::<u64>()) })
        ) {
            use rand::Rng;
            let br = best_response(&i, &p).unwrap();
            let best = lagrangian(&i, br.as_slice(), &p).unwrap();
            let mut rng = crate::rng_stream(seed, 0);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..i.n()).map(|_| rng.gen::<f64>()).collect();
                prop_assert!(best >= lagrangian(&i, &x, &p).unwrap() - 1e-9);
            }
        }

        #[test]
        fn weak_duality_on_feasible_points(
            (i, p, scale) in arb_instance().prop_flat_map(|i| { let m = i.m(); (Just(i), arb_prices(m), 0.0f64..1.0) })
        ) {
            let x = vec![scale; i.n()];
            let over = i.max_overflow(&x);
            if over <= 0.0 {
                prop_assert!(lagrangian(&i, &x, &p).unwrap() >= i.objective(&x) - 1e-12);
            }
        }

        #[test]
        fn step_bounds_price_moves(g in proptest::collection::vec(-1000.0f64..50.0, 1..6), alpha in 0.01f64..0.99, b in 50.0f64..200.0) {
            let mut g = g;
            g.push(0.0);
            let g = Subgradient(g);
            let eta = step_size(&g, alpha, b);
            prop_assert!(eta > 0.0 && eta <= alpha / b);
            for v in g.as_slice() {
                prop_assert!(eta * v.abs() <= alpha * (1.0 + 1e-15));
            }
        }

        #[test]
        fn update_keeps_budget_and_ignores_shifts(
            (p, deltas, shift) in (1usize..6).prop_flat_map(|m| (arb_prices(m), proptest::collection::vec(-1.0f64..1.0, m + 1), -5.0f64..5.0))
        ) {
            let q = mwu_update(&p, &deltas).unwrap();
            let total: f64 = q.prices().iter().sum();
            prop_assert!((total - p.p_max()).abs() <= 1e-9 * p.p_max());
            prop_assert!(q.prices().iter().all(|v| *v >= 0.0));
            for (a, b) in p.prices().iter().zip(q.prices()) {
                prop_assert!(*a == 0.0 || *b > 0.0);
            }
            let shifted: Vec<f64> = deltas.iter().map(|d| d + shift).collect();
            let r = mwu_update(&p, &shifted).unwrap();
            for (a, b) in q.prices().iter().zip(r.prices()) {
                prop_assert!((a - b).abs() <= 1e-12 * p.p_max());
            }
        }
    }
}
