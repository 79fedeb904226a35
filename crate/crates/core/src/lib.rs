//! Packing linear programs under (ε, δ)-joint differential privacy.
//!
//! The solver runs best response on the primal (agent allocations) and a noisy
//! multiplicative-weight update on the dual (resource prices). Step sizes are
//! inversely proportional to the largest subgradient magnitude and capped at
//! `α/b`; noise scales grow with the square root of the step size. Prices are
//! the only state shared across agents, so each agent's allocation depends on
//! her own data and the published price sequence alone.
//!
//! Modules:
//!
//!  - [`instance`]: problem data, validation and synthetic generators.
//!  - [`noise`]: the truncated Laplacian noise family.
//!  - [`mwu`]: deterministic primal–dual primitives.
//!  - [`counter`]: running-sum counter for the stopping rule.
//!  - [`solver`]: the private dual MWU loop and privacy accounting.
//!  - [`baseline`]: non-private oracles and the fixed-step baseline.
//!  - [`audit`]: numeric checks of the distributional, regret, feasibility and
//!    round-count claims.
//!
//! The crate is `no_std` (it needs `alloc`); all float math goes through
//! `libm` so traces are reproducible bit-for-bit across targets.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audit;
pub mod baseline;
pub mod counter;
pub mod instance;
pub mod mwu;
pub mod noise;
pub mod solver;

pub use baseline::{fixed_step_mwu, knapsack_oracle, nonprivate_mwu, OracleMethod, OracleResult};
pub use counter::{CounterMode, PrivateCounter};
pub use instance::{generate, validate, Allocation, GeneratorKind, InstanceParts, PackingInstance};
pub use mwu::{PriceState, Subgradient};
pub use noise::{TruncatedLaplace, TruncatedLaplaceFamily};
pub use solver::{
    privacy_spent, scale_to_feasible, solve, DerivedConstants, PrivacyParams, RoundRecord, SolveError, SolveResult,
    SolverConfig,
};

/// Deterministic RNG used for every random stream in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the RNG for `stream` of `seed`. Distinct streams are independent.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
