//! Packing problem data: `n` agents, `m` resources with uniform supply `b`.
//!
//! Values and demands are bounded in `[0, 1]`. Unequal supplies reduce to the
//! uniform case by scaling every resource down to the smallest supply; that
//! rescaling is left to the caller.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

/// Unvalidated instance data, laid out like the canonical JSON file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceParts {
    pub n: usize,
    pub m: usize,
    pub b: f64,
    pub values: Vec<f64>,
    /// One row of `m` demands per agent.
    pub demands: Vec<Vec<f64>>,
}

/// First invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("instance must have at least one agent")]
    NoAgents,
    #[error("instance must have at least one resource")]
    NoResources,
    #[error("supply must be positive (got {0})")]
    NonPositiveSupply(f64),
    #[error("expected {expected} values, found {found}")]
    ValuesLength { expected: usize, found: usize },
    #[error("expected {expected} demand rows, found {found}")]
    DemandRows { expected: usize, found: usize },
    #[error("demand row {agent} has {found} entries, expected {expected}")]
    DemandRowLength {
        agent: usize,
        expected: usize,
        found: usize,
    },
    #[error("value at index {index} is {value}, outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("demand of agent {agent} for resource {resource} is {value}, outside [0, 1]")]
    DemandOutOfRange { agent: usize, resource: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid instance: {0}")]
    Invalid(#[from] Violation),
    #[error("unknown generator kind `{0}` (expected uniform, correlated or tight)")]
    UnknownGenerator(String),
    #[error("generator needs n >= 1, m >= 1 and b > 0")]
    BadGeneratorArgs,
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every instance invariant, reporting the first offender.
pub fn validate(parts: &InstanceParts) -> Result<(), Violation> {
    if parts.n == 0 {
        return Err(Violation::NoAgents);
    }
    if parts.m == 0 {
        return Err(Violation::NoResources);
    }
    if parts.b <= 0.0 || !parts.b.is_finite() {
        return Err(Violation::NonPositiveSupply(parts.b));
    }
    if parts.values.len() != parts.n {
        return Err(Violation::ValuesLength {
            expected: parts.n,
            found: parts.values.len(),
        });
    }
    if parts.demands.len() != parts.n {
        return Err(Violation::DemandRows {
            expected: parts.n,
            found: parts.demands.len(),
        });
    }
    for (agent, row) in parts.demands.iter().enumerate() {
        if row.len() != parts.m {
            return Err(Violation::DemandRowLength {
                agent,
                expected: parts.m,
                found: row.len(),
            });
        }
    }
    if let Some((index, &value)) = parts.values.iter().enumerate().find(|(_, v)| !in_unit(**v)) {
        return Err(Violation::ValueOutOfRange { index, value });
    }
    for (agent, row) in parts.demands.iter().enumerate() {
        if let Some((resource, &value)) = row.iter().enumerate().find(|(_, a)| !in_unit(**a)) {
            return Err(Violation::DemandOutOfRange { agent, resource, value });
        }
    }
    Ok(())
}

/// A validated packing instance. Demands are stored dense and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingInstance {
    n: usize,
    m: usize,
    b: f64,
    values: Vec<f64>,
    demands: Vec<f64>,
}

impl TryFrom<InstanceParts> for PackingInstance {
    type Error = Violation;

    fn try_from(parts: InstanceParts) -> Result<Self, Violation> {
        validate(&parts)?;
        let demands = parts.demands.into_iter().flatten().collect();
        Ok(Self {
            n: parts.n,
            m: parts.m,
            b: parts.b,
            values: parts.values,
            demands,
        })
    }
}

impl PackingInstance {
    /// Builds an instance from values and a flat row-major `n × m` demand matrix.
    pub fn from_flat(m: usize, b: f64, values: Vec<f64>, demands: Vec<f64>) -> Result<Self, Violation> {
        let n = values.len();
        if m == 0 {
            return Err(Violation::NoResources);
        }
        if demands.len() != n * m {
            return Err(Violation::DemandRows {
                expected: n,
                found: demands.len() / m,
            });
        }
        let rows = demands.chunks(m).map(<[f64]>::to_vec).collect();
        Self::try_from(InstanceParts {
            n,
            m,
            b,
            values,
            demands: rows,
        })
    }

    pub fn to_parts(&self) -> InstanceParts {
        InstanceParts {
            n: self.n,
            m: self.m,
            b: self.b,
            values: self.values.clone(),
            demands: self.rows().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Demand row of agent `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.demands[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.demands.chunks_exact(self.m)
    }

    pub fn demand(&self, i: usize, j: usize) -> f64 {
        self.demands[i * self.m + j]
    }

    /// Same agents with a different supply.
    pub fn with_supply(&self, b: f64) -> Result<Self, Violation> {
        if b <= 0.0 || !b.is_finite() {
            return Err(Violation::NonPositiveSupply(b));
        }
        Ok(Self { b, ..self.clone() })
    }

    /// Total demand per resource under `x`.
    pub fn resource_demand(&self, x: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.m];
        for (row, &xi) in self.rows().zip(x) {
            if xi != 0.0 {
                for (t, &a) in total.iter_mut().zip(row) {
                    *t += a * xi;
                }
            }
        }
        total
    }

    /// `Σ_i v_i x_i`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.values.iter().zip(x).map(|(v, x)| v * x).sum()
    }

    /// `max_j (Σ_i a_ij x_i − b)`; nonpositive iff `x` is feasible.
    pub fn max_overflow(&self, x: &[f64]) -> f64 {
        self.resource_demand(x)
            .into_iter()
            .map(|d| d - self.b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Fractional allocation, one entry in `[0, 1]` per agent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Allocation(Vec<f64>);

impl Allocation {
    pub fn new(x: Vec<f64>) -> Option<Self> {
        x.iter().all(|&v| in_unit(v)).then_some(Self(x))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn from_vec_unchecked(x: Vec<f64>) -> Self {
        debug_assert!(x.iter().all(|&v| in_unit(v)));
        Self(x)
    }
}

/// Synthetic instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GeneratorKind {
    /// Values and demands i.i.d. uniform on `[0, 1]`.
    Uniform,
    /// Values proportional to total demand, so value densities are nearly flat.
    Correlated,
    /// Column sums of the demand matrix concentrate around `2b`.
    Tight,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] = [Self::Uniform, Self::Correlated, Self::Tight];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Correlated => "correlated",
            Self::Tight => "tight",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, InstanceError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| InstanceError::UnknownGenerator(s.into()))
    }
}

/// Draws an instance; a pure function of its arguments.
pub fn generate(kind: GeneratorKind, n: usize, m: usize, b: f64, seed: u64) -> Result<PackingInstance, InstanceError> {
    if n == 0 || m == 0 || b <= 0.0 || !b.is_finite() {
        return Err(InstanceError::BadGeneratorArgs);
    }
    let mut rng = crate::rng_stream(seed, 0);
    let mut demands = Vec::with_capacity(n * m);
    let mut values = Vec::with_capacity(n);
    match kind {
        GeneratorKind::Uniform => {
            for _ in 0..n {
                values.push(rng.gen::<f64>());
                demands.extend((0..m).map(|_| rng.gen::<f64>()));
            }
        }
        GeneratorKind::Correlated => {
            let scale = 1.5 / m as f64;
            for _ in 0..n {
                let start = demands.len();
                demands.extend((0..m).map(|_| rng.gen::<f64>()));
                let total: f64 = demands[start..].iter().sum();
                values.push((scale * total).min(1.0));
            }
        }
        GeneratorKind::Tight => {
            // Entries uniform on an interval whose mean is 2b/n.
            let mean = (2.0 * b / n as f64).min(1.0);
            let (lo, width) = if mean <= 0.5 {
                (0.0, 2.0 * mean)
            } else {
                (2.0 * mean - 1.0, 2.0 - 2.0 * mean)
            };
            for _ in 0..n {
                values.push(rng.gen::<f64>());
                demands.extend((0..m).map(|_| (lo + width * rng.gen::<f64>()).min(1.0)));
            }
        }
    }
    Ok(PackingInstance::from_flat(m, b, values, demands)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(values: Vec<f64>, demands: Vec<Vec<f64>>, b: f64) -> InstanceParts {
        InstanceParts {
            n: values.len(),
            m: demands.first().map_or(1, Vec::len),
            b,
            values,
            demands,
        }
    }

    #[test]
    fn accepts_in_range_instance() {
        assert_eq!(validate(&parts(vec![0.5], vec![vec![0.5]], 1.0)), Ok(()));
    }

    #[test]
    fn reports_first_bad_value() {
        let err = validate(&parts(vec![1.5], vec![vec![0.5]], 1.0)).unwrap_err();
        assert_eq!(err, Violation::ValueOutOfRange { index: 0, value: 1.5 });
    }

    #[test]
    fn rejects_zero_supply() {
        let err = validate(&parts(vec![0.5], vec![vec![0.5]], 0.0)).unwrap_err();
        assert_eq!(err, Violation::NonPositiveSupply(0.0));
        assert!(alloc::format!("{err}").contains("supply must be positive"));
    }

    #[test]
    fn rejects_bad_demand_and_shapes() {
        let err = validate(&parts(vec![0.5, 0.2], vec![vec![0.1], vec![2.0]], 1.0)).unwrap_err();
        assert_eq!(
            err,
            Violation::DemandOutOfRange {
                agent: 1,
                resource: 0,
                value: 2.0
            }
        );
        let mut p = parts(vec![0.5], vec![vec![0.5]], 1.0);
        p.n = 2;
        assert!(matches!(validate(&p), Err(Violation::ValuesLength { .. })));
        let p = InstanceParts {
            n: 1,
            m: 2,
            b: 1.0,
            values: vec![0.1],
            demands: vec![vec![0.1]],
        };
        assert!(matches!(validate(&p), Err(Violation::DemandRowLength { agent: 0, .. })));
        assert!(matches!(
            validate(&parts(vec![f64::NAN], vec![vec![0.5]], 1.0)),
            Err(Violation::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn generator_is_deterministic_and_in_range() {
        let a = generate(GeneratorKind::Uniform, 10, 2, 5.0, 7).unwrap();
        let b = generate(GeneratorKind::Uniform, 10, 2, 5.0, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(GeneratorKind::Uniform, 10, 2, 5.0, 8).unwrap());
        assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(a.rows().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn tight_generator_column_sums_near_twice_supply() {
        let inst = generate(GeneratorKind::Tight, 1000, 1, 100.0, 1).unwrap();
        let col = inst.resource_demand(&vec![1.0; 1000])[0];
        assert!((180.0..=220.0).contains(&col), "column sum {col}");
    }

    #[test]
    fn correlated_values_track_demand() {
        let inst = generate(GeneratorKind::Correlated, 50, 3, 5.0, 3).unwrap();
        for (v, row) in inst.values().iter().zip(inst.rows()) {
            let expected = (0.5 * row.iter().sum::<f64>()).min(1.0);
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_generator_kind() {
        assert_eq!("uniform".parse::<GeneratorKind>(), Ok(GeneratorKind::Uniform));
        assert!(matches!(
            "zipf".parse::<GeneratorKind>(),
            Err(InstanceError::UnknownGenerator(_))
        ));
        assert_eq!(
            generate(GeneratorKind::Tight, 0, 1, 1.0, 0),
            Err(InstanceError::BadGeneratorArgs)
        );
    }

    #[test]
    fn parts_round_trip() {
        let inst = generate(GeneratorKind::Correlated, 7, 3, 2.0, 11).unwrap();
        assert_eq!(PackingInstance::try_from(inst.to_parts()).unwrap(), inst);
    }
}
