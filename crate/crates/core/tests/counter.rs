use jdp_pack_core::{rng_stream, PrivateCounter};

const ALPHA: f64 = 0.1;
const B: f64 = 200.0;
const ADDS: u64 = 10_000;

fn tree(seed: u64) -> PrivateCounter {
    PrivateCounter::tree(ALPHA / B, ADDS, 0.5, rng_stream(seed, 3)).unwrap()
}

#[test]
fn tree_error_within_three_sigma_envelope() {
    let step = ALPHA / B;
    for seed in 0..100 {
        let mut c = tree(seed);
        for _ in 0..ADDS {
            c.add(step).unwrap();
        }
        let envelope = 3.0 * c.noise_std_bound();
        // log²(10⁴)·(α/b)/ε_counter, up to the constant
        let levels: f64 = 14.0;
        assert!(envelope <= 3.0 * (2.0 * levels).sqrt() * levels * step / 0.5 * (1.0 + 1e-12));
        let err = c.read() - c.true_sum();
        assert!(err.abs() <= envelope, "seed {seed}: error {err} > {envelope}");
    }
}

#[test]
fn tree_error_is_zero_mean() {
    let step = ALPHA / B;
    let errors: Vec<f64> = (0..1000)
        .map(|seed| {
            let mut c = PrivateCounter::tree(step, 1000, 0.5, rng_stream(seed, 3)).unwrap();
            for _ in 0..777 {
                c.add(step).unwrap();
            }
            c.read() - c.true_sum()
        })
        .collect();
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() <= 4.0 * (var / n).sqrt(), "mean {mean}");
}

#[test]
fn tree_reads_are_monotone_up_to_envelope() {
    let step = ALPHA / B;
    for seed in 0..20 {
        let mut c = tree(seed);
        let envelope = 3.0 * c.noise_std_bound();
        let mut prev = c.read();
        for _ in 0..ADDS {
            c.add(step).unwrap();
            let now = c.read();
            assert!(now >= prev - 2.0 * envelope, "seed {seed} at {}", c.count());
            prev = now;
        }
    }
}

#[test]
fn exact_counter_is_the_running_sum() {
    let mut c = PrivateCounter::exact(1.0);
    let mut sum = 0.0;
    for k in 1..=100 {
        let v = k as f64 / 100.0;
        c.add(v).unwrap();
        sum += v;
        assert_eq!(c.read(), sum);
    }
}
