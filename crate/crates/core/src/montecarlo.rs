//! Maximum achievable GRI at a fixed sample size.
//!
//! An oracle allocator places `n` units across strata as close to `n·q` as
//! integrality allows: strata with `n·qᵢ ≥ 0.5` are rounded half up, smaller
//! ones receive a unit with probability `n·qᵢ`, and the total is then
//! repaired one unit at a time. Averaging the GRI of many such allocations
//! estimates the ceiling any real sample of size `n` could reach.
//!
//! Iteration `t` draws from a ChaCha8 stream keyed by `(seed, t)`, so the
//! estimate does not depend on how iterations are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Name of the generator recorded in provenance.
pub const RNG_ALGORITHM: &str = "ChaCha8 (seed_from_u64(seed), stream = iteration index)";

pub const DEFAULT_ITERATIONS: usize = 1000;

/// `n·qᵢ` at or above this is rounded; below it a Bernoulli draw decides.
pub const LARGE_STRATUM_THRESHOLD: f64 = 0.5;

pub const ORACLE_MAX_STRATA: usize = 6;
pub const ORACLE_MAX_N: u64 = 12;

const INTEGRAL_TOLERANCE: f64 = 1e-9;

/// GRI of an integer allocation against `q`.
pub fn allocation_gri(q: &[f64], counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    let l1: f64 = q.iter().zip(counts).map(|(&qi, &c)| (c as f64 / n - qi).abs()).sum();
    (1.0 - 0.5 * l1).clamp(0.0, 1.0)
}

fn repair_total(counts: &mut [u64], quotas: &[f64], n: u64) {
    let mut total: u64 = counts.iter().sum();
    while total < n {
        let mut best = 0;
        let mut best_delta = f64::INFINITY;
        for (i, (&c, &x)) in counts.iter().zip(quotas).enumerate() {
            let c = c as f64;
            let delta = (c + 1.0 - x).abs() - (c - x).abs();
            if delta < best_delta {
                best = i;
                best_delta = delta;
            }
        }
        counts[best] += 1;
        total += 1;
    }
    while total > n {
        let mut best = usize::MAX;
        let mut best_delta = f64::INFINITY;
        for (i, (&c, &x)) in counts.iter().zip(quotas).enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let delta = (c - 1.0 - x).abs() - (c - x).abs();
            if delta < best_delta {
                best = i;
                best_delta = delta;
            }
        }
        counts[best] -= 1;
        total -= 1;
    }
}

/// One randomized oracle allocation of `n` units. Always sums to `n`.
pub fn optimal_allocation<R: Rng + ?Sized>(q: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let quotas: Vec<f64> = q.iter().map(|&qi| qi * n as f64).collect();
    let mut counts: Vec<u64> = quotas
        .iter()
        .map(|&x| {
            if x >= LARGE_STRATUM_THRESHOLD {
                (x + 0.5).floor() as u64
            } else if rng.gen::<f64>() < x {
                1
            } else {
                0
            }
        })
        .collect();
    repair_total(&mut counts, &quotas, n);
    counts
}

/// Hamilton apportionment: floors, then one extra unit to each of the largest
/// fractional parts. Ties go to the earlier stratum.
pub fn largest_remainder_allocation(q: &[f64], n: u64) -> Vec<u64> {
    let quotas: Vec<f64> = q.iter().map(|&qi| qi * n as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let remaining = n.saturating_sub(assigned) as usize;
    for &i in order.iter().cycle().take(remaining) {
        counts[i] += 1;
    }
    if assigned > n {
        // Only reachable through floating error in q summing above one.
        repair_total(&mut counts, &quotas, n);
    }
    counts
}

/// Exact maximum GRI over every composition of `n` into `q.len()` parts.
pub fn exhaustive_max_gri(q: &[f64], n: u64) -> Result<f64> {
    let k = q.len();
    if k == 0 || k > ORACLE_MAX_STRATA || n == 0 || n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            k,
            n,
            max_k: ORACLE_MAX_STRATA,
            max_n: ORACLE_MAX_N,
        });
    }
    fn walk(q: &[f64], n: u64, left: u64, counts: &mut Vec<u64>, best: &mut f64) {
        if counts.len() + 1 == q.len() {
            counts.push(left);
            *best = best.max(allocation_gri(q, counts, n));
            counts.pop();
            return;
        }
        for c in 0..=left {
            counts.push(c);
            walk(q, n, left - c, counts, best);
            counts.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(q, n, n, &mut Vec::with_capacity(k), &mut best);
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxGriEstimate {
    pub dimension: String,
    pub mean: f64,
    /// Population standard deviation over iterations.
    pub std: f64,
    pub n: u64,
    pub iterations: usize,
    pub seed: u64,
}

/// Mean and standard deviation of the oracle GRI over `iterations` draws.
pub fn max_gri_vector(q: &[f64], n: u64, iterations: usize, seed: u64) -> Result<(f64, f64)> {
    if iterations == 0 {
        return Err(Error::InvalidParameters("iterations must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameters("sample size must be at least 1".into()));
    }
    if q.iter().all(|&qi| {
        let x = qi * n as f64;
        (x - x.round()).abs() < INTEGRAL_TOLERANCE
    }) {
        return Ok((1.0, 0.0));
    }
    let scores: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let counts = optimal_allocation(q, n, &mut rng);
            allocation_gri(q, &counts, n)
        })
        .collect();
    let count = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / count;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / count;
    Ok((mean, var.sqrt()))
}

/// Monte Carlo maximum GRI of a benchmark at sample size `n`.
pub fn max_gri(q: &Distribution, n: u64, iterations: usize, seed: u64) -> Result<MaxGriEstimate> {
    let (mean, std) = max_gri_vector(&q.proportions(), n, iterations, seed)?;
    Ok(MaxGriEstimate {
        dimension: q.spec().name().to_string(),
        mean,
        std,
        n,
        iterations,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRatio {
    pub actual: f64,
    pub max: f64,
    pub ratio: f64,
    /// Ratio above `1 + 3·std/max`, i.e. beyond Monte Carlo noise.
    pub exceeds_noise: bool,
}

pub fn efficiency(actual: f64, max_estimate: &MaxGriEstimate) -> Result<EfficiencyRatio> {
    if max_estimate.mean <= 0.0 {
        return Err(Error::DivisionByZero);
    }
    let ratio = actual / max_estimate.mean;
    Ok(EfficiencyRatio {
        actual,
        max: max_estimate.mean,
        ratio,
        exceeds_noise: ratio > 1.0 + 3.0 * max_estimate.std / max_estimate.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn estimate(mean: f64, std: f64) -> MaxGriEstimate {
        MaxGriEstimate { dimension: "d".into(), mean, std, n: 1000, iterations: 1000, seed: 0 }
    }

    #[test]
    fn allocation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(optimal_allocation(&[0.7, 0.3], 10, &mut rng), vec![7, 3]);
        assert_eq!(optimal_allocation(&[0.25; 4], 8, &mut rng), vec![2, 2, 2, 2]);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = optimal_allocation(&[0.5, 0.5], 1, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 1);
            assert_eq!(allocation_gri(&[0.5, 0.5], &c, 1), 0.5);
        }
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(largest_remainder_allocation(&[0.5, 0.5], 3), vec![2, 1]);
        assert!((allocation_gri(&[0.5, 0.5], &[2, 1], 3) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(largest_remainder_allocation(&[0.7, 0.3], 10), vec![7, 3]);
        let c = largest_remainder_allocation(&[0.6, 0.25, 0.15], 10);
        assert_eq!(c.iter().sum::<u64>(), 10);
        assert!((allocation_gri(&[0.6, 0.25, 0.15], &c, 10) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_examples() {
        assert_eq!(exhaustive_max_gri(&[0.5, 0.5], 1).unwrap(), 0.5);
        assert_eq!(exhaustive_max_gri(&[0.7, 0.3], 10).unwrap(), 1.0);
        let third = 1.0 / 3.0;
        assert!((exhaustive_max_gri(&[third; 3], 4).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!(matches!(exhaustive_max_gri(&[0.1; 10], 5), Err(Error::OracleTooLarge { .. })));
        assert!(matches!(exhaustive_max_gri(&[0.5, 0.5], 13), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn max_gri_trivial_cases() {
        assert_eq!(max_gri_vector(&[1.0], 37, 50, 3).unwrap(), (1.0, 0.0));
        assert_eq!(max_gri_vector(&[0.2; 5], 100, 50, 3).unwrap(), (1.0, 0.0));
        assert!(max_gri_vector(&[1.0], 10, 0, 3).is_err());
    }

    #[test]
    fn max_gri_is_seed_deterministic() {
        let q: Vec<f64> = (1..=50).map(|i| i as f64 / 1275.0).collect();
        let a = max_gri_vector(&q, 40, 200, 7).unwrap();
        let b = max_gri_vector(&q, 40, 200, 7).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        let c = max_gri_vector(&q, 40, 200, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn efficiency_examples() {
        let e = efficiency(0.347, &estimate(0.792, 0.005)).unwrap();
        assert!((e.ratio - 0.438).abs() < 1e-3);
        assert!(!e.exceeds_noise);
        assert_eq!(efficiency(0.792, &estimate(0.792, 0.0)).unwrap().ratio, 1.0);
        assert!(matches!(efficiency(0.5, &estimate(0.0, 0.0)), Err(Error::DivisionByZero)));
        assert!(efficiency(0.9, &estimate(0.8, 0.001)).unwrap().exceeds_noise);
    }

    fn arb_q() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 1..60).prop_filter_map("zero", |w| {
            let s: f64 = w.iter().sum();
            (s > 0.0).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn allocators_sum_to_n(q in arb_q(), n in 1u64..500, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop_assert_eq!(optimal_allocation(&q, n, &mut rng).iter().sum::<u64>(), n);
            prop_assert_eq!(largest_remainder_allocation(&q, n).iter().sum::<u64>(), n);
        }

        #[test]
        fn largest_remainder_dominates_random(q in arb_q(), n in 1u64..200, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let random = optimal_allocation(&q, n, &mut rng);
            let lr = largest_remainder_allocation(&q, n);
            prop_assert!(allocation_gri(&q, &lr, n) >= allocation_gri(&q, &random, n) - 1e-12);
        }
    }
}
