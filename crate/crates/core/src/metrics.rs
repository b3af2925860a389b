//! Representativeness metrics over an [`AlignedPair`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{normalize, AlignedPair, Distribution};
use crate::error::{Error, Result};

/// Slack applied when checking inequalities between floating-point metrics.
const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Tvd,
    Gri,
    Diversity,
    Sri,
    Hellinger,
}

/// A named score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: Metric,
    pub value: f64,
}

impl MetricScore {
    fn new(metric: Metric, value: f64) -> Self {
        Self { metric, value }
    }
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    let l1: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * l1).clamp(0.0, 1.0)
}

/// Total variation distance, `½ Σ |pᵢ − qᵢ|`.
pub fn tvd(pair: &AlignedPair) -> MetricScore {
    MetricScore::new(Metric::Tvd, half_l1(pair.p(), pair.q()))
}

/// `1 − TVD`.
pub fn gri(pair: &AlignedPair) -> MetricScore {
    MetricScore::new(Metric::Gri, 1.0 - half_l1(pair.p(), pair.q()))
}

/// Share of relevant benchmark strata (`qᵢ > 1/N`) that hold at least one
/// sample unit. Both inequalities are strict.
pub fn diversity_score(pair: &AlignedPair) -> Result<MetricScore> {
    if pair.n() == 0 {
        return Err(Error::InvalidPair("sample size is zero".into()));
    }
    let threshold = 1.0 / pair.n() as f64;
    let (relevant, represented) = pair
        .p()
        .iter()
        .zip(pair.q())
        .filter(|(_, &q)| q > threshold)
        .fold((0usize, 0usize), |(rel, rep), (&p, _)| (rel + 1, rep + usize::from(p > 0.0)));
    if relevant == 0 {
        return Err(Error::UndefinedDiversity);
    }
    Ok(MetricScore::new(Metric::Diversity, represented as f64 / relevant as f64))
}

fn sqrt_target(q: &[f64]) -> Vec<f64> {
    let roots: Vec<f64> = q.iter().map(|x| x.sqrt()).collect();
    let total: f64 = roots.iter().sum();
    roots.into_iter().map(|r| r / total).collect()
}

/// Square-root-proportional target, `√qᵢ / Σⱼ √qⱼ`.
pub fn sri_target(q: &Distribution) -> Result<Distribution> {
    let raw = q.mass().iter().map(|(k, &m)| (k.clone(), m.sqrt())).collect();
    Ok(normalize(&raw, q.spec().clone())?.with_provenance(q.provenance().clone()))
}

/// GRI against the square-root-proportional target.
pub fn sri(pair: &AlignedPair) -> MetricScore {
    let target = sqrt_target(pair.q());
    MetricScore::new(Metric::Sri, 1.0 - half_l1(pair.p(), &target))
}

/// Variance inflation from post-stratification weighting, restricted to the
/// strata both sides cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignEffectReport {
    pub deff: f64,
    /// Sample mass inside covered strata.
    pub coverage_fraction: f64,
    pub n_eff: f64,
    /// `n_eff / N`.
    pub precision_retained: f64,
    pub covered_strata: usize,
    /// Squared coefficient of variation of the weights `q̃ᵢ / p̃ᵢ` under p̃.
    pub weight_cv2: f64,
}

/// Coverage-adjusted design effect and effective sample size.
///
/// Covered strata are those with `pᵢ > 0` and `qᵢ > 0`. Both sides are
/// renormalized over them before computing `Σ q̃ᵢ² / p̃ᵢ`, and the effective
/// size is `N·f / deff` with `f` the covered sample mass.
pub fn design_effect(pair: &AlignedPair) -> Result<DesignEffectReport> {
    let covered: Vec<(f64, f64)> = pair
        .p()
        .iter()
        .zip(pair.q())
        .filter(|(&p, &q)| p > 0.0 && q > 0.0)
        .map(|(&p, &q)| (p, q))
        .collect();
    if covered.is_empty() {
        return Err(Error::NoOverlap);
    }
    // Exactly 1 when no sample mass falls outside the benchmark support.
    let f: f64 = if pair.iter().any(|(_, p, q)| p > 0.0 && q == 0.0) {
        covered.iter().map(|(p, _)| p).sum::<f64>().min(1.0)
    } else {
        1.0
    };
    let q_mass: f64 = covered.iter().map(|(_, q)| q).sum();
    let deff: f64 = covered
        .iter()
        .map(|&(p, q)| {
            let qt = q / q_mass;
            qt * qt / (p / f)
        })
        .sum();

    // Weights under the covered sample distribution; their p̃-weighted mean is 1.
    let mean_w: f64 = covered.iter().map(|&(p, q)| (p / f) * ((q / q_mass) / (p / f))).sum();
    let var_w: f64 = covered
        .iter()
        .map(|&(p, q)| {
            let w = (q / q_mass) / (p / f);
            (p / f) * (w - mean_w).powi(2)
        })
        .sum();
    let weight_cv2 = var_w / (mean_w * mean_w);

    let n = pair.n() as f64;
    let n_eff = n * f / deff;
    let precision_retained = if n > 0.0 { n_eff / n } else { 0.0 };
    Ok(DesignEffectReport {
        deff,
        coverage_fraction: f,
        n_eff,
        precision_retained,
        covered_strata: covered.len(),
        weight_cv2,
    })
}

/// Qualitative reading of a GRI-type score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InterpretationBand {
    Poor,
    Moderate,
    Good,
    Excellent,
}

impl InterpretationBand {
    pub const ALL: [InterpretationBand; 4] = [
        InterpretationBand::Excellent,
        InterpretationBand::Good,
        InterpretationBand::Moderate,
        InterpretationBand::Poor,
    ];

    /// `[lower, upper)`; the Excellent band also includes 1.0.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            InterpretationBand::Excellent => (0.8, 1.0),
            InterpretationBand::Good => (0.6, 0.8),
            InterpretationBand::Moderate => (0.4, 0.6),
            InterpretationBand::Poor => (0.0, 0.4),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InterpretationBand::Excellent => "Excellent",
            InterpretationBand::Good => "Good",
            InterpretationBand::Moderate => "Moderate",
            InterpretationBand::Poor => "Poor",
        }
    }

    pub fn for_value(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ScoreOutOfRange(value));
        }
        Ok(if value >= 0.8 {
            InterpretationBand::Excellent
        } else if value >= 0.6 {
            InterpretationBand::Good
        } else if value >= 0.4 {
            InterpretationBand::Moderate
        } else {
            InterpretationBand::Poor
        })
    }
}

impl fmt::Display for InterpretationBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn interpret(score: &MetricScore) -> Result<InterpretationBand> {
    InterpretationBand::for_value(score.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDiagnostics {
    pub tvd: f64,
    pub hellinger: f64,
    /// `D_KL(Q ‖ P)`; `None` when some benchmark stratum has no sample mass.
    pub kl: Option<f64>,
    /// `H² ≤ TVD ≤ H·√2`, and `TVD ≤ √(KL/2)` when KL is defined.
    pub sandwich_ok: bool,
}

pub fn divergence_diagnostics(pair: &AlignedPair) -> DivergenceDiagnostics {
    let tvd = half_l1(pair.p(), pair.q());
    let sq: f64 = pair
        .p()
        .iter()
        .zip(pair.q())
        .map(|(p, q)| (p.sqrt() - q.sqrt()).powi(2))
        .sum();
    let hellinger = (sq / 2.0).sqrt().min(1.0);

    let kl = if pair.iter().any(|(_, p, q)| q > 0.0 && p == 0.0) {
        None
    } else {
        Some(
            pair.iter()
                .filter(|(_, _, q)| *q > 0.0)
                .map(|(_, p, q)| q * (q / p).ln())
                .sum::<f64>()
                .max(0.0),
        )
    };

    let mut sandwich_ok = hellinger * hellinger <= tvd + INEQUALITY_SLACK
        && tvd <= hellinger * std::f64::consts::SQRT_2 + INEQUALITY_SLACK;
    if let Some(kl) = kl {
        sandwich_ok &= tvd <= (kl / 2.0).sqrt() + INEQUALITY_SLACK;
    }
    DivergenceDiagnostics { tvd, hellinger, kl, sandwich_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DimensionSpec, StratumKey};
    use proptest::prelude::*;

    fn pair(p: &[f64], q: &[f64], n: u64) -> AlignedPair {
        AlignedPair::from_vectors(p.to_vec(), q.to_vec(), n).unwrap()
    }

    #[test]
    fn tvd_and_gri_examples() {
        let same = pair(&[0.3, 0.7], &[0.3, 0.7], 10);
        assert_eq!(tvd(&same).value, 0.0);
        assert_eq!(gri(&same).value, 1.0);
        let disjoint = pair(&[1.0, 0.0], &[0.0, 1.0], 10);
        assert_eq!(tvd(&disjoint).value, 1.0);
        assert_eq!(gri(&disjoint).value, 0.0);
        let mid = pair(&[0.5, 0.5], &[0.8, 0.2], 10);
        assert!((tvd(&mid).value - 0.3).abs() < 1e-15);
        assert!((gri(&mid).value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn diversity_examples() {
        // N = 10: c sits exactly on the 1/N threshold and is not relevant.
        let p = pair(&[1.0, 0.0, 0.0], &[0.6, 0.3, 0.1], 10);
        assert_eq!(diversity_score(&p).unwrap().value, 0.5);
        let all = pair(&[0.5, 0.3, 0.2], &[0.6, 0.3, 0.1], 10);
        assert_eq!(diversity_score(&all).unwrap().value, 1.0);
        let none = pair(&[0.0, 0.0, 1.0], &[0.5, 0.5, 0.0], 10);
        assert_eq!(diversity_score(&none).unwrap().value, 0.0);
    }

    #[test]
    fn diversity_undefined_without_relevant_strata() {
        let q: Vec<f64> = vec![0.01; 100];
        let mut p = vec![0.0; 100];
        p[0] = 1.0;
        let tiny = pair(&p, &q, 10);
        assert!(matches!(diversity_score(&tiny), Err(Error::UndefinedDiversity)));
    }

    #[test]
    fn sri_target_examples() {
        let spec = DimensionSpec::new("x", ["x"]).unwrap();
        let raw = [(StratumKey::single("a"), 0.64), (StratumKey::single("b"), 0.36)]
            .into_iter()
            .collect();
        let q = normalize(&raw, spec.clone()).unwrap();
        let t = sri_target(&q).unwrap();
        assert!((t.get(&StratumKey::single("a")) - 4.0 / 7.0).abs() < 1e-15);
        assert!((t.get(&StratumKey::single("b")) - 3.0 / 7.0).abs() < 1e-15);

        let uniform = (0..5).map(|i| (StratumKey::single(format!("k{i}")), 1.0)).collect();
        let u = normalize(&uniform, spec.clone()).unwrap();
        let tu = sri_target(&u).unwrap();
        for m in tu.mass().values() {
            assert!((m - 0.2).abs() < 1e-15);
        }
        let single = [(StratumKey::single("a"), 1.0)].into_iter().collect();
        let s = normalize(&single, spec).unwrap();
        assert_eq!(sri_target(&s).unwrap().get(&StratumKey::single("a")), 1.0);

        // unaffected by the scale of the raw benchmark weights
        let scaled = [(StratumKey::single("a"), 640.0), (StratumKey::single("b"), 360.0)]
            .into_iter()
            .collect();
        let t2 = sri_target(&normalize(&scaled, q.spec().clone()).unwrap()).unwrap();
        for (k, m) in t.mass() {
            assert!((t2.get(k) - m).abs() < 1e-15);
        }
    }

    #[test]
    fn sri_examples() {
        let p = pair(&[1.0, 0.0], &[0.64, 0.36], 10);
        assert!((sri(&p).value - 4.0 / 7.0).abs() < 1e-15);
        let matched = pair(&[4.0 / 7.0, 3.0 / 7.0], &[0.64, 0.36], 10);
        assert!((sri(&matched).value - 1.0).abs() < 1e-15);
        let uniform = pair(&[0.25; 4], &[0.25; 4], 10);
        assert_eq!(sri(&uniform).value, 1.0);
    }

    #[test]
    fn design_effect_examples() {
        let same = pair(&[0.2, 0.8], &[0.2, 0.8], 50);
        let r = design_effect(&same).unwrap();
        assert!((r.deff - 1.0).abs() < 1e-15);
        assert!((r.n_eff - 50.0).abs() < 1e-12);

        // Σq²/p = 0.64/0.5 + 0.04/0.5 = 1.36; weights (1.6, 0.4) give CV² = 0.36.
        let r = design_effect(&pair(&[0.5, 0.5], &[0.8, 0.2], 100)).unwrap();
        assert!((r.deff - 1.36).abs() < 1e-12);
        assert!((r.weight_cv2 - 0.36).abs() < 1e-12);
        assert!((r.n_eff - 100.0 / 1.36).abs() < 1e-9);
        assert_eq!(r.coverage_fraction, 1.0);

        // keys a, b, c, x: covered {a, b}, f = 0.9, deff = 261/256.
        let r = design_effect(&pair(&[0.5, 0.4, 0.0, 0.1], &[0.5, 0.3, 0.2, 0.0], 100)).unwrap();
        assert!((r.coverage_fraction - 0.9).abs() < 1e-15);
        assert!((r.deff - 1.01953125).abs() < 1e-12);
        assert!((r.n_eff - 90.0 / (261.0 / 256.0)).abs() < 1e-9);
        assert!((r.precision_retained - r.n_eff / 100.0).abs() < 1e-15);
        assert_eq!(r.covered_strata, 2);
    }

    #[test]
    fn design_effect_no_overlap() {
        assert!(matches!(design_effect(&pair(&[1.0, 0.0], &[0.0, 1.0], 5)), Err(Error::NoOverlap)));
    }

    #[test]
    fn bands() {
        use InterpretationBand::*;
        assert_eq!(InterpretationBand::for_value(0.85).unwrap(), Excellent);
        assert_eq!(InterpretationBand::for_value(0.342).unwrap(), Poor);
        assert_eq!(InterpretationBand::for_value(0.6).unwrap(), Good);
        assert_eq!(InterpretationBand::for_value(0.8).unwrap(), Excellent);
        assert_eq!(InterpretationBand::for_value(1.0).unwrap(), Excellent);
        assert_eq!(InterpretationBand::for_value(0.4).unwrap(), Moderate);
        assert_eq!(InterpretationBand::for_value(0.0).unwrap(), Poor);
        assert!(InterpretationBand::for_value(1.2).is_err());
        assert!(InterpretationBand::for_value(f64::NAN).is_err());
    }

    #[test]
    fn divergence_examples() {
        let same = divergence_diagnostics(&pair(&[0.4, 0.6], &[0.4, 0.6], 5));
        assert_eq!(same.hellinger, 0.0);
        assert_eq!(same.kl, Some(0.0));
        assert!(same.sandwich_ok);

        let disjoint = divergence_diagnostics(&pair(&[1.0, 0.0], &[0.0, 1.0], 5));
        assert!((disjoint.hellinger - 1.0).abs() < 1e-15);
        assert_eq!(disjoint.tvd, 1.0);
        assert_eq!(disjoint.kl, None);
        assert!(disjoint.sandwich_ok);

        // H = √(((√.5−√.8)² + (√.5−√.2)²) / 2)
        let d = divergence_diagnostics(&pair(&[0.5, 0.5], &[0.8, 0.2], 5));
        assert!((d.hellinger - 0.226_531_900_511_795_9).abs() < 1e-12);
        assert!((d.kl.unwrap() - 0.192_744_757_021_757_5).abs() < 1e-12);
        assert!(d.sandwich_ok);
    }

    fn arb_pair() -> impl Strategy<Value = AlignedPair> {
        (1usize..40).prop_flat_map(|k| {
            (proptest::collection::vec(0.0f64..1.0, k), proptest::collection::vec(0.0f64..1.0, k))
                .prop_filter_map("zero mass", |(a, b)| {
                    let sa: f64 = a.iter().sum();
                    let sb: f64 = b.iter().sum();
                    if sa <= 0.0 || sb <= 0.0 {
                        return None;
                    }
                    let p = a.iter().map(|x| x / sa).collect();
                    let q = b.iter().map(|x| x / sb).collect();
                    AlignedPair::from_vectors(p, q, 1000).ok()
                })
        })
    }

    proptest! {
        #[test]
        fn tvd_is_symmetric(pair in arb_pair()) {
            let swapped = AlignedPair::from_vectors(pair.q().to_vec(), pair.p().to_vec(), pair.n()).unwrap();
            prop_assert!((tvd(&pair).value - tvd(&swapped).value).abs() < 1e-15);
        }

        #[test]
        fn deff_at_least_one(pair in arb_pair()) {
            let r = design_effect(&pair);
            prop_assume!(r.is_ok());
            let r = r.unwrap();
            prop_assert!(r.deff >= 1.0 - 1e-12);
            prop_assert!((r.deff - (1.0 + r.weight_cv2)).abs() < 1e-9 * r.deff.max(1.0));
            prop_assert!((r.n_eff - pair.n() as f64 * r.coverage_fraction / r.deff).abs() < 1e-9);
        }

        #[test]
        fn scores_bounded(pair in arb_pair()) {
            for s in [gri(&pair), sri(&pair), tvd(&pair)] {
                prop_assert!((0.0..=1.0).contains(&s.value));
            }
            prop_assert!(divergence_diagnostics(&pair).sandwich_ok);
        }
    }
}
