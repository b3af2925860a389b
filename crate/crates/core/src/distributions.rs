//! Categorical distributions over cross-classified strata.
//!
//! Every metric in the crate consumes an [`AlignedPair`]: the sample and
//! benchmark distributions outer-joined over the union of their supports,
//! with missing strata filled with zero. Keys are ordered lexicographically
//! by axis label, and that order is carried into every vector and report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a normalized distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A named cross-classification, e.g. `country_gender_age` over
/// `[country, gender, age_group]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    name: String,
    axes: Vec<String>,
    /// Declared value domains. Axes without an entry accept any label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    domains: BTreeMap<String, BTreeSet<String>>,
}

impl DimensionSpec {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        axes: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let axes: Vec<String> = axes.into_iter().map(Into::into).collect();
        if name.trim().is_empty() {
            return Err(Error::InvalidSpec("dimension name is empty".into()));
        }
        if axes.is_empty() {
            return Err(Error::InvalidSpec(format!("{name}: no axes")));
        }
        let mut seen = BTreeSet::new();
        for axis in &axes {
            if !seen.insert(axis.as_str()) {
                return Err(Error::InvalidSpec(format!("{name}: axis {axis} repeated")));
            }
        }
        Ok(Self { name, axes, domains: BTreeMap::new() })
    }

    /// Declares the value domain of one axis.
    pub fn with_domain<S: Into<String>>(
        mut self,
        axis: &str,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        self.axis_index(axis)?;
        self.domains
            .insert(axis.to_string(), labels.into_iter().map(Into::into).collect());
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn domain(&self, axis: &str) -> Option<&BTreeSet<String>> {
        self.domains.get(axis)
    }

    pub fn axis_index(&self, axis: &str) -> Result<usize> {
        self.axes.iter().position(|a| a == axis).ok_or_else(|| Error::UnknownAxis {
            dimension: self.name.clone(),
            axis: axis.to_string(),
        })
    }

    /// Two specs describe the same cross-classification when name and axes agree.
    /// Domains may differ (a restricted benchmark keeps a narrower domain).
    pub fn same_dimension(&self, other: &DimensionSpec) -> bool {
        self.name == other.name && self.axes == other.axes
    }

    fn check_key(&self, key: &StratumKey) -> Result<()> {
        if key.arity() != self.axes.len() {
            return Err(Error::InvalidKey {
                key: key.to_string(),
                reason: format!("expected {} labels for {}", self.axes.len(), self.name),
            });
        }
        for (axis, label) in self.axes.iter().zip(key.labels()) {
            if let Some(domain) = self.domains.get(axis) {
                if !domain.contains(label) {
                    return Err(Error::InvalidKey {
                        key: key.to_string(),
                        reason: format!("{label:?} is not in the {axis} domain"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One cell of a cross-classification: one label per axis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StratumKey(Vec<String>);

impl StratumKey {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self(labels.into_iter().map(Into::into).collect())
    }

    pub fn single(label: impl Into<String>) -> Self {
        Self(vec![label.into()])
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" / "))
    }
}

/// Where a distribution came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vintage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Normalized proportions over the strata of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    spec: DimensionSpec,
    mass: BTreeMap<StratumKey, f64>,
    source_size: Option<u64>,
    #[serde(default)]
    provenance: Provenance,
}

impl Distribution {
    fn build(
        spec: DimensionSpec,
        mass: BTreeMap<StratumKey, f64>,
        source_size: Option<u64>,
        provenance: Provenance,
    ) -> Result<Self> {
        for key in mass.keys() {
            spec.check_key(key)?;
        }
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::DegenerateBenchmark(format!(
                "{}: mass sums to {total}",
                spec.name()
            )));
        }
        Ok(Self { spec, mass, source_size, provenance })
    }

    pub fn spec(&self) -> &DimensionSpec {
        &self.spec
    }

    pub fn mass(&self) -> &BTreeMap<StratumKey, f64> {
        &self.mass
    }

    pub fn get(&self, key: &StratumKey) -> f64 {
        self.mass.get(key).copied().unwrap_or(0.0)
    }

    /// Number of strata with positive mass.
    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    pub fn source_size(&self) -> Option<u64> {
        self.source_size
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_source_size(mut self, n: u64) -> Self {
        self.source_size = Some(n);
        self
    }

    pub(crate) fn push_note(&mut self, note: String) {
        self.provenance.notes.push(note);
    }

    /// Proportions in key order.
    pub fn proportions(&self) -> Vec<f64> {
        self.mass.values().copied().collect()
    }
}

/// Builds a sample distribution from stratum counts.
pub fn from_counts(counts: &BTreeMap<StratumKey, i64>, spec: DimensionSpec) -> Result<Distribution> {
    if counts.is_empty() {
        return Err(Error::EmptySample(format!("{}: no strata", spec.name())));
    }
    let mut total: u64 = 0;
    for (key, &count) in counts {
        if count < 0 {
            return Err(Error::InvalidCount { key: key.to_string(), count });
        }
        total += count as u64;
    }
    if total == 0 {
        return Err(Error::EmptySample(format!("{}: all counts are zero", spec.name())));
    }
    let n = total as f64;
    let mass = counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k.clone(), c as f64 / n))
        .collect();
    Distribution::build(spec, mass, Some(total), Provenance::default())
}

/// Normalizes raw non-negative weights into proportions.
///
/// Zero-weight strata are dropped and counted in a provenance note.
pub fn normalize(raw: &BTreeMap<StratumKey, f64>, spec: DimensionSpec) -> Result<Distribution> {
    let mut total = 0.0;
    for (key, &weight) in raw {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidWeight { key: key.to_string(), weight });
        }
        total += weight;
    }
    if total <= 0.0 {
        return Err(Error::DegenerateBenchmark(format!(
            "{}: no stratum has positive weight",
            spec.name()
        )));
    }
    let mass: BTreeMap<StratumKey, f64> = raw
        .iter()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| (k.clone(), w / total))
        .collect();
    let dropped = raw.len() - mass.len();
    let mut provenance = Provenance::default();
    if dropped > 0 {
        provenance
            .notes
            .push(format!("dropped {dropped} zero-weight strata; {} retained", mass.len()));
    }
    Distribution::build(spec, mass, None, provenance)
}

/// Sample and benchmark proportions over the union of both supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    spec: DimensionSpec,
    keys: Vec<StratumKey>,
    p: Vec<f64>,
    q: Vec<f64>,
    n: u64,
}

impl AlignedPair {
    /// Validates and assembles a pair from explicit vectors.
    pub fn new(
        spec: DimensionSpec,
        keys: Vec<StratumKey>,
        p: Vec<f64>,
        q: Vec<f64>,
        n: u64,
    ) -> Result<Self> {
        if keys.len() != p.len() || keys.len() != q.len() {
            return Err(Error::InvalidPair(format!(
                "length mismatch: {} keys, {} p, {} q",
                keys.len(),
                p.len(),
                q.len()
            )));
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPair("keys must be strictly increasing".into()));
        }
        for (name, v) in [("p", &p), ("q", &q)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidPair(format!("{name} has a negative or non-finite entry")));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidPair(format!("{name} sums to {total}")));
            }
        }
        for key in &keys {
            spec.check_key(key)?;
        }
        Ok(Self { spec, keys, p, q, n })
    }

    /// Builds a pair over synthetic one-axis keys `s00000`, `s00001`, ... whose
    /// lexicographic order equals index order.
    pub fn from_vectors(p: Vec<f64>, q: Vec<f64>, n: u64) -> Result<Self> {
        let spec = DimensionSpec::new("stratum", ["stratum"])?;
        let keys = (0..p.len()).map(|i| StratumKey::single(format!("s{i:05}"))).collect();
        Self::new(spec, keys, p, q, n)
    }

    pub fn spec(&self) -> &DimensionSpec {
        &self.spec
    }

    pub fn keys(&self) -> &[StratumKey] {
        &self.keys
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Sample size N.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Iterates `(key, p, q)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&StratumKey, f64, f64)> + '_ {
        self.keys.iter().zip(self.p.iter().zip(&self.q)).map(|(k, (&p, &q))| (k, p, q))
    }
}

/// Outer-joins a sample and a benchmark; strata absent on one side get 0 there.
pub fn align(sample: &Distribution, benchmark: &Distribution) -> Result<AlignedPair> {
    if !sample.spec.same_dimension(&benchmark.spec) {
        return Err(Error::DimensionMismatch {
            sample: format!("{}{:?}", sample.spec.name, sample.spec.axes),
            benchmark: format!("{}{:?}", benchmark.spec.name, benchmark.spec.axes),
        });
    }
    let n = sample
        .source_size
        .ok_or_else(|| Error::MissingSampleSize(sample.spec.name.clone()))?;
    let keys: Vec<StratumKey> = sample
        .mass
        .keys()
        .chain(benchmark.mass.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let p = keys.iter().map(|k| sample.get(k)).collect();
    let q = keys.iter().map(|k| benchmark.get(k)).collect();
    let spec = DimensionSpec { domains: BTreeMap::new(), ..benchmark.spec.clone() };
    Ok(AlignedPair { spec, keys, p, q, n })
}

/// Sums proportions over every axis not in `keep_axes`.
///
/// The result keeps the original axis order and is named after its axes.
pub fn marginalize(dist: &Distribution, keep_axes: &[&str]) -> Result<Distribution> {
    if keep_axes.is_empty() {
        return Err(Error::EmptyAxisSelection);
    }
    let mut keep = BTreeSet::new();
    for axis in keep_axes {
        keep.insert(dist.spec.axis_index(axis)?);
    }
    if keep.len() == dist.spec.axes.len() {
        return Ok(dist.clone());
    }
    let indices: Vec<usize> = keep.into_iter().collect();
    let axes: Vec<String> = indices.iter().map(|&i| dist.spec.axes[i].clone()).collect();
    let mut spec = DimensionSpec::new(axes.join("_"), axes.clone())?;
    for axis in &axes {
        if let Some(domain) = dist.spec.domains.get(axis) {
            spec.domains.insert(axis.clone(), domain.clone());
        }
    }
    let mut mass: BTreeMap<StratumKey, f64> = BTreeMap::new();
    for (key, &m) in &dist.mass {
        let projected = StratumKey(indices.iter().map(|&i| key.0[i].clone()).collect());
        *mass.entry(projected).or_insert(0.0) += m;
    }
    Distribution::build(spec, mass, dist.source_size, dist.provenance.clone())
}

/// Strata that survived a restriction without renormalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedMass {
    pub spec: DimensionSpec,
    pub mass: BTreeMap<StratumKey, f64>,
    pub retained_fraction: f64,
}

/// Outcome of [`restrict`].
#[derive(Debug, Clone, PartialEq)]
pub enum Restricted {
    Renormalized { distribution: Distribution, retained_fraction: f64 },
    Partial(RestrictedMass),
}

impl Restricted {
    pub fn retained_fraction(&self) -> f64 {
        match self {
            Restricted::Renormalized { retained_fraction, .. } => *retained_fraction,
            Restricted::Partial(r) => r.retained_fraction,
        }
    }

    /// The renormalized distribution, if one was requested.
    pub fn into_distribution(self) -> Option<Distribution> {
        match self {
            Restricted::Renormalized { distribution, .. } => Some(distribution),
            Restricted::Partial(_) => None,
        }
    }
}

/// Keeps only strata whose `axis` label is in `allowed`.
pub fn restrict(
    dist: &Distribution,
    axis: &str,
    allowed: &BTreeSet<String>,
    renormalize: bool,
) -> Result<Restricted> {
    let index = dist.spec.axis_index(axis)?;
    if allowed.is_empty() {
        return Err(Error::DegenerateBenchmark(format!("{}: empty {axis} filter", dist.spec.name)));
    }
    let kept: BTreeMap<StratumKey, f64> = dist
        .mass
        .iter()
        .filter(|(k, _)| allowed.contains(&k.0[index]))
        .map(|(k, &m)| (k.clone(), m))
        .collect();
    let retained: f64 = kept.values().sum();
    if retained <= 0.0 {
        return Err(Error::DegenerateBenchmark(format!(
            "{}: no mass left after restricting {axis}",
            dist.spec.name
        )));
    }
    if kept.len() == dist.mass.len() {
        return Ok(if renormalize {
            Restricted::Renormalized { distribution: dist.clone(), retained_fraction: 1.0 }
        } else {
            Restricted::Partial(RestrictedMass {
                spec: dist.spec.clone(),
                mass: kept,
                retained_fraction: 1.0,
            })
        });
    }
    let mut spec = dist.spec.clone();
    if let Some(domain) = spec.domains.get_mut(axis) {
        domain.retain(|label| allowed.contains(label));
    }
    if !renormalize {
        return Ok(Restricted::Partial(RestrictedMass { spec, mass: kept, retained_fraction: retained }));
    }
    let mass = kept.into_iter().map(|(k, m)| (k, m / retained)).collect();
    let mut distribution = Distribution::build(spec, mass, dist.source_size, dist.provenance.clone())?;
    distribution.push_note(format!(
        "restricted {axis} to {} labels; retained mass fraction {retained:.6}",
        allowed.len()
    ));
    Ok(Restricted::Renormalized { distribution, retained_fraction: retained })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec1() -> DimensionSpec {
        DimensionSpec::new("letter", ["letter"]).unwrap()
    }

    fn key(s: &str) -> StratumKey {
        StratumKey::single(s)
    }

    fn dist1(pairs: &[(&str, f64)]) -> Distribution {
        let raw = pairs.iter().map(|(k, w)| (key(k), *w)).collect();
        normalize(&raw, spec1()).unwrap()
    }

    #[test]
    fn spec_rejects_empty_and_repeated_axes() {
        assert!(DimensionSpec::new("x", Vec::<String>::new()).is_err());
        assert!(DimensionSpec::new("x", ["a", "a"]).is_err());
        assert!(DimensionSpec::new("", ["a"]).is_err());
    }

    #[test]
    fn counts_normalize() {
        let counts = [(key("a"), 3), (key("b"), 1)].into_iter().collect();
        let d = from_counts(&counts, spec1()).unwrap();
        assert_eq!(d.get(&key("a")), 0.75);
        assert_eq!(d.get(&key("b")), 0.25);
        assert_eq!(d.source_size(), Some(4));

        let single = [(key("a"), 5)].into_iter().collect();
        let d = from_counts(&single, spec1()).unwrap();
        assert_eq!(d.get(&key("a")), 1.0);
        assert_eq!(d.source_size(), Some(5));
    }

    #[test]
    fn counts_errors() {
        let empty = BTreeMap::new();
        assert!(matches!(from_counts(&empty, spec1()), Err(Error::EmptySample(_))));
        let negative = [(key("a"), -1)].into_iter().collect();
        assert!(matches!(from_counts(&negative, spec1()), Err(Error::InvalidCount { .. })));
        let zeros = [(key("a"), 0)].into_iter().collect();
        assert!(matches!(from_counts(&zeros, spec1()), Err(Error::EmptySample(_))));
    }

    #[test]
    fn key_arity_and_domain_checked() {
        let counts = [(StratumKey::new(["a", "b"]), 1)].into_iter().collect();
        assert!(matches!(from_counts(&counts, spec1()), Err(Error::InvalidKey { .. })));
        let spec = spec1().with_domain("letter", ["a", "b"]).unwrap();
        let counts = [(key("z"), 1)].into_iter().collect();
        assert!(matches!(from_counts(&counts, spec), Err(Error::InvalidKey { .. })));
    }

    #[test]
    fn normalize_examples() {
        let d = dist1(&[("a", 2.0), ("b", 2.0)]);
        assert_eq!(d.proportions(), vec![0.5, 0.5]);
        let d = dist1(&[("a", 70.0), ("b", 30.0)]);
        assert!((d.get(&key("a")) - 0.7).abs() < 1e-15);
        assert!((d.get(&key("b")) - 0.3).abs() < 1e-15);

        let zeros = [(key("a"), 0.0), (key("b"), 0.0)].into_iter().collect();
        assert!(matches!(normalize(&zeros, spec1()), Err(Error::DegenerateBenchmark(_))));
        let nan = [(key("a"), f64::NAN)].into_iter().collect();
        assert!(matches!(normalize(&nan, spec1()), Err(Error::InvalidWeight { .. })));
        let neg = [(key("a"), -2.0)].into_iter().collect();
        assert!(matches!(normalize(&neg, spec1()), Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn normalize_drops_zero_strata_with_note() {
        let d = dist1(&[("a", 1.0), ("b", 0.0), ("c", 3.0)]);
        assert_eq!(d.support_len(), 2);
        assert!(d.provenance().notes[0].contains("dropped 1"));
    }

    #[test]
    fn align_fill_rules() {
        let p = dist1(&[("a", 1.0)]).with_source_size(10);
        let q = dist1(&[("a", 1.0), ("b", 1.0)]);
        let pair = align(&p, &q).unwrap();
        assert_eq!(pair.keys(), &[key("a"), key("b")]);
        assert_eq!(pair.p(), &[1.0, 0.0]);
        assert_eq!(pair.q(), &[0.5, 0.5]);
        assert_eq!(pair.n(), 10);

        let p = dist1(&[("a", 1.0), ("x", 1.0)]).with_source_size(2);
        let q = dist1(&[("a", 1.0)]);
        let pair = align(&p, &q).unwrap();
        assert_eq!(pair.keys(), &[key("a"), key("x")]);
        assert_eq!(pair.p(), &[0.5, 0.5]);
        assert_eq!(pair.q(), &[1.0, 0.0]);

        let same = dist1(&[("a", 1.0), ("b", 3.0)]);
        let pair = align(&same.clone().with_source_size(4), &same).unwrap();
        assert_eq!(pair.p(), pair.q());
    }

    #[test]
    fn align_errors() {
        let other = DimensionSpec::new("other", ["letter"]).unwrap();
        let raw = [(key("a"), 1.0)].into_iter().collect();
        let q = normalize(&raw, other).unwrap();
        let p = dist1(&[("a", 1.0)]).with_source_size(1);
        assert!(matches!(align(&p, &q), Err(Error::DimensionMismatch { .. })));
        let no_n = dist1(&[("a", 1.0)]);
        assert!(matches!(align(&no_n, &no_n), Err(Error::MissingSampleSize(_))));
    }

    fn two_by_two() -> Distribution {
        let spec = DimensionSpec::new("ab_xy", ["ab", "xy"]).unwrap();
        let raw = [
            (StratumKey::new(["a", "x"]), 0.4),
            (StratumKey::new(["a", "y"]), 0.1),
            (StratumKey::new(["b", "x"]), 0.2),
            (StratumKey::new(["b", "y"]), 0.3),
        ]
        .into_iter()
        .collect();
        normalize(&raw, spec).unwrap()
    }

    #[test]
    fn marginalize_examples() {
        let d = two_by_two();
        let m = marginalize(&d, &["ab"]).unwrap();
        assert_eq!(m.spec().axes(), &["ab".to_string()]);
        assert!((m.get(&key("a")) - 0.5).abs() < 1e-15);
        assert!((m.get(&key("b")) - 0.5).abs() < 1e-15);
        assert_eq!(marginalize(&d, &["xy", "ab"]).unwrap(), d);
        assert!(matches!(marginalize(&d, &[]), Err(Error::EmptyAxisSelection)));
        assert!(matches!(marginalize(&d, &["zz"]), Err(Error::UnknownAxis { .. })));
    }

    #[test]
    fn restrict_examples() {
        let spec = DimensionSpec::new("country", ["country"]).unwrap();
        let raw = [(key("KE"), 0.5), (key("NG"), 0.3), (key("FR"), 0.2)].into_iter().collect();
        let d = normalize(&raw, spec).unwrap();
        let allowed: BTreeSet<String> = ["KE", "NG"].iter().map(|s| s.to_string()).collect();
        let r = restrict(&d, "country", &allowed, true).unwrap();
        assert!((r.retained_fraction() - 0.8).abs() < 1e-15);
        let r = r.into_distribution().unwrap();
        assert!((r.get(&key("KE")) - 0.625).abs() < 1e-12);
        assert!((r.get(&key("NG")) - 0.375).abs() < 1e-12);

        let all: BTreeSet<String> = ["KE", "NG", "FR"].iter().map(|s| s.to_string()).collect();
        let same = restrict(&d, "country", &all, true).unwrap().into_distribution().unwrap();
        assert_eq!(same, d);

        let partial = restrict(&d, "country", &allowed, false).unwrap();
        match partial {
            Restricted::Partial(m) => {
                assert_eq!(m.mass.len(), 2);
                assert!((m.retained_fraction - 0.8).abs() < 1e-15);
            }
            other => panic!("expected partial, got {other:?}"),
        }

        let absent: BTreeSet<String> = ["XX".to_string()].into_iter().collect();
        assert!(matches!(
            restrict(&d, "country", &absent, true),
            Err(Error::DegenerateBenchmark(_))
        ));
    }

    fn arb_joint() -> impl Strategy<Value = Distribution> {
        proptest::collection::vec(0u32..20, 27).prop_filter_map("all zero", |weights| {
            let spec = DimensionSpec::new("abc", ["a", "b", "c"]).unwrap();
            let raw = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let key = StratumKey::new([
                        format!("a{}", i / 9),
                        format!("b{}", (i / 3) % 3),
                        format!("c{}", i % 3),
                    ]);
                    (key, w as f64)
                })
                .collect();
            normalize(&raw, spec).ok()
        })
    }

    proptest! {
        #[test]
        fn normalized_mass_sums_to_one(weights in proptest::collection::vec(0.0f64..1e6, 1..300)) {
            prop_assume!(weights.iter().any(|&w| w > 0.0));
            let raw = weights.iter().enumerate().map(|(i, &w)| (key(&format!("k{i}")), w)).collect();
            let d = normalize(&raw, spec1()).unwrap();
            let total: f64 = d.mass().values().sum();
            prop_assert!((total - 1.0).abs() <= SUM_TOLERANCE);
            prop_assert!(d.mass().values().all(|&m| m > 0.0));
        }

        #[test]
        fn marginalize_composes(d in arb_joint()) {
            let two = marginalize(&d, &["a", "c"]).unwrap();
            let stepwise = marginalize(&two, &["c"]).unwrap();
            let direct = marginalize(&d, &["c"]).unwrap();
            prop_assert_eq!(stepwise.mass().len(), direct.mass().len());
            for (k, m) in direct.mass() {
                prop_assert!((stepwise.get(k) - m).abs() < 1e-12);
            }
        }

        #[test]
        fn restrict_is_idempotent(d in arb_joint(), mask in proptest::collection::vec(any::<bool>(), 3)) {
            let allowed: BTreeSet<String> =
                (0..3).filter(|&i| mask[i]).map(|i| format!("a{i}")).collect();
            prop_assume!(!allowed.is_empty());
            if let Ok(once) = restrict(&d, "a", &allowed, true) {
                let once = once.into_distribution().unwrap();
                let twice = restrict(&once, "a", &allowed, true).unwrap().into_distribution().unwrap();
                for (k, m) in once.mass() {
                    prop_assert!((twice.get(k) - m).abs() < 1e-12);
                }
                prop_assert_eq!(once.mass().len(), twice.mass().len());
            }
        }

        #[test]
        fn align_is_support_complete_and_preserves_mass(a in arb_joint(), b in arb_joint()) {
            let b = DimensionSpec::new("abc", ["a", "b", "c"]).map(|_| b).unwrap();
            let pair = align(&a.clone().with_source_size(100), &b).unwrap();
            let support: BTreeSet<_> = a.mass().keys().chain(b.mass().keys()).collect();
            prop_assert_eq!(pair.len(), support.len());
            for (k, p, q) in pair.iter() {
                prop_assert_eq!(p, a.get(k));
                prop_assert_eq!(q, b.get(k));
            }
        }
    }
}
