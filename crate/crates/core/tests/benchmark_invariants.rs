mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use gri_core::benchmarks::{
    build_dimension, default_registry, filter_benchmark, load_benchmark, BenchmarkSchema, BenchmarkSuite,
    GeoRollup, AGE_GROUP, CONTINENT, COUNTRY, GENDER, REGION, RELIGION,
};
use gri_core::distributions::{marginalize, DimensionSpec, StratumKey};
use gri_core::Error;

/// CGA table over every country in the bundled rollup.
fn global_cga(dir: &std::path::Path) -> std::path::PathBuf {
    let rollup = GeoRollup::m49();
    let mut body = String::from("# source: global\n# vintage: 2022\ncountry,gender,age_group,population\n");
    for (i, c) in rollup.countries().enumerate() {
        for (g, gender) in ["Female", "Male"].iter().enumerate() {
            for (a, age) in common::AGES.iter().enumerate() {
                let _ = writeln!(body, "{c},{gender},{age},{}", 10 + (i * 31 + g * 7 + a * 3) % 97);
            }
        }
    }
    common::write(&dir.join("country_gender_age.csv"), &body)
}

#[test]
fn rollup_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let rollup = GeoRollup::m49();
    let table = load_benchmark(&global_cga(dir.path()), BenchmarkSchema::CountryGenderAge, &rollup).unwrap();
    let country = build_dimension(&table, &DimensionSpec::new("country", [COUNTRY]).unwrap(), &rollup, None).unwrap();
    let region = build_dimension(&table, &DimensionSpec::new("region", [REGION]).unwrap(), &rollup, None).unwrap();
    let continent =
        build_dimension(&table, &DimensionSpec::new("continent", [CONTINENT]).unwrap(), &rollup, None).unwrap();
    assert_eq!(region.support_len(), 22);
    assert_eq!(continent.support_len(), 6);

    let mut by_region: BTreeMap<&str, f64> = BTreeMap::new();
    let mut by_continent: BTreeMap<&str, f64> = BTreeMap::new();
    for (key, m) in country.mass() {
        *by_region.entry(rollup.region(key.label(0)).unwrap()).or_default() += m;
        *by_continent.entry(rollup.continent(key.label(0)).unwrap()).or_default() += m;
    }
    for (r, m) in by_region {
        assert!((region.get(&StratumKey::single(r)) - m).abs() < 1e-9, "{r}");
    }
    for (c, m) in by_continent {
        assert!((continent.get(&StratumKey::single(c)) - m).abs() < 1e-9, "{c}");
    }
}

#[test]
fn gender_marginal_matches_joint() {
    let dir = tempfile::tempdir().unwrap();
    let rollup = GeoRollup::m49();
    let table = load_benchmark(&global_cga(dir.path()), BenchmarkSchema::CountryGenderAge, &rollup).unwrap();
    let gender = build_dimension(&table, &DimensionSpec::new("gender", [GENDER]).unwrap(), &rollup, None).unwrap();
    let total: f64 = table.rows.values().sum();
    let female: f64 = table.rows.iter().filter(|(k, _)| k.label(1) == "Female").map(|(_, v)| v).sum();
    assert!((gender.get(&StratumKey::single("Female")) - female / total).abs() < 1e-12);
    assert!((gender.mass().values().sum::<f64>() - 1.0).abs() < 1e-12);
    let via_joint = marginalize(&table.joint().unwrap(), &[GENDER]).unwrap();
    for (k, m) in gender.mass() {
        assert!((via_joint.get(k) - m).abs() < 1e-12);
    }
}

#[test]
fn underivable_and_incomplete_registry() {
    let dir = tempfile::tempdir().unwrap();
    let rollup = GeoRollup::m49();
    let path = global_cga(dir.path());
    let table = load_benchmark(&path, BenchmarkSchema::CountryGenderAge, &rollup).unwrap();
    let cr = DimensionSpec::new("country_religion", [COUNTRY, RELIGION]).unwrap();
    assert!(matches!(
        build_dimension(&table, &cr, &rollup, None),
        Err(Error::UnderivableDimension { .. })
    ));
    let tables = BenchmarkSuite::load_tables(dir.path(), &rollup).unwrap();
    assert!(matches!(default_registry(&tables), Err(Error::RegistryIncomplete { .. })));
}

#[test]
fn default_registry_order_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let bench = common::world(dir.path());
    let rollup = GeoRollup::m49();
    let tables = BenchmarkSuite::load_tables(&bench, &rollup).unwrap();
    let a = default_registry(&tables).unwrap();
    let b = default_registry(&BenchmarkSuite::load_tables(&bench, &rollup).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 13);
    assert_eq!(a.names().first(), Some(&"country_gender_age"));
    assert_eq!(a.names().last(), Some(&"gender"));

    let suite = BenchmarkSuite::new(tables, rollup, a).unwrap();
    let d1 = suite.benchmark("region_gender_age").unwrap();
    let d2 = suite.benchmark("region_gender_age").unwrap();
    assert_eq!(d1, d2);
    assert_eq!(d1.spec().axes(), [REGION, GENDER, AGE_GROUP]);
}

#[test]
fn every_dimension_carries_vintage() {
    let dir = tempfile::tempdir().unwrap();
    let bench = common::world(dir.path());
    let rollup = GeoRollup::m49();
    let tables = BenchmarkSuite::load_tables(&bench, &rollup).unwrap();
    let registry = default_registry(&tables).unwrap();
    let suite = BenchmarkSuite::new(tables, rollup, registry).unwrap();
    for entry in suite.registry.entries() {
        let d = suite.benchmark_for(entry).unwrap();
        let expected = &suite.tables[&entry.source].vintage;
        assert_eq!(d.provenance().vintage.as_ref(), Some(expected), "{}", entry.spec.name());
    }
}

#[test]
fn country_filter() {
    let dir = tempfile::tempdir().unwrap();
    let rollup = GeoRollup::m49();
    let table = load_benchmark(&global_cga(dir.path()), BenchmarkSchema::CountryGenderAge, &rollup).unwrap();
    let joint = table.joint().unwrap();

    let african: BTreeSet<String> = rollup
        .countries()
        .filter(|c| rollup.continent(c) == Some("Africa"))
        .take(39)
        .map(String::from)
        .collect();
    assert_eq!(african.len(), 39);
    let filtered = filter_benchmark(&joint, &african).unwrap();
    assert!((filtered.mass().values().sum::<f64>() - 1.0).abs() < 1e-9);
    let kept: BTreeSet<&str> = filtered.mass().keys().map(|k| k.label(0)).collect();
    assert_eq!(kept.len(), 39);
    assert!(filtered.provenance().notes.iter().any(|n| n.contains("retained mass fraction")));

    let everyone: BTreeSet<String> = rollup.countries().map(String::from).collect();
    assert_eq!(filter_benchmark(&joint, &everyone).unwrap().mass(), joint.mass());

    let nobody: BTreeSet<String> = ["ZZZ".to_string()].into();
    assert!(matches!(filter_benchmark(&joint, &nobody), Err(Error::DegenerateBenchmark(_))));
}
