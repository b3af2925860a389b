//! Population benchmark tables, geographic rollup, and the dimension registry.
//!
//! Benchmark files are comma-delimited with a header row. Leading lines of
//! the form `# key: value` carry metadata; `vintage` is mandatory, `source`
//! and `provenance` are optional:
//!
//! ```text
//! # source: un_wpp_2023
//! # vintage: 2023
//! # provenance: UN World Population Prospects 2023
//! country,gender,age_group,population
//! KEN,Female,26-35,4512000
//! ```
//!
//! Country labels may be ISO 3166-1 alpha-3 codes or any English name known
//! to the rollup file. Rows whose country cannot be resolved are quarantined
//! rather than failing the load.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{normalize, restrict, DimensionSpec, Distribution, Provenance, StratumKey};
use crate::error::{Error, Result};

pub const COUNTRY: &str = "country";
pub const REGION: &str = "region";
pub const CONTINENT: &str = "continent";
pub const GENDER: &str = "gender";
pub const AGE_GROUP: &str = "age_group";
pub const RELIGION: &str = "religion";
pub const ENVIRONMENT: &str = "environment";

/// Relative deviation from the expected stratum count tolerated without a warning.
pub const STRATUM_COUNT_SLACK: f64 = 0.10;

/// UN M49 geographic sub-regions.
pub const M49_REGIONS: [&str; 22] = [
    "Australia and New Zealand",
    "Caribbean",
    "Central America",
    "Central Asia",
    "Eastern Africa",
    "Eastern Asia",
    "Eastern Europe",
    "Melanesia",
    "Micronesia",
    "Middle Africa",
    "Northern Africa",
    "Northern America",
    "Northern Europe",
    "Polynesia",
    "South America",
    "South-Eastern Asia",
    "Southern Africa",
    "Southern Asia",
    "Southern Europe",
    "Western Africa",
    "Western Asia",
    "Western Europe",
];

pub const CONTINENTS: [&str; 6] = [
    "Africa",
    "Asia",
    "Europe",
    "Latin America and the Caribbean",
    "Northern America",
    "Oceania",
];

const BUNDLED_ROLLUP: &str = include_str!("../../../data/geo_rollup.csv");

/// The three benchmark table layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkSchema {
    CountryGenderAge,
    CountryReligion,
    CountryEnvironment,
}

impl BenchmarkSchema {
    pub const ALL: [BenchmarkSchema; 3] = [
        BenchmarkSchema::CountryGenderAge,
        BenchmarkSchema::CountryReligion,
        BenchmarkSchema::CountryEnvironment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkSchema::CountryGenderAge => "country_gender_age",
            BenchmarkSchema::CountryReligion => "country_religion",
            BenchmarkSchema::CountryEnvironment => "country_environment",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    pub fn axes(self) -> &'static [&'static str] {
        match self {
            BenchmarkSchema::CountryGenderAge => &[COUNTRY, GENDER, AGE_GROUP],
            BenchmarkSchema::CountryReligion => &[COUNTRY, RELIGION],
            BenchmarkSchema::CountryEnvironment => &[COUNTRY, ENVIRONMENT],
        }
    }

    /// Stratum counts of the reference vintages.
    pub fn expected_strata(self) -> usize {
        match self {
            BenchmarkSchema::CountryGenderAge => 2699,
            BenchmarkSchema::CountryReligion => 1607,
            BenchmarkSchema::CountryEnvironment => 449,
        }
    }
}

impl fmt::Display for BenchmarkSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkSchema::ALL
            .into_iter()
            .find(|schema| schema.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown benchmark schema {s}")))
    }
}

/// Leading `# key: value` lines and the remaining CSV body.
struct Annotated {
    meta: BTreeMap<String, String>,
    body: String,
    skipped_lines: u64,
}

fn read_annotated(path: &Path) -> Result<Annotated> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    Ok(split_annotated(&text))
}

fn split_annotated(text: &str) -> Annotated {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut meta = BTreeMap::new();
    let mut skipped_lines = 0;
    let mut rest = text;
    while let Some(line) = rest.lines().next() {
        let trimmed = line.trim();
        if !(trimmed.starts_with('#') || trimmed.is_empty()) {
            break;
        }
        if let Some((key, value)) = trimmed.trim_start_matches('#').split_once(':') {
            meta.insert(key.trim().to_lowercase(), value.trim().to_string());
        }
        skipped_lines += 1;
        rest = rest.get(line.len()..).unwrap_or("");
        rest = rest.strip_prefix("\r\n").or_else(|| rest.strip_prefix('\n')).unwrap_or(rest);
    }
    Annotated { meta, body: rest.to_string(), skipped_lines }
}

fn header_indices(
    headers: &csv::StringRecord,
    wanted: &[&str],
    path: &Path,
) -> Result<Vec<usize>> {
    let lower: Vec<String> = headers.iter().map(|h| h.trim().to_lowercase()).collect();
    let mut missing = Vec::new();
    let indices: Vec<usize> = wanted
        .iter()
        .filter_map(|w| {
            let found = lower.iter().position(|h| h == w);
            if found.is_none() {
                missing.push(*w);
            }
            found
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaError {
            path: path.display().to_string(),
            message: format!("missing column(s): {}", missing.join(", ")),
        });
    }
    Ok(indices)
}

/// Country → (sub-region, continent), plus an alias map from English names to codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoRollup {
    entries: BTreeMap<String, (String, String)>,
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    provenance: Provenance,
}

impl GeoRollup {
    /// The bundled UN M49 rollup.
    pub fn m49() -> Self {
        Self::parse(BUNDLED_ROLLUP, Path::new("<bundled geo_rollup.csv>"))
            .expect("bundled rollup is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let annotated = split_annotated(text);
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(annotated.body.as_bytes());
        let headers = reader.headers()?.clone();
        let idx = header_indices(&headers, &[COUNTRY, REGION, CONTINENT], path)?;
        let name_idx = headers.iter().position(|h| h.trim().eq_ignore_ascii_case("name"));
        let regions: BTreeSet<&str> = M49_REGIONS.into_iter().collect();
        let continents: BTreeSet<&str> = CONTINENTS.into_iter().collect();

        let mut entries = BTreeMap::new();
        let mut aliases = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line()) + annotated.skipped_lines;
            let bad = |message: String| Error::InvalidRow {
                path: path.display().to_string(),
                line,
                message,
            };
            let code = record[idx[0]].to_uppercase();
            let region = record[idx[1]].to_string();
            let continent = record[idx[2]].to_string();
            if code.is_empty() {
                return Err(bad("empty country code".into()));
            }
            if !regions.contains(region.as_str()) {
                return Err(bad(format!("{region:?} is not a UN M49 sub-region")));
            }
            if !continents.contains(continent.as_str()) {
                return Err(bad(format!("{continent:?} is not a continent")));
            }
            if entries.insert(code.clone(), (region, continent)).is_some() {
                return Err(bad(format!("country {code} listed twice")));
            }
            if let Some(i) = name_idx {
                let name = record.get(i).unwrap_or("").trim().to_lowercase();
                if !name.is_empty() {
                    aliases.insert(name, code.clone());
                }
            }
        }
        let provenance = Provenance {
            source_id: annotated.meta.get("source").cloned(),
            vintage: annotated.meta.get("vintage").cloned(),
            citation: annotated.meta.get("provenance").cloned(),
            notes: Vec::new(),
        };
        Ok(Self { entries, aliases, provenance })
    }

    /// Adds an English-name alias for a known country code.
    pub fn with_alias(mut self, name: &str, code: &str) -> Self {
        self.aliases.insert(name.trim().to_lowercase(), code.to_uppercase());
        self
    }

    /// Resolves a code or alias to the canonical country code.
    pub fn resolve(&self, label: &str) -> Option<&str> {
        let label = label.trim();
        let upper = label.to_uppercase();
        if let Some((code, _)) = self.entries.get_key_value(&upper) {
            return Some(code);
        }
        let code = self.aliases.get(&label.to_lowercase())?;
        self.entries.get_key_value(code).map(|(c, _)| c.as_str())
    }

    pub fn region(&self, code: &str) -> Option<&str> {
        self.entries.get(code).map(|(r, _)| r.as_str())
    }

    pub fn continent(&self, code: &str) -> Option<&str> {
        self.entries.get(code).map(|(_, c)| c.as_str())
    }

    /// Label of `code` at the given geographic level.
    pub fn level(&self, code: &str, level: GeoLevel) -> Option<&str> {
        match level {
            GeoLevel::Country => self.entries.get_key_value(code).map(|(c, _)| c.as_str()),
            GeoLevel::Region => self.region(code),
            GeoLevel::Continent => self.continent(code),
        }
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Geographic resolution of the country axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoLevel {
    Country,
    Region,
    Continent,
}

impl GeoLevel {
    pub fn from_axis(axis: &str) -> Option<Self> {
        match axis {
            COUNTRY => Some(GeoLevel::Country),
            REGION => Some(GeoLevel::Region),
            CONTINENT => Some(GeoLevel::Continent),
            _ => None,
        }
    }
}

/// A benchmark row excluded from a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedRow {
    pub line: u64,
    pub country: String,
    pub population: f64,
}

/// A validated benchmark table with raw population weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub source_id: String,
    pub schema: BenchmarkSchema,
    pub spec: DimensionSpec,
    pub rows: BTreeMap<StratumKey, f64>,
    pub vintage: String,
    pub provenance: String,
    pub path: PathBuf,
    pub quarantine: Vec<QuarantinedRow>,
    pub warnings: Vec<String>,
}

impl BenchmarkTable {
    /// Number of strata, K.
    pub fn stratum_count(&self) -> usize {
        self.rows.len()
    }

    pub fn total_population(&self) -> f64 {
        self.rows.values().sum()
    }

    pub fn quarantined_population(&self) -> f64 {
        self.quarantine.iter().fold(0.0, |acc, q| acc + q.population)
    }

    pub fn countries(&self) -> BTreeSet<&str> {
        self.rows.keys().map(|k| k.label(0)).collect()
    }

    fn distribution_provenance(&self) -> Provenance {
        Provenance {
            source_id: Some(self.source_id.clone()),
            vintage: Some(self.vintage.clone()),
            citation: (!self.provenance.is_empty()).then(|| self.provenance.clone()),
            notes: Vec::new(),
        }
    }

    /// The full joint distribution of the table at country resolution.
    pub fn joint(&self) -> Result<Distribution> {
        let mut dist = normalize(&self.rows, self.spec.clone())?;
        let mut provenance = self.distribution_provenance();
        provenance.notes.extend(dist.provenance().notes.iter().cloned());
        dist = dist.with_provenance(provenance);
        Ok(dist)
    }
}

/// Loads and validates one benchmark file.
pub fn load_benchmark(path: &Path, schema: BenchmarkSchema, rollup: &GeoRollup) -> Result<BenchmarkTable> {
    let annotated = read_annotated(path)?;
    let path_str = path.display().to_string();
    let vintage = annotated.meta.get("vintage").cloned().ok_or_else(|| Error::SchemaError {
        path: path_str.clone(),
        message: "missing `# vintage:` header line".into(),
    })?;
    let source_id = annotated
        .meta
        .get("source")
        .cloned()
        .unwrap_or_else(|| schema.name().to_string());
    let provenance = annotated.meta.get("provenance").cloned().unwrap_or_default();

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(annotated.body.as_bytes());
    let headers = reader.headers()?.clone();
    let mut wanted: Vec<&str> = schema.axes().to_vec();
    wanted.push("population");
    let idx = header_indices(&headers, &wanted, path)?;
    let axis_count = schema.axes().len();

    let mut rows: BTreeMap<StratumKey, f64> = BTreeMap::new();
    let mut first_seen: BTreeMap<StratumKey, u64> = BTreeMap::new();
    let mut quarantine = Vec::new();
    let mut warnings = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line()) + annotated.skipped_lines;
        let bad = |message: String| Error::InvalidRow { path: path_str.clone(), line, message };

        let raw_population = &record[idx[axis_count]];
        let population: f64 = raw_population
            .parse()
            .map_err(|_| bad(format!("population {raw_population:?} is not a number")))?;
        let mut labels = Vec::with_capacity(axis_count);
        for (axis, &i) in schema.axes().iter().zip(&idx) {
            let value = &record[i];
            if value.is_empty() {
                return Err(bad(format!("empty {axis}")));
            }
            labels.push(value.to_string());
        }
        if !population.is_finite() || population < 0.0 {
            return Err(Error::InvalidWeight {
                key: format!("{path_str}:{line} {}", labels.join(" / ")),
                weight: population,
            });
        }
        match rollup.resolve(&labels[0]) {
            Some(code) => labels[0] = code.to_string(),
            None => {
                warnings.push(format!("line {line}: unknown country {:?} quarantined", labels[0]));
                quarantine.push(QuarantinedRow { line, country: labels[0].clone(), population });
                continue;
            }
        }
        let key = StratumKey::new(labels);
        if rows.contains_key(&key) {
            return Err(Error::DuplicateStratum {
                path: path_str.clone(),
                line,
                key: format!("{key} (first at line {})", first_seen[&key]),
            });
        }
        first_seen.insert(key.clone(), line);
        rows.insert(key, population);
    }

    let expected = schema.expected_strata() as f64;
    let k = rows.len() as f64;
    if (k - expected).abs() > STRATUM_COUNT_SLACK * expected {
        warnings.push(format!(
            "{} strata, expected about {} (±{:.0}%)",
            rows.len(),
            schema.expected_strata(),
            STRATUM_COUNT_SLACK * 100.0
        ));
    }
    Ok(BenchmarkTable {
        source_id,
        schema,
        spec: DimensionSpec::new(schema.name(), schema.axes().iter().copied())?,
        rows,
        vintage,
        provenance,
        path: path.to_path_buf(),
        quarantine,
        warnings,
    })
}

fn check_derivable(spec: &DimensionSpec, schema: BenchmarkSchema) -> Result<()> {
    let underivable = |reason: String| Error::UnderivableDimension {
        dimension: spec.name().to_string(),
        reason,
    };
    let mut geo_axes = 0;
    for axis in spec.axes() {
        if GeoLevel::from_axis(axis).is_some() {
            geo_axes += 1;
        } else if !schema.axes().contains(&axis.as_str()) {
            return Err(underivable(format!("axis {axis} is not in the {schema} table")));
        }
    }
    if geo_axes > 1 {
        return Err(underivable("more than one geographic axis".into()));
    }
    Ok(())
}

/// Projects a joint distribution onto `spec`, rolling countries up to
/// regions or continents and summing over dropped axes.
fn project(joint: &Distribution, spec: &DimensionSpec, rollup: &GeoRollup) -> Result<Distribution> {
    let source_axes = joint.spec().axes();
    let country_index = source_axes.iter().position(|a| a == COUNTRY);
    let mut plan = Vec::with_capacity(spec.axes().len());
    for axis in spec.axes() {
        match GeoLevel::from_axis(axis) {
            Some(level) => {
                let index = country_index.ok_or_else(|| Error::UnderivableDimension {
                    dimension: spec.name().to_string(),
                    reason: "source has no country axis".into(),
                })?;
                plan.push((index, Some(level)));
            }
            None => plan.push((joint.spec().axis_index(axis)?, None)),
        }
    }
    let mut mass: BTreeMap<StratumKey, f64> = BTreeMap::new();
    for (key, &m) in joint.mass() {
        let mut labels = Vec::with_capacity(plan.len());
        for &(index, level) in &plan {
            let label = key.label(index);
            match level {
                Some(level) => labels.push(
                    rollup
                        .level(label, level)
                        .ok_or_else(|| Error::UnknownGeography(label.to_string()))?
                        .to_string(),
                ),
                None => labels.push(label.to_string()),
            }
        }
        *mass.entry(StratumKey::new(labels)).or_insert(0.0) += m;
    }
    let dist = normalize(&mass, spec.clone())?;
    Ok(dist.with_provenance(joint.provenance().clone()))
}

/// Materializes one dimension from a table, optionally restricted to a set
/// of countries first.
pub fn build_dimension(
    table: &BenchmarkTable,
    spec: &DimensionSpec,
    rollup: &GeoRollup,
    countries: Option<&BTreeSet<String>>,
) -> Result<Distribution> {
    check_derivable(spec, table.schema)?;
    let mut joint = table.joint()?;
    if let Some(countries) = countries {
        joint = filter_benchmark(&joint, countries)?;
    }
    project(&joint, spec, rollup)
}

/// Restricts a country-level distribution to `countries` and renormalizes.
pub fn filter_benchmark(dist: &Distribution, countries: &BTreeSet<String>) -> Result<Distribution> {
    let restricted = restrict(dist, COUNTRY, countries, true)?;
    let retained = restricted.retained_fraction();
    let mut out = restricted.into_distribution().expect("renormalized restriction");
    if retained >= 1.0 {
        out.push_note(format!("country filter retained mass fraction {retained:.6}"));
    }
    Ok(out)
}

/// One registry dimension and the table it is derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub spec: DimensionSpec,
    pub source: BenchmarkSchema,
}

/// Ordered list of dimensions a scorecard covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionRegistry {
    entries: Vec<RegistryEntry>,
}

impl DimensionRegistry {
    pub fn new(entries: Vec<RegistryEntry>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for entry in &entries {
            if !names.insert(entry.spec.name()) {
                return Err(Error::InvalidSpec(format!("dimension {} listed twice", entry.spec.name())));
            }
            check_derivable(&entry.spec, entry.source)?;
        }
        Ok(Self { entries })
    }

    /// The 13 default dimensions, most to least demanding.
    pub fn default_layout() -> Self {
        use BenchmarkSchema::*;
        let mut entries = Vec::with_capacity(13);
        let mut push = |name: &str, axes: &[&str], source| {
            let spec = DimensionSpec::new(name, axes.iter().copied()).expect("static spec");
            entries.push(RegistryEntry { spec, source });
        };
        for geo in [COUNTRY, REGION, CONTINENT] {
            push(&format!("{geo}_gender_age"), &[geo, GENDER, AGE_GROUP], CountryGenderAge);
            push(&format!("{geo}_religion"), &[geo, RELIGION], CountryReligion);
            push(&format!("{geo}_environment"), &[geo, ENVIRONMENT], CountryEnvironment);
        }
        for single in [COUNTRY, REGION, CONTINENT, GENDER] {
            push(single, &[single], CountryGenderAge);
        }
        Self { entries }
    }

    /// Reads `name,source,axes` rows; axes are joined with `+`.
    pub fn load(path: &Path) -> Result<Self> {
        let annotated = read_annotated(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(annotated.body.as_bytes());
        let headers = reader.headers()?.clone();
        let idx = header_indices(&headers, &["name", "source", "axes"], path)?;
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record?;
            let source: BenchmarkSchema = record[idx[1]].parse()?;
            let spec = DimensionSpec::new(&record[idx[0]], record[idx[2]].split('+').map(str::trim))?;
            entries.push(RegistryEntry { spec, source });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.spec.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.spec.name() == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails unless every dimension's source table is present.
    pub fn require_tables(&self, tables: &BTreeMap<BenchmarkSchema, BenchmarkTable>) -> Result<()> {
        for entry in &self.entries {
            if !tables.contains_key(&entry.source) {
                return Err(Error::RegistryIncomplete {
                    dimension: entry.spec.name().to_string(),
                    source_table: entry.source.name().to_string(),
                });
            }
        }
        Ok(())
    }
}

/// The default registry, checked against the loaded tables.
pub fn default_registry(tables: &BTreeMap<BenchmarkSchema, BenchmarkTable>) -> Result<DimensionRegistry> {
    let registry = DimensionRegistry::default_layout();
    registry.require_tables(tables)?;
    Ok(registry)
}

/// Loaded benchmark tables plus everything needed to materialize dimensions.
#[derive(Debug, Clone)]
pub struct BenchmarkSuite {
    pub tables: BTreeMap<BenchmarkSchema, BenchmarkTable>,
    pub rollup: GeoRollup,
    pub registry: DimensionRegistry,
    /// Country codes the benchmarks are restricted to, if any.
    pub country_filter: Option<BTreeSet<String>>,
}

impl BenchmarkSuite {
    /// Loads whichever of the three standard files exist in `dir`.
    pub fn load_tables(dir: &Path, rollup: &GeoRollup) -> Result<BTreeMap<BenchmarkSchema, BenchmarkTable>> {
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "benchmark directory not found"),
            ));
        }
        let mut tables = BTreeMap::new();
        for schema in BenchmarkSchema::ALL {
            let path = dir.join(schema.file_name());
            if path.is_file() {
                tables.insert(schema, load_benchmark(&path, schema, rollup)?);
            }
        }
        Ok(tables)
    }

    pub fn new(
        tables: BTreeMap<BenchmarkSchema, BenchmarkTable>,
        rollup: GeoRollup,
        registry: DimensionRegistry,
    ) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::RegistryIncomplete {
                dimension: "*".into(),
                source_table: "any".into(),
            });
        }
        Ok(Self { tables, rollup, registry, country_filter: None })
    }

    /// Restricts every benchmark to the given countries (codes or names).
    pub fn with_country_filter<S: AsRef<str>>(mut self, countries: &[S]) -> Result<Self> {
        let mut codes = BTreeSet::new();
        for label in countries {
            let code = self
                .rollup
                .resolve(label.as_ref())
                .ok_or_else(|| Error::UnknownGeography(label.as_ref().to_string()))?;
            codes.insert(code.to_string());
        }
        if codes.is_empty() {
            return Err(Error::DegenerateBenchmark("empty country filter".into()));
        }
        self.country_filter = Some(codes);
        Ok(self)
    }

    /// The benchmark distribution of a registry dimension.
    pub fn benchmark(&self, name: &str) -> Result<Distribution> {
        let entry = self.registry.get(name).ok_or_else(|| Error::UnknownDimension(name.into()))?;
        self.benchmark_for(entry)
    }

    pub fn benchmark_for(&self, entry: &RegistryEntry) -> Result<Distribution> {
        let table = self.tables.get(&entry.source).ok_or_else(|| Error::RegistryIncomplete {
            dimension: entry.spec.name().to_string(),
            source_table: entry.source.name().to_string(),
        })?;
        build_dimension(table, &entry.spec, &self.rollup, self.country_filter.as_ref())
    }

    /// Source id → vintage for every loaded table.
    pub fn vintages(&self) -> BTreeMap<String, String> {
        self.tables.values().map(|t| (t.source_id.clone(), t.vintage.clone())).collect()
    }

    /// Axis value domains observed in the tables, used to harmonize survey labels.
    pub fn axis_domains(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut domains: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for table in self.tables.values() {
            for (i, axis) in table.spec.axes().iter().enumerate().skip(1) {
                let labels = domains.entry(axis.clone()).or_default();
                labels.extend(table.rows.keys().map(|k| k.label(i).to_string()));
            }
        }
        domains
    }
}
