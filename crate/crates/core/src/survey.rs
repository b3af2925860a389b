//! Survey microdata ingestion and projection onto benchmark dimensions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmarks::{GeoLevel, GeoRollup, AGE_GROUP, COUNTRY};
use crate::distributions::{from_counts, DimensionSpec, Distribution, StratumKey};
use crate::error::{Error, Result};

/// Cell values treated as missing.
const MISSING_TOKENS: [&str; 6] = ["", "na", "n/a", "null", "none", "."];

/// One age bracket; `max` is inclusive and `None` means open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBracket {
    pub label: String,
    pub min: i64,
    pub max: Option<i64>,
}

/// Contiguous, non-overlapping age brackets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBracketing {
    brackets: Vec<AgeBracket>,
}

impl Default for AgeBracketing {
    /// 18–25, 26–35, 36–45, 46–55, 56–65, 65+ (the last covering 66 and up).
    fn default() -> Self {
        let bounded = [(18, 25), (26, 35), (36, 45), (46, 55), (56, 65)];
        let mut brackets: Vec<AgeBracket> = bounded
            .iter()
            .map(|&(min, max)| AgeBracket { label: format!("{min}-{max}"), min, max: Some(max) })
            .collect();
        brackets.push(AgeBracket { label: "65+".into(), min: 66, max: None });
        Self { brackets }
    }
}

impl AgeBracketing {
    pub fn new(brackets: Vec<AgeBracket>) -> Result<Self> {
        if brackets.is_empty() {
            return Err(Error::InvalidBrackets("no brackets".into()));
        }
        for pair in brackets.windows(2) {
            let upper = pair[0].max.ok_or_else(|| {
                Error::InvalidBrackets(format!("{} is open-ended but not last", pair[0].label))
            })?;
            if pair[1].min != upper + 1 {
                return Err(Error::InvalidBrackets(format!(
                    "{} ends at {upper} but {} starts at {}",
                    pair[0].label, pair[1].label, pair[1].min
                )));
            }
        }
        for b in &brackets {
            if b.max.is_some_and(|max| max < b.min) {
                return Err(Error::InvalidBrackets(format!("{} is empty", b.label)));
            }
        }
        let labels: BTreeSet<&str> = brackets.iter().map(|b| b.label.as_str()).collect();
        if labels.len() != brackets.len() {
            return Err(Error::InvalidBrackets("duplicate labels".into()));
        }
        Ok(Self { brackets })
    }

    /// Parses labels such as `18-25` and `66+`.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut brackets = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref().trim();
            let parse = |s: &str| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidBrackets(format!("cannot parse {label:?}")))
            };
            let bracket = if let Some(min) = label.strip_suffix('+') {
                AgeBracket { label: label.to_string(), min: parse(min)?, max: None }
            } else if let Some((lo, hi)) = label.split_once('-') {
                AgeBracket { label: label.to_string(), min: parse(lo)?, max: Some(parse(hi)?) }
            } else {
                return Err(Error::InvalidBrackets(format!("cannot parse {label:?}")));
            };
            brackets.push(bracket);
        }
        Self::new(brackets)
    }

    pub fn brackets(&self) -> &[AgeBracket] {
        &self.brackets
    }

    pub fn labels(&self) -> Vec<&str> {
        self.brackets.iter().map(|b| b.label.as_str()).collect()
    }

    pub fn min_age(&self) -> i64 {
        self.brackets[0].min
    }
}

/// Label of the bracket containing `age_years`.
pub fn bracket_age(age_years: i64, brackets: &AgeBracketing) -> Result<&str> {
    brackets
        .brackets
        .iter()
        .find(|b| age_years >= b.min && b.max.is_none_or(|max| age_years <= max))
        .map(|b| b.label.as_str())
        .ok_or(Error::OutOfRange { age: age_years, min: brackets.min_age() })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeMode {
    /// Integer ages, bracketed on load.
    #[default]
    Years,
    /// Labels already matching the benchmark's age groups.
    Bracketed,
}

/// What to do with a category value that cannot be harmonized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonizationMode {
    /// Fail the load.
    #[default]
    Strict,
    /// Drop the respondent and count it in the ledger.
    Lenient,
}

/// How survey columns map onto benchmark axes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    /// axis → source column name.
    pub columns: BTreeMap<String, String>,
    /// axis → (raw value → benchmark label).
    #[serde(default)]
    pub aliases: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub age_mode: AgeMode,
    #[serde(default)]
    pub brackets: AgeBracketing,
    #[serde(default)]
    pub mode: HarmonizationMode,
}

impl ColumnMapping {
    pub fn map(mut self, axis: &str, column: &str) -> Self {
        self.columns.insert(axis.to_string(), column.to_string());
        self
    }

    pub fn alias(mut self, axis: &str, raw: &str, label: &str) -> Self {
        self.aliases
            .entry(axis.to_string())
            .or_default()
            .insert(raw.to_string(), label.to_string());
        self
    }

    pub fn with_mode(mut self, mode: HarmonizationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_age_mode(mut self, age_mode: AgeMode) -> Self {
        self.age_mode = age_mode;
        self
    }

    fn apply_alias<'a>(&'a self, axis: &str, raw: &'a str) -> &'a str {
        let Some(map) = self.aliases.get(axis) else { return raw };
        map.get(raw)
            .or_else(|| map.iter().find(|(k, _)| k.eq_ignore_ascii_case(raw)).map(|(_, v)| v))
            .map_or(raw, String::as_str)
    }
}

/// Reference data used to harmonize survey labels.
#[derive(Debug, Clone)]
pub struct IngestContext<'a> {
    pub rollup: &'a GeoRollup,
    /// Benchmark label domains per axis; axes absent here accept any label.
    pub domains: BTreeMap<String, BTreeSet<String>>,
}

impl<'a> IngestContext<'a> {
    pub fn new(rollup: &'a GeoRollup) -> Self {
        Self { rollup, domains: BTreeMap::new() }
    }

    pub fn with_domains(mut self, domains: BTreeMap<String, BTreeSet<String>>) -> Self {
        self.domains = domains;
        self
    }
}

/// Harmonized respondent records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyMicrodata {
    pub id: String,
    /// SHA-256 of the source file.
    pub digest: String,
    pub axes: Vec<String>,
    /// One value per axis; `None` where the respondent left it blank.
    pub rows: Vec<Vec<Option<String>>>,
    /// Usable respondents.
    pub n_total: u64,
    pub n_dropped: u64,
    /// Dropped respondents by reason.
    pub dropped: BTreeMap<String, u64>,
    /// axis → unmappable raw value → occurrences.
    pub quarantined_values: BTreeMap<String, BTreeMap<String, u64>>,
}

enum Harmonized {
    Value(String),
    Missing,
    Unmappable,
    OutOfRange,
}

fn harmonize(axis: &str, raw: &str, mapping: &ColumnMapping, ctx: &IngestContext<'_>) -> Harmonized {
    let raw = raw.trim();
    if MISSING_TOKENS.iter().any(|t| raw.eq_ignore_ascii_case(t)) {
        return Harmonized::Missing;
    }
    let value = mapping.apply_alias(axis, raw);
    if axis == COUNTRY {
        return match ctx.rollup.resolve(value) {
            Some(code) => Harmonized::Value(code.to_string()),
            None => Harmonized::Unmappable,
        };
    }
    let value = if axis == AGE_GROUP && mapping.age_mode == AgeMode::Years {
        let age = match value.parse::<i64>() {
            Ok(age) => age,
            Err(_) => match value.parse::<f64>() {
                Ok(age) if age.is_finite() => age.floor() as i64,
                _ => return Harmonized::Unmappable,
            },
        };
        match bracket_age(age, &mapping.brackets) {
            Ok(label) => label,
            Err(_) => return Harmonized::OutOfRange,
        }
    } else {
        value
    };
    match ctx.domains.get(axis) {
        None => Harmonized::Value(value.to_string()),
        Some(domain) if domain.contains(value) => Harmonized::Value(value.to_string()),
        Some(domain) => match domain.iter().find(|label| label.eq_ignore_ascii_case(value)) {
            Some(label) => Harmonized::Value(label.clone()),
            None => Harmonized::Unmappable,
        },
    }
}

/// Reads a survey file and harmonizes every mapped axis.
pub fn load_survey(path: &Path, mapping: &ColumnMapping, ctx: &IngestContext<'_>) -> Result<SurveyMicrodata> {
    let path_str = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = hex::encode(Sha256::digest(&bytes));

    if mapping.columns.is_empty() {
        return Err(Error::SchemaError { path: path_str, message: "column mapping is empty".into() });
    }
    if mapping.age_mode == AgeMode::Years && mapping.columns.contains_key(AGE_GROUP) {
        if let Some(domain) = ctx.domains.get(AGE_GROUP) {
            let unknown: Vec<&str> =
                mapping.brackets.labels().into_iter().filter(|l| !domain.contains(*l)).collect();
            if !unknown.is_empty() {
                return Err(Error::InvalidBrackets(format!(
                    "bracket labels {unknown:?} are not benchmark age groups {domain:?}"
                )));
            }
        }
    }

    let body = bytes.strip_prefix(b"\xef\xbb\xbf").unwrap_or(&bytes);
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(body);
    let headers = reader.headers()?.clone();
    let axes: Vec<String> = mapping.columns.keys().cloned().collect();
    let mut indices = Vec::with_capacity(axes.len());
    let mut missing = Vec::new();
    for axis in &axes {
        let column = &mapping.columns[axis];
        match headers.iter().position(|h| h.trim().eq_ignore_ascii_case(column.trim())) {
            Some(i) => indices.push(i),
            None => missing.push(format!("{column} (for {axis})")),
        }
    }
    if !missing.is_empty() {
        return Err(Error::SchemaError {
            path: path_str,
            message: format!("missing column(s): {}", missing.join(", ")),
        });
    }

    let mut rows = Vec::new();
    let mut dropped: BTreeMap<String, u64> = BTreeMap::new();
    let mut quarantined_values: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    'records: for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(axes.len());
        for (axis, &i) in axes.iter().zip(&indices) {
            let raw = record.get(i).unwrap_or("");
            match harmonize(axis, raw, mapping, ctx) {
                Harmonized::Value(v) => row.push(Some(v)),
                Harmonized::Missing => row.push(None),
                Harmonized::OutOfRange => {
                    *dropped.entry(format!("{axis}_out_of_range")).or_insert(0) += 1;
                    continue 'records;
                }
                Harmonized::Unmappable => {
                    if mapping.mode == HarmonizationMode::Strict {
                        return Err(Error::UnmappableValue {
                            path: path_str,
                            line,
                            axis: axis.clone(),
                            value: raw.to_string(),
                        });
                    }
                    *dropped.entry(format!("unmappable_{axis}")).or_insert(0) += 1;
                    *quarantined_values
                        .entry(axis.clone())
                        .or_default()
                        .entry(raw.trim().to_string())
                        .or_insert(0) += 1;
                    continue 'records;
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptySample(format!("{path_str}: no usable respondents")));
    }
    let id = path.file_stem().map_or_else(|| path_str.clone(), |s| s.to_string_lossy().into_owned());
    Ok(SurveyMicrodata {
        id,
        digest,
        axes,
        n_total: rows.len() as u64,
        n_dropped: dropped.values().sum(),
        rows,
        dropped,
        quarantined_values,
    })
}

/// Respondents usable for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionTally {
    pub n_used: u64,
    /// `n_total − n_used`.
    pub excluded: u64,
    /// Respondents lacking each axis (a respondent may lack several).
    pub missing_by_axis: BTreeMap<String, u64>,
}

/// Groups respondents by the strata of `spec` and normalizes.
///
/// Respondents missing any needed value are left out of this dimension only.
pub fn to_sample_distribution(
    data: &SurveyMicrodata,
    spec: &DimensionSpec,
    rollup: &GeoRollup,
) -> Result<(Distribution, DimensionTally)> {
    let mut plan = Vec::with_capacity(spec.axes().len());
    for axis in spec.axes() {
        let geo = GeoLevel::from_axis(axis).filter(|&l| l != GeoLevel::Country);
        let source_axis = if geo.is_some() { COUNTRY } else { axis.as_str() };
        let index = data.axes.iter().position(|a| a == source_axis).ok_or_else(|| Error::SchemaError {
            path: data.id.clone(),
            message: format!("dimension {} needs axis {source_axis}, which is not mapped", spec.name()),
        })?;
        plan.push((index, geo));
    }

    let mut counts: BTreeMap<StratumKey, i64> = BTreeMap::new();
    let mut missing_by_axis: BTreeMap<String, u64> = BTreeMap::new();
    let mut n_used = 0u64;
    for row in &data.rows {
        let mut labels = Vec::with_capacity(plan.len());
        let mut complete = true;
        for &(index, geo) in &plan {
            match (&row[index], geo) {
                (None, _) => {
                    *missing_by_axis.entry(data.axes[index].clone()).or_insert(0) += 1;
                    complete = false;
                }
                (Some(v), None) => labels.push(v.clone()),
                (Some(code), Some(level)) => match rollup.level(code, level) {
                    Some(label) => labels.push(label.to_string()),
                    None => return Err(Error::UnknownGeography(code.clone())),
                },
            }
        }
        if complete {
            *counts.entry(StratumKey::new(labels)).or_insert(0) += 1;
            n_used += 1;
        }
    }
    if n_used == 0 {
        return Err(Error::EmptySample(format!("{}: no respondent has every {} axis", data.id, spec.name())));
    }
    let dist = from_counts(&counts, spec.clone())?;
    Ok((dist, DimensionTally { n_used, excluded: data.n_total - n_used, missing_by_axis }))
}
