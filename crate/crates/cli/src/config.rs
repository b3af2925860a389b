//! Run configuration: TOML file, command-line overrides, defaults.
//!
//! ```toml
//! survey = "wave1.csv"
//! survey_id = "wave1"
//! benchmark_dir = "benchmarks"
//! rollup = "geo_rollup.csv"     # optional, bundled M49 table otherwise
//! registry = "registry.csv"     # optional, 13 default dimensions otherwise
//! out_dir = "out"
//! countries = ["KEN", "Nigeria"]
//! mode = "strict"               # or "lenient"
//! formats = ["json", "csv"]
//!
//! [columns]                     # axis = survey column
//! country = "country"
//! gender = "sex"
//! age_group = "age"
//!
//! [aliases.gender]              # raw value = benchmark label
//! M = "Male"
//!
//! [age]
//! mode = "years"                # or "bracketed"
//! brackets = ["18-25", "26-35", "36-45", "46-55", "56-65", "65+"]
//!
//! [montecarlo]
//! enabled = true
//! iterations = 1000
//! seed = 42
//!
//! [aggregate_weights]           # off unless given
//! country_gender_age = 1.0
//! ```
//!
//! Relative paths in the file resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gri_core::benchmarks::{AGE_GROUP, COUNTRY, ENVIRONMENT, GENDER, RELIGION};
use gri_core::montecarlo::DEFAULT_ITERATIONS;
use gri_core::scorecard::Format;
use gri_core::survey::{AgeBracketing, AgeMode, ColumnMapping, HarmonizationMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    survey: Option<PathBuf>,
    survey_id: Option<String>,
    benchmark_dir: Option<PathBuf>,
    rollup: Option<PathBuf>,
    registry: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    countries: Option<Vec<String>>,
    mode: Option<HarmonizationMode>,
    formats: Option<Vec<String>>,
    #[serde(default)]
    columns: BTreeMap<String, String>,
    #[serde(default)]
    aliases: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    age: AgeSection,
    #[serde(default)]
    montecarlo: MonteCarloSection,
    aggregate_weights: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgeSection {
    mode: Option<AgeMode>,
    brackets: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonteCarloSection {
    enabled: Option<bool>,
    iterations: Option<usize>,
    seed: Option<u64>,
}

/// Values given on the command line. `None` leaves the file or default value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub survey: Option<PathBuf>,
    pub survey_id: Option<String>,
    pub benchmark_dir: Option<PathBuf>,
    pub rollup: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub countries: Option<Vec<String>>,
    pub mode: Option<HarmonizationMode>,
    pub formats: Option<Vec<Format>>,
    pub columns: Vec<(String, String)>,
    pub max_gri: Option<bool>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub enabled: bool,
    pub iterations: usize,
    pub seed: Option<u64>,
}

/// Fully resolved configuration. Its JSON form is what gets digested; where
/// and in which formats results are written does not count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub survey: Option<PathBuf>,
    pub survey_id: Option<String>,
    pub benchmark_dir: Option<PathBuf>,
    pub rollup: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    pub countries: Option<Vec<String>>,
    #[serde(skip)]
    pub formats: Option<Vec<Format>>,
    pub mapping: ColumnMapping,
    pub montecarlo: MonteCarloConfig,
    pub aggregate_weights: Option<BTreeMap<String, f64>>,
}

const KNOWN_AXES: [&str; 5] = [COUNTRY, GENDER, AGE_GROUP, RELIGION, ENVIRONMENT];

fn rebase(base: &Path, path: Option<PathBuf>) -> Option<PathBuf> {
    path.map(|p| if p.is_relative() { base.join(p) } else { p })
}

impl RunConfig {
    /// Merges flags over the optional file over defaults and validates.
    pub fn resolve(file: Option<&Path>, cli: Overrides) -> Result<Self> {
        let (fc, base) = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let fc: FileConfig =
                    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
                (fc, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };

        let file_formats = fc
            .formats
            .map(|list| list.iter().map(|f| f.parse::<Format>()).collect::<Result<Vec<_>, _>>())
            .transpose()?;

        let mut columns = fc.columns;
        columns.extend(cli.columns);
        for axis in columns.keys() {
            if !KNOWN_AXES.contains(&axis.as_str()) {
                bail!("unknown axis {axis:?} in column mapping (expected one of {KNOWN_AXES:?})");
            }
        }
        for axis in fc.aliases.keys() {
            if !KNOWN_AXES.contains(&axis.as_str()) {
                bail!("unknown axis {axis:?} in aliases");
            }
        }
        let brackets = match fc.age.brackets {
            Some(labels) => AgeBracketing::from_labels(&labels)?,
            None => AgeBracketing::default(),
        };
        let mapping = ColumnMapping {
            columns,
            aliases: fc.aliases,
            age_mode: fc.age.mode.unwrap_or_default(),
            brackets,
            mode: cli.mode.or(fc.mode).unwrap_or_default(),
        };

        let montecarlo = MonteCarloConfig {
            enabled: cli.max_gri.or(fc.montecarlo.enabled).unwrap_or(false),
            iterations: cli.iterations.or(fc.montecarlo.iterations).unwrap_or(DEFAULT_ITERATIONS),
            seed: cli.seed.or(fc.montecarlo.seed),
        };
        if montecarlo.iterations == 0 {
            bail!("iterations must be at least 1");
        }
        if let Some(weights) = &fc.aggregate_weights {
            if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
                bail!("aggregate weights must be finite and non-negative");
            }
        }
        let countries = cli.countries.or(fc.countries);
        if countries.as_ref().is_some_and(|c| c.is_empty()) {
            bail!("country filter is empty");
        }

        Ok(Self {
            survey: cli.survey.or(rebase(&base, fc.survey)),
            survey_id: cli.survey_id.or(fc.survey_id),
            benchmark_dir: cli.benchmark_dir.or(rebase(&base, fc.benchmark_dir)),
            rollup: cli.rollup.or(rebase(&base, fc.rollup)),
            registry: cli.registry.or(rebase(&base, fc.registry)),
            out_dir: cli.out_dir.or(rebase(&base, fc.out_dir)),
            countries,
            formats: cli.formats.or(file_formats),
            mapping,
            montecarlo,
            aggregate_weights: fc.aggregate_weights,
        })
    }

    /// Picks and announces a random seed when none was configured.
    pub fn ensure_seed(&mut self) -> u64 {
        match self.montecarlo.seed {
            Some(seed) => seed,
            None => {
                let seed: u64 = rand::random();
                eprintln!("seed: {seed} (chosen at random; pass --seed {seed} to reproduce)");
                self.montecarlo.seed = Some(seed);
                seed
            }
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn formats_or(&self, default: Format) -> Vec<Format> {
        self.formats.clone().unwrap_or_else(|| vec![default])
    }

    pub fn require_benchmark_dir(&self) -> Result<&Path> {
        self.benchmark_dir
            .as_deref()
            .context("no benchmark directory (set benchmark_dir in the config or pass --benchmarks)")
    }

    pub fn require_survey(&self) -> Result<&Path> {
        self.survey.as_deref().context("no survey file (set survey in the config or pass --survey)")
    }
}

/// Maps every known axis whose name (or `age` for age groups) is a survey column.
pub fn detect_columns(survey: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(survey)
        .with_context(|| format!("reading survey header {}", survey.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().find(|h| h.trim().eq_ignore_ascii_case(name)).map(str::to_string);
    let mut columns = BTreeMap::new();
    for axis in KNOWN_AXES {
        let found = find(axis).or_else(|| if axis == AGE_GROUP { find("age") } else { None });
        if let Some(column) = found {
            columns.insert(axis.to_string(), column);
        }
    }
    Ok(columns)
}
