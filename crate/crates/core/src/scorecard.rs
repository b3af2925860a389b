//! Per-dimension scorecards, segment decomposition, and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{BenchmarkSuite, QuarantinedRow, RegistryEntry};
use crate::distributions::{align, AlignedPair, StratumKey};
use crate::error::{Error, Result};
use crate::metrics::{
    design_effect, divergence_diagnostics, diversity_score, gri, sri, tvd, DesignEffectReport,
    DivergenceDiagnostics, InterpretationBand,
};
use crate::montecarlo::{self, EfficiencyRatio, MaxGriEstimate, RNG_ALGORITHM};
use crate::survey::{to_sample_distribution, DimensionTally, SurveyMicrodata};

/// Version of the JSON scorecard layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataCounts {
    pub k_benchmark: usize,
    pub k_sample: usize,
    pub k_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub dimension: String,
    /// Respondents usable for this dimension.
    pub n: u64,
    pub gri: f64,
    pub tvd: f64,
    /// `None` when no benchmark stratum exceeds 1/N.
    pub diversity: Option<f64>,
    pub sri: f64,
    pub band: InterpretationBand,
    pub max_gri: Option<MaxGriEstimate>,
    pub efficiency: Option<EfficiencyRatio>,
    /// `None` when sample and benchmark share no stratum.
    pub design_effect: Option<DesignEffectReport>,
    pub divergence: DivergenceDiagnostics,
    pub strata: StrataCounts,
    pub tally: DimensionTally,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark_vintage: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub benchmark_notes: Vec<String>,
}

/// A registry dimension either scored or recorded as failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum DimensionOutcome {
    Scored(DimensionResult),
    Failed { dimension: String, error: String },
}

impl DimensionOutcome {
    pub fn dimension(&self) -> &str {
        match self {
            DimensionOutcome::Scored(r) => &r.dimension,
            DimensionOutcome::Failed { dimension, .. } => dimension,
        }
    }

    pub fn result(&self) -> Option<&DimensionResult> {
        match self {
            DimensionOutcome::Scored(r) => Some(r),
            DimensionOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyMeta {
    pub id: String,
    pub n: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub survey_dropped: BTreeMap<String, u64>,
    pub survey_quarantine: BTreeMap<String, BTreeMap<String, u64>>,
    pub benchmark_quarantine: BTreeMap<String, Vec<QuarantinedRow>>,
}

/// Weighted mean of dimension GRIs. Only produced when weights are supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScore {
    pub weights: BTreeMap<String, f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub schema_version: u32,
    pub survey: SurveyMeta,
    pub benchmark_vintages: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country_filter: Option<Vec<String>>,
    pub dimensions: Vec<DimensionOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateScore>,
    pub provenance: RunProvenance,
}

impl Scorecard {
    pub fn dimension(&self, name: &str) -> Option<&DimensionOutcome> {
        self.dimensions.iter().find(|d| d.dimension() == name)
    }

    pub fn failed_count(&self) -> usize {
        self.dimensions.iter().filter(|d| d.result().is_none()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScorecardOptions {
    /// Computes max GRI and efficiency when set.
    pub max_gri: Option<MonteCarloOptions>,
    /// Disabled unless weights are given; there are no default weights.
    pub aggregate_weights: Option<BTreeMap<String, f64>>,
    pub config_digest: Option<String>,
}

fn score_pair(
    pair: &AlignedPair,
    tally: DimensionTally,
    options: &ScorecardOptions,
    vintage: Option<String>,
    notes: Vec<String>,
) -> Result<DimensionResult> {
    let gri_score = gri(pair);
    let max_gri = match options.max_gri {
        Some(mc) => {
            let (mean, std) = montecarlo::max_gri_vector(pair.q(), pair.n(), mc.iterations, mc.seed)?;
            Some(MaxGriEstimate {
                dimension: pair.spec().name().to_string(),
                mean,
                std,
                n: pair.n(),
                iterations: mc.iterations,
                seed: mc.seed,
            })
        }
        None => None,
    };
    let efficiency = max_gri
        .as_ref()
        .map(|m| montecarlo::efficiency(gri_score.value, m))
        .transpose()?;
    let diversity = match diversity_score(pair) {
        Ok(s) => Some(s.value),
        Err(Error::UndefinedDiversity) => None,
        Err(e) => return Err(e),
    };
    let design_effect = match design_effect(pair) {
        Ok(r) => Some(r),
        Err(Error::NoOverlap) => None,
        Err(e) => return Err(e),
    };
    let strata = StrataCounts {
        k_benchmark: pair.q().iter().filter(|&&q| q > 0.0).count(),
        k_sample: pair.p().iter().filter(|&&p| p > 0.0).count(),
        k_overlap: pair.iter().filter(|(_, p, q)| *p > 0.0 && *q > 0.0).count(),
    };
    Ok(DimensionResult {
        dimension: pair.spec().name().to_string(),
        n: pair.n(),
        gri: gri_score.value,
        tvd: tvd(pair).value,
        diversity,
        sri: sri(pair).value,
        band: InterpretationBand::for_value(gri_score.value)?,
        max_gri,
        efficiency,
        design_effect,
        divergence: divergence_diagnostics(pair),
        strata,
        tally,
        benchmark_vintage: vintage,
        benchmark_notes: notes,
    })
}

/// Aligned sample/benchmark pair and usable-N tally for one registry dimension.
pub fn dimension_pair(
    survey: &SurveyMicrodata,
    suite: &BenchmarkSuite,
    entry: &RegistryEntry,
) -> Result<(AlignedPair, DimensionTally, crate::distributions::Provenance)> {
    let benchmark = suite.benchmark_for(entry)?;
    let (sample, tally) = to_sample_distribution(survey, &entry.spec, &suite.rollup)?;
    let pair = align(&sample, &benchmark)?;
    Ok((pair, tally, benchmark.provenance().clone()))
}

/// Scores every registry dimension. A failing dimension becomes a
/// [`DimensionOutcome::Failed`] entry instead of aborting the run.
pub fn compute_scorecard(
    survey: &SurveyMicrodata,
    suite: &BenchmarkSuite,
    options: &ScorecardOptions,
) -> Result<Scorecard> {
    let dimensions: Vec<DimensionOutcome> = suite
        .registry
        .entries()
        .iter()
        .map(|entry| {
            dimension_pair(survey, suite, entry)
                .and_then(|(pair, tally, provenance)| {
                    score_pair(&pair, tally, options, provenance.vintage, provenance.notes)
                })
                .map_or_else(
                    |e| DimensionOutcome::Failed {
                        dimension: entry.spec.name().to_string(),
                        error: e.to_string(),
                    },
                    DimensionOutcome::Scored,
                )
        })
        .collect();

    let aggregate = match &options.aggregate_weights {
        Some(weights) => Some(aggregate(&dimensions, weights)?),
        None => None,
    };
    let benchmark_quarantine = suite
        .tables
        .values()
        .filter(|t| !t.quarantine.is_empty())
        .map(|t| (t.source_id.clone(), t.quarantine.clone()))
        .collect();
    Ok(Scorecard {
        schema_version: SCHEMA_VERSION,
        survey: SurveyMeta { id: survey.id.clone(), n: survey.n_total, digest: survey.digest.clone() },
        benchmark_vintages: suite.vintages(),
        country_filter: suite.country_filter.as_ref().map(|c| c.iter().cloned().collect()),
        dimensions,
        aggregate,
        provenance: RunProvenance {
            tool_version: TOOL_VERSION.to_string(),
            seed: options.max_gri.map(|m| m.seed),
            iterations: options.max_gri.map(|m| m.iterations),
            rng: options.max_gri.map(|_| RNG_ALGORITHM.to_string()),
            config_digest: options.config_digest.clone(),
            survey_dropped: survey.dropped.clone(),
            survey_quarantine: survey.quarantined_values.clone(),
            benchmark_quarantine,
        },
    })
}

fn aggregate(dimensions: &[DimensionOutcome], weights: &BTreeMap<String, f64>) -> Result<AggregateScore> {
    let mut total_weight = 0.0;
    let mut sum = 0.0;
    for (name, &w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeight { key: name.clone(), weight: w });
        }
        let result = dimensions
            .iter()
            .find(|d| d.dimension() == name)
            .ok_or_else(|| Error::UnknownDimension(name.clone()))?;
        if let Some(r) = result.result() {
            total_weight += w;
            sum += w * r.gri;
        }
    }
    if total_weight <= 0.0 {
        return Err(Error::InvalidParameters("aggregate weights cover no scored dimension".into()));
    }
    Ok(AggregateScore { weights: weights.clone(), value: sum / total_weight })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Over,
    Under,
    /// Benchmark stratum with no sample mass.
    Missing,
    Matched,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Over => "over",
            Direction::Under => "under",
            Direction::Missing => "missing",
            Direction::Matched => "matched",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDeviation {
    pub stratum: StratumKey,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    /// `|p − q| / 2`; these sum to the pair's TVD.
    pub tvd_contribution: f64,
    pub direction: Direction,
}

/// All strata ranked by TVD contribution, with a `top_k` view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDeviations {
    pub dimension: String,
    pub ranked: Vec<SegmentDeviation>,
    pub top_k: usize,
}

impl SegmentDeviations {
    pub fn top(&self) -> &[SegmentDeviation] {
        &self.ranked[..self.top_k.min(self.ranked.len())]
    }

    pub fn total_contribution(&self) -> f64 {
        self.ranked.iter().map(|s| s.tvd_contribution).sum()
    }
}

/// Ranks strata by contribution, largest first; ties keep key order.
pub fn segment_deviations(pair: &AlignedPair, top_k: usize) -> Result<SegmentDeviations> {
    if top_k == 0 {
        return Err(Error::InvalidParameters("top_k must be at least 1".into()));
    }
    let mut ranked: Vec<SegmentDeviation> = pair
        .iter()
        .map(|(key, p, q)| {
            let direction = if p == 0.0 && q > 0.0 {
                Direction::Missing
            } else if p > q {
                Direction::Over
            } else if p < q {
                Direction::Under
            } else {
                Direction::Matched
            };
            SegmentDeviation {
                stratum: key.clone(),
                p,
                q,
                delta: p - q,
                tvd_contribution: (p - q).abs() / 2.0,
                direction,
            }
        })
        .collect();
    // Stable sort keeps lexicographic key order among ties.
    ranked.sort_by(|a, b| b.tvd_contribution.total_cmp(&a.tvd_contribution));
    Ok(SegmentDeviations { dimension: pair.spec().name().to_string(), ranked, top_k })
}

/// Output formats for scorecards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    Json,
    Csv,
    SvgHeatmap,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Json => "json",
            Format::Csv => "csv",
            Format::SvgHeatmap => "svg-heatmap",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Table => "txt",
            Format::Json => "json",
            Format::Csv => "csv",
            Format::SvgHeatmap => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" | "txt" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg-heatmap" | "svg" | "heatmap" => Ok(Format::SvgHeatmap),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Serializes one scorecard.
pub fn render(scorecard: &Scorecard, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => Ok(scorecard.to_json()?.into_bytes()),
        Format::Csv => render_csv(scorecard),
        Format::Table => Ok(render_table(scorecard).into_bytes()),
        Format::SvgHeatmap => Ok(render_heatmap(&[scorecard]).into_bytes()),
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub const CSV_COLUMNS: [&str; 11] = [
    "gri",
    "diversity",
    "sri",
    "max_gri_mean",
    "max_gri_std",
    "efficiency",
    "deff",
    "coverage_f",
    "n_eff",
    "precision_retained",
    "band",
];

/// `# key: value` lines naming the tool version, config digest and vintages.
pub fn provenance_header(scorecard: &Scorecard) -> String {
    let mut out = format!("# tool_version: {}\n", scorecard.provenance.tool_version);
    if let Some(digest) = &scorecard.provenance.config_digest {
        let _ = writeln!(out, "# config_digest: {digest}");
    }
    for (source, vintage) in &scorecard.benchmark_vintages {
        let _ = writeln!(out, "# benchmark {source}: {vintage}");
    }
    out
}

fn render_csv(scorecard: &Scorecard) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(provenance_header(scorecard).into_bytes());
    let mut header = vec!["dimension", "n"];
    header.extend(CSV_COLUMNS);
    header.push("error");
    w.write_record(&header)?;
    for outcome in &scorecard.dimensions {
        let row: Vec<String> = match outcome {
            DimensionOutcome::Scored(r) => {
                let deff = r.design_effect.as_ref();
                vec![
                    r.dimension.clone(),
                    r.n.to_string(),
                    r.gri.to_string(),
                    opt(r.diversity),
                    r.sri.to_string(),
                    opt(r.max_gri.as_ref().map(|m| m.mean)),
                    opt(r.max_gri.as_ref().map(|m| m.std)),
                    opt(r.efficiency.map(|e| e.ratio)),
                    opt(deff.map(|d| d.deff)),
                    opt(deff.map(|d| d.coverage_fraction)),
                    opt(deff.map(|d| d.n_eff)),
                    opt(deff.map(|d| d.precision_retained)),
                    r.band.label().to_string(),
                    String::new(),
                ]
            }
            DimensionOutcome::Failed { dimension, error } => {
                let mut row = vec![dimension.clone()];
                row.extend(std::iter::repeat_n(String::new(), CSV_COLUMNS.len() + 1));
                row.push(error.clone());
                row
            }
        };
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

fn fixed(value: Option<f64>, digits: usize) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn render_table(scorecard: &Scorecard) -> String {
    let mut out = provenance_header(scorecard);
    let _ = writeln!(out, "survey {} (N = {})", scorecard.survey.id, scorecard.survey.n);
    if let Some(filter) = &scorecard.country_filter {
        let _ = writeln!(out, "country filter: {} countries", filter.len());
    }
    let _ = writeln!(out);
    let header = [
        "dimension", "N", "GRI", "band", "diversity", "SRI", "max GRI", "efficiency", "deff", "N_eff", "f",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for outcome in &scorecard.dimensions {
        match outcome {
            DimensionOutcome::Scored(r) => {
                let deff = r.design_effect.as_ref();
                rows.push(vec![
                    r.dimension.clone(),
                    r.n.to_string(),
                    format!("{:.3}", r.gri),
                    r.band.label().to_string(),
                    fixed(r.diversity, 3),
                    format!("{:.3}", r.sri),
                    fixed(r.max_gri.as_ref().map(|m| m.mean), 3),
                    fixed(r.efficiency.map(|e| e.ratio), 3),
                    fixed(deff.map(|d| d.deff), 3),
                    fixed(deff.map(|d| d.n_eff), 1),
                    fixed(deff.map(|d| d.coverage_fraction), 3),
                ]);
            }
            DimensionOutcome::Failed { dimension, error } => {
                let mut row = vec![dimension.clone(), format!("error: {error}")];
                row.resize(header.len(), String::new());
                rows.push(row);
            }
        }
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .filter(|r| !r[1].starts_with("error: ") || c != 1)
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in &rows {
        if row[1].starts_with("error: ") {
            let _ = writeln!(out, "{:<w$}  {}", row[0], row[1], w = widths[0]);
            continue;
        }
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 || c == 3 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Fill color of a band in the heatmap.
pub fn band_color(band: InterpretationBand) -> &'static str {
    match band {
        InterpretationBand::Excellent => "#1a9641",
        InterpretationBand::Good => "#a6d96a",
        InterpretationBand::Moderate => "#fdae61",
        InterpretationBand::Poor => "#d7191c",
    }
}

const FAILED_COLOR: &str = "#bdbdbd";
const LABEL_WIDTH: usize = 220;
const CELL_WIDTH: usize = 96;
const CELL_HEIGHT: usize = 28;
const TOP: usize = 56;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// GRI heatmap: one row per dimension (in the first scorecard's order), one
/// column per scorecard.
pub fn render_heatmap(scorecards: &[&Scorecard]) -> String {
    let dims: Vec<&str> = scorecards
        .first()
        .map(|s| s.dimensions.iter().map(|d| d.dimension()).collect())
        .unwrap_or_default();
    let cols = scorecards.len();
    let grid_bottom = TOP + dims.len() * CELL_HEIGHT;
    let width = LABEL_WIDTH + cols.max(1) * CELL_WIDTH + 20;
    let height = grid_bottom + 90;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="10" y="20" font-size="15" font-weight="bold">GRI scorecard</text>"#);
    for (c, card) in scorecards.iter().enumerate() {
        let x = LABEL_WIDTH + c * CELL_WIDTH + CELL_WIDTH / 2;
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-weight="bold">{}</text>"#,
            TOP - 8,
            escape(&card.survey.id)
        );
    }
    for (r, dim) in dims.iter().enumerate() {
        let y = TOP + r * CELL_HEIGHT;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 8,
            y + CELL_HEIGHT / 2 + 4,
            escape(dim)
        );
        for (c, card) in scorecards.iter().enumerate() {
            let x = LABEL_WIDTH + c * CELL_WIDTH;
            let (fill, text, band) = match card.dimension(dim).and_then(|d| d.result()) {
                Some(result) => {
                    (band_color(result.band), format!("{:.3}", result.gri), result.band.label())
                }
                None => (FAILED_COLOR, "n/a".to_string(), "failed"),
            };
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{CELL_WIDTH}" height="{CELL_HEIGHT}" fill="{fill}" stroke="white" data-band="{band}"/>"#
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{text}</text>"#,
                x + CELL_WIDTH / 2,
                y + CELL_HEIGHT / 2 + 4
            );
        }
    }
    let legend_y = grid_bottom + 20;
    for (i, band) in InterpretationBand::ALL.iter().enumerate() {
        let (lo, hi) = band.bounds();
        let x = 10 + i * 150;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{legend_y}" width="14" height="14" fill="{}"/>"#,
            band_color(*band)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{} ({lo:.1}–{hi:.1})</text>"#,
            x + 20,
            legend_y + 11,
            band.label()
        );
    }
    let mut vintages: BTreeMap<&str, &str> = BTreeMap::new();
    for card in scorecards {
        for (source, vintage) in &card.benchmark_vintages {
            vintages.insert(source, vintage);
        }
    }
    let footer: Vec<String> = vintages.iter().map(|(s, v)| format!("{s} {v}")).collect();
    let mut digests: Vec<&str> =
        scorecards.iter().filter_map(|c| c.provenance.config_digest.as_deref()).collect();
    digests.dedup();
    let digest = digests.iter().map(|d| &d[..d.len().min(12)]).collect::<Vec<_>>().join(", ");
    let _ = writeln!(
        svg,
        r##"<text x="10" y="{}" font-size="10" fill="#555">benchmarks: {} · gri {TOOL_VERSION}{}</text>"##,
        legend_y + 44,
        escape(&footer.join(", ")),
        if digest.is_empty() { String::new() } else { format!(" · config {digest}") }
    );
    svg.push_str("</svg>\n");
    svg
}

/// One dimension's GRI across waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSeries {
    pub dimension: String,
    pub values: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// `max − min` over scored waves.
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveComparison {
    pub waves: Vec<String>,
    pub series: Vec<WaveSeries>,
}

/// Longitudinal GRI table over scorecards sharing one registry.
pub fn compare_waves(scorecards: &[Scorecard]) -> Result<WaveComparison> {
    if scorecards.len() < 2 {
        return Err(Error::TooFewScorecards(scorecards.len()));
    }
    let names: Vec<&str> = scorecards[0].dimensions.iter().map(|d| d.dimension()).collect();
    for card in &scorecards[1..] {
        let other: Vec<&str> = card.dimensions.iter().map(|d| d.dimension()).collect();
        if other != names {
            return Err(Error::RegistryMismatch(format!(
                "{} has {:?}, {} has {:?}",
                scorecards[0].survey.id, names, card.survey.id, other
            )));
        }
    }
    let series = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<Option<f64>> =
                scorecards.iter().map(|c| c.dimensions[i].result().map(|r| r.gri)).collect();
            let scored: Vec<f64> = values.iter().flatten().copied().collect();
            let (mean, min, max) = if scored.is_empty() {
                (None, None, None)
            } else {
                let min = scored.iter().copied().fold(f64::INFINITY, f64::min);
                let max = scored.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (Some(scored.iter().sum::<f64>() / scored.len() as f64), Some(min), Some(max))
            };
            WaveSeries {
                dimension: name.to_string(),
                values,
                mean,
                min,
                max,
                range: min.zip(max).map(|(lo, hi)| hi - lo),
            }
        })
        .collect();
    Ok(WaveComparison { waves: scorecards.iter().map(|c| c.survey.id.clone()).collect(), series })
}

pub fn render_comparison(cmp: &WaveComparison, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(cmp)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["dimension".to_string()];
            header.extend(cmp.waves.iter().cloned());
            header.extend(["mean", "min", "max", "range"].map(String::from));
            w.write_record(&header)?;
            for s in &cmp.series {
                let mut row = vec![s.dimension.clone()];
                row.extend(s.values.iter().map(|v| opt(*v)));
                row.extend([opt(s.mean), opt(s.min), opt(s.max), opt(s.range)]);
                w.write_record(&row)?;
            }
            w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
        }
        Format::Table => {
            let width = cmp.series.iter().map(|s| s.dimension.len()).max().unwrap_or(9).max(9);
            let mut out = format!("{:<width$}", "dimension");
            for wave in &cmp.waves {
                let _ = write!(out, "  {wave:>8}");
            }
            let _ = writeln!(out, "  {:>8}  {:>8}", "mean", "range");
            for s in &cmp.series {
                let _ = write!(out, "{:<width$}", s.dimension);
                for v in &s.values {
                    let _ = write!(out, "  {:>8}", fixed(*v, 3));
                }
                let _ = writeln!(out, "  {:>8}  {:>8}", fixed(s.mean, 3), fixed(s.range, 3));
            }
            Ok(out.into_bytes())
        }
        Format::SvgHeatmap => Err(Error::UnsupportedFormat(
            "svg-heatmap for comparisons (render the scorecards instead)".into(),
        )),
    }
}
