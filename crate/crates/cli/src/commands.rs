use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gri_core::benchmarks::{
    load_benchmark, BenchmarkSchema, BenchmarkSuite, DimensionRegistry, GeoRollup, QuarantinedRow,
    RegistryEntry,
};
use gri_core::metrics::{gri, tvd};
use gri_core::montecarlo;
use gri_core::scorecard::{
    compare_waves, compute_scorecard, dimension_pair, render, render_comparison, render_heatmap,
    segment_deviations, Format, MonteCarloOptions, Scorecard, ScorecardOptions, SegmentDeviation,
    TOOL_VERSION,
};
use gri_core::survey::{load_survey, IngestContext, SurveyMicrodata};
use gri_core::Error;
use serde::Serialize;

use crate::config::{detect_columns, RunConfig};

const OK: u8 = 0;
const FATAL: u8 = 1;
const PARTIAL: u8 = 2;

/// Writes through a temp file in the target directory so a failed run never
/// leaves a truncated output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit(cfg: &RunConfig, stem: &str, format: Format, bytes: &[u8]) -> Result<()> {
    match &cfg.out_dir {
        Some(dir) => {
            let path: PathBuf = dir.join(format!("{stem}.{}", format.extension()));
            write_atomic(&path, bytes)?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn skip(format: Format, command: &str) {
    eprintln!("warning: {} output is not available for {command}; skipped", format.name());
}

fn load_rollup(cfg: &RunConfig) -> Result<GeoRollup> {
    match &cfg.rollup {
        Some(path) => Ok(GeoRollup::load(path)?),
        None => Ok(GeoRollup::m49()),
    }
}

fn load_suite(cfg: &RunConfig, require_all: bool) -> Result<BenchmarkSuite> {
    let rollup = load_rollup(cfg)?;
    let dir = cfg.require_benchmark_dir()?;
    let tables = BenchmarkSuite::load_tables(dir, &rollup)?;
    for table in tables.values() {
        for warning in &table.warnings {
            eprintln!("warning: {}: {warning}", table.path.display());
        }
    }
    let registry = match &cfg.registry {
        Some(path) => DimensionRegistry::load(path)?,
        None => DimensionRegistry::default_layout(),
    };
    if require_all {
        registry.require_tables(&tables)?;
    }
    let suite = BenchmarkSuite::new(tables, rollup, registry)?;
    Ok(match &cfg.countries {
        Some(countries) => suite.with_country_filter(countries)?,
        None => suite,
    })
}

fn registry_entry<'a>(suite: &'a BenchmarkSuite, dimension: &str) -> Result<&'a RegistryEntry> {
    suite.registry.get(dimension).ok_or_else(|| {
        anyhow::Error::new(Error::UnknownDimension(dimension.to_string()))
            .context(format!("known dimensions: {}", suite.registry.names().join(", ")))
    })
}

/// Fills in the column mapping from the survey header when none was configured.
fn resolve_columns(cfg: &mut RunConfig) -> Result<()> {
    if cfg.mapping.columns.is_empty() {
        let survey = cfg.require_survey()?.to_path_buf();
        cfg.mapping.columns = detect_columns(&survey)?;
    }
    Ok(())
}

fn read_survey(cfg: &RunConfig, suite: &BenchmarkSuite) -> Result<SurveyMicrodata> {
    let path = cfg.require_survey()?;
    let ctx = IngestContext::new(&suite.rollup).with_domains(suite.axis_domains());
    let mut data = load_survey(path, &cfg.mapping, &ctx)?;
    data.id = match &cfg.survey_id {
        Some(id) => id.clone(),
        None => path.file_stem().map_or_else(|| data.id.clone(), |s| s.to_string_lossy().into_owned()),
    };
    for (reason, count) in &data.dropped {
        eprintln!("dropped {count} respondents: {reason}");
    }
    Ok(data)
}

pub fn score(mut cfg: RunConfig) -> Result<u8> {
    let max_gri = if cfg.montecarlo.enabled {
        Some(MonteCarloOptions { iterations: cfg.montecarlo.iterations, seed: cfg.ensure_seed() })
    } else {
        None
    };
    let suite = load_suite(&cfg, true)?;
    resolve_columns(&mut cfg)?;
    let digest = cfg.digest();
    let survey = read_survey(&cfg, &suite)?;
    let options = ScorecardOptions {
        max_gri,
        aggregate_weights: cfg.aggregate_weights.clone(),
        config_digest: Some(digest),
    };
    let card = compute_scorecard(&survey, &suite, &options)?;
    for format in cfg.formats_or(Format::Json) {
        emit(&cfg, "scorecard", format, &render(&card, format)?)?;
    }
    for outcome in &card.dimensions {
        if let gri_core::scorecard::DimensionOutcome::Failed { dimension, error } = outcome {
            eprintln!("dimension {dimension} failed: {error}");
        }
    }
    let failed = card.failed_count();
    eprintln!("scored {} of {} dimensions", card.dimensions.len() - failed, card.dimensions.len());
    Ok(if failed > 0 { PARTIAL } else { OK })
}

#[derive(Debug, Serialize)]
struct MaxGriRecord<'a> {
    dimension: &'a str,
    mean: f64,
    std: f64,
    n: u64,
    #[serde(rename = "T")]
    iterations: usize,
    seed: u64,
    benchmark_vintage: &'a str,
    tool_version: &'a str,
    config_digest: &'a str,
}

pub fn max_gri(mut cfg: RunConfig, dimension: &str, grid: &[u64]) -> Result<u8> {
    let seed = cfg.ensure_seed();
    let iterations = cfg.montecarlo.iterations;
    let suite = load_suite(&cfg, false)?;
    let entry = registry_entry(&suite, dimension)?;
    let benchmark = suite.benchmark_for(entry)?;
    let vintage = suite.tables[&entry.source].vintage.clone();
    let digest = cfg.digest();

    let mut records = Vec::with_capacity(grid.len());
    for &n in grid {
        let estimate = montecarlo::max_gri(&benchmark, n, iterations, seed)?;
        records.push(MaxGriRecord {
            dimension,
            mean: estimate.mean,
            std: estimate.std,
            n,
            iterations,
            seed,
            benchmark_vintage: &vintage,
            tool_version: TOOL_VERSION,
            config_digest: &digest,
        });
    }

    let stem = format!("max_gri_{dimension}");
    for format in cfg.formats_or(Format::Json) {
        let bytes = match format {
            Format::Json => {
                let mut s = if records.len() == 1 {
                    serde_json::to_string_pretty(&records[0])?
                } else {
                    serde_json::to_string_pretty(&records)?
                };
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => {
                let mut header = format!(
                    "# tool_version: {TOOL_VERSION}\n# config_digest: {digest}\n# benchmark_vintage: {vintage}\n"
                )
                .into_bytes();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["dimension", "n", "mean", "std", "T", "seed"])?;
                for r in &records {
                    w.write_record([
                        r.dimension.to_string(),
                        r.n.to_string(),
                        r.mean.to_string(),
                        r.std.to_string(),
                        r.iterations.to_string(),
                        r.seed.to_string(),
                    ])?;
                }
                header.extend(w.into_inner()?);
                header
            }
            Format::Table => {
                let mut out = format!(
                    "max GRI for {dimension} (T = {iterations}, seed {seed}, benchmark vintage {vintage})\n"
                );
                let _ = writeln!(out, "{:>8}  {:>8}  {:>8}", "n", "mean", "std");
                for r in &records {
                    let _ = writeln!(out, "{:>8}  {:>8.3}  {:>8.4}", r.n, r.mean, r.std);
                }
                out.into_bytes()
            }
            Format::SvgHeatmap => {
                skip(format, "max-gri");
                continue;
            }
        };
        emit(&cfg, &stem, format, &bytes)?;
    }
    Ok(OK)
}

#[derive(Debug, Serialize)]
struct SegmentsReport<'a> {
    tool_version: &'a str,
    config_digest: &'a str,
    survey: &'a str,
    dimension: &'a str,
    benchmark_vintage: &'a str,
    n: u64,
    gri: f64,
    tvd: f64,
    strata: usize,
    top_k: usize,
    segments: &'a [SegmentDeviation],
}

pub fn segments(mut cfg: RunConfig, dimension: &str, top_k: usize) -> Result<u8> {
    let suite = load_suite(&cfg, false)?;
    let entry = registry_entry(&suite, dimension)?;
    resolve_columns(&mut cfg)?;
    let digest = cfg.digest();
    let survey = read_survey(&cfg, &suite)?;
    let (pair, _, provenance) = dimension_pair(&survey, &suite, entry)?;
    let ranked = segment_deviations(&pair, top_k)?;
    let vintage = provenance.vintage.unwrap_or_default();
    let report = SegmentsReport {
        tool_version: TOOL_VERSION,
        config_digest: &digest,
        survey: &survey.id,
        dimension,
        benchmark_vintage: &vintage,
        n: pair.n(),
        gri: gri(&pair).value,
        tvd: tvd(&pair).value,
        strata: ranked.ranked.len(),
        top_k,
        segments: ranked.top(),
    };

    let header = format!(
        "# tool_version: {TOOL_VERSION}\n# config_digest: {digest}\n# benchmark_vintage: {vintage}\n"
    );
    let stem = format!("segments_{dimension}");
    for format in cfg.formats_or(Format::Table) {
        let bytes = match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&report)?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => {
                let mut out = header.clone().into_bytes();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["rank", "stratum", "p", "q", "delta", "tvd_contribution", "direction"])?;
                for (i, s) in report.segments.iter().enumerate() {
                    w.write_record([
                        (i + 1).to_string(),
                        s.stratum.to_string(),
                        s.p.to_string(),
                        s.q.to_string(),
                        s.delta.to_string(),
                        s.tvd_contribution.to_string(),
                        s.direction.label().to_string(),
                    ])?;
                }
                out.extend(w.into_inner()?);
                out
            }
            Format::Table => segments_table(&header, &report).into_bytes(),
            Format::SvgHeatmap => {
                skip(format, "segments");
                continue;
            }
        };
        emit(&cfg, &stem, format, &bytes)?;
    }
    Ok(OK)
}

fn segments_table(header: &str, report: &SegmentsReport<'_>) -> String {
    let mut out = header.to_string();
    let _ = writeln!(
        out,
        "{} on {}: N = {}, GRI {:.4}, TVD {:.4}; top {} of {} strata",
        report.survey,
        report.dimension,
        report.n,
        report.gri,
        report.tvd,
        report.segments.len(),
        report.strata
    );
    let width = report.segments.iter().map(|s| s.stratum.to_string().chars().count()).max().unwrap_or(7).max(7);
    let _ = writeln!(
        out,
        "{:>4}  {:<width$}  {:>8}  {:>8}  {:>9}  {:>8}  direction",
        "rank", "stratum", "p", "q", "delta", "share"
    );
    for (i, s) in report.segments.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>8.4}  {:>8.4}  {:>+9.4}  {:>8.4}  {}",
            i + 1,
            s.stratum.to_string(),
            s.p,
            s.q,
            s.delta,
            s.tvd_contribution,
            s.direction.label()
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct TableReport {
    schema: BenchmarkSchema,
    path: PathBuf,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vintage: Option<String>,
    strata: usize,
    expected_strata: usize,
    total_population: f64,
    quarantined_population: f64,
    quarantine: Vec<QuarantinedRow>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    tool_version: &'static str,
    config_digest: String,
    rollup_countries: usize,
    rollup_vintage: Option<String>,
    registry: Vec<String>,
    tables: Vec<TableReport>,
}

pub fn validate(cfg: RunConfig) -> Result<u8> {
    let rollup = load_rollup(&cfg)?;
    let dir = cfg.require_benchmark_dir()?;
    if !dir.is_dir() {
        anyhow::bail!("benchmark directory {} not found", dir.display());
    }
    let registry = match &cfg.registry {
        Some(path) => DimensionRegistry::load(path)?,
        None => DimensionRegistry::default_layout(),
    };
    let mut tables = Vec::new();
    for schema in BenchmarkSchema::ALL {
        let path = dir.join(schema.file_name());
        let mut report = TableReport {
            schema,
            path: path.clone(),
            status: "ok",
            error: None,
            source: None,
            vintage: None,
            strata: 0,
            expected_strata: schema.expected_strata(),
            total_population: 0.0,
            quarantined_population: 0.0,
            quarantine: Vec::new(),
            warnings: Vec::new(),
        };
        if !path.is_file() {
            report.status = "missing";
            if registry.entries().iter().any(|e| e.source == schema) {
                report.status = "error";
                report.error = Some("file not found but required by the registry".into());
            }
        } else {
            match load_benchmark(&path, schema, &rollup) {
                Ok(table) => {
                    report.source = Some(table.source_id.clone());
                    report.vintage = Some(table.vintage.clone());
                    report.strata = table.stratum_count();
                    report.total_population = table.total_population();
                    report.quarantined_population = table.quarantined_population();
                    report.quarantine = table.quarantine.clone();
                    report.warnings = table.warnings.clone();
                    if !report.quarantine.is_empty() {
                        report.status = "quarantine";
                    }
                }
                Err(e) => {
                    report.status = "error";
                    report.error = Some(e.to_string());
                }
            }
        }
        tables.push(report);
    }
    let report = ValidationReport {
        tool_version: TOOL_VERSION,
        config_digest: cfg.digest(),
        rollup_countries: rollup.len(),
        rollup_vintage: rollup.provenance().vintage.clone(),
        registry: registry.names().into_iter().map(String::from).collect(),
        tables,
    };
    for format in cfg.formats_or(Format::Table) {
        let bytes = match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&report)?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Table => validation_table(&report).into_bytes(),
            Format::Csv => validation_csv(&report)?,
            Format::SvgHeatmap => {
                skip(format, "validate");
                continue;
            }
        };
        emit(&cfg, "validate", format, &bytes)?;
    }
    for t in &report.tables {
        if let Some(e) = &t.error {
            eprintln!("error: {}: {e}", t.schema);
        }
    }
    Ok(if report.tables.iter().any(|t| t.status == "error") {
        FATAL
    } else if report.tables.iter().any(|t| t.status == "quarantine") {
        PARTIAL
    } else {
        OK
    })
}

fn validation_csv(report: &ValidationReport) -> Result<Vec<u8>> {
    let mut out =
        format!("# tool_version: {}\n# config_digest: {}\n", report.tool_version, report.config_digest).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "schema",
        "status",
        "source",
        "vintage",
        "strata",
        "expected_strata",
        "total_population",
        "quarantined_rows",
        "quarantined_population",
        "error",
    ])?;
    for t in &report.tables {
        w.write_record([
            t.schema.name().to_string(),
            t.status.to_string(),
            t.source.clone().unwrap_or_default(),
            t.vintage.clone().unwrap_or_default(),
            t.strata.to_string(),
            t.expected_strata.to_string(),
            t.total_population.to_string(),
            t.quarantine.len().to_string(),
            t.quarantined_population.to_string(),
            t.error.clone().unwrap_or_default(),
        ])?;
    }
    out.extend(w.into_inner()?);
    Ok(out)
}

fn validation_table(report: &ValidationReport) -> String {
    let mut out = format!("# tool_version: {}\n# config_digest: {}\n", report.tool_version, report.config_digest);
    let _ = writeln!(
        out,
        "rollup: {} countries, vintage {}",
        report.rollup_countries,
        report.rollup_vintage.as_deref().unwrap_or("unknown")
    );
    let _ = writeln!(out, "registry: {} dimensions", report.registry.len());
    for t in &report.tables {
        let _ = write!(out, "{}: {}", t.schema, t.status);
        if t.status == "ok" || t.status == "quarantine" {
            let _ = write!(
                out,
                ", K = {} (expected about {}), population {:.0}, vintage {}, source {}",
                t.strata,
                t.expected_strata,
                t.total_population,
                t.vintage.as_deref().unwrap_or(""),
                t.source.as_deref().unwrap_or("")
            );
        }
        if let Some(e) = &t.error {
            let _ = write!(out, ": {e}");
        }
        out.push('\n');
        for q in &t.quarantine {
            let _ = writeln!(
                out,
                "  quarantined line {}: country {:?} (population {})",
                q.line, q.country, q.population
            );
        }
        for w in &t.warnings {
            if !w.contains("quarantined") {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
    }
    out
}

pub fn compare(cfg: RunConfig, paths: &[PathBuf]) -> Result<u8> {
    let cards = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Scorecard::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare_waves(&cards)?;
    for format in cfg.formats_or(Format::Table) {
        let bytes = match format {
            Format::SvgHeatmap => render_heatmap(&cards.iter().collect::<Vec<_>>()).into_bytes(),
            other => render_comparison(&comparison, other)?,
        };
        emit(&cfg, "comparison", format, &bytes)?;
    }
    Ok(OK)
}
