//! The replication grid: datasets per (design, alpha, replicate), paired fits
//! of every model variant, per-replicate records, and the aggregate tables
//! written next to them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bcf::{fit_bcf, BcfConfig, PropensityMode};
use crate::dgp::{generate, Dataset, DgpSpec, Selection};
use crate::hypothesis::{select_and_run, LocationTest, TestReport};
use crate::metrics::{evaluate, RecordKey, ReplicateRecord};
use crate::stats::{derive_seed, mean, sample_sd};
use crate::{Error, Result};

/// Effect-size divisors the designs are defined for.
pub const ALLOWED_ALPHAS: [f64; 3] = [1.0, 2.0, 4.0];
pub const QUICK_REPLICATES: usize = 20;
pub const QUICK_RETAINED: usize = 500;
pub const FULL_REPLICATES: usize = 100;

pub const REPLICATES_FILE: &str = "replicates.csv";
pub const TIMING_FILE: &str = "timing.json";
pub const CONFIG_FILE: &str = "config.json";
const CELLS_DIR: &str = "cells";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// 20 replicates with 500 retained draws.
    Quick,
    /// 100 replicates with the default chain.
    Full,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(Error::Config(format!("unknown profile `{other}`"))),
        }
    }
}

/// Grid and sampler settings for one run. Parsed from a flat TOML document;
/// every key is optional.
///
/// ```toml
/// selections = ["extreme", "slight"]
/// alphas = [4]
/// replicates = 20
/// models = ["no_pi", "est_pi"]
/// master_seed = 7
/// retained = 500
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub selections: Vec<Selection>,
    pub alphas: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub models: Vec<PropensityMode>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub interval_level: f64,
    pub burn_in: Option<usize>,
    pub retained: Option<usize>,
    pub thin: Option<usize>,
    pub mu_trees: Option<usize>,
    pub tau_trees: Option<usize>,
    pub propensity_trees: Option<usize>,
    pub cutpoints: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            selections: Selection::ALL.to_vec(),
            alphas: ALLOWED_ALPHAS.to_vec(),
            n: 250,
            replicates: FULL_REPLICATES,
            models: PropensityMode::ALL.to_vec(),
            master_seed: 2024,
            output_dir: PathBuf::from("results"),
            interval_level: 0.95,
            burn_in: None,
            retained: None,
            thin: None,
            mu_trees: None,
            tau_trees: None,
            propensity_trees: None,
            cutpoints: None,
        }
    }
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter().enumerate().any(|(i, a)| v[..i].contains(a))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn apply_profile(&mut self, profile: Profile) {
        match profile {
            Profile::Quick => {
                self.replicates = QUICK_REPLICATES;
                self.retained = Some(QUICK_RETAINED);
            }
            Profile::Full => {
                self.replicates = FULL_REPLICATES;
                self.retained = None;
            }
        }
    }

    /// Sampler settings with the overrides applied.
    pub fn bcf_config(&self) -> BcfConfig {
        let mut c = BcfConfig {
            interval_level: self.interval_level,
            ..BcfConfig::default()
        };
        let burn_in = self.burn_in.unwrap_or(c.mu.burn_in);
        let retained = self.retained.unwrap_or(c.mu.iterations - c.mu.burn_in);
        c = c.with_chain(burn_in, retained);
        for b in [&mut c.mu, &mut c.tau, &mut c.propensity] {
            if let Some(thin) = self.thin {
                b.thin = thin;
            }
            if let Some(k) = self.cutpoints {
                b.cutpoints_per_feature = k;
            }
        }
        if let Some(m) = self.mu_trees {
            c.mu.num_trees = m;
        }
        if let Some(m) = self.tau_trees {
            c.tau.num_trees = m;
        }
        if let Some(m) = self.propensity_trees {
            c.propensity.num_trees = m;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.selections.is_empty() || has_duplicates(&self.selections) {
            return fail("selections must be a non-empty list without duplicates");
        }
        if self.alphas.is_empty() || has_duplicates(&self.alphas) {
            return fail("alphas must be a non-empty list without duplicates");
        }
        if let Some(a) = self.alphas.iter().find(|a| !ALLOWED_ALPHAS.contains(a)) {
            return Err(Error::Config(format!("alpha {a} is not one of 1, 2, 4")));
        }
        if self.models.is_empty() || has_duplicates(&self.models) {
            return fail("models must be a non-empty list without duplicates");
        }
        if self.replicates == 0 {
            return fail("replicates must be positive");
        }
        if self.n < 2 {
            return fail("n must be at least 2");
        }
        if self.retained == Some(0) {
            return fail("retained must be positive");
        }
        self.bcf_config().validate()
    }

    /// Grid cells in run order.
    pub fn cells(&self) -> Vec<(Selection, f64)> {
        self.selections
            .iter()
            .flat_map(|&s| self.alphas.iter().map(move |&a| (s, a)))
            .collect()
    }
}

/// Seed of the dataset for one replicate of one cell.
pub fn replicate_seed(master: u64, selection: Selection, alpha: f64, replicate: usize) -> u64 {
    derive_seed(&[master, selection.index(), alpha.to_bits(), replicate as u64])
}

/// Seed of one model's fit within a replicate.
pub fn model_seed(replicate_seed: u64, mode: PropensityMode) -> u64 {
    derive_seed(&[replicate_seed, mode.index()])
}

/// Per-fit wall-clock time and the digest of the dataset the fit saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub dgp_id: String,
    pub alpha: f64,
    pub model: String,
    pub replicate_index: usize,
    pub seed: u64,
    pub fit_seconds: f64,
    pub dataset_digest: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Reuse completed cells of an earlier run with the same configuration.
    pub resume: bool,
    /// Discard the artifacts of an earlier run.
    pub overwrite: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ReplicateRecord>,
    pub timings: Vec<TimingRow>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CellResult {
    records: Vec<ReplicateRecord>,
    timings: Vec<TimingRow>,
}

fn cell_file(dir: &Path, selection: Selection, alpha: f64) -> PathBuf {
    dir.join(CELLS_DIR)
        .join(format!("{}_{alpha}.json", selection.label()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn is_artifact(name: &str) -> bool {
    name == REPLICATES_FILE
        || name == TIMING_FILE
        || name == CONFIG_FILE
        || ["summary_", "pvalues_", "boxplot_", "scatter_pi_vs_b_"]
            .iter()
            .any(|p| name.starts_with(p))
}

fn prepare_dir(config: &ExperimentConfig, opts: RunOptions) -> Result<()> {
    let dir = &config.output_dir;
    if opts.resume && opts.overwrite {
        return Err(Error::Config(
            "resume and overwrite are mutually exclusive".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config_path = dir.join(CONFIG_FILE);
    let previous = dir.join(CELLS_DIR).exists() || config_path.exists();
    if previous {
        if opts.overwrite {
            let cells = dir.join(CELLS_DIR);
            if cells.exists() {
                fs::remove_dir_all(&cells).map_err(|e| Error::io(&cells, e))?;
            }
            for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
                let path = entry.map_err(|e| Error::io(dir, e))?.path();
                let name = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or_default();
                if path.is_file() && is_artifact(name) {
                    fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
                }
            }
        } else if opts.resume {
            let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
            let stored: ExperimentConfig = serde_json::from_str(&text)?;
            if &stored != config {
                return Err(Error::Config(format!(
                    "{} holds a run with a different configuration",
                    dir.display()
                )));
            }
        } else {
            return Err(Error::Config(format!(
                "{} already holds a run; pass resume or overwrite",
                dir.display()
            )));
        }
    }
    let cells = dir.join(CELLS_DIR);
    fs::create_dir_all(&cells).map_err(|e| Error::io(&cells, e))?;
    write_file(&config_path, serde_json::to_string_pretty(config)?)
}

fn run_cell(
    config: &ExperimentConfig,
    bcf: &BcfConfig,
    selection: Selection,
    alpha: f64,
    progress: &mut dyn FnMut(&ReplicateRecord),
) -> Result<CellResult> {
    let spec = DgpSpec::new(selection, alpha, config.n)?;
    let dgp_id = selection.label();
    let mut out = CellResult {
        records: Vec::new(),
        timings: Vec::new(),
    };
    for r in 0..config.replicates {
        let seed = replicate_seed(config.master_seed, selection, alpha, r);
        let ds = generate(&spec, seed)?;
        let digest = ds.digest();
        for &mode in &config.models {
            let fit = fit_bcf(
                &ds.x,
                &ds.d,
                &ds.y,
                mode,
                Some(&ds.pi_true),
                bcf,
                model_seed(seed, mode),
            )?;
            let key = RecordKey {
                dgp_id,
                alpha,
                model: mode.name(),
                replicate_index: r,
                seed,
            };
            let record = evaluate(&fit, &ds, key)?;
            progress(&record);
            out.timings.push(TimingRow {
                dgp_id: dgp_id.to_string(),
                alpha,
                model: mode.name().to_string(),
                replicate_index: r,
                seed,
                fit_seconds: fit.fit_seconds,
                dataset_digest: digest.clone(),
            });
            out.records.push(record);
        }
    }
    Ok(out)
}

/// Runs the whole grid and writes every artifact to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    run_experiment_with(config, opts, &mut |_| {})
}

/// As [`run_experiment`], calling `progress` after every fit.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    opts: RunOptions,
    progress: &mut dyn FnMut(&ReplicateRecord),
) -> Result<RunOutput> {
    config.validate()?;
    prepare_dir(config, opts)?;
    let dir = &config.output_dir;
    let bcf = config.bcf_config();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for (selection, alpha) in config.cells() {
        let path = cell_file(dir, selection, alpha);
        let cell = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&text)?
        } else {
            let cell = run_cell(config, &bcf, selection, alpha, progress)?;
            write_file(&path, serde_json::to_string(&cell)?)?;
            cell
        };
        records.extend(cell.records);
        timings.extend(cell.timings);
    }
    attach_seconds(&mut records, &timings)?;
    let artifacts = write_artifacts(config, &records, &timings)?;
    Ok(RunOutput {
        records,
        timings,
        artifacts,
    })
}

fn attach_seconds(records: &mut [ReplicateRecord], timings: &[TimingRow]) -> Result<()> {
    if records.len() != timings.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            actual: timings.len(),
        });
    }
    for (r, t) in records.iter_mut().zip(timings) {
        if r.dgp_id != t.dgp_id
            || r.alpha != t.alpha
            || r.model != t.model
            || r.replicate_index != t.replicate_index
        {
            return Err(Error::Config(
                "timing rows do not match replicate rows".into(),
            ));
        }
        r.fit_seconds = t.fit_seconds;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TimingFile {
    rows: Vec<TimingRow>,
    mean_seconds: BTreeMap<String, f64>,
    report: Option<TimingReport>,
}

fn write_artifacts(
    config: &ExperimentConfig,
    records: &[ReplicateRecord],
    timings: &[TimingRow],
) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    let mut written = Vec::new();

    let path = dir.join(REPLICATES_FILE);
    write_records(&path, records)?;
    written.push(path);

    for cell in group_by_cell(records) {
        let table = summarize_cell(&cell)?;
        let stem = format!("{}_{}", table.dgp_id, table.alpha);
        let path = dir.join(format!("summary_{stem}.md"));
        write_file(&path, table.to_markdown())?;
        written.push(path);
        let path = dir.join(format!("summary_{stem}.csv"));
        write_file(&path, table.to_csv()?)?;
        written.push(path);

        if cell.len() / table.models.len() >= 2 {
            for (i, a) in table.models.iter().enumerate() {
                for b in &table.models[i + 1..] {
                    let pv = compare_models(&cell, a, b)?;
                    let path = dir.join(format!("pvalues_{stem}_{a}_vs_{b}.csv"));
                    write_file(&path, pv.to_csv()?)?;
                    written.push(path);
                }
            }
        }

        let path = dir.join(format!("boxplot_{stem}.csv"));
        write_file(&path, boxplot_csv(&cell)?)?;
        written.push(path);
    }

    let alpha = config.alphas[0];
    for &selection in &config.selections {
        let seed = replicate_seed(config.master_seed, selection, alpha, 0);
        let ds = generate(&DgpSpec::new(selection, alpha, config.n)?, seed)?;
        let path = dir.join(format!("scatter_pi_vs_b_{}.csv", selection.label()));
        write_file(&path, scatter_csv(&ds)?)?;
        written.push(path);
    }

    let has = |m: PropensityMode| records.iter().any(|r| r.model == m.name());
    let report = if has(PropensityMode::NoPropensity) && has(PropensityMode::EstimatedPropensity) {
        Some(timing_report(records)?)
    } else {
        None
    };
    let timing = TimingFile {
        rows: timings.to_vec(),
        mean_seconds: mean_seconds(records),
        report,
    };
    let path = dir.join(TIMING_FILE);
    write_file(&path, serde_json::to_string_pretty(&timing)?)?;
    written.push(path);
    Ok(written)
}

fn write_records(path: &Path, records: &[ReplicateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ReplicateRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Re-reads the records and timings of a finished run and rewrites every
/// aggregate artifact without refitting.
pub fn report_from_dir(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let config_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)?;
    config.output_dir = dir.to_path_buf();
    let mut records = read_records(dir.join(REPLICATES_FILE))?;
    let timing_path = dir.join(TIMING_FILE);
    let text = fs::read_to_string(&timing_path).map_err(|e| Error::io(&timing_path, e))?;
    let timing: TimingFile = serde_json::from_str(&text)?;
    attach_seconds(&mut records, &timing.rows)?;
    write_artifacts(&config, &records, &timing.rows)
}

/// Splits records into (design, alpha) cells, keeping first-appearance order.
pub fn group_by_cell(records: &[ReplicateRecord]) -> Vec<Vec<ReplicateRecord>> {
    let mut cells: Vec<Vec<ReplicateRecord>> = Vec::new();
    for r in records {
        match cells
            .iter_mut()
            .find(|c| c[0].dgp_id == r.dgp_id && c[0].alpha == r.alpha)
        {
            Some(c) => c.push(r.clone()),
            None => cells.push(vec![r.clone()]),
        }
    }
    cells
}

fn models_in(records: &[ReplicateRecord]) -> Vec<String> {
    let mut models: Vec<String> = Vec::new();
    for r in records {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    models
}

fn model_label(name: &str) -> String {
    name.parse::<PropensityMode>()
        .map(|m| m.label().to_string())
        .unwrap_or_else(|_| name.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryCell {
    pub mean: f64,
    /// Sample standard deviation; absent for a single replicate.
    pub sd: Option<f64>,
    pub count: usize,
}

/// Mean and sd of each metric per model for one (design, alpha) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub dgp_id: String,
    pub alpha: f64,
    pub models: Vec<String>,
    pub metrics: Vec<String>,
    /// Indexed `[metric][model]`.
    pub cells: Vec<Vec<SummaryCell>>,
}

impl SummaryTable {
    pub fn cell(&self, metric: &str, model: &str) -> Option<SummaryCell> {
        let i = self.metrics.iter().position(|m| m == metric)?;
        let j = self.models.iter().position(|m| m == model)?;
        Some(self.cells[i][j])
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("# {}, alpha = {}\n\n| Metric |", self.dgp_id, self.alpha);
        for m in &self.models {
            let _ = write!(s, " {} |", model_label(m));
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(self.models.len()));
        s.push('\n');
        for (metric, row) in self.metrics.iter().zip(&self.cells) {
            let _ = write!(s, "| {metric} |");
            for c in row {
                match c.sd {
                    Some(sd) => {
                        let _ = write!(s, " {:.4} ± {:.4} |", c.mean, sd);
                    }
                    None => {
                        let _ = write!(s, " {:.4} |", c.mean);
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    /// Tidy rows: dgp_id, alpha, metric, model, mean, sd, count.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dgp_id", "alpha", "metric", "model", "mean", "sd", "count"])?;
        for (metric, row) in self.metrics.iter().zip(&self.cells) {
            for (model, c) in self.models.iter().zip(row) {
                w.write_record([
                    self.dgp_id.clone(),
                    self.alpha.to_string(),
                    metric.clone(),
                    model.clone(),
                    c.mean.to_string(),
                    fmt_opt(c.sd),
                    c.count.to_string(),
                ])?;
            }
        }
        into_string(w)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn summarize_cell(records: &[ReplicateRecord]) -> Result<SummaryTable> {
    let first = records.first().ok_or(Error::EmptyInput("records"))?;
    let models = models_in(records);
    let metrics: Vec<String> = ReplicateRecord::METRICS
        .iter()
        .map(|m| m.to_string())
        .collect();
    let cells = metrics
        .iter()
        .map(|metric| {
            models
                .iter()
                .map(|model| {
                    let values: Vec<f64> = records
                        .iter()
                        .filter(|r| &r.model == model)
                        .map(|r| r.metric(metric).expect("known metric"))
                        .collect();
                    SummaryCell {
                        mean: mean(&values),
                        sd: sample_sd(&values),
                        count: values.len(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(SummaryTable {
        dgp_id: first.dgp_id.clone(),
        alpha: first.alpha,
        models,
        metrics,
        cells,
    })
}

/// One summary table per (design, alpha) cell.
pub fn summarize(records: &[ReplicateRecord]) -> Result<Vec<SummaryTable>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("records"));
    }
    group_by_cell(records)
        .iter()
        .map(|c| summarize_cell(c))
        .collect()
}

/// Location and dispersion test results for every metric, comparing two
/// models within one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueTable {
    pub dgp_id: String,
    pub alpha: f64,
    pub model_a: String,
    pub model_b: String,
    pub rows: Vec<TestReport>,
}

impl PValueTable {
    pub fn row(&self, metric: &str) -> Option<&TestReport> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    /// Columns: metric, the five tests (`NA` when not run), selected test.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "metric",
            "fligner_policello",
            "mann_whitney",
            "kruskal_wallis",
            "levene",
            "brown_forsythe",
            "selected",
        ])?;
        for r in &self.rows {
            let selected = match r.selected {
                LocationTest::FlignerPolicello => "fligner_policello",
                LocationTest::MannWhitneyKruskalWallis => "mann_whitney_kruskal_wallis",
            };
            w.write_record([
                r.metric.clone(),
                fmt_opt(r.fligner_policello.map(|t| t.p_value)),
                fmt_opt(r.mann_whitney.map(|t| t.p_value)),
                fmt_opt(r.kruskal_wallis.map(|t| t.p_value)),
                r.levene.p_value.to_string(),
                r.brown_forsythe.p_value.to_string(),
                selected.to_string(),
            ])?;
        }
        into_string(w)
    }
}

/// Runs [`select_and_run`] on every metric for `model_a` vs `model_b`. The
/// records must come from one cell and both models must cover the same
/// replicates.
pub fn compare_models(
    records: &[ReplicateRecord],
    model_a: &str,
    model_b: &str,
) -> Result<PValueTable> {
    let first = records.first().ok_or(Error::EmptyInput("records"))?;
    if records
        .iter()
        .any(|r| r.dgp_id != first.dgp_id || r.alpha != first.alpha)
    {
        return Err(Error::Config("records span more than one cell".into()));
    }
    let sample = |model: &str| {
        let mut rows: Vec<&ReplicateRecord> = records.iter().filter(|r| r.model == model).collect();
        rows.sort_by_key(|r| r.replicate_index);
        rows
    };
    let (a, b) = (sample(model_a), sample(model_b));
    if a.is_empty() || b.is_empty() {
        let missing = if a.is_empty() { model_a } else { model_b };
        return Err(Error::Config(format!("model `{missing}` has no records")));
    }
    let same_replicates = a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(x, y)| x.replicate_index == y.replicate_index);
    if !same_replicates {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let rows = ReplicateRecord::METRICS
        .iter()
        .map(|&metric| {
            let xa: Vec<f64> = a
                .iter()
                .map(|r| r.metric(metric).expect("known metric"))
                .collect();
            let xb: Vec<f64> = b
                .iter()
                .map(|r| r.metric(metric).expect("known metric"))
                .collect();
            select_and_run(&xa, &xb, metric)
        })
        .collect::<Result<_>>()?;
    Ok(PValueTable {
        dgp_id: first.dgp_id.clone(),
        alpha: first.alpha,
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub dgp_id: String,
    pub alpha: f64,
    pub mean_seconds: BTreeMap<String, f64>,
    /// `mean(est_pi) / mean(no_pi) - 1`
    pub overhead: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub cells: Vec<CellTiming>,
    pub pooled_mean_seconds: BTreeMap<String, f64>,
    pub pooled_overhead: f64,
}

fn mean_seconds(records: &[ReplicateRecord]) -> BTreeMap<String, f64> {
    models_in(records)
        .into_iter()
        .map(|m| {
            let secs: Vec<f64> = records
                .iter()
                .filter(|r| r.model == m)
                .map(|r| r.fit_seconds)
                .collect();
            (m, mean(&secs))
        })
        .collect()
}

fn overhead(means: &BTreeMap<String, f64>, where_: &str) -> Result<f64> {
    let get = |m: PropensityMode| {
        means
            .get(m.name())
            .copied()
            .ok_or_else(|| Error::Config(format!("{where_}: no `{}` records", m.name())))
    };
    let base = get(PropensityMode::NoPropensity)?;
    let est = get(PropensityMode::EstimatedPropensity)?;
    if base <= 0.0 {
        return Err(Error::Config(format!(
            "{where_}: non-positive baseline time"
        )));
    }
    Ok(est / base - 1.0)
}

/// Mean fit time per model, and the relative overhead of the estimated
/// propensity variant over the no-propensity variant per cell and pooled.
pub fn timing_report(records: &[ReplicateRecord]) -> Result<TimingReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("records"));
    }
    let cells = group_by_cell(records)
        .iter()
        .map(|c| {
            let means = mean_seconds(c);
            let where_ = format!("{} alpha {}", c[0].dgp_id, c[0].alpha);
            Ok(CellTiming {
                dgp_id: c[0].dgp_id.clone(),
                alpha: c[0].alpha,
                overhead: overhead(&means, &where_)?,
                mean_seconds: means,
            })
        })
        .collect::<Result<_>>()?;
    let pooled = mean_seconds(records);
    Ok(TimingReport {
        cells,
        pooled_overhead: overhead(&pooled, "pooled")?,
        pooled_mean_seconds: pooled,
    })
}

/// Tidy rows: metric, model, replicate, value.
fn boxplot_csv(records: &[ReplicateRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "model", "replicate", "value"])?;
    for metric in ReplicateRecord::METRICS {
        for r in records {
            w.write_record([
                metric.to_string(),
                r.model.clone(),
                r.replicate_index.to_string(),
                r.metric(metric).expect("known metric").to_string(),
            ])?;
        }
    }
    into_string(w)
}

fn scatter_csv(ds: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["unit", "b", "pi_true", "d"])?;
    for (i, b) in ds.baseline_values().into_iter().enumerate() {
        w.write_record([
            i.to_string(),
            b.to_string(),
            ds.pi_true[i].to_string(),
            u8::from(ds.d[i]).to_string(),
        ])?;
    }
    into_string(w)
}
