//! Temperature sweeps, cross-model estimation grids and corpus aggregation.
//!
//! Every (temperature, text) cell is independent and seeded from the
//! experiment seed and the text index alone, so results do not depend on
//! execution order or thread count. A text index uses the same seed at every
//! grid temperature: at temperatures low enough for sampling to be greedy the
//! generated texts coincide exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::solver::{estimate_temperature, EstimateStatus, SolveError, SolverConfig, TemperatureEstimate};
use crate::storage::{ResultTable, Schema, StorageError, Value};
use crate::textgen::{generate_text, score_text, GenerationConfig, ModelError, SyntheticModel};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid temperature grid: {0}")]
    InvalidGrid(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("generator {generator} has vocabulary {gen_vocab} but estimator {estimator} has {est_vocab}")]
    VocabMismatch { generator: String, gen_vocab: usize, estimator: String, est_vocab: usize },
    #[error("cross grid needs at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("no estimates to aggregate")]
    EmptyCorpus,
    #[error("corpus {corpus_id}: none of {n_texts} estimates converged")]
    NoUsableEstimates { corpus_id: String, n_texts: usize },
    #[error("table: {0}")]
    Table(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        Self { t_min: 0.001, t_max: 2.401, t_step: 0.1 }
    }
}

impl TemperatureGrid {
    pub fn new(t_min: f64, t_max: f64, t_step: f64) -> Result<Self, ExperimentError> {
        let grid = Self { t_min, t_max, t_step };
        grid.validate()?;
        Ok(grid)
    }

    /// A one-point grid.
    pub fn single(t: f64) -> Result<Self, ExperimentError> {
        Self::new(t, t, 1.0)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let finite = [self.t_min, self.t_max, self.t_step].iter().all(|v| v.is_finite());
        if !finite || self.t_min <= 0.0 || self.t_step <= 0.0 || self.t_min > self.t_max {
            return Err(ExperimentError::InvalidGrid(format!("{self:?}")));
        }
        if self.len() > 1_000_000 {
            return Err(ExperimentError::InvalidGrid(format!("{self:?} has more than 10^6 points")));
        }
        Ok(())
    }

    /// `floor((t_max - t_min) / t_step) + 1`, with a little slack so that an
    /// endpoint reached up to rounding error is included.
    pub fn len(&self) -> usize {
        ((self.t_max - self.t_min) / self.t_step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points, cleaned of accumulated rounding at 12 decimals.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let t = self.t_min + i as f64 * self.t_step;
                (t * 1e12).round() / 1e12
            })
            .collect()
    }
}

/// Seed of text `text_index`; shared by every grid temperature.
pub fn text_seed(experiment_seed: u64, text_index: usize) -> u64 {
    rng::derive(rng::derive(experiment_seed, rng::domain::TEXT), text_index as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub grid: TemperatureGrid,
    pub texts_per_t: usize,
    pub n_tokens: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Worker threads; `None` uses the global pool. Results never depend on it.
    pub jobs: Option<usize>,
}

impl SweepConfig {
    /// Ten 200-token texts per temperature on the default grid.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            grid: TemperatureGrid::default(),
            texts_per_t: 10,
            n_tokens: 200,
            seed,
            solver: SolverConfig::default(),
            jobs: None,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        self.grid.validate()?;
        self.solver.validate()?;
        if self.texts_per_t == 0 || self.n_tokens == 0 || self.jobs == Some(0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "texts_per_t={}, n_tokens={}, jobs={:?}",
                self.texts_per_t, self.n_tokens, self.jobs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gen_model: String,
    pub est_model: String,
    pub temperature_index: usize,
    pub gen_temperature: f64,
    pub text_index: usize,
    pub text_seed: u64,
    pub t_hat: f64,
    pub status: EstimateStatus,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn run_in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn check_vocab(generator: &SyntheticModel, estimator: &SyntheticModel) -> Result<(), ExperimentError> {
    if generator.vocab() != estimator.vocab() {
        return Err(ExperimentError::VocabMismatch {
            generator: generator.id().to_owned(),
            gen_vocab: generator.vocab(),
            estimator: estimator.id().to_owned(),
            est_vocab: estimator.vocab(),
        });
    }
    Ok(())
}

fn sweep_cell(
    generator: &SyntheticModel,
    estimator: &SyntheticModel,
    config: &SweepConfig,
    temperature_index: usize,
    gen_temperature: f64,
    text_index: usize,
) -> Result<SweepRow, ExperimentError> {
    let seed = text_seed(config.seed, text_index);
    let text =
        generate_text(generator, &GenerationConfig { temperature: gen_temperature, n_tokens: config.n_tokens, seed })?;
    let observed = text.observed();
    let estimate = if generator.spec() == estimator.spec() {
        estimate_temperature(&text.logits, &observed, &config.solver)?
    } else {
        estimate_temperature(&score_text(estimator, &text.tokens)?, &observed, &config.solver)?
    };
    Ok(SweepRow {
        gen_model: generator.id().to_owned(),
        est_model: estimator.id().to_owned(),
        temperature_index,
        gen_temperature,
        text_index,
        text_seed: seed,
        t_hat: estimate.t_hat,
        status: estimate.status,
        log_likelihood: estimate.log_likelihood_at_root,
    })
}

/// Generates `texts_per_t` texts per grid temperature with `generator` and
/// estimates each with `estimator`.
pub fn run_sweep(
    generator: &SyntheticModel,
    estimator: &SyntheticModel,
    config: &SweepConfig,
) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    check_vocab(generator, estimator)?;
    let cells: Vec<(usize, f64, usize)> = config
        .grid
        .values()
        .into_iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..config.texts_per_t).map(move |k| (ti, t, k)))
        .collect();
    let rows = run_in_pool(config.jobs, || {
        cells
            .par_iter()
            .map(|&(ti, t, k)| sweep_cell(generator, estimator, config, ti, t, k))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(SweepResult { rows })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("inputs have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("inputs are empty")]
    Empty,
    #[error("input is constant; the metric is undefined")]
    Constant,
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean absolute error.
pub fn mae(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    check_pair(xs, ys)?;
    Ok(xs.iter().zip(ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / xs.len() as f64)
}

/// Coefficient of determination of `xs` as a prediction of `ys`.
pub fn r2(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    check_pair(xs, ys)?;
    let y_mean = mean(ys);
    let total: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    if total == 0.0 {
        return Err(MetricError::Constant);
    }
    let resid: f64 = xs.iter().zip(ys).map(|(x, y)| (y - x).powi(2)).sum();
    Ok(1.0 - resid / total)
}

/// Sample correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    check_pair(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::Constant);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Agreement between estimated and generation temperatures over a set of
/// sweep rows.
///
/// `mae_all` uses every row at its reported (possibly clamped) value;
/// `mae_converged`, `r2` and `pearson` use converged rows only and are `None`
/// when undefined on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    pub n_rows: usize,
    pub n_converged: usize,
    pub n_flagged: usize,
    pub mae_all: f64,
    pub mae_converged: Option<f64>,
    pub r2: Option<f64>,
    pub pearson: Option<f64>,
}

impl SweepMetrics {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a SweepRow>) -> Result<Self, MetricError> {
        let (mut est, mut gen, mut conv_est, mut conv_gen) = (vec![], vec![], vec![], vec![]);
        for row in rows {
            est.push(row.t_hat);
            gen.push(row.gen_temperature);
            if row.status.is_converged() {
                conv_est.push(row.t_hat);
                conv_gen.push(row.gen_temperature);
            }
        }
        Ok(Self {
            n_rows: est.len(),
            n_converged: conv_est.len(),
            n_flagged: est.len() - conv_est.len(),
            mae_all: mae(&est, &gen)?,
            mae_converged: mae(&conv_est, &conv_gen).ok(),
            r2: r2(&conv_est, &conv_gen).ok(),
            pearson: pearson(&conv_est, &conv_gen).ok(),
        })
    }
}

/// Per-temperature breakdown of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureSummary {
    pub gen_temperature: f64,
    pub n_rows: usize,
    pub n_converged: usize,
    /// Mean of `t_hat` over all rows, clamped values included.
    pub mean_t_hat: f64,
    pub mae_all: f64,
    pub mae_converged: Option<f64>,
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn metrics(&self) -> Result<SweepMetrics, MetricError> {
        SweepMetrics::from_rows(&self.rows)
    }

    /// Summaries in order of first appearance of each generation temperature.
    pub fn per_temperature(&self) -> Vec<TemperatureSummary> {
        let mut order: Vec<u64> = Vec::new();
        let mut groups: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
        for row in &self.rows {
            let key = row.gen_temperature.to_bits();
            groups.entry(key).or_insert_with(|| {
                order.push(key);
                Vec::new()
            });
            groups.get_mut(&key).expect("inserted").push(row);
        }
        order
            .into_iter()
            .map(|key| {
                let rows = &groups[&key];
                let metrics = SweepMetrics::from_rows(rows.iter().copied()).expect("group is non-empty");
                TemperatureSummary {
                    gen_temperature: f64::from_bits(key),
                    n_rows: rows.len(),
                    n_converged: metrics.n_converged,
                    mean_t_hat: rows.iter().map(|r| r.t_hat).sum::<f64>() / rows.len() as f64,
                    mae_all: metrics.mae_all,
                    mae_converged: metrics.mae_converged,
                }
            })
            .collect()
    }

    pub fn to_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::Sweep);
        for r in &self.rows {
            table
                .push(vec![
                    Value::Text(r.gen_model.clone()),
                    Value::Text(r.est_model.clone()),
                    Value::Int(r.temperature_index as u64),
                    Value::Real(r.gen_temperature),
                    Value::Int(r.text_index as u64),
                    Value::Int(r.text_seed),
                    Value::Real(r.t_hat),
                    Value::Status(r.status),
                    Value::Real(r.log_likelihood),
                ])
                .expect("sweep row matches schema");
        }
        table
    }

    pub fn from_table(table: &ResultTable) -> Result<Self, ExperimentError> {
        expect_schema(table, Schema::Sweep)?;
        let rows = table
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let f = Fields { row, index: i };
                Ok(SweepRow {
                    gen_model: f.text(0)?,
                    est_model: f.text(1)?,
                    temperature_index: f.int(2)? as usize,
                    gen_temperature: f.real(3)?,
                    text_index: f.int(4)? as usize,
                    text_seed: f.int(5)?,
                    t_hat: f.real(6)?,
                    status: f.status(7)?,
                    log_likelihood: f.real(8)?,
                })
            })
            .collect::<Result<_, ExperimentError>>()?;
        Ok(Self { rows })
    }

    /// Scatter of every estimate, the per-temperature mean and the identity
    /// line, as `x, y, series` points.
    pub fn plot_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::SweepPlot);
        let mut point = |x: f64, y: f64, series: &str| {
            table
                .push(vec![Value::Real(x), Value::Real(y), Value::Text(series.to_owned())])
                .expect("plot row matches schema");
        };
        for r in &self.rows {
            point(r.gen_temperature, r.t_hat, "estimate");
        }
        for s in self.per_temperature() {
            point(s.gen_temperature, s.mean_t_hat, "mean");
        }
        for s in self.per_temperature() {
            point(s.gen_temperature, s.gen_temperature, "identity");
        }
        table
    }
}

fn expect_schema(table: &ResultTable, schema: Schema) -> Result<(), ExperimentError> {
    if table.schema() != schema {
        return Err(ExperimentError::Table(format!("expected a {schema} table, got {}", table.schema())));
    }
    Ok(())
}

struct Fields<'a> {
    row: &'a [Value],
    index: usize,
}

impl Fields<'_> {
    fn missing(&self, col: usize) -> ExperimentError {
        ExperimentError::Table(format!("row {}: missing or mistyped value in column {col}", self.index))
    }

    fn text(&self, col: usize) -> Result<String, ExperimentError> {
        match &self.row[col] {
            Value::Text(s) => Ok(s.clone()),
            _ => Err(self.missing(col)),
        }
    }

    fn int(&self, col: usize) -> Result<u64, ExperimentError> {
        match self.row[col] {
            Value::Int(v) => Ok(v),
            _ => Err(self.missing(col)),
        }
    }

    fn real(&self, col: usize) -> Result<f64, ExperimentError> {
        match self.row[col] {
            Value::Real(v) => Ok(v),
            _ => Err(self.missing(col)),
        }
    }

    fn opt_real(&self, col: usize) -> Result<Option<f64>, ExperimentError> {
        match self.row[col] {
            Value::Real(v) => Ok(Some(v)),
            Value::Missing => Ok(None),
            _ => Err(self.missing(col)),
        }
    }

    fn status(&self, col: usize) -> Result<EstimateStatus, ExperimentError> {
        match self.row[col] {
            Value::Status(s) => Ok(s),
            _ => Err(self.missing(col)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCell {
    pub generator: String,
    pub estimator: String,
    pub metrics: SweepMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossTemperatureCell {
    pub generator: String,
    pub estimator: String,
    pub summary: TemperatureSummary,
}

/// Metrics for every ordered (generator, estimator) pair, pooled over all
/// (temperature, text) rows, plus the per-temperature breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossGridResult {
    pub model_ids: Vec<String>,
    /// Row-major: generator `i`, estimator `j` at `i * n + j`.
    pub cells: Vec<CrossCell>,
    pub per_temperature: Vec<CrossTemperatureCell>,
}

pub fn cross_grid(models: &[SyntheticModel], config: &SweepConfig) -> Result<CrossGridResult, ExperimentError> {
    if models.len() < 2 {
        return Err(ExperimentError::TooFewModels(models.len()));
    }
    for m in &models[1..] {
        check_vocab(&models[0], m)?;
    }
    let mut cells = Vec::with_capacity(models.len() * models.len());
    let mut per_temperature = Vec::new();
    for generator in models {
        for estimator in models {
            let sweep = run_sweep(generator, estimator, config)?;
            cells.push(CrossCell {
                generator: generator.id().to_owned(),
                estimator: estimator.id().to_owned(),
                metrics: sweep.metrics()?,
            });
            per_temperature.extend(sweep.per_temperature().into_iter().map(|summary| CrossTemperatureCell {
                generator: generator.id().to_owned(),
                estimator: estimator.id().to_owned(),
                summary,
            }));
        }
    }
    Ok(CrossGridResult { model_ids: models.iter().map(|m| m.id().to_owned()).collect(), cells, per_temperature })
}

impl CrossGridResult {
    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn cell(&self, generator: usize, estimator: usize) -> &CrossCell {
        &self.cells[generator * self.n_models() + estimator]
    }

    /// `mae_all` indexed `[generator][estimator]`.
    pub fn mae_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_models();
        (0..n).map(|i| (0..n).map(|j| self.cell(i, j).metrics.mae_all).collect()).collect()
    }

    /// Generators whose row minimum is not on the diagonal. Ties with the
    /// diagonal count as dominance.
    pub fn diagonal_violations(&self) -> Vec<usize> {
        self.mae_matrix()
            .iter()
            .enumerate()
            .filter(|(i, row)| row.iter().any(|&v| v < row[*i]))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::CrossGrid);
        for c in &self.cells {
            let m = &c.metrics;
            table
                .push(vec![
                    Value::Text(c.generator.clone()),
                    Value::Text(c.estimator.clone()),
                    Value::Int(m.n_rows as u64),
                    Value::Int(m.n_converged as u64),
                    Value::Int(m.n_flagged as u64),
                    Value::Real(m.mae_all),
                    Value::real(m.mae_converged),
                    Value::real(m.r2),
                    Value::real(m.pearson),
                ])
                .expect("cross-grid row matches schema");
        }
        table
    }

    pub fn per_temperature_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::CrossGridPerT);
        for c in &self.per_temperature {
            let s = &c.summary;
            table
                .push(vec![
                    Value::Text(c.generator.clone()),
                    Value::Text(c.estimator.clone()),
                    Value::Real(s.gen_temperature),
                    Value::Int(s.n_rows as u64),
                    Value::Int(s.n_converged as u64),
                    Value::Real(s.mean_t_hat),
                    Value::Real(s.mae_all),
                    Value::real(s.mae_converged),
                ])
                .expect("per-temperature row matches schema");
        }
        table
    }

    /// Reads the pooled matrix back. The table must list a full square of
    /// (generator, estimator) pairs in row-major order.
    pub fn from_table(table: &ResultTable) -> Result<Self, ExperimentError> {
        expect_schema(table, Schema::CrossGrid)?;
        let mut cells = Vec::with_capacity(table.len());
        for (i, row) in table.rows().iter().enumerate() {
            let f = Fields { row, index: i };
            cells.push(CrossCell {
                generator: f.text(0)?,
                estimator: f.text(1)?,
                metrics: SweepMetrics {
                    n_rows: f.int(2)? as usize,
                    n_converged: f.int(3)? as usize,
                    n_flagged: f.int(4)? as usize,
                    mae_all: f.real(5)?,
                    mae_converged: f.opt_real(6)?,
                    r2: f.opt_real(7)?,
                    pearson: f.opt_real(8)?,
                },
            });
        }
        let n = (cells.len() as f64).sqrt().round() as usize;
        if n * n != cells.len() || n == 0 {
            return Err(ExperimentError::Table(format!("{} cells do not form a square matrix", cells.len())));
        }
        let model_ids: Vec<String> = cells[..n].iter().map(|c| c.estimator.clone()).collect();
        for (k, c) in cells.iter().enumerate() {
            if c.generator != model_ids[k / n] || c.estimator != model_ids[k % n] {
                return Err(ExperimentError::Table(format!("cell {k} is out of row-major order")));
            }
        }
        Ok(Self { model_ids, cells, per_temperature: Vec::new() })
    }

    /// `row, column, value` triplets of the pooled MAE matrix.
    pub fn heatmap_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::Heatmap);
        for c in &self.cells {
            table
                .push(vec![
                    Value::Text(c.generator.clone()),
                    Value::Text(c.estimator.clone()),
                    Value::Real(c.metrics.mae_all),
                ])
                .expect("heatmap row matches schema");
        }
        table
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub corpus_id: String,
    pub n_texts: usize,
    pub n_converged: usize,
    /// Saturated and degenerate estimates; excluded from mean and std.
    pub n_saturated: usize,
    pub mean_t: f64,
    /// Population standard deviation (divides by the number of converged
    /// estimates).
    pub std_t: f64,
}

/// Mean and population standard deviation of the converged estimates.
pub fn corpus_stats(estimates: &[TemperatureEstimate], corpus_id: &str) -> Result<CorpusStats, ExperimentError> {
    if estimates.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    let temps: Vec<f64> = estimates.iter().filter(|e| e.status.is_converged()).map(|e| e.t_hat).collect();
    if temps.is_empty() {
        return Err(ExperimentError::NoUsableEstimates { corpus_id: corpus_id.to_owned(), n_texts: estimates.len() });
    }
    let mean_t = mean(&temps);
    let var = temps.iter().map(|t| (t - mean_t).powi(2)).sum::<f64>() / temps.len() as f64;
    Ok(CorpusStats {
        corpus_id: corpus_id.to_owned(),
        n_texts: estimates.len(),
        n_converged: temps.len(),
        n_saturated: estimates.len() - temps.len(),
        mean_t,
        std_t: var.sqrt(),
    })
}

impl CorpusStats {
    pub fn to_table(&self) -> ResultTable {
        let mut table = ResultTable::new(Schema::CorpusSummary);
        table
            .push(vec![
                Value::Text(self.corpus_id.clone()),
                Value::Int(self.n_texts as u64),
                Value::Int(self.n_converged as u64),
                Value::Int(self.n_saturated as u64),
                Value::Real(self.mean_t),
                Value::Real(self.std_t),
            ])
            .expect("corpus row matches schema");
        table
    }
}

/// One row of an estimate table.
pub fn estimate_row(source: &str, n_steps: usize, e: &TemperatureEstimate) -> Vec<Value> {
    vec![
        Value::Text(source.to_owned()),
        Value::Int(n_steps as u64),
        Value::Real(e.t_hat),
        Value::Real(e.beta_hat),
        Value::Status(e.status),
        Value::Int(e.iterations as u64),
        Value::Real(e.residual_at_root),
        Value::Real(e.log_likelihood_at_root),
    ]
}
