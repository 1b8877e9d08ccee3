//! On-disk formats: binary logit dumps, CSV result tables and the TOML
//! experiment spec.
//!
//! # Logit dump (`TLOG`, version 1)
//!
//! All integers are unsigned 32-bit little-endian.
//!
//! | offset | size                | content                                  |
//! |--------|---------------------|------------------------------------------|
//! | 0      | 4                   | magic `b"TLOG"`                          |
//! | 4      | 4                   | format version, `1`                      |
//! | 8      | 4                   | `n_steps`                                |
//! | 12     | 4                   | `vocab`                                  |
//! | 16     | 4                   | dtype code, `1` = IEEE-754 binary32      |
//! | 20     | `4 * n_steps*vocab` | logits, row-major, little-endian f32     |
//! | ...    | `4 * n_steps`       | observed token id for each row           |
//!
//! Row `i` holds the logits that predict token `i`. The file must end exactly
//! after the token block. Readers reject anything else; nothing is repaired.
//!
//! # Result tables
//!
//! Comma-separated, `\n`-terminated, one header row whose column list must
//! match one of the [`Schema`]s exactly. Reals are written rounded to 9
//! significant digits in their shortest round-trip form; missing values are
//! `NA`. Writing a table that was read from a canonical file reproduces it
//! byte for byte.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{InputError, LogitSequence, TokenSequence};
use crate::experiments::TemperatureGrid;
use crate::solver::{EstimateStatus, SolverConfig};
use crate::textgen::{self, SyntheticModelSpec};

pub const TLOG_MAGIC: [u8; 4] = *b"TLOG";
pub const TLOG_VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("bad magic {0:?}, expected \"TLOG\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u32),
    #[error("dump declares {n_steps} steps of vocabulary {vocab}; both must be positive")]
    EmptyDump { n_steps: u32, vocab: u32 },
    #[error("file is {actual} bytes, header requires {expected}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("non-finite logit at step {step}, index {index}")]
    NonFinite { step: usize, index: usize },
    #[error("logit {value} at step {step}, index {index} does not fit 32-bit float")]
    NotRepresentable { step: usize, index: usize, value: f64 },
    #[error("{what} of {value} does not fit a 32-bit header field")]
    HeaderOverflow { what: &'static str, value: usize },
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("result table: {0}")]
    Table(String),
    #[error("unrecognised table header: {0}")]
    UnknownHeader(String),
    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Path { path: String, source: Box<StorageError> },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl StorageError {
    fn at(self, path: &Path) -> Self {
        StorageError::Path { path: path.display().to_string(), source: Box::new(self) }
    }
}

fn header_u32(what: &'static str, value: usize) -> Result<u32, StorageError> {
    u32::try_from(value).map_err(|_| StorageError::HeaderOverflow { what, value })
}

pub fn encode_logit_dump(logits: &LogitSequence, tokens: &TokenSequence) -> Result<Vec<u8>, StorageError> {
    crate::estimation::check_aligned(logits, tokens)?;
    let vocab = logits.vocab();
    let n_steps = logits.n_steps();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n_steps * (vocab + 1));
    out.extend_from_slice(&TLOG_MAGIC);
    for word in [TLOG_VERSION, header_u32("n_steps", n_steps)?, header_u32("vocab", vocab)?, DTYPE_F32] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for (pos, &v) in logits.as_flat().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(StorageError::NotRepresentable { step: pos / vocab, index: pos % vocab, value: v });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    for &t in tokens.tokens() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    Ok(out)
}

fn le_u32(bytes: &[u8]) -> u32 {
    u32::from_le_bytes(bytes.try_into().expect("4-byte slice"))
}

pub fn decode_logit_dump(bytes: &[u8]) -> Result<(LogitSequence, TokenSequence), StorageError> {
    if bytes.len() < HEADER_LEN {
        return Err(StorageError::SizeMismatch { expected: HEADER_LEN as u64, actual: bytes.len() as u64 });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != TLOG_MAGIC {
        return Err(StorageError::BadMagic(magic));
    }
    let version = le_u32(&bytes[4..8]);
    if version != TLOG_VERSION {
        return Err(StorageError::UnsupportedVersion(version));
    }
    let n_steps = le_u32(&bytes[8..12]);
    let vocab = le_u32(&bytes[12..16]);
    let dtype = le_u32(&bytes[16..20]);
    if dtype != DTYPE_F32 {
        return Err(StorageError::UnsupportedDtype(dtype));
    }
    if n_steps == 0 || vocab == 0 {
        return Err(StorageError::EmptyDump { n_steps, vocab });
    }

    // u64 arithmetic cannot overflow for 32-bit dimensions.
    let n_values = n_steps as u64 * vocab as u64;
    let expected = HEADER_LEN as u64 + 4 * n_values + 4 * n_steps as u64;
    if bytes.len() as u64 != expected {
        return Err(StorageError::SizeMismatch { expected, actual: bytes.len() as u64 });
    }
    let (vocab, n_values) = (vocab as usize, n_values as usize);
    let payload = &bytes[HEADER_LEN..HEADER_LEN + 4 * n_values];
    let mut data = Vec::with_capacity(n_values);
    for (pos, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(StorageError::NonFinite { step: pos / vocab, index: pos % vocab });
        }
        data.push(v as f64);
    }
    let tokens = bytes[HEADER_LEN + 4 * n_values..].chunks_exact(4).map(le_u32).collect();
    Ok((LogitSequence::from_flat(vocab, data)?, TokenSequence::new(vocab, tokens)?))
}

pub fn write_logit_dump<W: Write>(
    logits: &LogitSequence,
    tokens: &TokenSequence,
    mut dest: W,
) -> Result<(), StorageError> {
    dest.write_all(&encode_logit_dump(logits, tokens)?)?;
    dest.flush()?;
    Ok(())
}

pub fn read_logit_dump<R: Read>(mut source: R) -> Result<(LogitSequence, TokenSequence), StorageError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_logit_dump(&bytes)
}

pub fn save_logit_dump(path: &Path, logits: &LogitSequence, tokens: &TokenSequence) -> Result<(), StorageError> {
    encode_logit_dump(logits, tokens)
        .and_then(|bytes| fs::write(path, bytes).map_err(StorageError::from))
        .map_err(|e| e.at(path))
}

pub fn load_logit_dump(path: &Path) -> Result<(LogitSequence, TokenSequence), StorageError> {
    fs::read(path).map_err(StorageError::from).and_then(|b| decode_logit_dump(&b)).map_err(|e| e.at(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    Real,
    Text,
    Status,
}

use ColumnKind::*;

/// The fixed set of table layouts this crate reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schema {
    /// One temperature estimate per logit dump.
    Estimate,
    /// One row per generated text in a sweep.
    Sweep,
    /// Pooled metrics per (generator, estimator) pair.
    CrossGrid,
    /// Metrics per (generator, estimator, generation temperature).
    CrossGridPerT,
    /// Mean and population standard deviation of a corpus.
    CorpusSummary,
    /// `x, y, series` points for scatter/line plots.
    SweepPlot,
    /// `row, column, value` triplets.
    Heatmap,
}

impl Schema {
    pub const ALL: [Schema; 7] = [
        Schema::Estimate,
        Schema::Sweep,
        Schema::CrossGrid,
        Schema::CrossGridPerT,
        Schema::CorpusSummary,
        Schema::SweepPlot,
        Schema::Heatmap,
    ];

    pub fn columns(self) -> &'static [(&'static str, ColumnKind)] {
        match self {
            Schema::Estimate => &[
                ("source", Text),
                ("n_steps", Int),
                ("t_hat", Real),
                ("beta_hat", Real),
                ("status", Status),
                ("iterations", Int),
                ("residual", Real),
                ("log_likelihood", Real),
            ],
            Schema::Sweep => &[
                ("gen_model", Text),
                ("est_model", Text),
                ("temperature_index", Int),
                ("gen_temperature", Real),
                ("text_index", Int),
                ("text_seed", Int),
                ("t_hat", Real),
                ("status", Status),
                ("log_likelihood", Real),
            ],
            Schema::CrossGrid => &[
                ("generator", Text),
                ("estimator", Text),
                ("n_rows", Int),
                ("n_converged", Int),
                ("n_flagged", Int),
                ("mae_all", Real),
                ("mae_converged", Real),
                ("r2", Real),
                ("pearson", Real),
            ],
            Schema::CrossGridPerT => &[
                ("generator", Text),
                ("estimator", Text),
                ("gen_temperature", Real),
                ("n_rows", Int),
                ("n_converged", Int),
                ("mean_t_hat", Real),
                ("mae_all", Real),
                ("mae_converged", Real),
            ],
            Schema::CorpusSummary => &[
                ("corpus_id", Text),
                ("n_texts", Int),
                ("n_converged", Int),
                ("n_saturated", Int),
                ("mean_t", Real),
                ("std_t_population", Real),
            ],
            Schema::SweepPlot => &[("x", Real), ("y", Real), ("series", Text)],
            Schema::Heatmap => &[("row", Text), ("column", Text), ("value", Real)],
        }
    }

    pub fn header(self) -> Vec<&'static str> {
        self.columns().iter().map(|c| c.0).collect()
    }

    pub fn column_index(self, name: &str) -> Option<usize> {
        self.columns().iter().position(|c| c.0 == name)
    }

    pub fn from_header<S: AsRef<str>>(header: &[S]) -> Option<Schema> {
        Schema::ALL.into_iter().find(|s| {
            s.columns().len() == header.len() && s.columns().iter().zip(header).all(|(c, h)| c.0 == h.as_ref())
        })
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Schema::Estimate => "estimate",
            Schema::Sweep => "sweep",
            Schema::CrossGrid => "crossgrid",
            Schema::CrossGridPerT => "crossgrid-per-temperature",
            Schema::CorpusSummary => "corpus-summary",
            Schema::SweepPlot => "sweep-plot",
            Schema::Heatmap => "heatmap",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Text(String),
    Status(EstimateStatus),
    Missing,
}

impl Value {
    pub fn real(v: Option<f64>) -> Value {
        v.map_or(Value::Missing, Value::Real)
    }

    fn kind_matches(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Value::Missing, _)
                | (Value::Int(_), Int)
                | (Value::Real(_), Real)
                | (Value::Text(_), Text)
                | (Value::Status(_), Status)
        )
    }

    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Real(v) => format_real(*v),
            Value::Text(s) => s.clone(),
            Value::Status(s) => s.as_str().to_owned(),
            Value::Missing => "NA".to_owned(),
        }
    }

    fn parse(field: &str, kind: ColumnKind) -> Result<Value, String> {
        if field == "NA" {
            return Ok(Value::Missing);
        }
        match kind {
            Int => field.parse().map(Value::Int).map_err(|e| format!("{field:?}: {e}")),
            Real => field.parse::<f64>().map(Value::Real).map_err(|e| format!("{field:?}: {e}")),
            Text => Ok(Value::Text(field.to_owned())),
            Status => field.parse().map(Value::Status),
        }
    }
}

/// Rounds to 9 significant digits and prints the shortest string that reads
/// back to the rounded value.
pub fn format_real(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        // Normalise -0.
        return "0".to_owned();
    }
    rounded.to_string()
}

/// A typed table in one of the known [`Schema`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    schema: Schema,
    rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new(schema: Schema) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<(), StorageError> {
        let columns = self.schema.columns();
        let n = self.rows.len();
        if row.len() != columns.len() {
            return Err(StorageError::MalformedRow {
                row: n,
                message: format!("{} fields, expected {}", row.len(), columns.len()),
            });
        }
        if let Some(((name, kind), _)) = columns.iter().zip(&row).find(|(c, v)| !v.kind_matches(c.1)) {
            return Err(StorageError::MalformedRow { row: n, message: format!("column {name} expects {kind:?}") });
        }
        self.rows.push(row);
        Ok(())
    }

    /// Column `name` of row `row`.
    pub fn get(&self, row: usize, name: &str) -> Option<&Value> {
        self.rows.get(row)?.get(self.schema.column_index(name)?)
    }
}

fn csv_writer<W: Write>(dest: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(dest)
}

pub fn write_results<W: Write>(table: &ResultTable, dest: W) -> Result<(), StorageError> {
    let mut w = csv_writer(dest);
    w.write_record(table.schema.header())?;
    for row in &table.rows {
        w.write_record(row.iter().map(Value::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(source: R) -> Result<ResultTable, StorageError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut records = r.records();
    let header = records.next().ok_or_else(|| StorageError::Table("missing header row".into()))??;
    let fields: Vec<&str> = header.iter().collect();
    let schema = Schema::from_header(&fields).ok_or_else(|| StorageError::UnknownHeader(fields.join(",")))?;
    let mut table = ResultTable::new(schema);
    for (i, record) in records.enumerate() {
        let record = record?;
        let columns = schema.columns();
        if record.len() != columns.len() {
            return Err(StorageError::MalformedRow {
                row: i,
                message: format!("{} fields, expected {}", record.len(), columns.len()),
            });
        }
        let row = record
            .iter()
            .zip(columns)
            .map(|(field, (_, kind))| Value::parse(field, *kind))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|message| StorageError::MalformedRow { row: i, message })?;
        table.rows.push(row);
    }
    Ok(table)
}

pub fn save_results(path: &Path, table: &ResultTable) -> Result<(), StorageError> {
    let mut buf = Vec::new();
    write_results(table, &mut buf)?;
    fs::write(path, buf).map_err(|e| StorageError::from(e).at(path))
}

pub fn load_results(path: &Path) -> Result<ResultTable, StorageError> {
    fs::File::open(path).map_err(StorageError::from).and_then(read_results).map_err(|e| e.at(path))
}

/// A named synthetic model in an experiment spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub id: String,
    #[serde(default = "textgen::default_vocab")]
    pub vocab: usize,
    #[serde(default = "textgen::default_order")]
    pub order: usize,
    #[serde(default = "textgen::default_scale")]
    pub logit_scale: f64,
    pub seed: u64,
}

impl ModelEntry {
    pub fn new(id: impl Into<String>, spec: SyntheticModelSpec) -> Self {
        Self { id: id.into(), vocab: spec.vocab, order: spec.order, logit_scale: spec.logit_scale, seed: spec.seed }
    }

    pub fn spec(&self) -> SyntheticModelSpec {
        SyntheticModelSpec { vocab: self.vocab, order: self.order, logit_scale: self.logit_scale, seed: self.seed }
    }
}

/// Experiment spec file, TOML:
///
/// ```toml
/// seed = 7              # text seed; optional when given on the command line
/// texts_per_t = 10      # optional
/// n_tokens = 200        # optional
///
/// [grid]                # optional, all keys optional
/// t_min = 0.001
/// t_max = 2.401
/// t_step = 0.1
///
/// [solver]              # optional, all keys optional
/// tol_beta_rel = 1e-10
///
/// [[model]]
/// id = "narrow"
/// vocab = 128           # default 128
/// order = 1             # default 1
/// logit_scale = 6.0     # default 3.0
/// seed = 3
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: Option<u64>,
    pub texts_per_t: Option<usize>,
    pub n_tokens: Option<usize>,
    pub grid: Option<TemperatureGrid>,
    pub solver: Option<SolverConfig>,
    #[serde(rename = "model", default)]
    pub models: Vec<ModelEntry>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, StorageError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| StorageError::Spec(e.to_string()))?;
        for (i, m) in spec.models.iter().enumerate() {
            if m.id.is_empty() {
                return Err(StorageError::Spec(format!("model {i} has an empty id")));
            }
            m.spec().validate().map_err(|e| StorageError::Spec(format!("model {:?}: {e}", m.id)))?;
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self, StorageError> {
        fs::read_to_string(path).map_err(StorageError::from).and_then(|t| Self::parse(&t)).map_err(|e| e.at(path))
    }
}
