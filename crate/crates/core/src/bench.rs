//! Benchmark sweeps over methods × ranks × depths × noise levels × seeds.
//!
//! A plan is a JSON object:
//!
//! ```json
//! {
//!   "dataset": { "kind": "powerfn", "dims": [20, 20, 20, 20, 20], "h": 5 },
//!   "methods": ["svd", "rsvd", "rsi", "rbki"],
//!   "ranks": [2, 3, 4, [5, 6, 6, 5]],
//!   "p": 2,
//!   "q": 2,
//!   "seeds": [0, 1, 2, 3, 4],
//!   "snr_db": [5, 10],
//!   "repetitions": 1
//! }
//! ```
//!
//! `dataset.kind` is `spectrum` (keys `n`, `T`, `D`), `powerfn` (keys `dims`,
//! `h`) or `file` (key `path`, a `.dten` file). Each `ranks` entry is either a
//! single integer used for every step or an explicit list `[r_1, ..., r_{N-1}]`.
//! `q` and `snr_db` take a number or a list; `snr_db` may be `null` or omitted
//! for noise-free runs, and a `null` inside the list adds a noise-free level.
//! Optional keys: `repetitions` (default 1), `output`, `format` and `variant`
//! (`{"naive_krylov": .., "include_zeroth_block": .., "svd_truncate": ..}`).

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::datagen::{
    add_awgn, power_function_tensor, spectrum_decay_tensor, tensor_load, PowerFnParams,
    SpectrumParams,
};
use crate::decompose::{decompose, Method, SketchConfig, SweepTrace, VariantFlags};
use crate::error::{Error, Result};
use crate::linalg::RngSeed;
use crate::metrics::{psnr, relative_error};
use crate::tensor::DenseTensor;
use crate::tt::TtTensor;

pub const CSV_HEADER: [&str; 11] = [
    "method",
    "dataset",
    "ranks",
    "p",
    "q",
    "seed",
    "snr_db",
    "rel_err",
    "psnr",
    "wall_time_s",
    "trace_sum_sq",
];

/// Sub-stream of a cell seed reserved for the noise draw.
const NOISE_STREAM: u64 = 0x6e6f_6973_6500;

/// Smallest reported wall time (1 ns clock resolution).
const MIN_WALL_TIME: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    Spectrum(SpectrumParams),
    Powerfn(PowerFnParams),
    File { path: PathBuf },
}

impl DatasetSpec {
    pub fn build(&self) -> Result<DenseTensor> {
        match self {
            DatasetSpec::Spectrum(p) => spectrum_decay_tensor(p),
            DatasetSpec::Powerfn(p) => power_function_tensor(p),
            DatasetSpec::File { path } => tensor_load(path),
        }
    }

    /// Short identifier used in records.
    pub fn id(&self) -> String {
        match self {
            DatasetSpec::Spectrum(p) => format!("spectrum-n{}-T{}-D{}", p.n, p.plateau, p.decay),
            DatasetSpec::Powerfn(p) => {
                let dims: Vec<String> = p.dims.iter().map(|d| d.to_string()).collect();
                format!("powerfn-{}-h{}", dims.join("x"), p.h)
            }
            DatasetSpec::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankEntry {
    Uniform(usize),
    Explicit(Vec<usize>),
}

impl RankEntry {
    pub fn expand(&self, order: usize) -> Vec<usize> {
        match self {
            RankEntry::Uniform(r) => vec![*r; order.saturating_sub(1)],
            RankEntry::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    // tried first so `[3]` in `ranks` is a sweep of one uniform rank
    Many(Vec<T>),
    One(T),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchPlan {
    pub dataset: DatasetSpec,
    pub methods: Vec<Method>,
    pub ranks: Vec<RankEntry>,
    pub p: usize,
    pub q: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `None` entries mean no noise.
    pub snr_db: Vec<Option<f64>>,
    pub repetitions: usize,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub variant: VariantFlags,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    dataset: DatasetSpec,
    methods: Vec<String>,
    ranks: OneOrMany<RankEntry>,
    p: usize,
    q: OneOrMany<usize>,
    seeds: OneOrMany<u64>,
    #[serde(default)]
    snr_db: Option<OneOrMany<Option<f64>>>,
    #[serde(default)]
    repetitions: Option<usize>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    format: Option<OutputFormat>,
    #[serde(default)]
    variant: VariantFlags,
}

/// Byte offset of a 1-based (line, column) position.
fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)) as u64
}

impl BenchPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PlanFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(byte_offset(text, e.line(), e.column()), e.to_string()))?;
        let methods = raw
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        let plan = BenchPlan {
            dataset: raw.dataset,
            methods,
            ranks: raw.ranks.into_vec(),
            p: raw.p,
            q: raw.q.into_vec(),
            seeds: raw.seeds.into_vec(),
            snr_db: match raw.snr_db {
                None => vec![None],
                Some(s) => s.into_vec(),
            },
            repetitions: raw.repetitions.unwrap_or(1),
            output: raw.output,
            format: raw.format,
            variant: raw.variant,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("methods", self.methods.is_empty()),
            ("ranks", self.ranks.is_empty()),
            ("q", self.q.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("snr_db", self.snr_db.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::invalid(format!("bench plan sweep '{name}' is empty")));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        if let Some(s) = self.snr_db.iter().flatten().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("snr_db must be finite, got {s}")));
        }
        Ok(())
    }
}

/// One measurement row. Failed cells carry NaN metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub method: Method,
    pub dataset: String,
    pub ranks: Vec<usize>,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub rel_err: f64,
    /// `+∞` when the reconstruction is exact.
    pub psnr: f64,
    /// Minimum over repetitions of the decomposition time alone.
    pub wall_time_s: f64,
    /// `Σ ρ_n²` of the sweep trace.
    pub trace_sum_sq: f64,
}

impl BenchRecord {
    pub fn is_error(&self) -> bool {
        self.rel_err.is_nan()
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        let snr = |r: &BenchRecord| r.snr_db.unwrap_or(f64::NEG_INFINITY);
        self.dataset
            .cmp(&other.dataset)
            .then(self.method.cmp(&other.method))
            .then(self.ranks.cmp(&other.ranks))
            .then(self.q.cmp(&other.q))
            .then(snr(self).total_cmp(&snr(other)))
            .then(self.seed.cmp(&other.seed))
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    /// One message per failed cell; the matching record has NaN metrics.
    pub failures: Vec<String>,
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchOutput> {
    run_bench_with(plan, decompose)
}

/// Runs `plan` with a custom decomposition routine in place of the
/// built-in sweeps.
pub fn run_bench_with<F>(plan: &BenchPlan, mut decomposer: F) -> Result<BenchOutput>
where
    F: FnMut(Method, &DenseTensor, &SketchConfig) -> Result<(TtTensor, SweepTrace)>,
{
    plan.validate()?;
    let clean = plan.dataset.build()?;
    let dataset = plan.dataset.id();
    let order = clean.order();
    let mut out = BenchOutput::default();

    for &snr in &plan.snr_db {
        for &seed in &plan.seeds {
            let noisy = match snr {
                Some(db) => Some(add_awgn(&clean, db, RngSeed(seed).derive(NOISE_STREAM))?),
                None => None,
            };
            let input = noisy.as_ref().unwrap_or(&clean);
            for &method in &plan.methods {
                for entry in &plan.ranks {
                    let ranks = entry.expand(order);
                    for &q in &plan.q {
                        let cfg = SketchConfig::new(ranks.clone())
                            .with_oversampling(plan.p)
                            .with_depth(q)
                            .with_seed(seed)
                            .with_variant(plan.variant);
                        let mut record = BenchRecord {
                            method,
                            dataset: dataset.clone(),
                            ranks: ranks.clone(),
                            p: plan.p,
                            q,
                            seed,
                            snr_db: snr,
                            rel_err: f64::NAN,
                            psnr: f64::NAN,
                            wall_time_s: f64::NAN,
                            trace_sum_sq: f64::NAN,
                        };
                        match run_cell(&mut decomposer, method, input, &clean, &cfg, plan.repetitions)
                        {
                            Ok((rel_err, p, wall, sum_sq)) => {
                                record.rel_err = rel_err;
                                record.psnr = p;
                                record.wall_time_s = wall;
                                record.trace_sum_sq = sum_sq;
                            }
                            Err(e) => out.failures.push(format!(
                                "{method} ranks {ranks:?} q={q} seed={seed} snr={snr:?}: {e}"
                            )),
                        }
                        out.records.push(record);
                    }
                }
            }
        }
    }
    out.records.sort_by(BenchRecord::sort_key_cmp);
    Ok(out)
}

fn run_cell<F>(
    decomposer: &mut F,
    method: Method,
    input: &DenseTensor,
    clean: &DenseTensor,
    cfg: &SketchConfig,
    repetitions: usize,
) -> Result<(f64, f64, f64, f64)>
where
    F: FnMut(Method, &DenseTensor, &SketchConfig) -> Result<(TtTensor, SweepTrace)>,
{
    let mut best = f64::INFINITY;
    let mut result = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let res = decomposer(method, input, cfg)?;
        best = best.min(start.elapsed().as_secs_f64());
        result = Some(res);
    }
    let (tt, trace) = result.expect("repetitions >= 1");
    let approx = tt.reconstruct()?;
    let rel_err = relative_error(clean, &approx)?;
    let p = psnr(clean, &approx)?;
    Ok((rel_err, p, best.max(MIN_WALL_TIME), trace.residual_sum_sq()))
}

/// 17 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(0, format!("field '{field}': '{s}' is not a number")))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let offset = e.position().map(|p| p.byte()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(offset, format!("{other:?}")),
    }
}

fn record_fields(r: &BenchRecord) -> [String; 11] {
    let ranks: Vec<String> = r.ranks.iter().map(|x| x.to_string()).collect();
    [
        r.method.to_string(),
        r.dataset.clone(),
        ranks.join(";"),
        r.p.to_string(),
        r.q.to_string(),
        r.seed.to_string(),
        r.snr_db.map(fmt_float).unwrap_or_default(),
        fmt_float(r.rel_err),
        fmt_float(r.psnr),
        fmt_float(r.wall_time_s),
        fmt_float(r.trace_sum_sq),
    ]
}

pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> std::result::Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.write_record(record_fields(r))?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRowOut<'a> {
    method: &'a str,
    dataset: &'a str,
    ranks: &'a [usize],
    p: usize,
    q: usize,
    seed: u64,
    snr_db: Option<Box<RawValue>>,
    rel_err: Box<RawValue>,
    psnr: Box<RawValue>,
    wall_time_s: Box<RawValue>,
    trace_sum_sq: Box<RawValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRowIn {
    method: String,
    dataset: String,
    ranks: Vec<usize>,
    p: usize,
    q: usize,
    seed: u64,
    snr_db: Option<serde_json::Value>,
    rel_err: serde_json::Value,
    psnr: serde_json::Value,
    wall_time_s: serde_json::Value,
    trace_sum_sq: serde_json::Value,
}

/// Finite values become JSON numbers; `inf`/`NaN` become strings.
fn json_float(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        fmt_float(x)
    } else {
        format!("\"{x}\"")
    };
    RawValue::from_string(text).expect("float literal is valid JSON")
}

fn from_json_float(field: &str, v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::parse(0, format!("field '{field}' out of range"))),
        serde_json::Value::String(s) => parse_float(field, s),
        other => Err(Error::parse(0, format!("field '{field}': unexpected {other}"))),
    }
}

pub fn write_json<W: Write>(records: &[BenchRecord], w: W) -> serde_json::Result<()> {
    let rows: Vec<JsonRowOut> = records
        .iter()
        .map(|r| JsonRowOut {
            method: r.method.name(),
            dataset: &r.dataset,
            ranks: &r.ranks,
            p: r.p,
            q: r.q,
            seed: r.seed,
            snr_db: r.snr_db.map(json_float),
            rel_err: json_float(r.rel_err),
            psnr: json_float(r.psnr),
            wall_time_s: json_float(r.wall_time_s),
            trace_sum_sq: json_float(r.trace_sum_sq),
        })
        .collect();
    serde_json::to_writer_pretty(w, &rows)
}

/// Writes `records` to `path` in the chosen format.
pub fn emit(records: &[BenchRecord], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(records, &mut w).map_err(|e| csv_err(path, e))?,
        OutputFormat::Json => {
            write_json(records, &mut w).map_err(|e| Error::io(path, e.into()))?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| csv_err(Path::new("<csv>"), e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(0, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| csv_err(Path::new("<csv>"), e))?;
        let offset = row.position().map(|p| p.byte()).unwrap_or(0);
        if row.len() != CSV_HEADER.len() {
            return Err(Error::parse(offset, format!("expected 11 fields, got {}", row.len())));
        }
        let int = |i: usize| -> Result<u64> {
            row[i].parse().map_err(|_| {
                Error::parse(offset, format!("field '{}': '{}' is not an integer", CSV_HEADER[i], &row[i]))
            })
        };
        let ranks = if row[2].is_empty() {
            Vec::new()
        } else {
            row[2]
                .split(';')
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::parse(offset, format!("bad rank '{s}'")))
                })
                .collect::<Result<Vec<usize>>>()?
        };
        out.push(BenchRecord {
            method: row[0].parse()?,
            dataset: row[1].to_string(),
            ranks,
            p: int(3)? as usize,
            q: int(4)? as usize,
            seed: int(5)?,
            snr_db: if row[6].is_empty() {
                None
            } else {
                Some(parse_float("snr_db", &row[6])?)
            },
            rel_err: parse_float("rel_err", &row[7])?,
            psnr: parse_float("psnr", &row[8])?,
            wall_time_s: parse_float("wall_time_s", &row[9])?,
            trace_sum_sq: parse_float("trace_sum_sq", &row[10])?,
        });
    }
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<Vec<BenchRecord>> {
    let rows: Vec<JsonRowIn> = serde_json::from_str(text)
        .map_err(|e| Error::parse(byte_offset(text, e.line(), e.column()), e.to_string()))?;
    rows.into_iter()
        .map(|r| {
            Ok(BenchRecord {
                method: r.method.parse()?,
                dataset: r.dataset,
                ranks: r.ranks,
                p: r.p,
                q: r.q,
                seed: r.seed,
                snr_db: match &r.snr_db {
                    None | Some(serde_json::Value::Null) => None,
                    Some(v) => Some(from_json_float("snr_db", v)?),
                },
                rel_err: from_json_float("rel_err", &r.rel_err)?,
                psnr: from_json_float("psnr", &r.psnr)?,
                wall_time_s: from_json_float("wall_time_s", &r.wall_time_s)?,
                trace_sum_sq: from_json_float("trace_sum_sq", &r.trace_sum_sq)?,
            })
        })
        .collect()
}

pub fn read_records(path: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        OutputFormat::Csv => parse_csv(&text),
        OutputFormat::Json => parse_json(&text),
    }
}

/// Median of the finite entries, `None` if there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
