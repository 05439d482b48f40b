//! CSV ingestion, run manifests and pipeline orchestration for the `gsd`
//! command-line tool.
//!
//! A run reads one CSV with a header row, splits it into two groups by a
//! label column, maps the declared cardinal and ordinal columns onto
//! points (cardinal first, then ordinal, in declaration order), executes
//! the permutation test and writes a self-describing result document
//! plus flat tabular files for the resample distributions and the
//! p-value-versus-contamination curves. Everything emitted is a pure
//! function of the input file, the configuration and the seed; the run
//! timestamp lives only in the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use gsd_core::{
    build_constraints, build_pooled, pvalue_curve, reversed_test, run_test, CurvePoint, LpError,
    ModelError, Point, ResampleMode, ScaleSchema, TestConfig, TestError, TestReport,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file error: {0}")]
    File(String),
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("unknown level at {location}: {value:?} is not declared for column {column:?}")]
    UnknownLevel { location: String, column: String, value: String },
    #[error("non-finite number at {location}: {value:?} in column {column:?}")]
    NonFiniteNumber { location: String, column: String, value: String },
    #[error("empty group: no rows labelled {0:?}")]
    EmptyGroup(String),
}

/// One ordinal column and its level order, lowest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalSpec {
    pub column: String,
    pub levels: Vec<String>,
}

/// Declares how a CSV maps onto a two-group mixed-scale sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub csv_path: PathBuf,
    pub group_column: String,
    pub group_x: String,
    pub group_y: String,
    pub cardinal_columns: Vec<String>,
    pub ordinal_columns: Vec<OrdinalSpec>,
    /// Explicit bounds per column (lowest point, then highest point),
    /// cardinal values first and ordinal level labels after.
    pub bounds: Option<(Vec<String>, Vec<String>)>,
}

impl DatasetSpec {
    fn validate(&self) -> Result<(), IngestError> {
        if self.group_x == self.group_y {
            return Err(IngestError::Schema {
                location: "dataset spec".into(),
                message: "group labels must be distinct".into(),
            });
        }
        let mut seen: Vec<&str> = Vec::new();
        for c in self
            .cardinal_columns
            .iter()
            .chain(self.ordinal_columns.iter().map(|o| &o.column))
            .chain(std::iter::once(&self.group_column))
        {
            if seen.contains(&c.as_str()) {
                return Err(IngestError::Schema {
                    location: "dataset spec".into(),
                    message: format!("column {:?} used more than once", c),
                });
            }
            seen.push(c);
        }
        for o in &self.ordinal_columns {
            if o.levels.len() < 2 {
                return Err(IngestError::Schema {
                    location: "dataset spec".into(),
                    message: format!("ordinal column {:?} declares fewer than 2 levels", o.column),
                });
            }
        }
        Ok(())
    }

    /// The scale schema implied by the declared columns.
    pub fn schema(&self) -> Result<ScaleSchema, IngestError> {
        ScaleSchema::new(
            self.cardinal_columns.len(),
            self.ordinal_columns.iter().map(|o| o.levels.clone()).collect(),
        )
        .map_err(|e| IngestError::Schema { location: "dataset spec".into(), message: e.to_string() })
    }
}

/// Reads and validates the CSV, returning the two observation groups and
/// the schema. Rows whose group label matches neither declared group are
/// ignored; missing values in used columns are errors.
pub fn ingest(spec: &DatasetSpec) -> Result<(Vec<Point>, Vec<Point>, ScaleSchema), IngestError> {
    spec.validate()?;
    let schema = spec.schema()?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&spec.csv_path)
        .map_err(|e| IngestError::File(e.to_string()))?;

    let headers = reader.headers().map_err(|e| IngestError::File(e.to_string()))?.clone();
    let col_index = |name: &str| -> Result<usize, IngestError> {
        headers.iter().position(|h| h == name).ok_or_else(|| IngestError::Schema {
            location: "header".into(),
            message: format!("column {:?} not found", name),
        })
    };
    let group_idx = col_index(&spec.group_column)?;
    let cardinal_idx: Vec<usize> = spec
        .cardinal_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_, _>>()?;
    let ordinal_idx: Vec<usize> = spec
        .ordinal_columns
        .iter()
        .map(|o| col_index(&o.column))
        .collect::<Result<_, _>>()?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header occupies line 1
        let record = record.map_err(|e| IngestError::File(e.to_string()))?;
        let group = record.get(group_idx).unwrap_or("");
        let is_x = group == spec.group_x;
        if !is_x && group != spec.group_y {
            continue;
        }

        let cell = |idx: usize, column: &str| -> Result<String, IngestError> {
            let raw = record.get(idx).unwrap_or("").to_string();
            if raw.is_empty() {
                return Err(IngestError::Schema {
                    location: format!("line {}", line),
                    message: format!("missing value in column {:?}", column),
                });
            }
            Ok(raw)
        };

        let mut cardinal = Vec::with_capacity(cardinal_idx.len());
        for (idx, column) in cardinal_idx.iter().zip(&spec.cardinal_columns) {
            let raw = cell(*idx, column)?;
            let value: f64 = raw.parse().unwrap_or(f64::NAN);
            if !value.is_finite() {
                return Err(IngestError::NonFiniteNumber {
                    location: format!("line {}", line),
                    column: column.clone(),
                    value: raw,
                });
            }
            cardinal.push(value);
        }
        let mut ordinal = Vec::with_capacity(ordinal_idx.len());
        for (idx, ospec) in ordinal_idx.iter().zip(&spec.ordinal_columns) {
            let raw = cell(*idx, &ospec.column)?;
            let Some(rank) = schema.rank_of(ordinal.len(), &raw) else {
                return Err(IngestError::UnknownLevel {
                    location: format!("line {}", line),
                    column: ospec.column.clone(),
                    value: raw,
                });
            };
            ordinal.push(rank);
        }

        let point = Point::new(cardinal, ordinal, &schema).map_err(|e| IngestError::Schema {
            location: format!("line {}", line),
            message: e.to_string(),
        })?;
        if is_x {
            xs.push(point);
        } else {
            ys.push(point);
        }
    }

    if xs.is_empty() {
        return Err(IngestError::EmptyGroup(spec.group_x.clone()));
    }
    if ys.is_empty() {
        return Err(IngestError::EmptyGroup(spec.group_y.clone()));
    }
    Ok((xs, ys, schema))
}

/// Parses the explicit bounds of a dataset spec into points.
pub fn parse_bounds(
    spec: &DatasetSpec,
    schema: &ScaleSchema,
) -> Result<Option<(Point, Point)>, IngestError> {
    let Some((lo, hi)) = &spec.bounds else { return Ok(None) };
    let parse_one = |cells: &[String], what: &str| -> Result<Point, IngestError> {
        let z = spec.cardinal_columns.len();
        if cells.len() != z + spec.ordinal_columns.len() {
            return Err(IngestError::Schema {
                location: "bounds".into(),
                message: format!("{} bound needs one entry per declared column", what),
            });
        }
        let mut cardinal = Vec::with_capacity(z);
        for (raw, column) in cells[..z].iter().zip(&spec.cardinal_columns) {
            let v: f64 = raw.parse().unwrap_or(f64::NAN);
            if !v.is_finite() {
                return Err(IngestError::NonFiniteNumber {
                    location: "bounds".into(),
                    column: column.clone(),
                    value: raw.clone(),
                });
            }
            cardinal.push(v);
        }
        let mut ordinal = Vec::new();
        for (d, (raw, ospec)) in cells[z..].iter().zip(&spec.ordinal_columns).enumerate() {
            let Some(rank) = schema.rank_of(d, raw) else {
                return Err(IngestError::UnknownLevel {
                    location: "bounds".into(),
                    column: ospec.column.clone(),
                    value: raw.clone(),
                });
            };
            ordinal.push(rank);
        }
        Point::new(cardinal, ordinal, schema).map_err(|e| IngestError::Schema {
            location: "bounds".into(),
            message: e.to_string(),
        })
    };
    Ok(Some((parse_one(lo, "lower")?, parse_one(hi, "upper")?)))
}

/// Reproducibility record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub created_utc: String,
    pub dataset: DatasetSpec,
    pub config: TestConfig,
    /// Hex SHA-256 over the input file bytes and the canonical JSON of
    /// dataset spec and configuration.
    pub digest: String,
}

/// Recomputes the reproducibility digest of a run.
pub fn run_digest(input: &[u8], dataset: &DatasetSpec, config: &TestConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(input);
    hasher.update(serde_json::to_vec(dataset).expect("dataset spec serializes"));
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{:02x}", b));
    }
    out
}

/// Self-describing result document written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub report: TestReport,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("data error: {0}")]
    Model(#[from] ModelError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl From<TestError> for RunError {
    fn from(e: TestError) -> Self {
        match e {
            TestError::Lp(inner) => RunError::Numerical(inner.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<LpError> for RunError {
    fn from(e: LpError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl RunError {
    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Ingest(_) | RunError::Model(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Output(_) => 2,
        }
    }
}

/// Everything a finished run wrote, for callers that post-process.
pub struct RunOutputs {
    pub manifest: RunManifest,
    pub report: TestReport,
    pub reversed_report: Option<TestReport>,
    pub out_dir: PathBuf,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::Output(format!("{}: {}", path.display(), e)))
}

fn resamples_csv(report: &TestReport) -> String {
    let mut out = String::from("epsilon,resample,statistic,weight\n");
    for block in &report.blocks {
        for (i, value) in block.values.iter().enumerate() {
            let w = block.weights.as_ref().map_or(1, |ws| ws[i]);
            out.push_str(&format!("{},{},{},{}\n", block.epsilon, i, value, w));
        }
    }
    out
}

fn curves_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("epsilon,gamma,p_value,reject\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.epsilon, p.gamma, p.p_value, p.reject));
    }
    out
}

/// Executes the full pipeline and writes all outputs into `out_dir`.
pub fn execute(
    dataset: &DatasetSpec,
    config: &TestConfig,
    out_dir: &Path,
    dump_constraints: bool,
    with_reversed: bool,
) -> Result<RunOutputs, RunError> {
    let (xs, ys, schema) = ingest(dataset)?;
    let bounds = parse_bounds(dataset, &schema)?;
    let pooled = build_pooled(&xs, &ys, &schema, bounds)?;
    let cs = build_constraints(&pooled);

    let report = run_test(&pooled, &cs, config)?;
    let reversed_report = if with_reversed {
        Some(reversed_test(&pooled, &cs, config)?)
    } else {
        None
    };

    fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Output(format!("{}: {}", out_dir.display(), e)))?;

    let input_bytes = fs::read(&dataset.csv_path)
        .map_err(|e| IngestError::File(e.to_string()))
        .map_err(RunError::Ingest)?;
    let manifest = RunManifest {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_utc: chrono::Utc::now().to_rfc3339(),
        dataset: dataset.clone(),
        config: config.clone(),
        digest: run_digest(&input_bytes, dataset, config),
    };

    write_file(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
    )?;
    let doc = ReportDocument { schema_version: REPORT_SCHEMA_VERSION, report: report.clone() };
    write_file(&out_dir.join("report.json"), serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
    write_file(&out_dir.join("resamples.csv"), resamples_csv(&report).as_bytes())?;
    let curve = pvalue_curve(&report, &config.gammas().to_vec())?;
    write_file(&out_dir.join("pvalues_gamma.csv"), curves_csv(&curve).as_bytes())?;

    if let Some(rev) = &reversed_report {
        let doc = ReportDocument { schema_version: REPORT_SCHEMA_VERSION, report: rev.clone() };
        write_file(
            &out_dir.join("report_reversed.json"),
            serde_json::to_string_pretty(&doc).unwrap().as_bytes(),
        )?;
        write_file(&out_dir.join("resamples_reversed.csv"), resamples_csv(rev).as_bytes())?;
        let curve = pvalue_curve(rev, &config.gammas().to_vec())?;
        write_file(&out_dir.join("pvalues_gamma_reversed.csv"), curves_csv(&curve).as_bytes())?;
    }

    if dump_constraints {
        let mut buf = Vec::new();
        cs.dump(&mut buf).map_err(|e| RunError::Output(e.to_string()))?;
        write_file(&out_dir.join("constraints.txt"), &buf)?;
    }

    Ok(RunOutputs {
        manifest,
        report,
        reversed_report,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Prints a short human summary of a finished run.
pub fn summarize(out: &mut dyn std::io::Write, outputs: &RunOutputs) -> std::io::Result<()> {
    let r = &outputs.report;
    writeln!(
        out,
        "n = {}, m = {}, s = {} pooled points, separation margin = {}",
        r.n, r.m, r.s, r.xi_star
    )?;
    writeln!(out, "epsilon  gamma    p-value  reject")?;
    for cell in &r.cells {
        writeln!(
            out,
            "{:<8} {:<8} {:<8.5} {}",
            cell.epsilon, cell.gamma, cell.p_value, cell.reject
        )?;
    }
    if let Some(rev) = &outputs.reversed_report {
        writeln!(out, "reversed roles:")?;
        for cell in &rev.cells {
            writeln!(
                out,
                "{:<8} {:<8} {:<8.5} {}",
                cell.epsilon, cell.gamma, cell.p_value, cell.reject
            )?;
        }
    }
    writeln!(out, "outputs written to {}", outputs.out_dir.display())?;
    Ok(())
}

/// Command-line surface of the tool.
pub mod cli {
    use super::*;
    use clap::Parser;

    #[derive(Debug, Parser)]
    #[command(
        name = "gsd",
        about = "Tests generalized stochastic dominance between two groups of mixed-scale observations",
        disable_help_flag = false
    )]
    pub struct Args {
        /// Input CSV file with a header row (UTF-8)
        #[arg(long)]
        pub input: PathBuf,

        /// Name of the column holding the group labels
        #[arg(long = "group-col")]
        pub group_col: String,

        /// The two group labels as X,Y (X is tested for dominance over Y)
        #[arg(long)]
        pub groups: String,

        /// Comma-separated cardinal column names
        #[arg(long, value_delimiter = ',')]
        pub cardinal: Vec<String>,

        /// Ordinal column as name:level1<level2<..., lowest level first (repeatable)
        #[arg(long = "ordinal")]
        pub ordinal: Vec<String>,

        /// Comma-separated regularization strengths in [0,1]
        #[arg(long, value_delimiter = ',', default_value = "0")]
        pub epsilon: Vec<f64>,

        /// Comma-separated contamination levels in [0,1]
        #[arg(long, value_delimiter = ',', default_value = "0")]
        pub gamma: Vec<f64>,

        /// Number of Monte-Carlo resamples (default 1000)
        #[arg(long, conflicts_with = "exact")]
        pub resamples: Option<u64>,

        /// Enumerate all group splits instead of sampling
        #[arg(long)]
        pub exact: bool,

        /// Significance level in (0,1)
        #[arg(long, default_value_t = 0.05)]
        pub alpha: f64,

        /// Seed for the resampling draws
        #[arg(long, default_value_t = 0)]
        pub seed: u64,

        /// Additionally run the test with the group roles reversed
        #[arg(long)]
        pub reversed: bool,

        /// Output directory (created if absent)
        #[arg(long)]
        pub out: PathBuf,

        /// Also write the generated constraint system as plain text
        #[arg(long = "dump-constraints")]
        pub dump_constraints: bool,
    }

    fn parse_ordinal_flag(raw: &str) -> Result<OrdinalSpec, RunError> {
        let (column, levels) = raw.split_once(':').ok_or_else(|| {
            RunError::Config(format!(
                "--ordinal {:?} must look like column:low<mid<high",
                raw
            ))
        })?;
        let levels: Vec<String> = levels.split('<').map(|s| s.trim().to_string()).collect();
        if column.trim().is_empty() || levels.len() < 2 || levels.iter().any(|l| l.is_empty()) {
            return Err(RunError::Config(format!(
                "--ordinal {:?} must declare a column and at least two levels",
                raw
            )));
        }
        Ok(OrdinalSpec { column: column.trim().to_string(), levels })
    }

    pub fn dataset_from_args(args: &Args) -> Result<DatasetSpec, RunError> {
        let (gx, gy) = args.groups.split_once(',').ok_or_else(|| {
            RunError::Config("--groups must name two labels as X,Y".to_string())
        })?;
        let ordinal_columns = args
            .ordinal
            .iter()
            .map(|o| parse_ordinal_flag(o))
            .collect::<Result<Vec<_>, _>>()?;
        if args.cardinal.is_empty() && ordinal_columns.is_empty() {
            return Err(RunError::Config(
                "declare at least one --cardinal or --ordinal column".into(),
            ));
        }
        Ok(DatasetSpec {
            csv_path: args.input.clone(),
            group_column: args.group_col.clone(),
            group_x: gx.trim().to_string(),
            group_y: gy.trim().to_string(),
            cardinal_columns: args.cardinal.clone(),
            ordinal_columns,
            bounds: None,
        })
    }

    pub fn config_from_args(args: &Args) -> Result<TestConfig, RunError> {
        let mode = if args.exact {
            ResampleMode::Exact
        } else {
            ResampleMode::MonteCarlo { resamples: args.resamples.unwrap_or(1000) }
        };
        TestConfig::new(args.epsilon.clone(), args.gamma.clone(), mode, args.alpha, args.seed)
            .map_err(|e| RunError::Config(e.to_string()))
    }

    /// Parses arguments and executes a run; returns the process exit code.
    pub fn run<I, T>(argv: I) -> i32
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let args = match Args::try_parse_from(argv) {
            Ok(a) => a,
            Err(e) => {
                // help and version requests are successful exits
                use clap::error::ErrorKind;
                let code = match e.kind() {
                    ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                    _ => 1,
                };
                let _ = e.print();
                return code;
            }
        };
        let result = dataset_from_args(&args)
            .and_then(|dataset| Ok((dataset, config_from_args(&args)?)))
            .and_then(|(dataset, config)| {
                execute(&dataset, &config, &args.out, args.dump_constraints, args.reversed)
            });
        match result {
            Ok(outputs) => {
                let mut stdout = std::io::stdout();
                if summarize(&mut stdout, &outputs).is_err() {
                    return 2;
                }
                0
            }
            Err(e) => {
                eprintln!("error: {}", e);
                e.exit_code()
            }
        }
    }
}
