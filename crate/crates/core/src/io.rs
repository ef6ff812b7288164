//! File formats: OR-Library p-median instances, numeric CSV point sets,
//! known-optima sidecars and experiment reports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

/// A p-median instance: an undirected graph with integer edge costs and the
/// number of centers `k` (the format's `p`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmedInstance {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// 1-based endpoints.
    pub edges: Vec<(usize, usize, u64)>,
}

/// Parses the OR-Library format: `n m p` followed by `m` triples `u v cost`,
/// separated by arbitrary whitespace.
pub fn parse_pmed(text: &str) -> Result<PmedInstance> {
    let mut tokens = text.split_whitespace();
    let mut field = |what: &str| -> Result<Option<u64>> {
        match tokens.next() {
            None => Ok(None),
            Some(tok) => tok.parse::<u64>().map(Some).map_err(|_| {
                Error::Parse(format!("{what}: '{tok}' is not a non-negative integer"))
            }),
        }
    };
    let mut header = |what: &str| -> Result<usize> {
        field(what)?
            .map(|v| v as usize)
            .ok_or_else(|| Error::Parse(format!("missing header field {what}")))
    };
    let n = header("n")?;
    let m = header("m")?;
    let k = header("p")?;
    if n == 0 {
        return Err(Error::Parse("instance has no vertices".into()));
    }

    let mut edges = Vec::with_capacity(m);
    for i in 0..m {
        let Some(u) = field("edge endpoint")? else {
            return Err(Error::Parse(format!("expected {m} edges, found {i}")));
        };
        let (Some(v), Some(cost)) = (field("edge endpoint")?, field("edge cost")?) else {
            return Err(Error::Parse(format!("edge {} is truncated", i + 1)));
        };
        let (u, v) = (u as usize, v as usize);
        if u == 0 || v == 0 || u > n || v > n {
            return Err(Error::Parse(format!(
                "edge {}: endpoint {u}-{v} outside [1, {n}]",
                i + 1
            )));
        }
        if cost == 0 {
            return Err(Error::Parse(format!(
                "edge {}: cost must be positive",
                i + 1
            )));
        }
        edges.push((u, v, cost));
    }
    if field("trailing token")?.is_some() {
        return Err(Error::Parse(format!("unexpected tokens after {m} edges")));
    }
    Ok(PmedInstance { n, m, k, edges })
}

pub fn read_pmed(path: &Path) -> Result<PmedInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pmed(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl PmedInstance {
    /// Edge list after resolving repeated vertex pairs: the last listed cost
    /// of a pair is the one that counts, as in the OR-Library convention.
    pub fn resolved_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut last: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(u, v, c) in &self.edges {
            last.insert((u.min(v), u.max(v)), c);
        }
        last.into_iter()
            .map(|((u, v), c)| (u, v, c as f64))
            .collect()
    }

    /// Shortest-path metric of the graph.
    pub fn to_metric(&self) -> Result<MetricSpace> {
        MetricSpace::from_graph(self.n, &self.resolved_edges())
    }
}

/// How a CSV column is rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMethod {
    /// Affine map of the fitted range onto [0, 1].
    #[default]
    MinMax,
    /// Subtract the mean, divide by the population standard deviation.
    ZScore,
    None,
}

impl FromStr for NormalizeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" => Ok(NormalizeMethod::MinMax),
            "zscore" => Ok(NormalizeMethod::ZScore),
            "none" => Ok(NormalizeMethod::None),
            _ => Err(Error::InvalidParameter(format!(
                "unknown normalization '{s}'"
            ))),
        }
    }
}

/// Fitted per-column affine map `x -> (x - offset) / span`. Constant
/// columns get a zero span and map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub methods: Vec<NormalizeMethod>,
    pub offsets: Vec<f64>,
    pub spans: Vec<f64>,
}

impl NormalizationSpec {
    /// Fits one method per column of `rows`.
    pub fn fit(rows: &[Vec<f64>], methods: &[NormalizeMethod]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("rows to normalize"));
        }
        let mut offsets = Vec::with_capacity(methods.len());
        let mut spans = Vec::with_capacity(methods.len());
        for (j, method) in methods.iter().enumerate() {
            let col = rows.iter().map(|r| r[j]);
            let (offset, span) = match method {
                NormalizeMethod::MinMax => {
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                    (lo, if hi > lo { hi - lo } else { 0.0 })
                }
                NormalizeMethod::ZScore => {
                    let len = rows.len() as f64;
                    let mean = col.clone().sum::<f64>() / len;
                    let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / len;
                    (mean, var.sqrt())
                }
                NormalizeMethod::None => (0.0, 1.0),
            };
            offsets.push(offset);
            spans.push(span);
        }
        Ok(NormalizationSpec {
            methods: methods.to_vec(),
            offsets,
            spans,
        })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.offsets.iter().zip(&self.spans))
            .map(|(&x, (&o, &s))| {
                let y = if s > 0.0 { (x - o) / s } else { 0.0 };
                // Avoid -0.0 so output is stable under repeated application.
                if y == 0.0 {
                    0.0
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Options for [`load_points_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub columns: Vec<String>,
    /// One method per column, or a single method applied to all.
    pub normalize: Vec<NormalizeMethod>,
    pub sample_size: Option<usize>,
    pub seed: u64,
}

/// Reads the named numeric columns from a headed, comma-separated file.
///
/// Rows with a missing or non-numeric value in a selected column are
/// skipped. Normalization is fitted on every parsed row, then an optional
/// uniform sample without replacement is drawn in original row order.
pub fn load_points_csv(path: &Path, options: &CsvOptions) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_points_csv(file, options)
}

pub fn read_points_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Vec<Vec<f64>>> {
    if options.columns.is_empty() {
        return Err(Error::Empty("column list"));
    }
    let methods = match options.normalize.len() {
        0 => vec![NormalizeMethod::default(); options.columns.len()],
        1 => vec![options.normalize[0]; options.columns.len()],
        l if l == options.columns.len() => options.normalize.clone(),
        l => {
            return Err(Error::InvalidParameter(format!(
                "{l} normalization methods for {} columns",
                options.columns.len()
            )))
        }
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("csv header: {e}")))?
        .clone();
    let indices = options
        .columns
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let parsed: Option<Vec<f64>> = indices
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|x| x.is_finite())
            })
            .collect();
        if let Some(row) = parsed {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no parseable rows".into()));
    }

    let spec = NormalizationSpec::fit(&rows, &methods)?;
    let mut points: Vec<Vec<f64>> = rows.iter().map(|r| spec.apply(r)).collect();

    if let Some(size) = options.sample_size {
        if size > points.len() {
            return Err(Error::InvalidParameter(format!(
                "sample of {size} requested from {} rows",
                points.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut picked = index::sample(&mut rng, points.len(), size).into_vec();
        picked.sort_unstable();
        let mut taken = Vec::with_capacity(size);
        for i in picked {
            taken.push(std::mem::take(&mut points[i]));
        }
        points = taken;
    }
    Ok(points)
}

/// Parses `name,radius` records. A first record whose radius field is not
/// numeric is taken as a header.
pub fn parse_known_optima(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, value)) = line.split_once(',') else {
            return Err(Error::Parse(format!(
                "optima line {}: expected 'name,radius'",
                lineno + 1
            )));
        };
        let (name, value) = (name.trim(), value.trim());
        if std::mem::take(&mut first) && value.parse::<f64>().is_err() {
            continue;
        }
        let radius: f64 = value
            .parse()
            .ok()
            .filter(|r: &f64| *r > 0.0 && r.is_finite())
            .ok_or_else(|| {
                Error::Parse(format!(
                    "optima line {}: '{value}' is not a positive radius",
                    lineno + 1
                ))
            })?;
        if name.is_empty() {
            return Err(Error::Parse(format!(
                "optima line {}: empty name",
                lineno + 1
            )));
        }
        if map.insert(name.to_string(), radius).is_some() {
            return Err(Error::Parse(format!("optima: duplicate instance '{name}'")));
        }
    }
    Ok(map)
}

pub fn load_known_optima(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_known_optima(&text)
}

/// Rounds to 6 significant digits. The result prints in at most 6 digits and
/// survives a text round trip unchanged.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// One report line: an algorithm on an instance at one `k` (and one
/// `lambda_scale` for fair rows). Real fields are stored pre-rounded to 6
/// significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub algorithm: String,
    pub k: usize,
    pub lambda_scale: Option<f64>,
    pub mean_max_radius: f64,
    pub radius_ratio_opt: Option<f64>,
    pub radius_ratio_scr: Option<f64>,
    pub max_pair_ratio: f64,
    pub max_community_mean: f64,
    pub trials: u64,
    pub seed: Option<u64>,
}

impl ReportRow {
    /// Rounds every real field to 6 significant digits.
    pub fn rounded(mut self) -> Self {
        self.lambda_scale = self.lambda_scale.map(round_sig6);
        self.mean_max_radius = round_sig6(self.mean_max_radius);
        self.radius_ratio_opt = self.radius_ratio_opt.map(round_sig6);
        self.radius_ratio_scr = self.radius_ratio_scr.map(round_sig6);
        self.max_pair_ratio = round_sig6(self.max_pair_ratio);
        self.max_community_mean = round_sig6(self.max_community_mean);
        self
    }
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "instance",
    "algorithm",
    "k",
    "lambda_scale",
    "mean_max_radius",
    "radius_ratio_opt",
    "radius_ratio_scr",
    "max_pair_ratio",
    "max_community_mean",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParameter(format!(
                "unknown report format '{s}'"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

fn real(x: f64) -> String {
    format!("{}", round_sig6(x))
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

/// Serializes `rows` into `out`. CSV gets a header line even when `rows` is
/// empty; JSON is an array of objects with the same field names.
pub fn write_report_to<W: Write>(
    rows: &[ReportRow],
    format: ReportFormat,
    mut out: W,
) -> std::io::Result<()> {
    match format {
        ReportFormat::Csv => {
            writeln!(out, "{}", REPORT_COLUMNS.join(","))?;
            for r in rows {
                let fields = [
                    r.instance.clone(),
                    r.algorithm.clone(),
                    r.k.to_string(),
                    opt(r.lambda_scale, real),
                    real(r.mean_max_radius),
                    opt(r.radius_ratio_opt, real),
                    opt(r.radius_ratio_scr, real),
                    real(r.max_pair_ratio),
                    real(r.max_community_mean),
                    r.trials.to_string(),
                    opt(r.seed, |s| s.to_string()),
                ];
                writeln!(out, "{}", fields.join(","))?;
            }
        }
        ReportFormat::Json => {
            let rounded: Vec<ReportRow> = rows.iter().cloned().map(ReportRow::rounded).collect();
            serde_json::to_writer_pretty(&mut out, &rounded)?;
            writeln!(out)?;
        }
    }
    out.flush()
}

/// Writes the report to `path`, or to standard output when `path` is `None`.
pub fn write_report(rows: &[ReportRow], format: ReportFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            write_report_to(rows, format, BufWriter::new(file)).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            write_report_to(rows, format, stdout.lock()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Reads a JSON report produced by [`write_report`].
pub fn parse_json_report(text: &str) -> Result<Vec<ReportRow>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("report json: {e}")))
}

/// Reads a CSV report produced by [`write_report`].
pub fn parse_csv_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == REPORT_COLUMNS.join(",") => {}
        _ => return Err(Error::Parse("report csv: unexpected header".into())),
    }
    fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
        s.parse()
            .map_err(|_| Error::Parse(format!("report csv: bad {what} '{s}'")))
    }
    fn maybe<T: FromStr>(s: &str, what: &str) -> Result<Option<T>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, what).map(Some)
        }
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != REPORT_COLUMNS.len() {
                return Err(Error::Parse(format!(
                    "report csv: {} fields in '{line}'",
                    f.len()
                )));
            }
            Ok(ReportRow {
                instance: f[0].to_string(),
                algorithm: f[1].to_string(),
                k: num(f[2], "k")?,
                lambda_scale: maybe(f[3], "lambda_scale")?,
                mean_max_radius: num(f[4], "mean_max_radius")?,
                radius_ratio_opt: maybe(f[5], "radius_ratio_opt")?,
                radius_ratio_scr: maybe(f[6], "radius_ratio_scr")?,
                max_pair_ratio: num(f[7], "max_pair_ratio")?,
                max_community_mean: num(f[8], "max_community_mean")?,
                trials: num(f[9], "trials")?,
                seed: maybe(f[10], "seed")?,
            })
        })
        .collect()
}
