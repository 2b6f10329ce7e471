//! Sample tables, model files, report JSON and error-curve CSV.
//!
//! Numbers are written with 17 significant digits so every finite `f64`
//! survives a write/read cycle unchanged.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{ErrorPoint, FitReport};
use crate::barycentric::Method;
use crate::error::{Error, Result};
use crate::heuristics::FrequencySample;
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{FirstOrderModel, Model, SecondOrderModel, Stability};

pub const SCHEMA_VERSION: u32 = 1;

/// Header of an imaginary-axis sample table.
pub const AXIS_HEADER: &str = "omega,real,imag";
/// Header of a table with general complex evaluation points.
pub const POINT_HEADER: &str = "s_real,s_imag,real,imag";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, message: format!("cannot parse {:?} as a number", field.trim()) })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a sample table.
///
/// `omega,real,imag` tables hold `H(i omega)` with `omega >= 0` strictly
/// increasing; `s_real,s_imag,real,imag` tables hold values at arbitrary
/// complex points in file order.
pub fn parse_samples_str(text: &str) -> Result<Vec<FrequencySample>> {
    let mut lines = content_lines(text);
    let Some((hline, header)) = lines.next() else {
        return Err(Error::Parse { line: 1, message: "missing header".into() });
    };
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let axis = if cols.join(",") == AXIS_HEADER {
        true
    } else if cols.join(",") == POINT_HEADER {
        false
    } else {
        return Err(Error::Parse {
            line: hline,
            message: format!("header must be {AXIS_HEADER:?} or {POINT_HEADER:?}"),
        });
    };
    let width = if axis { 3 } else { 4 };
    let mut out: Vec<FrequencySample> = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse { line, message: format!("expected {width} fields, found {}", fields.len()) });
        }
        let v: Vec<f64> = fields.iter().map(|f| parse_f64(f, line)).collect::<Result<_>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse { line, message: "values must be finite".into() });
        }
        let sample = if axis {
            if v[0] < 0.0 {
                return Err(Error::Parse { line, message: "omega must be nonnegative".into() });
            }
            if out.last().is_some_and(|p| !(v[0] > p.omega())) {
                return Err(Error::NonMonotoneFrequency { line });
            }
            FrequencySample::on_axis(v[0], C64::new(v[1], v[2]))
        } else {
            FrequencySample::new(C64::new(v[0], v[1]), C64::new(v[2], v[3]))
        };
        out.push(sample);
    }
    Ok(out)
}

pub fn parse_samples(reader: impl Read) -> Result<Vec<FrequencySample>> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    parse_samples_str(&text)
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<FrequencySample>> {
    parse_samples(fs::File::open(path)?)
}

/// Writes the axis format when every point is on the nonnegative imaginary axis.
pub fn samples_to_string(samples: &[FrequencySample]) -> String {
    let axis = samples.iter().all(|s| s.is_on_axis() && s.omega() >= 0.0);
    let mut out = String::new();
    if axis {
        writeln!(out, "{AXIS_HEADER}").unwrap();
        for s in samples {
            writeln!(out, "{},{},{}", num(s.omega()), num(s.value.re), num(s.value.im)).unwrap();
        }
    } else {
        writeln!(out, "{POINT_HEADER}").unwrap();
        for s in samples {
            writeln!(out, "{},{},{},{}", num(s.s.re), num(s.s.im), num(s.value.re), num(s.value.im)).unwrap();
        }
    }
    out
}

pub fn write_samples(path: impl AsRef<Path>, samples: &[FrequencySample]) -> Result<()> {
    fs::write(path, samples_to_string(samples))?;
    Ok(())
}

/// Interpolation and support data recorded alongside a fitted model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub lambda: Vec<C64>,
    pub mu: Vec<C64>,
    pub support: Option<Vec<C64>>,
    pub cond_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub method: Option<Method>,
    pub model: Model,
    pub provenance: Provenance,
}

fn write_matrix(out: &mut String, name: &str, m: &CMatrix, real: bool) {
    writeln!(out, "[{name}]").unwrap();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let v = m[(i, j)];
                if real {
                    num(v.re)
                } else {
                    format!("{} {}", num(v.re), num(v.im))
                }
            })
            .collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
}

fn write_vector(out: &mut String, name: &str, v: &CVector, real: bool) {
    write_matrix(out, name, &CMatrix::from_column_slice(v.len(), 1, v.as_slice()), real);
}

fn write_points(out: &mut String, name: &str, pts: &[C64]) {
    writeln!(out, "[{name}]").unwrap();
    for p in pts {
        writeln!(out, "{} {}", num(p.re), num(p.im)).unwrap();
    }
}

pub fn model_to_string(file: &ModelFile) -> String {
    let m = &file.model;
    let real = m.is_real();
    let mut out = String::new();
    writeln!(out, "schema = {SCHEMA_VERSION}").unwrap();
    if let Some(method) = file.method {
        writeln!(out, "method = {method}").unwrap();
    }
    let kind = match m {
        Model::SecondOrder(_) => "second-order",
        Model::FirstOrder(_) => "first-order",
    };
    writeln!(out, "kind = {kind}").unwrap();
    writeln!(out, "order = {}", m.order()).unwrap();
    writeln!(out, "real = {real}").unwrap();
    if let Some(c) = file.provenance.cond_estimate {
        writeln!(out, "cond_estimate = {}", num(c)).unwrap();
    }
    match m {
        Model::SecondOrder(so) => {
            write_matrix(&mut out, "M", so.mass(), real);
            write_matrix(&mut out, "D", so.damping(), real);
            write_matrix(&mut out, "K", so.stiffness(), real);
            write_vector(&mut out, "b", so.input(), real);
            write_vector(&mut out, "c", so.output(), real);
        }
        Model::FirstOrder(fo) => {
            write_matrix(&mut out, "A", fo.state(), real);
            write_vector(&mut out, "b", fo.input(), real);
            write_vector(&mut out, "c", fo.output(), real);
        }
    }
    let p = &file.provenance;
    if !p.lambda.is_empty() {
        write_points(&mut out, "lambda", &p.lambda);
    }
    if !p.mu.is_empty() {
        write_points(&mut out, "mu", &p.mu);
    }
    if let Some(sp) = &p.support {
        write_points(&mut out, "support", sp);
    }
    out
}

struct Section {
    name: String,
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

fn take_section(sections: &mut Vec<Section>, name: &str) -> Option<Section> {
    let k = sections.iter().position(|s| s.name == name)?;
    Some(sections.remove(k))
}

fn matrix_from(section: &Section, rows: usize, cols: usize, real: bool) -> Result<CMatrix> {
    let per = if real { cols } else { 2 * cols };
    if section.rows.len() != rows {
        return Err(Error::Parse {
            line: section.line,
            message: format!("[{}] needs {rows} rows, found {}", section.name, section.rows.len()),
        });
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (i, (line, vals)) in section.rows.iter().enumerate() {
        if vals.len() != per {
            return Err(Error::Parse { line: *line, message: format!("expected {per} numbers, found {}", vals.len()) });
        }
        for j in 0..cols {
            m[(i, j)] = if real { C64::new(vals[j], 0.0) } else { C64::new(vals[2 * j], vals[2 * j + 1]) };
        }
    }
    Ok(m)
}

fn points_from(section: &Section) -> Result<Vec<C64>> {
    section
        .rows
        .iter()
        .map(|(line, v)| match v.as_slice() {
            [re, im] => Ok(C64::new(*re, *im)),
            _ => Err(Error::Parse { line: *line, message: "expected a real and an imaginary part".into() }),
        })
        .collect()
}

pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let mut keys: Vec<(usize, String, String)> = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (line, row) in content_lines(text) {
        if let Some(name) = row.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            sections.push(Section { name: name.trim().to_string(), line, rows: Vec::new() });
        } else if let Some(sec) = sections.last_mut() {
            let vals = row.split_whitespace().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
            sec.rows.push((line, vals));
        } else if let Some((k, v)) = row.split_once('=') {
            keys.push((line, k.trim().to_string(), v.trim().to_string()));
        } else {
            return Err(Error::Parse { line, message: "expected `key = value` or a [section]".into() });
        }
    }
    let get = |key: &str| keys.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));

    let schema = get("schema").map(|(_, v)| v.to_string()).unwrap_or_default();
    if schema.parse::<u32>().ok() != Some(SCHEMA_VERSION) {
        return Err(Error::SchemaMismatch { found: schema, expected: SCHEMA_VERSION });
    }
    let required = |key: &str| get(key).ok_or_else(|| Error::Parse { line: 1, message: format!("missing key {key:?}") });
    let method = match get("method") {
        Some((line, v)) => Some(v.parse::<Method>().map_err(|e| Error::Parse { line, message: e.to_string() })?),
        None => None,
    };
    let (line, order) = required("order")?;
    let order: usize = order.parse().map_err(|_| Error::Parse { line, message: "order must be a positive integer".into() })?;
    let (line, real) = required("real")?;
    let real: bool = real.parse().map_err(|_| Error::Parse { line, message: "real must be true or false".into() })?;
    let (kline, kind) = required("kind")?;
    let cond_estimate = match get("cond_estimate") {
        Some((line, v)) => Some(parse_f64(v, line)?),
        None => None,
    };

    let mut need = |name: &str, rows: usize, cols: usize| -> Result<CMatrix> {
        let sec = take_section(&mut sections, name)
            .ok_or_else(|| Error::Parse { line: kline, message: format!("missing [{name}] block") })?;
        matrix_from(&sec, rows, cols, real)
    };
    let column = |m: CMatrix| CVector::from_column_slice(m.as_slice());
    let model: Model = match kind {
        "second-order" => {
            let (m, d, k) = (need("M", order, order)?, need("D", order, order)?, need("K", order, order)?);
            let (b, c) = (column(need("b", order, 1)?), column(need("c", order, 1)?));
            SecondOrderModel::new(m, d, k, b, c)?.into()
        }
        "first-order" => {
            let a = need("A", order, order)?;
            let (b, c) = (column(need("b", order, 1)?), column(need("c", order, 1)?));
            FirstOrderModel::new(a, b, c)?.into()
        }
        other => return Err(Error::Parse { line: kline, message: format!("unknown model kind {other:?}") }),
    };
    let mut provenance = Provenance { cond_estimate, ..Provenance::default() };
    if let Some(s) = take_section(&mut sections, "lambda") {
        provenance.lambda = points_from(&s)?;
    }
    if let Some(s) = take_section(&mut sections, "mu") {
        provenance.mu = points_from(&s)?;
    }
    if let Some(s) = take_section(&mut sections, "support") {
        provenance.support = Some(points_from(&s)?);
    }
    if let Some(extra) = sections.first() {
        return Err(Error::Parse { line: extra.line, message: format!("unexpected block [{}]", extra.name) });
    }
    Ok(ModelFile { method, model, provenance })
}

pub fn write_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    fs::write(path, model_to_string(file))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    model_from_str(&fs::read_to_string(path)?)
}

/// JSON summary of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub method: Method,
    pub order: usize,
    pub residual_max: f64,
    pub relative_residual_max: f64,
    pub cond_estimate: Option<f64>,
    pub poles: Vec<[f64; 2]>,
    pub stable_count: usize,
    pub marginal_count: usize,
    pub unstable_count: usize,
    pub infinite_count: usize,
    pub max_rel_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
    pub warnings: Vec<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&FitReport> for ReportJson {
    fn from(r: &FitReport) -> Self {
        let has_curve = !r.error_curve.is_empty();
        ReportJson {
            method: r.method,
            order: r.order,
            residual_max: r.residual_max(),
            relative_residual_max: r.relative_residual_max(),
            cond_estimate: finite(r.cond_estimate),
            poles: r.poles.as_slice().iter().map(|p| [p.re, p.im]).collect(),
            stable_count: r.poles.count(Stability::Stable),
            marginal_count: r.poles.count(Stability::Marginal),
            unstable_count: r.poles.count(Stability::Unstable),
            infinite_count: r.poles.numerically_infinite(),
            max_rel_error: has_curve.then_some(r.errors.max).and_then(finite),
            mean_rel_error: has_curve.then_some(r.errors.mean).and_then(finite),
            median_rel_error: has_curve.then_some(r.errors.median).and_then(finite),
            warnings: r.warnings.clone(),
        }
    }
}

pub fn write_report(path: impl AsRef<Path>, report: &FitReport) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &ReportJson::from(report))?;
    writeln!(f)?;
    Ok(())
}

/// `omega,eps_rel` table; unevaluable points are written as `inf`.
pub fn error_curve_to_string(curve: &[ErrorPoint]) -> String {
    let mut out = String::from("omega,eps_rel\n");
    for p in curve {
        writeln!(out, "{},{}", num(p.omega), num(p.eps_rel)).unwrap();
    }
    out
}

pub fn write_error_curve(path: impl AsRef<Path>, curve: &[ErrorPoint]) -> Result<()> {
    fs::write(path, error_curve_to_string(curve))?;
    Ok(())
}

/// Combined table with one error column per method.
pub fn comparison_to_string(methods: &[Method], curves: &[Vec<ErrorPoint>]) -> String {
    let mut out = String::from("omega");
    for m in methods {
        write!(out, ",{m}").unwrap();
    }
    out.push('\n');
    let rows = curves.first().map_or(0, Vec::len);
    for k in 0..rows {
        out.push_str(&num(curves[0][k].omega));
        for c in curves {
            write!(out, ",{}", num(c[k].eps_rel)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads a numeric CSV table with a header line.
pub fn parse_table(reader: impl Read) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>(),
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
    };
    let mut rows = Vec::new();
    for (k, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let row = l.split(',').map(|f| parse_f64(f, k + 1)).collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse { line: k + 1, message: format!("expected {} fields", header.len()) });
        }
        rows.push(row);
    }
    Ok((header, rows))
}
