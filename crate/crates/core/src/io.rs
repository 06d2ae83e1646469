//! File formats: graph JSON, SCM JSON, sample CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scm::{SampleMatrix, ScmJson, ScmSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub d: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<&DirectedGraph> for GraphJson {
    fn from(g: &DirectedGraph) -> Self {
        Self {
            d: g.d(),
            edges: g.edges().iter().map(|&(s, t)| [s, t]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for DirectedGraph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        DirectedGraph::new(j.d, j.edges.into_iter().map(|[s, t]| (s, t)))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<DirectedGraph> {
    read_json::<GraphJson>(path)?.try_into()
}

pub fn read_scm(path: &Path) -> Result<ScmSpec> {
    read_json::<ScmJson>(path)?.try_into()
}

/// C's `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

pub fn write_samples<W: Write>(writer: W, x: &SampleMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(x.d())).map_err(csv_error)?;
    let values = x.values();
    let mut row = Vec::with_capacity(x.d());
    for i in 0..x.n() {
        row.clear();
        row.extend((0..x.d()).map(|j| format_g17(values[(i, j)])));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(reader: R) -> Result<SampleMatrix> {
    let mut r = csv::Reader::from_reader(reader);
    let names: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let d = names.len();
    if d == 0 || names != header(d) {
        return Err(Error::Parse(format!("expected header X1,...,Xd, found {names:?}")));
    }
    let mut data = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {field:?}", line + 1)))?;
            data.push(v);
        }
    }
    let n = data.len() / d;
    SampleMatrix::new(DMatrix::from_row_slice(n, d, &data))
}

pub fn write_samples_file(path: &Path, x: &SampleMatrix) -> Result<()> {
    write_samples(BufWriter::new(File::create(path)?), x)
}

pub fn read_samples_file(path: &Path) -> Result<SampleMatrix> {
    read_samples(BufReader::new(File::open(path)?))
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}
