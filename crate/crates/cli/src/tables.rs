//! Comma-separated tables read and written by the subcommands.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use frenetkit::domains::{DomainSplit, Partition};

pub type Table = csv::Writer<Box<dyn Write>>;

/// A table on `path`, or stdout when `None`, starting with `header`.
pub fn writer(path: Option<&Path>, header: &[&str]) -> Result<Table> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    Ok(w)
}

/// Shortest decimal form that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_manifest(path: &Path, split: &DomainSplit) -> Result<()> {
    let mut w = writer(Some(path), &["scene_id", "cluster", "partition"])?;
    for (id, part) in &split.partition {
        w.write_record([
            id.as_str(),
            &split.assignments[id].to_string(),
            &part.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    for h in header {
        if !got.iter().any(|g| g == h) {
            bail!("{}: missing column {h}", path.display());
        }
    }
    Ok(r)
}

fn column(headers: &csv::StringRecord, name: &str) -> usize {
    headers
        .iter()
        .position(|h| h == name)
        .expect("checked by reader")
}

pub fn read_manifest(path: &Path) -> Result<DomainSplit> {
    let mut r = reader(path, &["scene_id", "cluster", "partition"])?;
    let h = r.headers()?.clone();
    let (ci, cd, cp) = (
        column(&h, "scene_id"),
        column(&h, "cluster"),
        column(&h, "partition"),
    );
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let at = || format!("{} row {}", path.display(), line + 1);
        let domain: usize = rec[cd].parse().with_context(at)?;
        let part: Partition = rec[cp]
            .parse()
            .map_err(anyhow::Error::msg)
            .with_context(at)?;
        rows.push((rec[ci].to_string(), domain, part));
    }
    Ok(DomainSplit::from_manifest(&rows)?)
}

pub const TRANSFORM_HEADER: [&str; 7] = [
    "scene_id",
    "index",
    "t",
    "s",
    "d",
    "reference_index",
    "s1_raw",
];

pub struct FrenetRow {
    pub scene_id: String,
    pub index: usize,
    pub t: f64,
    pub s: f64,
    pub d: f64,
    pub reference_index: usize,
    pub s1_raw: f64,
}

pub fn read_transform_table(path: &Path) -> Result<Vec<FrenetRow>> {
    let mut r = reader(path, &TRANSFORM_HEADER)?;
    let h = r.headers()?.clone();
    let cols: Vec<usize> = TRANSFORM_HEADER.iter().map(|n| column(&h, n)).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let at = || format!("{} row {}", path.display(), line + 1);
        let f = |i: usize| -> Result<f64> { rec[cols[i]].parse::<f64>().with_context(at) };
        let u = |i: usize| -> Result<usize> { rec[cols[i]].parse::<usize>().with_context(at) };
        rows.push(FrenetRow {
            scene_id: rec[cols[0]].to_string(),
            index: u(1)?,
            t: f(2)?,
            s: f(3)?,
            d: f(4)?,
            reference_index: u(5)?,
            s1_raw: f(6)?,
        });
    }
    Ok(rows)
}
