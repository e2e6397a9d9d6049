//! Comma-separated dataset files.
//!
//! Header `domain,split,label,attack,f0,...,f{d-1}`, one sample per row,
//! features written with 17 significant digits so 64-bit values survive a
//! round trip.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{check_sample, AttackType, DomainDataset, Split};
use crate::error::{Error, Result};

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::DatasetFormat {
        line,
        reason: reason.into(),
    }
}

pub fn write_dataset<W: Write>(dataset: &DomainDataset, mut w: W) -> std::io::Result<()> {
    write!(w, "domain,split,label,attack")?;
    for j in 0..dataset.dim() {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for i in 0..dataset.len() {
        write!(
            w,
            "{},{},{},{}",
            dataset.domain_id(),
            dataset.splits()[i].as_str(),
            dataset.labels()[i],
            dataset.attacks()[i]
        )?;
        for v in dataset.sample(i) {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn save_dataset(dataset: &DomainDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<DomainDataset> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let header = header.map_err(|e| bad(1, e.to_string()))?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 5 || cols[..4] != ["domain", "split", "label", "attack"] {
        return Err(bad(
            1,
            "header must start with domain,split,label,attack and list features",
        ));
    }
    for (j, c) in cols[4..].iter().enumerate() {
        if *c != format!("f{j}") {
            return Err(bad(1, format!("expected feature column f{j}, found `{c}`")));
        }
    }
    let dim = cols.len() - 4;

    let mut dataset: Option<DomainDataset> = None;
    let mut x = vec![0.0; dim];
    for (line_no, line) in lines {
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 4 {
            return Err(bad(
                line_no,
                format!("expected {} fields, found {}", dim + 4, fields.len()),
            ));
        }
        let split: Split = fields[1].parse().map_err(|e: String| bad(line_no, e))?;
        let label: u8 = match fields[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(line_no, format!("label `{other}` is not 0 or 1"))),
        };
        let attack: AttackType = fields[3].parse().map_err(|e: String| bad(line_no, e))?;
        for (v, f) in x.iter_mut().zip(&fields[4..]) {
            *v = f
                .parse()
                .map_err(|_| bad(line_no, format!("`{f}` is not a number")))?;
        }
        check_sample(&x, label, attack).map_err(|reason| bad(line_no, reason))?;
        let ds = match &mut dataset {
            Some(ds) => ds,
            None => dataset.insert(
                DomainDataset::empty(fields[0], dim).map_err(|e| bad(line_no, e.to_string()))?,
            ),
        };
        if ds.domain_id() != fields[0] {
            return Err(bad(
                line_no,
                format!("domain `{}` differs from `{}`", fields[0], ds.domain_id()),
            ));
        }
        ds.push(&x, label, attack, split)
            .map_err(|e| bad(line_no, e.to_string()))?;
    }
    dataset.ok_or_else(|| bad(1, "no samples"))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DomainDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file))
}
