use std::cmp::Ordering;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use super::{Method, ResultRow};
use crate::error::{Error, Result};

const ROWS_HEADER: &str = "method,centers,user,seed,hter,eer,auc";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub method: Method,
    pub num_centers: usize,
    pub rows: usize,
    pub hter: f64,
    pub eer: f64,
    pub auc: f64,
}

impl GroupSummary {
    pub fn label(&self) -> String {
        format!("{}/K={}", self.method, self.num_centers)
    }
}

/// Direction of the difference between two groups' means, read as
/// `a <op> b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOrdering {
    pub a: String,
    pub b: String,
    pub hter: &'static str,
    pub eer: &'static str,
    pub auc: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    pub orderings: Vec<PairOrdering>,
}

fn op(a: f64, b: f64) -> &'static str {
    match a.partial_cmp(&b) {
        Some(Ordering::Less) => "<",
        Some(Ordering::Greater) => ">",
        _ => "=",
    }
}

fn pct(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

/// Means per `(method, number of centers)` over users and seeds.
pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::Protocol("nothing to summarize".into()));
    }
    let mut keys: Vec<(Method, usize)> = rows.iter().map(|r| (r.method, r.centers.len())).collect();
    keys.sort();
    keys.dedup();
    let groups: Vec<GroupSummary> = keys
        .into_iter()
        .map(|(method, k)| {
            let members: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.method == method && r.centers.len() == k)
                .collect();
            let n = members.len() as f64;
            let mean = |f: fn(&ResultRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / n;
            GroupSummary {
                method,
                num_centers: k,
                rows: members.len(),
                hter: mean(|r| r.hter),
                eer: mean(|r| r.eer),
                auc: mean(|r| r.auc),
            }
        })
        .collect();
    let mut orderings = Vec::new();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            orderings.push(PairOrdering {
                a: a.label(),
                b: b.label(),
                hter: op(a.hter, b.hter),
                eer: op(a.eer, b.eer),
                auc: op(a.auc, b.auc),
            });
        }
    }
    Ok(Summary { groups, orderings })
}

impl Summary {
    pub fn group(&self, method: Method, num_centers: usize) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.method == method && g.num_centers == num_centers)
    }

    /// Structured form with rates as percentages rounded to 2 decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let groups: Vec<serde_json::Value> = self
            .groups
            .iter()
            .map(|g| {
                serde_json::json!({
                    "method": g.method,
                    "num_centers": g.num_centers,
                    "rows": g.rows,
                    "avg_hter": pct(g.hter),
                    "avg_eer": pct(g.eer),
                    "avg_auc": pct(g.auc),
                })
            })
            .collect();
        serde_json::json!({ "groups": groups, "orderings": self.orderings })
    }

    /// Plain-text table, one line per group.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:>5} {:>10} {:>10} {:>10}\n",
            "group", "rows", "Avg. HTER", "Avg. EER", "Avg. AUC"
        );
        for g in &self.groups {
            out.push_str(&format!(
                "{:<16} {:>5} {:>10.2} {:>10.2} {:>10.2}\n",
                g.label(),
                g.rows,
                pct(g.hter),
                pct(g.eer),
                pct(g.auc)
            ));
        }
        out
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ROWS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:?},{:?},{:?}",
            r.method,
            r.centers_label(),
            r.user,
            r.seed,
            r.hter,
            r.eer,
            r.auc
        )?;
    }
    w.flush()
}

pub fn read_rows_from<R: BufRead>(reader: R) -> Result<Vec<ResultRow>> {
    let bad = |line: usize, reason: String| Error::DatasetFormat { line, reason };
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == ROWS_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{ROWS_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return Err(bad(
                line_no,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| bad(line_no, format!("`{s}` is not a rate in [0, 1]")))
        };
        rows.push(ResultRow {
            method: f[0]
                .parse()
                .map_err(|e: Error| bad(line_no, e.to_string()))?,
            centers: f[1].split('&').map(str::to_string).collect(),
            user: f[2].to_string(),
            seed: f[3]
                .parse()
                .map_err(|_| bad(line_no, format!("`{}` is not a seed", f[3])))?,
            hter: num(f[4])?,
            eer: num(f[5])?,
            auc: num(f[6])?,
        });
    }
    Ok(rows)
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows_from(BufReader::new(file))
}

/// Writes `rows.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: impl AsRef<Path>, rows: &[ResultRow]) -> Result<Summary> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = summarize(rows)?;
    let rows_path = dir.join("rows.csv");
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).map_err(|e| Error::io(&rows_path, e))?;
    fs::write(&rows_path, buf).map_err(|e| Error::io(&rows_path, e))?;
    let summary_path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary.to_json()).expect("summary serializes");
    text.push('\n');
    fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
