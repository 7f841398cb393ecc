//! Labeled contingency data: file formats, coarse-graining of a multi-level
//! lurking variable, reconstruction of joints from published conditionals,
//! and the bundled fixtures.
//!
//! JSON layout:
//!
//! ```json
//! {"labels": {"a1": ["died", "alive"], "a2": ["smoker", "nonsmoker"], "b": ["18-24", "25-34"]},
//!  "cells": [{"a1": "died", "a2": "smoker", "b": "18-24", "count": 2}, ...],
//!  "provenance": "free text"}
//! ```
//!
//! Each cell carries either `p` or `count`, consistently across the file. The
//! first label of `a1`, `a2` is the event, the second its complement. CSV files
//! use the header `a1,a2,b,p` (or `a1,a2,b,count`); labels are taken in order of
//! first appearance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contingency::{detect_simpson, JointTable, ParadoxReport};
use crate::{Error, Result};

/// Tolerated deviation of a probability table's total from 1.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Largest accepted residual of a redundant published constraint.
pub const CONSISTENCY_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Guess from the file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Probability,
    Count,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub a1: [String; 2],
    pub a2: [String; 2],
    pub b: Vec<String>,
}

/// Published values from which a binary joint can be rebuilt.
///
/// `fine` is indexed `[a2 state][b state]` with `p(a1 | ·, ·)` entries, and
/// `aggregate` holds `[p(a1|a2), p(a1|ā2)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedConditionals {
    pub aggregate: [f64; 2],
    pub fine: [[f64; 2]; 2],
    /// `[p(b|a2), p(b|ā2)]` when printed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_given_a2: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_b: Option<f64>,
}

/// Counts or probabilities over `A1 × A2 × B` with `B` of arity `m ≥ 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTable {
    labels: Labels,
    kind: ValueKind,
    /// `values[(i * 2 + k) * m + j]` for `a1` state `i`, `a2` state `k`, `b` level `j`.
    values: Vec<f64>,
    provenance: String,
    published: Option<PublishedConditionals>,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    a1: String,
    a2: String,
    b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    labels: Labels,
    cells: Vec<CellJson>,
    #[serde(default)]
    provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    published: Option<PublishedConditionals>,
}

fn position(names: &[String], name: &str, axis: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Schema(format!("unknown {axis} label {name:?}")))
}

impl LabeledTable {
    pub fn new(labels: Labels, kind: ValueKind, values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        let m = labels.b.len();
        if m < 2 {
            return Err(Error::Schema(format!("b needs at least two levels, got {m}")));
        }
        for axis in [&labels.a1[..], &labels.a2[..], &labels.b[..]] {
            let mut sorted = axis.to_vec();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != axis.len() {
                return Err(Error::Schema("duplicate label".into()));
            }
        }
        if values.len() != 4 * m {
            return Err(Error::Schema(format!("expected {} cells, got {}", 4 * m, values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidTable(format!("cell value {v}")));
        }
        let total: f64 = values.iter().sum();
        match kind {
            ValueKind::Count if total == 0.0 => return Err(Error::AllZeroCounts),
            ValueKind::Probability if (total - 1.0).abs() > NORMALIZATION_TOL => {
                return Err(Error::Normalization(total))
            }
            _ => {}
        }
        Ok(Self { labels, kind, values, provenance: provenance.into(), published: None })
    }

    /// Binary-`B` table from a joint, with the given labels.
    pub fn from_joint(table: &JointTable, labels: Labels, provenance: impl Into<String>) -> Result<Self> {
        if labels.b.len() != 2 {
            return Err(Error::Schema("a joint table has a binary b".into()));
        }
        let mut values = Vec::with_capacity(8);
        for i in 0..2 {
            for k in 0..2 {
                for m in 0..2 {
                    values.push(table.cell(i, k, m));
                }
            }
        }
        Self::new(labels, ValueKind::Probability, values, provenance)
    }

    pub fn with_published(mut self, published: PublishedConditionals) -> Self {
        self.published = Some(published);
        self
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }
    pub fn kind(&self) -> ValueKind {
        self.kind
    }
    pub fn provenance(&self) -> &str {
        &self.provenance
    }
    pub fn published(&self) -> Option<&PublishedConditionals> {
        self.published.as_ref()
    }
    pub fn b_levels(&self) -> usize {
        self.labels.b.len()
    }

    pub fn value(&self, i: usize, k: usize, j: usize) -> f64 {
        self.values[(i * 2 + k) * self.b_levels() + j]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `p(B = level j)`.
    pub fn b_marginal(&self) -> Vec<f64> {
        let total = self.total();
        (0..self.b_levels())
            .map(|j| (0..4).map(|ik| self.values[ik * self.b_levels() + j]).sum::<f64>() / total)
            .collect()
    }

    /// `p(a1 | A2 = k, B = level j)`, `None` on an empty conditioning cell.
    pub fn a1_given(&self, k: usize, j: usize) -> Option<f64> {
        let num = self.value(0, k, j);
        let den = num + self.value(1, k, j);
        (den > 0.0).then(|| num / den)
    }

    /// The joint table of a binary-`B` dataset.
    pub fn to_joint(&self) -> Result<JointTable> {
        if self.b_levels() != 2 {
            return Err(Error::Schema(format!(
                "b has {} levels; coarse-grain it to two first",
                self.b_levels()
            )));
        }
        let mut w = [0.0; 8];
        w.copy_from_slice(&self.values);
        JointTable::from_weights(w)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse("empty input".into()));
        }
        let raw: TableJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let m = raw.labels.b.len();
        if m < 2 {
            return Err(Error::Schema(format!("b needs at least two levels, got {m}")));
        }
        let mut values = vec![None; 4 * m];
        let mut kind = None;
        for cell in &raw.cells {
            let i = position(&raw.labels.a1, &cell.a1, "a1")?;
            let k = position(&raw.labels.a2, &cell.a2, "a2")?;
            let j = position(&raw.labels.b, &cell.b, "b")?;
            let (this_kind, v) = match (cell.p, cell.count) {
                (Some(p), None) => (ValueKind::Probability, p),
                (None, Some(c)) => (ValueKind::Count, c),
                _ => return Err(Error::Schema("each cell needs exactly one of p or count".into())),
            };
            if *kind.get_or_insert(this_kind) != this_kind {
                return Err(Error::Schema("cells mix p and count".into()));
            }
            let slot = &mut values[(i * 2 + k) * m + j];
            if slot.is_some() {
                return Err(Error::Schema(format!("duplicate cell ({}, {}, {})", cell.a1, cell.a2, cell.b)));
            }
            *slot = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(idx, v)| {
                v.ok_or_else(|| {
                    let (ik, j) = (idx / m, idx % m);
                    Error::Schema(format!(
                        "missing cell ({}, {}, {})",
                        raw.labels.a1[ik / 2],
                        raw.labels.a2[ik % 2],
                        raw.labels.b[j]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self::new(raw.labels, kind.unwrap_or(ValueKind::Probability), values, raw.provenance)?;
        table.published = raw.published;
        Ok(table)
    }

    pub fn to_json_string(&self) -> String {
        let m = self.b_levels();
        let mut cells = Vec::with_capacity(4 * m);
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..m {
                    let v = self.value(i, k, j);
                    cells.push(CellJson {
                        a1: self.labels.a1[i].clone(),
                        a2: self.labels.a2[k].clone(),
                        b: self.labels.b[j].clone(),
                        p: (self.kind == ValueKind::Probability).then_some(v),
                        count: (self.kind == ValueKind::Count).then_some(v),
                    });
                }
            }
        }
        let raw = TableJson {
            labels: self.labels.clone(),
            cells,
            provenance: self.provenance.clone(),
            published: self.published.clone(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse("empty input".into()));
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let kind = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            ["a1", "a2", "b", "p"] => ValueKind::Probability,
            ["a1", "a2", "b", "count"] => ValueKind::Count,
            _ => return Err(Error::Schema(format!("header must be a1,a2,b,p or a1,a2,b,count; got {header:?}"))),
        };
        let mut rows = Vec::new();
        let (mut a1, mut a2, mut b) = (Vec::<String>::new(), Vec::<String>::new(), Vec::<String>::new());
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let v: f64 = record[3]
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {:?}", &record[3])))?;
            for (names, s) in [(&mut a1, &record[0]), (&mut a2, &record[1]), (&mut b, &record[2])] {
                if !names.iter().any(|n| n == s) {
                    names.push(s.to_string());
                }
            }
            rows.push((record[0].to_string(), record[1].to_string(), record[2].to_string(), v));
        }
        if a1.len() != 2 || a2.len() != 2 {
            return Err(Error::Schema(format!("a1 and a2 need two labels each, got {} and {}", a1.len(), a2.len())));
        }
        let labels = Labels { a1: [a1[0].clone(), a1[1].clone()], a2: [a2[0].clone(), a2[1].clone()], b };
        let key = |kind: ValueKind| if kind == ValueKind::Probability { "p" } else { "count" };
        let json = TableJson {
            labels,
            cells: rows
                .into_iter()
                .map(|(a1, a2, b, v)| CellJson {
                    a1,
                    a2,
                    b,
                    p: (key(kind) == "p").then_some(v),
                    count: (key(kind) == "count").then_some(v),
                })
                .collect(),
            provenance: String::new(),
            published: None,
        };
        Self::parse_json(&serde_json::to_string(&json).expect("serializes"))
    }

    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let value_col = if self.kind == ValueKind::Probability { "p" } else { "count" };
        writer.write_record(["a1", "a2", "b", value_col]).expect("in-memory write");
        let m = self.b_levels();
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..m {
                    writer
                        .write_record([
                            self.labels.a1[i].as_str(),
                            self.labels.a2[k].as_str(),
                            self.labels.b[j].as_str(),
                            &format!("{}", self.value(i, k, j)),
                        ])
                        .expect("in-memory write");
                }
            }
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn load(path: &Path, format: Format) -> Result<LabeledTable> {
    let text = fs::read_to_string(path)?;
    match format {
        Format::Json => LabeledTable::parse_json(&text),
        Format::Csv => LabeledTable::parse_csv(&text),
    }
}

pub fn save(table: &LabeledTable, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => table.to_json_string(),
        Format::Csv => table.to_csv_string(),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Merges `B` levels into `b` (the listed levels) and `b̄` (the rest).
pub fn coarse_grain(table: &LabeledTable, b_levels: &[usize]) -> Result<JointTable> {
    let m = table.b_levels();
    let mut in_b = vec![false; m];
    for &j in b_levels {
        if j >= m {
            return Err(Error::InvalidPartition(format!("level {j} out of range 0..{m}")));
        }
        if in_b[j] {
            return Err(Error::InvalidPartition(format!("level {j} listed twice")));
        }
        in_b[j] = true;
    }
    let n_b = in_b.iter().filter(|&&x| x).count();
    if n_b == 0 || n_b == m {
        return Err(Error::InvalidPartition("both blocks must be nonempty".into()));
    }
    let mut w = [0.0; 8];
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..m {
                let slot = if in_b[j] { 0 } else { 1 };
                w[i * 4 + k * 2 + slot] += table.value(i, k, j);
            }
        }
    }
    JointTable::from_weights(w)
}

/// Same as [`coarse_grain`] with the `b` block given by label.
pub fn coarse_grain_by_labels(table: &LabeledTable, b_labels: &[&str]) -> Result<JointTable> {
    let levels = b_labels
        .iter()
        .map(|l| {
            table
                .labels
                .b
                .iter()
                .position(|n| n == l)
                .ok_or_else(|| Error::InvalidPartition(format!("unknown b level {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    coarse_grain(table, &levels)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionResult {
    /// Level indices merged into `b`; the rest form `b̄`.
    pub b_levels: Vec<usize>,
    pub report: ParadoxReport,
}

/// Every two-block partition of the `B` levels, each listed once with the
/// last level in `b̄`: `2^(m−1) − 1` entries.
pub fn partition_scan(table: &LabeledTable) -> Result<Vec<PartitionResult>> {
    let m = table.b_levels();
    if m > 20 {
        return Err(Error::InvalidPartition(format!("{m} levels is too many to enumerate")));
    }
    (1u32..(1 << (m - 1)))
        .map(|mask| {
            let b_levels: Vec<usize> = (0..m - 1).filter(|j| mask >> j & 1 == 1).collect();
            let joint = coarse_grain(table, &b_levels)?;
            Ok(PartitionResult { b_levels, report: detect_simpson(&joint)? })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub table: JointTable,
    /// `[p(b|a2), p(b|ā2)]` used to assemble the joint.
    pub b_given_a2: [f64; 2],
    pub p_a2: f64,
    /// Residuals of redundant constraints, by name.
    pub residuals: BTreeMap<String, f64>,
}

impl Reconstruction {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().fold(0.0, |a, &b| a.max(b))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<f64> {
    if (-1e-12..=1.0 + 1e-12).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(Error::InconsistentData(format!("{name} = {v} lies outside [0, 1]")))
    }
}

/// Rebuilds the binary joint from published conditionals by solving the
/// total-probability equations
/// `p(a1|a_k) = p(a1|a_k,b) x_k + p(a1|a_k,b̄) (1 − x_k)` with `x_k = p(b|a_k)`
/// and `p(b) = x_2 p(a2) + x̄_2 (1 − p(a2))`. When the published values
/// over-determine the joint, the residual of every redundant equation is
/// reported and must stay below [`CONSISTENCY_TOL`].
pub fn reconstruct_joint(published: &PublishedConditionals) -> Result<Reconstruction> {
    let mut residuals = BTreeMap::new();
    let names = ["a2", "not_a2"];
    let mut x = [0.0; 2];
    for k in 0..2 {
        let [fb, fnb] = published.fine[k];
        for (label, v) in [("fine", fb), ("fine", fnb), ("aggregate", published.aggregate[k])] {
            unit_interval(&format!("{label} conditional for {}", names[k]), v)?;
        }
        x[k] = match published.b_given_a2 {
            Some(given) => {
                let xk = unit_interval(&format!("p(b|{})", names[k]), given[k])?;
                residuals.insert(
                    format!("total_probability_{}", names[k]),
                    (fb * xk + fnb * (1.0 - xk) - published.aggregate[k]).abs(),
                );
                xk
            }
            None => {
                let den = fb - fnb;
                if den.abs() < 1e-12 {
                    return Err(Error::InconsistentData(format!(
                        "fine conditionals for {} coincide; p(b|{}) is undetermined",
                        names[k], names[k]
                    )));
                }
                unit_interval(&format!("p(b|{})", names[k]), (published.aggregate[k] - fnb) / den)?
            }
        };
    }
    let p_a2 = match (published.p_a2, published.p_b) {
        (Some(p), pb) => {
            let p = unit_interval("p(a2)", p)?;
            if let Some(pb) = pb {
                residuals.insert("b_marginal".into(), (x[0] * p + x[1] * (1.0 - p) - pb).abs());
            }
            p
        }
        (None, Some(pb)) => {
            let den = x[0] - x[1];
            if den.abs() < 1e-12 {
                return Err(Error::InconsistentData("p(b|a2) = p(b|ā2); p(a2) is undetermined".into()));
            }
            unit_interval("p(a2)", (pb - x[1]) / den)?
        }
        (None, None) => return Err(Error::InconsistentData("need p(a2) or p(b)".into())),
    };
    if let Some((name, r)) = residuals.iter().find(|(_, &r)| r > CONSISTENCY_TOL) {
        return Err(Error::InconsistentData(format!("residual of {name} is {r:.3e}")));
    }
    let weights = [p_a2, 1.0 - p_a2];
    let mut w = [0.0; 8];
    for k in 0..2 {
        let pb = [x[k], 1.0 - x[k]];
        for m in 0..2 {
            let f = published.fine[k][m];
            w[k * 2 + m] = weights[k] * pb[m] * f;
            w[4 + k * 2 + m] = weights[k] * pb[m] * (1.0 - f);
        }
    }
    Ok(Reconstruction { table: JointTable::from_weights(w)?, b_given_a2: x, p_a2, residuals })
}

pub const BUNDLED: [&str; 3] = ["covid", "smoking_full", "smoking_coarse"];

/// Raw text of a bundled fixture.
pub fn bundled_text(name: &str) -> Option<&'static str> {
    match name {
        "covid" => Some(include_str!("../data/covid.json")),
        "smoking_full" => Some(include_str!("../data/smoking_full.json")),
        "smoking_coarse" => Some(include_str!("../data/smoking_coarse.json")),
        _ => None,
    }
}

pub fn bundled(name: &str) -> Result<LabeledTable> {
    let text = bundled_text(name).ok_or_else(|| Error::Schema(format!("no bundled fixture named {name:?}")))?;
    LabeledTable::parse_json(text)
}
