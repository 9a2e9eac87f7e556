//! Case-study data pipeline: abundance matrices, the shift-log transform,
//! pooled-variance two-sample t-tests, and p-value files.
//!
//! Abundance CSV: header `feature,<subject_id>:<group>,...` with groups
//! `case` or `control`, one row per feature. P-value CSV: header `id,p`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distkit::student_t_sf;
use crate::error::{Error, Result};
use crate::lfdr::{PValueEntry, PValueSet};
use crate::numfmt::fmt12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Case,
    Control,
}

impl Group {
    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Case => "case",
            Group::Control => "control",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "case" => Some(Group::Case),
            "control" => Some(Group::Control),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub group: Group,
}

/// Feature-by-subject measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbundanceMatrix {
    features: Vec<String>,
    subjects: Vec<Subject>,
    /// `values[f][s]`.
    values: Vec<Vec<f64>>,
}

impl AbundanceMatrix {
    pub fn new(features: Vec<String>, subjects: Vec<Subject>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != features.len() {
            return Err(Error::domain(format!(
                "{} value rows for {} features",
                values.len(),
                features.len()
            )));
        }
        if let Some((f, row)) = values.iter().enumerate().find(|(_, r)| r.len() != subjects.len()) {
            return Err(Error::domain(format!(
                "feature '{}' has {} values for {} subjects",
                features[f],
                row.len(),
                subjects.len()
            )));
        }
        Ok(Self {
            features,
            subjects,
            values,
        })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn group_size(&self, group: Group) -> usize {
        self.subjects.iter().filter(|s| s.group == group).count()
    }

    fn group_values<'a>(&'a self, row: &'a [f64], group: Group) -> impl Iterator<Item = f64> + 'a {
        self.subjects
            .iter()
            .zip(row)
            .filter(move |(s, _)| s.group == group)
            .map(|(_, &v)| v)
    }

    /// Applies `f` to every cell.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            features: self.features.clone(),
            subjects: self.subjects.clone(),
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }
}

/// Quantile by linear interpolation between order statistics at 1-based
/// position `prob * (n - 1) + 1`.
pub fn quantile_linear(values: &[f64], prob: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile of no values".into()));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::domain(format!("quantile level {prob} not in [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = prob * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// 25th percentile of all control-group values pooled over features.
pub fn control_q25(m: &AbundanceMatrix) -> Result<f64> {
    let pooled: Vec<f64> = m
        .values
        .iter()
        .flat_map(|row| m.group_values(row, Group::Control))
        .collect();
    if pooled.is_empty() {
        return Err(Error::Empty("no control-group values for the shift".into()));
    }
    quantile_linear(&pooled, 0.25)
}

/// `v -> ln(v + q25)` with `q25` from [`control_q25`].
pub fn shift_log_transform(m: &AbundanceMatrix) -> Result<AbundanceMatrix> {
    let q25 = control_q25(m)?;
    let mut offending = Vec::new();
    for (f, row) in m.values.iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            if !(v + q25 > 0.0) {
                offending.push((m.features[f].clone(), m.subjects[s].id.clone()));
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::NonPositiveShift(offending));
    }
    Ok(m.map_values(|v| (v + q25).ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTest {
    pub feature: String,
    /// `(mean_case - mean_control) / se`; NaN when the pooled variance is 0.
    pub t: f64,
    pub df: u64,
    pub p: f64,
    /// Pooled variance was zero; `p` was set to 1.
    pub zero_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub tests: Vec<FeatureTest>,
}

impl TTestReport {
    pub fn pvalue_set(&self, tie_break_seed: u64) -> Result<PValueSet> {
        PValueSet::new(
            self.tests
                .iter()
                .map(|t| PValueEntry {
                    id: t.feature.clone(),
                    p: t.p,
                })
                .collect(),
            tie_break_seed,
        )
    }

    pub fn warnings(&self) -> impl Iterator<Item = &FeatureTest> {
        self.tests.iter().filter(|t| t.zero_variance)
    }
}

/// Pooled-variance t statistic for two samples, with `n1 + n2 - 2` df.
/// Returns `None` for zero pooled variance.
pub fn pooled_t(a: &[f64], b: &[f64]) -> Option<(f64, u64)> {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (m1, m2) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let df = a.len() + b.len() - 2;
    let pooled_var = (ss(a, m1) + ss(b, m2)) / df as f64;
    if !(pooled_var > 0.0) {
        return None;
    }
    let se = (pooled_var * (1.0 / n1 + 1.0 / n2)).sqrt();
    Some(((m1 - m2) / se, df as u64))
}

/// Two-sided equal-variance t-test of case against control, per feature.
pub fn two_sample_t_pvalues(m: &AbundanceMatrix) -> Result<TTestReport> {
    let (nc, nk) = (m.group_size(Group::Case), m.group_size(Group::Control));
    if nc < 2 || nk < 2 {
        return Err(Error::domain(format!(
            "need at least 2 subjects per group, have {nc} case and {nk} control"
        )));
    }
    let tests = m
        .features
        .iter()
        .zip(&m.values)
        .map(|(feature, row)| {
            let case: Vec<f64> = m.group_values(row, Group::Case).collect();
            let control: Vec<f64> = m.group_values(row, Group::Control).collect();
            match pooled_t(&case, &control) {
                Some((t, df)) => Ok(FeatureTest {
                    feature: feature.clone(),
                    t,
                    df,
                    p: (2.0 * student_t_sf(t.abs(), df)?).min(1.0),
                    zero_variance: false,
                }),
                None => Ok(FeatureTest {
                    feature: feature.clone(),
                    t: f64::NAN,
                    df: (nc + nk - 2) as u64,
                    p: 1.0,
                    zero_variance: true,
                }),
            }
        })
        .collect::<Result<_>>()?;
    Ok(TTestReport { tests })
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub fn load_abundance_csv(path: impl AsRef<Path>) -> Result<AbundanceMatrix> {
    let path = path.as_ref();
    read_abundance_csv(std::fs::File::open(path)?, path)
}

/// Parses abundance CSV from any reader; `source` names it in errors.
pub fn read_abundance_csv<R: Read>(reader: R, source: impl Into<PathBuf>) -> Result<AbundanceMatrix> {
    let source = source.into();
    let mut records = csv_reader(reader).into_records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(parse_err(&source, 1, "missing header")),
    };
    if header.get(0) != Some("feature") {
        return Err(parse_err(&source, 1, "header must start with 'feature'"));
    }
    let mut subjects = Vec::new();
    for col in header.iter().skip(1) {
        let (id, group) = col
            .rsplit_once(':')
            .ok_or_else(|| parse_err(&source, 1, format!("column '{col}' lacks ':<group>'")))?;
        let group = Group::parse(group).ok_or_else(|| {
            parse_err(&source, 1, format!("unknown group '{group}' in column '{col}'"))
        })?;
        if id.is_empty() {
            return Err(parse_err(&source, 1, format!("empty subject id in column '{col}'")));
        }
        subjects.push(Subject {
            id: id.to_string(),
            group,
        });
    }
    if subjects.is_empty() {
        return Err(parse_err(&source, 1, "no subject columns"));
    }

    let mut features = Vec::new();
    let mut values = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != subjects.len() + 1 {
            return Err(parse_err(
                &source,
                line,
                format!("expected {} fields, found {}", subjects.len() + 1, rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(subjects.len());
        for (k, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(&source, line, format!("non-numeric value '{cell}' for subject '{}'", subjects[k].id))
            })?;
            if !v.is_finite() {
                return Err(parse_err(&source, line, format!("non-finite value '{cell}'")));
            }
            row.push(v);
        }
        features.push(rec[0].to_string());
        values.push(row);
    }
    if features.is_empty() {
        return Err(Error::Empty(format!("{}: no feature rows", source.display())));
    }
    AbundanceMatrix::new(features, subjects, values)
}

pub fn write_abundance_csv<W: Write>(m: &AbundanceMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["feature".to_string()];
    header.extend(m.subjects.iter().map(|s| format!("{}:{}", s.id, s.group.as_str())));
    w.write_record(&header)?;
    for (f, row) in m.features.iter().zip(&m.values) {
        let mut rec = vec![f.clone()];
        rec.extend(row.iter().map(|&v| fmt12(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_pvalues_csv(path: impl AsRef<Path>, tie_break_seed: u64) -> Result<PValueSet> {
    let path = path.as_ref();
    read_pvalues_csv(std::fs::File::open(path)?, path, tie_break_seed)
}

pub fn read_pvalues_csv<R: Read>(reader: R, source: impl Into<PathBuf>, tie_break_seed: u64) -> Result<PValueSet> {
    let source = source.into();
    let mut records = csv_reader(reader).into_records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(parse_err(&source, 1, "missing header")),
    };
    if header.len() != 2 || &header[0] != "id" || &header[1] != "p" {
        return Err(parse_err(&source, 1, "header must be 'id,p'"));
    }
    let mut entries = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 2 {
            return Err(parse_err(&source, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let p: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(&source, line, format!("non-numeric p-value '{}'", &rec[1])))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(parse_err(&source, line, format!("p-value {p} outside [0, 1]")));
        }
        entries.push(PValueEntry {
            id: rec[0].to_string(),
            p,
        });
    }
    if entries.is_empty() {
        return Err(Error::Empty(format!("{}: no p-value rows", source.display())));
    }
    PValueSet::new(entries, tie_break_seed)
}

/// Writes `id,p` rows in input order.
pub fn write_pvalues_csv<W: Write>(set: &PValueSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "p"])?;
    for e in set.entries() {
        w.write_record([e.id.as_str(), &fmt12(e.p)])?;
    }
    w.flush()?;
    Ok(())
}
