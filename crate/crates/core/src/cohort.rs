//! Cohort ingestion, merging, staging and task construction.
//!
//! Two CSV sources are read: the biomarker table
//! (`id,age,csf_abeta42,csf_ttau,csf_ptau`) and the assessment table
//! (`id,mmse,cdr_global`). They are inner-joined on `id`, staged by MMSE or
//! CDR, and turned into a [`LabeledDataset`] whose feature matrix holds only
//! the four CSF-derived columns.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

pub const BIOMARKER_HEADER: [&str; 5] = ["id", "age", "csf_abeta42", "csf_ttau", "csf_ptau"];
pub const ASSESSMENT_HEADER: [&str; 3] = ["id", "mmse", "cdr_global"];
pub const STAGED_HEADER: [&str; 6] = ["id", "abeta42", "ttau", "ptau", "ratio", "label"];

/// Feature columns, in matrix order.
pub const FEATURE_NAMES: [&str; 4] = ["abeta42", "ttau", "ptau", "ratio"];

/// CSF concentrations in pg/ml plus the derived Aβ1-42 / P-tau ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiomarkerPanel {
    abeta42: f64,
    ttau: f64,
    ptau: f64,
    ratio: f64,
}

impl BiomarkerPanel {
    /// All three concentrations must be finite and strictly positive.
    pub fn new(abeta42: f64, ttau: f64, ptau: f64) -> Result<Self> {
        for (name, v) in [("abeta42", abeta42), ("ttau", ttau), ("ptau", ptau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            abeta42,
            ttau,
            ptau,
            ratio: abeta42 / ptau,
        })
    }

    pub fn abeta42(&self) -> f64 {
        self.abeta42
    }

    pub fn ttau(&self) -> f64 {
        self.ttau
    }

    pub fn ptau(&self) -> f64 {
        self.ptau
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Feature vector in [`FEATURE_NAMES`] order.
    pub fn features(&self) -> [f64; 4] {
        [self.abeta42, self.ttau, self.ptau, self.ratio]
    }
}

/// Global Clinical Dementia Rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cdr {
    Zero,
    Half,
    One,
    Two,
    Three,
}

impl Cdr {
    pub fn from_value(v: f64) -> Result<Self> {
        match v {
            0.0 => Ok(Cdr::Zero),
            0.5 => Ok(Cdr::Half),
            1.0 => Ok(Cdr::One),
            2.0 => Ok(Cdr::Two),
            3.0 => Ok(Cdr::Three),
            _ => Err(Error::InvalidCdr(v)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Cdr::Zero => 0.0,
            Cdr::Half => 0.5,
            Cdr::One => 1.0,
            Cdr::Two => 2.0,
            Cdr::Three => 3.0,
        }
    }
}

impl fmt::Display for Cdr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub mmse: Option<u8>,
    pub cdr_global: Option<Cdr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    /// Informational only; never a model feature.
    pub age: f64,
    pub panel: BiomarkerPanel,
    pub assessment: AssessmentRecord,
}

impl PatientRecord {
    /// Four-way stage under `scheme`, or `None` when the required score is absent.
    pub fn stage(&self, scheme: Scheme) -> Option<Stage> {
        match scheme {
            // Ingestion guarantees the score is in range.
            Scheme::Mmse => self.assessment.mmse.and_then(|s| stage_mmse(i64::from(s)).ok()),
            Scheme::Cdr => self.assessment.cdr_global.map(stage_cdr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "MCI")]
    Mci,
    #[serde(rename = "MOD")]
    Mod,
    #[serde(rename = "SD")]
    Sd,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Nc, Stage::Mci, Stage::Mod, Stage::Sd];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Nc => "NC",
            Stage::Mci => "MCI",
            Stage::Mod => "MOD",
            Stage::Sd => "SD",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mmse,
    Cdr,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mmse => "mmse",
            Scheme::Cdr => "cdr",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmse" => Ok(Scheme::Mmse),
            "cdr" => Ok(Scheme::Cdr),
            _ => Err(Error::InvalidInput(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multi,
}

impl Task {
    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            Task::Binary => &["NC", "AD"],
            Task::Multi => &["NC", "MCI", "SD"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Class index of a four-way stage. MOD folds into SD for the multiclass task.
    pub fn class_of(self, stage: Stage) -> usize {
        match (self, stage) {
            (_, Stage::Nc) => 0,
            (Task::Binary, _) => 1,
            (Task::Multi, Stage::Mci) => 1,
            (Task::Multi, Stage::Mod | Stage::Sd) => 2,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::Multi => "multi",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Task::Binary),
            "multi" => Ok(Task::Multi),
            _ => Err(Error::InvalidInput(format!("unknown task `{s}`"))),
        }
    }
}

/// MMSE bands: NC = [26, 30], MCI = [20, 25], MOD = [10, 19], SD = [0, 9].
pub fn stage_mmse(score: i64) -> Result<Stage> {
    match score {
        26..=30 => Ok(Stage::Nc),
        20..=25 => Ok(Stage::Mci),
        10..=19 => Ok(Stage::Mod),
        0..=9 => Ok(Stage::Sd),
        _ => Err(Error::MmseOutOfRange(score)),
    }
}

/// CDR 0 → NC, 0.5 → MCI, 1 or 2 → MOD, 3 → SD.
pub fn stage_cdr(score: Cdr) -> Stage {
    match score {
        Cdr::Zero => Stage::Nc,
        Cdr::Half => Stage::Mci,
        Cdr::One | Cdr::Two => Stage::Mod,
        Cdr::Three => Stage::Sd,
    }
}

/// Like [`stage_cdr`] for a raw numeric rating.
pub fn stage_cdr_value(score: f64) -> Result<Stage> {
    Cdr::from_value(score).map(stage_cdr)
}

/// A CSV row that was not turned into a record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowIssue {
    /// 1-based line number in the source file (header is line 1).
    pub line: u64,
    pub reason: String,
}

/// Result of reading one CSV source.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub rows: Vec<T>,
    /// Well-formed rows dropped for missing or nonpositive values.
    pub skipped: Vec<RowIssue>,
    /// Rows with non-numeric or out-of-domain cells.
    pub rejected: Vec<RowIssue>,
}

impl<T> Ingested<T> {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            skipped: Vec::new(),
            rejected: Vec::new(),
        }
    }

    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerRow {
    pub id: String,
    pub age: f64,
    pub panel: BiomarkerPanel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRow {
    pub id: String,
    pub assessment: AssessmentRecord,
}

enum Cell {
    Absent,
    Value(f64),
}

fn parse_cell(raw: &str) -> std::result::Result<Cell, String> {
    let s = raw.trim();
    if s.is_empty() || s == "NA" {
        return Ok(Cell::Absent);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Cell::Value)
        .ok_or_else(|| format!("non-numeric cell `{s}`"))
}

fn open_csv<R: Read>(source: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(rdr)
}

fn row_id(record: &csv::StringRecord) -> Option<String> {
    record
        .get(0)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Reads `id,age,csf_abeta42,csf_ttau,csf_ptau`.
pub fn parse_biomarker_csv<R: Read>(source: R) -> Result<Ingested<BiomarkerRow>> {
    let mut rdr = open_csv(source, &BIOMARKER_HEADER)?;
    let mut out = Ingested::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != BIOMARKER_HEADER.len() {
            out.rejected.push(RowIssue {
                line,
                reason: format!("expected {} fields, found {}", BIOMARKER_HEADER.len(), record.len()),
            });
            continue;
        }
        let Some(id) = row_id(&record) else {
            out.skipped.push(RowIssue {
                line,
                reason: "missing id".into(),
            });
            continue;
        };
        let mut values = [0.0; 4];
        let mut issue: Option<(bool, String)> = None;
        for (k, slot) in values.iter_mut().enumerate() {
            let name = BIOMARKER_HEADER[k + 1];
            match parse_cell(&record[k + 1]) {
                Err(e) => {
                    issue = Some((true, format!("{name}: {e}")));
                    break;
                }
                Ok(Cell::Absent) => {
                    issue.get_or_insert((false, format!("{name}: missing")));
                }
                Ok(Cell::Value(v)) if v <= 0.0 => {
                    issue.get_or_insert((false, format!("{name}: nonpositive value {v}")));
                }
                Ok(Cell::Value(v)) => *slot = v,
            }
        }
        match issue {
            Some((true, reason)) => out.rejected.push(RowIssue { line, reason }),
            Some((false, reason)) => out.skipped.push(RowIssue { line, reason }),
            None => {
                let [age, abeta42, ttau, ptau] = values;
                out.rows.push(BiomarkerRow {
                    id,
                    age,
                    panel: BiomarkerPanel::new(abeta42, ttau, ptau)?,
                });
            }
        }
    }
    Ok(out)
}

/// Reads `id,mmse,cdr_global`. Empty or `NA` cells mean absent.
pub fn parse_assessment_csv<R: Read>(source: R) -> Result<Ingested<AssessmentRow>> {
    let mut rdr = open_csv(source, &ASSESSMENT_HEADER)?;
    let mut out = Ingested::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != ASSESSMENT_HEADER.len() {
            out.rejected.push(RowIssue {
                line,
                reason: format!("expected {} fields, found {}", ASSESSMENT_HEADER.len(), record.len()),
            });
            continue;
        }
        let Some(id) = row_id(&record) else {
            out.skipped.push(RowIssue {
                line,
                reason: "missing id".into(),
            });
            continue;
        };
        let parsed = parse_cell(&record[1]).and_then(|mmse| {
            let cdr = parse_cell(&record[2])?;
            let mmse = match mmse {
                Cell::Absent => None,
                Cell::Value(v) if v.fract() == 0.0 && (0.0..=30.0).contains(&v) => Some(v as u8),
                Cell::Value(v) => return Err(format!("mmse {v} outside integer range [0, 30]")),
            };
            let cdr_global = match cdr {
                Cell::Absent => None,
                Cell::Value(v) => Some(Cdr::from_value(v).map_err(|e| e.to_string())?),
            };
            Ok(AssessmentRecord { mmse, cdr_global })
        });
        match parsed {
            Ok(assessment) => out.rows.push(AssessmentRow { id, assessment }),
            Err(reason) => out.rejected.push(RowIssue { line, reason }),
        }
    }
    Ok(out)
}

/// Inner join on id, sorted by id.
pub fn merge_cohort(biomarkers: &[BiomarkerRow], assessments: &[AssessmentRow]) -> Result<Vec<PatientRecord>> {
    let mut by_id: BTreeMap<&str, &BiomarkerRow> = BTreeMap::new();
    for b in biomarkers {
        if by_id.insert(&b.id, b).is_some() {
            return Err(Error::DuplicateId {
                id: b.id.clone(),
                source_name: "biomarkers",
            });
        }
    }
    let mut joined: BTreeMap<&str, PatientRecord> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for a in assessments {
        if !seen.insert(a.id.as_str()) {
            return Err(Error::DuplicateId {
                id: a.id.clone(),
                source_name: "assessments",
            });
        }
        if let Some(b) = by_id.get(a.id.as_str()) {
            joined.insert(
                &a.id,
                PatientRecord {
                    id: a.id.clone(),
                    age: b.age,
                    panel: b.panel,
                    assessment: a.assessment,
                },
            );
        }
    }
    Ok(joined.into_values().collect())
}

/// Features plus class labels for one classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub ids: Vec<String>,
    /// n × 4, columns in [`FEATURE_NAMES`] order.
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub scheme: Scheme,
    pub task: Task,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            scheme: self.scheme,
            task: self.task,
        }
    }

    /// Writes `id,abeta42,ttau,ptau,ratio,label`.
    pub fn write_staged_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(STAGED_HEADER)?;
        for (i, row) in self.features.rows_iter().enumerate() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(self.class_names[self.labels[i]].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "staged.csv".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Dataset for `task` under `scheme`, plus the number of records dropped for
/// lacking the scheme's score.
pub fn make_task(records: &[PatientRecord], scheme: Scheme, task: Task) -> Result<(LabeledDataset, usize)> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for r in records {
        match r.stage(scheme) {
            Some(stage) => {
                ids.push(r.id.clone());
                rows.push(r.panel.features());
                labels.push(task.class_of(stage));
            }
            None => dropped += 1,
        }
    }
    let class_names = task.class_names();
    let mut present = vec![false; class_names.len()];
    for &l in &labels {
        present[l] = true;
    }
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present < 2 {
        return Err(Error::TooFewClasses { present: n_present });
    }
    let dataset = LabeledDataset {
        ids,
        features: Matrix::from_rows(&rows)?,
        labels,
        class_names,
        scheme,
        task,
    };
    Ok((dataset, dropped))
}

/// Uniformly downsamples every class to the smallest class count.
///
/// Retained rows keep their original relative order.
pub fn undersample(data: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let counts = data.class_counts();
    let target = *counts.iter().min().unwrap_or(&0);
    if target == 0 {
        return Err(Error::InvalidInput(
            "undersampling needs at least one sample per class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(target * counts.len());
    for class in 0..counts.len() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        members.shuffle(&mut rng);
        keep.extend_from_slice(&members[..target]);
    }
    keep.sort_unstable();
    Ok(data.subset(&keep))
}
