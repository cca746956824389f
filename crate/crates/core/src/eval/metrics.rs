use std::io::Write;

use serde::Serialize;

use crate::{Error, Result};

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: &[String]) -> Self {
        let k = class_names.len();
        Self {
            class_names: class_names.to_vec(),
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(class_names: &[String], counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = class_names.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!("confusion matrix must be {k}×{k}")));
        }
        Ok(Self {
            class_names: class_names.to_vec(),
            counts,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Header `true\predicted,<classes>`, then one row per true class.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Per-class rates. `None` marks an undefined rate: TPR/FNR for a class with
/// no true rows, PPV/FDR for a class that was never predicted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub name: String,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
    pub ppv: Option<f64>,
    pub fdr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Filled in by the caller from held-out scores; `metrics` leaves it empty.
    pub auc: Option<f64>,
}

impl MetricsReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.name == name)
    }

    /// Unweighted mean of the defined per-class TPRs.
    pub fn balanced_accuracy(&self) -> Option<f64> {
        let tprs: Vec<f64> = self.per_class.iter().filter_map(|c| c.tpr).collect();
        (!tprs.is_empty()).then(|| tprs.iter().sum::<f64>() / tprs.len() as f64)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let per_class = (0..cm.n_classes())
        .map(|c| {
            let diag = cm.counts[c][c] as f64;
            let row = cm.row_sum(c);
            let col = cm.col_sum(c);
            let tpr = (row > 0).then(|| diag / row as f64);
            let ppv = (col > 0).then(|| diag / col as f64);
            ClassMetrics {
                name: cm.class_names[c].clone(),
                tpr,
                fnr: tpr.map(|t| 1.0 - t),
                ppv,
                fdr: ppv.map(|p| 1.0 - p),
            }
        })
        .collect();
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        per_class,
        auc: None,
    })
}
