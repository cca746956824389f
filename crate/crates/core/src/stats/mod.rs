//! Group summaries (mean / SEM), Pearson correlation and one-way ANOVA.

pub mod dist;

use serde::Serialize;

use crate::cohort::{PatientRecord, Scheme, Stage};
use crate::{Error, Result};

/// Significance level used to annotate reports. Never used to filter.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Variables summarized per group, in report order.
pub const SUMMARY_VARIABLES: [&str; 6] = ["age", "mmse", "abeta42", "ttau", "ptau", "ratio"];

/// Biomarker variables correlated against MMSE.
pub const CORRELATION_VARIABLES: [&str; 4] = ["abeta42", "ttau", "ptau", "ratio"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSem {
    pub n: usize,
    /// `None` for an empty sample.
    pub mean: Option<f64>,
    /// Sample standard deviation over `√n`; `None` when `n < 2`.
    pub sem: Option<f64>,
}

pub fn mean_sem(values: &[f64]) -> MeanSem {
    let n = values.len();
    if n == 0 {
        return MeanSem {
            n,
            mean: None,
            sem: None,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sem = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    });
    MeanSem {
        n,
        mean: Some(mean),
        sem,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub variable: &'static str,
    #[serde(flatten)]
    pub stats: MeanSem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: Stage,
    pub n: usize,
    pub variables: Vec<VariableSummary>,
}

impl GroupSummary {
    pub fn variable(&self, name: &str) -> Option<&MeanSem> {
        self.variables.iter().find(|v| v.variable == name).map(|v| &v.stats)
    }
}

/// Value of a summary variable for one record, when present.
pub fn variable_value(record: &PatientRecord, variable: &str) -> Option<f64> {
    match variable {
        "age" => Some(record.age),
        "mmse" => record.assessment.mmse.map(f64::from),
        "cdr" => record.assessment.cdr_global.map(|c| c.value()),
        "abeta42" => Some(record.panel.abeta42()),
        "ttau" => Some(record.panel.ttau()),
        "ptau" => Some(record.panel.ptau()),
        "ratio" => Some(record.panel.ratio()),
        _ => None,
    }
}

/// Records grouped by four-way stage under `scheme`, in [`Stage::ALL`] order.
/// Records without the scheme's score are left out.
pub fn group_by_stage(records: &[PatientRecord], scheme: Scheme) -> Vec<(Stage, Vec<&PatientRecord>)> {
    Stage::ALL
        .iter()
        .map(|&stage| {
            let members = records.iter().filter(|r| r.stage(scheme) == Some(stage)).collect();
            (stage, members)
        })
        .collect()
}

/// Mean and SEM of every variable for each non-empty four-way stage group.
pub fn group_summary(records: &[PatientRecord], scheme: Scheme) -> Vec<GroupSummary> {
    group_by_stage(records, scheme)
        .into_iter()
        .filter(|(_, members)| !members.is_empty())
        .map(|(group, members)| {
            let variables = SUMMARY_VARIABLES
                .iter()
                .map(|&variable| {
                    let values: Vec<f64> = members.iter().filter_map(|r| variable_value(r, variable)).collect();
                    VariableSummary {
                        variable,
                        stats: mean_sem(&values),
                    }
                })
                .collect();
            GroupSummary {
                group,
                n: members.len(),
                variables,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

impl CorrelationResult {
    pub fn significant(&self) -> bool {
        self.p < SIGNIFICANCE_LEVEL
    }
}

/// Pearson correlation with a two-sided t-test p-value on `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "pearson: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("pearson: need at least 3 pairs, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("pearson x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("pearson y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        dist::student_t_two_sided(t, df)
    };
    Ok(CorrelationResult { r, p, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    /// `f64::INFINITY` when groups differ but have no within-group spread.
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
}

impl AnovaResult {
    pub fn is_infinite(&self) -> bool {
        self.f_stat.is_infinite()
    }

    pub fn significant(&self) -> bool {
        self.p < SIGNIFICANCE_LEVEL
    }
}

/// One-way ANOVA across `groups`.
pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("anova: need at least 2 groups, got {k}")));
    }
    if let Some(g) = groups.iter().position(|g| g.as_ref().len() < 2) {
        return Err(Error::InvalidInput(format!("anova: group {g} has fewer than 2 values")));
    }
    let total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let means: Vec<f64> = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            g.iter().sum::<f64>() / g.len() as f64
        })
        .collect();
    let grand = groups.iter().flat_map(|g| g.as_ref().iter()).sum::<f64>() / total as f64;

    let ss_between: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().len() as f64 * (m - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();

    let df_between = k - 1;
    let df_within = total - k;
    if ss_within == 0.0 {
        if ss_between == 0.0 {
            return Err(Error::ZeroVariance("anova (all values equal)"));
        }
        return Ok(AnovaResult {
            f_stat: f64::INFINITY,
            df_between,
            df_within,
            p: 0.0,
        });
    }
    let f_stat = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p = dist::f_survival(f_stat, df_between as f64, df_within as f64);
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub variable: &'static str,
    /// `"ALL"` or a stage name.
    pub group: String,
    /// `None` when the group is too small or constant.
    pub result: Option<CorrelationResult>,
    pub n: usize,
}

/// Correlation of each biomarker with MMSE over all MMSE-scored records and
/// within each MMSE-staged group.
pub fn mmse_correlations(records: &[PatientRecord]) -> Vec<CorrelationRow> {
    let scored: Vec<&PatientRecord> = records.iter().filter(|r| r.assessment.mmse.is_some()).collect();
    let mut groups: Vec<(String, Vec<&PatientRecord>)> = vec![("ALL".to_string(), scored.clone())];
    for (stage, members) in group_by_stage(records, Scheme::Mmse) {
        groups.push((stage.to_string(), members));
    }
    let mut rows = Vec::new();
    for &variable in &CORRELATION_VARIABLES {
        for (group, members) in &groups {
            let x: Vec<f64> = members.iter().filter_map(|r| variable_value(r, variable)).collect();
            let y: Vec<f64> = members.iter().filter_map(|r| variable_value(r, "mmse")).collect();
            rows.push(CorrelationRow {
                variable,
                group: group.clone(),
                result: pearson(&x, &y).ok(),
                n: members.len(),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub variable: &'static str,
    pub result: Option<AnovaResult>,
}

/// One-way ANOVA of every summary variable across the four-way stage groups
/// under `scheme`. Groups with fewer than two values are left out.
pub fn stage_anova(records: &[PatientRecord], scheme: Scheme) -> Vec<AnovaRow> {
    let grouped = group_by_stage(records, scheme);
    SUMMARY_VARIABLES
        .iter()
        .map(|&variable| {
            let groups: Vec<Vec<f64>> = grouped
                .iter()
                .map(|(_, members)| {
                    members
                        .iter()
                        .filter_map(|r| variable_value(r, variable))
                        .collect::<Vec<_>>()
                })
                .filter(|g| g.len() >= 2)
                .collect();
            AnovaRow {
                variable,
                result: anova_oneway(&groups).ok(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sem_hand_values() {
        let s = mean_sem(&[2.0, 4.0, 6.0]);
        assert_eq!(s.mean, Some(4.0));
        assert!((s.sem.unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((s.sem.unwrap() - 1.1547).abs() < 1e-4);

        let c = mean_sem(&[5.0, 5.0, 5.0]);
        assert_eq!(c.mean, Some(5.0));
        assert_eq!(c.sem, Some(0.0));

        let one = mean_sem(&[7.0]);
        assert_eq!(one.mean, Some(7.0));
        assert_eq!(one.sem, None);
    }

    #[test]
    fn pearson_examples() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.r - 1.0).abs() < 1e-15);
        assert_eq!(r.p, 0.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r.r + 1.0).abs() < 1e-15);
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.r - 0.8).abs() < 1e-12);
        // t = 0.8 * sqrt(2 / 0.36) on 2 df.
        let t: f64 = 0.8 * (2.0f64 / 0.36).sqrt();
        let p = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((r.p - p).abs() < 1e-12);
        assert_eq!(r.n, 4);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn anova_examples() {
        let a = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(a.f_stat.abs() < 1e-12);
        assert!((a.p - 1.0).abs() < 1e-9);

        let a = anova_oneway(&[vec![2.0, 4.0], vec![6.0, 8.0]]).unwrap();
        assert!((a.f_stat - 8.0).abs() < 1e-12);
        assert_eq!((a.df_between, a.df_within), (1, 2));

        let a = anova_oneway(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(a.is_infinite());
        assert_eq!(a.p, 0.0);

        assert!(anova_oneway(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
