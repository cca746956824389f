//! Synthetic cohorts drawn from published per-group means and standard errors.
//!
//! Every variable is sampled independently from a normal distribution with
//! `sd = sem·√n`, truncated below at [`POSITIVE_FLOOR`]. MMSE is rounded and
//! clamped into the group's stage band; the CDR rating is the one that maps
//! back to the group's stage.
//!
//! Truncation and clamping shift the mean, badly so for the wide T-tau
//! groups, so the normal's location is solved for such that the mean of the
//! truncated (or rounded and clamped) variable equals the published mean.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cohort::{AssessmentRecord, BiomarkerPanel, Cdr, PatientRecord, Stage, ASSESSMENT_HEADER, BIOMARKER_HEADER};
use crate::stats::dist::{normal_cdf, normal_hazard};
use crate::{Error, Result};

/// Lower truncation point for every sampled variable (pg/ml for biomarkers).
pub const POSITIVE_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    #[default]
    TruncatedNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMomentSpec {
    pub stage: Stage,
    /// Published group size; sets both the default sample count and `sd = sem·√n`.
    pub n: usize,
    pub age: Moment,
    pub mmse: Moment,
    pub abeta42: Moment,
    pub ttau: Moment,
    pub ptau: Moment,
    #[serde(default)]
    pub family: Family,
}

impl GroupMomentSpec {
    pub fn sd(&self, m: Moment) -> f64 {
        m.sem * (self.n as f64).sqrt()
    }

    fn moments(&self) -> [(&'static str, Moment); 5] {
        [
            ("age", self.age),
            ("mmse", self.mmse),
            ("abeta42", self.abeta42),
            ("ttau", self.ttau),
            ("ptau", self.ptau),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "{} spec: n must be at least 2",
                self.stage
            )));
        }
        for (name, m) in self.moments() {
            if !(m.mean > 0.0 && m.mean.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{} spec: {name} mean must be positive",
                    self.stage
                )));
            }
            if !(m.sem > 0.0 && m.sem.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{} spec: {name} sem must be positive",
                    self.stage
                )));
            }
        }
        let (lo, hi) = mmse_band(self.stage);
        if !(self.mmse.mean > lo && self.mmse.mean < hi) {
            return Err(Error::InvalidInput(format!(
                "{} spec: MMSE mean {} outside the open stage band ({lo}, {hi})",
                self.stage, self.mmse.mean
            )));
        }
        Ok(())
    }
}

/// Mean of `N(mu, sigma²)` truncated below at [`POSITIVE_FLOOR`].
fn truncated_mean(mu: f64, sigma: f64) -> f64 {
    mu + sigma * normal_hazard((POSITIVE_FLOOR - mu) / sigma)
}

/// Mean of `clamp(round(X), lo, hi)` for `X ~ N(mu, sigma²)`.
fn rounded_clamped_mean(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let below = |c: f64| normal_cdf((c - mu) / sigma);
    let mut mean = lo * below(lo + 0.5) + hi * (1.0 - below(hi - 0.5));
    let mut k = lo + 1.0;
    while k < hi {
        mean += k * (below(k + 0.5) - below(k - 0.5));
        k += 1.0;
    }
    mean
}

/// Location `mu` with `f(mu) = target`, for `f` increasing in `mu`.
fn solve_location(target: f64, sigma: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (target - 40.0 * sigma, target + 40.0 * sigma);
    if !(f(lo) <= target && target <= f(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn m(mean: f64, sem: f64) -> Moment {
    Moment { mean, sem }
}

/// The four group specifications of the published cohort description.
pub fn table1() -> Vec<GroupMomentSpec> {
    let spec = |stage, n, age, mmse, abeta42, ttau, ptau| GroupMomentSpec {
        stage,
        n,
        age,
        mmse,
        abeta42,
        ttau,
        ptau,
        family: Family::TruncatedNormal,
    };
    vec![
        spec(
            Stage::Sd,
            20,
            m(68.41, 2.51),
            m(5.580, 0.88),
            m(232.88, 38.28),
            m(321.99, 133.25),
            m(42.5, 4.92),
        ),
        spec(
            Stage::Mod,
            101,
            m(69.43, 0.78),
            m(16.35, 0.24),
            m(193.72, 8.57),
            m(195.5, 24.64),
            m(53.13, 2.75),
        ),
        spec(
            Stage::Mci,
            152,
            m(71.23, 0.75),
            m(22.72, 0.09),
            m(226.43, 2.51),
            m(261.3, 42.06),
            m(45.24, 3.17),
        ),
        spec(
            Stage::Nc,
            167,
            m(66.85, 0.44),
            m(28.47, 0.06),
            m(369.7, 10.00),
            m(150.8, 9.73),
            m(37.97, 1.06),
        ),
    ]
}

/// Reads a JSON array of group specifications.
pub fn read_specs<R: Read>(source: R) -> Result<Vec<GroupMomentSpec>> {
    Ok(serde_json::from_reader(source)?)
}

fn mmse_band(stage: Stage) -> (f64, f64) {
    match stage {
        Stage::Nc => (26.0, 30.0),
        Stage::Mci => (20.0, 25.0),
        Stage::Mod => (10.0, 19.0),
        Stage::Sd => (0.0, 9.0),
    }
}

fn cdr_for(stage: Stage) -> Cdr {
    match stage {
        Stage::Nc => Cdr::Zero,
        Stage::Mci => Cdr::Half,
        Stage::Mod => Cdr::One,
        Stage::Sd => Cdr::Three,
    }
}

fn truncated(dist: &Normal<f64>, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v = dist.sample(rng);
        if v >= POSITIVE_FLOOR {
            return v;
        }
    }
}

/// Generates exactly `spec.n` records per group.
pub fn generate_cohort(specs: &[GroupMomentSpec], seed: u64) -> Result<Vec<PatientRecord>> {
    generate_cohort_scaled(specs, seed, 1.0)
}

/// As [`generate_cohort`] with `round(n·scale)` records per group. The
/// sampling spread still comes from the published `n`.
pub fn generate_cohort_scaled(specs: &[GroupMomentSpec], seed: u64, scale: f64) -> Result<Vec<PatientRecord>> {
    if specs.is_empty() {
        return Err(Error::InvalidInput("no group specifications".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    for s in specs {
        s.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for spec in specs {
        let (lo, hi) = mmse_band(spec.stage);
        let normal = |mo: Moment, rounded: bool| {
            let sd = spec.sd(mo);
            let mu = if rounded {
                solve_location(mo.mean, sd, |mu| rounded_clamped_mean(mu, sd, lo, hi))
            } else {
                solve_location(mo.mean, sd, |mu| truncated_mean(mu, sd))
            }
            .ok_or_else(|| Error::InvalidInput(format!("{}: mean {} is unattainable", spec.stage, mo.mean)))?;
            Normal::new(mu, sd).map_err(|e| Error::InvalidInput(format!("{}: {e}", spec.stage)))
        };
        let age = normal(spec.age, false)?;
        let mmse = normal(spec.mmse, true)?;
        let abeta = normal(spec.abeta42, false)?;
        let ttau = normal(spec.ttau, false)?;
        let ptau = normal(spec.ptau, false)?;
        let count = (spec.n as f64 * scale).round() as usize;
        if count == 0 {
            return Err(Error::InvalidInput(format!(
                "{} group scales to zero records",
                spec.stage
            )));
        }
        for _ in 0..count {
            let age_v = truncated(&age, &mut rng);
            let mmse_v = mmse.sample(&mut rng).round().clamp(lo, hi) as u8;
            let panel = BiomarkerPanel::new(
                truncated(&abeta, &mut rng),
                truncated(&ttau, &mut rng),
                truncated(&ptau, &mut rng),
            )?;
            records.push(PatientRecord {
                id: format!("S{:05}", records.len() + 1),
                age: age_v,
                panel,
                assessment: AssessmentRecord {
                    mmse: Some(mmse_v),
                    cdr_global: Some(cdr_for(spec.stage)),
                },
            });
        }
    }
    Ok(records)
}

/// Writes the biomarker table in the ingestion format.
pub fn write_biomarker_csv<W: Write>(records: &[PatientRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(BIOMARKER_HEADER)?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.age.to_string(),
            r.panel.abeta42().to_string(),
            r.panel.ttau().to_string(),
            r.panel.ptau().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes the assessment table in the ingestion format; absent scores are `NA`.
pub fn write_assessment_csv<W: Write>(records: &[PatientRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ASSESSMENT_HEADER)?;
    for r in records {
        let mmse = r.assessment.mmse.map_or("NA".to_string(), |v| v.to_string());
        let cdr = r.assessment.cdr_global.map_or("NA".to_string(), |v| v.to_string());
        w.write_record([r.id.clone(), mmse, cdr])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{merge_cohort, parse_assessment_csv, parse_biomarker_csv, Scheme};

    #[test]
    fn implied_sds() {
        let t = table1();
        let nc = t.iter().find(|s| s.stage == Stage::Nc).unwrap();
        assert!((nc.sd(nc.abeta42) - 129.228).abs() < 1e-3);
        let mci = t.iter().find(|s| s.stage == Stage::Mci).unwrap();
        assert!((mci.sd(mci.abeta42) - 30.945).abs() < 1e-3);
    }

    #[test]
    fn sizes_bands_and_positivity() {
        let recs = generate_cohort(&table1(), 3).unwrap();
        assert_eq!(recs.len(), 440);
        for spec in table1() {
            let group: Vec<_> = recs
                .iter()
                .filter(|r| r.stage(Scheme::Mmse) == Some(spec.stage))
                .collect();
            assert_eq!(group.len(), spec.n);
            assert!(group.iter().all(|r| r.stage(Scheme::Cdr) == Some(spec.stage)));
        }
        for r in &recs {
            let [a, t, p, ratio] = r.panel.features();
            assert!(a >= POSITIVE_FLOOR && t >= POSITIVE_FLOOR && p >= POSITIVE_FLOOR && ratio > 0.0);
        }
    }

    #[test]
    fn calibrated_means_hit_targets() {
        // Monte Carlo oracle for the closed-form means.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mu, sd) = (120.0, 518.0);
        let d = Normal::new(mu, sd).unwrap();
        let draws: Vec<f64> = (0..200_000).map(|_| truncated(&d, &mut rng)).collect();
        let mc = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mc - truncated_mean(mu, sd)).abs() < 3.0, "{mc}");
        let d: Normal<f64> = Normal::new(6.0, 3.9).unwrap();
        let mc = (0..200_000)
            .map(|_| d.sample(&mut rng).round().clamp(0.0_f64, 9.0))
            .sum::<f64>()
            / 200_000.0;
        assert!((mc - rounded_clamped_mean(6.0, 3.9, 0.0, 9.0)).abs() < 0.02, "{mc}");

        let mu = solve_location(261.3, 518.5, |m| truncated_mean(m, 518.5)).unwrap();
        assert!(mu < 261.3);
        assert!((truncated_mean(mu, 518.5) - 261.3).abs() < 1e-6);
        assert!(solve_location(0.5, 10.0, |m| truncated_mean(m, 10.0)).is_none());
    }

    #[test]
    fn large_cohort_means_converge() {
        let recs = generate_cohort_scaled(&table1(), 8, 100.0).unwrap();
        for spec in table1() {
            let group: Vec<_> = recs
                .iter()
                .filter(|r| r.stage(Scheme::Mmse) == Some(spec.stage))
                .collect();
            let mean = |f: &dyn Fn(&PatientRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64;
            let checks: [(Moment, f64); 5] = [
                (spec.age, mean(&|r| r.age)),
                (spec.mmse, mean(&|r| f64::from(r.assessment.mmse.unwrap()))),
                (spec.abeta42, mean(&|r| r.panel.abeta42())),
                (spec.ttau, mean(&|r| r.panel.ttau())),
                (spec.ptau, mean(&|r| r.panel.ptau())),
            ];
            for (mo, got) in checks {
                assert!((got - mo.mean).abs() <= 0.5 * mo.sem, "{} {:?}: {got}", spec.stage, mo);
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_cohort(&table1(), 77).unwrap();
        let b = generate_cohort(&table1(), 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_cohort(&table1(), 78).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut t = table1();
        t[0].abeta42.mean = 0.0;
        assert!(generate_cohort(&t, 0).is_err());
        assert!(generate_cohort(&[], 0).is_err());
        assert!(generate_cohort_scaled(&table1(), 0, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = generate_cohort(&table1(), 5).unwrap();
        let (mut b, mut a) = (Vec::new(), Vec::new());
        write_biomarker_csv(&recs, &mut b).unwrap();
        write_assessment_csv(&recs, &mut a).unwrap();
        let bio = parse_biomarker_csv(&b[..]).unwrap();
        let asm = parse_assessment_csv(&a[..]).unwrap();
        assert_eq!(bio.skip_count(), 0);
        assert_eq!(merge_cohort(&bio.rows, &asm.rows).unwrap(), recs);
    }

    #[test]
    fn specs_json_round_trip() {
        let json = serde_json::to_string(&table1()).unwrap();
        assert_eq!(read_specs(json.as_bytes()).unwrap(), table1());
    }
}
