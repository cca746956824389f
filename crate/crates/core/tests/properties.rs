use std::collections::BTreeSet;

use csfstage::cohort::{
    make_task, merge_cohort, stage_mmse, undersample, AssessmentRecord, AssessmentRow, BiomarkerPanel, BiomarkerRow,
    Cdr, PatientRecord, Scheme, Stage, Task,
};
use csfstage::eval::{auc, cross_validate, evaluate, kfold, metrics, roc, ConfusionMatrix, FoldPlan};
use csfstage::learners::{ModelKind, ModelSpec, Overrides};
use csfstage::stats::{anova_oneway, group_summary, pearson, variable_value, SUMMARY_VARIABLES};
use csfstage::synth::{generate_cohort, table1, GroupMomentSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(id: usize, features: [f64; 3], mmse: Option<u8>, cdr: Option<Cdr>) -> PatientRecord {
    PatientRecord {
        id: format!("P{id:04}"),
        age: 60.0 + id as f64 % 20.0,
        panel: BiomarkerPanel::new(features[0], features[1], features[2]).unwrap(),
        assessment: AssessmentRecord { mmse, cdr_global: cdr },
    }
}

fn random_records(seed: u64, n: usize) -> Vec<PatientRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mmse = rng.random_range(0..=30u8);
            let f = [
                100.0 + 10.0 * f64::from(mmse) + 40.0 * rng.random::<f64>(),
                50.0 + 300.0 * rng.random::<f64>(),
                10.0 + 60.0 * rng.random::<f64>(),
            ];
            let cdr = [Cdr::Zero, Cdr::Half, Cdr::One, Cdr::Two, Cdr::Three][rng.random_range(0..5)];
            record(i, f, Some(mmse), Some(cdr))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.1f64..10.0, b in -50.0f64..50.0,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let (Ok(xy), Ok(yx)) = (pearson(&x, &y), pearson(&y, &x)) {
            prop_assert!((xy.r - yx.r).abs() < 1e-12);
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let moved = pearson(&xa, &y).unwrap();
            prop_assert!((moved.r - xy.r).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&xy.p));
        }
    }

    #[test]
    fn anova_two_groups_is_t_squared(
        g1 in prop::collection::vec(-10.0f64..10.0, 2..20),
        g2 in prop::collection::vec(-10.0f64..10.0, 2..20),
    ) {
        let (n1, n2) = (g1.len() as f64, g2.len() as f64);
        let m1 = g1.iter().sum::<f64>() / n1;
        let m2 = g2.iter().sum::<f64>() / n2;
        let ss = g1.iter().map(|v| (v - m1).powi(2)).sum::<f64>() + g2.iter().map(|v| (v - m2).powi(2)).sum::<f64>();
        let sp2 = ss / (n1 + n2 - 2.0);
        let t = (m1 - m2) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt();
        let f = anova_oneway(&[g1, g2]).unwrap();
        prop_assert!((f.f_stat - t * t).abs() <= 1e-10 * (1.0 + t * t));
    }

    #[test]
    fn merge_is_id_intersection(
        left in prop::collection::btree_set(0usize..60, 0..40),
        right in prop::collection::btree_set(0usize..60, 0..40),
    ) {
        let bio: Vec<BiomarkerRow> = left.iter().map(|&i| BiomarkerRow {
            id: format!("P{i:03}"),
            age: 70.0,
            panel: BiomarkerPanel::new(200.0, 100.0, 30.0).unwrap(),
        }).collect();
        let asm: Vec<AssessmentRow> = right.iter().map(|&i| AssessmentRow {
            id: format!("P{i:03}"),
            assessment: AssessmentRecord { mmse: Some(27), cdr_global: None },
        }).collect();
        let merged = merge_cohort(&bio, &asm).unwrap();
        let got: BTreeSet<String> = merged.iter().map(|r| r.id.clone()).collect();
        let want: BTreeSet<String> = left.intersection(&right).map(|i| format!("P{i:03}")).collect();
        prop_assert!(merged.len() <= left.len().min(right.len()));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn undersample_balances_and_keeps_rows(seed in 0u64..1_000, data_seed in 0u64..50) {
        let recs = random_records(data_seed, 120);
        let (data, _) = make_task(&recs, Scheme::Mmse, Task::Multi).unwrap();
        let min = *data.class_counts().iter().min().unwrap();
        let a = undersample(&data, seed).unwrap();
        prop_assert_eq!(a.class_counts(), vec![min; 3]);
        for (i, id) in a.ids.iter().enumerate() {
            let j = data.ids.iter().position(|d| d == id).unwrap();
            prop_assert_eq!(a.features.row(i), data.features.row(j));
            prop_assert_eq!(a.labels[i], data.labels[j]);
        }
        prop_assert_eq!(a, undersample(&data, seed).unwrap());
    }

    #[test]
    fn auc_matches_pair_counting(
        rows in prop::collection::vec((0u8..12, any::<bool>()), 2..200),
    ) {
        let scores: Vec<f64> = rows.iter().map(|r| f64::from(r.0) / 4.0).collect();
        let pos: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let n_pos = pos.iter().filter(|&&p| p).count();
        prop_assume!(n_pos > 0 && n_pos < pos.len());
        let mut wins = 0.0;
        for i in 0..pos.len() {
            for j in 0..pos.len() {
                if pos[i] && !pos[j] {
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let mw = wins / (n_pos * (pos.len() - n_pos)) as f64;
        prop_assert!((auc(&roc(&scores, &pos).unwrap()) - mw).abs() < 1e-12);
    }

    #[test]
    fn metric_identities_and_class_permutation(
        counts in prop::collection::vec(0u64..50, 9),
        perm_seed in any::<u64>(),
    ) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let grid: Vec<Vec<u64>> = counts.chunks(3).map(|c| c.to_vec()).collect();
        let cm = ConfusionMatrix::from_counts(&names, grid.clone()).unwrap();
        let m = metrics(&cm).unwrap();
        for c in &m.per_class {
            if let (Some(t), Some(f)) = (c.tpr, c.fnr) {
                prop_assert!((t + f - 1.0).abs() <= 1e-15);
            }
            if let (Some(p), Some(f)) = (c.ppv, c.fdr) {
                prop_assert!((p + f - 1.0).abs() <= 1e-15);
            }
        }
        use rand::seq::SliceRandom;
        let mut perm = [0, 1, 2];
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let pgrid: Vec<Vec<u64>> = perm.iter().map(|&i| perm.iter().map(|&j| grid[i][j]).collect()).collect();
        let pnames: Vec<String> = perm.iter().map(|&i| names[i].clone()).collect();
        let pm = metrics(&ConfusionMatrix::from_counts(&pnames, pgrid).unwrap()).unwrap();
        prop_assert_eq!(pm.accuracy, m.accuracy);
        for c in &m.per_class {
            prop_assert_eq!(Some(c), pm.class(&c.name));
        }
    }

    #[test]
    fn fold_plans_partition_rows(
        labels in prop::collection::vec(0usize..3, 15..80),
        k in 2usize..6,
        seed in any::<u64>(),
        stratified in any::<bool>(),
    ) {
        let counts: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
        let plan = match kfold(&labels, k, seed, stratified) {
            Ok(p) => p,
            Err(_) => {
                prop_assert!(stratified && counts.iter().any(|&c| c > 0 && c < k));
                return Ok(());
            }
        };
        prop_assert!(plan.assignments.iter().all(|&f| f < k));
        let mut seen = vec![0; labels.len()];
        for f in 0..k {
            for i in plan.test_indices(f) {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        if stratified {
            for c in 0..3 {
                let per_fold: Vec<usize> = (0..k)
                    .map(|f| plan.test_indices(f).iter().filter(|&&i| labels[i] == c).count())
                    .collect();
                prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
            }
        }
    }
}

#[test]
fn mmse_staging_is_total_and_piecewise_constant() {
    let mut previous = None;
    let mut changes = 0;
    for score in 0..=30 {
        let s = stage_mmse(score).unwrap();
        if previous.is_some_and(|p| p != s) {
            changes += 1;
        }
        previous = Some(s);
    }
    assert_eq!(changes, 3);
    assert!(stage_mmse(-1).is_err() && stage_mmse(31).is_err());
}

#[test]
fn features_are_biomarkers_only() {
    let recs = random_records(4, 50);
    for task in [Task::Binary, Task::Multi] {
        let (data, _) = make_task(&recs, Scheme::Cdr, task).unwrap();
        assert_eq!(data.features.ncols(), 4);
        for (i, id) in data.ids.iter().enumerate() {
            let r = recs.iter().find(|r| &r.id == id).unwrap();
            assert_eq!(data.features.row(i), &r.panel.features()[..]);
        }
    }
}

#[test]
fn group_summary_matches_streaming_recomputation() {
    let recs = random_records(9, 300);
    for g in group_summary(&recs, Scheme::Mmse) {
        let members: Vec<&PatientRecord> = recs.iter().filter(|r| r.stage(Scheme::Mmse) == Some(g.group)).collect();
        for &v in &SUMMARY_VARIABLES {
            let mut n = 0usize;
            let mut sum = 0.0;
            for r in &members {
                if let Some(x) = variable_value(r, v) {
                    n += 1;
                    sum += x;
                }
            }
            let got = g.variable(v).unwrap();
            assert_eq!(got.n, n);
            assert_eq!(got.mean, Some(sum / n as f64));
        }
    }
}

fn separable_dataset() -> csfstage::cohort::LabeledDataset {
    // NC rows sit far from the other stages on every biomarker.
    let mut recs = Vec::new();
    for i in 0..30 {
        let off = i as f64;
        recs.push(record(
            i,
            [900.0 + off, 50.0 + off, 10.0 + off / 10.0],
            Some(29),
            Some(Cdr::Zero),
        ));
        recs.push(record(
            100 + i,
            [150.0 + off, 600.0 + off, 80.0 + off / 10.0],
            Some(22),
            Some(Cdr::Half),
        ));
        recs.push(record(
            200 + i,
            [50.0 + off, 1200.0 + off, 150.0 + off / 10.0],
            Some(5),
            Some(Cdr::Three),
        ));
    }
    make_task(&recs, Scheme::Mmse, Task::Multi).unwrap().0
}

#[test]
fn separable_data_gives_diagonal_confusion_for_tree_models() {
    let data = separable_dataset();
    let plan = kfold(&data.labels, 5, 3, true).unwrap();
    for kind in [ModelKind::BoostedTree, ModelKind::BaggedTree, ModelKind::RusBoostedTree] {
        let out = cross_validate(&ModelSpec::new(kind, 2), &data, &plan, false).unwrap();
        let cm = &out.confusion.counts;
        for (i, row) in cm.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert!(i == j || c == 0, "{kind}: {cm:?}");
            }
        }
        assert_eq!(out.confusion.total(), data.len() as u64);
    }
}

#[test]
fn majority_vote_model_fills_one_column() {
    // k at least the training size: every query gets the training class frequencies.
    let recs = random_records(12, 90);
    let (data, _) = make_task(&recs, Scheme::Mmse, Task::Binary).unwrap();
    let spec = ModelSpec::with_overrides(
        ModelKind::KnnCoarse,
        0,
        &Overrides {
            k: Some(10_000),
            ..Overrides::default()
        },
    )
    .unwrap();
    let plan = kfold(&data.labels, 5, 1, true).unwrap();
    let out = cross_validate(&spec, &data, &plan, false).unwrap();
    let nonzero_cols = (0..2).filter(|&c| out.confusion.col_sum(c) > 0).count();
    assert_eq!(nonzero_cols, 1);
}

#[test]
fn cross_validation_is_reproducible_serial_and_parallel() {
    let recs = generate_cohort(&table1(), 3).unwrap();
    let (data, _) = make_task(&recs, Scheme::Cdr, Task::Multi).unwrap();
    let plan: FoldPlan = kfold(&data.labels, 5, 8, true).unwrap();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind, 17);
        let a = evaluate(&spec, &data, &plan, false, 0).unwrap();
        let b = evaluate(&spec, &data, &plan, true, 0).unwrap();
        assert_eq!(a, b, "{kind}");
        assert_eq!(a.outcome.confusion.total(), data.len() as u64);
    }
}

#[test]
fn fold_failures_name_the_fold() {
    let recs = random_records(5, 60);
    let (data, _) = make_task(&recs, Scheme::Mmse, Task::Binary).unwrap();
    let mut spec = ModelSpec::new(ModelKind::KnnCoarse, 0);
    spec.params = csfstage::learners::Hyperparameters::Knn { k: 0 };
    let plan = kfold(&data.labels, 3, 0, true).unwrap();
    let err = cross_validate(&spec, &data, &plan, false).unwrap_err();
    assert!(err.to_string().starts_with("fold 0:"), "{err}");
}

#[test]
fn synthetic_nc_mean_within_three_sem() {
    let nc: GroupMomentSpec = *table1().iter().find(|s| s.stage == Stage::Nc).unwrap();
    let mut inside = 0;
    for seed in 0..1000 {
        let recs = generate_cohort(&[nc], seed).unwrap();
        let mean = recs.iter().map(|r| r.panel.abeta42()).sum::<f64>() / recs.len() as f64;
        if (mean - 369.7).abs() <= 3.0 * 10.0 {
            inside += 1;
        }
    }
    assert!(inside >= 950, "{inside} of 1000");
}
