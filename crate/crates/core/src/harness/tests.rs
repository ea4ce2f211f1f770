use super::*;
use crate::corpus::CorpusSpec;
use crate::transfer::{AdaptConfig, ScheduleSpec};
use std::path::PathBuf;

fn tiny_spec() -> ExperimentSpec {
    let corpus = CorpusSpec {
        seed: 5,
        k: 6,
        d: 8,
        ages: vec![Age::Adult, Age::Child(6), Age::Child(14)],
        speakers_per_age: vec![4, 2, 2],
        utts_per_speaker: 5,
        frames_per_utt: 50,
        test_speakers_per_age: vec![2, 2, 2],
        test_utts_per_speaker: 3,
        ..CorpusSpec::default()
    };
    let arch = ArchSpec {
        hidden_layers: 2,
        hidden_units: 12,
        splice_left: 1,
        splice_right: 1,
        ivector_dim: 2,
        ubm_components: 2,
        ubm_iters: 3,
        tv_iters: 2,
        ..ArchSpec::default()
    };
    let mut train = TrainParams::default();
    train.base.max_epochs = 6;
    train.adapt.max_epochs = 6;
    train.adapt.batch = 32;
    ExperimentSpec {
        corpus,
        arch,
        train,
        variants: vec![
            Variant::SourceOnly,
            Variant::Transfer {
                config: AdaptConfig::SymmetricTotal(2),
                schedule: ScheduleSpec::Sim,
            },
        ],
        budgets: vec![Budget::Percent(100.0)],
        train_ages: spec::TrainAges::All,
        test_ages: vec![TestAge::All, TestAge::Age(Age::Child(6))],
        seeds: vec![1, 2],
        mode: Mode::Grid,
    }
}

#[test]
fn test_budget_resolution() {
    assert_eq!(Budget::Frames(500).resolve(10_000), 500);
    assert_eq!(Budget::Percent(10.0).resolve(10_000), 1000);
    assert_eq!("35%".parse::<Budget>().unwrap(), Budget::Percent(35.0));
    assert_eq!("1234".parse::<Budget>().unwrap(), Budget::Frames(1234));
    assert!("0%".parse::<Budget>().is_err());
    assert!("x".parse::<Budget>().is_err());
}

#[test]
fn test_row_csv_round_trip() {
    let rows = vec![ResultRow {
        run_id: "sym:2|sim|b00000100|trall|teall|s0001".to_string(),
        seed: 1,
        variant: "sym:2".to_string(),
        schedule: "sim".to_string(),
        budget_frames: 100,
        train_age_set: "all".to_string(),
        test_age: "all".to_string(),
        frame_error: 0.12345,
        epochs_run: 7,
        wall_ms: 0,
    }];
    let csv = rows_to_csv(&rows);
    let back = rows_from_csv(&csv).unwrap();
    assert_eq!(back, rows);
    assert!(csv.ends_with('\n'));
    assert!(!csv.contains('\r'));
}

#[test]
fn test_rows_csv_rejects_garbage() {
    assert!(rows_from_csv("not a header\n").is_err());
    assert!(rows_from_csv("run_id,seed\nx,1\n").is_err());
}

fn synthetic_budget_rows() -> Vec<ResultRow> {
    // sym:2 best at small budgets, overtaken at 1000.
    let mut rows = Vec::new();
    let curves: [(&str, [f64; 3]); 2] = [
        ("sym:2", [0.50, 0.40, 0.30]),
        ("all", [0.60, 0.45, 0.25]),
    ];
    for (variant, errs) in curves {
        for (i, budget) in [10usize, 100, 1000].into_iter().enumerate() {
            rows.push(ResultRow {
                run_id: format!("{variant}|sim|b{budget:08}|trall|teall|s0001"),
                seed: 1,
                variant: variant.to_string(),
                schedule: "sim".to_string(),
                budget_frames: budget,
                train_age_set: "all".to_string(),
                test_age: "all".to_string(),
                frame_error: errs[i],
                epochs_run: 1,
                wall_ms: 0,
            });
        }
    }
    rows
}

#[test]
fn test_crossover_detector() {
    let rows = synthetic_budget_rows();
    assert_eq!(crossover_budget(&rows), Some(1000));
    // Only sym:2 rows: never crossed.
    let only: Vec<ResultRow> = rows
        .iter()
        .filter(|r| r.variant == "sym:2")
        .cloned()
        .collect();
    assert_eq!(crossover_budget(&only), None);
}

#[test]
fn test_experiment_spec_parse() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("c.spec");
    std::fs::write(&corpus_path, CorpusSpec::default().to_text()).unwrap();
    let text = "corpus_spec=c.spec\nmode=grid\nbaselines=source,target\n\
                configs=sym:2,all\nschedules=sim\nbudgets=10%,100%\n\
                train_ages=all\ntest_ages=all,6\nseeds=1,2,3\n\
                hidden_layers=3\nadapt_batch=8\n";
    let spec = ExperimentSpec::parse(text, dir.path()).unwrap();
    assert_eq!(spec.variants.len(), 4); // 2 baselines + 2 configs x 1 schedule
    assert_eq!(spec.budgets.len(), 2);
    assert_eq!(spec.seeds, vec![1, 2, 3]);
    assert_eq!(spec.arch.hidden_layers, 3);
    assert_eq!(spec.train.adapt.batch, 8);
    assert_eq!(spec.test_ages.len(), 2);

    assert!(ExperimentSpec::parse("mode=grid\n", dir.path()).is_err());
    assert!(ExperimentSpec::parse("corpus_spec=c.spec\nbogus=1\n", dir.path()).is_err());
}

#[test]
fn test_sweep_rows_complete_and_deterministic() {
    let spec = tiny_spec();
    let out1 = run_sweep(&spec).unwrap();
    assert!(out1.failures.is_empty(), "{:?}", out1.failures);
    // source: 1 seed x 2 test ages; transfer: 1 budget x 2 seeds x 2 ages.
    assert_eq!(out1.rows.len(), 2 + 4);
    let out2 = run_sweep(&spec).unwrap();
    assert_eq!(rows_to_csv(&out1.rows), rows_to_csv(&out2.rows));
    // Sorted by run id, timing zeroed.
    for pair in out1.rows.windows(2) {
        assert!(pair[0].run_id < pair[1].run_id);
    }
    assert!(out1.rows.iter().all(|r| r.wall_ms == 0));
    // run_experiment reproduces a sweep row (modulo timing).
    let cell = Cell {
        variant: Variant::SourceOnly,
        budget_frames: 0,
        train_ages: vec![Age::Child(6), Age::Child(14)],
        train_age_label: "all".to_string(),
        test_age: TestAge::All,
        seed: spec.seeds[0],
    };
    let mut row = run_experiment(&spec, &cell).unwrap();
    row.wall_ms = 0;
    assert!(out1.rows.contains(&row));
}

#[test]
fn test_sweep_source_row_matches_source_error() {
    let spec = tiny_spec();
    let lab = Lab::prepare(&spec).unwrap();
    let out = run_sweep(&spec).unwrap();
    let source_row = out
        .rows
        .iter()
        .find(|r| r.variant == "source" && r.test_age == "all")
        .unwrap();
    let ages: Vec<Age> = Age::all_children().collect();
    let test = lab.pair.test.filter_ages(&ages);
    let direct = frame_error(&lab.source, &test, lab.tv.as_ref()).unwrap();
    assert_eq!(source_row.frame_error, direct);
    assert_eq!(source_row.epochs_run, 0);
}

#[test]
fn test_age_matrix_grid_shape() {
    let mut spec = tiny_spec();
    spec.corpus.ages = std::iter::once(Age::Adult)
        .chain(Age::all_children())
        .collect();
    spec.corpus.speakers_per_age = vec![4, 2, 2, 2, 2, 2, 2, 2, 2, 2];
    spec.corpus.test_speakers_per_age = vec![2];
    spec.mode = Mode::AgeMatrix;
    spec.seeds = vec![1];
    let out = age_transform_matrix(&spec).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.rows.len(), 81);
    let diag = out
        .rows
        .iter()
        .filter(|r| r.train_age_set == r.test_age)
        .count();
    assert_eq!(diag, 9);
}

#[test]
fn test_age_indep_modes_budgets() {
    let mut spec = tiny_spec();
    spec.corpus.ages = std::iter::once(Age::Adult)
        .chain(Age::all_children())
        .collect();
    spec.corpus.speakers_per_age = vec![4, 2, 2, 2, 2, 2, 2, 2, 2, 2];
    spec.corpus.test_speakers_per_age = vec![2];
    spec.mode = Mode::AgeIndep;
    spec.seeds = vec![1];
    spec.variants = vec![Variant::Transfer {
        config: AdaptConfig::All,
        schedule: ScheduleSpec::Sim,
    }];
    let out = age_independent_modes(&spec).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    // 4 families x 9 test ages x 1 seed.
    assert_eq!(out.rows.len(), 36);
    let total: usize = 9 * 2 * 5 * 50;
    let avg_rows: Vec<&ResultRow> = out
        .rows
        .iter()
        .filter(|r| r.train_age_set == "avg-indep")
        .collect();
    // Average-mode budget is total child frames / 9.
    assert!(avg_rows.iter().all(|r| r.budget_frames == total / 9));
    // Matched modes use each age's own frame count.
    let matched: Vec<&ResultRow> = out
        .rows
        .iter()
        .filter(|r| r.train_age_set == "matched-indep")
        .collect();
    assert!(matched.iter().all(|r| r.budget_frames == 2 * 5 * 50));
}

#[test]
fn test_report_files_and_validity() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("rows");
    let rows = synthetic_budget_rows();
    let files = render_report(&rows, ReportKind::BudgetCurves, &prefix).unwrap();
    assert_eq!(files.len(), 3);
    let svg = std::fs::read_to_string(files.iter().find(|f| f.to_string_lossy().ends_with(".svg")).unwrap()).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert!(csv.starts_with("variant,budget_frames,median_frame_error"));
    // Deterministic bytes on rerun.
    let again = render_report(&rows, ReportKind::BudgetCurves, &prefix).unwrap();
    let csv2 = std::fs::read_to_string(&again[0]).unwrap();
    assert_eq!(csv, csv2);
}

#[test]
fn test_report_single_row_chart() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("one");
    let rows = vec![synthetic_budget_rows().remove(0)];
    let files = render_report(&rows, ReportKind::BudgetCurves, &prefix).unwrap();
    let svg = std::fs::read_to_string(&files[1]).unwrap();
    assert!(svg.contains("<circle"));
}

#[test]
fn test_variance_report_zero_for_identical_errors() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("var");
    let mut rows = Vec::new();
    for variant in ["sym:2", "all"] {
        for age in ["6", "14"] {
            rows.push(ResultRow {
                run_id: format!("{variant}|sim|b1|trall|te{age}|s1"),
                seed: 1,
                variant: variant.to_string(),
                schedule: "sim".to_string(),
                budget_frames: 1,
                train_age_set: "all".to_string(),
                test_age: age.to_string(),
                frame_error: 0.25,
                epochs_run: 1,
                wall_ms: 0,
            });
        }
    }
    let files = render_report(&rows, ReportKind::Variance, &prefix).unwrap();
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    for line in csv.lines().skip(1) {
        let variance: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(variance, 0.0);
    }
}

#[test]
fn test_unknown_report_kind_lists_valid() {
    let err = "bogus".parse::<ReportKind>().unwrap_err().to_string();
    for kind in REPORT_KINDS {
        assert!(err.contains(kind), "{err}");
    }
}
