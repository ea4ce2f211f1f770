//! Batch experiment driver: sweeps of baselines and transfer
//! configurations over budgets, ages, and seeds, reduced to CSV rows and
//! SVG charts.

mod report;
mod spec;

pub use report::{crossover_budget, render_report, ReportKind, REPORT_KINDS};
pub use spec::{
    ArchSpec, Budget, ExperimentSpec, Mode, ModelSpec, TestAge, TrainAges, TrainParams, Variant,
};

use crate::corpus::{
    default_age_profile, generate_corpus, subsample_budget, Age, Corpus, CorpusPair,
};
use crate::error::{Error, Result};
use crate::ivector::{train_tv, train_ubm, TvModel};
use crate::network::{frame_error, pretrain_layerwise, Network, TrainConfig};
use crate::rng::{derive, tag};
use crate::transfer::{adapt, mask_from_config, oracle_warp_normalize, Schedule};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

/// One sweep cell's outcome; the atom of all analyses.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub run_id: String,
    pub seed: u64,
    pub variant: String,
    pub schedule: String,
    pub budget_frames: usize,
    pub train_age_set: String,
    pub test_age: String,
    pub frame_error: f64,
    pub epochs_run: usize,
    pub wall_ms: u64,
}

/// A cell that failed; sweeps continue past failures.
#[derive(Clone, Debug)]
pub struct CellFailure {
    pub run_id: String,
    pub message: String,
}

/// Rows plus per-cell failures of one sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
}

/// One grid cell, fully resolved.
#[derive(Clone, Debug)]
pub struct Cell {
    pub variant: Variant,
    /// 0 means "no training data used" (source-only style cells).
    pub budget_frames: usize,
    /// Ages the training corpus is drawn from.
    pub train_ages: Vec<Age>,
    /// Label recorded in the row (distinguishes age-independent modes).
    pub train_age_label: String,
    pub test_age: TestAge,
    pub seed: u64,
}

impl Cell {
    pub fn run_id(&self) -> String {
        format!(
            "{}|{}|b{:08}|tr{}|te{}|s{:04}",
            self.variant.name(),
            self.variant.schedule_name(),
            self.budget_frames,
            self.train_age_label,
            self.test_age,
            self.seed
        )
    }
}

/// Shared artifacts of one experiment: corpora, front-end, source model,
/// and a memo of trained cells so evaluation-only cells are cheap.
pub struct Lab {
    pub spec: ExperimentSpec,
    pub pair: CorpusPair,
    pub tv: Option<TvModel>,
    pub source: Network,
    trained: Mutex<HashMap<String, Arc<(Network, usize)>>>,
}

impl Lab {
    /// Generate corpora and train the adult front-end and source model.
    pub fn prepare(spec: &ExperimentSpec) -> Result<Lab> {
        let pair = generate_corpus(&spec.corpus)?;
        let adult_train = pair.train.filter_age(Age::Adult);
        if adult_train.utterances.is_empty() {
            return Err(Error::config(
                "experiment corpus has no adult training data".to_string(),
            ));
        }
        let tv = if spec.arch.ivector_dim > 0 {
            let (ubm, _) = train_ubm(
                &adult_train,
                spec.arch.ubm_components,
                spec.arch.ubm_iters,
                derive(spec.train.base.seed, &[tag("ubm")]),
            )?;
            Some(train_tv(
                &ubm,
                &adult_train,
                spec.arch.ivector_dim,
                spec.arch.tv_iters,
                derive(spec.train.base.seed, &[tag("tv")]),
            )?)
        } else {
            None
        };
        let arch = spec.arch.network_arch(spec.corpus.d, spec.corpus.k);
        let (source, _) = pretrain_layerwise(&adult_train, tv.as_ref(), &arch, &spec.train.base)?;
        Ok(Lab {
            spec: spec.clone(),
            pair,
            tv,
            source,
            trained: Mutex::new(HashMap::new()),
        })
    }

    /// The child training corpus for an age set.
    pub fn train_corpus(&self, ages: &[Age]) -> Corpus {
        self.pair.train.filter_ages(ages)
    }

    /// The test partition for one cell.
    pub fn test_corpus(&self, test_age: &TestAge) -> Corpus {
        match test_age {
            TestAge::All => {
                let ages: Vec<Age> = Age::all_children().collect();
                self.pair.test.filter_ages(&ages)
            }
            TestAge::Age(age) => self.pair.test.filter_age(*age),
        }
    }

    fn training_key(&self, cell: &Cell) -> String {
        format!(
            "{}|{}|b{:08}|tr{}|s{:04}",
            cell.variant.name(),
            cell.variant.schedule_name(),
            cell.budget_frames,
            cell.train_age_label,
            cell.seed
        )
    }

    /// Train (or fetch) the network for a cell. Returns the network and
    /// the number of epochs run.
    fn trained_network(&self, cell: &Cell) -> Result<Arc<(Network, usize)>> {
        let key = self.training_key(cell);
        if let Some(hit) = self.trained.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let built = Arc::new(self.train_cell(cell)?);
        let mut memo = self.trained.lock().unwrap();
        Ok(memo.entry(key).or_insert(built).clone())
    }

    fn train_cell(&self, cell: &Cell) -> Result<(Network, usize)> {
        let spec = &self.spec;
        match &cell.variant {
            Variant::SourceOnly | Variant::OracleWarp => Ok((self.source.clone(), 0)),
            Variant::TargetOnly => {
                let child = self.train_corpus(&cell.train_ages);
                let sub = subsample_budget(
                    &child,
                    cell.budget_frames,
                    derive(cell.seed, &[tag("budget")]),
                )?;
                let arch = spec.arch.network_arch(spec.corpus.d, spec.corpus.k);
                let cfg = TrainConfig {
                    seed: derive(cell.seed, &[tag("target")]),
                    ..spec.train.base
                };
                let (net, traces) = pretrain_layerwise(&sub, self.tv.as_ref(), &arch, &cfg)?;
                let epochs = traces.iter().map(|t| t.epochs()).sum();
                Ok((net, epochs))
            }
            Variant::Pooled => {
                let child = self.train_corpus(&cell.train_ages);
                let sub = subsample_budget(
                    &child,
                    cell.budget_frames,
                    derive(cell.seed, &[tag("budget")]),
                )?;
                let adult = self.pair.train.filter_age(Age::Adult);
                let pooled = Corpus::union(&[&adult, &sub])?;
                let arch = spec.arch.network_arch(spec.corpus.d, spec.corpus.k);
                let cfg = TrainConfig {
                    seed: derive(cell.seed, &[tag("pooled")]),
                    ..spec.train.base
                };
                let (net, traces) = pretrain_layerwise(&pooled, self.tv.as_ref(), &arch, &cfg)?;
                let epochs = traces.iter().map(|t| t.epochs()).sum();
                Ok((net, epochs))
            }
            Variant::Transfer { config, schedule } => {
                let child = self.train_corpus(&cell.train_ages);
                let resolved: Schedule = schedule.resolve(self.source.depth())?;
                // Validate the mask up front for a clear error.
                mask_from_config(self.source.depth(), config)?;
                let cfg = TrainConfig {
                    seed: cell.seed,
                    ..spec.train.adapt
                };
                let result = adapt(
                    &self.source,
                    &child,
                    self.tv.as_ref(),
                    config,
                    &resolved,
                    &cfg,
                    cell.budget_frames,
                )?;
                let epochs = result.epochs_run();
                Ok((result.network, epochs))
            }
        }
    }

    /// Execute one cell: train (or reuse) and evaluate.
    pub fn run_cell(&self, cell: &Cell) -> Result<ResultRow> {
        let started = Instant::now();
        let trained = self.trained_network(cell)?;
        let (net, epochs) = (&trained.0, trained.1);
        let test = self.test_corpus(&cell.test_age);
        let test = match &cell.variant {
            Variant::OracleWarp => normalize_by_age(&test)?,
            _ => test,
        };
        let err = frame_error(net, &test, self.tv.as_ref())?;
        Ok(ResultRow {
            run_id: cell.run_id(),
            seed: cell.seed,
            variant: cell.variant.name(),
            schedule: cell.variant.schedule_name(),
            budget_frames: cell.budget_frames,
            train_age_set: cell.train_age_label.clone(),
            test_age: cell.test_age.to_string(),
            frame_error: err,
            epochs_run: epochs,
            wall_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// Undo each utterance's spectral warp using its own age's default profile
/// (the oracle-warp baseline).
fn normalize_by_age(corpus: &Corpus) -> Result<Corpus> {
    let mut parts = Vec::new();
    for age in corpus.ages() {
        let profile = default_age_profile(age)?;
        parts.push(oracle_warp_normalize(&corpus.filter_age(age), &profile));
    }
    let refs: Vec<&Corpus> = parts.iter().collect();
    Corpus::union(&refs)
}

/// Run a single cell against a fresh lab. Sweeps should use [`run_sweep`],
/// which shares the lab across cells.
pub fn run_experiment(spec: &ExperimentSpec, cell: &Cell) -> Result<ResultRow> {
    let lab = Lab::prepare(spec)?;
    lab.run_cell(cell)
}

fn child_ages() -> Vec<Age> {
    Age::all_children().collect()
}

fn run_cells(lab: &Lab, cells: Vec<Cell>) -> SweepOutput {
    let results: Vec<std::result::Result<ResultRow, CellFailure>> = cells
        .par_iter()
        .map(|cell| {
            lab.run_cell(cell).map_err(|e| CellFailure {
                run_id: cell.run_id(),
                message: e.to_string(),
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(mut row) => {
                // Timing is excluded from sweep output so reruns are
                // byte-identical.
                row.wall_ms = 0;
                rows.push(row);
            }
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    failures.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    SweepOutput { rows, failures }
}

/// Grid sweep: every variant x budget x seed x test age. Budget-free
/// baselines (source, oracle) contribute one row per test age.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    match spec.mode {
        Mode::Grid => {}
        Mode::AgeMatrix => return age_transform_matrix(spec),
        Mode::AgeIndep => return age_independent_modes(spec),
    }
    if spec.variants.is_empty() {
        return Err(Error::config("experiment lists no variants".to_string()));
    }
    let lab = Lab::prepare(spec)?;
    let train_ages = spec.resolved_train_ages();
    let train_label = spec.train_age_label();
    let total = lab.train_corpus(&train_ages).total_frames();

    let mut cells = Vec::new();
    for variant in &spec.variants {
        let trains = variant.trains();
        let budgets: Vec<usize> = if trains {
            spec.budgets.iter().map(|b| b.resolve(total)).collect()
        } else {
            vec![0]
        };
        let seeds: &[u64] = if trains { &spec.seeds } else { &spec.seeds[..1] };
        for &budget in &budgets {
            for &seed in seeds {
                for test_age in &spec.test_ages {
                    cells.push(Cell {
                        variant: variant.clone(),
                        budget_frames: budget,
                        train_ages: train_ages.clone(),
                        train_age_label: train_label.clone(),
                        test_age: test_age.clone(),
                        seed,
                    });
                }
            }
        }
    }
    Ok(run_cells(&lab, cells))
}

/// Transfer variants of the spec (fallback: all layers, simultaneous),
/// used by the age analyses.
fn transfer_variants(spec: &ExperimentSpec) -> Vec<Variant> {
    let transfers: Vec<Variant> = spec
        .variants
        .iter()
        .filter(|v| matches!(v, Variant::Transfer { .. }))
        .cloned()
        .collect();
    if transfers.is_empty() {
        vec![Variant::default_transfer()]
    } else {
        transfers
    }
}

/// Adapt one transform per train age (its full data), evaluate on every
/// test age: the 9x9 portability matrix.
pub fn age_transform_matrix(spec: &ExperimentSpec) -> Result<SweepOutput> {
    let lab = Lab::prepare(spec)?;
    let variant = transfer_variants(spec)[0].clone();
    let mut cells = Vec::new();
    for train_age in child_ages() {
        let budget = lab.train_corpus(&[train_age]).total_frames();
        if budget == 0 {
            return Err(Error::config(format!(
                "no training data for age {train_age}"
            )));
        }
        for &seed in &spec.seeds {
            for test_age in child_ages() {
                cells.push(Cell {
                    variant: variant.clone(),
                    budget_frames: budget,
                    train_ages: vec![train_age],
                    train_age_label: train_age.to_string(),
                    test_age: TestAge::Age(test_age),
                    seed,
                });
            }
        }
    }
    Ok(run_cells(&lab, cells))
}

/// Age-dependent vs age-independent rows, per transfer configuration:
/// full-data age-independent, average and matched budget corrections, and
/// the matched age-dependent curve.
pub fn age_independent_modes(spec: &ExperimentSpec) -> Result<SweepOutput> {
    let lab = Lab::prepare(spec)?;
    let all_children = child_ages();
    let total = lab.train_corpus(&all_children).total_frames();
    let average_budget = total / all_children.len();
    let mut cells = Vec::new();
    for variant in transfer_variants(spec) {
        for &seed in &spec.seeds {
            for test_age in child_ages() {
                let age_frames = lab.train_corpus(&[test_age]).total_frames();
                if age_frames == 0 {
                    return Err(Error::config(format!(
                        "no training data for age {test_age}"
                    )));
                }
                // Full-data age-independent.
                cells.push(Cell {
                    variant: variant.clone(),
                    budget_frames: total,
                    train_ages: all_children.clone(),
                    train_age_label: "all".to_string(),
                    test_age: TestAge::Age(test_age),
                    seed,
                });
                // Average-budget age-independent.
                cells.push(Cell {
                    variant: variant.clone(),
                    budget_frames: average_budget,
                    train_ages: all_children.clone(),
                    train_age_label: "avg-indep".to_string(),
                    test_age: TestAge::Age(test_age),
                    seed,
                });
                // Matched-budget age-independent.
                cells.push(Cell {
                    variant: variant.clone(),
                    budget_frames: age_frames,
                    train_ages: all_children.clone(),
                    train_age_label: "matched-indep".to_string(),
                    test_age: TestAge::Age(test_age),
                    seed,
                });
                // Matched age-dependent.
                cells.push(Cell {
                    variant: variant.clone(),
                    budget_frames: age_frames,
                    train_ages: vec![test_age],
                    train_age_label: test_age.to_string(),
                    test_age: TestAge::Age(test_age),
                    seed,
                });
            }
        }
    }
    Ok(run_cells(&lab, cells))
}

/// Write rows as CSV: header row, comma separators, `.` decimal point, LF
/// line endings, sorted by run id.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(
        "run_id,seed,variant,schedule,budget_frames,train_age_set,test_age,frame_error,epochs_run,wall_ms\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.run_id,
            r.seed,
            r.variant,
            r.schedule,
            r.budget_frames,
            r.train_age_set,
            r.test_age,
            r.frame_error,
            r.epochs_run,
            r.wall_ms
        ));
    }
    out
}

/// Parse the CSV written by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let what = "rows csv";
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(what, "empty file"))?;
    if !header.starts_with("run_id,") {
        return Err(Error::parse(what, "missing header row"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                what,
                format!("line {}: expected 10 fields, got {}", i + 2, fields.len()),
            ));
        }
        let parse_err =
            |what_field: &str| Error::parse(what, format!("line {}: bad {what_field}", i + 2));
        rows.push(ResultRow {
            run_id: fields[0].to_string(),
            seed: fields[1].parse().map_err(|_| parse_err("seed"))?,
            variant: fields[2].to_string(),
            schedule: fields[3].to_string(),
            budget_frames: fields[4].parse().map_err(|_| parse_err("budget"))?,
            train_age_set: fields[5].to_string(),
            test_age: fields[6].to_string(),
            frame_error: fields[7].parse().map_err(|_| parse_err("frame_error"))?,
            epochs_run: fields[8].parse().map_err(|_| parse_err("epochs_run"))?,
            wall_ms: fields[9].parse().map_err(|_| parse_err("wall_ms"))?,
        });
    }
    Ok(rows)
}

/// Median of the given values; panics on empty input.
pub fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

#[cfg(test)]
mod tests;
