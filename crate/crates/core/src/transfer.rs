//! Layer-selective adaptation of an adult-trained network to child data.
//!
//! A freeze-mask configuration names which layers may move; a schedule says
//! whether they move together (simultaneous) or in alternating phases, each
//! trained to convergence with everything else frozen (disjoint). Layers
//! are indexed 1..=L from the input side.

use crate::corpus::{resample, subsample_budget, AgeProfile, Corpus, Utterance};
use crate::error::{Error, Result};
use crate::ivector::TvModel;
use crate::network::{train, Network, TrainConfig, TrainTrace};
use crate::rng::{derive, tag};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Which layers adapt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptConfig {
    /// The k bottom-most layers (input side): acoustic variability.
    BottomK(usize),
    /// The k top-most layers (output side): pronunciation variability.
    TopK(usize),
    /// n layers split evenly between bottom and top.
    SymmetricTotal(usize),
    All,
}

impl fmt::Display for AdaptConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptConfig::BottomK(k) => write!(f, "bottom:{k}"),
            AdaptConfig::TopK(k) => write!(f, "top:{k}"),
            AdaptConfig::SymmetricTotal(n) => write!(f, "sym:{n}"),
            AdaptConfig::All => write!(f, "all"),
        }
    }
}

impl FromStr for AdaptConfig {
    type Err = Error;

    /// Grammar: `bottom:k`, `top:k`, `sym:n`, `all`.
    fn from_str(s: &str) -> Result<AdaptConfig> {
        if s == "all" {
            return Ok(AdaptConfig::All);
        }
        let (kind, num) = s
            .split_once(':')
            .ok_or_else(|| Error::parse("adapt config", format!("bad config `{s}`")))?;
        let value: usize = num
            .parse()
            .map_err(|_| Error::parse("adapt config", format!("bad layer count in `{s}`")))?;
        match kind {
            "bottom" => Ok(AdaptConfig::BottomK(value)),
            "top" => Ok(AdaptConfig::TopK(value)),
            "sym" => Ok(AdaptConfig::SymmetricTotal(value)),
            _ => Err(Error::parse("adapt config", format!("unknown config `{s}`"))),
        }
    }
}

/// Layer-index set for a configuration at depth `depth`.
pub fn mask_from_config(depth: usize, config: &AdaptConfig) -> Result<BTreeSet<usize>> {
    match *config {
        AdaptConfig::BottomK(k) => {
            if k < 1 || k > depth {
                return Err(Error::config(format!(
                    "bottom:{k} invalid for depth {depth}"
                )));
            }
            Ok((1..=k).collect())
        }
        AdaptConfig::TopK(k) => {
            if k < 1 || k > depth {
                return Err(Error::config(format!("top:{k} invalid for depth {depth}")));
            }
            Ok((depth - k + 1..=depth).collect())
        }
        AdaptConfig::SymmetricTotal(n) => {
            if n == 0 || n % 2 != 0 {
                return Err(Error::config(format!(
                    "sym:{n} must adapt an even, positive number of layers"
                )));
            }
            if n / 2 > depth / 2 {
                return Err(Error::config(format!("sym:{n} invalid for depth {depth}")));
            }
            let half = n / 2;
            Ok((1..=half).chain(depth - half + 1..=depth).collect())
        }
        AdaptConfig::All => Ok((1..=depth).collect()),
    }
}

/// Adaptation schedule: one simultaneous pass, or ordered phases repeated
/// for `outer_rounds`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    Simultaneous,
    Disjoint {
        phases: Vec<BTreeSet<usize>>,
        outer_rounds: usize,
    },
}

/// Depth-independent schedule grammar: `sim`, `disjoint-sym:n:rounds`,
/// `disjoint-alt:n:rounds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleSpec {
    Sim,
    DisjointSym { n: usize, rounds: usize },
    DisjointAlt { n: usize, rounds: usize },
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Sim => write!(f, "sim"),
            ScheduleSpec::DisjointSym { n, rounds } => write!(f, "disjoint-sym:{n}:{rounds}"),
            ScheduleSpec::DisjointAlt { n, rounds } => write!(f, "disjoint-alt:{n}:{rounds}"),
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<ScheduleSpec> {
        if s == "sim" {
            return Ok(ScheduleSpec::Sim);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::parse("schedule", format!("bad schedule `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: usize = parts[1].parse().map_err(|_| bad())?;
        let rounds: usize = parts[2].parse().map_err(|_| bad())?;
        match parts[0] {
            "disjoint-sym" => Ok(ScheduleSpec::DisjointSym { n, rounds }),
            "disjoint-alt" => Ok(ScheduleSpec::DisjointAlt { n, rounds }),
            _ => Err(bad()),
        }
    }
}

impl ScheduleSpec {
    /// Materialize the phase sets for a network of depth `depth`.
    ///
    /// `disjoint-sym:n` pairs layers inward: {1, L}, {2, L-1}, ...;
    /// `disjoint-alt:n` alternates the bottom set and the top set, bottom
    /// first by default.
    pub fn resolve(&self, depth: usize) -> Result<Schedule> {
        self.resolve_ordered(depth, true)
    }

    /// As [`resolve`](Self::resolve), with the alternating preset's phase
    /// order selectable.
    pub fn resolve_ordered(&self, depth: usize, bottom_first: bool) -> Result<Schedule> {
        match *self {
            ScheduleSpec::Sim => Ok(Schedule::Simultaneous),
            ScheduleSpec::DisjointSym { n, rounds } => {
                let mask = mask_from_config(depth, &AdaptConfig::SymmetricTotal(n))?;
                let _ = mask;
                if rounds < 1 {
                    return Err(Error::config("outer_rounds must be >= 1".to_string()));
                }
                let phases = (0..n / 2)
                    .map(|i| BTreeSet::from([1 + i, depth - i]))
                    .collect();
                Ok(Schedule::Disjoint {
                    phases,
                    outer_rounds: rounds,
                })
            }
            ScheduleSpec::DisjointAlt { n, rounds } => {
                let mask = mask_from_config(depth, &AdaptConfig::SymmetricTotal(n))?;
                let _ = mask;
                if rounds < 1 {
                    return Err(Error::config("outer_rounds must be >= 1".to_string()));
                }
                let half = n / 2;
                let bottom: BTreeSet<usize> = (1..=half).collect();
                let top: BTreeSet<usize> = (depth - half + 1..=depth).collect();
                let phases = if bottom_first {
                    vec![bottom, top]
                } else {
                    vec![top, bottom]
                };
                Ok(Schedule::Disjoint {
                    phases,
                    outer_rounds: rounds,
                })
            }
        }
    }
}

/// Everything needed to reproduce an adaptation run.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub source_id: String,
    pub config: AdaptConfig,
    pub schedule: Schedule,
    pub budget_requested: usize,
    pub train_cfg: TrainConfig,
}

/// Outcome of one adaptation run.
#[derive(Clone, Debug)]
pub struct AdaptResult {
    pub network: Network,
    pub phase_traces: Vec<TrainTrace>,
    /// Frames actually used (whole-utterance rounding may exceed the
    /// request).
    pub budget_frames: usize,
    pub provenance: Provenance,
}

impl AdaptResult {
    pub fn epochs_run(&self) -> usize {
        self.phase_traces.iter().map(TrainTrace::epochs).sum()
    }
}

fn layers_bit_identical(a: &Network, b: &Network, layers: &BTreeSet<usize>) -> bool {
    for &layer in layers {
        let l = layer - 1;
        let same_w = a.weights[l]
            .iter()
            .zip(b.weights[l].iter())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        let same_b = a.biases[l]
            .iter()
            .zip(b.biases[l].iter())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        if !same_w || !same_b {
            return false;
        }
    }
    true
}

fn frozen_complement(depth: usize, active: &BTreeSet<usize>) -> BTreeSet<usize> {
    (1..=depth).filter(|l| !active.contains(l)).collect()
}

/// Adapt `source_net` on a budget-subsampled child corpus.
///
/// The budget is drawn once per run (seeded from `cfg.seed`), so disjoint
/// phases see identical data. Frozen layers are verified bit-identical to
/// the source after every phase.
pub fn adapt(
    source_net: &Network,
    child_corpus: &Corpus,
    tv: Option<&TvModel>,
    config: &AdaptConfig,
    schedule: &Schedule,
    cfg: &TrainConfig,
    budget: usize,
) -> Result<AdaptResult> {
    let subsample_seed = derive(cfg.seed, &[tag("budget")]);
    let sub = subsample_budget(child_corpus, budget, subsample_seed)?;
    let budget_frames = sub.total_frames();
    let provenance = Provenance {
        source_id: format!("net-{}p", source_net.param_count()),
        config: *config,
        schedule: schedule.clone(),
        budget_requested: budget,
        train_cfg: *cfg,
    };

    match schedule {
        Schedule::Simultaneous => {
            let mask = mask_from_config(source_net.depth(), config)?;
            let (net, trace) = train(source_net, &sub, tv, cfg, &mask)?;
            let frozen = frozen_complement(source_net.depth(), &mask);
            if !layers_bit_identical(source_net, &net, &frozen) {
                return Err(Error::Internal(
                    "frozen layers changed during simultaneous adaptation".to_string(),
                ));
            }
            Ok(AdaptResult {
                network: net,
                phase_traces: vec![trace],
                budget_frames,
                provenance,
            })
        }
        Schedule::Disjoint {
            phases,
            outer_rounds,
        } => {
            let (net, traces) =
                run_phases(source_net, &sub, tv, phases, *outer_rounds, cfg)?;
            Ok(AdaptResult {
                network: net,
                phase_traces: traces,
                budget_frames,
                provenance,
            })
        }
    }
}

fn run_phases(
    source_net: &Network,
    data: &Corpus,
    tv: Option<&TvModel>,
    phases: &[BTreeSet<usize>],
    outer_rounds: usize,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<TrainTrace>)> {
    if phases.is_empty() {
        return Err(Error::config("disjoint schedule has no phases".to_string()));
    }
    if outer_rounds < 1 {
        return Err(Error::config("outer_rounds must be >= 1".to_string()));
    }
    let depth = source_net.depth();
    let mut net = source_net.clone();
    let mut traces = Vec::new();
    for _ in 0..outer_rounds {
        for phase in phases {
            let before = net.clone();
            let (next, trace) = train(&net, data, tv, cfg, phase)?;
            let frozen = frozen_complement(depth, phase);
            if !layers_bit_identical(&before, &next, &frozen) {
                return Err(Error::Internal(
                    "frozen layers changed during a disjoint phase".to_string(),
                ));
            }
            net = next;
            traces.push(trace);
        }
    }
    Ok((net, traces))
}

/// Train phases in order, each to its convergence criterion with all other
/// layers frozen, repeated `outer_rounds` times. A single full-mask phase
/// is definitionally the simultaneous schedule.
pub fn disjoint_adapt(
    source_net: &Network,
    child_corpus: &Corpus,
    tv: Option<&TvModel>,
    phases: &[BTreeSet<usize>],
    outer_rounds: usize,
    cfg: &TrainConfig,
    budget: usize,
) -> Result<AdaptResult> {
    let schedule = Schedule::Disjoint {
        phases: phases.to_vec(),
        outer_rounds,
    };
    // Reuse adapt's budget derivation so the two entry points agree.
    let config = AdaptConfig::All;
    let subsample_seed = derive(cfg.seed, &[tag("budget")]);
    let sub = subsample_budget(child_corpus, budget, subsample_seed)?;
    let budget_frames = sub.total_frames();
    let (net, traces) = run_phases(source_net, &sub, tv, phases, outer_rounds, cfg)?;
    Ok(AdaptResult {
        network: net,
        phase_traces: traces,
        budget_frames,
        provenance: Provenance {
            source_id: format!("net-{}p", source_net.param_count()),
            config,
            schedule,
            budget_requested: budget,
            train_cfg: *cfg,
        },
    })
}

/// Undo the known spectral warp of a synthetic child corpus: each frame is
/// resampled at `j * alpha` (clamped), the inverse of the generator's
/// compression. Variance inflation and label noise remain.
pub fn oracle_warp_normalize(child_corpus: &Corpus, profile: &AgeProfile) -> Corpus {
    let utterances = child_corpus
        .utterances
        .iter()
        .map(|utt| {
            let t_len = utt.num_frames();
            let d = utt.frames.ncols();
            let mut frames = ndarray::Array2::zeros((t_len, d));
            let mut row = vec![0.0; d];
            for t in 0..t_len {
                for j in 0..d {
                    row[j] = utt.frames[[t, j]];
                }
                let fixed = resample(&row, profile.alpha);
                for j in 0..d {
                    frames[[t, j]] = fixed[j];
                }
            }
            Utterance {
                frames,
                ..utt.clone()
            }
        })
        .collect();
    Corpus {
        k: child_corpus.k,
        d: child_corpus.d,
        utterances,
    }
}
