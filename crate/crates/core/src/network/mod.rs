//! The acoustic classifier: spliced features plus an utterance i-vector in,
//! per-frame class posteriors out.
//!
//! Affine layers with group p-norm nonlinearities feed a softmax output.
//! Layers are indexed 1..=L from the input side; training updates only the
//! layers named in a trainable mask, which is what the transfer module
//! builds its adaptation schedules out of.

mod format;
pub use format::{load_network, network_from_text, network_to_text, save_network};

use crate::corpus::{Corpus, Utterance};
use crate::error::{Error, Result};
use crate::ivector::{extract_ivector, TvModel};
use crate::rng::{derive, stream, tag};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use std::collections::BTreeSet;

/// Architecture of a fresh network, before any layer-wise growth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arch {
    /// Raw feature dimension D.
    pub feat_dim: usize,
    /// Appended i-vector dimension R (0 when no i-vectors are used).
    pub ivec_dim: usize,
    /// Splice context to the left.
    pub splice_left: usize,
    /// Splice context to the right.
    pub splice_right: usize,
    /// Number of hidden layers.
    pub hidden_layers: usize,
    /// p-norm outputs per hidden layer (H).
    pub hidden_units: usize,
    /// p-norm group size (G).
    pub group: usize,
    /// p-norm exponent.
    pub p: f64,
    /// Output classes K.
    pub classes: usize,
}

impl Arch {
    /// Desk-scale default: 5 hidden layers of 64 p-norm units with group
    /// size 2, splice +-3.
    pub fn desk(feat_dim: usize, ivec_dim: usize, classes: usize) -> Arch {
        Arch {
            feat_dim,
            ivec_dim,
            splice_left: 3,
            splice_right: 3,
            hidden_layers: 5,
            hidden_units: 64,
            group: 2,
            p: 2.0,
            classes,
        }
    }

    /// Total network input dimension: D * (left + right + 1) + R.
    pub fn input_dim(&self) -> usize {
        self.feat_dim * (self.splice_left + self.splice_right + 1) + self.ivec_dim
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_layers < 1 {
            return Err(Error::config("need at least one hidden layer".to_string()));
        }
        if self.group < 1 || self.hidden_units < 1 {
            return Err(Error::config("hidden dimensions must be positive".to_string()));
        }
        if self.p < 1.0 {
            return Err(Error::config(format!("p must be >= 1, got {}", self.p)));
        }
        if self.classes < 2 {
            return Err(Error::config("need at least two classes".to_string()));
        }
        Ok(())
    }
}

/// Group p-norm: `(sum_i |x_i|^p)^(1/p)`.
pub fn p_norm(values: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        values.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// The affine + p-norm stack. `weights[l]` maps layer l's input to its
/// pre-activation (stored input x output); every affine except the last is
/// followed by a group p-norm, the last by softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub feat_dim: usize,
    pub ivec_dim: usize,
    pub splice_left: usize,
    pub splice_right: usize,
    pub group: usize,
    pub p: f64,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Per-layer gradients of the cross-entropy loss.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub d_weights: Vec<Array2<f64>>,
    pub d_biases: Vec<Array1<f64>>,
}

/// Per-epoch record of one training run.
#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    pub heldout_error: Vec<f64>,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// SGD schedule and stopping rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Geometric decay applied per epoch.
    pub lr_decay: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Stop when held-out frame error improves by less than this...
    pub tol_abs: f64,
    /// ...for this many consecutive epochs.
    pub patience: usize,
    /// Epochs per greedy layer-wise stage.
    pub epochs_per_stage: usize,
    /// Fraction of utterances held out for the stopping rule.
    pub heldout_frac: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_initial: 0.04,
            lr_final: 0.004,
            lr_decay: 0.8,
            batch: 64,
            max_epochs: 30,
            tol_abs: 0.001,
            patience: 3,
            epochs_per_stage: 2,
            heldout_frac: 0.1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr_initial >= self.lr_final && self.lr_final > 0.0) {
            return Err(Error::config(
                "learning rates must satisfy initial >= final > 0".to_string(),
            ));
        }
        if self.patience < 1 {
            return Err(Error::config("patience must be >= 1".to_string()));
        }
        if self.batch < 1 || self.max_epochs < 1 {
            return Err(Error::config("batch and max_epochs must be >= 1".to_string()));
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        (self.lr_initial * self.lr_decay.powi(epoch as i32)).max(self.lr_final)
    }
}

/// Splice an utterance with its i-vector: each row is the frame's context
/// block (boundary frames replicated) with the utterance i-vector appended.
pub fn splice(
    utterance: &Utterance,
    ivector: &[f64],
    left: usize,
    right: usize,
) -> Array2<f64> {
    let t_len = utterance.num_frames();
    let d = utterance.frames.ncols();
    let r = ivector.len();
    let width = d * (left + right + 1) + r;
    let mut out = Array2::zeros((t_len, width));
    for t in 0..t_len {
        let mut col = 0;
        for ctx in -(left as isize)..=(right as isize) {
            let src = (t as isize + ctx).clamp(0, t_len as isize - 1) as usize;
            for j in 0..d {
                out[[t, col]] = utterance.frames[[src, j]];
                col += 1;
            }
        }
        for v in ivector {
            out[[t, col]] = *v;
            col += 1;
        }
    }
    out
}

/// Design matrix for a whole corpus: spliced inputs and canonical labels.
/// With `tv = None` a zero-dimensional i-vector is appended.
pub fn build_design(
    corpus: &Corpus,
    tv: Option<&TvModel>,
    left: usize,
    right: usize,
) -> Result<(Array2<f64>, Vec<usize>)> {
    let r = tv.map_or(0, |m| m.r);
    let width = corpus.d * (left + right + 1) + r;
    let total = corpus.total_frames();
    let mut x = Array2::zeros((total, width));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for utt in &corpus.utterances {
        let iv = match tv {
            Some(model) => extract_ivector(model, utt)?.w.to_vec(),
            None => Vec::new(),
        };
        let block = splice(utt, &iv, left, right);
        let t_len = utt.num_frames();
        for t in 0..t_len {
            for c in 0..width {
                x[[row, c]] = block[[t, c]];
            }
            labels.push(utt.labels[t]);
            row += 1;
        }
    }
    Ok((x, labels))
}

struct ForwardCache {
    /// Input to each affine layer (activations of the layer below).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each affine layer.
    pre: Vec<Array2<f64>>,
    /// Softmax posteriors.
    posteriors: Array2<f64>,
}

impl Network {
    /// Seeded Glorot-uniform initialization; biases zero.
    pub fn init(arch: &Arch, seed: u64) -> Result<Network> {
        arch.validate()?;
        let mut dims = vec![arch.input_dim()];
        for _ in 0..arch.hidden_layers {
            dims.push(arch.group * arch.hidden_units);
        }
        dims.push(arch.classes);

        let mut rng = stream(seed, &[tag("net-init")]);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let fan_in = if l == 0 {
                dims[0]
            } else {
                arch.hidden_units
            };
            let fan_out = dims[l + 1];
            let mut w = Array2::zeros((fan_in, fan_out));
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for i in 0..fan_in {
                for j in 0..fan_out {
                    w[[i, j]] = rng.random_range(-bound..bound);
                }
            }
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Network {
            feat_dim: arch.feat_dim,
            ivec_dim: arch.ivec_dim,
            splice_left: arch.splice_left,
            splice_right: arch.splice_right,
            group: arch.group,
            p: arch.p,
            weights,
            biases,
        })
    }

    /// Number of affine layers L (hidden count + output).
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn classes(&self) -> usize {
        self.biases.last().map_or(0, |b| b.len())
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.nrows())
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn hidden_units(&self) -> usize {
        self.weights[0].ncols() / self.group
    }

    /// Insert a fresh penultimate hidden layer (just below the output),
    /// seeded Glorot-uniform.
    pub fn insert_penultimate_hidden(&mut self, seed: u64) {
        let h = self.hidden_units();
        let fan_out = self.group * h;
        let mut rng = stream(seed, &[tag("net-grow")]);
        let bound = (6.0 / (h + fan_out) as f64).sqrt();
        let mut w = Array2::zeros((h, fan_out));
        for i in 0..h {
            for j in 0..fan_out {
                w[[i, j]] = rng.random_range(-bound..bound);
            }
        }
        let pos = self.weights.len() - 1;
        self.weights.insert(pos, w);
        self.biases.insert(pos, Array1::zeros(fan_out));
    }

    /// Group p-norm applied row-wise to a pre-activation block.
    fn activate(&self, z: &Array2<f64>) -> Array2<f64> {
        let rows = z.nrows();
        let groups = z.ncols() / self.group;
        let mut out = Array2::zeros((rows, groups));
        for r in 0..rows {
            for g in 0..groups {
                let start = g * self.group;
                let mut acc = 0.0;
                if self.p == 2.0 {
                    for i in 0..self.group {
                        let v = z[[r, start + i]];
                        acc += v * v;
                    }
                    out[[r, g]] = acc.sqrt();
                } else {
                    for i in 0..self.group {
                        acc += z[[r, start + i]].abs().powf(self.p);
                    }
                    out[[r, g]] = acc.powf(1.0 / self.p);
                }
            }
        }
        out
    }

    fn forward_cached(&self, x: &ArrayView2<f64>) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dimension(format!(
                "input has {} dims, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let depth = self.depth();
        let mut inputs = Vec::with_capacity(depth);
        let mut pre = Vec::with_capacity(depth);
        let mut current = x.to_owned();
        for l in 0..depth {
            inputs.push(current.clone());
            let mut z = current.dot(&self.weights[l]);
            for mut row in z.rows_mut() {
                row += &self.biases[l];
            }
            if l + 1 < depth {
                current = self.activate(&z);
                pre.push(z);
            } else {
                pre.push(z.clone());
                // Softmax with the max subtracted.
                for mut row in z.rows_mut() {
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    row.mapv_inplace(|v| v / sum);
                }
                return Ok(ForwardCache {
                    inputs,
                    pre,
                    posteriors: z,
                });
            }
        }
        unreachable!("network has no layers")
    }

    /// Class posterior for one input; sums to one, all entries positive.
    pub fn forward(&self, input: &ArrayView1<f64>) -> Result<Array1<f64>> {
        let x = input.to_owned().insert_axis(Axis(0));
        let cache = self.forward_cached(&x.view())?;
        Ok(cache.posteriors.row(0).to_owned())
    }

    /// Batched posteriors, one row per input row.
    pub fn forward_batch(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.posteriors)
    }

    /// Cross-entropy loss `-log posterior[label]` for one input.
    pub fn loss(&self, input: &ArrayView1<f64>, label: usize) -> Result<f64> {
        let posterior = self.forward(input)?;
        Ok(-posterior[label].max(1e-300).ln())
    }

    /// d p-norm / d pre-activation, with the all-zero group's subgradient
    /// defined as zero. `upstream` is B x H, `pre` is B x (G*H).
    fn pnorm_backward(
        &self,
        pre: &Array2<f64>,
        activated: &Array2<f64>,
        upstream: &Array2<f64>,
    ) -> Array2<f64> {
        let rows = pre.nrows();
        let groups = activated.ncols();
        let mut out = Array2::zeros((rows, groups * self.group));
        for r in 0..rows {
            for g in 0..groups {
                let y = activated[[r, g]];
                if y == 0.0 {
                    continue;
                }
                let up = upstream[[r, g]];
                let start = g * self.group;
                if self.p == 2.0 {
                    for i in 0..self.group {
                        out[[r, start + i]] = up * pre[[r, start + i]] / y;
                    }
                } else {
                    for i in 0..self.group {
                        let v = pre[[r, start + i]];
                        out[[r, start + i]] =
                            up * v.signum() * v.abs().powf(self.p - 1.0) * y.powf(1.0 - self.p);
                    }
                }
            }
        }
        out
    }

    /// Batched gradients of the summed cross-entropy, restricted to layers
    /// in `mask` (1-based indices). Layers outside the mask get empty
    /// gradient blocks and backpropagation stops below the lowest masked
    /// layer. Returns (gradients, summed loss).
    fn backward_masked(
        &self,
        x: &ArrayView2<f64>,
        labels: &[usize],
        mask: &BTreeSet<usize>,
    ) -> Result<(Gradients, f64)> {
        let depth = self.depth();
        let cache = self.forward_cached(x)?;
        let n = labels.len();
        let lowest = *mask.iter().next().expect("mask is nonempty");

        let mut loss = 0.0;
        let mut dz = cache.posteriors.clone();
        for (row, &label) in labels.iter().enumerate() {
            if label >= self.classes() {
                return Err(Error::config(format!(
                    "label {label} out of range for {} classes",
                    self.classes()
                )));
            }
            loss -= cache.posteriors[[row, label]].max(1e-300).ln();
            dz[[row, label]] -= 1.0;
        }
        let _ = n;

        let mut d_weights = vec![Array2::zeros((0, 0)); depth];
        let mut d_biases = vec![Array1::zeros(0); depth];
        for l in (0..depth).rev() {
            let layer_idx = l + 1;
            if mask.contains(&layer_idx) {
                d_weights[l] = cache.inputs[l].t().dot(&dz);
                d_biases[l] = dz.sum_axis(Axis(0));
            }
            if layer_idx == lowest {
                break;
            }
            // Propagate into the layer below: through this affine, then
            // through the p-norm that produced our input.
            let dx = dz.dot(&self.weights[l].t());
            dz = self.pnorm_backward(&cache.pre[l - 1], &cache.inputs[l], &dx);
        }
        Ok((
            Gradients {
                d_weights,
                d_biases,
            },
            loss,
        ))
    }

    /// Exact gradients of `-log posterior[label]` for a single input, all
    /// layers.
    pub fn backward(&self, input: &ArrayView1<f64>, label: usize) -> Result<Gradients> {
        let x = input.to_owned().insert_axis(Axis(0));
        let mask: BTreeSet<usize> = (1..=self.depth()).collect();
        let (grads, _) = self.backward_masked(&x.view(), &[label], &mask)?;
        Ok(grads)
    }
}

struct Design {
    x: Array2<f64>,
    labels: Vec<usize>,
}

fn heldout_split(
    corpus: &Corpus,
    tv: Option<&TvModel>,
    net: &Network,
    cfg: &TrainConfig,
) -> Result<(Design, Design)> {
    let n_utts = corpus.utterances.len();
    let mut order: Vec<usize> = (0..n_utts).collect();
    let mut rng = stream(cfg.seed, &[tag("heldout")]);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_held = ((n_utts as f64 * cfg.heldout_frac).round() as usize).clamp(1, n_utts - 1);
    let mut held_idx: Vec<usize> = order[..n_held].to_vec();
    let mut train_idx: Vec<usize> = order[n_held..].to_vec();
    held_idx.sort_unstable();
    train_idx.sort_unstable();

    let pick = |idx: &[usize]| Corpus {
        k: corpus.k,
        d: corpus.d,
        utterances: idx.iter().map(|&i| corpus.utterances[i].clone()).collect(),
    };
    let (x_train, y_train) = build_design(&pick(&train_idx), tv, net.splice_left, net.splice_right)?;
    let (x_held, y_held) = build_design(&pick(&held_idx), tv, net.splice_left, net.splice_right)?;
    Ok((
        Design {
            x: x_train,
            labels: y_train,
        },
        Design {
            x: x_held,
            labels: y_held,
        },
    ))
}

fn error_on(net: &Network, design: &Design) -> Result<f64> {
    let mut wrong = 0usize;
    let n = design.labels.len();
    let batch = 1024;
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        let block = design.x.slice(ndarray::s![start..end, ..]);
        let posteriors = net.forward_batch(&block)?;
        for (row, &label) in design.labels[start..end].iter().enumerate() {
            let mut best = 0;
            let mut best_p = f64::NEG_INFINITY;
            for c in 0..posteriors.ncols() {
                if posteriors[[row, c]] > best_p {
                    best_p = posteriors[[row, c]];
                    best = c;
                }
            }
            if best != label {
                wrong += 1;
            }
        }
        start = end;
    }
    Ok(wrong as f64 / n as f64)
}

enum StopRule {
    /// Patience rule on held-out frame error.
    Converge,
    /// Exactly this many epochs (greedy stage training).
    Fixed(usize),
}

/// Minibatch mean gradients are norm-clipped at this value; plain SGD on
/// the deep p-norm stack occasionally meets exploding batches and the clip
/// keeps the run finite without adding an optimizer knob.
const GRAD_CLIP: f64 = 5.0;

fn run_sgd(
    net: &mut Network,
    train: &Design,
    held: &Design,
    cfg: &TrainConfig,
    mask: &BTreeSet<usize>,
    rule: &StopRule,
    shuffle_seed: u64,
) -> Result<TrainTrace> {
    let n = train.labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream(shuffle_seed, &[tag("shuffle")]);
    let mut trace = TrainTrace::default();
    let mut best = f64::INFINITY;
    let mut streak = 0usize;
    let max_epochs = match rule {
        StopRule::Converge => cfg.max_epochs,
        StopRule::Fixed(k) => *k,
    };

    let width = train.x.ncols();
    let mut batch_x = Array2::zeros((cfg.batch, width));
    for epoch in 0..max_epochs {
        let lr = cfg.lr_at(epoch);
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + cfg.batch).min(n);
            let size = end - start;
            let mut labels = Vec::with_capacity(size);
            for (row, &idx) in order[start..end].iter().enumerate() {
                for c in 0..width {
                    batch_x[[row, c]] = train.x[[idx, c]];
                }
                labels.push(train.labels[idx]);
            }
            let view = batch_x.slice(ndarray::s![..size, ..]);
            let (grads, loss) = net.backward_masked(&view, &labels, mask)?;
            loss_sum += loss;
            let mut sq_norm = 0.0;
            for &layer in mask {
                let l = layer - 1;
                sq_norm += grads.d_weights[l].iter().map(|g| g * g).sum::<f64>();
                sq_norm += grads.d_biases[l].iter().map(|g| g * g).sum::<f64>();
            }
            let mean_norm = sq_norm.sqrt() / size as f64;
            let clip = if mean_norm > GRAD_CLIP {
                GRAD_CLIP / mean_norm
            } else {
                1.0
            };
            let scale = clip * lr / size as f64;
            for &layer in mask {
                let l = layer - 1;
                net.weights[l].scaled_add(-scale, &grads.d_weights[l]);
                net.biases[l].scaled_add(-scale, &grads.d_biases[l]);
            }
            start = end;
        }
        trace.train_loss.push(loss_sum / n as f64);
        let err = error_on(net, held)?;
        trace.heldout_error.push(err);

        if matches!(rule, StopRule::Converge) {
            let improvement = best - err;
            if improvement < cfg.tol_abs {
                streak += 1;
            } else {
                streak = 0;
            }
            best = best.min(err);
            if streak >= cfg.patience {
                break;
            }
        }
    }
    Ok(trace)
}

fn check_mask(mask: &BTreeSet<usize>, depth: usize) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::config("trainable mask is empty".to_string()));
    }
    for &layer in mask {
        if layer < 1 || layer > depth {
            return Err(Error::config(format!(
                "mask layer {layer} outside 1..={depth}"
            )));
        }
    }
    Ok(())
}

/// Minibatch SGD that updates only the layers in `trainable_mask`
/// (1-based, 1 = bottom affine). A held-out utterance split drives the
/// patience stopping rule. Deterministic given `cfg.seed`.
pub fn train(
    net: &Network,
    corpus: &Corpus,
    tv: Option<&TvModel>,
    cfg: &TrainConfig,
    trainable_mask: &BTreeSet<usize>,
) -> Result<(Network, TrainTrace)> {
    cfg.validate()?;
    check_mask(trainable_mask, net.depth())?;
    if corpus.utterances.is_empty() {
        return Err(Error::config("training corpus is empty".to_string()));
    }
    if corpus.utterances.len() < 2 {
        return Err(Error::config(
            "training needs at least two utterances (one is held out)".to_string(),
        ));
    }
    let mut out = net.clone();
    let (train_design, held_design) = heldout_split(corpus, tv, net, cfg)?;
    let trace = run_sgd(
        &mut out,
        &train_design,
        &held_design,
        cfg,
        trainable_mask,
        &StopRule::Converge,
        cfg.seed,
    )?;
    Ok((out, trace))
}

/// Supervised greedy layer-wise construction: start from one hidden layer,
/// repeatedly train briefly (`epochs_per_stage`) and insert a fresh
/// penultimate hidden layer until the requested depth, then train to
/// convergence. With a single hidden layer this reduces to plain [`train`].
pub fn pretrain_layerwise(
    corpus: &Corpus,
    tv: Option<&TvModel>,
    arch: &Arch,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<TrainTrace>)> {
    cfg.validate()?;
    arch.validate()?;
    if corpus.utterances.len() < 2 {
        return Err(Error::config(
            "training needs at least two utterances (one is held out)".to_string(),
        ));
    }
    let mut stage_arch = Arch {
        hidden_layers: 1,
        ..*arch
    };
    let mut net = Network::init(&stage_arch, cfg.seed)?;
    let (train_design, held_design) = heldout_split(corpus, tv, &net, cfg)?;
    let mut traces = Vec::new();

    let mut stage = 0usize;
    while stage_arch.hidden_layers < arch.hidden_layers {
        let all: BTreeSet<usize> = (1..=net.depth()).collect();
        let stage_seed = derive(cfg.seed, &[tag("stage"), stage as u64]);
        let trace = run_sgd(
            &mut net,
            &train_design,
            &held_design,
            cfg,
            &all,
            &StopRule::Fixed(cfg.epochs_per_stage),
            stage_seed,
        )?;
        traces.push(trace);
        let grow_seed = derive(cfg.seed, &[tag("grow"), stage as u64]);
        net.insert_penultimate_hidden(grow_seed);
        stage_arch.hidden_layers += 1;
        stage += 1;
    }

    let all: BTreeSet<usize> = (1..=net.depth()).collect();
    let trace = run_sgd(
        &mut net,
        &train_design,
        &held_design,
        cfg,
        &all,
        &StopRule::Converge,
        cfg.seed,
    )?;
    traces.push(trace);
    Ok((net, traces))
}

/// Fraction of frames whose argmax posterior differs from the canonical
/// label.
pub fn frame_error(net: &Network, corpus: &Corpus, tv: Option<&TvModel>) -> Result<f64> {
    if corpus.utterances.is_empty() {
        return Err(Error::config("evaluation corpus is empty".to_string()));
    }
    let (x, labels) = build_design(corpus, tv, net.splice_left, net.splice_right)?;
    error_on(net, &Design { x, labels })
}

#[cfg(test)]
mod tests;
