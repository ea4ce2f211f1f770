use super::*;
use crate::corpus::{Age, ClassInventory, Corpus, Speaker};
use crate::corpus::{sample_utterance, AgeProfile};
use ndarray::{array, Array2};

fn toy_arch() -> Arch {
    Arch {
        feat_dim: 3,
        ivec_dim: 0,
        splice_left: 0,
        splice_right: 0,
        hidden_layers: 2,
        hidden_units: 3,
        group: 2,
        p: 2.0,
        classes: 3,
    }
}

fn utt(id: u32, frames: Array2<f64>, labels: Vec<usize>) -> Utterance {
    Utterance {
        id,
        speaker: id,
        age: Age::Adult,
        frames,
        labels,
        segment_truth: Vec::new(),
    }
}

/// Two well-separated classes along the first feature dimension.
fn separable_corpus(utts: usize, frames_per_utt: usize, noise: f64, seed: u64) -> Corpus {
    let d = 4;
    let mut means = Array2::zeros((2, d));
    for j in 0..d {
        means[[0, j]] = 1.5;
        means[[1, j]] = -1.5;
    }
    let inv = ClassInventory {
        k: 2,
        d,
        means,
        vars: Array2::from_elem((2, d), noise * noise),
        confusion: vec![1, 0],
        transition: array![[0.9, 0.1], [0.1, 0.9]],
        p_loop: 0.9,
    };
    let spk = Speaker {
        id: 0,
        age: Age::Adult,
        offset: vec![0.0; d],
    };
    let utterances = (0..utts)
        .map(|i| {
            let mut u =
                sample_utterance(&inv, &spk, &AgeProfile::adult(), frames_per_utt, seed + i as u64)
                    .unwrap();
            u.id = i as u32;
            u
        })
        .collect();
    Corpus { k: 2, d, utterances }
}

#[test]
fn test_splice_no_context_no_ivector_is_raw() {
    let frames = array![[1.0, 2.0], [3.0, 4.0]];
    let u = utt(0, frames.clone(), vec![0, 1]);
    let out = splice(&u, &[], 0, 0);
    assert_eq!(out, frames);
}

#[test]
fn test_splice_single_frame_replicates_context() {
    let u = utt(0, array![[7.0, -7.0]], vec![0]);
    let out = splice(&u, &[], 3, 3);
    assert_eq!(out.ncols(), 2 * 7);
    for slot in 0..7 {
        assert_eq!(out[[0, slot * 2]], 7.0);
        assert_eq!(out[[0, slot * 2 + 1]], -7.0);
    }
}

#[test]
fn test_splice_dimension_arithmetic() {
    let frames = Array2::zeros((5, 24));
    let u = utt(0, frames, vec![0; 5]);
    let iv = vec![0.0; 8];
    let out = splice(&u, &iv, 3, 3);
    assert_eq!(out.ncols(), 24 * 7 + 8);
    assert_eq!(out.nrows(), 5);
}

#[test]
fn test_splice_preserves_length_and_boundaries() {
    let frames = array![[1.0], [2.0], [3.0]];
    let u = utt(0, frames, vec![0, 0, 0]);
    let out = splice(&u, &[], 1, 1);
    // Row 0: left context replicated from frame 0.
    assert_eq!(out.row(0).to_vec(), vec![1.0, 1.0, 2.0]);
    assert_eq!(out.row(2).to_vec(), vec![2.0, 3.0, 3.0]);
}

#[test]
fn test_p_norm_pythagorean() {
    assert_eq!(p_norm(&[3.0, 4.0], 2.0), 5.0);
    assert!((p_norm(&[1.0, 1.0, 1.0], 3.0) - 3.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn test_forward_zero_net_is_uniform() {
    let mut net = Network::init(&toy_arch(), 1).unwrap();
    for w in &mut net.weights {
        w.fill(0.0);
    }
    let post = net.forward(&array![0.3, -0.5, 1.0].view()).unwrap();
    for &p in post.iter() {
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn test_forward_softmax_normalized_and_positive() {
    let net = Network::init(&toy_arch(), 7).unwrap();
    for scale in [0.01, 1.0, 100.0] {
        let input = array![1.3 * scale, -2.0 * scale, 0.4 * scale];
        let post = net.forward(&input.view()).unwrap();
        let sum: f64 = post.sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(post.iter().all(|&p| p > 0.0));
    }
}

#[test]
fn test_forward_rejects_bad_dimension() {
    let net = Network::init(&toy_arch(), 7).unwrap();
    assert!(net.forward(&array![1.0, 2.0].view()).is_err());
}

#[test]
fn test_loss_at_uniform_is_log_k() {
    let mut net = Network::init(&toy_arch(), 1).unwrap();
    for w in &mut net.weights {
        w.fill(0.0);
    }
    let loss = net.loss(&array![1.0, 2.0, 3.0].view(), 1).unwrap();
    assert!((loss - 3.0_f64.ln()).abs() < 1e-12);
}

#[test]
fn test_gradients_match_finite_differences() {
    let net = Network::init(&toy_arch(), 42).unwrap();
    let input = array![0.8, -1.3, 0.45];
    let label = 2usize;
    let grads = net.backward(&input.view(), label).unwrap();

    let h = 1e-5;
    let mut max_rel = 0.0f64;
    for l in 0..net.depth() {
        for i in 0..net.weights[l].nrows() {
            for j in 0..net.weights[l].ncols() {
                let mut plus = net.clone();
                plus.weights[l][[i, j]] += h;
                let mut minus = net.clone();
                minus.weights[l][[i, j]] -= h;
                let fd = (plus.loss(&input.view(), label).unwrap()
                    - minus.loss(&input.view(), label).unwrap())
                    / (2.0 * h);
                let an = grads.d_weights[l][[i, j]];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
        }
        for j in 0..net.biases[l].len() {
            let mut plus = net.clone();
            plus.biases[l][j] += h;
            let mut minus = net.clone();
            minus.biases[l][j] -= h;
            let fd = (plus.loss(&input.view(), label).unwrap()
                - minus.loss(&input.view(), label).unwrap())
                / (2.0 * h);
            let an = grads.d_biases[l][j];
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
            max_rel = max_rel.max(rel);
        }
    }
    assert!(max_rel < 1e-4, "max relative error {max_rel}");
}

#[test]
fn test_pnorm_zero_group_subgradient_is_zero() {
    let mut net = Network::init(&toy_arch(), 3).unwrap();
    // Zero first layer: all pre-activations and p-norm outputs are zero.
    net.weights[0].fill(0.0);
    net.biases[0].fill(0.0);
    let grads = net.backward(&array![1.0, 1.0, 1.0].view(), 0).unwrap();
    assert!(grads.d_weights[0].iter().all(|&g| g == 0.0));
}

#[test]
fn test_train_rejects_empty_mask_and_empty_corpus() {
    let net = Network::init(&toy_arch(), 1).unwrap();
    let corpus = separable_corpus(6, 30, 0.1, 0);
    let cfg = TrainConfig::default();
    assert!(train(&net, &corpus, None, &cfg, &BTreeSet::new()).is_err());
    let empty = Corpus {
        k: 2,
        d: 4,
        utterances: Vec::new(),
    };
    let all: BTreeSet<usize> = (1..=net.depth()).collect();
    assert!(train(&net, &empty, None, &cfg, &all).is_err());
}

fn separable_arch() -> Arch {
    Arch {
        feat_dim: 4,
        ivec_dim: 0,
        splice_left: 1,
        splice_right: 1,
        hidden_layers: 2,
        hidden_units: 8,
        group: 2,
        p: 2.0,
        classes: 2,
    }
}

#[test]
fn test_train_learns_separable_data() {
    let corpus = separable_corpus(12, 50, 0.3, 7);
    let arch = separable_arch();
    let net = Network::init(&arch, 5).unwrap();
    let cfg = TrainConfig {
        max_epochs: 20,
        seed: 5,
        ..TrainConfig::default()
    };
    let all: BTreeSet<usize> = (1..=net.depth()).collect();
    let (trained, trace) = train(&net, &corpus, None, &cfg, &all).unwrap();
    let held_err = *trace.heldout_error.last().unwrap();
    assert!(held_err < 0.05, "held-out error {held_err}");
    let test = separable_corpus(6, 50, 0.3, 99);
    let err = frame_error(&trained, &test, None).unwrap();
    assert!(err < 0.05, "test error {err}");
}

#[test]
fn test_train_deterministic() {
    let corpus = separable_corpus(8, 40, 0.3, 3);
    let net = Network::init(&separable_arch(), 11).unwrap();
    let cfg = TrainConfig {
        max_epochs: 5,
        seed: 21,
        ..TrainConfig::default()
    };
    let all: BTreeSet<usize> = (1..=net.depth()).collect();
    let (a, trace_a) = train(&net, &corpus, None, &cfg, &all).unwrap();
    let (b, trace_b) = train(&net, &corpus, None, &cfg, &all).unwrap();
    assert_eq!(a, b);
    assert_eq!(trace_a.heldout_error, trace_b.heldout_error);
}

#[test]
fn test_train_masked_layers_bit_identical() {
    let corpus = separable_corpus(8, 40, 0.3, 3);
    let net = Network::init(&separable_arch(), 11).unwrap();
    let cfg = TrainConfig {
        max_epochs: 4,
        seed: 2,
        ..TrainConfig::default()
    };
    let mask = BTreeSet::from([2]);
    let (trained, _) = train(&net, &corpus, None, &cfg, &mask).unwrap();
    for l in [0usize, 2] {
        assert!(trained.weights[l]
            .iter()
            .zip(net.weights[l].iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(trained.biases[l]
            .iter()
            .zip(net.biases[l].iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    // The masked layer moved.
    assert!(trained.weights[1] != net.weights[1]);
}

#[test]
fn test_pretrain_reaches_requested_depth() {
    let corpus = separable_corpus(8, 40, 0.3, 3);
    let arch = Arch {
        hidden_layers: 4,
        ..separable_arch()
    };
    let cfg = TrainConfig {
        max_epochs: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let (net, traces) = pretrain_layerwise(&corpus, None, &arch, &cfg).unwrap();
    assert_eq!(net.depth(), 5); // 4 hidden + output
    assert_eq!(traces.len(), 4); // 3 growth stages + final
}

#[test]
fn test_pretrain_single_hidden_equals_plain_train() {
    let corpus = separable_corpus(8, 40, 0.3, 3);
    let arch = Arch {
        hidden_layers: 1,
        ..separable_arch()
    };
    let cfg = TrainConfig {
        max_epochs: 6,
        seed: 13,
        ..TrainConfig::default()
    };
    let (grown, _) = pretrain_layerwise(&corpus, None, &arch, &cfg).unwrap();
    let init = Network::init(&arch, cfg.seed).unwrap();
    let all: BTreeSet<usize> = (1..=init.depth()).collect();
    let (plain, _) = train(&init, &corpus, None, &cfg, &all).unwrap();
    assert_eq!(grown, plain);
}

/// Hand-built classifier: sign of the first input dimension decides the
/// class, exactly.
fn sign_classifier() -> Network {
    // Hidden layer: one live group computing |x0 + 5| = x0 + 5 on the data
    // range; output layer thresholds it at 5.
    let mut w1 = Array2::zeros((3, 2));
    w1[[0, 0]] = 1.0;
    let b1 = array![5.0, 0.0];
    let mut w2 = Array2::zeros((1, 2));
    w2[[0, 0]] = 1.0;
    w2[[0, 1]] = -1.0;
    let b2 = array![-5.0, 5.0];
    Network {
        feat_dim: 3,
        ivec_dim: 0,
        splice_left: 0,
        splice_right: 0,
        group: 2,
        p: 2.0,
        weights: vec![w1, w2],
        biases: vec![b1, b2],
    }
}

#[test]
fn test_frame_error_zero_for_perfect_classifier() {
    let net = sign_classifier();
    let mut frames = Array2::zeros((40, 3));
    let mut labels = Vec::new();
    for t in 0..40 {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        frames[[t, 0]] = sign * (1.0 + (t % 5) as f64 * 0.3);
        labels.push(if sign > 0.0 { 0 } else { 1 });
    }
    let corpus = Corpus {
        k: 2,
        d: 3,
        utterances: vec![utt(0, frames, labels)],
    };
    let err = frame_error(&net, &corpus, None).unwrap();
    assert_eq!(err, 0.0);
}

#[test]
fn test_frame_error_uniform_posteriors_near_chance() {
    // A zero network always predicts class 0; over uniform random labels
    // the error approaches (K-1)/K.
    let k = 10;
    let arch = Arch {
        feat_dim: 4,
        ivec_dim: 0,
        splice_left: 0,
        splice_right: 0,
        hidden_layers: 1,
        hidden_units: 4,
        group: 2,
        p: 2.0,
        classes: k,
    };
    let mut net = Network::init(&arch, 1).unwrap();
    for w in &mut net.weights {
        w.fill(0.0);
    }
    let mut rng = crate::rng::stream(4, &[crate::rng::tag("chance")]);
    use rand::Rng;
    let n = 4000;
    let frames = Array2::zeros((n, 4));
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let corpus = Corpus {
        k,
        d: 4,
        utterances: vec![utt(0, frames, labels)],
    };
    let err = frame_error(&net, &corpus, None).unwrap();
    let expected = (k - 1) as f64 / k as f64;
    assert!((err - expected).abs() < 0.02, "err {err}");
}

#[test]
fn test_frame_error_invariant_under_monotone_logit_transform() {
    let corpus = separable_corpus(4, 40, 0.5, 17);
    let net = Network::init(&separable_arch(), 23).unwrap();
    let base = frame_error(&net, &corpus, None).unwrap();
    // Scaling the output affine scales logits monotonically.
    let mut scaled = net.clone();
    let last = scaled.depth() - 1;
    scaled.weights[last] *= 3.0;
    scaled.biases[last] *= 3.0;
    assert_eq!(frame_error(&scaled, &corpus, None).unwrap(), base);
}

#[test]
fn test_frame_error_empty_corpus_rejected() {
    let net = Network::init(&toy_arch(), 1).unwrap();
    let empty = Corpus {
        k: 3,
        d: 3,
        utterances: Vec::new(),
    };
    assert!(frame_error(&net, &empty, None).is_err());
}

#[test]
fn test_network_text_round_trip() {
    let net = Network::init(&separable_arch(), 77).unwrap();
    let text = network_to_text(&net);
    let back = network_from_text(&text).unwrap();
    assert_eq!(back, net);
    assert_eq!(network_to_text(&back), text);
}

#[test]
fn test_insert_penultimate_keeps_output_layer() {
    let mut net = Network::init(&separable_arch(), 5).unwrap();
    let out_w = net.weights.last().unwrap().clone();
    let depth = net.depth();
    net.insert_penultimate_hidden(3);
    assert_eq!(net.depth(), depth + 1);
    assert_eq!(net.weights.last().unwrap(), &out_w);
}
