use super::{corpus_from_text, corpus_to_text};
use super::*;
use ndarray::Array2;

fn tiny_inventory(k: usize, d: usize, var: f64, p_loop: f64) -> ClassInventory {
    let mut means = Array2::zeros((k, d));
    for c in 0..k {
        for j in 0..d {
            means[[c, j]] = (c * d + j) as f64 * 0.37 - 1.5;
        }
    }
    let vars = Array2::from_elem((k, d), var);
    let confusion = (0..k).map(|c| (c + 1) % k).collect();
    let off = (1.0 - p_loop) / (k - 1) as f64;
    let mut transition = Array2::from_elem((k, k), off);
    for c in 0..k {
        transition[[c, c]] = p_loop;
    }
    ClassInventory {
        k,
        d,
        means,
        vars,
        confusion,
        transition,
        p_loop,
    }
}

#[test]
fn test_inventory_k2_transition_forced() {
    let inv = build_inventory(7, 2, 4, 0.9).unwrap();
    for (a, b) in [(0, 0), (1, 1)] {
        assert!((inv.transition[[a, b]] - 0.9).abs() < 1e-12);
    }
    for (a, b) in [(0, 1), (1, 0)] {
        assert!((inv.transition[[a, b]] - 0.1).abs() < 1e-12);
    }
}

#[test]
fn test_inventory_deterministic() {
    let a = build_inventory(7, 5, 6, 0.8).unwrap();
    let b = build_inventory(7, 5, 6, 0.8).unwrap();
    assert_eq!(a.means, b.means);
    assert_eq!(a.vars, b.vars);
    assert_eq!(a.confusion, b.confusion);
}

#[test]
fn test_inventory_confusion_is_nearest_mean() {
    // Independent brute force over all pairs, ties to the lower index.
    let inv = build_inventory(7, 9, 6, 0.9).unwrap();
    for c in 0..inv.k {
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for other in 0..inv.k {
            if other == c {
                continue;
            }
            let dist = inv
                .means
                .row(c)
                .iter()
                .zip(inv.means.row(other).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist < best_dist {
                best_dist = dist;
                best = other;
            }
        }
        assert_eq!(inv.confusion[c], best, "class {c}");
        assert_ne!(inv.confusion[c], c, "confusion must be fixed-point-free");
    }
}

#[test]
fn test_inventory_rows_stochastic() {
    let inv = build_inventory(3, 11, 8, 0.7).unwrap();
    for c in 0..inv.k {
        let sum: f64 = inv.transition.row(c).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    assert!(inv.vars.iter().all(|&v| v > 0.0));
}

#[test]
fn test_inventory_rejects_bad_dims() {
    assert!(build_inventory(1, 1, 6, 0.9).is_err());
    assert!(build_inventory(1, 4, 3, 0.9).is_err());
    assert!(build_inventory(1, 4, 6, 1.0).is_err());
    assert!(build_inventory(1, 4, 6, 0.0).is_err());
}

#[test]
fn test_profile_adult_identity() {
    let p = default_age_profile(Age::Adult).unwrap();
    assert_eq!((p.alpha, p.gamma, p.epsilon), (1.0, 1.0, 0.0));
}

#[test]
fn test_profile_age6() {
    let p = default_age_profile(Age::Child(6)).unwrap();
    assert!((p.alpha - 1.4).abs() < 1e-12);
    assert!((p.gamma - 2.0).abs() < 1e-12);
    assert!((p.epsilon - 0.12).abs() < 1e-12);
}

#[test]
fn test_profile_epsilon_band_ratio() {
    let e9 = default_age_profile(Age::Child(9)).unwrap().epsilon;
    let e12 = default_age_profile(Age::Child(12)).unwrap().epsilon;
    assert!((e9 / e12 - 2.0).abs() < 1e-12);
}

#[test]
fn test_profile_monotone_in_age() {
    let mut prev = default_age_profile(Age::Child(6)).unwrap();
    for a in 7..=14 {
        let p = default_age_profile(Age::Child(a)).unwrap();
        assert!(p.alpha <= prev.alpha);
        assert!(p.gamma <= prev.gamma);
        assert!(p.epsilon <= prev.epsilon);
        prev = p;
    }
}

#[test]
fn test_profile_rejects_out_of_range() {
    assert!(Age::child(5).is_err());
    assert!(Age::child(15).is_err());
}

#[test]
fn test_warp_identity() {
    let frame = [0.3, -1.2, 4.5, 0.0, 2.2];
    let out = warp_features(&frame, 1.0).unwrap();
    assert_eq!(out, frame.to_vec());
}

#[test]
fn test_warp_hand_computed() {
    let out = warp_features(&[0.0, 1.0, 2.0, 3.0], 2.0).unwrap();
    assert_eq!(out, vec![0.0, 0.5, 1.0, 1.5]);
}

#[test]
fn test_warp_constant_frame() {
    let out = warp_features(&[2.5; 6], 1.37).unwrap();
    assert!(out.iter().all(|&v| (v - 2.5).abs() < 1e-12));
}

#[test]
fn test_warp_rejects_compression() {
    assert!(warp_features(&[0.0; 4], 0.9).is_err());
}

#[test]
fn test_sample_no_mispronunciation_when_epsilon_zero() {
    let inv = tiny_inventory(4, 4, 1.0, 0.8);
    let spk = Speaker {
        id: 0,
        age: Age::Adult,
        offset: vec![0.0; 4],
    };
    let profile = AgeProfile::adult();
    let utt = sample_utterance(&inv, &spk, &profile, 400, 11).unwrap();
    assert!(utt.segment_truth.iter().all(|&(c, r)| c == r));
    assert_eq!(utt.labels.len(), 400);
    assert_eq!(utt.frames.nrows(), 400);
}

#[test]
fn test_sample_degenerate_noise_hits_means() {
    let inv = tiny_inventory(3, 5, 1e-18, 0.8);
    let spk = Speaker {
        id: 0,
        age: Age::Adult,
        offset: vec![0.0; 5],
    };
    let utt = sample_utterance(&inv, &spk, &AgeProfile::adult(), 50, 3).unwrap();
    for t in 0..50 {
        let c = utt.labels[t];
        for j in 0..5 {
            assert!((utt.frames[[t, j]] - inv.means[[c, j]]).abs() < 1e-6);
        }
    }
}

#[test]
fn test_sample_empirical_mispronunciation_rate() {
    let inv = tiny_inventory(5, 4, 1.0, 0.9);
    let spk = Speaker {
        id: 0,
        age: Age::Child(9),
        offset: vec![0.0; 4],
    };
    let profile = AgeProfile {
        age: Age::Child(9),
        alpha: 1.0,
        gamma: 1.0,
        epsilon: 0.1,
        spk_scale: 0.0,
    };
    let mut segments = 0usize;
    let mut flipped = 0usize;
    let mut seed = 0;
    while segments < 10_000 {
        let utt = sample_utterance(&inv, &spk, &profile, 500, seed).unwrap();
        for &(c, r) in &utt.segment_truth {
            segments += 1;
            if c != r {
                flipped += 1;
            }
        }
        seed += 1;
    }
    let rate = flipped as f64 / segments as f64;
    assert!((rate - 0.10).abs() <= 0.01, "rate {rate}");
}

#[test]
fn test_labels_change_only_at_segment_boundaries() {
    let inv = tiny_inventory(4, 4, 1.0, 0.85);
    let spk = Speaker {
        id: 0,
        age: Age::Adult,
        offset: vec![0.0; 4],
    };
    let utt = sample_utterance(&inv, &spk, &AgeProfile::adult(), 300, 5).unwrap();
    let boundary_count = 1 + utt.labels.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(boundary_count, utt.segment_truth.len());
}

#[test]
fn test_generate_adult_only() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult],
        speakers_per_age: vec![2],
        utts_per_speaker: 3,
        frames_per_utt: 40,
        test_speakers_per_age: vec![1],
        test_utts_per_speaker: 2,
        ..CorpusSpec::default()
    };
    let pair = generate_corpus(&spec).unwrap();
    assert!(pair.train.ages().iter().all(|a| a.is_adult()));
    assert_eq!(pair.train.utterances.len(), 6);
    assert_eq!(pair.test.utterances.len(), 2);
}

#[test]
fn test_generate_deterministic_bytes() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult, Age::Child(8)],
        speakers_per_age: vec![2],
        utts_per_speaker: 2,
        frames_per_utt: 30,
        ..CorpusSpec::default()
    };
    let a = generate_corpus(&spec).unwrap();
    let b = generate_corpus(&spec).unwrap();
    assert_eq!(corpus_to_text(&a.train), corpus_to_text(&b.train));
    assert_eq!(corpus_to_text(&a.test), corpus_to_text(&b.test));
}

#[test]
fn test_generate_duration_arithmetic() {
    // 10 speakers x 30 utterances x 200 frames per age over 6..=14
    // = 9 * 10 * 30 * 200 frames = 90 minutes at 100 fps.
    let spec = CorpusSpec {
        ages: Age::all_children().collect(),
        speakers_per_age: vec![10],
        utts_per_speaker: 30,
        frames_per_utt: 200,
        test_speakers_per_age: vec![1],
        test_utts_per_speaker: 1,
        k: 6,
        d: 4,
        ..CorpusSpec::default()
    };
    let pair = generate_corpus(&spec).unwrap();
    assert_eq!(pair.train.total_frames(), 540_000);
    assert!((pair.train.duration_minutes() - 90.0).abs() < 1e-9);
}

#[test]
fn test_generate_disjoint_pools_across_ages() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult, Age::Child(6), Age::Child(7)],
        speakers_per_age: vec![2],
        utts_per_speaker: 1,
        frames_per_utt: 10,
        test_speakers_per_age: vec![1],
        ..CorpusSpec::default()
    };
    let pair = generate_corpus(&spec).unwrap();
    pair.validate().unwrap();
    let mut per_age_ids: Vec<BTreeSet<u32>> = Vec::new();
    for &age in &spec.ages {
        per_age_ids.push(pair.train.filter_age(age).speaker_ids());
    }
    for i in 0..per_age_ids.len() {
        for j in i + 1..per_age_ids.len() {
            assert!(per_age_ids[i].is_disjoint(&per_age_ids[j]));
        }
    }
}

#[test]
fn test_pair_overlap_rejected() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult],
        speakers_per_age: vec![1],
        utts_per_speaker: 1,
        frames_per_utt: 5,
        test_speakers_per_age: vec![1],
        ..CorpusSpec::default()
    };
    let pair = generate_corpus(&spec).unwrap();
    let bad = CorpusPair {
        train: pair.train.clone(),
        test: pair.train.clone(),
    };
    assert!(bad.validate().is_err());
}

#[test]
fn test_filter_union_round_trip() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult, Age::Child(6), Age::Child(14)],
        speakers_per_age: vec![2],
        utts_per_speaker: 2,
        frames_per_utt: 12,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap().train;
    let parts: Vec<Corpus> = spec.ages.iter().map(|&a| corpus.filter_age(a)).collect();
    let refs: Vec<&Corpus> = parts.iter().collect();
    let rebuilt = Corpus::union(&refs).unwrap();
    assert_eq!(corpus_to_text(&rebuilt), corpus_to_text(&corpus));
}

#[test]
fn test_identity_profile_matches_source_generator() {
    // The child pipeline with an identity profile must consume the seeded
    // generator exactly like the adult pipeline.
    let child_spec = CorpusSpec {
        ages: vec![Age::Child(9)],
        speakers_per_age: vec![2],
        utts_per_speaker: 2,
        frames_per_utt: 25,
        ..CorpusSpec::default()
    };
    let adult_spec = CorpusSpec {
        ages: vec![Age::Adult],
        ..child_spec.clone()
    };
    let identity = |age: Age| {
        Ok(AgeProfile {
            age,
            ..AgeProfile::adult()
        })
    };
    let child = generate_corpus_with(&child_spec, &identity).unwrap().train;
    let adult = generate_corpus(&adult_spec).unwrap().train;
    assert_eq!(child.utterances.len(), adult.utterances.len());
    for (c, a) in child.utterances.iter().zip(adult.utterances.iter()) {
        assert_eq!(c.labels, a.labels);
        assert_eq!(c.frames, a.frames);
    }
}

#[test]
fn test_monotone_feature_shift_over_age() {
    let spec = CorpusSpec {
        ages: std::iter::once(Age::Adult)
            .chain(Age::all_children())
            .collect(),
        speakers_per_age: vec![3],
        utts_per_speaker: 4,
        frames_per_utt: 100,
        spk_scale: 0.2,
        test_speakers_per_age: vec![1],
        test_utts_per_speaker: 1,
        ..CorpusSpec::default()
    };
    let inv = build_inventory(spec.seed, spec.k, spec.d, spec.p_loop).unwrap();
    let corpus = generate_corpus(&spec).unwrap().train;

    let dist_for = |age: Age| -> f64 {
        let sub = corpus.filter_age(age);
        let mut sums = Array2::<f64>::zeros((spec.k, spec.d));
        let mut counts = vec![0usize; spec.k];
        for utt in &sub.utterances {
            for t in 0..utt.num_frames() {
                let c = utt.labels[t];
                counts[c] += 1;
                for j in 0..spec.d {
                    sums[[c, j]] += utt.frames[[t, j]];
                }
            }
        }
        let mut total = 0.0;
        let mut weight = 0usize;
        for c in 0..spec.k {
            if counts[c] < 20 {
                continue;
            }
            let mut sq = 0.0;
            for j in 0..spec.d {
                let diff = sums[[c, j]] / counts[c] as f64 - inv.means[[c, j]];
                sq += diff * diff;
            }
            total += sq.sqrt() * counts[c] as f64;
            weight += counts[c];
        }
        total / weight as f64
    };

    // Ages 6..14 then adult: distance to the adult class means should be
    // non-increasing in at least 7 of the 9 adjacent steps.
    let mut dists: Vec<f64> = Age::all_children().map(dist_for).collect();
    dists.push(dist_for(Age::Adult));
    let monotone_steps = dists.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(monotone_steps >= 7, "steps {monotone_steps}, dists {dists:?}");
}

#[test]
fn test_label_noise_isolation() {
    // With alpha = gamma = 1 and epsilon > 0, features conditioned on the
    // realized class match the adult generator: the scaled squared mean
    // deviation is chi-square(d) distributed, kept within 3 sigma.
    let inv = build_inventory(5, 8, 12, 0.9).unwrap();
    let spk = Speaker {
        id: 0,
        age: Age::Child(7),
        offset: vec![0.0; 12],
    };
    let profile = AgeProfile {
        age: Age::Child(7),
        alpha: 1.0,
        gamma: 1.0,
        epsilon: 0.3,
        spk_scale: 0.0,
    };
    let mut sums = Array2::<f64>::zeros((8, 12));
    let mut counts = vec![0usize; 8];
    for seed in 0..40 {
        let utt = sample_utterance(&inv, &spk, &profile, 400, seed).unwrap();
        let mut seg = 0;
        for t in 0..utt.num_frames() {
            if t > 0 && utt.labels[t] != utt.labels[t - 1] {
                seg += 1;
            }
            let (_, realized) = utt.segment_truth[seg];
            counts[realized] += 1;
            for j in 0..12 {
                sums[[realized, j]] += utt.frames[[t, j]];
            }
        }
    }
    for c in 0..8 {
        if counts[c] < 200 {
            continue;
        }
        let n = counts[c] as f64;
        let mut stat = 0.0;
        for j in 0..12 {
            let diff = sums[[c, j]] / n - inv.means[[c, j]];
            stat += diff * diff * n / inv.vars[[c, j]];
        }
        let bound = 12.0 + 3.0 * (2.0 * 12.0_f64).sqrt();
        assert!(stat <= bound, "class {c}: stat {stat} > {bound}");
    }
}

#[test]
fn test_subsample_full_budget_is_identity() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult, Age::Child(10)],
        speakers_per_age: vec![2],
        utts_per_speaker: 3,
        frames_per_utt: 20,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap().train;
    let sub = subsample_budget(&corpus, corpus.total_frames(), 99).unwrap();
    assert_eq!(corpus_to_text(&sub), corpus_to_text(&corpus));
}

#[test]
fn test_subsample_deterministic_and_bounded() {
    let spec = CorpusSpec {
        ages: vec![Age::Child(8)],
        speakers_per_age: vec![3],
        utts_per_speaker: 10,
        frames_per_utt: 50,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap().train;
    let a = subsample_budget(&corpus, 420, 5).unwrap();
    let b = subsample_budget(&corpus, 420, 5).unwrap();
    assert_eq!(corpus_to_text(&a), corpus_to_text(&b));
    // Whole utterances until the budget is crossed.
    assert!(a.total_frames() >= 420);
    assert!(a.total_frames() < 420 + 50);
    assert!(subsample_budget(&corpus, 0, 5).is_err());
    assert!(subsample_budget(&corpus, corpus.total_frames() + 1, 5).is_err());
}

#[test]
fn test_subsample_35_minute_condition() {
    // A budget of 210,000 frames is the 35-minute condition at 100 fps.
    let spec = CorpusSpec {
        ages: Age::all_children().collect(),
        speakers_per_age: vec![5],
        utts_per_speaker: 30,
        frames_per_utt: 200,
        test_speakers_per_age: vec![1],
        test_utts_per_speaker: 1,
        k: 4,
        d: 4,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap().train;
    assert_eq!(corpus.total_frames(), 270_000);
    let sub = subsample_budget(&corpus, 210_000, 1).unwrap();
    assert!((sub.duration_minutes() - 35.0).abs() < 1e-9);
}

#[test]
fn test_corpus_text_round_trip() {
    let spec = CorpusSpec {
        ages: vec![Age::Adult, Age::Child(6)],
        speakers_per_age: vec![1],
        utts_per_speaker: 2,
        frames_per_utt: 7,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap().train;
    let text = corpus_to_text(&corpus);
    let back = corpus_from_text(&text).unwrap();
    assert_eq!(corpus_to_text(&back), text);
    assert_eq!(back.utterances.len(), corpus.utterances.len());
    for (a, b) in back.utterances.iter().zip(corpus.utterances.iter()) {
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.age, b.age);
    }
}

#[test]
fn test_spec_text_round_trip() {
    let spec = CorpusSpec::default();
    let parsed = CorpusSpec::parse(&spec.to_text()).unwrap();
    assert_eq!(parsed, spec);
    assert!(CorpusSpec::parse("bogus_key=1\n").is_err());
}
