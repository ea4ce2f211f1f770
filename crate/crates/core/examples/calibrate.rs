use adaptlab::corpus::*;
use adaptlab::ivector::*;
use adaptlab::network::*;
use adaptlab::transfer::*;
use std::time::Instant;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct World {
    pair: CorpusPair,
    tv: TvModel,
    source: Network,
}

fn build_world(spec: &CorpusSpec, profile: Option<&dyn Fn(Age) -> adaptlab::Result<AgeProfile>>) -> World {
    let pair = match profile {
        Some(pf) => generate_corpus_with(spec, pf).unwrap(),
        None => generate_corpus(spec).unwrap(),
    };
    let adult_train = pair.train.filter_age(Age::Adult);
    let (ubm, _) = train_ubm(&adult_train, 16, 8, 11).unwrap();
    let tv = train_tv(&ubm, &adult_train, 8, 5, 12).unwrap();
    let arch = Arch::desk(24, 8, 20);
    let cfg = TrainConfig { max_epochs: 20, seed: 7, ..TrainConfig::default() };
    let (source, _) = pretrain_layerwise(&adult_train, Some(&tv), &arch, &cfg).unwrap();
    World { pair, tv, source }
}

fn adapt_err(w: &World, tr: &Corpus, te: &Corpus, config: &AdaptConfig, budget: usize, seeds: &[u64], acfg: &TrainConfig) -> f64 {
    median(seeds.iter().map(|&s| {
        let c = TrainConfig { seed: s, ..*acfg };
        let n = adapt(&w.source, tr, Some(&w.tv), config, &Schedule::Simultaneous, &c, budget).unwrap().network;
        frame_error(&n, te, Some(&w.tv)).unwrap()
    }).collect())
}

fn main() {
    let t0 = Instant::now();
    let child_ages: Vec<Age> = Age::all_children().collect();
    let seeds: Vec<u64> = vec![101, 102, 103, 104, 105];
    let acfg = TrainConfig { lr_initial: 0.02, lr_final: 0.002, batch: 16, patience: 8, tol_abs: 0.0001, max_epochs: 60, seed: 0, ..TrainConfig::default() };

    // === C2/C3 self-contained worlds: [adult, 6] with custom profiles ===
    let spec_c2 = CorpusSpec {
        seed: 2,
        ages: vec![Age::Adult, Age::Child(6)],
        speakers_per_age: vec![18, 10],
        utts_per_speaker: 12,
        frames_per_utt: 100,
        test_speakers_per_age: vec![4, 6],
        test_utts_per_speaker: 10,
        ..CorpusSpec::default()
    };
    let pure_warp = |age: Age| -> adaptlab::Result<AgeProfile> {
        let mut p = default_age_profile(age)?; p.gamma = 1.0; p.epsilon = 0.0; Ok(p)
    };
    let pron_only = |age: Age| -> adaptlab::Result<AgeProfile> {
        let mut p = default_age_profile(age)?; p.alpha = 1.0; p.gamma = 1.0; p.epsilon = 0.6; Ok(p)
    };
    for (name, pf) in [("C2-warp", &pure_warp as &dyn Fn(Age) -> adaptlab::Result<AgeProfile>), ("C2-pron", &pron_only)] {
        let t = Instant::now();
        let w = build_world(&spec_c2, Some(pf));
        let tr = w.pair.train.filter_age(Age::Child(6));
        let te = w.pair.test.filter_age(Age::Child(6));
        let budget = tr.total_frames();
        let un = frame_error(&w.source, &te, Some(&w.tv)).unwrap();
        let b1 = adapt_err(&w, &tr, &te, &AdaptConfig::BottomK(1), budget, &seeds, &acfg);
        let t1 = adapt_err(&w, &tr, &te, &AdaptConfig::TopK(1), budget, &seeds, &acfg);
        println!("[{name}] unadapted {:.4} b1 {:.4} t1 {:.4} ({:.0}s)", un, b1, t1, t.elapsed().as_secs_f64());
    }
    {
        let t = Instant::now();
        let w = build_world(&spec_c2, None); // mixed default age-6 profile
        let tr = w.pair.train.filter_age(Age::Child(6));
        let te = w.pair.test.filter_age(Age::Child(6));
        let budget = tr.total_frames();
        print!("[C3-mixed] unadapted {:.4} |", frame_error(&w.source, &te, Some(&w.tv)).unwrap());
        for (label, config) in [("b1", AdaptConfig::BottomK(1)), ("t1", AdaptConfig::TopK(1)), ("s2", AdaptConfig::SymmetricTotal(2)), ("s4", AdaptConfig::SymmetricTotal(4)), ("all", AdaptConfig::All)] {
            print!(" {label} {:.4}", adapt_err(&w, &tr, &te, &config, budget, &seeds, &acfg));
        }
        println!(" ({:.0}s)", t.elapsed().as_secs_f64());
    }

    // === World B1 (C6): extreme old tilt ===
    {
        let t = Instant::now();
        let spec = CorpusSpec {
            seed: 3,
            speakers_per_age: vec![18, 1, 1, 1, 1, 1, 2, 3, 6, 32],
            utts_per_speaker: 12,
            frames_per_utt: 100,
            test_speakers_per_age: vec![4, 12, 12, 12, 12, 12, 12, 12, 12, 12],
            test_utts_per_speaker: 12,
            ..CorpusSpec::default()
        };
        let w = build_world(&spec, None);
        let child_train = w.pair.train.filter_ages(&child_ages);
        let child_test = w.pair.test.filter_ages(&child_ages);
        let total = child_train.total_frames();
        print!("[B1 src] child {:.4} per-age:", frame_error(&w.source, &child_test, Some(&w.tv)).unwrap());
        for age in child_ages.iter() {
            print!(" {:.3}", frame_error(&w.source, &child_test.filter_age(*age), Some(&w.tv)).unwrap());
        }
        println!();
        for (label, config) in [("sym2", AdaptConfig::SymmetricTotal(2)), ("all", AdaptConfig::All)] {
            let nets: Vec<Network> = seeds.iter().map(|&s| {
                let c = TrainConfig { seed: s, ..acfg };
                adapt(&w.source, &child_train, Some(&w.tv), &config, &Schedule::Simultaneous, &c, total).unwrap().network
            }).collect();
            print!("[B1 C6A] {label}:");
            let mut prev = 1.0f64;
            let mut mono = true;
            for age in child_ages.iter() {
                let te = child_test.filter_age(*age);
                let e = median(nets.iter().map(|n| frame_error(n, &te, Some(&w.tv)).unwrap()).collect());
                print!(" {:.3}", e);
                if e >= prev { mono = false; }
                prev = e;
            }
            println!(" mono={mono}");
        }
        println!("[B1] ({:.0}s)", t.elapsed().as_secs_f64());
    }

    // === World B2 (C8): scarce-speaker old ages, big spk_scale ===
    {
        let t = Instant::now();
        let spec = CorpusSpec {
            seed: 4,
            speakers_per_age: vec![18, 4, 4, 4, 4, 4, 2, 2, 2, 2],
            utts_per_speaker: 12,
            frames_per_utt: 100,
            spk_scale: 0.8,
            test_speakers_per_age: vec![4, 12, 12, 12, 12, 12, 12, 12, 12, 12],
            test_utts_per_speaker: 12,
            ..CorpusSpec::default()
        };
        // Old ages get 30 utterances per speaker: rebuild with per-age filter.
        let mut spec_old = spec.clone();
        spec_old.utts_per_speaker = 30;
        let base = generate_corpus(&spec).unwrap();
        let old = generate_corpus(&spec_old).unwrap();
        // Stitch: young ages from base, old ages (11..14) from old run.
        let stitch = |b: &Corpus, o: &Corpus| {
            let mut utts: Vec<Utterance> = b.utterances.iter().filter(|u| match u.age {
                Age::Child(a) => a <= 10,
                Age::Adult => true,
            }).cloned().collect();
            utts.extend(o.utterances.iter().filter(|u| matches!(u.age, Age::Child(a) if a >= 11)).cloned());
            Corpus { k: b.k, d: b.d, utterances: utts }
        };
        let train = stitch(&base.train, &old.train);
        let pair = CorpusPair { train, test: base.test };
        let adult_train = pair.train.filter_age(Age::Adult);
        let (ubm, _) = train_ubm(&adult_train, 16, 8, 11).unwrap();
        let tv = train_tv(&ubm, &adult_train, 8, 5, 12).unwrap();
        let arch = Arch::desk(24, 8, 20);
        let cfg = TrainConfig { max_epochs: 20, seed: 7, ..TrainConfig::default() };
        let (source, _) = pretrain_layerwise(&adult_train, Some(&tv), &arch, &cfg).unwrap();
        let w = World { pair, tv, source };
        let child_train = w.pair.train.filter_ages(&child_ages);
        let child_test = w.pair.test.filter_ages(&child_ages);
        let total = child_train.total_frames();
        let full_nets: Vec<Network> = seeds.iter().map(|&s| {
            let c = TrainConfig { seed: s, ..acfg };
            adapt(&w.source, &child_train, Some(&w.tv), &AdaptConfig::All, &Schedule::Simultaneous, &c, total).unwrap().network
        }).collect();
        println!("[B2] age | src dep ifull imatched");
        for age in child_ages.iter() {
            let tr_age = w.pair.train.filter_age(*age);
            let te = child_test.filter_age(*age);
            let b = tr_age.total_frames();
            let src_e = frame_error(&w.source, &te, Some(&w.tv)).unwrap();
            let dep = adapt_err(&w, &tr_age, &te, &AdaptConfig::All, b, &seeds, &acfg);
            let ifull = median(full_nets.iter().map(|n| frame_error(n, &te, Some(&w.tv)).unwrap()).collect());
            let imatched = adapt_err(&w, &child_train, &te, &AdaptConfig::All, b, &seeds, &acfg);
            println!("[B2] {age} | {:.3} {:.3} {:.3}{} {:.3}{}",
                src_e, dep, ifull, if ifull <= dep {""} else {" VIOL"},
                imatched, if imatched < dep {" *"} else {""});
        }
        println!("[B2] ({:.0}s) TOTAL {:.0}s", t.elapsed().as_secs_f64(), t0.elapsed().as_secs_f64());
    }
}
