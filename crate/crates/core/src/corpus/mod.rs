//! Synthetic corpus generation.
//!
//! An "adult" source domain and per-age "child" target domains share one
//! class inventory but differ by three dials: a spectral warp `alpha` that
//! compresses the feature envelope (formants scaled up), a variance
//! inflation `gamma`, and a segment-level mispronunciation rate `epsilon`
//! under which a whole segment is realized as the class's confusable while
//! the stored label stays canonical.

mod format;

pub use format::{corpus_from_text, corpus_to_text, load_corpus, load_pair, save_corpus, save_pair};

use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use crate::textio::{parse_kv, split_list};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeSet;
use std::fmt;

/// Fixed frame rate; converts the hours/minutes axes to frame budgets.
pub const FRAME_RATE: u32 = 100;

/// Youngest synthetic child age.
pub const MIN_CHILD_AGE: u8 = 6;
/// Oldest synthetic child age.
pub const MAX_CHILD_AGE: u8 = 14;

/// Default per-speaker offset standard deviation.
pub const DEFAULT_SPK_SCALE: f64 = 0.4;

const MEAN_SCALE: f64 = 2.0;
const MEAN_HARMONICS: usize = 12;
const MEAN_HARMONIC_DECAY: f64 = 0.85;
const VAR_LO: f64 = 0.5;
const VAR_HI: f64 = 1.5;

/// Speaker age: the adult source domain or a child year in [6, 14].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Age {
    Adult,
    Child(u8),
}

impl Age {
    pub fn child(years: u8) -> Result<Age> {
        if !(MIN_CHILD_AGE..=MAX_CHILD_AGE).contains(&years) {
            return Err(Error::config(format!(
                "age {years} outside [{MIN_CHILD_AGE}, {MAX_CHILD_AGE}]"
            )));
        }
        Ok(Age::Child(years))
    }

    pub fn is_adult(self) -> bool {
        matches!(self, Age::Adult)
    }

    /// All child ages, youngest first.
    pub fn all_children() -> impl Iterator<Item = Age> {
        (MIN_CHILD_AGE..=MAX_CHILD_AGE).map(Age::Child)
    }

}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Age::Adult => write!(f, "adult"),
            Age::Child(a) => write!(f, "{a}"),
        }
    }
}

impl std::str::FromStr for Age {
    type Err = Error;

    fn from_str(s: &str) -> Result<Age> {
        if s.eq_ignore_ascii_case("adult") {
            return Ok(Age::Adult);
        }
        let years: u8 = s
            .parse()
            .map_err(|_| Error::parse("age", format!("bad age token `{s}`")))?;
        Age::child(years)
    }
}

/// The class inventory shared by every domain: per-class Gaussians, a
/// fixed-point-free confusable map, and a self-loop Markov chain over
/// classes.
#[derive(Clone, Debug)]
pub struct ClassInventory {
    pub k: usize,
    pub d: usize,
    /// K x D class means.
    pub means: Array2<f64>,
    /// K x D strictly positive diagonal variances.
    pub vars: Array2<f64>,
    /// confusion[c] is the nearest other class by mean distance.
    pub confusion: Vec<usize>,
    /// K x K row-stochastic transition matrix with `p_loop` on the diagonal.
    pub transition: Array2<f64>,
    pub p_loop: f64,
}

/// Build a seeded inventory.
///
/// Class means are smooth envelopes: per class, six cosine-harmonic
/// coefficients are drawn from N(0, MEAN_SCALE^2 / 6) and mixed as
/// `mean[j] = sum_h a_h cos(pi h (j + 0.5) / D)`, so a spectral warp moves
/// them gradually. Variances are uniform in [0.5, 1.5]; the confusable of a
/// class is its nearest other class by mean Euclidean distance with ties
/// broken toward the lower index; off-diagonal transition mass is spread
/// uniformly.
pub fn build_inventory(seed: u64, k: usize, d: usize, p_loop: f64) -> Result<ClassInventory> {
    if k < 2 {
        return Err(Error::config(format!("K must be >= 2, got {k}")));
    }
    if d < 4 {
        return Err(Error::config(format!("D must be >= 4, got {d}")));
    }
    if !(p_loop > 0.0 && p_loop < 1.0) {
        return Err(Error::config(format!("p_loop must be in (0, 1), got {p_loop}")));
    }

    let mut rng = stream(seed, &[tag("inventory")]);
    let harmonics = MEAN_HARMONICS.min(d);
    // Geometric spectrum: harmonic h gets sd MEAN_SCALE * norm * decay^h,
    // normalized so the per-dimension variance is MEAN_SCALE^2.
    let mut var_factor = 1.0;
    for h in 1..harmonics {
        var_factor += 0.5 * MEAN_HARMONIC_DECAY.powi(2 * h as i32);
    }
    let norm = MEAN_SCALE / var_factor.sqrt();
    let mut means = Array2::zeros((k, d));
    for c in 0..k {
        let coeffs: Vec<f64> = (0..harmonics)
            .map(|h| {
                let z: f64 = StandardNormal.sample(&mut rng);
                norm * MEAN_HARMONIC_DECAY.powi(h as i32) * z
            })
            .collect();
        for j in 0..d {
            means[[c, j]] = coeffs
                .iter()
                .enumerate()
                .map(|(h, a)| {
                    a * (std::f64::consts::PI * h as f64 * (j as f64 + 0.5) / d as f64).cos()
                })
                .sum();
        }
    }
    let mut vars = Array2::zeros((k, d));
    for c in 0..k {
        for j in 0..d {
            vars[[c, j]] = rng.random_range(VAR_LO..VAR_HI);
        }
    }

    let mut confusion = Vec::with_capacity(k);
    for c in 0..k {
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for other in 0..k {
            if other == c {
                continue;
            }
            let dist: f64 = (0..d)
                .map(|j| {
                    let diff = means[[c, j]] - means[[other, j]];
                    diff * diff
                })
                .sum();
            if dist < best_dist {
                best_dist = dist;
                best = other;
            }
        }
        confusion.push(best);
    }

    let off = (1.0 - p_loop) / (k - 1) as f64;
    let mut transition = Array2::from_elem((k, k), off);
    for c in 0..k {
        transition[[c, c]] = p_loop;
    }

    Ok(ClassInventory {
        k,
        d,
        means,
        vars,
        confusion,
        transition,
        p_loop,
    })
}

/// Per-age variability profile: the synthetic stand-in for child speech.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgeProfile {
    pub age: Age,
    /// Spectral warp factor >= 1; 1 for adults.
    pub alpha: f64,
    /// Variance multiplier >= 1; 1 for adults.
    pub gamma: f64,
    /// Segment mispronunciation probability in [0, 1).
    pub epsilon: f64,
    /// Per-speaker offset standard deviation.
    pub spk_scale: f64,
}

impl AgeProfile {
    /// The identity profile of the source domain.
    pub fn adult() -> AgeProfile {
        AgeProfile {
            age: Age::Adult,
            alpha: 1.0,
            gamma: 1.0,
            epsilon: 0.0,
            spk_scale: DEFAULT_SPK_SCALE,
        }
    }
}

/// Default variability schedule over ages.
///
/// alpha(a) = 1 + 0.4 (15 - a) / 9 and gamma(a) = 1 + (15 - a) / 9 decay
/// linearly to the adult identity at age 15; epsilon is banded at
/// 0.12 / 0.10 / 0.05 for ages 6-7 / 8-10 / 11-14 (the middle band is twice
/// the oldest band).
pub fn default_age_profile(age: Age) -> Result<AgeProfile> {
    match age {
        Age::Adult => Ok(AgeProfile::adult()),
        Age::Child(a) => {
            if !(MIN_CHILD_AGE..=MAX_CHILD_AGE).contains(&a) {
                return Err(Error::config(format!(
                    "age {a} outside [{MIN_CHILD_AGE}, {MAX_CHILD_AGE}]"
                )));
            }
            let gap = f64::from(15 - u32::from(a)) / 9.0;
            let epsilon = match a {
                6..=7 => 0.12,
                8..=10 => 0.10,
                _ => 0.05,
            };
            Ok(AgeProfile {
                age,
                alpha: 1.0 + 0.4 * gap,
                gamma: 1.0 + gap,
                epsilon,
                spk_scale: DEFAULT_SPK_SCALE,
            })
        }
    }
}

/// Resample `frame` at positions `j * rate`, linearly interpolated and
/// clamped to the last dimension.
pub(crate) fn resample(frame: &[f64], rate: f64) -> Vec<f64> {
    let d = frame.len();
    let last = (d - 1) as f64;
    (0..d)
        .map(|j| {
            let pos = j as f64 * rate;
            if pos >= last {
                frame[d - 1]
            } else {
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                frame[lo] * (1.0 - frac) + frame[lo + 1] * frac
            }
        })
        .collect()
}

/// Compress the spectral envelope: `out[j] = frame[j / alpha]`, linearly
/// interpolated, so formant peaks move up by a factor of `alpha`.
pub fn warp_features(frame: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if alpha < 1.0 {
        return Err(Error::config(format!(
            "warp factor must be >= 1 (child domain only stretches), got {alpha}"
        )));
    }
    Ok(resample(frame, 1.0 / alpha))
}

/// One speaker with a constant feature-space offset.
#[derive(Clone, Debug)]
pub struct Speaker {
    pub id: u32,
    pub age: Age,
    pub offset: Vec<f64>,
}

impl Speaker {
    /// Draw a speaker whose offset is isotropic N(0, scale^2).
    pub fn sample(id: u32, age: Age, d: usize, scale: f64, rng: &mut impl Rng) -> Speaker {
        let offset = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect();
        Speaker { id, age, offset }
    }
}

/// A labeled frame sequence.
#[derive(Clone, Debug)]
pub struct Utterance {
    pub id: u32,
    pub speaker: u32,
    pub age: Age,
    /// T x D feature frames.
    pub frames: Array2<f64>,
    /// Canonical class label per frame.
    pub labels: Vec<usize>,
    /// Per-segment (canonical, realized) classes; empty after file load.
    pub segment_truth: Vec<(usize, usize)>,
}

impl Utterance {
    pub fn num_frames(&self) -> usize {
        self.labels.len()
    }
}

/// Sample one utterance: a self-loop Markov label chain, a per-segment
/// mispronunciation draw, and per-frame Gaussian features from the realized
/// class (variance scaled by `gamma`), warped by `alpha` and shifted by the
/// speaker offset.
pub fn sample_utterance(
    inventory: &ClassInventory,
    speaker: &Speaker,
    profile: &AgeProfile,
    num_frames: usize,
    seed: u64,
) -> Result<Utterance> {
    if num_frames < 1 {
        return Err(Error::config("utterance length must be >= 1".to_string()));
    }
    if speaker.offset.len() != inventory.d {
        return Err(Error::dimension(format!(
            "speaker offset has {} dims, inventory has {}",
            speaker.offset.len(),
            inventory.d
        )));
    }
    let mut rng = stream(seed, &[tag("utterance")]);
    let k = inventory.k;
    let d = inventory.d;

    // Label chain: uniform start, then self-loop / uniform-other steps.
    let mut labels = Vec::with_capacity(num_frames);
    let mut state = rng.random_range(0..k);
    labels.push(state);
    for _ in 1..num_frames {
        if rng.random::<f64>() >= inventory.p_loop {
            let mut next = rng.random_range(0..k - 1);
            if next >= state {
                next += 1;
            }
            state = next;
        }
        labels.push(state);
    }

    let mut frames = Array2::zeros((num_frames, d));
    let mut segment_truth = Vec::new();
    let mut realized = 0usize;
    let mut raw = vec![0.0; d];
    for t in 0..num_frames {
        let canonical = labels[t];
        if t == 0 || labels[t - 1] != canonical {
            // Segment start: one mispronunciation draw. The draw is taken
            // even when epsilon = 0 so that identity profiles consume the
            // generator exactly like the adult pipeline.
            let mispronounced = rng.random::<f64>() < profile.epsilon;
            realized = if mispronounced {
                inventory.confusion[canonical]
            } else {
                canonical
            };
            segment_truth.push((canonical, realized));
        }
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            raw[j] = inventory.means[[realized, j]]
                + z * (profile.gamma * inventory.vars[[realized, j]]).sqrt();
        }
        let warped = resample(&raw, 1.0 / profile.alpha);
        for j in 0..d {
            frames[[t, j]] = warped[j] + speaker.offset[j];
        }
    }

    Ok(Utterance {
        id: 0,
        speaker: speaker.id,
        age: speaker.age,
        frames,
        labels,
        segment_truth,
    })
}

/// An immutable collection of utterances over one or more ages.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub k: usize,
    pub d: usize,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn total_frames(&self) -> usize {
        self.utterances.iter().map(Utterance::num_frames).sum()
    }

    /// Total duration in minutes at the fixed frame rate.
    pub fn duration_minutes(&self) -> f64 {
        self.total_frames() as f64 / (FRAME_RATE as f64 * 60.0)
    }

    pub fn ages(&self) -> BTreeSet<Age> {
        self.utterances.iter().map(|u| u.age).collect()
    }

    pub fn speaker_ids(&self) -> BTreeSet<u32> {
        self.utterances.iter().map(|u| u.speaker).collect()
    }

    /// Utterances of one age, in stored order.
    pub fn filter_age(&self, age: Age) -> Corpus {
        Corpus {
            k: self.k,
            d: self.d,
            utterances: self
                .utterances
                .iter()
                .filter(|u| u.age == age)
                .cloned()
                .collect(),
        }
    }

    /// Utterances of any of the given ages.
    pub fn filter_ages(&self, ages: &[Age]) -> Corpus {
        Corpus {
            k: self.k,
            d: self.d,
            utterances: self
                .utterances
                .iter()
                .filter(|u| ages.contains(&u.age))
                .cloned()
                .collect(),
        }
    }

    /// Union of corpora over the same inventory, order-normalized by id.
    pub fn union(parts: &[&Corpus]) -> Result<Corpus> {
        let first = parts
            .first()
            .ok_or_else(|| Error::config("union of zero corpora".to_string()))?;
        let mut utterances = Vec::new();
        for part in parts {
            if part.k != first.k || part.d != first.d {
                return Err(Error::dimension(
                    "corpora in a union must share K and D".to_string(),
                ));
            }
            utterances.extend(part.utterances.iter().cloned());
        }
        utterances.sort_by_key(|u| u.id);
        Ok(Corpus {
            k: first.k,
            d: first.d,
            utterances,
        })
    }
}

/// Generator spec: one inventory plus per-age train and test speaker pools.
///
/// `speakers_per_age` and `test_speakers_per_age` hold either one count
/// (applied to every age) or one count per listed age, so the adult pool
/// can dwarf each child age the way source corpora usually do.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub k: usize,
    pub d: usize,
    pub p_loop: f64,
    /// Ages to generate; may include `adult`.
    pub ages: Vec<Age>,
    pub speakers_per_age: Vec<usize>,
    pub utts_per_speaker: usize,
    pub frames_per_utt: usize,
    pub spk_scale: f64,
    /// Held-out pool sizes; speakers never overlap with the train pool.
    pub test_speakers_per_age: Vec<usize>,
    pub test_utts_per_speaker: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 1,
            k: 20,
            d: 24,
            p_loop: 0.9,
            ages: std::iter::once(Age::Adult).chain(Age::all_children()).collect(),
            speakers_per_age: vec![4],
            utts_per_speaker: 9,
            frames_per_utt: 100,
            spk_scale: DEFAULT_SPK_SCALE,
            test_speakers_per_age: vec![2],
            test_utts_per_speaker: 9,
        }
    }
}

impl CorpusSpec {
    /// Parse the flat `key=value` grammar.
    pub fn parse(text: &str) -> Result<CorpusSpec> {
        let mut spec = CorpusSpec::default();
        let mut test_speakers_set = false;
        let mut test_utts_set = false;
        for (key, value) in parse_kv("corpus spec", text)? {
            let bad = |e: &dyn fmt::Display| {
                Error::parse("corpus spec", format!("key `{key}`: {e}"))
            };
            let counts = |v: &str| -> Result<Vec<usize>> {
                split_list(v)
                    .iter()
                    .map(|s| {
                        s.parse().map_err(|e| {
                            Error::parse("corpus spec", format!("key `{key}`: {e}"))
                        })
                    })
                    .collect()
            };
            match key.as_str() {
                "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
                "K" => spec.k = value.parse().map_err(|e| bad(&e))?,
                "D" => spec.d = value.parse().map_err(|e| bad(&e))?,
                "p_loop" => spec.p_loop = value.parse().map_err(|e| bad(&e))?,
                "ages" => {
                    spec.ages = split_list(&value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<Vec<Age>>>()?;
                }
                "speakers_per_age" => spec.speakers_per_age = counts(&value)?,
                "utts_per_speaker" => spec.utts_per_speaker = value.parse().map_err(|e| bad(&e))?,
                "frames_per_utt" => spec.frames_per_utt = value.parse().map_err(|e| bad(&e))?,
                "spk_scale" => spec.spk_scale = value.parse().map_err(|e| bad(&e))?,
                "test_speakers_per_age" => {
                    spec.test_speakers_per_age = counts(&value)?;
                    test_speakers_set = true;
                }
                "test_utts_per_speaker" => {
                    spec.test_utts_per_speaker = value.parse().map_err(|e| bad(&e))?;
                    test_utts_set = true;
                }
                _ => {
                    return Err(Error::parse(
                        "corpus spec",
                        format!("unknown key `{key}`"),
                    ))
                }
            }
        }
        if !test_speakers_set {
            spec.test_speakers_per_age = spec
                .speakers_per_age
                .iter()
                .map(|n| n.div_ceil(2))
                .collect();
        }
        if !test_utts_set {
            spec.test_utts_per_speaker = spec.utts_per_speaker;
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let ages = self
            .ages
            .iter()
            .map(Age::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let join = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "seed={}\nK={}\nD={}\np_loop={}\nages={}\nspeakers_per_age={}\n\
             utts_per_speaker={}\nframes_per_utt={}\nspk_scale={}\n\
             test_speakers_per_age={}\ntest_utts_per_speaker={}\n",
            self.seed,
            self.k,
            self.d,
            self.p_loop,
            ages,
            join(&self.speakers_per_age),
            self.utts_per_speaker,
            self.frames_per_utt,
            self.spk_scale,
            join(&self.test_speakers_per_age),
            self.test_utts_per_speaker,
        )
    }

    /// Train-pool speaker count for the age at `index` in `ages`.
    pub fn speakers_at(&self, index: usize) -> usize {
        if self.speakers_per_age.len() == 1 {
            self.speakers_per_age[0]
        } else {
            self.speakers_per_age[index]
        }
    }

    /// Test-pool speaker count for the age at `index` in `ages`.
    pub fn test_speakers_at(&self, index: usize) -> usize {
        if self.test_speakers_per_age.len() == 1 {
            self.test_speakers_per_age[0]
        } else {
            self.test_speakers_per_age[index]
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ages.is_empty() {
            return Err(Error::config("corpus spec lists no ages".to_string()));
        }
        let unique: BTreeSet<Age> = self.ages.iter().copied().collect();
        if unique.len() != self.ages.len() {
            return Err(Error::config("corpus spec repeats an age".to_string()));
        }
        for counts in [&self.speakers_per_age, &self.test_speakers_per_age] {
            if counts.len() != 1 && counts.len() != self.ages.len() {
                return Err(Error::config(format!(
                    "speaker counts list has {} entries for {} ages",
                    counts.len(),
                    self.ages.len()
                )));
            }
        }
        if self.frames_per_utt < 1 {
            return Err(Error::config("frames_per_utt must be >= 1".to_string()));
        }
        if self.spk_scale < 0.0 {
            return Err(Error::config("spk_scale must be >= 0".to_string()));
        }
        Ok(())
    }
}

/// A train corpus and a test corpus drawn from disjoint speaker pools.
#[derive(Clone, Debug)]
pub struct CorpusPair {
    pub train: Corpus,
    pub test: Corpus,
}

impl CorpusPair {
    /// Reject pairs whose speaker pools overlap.
    pub fn validate(&self) -> Result<()> {
        let train_ids = self.train.speaker_ids();
        let test_ids = self.test.speaker_ids();
        if let Some(id) = train_ids.intersection(&test_ids).next() {
            return Err(Error::config(format!(
                "speaker {id} appears in both the train and test pools"
            )));
        }
        Ok(())
    }
}

/// Generate the train/test corpus pair described by `spec`, using the
/// default age profiles.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<CorpusPair> {
    generate_corpus_with(spec, &default_age_profile)
}

/// Like [`generate_corpus`] but with an injected profile schedule; seed
/// consumption does not depend on the profile, so an identity profile
/// reproduces the source generator frame for frame.
pub fn generate_corpus_with(
    spec: &CorpusSpec,
    profile_of: &dyn Fn(Age) -> Result<AgeProfile>,
) -> Result<CorpusPair> {
    spec.validate()?;
    let inventory = build_inventory(spec.seed, spec.k, spec.d, spec.p_loop)?;

    let mut next_speaker: u32 = 0;
    let mut next_utt: u32 = 0;
    let mut gen_pool = |pool: &str, speakers_at: &dyn Fn(usize) -> usize,
                        utts: usize|
     -> Result<Corpus> {
        let pool_tag = tag(pool);
        let mut utterances = Vec::new();
        for (age_idx, &age) in spec.ages.iter().enumerate() {
            let mut profile = profile_of(age)?;
            profile.spk_scale = spec.spk_scale;
            for _ in 0..speakers_at(age_idx) {
                let spk_id = next_speaker;
                next_speaker += 1;
                let mut spk_rng = stream(spec.seed, &[tag("speaker"), pool_tag, spk_id as u64]);
                let speaker =
                    Speaker::sample(spk_id, age, spec.d, profile.spk_scale, &mut spk_rng);
                for _ in 0..utts {
                    let utt_id = next_utt;
                    next_utt += 1;
                    let utt_seed =
                        crate::rng::derive(spec.seed, &[tag("utt"), pool_tag, utt_id as u64]);
                    let mut utt = sample_utterance(
                        &inventory,
                        &speaker,
                        &profile,
                        spec.frames_per_utt,
                        utt_seed,
                    )?;
                    utt.id = utt_id;
                    utterances.push(utt);
                }
            }
        }
        Ok(Corpus {
            k: spec.k,
            d: spec.d,
            utterances,
        })
    };

    let train = gen_pool(
        "train",
        &|i| spec.speakers_at(i),
        spec.utts_per_speaker,
    )?;
    let test = gen_pool(
        "test",
        &|i| spec.test_speakers_at(i),
        spec.test_utts_per_speaker,
    )?;
    let pair = CorpusPair { train, test };
    pair.validate()?;
    Ok(pair)
}

/// Keep whole utterances chosen uniformly at random until `budget_frames`
/// is reached (the utterance that crosses the budget is included). The
/// result is order-normalized by utterance id.
pub fn subsample_budget(corpus: &Corpus, budget_frames: usize, seed: u64) -> Result<Corpus> {
    let total = corpus.total_frames();
    if budget_frames == 0 {
        return Err(Error::config("budget must be positive".to_string()));
    }
    if budget_frames > total {
        return Err(Error::config(format!(
            "budget {budget_frames} exceeds corpus size {total}"
        )));
    }
    let mut rng = stream(seed, &[tag("subsample")]);
    let mut order: Vec<usize> = (0..corpus.utterances.len()).collect();
    // Fisher-Yates, driven by the crate stream.
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut chosen = Vec::new();
    let mut frames = 0usize;
    for idx in order {
        if frames >= budget_frames {
            break;
        }
        frames += corpus.utterances[idx].num_frames();
        chosen.push(idx);
    }
    let mut utterances: Vec<Utterance> = chosen
        .into_iter()
        .map(|i| corpus.utterances[i].clone())
        .collect();
    utterances.sort_by_key(|u| u.id);
    Ok(Corpus {
        k: corpus.k,
        d: corpus.d,
        utterances,
    })
}

#[cfg(test)]
mod tests;
