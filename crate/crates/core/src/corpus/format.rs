//! The `CORPUS v1` line-oriented text format.
//!
//! Header: `CORPUS v1 <K> <D> <frame_rate>`. Each utterance starts with
//! `U <utt_id> <spk_id> <age> <T>` followed by T lines of
//! `<label> <f_1> ... <f_D>`. Floats round-trip double precision exactly.

use super::{Age, Corpus, CorpusPair, Utterance, FRAME_RATE};
use crate::error::{Error, Result};
use crate::textio::Tokens;
use ndarray::Array2;
use std::fmt::Write as _;
use std::path::Path;

/// Serialize a corpus; utterances in stored order.
pub fn corpus_to_text(corpus: &Corpus) -> String {
    let mut out = String::new();
    writeln!(out, "CORPUS v1 {} {} {}", corpus.k, corpus.d, FRAME_RATE).unwrap();
    for utt in &corpus.utterances {
        writeln!(
            out,
            "U {} {} {} {}",
            utt.id,
            utt.speaker,
            utt.age,
            utt.num_frames()
        )
        .unwrap();
        for t in 0..utt.num_frames() {
            write!(out, "{}", utt.labels[t]).unwrap();
            for j in 0..corpus.d {
                write!(out, " {}", utt.frames[[t, j]]).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Parse the `CORPUS v1` format. Segment truth is not part of the format,
/// so loaded utterances carry an empty record.
pub fn corpus_from_text(text: &str) -> Result<Corpus> {
    let what = "corpus file";
    let mut toks = Tokens::new(what, text);
    toks.expect("CORPUS")?;
    toks.expect("v1")?;
    let k = toks.next_usize()?;
    let d = toks.next_usize()?;
    let rate = toks.next_usize()?;
    if rate != FRAME_RATE as usize {
        return Err(Error::parse(
            what,
            format!("frame rate {rate} unsupported (expected {FRAME_RATE})"),
        ));
    }
    let mut utterances = Vec::new();
    while !toks.finished() {
        toks.expect("U")?;
        let id = toks.next_u64()? as u32;
        let speaker = toks.next_u64()? as u32;
        let age: Age = toks.next_token()?.parse()?;
        let num_frames = toks.next_usize()?;
        if num_frames == 0 {
            return Err(Error::parse(what, format!("utterance {id} has zero frames")));
        }
        let mut labels = Vec::with_capacity(num_frames);
        let mut frames = Array2::zeros((num_frames, d));
        for t in 0..num_frames {
            let label = toks.next_usize()?;
            if label >= k {
                return Err(Error::parse(
                    what,
                    format!("utterance {id}: label {label} out of range for K={k}"),
                ));
            }
            labels.push(label);
            for j in 0..d {
                frames[[t, j]] = toks.next_f64()?;
            }
        }
        utterances.push(Utterance {
            id,
            speaker,
            age,
            frames,
            labels,
            segment_truth: Vec::new(),
        });
    }
    Ok(Corpus { k, d, utterances })
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, corpus_to_text(corpus))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    corpus_from_text(&text)
}

/// Write `train.corpus` and `test.corpus` under `dir`.
pub fn save_pair(pair: &CorpusPair, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    save_corpus(&pair.train, &dir.join("train.corpus"))?;
    save_corpus(&pair.test, &dir.join("test.corpus"))
}

/// Load the pair written by [`save_pair`] and check pool disjointness.
pub fn load_pair(dir: &Path) -> Result<CorpusPair> {
    let pair = CorpusPair {
        train: load_corpus(&dir.join("train.corpus"))?,
        test: load_corpus(&dir.join("test.corpus"))?,
    };
    pair.validate()?;
    Ok(pair)
}
