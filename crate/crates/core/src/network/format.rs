//! The `NET v1` model file.
//!
//! Line 1: `NET v1 <L> <d0> <d1> ... <dL> <p> <G>` where d0 is the input
//! dimension and d1..dL are the affine output dimensions. Line 2:
//! `SPLICE <left> <right> <feat_dim> <ivec_dim>` records the input
//! assembly. Then per layer: the weight matrix row-major (one row per
//! input unit) followed by one bias row. Floats round-trip exactly.

use super::Network;
use crate::error::{Error, Result};
use crate::textio::{push_row, Tokens};
use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::path::Path;

pub fn network_to_text(net: &Network) -> String {
    let mut out = String::new();
    write!(out, "NET v1 {} {}", net.depth(), net.input_dim()).unwrap();
    for w in &net.weights {
        write!(out, " {}", w.ncols()).unwrap();
    }
    writeln!(out, " {} {}", net.p, net.group).unwrap();
    writeln!(
        out,
        "SPLICE {} {} {} {}",
        net.splice_left, net.splice_right, net.feat_dim, net.ivec_dim
    )
    .unwrap();
    for l in 0..net.depth() {
        let w = &net.weights[l];
        for i in 0..w.nrows() {
            push_row(&mut out, w.row(i).iter().copied());
        }
        push_row(&mut out, net.biases[l].iter().copied());
    }
    out
}

pub fn network_from_text(text: &str) -> Result<Network> {
    let what = "net file";
    let mut toks = Tokens::new(what, text);
    toks.expect("NET")?;
    toks.expect("v1")?;
    let depth = toks.next_usize()?;
    if depth < 1 {
        return Err(Error::parse(what, "network must have at least one layer"));
    }
    let mut dims = Vec::with_capacity(depth + 1);
    for _ in 0..=depth {
        dims.push(toks.next_usize()?);
    }
    let p = toks.next_f64()?;
    let group = toks.next_usize()?;
    toks.expect("SPLICE")?;
    let splice_left = toks.next_usize()?;
    let splice_right = toks.next_usize()?;
    let feat_dim = toks.next_usize()?;
    let ivec_dim = toks.next_usize()?;

    if group < 1 {
        return Err(Error::parse(what, "group size must be >= 1"));
    }
    let mut weights = Vec::with_capacity(depth);
    let mut biases = Vec::with_capacity(depth);
    for l in 0..depth {
        let fan_in = if l == 0 { dims[0] } else { dims[l] / group };
        let fan_out = dims[l + 1];
        if l > 0 && dims[l] % group != 0 {
            return Err(Error::parse(
                what,
                format!("layer {l} output {} not divisible by group {group}", dims[l]),
            ));
        }
        let mut w = Array2::zeros((fan_in, fan_out));
        for i in 0..fan_in {
            for j in 0..fan_out {
                w[[i, j]] = toks.next_f64()?;
            }
        }
        let mut b = Array1::zeros(fan_out);
        for j in 0..fan_out {
            b[j] = toks.next_f64()?;
        }
        weights.push(w);
        biases.push(b);
    }
    if !toks.finished() {
        return Err(Error::parse(what, "trailing tokens"));
    }
    Ok(Network {
        feat_dim,
        ivec_dim,
        splice_left,
        splice_right,
        group,
        p,
        weights,
        biases,
    })
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network_to_text(net))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_network(path: &Path) -> Result<Network> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    network_from_text(&text)
}
