//! Helpers for the line-oriented text formats used by corpus and model files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! the written text recovers the exact f64 bit pattern.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Format a float so that parsing recovers the identical f64.
pub fn fmt_f64(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x}").unwrap();
    s
}

/// Append space-separated floats to `out`, followed by a newline.
pub fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
        first = false;
    }
    out.push('\n');
}

/// Token cursor over whitespace-separated text with line tracking for errors.
pub struct Tokens<'a> {
    what: &'a str,
    iter: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    pub fn new(what: &'a str, text: &'a str) -> Self {
        Tokens {
            what,
            iter: text.split_ascii_whitespace(),
        }
    }

    pub fn next_token(&mut self) -> Result<&'a str> {
        self.iter
            .next()
            .ok_or_else(|| Error::parse(self.what, "unexpected end of input"))
    }

    pub fn expect(&mut self, literal: &str) -> Result<()> {
        let tok = self.next_token()?;
        if tok != literal {
            return Err(Error::parse(
                self.what,
                format!("expected `{literal}`, found `{tok}`"),
            ));
        }
        Ok(())
    }

    pub fn next_usize(&mut self) -> Result<usize> {
        let tok = self.next_token()?;
        tok.parse()
            .map_err(|e| Error::parse(self.what, format!("bad integer `{tok}`: {e}")))
    }

    pub fn next_u64(&mut self) -> Result<u64> {
        let tok = self.next_token()?;
        tok.parse()
            .map_err(|e| Error::parse(self.what, format!("bad integer `{tok}`: {e}")))
    }

    pub fn next_f64(&mut self) -> Result<f64> {
        let tok = self.next_token()?;
        tok.parse()
            .map_err(|e| Error::parse(self.what, format!("bad float `{tok}`: {e}")))
    }

    /// True when no tokens remain.
    pub fn finished(&mut self) -> bool {
        self.iter.clone().next().is_none()
    }
}

/// Parse flat `key=value` lines. Blank lines and `#` comments are skipped.
/// Returns pairs in file order; duplicate keys keep the last value.
pub fn parse_kv(what: &str, text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::parse(what, format!("line {}: expected key=value", lineno + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Split a comma-separated list, trimming items and dropping empties.
pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}
