//! Simplified offline utterance-level i-vectors.
//!
//! A diagonal-covariance UBM is fit with EM on the source (adult) corpus,
//! a total-variability subspace is fit with EM on per-utterance sufficient
//! statistics, and the i-vector of an utterance is the posterior mean of its
//! subspace coordinate. Child utterances reuse the adult UBM and subspace
//! unchanged.

use crate::corpus::{Corpus, Utterance};
use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use crate::textio::Tokens;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::path::Path;

/// Variance floor, as a fraction of the global diagonal variance.
pub const VAR_FLOOR_FRAC: f64 = 1e-4;

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Diagonal-covariance Gaussian mixture over frames.
#[derive(Clone, Debug)]
pub struct Ubm {
    pub m: usize,
    pub d: usize,
    /// Mixture weights on the simplex.
    pub weights: Array1<f64>,
    /// M x D component means.
    pub means: Array2<f64>,
    /// M x D diagonal variances, floored.
    pub vars: Array2<f64>,
}

/// Zeroth- and centered first-order statistics of one utterance.
#[derive(Clone, Debug)]
pub struct IvStats {
    /// Per-component posterior mass, sums to the frame count.
    pub n: Array1<f64>,
    /// M x D centered first-order sums.
    pub f: Array2<f64>,
}

/// Total-variability model over UBM supervector space.
#[derive(Clone, Debug)]
pub struct TvModel {
    pub ubm: Ubm,
    pub r: usize,
    /// Per-component D x R blocks of the (M*D) x R subspace matrix.
    pub t_blocks: Vec<Array2<f64>>,
}

/// Utterance-level embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct IVector {
    pub w: Array1<f64>,
}

impl Ubm {
    /// Per-frame log-gaussian table (n x M) for a frame block.
    fn log_gauss(&self, frames: &ArrayView2<f64>) -> Array2<f64> {
        let mut a = Array2::zeros((self.d, self.m)); // mean / var
        let mut b = Array2::zeros((self.d, self.m)); // 1 / var
        let mut consts = Array1::zeros(self.m);
        for m in 0..self.m {
            let mut c = 0.0;
            for j in 0..self.d {
                let var = self.vars[[m, j]];
                a[[j, m]] = self.means[[m, j]] / var;
                b[[j, m]] = 1.0 / var;
                c += -0.5 * (LOG_2PI + var.ln())
                    - 0.5 * self.means[[m, j]] * self.means[[m, j]] / var;
            }
            consts[m] = c;
        }
        let squares = frames.mapv(|x| x * x);
        let mut ll = frames.dot(&a);
        ll -= &(squares.dot(&b) * 0.5);
        for m in 0..self.m {
            let mut col = ll.column_mut(m);
            col += consts[m];
        }
        ll
    }

    /// Posterior responsibilities (n x M) and the summed log-likelihood.
    pub fn posteriors(&self, frames: &ArrayView2<f64>) -> Result<(Array2<f64>, f64)> {
        if frames.ncols() != self.d {
            return Err(Error::dimension(format!(
                "frames have {} dims, UBM has {}",
                frames.ncols(),
                self.d
            )));
        }
        let mut table = self.log_gauss(frames);
        for m in 0..self.m {
            let logw = self.weights[m].max(1e-300).ln();
            let mut col = table.column_mut(m);
            col += logw;
        }
        let mut total = 0.0;
        for mut row in table.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            row.mapv_inplace(|v| v / sum);
            total += max + sum.ln();
        }
        Ok((table, total))
    }
}

fn all_frames(corpus: &Corpus) -> (Array2<f64>, usize) {
    let total: usize = corpus.total_frames();
    let mut frames = Array2::zeros((total, corpus.d));
    let mut row = 0;
    for utt in &corpus.utterances {
        for t in 0..utt.num_frames() {
            for j in 0..corpus.d {
                frames[[row, j]] = utt.frames[[t, j]];
            }
            row += 1;
        }
    }
    (frames, total)
}

/// Fit a diagonal UBM with EM.
///
/// Means start from M distinct random frames, variances from the global
/// diagonal variance, weights uniform; variances are floored each M-step at
/// `VAR_FLOOR_FRAC` of the global variance. Returns the model and the
/// per-frame log-likelihood trace (one entry per iteration).
pub fn train_ubm(corpus: &Corpus, m: usize, iters: usize, seed: u64) -> Result<(Ubm, Vec<f64>)> {
    if m < 1 {
        return Err(Error::config("UBM needs at least one component".to_string()));
    }
    let (frames, n) = all_frames(corpus);
    if n < m {
        return Err(Error::config(format!(
            "corpus has {n} frames, fewer than M={m}"
        )));
    }
    let d = corpus.d;

    let global_mean = frames.mean_axis(Axis(0)).expect("nonempty");
    let mut global_var = Array1::zeros(d);
    for j in 0..d {
        let col = frames.column(j);
        let mu = global_mean[j];
        global_var[j] = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n as f64;
    }
    let floor = global_var.mapv(|v| (v * VAR_FLOOR_FRAC).max(1e-12));

    let mut rng = stream(seed, &[tag("ubm")]);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut means = Array2::zeros((m, d));
    for (comp, &i) in idx.iter().take(m).enumerate() {
        for j in 0..d {
            means[[comp, j]] = frames[[i, j]];
        }
    }
    let mut vars = Array2::zeros((m, d));
    for comp in 0..m {
        for j in 0..d {
            vars[[comp, j]] = global_var[j].max(floor[j]);
        }
    }
    let mut ubm = Ubm {
        m,
        d,
        weights: Array1::from_elem(m, 1.0 / m as f64),
        means,
        vars,
    };

    let mut trace = Vec::with_capacity(iters);
    let squares = frames.mapv(|x| x * x);
    for _ in 0..iters {
        let (resp, total_ll) = ubm.posteriors(&frames.view())?;
        trace.push(total_ll / n as f64);

        let occupancy = resp.sum_axis(Axis(0)); // M
        let mean_acc = resp.t().dot(&frames); // M x D
        let var_acc = resp.t().dot(&squares); // M x D
        for comp in 0..m {
            let occ = occupancy[comp];
            ubm.weights[comp] = occ / n as f64;
            if occ < 1e-10 {
                // Dead component: keep its previous parameters.
                continue;
            }
            for j in 0..d {
                let mu = mean_acc[[comp, j]] / occ;
                let var = (var_acc[[comp, j]] / occ - mu * mu).max(floor[j]);
                ubm.means[[comp, j]] = mu;
                ubm.vars[[comp, j]] = var;
            }
        }
    }
    Ok((ubm, trace))
}

/// Zeroth- and centered first-order statistics of an utterance under a UBM.
pub fn accumulate_stats(ubm: &Ubm, utt: &Utterance) -> Result<IvStats> {
    if utt.num_frames() == 0 {
        return Ok(IvStats {
            n: Array1::zeros(ubm.m),
            f: Array2::zeros((ubm.m, ubm.d)),
        });
    }
    let (resp, _) = ubm.posteriors(&utt.frames.view())?;
    let n = resp.sum_axis(Axis(0));
    let mut f = resp.t().dot(&utt.frames); // M x D first-order sums
    for m in 0..ubm.m {
        for j in 0..ubm.d {
            f[[m, j]] -= n[m] * ubm.means[[m, j]];
        }
    }
    Ok(IvStats { n, f })
}

/// Cholesky factor of a symmetric positive-definite matrix.
fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::degenerate(
                        "accumulator matrix is not positive definite".to_string(),
                    ));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve (L L^T) x = b given the Cholesky factor L.
fn chol_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Inverse from the Cholesky factor.
fn chol_inverse(l: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut inv = Array2::zeros((n, n));
    for col in 0..n {
        let mut e = Array1::zeros(n);
        e[col] = 1.0;
        let x = chol_solve(l, &e);
        for row in 0..n {
            inv[[row, col]] = x[row];
        }
    }
    inv
}

struct Posterior {
    mean: Array1<f64>,
    cov: Array2<f64>,
}

fn ivector_posterior(tv: &TvModel, stats: &IvStats) -> Result<Posterior> {
    let r = tv.r;
    let mut precision = Array2::eye(r);
    let mut rhs = Array1::zeros(r);
    for m in 0..tv.ubm.m {
        let block = &tv.t_blocks[m];
        // T_m^T Sigma_m^{-1}: rows scaled by the inverse variances.
        let mut scaled = block.clone();
        for j in 0..tv.ubm.d {
            let inv_var = 1.0 / tv.ubm.vars[[m, j]];
            for c in 0..r {
                scaled[[j, c]] *= inv_var;
            }
        }
        precision += &(block.t().dot(&scaled).mapv(|v| v * stats.n[m]));
        let f_m = stats.f.row(m);
        rhs += &scaled.t().dot(&f_m);
    }
    let l = cholesky(&precision)?;
    let mean = chol_solve(&l, &rhs);
    let cov = chol_inverse(&l);
    Ok(Posterior { mean, cov })
}

/// Fit the total-variability subspace with EM.
///
/// E-step computes each utterance's posterior over its coordinate with
/// precision `I + sum_m N_m T_m^T Sigma_m^{-1} T_m`; the M-step solves the
/// per-component least-squares update. T starts from small seeded random
/// entries (sd 0.1).
pub fn train_tv(ubm: &Ubm, corpus: &Corpus, r: usize, iters: usize, seed: u64) -> Result<TvModel> {
    if r < 1 {
        return Err(Error::config("i-vector dimension R must be >= 1".to_string()));
    }
    if r >= ubm.m * ubm.d {
        return Err(Error::config(format!(
            "R={r} must be smaller than the supervector dimension {}",
            ubm.m * ubm.d
        )));
    }
    if corpus.utterances.len() < r {
        return Err(Error::config(format!(
            "corpus has {} utterances, fewer than R={r}",
            corpus.utterances.len()
        )));
    }

    // Statistics accumulate in utterance id order, so the reduction is
    // deterministic regardless of execution order.
    let stats: Vec<IvStats> = corpus
        .utterances
        .iter()
        .map(|u| accumulate_stats(ubm, u))
        .collect::<Result<_>>()?;

    let mut rng = stream(seed, &[tag("tv")]);
    let mut t_blocks = Vec::with_capacity(ubm.m);
    for _ in 0..ubm.m {
        let mut block = Array2::zeros((ubm.d, r));
        for j in 0..ubm.d {
            for c in 0..r {
                let z: f64 = StandardNormal.sample(&mut rng);
                block[[j, c]] = 0.1 * z;
            }
        }
        t_blocks.push(block);
    }
    let mut tv = TvModel {
        ubm: ubm.clone(),
        r,
        t_blocks,
    };

    for _ in 0..iters {
        let mut a_acc = vec![Array2::<f64>::zeros((r, r)); ubm.m];
        let mut c_acc = vec![Array2::<f64>::zeros((ubm.d, r)); ubm.m];
        for st in &stats {
            let post = ivector_posterior(&tv, st)?;
            let mut eww = post.cov.clone();
            for i in 0..r {
                for j in 0..r {
                    eww[[i, j]] += post.mean[i] * post.mean[j];
                }
            }
            for m in 0..ubm.m {
                a_acc[m].scaled_add(st.n[m], &eww);
                for j in 0..ubm.d {
                    let f_mj = st.f[[m, j]];
                    for c in 0..r {
                        c_acc[m][[j, c]] += f_mj * post.mean[c];
                    }
                }
            }
        }
        for m in 0..ubm.m {
            let occupancy: f64 = stats.iter().map(|s| s.n[m]).sum();
            if occupancy < 1e-8 {
                return Err(Error::degenerate(format!(
                    "UBM component {m} has zero occupancy over the corpus; \
                     statistics are degenerate (are all utterances identical?)"
                )));
            }
            let l = cholesky(&a_acc[m]).map_err(|_| {
                Error::degenerate(format!(
                    "singular accumulator for component {m}; \
                     statistics are degenerate (are all utterances identical?)"
                ))
            })?;
            // T_m = C_m A_m^{-1}, solved row by row.
            let mut block = Array2::zeros((ubm.d, r));
            for j in 0..ubm.d {
                let row = c_acc[m].row(j).to_owned();
                let sol = chol_solve(&l, &row);
                for c in 0..r {
                    block[[j, c]] = sol[c];
                }
            }
            tv.t_blocks[m] = block;
        }
    }
    Ok(tv)
}

/// Posterior-mean i-vector of one utterance. An empty utterance yields the
/// prior mean, zero.
pub fn extract_ivector(tv: &TvModel, utt: &Utterance) -> Result<IVector> {
    let stats = accumulate_stats(&tv.ubm, utt)?;
    let post = ivector_posterior(tv, &stats)?;
    Ok(IVector { w: post.mean })
}

/// `UBM v1` text format: header, weight row, M mean rows, M variance rows.
pub fn ubm_to_text(ubm: &Ubm) -> String {
    let mut out = String::new();
    writeln!(out, "UBM v1 {} {}", ubm.m, ubm.d).unwrap();
    crate::textio::push_row(&mut out, ubm.weights.iter().copied());
    for m in 0..ubm.m {
        crate::textio::push_row(&mut out, ubm.means.row(m).iter().copied());
    }
    for m in 0..ubm.m {
        crate::textio::push_row(&mut out, ubm.vars.row(m).iter().copied());
    }
    out
}

pub fn ubm_from_text(text: &str) -> Result<Ubm> {
    let what = "ubm file";
    let mut toks = Tokens::new(what, text);
    toks.expect("UBM")?;
    toks.expect("v1")?;
    let m = toks.next_usize()?;
    let d = toks.next_usize()?;
    let mut weights = Array1::zeros(m);
    for i in 0..m {
        weights[i] = toks.next_f64()?;
    }
    let mut means = Array2::zeros((m, d));
    for i in 0..m {
        for j in 0..d {
            means[[i, j]] = toks.next_f64()?;
        }
    }
    let mut vars = Array2::zeros((m, d));
    for i in 0..m {
        for j in 0..d {
            vars[[i, j]] = toks.next_f64()?;
        }
    }
    if !toks.finished() {
        return Err(Error::parse(what, "trailing tokens"));
    }
    Ok(Ubm {
        m,
        d,
        weights,
        means,
        vars,
    })
}

/// `TV v1` text format: header then M*D rows of R floats (component blocks
/// stacked in order).
pub fn tv_to_text(tv: &TvModel) -> String {
    let mut out = String::new();
    writeln!(out, "TV v1 {} {} {}", tv.ubm.m, tv.ubm.d, tv.r).unwrap();
    for block in &tv.t_blocks {
        for j in 0..tv.ubm.d {
            crate::textio::push_row(&mut out, block.row(j).iter().copied());
        }
    }
    out
}

/// Parse a `TV v1` file against its UBM.
pub fn tv_from_text(text: &str, ubm: &Ubm) -> Result<TvModel> {
    let what = "tv file";
    let mut toks = Tokens::new(what, text);
    toks.expect("TV")?;
    toks.expect("v1")?;
    let m = toks.next_usize()?;
    let d = toks.next_usize()?;
    let r = toks.next_usize()?;
    if m != ubm.m || d != ubm.d {
        return Err(Error::dimension(format!(
            "TV file is {m}x{d}, UBM is {}x{}",
            ubm.m, ubm.d
        )));
    }
    let mut t_blocks = Vec::with_capacity(m);
    for _ in 0..m {
        let mut block = Array2::zeros((d, r));
        for j in 0..d {
            for c in 0..r {
                block[[j, c]] = toks.next_f64()?;
            }
        }
        t_blocks.push(block);
    }
    if !toks.finished() {
        return Err(Error::parse(what, "trailing tokens"));
    }
    Ok(TvModel {
        ubm: ubm.clone(),
        r,
        t_blocks,
    })
}

pub fn save_ubm(ubm: &Ubm, path: &Path) -> Result<()> {
    std::fs::write(path, ubm_to_text(ubm)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_ubm(path: &Path) -> Result<Ubm> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    ubm_from_text(&text)
}

pub fn save_tv(tv: &TvModel, path: &Path) -> Result<()> {
    std::fs::write(path, tv_to_text(tv)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_tv(path: &Path, ubm: &Ubm) -> Result<TvModel> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    tv_from_text(&text, ubm)
}
