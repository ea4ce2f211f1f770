//! Python bindings for the main adaptlab types and operations: corpus
//! generation, source training, layer-selective adaptation, and frame-error
//! evaluation.

use adaptlab::corpus::{
    default_age_profile, generate_corpus, load_corpus, save_corpus, warp_features, Age,
    CorpusSpec,
};
use adaptlab::harness::ModelSpec;
use adaptlab::ivector::{load_tv, load_ubm, save_tv, save_ubm, train_tv, train_ubm, TvModel};
use adaptlab::network::{
    frame_error, load_network, pretrain_layerwise, save_network, TrainConfig,
};
use adaptlab::rng::{derive, tag};
use adaptlab::transfer::{adapt, mask_from_config, AdaptConfig, ScheduleSpec};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::path::PathBuf;

fn err(e: adaptlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A labeled frame corpus (one partition: train or test).
#[pyclass(name = "Corpus")]
#[derive(Clone)]
struct PyCorpus {
    inner: adaptlab::Corpus,
}

#[pymethods]
impl PyCorpus {
    #[getter]
    fn classes(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn feat_dim(&self) -> usize {
        self.inner.d
    }

    fn total_frames(&self) -> usize {
        self.inner.total_frames()
    }

    fn duration_minutes(&self) -> f64 {
        self.inner.duration_minutes()
    }

    fn num_utterances(&self) -> usize {
        self.inner.utterances.len()
    }

    fn ages(&self) -> Vec<String> {
        self.inner.ages().iter().map(|a| a.to_string()).collect()
    }

    /// Utterances of one age ("adult" or 6..14).
    fn filter_age(&self, age: &str) -> PyResult<PyCorpus> {
        let age: Age = age.parse().map_err(err)?;
        Ok(PyCorpus {
            inner: self.inner.filter_age(age),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_corpus(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PyCorpus> {
        Ok(PyCorpus {
            inner: load_corpus(&path).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(K={}, D={}, utterances={}, frames={})",
            self.inner.k,
            self.inner.d,
            self.inner.utterances.len(),
            self.inner.total_frames()
        )
    }
}

/// An acoustic model: the p-norm network plus its frozen i-vector
/// front end.
#[pyclass(name = "Model")]
struct PyModel {
    net: adaptlab::Network,
    tv: Option<TvModel>,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn depth(&self) -> usize {
        self.net.depth()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    /// Fraction of frames whose argmax posterior misses the label.
    fn frame_error(&self, corpus: &PyCorpus) -> PyResult<f64> {
        frame_error(&self.net, &corpus.inner, self.tv.as_ref()).map_err(err)
    }

    /// Adapt selected layers on child data.
    ///
    /// `config` follows the `bottom:k | top:k | sym:n | all` grammar and
    /// `schedule` is `sim`, `disjoint-sym:n:rounds`, or
    /// `disjoint-alt:n:rounds`.
    #[pyo3(signature = (corpus, config, budget_frames, seed, schedule="sim"))]
    fn adapt(
        &self,
        corpus: &PyCorpus,
        config: &str,
        budget_frames: usize,
        seed: u64,
        schedule: &str,
    ) -> PyResult<PyModel> {
        let config: AdaptConfig = config.parse().map_err(err)?;
        let schedule: ScheduleSpec = schedule.parse().map_err(err)?;
        let resolved = schedule.resolve(self.net.depth()).map_err(err)?;
        let params = adaptlab::harness::TrainParams::default();
        let cfg = TrainConfig { seed, ..params.adapt };
        let result = adapt(
            &self.net,
            &corpus.inner,
            self.tv.as_ref(),
            &config,
            &resolved,
            &cfg,
            budget_frames,
        )
        .map_err(err)?;
        Ok(PyModel {
            net: result.network,
            tv: self.tv.clone(),
        })
    }

    /// Write PREFIX.net (and PREFIX.ubm / PREFIX.tv when present).
    fn save(&self, prefix: PathBuf) -> PyResult<()> {
        save_network(&self.net, &prefix.with_extension("net")).map_err(err)?;
        if let Some(tv) = &self.tv {
            save_ubm(&tv.ubm, &prefix.with_extension("ubm")).map_err(err)?;
            save_tv(tv, &prefix.with_extension("tv")).map_err(err)?;
        }
        Ok(())
    }

    #[staticmethod]
    fn load(prefix: PathBuf) -> PyResult<PyModel> {
        let net = load_network(&prefix.with_extension("net")).map_err(err)?;
        let tv = if net.ivec_dim > 0 {
            let ubm = load_ubm(&prefix.with_extension("ubm")).map_err(err)?;
            Some(load_tv(&prefix.with_extension("tv"), &ubm).map_err(err)?)
        } else {
            None
        };
        Ok(PyModel { net, tv })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(depth={}, params={}, ivector_dim={})",
            self.net.depth(),
            self.net.param_count(),
            self.net.ivec_dim
        )
    }
}

/// Generate the (train, test) corpus pair of a corpus spec.
#[pyfunction]
fn gen_corpus(spec_text: &str) -> PyResult<(PyCorpus, PyCorpus)> {
    let spec = CorpusSpec::parse(spec_text).map_err(err)?;
    let pair = generate_corpus(&spec).map_err(err)?;
    Ok((
        PyCorpus { inner: pair.train },
        PyCorpus { inner: pair.test },
    ))
}

/// Train the adult front end and source network on a corpus.
///
/// `model_spec` uses the same key=value grammar as the CLI's `--arch` file;
/// pass an empty string for the desk defaults.
#[pyfunction]
#[pyo3(signature = (train_corpus, model_spec=""))]
fn train_source(train_corpus: &PyCorpus, model_spec: &str) -> PyResult<PyModel> {
    let model = ModelSpec::parse(model_spec).map_err(err)?;
    let adult = train_corpus.inner.filter_age(Age::Adult);
    let corpus = if adult.utterances.is_empty() {
        &train_corpus.inner
    } else {
        &adult
    };
    let tv = if model.arch.ivector_dim > 0 {
        let (ubm, _) = train_ubm(
            corpus,
            model.arch.ubm_components,
            model.arch.ubm_iters,
            derive(model.train.base.seed, &[tag("ubm")]),
        )
        .map_err(err)?;
        Some(
            train_tv(
                &ubm,
                corpus,
                model.arch.ivector_dim,
                model.arch.tv_iters,
                derive(model.train.base.seed, &[tag("tv")]),
            )
            .map_err(err)?,
        )
    } else {
        None
    };
    let arch = model.arch.network_arch(corpus.d, corpus.k);
    let (net, _) = pretrain_layerwise(corpus, tv.as_ref(), &arch, &model.train.base).map_err(err)?;
    Ok(PyModel { net, tv })
}

/// Default per-age variability profile as (alpha, gamma, epsilon).
#[pyfunction]
fn age_profile(age: &str) -> PyResult<(f64, f64, f64)> {
    let age: Age = age.parse().map_err(err)?;
    let p = default_age_profile(age).map_err(err)?;
    Ok((p.alpha, p.gamma, p.epsilon))
}

/// Spectral-compression warp of one feature frame.
#[pyfunction]
fn warp_frame(frame: Vec<f64>, alpha: f64) -> PyResult<Vec<f64>> {
    warp_features(&frame, alpha).map_err(err)
}

/// Layer-index set of an adaptation configuration at a given depth.
#[pyfunction]
fn config_mask(depth: usize, config: &str) -> PyResult<Vec<usize>> {
    let config: AdaptConfig = config.parse().map_err(err)?;
    Ok(mask_from_config(depth, &config)
        .map_err(err)?
        .into_iter()
        .collect())
}

#[pymodule]
fn adaptlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(gen_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train_source, m)?)?;
    m.add_function(wrap_pyfunction!(age_profile, m)?)?;
    m.add_function(wrap_pyfunction!(warp_frame, m)?)?;
    m.add_function(wrap_pyfunction!(config_mask, m)?)?;
    Ok(())
}
