//! Mini-batch training loop, history and checkpoints.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::grad::{encode, nll_loss, nll_loss_and_gradient, BasisBatch, Code};
use super::BornMachine;
use crate::dataset::{validate_equal_sizes, MeasurementDataset};
use crate::error::{Error, Result};
use crate::io::atomic_write_str;
use crate::mps::{read_mps, write_mps, Mps, PauliBasis};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub cut: usize,
    pub top_k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub bases: Vec<PauliBasis>,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Rescale the gradient when its Euclidean norm exceeds this.
    pub grad_clip: Option<f64>,
    /// Stop when the loss improved by less than `plateau_tol` over this many epochs.
    pub plateau_window: usize,
    pub plateau_tol: f64,
    pub spectrum: Option<SpectrumRequest>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bases: vec![PauliBasis::X, PauliBasis::Z],
            batch_size: 500,
            epochs: 100,
            adam: AdamConfig::default(),
            seed: 0,
            grad_clip: None,
            plateau_window: 10,
            plateau_tol: 1e-5,
            spectrum: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bases.is_empty() {
            return Err(Error::Validation("at least one basis is required".into()));
        }
        let set: BTreeSet<_> = self.bases.iter().collect();
        if set.len() != self.bases.len() {
            return Err(Error::Validation("bases must be distinct".into()));
        }
        if !(self.adam.learning_rate >= 0.0) || !self.adam.learning_rate.is_finite() {
            return Err(Error::Validation(format!("invalid learning rate {}", self.adam.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Validation("batch_size and epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) || self.adam.eps <= 0.0 {
            return Err(Error::Validation("Adam betas must lie in [0, 1) and eps > 0".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Validation("grad_clip must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub loss_minus_entropy: f64,
    pub fidelity: Option<f64>,
    pub spectrum: Option<Vec<f64>>,
    pub floored: usize,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Sum of the Shannon entropies of the training sets.
    pub data_entropy: f64,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV without wall time so that reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,loss_minus_entropy,fidelity,spectrum\n");
        for r in &self.records {
            let fid = r.fidelity.map(|f| format!("{f:.12e}")).unwrap_or_default();
            let spec = r
                .spectrum
                .as_ref()
                .map(|v| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{},{}\n",
                r.epoch, r.loss, r.loss_minus_entropy, fid, spec
            ));
        }
        s
    }
}

/// Analytic gradient in the model's parameter layout.
pub fn nll_gradient(model: &BornMachine, batches: &[BasisBatch]) -> Result<Vec<f64>> {
    let (_, g) = nll_loss_and_gradient(model.psi(), batches)?;
    Ok(model.flatten_gradient(&g))
}

fn entropy_of_counts(b: &BasisBatch) -> f64 {
    let t = b.total as f64;
    b.groups
        .iter()
        .map(|&(_, m)| {
            let p = m as f64 / t;
            -p * p.ln()
        })
        .sum()
}

fn fidelity(model: &Mps, reference: &Mps) -> Result<f64> {
    let ov = reference.inner_product(model)?;
    Ok(ov.norm_sqr() / (reference.norm_squared()? * model.norm_squared()?))
}

fn describe_batch(basis: PauliBasis, codes: &[Code], n: usize) -> String {
    let shown: Vec<String> = codes
        .iter()
        .take(4)
        .map(|&c| (0..n).map(|k| char::from(b'0' + ((c >> k) & 1) as u8)).collect())
        .collect();
    format!("basis {basis}, batch of {} starting {}", codes.len(), shown.join(" "))
}

fn tag_error(e: Error, epoch: usize, step: usize, detail: impl FnOnce() -> String) -> Error {
    match e {
        Error::NonFiniteLoss { detail: d, .. } => Error::NonFiniteLoss {
            epoch,
            step,
            detail: format!("{d}; {}", detail()),
        },
        other => other,
    }
}

/// Train `model` on one dataset per basis. Epochs shuffle each basis
/// independently and step through the batches in lockstep.
pub fn train(
    model: BornMachine,
    datasets: &[MeasurementDataset],
    config: &TrainConfig,
    reference: Option<&Mps>,
) -> Result<(BornMachine, TrainHistory)> {
    config.validate()?;
    validate_equal_sizes(datasets)?;
    let want: BTreeSet<PauliBasis> = config.bases.iter().copied().collect();
    let have: BTreeSet<PauliBasis> = datasets.iter().map(|d| d.basis).collect();
    if want != have {
        return Err(Error::Validation(format!(
            "dataset bases {:?} do not match configured bases {:?}",
            have, want
        )));
    }
    let n = model.n_sites();
    if datasets[0].n_sites != n {
        return Err(Error::SizeMismatch(datasets[0].n_sites, n));
    }
    if n > 64 {
        return Err(Error::InvalidArgument("bitstrings longer than 64 sites are not supported".into()));
    }
    if let Some(r) = reference {
        if r.n_sites() != n {
            return Err(Error::SizeMismatch(r.n_sites(), n));
        }
    }

    // fixed basis order so the loss does not depend on how bases were listed
    let mut sets: Vec<&MeasurementDataset> = datasets.iter().collect();
    sets.sort_by_key(|d| d.basis);
    let codes: Vec<Vec<Code>> = sets.iter().map(|d| d.shots.iter().map(|s| encode(s)).collect()).collect();
    let full: Vec<BasisBatch> = sets
        .iter()
        .zip(&codes)
        .map(|(d, c)| BasisBatch::from_codes(d.basis, c))
        .collect();
    let data_entropy: f64 = full.iter().map(entropy_of_counts).sum();

    let mut model = model;
    let mut params = model.params();
    let mut state = AdamState::new(params.len());
    let mut history = TrainHistory {
        records: Vec::new(),
        data_entropy,
        stopped_early: false,
    };
    let size = codes[0].len();
    let steps = size.div_ceil(config.batch_size);
    let start = Instant::now();

    for epoch in 0..config.epochs {
        let orders: Vec<Vec<usize>> = sets
            .iter()
            .map(|d| {
                let mut idx: Vec<usize> = (0..size).collect();
                let mut r = rng::substream(config.seed, &format!("shuffle-{}", d.basis), epoch as u64);
                idx.shuffle(&mut r);
                idx
            })
            .collect();
        for step in 0..steps {
            let lo = step * config.batch_size;
            let hi = (lo + config.batch_size).min(size);
            let batches: Vec<BasisBatch> = sets
                .iter()
                .enumerate()
                .map(|(b, d)| {
                    let c: Vec<Code> = orders[b][lo..hi].iter().map(|&i| codes[b][i]).collect();
                    BasisBatch::from_codes(d.basis, &c)
                })
                .collect();
            let (_, g) = nll_loss_and_gradient(model.psi(), &batches).map_err(|e| {
                tag_error(e, epoch, step, || {
                    let c: Vec<Code> = orders[0][lo..hi].iter().map(|&i| codes[0][i]).collect();
                    describe_batch(sets[0].basis, &c, n)
                })
            })?;
            let mut grads = model.flatten_gradient(&g);
            if let Some(clip) = config.grad_clip {
                let norm = grads.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > clip {
                    grads.iter_mut().for_each(|x| *x *= clip / norm);
                }
            }
            adam_step(&mut params, &grads, &mut state, &config.adam);
            model.set_params(&params)?;
        }

        let eval = nll_loss(model.psi(), &full).map_err(|e| tag_error(e, epoch, steps, || "full-dataset evaluation".into()))?;
        let fid = reference.map(|r| fidelity(model.psi(), r)).transpose()?;
        let spectrum = match config.spectrum {
            Some(req) => {
                let mut s = model.normalized()?.entanglement_spectrum(req.cut)?;
                s.truncate(req.top_k);
                Some(s)
            }
            None => None,
        };
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            loss: eval.loss,
            loss_minus_entropy: eval.loss - data_entropy,
            fidelity: fid,
            spectrum,
            floored: eval.floored,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        let w = config.plateau_window;
        let k = history.records.len();
        if w > 0 && k > w {
            let gain = history.records[k - 1 - w].loss - history.records[k - 1].loss;
            if gain < config.plateau_tol {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((model, history))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: TrainConfig,
    pub seed: u64,
    pub epoch: usize,
    pub loss: Option<f64>,
    pub fidelity: Option<f64>,
    pub bond_dim: usize,
    pub complex_valued: bool,
    /// How the initial tensors were drawn.
    pub init: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `path` (binary MPS) and `path.json` (metadata).
pub fn write_checkpoint(path: &Path, model: &BornMachine, meta: &CheckpointMeta) -> Result<()> {
    write_mps(path, model.psi())?;
    atomic_write_str(&sidecar_path(path), &serde_json::to_string_pretty(meta)?)
}

pub fn read_checkpoint(path: &Path) -> Result<(BornMachine, CheckpointMeta)> {
    let psi = read_mps(path)?;
    let meta: CheckpointMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let model = BornMachine::from_mps(&psi, meta.bond_dim.max(psi.max_bond()))?;
    Ok((model, meta))
}
