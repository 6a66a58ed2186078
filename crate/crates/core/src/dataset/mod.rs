//! Simulated projective measurements and their empirical statistics.

mod convergence;
mod file;

pub use convergence::{monte_carlo_convergence, ConvergenceOptions, ConvergenceReport, Observable};
pub use file::{parse_dataset, read_dataset, render_dataset, write_dataset};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mps::{Mps, PauliBasis};
use crate::rng;

/// Shots per basis unless configured otherwise.
pub const DEFAULT_SHOTS: usize = 30_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementDataset {
    pub n_sites: usize,
    pub basis: PauliBasis,
    pub shots: Vec<Vec<u8>>,
    pub seed: u64,
}

impl MeasurementDataset {
    pub fn new(n_sites: usize, basis: PauliBasis, shots: Vec<Vec<u8>>, seed: u64) -> Result<Self> {
        if shots.is_empty() {
            return Err(Error::Validation("a dataset needs at least one shot".into()));
        }
        for (i, s) in shots.iter().enumerate() {
            if s.len() != n_sites || s.iter().any(|&b| b > 1) {
                return Err(Error::Validation(format!("shot {i} is not a {n_sites}-site bitstring")));
            }
        }
        Ok(Self {
            n_sites,
            basis,
            shots,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }
}

/// Rotate `state` into `basis` and draw `n` shots from the stream for
/// `(seed, basis)`.
pub fn simulate_measurements(state: &Mps, basis: PauliBasis, n: usize, seed: u64) -> Result<MeasurementDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let mut r = rng::stream(seed, &format!("measure-{basis}"));
    let shots = state.rotate_basis(basis).sample(n, &mut r)?;
    MeasurementDataset::new(state.n_sites(), basis, shots, seed)
}

/// Training inputs from several bases must all have the same size.
pub fn validate_equal_sizes(sets: &[MeasurementDataset]) -> Result<()> {
    let Some(first) = sets.first() else {
        return Err(Error::Validation("no datasets given".into()));
    };
    for d in sets {
        if d.n_sites != first.n_sites {
            return Err(Error::Validation(format!(
                "datasets disagree on chain length: {} vs {}",
                first.n_sites, d.n_sites
            )));
        }
        if d.len() != first.len() {
            return Err(Error::Validation(format!(
                "basis {} has {} shots but basis {} has {}",
                first.basis,
                first.len(),
                d.basis,
                d.len()
            )));
        }
    }
    for (i, a) in sets.iter().enumerate() {
        if sets[..i].iter().any(|b| b.basis == a.basis) {
            return Err(Error::Validation(format!("basis {} listed twice", a.basis)));
        }
    }
    Ok(())
}

/// Relative frequencies of observed bitstrings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    pub n_sites: usize,
    pub probs: BTreeMap<Vec<u8>, f64>,
}

impl EmpiricalDistribution {
    pub fn from_shots(n_sites: usize, shots: &[Vec<u8>]) -> Result<Self> {
        if shots.is_empty() {
            return Err(Error::Validation("no shots to count".into()));
        }
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for s in shots {
            *counts.entry(s.clone()).or_default() += 1;
        }
        let total = shots.len() as f64;
        Ok(Self {
            n_sites,
            probs: counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect(),
        })
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, bits: &[u8]) -> f64 {
        self.probs.get(bits).copied().unwrap_or(0.0)
    }
}

pub fn empirical_distribution(d: &MeasurementDataset) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::from_shots(d.n_sites, &d.shots)
}

/// Born distribution of `state` measured in `basis`, by enumeration
/// (chains of at most 20 sites). Zero-probability strings are omitted.
pub fn born_distribution(state: &Mps, basis: PauliBasis) -> Result<EmpiricalDistribution> {
    let n = state.n_sites();
    if n > 20 {
        return Err(Error::TooLarge { n, limit: 20 });
    }
    let psi = state.rotate_basis(basis).to_statevector()?;
    let z: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if z <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let probs = psi
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, a)| {
            let bits = (0..n).map(|k| ((i >> (n - 1 - k)) & 1) as u8).collect();
            (bits, a.norm_sqr() / z)
        })
        .collect();
    Ok(EmpiricalDistribution { n_sites: n, probs })
}

/// `−Σ p ln p`.
pub fn shannon_entropy(p: &EmpiricalDistribution) -> f64 {
    p.probs.values().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `(1 − α)⁻¹ ln Σ p^α`; `α = 1` gives the Shannon entropy.
pub fn renyi_entropy(p: &EmpiricalDistribution, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("Rényi order must be positive, got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(shannon_entropy(p));
    }
    let s: f64 = p.probs.values().map(|&x| x.powf(alpha)).sum();
    Ok((s.ln() / (1.0 - alpha)).max(0.0))
}

/// `½ Σ |p − q|` over the union of supports.
pub fn total_variation(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> f64 {
    let mut s = 0.0;
    for (k, &a) in &p.probs {
        s += (a - q.get(k)).abs();
    }
    for (k, &b) in &q.probs {
        if !p.probs.contains_key(k) {
            s += b;
        }
    }
    0.5 * s
}

#[cfg(test)]
mod tests;
