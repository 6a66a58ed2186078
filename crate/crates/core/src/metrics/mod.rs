//! Comparison of trained models with reference states.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{empirical_distribution, simulate_measurements, EmpiricalDistribution, MeasurementDataset};
use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::mps::{Mps, PauliBasis};
use crate::rng::derive_seed;
use crate::training::BornMachine;


const SZ: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];
const NUM: [[C64; 2]; 2] = [[ZERO, ZERO], [ZERO, ONE]];

/// `M = (1/N) Σ_i ⟨S_z^i⟩` with `S_z = σ_z / 2`.
pub fn magnetization(state: &Mps) -> Result<f64> {
    let z = state.local_expectations(&SZ)?;
    Ok(z.iter().map(|c| c.re).sum::<f64>() / (2.0 * state.n_sites() as f64))
}

/// Rydberg densities `⟨n_i⟩`.
pub fn densities(state: &Mps) -> Result<Vec<f64>> {
    Ok(state.local_expectations(&NUM)?.iter().map(|c| c.re).collect())
}

/// `G(r) = (1/(N−r)) Σ_i [⟨n_i n_{i+r}⟩ − ⟨n_i⟩⟨n_{i+r}⟩]`, exact.
pub fn correlation_function(state: &Mps, r: usize) -> Result<f64> {
    Ok(correlation_table(state)?
        .get(r.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("distance {r} outside 1..{}", state.n_sites())))?)
}

/// `G(r)` for `r = 1..N−1`.
pub fn correlation_table(state: &Mps) -> Result<Vec<f64>> {
    let n = state.n_sites();
    let dens = densities(state)?;
    let pairs = state.pair_expectations(&NUM, &NUM)?;
    Ok((1..n)
        .map(|r| {
            let s: f64 = (0..n - r).map(|i| pairs[i][i + r].re - dens[i] * dens[i + r]).sum();
            s / (n - r) as f64
        })
        .collect())
}

/// `G(r)` for `r = 1..N−1` estimated from Z-basis shots.
pub fn sampled_correlation_table(shots: &[Vec<u8>]) -> Result<Vec<f64>> {
    let n = shots.first().map(|s| s.len()).ok_or_else(|| Error::InvalidArgument("no shots".into()))?;
    if shots.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("shots of unequal length".into()));
    }
    let m = shots.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| shots.iter().map(|s| s[i] as f64).sum::<f64>() / m).collect();
    Ok((1..n)
        .map(|r| {
            let s: f64 = (0..n - r)
                .map(|i| {
                    let both = shots.iter().filter(|s| s[i] == 1 && s[i + r] == 1).count() as f64 / m;
                    both - mean[i] * mean[i + r]
                })
                .sum();
            s / (n - r) as f64
        })
        .collect())
}

/// `(Σ_v √(p(v) q(v)))²`.
pub fn classical_fidelity(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    if p.n_sites != q.n_sites {
        return Err(Error::SizeMismatch(p.n_sites, q.n_sites));
    }
    // iterate the smaller support; strings missing from either side add zero
    let (small, large) = if p.probs.len() <= q.probs.len() { (p, q) } else { (q, p) };
    let b: f64 = small.probs.iter().map(|(k, &a)| (a * large.get(k)).sqrt()).sum();
    Ok(b * b)
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn quantum_fidelity(a: &Mps, b: &Mps) -> Result<f64> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::SizeMismatch(a.n_sites(), b.n_sites()));
    }
    let ov = a.inner_product(b)?;
    Ok(ov.norm_sqr() / (a.norm_squared()? * b.norm_squared()?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Shots drawn per basis from each side.
    pub shots: usize,
    pub seed: u64,
    /// Also estimate `G(r)` from the model's Z-basis samples.
    pub sampled_correlations: bool,
}

impl EvalOptions {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            seed,
            sampled_correlations: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_sites: usize,
    /// Training bases, when known; used for the table label.
    pub trained_bases: Option<Vec<PauliBasis>>,
    pub complex_valued: bool,
    pub c_x: f64,
    pub c_y: f64,
    pub c_z: f64,
    pub quantum_fidelity: f64,
    pub loss_minus_entropy: Option<f64>,
    /// Exact `G(r)` of the model, `r = 1..N−1`.
    pub correlations: Vec<f64>,
    pub reference_correlations: Vec<f64>,
    pub sampled_correlations: Option<Vec<f64>>,
    pub magnetization: f64,
    pub reference_magnetization: f64,
    pub shots: usize,
    pub seed: u64,
    /// Bases whose reference side came from supplied data rather than fresh samples.
    pub reference_from_data: Vec<PauliBasis>,
}

pub const TABLE_HEADER: &str = "basis,field,c_x,c_y,c_z,loss_minus_entropy,fidelity";

impl MetricsReport {
    pub fn classical_fidelity(&self, basis: PauliBasis) -> f64 {
        match basis {
            PauliBasis::X => self.c_x,
            PauliBasis::Y => self.c_y,
            PauliBasis::Z => self.c_z,
        }
    }

    pub fn max_correlation_deviation(&self) -> f64 {
        self.correlations
            .iter()
            .zip(&self.reference_correlations)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row in the layout of `TABLE_HEADER`.
    pub fn table_row(&self) -> String {
        let label = self
            .trained_bases
            .as_ref()
            .map(|b| bases_label(b))
            .unwrap_or_else(|| "-".into());
        let field = if self.complex_valued { "complex" } else { "real" };
        let lms = self.loss_minus_entropy.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{label},{field},{:.6},{:.6},{:.6},{lms},{:.6}",
            self.c_x, self.c_y, self.c_z, self.quantum_fidelity
        )
    }

    pub fn to_table_csv(&self) -> String {
        format!("{TABLE_HEADER}\n{}\n", self.table_row())
    }
}

/// `"xz"` style label, letters in X, Y, Z order.
pub fn bases_label(bases: &[PauliBasis]) -> String {
    let mut b = bases.to_vec();
    b.sort();
    b.iter().map(|x| x.letter()).collect()
}

/// Sample model and reference in all three bases and compare.
pub fn evaluate(model: &BornMachine, reference: &Mps, shots: usize, seed: u64) -> Result<MetricsReport> {
    evaluate_with(model, reference, &[], &EvalOptions::new(shots, seed))
}

/// As [`evaluate`], but bases present in `data` use those shots as the
/// reference side of the classical fidelity (training data versus model).
pub fn evaluate_with(
    model: &BornMachine,
    reference: &Mps,
    data: &[MeasurementDataset],
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let n = model.n_sites();
    if reference.n_sites() != n {
        return Err(Error::Validation(format!(
            "model has {n} sites but reference has {}",
            reference.n_sites()
        )));
    }
    if let Some(d) = data.iter().find(|d| d.n_sites != n) {
        return Err(Error::Validation(format!(
            "model has {n} sites but {} data has {}",
            d.basis, d.n_sites
        )));
    }
    let psi = model.normalized()?;
    let per_basis: Vec<(f64, Option<MeasurementDataset>)> = PauliBasis::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &basis)| -> Result<(f64, Option<MeasurementDataset>)> {
            let ms = simulate_measurements(&psi, basis, opts.shots, derive_seed(opts.seed, "evaluate-model", i as u64))?;
            let mp = empirical_distribution(&ms)?;
            let rp = match data.iter().find(|d| d.basis == basis) {
                Some(d) => empirical_distribution(d)?,
                None => empirical_distribution(&simulate_measurements(
                    reference,
                    basis,
                    opts.shots,
                    derive_seed(opts.seed, "evaluate-reference", i as u64),
                )?)?,
            };
            Ok((classical_fidelity(&mp, &rp)?, (basis == PauliBasis::Z).then_some(ms)))
        })
        .collect::<Result<_>>()?;
    let sampled = if opts.sampled_correlations {
        let z = per_basis[2].1.as_ref().expect("z samples kept");
        Some(sampled_correlation_table(&z.shots)?)
    } else {
        None
    };
    Ok(MetricsReport {
        n_sites: n,
        trained_bases: None,
        complex_valued: model.complex_valued(),
        c_x: per_basis[0].0,
        c_y: per_basis[1].0,
        c_z: per_basis[2].0,
        quantum_fidelity: quantum_fidelity(reference, &psi)?,
        loss_minus_entropy: None,
        correlations: correlation_table(&psi)?,
        reference_correlations: correlation_table(reference)?,
        sampled_correlations: sampled,
        magnetization: magnetization(&psi)?,
        reference_magnetization: magnetization(reference)?,
        shots: opts.shots,
        seed: opts.seed,
        reference_from_data: data.iter().map(|d| d.basis).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len() as f64;
    let distinct = xs.iter().any(|&x| x != xs[0]);
    if xs.len() < 2 || !distinct {
        return Err(Error::InvalidArgument("a line fit needs at least two distinct x values".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}
