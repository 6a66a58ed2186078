//! Reference states: exact diagonalisation, DMRG, adiabatic parameter sweeps
//! and critical-point location.

mod dmrg;
mod sweep;

pub use dmrg::{add_noise, dmrg_excited_state, dmrg_ground_state, DmrgOptions};
pub use sweep::{
    adiabatic_sweep, locate_critical_point, sweep_csv, write_sweep_csv, CriticalEstimate, Solver, SweepFamily, SweepLine,
    SweepOptions, SweepPoint,
};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{LanczosOptions, ZERO};
use crate::models::SpinOperator;
use crate::mps::Mps;

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    /// Normalised, canonical centre 0.
    pub state: Mps,
    pub energy: f64,
    /// `E₁ − E₀` when computed.
    pub gap: Option<f64>,
    pub converged: bool,
    /// Energy after each sweep (DMRG) or each eigenpair (exact).
    pub sweep_log: Vec<f64>,
    /// Largest truncated weight over the run.
    pub discarded_weight: f64,
}

/// Lowest `k` eigenpairs of `h` on the full space; the ground state is
/// returned as an MPS with the gap set when `k ≥ 2`.
pub fn exact_ground_state(h: &SpinOperator, k: usize) -> Result<GroundStateResult> {
    let n = h.n_sites();
    let pairs = h.lowest(k.max(1), &LanczosOptions::default())?;
    let mut vec = pairs[0].1.clone();
    fix_phase(&mut vec);
    let state = Mps::from_statevector(&vec, n, 1 << n.div_ceil(2), 1e-12)?;
    let (state, _) = state.canonicalize(0)?;
    let energy = pairs[0].0;
    let gap = if pairs.len() >= 2 { Some((pairs[1].0 - energy).max(0.0)) } else { None };
    let mut resid = vec![ZERO; vec.len()];
    h.apply(&vec, &mut resid);
    let r: f64 = resid.iter().zip(&vec).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>().sqrt();
    Ok(GroundStateResult {
        state,
        energy,
        gap,
        converged: r < 1e-6,
        sweep_log: pairs.iter().map(|p| p.0).collect(),
        discarded_weight: 0.0,
    })
}

/// Make the largest-magnitude amplitude real positive; drop imaginary parts
/// that are pure round-off.
fn fix_phase(v: &mut [C64]) {
    let big = v.iter().copied().fold(ZERO, |a, z| if z.norm() > a.norm() { z } else { a });
    if big == ZERO {
        return;
    }
    let ph = (big / big.norm()).conj();
    v.iter_mut().for_each(|z| *z *= ph);
    let max_im = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im < 1e-12 * big.norm() {
        v.iter_mut().for_each(|z| z.im = 0.0);
    }
}

/// Rydberg excitations every `k` sites, both chain ends excited.
pub fn ordered_pattern(n: usize, k: usize) -> Result<Vec<u8>> {
    if !(2..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("crystal period {k} is not 2, 3 or 4")));
    }
    if n < 2 || (n - 1) % k != 0 {
        return Err(Error::InvalidArgument(format!(
            "{n} sites cannot hold a period-{k} pattern with both ends excited"
        )));
    }
    Ok((0..n).map(|i| u8::from(i % k == 0)).collect())
}

/// `|⟨pattern|ψ⟩|² / ⟨ψ|ψ⟩` for the end-pinned period-`k` pattern.
pub fn phase_overlap(state: &Mps, k: usize) -> Result<f64> {
    let bits = ordered_pattern(state.n_sites(), k)?;
    let a = state.amplitude(&bits)?;
    Ok((a.norm_sqr() / state.norm_squared()?).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests;
