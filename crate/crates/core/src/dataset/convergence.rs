//! How many shots until sampled observables settle near their exact values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{born_distribution, renyi_entropy, shannon_entropy};
use crate::error::{Error, Result};
use crate::metrics::magnetization;
use crate::mps::{Mps, PauliBasis, Sampler};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Magnetization,
    Renyi1,
    Renyi2,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::Magnetization, Observable::Renyi1, Observable::Renyi2];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Magnetization => "magnetization",
            Observable::Renyi1 => "renyi_h1",
            Observable::Renyi2 => "renyi_h2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub total: usize,
    pub checkpoint: usize,
    pub trajectories: usize,
    /// Relative band around the exact value.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            total: 100_000,
            checkpoint: 1_000,
            trajectories: 50,
            tolerance: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub observables: Vec<Observable>,
    pub exact: Vec<f64>,
    /// `estimates[o][t][c]`: observable `o`, trajectory `t`, checkpoint `c`.
    pub estimates: Vec<Vec<Vec<f64>>>,
    /// Shots after which every trajectory stays inside the band, per observable.
    pub converged_at: Vec<Option<usize>>,
    pub options: ConvergenceOptions,
}

impl ConvergenceReport {
    /// `trajectory,checkpoint,observable,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trajectory,checkpoint,observable,value\n");
        let checkpoints = self.estimates.first().and_then(|o| o.first()).map_or(0, |t| t.len());
        for t in 0..self.options.trajectories {
            for c in 0..checkpoints {
                for (o, obs) in self.observables.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{t},{},{},{}",
                        (c + 1) * self.options.checkpoint,
                        obs.name(),
                        self.estimates[o][t][c]
                    );
                }
            }
        }
        s
    }
}

fn exact_value(state: &Mps, obs: Observable) -> Result<f64> {
    match obs {
        Observable::Magnetization => magnetization(state),
        Observable::Renyi1 => Ok(shannon_entropy(&born_distribution(state, PauliBasis::Z)?)),
        Observable::Renyi2 => renyi_entropy(&born_distribution(state, PauliBasis::Z)?, 2.0),
    }
}

fn estimate(obs: Observable, counts: &BTreeMap<Vec<u8>, usize>, total: usize, sz_sum: f64, n: usize) -> f64 {
    let tot = total as f64;
    match obs {
        Observable::Magnetization => sz_sum / (tot * n as f64),
        Observable::Renyi1 => counts
            .values()
            .map(|&c| {
                let p = c as f64 / tot;
                -p * p.ln()
            })
            .sum(),
        Observable::Renyi2 => {
            let s: f64 = counts.values().map(|&c| (c as f64 / tot).powi(2)).sum();
            -s.ln()
        }
    }
}

/// Cumulative Z-basis estimates of each observable along independent
/// sampling trajectories.
pub fn monte_carlo_convergence(state: &Mps, observables: &[Observable], opts: &ConvergenceOptions) -> Result<ConvergenceReport> {
    if opts.checkpoint == 0 || opts.total == 0 || opts.total % opts.checkpoint != 0 {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {} must divide total {}",
            opts.checkpoint, opts.total
        )));
    }
    if opts.trajectories == 0 || observables.is_empty() {
        return Err(Error::InvalidArgument("need at least one trajectory and one observable".into()));
    }
    let n = state.n_sites();
    let exact: Vec<f64> = observables.iter().map(|&o| exact_value(state, o)).collect::<Result<_>>()?;
    state.norm_squared()?;
    let (canon, _) = state.canonicalize(0)?;
    let checkpoints = opts.total / opts.checkpoint;

    let per_traj: Vec<Vec<Vec<f64>>> = (0..opts.trajectories)
        .into_par_iter()
        .map(|t| {
            let sampler = Sampler::new(&canon);
            let mut r = rng::substream(opts.seed, "mc-trajectory", t as u64);
            let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
            let mut sz_sum = 0.0;
            let mut out = vec![Vec::with_capacity(checkpoints); observables.len()];
            for c in 0..checkpoints {
                for _ in 0..opts.checkpoint {
                    let shot = sampler.draw(&mut r);
                    sz_sum += shot.iter().map(|&b| if b == 0 { 0.5 } else { -0.5 }).sum::<f64>();
                    *counts.entry(shot).or_default() += 1;
                }
                let taken = (c + 1) * opts.checkpoint;
                for (o, &obs) in observables.iter().enumerate() {
                    out[o].push(estimate(obs, &counts, taken, sz_sum, n));
                }
            }
            out
        })
        .collect();

    let estimates: Vec<Vec<Vec<f64>>> = (0..observables.len())
        .map(|o| per_traj.iter().map(|t| t[o].clone()).collect())
        .collect();
    let converged_at = (0..observables.len())
        .map(|o| {
            let band = opts.tolerance * exact[o].abs();
            let inside = |c: usize| estimates[o].iter().all(|traj| (traj[c] - exact[o]).abs() <= band);
            // last checkpoint that is outside for some trajectory
            let last_out = (0..checkpoints).rev().find(|&c| !inside(c));
            match last_out {
                None => Some(opts.checkpoint),
                Some(c) if c + 1 < checkpoints => Some((c + 2) * opts.checkpoint),
                Some(_) => None,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        observables: observables.to_vec(),
        exact,
        estimates,
        converged_at,
        options: opts.clone(),
    })
}
