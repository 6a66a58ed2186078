//! Born machine: an unnormalised MPS whose squared amplitudes, divided by
//! the norm, model measurement statistics in each Pauli basis.

mod adam;
mod grad;
mod train;

#[cfg(test)]
mod tests;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseTensor, ZERO};
use crate::mps::Mps;
use crate::rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use grad::{decode, encode, group, nll_loss, nll_loss_and_gradient, BasisBatch, Code, LossEval, PROBABILITY_FLOOR};
pub use train::{
    nll_gradient, read_checkpoint, train, write_checkpoint, CheckpointMeta, EpochRecord, SpectrumRequest,
    TrainConfig, TrainHistory,
};

#[derive(Clone, Debug)]
pub struct BornMachine {
    psi: Mps,
    bond_dim: usize,
}

/// Random model with every interior bond equal to `bond_dim` and entries
/// uniform in `[0, 1)` (imaginary parts too when `complex_valued`).
pub fn init_model(n_sites: usize, bond_dim: usize, complex_valued: bool, seed: u64) -> Result<BornMachine> {
    if n_sites < 2 || bond_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "Born machine needs n_sites >= 2 and bond_dim >= 1 (got {n_sites}, {bond_dim})"
        )));
    }
    let mut r = rng::stream(seed, "init");
    let sites = (0..n_sites)
        .map(|k| {
            let dl = if k == 0 { 1 } else { bond_dim };
            let dr = if k + 1 == n_sites { 1 } else { bond_dim };
            DenseTensor::from_fn(vec![dl, 2, dr], |_| {
                let re = r.gen::<f64>();
                let im = if complex_valued { r.gen::<f64>() } else { 0.0 };
                C64::new(re, im)
            })
        })
        .collect();
    Ok(BornMachine {
        psi: Mps::new(sites, complex_valued)?,
        bond_dim,
    })
}

impl BornMachine {
    /// Wrap an existing state, zero-padding interior bonds up to `bond_dim`.
    pub fn from_mps(psi: &Mps, bond_dim: usize) -> Result<Self> {
        let n = psi.n_sites();
        if n < 2 || bond_dim == 0 {
            return Err(Error::InvalidArgument("Born machine needs n_sites >= 2 and bond_dim >= 1".into()));
        }
        if psi.max_bond() > bond_dim {
            return Err(Error::InvalidArgument(format!(
                "state bond {} exceeds requested bond dimension {bond_dim}",
                psi.max_bond()
            )));
        }
        let sites = psi
            .sites()
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let dl = if k == 0 { 1 } else { bond_dim };
                let dr = if k + 1 == n { 1 } else { bond_dim };
                let (sl, sr) = (t.shape()[0], t.shape()[2]);
                DenseTensor::from_fn(vec![dl, 2, dr], |i| {
                    if i[0] < sl && i[2] < sr {
                        t.get(&[i[0], i[1], i[2]])
                    } else {
                        ZERO
                    }
                })
            })
            .collect();
        Ok(Self {
            psi: Mps::new(sites, psi.complex_valued())?,
            bond_dim,
        })
    }

    pub fn psi(&self) -> &Mps {
        &self.psi
    }

    pub fn into_mps(self) -> Mps {
        self.psi
    }

    pub fn n_sites(&self) -> usize {
        self.psi.n_sites()
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn complex_valued(&self) -> bool {
        self.psi.complex_valued()
    }

    /// Real parameters: one per entry for real models, `(re, im)` pairs for
    /// complex ones.
    pub fn parameter_count(&self) -> usize {
        let per = if self.complex_valued() { 2 } else { 1 };
        self.psi.entry_count() * per
    }

    pub fn params(&self) -> Vec<f64> {
        let complex = self.complex_valued();
        let mut out = Vec::with_capacity(self.parameter_count());
        for t in self.psi.sites() {
            for z in t.data() {
                out.push(z.re);
                if complex {
                    out.push(z.im);
                }
            }
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.parameter_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                p.len()
            )));
        }
        let complex = self.complex_valued();
        let mut it = p.iter();
        for t in self.psi.sites_mut() {
            for z in t.data_mut() {
                let re = *it.next().expect("length checked");
                let im = if complex { *it.next().expect("length checked") } else { 0.0 };
                *z = C64::new(re, im);
            }
        }
        Ok(())
    }

    /// Flatten a per-entry Wirtinger gradient into the parameter layout.
    pub fn flatten_gradient(&self, g: &[Vec<C64>]) -> Vec<f64> {
        let complex = self.complex_valued();
        let mut out = Vec::with_capacity(self.parameter_count());
        for site in g {
            for z in site {
                out.push(z.re);
                if complex {
                    out.push(z.im);
                }
            }
        }
        out
    }

    /// Normalised copy of the state.
    pub fn normalized(&self) -> Result<Mps> {
        let z = self.psi.norm_squared()?;
        let mut out = self.psi.clone();
        out.scale_site(0, C64::new(1.0 / z.sqrt(), 0.0));
        Ok(out)
    }
}
