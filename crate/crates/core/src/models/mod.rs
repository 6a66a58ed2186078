//! Spin-chain Hamiltonians.
//!
//! Rydberg chain (qubit mapping `|g⟩ = |0⟩`, `|r⟩ = |1⟩`, `n = diag(0, 1)`):
//!
//! ```text
//! H = Σ_i (Ω/2) σ_t^i − Δ Σ_i n_i + Σ_{i<j, j−i ≤ R} C₆ / (a (j−i))⁶ n_i n_j
//! ```
//!
//! with `σ_t` either `σ_x` or `σ_y`. Anisotropic XY chain in a transverse
//! field, open boundaries:
//!
//! ```text
//! H = −J Σ_i [ (1+γ)/4 σ_x^i σ_x^{i+1} + (1−γ)/4 σ_y^i σ_y^{i+1} ] − (h/2) Σ_i σ_z^i
//! ```
//!
//! Both are available as a sparse operator on the full `2^n` space and as
//! matrix product operators.

mod mpo;
mod operator;

pub use mpo::Mpo;
pub use operator::{SpinOperator, DENSE_LIMIT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rabi frequency used when converting from SI units, rad/s (2π · 2 MHz).
pub const OMEGA_SI: f64 = 2.0 * std::f64::consts::PI * 2.0e6;
/// Van der Waals coefficient, m⁶/s.
pub const C6_SI: f64 = 5.4e-24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransverseAxis {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RydbergParams {
    pub omega: f64,
    pub delta: f64,
    pub spacing: f64,
    pub c6: f64,
    pub truncation_range: usize,
    pub transverse_axis: TransverseAxis,
}

impl RydbergParams {
    pub fn new(
        omega: f64,
        delta: f64,
        spacing: f64,
        c6: f64,
        truncation_range: usize,
        transverse_axis: TransverseAxis,
    ) -> Result<Self> {
        let p = Self {
            omega,
            delta,
            spacing,
            c6,
            truncation_range,
            transverse_axis,
        };
        p.validate()?;
        Ok(p)
    }

    /// Units of `Ω = 1`, `a = 1`: only `Δ/Ω` and `R_b/a` remain.
    pub fn dimensionless(delta_over_omega: f64, rb_over_a: f64) -> Result<Self> {
        Self::new(1.0, delta_over_omega, 1.0, rb_over_a.powi(6), 5, TransverseAxis::X)
    }

    /// Laboratory units: `Ω`, `Δ` in rad/s, `a` in metres, `C₆` in m⁶/s.
    pub fn from_si(omega: f64, delta: f64, spacing: f64, c6: f64) -> Result<Self> {
        Self::new(omega, delta, spacing, c6, 5, TransverseAxis::X)
    }

    pub fn with_range(mut self, range: usize) -> Result<Self> {
        self.truncation_range = range;
        self.validate()?;
        Ok(self)
    }

    pub fn with_axis(mut self, axis: TransverseAxis) -> Self {
        self.transverse_axis = axis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega.is_finite()
            && self.omega >= 0.0
            && self.delta.is_finite()
            && self.spacing.is_finite()
            && self.spacing > 0.0
            && self.c6.is_finite()
            && self.c6 >= 0.0
            && self.truncation_range >= 1;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid Rydberg parameters {self:?}")));
        }
        Ok(())
    }

    /// `R_b = (C₆/Ω)^(1/6)`; infinite when `Ω = 0`.
    pub fn blockade_radius(&self) -> f64 {
        (self.c6 / self.omega).powf(1.0 / 6.0)
    }

    /// Same physics with `Ω = 1`, `a = 1`.
    pub fn to_dimensionless(&self) -> Result<Self> {
        if self.omega <= 0.0 {
            return Err(Error::InvalidArgument("Ω must be positive to rescale".into()));
        }
        let rb_a = self.blockade_radius() / self.spacing;
        Ok(Self {
            omega: 1.0,
            delta: self.delta / self.omega,
            spacing: 1.0,
            c6: rb_a.powi(6),
            truncation_range: self.truncation_range,
            transverse_axis: self.transverse_axis,
        })
    }

    /// `V(d) = C₆ / (a d)⁶` for sites `d` apart.
    pub fn interaction(&self, d: usize) -> f64 {
        self.c6 / (self.spacing * d as f64).powi(6)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XYParams {
    pub coupling: f64,
    pub gamma: f64,
    pub field: f64,
}

impl XYParams {
    pub fn new(coupling: f64, gamma: f64, field: f64) -> Result<Self> {
        if !(coupling.is_finite() && gamma.is_finite() && field.is_finite()) {
            return Err(Error::InvalidArgument("XY parameters must be finite".into()));
        }
        Ok(Self { coupling, gamma, field })
    }

    /// `J = 1`.
    pub fn unit(gamma: f64, field: f64) -> Result<Self> {
        Self::new(1.0, gamma, field)
    }

    pub fn xx_weight(&self) -> f64 {
        -self.coupling * (1.0 + self.gamma) / 4.0
    }

    pub fn yy_weight(&self) -> f64 {
        -self.coupling * (1.0 - self.gamma) / 4.0
    }
}

/// Either Hamiltonian family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hamiltonian {
    Rydberg(RydbergParams),
    Xy(XYParams),
}

impl Hamiltonian {
    pub fn full_operator(&self, n: usize) -> Result<SpinOperator> {
        match self {
            Hamiltonian::Rydberg(p) => rydberg_dense(p, n),
            Hamiltonian::Xy(p) => xy_dense(p, n),
        }
    }

    pub fn mpo(&self, n: usize) -> Result<Mpo> {
        match self {
            Hamiltonian::Rydberg(p) => rydberg_mpo(p, n),
            Hamiltonian::Xy(p) => xy_mpo(p, n),
        }
    }

    /// Whether every matrix element in the computational basis is real.
    pub fn is_real(&self) -> bool {
        match self {
            Hamiltonian::Rydberg(p) => p.transverse_axis == TransverseAxis::X || p.omega == 0.0,
            Hamiltonian::Xy(_) => true,
        }
    }
}

/// Rydberg Hamiltonian on the full `2^n` space (see [`SpinOperator`]).
pub fn rydberg_dense(p: &RydbergParams, n: usize) -> Result<SpinOperator> {
    p.validate()?;
    SpinOperator::rydberg(p, n)
}

pub fn xy_dense(p: &XYParams, n: usize) -> Result<SpinOperator> {
    SpinOperator::xy(p, n)
}

pub fn rydberg_mpo(p: &RydbergParams, n: usize) -> Result<Mpo> {
    p.validate()?;
    Mpo::rydberg(p, n)
}

pub fn xy_mpo(p: &XYParams, n: usize) -> Result<Mpo> {
    Mpo::xy(p, n)
}
