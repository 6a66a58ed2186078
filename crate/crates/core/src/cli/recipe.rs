//! JSON experiment recipes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundtruth::{DmrgOptions, Solver, SweepFamily, SweepOptions};
use crate::models::{RydbergParams, TransverseAxis};
use crate::mps::PauliBasis;
use crate::training::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Ω = 1, a = 1; Rydberg points are `Δ/Ω` at fixed `R_b/a`.
    Dimensionless,
    /// Rydberg parameters in rad/s, metres and rad·s⁻¹·m⁶.
    Si,
}

/// Hamiltonian family without the scanned parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SystemSpec {
    Rydberg {
        rb_over_a: f64,
        #[serde(default = "default_range")]
        truncation_range: usize,
        #[serde(default = "default_axis")]
        transverse_axis: TransverseAxis,
        #[serde(default)]
        order: Option<usize>,
    },
    /// SI form; the point value is then `Δ` in rad/s.
    RydbergSi {
        omega: f64,
        spacing: f64,
        c6: f64,
        #[serde(default = "default_range")]
        truncation_range: usize,
        #[serde(default = "default_axis")]
        transverse_axis: TransverseAxis,
        #[serde(default)]
        order: Option<usize>,
    },
    Xy {
        #[serde(default = "one")]
        coupling: f64,
        gamma: f64,
    },
}

fn default_range() -> usize {
    5
}

fn default_axis() -> TransverseAxis {
    TransverseAxis::X
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    /// Sweep family in dimensionless form and the factor that turns a point
    /// value into the family's scan coordinate.
    pub fn family(&self, units: Units) -> Result<(SweepFamily, f64)> {
        match (self, units) {
            (
                SystemSpec::Rydberg {
                    rb_over_a,
                    truncation_range,
                    transverse_axis,
                    order,
                },
                Units::Dimensionless,
            ) => Ok((
                SweepFamily::Rydberg {
                    rb_over_a: *rb_over_a,
                    truncation_range: *truncation_range,
                    transverse_axis: *transverse_axis,
                    order: *order,
                },
                1.0,
            )),
            (
                SystemSpec::RydbergSi {
                    omega,
                    spacing,
                    c6,
                    truncation_range,
                    transverse_axis,
                    order,
                },
                Units::Si,
            ) => {
                let p = RydbergParams::from_si(*omega, 0.0, *spacing, *c6)?;
                Ok((
                    SweepFamily::Rydberg {
                        rb_over_a: p.blockade_radius() / spacing,
                        truncation_range: *truncation_range,
                        transverse_axis: *transverse_axis,
                        order: *order,
                    },
                    1.0 / omega,
                ))
            }
            (SystemSpec::Xy { coupling, gamma }, _) => Ok((
                SweepFamily::Xy {
                    coupling: *coupling,
                    gamma: *gamma,
                },
                1.0,
            )),
            (SystemSpec::Rydberg { .. }, Units::Si) => Err(Error::Validation(
                "units 'si' need a rydberg_si system".into(),
            )),
            (SystemSpec::RydbergSi { .. }, Units::Dimensionless) => Err(Error::Validation(
                "a rydberg_si system needs units 'si'".into(),
            )),
        }
    }
}

/// Evenly spaced grid, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::Validation("grid is empty".into()));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        if !(self.stop > self.start) {
            return Err(Error::Validation("grid stop must exceed start".into()));
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start + step * i as f64).collect())
    }
}

/// Where on the scan axis to work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Value(f64),
    /// `"critical"`: entanglement maximum of the recipe's sweep.
    Named(String),
    /// Grid point whose ordered-phase overlap is closest to the target.
    Overlap { overlap: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    pub solver: Solver,
    pub dmrg: DmrgOptions,
    pub exact_limit: usize,
    pub noise: f64,
    pub compute_gap: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SweepOptions::new(2);
        Self {
            solver: o.solver,
            dmrg: o.dmrg,
            exact_limit: o.exact_limit,
            noise: o.noise,
            compute_gap: o.compute_gap,
        }
    }
}

impl SolverSpec {
    pub fn options(&self, n_sites: usize) -> SweepOptions {
        SweepOptions {
            n_sites,
            dmrg: self.dmrg.clone(),
            solver: self.solver,
            noise: self.noise,
            compute_gap: self.compute_gap,
            exact_limit: self.exact_limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub bases: Vec<PauliBasis>,
    pub shots: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            bases: vec![PauliBasis::X, PauliBasis::Z],
            shots: crate::dataset::DEFAULT_SHOTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub bond_dim: usize,
    pub complex: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            bond_dim: 4,
            complex: true,
        }
    }
}

/// One cell of the basis × field matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// Letters, e.g. `"xz"`.
    pub bases: String,
    pub complex: bool,
}

impl CellSpec {
    pub fn parse_bases(&self) -> Result<Vec<PauliBasis>> {
        parse_bases(&self.bases)
    }
}

pub fn parse_bases(s: &str) -> Result<Vec<PauliBasis>> {
    let mut out: Vec<PauliBasis> = s.chars().map(|c| c.to_string().parse()).collect::<Result<_>>()?;
    out.sort();
    if out.is_empty() || out.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!("basis subset '{s}' must be non-empty with distinct letters")));
    }
    Ok(out)
}

/// All twelve cells: {x, y, z, xy, xz, yz} × {real, complex}.
pub fn all_cells() -> Vec<CellSpec> {
    ["x", "y", "z", "xy", "xz", "yz"]
        .iter()
        .flat_map(|b| {
            [false, true].map(|complex| CellSpec {
                bases: b.to_string(),
                complex,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixSpec {
    pub cells: Vec<CellSpec>,
    pub trials: usize,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        Self {
            cells: all_cells(),
            trials: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub n_sites: Vec<usize>,
    /// Total shots `|T_x| + |T_z| + ...`, split evenly over the bases.
    pub total_shots: Vec<usize>,
    #[serde(default = "ten")]
    pub trials: usize,
    /// Optimizer steps per run, identical for every dataset size.
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn ten() -> usize {
    10
}

fn default_steps() -> usize {
    8000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapSpec {
    pub delta_over_omega: GridSpec,
    pub rb_over_a: GridSpec,
    #[serde(default = "default_range")]
    pub truncation_range: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub schema_version: u32,
    pub units: Units,
    #[serde(default)]
    pub seed: u64,
    pub n_sites: usize,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub point: Option<PointSpec>,
    #[serde(default)]
    pub sweep: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub scaling: Option<ScalingSpec>,
    #[serde(default)]
    pub phase_map: Option<PhaseMapSpec>,
    /// Shots per basis when sampling for classical fidelities.
    #[serde(default = "default_eval_shots")]
    pub eval_shots: usize,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_eval_shots() -> usize {
    crate::dataset::DEFAULT_SHOTS
}

impl Recipe {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: Recipe = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_sites < 2 {
            return Err(Error::Validation("n_sites must be at least 2".into()));
        }
        if let Some(g) = &self.sweep {
            g.values()?;
        }
        if self.matrix.trials == 0 {
            return Err(Error::Validation("matrix trials must be at least 1".into()));
        }
        for c in &self.matrix.cells {
            c.parse_bases()?;
        }
        if self.dataset.bases.is_empty() {
            return Err(Error::Validation("dataset bases must be non-empty".into()));
        }
        if self.dataset.shots == 0 || self.eval_shots == 0 {
            return Err(Error::Validation("shot counts must be positive".into()));
        }
        if self.model.bond_dim == 0 {
            return Err(Error::Validation("bond_dim must be positive".into()));
        }
        if let Some(s) = &self.scaling {
            if s.trials == 0 || s.steps == 0 {
                return Err(Error::Validation("scaling trials and steps must be positive".into()));
            }
        }
        if let Some(p) = &self.phase_map {
            p.delta_over_omega.values()?;
            p.rb_over_a.values()?;
        }
        if let Some(sys) = &self.system {
            sys.family(self.units)?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Validation("recipe has no 'system'".into()))
    }

    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        self.sweep
            .as_ref()
            .ok_or_else(|| Error::Validation("recipe has no 'sweep' grid".into()))?
            .values()
    }
}
