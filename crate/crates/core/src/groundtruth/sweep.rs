//! Left-to-right parameter sweeps along one line of the phase diagram.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{add_noise, dmrg_excited_state, dmrg_ground_state, exact_ground_state, phase_overlap, DmrgOptions, GroundStateResult};
use crate::error::{Error, Result};
use crate::metrics::magnetization;
use crate::models::{Hamiltonian, RydbergParams, TransverseAxis, XYParams};
use crate::mps::Mps;
use crate::rng;

/// Which Hamiltonian a sweep moves through, and along which parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SweepFamily {
    /// Fixed `R_b/a`, scanning `Δ/Ω`. `order` selects the crystal period used
    /// for the ordered-phase overlap.
    Rydberg {
        rb_over_a: f64,
        #[serde(default = "default_range")]
        truncation_range: usize,
        #[serde(default = "default_axis")]
        transverse_axis: TransverseAxis,
        #[serde(default)]
        order: Option<usize>,
    },
    /// Fixed `γ` (and `J`), scanning `h`.
    Xy {
        #[serde(default = "default_coupling")]
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

fn default_coupling() -> f64 {
    1.0
}

impl SweepFamily {
    pub fn hamiltonian(&self, x: f64) -> Result<Hamiltonian> {
        Ok(match self {
            SweepFamily::Rydberg {
                rb_over_a,
                truncation_range,
                transverse_axis,
                ..
            } => Hamiltonian::Rydberg(
                RydbergParams::dimensionless(x, *rb_over_a)?
                    .with_range(*truncation_range)?
                    .with_axis(*transverse_axis),
            ),
            SweepFamily::Xy { coupling, gamma } => Hamiltonian::Xy(XYParams::new(*coupling, *gamma, x)?),
        })
    }

    pub fn axis_name(&self) -> &'static str {
        match self {
            SweepFamily::Rydberg { .. } => "delta_over_omega",
            SweepFamily::Xy { .. } => "field",
        }
    }

    fn order(&self) -> Option<usize> {
        match self {
            SweepFamily::Rydberg { order, .. } => *order,
            SweepFamily::Xy { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Exact diagonalisation up to `exact_limit` sites, DMRG beyond.
    Auto,
    Dmrg,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub n_sites: usize,
    #[serde(default)]
    pub dmrg: DmrgOptions,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    /// Uniform noise added to each warm start.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "yes")]
    pub compute_gap: bool,
    /// Largest chain solved on the full space (gap and `Auto` solver).
    #[serde(default = "default_exact_limit")]
    pub exact_limit: usize,
}

fn default_solver() -> Solver {
    Solver::Auto
}

fn default_noise() -> f64 {
    1e-8
}

fn yes() -> bool {
    true
}

fn default_exact_limit() -> usize {
    14
}

impl SweepOptions {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            dmrg: DmrgOptions::default(),
            solver: Solver::Auto,
            noise: 1e-8,
            compute_gap: true,
            exact_limit: 14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub x: f64,
    pub energy: f64,
    pub gap: Option<f64>,
    /// Half-chain von Neumann entropy, cut after site `N/2`.
    pub svn: f64,
    pub magnetization: f64,
    pub overlap: Option<f64>,
    pub converged: bool,
    pub state: Mps,
}

#[derive(Clone, Debug)]
pub struct SweepLine {
    pub family: SweepFamily,
    pub points: Vec<SweepPoint>,
}

impl SweepLine {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }
}

/// Solve every grid point from left to right, warm-starting DMRG from the
/// previous solution plus a little noise.
pub fn adiabatic_sweep(family: &SweepFamily, grid: &[f64], opts: &SweepOptions) -> Result<SweepLine> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("sweep grid must be finite and strictly increasing".into()));
    }
    let n = opts.n_sites;
    let exact = match opts.solver {
        Solver::Exact => true,
        Solver::Dmrg => false,
        Solver::Auto => n <= opts.exact_limit,
    };
    let mut points: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    for (i, &x) in grid.iter().enumerate() {
        let h = family.hamiltonian(x)?;
        let mut res: GroundStateResult = if exact {
            let k = if opts.compute_gap { 2 } else { 1 };
            exact_ground_state(&h.full_operator(n)?, k)?
        } else {
            let mpo = h.mpo(n)?;
            let mut dopts = opts.dmrg.clone();
            dopts.seed = rng::derive_seed(opts.dmrg.seed, "sweep-point", i as u64);
            let warm = match points.last() {
                Some(prev) => Some(add_noise(&prev.state, opts.noise, dopts.seed)?),
                None => None,
            };
            let mut r = dmrg_ground_state(&mpo, &dopts, warm.as_ref())?;
            if opts.compute_gap {
                r.gap = Some(if n <= opts.exact_limit {
                    exact_ground_state(&h.full_operator(n)?, 2)?.gap.expect("two levels")
                } else {
                    let weight = 10.0 * r.energy.abs().max(1.0);
                    let ex = dmrg_excited_state(&mpo, &r.state, weight, &dopts)?;
                    (ex.energy - r.energy).max(0.0)
                });
            }
            r
        };
        if !opts.compute_gap {
            res.gap = None;
        }
        let svn = if n >= 2 { res.state.bipartite_entropy(n / 2)? } else { 0.0 };
        let overlap = match family.order() {
            Some(k) => Some(phase_overlap(&res.state, k)?),
            None => None,
        };
        points.push(SweepPoint {
            x,
            energy: res.energy,
            gap: res.gap,
            svn,
            magnetization: magnetization(&res.state)?,
            overlap,
            converged: res.converged,
            state: res.state,
        });
    }
    Ok(SweepLine {
        family: family.clone(),
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    /// Location of the interior entanglement maximum.
    pub estimate: Option<f64>,
    /// Set when the entanglement maximum sits on the grid edge.
    pub no_critical_point: bool,
    /// `"low"` or `"high"`: which edge holds the maximum.
    pub boundary: Option<String>,
    pub svn_max_at: f64,
    pub gap_min_at: Option<f64>,
    pub magnetization_slope_at: Option<f64>,
    /// Largest distance between the available locations.
    pub spread: f64,
    pub grid_step: f64,
    /// Locations disagree by more than two grid steps.
    pub disagreement: bool,
}

/// Critical point from the entanglement maximum, with gap-minimum and
/// magnetization-slope locations as cross-checks.
pub fn locate_critical_point(line: &SweepLine) -> Result<CriticalEstimate> {
    let pts = &line.points;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("empty sweep line".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let step = if xs.len() > 1 { (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64 } else { 0.0 };
    let imax = argmax(pts.iter().map(|p| p.svn));
    let interior = imax > 0 && imax + 1 < pts.len();
    let boundary = if interior {
        None
    } else if imax == 0 {
        Some("low".to_string())
    } else {
        Some("high".to_string())
    };
    let gap_min_at = if pts.iter().all(|p| p.gap.is_some()) {
        Some(xs[argmax(pts.iter().map(|p| -p.gap.expect("gap")))])
    } else {
        None
    };
    let magnetization_slope_at = if pts.len() >= 3 {
        let slopes = (1..pts.len() - 1).map(|i| {
            ((pts[i + 1].magnetization - pts[i - 1].magnetization) / (xs[i + 1] - xs[i - 1])).abs()
        });
        Some(xs[1 + argmax(slopes)])
    } else {
        None
    };
    let mut locs = vec![xs[imax]];
    locs.extend(gap_min_at);
    locs.extend(magnetization_slope_at);
    let lo = locs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = locs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    Ok(CriticalEstimate {
        estimate: interior.then_some(xs[imax]),
        no_critical_point: !interior,
        boundary,
        svn_max_at: xs[imax],
        gap_min_at,
        magnetization_slope_at,
        spread,
        grid_step: step,
        disagreement: spread > 2.0 * step * (1.0 + 1e-9),
    })
}

/// Index of the first maximal element.
fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per grid point.
pub fn sweep_csv(line: &SweepLine) -> String {
    let mut s = format!("{},energy,gap,svn,magnetization,overlap,converged\n", line.family.axis_name());
    for p in &line.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.x,
            p.energy,
            opt(p.gap),
            p.svn,
            p.magnetization,
            opt(p.overlap),
            p.converged
        );
    }
    s
}

pub fn write_sweep_csv(path: &Path, line: &SweepLine) -> Result<()> {
    crate::io::atomic_write_str(path, &sweep_csv(line))
}
