//! Two-site DMRG with MPO environments.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GroundStateResult;
use crate::error::{Error, Result};
use crate::linalg::{gemm_acc, lanczos_lowest, svd_truncated, DenseTensor, LanczosOptions, ONE, ZERO};
use crate::models::Mpo;
use crate::mps::{transfer_step, transfer_step_right, Mps};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmrgOptions {
    pub d_max: usize,
    /// Singular values with `s / s_max` at or below this are dropped.
    pub cutoff: f64,
    pub max_sweeps: usize,
    /// Relative energy change per sweep counted as converged.
    pub energy_tol: f64,
    /// Bond dimension of the random start when no initial state is given.
    pub init_bond: usize,
    /// Relative size of random admixture into the two-site block before
    /// truncation, applied during the first `noise_sweeps` sweeps so the bond
    /// bases can leave a local minimum.
    pub mixing_noise: f64,
    pub noise_sweeps: usize,
    pub seed: u64,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        Self {
            d_max: 64,
            cutoff: 1e-10,
            max_sweeps: 30,
            energy_tol: 1e-10,
            init_bond: 8,
            mixing_noise: 1e-6,
            noise_sweeps: 1,
            seed: 0,
        }
    }
}

/// Nonzero entries of one MPO site: `(w_left, w_right, out, in, value)`.
type SparseSite = Vec<(usize, usize, usize, usize, C64)>;

fn sparse_sites(h: &Mpo) -> Vec<(SparseSite, usize, usize)> {
    h.tensors()
        .iter()
        .map(|t| {
            let sh = t.shape();
            let mut v = Vec::new();
            for l in 0..sh[0] {
                for o in 0..2 {
                    for i in 0..2 {
                        for r in 0..sh[3] {
                            let x = t.get(&[l, o, i, r]);
                            if x != ZERO {
                                v.push((l, r, o, i, x));
                            }
                        }
                    }
                }
            }
            (v, sh[0], sh[3])
        })
        .collect()
}

fn adjoint_mat(a: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c].conj();
        }
    }
    out
}

fn conj_mat(a: &[C64]) -> Vec<C64> {
    a.iter().map(|z| z.conj()).collect()
}

/// Left environment `L[w][a'][a]` (bra bond, ket bond) as one block per `w`.
struct Env {
    w: usize,
    d: usize,
    data: Vec<C64>,
}

impl Env {
    fn boundary() -> Self {
        Self { w: 1, d: 1, data: vec![ONE] }
    }

    fn block(&self, w: usize) -> &[C64] {
        &self.data[w * self.d * self.d..(w + 1) * self.d * self.d]
    }
}

/// Extend a left environment through left-orthonormal `a` (shape `dl, 2, dr`).
fn grow_left(env: &Env, a: &DenseTensor, site: &(SparseSite, usize, usize)) -> Env {
    let (dl, dr) = (a.shape()[0], a.shape()[2]);
    let (ops, _, wr) = site;
    // u1[w][x'][s][a] = Σ_x L[w][x'][x] A[x, s, a]
    let mut u1 = vec![ZERO; env.w * dl * 2 * dr];
    for w in 0..env.w {
        gemm_acc(env.block(w), a.data(), &mut u1[w * dl * 2 * dr..(w + 1) * dl * 2 * dr], dl, dl, 2 * dr);
    }
    // u2[w'][x'][s'][a] += W[w, s', s, w'] u1[w][x'][s][a]
    let mut u2 = vec![ZERO; wr * dl * 2 * dr];
    for &(l, r, o, i, x) in ops {
        for xp in 0..dl {
            let src = &u1[((l * dl + xp) * 2 + i) * dr..((l * dl + xp) * 2 + i + 1) * dr];
            let dst_off = ((r * dl + xp) * 2 + o) * dr;
            for (d, s) in u2[dst_off..dst_off + dr].iter_mut().zip(src) {
                *d += x * s;
            }
        }
    }
    // L'[w'] = A† u2[w']
    let adag = adjoint_mat(a.data(), dl * 2, dr);
    let mut data = vec![ZERO; wr * dr * dr];
    for w in 0..*wr {
        gemm_acc(&adag, &u2[w * dl * 2 * dr..(w + 1) * dl * 2 * dr], &mut data[w * dr * dr..(w + 1) * dr * dr], dr, dl * 2, dr);
    }
    Env { w: *wr, d: dr, data }
}

/// Right environment stored ket-first: `Rt[w][b][b']`.
fn grow_right(env: &Env, b: &DenseTensor, site: &(SparseSite, usize, usize)) -> Env {
    let (dl, dr) = (b.shape()[0], b.shape()[2]);
    let (ops, wl, _) = site;
    // v1[w'][a][s][b'] = Σ_b B[a, s, b] Rt[w'][b][b']
    let mut v1 = vec![ZERO; env.w * dl * 2 * dr];
    for w in 0..env.w {
        gemm_acc(b.data(), env.block(w), &mut v1[w * dl * 2 * dr..(w + 1) * dl * 2 * dr], dl * 2, dr, dr);
    }
    // v2[w][a][s'][b'] += W[w, s', s, w'] v1[w'][a][s][b']
    let mut v2 = vec![ZERO; wl * dl * 2 * dr];
    for &(l, r, o, i, x) in ops {
        for a in 0..dl {
            let src = &v1[((r * dl + a) * 2 + i) * dr..((r * dl + a) * 2 + i + 1) * dr];
            let off = ((l * dl + a) * 2 + o) * dr;
            for (d, s) in v2[off..off + dr].iter_mut().zip(src) {
                *d += x * s;
            }
        }
    }
    // Rt'[w][a][a'] = Σ v2[w][a][(s', b')] conj(B[a', s', b'])
    let bbar_t = {
        let c = conj_mat(b.data());
        // transpose (dl, 2dr) -> (2dr, dl)
        let mut t = vec![ZERO; c.len()];
        for r in 0..dl {
            for k in 0..2 * dr {
                t[k * dl + r] = c[r * 2 * dr + k];
            }
        }
        t
    };
    let mut data = vec![ZERO; wl * dl * dl];
    for w in 0..*wl {
        gemm_acc(&v2[w * dl * 2 * dr..(w + 1) * dl * 2 * dr], &bbar_t, &mut data[w * dl * dl..(w + 1) * dl * dl], dl, 2 * dr, dl);
    }
    Env { w: *wl, d: dl, data }
}

/// Energy penalty `weight · |v⟩⟨v|` where `v` is the local image of a
/// reference state.
struct Penalty<'a> {
    reference: &'a Mps,
    weight: f64,
}

/// `y = H_eff θ` for the two-site block.
#[allow(clippy::too_many_arguments)]
fn apply_two_site(
    left: &Env,
    right: &Env,
    w1: &(SparseSite, usize, usize),
    w2: &(SparseSite, usize, usize),
    dl: usize,
    dr: usize,
    theta: &[C64],
    y: &mut [C64],
) {
    let blk = dl * 4 * dr;
    let wm = w1.2;
    // t1[w][a'][s1][s2][b] = L[w] θ
    let mut t1 = vec![ZERO; left.w * blk];
    for w in 0..left.w {
        gemm_acc(left.block(w), theta, &mut t1[w * blk..(w + 1) * blk], dl, dl, 4 * dr);
    }
    let row = 2 * dr; // (s2, b)
    let mut t2 = vec![ZERO; wm * blk];
    for &(l, r, o, i, x) in &w1.0 {
        for a in 0..dl {
            let src = &t1[l * blk + (a * 2 + i) * row..l * blk + (a * 2 + i + 1) * row];
            let off = r * blk + (a * 2 + o) * row;
            for (d, s) in t2[off..off + row].iter_mut().zip(src) {
                *d += x * s;
            }
        }
    }
    let mut t3 = vec![ZERO; w2.2 * blk];
    for &(l, r, o, i, x) in &w2.0 {
        for a in 0..dl * 2 {
            let src = &t2[l * blk + (a * 2 + i) * dr..l * blk + (a * 2 + i + 1) * dr];
            let off = r * blk + (a * 2 + o) * dr;
            for (d, s) in t3[off..off + dr].iter_mut().zip(src) {
                *d += x * s;
            }
        }
    }
    y.iter_mut().for_each(|z| *z = ZERO);
    for w in 0..right.w {
        gemm_acc(&t3[w * blk..(w + 1) * blk], right.block(w), y, dl * 4, dr, dr);
    }
}

/// Overlap environments `⟨reference|state⟩` from the left and right.
struct OverlapEnvs {
    left: Vec<Vec<C64>>,
    right: Vec<Vec<C64>>,
}

/// Local vector `v` with `⟨reference|ψ⟩ = ⟨v|θ⟩`.
fn penalty_vector(p: &Penalty<'_>, ov: &OverlapEnvs, k: usize, dl: usize, dr: usize) -> Vec<C64> {
    let g1 = p.reference.site(k);
    let g2 = p.reference.site(k + 1);
    let (gl, gm, gr) = (g1.shape()[0], g1.shape()[2], g2.shape()[2]);
    let mut g12 = vec![ZERO; gl * 2 * 2 * gr];
    gemm_acc(g1.data(), g2.data(), &mut g12, gl * 2, gm, 2 * gr);
    // PL[a0][a] -> conj transpose gives (a, a0)
    let pl_dag = adjoint_mat(&ov.left[k], gl, dl);
    let mut t = vec![ZERO; dl * 4 * gr];
    gemm_acc(&pl_dag, &g12, &mut t, dl, gl, 4 * gr);
    let pr_conj = conj_mat(&ov.right[k + 2]);
    let mut v = vec![ZERO; dl * 4 * dr];
    gemm_acc(&t, &pr_conj, &mut v, dl * 4, gr, dr);
    v
}

fn random_start(n: usize, bond: usize, seed: u64, complex: bool) -> Result<Mps> {
    let mut r = rng::stream(seed, "dmrg-init");
    Mps::random(n, bond, complex, &mut r)
}

/// Perturb every entry by uniform noise of the given magnitude.
pub fn add_noise(psi: &Mps, magnitude: f64, seed: u64) -> Result<Mps> {
    let mut r = rng::stream(seed, "dmrg-noise");
    let complex = psi.complex_valued();
    let mut out = psi.clone();
    for t in out.sites_mut() {
        for z in t.data_mut() {
            let re = r.gen_range(-1.0..1.0) * magnitude;
            let im = if complex { r.gen_range(-1.0..1.0) * magnitude } else { 0.0 };
            *z += C64::new(re, im);
        }
    }
    Ok(out)
}

/// Ground state of `h` by two-site sweeps.
pub fn dmrg_ground_state(h: &Mpo, opts: &DmrgOptions, init: Option<&Mps>) -> Result<GroundStateResult> {
    run(h, opts, init, None)
}

/// Lowest state orthogonal to `ground`, via an energy penalty
/// `weight · |ground⟩⟨ground|`. The reported energy is `⟨H⟩` without the
/// penalty.
pub fn dmrg_excited_state(h: &Mpo, ground: &Mps, weight: f64, opts: &DmrgOptions) -> Result<GroundStateResult> {
    let (g, _) = ground.canonicalize(0)?;
    let mut o = opts.clone();
    o.seed = rng::derive_seed(opts.seed, "dmrg-excited", 0);
    let mut res = run(h, &o, None, Some(Penalty { reference: &g, weight }))?;
    res.energy = h.expectation(&res.state)?;
    Ok(res)
}

fn run(h: &Mpo, opts: &DmrgOptions, init: Option<&Mps>, penalty: Option<Penalty<'_>>) -> Result<GroundStateResult> {
    let n = h.n_sites();
    if n < 2 {
        return Err(Error::InvalidArgument("two-site DMRG needs at least two sites".into()));
    }
    if opts.d_max < 2 {
        return Err(Error::InvalidArgument("DMRG needs d_max >= 2".into()));
    }
    let complex_h = h.tensors().iter().any(|t| t.data().iter().any(|z| z.im != 0.0));
    let start = match init {
        Some(s) => {
            if s.n_sites() != n {
                return Err(Error::SizeMismatch(s.n_sites(), n));
            }
            s.clone()
        }
        None => random_start(n, opts.init_bond.min(opts.d_max), opts.seed, false)?,
    };
    let (psi, _) = start.canonicalize(0)?;
    let mut sites: Vec<DenseTensor> = psi.into_sites();
    let mpo = sparse_sites(h);

    let mut lefts: Vec<Env> = Vec::with_capacity(n);
    lefts.push(Env::boundary());
    let mut rights: Vec<Option<Env>> = (0..=n).map(|_| None).collect();
    rights[n] = Some(Env::boundary());
    for k in (1..n).rev() {
        let e = grow_right(rights[k + 1].as_ref().expect("env"), &sites[k], &mpo[k]);
        rights[k] = Some(e);
    }

    let mut ov = penalty.as_ref().map(|p| {
        let mut right = vec![Vec::new(); n + 1];
        right[n] = vec![ONE];
        for k in (1..n).rev() {
            right[k] = transfer_step_right(&right[k + 1], p.reference.site(k), &sites[k]);
        }
        OverlapEnvs {
            left: vec![vec![ONE]; n + 1],
            right,
        }
    });

    let lopts = LanczosOptions {
        krylov_dim: 32,
        tol: 1e-12,
        max_restarts: 20,
    };
    let mut log = Vec::new();
    let mut energy = f64::INFINITY;
    let mut converged = false;
    let mut max_discarded: f64 = 0.0;

    let mut noise_rng = rng::stream(opts.seed, "dmrg-mixing");
    for sweep in 0..opts.max_sweeps {
        let noisy = sweep < opts.noise_sweeps && opts.mixing_noise > 0.0;
        let mut e_step = 0.0;
        // left to right, then right to left
        let order: Vec<(usize, bool)> = (0..n - 1).map(|k| (k, true)).chain((0..n - 1).rev().map(|k| (k, false))).collect();
        for (k, forward) in order {
            let (dl, dm, dr) = (sites[k].shape()[0], sites[k].shape()[2], sites[k + 1].shape()[2]);
            let mut theta = vec![ZERO; dl * 4 * dr];
            gemm_acc(sites[k].data(), sites[k + 1].data(), &mut theta, dl * 2, dm, 2 * dr);
            let left = &lefts[k];
            let right = rights[k + 2].as_ref().expect("right env");
            let pv = match (&penalty, &ov) {
                (Some(p), Some(o)) => Some((penalty_vector(p, o, k, dl, dr), p.weight)),
                _ => None,
            };
            let (w1, w2) = (&mpo[k], &mpo[k + 1]);
            let res = lanczos_lowest(
                |x, y| {
                    apply_two_site(left, right, w1, w2, dl, dr, x, y);
                    if let Some((v, w)) = &pv {
                        let c: C64 = v.iter().zip(x).map(|(a, b)| a.conj() * b).sum::<C64>() * *w;
                        for (yy, vv) in y.iter_mut().zip(v) {
                            *yy += c * vv;
                        }
                    }
                },
                &theta,
                &[],
                &lopts,
            )?;
            e_step = res.value;
            let mut vec = res.vector;
            if !complex_h && init.is_none_or(|s| !s.complex_valued()) {
                strip_phase(&mut vec);
            }
            if noisy {
                let scale = opts.mixing_noise / (vec.len() as f64).sqrt();
                let cplx = complex_h;
                for z in vec.iter_mut() {
                    let re = noise_rng.gen_range(-1.0..1.0) * scale;
                    let im = if cplx { noise_rng.gen_range(-1.0..1.0) * scale } else { 0.0 };
                    *z += C64::new(re, im);
                }
            }
            let m = DenseTensor::new(vec![dl * 2, 2 * dr], vec)?;
            let svd = svd_truncated(&m, opts.d_max, opts.cutoff)?;
            max_discarded = max_discarded.max(svd.discarded_weight);
            let keep = svd.s.len();
            let norm = svd.s.iter().map(|s| s * s).sum::<f64>().sqrt();
            let s: Vec<f64> = svd.s.iter().map(|x| x / norm).collect();
            if forward {
                sites[k] = svd.u.reshape(vec![dl, 2, keep])?;
                let mut sv = svd.vh;
                for (i, row) in sv.data_mut().chunks_mut(2 * dr).enumerate() {
                    row.iter_mut().for_each(|z| *z *= s[i]);
                }
                sites[k + 1] = sv.reshape(vec![keep, 2, dr])?;
                let next = grow_left(&lefts[k], &sites[k], &mpo[k]);
                lefts.truncate(k + 1);
                lefts.push(next);
                if let (Some(p), Some(o)) = (&penalty, &mut ov) {
                    let l = o.left[k].clone();
                    o.left[k + 1] = transfer_step(&l, p.reference.site(k).shape()[0], dl, p.reference.site(k), &sites[k]);
                }
            } else {
                sites[k + 1] = svd.vh.reshape(vec![keep, 2, dr])?;
                let mut us = svd.u;
                for row in us.data_mut().chunks_mut(keep) {
                    row.iter_mut().zip(&s).for_each(|(z, x)| *z *= *x);
                }
                sites[k] = us.reshape(vec![dl, 2, keep])?;
                let e = grow_right(rights[k + 2].as_ref().expect("env"), &sites[k + 1], &mpo[k + 1]);
                rights[k + 1] = Some(e);
                if let (Some(p), Some(o)) = (&penalty, &mut ov) {
                    o.right[k + 1] = transfer_step_right(&o.right[k + 2], p.reference.site(k + 1), &sites[k + 1]);
                }
            }
        }
        log.push(e_step);
        let change = (energy - e_step).abs();
        energy = e_step;
        if log.len() >= 2 && change < opts.energy_tol * energy.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    let complex = sites.iter().any(|t| t.data().iter().any(|z| z.im != 0.0));
    let mut state = Mps::new(sites, complex)?;
    let (canon, _) = state.canonicalize(0)?;
    state = canon;
    Ok(GroundStateResult {
        state,
        energy,
        gap: None,
        converged,
        sweep_log: log,
        discarded_weight: max_discarded,
    })
}

/// Rotate a vector of a real problem to be real: divide out the phase of its
/// largest entry and drop residual imaginary parts.
fn strip_phase(v: &mut [C64]) {
    let big = v.iter().copied().fold(ZERO, |acc, z| if z.norm() > acc.norm() { z } else { acc });
    if big == ZERO {
        return;
    }
    let ph = (big / big.norm()).conj();
    for z in v.iter_mut() {
        *z *= ph;
        z.im = 0.0;
    }
}
