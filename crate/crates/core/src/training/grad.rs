//! Negative log-likelihood over basis-rotated data and its analytic gradient.
//!
//! For basis `b` with single-qubit rotation `U`, the rotated tensors are
//! `B_k[s] = Σ_t U[s, t] A_k[t]` and
//!
//! ```text
//! ℒ = Σ_b [ −(1/|T_b|) Σ_v ln |ψ_b(v)|² ] + n_bases · ln Z,   Z = Σ_v |ψ(v)|²
//! ```
//!
//! The returned gradient is `2 ∂ℒ/∂θ*` per complex entry; its real and
//! imaginary parts are the derivatives along `Re θ` and `Im θ`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::mps::{transfer_step, transfer_step_right, Mps, PauliBasis};

/// Probabilities below this are floored before the logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Bitstrings packed one bit per site, site `k` in bit `k`.
pub type Code = u64;

pub fn encode(bits: &[u8]) -> Code {
    bits.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((b as u64) << k))
}

pub fn decode(code: Code, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((code >> k) & 1) as u8).collect()
}

/// Distinct codes with multiplicities, sorted.
pub fn group(codes: &[Code]) -> Vec<(Code, u32)> {
    let mut c = codes.to_vec();
    c.sort_unstable();
    let mut out: Vec<(Code, u32)> = Vec::new();
    for x in c {
        match out.last_mut() {
            Some((y, m)) if *y == x => *m += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// One basis' worth of grouped data.
#[derive(Clone, Debug)]
pub struct BasisBatch {
    pub basis: PauliBasis,
    pub groups: Vec<(Code, u32)>,
    pub total: u32,
}

impl BasisBatch {
    pub fn from_codes(basis: PauliBasis, codes: &[Code]) -> Self {
        Self {
            basis,
            groups: group(codes),
            total: codes.len() as u32,
        }
    }

    pub fn from_shots(basis: PauliBasis, shots: &[Vec<u8>]) -> Self {
        let codes: Vec<Code> = shots.iter().map(|s| encode(s)).collect();
        Self::from_codes(basis, &codes)
    }
}

#[derive(Clone, Debug)]
pub struct LossEval {
    pub loss: f64,
    /// Number of distinct strings whose probability was floored.
    pub floored: usize,
}

/// Flat copy of a site for the inner loops: `data[(l * 2 + s) * dr + r]`.
struct Site {
    dl: usize,
    dr: usize,
    data: Vec<C64>,
}

fn rotated_sites(psi: &Mps, basis: PauliBasis) -> Vec<Site> {
    let u = basis.rotation();
    psi.sites()
        .iter()
        .map(|t| {
            let (dl, dr) = (t.shape()[0], t.shape()[2]);
            let a = t.data();
            let mut data = vec![ZERO; a.len()];
            for l in 0..dl {
                for r in 0..dr {
                    let a0 = a[(l * 2) * dr + r];
                    let a1 = a[(l * 2 + 1) * dr + r];
                    data[(l * 2) * dr + r] = u[0][0] * a0 + u[0][1] * a1;
                    data[(l * 2 + 1) * dr + r] = u[1][0] * a0 + u[1][1] * a1;
                }
            }
            Site { dl, dr, data }
        })
        .collect()
}

/// Reusable buffers for left and right partial products.
struct Scratch {
    left: Vec<Vec<C64>>,
    right: Vec<Vec<C64>>,
}

impl Scratch {
    fn new(sites: &[Site]) -> Self {
        let n = sites.len();
        let mut left = Vec::with_capacity(n + 1);
        left.push(vec![ONE]);
        for s in sites {
            left.push(vec![ZERO; s.dr]);
        }
        let mut right = Vec::with_capacity(n + 1);
        for s in sites {
            right.push(vec![ZERO; s.dl]);
        }
        right.push(vec![ONE]);
        Self { left, right }
    }

    fn amplitude(&mut self, sites: &[Site], code: Code) -> C64 {
        for (k, s) in sites.iter().enumerate() {
            let bit = ((code >> k) & 1) as usize;
            let (prev, next) = self.left.split_at_mut(k + 1);
            let v = &prev[k];
            let out = &mut next[0];
            out.iter_mut().for_each(|z| *z = ZERO);
            for (l, &vl) in v.iter().enumerate() {
                let row = &s.data[(l * 2 + bit) * s.dr..(l * 2 + bit + 1) * s.dr];
                for (o, a) in out.iter_mut().zip(row) {
                    *o += vl * a;
                }
            }
        }
        self.left[sites.len()][0]
    }

    fn fill_right(&mut self, sites: &[Site], code: Code) {
        for k in (0..sites.len()).rev() {
            let s = &sites[k];
            let bit = ((code >> k) & 1) as usize;
            let (head, tail) = self.right.split_at_mut(k + 1);
            let w = &tail[0];
            let out = &mut head[k];
            for (l, o) in out.iter_mut().enumerate() {
                let row = &s.data[(l * 2 + bit) * s.dr..(l * 2 + bit + 1) * s.dr];
                *o = row.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            }
        }
    }
}

fn log_prob(amp_sq: f64, z: f64, basis: PauliBasis, code: Code, n: usize) -> Result<(f64, bool)> {
    if amp_sq == 0.0 {
        return Err(Error::ZeroProbability {
            basis: basis.to_string(),
            config: decode(code, n).iter().map(|b| char::from(b'0' + b)).collect(),
        });
    }
    let p = amp_sq / z;
    if p < PROBABILITY_FLOOR {
        Ok((PROBABILITY_FLOOR.ln(), true))
    } else {
        Ok((p.ln(), false))
    }
}

fn check_finite(psi: &Mps) -> Result<()> {
    let bad = psi.sites().iter().flat_map(|t| t.data()).any(|z| !z.re.is_finite() || !z.im.is_finite());
    if bad {
        return Err(Error::NonFiniteLoss {
            epoch: 0,
            step: 0,
            detail: "model contains non-finite entries".into(),
        });
    }
    Ok(())
}

pub fn nll_loss(psi: &Mps, batches: &[BasisBatch]) -> Result<LossEval> {
    check_finite(psi)?;
    let z = psi.norm_squared()?;
    let n = psi.n_sites();
    let mut loss = 0.0;
    let mut floored = 0;
    for b in batches {
        if b.total == 0 {
            return Err(Error::Validation(format!("empty batch for basis {}", b.basis)));
        }
        let sites = rotated_sites(psi, b.basis);
        let mut sc = Scratch::new(&sites);
        let mut acc = 0.0;
        for &(code, mult) in &b.groups {
            let amp = sc.amplitude(&sites, code);
            let (lp, f) = log_prob(amp.norm_sqr(), z, b.basis, code, n)?;
            floored += usize::from(f);
            acc += mult as f64 * lp;
        }
        loss -= acc / b.total as f64;
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: 0,
            step: 0,
            detail: format!("loss evaluated to {loss}"),
        });
    }
    Ok(LossEval { loss, floored })
}

/// Loss and `2 ∂ℒ/∂θ*` for every entry, laid out like the site tensors.
pub fn nll_loss_and_gradient(psi: &Mps, batches: &[BasisBatch]) -> Result<(LossEval, Vec<Vec<C64>>)> {
    check_finite(psi)?;
    let n = psi.n_sites();
    let z = psi.norm_squared()?;
    let mut grad: Vec<Vec<C64>> = psi.sites().iter().map(|t| vec![ZERO; t.len()]).collect();
    let mut loss = 0.0;
    let mut floored = 0;

    for b in batches {
        if b.total == 0 {
            return Err(Error::Validation(format!("empty batch for basis {}", b.basis)));
        }
        let sites = rotated_sites(psi, b.basis);
        let mut sc = Scratch::new(&sites);
        // w[k][s][l * dr + r] = Σ_v c_v conj(L_k[l] R_{k+1}[r])
        let mut w: Vec<[Vec<C64>; 2]> = sites
            .iter()
            .map(|s| [vec![ZERO; s.dl * s.dr], vec![ZERO; s.dl * s.dr]])
            .collect();
        let inv_total = 1.0 / b.total as f64;
        let mut acc = 0.0;
        for &(code, mult) in &b.groups {
            let amp = sc.amplitude(&sites, code);
            let amp_sq = amp.norm_sqr();
            let (lp, f) = log_prob(amp_sq, z, b.basis, code, n)?;
            acc += mult as f64 * lp;
            if f {
                floored += 1;
                continue;
            }
            sc.fill_right(&sites, code);
            let c = amp * (mult as f64 * inv_total / amp_sq);
            for k in 0..n {
                let bit = ((code >> k) & 1) as usize;
                let (l, r) = (&sc.left[k], &sc.right[k + 1]);
                let dst = &mut w[k][bit];
                let dr = r.len();
                for (li, lv) in l.iter().enumerate() {
                    let cl = c * lv.conj();
                    let row = &mut dst[li * dr..(li + 1) * dr];
                    for (d, rv) in row.iter_mut().zip(r) {
                        *d += cl * rv.conj();
                    }
                }
            }
        }
        loss -= acc * inv_total;
        // map back through the rotation: dA[t] = −2 Σ_s conj(U[s, t]) W[s]
        let u = b.basis.rotation();
        for (k, s) in sites.iter().enumerate() {
            let g = &mut grad[k];
            for l in 0..s.dl {
                for r in 0..s.dr {
                    let w0 = w[k][0][l * s.dr + r];
                    let w1 = w[k][1][l * s.dr + r];
                    for t in 0..2 {
                        g[(l * 2 + t) * s.dr + r] -= (u[0][t].conj() * w0 + u[1][t].conj() * w1) * 2.0;
                    }
                }
            }
        }
    }

    // normalisation: + n_bases · 2 (∂Z/∂θ*) / Z
    let factor = 2.0 * batches.len() as f64 / z;
    let sites = psi.sites();
    let mut lefts = vec![vec![ONE]];
    for (k, t) in sites.iter().enumerate() {
        let d = t.shape()[0];
        let next = transfer_step(&lefts[k], d, d, t, t);
        lefts.push(next);
    }
    let mut right = vec![ONE];
    for k in (0..n).rev() {
        let t = &sites[k];
        let (dl, dr) = (t.shape()[0], t.shape()[2]);
        let el = &lefts[k];
        let a = t.data();
        // tmp[l', s, r] = Σ_r' A[l', s, r'] E_R[r, r']
        let mut tmp = vec![ZERO; dl * 2 * dr];
        for row in 0..dl * 2 {
            for rr in 0..dr {
                tmp[row * dr + rr] = (0..dr).map(|rp| a[row * dr + rp] * right[rr * dr + rp]).sum();
            }
        }
        let g = &mut grad[k];
        for l in 0..dl {
            for lp in 0..dl {
                let e = el[l * dl + lp];
                if e == ZERO {
                    continue;
                }
                for j in 0..2 * dr {
                    g[l * 2 * dr + j] += e * tmp[lp * 2 * dr + j] * factor;
                }
            }
        }
        right = transfer_step_right(&right, t, t);
    }
    if !loss.is_finite() || grad.iter().flatten().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
        return Err(Error::NonFiniteLoss {
            epoch: 0,
            step: 0,
            detail: format!("loss {loss} or a gradient entry is not finite"),
        });
    }
    Ok((LossEval { loss, floored }, grad))
}
