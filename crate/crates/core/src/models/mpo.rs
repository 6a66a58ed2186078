//! Matrix product operators built from finite-state automata.

use num_complex::Complex64 as C64;

use super::{RydbergParams, TransverseAxis, XYParams};
use crate::error::{Error, Result};
use crate::linalg::{contract, DenseTensor, ONE, ZERO};
use crate::mps::Mps;

type Op = [[C64; 2]; 2];

const I2: Op = [[ONE, ZERO], [ZERO, ONE]];
const NUM: Op = [[ZERO, ZERO], [ZERO, ONE]];
const SX: Op = [[ZERO, ONE], [ONE, ZERO]];
const SY: Op = [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]];
const SZ: Op = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];

fn scaled(op: &Op, c: f64) -> Op {
    let mut o = *op;
    o.iter_mut().flatten().for_each(|z| *z *= c);
    o
}

fn sum(a: &Op, b: &Op) -> Op {
    let mut o = *a;
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] += b[i][j];
        }
    }
    o
}

/// Operator tensors `W_k[l, out, in, r]`, boundary bonds 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    tensors: Vec<DenseTensor>,
}

impl Mpo {
    pub fn new(tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Shape("an MPO needs at least one site".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            let sh = t.shape();
            if sh.len() != 4 || sh[1] != 2 || sh[2] != 2 {
                return Err(Error::Shape(format!("MPO site {k} has shape {sh:?}")));
            }
            let bad_edge = (k == 0 && sh[0] != 1) || (k + 1 == tensors.len() && sh[3] != 1);
            let bad_bond = k > 0 && tensors[k - 1].shape()[3] != sh[0];
            if bad_edge || bad_bond {
                return Err(Error::Shape(format!("MPO bond mismatch at site {k}")));
            }
        }
        Ok(Self { tensors })
    }

    /// Assemble from an automaton with `states` bond states: `bulk[a][b]` is
    /// the operator moving from state `a` to `b`, `start` the initial state and
    /// `end` the accepting one.
    fn from_automaton(n: usize, states: usize, start: usize, end: usize, bulk: &[(usize, usize, Op)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("MPO needs at least two sites".into()));
        }
        let mut tensors = Vec::with_capacity(n);
        for k in 0..n {
            let rows: Vec<usize> = if k == 0 { vec![start] } else { (0..states).collect() };
            let cols: Vec<usize> = if k + 1 == n { vec![end] } else { (0..states).collect() };
            let mut t = DenseTensor::zeros(vec![rows.len(), 2, 2, cols.len()]);
            for &(a, b, ref op) in bulk {
                let (Some(l), Some(r)) = (rows.iter().position(|&x| x == a), cols.iter().position(|&x| x == b)) else {
                    continue;
                };
                for o in 0..2 {
                    for i in 0..2 {
                        let idx = [l, o, i, r];
                        let cur = t.get(&idx);
                        t.set(&idx, cur + op[o][i]);
                    }
                }
            }
            tensors.push(t);
        }
        Self::new(tensors)
    }

    /// States: `R+1` nothing placed yet, `d ∈ 1..=R` an `n` placed `d` sites
    /// back, `0` all terms complete.
    pub(crate) fn rydberg(p: &RydbergParams, n: usize) -> Result<Self> {
        let r = p.truncation_range;
        let start = r + 1;
        let t_op = match p.transverse_axis {
            TransverseAxis::X => SX,
            TransverseAxis::Y => SY,
        };
        let local = sum(&scaled(&t_op, p.omega / 2.0), &scaled(&NUM, -p.delta));
        let mut bulk = vec![(start, start, I2), (start, 0, local), (start, 1, NUM), (0, 0, I2)];
        for d in 1..=r {
            if d < r {
                bulk.push((d, d + 1, I2));
            }
            bulk.push((d, 0, scaled(&NUM, p.interaction(d))));
        }
        Self::from_automaton(n, r + 2, start, 0, &bulk)
    }

    /// States: `3` start, `1` after `σ_x`, `2` after `σ_y`, `0` complete.
    pub(crate) fn xy(p: &XYParams, n: usize) -> Result<Self> {
        let mut bulk = vec![(3, 3, I2), (3, 0, scaled(&SZ, -p.field / 2.0)), (0, 0, I2)];
        // vanishing couplings leave their channel empty
        if p.xx_weight() != 0.0 {
            bulk.extend([(3, 1, SX), (1, 0, scaled(&SX, p.xx_weight()))]);
        }
        if p.yy_weight() != 0.0 {
            bulk.extend([(3, 2, SY), (2, 0, scaled(&SY, p.yy_weight()))]);
        }
        Self::from_automaton(n, 4, 3, 0, &bulk)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b = vec![1];
        b.extend(self.tensors.iter().map(|t| t.shape()[3]));
        b
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Whether every site operator is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.tensors.iter().all(|t| {
            let sh = t.shape();
            (0..sh[0]).all(|l| (0..sh[3]).all(|r| t.get(&[l, 0, 1, r]) == ZERO && t.get(&[l, 1, 0, r]) == ZERO))
        })
    }

    /// Explicit `2^n × 2^n` matrix (site 0 most significant), `n ≤ 12`.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let n = self.n_sites();
        if n > 12 {
            return Err(Error::TooLarge { n, limit: 12 });
        }
        // acc[out_1..out_k, in_1..in_k, r], kept as rank 3 (out, in, r)
        let first = &self.tensors[0];
        let mut acc = first.clone().reshape(vec![2, 2, first.shape()[3]])?;
        let mut dim = 2;
        for t in &self.tensors[1..] {
            let r = t.shape()[3];
            // (o, i, b) x (b, o', i', r) -> (o, i, o', i', r)
            let c = contract(&acc, t, &[(2, 0)])?;
            let c = c.permute(&[0, 2, 1, 3, 4])?;
            dim *= 2;
            acc = c.reshape(vec![dim, dim, r])?;
        }
        acc.reshape(vec![dim, dim])
    }

    /// `⟨ψ|W|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &Mps) -> Result<f64> {
        if psi.n_sites() != self.n_sites() {
            return Err(Error::SizeMismatch(psi.n_sites(), self.n_sites()));
        }
        // env[a, w, b]: conj(bra) bond, MPO bond, ket bond
        let mut env = vec![ONE];
        let (mut da, mut dw) = (1usize, 1usize);
        for (a, w) in psi.sites().iter().zip(&self.tensors) {
            let (ra, rw) = (a.shape()[2], w.shape()[3]);
            let ad = a.data();
            let mut next = vec![ZERO; ra * rw * ra];
            for la in 0..da {
                for lw in 0..dw {
                    for lb in 0..da {
                        let e = env[(la * dw + lw) * da + lb];
                        if e == ZERO {
                            continue;
                        }
                        for o in 0..2 {
                            for i in 0..2 {
                                for rwi in 0..rw {
                                    let wv = w.get(&[lw, o, i, rwi]);
                                    if wv == ZERO {
                                        continue;
                                    }
                                    let ew = e * wv;
                                    for x in 0..ra {
                                        let bra = ad[(la * 2 + o) * ra + x].conj();
                                        if bra == ZERO {
                                            continue;
                                        }
                                        let f = ew * bra;
                                        for y in 0..ra {
                                            next[(x * rw + rwi) * ra + y] += f * ad[(lb * 2 + i) * ra + y];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            env = next;
            da = ra;
            dw = rw;
        }
        Ok(env[0].re / psi.norm_squared()?)
    }
}
