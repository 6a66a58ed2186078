//! Hamiltonians on the full Hilbert space, stored row-compressed.
//!
//! Basis index `i` encodes site `k` in bit `n-1-k` (site 0 most significant),
//! matching [`crate::Mps::to_statevector`].

use num_complex::Complex64 as C64;

use super::{RydbergParams, TransverseAxis, XYParams};
use crate::error::{Error, Result};
use crate::linalg::{eigh, lanczos_lowest, DenseTensor, LanczosOptions, ZERO};

/// Largest chain handled on the full space.
pub const DENSE_LIMIT: usize = 16;

/// Hermitian operator on `2^n` states, compressed sparse rows.
#[derive(Clone, Debug)]
pub struct SpinOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

fn bit(state: usize, n: usize, k: usize) -> usize {
    (state >> (n - 1 - k)) & 1
}

fn flip(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

// σ_y|0⟩ = i|1⟩, σ_y|1⟩ = −i|0⟩
fn y_phase(b: usize) -> C64 {
    if b == 0 {
        C64::new(0.0, 1.0)
    } else {
        C64::new(0.0, -1.0)
    }
}

impl SpinOperator {
    fn check_n(n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("chain needs at least one site".into()));
        }
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        Ok(())
    }

    /// Build from a column generator: `column(s, out)` pushes `(r, H[r, s])`.
    fn from_columns(n: usize, mut column: impl FnMut(usize, &mut Vec<(usize, C64)>)) -> Self {
        let dim = 1usize << n;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut buf = Vec::new();
        row_ptr.push(0);
        for s in 0..dim {
            buf.clear();
            column(s, &mut buf);
            buf.sort_by_key(|e| e.0);
            // Hermitian: row s holds conj of column s
            let mut last: Option<usize> = None;
            for &(r, v) in &buf {
                if last == Some(r) {
                    *vals.last_mut().expect("entry") += v.conj();
                } else {
                    cols.push(r as u32);
                    vals.push(v.conj());
                    last = Some(r);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub(crate) fn rydberg(p: &RydbergParams, n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let half = p.omega / 2.0;
        let v: Vec<f64> = (0..=p.truncation_range).map(|d| if d == 0 { 0.0 } else { p.interaction(d) }).collect();
        Ok(Self::from_columns(n, |s, out| {
            let mut diag = 0.0;
            for i in 0..n {
                if bit(s, n, i) == 1 {
                    diag -= p.delta;
                    for (d, vd) in v.iter().enumerate().skip(1) {
                        if i + d < n && bit(s, n, i + d) == 1 {
                            diag += vd;
                        }
                    }
                }
            }
            out.push((s, C64::new(diag, 0.0)));
            if half != 0.0 {
                for k in 0..n {
                    let r = s ^ flip(n, k);
                    let amp = match p.transverse_axis {
                        TransverseAxis::X => C64::new(half, 0.0),
                        TransverseAxis::Y => y_phase(bit(s, n, k)) * half,
                    };
                    out.push((r, amp));
                }
            }
        }))
    }

    pub(crate) fn xy(p: &XYParams, n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let (wx, wy) = (p.xx_weight(), p.yy_weight());
        Ok(Self::from_columns(n, |s, out| {
            let mut diag = 0.0;
            for k in 0..n {
                let sz = if bit(s, n, k) == 0 { 1.0 } else { -1.0 };
                diag -= p.field / 2.0 * sz;
            }
            out.push((s, C64::new(diag, 0.0)));
            for k in 0..n.saturating_sub(1) {
                let r = s ^ flip(n, k) ^ flip(n, k + 1);
                let yy = y_phase(bit(s, n, k)) * y_phase(bit(s, n, k + 1));
                let amp = C64::new(wx, 0.0) + yy * wy;
                if amp != ZERO {
                    out.push((r, amp));
                }
            }
        }))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[e] * x[self.cols[e] as usize];
            }
            *out = acc;
        }
    }

    /// `⟨x|H|x⟩ / ⟨x|x⟩`.
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let mut y = vec![ZERO; x.len()];
        self.apply(x, &mut y);
        let num: C64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        num.re / den
    }

    /// Explicit matrix, for chains of at most 12 sites.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        if self.n > 12 {
            return Err(Error::TooLarge { n: self.n, limit: 12 });
        }
        let dim = self.dim();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                data[r * dim + self.cols[e] as usize] += self.vals[e];
            }
        }
        DenseTensor::matrix(dim, dim, data)
    }

    /// Largest `|H − H†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[e] as usize;
                let back = (self.row_ptr[c]..self.row_ptr[c + 1])
                    .find(|&f| self.cols[f] as usize == r)
                    .map(|f| self.vals[f])
                    .unwrap_or(ZERO);
                worst = worst.max((self.vals[e] - back.conj()).norm());
            }
        }
        worst
    }

    /// The `k` lowest eigenpairs, ascending. Vectors are normalised.
    ///
    /// Small spaces go through a full dense diagonalisation; larger ones
    /// through Lanczos with deflation of the pairs already found.
    pub fn lowest(&self, k: usize, opts: &LanczosOptions) -> Result<Vec<(f64, Vec<C64>)>> {
        let dim = self.dim();
        if k == 0 || k > dim {
            return Err(Error::InvalidArgument(format!("cannot take {k} eigenpairs of a {dim}-dim space")));
        }
        if dim <= 256 {
            let e = eigh(&self.to_dense()?)?;
            return Ok((0..k)
                .map(|j| {
                    let col = dim - 1 - j;
                    let v = (0..dim).map(|i| e.vectors.get(&[i, col])).collect();
                    (e.values[col], v)
                })
                .collect());
        }
        let mut found: Vec<(f64, Vec<C64>)> = Vec::with_capacity(k);
        // deterministic, generic start vector
        let start: Vec<C64> = (0..dim)
            .map(|i| C64::new(1.0 + 0.5 * ((i as f64) * 0.754_877_666).fract(), 0.0))
            .collect();
        for _ in 0..k {
            let deflate: Vec<Vec<C64>> = found.iter().map(|p| p.1.clone()).collect();
            let r = lanczos_lowest(|x, y| self.apply(x, y), &start, &deflate, opts)?;
            found.push((r.value, r.vector));
        }
        Ok(found)
    }
}
