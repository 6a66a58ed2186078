//! Dense complex tensors and the handful of factorizations the rest of the
//! crate is built on.
//!
//! Storage is row-major `Complex<f64>`. Bond dimensions in this crate stay
//! small (tens), so everything is dense.

mod decomp;
mod lanczos;

pub use decomp::{eigh, qr_decompose, qr_thin, svd_truncated, Eigh, Svd};
pub use lanczos::{lanczos_lowest, LanczosOptions, LanczosResult};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Complex zero.
pub const ZERO: C64 = C64::new(0.0, 0.0);
/// Complex one.
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    /// Build a tensor, checking the entry count and that all entries are finite.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("zero dimension in {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Shape("non-finite entry".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![ZERO; len],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self { shape, data }
    }

    /// Square identity matrix.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(vec![n, n], |i| if i[0] == i[1] { ONE } else { ZERO })
    }

    /// Rank-2 tensor from row-major entries.
    pub fn matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Same data, new shape with equal entry count.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Reorder axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!("{perm:?} is not a permutation of {r} axes")));
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let old_strides = self.strides();
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let gather: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; r];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            for ax in (0..r).rev() {
                idx[ax] += 1;
                src += gather[ax];
                if idx[ax] < new_shape[ax] {
                    break;
                }
                src -= gather[ax] * new_shape[ax];
                idx[ax] = 0;
            }
        }
        Ok(Self {
            shape: new_shape,
            data,
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn adjoint(&self) -> Result<Self> {
        self.require_rank2("adjoint")?;
        Ok(self.permute(&[1, 0])?.conj())
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.require_rank2("matmul")?;
        other.require_rank2("matmul")?;
        contract(self, other, &[(1, 0)])
    }

    pub(crate) fn require_rank2(&self, what: &str) -> Result<(usize, usize)> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!(
                "{what} needs a rank-2 tensor, got shape {:?}",
                self.shape
            )));
        }
        Ok((self.shape[0], self.shape[1]))
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Row-major `c += a · b` with `a: m×k`, `b: k×n`.
pub(crate) fn gemm_acc(a: &[C64], b: &[C64], c: &mut [C64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aip * bj;
            }
        }
    }
}

/// Contract `a` with `b` over the listed `(axis of a, axis of b)` pairs.
///
/// Result axes are the free axes of `a` followed by the free axes of `b`,
/// each in their original order. A contraction over every axis yields a
/// rank-0 tensor (shape `[]`, one entry).
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(Error::Shape(format!(
                "contract: axis pair ({ia}, {ib}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::Shape(format!(
                "contract: axis pair ({ia}, {ib}) repeats an axis"
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::ContractMismatch {
                axis_a: ia,
                axis_b: ib,
                dim_a: a.shape[ia],
                dim_b: b.shape[ib],
            });
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !used_b[i]).collect();

    let mut perm_a = free_a.clone();
    perm_a.extend(pairs.iter().map(|p| p.0));
    let mut perm_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    perm_b.extend(free_b.iter().copied());

    let pa = a.permute(&perm_a)?;
    let pb = b.permute(&perm_b)?;
    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();

    let mut out = vec![ZERO; m * n];
    gemm_acc(&pa.data, &pb.data, &mut out, m, k, n);

    let mut shape: Vec<usize> = free_a.iter().map(|&i| a.shape[i]).collect();
    shape.extend(free_b.iter().map(|&i| b.shape[i]));
    Ok(DenseTensor { shape, data: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(shape: Vec<usize>, seed: u64) -> DenseTensor {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(shape, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_times_vector() {
        let id = DenseTensor::identity(2);
        let v = DenseTensor::new(vec![2], vec![ONE, ZERO]).unwrap();
        let r = contract(&id, &v, &[(1, 0)]).unwrap();
        assert_eq!(r.shape(), &[2]);
        assert_eq!(r.data(), &[ONE, ZERO]);
    }

    #[test]
    fn full_contraction_with_conjugate_is_norm() {
        let t = random(vec![3, 2, 4], 1);
        let r = contract(&t.conj(), &t, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(r.shape(), &[] as &[usize]);
        let v = r.data()[0];
        assert!(v.re >= 0.0);
        assert!(v.im.abs() < 1e-14);
        assert!((v.re - t.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn matches_triple_loop() {
        let a = random(vec![3, 4, 2], 2);
        let b = random(vec![4, 5], 3);
        let r = contract(&a, &b, &[(1, 0)]).unwrap();
        assert_eq!(r.shape(), &[3, 2, 5]);
        for i in 0..3 {
            for j in 0..2 {
                for l in 0..5 {
                    let mut acc = ZERO;
                    for k in 0..4 {
                        acc += a.get(&[i, k, j]) * b.get(&[k, l]);
                    }
                    let got = r.get(&[i, j, l]);
                    assert!((got - acc).norm() <= 1e-12 * acc.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn mismatch_names_axis_pair() {
        let a = random(vec![3, 4], 4);
        let b = random(vec![5, 2], 5);
        let err = contract(&a, &b, &[(1, 0)]).unwrap_err();
        assert!(matches!(err, Error::ContractMismatch { axis_a: 1, axis_b: 0, dim_a: 4, dim_b: 5 }));
        assert!(err.to_string().contains("(1, 0)"));
    }

    #[test]
    fn repeated_axis_is_rejected() {
        let a = random(vec![2, 2], 6);
        assert!(contract(&a, &a, &[(0, 0), (0, 1)]).is_err());
    }

    #[test]
    fn permute_round_trip() {
        let a = random(vec![2, 3, 4], 7);
        let p = a.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]), a.get(&[1, 2, 3]));
        let back = p.permute(&[1, 2, 0]).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(DenseTensor::new(vec![2, 2], vec![ONE; 3]).is_err());
        assert!(DenseTensor::new(vec![1], vec![C64::new(f64::NAN, 0.0)]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn contract_is_bilinear(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let a = random(vec![2, 3], seed);
            let b = random(vec![3, 2], seed + 1);
            let alpha = C64::new(re, im);
            let lhs = contract(&a.scale(alpha), &b, &[(1, 0)]).unwrap();
            let rhs = contract(&a, &b, &[(1, 0)]).unwrap().scale(alpha);
            for (x, y) in lhs.data().iter().zip(rhs.data()) {
                proptest::prop_assert!((x - y).norm() < 1e-12 * (1.0 + y.norm()));
            }
        }
    }
}
