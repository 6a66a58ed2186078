//! Matrix product states.
//!
//! A state on `N` qubits is a chain of site tensors `A_k[l, s, r]` with shape
//! `(D_{k-1}, 2, D_k)` and `D_0 = D_N = 1`:
//!
//! ```text
//!   ψ(s_1 … s_N) = A_1[s_1] · A_2[s_2] ⋯ A_N[s_N]
//! ```
//!
//! The same type holds reference states produced by the ground-state solvers
//! and the trainable tensors of a Born machine. States are kept unnormalised;
//! anything that needs probabilities divides by [`Mps::norm_squared`].
//!
//! Bitstrings are slices of `0`/`1` bytes, site 0 first. When a state is
//! flattened to a vector, site 0 is the most significant bit.

mod basis;
mod format;

pub use basis::PauliBasis;
pub use format::{read_mps, write_mps, MPS_MAGIC, MPS_VERSION};

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{contract, qr_thin, svd_truncated, DenseTensor, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<DenseTensor>,
    complex_valued: bool,
    canonical_center: Option<usize>,
}

impl Mps {
    /// Validate and wrap site tensors of shape `(D_{k-1}, 2, D_k)`.
    pub fn new(sites: Vec<DenseTensor>, complex_valued: bool) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Shape("an MPS needs at least one site".into()));
        }
        for (k, t) in sites.iter().enumerate() {
            let sh = t.shape();
            if sh.len() != 3 || sh[1] != 2 {
                return Err(Error::Shape(format!("site {k} has shape {sh:?}, expected (Dl, 2, Dr)")));
            }
            if k == 0 && sh[0] != 1 {
                return Err(Error::Shape("left boundary bond must be 1".into()));
            }
            if k + 1 == sites.len() && sh[2] != 1 {
                return Err(Error::Shape("right boundary bond must be 1".into()));
            }
            if k > 0 && sites[k - 1].shape()[2] != sh[0] {
                return Err(Error::Shape(format!(
                    "bond between sites {} and {k} mismatched: {} vs {}",
                    k - 1,
                    sites[k - 1].shape()[2],
                    sh[0]
                )));
            }
            if !complex_valued && t.data().iter().any(|z| z.im != 0.0) {
                return Err(Error::Shape(format!(
                    "site {k} has imaginary entries but the state is flagged real"
                )));
            }
        }
        Ok(Self {
            sites,
            complex_valued,
            canonical_center: None,
        })
    }

    /// Product state from one (unnormalised) two-component vector per site.
    pub fn product(vectors: &[[C64; 2]]) -> Result<Self> {
        let complex = vectors.iter().flatten().any(|z| z.im != 0.0);
        let sites = vectors
            .iter()
            .map(|v| DenseTensor::new(vec![1, 2, 1], v.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites, complex)
    }

    /// Computational basis state `|bits⟩`.
    pub fn basis_state(bits: &[u8]) -> Result<Self> {
        let vs: Vec<[C64; 2]> = bits
            .iter()
            .map(|&b| if b == 0 { [ONE, ZERO] } else { [ZERO, ONE] })
            .collect();
        Self::product(&vs)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` with bond dimension 2.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("GHZ needs at least two sites".into()));
        }
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut sites = Vec::with_capacity(n);
        for k in 0..n {
            let (dl, dr) = (if k == 0 { 1 } else { 2 }, if k + 1 == n { 1 } else { 2 });
            let t = DenseTensor::from_fn(vec![dl, 2, dr], |i| {
                let (l, s, r) = (i[0], i[1], i[2]);
                let branch_l = if k == 0 { s } else { l };
                let branch_r = if k + 1 == n { s } else { r };
                if branch_l == s && branch_r == s {
                    if k == 0 {
                        h
                    } else {
                        ONE
                    }
                } else {
                    ZERO
                }
            });
            sites.push(t);
        }
        Self::new(sites, false)
    }

    /// Random state with interior bonds `bond_dim` (capped by the maximal
    /// Schmidt rank), entries uniform in `[-1, 1)` (real and imaginary).
    pub fn random<R: Rng + ?Sized>(n: usize, bond_dim: usize, complex_valued: bool, rng: &mut R) -> Result<Self> {
        if n == 0 || bond_dim == 0 {
            return Err(Error::InvalidArgument("random MPS needs n >= 1 and bond_dim >= 1".into()));
        }
        let bonds = capped_bonds(n, bond_dim);
        let sites = (0..n)
            .map(|k| {
                DenseTensor::from_fn(vec![bonds[k], 2, bonds[k + 1]], |_| {
                    let re = rng.gen_range(-1.0..1.0);
                    let im = if complex_valued { rng.gen_range(-1.0..1.0) } else { 0.0 };
                    C64::new(re, im)
                })
            })
            .collect();
        Self::new(sites, complex_valued)
    }

    /// Exact (up to `cutoff`/`max_bond` truncation) MPS of a statevector of
    /// length `2^n`, site 0 as most significant bit.
    pub fn from_statevector(psi: &[C64], n: usize, max_bond: usize, cutoff: f64) -> Result<Self> {
        if n == 0 || psi.len() != 1usize << n {
            return Err(Error::Shape(format!("statevector of length {} is not 2^{n}", psi.len())));
        }
        let complex = psi.iter().any(|z| z.im != 0.0);
        let mut sites = Vec::with_capacity(n);
        let mut rest = DenseTensor::new(vec![1, psi.len()], psi.to_vec())?;
        let mut dl = 1;
        for _ in 0..n - 1 {
            let cols = rest.len() / (dl * 2);
            let m = rest.reshape(vec![dl * 2, cols])?;
            let svd = svd_truncated(&m, max_bond, cutoff)?;
            let keep = svd.s.len();
            sites.push(svd.u.reshape(vec![dl, 2, keep])?);
            let mut vh = svd.vh;
            for (i, row) in vh.data_mut().chunks_mut(cols).enumerate() {
                row.iter_mut().for_each(|z| *z *= svd.s[i]);
            }
            rest = vh;
            dl = keep;
        }
        sites.push(rest.reshape(vec![dl, 2, 1])?);
        let mut out = Self::new_unchecked_reality(sites, complex);
        out.canonical_center = Some(n - 1);
        Ok(out)
    }

    fn new_unchecked_reality(mut sites: Vec<DenseTensor>, complex_valued: bool) -> Self {
        if !complex_valued {
            for t in &mut sites {
                t.data_mut().iter_mut().for_each(|z| z.im = 0.0);
            }
        }
        Self {
            sites,
            complex_valued,
            canonical_center: None,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &DenseTensor {
        &self.sites[k]
    }

    /// Mutable access to the tensors; clears any recorded canonical centre.
    pub fn sites_mut(&mut self) -> &mut [DenseTensor] {
        self.canonical_center = None;
        &mut self.sites
    }

    pub fn into_sites(self) -> Vec<DenseTensor> {
        self.sites
    }

    pub fn complex_valued(&self) -> bool {
        self.complex_valued
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.canonical_center
    }

    /// Bond dimensions `D_0 … D_N` (both ends are 1).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b = vec![1];
        b.extend(self.sites.iter().map(|t| t.shape()[2]));
        b
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Total number of complex entries.
    pub fn entry_count(&self) -> usize {
        self.sites.iter().map(|t| t.len()).sum()
    }

    /// Multiply site `k` by `c` (scales every amplitude by `c`).
    pub fn scale_site(&mut self, k: usize, c: C64) {
        let t = &mut self.sites[k];
        t.data_mut().iter_mut().for_each(|z| *z *= c);
        if c.im != 0.0 {
            self.complex_valued = true;
        }
        self.canonical_center = None;
    }

    fn check_bits(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.n_sites() {
            return Err(Error::LengthMismatch {
                expected: self.n_sites(),
                got: bits.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1")));
        }
        Ok(())
    }

    /// `ψ(v)`, unnormalised.
    pub fn amplitude(&self, bits: &[u8]) -> Result<C64> {
        self.check_bits(bits)?;
        let mut v = vec![ONE];
        let mut w = Vec::new();
        for (t, &b) in self.sites.iter().zip(bits) {
            row_times_site(&v, t, b as usize, &mut w);
            std::mem::swap(&mut v, &mut w);
        }
        Ok(v[0])
    }

    /// `Σ_v |ψ(v)|²` by transfer-matrix contraction.
    pub fn norm_squared(&self) -> Result<f64> {
        let z = transfer_overlap(&self.sites, &self.sites).re;
        if z <= 0.0 || !z.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(z)
    }

    /// `⟨self|other⟩ = Σ_v conj(self(v)) · other(v)`.
    pub fn inner_product(&self, other: &Mps) -> Result<C64> {
        if self.n_sites() != other.n_sites() {
            return Err(Error::SizeMismatch(self.n_sites(), other.n_sites()));
        }
        Ok(transfer_overlap(&self.sites, &other.sites))
    }

    /// State whose computational-basis statistics are those of `self`
    /// measured in `basis`.
    pub fn rotate_basis(&self, basis: PauliBasis) -> Mps {
        if basis == PauliBasis::Z {
            return self.clone();
        }
        let u = basis.rotation();
        let sites = self
            .sites
            .iter()
            .map(|t| apply_physical(t, &u))
            .collect();
        Mps {
            sites,
            complex_valued: self.complex_valued || basis == PauliBasis::Y,
            canonical_center: self.canonical_center,
        }
    }

    /// Gauge transform so every tensor left of `center` is left-orthonormal
    /// and every tensor right of it is right-orthonormal, then normalise.
    ///
    /// Returns the new state and the norm `‖ψ‖` that was divided out, so
    /// `self(v) = norm · result(v)`.
    pub fn canonicalize(&self, center: usize) -> Result<(Mps, f64)> {
        let n = self.n_sites();
        if center >= n {
            return Err(Error::InvalidArgument(format!("centre {center} outside 0..{n}")));
        }
        let mut sites = self.sites.clone();
        for k in 0..center {
            let (dl, dr) = (sites[k].shape()[0], sites[k].shape()[2]);
            let m = sites[k].clone().reshape(vec![dl * 2, dr])?;
            let (q, r) = qr_thin(&m)?;
            let keep = q.shape()[1];
            sites[k] = q.reshape(vec![dl, 2, keep])?;
            sites[k + 1] = contract(&r, &sites[k + 1], &[(1, 0)])?;
        }
        for k in (center + 1..n).rev() {
            let (dl, dr) = (sites[k].shape()[0], sites[k].shape()[2]);
            let m = sites[k].clone().reshape(vec![dl, 2 * dr])?;
            let (q, r) = qr_thin(&m.adjoint()?)?;
            let keep = q.shape()[1];
            sites[k] = q.adjoint()?.reshape(vec![keep, 2, dr])?;
            // A_{k-1} · R†
            let rdag = r.adjoint()?;
            sites[k - 1] = contract(&sites[k - 1], &rdag, &[(2, 0)])?;
        }
        let norm = sites[center].frobenius_norm();
        if norm > 0.0 {
            let inv = C64::new(1.0 / norm, 0.0);
            sites[center].data_mut().iter_mut().for_each(|z| *z *= inv);
        }
        let mut out = Mps::new_unchecked_reality(sites, self.complex_valued);
        out.canonical_center = Some(center);
        Ok((out, norm))
    }

    /// Whether the orthonormality conditions for canonical centre `center`
    /// hold to `tol`.
    pub fn is_canonical(&self, center: usize, tol: f64) -> bool {
        for (k, t) in self.sites.iter().enumerate() {
            if k == center {
                continue;
            }
            let (dl, dr) = (t.shape()[0], t.shape()[2]);
            let g = if k < center {
                let m = t.clone().reshape(vec![dl * 2, dr]).expect("reshape");
                m.adjoint().expect("rank 2").matmul(&m).expect("shapes")
            } else {
                let m = t.clone().reshape(vec![dl, 2 * dr]).expect("reshape");
                m.matmul(&m.adjoint().expect("rank 2")).expect("shapes")
            };
            let d = g.shape()[0];
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { ONE } else { ZERO };
                    if (g.get(&[i, j]) - want).norm() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Draw `count` i.i.d. bitstrings from `|ψ(v)|² / Σ|ψ|²`.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<Vec<u8>>> {
        self.norm_squared()?;
        let (canon, _) = self.canonicalize(0)?;
        let sampler = Sampler::new(&canon);
        Ok((0..count).map(|_| sampler.draw(rng)).collect())
    }

    /// Squared Schmidt coefficients across the bond between sites `cut-1`
    /// and `cut`, non-increasing, summing to one.
    pub fn entanglement_spectrum(&self, cut: usize) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if cut == 0 || cut >= n {
            return Err(Error::InvalidCut { cut, n: n.max(1) });
        }
        self.norm_squared()?;
        let (canon, _) = self.canonicalize(cut - 1)?;
        let c = canon.site(cut - 1);
        let (dl, dr) = (c.shape()[0], c.shape()[2]);
        let m = c.clone().reshape(vec![dl * 2, dr])?;
        let svd = svd_truncated(&m, dl * 2 + dr, 0.0)?;
        let mut lam: Vec<f64> = svd.s.iter().map(|s| s * s).collect();
        let total: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|x| *x /= total);
        Ok(lam)
    }

    /// von Neumann entropy `-Σ λ ln λ` of the entanglement spectrum.
    pub fn bipartite_entropy(&self, cut: usize) -> Result<f64> {
        Ok(entropy_of(&self.entanglement_spectrum(cut)?))
    }

    /// Dense statevector (site 0 most significant), for small chains.
    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        if self.n_sites() > 24 {
            return Err(Error::TooLarge { n: self.n_sites(), limit: 24 });
        }
        let mut acc = self.sites[0].clone();
        for t in &self.sites[1..] {
            let r = acc.rank();
            acc = contract(&acc, t, &[(r - 1, 0)])?;
        }
        Ok(acc.into_data())
    }
}

impl Mps {
    /// `L[k]`: contraction of `⟨self|self⟩` over sites `0..k`, `k = 0..=N`.
    fn left_envs(&self) -> Vec<Vec<C64>> {
        let mut envs = Vec::with_capacity(self.n_sites() + 1);
        envs.push(vec![ONE]);
        let mut d = 1;
        for t in &self.sites {
            let next = transfer_step(envs.last().expect("env"), d, d, t, t);
            envs.push(next);
            d = t.shape()[2];
        }
        envs
    }

    /// `R[k]`: contraction over sites `k..N`, `k = 0..=N`.
    fn right_envs(&self) -> Vec<Vec<C64>> {
        let n = self.n_sites();
        let mut envs = vec![Vec::new(); n + 1];
        envs[n] = vec![ONE];
        for k in (0..n).rev() {
            let t = &self.sites[k];
            envs[k] = transfer_step_right(&envs[k + 1], t, t);
        }
        envs
    }

    /// `⟨O_i⟩` for every site `i`, normalised.
    pub fn local_expectations(&self, op: &[[C64; 2]; 2]) -> Result<Vec<C64>> {
        let z = self.norm_squared()?;
        let (l, r) = (self.left_envs(), self.right_envs());
        Ok((0..self.n_sites())
            .map(|i| {
                let t = &self.sites[i];
                let d = t.shape()[0];
                let e = transfer_step(&l[i], d, d, t, &apply_physical(t, op));
                close(&e, &r[i + 1]) / z
            })
            .collect())
    }

    /// `⟨A_i B_j⟩` for every pair `i < j`, as `out[i][j]`, normalised.
    pub fn pair_expectations(&self, a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Result<Vec<Vec<C64>>> {
        let n = self.n_sites();
        let z = self.norm_squared()?;
        let (l, r) = (self.left_envs(), self.right_envs());
        let mut out = vec![vec![ZERO; n]; n];
        for i in 0..n {
            let t = &self.sites[i];
            let d = t.shape()[0];
            let mut env = transfer_step(&l[i], d, d, t, &apply_physical(t, a));
            for j in i + 1..n {
                let tj = &self.sites[j];
                let dj = tj.shape()[0];
                let closed = transfer_step(&env, dj, dj, tj, &apply_physical(tj, b));
                out[i][j] = close(&closed, &r[j + 1]) / z;
                env = transfer_step(&env, dj, dj, tj, tj);
            }
        }
        Ok(out)
    }
}

fn close(left: &[C64], right: &[C64]) -> C64 {
    left.iter().zip(right).map(|(a, b)| a * b).sum()
}

/// `E'[la, lb] = Σ_{s, ra, rb} conj(A[la, s, ra]) B[lb, s, rb] E[ra, rb]`.
pub(crate) fn transfer_step_right(env: &[C64], ta: &DenseTensor, tb: &DenseTensor) -> Vec<C64> {
    let (la, ra) = (ta.shape()[0], ta.shape()[2]);
    let (lb, rb) = (tb.shape()[0], tb.shape()[2]);
    let (da, db) = (ta.data(), tb.data());
    // tmp[lb, s, ra] = Σ_rb B[lb, s, rb] E[ra, rb]
    let mut tmp = vec![ZERO; lb * 2 * ra];
    for row in 0..lb * 2 {
        let brow = &db[row * rb..(row + 1) * rb];
        for x in 0..ra {
            let erow = &env[x * rb..(x + 1) * rb];
            tmp[row * ra + x] = brow.iter().zip(erow).map(|(p, q)| p * q).sum();
        }
    }
    let mut out = vec![ZERO; la * lb];
    for i in 0..la {
        for s in 0..2 {
            let arow = &da[(i * 2 + s) * ra..(i * 2 + s + 1) * ra];
            for j in 0..lb {
                let trow = &tmp[(j * 2 + s) * ra..(j * 2 + s + 1) * ra];
                out[i * lb + j] += arow.iter().zip(trow).map(|(p, q)| p.conj() * q).sum::<C64>();
            }
        }
    }
    out
}

/// `-Σ λ ln λ` with `0 ln 0 = 0`.
pub fn entropy_of(lam: &[f64]) -> f64 {
    lam.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn capped_bonds(n: usize, bond_dim: usize) -> Vec<usize> {
    (0..=n)
        .map(|k| {
            let left = k.min(62);
            let right = (n - k).min(62);
            let cap = 1usize << left.min(right);
            bond_dim.min(cap).max(1)
        })
        .map(|d| d.max(1))
        .enumerate()
        .map(|(k, d)| if k == 0 || k == n { 1 } else { d })
        .collect()
}

/// `out = v · A[s]` for a row vector `v` of length `Dl`.
pub(crate) fn row_times_site(v: &[C64], t: &DenseTensor, s: usize, out: &mut Vec<C64>) {
    let sh = t.shape();
    let (dl, dr) = (sh[0], sh[2]);
    out.clear();
    out.resize(dr, ZERO);
    let data = t.data();
    for (l, &vl) in v.iter().enumerate().take(dl) {
        if vl == ZERO {
            continue;
        }
        let row = &data[(l * 2 + s) * dr..(l * 2 + s + 1) * dr];
        for (o, a) in out.iter_mut().zip(row) {
            *o += vl * a;
        }
    }
}

/// `Σ_v conj(a(v)) b(v)` via left-to-right transfer matrices.
pub(crate) fn transfer_overlap(a: &[DenseTensor], b: &[DenseTensor]) -> C64 {
    let mut env = vec![ONE];
    let (mut ea, mut eb) = (1usize, 1usize);
    for (ta, tb) in a.iter().zip(b) {
        env = transfer_step(&env, ea, eb, ta, tb);
        ea = ta.shape()[2];
        eb = tb.shape()[2];
    }
    env[0]
}

/// `E'[ra, rb] = Σ_{la, lb, s} conj(A[la, s, ra]) E[la, lb] B[lb, s, rb]`.
pub(crate) fn transfer_step(env: &[C64], la: usize, lb: usize, ta: &DenseTensor, tb: &DenseTensor) -> Vec<C64> {
    let ra = ta.shape()[2];
    let rb = tb.shape()[2];
    let (da, db) = (ta.data(), tb.data());
    // tmp[la, s, rb] = Σ_lb E[la, lb] B[lb, s, rb]
    let mut tmp = vec![ZERO; la * 2 * rb];
    for i in 0..la {
        for j in 0..lb {
            let e = env[i * lb + j];
            if e == ZERO {
                continue;
            }
            let src = &db[j * 2 * rb..(j + 1) * 2 * rb];
            let dst = &mut tmp[i * 2 * rb..(i + 1) * 2 * rb];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += e * s;
            }
        }
    }
    let mut out = vec![ZERO; ra * rb];
    for i in 0..la {
        for s in 0..2 {
            let arow = &da[(i * 2 + s) * ra..(i * 2 + s + 1) * ra];
            let trow = &tmp[(i * 2 + s) * rb..(i * 2 + s + 1) * rb];
            for (p, a) in arow.iter().enumerate() {
                let ac = a.conj();
                if ac == ZERO {
                    continue;
                }
                let orow = &mut out[p * rb..(p + 1) * rb];
                for (o, t) in orow.iter_mut().zip(trow) {
                    *o += ac * t;
                }
            }
        }
    }
    out
}

/// Apply a single-qubit matrix `u` to the physical index: `A'[l, s', r] =
/// Σ_s u[s'][s] A[l, s, r]`.
pub(crate) fn apply_physical(t: &DenseTensor, u: &[[C64; 2]; 2]) -> DenseTensor {
    let sh = t.shape();
    let (dl, dr) = (sh[0], sh[2]);
    let d = t.data();
    let mut out = vec![ZERO; d.len()];
    for l in 0..dl {
        for r in 0..dr {
            let a0 = d[(l * 2) * dr + r];
            let a1 = d[(l * 2 + 1) * dr + r];
            out[(l * 2) * dr + r] = u[0][0] * a0 + u[0][1] * a1;
            out[(l * 2 + 1) * dr + r] = u[1][0] * a0 + u[1][1] * a1;
        }
    }
    DenseTensor::new(sh.to_vec(), out).expect("same shape")
}

/// Ancestral sampler over a normalised, right-canonical (centre 0) state.
pub(crate) struct Sampler<'a> {
    mps: &'a Mps,
}

impl<'a> Sampler<'a> {
    pub(crate) fn new(mps: &'a Mps) -> Self {
        debug_assert_eq!(mps.canonical_center(), Some(0));
        Self { mps }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let mut bits = Vec::with_capacity(self.mps.n_sites());
        let mut v = vec![ONE];
        let mut w0 = Vec::new();
        let mut w1 = Vec::new();
        for t in self.mps.sites() {
            row_times_site(&v, t, 0, &mut w0);
            row_times_site(&v, t, 1, &mut w1);
            let p0: f64 = w0.iter().map(|z| z.norm_sqr()).sum();
            let p1: f64 = w1.iter().map(|z| z.norm_sqr()).sum();
            // renormalise the conditional to absorb drift
            let total = p0 + p1;
            let u: f64 = rng.gen::<f64>();
            let (bit, w, p) = if u * total < p0 { (0u8, &mut w0, p0) } else { (1u8, &mut w1, p1) };
            let inv = 1.0 / p.sqrt();
            v.clear();
            v.extend(w.iter().map(|z| z * inv));
            bits.push(bit);
        }
        bits
    }
}
