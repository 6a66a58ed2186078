use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;

use super::DenseTensor;
use crate::error::{Error, Result};

/// Truncated singular value decomposition `m ≈ u · diag(s) · vh`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseTensor,
    pub s: Vec<f64>,
    pub vh: DenseTensor,
    /// Sum of squared discarded singular values.
    pub discarded_weight: f64,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues non-increasing.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DenseTensor,
}

fn to_na(m: &DenseTensor) -> Result<DMatrix<C64>> {
    let (r, c) = m.require_rank2("factorization")?;
    Ok(DMatrix::from_row_slice(r, c, m.data()))
}

fn from_na(m: &DMatrix<C64>) -> DenseTensor {
    let (r, c) = m.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    DenseTensor::new(vec![r, c], data).expect("shape from nalgebra")
}

fn full_svd(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    if a.nrows() < a.ncols() {
        let (u, s, vt) = full_svd(&a.adjoint())?;
        return Ok((vt.adjoint(), s, u.adjoint()));
    }
    if a.nrows() > a.ncols() {
        // reduce to the square triangular factor first
        let qr = a.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let (ur, s, vt) = full_svd(&r)?;
        return Ok((q * ur, s, vt));
    }
    let scale = a.norm();
    if let Some(svd) = SVD::try_new(a.clone(), true, true, 5.0 * f64::EPSILON, 0) {
        if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
            let s: Vec<f64> = svd.singular_values.iter().copied().collect();
            if s.iter().all(|x| x.is_finite()) && reconstruction_error(&u, &s, &vt, a) <= 1e-12 * scale {
                return Ok((u, s, vt));
            }
        }
    }
    // the implicit-shift SVD occasionally returns an inaccurate factorization
    // on rank-deficient input; Jacobi is slower but reliable
    let (u, s, vt) = jacobi_svd(a)?;
    if reconstruction_error(&u, &s, &vt, a) <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
        Ok((u, s, vt))
    } else {
        Err(Error::Factorization("SVD did not converge".into()))
    }
}

fn reconstruction_error(u: &DMatrix<C64>, s: &[f64], vt: &DMatrix<C64>, a: &DMatrix<C64>) -> f64 {
    let mut us = u.clone();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= C64::new(s[j], 0.0);
    }
    (us * vt - a).norm()
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
fn jacobi_svd(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let xp = m[(i, p)];
                        let xq = m[(i, q)] * phase;
                        m[(i, p)] = xp * c - xq * sn;
                        m[(i, q)] = xp * sn + xq * c;
                    }
                }
            }
        }
        if !rotated {
            let mut order: Vec<usize> = (0..n).collect();
            let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
            order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite"));
            let smax = norms[order[0]];
            let mut u = DMatrix::<C64>::zeros(w.nrows(), n);
            let mut vs = DMatrix::<C64>::zeros(n, n);
            let mut s = Vec::with_capacity(n);
            for (k, &j) in order.iter().enumerate() {
                let sigma = norms[j];
                s.push(sigma);
                vs.set_column(k, &v.column(j));
                if sigma > 1e-14 * smax && sigma > 0.0 {
                    u.set_column(k, &(w.column(j) / C64::new(sigma, 0.0)));
                } else {
                    // complete the basis for null directions
                    let mut e = nalgebra::DVector::<C64>::zeros(w.nrows());
                    for trial in 0..w.nrows() {
                        e.fill(C64::new(0.0, 0.0));
                        e[(trial + k) % w.nrows()] = C64::new(1.0, 0.0);
                        for _ in 0..2 {
                            for m in 0..k {
                                let c = u.column(m).dotc(&e);
                                e -= u.column(m) * c;
                            }
                        }
                        if e.norm() > 0.5 {
                            break;
                        }
                    }
                    let nrm = e.norm();
                    u.set_column(k, &(e / C64::new(nrm, 0.0)));
                }
            }
            return Ok((u, s, vs.adjoint()));
        }
    }
    Err(Error::Factorization("Jacobi SVD did not converge".into()))
}

/// SVD keeping `min(max_rank, #{s : s / s_max > cutoff})` values, never fewer
/// than one.
pub fn svd_truncated(m: &DenseTensor, max_rank: usize, cutoff: f64) -> Result<Svd> {
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be positive".into()));
    }
    if !(cutoff >= 0.0) {
        return Err(Error::InvalidArgument("cutoff must be non-negative".into()));
    }
    let a = to_na(m)?;
    let (rows, cols) = a.shape();
    let (u, s, vt) = full_svd(&a)?;

    // stable sort keeps input order among ties
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite"));

    let smax = s[order[0]];
    let above = if smax > 0.0 {
        order.iter().filter(|&&i| s[i] / smax > cutoff).count()
    } else {
        0
    };
    let keep = above.min(max_rank).max(1);

    let mut ud = Vec::with_capacity(rows * keep);
    for i in 0..rows {
        for &k in &order[..keep] {
            ud.push(u[(i, k)]);
        }
    }
    let mut vd = Vec::with_capacity(keep * cols);
    for &k in &order[..keep] {
        for j in 0..cols {
            vd.push(vt[(k, j)]);
        }
    }
    let kept: Vec<f64> = order[..keep].iter().map(|&k| s[k]).collect();
    let discarded_weight = order[keep..].iter().map(|&k| s[k] * s[k]).sum();
    Ok(Svd {
        u: DenseTensor::new(vec![rows, keep], ud)?,
        s: kept,
        vh: DenseTensor::new(vec![keep, cols], vd)?,
        discarded_weight,
    })
}

/// Householder QR of a tall (or square) matrix: `Q` has orthonormal columns,
/// `R` is upper triangular.
pub fn qr_decompose(m: &DenseTensor) -> Result<(DenseTensor, DenseTensor)> {
    let (r, c) = m.require_rank2("qr_decompose")?;
    if r < c {
        return Err(Error::Shape(format!(
            "qr_decompose needs rows >= columns, got {r}x{c}"
        )));
    }
    qr_thin(m)
}

/// Thin QR for any shape: `Q` is `r × min(r, c)`, `R` is `min(r, c) × c`.
pub fn qr_thin(m: &DenseTensor) -> Result<(DenseTensor, DenseTensor)> {
    let a = to_na(m)?;
    let qr = a.qr();
    Ok((from_na(&qr.q()), from_na(&qr.r())))
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eigh(m: &DenseTensor) -> Result<Eigh> {
    let (r, c) = m.require_rank2("eigh")?;
    if r != c {
        return Err(Error::Shape(format!("eigh needs a square matrix, got {r}x{c}")));
    }
    let scale = m.data().iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let mut dev = 0.0f64;
    for i in 0..r {
        for j in i..r {
            dev = dev.max((m.get(&[i, j]) - m.get(&[j, i]).conj()).norm());
        }
    }
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let a = to_na(m)?;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Factorization("eigensolver did not converge".into()))?;
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).expect("finite eigenvalue"));
    let mut vecs = Vec::with_capacity(r * r);
    for i in 0..r {
        for &k in &order {
            vecs.push(eig.eigenvectors[(i, k)]);
        }
    }
    Ok(Eigh {
        values: order.iter().map(|&k| vals[k]).collect(),
        vectors: DenseTensor::new(vec![r, r], vecs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{contract, ONE, ZERO};
    use rand::{Rng, SeedableRng};

    fn random(r: usize, c: usize, seed: u64) -> DenseTensor {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(vec![r, c], |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn reconstruct(svd: &Svd) -> DenseTensor {
        let k = svd.s.len();
        let sd = DenseTensor::from_fn(vec![k, k], |i| {
            if i[0] == i[1] {
                C64::new(svd.s[i[0]], 0.0)
            } else {
                ZERO
            }
        });
        svd.u.matmul(&sd).unwrap().matmul(&svd.vh).unwrap()
    }

    fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
        let diff: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        diff.sqrt() / b.frobenius_norm()
    }

    fn assert_orthonormal_columns(q: &DenseTensor, tol: f64) {
        let g = q.adjoint().unwrap().matmul(q).unwrap();
        let n = g.shape()[0];
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { ONE } else { ZERO };
                assert!((g.get(&[i, j]) - want).norm() < tol, "gram[{i},{j}] = {}", g.get(&[i, j]));
            }
        }
    }

    #[test]
    fn svd_rank_deficient_wide_and_tall() {
        for (r, c) in [(2, 4), (4, 2), (2, 8), (6, 3)] {
            let m = DenseTensor::new(vec![r, c], vec![C64::new(0.5, 0.0); r * c]).unwrap();
            let svd = svd_truncated(&m, 8, 0.0).unwrap();
            // rank one with singular value 0.5 * sqrt(r * c)
            assert!((svd.s[0] - 0.5 * ((r * c) as f64).sqrt()).abs() < 1e-12);
            let back = reconstruct(&svd);
            let err: f64 = back.data().iter().zip(m.data()).map(|(a, b)| (a - b).norm()).sum();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn diagonal_truncation() {
        let m = DenseTensor::matrix(2, 2, vec![C64::new(3.0, 0.0), ZERO, ZERO, ONE]).unwrap();
        let svd = svd_truncated(&m, 1, 0.0).unwrap();
        assert_eq!(svd.s.len(), 1);
        assert!((svd.s[0] - 3.0).abs() < 1e-14);
        let r = reconstruct(&svd);
        let err: f64 = r.data().iter().zip(m.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        assert!((err.sqrt() - 1.0).abs() < 1e-12);
        assert!((svd.discarded_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_has_unit_singular_values() {
        let (q, _) = qr_decompose(&random(4, 4, 11)).unwrap();
        let svd = svd_truncated(&q, 4, 0.0).unwrap();
        assert_eq!(svd.s.len(), 4);
        for s in svd.s {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_reconstruction() {
        let m = random(8, 6, 12);
        let svd = svd_truncated(&m, 8, 0.0).unwrap();
        assert_eq!(svd.s.len(), 6);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(rel_err(&reconstruct(&svd), &m) < 1e-10);
        assert_orthonormal_columns(&svd.u, 1e-12);
        assert_orthonormal_columns(&svd.vh.adjoint().unwrap(), 1e-12);
    }

    #[test]
    fn cutoff_and_minimum_rank() {
        let m = DenseTensor::matrix(2, 2, vec![ONE, ZERO, ZERO, C64::new(1e-12, 0.0)]).unwrap();
        assert_eq!(svd_truncated(&m, 2, 1e-10).unwrap().s.len(), 1);
        let z = DenseTensor::zeros(vec![3, 3]);
        assert_eq!(svd_truncated(&z, 3, 0.5).unwrap().s.len(), 1);
    }

    #[test]
    fn qr_cases() {
        let id = DenseTensor::identity(3);
        let (q, r) = qr_decompose(&id).unwrap();
        for (a, b) in q.data().iter().zip(id.data()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        assert!(rel_err(&q.matmul(&r).unwrap(), &id) < 1e-14);

        let v = DenseTensor::matrix(2, 1, vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)]).unwrap();
        let (q, r) = qr_decompose(&v).unwrap();
        let sign = r.get(&[0, 0]).re.signum();
        assert!((r.get(&[0, 0]).re.abs() - 5.0).abs() < 1e-14);
        assert!((q.get(&[0, 0]).re * sign - 0.6).abs() < 1e-14);
        assert!((q.get(&[1, 0]).re * sign - 0.8).abs() < 1e-14);

        let m = random(6, 3, 13);
        let (q, r) = qr_decompose(&m).unwrap();
        assert!(rel_err(&q.matmul(&r).unwrap(), &m) < 1e-12);
        assert_orthonormal_columns(&q, 1e-12);
        for i in 0..3 {
            for j in 0..i {
                assert!(r.get(&[i, j]).norm() < 1e-14);
            }
        }

        assert!(qr_decompose(&random(2, 3, 14)).is_err());
    }

    #[test]
    fn eigh_known_spectra() {
        let d = DenseTensor::matrix(2, 2, vec![C64::new(-1.0, 0.0), ZERO, ZERO, C64::new(2.0, 0.0)]).unwrap();
        let e = eigh(&d).unwrap();
        assert_eq!(e.values, vec![2.0, -1.0]);

        let sx = DenseTensor::matrix(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let e = eigh(&sx).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = (e.vectors.get(&[0, 0]), e.vectors.get(&[1, 0]));
        assert!((v0.0.norm() - h).abs() < 1e-12 && (v0.0 - v0.1).norm() < 1e-12);
        let v1 = (e.vectors.get(&[0, 1]), e.vectors.get(&[1, 1]));
        assert!((v1.0 + v1.1).norm() < 1e-12);
    }

    #[test]
    fn eigh_random_hermitian_residuals() {
        let a = random(16, 16, 15);
        let h = DenseTensor::from_fn(vec![16, 16], |i| a.get(&[i[0], i[1]]) + a.get(&[i[1], i[0]]).conj());
        let e = eigh(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = (0..16).map(|i| h.get(&[i, i]).re).sum();
        let sum: f64 = e.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-10 * trace.abs().max(1.0));
        let hv = contract(&h, &e.vectors, &[(1, 0)]).unwrap();
        for k in 0..16 {
            let mut res = 0.0;
            for i in 0..16 {
                res += (hv.get(&[i, k]) - e.vectors.get(&[i, k]) * e.values[k]).norm_sqr();
            }
            assert!(res.sqrt() < 1e-9 * e.values[k].abs().max(1.0));
        }
        assert_orthonormal_columns(&e.vectors, 1e-12);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = DenseTensor::matrix(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotHermitian(_))));
    }

    proptest::proptest! {
        #[test]
        fn svd_lossless_at_zero_cutoff(seed in 0u64..500, r in 1usize..7, c in 1usize..7) {
            let m = random(r, c, seed);
            let svd = svd_truncated(&m, r.max(c), 0.0).unwrap();
            proptest::prop_assert!(rel_err(&reconstruct(&svd), &m) < 1e-10);
        }
    }
}
