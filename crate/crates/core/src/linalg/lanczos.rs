//! Restarted Lanczos for the lowest eigenpair of a Hermitian operator given
//! only as a matrix-vector product.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::ZERO;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Krylov subspace size per restart.
    pub krylov_dim: usize,
    /// Residual norm `‖Ax − λx‖` at which to stop.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 60,
            tol: 1e-10,
            max_restarts: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c = dot(b, v);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Lowest eigenpair of `apply` restricted to the orthogonal complement of
/// `deflate` (which must be orthonormal).
pub fn lanczos_lowest<F>(
    mut apply: F,
    start: &[C64],
    deflate: &[Vec<C64>],
    opts: &LanczosOptions,
) -> Result<LanczosResult>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty Lanczos start vector".into()));
    }
    let mut x = start.to_vec();
    project_out(&mut x, deflate);
    if norm(&x) < 1e-12 {
        // start vector lies in the deflated space; fall back to a fixed spread vector
        x = (0..n)
            .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_7).fract(), 0.0))
            .collect();
        project_out(&mut x, deflate);
    }
    let nx = norm(&x);
    if nx < 1e-300 {
        return Err(Error::Factorization("no vector orthogonal to the deflation space".into()));
    }
    x.iter_mut().for_each(|z| *z /= nx);

    let mut matvecs = 0usize;
    let mut w = vec![ZERO; n];
    for _ in 0..=opts.max_restarts {
        let kmax = opts.krylov_dim.min(n.saturating_sub(deflate.len())).max(1);
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (0.0, vec![1.0]);
        let mut residual = f64::INFINITY;
        for j in 0..kmax {
            apply(&basis[j], &mut w);
            matvecs += 1;
            project_out(&mut w, deflate);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalisation, twice
            project_out(&mut w, &basis);
            project_out(&mut w, &basis);
            let b = norm(&w);
            ritz = lowest_tridiag(&alpha, &beta);
            residual = b * ritz.1.last().copied().unwrap_or(0.0).abs();
            if residual < opts.tol || b < 1e-14 || j + 1 == kmax {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let mut next = vec![ZERO; n];
        for (c, v) in ritz.1.iter().zip(&basis) {
            for (o, z) in next.iter_mut().zip(v) {
                *o += z * *c;
            }
        }
        let nn = norm(&next);
        next.iter_mut().for_each(|z| *z /= nn);
        x = next;
        if residual < opts.tol || basis.len() >= n {
            return Ok(LanczosResult {
                value: ritz.0,
                vector: x,
                residual,
                matvecs,
            });
        }
    }
    // report the last Ritz pair; callers decide whether the residual is acceptable
    apply(&x, &mut w);
    matvecs += 1;
    let value = dot(&x, &w).re;
    let residual = w
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - b * value).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(LanczosResult {
        value,
        vector: x,
        residual,
        matvecs,
    })
}

fn lowest_tridiag(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let vec = eig.eigenvectors.column(imin).iter().copied().collect();
    (eig.eigenvalues[imin], vec)
}
