//! Shared dense linear algebra: Hermitian eigensolves, unitary exponentials,
//! a matrix-free Lanczos exponential action, and log-domain combinatorics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest entry magnitude; the deviation norm used throughout the checks.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry magnitude of a vector.
pub fn max_abs_vec(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Returns eigenvalues in ascending order and the matching unitary of column
/// eigenvectors. In-house for the same reason as `thin_svd`: nalgebra's
/// symmetric_eigen can hand back an orthonormal basis that fails to
/// diagonalize the input when the spectrum clusters (kron products of spin
/// operators are reliable triggers), and a wrong-but-unitary eigenbasis
/// corrupts every exponential built on top of it.
pub fn eigh(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale = a.norm();
    if n > 1 && scale > 0.0 {
        let tol = 1e-15 * scale;
        let skip = tol / n as f64;
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for q in 1..n {
                for p in 0..q {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= tol {
                break;
            }
            for q in 1..n {
                for p in 0..q {
                    let g = a[(p, q)];
                    let gn = g.norm();
                    if gn <= skip {
                        continue;
                    }
                    // Pull the phase out of a[p,q]; a real rotation then
                    // zeroes the remaining symmetric 2x2 block.
                    let phase = g / gn;
                    let tau = (a[(p, p)].re - a[(q, q)].re) / (2.0 * gn);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = Complex64::from(1.0 / (1.0 + t * t).sqrt());
                    let s = c * t;
                    let pq = phase.conj();
                    for r in 0..n {
                        let (ap, aq) = (a[(r, p)], a[(r, q)]);
                        a[(r, p)] = ap * c + aq * pq * s;
                        a[(r, q)] = aq * pq * c - ap * s;
                    }
                    for col in 0..n {
                        let (ap, aq) = (a[(p, col)], a[(q, col)]);
                        a[(p, col)] = ap * c + aq * phase * s;
                        a[(q, col)] = aq * phase * c - ap * s;
                    }
                    for r in 0..n {
                        let (vp, vq) = (v[(r, p)], v[(r, q)]);
                        v[(r, p)] = vp * c + vq * pq * s;
                        v[(r, q)] = vq * pq * c - vp * s;
                    }
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| a[(i, i)].re).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    (vals, vecs)
}

/// exp(i s H) for Hermitian H, via eigendecomposition. Exactly unitary up to
/// the accuracy of the eigensolve.
pub fn exp_i_hermitian(h: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut phased = vecs.clone();
    for c in 0..n {
        let ph = Complex64::new(0.0, s * vals[c]).exp();
        for r in 0..n {
            phased[(r, c)] *= ph;
        }
    }
    phased * vecs.adjoint()
}

/// exp(i s H) |v> for a Hermitian operator given only through its action,
/// computed in a Krylov subspace (Lanczos with full reorthogonalization).
///
/// The step is split recursively whenever the subspace cap is reached before
/// the residual estimate drops below `tol * ||v||`, so the routine converges
/// for any finite spectral radius.
pub fn exp_i_hermitian_action<F>(
    apply: &F,
    v: &DVector<Complex64>,
    scale: f64,
    tol: f64,
) -> Result<DVector<Complex64>>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    const MAX_M: usize = 90;
    let beta0 = v.norm();
    if beta0 == 0.0 {
        return Ok(v.clone());
    }
    let n = v.len();
    let mut basis: Vec<DVector<Complex64>> = vec![v / Complex64::from(beta0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    for m in 0..MAX_M {
        let mut w = apply(&basis[m]);
        let alpha = basis[m].dotc(&w).re;
        alphas.push(alpha);
        w -= &basis[m] * Complex64::from(alpha);
        if m > 0 {
            w -= &basis[m - 1] * Complex64::from(betas[m - 1]);
        }
        // Full reorthogonalization keeps the tridiagonal honest for the
        // clustered spectra that collective operators produce.
        for b in &basis {
            let c = b.dotc(&w);
            w -= b * c;
        }
        let beta = w.norm();

        // Residual estimate: weight of the last Krylov coordinate times the
        // next off-diagonal element.
        let y = exp_i_tridiag(&alphas, &betas, scale);
        let err = beta * y[alphas.len() - 1].norm();
        if err <= tol * 1.0_f64.max(beta0) || beta < 1e-300 {
            let mut out = DVector::from_element(n, Complex64::new(0.0, 0.0));
            for (k, b) in basis.iter().enumerate() {
                out += b * (y[k] * Complex64::from(beta0));
            }
            return Ok(out);
        }
        betas.push(beta);
        basis.push(w / Complex64::from(beta));
    }

    // Not converged in MAX_M directions: halve the step.
    let half = exp_i_hermitian_action(apply, v, scale / 2.0, tol / 2.0)?;
    exp_i_hermitian_action(apply, &half, scale / 2.0, tol / 2.0)
}

/// First column of exp(i s T) for a real symmetric tridiagonal T.
fn exp_i_tridiag(alphas: &[f64], betas: &[f64], s: f64) -> Vec<Complex64> {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let se = t.symmetric_eigen();
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = Complex64::new(0.0, s * se.eigenvalues[k]).exp();
        let w0 = se.eigenvectors[(0, k)];
        for i in 0..m {
            y[i] += phase * (w0 * se.eigenvectors[(i, k)]);
        }
    }
    y
}

/// Kronecker product, row-major convention: index (i1*r2+i2, j1*c2+j2).
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// ln n!
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as f64, accurate to a few ulps for n in the hundreds.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 1..=k {
        acc = acc * ((n - k + i) as f64) / (i as f64);
    }
    acc
}

/// Exact binomial coefficient, available while n stays small enough for u128.
pub fn binomial_exact(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc.checked_mul(n as u128 - k as u128 + i)?;
        acc /= i;
    }
    Some(acc)
}

/// Thin SVD, m = U diag(s) V^dag, singular values sorted descending.
///
/// One-sided Jacobi on columns. Slower than bidiagonalization, but it keeps
/// full accuracy on the exactly degenerate spectra that structured tensors
/// produce, where the built-in decomposition can return factors that fail to
/// reproduce the input.
pub fn thin_svd(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    let (rows, cols) = m.shape();
    if rows < cols {
        let (u, s, v_t) = thin_svd(&m.adjoint());
        return (v_t.adjoint(), s, u.adjoint());
    }
    let mut a = m.clone();
    let mut v = DMatrix::<Complex64>::identity(cols, cols);
    const PAIR_TOL: f64 = 1e-15;

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                // Hermitian 2x2 Gram block of columns p and q.
                let mut app = 0.0_f64;
                let mut aqq = 0.0_f64;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..rows {
                    app += a[(r, p)].norm_sqr();
                    aqq += a[(r, q)].norm_sqr();
                    apq += a[(r, p)].conj() * a[(r, q)];
                }
                let off = apq.norm();
                if off <= PAIR_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Unitary that diagonalizes the block: a phase pulling the
                // off-diagonal onto the real axis, then a real Jacobi
                // rotation.
                let phase = apq / Complex64::from(off);
                let zeta = (aqq - app) / (2.0 * off);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = Complex64::from(1.0 / (1.0 + t * t).sqrt());
                let sn = cs * t;
                let (spc, cpc) = (sn * phase.conj(), cs * phase.conj());
                for r in 0..rows {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = cs * x - spc * y;
                    a[(r, q)] = sn * x + cpc * y;
                }
                for r in 0..cols {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = cs * x - spc * y;
                    v[(r, q)] = sn * x + cpc * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|c| a.column(c).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    let mut v_t = DMatrix::from_element(cols, cols, Complex64::new(0.0, 0.0));
    let mut sigma = Vec::with_capacity(cols);
    for (slot, &c) in order.iter().enumerate() {
        let s = norms[c];
        sigma.push(s);
        if s > 0.0 {
            let inv = Complex64::from(1.0 / s);
            for r in 0..rows {
                u[(r, slot)] = a[(r, c)] * inv;
            }
        }
        for r in 0..cols {
            v_t[(slot, r)] = v[(r, c)].conj();
        }
    }
    (u, sigma, v_t)
}

/// Solve the small least-squares problem min_x ||A x - b|| by normal
/// equations; A has full column rank in all uses here (a handful of columns).
pub fn lstsq(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * b;
    gram.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular least-squares system".into()))
}
