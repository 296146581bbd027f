//! Small dense linear algebra kit: square matrices, a cyclic Jacobi
//! eigensolver for real-symmetric problems, a complex-Hermitian wrapper via
//! realification, Lanczos with full reorthogonalization for ground states,
//! and a Krylov exponential stepper for constant-Hamiltonian propagation.

use crate::error::{Error, Result};
use crate::scalar::{two_pi, Scalar, C};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ops::{Index, IndexMut};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::default(); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.n).map(|r| self[(r, c)]).collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.n + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.n + c]
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn frobenius_distance(&self, other: &Self) -> S {
        debug_assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<S>()
            .sqrt()
    }

    pub fn max_abs_asymmetry(&self) -> S {
        let mut worst = S::zero();
        for r in 0..self.n {
            for c in 0..r {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }
}

/// Reject complex matrices with a non-negligible imaginary part.
pub fn require_real<S: Scalar>(m: &Matrix<C<S>>) -> Result<Matrix<S>> {
    let mut worst = S::zero();
    for v in &m.data {
        worst = worst.max(v.im.abs());
    }
    let scale = m.data.iter().map(|v| v.re.abs()).fold(S::one(), S::max);
    if worst > S::of(1e-11) * scale {
        return Err(Error::Linalg(format!(
            "matrix has imaginary entries up to {:e}",
            worst.to_f64_lossy()
        )));
    }
    Ok(Matrix { n: m.n, data: m.data.iter().map(|v| v.re).collect() })
}

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues ascending and the matching eigenvectors as matrix
/// columns. Deterministic; accuracy near machine epsilon for the sizes used
/// here (n <= ~1500).
pub fn eigh_real<S: Scalar>(a: &Matrix<S>) -> Result<(Vec<S>, Matrix<S>)> {
    let n = a.n;
    let asym = a.max_abs_asymmetry();
    let scale = a.data.iter().map(|v| v.abs()).fold(S::one(), S::max);
    if asym > S::of(1e-9) * scale {
        return Err(Error::Linalg(format!(
            "matrix is not symmetric (asymmetry {:e})",
            asym.to_f64_lossy()
        )));
    }
    let mut m = a.clone();
    let mut v = Matrix::from_fn(n, |r, c| if r == c { S::one() } else { S::zero() });
    let eps = S::of(1e-30);
    for _sweep in 0..100 {
        let mut off = S::zero();
        for r in 0..n {
            for c in (r + 1)..n {
                off = off + m[(r, c)] * m[(r, c)];
            }
        }
        if off <= S::of(1e-26) * (scale * scale) || off < eps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= S::of(1e-300) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (S::of(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (S::one() + theta * theta).sqrt();
                    let t = S::one() / denom;
                    if theta < S::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                // rotate rows/columns p and q
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<S> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let vals: Vec<S> = order.iter().map(|&i| diag[i]).collect();
    let vecs = Matrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok((vals, vecs))
}

/// Hermitian eigendecomposition via the real 2n x 2n embedding
/// [[Re, -Im], [Im, Re]]. Eigenvalues come back ascending with each value
/// listed once (the embedding doubles them); eigenvectors are complex.
pub fn eigh_complex<S: Scalar>(h: &Matrix<C<S>>) -> Result<(Vec<S>, Matrix<C<S>>)> {
    let n = h.n;
    // Fast path: purely real Hermitian matrices are real symmetric.
    if require_real(h).is_ok() {
        let real = require_real(h)?;
        let (vals, vecs) = eigh_real(&real)?;
        let cvecs = Matrix::from_fn(n, |r, c| C::new(vecs[(r, c)], S::zero()));
        return Ok((vals, cvecs));
    }
    let mut big = Matrix::zeros(2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            big[(r, c)] = z.re;
            big[(r + n, c + n)] = z.re;
            big[(r, c + n)] = -z.im;
            big[(r + n, c)] = z.im;
        }
    }
    let (vals2, vecs2) = eigh_real(&big)?;
    // Each eigenvalue appears twice; take every second one and rebuild the
    // complex eigenvector from the paired real/imaginary halves.
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Matrix::zeros(n);
    for k in 0..n {
        let src = 2 * k;
        vals.push(vals2[src]);
        let mut norm = S::zero();
        let mut col = vec![C::new(S::zero(), S::zero()); n];
        for r in 0..n {
            let z = C::new(vecs2[(r, src)], vecs2[(r + n, src)]);
            norm = norm + z.norm_sqr();
            col[r] = z;
        }
        let inv = S::one() / norm.sqrt();
        for r in 0..n {
            vecs[(r, k)] = col[r].scale(inv);
        }
    }
    Ok((vals, vecs))
}

fn norm<S: Scalar>(v: &[C<S>]) -> S {
    v.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt()
}

fn dot<S: Scalar>(a: &[C<S>], b: &[C<S>]) -> C<S> {
    let mut acc = C::new(S::zero(), S::zero());
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + x.conj() * *y;
    }
    acc
}

fn deterministic_vector<S: Scalar>(dim: usize, seed: u64) -> Vec<C<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C<S>> = (0..dim)
        .map(|_| C::new(S::of(rng.gen_range(-1.0..1.0)), S::of(rng.gen_range(-1.0..1.0))))
        .collect();
    let inv = S::one() / norm(&v);
    for z in v.iter_mut() {
        *z = z.scale(inv);
    }
    v
}

/// Ground eigenpair of a Hermitian operator given through its action,
/// by Lanczos with full reorthogonalization. Deterministic start vector.
pub fn lanczos_ground<S: Scalar>(
    dim: usize,
    mut apply: impl FnMut(&[C<S>], &mut [C<S>]),
) -> Result<(S, Vec<C<S>>)> {
    let max_vecs = dim.min(360);
    let mut basis: Vec<Vec<C<S>>> = Vec::with_capacity(max_vecs);
    let mut alphas: Vec<S> = Vec::new();
    let mut betas: Vec<S> = Vec::new();
    basis.push(deterministic_vector(dim, 0x5eed_1e0d));
    let mut w = vec![C::new(S::zero(), S::zero()); dim];
    let mut prev_val = S::infinity();
    for k in 0..max_vecs {
        for x in w.iter_mut() {
            *x = C::new(S::zero(), S::zero());
        }
        apply(&basis[k], &mut w);
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        // full reorthogonalization, twice for numerical safety
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v.iter()) {
                    *wi = *wi - c * *vi;
                }
            }
        }
        let beta = norm(&w);
        // convergence check every few steps
        if k >= 2 && (k % 4 == 0 || beta < S::of(1e-12) || k + 1 == max_vecs) {
            let (val, _) = tridiag_ground(&alphas, &betas)?;
            if (prev_val - val).abs() < S::of(1e-13) * (S::one() + val.abs()) || beta < S::of(1e-12)
            {
                let (gval, gvec) = tridiag_ground(&alphas, &betas)?;
                let mut out = vec![C::new(S::zero(), S::zero()); dim];
                for (i, v) in basis.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(v.iter()) {
                        *o = *o + x.scale(gvec[i]);
                    }
                }
                let inv = S::one() / norm(&out);
                for z in out.iter_mut() {
                    *z = z.scale(inv);
                }
                return Ok((gval, out));
            }
            prev_val = val;
        }
        if beta < S::of(1e-12) {
            // invariant subspace exhausted; restart orthogonal to the basis
            let mut fresh = deterministic_vector(dim, 0xf00d + k as u64);
            for v in &basis {
                let c = dot(v, &fresh);
                for (fi, vi) in fresh.iter_mut().zip(v.iter()) {
                    *fi = *fi - c * *vi;
                }
            }
            let n2 = norm(&fresh);
            if n2 < S::of(1e-9) {
                break;
            }
            let inv = S::one() / n2;
            for z in fresh.iter_mut() {
                *z = z.scale(inv);
            }
            betas.push(S::zero());
            basis.push(fresh);
            continue;
        }
        let inv = S::one() / beta;
        betas.push(beta);
        basis.push(w.iter().map(|z| z.scale(inv)).collect());
    }
    // fall back to whatever the Krylov space gives
    alphas.truncate(basis.len());
    let (gval, gvec) = tridiag_ground(&alphas, &betas)?;
    let mut out = vec![C::new(S::zero(), S::zero()); dim];
    for (i, v) in basis.iter().enumerate() {
        if i < gvec.len() {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o = *o + x.scale(gvec[i]);
            }
        }
    }
    let inv = S::one() / norm(&out);
    for z in out.iter_mut() {
        *z = z.scale(inv);
    }
    Ok((gval, out))
}

/// Ground eigenpair of the symmetric tridiagonal (alphas, betas) matrix.
fn tridiag_ground<S: Scalar>(alphas: &[S], betas: &[S]) -> Result<(S, Vec<S>)> {
    let k = alphas.len();
    let mut t = Matrix::zeros(k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            let b = if i < betas.len() { betas[i] } else { S::zero() };
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
    }
    let (vals, vecs) = eigh_real(&t)?;
    Ok((vals[0], vecs.column(0)))
}

/// One Krylov-subspace step of `psi <- exp(-i 2 pi H dt) psi` for a constant
/// Hermitian H given through its action. `dt` in microseconds, H in MHz.
pub fn krylov_expm_step<S: Scalar>(
    dim: usize,
    apply: &mut impl FnMut(&[C<S>], &mut [C<S>]),
    psi: &mut Vec<C<S>>,
    dt: S,
    krylov_dim: usize,
) -> Result<()> {
    let m = krylov_dim.min(dim).max(2);
    let psi_norm = norm(psi);
    if psi_norm < S::of(1e-300) {
        return Err(Error::Linalg("zero state in Krylov step".into()));
    }
    let inv = S::one() / psi_norm;
    let mut basis: Vec<Vec<C<S>>> = vec![psi.iter().map(|z| z.scale(inv)).collect()];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut w = vec![C::new(S::zero(), S::zero()); dim];
    for k in 0..m {
        for x in w.iter_mut() {
            *x = C::new(S::zero(), S::zero());
        }
        apply(&basis[k], &mut w);
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v.iter()) {
                    *wi = *wi - c * *vi;
                }
            }
        }
        let beta = norm(&w);
        if beta < S::of(1e-13) || k + 1 == m {
            break;
        }
        betas.push(beta);
        let invb = S::one() / beta;
        basis.push(w.iter().map(|z| z.scale(invb)).collect());
    }
    let k = alphas.len();
    let mut t = Matrix::zeros(k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k && i < betas.len() {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (vals, vecs) = eigh_real(&t)?;
    // coefficients of e1 in the tridiagonal eigenbasis
    let angle = -two_pi::<S>() * dt;
    let mut combo = vec![C::new(S::zero(), S::zero()); k];
    for j in 0..k {
        let phase = C::from_polar(S::one(), angle * vals[j]);
        let weight = phase.scale(vecs[(0, j)]);
        for i in 0..k {
            combo[i] = combo[i] + weight.scale(vecs[(i, j)]);
        }
    }
    for z in psi.iter_mut() {
        *z = C::new(S::zero(), S::zero());
    }
    for (i, v) in basis.iter().enumerate().take(k) {
        let ci = combo[i].scale(psi_norm);
        for (p, x) in psi.iter_mut().zip(v.iter()) {
            *p = *p + ci * *x;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_matches_known_spectrum() {
        // [[2,1],[1,2]] -> 1, 3 with vectors (1,-1)/sqrt2, (1,1)/sqrt2
        let mut m: Matrix<f64> = Matrix::zeros(2);
        m[(0, 0)] = 2.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 2.0;
        let (vals, vecs) = eigh_real(&m).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vecs[(0, 0)].abs(), (0.5f64).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 24;
        let mut m: Matrix<f64> = Matrix::zeros(n);
        for r in 0..n {
            for c in 0..=r {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[(r, c)] = x;
                m[(c, r)] = x;
            }
        }
        let (vals, vecs) = eigh_real(&m).unwrap();
        // M v_k = lambda_k v_k
        for k in [0usize, n / 2, n - 1] {
            let v = vecs.column(k);
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += m[(r, c)] * v[c];
                }
                assert_abs_diff_eq!(acc, vals[k] * v[r], epsilon = 1e-9);
            }
        }
        // eigenvalues ascending
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn complex_hermitian_eigensolve() {
        let mut h: Matrix<C<f64>> = Matrix::zeros(2);
        h[(0, 0)] = C::new(1.0, 0.0);
        h[(1, 1)] = C::new(-1.0, 0.0);
        h[(0, 1)] = C::new(0.0, -2.0);
        h[(1, 0)] = C::new(0.0, 2.0);
        let (vals, vecs) = eigh_complex(&h).unwrap();
        let expect = (1.0f64 + 4.0).sqrt();
        assert_abs_diff_eq!(vals[0], -expect, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], expect, epsilon = 1e-10);
        // residual check
        let v = vecs.column(0);
        for r in 0..2 {
            let mut acc = C::new(0.0, 0.0);
            for c in 0..2 {
                acc += h[(r, c)] * v[c];
            }
            let expect = v[r].scale(vals[0]);
            assert!((acc - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn lanczos_matches_dense_ground_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 48;
        let mut m: Matrix<f64> = Matrix::zeros(n);
        for r in 0..n {
            for c in 0..=r {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[(r, c)] = x;
                m[(c, r)] = x;
            }
        }
        let (vals, _) = eigh_real(&m).unwrap();
        let apply = |x: &[C<f64>], y: &mut [C<f64>]| {
            for r in 0..n {
                let mut acc = C::new(0.0, 0.0);
                for c in 0..n {
                    acc += x[c].scale(m[(r, c)]);
                }
                y[r] += acc;
            }
        };
        let (val, vec) = lanczos_ground(n, apply).unwrap();
        assert_abs_diff_eq!(val, vals[0], epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&vec), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn krylov_step_matches_exact_rotation() {
        // single spin: H = X (MHz); psi(t) = cos(2 pi t)|0> - i sin(2 pi t)|1>
        let apply = |x: &[C<f64>], y: &mut [C<f64>]| {
            y[0] += x[1];
            y[1] += x[0];
        };
        let mut psi = vec![C::new(1.0, 0.0), C::new(0.0, 0.0)];
        let dt = 0.13;
        let mut apply = apply;
        krylov_expm_step(2, &mut apply, &mut psi, dt, 8).unwrap();
        let angle = 2.0 * std::f64::consts::PI * dt;
        assert!((psi[0] - C::new(angle.cos(), 0.0)).norm() < 1e-10);
        assert!((psi[1] - C::new(0.0, -angle.sin())).norm() < 1e-10);
    }
}
