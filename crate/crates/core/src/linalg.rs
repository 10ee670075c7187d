//! Small dense complex matrices.
//!
//! Hilbert spaces in this crate never exceed 16 dimensions, so a row-major
//! `Vec` and textbook algorithms are all that is needed. Hermitian matrices
//! are diagonalized with the cyclic complex Jacobi method, which is accurate
//! to working precision and has no failure modes at these sizes.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::{cis, lit, Real};

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(*d, T::zero());
        }
        m
    }

    /// Builds a matrix from nested rows. Returns `None` if the rows are ragged
    /// or not square.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Option<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// `|v><v|`.
    pub fn outer(v: &[Complex<T>]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        self.data
            .chunks(self.dim.max(1))
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.dim, v.len(), "matvec dimension mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                        acc + *a * *b
                    })
            })
            .collect()
    }

    /// `U A U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| *a * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
            acc + self[(i, i)]
        })
    }

    /// Principal sub-block on the index range `start..start + size`.
    pub fn block(&self, start: usize, size: usize) -> Self {
        Self::from_fn(size, |i, j| self[(start + i, start + j)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|a| a.norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (0..self.dim)
            .all(|i| (i..self.dim).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
            <= tol
    }

    pub fn is_diagonal(&self, tol: T) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)].norm() <= tol))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        let n = self.dim;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, a)| (k / n, k % n, *a))
    }

    /// Eigendecomposition of a Hermitian matrix. Only the upper triangle and
    /// the real part of the diagonal are trusted.
    pub fn eigh(&self) -> HermitianEigen<T> {
        jacobi_eigh(self)
    }

    /// `exp(-i H t)` for Hermitian `H`.
    pub fn exp_hermitian(&self, t: T) -> Self {
        let eig = self.eigh();
        let phases: Vec<Complex<T>> = eig.values.iter().map(|&l| cis(-l * t)).collect();
        let v = &eig.vectors;
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + v[(i, k)] * phases[k] * v[(j, k)].conj()
            })
        })
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

fn jacobi_eigh<T: Real>(h: &CMatrix<T>) -> HermitianEigen<T> {
    let n = h.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut a = CMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex::new(h[(i, i)].re, T::zero())
        } else if i < j {
            h[(i, j)]
        } else {
            h[(j, i)].conj()
        }
    });
    let mut v = CMatrix::identity(n);

    let scale = a.data.iter().map(|x| x.norm_sqr()).sum::<T>();
    let threshold = scale * T::epsilon() * T::epsilon();

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Below rounding of the diagonal; zero it directly.
                if r <= T::epsilon() * lit::<T>(1e-3) * (app.abs() + aqq.abs()) {
                    a[(p, q)] = zero;
                    a[(q, p)] = zero;
                    continue;
                }
                let phase = apq / r;
                let theta = (aqq - app) / (r + r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // W = diag(1, conj(phase)) * [[c, s], [-s, c]]
                let w00 = Complex::new(c, T::zero());
                let w01 = Complex::new(s, T::zero());
                let w10 = phase.conj() * (-s);
                let w11 = phase.conj() * c;

                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * w00 + aiq * w10;
                    a[(i, q)] = aip * w01 + aiq * w11;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * w00 + viq * w10;
                    v[(i, q)] = vip * w01 + viq * w11;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = w00.conj() * apj + w10.conj() * aqj;
                    a[(q, j)] = w01.conj() * apj + w11.conj() * aqj;
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Euclidean norm of a complex vector.
pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
}

/// `<a|b>`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * *y
        })
}

/// Euclidean distance between two complex vectors.
pub fn distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y).norm_sqr())
        .sum::<T>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = C::new(rng.gen_range(-5.0..5.0), 0.0);
            for j in (i + 1)..n {
                let z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 4, 8, 16] {
            let h = random_hermitian(&mut rng, n);
            let eig = h.eigh();
            assert!(eig.vectors.is_unitary(1e-12), "n={n}");
            let lambda = CMatrix::from_real_diagonal(&eig.values);
            let rebuilt = eig.vectors.matmul(&lambda).matmul(&eig.vectors.adjoint());
            assert!(
                rebuilt.max_abs_diff(&h) < 1e-11,
                "n={n}: {}",
                rebuilt.max_abs_diff(&h)
            );
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_two_by_two_closed_form() {
        // [[a, z], [z*, b]] has eigenvalues (a+b)/2 -/+ sqrt(((a-b)/2)^2 + |z|^2)
        let (a, b, z) = (1.5, -0.5, C::new(0.3, -0.4));
        let h =
            CMatrix::from_rows(&[vec![C::new(a, 0.0), z], vec![z.conj(), C::new(b, 0.0)]]).unwrap();
        let eig = h.eigh();
        let mid = (a + b) / 2.0;
        let half = (((a - b) / 2.0).powi(2) + z.norm_sqr()).sqrt();
        assert!((eig.values[0] - (mid - half)).abs() < 1e-14);
        assert!((eig.values[1] - (mid + half)).abs() < 1e-14);
    }

    #[test]
    fn eigh_handles_degenerate_and_diagonal_input() {
        let h = CMatrix::<f64>::from_real_diagonal(&[2.0, -1.0, 2.0, 0.0]);
        let eig = h.eigh();
        assert_eq!(eig.values, vec![-1.0, 0.0, 2.0, 2.0]);
        assert!(eig.vectors.is_unitary(1e-15));
        let zero = CMatrix::<f64>::zeros(4).eigh();
        assert!(zero.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn exp_hermitian_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 4);
        let t = 0.37;
        // Oracle: truncated power series of exp(-iHt), converges fast for ||Ht|| ~ 2.
        let a = h.scale(C::new(0.0, -t));
        let mut term = CMatrix::identity(4);
        let mut sum = CMatrix::identity(4);
        for k in 1..60 {
            term = term.matmul(&a).scale(C::new(1.0 / k as f64, 0.0));
            sum = CMatrix::from_fn(4, |i, j| sum[(i, j)] + term[(i, j)]);
        }
        assert!(h.exp_hermitian(t).max_abs_diff(&sum) < 1e-12);
    }

    #[test]
    fn exp_hermitian_f32_is_unitary() {
        let h = CMatrix::<f32>::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(0.2, 0.1)],
            vec![Complex::new(0.2, -0.1), Complex::new(-1.0, 0.0)],
        ])
        .unwrap();
        assert!(h.exp_hermitian(3.0).is_unitary(1e-5));
    }
}
