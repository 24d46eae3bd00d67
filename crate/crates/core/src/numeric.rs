//! Dense complex matrices and an LU solver with partial pivoting.
//!
//! The circuits handled here have a few dozen nodes at most, so everything is
//! stored densely in row-major order.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::Error;

/// Pivots smaller than this fraction of the largest matrix entry are treated
/// as exact zeros.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

pub type ComplexScalar = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows. Fails if the rows do not form a square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, Error> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Square sub-matrix picking the given rows and columns.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Largest singular value, from the dominant eigenvalue of `AᴴA`
    /// (power iteration; the matrices here are tiny).
    pub fn spectral_norm(&self) -> f64 {
        let g = &self.conj_transpose() * self;
        let mut v = vec![Complex64::new(1.0, 0.0); self.n];
        for (k, x) in v.iter_mut().enumerate() {
            // a non-symmetric start vector avoids landing on an orthogonal subspace
            *x = Complex64::new(1.0 + 0.1 * k as f64, 0.05 * k as f64);
        }
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = g.mul_vec(&v);
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let next = norm;
            v = w.into_iter().map(|z| z / norm).collect();
            if (next - lambda).abs() <= 1e-15 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6e}{:+.6e}j  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// LU factors of a square matrix, `P·A = L·U`, stored packed.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &ComplexMatrix) -> Result<Self, Error> {
        let n = a.dim();
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        let threshold = PIVOT_THRESHOLD * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot_mag) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_mag <= threshold || pivot_mag == 0.0 {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, Error> {
        let n = self.lu.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution, unit lower triangle
        for i in 0..n {
            let acc: Complex64 = self.lu.row(i)[..i]
                .iter()
                .zip(&x[..i])
                .map(|(l, v)| l * v)
                .sum();
            x[i] -= acc;
        }
        for i in (0..n).rev() {
            let acc: Complex64 = self.lu.row(i)[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, v)| u * v)
                .sum();
            x[i] = (x[i] - acc) / self.lu[(i, i)];
        }
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("solution vector"));
        }
        Ok(x)
    }
}

/// Solves `A·x = b` by LU decomposition with partial pivoting.
pub fn lu_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, Error> {
    if a.dim() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    LuFactors::factor(a)?.solve(b)
}

/// Matrix inverse, one LU factorisation and `n` back-substitutions.
pub fn invert(a: &ComplexMatrix) -> Result<ComplexMatrix, Error> {
    let n = a.dim();
    let lu = LuFactors::factor(a)?;
    let mut inv = ComplexMatrix::zeros(n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        e[j] = Complex64::new(1.0, 0.0);
        let col = lu.solve(&e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inf_norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Diagonally dominant random matrix: well conditioned by construction.
    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            m[(i, i)] += c(n as f64, 0.0);
        }
        m
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)];
        let x = lu_solve(&ComplexMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 1.0)],
        ])
        .unwrap();
        let x = lu_solve(&a, &[c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn random_8x8_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_matrix(8, &mut rng);
            let b: Vec<_> = (0..8)
                .map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
                .collect();
            let x = lu_solve(&a, &b).unwrap();
            let r: Vec<_> = a
                .mul_vec(&x)
                .iter()
                .zip(&b)
                .map(|(ax, bi)| ax - bi)
                .collect();
            assert!(
                inf_norm(&r) <= 1e-10 * inf_norm(&b),
                "residual {}",
                inf_norm(&r)
            );
        }
    }

    #[test]
    fn inverse_of_identity_and_permutation() {
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(invert(&i3).unwrap(), i3);
        let p = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(invert(&p).unwrap(), p);
    }

    #[test]
    fn random_4x4_inverse_multiplies_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(4, &mut rng);
        let inv = invert(&a).unwrap();
        assert!((&a * &inv).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            lu_solve(&a, &[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(invert(&a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn near_singular_below_threshold() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]]).unwrap();
        assert!(matches!(
            invert(&a),
            Err(Error::SingularMatrix { column: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        assert!(matches!(
            lu_solve(&a, &[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spectral_norm_of_known_matrices() {
        let d = ComplexMatrix::from_real_rows(&[vec![3.0, 0.0], vec![0.0, -0.5]]).unwrap();
        assert!((d.spectral_norm() - 3.0).abs() < 1e-12);
        // rank one: u vᵀ with |u| = √2, |v| = √5
        let r = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!((r.spectral_norm() - 10f64.sqrt()).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_system() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
            (1usize..9).prop_flat_map(|n| {
                (
                    prop::collection::vec(-1.0f64..1.0, 2 * n * n),
                    prop::collection::vec(-10.0f64..10.0, 2 * n),
                    Just(n),
                )
            })
        }

        proptest! {
            #[test]
            fn recovers_known_solution((entries, x0, n) in arb_system()) {
                let mut a = ComplexMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        let k = 2 * (i * n + j);
                        a[(i, j)] = c(entries[k], entries[k + 1]);
                    }
                    a[(i, i)] += c(2.0 * n as f64, 0.0);
                }
                let x0: Vec<_> = x0.chunks(2).map(|p| c(p[0], p[1])).collect();
                let b = a.mul_vec(&x0);
                let x = lu_solve(&a, &b).unwrap();
                let err = x.iter().zip(&x0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                prop_assert!(err <= 1e-9 * inf_norm(&x0).max(1e-300) + 1e-12);
            }
        }
    }
}
