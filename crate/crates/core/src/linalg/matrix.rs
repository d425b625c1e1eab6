//! Dense square complex matrix, the universal operator representation after
//! truncation. Real-valued matrices are the special case with exactly zero
//! imaginary parts, and the multiply kernel exploits that.

use crate::error::{Error, Result};
use crate::scalar::{C, FloatScalar};

/// Dense square matrix of dimension `dim`, row-major complex storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: FloatScalar> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: FloatScalar> Matrix<T> {
    // ── Construction ────────────────────────────────────────────────────

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be at least 1");
        Matrix { dim, data: vec![C::new(T::zero(), T::zero()); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let dim = rows.len();
        assert!(dim >= 1 && rows.iter().all(|r| r.len() == dim), "rows must form a square matrix");
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        assert!(dim >= 1 && rows.iter().all(|r| r.len() == dim), "rows must form a square matrix");
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = C::new(v, T::zero());
            }
        }
        m
    }

    pub fn diag_real(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = C::new(v, T::zero());
        }
        m
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Scalar multiple of the identity.
    pub fn scalar(dim: usize, c: C<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c;
        }
        m
    }

    // ── Access ──────────────────────────────────────────────────────────

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == T::zero())
    }

    /// Every entry finite; required by all public operations.
    pub fn validate(&self) -> Result<()> {
        for (k, z) in self.data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry at ({}, {})",
                    k / self.dim,
                    k % self.dim
                )));
            }
        }
        Ok(())
    }

    // ── Arithmetic ──────────────────────────────────────────────────────

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { dim: self.dim, data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { dim: self.dim, data }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        let data = self.data.iter().map(|a| a * c).collect();
        Matrix { dim: self.dim, data }
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(C::new(c, T::zero()))
    }

    /// Matrix product. Dispatches to a real kernel when both operands carry
    /// exactly zero imaginary parts; the result is then exactly real too.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        if self.is_real() && rhs.is_real() {
            let a: Vec<T> = self.data.iter().map(|z| z.re).collect();
            let b: Vec<T> = rhs.data.iter().map(|z| z.re).collect();
            let mut c = vec![T::zero(); n * n];
            for i in 0..n {
                let crow = &mut c[i * n..(i + 1) * n];
                for k in 0..n {
                    let aik = a[i * n + k];
                    if aik == T::zero() {
                        continue;
                    }
                    let brow = &b[k * n..(k + 1) * n];
                    for j in 0..n {
                        crow[j] += aik * brow[j];
                    }
                }
            }
            return Matrix {
                dim: n,
                data: c.into_iter().map(|x| C::new(x, T::zero())).collect(),
            };
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.re == T::zero() && aik.im == T::zero() {
                    continue;
                }
                let brow = rhs.row(k);
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.dim, x.len(), "dimension mismatch");
        let n = self.dim;
        let mut y = vec![C::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let mut acc = C::new(T::zero(), T::zero());
            for (aij, xj) in self.row(i).iter().zip(x) {
                acc += aij * xj;
            }
            y[i] = acc;
        }
        y
    }

    /// k-th power by binary powering. Zero factors stay exact zeros, so
    /// nilpotent powers come out entrywise zero.
    pub fn pow(&self, k: usize) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.matmul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self.get(i, j).conj();
            }
        }
        out
    }

    // ── Norm helpers (cheap bounds; the spectral norm lives in `norm`) ──

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let n = self.dim;
        let mut best = T::zero();
        for j in 0..n {
            let mut s = T::zero();
            for i in 0..n {
                s += abs_c(self.get(i, j));
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| abs_c(*z)).fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
    }

    // ── Structure probes ────────────────────────────────────────────────

    /// Entries below the main diagonal are all exactly zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == C::new(T::zero(), T::zero())))
    }

    /// Entries above the main diagonal are all exactly zero.
    pub fn is_lower_triangular(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.get(i, j) == C::new(T::zero(), T::zero())))
    }

    /// Diagonal as a vector.
    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Top-left corner of size `k`.
    pub fn corner(&self, k: usize) -> Self {
        assert!(1 <= k && k <= self.dim);
        let mut out = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] = self.get(i, j);
            }
        }
        out
    }

    // ── Serialization (debugging aid) ───────────────────────────────────

    /// Row-major dense text, complex entries as `re+imi`.
    pub fn to_dense_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:e}{:+e}i", z.re, z.im))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

impl<T: FloatScalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: FloatScalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// |z| via hypot, avoiding overflow in intermediate squares.
#[inline]
pub fn abs_c<T: FloatScalar>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: FloatScalar>(x: &[C<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_multiplies_neutrally() {
        let a = Matrix::<f64>::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let i = Matrix::<f64>::identity(2);
        assert_eq!(a.matmul(&i), a);
        assert_eq!(i.matmul(&a), a);
    }

    #[test]
    fn real_and_complex_kernels_agree() {
        let a = Matrix::<f64>::from_real_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, 1.0], vec![2.0, 1.0, -1.0]]);
        let b = Matrix::<f64>::from_real_rows(&[vec![0.5, 1.0, 2.0], vec![1.5, -1.0, 0.0], vec![0.25, 2.0, 1.0]]);
        let fast = a.matmul(&b);
        // force the complex path by a zero-value imaginary write that is not exactly 0.0
        let mut a2 = a.clone();
        a2[(0, 0)] = C::new(1.0, -0.0);
        // -0.0 == 0.0 so the real path still triggers; instead add and subtract
        a2[(0, 0)] = C::new(1.0, 1.0e-300);
        let slow = a2.matmul(&b);
        let diff = fast.sub(&slow).max_abs();
        assert!(diff < 1e-12, "kernels disagree by {diff}");
    }

    #[test]
    fn power_of_strictly_lower_shift_is_exact() {
        let mut w = Matrix::<f64>::zeros(4);
        w[(1, 0)] = C::new(1.0, 0.0);
        w[(2, 1)] = C::new(0.5, 0.0);
        w[(3, 2)] = C::new(0.25, 0.0);
        let w4 = w.pow(4);
        assert!(w4.data.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }
}
