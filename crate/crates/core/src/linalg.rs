//! Dense column-major matrices and Householder QR over real or complex
//! scalars. Only what the samplers need.

use crate::field::{inner, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are `columns`; all must share a length.
    pub fn from_columns(columns: &[Vec<S>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[S] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [S] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.get(k, j);
                for (d, &a) in dst.iter_mut().zip(self.column(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![S::zero(); self.rows];
        for (k, &xk) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.column(k)) {
                *o += a * xk;
            }
        }
        out
    }

    /// `A^H x`, i.e. the inner products of every column with `x`.
    pub fn adjoint_mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(self.rows, x.len());
        self.columns().map(|c| inner(c, x)).collect()
    }

    /// Largest entrywise deviation of `A^H A` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.cols {
            for j in i..self.cols {
                let g = inner(self.column(i), self.column(j));
                let target = if i == j { S::one() } else { S::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    pub fn into_columns(self) -> Vec<Vec<S>> {
        let rows = self.rows;
        if rows == 0 {
            return vec![Vec::new(); self.cols];
        }
        self.data.chunks_exact(rows).map(<[S]>::to_vec).collect()
    }
}

/// A unitary matrix stored as a product of Householder reflections followed
/// by a diagonal of phases: `Q = H_0 H_1 ... H_{k-1} diag(phases)`.
///
/// Applying `Q` or `Q^H` to a vector costs `O(n^2)`; the explicit matrix is
/// only built on request.
#[derive(Debug, Clone)]
pub struct HouseholderQ<S> {
    dim: usize,
    /// Unit vector of reflector `k`, acting on coordinates `k..dim`.
    reflectors: Vec<Vec<S>>,
    phases: Vec<S>,
}

impl<S: Scalar> HouseholderQ<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phases(&self) -> &[S] {
        &self.phases
    }

    /// `y <- Q y`.
    pub fn apply(&self, y: &mut [S]) {
        assert_eq!(y.len(), self.dim);
        for (v, &p) in y.iter_mut().zip(&self.phases) {
            *v *= p;
        }
        for (k, r) in self.reflectors.iter().enumerate().rev() {
            reflect(r, &mut y[k..]);
        }
    }

    /// `y <- Q^H y`. Entry `j` of the result is `<q_j, y>` for column `q_j`.
    pub fn apply_adjoint(&self, y: &mut [S]) {
        assert_eq!(y.len(), self.dim);
        for (k, r) in self.reflectors.iter().enumerate() {
            reflect(r, &mut y[k..]);
        }
        for (v, &p) in y.iter_mut().zip(&self.phases) {
            *v *= p.conj();
        }
    }

    /// Row `i` of `Q`.
    pub fn row(&self, i: usize) -> Vec<S> {
        let mut e = vec![S::zero(); self.dim];
        e[i] = S::one();
        self.apply_adjoint(&mut e);
        e.iter_mut().for_each(|v| *v = v.conj());
        e
    }

    pub fn to_matrix(&self) -> Matrix<S> {
        let n = self.dim;
        let mut m = Matrix::identity(n);
        for j in 0..n {
            self.apply(m.column_mut(j));
        }
        m
    }
}

/// Householder reflection `a <- (I - 2 v v^H) a` for unit `v`.
#[inline]
fn reflect<S: Scalar>(v: &[S], a: &mut [S]) {
    let s = inner(v, a).scale(2.0);
    for (x, &w) in a.iter_mut().zip(v) {
        *x -= w * s;
    }
}

/// Householder QR of a square matrix.
#[derive(Debug, Clone)]
pub struct HouseholderQr<S> {
    q: HouseholderQ<S>,
    /// Diagonal of `R` with `A = H_0 ... H_{n-1} R` (phases of `q` are one).
    r_diag: Vec<S>,
}

impl<S: Scalar> HouseholderQr<S> {
    /// Factors `a` in place. Only the diagonal of `R` is retained.
    pub fn factor(mut a: Matrix<S>) -> Self {
        assert_eq!(a.rows, a.cols, "square matrices only");
        let n = a.rows;
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        let mut r_diag = Vec::with_capacity(n);
        for k in 0..n {
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let x = &mut head[k * n + k..];
            if n - k == 1 {
                r_diag.push(x[0]);
                break;
            }
            let norm = crate::field::norm2(x).sqrt();
            let alpha = -x[0].phase().scale(norm);
            // v = x - alpha e_1, normalized; unit v makes H = I - 2 v v^H.
            x[0] -= alpha;
            let vnorm = crate::field::norm2(x).sqrt();
            if vnorm == 0.0 {
                // Zero column; a zero vector encodes the identity step.
                r_diag.push(S::zero());
                reflectors.push(vec![S::zero(); n - k]);
                continue;
            }
            let v: Vec<S> = x.iter().map(|&c| c.scale(1.0 / vnorm)).collect();
            r_diag.push(alpha);
            for col in tail.chunks_exact_mut(n) {
                reflect(&v, &mut col[k..]);
            }
            reflectors.push(v);
        }
        let phases = vec![S::one(); n];
        Self {
            q: HouseholderQ {
                dim: n,
                reflectors,
                phases,
            },
            r_diag,
        }
    }

    pub fn r_diagonal(&self) -> &[S] {
        &self.r_diag
    }

    pub fn q(&self) -> &HouseholderQ<S> {
        &self.q
    }

    /// The unique `Q` of `A = QR` with `R` having positive real diagonal:
    /// each column of the raw `Q` is multiplied by the phase of `R_kk`.
    pub fn into_positive_q(self) -> HouseholderQ<S> {
        let mut q = self.q;
        q.phases = self.r_diag.iter().map(|r| r.phase()).collect();
        q
    }
}
