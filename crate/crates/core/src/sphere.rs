//! Uniform points on `S(R^d)` / `S(C^d)`, Haar-random rotations and
//! Haar-random orthonormal bases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::{inner, norm2, FieldTag, Scalar};
use crate::linalg::{HouseholderQ, HouseholderQr, Matrix};

/// Relative tolerance on the norm of a [`UnitVector`].
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Entrywise tolerance on `B^H B - I` for an [`OrthonormalBasis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// A point of the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<S>(Vec<S>);

impl<S: Scalar> UnitVector<S> {
    /// Normalizes `v`; fails on the zero vector.
    pub fn normalize(mut v: Vec<S>) -> Result<Self> {
        check_dim(v.len())?;
        let n = norm2(&v).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        v.iter_mut().for_each(|x| *x = x.scale(1.0 / n));
        Ok(Self(v))
    }

    /// Wraps `v` after checking its norm.
    pub fn new(v: Vec<S>) -> Result<Self> {
        check_dim(v.len())?;
        let n = norm2(&v).sqrt();
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Domain(format!("vector norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Standard basis vector `e_i` (zero-based `i`).
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        check_dim(dim)?;
        if i >= dim {
            return Err(Error::Domain(format!("axis {i} out of range for dimension {dim}")));
        }
        let mut v = vec![S::zero(); dim];
        v[i] = S::one();
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

impl<S> AsRef<[S]> for UnitVector<S> {
    fn as_ref(&self) -> &[S] {
        &self.0
    }
}

/// `d` pairwise orthogonal unit vectors, stored as the columns of a square
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis<S> {
    matrix: Matrix<S>,
}

impl<S: Scalar> OrthonormalBasis<S> {
    pub fn from_matrix(matrix: Matrix<S>) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                actual: matrix.cols(),
            });
        }
        check_dim(matrix.rows())?;
        let defect = matrix.orthonormality_defect();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!("columns are not orthonormal (defect {defect:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            matrix: Matrix::identity(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn vector(&self, i: usize) -> &[S] {
        self.matrix.column(i)
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[S]> {
        self.matrix.columns()
    }

    pub fn as_matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.matrix.orthonormality_defect()
    }

    /// Coordinates `<b_j, x>` of `x` in this basis.
    pub fn coordinates(&self, x: &[S]) -> Vec<S> {
        self.matrix.adjoint_mul_vec(x)
    }
}

/// Haar sampler used by [`haar_random_onb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnbMethod {
    /// Phase-corrected QR of an i.i.d. Gaussian matrix.
    #[default]
    QrGaussian,
    /// `b_1` uniform, then each `b_k` uniform on the sphere of the
    /// orthogonal complement of the previous vectors.
    Sequential,
}

fn gaussian_vector<S: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<S> {
    (0..dim).map(|_| S::sample_gaussian(rng)).collect()
}

/// Uniformly distributed point of `S(X^d)`.
pub fn sample_uniform_sphere<S: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<UnitVector<S>> {
    check_dim(dim)?;
    if dim == 1 && S::FIELD == FieldTag::Real {
        // S(R^1) = {-1, +1}; normalizing would leave rounding residue
        let sign = if S::sample_gaussian(rng).re() < 0.0 { -1.0 } else { 1.0 };
        return Ok(UnitVector(vec![S::from_f64(sign)]));
    }
    loop {
        let g = gaussian_vector::<S, R>(dim, rng);
        if norm2(&g) > 0.0 {
            return UnitVector::normalize(g);
        }
    }
}

/// Removes the components of `v` along each (orthonormal) vector in
/// `frame`. Two passes of classical Gram-Schmidt keep the result orthogonal
/// to working precision.
fn project_out<S: Scalar>(v: &mut [S], frame: &[&[S]]) {
    for _ in 0..2 {
        for b in frame {
            let c = inner(b, v);
            for (x, &bi) in v.iter_mut().zip(b.iter()) {
                *x -= bi * c;
            }
        }
    }
}

/// Uniform point of the unit sphere of the orthogonal complement of the
/// span of `frame` (orthonormal vectors of a common dimension).
fn sample_uniform_complement<S: Scalar, R: Rng + ?Sized>(dim: usize, frame: &[&[S]], rng: &mut R) -> Vec<S> {
    loop {
        let mut g = gaussian_vector::<S, R>(dim, rng);
        project_out(&mut g, frame);
        let n = norm2(&g).sqrt();
        if n > 1e-8 {
            g.iter_mut().for_each(|x| *x = x.scale(1.0 / n));
            return g;
        }
    }
}

/// Uniform point of `S(x^perp)`.
pub fn sample_uniform_on_orthocomplement<S: Scalar, R: Rng + ?Sized>(
    x: &UnitVector<S>,
    rng: &mut R,
) -> Result<UnitVector<S>> {
    if x.dim() < 2 {
        return Err(Error::EmptyOrthocomplement);
    }
    Ok(UnitVector(sample_uniform_complement(x.dim(), &[x.as_slice()], rng)))
}

/// Haar-distributed unitary in factored form; `O(d^3)` to draw, `O(d^2)` per
/// matrix-vector product.
pub fn haar_random_factor<S: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HouseholderQ<S>> {
    check_dim(dim)?;
    let g = Matrix::from_fn(dim, dim, |_, _| S::sample_gaussian(rng));
    Ok(HouseholderQr::factor(g).into_positive_q())
}

/// Haar-distributed element of `O(d)` (real) or `U(d)` (complex).
pub fn haar_random_rotation<S: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Matrix<S>> {
    Ok(haar_random_factor::<S, R>(dim, rng)?.to_matrix())
}

/// The first `count` vectors of a Haar-random orthonormal basis, drawn by the
/// sequential construction. `count == dim` gives a full basis.
pub fn sample_orthonormal_frame<S: Scalar, R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<S>>> {
    check_dim(dim)?;
    if count > dim {
        return Err(Error::Domain(format!("cannot fit {count} orthonormal vectors in dimension {dim}")));
    }
    let mut frame: Vec<Vec<S>> = Vec::with_capacity(count);
    for _ in 0..count {
        let refs: Vec<&[S]> = frame.iter().map(Vec::as_slice).collect();
        let b = sample_uniform_complement(dim, &refs, rng);
        frame.push(b);
    }
    Ok(frame)
}

/// Haar-random (uniformly distributed) orthonormal basis.
pub fn haar_random_onb<S: Scalar, R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
    method: OnbMethod,
) -> Result<OrthonormalBasis<S>> {
    let matrix = match method {
        OnbMethod::QrGaussian => haar_random_rotation(dim, rng)?,
        OnbMethod::Sequential => Matrix::from_columns(&sample_orthonormal_frame(dim, dim, rng)?),
    };
    Ok(OrthonormalBasis { matrix })
}
