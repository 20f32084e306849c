//! Sparse polynomials in `x` (real sphere) or in `z, conj(z)` (complex
//! sphere), used as test functions on `S(X^d)`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::exact::moments::monomial_moment_f64;
use crate::exact::tensor::{BiSymmetricTensor, SymmetricTensor};
use crate::field::{FieldTag, Scalar};

/// `prod_i z_i^{a_i} conj(z_i)^{b_i}` over the listed variables, sorted by
/// variable with no zero pairs. Real monomials have every `b_i = 0`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(usize, u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Self(vec![(i, 1, 0)])
    }

    pub fn conj_var(i: usize) -> Self {
        Self(vec![(i, 0, 1)])
    }

    pub fn from_factors(mut factors: Vec<(usize, u32, u32)>) -> Self {
        factors.sort_unstable_by_key(|f| f.0);
        let mut out: Vec<(usize, u32, u32)> = Vec::with_capacity(factors.len());
        for (i, a, b) in factors {
            match out.last_mut() {
                Some(last) if last.0 == i => {
                    last.1 += a;
                    last.2 += b;
                }
                _ => out.push((i, a, b)),
            }
        }
        out.retain(|&(_, a, b)| a + b > 0);
        Self(out)
    }

    pub fn factors(&self) -> &[(usize, u32, u32)] {
        &self.0
    }

    /// `(holomorphic, antiholomorphic)` degree.
    pub fn bidegree(&self) -> (u32, u32) {
        self.0.iter().fold((0, 0), |(p, q), &(_, a, b)| (p + a, q + b))
    }

    pub fn degree(&self) -> u32 {
        let (p, q) = self.bidegree();
        p + q
    }

    fn mul(&self, other: &Self) -> Self {
        let mut f = self.0.clone();
        f.extend_from_slice(&other.0);
        Self::from_factors(f)
    }

    fn conj(&self) -> Self {
        Self(self.0.iter().map(|&(i, a, b)| (i, b, a)).collect())
    }

    fn eval_with(&self, mut x: impl FnMut(usize) -> Complex64) -> Complex64 {
        self.0.iter().fold(Complex64::new(1.0, 0.0), |acc, &(i, a, b)| {
            let v = x(i);
            acc * v.powu(a) * v.conj().powu(b)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePolynomial {
    field: FieldTag,
    dim: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

/// Harmonic component of a polynomial: degree `l` for the real sphere,
/// bidegree `(p, q)` for the complex one.
pub type DegreeLabel = (u32, u32);

impl SpherePolynomial {
    pub fn zero(field: FieldTag, dim: usize) -> Self {
        Self {
            field,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: FieldTag, dim: usize, c: f64) -> Self {
        Self::from_terms(field, dim, [(Monomial::one(), Complex64::new(c, 0.0))])
    }

    /// `x_i` (real) or `z_i` (complex), zero-based.
    pub fn variable(field: FieldTag, dim: usize, i: usize) -> Self {
        assert!(i < dim, "variable index out of range");
        Self::from_terms(field, dim, [(Monomial::var(i), Complex64::new(1.0, 0.0))])
    }

    /// `conj(z_i)`; equal to `x_i` on the real sphere.
    pub fn conj_variable(field: FieldTag, dim: usize, i: usize) -> Self {
        match field {
            FieldTag::Real => Self::variable(field, dim, i),
            FieldTag::Complex => Self::from_terms(field, dim, [(Monomial::conj_var(i), Complex64::new(1.0, 0.0))]),
        }
    }

    /// `|x_i|^2`.
    pub fn abs2_variable(field: FieldTag, dim: usize, i: usize) -> Self {
        Self::variable(field, dim, i) * Self::conj_variable(field, dim, i)
    }

    /// `|x|^2 = sum_i |x_i|^2`, identically one on the sphere.
    pub fn norm_squared(field: FieldTag, dim: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::from_terms(
            field,
            dim,
            (0..dim).map(|i| {
                let m = match field {
                    FieldTag::Real => Monomial(vec![(i, 2, 0)]),
                    FieldTag::Complex => Monomial(vec![(i, 1, 1)]),
                };
                (m, one)
            }),
        )
    }

    /// Builds a polynomial, merging repeated monomials. Real-field monomials
    /// with conjugate exponents are folded into plain powers.
    pub fn from_terms(field: FieldTag, dim: usize, terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> Self {
        let mut p = Self::zero(field, dim);
        for (m, c) in terms {
            let m = match field {
                FieldTag::Real => Monomial(m.0.into_iter().map(|(i, a, b)| (i, a + b, 0)).collect()),
                FieldTag::Complex => m,
            };
            assert!(m.0.iter().all(|f| f.0 < dim), "monomial variable out of range");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        let zero = Complex64::default();
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != zero {
                    v.insert(c);
                }
            }
        }
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Complex64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant coefficient.
    pub fn constant_term(&self) -> Complex64 {
        self.terms.get(&Monomial::one()).copied().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.0.is_empty())
    }

    /// Variables that occur in some term, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().flat_map(|m| m.0.iter().map(|f| f.0)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Distinct degree labels present: `(l, 0)` for real polynomials,
    /// `(p, q)` for complex ones.
    pub fn labels(&self) -> Vec<DegreeLabel> {
        let mut v: Vec<DegreeLabel> = self.terms.keys().map(|m| self.label_of(m)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn label_of(&self, m: &Monomial) -> DegreeLabel {
        match self.field {
            FieldTag::Real => (m.degree(), 0),
            FieldTag::Complex => m.bidegree(),
        }
    }

    /// Homogeneous (real) or bihomogeneous (complex).
    pub fn is_homogeneous(&self) -> bool {
        self.labels().len() <= 1
    }

    pub fn homogeneous_components(&self) -> BTreeMap<DegreeLabel, SpherePolynomial> {
        let mut out: BTreeMap<DegreeLabel, SpherePolynomial> = BTreeMap::new();
        for (m, &c) in &self.terms {
            out.entry(self.label_of(m))
                .or_insert_with(|| Self::zero(self.field, self.dim))
                .add_term(m.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::default() {
            return Self::zero(self.field, self.dim);
        }
        let mut p = self.clone();
        p.terms.values_mut().for_each(|v| *v *= c);
        p
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Complex conjugate as a function on the sphere.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.field, self.dim, self.terms.iter().map(|(m, c)| (m.conj(), c.conj())))
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.field, self.dim, 1.0), |acc, _| &acc * self)
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut p = self.clone();
        p.terms.retain(|_, c| c.norm() > tol);
        p
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.field, other.field, "polynomials over different fields");
        assert_eq!(self.dim, other.dim, "polynomials in different dimensions");
    }

    /// Value at `x`; `x` must have length `dim`.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Complex64 {
        assert_eq!(x.len(), self.dim, "point has the wrong dimension");
        self.eval_with(|i| x[i].to_complex())
    }

    /// Value given coordinate lookup; only coordinates in
    /// [`support`](Self::support) are requested.
    pub fn eval_with(&self, mut x: impl FnMut(usize) -> Complex64) -> Complex64 {
        self.terms.iter().map(|(m, &c)| c * m.eval_with(&mut x)).sum()
    }

    /// Real part of the value; the test functions are real valued.
    pub fn eval_real<S: Scalar>(&self, x: &[S]) -> f64 {
        self.eval(x).re
    }

    /// True when the polynomial is real valued on the sphere (real
    /// coefficients on `R^d`, or equal to its conjugate on `C^d`).
    pub fn is_real_valued(&self, tol: f64) -> bool {
        (self - &self.conj()).max_abs_coefficient() <= tol
    }

    /// Euclidean Laplacian in `R^d`, or in `R^{2d} = C^d` (where it is
    /// `4 sum d/dz_i d/dconj(z_i)`).
    pub fn laplacian(&self) -> Self {
        match self.field {
            FieldTag::Real => self.real_laplacian(),
            FieldTag::Complex => self.wirtinger_laplacian().scale_real(4.0),
        }
    }

    fn real_laplacian(&self) -> Self {
        let mut out = Self::zero(self.field, self.dim);
        for (m, &c) in &self.terms {
            for (k, &(_, a, _)) in m.0.iter().enumerate() {
                if a >= 2 {
                    let mut f = m.0.clone();
                    f[k].1 -= 2;
                    out.add_term(Monomial::from_factors(f), c * f64::from(a * (a - 1)));
                }
            }
        }
        out
    }

    /// `sum_i d/dz_i d/dconj(z_i)`.
    fn wirtinger_laplacian(&self) -> Self {
        let mut out = Self::zero(self.field, self.dim);
        for (m, &c) in &self.terms {
            for (k, &(_, a, b)) in m.0.iter().enumerate() {
                if a >= 1 && b >= 1 {
                    let mut f = m.0.clone();
                    f[k].1 -= 1;
                    f[k].2 -= 1;
                    out.add_term(Monomial::from_factors(f), c * f64::from(a * b));
                }
            }
        }
        out
    }

    /// Splits a homogeneous polynomial `P` on the sphere as `H + R`, with `H`
    /// harmonic of the same degree and `R` homogeneous of degree two lower
    /// (bidegree one lower in each slot). Off the sphere `P = H + |x|^2 R`
    /// need not hold; on it, it does.
    pub fn harmonic_split(&self) -> Result<(Self, Self)> {
        let labels = self.labels();
        if labels.len() > 1 {
            return Err(Error::Domain("harmonic projection needs a homogeneous polynomial".into()));
        }
        let Some(&(p, q)) = labels.first() else {
            return Ok((self.clone(), self.clone()));
        };
        let n = self.dim as f64;
        let r2 = Self::norm_squared(self.field, self.dim);
        // H = sum_j c_j |x|^{2j} L^j P, with L the real Laplacian or the
        // Wirtinger one, c_0 = 1 and the ratio c_{j+1}/c_j fixed by LH = 0.
        let step = |j: u32| -> f64 {
            let j = f64::from(j);
            match self.field {
                FieldTag::Real => -1.0 / (2.0 * (j + 1.0) * (n + 2.0 * f64::from(p) - 2.0 * j - 4.0)),
                FieldTag::Complex => -1.0 / ((j + 1.0) * (n + f64::from(p + q) - j - 2.0)),
            }
        };
        let lap = |x: &Self| match self.field {
            FieldTag::Real => x.real_laplacian(),
            FieldTag::Complex => x.wirtinger_laplacian(),
        };
        let mut h = self.clone();
        let mut rest = Self::zero(self.field, self.dim);
        let mut lj = lap(self);
        let mut c = 1.0;
        let mut r_pow = Self::constant(self.field, self.dim, 1.0);
        let mut j = 0;
        while !lj.is_zero() {
            c *= step(j);
            j += 1;
            rest = &rest - &(&r_pow * &lj).scale_real(c);
            r_pow = &r_pow * &r2;
            h = &h + &(&r_pow * &lj).scale_real(c);
            lj = lap(&lj);
        }
        Ok((h, rest))
    }

    /// Harmonic part of a homogeneous polynomial.
    pub fn harmonic_projection(&self) -> Result<Self> {
        self.harmonic_split().map(|(h, _)| h)
    }

    /// Writes the restriction to the sphere as a sum of harmonic homogeneous
    /// pieces keyed by degree label. Pieces that cancel are omitted.
    pub fn harmonic_decomposition(&self) -> BTreeMap<DegreeLabel, SpherePolynomial> {
        let mut pending = self.homogeneous_components();
        let mut out: BTreeMap<DegreeLabel, SpherePolynomial> = BTreeMap::new();
        while let Some((label, part)) = pending.pop_last() {
            let (h, rest) = part.harmonic_split().expect("component is homogeneous");
            if !rest.is_zero() {
                let lower = (label.0.saturating_sub(if self.field == FieldTag::Real { 2 } else { 1 }), label.1.saturating_sub(1));
                let lower = if self.field == FieldTag::Real { (lower.0, 0) } else { lower };
                let slot = pending.entry(lower).or_insert_with(|| Self::zero(self.field, self.dim));
                *slot = &*slot + &rest;
            }
            let h = h.pruned(1e-14 * part.max_abs_coefficient().max(1.0));
            if !h.is_zero() {
                out.insert(label, h);
            }
        }
        out
    }

    /// Exact average over the uniform measure of `S(X^d)` (up to rounding of
    /// the coefficients).
    pub fn sphere_average(&self) -> Complex64 {
        let mut exps = Vec::new();
        self.terms
            .iter()
            .map(|(m, &c)| {
                exps.clear();
                match self.field {
                    FieldTag::Real => exps.extend(m.0.iter().map(|f| f.1)),
                    FieldTag::Complex => {
                        if m.0.iter().any(|f| f.1 != f.2) {
                            return Complex64::default();
                        }
                        exps.extend(m.0.iter().map(|f| f.1));
                    }
                }
                c * monomial_moment_f64(&exps, self.dim, self.field)
            })
            .sum()
    }

    /// `Var_u P = E_u |P - E_u P|^2`.
    pub fn variance(&self) -> f64 {
        let mean = self.sphere_average();
        self.clone().add_constant(-mean).mean_square()
    }

    fn add_constant(mut self, c: Complex64) -> Self {
        self.add_term(Monomial::one(), c);
        self
    }

    /// `E_u |P|^2`.
    pub fn mean_square(&self) -> f64 {
        (self * &self.conj()).sphere_average().re
    }

    /// Restriction to `{x_axis = 0}`, as a polynomial in the remaining
    /// `d - 1` coordinates (indices above `axis` shift down by one).
    pub fn restrict_equator(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::InvalidParameter {
                field: "axis",
                reason: format!("axis {axis} out of range for dimension {}", self.dim),
            });
        }
        if self.dim < 2 {
            return Err(Error::EmptyOrthocomplement);
        }
        let terms = self.terms.iter().filter(|(m, _)| m.0.iter().all(|f| f.0 != axis)).map(|(m, &c)| {
            let f = m.0.iter().map(|&(i, a, b)| (if i > axis { i - 1 } else { i }, a, b)).collect();
            (Monomial(f), c)
        });
        Ok(Self::from_terms(self.field, self.dim - 1, terms))
    }

    /// Same function composed with the coordinate change `x -> U^H x`, i.e.
    /// `(P o U^H)(x)`, for a unitary `U` with columns `u_k`.
    pub fn compose_adjoint<S: Scalar>(&self, u: &crate::linalg::Matrix<S>) -> Self {
        // x_i -> <u_i, x> = sum_k conj(u_{k i}) x_k
        let lin: Vec<Self> = (0..self.dim)
            .map(|i| {
                let terms = (0..self.dim).map(|k| (Monomial::var(k), u.get(k, i).conj().to_complex()));
                Self::from_terms(self.field, self.dim, terms)
            })
            .collect();
        let lin_conj: Vec<Self> = lin.iter().map(Self::conj).collect();
        let mut out = Self::zero(self.field, self.dim);
        for (m, &c) in &self.terms {
            let mut t = Self::constant(self.field, self.dim, 1.0).scale(c);
            for &(i, a, b) in &m.0 {
                t = &(&t * &lin[i].pow(a)) * &lin_conj[i].pow(if self.field == FieldTag::Complex { b } else { 0 });
            }
            out = &out + &t;
        }
        out
    }

    pub fn from_tensor(t: &SymmetricTensor) -> Self {
        let terms = t.monomial_terms().into_iter().map(|(k, c)| {
            (Monomial::from_factors(k.into_iter().map(|i| (i, 1, 0)).collect()), Complex64::new(c, 0.0))
        });
        Self::from_terms(FieldTag::Real, t.dim(), terms)
    }

    pub fn from_bitensor(t: &BiSymmetricTensor) -> Self {
        let terms = t.monomial_terms().into_iter().map(|(a, b, c)| {
            let f = a.into_iter().map(|i| (i, 1, 0)).chain(b.into_iter().map(|i| (i, 0, 1))).collect();
            (Monomial::from_factors(f), c)
        });
        Self::from_terms(FieldTag::Complex, t.dim(), terms)
    }

    fn expand_indices(m: &Monomial, holo: bool) -> Vec<usize> {
        m.0.iter()
            .flat_map(|&(i, a, b)| std::iter::repeat_n(i, (if holo { a } else { b }) as usize))
            .collect()
    }

    /// Coefficient tensor of a homogeneous real polynomial.
    pub fn to_tensor(&self) -> Result<SymmetricTensor> {
        if self.field != FieldTag::Real || !self.is_homogeneous() {
            return Err(Error::Domain("symmetric tensors represent homogeneous real polynomials".into()));
        }
        if self.terms.values().any(|c| c.im != 0.0) {
            return Err(Error::Domain("real tensors need real coefficients".into()));
        }
        let rank = self.degree() as usize;
        Ok(SymmetricTensor::from_monomial_terms(
            self.dim,
            rank,
            self.terms.iter().map(|(m, c)| (Self::expand_indices(m, true), c.re)),
        ))
    }

    /// Coefficient tensor of a bihomogeneous complex polynomial.
    pub fn to_bitensor(&self) -> Result<BiSymmetricTensor> {
        if self.field != FieldTag::Complex || !self.is_homogeneous() {
            return Err(Error::Domain("bisymmetric tensors represent bihomogeneous complex polynomials".into()));
        }
        let (p, q) = self.labels().first().copied().unwrap_or((0, 0));
        Ok(BiSymmetricTensor::from_monomial_terms(
            self.dim,
            (p as usize, q as usize),
            self.terms
                .iter()
                .map(|(m, &c)| (Self::expand_indices(m, true), Self::expand_indices(m, false), c)),
        ))
    }

    /// Parses expressions such as `x1^2 - 0.1`, `|z1|^2 - 1/8`,
    /// `z1*zc2 + zc1*z2`, `(x1 + x2)^3 / 2`, `r2`. Variables are one-based.
    pub fn parse(input: &str, field: FieldTag, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut p = Parser {
            s: input.as_bytes(),
            pos: 0,
            field,
            dim,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl Add for &SpherePolynomial {
    type Output = SpherePolynomial;
    fn add(self, rhs: Self) -> SpherePolynomial {
        self.check_compatible(rhs);
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &SpherePolynomial {
    type Output = SpherePolynomial;
    fn sub(self, rhs: Self) -> SpherePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &SpherePolynomial {
    type Output = SpherePolynomial;
    fn neg(self) -> SpherePolynomial {
        self.scale_real(-1.0)
    }
}

impl Mul for &SpherePolynomial {
    type Output = SpherePolynomial;
    fn mul(self, rhs: Self) -> SpherePolynomial {
        self.check_compatible(rhs);
        let mut out = SpherePolynomial::zero(self.field, self.dim);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

macro_rules! by_value {
    ($tr:ident, $f:ident) => {
        impl $tr for SpherePolynomial {
            type Output = SpherePolynomial;
            fn $f(self, rhs: Self) -> SpherePolynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
by_value!(Add, add);
by_value!(Sub, sub);
by_value!(Mul, mul);

fn fmt_coef(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}*i", c.im)
    } else {
        format!("({}{:+}*i)", c.re, c.im)
    }
}

impl fmt::Display for SpherePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let (v, vc) = match self.field {
            FieldTag::Real => ("x", "x"),
            FieldTag::Complex => ("z", "zc"),
        };
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let mut parts = Vec::new();
            if m.0.is_empty() || c != Complex64::new(1.0, 0.0) {
                parts.push(fmt_coef(c));
            }
            for &(i, a, b) in &m.0 {
                for (name, e) in [(v, a), (vc, b)] {
                    match e {
                        0 => {}
                        1 => parts.push(format!("{name}{}", i + 1)),
                        _ => parts.push(format!("{name}{}^{e}", i + 1)),
                    }
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    field: FieldTag,
    dim: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::InvalidParameter {
            field: "polynomial",
            reason: format!("{msg} at position {}", self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<SpherePolynomial> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SpherePolynomial> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.unary()?;
            } else if self.eat(b'/') {
                let d = self.unary()?;
                if !d.is_constant() || d.constant_term() == Complex64::default() {
                    return Err(self.error("can only divide by a nonzero constant"));
                }
                acc = acc.scale(d.constant_term().inv());
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<SpherePolynomial> {
        if self.eat(b'-') {
            return Ok(-&self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.integer()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    fn index(&mut self) -> Result<usize> {
        let k = self.integer()? as usize;
        if k == 0 || k > self.dim {
            return Err(self.error(&format!("variable index must lie in 1..={}", self.dim)));
        }
        Ok(k - 1)
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let s = self.s;
        let mut end = start;
        while end < s.len() && (s[end].is_ascii_digit() || s[end] == b'.') {
            end += 1;
        }
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut k = end + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                end = k;
                while end < s.len() && s[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        self.pos = end;
        std::str::from_utf8(&s[start..end])
            .expect("ascii")
            .parse()
            .map_err(|_| self.error("malformed number"))
    }

    fn starts_with(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn atom(&mut self) -> Result<SpherePolynomial> {
        let (field, dim) = (self.field, self.dim);
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(b'|') => {
                self.pos += 1;
                let inner = self.atom()?;
                if !self.eat(b'|') {
                    return Err(self.error("expected closing `|`"));
                }
                if !self.eat(b'^') {
                    return Err(self.error("`|...|` must be raised to an even power"));
                }
                let e = self.integer()?;
                if e % 2 == 1 {
                    return Err(self.error("`|...|` must be raised to an even power"));
                }
                Ok((&inner * &inner.conj()).pow(e / 2))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(SpherePolynomial::constant(field, dim, self.number()?)),
            Some(_) => {
                if self.starts_with("r2") || self.starts_with("norm2") {
                    Ok(SpherePolynomial::norm_squared(field, dim))
                } else if self.starts_with("zc") {
                    let i = self.index()?;
                    if field == FieldTag::Real {
                        return Err(self.error("conjugate variables need the complex field"));
                    }
                    Ok(SpherePolynomial::conj_variable(field, dim, i))
                } else if self.starts_with("conj(") {
                    let e = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)`"));
                    }
                    Ok(e.conj())
                } else if self.starts_with("x") || self.starts_with("z") {
                    let i = self.index()?;
                    Ok(SpherePolynomial::variable(field, dim, i))
                } else if self.starts_with("i") {
                    if field == FieldTag::Real {
                        return Err(self.error("imaginary unit needs the complex field"));
                    }
                    Ok(SpherePolynomial::constant(field, dim, 1.0).scale(Complex64::i()))
                } else {
                    Err(self.error("unexpected character"))
                }
            }
        }
    }
}

/// A real-valued function on `S(X^d)` that the Monte Carlo harnesses can
/// evaluate at sampled points.
pub trait SphereFunction<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[S]) -> f64;

    /// `(E_u f, Var_u f)` when known in closed form.
    fn exact_moments(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<S: Scalar> SphereFunction<S> for SpherePolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[S]) -> f64 {
        self.eval_real(x)
    }

    fn exact_moments(&self) -> Option<(f64, f64)> {
        Some((self.sphere_average().re, self.variance()))
    }
}
