//! Symmetric coefficient tensors of homogeneous polynomials.
//!
//! A rank-`l` tensor `C` on `R^d` stands for `P(x) = sum C_{i_1..i_l} x_{i_1}..x_{i_l}`
//! (sum over all index tuples). Entries are stored once per sorted index
//! tuple, so permutation invariance holds by construction and the `l!`
//! permutations of a tuple are never enumerated.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::combinatorics::{binomial, rational_to_f64};
use super::moments::{alpha_f64, beta_f64};
use crate::error::{check_dim, Error, Result};
use crate::field::FieldTag;
use crate::sphere::sample_uniform_sphere;
use crate::stats::Moments;

/// Largest number of stored entries a dense enumeration may produce.
pub const MAX_TENSOR_ENTRIES: u64 = 4_000_000;

/// Multiplicities of the distinct indices of a sorted tuple.
pub(crate) fn multiplicities(key: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in key {
        match out.last_mut() {
            Some((j, m)) if *j == i => *m += 1,
            _ => out.push((i, 1)),
        }
    }
    out
}

/// Number of distinct orderings of a sorted tuple, `l! / prod m_k!`.
pub fn orderings(key: &[usize]) -> f64 {
    let mut acc = 1.0;
    let mut n = 0.0;
    for (_, m) in multiplicities(key) {
        for k in 1..=m {
            n += 1.0;
            acc *= n / k as f64;
        }
    }
    acc
}

fn sorted(mut key: Vec<usize>) -> Vec<usize> {
    key.sort_unstable();
    key
}

/// Number of sorted tuples of length `rank` over `dim` symbols.
pub fn sorted_tuple_count(dim: usize, rank: usize) -> u64 {
    if dim == 0 {
        return u64::from(rank == 0);
    }
    use num_traits::ToPrimitive;
    binomial((dim + rank - 1) as u64, rank as u64).to_u64().unwrap_or(u64::MAX)
}

/// All non-decreasing tuples of length `rank` over `0..dim`.
pub fn sorted_tuples(dim: usize, rank: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(rank);
    fn rec(dim: usize, rank: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == rank {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, rank, i, cur, out);
            cur.pop();
        }
    }
    rec(dim, rank, 0, &mut cur, &mut out);
    out
}

fn check_entry_budget(dim: usize, rank: usize) -> Result<()> {
    let n = sorted_tuple_count(dim, rank);
    if n > MAX_TENSOR_ENTRIES {
        return Err(Error::ResourceLimit(format!(
            "rank {rank} in dimension {dim} has {n} independent entries"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    dim: usize,
    rank: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

impl SymmetricTensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Self {
            dim,
            rank,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Entry at any ordering of `index`.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.entries.get(&sorted(index.to_vec())).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        assert_eq!(index.len(), self.rank, "index length must equal the rank");
        assert!(index.iter().all(|&i| i < self.dim), "index out of range");
        let key = sorted(index.to_vec());
        if value == 0.0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn add_to(&mut self, index: &[usize], value: f64) {
        let v = self.get(index) + value;
        self.set(index, v);
    }

    /// Stored entries, one per sorted index tuple.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Coefficient form: monomial `x^K` (as a sorted tuple) with coefficient
    /// `C_K` times the number of orderings of `K`.
    pub fn monomial_terms(&self) -> Vec<(Vec<usize>, f64)> {
        self.entries.iter().map(|(k, &v)| (k.clone(), v * orderings(k))).collect()
    }

    /// Inverse of [`monomial_terms`](Self::monomial_terms).
    pub fn from_monomial_terms(dim: usize, rank: usize, terms: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Self {
        let mut t = Self::zeros(dim, rank);
        for (k, c) in terms {
            let k = sorted(k);
            let v = c / orderings(&k);
            t.add_to(&k, v);
        }
        t
    }

    /// Polynomial value at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.entries
            .iter()
            .map(|(k, &v)| v * orderings(k) * k.iter().map(|&i| x[i]).product::<f64>())
            .sum()
    }

    /// Contraction of one pair of slots, `T_J = sum_i C_{J i i}`.
    pub fn contract_pair(&self) -> Self {
        assert!(self.rank >= 2, "contraction needs rank at least 2");
        let mut out = Self::zeros(self.dim, self.rank - 2);
        for (k, &v) in &self.entries {
            for (i, m) in multiplicities(k) {
                if m >= 2 {
                    let mut j = k.clone();
                    let pos = j.iter().position(|&x| x == i).expect("index present");
                    j.drain(pos..pos + 2);
                    out.add_to(&j, v);
                }
            }
        }
        out
    }

    /// `sum C_{i_1 i_1 i_2 i_2 ...}`; zero for odd rank.
    pub fn full_contraction(&self) -> f64 {
        if self.rank % 2 == 1 {
            return 0.0;
        }
        let mut t = self.clone();
        while t.rank > 0 {
            t = t.contract_pair();
        }
        t.get(&[])
    }

    /// Largest magnitude entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Average of the polynomial over `S(R^d)`: `alpha_{l,d}` times the
    /// full trace contraction, zero for odd rank.
    pub fn sphere_average(&self) -> f64 {
        if self.rank % 2 == 1 {
            return 0.0;
        }
        alpha_f64(self.rank as u64, self.dim as u64) * self.full_contraction()
    }

    /// Symmetrization of `delta_{i_1 i_2} ... delta_{i_{l-1} i_l}`:
    /// nonzero exactly on tuples whose multiplicities `m_k` are all even,
    /// where it equals `prod (m_k - 1)!! / (l - 1)!!`.
    pub fn symmetrized_delta(dim: usize, rank: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut t = Self::zeros(dim, rank);
        if rank % 2 == 1 {
            return Ok(t);
        }
        check_entry_budget(dim, rank / 2)?;
        let denom = odd_double_factorial(rank);
        for half in sorted_tuples(dim, rank / 2) {
            let key: Vec<usize> = half.iter().flat_map(|&i| [i, i]).collect();
            let num: f64 = multiplicities(&key).iter().map(|&(_, m)| odd_double_factorial(m)).product();
            t.entries.insert(key, num / denom);
        }
        Ok(t)
    }

    /// The moment tensor `A_{i_1..i_l} = E x_{i_1} .. x_{i_l}` of the uniform
    /// measure on `S(R^d)`, as `alpha_{l,d}` times the symmetrized delta.
    pub fn sphere_moment_tensor(dim: usize, rank: usize) -> Result<Self> {
        let mut t = Self::symmetrized_delta(dim, rank)?;
        if rank % 2 == 0 {
            let a = alpha_f64(rank as u64, dim as u64);
            t.entries.values_mut().for_each(|v| *v *= a);
        }
        Ok(t)
    }
}

/// `(m - 1)!!` as a float, for even `m`.
fn odd_double_factorial(m: usize) -> f64 {
    (1..m).step_by(2).map(|k| k as f64).product()
}

/// Coefficient tensor of a bihomogeneous polynomial
/// `P(z) = sum C_{I, J} z_{i_1}..z_{i_l} conj(z_{j_1})..conj(z_{j_l'})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiSymmetricTensor {
    dim: usize,
    ranks: (usize, usize),
    entries: BTreeMap<(Vec<usize>, Vec<usize>), Complex64>,
}

impl BiSymmetricTensor {
    pub fn zeros(dim: usize, ranks: (usize, usize)) -> Self {
        Self {
            dim,
            ranks,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ranks(&self) -> (usize, usize) {
        self.ranks
    }

    pub fn get(&self, unprimed: &[usize], primed: &[usize]) -> Complex64 {
        self.entries
            .get(&(sorted(unprimed.to_vec()), sorted(primed.to_vec())))
            .copied()
            .unwrap_or_default()
    }

    pub fn set(&mut self, unprimed: &[usize], primed: &[usize], value: Complex64) {
        assert_eq!((unprimed.len(), primed.len()), self.ranks, "index lengths must equal the bi-rank");
        assert!(unprimed.iter().chain(primed).all(|&i| i < self.dim), "index out of range");
        let key = (sorted(unprimed.to_vec()), sorted(primed.to_vec()));
        if value == Complex64::default() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn add_to(&mut self, unprimed: &[usize], primed: &[usize], value: Complex64) {
        let v = self.get(unprimed, primed) + value;
        self.set(unprimed, primed, v);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &[usize], Complex64)> {
        self.entries.iter().map(|((a, b), &v)| (a.as_slice(), b.as_slice(), v))
    }

    /// Monomial `z^I conj(z)^J` with its coefficient.
    pub fn monomial_terms(&self) -> Vec<(Vec<usize>, Vec<usize>, Complex64)> {
        self.entries
            .iter()
            .map(|((a, b), &v)| (a.clone(), b.clone(), v * (orderings(a) * orderings(b))))
            .collect()
    }

    pub fn from_monomial_terms(
        dim: usize,
        ranks: (usize, usize),
        terms: impl IntoIterator<Item = (Vec<usize>, Vec<usize>, Complex64)>,
    ) -> Self {
        let mut t = Self::zeros(dim, ranks);
        for (a, b, c) in terms {
            let (a, b) = (sorted(a), sorted(b));
            let v = c / (orderings(&a) * orderings(&b));
            t.add_to(&a, &b, v);
        }
        t
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.dim);
        self.entries
            .iter()
            .map(|((a, b), &v)| {
                let za: Complex64 = a.iter().map(|&i| z[i]).product();
                let zb: Complex64 = b.iter().map(|&i| z[i].conj()).product();
                v * (orderings(a) * orderings(b)) * za * zb
            })
            .sum()
    }

    /// `T_{I', J'} = sum_i C_{I' i, J' i}`.
    pub fn contract_pair(&self) -> Self {
        let (l, lp) = self.ranks;
        assert!(l >= 1 && lp >= 1, "contraction needs both ranks at least 1");
        let mut out = Self::zeros(self.dim, (l - 1, lp - 1));
        for ((a, b), &v) in &self.entries {
            for (i, _) in multiplicities(a) {
                if let Ok(pb) = b.binary_search(&i) {
                    let pa = a.binary_search(&i).expect("index present");
                    let mut a2 = a.clone();
                    a2.remove(pa);
                    let mut b2 = b.clone();
                    b2.remove(pb);
                    out.add_to(&a2, &b2, v);
                }
            }
        }
        out
    }

    /// `sum C_{i_1..i_l, i_1..i_l}`; zero unless the two ranks agree.
    pub fn full_contraction(&self) -> Complex64 {
        if self.ranks.0 != self.ranks.1 {
            return Complex64::default();
        }
        let mut t = self.clone();
        while t.ranks.0 > 0 {
            t = t.contract_pair();
        }
        t.get(&[], &[])
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Average over `S(C^d)`: `beta_{l,d}` times the full contraction, zero
    /// for unequal ranks.
    pub fn sphere_average(&self) -> Complex64 {
        let (l, lp) = self.ranks;
        if l != lp {
            return Complex64::default();
        }
        self.full_contraction() * beta_f64(l as u64, self.dim as u64)
    }
}

/// Entrywise Monte Carlo estimate of a moment tensor.
#[derive(Debug, Clone)]
pub struct MomentTensorEstimate {
    pub mean: SymmetricTensor,
    pub std_error: SymmetricTensor,
    pub samples: u64,
}

impl MomentTensorEstimate {
    /// Largest `|mean - target| / std_error` over all sorted tuples; entries
    /// with zero error count only if they differ from the target.
    pub fn max_z_score(&self, target: &SymmetricTensor) -> f64 {
        sorted_tuples(self.mean.dim(), self.mean.rank())
            .iter()
            .map(|k| crate::stats::Estimate::new(self.mean.get(k), self.std_error.get(k)).z_score(target.get(k)))
            .fold(0.0, f64::max)
    }
}

pub const MAX_EMPIRICAL_RANK: usize = 4;
pub const MAX_EMPIRICAL_DIM: usize = 12;

/// Monte Carlo estimate of `A_{i_1..i_l} = E x_{i_1}..x_{i_l}` under the
/// uniform measure. Complex spheres are sampled in their realification
/// `S(C^d) = S(R^{2d})`, coordinates `(Re z_1, Im z_1, Re z_2, ...)`.
pub fn empirical_moment_tensor<R: Rng + ?Sized>(
    rank: usize,
    dim: usize,
    field: FieldTag,
    samples: u64,
    rng: &mut R,
) -> Result<MomentTensorEstimate> {
    check_dim(dim)?;
    if rank > MAX_EMPIRICAL_RANK || dim > MAX_EMPIRICAL_DIM {
        return Err(Error::ResourceLimit(format!(
            "empirical moment tensors support rank <= {MAX_EMPIRICAL_RANK} and dimension <= {MAX_EMPIRICAL_DIM}, got ({rank}, {dim})"
        )));
    }
    let n = field.real_dim(dim);
    let keys = sorted_tuples(n, rank);
    let mut acc = vec![Moments::new(); keys.len()];
    for _ in 0..samples {
        let x: Vec<f64> = match field {
            FieldTag::Real => sample_uniform_sphere::<f64, _>(dim, rng)?.into_inner(),
            FieldTag::Complex => sample_uniform_sphere::<Complex64, _>(dim, rng)?
                .into_inner()
                .into_iter()
                .flat_map(|z| [z.re, z.im])
                .collect(),
        };
        for (m, k) in acc.iter_mut().zip(&keys) {
            m.push(k.iter().map(|&i| x[i]).product());
        }
    }
    let mut mean = SymmetricTensor::zeros(n, rank);
    let mut se = SymmetricTensor::zeros(n, rank);
    for (m, k) in acc.iter().zip(&keys) {
        mean.set(k, m.mean());
        se.set(k, m.std_error());
    }
    Ok(MomentTensorEstimate {
        mean,
        std_error: se,
        samples,
    })
}

/// Exact `E x^K` for a sorted tuple `K` under the uniform measure on
/// `S(R^dim)`, via the monomial moment formula.
pub fn exact_moment_entry(dim: usize, key: &[usize]) -> Result<f64> {
    let mut exps = vec![0u32; dim];
    for &i in key {
        exps[i] += 1;
    }
    super::moments::real_monomial_moment(&exps.into()).map(|r| rational_to_f64(&r))
}
