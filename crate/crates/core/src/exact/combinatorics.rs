use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `n!!` for `n >= -1`, with `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> Result<BigUint> {
    if n < -1 {
        return Err(Error::Domain(format!("double factorial undefined for {n}")));
    }
    let mut acc = BigUint::one();
    let mut k = n;
    while k > 1 {
        acc *= k as u64;
        k -= 2;
    }
    Ok(acc)
}

pub(crate) fn dfact(n: i64) -> BigUint {
    double_factorial(n).expect("argument is at least -1")
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Binomial coefficient by the multiplicative formula; zero for `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub(crate) fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// `m!` for each entry, multiplied together.
pub(crate) fn product_of_factorials(ns: impl IntoIterator<Item = u64>) -> BigUint {
    ns.into_iter().fold(BigUint::one(), |acc, n| acc * factorial(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorial_small_values() {
        assert_eq!(double_factorial(-1).unwrap(), BigUint::one());
        assert_eq!(double_factorial(0).unwrap(), BigUint::one());
        assert_eq!(double_factorial(1).unwrap(), BigUint::one());
        assert_eq!(double_factorial(6).unwrap(), BigUint::from(48u32));
        assert_eq!(double_factorial(7).unwrap(), BigUint::from(105u32));
        assert!(matches!(double_factorial(-2), Err(Error::Domain(_))));
    }

    #[test]
    fn double_factorial_outgrows_u64() {
        // 40!! = 2^20 * 20! does not fit in 64 bits
        let v = double_factorial(40).unwrap();
        assert_eq!(v, BigUint::from(1u64 << 20) * factorial(20));
        assert!(v.bits() > 64);
    }

    #[test]
    fn binomial_matches_factorial_formula() {
        for n in 0..25u64 {
            for k in 0..=n {
                assert_eq!(binomial(n, k) * factorial(k) * factorial(n - k), factorial(n));
            }
        }
        assert_eq!(binomial(3, 5), BigUint::zero());
    }
}
