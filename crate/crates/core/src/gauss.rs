//! Gaussian binomial coefficients and small exact helpers built on them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaussError {
    #[error("gaussian binomial arguments must be non-negative (got b={b}, a={a})")]
    Negative { b: i64, a: i64 },
    #[error("q must be at least 2 (got {0})")]
    SmallBase(u64),
}

/// `q^e` as a big integer.
pub fn qpow(q: u64, e: u64) -> BigInt {
    num_traits::pow(BigInt::from(q), e as usize)
}

/// The number of `(a-1)`-spaces of PG(b-1, q), i.e. the product
/// `prod_{i<a} (q^{b-i} - 1) / (q^{a-i} - 1)`.
///
/// Returns zero when `a > b`, so counting formulas with out-of-range
/// lower arguments degrade to zero instead of failing.
pub fn gauss(b: i64, a: i64, q: u64) -> Result<BigInt, GaussError> {
    if b < 0 || a < 0 {
        return Err(GaussError::Negative { b, a });
    }
    if q < 2 {
        return Err(GaussError::SmallBase(q));
    }
    Ok(gauss_u(b as u64, a as u64, q))
}

/// Infallible form of [`gauss`] for non-negative arguments and `q >= 2`.
pub fn gauss_u(b: u64, a: u64, q: u64) -> BigInt {
    if a > b {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..a {
        num *= qpow(q, b - i) - 1;
        den *= qpow(q, a - i) - 1;
    }
    num / den
}

/// `gauss_u` lifted to a rational.
pub(crate) fn gauss_r(b: u64, a: u64, q: u64) -> BigRational {
    BigRational::from_integer(gauss_u(b, a, q))
}

/// `(q^a - 1) / (q^b - 1)` as an exact rational.
pub(crate) fn qratio(q: u64, a: u64, b: u64) -> BigRational {
    BigRational::new(qpow(q, a) - 1, qpow(q, b) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts a-dimensional subspaces of GF(q)^b for prime q by brute force:
    /// every subspace is counted once per ordered basis, so divide by |GL(a,q)|.
    fn brute_force_count(b: u32, a: u32, q: u64) -> u64 {
        let vectors: Vec<Vec<u64>> = (0..q.pow(b))
            .map(|mut c| {
                (0..b)
                    .map(|_| {
                        let d = c % q;
                        c /= q;
                        d
                    })
                    .collect()
            })
            .collect();
        fn span_size(basis: &[Vec<u64>], q: u64) -> usize {
            let mut seen = std::collections::HashSet::new();
            let len = basis.first().map_or(0, |v| v.len());
            for mut c in 0..q.pow(basis.len() as u32) {
                let mut v = vec![0; len];
                for row in basis {
                    let coef = c % q;
                    c /= q;
                    for (x, y) in v.iter_mut().zip(row) {
                        *x = (*x + coef * y) % q;
                    }
                }
                seen.insert(v);
            }
            seen.len()
        }
        fn count_bases(prefix: &mut Vec<Vec<u64>>, vectors: &[Vec<u64>], a: usize, q: u64) -> u64 {
            if prefix.len() == a {
                return 1;
            }
            let mut total = 0;
            for v in vectors {
                prefix.push(v.clone());
                if span_size(prefix, q) == q.pow(prefix.len() as u32) as usize {
                    total += count_bases(prefix, vectors, a, q);
                }
                prefix.pop();
            }
            total
        }
        let ordered = count_bases(&mut Vec::new(), &vectors, a as usize, q);
        let gl: u64 = (0..a).map(|i| q.pow(a) - q.pow(i)).product();
        ordered / gl
    }

    #[test]
    fn brute_force_oracle_agrees() {
        assert_eq!(brute_force_count(4, 2, 2), 35);
        assert_eq!(brute_force_count(4, 2, 3), 130);
        assert_eq!(gauss(4, 2, 2).unwrap(), BigInt::from(35));
        assert_eq!(gauss(4, 2, 3).unwrap(), BigInt::from(130));
        for (b, a, q) in [(3, 1, 2), (3, 2, 3), (5, 2, 2), (4, 1, 5)] {
            assert_eq!(gauss(b, a, q).unwrap(), BigInt::from(brute_force_count(b as u32, a as u32, q)));
        }
    }

    #[test]
    fn edge_cases() {
        for b in 0..6 {
            assert_eq!(gauss(b, 0, 3).unwrap(), BigInt::one());
            assert_eq!(gauss(b, b, 3).unwrap(), BigInt::one());
        }
        assert_eq!(gauss(2, 3, 2).unwrap(), BigInt::zero());
        assert_eq!(gauss(-1, 0, 2), Err(GaussError::Negative { b: -1, a: 0 }));
        assert_eq!(gauss(3, 1, 1), Err(GaussError::SmallBase(1)));
    }

    #[test]
    fn symmetry_and_pascal() {
        for q in [2u64, 3, 4, 5] {
            for b in 1..9u64 {
                for a in 1..b {
                    assert_eq!(gauss_u(b, a, q), gauss_u(b, b - a, q));
                    let pascal = gauss_u(b - 1, a - 1, q) + qpow(q, a) * gauss_u(b - 1, a, q);
                    assert_eq!(gauss_u(b, a, q), pascal);
                }
            }
        }
    }
}
