//! Finite fields GF(p^e) for p^e <= 32, backed by dense lookup tables.
//!
//! Elements are labelled `0..q` by reading the coefficient vector of their
//! polynomial representative (lowest degree first) as a base-`p` number, so
//! `0` and `1` are always the additive and multiplicative identities and the
//! labels `0..p` form the prime subfield. Extension fields are reduced modulo
//! the Conway polynomial of the corresponding size, which makes the labelling
//! identical on every run.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Element label inside a [`Field`].
pub type Elem = u8;

/// Largest supported field order.
pub const MAX_ORDER: usize = 32;

/// Conway polynomials for the non-prime orders up to [`MAX_ORDER`],
/// as `(p, e, coefficients low to high)`.
const CONWAY: &[(u32, u32, &[u8])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (5, 2, &[2, 4, 1]),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("GF({p}^{e}) is not supported (orders up to {MAX_ORDER} are)")]
    Unsupported { p: u32, e: u32 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("element label {index} out of range for GF({q})")]
    OutOfRange { index: usize, q: usize },
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("operands belong to different fields (GF({0}) and GF({1}))")]
    MixedFields(usize, usize),
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits a prime power `q` into `(p, e)`.
pub fn prime_power(q: u64) -> Result<(u32, u32), FieldError> {
    if q < 2 {
        return Err(FieldError::NotPrimePower(q));
    }
    let p = (2..=q).find(|d| q % d == 0).unwrap();
    let mut rest = q;
    let mut e = 0;
    while rest % p == 0 {
        rest /= p;
        e += 1;
    }
    if rest != 1 {
        return Err(FieldError::NotPrimePower(q));
    }
    Ok((p as u32, e))
}

/// Checks irreducibility of a monic polynomial over GF(p) by trial division
/// with every monic polynomial of degree at most half its degree.
pub fn is_irreducible(p: u32, coeffs: &[u8]) -> bool {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return false;
    }
    let p = p as u64;
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for code in 0..count {
            let mut divisor = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                divisor.push((c % p) as u8);
                c /= p;
            }
            divisor.push(1);
            if poly_rem(p as u32, coeffs, &divisor).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Remainder of `num` modulo the monic polynomial `den` over GF(p).
fn poly_rem(p: u32, num: &[u8], den: &[u8]) -> Vec<u8> {
    let mut rem: Vec<u32> = num.iter().map(|&c| c as u32).collect();
    let dd = den.len() - 1;
    while rem.len() > dd {
        let lead = rem.pop().unwrap() % p;
        let shift = rem.len() - dd;
        if lead != 0 {
            for (i, &c) in den[..dd].iter().enumerate() {
                let sub = lead * c as u32 % p;
                rem[shift + i] = (rem[shift + i] + p - sub) % p;
            }
        }
    }
    rem.into_iter().map(|c| (c % p) as u8).collect()
}

/// The finite field GF(p^e) with precomputed operation tables.
#[derive(Clone)]
pub struct Field {
    p: u32,
    e: u32,
    q: usize,
    modulus: Vec<u8>,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(p^e). The same `(p, e)` always yields the same labelling.
    pub fn new(p: u32, e: u32) -> Result<Field, FieldError> {
        if !is_prime(p as u64) {
            return Err(FieldError::NotPrime(p));
        }
        if e == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let q = (p as u64).checked_pow(e).filter(|&q| q <= MAX_ORDER as u64);
        let q = q.ok_or(FieldError::Unsupported { p, e })? as usize;
        let modulus: Vec<u8> = if e == 1 {
            vec![0, 1]
        } else {
            CONWAY
                .iter()
                .find(|(cp, ce, _)| *cp == p && *ce == e)
                .map(|(_, _, m)| m.to_vec())
                .ok_or(FieldError::Unsupported { p, e })?
        };

        let digits = |x: usize| -> Vec<u32> {
            let mut v = Vec::with_capacity(e as usize);
            let mut x = x;
            for _ in 0..e {
                v.push((x % p as usize) as u32);
                x /= p as usize;
            }
            v
        };
        let label = |d: &[u32]| -> usize {
            d.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize)
        };

        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = label(&sum) as Elem;

                let mut prod = vec![0u32; 2 * e as usize - 1];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let prod: Vec<u8> = prod.into_iter().map(|c| c as u8).collect();
                let mut red: Vec<u32> = if e == 1 {
                    prod.iter().map(|&c| c as u32).collect()
                } else {
                    poly_rem(p, &prod, &modulus).into_iter().map(|c| c as u32).collect()
                };
                red.resize(e as usize, 0);
                mul[a * q + b] = label(&red) as Elem;
            }
        }
        let neg = (0..q)
            .map(|a| (0..q).find(|&b| add[a * q + b] == 0).unwrap() as Elem)
            .collect();
        let inv = (0..q)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as Elem
                }
            })
            .collect();

        Ok(Field { p, e, q, modulus, add, mul, neg, inv })
    }

    /// Shared, process-lifetime instance of GF(p^e).
    pub fn get(p: u32, e: u32) -> Result<&'static Field, FieldError> {
        static REGISTRY: OnceLock<Mutex<HashMap<(u32, u32), &'static Field>>> = OnceLock::new();
        let registry = REGISTRY.get_or_init(Default::default);
        if let Some(f) = registry.lock().unwrap().get(&(p, e)) {
            return Ok(f);
        }
        let field: &'static Field = Box::leak(Box::new(Field::new(p, e)?));
        Ok(*registry.lock().unwrap().entry((p, e)).or_insert(field))
    }

    /// Shared instance of the field with `q` elements.
    pub fn of_order(q: u64) -> Result<&'static Field, FieldError> {
        let (p, e) = prime_power(q)?;
        Field::get(p, e)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> usize {
        self.q
    }

    /// Coefficients of the defining polynomial, lowest degree first.
    /// Prime fields report `x`, i.e. `[0, 1]`.
    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a as usize * self.q + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.neg[a as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Option<Elem> {
        (a != 0).then(|| self.inv[a as usize])
    }

    pub fn pow(&self, a: Elem, mut exp: u64) -> Elem {
        let mut base = a;
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: Elem) -> Option<usize> {
        if a == 0 {
            return None;
        }
        let mut x = a;
        let mut ord = 1;
        while x != 1 {
            x = self.mul(x, a);
            ord += 1;
        }
        Some(ord)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.q).map(|a| a as Elem)
    }

    /// Wraps a label as a checked element handle.
    pub fn element(&self, index: usize) -> Result<FieldElement<'_>, FieldError> {
        if index >= self.q {
            return Err(FieldError::OutOfRange { index, q: self.q });
        }
        Ok(FieldElement { field: self, index: index as Elem })
    }
}

/// An element bundled with its field, for checked arithmetic at API boundaries.
/// Bulk geometry code works on raw [`Elem`] labels through [`Field`] instead.
#[derive(Clone, Copy)]
pub struct FieldElement<'f> {
    field: &'f Field,
    index: Elem,
}

impl fmt::Debug for FieldElement<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.index, self.field.q)
    }
}

impl PartialEq for FieldElement<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.index == other.index
    }
}

impl Eq for FieldElement<'_> {}

impl<'f> FieldElement<'f> {
    pub fn index(&self) -> Elem {
        self.index
    }

    pub fn field(&self) -> &'f Field {
        self.field
    }

    fn same_field(&self, other: &FieldElement<'_>) -> Result<(), FieldError> {
        if self.field != other.field {
            return Err(FieldError::MixedFields(self.field.q, other.field.q));
        }
        Ok(())
    }

    pub fn add(self, other: FieldElement<'_>) -> Result<Self, FieldError> {
        self.same_field(&other)?;
        Ok(FieldElement { field: self.field, index: self.field.add(self.index, other.index) })
    }

    pub fn mul(self, other: FieldElement<'_>) -> Result<Self, FieldError> {
        self.same_field(&other)?;
        Ok(FieldElement { field: self.field, index: self.field.mul(self.index, other.index) })
    }

    pub fn neg(self) -> Self {
        FieldElement { field: self.field, index: self.field.neg(self.index) }
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        let index = self.field.inv(self.index).ok_or(FieldError::InverseOfZero)?;
        Ok(FieldElement { field: self.field, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supported() -> Vec<&'static Field> {
        (2..=MAX_ORDER as u64)
            .filter_map(|q| prime_power(q).ok())
            .map(|(p, e)| Field::get(p, e).unwrap())
            .collect()
    }

    #[test]
    fn prime_field_gf2() {
        let f = Field::get(2, 1).unwrap();
        assert_eq!(f.order(), 2);
        assert_eq!(f.elements().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn gf4_modulus_is_the_only_irreducible_quadratic() {
        let irreducible: Vec<Vec<u8>> = (0..4u8)
            .map(|c| vec![c & 1, c >> 1, 1])
            .filter(|m| (0..2u8).all(|x| (m[0] + m[1] * x + x * x) % 2 != 0))
            .collect();
        assert_eq!(irreducible, vec![vec![1, 1, 1]]);
        assert_eq!(Field::get(2, 2).unwrap().modulus(), &[1, 1, 1]);
    }

    #[test]
    fn gf9_orders_divide_eight() {
        let f = Field::get(3, 2).unwrap();
        assert_eq!(f.order(), 9);
        for a in 1..9 {
            assert_eq!(8 % f.multiplicative_order(a).unwrap(), 0);
        }
    }

    #[test]
    fn small_arithmetic() {
        let f3 = Field::get(3, 1).unwrap();
        assert_eq!(f3.add(2, 2), 1);
        // x is label 2 in GF(4); x*x = x + 1 is label 3.
        let f4 = Field::get(2, 2).unwrap();
        assert_eq!(f4.mul(2, 2), 3);
        let f5 = Field::get(5, 1).unwrap();
        assert_eq!(f5.inv(2), Some(3));
    }

    #[test]
    fn element_handles_reject_bad_input() {
        let f5 = Field::get(5, 1).unwrap();
        let f7 = Field::get(7, 1).unwrap();
        assert_eq!(f5.element(0).unwrap().inv(), Err(FieldError::InverseOfZero));
        assert_eq!(
            f5.element(1).unwrap().add(f7.element(1).unwrap()),
            Err(FieldError::MixedFields(5, 7))
        );
        assert!(matches!(f5.element(5), Err(FieldError::OutOfRange { .. })));
        let two = f5.element(2).unwrap();
        assert_eq!(two.inv().unwrap().index(), 3);
        assert_eq!(two.mul(two).unwrap().index(), 4);
        assert_eq!(two.neg().index(), 3);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Field::new(4, 1), Err(FieldError::NotPrime(4)));
        assert_eq!(Field::new(2, 0), Err(FieldError::ZeroDegree));
        assert_eq!(Field::new(2, 6), Err(FieldError::Unsupported { p: 2, e: 6 }));
        assert_eq!(Field::new(7, 2), Err(FieldError::Unsupported { p: 7, e: 2 }));
        assert_eq!(prime_power(12), Err(FieldError::NotPrimePower(12)));
        assert_eq!(prime_power(27), Ok((3, 3)));
    }

    #[test]
    fn moduli_are_irreducible() {
        for &(p, _, m) in CONWAY {
            assert!(is_irreducible(p, m), "{m:?} over GF({p})");
        }
        assert!(!is_irreducible(2, &[1, 0, 1]));
    }

    #[test]
    fn axioms_hold_exhaustively() {
        for f in supported() {
            let q = f.order() as Elem;
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicative_groups_are_cyclic() {
        for f in supported() {
            let q = f.order();
            assert!(
                (1..q as Elem).any(|a| f.multiplicative_order(a) == Some(q - 1)),
                "{f:?}"
            );
        }
    }
}
