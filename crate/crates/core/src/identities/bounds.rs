//! Known lower bounds for the parameter of non-trivial Cameron-Liebler
//! sets, and the parameter gaps that hold in general.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{admissible_parameters, ser_rat, IdentityError};
use crate::field::prime_power;
use crate::gauss::{qpow, qratio};
use crate::geometry::Kind;

/// Numerical value of a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BoundValue {
    Exact(#[serde(serialize_with = "ser_rat")] BigRational),
    Real(f64),
}

impl BoundValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => r.to_f64().unwrap_or(f64::INFINITY),
            BoundValue::Real(x) => *x,
        }
    }

    /// Is `x` strictly below the bound?
    fn above(&self, x: &BigRational) -> bool {
        match self {
            BoundValue::Exact(b) => x < b,
            BoundValue::Real(b) => x.to_f64().unwrap_or(f64::INFINITY) < *b,
        }
    }

    /// Is `x` at most the bound?
    fn at_most(&self, x: &BigRational) -> bool {
        match self {
            BoundValue::Exact(b) => x <= b,
            BoundValue::Real(b) => x.to_f64().unwrap_or(f64::INFINITY) <= *b,
        }
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Exact(r) => write!(f, "{r}"),
            BoundValue::Real(x) => write!(f, "{x:.6}"),
        }
    }
}

/// Range of parameters that a bound rules out for non-trivial sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: BigRational,
    pub lo_closed: bool,
    pub hi: BoundValue,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: &BigRational) -> bool {
        let lo_ok = if self.lo_closed { *x >= self.lo } else { *x > self.lo };
        let hi_ok = if self.hi_closed { self.hi.at_most(x) } else { self.hi.above(x) };
        lo_ok && hi_ok
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (l, r) = (if self.lo_closed { '[' } else { '(' }, if self.hi_closed { ']' } else { ')' });
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// One bound evaluated at `(n, k, q)`. When the hypotheses fail,
/// `applicable` is false and no value is computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: &'static str,
    pub kind: Kind,
    pub n: u64,
    pub k: u64,
    pub q: u64,
    pub hypothesis: &'static str,
    pub applicable: bool,
    pub value: Option<BoundValue>,
    pub excluded: Option<Interval>,
    /// Isolated parameters ruled out besides the interval.
    #[serde(serialize_with = "ser_rats")]
    pub excluded_points: Vec<BigRational>,
}

fn ser_rats<S: serde::Serializer>(xs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

impl BoundReport {
    /// Does this bound rule out a non-trivial set with parameter `x`?
    pub fn excludes(&self, x: &BigRational) -> bool {
        self.excluded.as_ref().is_some_and(|i| i.contains(x)) || self.excluded_points.contains(x)
    }
}

fn check_args(n: u64, k: u64, q: u64) -> Result<(), IdentityError> {
    if prime_power(q).is_err() {
        return Err(IdentityError::Hypothesis(format!("q = {q} is not a prime power")));
    }
    if k == 0 || k >= n {
        return Err(IdentityError::Hypothesis(format!("need 1 <= k < n (n={n}, k={k})")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report(
    name: &'static str,
    kind: Kind,
    (n, k, q): (u64, u64, u64),
    hypothesis: &'static str,
    applicable: bool,
    value: impl FnOnce() -> BoundValue,
    lo: (i64, bool),
    hi_closed: bool,
) -> BoundReport {
    let value = applicable.then(value);
    let excluded = value.clone().map(|hi| Interval {
        lo: BigRational::from_integer(lo.0.into()),
        lo_closed: lo.1,
        hi,
        hi_closed,
    });
    let excluded_points = if applicable && kind == Kind::Affine && n >= k + 2 {
        vec![BigRational::from_integer(2.into())]
    } else {
        Vec::new()
    };
    BoundReport { name, kind, n, k, q, hypothesis, applicable, value, excluded, excluded_points }
}

/// Projective k-sets, n >= 3k+3: a non-trivial set has
/// `x >= (q^{n-k}-1)/(q^{2k+2}-1) + 1`.
pub fn projective_bound(n: u64, k: u64, q: u64) -> Result<BoundReport, IdentityError> {
    check_args(n, k, q)?;
    Ok(report(
        "projective_bound",
        Kind::Projective,
        (n, k, q),
        "n >= 3k+3",
        n >= 3 * k + 3,
        || BoundValue::Exact(qratio(q, n - k, 2 * k + 2) + BigRational::one()),
        (1, false),
        false,
    ))
}

/// Affine k-sets, n >= 2k+2: a non-trivial set has
/// `x >= 2(q^{n-k}-1)/(q^{k+1}-1) + 1`; x = 2 is also impossible.
pub fn affine_bound(n: u64, k: u64, q: u64) -> Result<BoundReport, IdentityError> {
    check_args(n, k, q)?;
    Ok(report(
        "affine_bound",
        Kind::Affine,
        (n, k, q),
        "n >= 2k+2",
        n >= 2 * k + 2,
        || BoundValue::Exact(BigRational::from_integer(2.into()) * qratio(q, n - k, k + 1) + BigRational::one()),
        (1, false),
        false,
    ))
}

/// Affine line classes, n >= 4: `x >= 2(q^{n-1}-1)/(q^2-1) + 1`.
pub fn affine_line_bound(n: u64, q: u64) -> Result<BoundReport, IdentityError> {
    check_args(n, 1, q)?;
    Ok(report(
        "affine_line_bound",
        Kind::Affine,
        (n, 1, q),
        "n >= 4",
        n >= 4,
        || BoundValue::Exact(BigRational::from_integer(2.into()) * qratio(q, n - 1, 2) + BigRational::one()),
        (1, false),
        false,
    ))
}

/// Projective k-sets, n >= 3k+2 and q >= 3: parameters
/// `2 <= x <= 2^{-1/8} q^{n/2 - k^2/4 - 3k/4 - 3/2} (q-1)^{k^2/4 - k/4 + 1/2} sqrt(q^2+q+1)`
/// do not occur.
pub fn window_bound(n: u64, k: u64, q: u64) -> Result<BoundReport, IdentityError> {
    check_args(n, k, q)?;
    let (nf, kf, qf) = (n as f64, k as f64, q as f64);
    Ok(report(
        "window_bound",
        Kind::Projective,
        (n, k, q),
        "n >= 3k+2, q >= 3",
        n >= 3 * k + 2 && q >= 3,
        || {
            let a = nf / 2.0 - kf * kf / 4.0 - 3.0 * kf / 4.0 - 1.5;
            let b = kf * kf / 4.0 - kf / 4.0 + 0.5;
            BoundValue::Real(2f64.powf(-0.125) * qf.powf(a) * (qf - 1.0).powf(b) * (qf * qf + qf + 1.0).sqrt())
        },
        (2, true),
        true,
    ))
}

/// Largest integer x >= 1 with `16x <= min(q^{(n-k-l+2)/3}, q^{(n-2k-r)/3})`,
/// where `(q^{l-1}-1)/(q-1) < x <= (q^l-1)/(q-1)` and
/// `r = (-(n+1)) mod (k+1)`. Non-trivial projective sets (n >= 2k+1) with
/// parameter up to this value do not exist beyond x <= 2. Returns 0 when
/// no x qualifies.
pub fn small_parameter_max(n: u64, k: u64, q: u64) -> Result<BoundReport, IdentityError> {
    check_args(n, k, q)?;
    let applicable = n >= 2 * k + 1;
    let r = (k + 1 - (n + 1) % (k + 1)) % (k + 1);
    let fits = |x: u64| -> bool {
        // l = least integer with x <= (q^l - 1)/(q - 1)
        let mut l = 1u64;
        while BigInt::from(x) * BigInt::from(q - 1) > qpow(q, l) - 1 {
            l += 1;
        }
        let cube = BigInt::from(16 * x).pow(3);
        let ok = |e: i64| e >= 0 && cube <= qpow(q, e as u64);
        ok(n as i64 - k as i64 - l as i64 + 2) && ok(n as i64 - 2 * k as i64 - r as i64)
    };
    let value = || {
        // both right-hand sides only shrink as x grows, so stop at the first miss
        let mut best = 0u64;
        while fits(best + 1) {
            best += 1;
        }
        BoundValue::Exact(BigRational::from_integer(best.into()))
    };
    let mut rep = report(
        "small_parameter_max",
        Kind::Projective,
        (n, k, q),
        "n >= 2k+1",
        applicable,
        value,
        (2, false),
        true,
    );
    if rep.value.as_ref().is_some_and(|v| v.to_f64() <= 2.0) {
        rep.excluded = None;
    }
    Ok(rep)
}

/// One row of the bounds table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: u64,
    pub k: u64,
    pub q: u64,
    pub reports: Vec<BoundReport>,
}

/// Every bound at every grid point; hypothesis failures appear as
/// non-applicable reports.
pub fn bound_table(ns: &[u64], ks: &[u64], qs: &[u64]) -> Result<Vec<BoundRow>, IdentityError> {
    let mut rows = Vec::new();
    for &q in qs {
        for &k in ks {
            for &n in ns.iter().filter(|&&n| n > k) {
                let mut reports = vec![projective_bound(n, k, q)?, affine_bound(n, k, q)?, window_bound(n, k, q)?, small_parameter_max(n, k, q)?];
                if k == 1 {
                    reports.push(affine_line_bound(n, q)?);
                }
                rows.push(BoundRow { n, k, q, reports });
            }
        }
    }
    Ok(rows)
}

/// General gaps: no parameter in (0,1); none in (1,2) once n >= 3k+2.
/// Both hold in PG and, through the closure, in AG.
pub fn gap_excludes(n: u64, k: u64, x: &BigRational) -> bool {
    let (zero, one, two) = (BigRational::zero(), BigRational::one(), BigRational::from_integer(2.into()));
    (*x > zero && *x < one) || (n >= 3 * k + 2 && *x > one && *x < two)
}

/// Checks a parameter against everything that holds for every
/// Cameron-Liebler k-set, trivial or not: the range, the general gaps,
/// the missing x = 2 in AG, and the admissible-value structure in PG.
pub fn parameter_consistent(kind: Kind, n: u64, k: u64, q: u64, x: &BigRational) -> Result<(), String> {
    let max = match kind {
        Kind::Projective => qratio(q, n + 1, k + 1),
        Kind::Affine => BigRational::from_integer(qpow(q, n - k)),
    };
    if *x < BigRational::zero() || *x > max {
        return Err(format!("{x} outside [0, {max}]"));
    }
    if gap_excludes(n, k, x) {
        return Err(format!("{x} lies in a parameter gap"));
    }
    if kind == Kind::Affine && n >= k + 2 && *x == BigRational::from_integer(2.into()) {
        return Err("x = 2 does not occur in affine spaces".into());
    }
    if kind == Kind::Projective {
        for t in (2 * k + 1)..n {
            if let Ok(a) = admissible_parameters(n, k, q, t) {
                if !a.admits(x) {
                    return Err(format!("{x} is not of the form 1 + C/{}", a.denominator));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(projective_bound(6, 1, 2).unwrap().value, Some(BoundValue::Exact(r(46, 15))));
        assert_eq!(affine_bound(4, 1, 2).unwrap().value, Some(BoundValue::Exact(r(17, 3))));
        assert_eq!(affine_line_bound(4, 2).unwrap().value, affine_bound(4, 1, 2).unwrap().value);
        assert_eq!(projective_bound(9, 1, 3).unwrap().value, Some(BoundValue::Exact(r(83, 1))));
        let w = window_bound(9, 1, 3).unwrap().value.unwrap().to_f64();
        // exponent 9/2 - 1/4 - 3/4 - 3/2 = 2
        let exact = 2f64.powf(-0.125) * 9.0 * 2f64.sqrt() * 13f64.sqrt();
        assert!((w - exact).abs() <= 1e-9 * exact, "{w}");
    }

    #[test]
    fn hypotheses_gate_values() {
        let rep = projective_bound(5, 1, 2).unwrap();
        assert!(!rep.applicable && rep.value.is_none() && !rep.excludes(&r(2, 1)));
        assert!(!window_bound(5, 1, 2).unwrap().applicable);
        assert!(!affine_bound(3, 1, 2).unwrap().applicable);
        assert!(projective_bound(6, 1, 6).is_err());
        assert!(projective_bound(3, 3, 2).is_err());
    }

    #[test]
    fn exclusion_windows() {
        let rep = projective_bound(6, 1, 2).unwrap();
        assert!(rep.excludes(&r(2, 1)) && !rep.excludes(&r(1, 1)) && !rep.excludes(&r(46, 15)));
        let a = affine_bound(4, 1, 2).unwrap();
        assert!(a.excludes(&r(2, 1)) && a.excludes(&r(5, 1)) && !a.excludes(&r(6, 1)));
        let w = window_bound(9, 1, 3).unwrap();
        assert!(w.excludes(&r(2, 1)) && w.excludes(&r(42, 1)) && !w.excludes(&r(43, 1)));
    }

    #[test]
    fn small_parameter_scan() {
        // r = 0 for n=7,k=1; need (16x)^3 <= 2^{n-k-l+2} and <= 2^{n-2k}
        assert_eq!(small_parameter_max(7, 1, 2).unwrap().value, Some(BoundValue::Exact(r(0, 1))));
        let big = small_parameter_max(40, 1, 2).unwrap();
        let BoundValue::Exact(v) = big.value.clone().unwrap() else { panic!() };
        let x: u64 = v.to_integer().try_into().unwrap();
        // 16*x <= 2^{(40-2)/3} means x <= 2^{38/3}/16 ~ 407
        assert!(x > 2 && x <= 407);
        assert!(big.excludes(&r(3, 1)) && !big.excludes(&r(2, 1)));
        assert!(!small_parameter_max(2, 1, 2).unwrap().applicable);
    }

    #[test]
    fn general_consistency() {
        assert!(parameter_consistent(Kind::Projective, 3, 1, 2, &r(1, 1)).is_ok());
        assert!(parameter_consistent(Kind::Projective, 3, 1, 2, &r(1, 2)).is_err());
        assert!(parameter_consistent(Kind::Projective, 5, 1, 2, &r(3, 2)).is_err());
        assert!(parameter_consistent(Kind::Projective, 5, 1, 2, &r(5, 1)).is_ok());
        assert!(parameter_consistent(Kind::Projective, 4, 1, 2, &r(5, 4)).is_err());
        assert!(parameter_consistent(Kind::Affine, 3, 1, 2, &r(2, 1)).is_err());
        assert!(parameter_consistent(Kind::Affine, 3, 1, 2, &r(5, 1)).is_err());
    }
}
