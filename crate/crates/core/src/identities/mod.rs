//! Counting identities satisfied by Cameron-Liebler sets, the gluing
//! criteria built from them, and the admissible-parameter results.

mod bounds;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use bounds::{
    bound_table, gap_excludes, parameter_consistent, projective_bound, affine_bound, window_bound, small_parameter_max, affine_line_bound, BoundReport, BoundRow,
    BoundValue, Interval,
};

use crate::clset::{verify_row_space, ClsetError, KSet};
use crate::gauss::{gauss_r, gauss_u, qpow, qratio};
use crate::geometry::{Geometry, GeometryError, Kind, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error(transparent)]
    Clset(#[from] ClsetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("the set is not a Cameron-Liebler set (row-space check fails at column {0})")]
    NotCl(u32),
    #[error("the point is not in the subspace")]
    PointNotInSubspace,
    #[error("restriction to {dim}-space {id} is not a Cameron-Liebler set")]
    RestrictionNotCl { id: u32, dim: usize },
}

fn hyp(cond: bool, text: impl Into<String>) -> Result<(), IdentityError> {
    if cond {
        Ok(())
    } else {
        Err(IdentityError::Hypothesis(text.into()))
    }
}

fn rat(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

fn require_cl(l: &KSet) -> Result<(), IdentityError> {
    let r = verify_row_space(l)?;
    match r.witness {
        None => Ok(()),
        Some(crate::clset::Witness::Column { id }) => Err(IdentityError::NotCl(id)),
        Some(_) => unreachable!("row-space witnesses are columns"),
    }
}

/// Both sides of an identity evaluated at one site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub name: &'static str,
    pub site: String,
    #[serde(serialize_with = "ser_rat")]
    pub lhs: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub rhs: BigRational,
    pub passed: bool,
}

fn ser_int<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub(crate) fn ser_rat<S: serde::Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// The point/subspace identity for a projective Cameron-Liebler k-set, at
/// point `p` (ID) and subspace `tau` through it of dimension i >= k+1:
///
/// `|[p]_k ∩ L| + G(n-1,k)(q^k-1)/(G(i-1,k)(q^i-1)) |[tau]_k ∩ L|
///   = G(n-1,k)/G(i-1,k) |[p,tau]_k ∩ L| + (q^k-1)/(q^n-1) |L|`.
pub fn check_point_subspace_identity(l: &KSet, p: u32, tau: &Subspace) -> Result<IdentityReport, IdentityError> {
    let g = l.geometry();
    if g.kind() != Kind::Projective {
        return Err(ClsetError::WrongKind(Kind::Projective).into());
    }
    g.check_same(&tau.geometry())?;
    let (n, k, i, q) = (g.n() as u64, l.k() as u64, tau.dim() as u64, g.q());
    hyp(i >= k + 1, format!("subspace dimension {i} must be at least k+1 = {}", k + 1))?;
    let points = g.table(0)?;
    if p as usize >= points.len() || !g.incident(points.get(p), tau)? {
        return Err(IdentityError::PointNotInSubspace);
    }
    require_cl(l)?;
    let table = g.table(l.k())?;
    let through_p = |m: &u32| table.points(*m).contains(p);
    let a = l.members().iter().filter(|m| through_p(m)).count();
    let inside = l.inside(tau)?;
    let b = inside.len();
    let c = inside.iter().filter(|m| through_p(m)).count();
    let ratio = gauss_r(n - 1, k, q) / gauss_r(i - 1, k, q);
    let lhs = rat(a) + &ratio * rat(qpow(q, k) - 1) / rat(qpow(q, i) - 1) * rat(b);
    let rhs = &ratio * rat(c) + qratio(q, k, n) * rat(l.len());
    Ok(IdentityReport {
        name: "point-subspace",
        site: format!("p={p} tau={:?}", tau),
        passed: lhs == rhs,
        lhs,
        rhs,
    })
}

/// Sum, over the t-subspaces through k-subspace `kid`, of the parameter
/// of the restriction of `l`; restriction parameters are `count / G(t,k)`.
fn restriction_parameter_sum(l: &KSet, kid: u32, t: usize) -> Result<BigRational, IdentityError> {
    let g = l.geometry();
    let c = g.containment(l.k(), t)?;
    let count: usize = c
        .containing(kid)
        .iter()
        .map(|&pi| c.within(pi).iter().filter(|&&m| l.contains(m)).count())
        .sum();
    Ok(BigRational::new(count.into(), gauss_u(t as u64, l.k() as u64, g.q())))
}

fn check_pg_window(g: Geometry, k: usize, t: usize) -> Result<(), IdentityError> {
    if g.kind() != Kind::Projective {
        return Err(ClsetError::WrongKind(Kind::Projective).into());
    }
    let n = g.n();
    hyp(n >= 2 * k + 2, format!("n >= 2k+2 (n={n}, k={k})"))?;
    hyp(2 * k + 1 <= t && t < n, format!("2k+1 <= t <= n-1 (t={t})"))
}

fn check_ag_window(g: Geometry, k: usize, t: usize) -> Result<(), IdentityError> {
    if g.kind() != Kind::Affine {
        return Err(ClsetError::WrongKind(Kind::Affine).into());
    }
    let n = g.n();
    hyp(k == 1, "lines only (k = 1)")?;
    hyp(n >= 4, format!("n >= 4 (n={n})"))?;
    hyp((3..n).contains(&t), format!("3 <= t <= n-1 (t={t})"))
}

/// The projective gluing expression at k-subspace `kid`:
/// `chi(K) + (sum x_pi - G(n-k,t-k) chi(K)) / G(n-k-1,t-k-1)`.
fn pg_expression(l: &KSet, kid: u32, t: usize) -> Result<BigRational, IdentityError> {
    let g = l.geometry();
    let (n, k, t64, q) = (g.n() as u64, l.k() as u64, t as u64, g.q());
    let chi = rat(l.contains(kid) as u8);
    let sum = restriction_parameter_sum(l, kid, t)?;
    Ok(&chi + (sum - gauss_r(n - k, t64 - k, q) * &chi) / gauss_r(n - k - 1, t64 - k - 1, q))
}

/// The affine gluing expression at line `lid`:
/// `(q^{t-2}-1)/(q^{n-2}-1) * sum x_pi / G(n-3,t-3) - (q^{n-1}-1)/(q^{t-1}-1) chi + chi`.
fn ag_expression(l: &KSet, lid: u32, t: usize) -> Result<BigRational, IdentityError> {
    let g = l.geometry();
    let (n, t64, q) = (g.n() as u64, t as u64, g.q());
    let chi = rat(l.contains(lid) as u8);
    let sum = restriction_parameter_sum(l, lid, t)?;
    Ok(qratio(q, t64 - 2, n - 2) * sum / gauss_r(n - 3, t64 - 3, q) - qratio(q, n - 1, t64 - 1) * &chi + &chi)
}

/// Parameter of a projective Cameron-Liebler k-set recovered from the
/// parameters of its restrictions to the t-spaces through `kid`.
pub fn projective_parameter_from_restrictions(l: &KSet, kid: u32, t: usize) -> Result<BigRational, IdentityError> {
    check_pg_window(l.geometry(), l.k(), t)?;
    require_cl(l)?;
    pg_expression(l, kid, t)
}

/// Parameter of an affine Cameron-Liebler line class recovered from the
/// parameters of its restrictions to the t-flats through line `lid`.
pub fn affine_parameter_from_restrictions(l: &KSet, lid: u32, t: usize) -> Result<BigRational, IdentityError> {
    check_ag_window(l.geometry(), l.k(), t)?;
    require_cl(l)?;
    ag_expression(l, lid, t)
}

/// The recovered parameter at every k-subspace, in ID order; projective
/// or affine according to the geometry.
pub fn parameters_from_restrictions(l: &KSet, t: usize) -> Result<Vec<BigRational>, IdentityError> {
    let g = l.geometry();
    match g.kind() {
        Kind::Projective => check_pg_window(g, l.k(), t)?,
        Kind::Affine => check_ag_window(g, l.k(), t)?,
    }
    require_cl(l)?;
    let count = g.table(l.k())?.len() as u32;
    (0..count)
        .into_par_iter()
        .map(|id| match g.kind() {
            Kind::Projective => pg_expression(l, id, t),
            Kind::Affine => ag_expression(l, id, t),
        })
        .collect()
}

/// Admissible parameters `x = 0` or `x = 1 + C/denominator` (C a
/// non-negative integer) up to the largest possible parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Admissible {
    #[serde(serialize_with = "ser_int")]
    pub denominator: BigInt,
    #[serde(serialize_with = "ser_rat")]
    pub max: BigRational,
}

impl Admissible {
    pub fn admits(&self, x: &BigRational) -> bool {
        if x.is_zero() {
            return true;
        }
        if *x < BigRational::one() || *x > self.max {
            return false;
        }
        ((x - BigRational::one()) * rat(self.denominator.clone())).is_integer()
    }

    /// The admissible values in `[1, upto]`, ascending.
    pub fn values_upto(&self, upto: &BigRational) -> Vec<BigRational> {
        let mut out = Vec::new();
        let mut c = BigInt::zero();
        loop {
            let x = BigRational::one() + BigRational::new(c.clone(), self.denominator.clone());
            if x > *upto || x > self.max {
                return out;
            }
            out.push(x);
            c += 1;
        }
    }
}

/// Structure of non-zero parameters in PG(n,q) derived from the t-space
/// restrictions, for `(k+1) | (t+1)` and `2k+1 <= t <= n-1`.
pub fn admissible_parameters(n: u64, k: u64, q: u64, t: u64) -> Result<Admissible, IdentityError> {
    hyp((t + 1) % (k + 1) == 0, format!("k+1 must divide t+1 (k={k}, t={t})"))?;
    hyp(2 * k + 1 <= t && t < n, format!("2k+1 <= t <= n-1 (t={t}, n={n})"))?;
    Ok(Admissible {
        denominator: gauss_u(n - k - 1, t - k - 1, q),
        max: BigRational::new(qpow(q, n + 1) - 1, qpow(q, k + 1) - 1),
    })
}

/// Number of possible parameters of a Cameron-Liebler k-set of PG(n,q),
/// n >= 2k+2: `q^{k+1} (q^{n-k}-1)/(q^{k+1}-1) G(n-k-1,k) + 2`.
pub fn parameter_count(n: u64, k: u64, q: u64) -> Result<BigInt, IdentityError> {
    hyp(n >= 2 * k + 2, format!("n >= 2k+2 (n={n}, k={k})"))?;
    let v = rat(qpow(q, k + 1)) * qratio(q, n - k, k + 1) * gauss_r(n - k - 1, k, q) + rat(2);
    debug_assert!(v.is_integer());
    Ok(v.to_integer())
}

/// Result of evaluating a gluing expression over every k-subspace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GlueOutcome {
    /// The expression is the same everywhere; `confirmed` records whether
    /// the row-space check agrees that the set has this parameter.
    Constant {
        #[serde(serialize_with = "ser_rat")]
        value: BigRational,
        confirmed: bool,
    },
    /// Two k-subspaces with different values.
    NonConstant {
        first: u32,
        #[serde(serialize_with = "ser_rat")]
        first_value: BigRational,
        other: u32,
        #[serde(serialize_with = "ser_rat")]
        other_value: BigRational,
    },
    /// Affine only: the common value is not an integer.
    NotInteger {
        #[serde(serialize_with = "ser_rat")]
        value: BigRational,
    },
    /// Affine only: a direction carries a different number of lines.
    Infinity { direction: u32, found: u64 },
}

impl GlueOutcome {
    pub fn is_cl(&self) -> bool {
        matches!(self, GlueOutcome::Constant { confirmed: true, .. })
    }
}

/// Checks that every restriction to a t-subspace is a Cameron-Liebler set.
fn require_cl_restrictions(m: &KSet, t: usize) -> Result<(), IdentityError> {
    let g = m.geometry();
    let outer = g.table(t)?;
    let local = g.with_dimension(t)?;
    let c = g.containment(m.k(), t)?;
    let bad = (0..outer.len() as u32).into_par_iter().find_first(|&pi| {
        let ids = c.within(pi);
        let members = (0..ids.len() as u32).filter(|&i| m.contains(ids[i as usize]));
        let r = KSet::new(local, m.k(), members).expect("local IDs are valid");
        !verify_row_space(&r).expect("row space of the local geometry").passed
    });
    match bad {
        Some(id) => Err(IdentityError::RestrictionNotCl { id, dim: t }),
        None => Ok(()),
    }
}

fn constant_or_witness(values: Vec<BigRational>) -> Result<BigRational, GlueOutcome> {
    let first = values[0].clone();
    match values.iter().position(|v| *v != first) {
        None => Ok(first),
        Some(j) => Err(GlueOutcome::NonConstant {
            first: 0,
            first_value: first,
            other: j as u32,
            other_value: values[j].clone(),
        }),
    }
}

/// Decides whether a projective k-set whose restrictions to all t-spaces
/// are Cameron-Liebler sets is itself one, via the gluing expression.
pub fn glue_projective(m: &KSet, t: usize) -> Result<GlueOutcome, IdentityError> {
    let g = m.geometry();
    check_pg_window(g, m.k(), t)?;
    require_cl_restrictions(m, t)?;
    let count = g.table(m.k())?.len() as u32;
    let values = (0..count)
        .into_par_iter()
        .map(|kid| pg_expression(m, kid, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match constant_or_witness(values) {
        Err(w) => w,
        Ok(value) => {
            let confirmed = verify_row_space(m)?.passed && m.parameter() == value;
            GlueOutcome::Constant { value, confirmed }
        }
    })
}

/// Affine counterpart for line sets: the expression must be a constant
/// integer C and every direction must carry exactly C lines.
pub fn glue_affine(m: &KSet, t: usize) -> Result<GlueOutcome, IdentityError> {
    let g = m.geometry();
    check_ag_window(g, m.k(), t)?;
    require_cl_restrictions(m, t)?;
    let count = g.table(1)?.len() as u32;
    let values = (0..count)
        .into_par_iter()
        .map(|lid| ag_expression(m, lid, t))
        .collect::<Result<Vec<_>, _>>()?;
    let value = match constant_or_witness(values) {
        Err(w) => return Ok(w),
        Ok(v) => v,
    };
    if !value.is_integer() {
        return Ok(GlueOutcome::NotInteger { value });
    }
    let dirs = Geometry::new(Kind::Projective, g.n() - 1, g.field())?.table(0)?;
    let lines = g.table(1)?;
    let mut counts = vec![0u64; dirs.len()];
    for &l in m.members() {
        counts[dirs.id_of_coords(&lines.get(l).basis().data).unwrap() as usize] += 1;
    }
    if let Some(d) = counts.iter().position(|&c| rat(c) != value) {
        return Ok(GlueOutcome::Infinity { direction: d as u32, found: counts[d] });
    }
    let confirmed = verify_row_space(m)?.passed && m.parameter() == value;
    Ok(GlueOutcome::Constant { value, confirmed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn point_subspace_identity_on_pencil_by_hand() {
        let g = Geometry::projective(3, 2).unwrap();
        let pencil = KSet::pencil(g, 1, 0).unwrap();
        let planes = g.table(2).unwrap();
        let tau = (0..15).find(|&h| planes.points(h).contains(0)).unwrap();
        let rep = check_point_subspace_identity(&pencil, 0, planes.get(tau)).unwrap();
        // 7 + 3 = 3*3 + 1
        assert_eq!((rep.lhs.clone(), rep.rhs.clone()), (r(10, 1), r(10, 1)));
        let empty = KSet::empty(g, 1).unwrap();
        let rep = check_point_subspace_identity(&empty, 0, planes.get(tau)).unwrap();
        assert!(rep.passed && rep.lhs.is_zero());
        let other = (0..15).find(|&h| !planes.points(h).contains(0)).unwrap();
        assert_eq!(
            check_point_subspace_identity(&pencil, 0, planes.get(other)),
            Err(IdentityError::PointNotInSubspace)
        );
    }

    #[test]
    fn restriction_parameters_recover_x() {
        let g = Geometry::projective(5, 2).unwrap();
        let hs = KSet::hyperplane_set(g, 1, 0).unwrap();
        let inside = hs.members()[0];
        let outside = (0..651).find(|&i| !hs.contains(i)).unwrap();
        for kid in [inside, outside] {
            assert_eq!(projective_parameter_from_restrictions(&hs, kid, 3).unwrap(), r(5, 1));
        }
        let pencil = KSet::pencil(g, 1, 0).unwrap();
        assert_eq!(projective_parameter_from_restrictions(&pencil, pencil.members()[3], 4).unwrap(), r(1, 1));
        let a = Geometry::affine(4, 2).unwrap();
        let ap = KSet::pencil(a, 1, 0).unwrap();
        let out = (0..120).find(|&i| !ap.contains(i)).unwrap();
        for lid in [ap.members()[0], out] {
            assert_eq!(affine_parameter_from_restrictions(&ap, lid, 3).unwrap(), r(1, 1));
        }
        let comp = ap.complement();
        assert_eq!(affine_parameter_from_restrictions(&comp, out, 3).unwrap(), r(7, 1));
        let all = parameters_from_restrictions(&comp, 3).unwrap();
        assert!(all.len() == 120 && all.iter().all(|v| *v == r(7, 1)));
        let single = KSet::new(g, 1, [0]).unwrap();
        assert!(matches!(projective_parameter_from_restrictions(&single, 0, 3), Err(IdentityError::NotCl(_))));
        assert!(matches!(projective_parameter_from_restrictions(&hs, 0, 2), Err(IdentityError::Hypothesis(_))));
    }

    #[test]
    fn admissible_parameters_example() {
        let a = admissible_parameters(4, 1, 2, 3).unwrap();
        assert_eq!(a.denominator, BigInt::from(3));
        assert!(a.admits(&r(4, 3)) && a.admits(&r(1, 1)) && a.admits(&r(0, 1)));
        assert!(!a.admits(&r(1, 2)) && !a.admits(&r(5, 4)));
        assert_eq!(a.values_upto(&r(2, 1)), vec![r(1, 1), r(4, 3), r(5, 3), r(2, 1)]);
        assert!(admissible_parameters(4, 1, 2, 2).is_err());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_count(4, 1, 2).unwrap(), BigInt::from(30));
        assert_eq!(parameter_count(5, 1, 2).unwrap(), BigInt::from(142));
        assert!(parameter_count(3, 1, 2).is_err());
    }

    #[test]
    fn gluing_examples() {
        let g = Geometry::projective(5, 2).unwrap();
        let pencil = KSet::pencil(g, 1, 7).unwrap();
        assert_eq!(glue_projective(&pencil, 3).unwrap(), GlueOutcome::Constant { value: r(1, 1), confirmed: true });
        let hs = KSet::hyperplane_set(g, 1, 5).unwrap();
        assert_eq!(glue_projective(&hs, 3).unwrap(), GlueOutcome::Constant { value: r(5, 1), confirmed: true });
        let single = KSet::new(g, 1, [0]).unwrap();
        assert!(matches!(glue_projective(&single, 3), Err(IdentityError::RestrictionNotCl { .. })));

        let a = Geometry::affine(4, 2).unwrap();
        let ap = KSet::pencil(a, 1, 3).unwrap();
        assert_eq!(glue_affine(&ap, 3).unwrap(), GlueOutcome::Constant { value: r(1, 1), confirmed: true });
        let empty = KSet::empty(a, 1).unwrap();
        assert_eq!(glue_affine(&empty, 3).unwrap(), GlueOutcome::Constant { value: r(0, 1), confirmed: true });

        let two = ap.union_with(&KSet::pencil(a, 1, 9).unwrap()).unwrap();
        let cl = crate::clset::verify_row_space(&two).unwrap().passed;
        match glue_affine(&two, 3) {
            Ok(outcome) => assert_eq!(outcome.is_cl(), cl),
            Err(IdentityError::RestrictionNotCl { .. }) => assert!(!cl),
            Err(e) => panic!("{e}"),
        }
    }
}
