//! The four equivalent characterizations, each as an instance-level check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClsetError, KSet};
use crate::gauss::{gauss_r, qpow, qratio};
use crate::geometry::{Geometry, Kind};
use crate::incidence::row_space;
use crate::spreads::{self, SpreadError, SpreadList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Definition {
    /// Characteristic vector in the row space of the incidence matrix.
    #[serde(rename = "row_space")]
    RowSpace,
    /// Number of members disjoint from each k-space.
    #[serde(rename = "disjoint")]
    Disjoint,
    /// Number of members meeting each k-space in each dimension.
    #[serde(rename = "meets")]
    Meets,
    /// Constant intersection with every spread.
    #[serde(rename = "spreads")]
    Spreads,
}

impl Definition {
    pub fn name(self) -> &'static str {
        match self {
            Definition::RowSpace => "row_space",
            Definition::Disjoint => "disjoint",
            Definition::Meets => "meets",
            Definition::Spreads => "spreads",
        }
    }
}

/// A counterexample to one definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Coordinate of the characteristic vector not forced by the pivots.
    Column { id: u32 },
    /// A k-space at which a count differs; `i` is the codimension of the
    /// meet for the intersection counts.
    Count { id: u32, i: Option<usize>, expected: String, found: u64 },
    /// A direction (point of the hyperplane at infinity, as a point ID of
    /// PG(n-1,q)) carrying the wrong number of members.
    Direction { id: u32, expected: String, found: u64 },
    /// Index into the supplied spread list.
    Spread { index: usize, expected: String, found: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub definition: Definition,
    pub passed: bool,
    pub witness: Option<Witness>,
    /// Every violation, filled only when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<Witness>,
    /// For spread checks: whether the spread list was complete.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exhaustive: Option<bool>,
}

impl VerifierReport {
    fn from_witnesses(definition: Definition, mut found: Vec<Witness>, all: bool) -> VerifierReport {
        let witness = found.first().cloned();
        if !all {
            found.clear();
        }
        VerifierReport { definition, passed: witness.is_none(), witness, violations: found, exhaustive: None }
    }
}

/// Runs the checks; per-k-space loops are parallel and the reported
/// witness is always the one with the smallest ID.
#[derive(Debug, Clone, Copy, Default)]
pub struct Verifier {
    all_violations: bool,
}

fn rat(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn first_or_all<T: Send>(items: impl IndexedParallelIterator<Item = Option<T>>, all: bool) -> Vec<T> {
    if all {
        items.flatten().collect()
    } else {
        items.find_first(|o| o.is_some()).flatten().into_iter().collect()
    }
}

fn check_pg_range(l: &KSet) -> Result<(), ClsetError> {
    let (n, k) = (l.geometry.n(), l.k);
    if n < 2 * k + 1 {
        return Err(ClsetError::NotApplicable(format!("counting characterizations need n >= 2k+1 (n={n}, k={k})")));
    }
    Ok(())
}

impl Verifier {
    pub fn new() -> Verifier {
        Verifier::default()
    }

    /// Collect every violation instead of the first one only.
    pub fn all_violations(mut self, yes: bool) -> Verifier {
        self.all_violations = yes;
        self
    }

    /// Row-space membership.
    pub fn row_space(&self, l: &KSet) -> Result<VerifierReport, ClsetError> {
        let rs = row_space(l.geometry, l.k)?;
        let chi = l.characteristic();
        let found: Vec<Witness> = if self.all_violations {
            rs.violations_01(&chi)?.into_iter().map(|c| Witness::Column { id: c as u32 }).collect()
        } else {
            rs.contains_01(&chi)?.err().map(|c| Witness::Column { id: c as u32 }).into_iter().collect()
        };
        Ok(VerifierReport::from_witnesses(Definition::RowSpace, found, self.all_violations))
    }

    /// Disjointness counts: projective for n >= 2k+1, affine for lines.
    pub fn disjoint(&self, l: &KSet) -> Result<VerifierReport, ClsetError> {
        let g = l.geometry;
        let (n, k, q) = (g.n() as u64, l.k as u64, g.q());
        let coef = match g.kind() {
            Kind::Projective => {
                check_pg_range(l)?;
                gauss_r(n - k - 1, k, q) * BigRational::from_integer(qpow(q, k * k + k))
            }
            Kind::Affine => {
                if k != 1 {
                    return Err(ClsetError::NotApplicable(
                        "the affine disjointness count is only known for lines".into(),
                    ));
                }
                rat(q * q) * qratio(q, n - 2, 1) + BigRational::one()
            }
        };
        let x = l.parameter();
        let table = g.table(l.k)?;
        let expected = [&x * &coef, (&x - BigRational::one()) * &coef];
        let counts = (0..table.len() as u32).into_par_iter().map(|kid| {
            let kp = table.points(kid);
            let found = l.members.iter().filter(|&&m| table.points(m).common(kp) == 0).count() as u64;
            let e = &expected[l.contains(kid) as usize];
            (rat(found) != *e).then(|| Witness::Count { id: kid, i: None, expected: e.to_string(), found })
        });
        let mut found = first_or_all(counts, self.all_violations);
        if g.kind() == Kind::Affine && (self.all_violations || found.is_empty()) {
            found.extend(self.directions(l, &x)?);
        }
        Ok(VerifierReport::from_witnesses(Definition::Disjoint, found, self.all_violations))
    }

    /// Through every point at infinity pass exactly `x` members.
    fn directions(&self, l: &KSet, x: &BigRational) -> Result<Vec<Witness>, ClsetError> {
        let g = l.geometry;
        let dirs = Geometry::new(Kind::Projective, g.n() - 1, g.field())?.table(0)?;
        let table = g.table(1)?;
        let mut counts = vec![0u64; dirs.len()];
        for &m in &l.members {
            let d = dirs.id_of_coords(&table.get(m).basis().data).expect("direction is a point");
            counts[d as usize] += 1;
        }
        let mut out = Vec::new();
        for (d, &c) in counts.iter().enumerate() {
            if rat(c) != *x {
                out.push(Witness::Direction { id: d as u32, expected: x.to_string(), found: c });
                if !self.all_violations {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Counts of members meeting each k-space in a (k-i)-space,
    /// i = 1..=k+1 (projective, n >= 2k+1).
    pub fn meets(&self, l: &KSet) -> Result<VerifierReport, ClsetError> {
        let g = l.geometry;
        if g.kind() != Kind::Projective {
            return Err(ClsetError::NotApplicable("intersection counts are stated for projective spaces".into()));
        }
        check_pg_range(l)?;
        let (n, k, q) = (g.n() as u64, l.k as u64, g.q());
        let x = l.parameter();
        let one = BigRational::one();
        // expected[member][i]: member = 1 for K in L.
        let mut expected = [vec![BigRational::zero(); k as usize + 2], vec![BigRational::zero(); k as usize + 2]];
        for i in 1..=k + 1 {
            let tail = BigRational::from_integer(qpow(q, i * (i - 1))) * gauss_r(n - k - 1, i - 1, q);
            expected[0][i as usize] = &x * &tail * gauss_r(k + 1, i, q);
            let head = (&x - &one) * gauss_r(k + 1, i, q)
                + BigRational::from_integer(qpow(q, i)) * qratio(q, n - k, i) * gauss_r(k, i, q);
            expected[1][i as usize] = head * tail;
        }
        // Meet dimension from the number of common points.
        let mut dim_of = vec![None; g.points_per_subspace(l.k) + 1];
        dim_of[0] = Some(-1i64);
        for d in 0..=l.k {
            dim_of[g.points_per_subspace(d)] = Some(d as i64);
        }
        let table = g.table(l.k)?;
        let per_k = (0..table.len() as u32).into_par_iter().map(|kid| {
            let kp = table.points(kid);
            let mut hist = vec![0u64; l.k + 2];
            for &m in &l.members {
                let d = dim_of[table.points(m).common(kp) as usize].expect("meet of subspaces is a subspace");
                let i = k as i64 - d;
                if i >= 1 {
                    hist[i as usize] += 1;
                }
            }
            let e = &expected[l.contains(kid) as usize];
            (1..=l.k + 1)
                .find(|&i| rat(hist[i]) != e[i])
                .map(|i| Witness::Count { id: kid, i: Some(i), expected: e[i].to_string(), found: hist[i] })
        });
        let found = first_or_all(per_k, self.all_violations);
        Ok(VerifierReport::from_witnesses(Definition::Meets, found, self.all_violations))
    }

    /// Intersection with each supplied spread equals the parameter.
    pub fn spreads(&self, l: &KSet, list: &SpreadList) -> Result<VerifierReport, ClsetError> {
        let g = l.geometry;
        if !spreads::has_spreads(g, l.k) {
            return Err(SpreadError::NoSpreads { n: g.n(), k: l.k }.into());
        }
        if list.spreads.iter().any(|s| s.geometry() != g || s.k() != l.k) {
            return Err(ClsetError::Mixed);
        }
        let x = l.parameter();
        let mut found = Vec::new();
        for (index, s) in list.spreads.iter().enumerate() {
            let c = s.meet_count(&l.members) as u64;
            if rat(c) != x {
                found.push(Witness::Spread { index, expected: x.to_string(), found: c });
                if !self.all_violations {
                    break;
                }
            }
        }
        let mut report = VerifierReport::from_witnesses(Definition::Spreads, found, self.all_violations);
        report.exhaustive = Some(list.exhaustive);
        Ok(report)
    }

    /// Every characterization that applies to the geometry, with the spreads
    /// from [`default_spreads`].
    pub fn all(&self, l: &KSet, seed: u64) -> Result<Vec<VerifierReport>, ClsetError> {
        let g = l.geometry;
        let mut out = vec![self.row_space(l)?];
        let pg_counts = g.kind() == Kind::Projective && g.n() >= 2 * l.k + 1;
        if pg_counts || (g.kind() == Kind::Affine && l.k == 1) {
            out.push(self.disjoint(l)?);
        }
        if pg_counts {
            out.push(self.meets(l)?);
        }
        if spreads::has_spreads(g, l.k) {
            out.push(self.spreads(l, &default_spreads(g, l.k, seed)?)?);
        }
        Ok(out)
    }
}

/// All spreads when there are few k-subspaces (at most 40), otherwise the
/// constructed spreads (Desarguesian or all parallel classes) plus 64
/// sampled ones.
pub fn default_spreads(g: Geometry, k: usize, seed: u64) -> Result<SpreadList, ClsetError> {
    if g.table(k)?.len() <= 40 {
        return Ok(spreads::enumerate_spreads(g, k, usize::MAX)?);
    }
    let mut list = match g.kind() {
        Kind::Projective => vec![spreads::desarguesian_spread(g, k)?],
        Kind::Affine => spreads::all_parallel_spreads(g, k)?,
    };
    list.extend(spreads::sample_spreads(g, k, 64, seed)?);
    Ok(SpreadList { spreads: list, exhaustive: false })
}

pub fn verify_row_space(l: &KSet) -> Result<VerifierReport, ClsetError> {
    Verifier::new().row_space(l)
}

pub fn verify_disjoint(l: &KSet) -> Result<VerifierReport, ClsetError> {
    Verifier::new().disjoint(l)
}

pub fn verify_meets(l: &KSet) -> Result<VerifierReport, ClsetError> {
    Verifier::new().meets(l)
}

pub fn verify_spreads(l: &KSet, list: &SpreadList) -> Result<VerifierReport, ClsetError> {
    Verifier::new().spreads(l, list)
}

pub fn verify_all(l: &KSet, seed: u64) -> Result<Vec<VerifierReport>, ClsetError> {
    Verifier::new().all(l, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clset::trivial_examples;
    use crate::spreads::enumerate_spreads;

    #[test]
    fn trivial_examples_pass_everything() {
        for g in [Geometry::projective(3, 2).unwrap(), Geometry::affine(3, 2).unwrap()] {
            let spreads = enumerate_spreads(g, 1, usize::MAX).unwrap();
            for (t, s) in trivial_examples(g, 1).unwrap() {
                assert!(verify_row_space(&s).unwrap().passed, "{t:?}");
                assert!(verify_disjoint(&s).unwrap().passed, "{t:?}");
                if g.is_projective() {
                    let r = verify_meets(&s).unwrap();
                    assert!(r.passed, "{t:?} {r:?}");
                }
                assert!(verify_spreads(&s, &spreads).unwrap().passed, "{t:?}");
            }
        }
    }

    #[test]
    fn single_line_fails_everything() {
        let g = Geometry::projective(3, 2).unwrap();
        let l = KSet::new(g, 1, [0]).unwrap();
        let spreads = enumerate_spreads(g, 1, usize::MAX).unwrap();
        for r in [
            verify_row_space(&l).unwrap(),
            verify_disjoint(&l).unwrap(),
            verify_meets(&l).unwrap(),
            verify_spreads(&l, &spreads).unwrap(),
        ] {
            assert!(!r.passed);
            assert!(r.witness.is_some());
        }
        let all = Verifier::new().all_violations(true).disjoint(&l).unwrap();
        assert!(all.violations.len() > 1);
        assert_eq!(all.violations[0], all.witness.unwrap());
    }

    #[test]
    fn pencil_counts_by_brute_force() {
        let g = Geometry::projective(3, 2).unwrap();
        let lines = g.table(1).unwrap();
        let p = 0;
        let pencil = KSet::pencil(g, 1, p).unwrap();
        for kid in 0..35u32 {
            if pencil.contains(kid) {
                continue;
            }
            let kp = lines.points(kid);
            let disjoint = pencil.members().iter().filter(|&&m| lines.points(m).common(kp) == 0).count();
            let meeting = pencil.members().iter().filter(|&&m| lines.points(m).common(kp) == 1).count();
            assert_eq!((disjoint, meeting), (4, 3));
        }
        let a = Geometry::affine(3, 2).unwrap();
        let alines = a.table(1).unwrap();
        let ap = KSet::pencil(a, 1, 0).unwrap();
        for kid in 0..28u32 {
            let kp = alines.points(kid);
            let disjoint = ap.members().iter().filter(|&&m| alines.points(m).common(kp) == 0).count();
            assert_eq!(disjoint, if ap.contains(kid) { 0 } else { 5 });
        }
    }

    #[test]
    fn plane_pencil_in_pg52() {
        let g = Geometry::projective(5, 2).unwrap();
        let pencil = KSet::pencil(g, 2, 3).unwrap();
        assert_eq!(pencil.len(), 155);
        assert!(verify_meets(&pencil).unwrap().passed);
        assert!(verify_disjoint(&pencil).unwrap().passed);
        let mut broken = pencil.members().to_vec();
        broken.pop();
        let broken = KSet::new(g, 2, broken).unwrap();
        assert!(!verify_meets(&broken).unwrap().passed);
        assert!(!verify_row_space(&broken).unwrap().passed);
    }

    #[test]
    fn affine_planes_use_row_space_and_spreads() {
        let g = Geometry::affine(3, 2).unwrap();
        let s = KSet::pencil(g, 2, 0).unwrap();
        assert!(matches!(verify_disjoint(&s), Err(ClsetError::NotApplicable(_))));
        let reports = verify_all(&s, 1).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.passed));
    }

    #[test]
    fn no_spreads_is_an_error() {
        let g = Geometry::projective(4, 2).unwrap();
        let s = KSet::pencil(g, 1, 0).unwrap();
        let list = SpreadList { spreads: vec![], exhaustive: true };
        assert!(matches!(verify_spreads(&s, &list), Err(ClsetError::Spread(SpreadError::NoSpreads { .. }))));
    }
}
