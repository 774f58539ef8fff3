//! Sets of k-subspaces, their parameter, the trivial examples, restriction
//! to subspaces and transfer between AG(n,q) and its projective closure.

mod verify;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use verify::{
    default_spreads, verify_all, verify_row_space, verify_disjoint, verify_meets, verify_spreads, Definition, Verifier, VerifierReport, Witness,
};

use crate::gauss::{gauss_u, qpow};
use crate::geometry::{ClosureMap, Geometry, GeometryError, Kind, Subspace};
use crate::incidence::IncidenceError;
use crate::spreads::SpreadError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClsetError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error(transparent)]
    Spread(#[from] SpreadError),
    #[error("k = {k} must be below the ambient dimension {n}")]
    BadK { k: usize, n: usize },
    #[error("subspace ID {id} out of range ({count} {k}-subspaces)")]
    BadId { id: u32, count: usize, k: usize },
    #[error("subspace ID {0} listed twice")]
    Duplicate(u32),
    #[error("subspace has dimension {got}, expected {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("point lies in the hyperplane")]
    PointInHyperplane,
    #[error("hyperplane sets are not Cameron-Liebler sets of an affine space")]
    HyperplaneInAffine,
    #[error("restriction needs a subspace of dimension at least {need}, got {got}")]
    TooSmall { need: usize, got: usize },
    #[error("member {0} lies in the hyperplane at infinity")]
    MemberAtInfinity(u32),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("operation needs an {0} geometry")]
    WrongKind(Kind),
    #[error("k-sets live in different geometries")]
    Mixed,
}

/// A duplicate-free set of k-subspaces of one geometry, by subspace ID.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSet {
    geometry: Geometry,
    k: usize,
    members: Vec<u32>,
}

impl fmt::Debug for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KSet({} k={} {:?})", self.geometry, self.k, self.members)
    }
}

fn check_k(g: Geometry, k: usize) -> Result<(), ClsetError> {
    if k >= g.n() {
        return Err(ClsetError::BadK { k, n: g.n() });
    }
    Ok(())
}

impl KSet {
    /// Rejects out-of-range and repeated IDs.
    pub fn new(g: Geometry, k: usize, members: impl IntoIterator<Item = u32>) -> Result<KSet, ClsetError> {
        check_k(g, k)?;
        let count = g.table(k)?.len();
        let mut members: Vec<u32> = members.into_iter().collect();
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(ClsetError::Duplicate(w[0]));
            }
        }
        if let Some(&id) = members.last() {
            if id as usize >= count {
                return Err(ClsetError::BadId { id, count, k });
            }
        }
        Ok(KSet { geometry: g, k, members })
    }

    pub(crate) fn from_sorted(g: Geometry, k: usize, members: Vec<u32>) -> KSet {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        KSet { geometry: g, k, members }
    }

    pub fn from_subspaces(g: Geometry, k: usize, subspaces: &[Subspace]) -> Result<KSet, ClsetError> {
        check_k(g, k)?;
        let table = g.table(k)?;
        let mut ids = Vec::with_capacity(subspaces.len());
        for s in subspaces {
            g.check_same(&s.geometry())?;
            if s.dim() != k {
                return Err(ClsetError::WrongDimension { expected: k, got: s.dim() });
            }
            ids.push(table.id_of(s).unwrap());
        }
        KSet::new(g, k, ids)
    }

    pub fn from_characteristic(g: Geometry, k: usize, chi: &[bool]) -> Result<KSet, ClsetError> {
        check_k(g, k)?;
        let count = g.table(k)?.len();
        if chi.len() != count {
            return Err(IncidenceError::Length { expected: count, got: chi.len() }.into());
        }
        Ok(KSet::from_sorted(g, k, (0..count as u32).filter(|&i| chi[i as usize]).collect()))
    }

    pub fn empty(g: Geometry, k: usize) -> Result<KSet, ClsetError> {
        KSet::new(g, k, [])
    }

    /// All k-subspaces through the point with ID `p`.
    pub fn pencil(g: Geometry, k: usize, p: u32) -> Result<KSet, ClsetError> {
        check_k(g, k)?;
        check_id(g, 0, p)?;
        Ok(KSet::from_sorted(g, k, g.containment(0, k)?.containing(p).to_vec()))
    }

    /// All k-subspaces inside the hyperplane with ID `h` (projective only).
    pub fn hyperplane_set(g: Geometry, k: usize, h: u32) -> Result<KSet, ClsetError> {
        if g.kind() == Kind::Affine {
            return Err(ClsetError::HyperplaneInAffine);
        }
        check_k(g, k)?;
        check_id(g, g.n() - 1, h)?;
        let mut members = g.containment(k, g.n() - 1)?.within(h).to_vec();
        members.sort_unstable();
        Ok(KSet::from_sorted(g, k, members))
    }

    /// Pencil through `p` together with the k-subspaces of `h`, `p` not in `h`.
    pub fn union(g: Geometry, k: usize, p: u32, h: u32) -> Result<KSet, ClsetError> {
        let hs = KSet::hyperplane_set(g, k, h)?;
        check_id(g, 0, p)?;
        if g.table(g.n() - 1)?.points(h).contains(p) {
            return Err(ClsetError::PointInHyperplane);
        }
        let ps = KSet::pencil(g, k, p)?;
        ps.union_with(&hs)
    }

    pub fn trivial(g: Geometry, k: usize, t: &Trivial) -> Result<KSet, ClsetError> {
        match t {
            Trivial::Empty => KSet::empty(g, k),
            Trivial::Pencil(p) => KSet::pencil(g, k, *p),
            Trivial::Hyperplane(h) => KSet::hyperplane_set(g, k, *h),
            Trivial::Union(p, h) => KSet::union(g, k, *p, *h),
            Trivial::Complement(inner) => Ok(KSet::trivial(g, k, inner)?.complement()),
        }
    }

    /// Set union, duplicates merged.
    pub fn union_with(&self, other: &KSet) -> Result<KSet, ClsetError> {
        if self.geometry != other.geometry || self.k != other.k {
            return Err(ClsetError::Mixed);
        }
        let mut m: Vec<u32> = self.members.iter().chain(&other.members).copied().collect();
        m.sort_unstable();
        m.dedup();
        Ok(KSet::from_sorted(self.geometry, self.k, m))
    }

    pub fn complement(&self) -> KSet {
        let count = self.geometry.table(self.k).unwrap().len() as u32;
        let members = (0..count).filter(|i| self.members.binary_search(i).is_err()).collect();
        KSet::from_sorted(self.geometry, self.k, members)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn characteristic(&self) -> Vec<bool> {
        let mut chi = vec![false; self.geometry.table(self.k).unwrap().len()];
        for &m in &self.members {
            chi[m as usize] = true;
        }
        chi
    }

    pub fn subspaces(&self) -> Vec<Subspace> {
        let table = self.geometry.table(self.k).unwrap();
        self.members.iter().map(|&m| table.get(m).clone()).collect()
    }

    /// `|L| / gauss(n,k,q)`, exactly.
    pub fn parameter(&self) -> BigRational {
        BigRational::new(BigInt::from(self.members.len()), pencil_size(self.geometry, self.k))
    }

    /// Largest possible parameter: that of the set of all k-subspaces.
    pub fn max_parameter(g: Geometry, k: usize) -> BigRational {
        let (n, q) = (g.n() as u64, g.q());
        match g.kind() {
            Kind::Projective => BigRational::new(qpow(q, n + 1) - 1, qpow(q, k as u64 + 1) - 1),
            Kind::Affine => BigRational::from_integer(qpow(q, n - k as u64)),
        }
    }

    /// The point `p` if this is the pencil through `p`.
    pub fn as_pencil(&self) -> Option<u32> {
        if BigInt::from(self.members.len()) != pencil_size(self.geometry, self.k) || self.members.is_empty() {
            return None;
        }
        let table = self.geometry.table(self.k).unwrap();
        let mut common = table.points(self.members[0]).clone();
        for &m in &self.members[1..] {
            common.intersect_with(table.points(m));
        }
        let p = common.iter().next()?;
        Some(p)
    }

    /// The hyperplane `h` if this is the set of k-subspaces inside `h`.
    pub fn as_hyperplane_set(&self) -> Option<u32> {
        let g = self.geometry;
        if g.kind() != Kind::Projective || self.members.is_empty() {
            return None;
        }
        let n = g.n() as u64;
        if BigInt::from(self.members.len()) != gauss_u(n, self.k as u64 + 1, g.q()) {
            return None;
        }
        let subs = self.subspaces();
        let mut span = subs[0].clone();
        for s in &subs[1..] {
            span = g.span(&span, s).ok()?;
            if span.dim() >= g.n() {
                return None;
            }
        }
        if span.dim() + 1 != g.n() {
            return None;
        }
        g.id_of(&span).ok()
    }

    /// Members contained in `pi`, as ambient IDs.
    pub fn inside(&self, pi: &Subspace) -> Result<Vec<u32>, ClsetError> {
        let mut ids = self.geometry.within(pi, self.k)?;
        ids.retain(|id| self.contains(*id));
        ids.sort_unstable();
        Ok(ids)
    }

    /// Members contained in `pi`, re-indexed as a k-set of the local
    /// geometry of `pi` (see [`Geometry::within`]).
    pub fn restrict(&self, pi: &Subspace) -> Result<KSet, ClsetError> {
        let g = self.geometry;
        g.check_same(&pi.geometry())?;
        if pi.dim() < self.k + 1 {
            return Err(ClsetError::TooSmall { need: self.k + 1, got: pi.dim() });
        }
        let local = g.local_geometry(pi)?;
        let ids = g.within(pi, self.k)?;
        let members = (0..ids.len() as u32).filter(|&i| self.contains(ids[i as usize])).collect();
        Ok(KSet::from_sorted(local, self.k, members))
    }

    /// Projective closure of an affine k-set.
    pub fn to_projective(&self) -> Result<KSet, ClsetError> {
        let map = ClosureMap::new(self.geometry)?;
        let table = map.projective().table(self.k)?;
        let ids = self
            .subspaces()
            .iter()
            .map(|s| Ok(table.id_of(&map.to_projective(s)?).unwrap()))
            .collect::<Result<Vec<_>, ClsetError>>()?;
        KSet::new(map.projective(), self.k, ids)
    }

    /// Affine part of a projective k-set none of whose members lies in the
    /// hyperplane `h`, which becomes the hyperplane at infinity.
    pub fn to_affine(&self, h: &Subspace) -> Result<KSet, ClsetError> {
        let g = self.geometry;
        if g.kind() != Kind::Projective {
            return Err(ClsetError::WrongKind(Kind::Projective));
        }
        g.check_same(&h.geometry())?;
        let map = ClosureMap::with_infinity(h)?;
        let table = map.affine().table(self.k)?;
        let src = g.table(self.k)?;
        let mut ids = Vec::with_capacity(self.members.len());
        for &m in &self.members {
            match map.to_affine(src.get(m)) {
                Ok(a) => ids.push(table.id_of(&a).unwrap()),
                Err(GeometryError::AtInfinity) => return Err(ClsetError::MemberAtInfinity(m)),
                Err(e) => return Err(e.into()),
            }
        }
        KSet::new(map.affine(), self.k, ids)
    }
}

fn check_id(g: Geometry, dim: usize, id: u32) -> Result<(), ClsetError> {
    let count = g.table(dim)?.len();
    if id as usize >= count {
        return Err(ClsetError::BadId { id, count, k: dim });
    }
    Ok(())
}

/// Number of k-subspaces through a point: `gauss(n,k,q)` in both kinds.
pub fn pencil_size(g: Geometry, k: usize) -> BigInt {
    gauss_u(g.n() as u64, k as u64, g.q())
}

/// The trivial Cameron-Liebler sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trivial {
    Empty,
    Pencil(u32),
    Hyperplane(u32),
    Union(u32, u32),
    Complement(Box<Trivial>),
}

impl Trivial {
    /// Parameter predicted by the closed forms, without building the set.
    pub fn expected_parameter(&self, g: Geometry, k: usize) -> BigRational {
        let (n, q) = (g.n() as u64, g.q());
        let hyper = || BigRational::new(qpow(q, n - k as u64) - 1, qpow(q, k as u64 + 1) - 1);
        match self {
            Trivial::Empty => BigRational::from_integer(0.into()),
            Trivial::Pencil(_) => BigRational::from_integer(1.into()),
            Trivial::Hyperplane(_) => hyper(),
            Trivial::Union(..) => hyper() + BigRational::from_integer(1.into()),
            Trivial::Complement(t) => KSet::max_parameter(g, k) - t.expected_parameter(g, k),
        }
    }
}

/// Every trivial example of the geometry with its construction, complements
/// included, in a fixed order. Affine spaces have no hyperplane sets.
pub fn trivial_examples(g: Geometry, k: usize) -> Result<Vec<(Trivial, KSet)>, ClsetError> {
    check_k(g, k)?;
    let npoints = g.point_count() as u32;
    let mut base = vec![Trivial::Empty];
    base.extend((0..npoints).map(Trivial::Pencil));
    if g.kind() == Kind::Projective {
        let hyper = g.table(g.n() - 1)?;
        base.extend((0..hyper.len() as u32).map(Trivial::Hyperplane));
        for h in 0..hyper.len() as u32 {
            for p in 0..npoints {
                if !hyper.points(h).contains(p) {
                    base.push(Trivial::Union(p, h));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(2 * base.len());
    for t in base {
        let set = KSet::trivial(g, k, &t)?;
        let comp = set.complement();
        out.push((t.clone(), set));
        out.push((Trivial::Complement(Box::new(t)), comp));
    }
    Ok(out)
}
