//! Finite projective and affine spaces, their subspaces in canonical form,
//! and the incidence operations between them.
//!
//! A projective k-space of PG(n,q) is stored as the reduced row-echelon basis
//! of its (k+1)-dimensional vector space in GF(q)^{n+1}. An affine k-flat of
//! AG(n,q) is stored as the reduced row-echelon basis of its direction space
//! together with the unique coset representative that vanishes on the
//! direction pivots. Both encodings are canonical, so equality of point sets
//! is equality of encodings.
//!
//! Homogeneous coordinates put the extra coordinate first: the affine point
//! `x` becomes the projective point `(1 : x)` and the hyperplane at infinity
//! is `x_0 = 0`.

mod echelon;
mod table;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use echelon::{normalize, reduce, FqMatrix};
pub use table::{ClosureMap, Containment, PointSet, SubspaceTable};

use crate::field::{Elem, Field, FieldError};
use crate::gauss::{gauss_u, qpow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "pg")]
    Projective,
    #[serde(rename = "ag")]
    Affine,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Projective => "PG",
            Kind::Affine => "AG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("ambient dimension must be at least 1 (got {0})")]
    BadDimension(usize),
    #[error("subspace dimension {k} out of range for {geometry}")]
    DimensionOutOfRange { k: i64, geometry: Geometry },
    #[error("operands live in different geometries ({0} and {1})")]
    Mixed(Geometry, Geometry),
    #[error("vector of length {got} where {expected} was expected")]
    WrongLength { expected: usize, got: usize },
    #[error("field label {0} out of range")]
    BadLabel(Elem),
    #[error("the given rows span nothing")]
    ZeroSpan,
    #[error("expected a point, got a {0}-dimensional subspace")]
    NotAPoint(usize),
    #[error("subspace lies in the hyperplane at infinity")]
    AtInfinity,
    #[error("operation needs an {0} geometry")]
    WrongKind(Kind),
    #[error("subspace of dimension {inner} does not fit in one of dimension {outer}")]
    NotContained { inner: usize, outer: usize },
}

/// PG(n,q) or AG(n,q).
#[derive(Clone, Copy)]
pub struct Geometry {
    kind: Kind,
    n: usize,
    field: &'static Field,
}

impl Geometry {
    pub fn new(kind: Kind, n: usize, field: &'static Field) -> Result<Geometry, GeometryError> {
        if n == 0 {
            return Err(GeometryError::BadDimension(n));
        }
        Ok(Geometry { kind, n, field })
    }

    pub fn projective(n: usize, q: u64) -> Result<Geometry, GeometryError> {
        Geometry::new(Kind::Projective, n, Field::of_order(q)?)
    }

    pub fn affine(n: usize, q: u64) -> Result<Geometry, GeometryError> {
        Geometry::new(Kind::Affine, n, Field::of_order(q)?)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &'static Field {
        self.field
    }

    pub fn q(&self) -> u64 {
        self.field.order() as u64
    }

    pub fn is_projective(&self) -> bool {
        self.kind == Kind::Projective
    }

    /// The same kind of space with a different dimension over the same field.
    pub fn with_dimension(&self, n: usize) -> Result<Geometry, GeometryError> {
        Geometry::new(self.kind, n, self.field)
    }

    /// Length of coordinate vectors of points.
    pub fn vector_len(&self) -> usize {
        match self.kind {
            Kind::Projective => self.n + 1,
            Kind::Affine => self.n,
        }
    }

    pub fn point_count(&self) -> usize {
        let q = self.q() as usize;
        match self.kind {
            Kind::Projective => (q.pow(self.n as u32 + 1) - 1) / (q - 1),
            Kind::Affine => q.pow(self.n as u32),
        }
    }

    /// Number of k-dimensional subspaces (projective) or flats (affine).
    pub fn subspace_count(&self, k: usize) -> BigInt {
        let (n, q) = (self.n as u64, self.q());
        match self.kind {
            Kind::Projective => gauss_u(n + 1, k as u64 + 1, q),
            Kind::Affine if k as u64 > n => BigInt::from(0),
            Kind::Affine => qpow(q, n - k as u64) * gauss_u(n, k as u64, q),
        }
    }

    /// Number of points on a k-subspace.
    pub fn points_per_subspace(&self, k: usize) -> usize {
        let q = self.q() as usize;
        match self.kind {
            Kind::Projective => (q.pow(k as u32 + 1) - 1) / (q - 1),
            Kind::Affine => q.pow(k as u32),
        }
    }

    pub(crate) fn check_dim(&self, k: usize) -> Result<(), GeometryError> {
        if k > self.n {
            return Err(GeometryError::DimensionOutOfRange { k: k as i64, geometry: *self });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &Geometry) -> Result<(), GeometryError> {
        if self != other {
            return Err(GeometryError::Mixed(*self, *other));
        }
        Ok(())
    }

    fn check_vector(&self, v: &[Elem], len: usize) -> Result<(), GeometryError> {
        if v.len() != len {
            return Err(GeometryError::WrongLength { expected: len, got: v.len() });
        }
        if let Some(&bad) = v.iter().find(|&&x| x as usize >= self.field.order()) {
            return Err(GeometryError::BadLabel(bad));
        }
        Ok(())
    }

    /// Canonical subspace from rows in homogeneous coordinates (length n+1).
    /// For affine geometries the span must contain an affine point.
    pub fn from_homogeneous(&self, mut m: FqMatrix) -> Result<Subspace, GeometryError> {
        if m.cols != self.n + 1 {
            return Err(GeometryError::WrongLength { expected: self.n + 1, got: m.cols });
        }
        let pivots = m.rref(self.field);
        if pivots.is_empty() {
            return Err(GeometryError::ZeroSpan);
        }
        let dim = pivots.len() - 1;
        match self.kind {
            Kind::Projective => Ok(Subspace { geometry: *self, dim, coords: m.data.into() }),
            Kind::Affine => {
                if pivots[0] != 0 {
                    return Err(GeometryError::AtInfinity);
                }
                let n = self.n;
                let mut coords = Vec::with_capacity(dim * n + n);
                for i in 1..=dim {
                    coords.extend_from_slice(&m.row(i)[1..]);
                }
                coords.extend_from_slice(&m.row(0)[1..]);
                Ok(Subspace { geometry: *self, dim, coords: coords.into() })
            }
        }
    }

    /// Projective subspace spanned by the given vectors of GF(q)^{n+1}.
    pub fn span_of<R: AsRef<[Elem]>>(&self, rows: &[R]) -> Result<Subspace, GeometryError> {
        if self.kind != Kind::Projective {
            return Err(GeometryError::WrongKind(Kind::Projective));
        }
        for r in rows {
            self.check_vector(r.as_ref(), self.n + 1)?;
        }
        self.from_homogeneous(FqMatrix::from_rows(self.n + 1, rows))
    }

    /// Affine flat `point + <directions>`.
    pub fn flat<R: AsRef<[Elem]>>(&self, point: &[Elem], directions: &[R]) -> Result<Subspace, GeometryError> {
        if self.kind != Kind::Affine {
            return Err(GeometryError::WrongKind(Kind::Affine));
        }
        self.check_vector(point, self.n)?;
        let mut m = FqMatrix::zeros(1 + directions.len(), self.n + 1);
        m.set(0, 0, 1);
        m.data[1..self.n + 1].copy_from_slice(point);
        for (i, d) in directions.iter().enumerate() {
            self.check_vector(d.as_ref(), self.n)?;
            let start = (i + 1) * (self.n + 1) + 1;
            m.data[start..start + self.n].copy_from_slice(d.as_ref());
        }
        self.from_homogeneous(m)
    }

    /// The point with the given coordinates (homogeneous for PG, affine for AG).
    pub fn point(&self, coords: &[Elem]) -> Result<Subspace, GeometryError> {
        match self.kind {
            Kind::Projective => self.span_of(&[coords]),
            Kind::Affine => self.flat::<&[Elem]>(coords, &[]),
        }
    }

    pub fn whole_space(&self) -> Subspace {
        self.from_homogeneous(FqMatrix::identity(self.n + 1)).unwrap()
    }

    /// All k-subspaces in lexicographic order of their canonical encodings.
    pub fn enumerate(&self, k: usize) -> Result<Vec<Subspace>, GeometryError> {
        self.check_dim(k)?;
        let q = self.field.order() as Elem;
        let n = self.n;
        let mut out = Vec::new();
        match self.kind {
            Kind::Projective => {
                for m in rref_matrices(q, k + 1, n + 1) {
                    out.push(Subspace { geometry: *self, dim: k, coords: m.0.into() });
                }
            }
            Kind::Affine => {
                for (dir, pivots) in rref_matrices(q, k, n) {
                    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
                    for_each_assignment(q, free.len(), |vals| {
                        let mut coords = dir.clone();
                        let mut rep = vec![0; n];
                        for (&c, &v) in free.iter().zip(vals) {
                            rep[c] = v;
                        }
                        coords.extend_from_slice(&rep);
                        out.push(Subspace { geometry: *self, dim: k, coords: coords.into() });
                    });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Coordinate vectors of all points of `s` (normalized for PG).
    pub fn points_of(&self, s: &Subspace) -> Vec<Vec<Elem>> {
        let f = self.field;
        let q = f.order() as Elem;
        let len = self.vector_len();
        let mut out = Vec::with_capacity(self.points_per_subspace(s.dim));
        match self.kind {
            Kind::Projective => {
                let rows = s.dim + 1;
                for lead in 0..rows {
                    for_each_assignment(q, rows - lead - 1, |tail| {
                        let mut v = s.coords[lead * len..(lead + 1) * len].to_vec();
                        for (t, &c) in tail.iter().enumerate() {
                            if c != 0 {
                                let row = &s.coords[(lead + 1 + t) * len..(lead + 2 + t) * len];
                                for (x, &y) in v.iter_mut().zip(row) {
                                    *x = f.add(*x, f.mul(c, y));
                                }
                            }
                        }
                        out.push(v);
                    });
                }
            }
            Kind::Affine => {
                let rep = s.representative().unwrap();
                for_each_assignment(q, s.dim, |coefs| {
                    let mut v = rep.to_vec();
                    for (t, &c) in coefs.iter().enumerate() {
                        if c != 0 {
                            let row = &s.coords[t * len..(t + 1) * len];
                            for (x, &y) in v.iter_mut().zip(row) {
                                *x = f.add(*x, f.mul(c, y));
                            }
                        }
                    }
                    out.push(v);
                });
            }
        }
        out
    }

    /// Whether `inner` is contained in `outer` as a point set.
    pub fn contains(&self, outer: &Subspace, inner: &Subspace) -> Result<bool, GeometryError> {
        self.check_same(&outer.geometry)?;
        self.check_same(&inner.geometry)?;
        if inner.dim > outer.dim {
            return Ok(false);
        }
        let basis = outer.homogeneous();
        let pivots = pivots_of(&basis);
        let h = inner.homogeneous();
        Ok((0..h.rows).all(|i| {
            let mut v = h.row(i).to_vec();
            reduce(self.field, &basis, &pivots, &mut v);
            v.iter().all(|&x| x == 0)
        }))
    }

    /// Point-subspace incidence.
    pub fn incident(&self, point: &Subspace, s: &Subspace) -> Result<bool, GeometryError> {
        if point.dim != 0 {
            return Err(GeometryError::NotAPoint(point.dim));
        }
        self.contains(s, point)
    }

    /// Smallest subspace containing both.
    pub fn span(&self, a: &Subspace, b: &Subspace) -> Result<Subspace, GeometryError> {
        self.check_same(&a.geometry)?;
        self.check_same(&b.geometry)?;
        self.from_homogeneous(a.homogeneous().stack(&b.homogeneous()))
    }

    /// Intersection, or `None` when the subspaces are disjoint.
    pub fn meet(&self, a: &Subspace, b: &Subspace) -> Result<Option<Subspace>, GeometryError> {
        self.check_same(&a.geometry)?;
        self.check_same(&b.geometry)?;
        let f = self.field;
        let ann = a.homogeneous().null_space(f).stack(&b.homogeneous().null_space(f));
        let common = ann.null_space(f);
        if common.rows == 0 {
            return Ok(None);
        }
        match self.from_homogeneous(common) {
            Ok(s) => Ok(Some(s)),
            Err(GeometryError::AtInfinity) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Geometry of the same kind and field whose dimension is that of `s`;
    /// the frame in which restrictions to `s` are expressed.
    pub fn local_geometry(&self, s: &Subspace) -> Result<Geometry, GeometryError> {
        self.check_same(&s.geometry)?;
        self.with_dimension(s.dim)
    }

    /// Image of a subspace of `local_geometry(frame)` inside `frame`, using
    /// the canonical rows of `frame` as coordinate basis.
    pub fn embed(&self, frame: &Subspace, local: &Subspace) -> Result<Subspace, GeometryError> {
        self.check_same(&frame.geometry)?;
        let lg = self.local_geometry(frame)?;
        lg.check_same(&local.geometry)?;
        let m = local.homogeneous().mul(self.field, &frame.homogeneous());
        self.from_homogeneous(m)
    }
}

impl PartialEq for Geometry {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Geometry {}

impl Hash for Geometry {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for Geometry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Geometry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Geometry {
    fn key(&self) -> (Kind, usize, u32, u32) {
        (self.kind, self.n, self.field.characteristic(), self.field.degree())
    }
}

impl fmt::Debug for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.kind, self.n, self.field.order())
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A projective subspace or affine flat in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    geometry: Geometry,
    dim: usize,
    coords: Box<[Elem]>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-space{:?}", self.dim, self.coords)
    }
}

impl Subspace {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Canonical encoding: the basis (PG) or direction (AG) rows row-major,
    /// followed for AG by the representative point.
    pub fn coords(&self) -> &[Elem] {
        &self.coords
    }

    /// Canonical basis rows (PG) or direction rows (AG).
    pub fn basis(&self) -> FqMatrix {
        let len = self.geometry.vector_len();
        let rows = match self.geometry.kind {
            Kind::Projective => self.dim + 1,
            Kind::Affine => self.dim,
        };
        FqMatrix::new(rows, len, self.coords[..rows * len].to_vec())
    }

    /// Coset representative of an affine flat.
    pub fn representative(&self) -> Option<&[Elem]> {
        match self.geometry.kind {
            Kind::Projective => None,
            Kind::Affine => {
                let n = self.geometry.n;
                Some(&self.coords[self.dim * n..])
            }
        }
    }

    /// Basis in homogeneous coordinates; for AG this is the projective closure.
    pub fn homogeneous(&self) -> FqMatrix {
        match self.geometry.kind {
            Kind::Projective => self.basis(),
            Kind::Affine => {
                let n = self.geometry.n;
                let mut m = FqMatrix::zeros(self.dim + 1, n + 1);
                m.set(0, 0, 1);
                m.data[1..n + 1].copy_from_slice(self.representative().unwrap());
                for i in 0..self.dim {
                    let start = (i + 1) * (n + 1) + 1;
                    m.data[start..start + n].copy_from_slice(&self.coords[i * n..(i + 1) * n]);
                }
                m
            }
        }
    }
}

pub(crate) fn pivots_of(rref: &FqMatrix) -> Vec<usize> {
    (0..rref.rows)
        .map(|i| rref.row(i).iter().position(|&x| x != 0).unwrap())
        .collect()
}

/// Calls `f` with every vector in `{0..q}^len`, last coordinate fastest.
pub(crate) fn for_each_assignment(q: Elem, len: usize, mut f: impl FnMut(&[Elem])) {
    let mut v = vec![0 as Elem; len];
    loop {
        f(&v);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            v[i] += 1;
            if v[i] < q {
                break;
            }
            v[i] = 0;
        }
    }
}

/// All `rank x cols` reduced row-echelon matrices over the field with `q`
/// labels, with their pivot columns.
fn rref_matrices(q: Elem, rank: usize, cols: usize) -> Vec<(Vec<Elem>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut pivots = Vec::with_capacity(rank);
    fn choose(
        q: Elem,
        rank: usize,
        cols: usize,
        start: usize,
        pivots: &mut Vec<usize>,
        out: &mut Vec<(Vec<Elem>, Vec<usize>)>,
    ) {
        if pivots.len() == rank {
            let free: Vec<(usize, usize)> = (0..rank)
                .flat_map(|i| {
                    let p = &*pivots;
                    (p[i] + 1..cols).filter(move |c| !p.contains(c)).map(move |c| (i, c))
                })
                .collect();
            for_each_assignment(q, free.len(), |vals| {
                let mut m = vec![0; rank * cols];
                for (i, &p) in pivots.iter().enumerate() {
                    m[i * cols + p] = 1;
                }
                for (&(i, c), &v) in free.iter().zip(vals) {
                    m[i * cols + c] = v;
                }
                out.push((m, pivots.clone()));
            });
            return;
        }
        for c in start..cols {
            if cols - c < rank - pivots.len() {
                break;
            }
            pivots.push(c);
            choose(q, rank, cols, c + 1, pivots, out);
            pivots.pop();
        }
    }
    choose(q, rank, cols, 0, &mut pivots, &mut out);
    out
}
