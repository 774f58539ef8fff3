//! Cached enumerations: subspace tables with point bitsets, containment
//! relations between dimensions, and the affine/projective closure map.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{FqMatrix, Geometry, GeometryError, Kind, Subspace};
use crate::field::Elem;

/// Fixed-size bitset over point IDs.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PointSet {
    words: Box<[u64]>,
}

impl PointSet {
    pub fn new(len: usize) -> PointSet {
        PointSet { words: vec![0; len.div_ceil(64)].into() }
    }

    pub fn insert(&mut self, i: u32) {
        self.words[i as usize / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: u32) -> bool {
        self.words[i as usize / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn common(&self, other: &PointSet) -> u32 {
        self.words.iter().zip(other.words.iter()).map(|(a, b)| (a & b).count_ones()).sum()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn intersect_with(&mut self, other: &PointSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &PointSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros();
                bits &= bits - 1;
                Some(w as u32 * 64 + t)
            })
        })
    }
}

/// All k-subspaces of a geometry, indexed by position in canonical order.
pub struct SubspaceTable {
    geometry: Geometry,
    k: usize,
    items: Vec<Subspace>,
    index: HashMap<Box<[Elem]>, u32>,
    points: Vec<PointSet>,
}

impl SubspaceTable {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u32) -> &Subspace {
        &self.items[id as usize]
    }

    pub fn items(&self) -> &[Subspace] {
        &self.items
    }

    pub fn id_of(&self, s: &Subspace) -> Option<u32> {
        if s.geometry != self.geometry || s.dim != self.k {
            return None;
        }
        self.index.get(&s.coords).copied()
    }

    /// ID of the point with the given canonical coordinates.
    pub(crate) fn id_of_coords(&self, coords: &[Elem]) -> Option<u32> {
        self.index.get(coords).copied()
    }

    /// Points of the subspace with the given ID, as point IDs.
    pub fn points(&self, id: u32) -> &PointSet {
        &self.points[id as usize]
    }
}

type TableKey = (Geometry, usize);
type ContainmentKey = (Geometry, usize, usize);

fn tables() -> &'static Mutex<HashMap<TableKey, Arc<SubspaceTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<SubspaceTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn containments() -> &'static Mutex<HashMap<ContainmentKey, Arc<Containment>>> {
    static CACHE: OnceLock<Mutex<HashMap<ContainmentKey, Arc<Containment>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Which k-subspaces lie in which t-subspaces (k <= t).
pub struct Containment {
    inner: usize,
    outer: usize,
    within: Vec<Vec<u32>>,
    containing: Vec<Vec<u32>>,
}

impl Containment {
    pub fn inner_dim(&self) -> usize {
        self.inner
    }

    pub fn outer_dim(&self) -> usize {
        self.outer
    }

    /// IDs of the k-subspaces inside outer subspace `o`, listed in the order
    /// of the local geometry of `o`, so position `i` is local ID `i`.
    pub fn within(&self, o: u32) -> &[u32] {
        &self.within[o as usize]
    }

    /// IDs of the t-subspaces containing inner subspace `i`, ascending.
    pub fn containing(&self, i: u32) -> &[u32] {
        &self.containing[i as usize]
    }
}

impl Geometry {
    /// The cached table of k-subspaces.
    pub fn table(&self, k: usize) -> Result<Arc<SubspaceTable>, GeometryError> {
        self.check_dim(k)?;
        if let Some(t) = tables().lock().unwrap().get(&(*self, k)) {
            return Ok(t.clone());
        }
        // Built without holding the lock; building needs the point table.
        let built = Arc::new(self.build_table(k)?);
        let mut cache = tables().lock().unwrap();
        Ok(cache.entry((*self, k)).or_insert(built).clone())
    }

    fn build_table(&self, k: usize) -> Result<SubspaceTable, GeometryError> {
        let items = self.enumerate(k)?;
        let index: HashMap<Box<[Elem]>, u32> =
            items.iter().enumerate().map(|(i, s)| (s.coords.clone(), i as u32)).collect();
        let npoints = self.point_count();
        let points = if k == 0 {
            (0..items.len() as u32)
                .map(|i| {
                    let mut p = PointSet::new(npoints);
                    p.insert(i);
                    p
                })
                .collect()
        } else {
            let pt = self.table(0)?;
            items
                .iter()
                .map(|s| {
                    let mut p = PointSet::new(npoints);
                    for v in self.points_of(s) {
                        p.insert(pt.id_of_coords(&v).expect("point of subspace is in table"));
                    }
                    p
                })
                .collect()
        };
        Ok(SubspaceTable { geometry: *self, k, items, index, points })
    }

    /// ID of `s` in the table of its dimension.
    pub fn id_of(&self, s: &Subspace) -> Result<u32, GeometryError> {
        self.check_same(&s.geometry)?;
        Ok(self.table(s.dim)?.id_of(s).expect("canonical subspace is in its table"))
    }

    /// Ambient IDs of the k-subspaces of `frame`, in the order of the local
    /// geometry of `frame`.
    pub fn within(&self, frame: &Subspace, k: usize) -> Result<Vec<u32>, GeometryError> {
        if k > frame.dim {
            return Err(GeometryError::NotContained { inner: k, outer: frame.dim });
        }
        let table = self.table(k)?;
        if frame.dim == 0 {
            return Ok(vec![table.id_of(frame).unwrap()]);
        }
        let local = self.local_geometry(frame)?.table(k)?;
        let basis = frame.homogeneous();
        Ok(local
            .items()
            .iter()
            .map(|s| {
                let img = self.from_homogeneous(s.homogeneous().mul(self.field, &basis)).unwrap();
                table.id_of(&img).unwrap()
            })
            .collect())
    }

    /// Cached containment relation between k- and t-subspaces.
    pub fn containment(&self, k: usize, t: usize) -> Result<Arc<Containment>, GeometryError> {
        if k > t {
            return Err(GeometryError::NotContained { inner: k, outer: t });
        }
        self.check_dim(t)?;
        if let Some(c) = containments().lock().unwrap().get(&(*self, k, t)) {
            return Ok(c.clone());
        }
        let outer = self.table(t)?;
        let inner = self.table(k)?;
        let within = outer
            .items()
            .iter()
            .map(|o| self.within(o, k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut containing = vec![Vec::new(); inner.len()];
        for (o, list) in within.iter().enumerate() {
            for &i in list {
                containing[i as usize].push(o as u32);
            }
        }
        let built = Arc::new(Containment { inner: k, outer: t, within, containing });
        let mut cache = containments().lock().unwrap();
        Ok(cache.entry((*self, k, t)).or_insert(built).clone())
    }
}

/// Identification of AG(n,q) with the complement of a hyperplane of PG(n,q).
///
/// With the default hyperplane `x_0 = 0` an affine point `x` is the
/// projective point `(1 : x)`. Any other hyperplane `H` is handled by a fixed
/// change of coordinates sending `H` to `x_0 = 0`.
#[derive(Clone, Debug)]
pub struct ClosureMap {
    affine: Geometry,
    projective: Geometry,
    infinity: Subspace,
    // Rows of `to_std` map projective coordinates into the standard frame.
    to_std: FqMatrix,
    from_std: FqMatrix,
}

impl ClosureMap {
    /// The standard map for `AG(n,q)`, infinity at `x_0 = 0`.
    pub fn new(affine: Geometry) -> Result<ClosureMap, GeometryError> {
        if affine.kind != Kind::Affine {
            return Err(GeometryError::WrongKind(Kind::Affine));
        }
        let projective = Geometry::new(Kind::Projective, affine.n, affine.field)?;
        let n = affine.n;
        let rows: Vec<Vec<Elem>> = (1..=n)
            .map(|j| (0..=n).map(|c| (c == j) as Elem).collect())
            .collect();
        let infinity = projective.span_of(&rows)?;
        Ok(ClosureMap {
            affine,
            projective,
            infinity,
            to_std: FqMatrix::identity(n + 1),
            from_std: FqMatrix::identity(n + 1),
        })
    }

    /// Map whose points at infinity form the hyperplane `h` of PG(n,q).
    pub fn with_infinity(h: &Subspace) -> Result<ClosureMap, GeometryError> {
        let projective = h.geometry;
        if projective.kind != Kind::Projective {
            return Err(GeometryError::WrongKind(Kind::Projective));
        }
        let n = projective.n;
        if h.dim + 1 != n {
            return Err(GeometryError::DimensionOutOfRange { k: h.dim as i64, geometry: projective });
        }
        let f = projective.field;
        let mut func = h.basis().null_space(f).row(0).to_vec();
        super::normalize(f, &mut func);
        let lead = func.iter().position(|&x| x != 0).unwrap();
        let mut t = FqMatrix::zeros(n + 1, n + 1);
        t.data[..n + 1].copy_from_slice(&func);
        for (r, j) in (0..=n).filter(|&j| j != lead).enumerate() {
            t.set(r + 1, j, 1);
        }
        // Coordinates transform as y = T x, so row vectors map by T^t.
        let to_std = t.transpose();
        let from_std = to_std.inverse(f).expect("coordinate change is invertible");
        let affine = Geometry::new(Kind::Affine, n, f)?;
        Ok(ClosureMap { affine, projective, infinity: h.clone(), to_std, from_std })
    }

    pub fn affine(&self) -> Geometry {
        self.affine
    }

    pub fn projective(&self) -> Geometry {
        self.projective
    }

    pub fn infinity(&self) -> &Subspace {
        &self.infinity
    }

    /// Projective closure of an affine flat.
    pub fn to_projective(&self, s: &Subspace) -> Result<Subspace, GeometryError> {
        self.affine.check_same(&s.geometry)?;
        let f = self.affine.field;
        self.projective.from_homogeneous(s.homogeneous().mul(f, &self.from_std))
    }

    /// Affine part of a projective subspace not contained in the hyperplane
    /// at infinity.
    pub fn to_affine(&self, s: &Subspace) -> Result<Subspace, GeometryError> {
        self.projective.check_same(&s.geometry)?;
        let f = self.affine.field;
        self.affine.from_homogeneous(s.basis().mul(f, &self.to_std))
    }

    /// The (k-1)-space at infinity of an affine k-flat; `None` for points.
    pub fn at_infinity(&self, s: &Subspace) -> Result<Option<Subspace>, GeometryError> {
        let closure = self.to_projective(s)?;
        self.projective.meet(&closure, &self.infinity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_cached_and_indexed() {
        let g = Geometry::projective(3, 2).unwrap();
        let a = g.table(1).unwrap();
        let b = g.table(1).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        for (i, s) in a.items().iter().enumerate() {
            assert_eq!(a.id_of(s), Some(i as u32));
            assert_eq!(a.points(i as u32).count(), 3);
        }
    }

    #[test]
    fn containment_counts() {
        let g = Geometry::projective(4, 2).unwrap();
        let c = g.containment(1, 2).unwrap();
        let planes = g.table(2).unwrap();
        let lines = g.table(1).unwrap();
        for o in 0..planes.len() as u32 {
            assert_eq!(c.within(o).len(), 7);
            for &l in c.within(o) {
                assert!(lines.points(l).is_subset(planes.points(o)));
            }
        }
        // A line of PG(4,2) lies in gauss(3,1,2) = 7 planes.
        for i in 0..lines.len() as u32 {
            assert_eq!(c.containing(i).len(), 7);
        }
    }

    #[test]
    fn within_uses_local_order() {
        let g = Geometry::affine(3, 3).unwrap();
        let planes = g.table(2).unwrap();
        let plane = planes.get(5).clone();
        let local = g.local_geometry(&plane).unwrap().table(1).unwrap();
        let ids = g.within(&plane, 1).unwrap();
        assert_eq!(ids.len(), local.len());
        for (l, &a) in local.items().iter().zip(&ids) {
            let img = g.embed(&plane, l).unwrap();
            assert_eq!(g.id_of(&img).unwrap(), a);
        }
    }

    #[test]
    fn closure_round_trip() {
        let ag = Geometry::affine(3, 3).unwrap();
        let map = ClosureMap::new(ag).unwrap();
        for k in 0..3 {
            for s in ag.enumerate(k).unwrap() {
                let c = map.to_projective(&s).unwrap();
                assert_eq!(c.dim(), k);
                assert_eq!(map.to_affine(&c).unwrap(), s);
                let inf = map.at_infinity(&s).unwrap();
                assert_eq!(inf.map_or(-1, |i| i.dim() as i64), k as i64 - 1);
            }
        }
        assert!(matches!(map.to_affine(map.infinity()), Err(GeometryError::AtInfinity)));
    }

    #[test]
    fn other_hyperplane_at_infinity() {
        let pg = Geometry::projective(3, 2).unwrap();
        let planes = pg.table(2).unwrap();
        for h in planes.items() {
            let map = ClosureMap::with_infinity(h).unwrap();
            let mut affine_points = 0;
            for p in pg.table(0).unwrap().items() {
                match map.to_affine(p) {
                    Ok(a) => {
                        affine_points += 1;
                        assert!(!pg.incident(p, h).unwrap());
                        assert_eq!(&map.to_projective(&a).unwrap(), p);
                    }
                    Err(GeometryError::AtInfinity) => assert!(pg.incident(p, h).unwrap()),
                    Err(e) => panic!("{e}"),
                }
            }
            assert_eq!(affine_points, 8);
        }
    }
}
