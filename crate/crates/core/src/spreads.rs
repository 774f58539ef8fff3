//! k-spreads: partitions of the point set into k-subspaces.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Elem, Field, FieldError};
use crate::geometry::{FqMatrix, Geometry, GeometryError, Kind, PointSet, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpreadError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("PG({n},q) has no {k}-spreads: {k}+1 does not divide {n}+1")]
    NoSpreads { n: usize, k: usize },
    #[error("direction space has dimension {got}, expected {expected}")]
    DirectionDimension { expected: usize, got: usize },
    #[error("operation needs an {0} geometry")]
    WrongKind(Kind),
    #[error("k must be below the ambient dimension")]
    BadK,
    #[error("subspace {0} is not a {1}-subspace of the frame")]
    NotInFrame(u32, usize),
}

/// A set of k-subspaces, by ID, meant to partition the points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spread {
    geometry: Geometry,
    k: usize,
    members: Vec<u32>,
}

/// Why a collection of subspaces fails to be a spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpreadDefect {
    Uncovered(u32),
    DoublyCovered(u32),
}

impl Spread {
    /// Unvalidated spread; see [`Spread::validate`].
    pub fn new(geometry: Geometry, k: usize, mut members: Vec<u32>) -> Spread {
        members.sort_unstable();
        Spread { geometry, k, members }
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

    /// Checks that every point is covered exactly once. The witness is the
    /// smallest point that is not.
    pub fn validate(&self) -> Result<(), SpreadDefect> {
        let table = self.geometry.table(self.k).expect("spread dimension is valid");
        let mut cover = vec![0u32; self.geometry.point_count()];
        for &m in &self.members {
            for p in table.points(m).iter() {
                cover[p as usize] += 1;
            }
        }
        match cover.iter().position(|&c| c != 1) {
            None => Ok(()),
            Some(p) if cover[p] == 0 => Err(SpreadDefect::Uncovered(p as u32)),
            Some(p) => Err(SpreadDefect::DoublyCovered(p as u32)),
        }
    }

    /// Number of members shared with a sorted ID list.
    pub fn meet_count(&self, sorted: &[u32]) -> usize {
        self.members.iter().filter(|m| sorted.binary_search(m).is_ok()).count()
    }
}

/// Spreads together with whether they are all the spreads there are.
#[derive(Debug, Clone)]
pub struct SpreadList {
    pub spreads: Vec<Spread>,
    pub exhaustive: bool,
}

/// Expected number of members of a k-spread.
pub fn spread_size(g: Geometry, k: usize) -> usize {
    g.point_count() / g.points_per_subspace(k)
}

pub fn has_spreads(g: Geometry, k: usize) -> bool {
    k < g.n() && (g.kind() == Kind::Affine || (g.n() + 1) % (k + 1) == 0)
}

fn check_exists(g: Geometry, k: usize) -> Result<(), SpreadError> {
    if k >= g.n() {
        return Err(SpreadError::BadK);
    }
    if !has_spreads(g, k) {
        return Err(SpreadError::NoSpreads { n: g.n(), k });
    }
    Ok(())
}

/// All affine k-flats parallel to the vector subspace spanned by `rows`.
pub fn affine_parallel_spread<R: AsRef<[Elem]>>(g: Geometry, rows: &[R]) -> Result<Spread, SpreadError> {
    if g.kind() != Kind::Affine {
        return Err(SpreadError::WrongKind(Kind::Affine));
    }
    let origin = vec![0; g.n()];
    let w = g.flat(&origin, rows)?;
    let k = w.dim();
    if k != rows.len() {
        return Err(SpreadError::DirectionDimension { expected: rows.len(), got: k });
    }
    if k >= g.n() {
        return Err(SpreadError::BadK);
    }
    let dir = w.basis();
    let table = g.table(k)?;
    let members = (0..table.len() as u32).filter(|&i| table.get(i).basis() == dir).collect();
    Ok(Spread::new(g, k, members))
}

/// All parallel-class spreads of AG(n,q), one per k-dimensional direction.
pub fn all_parallel_spreads(g: Geometry, k: usize) -> Result<Vec<Spread>, SpreadError> {
    if g.kind() != Kind::Affine {
        return Err(SpreadError::WrongKind(Kind::Affine));
    }
    check_exists(g, k)?;
    let table = g.table(k)?;
    let mut classes: std::collections::BTreeMap<Vec<Elem>, Vec<u32>> = Default::default();
    for (i, s) in table.items().iter().enumerate() {
        classes.entry(s.basis().data).or_default().push(i as u32);
    }
    Ok(classes.into_values().map(|m| Spread::new(g, k, m)).collect())
}

/// The Desarguesian spread obtained by field reduction: GF(q)^{n+1} is
/// read as GF(q^{k+1})^{(n+1)/(k+1)} and every 1-dimensional subspace over
/// the big field becomes a k-space over GF(q).
pub fn desarguesian_spread(g: Geometry, k: usize) -> Result<Spread, SpreadError> {
    if g.kind() != Kind::Projective {
        return Err(SpreadError::WrongKind(Kind::Projective));
    }
    check_exists(g, k)?;
    let small = g.field();
    let (p, e) = (small.characteristic(), small.degree());
    let big = Field::get(p, e * (k + 1) as u32)?;
    let embed = subfield_embedding(small, big);
    // A generator of the big field over the small one.
    let d = k + 1;
    let q = small.order() as Elem;
    let combos = all_vectors(q, d);
    let mut coord: Vec<Vec<Elem>> = Vec::new();
    let mut alpha = 0;
    for a in big.elements() {
        let powers: Vec<Elem> = (0..d).map(|j| big.pow(a, j as u64)).collect();
        let mut table = vec![None; big.order()];
        let mut injective = true;
        for c in &combos {
            let v = c.iter().zip(&powers).fold(0, |acc, (&ci, &pw)| big.add(acc, big.mul(embed[ci as usize], pw)));
            if table[v as usize].replace(c.clone()).is_some() {
                injective = false;
                break;
            }
        }
        if injective {
            coord = table.into_iter().map(Option::unwrap).collect();
            alpha = a;
            break;
        }
    }
    let s = (g.n() + 1) / d;
    let big_points = Geometry::new(Kind::Projective, s - 1, big)?.table(0)?;
    let table = g.table(k)?;
    let mut members = Vec::with_capacity(big_points.len());
    for pt in big_points.items() {
        let a = pt.coords();
        let rows: Vec<Vec<Elem>> = (0..d)
            .map(|j| {
                let lambda = big.pow(alpha, j as u64);
                a.iter().flat_map(|&x| coord[big.mul(lambda, x) as usize].clone()).collect()
            })
            .collect();
        let sub = g.span_of(&rows)?;
        debug_assert_eq!(sub.dim(), k);
        members.push(table.id_of(&sub).unwrap());
    }
    Ok(Spread::new(g, k, members))
}

/// Image of each label of `small` inside `big`, through a root of the
/// defining polynomial of `small`.
fn subfield_embedding(small: &Field, big: &Field) -> Vec<Elem> {
    let p = small.characteristic() as Elem;
    if small.degree() == 1 {
        return (0..p).collect();
    }
    let modulus = small.modulus();
    let eval = |b: Elem| {
        modulus.iter().rev().fold(0, |acc, &c| big.add(big.mul(acc, b), c))
    };
    let beta = big.elements().find(|&b| eval(b) == 0).expect("subfield polynomial has a root");
    (0..small.order())
        .map(|label| {
            let mut l = label;
            let mut value = 0;
            let mut power = 1;
            for _ in 0..small.degree() {
                value = big.add(value, big.mul((l % p as usize) as Elem, power));
                power = big.mul(power, beta);
                l /= p as usize;
            }
            value
        })
        .collect()
}

fn all_vectors(q: Elem, len: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    crate::geometry::for_each_assignment(q, len, |v| out.push(v.to_vec()));
    out
}

/// Every k-spread of a small geometry, by lowest-uncovered-point
/// backtracking. Stops once `cap` spreads are found.
pub fn enumerate_spreads(g: Geometry, k: usize, cap: usize) -> Result<SpreadList, SpreadError> {
    check_exists(g, k)?;
    let table = g.table(k)?;
    let through = g.containment(0, k)?;
    let npoints = g.point_count();
    let first: Vec<u32> = through.containing(0).to_vec();
    let stop = AtomicBool::new(false);
    let parts: Vec<(Vec<Vec<u32>>, bool)> = first
        .par_iter()
        .map(|&m| {
            let mut covered = table.points(m).clone();
            let mut chosen = vec![m];
            let mut found = Vec::new();
            let finished = backtrack(&table, &through, npoints, &mut covered, &mut chosen, &mut found, cap, &stop);
            (found, finished)
        })
        .collect();
    let finished = parts.iter().all(|p| p.1);
    let mut spreads: Vec<Spread> = parts
        .into_iter()
        .flat_map(|p| p.0)
        .map(|m| Spread::new(g, k, m))
        .collect();
    let total = spreads.len();
    spreads.truncate(cap);
    Ok(SpreadList { spreads, exhaustive: finished && total < cap })
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    table: &crate::geometry::SubspaceTable,
    through: &crate::geometry::Containment,
    npoints: usize,
    covered: &mut PointSet,
    chosen: &mut Vec<u32>,
    found: &mut Vec<Vec<u32>>,
    cap: usize,
    stop: &AtomicBool,
) -> bool {
    let Some(p) = (0..npoints as u32).find(|&p| !covered.contains(p)) else {
        found.push(chosen.clone());
        return found.len() < cap;
    };
    for &m in through.containing(p) {
        let pts = table.points(m);
        if pts.common(covered) != 0 {
            continue;
        }
        if stop.load(Ordering::Relaxed) {
            return false;
        }
        let before = covered.clone();
        covered.union_with(pts);
        chosen.push(m);
        let ok = backtrack(table, through, npoints, covered, chosen, found, cap, stop);
        chosen.pop();
        *covered = before;
        if !ok {
            return false;
        }
    }
    true
}

/// Extends a spread of the flat `frame` (given as ambient IDs of k-flats
/// inside it) to AG(n,q) by adding the same spread translated into every
/// flat parallel to `frame`.
pub fn extend_by_parallels(g: Geometry, frame: &Subspace, k: usize, inside: &[u32]) -> Result<Spread, SpreadError> {
    if g.kind() != Kind::Affine {
        return Err(SpreadError::WrongKind(Kind::Affine));
    }
    let table = g.table(k)?;
    let frame_points = g.table(frame.dim())?.points(g.id_of(frame)?).clone();
    for &m in inside {
        if m as usize >= table.len() || !table.points(m).is_subset(&frame_points) {
            return Err(SpreadError::NotInFrame(m, k));
        }
    }
    let dir = frame.basis();
    let pivots: Vec<usize> = (0..dir.rows).map(|i| dir.row(i).iter().position(|&x| x != 0).unwrap()).collect();
    let free: Vec<usize> = (0..g.n()).filter(|c| !pivots.contains(c)).collect();
    let f = g.field();
    let mut members = Vec::with_capacity(inside.len() * f.order().pow(free.len() as u32));
    crate::geometry::for_each_assignment(f.order() as Elem, free.len(), |vals| {
        for &m in inside {
            let s = table.get(m);
            let mut rep = s.representative().unwrap().to_vec();
            for (&c, &v) in free.iter().zip(vals) {
                rep[c] = f.add(rep[c], v);
            }
            let b = s.basis();
            let rows: Vec<&[Elem]> = (0..b.rows).map(|i| b.row(i)).collect();
            let moved = g.flat(&rep, &rows).unwrap();
            members.push(table.id_of(&moved).unwrap());
        }
    });
    Ok(Spread::new(g, k, members))
}

/// Randomly sampled k-spreads, reproducible from `seed`.
///
/// Projective spreads are images of the Desarguesian spread under random
/// invertible linear maps; affine spreads come from randomized
/// backtracking, which reaches spreads that are not parallel classes.
pub fn sample_spreads(g: Geometry, k: usize, count: usize, seed: u64) -> Result<Vec<Spread>, SpreadError> {
    check_exists(g, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = g.table(k)?;
    let f = g.field();
    let q = f.order() as Elem;
    let mut out = Vec::with_capacity(count);
    match g.kind() {
        Kind::Projective => {
            let base = desarguesian_spread(g, k)?;
            let n1 = g.n() + 1;
            while out.len() < count {
                let data: Vec<Elem> = (0..n1 * n1).map(|_| rng.gen_range(0..q)).collect();
                let m = FqMatrix::new(n1, n1, data);
                if m.rank(f) < n1 {
                    continue;
                }
                let members = base
                    .members()
                    .iter()
                    .map(|&id| {
                        let img = g.from_homogeneous(table.get(id).basis().mul(f, &m)).unwrap();
                        table.id_of(&img).unwrap()
                    })
                    .collect();
                out.push(Spread::new(g, k, members));
            }
        }
        Kind::Affine => {
            let through = g.containment(0, k)?;
            let npoints = g.point_count();
            while out.len() < count {
                let mut covered = PointSet::new(npoints);
                let mut chosen = Vec::new();
                let mut budget = 100_000usize;
                if random_cover(&table, &through, npoints, &mut covered, &mut chosen, &mut rng, &mut budget) {
                    out.push(Spread::new(g, k, chosen));
                }
            }
        }
    }
    Ok(out)
}

fn random_cover(
    table: &crate::geometry::SubspaceTable,
    through: &crate::geometry::Containment,
    npoints: usize,
    covered: &mut PointSet,
    chosen: &mut Vec<u32>,
    rng: &mut ChaCha8Rng,
    budget: &mut usize,
) -> bool {
    let Some(p) = (0..npoints as u32).find(|&p| !covered.contains(p)) else {
        return true;
    };
    let mut options: Vec<u32> = through
        .containing(p)
        .iter()
        .copied()
        .filter(|&m| table.points(m).common(covered) == 0)
        .collect();
    options.shuffle(rng);
    for m in options {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let before = covered.clone();
        covered.union_with(table.points(m));
        chosen.push(m);
        if random_cover(table, through, npoints, covered, chosen, rng, budget) {
            return true;
        }
        chosen.pop();
        *covered = before;
    }
    false
}
