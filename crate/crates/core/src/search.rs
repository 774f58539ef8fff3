//! Exhaustive classification of Cameron-Liebler k-sets: enumerate the 0/1
//! vectors of the incidence row space by assigning pivot coordinates and
//! cutting subtrees as soon as a dependent coordinate can no longer be 0 or 1.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::clset::KSet;
use crate::geometry::{Geometry, GeometryError};
use crate::incidence::{row_space, IncidenceError, IncidenceMatrix, RowSpace};
use crate::spreads::SpreadList;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error("k = {k} must be below the ambient dimension {n}")]
    BadK { k: usize, n: usize },
    #[error("cross-validation needs an exhaustive {0}")]
    NotExhaustive(&'static str),
    #[error("spreads belong to a different geometry or dimension")]
    SpreadMismatch,
}

/// Knobs for [`classify_with`].
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Upper limit on visited nodes; the run stops early once it is reached.
    pub budget: u64,
    /// Column order used to pick the pivot coordinates; natural order if unset.
    pub column_order: Option<Vec<usize>>,
    /// Depth at which the tree is cut into independent subtrees.
    pub split_depth: usize,
}

impl SearchOptions {
    pub fn new(budget: u64) -> SearchOptions {
        SearchOptions { budget, column_order: None, split_depth: 8 }
    }
}

/// Outcome of one classification run.
#[derive(Debug, Clone)]
pub struct ClassificationRun {
    pub geometry: Geometry,
    pub k: usize,
    /// Pivot columns (k-subspace IDs) in assignment order.
    pub pivots: Vec<u32>,
    pub nodes: u64,
    pub budget: u64,
    /// Sorted by size, then by member IDs.
    pub found: Vec<KSet>,
    /// True only when the whole assignment tree was covered.
    pub exhaustive: bool,
    pub elapsed: Duration,
}

impl ClassificationRun {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn classify(g: Geometry, k: usize, budget: u64) -> Result<ClassificationRun, SearchError> {
    classify_with(g, k, &SearchOptions::new(budget))
}

pub fn classify_with(g: Geometry, k: usize, opts: &SearchOptions) -> Result<ClassificationRun, SearchError> {
    if k >= g.n() {
        return Err(SearchError::BadK { k, n: g.n() });
    }
    let start = Instant::now();
    let rs: Arc<RowSpace> = match &opts.column_order {
        None => row_space(g, k)?,
        Some(order) => Arc::new(RowSpace::with_column_order(&IncidenceMatrix::build(g, k)?.to_exact(), order)?),
    };
    let plan = Plan::new(&rs)?;
    let (mut found, nodes, exhaustive) = plan.run(opts.budget, opts.split_depth);
    let mut found: Vec<KSet> = found.drain(..).map(|m| KSet::from_sorted(g, k, m)).collect();
    found.sort_by(|a, b| (a.len(), a.members()).cmp(&(b.len(), b.members())));
    Ok(ClassificationRun {
        geometry: g,
        k,
        pivots: plan.order.iter().map(|&i| rs.pivots()[i] as u32).collect(),
        nodes,
        budget: opts.budget,
        found,
        exhaustive,
        elapsed: start.elapsed(),
    })
}

/// The large case: PG(3,3) lines have rank 40, far beyond routine runs.
/// Same search, but the budget is the caller's explicit choice.
pub fn classify_stretch(g: Geometry, k: usize, budget: u64) -> Result<ClassificationRun, SearchError> {
    classify_with(g, k, &SearchOptions { budget, column_order: None, split_depth: 12 })
}

/// Precomputed assignment order and per-depth dependency updates.
struct Plan {
    cols: usize,
    /// Pivot indices (into `RowSpace::pivots`) in assignment order.
    order: Vec<usize>,
    pivot_cols: Vec<usize>,
    dep_cols: Vec<usize>,
    den: Vec<i64>,
    pos0: Vec<i64>,
    neg0: Vec<i64>,
    /// For each depth: the dependencies touched and their coefficients.
    touches: Vec<Vec<(u32, i64)>>,
}

struct State {
    sum: Vec<i64>,
    pos: Vec<i64>,
    neg: Vec<i64>,
    values: Vec<bool>,
}

impl Plan {
    fn new(rs: &RowSpace) -> Result<Plan, SearchError> {
        let deps = rs.dependencies()?;
        let r = rs.rank();
        let mut per_pivot: Vec<Vec<(u32, i64)>> = vec![Vec::new(); r];
        let mut open = vec![0usize; deps.len()];
        for (d, dep) in deps.iter().enumerate() {
            open[d] = dep.terms.len();
            for &(i, c) in &dep.terms {
                per_pivot[i].push((d as u32, c));
            }
        }
        // Greedy: next pivot closes the most dependencies, then touches the
        // most still-open ones; ties go to the lower index.
        let mut order = Vec::with_capacity(r);
        let mut used = vec![false; r];
        for _ in 0..r {
            let best = (0..r)
                .filter(|&i| !used[i])
                .max_by_key(|&i| {
                    let closes = per_pivot[i].iter().filter(|&&(d, _)| open[d as usize] == 1).count();
                    let touches = per_pivot[i].iter().filter(|&&(d, _)| open[d as usize] > 0).count();
                    (closes, touches, std::cmp::Reverse(i))
                })
                .unwrap();
            used[best] = true;
            for &(d, _) in &per_pivot[best] {
                open[d as usize] -= 1;
            }
            order.push(best);
        }
        let sums = |f: fn(i64) -> bool| -> Vec<i64> {
            deps.iter().map(|d| d.terms.iter().map(|t| t.1).filter(|&c| f(c)).sum()).collect()
        };
        Ok(Plan {
            cols: rs.cols(),
            pivot_cols: order.iter().map(|&i| rs.pivots()[i]).collect(),
            dep_cols: deps.iter().map(|d| d.column).collect(),
            den: deps.iter().map(|d| d.den).collect(),
            pos0: sums(|c| c > 0),
            neg0: sums(|c| c < 0),
            touches: order.iter().map(|&i| per_pivot[i].clone()).collect(),
            order,
        })
    }

    fn fresh(&self) -> State {
        State {
            sum: vec![0; self.den.len()],
            pos: self.pos0.clone(),
            neg: self.neg0.clone(),
            values: Vec::with_capacity(self.order.len()),
        }
    }

    /// Applies `value` at the current depth; false if some dependent
    /// coordinate can no longer reach 0 or its denominator.
    fn push(&self, st: &mut State, value: bool) -> bool {
        let d = st.values.len();
        st.values.push(value);
        let mut ok = true;
        for &(slot, c) in &self.touches[d] {
            let s = slot as usize;
            if c > 0 {
                st.pos[s] -= c;
            } else {
                st.neg[s] -= c;
            }
            if value {
                st.sum[s] += c;
            }
            let (lo, hi) = (st.sum[s] + st.neg[s], st.sum[s] + st.pos[s]);
            ok &= (lo <= 0 && 0 <= hi) || (lo <= self.den[s] && self.den[s] <= hi);
        }
        ok
    }

    fn pop(&self, st: &mut State) {
        let value = st.values.pop().unwrap();
        let d = st.values.len();
        for &(slot, c) in &self.touches[d] {
            let s = slot as usize;
            if c > 0 {
                st.pos[s] += c;
            } else {
                st.neg[s] += c;
            }
            if value {
                st.sum[s] -= c;
            }
        }
    }

    fn members(&self, st: &State) -> Vec<u32> {
        let mut chi = vec![false; self.cols];
        for (&c, &v) in self.pivot_cols.iter().zip(&st.values) {
            chi[c] = v;
        }
        for (s, &c) in self.dep_cols.iter().enumerate() {
            chi[c] = st.sum[s] == self.den[s];
        }
        (0..self.cols as u32).filter(|&i| chi[i as usize]).collect()
    }

    /// Returns the found member lists, the node count and whether the
    /// whole tree was covered.
    fn run(&self, budget: u64, split: usize) -> (Vec<Vec<u32>>, u64, bool) {
        let r = self.order.len();
        let split = split.min(r);
        let counter = Counter { nodes: AtomicU64::new(0), budget, stop: AtomicBool::new(false) };
        // Surviving prefixes of length `split`, in lexicographic order.
        let mut prefixes = Vec::new();
        let mut st = self.fresh();
        let mut local = 0u64;
        self.collect_prefixes(&mut st, split, &mut prefixes, &mut local);
        counter.add(local);
        let chunks: Vec<Vec<Vec<u32>>> = prefixes
            .par_iter()
            .map(|prefix| {
                let mut st = self.fresh();
                for &v in prefix {
                    let ok = self.push(&mut st, v);
                    debug_assert!(ok);
                }
                let mut out = Vec::new();
                let mut local = 0u64;
                self.dfs(&mut st, &mut out, &mut local, &counter);
                counter.add(local);
                out
            })
            .collect();
        let nodes = counter.nodes.load(Ordering::Relaxed);
        (chunks.into_iter().flatten().collect(), nodes, !counter.stop.load(Ordering::Relaxed))
    }

    fn collect_prefixes(&self, st: &mut State, split: usize, out: &mut Vec<Vec<bool>>, nodes: &mut u64) {
        if st.values.len() == split {
            out.push(st.values.clone());
            return;
        }
        for v in [false, true] {
            *nodes += 1;
            if self.push(st, v) {
                self.collect_prefixes(st, split, out, nodes);
            }
            self.pop(st);
        }
    }

    fn dfs(&self, st: &mut State, out: &mut Vec<Vec<u32>>, local: &mut u64, counter: &Counter) {
        if st.values.len() == self.order.len() {
            out.push(self.members(st));
            return;
        }
        for v in [false, true] {
            *local += 1;
            if *local >= 1 << 14 {
                counter.add(std::mem::take(local));
            }
            if counter.stop.load(Ordering::Relaxed) {
                return;
            }
            if self.push(st, v) {
                self.dfs(st, out, local, counter);
            }
            self.pop(st);
        }
    }
}

struct Counter {
    nodes: AtomicU64,
    budget: u64,
    stop: AtomicBool,
}

impl Counter {
    fn add(&self, n: u64) {
        if self.nodes.fetch_add(n, Ordering::Relaxed) + n >= self.budget {
            self.stop.store(true, Ordering::Relaxed);
        }
    }
}

/// How a classification was checked against the spread definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrossMethod {
    /// Every subset of k-subspaces was tested against every spread.
    BruteForce { subsets: u64, matches: usize },
    /// Each found set meets every spread in x members, and a randomized
    /// local search for sets with constant spread meets found only known sets.
    SpreadMeets { restarts: usize, hits: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub method: CrossMethod,
    pub agreed: bool,
    /// A set on which the two sides disagree.
    pub witness: Option<KSet>,
}

/// Subset counts up to this size are brute-forced.
const BRUTE_FORCE_LIMIT: usize = 30;

/// Compares a complete classification with the sets that meet every spread
/// of an exhaustive list in a constant number of members.
pub fn cross_validate(run: &ClassificationRun, spreads: &SpreadList, seed: u64) -> Result<CrossCheck, SearchError> {
    if !run.exhaustive {
        return Err(SearchError::NotExhaustive("classification"));
    }
    if !spreads.exhaustive {
        return Err(SearchError::NotExhaustive("spread list"));
    }
    let (g, k) = (run.geometry, run.k);
    if spreads.spreads.iter().any(|s| s.geometry() != g || s.k() != k) {
        return Err(SearchError::SpreadMismatch);
    }
    let count = g.table(k)?.len();
    if count <= BRUTE_FORCE_LIMIT {
        Ok(brute_force(run, spreads, count))
    } else {
        Ok(spread_meets(run, spreads, count, seed))
    }
}

fn mask_of(members: &[u32]) -> u64 {
    members.iter().fold(0, |m, &i| m | 1 << i)
}

fn brute_force(run: &ClassificationRun, spreads: &SpreadList, count: usize) -> CrossCheck {
    let masks: Vec<u64> = spreads.spreads.iter().map(|s| mask_of(s.members())).collect();
    let total = 1u64 << count;
    let chunk = 1u64 << 16.min(count);
    let matches: BTreeSet<u64> = (0..total / chunk)
        .into_par_iter()
        .flat_map_iter(|c| {
            let masks = &masks;
            (c * chunk..(c + 1) * chunk).filter(move |&m| {
                let Some((first, rest)) = masks.split_first() else { return true };
                let x = (m & first).count_ones();
                rest.iter().all(|s| (m & s).count_ones() == x)
            })
        })
        .collect();
    let found: BTreeSet<u64> = run.found.iter().map(|l| mask_of(l.members())).collect();
    let witness = matches.symmetric_difference(&found).next().map(|&m| {
        KSet::from_sorted(run.geometry, run.k, (0..count as u32).filter(|i| m >> i & 1 == 1).collect())
    });
    CrossCheck {
        method: CrossMethod::BruteForce { subsets: total, matches: matches.len() },
        agreed: witness.is_none(),
        witness,
    }
}

const HILL_RESTARTS: usize = 400;
const HILL_STEPS: usize = 300;

fn spread_meets(run: &ClassificationRun, spreads: &SpreadList, count: usize, seed: u64) -> CrossCheck {
    let method = |hits| CrossMethod::SpreadMeets { restarts: HILL_RESTARTS, hits };
    // every found set meets every spread in exactly x members
    for l in &run.found {
        let x = l.parameter();
        if spreads.spreads.iter().any(|s| num_rational::BigRational::from_integer(s.meet_count(l.members()).into()) != x)
        {
            return CrossCheck { method: method(0), agreed: false, witness: Some(l.clone()) };
        }
    }
    let mut on: Vec<Vec<u32>> = vec![Vec::new(); count];
    for (j, s) in spreads.spreads.iter().enumerate() {
        for &m in s.members() {
            on[m as usize].push(j as u32);
        }
    }
    let known: BTreeSet<&[u32]> = run.found.iter().map(|l| l.members()).collect();
    let hits: Vec<Option<Vec<u32>>> = (0..HILL_RESTARTS)
        .into_par_iter()
        .map(|i| hill_climb(&on, spreads.spreads.len(), seed.wrapping_add(i as u64)))
        .collect();
    let mut distinct = BTreeSet::new();
    for h in hits.into_iter().flatten() {
        if !known.contains(h.as_slice()) {
            return CrossCheck {
                method: method(distinct.len()),
                agreed: false,
                witness: Some(KSet::from_sorted(run.geometry, run.k, h)),
            };
        }
        distinct.insert(h);
    }
    CrossCheck { method: method(distinct.len()), agreed: true, witness: None }
}

/// Steepest descent on `m * sum c_S^2 - (sum c_S)^2`, which vanishes exactly
/// when every spread meets the set equally often.
fn hill_climb(on: &[Vec<u32>], m: usize, seed: u64) -> Option<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density: f64 = rng.gen_range(0.1..0.9);
    let mut chi: Vec<bool> = (0..on.len()).map(|_| rng.gen_bool(density)).collect();
    let mut c = vec![0i64; m];
    for (i, spreads) in on.iter().enumerate() {
        if chi[i] {
            for &s in spreads {
                c[s as usize] += 1;
            }
        }
    }
    let score = |c: &[i64]| {
        let (sum, sq) = c.iter().fold((0i64, 0i64), |(a, b), &x| (a + x, b + x * x));
        m as i64 * sq - sum * sum
    };
    let mut cur = score(&c);
    for _ in 0..HILL_STEPS {
        if cur == 0 {
            return Some((0..on.len() as u32).filter(|&i| chi[i as usize]).collect());
        }
        let mut best = (i64::MAX, 0usize);
        for (i, spreads) in on.iter().enumerate() {
            let d = if chi[i] { -1 } else { 1 };
            for &s in spreads {
                c[s as usize] += d;
            }
            let v = score(&c);
            for &s in spreads {
                c[s as usize] -= d;
            }
            // random tie-breaking keeps restarts from collapsing together
            if v < best.0 || (v == best.0 && rng.gen_bool(0.5)) {
                best = (v, i);
            }
        }
        let i = if best.0 < cur { best.1 } else { rng.gen_range(0..on.len()) };
        let d = if chi[i] { -1 } else { 1 };
        chi[i] = !chi[i];
        for &s in &on[i] {
            c[s as usize] += d;
        }
        cur = score(&c);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spreads::enumerate_spreads;

    #[test]
    fn pg22_lines() {
        let g = Geometry::projective(2, 2).unwrap();
        let run = classify(g, 1, u64::MAX).unwrap();
        assert!(run.exhaustive);
        // square invertible incidence matrix: every subset qualifies
        assert_eq!(run.rank(), 7);
        assert_eq!(run.found.len(), 128);
    }

    #[test]
    fn ag32_lines() {
        let g = Geometry::affine(3, 2).unwrap();
        let run = classify(g, 1, u64::MAX).unwrap();
        assert!(run.exhaustive && run.rank() == 8);
        let xs: BTreeSet<String> = run.found.iter().map(|l| l.parameter().to_string()).collect();
        assert!(!xs.contains("2"));
        let spreads = enumerate_spreads(g, 1, usize::MAX).unwrap();
        let cc = cross_validate(&run, &spreads, 1).unwrap();
        assert!(cc.agreed, "{cc:?}");
    }

    #[test]
    fn budget_stops_early() {
        let g = Geometry::projective(3, 2).unwrap();
        let run = classify(g, 1, 10).unwrap();
        assert!(!run.exhaustive);
        let full = classify(g, 1, u64::MAX).unwrap();
        assert!(full.exhaustive);
    }

    #[test]
    fn column_order_does_not_change_the_answer() {
        let g = Geometry::affine(3, 2).unwrap();
        let a = classify(g, 1, u64::MAX).unwrap();
        let order: Vec<usize> = (0..28).rev().collect();
        let b = classify_with(g, 1, &SearchOptions { column_order: Some(order), ..SearchOptions::new(u64::MAX) }).unwrap();
        assert_ne!(a.pivots, b.pivots);
        assert_eq!(a.found, b.found);
    }
}
