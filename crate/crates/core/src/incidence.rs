//! Point-subspace incidence matrices and exact linear algebra over the
//! rationals.
//!
//! Elimination is fraction-free: rows are cleared to integers, reduced with
//! Bareiss' algorithm, back-substituted with content normalization, and only
//! then read off as a rational reduced row-echelon form. The row space of an
//! incidence matrix is summarized by a [`RowSpace`], which expresses every
//! non-pivot coordinate of a row-space vector as an integer combination of
//! the pivot coordinates.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Geometry, GeometryError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncidenceError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("vector of length {got} does not match {expected} columns")]
    Length { expected: usize, got: usize },
    #[error("column order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("dependency coefficients exceed 64-bit range")]
    Overflow,
}

/// Dense matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> ExactMatrix {
        assert_eq!(data.len(), rows * cols);
        ExactMatrix { rows, cols, data }
    }

    pub fn from_integers(rows: usize, cols: usize, data: &[i64]) -> ExactMatrix {
        ExactMatrix::new(rows, cols, data.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }

    pub fn identity(n: usize) -> ExactMatrix {
        let mut data = vec![BigRational::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigRational::one();
        }
        ExactMatrix::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    /// Rows scaled to primitive integer vectors, columns taken in `order`.
    fn integer_rows(&self, order: &[usize]) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let den = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                order.iter().map(|&j| (&row[j] * &den).to_integer()).collect()
            })
            .collect()
    }

    fn echelon(&self, order: &[usize]) -> Echelon {
        Echelon::compute(self.integer_rows(order))
    }

    fn natural_order(&self) -> Vec<usize> {
        (0..self.cols).collect()
    }

    pub fn rank(&self) -> usize {
        self.echelon(&self.natural_order()).pivots.len()
    }

    /// Reduced row-echelon form (zero rows dropped) and its pivot columns.
    pub fn rref(&self) -> (ExactMatrix, Vec<usize>) {
        let e = self.echelon(&self.natural_order());
        let r = e.pivots.len();
        let mut data = Vec::with_capacity(r * self.cols);
        for (row, &p) in e.rows.iter().zip(&e.pivots) {
            for x in row {
                data.push(BigRational::new(x.clone(), row[p].clone()));
            }
        }
        (ExactMatrix::new(r, self.cols, data), e.pivots)
    }

    /// Basis of `{v : M v = 0}`, one vector per non-pivot column.
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        RowSpace::from_echelon(self.cols, self.echelon(&self.natural_order()), None).kernel_basis()
    }

    /// Pivot columns of the reduced form: the first `rank` columns, in index
    /// order, that are linearly independent as columns.
    pub fn independent_columns(&self) -> Vec<usize> {
        self.echelon(&self.natural_order()).pivots
    }
}

/// Integer echelon form: row `i` has its leading entry in column
/// `pivots[i]`, and every pivot column is zero outside its own row.
struct Echelon {
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

fn make_primitive(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in row.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return;
            }
        }
    }
    if g > BigInt::one() {
        for x in row.iter_mut() {
            *x /= &g;
        }
    }
}

impl Echelon {
    fn compute(mut a: Vec<Vec<BigInt>>) -> Echelon {
        let m = a.len();
        let cols = a.first().map_or(0, |r| r.len());
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        // Bareiss: every division below is exact.
        for c in 0..cols {
            if r == m {
                break;
            }
            let Some(sel) = (r..m).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(r, sel);
            let (top, rest) = a.split_at_mut(r + 1);
            let prow = &top[r];
            let pv = &prow[c];
            rest.par_iter_mut().for_each(|row| {
                let f = std::mem::take(&mut row[c]);
                for j in c + 1..cols {
                    let v = pv * &row[j] - &f * &prow[j];
                    debug_assert!((&v % &prev).is_zero());
                    row[j] = v / &prev;
                }
            });
            prev = pv.clone();
            pivots.push(c);
            r += 1;
        }
        a.truncate(r);
        for row in a.iter_mut() {
            make_primitive(row);
        }
        // Clear above each pivot, bottom-up.
        for j in (0..r).rev() {
            let pc = pivots[j];
            let (top, bottom) = a.split_at_mut(j);
            let prow = &bottom[0];
            top.par_iter_mut().for_each(|row| {
                if row[pc].is_zero() {
                    return;
                }
                let f = row[pc].clone();
                let pv = &prow[pc];
                for (x, y) in row.iter_mut().zip(prow) {
                    *x = pv * &*x - &f * y;
                }
                make_primitive(row);
            });
        }
        for (row, &p) in a.iter_mut().zip(&pivots) {
            if row[p].is_negative() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        Echelon { rows: a, pivots }
    }
}

/// How a non-pivot coordinate depends on the pivot coordinates:
/// `den * v[column] = sum(coef * v[pivots[i]])` for every row-space vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependency {
    pub column: usize,
    pub den: i64,
    /// `(pivot index, coefficient)`, pivot index into [`RowSpace::pivots`].
    pub terms: Vec<(usize, i64)>,
}

/// The row space of a matrix, in the coordinates of its columns.
#[derive(Debug, Clone)]
pub struct RowSpace {
    cols: usize,
    pivots: Vec<usize>,
    rows: Vec<Vec<BigInt>>,
    deps: Option<Vec<Dependency>>,
}

impl RowSpace {
    pub fn new(m: &ExactMatrix) -> RowSpace {
        RowSpace::from_echelon(m.cols, m.echelon(&m.natural_order()), None)
    }

    /// Row space computed with the columns eliminated in the given order, so
    /// the pivots are the first independent columns of that order.
    pub fn with_column_order(m: &ExactMatrix, order: &[usize]) -> Result<RowSpace, IncidenceError> {
        let mut seen = vec![false; m.cols];
        if order.len() != m.cols || order.iter().any(|&j| j >= m.cols || std::mem::replace(&mut seen[j], true)) {
            return Err(IncidenceError::BadOrder(m.cols));
        }
        Ok(RowSpace::from_echelon(m.cols, m.echelon(order), Some(order)))
    }

    fn from_echelon(cols: usize, e: Echelon, order: Option<&[usize]>) -> RowSpace {
        let Echelon { rows, pivots } = e;
        let (rows, pivots) = match order {
            None => (rows, pivots),
            Some(order) => {
                let rows = rows
                    .into_iter()
                    .map(|r| {
                        let mut out = vec![BigInt::zero(); cols];
                        for (x, &j) in r.into_iter().zip(order) {
                            out[j] = x;
                        }
                        out
                    })
                    .collect();
                (rows, pivots.into_iter().map(|p| order[p]).collect())
            }
        };
        let mut rs = RowSpace { cols, pivots, rows, deps: None };
        rs.deps = rs.integer_dependencies();
        rs
    }

    fn integer_dependencies(&self) -> Option<Vec<Dependency>> {
        let is_pivot = self.pivot_mask();
        let mut out = Vec::new();
        for j in (0..self.cols).filter(|&j| !is_pivot[j]) {
            let mut den = BigInt::one();
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                if !row[j].is_zero() {
                    let g = row[j].gcd(&row[p]);
                    den = den.lcm(&(&row[p] / g));
                }
            }
            let mut terms = Vec::new();
            for (i, (row, &p)) in self.rows.iter().zip(&self.pivots).enumerate() {
                if !row[j].is_zero() {
                    let c = &row[j] * &den / &row[p];
                    terms.push((i, c.to_i64()?));
                }
            }
            // Bounds every partial sum of a 0/1 evaluation.
            let total: i128 = terms.iter().map(|&(_, c)| (c as i128).abs()).sum();
            if total > i64::MAX as i128 {
                return None;
            }
            out.push(Dependency { column: j, den: den.to_i64()?, terms });
        }
        Some(out)
    }

    fn pivot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.cols];
        for &p in &self.pivots {
            mask[p] = true;
        }
        mask
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Integer dependencies of the non-pivot columns, ascending by column.
    pub fn dependencies(&self) -> Result<&[Dependency], IncidenceError> {
        self.deps.as_deref().ok_or(IncidenceError::Overflow)
    }

    /// Entry `(i, j)` of the reduced row-echelon basis.
    pub fn rref_entry(&self, i: usize, j: usize) -> BigRational {
        BigRational::new(self.rows[i][j].clone(), self.rows[i][self.pivots[i]].clone())
    }

    /// Basis of the orthogonal complement of the row space.
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let is_pivot = self.pivot_mask();
        (0..self.cols)
            .filter(|&j| !is_pivot[j])
            .map(|j| {
                let mut w = vec![BigRational::zero(); self.cols];
                w[j] = BigRational::one();
                for (i, &p) in self.pivots.iter().enumerate() {
                    w[p] = -self.rref_entry(i, j);
                }
                w
            })
            .collect()
    }

    /// The unique row-space vector with the given values on the pivots.
    pub fn extend(&self, pivot_values: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(pivot_values.len(), self.pivots.len());
        let mut v = vec![BigRational::zero(); self.cols];
        for (i, x) in pivot_values.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                if !self.rows[i][j].is_zero() {
                    v[j] += x * self.rref_entry(i, j);
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[BigRational]) -> Result<bool, IncidenceError> {
        if v.len() != self.cols {
            return Err(IncidenceError::Length { expected: self.cols, got: v.len() });
        }
        let pv: Vec<BigRational> = self.pivots.iter().map(|&p| v[p].clone()).collect();
        Ok(self.extend(&pv) == v)
    }

    /// Membership of a 0/1 vector. On failure returns the smallest column
    /// whose value is not the one forced by the pivot coordinates.
    pub fn contains_01(&self, v: &[bool]) -> Result<Result<(), usize>, IncidenceError> {
        if v.len() != self.cols {
            return Err(IncidenceError::Length { expected: self.cols, got: v.len() });
        }
        match &self.deps {
            Some(deps) => {
                for d in deps {
                    let s: i64 = d.terms.iter().filter(|&&(i, _)| v[self.pivots[i]]).map(|&(_, c)| c).sum();
                    if s != if v[d.column] { d.den } else { 0 } {
                        return Ok(Err(d.column));
                    }
                }
                Ok(Ok(()))
            }
            None => {
                let r: Vec<BigRational> = v.iter().map(|&b| BigRational::from_integer((b as i64).into())).collect();
                let pv: Vec<BigRational> = self.pivots.iter().map(|&p| r[p].clone()).collect();
                let ext = self.extend(&pv);
                Ok(match (0..self.cols).find(|&j| ext[j] != r[j]) {
                    Some(j) => Err(j),
                    None => Ok(()),
                })
            }
        }
    }

    /// Every column whose value is not the one forced by the pivot
    /// coordinates, ascending; empty iff the 0/1 vector is in the row space.
    pub fn violations_01(&self, v: &[bool]) -> Result<Vec<usize>, IncidenceError> {
        if v.len() != self.cols {
            return Err(IncidenceError::Length { expected: self.cols, got: v.len() });
        }
        Ok(match &self.deps {
            Some(deps) => deps
                .iter()
                .filter(|d| {
                    let s: i64 = d.terms.iter().filter(|&&(i, _)| v[self.pivots[i]]).map(|&(_, c)| c).sum();
                    s != if v[d.column] { d.den } else { 0 }
                })
                .map(|d| d.column)
                .collect(),
            None => {
                let r: Vec<BigRational> = v.iter().map(|&b| BigRational::from_integer((b as i64).into())).collect();
                let pv: Vec<BigRational> = self.pivots.iter().map(|&p| r[p].clone()).collect();
                let ext = self.extend(&pv);
                (0..self.cols).filter(|&j| ext[j] != r[j]).collect()
            }
        })
    }

    /// Independent membership test: `v` is orthogonal to every kernel vector.
    pub fn orthogonal_to_kernel(&self, v: &[BigRational]) -> bool {
        self.kernel_basis()
            .iter()
            .all(|w| w.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b).is_zero())
    }
}

/// The 0/1 matrix with rows indexed by points and columns by k-subspaces.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    geometry: Geometry,
    k: usize,
    points: usize,
    col_points: Vec<Vec<u32>>,
}

fn row_spaces() -> &'static Mutex<HashMap<(Geometry, usize), Arc<RowSpace>>> {
    static CACHE: OnceLock<Mutex<HashMap<(Geometry, usize), Arc<RowSpace>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl IncidenceMatrix {
    pub fn build(g: Geometry, k: usize) -> Result<IncidenceMatrix, IncidenceError> {
        let table = g.table(k)?;
        let col_points = (0..table.len() as u32).map(|c| table.points(c).iter().collect()).collect();
        Ok(IncidenceMatrix { geometry: g, k, points: g.point_count(), col_points })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.points
    }

    pub fn cols(&self) -> usize {
        self.col_points.len()
    }

    pub fn get(&self, point: u32, col: u32) -> bool {
        self.col_points[col as usize].binary_search(&point).is_ok()
    }

    /// Point IDs on column `col`, ascending.
    pub fn column(&self, col: u32) -> &[u32] {
        &self.col_points[col as usize]
    }

    pub fn to_exact(&self) -> ExactMatrix {
        let cols = self.cols();
        let mut data = vec![BigRational::zero(); self.points * cols];
        for (c, pts) in self.col_points.iter().enumerate() {
            for &p in pts {
                data[p as usize * cols + c] = BigRational::one();
            }
        }
        ExactMatrix::new(self.points, cols, data)
    }

    /// Cached row space, pivots in subspace-ID order.
    pub fn row_space(&self) -> Arc<RowSpace> {
        let key = (self.geometry, self.k);
        if let Some(rs) = row_spaces().lock().unwrap().get(&key) {
            return rs.clone();
        }
        let rs = Arc::new(RowSpace::new(&self.to_exact()));
        row_spaces().lock().unwrap().entry(key).or_insert(rs).clone()
    }

    pub fn rank(&self) -> usize {
        self.row_space().rank()
    }

    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        self.row_space().kernel_basis()
    }

    pub fn independent_columns(&self) -> Vec<usize> {
        self.row_space().pivots().to_vec()
    }

    pub fn in_row_space(&self, v: &[bool]) -> Result<bool, IncidenceError> {
        Ok(self.row_space().contains_01(v)?.is_ok())
    }
}

/// Cached row space of the point-(k-subspace) incidence matrix of `g`.
pub fn row_space(g: Geometry, k: usize) -> Result<Arc<RowSpace>, IncidenceError> {
    if let Some(rs) = row_spaces().lock().unwrap().get(&(g, k)) {
        return Ok(rs.clone());
    }
    Ok(IncidenceMatrix::build(g, k)?.row_space())
}
