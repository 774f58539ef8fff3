//! Dense matrices over GF(q) and reduced row-echelon form.

use crate::field::{Elem, Field};

/// Row-major matrix of field labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Elem>,
}

impl FqMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Elem>) -> FqMatrix {
        assert_eq!(data.len(), rows * cols);
        FqMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> FqMatrix {
        FqMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> FqMatrix {
        let mut m = FqMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows<R: AsRef<[Elem]>>(cols: usize, rows: &[R]) -> FqMatrix {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols);
            data.extend_from_slice(r.as_ref());
        }
        FqMatrix { rows: rows.len(), cols, data }
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Elem {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn stack(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        FqMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn mul(&self, f: &Field, rhs: &FqMatrix) -> FqMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = FqMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let cur = out.get(i, j);
                    out.set(i, j, f.add(cur, f.mul(a, rhs.get(t, j))));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> FqMatrix {
        let mut out = FqMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Brings the matrix to reduced row-echelon form in place, drops zero
    /// rows, and returns the pivot columns.
    pub fn rref(&mut self, f: &Field) -> Vec<usize> {
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == self.rows {
                break;
            }
            let Some(sel) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if sel != r {
                for j in 0..cols {
                    self.data.swap(sel * cols + j, r * cols + j);
                }
            }
            let inv = f.inv(self.get(r, c)).unwrap();
            for j in c..cols {
                let v = self.get(r, j);
                self.set(r, j, f.mul(v, inv));
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in c..cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        self.rows = r;
        self.data.truncate(r * cols);
        pivots
    }

    pub fn rank(&self, f: &Field) -> usize {
        self.clone().rref(f).len()
    }

    /// Inverse of a square matrix, if it is invertible.
    pub fn inverse(&self, f: &Field) -> Option<FqMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = FqMatrix::zeros(n, 2 * n);
        for i in 0..n {
            aug.data[i * 2 * n..i * 2 * n + n].copy_from_slice(self.row(i));
            aug.data[i * 2 * n + n + i] = 1;
        }
        let pivots = aug.rref(f);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let mut out = FqMatrix::zeros(n, n);
        for i in 0..n {
            out.data[i * n..(i + 1) * n].copy_from_slice(&aug.row(i)[n..]);
        }
        Some(out)
    }

    /// Basis of `{x : self * x = 0}`, returned as rows.
    pub fn null_space(&self, f: &Field) -> FqMatrix {
        let mut m = self.clone();
        let pivots = m.rref(f);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = FqMatrix::zeros(free.len(), self.cols);
        for (k, &fc) in free.iter().enumerate() {
            out.set(k, fc, 1);
            for (i, &pc) in pivots.iter().enumerate() {
                out.set(k, pc, f.neg(m.get(i, fc)));
            }
        }
        out
    }
}

/// Reduces `v` against the rows of a matrix already in RREF with the given
/// pivots; the result is zero iff `v` lies in the row space.
pub fn reduce(f: &Field, rref: &FqMatrix, pivots: &[usize], v: &mut [Elem]) {
    for (i, &c) in pivots.iter().enumerate() {
        let factor = v[c];
        if factor == 0 {
            continue;
        }
        for (x, &y) in v.iter_mut().zip(rref.row(i)) {
            *x = f.sub(*x, f.mul(factor, y));
        }
    }
}

/// Scales a nonzero vector so its first nonzero entry is 1.
pub fn normalize(f: &Field, v: &mut [Elem]) -> bool {
    let Some(&lead) = v.iter().find(|&&x| x != 0) else {
        return false;
    };
    if lead != 1 {
        let inv = f.inv(lead).unwrap();
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_gf3() {
        let f = Field::get(3, 1).unwrap();
        let mut m = FqMatrix::from_rows(3, &[[2, 1, 0], [1, 2, 1], [0, 0, 2]]);
        let pivots = m.rref(f);
        assert_eq!(pivots, vec![0, 2]);
        assert_eq!(m.data, vec![1, 2, 0, 0, 0, 1]);
    }

    #[test]
    fn null_space_is_orthogonal() {
        let f = Field::get(5, 1).unwrap();
        let m = FqMatrix::from_rows(4, &[[1, 2, 3, 4], [0, 1, 1, 2]]);
        let ns = m.null_space(f);
        assert_eq!(ns.rows, 2);
        let prod = m.mul(f, &ns.transpose());
        assert!(prod.data.iter().all(|&x| x == 0));
    }

    #[test]
    fn inverse_round_trip() {
        let f = Field::get(2, 2).unwrap();
        let m = FqMatrix::from_rows(3, &[[1, 2, 0], [0, 3, 1], [1, 0, 1]]);
        let inv = m.inverse(f).unwrap();
        assert_eq!(m.mul(f, &inv), FqMatrix::identity(3));
        let singular = FqMatrix::from_rows(2, &[[1, 2], [2, 3]]);
        assert_eq!(singular.rank(f), 1);
        assert!(singular.inverse(f).is_none());
    }
}
