//! Compressed sparse row storage and finite-element assembly.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Square sparse matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicates are summed in input order, so the result depends only on
    /// the triplet sequence.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let k = fill[i];
            cols[k] = j;
            vals[k] = v;
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::with_capacity(triplets.len() / 3);
        let mut val = Vec::with_capacity(triplets.len() / 3);
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            // stable: equal columns keep input order for the summation
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                col.push(c);
                val.push(s);
            }
            row_ptr.push(col.len());
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.val[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (in the given order) and the coupling
    /// block `A[keep, rest]` applied to `x_rest`.
    pub fn split(&self, keep: &[usize], x_full: &[f64]) -> (CsrMatrix, Vec<f64>) {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        let mut trip = Vec::new();
        let mut coupling = vec![0.0; keep.len()];
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    trip.push((k, pos[j], v));
                } else {
                    coupling[k] += v * x_full[j];
                }
            }
        }
        (CsrMatrix::from_triplets(keep.len(), &trip), coupling)
    }

    /// `TᵀAT` for a block-diagonal orthogonal `T` given as 2×2 blocks acting
    /// on DOF pairs `(2k, 2k+1)`; `None` blocks are the identity.
    pub fn rotate_pairs(&self, blocks: &[Option<[[f64; 2]; 2]>]) -> CsrMatrix {
        let t = |i: usize, j: usize| -> f64 {
            // entry T[i][j]
            if i / 2 != j / 2 {
                return 0.0;
            }
            match blocks[i / 2] {
                Some(b) => b[i % 2][j % 2],
                None => (i == j) as u8 as f64,
            }
        };
        let mut trip = Vec::with_capacity(4 * self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                // (TᵀAT)[p][q] += T[i][p] A[i][j] T[j][q]
                let ps = [i - i % 2, i - i % 2 + 1];
                let qs = [j - j % 2, j - j % 2 + 1];
                for &p in &ps {
                    let tip = t(i, p);
                    if tip == 0.0 {
                        continue;
                    }
                    for &q in &qs {
                        let tjq = t(j, q);
                        if tjq != 0.0 {
                            trip.push((p, q, tip * v * tjq));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n, &trip)
    }
}

/// Assembles `Σ_e P_eᵀ K_e P_e` from element matrices computed in parallel;
/// the scatter runs in element order.
pub fn assemble<const K: usize, F>(exec: Exec, n: usize, elements: usize, local: F) -> CsrMatrix
where
    F: Fn(usize) -> ([usize; K], [[f64; K]; K]) + Sync + Send,
{
    let blocks = par::map_range(exec, elements, local);
    let mut trip = Vec::with_capacity(elements * K * K);
    for (dofs, m) in &blocks {
        for a in 0..K {
            for b in 0..K {
                trip.push((dofs[a], dofs[b], m[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, &trip)
}

/// Sparse Cholesky with a symbolic factorisation reused across numeric
/// refactorisations of matrices sharing the same pattern.
pub struct Cholesky {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// position in the CSR value array of every lower-triangle entry
    source: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
    numeric: Option<Llt<usize, f64>>,
}

impl Cholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        // the lower triangle in CSC is the upper triangle of the CSR rows
        let mut col_ptr = Vec::with_capacity(a.n + 1);
        let mut row_idx = Vec::with_capacity(a.nnz() / 2 + a.n);
        let mut source = Vec::with_capacity(a.nnz() / 2 + a.n);
        col_ptr.push(0);
        for j in 0..a.n {
            for k in a.row_ptr[j]..a.row_ptr[j + 1] {
                if a.col[k] >= j {
                    row_idx.push(a.col[k]);
                    source.push(k);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let sym = SymbolicSparseColMatRef::new_checked(a.n, a.n, &col_ptr, None, &row_idx);
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("symbolic factorisation: {e:?}")))?;
        Ok(Cholesky {
            n: a.n,
            col_ptr,
            row_idx,
            source,
            symbolic,
            numeric: None,
        })
    }

    /// Numeric factorisation of `a` with rows/columns in `pinned` replaced by
    /// their diagonal entry.
    pub fn factor(&mut self, a: &CsrMatrix, pinned: &[bool]) -> Result<()> {
        let mut vals = Vec::with_capacity(self.source.len());
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = a.val[self.source[k]];
                vals.push(if i != j && (pinned[i] || pinned[j]) { 0.0 } else { v });
            }
        }
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(sym, &vals);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("matrix is not positive definite: {e:?}")))?;
        self.numeric = Some(llt);
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let llt = self
            .numeric
            .as_ref()
            .ok_or_else(|| Error::LinearSolve("solve before factor".into()))?;
        let mut x = rhs.to_vec();
        llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(x)
    }
}
