//! Thin wrappers over faer's sparse factorizations with residual control.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub type Csc = SparseColMat<usize, f64>;

/// Backward-error target for every linear solve.
pub const SOLVE_TOLERANCE: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 4;

/// Build an `n × m` matrix from `(row, col, value)` entries; duplicates are summed.
pub fn csc_from_entries(n: usize, m: usize, entries: &[(usize, usize, f64)]) -> Result<Csc> {
    let trip: Vec<_> = entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(n, m, &trip)
        .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))
}

/// `y = A x`.
pub fn matvec(a: &Csc, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    matvec_into(a, x, &mut y);
    y
}

pub fn matvec_into(a: &Csc, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    let sym = a.symbolic();
    let (cp, ri) = (sym.col_ptr(), sym.row_idx());
    let val = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += val[k] * xj;
        }
    }
}

/// Entries of `A` restricted to rows `rows` and columns `cols`, given as
/// maps from global to local indices.
pub fn submatrix(a: &Csc, rows: &[Option<usize>], nrows: usize, cols: &[Option<usize>], ncols: usize) -> Result<Csc> {
    let sym = a.symbolic();
    let (cp, ri) = (sym.col_ptr(), sym.row_idx());
    let val = a.val();
    let mut entries = Vec::new();
    for j in 0..a.ncols() {
        let Some(lj) = cols[j] else { continue };
        for k in cp[j]..cp[j + 1] {
            if let Some(li) = rows[ri[k]] {
                entries.push((li, lj, val[k]));
            }
        }
    }
    csc_from_entries(nrows, ncols, &entries)
}

pub fn inf_norm(a: &Csc) -> f64 {
    let mut rows = vec![0.0; a.nrows()];
    let sym = a.symbolic();
    let (cp, ri) = (sym.col_ptr(), sym.row_idx());
    for j in 0..a.ncols() {
        for k in cp[j]..cp[j + 1] {
            rows[ri[k]] += a.val()[k].abs();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// A factorized sparse matrix with iterative refinement on every solve.
pub struct Factorized {
    matrix: Csc,
    norm: f64,
    factor: Factor,
}

impl std::fmt::Debug for Factorized {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorized").field("n", &self.matrix.nrows()).finish()
    }
}

impl Factorized {
    /// Sparse Cholesky of a symmetric positive-definite matrix (lower triangle read).
    pub fn cholesky(matrix: Csc) -> Result<Self> {
        let symbolic = SymbolicLlt::try_new(matrix.symbolic(), Side::Lower)
            .map_err(|e| Error::Solver(format!("symbolic Cholesky failed: {e:?}")))?;
        Self::cholesky_with(matrix, &symbolic)
    }

    /// Cholesky reusing a symbolic factorization of an identically patterned matrix.
    pub fn cholesky_with(matrix: Csc, symbolic: &SymbolicLlt<usize>) -> Result<Self> {
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), matrix.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky failed: {e:?}")))?;
        Ok(Factorized { norm: inf_norm(&matrix), matrix, factor: Factor::Llt(llt) })
    }

    /// Sparse LU with partial pivoting, for the indefinite bordered systems.
    pub fn lu(matrix: Csc) -> Result<Self> {
        let lu = matrix.sp_lu().map_err(|e| Error::Solver(format!("LU failed: {e:?}")))?;
        Ok(Factorized { norm: inf_norm(&matrix), matrix, factor: Factor::Lu(lu) })
    }

    pub fn symbolic_cholesky(matrix: &Csc) -> Result<SymbolicLlt<usize>> {
        SymbolicLlt::try_new(matrix.symbolic(), Side::Lower)
            .map_err(|e| Error::Solver(format!("symbolic Cholesky failed: {e:?}")))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Csc {
        &self.matrix
    }

    fn raw_solve(&self, rhs: &mut Mat<f64>) {
        match &self.factor {
            Factor::Llt(f) => f.solve_in_place(rhs.as_mut()),
            Factor::Lu(f) => f.solve_in_place(rhs.as_mut()),
        }
    }

    /// Solve `A x = b`; refines until the normwise backward error
    /// `‖b − Ax‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` is below [`SOLVE_TOLERANCE`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.solve_many(&[b.to_vec()])?;
        Ok(out.pop().unwrap_or_default())
    }

    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        let mut x = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        self.raw_solve(&mut x);
        let mut cols: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
        let mut ax = vec![0.0; n];
        for _ in 0..REFINEMENT_STEPS {
            let mut worst = 0.0f64;
            let mut resid = Mat::<f64>::zeros(n, rhs.len());
            for (j, xj) in cols.iter().enumerate() {
                matvec_into(&self.matrix, xj, &mut ax);
                let mut rmax = 0.0f64;
                for i in 0..n {
                    let r = rhs[j][i] - ax[i];
                    resid[(i, j)] = r;
                    rmax = rmax.max(r.abs());
                }
                let scale = self.norm * max_abs(xj) + max_abs(&rhs[j]);
                if scale > 0.0 {
                    worst = worst.max(rmax / scale);
                }
            }
            if worst <= SOLVE_TOLERANCE * 1e-2 {
                return Ok(cols);
            }
            self.raw_solve(&mut resid);
            for (j, xj) in cols.iter_mut().enumerate() {
                for (i, v) in xj.iter_mut().enumerate() {
                    *v += resid[(i, j)];
                }
            }
        }
        let worst = cols
            .iter()
            .zip(rhs)
            .map(|(xj, bj)| {
                matvec_into(&self.matrix, xj, &mut ax);
                let r = ax.iter().zip(bj).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let scale = self.norm * max_abs(xj) + max_abs(bj);
                if scale > 0.0 {
                    r / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if worst > SOLVE_TOLERANCE {
            return Err(Error::Solver(format!("backward error {worst:e} above {SOLVE_TOLERANCE:e}")));
        }
        Ok(cols)
    }
}
