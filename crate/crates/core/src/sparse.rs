//! Sparse linear algebra: CSR matrices, ILU(0) and Jacobi preconditioning,
//! restarted GMRES and preconditioned CG.
//!
//! Everything here is deterministic: fixed iteration orders, no pivoting, no
//! unordered reductions.

use crate::error::{Error, LinearSolveFailure};
use crate::scalar::Real;

/// Square sparse matrix in compressed sparse row form.
///
/// Column indices are sorted within each row and duplicate entries are merged
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from per-row entry lists; entries are sorted by column and
    /// duplicates summed.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(rows.len(), n, "row count mismatch");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, v)) = iter.next() {
                debug_assert!(c < n, "column {c} out of bounds");
                let mut acc = v;
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 == c {
                        acc = acc + v2;
                        iter.next();
                    } else {
                        break;
                    }
                }
                cols.push(c);
                vals.push(acc);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// Entry `(i, j)`, zero if absent from the pattern.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc = acc + v * x[c];
            }
            y[i] = acc;
        }
    }

    /// Dense copy, for small-matrix checks.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[i][c] = v;
            }
        }
        dense
    }
}

/// Application of an approximate inverse `z ~ M^-1 r`.
pub trait Preconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

/// No preconditioning.
pub struct IdentityPreconditioner;

impl<T: Real> Preconditioner<T> for IdentityPreconditioner {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal (Jacobi) preconditioner.
pub struct JacobiPreconditioner<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> JacobiPreconditioner<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, Error> {
        let mut inv_diag = Vec::with_capacity(a.n());
        for i in 0..a.n() {
            let d = a.get(i, i);
            if d == T::zero() {
                return Err(Error::ZeroPivot { row: i });
            }
            inv_diag.push(d.recip());
        }
        Ok(Self { inv_diag })
    }
}

impl<T: Real> Preconditioner<T> for JacobiPreconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((z, &r), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// ILU(0): incomplete LU factorization restricted to the sparsity pattern of
/// the input matrix (no fill-in), cf. Saad, Iterative Methods for Sparse
/// Linear Systems, section 10.3.
pub struct Ilu0<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Combined factors: strictly lower part holds L (unit diagonal implied),
    /// diagonal and upper part hold U.
    vals: Vec<T>,
    diag: Vec<usize>,
}

/// Computes the ILU(0) factorization of `a`.
///
/// Fails with [`Error::ZeroPivot`] when a pivot vanishes (relative to the
/// largest diagonal entry); callers fall back to Jacobi preconditioning.
pub fn ilu0<T: Real>(a: &CsrMatrix<T>) -> Result<Ilu0<T>, Error> {
    let n = a.n();
    let row_ptr = a.row_ptr.clone();
    let cols = a.cols.clone();
    let mut vals = a.vals.clone();

    let mut diag = vec![usize::MAX; n];
    for i in 0..n {
        for idx in row_ptr[i]..row_ptr[i + 1] {
            if cols[idx] == i {
                diag[i] = idx;
            }
        }
        if diag[i] == usize::MAX {
            return Err(Error::ZeroPivot { row: i });
        }
    }
    let max_diag = (0..n)
        .map(|i| vals[diag[i]].abs())
        .fold(T::zero(), T::max);
    let tiny = T::epsilon() * max_diag.max(T::min_positive_value());

    for i in 0..n {
        let (row_lo, row_hi) = (row_ptr[i], row_ptr[i + 1]);
        for idx in row_lo..row_hi {
            let k = cols[idx];
            if k >= i {
                break;
            }
            let pivot = vals[diag[k]];
            if pivot.abs() <= tiny {
                return Err(Error::ZeroPivot { row: k });
            }
            let factor = vals[idx] / pivot;
            vals[idx] = factor;
            // subtract factor * (row k, columns past k) within the pattern of row i
            for k_idx in diag[k] + 1..row_ptr[k + 1] {
                let j = cols[k_idx];
                if let Ok(pos) = cols[row_lo..row_hi].binary_search(&j) {
                    let pos = row_lo + pos;
                    vals[pos] = vals[pos] - factor * vals[k_idx];
                }
            }
        }
        if vals[diag[i]].abs() <= tiny {
            return Err(Error::ZeroPivot { row: i });
        }
    }

    Ok(Ilu0 {
        n,
        row_ptr,
        cols,
        vals,
        diag,
    })
}

impl<T: Real> Preconditioner<T> for Ilu0<T> {
    /// Solves `L U z = r` by forward and back substitution.
    fn apply(&self, r: &[T], z: &mut [T]) {
        debug_assert_eq!(r.len(), self.n);
        // forward: L y = r (unit diagonal)
        for i in 0..self.n {
            let mut acc = r[i];
            for idx in self.row_ptr[i]..self.diag[i] {
                acc = acc - self.vals[idx] * z[self.cols[idx]];
            }
            z[i] = acc;
        }
        // backward: U x = y
        for i in (0..self.n).rev() {
            let mut acc = z[i];
            for idx in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc = acc - self.vals[idx] * z[self.cols[idx]];
            }
            z[i] = acc / self.vals[self.diag[i]];
        }
    }
}

/// GMRES parameters.
#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    /// Relative residual target `||Ax - b|| <= tol * ||b||`.
    pub tol: T,
    /// Restart length.
    pub restart: usize,
    /// Total inner-iteration budget.
    pub max_iters: usize,
}

/// Converged GMRES result.
#[derive(Debug, Clone)]
pub struct GmresSolution<T> {
    pub x: Vec<T>,
    /// Total inner iterations performed.
    pub iterations: usize,
    /// Final true residual norm.
    pub residual: T,
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).fold(T::zero(), |a, b| a + b).sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b` with initial guess zero.
///
/// Right preconditioning keeps the monitored residual equal to the true
/// residual `b - A x`.
pub fn gmres<T: Real, M: Preconditioner<T>>(
    a: &CsrMatrix<T>,
    b: &[T],
    m: &M,
    opts: &GmresOptions<T>,
) -> Result<GmresSolution<T>, Error> {
    let n = a.n();
    assert_eq!(b.len(), n, "dimension mismatch");
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok(GmresSolution {
            x: vec![T::zero(); n],
            iterations: 0,
            residual: T::zero(),
        });
    }
    let target = opts.tol * bnorm;
    let restart = opts.restart.max(1);

    let mut x = vec![T::zero(); n];
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut best_res = T::infinity();
    let mut best_x = x.clone();

    let mut r = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];

    'cycles: loop {
        // true residual r = b - A x
        a.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta <= target {
            return Ok(GmresSolution {
                x,
                iterations,
                residual: beta,
            });
        }
        if beta < best_res {
            best_res = beta;
            best_x.copy_from_slice(&x);
        }
        if iterations >= opts.max_iters {
            break 'cycles;
        }

        let mut basis: Vec<Vec<T>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|&v| v / beta).collect());
        let mut h = vec![vec![T::zero(); restart]; restart + 1];
        let mut cs = vec![T::zero(); restart];
        let mut sn = vec![T::zero(); restart];
        let mut g = vec![T::zero(); restart + 1];
        g[0] = beta;

        let mut k_used = 0;
        for j in 0..restart {
            iterations += 1;
            k_used = j + 1;
            m.apply(&basis[j], &mut z);
            a.matvec(&z, &mut w);
            // modified Gram-Schmidt
            for i in 0..=j {
                let hij = w
                    .iter()
                    .zip(&basis[i])
                    .map(|(&a, &b)| a * b)
                    .fold(T::zero(), |acc, v| acc + v);
                h[i][j] = hij;
                for (wv, &bv) in w.iter_mut().zip(&basis[i]) {
                    *wv = *wv - hij * bv;
                }
            }
            let hnext = norm2(&w);
            h[j + 1][j] = hnext;
            // previously computed Givens rotations
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            // new rotation zeroing h[j+1][j]
            let denom = (h[j][j] * h[j][j] + hnext * hnext).sqrt();
            if denom == T::zero() {
                cs[j] = T::one();
                sn[j] = T::zero();
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = hnext / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = T::zero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            let res_est = g[j + 1].abs();
            history.push(res_est.to_f64().unwrap_or(f64::NAN));

            let breakdown = hnext <= T::epsilon() * beta;
            if res_est <= target || breakdown || iterations >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|&v| v / hnext).collect());
        }

        // back substitution for y in the k_used x k_used system
        let k = k_used;
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for jj in i + 1..k {
                acc = acc - h[i][jj] * y[jj];
            }
            y[i] = acc / h[i][i];
        }
        // x += M^-1 (V y)
        for (i, wv) in w.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (jj, yv) in y.iter().enumerate() {
                acc = acc + *yv * basis[jj][i];
            }
            *wv = acc;
        }
        m.apply(&w, &mut z);
        for i in 0..n {
            x[i] = x[i] + z[i];
        }
    }

    // final bookkeeping for the failure report
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let res = norm2(&r);
    if res <= target {
        return Ok(GmresSolution {
            x,
            iterations,
            residual: res,
        });
    }
    if res < best_res {
        best_res = res;
        best_x.copy_from_slice(&x);
    }
    Err(Error::LinearSolve(Box::new(LinearSolveFailure {
        iterations,
        residual: (best_res / bnorm).to_f64().unwrap_or(f64::NAN),
        history,
        best: best_x
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect(),
    })))
}

/// Preconditioned conjugate gradient for symmetric positive (semi-)definite
/// systems, with optional deflation of the constant null space.
///
/// With `deflate_mean` the right-hand side and every preconditioned residual
/// are projected onto the mean-zero subspace, which handles the singular
/// pure-Neumann/periodic Poisson operator without pinning a node.
pub fn pcg<T: Real, M: Preconditioner<T>>(
    a: &CsrMatrix<T>,
    b: &[T],
    m: &M,
    rel_tol: T,
    abs_floor: T,
    max_iters: usize,
    deflate_mean: bool,
) -> Result<Vec<T>, Error> {
    let n = a.n();
    assert_eq!(b.len(), n, "dimension mismatch");
    let subtract_mean = |v: &mut [T]| {
        let mean = crate::scalar::kahan_sum(v.iter().copied()) / T::from_usize(n).unwrap();
        for x in v.iter_mut() {
            *x = *x - mean;
        }
    };

    let mut b = b.to_vec();
    if deflate_mean {
        subtract_mean(&mut b);
    }
    let bnorm = norm2(&b);
    let target = (rel_tol * bnorm).max(abs_floor);

    let mut x = vec![T::zero(); n];
    let mut r = b.clone();
    if norm2(&r) <= target {
        return Ok(x);
    }
    let mut z = vec![T::zero(); n];
    m.apply(&r, &mut z);
    if deflate_mean {
        subtract_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = r
        .iter()
        .zip(&z)
        .map(|(&a, &b)| a * b)
        .fold(T::zero(), |acc, v| acc + v);
    let mut ap = vec![T::zero(); n];
    let mut history = Vec::new();

    for iter in 0..max_iters {
        a.matvec(&p, &mut ap);
        let pap = p
            .iter()
            .zip(&ap)
            .map(|(&a, &b)| a * b)
            .fold(T::zero(), |acc, v| acc + v);
        if pap <= T::zero() {
            // loss of positive definiteness, typically round-off on the
            // deflated subspace; stop with the current iterate
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        // periodic true-residual refresh against drift
        if iter % 64 == 63 {
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
        }
        let rnorm = norm2(&r);
        history.push((rnorm / bnorm.max(T::min_positive_value()))
            .to_f64()
            .unwrap_or(f64::NAN));
        if rnorm <= target {
            return Ok(x);
        }
        m.apply(&r, &mut z);
        if deflate_mean {
            subtract_mean(&mut z);
        }
        let rz_new = r
            .iter()
            .zip(&z)
            .map(|(&a, &b)| a * b)
            .fold(T::zero(), |acc, v| acc + v);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let mut rr = vec![T::zero(); n];
    a.matvec(&x, &mut rr);
    for i in 0..n {
        rr[i] = b[i] - rr[i];
    }
    let res = norm2(&rr);
    if res <= target {
        return Ok(x);
    }
    Err(Error::LinearSolve(Box::new(LinearSolveFailure {
        iterations: max_iters,
        residual: (res / bnorm.max(T::min_positive_value()))
            .to_f64()
            .unwrap_or(f64::NAN),
        history,
        best: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts(tol: f64) -> GmresOptions<f64> {
        GmresOptions {
            tol,
            restart: 50,
            max_iters: 500,
        }
    }

    /// 5-point Laplacian with homogeneous Dirichlet data on an n x n grid.
    fn dirichlet_laplacian(n: usize) -> CsrMatrix<f64> {
        let size = n * n;
        let mut rows = vec![Vec::new(); size];
        for k in 0..n {
            for j in 0..n {
                let p = k * n + j;
                rows[p].push((p, 4.0));
                let mut neighbor = |q: usize| rows[p].push((q, -1.0));
                if j > 0 {
                    neighbor(p - 1);
                }
                if j + 1 < n {
                    neighbor(p + 1);
                }
                if k > 0 {
                    neighbor(p - n);
                }
                if k + 1 < n {
                    neighbor(p + n);
                }
            }
        }
        CsrMatrix::from_rows(size, rows)
    }

    #[test]
    fn csr_sorts_and_merges() {
        let a = CsrMatrix::from_rows(2, vec![vec![(1, 2.0), (0, 1.0), (1, 3.0)], vec![(1, 4.0)]]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 5.0);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![11.0, 8.0]);
    }

    #[test]
    fn ilu0_of_diagonal_is_exact_inverse() {
        let a = CsrMatrix::from_rows(3, vec![vec![(0, 2.0)], vec![(1, 4.0)], vec![(2, -5.0)]]);
        let m = ilu0(&a).unwrap();
        let mut z = vec![0.0; 3];
        m.apply(&[2.0, 4.0, -5.0], &mut z);
        assert_eq!(z, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn ilu0_of_triangular_matrix_is_exact() {
        // lower triangular: no fill is dropped, so LU = A and the
        // preconditioned system is the identity; GMRES needs one iteration.
        let a = CsrMatrix::from_rows(
            3,
            vec![
                vec![(0, 2.0)],
                vec![(0, 1.0), (1, 3.0)],
                vec![(0, -1.0), (1, 2.0), (2, 4.0)],
            ],
        );
        let m = ilu0(&a).unwrap();
        let b = vec![2.0, 7.0, 9.0];
        let sol = gmres(&a, &b, &m, &opts(1e-12)).unwrap();
        assert_eq!(sol.iterations, 1);
        let mut y = vec![0.0; 3];
        a.matvec(&sol.x, &mut y);
        for (a, b) in y.iter().zip(&b) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ilu0_reports_zero_pivot() {
        let a = CsrMatrix::from_rows(2, vec![vec![(0, 0.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        assert!(matches!(ilu0(&a), Err(Error::ZeroPivot { .. })));
    }

    #[test]
    fn ilu0_preconditioning_reduces_gmres_iterations() {
        let a = dirichlet_laplacian(4);
        let b: Vec<f64> = (0..a.n()).map(|i| 1.0 + (i as f64) * 0.1).collect();
        let plain = gmres(&a, &b, &IdentityPreconditioner, &opts(1e-10)).unwrap();
        let m = ilu0(&a).unwrap();
        let pre = gmres(&a, &b, &m, &opts(1e-10)).unwrap();
        assert!(
            pre.iterations < plain.iterations,
            "ILU(0) took {} iterations vs {} unpreconditioned",
            pre.iterations,
            plain.iterations
        );
    }

    #[test]
    fn ilu0_of_symmetric_matrix_gives_symmetric_preconditioner() {
        // For a symmetric pattern and matrix, ILU(0) yields M = L D L^T; CG
        // relies on this. Check M z = e_i columns for symmetry.
        let a = dirichlet_laplacian(3);
        let m = ilu0(&a).unwrap();
        let n = a.n();
        let mut columns = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let mut z = vec![0.0; n];
            m.apply(&e, &mut z);
            columns.push(z);
        }
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (columns[i][j] - columns[j][i]).abs() < 1e-12,
                    "M^-1 not symmetric at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn gmres_zero_rhs_returns_zero_in_zero_iterations() {
        let a = dirichlet_laplacian(3);
        let sol = gmres(&a, &vec![0.0; a.n()], &IdentityPreconditioner, &opts(1e-8)).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gmres_identity_converges_in_one_iteration() {
        let n = 7;
        let a = CsrMatrix::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect());
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let sol = gmres(&a, &b, &IdentityPreconditioner, &opts(1e-12)).unwrap();
        assert_eq!(sol.iterations, 1);
        for (x, b) in sol.x.iter().zip(&b) {
            assert!((x - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_solves_random_sparse_system_to_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let mut rows = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, 5.0 + rng.gen::<f64>()));
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j != i {
                    row.push((j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let a = CsrMatrix::from_rows(n, rows);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = gmres(&a, &b, &IdentityPreconditioner, &opts(1e-6)).unwrap();
        // verify the contract by direct multiplication
        let mut y = vec![0.0; n];
        a.matvec(&sol.x, &mut y);
        let res: f64 = y
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-6 * bnorm);
    }

    #[test]
    fn gmres_reports_failure_with_history_and_best_iterate() {
        let a = dirichlet_laplacian(8);
        let b = vec![1.0; a.n()];
        let out = gmres(
            &a,
            &b,
            &IdentityPreconditioner,
            &GmresOptions {
                tol: 1e-14,
                restart: 3,
                max_iters: 4,
            },
        );
        match out {
            Err(Error::LinearSolve(fail)) => {
                assert_eq!(fail.best.len(), a.n());
                assert!(!fail.history.is_empty());
                assert!(fail.residual > 0.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn pcg_solves_spd_system() {
        let a = dirichlet_laplacian(6);
        let b: Vec<f64> = (0..a.n()).map(|i| (i as f64).sin()).collect();
        let m = ilu0(&a).unwrap();
        let x = pcg(&a, &b, &m, 1e-12, 1e-300, 1000, false).unwrap();
        let mut y = vec![0.0; a.n()];
        a.matvec(&x, &mut y);
        let res: f64 = y
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-11 * bnorm);
    }
}
