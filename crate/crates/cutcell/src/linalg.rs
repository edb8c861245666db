//! Sparse matrices and the linear solvers used by the time stepper.

use std::fmt;
use std::io::{self, Write};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    Singular(String),
    NotConverged { iterations: usize, residual: f64 },
    Dimension(String),
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular(why) => write!(f, "singular matrix: {why}"),
            LinalgError::NotConverged { iterations, residual } => {
                write!(f, "iterative solver stopped after {iterations} iterations at relative residual {residual:.3e}")
            }
            LinalgError::Dimension(why) => write!(f, "dimension mismatch: {why}"),
        }
    }
}

impl std::error::Error for LinalgError {}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` entries; duplicates are summed, explicit zeros kept.
    pub fn from_triplets(n_rows: usize, n_cols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; n_rows + 1];
        for &(i, j, _) in entries {
            assert!(i < n_rows && j < n_cols, "entry ({i}, {j}) outside {n_rows}x{n_cols}");
            count[i + 1] += 1;
        }
        for i in 0..n_rows {
            count[i + 1] += count[i];
        }
        let mut cols = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        let mut next = count.clone();
        for &(i, j, v) in entries {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_rows {
            row.clear();
            row.extend((count[i]..count[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(j);
                data.push(s);
            }
            indptr.push(indices.len());
        }
        Self { n_rows, n_cols, indptr, indices, data }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, indptr: vec![0; n_rows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.data[self.indptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Csr {
        let t: Vec<(usize, usize, f64)> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Csr::from_triplets(self.n_cols, self.n_rows, &t)
    }

    pub fn scaled(&self, s: f64) -> Csr {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Csr, s: f64) -> Csr {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)));
        Csr::from_triplets(self.n_rows, self.n_cols, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Writes `row col value` lines (zero-based indices).
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "% {} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, LinalgError> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::<usize, f64>::try_new_from_triplets(self.n_rows, self.n_cols, &t)
            .map_err(|e| LinalgError::Dimension(format!("{e:?}")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖b − A x‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_residual(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Sparse LU factorization with iterative refinement.
pub struct DirectSolver {
    matrix: Csr,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    refinement_steps: usize,
}

impl DirectSolver {
    pub fn new(a: &Csr) -> Result<Self, LinalgError> {
        if a.n_rows != a.n_cols {
            return Err(LinalgError::Dimension(format!("{}x{} is not square", a.n_rows, a.n_cols)));
        }
        if let Some(i) = (0..a.n_rows).find(|&i| a.row(i).all(|(_, v)| v == 0.0)) {
            return Err(LinalgError::Singular(format!("row {i} is empty")));
        }
        let lu = a.to_faer()?.sp_lu().map_err(|e| LinalgError::Singular(format!("{e:?}")))?;
        Ok(Self { matrix: a.clone(), lu, refinement_steps: 2 })
    }

    fn apply_inverse(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = self.apply_inverse(b);
        for _ in 0..self.refinement_steps {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.apply_inverse(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular("non-finite solution".into()));
        }
        Ok(x)
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }
}

/// Zero-fill incomplete LU factorization stored on the pattern of `A`.
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self, LinalgError> {
        let n = a.n_rows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                if lu.indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(LinalgError::Singular(format!("no diagonal entry in row {i}")));
            }
        }
        for i in 1..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for kk in start..end {
                let k = lu.indices[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.data[diag[k]];
                if pivot == 0.0 {
                    return Err(LinalgError::Singular(format!("zero pivot in row {k}")));
                }
                let lik = lu.data[kk] / pivot;
                lu.data[kk] = lik;
                for jj in kk + 1..end {
                    let j = lu.indices[jj];
                    let ukj = lu.get(k, j);
                    if ukj != 0.0 {
                        lu.data[jj] -= lik * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.lu.indptr[i]..self.diag[i] {
                s -= self.lu.data[k] * y[self.lu.indices[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..self.lu.indptr[i + 1] {
                s -= self.lu.data[k] * y[self.lu.indices[k]];
            }
            y[i] = s / self.lu.data[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned BiCGSTAB with ILU(0).
pub fn bicgstab(a: &Csr, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize), LinalgError> {
    let n = b.len();
    let pre = Ilu0::new(a)?;
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let nb = norm2(b).max(f64::MIN_POSITIVE);
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    if norm2(&r) / nb <= tol {
        return Ok((x, 0));
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = pre.apply(&p);
        a.matvec_into(&ph, &mut v);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) / nb <= tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            return Ok((x, it));
        }
        let sh = pre.apply(&s);
        let t = a.matvec(&sh);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = norm2(&r) / nb;
        if res <= tol {
            return Ok((x, it));
        }
        if omega == 0.0 || !res.is_finite() {
            return Err(LinalgError::NotConverged { iterations: it, residual: res });
        }
    }
    let res = relative_residual(a, &x, b);
    if res <= tol {
        Ok((x, max_iter))
    } else {
        Err(LinalgError::NotConverged { iterations: max_iter, residual: res })
    }
}

/// Eigenvalues of a symmetric matrix (its symmetric part is used), ascending.
pub fn symmetric_eigenvalues(a: &Csr) -> Result<Vec<f64>, LinalgError> {
    let n = a.n_rows;
    let d = a.to_dense();
    let s = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)]));
    let mut ev = s.self_adjoint_eigenvalues(Side::Lower).map_err(|e| LinalgError::Singular(format!("{e:?}")))?;
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// Extreme eigenvalue estimates of a symmetric operator by Lanczos with full
/// reorthogonalization. Returns `(min, max, converged)`.
pub fn lanczos_extremes(apply: &dyn Fn(&[f64]) -> Vec<f64>, n: usize, max_iter: usize, tol: f64) -> (f64, f64, bool) {
    if n == 0 {
        return (0.0, 0.0, true);
    }
    let m = max_iter.min(n);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    for k in 0..m {
        q.push(v.clone());
        let mut w = apply(&v);
        let a = dot(&w, &v);
        alphas.push(a);
        for qj in &q {
            let c = dot(&w, qj);
            for (wi, qi) in w.iter_mut().zip(qj) {
                *wi -= c * qi;
            }
        }
        let b = norm2(&w);
        let k1 = k + 1;
        let t = Mat::<f64>::from_fn(k1, k1, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j || j + 1 == i {
                betas[i.min(j)]
            } else {
                0.0
            }
        });
        let ev = t.self_adjoint_eigenvalues(Side::Lower).unwrap_or_default();
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
        if (lo - last.0).abs() <= tol * scale && (hi - last.1).abs() <= tol * scale && k >= 10 {
            return (lo, hi, true);
        }
        last = (lo, hi);
        if b <= 1e-14 * scale {
            return (lo, hi, true);
        }
        betas.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    (last.0, last.1, m == n)
}

/// Largest singular value of `A` by power iteration on `AᵀA`.
pub fn spectral_norm(a: &Csr, max_iter: usize) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    let at = a.transpose();
    let mut x: Vec<f64> = (0..a.n_cols).map(|i| 1.0 + (i % 5) as f64 * 0.1).collect();
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let nx = norm2(&x);
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = at.matvec(&a.matvec(&x));
        let s = dot(&x, &y).max(0.0).sqrt();
        if (s - sigma).abs() <= 1e-10 * s {
            return s;
        }
        sigma = s;
        x = y;
    }
    sigma
}
