//! Dense complex linear algebra for the beamformers.
//!
//! Matrices are small (tens of rows), so everything is a straightforward
//! row-major `Vec`. The SVD is a one-sided (Hestenes) Jacobi iteration,
//! which is accurate to working precision and has no special cases for
//! wide or rank-deficient inputs. Inverses are never formed; covariance
//! inverses are applied through Cholesky solves.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;

use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Column matrix from a vector.
    pub fn column(v: &[Complex<T>]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Matrix whose columns are the given equal-length vectors.
    pub fn from_columns(cols: &[Vec<Complex<T>>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        Ok(Self::from_fn(rows, cols.len(), |i, j| cols[j][i]))
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex::new(x, T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!("{}x{} times vector of {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension("hermitian part of a non-square matrix".into()));
        }
        let half = T::of(0.5);
        Ok(Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half))
    }

    /// Largest `|A - A^H|` entry relative to the largest entry.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                scale = scale.max(self[(i, j)].norm());
                if j < self.rows && i < self.cols {
                    worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
                }
            }
        }
        if scale == T::zero() {
            T::zero()
        } else {
            worst / scale
        }
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

/// `a^H b`.
pub fn dot_h<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Singular value decomposition `A = U diag(s) V^H`.
///
/// From [`svd`] the factors are full (`U` is `rows x rows`, `V` is
/// `cols x cols`); from [`svd_thin`] they hold `min(rows, cols)` columns.
/// Singular values are non-negative and descending.
#[derive(Debug, Clone)]
pub struct SvdFactors<T> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: CMatrix<T>,
}

/// Rank-`zeta` split of an SVD.
#[derive(Debug, Clone)]
pub struct Truncation<T> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: CMatrix<T>,
    /// `U_z diag(s_z) V_z^H`.
    pub approx: CMatrix<T>,
}

impl<T: Real> SvdFactors<T> {
    /// Number of singular values above `rel_tol * s_max`.
    pub fn numerical_rank(&self, rel_tol: T) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or_else(T::zero);
        self.singular_values.iter().filter(|&&s| s > rel_tol * smax && s > T::zero()).count()
    }

    /// Rebuilds `U Sigma V^H` from whatever columns are present.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let k = self.singular_values.len();
        let (m, n) = (self.u.rows(), self.v.rows());
        CMatrix::from_fn(m, n, |i, j| (0..k).map(|r| self.u[(i, r)] * self.singular_values[r] * self.v[(j, r)].conj()).sum())
    }
}

/// Full SVD.
pub fn svd<T: Real>(a: &CMatrix<T>) -> Result<SvdFactors<T>> {
    let thin = svd_thin(a)?;
    let k = thin.singular_values.len();
    let smax = thin.singular_values.first().copied().unwrap_or_else(T::zero);
    let valid = thin.singular_values.iter().filter(|&&s| s > smax * T::epsilon() * T::of(64.0)).count().min(k);
    let u = complete_unitary(&thin.u, valid);
    let v = complete_unitary(&thin.v, valid);
    Ok(SvdFactors { u, singular_values: thin.singular_values, v })
}

/// Thin SVD with `min(rows, cols)` singular triplets.
pub fn svd_thin<T: Real>(a: &CMatrix<T>) -> Result<SvdFactors<T>> {
    if !a.is_finite() {
        return Err(Error::domain("svd input contains non-finite entries"));
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::Dimension("svd of an empty matrix".into()));
    }
    if m >= n {
        let (u, s, v) = jacobi_svd(a);
        Ok(SvdFactors { u, singular_values: s, v })
    } else {
        // A^H = U' S V'^H  =>  A = V' S U'^H.
        let (u, s, v) = jacobi_svd(&a.adjoint());
        Ok(SvdFactors { u: v, singular_values: s, v: u })
    }
}

/// One-sided Jacobi on a tall matrix (`rows >= cols`). Columns are stored
/// contiguously so each rotation touches two slices.
fn jacobi_svd<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, Vec<T>, CMatrix<T>) {
    let (m, n) = a.shape();
    let zero = Complex::new(T::zero(), T::zero());
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| a.col(j)).collect();
    let mut vcols: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            let mut e = vec![zero; n];
            e[j] = Complex::new(T::one(), T::zero());
            e
        })
        .collect();
    let tol = T::epsilon() * T::of_usize(m).sqrt();
    let mut norms: Vec<T> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();

    // Columns below this squared norm are numerically zero; rotating them
    // only shuffles rounding noise.
    let floor = norms.iter().copied().fold(T::zero(), T::max) * T::epsilon() * T::epsilon() * T::of_usize(m);

    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot_h(&cols[i], &cols[j]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::two() * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                // [x_i x_j] <- [x_i x_j] [[c, s e^{jt}], [-s e^{-jt}, c]]
                let sp = phase * s;
                let spc = phase.conj() * s;
                rotate_pair(&mut cols, i, j, c, sp, spc);
                rotate_pair(&mut vcols, i, j, c, sp, spc);
                norms[i] = cols[i].iter().map(|z| z.norm_sqr()).sum();
                norms[j] = cols[j].iter().map(|z| z.norm_sqr()).sum();
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sv: Vec<T> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&x, &y| sv[y].partial_cmp(&sv[x]).unwrap_or(std::cmp::Ordering::Equal));

    let smax = order.first().map_or(T::zero(), |&k| sv[k]);
    let mut u = CMatrix::zeros(m, n);
    let mut v = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut valid = 0;
    for (r, &k) in order.iter().enumerate() {
        s.push(sv[k]);
        if sv[k] > smax * T::epsilon() * T::of(64.0) {
            valid = r + 1;
            for i in 0..m {
                u[(i, r)] = cols[k][i] / sv[k];
            }
        }
        for i in 0..n {
            v[(i, r)] = vcols[k][i];
        }
    }
    if valid < n {
        // Columns belonging to (numerically) zero singular values are
        // replaced by an orthonormal completion.
        let full = complete_columns(&u, valid, n);
        for r in valid..n {
            for i in 0..m {
                u[(i, r)] = full[(i, r)];
            }
        }
    }
    (u, s, v)
}

#[inline]
fn rotate_pair<T: Real>(cols: &mut [Vec<Complex<T>>], i: usize, j: usize, c: T, sp: Complex<T>, spc: Complex<T>) {
    let (lo, hi) = cols.split_at_mut(j);
    let xi = &mut lo[i];
    let xj = &mut hi[0];
    for (a, b) in xi.iter_mut().zip(xj.iter_mut()) {
        let ai = *a;
        let bj = *b;
        *a = ai * c - bj * spc;
        *b = ai * sp + bj * c;
    }
}

/// Extends the first `k` orthonormal columns of `q` to a square unitary
/// matrix by orthogonalizing standard basis vectors against them.
pub fn complete_unitary<T: Real>(q: &CMatrix<T>, k: usize) -> CMatrix<T> {
    complete_columns(q, k, q.rows())
}

/// Extends the first `k` orthonormal columns of `q` to `total` orthonormal
/// columns.
fn complete_columns<T: Real>(q: &CMatrix<T>, k: usize, total: usize) -> CMatrix<T> {
    let n = q.rows();
    let total = total.min(n);
    let zero = Complex::new(T::zero(), T::zero());
    let mut basis: Vec<Vec<Complex<T>>> = (0..k).map(|j| q.col(j)).collect();
    let mut e = 0;
    while basis.len() < total && e < n {
        let mut v = vec![zero; n];
        v[e] = Complex::new(T::one(), T::zero());
        e += 1;
        for _ in 0..2 {
            for b in &basis {
                let p = dot_h(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let nv = norm2(&v);
        if nv > T::of(0.25) {
            v.iter_mut().for_each(|z| *z /= nv);
            basis.push(v);
        }
    }
    CMatrix::from_fn(n, total, |i, j| basis[j][i])
}

/// Keeps the leading `zeta` singular triplets. Every retained singular value
/// must be strictly positive so that `Sigma_z` is invertible.
pub fn truncate<T: Real>(f: &SvdFactors<T>, zeta: usize) -> Result<Truncation<T>> {
    let positive = f.numerical_rank(T::epsilon() * T::of(64.0));
    if zeta == 0 || zeta > positive {
        return Err(Error::domain(format!("truncation rank {zeta} must lie in 1..={positive} (positive singular values)")));
    }
    let u = f.u.leading_columns(zeta);
    let v = f.v.leading_columns(zeta);
    let s = f.singular_values[..zeta].to_vec();
    let approx = CMatrix::from_fn(u.rows(), v.rows(), |i, j| (0..zeta).map(|r| u[(i, r)] * s[r] * v[(j, r)].conj()).sum());
    Ok(Truncation { u, singular_values: s, v, approx })
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: CMatrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors `(R + R^H)/2`. Fails when a pivot is not clearly positive.
    pub fn new(r: &CMatrix<T>) -> Result<Self> {
        let n = r.rows();
        if n != r.cols() {
            return Err(Error::Dimension(format!("cholesky of a {}x{} matrix", n, r.cols())));
        }
        if !r.is_finite() {
            return Err(Error::domain("matrix contains non-finite entries"));
        }
        let a = r.hermitian_part()?;
        let max_diag = (0..n).map(|i| a[(i, i)].re.abs()).fold(T::zero(), T::max);
        let floor = max_diag * T::epsilon() * T::of_usize(n.max(1)) * T::of(16.0);
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > floor) || max_diag == T::zero() {
                return Err(Error::Singular(format!(
                    "pivot {j} is {d}; the covariance is not positive definite (too few samples or no loading)"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `R x = b` in place.
    pub fn solve_vec(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!("rhs of length {} for a {n}x{n} system", b.len())));
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        Ok(y)
    }

    pub fn solve(&self, b: &CMatrix<T>) -> Result<CMatrix<T>> {
        if b.rows() != self.dim() {
            return Err(Error::Dimension(format!("rhs has {} rows for a {}-dim system", b.rows(), self.dim())));
        }
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.col(j))?;
            for (i, xi) in x.into_iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }
}

/// `R + loading * tr(R)/dim * I`.
pub fn load_diagonal<T: Real>(r: &CMatrix<T>, loading: T) -> Result<CMatrix<T>> {
    if !(loading >= T::zero()) {
        return Err(Error::domain(format!("diagonal loading {loading} must be >= 0")));
    }
    let n = r.rows();
    let mut out = r.hermitian_part()?;
    if loading > T::zero() && n > 0 {
        let level = loading * r.trace().re / T::of_usize(n);
        for i in 0..n {
            out[(i, i)] += Complex::new(level, T::zero());
        }
    }
    Ok(out)
}

/// Solves `(R + loading tr(R)/dim I) X = B` for Hermitian `R`.
pub fn hermitian_solve<T: Real>(r: &CMatrix<T>, b: &CMatrix<T>, loading: T) -> Result<CMatrix<T>> {
    let loaded = load_diagonal(r, loading)?;
    Cholesky::new(&loaded)?.solve(b)
}
