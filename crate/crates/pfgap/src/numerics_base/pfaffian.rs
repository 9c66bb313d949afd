use super::Real;
use crate::error::{domain, Result};
use nalgebra::{DMatrix, RealField};

/// Dense antisymmetric matrix stored row-major.
///
/// Only the strict upper triangle is authoritative; the lower triangle is kept
/// in sync by every mutating method so that `get` is a plain load.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> AntisymMatrix<T> {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("antisymmetric matrix must have positive dimension");
        }
        Ok(Self { dim, data: vec![T::zero(); dim * dim] })
    }

    /// Builds the matrix from its strict upper triangle; `f(i, j)` is called for `i < j`.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i + 1..dim {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// Validates a dense square matrix: exact antisymmetry, zero diagonal, no NaN.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return domain("matrix is not square");
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() {
                    return domain("NaN entry in antisymmetric matrix");
                }
                if v != -rows[j][i] {
                    return domain(format!("entries ({i},{j}) and ({j},{i}) are not antisymmetric"));
                }
                m.data[i * dim + j] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Sets `A[i][j] = v` and `A[j][i] = −v`. Diagonal writes are ignored.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        if i != j {
            self.data[i * self.dim + j] = v;
            self.data[j * self.dim + i] = -v;
        }
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.data {
            *v = *v * c;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }
}

/// Pfaffian of an even-dimensional antisymmetric matrix.
pub fn pfaffian<T: Real>(a: &AntisymMatrix<T>) -> Result<T> {
    let (sign, log_abs) = log_pfaffian(a)?;
    Ok(if sign == T::zero() { T::zero() } else { sign * log_abs.exp() })
}

/// Returns `(sign, log|pf(A)|)`; sign is zero for a singular matrix.
///
/// Parlett–Reid elimination: at each even step the largest entry of the
/// current row is pivoted into the superdiagonal and the trailing block is
/// reduced by a rank-two congruence. Only the upper triangle is updated.
pub fn log_pfaffian<T: Real>(a: &AntisymMatrix<T>) -> Result<(T, T)> {
    let n = a.dim;
    if n % 2 == 1 {
        return domain("Pfaffian of an odd-dimensional matrix");
    }
    if a.data.iter().any(|v| v.is_nan()) {
        return domain("NaN entry in antisymmetric matrix");
    }
    let mut m = a.data.clone();
    let at = |i: usize, j: usize| i * n + j;
    let mut sign = T::one();
    let mut log_abs = T::zero();
    let mut k = 0;
    while k + 1 < n {
        let mut piv_idx = k + 1;
        let mut piv_abs = m[at(k, k + 1)].abs();
        for i in k + 2..n {
            let v = m[at(k, i)].abs();
            if v > piv_abs {
                piv_abs = v;
                piv_idx = i;
            }
        }
        if piv_abs == T::zero() {
            return Ok((T::zero(), T::neg_infinity()));
        }
        if piv_idx != k + 1 {
            swap_index(&mut m, n, k, k + 1, piv_idx);
            sign = -sign;
        }
        let piv = m[at(k, k + 1)];
        if piv < T::zero() {
            sign = -sign;
        }
        log_abs = log_abs + piv.abs().ln();
        if k + 2 < n {
            // A[i][j] += v_j u_i − v_i u_j with v = A[k][·]/piv, u = A[k+1][·]
            let v: Vec<T> = (k + 2..n).map(|j| m[at(k, j)] / piv).collect();
            let u: Vec<T> = (k + 2..n).map(|j| m[at(k + 1, j)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                let (vi, ui) = (v[ii], u[ii]);
                let row = &mut m[i * n..(i + 1) * n];
                for jj in ii + 1..v.len() {
                    row[k + 2 + jj] = row[k + 2 + jj] + v[jj] * ui - vi * u[jj];
                }
            }
        }
        k += 2;
    }
    Ok((sign, log_abs))
}

/// Symmetric swap of indices `r < s` on the active block `≥ k`, upper triangle only.
fn swap_index<T: Real>(m: &mut [T], n: usize, k: usize, r: usize, s: usize) {
    let get = |m: &[T], i: usize, j: usize| -> T {
        if i < j {
            m[i * n + j]
        } else if i > j {
            -m[j * n + i]
        } else {
            T::zero()
        }
    };
    let put = |m: &mut [T], i: usize, j: usize, v: T| {
        if i < j {
            m[i * n + j] = v;
        } else if i > j {
            m[j * n + i] = -v;
        }
    };
    for t in k..n {
        if t == r || t == s {
            continue;
        }
        let (vr, vs) = (get(m, r, t), get(m, s, t));
        put(m, r, t, vs);
        put(m, s, t, vr);
    }
    let vrs = get(m, r, s);
    put(m, r, s, -vrs);
}

/// Determinant of a dense square matrix by partially pivoted LU.
pub fn determinant<T: Real + RealField>(rows: &[Vec<T>]) -> Result<T> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return domain("matrix is not square");
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(m.lu().determinant())
}

/// `(sign, log|det M|)` accumulated from the LU diagonal, never as a raw product.
pub fn log_det_f64(m: DMatrix<f64>) -> (f64, f64) {
    let lu = m.lu();
    let mut sign: f64 = lu.p().determinant();
    let u = lu.u();
    let mut log_abs = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
    }
    (sign, log_abs)
}
