//! Small dense and sparse solvers used by the exact engine.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    n: usize,
    a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    /// In-place LU factorization with partial pivoting.
    pub fn lu(mut self) -> Result<Lu> {
        let n = self.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (mut p, mut best) = (k, self.get(k, k).abs());
            for i in k + 1..n {
                let v = self.get(i, k).abs();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            if best <= scale * 1e-14 {
                return Err(Error::Numerical {
                    message: alloc::format!("singular matrix at pivot {k} of {n}"),
                    residual: best,
                });
            }
            if p != k {
                for j in 0..n {
                    self.a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = self.get(k, k);
            for i in k + 1..n {
                let f = self.get(i, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                self.set(i, k, f);
                let (top, bottom) = self.a.split_at_mut(i * n);
                let row_k = &top[k * n + k + 1..k * n + n];
                let row_i = &mut bottom[k + 1..n];
                for (x, y) in row_i.iter_mut().zip(row_k) {
                    *x -= f * y;
                }
            }
        }
        Ok(Lu { lu: self, perm })
    }
}

pub struct Lu {
    lu: Dense,
    perm: Vec<usize>,
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }
}

/// Sparse matrix in compressed-row form.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn from_rows(rows: &[Vec<(usize, f64)>]) -> Self {
        let mut m = Csr { n: rows.len(), row_ptr: vec![0], ..Default::default() };
        for r in rows {
            for &(c, v) in r {
                m.cols.push(c);
                m.vals.push(v);
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> Dense {
        let mut d = Dense::zeros(self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                d.add(i, c, v);
            }
        }
        d
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite system. Stops when `|r|_inf <= tol * max(1, |b|_inf)`.
pub fn conjugate_gradient(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let diag: Vec<f64> = (0..n)
        .map(|i| a.row(i).filter(|&(c, _)| c == i).map(|(_, v)| v).sum::<f64>())
        .collect();
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..max_iter {
        if res <= tol * bnorm {
            return Ok(x);
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::Numerical { message: alloc::format!("CG did not converge in {max_iter} iterations"), residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_pivoting_system() {
        let mut a = Dense::zeros(3);
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x_true).map(|(a, b)| a * b).sum()).collect();
        let x = a.lu().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let mut a = Dense::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(matches!(a.lu(), Err(Error::Numerical { .. })));
    }

    #[test]
    fn cg_matches_lu_on_laplacian() {
        let n = 30;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        let a = Csr::from_rows(&rows);
        let b: Vec<f64> = (0..n).map(|i| (i % 7) as f64 - 3.0).collect();
        let x_cg = conjugate_gradient(&a, &b, 1e-14, 10 * n).unwrap();
        let x_lu = a.to_dense().lu().unwrap().solve(&b);
        for (u, v) in x_cg.iter().zip(&x_lu) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
