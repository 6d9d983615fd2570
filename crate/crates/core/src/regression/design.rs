//! Sylvester-Hadamard designs. The matrix is never stored: entry `(i, j)` is
//! `(-1)^popcount(i & j)`, and products with it go through the fast
//! Walsh-Hadamard transform.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// In-place unnormalised Walsh-Hadamard transform; `v.len()` must be a power of two.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// `n x m_total` design with `X'X = n I` and an all-ones first column; `n = m_total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthogonalDesign {
    m_total: usize,
}

impl OrthogonalDesign {
    pub fn m_total(&self) -> usize {
        self.m_total
    }

    pub fn n(&self) -> usize {
        self.m_total
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        if (row & col).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn matrix(&self) -> Vec<Vec<i8>> {
        (0..self.n()).map(|i| (0..self.m_total).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// `X v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        fwht(&mut out);
        out
    }

    /// `X' y / n`, the least-squares coefficients under orthogonality.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        fwht(&mut out);
        let n = self.n() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }

    /// Checks `X'X = n I` in integer arithmetic.
    pub fn verify_orthogonal(&self) -> bool {
        let n = self.n() as i64;
        (0..self.m_total).all(|j| {
            (j..self.m_total).all(|k| {
                let dot: i64 = (0..self.n()).map(|i| (self.entry(i, j) * self.entry(i, k)) as i64).sum();
                dot == if j == k { n } else { 0 }
            })
        })
    }

    /// Rows of `+`/`-` characters, for debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n() * (self.m_total + 1));
        for i in 0..self.n() {
            for j in 0..self.m_total {
                out.push(if self.entry(i, j) > 0 { '+' } else { '-' });
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Sylvester construction `H_2k = [[H_k, H_k], [H_k, -H_k]]`.
pub fn hadamard_design(m_total: usize) -> Result<OrthogonalDesign> {
    if m_total < 2 || !m_total.is_power_of_two() {
        return Err(Error::invalid(format!("design size must be a power of two >= 2, got {m_total}")));
    }
    Ok(OrthogonalDesign { m_total })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Explicit Sylvester recursion.
    fn sylvester(m: usize) -> Vec<Vec<i8>> {
        let mut h = vec![vec![1i8]];
        while h.len() < m {
            let k = h.len();
            let mut next = vec![vec![0i8; 2 * k]; 2 * k];
            for i in 0..k {
                for j in 0..k {
                    next[i][j] = h[i][j];
                    next[i][j + k] = h[i][j];
                    next[i + k][j] = h[i][j];
                    next[i + k][j + k] = -h[i][j];
                }
            }
            h = next;
        }
        h
    }

    #[test]
    fn base_case_and_recursion() {
        assert_eq!(hadamard_design(2).unwrap().matrix(), vec![vec![1, 1], vec![1, -1]]);
        for m in [4, 8, 32] {
            assert_eq!(hadamard_design(m).unwrap().matrix(), sylvester(m));
        }
        assert!(hadamard_design(4).unwrap().verify_orthogonal());
    }

    #[test]
    fn size_256_columns() {
        let d = hadamard_design(256).unwrap();
        let x = d.matrix();
        assert!(x.iter().all(|row| row[0] == 1));
        for j in 0..256 {
            for k in 0..j {
                let dot: i32 = (0..256).map(|i| (x[i][j] * x[i][k]) as i32).sum();
                assert_eq!(dot, 0);
            }
        }
        assert!(d.verify_orthogonal());
    }

    #[test]
    fn rejects_bad_sizes() {
        for m in [0, 1, 3, 12, 100] {
            assert!(hadamard_design(m).is_err());
        }
    }

    #[test]
    fn transform_matches_dense_product() {
        let d = hadamard_design(16).unwrap();
        let x = d.matrix();
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let fast = d.apply(&v);
        for i in 0..16 {
            let dense: f64 = (0..16).map(|j| x[i][j] as f64 * v[j]).sum();
            assert!((fast[i] - dense).abs() < 1e-12);
        }
        let back = d.project(&fast);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn text_form() {
        assert_eq!(hadamard_design(2).unwrap().to_text(), "++\n+-\n");
    }
}
