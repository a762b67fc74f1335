//! Symmetric positive-definite solves: dense and banded Cholesky.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Row-major dense symmetric matrix; only the lower triangle is read.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// In-place lower Cholesky. Returns false if a pivot is not positive.
    pub fn cholesky(&mut self) -> bool {
        let n = self.n;
        for j in 0..n {
            let mut d = self.a[j * n + j];
            for k in 0..j {
                d -= self.a[j * n + k] * self.a[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return false;
            }
            let d = math::sqrt(d);
            self.a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= self.a[i * n + k] * self.a[j * n + k];
                }
                self.a[i * n + j] = s / d;
            }
        }
        true
    }

    /// Solves `L L^T x = b` in place after [`Dense::cholesky`].
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.a[i * n + k] * b[k];
            }
            b[i] = s / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.a[k * n + i] * b[k];
            }
            b[i] = s / self.a[i * n + i];
        }
    }
}

/// Symmetric band matrix with half-bandwidth `bw`, lower part stored by row.
#[derive(Debug, Clone)]
pub struct Band {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds to entry `(i, j)` with `j <= i`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn cholesky(&mut self) -> bool {
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            // Row i holds columns i-bw..=i at offsets 0..=bw.
            let (head, tail) = self.data.split_at_mut(i * w);
            let row_i = &mut tail[..w];
            for j in lo..i {
                let kl = lo.max(j.saturating_sub(bw));
                let row_j = &head[j * w..(j + 1) * w];
                let (oi, oj) = (kl + bw - i, kl + bw - j);
                let len = j - kl;
                let mut dot = 0.0;
                for k in 0..len {
                    dot += row_i[oi + k] * row_j[oj + k];
                }
                let p = j + bw - i;
                row_i[p] = (row_i[p] - dot) / row_j[bw];
            }
            let off = &row_i[lo + bw - i..bw];
            let s = row_i[bw] - off.iter().map(|v| v * v).sum::<f64>();
            if !(s > 0.0) || !s.is_finite() {
                return false;
            }
            row_i[bw] = math::sqrt(s);
        }
        true
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, w) = (self.n, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let dot: f64 = row[lo + w - 1 - i..w - 1].iter().zip(&b[lo..i]).map(|(a, c)| a * c).sum();
            b[i] = (b[i] - dot) / row[w - 1];
        }
        // Column-oriented back substitution keeps the row access contiguous.
        for i in (0..n).rev() {
            let row = &self.data[i * w..(i + 1) * w];
            b[i] /= row[w - 1];
            let bi = b[i];
            let lo = i.saturating_sub(self.bw);
            for (bk, l) in b[lo..i].iter_mut().zip(&row[lo + w - 1 - i..w - 1]) {
                *bk -= l * bi;
            }
        }
    }

    /// `A v` for the symmetric matrix whose lower band is stored.
    pub fn mul_sym(&self, v: &[f64]) -> Vec<f64> {
        let (n, w) = (self.n, self.bw + 1);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * w..(i + 1) * w];
            let off = &row[lo + w - 1 - i..w - 1];
            let mut acc = row[w - 1] * v[i];
            for ((o, a), x) in out[lo..i].iter_mut().zip(off).zip(&v[lo..i]) {
                acc += a * x;
                *o += a * v[i];
            }
            out[i] += acc;
        }
        out
    }
}
