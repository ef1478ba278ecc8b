//! Cholesky factorisation of Hermitian positive definite band matrices.

use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Lower triangle of a Hermitian band matrix with `bw` sub-diagonals.
///
/// Row `i` stores columns `i - bw ..= i` contiguously; entries left of column 0
/// are kept as zero padding so every row has the same length.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![Complex64::new(0.0, 0.0); n * (bw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw + j - i
    }

    /// Add `v` at `(i, j)` with `j <= i`, the upper triangle being implied by symmetry.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.index(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j <= i {
            if i - j > self.bw { Complex64::new(0.0, 0.0) } else { self.data[self.index(i, j)] }
        } else {
            self.get(j, i).conj()
        }
    }

    /// `y = A x` for the full Hermitian matrix.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.index(i, j)];
                y[i] += a * x[j];
                y[j] += a.conj() * x[i];
            }
            y[i] += self.data[self.index(i, i)] * x[i];
        }
        y
    }

    /// In-place factorisation `A = L L^H`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(bw));
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                let mut s = self.data[ri + j];
                for k in kmin..j {
                    s -= self.data[ri + k] * self.data[rj + k].conj();
                }
                if i == j {
                    if !(s.re > 0.0) || !s.re.is_finite() {
                        return Err(LabError::Singular { pivot: i, value: s.re });
                    }
                    self.data[ri + i] = Complex64::new(s.re.sqrt(), 0.0);
                } else {
                    self.data[ri + j] = s / self.data[rj + j].re;
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

/// Factor `L` of a band Cholesky decomposition.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let (n, bw, w) = (self.l.n, self.l.bw, self.l.bw + 1);
        let d = &self.l.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= d[ri + k] * y[k];
            }
            y[i] = s / d[ri + i].re;
        }
        for i in (0..n).rev() {
            let ri = i * w + bw - i;
            y[i] /= d[ri + i].re;
            let yi = y[i];
            for k in i.saturating_sub(bw)..i {
                y[k] -= d[ri + k].conj() * yi;
            }
        }
        y
    }
}
