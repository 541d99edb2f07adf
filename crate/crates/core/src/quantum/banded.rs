//! Square complex band matrices with a small symmetric half-bandwidth.

use num_complex::Complex64;

/// `n × n` matrix with entries only on diagonals `-w..=w`, stored row-major
/// as `data[j * (2w + 1) + (k − j + w)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    n: usize,
    w: usize,
    data: Vec<Complex64>,
}

impl BandedOperator {
    pub fn zeros(n: usize, w: usize) -> Self {
        BandedOperator {
            n,
            w,
            data: vec![Complex64::new(0.0, 0.0); n * (2 * w + 1)],
        }
    }

    pub fn identity(n: usize, w: usize) -> Self {
        let mut a = Self::zeros(n, w);
        for j in 0..n {
            a.set(j, j, Complex64::new(1.0, 0.0));
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    fn index(&self, j: usize, k: usize) -> Option<usize> {
        (j < self.n && k < self.n && j.abs_diff(k) <= self.w).then(|| j * (2 * self.w + 1) + k + self.w - j)
    }

    /// Entry `(j, k)`; zero outside the band.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.index(j, k).map_or(Complex64::new(0.0, 0.0), |i| self.data[i])
    }

    /// Panics outside the band.
    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        let i = self.index(j, k).expect("entry inside the band");
        self.data[i] = v;
    }

    pub fn add_to(&mut self, j: usize, k: usize, v: Complex64) {
        let i = self.index(j, k).expect("entry inside the band");
        self.data[i] += v;
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let width = 2 * self.w + 1;
        (0..self.n)
            .map(|j| {
                let row = &self.data[j * width..(j + 1) * width];
                let lo = j.saturating_sub(self.w);
                let hi = (j + self.w).min(self.n - 1);
                (lo..=hi).map(|k| row[k + self.w - j] * x[k]).sum()
            })
            .collect()
    }

    /// `α·self + β·other` (same shape).
    pub fn combine(&self, alpha: Complex64, other: &BandedOperator, beta: Complex64) -> BandedOperator {
        assert_eq!((self.n, self.w), (other.n, other.w));
        BandedOperator {
            n: self.n,
            w: self.w,
            data: self.data.iter().zip(&other.data).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex64) -> BandedOperator {
        BandedOperator {
            data: self.data.iter().map(|a| alpha * a).collect(),
            ..self.clone()
        }
    }

    /// Largest `|A_jk − conj(A_kj)|` over rows `skip..n−skip`.
    pub fn hermiticity_defect(&self, skip: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for j in skip..self.n.saturating_sub(skip) {
            let lo = j.saturating_sub(self.w);
            let hi = (j + self.w).min(self.n - 1);
            for k in lo..=hi {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &BandedOperator) -> f64 {
        assert_eq!((self.n, self.w), (other.n, other.w));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Solves `self · x = b` by band Gaussian elimination without pivoting.
    /// Returns `None` if a pivot falls below `1e-300` in magnitude.
    pub fn solve(&self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        assert_eq!(b.len(), self.n);
        let (n, w) = (self.n, self.w);
        let mut a = self.clone();
        let mut x = b.to_vec();
        for p in 0..n {
            let pivot = a.get(p, p);
            if pivot.norm() < 1e-300 {
                return None;
            }
            let hi = (p + w).min(n - 1);
            for r in p + 1..=hi {
                let f = a.get(r, p) / pivot;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in p..=hi {
                    let v = a.get(p, c);
                    a.add_to(r, c, -f * v);
                }
                let xp = x[p];
                x[r] -= f * xp;
            }
        }
        for p in (0..n).rev() {
            let hi = (p + w).min(n - 1);
            let s = (p + 1..=hi).fold(x[p], |s, c| s - a.get(p, c) * x[c]);
            x[p] = s / a.get(p, p);
        }
        Some(x)
    }
}
