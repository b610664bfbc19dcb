//! Symmetric positive-definite solves with envelope (skyline) storage.
//!
//! Stores the lower triangle of each row from its first structural nonzero
//! to the diagonal. Cholesky fill-in never leaves the envelope, so the
//! factorization is numerically identical to a dense one while skipping the
//! leading zeros; for a dense pattern it *is* the dense algorithm. The KYP
//! normal matrix is the case that matters: its auxiliary-variable rows have
//! short profiles and a dense factor would not fit time or memory budgets.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SkylinePattern {
    n: usize,
    first: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl SkylinePattern {
    /// Builds the pattern from per-row first-column indices (`first[i] <= i`).
    pub fn new(first: Vec<usize>) -> Self {
        let n = first.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0usize;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            offsets.push(acc);
            acc += i - f + 1;
        }
        offsets.push(acc);
        Self {
            n,
            first,
            offsets,
            len: acc,
        }
    }

    pub fn storage_len(&self) -> usize {
        self.len
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.first[i] <= j && j <= i);
        self.offsets[i] + (j - self.first[i])
    }
}

/// Value array over a shared skyline pattern.
#[derive(Debug, Clone)]
pub struct SkylineValues {
    pub data: Vec<f64>,
}

impl SkylineValues {
    pub fn zeros(pattern: &SkylinePattern) -> Self {
        Self {
            data: vec![0.0; pattern.storage_len()],
        }
    }

    #[inline]
    pub fn add(&mut self, pattern: &SkylinePattern, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[pattern.idx(r, c)] += v;
    }
}

/// Cholesky factor over a skyline pattern.
pub struct SkylineCholesky {
    pattern: SkylinePattern,
    l: Vec<f64>,
}

impl SkylineCholesky {
    /// Factorizes `base + scale * extra` (entrywise over the shared
    /// pattern). Fails when the matrix is not positive definite.
    #[allow(clippy::explicit_counter_loop)] // ki/kj walk two row segments in lockstep
    pub fn factorize(
        pattern: &SkylinePattern,
        base: &SkylineValues,
        extra: &SkylineValues,
        scale: f64,
    ) -> Result<Self> {
        let n = pattern.n;
        let mut l: Vec<f64> = base
            .data
            .iter()
            .zip(&extra.data)
            .map(|(b, e)| b + scale * e)
            .collect();

        for i in 0..n {
            let fi = pattern.first[i];
            let row_i = pattern.offsets[i];
            for j in fi..i {
                let fj = pattern.first[j];
                let row_j = pattern.offsets[j];
                let start = fi.max(fj);
                let mut sum = l[row_i + (j - fi)];
                // dot over the overlap of row i and row j profiles
                let mut ki = row_i + (start - fi);
                let mut kj = row_j + (start - fj);
                for _ in start..j {
                    sum -= l[ki] * l[kj];
                    ki += 1;
                    kj += 1;
                }
                let djj = l[row_j + (j - fj)];
                l[row_i + (j - fi)] = sum / djj;
            }
            let mut diag = l[row_i + (i - fi)];
            for k in fi..i {
                let v = l[row_i + (k - fi)];
                diag -= v * v;
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::numeric(format!(
                    "skyline Cholesky broke down at pivot {i} (value {diag})"
                )));
            }
            l[row_i + (i - fi)] = diag.sqrt();
        }
        Ok(Self {
            pattern: pattern.clone(),
            l,
        })
    }

    /// Solves `(L L^T) x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pattern.n;
        debug_assert_eq!(rhs.len(), n);
        // forward: L y = rhs
        for i in 0..n {
            let fi = self.pattern.first[i];
            let row_i = self.pattern.offsets[i];
            let mut sum = rhs[i];
            for k in fi..i {
                sum -= self.l[row_i + (k - fi)] * rhs[k];
            }
            rhs[i] = sum / self.l[row_i + (i - fi)];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let fi = self.pattern.first[i];
            let row_i = self.pattern.offsets[i];
            let xi = rhs[i] / self.l[row_i + (i - fi)];
            rhs[i] = xi;
            for k in fi..i {
                rhs[k] -= self.l[row_i + (k - fi)] * xi;
            }
        }
    }
}
