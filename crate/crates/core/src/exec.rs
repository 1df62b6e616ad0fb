//! Execution strategy for the data-parallel inner loops.
//!
//! Every reduction here partitions work into blocks whose boundaries depend
//! only on the problem size, never on the number of worker threads. Partial
//! results are collected in block order and folded sequentially, so the
//! parallel and sequential strategies produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Block length used by the chunked vector reductions.
pub const REDUCE_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the ambient rayon pool. Without the `parallel` feature this
    /// behaves exactly like `Sequential`.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(i)` for `i in 0..n`, results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Runs `f(chunk_index, chunk)` over consecutive chunks of `data`.
    pub fn for_each_chunk<F>(self, data: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => data
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            _ => data
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }

    pub fn dot(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let blocks = a.len().div_ceil(REDUCE_BLOCK);
        let partial = self.map(blocks, |k| {
            let lo = k * REDUCE_BLOCK;
            let hi = (lo + REDUCE_BLOCK).min(a.len());
            a[lo..hi]
                .iter()
                .zip(&b[lo..hi])
                .map(|(x, y)| x * y)
                .sum::<f64>()
        });
        partial.iter().sum()
    }

    pub fn sup_norm(self, a: &[f64]) -> f64 {
        let blocks = a.len().div_ceil(REDUCE_BLOCK);
        let partial = self.map(blocks, |k| {
            let lo = k * REDUCE_BLOCK;
            let hi = (lo + REDUCE_BLOCK).min(a.len());
            a[lo..hi].iter().fold(0.0f64, |m, x| m.max(x.abs()))
        });
        partial.into_iter().fold(0.0, f64::max)
    }

    /// `y += alpha * x`
    pub fn axpy(self, alpha: f64, x: &[f64], y: &mut [f64]) {
        self.for_each_chunk(y, REDUCE_BLOCK, |k, c| {
            let lo = k * REDUCE_BLOCK;
            let len = c.len();
            for (yi, xi) in c.iter_mut().zip(&x[lo..lo + len]) {
                *yi += alpha * xi;
            }
        });
    }
}

/// Sums per-row contributions pairing row `i` with row `n - 1 - i` first.
///
/// Reversing the row order leaves the result bit-identical, which is what
/// makes energies of `t -> -t` reflected fields compare exactly.
pub fn fold_mirrored(rows: &[f64]) -> f64 {
    let n = rows.len();
    let mut acc = 0.0;
    for i in 0..n / 2 {
        acc += rows[i] + rows[n - 1 - i];
    }
    if n % 2 == 1 {
        acc += rows[n / 2];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_bitwise() {
        let a: Vec<f64> = (0..10_007).map(|i| ((i as f64) * 0.37).sin()).collect();
        let b: Vec<f64> = (0..10_007).map(|i| ((i as f64) * 0.11).cos()).collect();
        let s = Exec::Sequential.dot(&a, &b);
        let p = Exec::Parallel.dot(&a, &b);
        assert_eq!(s.to_bits(), p.to_bits());
        assert_eq!(
            Exec::Sequential.sup_norm(&a).to_bits(),
            Exec::Parallel.sup_norm(&a).to_bits()
        );
    }

    #[test]
    fn mirrored_fold_is_reversal_invariant() {
        let rows: Vec<f64> = (0..101).map(|i| 1.0 / (1.0 + i as f64).powi(3)).collect();
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(
            fold_mirrored(&rows).to_bits(),
            fold_mirrored(&rev).to_bits()
        );
    }
}
