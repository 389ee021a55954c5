use rayon::prelude::*;

use super::SolverError;
use crate::state_space::Ctmc;
use crate::Scalar;

/// Factor applied to the largest exit rate to obtain `q`.
pub const UNIFORMIZATION_HEADROOM: f64 = 1.02;

const PARALLEL_THRESHOLD: usize = 20_000;

/// The one-step matrix `P = I + Q/q`, stored by column so that `v·P` is a
/// gather over incoming transitions.
#[derive(Debug, Clone)]
pub struct Uniformized<T> {
    q: T,
    diag: Vec<T>,
    col_offsets: Vec<usize>,
    sources: Vec<u32>,
    probs: Vec<T>,
}

pub fn uniformize<T: Scalar>(ctmc: &Ctmc<T>) -> Result<Uniformized<T>, SolverError> {
    let n = ctmc.num_states();
    if n == 0 {
        return Err(SolverError::EmptyChain);
    }
    let max_exit = ctmc.max_exit_rate();
    let q = if max_exit > T::zero() {
        max_exit * T::lit(UNIFORMIZATION_HEADROOM)
    } else {
        T::one()
    };

    let mut counts = vec![0usize; n + 1];
    for s in 0..n {
        for (t, _) in ctmc.transitions_from(s) {
            counts[t + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_offsets = counts.clone();
    let mut fill = counts;
    let nnz = ctmc.num_transitions();
    let mut sources = vec![0u32; nnz];
    let mut probs = vec![T::zero(); nnz];
    let mut diag = vec![T::one(); n];
    for (s, d) in diag.iter_mut().enumerate() {
        let mut off = T::zero();
        for (t, r) in ctmc.transitions_from(s) {
            let p = r / q;
            sources[fill[t]] = s as u32;
            probs[fill[t]] = p;
            fill[t] += 1;
            off = off + p;
        }
        *d = T::one() - off;
    }
    Ok(Uniformized {
        q,
        diag,
        col_offsets,
        sources,
        probs,
    })
}

impl<T: Scalar> Uniformized<T> {
    pub fn rate(&self) -> T {
        self.q
    }

    pub fn num_states(&self) -> usize {
        self.diag.len()
    }

    /// Writes `v·P` into `out`.
    pub fn step(&self, v: &[T], out: &mut [T]) {
        let gather = |(j, o): (usize, &mut T)| {
            let mut acc = v[j] * self.diag[j];
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                acc = acc + v[self.sources[k] as usize] * self.probs[k];
            }
            *o = acc;
        };
        if out.len() >= PARALLEL_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(gather);
        } else {
            out.iter_mut().enumerate().for_each(gather);
        }
    }

    /// Row sums of `P`, each one up to rounding.
    pub fn row_sums(&self) -> Vec<T> {
        let mut sums = self.diag.clone();
        for j in 0..self.num_states() {
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                let s = self.sources[k] as usize;
                sums[s] = sums[s] + self.probs[k];
            }
        }
        sums
    }

    /// Row `i` of `P` as `(column, probability)` pairs, diagonal included.
    pub(crate) fn dense_rows(&self) -> Vec<Vec<(usize, T)>> {
        let n = self.num_states();
        let mut rows: Vec<Vec<(usize, T)>> = (0..n).map(|i| vec![(i, self.diag[i])]).collect();
        for j in 0..n {
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                rows[self.sources[k] as usize].push((j, self.probs[k]));
            }
        }
        rows
    }
}
