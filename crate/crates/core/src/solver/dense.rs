use rayon::prelude::*;

use super::transient::normalize;
use super::{
    check_time, poisson_terms, uniformize, SolverError, SolverSettings, TransientSolution,
};
use crate::state_space::Ctmc;
use crate::Scalar;

/// Largest chain accepted by [`transient_grid_by_squaring`].
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Distributions at `0, h, 2h, …, (points-1)·h` for chains where `q·h` is
/// far too large for a plain power sequence.
///
/// The step matrix `exp(Qh)` is built densely: uniformization gives
/// `exp(Qh/2^k)` for `q·h/2^k ≤ 1`, then `k` squarings give `exp(Qh)`.
/// The base tolerance is tightened by `2^k` to absorb the error growth of
/// squaring. Every grid point then costs one dense vector-matrix product.
pub fn transient_grid_by_squaring<T: Scalar>(
    ctmc: &Ctmc<T>,
    step: T,
    points: usize,
    settings: &SolverSettings<T>,
    dense_limit: usize,
) -> Result<TransientSolution<T>, SolverError> {
    check_time(step)?;
    let n = ctmc.num_states();
    if n > dense_limit {
        return Err(SolverError::TooLargeForDense {
            states: n,
            limit: dense_limit,
        });
    }
    let u = uniformize(ctmc)?;
    let q = u.rate();
    let qh = q * step;
    let mut squarings = 0u32;
    let mut base_qt = qh;
    while base_qt > T::one() {
        base_qt = base_qt / T::lit(2.0);
        squarings += 1;
    }
    let shrink = T::lit(2f64.powi(squarings as i32 + 1));
    let floor = T::epsilon();
    let base_settings = SolverSettings {
        eps_left: (settings.eps_left / shrink).max(floor),
        eps_right: (settings.eps_right / shrink).max(floor),
    };
    let window = poisson_terms(base_qt, &base_settings);
    log::debug!(
        "dense step matrix: {n} states, q={q}, {squarings} squarings, {} base terms",
        window.right + 1
    );

    let rows = u.dense_rows();
    let mut power = identity::<T>(n);
    let mut m = vec![T::zero(); n * n];
    for i in 0..=window.right {
        let w = window.weight(i);
        if w > T::zero() {
            for (a, &p) in m.iter_mut().zip(&power) {
                *a = *a + w * p;
            }
        }
        if i < window.right {
            power = times_sparse(&power, &rows, n);
        }
    }
    for _ in 0..squarings {
        m = square(&m, n);
    }

    let mut times = Vec::with_capacity(points);
    let mut distributions = Vec::with_capacity(points);
    let mut v = ctmc.initial().to_vec();
    for k in 0..points {
        if k > 0 {
            v = vec_times_dense(&v, &m, n);
            normalize(&mut v, step * T::from_usize(k).unwrap());
        }
        times.push(step * T::from_usize(k).unwrap());
        distributions.push(v.clone());
    }
    Ok(TransientSolution {
        times,
        distributions,
    })
}

fn identity<T: Scalar>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

fn times_sparse<T: Scalar>(a: &[T], rows: &[Vec<(usize, T)>], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, o)| {
        for (k, &x) in a[i * n..(i + 1) * n].iter().enumerate() {
            if x != T::zero() {
                for &(j, p) in &rows[k] {
                    o[j] = o[j] + x * p;
                }
            }
        }
    });
    out
}

fn square<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, o)| {
        for (k, &x) in a[i * n..(i + 1) * n].iter().enumerate() {
            if x != T::zero() {
                for (oj, &b) in o.iter_mut().zip(&a[k * n..(k + 1) * n]) {
                    *oj = *oj + x * b;
                }
            }
        }
    });
    out
}

fn vec_times_dense<T: Scalar>(v: &[T], m: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (k, &x) in v.iter().enumerate() {
        if x != T::zero() {
            for (o, &b) in out.iter_mut().zip(&m[k * n..(k + 1) * n]) {
                *o = *o + x * b;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::san::Marking;
    use crate::solver::transient_sweep;

    #[test]
    fn agrees_with_power_sequence() {
        let c = Ctmc::from_transitions(
            (0..3).map(|i| Marking::new(vec![i])).collect(),
            &[(0, 1, 5.0), (1, 0, 40.0), (1, 2, 0.5), (2, 0, 0.01)],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let s = SolverSettings::default();
        let grid = transient_grid_by_squaring(&c, 3.0f64, 6, &s, DEFAULT_DENSE_LIMIT).unwrap();
        let sweep = transient_sweep(&c, &grid.times, &s).unwrap();
        for (a, b) in grid.distributions.iter().zip(&sweep.distributions) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn refuses_large_chains() {
        let c = Ctmc::from_transitions(
            vec![Marking::new(vec![0]), Marking::new(vec![1])],
            &[(0, 1, 1.0)],
            vec![1.0, 0.0],
        )
        .unwrap();
        let err =
            transient_grid_by_squaring(&c, 1.0, 2, &SolverSettings::default(), 1).unwrap_err();
        assert!(matches!(err, SolverError::TooLargeForDense { .. }));
    }
}
