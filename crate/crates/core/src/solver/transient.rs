use super::{check_time, poisson_terms, uniformize, PoissonWindow, SolverError, SolverSettings};
use crate::state_space::Ctmc;
use crate::Scalar;

/// State distributions at a list of time points.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSolution<T> {
    pub times: Vec<T>,
    pub distributions: Vec<Vec<T>>,
}

impl<T: Scalar> TransientSolution<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `π(t)` from the chain's own initial distribution.
pub fn transient<T: Scalar>(
    ctmc: &Ctmc<T>,
    t: T,
    settings: &SolverSettings<T>,
) -> Result<Vec<T>, SolverError> {
    transient_from(ctmc, ctmc.initial(), t, settings)
}

/// `π(t)` starting from an arbitrary distribution `start`.
pub fn transient_from<T: Scalar>(
    ctmc: &Ctmc<T>,
    start: &[T],
    t: T,
    settings: &SolverSettings<T>,
) -> Result<Vec<T>, SolverError> {
    let mut sol = sweep_distributions(ctmc, start, &[t], settings)?;
    Ok(sol.distributions.pop().expect("one time point"))
}

/// Distributions at every point of `times` (ascending), from one shared
/// sequence of DTMC iterates.
pub fn transient_sweep<T: Scalar>(
    ctmc: &Ctmc<T>,
    times: &[T],
    settings: &SolverSettings<T>,
) -> Result<TransientSolution<T>, SolverError> {
    sweep_distributions(ctmc, ctmc.initial(), times, settings)
}

/// Expected instantaneous rewards at every point of `times`, without
/// materializing the distributions. `rewards[k]` holds one value per state
/// and the result is indexed `[k][time]`.
pub fn transient_sweep_rewards<T: Scalar>(
    ctmc: &Ctmc<T>,
    times: &[T],
    rewards: &[Vec<T>],
    settings: &SolverSettings<T>,
) -> Result<Vec<Vec<T>>, SolverError> {
    let n = ctmc.num_states();
    for r in rewards {
        if r.len() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                found: r.len(),
            });
        }
    }
    let mut sums = vec![vec![T::zero(); times.len()]; rewards.len()];
    let mut mass = vec![T::zero(); times.len()];
    power_sequence(ctmc, ctmc.initial(), times, settings, |v, active| {
        let total: T = v.iter().copied().sum();
        let dots: Vec<T> = rewards
            .iter()
            .map(|r| v.iter().zip(r).map(|(&a, &b)| a * b).sum())
            .collect();
        for &(point, w) in active {
            mass[point] = mass[point] + w * total;
            for (k, &d) in dots.iter().enumerate() {
                sums[k][point] = sums[k][point] + w * d;
            }
        }
    })?;
    for row in &mut sums {
        for (x, &m) in row.iter_mut().zip(&mass) {
            *x = *x / m;
        }
    }
    Ok(sums)
}

fn sweep_distributions<T: Scalar>(
    ctmc: &Ctmc<T>,
    start: &[T],
    times: &[T],
    settings: &SolverSettings<T>,
) -> Result<TransientSolution<T>, SolverError> {
    let n = ctmc.num_states();
    let mut acc = vec![vec![T::zero(); n]; times.len()];
    power_sequence(ctmc, start, times, settings, |v, active| {
        for &(point, w) in active {
            for (a, &x) in acc[point].iter_mut().zip(v) {
                *a = *a + w * x;
            }
        }
    })?;
    for (dist, &t) in acc.iter_mut().zip(times) {
        normalize(dist, t);
    }
    Ok(TransientSolution {
        times: times.to_vec(),
        distributions: acc,
    })
}

/// Clips negative entries and rescales to unit mass.
pub(crate) fn normalize<T: Scalar>(dist: &mut [T], t: T) {
    let mut clipped = T::zero();
    for x in dist.iter_mut() {
        if *x < T::zero() {
            clipped = clipped - *x;
            *x = T::zero();
        }
    }
    let total: T = dist.iter().copied().sum();
    if total > T::zero() {
        for x in dist.iter_mut() {
            *x = *x / total;
        }
    }
    log::debug!(
        "t={t}: clipped {clipped}, renormalized by {}",
        (total - T::one()).abs()
    );
}

/// Drives `v_i = v_0·P^i` up to the largest right truncation point and, for
/// each `i`, hands `visit` the iterate together with the `(point, weight)`
/// pairs whose window contains `i`.
fn power_sequence<T: Scalar>(
    ctmc: &Ctmc<T>,
    start: &[T],
    times: &[T],
    settings: &SolverSettings<T>,
    mut visit: impl FnMut(&[T], &[(usize, T)]),
) -> Result<(), SolverError> {
    let n = ctmc.num_states();
    if n == 0 {
        return Err(SolverError::EmptyChain);
    }
    if start.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            found: start.len(),
        });
    }
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SolverError::UnsortedTimes);
    }
    let u = uniformize(ctmc)?;
    let q = u.rate();
    let windows: Vec<PoissonWindow<T>> = times
        .iter()
        .map(|&t| poisson_terms(q * t, settings))
        .collect();
    let last = windows.iter().map(|w| w.right).max().unwrap_or(0);
    log::debug!(
        "uniformization: q={q}, {} points, {} iterations on {n} states",
        times.len(),
        last
    );

    let mut v = start.to_vec();
    let mut next = vec![T::zero(); n];
    let mut active: Vec<(usize, T)> = Vec::new();
    let mut first_open = 0;
    for i in 0..=last {
        active.clear();
        while first_open < windows.len() && windows[first_open].right < i {
            first_open += 1;
        }
        for (k, w) in windows.iter().enumerate().skip(first_open) {
            if w.left <= i && i <= w.right {
                active.push((k, w.weights[i - w.left]));
            }
        }
        if !active.is_empty() {
            visit(&v, &active);
        }
        if i < last {
            u.step(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::san::Marking;

    fn up_down(l: f64, m: f64) -> Ctmc<f64> {
        Ctmc::from_transitions(
            vec![Marking::new(vec![1]), Marking::new(vec![0])],
            &[(0, 1, l), (1, 0, m)],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    fn closed_form(l: f64, m: f64, t: f64) -> f64 {
        let s = m / (l + m);
        s + (1.0 - s) * (-(l + m) * t).exp()
    }

    #[test]
    fn zero_time_is_initial() {
        let c = up_down(1.0, 2.0);
        assert_eq!(
            transient(&c, 0.0, &SolverSettings::default()).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn matches_closed_form() {
        let (l, m) = (0.3, 1.7);
        let c = up_down(l, m);
        let s = SolverSettings::default();
        for t in [0.01, 0.5, 2.0, 10.0, 100.0] {
            let pi = transient(&c, t, &s).unwrap();
            assert!((pi[0] - closed_form(l, m, t)).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn sweep_agrees_with_single_points() {
        let c = up_down(0.3, 1.7);
        let s = SolverSettings::default();
        let times = [0.0, 0.1, 1.0, 3.0];
        let sweep = transient_sweep(&c, &times, &s).unwrap();
        for (t, d) in times.iter().zip(&sweep.distributions) {
            let single = transient(&c, *t, &s).unwrap();
            assert!((single[0] - d[0]).abs() < 1e-15);
        }
        let r = transient_sweep_rewards(&c, &times, &[vec![1.0, 0.0]], &s).unwrap();
        for (x, d) in r[0].iter().zip(&sweep.distributions) {
            assert!((x - d[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_unsorted_and_negative_times() {
        let c = up_down(1.0, 1.0);
        let s = SolverSettings::default();
        assert_eq!(
            transient_sweep(&c, &[1.0, 0.5], &s).unwrap_err(),
            SolverError::UnsortedTimes
        );
        assert!(matches!(
            transient(&c, -1.0, &s),
            Err(SolverError::InvalidTime(_))
        ));
    }
}
