use super::SolverSettings;
use crate::Scalar;

/// Truncated Poisson weights `w[i - left] ≈ Pois(i; qt)` for
/// `left ≤ i ≤ right`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWindow<T> {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<T>,
}

impl<T: Scalar> PoissonWindow<T> {
    pub fn weight(&self, i: usize) -> T {
        if i < self.left || i > self.right {
            T::zero()
        } else {
            self.weights[i - self.left]
        }
    }

    pub fn total(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Poisson weights for uniformization.
///
/// Terms are generated outward from the mode starting at 1, so nothing
/// overflows, and each side stops once a geometric bound on its remaining
/// tail is negligible. The window is then cut so that the normalized mass
/// left out below is at most `eps_left` and above at most `eps_right`.
pub fn poisson_terms<T: Scalar>(qt: T, settings: &SolverSettings<T>) -> PoissonWindow<T> {
    assert!(
        qt >= T::zero() && qt.is_finite(),
        "qt must be finite and nonnegative"
    );
    if qt == T::zero() {
        return PoissonWindow {
            left: 0,
            right: 0,
            weights: vec![T::one()],
        };
    }
    let mode = qt.floor().to_usize().expect("qt too large");
    let stop = settings.eps_left.min(settings.eps_right) * T::lit(1e-3);

    let mut total = T::one();
    let mut below: Vec<T> = Vec::new();
    let mut w = T::one();
    let mut k = mode;
    let low_bound = loop {
        if k == 0 {
            break T::zero();
        }
        let rho = T::from_usize(k).unwrap() / qt;
        let bound = if rho < T::one() {
            w * rho / (T::one() - rho)
        } else {
            T::infinity()
        };
        if bound <= stop * total {
            break bound;
        }
        w = w * rho;
        below.push(w);
        total = total + w;
        k -= 1;
    };
    let lowest = k;

    let mut above: Vec<T> = Vec::new();
    let mut w = T::one();
    let mut k = mode;
    let high_bound = loop {
        let rho = qt / T::from_usize(k + 1).unwrap();
        let bound = if rho < T::one() {
            w * rho / (T::one() - rho)
        } else {
            T::infinity()
        };
        if bound <= stop * total {
            break bound;
        }
        w = w * rho;
        above.push(w);
        total = total + w;
        k += 1;
    };

    let mut terms: Vec<T> = below.into_iter().rev().collect();
    terms.push(T::one());
    terms.extend(above);
    for t in &mut terms {
        *t = *t / total;
    }
    let low_bound = low_bound / total;
    let high_bound = high_bound / total;

    let mut lo = 0;
    let mut cut = low_bound;
    while lo + 1 < terms.len() && cut + terms[lo] <= settings.eps_left {
        cut = cut + terms[lo];
        lo += 1;
    }
    let mut hi = terms.len() - 1;
    let mut cut = high_bound;
    while hi > lo && cut + terms[hi] <= settings.eps_right {
        cut = cut + terms[hi];
        hi -= 1;
    }
    let weights = terms[lo..=hi].to_vec();
    PoissonWindow {
        left: lowest + lo,
        right: lowest + hi,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_at_zero() {
        let w = poisson_terms(0.0f64, &SolverSettings::default());
        assert_eq!((w.left, w.right, w.weights.clone()), (0, 0, vec![1.0]));
    }

    #[test]
    fn small_rate_matches_pmf() {
        let w = poisson_terms(2.0f64, &SolverSettings::default());
        assert_eq!(w.left, 0);
        let mut pmf = (-2.0f64).exp();
        for i in 0..=w.right {
            assert!((w.weight(i) - pmf).abs() < 1e-12, "i={i}");
            pmf *= 2.0 / (i + 1) as f64;
        }
    }

    #[test]
    fn large_rate_is_finite() {
        let s = SolverSettings::default();
        let w = poisson_terms(1e7f64, &s);
        assert!(w.weights.iter().all(|x| x.is_finite()));
        let sum = w.total();
        assert!(sum <= 1.0 + 1e-12 && sum >= 1.0 - s.total());
        assert!(w.left < 10_000_000 && w.right > 10_000_000);
    }

    #[test]
    fn single_precision() {
        let s = SolverSettings::<f32>::new(1e-5, 1e-5).unwrap();
        let w = poisson_terms(50.0f32, &s);
        let sum = w.total();
        assert!((1.0 - 2e-5 - 1e-5..=1.0 + 1e-5).contains(&sum));
    }
}
