//! Closed-form quantities shared by the cluster models.

use crate::Scalar;

/// Followers needed next to the leader for a majority, `⌊C/2⌋`.
pub fn majority_followers(c: u32) -> u32 {
    c / 2
}

/// Role-classification threshold `⌈(C−1)/2 + 1⌉`.
pub fn role_threshold(c: u32) -> u32 {
    (c + 2) / 2
}

/// Logged failures after which a lagging follower is assumed to sit in the
/// majority, `⌊(C−1)/2⌋ + 1`.
pub fn lagging_threshold(c: u32) -> u32 {
    (c - 1) / 2 + 1
}

/// Leader-to-majority delay `T_M = (C−1)/F_up · T_M_best`, defined only
/// while `F_up ≥ ⌊C/2⌋`.
pub fn majority_delay<T: Scalar>(c: u32, f_up: u32, t_m_best: T) -> Option<T> {
    if f_up == 0 || f_up < majority_followers(c) || f_up > c - 1 {
        return None;
    }
    Some(T::from_u32(c - 1)? / T::from_u32(f_up)? * t_m_best)
}

/// Probabilities that a failure hits a safe follower, breaks the follower
/// majority, or hits the leader, given the roles before the failure.
pub fn failure_role_probabilities<T: Scalar>(c: u32, f_up: u32, l_up: u32) -> (T, T, T) {
    if l_up > 0 && f_up >= role_threshold(c) {
        let denom = T::from_u32(f_up + 1).unwrap();
        let ldr = T::one() / denom;
        (T::one() - ldr, T::zero(), ldr)
    } else {
        (T::zero(), T::one(), T::zero())
    }
}

/// Rate of the superposition of two independent Poisson processes.
pub fn merged_failure_rate<T: Scalar>(lambda_c: T, lambda_d: T) -> T {
    lambda_c + lambda_d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_endpoints() {
        assert_eq!(majority_delay(5, 4, 5.0f64), Some(5.0));
        assert_eq!(majority_delay(5, 2, 5.0f64), Some(10.0));
        assert_eq!(majority_delay(5, 1, 5.0f64), None);
        assert_eq!(majority_delay(3, 0, 5.0f64), None);
    }

    #[test]
    fn role_probabilities() {
        let (sf, mj, ldr) = failure_role_probabilities::<f64>(5, 4, 1);
        assert!((sf - 0.8).abs() < 1e-15 && mj == 0.0 && (ldr - 0.2).abs() < 1e-15);
        assert_eq!(failure_role_probabilities::<f64>(5, 2, 1), (0.0, 1.0, 0.0));
        for f in 0..5 {
            assert_eq!(failure_role_probabilities::<f64>(5, f, 0), (0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn merged_rates() {
        assert_eq!(merged_failure_rate(0.25f64, 0.0), 0.25);
        assert_eq!(merged_failure_rate(0.0f64, 0.0), 0.0);
        let week = 168.0f64;
        assert!((1.0 / merged_failure_rate(1.0 / week, 1.0 / week) - 84.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_for_odd_sizes() {
        for c in (3..=21).step_by(2) {
            assert_eq!(role_threshold(c), (c - 1) / 2 + 1);
            assert_eq!(lagging_threshold(c), role_threshold(c));
            assert_eq!(majority_followers(c), (c - 1) / 2);
        }
    }
}
