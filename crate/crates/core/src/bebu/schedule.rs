use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EpsilonSchedule {
    /// `(h − H)² / H²`, from 1 at the first frame to 0 at the last.
    #[default]
    Quadratic,
    Constant { value: f64 },
}

/// Exploration rate at frame `h` of `total`; frames past the end give 0.
pub fn epsilon_at(h: u64, total: u64, schedule: EpsilonSchedule) -> f64 {
    match schedule {
        EpsilonSchedule::Constant { value } => value,
        EpsilonSchedule::Quadratic => {
            if total == 0 || h >= total {
                0.0
            } else {
                let r = (total - h) as f64 / total as f64;
                r * r
            }
        }
    }
}

/// Head that drives behaviour for a whole episode.
pub fn head_for_episode(rng: &mut Rng, heads: usize) -> usize {
    rng.random_range(0..heads.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn quadratic_endpoints_and_midpoint() {
        let q = EpsilonSchedule::Quadratic;
        assert_eq!(epsilon_at(0, 1000, q), 1.0);
        assert_eq!(epsilon_at(1000, 1000, q), 0.0);
        assert_eq!(epsilon_at(500, 1000, q), 0.25);
        assert_eq!(epsilon_at(2000, 1000, q), 0.0);
        assert_eq!(epsilon_at(0, 0, q), 0.0);
    }

    #[test]
    fn quadratic_is_non_increasing() {
        let q = EpsilonSchedule::Quadratic;
        let eps: Vec<f64> = (0..=100).map(|h| epsilon_at(h, 100, q)).collect();
        assert!(eps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn head_frequencies_are_uniform() {
        let mut rng = rng_from(5);
        assert_eq!(head_for_episode(&mut rng, 1), 0);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            counts[head_for_episode(&mut rng, 10)] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 / 10_000.0 - 0.1).abs() <= 0.01));
    }
}
