//! The ground-truth success-probability table and the Bernoulli trial
//! sampler built on it.

use super::SceneError;
use crate::domain::{ActionId, EnvClass, FoodCategory, ForkRoll, Outcome};
use crate::seeds;
use crate::stats::{SuccessTable, TrialRecord};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Success probability for every (category, environment, action) triple.
///
/// This table is the single source of simulated ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    /// Indexed `[FoodCategory::index()][EnvClass::index()][ActionId::ordinal()]`.
    p: [[[f64; ActionId::COUNT]; EnvClass::COUNT]; FoodCategory::COUNT],
}

/// Per-category base rates in the isolated environment, in hundredths,
/// action order VS-0, VS-90, TV-0, TV-90, TA-0, TA-90.
///
/// Each category has a distinct best action with a margin of at least 0.15
/// over the runner-up in every environment: long favors VS-90 (rolls at 90
/// degrees track the skewering axis of slender items), non-flat favors the
/// angled TA-0, flat favors the plain vertical VS-0, leafy favors TV-0.
/// Rates vary smoothly across the category ordering non-flat, long, flat,
/// leafy, matching the smooth color ramp of the synthetic items.
const BASE_ISO: [[i32; 6]; 4] = [
    // Long
    [40, 78, 42, 56, 56, 48],
    // NonFlat
    [25, 44, 30, 22, 86, 70],
    // Flat
    [78, 60, 60, 48, 34, 27],
    // Leafy
    [55, 46, 78, 40, 12, 8],
];

/// Additive environment effects in hundredths: a wall or a stack supports
/// the angled approach, a stack lifts everything slightly.
const WALL_DELTA: [i32; 6] = [-4, -4, -4, -4, 3, 3];
const STACK_DELTA: [i32; 6] = [2, 2, 4, 2, 8, 8];

/// The fixed default table; see the constants above for its construction.
pub fn default_oracle() -> OracleTable {
    let mut p = [[[0.0; ActionId::COUNT]; EnvClass::COUNT]; FoodCategory::COUNT];
    for cat in FoodCategory::ALL {
        for env in EnvClass::ALL {
            for action in ActionId::ALL {
                let base = BASE_ISO[cat.index()][action.ordinal()];
                let delta = match env {
                    EnvClass::Iso => 0,
                    EnvClass::Wall => WALL_DELTA[action.ordinal()],
                    EnvClass::Stack => STACK_DELTA[action.ordinal()],
                };
                p[cat.index()][env.index()][action.ordinal()] = (base + delta) as f64 / 100.0;
            }
        }
    }
    OracleTable { p }
}

impl OracleTable {
    pub fn from_probabilities(
        p: [[[f64; ActionId::COUNT]; EnvClass::COUNT]; FoodCategory::COUNT],
    ) -> Result<Self, SceneError> {
        for cat in p.iter().flatten().flatten() {
            if !(0.0..=1.0).contains(cat) {
                return Err(SceneError::BadConfig(format!("oracle probability {cat} outside [0,1]")));
            }
        }
        Ok(OracleTable { p })
    }

    pub fn get(&self, category: FoodCategory, env: EnvClass, action: ActionId) -> f64 {
        self.p[category.index()][env.index()][action.ordinal()]
    }

    pub fn set(&mut self, category: FoodCategory, env: EnvClass, action: ActionId, value: f64) {
        self.p[category.index()][env.index()][action.ordinal()] = value;
    }

    pub fn rate_vector(&self, category: FoodCategory, env: EnvClass) -> [f64; ActionId::COUNT] {
        self.p[category.index()][env.index()]
    }

    pub fn best_action(&self, category: FoodCategory, env: EnvClass) -> (ActionId, f64) {
        let rates = self.rate_vector(category, env);
        let mut best = 0usize;
        for (i, &r) in rates.iter().enumerate().skip(1) {
            if r > rates[best] {
                best = i;
            }
        }
        (ActionId::from_ordinal(best).unwrap(), rates[best])
    }

    /// Mean rate over the six actions; the value a uniform-random policy
    /// attains in expectation.
    pub fn mean_rate(&self, category: FoodCategory, env: EnvClass) -> f64 {
        self.rate_vector(category, env).iter().sum::<f64>() / ActionId::COUNT as f64
    }

    /// Exact success-table view with `per_cell` synthetic trials per cell.
    /// Probabilities are rounded to the nearest count.
    pub fn to_success_table(&self, per_cell: u32) -> SuccessTable {
        let mut table = SuccessTable::default();
        for cat in FoodCategory::ALL {
            for env in EnvClass::ALL {
                for action in ActionId::ALL {
                    let p = self.get(cat, env, action);
                    let s = (p * per_cell as f64).round() as u32;
                    for _ in 0..s {
                        table.record(cat.as_str(), env, action, true);
                    }
                    for _ in 0..per_cell - s {
                        table.record(cat.as_str(), env, action, false);
                    }
                }
            }
        }
        table
    }
}

/// One Bernoulli draw against the oracle.
pub fn sample_trial(
    category: FoodCategory,
    env: EnvClass,
    action: ActionId,
    oracle: &OracleTable,
    rng: &mut ChaCha8Rng,
) -> bool {
    rng.gen::<f64>() < oracle.get(category, env, action)
}

/// Bernoulli trial records for every (category, env, action) triple, with
/// `trials_per_config` draws each. Categories listed in `symmetric` emit
/// only roll-0 records, the single-roll protocol for rotationally
/// symmetric items.
pub fn generate_trial_dataset(
    oracle: &OracleTable,
    trials_per_config: u32,
    seed: u64,
    symmetric: &[FoodCategory],
) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    for cat in FoodCategory::ALL {
        for env in EnvClass::ALL {
            for action in ActionId::ALL {
                if symmetric.contains(&cat) && action.roll == ForkRoll::R90 {
                    continue;
                }
                let mut rng = seeds::rng(
                    seed,
                    "trial",
                    (cat.index() * EnvClass::COUNT * ActionId::COUNT
                        + env.index() * ActionId::COUNT
                        + action.ordinal()) as u64,
                );
                for k in 0..trials_per_config {
                    let success = sample_trial(cat, env, action, oracle, &mut rng);
                    records.push(TrialRecord {
                        trial_id: format!("{}-{}-{}-{:03}", cat, env, action, k),
                        item: cat.as_str().to_string(),
                        category: Some(cat),
                        macro_action: action.macro_action,
                        roll: action.roll,
                        env,
                        outcome: if success { Outcome::Success } else { Outcome::Failure },
                    });
                }
            }
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_lie_in_range() {
        let oracle = default_oracle();
        for cat in FoodCategory::ALL {
            for env in EnvClass::ALL {
                for action in ActionId::ALL {
                    let p = oracle.get(cat, env, action);
                    assert!((0.05..=0.95).contains(&p), "({cat},{env},{action}) = {p}");
                }
            }
        }
    }

    #[test]
    fn best_action_margin_at_least_015_everywhere() {
        let oracle = default_oracle();
        for cat in FoodCategory::ALL {
            for env in EnvClass::ALL {
                let mut rates = oracle.rate_vector(cat, env).to_vec();
                rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let margin = rates[0] - rates[1];
                assert!(margin >= 0.15 - 1e-12, "({cat},{env}) margin {margin:.3}");
            }
        }
    }

    #[test]
    fn long_prefers_roll_90_in_isolation() {
        let oracle = default_oracle();
        let vs0 = oracle.get(FoodCategory::Long, EnvClass::Iso, "VS-0".parse().unwrap());
        let vs90 = oracle.get(FoodCategory::Long, EnvClass::Iso, "VS-90".parse().unwrap());
        assert!(vs90 - vs0 >= 0.15);
        // and the best action for long is a 90-degree roll in every env
        for env in EnvClass::ALL {
            let (best, _) = oracle.best_action(FoodCategory::Long, env);
            assert_eq!(best.roll, ForkRoll::R90, "long best in {env} is {best}");
        }
    }

    #[test]
    fn wall_and_stack_boost_ta_for_non_flat() {
        let oracle = default_oracle();
        for roll in ["TA-0", "TA-90"] {
            let action: ActionId = roll.parse().unwrap();
            let iso = oracle.get(FoodCategory::NonFlat, EnvClass::Iso, action);
            assert!(oracle.get(FoodCategory::NonFlat, EnvClass::Wall, action) > iso);
            assert!(oracle.get(FoodCategory::NonFlat, EnvClass::Stack, action) > iso);
        }
    }

    #[test]
    fn leafy_stack_prefers_tv_vs_over_ta() {
        let oracle = default_oracle();
        let rates = oracle.rate_vector(FoodCategory::Leafy, EnvClass::Stack);
        let tv_vs_max = rates[..4].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ta_max = rates[4..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(tv_vs_max > ta_max);
    }

    #[test]
    fn extreme_probabilities_are_deterministic() {
        let mut oracle = default_oracle();
        let action = ActionId::ALL[0];
        oracle.set(FoodCategory::Flat, EnvClass::Iso, action, 1.0);
        let mut rng = seeds::rng(1, "t", 0);
        assert!((0..200).all(|_| sample_trial(FoodCategory::Flat, EnvClass::Iso, action, &oracle, &mut rng)));
        oracle.set(FoodCategory::Flat, EnvClass::Iso, action, 0.0);
        assert!((0..200).all(|_| !sample_trial(FoodCategory::Flat, EnvClass::Iso, action, &oracle, &mut rng)));
    }

    #[test]
    fn bernoulli_rate_concentrates() {
        let mut oracle = default_oracle();
        let action = ActionId::ALL[3];
        oracle.set(FoodCategory::Leafy, EnvClass::Wall, action, 0.7);
        let mut rng = seeds::rng(42, "t", 1);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sample_trial(FoodCategory::Leafy, EnvClass::Wall, action, &oracle, &mut rng))
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.7).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn dataset_counts_match_closed_form() {
        let oracle = default_oracle();
        let all = generate_trial_dataset(&oracle, 10, 3, &[]);
        assert_eq!(all.len(), 4 * 3 * 6 * 10);

        let with_symmetric = generate_trial_dataset(&oracle, 10, 3, &[FoodCategory::NonFlat]);
        let non_flat_rows =
            with_symmetric.iter().filter(|r| r.category == Some(FoodCategory::NonFlat)).count();
        assert_eq!(non_flat_rows, 3 * 3 * 10);
        assert_eq!(with_symmetric.len(), 3 * 3 * 6 * 10 + 90);
    }

    #[test]
    fn dataset_is_deterministic_in_seed() {
        let oracle = default_oracle();
        assert_eq!(
            generate_trial_dataset(&oracle, 10, 9, &[]),
            generate_trial_dataset(&oracle, 10, 9, &[])
        );
        assert_ne!(
            generate_trial_dataset(&oracle, 10, 9, &[]),
            generate_trial_dataset(&oracle, 10, 10, &[])
        );
    }

    #[test]
    fn empirical_rates_track_oracle_within_binomial_noise() {
        let oracle = default_oracle();
        let records = generate_trial_dataset(&oracle, 10, 11, &[]);
        let table = SuccessTable::from_records(&records).unwrap();
        let mut abs_dev = Vec::new();
        for cat in FoodCategory::ALL {
            for env in EnvClass::ALL {
                for action in ActionId::ALL {
                    let emp = table.rate(cat.as_str(), env, action).unwrap();
                    abs_dev.push((emp - oracle.get(cat, env, action)).abs());
                }
            }
        }
        let mean_dev = abs_dev.iter().sum::<f64>() / abs_dev.len() as f64;
        // E|X/10 - p| for Binomial(10, p) sits near 0.11 over this table.
        assert!((0.05..=0.18).contains(&mean_dev), "mean deviation {mean_dev}");
    }

    #[test]
    fn success_table_view_is_exact() {
        let oracle = default_oracle();
        let table = oracle.to_success_table(100);
        for cat in FoodCategory::ALL {
            for env in EnvClass::ALL {
                for action in ActionId::ALL {
                    let rate = table.rate(cat.as_str(), env, action).unwrap();
                    assert!((rate - oracle.get(cat, env, action)).abs() < 1e-12);
                }
            }
        }
    }
}
