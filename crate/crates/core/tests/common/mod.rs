#![allow(dead_code)]

use fairlot::model::{int, Rational};
use fairlot::Instance;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Strict utilities: each row is a permutation of 1..=m.
pub fn strict_instance(n: usize, m: usize, rng: &mut impl Rng) -> Instance {
    let rows = (0..n)
        .map(|_| {
            let mut v: Vec<i64> = (1..=m as i64).collect();
            v.shuffle(rng);
            v.into_iter().map(int).collect()
        })
        .collect();
    Instance::from_utilities(rows).unwrap()
}

/// Utilities drawn from a small range, so ties are common.
pub fn weak_instance(n: usize, m: usize, rng: &mut impl Rng) -> Instance {
    let rows = (0..n)
        .map(|_| (0..m).map(|_| int(rng.gen_range(1..=3))).collect())
        .collect();
    Instance::from_utilities(rows).unwrap()
}

pub fn binary_instance(n: usize, m: usize, rng: &mut impl Rng) -> Instance {
    let rows = (0..n)
        .map(|_| (0..m).map(|_| int(rng.gen_range(0..=1))).collect())
        .collect();
    Instance::from_utilities(rows).unwrap()
}

/// Positive utilities consistent with `instance`'s ordinal profile.
pub fn consistent_positive(instance: &Instance, rng: &mut impl Rng) -> Instance {
    let rows = instance
        .ordinal_profile()
        .orders()
        .iter()
        .map(|order| {
            let mut row = vec![Rational::from_integer(0.into()); instance.num_items()];
            let mut level: i64 = 0;
            for tier in order.tiers().iter().rev() {
                level += rng.gen_range(1..=5);
                for &o in tier {
                    row[o] = int(level);
                }
            }
            row
        })
        .collect();
    Instance::new(instance.agents().to_vec(), instance.items().to_vec(), rows).unwrap()
}

pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}
