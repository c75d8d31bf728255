use fairlot::model::int;
use fairlot::Instance;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Each agent's utilities are a random permutation of `1..=m`, or 0/1 draws
/// when `binary` is set.
pub fn instance(n: usize, m: usize, seed: u64, binary: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            if binary {
                (0..m).map(|_| int(rng.gen_range(0..=1))).collect()
            } else {
                let mut v: Vec<i64> = (1..=m as i64).collect();
                v.shuffle(&mut rng);
                v.into_iter().map(int).collect()
            }
        })
        .collect();
    Instance::from_utilities(rows).expect("generated instances are valid")
}
