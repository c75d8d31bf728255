mod common;

use fairlot::eps::{eps_outcome, EpsMode};
use fairlot::fairness::{
    check_ef, check_ef1, check_rb, check_sd_ef, check_sd_ef1, check_strong_ef1, RemovalSemantics,
};
use fairlot::model::expected_allocation;
use fairlot::ps::ps_outcome;
use fairlot::pslottery::{ps_lottery, reduce_support, Rule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ps_lottery_implements_ps(seed in common::seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=7));
        let inst = common::strict_instance(n, m, &mut rng);
        let out = ps_lottery(&inst, Rule::Ps).unwrap();
        let (p, _) = ps_outcome(&inst.ordinal_profile()).unwrap();
        prop_assert_eq!(&expected_allocation(&out.lottery), &p);
        prop_assert_eq!(&out.outcome, &p);
        prop_assert!(out.lottery.support_size() <= out.support_bound());
        prop_assert!(check_sd_ef(&p, &inst.ordinal_profile()).unwrap().is_pass());
        prop_assert!(check_ef(&p, &inst).unwrap().is_pass());
        let c = m.div_ceil(n);
        for a in out.lottery.allocations() {
            prop_assert!(check_sd_ef1(a, &inst.ordinal_profile()).unwrap().is_pass());
            prop_assert!(check_strong_ef1(a, &inst).unwrap().is_pass());
            prop_assert!(check_ef1(a, &inst, RemovalSemantics::BothBundles).unwrap().is_pass());
            prop_assert!(check_rb(a, &inst.ordinal_profile(), c).unwrap().is_pass());
        }
        let reduced = reduce_support(&out.lottery);
        prop_assert!(reduced.support_size() <= n * m + 1);
        prop_assert_eq!(expected_allocation(&reduced), p);
        for a in reduced.allocations() {
            prop_assert!(out.lottery.allocations().any(|b| b == a));
        }
    }

    #[test]
    fn eps_lottery_implements_eps(seed in common::seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=7));
        let inst = common::weak_instance(n, m, &mut rng);
        let out = ps_lottery(&inst, Rule::Eps).unwrap();
        let direct = eps_outcome(&inst, EpsMode::Standard).unwrap();
        prop_assert_eq!(&expected_allocation(&out.lottery), &direct.allocation);
        prop_assert!(check_sd_ef(&direct.allocation, &inst.ordinal_profile()).unwrap().is_pass());
        for a in out.lottery.allocations() {
            prop_assert!(check_sd_ef1(a, &inst.ordinal_profile()).unwrap().is_pass());
        }
    }

    #[test]
    fn skip_zero_lottery_implements_outcome(seed in common::seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=6));
        let inst = common::binary_instance(n, m, &mut rng);
        let out = ps_lottery(&inst, Rule::EpsSkipZero).unwrap();
        let direct = eps_outcome(&inst, EpsMode::SkipZero).unwrap();
        prop_assert_eq!(&expected_allocation(&out.lottery), &direct.allocation);
        direct.trace.validate(m, None).unwrap();
    }

    #[test]
    fn ps_trace_is_consistent(seed in common::seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (rng.gen_range(1..=5), rng.gen_range(1..=8));
        let inst = common::strict_instance(n, m, &mut rng);
        let (p, trace) = ps_outcome(&inst.ordinal_profile()).unwrap();
        let horizon = fairlot::model::rat(m as i64, n as i64);
        trace.validate(m, Some(&horizon)).unwrap();
        prop_assert_eq!(trace.to_rows(m), p.rows().to_vec());
        for i in 0..n {
            prop_assert_eq!(p.row_sum(i), horizon.clone());
        }
    }
}
