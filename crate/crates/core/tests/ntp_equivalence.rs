mod common;

use common::fixtures::{build_loop, loop_strategy, ntp_closure, unwound_fulfilling};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn ntp_matches_unwinding((labels, back) in loop_strategy(ntp_closure().len())) {
        let c = ntp_closure();
        let (tab, cycle) = build_loop(&c, &labels, back);
        prop_assert_eq!(tab.check_ntp().passed(), unwound_fulfilling(&c, &cycle));
    }
}
