mod common;

use std::collections::BTreeSet;

use common::{brute_hues, formula_strategy};
use ctlstar_core::closure::Closure;
use ctlstar_core::formula::FormulaTable;
use ctlstar_core::hue::{enumerate_hues, is_hue, HueCap};
use proptest::prelude::*;

fn closure_of(src: &str) -> (FormulaTable, Closure, usize) {
    let mut t = FormulaTable::new();
    let f = t.parse(src).unwrap();
    let size = t.size(f) as usize;
    let c = Closure::new(&mut t, f);
    (t, c, size)
}

fn enumerated(c: &Closure) -> BTreeSet<Vec<usize>> {
    enumerate_hues(c, HueCap::default())
        .unwrap()
        .into_iter()
        .map(|h| h.to_vec())
        .collect()
}

#[test]
fn until_has_five_hues() {
    let (_, c, _) = closure_of("p U q");
    assert_eq!(enumerate_hues(&c, HueCap::default()).unwrap().len(), 5);
}

#[test]
fn fixed_formulas_match_subset_filter() {
    for src in ["p", "~p", "X p", "p & q", "p U q", "A p", "~(p U ~q)", "E X p & A G q", "F G p", "~~p"] {
        let (t, c, _) = closure_of(src);
        assert_eq!(enumerated(&c), brute_hues(&c, &t), "{src}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn enumeration_matches_subset_filter(g in formula_strategy(2, 8, true)) {
        let (t, c, size) = closure_of(&g.render());
        prop_assert!(c.len() <= 2 * size);
        let hues = enumerated(&c);
        prop_assert!(hues.len() <= 1usize << size);
        if c.len() <= 12 {
            prop_assert_eq!(&hues, &brute_hues(&c, &t));
        }
        for h in enumerate_hues(&c, HueCap::default()).unwrap() {
            prop_assert!(is_hue(&c, &h));
        }
    }
}
