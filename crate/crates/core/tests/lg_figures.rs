//! The three small up-link examples for the LG check, built by hand.

mod common;

use common::fixtures::{lg_left, Fixture, lg_right, lg_two_children, lg_two_loops};

#[test]
fn self_loop_against_universal_eventuality_fails() {
    assert!(!lg_left().lg_passes());
}

#[test]
fn open_tableau_passes_before_the_up_link() {
    let mut fx = Fixture::new("p & X p & A F ~p");
    fx.add(0, 0, &["p", "X p", "A F ~p"]);
    fx.add(0, 1, &["A F ~p"]);
    let leaf = fx.tab.add_child(0, 1);
    fx.add(leaf, 0, &["~p"]);
    assert!(fx.lg_passes());
}

#[test]
fn allowable_loop_beside_bad_leaf_passes() {
    assert!(lg_right().lg_passes());
}

#[test]
fn each_loop_alone_passes() {
    let (mut fx, a, _) = lg_two_children();
    fx.tab.link(a, 0, 0);
    assert!(fx.lg_passes());

    let (mut fx, _, b) = lg_two_children();
    fx.tab.link(b, 0, 0);
    assert!(fx.lg_passes());
}

#[test]
fn both_loops_fail() {
    assert!(!lg_two_loops().lg_passes());
}
