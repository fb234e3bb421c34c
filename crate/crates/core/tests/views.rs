//! Level 0 views of the path chase: green and red restrictions differ by a
//! single tuple, the grid closure equalises the grid views only, and the
//! `D_y` / `D_n` pair differs in exactly one view tuple.

use redspider::codes::SkeletonCodes;
use redspider::sepexample::views::{build_dy_dn, view_difference, QuerySetup};

#[test]
fn path_views_differ_by_one_tuple() {
    let sk = SkeletonCodes::default();
    let path = QuerySetup::path_only(&sk);
    for i in 2..=4 {
        let r = view_difference(&path, None, i, 0);
        assert_eq!(r.path_difference.size(), 1, "i = {i}: {:?}", r.path_difference);
    }
}

#[test]
fn grid_closure_equalises_only_the_grid_views() {
    let sk = SkeletonCodes::default();
    let path = QuerySetup::path_only(&sk);
    let joint = QuerySetup::joint(&sk);
    let r = view_difference(&path, Some(&joint), 2, 60);
    assert_eq!(r.closure_fixpoint, Some(true));
    assert_eq!(r.box_difference_after_closure.unwrap().size(), 0);
    assert_eq!(r.path_difference_after_closure.unwrap().size(), 1);
}

#[test]
fn dy_and_dn_differ_in_one_view_tuple() {
    let sk = SkeletonCodes::default();
    let d = build_dy_dn(&sk, 2, false, 0);
    assert_eq!(d.report.difference.size(), 1, "{:?}", d.report.difference);
    assert_eq!(d.report.early_difference.size(), 1);
    // The separating query: the full spider maps into D_y but not D_n.
    assert!(d.report.y_has_full_spider);
    assert!(!d.report.n_has_full_spider);
    assert_eq!(d.report.components_n.len(), d.report.components_y.len() + 2);
}
