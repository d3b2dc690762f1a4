use std::collections::BTreeSet;

use crossfriend_core::graph::{EdgeRecord, IngestConfig, MultiNetworkGraph, NetworkId};
use proptest::prelude::*;

fn nets() -> Vec<NetworkId> {
    vec!["A".into(), "B".into()]
}

/// Random follow records over up to `n` users in two networks.
fn records(n: usize, max_edges: usize) -> impl Strategy<Value = Vec<(bool, usize, usize)>> {
    prop::collection::vec((any::<bool>(), 0..n, 0..n), 0..max_edges)
        .prop_map(|v| v.into_iter().filter(|(_, a, b)| a != b).collect())
}

fn to_records(raw: &[(bool, usize, usize)]) -> Vec<EdgeRecord> {
    raw.iter()
        .enumerate()
        .map(|(i, &(net, a, b))| EdgeRecord {
            line: i + 1,
            network: if net { "A" } else { "B" }.to_string(),
            follower: format!("u{a}"),
            followee: format!("u{b}"),
        })
        .collect()
}

fn load(raw: &[(bool, usize, usize)], max_followers: usize) -> MultiNetworkGraph {
    let cfg = IngestConfig::new(nets()).with_max_followers(max_followers);
    MultiNetworkGraph::load_edges(to_records(raw), &cfg).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn friendship_is_symmetric(raw in records(40, 400)) {
        let g = load(&raw, 0);
        for n in nets() {
            let net = g.network(&n).unwrap();
            for u in net.users() {
                for v in net.friends_of(u) {
                    prop_assert!(net.friends_of(v).contains(u));
                }
            }
        }
    }

    #[test]
    fn reciprocity_matches_brute_force(raw in records(200, 1500)) {
        let g = load(&raw, 0);
        for (flag, n) in [(true, "A"), (false, "B")] {
            let edges: BTreeSet<(usize, usize)> =
                raw.iter().filter(|r| r.0 == flag).map(|r| (r.1, r.2)).collect();
            let expected: BTreeSet<(String, String)> = edges
                .iter()
                .filter(|(a, b)| edges.contains(&(*b, *a)))
                .map(|(a, b)| (format!("u{a}"), format!("u{b}")))
                .filter(|(a, b)| a < b)
                .collect();
            let got: BTreeSet<(String, String)> = g
                .network(&n.into())
                .unwrap()
                .friend_pairs()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn raising_the_filter_keeps_users(raw in records(30, 300), lo in 1usize..6, extra in 0usize..6) {
        let low = load(&raw, lo);
        let high = load(&raw, lo + extra);
        for n in nets() {
            let kept_high: BTreeSet<&str> = high.network(&n).unwrap().users().collect();
            for u in low.network(&n).unwrap().users() {
                prop_assert!(kept_high.contains(u));
            }
        }
    }

    #[test]
    fn loading_twice_is_identical(raw in records(30, 300)) {
        prop_assert_eq!(load(&raw, 3), load(&raw, 3));
        let mut doubled = raw.clone();
        doubled.extend(raw.iter().copied());
        prop_assert_eq!(load(&doubled, 0), load(&raw, 0));
    }

    #[test]
    fn holdout_removes_exactly_the_pairs(raw in records(40, 600), take in 0usize..10) {
        let g = load(&raw, 0);
        let a: NetworkId = "A".into();
        let pairs: Vec<(String, String)> = g
            .network(&a)
            .unwrap()
            .friend_pairs()
            .take(take)
            .map(|(u, v)| (u.to_string(), v.to_string()))
            .collect();
        let h = g
            .without_friendships(&a, pairs.iter().map(|(u, v)| (u.as_str(), v.as_str())))
            .unwrap();
        let before = g.network(&a).unwrap().friendship_count();
        prop_assert_eq!(h.network(&a).unwrap().friendship_count(), before - pairs.len());
        prop_assert_eq!(h.network(&"B".into()).unwrap(), g.network(&"B".into()).unwrap());
        for (u, v) in &pairs {
            prop_assert!(!h.network(&a).unwrap().are_friends(u, v));
        }
    }
}

#[test]
fn removing_the_only_edge_empties_the_network() {
    let raw = [(true, 1, 2), (true, 2, 1)];
    let g = load(&raw, 0);
    let a: NetworkId = "A".into();
    let h = g.without_friendships(&a, [("u1", "u2")]).unwrap();
    assert_eq!(h.network(&a).unwrap().friendship_count(), 0);
    assert_eq!(g.network(&a).unwrap().friendship_count(), 1);
    assert!(h.without_friendships(&a, [("u1", "u2")]).is_err());
}
