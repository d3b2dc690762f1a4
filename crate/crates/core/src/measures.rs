//! Friendship maintenance measures for a person with accounts on several
//! networks.
//!
//! Friend sets are resolved to persons through the [`IdentityMap`] first: a
//! friend present on two networks counts once in the union only if their two
//! accounts are linked. Every measure is a ratio of integer counts computed
//! with a single final division.
//!
//! With `U` the person-level union, `I` the intersection, `c_i` the per-network
//! friend counts and `n` the number of networks:
//!
//! * similarity `I / U`,
//! * similarity upper bound `min c_i / max c_i`,
//! * expected even share `(1 + (n - 1) * sim) / n`,
//! * friend ratio `c_i / U`,
//! * evenness `1 - sum_i |c_i / U - even share|`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{MultiNetworkGraph, NetworkId, UserRef};
use crate::identity::IdentityMap;

/// Friend local ids per network for one person.
pub type FriendSets = BTreeMap<NetworkId, BTreeSet<String>>;

/// The accounts of one person, one per measured network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedUser {
    pub accounts: BTreeMap<NetworkId, String>,
}

impl LinkedUser {
    pub fn new(accounts: impl IntoIterator<Item = (NetworkId, String)>) -> Self {
        LinkedUser {
            accounts: accounts.into_iter().collect(),
        }
    }

    pub fn account(&self, n: &NetworkId) -> Option<UserRef> {
        self.accounts.get(n).map(|id| UserRef::new(n.clone(), id.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceProfile {
    pub f_sim: f64,
    pub f_sim_upper: f64,
    pub f_equal: f64,
    pub f_in: BTreeMap<NetworkId, f64>,
    pub f_even: f64,
    pub total_unique_friends: usize,
    /// Set when evenness falls outside `[0, 1]`, which can only happen with
    /// more than two networks. The value is kept as computed.
    pub evenness_out_of_range: bool,
}

/// Person-level counts that every measure derives from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapCounts {
    pub per_network: BTreeMap<NetworkId, usize>,
    pub union: usize,
    pub intersection: usize,
}

impl OverlapCounts {
    pub fn from_sets(friend_sets: &FriendSets, map: &IdentityMap) -> Self {
        let persons: Vec<BTreeSet<UserRef>> = friend_sets
            .iter()
            .map(|(n, ids)| {
                ids.iter()
                    .map(|id| map.person_of(&UserRef::new(n.clone(), id.as_str())))
                    .collect()
            })
            .collect();
        let mut union: BTreeSet<&UserRef> = BTreeSet::new();
        for set in &persons {
            union.extend(set.iter());
        }
        let intersection = match persons.split_first() {
            Some((first, rest)) => first.iter().filter(|p| rest.iter().all(|s| s.contains(*p))).count(),
            None => 0,
        };
        OverlapCounts {
            per_network: friend_sets.iter().map(|(n, ids)| (n.clone(), ids.len())).collect(),
            union: union.len(),
            intersection,
        }
    }

    pub fn networks(&self) -> usize {
        self.per_network.len()
    }

    pub fn similarity(&self) -> f64 {
        ratio(self.intersection, self.union)
    }

    pub fn similarity_upper_bound(&self) -> f64 {
        let min = self.per_network.values().copied().min().unwrap_or(0);
        let max = self.per_network.values().copied().max().unwrap_or(0);
        if max == 0 {
            1.0
        } else {
            ratio(min, max)
        }
    }

    pub fn expected_even_share(&self) -> f64 {
        let n = self.networks();
        if self.union == 0 || n == 0 {
            return 0.0;
        }
        // (U + (n-1) I) / (n U)
        (self.union + (n - 1) * self.intersection) as f64 / (n * self.union) as f64
    }

    pub fn friend_ratio(&self, n: &NetworkId) -> Result<f64> {
        let c = self
            .per_network
            .get(n)
            .ok_or_else(|| Error::UnknownNetwork(n.clone()))?;
        Ok(ratio(*c, self.union))
    }

    pub fn evenness(&self) -> f64 {
        let n = self.networks() as i128;
        let u = self.union as i128;
        if u == 0 || n == 0 {
            return 0.0;
        }
        // 1 - sum |n c_i - (U + (n-1) I)| / (n U)
        let share = u + (n - 1) * self.intersection as i128;
        let deviation: i128 = self.per_network.values().map(|&c| (n * c as i128 - share).abs()).sum();
        (n * u - deviation) as f64 / (n * u) as f64
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Share of the person-level union common to every network; 0 for an empty
/// union.
pub fn friendship_similarity(friend_sets: &FriendSets, map: &IdentityMap) -> f64 {
    OverlapCounts::from_sets(friend_sets, map).similarity()
}

/// `min / max` of raw per-network friend counts; 1 when every network is
/// empty.
pub fn similarity_upper_bound(friend_sets: &FriendSets) -> f64 {
    let min = friend_sets.values().map(BTreeSet::len).min().unwrap_or(0);
    let max = friend_sets.values().map(BTreeSet::len).max().unwrap_or(0);
    if max == 0 {
        1.0
    } else {
        ratio(min, max)
    }
}

pub fn expected_even_share(f_sim: f64, n: usize) -> f64 {
    let n = n as f64;
    (1.0 + (n - 1.0) * f_sim) / n
}

pub fn friend_ratio(friend_sets: &FriendSets, n_i: &NetworkId, map: &IdentityMap) -> Result<f64> {
    OverlapCounts::from_sets(friend_sets, map).friend_ratio(n_i)
}

pub fn friendship_evenness(friend_sets: &FriendSets, map: &IdentityMap) -> f64 {
    OverlapCounts::from_sets(friend_sets, map).evenness()
}

impl MaintenanceProfile {
    pub fn from_counts(counts: &OverlapCounts) -> Self {
        let f_even = counts.evenness();
        MaintenanceProfile {
            f_sim: counts.similarity(),
            f_sim_upper: counts.similarity_upper_bound(),
            f_equal: counts.expected_even_share(),
            f_in: counts
                .per_network
                .keys()
                .map(|n| (n.clone(), ratio(counts.per_network[n], counts.union)))
                .collect(),
            f_even,
            total_unique_friends: counts.union,
            evenness_out_of_range: !(0.0..=1.0).contains(&f_even),
        }
    }
}

/// Friend sets of a linked user in each of their networks.
pub fn friend_sets(user: &LinkedUser, g: &MultiNetworkGraph) -> Result<FriendSets> {
    user.accounts
        .iter()
        .map(|(n, id)| Ok((n.clone(), g.network(n)?.friends_of(id).clone())))
        .collect()
}

pub fn profile(user: &LinkedUser, g: &MultiNetworkGraph, map: &IdentityMap) -> Result<MaintenanceProfile> {
    let sets = friend_sets(user, g)?;
    Ok(MaintenanceProfile::from_counts(&OverlapCounts::from_sets(&sets, map)))
}

/// Profiles keyed by person.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileTable {
    profiles: BTreeMap<UserRef, MaintenanceProfile>,
}

impl ProfileTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Profiles every person linked across all of `networks`.
    pub fn compute(g: &MultiNetworkGraph, map: &IdentityMap, networks: &[NetworkId]) -> Result<Self> {
        let mut table = ProfileTable::new();
        for (person, accounts) in map.linked_persons(networks) {
            let user = LinkedUser { accounts };
            table.insert(person, profile(&user, g, map)?);
        }
        Ok(table)
    }

    pub fn insert(&mut self, person: UserRef, profile: MaintenanceProfile) {
        self.profiles.insert(person, profile);
    }

    pub fn get(&self, person: &UserRef) -> Option<&MaintenanceProfile> {
        self.profiles.get(person)
    }

    /// Profile of whoever owns `account`.
    pub fn for_account(&self, account: &UserRef, map: &IdentityMap) -> Option<&MaintenanceProfile> {
        self.profiles.get(&map.person_of(account))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserRef, &MaintenanceProfile)> {
        self.profiles.iter()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// `(f_sim, f_even)` per profile, in person order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.profiles.values().map(|p| (p.f_sim, p.f_even)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    fn ids(prefix: &str, range: core::ops::Range<usize>) -> BTreeSet<String> {
        range.map(|i| format!("{prefix}{i}")).collect()
    }

    /// 10 friends on A, 20 on B, 5 of them the same people (linked).
    fn worked_example() -> (FriendSets, IdentityMap) {
        let mut map = IdentityMap::new(0.63);
        for i in 0..5 {
            map.insert(crate::identity::MatchEdge {
                left: UserRef::new("A", format!("a{i}")),
                right: UserRef::new("B", format!("b{i}")),
                method: crate::identity::MatchMethod::SelfReport,
                score: 1.0,
            })
            .unwrap();
        }
        let sets = FriendSets::from([
            (NetworkId::from("A"), ids("a", 0..10)),
            (NetworkId::from("B"), ids("b", 0..20)),
        ]);
        (sets, map)
    }

    #[test]
    fn worked_example_values() {
        let (sets, map) = worked_example();
        assert_eq!(friendship_similarity(&sets, &map), 0.2);
        assert_eq!(similarity_upper_bound(&sets), 0.5);
        assert_eq!(expected_even_share(0.2, 2), 0.6);
        assert_eq!(friend_ratio(&sets, &"A".into(), &map).unwrap(), 0.4);
        assert_eq!(friend_ratio(&sets, &"B".into(), &map).unwrap(), 0.8);
        assert!((friendship_evenness(&sets, &map) - 0.6).abs() < 1e-12);
        assert!(friend_ratio(&sets, &"C".into(), &map).is_err());
    }

    #[test]
    fn unlinked_same_ids_are_different_people() {
        let sets = FriendSets::from([
            (NetworkId::from("A"), ids("x", 0..3)),
            (NetworkId::from("B"), ids("x", 0..3)),
        ]);
        let map = IdentityMap::new(0.63);
        assert_eq!(friendship_similarity(&sets, &map), 0.0);
        // Equal counts are perfectly even whatever the overlap.
        assert_eq!(friendship_evenness(&sets, &map), 1.0);
    }

    #[test]
    fn identical_and_degenerate_sets() {
        let mut map = IdentityMap::new(0.63);
        for i in 0..4 {
            map.insert(crate::identity::MatchEdge {
                left: UserRef::new("A", format!("p{i}")),
                right: UserRef::new("B", format!("q{i}")),
                method: crate::identity::MatchMethod::SelfReport,
                score: 1.0,
            })
            .unwrap();
        }
        let same = FriendSets::from([
            (NetworkId::from("A"), ids("p", 0..4)),
            (NetworkId::from("B"), ids("q", 0..4)),
        ]);
        let c = OverlapCounts::from_sets(&same, &map);
        let p = MaintenanceProfile::from_counts(&c);
        assert_eq!((p.f_sim, p.f_sim_upper, p.f_equal, p.f_even), (1.0, 1.0, 1.0, 1.0));
        assert!(p.f_in.values().all(|&v| v == 1.0));

        let one_empty = FriendSets::from([
            (NetworkId::from("A"), BTreeSet::new()),
            (NetworkId::from("B"), ids("q", 0..7)),
        ]);
        assert_eq!(similarity_upper_bound(&one_empty), 0.0);
        assert_eq!(friendship_evenness(&one_empty, &map), 0.0);
        assert_eq!(friend_ratio(&one_empty, &"B".into(), &map).unwrap(), 1.0);

        let empty = FriendSets::from([
            (NetworkId::from("A"), BTreeSet::new()),
            (NetworkId::from("B"), BTreeSet::new()),
        ]);
        let p = MaintenanceProfile::from_counts(&OverlapCounts::from_sets(&empty, &map));
        assert_eq!((p.f_sim, p.f_sim_upper, p.f_even), (0.0, 1.0, 0.0));
        assert_eq!(p.total_unique_friends, 0);
    }

    #[test]
    fn expected_share_limits() {
        assert_eq!(expected_even_share(0.0, 2), 0.5);
        for n in 2..6 {
            assert_eq!(expected_even_share(1.0, n), 1.0);
            assert!((expected_even_share(0.0, n) - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn three_networks_can_go_negative() {
        // All friends on one network out of three.
        let map = IdentityMap::new(0.63);
        let sets = FriendSets::from([
            (NetworkId::from("A"), ids("a", 0..6)),
            (NetworkId::from("B"), BTreeSet::new()),
            (NetworkId::from("C"), BTreeSet::new()),
        ]);
        let p = MaintenanceProfile::from_counts(&OverlapCounts::from_sets(&sets, &map));
        // 1 - (|1 - 1/3| + 1/3 + 1/3)
        assert!((p.f_even - (-1.0 / 3.0)).abs() < 1e-12);
        assert!(p.evenness_out_of_range);
    }

    #[test]
    fn profile_reads_friend_sets_from_graph() {
        use crate::graph::{GraphBuilder, IngestConfig};
        let mut b = GraphBuilder::new(IngestConfig::new(["A".into(), "B".into()]));
        b.push_friendship("A", "x", "f1").unwrap();
        b.push_friendship("B", "y", "g1").unwrap();
        b.push_friendship("B", "y", "g2").unwrap();
        let (g, _) = b.build();
        let mut map = IdentityMap::new(0.63);
        for (l, r) in [("x", "y"), ("f1", "g1")] {
            map.insert(crate::identity::MatchEdge {
                left: UserRef::new("A", l),
                right: UserRef::new("B", r),
                method: crate::identity::MatchMethod::SelfReport,
                score: 1.0,
            })
            .unwrap();
        }
        let user = LinkedUser::new([("A".into(), "x".to_string()), ("B".into(), "y".to_string())]);
        let p = profile(&user, &g, &map).unwrap();
        assert_eq!(p.f_sim, 0.5);
        assert_eq!(p.total_unique_friends, 2);
        let table = ProfileTable::compute(&g, &map, &["A".into(), "B".into()]).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.for_account(&UserRef::new("A", "x"), &map), Some(&p));
        assert!(table.for_account(&UserRef::new("A", "nobody"), &map).is_none());
    }
}
