//! Per-network follow graphs and the mutual-follow friendships derived from
//! them.
//!
//! A friend of `u` in network `N` is any `v` such that both `u -> v` and
//! `v -> u` follow edges exist in `N`. Friend adjacency is therefore symmetric
//! and never contains self-loops.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Short symbolic label of one social network, e.g. `T` or `I`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetworkId(String);

impl NetworkId {
    pub fn new(id: impl Into<String>) -> Self {
        NetworkId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NetworkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::borrow::Borrow<str> for NetworkId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NetworkId {
    fn from(s: &str) -> Self {
        NetworkId(s.to_string())
    }
}

impl From<String> for NetworkId {
    fn from(s: String) -> Self {
        NetworkId(s)
    }
}

/// An account: a local id scoped to one network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserRef {
    pub network: NetworkId,
    pub local_id: String,
}

impl UserRef {
    pub fn new(network: impl Into<NetworkId>, local_id: impl Into<String>) -> Self {
        UserRef {
            network: network.into(),
            local_id: local_id.into(),
        }
    }
}

impl fmt::Display for UserRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.network, self.local_id)
    }
}

/// One follow relation as read from an edge file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRecord {
    /// 1-based source line, used in error messages.
    pub line: usize,
    pub network: String,
    pub follower: String,
    pub followee: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    /// Users with more followers than this are dropped from that network.
    /// `0` disables the filter.
    pub max_followers: usize,
    pub networks_expected: Vec<NetworkId>,
}

impl IngestConfig {
    pub const DEFAULT_MAX_FOLLOWERS: usize = 2000;

    pub fn new(networks: impl IntoIterator<Item = NetworkId>) -> Self {
        IngestConfig {
            max_followers: Self::DEFAULT_MAX_FOLLOWERS,
            networks_expected: networks.into_iter().collect(),
        }
    }

    pub fn with_max_followers(mut self, max_followers: usize) -> Self {
        self.max_followers = max_followers;
        self
    }
}

/// Counters collected while building a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub records_read: usize,
    pub duplicates: usize,
    /// Users removed by the popularity filter, per network.
    pub users_filtered: BTreeMap<NetworkId, usize>,
    /// Follow edges dropped because an endpoint was filtered.
    pub edges_filtered: usize,
}

/// Follow edges and derived friendships of a single network.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    follows: BTreeMap<String, BTreeSet<String>>,
    friends: BTreeMap<String, BTreeSet<String>>,
}

static NO_FRIENDS: BTreeSet<String> = BTreeSet::new();

impl Network {
    fn from_parts(users: BTreeSet<String>, edges: BTreeSet<(String, String)>) -> Self {
        let mut follows: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut friends: BTreeMap<String, BTreeSet<String>> = users.into_iter().map(|u| (u, BTreeSet::new())).collect();
        for (a, b) in &edges {
            follows.entry(a.clone()).or_default().insert(b.clone());
            friends.entry(a.clone()).or_default();
            friends.entry(b.clone()).or_default();
        }
        for (a, b) in &edges {
            if a < b && edges.contains(&(b.clone(), a.clone())) {
                friends.get_mut(a).expect("endpoint registered").insert(b.clone());
                friends.get_mut(b).expect("endpoint registered").insert(a.clone());
            }
        }
        Network { follows, friends }
    }

    /// Friends of `u`; empty for users unknown to this network.
    pub fn friends_of(&self, u: &str) -> &BTreeSet<String> {
        self.friends.get(u).unwrap_or(&NO_FRIENDS)
    }

    pub fn degree(&self, u: &str) -> usize {
        self.friends_of(u).len()
    }

    pub fn contains_user(&self, u: &str) -> bool {
        self.friends.contains_key(u)
    }

    pub fn are_friends(&self, u: &str, v: &str) -> bool {
        self.friends_of(u).contains(v)
    }

    /// All users, including those without friends, in sorted order.
    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.friends.keys().map(String::as_str)
    }

    pub fn user_count(&self) -> usize {
        self.friends.len()
    }

    /// Every friendship once, as `(u, v)` with `u < v`.
    pub fn friend_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.friends.iter().flat_map(|(u, fs)| {
            fs.range::<String, _>((core::ops::Bound::Excluded(u.clone()), core::ops::Bound::Unbounded))
                .map(move |v| (u.as_str(), v.as_str()))
        })
    }

    pub fn friendship_count(&self) -> usize {
        self.friends.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Follow edges `(follower, followee)` in sorted order.
    pub fn follow_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.follows
            .iter()
            .flat_map(|(a, bs)| bs.iter().map(move |b| (a.as_str(), b.as_str())))
    }

    pub fn follow_edge_count(&self) -> usize {
        self.follows.values().map(BTreeSet::len).sum()
    }

    pub fn common_friends(&self, u: &str, v: &str) -> BTreeSet<String> {
        self.friends_of(u).intersection(self.friends_of(v)).cloned().collect()
    }

    pub fn common_friend_count(&self, u: &str, v: &str) -> usize {
        let (a, b) = (self.friends_of(u), self.friends_of(v));
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        small.iter().filter(|z| large.contains(*z)).count()
    }

    /// Number of users per friend-degree, isolated users at degree 0.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for fs in self.friends.values() {
            *hist.entry(fs.len()).or_insert(0) += 1;
        }
        hist
    }

    fn remove_friendship(&mut self, u: &str, v: &str) -> bool {
        let removed = self.friends.get_mut(u).is_some_and(|fs| fs.remove(v));
        if removed {
            if let Some(fs) = self.friends.get_mut(v) {
                fs.remove(u);
            }
            if let Some(out) = self.follows.get_mut(u) {
                out.remove(v);
            }
            if let Some(out) = self.follows.get_mut(v) {
                out.remove(u);
            }
        }
        removed
    }
}

/// Follow graphs for a set of networks. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiNetworkGraph {
    networks: BTreeMap<NetworkId, Network>,
}

impl MultiNetworkGraph {
    /// Builds a graph from a stream of follow records.
    pub fn load_edges(
        records: impl IntoIterator<Item = EdgeRecord>,
        config: &IngestConfig,
    ) -> Result<(Self, IngestSummary)> {
        let mut builder = GraphBuilder::new(config.clone());
        for record in records {
            builder.push(record)?;
        }
        Ok(builder.build())
    }

    pub fn network_ids(&self) -> impl Iterator<Item = &NetworkId> {
        self.networks.keys()
    }

    pub fn network_count(&self) -> usize {
        self.networks.len()
    }

    pub fn network(&self, n: &NetworkId) -> Result<&Network> {
        self.networks.get(n).ok_or_else(|| Error::UnknownNetwork(n.clone()))
    }

    pub fn has_network(&self, n: &NetworkId) -> bool {
        self.networks.contains_key(n)
    }

    /// Mutual-follow friends of `u`. Unknown local ids have no friends; an
    /// unknown network is an error.
    pub fn friends(&self, u: &UserRef) -> Result<&BTreeSet<String>> {
        Ok(self.network(&u.network)?.friends_of(&u.local_id))
    }

    pub fn common_friends(&self, n: &NetworkId, u: &str, v: &str) -> Result<BTreeSet<String>> {
        Ok(self.network(n)?.common_friends(u, v))
    }

    pub fn degree_histogram(&self, n: &NetworkId) -> Result<BTreeMap<usize, usize>> {
        Ok(self.network(n)?.degree_histogram())
    }

    /// Copy of the graph with the given friendships removed from network `n`
    /// (both follow directions). Every pair must be a friendship.
    pub fn without_friendships<'a>(
        &self,
        n: &NetworkId,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut out = self.clone();
        let net = out
            .networks
            .get_mut(n)
            .ok_or_else(|| Error::UnknownNetwork(n.clone()))?;
        for (u, v) in pairs {
            if !net.remove_friendship(u, v) {
                return Err(Error::InvalidArgument(format!(
                    "({u}, {v}) is not a friendship in network {n}"
                )));
            }
        }
        Ok(out)
    }
}

/// Incremental graph construction with validation, deduplication and the
/// follower-count filter.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    config: IngestConfig,
    edges: BTreeMap<NetworkId, BTreeSet<(String, String)>>,
    users: BTreeMap<NetworkId, BTreeSet<String>>,
    summary: IngestSummary,
}

impl GraphBuilder {
    pub fn new(config: IngestConfig) -> Self {
        let edges = config
            .networks_expected
            .iter()
            .map(|n| (n.clone(), BTreeSet::new()))
            .collect();
        let users = config
            .networks_expected
            .iter()
            .map(|n| (n.clone(), BTreeSet::new()))
            .collect();
        GraphBuilder {
            config,
            edges,
            users,
            summary: IngestSummary::default(),
        }
    }

    pub fn push(&mut self, record: EdgeRecord) -> Result<()> {
        self.summary.records_read += 1;
        let line = record.line;
        let network = record.network.trim();
        let follower = record.follower.trim();
        let followee = record.followee.trim();
        if network.is_empty() || follower.is_empty() || followee.is_empty() {
            return Err(Error::Malformed {
                line,
                reason: "empty field".to_string(),
            });
        }
        if follower == followee {
            return Err(Error::Malformed {
                line,
                reason: format!("self-follow by `{follower}`"),
            });
        }
        let edges = self.edges.get_mut(network).ok_or_else(|| Error::Malformed {
            line,
            reason: format!("unknown network `{network}`"),
        })?;
        if !edges.insert((follower.to_string(), followee.to_string())) {
            self.summary.duplicates += 1;
        }
        Ok(())
    }

    /// Convenience for building graphs directly from friendships: pushes both
    /// follow directions.
    pub fn push_friendship(&mut self, network: &str, u: &str, v: &str) -> Result<()> {
        self.push(EdgeRecord {
            line: 0,
            network: network.to_string(),
            follower: u.to_string(),
            followee: v.to_string(),
        })?;
        self.push(EdgeRecord {
            line: 0,
            network: network.to_string(),
            follower: v.to_string(),
            followee: u.to_string(),
        })
    }

    /// Registers a user that may have no edges at all.
    pub fn add_user(&mut self, user: &UserRef) -> Result<()> {
        let id = user.local_id.trim();
        if id.is_empty() {
            return Err(Error::InvalidArgument("empty local id".to_string()));
        }
        self.users
            .get_mut(&user.network)
            .ok_or_else(|| Error::UnknownNetwork(user.network.clone()))?
            .insert(id.to_string());
        Ok(())
    }

    pub fn build(self) -> (MultiNetworkGraph, IngestSummary) {
        let GraphBuilder {
            config,
            edges,
            mut users,
            mut summary,
        } = self;
        let mut networks = BTreeMap::new();
        for (n, mut net_edges) in edges {
            let mut net_users = users.remove(&n).unwrap_or_default();
            if config.max_followers > 0 {
                let mut followers: BTreeMap<&str, usize> = BTreeMap::new();
                for (_, b) in &net_edges {
                    *followers.entry(b.as_str()).or_insert(0) += 1;
                }
                let popular: BTreeSet<String> = followers
                    .into_iter()
                    .filter(|&(_, c)| c > config.max_followers)
                    .map(|(u, _)| u.to_string())
                    .collect();
                if !popular.is_empty() {
                    let before = net_edges.len();
                    net_edges.retain(|(a, b)| !popular.contains(a) && !popular.contains(b));
                    summary.edges_filtered += before - net_edges.len();
                    net_users.retain(|u| !popular.contains(u));
                }
                summary.users_filtered.insert(n.clone(), popular.len());
            } else {
                summary.users_filtered.insert(n.clone(), 0);
            }
            networks.insert(n, Network::from_parts(net_users, net_edges));
        }
        (MultiNetworkGraph { networks }, summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(network: &str, a: &str, b: &str) -> EdgeRecord {
        EdgeRecord {
            line: 1,
            network: network.to_string(),
            follower: a.to_string(),
            followee: b.to_string(),
        }
    }

    fn config() -> IngestConfig {
        IngestConfig::new([NetworkId::from("T"), NetworkId::from("I")])
    }

    fn t() -> NetworkId {
        NetworkId::from("T")
    }

    #[test]
    fn reciprocal_pair_is_a_friendship() {
        let (g, _) = MultiNetworkGraph::load_edges(vec![rec("T", "a", "b"), rec("T", "b", "a")], &config()).unwrap();
        let fa: Vec<_> = g.friends(&UserRef::new("T", "a")).unwrap().iter().cloned().collect();
        let fb: Vec<_> = g.friends(&UserRef::new("T", "b")).unwrap().iter().cloned().collect();
        assert_eq!(fa, vec!["b".to_string()]);
        assert_eq!(fb, vec!["a".to_string()]);
    }

    #[test]
    fn one_way_follow_is_not_a_friendship() {
        let (g, _) = MultiNetworkGraph::load_edges(vec![rec("T", "a", "b")], &config()).unwrap();
        assert!(g.friends(&UserRef::new("T", "a")).unwrap().is_empty());
        assert!(g.friends(&UserRef::new("T", "b")).unwrap().is_empty());
    }

    #[test]
    fn popular_user_is_filtered_with_its_edges() {
        // c has three followers (a, b, d); cap is two.
        let records = vec![
            rec("T", "a", "c"),
            rec("T", "b", "c"),
            rec("T", "d", "c"),
            rec("T", "c", "a"),
            rec("T", "a", "b"),
            rec("T", "b", "a"),
        ];
        let (g, summary) = MultiNetworkGraph::load_edges(records, &config().with_max_followers(2)).unwrap();
        let net = g.network(&t()).unwrap();
        assert!(!net.contains_user("c"));
        assert!(net.follow_edges().all(|(x, y)| x != "c" && y != "c"));
        assert_eq!(summary.users_filtered[&t()], 1);
        assert_eq!(summary.edges_filtered, 4);
        assert!(net.are_friends("a", "b"));
    }

    #[test]
    fn zero_cap_disables_filter() {
        let records = vec![rec("T", "a", "c"), rec("T", "b", "c"), rec("T", "d", "c")];
        let (g, _) = MultiNetworkGraph::load_edges(records, &config().with_max_followers(0)).unwrap();
        assert!(g.network(&t()).unwrap().contains_user("c"));
    }

    #[test]
    fn star_counts_only_reciprocated_follows() {
        let mut records = vec![];
        for leaf in ["l1", "l2", "l3", "l4", "l5"] {
            records.push(rec("T", "hub", leaf));
        }
        for leaf in ["l1", "l3", "l5"] {
            records.push(rec("T", leaf, "hub"));
        }
        let (g, _) = MultiNetworkGraph::load_edges(records, &config()).unwrap();
        assert_eq!(g.friends(&UserRef::new("T", "hub")).unwrap().len(), 3);
    }

    #[test]
    fn unknown_user_has_no_friends_but_unknown_network_errors() {
        let (g, _) = MultiNetworkGraph::load_edges(vec![], &config()).unwrap();
        assert!(g.friends(&UserRef::new("T", "ghost")).unwrap().is_empty());
        assert_eq!(
            g.friends(&UserRef::new("X", "a")),
            Err(Error::UnknownNetwork(NetworkId::from("X")))
        );
    }

    #[test]
    fn malformed_records_are_rejected_with_line() {
        let mut r = rec("T", "a", " ");
        r.line = 7;
        let err = MultiNetworkGraph::load_edges(vec![r], &config()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 7, .. }));

        let err = MultiNetworkGraph::load_edges(vec![rec("X", "a", "b")], &config()).unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));

        let err = MultiNetworkGraph::load_edges(vec![rec("T", "a", " a ")], &config()).unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));
    }

    #[test]
    fn ids_are_trimmed_but_case_preserved() {
        let (g, _) = MultiNetworkGraph::load_edges(
            vec![rec("T", " Ann ", "bob"), rec("T", "bob", "Ann"), rec("T", "bob", "ann")],
            &config(),
        )
        .unwrap();
        let net = g.network(&t()).unwrap();
        assert!(net.are_friends("Ann", "bob"));
        assert!(!net.are_friends("ann", "bob"));
    }

    #[test]
    fn duplicates_are_counted_not_rejected() {
        let (g, s) = MultiNetworkGraph::load_edges(
            vec![rec("T", "a", "b"), rec("T", "a", "b"), rec("T", "b", "a")],
            &config(),
        )
        .unwrap();
        assert_eq!(s.duplicates, 1);
        assert_eq!(s.records_read, 3);
        assert_eq!(g.network(&t()).unwrap().follow_edge_count(), 2);
    }

    #[test]
    fn common_friends_intersects() {
        let mut b = GraphBuilder::new(config());
        for z in ["a", "b", "c"] {
            b.push_friendship("T", "u", z).unwrap();
        }
        for z in ["b", "c", "d"] {
            b.push_friendship("T", "v", z).unwrap();
        }
        b.push_friendship("T", "x", "y").unwrap();
        let (g, _) = b.build();
        let cf: Vec<_> = g.common_friends(&t(), "u", "v").unwrap().into_iter().collect();
        assert_eq!(cf, vec!["b".to_string(), "c".to_string()]);
        assert!(g.common_friends(&t(), "u", "x").unwrap().is_empty());
        assert_eq!(
            g.common_friends(&t(), "u", "u").unwrap(),
            g.friends(&UserRef::new("T", "u")).unwrap().clone()
        );
    }

    #[test]
    fn degree_histograms() {
        let mut b = GraphBuilder::new(config());
        b.push_friendship("T", "a", "b").unwrap();
        let (g, _) = b.build();
        assert_eq!(g.degree_histogram(&t()).unwrap(), BTreeMap::from([(1, 2)]));

        let mut b = GraphBuilder::new(config());
        b.add_user(&UserRef::new("I", "lonely")).unwrap();
        b.push_friendship("T", "a", "b").unwrap();
        b.push_friendship("T", "b", "c").unwrap();
        let (g, _) = b.build();
        assert_eq!(g.degree_histogram(&t()).unwrap(), BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(
            g.degree_histogram(&NetworkId::from("I")).unwrap(),
            BTreeMap::from([(0, 1)])
        );
    }

    #[test]
    fn friend_pairs_are_canonical_and_complete() {
        let mut b = GraphBuilder::new(config());
        b.push_friendship("T", "b", "a").unwrap();
        b.push_friendship("T", "c", "b").unwrap();
        let (g, _) = b.build();
        let pairs: Vec<_> = g.network(&t()).unwrap().friend_pairs().collect();
        assert_eq!(pairs, vec![("a", "b"), ("b", "c")]);
        assert_eq!(g.network(&t()).unwrap().friendship_count(), 2);
    }

    #[test]
    fn removing_friendships_leaves_original_intact() {
        let mut b = GraphBuilder::new(config());
        b.push_friendship("T", "a", "b").unwrap();
        let (g, _) = b.build();
        let h = g.without_friendships(&t(), [("a", "b")]).unwrap();
        assert_eq!(h.network(&t()).unwrap().friendship_count(), 0);
        assert_eq!(g.network(&t()).unwrap().friendship_count(), 1);
        assert!(g.without_friendships(&t(), [("a", "c")]).is_err());
    }
}
