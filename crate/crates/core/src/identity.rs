//! Cross-network account matching.
//!
//! Accounts are linked in three tiers, each tier only seeing accounts the
//! earlier tiers left unmatched:
//!
//! 1. self-report: an account declares its counterpart,
//! 2. exact username, restricted to friends of the same linked base pair,
//! 3. username-bigram cosine at or above a threshold, same restriction.
//!
//! The result is one-to-one: an account is linked to at most one account per
//! other network.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::graph::{MultiNetworkGraph, NetworkId, UserRef};

pub const DEFAULT_THRESHOLD: f64 = 0.63;

/// Lowercases, trims and strips one leading `@`.
pub fn normalize_username(raw: &str) -> String {
    let trimmed = raw.trim();
    let stripped = trimmed.strip_prefix('@').unwrap_or(trimmed);
    stripped.trim().to_lowercase()
}

/// Occurrence counts of consecutive character pairs in a normalized username.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BigramVector {
    counts: BTreeMap<(char, char), u32>,
}

impl BigramVector {
    pub fn from_username(username: &str) -> Self {
        let chars: Vec<char> = normalize_username(username).chars().collect();
        let mut counts = BTreeMap::new();
        for w in chars.windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }
        BigramVector { counts }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, bigram: (char, char)) -> u32 {
        self.counts.get(&bigram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((char, char), u32)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    /// Sum of all counts.
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    fn squared_norm(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c) * u64::from(c)).sum()
    }

    fn dot(&self, other: &Self) -> u64 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(k, &c)| u64::from(c) * u64::from(large.get(*k)))
            .sum()
    }
}

/// Cosine similarity of two bigram vectors; 0 when either is empty.
pub fn bigram_cosine(a: &BigramVector, b: &BigramVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot = a.dot(b) as f64;
    let denom = libm::sqrt(a.squared_norm() as f64 * b.squared_norm() as f64);
    (dot / denom).min(1.0)
}

/// Median bigram cosine over a list of username pairs.
pub fn derive_threshold(candidates: &[(String, String)]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold derivation needs at least one username pair".to_string(),
        ));
    }
    let mut scores: Vec<f64> = candidates
        .iter()
        .map(|(a, b)| bigram_cosine(&BigramVector::from_username(a), &BigramVector::from_username(b)))
        .collect();
    scores.sort_by(f64::total_cmp);
    let n = scores.len();
    Ok(if n % 2 == 1 {
        scores[n / 2]
    } else {
        (scores[n / 2 - 1] + scores[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchMethod {
    SelfReport,
    ExactUsername,
    Bigram,
}

impl MatchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMethod::SelfReport => "self_report",
            MatchMethod::ExactUsername => "exact_username",
            MatchMethod::Bigram => "bigram",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "self_report" => Some(MatchMethod::SelfReport),
            "exact_username" => Some(MatchMethod::ExactUsername),
            "bigram" => Some(MatchMethod::Bigram),
            _ => None,
        }
    }
}

impl fmt::Display for MatchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchEdge {
    pub left: UserRef,
    pub right: UserRef,
    pub method: MatchMethod,
    pub score: f64,
}

/// An account as listed in an account file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountRecord {
    pub account: UserRef,
    pub username: String,
    pub declared_counterpart: Option<UserRef>,
}

/// Linked accounts across networks.
///
/// Linked accounts form connected components; each component is one person,
/// represented by its smallest account.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityMap {
    edges: Vec<MatchEdge>,
    threshold: f64,
    counterparts: BTreeMap<UserRef, BTreeMap<NetworkId, String>>,
    person: BTreeMap<UserRef, UserRef>,
    members: BTreeMap<UserRef, Vec<UserRef>>,
}

impl IdentityMap {
    pub fn new(threshold: f64) -> Self {
        IdentityMap {
            threshold,
            ..Default::default()
        }
    }

    /// Builds a map from edges, rejecting any account linked twice into the
    /// same network.
    pub fn from_edges(edges: impl IntoIterator<Item = MatchEdge>, threshold: f64) -> Result<Self> {
        let mut map = IdentityMap::new(threshold);
        for e in edges {
            map.insert(e)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, edge: MatchEdge) -> Result<()> {
        if edge.left.network == edge.right.network {
            return Err(Error::InvalidArgument(format!(
                "match {} -> {} stays within one network",
                edge.left, edge.right
            )));
        }
        for (a, b) in [(&edge.left, &edge.right), (&edge.right, &edge.left)] {
            if self.counterparts.get(a).is_some_and(|m| m.contains_key(&b.network)) {
                return Err(Error::DuplicateMatch(a.to_string()));
            }
        }
        for (a, b) in [(&edge.left, &edge.right), (&edge.right, &edge.left)] {
            self.counterparts
                .entry(a.clone())
                .or_default()
                .insert(b.network.clone(), b.local_id.clone());
        }
        self.merge_persons(&edge.left, &edge.right);
        self.edges.push(edge);
        Ok(())
    }

    fn merge_persons(&mut self, a: &UserRef, b: &UserRef) {
        let pa = self.person_of(a);
        let pb = self.person_of(b);
        if pa == pb {
            return;
        }
        let (keep, drop) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let moved = self.members.remove(&drop).unwrap_or_else(|| alloc::vec![drop.clone()]);
        let kept = self
            .members
            .entry(keep.clone())
            .or_insert_with(|| alloc::vec![keep.clone()]);
        self.person.entry(keep.clone()).or_insert_with(|| keep.clone());
        for account in moved {
            self.person.insert(account.clone(), keep.clone());
            kept.push(account);
        }
    }

    pub fn edges(&self) -> &[MatchEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_matched(&self, account: &UserRef) -> bool {
        self.counterparts.contains_key(account)
    }

    /// The local id linked to `account` in `network`, if any. An account is
    /// its own counterpart in its own network.
    pub fn counterpart<'a>(&'a self, account: &'a UserRef, network: &NetworkId) -> Option<&'a str> {
        if account.network == *network {
            return Some(&account.local_id);
        }
        self.linked_id(account, network)
    }

    /// Like [`IdentityMap::counterpart`] but only consults stored links, so
    /// the result borrows from the map alone.
    pub fn linked_id(&self, account: &UserRef, network: &NetworkId) -> Option<&str> {
        self.counterparts
            .get(account)
            .and_then(|m| m.get(network))
            .map(String::as_str)
    }

    /// Canonical person key of an account. Unmatched accounts are their own
    /// person.
    pub fn person_of(&self, account: &UserRef) -> UserRef {
        self.person.get(account).cloned().unwrap_or_else(|| account.clone())
    }

    /// Persons holding an account in every listed network, with those
    /// accounts, sorted by person key.
    pub fn linked_persons(&self, networks: &[NetworkId]) -> Vec<(UserRef, BTreeMap<NetworkId, String>)> {
        let mut components: BTreeMap<UserRef, BTreeMap<NetworkId, String>> = BTreeMap::new();
        for (account, rep) in &self.person {
            components
                .entry(rep.clone())
                .or_default()
                .insert(account.network.clone(), account.local_id.clone());
        }
        components
            .into_iter()
            .filter(|(_, accounts)| networks.iter().all(|n| accounts.contains_key(n)))
            .map(|(rep, accounts)| {
                let accounts = accounts.into_iter().filter(|(n, _)| networks.contains(n)).collect();
                (rep, accounts)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub left: NetworkId,
    pub right: NetworkId,
    pub threshold: f64,
}

impl MatchConfig {
    pub fn new(left: NetworkId, right: NetworkId) -> Self {
        MatchConfig {
            left,
            right,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Per-tier counters: distinct account pairs linked, and friend slots (a
/// linked pair counted once per base pair whose neighborhoods contain it).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchSummary {
    pub base_pairs: usize,
    pub users_matched: BTreeMap<MatchMethod, usize>,
    pub friends_matched: BTreeMap<MatchMethod, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub map: IdentityMap,
    /// Self-reports rejected because an account took part in more than one.
    pub conflicts: Vec<(UserRef, UserRef)>,
    pub summary: MatchSummary,
}

/// Runs the three-tier cascade between `config.left` and `config.right`.
///
/// Base pairs are linked first (as self-reports). Tiers 2 and 3 only consider
/// `(f_l, f_r)` where `f_l` is a left-network friend and `f_r` a right-network
/// friend of the same base pair.
pub fn match_accounts(
    g: &MultiNetworkGraph,
    accounts: &[AccountRecord],
    base_pairs: &[(UserRef, UserRef)],
    config: &MatchConfig,
) -> Result<MatchOutcome> {
    let (left, right) = (&config.left, &config.right);
    if left == right {
        return Err(Error::InvalidArgument(
            "left and right networks must differ".to_string(),
        ));
    }
    if !(config.threshold > 0.0 && config.threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {} outside (0, 1]",
            config.threshold
        )));
    }
    let left_net = g.network(left)?;
    let right_net = g.network(right)?;

    let mut map = IdentityMap::new(config.threshold);
    let mut summary = MatchSummary::default();

    let mut bases: Vec<(String, String)> = Vec::new();
    for (a, b) in base_pairs {
        let (l, r) = orient(a, b, left, right)
            .ok_or_else(|| Error::InvalidArgument(format!("base pair {a} / {b} does not span {left} and {right}")))?;
        bases.push((l.to_string(), r.to_string()));
    }
    bases.sort();
    bases.dedup();
    summary.base_pairs = bases.len();

    // Tier 1: base pairs, then declared counterparts.
    let mut used_left: BTreeSet<String> = BTreeSet::new();
    let mut used_right: BTreeSet<String> = BTreeSet::new();
    let link = |map: &mut IdentityMap,
                used_left: &mut BTreeSet<String>,
                used_right: &mut BTreeSet<String>,
                l: &str,
                r: &str,
                method: MatchMethod,
                score: f64|
     -> Result<()> {
        map.insert(MatchEdge {
            left: UserRef::new(left.clone(), l),
            right: UserRef::new(right.clone(), r),
            method,
            score,
        })?;
        used_left.insert(l.to_string());
        used_right.insert(r.to_string());
        Ok(())
    };
    for (l, r) in &bases {
        if used_left.contains(l) || used_right.contains(r) {
            return Err(Error::InvalidArgument(format!(
                "base pairs link {left}:{l} or {right}:{r} more than once"
            )));
        }
        link(
            &mut map,
            &mut used_left,
            &mut used_right,
            l,
            r,
            MatchMethod::SelfReport,
            1.0,
        )?;
    }

    let mut declared: BTreeSet<(String, String)> = BTreeSet::new();
    for acc in accounts {
        if let Some(other) = &acc.declared_counterpart {
            if let Some((l, r)) = orient(&acc.account, other, left, right) {
                declared.insert((l.to_string(), r.to_string()));
            }
        }
    }
    declared.retain(|(l, r)| !bases.contains(&(l.clone(), r.clone())));
    let mut left_uses: BTreeMap<&str, usize> = BTreeMap::new();
    let mut right_uses: BTreeMap<&str, usize> = BTreeMap::new();
    for (l, r) in &declared {
        *left_uses.entry(l).or_insert(0) += 1;
        *right_uses.entry(r).or_insert(0) += 1;
    }
    let mut conflicts = Vec::new();
    let mut self_reported = 0;
    for (l, r) in &declared {
        let contested =
            left_uses[l.as_str()] > 1 || right_uses[r.as_str()] > 1 || used_left.contains(l) || used_right.contains(r);
        if contested {
            conflicts.push((
                UserRef::new(left.clone(), l.as_str()),
                UserRef::new(right.clone(), r.as_str()),
            ));
            continue;
        }
        link(
            &mut map,
            &mut used_left,
            &mut used_right,
            l,
            r,
            MatchMethod::SelfReport,
            1.0,
        )?;
        self_reported += 1;
    }

    // Usernames and bigram vectors, keyed by (is_left, local id).
    let mut usernames: BTreeMap<(bool, &str), String> = BTreeMap::new();
    for acc in accounts {
        let side = if acc.account.network == *left {
            true
        } else if acc.account.network == *right {
            false
        } else {
            continue;
        };
        let name = normalize_username(&acc.username);
        if !name.is_empty() {
            usernames.insert((side, acc.account.local_id.as_str()), name);
        }
    }

    // Candidate pairs with the number of base-pair neighborhoods they occur in.
    let mut candidates: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (bl, br) in &bases {
        for fl in left_net.friends_of(bl) {
            if !usernames.contains_key(&(true, fl.as_str())) {
                continue;
            }
            for fr in right_net.friends_of(br) {
                if usernames.contains_key(&(false, fr.as_str())) {
                    *candidates.entry((fl.as_str(), fr.as_str())).or_insert(0) += 1;
                }
            }
        }
    }

    // Slots for friend counters under tier 1.
    let mut friend_slots: BTreeMap<MatchMethod, usize> = BTreeMap::new();
    for (l, r) in &declared {
        if let Some(&c) = candidates.get(&(l.as_str(), r.as_str())) {
            *friend_slots.entry(MatchMethod::SelfReport).or_insert(0) += c;
        }
    }

    // Tier 2: exact username.
    let mut exact: Vec<(&str, &str, &str)> = candidates
        .keys()
        .filter(|(l, r)| !used_left.contains(*l) && !used_right.contains(*r))
        .filter_map(|&(l, r)| {
            let ln = &usernames[&(true, l)];
            (ln == &usernames[&(false, r)]).then_some((ln.as_str(), l, r))
        })
        .collect();
    exact.sort();
    let mut exact_count = 0;
    for (_, l, r) in exact {
        if used_left.contains(l) || used_right.contains(r) {
            continue;
        }
        link(
            &mut map,
            &mut used_left,
            &mut used_right,
            l,
            r,
            MatchMethod::ExactUsername,
            1.0,
        )?;
        exact_count += 1;
        *friend_slots.entry(MatchMethod::ExactUsername).or_insert(0) += candidates[&(l, r)];
    }

    // Tier 3: bigram cosine, greedy in descending score.
    let mut vectors: BTreeMap<(bool, &str), BigramVector> = BTreeMap::new();
    let mut scored: Vec<(f64, &str, &str, &str, &str)> = Vec::new();
    for &(l, r) in candidates.keys() {
        if used_left.contains(l) || used_right.contains(r) {
            continue;
        }
        let ln = &usernames[&(true, l)];
        let rn = &usernames[&(false, r)];
        let lv = vectors
            .entry((true, l))
            .or_insert_with(|| BigramVector::from_username(ln))
            .clone();
        let rv = vectors
            .entry((false, r))
            .or_insert_with(|| BigramVector::from_username(rn));
        let score = bigram_cosine(&lv, rv);
        if score >= config.threshold {
            scored.push((score, ln.as_str(), rn.as_str(), l, r));
        }
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(b.2))
            .then_with(|| a.3.cmp(b.3))
            .then_with(|| a.4.cmp(b.4))
    });
    let mut bigram_count = 0;
    for (score, _, _, l, r) in scored {
        if used_left.contains(l) || used_right.contains(r) {
            continue;
        }
        link(
            &mut map,
            &mut used_left,
            &mut used_right,
            l,
            r,
            MatchMethod::Bigram,
            score,
        )?;
        bigram_count += 1;
        *friend_slots.entry(MatchMethod::Bigram).or_insert(0) += candidates[&(l, r)];
    }

    summary.users_matched.insert(MatchMethod::SelfReport, self_reported);
    summary.users_matched.insert(MatchMethod::ExactUsername, exact_count);
    summary.users_matched.insert(MatchMethod::Bigram, bigram_count);
    for m in [MatchMethod::SelfReport, MatchMethod::ExactUsername, MatchMethod::Bigram] {
        summary
            .friends_matched
            .insert(m, friend_slots.get(&m).copied().unwrap_or(0));
    }

    Ok(MatchOutcome {
        map,
        conflicts,
        summary,
    })
}

/// Returns `(left id, right id)` when `a` and `b` span the two networks.
fn orient<'a>(a: &'a UserRef, b: &'a UserRef, left: &NetworkId, right: &NetworkId) -> Option<(&'a str, &'a str)> {
    if a.network == *left && b.network == *right {
        Some((&a.local_id, &b.local_id))
    } else if a.network == *right && b.network == *left {
        Some((&b.local_id, &a.local_id))
    } else {
        None
    }
}
