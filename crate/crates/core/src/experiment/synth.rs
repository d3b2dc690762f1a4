//! Seeded two-network population generator.
//!
//! Persons are grouped into circles (complete graphs) joined by random weak
//! ties. Every base acquaintance is then placed in both networks, in the
//! sparser network only, or in the denser network only, with probabilities
//! chosen so that the expected person-level similarity is
//! `target_similarity` and the expected friend-count ratio between the two
//! networks is `target_evenness_skew`.
//!
//! Acquaintances kept only in the denser network stay inside their circle
//! with probability `cross_link_correlation`; otherwise they are rewired to a
//! random stranger, which weakens the neighborhood signal the denser network
//! carries about circle structure.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, IngestConfig, MultiNetworkGraph, NetworkId, UserRef};
use crate::identity::{AccountRecord, IdentityMap, MatchEdge, MatchMethod, DEFAULT_THRESHOLD};

/// Share of a person's acquaintances that are weak ties outside the circle.
pub const WEAK_TIE_SHARE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    /// Expected number of distinct acquaintances per person across both
    /// networks.
    pub mean_degree: f64,
    pub target_similarity: f64,
    /// Expected ratio of friend counts, sparser over denser network, in (0, 1].
    pub target_evenness_skew: f64,
    pub cross_link_correlation: f64,
    pub seed: u64,
    /// Sparser network first.
    pub networks: [NetworkId; 2],
}

impl SynthConfig {
    pub fn new(users: usize, seed: u64) -> Self {
        SynthConfig {
            users,
            mean_degree: 20.0,
            target_similarity: 0.2,
            target_evenness_skew: 1.0,
            cross_link_correlation: 0.9,
            seed,
            networks: [NetworkId::new("T"), NetworkId::new("I")],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.users < 2 {
            return Err(Error::InvalidArgument("users must be at least 2".into()));
        }
        if !(self.mean_degree >= 1.0 && self.mean_degree < self.users as f64) {
            return Err(Error::InvalidArgument(format!(
                "mean_degree must be in [1, users), got {}",
                self.mean_degree
            )));
        }
        if !unit(self.target_similarity) || !unit(self.cross_link_correlation) {
            return Err(Error::InvalidArgument(
                "target_similarity and cross_link_correlation must lie in [0, 1]".into(),
            ));
        }
        if !(self.target_evenness_skew > 0.0 && self.target_evenness_skew <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target_evenness_skew must be in (0, 1], got {}",
                self.target_evenness_skew
            )));
        }
        if self.networks[0] == self.networks[1] {
            return Err(Error::InvalidArgument("the two networks must differ".into()));
        }
        // similarity can never exceed min/max of the per-network friend counts
        if self.target_similarity > self.target_evenness_skew {
            return Err(Error::Infeasible(format!(
                "target_similarity {} exceeds its upper bound {} (minimum over maximum number of friends)",
                self.target_similarity, self.target_evenness_skew
            )));
        }
        Ok(())
    }
}

/// Construction parameters implied by a [`SynthConfig`], for checking
/// measured values against.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub users: usize,
    pub circle_size: usize,
    pub base_acquaintances: usize,
    /// Probability an acquaintance is a friendship in the sparser network.
    pub sparse_share: f64,
    /// Probability an acquaintance is a friendship in the denser network.
    pub dense_share: f64,
    /// Fraction of sparser-network friendships also present in the denser one.
    pub duplicated_fraction: f64,
    pub expected_similarity: f64,
    pub expected_evenness: f64,
    pub skew: f64,
    pub cross_link_correlation: f64,
    pub rewired: usize,
    pub friendships: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: MultiNetworkGraph,
    pub map: IdentityMap,
    pub accounts: Vec<AccountRecord>,
    pub truth: GroundTruth,
}

/// Local id of person `i` in `network`.
pub fn synth_id(network: &NetworkId, i: usize) -> String {
    format!("{}{i:05}", network.as_str().to_lowercase())
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let n = cfg.users;
    let (s, rho, c) = (
        cfg.target_similarity,
        cfg.target_evenness_skew,
        cfg.cross_link_correlation,
    );
    let sparse_share = rho * (1.0 + s) / (1.0 + rho);
    let dense_share = (1.0 + s) / (1.0 + rho);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let circle_size = (libm::round((1.0 - WEAK_TIE_SHARE) * cfg.mean_degree) as usize + 1).clamp(2, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut circles: Vec<Vec<usize>> = order.chunks(circle_size).map(<[usize]>::to_vec).collect();
    if circles.len() > 1 && circles[circles.len() - 1].len() < 2 {
        let tail = circles.pop().unwrap_or_default();
        if let Some(last) = circles.last_mut() {
            last.extend(tail);
        }
    }

    let mut adjacency: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); n];
    let mut circle_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for circle in &circles {
        for (k, &a) in circle.iter().enumerate() {
            for &b in &circle[k + 1..] {
                circle_edges.insert((a.min(b), a.max(b)));
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
    }
    let mut base = circle_edges.clone();
    let wanted_weak = libm::round(n as f64 * WEAK_TIE_SHARE * cfg.mean_degree / 2.0) as usize;
    let mut weak = 0;
    let mut attempts = 0;
    while weak < wanted_weak && attempts < wanted_weak.saturating_mul(100) {
        attempts += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || adjacency[a].contains(&b) {
            continue;
        }
        base.insert((a.min(b), a.max(b)));
        adjacency[a].insert(b);
        adjacency[b].insert(a);
        weak += 1;
    }

    let mut sparse: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut dense: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut rewired = 0;
    for &(a, b) in &base {
        let r: f64 = rng.random();
        if r < s {
            sparse.insert((a, b));
            dense.insert((a, b));
        } else if r < sparse_share {
            sparse.insert((a, b));
        } else if circle_edges.contains(&(a, b)) && rng.random::<f64>() >= c {
            let keep = if rng.random::<bool>() { a } else { b };
            let mut placed = false;
            for _ in 0..100 {
                let w = rng.random_range(0..n);
                let e = (keep.min(w), keep.max(w));
                if w != keep && !adjacency[keep].contains(&w) && !dense.contains(&e) {
                    dense.insert(e);
                    placed = true;
                    rewired += 1;
                    break;
                }
            }
            if !placed {
                dense.insert((a, b));
            }
        } else {
            dense.insert((a, b));
        }
    }

    let [sn, dn] = &cfg.networks;
    let mut builder = GraphBuilder::new(IngestConfig::new(cfg.networks.iter().cloned()).with_max_followers(0));
    for i in 0..n {
        builder.add_user(&UserRef::new(sn.clone(), synth_id(sn, i)))?;
        builder.add_user(&UserRef::new(dn.clone(), synth_id(dn, i)))?;
    }
    for (net, edges) in [(sn, &sparse), (dn, &dense)] {
        for &(a, b) in edges {
            builder.push_friendship(net.as_str(), &synth_id(net, a), &synth_id(net, b))?;
        }
    }
    let (graph, _) = builder.build();

    let mut accounts = Vec::with_capacity(2 * n);
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let left = UserRef::new(sn.clone(), synth_id(sn, i));
        let right = UserRef::new(dn.clone(), synth_id(dn, i));
        let username = format!("user{i:05}");
        accounts.push(AccountRecord {
            account: left.clone(),
            username: username.clone(),
            declared_counterpart: Some(right.clone()),
        });
        accounts.push(AccountRecord {
            account: right.clone(),
            username,
            declared_counterpart: Some(left.clone()),
        });
        edges.push(MatchEdge {
            left,
            right,
            method: MatchMethod::SelfReport,
            score: 1.0,
        });
    }
    accounts.sort_by(|a, b| a.account.cmp(&b.account));
    let map = IdentityMap::from_edges(edges, DEFAULT_THRESHOLD)?;

    let truth = GroundTruth {
        users: n,
        circle_size,
        base_acquaintances: base.len(),
        sparse_share,
        dense_share,
        duplicated_fraction: if sparse_share > 0.0 { s / sparse_share } else { 0.0 },
        expected_similarity: s,
        expected_evenness: 1.0 - (dense_share - sparse_share),
        skew: rho,
        cross_link_correlation: c,
        rewired,
        friendships: [sparse.len(), dense.len()],
    };
    Ok(SynthOutput {
        graph,
        map,
        accounts,
        truth,
    })
}

impl GroundTruth {
    /// `key=value` lines in a fixed order.
    pub fn to_lines(&self) -> Vec<(String, String)> {
        [
            ("users", self.users.to_string()),
            ("circle_size", self.circle_size.to_string()),
            ("base_acquaintances", self.base_acquaintances.to_string()),
            ("sparse_share", format!("{:.6}", self.sparse_share)),
            ("dense_share", format!("{:.6}", self.dense_share)),
            ("duplicated_fraction", format!("{:.6}", self.duplicated_fraction)),
            ("expected_similarity", format!("{:.6}", self.expected_similarity)),
            ("expected_evenness", format!("{:.6}", self.expected_evenness)),
            ("skew", format!("{:.6}", self.skew)),
            ("cross_link_correlation", format!("{:.6}", self.cross_link_correlation)),
            ("rewired", self.rewired.to_string()),
            ("friendships_sparse", self.friendships[0].to_string()),
            ("friendships_dense", self.friendships[1].to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
