//! Link prediction features for a user pair.
//!
//! Three families are extracted for a pair in a target network, using a
//! second (source) network reached through the identity map:
//!
//! * neighborhood: common neighbors, Jaccard and Adamic-Adar in each network,
//! * maintenance: per-category share of common neighbors whose maintenance
//!   profile falls into each of the four high/low evenness by high/low
//!   similarity categories,
//! * cross link: whether the pair are friends in the source network.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{MultiNetworkGraph, Network, NetworkId, UserRef};
use crate::identity::IdentityMap;
use crate::measures::{MaintenanceProfile, ProfileTable};

/// A candidate pair in `target`, with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub u: String,
    pub v: String,
    pub target: NetworkId,
    pub source: NetworkId,
}

impl PairKey {
    pub fn new(a: &str, b: &str, target: NetworkId, source: NetworkId) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument(format!("pair ({a}, {b}) repeats a user")));
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Ok(PairKey {
            u: u.to_string(),
            v: v.to_string(),
            target,
            source,
        })
    }

    /// The pair's two accounts expressed in `network`, if both exist there.
    pub fn in_network<'a>(&'a self, network: &NetworkId, map: &'a IdentityMap) -> Option<(&'a str, &'a str)> {
        if *network == self.target {
            return Some((&self.u, &self.v));
        }
        let cu = map.linked_id(&UserRef::new(self.target.clone(), self.u.as_str()), network)?;
        let cv = map.linked_id(&UserRef::new(self.target.clone(), self.v.as_str()), network)?;
        Some((cu, cv))
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) in {}", self.u, self.v, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaintenanceCategory {
    /// high evenness, high similarity
    Hehs,
    /// high evenness, low similarity
    Hels,
    /// low evenness, high similarity
    Lehs,
    /// low evenness, low similarity
    Lels,
}

impl MaintenanceCategory {
    pub const ALL: [MaintenanceCategory; 4] = [
        MaintenanceCategory::Hehs,
        MaintenanceCategory::Hels,
        MaintenanceCategory::Lehs,
        MaintenanceCategory::Lels,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaintenanceCategory::Hehs => "HEHS",
            MaintenanceCategory::Hels => "HELS",
            MaintenanceCategory::Lehs => "LEHS",
            MaintenanceCategory::Lels => "LELS",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Population means that split profiles into high and low.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryThresholds {
    pub mean_sim: f64,
    pub mean_even: f64,
    pub population_size: usize,
}

impl CategoryThresholds {
    pub fn from_profiles(profiles: &ProfileTable) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument(
                "category thresholds need at least one profile".to_string(),
            ));
        }
        let n = profiles.len() as f64;
        let (s, e) = profiles
            .iter()
            .fold((0.0, 0.0), |(s, e), (_, p)| (s + p.f_sim, e + p.f_even));
        Ok(CategoryThresholds {
            mean_sim: s / n,
            mean_even: e / n,
            population_size: profiles.len(),
        })
    }
}

/// "High" means strictly above the population mean.
pub fn category_of(profile: &MaintenanceProfile, thr: &CategoryThresholds) -> MaintenanceCategory {
    let high_sim = profile.f_sim > thr.mean_sim;
    let high_even = profile.f_even > thr.mean_even;
    match (high_even, high_sim) {
        (true, true) => MaintenanceCategory::Hehs,
        (true, false) => MaintenanceCategory::Hels,
        (false, true) => MaintenanceCategory::Lehs,
        (false, false) => MaintenanceCategory::Lels,
    }
}

pub fn common_neighbors_count(g: &MultiNetworkGraph, n: &NetworkId, u: &str, v: &str) -> Result<usize> {
    Ok(g.network(n)?.common_friend_count(u, v))
}

pub fn jaccard(g: &MultiNetworkGraph, n: &NetworkId, u: &str, v: &str) -> Result<f64> {
    Ok(jaccard_in(g.network(n)?, u, v))
}

pub fn adamic_adar(g: &MultiNetworkGraph, n: &NetworkId, u: &str, v: &str) -> Result<f64> {
    Ok(adamic_adar_in(g.network(n)?, u, v))
}

fn union_size(net: &Network, u: &str, v: &str, common: usize) -> usize {
    net.degree(u) + net.degree(v) - common
}

pub fn jaccard_in(net: &Network, u: &str, v: &str) -> f64 {
    let common = net.common_friend_count(u, v);
    let union = union_size(net, u, v, common);
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Sum of `1 / ln(deg z)` over common neighbors `z` with degree at least 2.
pub fn adamic_adar_in(net: &Network, u: &str, v: &str) -> f64 {
    let (a, b) = (net.friends_of(u), net.friends_of(v));
    a.intersection(b)
        .map(|z| net.degree(z))
        .filter(|&d| d >= 2)
        // fold from +0.0: an empty float sum() is -0.0
        .fold(0.0, |acc, d| acc + 1.0 / libm::log(d as f64))
}

/// Ratio of common neighbors in each maintenance category to the pair's
/// friend-set union, indexed like [`MaintenanceCategory::ALL`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CategoryRatios(pub [f64; 4]);

impl CategoryRatios {
    pub fn get(&self, c: MaintenanceCategory) -> f64 {
        self.0[c.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn nfm_features(
    g: &MultiNetworkGraph,
    n: &NetworkId,
    u: &str,
    v: &str,
    profiles: &ProfileTable,
    map: &IdentityMap,
    thr: &CategoryThresholds,
) -> Result<CategoryRatios> {
    Ok(nfm_in(g.network(n)?, n, u, v, profiles, map, thr))
}

fn nfm_in(
    net: &Network,
    n: &NetworkId,
    u: &str,
    v: &str,
    profiles: &ProfileTable,
    map: &IdentityMap,
    thr: &CategoryThresholds,
) -> CategoryRatios {
    let (a, b) = (net.friends_of(u), net.friends_of(v));
    let mut counts = [0usize; 4];
    let mut common = 0;
    for z in a.intersection(b) {
        common += 1;
        if let Some(p) = profiles.for_account(&UserRef::new(n.clone(), z.as_str()), map) {
            counts[category_of(p, thr).index()] += 1;
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        return CategoryRatios::default();
    }
    CategoryRatios(counts.map(|c| c as f64 / union as f64))
}

/// 1 iff both users have counterparts in the pair's source network and those
/// counterparts are friends there.
pub fn cross_link(g: &MultiNetworkGraph, map: &IdentityMap, pair: &PairKey) -> Result<bool> {
    let net = g.network(&pair.source)?;
    Ok(pair
        .in_network(&pair.source, map)
        .is_some_and(|(cu, cv)| net.are_friends(cu, cv)))
}

/// Which feature families to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureSet {
    Nbo,
    Nfm,
    Nbofm,
    Nbcl,
    Nfmcl,
    All,
}

impl FeatureSet {
    pub const ALL_SETS: [FeatureSet; 6] = [
        FeatureSet::Nbo,
        FeatureSet::Nfm,
        FeatureSet::Nbofm,
        FeatureSet::Nbcl,
        FeatureSet::Nfmcl,
        FeatureSet::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Nbo => "NBO",
            FeatureSet::Nfm => "NFM",
            FeatureSet::Nbofm => "NBOFM",
            FeatureSet::Nbcl => "NBCL",
            FeatureSet::Nfmcl => "NFMCL",
            FeatureSet::All => "ALL",
        }
    }

    pub fn neighborhood(self) -> bool {
        matches!(
            self,
            FeatureSet::Nbo | FeatureSet::Nbofm | FeatureSet::Nbcl | FeatureSet::All
        )
    }

    pub fn maintenance(self) -> bool {
        matches!(
            self,
            FeatureSet::Nfm | FeatureSet::Nbofm | FeatureSet::Nfmcl | FeatureSet::All
        )
    }

    pub fn cross_link(self) -> bool {
        matches!(self, FeatureSet::Nbcl | FeatureSet::Nfmcl | FeatureSet::All)
    }

    /// Canonical feature names for this set, in column order.
    pub fn feature_names(self) -> Vec<&'static str> {
        let mut names = Vec::new();
        if self.neighborhood() {
            names.extend(["CN_src", "CN_tgt", "JC_src", "JC_tgt", "AA_src", "AA_tgt"]);
        }
        if self.maintenance() {
            names.extend([
                "HEHS_tgt", "HELS_tgt", "LEHS_tgt", "LELS_tgt", "HEHS_src", "HELS_src", "LEHS_src", "LELS_src",
            ]);
        }
        if self.cross_link() {
            names.push("CL");
        }
        names
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL_SETS
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature set `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborhoodScores {
    pub cn: usize,
    pub jc: f64,
    pub aa: f64,
}

impl NeighborhoodScores {
    fn compute(net: &Network, u: &str, v: &str) -> Self {
        NeighborhoodScores {
            cn: net.common_friend_count(u, v),
            jc: jaccard_in(net, u, v),
            aa: adamic_adar_in(net, u, v),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NetworkPair<T> {
    pub source: T,
    pub target: T,
}

/// Extracted features. Families not selected are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub set: FeatureSet,
    pub neighborhood: Option<NetworkPair<NeighborhoodScores>>,
    pub maintenance: Option<NetworkPair<CategoryRatios>>,
    pub cross_link: Option<bool>,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<&'static str> {
        self.set.feature_names()
    }

    /// Values in [`FeatureSet::feature_names`] order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(15);
        if let Some(nb) = &self.neighborhood {
            out.extend([
                nb.source.cn as f64,
                nb.target.cn as f64,
                nb.source.jc,
                nb.target.jc,
                nb.source.aa,
                nb.target.aa,
            ]);
        }
        if let Some(m) = &self.maintenance {
            out.extend(m.target.0);
            out.extend(m.source.0);
        }
        if let Some(cl) = self.cross_link {
            out.push(if cl { 1.0 } else { 0.0 });
        }
        out
    }

    /// Keeps only the families of `set`, which must be a subset of this
    /// vector's set.
    pub fn restrict(&self, set: FeatureSet) -> Result<FeatureVector> {
        let take = |wanted: bool, have: bool| -> Result<bool> {
            if wanted && !have {
                Err(Error::InvalidArgument(format!(
                    "{} is not contained in {}",
                    set, self.set
                )))
            } else {
                Ok(wanted)
            }
        };
        Ok(FeatureVector {
            set,
            neighborhood: if take(set.neighborhood(), self.neighborhood.is_some())? {
                self.neighborhood
            } else {
                None
            },
            maintenance: if take(set.maintenance(), self.maintenance.is_some())? {
                self.maintenance
            } else {
                None
            },
            cross_link: if take(set.cross_link(), self.cross_link.is_some())? {
                self.cross_link
            } else {
                None
            },
        })
    }
}

/// Everything feature extraction reads. The graph must already be the
/// scoring graph, with held-out positives removed.
#[derive(Debug, Clone, Copy)]
pub struct FeatureContext<'a> {
    pub graph: &'a MultiNetworkGraph,
    pub map: &'a IdentityMap,
    pub profiles: &'a ProfileTable,
    pub thresholds: &'a CategoryThresholds,
}

pub fn extract(pair: &PairKey, ctx: &FeatureContext<'_>, set: FeatureSet) -> Result<FeatureVector> {
    let target = ctx.graph.network(&pair.target)?;
    let source = ctx.graph.network(&pair.source)?;
    let source_pair = pair.in_network(&pair.source, ctx.map);

    let neighborhood = set.neighborhood().then(|| NetworkPair {
        source: source_pair
            .map(|(a, b)| NeighborhoodScores::compute(source, a, b))
            .unwrap_or_default(),
        target: NeighborhoodScores::compute(target, &pair.u, &pair.v),
    });
    let maintenance = set.maintenance().then(|| NetworkPair {
        source: source_pair
            .map(|(a, b)| nfm_in(source, &pair.source, a, b, ctx.profiles, ctx.map, ctx.thresholds))
            .unwrap_or_default(),
        target: nfm_in(
            target,
            &pair.target,
            &pair.u,
            &pair.v,
            ctx.profiles,
            ctx.map,
            ctx.thresholds,
        ),
    });
    let cross_link = set
        .cross_link()
        .then(|| source_pair.is_some_and(|(a, b)| source.are_friends(a, b)));
    Ok(FeatureVector {
        set,
        neighborhood,
        maintenance,
        cross_link,
    })
}
