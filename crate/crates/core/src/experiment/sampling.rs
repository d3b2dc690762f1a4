use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::PairKey;
use crate::graph::{MultiNetworkGraph, NetworkId, UserRef};
use crate::identity::IdentityMap;
use crate::prediction::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingConfig {
    pub positives: usize,
    pub negatives: usize,
    pub min_negatives_with_common_neighbor: usize,
    pub seed: u64,
    pub target_network: NetworkId,
    pub source_network: NetworkId,
}

impl SamplingConfig {
    pub const DEFAULT_POSITIVES: usize = 5000;
    /// Negatives per positive.
    pub const NEGATIVE_RATIO: usize = 5;
    /// Cap on negative draws, as a multiple of the negatives requested.
    pub const OVERSAMPLING_CAP: usize = 100;

    pub fn new(target: NetworkId, source: NetworkId, seed: u64) -> Self {
        SamplingConfig::scaled(Self::DEFAULT_POSITIVES, target, source, seed)
    }

    /// `positives` positives, five times as many negatives, and as many
    /// common-neighbor negatives as positives.
    pub fn scaled(positives: usize, target: NetworkId, source: NetworkId, seed: u64) -> Self {
        SamplingConfig {
            positives,
            negatives: positives * Self::NEGATIVE_RATIO,
            min_negatives_with_common_neighbor: positives,
            seed,
            target_network: target,
            source_network: source,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SamplingConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positives == 0 || self.negatives == 0 {
            return Err(Error::InvalidArgument(
                "positives and negatives must be positive".into(),
            ));
        }
        if self.min_negatives_with_common_neighbor > self.negatives {
            return Err(Error::InvalidArgument(format!(
                "min_negatives_with_common_neighbor {} exceeds negatives {}",
                self.min_negatives_with_common_neighbor, self.negatives
            )));
        }
        if self.target_network == self.source_network {
            return Err(Error::InvalidArgument("target and source networks must differ".into()));
        }
        Ok(())
    }
}

/// A sampled instance pool, each half in canonical pair order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceSample {
    pub positives: Vec<PairKey>,
    pub negatives: Vec<PairKey>,
}

impl InstanceSample {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positives then negatives, labeled.
    pub fn instances(&self) -> Vec<Instance> {
        self.positives
            .iter()
            .map(|p| Instance::new(p.clone(), true))
            .chain(self.negatives.iter().map(|p| Instance::new(p.clone(), false)))
            .collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &PairKey> {
        self.positives.iter().chain(&self.negatives)
    }
}

/// Target-network users with a counterpart in the source network, sorted.
pub fn linked_population(
    g: &MultiNetworkGraph,
    map: &IdentityMap,
    target: &NetworkId,
    source: &NetworkId,
) -> Result<Vec<String>> {
    g.network(source)?;
    let net = g.network(target)?;
    Ok(net
        .users()
        .filter(|u| map.linked_id(&UserRef::new(target.clone(), *u), source).is_some())
        .map(String::from)
        .collect())
}

/// Whether the pair shares a friend in the target network or, through
/// counterparts, in the source network.
pub fn has_common_neighbor(g: &MultiNetworkGraph, map: &IdentityMap, pair: &PairKey) -> Result<bool> {
    if g.network(&pair.target)?.common_friend_count(&pair.u, &pair.v) > 0 {
        return Ok(true);
    }
    let src = g.network(&pair.source)?;
    Ok(pair
        .in_network(&pair.source, map)
        .is_some_and(|(a, b)| src.common_friend_count(a, b) > 0))
}

pub fn sample_instances(g: &MultiNetworkGraph, map: &IdentityMap, cfg: &SamplingConfig) -> Result<InstanceSample> {
    sample_instances_excluding(g, map, cfg, &BTreeSet::new())
}

/// Samples positives and negatives, never returning a pair in `exclude`.
pub fn sample_instances_excluding(
    g: &MultiNetworkGraph,
    map: &IdentityMap,
    cfg: &SamplingConfig,
    exclude: &BTreeSet<PairKey>,
) -> Result<InstanceSample> {
    cfg.validate()?;
    let (t, s) = (&cfg.target_network, &cfg.source_network);
    let population = linked_population(g, map, t, s)?;
    let linked: BTreeSet<&str> = population.iter().map(String::as_str).collect();
    let net = g.network(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pool = Vec::new();
    for (u, v) in net.friend_pairs() {
        if linked.contains(u) && linked.contains(v) {
            let key = PairKey::new(u, v, t.clone(), s.clone())?;
            if !exclude.contains(&key) {
                pool.push(key);
            }
        }
    }
    if pool.len() < cfg.positives {
        return Err(Error::Infeasible(format!(
            "{} positives requested but only {} eligible friend pairs exist in {t}",
            cfg.positives,
            pool.len()
        )));
    }
    let mut positives: Vec<PairKey> = index::sample(&mut rng, pool.len(), cfg.positives)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();
    positives.sort();

    if population.len() < 2 {
        return Err(Error::Infeasible(format!(
            "linked population of {} users cannot yield negatives",
            population.len()
        )));
    }
    let cap = cfg.negatives.saturating_mul(SamplingConfig::OVERSAMPLING_CAP);
    let mut seen: BTreeSet<PairKey> = BTreeSet::new();
    // draw order is kept so the final fill is reproducible
    let mut drawn: Vec<(PairKey, bool)> = Vec::new();
    let mut with_cn = 0usize;
    let mut draws = 0usize;
    while draws < cap && (with_cn < cfg.min_negatives_with_common_neighbor || drawn.len() < cfg.negatives) {
        draws += 1;
        let i = rng.random_range(0..population.len());
        let j = rng.random_range(0..population.len());
        if i == j {
            continue;
        }
        let (u, v) = (&population[i], &population[j]);
        if net.are_friends(u, v) {
            continue;
        }
        let key = PairKey::new(u, v, t.clone(), s.clone())?;
        if exclude.contains(&key) || seen.contains(&key) {
            continue;
        }
        let cn = has_common_neighbor(g, map, &key)?;
        with_cn += usize::from(cn);
        seen.insert(key.clone());
        drawn.push((key, cn));
    }
    if with_cn < cfg.min_negatives_with_common_neighbor {
        return Err(Error::Infeasible(format!(
            "found {with_cn} of {} required negatives with a common neighbor after {draws} draws",
            cfg.min_negatives_with_common_neighbor
        )));
    }
    if drawn.len() < cfg.negatives {
        return Err(Error::Infeasible(format!(
            "found {} of {} required negatives after {draws} draws",
            drawn.len(),
            cfg.negatives
        )));
    }

    let mut take = vec![false; drawn.len()];
    let mut quota = cfg.min_negatives_with_common_neighbor;
    for (k, (_, cn)) in drawn.iter().enumerate() {
        if quota == 0 {
            break;
        }
        if *cn {
            take[k] = true;
            quota -= 1;
        }
    }
    let mut remaining = cfg.negatives - cfg.min_negatives_with_common_neighbor;
    for flag in take.iter_mut() {
        if remaining == 0 {
            break;
        }
        if !*flag {
            *flag = true;
            remaining -= 1;
        }
    }
    let mut negatives: Vec<PairKey> = drawn
        .into_iter()
        .zip(take)
        .filter_map(|((key, _), keep)| keep.then_some(key))
        .collect();
    negatives.sort();
    Ok(InstanceSample { positives, negatives })
}

/// Scoring graph with the given target-network friendships removed.
pub fn holdout_graph<'a>(
    g: &MultiNetworkGraph,
    target: &NetworkId,
    positives: impl IntoIterator<Item = &'a PairKey>,
) -> Result<MultiNetworkGraph> {
    g.without_friendships(target, positives.into_iter().map(|p| (p.u.as_str(), p.v.as_str())))
}
