use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{adamic_adar_in, jaccard_in, PairKey};
use crate::graph::{MultiNetworkGraph, NetworkId};
use crate::identity::IdentityMap;

/// A labeled candidate pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    pub pair: PairKey,
    pub label: bool,
}

impl Instance {
    pub fn new(pair: PairKey, label: bool) -> Self {
        Instance { pair, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasureKind {
    Cn,
    Jc,
    Aa,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::Cn, MeasureKind::Jc, MeasureKind::Aa];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Cn => "CN",
            MeasureKind::Jc => "JC",
            MeasureKind::Aa => "AA",
        }
    }
}

/// A neighborhood measure evaluated in one network, written `JC_I`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measure {
    pub kind: MeasureKind,
    pub network: NetworkId,
}

impl Measure {
    pub fn new(kind: MeasureKind, network: impl Into<NetworkId>) -> Self {
        Measure {
            kind,
            network: network.into(),
        }
    }

    /// Every measure kind crossed with every listed network.
    pub fn grid(networks: &[NetworkId]) -> Vec<Measure> {
        networks
            .iter()
            .flat_map(|n| MeasureKind::ALL.into_iter().map(move |k| Measure::new(k, n.clone())))
            .collect()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.kind.as_str(), self.network)
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown measure `{s}`, expected e.g. JC_I"));
        let (kind, net) = s.trim().split_once('_').ok_or_else(bad)?;
        let kind = MeasureKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(kind))
            .ok_or_else(bad)?;
        if net.is_empty() {
            return Err(bad());
        }
        Ok(Measure::new(kind, NetworkId::new(net)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub pair: PairKey,
    pub score: f64,
    pub label: bool,
}

/// Entries sorted by score descending, ties in canonical pair order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|e| e.label).count()
    }
}

fn order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.pair.cmp(&b.pair))
}

pub fn rank_by_scores(entries: impl IntoIterator<Item = RankedEntry>) -> RankedList {
    let mut entries: Vec<_> = entries.into_iter().collect();
    entries.sort_by(order);
    RankedList { entries }
}

/// Scores every instance with `measure`. Pairs lacking a counterpart in the
/// measure's network score 0.
pub fn rank_pairs(
    instances: &[Instance],
    measure: &Measure,
    g: &MultiNetworkGraph,
    map: &IdentityMap,
) -> Result<RankedList> {
    let net = g.network(&measure.network)?;
    let entries = instances.iter().map(|inst| {
        let score = match inst.pair.in_network(&measure.network, map) {
            None => 0.0,
            Some((u, v)) => match measure.kind {
                MeasureKind::Cn => net.common_friend_count(u, v) as f64,
                MeasureKind::Jc => jaccard_in(net, u, v),
                MeasureKind::Aa => adamic_adar_in(net, u, v),
            },
        };
        RankedEntry {
            pair: inst.pair.clone(),
            score,
            label: inst.label,
        }
    });
    Ok(rank_by_scores(entries))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsAtK {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics_at_k(ranked: &RankedList, k: usize, total_positives: usize) -> Result<MetricsAtK> {
    if k == 0 || k > ranked.len() {
        return Err(Error::KOutOfRange { k, len: ranked.len() });
    }
    if total_positives == 0 {
        return Err(Error::InvalidArgument("total_positives must be positive".to_string()));
    }
    let tp = ranked.entries[..k].iter().filter(|e| e.label).count();
    let precision = tp as f64 / k as f64;
    let recall = tp as f64 / total_positives as f64;
    Ok(MetricsAtK {
        k,
        precision,
        recall,
        f1: f1_score(precision, recall),
    })
}

/// Metrics at each `k`, computed with one pass over the ranking.
pub fn curve(ranked: &RankedList, ks: &[usize], total_positives: usize) -> Result<Vec<MetricsAtK>> {
    if total_positives == 0 {
        return Err(Error::InvalidArgument("total_positives must be positive".to_string()));
    }
    let mut prefix = Vec::with_capacity(ranked.len() + 1);
    prefix.push(0usize);
    for e in &ranked.entries {
        prefix.push(prefix[prefix.len() - 1] + usize::from(e.label));
    }
    ks.iter()
        .map(|&k| {
            if k == 0 || k > ranked.len() {
                return Err(Error::KOutOfRange { k, len: ranked.len() });
            }
            let precision = prefix[k] as f64 / k as f64;
            let recall = prefix[k] as f64 / total_positives as f64;
            Ok(MetricsAtK {
                k,
                precision,
                recall,
                f1: f1_score(precision, recall),
            })
        })
        .collect()
}

/// Expected metrics of picking `k` of `total` instances uniformly at random
/// when `positives` of them are positive.
pub fn random_baseline(k: usize, positives: usize, total: usize) -> Result<MetricsAtK> {
    if k == 0 || k > total {
        return Err(Error::KOutOfRange { k, len: total });
    }
    if positives == 0 {
        return Err(Error::InvalidArgument("positives must be positive".to_string()));
    }
    let precision = positives as f64 / total as f64;
    let recall = k as f64 / total as f64;
    Ok(MetricsAtK {
        k,
        precision,
        recall,
        f1: f1_score(precision, recall),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, IngestConfig, UserRef};
    use crate::identity::{MatchEdge, MatchMethod};
    use alloc::vec;

    fn pair(a: &str, b: &str) -> PairKey {
        PairKey::new(a, b, "T".into(), "I".into()).unwrap()
    }

    fn entries(scores: &[(f64, bool)]) -> RankedList {
        rank_by_scores(scores.iter().enumerate().map(|(i, &(score, label))| RankedEntry {
            pair: pair(&format!("a{i:02}"), &format!("b{i:02}")),
            score,
            label,
        }))
    }

    #[test]
    fn perfect_separation_ranks_positives_first() {
        let r = entries(&[(0.0, false), (1.0, true), (0.0, false), (1.0, true)]);
        assert!(r.entries[..2].iter().all(|e| e.label));
        let m = metrics_at_k(&r, 2, 2).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn ties_follow_canonical_order() {
        let r = entries(&[(0.5, false), (0.5, true), (0.5, false)]);
        let names: Vec<_> = r.entries.iter().map(|e| e.pair.u.as_str()).collect();
        assert_eq!(names, ["a00", "a01", "a02"]);
        let reversed = rank_by_scores(r.entries.iter().rev().cloned());
        assert_eq!(reversed, r);
    }

    #[test]
    fn hand_counted_metrics() {
        // positives at ranks 1, 2 and 4
        let scores: Vec<_> = (0..10).map(|i| (10.0 - i as f64, [0, 1, 3].contains(&i))).collect();
        let r = entries(&scores);
        let m = metrics_at_k(&r, 3, 3).unwrap();
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        let none = entries(&[(1.0, false), (0.0, true)]);
        let m = metrics_at_k(&none, 1, 1).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(metrics_at_k(&r, 0, 3), Err(Error::KOutOfRange { k: 0, len: 10 }));
        assert!(metrics_at_k(&r, 11, 3).is_err());
        assert!(metrics_at_k(&r, 3, 0).is_err());
        let c = curve(&r, &[1, 3, 10], 3).unwrap();
        assert_eq!(c[1], metrics_at_k(&r, 3, 3).unwrap());
        assert_eq!(c[2].recall, 1.0);
    }

    #[test]
    fn random_baseline_expectation() {
        let m = random_baseline(500, 500, 3000).unwrap();
        assert!((m.precision - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.f1 - 1.0 / 6.0).abs() < 1e-15);
        assert!(random_baseline(0, 1, 10).is_err());
    }

    #[test]
    fn measure_names_round_trip() {
        let grid = Measure::grid(&["T".into(), "I".into()]);
        assert_eq!(grid.len(), 6);
        for m in grid {
            assert_eq!(m.to_string().parse::<Measure>().unwrap(), m);
        }
        assert!("XX_T".parse::<Measure>().is_err());
        assert!("JC".parse::<Measure>().is_err());
    }

    /// Six target users; positives (p1,p2), (p3,p4) share two source friends,
    /// negatives share none.
    #[test]
    fn source_jaccard_puts_positives_first() {
        let mut b = GraphBuilder::new(IngestConfig::new(["T".into(), "I".into()]));
        for (x, y) in [("ip1", "iz1"), ("ip2", "iz1"), ("ip1", "iz2"), ("ip2", "iz2")] {
            b.push_friendship("I", x, y).unwrap();
        }
        for (x, y) in [("ip3", "iz1"), ("ip4", "iz1"), ("ip3", "iz2"), ("ip4", "iz2")] {
            b.push_friendship("I", x, y).unwrap();
        }
        b.push_friendship("I", "in1", "iz3").unwrap();
        b.push_friendship("I", "in2", "iz4").unwrap();
        for u in ["p1", "p2", "p3", "p4", "n1", "n2"] {
            b.add_user(&UserRef::new("T", u)).unwrap();
        }
        let (g, _) = b.build();
        let map = IdentityMap::from_edges(
            ["p1", "p2", "p3", "p4", "n1", "n2"].iter().map(|u| MatchEdge {
                left: UserRef::new("T", *u),
                right: UserRef::new("I", alloc::format!("i{u}")),
                method: MatchMethod::SelfReport,
                score: 1.0,
            }),
            0.63,
        )
        .unwrap();
        let instances = vec![
            Instance::new(pair("n1", "n2"), false),
            Instance::new(pair("p1", "p2"), true),
            Instance::new(pair("p1", "n1"), false),
            Instance::new(pair("p3", "p4"), true),
            Instance::new(pair("ghost", "p1"), false),
        ];
        let r = rank_pairs(&instances, &Measure::new(MeasureKind::Jc, "I"), &g, &map).unwrap();
        // brute force: |{iz1,iz2}| / |{iz1,iz2}| = 1 for positives, 0 otherwise
        let scores: Vec<_> = r.entries.iter().map(|e| (e.score, e.label)).collect();
        assert_eq!(
            scores,
            [(1.0, true), (1.0, true), (0.0, false), (0.0, false), (0.0, false)]
        );
        let cn = rank_pairs(&instances, &Measure::new(MeasureKind::Cn, "T"), &g, &map).unwrap();
        assert!(cn.entries.iter().all(|e| e.score == 0.0));
        assert!(rank_pairs(&instances, &Measure::new(MeasureKind::Cn, "X"), &g, &map).is_err());
    }
}
