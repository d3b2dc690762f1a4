use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::report::{Curve, EvalReport, Fingerprint, MethodRow};
use super::sampling::{holdout_graph, sample_instances, sample_instances_excluding, InstanceSample, SamplingConfig};
use crate::error::{Error, Result};
use crate::features::{extract, CategoryThresholds, FeatureContext, FeatureSet, PairKey};
use crate::graph::{MultiNetworkGraph, UserRef};
use crate::identity::IdentityMap;
use crate::measures::ProfileTable;
use crate::prediction::{
    curve, evaluate_predictions, metrics_at_k, random_baseline, rank_pairs, train, Dataset, Instance, LabeledFeatures,
    Measure, MetricsAtK, Prf, TrainConfig,
};

pub const DEFAULT_RUNS: usize = 3;

/// K = 1000, 2000, ..., 10000.
pub fn default_k_grid() -> Vec<usize> {
    (1..=10).map(|i| i * 1000).collect()
}

/// Seed of run `run_index` (0-based).
pub fn run_seed(base: u64, run_index: usize) -> u64 {
    base.wrapping_add(run_index as u64)
}

// separates the test-set stream from the next run's training stream
const TEST_STREAM: u64 = 0x7465_7374_0000_0000;

/// Seed of the test sample drawn alongside a training sample seeded `seed`.
pub fn test_seed(seed: u64) -> u64 {
    seed ^ TEST_STREAM
}

fn sampling_fingerprint(fp: &mut Fingerprint, cfg: &SamplingConfig, runs: usize) {
    fp.push("target", &cfg.target_network);
    fp.push("source", &cfg.source_network);
    fp.push("positives", cfg.positives);
    fp.push("negatives", cfg.negatives);
    fp.push(
        "min_negatives_with_common_neighbor",
        cfg.min_negatives_with_common_neighbor,
    );
    fp.push("seed", cfg.seed);
    fp.push("runs", runs);
    fp.push("oversampling_cap", SamplingConfig::OVERSAMPLING_CAP);
}

fn at_k(m: MetricsAtK) -> Prf {
    Prf {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnsupervisedConfig {
    pub sampling: SamplingConfig,
    pub measures: Vec<Measure>,
    pub k_grid: Vec<usize>,
    pub runs: usize,
}

impl UnsupervisedConfig {
    /// All measures over both networks, default K grid, default run count.
    pub fn new(sampling: SamplingConfig) -> Self {
        let measures = Measure::grid(&[sampling.target_network.clone(), sampling.source_network.clone()]);
        UnsupervisedConfig {
            sampling,
            measures,
            k_grid: default_k_grid(),
            runs: DEFAULT_RUNS,
        }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut fp = Fingerprint::default();
        sampling_fingerprint(&mut fp, &self.sampling, self.runs);
        let measures: Vec<String> = self.measures.iter().map(ToString::to_string).collect();
        fp.push("measures", measures.join(","));
        let ks: Vec<String> = self.k_grid.iter().map(ToString::to_string).collect();
        fp.push("k_grid", ks.join(","));
        fp
    }
}

pub const RANDOM_BASELINE: &str = "random";

/// Ranks each run's sampled pool by every measure. Rows report metrics at
/// K = number of positives; curves report the K grid, averaged over runs.
/// K values beyond the pool size are skipped.
pub fn run_unsupervised(g: &MultiNetworkGraph, map: &IdentityMap, cfg: &UnsupervisedConfig) -> Result<EvalReport> {
    if cfg.runs == 0 || cfg.measures.is_empty() {
        return Err(Error::InvalidArgument("need at least one run and one measure".into()));
    }
    let s = &cfg.sampling;
    let pool = s.positives + s.negatives;
    let ks: Vec<usize> = cfg.k_grid.iter().copied().filter(|&k| k >= 1 && k <= pool).collect();
    let mut per_measure: Vec<Vec<Prf>> = alloc::vec![Vec::new(); cfg.measures.len()];
    let mut curve_sums: Vec<Vec<MetricsAtK>> = Vec::new();
    for r in 0..cfg.runs {
        let sample = sample_instances(g, map, &s.with_seed(run_seed(s.seed, r)))?;
        let scoring = holdout_graph(g, &s.target_network, &sample.positives)?;
        let instances = sample.instances();
        for (i, m) in cfg.measures.iter().enumerate() {
            let ranked = rank_pairs(&instances, m, &scoring, map)?;
            per_measure[i].push(at_k(metrics_at_k(&ranked, s.positives, s.positives)?));
            let points = curve(&ranked, &ks, s.positives)?;
            if r == 0 {
                curve_sums.push(points);
            } else {
                for (acc, p) in curve_sums[i].iter_mut().zip(points) {
                    acc.precision += p.precision;
                    acc.recall += p.recall;
                    acc.f1 += p.f1;
                }
            }
        }
    }

    let mut report = EvalReport::new(
        s.target_network.clone(),
        s.source_network.clone(),
        "unsupervised",
        cfg.fingerprint(),
    );
    let runs = cfg.runs as f64;
    for ((m, prfs), sums) in cfg.measures.iter().zip(per_measure).zip(curve_sums) {
        report.rows.push(MethodRow::from_runs(m.to_string(), prfs));
        let points = sums
            .into_iter()
            .map(|p| MetricsAtK {
                k: p.k,
                precision: p.precision / runs,
                recall: p.recall / runs,
                f1: p.f1 / runs,
            })
            .collect();
        report.curves.push(Curve {
            name: m.to_string(),
            points,
        });
    }
    let baseline = at_k(random_baseline(s.positives, s.positives, pool)?);
    report
        .rows
        .push(MethodRow::from_runs(RANDOM_BASELINE, alloc::vec![baseline; cfg.runs]));
    report.curves.push(Curve {
        name: RANDOM_BASELINE.to_string(),
        points: ks
            .iter()
            .map(|&k| random_baseline(k, s.positives, pool))
            .collect::<Result<_>>()?,
    });
    report.push_note("k_at", s.positives);
    report.push_note("pool_size", pool);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedConfig {
    pub sampling: SamplingConfig,
    pub feature_sets: Vec<FeatureSet>,
    pub runs: usize,
    /// Training hyperparameters; the seed is replaced by each run's seed.
    pub train: TrainConfig,
}

impl SupervisedConfig {
    pub fn new(sampling: SamplingConfig) -> Self {
        let seed = sampling.seed;
        SupervisedConfig {
            sampling,
            feature_sets: FeatureSet::ALL_SETS.to_vec(),
            runs: DEFAULT_RUNS,
            train: TrainConfig::new(seed),
        }
    }

    pub fn measures(&self) -> Vec<Measure> {
        Measure::grid(&[
            self.sampling.target_network.clone(),
            self.sampling.source_network.clone(),
        ])
    }

    pub fn fingerprint(&self, profiles: &ProfileTable, map: &IdentityMap) -> Result<Fingerprint> {
        let thr = CategoryThresholds::from_profiles(profiles)?;
        let mut fp = Fingerprint::default();
        sampling_fingerprint(&mut fp, &self.sampling, self.runs);
        let sets: Vec<&str> = self.feature_sets.iter().map(|f| f.as_str()).collect();
        fp.push("feature_sets", sets.join(","));
        fp.push("lambda", self.train.lambda);
        fp.push("epochs", self.train.epochs);
        fp.push("learning_rate", self.train.learning_rate.as_str());
        fp.push("standardize", "zscore");
        fp.push("profiles", profiles.len());
        fp.push("category_mean_sim", thr.mean_sim);
        fp.push("category_mean_even", thr.mean_even);
        fp.push("identity_links", map.len());
        fp.push("identity_threshold", map.threshold());
        Ok(fp)
    }
}

/// Features of every instance under `set`.
pub fn extract_all(instances: &[Instance], ctx: &FeatureContext<'_>, set: FeatureSet) -> Result<Vec<LabeledFeatures>> {
    instances
        .iter()
        .map(|inst| {
            Ok(LabeledFeatures {
                pair: inst.pair.clone(),
                features: extract(&inst.pair, ctx, set)?,
                label: inst.label,
            })
        })
        .collect()
}

fn restrict(items: &[LabeledFeatures], set: FeatureSet) -> Result<Dataset> {
    let restricted = items
        .iter()
        .map(|it| {
            Ok(LabeledFeatures {
                pair: it.pair.clone(),
                features: it.features.restrict(set)?,
                label: it.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_features(&restricted)
}

/// One supervised run: its samples, scoring graph and test predictions.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_index: usize,
    pub seed: u64,
    pub train: InstanceSample,
    pub test: InstanceSample,
    /// Scoring graph with both train and test positives removed.
    pub scoring: MultiNetworkGraph,
    /// Test instances in evaluation order.
    pub test_instances: Vec<Instance>,
    /// Predicted labels per feature set, aligned with `test_instances`.
    pub predictions: BTreeMap<FeatureSet, Vec<bool>>,
    pub results: BTreeMap<FeatureSet, Prf>,
    pub objectives: BTreeMap<FeatureSet, f64>,
    /// F1 at K = test positives for each single-measure ranking.
    pub unsupervised_f1: Vec<(Measure, f64)>,
}

pub fn supervised_run(
    g: &MultiNetworkGraph,
    map: &IdentityMap,
    profiles: &ProfileTable,
    cfg: &SupervisedConfig,
    run_index: usize,
) -> Result<RunOutcome> {
    if cfg.feature_sets.is_empty() {
        return Err(Error::InvalidArgument("no feature sets requested".into()));
    }
    let seed = run_seed(cfg.sampling.seed, run_index);
    let train_sample = sample_instances(g, map, &cfg.sampling.with_seed(seed))?;
    let exclude: BTreeSet<PairKey> = train_sample.pairs().cloned().collect();
    let test_sample = sample_instances_excluding(g, map, &cfg.sampling.with_seed(test_seed(seed)), &exclude)?;
    let scoring = holdout_graph(
        g,
        &cfg.sampling.target_network,
        train_sample.positives.iter().chain(&test_sample.positives),
    )?;

    let thresholds = CategoryThresholds::from_profiles(profiles)?;
    let ctx = FeatureContext {
        graph: &scoring,
        map,
        profiles,
        thresholds: &thresholds,
    };
    let train_items = extract_all(&train_sample.instances(), &ctx, FeatureSet::All)?;
    let test_instances = test_sample.instances();
    let test_items = extract_all(&test_instances, &ctx, FeatureSet::All)?;
    let truth: Vec<bool> = test_instances.iter().map(|i| i.label).collect();

    let mut predictions = BTreeMap::new();
    let mut results = BTreeMap::new();
    let mut objectives = BTreeMap::new();
    let train_cfg = TrainConfig { seed, ..cfg.train };
    for &set in &cfg.feature_sets {
        let out = train(&restrict(&train_items, set)?, &train_cfg)?;
        let test = restrict(&test_items, set)?;
        let predicted = test
            .rows
            .iter()
            .map(|r| out.model.predict_values(r).map(|(l, _)| l))
            .collect::<Result<Vec<_>>>()?;
        results.insert(set, evaluate_predictions(&predicted, &truth));
        predictions.insert(set, predicted);
        objectives.insert(set, out.objective);
    }

    let positives = test_sample.positives.len();
    let unsupervised_f1 = cfg
        .measures()
        .into_iter()
        .map(|m| {
            let ranked = rank_pairs(&test_instances, &m, &scoring, map)?;
            Ok((m, metrics_at_k(&ranked, positives, positives)?.f1))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RunOutcome {
        run_index,
        seed,
        train: train_sample,
        test: test_sample,
        scoring,
        test_instances,
        predictions,
        results,
        objectives,
        unsupervised_f1,
    })
}

/// Highest mean-over-runs F1@P among the single-measure rankings.
pub fn best_unsupervised(outcomes: &[RunOutcome]) -> Option<(Measure, f64)> {
    let first = outcomes.first()?;
    let n = outcomes.len() as f64;
    first
        .unsupervised_f1
        .iter()
        .enumerate()
        .map(|(i, (m, _))| {
            let mean = outcomes.iter().map(|o| o.unsupervised_f1[i].1).sum::<f64>() / n;
            (m.clone(), mean)
        })
        .fold(None, |best: Option<(Measure, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
}

/// Builds the report from runs given in run-index order.
pub fn assemble_supervised(
    cfg: &SupervisedConfig,
    profiles: &ProfileTable,
    map: &IdentityMap,
    outcomes: &[RunOutcome],
) -> Result<EvalReport> {
    let mut report = EvalReport::new(
        cfg.sampling.target_network.clone(),
        cfg.sampling.source_network.clone(),
        "supervised",
        cfg.fingerprint(profiles, map)?,
    );
    for &set in &cfg.feature_sets {
        let runs = outcomes
            .iter()
            .map(|o| {
                o.results
                    .get(&set)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("run {} lacks {set}", o.run_index)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut row = MethodRow::from_runs(set.as_str(), runs);
        if !row.precision_exceeds_recall() {
            row.flags.push(MethodRow::PRECISION_NOT_ABOVE_RECALL.to_string());
        }
        report.rows.push(row);
    }
    if let Some((m, f1)) = best_unsupervised(outcomes) {
        report.push_note("best_unsupervised_measure", m);
        report.push_note("best_unsupervised_f1", f1);
    }
    Ok(report)
}

pub fn run_supervised(
    g: &MultiNetworkGraph,
    map: &IdentityMap,
    profiles: &ProfileTable,
    cfg: &SupervisedConfig,
) -> Result<(EvalReport, Vec<RunOutcome>)> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let outcomes = (0..cfg.runs)
        .map(|r| supervised_run(g, map, profiles, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((assemble_supervised(cfg, profiles, map, &outcomes)?, outcomes))
}

/// Whether the pair has a common neighbor in its target network that owns a
/// maintenance profile.
pub fn has_profiled_common_neighbor(
    pair: &PairKey,
    scoring: &MultiNetworkGraph,
    profiles: &ProfileTable,
    map: &IdentityMap,
) -> Result<bool> {
    let net = scoring.network(&pair.target)?;
    let (a, b) = (net.friends_of(&pair.u), net.friends_of(&pair.v));
    Ok(a.intersection(b).any(|z| {
        profiles
            .for_account(&UserRef::new(pair.target.clone(), z.as_str()), map)
            .is_some()
    }))
}

/// Metrics of one prediction vector restricted to the qualifying instances.
/// `None` when nothing qualifies.
pub fn subset_metrics(test: &[Instance], predicted: &[bool], qualifies: &[bool]) -> Option<Prf> {
    if !qualifies.iter().any(|&q| q) {
        return None;
    }
    let (p, t): (Vec<bool>, Vec<bool>) = test
        .iter()
        .zip(predicted)
        .zip(qualifies)
        .filter(|(_, &q)| q)
        .map(|((inst, &p), _)| (p, inst.label))
        .unzip();
    Some(evaluate_predictions(&p, &t))
}

/// Recomputes each run's metrics on test instances with at least one
/// profiled common neighbor in the target network.
pub fn subset_analysis(
    cfg: &SupervisedConfig,
    profiles: &ProfileTable,
    map: &IdentityMap,
    outcomes: &[RunOutcome],
) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("subset analysis needs at least one run".into()));
    }
    let mut fingerprint = cfg.fingerprint(profiles, map)?;
    fingerprint.push("subset", "profiled_common_neighbor");
    let mut report = EvalReport::new(
        cfg.sampling.target_network.clone(),
        cfg.sampling.source_network.clone(),
        "subset",
        fingerprint,
    );
    let mut per_set: BTreeMap<FeatureSet, (Vec<Prf>, bool)> = BTreeMap::new();
    for o in outcomes {
        let qualifies = o
            .test_instances
            .iter()
            .map(|i| has_profiled_common_neighbor(&i.pair, &o.scoring, profiles, map))
            .collect::<Result<Vec<_>>>()?;
        let count = qualifies.iter().filter(|&&q| q).count();
        report.push_note(&format!("run{}_subset_size", o.run_index + 1), count);
        for (set, predicted) in &o.predictions {
            let entry = per_set.entry(*set).or_default();
            match subset_metrics(&o.test_instances, predicted, &qualifies) {
                Some(prf) => entry.0.push(prf),
                None => {
                    entry.0.push(Prf::default());
                    entry.1 = true;
                }
            }
        }
    }
    for (set, (runs, empty)) in per_set {
        let mut row = MethodRow::from_runs(set.as_str(), runs);
        if empty {
            row.flags.push(MethodRow::EMPTY_SUBSET.to_string());
        }
        if !row.precision_exceeds_recall() {
            row.flags.push(MethodRow::PRECISION_NOT_ABOVE_RECALL.to_string());
        }
        report.rows.push(row);
    }
    Ok(report)
}
