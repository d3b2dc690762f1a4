//! One function per subcommand.
//!
//! Outputs go to `--out` when given (the summary line then goes to stdout),
//! otherwise to stdout with the summary on stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use crossfriend_core::experiment::stats::{correlation, distribution_stats, independence_test};
use crossfriend_core::experiment::{
    assemble_supervised, extract_all, generate_synthetic, has_common_neighbor, holdout_graph, run_unsupervised,
    sample_instances_excluding, subset_analysis, supervised_run, test_seed, InstanceSample, RunOutcome, SamplingConfig,
    SupervisedConfig, SynthConfig, UnsupervisedConfig, RANDOM_BASELINE,
};
use crossfriend_core::features::{extract, CategoryThresholds, FeatureContext, PairKey};
use crossfriend_core::graph::{MultiNetworkGraph, NetworkId};
use crossfriend_core::identity::{
    match_accounts, AccountRecord, IdentityMap, MatchConfig, MatchMethod, DEFAULT_THRESHOLD,
};
use crossfriend_core::measures::ProfileTable;
use crossfriend_core::prediction::{
    evaluate_predictions, metrics_at_k, rank_pairs, train, Dataset, Instance, Measure, MeasureKind, TrainConfig,
};

use crate::formats::{self, read_file, write_file};
use crate::render::{self, StatsOutput};
use crate::{
    Command, EvalArgs, EvalMode, GraphArgs, IngestArgs, MatchArgs, MeasureArgs, PredictArgs, ProfileArgs, RankArgs,
    SampleArgs, SamplingArgs, StatsArgs, SynthArgs, TrainArgs, TrainingArgs,
};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(&a),
        Command::Match(a) => match_cmd(&a),
        Command::Measure(a) => measure(&a),
        Command::Stats(a) => stats(&a),
        Command::Sample(a) => sample(&a),
        Command::Rank(a) => rank(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Predict(a) => predict(&a),
        Command::Eval(a) => eval(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn emit(out: Option<&Path>, contents: &str, summary: &str) -> Result<()> {
    match out {
        Some(p) => {
            write_file(p, contents)?;
            println!("{summary}");
        }
        None => {
            print!("{contents}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn load_accounts(path: Option<&Path>) -> Result<Vec<AccountRecord>> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => Ok(formats::parse_accounts(&path_str(p), &read_file(p)?)?),
    }
}

fn load_graph(
    g: &GraphArgs,
) -> Result<(
    MultiNetworkGraph,
    crossfriend_core::graph::IngestSummary,
    Vec<AccountRecord>,
)> {
    let accounts = load_accounts(g.accounts.as_deref())?;
    let text = read_file(&g.edges)?;
    let edges = formats::parse_edges(&path_str(&g.edges), &text)?;
    let networks = (!g.networks.is_empty()).then_some(g.networks.as_slice());
    let (graph, summary) = formats::build_graph(&path_str(&g.edges), edges, &accounts, networks, g.max_followers)?;
    Ok((graph, summary, accounts))
}

fn load_identity(path: &Path) -> Result<IdentityMap> {
    Ok(formats::parse_identity(
        &path_str(path),
        &read_file(path)?,
        DEFAULT_THRESHOLD,
    )?)
}

fn load_instances(path: &Path) -> Result<Vec<Instance>> {
    Ok(formats::parse_instances(&path_str(path), &read_file(path)?)?)
}

fn graph_networks(g: &MultiNetworkGraph) -> Vec<NetworkId> {
    g.network_ids().cloned().collect()
}

/// Profiles from a file, or computed on the full graph.
fn load_profiles(args: &ProfileArgs, g: &MultiNetworkGraph, map: &IdentityMap) -> Result<ProfileTable> {
    match &args.profiles {
        Some(p) => Ok(formats::parse_profiles(&path_str(p), &read_file(p)?)?),
        None => Ok(ProfileTable::compute(g, map, &graph_networks(g))?),
    }
}

/// The graph with every positive pair of the given instance lists removed
/// from its target network.
fn scoring_graph(g: &MultiNetworkGraph, lists: &[&[Instance]]) -> Result<MultiNetworkGraph> {
    let mut by_target: BTreeMap<NetworkId, BTreeSet<PairKey>> = BTreeMap::new();
    for list in lists {
        for i in list.iter().filter(|i| i.label) {
            by_target
                .entry(i.pair.target.clone())
                .or_default()
                .insert(i.pair.clone());
        }
    }
    let mut out = g.clone();
    for (target, pairs) in &by_target {
        out = holdout_graph(&out, target, pairs).context("hiding positive pairs")?;
    }
    Ok(out)
}

fn holdout_lists(main: &Path, extra: &[std::path::PathBuf]) -> Result<(Vec<Instance>, Vec<Vec<Instance>>)> {
    let instances = load_instances(main)?;
    let others = extra.iter().map(|p| load_instances(p)).collect::<Result<Vec<_>>>()?;
    Ok((instances, others))
}

fn train_config(t: &TrainingArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        lambda: t.lambda,
        epochs: t.epochs,
        ..TrainConfig::new(seed)
    }
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let (g, summary, _) = load_graph(&a.graph)?;
    let friendships: Vec<String> = g
        .network_ids()
        .map(|n| format!("{n}:{}", g.network(n).map(|x| x.friendship_count()).unwrap_or(0)))
        .collect();
    let line = format!(
        "ingest: {} friendships={}",
        formats::write_ingest_summary(&summary),
        friendships.join(",")
    );
    emit(a.out.as_deref(), &formats::write_edges(&g), &line)
}

fn match_cmd(a: &MatchArgs) -> Result<()> {
    if a.graph.accounts.is_none() {
        bail!("match needs --accounts");
    }
    let (g, _, accounts) = load_graph(&a.graph)?;
    let bases = match &a.base {
        Some(p) => formats::parse_base_pairs(&path_str(p), &read_file(p)?)?,
        None => formats::declared_pairs(&accounts),
    };
    let cfg = MatchConfig {
        threshold: a.threshold,
        ..MatchConfig::new(a.left.clone(), a.right.clone())
    };
    let out = match_accounts(&g, &accounts, &bases, &cfg)?;
    let tiers: Vec<String> = [MatchMethod::SelfReport, MatchMethod::ExactUsername, MatchMethod::Bigram]
        .iter()
        .map(|m| format!("{m}={}", out.summary.users_matched.get(m).copied().unwrap_or(0)))
        .collect();
    let line = format!(
        "match: linked {} account pairs: {} base pairs, then {}; {} conflicting self-reports",
        out.map.len(),
        out.summary.base_pairs,
        tiers.join(" "),
        out.conflicts.len()
    );
    emit(a.out.as_deref(), &formats::write_identity(&out.map), &line)
}

fn measure(a: &MeasureArgs) -> Result<()> {
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let nets = graph_networks(&g);
    let profiles = ProfileTable::compute(&g, &map, &nets)?;
    let names: Vec<&str> = nets.iter().map(NetworkId::as_str).collect();
    let line = format!(
        "measure: profiled {} users linked across {}",
        profiles.len(),
        names.join(",")
    );
    emit(a.out.as_deref(), &formats::write_profiles(&profiles), &line)
}

fn stats(a: &StatsArgs) -> Result<()> {
    let profiles = formats::parse_profiles(&path_str(&a.profiles), &read_file(&a.profiles)?)?;
    let points = profiles.points();
    let summary = distribution_stats(&points)?;
    let out = StatsOutput {
        summary: &summary,
        independence: independence_test(&points, a.bins).map_err(|e| e.to_string()),
        correlation: correlation(&points).map_err(|e| e.to_string()),
        bins: a.bins,
    };
    let line = format!(
        "stats: {} profiles, mean f_sim={:.6} mean f_even={:.6}",
        summary.count, summary.sim.mean, summary.even.mean
    );
    emit(a.out.as_deref(), &render::stats(&out, a.format), &line)
}

fn sampling_config(s: &SamplingArgs, seed: u64) -> SamplingConfig {
    SamplingConfig {
        positives: s.positives,
        negatives: s.negatives,
        min_negatives_with_common_neighbor: s.min_cn,
        ..SamplingConfig::new(s.task.target.clone(), s.task.source.clone(), seed)
    }
}

fn describe_sample(g: &MultiNetworkGraph, map: &IdentityMap, s: &InstanceSample) -> Result<String> {
    let mut cn = 0;
    for p in &s.negatives {
        cn += usize::from(has_common_neighbor(g, map, p)?);
    }
    Ok(format!(
        "{} positives, {} negatives ({cn} with a common neighbor)",
        s.positives.len(),
        s.negatives.len()
    ))
}

fn sample(a: &SampleArgs) -> Result<()> {
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let cfg = sampling_config(&a.sampling, a.seed.seed);
    let mut exclude = BTreeSet::new();
    for p in &a.exclude {
        exclude.extend(load_instances(p)?.into_iter().map(|i| i.pair));
    }
    let train = sample_instances_excluding(&g, &map, &cfg, &exclude)?;
    let mut line = format!(
        "sample: target={} source={} seed={}: {}",
        cfg.target_network,
        cfg.source_network,
        cfg.seed,
        describe_sample(&g, &map, &train)?
    );
    if let Some(test_path) = &a.test_out {
        exclude.extend(train.pairs().cloned());
        let test = sample_instances_excluding(&g, &map, &cfg.with_seed(test_seed(cfg.seed)), &exclude)?;
        write_file(test_path, &formats::write_instances(&test.instances()))?;
        let _ = write!(line, "; test: {}", describe_sample(&g, &map, &test)?);
    }
    emit(a.out.as_deref(), &formats::write_instances(&train.instances()), &line)
}

fn rank(a: &RankArgs) -> Result<()> {
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let (instances, others) = holdout_lists(&a.instances, &a.holdout)?;
    let Some(first) = instances.first() else {
        bail!("{} holds no instances", a.instances.display());
    };
    let mut lists: Vec<&[Instance]> = vec![&instances];
    lists.extend(others.iter().map(Vec::as_slice));
    let scoring = scoring_graph(&g, &lists)?;
    let measure = a
        .measure
        .clone()
        .unwrap_or_else(|| Measure::new(MeasureKind::Jc, first.pair.source.clone()));
    let ranked = rank_pairs(&instances, &measure, &scoring, &map)?;
    let positives = ranked.positives();
    if positives == 0 {
        bail!("{} holds no positive instances", a.instances.display());
    }
    let ks = if a.k.is_empty() { vec![positives] } else { a.k.clone() };
    let mut parts = Vec::new();
    for &k in &ks {
        let m = metrics_at_k(&ranked, k, positives)?;
        parts.push(format!(
            "@{k} precision={:.6} recall={:.6} f1={:.6}",
            m.precision, m.recall, m.f1
        ));
    }
    let mut out = String::new();
    for (i, e) in ranked.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            i + 1,
            e.pair.u,
            e.pair.v,
            u8::from(e.label),
            e.score
        );
    }
    let line = format!("rank: {measure} over {} instances {}", ranked.len(), parts.join(" "));
    emit(a.out.as_deref(), &out, &line)
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let profiles = load_profiles(&a.profiles, &g, &map)?;
    let (instances, others) = holdout_lists(&a.instances, &a.holdout)?;
    let mut lists: Vec<&[Instance]> = vec![&instances];
    lists.extend(others.iter().map(Vec::as_slice));
    let scoring = scoring_graph(&g, &lists)?;
    let thresholds = CategoryThresholds::from_profiles(&profiles)?;
    let ctx = FeatureContext {
        graph: &scoring,
        map: &map,
        profiles: &profiles,
        thresholds: &thresholds,
    };
    let items = extract_all(&instances, &ctx, a.features)?;
    if let Some(p) = &a.dump {
        write_file(p, &formats::write_feature_dump(&items))?;
    }
    let ds = Dataset::from_features(&items)?;
    let outcome = train(&ds, &train_config(&a.training, a.seed.seed))?;
    let line = format!(
        "train: {} on {} instances, objective={:.6}",
        a.features,
        ds.len(),
        outcome.objective
    );
    emit(
        a.out.as_deref(),
        &formats::write_model(&outcome.model, a.features),
        &line,
    )
}

fn predict(a: &PredictArgs) -> Result<()> {
    let (model, set) = formats::parse_model(&path_str(&a.model), &read_file(&a.model)?)?;
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let profiles = load_profiles(&a.profiles, &g, &map)?;
    let (instances, others) = holdout_lists(&a.instances, &a.holdout)?;
    let mut lists: Vec<&[Instance]> = vec![&instances];
    lists.extend(others.iter().map(Vec::as_slice));
    let scoring = scoring_graph(&g, &lists)?;
    let thresholds = CategoryThresholds::from_profiles(&profiles)?;
    let ctx = FeatureContext {
        graph: &scoring,
        map: &map,
        profiles: &profiles,
        thresholds: &thresholds,
    };
    let mut out = String::new();
    let mut predicted = Vec::with_capacity(instances.len());
    for inst in &instances {
        let (label, margin) = model.predict(&extract(&inst.pair, &ctx, set)?)?;
        predicted.push(label);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{margin}",
            inst.pair.u,
            inst.pair.v,
            u8::from(inst.label),
            u8::from(label)
        );
    }
    let truth: Vec<bool> = instances.iter().map(|i| i.label).collect();
    let prf = evaluate_predictions(&predicted, &truth);
    let line = format!(
        "predict: {set} on {} instances precision={:.6} recall={:.6} f1={:.6}",
        instances.len(),
        prf.precision,
        prf.recall,
        prf.f1
    );
    emit(a.out.as_deref(), &out, &line)
}

/// Runs the supervised protocol with up to `jobs` runs in flight, returning
/// outcomes in run-index order.
fn parallel_runs(
    g: &MultiNetworkGraph,
    map: &IdentityMap,
    profiles: &ProfileTable,
    cfg: &SupervisedConfig,
    jobs: usize,
) -> Result<Vec<RunOutcome>> {
    if cfg.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let jobs = jobs.clamp(1, cfg.runs);
    let mut slots: Vec<Option<crossfriend_core::Result<RunOutcome>>> = (0..cfg.runs).map(|_| None).collect();
    std::thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|w| {
                s.spawn(move || {
                    (w..cfg.runs)
                        .step_by(jobs)
                        .map(|r| (r, supervised_run(g, map, profiles, cfg, r)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for w in workers {
            for (r, res) in w.join().expect("run worker panicked") {
                slots[r] = Some(res);
            }
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every run is scheduled"))
        .collect::<crossfriend_core::Result<Vec<_>>>()?)
}

fn eval(a: &EvalArgs) -> Result<()> {
    let (g, _, _) = load_graph(&a.graph)?;
    let map = load_identity(&a.identity.identity)?;
    let sampling = sampling_config(&a.sampling, a.seed.seed);
    let (report, line) = match a.mode {
        EvalMode::Unsupervised => {
            let mut cfg = UnsupervisedConfig::new(sampling);
            cfg.runs = a.runs;
            if !a.measures.is_empty() {
                cfg.measures = a.measures.clone();
            }
            if !a.k_grid.is_empty() {
                cfg.k_grid = a.k_grid.clone();
            }
            let report = run_unsupervised(&g, &map, &cfg)?;
            let best = report
                .rows
                .iter()
                .filter(|r| r.name != RANDOM_BASELINE)
                .max_by(|x, y| x.average.f1.total_cmp(&y.average.f1))
                .map(|r| format!("best {} F1@P={:.6}", r.name, r.average.f1))
                .unwrap_or_default();
            (report, format!("eval unsupervised: {} runs, {best}", cfg.runs))
        }
        EvalMode::Supervised | EvalMode::Subset => {
            let profiles = load_profiles(&a.profiles, &g, &map)?;
            let mut cfg = SupervisedConfig::new(sampling);
            cfg.runs = a.runs;
            cfg.train = train_config(&a.training, a.seed.seed);
            if !a.configs.is_empty() {
                cfg.feature_sets = a.configs.clone();
            }
            let outcomes = parallel_runs(&g, &map, &profiles, &cfg, a.jobs)?;
            let report = if a.mode == EvalMode::Subset {
                subset_analysis(&cfg, &profiles, &map, &outcomes)?
            } else {
                assemble_supervised(&cfg, &profiles, &map, &outcomes)?
            };
            let rows: Vec<String> = report
                .rows
                .iter()
                .map(|r| format!("{}={:.6}", r.name, r.average.f1))
                .collect();
            (
                report,
                format!(
                    "eval {}: {} runs, F1 {}",
                    report_method(a.mode),
                    cfg.runs,
                    rows.join(" ")
                ),
            )
        }
    };
    emit(a.out.as_deref(), &render::report(&report, a.format), &line)
}

fn report_method(m: EvalMode) -> &'static str {
    match m {
        EvalMode::Unsupervised => "unsupervised",
        EvalMode::Supervised => "supervised",
        EvalMode::Subset => "subset",
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let [sparse, dense] = a.networks.as_slice() else {
        bail!("--networks needs exactly two names");
    };
    let cfg = SynthConfig {
        users: a.users,
        mean_degree: a.degree,
        target_similarity: a.similarity,
        target_evenness_skew: a.skew,
        cross_link_correlation: a.cross_link,
        seed: a.seed.seed,
        networks: [sparse.clone(), dense.clone()],
    };
    let out = generate_synthetic(&cfg)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let dir = a.out_dir.as_path();
    write_file(&dir.join("edges.tsv"), &formats::write_edges(&out.graph))?;
    write_file(&dir.join("accounts.tsv"), &formats::write_accounts(&out.accounts))?;
    write_file(&dir.join("identity.tsv"), &formats::write_identity(&out.map))?;
    let mut truth = format!(
        "seed={}\nsimilarity={}\nskew={}\ncross_link={}\ndegree={}\nnetworks={sparse},{dense}\n",
        cfg.seed, cfg.target_similarity, cfg.target_evenness_skew, cfg.cross_link_correlation, cfg.mean_degree
    );
    for (k, v) in out.truth.to_lines() {
        let _ = writeln!(truth, "{k}={v}");
    }
    write_file(&dir.join("truth.txt"), &truth)?;
    println!(
        "synth: {} users, friendships {sparse}={} {dense}={}, written to {}",
        cfg.users,
        out.truth.friendships[0],
        out.truth.friendships[1],
        dir.display()
    );
    Ok(())
}
