//! Tab-separated file formats for every pipeline stage.
//!
//! All writers sort their output so that identical inputs give identical
//! bytes. Lines starting with `#` are comments for every reader.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crossfriend_core::features::{FeatureSet, PairKey};
use crossfriend_core::graph::{
    EdgeRecord, GraphBuilder, IngestConfig, IngestSummary, MultiNetworkGraph, NetworkId, UserRef,
};
use crossfriend_core::identity::{AccountRecord, IdentityMap, MatchEdge, MatchMethod};
use crossfriend_core::measures::{MaintenanceProfile, ProfileTable};
use crossfriend_core::prediction::{Instance, LabeledFeatures, LearningRate, LinearModel, TrainConfig};

/// A malformed line in a named file.
#[derive(Debug, thiserror::Error)]
#[error("{path}:{line}: {reason}")]
pub struct FormatError {
    pub path: String,
    pub line: usize,
    pub reason: String,
}

type Parsed<T> = Result<T, FormatError>;

pub fn read_file(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
}

/// Non-comment, non-blank lines with 1-based line numbers.
fn records<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

fn fail<T>(path: &str, line: usize, reason: impl Into<String>) -> Parsed<T> {
    Err(FormatError {
        path: path.to_string(),
        line,
        reason: reason.into(),
    })
}

fn parse_num<T: std::str::FromStr>(path: &str, line: usize, what: &str, s: &str) -> Parsed<T> {
    match s.trim().parse() {
        Ok(v) => Ok(v),
        Err(_) => fail(path, line, format!("bad {what} `{s}`")),
    }
}

/// `network:local_id`, split at the first colon.
pub fn parse_user_ref(s: &str) -> Option<UserRef> {
    let (n, id) = s.trim().split_once(':')?;
    if n.is_empty() || id.is_empty() {
        return None;
    }
    Some(UserRef::new(n, id))
}

// edges

pub fn parse_edges(path: &str, text: &str) -> Parsed<Vec<EdgeRecord>> {
    records(text)
        .map(|(line, f)| {
            if f.len() != 3 {
                return fail(path, line, format!("expected 3 fields, found {}", f.len()));
            }
            Ok(EdgeRecord {
                line,
                network: f[0].to_string(),
                follower: f[1].to_string(),
                followee: f[2].to_string(),
            })
        })
        .collect()
}

/// Follow edges of every network, one per line, sorted.
pub fn write_edges(g: &MultiNetworkGraph) -> String {
    let mut out = String::new();
    for n in g.network_ids() {
        let net = g.network(n).expect("listed network");
        for (a, b) in net.follow_edges() {
            let _ = writeln!(out, "{n}\t{a}\t{b}");
        }
    }
    out
}

pub fn write_ingest_summary(s: &IngestSummary) -> String {
    let filtered: Vec<String> = s.users_filtered.iter().map(|(n, c)| format!("{n}:{c}")).collect();
    format!(
        "records_read={} duplicates={} users_filtered={} edges_filtered={}",
        s.records_read,
        s.duplicates,
        if filtered.is_empty() {
            "-".to_string()
        } else {
            filtered.join(",")
        },
        s.edges_filtered
    )
}

/// Builds a graph from an edge file plus any accounts that should exist even
/// without edges. Networks default to those named in the inputs.
pub fn build_graph(
    edges_path: &str,
    edges: Vec<EdgeRecord>,
    accounts: &[AccountRecord],
    networks: Option<&[NetworkId]>,
    max_followers: usize,
) -> anyhow::Result<(MultiNetworkGraph, IngestSummary)> {
    let nets: Vec<NetworkId> = match networks {
        Some(n) => n.to_vec(),
        None => {
            let mut seen: BTreeSet<NetworkId> = edges.iter().map(|e| NetworkId::new(e.network.trim())).collect();
            seen.extend(accounts.iter().map(|a| a.account.network.clone()));
            seen.into_iter().collect()
        }
    };
    let mut b = GraphBuilder::new(IngestConfig::new(nets).with_max_followers(max_followers));
    for e in edges {
        b.push(e).map_err(|e| anyhow::anyhow!("{edges_path}: {e}"))?;
    }
    for a in accounts {
        b.add_user(&a.account)?;
    }
    Ok(b.build())
}

// accounts

pub fn parse_accounts(path: &str, text: &str) -> Parsed<Vec<AccountRecord>> {
    records(text)
        .map(|(line, f)| {
            if f.len() != 3 && f.len() != 4 {
                return fail(path, line, format!("expected 3 or 4 fields, found {}", f.len()));
            }
            let declared = match f.get(3).map(|s| s.trim()).filter(|s| !s.is_empty()) {
                None => None,
                Some(s) => match parse_user_ref(s) {
                    Some(u) => Some(u),
                    None => return fail(path, line, format!("bad declared account `{s}`")),
                },
            };
            Ok(AccountRecord {
                account: UserRef::new(f[0].trim(), f[1].trim()),
                username: f[2].to_string(),
                declared_counterpart: declared,
            })
        })
        .collect()
}

pub fn write_accounts(accounts: &[AccountRecord]) -> String {
    let mut sorted: Vec<&AccountRecord> = accounts.iter().collect();
    sorted.sort_by(|a, b| a.account.cmp(&b.account));
    let mut out = String::new();
    for a in sorted {
        let _ = write!(out, "{}\t{}\t{}", a.account.network, a.account.local_id, a.username);
        if let Some(d) = &a.declared_counterpart {
            let _ = write!(out, "\t{d}");
        }
        out.push('\n');
    }
    out
}

/// Base pairs: either an explicit two-column file of accounts, or every
/// declared counterpart in the account file.
pub fn parse_base_pairs(path: &str, text: &str) -> Parsed<Vec<(UserRef, UserRef)>> {
    records(text)
        .map(|(line, f)| {
            match (
                f.len(),
                f.first().and_then(|s| parse_user_ref(s)),
                f.get(1).and_then(|s| parse_user_ref(s)),
            ) {
                (2, Some(a), Some(b)) => Ok((a, b)),
                _ => fail(path, line, "expected `network:id<TAB>network:id`"),
            }
        })
        .collect()
}

pub fn declared_pairs(accounts: &[AccountRecord]) -> Vec<(UserRef, UserRef)> {
    accounts
        .iter()
        .filter_map(|a| a.declared_counterpart.as_ref().map(|d| (a.account.clone(), d.clone())))
        .collect()
}

// identity map

pub fn parse_identity(path: &str, text: &str, threshold: f64) -> Parsed<IdentityMap> {
    let mut map = IdentityMap::new(threshold);
    for (line, f) in records(text) {
        if f.len() != 4 {
            return fail(path, line, format!("expected 4 fields, found {}", f.len()));
        }
        let (Some(left), Some(right)) = (parse_user_ref(f[0]), parse_user_ref(f[1])) else {
            return fail(path, line, "accounts must look like `network:id`");
        };
        let Some(method) = MatchMethod::parse(f[2].trim()) else {
            return fail(path, line, format!("unknown method `{}`", f[2]));
        };
        let score = parse_num(path, line, "score", f[3])?;
        if let Err(e) = map.insert(MatchEdge {
            left,
            right,
            method,
            score,
        }) {
            return fail(path, line, e.to_string());
        }
    }
    Ok(map)
}

pub fn write_identity(map: &IdentityMap) -> String {
    let mut edges: Vec<&MatchEdge> = map.edges().iter().collect();
    edges.sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    let mut out = String::new();
    for e in edges {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.4}", e.left, e.right, e.method, e.score);
    }
    out
}

// profiles

pub fn write_profiles(profiles: &ProfileTable) -> String {
    let mut out = String::new();
    for (person, p) in profiles.iter() {
        let f_in: Vec<String> = p.f_in.iter().map(|(n, v)| format!("{n}={v:.6}")).collect();
        let _ = writeln!(
            out,
            "{person}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\tf_in:{}",
            p.f_sim,
            p.f_sim_upper,
            p.f_equal,
            p.f_even,
            f_in.join(";")
        );
    }
    out
}

/// Reads a profile file. Friend totals are not stored, so they read as 0.
pub fn parse_profiles(path: &str, text: &str) -> Parsed<ProfileTable> {
    let mut table = ProfileTable::new();
    for (line, f) in records(text) {
        if f.len() != 6 {
            return fail(path, line, format!("expected 6 fields, found {}", f.len()));
        }
        let Some(person) = parse_user_ref(f[0]) else {
            return fail(path, line, format!("bad user key `{}`", f[0]));
        };
        let Some(list) = f[5].trim().strip_prefix("f_in:") else {
            return fail(path, line, "last field must start with `f_in:`");
        };
        let mut f_in = BTreeMap::new();
        for item in list.split(';').filter(|s| !s.is_empty()) {
            let Some((n, v)) = item.split_once('=') else {
                return fail(path, line, format!("bad f_in entry `{item}`"));
            };
            f_in.insert(NetworkId::new(n), parse_num(path, line, "f_in", v)?);
        }
        let f_even: f64 = parse_num(path, line, "f_even", f[4])?;
        table.insert(
            person,
            MaintenanceProfile {
                f_sim: parse_num(path, line, "f_sim", f[1])?,
                f_sim_upper: parse_num(path, line, "f_sim_upper", f[2])?,
                f_equal: parse_num(path, line, "f_equal", f[3])?,
                f_in,
                f_even,
                total_unique_friends: 0,
                evenness_out_of_range: !(0.0..=1.0).contains(&f_even),
            },
        );
    }
    Ok(table)
}

// instances

pub fn write_instances(instances: &[Instance]) -> String {
    let mut out = String::new();
    for i in instances {
        let p = &i.pair;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.target,
            p.source,
            p.u,
            p.v,
            u8::from(i.label)
        );
    }
    out
}

pub fn parse_instances(path: &str, text: &str) -> Parsed<Vec<Instance>> {
    records(text)
        .map(|(line, f)| {
            if f.len() != 5 {
                return fail(path, line, format!("expected 5 fields, found {}", f.len()));
            }
            let label = match f[4].trim() {
                "1" => true,
                "0" => false,
                other => return fail(path, line, format!("label must be 0 or 1, found `{other}`")),
            };
            match PairKey::new(f[2].trim(), f[3].trim(), f[0].trim().into(), f[1].trim().into()) {
                Ok(pair) => Ok(Instance::new(pair, label)),
                Err(e) => fail(path, line, e.to_string()),
            }
        })
        .collect()
}

// features and models

pub fn write_feature_dump(items: &[LabeledFeatures]) -> String {
    let mut out = String::new();
    if let Some(first) = items.first() {
        out.push_str(&first.features.names().join("\t"));
        out.push('\n');
    }
    for it in items {
        let _ = write!(out, "{}\t{}\t{}", it.pair.u, it.pair.v, u8::from(it.label));
        for v in it.features.values() {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_model(model: &LinearModel, set: FeatureSet) -> String {
    let mut out = format!("# training_config {}\n# feature_set {set}\n", model.config);
    for (n, w) in model.names.iter().zip(&model.weights) {
        let _ = writeln!(out, "{n}\t{w}");
    }
    let _ = writeln!(out, "__bias__\t{}", model.bias);
    out
}

pub fn parse_model(path: &str, text: &str) -> Parsed<(LinearModel, FeatureSet)> {
    let mut config = None;
    let mut set = None;
    let mut names = Vec::new();
    let mut weights = Vec::new();
    let mut bias = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(rest) = raw.strip_prefix("# training_config ") {
            config = Some(parse_train_config(path, line, rest)?);
        } else if let Some(rest) = raw.strip_prefix("# feature_set ") {
            match rest.trim().parse::<FeatureSet>() {
                Ok(s) => set = Some(s),
                Err(e) => return fail(path, line, e.to_string()),
            }
        } else if raw.starts_with('#') || raw.trim().is_empty() {
            continue;
        } else {
            let Some((name, value)) = raw.split_once('\t') else {
                return fail(path, line, "expected `name<TAB>weight`");
            };
            if bias.is_some() {
                return fail(path, line, "`__bias__` must be the last line");
            }
            let value: f64 = parse_num(path, line, "weight", value)?;
            if name == "__bias__" {
                bias = Some(value);
            } else {
                names.push(name.to_string());
                weights.push(value);
            }
        }
    }
    let end = text.lines().count();
    let (Some(config), Some(set), Some(bias)) = (config, set, bias) else {
        return fail(
            path,
            end,
            "model needs a training_config header, a feature_set header and a `__bias__` line",
        );
    };
    if set.feature_names() != names {
        return fail(
            path,
            end,
            format!("weights do not list the {set} features in canonical order"),
        );
    }
    match LinearModel::new(names, weights, bias, config) {
        Ok(m) => Ok((m, set)),
        Err(e) => fail(path, end, e.to_string()),
    }
}

fn parse_train_config(path: &str, line: usize, s: &str) -> Parsed<TrainConfig> {
    let mut cfg = TrainConfig::new(0);
    for tok in s.split_whitespace() {
        let Some((k, v)) = tok.split_once('=') else {
            return fail(path, line, format!("bad config token `{tok}`"));
        };
        match k {
            "lambda" => cfg.lambda = parse_num(path, line, k, v)?,
            "epochs" => cfg.epochs = parse_num(path, line, k, v)?,
            "seed" => cfg.seed = parse_num(path, line, k, v)?,
            "learning_rate" => match v.parse::<LearningRate>() {
                Ok(r) => cfg.learning_rate = r,
                Err(e) => return fail(path, line, e.to_string()),
            },
            _ => return fail(path, line, format!("unknown config key `{k}`")),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip() {
        let text = "I:i1\tT:t1\tself_report\t1.0000\nT:t2\tI:i2\tbigram\t0.8660\n";
        let map = parse_identity("x", text, 0.63).unwrap();
        assert_eq!(map.len(), 2);
        let again = write_identity(&map);
        assert_eq!(parse_identity("x", &again, 0.63).unwrap().len(), 2);
        assert!(again.contains("T:t2\tI:i2\tbigram\t0.8660"));
    }

    #[test]
    fn profile_round_trip() {
        let text = "T:a\t0.200000\t0.500000\t0.600000\t0.600000\tf_in:I=0.800000;T=0.400000\n";
        let t = parse_profiles("p", text).unwrap();
        assert_eq!(write_profiles(&t), text);
    }

    #[test]
    fn instances_reject_bad_labels() {
        let err = parse_instances("i", "T\tI\ta\tb\t2\n").unwrap_err();
        assert_eq!(err.line, 1);
        let ok = parse_instances("i", "# c\nT\tI\tb\ta\t1\n").unwrap();
        assert_eq!(ok[0].pair.u, "a");
        assert_eq!(write_instances(&ok), "T\tI\ta\tb\t1\n");
    }

    #[test]
    fn accounts_with_and_without_declarations() {
        let a = parse_accounts("a", "T\tt1\tanna\tI:i1\nI\ti1\tannas\n").unwrap();
        assert_eq!(declared_pairs(&a).len(), 1);
        assert_eq!(write_accounts(&a), "I\ti1\tannas\nT\tt1\tanna\tI:i1\n");
        assert!(parse_accounts("a", "T\tt1\n").is_err());
    }

    #[test]
    fn model_round_trip() {
        let cfg = TrainConfig::new(9);
        let names: Vec<String> = FeatureSet::Nbcl.feature_names().iter().map(|s| s.to_string()).collect();
        let weights: Vec<f64> = (0..names.len()).map(|i| i as f64 * 0.1 - 0.25).collect();
        let m = LinearModel::new(names, weights, -1.5, cfg).unwrap();
        let text = write_model(&m, FeatureSet::Nbcl);
        let (back, set) = parse_model("m", &text).unwrap();
        assert_eq!(set, FeatureSet::Nbcl);
        assert_eq!(back, m);
    }
}
