use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::graph::NetworkId;
use crate::prediction::{MetricsAtK, Prf};

/// One method's per-run results and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub name: String,
    pub runs: Vec<Prf>,
    pub average: Prf,
    pub flags: Vec<String>,
}

impl MethodRow {
    pub const PRECISION_NOT_ABOVE_RECALL: &'static str = "precision_not_above_recall";
    pub const EMPTY_SUBSET: &'static str = "empty_subset";

    pub fn from_runs(name: impl Into<String>, runs: Vec<Prf>) -> Self {
        let n = runs.len().max(1) as f64;
        let mut avg = runs.iter().fold(Prf::default(), |a, r| Prf {
            precision: a.precision + r.precision,
            recall: a.recall + r.recall,
            f1: a.f1 + r.f1,
        });
        avg.precision /= n;
        avg.recall /= n;
        avg.f1 /= n;
        MethodRow {
            name: name.into(),
            runs,
            average: avg,
            flags: Vec::new(),
        }
    }

    pub fn precision_exceeds_recall(&self) -> bool {
        self.average.precision_exceeds_recall()
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<MetricsAtK>,
}

/// Everything needed to reproduce a report, plus a digest of it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Fingerprint {
    pub entries: Vec<(String, String)>,
}

impl Fingerprint {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// FNV-1a over `key=value\n` lines, as 16 hex digits.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in &self.entries {
            for b in k.bytes().chain(*b"=").chain(v.bytes()).chain(*b"\n") {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        let mut s = String::with_capacity(16);
        let _ = write!(s, "{h:016x}");
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub target: NetworkId,
    pub source: NetworkId,
    /// `unsupervised`, `supervised` or `subset`.
    pub method: String,
    pub rows: Vec<MethodRow>,
    pub curves: Vec<Curve>,
    /// Extra scalar results such as instance counts.
    pub notes: Vec<(String, String)>,
    pub fingerprint: Fingerprint,
}

impl EvalReport {
    pub fn new(target: NetworkId, source: NetworkId, method: &str, fingerprint: Fingerprint) -> Self {
        EvalReport {
            target,
            source,
            method: method.to_string(),
            rows: Vec::new(),
            curves: Vec::new(),
            notes: Vec::new(),
            fingerprint,
        }
    }

    pub fn row(&self, name: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}
