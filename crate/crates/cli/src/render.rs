//! Report output: a sectioned key=value document or comma-separated tables.

use std::fmt::Write as _;

use clap::ValueEnum;
use crossfriend_core::experiment::stats::{ChiSquared, DistributionSummary};
use crossfriend_core::experiment::EvalReport;
use crossfriend_core::prediction::Prf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Kv,
    Csv,
}

fn prf_fields(p: &Prf) -> String {
    format!("precision={:.6} recall={:.6} f1={:.6}", p.precision, p.recall, p.f1)
}

pub fn task_label(report: &EvalReport) -> String {
    format!("target={},source={}", report.target, report.source)
}

pub fn report_kv(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[report]");
    let _ = writeln!(out, "task={}", task_label(r));
    let _ = writeln!(out, "method={}", r.method);
    let _ = writeln!(out, "fingerprint={}", r.fingerprint.digest());
    let _ = writeln!(out, "\n[config]");
    for (k, v) in &r.fingerprint.entries {
        let _ = writeln!(out, "{k}={v}");
    }
    for row in &r.rows {
        let _ = writeln!(out, "\n[row {}]", row.name);
        for (i, p) in row.runs.iter().enumerate() {
            let _ = writeln!(out, "run{}={}", i + 1, prf_fields(p));
        }
        let _ = writeln!(out, "average={}", prf_fields(&row.average));
        let flags = if row.flags.is_empty() {
            "-".to_string()
        } else {
            row.flags.join(",")
        };
        let _ = writeln!(out, "flags={flags}");
    }
    for c in &r.curves {
        let _ = writeln!(out, "\n[curve {}]", c.name);
        for p in &c.points {
            let _ = writeln!(
                out,
                "k{}=precision={:.6} recall={:.6} f1={:.6}",
                p.k, p.precision, p.recall, p.f1
            );
        }
    }
    if !r.notes.is_empty() {
        let _ = writeln!(out, "\n[notes]");
        for (k, v) in &r.notes {
            let _ = writeln!(out, "{k}={v}");
        }
    }
    out
}

pub const CSV_HEADER: &str = "task,config,precision,recall,f1,flags";

/// Averaged rows, then the K curves as a second table when present.
pub fn report_csv(r: &EvalReport) -> String {
    let task = task_label(r).replace(',', ";");
    let mut out = format!("{CSV_HEADER}\n");
    for row in &r.rows {
        let a = &row.average;
        let _ = writeln!(
            out,
            "{task},{},{:.6},{:.6},{:.6},{}",
            row.name,
            a.precision,
            a.recall,
            a.f1,
            row.flags.join(";")
        );
    }
    if !r.curves.is_empty() {
        out.push_str("\ncurve,k,precision,recall,f1\n");
        for c in &r.curves {
            for p in &c.points {
                let _ = writeln!(out, "{},{},{:.6},{:.6},{:.6}", c.name, p.k, p.precision, p.recall, p.f1);
            }
        }
    }
    out
}

pub fn report(r: &EvalReport, format: Format) -> String {
    match format {
        Format::Kv => report_kv(r),
        Format::Csv => report_csv(r),
    }
}

/// Distribution summary, independence test and correlation. The last two
/// may be undefined for degenerate profile sets, reported as text.
pub struct StatsOutput<'a> {
    pub summary: &'a DistributionSummary,
    pub independence: Result<ChiSquared, String>,
    pub correlation: Result<f64, String>,
    pub bins: usize,
}

fn stats_pairs(s: &StatsOutput<'_>) -> Vec<(String, String)> {
    let d = s.summary;
    let mut v = vec![("count".to_string(), d.count.to_string())];
    for (axis, a) in [("f_sim", &d.sim), ("f_even", &d.even)] {
        v.push((format!("{axis}.mean"), format!("{:.6}", a.mean)));
        v.push((format!("{axis}.q1"), format!("{:.6}", a.q1)));
        v.push((format!("{axis}.median"), format!("{:.6}", a.median)));
        v.push((format!("{axis}.q3"), format!("{:.6}", a.q3)));
        let h: Vec<String> = a.histogram.iter().map(|c| c.to_string()).collect();
        v.push((format!("{axis}.histogram"), h.join(" ")));
    }
    for (name, sl) in [
        ("top_even_decile", &d.top_even_decile),
        ("bottom_even_decile", &d.bottom_even_decile),
    ] {
        v.push((format!("{name}.count"), sl.count.to_string()));
        v.push((format!("{name}.f_even_mean"), format!("{:.6}", sl.even_mean)));
        v.push((format!("{name}.f_sim_mean"), format!("{:.6}", sl.sim_mean)));
    }
    v.push(("independence.bins".to_string(), s.bins.to_string()));
    match &s.independence {
        Ok(c) => {
            v.push(("independence.chi2".to_string(), format!("{:.6}", c.statistic)));
            v.push(("independence.dof".to_string(), c.dof.to_string()));
            v.push(("independence.p_value".to_string(), format!("{:e}", c.p_value)));
        }
        Err(e) => v.push(("independence.error".to_string(), e.clone())),
    }
    match &s.correlation {
        Ok(r) => v.push(("correlation".to_string(), format!("{r:.6}"))),
        Err(e) => v.push(("correlation.error".to_string(), e.clone())),
    }
    v
}

pub fn stats(s: &StatsOutput<'_>, format: Format) -> String {
    let pairs = stats_pairs(s);
    let mut out = String::new();
    match format {
        Format::Kv => {
            for (k, v) in pairs {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        Format::Csv => {
            out.push_str("key,value\n");
            for (k, v) in pairs {
                let _ = writeln!(out, "{k},{}", v.replace(',', ";"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossfriend_core::experiment::{Fingerprint, MethodRow};

    fn sample() -> EvalReport {
        let mut fp = Fingerprint::default();
        fp.push("seed", 3);
        let mut r = EvalReport::new("T".into(), "I".into(), "supervised", fp);
        let p = Prf {
            precision: 0.5,
            recall: 0.25,
            f1: 1.0 / 3.0,
        };
        r.rows.push(MethodRow::from_runs("NBO", vec![p, p]));
        r
    }

    #[test]
    fn csv_rows_have_six_columns() {
        let csv = report_csv(&sample());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "target=T;source=I,NBO,0.500000,0.250000,0.333333,");
        assert!(lines.iter().all(|l| l.split(',').count() == 6));
    }

    #[test]
    fn kv_lists_runs_and_average() {
        let kv = report_kv(&sample());
        assert!(kv.contains("[row NBO]\nrun1=precision=0.500000"));
        assert!(kv.contains("run2="));
        assert!(kv.contains("average=precision=0.500000 recall=0.250000 f1=0.333333"));
        assert!(kv.contains("task=target=T,source=I"));
    }
}
