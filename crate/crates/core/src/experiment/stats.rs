//! Summary statistics over `(f_sim, f_even)` profile points.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::chi_squared_sf;

pub const HISTOGRAM_BINS: usize = 20;
pub const DEFAULT_INDEPENDENCE_BINS: usize = 4;

/// Quantile with linear interpolation between order statistics. `sorted`
/// must be non-empty and ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    match sorted.get(lo + 1) {
        Some(hi) => sorted[lo] + (h - lo as f64) * (hi - sorted[lo]),
        None => sorted[lo],
    }
}

/// Fixed-width counts over [0, 1]; values outside are clamped to the end
/// bins.
pub fn histogram(values: &[f64]) -> [usize; HISTOGRAM_BINS] {
    let mut bins = [0; HISTOGRAM_BINS];
    for &x in values {
        let b = libm::floor(x * HISTOGRAM_BINS as f64);
        let b = if b.is_nan() || b < 0.0 {
            0
        } else {
            (b as usize).min(HISTOGRAM_BINS - 1)
        };
        bins[b] += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub histogram: [usize; HISTOGRAM_BINS],
}

impl AxisSummary {
    fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        AxisSummary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            histogram: histogram(values),
        }
    }
}

/// Users at one end of the evenness ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecileSlice {
    pub count: usize,
    pub even_mean: f64,
    pub sim_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub count: usize,
    pub sim: AxisSummary,
    pub even: AxisSummary,
    pub top_even_decile: DecileSlice,
    pub bottom_even_decile: DecileSlice,
}

pub fn distribution_stats(points: &[(f64, f64)]) -> Result<DistributionSummary> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no profiles to summarize".into()));
    }
    let sims: Vec<f64> = points.iter().map(|p| p.0).collect();
    let evens: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut by_even: Vec<(f64, f64)> = points.to_vec();
    by_even.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let slice_len = points.len().div_ceil(10);
    let slice = |s: &[(f64, f64)]| DecileSlice {
        count: s.len(),
        even_mean: s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64,
        sim_mean: s.iter().map(|p| p.0).sum::<f64>() / s.len() as f64,
    };
    Ok(DistributionSummary {
        count: points.len(),
        sim: AxisSummary::of(&sims),
        even: AxisSummary::of(&evens),
        bottom_even_decile: slice(&by_even[..slice_len]),
        top_even_decile: slice(&by_even[by_even.len() - slice_len..]),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquared {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observed counts, rows by f_sim bin, columns by f_even bin.
    pub table: Vec<Vec<usize>>,
}

/// Pearson statistic and degrees of freedom of a contingency table.
pub fn chi_squared_statistic(table: &[Vec<usize>]) -> Result<(f64, usize)> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument(format!(
            "contingency table must be rectangular and at least 2x2, got {rows} rows"
        )));
    }
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateTable(format!("row {i} is empty")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateTable(format!("column {j} is empty")));
    }
    let n: usize = row_sums.iter().sum();
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / n as f64;
            let d = obs as f64 - expected;
            stat += d * d / expected;
        }
    }
    Ok((stat, (rows - 1) * (cols - 1)))
}

fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let cuts: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
    values
        .iter()
        .map(|x| cuts.iter().filter(|c| c.total_cmp(x).is_le()).count())
        .collect()
}

/// Chi-squared test of independence between f_sim and f_even, each cut
/// into `bins` quantile bins.
pub fn independence_test(points: &[(f64, f64)], bins: usize) -> Result<ChiSquared> {
    if bins < 2 {
        return Err(Error::InvalidArgument("independence test needs at least 2 bins".into()));
    }
    if points.len() < bins {
        return Err(Error::DegenerateTable(format!(
            "{} profiles cannot fill {bins} bins",
            points.len()
        )));
    }
    let sims: Vec<f64> = points.iter().map(|p| p.0).collect();
    let evens: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut table = vec![vec![0usize; bins]; bins];
    for (r, c) in quantile_bins(&sims, bins).into_iter().zip(quantile_bins(&evens, bins)) {
        table[r][c] += 1;
    }
    let (statistic, dof) = chi_squared_statistic(&table)?;
    Ok(ChiSquared {
        statistic,
        dof,
        p_value: chi_squared_sf(statistic, dof),
        table,
    })
}

/// Pearson correlation of f_sim and f_even.
pub fn correlation(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 profiles".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("f_sim"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("f_even"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
