//! Linear max-margin classifier trained by stochastic subgradient descent on
//! the L2-regularized mean hinge loss.
//!
//! Features are z-scored with statistics fit on the training rows; the stored
//! model folds the scaling back so it applies to raw feature values.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, PairKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LearningRate {
    /// `eta_t = 1 / (lambda * t)`
    #[default]
    InverseScaling,
}

impl LearningRate {
    pub fn as_str(self) -> &'static str {
        match self {
            LearningRate::InverseScaling => "inverse_scaling",
        }
    }
}

impl FromStr for LearningRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inverse_scaling" => Ok(LearningRate::InverseScaling),
            other => Err(Error::InvalidArgument(format!("unknown learning rate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: LearningRate,
    pub seed: u64,
}

impl TrainConfig {
    pub const DEFAULT_LAMBDA: f64 = 1.0;
    pub const DEFAULT_EPOCHS: usize = 50;

    pub fn new(seed: u64) -> Self {
        TrainConfig {
            lambda: Self::DEFAULT_LAMBDA,
            epochs: Self::DEFAULT_EPOCHS,
            learning_rate: LearningRate::InverseScaling,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lambda={} epochs={} learning_rate={} seed={}",
            self.lambda,
            self.epochs,
            self.learning_rate.as_str(),
            self.seed
        )
    }
}

/// One extracted instance ready for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub pair: PairKey,
    pub features: FeatureVector,
    pub label: bool,
}

/// Rows of raw feature values with labels and instance ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub ids: Vec<String>,
}

impl Dataset {
    /// Ids default to row indices.
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let ids = (0..rows.len()).map(|i| format!("#{i}")).collect();
        let ds = Dataset {
            names,
            rows,
            labels,
            ids,
        };
        ds.check_dimensions()?;
        Ok(ds)
    }

    pub fn from_features(items: &[LabeledFeatures]) -> Result<Self> {
        let Some(first) = items.first() else {
            return Ok(Dataset::default());
        };
        let set = first.features.set;
        let mut ds = Dataset {
            names: set.feature_names().into_iter().map(String::from).collect(),
            ..Dataset::default()
        };
        for it in items {
            if it.features.set != set {
                return Err(Error::InvalidArgument(format!(
                    "mixed feature sets {} and {} in one dataset",
                    set, it.features.set
                )));
            }
            ds.rows.push(it.features.values());
            ds.labels.push(it.label);
            ds.ids.push(it.pair.to_string());
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn check_dimensions(&self) -> Result<()> {
        for row in &self.rows {
            if row.len() != self.names.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.names.len(),
                    actual: row.len(),
                });
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    instance: self.ids.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
                    feature: self.names[j].clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

impl LinearModel {
    pub fn new(names: Vec<String>, weights: Vec<f64>, bias: f64, config: TrainConfig) -> Result<Self> {
        if names.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                actual: weights.len(),
            });
        }
        Ok(LinearModel {
            names,
            weights,
            bias,
            config,
        })
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.weights[i])
    }

    pub fn margin(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: values.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    /// Label is positive only for a strictly positive margin.
    pub fn predict_values(&self, values: &[f64]) -> Result<(bool, f64)> {
        let m = self.margin(values)?;
        Ok((m > 0.0, m))
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<(bool, f64)> {
        let names = features.names();
        if names.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.names.len(),
                actual: names.len(),
            });
        }
        if names.iter().zip(&self.names).any(|(a, b)| *a != b.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "feature set {} does not match the model's features",
                features.set
            )));
        }
        self.predict_values(&features.values())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Regularized objective on the standardized training rows.
    pub objective: f64,
}

fn cmp_row(a: &(&[f64], bool), b: &(&[f64], bool)) -> Ordering {
    a.1.cmp(&b.1).then_with(|| {
        a.0.iter()
            .zip(b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct Unique {
    x: Vec<f64>,
    y: f64,
    count: usize,
}

/// Collapses identical rows into weighted rows in a canonical order, so the
/// result does not depend on input order or on uniform duplication.
fn unique_rows(ds: &Dataset) -> Vec<Unique> {
    let mut keyed: Vec<(&[f64], bool)> = ds
        .rows
        .iter()
        .map(Vec::as_slice)
        .zip(ds.labels.iter().copied())
        .collect();
    keyed.sort_by(cmp_row);
    let mut out: Vec<Unique> = Vec::new();
    let mut prev: Option<(&[f64], bool)> = None;
    for row in keyed {
        match (&prev, out.last_mut()) {
            (Some(p), Some(last)) if cmp_row(p, &row).is_eq() => last.count += 1,
            _ => {
                out.push(Unique {
                    x: row.0.to_vec(),
                    y: if row.1 { 1.0 } else { -1.0 },
                    count: 1,
                });
                prev = Some(row);
            }
        }
    }
    out
}

pub fn train(ds: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    ds.check_dimensions()?;
    if ds.labels.len() != ds.rows.len() {
        return Err(Error::InvalidArgument("rows and labels differ in length".to_string()));
    }
    ds.check_finite()?;
    let positives = ds.labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == ds.len() {
        return Err(Error::SingleClass);
    }

    let dim = ds.names.len();
    let mut uniq = unique_rows(ds);
    let total = ds.len() as f64;

    let mut mean = vec![0.0; dim];
    for u in &uniq {
        for (m, x) in mean.iter_mut().zip(&u.x) {
            *m += u.count as f64 * x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut scale = vec![0.0; dim];
    for u in &uniq {
        for ((s, x), m) in scale.iter_mut().zip(&u.x).zip(&mean) {
            *s += u.count as f64 * (x - m) * (x - m);
        }
    }
    for s in scale.iter_mut() {
        let sd = libm::sqrt(*s / total);
        *s = if sd > 0.0 { sd } else { 1.0 };
    }
    for u in uniq.iter_mut() {
        for ((x, m), s) in u.x.iter_mut().zip(&mean).zip(&scale) {
            *x = (*x - m) / s;
        }
    }

    let g = uniq.iter().fold(0, |acc, u| gcd(acc, u.count));
    let mut order: Vec<usize> = uniq
        .iter()
        .enumerate()
        .flat_map(|(i, u)| core::iter::repeat_n(i, u.count / g))
        .collect();

    let lambda = config.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut t = 0u64;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let last = epoch + 1 == config.epochs;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let u = &uniq[i];
            let margin = u.y * (dot(&w, &u.x) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&u.x) {
                    *wj += eta * u.y * xj;
                }
                b += eta * u.y;
            }
            if last {
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += wj;
                }
                avg_b += b;
            }
        }
    }
    let steps = order.len() as f64;
    avg_w.iter_mut().for_each(|a| *a /= steps);
    avg_b /= steps;

    let hinge: f64 = uniq
        .iter()
        .map(|u| u.count as f64 * (1.0 - u.y * (dot(&avg_w, &u.x) + avg_b)).max(0.0))
        .sum::<f64>()
        / total;
    let objective = 0.5 * lambda * dot(&avg_w, &avg_w) + hinge;

    let weights: Vec<f64> = avg_w.iter().zip(&scale).map(|(w, s)| w / s).collect();
    let bias = avg_b - weights.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(TrainOutcome {
        model: LinearModel::new(ds.names.clone(), weights, bias, *config)?,
        objective,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary precision, recall and F1 with positives as the target class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn precision_exceeds_recall(&self) -> bool {
        self.precision > self.recall
    }
}

/// Undefined precision or recall is reported as 0.
pub fn evaluate_predictions(predicted: &[bool], actual: &[bool]) -> Prf {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Prf {
        precision,
        recall,
        f1: super::f1_score(precision, recall),
    }
}

pub fn evaluate_classifier(model: &LinearModel, test: &Dataset) -> Result<Prf> {
    let predicted = test
        .rows
        .iter()
        .map(|r| model.predict_values(r).map(|(l, _)| l))
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluate_predictions(&predicted, &test.labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn one_d() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            rows.push(vec![if i % 4 == 0 { 1.0 } else { -1.0 }]);
            labels.push(i % 4 == 0);
        }
        Dataset::new(names(1), rows, labels).unwrap()
    }

    #[test]
    fn separable_one_dimensional() {
        let ds = one_d();
        let out = train(&ds, &TrainConfig::new(3)).unwrap();
        let prf = evaluate_classifier(&out.model, &ds).unwrap();
        assert_eq!(
            prf,
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        assert!(out.model.weights[0] > 0.0);
        assert!(out.objective.is_finite());
    }

    #[test]
    fn duplicated_training_set_gives_identical_model() {
        let mut ds = Dataset::new(
            names(2),
            vec![
                vec![0.1, 2.0],
                vec![0.5, 1.0],
                vec![0.9, 0.0],
                vec![0.3, 1.5],
                vec![0.7, 0.2],
                vec![0.2, 0.9],
            ],
            vec![false, true, true, false, true, false],
        )
        .unwrap();
        let single = train(&ds, &TrainConfig::new(11)).unwrap();
        let rows = ds.rows.clone();
        let labels = ds.labels.clone();
        ds.rows.extend(rows.into_iter().rev());
        ds.labels.extend(labels.into_iter().rev());
        ds.ids = (0..ds.rows.len()).map(|i| format!("#{i}")).collect();
        let double = train(&ds, &TrainConfig::new(11)).unwrap();
        for (a, b) in single.model.weights.iter().zip(&double.model.weights) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!((single.model.bias - double.model.bias).abs() <= 1e-6);
    }

    #[test]
    fn xor_converges_without_error() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..10 {
            for (x, y) in [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)] {
                rows.push(vec![x, y]);
                labels.push((x + y) == 1.0);
            }
        }
        let ds = Dataset::new(names(2), rows, labels.clone()).unwrap();
        let model = train(&ds, &TrainConfig::new(5)).unwrap().model;
        let correct = ds
            .rows
            .iter()
            .zip(&labels)
            .filter(|(r, &l)| model.predict_values(r).unwrap().0 == l)
            .count();
        let acc = correct as f64 / labels.len() as f64;
        assert!((0.25..=0.75).contains(&acc), "accuracy {acc}");
    }

    #[test]
    fn single_class_and_non_finite_are_rejected() {
        let ds = Dataset::new(names(1), vec![vec![1.0], vec![2.0]], vec![true, true]).unwrap();
        assert_eq!(train(&ds, &TrainConfig::new(0)), Err(Error::SingleClass));
        let mut ds = Dataset::new(names(2), vec![vec![1.0, 0.0], vec![2.0, f64::NAN]], vec![true, false]).unwrap();
        ds.ids = vec!["(a, b) in T".into(), "(c, d) in T".into()];
        assert_eq!(
            train(&ds, &TrainConfig::new(0)),
            Err(Error::NonFiniteFeature {
                instance: "(c, d) in T".into(),
                feature: "f1".into()
            })
        );
        assert!(Dataset::new(names(2), vec![vec![1.0]], vec![true]).is_err());
    }

    #[test]
    fn prediction_rules() {
        let cfg = TrainConfig::new(0);
        let m = LinearModel::new(names(2), vec![0.0, 0.0], 1.0, cfg).unwrap();
        assert_eq!(m.predict_values(&[-5.0, 7.0]).unwrap(), (true, 1.0));
        let m = LinearModel::new(names(2), vec![1.0, -2.0], 0.0, cfg).unwrap();
        assert_eq!(m.predict_values(&[2.0, 1.0]).unwrap(), (false, 0.0));
        // 0.5*0.4 - 2*0.3 + 0.1 = -0.3
        let m = LinearModel::new(names(2), vec![0.5, -2.0], 0.1, cfg).unwrap();
        let (label, margin) = m.predict_values(&[0.4, 0.3]).unwrap();
        assert!(!label && (margin + 0.3).abs() < 1e-12);
        assert_eq!(
            m.predict_values(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn hand_counted_classifier_metrics() {
        let p = evaluate_predictions(&[true, true, true, false], &[true, true, false, true]);
        for x in [p.precision, p.recall, p.f1] {
            assert!((x - 2.0 / 3.0).abs() < 1e-15);
        }
        let p = evaluate_predictions(&[false, false], &[true, false]);
        assert_eq!(p, Prf::default());
        let p = evaluate_predictions(&[true, false], &[true, false]);
        assert_eq!(
            p,
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
    }

    #[test]
    fn training_is_deterministic_and_order_free() {
        let ds = one_d();
        let a = train(&ds, &TrainConfig::new(9)).unwrap();
        let mut shuffled = ds.clone();
        shuffled.rows.reverse();
        shuffled.labels.reverse();
        let b = train(&shuffled, &TrainConfig::new(9)).unwrap();
        assert_eq!(a, b);
    }
}
