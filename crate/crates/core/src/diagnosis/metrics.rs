//! Classification metrics over class ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Occurrences in the truth.
    pub support: usize,
}

fn check(predictions: &[u8], truth: &[u8]) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::input(format!(
            "{} predictions for {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::input("metrics need at least one label"));
    }
    Ok(())
}

/// Precision, recall and F1 for every class seen in either argument, in
/// ascending id order. Undefined ratios are 0.
pub fn per_class(predictions: &[u8], truth: &[u8]) -> Result<Vec<ClassMetrics>> {
    check(predictions, truth)?;
    let mut classes: Vec<u8> = predictions.iter().chain(truth).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(classes
        .into_iter()
        .map(|c| {
            let tp = predictions.iter().zip(truth).filter(|&(&p, &t)| p == c && t == c).count();
            let predicted = predictions.iter().filter(|&&p| p == c).count();
            let support = truth.iter().filter(|&&t| t == c).count();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: c,
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect())
}

/// Per-class F1 averaged with weights equal to class support fractions.
pub fn weighted_f1(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    let n = truth.len() as f64;
    Ok(per_class(predictions, truth)?
        .iter()
        .map(|m| m.f1 * m.support as f64 / n)
        .sum())
}

pub fn accuracy(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    check(predictions, truth)?;
    Ok(predictions.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        assert_eq!(weighted_f1(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_binary() {
        // TP=2 FP=1 FN=1 TN=2 with class 1 positive: both classes F1 2/3
        let truth = [1, 1, 1, 0, 0, 0];
        let pred = [1, 1, 0, 1, 0, 0];
        assert!((weighted_f1(&pred, &truth).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_prediction_on_balanced_truth() {
        let truth = [0, 0, 1, 1];
        let pred = [0, 0, 0, 0];
        assert!((weighted_f1(&pred, &truth).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let m = per_class(&pred, &truth).unwrap();
        assert_eq!(m[1].precision, 0.0);
        assert_eq!(m[1].f1, 0.0);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(weighted_f1(&[0], &[0, 1]), Err(Error::Input(_))));
        assert!(matches!(weighted_f1(&[], &[]), Err(Error::Input(_))));
    }
}
