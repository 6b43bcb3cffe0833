use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion matrix with "complex" (label 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_labels(gold: &[u8], predicted: &[u8]) -> Result<Self> {
        if gold.len() != predicted.len() {
            return Err(Error::invalid(format!(
                "{} gold labels but {} predictions",
                gold.len(),
                predicted.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (&g, &p) in gold.iter().zip(predicted) {
            c.record(g, p)?;
        }
        Ok(c)
    }

    pub fn record(&mut self, gold: u8, predicted: u8) -> Result<()> {
        match (gold, predicted) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (1, 0) => self.fn_ += 1,
            (0, 0) => self.tn += 1,
            _ => return Err(Error::invalid(format!("labels must be 0 or 1, got {gold}/{predicted}"))),
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same matrix with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// F1 of one class (1 = complex, 0 = non-complex). Every 0/0 counts as 0.
pub fn f1_for_class(counts: &ConfusionCounts, positive_class: u8) -> f64 {
    let c = if positive_class == 1 { *counts } else { counts.swapped() };
    let p = ratio(c.tp as f64, (c.tp + c.fp) as f64);
    let r = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
    ratio(2.0 * p * r, p + r)
}

/// Unweighted mean of the complex and non-complex F1.
pub fn macro_f1(counts: &ConfusionCounts) -> f64 {
    (f1_for_class(counts, 1) + f1_for_class(counts, 0)) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(tp: usize, fp: usize, fn_: usize, tn: usize) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1_for_class(&c(5, 0, 0, 0), 1), 1.0);
        assert_eq!(f1_for_class(&c(0, 0, 3, 0), 1), 0.0);
        let f = f1_for_class(&c(6, 2, 4, 0), 1);
        assert!((f - 2.0 * 0.45 / 1.35).abs() < 1e-15);
        assert!((f - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn perfect_is_one() {
        assert_eq!(macro_f1(&c(3, 0, 0, 7)), 1.0);
    }

    #[test]
    fn all_noncomplex_on_ten() {
        // 3 complex, 7 simple, everything predicted simple.
        let counts = ConfusionCounts::from_labels(&[1, 1, 1, 0, 0, 0, 0, 0, 0, 0], &[0; 10]).unwrap();
        assert_eq!(f1_for_class(&counts, 1), 0.0);
        // non-complex: P = 7/10, R = 1, F1 = 14/17
        let expected = (14.0 / 17.0) / 2.0;
        assert!((macro_f1(&counts) - expected).abs() < 1e-15);
        assert!(macro_f1(&counts) > 0.0 && macro_f1(&counts) < 0.5);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(ConfusionCounts::from_labels(&[2], &[0]).is_err());
        assert!(ConfusionCounts::from_labels(&[1, 0], &[0]).is_err());
    }
}
