//! Two thresholds split the score axis into mated, morph and non-mated decisions.

use serde::{Deserialize, Serialize};

use super::SystemScores;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreeWay {
    Mated,
    Morph,
    Nonmated,
}

impl ThreeWay {
    pub const ALL: [ThreeWay; 3] = [ThreeWay::Mated, ThreeWay::Morph, ThreeWay::Nonmated];

    fn index(self) -> usize {
        self as usize
    }
}

fn check_order(t_low: f64, t_high: f64) -> Result<()> {
    if 0.0 <= t_low && t_low < t_high && t_high <= std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::InvalidThresholdOrder(t_low, t_high))
    }
}

pub fn three_way_classify(score: f64, t_low: f64, t_high: f64) -> Result<ThreeWay> {
    check_order(t_low, t_high)?;
    Ok(classify_unchecked(score, t_low, t_high))
}

fn classify_unchecked(score: f64, t_low: f64, t_high: f64) -> ThreeWay {
    if score <= t_low {
        ThreeWay::Mated
    } else if score <= t_high {
        ThreeWay::Morph
    } else {
        ThreeWay::Nonmated
    }
}

/// Counts with rows indexed by the true label and columns by the decision,
/// both in the order mated, morph, non-mated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: ThreeWay, predicted: ThreeWay) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn row_total(&self, truth: ThreeWay) -> u64 {
        self.counts[truth.index()].iter().sum()
    }
}

pub fn evaluate_three_way(
    scores: &SystemScores,
    t_low: f64,
    t_high: f64,
) -> Result<ConfusionMatrix> {
    check_order(t_low, t_high)?;
    let mut m = ConfusionMatrix::default();
    let mut tally = |truth: ThreeWay, pop: &mut dyn Iterator<Item = f64>| {
        for s in pop {
            m.counts[truth.index()][classify_unchecked(s, t_low, t_high).index()] += 1;
        }
    };
    tally(ThreeWay::Mated, &mut scores.mated().iter().copied());
    tally(
        ThreeWay::Morph,
        &mut scores
            .attacks()
            .values()
            .flat_map(|a| a.first.iter().chain(&a.second))
            .copied(),
    );
    tally(ThreeWay::Nonmated, &mut scores.nonmated().iter().copied());
    Ok(m)
}
