use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    apcer, bpcer, fmr, fnmr, map_rc, mmpmr, threshold_at_apcer, threshold_at_fmr, threshold_wc,
    wc_mmpmr, MorphFilter, ScoreSet, SystemScores,
};
use crate::error::{Error, Result};
use crate::morphing::WORST_CASE_LABEL;

/// How the operating threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// Largest t with FMR(t) <= x.
    Fmr(f64),
    /// Largest t with APCER(t) <= x over all morph comparisons.
    Apcer(f64),
    /// Largest t with wcMMPMR(t) <= x.
    WcMmpmr(f64),
    Fixed(f64),
}

impl ThresholdRule {
    pub fn resolve(&self, scores: &SystemScores) -> Result<f64> {
        match *self {
            ThresholdRule::Fmr(x) => threshold_at_fmr(scores, x),
            ThresholdRule::Apcer(x) => threshold_at_apcer(scores, x, MorphFilter::All),
            ThresholdRule::WcMmpmr(x) => threshold_wc(scores, x),
            ThresholdRule::Fixed(t) if (0.0..=std::f64::consts::PI).contains(&t) => Ok(t),
            ThresholdRule::Fixed(t) => Err(Error::InvalidThresholdOrder(t, t)),
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Fmr(x) => write!(f, "fmr@{x}"),
            ThresholdRule::Apcer(x) => write!(f, "apcer@{x}"),
            ThresholdRule::WcMmpmr(x) => write!(f, "wcmmpmr@{x}"),
            ThresholdRule::Fixed(t) => write!(f, "fixed@{t}"),
        }
    }
}

impl FromStr for ThresholdRule {
    type Err = Error;

    /// Parses `fmr@0.001`, `apcer@0.05`, `wcmmpmr@0.05` or `fixed@1.2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("threshold rule '{s}' must look like fmr@0.001"));
        let (name, value) = s.split_once('@').ok_or_else(bad)?;
        let value: f64 = value.parse().map_err(|_| bad())?;
        match name {
            "fmr" => Ok(ThresholdRule::Fmr(value)),
            "apcer" => Ok(ThresholdRule::Apcer(value)),
            "wcmmpmr" => Ok(ThresholdRule::WcMmpmr(value)),
            "fixed" => Ok(ThresholdRule::Fixed(value)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapValue {
    pub r: usize,
    pub c: usize,
    /// Morph-kind label the attacks were restricted to.
    pub kind: String,
    pub value: f64,
}

/// Thresholds and every metric at the operating threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub system_id: String,
    pub operating_rule: String,
    pub operating_threshold: f64,
    /// Rule name (suffixed `/system` for systems other than the evaluated one) to threshold.
    pub thresholds: BTreeMap<String, f64>,
    pub fmr: f64,
    pub fnmr: f64,
    pub apcer: Option<f64>,
    pub bpcer: f64,
    /// MMPMR per morph kind, worst-case excluded.
    pub mmpmr: BTreeMap<String, f64>,
    pub wcmmpmr: Option<f64>,
    pub map: Vec<MapValue>,
}

impl EvaluationSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluates `system_id` at the threshold picked by `rule`. MAP values use
/// every system in `scores`, each at its own threshold under the same rule,
/// for all `r` in `map_r` and all `c` up to the number of systems.
pub fn evaluate(
    scores: &ScoreSet,
    system_id: &str,
    rule: ThresholdRule,
    map_r: &[usize],
) -> Result<EvaluationSummary> {
    let sys = scores.system(system_id)?;
    let operating_threshold = rule.resolve(sys)?;
    let t = operating_threshold;

    let mut thresholds = BTreeMap::new();
    let mut per_system = BTreeMap::new();
    for (name, other) in scores.systems() {
        let ts = if name == system_id {
            t
        } else {
            rule.resolve(other)?
        };
        let key = if name == system_id {
            rule.to_string()
        } else {
            format!("{rule}/{name}")
        };
        thresholds.insert(key, ts);
        per_system.insert(name.clone(), ts);
    }

    let labels = sys.morph_labels();
    let has_attacks = !sys.attacks().is_empty();
    let mut mmpmr_by_kind = BTreeMap::new();
    for label in labels.iter().filter(|l| *l != WORST_CASE_LABEL) {
        mmpmr_by_kind.insert(label.clone(), mmpmr(sys, t, MorphFilter::Label(label))?);
    }
    let wcmmpmr = if labels.iter().any(|l| l == WORST_CASE_LABEL) {
        Some(wc_mmpmr(sys, t)?)
    } else {
        None
    };

    let mut map = Vec::new();
    for label in &labels {
        for &r in map_r {
            for c in 1..=scores.systems().len() {
                map.push(MapValue {
                    r,
                    c,
                    kind: label.clone(),
                    value: map_rc(scores, &per_system, r, c, MorphFilter::Label(label))?,
                });
            }
        }
    }

    Ok(EvaluationSummary {
        system_id: system_id.to_owned(),
        operating_rule: rule.to_string(),
        operating_threshold,
        thresholds,
        fmr: fmr(sys, t)?,
        fnmr: fnmr(sys, t)?,
        apcer: if has_attacks {
            Some(apcer(sys, t)?)
        } else {
            None
        },
        bpcer: bpcer(sys, t)?,
        mmpmr: mmpmr_by_kind,
        wcmmpmr,
        map,
    })
}
