use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::label::Label;
use crate::occ::{Detector, ModelConfig, Verdict};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_verdicts<'a>(pairs: impl IntoIterator<Item = (&'a Verdict, &'a Label)>) -> Self {
        let mut c = Confusion::default();
        for (v, l) in pairs {
            match (l.is_anomaly(), *v == Verdict::Anomaly) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn tpr(&self) -> Option<f64> {
        rate(self.tp, self.tp + self.fn_)
    }

    pub fn tnr(&self) -> Option<f64> {
        rate(self.tn, self.tn + self.fp)
    }

    pub fn gmean(&self) -> Result<f64> {
        gmean(self.tp, self.tn, self.fp, self.fn_)
    }
}

fn rate(hit: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hit as f64 / total as f64)
}

/// `sqrt(TPR * TNR)`; both classes must be present.
pub fn gmean(tp: usize, tn: usize, fp: usize, fn_: usize) -> Result<f64> {
    let tpr = rate(tp, tp + fn_).ok_or_else(|| Error::invalid("gmean undefined: no anomalous samples"))?;
    let tnr = rate(tn, tn + fp).ok_or_else(|| Error::invalid("gmean undefined: no normal samples"))?;
    Ok((tpr * tnr).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_tag: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub confusion: Confusion,
    pub tpr: f64,
    pub tnr: f64,
    pub gmean: f64,
    /// Gmean over all normal rows plus the rows of one attack kind.
    pub per_attack: BTreeMap<Label, f64>,
}

/// Scores a prediction against ground truth. The overall figure uses the
/// whole mixed test set.
pub fn evaluate_verdicts(verdicts: &[Verdict], labels: &[Label], model_tag: &str, config_hash: &str) -> Result<EvalReport> {
    if verdicts.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: verdicts.len(),
        });
    }
    let confusion = Confusion::from_verdicts(verdicts.iter().zip(labels));
    let gmean = confusion.gmean()?;
    let mut per_attack = BTreeMap::new();
    let mut kinds: Vec<Label> = labels.iter().copied().filter(|l| l.is_anomaly()).collect();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        let subset = Confusion::from_verdicts(verdicts.iter().zip(labels).filter(|(_, l)| !l.is_anomaly() || **l == kind));
        per_attack.insert(kind, subset.gmean()?);
    }
    Ok(EvalReport {
        model_tag: model_tag.to_string(),
        config_hash: config_hash.to_string(),
        tpr: confusion.tpr().expect("checked by gmean"),
        tnr: confusion.tnr().expect("checked by gmean"),
        confusion,
        gmean,
        per_attack,
    })
}

/// Stable 64-bit FNV-1a digest of the serialized configuration.
pub fn config_hash(config: &ModelConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let hash = text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3));
    format!("{hash:016x}")
}

pub fn evaluate(detector: &Detector, test: &FeatureTable, exec: Execution) -> Result<EvalReport> {
    if test.vocab != detector.vocab {
        return Err(Error::invalid("test features use a different id vocabulary than the model"));
    }
    let verdicts: Vec<Verdict> = detector.score_raw_matrix(&test.x, exec)?.into_iter().map(Verdict::from_score).collect();
    evaluate_verdicts(&verdicts, &test.labels, &detector.config.tag(), &config_hash(&detector.config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gmean_examples() {
        assert_eq!(gmean(5, 5, 0, 0).unwrap(), 1.0);
        assert_eq!(gmean(0, 5, 0, 5).unwrap(), 0.0);
        assert!((gmean(9, 8, 2, 1).unwrap() - (0.9f64 * 0.8).sqrt()).abs() < 1e-15);
        assert!(gmean(0, 3, 1, 0).is_err());
        assert!(gmean(3, 0, 0, 1).is_err());
    }

    fn labels() -> Vec<Label> {
        let mut l = vec![Label::Normal; 6];
        l.extend([Label::ZeroId, Label::ZeroId, Label::RandomId, Label::Replay]);
        l
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let l = labels();
        let perfect: Vec<Verdict> = l.iter().map(|x| if x.is_anomaly() { Verdict::Anomaly } else { Verdict::Normal }).collect();
        let r = evaluate_verdicts(&perfect, &l, "m", "h").unwrap();
        assert_eq!(r.gmean, 1.0);
        assert_eq!(r.per_attack.len(), 3);
        assert!(r.per_attack.values().all(|&g| g == 1.0));
        let constant = vec![Verdict::Normal; l.len()];
        let r = evaluate_verdicts(&constant, &l, "m", "h").unwrap();
        assert_eq!(r.tpr, 0.0);
        assert_eq!(r.gmean, 0.0);
        assert_eq!(r.confusion.tp + r.confusion.fn_, 4);
        assert_eq!(r.confusion.tn + r.confusion.fp, 6);
    }

    #[test]
    fn per_attack_subsets() {
        let l = labels();
        // misses the random-id row and flags one normal row
        let mut v: Vec<Verdict> = l.iter().map(|x| if x.is_anomaly() { Verdict::Anomaly } else { Verdict::Normal }).collect();
        v[8] = Verdict::Normal;
        v[0] = Verdict::Anomaly;
        let r = evaluate_verdicts(&v, &l, "m", "h").unwrap();
        let tnr = 5.0f64 / 6.0;
        assert!((r.per_attack[&Label::ZeroId] - tnr.sqrt()).abs() < 1e-15);
        assert_eq!(r.per_attack[&Label::RandomId], 0.0);
        assert!((r.gmean - (0.75 * tnr).sqrt()).abs() < 1e-15);
        assert!(evaluate_verdicts(&v[..3], &l, "m", "h").is_err());
        assert!(evaluate_verdicts(&vec![Verdict::Normal; 6], &l[..6], "m", "h").is_err());
    }

    #[test]
    fn report_json_uses_plain_names() {
        let l = labels();
        let r = evaluate_verdicts(&vec![Verdict::Anomaly; l.len()], &l, "m", "h").unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"fn\":0") && json.contains("\"zero_id\""));
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), r);
    }

    #[test]
    fn hash_is_stable_and_discriminating() {
        let a = ModelConfig::default();
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&ModelConfig { c: 0.2, ..a }));
    }

    proptest! {
        #[test]
        fn gmean_bounded_and_monotone(tp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50, fp in 0usize..50) {
            prop_assume!(tp + fn_ > 0 && tn + fp > 0);
            let g = gmean(tp, tn, fp, fn_).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            if fn_ > 0 {
                prop_assert!(gmean(tp + 1, tn, fp, fn_ - 1).unwrap() >= g);
            }
            if fp > 0 {
                prop_assert!(gmean(tp, tn + 1, fp - 1, fn_).unwrap() >= g);
            }
        }

        #[test]
        fn single_attack_matches_overall(bits in proptest::collection::vec(any::<bool>(), 12)) {
            let mut l = vec![Label::Normal; 6];
            l.extend([Label::Replay; 6]);
            let v: Vec<Verdict> = bits.iter().map(|&b| if b { Verdict::Anomaly } else { Verdict::Normal }).collect();
            let r = evaluate_verdicts(&v, &l, "m", "h").unwrap();
            prop_assert_eq!(r.per_attack[&Label::Replay], r.gmean);
        }
    }
}
