//! JSON documents written by the tool and re-read by `--verify`.

use dprel::extremal::ExtremalReport;
use dprel::hdtest::{summarize_scan, Branch};
use dprel::LedgerEntry;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Result of `test` and `scan`. Every field a decision depends on is
/// recorded, so decisions can be re-derived without the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TestReport {
    pub decision: OneOrMany<bool>,
    pub branch: Branch,
    pub delta: OneOrMany<f64>,
    pub delta_hat: Option<f64>,
    #[serde(rename = "normDP")]
    pub norm_dp: f64,
    /// Critical value minus the threshold, per threshold.
    pub quantile: OneOrMany<f64>,
    pub extremal: Option<ExtremalReport>,
    pub ledger: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremalOutput {
    #[serde(flatten)]
    pub estimate: ExtremalReport,
    pub ledger: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvtOutput {
    pub epsilon: f64,
    pub n: usize,
    pub p: u64,
    pub cutoff: f64,
    pub convention: &'static str,
    pub sensitivity: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub delta: f64,
}

/// Lists every recomputed decision that disagrees with the record.
pub fn verify(report: &TestReport) -> Result<usize, Vec<String>> {
    let deltas = report.delta.to_vec();
    let decisions = report.decision.to_vec();
    let margins = report.quantile.to_vec();
    if deltas.len() != decisions.len() || deltas.len() != margins.len() {
        return Err(vec![format!(
            "{} thresholds, {} decisions and {} quantiles",
            deltas.len(),
            decisions.len(),
            margins.len()
        )]);
    }
    let mut problems = Vec::new();
    for ((&delta, &recorded), &margin) in deltas.iter().zip(&decisions).zip(&margins) {
        let derived = report.branch.decide(report.norm_dp, margin, delta);
        if derived != recorded {
            problems.push(format!("delta {delta}: recorded {recorded}, derived {derived}"));
        }
    }
    if let Some(recorded) = report.delta_hat {
        let (derived, _) = summarize_scan(deltas.iter().copied().zip(decisions.iter().copied()));
        if derived != recorded {
            problems.push(format!("deltaHat: recorded {recorded}, derived {derived}"));
        }
    }
    if problems.is_empty() {
        Ok(deltas.len())
    } else {
        Err(problems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_report() -> TestReport {
        TestReport {
            decision: OneOrMany::Many(vec![false, true, true]),
            branch: Branch::Bootstrap,
            delta: OneOrMany::Many(vec![0.5, 0.3, 0.1]),
            delta_hat: Some(0.5),
            norm_dp: 0.45,
            quantile: OneOrMany::Many(vec![0.1, 0.1, 0.1]),
            extremal: None,
            ledger: Vec::new(),
        }
    }

    #[test]
    fn consistent_record_verifies() {
        assert_eq!(verify(&scan_report()), Ok(3));
    }

    #[test]
    fn flipped_decision_is_caught() {
        let mut r = scan_report();
        r.decision = OneOrMany::Many(vec![true, true, true]);
        let problems = verify(&r).unwrap_err();
        assert!(problems.iter().any(|p| p.starts_with("delta 0.5")));
        assert!(problems.iter().any(|p| p.starts_with("deltaHat")));
    }

    #[test]
    fn length_mismatch_is_caught() {
        let mut r = scan_report();
        r.quantile = OneOrMany::One(0.1);
        assert!(verify(&r).is_err());
    }

    #[test]
    fn scalar_and_array_forms_round_trip() {
        let r = scan_report();
        let back: TestReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let one: OneOrMany<f64> = serde_json::from_str("0.2").unwrap();
        assert_eq!(one.to_vec(), vec![0.2]);
    }
}
