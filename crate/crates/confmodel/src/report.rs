//! Experiment reports and their JSON / tidy CSV renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use confmodel_core::rng::STREAM_DERIVATION;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: BTreeMap<String, Value>,
    pub seed: u64,
    pub stream_derivation: String,
    pub estimates: Vec<Estimate>,
    pub exact_refs: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: BTreeMap::new(),
            seed,
            stream_derivation: STREAM_DERIVATION.to_string(),
            estimates: Vec::new(),
            exact_refs: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_config(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    pub fn estimate(&mut self, name: impl Into<String>, value: f64, std_error: f64, replicates: u64) -> &mut Estimate {
        self.estimates.push(Estimate {
            name: name.into(),
            value,
            std_error,
            replicates,
            seed: self.seed,
            ci: None,
        });
        self.estimates.last_mut().expect("just pushed")
    }

    pub fn exact(&mut self, name: impl Into<String>, value: f64) {
        self.exact_refs.insert(name.into(), value);
    }

    pub fn verdict(&mut self, check: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            check: check.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn find_verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per estimate, exact reference and verdict.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "experiment", "kind", "name", "value", "std_error", "ci_low", "ci_high", "replicates",
            "seed", "passed", "detail",
        ])?;
        let f = |x: f64| x.to_string();
        for e in &self.estimates {
            let (lo, hi) = e.ci.map(|(a, b)| (f(a), f(b))).unwrap_or_default();
            w.write_record([
                self.experiment.as_str(), "estimate", &e.name, &f(e.value), &f(e.std_error), &lo, &hi,
                &e.replicates.to_string(), &e.seed.to_string(), "", "",
            ])?;
        }
        for (name, value) in &self.exact_refs {
            w.write_record([
                self.experiment.as_str(), "exact", name, &f(*value), "", "", "", "", "", "", "",
            ])?;
        }
        for v in &self.verdicts {
            w.write_record([
                self.experiment.as_str(), "verdict", &v.check, "", "", "", "", "", "",
                if v.passed { "true" } else { "false" }, &v.detail,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_csv_shape() {
        let mut r = ExperimentReport::new("demo", 7).with_config("family", "regular:d=3");
        r.estimate("p", 0.5, 0.01, 100).ci = Some((0.48, 0.52));
        r.exact("p_exact", 0.5);
        r.verdict("close", true, "|diff| <= 4 se");
        let json = r.to_json().unwrap();
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("demo,estimate,p,0.5,0.01,0.48,0.52,100,7"));
        assert!(r.passed());
        r.verdict("far", false, "");
        assert!(!r.passed());
    }
}
