//! Machine-readable check results.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Witnesses kept per report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sampled,
    Algebraic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Sampled => "sampled",
            Mode::Algebraic => "algebraic",
        })
    }
}

/// Per-claim tally kept in `details.claims`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimTally {
    pub scanned: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub q: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub scanned: u64,
    pub violations: u64,
    pub pass: bool,
    pub witnesses: Vec<String>,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cap_exceeded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn new(check: &str, q: u64, mode: Mode, seed: Option<u64>) -> Self {
        CheckReport {
            check: check.to_string(),
            q,
            stage: None,
            mode,
            seed,
            scanned: 0,
            violations: 0,
            pass: true,
            witnesses: Vec::new(),
            ms: 0,
            cap_exceeded: false,
            notes: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn with_stage(mut self, stage: impl Into<String>) -> Self {
        self.stage = Some(stage.into());
        self
    }

    /// Record one claim: `scanned` items examined, `violations` of them failed.
    pub fn claim(&mut self, name: &str, scanned: u64, violations: u64, witness: Option<String>) {
        self.scanned += scanned;
        self.violations += violations;
        self.pass = self.violations == 0;
        if violations > 0 {
            if let Some(w) = witness {
                self.witness(format!("{name}: {w}"));
            } else {
                self.witness(format!("{name}: {violations} violation(s)"));
            }
        }
        let claims = self
            .details
            .entry("claims".to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if let Value::Object(map) = claims {
            let entry = map.entry(name.to_string()).or_insert_with(|| serde_json::json!({"scanned": 0, "violations": 0}));
            let prev: ClaimTally = serde_json::from_value(entry.clone()).unwrap_or_default();
            *entry = serde_json::to_value(ClaimTally {
                scanned: prev.scanned + scanned,
                violations: prev.violations + violations,
            })
            .expect("plain struct");
        }
    }

    /// A single yes/no claim.
    pub fn check(&mut self, name: &str, ok: bool, witness: impl FnOnce() -> String) {
        let w = if ok { None } else { Some(witness()) };
        self.claim(name, 1, u64::from(!ok), w);
    }

    /// Equality claim; the observed value is stored under `details[name]`.
    pub fn expect_eq<T: PartialEq + Serialize + fmt::Debug>(&mut self, name: &str, got: T, want: T) {
        let ok = got == want;
        self.details
            .insert(name.to_string(), serde_json::to_value(&got).unwrap_or(Value::Null));
        self.check(name, ok, || format!("got {got:?}, expected {want:?}"));
    }

    pub fn witness(&mut self, w: String) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn mark_cap_exceeded(&mut self, what: &str, cap: usize) {
        self.cap_exceeded = true;
        self.note(format!("{what}: closure exceeded the cap of {cap} elements; not counted"));
    }

    /// Fill `ms` from `start` when timing is on.
    pub fn finish(mut self, start: Option<Instant>) -> Self {
        self.pass = self.violations == 0;
        self.ms = start.map_or(0, |s| s.elapsed().as_millis() as u64);
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

/// Closing object of a report stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub summary: bool,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub cap_exceeded: usize,
    pub exit_code: i32,
}

impl Summary {
    /// Exit code from report contents: 3 on cap exhaustion, 1 on failure, 0 otherwise.
    pub fn of(reports: &[CheckReport]) -> Self {
        let passed = reports.iter().filter(|r| r.pass).count();
        let cap = reports.iter().filter(|r| r.cap_exceeded).count();
        let failed = reports.len() - passed;
        let exit_code = if cap > 0 {
            3
        } else if failed > 0 {
            1
        } else {
            0
        };
        Summary { summary: true, checks: reports.len(), passed, failed, cap_exceeded: cap, exit_code }
    }
}
