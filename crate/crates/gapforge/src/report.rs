//! Machine-readable command reports.
//!
//! Every subcommand that verifies something emits exactly one [`Report`] on
//! standard output: canonical JSON (sorted keys, rationals as `"p/q"`
//! strings) so golden-file comparisons are byte-stable modulo the timing
//! field. Human diagnostics never share the data stream; they go to stderr.

use serde::Serialize;
use serde_json::Value;

/// Verdict for a report or a single clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

/// One named check inside a report. Failures always carry a witness.
#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Clause {
    pub fn pass(name: &str, witness: Option<Value>) -> Clause {
        Clause {
            name: name.to_string(),
            status: Status::Pass,
            witness,
        }
    }

    pub fn fail(name: &str, witness: Value) -> Clause {
        Clause {
            name: name.to_string(),
            status: Status::Fail,
            witness: Some(witness),
        }
    }

    pub fn check(name: &str, ok: bool, witness: Value) -> Clause {
        Clause {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            witness: Some(witness),
        }
    }
}

/// The single JSON document a verifying subcommand prints.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub clauses: Vec<Clause>,
    /// Wall-clock seconds for the whole command.
    pub timing: f64,
    /// Present exactly when the command consumed randomness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Report {
    /// Assembles the report; overall status is pass iff every clause passed.
    pub fn finish(command: &str, clauses: Vec<Clause>, timing: f64, seed: Option<u64>) -> Report {
        let status = if clauses.iter().all(|c| c.status == Status::Pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        Report {
            command: command.to_string(),
            status,
            clauses,
            timing,
            seed,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

/// Serializes any value into a witness; panics only on non-string map keys,
/// which the report types never produce.
pub fn witness<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("witness serialization cannot fail")
}

/// Canonical JSON: route through `Value` so objects print with sorted keys.
pub fn canonical<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serialization cannot fail");
    let mut s = serde_json::to_string(&v).expect("value printing cannot fail");
    s.push('\n');
    s
}
