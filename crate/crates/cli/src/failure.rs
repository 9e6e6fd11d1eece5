//! Process-level failure contract.
//!
//! Every failed command exits nonzero after printing a single machine-readable
//! JSON object to stderr. Exit code 1 covers validation problems (bad config,
//! malformed or inconsistent input data), exit code 2 covers runtime problems
//! (I/O, exhausted retries).

use featurecast::Error;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn validation(kind: &'static str, message: impl Into<String>) -> Failure {
        Failure { code: EXIT_VALIDATION, kind, message: message.into() }
    }

    pub fn runtime(kind: &'static str, message: impl Into<String>) -> Failure {
        Failure { code: EXIT_RUNTIME, kind, message: message.into() }
    }

    /// The stderr payload: `{"error":{"kind":…,"message":…,"exit":…}}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "exit": self.code }
        })
        .to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let message = e.to_string();
        let (code, kind) = classify(&e);
        Failure { code, kind, message }
    }
}

fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Io(_) => (EXIT_RUNTIME, "io"),
        Error::RetryExhausted { .. } => (EXIT_RUNTIME, "retry-exhausted"),
        Error::Json(j) if j.classify() == serde_json::error::Category::Io => {
            (EXIT_RUNTIME, "io")
        }
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => (EXIT_RUNTIME, "io"),
        Error::Json(_) => (EXIT_VALIDATION, "json"),
        Error::Csv(_) => (EXIT_VALIDATION, "csv"),
        Error::SeriesTooShort { .. } => (EXIT_VALIDATION, "series-too-short"),
        Error::DegenerateSeries { .. } => (EXIT_VALIDATION, "degenerate-series"),
        Error::NonFinite { .. } => (EXIT_VALIDATION, "non-finite"),
        Error::InvalidParameter(_) => (EXIT_VALIDATION, "invalid-parameter"),
        Error::SimulationDiverged { .. } => (EXIT_VALIDATION, "simulation-diverged"),
        Error::ConstantInput(_) => (EXIT_VALIDATION, "constant-input"),
        Error::EmptySurvivors => (EXIT_VALIDATION, "empty-survivors"),
        Error::TooFewSeries { .. } => (EXIT_VALIDATION, "too-few-series"),
        Error::UnknownMethod(_) => (EXIT_VALIDATION, "unknown-method"),
        Error::UnknownFeature(_) => (EXIT_VALIDATION, "unknown-feature"),
        Error::AllZeroSeries { .. } => (EXIT_VALIDATION, "all-zero-series"),
        Error::DimensionMismatch(_) => (EXIT_VALIDATION, "dimension-mismatch"),
        Error::RosterMismatch(_) => (EXIT_VALIDATION, "roster-mismatch"),
        Error::WeightSum { .. } => (EXIT_VALIDATION, "weight-sum"),
        Error::SchemaMismatch { .. } => (EXIT_VALIDATION, "schema-mismatch"),
        Error::TooFewRows { .. } => (EXIT_VALIDATION, "too-few-rows"),
        Error::ZeroDenominator(_) => (EXIT_VALIDATION, "zero-denominator"),
        Error::DegeneratePool => (EXIT_VALIDATION, "degenerate-pool"),
        Error::JoinMismatch { .. } => (EXIT_VALIDATION, "join-mismatch"),
        Error::Format { .. } => (EXIT_VALIDATION, "format"),
        Error::ModelVersion(_) => (EXIT_VALIDATION, "model-version"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_validation_vs_runtime() {
        let v: Failure = Error::InvalidParameter("x".into()).into();
        assert_eq!(v.code, EXIT_VALIDATION);
        assert_eq!(v.kind, "invalid-parameter");

        let io_err = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        let r: Failure = Error::Io(io_err).into();
        assert_eq!(r.code, EXIT_RUNTIME);
        assert_eq!(r.kind, "io");
    }

    #[test]
    fn stderr_payload_is_one_json_object() {
        let f = Failure::validation("join-mismatch", "series ids do not join: a");
        let v: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "join-mismatch");
        assert_eq!(v["error"]["exit"], 1);
    }
}
