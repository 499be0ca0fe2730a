//! Validity oracles: classify the outcome of one steered run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{ExecOutcome, Limit, Loc, OutcomeKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleSpec {
    /// Valid iff no exception escapes; assertions are ignored.
    #[default]
    Default,
    /// Additionally requires every executed assertion to pass.
    Asserting,
}

impl OracleSpec {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleSpec::Default => "default",
            OracleSpec::Asserting => "asserting",
        }
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown oracle `{0}` (expected `default` or `asserting`)")]
pub struct UnknownOracle(pub String);

impl FromStr for OracleSpec {
    type Err = UnknownOracle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(OracleSpec::Default),
            "asserting" => Ok(OracleSpec::Asserting),
            other => Err(UnknownOracle(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvalidReason {
    NullDereferenceEscaped,
    UncaughtException,
    AssertionFailed,
    BudgetExhausted,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::NullDereferenceEscaped => "NPE_ESCAPED",
            InvalidReason::UncaughtException => "UNCAUGHT_EXCEPTION",
            InvalidReason::AssertionFailed => "ASSERTION_FAILED",
            InvalidReason::BudgetExhausted => "BUDGET_EXHAUSTED",
        }
    }
}

/// Serialized as one of `VALID`, `NPE_ESCAPED`, `UNCAUGHT_EXCEPTION`,
/// `ASSERTION_FAILED`, `BUDGET_EXHAUSTED`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Valid,
    Invalid(InvalidReason),
}

impl Verdict {
    pub fn is_valid(self) -> bool {
        self == Verdict::Valid
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Valid => "VALID",
            Verdict::Invalid(reason) => reason.as_str(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown verdict `{0}`")]
pub struct UnknownVerdict(pub String);

impl FromStr for Verdict {
    type Err = UnknownVerdict;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "VALID" => Verdict::Valid,
            "NPE_ESCAPED" => Verdict::Invalid(InvalidReason::NullDereferenceEscaped),
            "UNCAUGHT_EXCEPTION" => Verdict::Invalid(InvalidReason::UncaughtException),
            "ASSERTION_FAILED" => Verdict::Invalid(InvalidReason::AssertionFailed),
            "BUDGET_EXHAUSTED" => Verdict::Invalid(InvalidReason::BudgetExhausted),
            other => return Err(UnknownVerdict(other.to_string())),
        })
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The part of an execution outcome the oracle needs, kept per sequence so
/// verdicts can be recomputed under another oracle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeSummary {
    Completed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        failed_assertion: Option<Loc>,
    },
    NullDereferenceEscaped { location: Loc },
    UncaughtException { name: String, location: Loc },
    BudgetExhausted { limit: Limit },
}

impl From<&ExecOutcome> for OutcomeSummary {
    fn from(outcome: &ExecOutcome) -> Self {
        match &outcome.kind {
            OutcomeKind::Completed { assertions, .. } => OutcomeSummary::Completed {
                failed_assertion: assertions.iter().find(|a| !a.passed).map(|a| a.location),
            },
            OutcomeKind::NullDereferenceEscaped { location } => {
                OutcomeSummary::NullDereferenceEscaped { location: *location }
            }
            OutcomeKind::UncaughtException { name, location } => {
                OutcomeSummary::UncaughtException { name: name.clone(), location: *location }
            }
            OutcomeKind::BudgetExhausted { limit } => OutcomeSummary::BudgetExhausted { limit: *limit },
        }
    }
}

pub fn evaluate_summary(outcome: &OutcomeSummary, spec: OracleSpec) -> Verdict {
    use InvalidReason::*;
    match outcome {
        OutcomeSummary::Completed { failed_assertion: Some(_) } if spec == OracleSpec::Asserting => {
            Verdict::Invalid(AssertionFailed)
        }
        OutcomeSummary::Completed { .. } => Verdict::Valid,
        OutcomeSummary::NullDereferenceEscaped { .. } => Verdict::Invalid(NullDereferenceEscaped),
        OutcomeSummary::UncaughtException { .. } => Verdict::Invalid(UncaughtException),
        OutcomeSummary::BudgetExhausted { .. } => Verdict::Invalid(BudgetExhausted),
    }
}

pub fn evaluate(outcome: &ExecOutcome, spec: OracleSpec) -> Verdict {
    evaluate_summary(&OutcomeSummary::from(outcome), spec)
}
