//! Outcome oracle in conditional-token payout encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::scoring::Outcome;

/// Payout vector for one binary condition.
///
/// Resolved iff `denominator > 0`; the YES outcome is
/// `numerators[1] / denominator`, which must be exactly 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PayoutReport {
    pub numerators: [u64; 2],
    pub denominator: u64,
}

impl PayoutReport {
    pub const UNRESOLVED: PayoutReport = PayoutReport { numerators: [0, 0], denominator: 0 };

    pub fn yes() -> Self {
        PayoutReport { numerators: [0, 1], denominator: 1 }
    }

    pub fn no() -> Self {
        PayoutReport { numerators: [1, 0], denominator: 1 }
    }

    pub fn for_outcome(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Unresolved => Self::UNRESOLVED,
            Outcome::Resolved(0) => Self::no(),
            Outcome::Resolved(_) => Self::yes(),
        }
    }

    pub fn outcome(&self) -> Result<Outcome, ProtocolError> {
        if self.denominator == 0 {
            return Ok(Outcome::Unresolved);
        }
        match self.numerators[1] {
            0 => Ok(Outcome::Resolved(0)),
            n if n == self.denominator => Ok(Outcome::Resolved(1)),
            _ => Err(ProtocolError::MalformedReport(*self)),
        }
    }
}

/// Source of payout reports, keyed by market id.
pub trait OutcomeOracle {
    fn payout(&self, market_id: u64) -> PayoutReport;
}

/// In-memory oracle; markets without a report are unresolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockOracle {
    reports: HashMap<u64, PayoutReport>,
}

impl MockOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, market_id: u64, report: PayoutReport) -> &mut Self {
        self.reports.insert(market_id, report);
        self
    }

    pub fn resolve(&mut self, market_id: u64, outcome: Outcome) -> &mut Self {
        self.set(market_id, PayoutReport::for_outcome(outcome))
    }
}

impl OutcomeOracle for MockOracle {
    fn payout(&self, market_id: u64) -> PayoutReport {
        self.reports.get(&market_id).copied().unwrap_or(PayoutReport::UNRESOLVED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payout_encoding() {
        let r = |n0, n1, d| PayoutReport { numerators: [n0, n1], denominator: d };
        assert_eq!(r(0, 1, 1).outcome().unwrap(), Outcome::Resolved(1));
        assert_eq!(r(1, 0, 1).outcome().unwrap(), Outcome::Resolved(0));
        assert_eq!(r(0, 5, 5).outcome().unwrap(), Outcome::Resolved(1));
        assert_eq!(r(0, 0, 0).outcome().unwrap(), Outcome::Unresolved);
        assert_eq!(r(1, 1, 0).outcome().unwrap(), Outcome::Unresolved);
        assert_eq!(r(1, 1, 2).outcome(), Err(ProtocolError::MalformedReport(r(1, 1, 2))));
        assert!(r(0, 3, 2).outcome().is_err());
    }

    #[test]
    fn mock_defaults_to_unresolved() {
        let mut o = MockOracle::new();
        o.resolve(4, Outcome::Resolved(1));
        assert_eq!(o.payout(4), PayoutReport::yes());
        assert_eq!(o.payout(5), PayoutReport::UNRESOLVED);
    }
}
