use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ICC_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeType {
    /// Behavior and neural marker both decodable, scores cluster by condition:
    /// suitable for proportional control.
    Type1,
    /// Both decodable, scores overlap across conditions: threshold control.
    Type2,
    /// Behavior decodable, neural marker not, low ICC.
    Type3,
    /// Neural marker predicts scores that do not separate conditions.
    Type4,
    /// Behavior decodable and clustered, no neural marker.
    Type5,
    /// Nothing decodable: revisit stimulation parameters.
    Type6,
}

impl OutcomeType {
    pub fn description(self) -> &'static str {
        match self {
            OutcomeType::Type1 => "proportional control candidate",
            OutcomeType::Type2 => "threshold control candidate",
            OutcomeType::Type3 => "behavioral effect without neural marker (low ICC)",
            OutcomeType::Type4 => "neural marker of behavior without DBS effect",
            OutcomeType::Type5 => "clustered behavioral effect without neural marker",
            OutcomeType::Type6 => "no effect; check DBS parameters",
        }
    }
}

impl std::fmt::Display for OutcomeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = *self as u8 + 1;
        write!(f, "Type{n}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeType,
    pub auc_sig: bool,
    pub r_sig: bool,
    pub icc_high: bool,
}

pub fn outcome_from_flags(auc_sig: bool, r_sig: bool, icc_high: bool) -> Result<OutcomeType> {
    use OutcomeType::*;
    Ok(match (auc_sig, r_sig, icc_high) {
        (true, true, true) => Type1,
        (true, true, false) => Type2,
        (true, false, false) => Type3,
        (false, true, false) => Type4,
        (true, false, true) => Type5,
        (false, false, false) => Type6,
        (false, _, true) => return Err(Error::UnreachableCombination { auc_sig, r_sig, icc_high }),
    })
}

pub fn classify_outcome(auc: f64, auc_chance: f64, r: f64, r_chance: f64, icc: f64, icc_threshold: f64) -> Result<Outcome> {
    if [auc, auc_chance, r, r_chance, icc, icc_threshold].iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("outcome inputs must be finite".into()));
    }
    let (auc_sig, r_sig, icc_high) = (auc > auc_chance, r > r_chance, icc >= icc_threshold);
    Ok(Outcome {
        kind: outcome_from_flags(auc_sig, r_sig, icc_high)?,
        auc_sig,
        r_sig,
        icc_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_examples() {
        let t1 = classify_outcome(0.9, 0.6, 0.8, 0.2, 0.8, 0.5).unwrap();
        assert_eq!(t1.kind, OutcomeType::Type1);
        let t2 = classify_outcome(0.75, 0.6, 0.6, 0.2, 0.2, 0.5).unwrap();
        assert_eq!(t2.kind, OutcomeType::Type2);
        let t6 = classify_outcome(0.5, 0.6, 0.1, 0.2, 0.1, 0.5).unwrap();
        assert_eq!(t6.kind, OutcomeType::Type6);
    }

    #[test]
    fn all_eight_triples() {
        let mut reachable = 0;
        for bits in 0..8u8 {
            let (a, r, i) = (bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
            match outcome_from_flags(a, r, i) {
                Ok(_) => reachable += 1,
                Err(Error::UnreachableCombination { .. }) => assert!(!a && i),
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(reachable, 6);
    }

    #[test]
    fn threshold_is_inclusive_and_chance_is_strict() {
        let o = classify_outcome(0.7, 0.7, 0.5, 0.1, 0.5, 0.5);
        // auc equal to chance is not significant, icc at threshold is high
        assert!(matches!(o, Err(Error::UnreachableCombination { auc_sig: false, icc_high: true, .. })));
    }

    #[test]
    fn display_names() {
        assert_eq!(OutcomeType::Type4.to_string(), "Type4");
        assert_eq!(serde_json::to_string(&OutcomeType::Type3).unwrap(), "\"TYPE3\"");
    }
}
