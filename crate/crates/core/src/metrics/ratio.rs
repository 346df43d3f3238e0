use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// An exact proportion. A zero denominator means "undefined" and is never
/// reported as 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub const UNDEFINED: Self = Self { numerator: 0, denominator: 0 };

    pub fn new(numerator: u64, denominator: u64) -> Self {
        debug_assert!(numerator <= denominator || denominator == 0);
        Self { numerator, denominator }
    }

    pub fn is_defined(&self) -> bool {
        self.denominator != 0
    }

    pub fn value(&self) -> Option<f64> {
        self.is_defined().then(|| self.numerator as f64 / self.denominator as f64)
    }

    /// Harmonic mean of `tp/predicted` and `tp/gold`, kept exact as
    /// `2tp / (predicted + gold)`. Undefined unless both inputs are defined.
    pub fn f1(tp: u64, predicted: u64, gold: u64) -> Self {
        if predicted == 0 || gold == 0 {
            Self::UNDEFINED
        } else {
            Self::new(2 * tp, predicted + gold)
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{:.2}% ({}/{})", v * 100.0, self.numerator, self.denominator),
            None => f.write_str("undefined (0 denominator)"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Ratio", 3)?;
        s.serialize_field("numerator", &self.numerator)?;
        s.serialize_field("denominator", &self.denominator)?;
        s.serialize_field("value", &self.value())?;
        s.end()
    }
}

/// Precision, recall and F1 from one set of counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Prf {
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

impl Prf {
    pub fn from_counts(tp: u64, predicted: u64, gold: u64) -> Self {
        Self { precision: Ratio::new(tp, predicted), recall: Ratio::new(tp, gold), f1: Ratio::f1(tp, predicted, gold) }
    }
}
