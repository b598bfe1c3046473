// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ChenWang,
    TwoSidedSum,
    Subbotin,
    OneIntertwining,
    Milman,
    BrascampLieb,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ChenWang,
        Family::TwoSidedSum,
        Family::Subbotin,
        Family::OneIntertwining,
        Family::Milman,
        Family::BrascampLieb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ChenWang => "chen_wang",
            Family::TwoSidedSum => "two_sided_sum",
            Family::Subbotin => "subbotin",
            Family::OneIntertwining => "one_intertwining",
            Family::Milman => "milman",
            Family::BrascampLieb => "brascamp_lieb",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bound family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Valid,
    Unreliable,
    Inapplicable,
}

/// One bound on `λ_n(−L)` (or on the gap `λ_2 − λ_1` for Brascamp–Lieb),
/// with the oracle value when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: Family,
    pub params: BTreeMap<String, Value>,
    pub n: usize,
    #[serde(with = "extended")]
    pub lower: Option<f64>,
    #[serde(with = "extended")]
    pub upper: Option<f64>,
    #[serde(with = "extended")]
    pub oracle: Option<f64>,
    pub certificate: BTreeMap<String, Value>,
    pub status: Status,
}

impl BoundReport {
    pub fn new(family: Family, n: usize) -> Self {
        BoundReport {
            family,
            params: BTreeMap::new(),
            n,
            lower: None,
            upper: None,
            oracle: None,
            certificate: BTreeMap::new(),
            status: Status::Valid,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn certify(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.certificate.insert(key.to_string(), value.into());
        self
    }

    /// Turns a failed computation into an `inapplicable` or `unreliable`
    /// report. Numerical failures are passed through.
    pub fn from_error(family: Family, n: usize, err: Error) -> Result<Self> {
        let status = match &err {
            Error::Unreliable(_) => Status::Unreliable,
            e if e.is_precondition() => Status::Inapplicable,
            Error::DerivativeUnavailable { .. } => Status::Inapplicable,
            _ => return Err(err),
        };
        let mut r = BoundReport::new(family, n);
        r.status = status;
        r.certificate.insert("reason".into(), Value::String(err.to_string()));
        Ok(r)
    }

    /// `lower ≤ oracle + tol` and `oracle ≤ upper + tol`, vacuous without an
    /// oracle value or for non-valid reports.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        match (self.status, self.oracle) {
            (Status::Valid, Some(o)) => {
                self.lower.is_none_or(|l| l <= o + tol) && self.upper.is_none_or(|u| o <= u + tol)
            }
            _ => true,
        }
    }
}

/// A JSON number, with non-finite values as the strings `inf`, `-inf`, `nan`.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub(crate) mod extended {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            Some(x) if x.is_nan() => s.serialize_str("nan"),
            Some(x) if *x > 0.0 => s.serialize_str("inf"),
            Some(_) => s.serialize_str("-inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Value::deserialize(d)? {
            Value::Null => Ok(None),
            Value::Number(n) => n.as_f64().map(Some).ok_or_else(|| D::Error::custom("bad number")),
            Value::String(s) => match s.as_str() {
                "inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                "nan" => Ok(Some(f64::NAN)),
                other => Err(D::Error::custom(format!("unexpected `{other}`"))),
            },
            other => Err(D::Error::custom(format!("unexpected {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_upper_is_a_string() {
        let mut r = BoundReport::new(Family::TwoSidedSum, 4).param("beta", 1.2);
        r.lower = Some(1.0 / 3.0);
        r.upper = Some(f64::INFINITY);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""upper":"inf""#), "{text}");
        assert!(text.contains(r#""status":"valid""#));
        let back: BoundReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.lower.unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn error_statuses() {
        let r = BoundReport::from_error(Family::Milman, 2, Error::Inapplicable("inf V'' < 0".into())).unwrap();
        assert_eq!(r.status, Status::Inapplicable);
        let r = BoundReport::from_error(Family::ChenWang, 1, Error::Unreliable("edge".into())).unwrap();
        assert_eq!(r.status, Status::Unreliable);
        assert!(BoundReport::from_error(Family::ChenWang, 1, Error::NoConvergence("x".into())).is_err());
    }

    #[test]
    fn sandwich() {
        let mut r = BoundReport::new(Family::Milman, 3);
        r.lower = Some(2.7);
        r.upper = Some(3.3);
        r.oracle = Some(3.0);
        assert!(r.sandwich_holds(0.0));
        r.oracle = Some(3.4);
        assert!(!r.sandwich_holds(1e-6));
        assert_eq!("two_sided_sum".parse::<Family>().unwrap(), Family::TwoSidedSum);
    }
}
