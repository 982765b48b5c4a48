//! JSON model documents.
//!
//! ```json
//! {
//!   "letters": ["a", "b", "c"],
//!   "independence": [["a", "b"]],
//!   "states": ["0", "1", "2"],
//!   "action": {"0": {"a": "1", "b": "2"}, "1": {"a": "0", "b": "2"}, "2": {"a": "2", "b": "2", "c": "0"}},
//!   "weights": {"0": {"a": "1/2", "b": 2}}
//! }
//! ```
//!
//! Missing action entries are undefined. Missing weights default to 1.
//! Weights may be JSON numbers or strings holding integers, decimals or
//! fractions, and are always read as exact rationals.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Rational;
use crate::system::{ConcurrentSystem, SystemError};
use crate::trace::{Alphabet, TraceError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("ParseError: {0}")]
    Parse(String),
    #[error(transparent)]
    System(#[from] SystemError),
}

impl From<TraceError> for ModelError {
    fn from(e: TraceError) -> Self {
        ModelError::System(SystemError::Trace(e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub letters: Vec<String>,
    #[serde(default)]
    pub independence: Vec<Vec<String>>,
    pub states: Vec<String>,
    pub action: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, BTreeMap<String, WeightValue>>>,
}

/// Alphabet part of a model document, as used for the doubled construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphabetDocument {
    pub letters: Vec<String>,
    #[serde(default)]
    pub independence: Vec<Vec<String>>,
}

fn parse_err(msg: impl Into<String>) -> ModelError {
    ModelError::Parse(msg.into())
}

/// `"3"`, `"-0.25"`, `"1.5e-3"` or `"2/3"` as an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        return (!d.is_zero()).then(|| Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.contains(['+', '-']) || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let digits = if digits == "-" || digits == "+" { return None } else { digits };
    let num = BigInt::from_str(&digits).ok()?;
    let scale = exp - frac.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    let factor = if scale >= 0 {
        Pow::pow(&ten, scale as u32)
    } else {
        Rational::one() / Pow::pow(&ten, scale.unsigned_abs())
    };
    Some(Rational::from_integer(num) * factor)
}

fn weight_value(w: &WeightValue) -> Option<Rational> {
    match w {
        WeightValue::Number(n) => parse_rational(&n.to_string()),
        WeightValue::Text(s) => parse_rational(s),
    }
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn alphabet(&self) -> Result<Alphabet, ModelError> {
        alphabet_from(&self.letters, &self.independence)
    }

    pub fn to_system(&self) -> Result<ConcurrentSystem, ModelError> {
        let alphabet = self.alphabet()?;
        let state_of = |name: &str| {
            self.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ModelError::System(SystemError::UnknownState(name.to_string())))
        };
        let letter_of = |name: &str| {
            alphabet
                .index_of(name)
                .ok_or_else(|| ModelError::from(TraceError::UnknownLetter(name.to_string())))
        };
        let mut action = vec![vec![None; alphabet.len()]; self.states.len()];
        for (from, row) in &self.action {
            let alpha = state_of(from)?;
            for (letter, to) in row {
                action[alpha][letter_of(letter)?] = Some(state_of(to)?);
            }
        }
        let weights = match &self.weights {
            None => None,
            Some(table) => {
                let mut w: Vec<Vec<Option<Rational>>> = action
                    .iter()
                    .map(|row| row.iter().map(|t| t.map(|_| Rational::one())).collect())
                    .collect();
                for (state, row) in table {
                    let alpha = state_of(state)?;
                    for (letter, value) in row {
                        let a = letter_of(letter)?;
                        let v = weight_value(value)
                            .ok_or_else(|| parse_err(format!("weight {state:?}/{letter:?} is not a number")))?;
                        if action[alpha][a].is_none() {
                            return Err(SystemError::WeightSupportMismatch {
                                state: state.clone(),
                                letter: letter.clone(),
                            }
                            .into());
                        }
                        w[alpha][a] = Some(v);
                    }
                }
                Some(w)
            }
        };
        Ok(ConcurrentSystem::new(alphabet, self.states.clone(), action, weights, true)?)
    }

    pub fn from_system(sys: &ConcurrentSystem) -> Self {
        let alphabet = sys.alphabet();
        let letters: Vec<String> = alphabet.letters().to_vec();
        let independence = alphabet
            .independence_pairs()
            .into_iter()
            .map(|(a, b)| vec![letters[a].clone(), letters[b].clone()])
            .collect();
        let mut action = BTreeMap::new();
        let mut weights = BTreeMap::new();
        let mut all_one = true;
        for (alpha, row) in sys.action_table().iter().enumerate() {
            let mut arow = BTreeMap::new();
            let mut wrow = BTreeMap::new();
            for (a, t) in row.iter().enumerate() {
                if let Some(t) = t {
                    arow.insert(letters[a].clone(), sys.states()[*t].clone());
                    let w = sys.weights()[alpha][a].clone().expect("defined");
                    all_one &= w.is_one();
                    let value = if w.is_integer() {
                        WeightValue::Number(
                            w.to_integer().to_string().parse().expect("integer literal"),
                        )
                    } else {
                        WeightValue::Text(w.to_string())
                    };
                    wrow.insert(letters[a].clone(), value);
                }
            }
            action.insert(sys.states()[alpha].clone(), arow);
            weights.insert(sys.states()[alpha].clone(), wrow);
        }
        ModelDocument {
            letters,
            independence,
            states: sys.states().to_vec(),
            action,
            weights: (!all_one).then_some(weights),
        }
    }
}

impl AlphabetDocument {
    pub fn from_json(text: &str) -> Result<Alphabet, ModelError> {
        let doc: AlphabetDocument = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        alphabet_from(&doc.letters, &doc.independence)
    }
}

fn alphabet_from(letters: &[String], independence: &[Vec<String>]) -> Result<Alphabet, ModelError> {
    let pairs = independence
        .iter()
        .map(|p| match p.as_slice() {
            [a, b] => Ok((a.clone(), b.clone())),
            _ => Err(parse_err(format!("independence entry {p:?} is not a pair"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Alphabet::new(letters, &pairs)?)
}
