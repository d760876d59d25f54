//! Activation functions with closed-form first and second derivatives.
//!
//! Piecewise functions switch at `z = 0`; the breakpoint itself belongs to the
//! `z >= 0` branch so every evaluation is total and deterministic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Slope of the negative branch used by [`Activation::leaky_relu`].
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Activation {
    Linear,
    LeakyRelu { slope: f64 },
    /// `max(0, z)`.
    ReluZ,
    /// `0.5 z^2 + z` for `z >= 0`, zero otherwise.
    ReluHalfZ2Z,
    /// `z^2` for `z >= 0`, zero otherwise.
    ReluZ2,
    /// `e^z - 1` everywhere.
    EluE,
    /// Classic ELU: `e^z - 1` for `z < 0`, `z` otherwise.
    EluZ,
    EluHalfZ2Z,
    EluZ2,
    EluZ4,
    EluZ4HalfZ2Z,
}

/// Value and the first two derivatives of an activation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationValue {
    pub a: f64,
    pub da: f64,
    pub d2a: f64,
}

impl ActivationValue {
    #[inline]
    fn new(a: f64, da: f64, d2a: f64) -> Self {
        Self { a, da, d2a }
    }
}

impl Activation {
    /// Every activation of the second-order vanishing-gradient study, in table order.
    pub const STUDY_SET: [Activation; 9] = [
        Activation::ReluZ,
        Activation::ReluHalfZ2Z,
        Activation::ReluZ2,
        Activation::EluE,
        Activation::EluZ,
        Activation::EluHalfZ2Z,
        Activation::EluZ2,
        Activation::EluZ4,
        Activation::EluZ4HalfZ2Z,
    ];

    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    /// Returns `(A(z), A'(z), A''(z))`.
    #[inline]
    pub fn eval(self, z: f64) -> ActivationValue {
        use Activation::*;
        let neg = z < 0.0;
        match self {
            Linear => ActivationValue::new(z, 1.0, 0.0),
            LeakyRelu { slope } => {
                if neg {
                    ActivationValue::new(slope * z, slope, 0.0)
                } else {
                    ActivationValue::new(z, 1.0, 0.0)
                }
            }
            ReluZ | ReluHalfZ2Z | ReluZ2 if neg => ActivationValue::new(0.0, 0.0, 0.0),
            ReluZ => ActivationValue::new(z, 1.0, 0.0),
            ReluHalfZ2Z => ActivationValue::new(0.5 * z * z + z, z + 1.0, 1.0),
            ReluZ2 => ActivationValue::new(z * z, 2.0 * z, 2.0),
            EluE => {
                let e = z.exp();
                ActivationValue::new(e - 1.0, e, e)
            }
            EluZ | EluHalfZ2Z | EluZ2 | EluZ4 | EluZ4HalfZ2Z if neg => {
                let e = z.exp();
                ActivationValue::new(e - 1.0, e, e)
            }
            EluZ => ActivationValue::new(z, 1.0, 0.0),
            EluHalfZ2Z => ActivationValue::new(0.5 * z * z + z, z + 1.0, 1.0),
            EluZ2 => ActivationValue::new(z * z, 2.0 * z, 2.0),
            EluZ4 => {
                let z2 = z * z;
                ActivationValue::new(z2 * z2, 4.0 * z2 * z, 12.0 * z2)
            }
            EluZ4HalfZ2Z => {
                let z2 = z * z;
                ActivationValue::new(
                    z2 * z2 + 0.5 * z2 + z,
                    4.0 * z2 * z + z + 1.0,
                    12.0 * z2 + 1.0,
                )
            }
        }
    }

    pub fn tag(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Activation::*;
        match self {
            Linear => f.write_str("linear"),
            LeakyRelu { slope } => write!(f, "leaky_relu({slope})"),
            ReluZ => f.write_str("relu_z"),
            ReluHalfZ2Z => f.write_str("relu_halfz2_z"),
            ReluZ2 => f.write_str("relu_z2"),
            EluE => f.write_str("elu_e"),
            EluZ => f.write_str("elu_z"),
            EluHalfZ2Z => f.write_str("elu_halfz2_z"),
            EluZ2 => f.write_str("elu_z2"),
            EluZ4 => f.write_str("elu_z4"),
            EluZ4HalfZ2Z => f.write_str("elu_z4_halfz2_z"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use Activation::*;
        let s = s.trim();
        let kind = match s {
            "linear" => Linear,
            "leaky_relu" => Activation::leaky_relu(),
            "relu_z" => ReluZ,
            "relu_halfz2_z" => ReluHalfZ2Z,
            "relu_z2" => ReluZ2,
            "elu_e" => EluE,
            "elu_z" => EluZ,
            "elu_halfz2_z" => EluHalfZ2Z,
            "elu_z2" => EluZ2,
            "elu_z4" => EluZ4,
            "elu_z4_halfz2_z" => EluZ4HalfZ2Z,
            _ => {
                let slope = s
                    .strip_prefix("leaky_relu(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown activation `{s}`")))?;
                if !slope.is_finite() {
                    return Err(Error::Config(format!("non-finite leaky slope in `{s}`")));
                }
                LeakyRelu { slope }
            }
        };
        Ok(kind)
    }
}

impl TryFrom<String> for Activation {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Activation> for String {
    fn from(value: Activation) -> Self {
        value.to_string()
    }
}
