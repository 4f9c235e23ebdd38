//! Differentiable scalar activations, applied coordinate-wise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::Vector;
use crate::error::{Error, Result};

/// One activation per layer. The tag is the serialized name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
    Softplus,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Identity,
        Activation::Softplus,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
            Activation::Softplus => "softplus",
        }
    }

    pub fn value(self, z: f64) -> Result<f64> {
        check(z)?;
        Ok(match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
            // ln(1 + e^z) without overflow for large z
            Activation::Softplus => {
                if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                }
            }
        })
    }

    pub fn deriv(self, z: f64) -> Result<f64> {
        check(z)?;
        Ok(match self {
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
            Activation::Softplus => sigmoid(z),
        })
    }

    pub fn map(self, z: &[f64]) -> Result<Vector> {
        let out = z
            .iter()
            .map(|&v| self.value(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector::from_raw(out))
    }

    pub fn deriv_map(self, z: &[f64]) -> Result<Vector> {
        let out = z
            .iter()
            .map(|&v| self.deriv(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector::from_raw(out))
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            context: "activation",
            value: z,
        })
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown activation tag {s:?}")))
    }
}
