use std::fmt;
use std::str::FromStr;

use super::jet::Jet2;
use super::scalar::Scalar;
use crate::error::Error;

/// Hidden-unit nonlinearity.
///
/// ReLU uses the subgradient convention `relu'(0) = 0` and `relu'' = 0`
/// everywhere, so second input derivatives through ReLU layers vanish
/// almost everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    /// `σ(a)` and its first three derivatives.
    #[inline]
    pub fn derivatives(self, a: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = a.tanh();
                let s1 = 1.0 - t * t;
                let s2 = -2.0 * t * s1;
                let s3 = -2.0 * s1 * s1 + 4.0 * t * t * s1;
                [t, s1, s2, s3]
            }
            Activation::Relu => {
                if a > 0.0 {
                    [a, 1.0, 0.0, 0.0]
                } else {
                    [0.0, 0.0, 0.0, 0.0]
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-a).exp());
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
                [s, s1, s2, s3]
            }
        }
    }

    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => a.tanh(),
            Activation::Relu => {
                if a > 0.0 {
                    a
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-a).exp()),
        }
    }

    /// `(σ, σ', σ'')` expressed in `S`, so tape variables keep their
    /// dependence on the pre-activation.
    pub fn parts<S: Scalar>(self, a: S) -> (S, S, S) {
        match self {
            Activation::Tanh => {
                let t = a.tanh();
                let s1 = S::constant(1.0) - t * t;
                let s2 = t * s1 * -2.0;
                (t, s1, s2)
            }
            Activation::Relu => {
                if a.value() > 0.0 {
                    (a, S::constant(1.0), S::zero())
                } else {
                    (S::zero(), S::zero(), S::zero())
                }
            }
            Activation::Sigmoid => {
                let s = ((-a).exp() + 1.0).recip();
                let s1 = s * (S::constant(1.0) - s);
                let s2 = s1 * (s * -2.0 + 1.0);
                (s, s1, s2)
            }
        }
    }

    pub fn apply_jet<S: Scalar>(self, jet: Jet2<S>) -> Jet2<S> {
        let (f0, f1, f2) = self.parts(jet.value);
        jet.chain(f0, f1, f2)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}
